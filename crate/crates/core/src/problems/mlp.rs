//! Fully-connected network with analytic first- and second-order derivatives.
//!
//! Two independent curvature routes are implemented on purpose:
//! `hess_vec` propagates a tangent through the forward pass and then through
//! the backward pass (reverse-over-forward), while `quad_form` carries
//! (value, first, second) directional-derivative triples through a single
//! forward sweep. They must agree to rounding; tests rely on that.
//!
//! ReLU is treated as second-derivative zero everywhere (the kink's Dirac
//! term is dropped, matching forward-over-reverse autodiff).

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

#[allow(unused_imports)]
use num_traits::Float;

use super::data::Dataset;
use crate::objective::{Batch, Objective};
use crate::rngutil;
use crate::vector::ParamVec;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Activation {
    Relu,
    Tanh,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LossKind {
    Mse,
    CrossEntropy,
}

/// Parameter layout: per layer, `W` (out x in, row-major) then `b` (out).
#[derive(Debug, Clone)]
pub struct MlpProblem {
    sizes: Vec<usize>,
    activation: Activation,
    loss: LossKind,
    weight_decay: f64,
    data: Dataset,
    offsets: Vec<(usize, usize)>,
    dim: usize,
}

impl MlpProblem {
    /// `hidden` lists hidden-layer widths; input/output widths come from the
    /// dataset (features / classes).
    pub fn new(
        data: Dataset,
        hidden: &[usize],
        activation: Activation,
        loss: LossKind,
        weight_decay: f64,
    ) -> Self {
        assert!(weight_decay >= 0.0);
        let mut sizes = Vec::with_capacity(hidden.len() + 2);
        sizes.push(data.dim());
        sizes.extend_from_slice(hidden);
        sizes.push(data.num_classes());
        assert!(sizes.iter().all(|&s| s >= 1), "layer widths must be positive");
        let mut offsets = Vec::with_capacity(sizes.len() - 1);
        let mut off = 0;
        for l in 0..sizes.len() - 1 {
            let (n_in, n_out) = (sizes[l], sizes[l + 1]);
            offsets.push((off, off + n_in * n_out));
            off += (n_in + 1) * n_out;
        }
        MlpProblem { sizes, activation, loss, weight_decay, data, offsets, dim: off }
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    pub fn sizes(&self) -> &[usize] {
        &self.sizes
    }

    fn layers(&self) -> usize {
        self.sizes.len() - 1
    }

    /// Seeded init: weights uniform in `[-1/sqrt(fan_in), 1/sqrt(fan_in)]`,
    /// biases zero.
    pub fn init_params(&self, seed: u64) -> ParamVec {
        let mut rng = rngutil::rng_from_seed(seed);
        let mut p = vec![0.0; self.dim];
        for l in 0..self.layers() {
            let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
            let (w_off, _) = self.offsets[l];
            let scale = 1.0 / (n_in as f64).sqrt();
            for v in &mut p[w_off..w_off + n_in * n_out] {
                *v = scale * (2.0 * rng.gen::<f64>() - 1.0);
            }
        }
        ParamVec::new(p)
    }

    fn w<'a>(&self, params: &'a [f64], l: usize) -> &'a [f64] {
        let (w_off, b_off) = self.offsets[l];
        &params[w_off..b_off]
    }

    fn b<'a>(&self, params: &'a [f64], l: usize) -> &'a [f64] {
        let (_, b_off) = self.offsets[l];
        &params[b_off..b_off + self.sizes[l + 1]]
    }

    fn w_mut<'a>(&self, params: &'a mut [f64], l: usize) -> &'a mut [f64] {
        let (w_off, b_off) = self.offsets[l];
        &mut params[w_off..b_off]
    }

    fn b_mut<'a>(&self, params: &'a mut [f64], l: usize) -> &'a mut [f64] {
        let (_, b_off) = self.offsets[l];
        &mut params[b_off..b_off + self.sizes[l + 1]]
    }

    /// phi'(a) computed from the stored post-activation h = phi(a).
    fn dphi(&self, h: f64) -> f64 {
        match self.activation {
            Activation::Relu => {
                if h > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Tanh => 1.0 - h * h,
        }
    }

    /// phi''(a) from the stored post-activation.
    fn ddphi(&self, h: f64) -> f64 {
        match self.activation {
            Activation::Relu => 0.0,
            Activation::Tanh => -2.0 * h * (1.0 - h * h),
        }
    }

    fn phi(&self, a: f64) -> f64 {
        match self.activation {
            Activation::Relu => a.max(0.0),
            Activation::Tanh => a.tanh(),
        }
    }

    /// Per-sample loss, residual delta = dl/dz, and the loss value.
    fn loss_and_delta(&self, z: &mut Vec<f64>, label: usize) -> f64 {
        match self.loss {
            LossKind::Mse => {
                z[label] -= 1.0; // z - onehot
                0.5 * z.iter().map(|r| r * r).sum::<f64>()
            }
            LossKind::CrossEntropy => {
                let lse = softmax_inplace(z);
                let _ = lse;
                let loss = -z[label].ln();
                z[label] -= 1.0; // p - onehot
                loss
            }
        }
    }

    fn for_each_index<'a>(&'a self, batch: Batch<'a>) -> BatchIter<'a> {
        match batch {
            Some(idx) => BatchIter::Slice(idx.iter()),
            None => BatchIter::Range(0..self.data.len()),
        }
    }

    /// Smallest |pre-activation| over all hidden units and samples.
    ///
    /// Finite-difference oracles are only valid when no ReLU kink lies inside
    /// the probing window; tests use this margin to pick safe evaluation
    /// points.
    pub fn activation_margin(&self, w: &ParamVec, batch: Batch) -> f64 {
        let params = w.as_slice();
        let l_count = self.layers();
        let width = *self.sizes.iter().max().unwrap();
        let mut h = vec![0.0; width];
        let mut a = vec![0.0; width];
        let mut margin = f64::INFINITY;
        for i in self.for_each_index(batch) {
            let x = self.data.row(i);
            h[..x.len()].copy_from_slice(x);
            for l in 0..l_count {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                gemv(self.w(params, l), n_out, n_in, &h[..n_in], &mut a[..n_out], false);
                for (av, bv) in a[..n_out].iter_mut().zip(self.b(params, l)) {
                    *av += bv;
                }
                if l + 1 < l_count {
                    for c in 0..n_out {
                        margin = margin.min(a[c].abs());
                        h[c] = self.phi(a[c]);
                    }
                }
            }
        }
        margin
    }
}

enum BatchIter<'a> {
    Slice(core::slice::Iter<'a, usize>),
    Range(core::ops::Range<usize>),
}

impl<'a> Iterator for BatchIter<'a> {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        match self {
            BatchIter::Slice(it) => it.next().copied(),
            BatchIter::Range(r) => r.next(),
        }
    }
}

fn softmax_inplace(z: &mut [f64]) -> f64 {
    let m = z.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let sum: f64 = z.iter().map(|&v| (v - m).exp()).sum();
    let lse = m + sum.ln();
    for v in z.iter_mut() {
        *v = (*v - lse).exp();
    }
    lse
}

fn gemv(w: &[f64], n_out: usize, n_in: usize, x: &[f64], out: &mut [f64], accumulate: bool) {
    debug_assert_eq!(w.len(), n_out * n_in);
    for c in 0..n_out {
        let row = &w[c * n_in..(c + 1) * n_in];
        let s: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
        if accumulate {
            out[c] += s;
        } else {
            out[c] = s;
        }
    }
}

fn gemv_t(w: &[f64], n_out: usize, n_in: usize, delta: &[f64], out: &mut [f64], accumulate: bool) {
    if !accumulate {
        out.iter_mut().for_each(|v| *v = 0.0);
    }
    for c in 0..n_out {
        let row = &w[c * n_in..(c + 1) * n_in];
        let d = delta[c];
        for (o, wv) in out.iter_mut().zip(row) {
            *o += d * wv;
        }
    }
}

fn outer_acc(gw: &mut [f64], delta: &[f64], x: &[f64]) {
    let n_in = x.len();
    for (c, &d) in delta.iter().enumerate() {
        let row = &mut gw[c * n_in..(c + 1) * n_in];
        for (g, xv) in row.iter_mut().zip(x) {
            *g += d * xv;
        }
    }
}

impl Objective for MlpProblem {
    fn dim(&self) -> usize {
        self.dim
    }

    fn batch_capable(&self) -> bool {
        true
    }

    fn num_samples(&self) -> usize {
        self.data.len()
    }

    fn value(&self, w: &ParamVec, batch: Batch) -> f64 {
        self.value_grad_impl(w, batch, false).0
    }

    fn gradient(&self, w: &ParamVec, batch: Batch) -> ParamVec {
        self.value_grad_impl(w, batch, true).1
    }

    fn value_grad(&self, w: &ParamVec, batch: Batch) -> (f64, ParamVec) {
        self.value_grad_impl(w, batch, true)
    }

    fn quad_form(&self, w: &ParamVec, u: &ParamVec, batch: Batch) -> f64 {
        assert_eq!(w.len(), self.dim);
        assert_eq!(u.len(), self.dim);
        let params = w.as_slice();
        let dir = u.as_slice();
        let l_count = self.layers();
        let width = *self.sizes.iter().max().unwrap();
        let mut h0 = vec![0.0; width];
        let mut h1 = vec![0.0; width];
        let mut h2 = vec![0.0; width];
        let mut a0 = vec![0.0; width];
        let mut a1 = vec![0.0; width];
        let mut a2 = vec![0.0; width];
        let mut p_buf = vec![0.0; self.sizes[l_count]];
        let mut total = 0.0;
        let mut count = 0usize;
        for i in self.for_each_index(batch) {
            let x = self.data.row(i);
            h0[..x.len()].copy_from_slice(x);
            h1[..x.len()].iter_mut().for_each(|v| *v = 0.0);
            h2[..x.len()].iter_mut().for_each(|v| *v = 0.0);
            for l in 0..l_count {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let wl = self.w(params, l);
                let bl = self.b(params, l);
                let vl = self.w(dir, l);
                let cl = self.b(dir, l);
                // a0 = W h0 + b ; a1 = V h0 + W h1 + c ; a2 = 2 V h1 + W h2
                gemv(wl, n_out, n_in, &h0[..n_in], &mut a0[..n_out], false);
                for (a, b) in a0[..n_out].iter_mut().zip(bl) {
                    *a += b;
                }
                gemv(vl, n_out, n_in, &h0[..n_in], &mut a1[..n_out], false);
                gemv(wl, n_out, n_in, &h1[..n_in], &mut a1[..n_out], true);
                for (a, c) in a1[..n_out].iter_mut().zip(cl) {
                    *a += c;
                }
                gemv(vl, n_out, n_in, &h1[..n_in], &mut a2[..n_out], false);
                a2[..n_out].iter_mut().for_each(|v| *v *= 2.0);
                gemv(wl, n_out, n_in, &h2[..n_in], &mut a2[..n_out], true);
                if l + 1 < l_count {
                    for c in 0..n_out {
                        let h = self.phi(a0[c]);
                        let d1 = self.dphi(h);
                        let d2 = self.ddphi(h);
                        h0[c] = h;
                        h2[c] = d2 * a1[c] * a1[c] + d1 * a2[c];
                        h1[c] = d1 * a1[c];
                    }
                } else {
                    h0[..n_out].copy_from_slice(&a0[..n_out]);
                    h1[..n_out].copy_from_slice(&a1[..n_out]);
                    h2[..n_out].copy_from_slice(&a2[..n_out]);
                }
            }
            let k = self.sizes[l_count];
            total += match self.loss {
                LossKind::Mse => {
                    // f'' along the direction: |z1|^2 + (z0 - t) . z2
                    let mut s: f64 = h1[..k].iter().map(|v| v * v).sum();
                    for c in 0..k {
                        let r = h0[c] - if c == self.data.label(i) { 1.0 } else { 0.0 };
                        s += r * h2[c];
                    }
                    s
                }
                LossKind::CrossEntropy => {
                    p_buf[..k].copy_from_slice(&h0[..k]);
                    let p = &mut p_buf[..k];
                    softmax_inplace(p);
                    let mean: f64 = p.iter().zip(&h1[..k]).map(|(p, z)| p * z).sum();
                    let second: f64 = p.iter().zip(&h1[..k]).map(|(p, z)| p * z * z).sum();
                    let mut s = second - mean * mean;
                    for c in 0..k {
                        let r = p[c] - if c == self.data.label(i) { 1.0 } else { 0.0 };
                        s += r * h2[c];
                    }
                    s
                }
            };
            count += 1;
        }
        total / count as f64 + self.weight_decay * u.norm_sq()
    }

    fn hess_vec(&self, w: &ParamVec, v: &ParamVec, batch: Batch) -> ParamVec {
        assert_eq!(w.len(), self.dim);
        assert_eq!(v.len(), self.dim);
        let params = w.as_slice();
        let dir = v.as_slice();
        let l_count = self.layers();
        let mut out = ParamVec::zeros(self.dim);
        // Per-layer stores (input h_l, tangent rh_l, pre-activation tangent ra_l).
        let mut hs: Vec<Vec<f64>> = (0..l_count).map(|l| vec![0.0; self.sizes[l]]).collect();
        let mut rhs: Vec<Vec<f64>> = (0..l_count).map(|l| vec![0.0; self.sizes[l]]).collect();
        let mut ras: Vec<Vec<f64>> = (0..l_count).map(|l| vec![0.0; self.sizes[l + 1]]).collect();
        let mut z = vec![0.0; self.sizes[l_count]];
        let mut p_buf = vec![0.0; self.sizes[l_count]];
        let width = *self.sizes.iter().max().unwrap();
        let mut delta = vec![0.0; width];
        let mut rdelta = vec![0.0; width];
        let mut s_buf = vec![0.0; width];
        let mut rs_buf = vec![0.0; width];
        let mut count = 0usize;
        for i in self.for_each_index(batch) {
            let x = self.data.row(i);
            hs[0].copy_from_slice(x);
            rhs[0].iter_mut().for_each(|v| *v = 0.0);
            // Forward + tangent forward.
            for l in 0..l_count {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let wl = self.w(params, l);
                let bl = self.b(params, l);
                let vl = self.w(dir, l);
                let cl = self.b(dir, l);
                let (head, tail) = if l + 1 < l_count {
                    let (a, b) = hs.split_at_mut(l + 1);
                    (&a[l], &mut b[0])
                } else {
                    (&hs[l], &mut z)
                };
                gemv(vl, n_out, n_in, head, &mut ras[l], false);
                gemv(wl, n_out, n_in, &rhs[l], &mut ras[l], true);
                for (r, c) in ras[l].iter_mut().zip(cl) {
                    *r += c;
                }
                gemv(wl, n_out, n_in, head, tail, false);
                for (t, b) in tail.iter_mut().zip(bl) {
                    *t += b;
                }
                if l + 1 < l_count {
                    for c in 0..n_out {
                        tail[c] = self.phi(tail[c]);
                    }
                    let (ra, rh_next) = (&ras[l], &mut rhs[l + 1]);
                    for c in 0..n_out {
                        rh_next[c] = self.dphi(tail[c]) * ra[c];
                    }
                }
            }
            // Loss head: delta and its tangent.
            let k = self.sizes[l_count];
            let label = self.data.label(i);
            match self.loss {
                LossKind::Mse => {
                    for c in 0..k {
                        delta[c] = z[c] - if c == label { 1.0 } else { 0.0 };
                        rdelta[c] = ras[l_count - 1][c];
                    }
                }
                LossKind::CrossEntropy => {
                    p_buf.copy_from_slice(&z);
                    softmax_inplace(&mut p_buf);
                    let rz = &ras[l_count - 1];
                    let mean: f64 = p_buf.iter().zip(rz.iter()).map(|(p, r)| p * r).sum();
                    for c in 0..k {
                        delta[c] = p_buf[c] - if c == label { 1.0 } else { 0.0 };
                        rdelta[c] = p_buf[c] * (rz[c] - mean);
                    }
                }
            }
            // Backward + tangent backward.
            for l in (0..l_count).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let wl = self.w(params, l);
                let vl = self.w(dir, l);
                {
                    let os = out.as_mut_slice();
                    let gw = self.w_mut(os, l);
                    outer_acc(gw, &rdelta[..n_out], &hs[l]);
                    outer_acc(gw, &delta[..n_out], &rhs[l]);
                }
                {
                    let os = out.as_mut_slice();
                    let gb = self.b_mut(os, l);
                    for (g, r) in gb.iter_mut().zip(&rdelta[..n_out]) {
                        *g += r;
                    }
                }
                if l > 0 {
                    gemv_t(wl, n_out, n_in, &delta[..n_out], &mut s_buf[..n_in], false);
                    gemv_t(vl, n_out, n_in, &delta[..n_out], &mut rs_buf[..n_in], false);
                    gemv_t(wl, n_out, n_in, &rdelta[..n_out], &mut rs_buf[..n_in], true);
                    let ra_prev = &ras[l - 1];
                    let h = &hs[l];
                    for c in 0..n_in {
                        let d1 = self.dphi(h[c]);
                        let d2 = self.ddphi(h[c]);
                        delta[c] = s_buf[c] * d1;
                        rdelta[c] = rs_buf[c] * d1 + s_buf[c] * d2 * ra_prev[c];
                    }
                }
            }
            count += 1;
        }
        out.scale(1.0 / count as f64);
        out.add_scaled(self.weight_decay, v);
        out
    }
}

impl MlpProblem {
    fn value_grad_impl(&self, w: &ParamVec, batch: Batch, want_grad: bool) -> (f64, ParamVec) {
        assert_eq!(w.len(), self.dim);
        let params = w.as_slice();
        let l_count = self.layers();
        let mut out = ParamVec::zeros(if want_grad { self.dim } else { 0 });
        let mut hs: Vec<Vec<f64>> = (0..l_count).map(|l| vec![0.0; self.sizes[l]]).collect();
        let mut z: Vec<f64> = vec![0.0; self.sizes[l_count]];
        let mut zi_buf: Vec<f64> = vec![0.0; self.sizes[l_count]];
        let width = *self.sizes.iter().max().unwrap();
        let mut delta = vec![0.0; width];
        let mut s_buf = vec![0.0; width];
        let mut total = 0.0;
        let mut count = 0usize;
        for i in self.for_each_index(batch) {
            let x = self.data.row(i);
            hs[0].copy_from_slice(x);
            for l in 0..l_count {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let wl = self.w(params, l);
                let bl = self.b(params, l);
                let (head, tail) = if l + 1 < l_count {
                    let (a, b) = hs.split_at_mut(l + 1);
                    (&a[l], &mut b[0])
                } else {
                    (&hs[l], &mut z)
                };
                gemv(wl, n_out, n_in, head, tail, false);
                for (t, b) in tail.iter_mut().zip(bl) {
                    *t += b;
                }
                if l + 1 < l_count {
                    for t in tail.iter_mut() {
                        *t = self.phi(*t);
                    }
                }
            }
            let label = self.data.label(i);
            let k = self.sizes[l_count];
            zi_buf.copy_from_slice(&z);
            total += self.loss_and_delta(&mut zi_buf, label);
            count += 1;
            if !want_grad {
                continue;
            }
            delta[..k].copy_from_slice(&zi_buf);
            for l in (0..l_count).rev() {
                let (n_in, n_out) = (self.sizes[l], self.sizes[l + 1]);
                let wl = self.w(params, l);
                {
                    let os = out.as_mut_slice();
                    let gw = self.w_mut(os, l);
                    outer_acc(gw, &delta[..n_out], &hs[l]);
                }
                {
                    let os = out.as_mut_slice();
                    let gb = self.b_mut(os, l);
                    for (g, d) in gb.iter_mut().zip(&delta[..n_out]) {
                        *g += d;
                    }
                }
                if l > 0 {
                    gemv_t(wl, n_out, n_in, &delta[..n_out], &mut s_buf[..n_in], false);
                    let h = &hs[l];
                    for c in 0..n_in {
                        delta[c] = s_buf[c] * self.dphi(h[c]);
                    }
                }
            }
        }
        let value = total / count as f64 + 0.5 * self.weight_decay * w.norm_sq();
        if want_grad {
            out.scale(1.0 / count as f64);
            out.add_scaled(self.weight_decay, w);
        }
        (value, out)
    }
}
