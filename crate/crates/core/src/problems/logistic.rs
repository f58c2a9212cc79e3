//! Multinomial logistic regression (softmax + cross-entropy) with bias and
//! weight decay. The softmax Hessian is exact here — the model is linear, so
//! the Gauss–Newton form *is* the Hessian.

use alloc::vec;

#[allow(unused_imports)]
use num_traits::Float;

use super::data::Dataset;
use crate::objective::{Batch, Objective};
use crate::vector::ParamVec;

/// Parameter layout: `W` (k x d, row-major) followed by `b` (k).
#[derive(Debug, Clone)]
pub struct LogisticProblem {
    data: Dataset,
    weight_decay: f64,
}

impl LogisticProblem {
    pub fn new(data: Dataset, weight_decay: f64) -> Self {
        assert!(weight_decay >= 0.0);
        LogisticProblem { data, weight_decay }
    }

    pub fn data(&self) -> &Dataset {
        &self.data
    }

    fn k(&self) -> usize {
        self.data.num_classes()
    }

    fn d(&self) -> usize {
        self.data.dim()
    }

    /// Logits `W x + b` for one sample.
    fn logits(&self, w: &ParamVec, x: &[f64], out: &mut [f64]) {
        let (k, d) = (self.k(), self.d());
        let ws = w.as_slice();
        for c in 0..k {
            let row = &ws[c * d..(c + 1) * d];
            out[c] = ws[k * d + c] + row.iter().zip(x).map(|(w, x)| w * x).sum::<f64>();
        }
    }

    fn for_each_index<'a>(&'a self, batch: Batch<'a>) -> impl Iterator<Item = usize> + 'a {
        let n = self.data.len();
        match batch {
            Some(idx) => Either::A(idx.iter().copied()),
            None => Either::B(0..n),
        }
    }
}

enum Either<A, B> {
    A(A),
    B(B),
}

impl<A: Iterator<Item = usize>, B: Iterator<Item = usize>> Iterator for Either<A, B> {
    type Item = usize;
    fn next(&mut self) -> Option<usize> {
        match self {
            Either::A(a) => a.next(),
            Either::B(b) => b.next(),
        }
    }
}

/// Shifted softmax in place; returns `logsumexp(z)`.
fn softmax_inplace(z: &mut [f64]) -> f64 {
    let m = z.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
    let sum: f64 = z.iter().map(|&v| (v - m).exp()).sum();
    let lse = m + sum.ln();
    for v in z.iter_mut() {
        *v = (*v - lse).exp();
    }
    lse
}

impl Objective for LogisticProblem {
    fn dim(&self) -> usize {
        self.k() * self.d() + self.k()
    }

    fn batch_capable(&self) -> bool {
        true
    }

    fn num_samples(&self) -> usize {
        self.data.len()
    }

    fn value(&self, w: &ParamVec, batch: Batch) -> f64 {
        let k = self.k();
        let mut z = vec![0.0; k];
        let mut total = 0.0;
        let mut count = 0usize;
        for i in self.for_each_index(batch) {
            self.logits(w, self.data.row(i), &mut z);
            let lse = softmax_inplace(&mut z);
            // loss = lse - z_y; recover z_y from p_y = exp(z_y - lse).
            total += -z[self.data.label(i)].ln();
            let _ = lse;
            count += 1;
        }
        total / count as f64 + 0.5 * self.weight_decay * w.norm_sq()
    }

    fn gradient(&self, w: &ParamVec, batch: Batch) -> ParamVec {
        let (k, d) = (self.k(), self.d());
        let mut out = ParamVec::zeros(self.dim());
        let mut z = vec![0.0; k];
        let mut count = 0usize;
        {
            let os = out.as_mut_slice();
            for i in self.for_each_index(batch) {
                let x = self.data.row(i);
                self.logits(w, x, &mut z);
                softmax_inplace(&mut z);
                z[self.data.label(i)] -= 1.0;
                for c in 0..k {
                    let delta = z[c];
                    let row = &mut os[c * d..(c + 1) * d];
                    for (g, xv) in row.iter_mut().zip(x) {
                        *g += delta * xv;
                    }
                    os[k * d + c] += delta;
                }
                count += 1;
            }
        }
        out.scale(1.0 / count as f64);
        out.add_scaled(self.weight_decay, w);
        out
    }

    fn quad_form(&self, w: &ParamVec, u: &ParamVec, batch: Batch) -> f64 {
        let k = self.k();
        let mut z = vec![0.0; k];
        let mut rz = vec![0.0; k];
        let mut total = 0.0;
        let mut count = 0usize;
        for i in self.for_each_index(batch) {
            let x = self.data.row(i);
            self.logits(w, x, &mut z);
            softmax_inplace(&mut z);
            self.logits(u, x, &mut rz);
            let mean: f64 = z.iter().zip(&rz).map(|(p, r)| p * r).sum();
            let second: f64 = z.iter().zip(&rz).map(|(p, r)| p * r * r).sum();
            total += second - mean * mean;
            count += 1;
        }
        total / count as f64 + self.weight_decay * u.norm_sq()
    }

    fn hess_vec(&self, w: &ParamVec, v: &ParamVec, batch: Batch) -> ParamVec {
        let (k, d) = (self.k(), self.d());
        let mut out = ParamVec::zeros(self.dim());
        let mut z = vec![0.0; k];
        let mut rz = vec![0.0; k];
        let mut count = 0usize;
        {
            let os = out.as_mut_slice();
            for i in self.for_each_index(batch) {
                let x = self.data.row(i);
                self.logits(w, x, &mut z);
                softmax_inplace(&mut z);
                self.logits(v, x, &mut rz);
                let mean: f64 = z.iter().zip(&rz).map(|(p, r)| p * r).sum();
                for c in 0..k {
                    let s = z[c] * (rz[c] - mean);
                    let row = &mut os[c * d..(c + 1) * d];
                    for (g, xv) in row.iter_mut().zip(x) {
                        *g += s * xv;
                    }
                    os[k * d + c] += s;
                }
                count += 1;
            }
        }
        out.scale(1.0 / count as f64);
        out.add_scaled(self.weight_decay, v);
        out
    }

    fn value_grad(&self, w: &ParamVec, batch: Batch) -> (f64, ParamVec) {
        let (k, d) = (self.k(), self.d());
        let mut out = ParamVec::zeros(self.dim());
        let mut z = vec![0.0; k];
        let mut total = 0.0;
        let mut count = 0usize;
        {
            let os = out.as_mut_slice();
            for i in self.for_each_index(batch) {
                let x = self.data.row(i);
                self.logits(w, x, &mut z);
                softmax_inplace(&mut z);
                total += -z[self.data.label(i)].ln();
                z[self.data.label(i)] -= 1.0;
                for c in 0..k {
                    let delta = z[c];
                    let row = &mut os[c * d..(c + 1) * d];
                    for (g, xv) in row.iter_mut().zip(x) {
                        *g += delta * xv;
                    }
                    os[k * d + c] += delta;
                }
                count += 1;
            }
        }
        out.scale(1.0 / count as f64);
        out.add_scaled(self.weight_decay, w);
        (total / count as f64 + 0.5 * self.weight_decay * w.norm_sq(), out)
    }
}
