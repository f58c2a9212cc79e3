fn main() {
    let (a, b, eta) = (3e-2, 3e-1, 1.0);
    for (x0, l0) in [(1.0, 1.9), (0.5, 1.9), (0.5, 2.0), (0.4, 1.9), (0.3, 1.9), (0.5, 1.8), (0.6, 1.9)] {
        for steps in [2000usize, 20000] {
            let (mut x, mut lam): (f64, f64) = (x0, l0);
            let mut lmin = f64::INFINITY;
            let mut lmax = f64::NEG_INFINITY;
            let mut entered = None;
            for t in 0..steps {
                x = (1.0 - eta * lam) * x;
                lam = eta * (a - b * x * x) + lam;
                lmin = lmin.min(lam);
                lmax = lmax.max(lam);
                if entered.is_none() && lam >= 1.5 && lam <= 2.5 { entered = Some(t); }
            }
            println!("x0={x0} l0={l0} steps={steps}: lambda range [{lmin:.4},{lmax:.4}] entered={entered:?}");
        }
    }
}
