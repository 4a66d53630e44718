//! Gauss–Legendre rules, composite and adaptive.

use std::f64::consts::PI;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Clone, Debug)]
pub struct GaussLegendre {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl GaussLegendre {
    pub fn new(order: usize) -> Self {
        assert!(order >= 1);
        let mut nodes = vec![0.0; order];
        let mut weights = vec![0.0; order];
        let n = order as f64;
        for i in 0..order.div_ceil(2) {
            let mut x = (PI * (i as f64 + 0.75) / (n + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=order {
                    let kf = k as f64;
                    let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                    p0 = p1;
                    p1 = p2;
                }
                let pn = if order == 1 { x } else { p1 };
                let pm = if order == 1 { 1.0 } else { p0 };
                dp = n * (x * pn - pm) / (x * x - 1.0);
                let dx = pn / dp;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            nodes[i] = -x;
            nodes[order - 1 - i] = x;
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            weights[i] = w;
            weights[order - 1 - i] = w;
        }
        if order == 1 {
            nodes[0] = 0.0;
            weights[0] = 2.0;
        }
        Self { nodes, weights }
    }

    pub fn integrate(&self, f: impl Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(mid + half * x))
            .sum::<f64>()
            * half
    }

    /// Composite rule over `panels` equal subintervals of [a, b].
    pub fn composite(&self, f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + k as f64 * h;
                self.integrate(&f, lo, lo + h)
            })
            .sum()
    }
}

/// Adaptive bisection on a 10-point Gauss–Legendre rule until two halves agree
/// with the whole to `tol` (scaled by interval length).
pub fn adaptive(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let rule = GaussLegendre::new(10);
    let whole = rule.integrate(f, a, b);
    adaptive_rec(f, &rule, a, b, whole, tol, 0)
}

fn adaptive_rec(
    f: &dyn Fn(f64) -> f64,
    rule: &GaussLegendre,
    a: f64,
    b: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> f64 {
    let m = 0.5 * (a + b);
    let left = rule.integrate(f, a, m);
    let right = rule.integrate(f, m, b);
    if depth >= 40 || (left + right - whole).abs() <= tol {
        return left + right;
    }
    adaptive_rec(f, rule, a, m, left, 0.5 * tol, depth + 1)
        + adaptive_rec(f, rule, m, b, right, 0.5 * tol, depth + 1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials() {
        let rule = GaussLegendre::new(8);
        // degree 15 is integrated exactly by 8 nodes
        let v = rule.integrate(|x| x.powi(14) + 3.0 * x.powi(15), -1.0, 1.0);
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
        assert!((rule.weights.iter().sum::<f64>() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn adaptive_handles_kinks() {
        let v = adaptive(&|x: f64| x.abs(), -1.0, 2.0, 1e-12);
        assert!((v - 2.5).abs() < 1e-10);
    }

    #[test]
    fn composite_trig() {
        let rule = GaussLegendre::new(12);
        let v = rule.composite(|x| (3.0 * x).cos().powi(2), 0.0, 1.0, 8);
        let exact = 0.5 + (6.0f64).sin() / 12.0;
        assert!((v - exact).abs() < 1e-13);
    }
}
