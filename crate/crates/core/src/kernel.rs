//! Kernel L2 statistic in its Fourier form.
//!
//! Observations are real coordinates `[y_0, c_1, s_1, c_2, s_2, ...]` against
//! `1, √2 cos(2πjt), √2 sin(2πjt)`. The complex coefficient pair `y_{±j}`
//! satisfies `|y_j|² + |y_{-j}|² = c_j² + s_j²`, so every two-sided sum is a
//! one-sided sum over pairs.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{level_quantile, predicted_beta};
use crate::quadrature::{adaptive, GaussLegendre};
use crate::signal::{Basis, SignalSpec};

/// Even kernel supported in [-1, 1] with unit integral.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Kernel {
    /// `1/2` on [-1, 1].
    Box,
    /// `3/4 (1 - t²)` on [-1, 1].
    Epanechnikov,
    /// Piecewise-linear values at equispaced `t ∈ [0, 1]`, mirrored to [-1, 0].
    Table { values: Vec<f64> },
}

pub const TABLE_TOL: f64 = 1e-10;

impl Kernel {
    /// Table kernel, rescaled to unit integral; must vanish at t = 1.
    pub fn table(values: Vec<f64>) -> Result<Self> {
        if values.len() < 2 {
            return Err(Error::precondition("kernel table needs at least two nodes"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::precondition("kernel table has non-finite values"));
        }
        let k = Kernel::Table { values };
        let mass = k.integral();
        if !(mass > 0.0) {
            return Err(Error::precondition(format!("kernel table integrates to {mass}")));
        }
        let Kernel::Table { values } = k else { unreachable!() };
        Ok(Kernel::Table {
            values: values.iter().map(|v| v / mass).collect(),
        })
    }

    pub fn value(&self, t: f64) -> f64 {
        let a = t.abs();
        if a > 1.0 {
            return 0.0;
        }
        match self {
            Kernel::Box => 0.5,
            Kernel::Epanechnikov => 0.75 * (1.0 - a * a),
            Kernel::Table { values } => {
                let cells = (values.len() - 1) as f64;
                let x = a * cells;
                let i = (x.floor() as usize).min(values.len() - 2);
                let w = x - i as f64;
                values[i] * (1.0 - w) + values[i + 1] * w
            }
        }
    }

    /// Breakpoints of the piecewise description on [0, 1].
    fn nodes(&self) -> Vec<f64> {
        match self {
            Kernel::Table { values } => {
                let cells = values.len() - 1;
                (0..=cells).map(|i| i as f64 / cells as f64).collect()
            }
            _ => vec![0.0, 1.0],
        }
    }

    /// `∫ K` by Gauss-Legendre on each piece.
    pub fn integral(&self) -> f64 {
        let rule = GaussLegendre::new(8);
        let nodes = self.nodes();
        2.0 * nodes
            .windows(2)
            .map(|w| rule.integrate(|t| self.value(t), w[0], w[1]))
            .sum::<f64>()
    }

    /// `K̂(ω) = ∫ e^{2πiωt} K(t) dt`, real because K is even.
    pub fn fourier(&self, omega: f64) -> f64 {
        let u = 2.0 * PI * omega;
        match self {
            Kernel::Box => {
                if u.abs() < 1e-4 {
                    1.0 - u * u / 6.0 + u.powi(4) / 120.0
                } else {
                    u.sin() / u
                }
            }
            Kernel::Epanechnikov => {
                if u.abs() < 1e-2 {
                    let u2 = u * u;
                    1.0 - u2 / 10.0 + u2 * u2 / 280.0 - u2 * u2 * u2 / 15120.0
                } else {
                    3.0 * (u.sin() - u * u.cos()) / u.powi(3)
                }
            }
            Kernel::Table { .. } => {
                let nodes = self.nodes();
                2.0 * nodes
                    .windows(2)
                    .map(|w| adaptive(&|t| self.value(t) * (u * t).cos(), w[0], w[1], 1e-13))
                    .sum::<f64>()
            }
        }
    }

    /// `‖K‖² = ∫ K²`.
    pub fn norm_sq(&self) -> f64 {
        let rule = GaussLegendre::new(8);
        2.0 * self
            .nodes()
            .windows(2)
            .map(|w| rule.integrate(|t| self.value(t).powi(2), w[0], w[1]))
            .sum::<f64>()
    }

    /// `(K * K)(t)`.
    pub fn self_convolution(&self, t: f64) -> f64 {
        let lo = (-1.0f64).max(t - 1.0);
        let hi = 1.0f64.min(t + 1.0);
        if hi <= lo {
            return 0.0;
        }
        // integrand breakpoints: kernel nodes at s and at t - s
        let mut cuts: Vec<f64> = self
            .nodes()
            .iter()
            .flat_map(|&x| [x, -x, t - x, t + x])
            .filter(|&x| x > lo && x < hi)
            .collect();
        cuts.push(lo);
        cuts.push(hi);
        cuts.sort_by(f64::total_cmp);
        cuts.dedup_by(|a, b| (*a - *b).abs() < 1e-15);
        let rule = GaussLegendre::new(8);
        cuts.windows(2)
            .map(|w| rule.integrate(|s| self.value(t - s) * self.value(s), w[0], w[1]))
            .sum()
    }

    /// `γ² = 2 ∫ (K*K)²` in the time domain.
    pub fn gamma_sq(&self) -> f64 {
        match self {
            Kernel::Box => 2.0 / 3.0,
            _ => {
                let n = match self {
                    Kernel::Table { values } => 8 * (values.len() - 1),
                    _ => 4,
                };
                let rule = GaussLegendre::new(16);
                // K*K is even; integrate on [0, 2] with panels aligned to the table grid
                4.0 * rule.composite(|t| self.self_convolution(t).powi(2), 0.0, 2.0, n)
            }
        }
    }

    /// `γ² = 2 ∫ |K̂|⁴` in the frequency domain, with the asymptotic tail past `omega_max`.
    pub fn gamma_sq_fourier(&self, omega_max: f64) -> f64 {
        let rule = GaussLegendre::new(16);
        let panels = (4.0 * omega_max).ceil() as usize;
        let body = rule.composite(|w| self.fourier(w).powi(4), 0.0, omega_max, panels);
        // box: sin⁴ averages 3/8 against (2πω)^{-4}; continuous kernels decay like ω^{-8}
        let tail = match self {
            Kernel::Box => 0.375 / (48.0 * PI.powi(4) * omega_max.powi(3)),
            _ => 0.0,
        };
        4.0 * (body + tail)
    }

    /// Largest `ω` with `min_{|u|≤ω} |K̂(u)| ≥ 0.5`.
    pub fn half_power_radius(&self) -> f64 {
        let step = 1e-3;
        let mut w = 0.0;
        while self.fourier(w + step).abs() >= 0.5 {
            w += step;
            if w > 1e3 {
                return w;
            }
        }
        let (mut lo, mut hi) = (w, w + step);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if self.fourier(mid).abs() >= 0.5 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo
    }
}

/// Kernel test at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelTestConfig {
    pub kernel: Kernel,
    pub h: f64,
    pub sigma: f64,
    pub n: usize,
    pub alpha: f64,
    pub x_alpha: f64,
    pub gamma_sq: f64,
    /// Frequencies `1..=J` kept in the observation vector.
    pub frequencies: usize,
    /// `|K̂(jh)|²` for `j = 1..=J`.
    weights: Vec<f64>,
}

impl KernelTestConfig {
    pub fn new(kernel: Kernel, h: f64, sigma: f64, n: usize, alpha: f64, frequencies: usize) -> Result<Self> {
        if !(h > 0.0 && h < 1.0) {
            return Err(Error::Domain {
                what: "bandwidth h",
                value: h,
                expected: "(0, 1)",
            });
        }
        if !(sigma > 0.0) {
            return Err(Error::Domain {
                what: "sigma",
                value: sigma,
                expected: "(0, ∞)",
            });
        }
        if n == 0 || frequencies == 0 {
            return Err(Error::precondition("n and the frequency count must be positive"));
        }
        let weights = (1..=frequencies)
            .map(|j| kernel.fourier(j as f64 * h).powi(2))
            .collect();
        Ok(Self {
            gamma_sq: kernel.gamma_sq(),
            x_alpha: level_quantile(alpha)?,
            kernel,
            h,
            sigma,
            n,
            alpha,
            frequencies,
            weights,
        })
    }

    /// `J h ≥ 1`: the truncation lies past the kernel's main lobe.
    pub fn truncation_ok(&self) -> bool {
        self.frequencies as f64 * self.h >= 1.0
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Observation length `1 + 2J`.
    pub fn dim(&self) -> usize {
        1 + 2 * self.frequencies
    }

    /// Per-coordinate weights in observation order.
    pub fn coordinate_weights(&self) -> Vec<f64> {
        std::iter::once(1.0)
            .chain(self.weights.iter().flat_map(|&w| [w, w]))
            .collect()
    }

    /// `Σ_{j=-J}^{J} |K̂(jh)|²`.
    pub fn weight_sum(&self) -> f64 {
        1.0 + 2.0 * self.weights.iter().sum::<f64>()
    }

    /// Factor `n h^{1/2} σ^{-2} γ^{-1}`.
    pub fn scale(&self) -> f64 {
        self.n as f64 * self.h.sqrt() / (self.sigma * self.sigma * self.gamma_sq.sqrt())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelStatistic {
    pub value: f64,
    /// `Σ |K̂(jh)|² |y_j|²`, i.e. `‖f̂_n‖²` of the truncated data.
    pub quadratic: f64,
    pub centering: f64,
    pub truncation_ok: bool,
}

pub fn kernel_statistic_fourier(y: &[f64], config: &KernelTestConfig) -> Result<KernelStatistic> {
    if y.len() != config.dim() {
        return Err(Error::LengthMismatch {
            expected: config.dim(),
            got: y.len(),
        });
    }
    let mut quadratic = y[0] * y[0];
    for (pair, w) in y[1..].chunks_exact(2).zip(&config.weights) {
        quadratic += w * (pair[0] * pair[0] + pair[1] * pair[1]);
    }
    let centering = config.sigma * config.sigma * config.weight_sum() / config.n as f64;
    Ok(KernelStatistic {
        value: config.scale() * (quadratic - centering),
        quadratic,
        centering,
        truncation_ok: config.truncation_ok(),
    })
}

/// Observation vector `[0, a_1, b_1, ...]` of a trig signal, padded to `J`.
pub fn observation_mean(theta: &SignalSpec, config: &KernelTestConfig) -> Result<Vec<f64>> {
    require_trig(theta)?;
    let mut v = vec![0.0; config.dim()];
    let k = (config.dim() - 1).min(theta.len());
    v[1..1 + k].copy_from_slice(&theta.coeffs()[..k]);
    Ok(v)
}

fn require_trig(theta: &SignalSpec) -> Result<()> {
    if theta.basis != Basis::TrigFull {
        return Err(Error::precondition("the kernel statistic works on the trig_full basis"));
    }
    Ok(())
}

/// `T_{1n}(θ) = Σ_j |K̂(jh)|² |θ_j|²`.
pub fn t1n(theta: &SignalSpec, kernel: &Kernel, h: f64) -> Result<f64> {
    require_trig(theta)?;
    Ok(theta
        .frequency_masses()
        .iter()
        .enumerate()
        .filter(|(_, &m)| m != 0.0)
        .map(|(i, m)| kernel.fourier((i + 1) as f64 * h).powi(2) * m)
        .sum())
}

/// Drift `γ^{-1} σ^{-2} n h^{1/2} T_{1n}(θ)`.
pub fn kernel_drift(theta: &SignalSpec, config: &KernelTestConfig) -> Result<f64> {
    Ok(config.scale() * t1n(theta, &config.kernel, config.h)?)
}

/// `Φ(x_α - γ^{-1} σ^{-2} n h^{1/2} T_{1n}(θ))`.
pub fn kernel_power_prediction(theta: &SignalSpec, config: &KernelTestConfig) -> Result<f64> {
    Ok(predicted_beta(config.x_alpha, kernel_drift(theta, config)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_kernel_invariants() {
        for k in [Kernel::Box, Kernel::Epanechnikov] {
            assert!((k.integral() - 1.0).abs() < 1e-12);
            assert_eq!(k.value(0.3), k.value(-0.3));
            assert!((k.fourier(0.0) - 1.0).abs() < 1e-15);
            for i in 0..400 {
                assert!(k.fourier(i as f64 * 0.037).abs() <= 1.0 + 1e-15);
            }
        }
        assert!((Kernel::Box.norm_sq() - 0.5).abs() < 1e-14);
        assert!((Kernel::Epanechnikov.norm_sq() - 0.6).abs() < 1e-14);
    }

    #[test]
    fn closed_form_transforms_match_quadrature() {
        let rule = GaussLegendre::new(32);
        for k in [Kernel::Box, Kernel::Epanechnikov] {
            for w in [1e-5, 0.003, 0.2, 0.77, 3.1] {
                let q = 2.0 * rule.composite(|t| k.value(t) * (2.0 * PI * w * t).cos(), 0.0, 1.0, 16);
                assert!((q - k.fourier(w)).abs() < 1e-12, "{k:?} at {w}");
            }
        }
    }

    #[test]
    fn gamma_sq_time_and_frequency_agree() {
        for k in [Kernel::Box, Kernel::Epanechnikov] {
            let t = k.gamma_sq();
            let f = k.gamma_sq_fourier(400.0);
            assert!((t - f).abs() < 1e-8, "{k:?}: {t} vs {f}");
        }
        // box kernel: K*K = (2 - |t|)/4 gives 2/3
        let direct = 4.0 * GaussLegendre::new(16).integrate(|t| Kernel::Box.self_convolution(t).powi(2), 0.0, 2.0);
        assert!((direct - 2.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn table_kernel_matches_builtin() {
        // a triangular table is exact for piecewise-linear kernels
        let tri = Kernel::table(vec![1.0, 0.5, 0.0]).unwrap();
        assert!((tri.integral() - 1.0).abs() < 1e-12);
        assert!((tri.fourier(0.0) - 1.0).abs() < 1e-10);
        // triangle K = 1 - |t|: K̂(ω) = (sin(πω)/(πω))²
        let w: f64 = 0.4;
        let want = ((PI * w).sin() / (PI * w)).powi(2);
        assert!((tri.fourier(w) - want).abs() < 1e-10);
        let g = tri.gamma_sq();
        assert!((g - tri.gamma_sq_fourier(100.0)).abs() < 1e-8, "{g} vs {}", tri.gamma_sq_fourier(100.0));
        assert!(Kernel::table(vec![0.0, 0.0]).is_err());
    }

    #[test]
    fn half_power_radius_box() {
        let b = Kernel::Box.half_power_radius();
        assert!((Kernel::Box.fourier(b) - 0.5).abs() < 1e-9);
        assert!(b > 0.29 && b < 0.31);
    }

    #[test]
    fn zero_data_is_pure_centering() {
        let cfg = KernelTestConfig::new(Kernel::Box, 0.01, 1.0, 1000, 0.05, 400).unwrap();
        let s = kernel_statistic_fourier(&vec![0.0; cfg.dim()], &cfg).unwrap();
        assert_eq!(s.quadratic, 0.0);
        assert!((s.value + cfg.scale() * cfg.weight_sum() / 1000.0).abs() < 1e-12);
        assert!(s.truncation_ok);
        assert!(KernelTestConfig::new(Kernel::Box, 1.5, 1.0, 10, 0.05, 10).is_err());
    }

    #[test]
    fn t1n_examples() {
        let zero = SignalSpec::zeros(Basis::TrigFull, 4);
        assert_eq!(t1n(&zero, &Kernel::Box, 0.1).unwrap(), 0.0);
        let th = SignalSpec::new(Basis::TrigFull, vec![0.0, 0.0, 0.3, 0.4]).unwrap();
        let want = 0.25 * Kernel::Box.fourier(0.02).powi(2);
        assert!((t1n(&th, &Kernel::Box, 0.01).unwrap() - want).abs() < 1e-15);
        // frequency 50 with h = 0.01 sits on a zero of sin(2πω)/(2πω)
        let at_zero = SignalSpec::spike(Basis::TrigFull, 2 * 49, 1.0);
        assert!(t1n(&at_zero, &Kernel::Box, 0.01).unwrap() < 1e-20);
    }

    #[test]
    fn prediction_trivial_points() {
        let cfg = KernelTestConfig::new(Kernel::Epanechnikov, 0.05, 1.0, 500, 0.05, 40).unwrap();
        let zero = SignalSpec::zeros(Basis::TrigFull, 2);
        assert!((kernel_power_prediction(&zero, &cfg).unwrap() - 0.95).abs() < 1e-8);
        assert!((predicted_beta(cfg.x_alpha, cfg.x_alpha) - 0.5).abs() < 1e-15);
    }
}
