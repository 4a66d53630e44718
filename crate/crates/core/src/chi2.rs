//! Chi-squared statistics with `m` equal cells on (0, 1).

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quad::{level_quantile, predicted_beta, TestReport};
use crate::signal::{ComplexCoeffs, SignalSpec};

fn check_cells(m: usize) -> Result<()> {
    if m < 2 {
        return Err(Error::precondition(format!("need at least 2 cells, got {m}")));
    }
    Ok(())
}

/// Cell counts; a point on `l/m` belongs to cell `l`.
pub fn cell_counts(points: &[f64], m: usize) -> Result<Vec<u64>> {
    check_cells(m)?;
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut counts = vec![0u64; m];
    for &x in points {
        if !(x > 0.0 && x < 1.0) {
            return Err(Error::Domain {
                what: "sample point",
                value: x,
                expected: "(0, 1)",
            });
        }
        counts[((x * m as f64) as usize).min(m - 1)] += 1;
    }
    Ok(counts)
}

/// `n m Σ (p̂_l - 1/m)²`.
pub fn chi2_statistic(points: &[f64], m: usize) -> Result<f64> {
    let counts = cell_counts(points, m)?;
    Ok(chi2_from_counts(&counts, points.len()))
}

pub fn chi2_from_counts(counts: &[u64], n: usize) -> f64 {
    let (nf, mf) = (n as f64, counts.len() as f64);
    nf * mf
        * counts
            .iter()
            .map(|&c| (c as f64 / nf - 1.0 / mf).powi(2))
            .sum::<f64>()
}

/// `∫_{l/m}^{(l+1)/m} f` for every cell.
pub fn cell_integrals(f: &SignalSpec, m: usize) -> Vec<f64> {
    let edges: Vec<f64> = (0..=m).map(|l| f.integral_to(l as f64 / m as f64)).collect();
    edges.windows(2).map(|w| w[1] - w[0]).collect()
}

/// `Σ_l (∫_{cell l} f)² = n^{-1} m^{-1} T_n(F)`.
pub fn cell_energy(f: &SignalSpec, m: usize) -> f64 {
    cell_integrals(f, m).iter().map(|c| c * c).sum()
}

/// Population value `T_n(F) = n m Σ_l (∫_{cell l} f)²`.
pub fn chi2_population(f: &SignalSpec, m: usize, n: usize) -> Result<f64> {
    check_cells(m)?;
    Ok(n as f64 * m as f64 * cell_energy(f, m))
}

/// `‖f - Πf‖²` for the projection onto functions constant on cells.
pub fn projection_residual_sq(f: &SignalSpec, m: usize) -> f64 {
    (f.norm_sq() - m as f64 * cell_energy(f, m)).max(0.0)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FourierSeries {
    pub value: f64,
    pub k_max: usize,
    /// Bound on the dropped `|k| > k_max` terms (0 once they cannot overlap the support).
    pub tail_bound: f64,
}

/// Fourier double series for `n^{-1} m^{-1} T_n(F)`:
/// `m Σ_k Σ_{j≠km} θ_j conj(θ_{j-km}) (2 - 2cos(2πj/m)) / (4π² j (j-km))`, `0/0 := 0`.
///
/// With `k_max = None` the sum stops at `⌈2J/m⌉`, past which no pair of the
/// support `|j| ≤ J` is aliased, so the value is exact.
pub fn chi2_fourier_identity(theta: &ComplexCoeffs, m: usize, k_max: Option<usize>) -> Result<FourierSeries> {
    check_cells(m)?;
    let big_j = theta.max_frequency as i64;
    let mi = m as i64;
    let exact_k = ((2 * big_j + mi - 1) / mi) as usize;
    let k_max = k_max.unwrap_or(exact_k);
    let mut acc = 0.0;
    for k in -(k_max as i64)..=(k_max as i64) {
        let shift = k * mi;
        for j in -big_j..=big_j {
            let jp = j - shift;
            if j == 0 || jp == 0 || jp.abs() > big_j {
                continue;
            }
            let w = 2.0 - 2.0 * (2.0 * PI * j as f64 / m as f64).cos();
            if w == 0.0 {
                continue;
            }
            let prod = theta.get(j) * theta.get(jp).conj();
            acc += prod.re * w / (4.0 * PI * PI * j as f64 * jp as f64);
        }
    }
    let tail_bound = if k_max >= exact_k {
        0.0
    } else {
        // for |k| > K one of |j|, |j - km| exceeds (K+1)m/2
        let (s0, s1) = (1..=big_j).fold((0.0, 0.0), |(a, b), j| {
            let c = theta.get(j).norm();
            (a + 2.0 * c / j as f64, b + 2.0 * c)
        });
        4.0 * s0 * s1 / (PI * PI * (k_max + 1) as f64)
    };
    Ok(FourierSeries {
        value: m as f64 * acc,
        k_max,
        tail_bound,
    })
}

/// Cell-count rule: explicit or `round(c₃ n^{2-4r})`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum CellRule {
    Explicit(usize),
    Rate { c3: f64, r: f64 },
}

impl CellRule {
    pub fn cells(&self, n: usize) -> usize {
        match *self {
            CellRule::Explicit(m) => m,
            CellRule::Rate { c3, r } => (c3 * (n as f64).powf(2.0 - 4.0 * r)).round() as usize,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Chi2Config {
    pub m: usize,
    pub n: usize,
    pub alpha: f64,
    pub x_alpha: f64,
}

impl Chi2Config {
    /// Requires `2 ≤ m ≤ n² / ln n`.
    pub fn new(m: usize, n: usize, alpha: f64) -> Result<Self> {
        check_cells(m)?;
        if n < 2 {
            return Err(Error::precondition("chi-squared test needs n ≥ 2"));
        }
        let nf = n as f64;
        if m as f64 > nf * nf / nf.ln() {
            return Err(Error::precondition(format!("m = {m} exceeds n²/ln n for n = {n}")));
        }
        Ok(Self {
            m,
            n,
            alpha,
            x_alpha: level_quantile(alpha)?,
        })
    }

    /// `(T - m + 1) / √(2m)`.
    pub fn standardize(&self, t: f64) -> f64 {
        (t - self.m as f64 + 1.0) / (2.0 * self.m as f64).sqrt()
    }

    /// Drift `T_n(F) / √(2m)`.
    pub fn drift(&self, population: f64) -> f64 {
        population / (2.0 * self.m as f64).sqrt()
    }
}

/// Decision on a sample and, when a population value is given, `Φ(x_α - T_n(F)/√(2m))`.
pub fn chi2_decide_predict(points: &[f64], population: Option<f64>, config: &Chi2Config) -> Result<TestReport> {
    let t = chi2_statistic(points, config.m)?;
    let standardized = config.standardize(t);
    Ok(TestReport {
        statistic: t,
        standardized,
        reject: standardized > config.x_alpha,
        predicted_beta: population.map(|p| predicted_beta(config.x_alpha, config.drift(p))),
        scale: config.m as f64,
        noncentrality: population,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Basis;

    #[test]
    fn perfect_uniformity_is_zero() {
        let m = 8;
        let pts: Vec<f64> = (0..m).map(|l| (l as f64 + 0.5) / m as f64).collect();
        assert_eq!(chi2_statistic(&pts, m).unwrap(), 0.0);
    }

    #[test]
    fn all_in_one_cell() {
        let (n, m) = (20usize, 5usize);
        let pts = vec![0.05; n];
        let hand = n as f64 * m as f64 * ((1.0 - 0.2f64).powi(2) + 4.0 * 0.04);
        let t = chi2_statistic(&pts, m).unwrap();
        assert!((t - hand).abs() < 1e-12);
        assert!((t - (n * (m - 1)) as f64).abs() < 1e-12);
    }

    #[test]
    fn pearson_form_agrees() {
        let pts = [0.1, 0.15, 0.42, 0.43, 0.44, 0.9, 0.99];
        let m = 4;
        let counts = cell_counts(&pts, m).unwrap();
        let e = pts.len() as f64 / m as f64;
        let pearson: f64 = counts.iter().map(|&c| (c as f64 - e).powi(2) / e).sum();
        assert!((chi2_statistic(&pts, m).unwrap() - pearson).abs() < 1e-12);
    }

    #[test]
    fn boundary_points_go_right() {
        assert_eq!(cell_counts(&[0.5], 2).unwrap(), vec![0, 1]);
        assert!(chi2_statistic(&[], 4).is_err());
        assert!(chi2_statistic(&[0.5], 1).is_err());
        assert!(chi2_statistic(&[1.0], 4).is_err());
    }

    #[test]
    fn population_examples() {
        assert_eq!(chi2_population(&SignalSpec::zeros(Basis::TrigFull, 3), 4, 100).unwrap(), 0.0);
        // frequency 8 completes whole periods in every one of 4 cells
        let f = SignalSpec::spike(Basis::TrigFull, 2 * 7, 0.3).add(&SignalSpec::spike(Basis::TrigFull, 2 * 7 + 1, 0.2)).unwrap();
        assert!(chi2_population(&f, 4, 100).unwrap().abs() < 1e-28);
    }

    #[test]
    fn fourier_identity_zero_and_single_pair() {
        let zero = SignalSpec::zeros(Basis::TrigFull, 3).to_complex().unwrap();
        assert_eq!(chi2_fourier_identity(&zero, 5, None).unwrap().value, 0.0);
        let f = SignalSpec::new(Basis::TrigFull, vec![0.3, -0.1, 0.05, 0.2]).unwrap();
        let s = chi2_fourier_identity(&f.to_complex().unwrap(), 3, None).unwrap();
        assert_eq!(s.tail_bound, 0.0);
        assert!((s.value - cell_energy(&f, 3)).abs() < 1e-15);
    }

    #[test]
    fn truncated_series_reports_tail() {
        let f = SignalSpec::new(Basis::TrigFull, vec![0.1; 40]).unwrap();
        let c = f.to_complex().unwrap();
        let exact = chi2_fourier_identity(&c, 4, None).unwrap();
        let cut = chi2_fourier_identity(&c, 4, Some(2)).unwrap();
        assert!(cut.tail_bound > 0.0);
        assert!((exact.value - cut.value).abs() <= cut.tail_bound);
    }

    #[test]
    fn decision_and_prediction() {
        let cfg = Chi2Config::new(16, 1000, 0.05).unwrap();
        let pts: Vec<f64> = (0..1000).map(|i| (i as f64 + 0.5) / 1000.0).collect();
        let rep = chi2_decide_predict(&pts, Some(0.0), &cfg).unwrap();
        assert!(!rep.reject);
        assert!((rep.predicted_beta.unwrap() - 0.95).abs() < 1e-8);
        let mid = 2f64.sqrt() * 4.0 * cfg.x_alpha;
        assert!((predicted_beta(cfg.x_alpha, cfg.drift(mid)) - 0.5).abs() < 1e-15);
        assert!(Chi2Config::new(1, 100, 0.05).is_err());
        assert!(Chi2Config::new(5000, 10, 0.05).is_err());
    }

    #[test]
    fn cell_rule() {
        assert_eq!(CellRule::Explicit(7).cells(100), 7);
        assert_eq!(CellRule::Rate { c3: 0.5, r: 0.25 }.cells(100), 50);
    }
}
