//! Cramér-von Mises statistic, its population functional and the
//! Brownian-bridge series for the limiting null law.

use std::f64::consts::PI;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{standard_normal, StreamKey, NULL_TABLE_STREAM};
use crate::signal::{Basis, SignalSpec};
use crate::stats::upper_critical_value;

/// `n ∫ (F̂_n - F₀)² dF₀ = Σ_i (U_(i) - (2i-1)/(2n))² + 1/(12n)`.
pub fn cvm_statistic(points: &[f64]) -> Result<f64> {
    if points.is_empty() {
        return Err(Error::EmptySample);
    }
    if let Some(&bad) = points.iter().find(|&&x| !(x > 0.0 && x < 1.0)) {
        return Err(Error::Domain {
            what: "sample point",
            value: bad,
            expected: "(0, 1)",
        });
    }
    let mut u = points.to_vec();
    u.sort_by(f64::total_cmp);
    Ok(cvm_sorted(&u))
}

/// Exact formula on sorted points.
pub fn cvm_sorted(sorted: &[f64]) -> f64 {
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &u)| (u - (2.0 * i as f64 + 1.0) / (2.0 * n)).powi(2))
        .sum::<f64>()
        + 1.0 / (12.0 * n)
}

/// `T²(F - F₀) = Σ θ_j² / (π² j²)` for `f` on the cosine basis.
pub fn cvm_population(theta: &SignalSpec) -> Result<f64> {
    if theta.basis != Basis::CosinePi {
        return Err(Error::precondition("the series form needs the cosine_pi basis"));
    }
    Ok(theta
        .coeff_iter()
        .map(|(j, c)| c * c / (PI * PI * (j * j) as f64))
        .sum())
}

/// `n T²(F_n - F₀)` for each `(n, θ_n)`.
pub fn cvm_consistency_index(sequence: &[(usize, SignalSpec)]) -> Result<Vec<f64>> {
    sequence
        .iter()
        .map(|(n, th)| Ok(*n as f64 * cvm_population(th)?))
        .collect()
}

/// One draw of `Σ_{j≤J} (ξ_j/(πj) + shift_j)²`; `shift_j = √n θ_j/(πj)` gives the local alternative.
pub fn cvm_null_sample<R: Rng + ?Sized>(j_null: usize, shift: &[f64], rng: &mut R) -> Result<f64> {
    if j_null == 0 {
        return Err(Error::precondition("J_null must be ≥ 1"));
    }
    Ok((1..=j_null)
        .map(|j| {
            let s = shift.get(j - 1).copied().unwrap_or(0.0);
            (standard_normal(rng) / (PI * j as f64) + s).powi(2)
        })
        .sum())
}

/// Series value for given normals; the deterministic core of [`cvm_null_sample`].
pub fn cvm_series(xi: &[f64], shift: &[f64]) -> f64 {
    xi.iter()
        .enumerate()
        .map(|(i, x)| {
            let s = shift.get(i).copied().unwrap_or(0.0);
            (x / (PI * (i + 1) as f64) + s).powi(2)
        })
        .sum()
}

/// Shift vector `√n θ_j / (πj)` of a cosine-basis alternative.
pub fn local_shift(theta: &SignalSpec, n: usize) -> Result<Vec<f64>> {
    if theta.basis != Basis::CosinePi {
        return Err(Error::precondition("the series form needs the cosine_pi basis"));
    }
    let rn = (n as f64).sqrt();
    Ok(theta.coeff_iter().map(|(j, c)| rn * c / (PI * j as f64)).collect())
}

/// `Σ_{j>J} 1/(π² j²) ≤ 1/(π² J)`.
pub fn series_tail_bound(j_null: usize) -> f64 {
    1.0 / (PI * PI * j_null as f64)
}

pub const DEFAULT_J_NULL: usize = 1024;

/// Simulated critical value of the limiting null law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvmNullEntry {
    pub alpha: f64,
    pub critical: f64,
    #[serde(rename = "J_null")]
    pub j_null: usize,
    pub replicates: usize,
    pub seed: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CvmNullTable {
    pub entries: Vec<CvmNullEntry>,
}

impl CvmNullTable {
    /// Draws are keyed by `(seed, NULL_TABLE_STREAM, replicate)`.
    pub fn generate(alphas: &[f64], j_null: usize, replicates: usize, seed: u64) -> Result<Self> {
        if replicates == 0 {
            return Err(Error::precondition("replicates must be positive"));
        }
        let mut draws = null_draws(j_null, replicates, seed)?;
        draws.sort_by(f64::total_cmp);
        let entries = alphas
            .iter()
            .map(|&alpha| {
                if !(alpha > 0.0 && alpha < 1.0) {
                    return Err(Error::Domain {
                        what: "alpha",
                        value: alpha,
                        expected: "(0, 1)",
                    });
                }
                Ok(CvmNullEntry {
                    alpha,
                    critical: upper_critical_value(&draws, alpha),
                    j_null,
                    replicates,
                    seed,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self { entries })
    }

    pub fn critical(&self, alpha: f64) -> Option<f64> {
        self.entries
            .iter()
            .find(|e| (e.alpha - alpha).abs() < 1e-12)
            .map(|e| e.critical)
    }
}

/// `replicates` null draws in replicate order.
pub fn null_draws(j_null: usize, replicates: usize, seed: u64) -> Result<Vec<f64>> {
    if j_null == 0 {
        return Err(Error::precondition("J_null must be ≥ 1"));
    }
    Ok((0..replicates as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = StreamKey::new(seed, NULL_TABLE_STREAM, r).rng();
            cvm_null_sample(j_null, &[], &mut rng).expect("j_null checked")
        })
        .collect())
}
