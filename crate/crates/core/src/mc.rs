//! Monte Carlo estimation of rejection rates.
//!
//! Every replicate draws its noise from `StreamKey(seed, stream, replicate)`
//! and evaluates all signals of a batch on that same draw, so estimates for
//! different signals at one `n` are paired. Results never depend on the
//! rayon schedule: replicates are mapped independently and collected in
//! index order.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::chi2::{chi2_from_counts, Chi2Config};
use crate::cvm::cvm_sorted;
use crate::error::{Error, Result};
use crate::kernel::{kernel_drift, observation_mean, KernelTestConfig};
use crate::quad::{noncentrality, predicted_beta, FixedKappa, ProfileAtN, QuadTestConfig};
use crate::rng::{fill_standard_normal, open_unit, StreamKey};
use crate::signal::{DensitySpec, SignalSpec};
use crate::stats::{upper_critical_value, wilson_interval};

pub const MIN_REPLICATES: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct McSettings {
    pub replicates: usize,
    pub seed: u64,
}

impl McSettings {
    pub fn new(replicates: usize, seed: u64) -> Result<Self> {
        if replicates < MIN_REPLICATES {
            return Err(Error::precondition(format!(
                "at least {MIN_REPLICATES} replicates are required, got {replicates}"
            )));
        }
        Ok(Self { replicates, seed })
    }
}

/// Rejection rate with its binomial standard error and Wilson interval.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MCEstimate {
    pub estimate: f64,
    pub std_error: f64,
    pub replicates: usize,
    pub rejections: u64,
    pub ci95: (f64, f64),
    pub seed: u64,
    pub stream: u64,
}

pub const Z95: f64 = 1.959963984540054;

impl MCEstimate {
    pub fn from_counts(rejections: u64, replicates: usize, seed: u64, stream: u64) -> Self {
        let p = rejections as f64 / replicates as f64;
        Self {
            estimate: p,
            std_error: (p * (1.0 - p) / replicates as f64).sqrt(),
            replicates,
            rejections,
            ci95: wilson_interval(rejections, replicates as u64, Z95),
            seed,
            stream,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci95.0 <= p && p <= self.ci95.1
    }
}

/// `√(se₁² + se₂²)`.
pub fn joint_se(a: &MCEstimate, b: &MCEstimate) -> f64 {
    a.std_error.hypot(b.std_error)
}

/// Replicate-by-signal rejection indicators.
#[derive(Clone, Debug, PartialEq)]
pub struct RejectionMatrix {
    pub signals: usize,
    pub replicates: usize,
    pub seed: u64,
    pub stream: u64,
    rows: Vec<Vec<bool>>,
}

impl RejectionMatrix {
    pub fn estimate(&self, signal: usize) -> MCEstimate {
        let k = self.rows.iter().filter(|r| r[signal]).count() as u64;
        MCEstimate::from_counts(k, self.replicates, self.seed, self.stream)
    }

    pub fn estimates(&self) -> Vec<MCEstimate> {
        (0..self.signals).map(|s| self.estimate(s)).collect()
    }

    /// Mean and standard error of the paired difference `rej(a) - rej(b)`.
    pub fn paired_difference(&self, a: usize, b: usize) -> (f64, f64) {
        let d: Vec<f64> = self
            .rows
            .iter()
            .map(|r| f64::from(u8::from(r[a])) - f64::from(u8::from(r[b])))
            .collect();
        crate::stats::mean_and_se(&d)
    }
}

/// `Σ_k w_k (μ_k + sd_k ξ_k)²` for sparse means, sharing `ξ` across means.
#[derive(Clone, Debug)]
pub struct WeightedQuadratic {
    pub weights: Vec<f64>,
    pub sd: Vec<f64>,
}

/// Nonzero entries `(coordinate, mean)`.
pub type SparseMean = Vec<(usize, f64)>;

pub fn sparse(mean: &[f64]) -> SparseMean {
    mean.iter()
        .enumerate()
        .filter(|(_, &m)| m != 0.0)
        .map(|(k, &m)| (k, m))
        .collect()
}

impl WeightedQuadratic {
    pub fn homoscedastic(weights: Vec<f64>, sd: f64) -> Self {
        let len = weights.len();
        Self {
            weights,
            sd: vec![sd; len],
        }
    }

    pub fn dim(&self) -> usize {
        self.weights.len()
    }

    /// Statistic values, one row per replicate and one column per mean.
    pub fn simulate(&self, means: &[SparseMean], mc: &McSettings, stream: u64) -> Vec<Vec<f64>> {
        let dim = self.dim();
        (0..mc.replicates as u64)
            .into_par_iter()
            .map_init(
                || vec![0.0; dim],
                |xi, r| {
                    let mut rng = StreamKey::new(mc.seed, stream, r).rng();
                    fill_standard_normal(&mut rng, xi);
                    let mut base = 0.0;
                    for k in 0..dim {
                        let e = self.sd[k] * xi[k];
                        base += self.weights[k] * e * e;
                    }
                    means
                        .iter()
                        .map(|mean| {
                            let mut v = base;
                            for &(k, m) in mean.iter().filter(|(k, _)| *k < dim) {
                                let e = self.sd[k] * xi[k];
                                v += self.weights[k] * ((m + e) * (m + e) - e * e);
                            }
                            v
                        })
                        .collect()
                },
            )
            .collect()
    }
}

/// Sorted uniforms shared by all densities of a replicate.
fn sorted_uniforms(n: usize, key: StreamKey) -> Vec<f64> {
    let mut rng = key.rng();
    let mut u: Vec<f64> = (0..n).map(|_| open_unit(&mut rng)).collect();
    u.sort_by(f64::total_cmp);
    u
}

/// A test ready to be simulated at one `n`.
#[derive(Clone, Debug)]
pub enum PreparedTest {
    Quad {
        profile: ProfileAtN,
        config: QuadTestConfig,
    },
    Kernel {
        config: KernelTestConfig,
    },
    /// `Σ κ²_j z_j² > critical` with `z_j = η_j + σ_j ξ_j`; signals are `η`.
    Fixed {
        kappa: FixedKappa,
        critical: f64,
    },
    Chi2 {
        config: Chi2Config,
    },
    Cvm {
        n: usize,
        critical: f64,
    },
}

impl PreparedTest {
    /// Fixed-coefficient test calibrated on `null_replicates` draws of an independent stream.
    pub fn fixed(kappa: FixedKappa, alpha: f64, null_replicates: usize, seed: u64) -> Result<Self> {
        let mc = McSettings::new(null_replicates, seed)?;
        let wq = WeightedQuadratic {
            weights: kappa.kappa_sq().to_vec(),
            sd: kappa.sigmas().to_vec(),
        };
        let mut draws: Vec<f64> = wq
            .simulate(&[Vec::new()], &mc, crate::rng::NULL_TABLE_STREAM)
            .into_iter()
            .map(|row| row[0])
            .collect();
        draws.sort_by(f64::total_cmp);
        Ok(PreparedTest::Fixed {
            critical: upper_critical_value(&draws, alpha),
            kappa,
        })
    }

    pub fn n(&self) -> usize {
        match self {
            PreparedTest::Quad { profile, .. } => profile.n,
            PreparedTest::Kernel { config } => config.n,
            PreparedTest::Fixed { .. } => 1,
            PreparedTest::Chi2 { config } => config.n,
            PreparedTest::Cvm { n, .. } => *n,
        }
    }

    fn sequence_setup(&self, signals: &[SignalSpec]) -> Result<(WeightedQuadratic, f64, Vec<SparseMean>)> {
        match self {
            PreparedTest::Quad { profile, config } => {
                let n = profile.n as f64;
                let sd = config.sigma / n.sqrt();
                let threshold = config.sigma.powi(2) * profile.rho / n
                    + config.x_alpha * config.sigma.powi(4) * (2.0 * profile.a_n(config.sigma)).sqrt() / (n * n);
                let means = signals.iter().map(|s| sparse(s.coeffs())).collect();
                Ok((WeightedQuadratic::homoscedastic(profile.kappa_sq.clone(), sd), threshold, means))
            }
            PreparedTest::Kernel { config } => {
                let sd = config.sigma / (config.n as f64).sqrt();
                let threshold = config.sigma.powi(2) * config.weight_sum() / config.n as f64 + config.x_alpha / config.scale();
                let means = signals
                    .iter()
                    .map(|s| observation_mean(s, config).map(|m| sparse(&m)))
                    .collect::<Result<_>>()?;
                Ok((WeightedQuadratic::homoscedastic(config.coordinate_weights(), sd), threshold, means))
            }
            PreparedTest::Fixed { kappa, critical } => {
                let wq = WeightedQuadratic {
                    weights: kappa.kappa_sq().to_vec(),
                    sd: kappa.sigmas().to_vec(),
                };
                let means = signals.iter().map(|s| sparse(s.coeffs())).collect();
                Ok((wq, *critical, means))
            }
            _ => unreachable!("i.i.d. families take the sample path"),
        }
    }

    /// Rejection indicators for every signal on shared replicates.
    ///
    /// Sequence-model signals are coefficient vectors; for the chi2 and cvm
    /// families they are densities `1 + f` and must pass the nonnegativity check.
    pub fn rejections(&self, signals: &[SignalSpec], mc: &McSettings, stream: u64) -> Result<RejectionMatrix> {
        let rows: Vec<Vec<bool>> = match self {
            PreparedTest::Quad { .. } | PreparedTest::Kernel { .. } | PreparedTest::Fixed { .. } => {
                let (wq, threshold, means) = self.sequence_setup(signals)?;
                wq.simulate(&means, mc, stream)
                    .into_iter()
                    .map(|row| row.into_iter().map(|v| v > threshold).collect())
                    .collect()
            }
            PreparedTest::Chi2 { config } => {
                let edges: Vec<Vec<f64>> = signals
                    .iter()
                    .map(|s| {
                        DensitySpec::new(s.clone())?;
                        Ok((0..=config.m)
                            .map(|l| s.cdf(l as f64 / config.m as f64))
                            .collect())
                    })
                    .collect::<Result<_>>()?;
                let crit = config.x_alpha * (2.0 * config.m as f64).sqrt() + config.m as f64 - 1.0;
                (0..mc.replicates as u64)
                    .into_par_iter()
                    .map(|r| {
                        let u = sorted_uniforms(config.n, StreamKey::new(mc.seed, stream, r));
                        edges
                            .iter()
                            .map(|e| {
                                // X = F^{-1}(U) lies in cell l iff U ∈ [F(l/m), F((l+1)/m))
                                let cuts: Vec<usize> = e.iter().map(|&b| u.partition_point(|&x| x < b)).collect();
                                let mut counts: Vec<u64> = cuts.windows(2).map(|w| (w[1] - w[0]) as u64).collect();
                                counts[config.m - 1] += (config.n - cuts[config.m]) as u64;
                                counts[0] += cuts[0] as u64;
                                chi2_from_counts(&counts, config.n) > crit
                            })
                            .collect()
                    })
                    .collect()
            }
            PreparedTest::Cvm { n, critical } => {
                let densities: Vec<DensitySpec> = signals
                    .iter()
                    .map(|s| DensitySpec::new(s.clone()))
                    .collect::<Result<_>>()?;
                (0..mc.replicates as u64)
                    .into_par_iter()
                    .map(|r| {
                        let u = sorted_uniforms(*n, StreamKey::new(mc.seed, stream, r));
                        densities
                            .iter()
                            .map(|d| {
                                if d.signal.coeffs().iter().all(|&c| c == 0.0) {
                                    return cvm_sorted(&u) > *critical;
                                }
                                let mut x = 0.0_f64;
                                let xs: Vec<f64> = u
                                    .iter()
                                    .map(|&ui| {
                                        x = d.inverse_cdf_from(ui, x.max(ui * 0.5));
                                        x
                                    })
                                    .collect();
                                cvm_sorted(&xs) > *critical
                            })
                            .collect()
                    })
                    .collect()
            }
        };
        Ok(RejectionMatrix {
            signals: signals.len(),
            replicates: mc.replicates,
            seed: mc.seed,
            stream,
            rows,
        })
    }

    /// Null rejection rate on the zero signal.
    pub fn estimate_size(&self, zero: &SignalSpec, mc: &McSettings, stream: u64) -> Result<MCEstimate> {
        Ok(self.rejections(std::slice::from_ref(zero), mc, stream)?.estimate(0))
    }

    pub fn estimate_power(&self, signal: &SignalSpec, mc: &McSettings, stream: u64) -> Result<MCEstimate> {
        Ok(self.rejections(std::slice::from_ref(signal), mc, stream)?.estimate(0))
    }

    /// Asymptotic type II error where the family has a formula.
    pub fn predicted_beta(&self, signal: &SignalSpec) -> Result<Option<f64>> {
        Ok(match self {
            PreparedTest::Quad { profile, config } => {
                let r = noncentrality(signal, profile, config.sigma);
                Some(predicted_beta(config.x_alpha, r / (2.0 * profile.a_n(config.sigma)).sqrt()))
            }
            PreparedTest::Kernel { config } => Some(predicted_beta(config.x_alpha, kernel_drift(signal, config)?)),
            PreparedTest::Chi2 { config } => {
                let pop = crate::chi2::chi2_population(signal, config.m, config.n)?;
                Some(predicted_beta(config.x_alpha, config.drift(pop)))
            }
            PreparedTest::Fixed { .. } | PreparedTest::Cvm { .. } => None,
        })
    }

    /// Drift entering the power formula (or the CvM index `n T²`).
    pub fn drift(&self, signal: &SignalSpec) -> Result<f64> {
        Ok(match self {
            PreparedTest::Quad { profile, config } => {
                noncentrality(signal, profile, config.sigma) / (2.0 * profile.a_n(config.sigma)).sqrt()
            }
            PreparedTest::Kernel { config } => kernel_drift(signal, config)?,
            PreparedTest::Chi2 { config } => config.drift(crate::chi2::chi2_population(signal, config.m, config.n)?),
            PreparedTest::Fixed { kappa, .. } => kappa.functional(signal.coeffs()),
            PreparedTest::Cvm { n, .. } => *n as f64 * crate::cvm::cvm_population(signal)?,
        })
    }
}
