//! Consistent, inconsistent and spike-tail alternative sequences, their
//! head/tail decompositions, finite-n classification and density checks.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::classes::besov_seminorm;
use crate::error::{Error, Result};
use crate::quad::KappaProfile;
use crate::rng::StreamKey;
use crate::signal::{check_nonnegativity, Basis, NonnegativityReport, SignalSpec, DEFAULT_CHECK_GRID};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    Quad,
    Kernel,
    Chi2,
    Cvm,
}

impl Family {
    pub const ALL: [Family; 4] = [Family::Quad, Family::Kernel, Family::Chi2, Family::Cvm];

    pub fn name(self) -> &'static str {
        match self {
            Family::Quad => "quad",
            Family::Kernel => "kernel",
            Family::Chi2 => "chi2",
            Family::Cvm => "cvm",
        }
    }

    /// Basis on which the family's statistic reads coefficients.
    pub fn basis(self) -> Basis {
        match self {
            Family::Quad | Family::Cvm => Basis::CosinePi,
            Family::Kernel | Family::Chi2 => Basis::TrigFull,
        }
    }

    /// Smoothness index `s` matched to the rate `r`.
    pub fn smoothness(self, r: f64) -> f64 {
        match self {
            Family::Cvm => 2.0 * r / (1.0 - 2.0 * r),
            _ => r / (2.0 - 4.0 * r),
        }
    }
}

fn check_rate(r: f64) -> Result<()> {
    if r > 0.0 && r <= 0.5 {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "r",
            value: r,
            expected: "(0, 1/2]",
        })
    }
}

/// Effective band `k_n` of a family.
///
/// Quad reads the profile's cumulative definition; the other families use
/// `[n^{2-4r}]`, `[n^{2/(1+4s)}]` and `[n^{(1-2r)/2}]` with `[·]` the floor.
/// At `r = 1/2` every family has `k_n = 1`.
pub fn family_k_n(family: Family, r: f64, n: usize, profile: Option<&KappaProfile>) -> Result<usize> {
    check_rate(r)?;
    if r == 0.5 {
        return Ok(1);
    }
    let nf = n as f64;
    let k = match family {
        Family::Quad => {
            let p = profile.ok_or_else(|| Error::precondition("the quad family needs a kappa profile"))?;
            return p
                .at(n)
                .map(|a| a.k_n)
                .ok_or_else(|| Error::precondition(format!("profile has no entry for n = {n}")));
        }
        Family::Kernel => nf.powf(2.0 - 4.0 * r),
        Family::Chi2 => nf.powf(2.0 / (1.0 + 4.0 * family.smoothness(r))),
        Family::Cvm => nf.powf((1.0 - 2.0 * r) / 2.0),
    };
    // tolerate representation error at exact powers
    Ok(((k * (1.0 + 1e-12)).floor() as usize).max(1))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MassProfile {
    /// All mass at frequency 1.
    Lowest,
    /// Equal mass on every frequency `j < c₂ k_n`.
    Spread,
    /// Random directions within `j < c₂ k_n`.
    Random,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Construction {
    Consistent { c1: f64, c2: f64, profile: MassProfile },
    Inconsistent { factors: Vec<f64> },
    Sum,
    Head { cutoff_factor: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SequenceEntry {
    pub n: usize,
    pub k_n: usize,
    pub signal: SignalSpec,
    pub norm: f64,
}

/// `n ↦ f_n` with `c n^{-r} ≤ ‖f_n‖ ≤ C n^{-r}` at every stored `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AlternativeSequence {
    pub family: Family,
    pub r: f64,
    pub envelope: (f64, f64),
    pub construction: Construction,
    pub entries: Vec<SequenceEntry>,
}

impl AlternativeSequence {
    fn from_signals(
        family: Family,
        r: f64,
        construction: Construction,
        items: Vec<(usize, usize, SignalSpec)>,
    ) -> Self {
        let entries: Vec<SequenceEntry> = items
            .into_iter()
            .map(|(n, k_n, signal)| SequenceEntry {
                n,
                k_n,
                norm: signal.norm(),
                signal,
            })
            .collect();
        let scaled = entries.iter().map(|e| e.norm * (e.n as f64).powf(r));
        let envelope = scaled.fold((f64::INFINITY, 0.0f64), |(lo, hi), x| (lo.min(x), hi.max(x)));
        Self {
            family,
            r,
            envelope,
            construction,
            entries,
        }
    }

    pub fn n_list(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.n).collect()
    }

    pub fn entry(&self, n: usize) -> Option<&SequenceEntry> {
        self.entries.iter().find(|e| e.n == n)
    }

    /// Coefficient-wise sum at matching `n`.
    pub fn plus(&self, other: &AlternativeSequence) -> Result<AlternativeSequence> {
        if self.family != other.family || self.n_list() != other.n_list() {
            return Err(Error::precondition("sequences must share family and n_list"));
        }
        let items = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| Ok((a.n, a.k_n, a.signal.add(&b.signal)?)))
            .collect::<Result<_>>()?;
        Ok(Self::from_signals(self.family, self.r, Construction::Sum, items))
    }

    /// Heads `j < c k_n` of every entry.
    pub fn heads(&self, cutoff_factor: f64) -> AlternativeSequence {
        let items = self
            .entries
            .iter()
            .map(|e| (e.n, e.k_n, decompose(&e.signal, cutoff_factor * e.k_n as f64).0))
            .collect();
        Self::from_signals(self.family, self.r, Construction::Head { cutoff_factor }, items)
    }
}

/// Parameters of [`make_consistent`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistentSpec {
    pub family: Family,
    pub r: f64,
    /// Lower bound of the head mass, in units of `n^{-2r}`.
    pub c1: f64,
    /// Band factor: mass sits on frequencies `j < c₂ k_n`.
    pub c2: f64,
    /// `‖f_n‖ = amplitude · n^{-r}`.
    pub amplitude: f64,
    pub profile: MassProfile,
    pub n_list: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
}

fn band_top(c2: f64, k_n: usize) -> usize {
    // largest integer frequency strictly below c₂ k_n
    ((c2 * k_n as f64).ceil() as usize).saturating_sub(1).max(1)
}

fn coord(basis: Basis, freq: usize, sine: bool) -> usize {
    (freq - 1) * basis.coords_per_frequency() + usize::from(sine && basis == Basis::TrigFull)
}

/// Sequence with `Σ_{j<c₂k_n} θ² = ‖f_n‖² ≥ c₁ n^{-2r}`.
pub fn make_consistent(spec: &ConsistentSpec, profile: Option<&KappaProfile>) -> Result<AlternativeSequence> {
    check_rate(spec.r)?;
    if spec.c1 > spec.amplitude * spec.amplitude {
        return Err(Error::precondition(format!(
            "infeasible envelope: c1 = {} exceeds C² = {}",
            spec.c1,
            spec.amplitude * spec.amplitude
        )));
    }
    if !(spec.c2 > 1.0) || spec.c1 <= 0.0 {
        return Err(Error::precondition("need c2 > 1 and c1 > 0"));
    }
    let basis = spec.family.basis();
    let mut items = Vec::new();
    for &n in &spec.n_list {
        let k_n = family_k_n(spec.family, spec.r, n, profile)?;
        let top = band_top(spec.c2, k_n);
        let len = top * basis.coords_per_frequency();
        let mut coeffs = vec![0.0; len];
        match spec.profile {
            MassProfile::Lowest => coeffs[0] = 1.0,
            MassProfile::Spread => {
                for f in 1..=top {
                    coeffs[coord(basis, f, false)] = 1.0;
                }
            }
            MassProfile::Random => {
                let mut rng = StreamKey::new(spec.seed, n as u64, 0).rng();
                for c in coeffs.iter_mut() {
                    *c = rng.random_range(-1.0..1.0);
                }
            }
        }
        let target = spec.amplitude * (n as f64).powf(-spec.r);
        let norm = coeffs.iter().map(|c| c * c).sum::<f64>().sqrt();
        let signal = SignalSpec::new(basis, coeffs.iter().map(|c| c * target / norm).collect())?;
        items.push((n, k_n, signal));
    }
    Ok(AlternativeSequence::from_signals(
        spec.family,
        spec.r,
        Construction::Consistent {
            c1: spec.c1,
            c2: spec.c2,
            profile: spec.profile,
        },
        items,
    ))
}

/// Spike at frequency `⌈G_n k_n⌉` with `‖f_n‖ = amplitude · n^{-r}`.
///
/// The factors `G_n` must be strictly increasing along `n_list` so that
/// the support separates from every fixed multiple of `k_n`.
pub fn make_inconsistent(
    family: Family,
    r: f64,
    factors: &[f64],
    n_list: &[usize],
    amplitude: f64,
    profile: Option<&KappaProfile>,
) -> Result<AlternativeSequence> {
    check_rate(r)?;
    if factors.len() != n_list.len() {
        return Err(Error::LengthMismatch {
            expected: n_list.len(),
            got: factors.len(),
        });
    }
    if factors.windows(2).any(|w| w[1] <= w[0]) || factors.iter().any(|&g| !(g >= 1.0)) {
        return Err(Error::precondition(format!(
            "growth schedule must be ≥ 1 and strictly increasing, got {factors:?}"
        )));
    }
    let basis = family.basis();
    let mut items = Vec::new();
    for (&n, &g) in n_list.iter().zip(factors) {
        let k_n = family_k_n(family, r, n, profile)?;
        let freq = (g * k_n as f64).ceil() as usize;
        let value = amplitude * (n as f64).powf(-r);
        items.push((n, k_n, SignalSpec::spike(basis, coord(basis, freq, false), value)));
    }
    Ok(AlternativeSequence::from_signals(
        family,
        r,
        Construction::Inconsistent {
            factors: factors.to_vec(),
        },
        items,
    ))
}

/// Head (frequencies `< cutoff`) and tail; an exact coordinate split.
pub fn decompose(signal: &SignalSpec, cutoff: f64) -> (SignalSpec, SignalSpec) {
    let head = signal.filter_frequencies(|j| (j as f64) < cutoff);
    let tail = signal.filter_frequencies(|j| (j as f64) >= cutoff);
    (head, tail)
}

/// Certificate that a head below `cutoff` lies in a Besov ball:
/// `seminorm(head) ≤ (cutoff - 1)^{2s} ‖head‖²`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadBallCertificate {
    pub seminorm: f64,
    pub radius: f64,
    pub ok: bool,
}

pub fn head_ball_certificate(head: &SignalSpec, cutoff: f64, s: f64) -> Result<HeadBallCertificate> {
    let seminorm = besov_seminorm(head, s)?;
    let top = head.support_max().max(1) as f64;
    let radius = top.min((cutoff - 1.0).max(1.0)).powf(2.0 * s) * head.norm_sq();
    Ok(HeadBallCertificate {
        seminorm,
        radius,
        ok: seminorm <= radius * (1.0 + 1e-12),
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Head mass lower bound in units of `n^{-2r}`.
    pub c1: f64,
    /// Head band factor.
    pub c2: f64,
    /// Small-mass level in units of `n^{-2r}`.
    pub eps: f64,
    /// Far-tail band factor.
    #[serde(rename = "C1")]
    pub far: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    ConsistentWitness,
    InconsistentWitness,
    PurelyConsistentWitness,
    Indeterminate,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvidenceRow {
    pub n: usize,
    pub k_n: usize,
    /// `‖f_n‖² n^{2r}`.
    pub norm_ratio: f64,
    /// `Σ_{j<c₂k_n} θ² · n^{2r}`.
    pub head_ratio: f64,
    /// `Σ_{j>C₁k_n} θ² · n^{2r}`.
    pub far_tail_ratio: f64,
}

/// Verdicts hold only for the stored `n` and the given thresholds.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    /// Consistency class from the head-mass surrogates.
    pub verdict: Verdict,
    /// `PurelyConsistentWitness` when the far-tail surrogate also holds at every n,
    /// `Indeterminate` otherwise; absent unless the sequence is a consistent witness.
    pub purity: Option<Verdict>,
    pub thresholds: Thresholds,
    pub evidence: Vec<EvidenceRow>,
}

pub fn classify(seq: &AlternativeSequence, thresholds: Thresholds) -> Result<Classification> {
    if seq.entries.len() < 3 {
        return Err(Error::precondition("classification needs at least 3 stored n"));
    }
    let evidence: Vec<EvidenceRow> = seq
        .entries
        .iter()
        .map(|e| {
            let unit = (e.n as f64).powf(2.0 * seq.r);
            let k = e.k_n as f64;
            EvidenceRow {
                n: e.n,
                k_n: e.k_n,
                norm_ratio: e.signal.norm_sq() * unit,
                head_ratio: e.signal.mass_below(thresholds.c2 * k) * unit,
                far_tail_ratio: e.signal.mass_above(thresholds.far * k) * unit,
            }
        })
        .collect();
    let con2 = evidence.iter().all(|row| row.head_ratio > thresholds.c1);
    let con3 = evidence.iter().all(|row| row.head_ratio < thresholds.eps)
        && evidence.windows(2).all(|w| w[1].head_ratio <= w[0].head_ratio);
    let con19 = evidence.iter().all(|row| row.far_tail_ratio <= thresholds.eps);
    let verdict = if con2 {
        Verdict::ConsistentWitness
    } else if con3 {
        Verdict::InconsistentWitness
    } else {
        Verdict::Indeterminate
    };
    let purity = con2.then_some(if con19 {
        Verdict::PurelyConsistentWitness
    } else {
        Verdict::Indeterminate
    });
    Ok(Classification {
        verdict,
        purity,
        thresholds,
        evidence,
    })
}

/// `Σ |θ_k| · √2 < 1` guarantees `1 + f > 0` everywhere.
pub fn sup_norm_bound(signal: &SignalSpec) -> f64 {
    std::f64::consts::SQRT_2 * signal.coeffs().iter().map(|c| c.abs()).sum::<f64>()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensityRow {
    pub n: usize,
    pub cutoff: f64,
    pub signal: NonnegativityReport,
    pub head: NonnegativityReport,
    pub tail: NonnegativityReport,
}

impl DensityRow {
    pub fn ok(&self) -> bool {
        self.signal.ok() && self.head.ok() && self.tail.ok()
    }
}

/// Grid verdicts for `1 + f_n` and the split at `cutoff_factor · k_n`.
pub fn densitize(seq: &AlternativeSequence, cutoff_factor: f64) -> Result<Vec<DensityRow>> {
    if !matches!(seq.family, Family::Chi2 | Family::Cvm) {
        return Err(Error::precondition("density checks apply to the chi2 and cvm families"));
    }
    Ok(seq
        .entries
        .iter()
        .map(|e| {
            let cutoff = cutoff_factor * e.k_n as f64;
            let (head, tail) = decompose(&e.signal, cutoff);
            DensityRow {
                n: e.n,
                cutoff,
                signal: check_nonnegativity(&e.signal, DEFAULT_CHECK_GRID),
                head: check_nonnegativity(&head, DEFAULT_CHECK_GRID),
                tail: check_nonnegativity(&tail, DEFAULT_CHECK_GRID),
            }
        })
        .collect())
}

/// One step of the maxiset counterexample: the tail `η_l` of a non-member
/// `τ` past `m_l`, with `n_l` chosen so that `‖η_l‖ ≈ n_l^{-r}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpikeTailStep {
    pub m: usize,
    /// `C_l = m_l^{2s} Σ_{j≥m_l} τ_j²`.
    pub c_l: f64,
    pub n: usize,
    pub eta: SignalSpec,
}

pub fn spike_tail_witness(tau: &SignalSpec, s: f64, r: f64, m_list: &[usize]) -> Result<Vec<SpikeTailStep>> {
    check_rate(r)?;
    if m_list.windows(2).any(|w| w[1] <= w[0]) || m_list.first() == Some(&0) {
        return Err(Error::precondition("m_list must be positive and strictly increasing"));
    }
    m_list
        .iter()
        .map(|&m| {
            let eta = tau.filter_frequencies(|j| j >= m);
            let mass = eta.norm_sq();
            if mass <= 0.0 {
                return Err(Error::precondition(format!("τ has no mass at or past m = {m}")));
            }
            Ok(SpikeTailStep {
                m,
                c_l: (m as f64).powf(2.0 * s) * mass,
                n: mass.powf(-1.0 / (2.0 * r)).round().max(1.0) as usize,
                eta,
            })
        })
        .collect()
}
