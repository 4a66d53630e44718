//! Besov bodies, finite bands, greedy widths and the compactness diagnostic.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SignalSpec;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BesovVariant {
    /// One-sided index `j ≥ 1`.
    BarB,
    /// Two-sided exponential index; `|θ_j|² + |θ_{-j}|²` is the frequency mass.
    FullB,
    /// `FullB` restricted to `θ_0 = 0`.
    TildeB,
}

/// Ball `{θ : sup_λ λ^{2s} Σ_{j>λ} θ_j² ≤ P₀}`.
///
/// All three variants evaluate the same functional on a [`SignalSpec`]:
/// stored signals carry no constant term and the tail sums only involve
/// `|j| > λ > 0`, so the variant is recorded for provenance.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BesovBody {
    pub s: f64,
    pub p0: f64,
    pub variant: BesovVariant,
}

impl BesovBody {
    pub fn new(s: f64, p0: f64, variant: BesovVariant) -> Result<Self> {
        check_s(s)?;
        if !(p0 > 0.0) {
            return Err(Error::Domain {
                what: "P0",
                value: p0,
                expected: "(0, ∞)",
            });
        }
        Ok(Self { s, p0, variant })
    }

    pub fn contains(&self, signal: &SignalSpec) -> bool {
        seminorm_of_masses(&signal.frequency_masses(), self.s) <= self.p0
    }
}

fn check_s(s: f64) -> Result<()> {
    if s > 0.0 && s.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain {
            what: "s",
            value: s,
            expected: "(0, ∞)",
        })
    }
}

/// `sup_{λ>0} λ^{2s} Σ_{j>λ} θ_j²`, evaluated as `max_{m≥1} m^{2s} Σ_{j≥m} θ_j²`.
pub fn besov_seminorm(signal: &SignalSpec, s: f64) -> Result<f64> {
    check_s(s)?;
    Ok(seminorm_of_masses(&signal.frequency_masses(), s))
}

/// Same functional on per-frequency masses (index `j - 1`).
pub fn seminorm_of_masses(masses: &[f64], s: f64) -> f64 {
    let mut tail = 0.0;
    let mut best = 0.0f64;
    for (i, m) in masses.iter().enumerate().rev() {
        tail += m;
        best = best.max(((i + 1) as f64).powf(2.0 * s) * tail);
    }
    best
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TailBoundReport {
    pub l_n: usize,
    pub tail_sum: f64,
    pub bound: f64,
    pub seminorm: f64,
    pub ok: bool,
}

/// Tail of a Besov member past `l_n = ⌈C₁ n^{r/s}⌉` against `P₀ C₁^{-2s} n^{-2r}`.
pub fn tail_bound_check(
    signal: &SignalSpec,
    s: f64,
    p0: f64,
    r: f64,
    n: usize,
    c1: f64,
) -> Result<TailBoundReport> {
    check_s(s)?;
    if !(c1 > 0.0) {
        return Err(Error::Domain {
            what: "C1",
            value: c1,
            expected: "(0, ∞)",
        });
    }
    let seminorm = besov_seminorm(signal, s)?;
    if seminorm > p0 {
        return Err(Error::precondition(format!(
            "signal is not in the Besov body: seminorm {seminorm} > P0 = {p0}"
        )));
    }
    let n = n as f64;
    let l_n = (c1 * n.powf(r / s)).ceil().max(1.0) as usize;
    let tail_sum = signal.mass_above(l_n as f64 - 0.5);
    let bound = p0 * c1.powf(-2.0 * s) * n.powf(-2.0 * r);
    Ok(TailBoundReport {
        l_n,
        tail_sum,
        bound,
        seminorm,
        ok: tail_sum <= bound * (1.0 + 1e-12),
    })
}

/// `U(l, P₀)`: band-limited to `j ≤ l` with norm at most `P₀`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FiniteBand {
    pub l: usize,
    pub p0: f64,
}

pub const BAND_ZERO_TOL: f64 = 1e-15;

pub fn finite_band_membership(signal: &SignalSpec, band: FiniteBand) -> bool {
    signal
        .coeff_iter()
        .all(|(j, c)| j <= band.l || c.abs() <= BAND_ZERO_TOL)
        && signal.norm() <= band.p0
}

/// Finite-dimensional convex, ortho-symmetric set.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SetDescriptor {
    /// `{θ : Σ θ_j²/a_j² ≤ 1}`.
    Ellipsoid { axes: Vec<f64> },
    /// Symmetric convex hull of the listed points.
    Points { points: Vec<Vec<f64>> },
}

impl SetDescriptor {
    pub fn dim(&self) -> usize {
        match self {
            SetDescriptor::Ellipsoid { axes } => axes.len(),
            SetDescriptor::Points { points } => points.iter().map(Vec::len).max().unwrap_or(0),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            SetDescriptor::Ellipsoid { axes } => {
                if axes.is_empty() {
                    return Err(Error::EmptyDescriptor);
                }
                if let Some(&a) = axes.iter().find(|&&a| !(a > 0.0 && a.is_finite())) {
                    return Err(Error::Domain {
                        what: "semi-axis",
                        value: a,
                        expected: "(0, ∞)",
                    });
                }
            }
            SetDescriptor::Points { points } => {
                if points.is_empty() || self.dim() == 0 {
                    return Err(Error::EmptyDescriptor);
                }
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WidthSequence {
    pub d: Vec<f64>,
    pub basis_vectors: Vec<Vec<f64>>,
}

/// Orthonormal frame of the greedy span.
struct Frame {
    dim: usize,
    q: Vec<DVector<f64>>,
}

impl Frame {
    fn residual(&self, x: &DVector<f64>) -> DVector<f64> {
        let mut r = x.clone();
        // two passes of Gram-Schmidt keep the frame orthogonal to machine precision
        for _ in 0..2 {
            for q in &self.q {
                let c = q.dot(&r);
                r.axpy(-c, q, 1.0);
            }
        }
        r
    }

    fn push(&mut self, x: &DVector<f64>) {
        let r = self.residual(x);
        let norm = r.norm();
        if norm > 1e-13 && self.q.len() < self.dim {
            self.q.push(r / norm);
        }
    }

    /// `P⊥` as a dense matrix.
    fn complement(&self) -> DMatrix<f64> {
        let mut p = DMatrix::identity(self.dim, self.dim);
        for q in &self.q {
            p -= q * q.transpose();
        }
        p
    }
}

/// Greedy widths `d_i = max_{f∈U} ρ(f, span(e_1..e_{i-1}))` and maximizers `e_i`.
pub fn greedy_widths(set: &SetDescriptor, i_max: usize) -> Result<WidthSequence> {
    set.validate()?;
    let dim = set.dim();
    let mut frame = Frame { dim, q: Vec::new() };
    let mut d = Vec::with_capacity(i_max);
    let mut basis_vectors = Vec::with_capacity(i_max);
    let points: Vec<DVector<f64>> = match set {
        SetDescriptor::Points { points } => points
            .iter()
            .map(|p| {
                let mut v = DVector::zeros(dim);
                v.rows_mut(0, p.len()).copy_from_slice(p);
                v
            })
            .collect(),
        SetDescriptor::Ellipsoid { .. } => Vec::new(),
    };

    for _ in 0..i_max {
        let (width, e) = match set {
            SetDescriptor::Ellipsoid { axes } => {
                // max ‖P⊥ D u‖ over ‖u‖ ≤ 1 is the top singular value of P⊥ D
                let dmat = DMatrix::from_diagonal(&DVector::from_column_slice(axes));
                let m = &dmat * frame.complement() * &dmat;
                let eig = SymmetricEigen::new(m);
                let (k, &lam) = eig
                    .eigenvalues
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.total_cmp(b.1))
                    .expect("dimension is positive");
                let e = &dmat * eig.eigenvectors.column(k);
                (lam.max(0.0).sqrt(), e)
            }
            SetDescriptor::Points { .. } => {
                // a convex function peaks at a vertex of the symmetric hull
                points
                    .iter()
                    .map(|p| (frame.residual(p).norm(), p.clone()))
                    .max_by(|a, b| a.0.total_cmp(&b.0))
                    .expect("nonempty point cloud")
            }
        };
        frame.push(&e);
        d.push(width);
        basis_vectors.push(e.iter().copied().collect());
    }
    // clamp solver noise so the sequence is exactly nonincreasing
    for i in 1..d.len() {
        if d[i] > d[i - 1] {
            d[i] = d[i - 1];
        }
    }
    Ok(WidthSequence { d, basis_vectors })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum CompactnessVerdict {
    /// First (1-based) index with `d_i < ε`.
    Decays { index: usize, width: f64 },
    NoDecay { i_max: usize, last_width: f64 },
}

pub fn compactness_diagnostic(
    set: &SetDescriptor,
    epsilon: f64,
    i_max: usize,
) -> Result<CompactnessVerdict> {
    let widths = greedy_widths(set, i_max)?;
    Ok(widths
        .d
        .iter()
        .position(|&w| w < epsilon)
        .map(|i| CompactnessVerdict::Decays {
            index: i + 1,
            width: widths.d[i],
        })
        .unwrap_or(CompactnessVerdict::NoDecay {
            i_max,
            last_width: widths.d.last().copied().unwrap_or(0.0),
        }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Basis;

    fn cos(coeffs: Vec<f64>) -> SignalSpec {
        SignalSpec::new(Basis::CosinePi, coeffs).unwrap()
    }

    #[test]
    fn seminorm_examples() {
        assert_eq!(besov_seminorm(&cos(vec![0.0; 5]), 1.0).unwrap(), 0.0);
        assert!((besov_seminorm(&cos(vec![0.0, 1.0]), 0.5).unwrap() - 2.0).abs() < 1e-15);
        assert!(besov_seminorm(&cos(vec![1.0]), 0.0).is_err());
    }

    #[test]
    fn seminorm_trig_full_groups_pairs() {
        let s = SignalSpec::new(Basis::TrigFull, vec![0.0, 0.0, 0.6, 0.8]).unwrap();
        assert!((besov_seminorm(&s, 0.5).unwrap() - 2.0).abs() < 1e-15);
    }

    #[test]
    fn tail_bound_examples() {
        let spike = cos(vec![1.0]);
        let rep = tail_bound_check(&spike, 0.5, 1.0, 0.25, 100, 1.0).unwrap();
        assert!(rep.l_n >= 2);
        assert_eq!(rep.tail_sum, 0.0);
        assert!(rep.ok);
        assert!(tail_bound_check(&cos(vec![0.0, 0.0, 5.0]), 0.5, 1.0, 0.25, 100, 1.0).is_err());
    }

    #[test]
    fn finite_band_examples() {
        let band = FiniteBand { l: 2, p0: 1.0 };
        assert!(finite_band_membership(&cos(vec![0.0; 4]), band));
        assert!(!finite_band_membership(&cos(vec![0.0, 0.0, 1.0]), band));
        // √0.72 ≈ 0.8485 ≤ 1
        assert!(finite_band_membership(&cos(vec![0.6, 0.6]), band));
    }

    #[test]
    fn widths_ellipsoid_sorted() {
        let set = SetDescriptor::Ellipsoid {
            axes: vec![3.0, 1.0, 2.0],
        };
        let w = greedy_widths(&set, 3).unwrap();
        for (got, want) in w.d.iter().zip([3.0, 2.0, 1.0]) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn widths_single_point() {
        let set = SetDescriptor::Points {
            points: vec![vec![3.0, 4.0]],
        };
        let w = greedy_widths(&set, 2).unwrap();
        assert!((w.d[0] - 5.0).abs() < 1e-15);
        assert!(w.d[1].abs() < 1e-12);
    }

    #[test]
    fn widths_empty_is_error() {
        assert!(matches!(
            greedy_widths(&SetDescriptor::Points { points: vec![] }, 2),
            Err(Error::EmptyDescriptor)
        ));
        assert!(greedy_widths(&SetDescriptor::Ellipsoid { axes: vec![] }, 2).is_err());
    }

    #[test]
    fn compactness_examples() {
        let geometric = SetDescriptor::Ellipsoid {
            axes: (1..=12).map(|j| 2f64.powi(-j)).collect(),
        };
        assert_eq!(
            compactness_diagnostic(&geometric, 0.01, 12).unwrap(),
            CompactnessVerdict::Decays {
                index: 7,
                width: 2f64.powi(-7)
            }
        );
        let cube = SetDescriptor::Ellipsoid { axes: vec![0.5; 6] };
        assert!(matches!(
            compactness_diagnostic(&cube, 0.1, 6).unwrap(),
            CompactnessVerdict::NoDecay { .. }
        ));
        assert!(matches!(
            compactness_diagnostic(&cube, 1.0, 6).unwrap(),
            CompactnessVerdict::Decays { index: 1, .. }
        ));
    }

    #[test]
    fn descriptor_json() {
        let set: SetDescriptor = serde_json::from_str(r#"{"kind":"ellipsoid","axes":[1.0,2.0]}"#).unwrap();
        assert_eq!(set, SetDescriptor::Ellipsoid { axes: vec![1.0, 2.0] });
        let pts: SetDescriptor = serde_json::from_str(r#"{"kind":"points","points":[[1.0],[0.0,2.0]]}"#).unwrap();
        assert_eq!(pts.dim(), 2);
    }
}
