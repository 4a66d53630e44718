//! Finite Fourier signals, the two observation models, and empirical CDFs.
//!
//! A [`SignalSpec`] stores real coefficients on one of three orthonormal
//! systems of L2(0,1). For `TrigFull` the coefficients are interleaved
//! `(a_1, b_1, a_2, b_2, ...)` against `√2 cos(2πjt)`, `√2 sin(2πjt)`. Every
//! coordinate has a *frequency* index `j ≥ 1`; heads and tails are always
//! split by frequency.

use std::f64::consts::{PI, SQRT_2};

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::{fill_standard_normal, open_unit, StreamKey};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Basis {
    /// `√2 cos(πjt)`, j ≥ 1.
    CosinePi,
    /// Pairs `√2 cos(2πjt)`, `√2 sin(2πjt)`, j ≥ 1.
    TrigFull,
    /// `√2 sin(πjt)`, j ≥ 1.
    SinePi,
}

impl Basis {
    pub fn coords_per_frequency(self) -> usize {
        match self {
            Basis::TrigFull => 2,
            _ => 1,
        }
    }

    /// Frequency index (≥ 1) of the coordinate at position `coord`.
    #[inline]
    pub fn frequency_of(self, coord: usize) -> usize {
        coord / self.coords_per_frequency() + 1
    }

    /// Value of the basis element at coordinate `coord`.
    pub fn element(self, coord: usize, t: f64) -> f64 {
        let j = self.frequency_of(coord) as f64;
        match self {
            Basis::CosinePi => SQRT_2 * (PI * j * t).cos(),
            Basis::SinePi => SQRT_2 * (PI * j * t).sin(),
            Basis::TrigFull if coord % 2 == 0 => SQRT_2 * (2.0 * PI * j * t).cos(),
            Basis::TrigFull => SQRT_2 * (2.0 * PI * j * t).sin(),
        }
    }

    /// Closed-form antiderivative `∫_0^x` of the element at `coord`.
    pub fn element_integral(self, coord: usize, x: f64) -> f64 {
        let j = self.frequency_of(coord) as f64;
        match self {
            Basis::CosinePi => SQRT_2 * (PI * j * x).sin() / (PI * j),
            Basis::SinePi => SQRT_2 * (1.0 - (PI * j * x).cos()) / (PI * j),
            Basis::TrigFull => {
                let w = 2.0 * PI * j;
                if coord % 2 == 0 {
                    SQRT_2 * (w * x).sin() / w
                } else {
                    SQRT_2 * (1.0 - (w * x).cos()) / w
                }
            }
        }
    }
}

#[derive(Deserialize)]
struct RawSignal {
    basis: Basis,
    coeffs: Vec<f64>,
}

/// Finite expansion `f = Σ θ_k φ_k` on a declared basis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawSignal")]
pub struct SignalSpec {
    pub basis: Basis,
    coeffs: Vec<f64>,
}

impl TryFrom<RawSignal> for SignalSpec {
    type Error = Error;
    fn try_from(raw: RawSignal) -> Result<Self> {
        SignalSpec::new(raw.basis, raw.coeffs)
    }
}

impl SignalSpec {
    pub fn new(basis: Basis, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() % basis.coords_per_frequency() != 0 {
            return Err(Error::precondition(
                "trig_full coefficients must come in (cos, sin) pairs",
            ));
        }
        if let Some(bad) = coeffs.iter().find(|c| !c.is_finite()) {
            return Err(Error::precondition(format!("non-finite coefficient {bad}")));
        }
        Ok(Self { basis, coeffs })
    }

    pub fn zeros(basis: Basis, frequencies: usize) -> Self {
        Self {
            basis,
            coeffs: vec![0.0; frequencies * basis.coords_per_frequency()],
        }
    }

    /// Signal with a single coefficient `value` at coordinate `coord`.
    pub fn spike(basis: Basis, coord: usize, value: f64) -> Self {
        let cpf = basis.coords_per_frequency();
        let len = (coord / cpf + 1) * cpf;
        let mut coeffs = vec![0.0; len];
        coeffs[coord] = value;
        Self { basis, coeffs }
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    /// Number of stored coordinates.
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Truncation index J (number of frequencies).
    pub fn frequencies(&self) -> usize {
        self.coeffs.len() / self.basis.coords_per_frequency()
    }

    pub fn norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }

    /// Squared coefficient mass per frequency, index `j - 1`.
    pub fn frequency_masses(&self) -> Vec<f64> {
        self.coeffs
            .chunks(self.basis.coords_per_frequency())
            .map(|c| c.iter().map(|x| x * x).sum())
            .collect()
    }

    /// Largest frequency with a nonzero coefficient (0 for the zero signal).
    pub fn support_max(&self) -> usize {
        self.coeffs
            .iter()
            .rposition(|&c| c != 0.0)
            .map_or(0, |k| self.basis.frequency_of(k))
    }

    /// Smallest frequency with a nonzero coefficient.
    pub fn support_min(&self) -> Option<usize> {
        self.coeffs
            .iter()
            .position(|&c| c != 0.0)
            .map(|k| self.basis.frequency_of(k))
    }

    /// Mass `Σ θ_j²` over frequencies `j < cutoff`.
    pub fn mass_below(&self, cutoff: f64) -> f64 {
        self.coeff_iter()
            .filter(|&(j, _)| (j as f64) < cutoff)
            .map(|(_, c)| c * c)
            .sum()
    }

    /// Mass `Σ θ_j²` over frequencies `j > cutoff`.
    pub fn mass_above(&self, cutoff: f64) -> f64 {
        self.coeff_iter()
            .filter(|&(j, _)| (j as f64) > cutoff)
            .map(|(_, c)| c * c)
            .sum()
    }

    /// Iterator of `(frequency, coefficient)`.
    pub fn coeff_iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        let b = self.basis;
        self.coeffs
            .iter()
            .enumerate()
            .map(move |(k, &c)| (b.frequency_of(k), c))
    }

    /// `f(t)` for `t ∈ (0, 1)`.
    pub fn evaluate(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < 1.0) {
            return Err(Error::Domain {
                what: "t",
                value: t,
                expected: "(0, 1)",
            });
        }
        Ok(self.value_at(t))
    }

    /// `f(t)` without the domain check; the closed interval is allowed.
    pub fn value_at(&self, t: f64) -> f64 {
        match self.basis {
            Basis::TrigFull => self
                .coeffs
                .chunks_exact(2)
                .enumerate()
                .map(|(i, ab)| {
                    let (s, c) = (2.0 * PI * (i + 1) as f64 * t).sin_cos();
                    ab[0] * c + ab[1] * s
                })
                .sum::<f64>()
                * SQRT_2,
            _ => self
                .coeffs
                .iter()
                .enumerate()
                .map(|(k, &c)| c * self.basis.element(k, t))
                .sum(),
        }
    }

    /// `∫_0^x f`.
    pub fn integral_to(&self, x: f64) -> f64 {
        self.coeffs
            .iter()
            .enumerate()
            .filter(|(_, &c)| c != 0.0)
            .map(|(k, &c)| c * self.basis.element_integral(k, x))
            .sum()
    }

    /// Distribution function `F(x) = x + ∫_0^x f` of the density `1 + f`.
    pub fn cdf(&self, x: f64) -> f64 {
        x + self.integral_to(x)
    }

    /// `(F(x), 1 + f(x))` in one pass.
    fn cdf_and_density(&self, x: f64) -> (f64, f64) {
        let mut integral = 0.0;
        let mut value = 0.0;
        for (k, &c) in self.coeffs.iter().enumerate() {
            if c == 0.0 {
                continue;
            }
            let j = self.basis.frequency_of(k) as f64;
            match self.basis {
                Basis::CosinePi => {
                    let w = PI * j;
                    let (s, co) = (w * x).sin_cos();
                    integral += c * SQRT_2 * s / w;
                    value += c * SQRT_2 * co;
                }
                Basis::SinePi => {
                    let w = PI * j;
                    let (s, co) = (w * x).sin_cos();
                    integral += c * SQRT_2 * (1.0 - co) / w;
                    value += c * SQRT_2 * s;
                }
                Basis::TrigFull => {
                    let w = 2.0 * PI * j;
                    let (s, co) = (w * x).sin_cos();
                    if k % 2 == 0 {
                        integral += c * SQRT_2 * s / w;
                        value += c * SQRT_2 * co;
                    } else {
                        integral += c * SQRT_2 * (1.0 - co) / w;
                        value += c * SQRT_2 * s;
                    }
                }
            }
        }
        (x + integral, 1.0 + value)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            basis: self.basis,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    /// Coefficient-wise sum; the shorter signal is zero-padded.
    pub fn add(&self, other: &SignalSpec) -> Result<Self> {
        if self.basis != other.basis {
            return Err(Error::precondition("cannot add signals on different bases"));
        }
        let len = self.len().max(other.len());
        let coeffs = (0..len)
            .map(|k| self.coeffs.get(k).copied().unwrap_or(0.0) + other.coeffs.get(k).copied().unwrap_or(0.0))
            .collect();
        Ok(Self {
            basis: self.basis,
            coeffs,
        })
    }

    /// Coordinates `[0, len)`, zero-padded or truncated.
    pub fn padded(&self, len: usize) -> Vec<f64> {
        let mut v = vec![0.0; len];
        let k = len.min(self.coeffs.len());
        v[..k].copy_from_slice(&self.coeffs[..k]);
        v
    }

    /// Keep coordinates whose frequency satisfies `keep`.
    pub fn filter_frequencies(&self, keep: impl Fn(usize) -> bool) -> Self {
        let b = self.basis;
        let coeffs = self
            .coeffs
            .iter()
            .enumerate()
            .map(|(k, &c)| if keep(b.frequency_of(k)) { c } else { 0.0 })
            .collect();
        Self { basis: b, coeffs }
    }

    /// Complex exponential coefficients `θ_j = ∫ e^{2πijt} f(t) dt`, `|j| ≤ J`.
    pub fn to_complex(&self) -> Result<ComplexCoeffs> {
        if self.basis != Basis::TrigFull {
            return Err(Error::precondition(
                "complex exponential coefficients need the trig_full basis",
            ));
        }
        let big_j = self.frequencies();
        let mut values = vec![Complex64::new(0.0, 0.0); 2 * big_j + 1];
        for (i, ab) in self.coeffs.chunks_exact(2).enumerate() {
            let c = Complex64::new(ab[0], ab[1]) / SQRT_2;
            values[big_j + i + 1] = c;
            values[big_j - i - 1] = c.conj();
        }
        Ok(ComplexCoeffs {
            max_frequency: big_j,
            values,
        })
    }
}

/// Two-sided complex coefficients `θ_j`, `-J ≤ j ≤ J`, of a real signal.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexCoeffs {
    pub max_frequency: usize,
    values: Vec<Complex64>,
}

impl ComplexCoeffs {
    /// Build from the nonnegative half; negative frequencies are conjugates.
    pub fn from_positive(positive: &[Complex64]) -> Self {
        let big_j = positive.len();
        let mut values = vec![Complex64::new(0.0, 0.0); 2 * big_j + 1];
        for (i, &c) in positive.iter().enumerate() {
            values[big_j + i + 1] = c;
            values[big_j - i - 1] = c.conj();
        }
        Self {
            max_frequency: big_j,
            values,
        }
    }

    #[inline]
    pub fn get(&self, j: i64) -> Complex64 {
        let big_j = self.max_frequency as i64;
        if j.abs() > big_j {
            Complex64::new(0.0, 0.0)
        } else {
            self.values[(j + big_j) as usize]
        }
    }

    pub fn norm_sq(&self) -> f64 {
        self.values.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn to_signal(&self) -> SignalSpec {
        let coeffs = (1..=self.max_frequency as i64)
            .flat_map(|j| {
                let c = self.get(j) * SQRT_2;
                [c.re, c.im]
            })
            .collect();
        SignalSpec {
            basis: Basis::TrigFull,
            coeffs,
        }
    }
}

/// Gaussian white-noise scale: each sequence-model coordinate has standard
/// deviation `σ/√n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseModel {
    pub sigma: f64,
    pub n: usize,
}

impl NoiseModel {
    pub fn new(sigma: f64, n: usize) -> Result<Self> {
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::Domain {
                what: "sigma",
                value: sigma,
                expected: "(0, ∞)",
            });
        }
        if n == 0 {
            return Err(Error::precondition("sample size n must be positive"));
        }
        Ok(Self { sigma, n })
    }

    pub fn coord_sd(&self) -> f64 {
        self.sigma / (self.n as f64).sqrt()
    }
}

/// One draw of `y_j = θ_j + (σ/√n) ξ_j`, `j < dim`, keyed by `key`.
pub fn sample_sequence_model(
    signal: &SignalSpec,
    noise: &NoiseModel,
    dim: usize,
    key: StreamKey,
) -> Result<Vec<f64>> {
    if dim == 0 {
        return Err(Error::precondition("observation dimension must be ≥ 1"));
    }
    let mut rng = key.rng();
    let mut xi = vec![0.0; dim];
    fill_standard_normal(&mut rng, &mut xi);
    Ok(observe(signal, noise.coord_sd(), &xi))
}

/// `θ + sd·ξ` with `θ` zero-padded (or truncated) to `ξ.len()`.
pub fn observe(signal: &SignalSpec, sd: f64, xi: &[f64]) -> Vec<f64> {
    let mut y: Vec<f64> = xi.iter().map(|x| sd * x).collect();
    for (yk, c) in y.iter_mut().zip(signal.coeffs()) {
        *yk += c;
    }
    y
}

/// Grid verdict on `1 + f ≥ 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NonnegativityReport {
    pub min_value: f64,
    pub argmin: f64,
    pub violating: Vec<f64>,
}

impl NonnegativityReport {
    pub fn ok(&self) -> bool {
        self.violating.is_empty()
    }
}

pub const DEFAULT_CHECK_GRID: usize = 4096;

/// Evaluate `1 + f` on `grid + 1` equispaced points of [0, 1] and refine the
/// lowest local minima by golden-section search.
pub fn check_nonnegativity(signal: &SignalSpec, grid: usize) -> NonnegativityReport {
    let grid = grid.max(2);
    let ts: Vec<f64> = (0..=grid).map(|i| i as f64 / grid as f64).collect();
    let vals: Vec<f64> = ts.iter().map(|&t| 1.0 + signal.value_at(t)).collect();

    let mut minima: Vec<usize> = (0..=grid)
        .filter(|&i| {
            let left = if i == 0 { f64::INFINITY } else { vals[i - 1] };
            let right = if i == grid { f64::INFINITY } else { vals[i + 1] };
            vals[i] <= left && vals[i] <= right
        })
        .collect();
    minima.sort_by(|&a, &b| vals[a].total_cmp(&vals[b]));
    minima.truncate(16);

    let mut violating: Vec<f64> = (0..=grid).filter(|&i| vals[i] < 0.0).map(|i| ts[i]).collect();
    let (mut min_value, mut argmin) = (f64::INFINITY, 0.0);
    for (i, &v) in vals.iter().enumerate() {
        if v < min_value {
            min_value = v;
            argmin = ts[i];
        }
    }
    for &i in &minima {
        let lo = ts[i.saturating_sub(1)];
        let hi = ts[(i + 1).min(grid)];
        let (t, v) = golden_min(|t| 1.0 + signal.value_at(t), lo, hi);
        if v < min_value {
            min_value = v;
            argmin = t;
        }
        if v < 0.0 && vals[i] >= 0.0 {
            violating.push(t);
        }
    }
    violating.sort_by(f64::total_cmp);
    NonnegativityReport {
        min_value,
        argmin,
        violating,
    }
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..60 {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
    }
    let t = 0.5 * (a + b);
    (t, f(t))
}

/// A signal certified to give a probability density `1 + f` on (0, 1).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DensitySpec {
    pub signal: SignalSpec,
    pub check_grid: usize,
}

impl DensitySpec {
    pub fn new(signal: SignalSpec) -> Result<Self> {
        Self::with_grid(signal, DEFAULT_CHECK_GRID)
    }

    pub fn with_grid(signal: SignalSpec, check_grid: usize) -> Result<Self> {
        let report = check_nonnegativity(&signal, check_grid);
        if !report.ok() {
            return Err(Error::NegativeDensity {
                min: report.min_value,
                argmin: report.argmin,
                violating: report.violating,
            });
        }
        Ok(Self { signal, check_grid })
    }

    /// Solve `F(x) = u` by Newton steps safeguarded with bisection.
    pub fn inverse_cdf(&self, u: f64) -> f64 {
        self.inverse_cdf_from(u, u)
    }

    /// [`inverse_cdf`](Self::inverse_cdf) started from `guess`.
    pub fn inverse_cdf_from(&self, u: f64, guess: f64) -> f64 {
        let s = &self.signal;
        let (mut lo, mut hi) = (0.0f64, 1.0f64);
        let mut x = guess.clamp(0.0, 1.0);
        for _ in 0..200 {
            let (fx, dens) = s.cdf_and_density(x);
            let resid = fx - u;
            if resid.abs() <= INVERSION_TOL {
                break;
            }
            if resid > 0.0 {
                hi = x;
            } else {
                lo = x;
            }
            if hi - lo <= 1e-16 {
                break;
            }
            let step = x - resid / dens;
            x = if dens > 1e-12 && step > lo && step < hi {
                step
            } else {
                0.5 * (lo + hi)
            };
        }
        x
    }
}

/// Residual tolerance `|F(x) - u|` of [`DensitySpec::inverse_cdf`].
pub const INVERSION_TOL: f64 = 1e-12;

/// `n` i.i.d. draws from the density `1 + f` by inverse-CDF transform.
pub fn sample_iid<R: Rng + ?Sized>(density: &DensitySpec, n: usize, rng: &mut R) -> Vec<f64> {
    (0..n).map(|_| density.inverse_cdf(open_unit(rng))).collect()
}

/// Inverse-CDF transform of given uniforms; used to pair samples across densities.
pub fn transform_uniforms(density: &DensitySpec, uniforms: &[f64]) -> Vec<f64> {
    uniforms.iter().map(|&u| density.inverse_cdf(u)).collect()
}

/// Right-continuous empirical distribution function.
#[derive(Clone, Debug)]
pub struct EmpiricalCdf {
    sorted: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(points: &[f64]) -> Result<Self> {
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
        let mut sorted = points.to_vec();
        sorted.sort_by(f64::total_cmp);
        Ok(Self { sorted })
    }

    pub fn value(&self, x: f64) -> f64 {
        self.sorted.partition_point(|&p| p <= x) as f64 / self.sorted.len() as f64
    }

    pub fn sorted(&self) -> &[f64] {
        &self.sorted
    }

    pub fn len(&self) -> usize {
        self.sorted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quadrature::GaussLegendre;
    use crate::stats::ks_distance_one_sample;

    #[test]
    fn evaluate_trivial_cases() {
        let z = SignalSpec::zeros(Basis::CosinePi, 4);
        assert_eq!(z.evaluate(0.37).unwrap(), 0.0);
        let s = SignalSpec::new(Basis::CosinePi, vec![1.0]).unwrap();
        assert!(s.evaluate(0.5).unwrap().abs() < 1e-15);
        assert!(s.evaluate(0.0).is_err());
        assert!(s.evaluate(1.0).is_err());
        assert!(s.evaluate(f64::NAN).is_err());
    }

    #[test]
    fn evaluate_matches_term_by_term_sum() {
        // independent summation over the explicit formula
        let s = SignalSpec::new(Basis::CosinePi, vec![1.0, 0.5]).unwrap();
        let t: f64 = 0.25;
        let oracle = 2f64.sqrt() * (PI * t).cos() + 0.5 * 2f64.sqrt() * (2.0 * PI * t).cos();
        assert!((s.evaluate(t).unwrap() - oracle).abs() < 1e-15);
        assert!((oracle - 1.0).abs() < 1e-15);
    }

    #[test]
    fn orthonormality_up_to_64() {
        let rule = GaussLegendre::new(20);
        for basis in [Basis::CosinePi, Basis::SinePi, Basis::TrigFull] {
            let coords = 64 * basis.coords_per_frequency();
            let step = if basis == Basis::TrigFull { 7 } else { 3 };
            for a in (0..coords).step_by(step) {
                for b in (a..coords).step_by(5) {
                    let ip = rule.composite(|t| basis.element(a, t) * basis.element(b, t), 0.0, 1.0, 64);
                    let want = if a == b { 1.0 } else { 0.0 };
                    assert!((ip - want).abs() < 1e-10, "{basis:?} {a} {b}: {ip}");
                }
            }
        }
    }

    #[test]
    fn antiderivatives_match_quadrature() {
        let rule = GaussLegendre::new(20);
        for basis in [Basis::CosinePi, Basis::SinePi, Basis::TrigFull] {
            for coord in [0, 1, 5, 12] {
                let x = 0.731;
                let q = rule.composite(|t| basis.element(coord, t), 0.0, x, 16);
                assert!((q - basis.element_integral(coord, x)).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn trig_full_needs_pairs() {
        assert!(SignalSpec::new(Basis::TrigFull, vec![1.0]).is_err());
        let bad: std::result::Result<SignalSpec, _> =
            serde_json::from_str(r#"{"basis":"trig_full","coeffs":[1.0,2.0,3.0]}"#);
        assert!(bad.is_err());
    }

    #[test]
    fn json_field_order_is_stable() {
        let s = SignalSpec::new(Basis::CosinePi, vec![0.5, -0.25]).unwrap();
        let txt = serde_json::to_string(&s).unwrap();
        assert_eq!(txt, r#"{"basis":"cosine_pi","coeffs":[0.5,-0.25]}"#);
        let back: SignalSpec = serde_json::from_str(&txt).unwrap();
        assert_eq!(back, s);
    }

    #[test]
    fn complex_conversion_hermitian() {
        let s = SignalSpec::new(Basis::TrigFull, vec![0.3, -0.2, 0.0, 0.7]).unwrap();
        let c = s.to_complex().unwrap();
        for j in 1..=2i64 {
            assert_eq!(c.get(j), c.get(-j).conj());
        }
        assert!((c.norm_sq() - s.norm_sq()).abs() < 1e-15);
        assert!(SignalSpec::zeros(Basis::CosinePi, 2).to_complex().is_err());
    }

    #[test]
    fn sequence_model_determinism_and_moments() {
        let theta = SignalSpec::new(Basis::CosinePi, vec![0.0; 4]).unwrap();
        let noise = NoiseModel::new(1.0, 1).unwrap();
        let a = sample_sequence_model(&theta, &noise, 4, StreamKey::new(1, 2, 3)).unwrap();
        let b = sample_sequence_model(&theta, &noise, 4, StreamKey::new(1, 2, 3)).unwrap();
        assert_eq!(a, b);
        let draws: Vec<f64> = (0..20_000)
            .map(|r| sample_sequence_model(&theta, &noise, 1, StreamKey::new(9, 0, r)).unwrap()[0])
            .collect();
        let (mean, _) = crate::stats::mean_and_se(&draws);
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        // sd of the sample variance is √(2/R) ≈ 0.01
        assert!((var - 1.0).abs() < 0.04, "variance {var}");
        assert!(NoiseModel::new(0.0, 5).is_err());
        assert!(sample_sequence_model(&theta, &noise, 0, StreamKey::new(0, 0, 0)).is_err());
    }

    #[test]
    fn sequence_model_mean_converges_to_theta() {
        let theta = SignalSpec::new(Basis::CosinePi, vec![0.4, -1.1]).unwrap();
        let noise = NoiseModel::new(1.0, 1_000_000).unwrap();
        let reps = 2_000;
        let mut sums = [0.0; 2];
        let mut draws = vec![];
        for r in 0..reps {
            let y = sample_sequence_model(&theta, &noise, 2, StreamKey::new(5, 0, r)).unwrap();
            sums[0] += y[0];
            sums[1] += y[1];
            draws.push(y[0]);
        }
        let se = noise.coord_sd() / (reps as f64).sqrt();
        assert!((sums[0] / reps as f64 - 0.4).abs() < 3.0 * se);
        assert!((sums[1] / reps as f64 + 1.1).abs() < 3.0 * se);
    }

    #[test]
    fn negative_density_rejected() {
        let s = SignalSpec::new(Basis::CosinePi, vec![1.2]).unwrap();
        match DensitySpec::new(s) {
            Err(Error::NegativeDensity { argmin, min, violating }) => {
                assert!(argmin > 0.9);
                assert!(min < 0.0);
                assert!(!violating.is_empty());
            }
            other => panic!("expected a density error, got {other:?}"),
        }
    }

    #[test]
    fn uniform_sampling_passes_ks() {
        let d = DensitySpec::new(SignalSpec::zeros(Basis::TrigFull, 1)).unwrap();
        let mut rng = StreamKey::new(3, 1, 0).rng();
        let n = 100_000;
        let mut xs = sample_iid(&d, n, &mut rng);
        xs.sort_by(f64::total_cmp);
        let dist = ks_distance_one_sample(&xs, |x| x);
        assert!(dist < 1.36 / (n as f64).sqrt(), "KS distance {dist}");
    }

    #[test]
    fn trig_sampling_matches_quadrature_moment() {
        let s = SignalSpec::new(Basis::TrigFull, vec![0.5, 0.0]).unwrap();
        let d = DensitySpec::new(s.clone()).unwrap();
        let mut rng = StreamKey::new(4, 1, 0).rng();
        let n = 100_000;
        let xs = sample_iid(&d, n, &mut rng);
        let emp: Vec<f64> = xs.iter().map(|x| (2.0 * PI * x).cos()).collect();
        let (mean, se) = crate::stats::mean_and_se(&emp);
        let rule = GaussLegendre::new(20);
        let exact = rule.composite(|x| (2.0 * PI * x).cos() * (1.0 + s.value_at(x)), 0.0, 1.0, 32);
        assert!((exact - 0.5 / 2f64.sqrt()).abs() < 1e-12);
        assert!((mean - exact).abs() < 4.0 * se, "mean {mean} vs {exact}");
    }

    #[test]
    fn empirical_cdf_steps() {
        let e = EmpiricalCdf::new(&[0.5]).unwrap();
        assert_eq!(e.value(0.4), 0.0);
        assert_eq!(e.value(0.5), 1.0);
        assert_eq!(e.value(0.6), 1.0);
        assert!(EmpiricalCdf::new(&[]).is_err());
        assert!(EmpiricalCdf::new(&[0.0]).is_err());
    }

    #[test]
    fn empirical_cdf_at_median() {
        let mut rng = StreamKey::new(8, 0, 0).rng();
        let n = 1001;
        let pts: Vec<f64> = (0..n).map(|_| open_unit(&mut rng)).collect();
        let e = EmpiricalCdf::new(&pts).unwrap();
        let med = e.sorted()[n / 2];
        assert!((e.value(med) - 0.5).abs() <= 1.0 / n as f64);
    }
}
