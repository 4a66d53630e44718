//! Quadratic-form statistics `Σ κ²_{nj} y_j² - σ² n^{-1} ρ_n` and the
//! fixed-coefficient statistics `Σ κ²_j z_j²`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::signal::SignalSpec;
use crate::stats::{normal_cdf, upper_quantile};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    Varying,
    Fixed,
}

/// Truncation index of a profile: an absolute count or a multiple of `n^{2-4r}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Truncation {
    Fixed(usize),
    Scaled { scale: f64 },
}

impl Truncation {
    pub fn at(&self, n: usize, r: f64) -> usize {
        match *self {
            Truncation::Fixed(j) => j,
            Truncation::Scaled { scale } => (scale * (n as f64).powf(2.0 - 4.0 * r)).ceil() as usize,
        }
    }
}

/// Generator `κ²_{nj} = n^{-λ}/(j^γ + c n^β)` with `β = (2-4r)γ`, `λ = 2-2r-β`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileSpec {
    pub r: f64,
    pub gamma: f64,
    pub c: f64,
    #[serde(rename = "J")]
    pub truncation: Truncation,
    pub n_list: Vec<usize>,
    pub mode: ProfileMode,
    /// Band-limited variant: `κ² = 0` for `j > l_n = ⌈band_limit · n^{2-4r}⌉`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub band_limit: Option<f64>,
}

impl ProfileSpec {
    pub fn beta(&self) -> f64 {
        (2.0 - 4.0 * self.r) * self.gamma
    }

    pub fn lambda(&self) -> f64 {
        2.0 - 2.0 * self.r - self.beta()
    }

    fn validate(&self) -> Result<()> {
        if !(self.r > 0.0 && self.r < 0.5) {
            return Err(Error::Domain {
                what: "r",
                value: self.r,
                expected: "(0, 1/2)",
            });
        }
        if !(self.gamma > 1.0) {
            return Err(Error::precondition(format!(
                "gamma must exceed 1, got {}",
                self.gamma
            )));
        }
        if !(self.c > 0.0) {
            return Err(Error::Domain {
                what: "c",
                value: self.c,
                expected: "(0, ∞)",
            });
        }
        if self.n_list.is_empty() || self.n_list.contains(&0) {
            return Err(Error::precondition("n_list must be nonempty and positive"));
        }
        if self.mode == ProfileMode::Fixed {
            return Err(Error::precondition(
                "fixed-mode coefficients come from FixedKappa, not the n-indexed generator",
            ));
        }
        Ok(())
    }
}

/// Coefficients at one `n` and the derived quantities.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileAtN {
    pub n: usize,
    pub kappa_sq: Vec<f64>,
    pub rho: f64,
    pub sum_kappa4: f64,
    pub k_n: usize,
    pub kappa_n_sq: f64,
    /// `ρ_n` mass lost to truncation, bounded by the integral of the generator tail.
    pub truncation_tail: f64,
}

impl ProfileAtN {
    /// Build from an explicit coefficient table; checks A1 (nonincreasing).
    pub fn from_table(n: usize, kappa_sq: Vec<f64>) -> Result<Self> {
        check_nonincreasing("A1", &kappa_sq)?;
        Ok(Self::derive(n, kappa_sq, 0.0, None))
    }

    fn derive(n: usize, kappa_sq: Vec<f64>, truncation_tail: f64, band: Option<usize>) -> Self {
        let rho: f64 = kappa_sq.iter().sum();
        let sum_kappa4 = kappa_sq.iter().map(|k| k * k).sum();
        let (k_n, kappa_n_sq) = match band {
            Some(l) => (l, kappa_sq[0]),
            None => {
                let k = k_n_of(&kappa_sq, rho);
                (k, kappa_sq[k - 1])
            }
        };
        Self {
            n,
            kappa_sq,
            rho,
            sum_kappa4,
            k_n,
            kappa_n_sq,
            truncation_tail,
        }
    }

    pub fn len(&self) -> usize {
        self.kappa_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa_sq.is_empty()
    }

    /// `A_n = σ^{-4} n² Σ κ⁴`.
    pub fn a_n(&self, sigma: f64) -> f64 {
        (self.n as f64).powi(2) * self.sum_kappa4 / sigma.powi(4)
    }

    /// κ² at 1-based index `j` (0 past the truncation).
    pub fn kappa_sq_at(&self, j: usize) -> f64 {
        j.checked_sub(1)
            .and_then(|i| self.kappa_sq.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// `k = sup{k : Σ_{j<k} κ²_j ≤ ρ/2}` with 1-based `j`.
pub fn k_n_of(kappa_sq: &[f64], rho: f64) -> usize {
    let mut acc = 0.0;
    let mut k = 1;
    for &kap in kappa_sq {
        acc += kap;
        if acc <= 0.5 * rho {
            k += 1;
        } else {
            break;
        }
    }
    k.min(kappa_sq.len())
}

fn check_nonincreasing(assumption: &str, xs: &[f64]) -> Result<()> {
    if xs.is_empty() {
        return Err(Error::validation(assumption, "empty coefficient sequence"));
    }
    if let Some(&bad) = xs.iter().find(|x| !(x.is_finite() && **x >= 0.0)) {
        return Err(Error::validation(assumption, format!("coefficient {bad} is not a finite nonnegative number")));
    }
    if let Some(i) = xs.windows(2).position(|w| w[1] > w[0]) {
        return Err(Error::validation(
            assumption,
            format!("κ² increases at j = {}: {} < {}", i + 2, xs[i], xs[i + 1]),
        ));
    }
    Ok(())
}

/// Finite-n surrogates for the order assumptions, as measured constants.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssumptionReport {
    /// A2: `min_n A_n`, `max_n A_n` at σ = 1.
    pub a2_c1: f64,
    pub a2_c2: f64,
    /// A3: range of `ρ_n n^{2r}`.
    pub a3_c1: f64,
    pub a3_c2: f64,
    /// A4: `max (1+δ)^{λ'} κ²_{n,[(1+δ)k_n]} / κ²_n` over n and the δ-grid.
    pub a4_lambda: f64,
    pub a4_constant: f64,
    /// A5: range of `κ²_{n1} / κ²_n`, and `min κ²_{n,[c k_n]} / κ²_n` for c = 2, 4.
    pub a5_ratio_min: f64,
    pub a5_ratio_max: f64,
    pub a5_lower: Vec<(f64, f64)>,
    /// A6 (band-limited only): `min κ²_{n,[c l_n]} / κ²_{n1}` for c = 1/4, 1/2, 3/4.
    pub a6_lower: Vec<(f64, f64)>,
    /// Relative truncation loss `tail / ρ_n`, worst n.
    pub truncation_rel: f64,
}

pub const A4_DELTAS: [f64; 6] = [0.1, 0.25, 0.5, 1.0, 2.0, 4.0];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KappaProfile {
    pub spec: ProfileSpec,
    pub per_n: Vec<ProfileAtN>,
    pub assumptions: AssumptionReport,
}

/// Build the example profile for every `n` in `n_list` and validate A1-A6.
pub fn build_profile(spec: ProfileSpec) -> Result<KappaProfile> {
    spec.validate()?;
    let (beta, lambda) = (spec.beta(), spec.lambda());
    let mut per_n = Vec::with_capacity(spec.n_list.len());
    for &n in &spec.n_list {
        let nf = n as f64;
        let big_j = spec.truncation.at(n, spec.r).max(1);
        let band = spec
            .band_limit
            .map(|b| ((b * nf.powf(2.0 - 4.0 * spec.r)).ceil() as usize).clamp(1, big_j));
        let scale = nf.powf(-lambda);
        let shift = spec.c * nf.powf(beta);
        let len = band.unwrap_or(big_j);
        let kappa_sq: Vec<f64> = (1..=len)
            .map(|j| scale / ((j as f64).powf(spec.gamma) + shift))
            .collect();
        check_nonincreasing("A1", &kappa_sq)?;
        // Σ_{j>J} n^{-λ} j^{-γ} ≤ n^{-λ} J^{1-γ}/(γ-1)
        let tail = if band.is_some() {
            0.0
        } else {
            scale * (len as f64).powf(1.0 - spec.gamma) / (spec.gamma - 1.0)
        };
        let at_n = ProfileAtN::derive(n, kappa_sq, tail, band);
        if at_n.kappa_n_sq <= 0.0 {
            return Err(Error::validation("A1", format!("κ²_n vanishes at n = {n}")));
        }
        per_n.push(at_n);
    }
    let assumptions = assess(&spec, &per_n);
    if !(assumptions.a2_c1 > 0.0 && assumptions.a2_c2.is_finite()) {
        return Err(Error::validation("A2", format!("A_n range [{}, {}]", assumptions.a2_c1, assumptions.a2_c2)));
    }
    Ok(KappaProfile {
        spec,
        per_n,
        assumptions,
    })
}

fn assess(spec: &ProfileSpec, per_n: &[ProfileAtN]) -> AssumptionReport {
    let minmax = |v: &mut dyn Iterator<Item = f64>| {
        v.fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)))
    };
    let (a2_c1, a2_c2) = minmax(&mut per_n.iter().map(|p| p.a_n(1.0)));
    let (a3_c1, a3_c2) = minmax(&mut per_n.iter().map(|p| p.rho * (p.n as f64).powf(2.0 * spec.r)));
    let a4_lambda = 0.5 * (1.0 + spec.gamma);
    let mut a4_constant = 0.0f64;
    for p in per_n {
        for d in A4_DELTAS {
            let idx = ((1.0 + d) * p.k_n as f64).floor() as usize;
            if idx <= p.len() {
                a4_constant = a4_constant.max((1.0 + d).powf(a4_lambda) * p.kappa_sq_at(idx) / p.kappa_n_sq);
            }
        }
    }
    let (a5_ratio_min, a5_ratio_max) = minmax(&mut per_n.iter().map(|p| p.kappa_sq[0] / p.kappa_n_sq));
    let lower = |c: f64, base: &dyn Fn(&ProfileAtN) -> f64, k: &dyn Fn(&ProfileAtN) -> usize| {
        per_n
            .iter()
            .map(|p| {
                let idx = ((c * k(p) as f64).floor() as usize).max(1);
                p.kappa_sq_at(idx) / base(p)
            })
            .fold(f64::INFINITY, f64::min)
    };
    let a5_lower = [2.0, 4.0]
        .iter()
        .map(|&c| (c, lower(c, &|p| p.kappa_n_sq, &|p| p.k_n)))
        .collect();
    let a6_lower = if spec.band_limit.is_some() {
        [0.25, 0.5, 0.75]
            .iter()
            .map(|&c| (c, lower(c, &|p| p.kappa_sq[0], &|p| p.k_n)))
            .collect()
    } else {
        Vec::new()
    };
    let truncation_rel = per_n.iter().map(|p| p.truncation_tail / p.rho).fold(0.0, f64::max);
    AssumptionReport {
        a2_c1,
        a2_c2,
        a3_c1,
        a3_c2,
        a4_lambda,
        a4_constant,
        a5_ratio_min,
        a5_ratio_max,
        a5_lower,
        a6_lower,
        truncation_rel,
    }
}

impl KappaProfile {
    pub fn at(&self, n: usize) -> Option<&ProfileAtN> {
        self.per_n.iter().find(|p| p.n == n)
    }
}

/// `Σ κ²_{nj} y_j² - σ² n^{-1} ρ_n`.
pub fn quad_statistic(y: &[f64], profile: &ProfileAtN, sigma: f64) -> Result<f64> {
    if y.len() != profile.len() {
        return Err(Error::LengthMismatch {
            expected: profile.len(),
            got: y.len(),
        });
    }
    let s: f64 = y.iter().zip(&profile.kappa_sq).map(|(y, k)| k * y * y).sum();
    Ok(s - sigma * sigma * profile.rho / profile.n as f64)
}

/// `R_n = σ^{-4} n² Σ κ²_{nj} θ_j²` (frequency-indexed).
pub fn noncentrality(theta: &SignalSpec, profile: &ProfileAtN, sigma: f64) -> f64 {
    let s: f64 = theta
        .coeff_iter()
        .map(|(j, c)| profile.kappa_sq_at(j) * c * c)
        .sum();
    (profile.n as f64).powi(2) * s / sigma.powi(4)
}

/// Level and noise scale of a quadratic test.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadTestConfig {
    pub sigma: f64,
    pub alpha: f64,
    pub x_alpha: f64,
}

impl QuadTestConfig {
    pub fn new(sigma: f64, alpha: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(Error::Domain {
                what: "sigma",
                value: sigma,
                expected: "(0, ∞)",
            });
        }
        Ok(Self {
            sigma,
            alpha,
            x_alpha: level_quantile(alpha)?,
        })
    }
}

/// `x_α` with `1 - Φ(x_α) = α`.
pub fn level_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::Domain {
            what: "alpha",
            value: alpha,
            expected: "(0, 1)",
        });
    }
    Ok(upper_quantile(alpha))
}

/// Outcome of one test at one `n`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub statistic: f64,
    pub standardized: f64,
    pub reject: bool,
    pub predicted_beta: Option<f64>,
    /// Variance scale (`A_n`, or `m` for chi-squared).
    pub scale: f64,
    /// `R_n` or the family's analogous drift.
    pub noncentrality: Option<f64>,
}

/// Type II error `Φ(x_α - drift)`.
pub fn predicted_beta(x_alpha: f64, drift: f64) -> f64 {
    normal_cdf(x_alpha - drift)
}

/// Reject iff `σ^{-4} n² T_n / √(2A_n) > x_α`; predict `Φ(x_α - R_n/√(2A_n))`.
pub fn decide_and_predict(
    y: &[f64],
    theta: Option<&SignalSpec>,
    profile: &ProfileAtN,
    config: &QuadTestConfig,
) -> Result<TestReport> {
    let t = quad_statistic(y, profile, config.sigma)?;
    let a_n = profile.a_n(config.sigma);
    let root = (2.0 * a_n).sqrt();
    let standardized = (profile.n as f64).powi(2) * t / config.sigma.powi(4) / root;
    let r_n = theta.map(|th| noncentrality(th, profile, config.sigma));
    Ok(TestReport {
        statistic: t,
        standardized,
        reject: standardized > config.x_alpha,
        predicted_beta: r_n.map(|r| predicted_beta(config.x_alpha, r / root)),
        scale: a_n,
        noncentrality: r_n,
    })
}

/// Coefficients `κ²_j` and scales `σ_j` of a fixed-coefficient statistic.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FixedKappa {
    kappa_sq: Vec<f64>,
    sigmas: Vec<f64>,
}

impl FixedKappa {
    /// Checks D1 (nonincreasing, finite) and D2 (`0 < σ_j < bound`).
    pub fn new(kappa_sq: Vec<f64>, sigmas: Vec<f64>, sigma_bound: f64) -> Result<Self> {
        check_nonincreasing("D1", &kappa_sq)?;
        if sigmas.len() != kappa_sq.len() {
            return Err(Error::LengthMismatch {
                expected: kappa_sq.len(),
                got: sigmas.len(),
            });
        }
        if let Some((j, &s)) = sigmas
            .iter()
            .enumerate()
            .find(|(_, &s)| !(s > 0.0 && s < sigma_bound))
        {
            return Err(Error::validation(
                "D2",
                format!("σ_{} = {s} is outside (0, {sigma_bound})", j + 1),
            ));
        }
        Ok(Self { kappa_sq, sigmas })
    }

    /// Unit noise scales.
    pub fn homoscedastic(kappa_sq: Vec<f64>) -> Result<Self> {
        let len = kappa_sq.len();
        Self::new(kappa_sq, vec![1.0; len], 2.0)
    }

    pub fn kappa_sq(&self) -> &[f64] {
        &self.kappa_sq
    }

    pub fn sigmas(&self) -> &[f64] {
        &self.sigmas
    }

    pub fn len(&self) -> usize {
        self.kappa_sq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa_sq.is_empty()
    }

    /// `T(η) = Σ κ²_j η_j²` on the first `len` coordinates.
    pub fn functional(&self, eta: &[f64]) -> f64 {
        eta.iter().zip(&self.kappa_sq).map(|(e, k)| k * e * e).sum()
    }
}

/// `Σ κ²_j z_j²`; `kappa_sq` must satisfy D1.
pub fn fixed_kappa_statistic(z: &[f64], kappa_sq: &[f64]) -> Result<f64> {
    check_nonincreasing("D1", kappa_sq)?;
    if z.len() != kappa_sq.len() {
        return Err(Error::LengthMismatch {
            expected: kappa_sq.len(),
            got: z.len(),
        });
    }
    Ok(z.iter().zip(kappa_sq).map(|(z, k)| k * z * z).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::Basis;

    fn spec(r: f64, gamma: f64, n_list: Vec<usize>) -> ProfileSpec {
        ProfileSpec {
            r,
            gamma,
            c: 1.0,
            truncation: Truncation::Scaled { scale: 8.0 },
            n_list,
            mode: ProfileMode::Varying,
            band_limit: None,
        }
    }

    #[test]
    fn example_exponents() {
        let s = spec(0.25, 2.0, vec![100]);
        assert_eq!(s.beta(), 2.0);
        assert_eq!(s.lambda(), -0.5);
    }

    #[test]
    fn gamma_must_exceed_one() {
        assert!(matches!(build_profile(spec(0.25, 0.5, vec![100])), Err(Error::Precondition(_))));
        assert!(build_profile(spec(0.5, 2.0, vec![100])).is_err());
    }

    #[test]
    fn k_n_defining_property() {
        let p = build_profile(spec(0.25, 2.0, vec![64, 200, 1000])).unwrap();
        for at in &p.per_n {
            let below: f64 = at.kappa_sq[..at.k_n - 1].iter().sum();
            let through: f64 = at.kappa_sq[..at.k_n].iter().sum();
            assert!(below <= at.rho / 2.0 && at.rho / 2.0 < through, "n = {}", at.n);
        }
    }

    #[test]
    fn k_n_tracks_n_to_the_2_minus_4r() {
        let ns: Vec<usize> = vec![256, 512, 1024, 2048, 4096];
        let p = build_profile(spec(0.25, 2.0, ns.clone())).unwrap();
        let x: Vec<f64> = ns.iter().map(|&n| (n as f64).ln()).collect();
        let y: Vec<f64> = p.per_n.iter().map(|a| (a.k_n as f64).ln()).collect();
        let slope = crate::stats::ols_slope(&x, &y);
        assert!((slope - 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn a1_violation_is_reported() {
        let err = ProfileAtN::from_table(10, vec![1.0, 0.5, 0.7]).unwrap_err();
        assert!(matches!(err, Error::Validation { ref assumption, .. } if assumption == "A1"));
    }

    #[test]
    fn statistic_hand_sums() {
        let p = ProfileAtN::from_table(4, vec![0.5, 0.25, 0.125]).unwrap();
        let y = [1.0, -2.0, 0.5];
        let hand = 0.5 * 1.0 + 0.25 * 4.0 + 0.125 * 0.25 - (0.5 + 0.25 + 0.125) / 4.0;
        assert!((quad_statistic(&y, &p, 1.0).unwrap() - hand).abs() < 1e-15);
        assert!((quad_statistic(&[0.0; 3], &p, 1.0).unwrap() + 0.875 / 4.0).abs() < 1e-15);
        assert!(quad_statistic(&[0.0; 2], &p, 1.0).is_err());
    }

    #[test]
    fn noncentrality_single_term() {
        let p = ProfileAtN::from_table(10, vec![0.5, 0.25]).unwrap();
        let th = SignalSpec::new(Basis::CosinePi, vec![0.3]).unwrap();
        assert!((noncentrality(&th, &p, 1.0) - 100.0 * 0.5 * 0.09).abs() < 1e-12);
        assert_eq!(noncentrality(&SignalSpec::zeros(Basis::CosinePi, 2), &p, 1.0), 0.0);
        // coordinates beyond the truncation carry no weight
        let far = SignalSpec::spike(Basis::CosinePi, 5, 1.0);
        assert_eq!(noncentrality(&far, &p, 1.0), 0.0);
    }

    #[test]
    fn prediction_trivial_points() {
        let cfg = QuadTestConfig::new(1.0, 0.05).unwrap();
        assert!((1.0 - normal_cdf(cfg.x_alpha) - 0.05).abs() < 1e-8);
        assert!((predicted_beta(cfg.x_alpha, 0.0) - 0.95).abs() < 1e-8);
        assert!((predicted_beta(cfg.x_alpha, cfg.x_alpha) - 0.5).abs() < 1e-15);
        let p = ProfileAtN::from_table(10, vec![0.5, 0.25]).unwrap();
        let rep = decide_and_predict(&[0.0, 0.0], Some(&SignalSpec::zeros(Basis::CosinePi, 2)), &p, &cfg).unwrap();
        assert!((rep.predicted_beta.unwrap() - 0.95).abs() < 1e-8);
        assert!(!rep.reject);
        assert_eq!(rep.reject, rep.standardized > cfg.x_alpha);
    }

    #[test]
    fn fixed_kappa_checks() {
        assert_eq!(fixed_kappa_statistic(&[0.0; 3], &[1.0, 0.5, 0.1]).unwrap(), 0.0);
        let v = fixed_kappa_statistic(&[1.0, 2.0, 3.0], &[1.0, 0.5, 0.1]).unwrap();
        assert!((v - (1.0 + 2.0 + 0.9)).abs() < 1e-15);
        assert!(matches!(
            fixed_kappa_statistic(&[1.0, 1.0], &[0.1, 0.5]),
            Err(Error::Validation { ref assumption, .. }) if assumption == "D1"
        ));
        assert!(matches!(
            FixedKappa::new(vec![1.0, 0.5], vec![1.0, 5.0], 2.0),
            Err(Error::Validation { ref assumption, .. }) if assumption == "D2"
        ));
    }

    #[test]
    fn band_limited_variant() {
        let mut s = spec(0.25, 2.0, vec![100, 400]);
        s.band_limit = Some(1.0);
        let p = build_profile(s).unwrap();
        for at in &p.per_n {
            assert_eq!(at.k_n, at.len());
            assert_eq!(at.kappa_n_sq, at.kappa_sq[0]);
        }
        assert_eq!(p.assumptions.a6_lower.len(), 3);
        assert!(p.assumptions.a6_lower.iter().all(|&(_, v)| v > 0.0));
    }

    #[test]
    fn profile_json_round_trip() {
        let s = spec(0.25, 4.0, vec![100]);
        let txt = serde_json::to_string(&s).unwrap();
        assert!(txt.contains(r#""J":{"scale":8.0}"#));
        let back: ProfileSpec = serde_json::from_str(&txt).unwrap();
        assert_eq!(back, s);
        let fixed: ProfileSpec =
            serde_json::from_str(r#"{"r":0.25,"gamma":2,"c":1,"J":50,"n_list":[10],"mode":"varying"}"#).unwrap();
        assert_eq!(fixed.truncation, Truncation::Fixed(50));
    }
}
