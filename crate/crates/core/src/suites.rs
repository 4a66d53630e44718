//! Canned Monte Carlo experiments.
//!
//! Each suite reads a JSON config holding the design and the pass/fail
//! thresholds, runs the grid on the data streams `stream = n` and returns a
//! [`PowerReport`]. Within one `n` every alternative of a family is evaluated
//! on the same replicates as the null, so differences between alternatives
//! are paired. Power-formula agreement is an asymptotic statement; the bands
//! used here are engineering tolerances chosen for desk-scale `n`.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::alternatives::{
    classify, decompose, family_k_n, make_consistent, make_inconsistent, spike_tail_witness, AlternativeSequence,
    ConsistentSpec, Family, MassProfile, Thresholds,
};
use crate::chi2::{chi2_population, CellRule, Chi2Config};
use crate::classes::{compactness_diagnostic, greedy_widths, SetDescriptor};
use crate::cvm::{cvm_population, CvmNullTable, DEFAULT_J_NULL};
use crate::error::{Error, Result};
use crate::kernel::{Kernel, KernelTestConfig};
use crate::mc::{joint_se, MCEstimate, McSettings, PreparedTest, RejectionMatrix};
use crate::quad::{build_profile, noncentrality, FixedKappa, KappaProfile, ProfileMode, ProfileSpec, QuadTestConfig, Truncation};
use crate::rng::{open_unit, standard_normal, StreamKey};
use crate::signal::{Basis, SignalSpec};
use crate::stats::upper_quantile;

pub const SUITES: [&str; 9] = [
    "calibration",
    "power",
    "consistency",
    "inconsistency",
    "interaction",
    "purity",
    "compactness",
    "unbiasedness",
    "maxiset-counterexample",
];

/// Stream for the random shift directions of the unbiasedness suite.
const SHIFT_STREAM: u64 = 0x5A1F_7000_0000_0002;

// ---------------------------------------------------------------- config

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McBlock {
    pub seed: u64,
    pub replicates: usize,
    pub alpha: f64,
}

impl McBlock {
    fn settings(&self) -> Result<McSettings> {
        McSettings::new(self.replicates, self.seed)
    }
}

fn one() -> f64 {
    1.0
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QuadSetup {
    pub r: f64,
    pub gamma: f64,
    pub c: f64,
    #[serde(rename = "J")]
    pub truncation: Truncation,
    #[serde(default = "one")]
    pub sigma: f64,
}

impl QuadSetup {
    fn profile(&self, n_list: &[usize]) -> Result<KappaProfile> {
        build_profile(ProfileSpec {
            r: self.r,
            gamma: self.gamma,
            c: self.c,
            truncation: self.truncation,
            n_list: n_list.to_vec(),
            mode: ProfileMode::Varying,
            band_limit: None,
        })
    }

    fn test(&self, profile: &KappaProfile, n: usize, alpha: f64) -> Result<PreparedTest> {
        let at = profile
            .at(n)
            .ok_or_else(|| Error::precondition(format!("profile has no entry for n = {n}")))?;
        Ok(PreparedTest::Quad {
            profile: at.clone(),
            config: QuadTestConfig::new(self.sigma, alpha)?,
        })
    }
}

/// Bandwidth `h = bandwidth / k_n` and `⌈frequency_factor / h⌉` Fourier frequencies.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelSetup {
    pub kernel: Kernel,
    pub r: f64,
    pub bandwidth: f64,
    pub frequency_factor: f64,
    #[serde(default = "one")]
    pub sigma: f64,
}

impl KernelSetup {
    fn test(&self, n: usize, alpha: f64) -> Result<PreparedTest> {
        let h = self.bandwidth / family_k_n(Family::Kernel, self.r, n, None)? as f64;
        let frequencies = (self.frequency_factor / h).ceil() as usize;
        Ok(PreparedTest::Kernel {
            config: KernelTestConfig::new(self.kernel.clone(), h, self.sigma, n, alpha, frequencies)?,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Chi2Setup {
    pub cells: CellRule,
    /// Rate of the alternatives built for this family.
    #[serde(default)]
    pub r: Option<f64>,
}

impl Chi2Setup {
    fn test(&self, n: usize, alpha: f64) -> Result<PreparedTest> {
        Ok(PreparedTest::Chi2 {
            config: Chi2Config::new(self.cells.cells(n), n, alpha)?,
        })
    }
}

fn default_j_null() -> usize {
    DEFAULT_J_NULL
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CvmSetup {
    #[serde(rename = "J_null", default = "default_j_null")]
    pub j_null: usize,
    pub null_replicates: usize,
    #[serde(default)]
    pub r: Option<f64>,
}

impl CvmSetup {
    fn critical(&self, alpha: f64, seed: u64) -> Result<f64> {
        let table = CvmNullTable::generate(&[alpha], self.j_null, self.null_replicates, seed)?;
        Ok(table.entries[0].critical)
    }
}

fn need_rate(r: Option<f64>, family: &str) -> Result<f64> {
    r.ok_or_else(|| Error::precondition(format!("the {family} setup needs `r` to build alternatives")))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConsistentAlt {
    pub c1: f64,
    pub c2: f64,
    pub amplitude: f64,
    pub profile: MassProfile,
    #[serde(default)]
    pub seed: u64,
}

impl ConsistentAlt {
    fn build(&self, family: Family, r: f64, n_list: &[usize], profile: Option<&KappaProfile>) -> Result<AlternativeSequence> {
        make_consistent(
            &ConsistentSpec {
                family,
                r,
                c1: self.c1,
                c2: self.c2,
                amplitude: self.amplitude,
                profile: self.profile,
                n_list: n_list.to_vec(),
                seed: self.seed,
            },
            profile,
        )
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InconsistentAlt {
    pub factors: Vec<f64>,
    pub amplitude: f64,
}

impl InconsistentAlt {
    fn build(&self, family: Family, r: f64, n_list: &[usize], profile: Option<&KappaProfile>) -> Result<AlternativeSequence> {
        make_inconsistent(family, r, &self.factors, n_list, self.amplitude, profile)
    }
}

/// Power-suite alternative: equal cosine coefficients on frequencies below
/// `band · k` (`k = k_n` for quad, `k = m` for chi2), scaled to hit each target.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BandShape {
    pub band: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationConfig {
    pub mc: McBlock,
    pub n_list: Vec<usize>,
    pub quad: QuadSetup,
    pub kernel: KernelSetup,
    pub chi2: Chi2Setup,
    pub cvm: CvmSetup,
    pub size_band: (f64, f64),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PowerConfig {
    pub mc: McBlock,
    pub n: usize,
    pub targets: Vec<f64>,
    pub quad: QuadSetup,
    pub quad_shape: BandShape,
    pub chi2: Chi2Setup,
    pub chi2_shape: BandShape,
    pub max_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConsistencyConfig {
    pub mc: McBlock,
    pub n_list: Vec<usize>,
    pub quad: QuadSetup,
    pub quad_alternative: ConsistentAlt,
    pub kernel: KernelSetup,
    pub kernel_alternative: ConsistentAlt,
    pub classification: Thresholds,
    /// Pass when `β ≤ 1 - α - beta_margin` at the largest `n`.
    pub beta_margin: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InconsistencyConfig {
    pub mc: McBlock,
    pub n_list: Vec<usize>,
    pub alternative: InconsistentAlt,
    pub quad: QuadSetup,
    pub kernel: KernelSetup,
    pub chi2: Chi2Setup,
    pub cvm: CvmSetup,
    /// Pass when `power - α ≤ max_excess` at the largest `n`.
    pub max_excess: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InteractionConfig {
    pub mc: McBlock,
    pub n_list: Vec<usize>,
    pub quad: QuadSetup,
    pub quad_consistent: ConsistentAlt,
    pub quad_inconsistent: InconsistentAlt,
    pub chi2: Chi2Setup,
    pub chi2_consistent: ConsistentAlt,
    pub chi2_inconsistent: InconsistentAlt,
    pub max_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PurityConfig {
    pub mc: McBlock,
    pub n_list: Vec<usize>,
    pub quad: QuadSetup,
    pub consistent: ConsistentAlt,
    pub tail: InconsistentAlt,
    /// Head/tail split at `cutoff_factor · k_n`.
    pub cutoff_factor: f64,
    pub classification: Thresholds,
    pub max_tail_noncentrality: f64,
    pub max_gap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompactnessConfig {
    pub mc: McBlock,
    /// `κ²_j = j^{-kappa_exponent}`, `j = 1..=J`.
    #[serde(rename = "J")]
    pub dim: usize,
    pub kappa_exponent: f64,
    pub null_replicates: usize,
    pub amplitude: f64,
    pub spikes: Vec<usize>,
    pub ellipsoids: Vec<Vec<f64>>,
    pub diagnostic_epsilon: f64,
    pub max_excess: f64,
    /// Allowed increase between consecutive spike powers, in paired standard errors.
    pub monotone_se: f64,
    pub width_tolerance: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnbiasednessConfig {
    pub mc: McBlock,
    /// `κ²_j = 1/(π² j²)`, `j = 1..=J`.
    #[serde(rename = "J")]
    pub dim: usize,
    pub null_replicates: usize,
    pub shifts: usize,
    /// Shifts are supported on the first `support` coordinates.
    pub support: usize,
    pub norm_range: (f64, f64),
    pub se_multiplier: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MaxisetConfig {
    pub r: f64,
    /// `τ_j = tau_scale · √(j^{-1-2s} (1 + ln j))`, `j = 1..=J`, `s = r/(2-4r)`.
    pub tau_scale: f64,
    #[serde(rename = "J")]
    pub dim: usize,
    pub m_list: Vec<usize>,
    pub quad: QuadSetup,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "suite", rename_all = "kebab-case")]
pub enum SuiteConfig {
    Calibration(CalibrationConfig),
    Power(PowerConfig),
    Consistency(ConsistencyConfig),
    Inconsistency(InconsistencyConfig),
    Interaction(InteractionConfig),
    Purity(PurityConfig),
    Compactness(CompactnessConfig),
    Unbiasedness(UnbiasednessConfig),
    MaxisetCounterexample(MaxisetConfig),
}

impl SuiteConfig {
    pub fn name(&self) -> &'static str {
        match self {
            SuiteConfig::Calibration(_) => "calibration",
            SuiteConfig::Power(_) => "power",
            SuiteConfig::Consistency(_) => "consistency",
            SuiteConfig::Inconsistency(_) => "inconsistency",
            SuiteConfig::Interaction(_) => "interaction",
            SuiteConfig::Purity(_) => "purity",
            SuiteConfig::Compactness(_) => "compactness",
            SuiteConfig::Unbiasedness(_) => "unbiasedness",
            SuiteConfig::MaxisetCounterexample(_) => "maxiset-counterexample",
        }
    }

    fn mc_mut(&mut self) -> Option<&mut McBlock> {
        match self {
            SuiteConfig::Calibration(c) => Some(&mut c.mc),
            SuiteConfig::Power(c) => Some(&mut c.mc),
            SuiteConfig::Consistency(c) => Some(&mut c.mc),
            SuiteConfig::Inconsistency(c) => Some(&mut c.mc),
            SuiteConfig::Interaction(c) => Some(&mut c.mc),
            SuiteConfig::Purity(c) => Some(&mut c.mc),
            SuiteConfig::Compactness(c) => Some(&mut c.mc),
            SuiteConfig::Unbiasedness(c) => Some(&mut c.mc),
            SuiteConfig::MaxisetCounterexample(_) => None,
        }
    }

    pub fn mc(&self) -> Option<McBlock> {
        self.clone().mc_mut().copied()
    }

    pub fn set_seed(&mut self, seed: u64) {
        if let Some(mc) = self.mc_mut() {
            mc.seed = seed;
        }
    }

    pub fn set_replicates(&mut self, replicates: usize) {
        if let Some(mc) = self.mc_mut() {
            mc.replicates = replicates;
        }
    }

    /// Parses the variant named by the `suite` key straight from the text so
    /// that errors keep their line and column.
    pub fn from_json(text: &str, origin: &str) -> Result<Self> {
        #[derive(Deserialize)]
        struct Header {
            suite: String,
        }
        fn parse<T: serde::de::DeserializeOwned>(text: &str) -> serde_json::Result<T> {
            serde_json::from_str(text)
        }
        let at = |source| Error::Config {
            path: origin.to_string(),
            source,
        };
        let header: Header = parse(text).map_err(at)?;
        Ok(match header.suite.as_str() {
            "calibration" => SuiteConfig::Calibration(parse(text).map_err(at)?),
            "power" => SuiteConfig::Power(parse(text).map_err(at)?),
            "consistency" => SuiteConfig::Consistency(parse(text).map_err(at)?),
            "inconsistency" => SuiteConfig::Inconsistency(parse(text).map_err(at)?),
            "interaction" => SuiteConfig::Interaction(parse(text).map_err(at)?),
            "purity" => SuiteConfig::Purity(parse(text).map_err(at)?),
            "compactness" => SuiteConfig::Compactness(parse(text).map_err(at)?),
            "unbiasedness" => SuiteConfig::Unbiasedness(parse(text).map_err(at)?),
            "maxiset-counterexample" => SuiteConfig::MaxisetCounterexample(parse(text).map_err(at)?),
            other => {
                return Err(Error::UnknownSuite {
                    name: other.to_string(),
                    available: SUITES.join(", "),
                })
            }
        })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        Self::from_json(&text, &path.display().to_string())
    }
}

/// Seed from `UNICONSIST_SEED`, if set.
pub fn env_seed() -> Result<Option<u64>> {
    match std::env::var("UNICONSIST_SEED") {
        Ok(v) => v
            .trim()
            .parse()
            .map(Some)
            .map_err(|_| Error::precondition(format!("UNICONSIST_SEED must be an unsigned integer, got `{v}`"))),
        Err(_) => Ok(None),
    }
}

// ---------------------------------------------------------------- report

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Bound {
    AtMost(f64),
    LessThan(f64),
    AtLeast(f64),
    GreaterThan(f64),
    Within(f64, f64),
}

impl Bound {
    pub fn holds(&self, v: f64) -> bool {
        match *self {
            Bound::AtMost(t) => v <= t,
            Bound::LessThan(t) => v < t,
            Bound::AtLeast(t) => v >= t,
            Bound::GreaterThan(t) => v > t,
            Bound::Within(lo, hi) => lo <= v && v <= hi,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub threshold: Bound,
    pub passed: bool,
}

impl Check {
    pub fn new(name: impl Into<String>, value: f64, threshold: Bound) -> Self {
        Self {
            name: name.into(),
            value,
            threshold,
            passed: threshold.holds(value),
        }
    }
}

/// One CSV row. Columns are fixed; absent values are written as empty fields.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PowerRow {
    pub family: String,
    pub case: String,
    pub n: usize,
    pub param: Option<f64>,
    pub replicates: Option<usize>,
    pub empirical_alpha: Option<f64>,
    pub empirical_beta: Option<f64>,
    pub predicted_beta: Option<f64>,
    pub abs_gap: Option<f64>,
    pub within_band: Option<bool>,
    pub index: Option<f64>,
    pub std_error: Option<f64>,
    pub ci_low: Option<f64>,
    pub ci_high: Option<f64>,
}

impl PowerRow {
    fn new(family: &str, case: impl Into<String>, n: usize) -> Self {
        Self {
            family: family.to_string(),
            case: case.into(),
            n,
            ..Self::default()
        }
    }

    fn size(mut self, est: &MCEstimate) -> Self {
        self.replicates = Some(est.replicates);
        self.empirical_alpha = Some(est.estimate);
        self
    }

    /// Records `β = 1 - power` with the interval mapped accordingly.
    fn power(mut self, est: &MCEstimate) -> Self {
        self.replicates = Some(est.replicates);
        self.empirical_beta = Some(1.0 - est.estimate);
        self.std_error = Some(est.std_error);
        self.ci_low = Some(1.0 - est.ci95.1);
        self.ci_high = Some(1.0 - est.ci95.0);
        self
    }

    fn null_interval(mut self, est: &MCEstimate) -> Self {
        self.std_error = Some(est.std_error);
        self.ci_low = Some(est.ci95.0);
        self.ci_high = Some(est.ci95.1);
        self
    }

    fn predicted(mut self, beta: Option<f64>, band: Option<f64>) -> Self {
        self.predicted_beta = beta;
        if let (Some(p), Some(e)) = (beta, self.empirical_beta) {
            let gap = (e - p).abs();
            self.abs_gap = Some(gap);
            self.within_band = band.map(|b| gap <= b);
        }
        self
    }

    fn index(mut self, v: f64) -> Self {
        self.index = Some(v);
        self
    }

    fn param(mut self, v: f64) -> Self {
        self.param = Some(v);
        self
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PowerReport {
    pub suite: String,
    pub seed: Option<u64>,
    pub replicates: Option<usize>,
    pub rows: Vec<PowerRow>,
    pub checks: Vec<Check>,
    pub details: serde_json::Value,
}

impl PowerReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn summary(&self) -> serde_json::Value {
        json!({
            "suite": self.suite,
            "seed": self.seed,
            "replicates": self.replicates,
            "passed": self.passed(),
            "checks": self.checks,
            "details": self.details,
        })
    }

    pub fn csv_bytes(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for row in &self.rows {
            w.serialize(row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.into_error()))
    }

    /// Writes `<suite>.csv` and `<suite>_summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<(PathBuf, PathBuf)> {
        fs::create_dir_all(dir)?;
        let csv_path = dir.join(format!("{}.csv", self.suite));
        let json_path = dir.join(format!("{}_summary.json", self.suite));
        fs::write(&csv_path, self.csv_bytes()?)?;
        fs::write(&json_path, serde_json::to_string_pretty(&self.summary())? + "\n")?;
        Ok((csv_path, json_path))
    }
}

// ---------------------------------------------------------------- helpers

/// Largest step `v[k+1] - v[k]`; negative iff strictly decreasing.
fn max_increase(v: &[f64]) -> f64 {
    v.windows(2).map(|w| w[1] - w[0]).fold(f64::NEG_INFINITY, f64::max)
}

fn decreasing_check(name: String, v: &[f64]) -> Check {
    Check::new(name, max_increase(v), Bound::LessThan(0.0))
}

fn zero(basis: Basis) -> SignalSpec {
    SignalSpec::zeros(basis, 1)
}

/// Null plus alternatives on shared replicates; column 0 is the null.
fn run_batch(test: &PreparedTest, signals: &[SignalSpec], basis: Basis, mc: &McSettings, n: usize) -> Result<RejectionMatrix> {
    let mut all = Vec::with_capacity(signals.len() + 1);
    all.push(zero(basis));
    all.extend_from_slice(signals);
    test.rejections(&all, mc, n as u64)
}

fn largest(n_list: &[usize]) -> Result<usize> {
    n_list
        .iter()
        .copied()
        .max()
        .ok_or_else(|| Error::precondition("n_list must not be empty"))
}

fn check_n_list(n_list: &[usize]) -> Result<()> {
    if n_list.is_empty() || n_list.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::precondition("n_list must be nonempty and strictly increasing"));
    }
    Ok(())
}

fn band_signal(basis: Basis, band: f64, k: usize) -> Result<SignalSpec> {
    let top = ((band * k as f64).ceil() as usize).saturating_sub(1).max(1);
    let cpf = basis.coords_per_frequency();
    let mut coeffs = vec![0.0; top * cpf];
    for f in 0..top {
        coeffs[f * cpf] = 1.0;
    }
    let norm = (top as f64).sqrt();
    SignalSpec::new(basis, coeffs.iter().map(|c| c / norm).collect())
}

// ---------------------------------------------------------------- suites

pub fn run_suite(config: &SuiteConfig) -> Result<PowerReport> {
    let (rows, checks, details) = match config {
        SuiteConfig::Calibration(c) => calibration(c)?,
        SuiteConfig::Power(c) => power(c)?,
        SuiteConfig::Consistency(c) => consistency(c)?,
        SuiteConfig::Inconsistency(c) => inconsistency(c)?,
        SuiteConfig::Interaction(c) => interaction(c)?,
        SuiteConfig::Purity(c) => purity(c)?,
        SuiteConfig::Compactness(c) => compactness(c)?,
        SuiteConfig::Unbiasedness(c) => unbiasedness(c)?,
        SuiteConfig::MaxisetCounterexample(c) => maxiset(c)?,
    };
    let mc = config.mc();
    Ok(PowerReport {
        suite: config.name().to_string(),
        seed: mc.map(|m| m.seed),
        replicates: mc.map(|m| m.replicates),
        rows,
        checks,
        details,
    })
}

/// Runs `config` after checking it belongs to the suite `name`.
pub fn run_named(name: &str, config: &SuiteConfig) -> Result<PowerReport> {
    if !SUITES.contains(&name) {
        return Err(Error::UnknownSuite {
            name: name.to_string(),
            available: SUITES.join(", "),
        });
    }
    if config.name() != name {
        return Err(Error::precondition(format!(
            "config is for suite `{}`, not `{name}`",
            config.name()
        )));
    }
    run_suite(config)
}

type SuiteOutput = (Vec<PowerRow>, Vec<Check>, serde_json::Value);

fn calibration(c: &CalibrationConfig) -> Result<SuiteOutput> {
    check_n_list(&c.n_list)?;
    let mc = c.mc.settings()?;
    let alpha = c.mc.alpha;
    let band = Bound::Within(c.size_band.0, c.size_band.1);
    let profile = c.quad.profile(&c.n_list)?;
    let cvm_critical = c.cvm.critical(alpha, c.mc.seed)?;
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    for &n in &c.n_list {
        let tests = [
            (Family::Quad, c.quad.test(&profile, n, alpha)?),
            (Family::Kernel, c.kernel.test(n, alpha)?),
            (Family::Chi2, c.chi2.test(n, alpha)?),
            (Family::Cvm, PreparedTest::Cvm { n, critical: cvm_critical }),
        ];
        for (family, test) in tests {
            let size = test.estimate_size(&zero(family.basis()), &mc, n as u64)?;
            rows.push(PowerRow::new(family.name(), "null", n).size(&size).null_interval(&size));
            checks.push(if family == Family::Cvm {
                Check::new(format!("cvm_alpha_in_wilson_n{n}"), alpha, Bound::Within(size.ci95.0, size.ci95.1))
            } else {
                Check::new(format!("{}_size_n{n}", family.name()), size.estimate, band)
            });
        }
    }
    let details = json!({
        "cvm_critical": cvm_critical,
        "quad_assumptions": profile.assumptions,
    });
    Ok((rows, checks, details))
}

fn power(c: &PowerConfig) -> Result<SuiteOutput> {
    let mc = c.mc.settings()?;
    let (n, alpha) = (c.n, c.mc.alpha);
    let profile = c.quad.profile(&[n])?;
    let quad = c.quad.test(&profile, n, alpha)?;
    let chi2 = c.chi2.test(n, alpha)?;
    let quad_base = band_signal(Basis::CosinePi, c.quad_shape.band, profile.per_n[0].k_n)?;
    let m = match &chi2 {
        PreparedTest::Chi2 { config } => config.m,
        _ => unreachable!(),
    };
    let chi2_base = band_signal(Basis::TrigFull, c.chi2_shape.band, m)?;
    let x_alpha = crate::quad::level_quantile(alpha)?;
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    let mut amplitudes = Vec::new();
    for (family, test, base) in [(Family::Quad, &quad, &quad_base), (Family::Chi2, &chi2, &chi2_base)] {
        let d0 = test.drift(base)?;
        let mut signals = Vec::new();
        for &beta in &c.targets {
            if !(beta > 0.0 && beta < 1.0 - alpha) {
                return Err(Error::Domain {
                    what: "target beta",
                    value: beta,
                    expected: "(0, 1 - alpha)",
                });
            }
            // Φ(x_α - d) = β
            let d = x_alpha - upper_quantile(1.0 - beta);
            let a = (d / d0).sqrt();
            amplitudes.push(json!({"family": family.name(), "target": beta, "amplitude": a}));
            signals.push(base.scaled(a));
        }
        let mat = run_batch(test, &signals, family.basis(), &mc, n)?;
        let size = mat.estimate(0);
        for (k, (signal, &beta)) in signals.iter().zip(&c.targets).enumerate() {
            let row = PowerRow::new(family.name(), format!("target_beta={beta}"), n)
                .param(beta)
                .size(&size)
                .power(&mat.estimate(k + 1))
                .predicted(test.predicted_beta(signal)?, Some(c.max_gap))
                .index(test.drift(signal)?);
            checks.push(Check::new(
                format!("{}_gap_beta{beta}", family.name()),
                row.abs_gap.unwrap_or(f64::NAN),
                Bound::AtMost(c.max_gap),
            ));
            rows.push(row);
        }
    }
    Ok((rows, checks, json!({ "amplitudes": amplitudes, "m": m })))
}

fn consistency(c: &ConsistencyConfig) -> Result<SuiteOutput> {
    check_n_list(&c.n_list)?;
    let mc = c.mc.settings()?;
    let alpha = c.mc.alpha;
    let n_max = largest(&c.n_list)?;
    let profile = c.quad.profile(&c.n_list)?;
    let quad_seq = c.quad_alternative.build(Family::Quad, c.quad.r, &c.n_list, Some(&profile))?;
    let kernel_seq = c.kernel_alternative.build(Family::Kernel, c.kernel.r, &c.n_list, None)?;
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    let mut verdicts = Vec::new();
    for (family, seq) in [(Family::Quad, &quad_seq), (Family::Kernel, &kernel_seq)] {
        if seq.entries.len() >= 3 {
            verdicts.push(json!({"family": family.name(), "classification": classify(seq, c.classification)?}));
        }
        for e in &seq.entries {
            let test = match family {
                Family::Quad => c.quad.test(&profile, e.n, alpha)?,
                _ => c.kernel.test(e.n, alpha)?,
            };
            let mat = run_batch(&test, std::slice::from_ref(&e.signal), family.basis(), &mc, e.n)?;
            let power = mat.estimate(1);
            rows.push(
                PowerRow::new(family.name(), "consistent", e.n)
                    .size(&mat.estimate(0))
                    .power(&power)
                    .predicted(test.predicted_beta(&e.signal)?, None)
                    .index(test.drift(&e.signal)?),
            );
            if e.n == n_max {
                checks.push(Check::new(
                    format!("{}_beta_at_n{n_max}", family.name()),
                    1.0 - power.estimate,
                    Bound::AtMost(1.0 - alpha - c.beta_margin),
                ));
            }
        }
    }
    Ok((rows, checks, json!({ "classifications": verdicts })))
}

fn inconsistency(c: &InconsistencyConfig) -> Result<SuiteOutput> {
    check_n_list(&c.n_list)?;
    let mc = c.mc.settings()?;
    let alpha = c.mc.alpha;
    let n_max = largest(&c.n_list)?;
    let profile = c.quad.profile(&c.n_list)?;
    let cvm_critical = c.cvm.critical(alpha, c.mc.seed)?;
    let seqs = [
        (Family::Quad, c.alternative.build(Family::Quad, c.quad.r, &c.n_list, Some(&profile))?),
        (Family::Kernel, c.alternative.build(Family::Kernel, c.kernel.r, &c.n_list, None)?),
        (Family::Chi2, c.alternative.build(Family::Chi2, need_rate(c.chi2.r, "chi2")?, &c.n_list, None)?),
        (Family::Cvm, c.alternative.build(Family::Cvm, need_rate(c.cvm.r, "cvm")?, &c.n_list, None)?),
    ];
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    for (family, seq) in &seqs {
        let mut indices = Vec::new();
        for e in &seq.entries {
            let test = match family {
                Family::Quad => c.quad.test(&profile, e.n, alpha)?,
                Family::Kernel => c.kernel.test(e.n, alpha)?,
                Family::Chi2 => c.chi2.test(e.n, alpha)?,
                Family::Cvm => PreparedTest::Cvm {
                    n: e.n,
                    critical: cvm_critical,
                },
            };
            let index = test.drift(&e.signal)?;
            indices.push(index);
            let mat = run_batch(&test, std::slice::from_ref(&e.signal), family.basis(), &mc, e.n)?;
            let power = mat.estimate(1);
            rows.push(
                PowerRow::new(family.name(), "inconsistent", e.n)
                    .param(e.signal.support_max() as f64)
                    .size(&mat.estimate(0))
                    .power(&power)
                    .predicted(test.predicted_beta(&e.signal)?, None)
                    .index(index),
            );
            if e.n == n_max {
                checks.push(Check::new(
                    format!("{}_excess_power_at_n{n_max}", family.name()),
                    power.estimate - alpha,
                    Bound::AtMost(c.max_excess),
                ));
            }
        }
        checks.push(decreasing_check(format!("{}_index_decreasing", family.name()), &indices));
    }
    Ok((rows, checks, json!({ "cvm_critical": cvm_critical })))
}

/// `|R(f+g) - R(f) - R(g)| / (2√(R(f)R(g)))`, at most 1 by Cauchy–Schwarz.
fn cauchy_ratio(q: impl Fn(&SignalSpec) -> Result<f64>, f: &SignalSpec, g: &SignalSpec) -> Result<f64> {
    let (rf, rg, rfg) = (q(f)?, q(g)?, q(&f.add(g)?)?);
    let denom = 2.0 * (rf * rg).sqrt();
    Ok(if denom > 0.0 { (rfg - rf - rg).abs() / denom } else { 0.0 })
}

fn interaction(c: &InteractionConfig) -> Result<SuiteOutput> {
    check_n_list(&c.n_list)?;
    let mc = c.mc.settings()?;
    let alpha = c.mc.alpha;
    let profile = c.quad.profile(&c.n_list)?;
    let chi2_r = need_rate(c.chi2.r, "chi2")?;
    let families = [
        (
            Family::Quad,
            c.quad_consistent.build(Family::Quad, c.quad.r, &c.n_list, Some(&profile))?,
            c.quad_inconsistent.build(Family::Quad, c.quad.r, &c.n_list, Some(&profile))?,
        ),
        (
            Family::Chi2,
            c.chi2_consistent.build(Family::Chi2, chi2_r, &c.n_list, None)?,
            c.chi2_inconsistent.build(Family::Chi2, chi2_r, &c.n_list, None)?,
        ),
    ];
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    for (family, f_seq, g_seq) in &families {
        let sum = f_seq.plus(g_seq)?;
        let mut gaps = Vec::new();
        let mut cauchy = 0.0f64;
        for ((f, g), fg) in f_seq.entries.iter().zip(&g_seq.entries).zip(&sum.entries) {
            let n = f.n;
            let test = match family {
                Family::Quad => c.quad.test(&profile, n, alpha)?,
                _ => c.chi2.test(n, alpha)?,
            };
            cauchy = cauchy.max(match (family, &test) {
                (Family::Quad, PreparedTest::Quad { profile, config }) => {
                    cauchy_ratio(|s| Ok(noncentrality(s, profile, config.sigma)), &f.signal, &g.signal)?
                }
                (_, PreparedTest::Chi2 { config }) => {
                    cauchy_ratio(|s| chi2_population(s, config.m, n), &f.signal, &g.signal)?
                }
                _ => unreachable!(),
            });
            let mat = run_batch(&test, &[f.signal.clone(), fg.signal.clone()], family.basis(), &mc, n)?;
            let size = mat.estimate(0);
            let (diff, se) = mat.paired_difference(2, 1);
            gaps.push(diff.abs());
            for (case, col, s) in [("f", 1, &f.signal), ("f_plus_g", 2, &fg.signal)] {
                rows.push(
                    PowerRow::new(family.name(), case, n)
                        .size(&size)
                        .power(&mat.estimate(col))
                        .predicted(test.predicted_beta(s)?, None)
                        .index(test.drift(s)?),
                );
            }
            let mut row = PowerRow::new(family.name(), "abs_beta_difference", n).index(diff.abs());
            row.std_error = Some(se);
            row.replicates = Some(mc.replicates);
            rows.push(row);
        }
        let last = *gaps.last().unwrap_or(&f64::NAN);
        checks.push(Check::new(
            format!("{}_abs_beta_difference_at_largest_n", family.name()),
            last,
            Bound::AtMost(c.max_gap),
        ));
        checks.push(Check::new(
            format!("{}_abs_beta_difference_non_increasing", family.name()),
            max_increase(&gaps),
            Bound::AtMost(0.0),
        ));
        checks.push(Check::new(
            format!("{}_abs_beta_difference_first_minus_last", family.name()),
            gaps[0] - last,
            Bound::GreaterThan(0.0),
        ));
        checks.push(Check::new(
            format!("{}_cauchy_ratio", family.name()),
            cauchy,
            Bound::AtMost(1.0 + 1e-12),
        ));
    }
    Ok((rows, checks, json!({})))
}

fn purity(c: &PurityConfig) -> Result<SuiteOutput> {
    check_n_list(&c.n_list)?;
    let mc = c.mc.settings()?;
    let alpha = c.mc.alpha;
    let n_max = largest(&c.n_list)?;
    let profile = c.quad.profile(&c.n_list)?;
    let f_seq = c
        .consistent
        .build(Family::Quad, c.quad.r, &c.n_list, Some(&profile))?
        .plus(&c.tail.build(Family::Quad, c.quad.r, &c.n_list, Some(&profile))?)?;
    let classification = if f_seq.entries.len() >= 3 {
        Some(classify(&f_seq, c.classification)?)
    } else {
        None
    };
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    for e in &f_seq.entries {
        let test = c.quad.test(&profile, e.n, alpha)?;
        let at = profile.at(e.n).expect("profile covers n_list");
        let (head, tail) = decompose(&e.signal, c.cutoff_factor * e.k_n as f64);
        let delta = noncentrality(&tail, at, c.quad.sigma);
        checks.push(Check::new(
            format!("tail_noncentrality_n{}", e.n),
            delta,
            Bound::AtMost(c.max_tail_noncentrality),
        ));
        let mat = run_batch(&test, &[e.signal.clone(), head.clone()], Basis::CosinePi, &mc, e.n)?;
        let size = mat.estimate(0);
        for (case, col, s) in [("f", 1, &e.signal), ("head", 2, &head)] {
            rows.push(
                PowerRow::new("quad", case, e.n)
                    .size(&size)
                    .power(&mat.estimate(col))
                    .predicted(test.predicted_beta(s)?, None)
                    .index(test.drift(s)?),
            );
        }
        let (diff, se) = mat.paired_difference(1, 2);
        let mut row = PowerRow::new("quad", "abs_beta_difference", e.n).index(diff.abs()).param(delta);
        row.std_error = Some(se);
        row.replicates = Some(mc.replicates);
        rows.push(row);
        if e.n == n_max {
            checks.push(Check::new(
                format!("abs_beta_difference_at_n{n_max}"),
                diff.abs(),
                Bound::AtMost(c.max_gap),
            ));
        }
    }
    Ok((rows, checks, json!({ "classification": classification })))
}

fn compactness(c: &CompactnessConfig) -> Result<SuiteOutput> {
    let mc = c.mc.settings()?;
    let alpha = c.mc.alpha;
    if c.spikes.is_empty() || c.spikes.iter().any(|&i| i == 0 || i > c.dim) {
        return Err(Error::precondition("spike indices must lie in 1..=J"));
    }
    let kappa_sq: Vec<f64> = (1..=c.dim).map(|j| (j as f64).powf(-c.kappa_exponent)).collect();
    let test = PreparedTest::fixed(FixedKappa::homoscedastic(kappa_sq.clone())?, alpha, c.null_replicates, c.mc.seed)?;
    let signals: Vec<SignalSpec> = c
        .spikes
        .iter()
        .map(|&i| SignalSpec::spike(Basis::CosinePi, i - 1, c.amplitude))
        .collect();
    let mat = run_batch(&test, &signals, Basis::CosinePi, &mc, 0)?;
    let size = mat.estimate(0);
    let (mut rows, mut checks) = (Vec::new(), Vec::new());
    let mut powers = Vec::new();
    for (k, (&i, s)) in c.spikes.iter().zip(&signals).enumerate() {
        let est = mat.estimate(k + 1);
        powers.push(est.estimate);
        rows.push(
            PowerRow::new("fixed", format!("e_{i}"), 0)
                .param(i as f64)
                .size(&size)
                .power(&est)
                .index(test.drift(s)?),
        );
    }
    let worst = (1..signals.len())
        .map(|k| {
            let (d, se) = mat.paired_difference(k + 1, k);
            d - c.monotone_se * se
        })
        .fold(f64::NEG_INFINITY, f64::max);
    checks.push(Check::new("power_non_increasing", worst, Bound::AtMost(0.0)));
    checks.push(Check::new(
        "power_first_minus_last",
        powers[0] - powers[powers.len() - 1],
        Bound::GreaterThan(0.0),
    ));
    checks.push(Check::new(
        format!("excess_power_e_{}", c.spikes[c.spikes.len() - 1]),
        powers[powers.len() - 1] - alpha,
        Bound::AtMost(c.max_excess),
    ));
    let mut width_err = 0.0f64;
    for axes in &c.ellipsoids {
        if axes.len() > 8 {
            return Err(Error::precondition("width checks are limited to dimension 8"));
        }
        let w = greedy_widths(&SetDescriptor::Ellipsoid { axes: axes.clone() }, axes.len())?;
        let mut sorted = axes.clone();
        sorted.sort_by(|a, b| b.total_cmp(a));
        for (d, a) in w.d.iter().zip(&sorted) {
            width_err = width_err.max((d - a).abs());
        }
    }
    checks.push(Check::new("ellipsoid_width_error", width_err, Bound::AtMost(c.width_tolerance)));
    // the test's alternatives {η : Σκ²η² ≥ const} compare to the ellipsoid with axes κ_j;
    // the coordinate spikes a·e_i form the non-compact cube surrogate
    let dim = c.spikes[c.spikes.len() - 1];
    let ellipsoid = SetDescriptor::Ellipsoid {
        axes: kappa_sq[..dim].iter().map(|k| k.sqrt()).collect(),
    };
    let cube = SetDescriptor::Points {
        points: (0..dim)
            .map(|i| {
                let mut p = vec![0.0; dim];
                p[i] = 1.0;
                p
            })
            .collect(),
    };
    let details = json!({
        "critical": match &test { PreparedTest::Fixed { critical, .. } => *critical, _ => unreachable!() },
        "ellipsoid_diagnostic": compactness_diagnostic(&ellipsoid, c.diagnostic_epsilon, dim)?,
        "cube_diagnostic": compactness_diagnostic(&cube, c.diagnostic_epsilon, dim - 1)?,
    });
    Ok((rows, checks, details))
}

fn unbiasedness(c: &UnbiasednessConfig) -> Result<SuiteOutput> {
    let mc = c.mc.settings()?;
    let (lo, hi) = c.norm_range;
    if c.support == 0 || c.support > c.dim || !(lo > 0.0 && hi >= lo) || c.shifts == 0 {
        return Err(Error::precondition("need 1 ≤ support ≤ J, 0 < lo ≤ hi and at least one shift"));
    }
    let pi2 = std::f64::consts::PI.powi(2);
    let kappa_sq: Vec<f64> = (1..=c.dim).map(|j| 1.0 / (pi2 * (j * j) as f64)).collect();
    let test = PreparedTest::fixed(FixedKappa::homoscedastic(kappa_sq)?, c.mc.alpha, c.null_replicates, c.mc.seed)?;
    let shifts: Vec<SignalSpec> = (0..c.shifts as u64)
        .map(|k| {
            let mut rng = StreamKey::new(c.mc.seed, SHIFT_STREAM, k).rng();
            let v: Vec<f64> = (0..c.support).map(|_| standard_normal(&mut rng)).collect();
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let target = lo + (hi - lo) * open_unit(&mut rng);
            SignalSpec::new(Basis::CosinePi, v.iter().map(|x| x * target / norm).collect())
        })
        .collect::<Result<_>>()?;
    let mat = run_batch(&test, &shifts, Basis::CosinePi, &mc, 0)?;
    let size = mat.estimate(0);
    let mut rows = Vec::new();
    let mut worst = f64::INFINITY;
    for (k, s) in shifts.iter().enumerate() {
        let p = mat.estimate(k + 1);
        let jse = joint_se(&p, &size);
        worst = worst.min(p.estimate - size.estimate + c.se_multiplier * jse);
        let mut row = PowerRow::new("fixed", format!("shift_{k}"), 0)
            .param(s.norm())
            .size(&size)
            .power(&p)
            .index(test.drift(s)?);
        row.std_error = Some(jse);
        rows.push(row);
    }
    let checks = vec![Check::new("min_power_minus_size_plus_joint_se", worst, Bound::GreaterThan(0.0))];
    Ok((rows, checks, json!({})))
}

fn maxiset(c: &MaxisetConfig) -> Result<SuiteOutput> {
    let s = Family::Quad.smoothness(c.r);
    let tau = SignalSpec::new(
        Basis::CosinePi,
        (1..=c.dim)
            .map(|j| {
                let j = j as f64;
                c.tau_scale * (j.powf(-1.0 - 2.0 * s) * (1.0 + j.ln())).sqrt()
            })
            .collect(),
    )?;
    let steps = spike_tail_witness(&tau, s, c.r, &c.m_list)?;
    let n_list: Vec<usize> = steps.iter().map(|st| st.n).collect();
    check_n_list(&n_list)?;
    let profile = c.quad.profile(&n_list)?;
    let mut rows = Vec::new();
    let (mut c_l, mut quad_drift, mut cvm_index) = (Vec::new(), Vec::new(), Vec::new());
    for st in &steps {
        let test = c.quad.test(&profile, st.n, 0.05)?;
        let drift = test.drift(&st.eta)?;
        let cvm = st.n as f64 * cvm_population(&st.eta)?;
        c_l.push(st.c_l);
        quad_drift.push(drift);
        cvm_index.push(cvm);
        rows.push(PowerRow::new("quad", format!("m={}", st.m), st.n).param(st.c_l).index(drift));
        rows.push(PowerRow::new("cvm", format!("m={}", st.m), st.n).param(st.c_l).index(cvm));
    }
    let neg: Vec<f64> = c_l.iter().map(|v| -v).collect();
    let checks = vec![
        decreasing_check("c_l_increasing (negated)".to_string(), &neg),
        decreasing_check("quad_drift_decreasing".to_string(), &quad_drift),
        decreasing_check("cvm_index_decreasing".to_string(), &cvm_index),
    ];
    Ok((rows, checks, json!({ "s": s, "n_list": n_list })))
}
