//! Oracles shared by the integration tests. They work from first principles
//! (direct quadrature, direct sums) and do not call the library routine
//! they are compared against.
#![allow(dead_code)]

use std::f64::consts::{PI, SQRT_2};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const GL10: [(f64, f64); 5] = [
    (0.148_874_338_981_631_2, 0.295_524_224_714_752_9),
    (0.433_395_394_129_247_2, 0.269_266_719_309_996_4),
    (0.679_409_568_299_024_4, 0.219_086_362_515_982_0),
    (0.865_063_366_688_984_5, 0.149_451_349_150_580_6),
    (0.973_906_528_517_171_7, 0.066_671_344_308_688_1),
];

/// Composite 10-point Gauss–Legendre on `panels` equal pieces of [a, b].
pub fn gl(f: impl Fn(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
    let w = (b - a) / panels as f64;
    let mut total = 0.0;
    for p in 0..panels {
        let mid = a + (p as f64 + 0.5) * w;
        let half = 0.5 * w;
        for &(x, wt) in &GL10 {
            total += wt * half * (f(mid - half * x) + f(mid + half * x));
        }
    }
    total
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `Σ a_j √2 cos(πjt)` with `a` indexed from j = 1.
pub fn cos_series(a: &[f64], t: f64) -> f64 {
    a.iter()
        .enumerate()
        .map(|(k, c)| c * SQRT_2 * (PI * (k + 1) as f64 * t).cos())
        .sum()
}

/// Real trig series `y_0 + Σ (c_j √2 cos 2πjt + s_j √2 sin 2πjt)` from `[c_1, s_1, c_2, ...]`.
pub fn trig_series(y0: f64, pairs: &[f64], t: f64) -> f64 {
    y0 + pairs
        .chunks_exact(2)
        .enumerate()
        .map(|(i, cs)| {
            let w = 2.0 * PI * (i + 1) as f64 * t;
            SQRT_2 * (cs[0] * w.cos() + cs[1] * w.sin())
        })
        .sum::<f64>()
}

/// Random trig coefficients on `freqs` frequencies with `Σ|coef| √2 ≤ budget`.
pub fn random_trig(rng: &mut ChaCha8Rng, freqs: usize, budget: f64) -> Vec<f64> {
    let raw: Vec<f64> = (0..2 * freqs).map(|_| rng.random_range(-1.0..1.0)).collect();
    let l1: f64 = raw.iter().map(|c| c.abs()).sum::<f64>() * SQRT_2;
    raw.iter().map(|c| c * budget / l1).collect()
}

pub fn random_cos(rng: &mut ChaCha8Rng, freqs: usize, scale: f64) -> Vec<f64> {
    (0..freqs).map(|_| scale * rng.random_range(-1.0..1.0)).collect()
}

/// `n m Σ_l (∫_{cell l} f)²` with the cell integrals done by quadrature.
pub fn chi2_population_oracle(pairs: &[f64], m: usize, n: usize) -> f64 {
    let panels = (pairs.len() / 2).max(1) * 2;
    let energy: f64 = (0..m)
        .map(|l| {
            let (a, b) = (l as f64 / m as f64, (l + 1) as f64 / m as f64);
            gl(|t| trig_series(0.0, pairs, t), a, b, panels).powi(2)
        })
        .sum();
    n as f64 * m as f64 * energy
}

/// `∫∫ min(s,t) f(s) f(t) ds dt = 2 ∫_0^1 f(t) ∫_0^t s f(s) ds dt` by nested quadrature.
pub fn cvm_min_kernel_oracle(a: &[f64]) -> f64 {
    let panels = 4 * a.len().max(1);
    2.0 * gl(
        |t| cos_series(a, t) * gl(|s| s * cos_series(a, s), 0.0, t, panels),
        0.0,
        1.0,
        panels,
    )
}

/// Same double integral with the Brownian-bridge kernel `min(s,t) - st`.
pub fn cvm_bridge_kernel_oracle(a: &[f64]) -> f64 {
    let panels = 4 * a.len().max(1);
    let first = gl(|s| s * cos_series(a, s), 0.0, 1.0, panels);
    cvm_min_kernel_oracle(a) - first * first
}

/// `‖K_h * Y‖²` for the periodic trig polynomial `Y`, convolving in time.
pub fn kernel_time_domain(kernel: impl Fn(f64) -> f64, h: f64, y0: f64, pairs: &[f64]) -> f64 {
    let freqs = pairs.len() / 2;
    let smoothed = |t: f64| gl(|v| kernel(v) * trig_series(y0, pairs, t - h * v), -1.0, 1.0, 8 + freqs);
    gl(|t| smoothed(t).powi(2), 0.0, 1.0, 4 * freqs + 4)
}

/// `max` of `λ^{2s} Σ_{j>λ} mass_j` over a dense grid plus points just below each integer.
pub fn besov_grid_oracle(masses: &[f64], s: f64) -> f64 {
    let tail = |lambda: f64| -> f64 {
        masses
            .iter()
            .enumerate()
            .filter(|(i, _)| (*i + 1) as f64 > lambda)
            .map(|(_, m)| m)
            .sum()
    };
    let top = masses.len() as f64;
    let mut best = 0.0f64;
    let steps = 64 * masses.len();
    for k in 1..=steps {
        let lambda = top * k as f64 / steps as f64;
        best = best.max(lambda.powf(2.0 * s) * tail(lambda));
    }
    for j in 1..=masses.len() {
        let lambda = j as f64 * (1.0 - 1e-15);
        best = best.max(lambda.powf(2.0 * s) * tail(lambda));
    }
    best
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}
