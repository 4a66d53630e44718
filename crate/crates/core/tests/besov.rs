mod common;

use common::*;
use rand::Rng;
use uniconsist::alternatives::{decompose, head_ball_certificate, make_consistent, ConsistentSpec, Family, MassProfile};
use uniconsist::classes::{besov_seminorm, tail_bound_check, BesovBody, BesovVariant};
use uniconsist::signal::{Basis, SignalSpec};

#[test]
fn seminorm_matches_dense_grid() {
    let mut rng = rng(909);
    for _ in 0..100 {
        let freqs = rng.random_range(1..=40);
        let s = rng.random_range(0.1..2.0);
        let a = random_cos(&mut rng, freqs, 1.0);
        let masses: Vec<f64> = a.iter().map(|c| c * c).collect();
        let f = SignalSpec::new(Basis::CosinePi, a).unwrap();
        let got = besov_seminorm(&f, s).unwrap();
        let oracle = besov_grid_oracle(&masses, s);
        assert!((got - oracle).abs() <= 1e-12 * got.max(1.0), "{got} vs {oracle}");
    }
}

/// Polynomially decaying members `θ_j = c j^{-1/2-s}` sit on the boundary of the body.
fn member(s: f64, p0: f64, len: usize) -> SignalSpec {
    let raw: Vec<f64> = (1..=len).map(|j| (j as f64).powf(-0.5 - s)).collect();
    let f = SignalSpec::new(Basis::CosinePi, raw).unwrap();
    let scale = (p0 / besov_seminorm(&f, s).unwrap()).sqrt();
    f.scaled(scale)
}

#[test]
fn tail_bound_holds_for_members() {
    let (r, p0) = (0.25, 2.0);
    let s = Family::Quad.smoothness(r);
    let body = BesovBody::new(s, p0, BesovVariant::BarB).unwrap();
    let f = member(s, p0, 4096);
    assert!(body.contains(&f));
    for n in [10, 100, 1000, 10_000] {
        for c1 in [0.5, 1.0, 3.0] {
            let rep = tail_bound_check(&f, s, p0, r, n, c1).unwrap();
            assert!(rep.ok, "n = {n}, C1 = {c1}: {rep:?}");
        }
    }
    let outside = f.scaled(2.0);
    assert!(tail_bound_check(&outside, s, p0, r, 100, 1.0).is_err());
}

#[test]
fn band_limited_sequences_lie_in_one_ball() {
    let profile = uniconsist::quad::build_profile(uniconsist::quad::ProfileSpec {
        r: 0.3,
        gamma: 4.0,
        c: 1.0,
        truncation: uniconsist::quad::Truncation::Scaled { scale: 4.0 },
        n_list: vec![64, 256, 1024, 4096],
        mode: uniconsist::quad::ProfileMode::Varying,
        band_limit: None,
    })
    .unwrap();
    for fam in [Family::Quad, Family::Kernel, Family::Chi2] {
        let spec = ConsistentSpec {
            family: fam,
            r: 0.3,
            c1: 0.5,
            c2: 2.0,
            amplitude: 1.0,
            profile: MassProfile::Random,
            n_list: vec![64, 256, 1024, 4096],
            seed: 3,
        };
        let seq = make_consistent(&spec, Some(&profile)).unwrap();
        let s = fam.smoothness(0.3);
        let seminorms: Vec<f64> = seq.entries.iter().map(|e| besov_seminorm(&e.signal, s).unwrap()).collect();
        for e in &seq.entries {
            let cert = head_ball_certificate(&decompose(&e.signal, spec.c2 * e.k_n as f64).0, spec.c2 * e.k_n as f64, s).unwrap();
            assert!(cert.ok);
        }
        // one radius covers every n: k_n^{2s} n^{-2r} stays bounded
        let max = seminorms.iter().cloned().fold(0.0, f64::max);
        let min = seminorms.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(max / min < 4.0, "{fam:?}: {seminorms:?}");
    }
}
