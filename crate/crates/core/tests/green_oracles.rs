//! Green functions of nearest-neighbour tree walks against closed forms.

use hypbrw::walk::{
    ancona_ratio_scan, multiplicativity_constants, restricted_green, second_moment_bound, two_point_sum,
    GeneralKernel, GreenEngine, GreenSettings, Region, StepDistribution,
};
use hypbrw::{GroupModel, Word};
use proptest::prelude::*;
use std::collections::BTreeSet;

/// First-passage generating function `F` and `G(e,e)` of the lazy isotropic
/// walk on the `d`-regular tree, from the quadratic
/// `F = r[(1−p0)/d + p0 F + (1−p0)(d−1)/d F²]`.
fn tree_oracle(d: f64, p0: f64, r: f64) -> (f64, f64) {
    let a = r * (1.0 - p0) * (d - 1.0) / d;
    let b = 1.0 - r * p0;
    let c = r * (1.0 - p0) / d;
    let disc = (b * b - 4.0 * a * c).max(0.0);
    let f = (b - disc.sqrt()) / (2.0 * a);
    let g0 = 1.0 / (1.0 - r * (p0 + (1.0 - p0) * f));
    (f, g0)
}

fn rho_oracle(d: f64, p0: f64) -> f64 {
    p0 + (1.0 - p0) * 2.0 * (d - 1.0).sqrt() / d
}

fn engine(g: &GroupModel, p0: f64) -> GreenEngine {
    GreenEngine::new(&StepDistribution::lazy(g, p0).unwrap(), GreenSettings::quick()).unwrap()
}

fn word_of_len(g: &GroupModel, k: usize) -> Word {
    let toks: Vec<&str> = ["a1", "a2"].iter().cycle().take(k).copied().collect();
    g.parse_word(&toks.join(" ")).unwrap()
}

#[test]
fn oracle_reproduces_frozen_values() {
    let (f1, g1) = tree_oracle(4.0, 0.0, 1.0);
    assert!((f1 - 1.0 / 3.0).abs() < 1e-15);
    assert!((g1 - 1.5).abs() < 1e-15);
    let rc = 2.0 / 3f64.sqrt();
    let (fc, gc) = tree_oracle(4.0, 0.0, rc);
    assert!((fc - 1.0 / 3f64.sqrt()).abs() < 1e-7);
    assert!((gc - 3.0).abs() < 1e-6);
}

#[test]
fn subcritical_green_matches_closed_form() {
    let cases = [
        (GroupModel::free(2).unwrap(), 0.0),
        (GroupModel::free(2).unwrap(), 0.5),
        (GroupModel::z2_product(4).unwrap(), 0.0),
        (GroupModel::free(3).unwrap(), 0.25),
    ];
    for (g, p0) in cases {
        let eng = engine(&g, p0);
        let d = g.alphabet_size() as f64;
        let rc = 1.0 / rho_oracle(d, p0);
        for frac in [0.0, 0.3, 0.6, 0.9] {
            let r = 1.0 + frac * (rc - 1.0);
            let (f, g0) = tree_oracle(d, p0, r);
            let table = eng.green_table(r, 40).unwrap();
            let rad = table.radial().unwrap();
            for (k, v) in rad.iter().enumerate() {
                let exact = g0 * f.powi(k as i32);
                let tol = if v.heuristic { 1e-6 } else { 1e-9 };
                assert!(
                    (v.value - exact).abs() <= tol * exact,
                    "{} p0={p0} r={r} k={k}: {} vs {exact}",
                    g.label(),
                    v.value
                );
                if !v.heuristic {
                    assert!((v.value - exact).abs() <= v.error_bound + 1e-13 * exact);
                }
            }
        }
    }
}

#[test]
fn unit_weight_values() {
    let g = GroupModel::free(2).unwrap();
    let eng = engine(&g, 0.0);
    let a = g.parse_word("a1").unwrap();
    let v = eng.green_checked(1.0, &a, 1e-10).unwrap();
    assert!((v.value - 0.5).abs() < 1e-10);
    assert!(!v.heuristic);
    let h = eng.growth_rate(1.0).unwrap();
    assert!((h.h_estimate - 1.0).abs() < 1e-6);
}

#[test]
fn critical_values() {
    let g = GroupModel::free(2).unwrap();
    let eng = engine(&g, 0.0);
    let rc = eng.critical_weight();
    assert!((eng.spectral_radius().rho_hat - 3f64.sqrt() / 2.0).abs() < 1e-6);
    let g0 = eng.green(rc, &Word::identity()).unwrap();
    assert!(g0.heuristic);
    assert!((g0.value - 3.0).abs() < 1e-3, "{g0:?}");
    let h = eng.growth_rate(rc).unwrap();
    assert!((h.h_estimate - 3f64.sqrt()).abs() < 1e-3);
    assert!(h.h_estimate <= g.entropy().exp().sqrt() + 1e-6);
}

#[test]
fn weights_outside_regime_rejected() {
    let g = GroupModel::free(2).unwrap();
    let eng = engine(&g, 0.0);
    assert!(eng.green(0.5, &Word::identity()).is_err());
    assert!(eng.green(0.0, &Word::identity()).is_err());
    assert!(eng.green(1.2, &Word::identity()).is_err());
    assert!(eng.eta(eng.critical_weight()).is_err());
    assert!(eng.derivative_check(eng.critical_weight() - 1e-5, 1e-4).is_err());
}

#[test]
fn derivative_identity() {
    let g = GroupModel::free(2).unwrap();
    let eng = engine(&g, 0.0);
    for r in [1.0, 1.05] {
        let c = eng.derivative_check(r, 1e-4).unwrap();
        assert!(c.relative_error < 1e-4, "{c:?}");
        assert!(c.relative_error_richardson <= c.relative_error + 1e-12);
        let eta = eng.eta(r).unwrap();
        assert!((eta.value - c.rhs).abs() < 1e-8 * c.rhs);
    }
    // Richardson: the error of the central difference shrinks like h²
    let coarse = eng.derivative_check(1.05, 4e-3).unwrap();
    let fine = eng.derivative_check(1.05, 2e-3).unwrap();
    let q = coarse.relative_error / fine.relative_error;
    assert!((q - 4.0).abs() < 0.2, "{q}");
}

#[test]
fn eta_closed_form() {
    // η(r) = d/dr [r G_r(e,e)], differentiated analytically from the oracle
    let g = GroupModel::z2_product(4).unwrap();
    let eng = engine(&g, 0.0);
    let rg = |r: f64| r * tree_oracle(4.0, 0.0, r).1;
    for r in [1.0, 1.08] {
        let h = 1e-5;
        let exact = (rg(r + h) - rg(r - h)) / (2.0 * h);
        let eta = eng.eta(r).unwrap();
        assert!((eta.value - exact).abs() < 1e-7 * exact, "{r}: {} {exact}", eta.value);
    }
}

#[test]
fn multiplicativity_on_trees() {
    let g = GroupModel::free(2).unwrap();
    let eng = engine(&g, 0.0);
    for r in [1.0, 1.1] {
        let s = eng.sphere_series(r, 60).unwrap();
        let c = multiplicativity_constants(&s, 50).unwrap();
        let c10 = multiplicativity_constants(&s, 60).unwrap();
        assert!(c.interior_ratio() <= 1.01);
        let g0 = s.values[0];
        assert!(c.c_sub >= 1.0 / g0 - 1e-12);
        // the m = 0 row gives 1/G(e,e); interior pairs give (d−1)/(d G(e,e))
        assert!((c.c_sub / c.c_sup - 4.0 / 3.0).abs() < 1e-9);
        assert!((c10.c_sub / c.c_sub - 1.0).abs() < 0.01);
        assert!((c10.c_sup / c.c_sup - 1.0).abs() < 0.01);
    }
}

#[test]
fn ancona_ratio_isotropic_is_inverse_diagonal() {
    let g = GroupModel::free(2).unwrap();
    for p0 in [0.0, 0.5] {
        let eng = engine(&g, p0);
        let r = 1.05;
        let g0 = eng.green(r, &Word::identity()).unwrap().value;
        let scan = ancona_ratio_scan(&eng, r, 12).unwrap();
        assert!((scan.max * g0 - 1.0).abs() < 1e-9);
        assert!((scan.min * g0 - 1.0).abs() < 1e-9);
    }
}

#[test]
fn ancona_ratio_general_walk_bounded() {
    let g = GroupModel::free(2).unwrap();
    let w = |s: &str| g.parse_word(s).unwrap();
    let mu = StepDistribution::from_weights(
        &g,
        &[
            (w("e"), 0.2),
            (w("a1"), 0.15),
            (w("A1"), 0.15),
            (w("a2"), 0.25),
            (w("A2"), 0.25),
        ],
    )
    .unwrap();
    let settings = GreenSettings {
        ball_radius: 8,
        store_radius: 3,
        general_depth: 200,
        ..GreenSettings::quick()
    };
    let eng = GreenEngine::new(&mu, settings).unwrap();
    assert!(eng.radial_kernel().is_none());
    let scan = ancona_ratio_scan(&eng, 1.0, 3).unwrap();
    assert!(scan.spread() < 10.0, "{scan:?}");
    assert!(scan.min > 0.0);
}

#[test]
fn general_engine_on_simple_walk_matches_closed_form() {
    let g = GroupModel::free(2).unwrap();
    let mu = StepDistribution::simple(&g);
    let k = GeneralKernel::new(&mu, 9, 3, 300, 1 << 22).unwrap();
    let rho = k.spectral_radius();
    assert!((rho.rho_hat - 3f64.sqrt() / 2.0).abs() < 2e-2, "{rho:?}");
    let (f, g0) = tree_oracle(4.0, 0.0, 1.0);
    for len in 0..=3 {
        let x = word_of_len(&g, len);
        let v = k.green(1.0, &x).unwrap();
        let exact = g0 * f.powi(len as i32);
        assert!((v.value - exact).abs() < 1e-4 * exact, "{len}: {v:?} vs {exact}");
    }
}

#[test]
fn restricted_green_cases() {
    let g = GroupModel::free(2).unwrap();
    let e = Word::identity();
    let x = word_of_len(&g, 3);
    let eng = engine(&g, 0.0);
    let all = restricted_green(&eng, 1.0, &e, &x, &Region::All, 1e-10).unwrap();
    assert_eq!(all.value, eng.green(1.0, &x).unwrap().value);
    let only_e: BTreeSet<Word> = [e.clone()].into_iter().collect();
    let far = restricted_green(&eng, 1.0, &e, &x, &Region::Finite(only_e.clone()), 1e-10).unwrap();
    assert_eq!(far.value, 0.0);

    // the lazy walk held at e: Σ (r p0)^n
    let lazy = engine(&g, 0.4);
    let held = restricted_green(&lazy, 1.02, &e, &e, &Region::Finite(only_e), 1e-12).unwrap();
    assert!((held.value - 1.0 / (1.0 - 1.02 * 0.4)).abs() < 1e-12);

    // inside the unit ball a loop at e is a string of excursions e → s → e
    let r = 1.1;
    let ball = Region::Ball { center: e.clone(), radius: 1 };
    let v = restricted_green(&eng, r, &e, &e, &ball, 1e-12).unwrap();
    let excursion = 4.0 * (r / 4.0) * (r / 4.0);
    let exact = 1.0 / (1.0 - excursion);
    assert!((v.value - exact).abs() < 1e-10, "{v:?} {exact}");
}

#[test]
fn second_moment_bound_matches_brute_force() {
    let g = GroupModel::free(2).unwrap();
    let eng = engine(&g, 0.0);
    let r = 1.0;
    let (f, g0) = tree_oracle(4.0, 0.0, r);
    let green = |a: &Word, b: &Word| g0 * f.powi(g.distance(a, b) as i32);
    let pairs = [("e", "e"), ("a1", "a1"), ("a1", "A2"), ("a1 a2", "a1 A1"), ("a2 a2 a1", "A1")];
    let ball = g.enumerate_ball(10, 1 << 22).unwrap();
    for (xs, ys) in pairs {
        let x = g.parse_word(xs).unwrap();
        let y = g.parse_word(ys).unwrap();
        let mut brute = 0.0;
        for z in &ball {
            brute += green(&Word::identity(), z) * green(z, &x) * green(z, &y);
        }
        let b = second_moment_bound(&eng, r, 1.15, &x, &y).unwrap();
        assert!((b.value / 1.15 - brute).abs() < 1e-6 * brute, "{xs},{ys}: {} {brute}", b.value);
    }
}

#[test]
fn two_point_sum_matches_exhaustive_sum() {
    let g = GroupModel::free(2).unwrap();
    let eng = engine(&g, 0.0);
    let r = 1.0;
    let (f, g0) = tree_oracle(4.0, 0.0, r);
    let green = |a: &Word, b: &Word| g0 * f.powi(g.distance(a, b) as i32);
    let ball = g.enumerate_ball(9, 1 << 22).unwrap();
    for n in 1..=2 {
        let sphere = g.enumerate_sphere(n, 1 << 20).unwrap();
        for k in (0..=2 * n).step_by(2) {
            let mut brute = 0.0;
            for x in &sphere {
                for y in &sphere {
                    if g.distance(x, y) != k {
                        continue;
                    }
                    for z in &ball {
                        brute += green(&Word::identity(), z) * green(z, x) * green(z, y);
                    }
                }
            }
            let s = two_point_sum(&eng, r, n, k).unwrap();
            assert!((s.value - brute).abs() < 1e-5 * brute, "n={n} k={k}: {} {brute}", s.value);
            assert!(s.ratio.is_finite() && s.ratio > 0.0);
        }
    }
    assert_eq!(two_point_sum(&eng, r, 2, 3).unwrap().value, 0.0);
}

#[test]
fn two_point_ratio_bounded_over_scan() {
    let g = GroupModel::free(2).unwrap();
    let eng = engine(&g, 0.0);
    let mut ratios = vec![];
    for n in 1..=5 {
        for k in (0..=2 * n).step_by(2) {
            ratios.push(two_point_sum(&eng, 1.05, n, k).unwrap().ratio);
        }
    }
    let max = ratios.iter().cloned().fold(0.0, f64::max);
    let min = ratios.iter().cloned().fold(f64::MAX, f64::min);
    assert!(max / min < 100.0, "{ratios:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn green_monotone_in_weight(len in 0usize..30, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let g = GroupModel::free(2).unwrap();
        let eng = engine(&g, 0.0);
        let rc = eng.critical_weight();
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let r1 = 1.0 + 0.95 * lo * (rc - 1.0);
        let r2 = 1.0 + 0.95 * hi * (rc - 1.0);
        let x = word_of_len(&g, len);
        let g1 = eng.green(r1, &x).unwrap().value;
        let g2 = eng.green(r2, &x).unwrap().value;
        prop_assert!(g1 <= g2 * (1.0 + 1e-12));
        prop_assert!(eng.green(r1, &Word::identity()).unwrap().value >= 1.0);
    }

    #[test]
    fn growth_rate_increasing_and_bounded(a in 0.0f64..1.0) {
        let g = GroupModel::z2_product(4).unwrap();
        let eng = engine(&g, 0.0);
        let rc = eng.critical_weight();
        let r1 = 1.0 + a * (rc - 1.0 - 0.02);
        let h1 = eng.growth_rate(r1).unwrap().h_estimate;
        let h2 = eng.growth_rate(r1 + 0.01).unwrap().h_estimate;
        prop_assert!(h1 >= 1.0 - 1e-9);
        prop_assert!(h2 > h1);
        prop_assert!(h2 <= g.entropy().exp().sqrt() + 1e-6);
    }
}
