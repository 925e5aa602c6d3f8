//! Sums of products of Green functions and the constants around them.

use super::engine::{GreenEngine, GreenTable, SphereGreenSeries};
use super::series::GreenValue;
use crate::error::{Error, Result};
use crate::group::{GroupModel, Letter, Word};
use crate::numerics::CompensatedSum;
use std::collections::BTreeSet;

/// Extreme values of `H_{m+n} / (H_m H_n)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MultiplicativityConstants {
    /// `max` over `m, n ≥ 0`, `m + n ≤ N`: the submultiplicativity constant.
    pub c_sub: f64,
    /// `min` over the same range: the supermultiplicativity constant.
    pub c_sup: f64,
    /// The same extremes restricted to `m, n ≥ 1`.
    pub c_sub_interior: f64,
    pub c_sup_interior: f64,
    pub n_max: usize,
}

impl MultiplicativityConstants {
    pub fn interior_ratio(&self) -> f64 {
        self.c_sub_interior / self.c_sup_interior
    }
}

/// Scans `H_{m+n} / (H_m H_n)` over `m + n ≤ N`.
pub fn multiplicativity_constants(series: &SphereGreenSeries, n_max: usize) -> Result<MultiplicativityConstants> {
    if n_max > series.n_max() || n_max < 2 {
        return Err(Error::InsufficientData(format!(
            "multiplicativity scan to {n_max} needs sphere sums to that radius"
        )));
    }
    let h = &series.values;
    let mut out = MultiplicativityConstants {
        c_sub: f64::MIN,
        c_sup: f64::MAX,
        c_sub_interior: f64::MIN,
        c_sup_interior: f64::MAX,
        n_max,
    };
    for m in 0..=n_max {
        for n in 0..=n_max - m {
            let q = h[m + n] / (h[m] * h[n]);
            out.c_sub = out.c_sub.max(q);
            out.c_sup = out.c_sup.min(q);
            if m >= 1 && n >= 1 {
                out.c_sub_interior = out.c_sub_interior.max(q);
                out.c_sup_interior = out.c_sup_interior.min(q);
            }
        }
    }
    Ok(out)
}

/// Radial values of an isotropic engine, long enough for tripod sums.
fn radial_table(engine: &GreenEngine, r: f64) -> Result<GreenTable> {
    if engine.radial_kernel().is_none() {
        return Err(Error::Precondition(
            "Green-product sums are implemented for isotropic walks".into(),
        ));
    }
    engine.green_table(r, engine.max_radius())
}

/// `Σ_z G(e, z) G(z, x) G(z, y)` over the whole group, for isotropic walks.
///
/// Every `z` projects to a nearest point `v` of the finite subtree spanned by
/// `e, x, y`; distances from `z` to the three points are those of `v` plus
/// the depth `t` of `z` below `v`, and the number of such `z` at depth `t`
/// depends only on the degree of `v` inside the subtree.
pub fn tripod_sum(table: &GreenTable, x: &Word, y: &Word) -> Result<GreenValue> {
    let group = table.group();
    let rad = table
        .radial()
        .ok_or_else(|| Error::Precondition("tripod sums need a radial table".into()))?;
    let cap = rad.len() - 1;
    let mut hull: BTreeSet<Word> = BTreeSet::new();
    for w in [x, y] {
        for k in 0..=w.len() {
            hull.insert(w.truncated(k));
        }
    }
    let d = group.alphabet_size();
    let b = (d - 1) as f64;
    let mut acc = CompensatedSum::new();
    let mut err = 0.0;
    let mut heuristic = false;
    for v in &hull {
        let mut deg = if v.is_identity() { 0 } else { 1 };
        deg += group
            .letters()
            .filter(|&l| {
                let mut c = v.clone();
                let before = c.len();
                group.push_letter(&mut c, l);
                c.len() > before && hull.contains(&c)
            })
            .count();
        let free = (d - deg) as f64;
        let (a0, a1, a2) = (v.len(), group.distance(v, x), group.distance(v, y));
        let mut count = 1.0;
        let mut last = f64::INFINITY;
        let mut t = 0;
        loop {
            let m = a0.max(a1).max(a2) + t;
            if m > cap {
                return Err(Error::BudgetExceeded {
                    what: "radial table for tripod sum".into(),
                    needed: m as u128,
                    budget: cap as u128,
                });
            }
            let (g0, g1, g2) = (rad[a0 + t], rad[a1 + t], rad[a2 + t]);
            let term = count * g0.value * g1.value * g2.value;
            acc.add(term);
            err += term * (g0.relative_error() + g1.relative_error() + g2.relative_error());
            heuristic |= g0.heuristic || g1.heuristic || g2.heuristic;
            if free == 0.0 {
                break;
            }
            let ratio = term / last;
            if t >= 2 && term < 1e-17 * acc.value() && ratio < 1.0 {
                err += term * ratio / (1.0 - ratio);
                break;
            }
            last = term;
            count = if t == 0 { free } else { count * b };
            t += 1;
        }
    }
    Ok(GreenValue {
        value: acc.value(),
        error_bound: err,
        truncation_n: 0,
        heuristic,
    })
}

/// `σ² Σ_z G_λ(e,z) G_λ(z,x) G_λ(z,y)`, the bound on `E[Z_x Z_y]`.
pub fn second_moment_bound(
    engine: &GreenEngine,
    lambda: f64,
    sigma2: f64,
    x: &Word,
    y: &Word,
) -> Result<GreenValue> {
    let table = radial_table(engine, lambda)?;
    let s = tripod_sum(&table, x, y)?;
    Ok(GreenValue {
        value: sigma2 * s.value,
        error_bound: sigma2 * s.error_bound,
        ..s
    })
}

/// The two-point sum over pairs on the sphere of radius `n` at distance `k`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TwoPointSum {
    pub n: usize,
    pub k: usize,
    /// `Σ_{x,y ∈ S_n, d(x,y)=k} Σ_z G(e,z) G(z,x) G(z,y)` over ordered pairs.
    pub value: f64,
    /// `value / H^{n + k/2}`.
    pub ratio: f64,
    pub h: f64,
    pub heuristic: bool,
}

/// Reduced word of length `n` following a fixed branch.
fn branch_word(group: &GroupModel, first: Letter, n: usize) -> Word {
    let mut w = Word::identity();
    let mut l = first;
    for _ in 0..n {
        let mut c = w.clone();
        group.push_letter(&mut c, l);
        if c.len() < w.len() + 1 {
            l = (l + 2) % group.alphabet_size() as Letter;
            c = w.clone();
            group.push_letter(&mut c, l);
        }
        w = c;
        l = (l + 2) % group.alphabet_size() as Letter;
    }
    w
}

/// Pairs on a sphere of a tree at distance `k` have common prefix length
/// `n - k/2`; all such pairs are equivalent under the automorphisms of the
/// tree fixing `e`, so one representative pair per `k` suffices.
pub fn two_point_sum(engine: &GreenEngine, lambda: f64, n: usize, k: usize) -> Result<TwoPointSum> {
    let group = engine.group().clone();
    let h = engine.growth_rate(lambda)?.h_estimate;
    if k % 2 == 1 || k > 2 * n {
        return Ok(TwoPointSum {
            n,
            k,
            value: 0.0,
            ratio: 0.0,
            h,
            heuristic: false,
        });
    }
    let table = radial_table(engine, lambda)?;
    let c = n - k / 2;
    let d = group.alphabet_size() as f64;
    let b = d - 1.0;
    let (count, x, y) = if c == n {
        let x = branch_word(&group, 0, n);
        (group.sphere_size(n) as f64, x.clone(), x)
    } else {
        let stem = branch_word(&group, 0, c);
        let children: Vec<Letter> = group
            .letters()
            .filter(|&l| {
                let mut w = stem.clone();
                group.push_letter(&mut w, l);
                w.len() > stem.len()
            })
            .take(2)
            .collect();
        let extend = |l: Letter| {
            let mut out = stem.clone();
            for &t in branch_word(&group, l, n - c).letters() {
                group.push_letter(&mut out, t);
            }
            debug_assert_eq!(out.len(), n);
            out
        };
        let branches = if c == 0 { d } else { b };
        let count = group.sphere_size(c) as f64 * branches * (branches - 1.0) * b.powi(2 * (n - c - 1) as i32);
        (count, extend(children[0]), extend(children[1]))
    };
    debug_assert_eq!(group.distance(&x, &y), k);
    let s = tripod_sum(&table, &x, &y)?;
    let value = count * s.value;
    Ok(TwoPointSum {
        n,
        k,
        value,
        ratio: value / h.powf(n as f64 + k as f64 / 2.0),
        h,
        heuristic: s.heuristic,
    })
}

/// Range of the Ancona ratio `G(x,z) / (G(x,y) G(y,z))` for `y` on a geodesic
/// from `x` to `z`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AnconaScan {
    pub max: f64,
    pub min: f64,
    pub samples: usize,
}

impl AnconaScan {
    pub fn spread(&self) -> f64 {
        self.max / self.min
    }
}

/// By left invariance it suffices to take `x = e`, `z = w` and `y` a prefix
/// of `w`; all words with `|w| ≤ n_max` and all split points are scanned.
pub fn ancona_ratio_scan(engine: &GreenEngine, r: f64, n_max: usize) -> Result<AnconaScan> {
    let group = engine.group().clone();
    let table = engine.green_table(r, n_max)?;
    let mut scan = AnconaScan {
        max: f64::MIN,
        min: f64::MAX,
        samples: 0,
    };
    let mut record = |q: f64| {
        scan.max = scan.max.max(q);
        scan.min = scan.min.min(q);
        scan.samples += 1;
    };
    if let Some(rad) = table.radial() {
        for m in 0..=n_max {
            for a in 0..=m {
                record(rad[m].value / (rad[a].value * rad[m - a].value));
            }
        }
    } else {
        for w in group.enumerate_ball(n_max, engine.settings().node_budget as u128)? {
            let gw = table.value(&w).unwrap();
            for j in 0..=w.len() {
                let y = w.truncated(j);
                let gy = table.value(&y).unwrap();
                let gyz = table.between(&y, &w).unwrap();
                record(gw / (gy * gyz));
            }
        }
    }
    Ok(scan)
}
