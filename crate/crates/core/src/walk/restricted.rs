use super::engine::GreenEngine;
use super::series::GreenValue;
use crate::error::{Error, Result};
use crate::group::{GroupModel, Word, WordId, WordTrie};
use crate::numerics::CompensatedSum;
use std::collections::BTreeSet;
use std::fmt;
use std::sync::Arc;

/// A set of group elements that paths must stay in between their endpoints.
#[derive(Clone)]
pub enum Region {
    All,
    Ball { center: Word, radius: usize },
    BallComplement { center: Word, radius: usize },
    Finite(BTreeSet<Word>),
    /// Everything except finitely many elements.
    CoFinite(BTreeSet<Word>),
    /// Arbitrary predicate; `bound` is a radius around `e` containing the set,
    /// if one is known.
    Custom {
        predicate: Arc<dyn Fn(&Word) -> bool + Send + Sync>,
        bound: Option<usize>,
    },
}

impl fmt::Debug for Region {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Region::All => write!(f, "All"),
            Region::Ball { center, radius } => write!(f, "Ball({center:?}, {radius})"),
            Region::BallComplement { center, radius } => {
                write!(f, "BallComplement({center:?}, {radius})")
            }
            Region::Finite(s) => write!(f, "Finite({} words)", s.len()),
            Region::CoFinite(s) => write!(f, "CoFinite({} words)", s.len()),
            Region::Custom { bound, .. } => write!(f, "Custom(bound {bound:?})"),
        }
    }
}

impl Region {
    pub fn contains(&self, group: &GroupModel, w: &Word) -> bool {
        match self {
            Region::All => true,
            Region::Ball { center, radius } => group.distance(center, w) <= *radius,
            Region::BallComplement { center, radius } => group.distance(center, w) > *radius,
            Region::Finite(s) => s.contains(w),
            Region::CoFinite(s) => !s.contains(w),
            Region::Custom { predicate, .. } => predicate(w),
        }
    }

    /// Whether the region is known to be finite.
    pub fn is_bounded(&self) -> bool {
        match self {
            Region::Ball { .. } | Region::Finite(_) => true,
            Region::Custom { bound, .. } => bound.is_some(),
            _ => false,
        }
    }
}

/// `G_r(x, y; A) = Σ_n r^n P_x[X_n = y, X_1, …, X_{n−1} ∈ A]`.
///
/// For bounded `A` the killed walk loses mass geometrically and the tail is
/// estimated from the observed decay. For unbounded `A` the tail is bounded
/// by `p_n ≤ ρ̄^n`, which needs `r ρ̄ < 1`.
pub fn restricted_green(
    engine: &GreenEngine,
    r: f64,
    x: &Word,
    y: &Word,
    region: &Region,
    tol: f64,
) -> Result<GreenValue> {
    engine.check_weight(r)?;
    let group = engine.group().clone();
    if let Region::All = region {
        return engine.green(r, &group.mul(&group.inverse(x), y));
    }
    let bounded = region.is_bounded();
    let x_bar = r * engine.spectral_radius().upper();
    if !bounded && x_bar >= 1.0 {
        return Err(Error::OutsideRegime(format!(
            "unbounded region at weight {r} ≥ 1/ρ̄ has no tail certificate"
        )));
    }
    let budget = engine.settings().node_budget;
    let max_steps = 200_000;
    let mu = engine.step_distribution();
    let outcomes = mu.outcomes();

    let mut trie = WordTrie::new(&group);
    let xid = trie.intern(x);
    let yid = trie.intern(y);
    let mut inside: Vec<Option<bool>> = vec![];
    let in_region = |trie: &WordTrie, inside: &mut Vec<Option<bool>>, id: WordId| -> bool {
        let i = id.0 as usize;
        if inside.len() <= i {
            inside.resize(i + 1, None);
        }
        *inside[i].get_or_insert_with(|| region.contains(&group, &trie.word(id)))
    };

    let mut alive: Vec<(WordId, f64)> = vec![(xid, 1.0)];
    let mut acc = CompensatedSum::new();
    if xid == yid {
        acc.add(1.0);
    }
    let mut buf: Vec<f64> = vec![];
    let mut touched: Vec<WordId> = vec![];
    let mut rn = 1.0;
    let mut masses: Vec<f64> = vec![1.0];
    for n in 1..=max_steps {
        rn *= r;
        for &(id, m) in &alive {
            for (w, p) in &outcomes {
                let t = trie.mul_word(id, w);
                let i = t.0 as usize;
                if buf.len() <= i {
                    buf.resize(i + 1, 0.0);
                }
                if buf[i] == 0.0 {
                    touched.push(t);
                }
                buf[i] += m * p;
            }
        }
        if trie.node_count() > budget {
            return Err(Error::BudgetExceeded {
                what: "restricted Green function".into(),
                needed: trie.node_count() as u128,
                budget: budget as u128,
            });
        }
        let at_y = buf.get(yid.0 as usize).copied().unwrap_or(0.0);
        acc.add(rn * at_y);
        let mut next = Vec::with_capacity(touched.len());
        let mut mass = 0.0;
        for &t in &touched {
            let v = std::mem::take(&mut buf[t.0 as usize]);
            if v > 0.0 && in_region(&trie, &mut inside, t) {
                next.push((t, v));
                mass += v;
            }
        }
        touched.clear();
        next.sort_unstable_by_key(|e| e.0);
        alive = next;
        masses.push(mass);
        let value = acc.value();
        if mass == 0.0 {
            return Ok(GreenValue {
                value,
                error_bound: 0.0,
                truncation_n: n,
                heuristic: false,
            });
        }
        // later terms are at most r^{m} times the mass alive at time m-1
        let certified = (x_bar < 1.0).then(|| (((n + 1) as f64) * x_bar.ln()).exp() / (1.0 - x_bar));
        if let Some(b) = certified {
            if b <= tol * value {
                return Ok(GreenValue {
                    value,
                    error_bound: b,
                    truncation_n: n,
                    heuristic: false,
                });
            }
        }
        if bounded && n >= 20 {
            let q = r * (masses[n] / masses[n - 2]).sqrt();
            if q < 1.0 {
                let est = rn * r * mass / (1.0 - q);
                if est <= tol * value {
                    return Ok(GreenValue {
                        value,
                        error_bound: est,
                        truncation_n: n,
                        heuristic: true,
                    });
                }
            }
        }
    }
    Err(Error::ToleranceUnreachable {
        tol,
        reason: format!("restricted series not converged after {max_steps} steps"),
    })
}
