use super::automaton::Automaton;
use super::potential::{build_potential, CylinderPotential};
use crate::error::{Error, Result};
use crate::group::Letter;
use crate::walk::GreenEngine;
use rayon::prelude::*;
use std::collections::{BTreeMap, VecDeque};

/// Transfer matrix of a cylinder potential on paths of length `horizon + 1`.
///
/// The cylinder `ω = (l_1, …, l_{h+1})` moves to `(l_2, …, l_{h+1}, l)` for
/// every letter `l` allowed after `l_{h+1}`, with weight `e^{φ(ω)}`, so that
/// path sums of length `n` reproduce `Π_j e^{φ(σ^j x)}`.
#[derive(Clone, Debug, PartialEq)]
pub struct TransferMatrix {
    pub states: Vec<Vec<Letter>>,
    /// Sparse rows `(column, weight)`.
    pub rows: Vec<Vec<(usize, f64)>>,
}

impl TransferMatrix {
    pub fn dimension(&self) -> usize {
        self.states.len()
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i].iter().find(|&&(c, _)| c == j).map_or(0.0, |&(_, w)| w)
    }

    fn apply(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|row| row.iter().map(|&(j, w)| w * v[j]).sum()).collect()
    }

    fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; v.len()];
        for (i, row) in self.rows.iter().enumerate() {
            for &(j, w) in row {
                out[j] += w * v[i];
            }
        }
        out
    }

    /// Gcd of the cycle lengths, from BFS levels.
    pub fn period(&self) -> usize {
        let n = self.dimension();
        let mut level = vec![usize::MAX; n];
        level[0] = 0;
        let mut queue = VecDeque::from([0]);
        let mut g = 0usize;
        while let Some(i) = queue.pop_front() {
            for &(j, _) in &self.rows[i] {
                if level[j] == usize::MAX {
                    level[j] = level[i] + 1;
                    queue.push_back(j);
                }
            }
        }
        for i in 0..n {
            for &(j, _) in &self.rows[i] {
                if level[i] != usize::MAX {
                    g = gcd(g, (level[i] + 1).abs_diff(level[j]));
                }
            }
        }
        g.max(1)
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn transfer_matrix(potential: &CylinderPotential, automaton: &Automaton) -> Result<TransferMatrix> {
    let states: Vec<Vec<Letter>> = potential.cylinders().map(|(w, _)| w.clone()).collect();
    let index: BTreeMap<&[Letter], usize> = states.iter().enumerate().map(|(i, s)| (s.as_slice(), i)).collect();
    let mut rows = Vec::with_capacity(states.len());
    for s in &states {
        let w = potential.value(s).unwrap().exp();
        let last = *s.last().unwrap();
        let mut row = vec![];
        for &(l, _) in automaton.edges(Automaton::state_after(last)) {
            let mut t = s[1..].to_vec();
            t.push(l);
            let j = *index
                .get(t.as_slice())
                .ok_or_else(|| Error::Precondition("shifted cylinder is not an automaton path".into()))?;
            row.push((j, w));
        }
        rows.push(row);
    }
    Ok(TransferMatrix { states, rows })
}

/// Dominant eigendata of a transfer matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct PressureResult {
    pub r: f64,
    pub horizon: usize,
    /// `log` of the dominant eigenvalue.
    pub pressure: f64,
    /// Right eigenvector, normalised to sum 1.
    pub dominant_vector: Vec<f64>,
    pub left_vector: Vec<f64>,
    /// `|λ_2| / λ_1`, estimated from the contraction of successive iterates.
    pub gap: f64,
    pub period: usize,
    /// `|λ_right − λ_left| / λ`.
    pub left_right_mismatch: f64,
    pub iterations: usize,
}

impl PressureResult {
    /// `e^{pressure}`, the growth rate `H(r)`.
    pub fn growth(&self) -> f64 {
        self.pressure.exp()
    }
}

const MAX_ITERATIONS: usize = 200_000;
const RAYLEIGH_TOL: f64 = 1e-12;

struct PowerResult {
    lambda: f64,
    vector: Vec<f64>,
    contraction: f64,
    iterations: usize,
}

/// Power iteration with sum normalisation on the `period`-th power.
fn power_iterate(apply: &dyn Fn(&[f64]) -> Vec<f64>, n: usize, period: usize) -> Result<PowerResult> {
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.5 * ((i + 1) as f64).sin()).collect();
    let s: f64 = v.iter().sum();
    v.iter_mut().for_each(|x| *x /= s);
    let mut last_q = f64::NAN;
    let mut last_delta = f64::NAN;
    let mut ratios = vec![];
    let mut calm = 0;
    for it in 1..=MAX_ITERATIONS {
        let mut w = v.clone();
        for _ in 0..period {
            w = apply(&w);
        }
        let q = w.iter().zip(&v).map(|(a, b)| a * b).sum::<f64>() / v.iter().map(|b| b * b).sum::<f64>();
        let s: f64 = w.iter().sum();
        if !(s.is_finite() && s > 0.0) {
            return Err(Error::ToleranceUnreachable {
                tol: RAYLEIGH_TOL,
                reason: "power iteration lost positivity".into(),
            });
        }
        w.iter_mut().for_each(|x| *x /= s);
        let delta = w.iter().zip(&v).map(|(a, b)| (a - b).abs()).sum::<f64>();
        if delta > 1e-9 && last_delta > 1e-9 {
            ratios.push(delta / last_delta);
        }
        last_delta = delta;
        v = w;
        if (q - last_q).abs() < RAYLEIGH_TOL * q && delta < 1e-12 {
            calm += 1;
        } else {
            calm = 0;
        }
        last_q = q;
        if calm >= 3 {
            let tail = &ratios[ratios.len().saturating_sub(5)..];
            let contraction = if tail.is_empty() {
                0.0
            } else {
                tail.iter().sum::<f64>() / tail.len() as f64
            };
            return Ok(PowerResult {
                lambda: q.powf(1.0 / period as f64),
                vector: v,
                contraction: contraction.powf(1.0 / period as f64),
                iterations: it,
            });
        }
    }
    let gap = ratios.last().copied().unwrap_or(1.0);
    Err(Error::ToleranceUnreachable {
        tol: RAYLEIGH_TOL,
        reason: format!("power iteration did not converge in {MAX_ITERATIONS} steps (contraction ≈ {gap:.6})"),
    })
}

/// `Pr(φ) = log λ_1` of the transfer matrix.
pub fn pressure(potential: &CylinderPotential, automaton: &Automaton) -> Result<PressureResult> {
    let m = transfer_matrix(potential, automaton)?;
    let period = m.period();
    let n = m.dimension();
    let right = power_iterate(&|v| m.apply(v), n, period)?;
    let left = power_iterate(&|v| m.apply_transpose(v), n, period)?;
    let mismatch = (right.lambda - left.lambda).abs() / right.lambda;
    if mismatch > 1e-10 {
        return Err(Error::ToleranceUnreachable {
            tol: 1e-10,
            reason: format!("left and right eigenvalues differ by {mismatch:e}"),
        });
    }
    if right.vector.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Precondition("dominant eigenvector is not strictly positive".into()));
    }
    Ok(PressureResult {
        r: potential.r,
        horizon: potential.horizon,
        pressure: right.lambda.ln(),
        dominant_vector: right.vector,
        left_vector: left.vector,
        gap: right.contraction,
        period,
        left_right_mismatch: mismatch,
        iterations: right.iterations,
    })
}

/// Pressure at increasing horizons, from `h0` until successive values differ
/// by less than `tol` or `h_max` is reached. Returns the last result and the
/// `(horizon, pressure)` history.
pub fn refined_pressure(
    engine: &GreenEngine,
    automaton: &Automaton,
    r: f64,
    h0: usize,
    h_max: usize,
    tol: f64,
) -> Result<(PressureResult, Vec<(usize, f64)>)> {
    let h_max = h_max.min(engine.max_radius().saturating_sub(1));
    if h0 > h_max {
        return Err(Error::Precondition(format!("starting horizon {h0} exceeds the largest usable {h_max}")));
    }
    let mut history = vec![];
    let mut best = pressure(&build_potential(engine, automaton, r, h0)?, automaton)?;
    history.push((h0, best.pressure));
    for h in h0 + 1..=h_max {
        let next = pressure(&build_potential(engine, automaton, r, h)?, automaton)?;
        let change = (next.pressure - best.pressure).abs();
        history.push((h, next.pressure));
        best = next;
        if change < tol {
            break;
        }
    }
    Ok((best, history))
}

/// Pressure at each weight of a grid, in parallel.
pub fn pressure_curve(engine: &GreenEngine, automaton: &Automaton, horizon: usize, grid: &[f64]) -> Result<Vec<PressureResult>> {
    grid.par_iter()
        .map(|&r| pressure(&build_potential(engine, automaton, r, horizon)?, automaton))
        .collect()
}

/// Both sides of `H_n(r) = G_r(e,e) (ℒ_r^n 1)(∅)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HnrCheck {
    pub n: usize,
    /// `H_n(r)` from the Green engine.
    pub series: f64,
    /// `G_r(e,e)` times the weighted path sum over the automaton.
    pub transfer: f64,
    pub relative_error: f64,
}

/// Sums `Π_j e^{φ(σ^j x)}` over paths of length `n` by building words from
/// the right: the weight of a new first letter depends only on the first
/// `horizon + 1` letters of the word it starts.
pub fn verify_hnr_identity(engine: &GreenEngine, automaton: &Automaton, potential: &CylinderPotential, n: usize) -> Result<HnrCheck> {
    let series = engine.sphere_series(potential.r, n.max(2))?.values[n];
    let width = potential.horizon + 1;
    let mut sums: BTreeMap<Vec<Letter>, f64> = BTreeMap::from([(vec![], 1.0)]);
    let letters: Vec<Letter> = automaton.edges(Automaton::INITIAL).iter().map(|&(l, _)| l).collect();
    for _ in 0..n {
        let mut next: BTreeMap<Vec<Letter>, f64> = BTreeMap::new();
        for (suffix, &s) in &sums {
            for &l in &letters {
                if let Some(&first) = suffix.first() {
                    if !automaton.follows(Some(l), first) {
                        continue;
                    }
                }
                let mut word = Vec::with_capacity(width + 1);
                word.push(l);
                word.extend_from_slice(&suffix[..suffix.len().min(width - 1)]);
                let phi = potential
                    .value(&word)
                    .ok_or_else(|| Error::Precondition("potential misses a cylinder".into()))?;
                word.truncate(width);
                *next.entry(word).or_insert(0.0) += phi.exp() * s;
            }
        }
        sums = next;
    }
    let transfer = potential.g0 * sums.values().sum::<f64>();
    Ok(HnrCheck {
        n,
        series,
        transfer,
        relative_error: (series - transfer).abs() / series,
    })
}
