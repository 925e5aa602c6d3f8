use super::run::{run, BrwConfig, TraceRecord};
use crate::error::{Error, Result};
use crate::group::Word;
use crate::numerics::{fit_line, median};
use crate::walk::GreenEngine;
use rayon::prelude::*;

/// Growth rate of `M_n` from a log-linear fit.
#[derive(Clone, Debug, PartialEq)]
pub struct GrowthEstimate {
    /// `exp` of the slope of `log(mean M_n)` over the pooled replicas.
    pub pooled: f64,
    pub pooled_stderr: f64,
    /// Median of the per-replica estimates.
    pub median: f64,
    pub per_replica: Vec<f64>,
    /// Radii `lo..=hi` used in the fit.
    pub window: (usize, usize),
    pub replicas_used: usize,
}

/// Largest `R` such that, for every `n ≤ R`, less than `fraction` of the
/// expected visits to `S_n` happen after generation `generations`.
///
/// Expected visits up to generation `G` are `Σ_{m ≤ G} λ^m P(|Y_m| = n)`
/// and in total `H_n(λ)`.
pub fn settled_radius(engine: &GreenEngine, lambda: f64, generations: usize, fraction: f64) -> Result<usize> {
    let kern = engine.radial_kernel().ok_or_else(|| {
        Error::Precondition("settled radius needs an isotropic walk".into())
    })?;
    if generations > kern.depth() {
        return Err(Error::BudgetExceeded {
            what: "heat kernel depth for settled radius".into(),
            needed: generations as u128,
            budget: kern.depth() as u128,
        });
    }
    let n_max = generations.min(engine.max_radius());
    let series = engine.sphere_series(lambda, n_max)?;
    let mut settled = None;
    for n in 0..=n_max {
        let mut partial = 0.0;
        let mut w = 1.0;
        for m in 0..=generations {
            partial += w * kern.radius_probability(m, n);
            w *= lambda;
        }
        if 1.0 - partial / series.values[n] >= fraction {
            break;
        }
        settled = Some(n);
    }
    settled.ok_or_else(|| Error::InsufficientData("no settled radius".into()))
}

/// Fits over radii `window.0..=window.1`, skipping truncated runs.
pub fn growth_rate(traces: &[TraceRecord], window: (usize, usize)) -> Result<GrowthEstimate> {
    let (lo, hi) = window;
    if hi < lo + 4 {
        return Err(Error::InsufficientData(format!(
            "growth fit needs at least 5 radii, window is {lo}..={hi}"
        )));
    }
    let used: Vec<&TraceRecord> = traces
        .iter()
        .filter(|t| !t.truncated && t.generations >= 20)
        .collect();
    if used.is_empty() {
        return Err(Error::InsufficientData(
            "no complete run with at least 20 generations".into(),
        ));
    }
    let ns: Vec<f64> = (lo..=hi).map(|n| n as f64).collect();
    let pooled_log: Vec<f64> = (lo..=hi)
        .map(|n| (used.iter().map(|t| t.m(n) as f64).sum::<f64>() / used.len() as f64).ln())
        .collect();
    if pooled_log.iter().any(|v| !v.is_finite()) {
        return Err(Error::InsufficientData(format!(
            "some sphere in {lo}..={hi} was never visited"
        )));
    }
    let fit = fit_line(&ns, &pooled_log)?;
    let pooled = fit.slope.exp();
    let mut per_replica = vec![];
    for t in &used {
        let ys: Vec<f64> = (lo..=hi).map(|n| (t.m(n) as f64).ln()).collect();
        if ys.iter().all(|v| v.is_finite()) {
            per_replica.push(fit_line(&ns, &ys)?.slope.exp());
        }
    }
    let median = median(&per_replica).unwrap_or(f64::NAN);
    Ok(GrowthEstimate {
        pooled,
        pooled_stderr: pooled * fit.slope_stderr,
        median,
        per_replica,
        window,
        replicas_used: used.len(),
    })
}

/// Monte Carlo mean with its standard error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MomentEstimate {
    pub mean: f64,
    pub stderr: f64,
}

impl MomentEstimate {
    fn from_sums(sum: u128, sum_sq: u128, n: u64) -> Self {
        let nf = n as f64;
        let mean = sum as f64 / nf;
        let var = if n > 1 {
            ((sum_sq as f64 / nf - mean * mean) * nf / (nf - 1.0)).max(0.0)
        } else {
            0.0
        };
        MomentEstimate {
            mean,
            stderr: (var / nf).sqrt(),
        }
    }
}

/// Empirical `E[Z_x]` and `E[Z_x Z_y]` over independent replicas.
#[derive(Clone, Debug, PartialEq)]
pub struct MomentTable {
    pub replicas: u64,
    pub words: Vec<Word>,
    pub first: Vec<MomentEstimate>,
    pub pair_words: Vec<Word>,
    /// `second[i][j]` estimates `E[Z_x Z_y]` for `x = pair_words[i]`,
    /// `y = pair_words[j]`.
    pub second: Vec<Vec<MomentEstimate>>,
}

#[derive(Clone)]
struct Sums {
    s1: Vec<u128>,
    s2: Vec<u128>,
    p1: Vec<u128>,
    p2: Vec<u128>,
}

impl Sums {
    fn new(n: usize, k: usize) -> Self {
        Sums {
            s1: vec![0; n],
            s2: vec![0; n],
            p1: vec![0; k * k],
            p2: vec![0; k * k],
        }
    }

    fn add(&mut self, o: &Sums) {
        for (a, b) in [(&mut self.s1, &o.s1), (&mut self.s2, &o.s2), (&mut self.p1, &o.p1), (&mut self.p2, &o.p2)] {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
        }
    }
}

const CHUNK: u64 = 1024;

/// Runs `replicas` copies and accumulates visit-count moments exactly in
/// integers, so the result does not depend on thread scheduling.
pub fn moment_experiment(
    cfg: &BrwConfig,
    replicas: u64,
    words: &[Word],
    pair_words: &[Word],
) -> Result<MomentTable> {
    if replicas == 0 {
        return Err(Error::InsufficientData("no replicas requested".into()));
    }
    let too_long = words.iter().chain(pair_words).find(|w| w.len() > cfg.record_depth);
    if let Some(w) = too_long {
        return Err(Error::Precondition(format!(
            "word of length {} beyond record depth {}",
            w.len(),
            cfg.record_depth
        )));
    }
    let (n, k) = (words.len(), pair_words.len());
    let chunks = replicas.div_ceil(CHUNK);
    let partial: Vec<Result<Sums>> = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut s = Sums::new(n, k);
            let mut zp = vec![0u128; k];
            for r in c * CHUNK..((c + 1) * CHUNK).min(replicas) {
                let t = run(cfg, r)?;
                if t.truncated {
                    return Err(Error::BudgetExceeded {
                        what: format!("population of replica {r}"),
                        needed: t.particle_steps as u128 + 1,
                        budget: cfg.population_budget as u128,
                    });
                }
                for (i, w) in words.iter().enumerate() {
                    let z = t.z(w) as u128;
                    s.s1[i] += z;
                    s.s2[i] += z * z;
                }
                for (i, w) in pair_words.iter().enumerate() {
                    zp[i] = t.z(w) as u128;
                }
                for i in 0..k {
                    if zp[i] == 0 {
                        continue;
                    }
                    for j in 0..k {
                        let v = zp[i] * zp[j];
                        s.p1[i * k + j] += v;
                        s.p2[i * k + j] += v * v;
                    }
                }
            }
            Ok(s)
        })
        .collect();
    let mut total = Sums::new(n, k);
    for p in partial {
        total.add(&p?);
    }
    Ok(MomentTable {
        replicas,
        words: words.to_vec(),
        first: (0..n)
            .map(|i| MomentEstimate::from_sums(total.s1[i], total.s2[i], replicas))
            .collect(),
        pair_words: pair_words.to_vec(),
        second: (0..k)
            .map(|i| {
                (0..k)
                    .map(|j| MomentEstimate::from_sums(total.p1[i * k + j], total.p2[i * k + j], replicas))
                    .collect()
            })
            .collect(),
    })
}

/// `E[Z_x]` over `replicas` runs.
pub fn empirical_first_moment(cfg: &BrwConfig, x: &Word, replicas: u64) -> Result<MomentEstimate> {
    Ok(moment_experiment(cfg, replicas, std::slice::from_ref(x), &[])?.first[0])
}

/// `E[Z_x Z_y]` over `replicas` runs.
pub fn empirical_second_moment(cfg: &BrwConfig, x: &Word, y: &Word, replicas: u64) -> Result<MomentEstimate> {
    let t = moment_experiment(cfg, replicas, &[], &[x.clone(), y.clone()])?;
    Ok(t.second[0][1])
}

/// Speeds and big jumps of one trace.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SpeedReport {
    /// Minimum of `|X_u| / |u|` over generations `from..=to`.
    pub min_speed: f64,
    pub max_speed: f64,
    pub from: usize,
    pub to: usize,
    /// Big jumps landing after generation `⌈1/ε⌉`.
    pub big_jumps_late: u64,
    /// Big jumps made from radius at least `⌈1/ε⌉`.
    pub big_jumps_far: u64,
}

/// Jumps are judged against `trace`'s own `ε`; `epsilon` only sets the
/// thresholds `⌈1/ε⌉` and should match the configuration.
pub fn speed_and_jump_report(trace: &TraceRecord, from: usize, to: usize, epsilon: f64) -> Result<SpeedReport> {
    if trace.generations < 30 || to > trace.generations || from == 0 || from > to {
        return Err(Error::InsufficientData(format!(
            "speed window {from}..={to} needs a trace of at least 30 generations, got {}",
            trace.generations
        )));
    }
    let window = &trace.speed[from..=to];
    let after = (1.0 / epsilon).ceil() as usize;
    Ok(SpeedReport {
        min_speed: window.iter().map(|s| s.0).fold(f64::INFINITY, f64::min),
        max_speed: window.iter().map(|s| s.1).fold(0.0, f64::max),
        from,
        to,
        big_jumps_late: trace.big_jumps.iter().filter(|j| j.0 > after).count() as u64,
        big_jumps_far: trace.big_jumps.iter().filter(|j| j.1 >= after).count() as u64,
    })
}
