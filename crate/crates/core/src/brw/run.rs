use super::offspring::OffspringDistribution;
use crate::error::{Error, Result};
use crate::group::{GroupModel, Word, WordId, WordTrie};
use crate::rng::ReplicaStreams;
use crate::walk::{SpectralRadiusEstimate, StepDistribution};
use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use std::collections::BTreeMap;

/// Largest radius for which visit multiplicities are kept.
pub const MAX_RECORD_DEPTH: usize = 12;

/// Parameters of one branching random walk.
#[derive(Clone, Debug, PartialEq)]
pub struct BrwConfig {
    pub mu: StepDistribution,
    pub nu: OffspringDistribution,
    /// Last generation simulated.
    pub max_generation: usize,
    /// Maximum number of particles created over a run.
    pub population_budget: u64,
    /// Visit counts `Z_x` are kept for `|x| ≤ record_depth`.
    pub record_depth: usize,
    /// Particles farther out than this are recorded but have no children.
    pub kill_radius: Option<usize>,
    /// A step `η` is a big jump when `|η| > ε |X_{u−}|`.
    pub jump_epsilon: f64,
    pub seed: u64,
}

impl BrwConfig {
    pub fn new(mu: StepDistribution, nu: OffspringDistribution) -> Self {
        BrwConfig {
            mu,
            nu,
            max_generation: 60,
            population_budget: 10_000_000,
            record_depth: 6,
            kill_radius: None,
            jump_epsilon: 0.1,
            seed: 0,
        }
    }

    pub fn group(&self) -> &GroupModel {
        self.mu.group()
    }

    pub fn lambda(&self) -> f64 {
        self.nu.mean()
    }

    pub fn validate(&self) -> Result<()> {
        if self.population_budget == 0 {
            return Err(Error::Precondition("population budget must be positive".into()));
        }
        if self.record_depth > MAX_RECORD_DEPTH {
            return Err(Error::Precondition(format!(
                "record depth {} exceeds {MAX_RECORD_DEPTH}",
                self.record_depth
            )));
        }
        if !(self.jump_epsilon > 0.0) {
            return Err(Error::Precondition("jump epsilon must be positive".into()));
        }
        Ok(())
    }

    /// Rejects `λ > 1/ρ̂`, where the process is recurrent.
    pub fn check_regime(&self, rho: &SpectralRadiusEstimate) -> Result<()> {
        let lambda = self.lambda();
        if lambda * rho.rho_hat > 1.0 + 1e-9 {
            return Err(Error::OutsideRegime(format!(
                "λ = {lambda} exceeds 1/ρ̂ = {:.12}; the branching walk is recurrent there",
                1.0 / rho.rho_hat
            )));
        }
        Ok(())
    }
}

/// Everything recorded from one run.
#[derive(Clone, Debug)]
pub struct TraceRecord {
    pub replica: u64,
    /// Last generation reached.
    pub generations: usize,
    /// Number of particles in each generation.
    pub population: Vec<u64>,
    /// `P_n`, in order of first visit.
    pub visited: Vec<Vec<WordId>>,
    /// `Z_x` for visited `x` with `|x| ≤ record_depth`.
    pub z_counts: BTreeMap<Word, u64>,
    /// Minimum and maximum of `|X_u| / |u|` over each generation `≥ 1`;
    /// entry 0 is unused.
    pub speed: Vec<(f64, f64)>,
    /// Big jumps as `(generation landed in, parent radius, step length)`.
    pub big_jumps: Vec<(usize, usize, usize)>,
    /// Largest single step taken.
    pub max_jump: usize,
    /// Last generation with a particle at radius `k`, for `k ≤ record_depth`.
    pub last_visit: Vec<Option<usize>>,
    /// Positions in the last generation.
    pub final_positions: Vec<WordId>,
    pub truncated: bool,
    pub extinct: bool,
    pub particle_steps: u64,
    trie: WordTrie,
}

impl TraceRecord {
    pub fn trie(&self) -> &WordTrie {
        &self.trie
    }

    pub fn group(&self) -> &GroupModel {
        self.trie.group()
    }

    /// `M_n = |P_n|` for `n` up to the largest radius visited.
    pub fn m_series(&self) -> Vec<u64> {
        self.visited.iter().map(|v| v.len() as u64).collect()
    }

    pub fn m(&self, n: usize) -> u64 {
        self.visited.get(n).map_or(0, |v| v.len() as u64)
    }

    pub fn visited_words(&self, n: usize) -> Vec<Word> {
        self.visited
            .get(n)
            .map(|v| v.iter().map(|&id| self.trie.word(id)).collect())
            .unwrap_or_default()
    }

    pub fn z(&self, x: &Word) -> u64 {
        self.z_counts.get(x).copied().unwrap_or(0)
    }

    pub fn final_words(&self) -> Vec<Word> {
        self.final_positions.iter().map(|&id| self.trie.word(id)).collect()
    }
}

struct Stepper {
    steps: Vec<Word>,
    sampler: WeightedIndex<f64>,
}

impl Stepper {
    fn new(mu: &StepDistribution) -> Result<Self> {
        let (steps, probs): (Vec<Word>, Vec<f64>) = mu.outcomes().into_iter().unzip();
        let sampler =
            WeightedIndex::new(&probs).map_err(|e| Error::NotStochastic(format!("step law: {e}")))?;
        Ok(Stepper { steps, sampler })
    }
}

/// One run, keyed by `(cfg.seed, replica)`.
pub fn run(cfg: &BrwConfig, replica: u64) -> Result<TraceRecord> {
    cfg.validate()?;
    let streams = ReplicaStreams::new(cfg.seed, replica);
    let stepper = Stepper::new(&cfg.mu)?;
    let mut trie = WordTrie::new(cfg.group());
    let mut seen: Vec<bool> = vec![];
    let mut z: Vec<u64> = vec![];
    let mut t = TraceRecord {
        replica,
        generations: 0,
        population: vec![],
        visited: vec![],
        z_counts: BTreeMap::new(),
        speed: vec![],
        big_jumps: vec![],
        max_jump: 0,
        last_visit: vec![None; cfg.record_depth + 1],
        final_positions: vec![],
        truncated: false,
        extinct: false,
        particle_steps: 0,
        trie: WordTrie::new(cfg.group()),
    };
    let mut current = vec![WordTrie::identity()];
    for m in 0..=cfg.max_generation {
        t.generations = m;
        t.population.push(current.len() as u64);
        let (mut lo, mut hi) = (usize::MAX, 0);
        for &id in &current {
            let i = id.0 as usize;
            if seen.len() <= i {
                seen.resize(trie.node_count(), false);
            }
            let len = trie.len(id);
            lo = lo.min(len);
            hi = hi.max(len);
            if !seen[i] {
                seen[i] = true;
                if t.visited.len() <= len {
                    t.visited.resize(len + 1, vec![]);
                }
                t.visited[len].push(id);
            }
            if len <= cfg.record_depth {
                if z.len() <= i {
                    z.resize(trie.node_count(), 0);
                }
                z[i] += 1;
                t.last_visit[len] = Some(m);
            }
        }
        t.speed.push(if m == 0 {
            (0.0, 0.0)
        } else {
            (lo as f64 / m as f64, hi as f64 / m as f64)
        });
        if m == cfg.max_generation {
            break;
        }
        let mut next = Vec::with_capacity(current.len() * 2);
        let mut any_alive = false;
        'particles: for (i, &id) in current.iter().enumerate() {
            let len = trie.len(id);
            if cfg.kill_radius.is_some_and(|k| len > k) {
                continue;
            }
            any_alive = true;
            let mut rng = streams.particle(m as u64, i as u64);
            let k = cfg.nu.sample(&mut rng);
            if t.particle_steps + k as u64 > cfg.population_budget {
                t.truncated = true;
                break 'particles;
            }
            t.particle_steps += k as u64;
            for _ in 0..k {
                let eta = &stepper.steps[stepper.sampler.sample(&mut rng)];
                t.max_jump = t.max_jump.max(eta.len());
                if eta.len() as f64 > cfg.jump_epsilon * len as f64 {
                    t.big_jumps.push((m + 1, len, eta.len()));
                }
                next.push(trie.mul_word(id, eta));
            }
        }
        if t.truncated {
            break;
        }
        if !any_alive {
            t.extinct = true;
            current.clear();
            break;
        }
        current = next;
    }
    t.final_positions = current;
    for (i, &c) in z.iter().enumerate() {
        if c > 0 {
            t.z_counts.insert(trie.word(WordId(i as u32)), c);
        }
    }
    t.trie = trie;
    Ok(t)
}

/// Runs `replicas` independent copies, in parallel, in replica order.
pub fn run_replicas(cfg: &BrwConfig, replicas: u64) -> Result<Vec<TraceRecord>> {
    (0..replicas).into_par_iter().map(|r| run(cfg, r)).collect()
}
