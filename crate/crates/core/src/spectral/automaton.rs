use crate::error::{Error, Result};
use crate::group::{GroupKind, GroupModel, Letter, Word};
use std::collections::{BTreeSet, VecDeque};

/// Radius to which [`build_automaton`] audits the automaton.
pub const AUDIT_RADIUS: usize = 8;

/// Geodesic automaton of a tree-like group.
///
/// State `0` is the initial state; state `l + 1` means "the last letter read
/// was `l`". Every state accepts.
#[derive(Clone, Debug, PartialEq)]
pub struct Automaton {
    group: GroupModel,
    /// `edges[s]` lists `(letter, target)`.
    edges: Vec<Vec<(Letter, usize)>>,
}

/// Result of checking an automaton against ball enumeration.
#[derive(Clone, Debug, PartialEq)]
pub struct AutomatonAudit {
    pub radius: usize,
    /// Paths of length `≤ radius` from the initial state.
    pub paths: u128,
    pub all_accessible: bool,
    /// Every path reads a reduced word of the same length.
    pub geodesic: bool,
    /// Paths and ball elements are in bijection.
    pub bijective: bool,
}

impl AutomatonAudit {
    pub fn passed(&self) -> bool {
        self.all_accessible && self.geodesic && self.bijective
    }
}

impl Automaton {
    pub const INITIAL: usize = 0;

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub fn num_states(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self, state: usize) -> &[(Letter, usize)] {
        &self.edges[state]
    }

    pub fn out_degree(&self, state: usize) -> usize {
        self.edges[state].len()
    }

    pub fn state_after(letter: Letter) -> usize {
        letter as usize + 1
    }

    /// Whether `next` may follow `prev` (`None`: at the start).
    pub fn follows(&self, prev: Option<Letter>, next: Letter) -> bool {
        let s = prev.map_or(Self::INITIAL, Self::state_after);
        self.edges[s].iter().any(|&(l, _)| l == next)
    }

    /// Number of paths of length `n` from the initial state.
    pub fn path_count(&self, n: usize) -> u128 {
        let mut counts = vec![0u128; self.num_states()];
        counts[Self::INITIAL] = 1;
        for _ in 0..n {
            let mut next = vec![0u128; self.num_states()];
            for (s, &c) in counts.iter().enumerate() {
                for &(_, t) in &self.edges[s] {
                    next[t] += c;
                }
            }
            counts = next;
        }
        counts.iter().sum()
    }

    /// Letter sequences of the paths of length `n` from the initial state.
    pub fn paths(&self, n: usize) -> Vec<Vec<Letter>> {
        let mut out = vec![vec![]];
        for _ in 0..n {
            let mut next = Vec::with_capacity(out.len() * 3);
            for p in &out {
                let s = p.last().map_or(Self::INITIAL, |&l| Self::state_after(l));
                for &(l, _) in &self.edges[s] {
                    let mut q = p.clone();
                    q.push(l);
                    next.push(q);
                }
            }
            out = next;
        }
        out
    }

    /// Group element read along a path.
    pub fn evaluate(&self, path: &[Letter]) -> Result<Word> {
        self.group.reduce(path)
    }

    /// States reachable from `from`.
    fn reachable(&self, from: usize, reverse: bool) -> Vec<bool> {
        let n = self.num_states();
        let mut adj = vec![vec![]; n];
        for s in 0..n {
            for &(_, t) in &self.edges[s] {
                if reverse {
                    adj[t].push(s);
                } else {
                    adj[s].push(t);
                }
            }
        }
        let mut seen = vec![false; n];
        seen[from] = true;
        let mut queue = VecDeque::from([from]);
        while let Some(s) = queue.pop_front() {
            for &t in &adj[s] {
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        seen
    }

    /// Whether the states other than the initial one form one strongly
    /// connected component.
    pub fn recurrent_part_strongly_connected(&self) -> bool {
        let n = self.num_states();
        if n < 2 {
            return false;
        }
        let fwd = self.reachable(1, false);
        let bwd = self.reachable(1, true);
        (1..n).all(|s| fwd[s] && bwd[s])
    }

    /// Checks accessibility, geodesicity and bijectivity onto the ball.
    pub fn audit(&self, radius: usize) -> Result<AutomatonAudit> {
        let accessible = self.reachable(Self::INITIAL, false).iter().all(|&b| b);
        let mut geodesic = true;
        let mut seen = BTreeSet::new();
        let mut paths = 0u128;
        for n in 0..=radius {
            for p in self.paths(n) {
                let w = self.evaluate(&p)?;
                geodesic &= w.len() == n;
                seen.insert(w);
                paths += 1;
            }
        }
        let bijective = paths == seen.len() as u128 && paths == self.group.ball_size(radius);
        Ok(AutomatonAudit {
            radius,
            paths,
            all_accessible: accessible,
            geodesic,
            bijective,
        })
    }
}

/// The automaton accepting reduced words: after letter `s`, any letter but
/// the inverse of `s`.
pub fn build_automaton(group: &GroupModel) -> Result<Automaton> {
    let d = group.alphabet_size();
    let mut edges = vec![(0..d as Letter).map(|l| (l, Automaton::state_after(l))).collect::<Vec<_>>()];
    for s in 0..d as Letter {
        let banned = match group.kind() {
            GroupKind::Free { .. } => group.inverse_letter(s),
            GroupKind::Z2Product { .. } => s,
        };
        edges.push(
            (0..d as Letter)
                .filter(|&t| t != banned)
                .map(|t| (t, Automaton::state_after(t)))
                .collect(),
        );
    }
    let a = Automaton {
        group: group.clone(),
        edges,
    };
    if !a.recurrent_part_strongly_connected() {
        return Err(Error::InvalidGroup("automaton is not strongly connected off the initial state".into()));
    }
    let audit = a.audit(AUDIT_RADIUS)?;
    if !audit.passed() {
        return Err(Error::InvalidGroup(format!("automaton audit failed: {audit:?}")));
    }
    Ok(a)
}
