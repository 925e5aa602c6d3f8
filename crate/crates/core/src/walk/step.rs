use crate::error::{Error, Result};
use crate::group::{GroupModel, Word, WordTrie};
use std::collections::{BTreeMap, VecDeque};

/// Tolerance for the total mass of a step distribution.
const MASS_TOL: f64 = 1e-12;

/// A symmetric, finitely supported probability measure on the group.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDistribution {
    group: GroupModel,
    /// Non-identity support, sorted by word.
    support: Vec<(Word, f64)>,
    laziness: f64,
    isotropic: bool,
    max_step: usize,
}

impl StepDistribution {
    /// Simple random walk: uniform on the generators.
    pub fn simple(group: &GroupModel) -> Self {
        Self::lazy(group, 0.0).expect("simple random walk is valid")
    }

    /// Holds with probability `p0`, otherwise takes a uniform generator step.
    pub fn lazy(group: &GroupModel, p0: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&p0) {
            return Err(Error::NotStochastic(format!(
                "laziness must lie in [0, 1), got {p0}"
            )));
        }
        let w = (1.0 - p0) / group.alphabet_size() as f64;
        let support = group.generators().into_iter().map(|g| (g, w)).collect();
        Self::from_parts(group, support, p0)
    }

    /// General symmetric measure from explicit weights.
    ///
    /// Entries with the same word are merged; the identity may appear and
    /// becomes the holding probability.
    pub fn from_weights(group: &GroupModel, weights: &[(Word, f64)]) -> Result<Self> {
        let mut merged: BTreeMap<Word, f64> = BTreeMap::new();
        for (w, p) in weights {
            if !(p.is_finite() && *p >= 0.0) {
                return Err(Error::NotStochastic(format!("weight {p} is not a probability")));
            }
            *merged.entry(w.clone()).or_insert(0.0) += p;
        }
        let laziness = merged.remove(&Word::identity()).unwrap_or(0.0);
        let support: Vec<(Word, f64)> = merged.into_iter().filter(|(_, p)| *p > 0.0).collect();
        Self::from_parts(group, support, laziness)
    }

    fn from_parts(group: &GroupModel, support: Vec<(Word, f64)>, laziness: f64) -> Result<Self> {
        let total = laziness + support.iter().map(|(_, p)| p).sum::<f64>();
        if (total - 1.0).abs() > MASS_TOL {
            return Err(Error::NotStochastic(format!("total mass {total}")));
        }
        let lookup: BTreeMap<&Word, f64> = support.iter().map(|(w, p)| (w, *p)).collect();
        for (w, p) in &support {
            let inv = group.inverse(w);
            match lookup.get(&inv) {
                Some(q) if q == p => {}
                _ => {
                    return Err(Error::NotSymmetric(format!(
                        "μ({}) = {p} but μ({}) = {}",
                        group.format_word(w),
                        group.format_word(&inv),
                        lookup.get(&inv).copied().unwrap_or(0.0)
                    )))
                }
            }
        }
        let max_step = support.iter().map(|(w, _)| w.len()).max().unwrap_or(0);
        let generators = group.generators();
        let isotropic = support.len() == generators.len()
            && support.iter().all(|(w, p)| w.len() == 1 && *p == support[0].1);
        let mu = StepDistribution {
            group: group.clone(),
            support,
            laziness,
            isotropic,
            max_step,
        };
        mu.check_admissible()?;
        Ok(mu)
    }

    /// The support must generate the group as a semigroup.
    fn check_admissible(&self) -> Result<()> {
        if self.support.is_empty() {
            return Err(Error::NotAdmissible);
        }
        let radius = 2 * self.max_step + 1;
        let mut trie = WordTrie::new(&self.group);
        let mut seen = vec![true];
        let mut queue = VecDeque::from([WordTrie::identity()]);
        let cap = 200_000;
        while let Some(x) = queue.pop_front() {
            for (w, _) in &self.support {
                let y = trie.mul_word(x, w);
                if trie.len(y) > radius {
                    continue;
                }
                if seen.len() <= y.0 as usize {
                    seen.resize(y.0 as usize + 1, false);
                }
                if !seen[y.0 as usize] {
                    seen[y.0 as usize] = true;
                    queue.push_back(y);
                }
            }
            if trie.node_count() > cap {
                break;
            }
        }
        let reached = self.group.generators().iter().all(|g| {
            trie.get(g)
                .is_some_and(|id| seen.get(id.0 as usize).copied().unwrap_or(false))
        });
        if reached {
            Ok(())
        } else {
            Err(Error::NotAdmissible)
        }
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    /// Non-identity support with probabilities.
    pub fn support(&self) -> &[(Word, f64)] {
        &self.support
    }

    pub fn laziness(&self) -> f64 {
        self.laziness
    }

    /// Uniform on generators up to holding at the identity.
    pub fn is_isotropic(&self) -> bool {
        self.isotropic
    }

    /// Supported on generators and the identity only.
    pub fn is_nearest_neighbour(&self) -> bool {
        self.max_step <= 1
    }

    /// Largest word length in the support.
    pub fn max_step(&self) -> usize {
        self.max_step
    }

    pub fn prob(&self, w: &Word) -> f64 {
        if w.is_identity() {
            return self.laziness;
        }
        self.support
            .binary_search_by(|(x, _)| x.cmp(w))
            .map_or(0.0, |i| self.support[i].1)
    }

    /// Support including the identity when it carries mass.
    pub fn outcomes(&self) -> Vec<(Word, f64)> {
        let mut out = Vec::with_capacity(self.support.len() + 1);
        if self.laziness > 0.0 {
            out.push((Word::identity(), self.laziness));
        }
        out.extend(self.support.iter().cloned());
        out
    }

    /// Short description, e.g. `srw`, `lazy:0.5` or `custom`.
    pub fn label(&self) -> String {
        match (self.isotropic, self.laziness) {
            (true, p) if p == 0.0 => "srw".into(),
            (true, p) => format!("lazy:{p}"),
            _ => "custom".into(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn simple_walk_properties() {
        let g = GroupModel::free(2).unwrap();
        let mu = StepDistribution::simple(&g);
        assert!(mu.is_isotropic());
        assert!(mu.is_nearest_neighbour());
        assert_eq!(mu.support().len(), 4);
        assert_eq!(mu.prob(&g.parse_word("A2").unwrap()), 0.25);
        assert_eq!(mu.label(), "srw");
    }

    #[test]
    fn rejects_bad_measures() {
        let g = GroupModel::free(2).unwrap();
        let a = g.parse_word("a1").unwrap();
        let ai = g.parse_word("A1").unwrap();
        let b = g.parse_word("a2").unwrap();
        let bi = g.parse_word("A2").unwrap();
        assert!(matches!(
            StepDistribution::from_weights(&g, &[(a.clone(), 0.5), (ai.clone(), 0.4)]),
            Err(Error::NotStochastic(_))
        ));
        assert!(matches!(
            StepDistribution::from_weights(&g, &[(a.clone(), 0.6), (ai.clone(), 0.4)]),
            Err(Error::NotSymmetric(_))
        ));
        assert!(matches!(
            StepDistribution::from_weights(&g, &[(a.clone(), 0.5), (ai.clone(), 0.5)]),
            Err(Error::NotAdmissible)
        ));
        assert!(matches!(
            StepDistribution::from_weights(&g, &[(Word::identity(), 1.0)]),
            Err(Error::NotAdmissible)
        ));
        let ok = StepDistribution::from_weights(
            &g,
            &[(a, 0.3), (ai, 0.3), (b, 0.2), (bi, 0.2)],
        )
        .unwrap();
        assert!(!ok.is_isotropic());
        assert!(ok.is_nearest_neighbour());
    }

    #[test]
    fn longer_steps_can_generate() {
        let g = GroupModel::free(2).unwrap();
        let w = |s: &str| g.parse_word(s).unwrap();
        let mu = StepDistribution::from_weights(
            &g,
            &[(w("a1 a2"), 0.25), (w("A2 A1"), 0.25), (w("a2"), 0.25), (w("A2"), 0.25)],
        )
        .unwrap();
        assert_eq!(mu.max_step(), 2);
        assert!(!mu.is_nearest_neighbour());
    }
}
