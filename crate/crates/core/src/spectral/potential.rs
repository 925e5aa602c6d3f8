use super::automaton::Automaton;
use crate::error::{Error, Result};
use crate::group::Letter;
use crate::walk::GreenEngine;
use std::collections::BTreeMap;

/// Locally constant approximation of `φ_r(ω) = log(G_r(e, ω) / G_r(e, σω))`,
/// `σ` dropping the first letter.
///
/// Values are stored for every automaton path of length `1..=horizon+1`;
/// on longer words `φ_r` is read off the first `horizon + 1` letters.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderPotential {
    pub r: f64,
    pub horizon: usize,
    /// `G_r(e, e)`.
    pub g0: f64,
    values: BTreeMap<Vec<Letter>, f64>,
}

impl CylinderPotential {
    /// Value on a word; words longer than the horizon are cut.
    pub fn value(&self, word: &[Letter]) -> Option<f64> {
        let k = word.len().min(self.horizon + 1);
        self.values.get(&word[..k]).copied()
    }

    /// The cylinders of length `horizon + 1` and their values.
    pub fn cylinders(&self) -> impl Iterator<Item = (&Vec<Letter>, f64)> {
        let len = self.horizon + 1;
        self.values.iter().filter(move |(k, _)| k.len() == len).map(|(k, &v)| (k, v))
    }

    /// Spread `max − min` over the cylinders.
    pub fn spread(&self) -> f64 {
        let (lo, hi) = self
            .cylinders()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), (_, v)| (lo.min(v), hi.max(v)));
        hi - lo
    }

    /// The potential `φ + c`.
    pub fn shifted(&self, c: f64) -> Self {
        let mut out = self.clone();
        out.values.values_mut().for_each(|v| *v += c);
        out
    }

    /// Largest change of the cylinder values against a potential of smaller
    /// horizon.
    pub fn distance_to(&self, coarser: &CylinderPotential) -> f64 {
        self.cylinders()
            .map(|(w, v)| (v - coarser.value(w).unwrap_or(f64::NAN)).abs())
            .fold(0.0, f64::max)
    }
}

/// `φ_r` on all automaton paths of length at most `horizon + 1`.
pub fn build_potential(engine: &GreenEngine, automaton: &Automaton, r: f64, horizon: usize) -> Result<CylinderPotential> {
    if automaton.group() != engine.group() {
        return Err(Error::Precondition("automaton and walk live on different groups".into()));
    }
    let table = engine.green_table(r, horizon + 1)?;
    let g = |letters: &[Letter]| -> Result<f64> {
        let w = automaton.evaluate(letters)?;
        table
            .value(&w)
            .ok_or_else(|| Error::Precondition(format!("no Green value for a word of length {}", w.len())))
    };
    let g0 = g(&[])?;
    let mut values = BTreeMap::new();
    for n in 1..=horizon + 1 {
        for p in automaton.paths(n) {
            let phi = (g(&p)? / g(&p[1..])?).ln();
            if !phi.is_finite() {
                return Err(Error::ToleranceUnreachable {
                    tol: 0.0,
                    reason: format!("non-finite potential on a cylinder of length {n}"),
                });
            }
            values.insert(p, phi);
        }
    }
    Ok(CylinderPotential {
        r,
        horizon,
        g0,
        values,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::build_automaton;
    use crate::walk::{GreenSettings, StepDistribution};
    use crate::GroupModel;

    #[test]
    fn isotropic_potential_is_constant() {
        let g = GroupModel::free(2).unwrap();
        let mu = StepDistribution::lazy(&g, 0.0).unwrap();
        let e = GreenEngine::new(&mu, GreenSettings::quick()).unwrap();
        let a = build_automaton(&g).unwrap();
        let p = build_potential(&e, &a, 1.0, 2).unwrap();
        assert_eq!(p.cylinders().count(), 4 * 9);
        assert!(p.spread() < 1e-12);
        // F(1) = 1/3
        assert!((p.value(&[0, 0, 0, 0, 0]).unwrap() - (1.0f64 / 3.0).ln()).abs() < 1e-10);
        let q = p.shifted(0.5);
        assert!((q.value(&[1]).unwrap() - p.value(&[1]).unwrap() - 0.5).abs() < 1e-15);
    }
}
