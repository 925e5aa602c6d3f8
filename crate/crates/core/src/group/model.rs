use super::word::{GromovProduct, Letter, Word};
use crate::error::{Error, Result};

/// The two families of tree-like groups handled by the crate.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum GroupKind {
    /// Free group on `rank` generators.
    Free { rank: u8 },
    /// Free product of `factors` copies of Z/2.
    Z2Product { factors: u8 },
}

/// A finitely generated group with a tree Cayley graph.
///
/// Letters of a free group are numbered `2i` for `a_{i+1}` and `2i+1` for its
/// inverse. In a free product of Z/2 factors letter `i` is its own inverse.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GroupModel {
    kind: GroupKind,
}

impl GroupModel {
    pub fn free(rank: usize) -> Result<Self> {
        if !(2..=100).contains(&rank) {
            return Err(Error::InvalidGroup(format!(
                "free group rank must lie in 2..=100, got {rank}"
            )));
        }
        Ok(GroupModel {
            kind: GroupKind::Free { rank: rank as u8 },
        })
    }

    pub fn z2_product(factors: usize) -> Result<Self> {
        if !(3..=200).contains(&factors) {
            return Err(Error::InvalidGroup(format!(
                "number of Z/2 factors must lie in 3..=200, got {factors}"
            )));
        }
        Ok(GroupModel {
            kind: GroupKind::Z2Product {
                factors: factors as u8,
            },
        })
    }

    pub fn kind(&self) -> GroupKind {
        self.kind
    }

    /// Number of generators in the symmetric generating set.
    pub fn alphabet_size(&self) -> usize {
        match self.kind {
            GroupKind::Free { rank } => 2 * rank as usize,
            GroupKind::Z2Product { factors } => factors as usize,
        }
    }

    /// Branching number of the Cayley tree.
    pub fn growth_base(&self) -> usize {
        self.alphabet_size() - 1
    }

    /// Volume entropy, the log of the growth base.
    pub fn entropy(&self) -> f64 {
        (self.growth_base() as f64).ln()
    }

    /// Hyperbolicity constant of the Cayley graph. Trees are 0-hyperbolic.
    pub fn delta(&self) -> f64 {
        0.0
    }

    #[inline]
    pub fn inverse_letter(&self, l: Letter) -> Letter {
        match self.kind {
            GroupKind::Free { .. } => l ^ 1,
            GroupKind::Z2Product { .. } => l,
        }
    }

    pub fn letters(&self) -> impl Iterator<Item = Letter> {
        (0..self.alphabet_size()).map(|l| l as Letter)
    }

    /// Every generator as a one-letter word.
    pub fn generators(&self) -> Vec<Word> {
        self.letters()
            .map(|l| Word::from_reduced(vec![l]))
            .collect()
    }

    pub fn generator(&self, l: Letter) -> Result<Word> {
        if (l as usize) < self.alphabet_size() {
            Ok(Word::from_reduced(vec![l]))
        } else {
            Err(Error::UnknownGenerator(format!("#{l}")))
        }
    }

    /// Freely reduces a letter sequence.
    pub fn reduce(&self, letters: &[Letter]) -> Result<Word> {
        let mut w = Word::identity();
        for &l in letters {
            if l as usize >= self.alphabet_size() {
                return Err(Error::UnknownGenerator(format!("#{l}")));
            }
            self.push_letter(&mut w, l);
        }
        Ok(w)
    }

    /// Right multiplication by one generator, in place.
    #[inline]
    pub fn push_letter(&self, w: &mut Word, l: Letter) {
        if w.last() == Some(self.inverse_letter(l)) {
            w.pop_unchecked();
        } else {
            w.push_unchecked(l);
        }
    }

    pub fn mul(&self, x: &Word, y: &Word) -> Word {
        let xs = x.letters();
        let ys = y.letters();
        let mut cancel = 0;
        while cancel < xs.len()
            && cancel < ys.len()
            && xs[xs.len() - 1 - cancel] == self.inverse_letter(ys[cancel])
        {
            cancel += 1;
        }
        let mut out = Vec::with_capacity(xs.len() + ys.len() - 2 * cancel);
        out.extend_from_slice(&xs[..xs.len() - cancel]);
        out.extend_from_slice(&ys[cancel..]);
        Word::from_reduced(out)
    }

    pub fn inverse(&self, x: &Word) -> Word {
        Word::from_reduced(
            x.letters()
                .iter()
                .rev()
                .map(|&l| self.inverse_letter(l))
                .collect(),
        )
    }

    /// Word metric `d(x, y) = |x⁻¹ y|`.
    pub fn distance(&self, x: &Word, y: &Word) -> usize {
        let c = x.common_prefix_len(y);
        x.len() + y.len() - 2 * c
    }

    /// `(x|y)_e = (|x| + |y| - d(x, y)) / 2`, computed from the metric.
    pub fn gromov_product(&self, x: &Word, y: &Word) -> GromovProduct {
        let d = self.mul(&self.inverse(x), y).len();
        GromovProduct::from_doubled((x.len() + y.len() - d) as u64)
    }

    /// Sphere cardinality `|S_n|`, saturating at `u128::MAX`.
    pub fn sphere_size(&self, n: usize) -> u128 {
        if n == 0 {
            return 1;
        }
        let a = self.alphabet_size() as u128;
        let b = self.growth_base() as u128;
        let mut s = a;
        for _ in 1..n {
            s = match s.checked_mul(b) {
                Some(v) => v,
                None => return u128::MAX,
            };
        }
        s
    }

    /// Natural log of `|S_n|`.
    pub fn log_sphere_size(&self, n: usize) -> f64 {
        if n == 0 {
            0.0
        } else {
            (self.alphabet_size() as f64).ln() + (n - 1) as f64 * self.entropy()
        }
    }

    /// Ball cardinality `|B_n|`, saturating.
    pub fn ball_size(&self, n: usize) -> u128 {
        (0..=n).fold(0u128, |acc, k| acc.saturating_add(self.sphere_size(k)))
    }

    /// Words of length exactly `n` in lexicographic letter order.
    pub fn enumerate_sphere(&self, n: usize, budget: u128) -> Result<Vec<Word>> {
        let size = self.sphere_size(n);
        if size > budget {
            return Err(Error::BudgetExceeded {
                what: format!("sphere of radius {n}"),
                needed: size,
                budget,
            });
        }
        let mut out = Vec::with_capacity(size as usize);
        let mut cur = Vec::with_capacity(n);
        self.sphere_dfs(n, &mut cur, &mut out);
        Ok(out)
    }

    fn sphere_dfs(&self, n: usize, cur: &mut Vec<Letter>, out: &mut Vec<Word>) {
        if cur.len() == n {
            out.push(Word::from_reduced(cur.clone()));
            return;
        }
        for l in self.letters() {
            if cur.last() == Some(&self.inverse_letter(l)) {
                continue;
            }
            cur.push(l);
            self.sphere_dfs(n, cur, out);
            cur.pop();
        }
    }

    /// Words of length at most `n`, shortest first.
    pub fn enumerate_ball(&self, n: usize, budget: u128) -> Result<Vec<Word>> {
        let size = self.ball_size(n);
        if size > budget {
            return Err(Error::BudgetExceeded {
                what: format!("ball of radius {n}"),
                needed: size,
                budget,
            });
        }
        let mut out = Vec::with_capacity(size as usize);
        for k in 0..=n {
            out.extend(self.enumerate_sphere(k, budget)?);
        }
        Ok(out)
    }

    pub fn letter_token(&self, l: Letter) -> String {
        match self.kind {
            GroupKind::Free { .. } => {
                let i = l / 2 + 1;
                if l % 2 == 0 {
                    format!("a{i}")
                } else {
                    format!("A{i}")
                }
            }
            GroupKind::Z2Product { .. } => format!("a{}", l + 1),
        }
    }

    pub fn parse_letter(&self, token: &str) -> Result<Letter> {
        let unknown = || Error::UnknownGenerator(token.to_string());
        let (head, idx) = token.split_at(token.char_indices().nth(1).map_or(token.len(), |p| p.0));
        let i: usize = idx.parse().map_err(|_| unknown())?;
        if i == 0 {
            return Err(unknown());
        }
        match (self.kind, head) {
            (GroupKind::Free { rank }, "a") if i <= rank as usize => Ok((2 * (i - 1)) as Letter),
            (GroupKind::Free { rank }, "A") if i <= rank as usize => Ok((2 * (i - 1) + 1) as Letter),
            (GroupKind::Z2Product { factors }, "a") if i <= factors as usize => {
                Ok((i - 1) as Letter)
            }
            _ => Err(unknown()),
        }
    }

    /// Space-separated tokens; the identity is written `e`.
    pub fn format_word(&self, w: &Word) -> String {
        if w.is_identity() {
            return "e".to_string();
        }
        w.letters()
            .iter()
            .map(|&l| self.letter_token(l))
            .collect::<Vec<_>>()
            .join(" ")
    }

    /// Parses tokens and reduces the result.
    pub fn parse_word(&self, s: &str) -> Result<Word> {
        let mut letters = Vec::new();
        for tok in s.split_whitespace() {
            if tok == "e" {
                continue;
            }
            letters.push(self.parse_letter(tok)?);
        }
        self.reduce(&letters)
    }

    /// Short label used in file names and manifests, e.g. `free:2`.
    pub fn label(&self) -> String {
        match self.kind {
            GroupKind::Free { rank } => format!("free:{rank}"),
            GroupKind::Z2Product { factors } => format!("z2:{factors}"),
        }
    }

    /// Inverse of [`GroupModel::label`].
    pub fn from_label(s: &str) -> Result<Self> {
        let bad = || Error::InvalidGroup(format!("cannot parse group `{s}`"));
        let (kind, n) = s.split_once(':').ok_or_else(bad)?;
        let n: usize = n.trim().parse().map_err(|_| bad())?;
        match kind.trim() {
            "free" => GroupModel::free(n),
            "z2" => GroupModel::z2_product(n),
            _ => Err(bad()),
        }
    }
}
