use std::fmt;

/// Generator index inside a group's alphabet.
pub type Letter = u8;

/// A reduced word, stored letter by letter from the left.
///
/// Reducedness is maintained by [`super::GroupModel`]; a `Word` never holds a
/// cancelling pair `s s⁻¹` next to each other.
#[derive(Clone, Default, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<Letter>);

impl Word {
    pub fn identity() -> Self {
        Word(Vec::new())
    }

    /// Wraps letters that are already known to be reduced.
    pub(crate) fn from_reduced(letters: Vec<Letter>) -> Self {
        Word(letters)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn is_identity(&self) -> bool {
        self.0.is_empty()
    }

    pub fn letters(&self) -> &[Letter] {
        &self.0
    }

    pub fn last(&self) -> Option<Letter> {
        self.0.last().copied()
    }

    /// The first `k` letters; a prefix of a reduced word is reduced.
    pub fn truncated(&self, k: usize) -> Word {
        Word(self.0[..k.min(self.0.len())].to_vec())
    }

    /// Length of the longest common prefix.
    pub fn common_prefix_len(&self, other: &Word) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }

    pub fn starts_with(&self, prefix: &Word) -> bool {
        self.0.starts_with(&prefix.0)
    }

    pub(crate) fn push_unchecked(&mut self, l: Letter) {
        self.0.push(l);
    }

    pub(crate) fn pop_unchecked(&mut self) {
        self.0.pop();
    }
}

impl fmt::Debug for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Word{:?}", self.0)
    }
}

/// Gromov product of two group elements at the identity.
///
/// Stored doubled so half-integer values stay exact.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GromovProduct(u64);

impl GromovProduct {
    pub fn from_doubled(twice: u64) -> Self {
        GromovProduct(twice)
    }

    pub fn doubled(self) -> u64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0 as f64 / 2.0
    }

    /// Floor of the product, the number of letters shared by the geodesics.
    pub fn floor(self) -> u64 {
        self.0 / 2
    }
}
