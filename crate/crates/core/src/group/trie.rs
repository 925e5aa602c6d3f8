use super::model::GroupModel;
use super::word::{Letter, Word};

/// Handle to a word interned in a [`WordTrie`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct WordId(pub u32);

const NONE: u32 = u32::MAX;

/// Interning table for reduced words.
///
/// Every interned word is a node of the Cayley tree rooted at the identity,
/// so right multiplication by a generator is either a parent lookup
/// (cancellation) or a child lookup. Ids are handed out in insertion order,
/// which keeps them deterministic for a deterministic insertion sequence.
#[derive(Clone, Debug)]
pub struct WordTrie {
    group: GroupModel,
    alphabet: usize,
    inverse: Vec<Letter>,
    parent: Vec<u32>,
    last: Vec<Letter>,
    depth: Vec<u32>,
    children: Vec<u32>,
}

impl WordTrie {
    pub fn new(group: &GroupModel) -> Self {
        let alphabet = group.alphabet_size();
        WordTrie {
            group: group.clone(),
            alphabet,
            inverse: group.letters().map(|l| group.inverse_letter(l)).collect(),
            parent: vec![NONE],
            last: vec![0],
            depth: vec![0],
            children: vec![NONE; alphabet],
        }
    }

    pub fn group(&self) -> &GroupModel {
        &self.group
    }

    pub const fn identity() -> WordId {
        WordId(0)
    }

    pub fn node_count(&self) -> usize {
        self.parent.len()
    }

    #[inline]
    pub fn len(&self, id: WordId) -> usize {
        self.depth[id.0 as usize] as usize
    }

    #[inline]
    pub fn last_letter(&self, id: WordId) -> Option<Letter> {
        (id.0 != 0).then(|| self.last[id.0 as usize])
    }

    #[inline]
    pub fn parent(&self, id: WordId) -> Option<WordId> {
        let p = self.parent[id.0 as usize];
        (p != NONE).then_some(WordId(p))
    }

    /// Child of `id` along `l`, if already interned.
    #[inline]
    pub fn child(&self, id: WordId, l: Letter) -> Option<WordId> {
        let c = self.children[id.0 as usize * self.alphabet + l as usize];
        (c != NONE).then_some(WordId(c))
    }

    /// Right multiplication by the generator `l`.
    #[inline]
    pub fn step(&mut self, id: WordId, l: Letter) -> WordId {
        let i = id.0 as usize;
        if i != 0 && self.last[i] == self.inverse[l as usize] {
            return WordId(self.parent[i]);
        }
        let slot = i * self.alphabet + l as usize;
        let c = self.children[slot];
        if c != NONE {
            return WordId(c);
        }
        let new = self.parent.len() as u32;
        assert!(new != NONE, "word trie is full");
        self.parent.push(id.0);
        self.last.push(l);
        self.depth.push(self.depth[i] + 1);
        self.children.extend(std::iter::repeat_n(NONE, self.alphabet));
        self.children[slot] = new;
        WordId(new)
    }

    /// Right multiplication by the generator `l` without inserting.
    #[inline]
    pub fn step_lookup(&self, id: WordId, l: Letter) -> Option<WordId> {
        let i = id.0 as usize;
        if i != 0 && self.last[i] == self.inverse[l as usize] {
            return Some(WordId(self.parent[i]));
        }
        self.child(id, l)
    }

    /// Right multiplication by a reduced word.
    pub fn mul_word(&mut self, id: WordId, w: &Word) -> WordId {
        w.letters().iter().fold(id, |acc, &l| self.step(acc, l))
    }

    pub fn intern(&mut self, w: &Word) -> WordId {
        self.mul_word(Self::identity(), w)
    }

    /// Id of `w` if it has been interned.
    pub fn get(&self, w: &Word) -> Option<WordId> {
        w.letters()
            .iter()
            .try_fold(Self::identity(), |acc, &l| self.child(acc, l))
    }

    pub fn word(&self, id: WordId) -> Word {
        let mut letters = vec![0; self.len(id)];
        let mut cur = id.0 as usize;
        for slot in letters.iter_mut().rev() {
            *slot = self.last[cur];
            cur = self.parent[cur] as usize;
        }
        Word::from_reduced(letters)
    }

    /// Ancestor of `id` at depth `k` (the length-`k` prefix).
    pub fn prefix(&self, id: WordId, k: usize) -> WordId {
        let mut cur = id;
        for _ in k..self.len(id) {
            cur = WordId(self.parent[cur.0 as usize]);
        }
        cur
    }
}
