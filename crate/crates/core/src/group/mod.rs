//! Reduced words, the word metric and the boundary of tree-like groups.

mod boundary;
mod model;
mod trie;
mod word;

pub use boundary::{check_visual_parameter, prefix, visual_distance, BoundaryPrefix, Shadow};
pub use model::{GroupKind, GroupModel};
pub use trie::{WordId, WordTrie};
pub use word::{GromovProduct, Letter, Word};
