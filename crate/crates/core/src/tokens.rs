use alloc::string::String;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// The set of token ids occurring in a dataset's tokenized inputs.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenSet {
    ids: Vec<u32>,
    tokenizer_id: String,
}

impl TokenSet {
    /// `ids` must be strictly ascending.
    pub fn new(ids: Vec<u32>, tokenizer_id: impl Into<String>) -> Result<Self> {
        if let Some(i) = ids.windows(2).position(|w| w[0] >= w[1]) {
            return Err(Error::UnsortedTokens(i + 1));
        }
        Ok(Self { ids, tokenizer_id: tokenizer_id.into() })
    }

    pub fn from_unsorted(mut ids: Vec<u32>, tokenizer_id: impl Into<String>) -> Self {
        ids.sort_unstable();
        ids.dedup();
        Self { ids, tokenizer_id: tokenizer_id.into() }
    }

    pub fn ids(&self) -> &[u32] {
        &self.ids
    }

    pub fn tokenizer_id(&self) -> &str {
        &self.tokenizer_id
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    /// `(|a ∩ b|, |a ∪ b|)` by a linear merge of the sorted ids.
    pub fn intersection_union(&self, other: &TokenSet) -> (usize, usize) {
        let (a, b) = (&self.ids, &other.ids);
        let (mut i, mut j, mut common) = (0, 0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                core::cmp::Ordering::Less => i += 1,
                core::cmp::Ordering::Greater => j += 1,
                core::cmp::Ordering::Equal => {
                    common += 1;
                    i += 1;
                    j += 1;
                }
            }
        }
        (common, a.len() + b.len() - common)
    }
}
