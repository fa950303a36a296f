use std::collections::HashMap;

use crate::error::{Error, Result};

use super::TokenStream;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MergeRule {
    pub left: u32,
    pub right: u32,
    pub new: u32,
}

/// Ordered merge rules. Rule `i` creates token `base_vocab + i`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MergeTable {
    merges: Vec<MergeRule>,
    base_vocab: usize,
    target_vocab: usize,
}

impl MergeTable {
    pub fn new(merges: Vec<MergeRule>, base_vocab: usize, target_vocab: usize) -> Result<Self> {
        if target_vocab < base_vocab || merges.len() != target_vocab - base_vocab {
            return Err(Error::Format(format!(
                "{} merges cannot grow a vocabulary from {base_vocab} to {target_vocab}",
                merges.len()
            )));
        }
        for (i, rule) in merges.iter().enumerate() {
            let expected = base_vocab + i;
            if rule.new as usize != expected {
                return Err(Error::Format(format!(
                    "merge {i} creates token {}, expected {expected}",
                    rule.new
                )));
            }
            if rule.left as usize >= expected || rule.right as usize >= expected {
                return Err(Error::Format(format!(
                    "merge {i} uses a token not yet in the vocabulary"
                )));
            }
        }
        Ok(Self { merges, base_vocab, target_vocab })
    }

    pub fn merges(&self) -> &[MergeRule] {
        &self.merges
    }

    pub fn base_vocab(&self) -> usize {
        self.base_vocab
    }

    pub fn target_vocab(&self) -> usize {
        self.target_vocab
    }
}

/// Learns merges with the base vocabulary taken as `max token + 1`.
pub fn train_merges(corpus: &[TokenStream], target_vocab: usize) -> Result<MergeTable> {
    let base = corpus
        .iter()
        .flat_map(|s| s.as_slice().iter().copied())
        .max()
        .map_or(0, |m| m as usize + 1);
    train_merges_with_base(corpus, base, target_vocab)
}

/// Greedy pair merging: each step merges the most frequent adjacent pair,
/// ties going to the smallest `(left, right)`. Training stops early, with a
/// correspondingly smaller `target_vocab`, if no adjacent pair is left.
pub fn train_merges_with_base(
    corpus: &[TokenStream],
    base_vocab: usize,
    target_vocab: usize,
) -> Result<MergeTable> {
    if corpus.is_empty() {
        return Err(Error::Training("cannot learn merges from an empty corpus".into()));
    }
    if target_vocab <= base_vocab {
        return Err(Error::Parameter(format!(
            "target vocabulary {target_vocab} must exceed base vocabulary {base_vocab}"
        )));
    }
    if target_vocab > u32::MAX as usize {
        return Err(Error::Parameter(format!("target vocabulary {target_vocab} too large")));
    }
    let mut seqs = Vec::with_capacity(corpus.len());
    for s in corpus {
        s.require_single("subword merging")?;
        if let Some(&t) = s.as_slice().iter().find(|&&t| t as usize >= base_vocab) {
            return Err(Error::Vocabulary(format!(
                "token {t} outside base vocabulary of {base_vocab}"
            )));
        }
        seqs.push(s.as_slice().to_vec());
    }

    let mut merges = Vec::with_capacity(target_vocab - base_vocab);
    let mut counts: HashMap<(u32, u32), usize> = HashMap::new();
    while base_vocab + merges.len() < target_vocab {
        counts.clear();
        for seq in &seqs {
            for w in seq.windows(2) {
                *counts.entry((w[0], w[1])).or_insert(0) += 1;
            }
        }
        let Some((&(left, right), _)) = counts
            .iter()
            .max_by(|(pa, ca), (pb, cb)| ca.cmp(cb).then_with(|| pb.cmp(pa)))
        else {
            break;
        };
        let rule = MergeRule { left, right, new: (base_vocab + merges.len()) as u32 };
        for seq in &mut seqs {
            replace_pair(seq, rule);
        }
        merges.push(rule);
    }
    let achieved = base_vocab + merges.len();
    MergeTable::new(merges, base_vocab, achieved)
}

/// Applies every rule in training order; within a rule the scan is
/// left-to-right and non-overlapping.
pub fn apply_merges(s: &TokenStream, table: &MergeTable) -> Result<TokenStream> {
    s.require_single("subword merging")?;
    if let Some(&t) = s.as_slice().iter().find(|&&t| t as usize >= table.target_vocab) {
        return Err(Error::Vocabulary(format!(
            "token {t} outside vocabulary of {}",
            table.target_vocab
        )));
    }
    let mut seq = s.as_slice().to_vec();
    for &rule in &table.merges {
        if seq.len() < 2 {
            break;
        }
        replace_pair(&mut seq, rule);
    }
    Ok(TokenStream::single(s.utterance_id(), seq))
}

fn replace_pair(seq: &mut Vec<u32>, rule: MergeRule) {
    let mut write = 0;
    let mut read = 0;
    let n = seq.len();
    while read < n {
        if read + 1 < n && seq[read] == rule.left && seq[read + 1] == rule.right {
            seq[write] = rule.new;
            read += 2;
        } else {
            seq[write] = seq[read];
            read += 1;
        }
        write += 1;
    }
    seq.truncate(write);
}
