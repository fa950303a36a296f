//! Token streams and single-stream post-processing.
//!
//! Multi-stream (PQ/RPQ) output must stay frame-aligned across its `M`
//! streams, so every operation here that could shorten a stream refuses
//! inputs with more than one stream.

mod io;
mod merges;

pub use io::{
    read_merge_table, read_merge_table_from, read_token_streams, read_token_streams_from,
    write_merge_table, write_merge_table_to, write_token_streams, write_token_streams_to,
};
pub use merges::{apply_merges, train_merges, train_merges_with_base, MergeRule, MergeTable};

use std::collections::HashSet;

use crate::error::{Error, Result};

/// Default vocabulary size for subword merging of discrete units.
pub const DEFAULT_TARGET_VOCAB: usize = 3000;

/// The `M` sub-quantizer tokens of one frame.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct FrameCode(pub Vec<u32>);

impl FrameCode {
    pub fn tokens(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// Per-frame token tuples for one utterance, stored flat (`n_frames x n_streams`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TokenStream {
    utterance_id: String,
    n_streams: usize,
    tokens: Vec<u32>,
}

impl TokenStream {
    pub fn new(utterance_id: impl Into<String>, n_streams: usize, tokens: Vec<u32>) -> Result<Self> {
        if n_streams == 0 {
            return Err(Error::Shape("a token stream needs at least one stream".into()));
        }
        if tokens.len() % n_streams != 0 {
            return Err(Error::Shape(format!(
                "{} tokens do not form whole frames of {n_streams}",
                tokens.len()
            )));
        }
        Ok(Self { utterance_id: utterance_id.into(), n_streams, tokens })
    }

    pub fn single(utterance_id: impl Into<String>, tokens: Vec<u32>) -> Self {
        Self { utterance_id: utterance_id.into(), n_streams: 1, tokens }
    }

    pub fn from_frames(utterance_id: impl Into<String>, n_streams: usize, frames: &[FrameCode]) -> Result<Self> {
        let mut tokens = Vec::with_capacity(frames.len() * n_streams);
        for (t, f) in frames.iter().enumerate() {
            if f.len() != n_streams {
                return Err(Error::Shape(format!(
                    "frame {t} has {} tokens, stream has {n_streams}",
                    f.len()
                )));
            }
            tokens.extend_from_slice(f.tokens());
        }
        Self::new(utterance_id, n_streams, tokens)
    }

    pub fn utterance_id(&self) -> &str {
        &self.utterance_id
    }

    pub fn n_streams(&self) -> usize {
        self.n_streams
    }

    pub fn n_frames(&self) -> usize {
        self.tokens.len() / self.n_streams
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn frame(&self, t: usize) -> &[u32] {
        &self.tokens[t * self.n_streams..(t + 1) * self.n_streams]
    }

    pub fn frames(&self) -> std::slice::ChunksExact<'_, u32> {
        self.tokens.chunks_exact(self.n_streams)
    }

    pub fn as_slice(&self) -> &[u32] {
        &self.tokens
    }

    pub(crate) fn require_single(&self, op: &str) -> Result<()> {
        if self.n_streams != 1 {
            return Err(Error::Alignment(format!(
                "{op} on a {}-stream utterance {:?} would desynchronize its streams",
                self.n_streams, self.utterance_id
            )));
        }
        Ok(())
    }
}

/// Collapses runs of identical consecutive tokens.
pub fn dedup(s: &TokenStream) -> Result<TokenStream> {
    s.require_single("deduplication")?;
    let mut tokens = s.tokens.clone();
    tokens.dedup();
    Ok(TokenStream::single(s.utterance_id.clone(), tokens))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StreamStats {
    /// Mean number of frames per utterance.
    pub avg_length: f64,
    /// Distinct token ids across the corpus.
    pub vocab_used: usize,
}

pub fn stream_stats(corpus: &[TokenStream]) -> StreamStats {
    if corpus.is_empty() {
        return StreamStats { avg_length: 0.0, vocab_used: 0 };
    }
    let frames: usize = corpus.iter().map(TokenStream::n_frames).sum();
    let vocab: HashSet<u32> = corpus.iter().flat_map(|s| s.tokens.iter().copied()).collect();
    StreamStats {
        avg_length: frames as f64 / corpus.len() as f64,
        vocab_used: vocab.len(),
    }
}
