//! Corpus ingestion: vocabulary, window co-occurrence counts, term-document
//! counts and the chunked two-way split used for noise estimation.
//!
//! Tokens are whitespace-separated and taken verbatim; the corpus is expected
//! to be normalized already. Tokens outside the vocabulary are dropped before
//! windowing, so they never occupy a window slot.

use std::collections::HashMap;

use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const DEFAULT_WINDOW: usize = 10;
pub const DEFAULT_CHUNK_SIZE: usize = 10_000;

/// Splits text on ASCII whitespace.
pub fn tokenize(text: &str) -> Vec<&str> {
    text.split_ascii_whitespace().collect()
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Vocab {
    tokens: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
}

impl Vocab {
    /// Builds a vocabulary from an explicit token list, assigning ids in order.
    /// Counts are unknown and recorded as zero.
    pub fn from_tokens<I, S>(tokens: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut vocab = Vocab::default();
        for tok in tokens {
            let tok = tok.into();
            if vocab.index.contains_key(&tok) {
                return Err(Error::InvalidArgument(format!("duplicate token {tok:?}")));
            }
            vocab.index.insert(tok.clone(), vocab.tokens.len());
            vocab.tokens.push(tok);
            vocab.counts.push(0);
        }
        Ok(vocab)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    /// Corpus frequency of each id, as seen by [`build_vocab`].
    pub fn counts(&self) -> &[u64] {
        &self.counts
    }

    /// Maps a token stream to ids, dropping out-of-vocabulary tokens.
    pub fn encode<I, S>(&self, tokens: I) -> Vec<usize>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        tokens
            .into_iter()
            .filter_map(|t| self.id(t.as_ref()))
            .collect()
    }
}

/// Keeps the `max_size` most frequent tokens. Ties are broken by first
/// occurrence in the stream.
pub fn build_vocab<I, S>(corpus: I, max_size: usize) -> Vocab
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    // token -> (count, first position)
    let mut freq: HashMap<String, (u64, usize)> = HashMap::new();
    for (pos, tok) in corpus.into_iter().enumerate() {
        let tok = tok.as_ref();
        match freq.get_mut(tok) {
            Some(entry) => entry.0 += 1,
            None => {
                freq.insert(tok.to_owned(), (1, pos));
            }
        }
    }
    let mut entries: Vec<(String, u64, usize)> =
        freq.into_iter().map(|(t, (c, p))| (t, c, p)).collect();
    entries.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
    entries.truncate(max_size);

    let mut vocab = Vocab::default();
    for (id, (tok, count, _)) in entries.into_iter().enumerate() {
        vocab.index.insert(tok.clone(), id);
        vocab.tokens.push(tok);
        vocab.counts.push(count);
    }
    vocab
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CountKind {
    Cooccurrence,
    TermDocument,
}

/// Nonnegative count matrix. Co-occurrence matrices are square and symmetric;
/// term-document matrices have one row per document and one column per term.
#[derive(Debug, Clone, PartialEq)]
pub struct CountMatrix {
    pub counts: Array2<f64>,
    pub kind: CountKind,
}

impl CountMatrix {
    pub fn new(counts: Array2<f64>, kind: CountKind) -> Result<Self> {
        if let Some(v) = counts.iter().find(|v| !v.is_finite() || **v < 0.0) {
            return Err(Error::InvalidArgument(format!(
                "counts must be finite and nonnegative, found {v}"
            )));
        }
        if kind == CountKind::Cooccurrence {
            let (m, n) = counts.dim();
            if m != n {
                return Err(Error::DimensionMismatch(format!(
                    "co-occurrence counts must be square, got {m}×{n}"
                )));
            }
            for i in 0..n {
                for j in 0..i {
                    if counts[[i, j]] != counts[[j, i]] {
                        return Err(Error::InvalidArgument(format!(
                            "co-occurrence counts are not symmetric at ({i}, {j})"
                        )));
                    }
                }
            }
        }
        Ok(CountMatrix { counts, kind })
    }

    pub fn rows(&self) -> usize {
        self.counts.nrows()
    }

    pub fn cols(&self) -> usize {
        self.counts.ncols()
    }

    pub fn total(&self) -> f64 {
        self.counts.sum()
    }
}

/// Symmetric window co-occurrence counts.
///
/// Every ordered (center, context) pair at distance `1..=window` contributes
/// one count to `C[center][context]`; since the relation is symmetric each
/// unordered pair of positions adds one to both `C[a][b]` and `C[b][a]`.
pub fn cooc_count<I, S>(corpus: I, vocab: &Vocab, window: usize) -> Result<CountMatrix>
where
    I: IntoIterator<Item = S>,
    S: AsRef<str>,
{
    if window == 0 {
        return Err(Error::InvalidArgument("window must be at least 1".into()));
    }
    let ids = vocab.encode(corpus);
    let n = vocab.len();
    let mut counts = Array2::<f64>::zeros((n, n));
    for (i, &center) in ids.iter().enumerate() {
        let end = (i + window + 1).min(ids.len());
        for &context in &ids[i + 1..end] {
            counts[[center, context]] += 1.0;
            counts[[context, center]] += 1.0;
        }
    }
    Ok(CountMatrix {
        counts,
        kind: CountKind::Cooccurrence,
    })
}

/// Raw term frequencies, one row per document.
pub fn term_doc_count<D, S>(documents: &[D], vocab: &Vocab) -> Result<CountMatrix>
where
    D: AsRef<[S]>,
    S: AsRef<str>,
{
    if documents.is_empty() {
        return Err(Error::InvalidArgument("at least one document is required".into()));
    }
    let mut counts = Array2::<f64>::zeros((documents.len(), vocab.len()));
    for (row, doc) in documents.iter().enumerate() {
        for id in vocab.encode(doc.as_ref()) {
            counts[[row, id]] += 1.0;
        }
    }
    Ok(CountMatrix {
        counts,
        kind: CountKind::TermDocument,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Half {
    First,
    Second,
}

/// Assigns `num_chunks` consecutive chunks to two halves with a seeded fair
/// coin. Once a half holds `ceil(num_chunks / 2)` chunks the rest go to the
/// other, so chunk counts differ by at most one.
pub fn split_assignment(num_chunks: usize, seed: u64) -> Vec<Half> {
    let cap = num_chunks.div_ceil(2);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut first, mut second) = (0usize, 0usize);
    let mut out = Vec::with_capacity(num_chunks);
    for _ in 0..num_chunks {
        let half = if first == cap {
            Half::Second
        } else if second == cap || rng.random_bool(0.5) {
            Half::First
        } else {
            Half::Second
        };
        match half {
            Half::First => first += 1,
            Half::Second => second += 1,
        }
        out.push(half);
    }
    out
}

/// Cuts the stream into chunks of `chunk_size` tokens (the last may be
/// shorter) and deals them into two halves, preserving chunk order within
/// each half. Token counts of the halves differ by less than `2 · chunk_size`.
pub fn split_corpus<T: Clone>(
    corpus: &[T],
    chunk_size: usize,
    seed: u64,
) -> Result<(Vec<T>, Vec<T>)> {
    if chunk_size == 0 {
        return Err(Error::InvalidArgument("chunk size must be at least 1".into()));
    }
    let chunks: Vec<&[T]> = corpus.chunks(chunk_size).collect();
    let assignment = split_assignment(chunks.len(), seed);
    let mut first = Vec::with_capacity(corpus.len() / 2 + chunk_size);
    let mut second = Vec::with_capacity(corpus.len() / 2 + chunk_size);
    for (chunk, half) in chunks.into_iter().zip(assignment) {
        match half {
            Half::First => first.extend_from_slice(chunk),
            Half::Second => second.extend_from_slice(chunk),
        }
    }
    Ok((first, second))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn toks(s: &str) -> Vec<&str> {
        tokenize(s)
    }

    /// Enumerates (center, context) position pairs directly.
    fn brute_cooc(ids: &[usize], n: usize, window: usize) -> Array2<f64> {
        let mut c = Array2::zeros((n, n));
        for i in 0..ids.len() {
            for j in 0..ids.len() {
                if i != j && i.abs_diff(j) <= window {
                    c[[ids[i], ids[j]]] += 1.0;
                }
            }
        }
        c
    }

    #[test]
    fn empty_vocab() {
        let v = build_vocab(Vec::<&str>::new(), 10);
        assert!(v.is_empty());
    }

    #[test]
    fn vocab_orders_by_frequency() {
        let v = build_vocab(toks("a b a"), 10);
        assert_eq!(v.tokens(), &["a".to_string(), "b".to_string()]);
        assert_eq!(v.id("a"), Some(0));
        assert_eq!(v.id("b"), Some(1));
        assert_eq!(v.counts(), &[2, 1]);
    }

    #[test]
    fn vocab_ties_break_by_first_occurrence() {
        let v = build_vocab(toks("z y x y z x w"), 3);
        assert_eq!(v.tokens(), &["z".to_string(), "y".into(), "x".into()]);
    }

    #[test]
    fn vocab_from_tokens_rejects_duplicates() {
        assert!(Vocab::from_tokens(["a", "b", "a"]).is_err());
    }

    #[test]
    fn cooc_two_tokens() {
        let v = build_vocab(toks("a b"), 10);
        let c = cooc_count(toks("a b"), &v, 1).unwrap();
        assert_eq!(c.counts, ndarray::array![[0.0, 1.0], [1.0, 0.0]]);
    }

    #[test]
    fn cooc_single_token_is_zero() {
        let v = build_vocab(toks("a"), 10);
        let c = cooc_count(toks("a"), &v, 3).unwrap();
        assert_eq!(c.counts.sum(), 0.0);
    }

    #[test]
    fn cooc_three_tokens_window_two() {
        let v = build_vocab(toks("a b c"), 10);
        let c = cooc_count(toks("a b c"), &v, 2).unwrap();
        let expected = ndarray::array![[0.0, 1.0, 1.0], [1.0, 0.0, 1.0], [1.0, 1.0, 0.0]];
        assert_eq!(c.counts, expected);
        assert_eq!(c.counts.sum(), 6.0);
    }

    #[test]
    fn cooc_skips_oov_positions() {
        let v = Vocab::from_tokens(["a", "b"]).unwrap();
        // "x" is dropped, so a and b become adjacent.
        let c = cooc_count(toks("a x b"), &v, 1).unwrap();
        assert_eq!(c.counts[[0, 1]], 1.0);
    }

    #[test]
    fn cooc_rejects_zero_window() {
        let v = build_vocab(toks("a b"), 10);
        assert!(cooc_count(toks("a b"), &v, 0).is_err());
    }

    #[test]
    fn term_doc_counts() {
        let v = build_vocab(toks("a a b"), 10);
        let docs = vec![toks("a a b"), toks("q r"), toks("a a b")];
        let c = term_doc_count(&docs, &v).unwrap();
        assert_eq!(c.kind, CountKind::TermDocument);
        assert_eq!(c.counts.row(0).to_vec(), vec![2.0, 1.0]);
        assert_eq!(c.counts.row(1).to_vec(), vec![0.0, 0.0]);
        assert_eq!(c.counts.row(0), c.counts.row(2));
    }

    #[test]
    fn split_four_chunks_is_balanced() {
        for seed in 0..50 {
            let a = split_assignment(4, seed);
            assert_eq!(a.iter().filter(|h| **h == Half::First).count(), 2);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let corpus: Vec<u32> = (0..1000).collect();
        let a = split_corpus(&corpus, 7, 42).unwrap();
        let b = split_corpus(&corpus, 7, 42).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn split_even_halves() {
        // Exhaustive over tiny sizes and many seeds.
        for n in 1..6usize {
            let corpus: Vec<usize> = (0..2 * n).collect();
            for seed in 0..20 {
                let (a, b) = split_corpus(&corpus, n, seed).unwrap();
                assert_eq!(a.len(), n);
                assert_eq!(b.len(), n);
            }
        }
    }

    #[test]
    fn split_rejects_zero_chunk() {
        assert!(split_corpus(&[1, 2, 3], 0, 0).is_err());
    }

    proptest! {
        #[test]
        fn cooc_matches_brute_force(
            words in proptest::collection::vec(0usize..6, 0..100),
            window in 1usize..6,
        ) {
            let text: Vec<String> = words.iter().map(|w| format!("w{w}")).collect();
            let vocab = build_vocab(&text, 4);
            let c = cooc_count(&text, &vocab, window).unwrap();
            let ids = vocab.encode(&text);
            let brute = brute_cooc(&ids, vocab.len(), window);
            prop_assert_eq!(&c.counts, &brute);
            prop_assert_eq!(&c.counts, &c.counts.t());
            let one_sided: usize = (0..ids.len())
                .map(|i| (ids.len() - 1 - i).min(window))
                .sum();
            prop_assert_eq!(c.counts.sum(), 2.0 * one_sided as f64);
        }

        #[test]
        fn vocab_frequencies_non_increasing(
            words in proptest::collection::vec(0usize..30, 0..200),
            max in 1usize..40,
        ) {
            let text: Vec<String> = words.iter().map(|w| format!("w{w}")).collect();
            let v = build_vocab(&text, max);
            prop_assert!(v.len() <= max);
            prop_assert!(v.counts().windows(2).all(|w| w[0] >= w[1]));
            for (id, tok) in v.tokens().iter().enumerate() {
                prop_assert_eq!(v.id(tok), Some(id));
            }
        }

        #[test]
        fn split_partitions_chunks(len in 0usize..500, chunk in 1usize..40, seed: u64) {
            let corpus: Vec<usize> = (0..len).collect();
            let (a, b) = split_corpus(&corpus, chunk, seed).unwrap();
            prop_assert!(a.len().abs_diff(b.len()) < 2 * chunk);
            let mut all: Vec<usize> = a.iter().chain(b.iter()).copied().collect();
            all.sort_unstable();
            prop_assert_eq!(all, corpus);
            // Chunks stay whole: every chunk index lands in exactly one half.
            for c in 0..len.div_ceil(chunk) {
                let in_a = a.contains(&(c * chunk));
                for t in c * chunk..((c + 1) * chunk).min(len) {
                    prop_assert_eq!(a.contains(&t), in_a);
                }
            }
        }
    }
}
