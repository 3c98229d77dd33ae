//! Tokenization and TF-IDF vectorization.
//!
//! The vectorizer uses smoothed inverse document frequency,
//! `idf(t) = ln((1+N)/(1+df(t))) + 1`, raw term counts, and L2 document
//! normalization. Tokens are maximal alphanumeric runs of at least two
//! characters, lowercased by default. These choices are fixed so that a
//! serialized model reproduces transforms bit-identically after reload.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// Tokenizer knobs. `min_token_len` is the minimum run length kept; the
/// token alphabet is always Unicode alphanumerics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerConfig {
    pub lowercase: bool,
    pub min_token_len: usize,
}

impl Default for TokenizerConfig {
    fn default() -> Self {
        TokenizerConfig {
            lowercase: true,
            min_token_len: 2,
        }
    }
}

/// Split text into maximal alphanumeric runs, dropping runs shorter than the
/// configured minimum, in order of appearance.
pub fn tokenize(text: &str, config: &TokenizerConfig) -> Vec<String> {
    let mut tokens = Vec::new();
    let mut current = String::new();
    for ch in text.chars() {
        if ch.is_alphanumeric() {
            if config.lowercase {
                current.extend(ch.to_lowercase());
            } else {
                current.push(ch);
            }
        } else if !current.is_empty() {
            if current.chars().count() >= config.min_token_len {
                tokens.push(std::mem::take(&mut current));
            } else {
                current.clear();
            }
        }
    }
    if current.chars().count() >= config.min_token_len {
        tokens.push(current);
    }
    tokens
}

/// Sparse vector with strictly increasing indices and nonzero weights.
/// A nonempty transformed vector always has unit Euclidean norm.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    pub dim: usize,
    pub entries: Vec<(usize, f64)>,
}

impl SparseVector {
    pub fn zero(dim: usize) -> Self {
        SparseVector {
            dim,
            entries: Vec::new(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> f64 {
        self.entries
            .iter()
            .map(|(_, w)| w * w)
            .sum::<f64>()
            .sqrt()
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.entries.iter().map(|&(i, w)| w * dense[i]).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for &(i, w) in &self.entries {
            out[i] = w;
        }
        out
    }
}

/// Fitted TF-IDF model: a lexicographically sorted vocabulary and one idf
/// weight per term.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TfidfModel {
    pub config: TokenizerConfig,
    /// Terms in index order; term `vocabulary[i]` maps to column `i`.
    pub vocabulary: Vec<String>,
    pub idf: Vec<f64>,
}

impl TfidfModel {
    /// Learn the vocabulary and idf weights from a corpus of documents.
    ///
    /// idf(t) = ln((1+N)/(1+df(t))) + 1, which is >= 1 for every term.
    pub fn fit<S: AsRef<str>>(corpus: &[S], config: TokenizerConfig) -> Result<Self> {
        let mut doc_freq: BTreeMap<String, usize> = BTreeMap::new();
        for doc in corpus {
            let mut terms = tokenize(doc.as_ref(), &config);
            terms.sort_unstable();
            terms.dedup();
            for t in terms {
                *doc_freq.entry(t).or_insert(0) += 1;
            }
        }
        if doc_freq.is_empty() {
            return Err(Error::Dataset(
                "fit produced an empty vocabulary: no document yields a token".into(),
            ));
        }
        let n = corpus.len() as f64;
        let mut vocabulary = Vec::with_capacity(doc_freq.len());
        let mut idf = Vec::with_capacity(doc_freq.len());
        for (term, df) in doc_freq {
            vocabulary.push(term);
            idf.push(((1.0 + n) / (1.0 + df as f64)).ln() + 1.0);
        }
        Ok(TfidfModel {
            config,
            vocabulary,
            idf,
        })
    }

    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    fn term_index(&self, term: &str) -> Option<usize> {
        self.vocabulary
            .binary_search_by(|probe| probe.as_str().cmp(term))
            .ok()
    }

    /// Map a document to its L2-normalized TF-IDF vector. Out-of-vocabulary
    /// terms are ignored; a document with no in-vocabulary terms maps to the
    /// zero vector.
    pub fn transform(&self, document: &str) -> SparseVector {
        let mut counts: BTreeMap<usize, f64> = BTreeMap::new();
        for token in tokenize(document, &self.config) {
            if let Some(ix) = self.term_index(&token) {
                *counts.entry(ix).or_insert(0.0) += 1.0;
            }
        }
        if counts.is_empty() {
            return SparseVector::zero(self.vocab_size());
        }
        let mut entries: Vec<(usize, f64)> = counts
            .into_iter()
            .map(|(ix, count)| (ix, count * self.idf[ix]))
            .collect();
        let norm = entries.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        for (_, w) in entries.iter_mut() {
            *w /= norm;
        }
        SparseVector {
            dim: self.vocab_size(),
            entries,
        }
    }

    /// Serialize to the documented JSON form. Reloading reproduces transform
    /// outputs bit-identically.
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("tfidf model serializes")
    }

    pub fn from_json(json: &str) -> Result<Self> {
        let model: TfidfModel = serde_json::from_str(json).map_err(|e| Error::Format(format!(
            "tfidf model JSON: {e}"
        )))?;
        if model.vocabulary.len() != model.idf.len() {
            return Err(Error::Format(format!(
                "tfidf model JSON: {} vocabulary terms but {} idf weights",
                model.vocabulary.len(),
                model.idf.len()
            )));
        }
        Ok(model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg() -> TokenizerConfig {
        TokenizerConfig::default()
    }

    #[test]
    fn tokenize_strips_punctuation() {
        assert_eq!(tokenize("Free Palestine!", &cfg()), vec!["free", "palestine"]);
    }

    #[test]
    fn tokenize_drops_short_runs() {
        assert_eq!(tokenize("a I x", &cfg()), Vec::<String>::new());
    }

    #[test]
    fn tokenize_splits_on_hyphen_and_keeps_digits() {
        assert_eq!(
            tokenize("Cyber-attack 2024", &cfg()),
            vec!["cyber", "attack", "2024"]
        );
    }

    #[test]
    fn tokenize_can_preserve_case() {
        let config = TokenizerConfig {
            lowercase: false,
            ..cfg()
        };
        assert_eq!(tokenize("Free Palestine", &config), vec!["Free", "Palestine"]);
    }

    #[test]
    fn fit_single_doc_idf_is_one() {
        let model = TfidfModel::fit(&["aa"], cfg()).unwrap();
        assert_eq!(model.vocabulary, vec!["aa"]);
        assert!((model.idf[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fit_idf_formula() {
        let model = TfidfModel::fit(&["aa bb", "aa"], cfg()).unwrap();
        let bb = model.term_index("bb").unwrap();
        assert!((model.idf[bb] - ((3.0f64 / 2.0).ln() + 1.0)).abs() < 1e-12);
        assert!((model.idf[bb] - 1.405465).abs() < 1e-6);
        let aa = model.term_index("aa").unwrap();
        assert!((model.idf[aa] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn fit_empty_vocabulary_errors() {
        assert!(matches!(
            TfidfModel::fit(&["a", "!!"], cfg()),
            Err(Error::Dataset(_))
        ));
    }

    #[test]
    fn transform_normalizes_counts_away_for_single_term() {
        let model = TfidfModel::fit(&["aa"], cfg()).unwrap();
        let v = model.transform("aa aa");
        assert_eq!(v.entries.len(), 1);
        assert!((v.entries[0].1 - 1.0).abs() < 1e-15);
    }

    #[test]
    fn transform_hand_computed_weights() {
        let model = TfidfModel::fit(&["aa bb", "aa"], cfg()).unwrap();
        let v = model.transform("aa bb");
        // Raw weights (1.0, ln(3/2)+1); after L2 normalization the hand
        // computation gives (0.579739, 0.814803).
        assert_eq!(v.entries.len(), 2);
        assert!((v.entries[0].1 - 0.579739).abs() < 1e-6);
        assert!((v.entries[1].1 - 0.814803).abs() < 1e-6);
        assert!((v.norm() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn transform_all_oov_gives_zero_vector() {
        let model = TfidfModel::fit(&["aa bb", "aa"], cfg()).unwrap();
        let v = model.transform("zz qq");
        assert!(v.is_zero());
        assert_eq!(v.dim, 2);
    }

    #[test]
    fn json_round_trip_is_bit_identical() {
        let model = TfidfModel::fit(&["threat actor leaked data", "election vote data"], cfg()).unwrap();
        let reloaded = TfidfModel::from_json(&model.to_json()).unwrap();
        assert_eq!(model, reloaded);
        let a = model.transform("leaked election data");
        let b = reloaded.transform("leaked election data");
        assert_eq!(a, b);
        for ((ia, wa), (ib, wb)) in a.entries.iter().zip(&b.entries) {
            assert_eq!(ia, ib);
            assert_eq!(wa.to_bits(), wb.to_bits());
        }
    }

    /// Brute-force dense evaluation of the TF-IDF formulas, kept independent
    /// of the implementation path.
    fn dense_oracle(corpus: &[String], doc: &str) -> Vec<f64> {
        let cfg = cfg();
        let mut vocab: Vec<String> = corpus
            .iter()
            .flat_map(|d| tokenize(d, &cfg))
            .collect();
        vocab.sort();
        vocab.dedup();
        let n = corpus.len() as f64;
        let doc_tokens = tokenize(doc, &cfg);
        let mut out = vec![0.0; vocab.len()];
        for (i, term) in vocab.iter().enumerate() {
            let df = corpus
                .iter()
                .filter(|d| tokenize(d, &cfg).contains(term))
                .count() as f64;
            let idf = ((1.0 + n) / (1.0 + df)).ln() + 1.0;
            let count = doc_tokens.iter().filter(|t| *t == term).count() as f64;
            out[i] = count * idf;
        }
        let norm = out.iter().map(|w| w * w).sum::<f64>().sqrt();
        if norm > 0.0 {
            for w in out.iter_mut() {
                *w /= norm;
            }
        }
        out
    }

    proptest! {
        #[test]
        fn transform_matches_dense_oracle(
            corpus in proptest::collection::vec(
                proptest::collection::vec(0usize..12, 1..8),
                1..10,
            ),
            doc in proptest::collection::vec(0usize..12, 0..8),
        ) {
            let words: Vec<String> = (0..12).map(|i| format!("tok{i:02}")).collect();
            let render = |ids: &[usize]| ids.iter().map(|&i| words[i].clone()).collect::<Vec<_>>().join(" ");
            let corpus: Vec<String> = corpus.iter().map(|ids| render(ids)).collect();
            let doc = render(&doc);
            let model = TfidfModel::fit(&corpus, cfg()).unwrap();
            let got = model.transform(&doc).to_dense();
            let want = dense_oracle(&corpus, &doc);
            prop_assert_eq!(got.len(), want.len());
            for (g, w) in got.iter().zip(&want) {
                prop_assert!((g - w).abs() < 1e-12, "component {} vs {}", g, w);
            }
        }

        #[test]
        fn adding_a_document_never_increases_idf(
            corpus in proptest::collection::vec(
                proptest::collection::vec(0usize..6, 1..6),
                1..8,
            ),
            extra in proptest::collection::vec(0usize..6, 1..6),
        ) {
            let words: Vec<String> = (0..6).map(|i| format!("tok{i}")).collect();
            let render = |ids: &[usize]| ids.iter().map(|&i| words[i].clone()).collect::<Vec<_>>().join(" ");
            let base: Vec<String> = corpus.iter().map(|ids| render(ids)).collect();
            let mut grown = base.clone();
            grown.push(render(&extra));
            let before = TfidfModel::fit(&base, cfg()).unwrap();
            let after = TfidfModel::fit(&grown, cfg()).unwrap();
            for t in &extra {
                let term = &words[*t];
                if let Some(ib) = before.term_index(term) {
                    let ia = after.term_index(term).unwrap();
                    prop_assert!(after.idf[ia] <= before.idf[ib] + 1e-12);
                }
            }
        }

        #[test]
        fn nonzero_transforms_have_unit_norm(
            corpus in proptest::collection::vec(
                proptest::collection::vec(0usize..10, 1..8),
                1..8,
            ),
            doc in proptest::collection::vec(0usize..10, 1..8),
        ) {
            let words: Vec<String> = (0..10).map(|i| format!("tok{i}")).collect();
            let render = |ids: &[usize]| ids.iter().map(|&i| words[i].clone()).collect::<Vec<_>>().join(" ");
            let corpus: Vec<String> = corpus.iter().map(|ids| render(ids)).collect();
            let model = TfidfModel::fit(&corpus, cfg()).unwrap();
            let v = model.transform(&render(&doc));
            if !v.is_zero() {
                prop_assert!((v.norm() - 1.0).abs() < 1e-9);
            }
            let mut last = None;
            for &(i, w) in &v.entries {
                prop_assert!(w != 0.0);
                prop_assert!(i < v.dim);
                if let Some(prev) = last {
                    prop_assert!(i > prev);
                }
                last = Some(i);
            }
        }
    }
}
