//! Synthetic labeled-corpus generator: two topic word pools with a
//! configurable shared fraction, standing in for real channel exports.

use crate::corpus::{LabeledDataset, Message};
use crate::error::{Error, Result};
use crate::numerics::Prng;
use serde::{Deserialize, Serialize};

/// Generator parameters. With overlap `f`, a fraction `f` of each topic's
/// vocabulary is drawn from a pool shared by both classes: `f = 0` gives
/// disjoint token supports, `f = 1` makes the class-conditional
/// distributions identical. The defaults are the calibrated settings used by
/// the bundled experiment config.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyntheticCorpusSpec {
    pub docs_per_class: usize,
    pub politics_vocab: usize,
    pub cyber_vocab: usize,
    pub overlap: f64,
    pub doc_len_min: usize,
    pub doc_len_max: usize,
    pub seed: u64,
}

impl Default for SyntheticCorpusSpec {
    fn default() -> Self {
        SyntheticCorpusSpec {
            docs_per_class: 2000,
            politics_vocab: 200,
            cyber_vocab: 200,
            overlap: 0.7,
            doc_len_min: 3,
            doc_len_max: 8,
            seed: 7,
        }
    }
}

impl SyntheticCorpusSpec {
    pub fn validate(&self) -> Result<()> {
        if self.docs_per_class == 0 {
            return Err(Error::Config("docs_per_class must be positive".into()));
        }
        if self.politics_vocab == 0 || self.cyber_vocab == 0 {
            return Err(Error::Config("topic vocabularies must be non-empty".into()));
        }
        if !(0.0..=1.0).contains(&self.overlap) {
            return Err(Error::Config(format!(
                "overlap must be in [0, 1], got {}",
                self.overlap
            )));
        }
        if self.doc_len_min == 0 || self.doc_len_min > self.doc_len_max {
            return Err(Error::Config(format!(
                "document length range [{}, {}] is invalid",
                self.doc_len_min, self.doc_len_max
            )));
        }
        Ok(())
    }

    /// Word pools for the two classes: class 0 draws from shared + politics
    /// words, class 1 from shared + cyber words.
    pub fn pools(&self) -> (Vec<String>, Vec<String>) {
        let shared_count = (self.overlap * self.politics_vocab.min(self.cyber_vocab) as f64)
            .round() as usize;
        let shared: Vec<String> = (0..shared_count).map(|i| format!("com{i:03}")).collect();
        let mut politics = shared.clone();
        politics.extend((0..self.politics_vocab - shared_count).map(|i| format!("gov{i:03}")));
        let mut cyber = shared;
        cyber.extend((0..self.cyber_vocab - shared_count).map(|i| format!("sec{i:03}")));
        (politics, cyber)
    }
}

/// Generate the labeled corpus: `docs_per_class` documents per class, token
/// counts uniform in the configured length range, tokens uniform over the
/// class pool. Deterministic under the spec seed.
pub fn generate_synthetic_corpus(spec: &SyntheticCorpusSpec) -> Result<LabeledDataset> {
    spec.validate()?;
    let (politics, cyber) = spec.pools();
    let mut rng = Prng::new(spec.seed);
    let mut messages = Vec::with_capacity(spec.docs_per_class * 2);
    for (class, pool, tag, group) in [
        (0u8, &politics, "p", "synthetic/politics"),
        (1u8, &cyber, "c", "synthetic/cyber"),
    ] {
        for d in 0..spec.docs_per_class {
            let len = spec.doc_len_min
                + rng.below((spec.doc_len_max - spec.doc_len_min + 1) as u64) as usize;
            let content: Vec<&str> = (0..len)
                .map(|_| pool[rng.below(pool.len() as u64) as usize].as_str())
                .collect();
            messages.push(Message {
                id: format!("syn-{tag}-{d:05}"),
                content: content.join(" "),
                date: "2024-03-01T00:00:00".to_string(),
                group: group.to_string(),
                label: Some(class),
            });
        }
    }
    LabeledDataset::new(messages)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::textvec::{tokenize, TokenizerConfig};
    use std::collections::BTreeSet;

    fn token_support(ds: &LabeledDataset, class: u8) -> BTreeSet<String> {
        let cfg = TokenizerConfig::default();
        ds.messages()
            .iter()
            .filter(|m| m.label == Some(class))
            .flat_map(|m| tokenize(&m.content, &cfg))
            .collect()
    }

    #[test]
    fn zero_overlap_gives_disjoint_supports() {
        let spec = SyntheticCorpusSpec {
            docs_per_class: 50,
            overlap: 0.0,
            ..SyntheticCorpusSpec::default()
        };
        let ds = generate_synthetic_corpus(&spec).unwrap();
        let s0 = token_support(&ds, 0);
        let s1 = token_support(&ds, 1);
        assert!(s0.is_disjoint(&s1));
    }

    #[test]
    fn full_overlap_gives_identical_pools() {
        let spec = SyntheticCorpusSpec {
            overlap: 1.0,
            ..SyntheticCorpusSpec::default()
        };
        let (p, c) = spec.pools();
        assert_eq!(p, c);
    }

    #[test]
    fn generation_is_deterministic_and_balanced() {
        let spec = SyntheticCorpusSpec {
            docs_per_class: 100,
            ..SyntheticCorpusSpec::default()
        };
        let a = generate_synthetic_corpus(&spec).unwrap();
        let b = generate_synthetic_corpus(&spec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.class_counts(), [100, 100]);
        for m in a.messages() {
            let words = m.content.split(' ').count();
            assert!((spec.doc_len_min..=spec.doc_len_max).contains(&words));
        }
    }

    #[test]
    fn degenerate_specs_are_rejected() {
        let spec = SyntheticCorpusSpec {
            politics_vocab: 0,
            ..SyntheticCorpusSpec::default()
        };
        assert!(generate_synthetic_corpus(&spec).is_err());
        let spec = SyntheticCorpusSpec {
            overlap: 1.5,
            ..SyntheticCorpusSpec::default()
        };
        assert!(generate_synthetic_corpus(&spec).is_err());
        let spec = SyntheticCorpusSpec {
            doc_len_min: 9,
            doc_len_max: 8,
            ..SyntheticCorpusSpec::default()
        };
        assert!(generate_synthetic_corpus(&spec).is_err());
    }
}
