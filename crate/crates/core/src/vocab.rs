//! Word vocabulary, document registry, and the sampling tables used by
//! negative-sampling SGD (frequency subsampling, unigram^0.75 word noise,
//! uniform document noise).

use std::collections::HashMap;
use std::io::Write;

use rand::Rng;
use thiserror::Error;

use crate::corpus::{CitationInstance, PlainDocument};

#[derive(Debug, Error)]
pub enum VocabError {
    #[error("corpus contains no documents")]
    EmptyCorpus,
    #[error("no word meets min_count = {min_count}")]
    AllBelowMinCount { min_count: u64 },
    #[error("duplicate document id `{0}` in registry")]
    DuplicateDocId(String),
    #[error("registry contains no documents")]
    EmptyRegistry,
}

/// Dense word index with occurrence counts. Indices are assigned by
/// (count descending, word ascending) so builds are deterministic
/// regardless of hash iteration order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    counts: Vec<u64>,
    index: HashMap<String, usize>,
    total: u64,
}

impl Vocabulary {
    /// Counts words over a plain corpus and keeps those with
    /// count ≥ `min_count`.
    pub fn build(corpus: &[PlainDocument], min_count: u64) -> Result<Self, VocabError> {
        if corpus.is_empty() {
            return Err(VocabError::EmptyCorpus);
        }
        let mut counts: HashMap<&str, u64> = HashMap::new();
        for doc in corpus {
            for word in &doc.words {
                *counts.entry(word.as_str()).or_default() += 1;
            }
        }
        let mut kept: Vec<(&str, u64)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_count)
            .collect();
        if kept.is_empty() {
            return Err(VocabError::AllBelowMinCount { min_count });
        }
        kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        let words: Vec<String> = kept.iter().map(|(w, _)| w.to_string()).collect();
        let counts: Vec<u64> = kept.iter().map(|&(_, c)| c).collect();
        let index = words
            .iter()
            .enumerate()
            .map(|(i, w)| (w.clone(), i))
            .collect();
        let total = counts.iter().sum();
        Ok(Vocabulary {
            words,
            counts,
            index,
            total,
        })
    }

    /// Rebuilds a vocabulary from (word, count) rows already in index order,
    /// as stored in a model file.
    pub fn from_rows(rows: Vec<(String, u64)>) -> Self {
        let index = rows
            .iter()
            .enumerate()
            .map(|(i, (w, _))| (w.clone(), i))
            .collect();
        let total = rows.iter().map(|&(_, c)| c).sum();
        let (words, counts) = rows.into_iter().unzip();
        Vocabulary {
            words,
            counts,
            index,
            total,
        }
    }

    pub fn get(&self, word: &str) -> Option<usize> {
        self.index.get(word).copied()
    }

    pub fn word(&self, idx: usize) -> &str {
        &self.words[idx]
    }

    pub fn count(&self, idx: usize) -> u64 {
        self.counts[idx]
    }

    /// Total occurrences of retained words.
    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.words
            .iter()
            .map(String::as_str)
            .zip(self.counts.iter().copied())
    }

    /// Probability of keeping an occurrence of word `idx` under frequency
    /// subsampling: min(1, sqrt(t/f) + t/f) with f the corpus frequency.
    /// Applied to word-objective training only, never to citation contexts.
    pub fn keep_probability(&self, idx: usize, t: f64) -> f64 {
        if t <= 0.0 {
            return 0.0;
        }
        let f = self.counts[idx] as f64 / self.total as f64;
        ((t / f).sqrt() + t / f).min(1.0)
    }

    /// One `word<TAB>count` line per word in index order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (word, count) in self.iter() {
            writeln!(out, "{word}\t{count}")?;
        }
        Ok(())
    }
}

/// Dense document index over a corpus, with the number of times each
/// document is cited there. Never-cited documents ("newcomers") are
/// registered like any other.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DocRegistry {
    ids: Vec<String>,
    index: HashMap<String, usize>,
    cited: Vec<u64>,
}

impl DocRegistry {
    /// Registers ids in the given (corpus) order.
    pub fn from_ids<I, S>(ids: I) -> Result<Self, VocabError>
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut reg = DocRegistry {
            ids: Vec::new(),
            index: HashMap::new(),
            cited: Vec::new(),
        };
        for id in ids {
            let id = id.into();
            if reg.index.contains_key(&id) {
                return Err(VocabError::DuplicateDocId(id));
            }
            reg.index.insert(id.clone(), reg.ids.len());
            reg.ids.push(id);
            reg.cited.push(0);
        }
        if reg.ids.is_empty() {
            return Err(VocabError::EmptyRegistry);
        }
        Ok(reg)
    }

    /// Restores a registry from (id, cited-count) rows in index order.
    pub fn from_rows(rows: Vec<(String, u64)>) -> Self {
        let index = rows
            .iter()
            .enumerate()
            .map(|(i, (id, _))| (id.clone(), i))
            .collect();
        let (ids, cited) = rows.into_iter().unzip();
        DocRegistry { ids, index, cited }
    }

    /// Adds one in-citation per (instance, target) pair. Targets not in the
    /// registry are ignored here; extraction already reports them.
    pub fn record_citations(&mut self, instances: &[CitationInstance]) {
        for inst in instances {
            for target in &inst.targets {
                self.record_cited_id(target);
            }
        }
    }

    /// Counts one in-citation of `id` if it is registered.
    pub fn record_cited_id(&mut self, id: &str) -> bool {
        match self.index.get(id) {
            Some(&i) => {
                self.cited[i] += 1;
                true
            }
            None => false,
        }
    }

    pub fn index(&self, id: &str) -> Option<usize> {
        self.index.get(id).copied()
    }

    pub fn id(&self, idx: usize) -> &str {
        &self.ids[idx]
    }

    pub fn cited_count(&self, idx: usize) -> u64 {
        self.cited[idx]
    }

    /// A newcomer was never cited in the training corpus.
    pub fn is_newcomer(&self, idx: usize) -> bool {
        self.cited[idx] == 0
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, u64)> {
        self.ids
            .iter()
            .map(String::as_str)
            .zip(self.cited.iter().copied())
    }
}

/// Inverse-CDF sampler over a finite index set.
#[derive(Debug, Clone)]
pub struct NoiseSampler {
    probabilities: Vec<f64>,
    cdf: Vec<f64>,
}

impl NoiseSampler {
    /// Normalizes non-negative weights into a distribution. At least one
    /// weight must be positive.
    pub fn from_weights(weights: &[f64]) -> Self {
        assert!(!weights.is_empty(), "noise law needs a non-empty support");
        let sum: f64 = weights.iter().sum();
        assert!(
            sum > 0.0 && weights.iter().all(|&w| w >= 0.0),
            "noise weights must be non-negative with positive sum"
        );
        let probabilities: Vec<f64> = weights.iter().map(|&w| w / sum).collect();
        let mut cdf = Vec::with_capacity(probabilities.len());
        let mut acc = 0.0;
        for &p in &probabilities {
            acc += p;
            cdf.push(acc);
        }
        debug_assert!((acc - 1.0).abs() < 1e-9);
        // guard the binary search against the running sum landing below 1
        *cdf.last_mut().unwrap() = 1.0;
        NoiseSampler { probabilities, cdf }
    }

    pub fn probabilities(&self) -> &[f64] {
        &self.probabilities
    }

    pub fn len(&self) -> usize {
        self.probabilities.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probabilities.is_empty()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let r: f64 = rng.random();
        let i = self.cdf.partition_point(|&c| c <= r);
        i.min(self.cdf.len() - 1)
    }
}

/// Word-noise law for negative sampling: P(w) ∝ count(w)^power
/// (power 0.75 by convention).
pub fn word_noise_sampler(vocab: &Vocabulary, power: f64) -> NoiseSampler {
    let weights: Vec<f64> = (0..vocab.len())
        .map(|i| (vocab.count(i) as f64).powf(power))
        .collect();
    NoiseSampler::from_weights(&weights)
}

/// Document-noise law: uniform over every registered document, newcomers
/// included.
pub fn doc_noise_sampler(registry: &DocRegistry) -> NoiseSampler {
    NoiseSampler::from_weights(&vec![1.0; registry.len()])
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn plain(id: &str, words: &[&str]) -> PlainDocument {
        PlainDocument {
            id: id.to_string(),
            words: words.iter().map(|s| s.to_string()).collect(),
        }
    }

    #[test]
    fn build_orders_by_count_then_word() {
        let corpus = vec![plain("d", &["a", "a", "b"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        assert_eq!(v.get("a"), Some(0));
        assert_eq!(v.get("b"), Some(1));
        assert_eq!(v.count(0), 2);
        assert_eq!(v.count(1), 1);
        assert_eq!(v.total(), 3);
    }

    #[test]
    fn build_applies_min_count() {
        let corpus = vec![plain("d", &["a", "a", "b"])];
        let v = Vocabulary::build(&corpus, 2).unwrap();
        assert_eq!(v.len(), 1);
        assert_eq!(v.get("a"), Some(0));
        assert_eq!(v.get("b"), None);
    }

    #[test]
    fn build_is_deterministic() {
        let corpus = vec![
            plain("d1", &["x", "y", "z", "y"]),
            plain("d2", &["q", "x", "q"]),
        ];
        let a = Vocabulary::build(&corpus, 1).unwrap();
        let b = Vocabulary::build(&corpus, 1).unwrap();
        assert_eq!(a, b);
        // ties (x and q both count 2) break lexicographically
        assert!(a.get("q").unwrap() < a.get("x").unwrap());
    }

    #[test]
    fn build_rejects_empty_and_all_filtered() {
        assert!(matches!(
            Vocabulary::build(&[], 1),
            Err(VocabError::EmptyCorpus)
        ));
        let corpus = vec![plain("d", &["a"])];
        assert!(matches!(
            Vocabulary::build(&corpus, 5),
            Err(VocabError::AllBelowMinCount { min_count: 5 })
        ));
    }

    #[test]
    fn keep_probability_formula() {
        // total 1000 occurrences; word f = 4t has keep prob 0.75
        let mut words = vec!["rare"; 996];
        words.extend(["hot"; 4]);
        let corpus: Vec<PlainDocument> = words
            .chunks(10)
            .enumerate()
            .map(|(i, c)| plain(&format!("d{i}"), c))
            .collect();
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let hot = v.get("hot").unwrap();
        let rare = v.get("rare").unwrap();
        let t = 1e-3; // hot has f = 4/1000 = 4t
        assert!((v.keep_probability(hot, t) - 0.75).abs() < 1e-12);
        // f(rare) = 0.996 ≥ t is still clamped to 1? no: f >> t gives small p;
        // the clamp applies when f ≤ t
        assert!(v.keep_probability(rare, t) < 0.05);
        assert_eq!(v.keep_probability(hot, 4e-3), 1.0);
        assert_eq!(v.keep_probability(hot, 0.0), 0.0);
    }

    #[test]
    fn registry_tracks_citations_and_newcomers() {
        let mut reg = DocRegistry::from_ids(["p1", "p2", "p3"]).unwrap();
        let inst = CitationInstance {
            source: "p1".into(),
            targets: vec!["p2".into(), "p2ext".into()],
            context: vec![],
            position: 0,
        };
        reg.record_citations(std::slice::from_ref(&inst));
        reg.record_citations(std::slice::from_ref(&inst));
        assert_eq!(reg.cited_count(reg.index("p2").unwrap()), 2);
        assert!(reg.is_newcomer(reg.index("p3").unwrap()));
        assert!(!reg.is_newcomer(reg.index("p2").unwrap()));
        assert_eq!(reg.index("p2ext"), None);
    }

    #[test]
    fn registry_rejects_duplicates() {
        assert!(matches!(
            DocRegistry::from_ids(["p1", "p1"]),
            Err(VocabError::DuplicateDocId(id)) if id == "p1"
        ));
    }

    #[test]
    fn word_noise_examples() {
        let corpus = vec![plain("d", &["a", "b"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let s = word_noise_sampler(&v, 0.75);
        assert!((s.probabilities()[0] - 0.5).abs() < 1e-12);

        // counts {a:16, b:1}: 16^0.75 = 8 so P(a) = 8/9
        let mut words = vec!["a"; 16];
        words.push("b");
        let corpus = vec![plain("d", &words)];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let s = word_noise_sampler(&v, 0.75);
        let a = v.get("a").unwrap();
        assert!((s.probabilities()[a] - 8.0 / 9.0).abs() < 1e-12);

        let s = word_noise_sampler(&v, 0.0);
        assert!(s.probabilities().iter().all(|&p| (p - 0.5).abs() < 1e-12));
    }

    #[test]
    fn doc_noise_is_uniform_over_all_docs() {
        let reg = DocRegistry::from_ids(["a", "b", "c", "d"]).unwrap();
        let s = doc_noise_sampler(&reg);
        assert!(s.probabilities().iter().all(|&p| (p - 0.25).abs() < 1e-12));
        let sum: f64 = s.probabilities().iter().sum();
        assert!((sum - 1.0).abs() < 1e-9);
    }

    #[test]
    fn doc_noise_empirical_frequencies_within_three_sigma() {
        let reg = DocRegistry::from_ids((0..4).map(|i| format!("d{i}"))).unwrap();
        let s = doc_noise_sampler(&reg);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 1_000_000usize;
        let mut counts = [0u64; 4];
        for _ in 0..n {
            counts[s.sample(&mut rng)] += 1;
        }
        let p = 0.25;
        let sigma = (n as f64 * p * (1.0 - p)).sqrt();
        for &c in &counts {
            assert!(
                (c as f64 - n as f64 * p).abs() < 3.0 * sigma,
                "bucket count {c} outside 3 sigma"
            );
        }
    }

    #[test]
    fn sampling_is_reproducible() {
        let reg = DocRegistry::from_ids((0..10).map(|i| format!("d{i}"))).unwrap();
        let s = doc_noise_sampler(&reg);
        let draw = |seed: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..100).map(|_| s.sample(&mut rng)).collect::<Vec<_>>()
        };
        assert_eq!(draw(42), draw(42));
        assert_ne!(draw(42), draw(43));
    }

    #[test]
    fn skewed_sampler_hits_every_index() {
        let s = NoiseSampler::from_weights(&[1000.0, 1.0, 1.0]);
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut seen = [false; 3];
        for _ in 0..100_000 {
            seen[s.sample(&mut rng)] = true;
        }
        assert_eq!(seen, [true; 3]);
    }

    #[test]
    fn vocab_tsv_dump() {
        let corpus = vec![plain("d", &["a", "a", "b"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let mut buf = Vec::new();
        v.write_tsv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a\t2\nb\t1\n");
    }

    #[test]
    fn vocab_row_roundtrip() {
        let corpus = vec![plain("d", &["a", "a", "b", "c", "c", "c"])];
        let v = Vocabulary::build(&corpus, 1).unwrap();
        let rows: Vec<(String, u64)> = v.iter().map(|(w, c)| (w.to_string(), c)).collect();
        assert_eq!(Vocabulary::from_rows(rows), v);
    }
}
