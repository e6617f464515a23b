//! Hyper-document corpora: parsing, citation-context extraction, and the
//! conversions that downcast citations into plain word documents.
//!
//! The on-disk format is one JSON record per line, `{"id": ..., "tokens":
//! [...]}`. A token starting with `@cite:` is a citation mark naming the
//! target document id; every other token is a word.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::par;

/// Reserved prefix marking citation tokens in the line format.
pub const CITE_PREFIX: &str = "@cite:";

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("i/o error reading corpus: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {reason}")]
    Malformed { line: usize, reason: String },
    #[error("line {line}: duplicate document id `{id}`")]
    DuplicateId { line: usize, id: String },
}

/// One token of a hyper-document: a plain word or a citation mark.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Token {
    Word(String),
    Cite(String),
}

impl Token {
    pub fn is_cite(&self) -> bool {
        matches!(self, Token::Cite(_))
    }

    /// The wire representation used by the line format.
    pub fn to_wire(&self) -> String {
        match self {
            Token::Word(w) => w.clone(),
            Token::Cite(t) => format!("{CITE_PREFIX}{t}"),
        }
    }
}

/// A document id plus an ordered stream of words and citation marks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HyperDocument {
    pub id: String,
    pub tokens: Vec<Token>,
}

impl HyperDocument {
    pub fn word_count(&self) -> usize {
        self.tokens.iter().filter(|t| !t.is_cite()).count()
    }

    pub fn cite_count(&self) -> usize {
        self.tokens.iter().filter(|t| t.is_cite()).count()
    }
}

/// One citation occurrence: the citing document, the merged target set of a
/// run of consecutive citation marks, and the word window around it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CitationInstance {
    pub source: String,
    /// Distinct target ids, in first-seen order. Never empty.
    pub targets: Vec<String>,
    /// Up to `window` words on each side; citation marks are skipped over.
    pub context: Vec<String>,
    /// Token offset of the first citation mark of the run in the source.
    pub position: usize,
}

/// A citation-free word document produced by one of the conversions.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PlainDocument {
    pub id: String,
    pub words: Vec<String>,
}

#[derive(Serialize, Deserialize)]
struct RawRecord {
    id: String,
    tokens: Vec<String>,
}

fn parse_token(raw: &str, line: usize) -> Result<Token, CorpusError> {
    if let Some(target) = raw.strip_prefix(CITE_PREFIX) {
        if target.is_empty() {
            return Err(CorpusError::Malformed {
                line,
                reason: "citation token with empty target id".into(),
            });
        }
        Ok(Token::Cite(target.to_string()))
    } else if raw.is_empty() {
        Err(CorpusError::Malformed {
            line,
            reason: "empty word token".into(),
        })
    } else {
        Ok(Token::Word(raw.to_string()))
    }
}

/// Parses a line-oriented corpus. Documents come back in file order;
/// duplicate ids and malformed records are rejected with the line number.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<Vec<HyperDocument>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen: HashMap<String, usize> = HashMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| CorpusError::Malformed {
            line: line_no,
            reason: e.to_string(),
        })?;
        if raw.id.is_empty() {
            return Err(CorpusError::Malformed {
                line: line_no,
                reason: "empty document id".into(),
            });
        }
        if seen.insert(raw.id.clone(), line_no).is_some() {
            return Err(CorpusError::DuplicateId {
                line: line_no,
                id: raw.id,
            });
        }
        let tokens = raw
            .tokens
            .iter()
            .map(|t| parse_token(t, line_no))
            .collect::<Result<Vec<_>, _>>()?;
        docs.push(HyperDocument { id: raw.id, tokens });
    }
    Ok(docs)
}

/// Writes the canonical line form: compact JSON, one record per line.
/// Parsing the output reproduces the documents exactly.
pub fn write_corpus<W: Write>(mut out: W, docs: &[HyperDocument]) -> Result<(), CorpusError> {
    for doc in docs {
        let raw = RawRecord {
            id: doc.id.clone(),
            tokens: doc.tokens.iter().map(Token::to_wire).collect(),
        };
        let line = serde_json::to_string(&raw).expect("record serialization cannot fail");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Writes plain documents in the same line format (all tokens are words).
pub fn write_plain_corpus<W: Write>(mut out: W, docs: &[PlainDocument]) -> Result<(), CorpusError> {
    for doc in docs {
        let raw = RawRecord {
            id: doc.id.clone(),
            tokens: doc.words.clone(),
        };
        let line = serde_json::to_string(&raw).expect("record serialization cannot fail");
        writeln!(out, "{line}")?;
    }
    Ok(())
}

/// Extracts one instance per maximal run of consecutive citation marks.
/// Context words are taken up to `window` on each side, skipping over other
/// citation marks and truncating only at document boundaries.
pub fn extract_citations(doc: &HyperDocument, window: usize) -> Vec<CitationInstance> {
    let mut instances = Vec::new();
    let tokens = &doc.tokens;
    let mut i = 0;
    while i < tokens.len() {
        if !tokens[i].is_cite() {
            i += 1;
            continue;
        }
        let start = i;
        let mut targets: Vec<String> = Vec::new();
        while i < tokens.len() {
            match &tokens[i] {
                Token::Cite(t) => {
                    if !targets.iter().any(|x| x == t) {
                        targets.push(t.clone());
                    }
                    i += 1;
                }
                Token::Word(_) => break,
            }
        }
        let mut context = Vec::with_capacity(2 * window.min(tokens.len()));
        let mut left = Vec::new();
        let mut j = start;
        while j > 0 && left.len() < window {
            j -= 1;
            if let Token::Word(w) = &tokens[j] {
                left.push(w.clone());
            }
        }
        left.reverse();
        context.extend(left);
        let mut j = i;
        let mut taken = 0;
        while j < tokens.len() && taken < window {
            if let Token::Word(w) = &tokens[j] {
                context.push(w.clone());
                taken += 1;
            }
            j += 1;
        }
        instances.push(CitationInstance {
            source: doc.id.clone(),
            targets,
            context,
            position: start,
        });
    }
    instances
}

/// Corpus-wide extraction with targets restricted to documents present in
/// the corpus. Dropped (external) targets are counted, and instances whose
/// whole target set is external are discarded.
pub struct CitationExtraction {
    pub instances: Vec<CitationInstance>,
    pub skipped_external_targets: usize,
}

pub fn extract_corpus_citations(docs: &[HyperDocument], window: usize) -> CitationExtraction {
    let known: HashSet<&str> = docs.iter().map(|d| d.id.as_str()).collect();
    let per_doc = par::map_slice(docs, |doc| extract_citations(doc, window));
    let mut instances = Vec::new();
    let mut skipped = 0;
    for doc_instances in per_doc {
        for mut inst in doc_instances {
            let before = inst.targets.len();
            inst.targets.retain(|t| known.contains(t.as_str()));
            skipped += before - inst.targets.len();
            if !inst.targets.is_empty() {
                instances.push(inst);
            }
        }
    }
    CitationExtraction {
        instances,
        skipped_external_targets: skipped,
    }
}

/// Citation-as-word: every citation mark becomes the pseudo-word
/// `@cite:<target>`. Token counts are preserved exactly.
pub fn convert_caw(docs: &[HyperDocument]) -> Vec<PlainDocument> {
    par::map_slice(docs, |doc| PlainDocument {
        id: doc.id.clone(),
        words: doc.tokens.iter().map(Token::to_wire).collect(),
    })
}

/// No-citation: citation marks are dropped outright.
pub fn convert_nc(docs: &[HyperDocument]) -> Vec<PlainDocument> {
    par::map_slice(docs, |doc| PlainDocument {
        id: doc.id.clone(),
        words: doc
            .tokens
            .iter()
            .filter_map(|t| match t {
                Token::Word(w) => Some(w.clone()),
                Token::Cite(_) => None,
            })
            .collect(),
    })
}

pub struct CacConversion {
    pub docs: Vec<PlainDocument>,
    /// (instance, target) pairs whose target id is absent from the corpus.
    pub skipped_targets: usize,
}

/// Context-as-content: starting from the no-citation corpus, every citation
/// context is appended to each of its target documents, in corpus order,
/// duplicates retained.
pub fn convert_cac(docs: &[HyperDocument], window: usize) -> CacConversion {
    let mut out = convert_nc(docs);
    let index: HashMap<&str, usize> = docs
        .iter()
        .enumerate()
        .map(|(i, d)| (d.id.as_str(), i))
        .collect();
    let per_doc = par::map_slice(docs, |doc| extract_citations(doc, window));
    let mut skipped = 0;
    for doc_instances in &per_doc {
        for inst in doc_instances {
            for target in &inst.targets {
                match index.get(target.as_str()) {
                    Some(&ti) => out[ti].words.extend(inst.context.iter().cloned()),
                    None => skipped += 1,
                }
            }
        }
    }
    CacConversion {
        docs: out,
        skipped_targets: skipped,
    }
}

/// Counters reported by corpus-level commands.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CorpusStats {
    pub docs: usize,
    pub tokens: usize,
    pub words: usize,
    pub cite_tokens: usize,
    pub citation_instances: usize,
    pub skipped_external_targets: usize,
    pub empty_docs: usize,
}

pub fn corpus_stats(docs: &[HyperDocument], window: usize) -> CorpusStats {
    let extraction = extract_corpus_citations(docs, window);
    let tokens: usize = docs.iter().map(|d| d.tokens.len()).sum();
    let cite_tokens: usize = docs.iter().map(HyperDocument::cite_count).sum();
    CorpusStats {
        docs: docs.len(),
        tokens,
        words: tokens - cite_tokens,
        cite_tokens,
        citation_instances: extraction.instances.len(),
        skipped_external_targets: extraction.skipped_external_targets,
        empty_docs: docs.iter().filter(|d| d.tokens.is_empty()).count(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn doc(id: &str, tokens: Vec<Token>) -> HyperDocument {
        HyperDocument {
            id: id.to_string(),
            tokens,
        }
    }

    fn w(s: &str) -> Token {
        Token::Word(s.to_string())
    }

    fn c(s: &str) -> Token {
        Token::Cite(s.to_string())
    }

    #[test]
    fn parse_basic_record() {
        let input = r#"{"id":"p1","tokens":["a","@cite:p2","b"]}"#;
        let docs = parse_corpus(input.as_bytes()).unwrap();
        assert_eq!(docs.len(), 1);
        assert_eq!(docs[0].id, "p1");
        assert_eq!(docs[0].tokens, vec![w("a"), c("p2"), w("b")]);
    }

    #[test]
    fn parse_empty_file() {
        let docs = parse_corpus("".as_bytes()).unwrap();
        assert!(docs.is_empty());
    }

    #[test]
    fn parse_duplicate_id_rejected() {
        let input = "{\"id\":\"p1\",\"tokens\":[\"a\"]}\n{\"id\":\"p1\",\"tokens\":[\"b\"]}\n";
        let err = parse_corpus(input.as_bytes()).unwrap_err();
        match err {
            CorpusError::DuplicateId { line, id } => {
                assert_eq!(line, 2);
                assert_eq!(id, "p1");
            }
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_malformed_reports_line() {
        let input = "{\"id\":\"p1\",\"tokens\":[\"a\"]}\nnot json\n";
        let err = parse_corpus(input.as_bytes()).unwrap_err();
        match err {
            CorpusError::Malformed { line, .. } => assert_eq!(line, 2),
            other => panic!("unexpected error: {other}"),
        }
    }

    #[test]
    fn parse_rejects_empty_cite_target() {
        let input = "{\"id\":\"p1\",\"tokens\":[\"@cite:\"]}\n";
        assert!(matches!(
            parse_corpus(input.as_bytes()),
            Err(CorpusError::Malformed { line: 1, .. })
        ));
    }

    #[test]
    fn extract_single_citation_truncates_at_boundaries() {
        let d = doc("p1", vec![w("w1"), c("p2"), w("w2")]);
        let got = extract_citations(&d, 50);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].source, "p1");
        assert_eq!(got[0].targets, vec!["p2"]);
        assert_eq!(got[0].context, vec!["w1", "w2"]);
        assert_eq!(got[0].position, 1);
    }

    #[test]
    fn extract_merges_consecutive_citations() {
        let d = doc("p1", vec![w("w1"), c("p2"), c("p3"), w("w2")]);
        let got = extract_citations(&d, 50);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].targets, vec!["p2", "p3"]);
        assert_eq!(got[0].context, vec!["w1", "w2"]);
    }

    #[test]
    fn extract_full_window_has_exactly_two_window_words() {
        let mut tokens: Vec<Token> = (0..120).map(|i| w(&format!("a{i}"))).collect();
        tokens.push(c("p2"));
        tokens.extend((0..120).map(|i| w(&format!("b{i}"))));
        let d = doc("p1", tokens);
        let got = extract_citations(&d, 50);
        assert_eq!(got.len(), 1);
        assert_eq!(got[0].context.len(), 100);
        assert_eq!(got[0].context[0], "a70");
        assert_eq!(got[0].context[99], "b49");
    }

    #[test]
    fn extract_skips_interior_citation_marks() {
        // window words are counted over words only; the nested cite is not
        // part of the context and does not consume window budget
        let d = doc(
            "p1",
            vec![w("x"), c("p9"), w("y"), c("p2"), w("z"), c("p9"), w("q")],
        );
        let got = extract_citations(&d, 2);
        let main = got.iter().find(|i| i.targets == vec!["p2"]).unwrap();
        assert_eq!(main.context, vec!["x", "y", "z", "q"]);
    }

    #[test]
    fn extract_no_citations_is_empty() {
        let d = doc("p1", vec![w("a"), w("b")]);
        assert!(extract_citations(&d, 50).is_empty());
    }

    #[test]
    fn caw_replaces_cites_with_pseudo_words() {
        let docs = vec![doc("p1", vec![w("a"), c("p2"), w("b")])];
        let plain = convert_caw(&docs);
        assert_eq!(plain[0].words, vec!["a", "@cite:p2", "b"]);
    }

    #[test]
    fn caw_identity_without_citations() {
        let docs = vec![doc("p1", vec![w("a"), w("b")])];
        assert_eq!(convert_caw(&docs)[0].words, vec!["a", "b"]);
    }

    #[test]
    fn nc_drops_cites() {
        let docs = vec![doc("p1", vec![w("a"), c("p2"), w("b")])];
        assert_eq!(convert_nc(&docs)[0].words, vec!["a", "b"]);
    }

    #[test]
    fn nc_all_citation_doc_becomes_empty() {
        let docs = vec![doc("p1", vec![c("p2"), c("p3")])];
        assert!(convert_nc(&docs)[0].words.is_empty());
    }

    #[test]
    fn cac_copies_context_into_target() {
        let docs = vec![
            doc("p1", vec![w("x"), c("p2"), w("y")]),
            doc("p2", vec![w("z")]),
        ];
        let cac = convert_cac(&docs, 50);
        assert_eq!(cac.docs[1].words, vec!["z", "x", "y"]);
        assert_eq!(cac.skipped_targets, 0);
    }

    #[test]
    fn cac_leaves_uncited_docs_as_nc() {
        let docs = vec![
            doc("p1", vec![w("x"), c("p2"), w("y")]),
            doc("p2", vec![w("z")]),
            doc("p3", vec![w("q"), c("p9"), w("r")]),
        ];
        let cac = convert_cac(&docs, 50);
        let nc = convert_nc(&docs);
        assert_eq!(cac.docs[2].words, nc[2].words);
        assert_eq!(cac.docs[0].words, nc[0].words);
        // p9 is not in the corpus
        assert_eq!(cac.skipped_targets, 1);
    }

    #[test]
    fn cac_growth_equals_summed_context_lengths() {
        // p3 cited twice, with contexts of 4 and 6 words
        let docs = vec![
            doc("p1", vec![w("a"), w("b"), c("p3"), w("c"), w("d")]),
            doc(
                "p2",
                vec![w("e"), w("f"), w("g"), c("p3"), w("h"), w("i"), w("j")],
            ),
            doc("p3", vec![w("z")]),
        ];
        let cac = convert_cac(&docs, 50);
        assert_eq!(cac.docs[2].words.len(), 1 + 4 + 6);
    }

    #[test]
    fn external_targets_skipped_in_extraction() {
        let docs = vec![
            doc("p1", vec![w("a"), c("p2"), c("ext"), w("b")]),
            doc("p2", vec![w("z")]),
        ];
        let ex = extract_corpus_citations(&docs, 50);
        assert_eq!(ex.instances.len(), 1);
        assert_eq!(ex.instances[0].targets, vec!["p2"]);
        assert_eq!(ex.skipped_external_targets, 1);
    }

    #[test]
    fn stats_count_identities() {
        let docs = vec![
            doc("p1", vec![w("a"), c("p2"), w("b")]),
            doc("p2", vec![]),
        ];
        let stats = corpus_stats(&docs, 50);
        assert_eq!(stats.docs, 2);
        assert_eq!(stats.tokens, 3);
        assert_eq!(stats.words, 2);
        assert_eq!(stats.cite_tokens, 1);
        assert_eq!(stats.citation_instances, 1);
        assert_eq!(stats.empty_docs, 1);
    }

    fn arb_corpus() -> impl Strategy<Value = Vec<HyperDocument>> {
        // 1..8 docs with ids d0..d7; tokens mix pool words, internal cites,
        // and cites to an id outside the corpus
        let token = prop_oneof![
            4 => prop::sample::select(vec!["alpha", "beta", "gamma", "delta"])
                .prop_map(|s| Token::Word(s.to_string())),
            2 => (0usize..8).prop_map(|i| Token::Cite(format!("d{i}"))),
            1 => Just(Token::Cite("external".to_string())),
        ];
        let tokens = prop::collection::vec(token, 0..40);
        prop::collection::vec(tokens, 1..8).prop_map(|docs| {
            docs.into_iter()
                .enumerate()
                .map(|(i, tokens)| HyperDocument {
                    id: format!("d{i}"),
                    tokens,
                })
                .collect()
        })
    }

    proptest! {
        #[test]
        fn prop_roundtrip_is_byte_identical(docs in arb_corpus()) {
            let mut buf = Vec::new();
            write_corpus(&mut buf, &docs).unwrap();
            let reparsed = parse_corpus(&buf[..]).unwrap();
            prop_assert_eq!(&reparsed, &docs);
            let mut buf2 = Vec::new();
            write_corpus(&mut buf2, &reparsed).unwrap();
            prop_assert_eq!(buf, buf2);
        }

        #[test]
        fn prop_caw_preserves_token_counts(docs in arb_corpus()) {
            let caw = convert_caw(&docs);
            for (d, p) in docs.iter().zip(&caw) {
                prop_assert_eq!(d.tokens.len(), p.words.len());
            }
        }

        #[test]
        fn prop_nc_drops_exactly_the_citations(docs in arb_corpus()) {
            let nc = convert_nc(&docs);
            for (d, p) in docs.iter().zip(&nc) {
                prop_assert_eq!(p.words.len(), d.tokens.len() - d.cite_count());
                prop_assert!(p.words.iter().all(|w| !w.starts_with(CITE_PREFIX)));
            }
        }

        #[test]
        fn prop_cac_growth_matches_context_totals(docs in arb_corpus(), window in 1usize..6) {
            let nc = convert_nc(&docs);
            let cac = convert_cac(&docs, window);
            let mut expected: HashMap<String, usize> = HashMap::new();
            for d in &docs {
                for inst in extract_citations(d, window) {
                    for t in &inst.targets {
                        if docs.iter().any(|x| &x.id == t) {
                            *expected.entry(t.clone()).or_default() += inst.context.len();
                        }
                    }
                }
            }
            for (i, d) in docs.iter().enumerate() {
                let grow = expected.get(&d.id).copied().unwrap_or(0);
                prop_assert_eq!(cac.docs[i].words.len(), nc[i].words.len() + grow);
            }
        }

        #[test]
        fn prop_contexts_are_clean_and_bounded(docs in arb_corpus(), window in 1usize..8) {
            for d in &docs {
                for inst in extract_citations(d, window) {
                    prop_assert!(inst.context.len() <= 2 * window);
                    prop_assert!(inst.context.iter().all(|w| !w.starts_with(CITE_PREFIX)));
                    prop_assert!(!inst.targets.is_empty());
                }
            }
        }
    }
}
