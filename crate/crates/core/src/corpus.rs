//! Corpus ingestion: shared-task relation records, raw token documents,
//! conversion of explicit relations into fixed-length labeled instances,
//! and corpus statistics.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::fmt;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::embed::Vocabulary;
use crate::error::{Error, Result};

/// Default padding length: the longest window containing both argument
/// spans in the reference treebank's training sections.
pub const DEFAULT_MAX_LEN: usize = 1170;

/// Per-token class. `None` doubles as the padding label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[repr(u8)]
pub enum Label {
    None = 0,
    Arg1 = 1,
    Arg2 = 2,
    Conn = 3,
}

impl Label {
    pub const ALL: [Label; 4] = [Label::None, Label::Arg1, Label::Arg2, Label::Conn];

    #[inline]
    pub fn code(self) -> usize {
        self as usize
    }

    pub fn from_code(code: usize) -> Option<Label> {
        Label::ALL.get(code).copied()
    }
}

/// A set of document token offsets. Spans may be non-contiguous.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Span(BTreeSet<usize>);

impl Span {
    pub fn new() -> Self {
        Span(BTreeSet::new())
    }

    pub fn range(lo: usize, hi: usize) -> Self {
        Span((lo..=hi).collect())
    }

    pub fn insert(&mut self, idx: usize) {
        self.0.insert(idx);
    }

    pub fn contains(&self, idx: usize) -> bool {
        self.0.contains(&idx)
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn min(&self) -> Option<usize> {
        self.0.first().copied()
    }

    pub fn max(&self) -> Option<usize> {
        self.0.last().copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().copied()
    }

    pub fn is_disjoint(&self, other: &Span) -> bool {
        self.0.is_disjoint(&other.0)
    }
}

impl FromIterator<usize> for Span {
    fn from_iter<I: IntoIterator<Item = usize>>(iter: I) -> Self {
        Span(iter.into_iter().collect())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RelationType {
    Explicit,
    NonExplicit,
}

/// One annotated discourse relation.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Relation {
    pub id: u64,
    pub doc_id: String,
    pub rel_type: RelationType,
    pub arg1: Span,
    pub arg2: Span,
    pub connective: Span,
}

impl Relation {
    pub fn is_explicit(&self) -> bool {
        self.rel_type == RelationType::Explicit
    }

    /// Check the structural invariants, and token offsets when the document
    /// is available. Non-explicit relations are read tolerantly: only span
    /// disjointness and offset bounds are enforced.
    pub fn validate(&self, doc: Option<&Document>) -> Result<()> {
        if self.is_explicit() {
            for (name, span) in [
                ("Arg1", &self.arg1),
                ("Arg2", &self.arg2),
                ("Connective", &self.connective),
            ] {
                if span.is_empty() {
                    return Err(Error::Validation(format!(
                        "relation {} in {}: empty {} span on an explicit relation",
                        self.id, self.doc_id, name
                    )));
                }
            }
        }
        if !self.arg1.is_disjoint(&self.arg2)
            || !self.arg1.is_disjoint(&self.connective)
            || !self.arg2.is_disjoint(&self.connective)
        {
            return Err(Error::Validation(format!(
                "relation {} in {}: Arg1/Arg2/connective spans overlap",
                self.id, self.doc_id
            )));
        }
        if let Some(doc) = doc {
            let max = [&self.arg1, &self.arg2, &self.connective]
                .iter()
                .filter_map(|s| s.max())
                .max();
            if let Some(max) = max {
                if max >= doc.len() {
                    return Err(Error::Validation(format!(
                        "relation {} in {}: token offset {} beyond document length {}",
                        self.id, self.doc_id, max, doc.len()
                    )));
                }
            }
        }
        Ok(())
    }
}

/// One token of a raw document.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub doc_index: usize,
}

/// A raw document as an ordered token list; `doc_index` values are
/// contiguous from zero.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Document {
    pub doc_id: String,
    tokens: Vec<Token>,
}

impl Document {
    pub fn new(doc_id: impl Into<String>, surfaces: Vec<String>) -> Result<Self> {
        let doc_id = doc_id.into();
        let mut tokens = Vec::with_capacity(surfaces.len());
        for (i, surface) in surfaces.into_iter().enumerate() {
            if surface.is_empty() || surface.chars().all(char::is_whitespace) {
                return Err(Error::Validation(format!(
                    "document {doc_id}: empty token at index {i}"
                )));
            }
            tokens.push(Token {
                surface,
                doc_index: i,
            });
        }
        Ok(Document { doc_id, tokens })
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn tokens(&self) -> &[Token] {
        &self.tokens
    }

    pub fn surface(&self, doc_index: usize) -> Option<&str> {
        self.tokens.get(doc_index).map(|t| t.surface.as_str())
    }
}

/// A fixed-length training instance: vocabulary indices over the window
/// followed by zero-word padding, with a parallel label vector padded with
/// `Label::None`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub word_ids: Vec<u32>,
    pub labels: Vec<Label>,
    /// Document offset of the first window token.
    pub window_start: usize,
    /// Number of non-padding positions.
    pub real_len: usize,
}

/// A relation file plus the documents it refers to.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub relations: Vec<Relation>,
    pub documents: BTreeMap<String, Document>,
}

// ---------------------------------------------------------------------------
// Relation file parsing (newline-delimited shared-task JSON records)
// ---------------------------------------------------------------------------

#[derive(Deserialize)]
struct RawRecord {
    #[serde(rename = "DocID")]
    doc_id: String,
    #[serde(rename = "ID")]
    id: Option<u64>,
    #[serde(rename = "Type")]
    rel_type: String,
    #[serde(rename = "Arg1")]
    arg1: RawArg,
    #[serde(rename = "Arg2")]
    arg2: RawArg,
    #[serde(rename = "Connective")]
    connective: RawArg,
}

#[derive(Deserialize)]
struct RawArg {
    #[serde(rename = "TokenList", default)]
    token_list: Vec<Vec<i64>>,
}

fn span_from_token_list(
    path: &Path,
    line_no: usize,
    field: &str,
    list: &[Vec<i64>],
) -> Result<Span> {
    let mut span = Span::new();
    for entry in list {
        // [charStart, charEnd, docTokenOffset, sentenceOffset, sentenceTokenOffset]
        if entry.len() != 5 {
            return Err(Error::parse(
                path,
                line_no,
                format!(
                    "{field}: TokenList entry has {} elements, expected 5",
                    entry.len()
                ),
            ));
        }
        let offset = entry[2];
        if offset < 0 {
            return Err(Error::parse(
                path,
                line_no,
                format!("{field}: negative document token offset {offset}"),
            ));
        }
        span.insert(offset as usize);
    }
    Ok(span)
}

/// Load relations from a newline-delimited shared-task relation file.
/// Records without an `ID` field get their (1-based) line number as id.
pub fn load_relations(path: impl AsRef<Path>) -> Result<Vec<Relation>> {
    let path = path.as_ref();
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let reader = BufReader::new(file);
    let mut relations = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line)
            .map_err(|e| Error::parse(path, line_no, e.to_string()))?;
        let rel_type = if raw.rel_type == "Explicit" {
            RelationType::Explicit
        } else {
            RelationType::NonExplicit
        };
        let relation = Relation {
            id: raw.id.unwrap_or(line_no as u64),
            doc_id: raw.doc_id,
            rel_type,
            arg1: span_from_token_list(path, line_no, "Arg1", &raw.arg1.token_list)?,
            arg2: span_from_token_list(path, line_no, "Arg2", &raw.arg2.token_list)?,
            connective: span_from_token_list(path, line_no, "Connective", &raw.connective.token_list)?,
        };
        relation.validate(None)?;
        relations.push(relation);
    }
    Ok(relations)
}

/// Load one token-per-line documents from a directory, keyed by doc id.
/// Files may be named either `<doc_id>` or `<doc_id>.txt`.
pub fn load_documents(
    dir: impl AsRef<Path>,
    doc_ids: &HashSet<String>,
) -> Result<BTreeMap<String, Document>> {
    let dir = dir.as_ref();
    let mut documents = BTreeMap::new();
    for doc_id in doc_ids {
        let bare = dir.join(doc_id);
        let with_ext = dir.join(format!("{doc_id}.txt"));
        let path = if bare.is_file() { bare } else { with_ext };
        let file = fs::File::open(&path).map_err(|e| Error::io(&path, e))?;
        let mut surfaces = Vec::new();
        for (idx, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| Error::io(&path, e))?;
            if line.trim().is_empty() {
                return Err(Error::parse(&path, idx + 1, "empty token line"));
            }
            surfaces.push(line.trim().to_string());
        }
        documents.insert(doc_id.clone(), Document::new(doc_id.clone(), surfaces)?);
    }
    Ok(documents)
}

/// Load a relation file together with its raw documents and validate every
/// relation's token offsets against the document lengths.
pub fn load_corpus(
    relations_path: impl AsRef<Path>,
    tokens_dir: impl AsRef<Path>,
) -> Result<Corpus> {
    let relations = load_relations(relations_path)?;
    let doc_ids: HashSet<String> = relations.iter().map(|r| r.doc_id.clone()).collect();
    let documents = load_documents(tokens_dir, &doc_ids)?;
    for relation in &relations {
        relation.validate(documents.get(&relation.doc_id))?;
    }
    Ok(Corpus {
        relations,
        documents,
    })
}

// ---------------------------------------------------------------------------
// Operations
// ---------------------------------------------------------------------------

/// Keep only explicit relations, preserving order.
pub fn filter_explicit(relations: &[Relation]) -> Vec<Relation> {
    relations
        .iter()
        .filter(|r| r.is_explicit())
        .cloned()
        .collect()
}

/// Convert one explicit relation into a fixed-length instance.
///
/// The window is the contiguous document range from the smallest to the
/// largest offset over Arg1, Arg2, and the connective; everything past the
/// window is zero-word padding labeled `None`.
pub fn build_instance(
    relation: &Relation,
    document: &Document,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<Instance> {
    if !relation.is_explicit() {
        return Err(Error::Validation(format!(
            "relation {}: cannot build an instance from a non-explicit relation",
            relation.id
        )));
    }
    let spans = [&relation.arg1, &relation.arg2, &relation.connective];
    let lo = spans.iter().filter_map(|s| s.min()).min().expect("validated non-empty");
    let hi = spans.iter().filter_map(|s| s.max()).max().expect("validated non-empty");
    if hi >= document.len() {
        return Err(Error::Validation(format!(
            "relation {} in {}: token offset {} beyond document length {}",
            relation.id, relation.doc_id, hi, document.len()
        )));
    }
    let real_len = hi - lo + 1;
    if real_len > max_len {
        return Err(Error::OversizedWindow {
            len: real_len,
            max_len,
        });
    }
    let mut word_ids = vec![0u32; max_len];
    let mut labels = vec![Label::None; max_len];
    for (pos, doc_index) in (lo..=hi).enumerate() {
        let surface = document.surface(doc_index).expect("offset checked above");
        word_ids[pos] = vocab.id_or_zero(surface);
        labels[pos] = if relation.arg1.contains(doc_index) {
            Label::Arg1
        } else if relation.arg2.contains(doc_index) {
            Label::Arg2
        } else if relation.connective.contains(doc_index) {
            Label::Conn
        } else {
            Label::None
        };
    }
    Ok(Instance {
        word_ids,
        labels,
        window_start: lo,
        real_len,
    })
}

/// Outcome of building instances for a relation list; oversized windows are
/// skipped and counted rather than aborting the batch.
#[derive(Debug, Default)]
pub struct BuiltInstances {
    /// (index into the input relation slice, instance)
    pub items: Vec<(usize, Instance)>,
    pub skipped: usize,
}

/// Build instances for every explicit relation, skipping oversized windows
/// with a logged warning.
pub fn build_instances(
    relations: &[Relation],
    documents: &BTreeMap<String, Document>,
    vocab: &Vocabulary,
    max_len: usize,
) -> Result<BuiltInstances> {
    let mut out = BuiltInstances::default();
    for (idx, relation) in relations.iter().enumerate() {
        if !relation.is_explicit() {
            continue;
        }
        let document = documents.get(&relation.doc_id).ok_or_else(|| {
            Error::Validation(format!(
                "relation {}: no document loaded for doc id {}",
                relation.id, relation.doc_id
            ))
        })?;
        match build_instance(relation, document, vocab, max_len) {
            Ok(instance) => out.items.push((idx, instance)),
            Err(Error::OversizedWindow { len, max_len }) => {
                log::warn!(
                    "skipping relation {} in {}: window of {} tokens exceeds max_len {}",
                    relation.id,
                    relation.doc_id,
                    len,
                    max_len
                );
                out.skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(out)
}

/// Number of tokens strictly between the nearest boundaries of Arg1 and
/// Arg2, with connective tokens excluded from the count.
pub fn distance(relation: &Relation) -> Result<usize> {
    if !relation.is_explicit() {
        return Err(Error::Validation(format!(
            "relation {}: distance is defined for explicit relations only",
            relation.id
        )));
    }
    let (a1_min, a1_max) = match (relation.arg1.min(), relation.arg1.max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::Validation(format!("relation {}: empty Arg1", relation.id))),
    };
    let (a2_min, a2_max) = match (relation.arg2.min(), relation.arg2.max()) {
        (Some(lo), Some(hi)) => (lo, hi),
        _ => return Err(Error::Validation(format!("relation {}: empty Arg2", relation.id))),
    };
    let (first_end, second_start) = if a1_max < a2_min {
        (a1_max, a2_min)
    } else if a2_max < a1_min {
        (a2_max, a1_min)
    } else {
        return Err(Error::Validation(format!(
            "relation {} in {}: argument spans overlap or interleave",
            relation.id, relation.doc_id
        )));
    };
    Ok(((first_end + 1)..second_start)
        .filter(|idx| !relation.connective.contains(*idx))
        .count())
}

// ---------------------------------------------------------------------------
// Statistics
// ---------------------------------------------------------------------------

/// Distance histogram bins.
pub const DISTANCE_BINS: [&str; 4] = ["0", "1", "2-10", ">10"];

/// Bin index for a raw distance value.
pub fn distance_bin(d: usize) -> usize {
    match d {
        0 => 0,
        1 => 1,
        2..=10 => 2,
        _ => 3,
    }
}

/// Split/type counts plus the explicit-relation distance histogram.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorpusStats {
    pub n_explicit_train: usize,
    pub n_explicit_test: usize,
    pub n_nonexplicit_train: usize,
    pub n_nonexplicit_test: usize,
    /// Raw per-distance counts over explicit relations of both splits.
    pub distance_histogram: BTreeMap<usize, usize>,
}

impl CorpusStats {
    pub fn n_explicit(&self) -> usize {
        self.n_explicit_train + self.n_explicit_test
    }

    pub fn n_nonexplicit(&self) -> usize {
        self.n_nonexplicit_train + self.n_nonexplicit_test
    }

    pub fn total(&self) -> usize {
        self.n_explicit() + self.n_nonexplicit()
    }

    /// Histogram counts folded into the reporting bins {0, 1, 2-10, >10}.
    pub fn bin_counts(&self) -> [usize; 4] {
        let mut bins = [0usize; 4];
        for (&d, &count) in &self.distance_histogram {
            bins[distance_bin(d)] += count;
        }
        bins
    }
}

impl fmt::Display for CorpusStats {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{:<10} {:>10} {:>14} {:>10}", "Dataset", "Explicit", "Non-Explicit", "Total")?;
        writeln!(
            f,
            "{:<10} {:>10} {:>14} {:>10}",
            "Training",
            self.n_explicit_train,
            self.n_nonexplicit_train,
            self.n_explicit_train + self.n_nonexplicit_train
        )?;
        writeln!(
            f,
            "{:<10} {:>10} {:>14} {:>10}",
            "Testing",
            self.n_explicit_test,
            self.n_nonexplicit_test,
            self.n_explicit_test + self.n_nonexplicit_test
        )?;
        writeln!(
            f,
            "{:<10} {:>10} {:>14} {:>10}",
            "Total",
            self.n_explicit(),
            self.n_nonexplicit(),
            self.total()
        )?;
        writeln!(f)?;
        writeln!(f, "{:<10} {:>10} {:>12}", "Distance", "Count", "Percentage")?;
        let bins = self.bin_counts();
        let total: usize = bins.iter().sum();
        for (label, count) in DISTANCE_BINS.iter().zip(bins) {
            let pct = if total == 0 { 0.0 } else { 100.0 * count as f64 / total as f64 };
            writeln!(f, "{:<10} {:>10} {:>11.2}%", label, count, pct)?;
        }
        writeln!(f, "{:<10} {:>10} {:>11.2}%", "Total", total, if total == 0 { 0.0 } else { 100.0 })
    }
}

/// Compute split counts and the distance histogram over explicit relations
/// of both splits.
pub fn corpus_stats(train: &[Relation], test: &[Relation]) -> Result<CorpusStats> {
    let mut stats = CorpusStats::default();
    for relation in train {
        if relation.is_explicit() {
            stats.n_explicit_train += 1;
        } else {
            stats.n_nonexplicit_train += 1;
        }
    }
    for relation in test {
        if relation.is_explicit() {
            stats.n_explicit_test += 1;
        } else {
            stats.n_nonexplicit_test += 1;
        }
    }
    for relation in train.iter().chain(test) {
        if relation.is_explicit() {
            *stats.distance_histogram.entry(distance(relation)?).or_insert(0) += 1;
        }
    }
    Ok(stats)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(words: &str) -> Document {
        Document::new("d0", words.split_whitespace().map(String::from).collect()).unwrap()
    }

    fn explicit(id: u64, arg1: Span, conn: Span, arg2: Span) -> Relation {
        Relation {
            id,
            doc_id: "d0".into(),
            rel_type: RelationType::Explicit,
            arg1,
            arg2,
            connective: conn,
        }
    }

    /// "We would stop index arbitrage when the market is under stress ."
    fn condition_example() -> (Document, Relation) {
        let d = doc("We would stop index arbitrage when the market is under stress .");
        let r = explicit(1, Span::range(0, 4), Span::range(5, 5), Span::range(6, 11));
        (d, r)
    }

    #[test]
    fn filter_explicit_keeps_order_and_is_idempotent() {
        let e = explicit(1, Span::range(0, 1), Span::range(2, 2), Span::range(3, 4));
        let mut n = e.clone();
        n.id = 2;
        n.rel_type = RelationType::NonExplicit;
        let all = vec![n.clone(), e.clone(), n.clone(), e.clone()];
        let filtered = filter_explicit(&all);
        assert_eq!(filtered.len(), 2);
        assert!(filtered.iter().all(Relation::is_explicit));
        assert_eq!(filter_explicit(&filtered), filtered);
        assert!(filter_explicit(&[n.clone(), n]).is_empty());
    }

    #[test]
    fn instance_labels_match_span_membership() {
        let (d, r) = condition_example();
        let vocab = Vocabulary::build(d.tokens().iter().map(|t| t.surface.as_str()));
        let inst = build_instance(&r, &d, &vocab, 16).unwrap();
        assert_eq!(inst.window_start, 0);
        assert_eq!(inst.real_len, 12);
        let mut expected = vec![Label::Arg1; 5];
        expected.push(Label::Conn);
        expected.extend(vec![Label::Arg2; 6]);
        expected.extend(vec![Label::None; 4]);
        assert_eq!(inst.labels, expected);
        // Padding positions hold the zero word.
        assert!(inst.word_ids[12..].iter().all(|&id| id == 0));
    }

    #[test]
    fn instance_word_ids_reuse_ids_for_repeated_words() {
        // Repeated words ("we", "have") map to the id of their first
        // occurrence; ids are dense in first-occurrence order.
        let d = doc("We would have to wait until we have collected on those assets");
        let vocab = Vocabulary::build(d.tokens().iter().map(|t| t.surface.as_str()));
        let r = explicit(1, Span::range(0, 4), Span::range(5, 5), Span::range(6, 11));
        let inst = build_instance(&r, &d, &vocab, 20).unwrap();
        assert_eq!(&inst.word_ids[..12], &[1, 2, 3, 4, 5, 6, 1, 3, 7, 8, 9, 10]);
        assert!(inst.word_ids[12..].iter().all(|&id| id == 0));
    }

    #[test]
    fn instance_window_exactly_max_len_has_no_padding() {
        let (d, r) = condition_example();
        let vocab = Vocabulary::build(d.tokens().iter().map(|t| t.surface.as_str()));
        let inst = build_instance(&r, &d, &vocab, 12).unwrap();
        assert_eq!(inst.real_len, 12);
        assert_eq!(inst.word_ids.len(), 12);
    }

    #[test]
    fn oversized_window_is_reported() {
        let (d, r) = condition_example();
        let vocab = Vocabulary::build(d.tokens().iter().map(|t| t.surface.as_str()));
        match build_instance(&r, &d, &vocab, 11) {
            Err(Error::OversizedWindow { len, max_len }) => {
                assert_eq!(len, 12);
                assert_eq!(max_len, 11);
            }
            other => panic!("expected OversizedWindow, got {other:?}"),
        }
    }

    #[test]
    fn distance_counts_fourteen_intervening_words() {
        // "These are all market excesses ... and what we 've seen is the
        // market reining them in": 14 words separate the arguments, with the
        // connective opening Arg2.
        let arg1 = Span::range(0, 4);
        let filler_end = 4 + 14;
        let conn = Span::range(filler_end + 1, filler_end + 1);
        let arg2 = Span::range(filler_end + 2, filler_end + 10);
        let r = explicit(2, arg1, conn, arg2);
        assert_eq!(distance(&r).unwrap(), 14);
    }

    #[test]
    fn distance_zero_when_connective_abuts_arguments() {
        let r = explicit(3, Span::range(0, 4), Span::range(5, 5), Span::range(6, 9));
        assert_eq!(distance(&r).unwrap(), 0);
    }

    #[test]
    fn distance_excludes_connective_tokens() {
        // Arg1 = {0..4}, attribution token {5}, connective {6}, Arg2 = {7..10}.
        let r = explicit(4, Span::range(0, 4), Span::range(6, 6), Span::range(7, 10));
        assert_eq!(distance(&r).unwrap(), 1);
    }

    #[test]
    fn distance_is_symmetric_in_argument_order() {
        // Arg2 before Arg1 in document order.
        let r = explicit(5, Span::range(7, 10), Span::range(6, 6), Span::range(0, 4));
        assert_eq!(distance(&r).unwrap(), 1);
    }

    #[test]
    fn distance_rejects_interleaved_arguments() {
        let arg1: Span = [0, 8].into_iter().collect();
        let r = explicit(6, arg1, Span::range(1, 1), Span::range(3, 5));
        assert!(matches!(distance(&r), Err(Error::Validation(_))));
    }

    #[test]
    fn stats_bins_follow_table_edges() {
        assert_eq!(distance_bin(0), 0);
        assert_eq!(distance_bin(1), 1);
        assert_eq!(distance_bin(2), 2);
        assert_eq!(distance_bin(10), 2);
        assert_eq!(distance_bin(11), 3);
    }

    #[test]
    fn stats_on_empty_input_are_zero() {
        let stats = corpus_stats(&[], &[]).unwrap();
        assert_eq!(stats.total(), 0);
        assert!(stats.distance_histogram.is_empty());
        assert_eq!(stats.bin_counts(), [0, 0, 0, 0]);
    }

    #[test]
    fn histogram_counts_sum_to_explicit_total() {
        let mut train = Vec::new();
        for (i, d) in [0usize, 1, 5, 12, 1, 1].into_iter().enumerate() {
            let arg1 = Span::range(0, 2);
            let conn = Span::range(3 + d, 3 + d);
            let arg2 = Span::range(4 + d, 6 + d);
            train.push(explicit(i as u64, arg1, conn, arg2));
        }
        let mut non = train[0].clone();
        non.rel_type = RelationType::NonExplicit;
        train.push(non);
        let stats = corpus_stats(&train, &[]).unwrap();
        assert_eq!(stats.n_explicit_train, 6);
        assert_eq!(stats.n_nonexplicit_train, 1);
        assert_eq!(stats.distance_histogram.values().sum::<usize>(), 6);
        assert_eq!(stats.bin_counts(), [1, 3, 1, 1]);
    }

    #[test]
    fn malformed_relation_line_names_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rel.jsonl");
        std::fs::write(&path, "{\"DocID\": \"d\", \"Type\": \"Explicit\"\n").unwrap();
        match load_relations(&path) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn empty_relation_file_yields_no_relations() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rel.jsonl");
        std::fs::write(&path, "").unwrap();
        assert!(load_relations(&path).unwrap().is_empty());
    }

    #[test]
    fn token_offsets_validated_against_documents() {
        let dir = tempfile::tempdir().unwrap();
        let rel_path = dir.path().join("rel.jsonl");
        let tokens_dir = dir.path().join("tokens");
        std::fs::create_dir(&tokens_dir).unwrap();
        std::fs::write(tokens_dir.join("d0.txt"), "a\nb\nc\n").unwrap();
        let record = serde_json::json!({
            "DocID": "d0",
            "ID": 7,
            "Type": "Explicit",
            "Arg1": {"TokenList": [[0, 1, 0, 0, 0]]},
            "Arg2": {"TokenList": [[4, 5, 9, 0, 2]]},
            "Connective": {"TokenList": [[2, 3, 1, 0, 1]]},
        });
        std::fs::write(&rel_path, format!("{record}\n")).unwrap();
        match load_corpus(&rel_path, &tokens_dir) {
            Err(Error::Validation(msg)) => assert!(msg.contains("offset 9")),
            other => panic!("expected validation error, got {other:?}"),
        }
    }
}
