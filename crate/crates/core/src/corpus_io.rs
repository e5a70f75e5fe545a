//! Input artifacts: corpora, word alignments, attribution dumps, language
//! metadata, score tables and POS tag files.
//!
//! All text is taken verbatim; no Unicode normalization is applied anywhere,
//! since the byte-level analyses depend on the exact encoding.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn read_file(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn origin(path: &Path) -> String {
    path.display().to_string()
}

/// Non-blank lines with their 1-based line numbers.
fn numbered_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.strip_suffix('\r').unwrap_or(l)))
        .filter(|(_, l)| !l.trim().is_empty())
}

// ---------------------------------------------------------------------------
// Corpus
// ---------------------------------------------------------------------------

/// One parallel example: source, reference and one hypothesis per system.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SentenceRecord {
    pub id: String,
    #[serde(rename = "src")]
    pub source: String,
    #[serde(rename = "ref")]
    pub reference: String,
    #[serde(rename = "hyp", default)]
    pub hypotheses: BTreeMap<String, String>,
}

impl SentenceRecord {
    pub fn hypothesis(&self, system: &str) -> Result<&str> {
        self.hypotheses
            .get(system)
            .map(String::as_str)
            .ok_or_else(|| Error::Missing {
                what: "hypothesis",
                id: self.id.clone(),
            })
    }
}

/// An ordered collection of [`SentenceRecord`]s sharing one set of systems.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    pub source_lang: Option<String>,
    pub target_lang: Option<String>,
    records: Vec<SentenceRecord>,
    index: HashMap<String, usize>,
}

impl Corpus {
    /// Builds a corpus, checking ids, non-empty sides and that every record
    /// carries the same hypothesis systems.
    pub fn new(records: Vec<SentenceRecord>) -> Result<Self> {
        let mut index = HashMap::with_capacity(records.len());
        for (i, r) in records.iter().enumerate() {
            validate_record(r, "corpus", i + 1, records.first())?;
            if index.insert(r.id.clone(), i).is_some() {
                return Err(Error::DuplicateId {
                    id: r.id.clone(),
                    line: i + 1,
                });
            }
        }
        Ok(Corpus {
            source_lang: None,
            target_lang: None,
            records,
            index,
        })
    }

    pub fn with_languages(mut self, source: impl Into<String>, target: impl Into<String>) -> Self {
        self.source_lang = Some(source.into());
        self.target_lang = Some(target.into());
        self
    }

    pub fn records(&self) -> &[SentenceRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&SentenceRecord> {
        self.index.get(id).map(|&i| &self.records[i])
    }

    pub fn systems(&self) -> Vec<&str> {
        self.records
            .first()
            .map(|r| r.hypotheses.keys().map(String::as_str).collect())
            .unwrap_or_default()
    }

    pub fn references(&self) -> Vec<&str> {
        self.records.iter().map(|r| r.reference.as_str()).collect()
    }

    pub fn hypotheses(&self, system: &str) -> Result<Vec<&str>> {
        self.records.iter().map(|r| r.hypothesis(system)).collect()
    }

    pub fn into_records(self) -> Vec<SentenceRecord> {
        self.records
    }

    /// Writes the corpus in its line-delimited JSON form.
    pub fn write_jsonl<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for r in &self.records {
            serde_json::to_writer(&mut out, r)?;
            out.write_all(b"\n")?;
        }
        Ok(())
    }

    pub fn to_jsonl(&self) -> String {
        let mut buf = Vec::new();
        self.write_jsonl(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("serde_json emits UTF-8")
    }
}

fn validate_record(r: &SentenceRecord, origin: &str, line: usize, first: Option<&SentenceRecord>) -> Result<()> {
    let err = |m: &str| Error::parse(origin, line, format!("record {:?}: {m}", r.id));
    if r.id.is_empty() {
        return Err(err("empty id"));
    }
    if r.source.is_empty() {
        return Err(err("empty source"));
    }
    if r.reference.is_empty() {
        return Err(err("empty reference"));
    }
    if let Some(first) = first {
        if !r.hypotheses.keys().eq(first.hypotheses.keys()) {
            return Err(err("hypothesis systems differ from the first record"));
        }
    }
    Ok(())
}

pub fn parse_corpus(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    parse_corpus_str(&read_file(path)?, &origin(path))
}

/// Parses line-delimited JSON records. Errors carry the 1-based line number.
pub fn parse_corpus_str(text: &str, origin: &str) -> Result<Corpus> {
    let mut records: Vec<SentenceRecord> = Vec::new();
    let mut seen = HashSet::new();
    for (line, content) in numbered_lines(text) {
        let record: SentenceRecord = serde_json::from_str(content).map_err(|e| Error::parse(origin, line, e))?;
        validate_record(&record, origin, line, records.first())?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId { id: record.id, line });
        }
        records.push(record);
    }
    Corpus::new(records)
}

// ---------------------------------------------------------------------------
// Alignments
// ---------------------------------------------------------------------------

/// Word alignment links `(source index, target index)`, both 0-based.
#[derive(Debug, Clone, PartialEq, Eq, Default, Hash)]
pub struct Alignment {
    links: BTreeSet<(usize, usize)>,
}

impl Alignment {
    pub fn from_links(links: impl IntoIterator<Item = (usize, usize)>) -> Self {
        Alignment {
            links: links.into_iter().collect(),
        }
    }

    pub fn links(&self) -> &BTreeSet<(usize, usize)> {
        &self.links
    }

    pub fn len(&self) -> usize {
        self.links.len()
    }

    pub fn is_empty(&self) -> bool {
        self.links.is_empty()
    }

    /// Target indices linked to `src`, ascending.
    pub fn targets_of(&self, src: usize) -> impl Iterator<Item = usize> + '_ {
        self.links.range((src, 0)..=(src, usize::MAX)).map(|&(_, t)| t)
    }

    pub fn check_bounds(&self, id: &str, src_len: usize, tgt_len: usize) -> Result<()> {
        for &(s, t) in &self.links {
            if s >= src_len {
                return Err(Error::IndexOutOfRange {
                    id: id.to_owned(),
                    side: "source",
                    index: s,
                    len: src_len,
                });
            }
            if t >= tgt_len {
                return Err(Error::IndexOutOfRange {
                    id: id.to_owned(),
                    side: "target",
                    index: t,
                    len: tgt_len,
                });
            }
        }
        Ok(())
    }
}

impl fmt::Display for Alignment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, (s, t)) in self.links.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{s}-{t}")?;
        }
        Ok(())
    }
}

/// Parses Pharaoh-format links (`"0-1 2-0"`). Duplicate links collapse.
pub fn parse_alignment_line(text: &str) -> Result<Alignment> {
    let mut links = BTreeSet::new();
    for token in text.split_whitespace() {
        let bad = || Error::AlignmentToken {
            token: token.to_owned(),
        };
        let (s, t) = token.split_once('-').ok_or_else(bad)?;
        let s = s.parse::<usize>().map_err(|_| bad())?;
        let t = t.parse::<usize>().map_err(|_| bad())?;
        links.insert((s, t));
    }
    Ok(Alignment { links })
}

/// Alignments keyed by record id, as read from an `id<TAB>links` file.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct AlignmentSet {
    by_id: HashMap<String, Alignment>,
}

impl AlignmentSet {
    pub fn get(&self, id: &str) -> Option<&Alignment> {
        self.by_id.get(id)
    }

    pub fn require(&self, id: &str) -> Result<&Alignment> {
        self.get(id).ok_or_else(|| Error::Missing {
            what: "alignment",
            id: id.to_owned(),
        })
    }

    pub fn insert(&mut self, id: impl Into<String>, alignment: Alignment) {
        self.by_id.insert(id.into(), alignment);
    }

    pub fn len(&self) -> usize {
        self.by_id.len()
    }

    pub fn is_empty(&self) -> bool {
        self.by_id.is_empty()
    }
}

impl FromIterator<(String, Alignment)> for AlignmentSet {
    fn from_iter<I: IntoIterator<Item = (String, Alignment)>>(iter: I) -> Self {
        AlignmentSet {
            by_id: iter.into_iter().collect(),
        }
    }
}

pub fn parse_alignments(path: impl AsRef<Path>) -> Result<AlignmentSet> {
    let path = path.as_ref();
    parse_alignments_str(&read_file(path)?, &origin(path))
}

pub fn parse_alignments_str(text: &str, origin: &str) -> Result<AlignmentSet> {
    let mut set = AlignmentSet::default();
    for (line, content) in numbered_lines(text) {
        let (id, links) = content.split_once('\t').unwrap_or((content, ""));
        if id.trim().is_empty() {
            return Err(Error::parse(origin, line, "empty id"));
        }
        let alignment = parse_alignment_line(links).map_err(|e| Error::parse(origin, line, e))?;
        if set.by_id.insert(id.to_owned(), alignment).is_some() {
            return Err(Error::DuplicateId {
                id: id.to_owned(),
                line,
            });
        }
    }
    Ok(set)
}

// ---------------------------------------------------------------------------
// POS tags
// ---------------------------------------------------------------------------

/// Per-record tag sequences from an `id<TAB>tag tag ...` file.
pub type TagSet = HashMap<String, Vec<String>>;

pub fn parse_tags(path: impl AsRef<Path>) -> Result<TagSet> {
    let path = path.as_ref();
    parse_tags_str(&read_file(path)?, &origin(path))
}

pub fn parse_tags_str(text: &str, origin: &str) -> Result<TagSet> {
    let mut tags = TagSet::new();
    for (line, content) in numbered_lines(text) {
        let (id, rest) = content.split_once('\t').unwrap_or((content, ""));
        if id.trim().is_empty() {
            return Err(Error::parse(origin, line, "empty id"));
        }
        let seq = rest.split_whitespace().map(str::to_owned).collect();
        if tags.insert(id.to_owned(), seq).is_some() {
            return Err(Error::DuplicateId {
                id: id.to_owned(),
                line,
            });
        }
    }
    Ok(tags)
}

// ---------------------------------------------------------------------------
// Attributions
// ---------------------------------------------------------------------------

/// Gradient L2 norms for one generated byte.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributionStep {
    /// One norm per source byte.
    #[serde(rename = "src")]
    pub src_norms: Vec<f64>,
    /// One norm per previously generated byte.
    #[serde(rename = "tgt")]
    pub tgt_norms: Vec<f64>,
}

impl AttributionStep {
    pub fn source_mass(&self) -> f64 {
        self.src_norms.iter().sum()
    }

    pub fn target_mass(&self) -> f64 {
        self.tgt_norms.iter().sum()
    }
}

/// Per-step attribution norms for one generated sentence.
///
/// The final target byte is the end-of-sentence marker. When `prompt_len`
/// is set, the first `prompt_len` source bytes belong to the instruction
/// prompt rather than the source sentence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttributionRecord {
    pub id: String,
    pub source_bytes: Vec<u8>,
    pub target_bytes: Vec<u8>,
    pub steps: Vec<AttributionStep>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub prompt_len: Option<usize>,
}

impl AttributionRecord {
    pub fn validate(&self) -> Result<()> {
        if self.steps.len() != self.target_bytes.len() {
            return Err(Error::StepCountMismatch {
                id: self.id.clone(),
                steps: self.steps.len(),
                target_bytes: self.target_bytes.len(),
            });
        }
        if let Some(p) = self.prompt_len {
            if p > self.source_bytes.len() {
                return Err(Error::invalid(format!(
                    "record {:?}: prompt_len {p} exceeds {} source bytes",
                    self.id,
                    self.source_bytes.len()
                )));
            }
        }
        for (t, step) in self.steps.iter().enumerate() {
            let bad = |message: String| Error::InvalidStep {
                id: self.id.clone(),
                step: t,
                message,
            };
            if step.src_norms.len() != self.source_bytes.len() {
                return Err(bad(format!(
                    "{} source norms for {} source bytes",
                    step.src_norms.len(),
                    self.source_bytes.len()
                )));
            }
            if step.tgt_norms.len() != t {
                return Err(bad(format!("{} target norms, expected {t}", step.tgt_norms.len())));
            }
            for &v in step.src_norms.iter().chain(&step.tgt_norms) {
                if !v.is_finite() {
                    return Err(bad(format!("non-finite norm {v}")));
                }
                if v < 0.0 {
                    return Err(bad(format!("negative norm {v}")));
                }
            }
            if step.source_mass() + step.target_mass() <= 0.0 {
                return Err(Error::ZeroStep {
                    id: self.id.clone(),
                    step: t,
                });
            }
        }
        Ok(())
    }

    /// Generated bytes without the trailing end-of-sentence marker.
    pub fn text_bytes(&self) -> &[u8] {
        match self.target_bytes.split_last() {
            Some((_, rest)) => rest,
            None => &[],
        }
    }

    /// Copy of the record with the prompt bytes and their norms removed.
    pub fn without_prompt(&self) -> AttributionRecord {
        let p = self.prompt_len.unwrap_or(0);
        AttributionRecord {
            id: self.id.clone(),
            source_bytes: self.source_bytes[p..].to_vec(),
            target_bytes: self.target_bytes.clone(),
            steps: self
                .steps
                .iter()
                .map(|s| AttributionStep {
                    src_norms: s.src_norms[p..].to_vec(),
                    tgt_norms: s.tgt_norms.clone(),
                })
                .collect(),
            prompt_len: None,
        }
    }
}

pub fn load_attributions(path: impl AsRef<Path>) -> Result<Vec<AttributionRecord>> {
    let path = path.as_ref();
    parse_attributions_str(&read_file(path)?, &origin(path))
}

pub fn parse_attributions_str(text: &str, origin: &str) -> Result<Vec<AttributionRecord>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (line, content) in numbered_lines(text) {
        let record: AttributionRecord = serde_json::from_str(content).map_err(|e| Error::parse(origin, line, e))?;
        record.validate()?;
        if !seen.insert(record.id.clone()) {
            return Err(Error::DuplicateId { id: record.id, line });
        }
        out.push(record);
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Language metadata and score tables
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct LanguageInfo {
    pub code: String,
    pub script: String,
    pub subgrouping: String,
    pub in_pretraining: bool,
}

fn tsv_reader(text: &str, delimiter: u8) -> csv::Reader<&[u8]> {
    csv::ReaderBuilder::new()
        .delimiter(delimiter)
        .has_headers(true)
        .flexible(false)
        .from_reader(text.as_bytes())
}

fn check_header(rdr: &mut csv::Reader<&[u8]>, expected: &[&str], origin: &str) -> Result<()> {
    let header = rdr.headers().map_err(|e| Error::parse(origin, 1, e))?;
    if !header.iter().map(str::trim).eq(expected.iter().copied()) {
        return Err(Error::parse(
            origin,
            1,
            format!("expected header {:?}, found {:?}", expected, header),
        ));
    }
    Ok(())
}

fn record_line(rec: &csv::StringRecord) -> usize {
    rec.position().map(|p| p.line() as usize).unwrap_or(0)
}

pub fn load_language_metadata(path: impl AsRef<Path>) -> Result<Vec<LanguageInfo>> {
    let path = path.as_ref();
    parse_language_metadata_str(&read_file(path)?, &origin(path))
}

/// Parses `code<TAB>script<TAB>subgrouping<TAB>in_pretraining` rows.
pub fn parse_language_metadata_str(text: &str, origin: &str) -> Result<Vec<LanguageInfo>> {
    let mut rdr = tsv_reader(text, b'\t');
    check_header(&mut rdr, &["code", "script", "subgrouping", "in_pretraining"], origin)?;
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(origin, 0, e))?;
        let line = record_line(&rec);
        let in_pretraining = match rec[3].trim() {
            "1" | "true" => true,
            "0" | "false" => false,
            other => {
                return Err(Error::parse(
                    origin,
                    line,
                    format!("in_pretraining must be 0 or 1, found {other:?}"),
                ))
            }
        };
        let info = LanguageInfo {
            code: rec[0].trim().to_owned(),
            script: rec[1].trim().to_owned(),
            subgrouping: rec[2].trim().to_owned(),
            in_pretraining,
        };
        if !seen.insert((info.code.clone(), info.script.clone())) {
            return Err(Error::DuplicateLanguage {
                code: info.code,
                script: info.script,
            });
        }
        out.push(info);
    }
    Ok(out)
}

/// Key of one score: system, language and experimental condition.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct ScoreKey {
    pub system: String,
    pub code: String,
    pub script: String,
    pub condition: String,
}

impl fmt::Display for ScoreKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}/{}/{}", self.system, self.code, self.script, self.condition)
    }
}

/// Corpus-level chrF++ scores keyed by (system, language, condition),
/// kept in file order.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScoreTable {
    rows: Vec<(ScoreKey, f64)>,
    index: HashMap<ScoreKey, usize>,
}

impl ScoreTable {
    pub fn insert(&mut self, key: ScoreKey, score: f64) -> Result<()> {
        if !(0.0..=100.0).contains(&score) {
            return Err(Error::ScoreOutOfRange {
                key: key.to_string(),
                score,
            });
        }
        if self.index.contains_key(&key) {
            return Err(Error::invalid(format!("duplicate score for {key}")));
        }
        self.index.insert(key.clone(), self.rows.len());
        self.rows.push((key, score));
        Ok(())
    }

    pub fn get(&self, system: &str, code: &str, script: &str, condition: &str) -> Option<f64> {
        let key = ScoreKey {
            system: system.to_owned(),
            code: code.to_owned(),
            script: script.to_owned(),
            condition: condition.to_owned(),
        };
        self.index.get(&key).map(|&i| self.rows[i].1)
    }

    pub fn rows(&self) -> &[(ScoreKey, f64)] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    fn distinct<'a>(&'a self, f: impl Fn(&'a ScoreKey) -> &'a str) -> Vec<&'a str> {
        let mut seen = HashSet::new();
        self.rows
            .iter()
            .map(|(k, _)| f(k))
            .filter(|v| seen.insert(*v))
            .collect()
    }

    pub fn systems(&self) -> Vec<&str> {
        self.distinct(|k| &k.system)
    }

    pub fn conditions(&self) -> Vec<&str> {
        self.distinct(|k| &k.condition)
    }

    /// Distinct `(code, script)` pairs in order of first appearance.
    pub fn languages(&self) -> Vec<(&str, &str)> {
        let mut seen = HashSet::new();
        self.rows
            .iter()
            .map(|(k, _)| (k.code.as_str(), k.script.as_str()))
            .filter(|v| seen.insert(*v))
            .collect()
    }
}

pub fn load_score_table(path: impl AsRef<Path>) -> Result<ScoreTable> {
    let path = path.as_ref();
    parse_score_table_str(&read_file(path)?, &origin(path))
}

/// Parses `system,code,script,condition,chrfpp` rows.
pub fn parse_score_table_str(text: &str, origin: &str) -> Result<ScoreTable> {
    let mut rdr = tsv_reader(text, b',');
    check_header(&mut rdr, &["system", "code", "script", "condition", "chrfpp"], origin)?;
    let mut table = ScoreTable::default();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::parse(origin, 0, e))?;
        let line = record_line(&rec);
        let score: f64 = rec[4]
            .trim()
            .parse()
            .map_err(|e| Error::parse(origin, line, format!("bad score {:?}: {e}", &rec[4])))?;
        let key = ScoreKey {
            system: rec[0].trim().to_owned(),
            code: rec[1].trim().to_owned(),
            script: rec[2].trim().to_owned(),
            condition: rec[3].trim().to_owned(),
        };
        table.insert(key, score)?;
    }
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    const LINE: &str =
        r#"{"id": "s1", "src": "Ich studiere.", "ref": "I study.", "hyp": {"byt5": "I study.", "mt5": "I learn."}}"#;

    #[test]
    fn empty_corpus() {
        assert!(parse_corpus_str("", "t").unwrap().is_empty());
    }

    #[test]
    fn single_record() {
        let c = parse_corpus_str(LINE, "t").unwrap();
        assert_eq!(c.len(), 1);
        assert_eq!(c.records()[0].id, "s1");
        assert_eq!(c.systems(), ["byt5", "mt5"]);
        assert_eq!(c.get("s1").unwrap().reference, "I study.");
    }

    #[test]
    fn duplicate_id_names_second_line() {
        let text = format!("{LINE}\n{LINE}\n");
        match parse_corpus_str(&text, "t") {
            Err(Error::DuplicateId { id, line }) => {
                assert_eq!(id, "s1");
                assert_eq!(line, 2);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_reports_line_number() {
        let text = format!("{LINE}\n{{not json\n");
        match parse_corpus_str(&text, "t") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn inconsistent_systems_rejected() {
        let other = r#"{"id": "s2", "src": "a", "ref": "b", "hyp": {"byt5": "x"}}"#;
        let err = parse_corpus_str(&format!("{LINE}\n{other}"), "t").unwrap_err();
        assert!(err.to_string().contains("systems differ"), "{err}");
    }

    #[test]
    fn empty_reference_rejected() {
        let bad = r#"{"id": "s2", "src": "a", "ref": "", "hyp": {}}"#;
        assert!(parse_corpus_str(bad, "t").is_err());
    }

    #[test]
    fn alignment_lines() {
        let a = parse_alignment_line("0-1 2-0").unwrap();
        assert_eq!(a.links().iter().copied().collect::<Vec<_>>(), [(0, 1), (2, 0)]);
        assert_eq!(a, parse_alignment_line("2-0 0-1 0-1").unwrap());
        assert!(parse_alignment_line("").unwrap().is_empty());
        match parse_alignment_line("3-") {
            Err(Error::AlignmentToken { token }) => assert_eq!(token, "3-"),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse_alignment_line("a-1").is_err());
        assert!(parse_alignment_line("-1-2").is_err());
        assert_eq!(a.to_string(), "0-1 2-0");
    }

    #[test]
    fn alignment_file_with_empty_links() {
        let set = parse_alignments_str("s1\t0-0 1-1\ns2\t\ns3\n", "t").unwrap();
        assert_eq!(set.len(), 3);
        assert_eq!(set.require("s1").unwrap().len(), 2);
        assert!(set.require("s2").unwrap().is_empty());
        assert!(set.require("s4").is_err());
    }

    #[test]
    fn targets_of_source_word() {
        let a = Alignment::from_links([(0, 3), (1, 1), (1, 0), (2, 2)]);
        assert_eq!(a.targets_of(1).collect::<Vec<_>>(), [0, 1]);
        assert_eq!(a.targets_of(5).count(), 0);
    }

    fn attribution_line(steps: &str) -> String {
        format!(r#"{{"id": "a1", "source_bytes": [72, 105], "target_bytes": [104, 105, 0], "steps": {steps}}}"#)
    }

    #[test]
    fn attribution_accepts_valid_record() {
        let text = attribution_line(
            r#"[{"src": [1, 2], "tgt": []}, {"src": [1, 0], "tgt": [0.5]}, {"src": [0, 0], "tgt": [0.1, 0.2]}]"#,
        );
        let recs = parse_attributions_str(&text, "t").unwrap();
        assert_eq!(recs.len(), 1);
        assert_eq!(recs[0].text_bytes(), b"hi");
    }

    #[test]
    fn attribution_length_mismatch() {
        let text = attribution_line(r#"[{"src": [1, 2], "tgt": []}, {"src": [1, 0], "tgt": [0.5]}]"#);
        assert!(matches!(
            parse_attributions_str(&text, "t"),
            Err(Error::StepCountMismatch {
                steps: 2,
                target_bytes: 3,
                ..
            })
        ));
    }

    #[test]
    fn attribution_negative_norm() {
        let text = attribution_line(
            r#"[{"src": [-0.1, 2], "tgt": []}, {"src": [1, 0], "tgt": [0.5]}, {"src": [1, 0], "tgt": [0.1, 0.2]}]"#,
        );
        match parse_attributions_str(&text, "t") {
            Err(Error::InvalidStep { step, message, .. }) => {
                assert_eq!(step, 0);
                assert!(message.contains("negative"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn attribution_unknown_field() {
        let text = r#"{"id": "a1", "source_bytes": [], "target_bytes": [], "steps": [], "extra": 1}"#;
        let err = parse_attributions_str(text, "t").unwrap_err();
        assert!(err.to_string().contains("unknown field"), "{err}");
    }

    #[test]
    fn attribution_zero_step() {
        let text = attribution_line(
            r#"[{"src": [0, 0], "tgt": []}, {"src": [1, 0], "tgt": [0.5]}, {"src": [1, 0], "tgt": [0.1, 0.2]}]"#,
        );
        assert!(matches!(
            parse_attributions_str(&text, "t"),
            Err(Error::ZeroStep { step: 0, .. })
        ));
    }

    #[test]
    fn prompt_stripping() {
        let rec = AttributionRecord {
            id: "p".into(),
            source_bytes: b"T: ab".to_vec(),
            target_bytes: vec![b'x', 0],
            steps: vec![
                AttributionStep {
                    src_norms: vec![1.0, 1.0, 1.0, 2.0, 3.0],
                    tgt_norms: vec![],
                },
                AttributionStep {
                    src_norms: vec![0.0, 0.0, 0.0, 1.0, 1.0],
                    tgt_norms: vec![1.0],
                },
            ],
            prompt_len: Some(3),
        };
        rec.validate().unwrap();
        let stripped = rec.without_prompt();
        stripped.validate().unwrap();
        assert_eq!(stripped.source_bytes, b"ab");
        assert_eq!(stripped.steps[0].src_norms, [2.0, 3.0]);
    }

    #[test]
    fn language_metadata() {
        let text = "code\tscript\tsubgrouping\tin_pretraining\nace_Latn\tLatin\tMalayo-Polynesian\t0\nind_Latn\tLatin\tMalayo-Polynesian\t1\n";
        let langs = parse_language_metadata_str(text, "t").unwrap();
        assert_eq!(
            langs[0],
            LanguageInfo {
                code: "ace_Latn".into(),
                script: "Latin".into(),
                subgrouping: "Malayo-Polynesian".into(),
                in_pretraining: false,
            }
        );
        assert!(langs[1].in_pretraining);
    }

    #[test]
    fn language_metadata_duplicate() {
        let text = "code\tscript\tsubgrouping\tin_pretraining\ndeu\tLatin\tGermanic\t1\ndeu\tLatin\tGermanic\t1\n";
        assert!(matches!(
            parse_language_metadata_str(text, "t"),
            Err(Error::DuplicateLanguage { .. })
        ));
    }

    #[test]
    fn language_metadata_bad_header() {
        assert!(parse_language_metadata_str("a\tb\tc\td\n", "t").is_err());
    }

    #[test]
    fn score_table() {
        let text = "system,code,script,condition,chrfpp\nbyt5,deu_Latn,Latin,10k,55.7\nmt5,deu_Latn,Latin,10k,55.1\n";
        let t = parse_score_table_str(text, "t").unwrap();
        assert_eq!(t.get("byt5", "deu_Latn", "Latin", "10k"), Some(55.7));
        assert_eq!(t.systems(), ["byt5", "mt5"]);
        assert_eq!(t.languages(), [("deu_Latn", "Latin")]);
    }

    #[test]
    fn score_out_of_range() {
        let text = "system,code,script,condition,chrfpp\nbyt5,deu_Latn,Latin,10k,101\n";
        assert!(matches!(
            parse_score_table_str(text, "t"),
            Err(Error::ScoreOutOfRange { .. })
        ));
    }

    #[test]
    fn score_duplicate_key() {
        let text = "system,code,script,condition,chrfpp\nbyt5,deu_Latn,Latin,10k,50\nbyt5,deu_Latn,Latin,10k,51\n";
        assert!(parse_score_table_str(text, "t").is_err());
    }

    #[test]
    fn tags() {
        let t = parse_tags_str("s1\tNNP VBZ .\ns2\t\n", "t").unwrap();
        assert_eq!(t["s1"], ["NNP", "VBZ", "."]);
        assert!(t["s2"].is_empty());
    }
}
