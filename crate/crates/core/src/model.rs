//! Core corpus records: language profiles, articles, QA pairs and the manifest.
//!
//! Every text field stored in these records has passed through
//! [`normalize_text`]. Paragraph indices used by [`QAPair`] are ordinals among
//! the article's paragraph blocks (subheadings are not counted).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// NFC composition, whitespace runs collapsed to one ASCII space, trimmed.
pub fn normalize_text(raw: &str) -> String {
    let mut out = String::with_capacity(raw.len());
    let mut pending_space = false;
    for c in raw.nfc() {
        if c.is_whitespace() {
            pending_space = !out.is_empty();
        } else {
            if pending_space {
                out.push(' ');
                pending_space = false;
            }
            out.push(c);
        }
    }
    out
}

/// Canonical form of a URL used for identity: parsed, fragment dropped.
/// Unparseable input falls back to the trimmed string.
pub fn canonical_url(raw: &str) -> String {
    match url::Url::parse(raw.trim()) {
        Ok(mut u) => {
            u.set_fragment(None);
            u.to_string()
        }
        Err(_) => raw.trim().to_string(),
    }
}

/// Lowercase hex of the first 128 bits of SHA-256 over the canonical URL.
pub fn article_id_for_url(url: &str) -> String {
    let digest = Sha256::digest(canonical_url(url).as_bytes());
    hex::encode(&digest[..16])
}

fn default_tokenizer_id() -> String {
    "whitespace".into()
}

fn default_segmenter_id() -> String {
    "rule".into()
}

/// CSS selectors describing where blocks live in a site's article template.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionSelectors {
    pub title: String,
    pub body: String,
    pub subheading: String,
    pub paragraph: String,
    pub date: String,
}

impl Default for ExtractionSelectors {
    fn default() -> Self {
        Self {
            title: "h1".into(),
            body: "article, main, body".into(),
            subheading: "h2, h3".into(),
            paragraph: "p".into(),
            date: "time".into(),
        }
    }
}

/// Per-language curation configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LanguageProfile {
    pub code: String,
    #[serde(default)]
    pub name: String,
    pub terminators: Vec<char>,
    #[serde(default)]
    pub exclusion_phrases: Vec<String>,
    #[serde(default)]
    pub stopwords: Vec<String>,
    #[serde(default = "default_tokenizer_id")]
    pub tokenizer_id: String,
    #[serde(default = "default_segmenter_id")]
    pub segmenter_id: String,
    #[serde(default)]
    pub calendar_offset_years: u32,
    #[serde(default)]
    pub selectors: ExtractionSelectors,
}

impl LanguageProfile {
    /// A profile with `?` as the only terminator and nothing else configured.
    pub fn basic(code: &str) -> Self {
        Self {
            code: code.to_string(),
            name: String::new(),
            terminators: vec!['?'],
            exclusion_phrases: Vec::new(),
            stopwords: Vec::new(),
            tokenizer_id: default_tokenizer_id(),
            segmenter_id: default_segmenter_id(),
            calendar_offset_years: 0,
            selectors: ExtractionSelectors::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.code.trim().is_empty() {
            return Err(Error::Config("language profile with empty code".into()));
        }
        if self.terminators.is_empty() {
            return Err(Error::Config(format!(
                "profile `{}` has no interrogative terminators",
                self.code
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BlockKind {
    Paragraph,
    Subheading,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Block {
    pub kind: BlockKind,
    pub text: String,
    pub index: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub url: String,
    pub title: String,
    pub language: String,
    pub fetched_at: DateTime<Utc>,
    /// Publication year in the Gregorian calendar, when the page exposed one.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub published_year: Option<i32>,
    pub blocks: Vec<Block>,
}

impl Article {
    /// Paragraph texts in document order; position in the returned vector is
    /// the paragraph index.
    pub fn paragraphs(&self) -> Vec<&str> {
        self.blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Paragraph)
            .map(|b| b.text.as_str())
            .collect()
    }

    /// Number of paragraph blocks (`p`).
    pub fn paragraph_count(&self) -> usize {
        self.blocks
            .iter()
            .filter(|b| b.kind == BlockKind::Paragraph)
            .count()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    EmptyBlock { index: usize },
    DuplicateIndex { index: usize },
    NonContiguousIndices,
    UnorderedBlocks,
    UnknownLanguage { code: String },
    IdMismatch { expected: String },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::EmptyBlock { index } => write!(f, "empty block at index {index}"),
            Violation::DuplicateIndex { index } => write!(f, "duplicate index {index}"),
            Violation::NonContiguousIndices => write!(f, "block indices are not 0..n"),
            Violation::UnorderedBlocks => write!(f, "blocks not ordered by index"),
            Violation::UnknownLanguage { code } => write!(f, "unknown language `{code}`"),
            Violation::IdMismatch { expected } => {
                write!(f, "article id does not match url hash (expected {expected})")
            }
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks block structure and language membership. `known_language` answers
/// whether a code is present in the profile registry.
pub fn validate_article(a: &Article, known_language: impl Fn(&str) -> bool) -> ValidationReport {
    let mut violations = Vec::new();
    let mut seen = BTreeSet::new();
    for b in &a.blocks {
        if normalize_text(&b.text).is_empty() {
            violations.push(Violation::EmptyBlock { index: b.index });
        }
        if !seen.insert(b.index) {
            violations.push(Violation::DuplicateIndex { index: b.index });
        }
    }
    let has_duplicates = violations
        .iter()
        .any(|v| matches!(v, Violation::DuplicateIndex { .. }));
    if !has_duplicates {
        let contiguous = seen.iter().copied().eq(0..a.blocks.len());
        if !contiguous {
            violations.push(Violation::NonContiguousIndices);
        }
        if a.blocks.windows(2).any(|w| w[0].index > w[1].index) {
            violations.push(Violation::UnorderedBlocks);
        }
    }
    if !known_language(&a.language) {
        violations.push(Violation::UnknownLanguage {
            code: a.language.clone(),
        });
    }
    let expected = article_id_for_url(&a.url);
    if a.id != expected {
        violations.push(Violation::IdMismatch { expected });
    }
    ValidationReport { violations }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Dev,
    Test,
    #[default]
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Dev => "dev",
            Split::Test => "test",
            Split::Unassigned => "unassigned",
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "dev" => Ok(Split::Dev),
            "test" => Ok(Split::Test),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(Error::Config(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QAPair {
    pub id: String,
    pub article_id: String,
    pub question: String,
    pub context_paragraph_ids: Vec<usize>,
    pub silver_ids: BTreeSet<usize>,
    #[serde(default)]
    pub split: Split,
}

impl QAPair {
    /// Enforces the silver ⊆ context, non-empty silver invariant.
    pub fn validate(&self) -> Result<()> {
        if self.silver_ids.is_empty() {
            return Err(Error::InvalidRecord(format!(
                "qa pair {} has an empty silver set",
                self.id
            )));
        }
        let context: BTreeSet<usize> = self.context_paragraph_ids.iter().copied().collect();
        if let Some(stray) = self.silver_ids.iter().find(|i| !context.contains(i)) {
            return Err(Error::InvalidRecord(format!(
                "qa pair {}: silver paragraph {stray} is not in the context",
                self.id
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LanguageCounts {
    pub articles: usize,
    pub qa_pairs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub languages: BTreeMap<String, LanguageCounts>,
    pub article_count: usize,
    pub qa_count: usize,
    pub split_counts: BTreeMap<String, usize>,
    pub ratios: [f64; 3],
    pub seed: u64,
}

impl CorpusManifest {
    pub fn from_records(articles: &[Article], pairs: &[QAPair], ratios: [f64; 3], seed: u64) -> Self {
        let mut languages: BTreeMap<String, LanguageCounts> = BTreeMap::new();
        let mut lang_of = BTreeMap::new();
        for a in articles {
            languages.entry(a.language.clone()).or_default().articles += 1;
            lang_of.insert(a.id.as_str(), a.language.as_str());
        }
        let mut split_counts = BTreeMap::new();
        for p in pairs {
            if let Some(lang) = lang_of.get(p.article_id.as_str()) {
                languages.entry(lang.to_string()).or_default().qa_pairs += 1;
            }
            *split_counts.entry(p.split.as_str().to_string()).or_insert(0) += 1;
        }
        Self {
            languages,
            article_count: articles.len(),
            qa_count: pairs.len(),
            split_counts,
            ratios,
            seed,
        }
    }

    /// True when the manifest counts agree with the given records.
    pub fn is_consistent_with(&self, articles: &[Article], pairs: &[QAPair]) -> bool {
        let fresh = Self::from_records(articles, pairs, self.ratios, self.seed);
        fresh == *self
    }
}
