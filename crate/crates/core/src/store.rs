//! JSONL persistence and the on-disk corpus layout.

use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{Article, CorpusManifest, QAPair, Split};

/// Parses JSONL text; blank lines are skipped. `origin` names the source in errors.
pub fn parse_jsonl<T: DeserializeOwned>(src: &str, origin: &Path) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for (i, line) in src.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(line).map_err(|source| Error::Record {
            path: origin.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|source| Error::Record {
            path: path.to_path_buf(),
            line: i + 1,
            source,
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Writes records to a sibling temp file and renames it into place.
pub fn write_jsonl<'a, T, I>(path: &Path, records: I) -> Result<()>
where
    T: Serialize + 'a,
    I: IntoIterator<Item = &'a T>,
{
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let tmp = path.with_extension("jsonl.tmp");
    {
        let file = File::create(&tmp).map_err(|e| Error::io(&tmp, e))?;
        let mut w = BufWriter::new(file);
        for r in records {
            serde_json::to_writer(&mut w, r)?;
            w.write_all(b"\n").map_err(|e| Error::io(&tmp, e))?;
        }
        w.flush().map_err(|e| Error::io(&tmp, e))?;
    }
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

/// Appends one record as a single write so concurrent readers never see a
/// partial line.
pub fn append_jsonl<T: Serialize>(path: &Path, record: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let mut line = serde_json::to_vec(record)?;
    line.push(b'\n');
    let mut file = fs::OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(|e| Error::io(path, e))?;
    file.write_all(&line).map_err(|e| Error::io(path, e))
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    let body = serde_json::to_string_pretty(value)?;
    fs::write(path, body + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let src = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&src)?)
}

/// Directory layout of a corpus root.
///
/// ```text
/// pages/meta.jsonl            crawl metadata, one line per fetch
/// pages/bodies/<id>.html      raw bodies keyed by article id
/// articles/<lang>.jsonl
/// qa/<lang>.jsonl
/// instances/<lang>.<split>.jsonl
/// stopwords/<lang>.txt
/// models/tfidf-<lang>.json
/// models/lexical-<lang>.json
/// scores/<scorer>-<lang>.<split>.jsonl
/// manifest.json
/// ```
#[derive(Debug, Clone)]
pub struct CorpusLayout {
    pub root: PathBuf,
}

impl CorpusLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn pages_meta(&self) -> PathBuf {
        self.root.join("pages").join("meta.jsonl")
    }

    pub fn page_body(&self, id: &str) -> PathBuf {
        self.root.join("pages").join("bodies").join(format!("{id}.html"))
    }

    pub fn articles(&self, lang: &str) -> PathBuf {
        self.root.join("articles").join(format!("{lang}.jsonl"))
    }

    pub fn qa(&self, lang: &str) -> PathBuf {
        self.root.join("qa").join(format!("{lang}.jsonl"))
    }

    pub fn instances(&self, lang: &str, split: Split) -> PathBuf {
        self.root
            .join("instances")
            .join(format!("{lang}.{}.jsonl", split.as_str()))
    }

    pub fn stopwords(&self, lang: &str) -> PathBuf {
        self.root.join("stopwords").join(format!("{lang}.txt"))
    }

    pub fn tfidf_model(&self, lang: &str) -> PathBuf {
        self.root.join("models").join(format!("tfidf-{lang}.json"))
    }

    pub fn lexical_model(&self, lang: &str) -> PathBuf {
        self.root.join("models").join(format!("lexical-{lang}.json"))
    }

    pub fn scores(&self, scorer: &str, lang: &str, split: Split) -> PathBuf {
        self.root
            .join("scores")
            .join(format!("{scorer}-{lang}.{}.jsonl", split.as_str()))
    }

    pub fn manifest(&self) -> PathBuf {
        self.root.join("manifest.json")
    }

    /// Languages that have an articles file, sorted.
    pub fn article_languages(&self) -> Result<Vec<String>> {
        languages_in(&self.root.join("articles"))
    }

    /// Languages that have a QA file, sorted.
    pub fn qa_languages(&self) -> Result<Vec<String>> {
        languages_in(&self.root.join("qa"))
    }

    pub fn load_articles(&self, lang: &str) -> Result<Vec<Article>> {
        read_jsonl(&self.articles(lang))
    }

    /// Loads QA pairs, rejecting any record whose silver set is empty or
    /// escapes its context.
    pub fn load_pairs(&self, lang: &str) -> Result<Vec<QAPair>> {
        let pairs: Vec<QAPair> = read_jsonl(&self.qa(lang))?;
        for p in &pairs {
            p.validate()?;
        }
        Ok(pairs)
    }

    pub fn load_manifest(&self) -> Result<CorpusManifest> {
        read_json(&self.manifest())
    }
}

fn languages_in(dir: &Path) -> Result<Vec<String>> {
    if !dir.exists() {
        return Ok(Vec::new());
    }
    let mut langs: Vec<String> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok())
        .filter_map(|e| {
            let path = e.path();
            (path.extension()? == "jsonl")
                .then(|| path.file_stem()?.to_str().map(str::to_string))
                .flatten()
        })
        .collect();
    langs.sort();
    Ok(langs)
}
