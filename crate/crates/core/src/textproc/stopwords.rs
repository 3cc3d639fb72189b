use std::collections::{BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use super::{fold_case, trim_punct, Tokenizer};
use crate::error::{Error, Result};
use crate::model::LanguageProfile;

/// Size of a frequency-derived stopword list.
pub const STOPWORD_LIMIT: usize = 260;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopwordSource {
    Provided,
    Top260Derived,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StopwordList {
    pub language: String,
    pub words: Vec<String>,
    pub source: StopwordSource,
}

impl StopwordList {
    /// Case-folded lookup set.
    pub fn to_set(&self) -> BTreeSet<String> {
        self.words.iter().map(|w| fold_case(w)).collect()
    }
}

/// The profile's shipped list if it has one, otherwise the most frequent
/// folded, punctuation-trimmed tokens (count desc, then codepoint order).
pub fn derive_stopwords<'a, I>(
    texts: I,
    profile: &LanguageProfile,
    tokenizer: &Tokenizer,
) -> Result<StopwordList>
where
    I: IntoIterator<Item = &'a str>,
{
    if !profile.stopwords.is_empty() {
        return Ok(StopwordList {
            language: profile.code.clone(),
            words: profile.stopwords.clone(),
            source: StopwordSource::Provided,
        });
    }
    let mut counts: HashMap<String, u64> = HashMap::new();
    for text in texts {
        for token in tokenizer.tokenize(text)? {
            let key = fold_case(trim_punct(&token));
            if !key.is_empty() {
                *counts.entry(key).or_insert(0) += 1;
            }
        }
    }
    if counts.is_empty() {
        return Err(Error::invalid(format!(
            "no tokens to derive stopwords for `{}` and no list provided",
            profile.code
        )));
    }
    let mut ranked: Vec<(String, u64)> = counts.into_iter().collect();
    ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    ranked.truncate(STOPWORD_LIMIT);
    Ok(StopwordList {
        language: profile.code.clone(),
        words: ranked.into_iter().map(|(w, _)| w).collect(),
        source: StopwordSource::Top260Derived,
    })
}

/// Drops pure-punctuation tokens and stopwords; survivors are returned
/// case-folded with edge punctuation trimmed.
pub fn strip_punct_and_stopwords<S: AsRef<str>>(
    tokens: &[S],
    stopwords: &BTreeSet<String>,
) -> Vec<String> {
    tokens
        .iter()
        .filter_map(|t| {
            let key = fold_case(trim_punct(t.as_ref()));
            (!key.is_empty() && !stopwords.contains(&key)).then_some(key)
        })
        .collect()
}
