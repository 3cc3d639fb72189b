//! Tokenization, sentence segmentation and stopword handling.

mod plugin;
mod segment;
mod stopwords;

use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use crate::error::{Error, Result};

pub use plugin::{PluginProcess, SENTENCE_SEPARATOR};
pub use segment::{Segmenter, SegmenterSet, SegmenterSpec, DEFAULT_SENTENCE_TERMINATORS};
pub use stopwords::{
    derive_stopwords, strip_punct_and_stopwords, StopwordList, StopwordSource, STOPWORD_LIMIT,
};

/// True for Unicode punctuation (P*) and symbol (S*) categories.
pub fn is_punct_or_symbol(c: char) -> bool {
    use GeneralCategory::*;
    matches!(
        get_general_category(c),
        ConnectorPunctuation
            | DashPunctuation
            | OpenPunctuation
            | ClosePunctuation
            | InitialPunctuation
            | FinalPunctuation
            | OtherPunctuation
            | MathSymbol
            | CurrencySymbol
            | ModifierSymbol
            | OtherSymbol
    )
}

/// Strips leading and trailing punctuation/symbol characters.
pub fn trim_punct(token: &str) -> &str {
    token.trim_matches(is_punct_or_symbol)
}

/// Context-free lowercase mapping; final sigma folds to σ.
pub fn fold_case(s: &str) -> String {
    s.chars()
        .flat_map(char::to_lowercase)
        .map(|c| if c == 'ς' { 'σ' } else { c })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TokenizerKind {
    Whitespace,
    Plugin,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TokenizerSpec {
    pub id: String,
    pub kind: TokenizerKind,
    /// Program followed by its arguments.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plugin_command: Option<Vec<String>>,
}

impl TokenizerSpec {
    pub fn whitespace() -> Self {
        Self {
            id: "whitespace".into(),
            kind: TokenizerKind::Whitespace,
            plugin_command: None,
        }
    }

    pub fn plugin(id: &str, command: Vec<String>) -> Self {
        Self {
            id: id.into(),
            kind: TokenizerKind::Plugin,
            plugin_command: Some(command),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == TokenizerKind::Plugin
            && self.plugin_command.as_ref().is_none_or(|c| c.is_empty())
        {
            return Err(Error::Config(format!(
                "plugin tokenizer `{}` has no command",
                self.id
            )));
        }
        Ok(())
    }
}

impl Default for TokenizerSpec {
    fn default() -> Self {
        Self::whitespace()
    }
}

/// A ready-to-use tokenizer. Plugin tokenizers own one child process and
/// serialize requests to it.
#[derive(Debug)]
pub struct Tokenizer {
    spec: TokenizerSpec,
    plugin: Option<Mutex<PluginProcess>>,
}

impl Tokenizer {
    pub fn whitespace() -> Self {
        Self {
            spec: TokenizerSpec::whitespace(),
            plugin: None,
        }
    }

    pub fn from_spec(spec: &TokenizerSpec) -> Result<Self> {
        spec.validate()?;
        let plugin = match spec.kind {
            TokenizerKind::Whitespace => None,
            TokenizerKind::Plugin => {
                let cmd = spec.plugin_command.as_deref().unwrap_or_default();
                Some(Mutex::new(PluginProcess::spawn(cmd)?))
            }
        };
        Ok(Self {
            spec: spec.clone(),
            plugin,
        })
    }

    pub fn spec(&self) -> &TokenizerSpec {
        &self.spec
    }

    pub fn tokenize(&self, text: &str) -> Result<Vec<String>> {
        match &self.plugin {
            None => Ok(text.split_whitespace().map(str::to_string).collect()),
            Some(proc) => {
                let mut proc = proc.lock().unwrap_or_else(|p| p.into_inner());
                let line = proc.request(text)?;
                Ok(line
                    .split('\t')
                    .filter(|t| !t.is_empty())
                    .map(str::to_string)
                    .collect())
            }
        }
    }

    /// Token count, the unit used by instance budgets and statistics.
    pub fn count(&self, text: &str) -> Result<usize> {
        match &self.plugin {
            None => Ok(text.split_whitespace().count()),
            Some(_) => Ok(self.tokenize(text)?.len()),
        }
    }
}

impl Default for Tokenizer {
    fn default() -> Self {
        Self::whitespace()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn whitespace_split_keeps_punctuation() {
        let t = Tokenizer::whitespace();
        assert_eq!(
            t.tokenize("What is the situation?").unwrap(),
            vec!["What", "is", "the", "situation?"]
        );
        assert!(t.tokenize("").unwrap().is_empty());
    }

    #[test]
    fn punct_and_symbol_categories() {
        for c in ['?', '—', '।', '؟', '«', '$', '+', '©', '。'] {
            assert!(is_punct_or_symbol(c), "{c:?}");
        }
        for c in ['a', 'ब', '7', ' ', '\u{093F}'] {
            assert!(!is_punct_or_symbol(c), "{c:?}");
        }
    }

    #[test]
    fn case_folding() {
        assert_eq!(fold_case("ΟΔΟΣ"), "οδοσ");
        assert_eq!(fold_case("οδος"), "οδοσ");
        assert_eq!(fold_case("What"), "what");
    }

    #[test]
    fn plugin_spec_requires_command() {
        let spec = TokenizerSpec {
            id: "zh".into(),
            kind: TokenizerKind::Plugin,
            plugin_command: None,
        };
        assert!(spec.validate().is_err());
    }

    #[test]
    fn plugin_tokens_pass_through_verbatim() {
        let spec = TokenizerSpec::plugin(
            "zh",
            vec![
                "sh".into(),
                "-c".into(),
                "while IFS= read -r l; do printf '我\\t爱\\t北京\\n'; done".into(),
            ],
        );
        let t = Tokenizer::from_spec(&spec).unwrap();
        assert_eq!(t.tokenize("我爱北京").unwrap(), vec!["我", "爱", "北京"]);
        assert_eq!(t.count("我爱北京").unwrap(), 3);
    }

    #[test]
    fn plugin_failure_names_command() {
        let spec = TokenizerSpec::plugin(
            "bad",
            vec!["sh".into(), "-c".into(), "read -r l; exit 3".into()],
        );
        let t = Tokenizer::from_spec(&spec).unwrap();
        match t.tokenize("x") {
            Err(Error::Plugin { command, detail }) => {
                assert!(command.contains("sh"));
                assert!(detail.contains('3'), "{detail}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }
}
