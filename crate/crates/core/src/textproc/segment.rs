use std::collections::BTreeMap;
use std::sync::Mutex;

use serde::{Deserialize, Serialize};
use unicode_general_category::{get_general_category, GeneralCategory};

use super::plugin::{PluginProcess, SENTENCE_SEPARATOR};
use crate::error::{Error, Result};
use crate::profiles::ProfileRegistry;

/// Sentence-final marks recognized by the rule segmenter for every language.
pub const DEFAULT_SENTENCE_TERMINATORS: &[char] = &[
    '.', '!', '?', '\u{0964}', '\u{0965}', '\u{061F}', '\u{06D4}', '\u{3002}', '\u{FF01}',
    '\u{FF1F}', '\u{1362}', '\u{1367}',
];

// Full-width marks end a sentence even without following whitespace.
const UNSPACED_TERMINATORS: &[char] = &['\u{3002}', '\u{FF01}', '\u{FF1F}'];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SegmenterSpec {
    pub id: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plugin_command: Option<Vec<String>>,
}

impl SegmenterSpec {
    pub fn rule() -> Self {
        Self {
            id: "rule".into(),
            plugin_command: None,
        }
    }
}

#[derive(Debug)]
pub struct Segmenter {
    terminators: Vec<char>,
    plugin: Option<Mutex<PluginProcess>>,
}

impl Segmenter {
    /// Rule segmenter over the default marks plus `extra` (a profile's
    /// interrogative terminators).
    pub fn rule(extra: &[char]) -> Self {
        let mut terminators = DEFAULT_SENTENCE_TERMINATORS.to_vec();
        for c in extra {
            if !terminators.contains(c) {
                terminators.push(*c);
            }
        }
        Self {
            terminators,
            plugin: None,
        }
    }

    pub fn from_spec(spec: &SegmenterSpec, extra: &[char]) -> Result<Self> {
        match &spec.plugin_command {
            None => Ok(Self::rule(extra)),
            Some(cmd) if cmd.is_empty() => Err(Error::Config(format!(
                "segmenter `{}` has an empty command",
                spec.id
            ))),
            Some(cmd) => Ok(Self {
                terminators: Vec::new(),
                plugin: Some(Mutex::new(PluginProcess::spawn(cmd)?)),
            }),
        }
    }

    pub fn segment(&self, text: &str) -> Result<Vec<String>> {
        match &self.plugin {
            None => Ok(self.segment_rule(text)),
            Some(proc) => {
                let mut proc = proc.lock().unwrap_or_else(|p| p.into_inner());
                let line = proc.request(text)?;
                Ok(line
                    .split(SENTENCE_SEPARATOR)
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(str::to_string)
                    .collect())
            }
        }
    }

    fn segment_rule(&self, text: &str) -> Vec<String> {
        let chars: Vec<(usize, char)> = text.char_indices().collect();
        let mut sentences = Vec::new();
        let mut start = 0;
        let mut i = 0;
        while i < chars.len() {
            let (_, c) = chars[i];
            if !self.terminators.contains(&c) {
                i += 1;
                continue;
            }
            // Absorb repeated marks and closing quotes/brackets.
            let mut j = i + 1;
            while j < chars.len()
                && (self.terminators.contains(&chars[j].1) || is_closer(chars[j].1))
            {
                j += 1;
            }
            let at_end = j == chars.len();
            let spaced = !at_end && chars[j].1.is_whitespace();
            if at_end || spaced || UNSPACED_TERMINATORS.contains(&c) {
                let end = if at_end { text.len() } else { chars[j].0 };
                push_trimmed(&mut sentences, &text[start..end]);
                start = end;
            }
            i = j;
        }
        push_trimmed(&mut sentences, &text[start..]);
        sentences
    }
}

/// Segmenters keyed by language, with a rule segmenter as fallback.
#[derive(Debug)]
pub struct SegmenterSet {
    fallback: Segmenter,
    by_language: BTreeMap<String, Segmenter>,
}

impl SegmenterSet {
    /// Rule segmenters that also split on each profile's terminators.
    pub fn from_registry(registry: &ProfileRegistry) -> Self {
        let by_language = registry
            .codes()
            .filter_map(|code| {
                let profile = registry.get(code).ok()?;
                Some((code.to_string(), Segmenter::rule(&profile.terminators)))
            })
            .collect();
        Self {
            fallback: Segmenter::rule(&[]),
            by_language,
        }
    }

    pub fn insert(&mut self, language: &str, segmenter: Segmenter) {
        self.by_language.insert(language.to_string(), segmenter);
    }

    pub fn get(&self, language: &str) -> &Segmenter {
        self.by_language.get(language).unwrap_or(&self.fallback)
    }
}

impl Default for SegmenterSet {
    fn default() -> Self {
        Self {
            fallback: Segmenter::rule(&[]),
            by_language: BTreeMap::new(),
        }
    }
}

fn is_closer(c: char) -> bool {
    c == '"'
        || c == '\''
        || matches!(
            get_general_category(c),
            GeneralCategory::ClosePunctuation | GeneralCategory::FinalPunctuation
        )
}

fn push_trimmed(out: &mut Vec<String>, s: &str) {
    let s = s.trim();
    if !s.is_empty() {
        out.push(s.to_string());
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn splits_after_terminal_punctuation() {
        let s = Segmenter::rule(&[]);
        assert_eq!(s.segment("A b. C d?").unwrap(), vec!["A b.", "C d?"]);
    }

    #[test]
    fn no_terminal_punctuation_is_one_sentence() {
        let s = Segmenter::rule(&[]);
        assert_eq!(s.segment("just words here").unwrap(), vec!["just words here"]);
        assert!(s.segment("").unwrap().is_empty());
    }

    #[test]
    fn hindi_danda() {
        let s = Segmenter::rule(&['?']);
        let text = "भारत एक देश है। दिल्ली राजधानी है। क्या यह सच है?";
        assert_eq!(
            s.segment(text).unwrap(),
            vec!["भारत एक देश है।", "दिल्ली राजधानी है।", "क्या यह सच है?"]
        );
    }

    #[test]
    fn decimal_point_does_not_split() {
        let s = Segmenter::rule(&[]);
        assert_eq!(s.segment("It rose 3.5 percent. Then fell.").unwrap().len(), 2);
    }

    #[test]
    fn closing_quote_stays_with_sentence() {
        let s = Segmenter::rule(&[]);
        assert_eq!(
            s.segment("He said \"no.\" She left.").unwrap(),
            vec!["He said \"no.\"", "She left."]
        );
    }

    #[test]
    fn cjk_full_stop_without_space() {
        let s = Segmenter::rule(&[]);
        assert_eq!(s.segment("今天下雨。明天晴。").unwrap(), vec!["今天下雨。", "明天晴。"]);
    }

    #[test]
    fn plugin_segmenter_splits_on_unit_separator() {
        let spec = SegmenterSpec {
            id: "ext".into(),
            plugin_command: Some(vec![
                "sh".into(),
                "-c".into(),
                "while IFS= read -r l; do printf 'one\\037two\\n'; done".into(),
            ]),
        };
        let s = Segmenter::from_spec(&spec, &[]).unwrap();
        assert_eq!(s.segment("anything").unwrap(), vec!["one", "two"]);
    }
}
