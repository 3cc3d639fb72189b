//! Language profile registry.
//!
//! On disk a registry is a directory holding one `<code>.toml` document per
//! language, plus optional `<code>.exclusions.txt` and `<code>.stopwords.txt`
//! word lists (UTF-8, one entry per line, `#` starts a comment line).

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use crate::builtin_profiles::BUILTIN;
use crate::error::{Error, Result};
use crate::model::{normalize_text, LanguageProfile};

/// Parses a single profile document.
pub fn parse_profile(toml_src: &str) -> Result<LanguageProfile> {
    let mut profile: LanguageProfile =
        toml::from_str(toml_src).map_err(|e| Error::Config(e.to_string()))?;
    profile.exclusion_phrases = profile
        .exclusion_phrases
        .iter()
        .map(|p| normalize_text(p))
        .filter(|p| !p.is_empty())
        .collect();
    profile.validate()?;
    Ok(profile)
}

/// Parses a plain-text word or phrase list.
pub fn parse_word_list(src: &str) -> Vec<String> {
    src.lines()
        .map(normalize_text)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .collect()
}

#[derive(Debug, Clone, Default)]
pub struct ProfileRegistry {
    profiles: BTreeMap<String, LanguageProfile>,
}

impl ProfileRegistry {
    /// The shipped registry of 38 news languages.
    pub fn builtin() -> Self {
        let mut registry = Self::default();
        for (code, doc, exclusions) in BUILTIN {
            let mut profile = parse_profile(doc)
                .unwrap_or_else(|e| panic!("shipped profile `{code}` is invalid: {e}"));
            profile.exclusion_phrases.extend(parse_word_list(exclusions));
            registry.insert(profile);
        }
        registry
    }

    pub fn load_dir(dir: &Path) -> Result<Self> {
        let mut registry = Self::default();
        let entries = fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
        let mut paths: Vec<_> = entries
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "toml"))
            .collect();
        paths.sort();
        for path in paths {
            let src = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let mut profile = parse_profile(&src)
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
            let exclusions = dir.join(format!("{}.exclusions.txt", profile.code));
            if exclusions.exists() {
                let src = fs::read_to_string(&exclusions).map_err(|e| Error::io(&exclusions, e))?;
                profile.exclusion_phrases.extend(parse_word_list(&src));
            }
            let stopwords = dir.join(format!("{}.stopwords.txt", profile.code));
            if stopwords.exists() {
                let src = fs::read_to_string(&stopwords).map_err(|e| Error::io(&stopwords, e))?;
                profile.stopwords = parse_word_list(&src);
            }
            registry.insert(profile);
        }
        Ok(registry)
    }

    /// Writes the registry in the directory layout read by [`Self::load_dir`].
    pub fn write_dir(&self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for p in self.profiles.values() {
            let mut doc = p.clone();
            let exclusions = std::mem::take(&mut doc.exclusion_phrases);
            let stopwords = std::mem::take(&mut doc.stopwords);
            let body = toml::to_string(&doc).map_err(|e| Error::Config(e.to_string()))?;
            let path = dir.join(format!("{}.toml", p.code));
            fs::write(&path, body).map_err(|e| Error::io(&path, e))?;
            for (suffix, list) in [("exclusions", exclusions), ("stopwords", stopwords)] {
                if list.is_empty() {
                    continue;
                }
                let path = dir.join(format!("{}.{suffix}.txt", p.code));
                fs::write(&path, list.join("\n") + "\n").map_err(|e| Error::io(&path, e))?;
            }
        }
        Ok(())
    }

    pub fn insert(&mut self, profile: LanguageProfile) {
        self.profiles.insert(profile.code.clone(), profile);
    }

    pub fn get(&self, code: &str) -> Result<&LanguageProfile> {
        self.profiles
            .get(code)
            .ok_or_else(|| Error::UnknownLanguage(code.to_string()))
    }

    pub fn contains(&self, code: &str) -> bool {
        self.profiles.contains_key(code)
    }

    pub fn codes(&self) -> impl Iterator<Item = &str> {
        self.profiles.keys().map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.profiles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.profiles.is_empty()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_has_all_languages() {
        let reg = ProfileRegistry::builtin();
        assert_eq!(reg.len(), 38);
        for code in ["hi", "mr", "fa", "ps", "ar", "uk", "pcm", "en", "cy"] {
            assert!(reg.contains(code), "{code}");
        }
    }

    #[test]
    fn solar_hijri_offsets() {
        let reg = ProfileRegistry::builtin();
        assert_eq!(reg.get("fa").unwrap().calendar_offset_years, 621);
        assert_eq!(reg.get("ps").unwrap().calendar_offset_years, 621);
        assert_eq!(reg.get("hi").unwrap().calendar_offset_years, 0);
    }

    #[test]
    fn arabic_script_terminators() {
        let reg = ProfileRegistry::builtin();
        for code in ["ar", "fa", "ps", "ur"] {
            assert!(reg.get(code).unwrap().terminators.contains(&'\u{061F}'));
        }
    }

    #[test]
    fn marathi_lexicon_loaded() {
        let reg = ProfileRegistry::builtin();
        let mr = reg.get("mr").unwrap();
        assert!(mr.exclusion_phrases.contains(&normalize_text("हे वाचलंत का")));
        assert_eq!(mr.exclusion_phrases.len(), 4);
    }

    #[test]
    fn dir_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let reg = ProfileRegistry::builtin();
        reg.write_dir(dir.path()).unwrap();
        let back = ProfileRegistry::load_dir(dir.path()).unwrap();
        assert_eq!(back.len(), reg.len());
        for code in reg.codes() {
            assert_eq!(back.get(code).unwrap(), reg.get(code).unwrap());
        }
    }

    #[test]
    fn rejects_empty_terminators() {
        let err = parse_profile("code = \"xx\"\nterminators = []\n").unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn unknown_code_is_an_error() {
        assert!(matches!(
            ProfileRegistry::builtin().get("zz"),
            Err(Error::UnknownLanguage(_))
        ));
    }

    #[test]
    fn word_list_skips_comments() {
        assert_eq!(parse_word_list("# c\n a  b \n\nc\n"), vec!["a b", "c"]);
    }
}
