//! The shared run configuration, read from one TOML document.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Deserialize;
use silverqa_core::curation::SplitRatios;
use silverqa_core::eval::ReductionPolicy;
use silverqa_core::instances::InstanceOptions;
use silverqa_core::scorers::{LossConfig, LossKind, TrainHyper};
use silverqa_ingest::CrawlConfig;

/// ```toml
/// corpus = "data/corpus"
/// profiles = "profiles"        # omit for the built-in registry
/// seed = 7
/// ratios = [0.7, 0.2, 0.1]
/// threshold = "default"        # or a number
///
/// [instances]
/// token_budget = 512
///
/// [scorer]
/// kind = "tfidf"
///
/// [crawl]
/// language = "sw"
/// seed_urls = ["https://example.org/"]
/// ```
#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub corpus: Option<PathBuf>,
    pub profiles: Option<PathBuf>,
    pub seed: Option<u64>,
    pub ratios: Option<[f64; 3]>,
    pub jobs: Option<usize>,
    pub languages: Vec<String>,
    pub threshold: Option<Threshold>,
    pub instances: InstanceOptions,
    pub crawl: Option<CrawlSection>,
    pub scorer: ScorerSection,
    pub sweep: SweepSection,
    pub train: TrainSection,
    pub reduce: Option<ReductionPolicy>,
    pub serve: ServeSection,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Threshold {
    Default,
    Value(f64),
}

impl Threshold {
    pub fn parse(s: &str) -> Result<Self, String> {
        match s.trim() {
            "default" => Ok(Threshold::Default),
            other => other
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .map(Threshold::Value)
                .ok_or_else(|| format!("threshold must be `default` or a number, got `{other}`")),
        }
    }

    pub fn value(self) -> Option<f64> {
        match self {
            Threshold::Default => None,
            Threshold::Value(v) => Some(v),
        }
    }
}

impl<'de> Deserialize<'de> for Threshold {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(v) => Ok(Threshold::Value(v)),
            Raw::Text(s) => Threshold::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
pub struct CrawlSection {
    pub language: Option<String>,
    #[serde(flatten)]
    pub config: CrawlConfig,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScorerSection {
    pub kind: Option<String>,
    /// Seed of the random baseline; falls back to the top-level seed.
    pub seed: Option<u64>,
    pub embeddings: Option<PathBuf>,
    pub command: Option<Vec<String>>,
    pub tcp: Option<String>,
    pub timeout_ms: Option<u64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepSection {
    pub steps: usize,
}

impl Default for SweepSection {
    fn default() -> Self {
        Self { steps: 20 }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSection {
    pub loss: Option<LossKind>,
    pub gamma: Option<f64>,
    pub alpha: Option<[f64; 2]>,
    pub learning_rate: Option<f64>,
    pub steps: Option<usize>,
    pub batch_size: Option<usize>,
    pub seed: Option<u64>,
}

impl TrainSection {
    pub fn loss_config(&self) -> LossConfig {
        let base = LossConfig::default();
        let kind = self.loss.unwrap_or(base.kind);
        LossConfig {
            kind,
            gamma: match kind {
                LossKind::WeightedBce => 0.0,
                LossKind::WeightedFocal => self.gamma.unwrap_or(base.gamma),
            },
            alpha: self.alpha,
        }
    }

    pub fn hyper(&self, fallback_seed: u64) -> TrainHyper {
        let d = TrainHyper::default();
        TrainHyper {
            learning_rate: self.learning_rate.unwrap_or(d.learning_rate),
            steps: self.steps.unwrap_or(d.steps),
            batch_size: self.batch_size.unwrap_or(d.batch_size),
            seed: self.seed.unwrap_or(fallback_seed),
        }
    }
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ServeSection {
    pub bind: Option<String>,
    pub gold_dir: Option<PathBuf>,
    pub static_dir: Option<PathBuf>,
    pub annotators_per_task: Option<usize>,
}

impl RunConfig {
    /// Reads a config file; relative paths inside it are taken relative to
    /// the file's directory.
    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let src = std::fs::read_to_string(path)
            .with_context(|| format!("cannot read config {}", path.display()))?;
        let mut cfg: RunConfig =
            toml::from_str(&src).with_context(|| format!("invalid config {}", path.display()))?;
        let base = path.parent().unwrap_or(Path::new(""));
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(inner) = p.as_mut() {
                if inner.is_relative() {
                    *inner = base.join(&*inner);
                }
            }
        };
        fix(&mut cfg.corpus);
        fix(&mut cfg.profiles);
        fix(&mut cfg.scorer.embeddings);
        fix(&mut cfg.serve.gold_dir);
        fix(&mut cfg.serve.static_dir);
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> anyhow::Result<()> {
        self.split_ratios()?;
        self.instances.validate()?;
        self.train.loss_config().validate()?;
        if let Some(c) = &self.crawl {
            c.config.validate()?;
        }
        Ok(())
    }

    pub fn split_ratios(&self) -> anyhow::Result<SplitRatios> {
        let [train, dev, test] = self.ratios.unwrap_or([0.7, 0.2, 0.1]);
        Ok(SplitRatios::new(train, dev, test)?)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_document_parses() {
        let src = r#"
            corpus = "c"
            seed = 7
            ratios = [0.8, 0.1, 0.1]
            threshold = 0.25
            [instances]
            token_budget = 256
            include_title = true
            [scorer]
            kind = "external"
            command = ["python3", "score.py"]
            [crawl]
            language = "sw"
            seed_urls = ["https://a.example/"]
            min_delay_ms = 2000
            [train]
            loss = "weighted_bce"
            steps = 50
            [serve]
            bind = "127.0.0.1:9000"
            [reduce]
            policy = "top_k"
            value = 3
        "#;
        let cfg: RunConfig = toml::from_str(src).unwrap();
        cfg.validate().unwrap();
        assert_eq!(cfg.threshold, Some(Threshold::Value(0.25)));
        assert_eq!(cfg.instances.token_budget, 256);
        assert_eq!(cfg.crawl.as_ref().unwrap().config.min_delay_ms, 2000);
        assert_eq!(cfg.train.loss_config().gamma, 0.0);
        assert_eq!(cfg.reduce, Some(ReductionPolicy::TopK(3)));
    }

    #[test]
    fn threshold_words() {
        assert_eq!(Threshold::parse("default"), Ok(Threshold::Default));
        assert_eq!(Threshold::parse("0.5"), Ok(Threshold::Value(0.5)));
        assert!(Threshold::parse("half").is_err());
        assert!(Threshold::parse("NaN").is_err());
    }

    #[test]
    fn unknown_keys_and_bad_ratios_rejected() {
        assert!(toml::from_str::<RunConfig>("corpsu = \"x\"").is_err());
        let cfg: RunConfig = toml::from_str("ratios = [0.5, 0.5, 0.5]").unwrap();
        assert!(cfg.validate().is_err());
    }
}
