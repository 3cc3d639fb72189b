use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::model::{QAPair, Split};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitRatios {
    pub train: f64,
    pub dev: f64,
    pub test: f64,
}

impl Default for SplitRatios {
    fn default() -> Self {
        Self {
            train: 0.7,
            dev: 0.2,
            test: 0.1,
        }
    }
}

impl SplitRatios {
    pub fn new(train: f64, dev: f64, test: f64) -> Result<Self> {
        let r = Self { train, dev, test };
        r.validate()?;
        Ok(r)
    }

    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.dev, self.test];
        if parts.iter().any(|x| !(0.0..=1.0).contains(x)) {
            return Err(Error::Config(format!("split ratios out of [0,1]: {parts:?}")));
        }
        let sum: f64 = parts.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::Config(format!("split ratios sum to {sum}, not 1")));
        }
        Ok(())
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.train, self.dev, self.test]
    }

    /// Bucket for a position in [0, 1). Zero-width buckets are never chosen.
    fn bucket(&self, position: f64) -> Split {
        let buckets = [
            (Split::Train, self.train),
            (Split::Dev, self.dev),
            (Split::Test, self.test),
        ];
        let mut upper = 0.0;
        let mut last = Split::Train;
        for (split, width) in buckets {
            if width <= 0.0 {
                continue;
            }
            upper += width;
            last = split;
            if position < upper {
                return split;
            }
        }
        last
    }
}

fn order_key(seed: u64, article_id: &str) -> [u8; 16] {
    let mut h = Sha256::new();
    h.update(seed.to_le_bytes());
    h.update(article_id.as_bytes());
    let digest = h.finalize();
    let mut key = [0u8; 16];
    key.copy_from_slice(&digest[..16]);
    key
}

/// Assigns splits at article granularity.
///
/// Articles are ordered by a seeded hash of their id and laid out along
/// [0, 1) in proportion to their pair counts; each article takes the split
/// whose ratio bucket contains its midpoint. The result does not depend on the
/// order of `pairs`.
pub fn split_dataset(pairs: &mut [QAPair], ratios: SplitRatios, seed: u64) -> Result<()> {
    ratios.validate()?;
    if let Some(p) = pairs.iter().find(|p| p.split != Split::Unassigned) {
        return Err(Error::invalid(format!(
            "pair {} already has split {}",
            p.id,
            p.split.as_str()
        )));
    }
    let mut per_article: BTreeMap<&str, usize> = BTreeMap::new();
    for p in pairs.iter() {
        *per_article.entry(p.article_id.as_str()).or_insert(0) += 1;
    }
    let mut order: Vec<([u8; 16], &str, usize)> = per_article
        .into_iter()
        .map(|(id, n)| (order_key(seed, id), id, n))
        .collect();
    order.sort();

    let total = pairs.len() as f64;
    let mut cumulative = 0usize;
    let mut assignment: BTreeMap<String, Split> = BTreeMap::new();
    for (_, id, n) in order {
        let midpoint = (cumulative as f64 + n as f64 / 2.0) / total;
        assignment.insert(id.to_string(), ratios.bucket(midpoint));
        cumulative += n;
    }
    for p in pairs.iter_mut() {
        p.split = assignment[&p.article_id];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pairs(articles: usize, per_article: usize) -> Vec<QAPair> {
        (0..articles)
            .flat_map(|a| {
                (0..per_article).map(move |q| QAPair {
                    id: format!("a{a}-{q}"),
                    article_id: format!("a{a}"),
                    question: "q?".into(),
                    context_paragraph_ids: vec![0],
                    silver_ids: [0].into_iter().collect(),
                    split: Split::Unassigned,
                })
            })
            .collect()
    }

    fn counts(p: &[QAPair]) -> [usize; 3] {
        let mut c = [0; 3];
        for x in p {
            match x.split {
                Split::Train => c[0] += 1,
                Split::Dev => c[1] += 1,
                Split::Test => c[2] += 1,
                Split::Unassigned => panic!("unassigned"),
            }
        }
        c
    }

    #[test]
    fn default_ratios_on_single_question_articles() {
        let mut p = pairs(1000, 1);
        split_dataset(&mut p, SplitRatios::default(), 1).unwrap();
        let [tr, dv, te] = counts(&p);
        assert!((680..=720).contains(&tr), "{tr}");
        assert!((180..=220).contains(&dv), "{dv}");
        assert!((80..=120).contains(&te), "{te}");
    }

    #[test]
    fn same_seed_same_assignment() {
        let mut a = pairs(200, 2);
        let mut b = pairs(200, 2);
        split_dataset(&mut a, SplitRatios::default(), 7).unwrap();
        split_dataset(&mut b, SplitRatios::default(), 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn input_order_irrelevant() {
        let mut a = pairs(100, 3);
        let mut b = a.clone();
        b.reverse();
        split_dataset(&mut a, SplitRatios::default(), 3).unwrap();
        split_dataset(&mut b, SplitRatios::default(), 3).unwrap();
        b.reverse();
        assert_eq!(a, b);
    }

    #[test]
    fn article_pairs_share_split() {
        let mut p = pairs(50, 4);
        split_dataset(&mut p, SplitRatios::default(), 9).unwrap();
        for chunk in p.chunks(4) {
            assert!(chunk.iter().all(|x| x.split == chunk[0].split));
        }
    }

    #[test]
    fn all_train() {
        let mut p = pairs(30, 1);
        split_dataset(&mut p, SplitRatios::new(1.0, 0.0, 0.0).unwrap(), 0).unwrap();
        assert_eq!(counts(&p), [30, 0, 0]);
    }

    #[test]
    fn invalid_ratios_rejected() {
        assert!(SplitRatios::new(0.5, 0.5, 0.5).is_err());
        assert!(SplitRatios::new(-0.1, 0.6, 0.5).is_err());
        let mut p = pairs(3, 1);
        let bad = SplitRatios {
            train: 0.9,
            dev: 0.2,
            test: 0.1,
        };
        assert!(matches!(split_dataset(&mut p, bad, 0), Err(Error::Config(_))));
    }

    #[test]
    fn refuses_already_assigned() {
        let mut p = pairs(3, 1);
        p[0].split = Split::Dev;
        assert!(split_dataset(&mut p, SplitRatios::default(), 0).is_err());
    }
}
