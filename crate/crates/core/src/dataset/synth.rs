//! Synthetic flow records with the UNSW-NB15 layout.
//!
//! Each class draws its numeric features from log-normal distributions around
//! class-specific centres and its categorical features from class-specific
//! vocabularies. The result exercises every stage of the pipeline (heavy
//! tails, unseen categories, class imbalance) without the real capture files.

use rand::distributions::WeightedIndex;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rand_distr::Normal;

use crate::dataset::raw::{Column, RawLabels, RawTable};
use crate::dataset::schema::{AttackCategory, FeatureKind, FeatureSchema, NUM_CLASSES};
use crate::error::Result;

/// Class proportions of the official training file.
pub const UNSW_TRAIN_MIX: [f64; NUM_CLASSES] = [
    56_000.0, 2_000.0, 1_746.0, 12_264.0, 33_393.0, 18_184.0, 40_000.0, 10_491.0, 1_133.0, 130.0,
];

const PROTOS: [&str; 6] = ["tcp", "udp", "unas", "arp", "ospf", "sctp"];
const SERVICES: [&str; 6] = ["-", "http", "dns", "ftp", "smtp", "ftp-data"];
const STATES: [&str; 5] = ["FIN", "INT", "CON", "REQ", "RST"];

#[derive(Clone, Debug)]
pub struct SynthConfig {
    pub rows: usize,
    /// Relative class frequencies, Normal first.
    pub class_mix: [f64; NUM_CLASSES],
    /// Every class present in the mix gets at least this many rows.
    pub min_per_class: usize,
    /// Spread of class centres relative to the per-record noise.
    pub separation: f64,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            rows: 2_000,
            class_mix: UNSW_TRAIN_MIX,
            min_per_class: 4,
            separation: 1.5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn balanced_binary(rows: usize, seed: u64) -> Self {
        let mut mix = [0.0; NUM_CLASSES];
        mix[0] = 1.0;
        mix[AttackCategory::Generic.index()] = 1.0;
        Self {
            rows,
            class_mix: mix,
            seed,
            ..Default::default()
        }
    }

    fn class_counts(&self) -> Vec<usize> {
        let total: f64 = self.class_mix.iter().sum();
        let mut counts: Vec<usize> = self
            .class_mix
            .iter()
            .map(|&p| {
                if p > 0.0 {
                    ((self.rows as f64 * p / total).round() as usize).max(self.min_per_class)
                } else {
                    0
                }
            })
            .collect();
        // absorb rounding in the largest class
        let sum: usize = counts.iter().sum();
        let (big, _) = counts
            .iter()
            .enumerate()
            .max_by_key(|(_, &c)| c)
            .expect("non-empty mix");
        if sum > self.rows {
            counts[big] = counts[big]
                .saturating_sub(sum - self.rows)
                .max(self.min_per_class);
        } else {
            counts[big] += self.rows - sum;
        }
        counts
    }
}

/// Class-conditional generator parameters, derived from the seed.
struct Profile {
    /// `[class][feature]` log-scale centres for numeric features.
    centres: Vec<Vec<f64>>,
    /// `[class][categorical feature]` weights over that feature's vocabulary.
    cat_weights: Vec<Vec<Vec<f64>>>,
}

impl Profile {
    fn new(schema: &FeatureSchema, separation: f64, rng: &mut ChaCha8Rng) -> Self {
        let unit = Normal::new(0.0, 1.0).expect("valid normal");
        let base: Vec<f64> = schema
            .features
            .iter()
            .map(|_| rng.gen_range(0.0..8.0))
            .collect();
        let centres = (0..NUM_CLASSES)
            .map(|_| {
                base.iter()
                    .map(|b| b + separation * unit.sample(rng))
                    .collect()
            })
            .collect();
        let vocab_sizes = [PROTOS.len(), SERVICES.len(), STATES.len()];
        let cat_weights = (0..NUM_CLASSES)
            .map(|_| {
                vocab_sizes
                    .iter()
                    .map(|&n| {
                        (0..n)
                            .map(|_| rng.gen_range(0.05f64..1.0).powi(3))
                            .collect()
                    })
                    .collect()
            })
            .collect();
        Self {
            centres,
            cat_weights,
        }
    }
}

/// Generates a labelled table. Rows are shuffled so classes interleave.
pub fn generate(config: &SynthConfig) -> Result<RawTable> {
    let schema = FeatureSchema::unsw_nb15();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let profile = Profile::new(&schema, config.separation, &mut rng);
    let noise = Normal::new(0.0, 1.0).expect("valid normal");

    let mut classes: Vec<usize> = config
        .class_counts()
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| std::iter::repeat_n(c, n))
        .collect();
    classes.shuffle(&mut rng);

    let mut columns: Vec<Column> = schema
        .features
        .iter()
        .map(|f| match f.kind {
            FeatureKind::Numeric => Column::Numeric(Vec::with_capacity(classes.len())),
            FeatureKind::Categorical => Column::Categorical(Vec::with_capacity(classes.len())),
        })
        .collect();
    let samplers: Vec<Vec<WeightedIndex<f64>>> = profile
        .cat_weights
        .iter()
        .map(|per_class| {
            per_class
                .iter()
                .map(|w| WeightedIndex::new(w).expect("positive weights"))
                .collect()
        })
        .collect();

    for &c in &classes {
        let mut cat_slot = 0;
        for (j, col) in columns.iter_mut().enumerate() {
            match col {
                Column::Numeric(v) => {
                    // byte-like features get a much wider spread
                    let spread = if j % 4 == 1 { 2.5 } else { 1.0 };
                    let z = profile.centres[c][j] + spread * noise.sample(&mut rng);
                    let x = (z.exp() - 1.0).max(0.0);
                    // some features are counters, keep them integral
                    v.push(if j % 3 == 0 {
                        x.round()
                    } else {
                        (x * 1e4).round() / 1e4
                    });
                }
                Column::Categorical(v) => {
                    let vocab: &[&str] = match cat_slot {
                        0 => &PROTOS,
                        1 => &SERVICES,
                        _ => &STATES,
                    };
                    v.push(vocab[samplers[c][cat_slot].sample(&mut rng)].to_string());
                    cat_slot += 1;
                }
            }
        }
    }
    let labels = RawLabels {
        category: classes.iter().map(|&c| AttackCategory::ALL[c]).collect(),
        label: classes.iter().map(|&c| u8::from(c != 0)).collect(),
    };
    RawTable::new(columns, Some(labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_determinism() {
        let cfg = SynthConfig {
            rows: 500,
            seed: 4,
            ..Default::default()
        };
        let a = generate(&cfg).unwrap();
        let b = generate(&cfg).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.len(), 500);
        let labels = a.labels().unwrap();
        for c in AttackCategory::ALL {
            assert!(labels.category.iter().filter(|&&x| x == c).count() >= 4);
        }
    }
}
