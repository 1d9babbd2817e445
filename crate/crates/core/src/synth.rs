//! Synthetic labelled streams with known class regions, used for testing
//! the classifier and by the `synth` CLI verb.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ClassId;

/// Axis-aligned box `[lo_j, hi_j]` owned by one class.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassBox {
    pub class: ClassId,
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxStreamConfig {
    pub boxes: Vec<ClassBox>,
    pub instances: usize,
    /// Probability that an observed label is swapped for another class.
    pub label_noise: f64,
    /// `(step, offset)`: from this 1-based step on, every box is translated
    /// by `offset` on every axis.
    pub drift: Option<(usize, f64)>,
    pub seed: u64,
}

impl BoxStreamConfig {
    /// Four disjoint 0.2-wide squares in the unit square, classes 1..=4.
    /// They stay inside the unit square after a translation of up to 0.35.
    pub fn four_squares(instances: usize, label_noise: f64, seed: u64) -> Self {
        let corners = [(0.05, 0.05), (0.4, 0.05), (0.05, 0.4), (0.4, 0.4)];
        let boxes = corners
            .iter()
            .enumerate()
            .map(|(i, &(x, y))| ClassBox {
                class: i as ClassId + 1,
                lo: vec![x, y],
                hi: vec![x + 0.2, y + 0.2],
            })
            .collect();
        BoxStreamConfig {
            boxes,
            instances,
            label_noise,
            drift: None,
            seed,
        }
    }

    pub fn with_drift(mut self, step: usize, offset: f64) -> Self {
        self.drift = Some((step, offset));
        self
    }

    pub fn dim(&self) -> usize {
        self.boxes.first().map_or(0, |b| b.lo.len())
    }

    pub fn classes(&self) -> Vec<ClassId> {
        self.boxes.iter().map(|b| b.class).collect()
    }

    fn validate(&self) -> Result<()> {
        if self.boxes.is_empty() {
            return Err(Error::Invalid("at least one class box is required".into()));
        }
        let dim = self.dim();
        let offset = self.drift.map_or(0.0, |(_, o)| o);
        for b in &self.boxes {
            if b.lo.len() != dim || b.hi.len() != dim {
                return Err(Error::Invalid("class boxes differ in dimension".into()));
            }
            for (&lo, &hi) in b.lo.iter().zip(&b.hi) {
                let ok = |v: f64| (0.0..=1.0).contains(&v);
                if lo > hi || !ok(lo) || !ok(hi) || !ok(lo + offset) || !ok(hi + offset) {
                    return Err(Error::Invalid(format!("box of class {} leaves the unit cube", b.class)));
                }
            }
        }
        if !(0.0..=1.0).contains(&self.label_noise) {
            return Err(Error::Invalid("label noise must be a probability".into()));
        }
        Ok(())
    }
}

/// One generated instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Sample {
    pub x: Vec<f64>,
    /// Class of the box the point was drawn from.
    pub clean_class: ClassId,
    /// Label delivered to the learner, possibly corrupted.
    pub label: ClassId,
}

pub fn box_stream(config: &BoxStreamConfig) -> Result<Vec<Sample>> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let n_boxes = config.boxes.len();
    let mut out = Vec::with_capacity(config.instances);
    for h in 1..=config.instances {
        let shift = match config.drift {
            Some((at, offset)) if h >= at => offset,
            _ => 0.0,
        };
        let b = &config.boxes[rng.gen_range(0..n_boxes)];
        let x: Vec<f64> = b
            .lo
            .iter()
            .zip(&b.hi)
            .map(|(&lo, &hi)| lo + shift + rng.gen::<f64>() * (hi - lo))
            .collect();
        let label = if n_boxes > 1 && rng.gen_bool(config.label_noise) {
            let k = rng.gen_range(0..n_boxes - 1);
            let other = config.boxes.iter().map(|b| b.class).filter(|&c| c != b.class).nth(k);
            other.unwrap_or(b.class)
        } else {
            b.class
        };
        out.push(Sample {
            x,
            clean_class: b.class,
            label,
        });
    }
    Ok(out)
}
