//! The four-layer evolving network: granular layer, product aggregation
//! neurons, softmax layer and class output, plus the incremental learning
//! step that grows, adapts, reweights and prunes granules.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::granule::{check_unit_cube, Granule, Interval};
use crate::ClassId;

/// Lower clamp for the adaptive maximum width.
pub const RHO_MIN: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Aggregation {
    #[default]
    Product,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperParams {
    /// Initial maximum granule width.
    pub rho0: f64,
    /// Horizon for deletion and for width adaptation.
    pub hr: u64,
    /// Reference number of granules created per horizon.
    pub eta: f64,
    #[serde(default)]
    pub aggregation: Aggregation,
    #[serde(default)]
    pub update_rule: UpdateRule,
}

/// What happens to a covered instance the winner misclassified.
///
/// A new pointwise granule has zero similarity to every point but its own,
/// so under `Listing` it can only win on an exact hit and never grows once
/// any box with extent exists.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpdateRule {
    /// Penalize the winner's weights, then adapt and reinforce the most
    /// active granule of the true class whose expansion region covers the
    /// instance. Create a granule only if there is none.
    #[default]
    ClassAware,
    /// Always create a new granule on a misclassification and leave the
    /// winner's weights alone.
    Listing,
}

impl Default for HyperParams {
    fn default() -> Self {
        HyperParams {
            rho0: 0.6,
            hr: 100,
            eta: 2.0,
            aggregation: Aggregation::Product,
            update_rule: UpdateRule::ClassAware,
        }
    }
}

impl HyperParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.rho0 > 0.0 && self.rho0 <= 1.0) {
            return Err(Error::InvalidHyperParams(format!("rho0 = {} not in (0, 1]", self.rho0)));
        }
        if self.hr == 0 {
            return Err(Error::InvalidHyperParams("hr must be at least 1".into()));
        }
        if !(self.eta >= 0.0 && self.eta.is_finite()) {
            return Err(Error::InvalidHyperParams(format!("eta = {} must be non-negative", self.eta)));
        }
        Ok(())
    }
}

/// Output of one forward pass.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub activations: Vec<f64>,
    pub probabilities: Vec<f64>,
    pub winner_index: usize,
    pub predicted_class: ClassId,
    /// Per-granule similarity vectors, kept for the weight update.
    #[serde(skip)]
    pub similarities: Vec<Vec<f64>>,
}

/// Sign of the estimation error: `Correct` is -1, `Wrong` is +1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ErrorSign {
    Correct,
    Wrong,
}

impl ErrorSign {
    pub fn value(self) -> f64 {
        match self {
            ErrorSign::Correct => -1.0,
            ErrorSign::Wrong => 1.0,
        }
    }
}

pub fn compute_error(true_class: ClassId, predicted_class: ClassId) -> ErrorSign {
    if true_class == predicted_class {
        ErrorSign::Correct
    } else {
        ErrorSign::Wrong
    }
}

/// Product T-norm over weighted similarities.
pub fn aggregate(similarity: &[f64], weights: &[f64]) -> f64 {
    similarity.iter().zip(weights).map(|(s, w)| s * w).product()
}

pub fn softmax(activations: &[f64]) -> Vec<f64> {
    let max = activations.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exps: Vec<f64> = activations.iter().map(|&o| (o - max).exp()).collect();
    let total: f64 = exps.iter().sum();
    exps.into_iter().map(|e| e / total).collect()
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

/// Reinforces or penalizes the winner's weights in proportion to its
/// historical hit (or miss) ratio and the current similarities. Counters
/// must already include the current step.
pub fn update_weights(g: &mut Granule, similarity: &[f64], error: ErrorSign) {
    let total = (g.right_count + g.wrong_count) as f64;
    debug_assert!(total > 0.0);
    let beta = match error {
        ErrorSign::Correct => g.right_count as f64 / total,
        ErrorSign::Wrong => g.wrong_count as f64 / total,
    };
    let eps = error.value();
    for (w, &s) in g.weights.iter_mut().zip(similarity) {
        *w = (*w - eps * beta * s).clamp(0.0, 1.0);
    }
}

/// Maximum-width update at the end of a horizon of `hr` steps in which
/// `created` granules were created. The result is clamped to `[RHO_MIN, 1]`.
pub fn adapt_granularity(rho: f64, created: u64, hr: u64, eta: f64) -> f64 {
    let r = created as f64;
    let hr = hr as f64;
    let next = if r > eta {
        (1.0 + r / hr) * rho
    } else if r < eta {
        (1.0 - (eta - r) / hr) * rho
    } else {
        rho
    };
    next.clamp(RHO_MIN, 1.0)
}

/// Result of a single learning step.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnOutcome {
    /// Class emitted before the label was revealed.
    pub predicted_class: ClassId,
    pub error: ErrorSign,
    /// Forward pass; `None` for the very first instance, which is answered
    /// with a random estimate.
    pub prediction: Option<Prediction>,
    pub created: bool,
    pub deleted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Model {
    pub hyper_params: HyperParams,
    pub rho: f64,
    pub step: u64,
    /// Granules created since the last width adaptation.
    pub created_in_epoch: u64,
    pub classes_seen: BTreeSet<ClassId>,
    /// Classes the first random estimate is drawn from, when known upfront.
    #[serde(default)]
    pub class_universe: Option<Vec<ClassId>>,
    pub granules: Vec<Granule>,
}

impl Model {
    pub fn new(hyper_params: HyperParams) -> Result<Self> {
        hyper_params.validate()?;
        Ok(Model {
            rho: hyper_params.rho0,
            hyper_params,
            step: 0,
            created_in_epoch: 0,
            classes_seen: BTreeSet::new(),
            class_universe: None,
            granules: Vec::new(),
        })
    }

    pub fn with_class_universe(mut self, classes: Vec<ClassId>) -> Self {
        self.class_universe = if classes.is_empty() { None } else { Some(classes) };
        self
    }

    pub fn granule_count(&self) -> usize {
        self.granules.len()
    }

    pub fn dim(&self) -> Option<usize> {
        self.granules.first().map(Granule::dim)
    }

    fn check_input(&self, x: &[f64]) -> Result<()> {
        check_unit_cube(x)?;
        if let Some(expected) = self.dim() {
            if expected != x.len() {
                return Err(Error::DimensionMismatch {
                    expected,
                    actual: x.len(),
                });
            }
        }
        Ok(())
    }

    pub fn predict(&self, x: &[f64]) -> Result<Prediction> {
        self.check_input(x)?;
        if self.granules.is_empty() {
            return Err(Error::EmptyModel);
        }
        let similarities: Vec<Vec<f64>> = self.granules.iter().map(|g| g.feature_similarity(x)).collect();
        let activations: Vec<f64> = similarities
            .iter()
            .zip(&self.granules)
            .map(|(s, g)| aggregate(s, &g.weights))
            .collect();
        let probabilities = softmax(&activations);
        let winner_index = argmax(&probabilities);
        Ok(Prediction {
            predicted_class: self.granules[winner_index].label,
            activations,
            probabilities,
            winner_index,
            similarities,
        })
    }

    fn create(&mut self, x: &[f64], label: ClassId) -> Result<()> {
        self.granules.push(Granule::new_pointwise(x, label, self.step)?);
        self.created_in_epoch += 1;
        Ok(())
    }

    /// Most active granule of `class` whose expansion region covers `x`,
    /// under the class-aware rule.
    fn class_match(&self, prediction: &Prediction, x: &[f64], class: ClassId) -> Option<usize> {
        if self.hyper_params.update_rule != UpdateRule::ClassAware {
            return None;
        }
        let mut best: Option<usize> = None;
        for (k, g) in self.granules.iter().enumerate() {
            if g.label != class || !g.covers_expansion(x, self.rho) {
                continue;
            }
            if best.is_none_or(|b| prediction.activations[k] > prediction.activations[b]) {
                best = Some(k);
            }
        }
        best
    }

    /// One prequential step: predict `x`, then learn from its true class.
    pub fn learn<R: Rng + ?Sized>(&mut self, x: &[f64], true_class: ClassId, rng: &mut R) -> Result<LearnOutcome> {
        self.check_input(x)?;
        self.step += 1;
        self.classes_seen.insert(true_class);

        let mut outcome = if self.granules.is_empty() {
            let estimate = match &self.class_universe {
                Some(classes) => classes[rng.gen_range(0..classes.len())],
                None => 1,
            };
            self.create(x, true_class)?;
            LearnOutcome {
                predicted_class: estimate,
                error: compute_error(true_class, estimate),
                prediction: None,
                created: true,
                deleted: 0,
            }
        } else {
            let prediction = self.predict(x)?;
            let error = compute_error(true_class, prediction.predicted_class);
            let i = prediction.winner_index;
            let winner = &mut self.granules[i];
            match error {
                ErrorSign::Correct => winner.right_count += 1,
                ErrorSign::Wrong => winner.wrong_count += 1,
            }
            winner.last_win_step = self.step;

            let rho = self.rho;
            let covered = self.granules.iter().any(|g| g.covers_expansion(x, rho));
            let class_aware = self.hyper_params.update_rule == UpdateRule::ClassAware;
            let mut created = false;
            if covered && error == ErrorSign::Correct {
                let winner = &mut self.granules[i];
                winner.adapt(x, rho);
                update_weights(winner, &prediction.similarities[i], error);
            } else if !covered {
                self.create(x, true_class)?;
                created = true;
            } else {
                if class_aware {
                    update_weights(&mut self.granules[i], &prediction.similarities[i], error);
                }
                match self.class_match(&prediction, x, true_class) {
                    Some(k) => {
                        let g = &mut self.granules[k];
                        g.adapt(x, rho);
                        g.right_count += 1;
                        g.last_win_step = self.step;
                        update_weights(g, &prediction.similarities[k], ErrorSign::Correct);
                    }
                    None => {
                        self.create(x, true_class)?;
                        created = true;
                    }
                }
            }
            LearnOutcome {
                predicted_class: prediction.predicted_class,
                error,
                prediction: Some(prediction),
                created,
                deleted: 0,
            }
        };

        let step = self.step;
        let horizon = self.hyper_params.hr;
        let before = self.granules.len();
        self.granules.retain(|g| step - g.last_win_step <= horizon);
        outcome.deleted = before - self.granules.len();

        if step.is_multiple_of(horizon) {
            self.rho = adapt_granularity(self.rho, self.created_in_epoch, horizon, self.hyper_params.eta);
            let rho = self.rho;
            for g in &mut self.granules {
                g.enforce_max_width(rho);
            }
            self.created_in_epoch = 0;
        }
        Ok(outcome)
    }

    pub fn extract_rules(&self) -> Vec<Rule> {
        let wins: u64 = self.granules.iter().map(|g| g.right_count + g.wrong_count).sum();
        self.granules
            .iter()
            .enumerate()
            .map(|(index, g)| Rule {
                index,
                class: g.label,
                win_share: if wins == 0 {
                    0.0
                } else {
                    (g.right_count + g.wrong_count) as f64 / wins as f64
                },
                terms: (0..g.dim())
                    .map(|j| RuleTerm {
                        feature: j,
                        core: g.core(j),
                        support: g.support(j),
                        weight: g.weights[j],
                    })
                    .collect(),
            })
            .collect()
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let model: Model = serde_json::from_str(s)?;
        model.hyper_params.validate()?;
        Ok(model)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let s = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&s)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RuleTerm {
    pub feature: usize,
    pub core: Interval,
    pub support: Interval,
    pub weight: f64,
}

/// `If x_1 is G_1 and ... and x_n is G_n then class`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Rule {
    pub index: usize,
    pub class: ClassId,
    /// Fraction of all winning events attributed to this granule.
    pub win_share: f64,
    pub terms: Vec<RuleTerm>,
}

/// Plain-text rule table, one line per rule.
pub fn format_rules(rules: &[Rule], feature_names: Option<&[String]>) -> String {
    let mut out = String::new();
    for rule in rules {
        let _ = write!(out, "R{}: if ", rule.index + 1);
        for (k, t) in rule.terms.iter().enumerate() {
            if k > 0 {
                out.push_str(" and ");
            }
            let name = feature_names
                .and_then(|n| n.get(t.feature).cloned())
                .unwrap_or_else(|| format!("x{}", t.feature + 1));
            let _ = write!(
                out,
                "({name} in [{:.4}, {:.4}] core [{:.4}, {:.4}] w={:.3})",
                t.support.lo, t.support.hi, t.core.lo, t.core.hi, t.weight
            );
        }
        let _ = writeln!(out, " then class {} (share {:.3})", rule.class, rule.win_share);
    }
    out
}
