//! Streaming evaluation: recursive accuracy, average model size, confusion
//! matrix and the interpretability index.

use serde::{Deserialize, Serialize};

use crate::granule::Granule;
use crate::network::Model;
use crate::ClassId;

pub fn update_accuracy(acc_old: f64, h: u64, correct: bool) -> f64 {
    debug_assert!(h >= 1);
    let h = h as f64;
    let tau = if correct { 1.0 } else { 0.0 };
    (h - 1.0) / h * acc_old + tau / h
}

pub fn update_compactness(c_avg_old: f64, h: u64, c_now: usize) -> f64 {
    debug_assert!(h >= 1);
    let h = h as f64;
    (h - 1.0) / h * c_avg_old + c_now as f64 / h
}

pub fn volume(g: &Granule) -> f64 {
    g.volume()
}

/// Parameters retained per granule: four bounds and one weight per
/// feature plus the class label.
pub fn default_theta(n: usize) -> f64 {
    5.0 * n as f64 + 1.0
}

/// Division guard for the max-scaled volumes, `10^(-3n)` floored at the
/// smallest positive normal double.
pub fn volume_epsilon(n: usize) -> f64 {
    10f64.powf(-3.0 * n as f64).max(f64::MIN_POSITIVE)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InterpretabilityReport {
    pub ii: f64,
    pub equilibrium: f64,
    pub n_hat: f64,
    pub c: usize,
    pub theta_hat: f64,
    pub volumes: Vec<f64>,
    pub scaled_volumes: Vec<f64>,
}

/// Interpretability index of a model using the default per-granule
/// parameter count. `None` for a model without granules.
pub fn interpretability(model: &Model) -> Option<InterpretabilityReport> {
    let n = model.dim()?;
    interpretability_with(&model.granules, default_theta(n))
}

/// Interpretability index of a granule set with `theta` parameters per
/// granule. Every granule uses all `n` features, so `n_hat = n`.
pub fn interpretability_with(granules: &[Granule], theta: f64) -> Option<InterpretabilityReport> {
    let first = granules.first()?;
    let n = first.dim();
    let c = granules.len();
    let volumes: Vec<f64> = granules.iter().map(volume).collect();
    let v_max = volumes.iter().copied().fold(0.0, f64::max);
    let scale = 1.0 / (v_max + volume_epsilon(n));
    let scaled_volumes: Vec<f64> = volumes.iter().map(|v| v * scale).collect();
    let mean = scaled_volumes.iter().sum::<f64>() / c as f64;
    let variance = scaled_volumes.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / c as f64;
    let equilibrium = 1.0 - 4.0 * variance;
    let n_hat = n as f64;
    let cf = c as f64;
    let ii = equilibrium * (n_hat + cf + theta) / (3.0 * n_hat * cf * theta);
    Some(InterpretabilityReport {
        ii,
        equilibrium,
        n_hat,
        c,
        theta_hat: theta,
        volumes,
        scaled_volumes,
    })
}

/// Square count matrix indexed by observed classes, rows are true classes.
/// Grows when an unseen class shows up.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<ClassId>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    fn index_of(&mut self, class: ClassId) -> usize {
        match self.classes.binary_search(&class) {
            Ok(i) => i,
            Err(i) => {
                self.classes.insert(i, class);
                for row in &mut self.counts {
                    row.insert(i, 0);
                }
                self.counts.insert(i, vec![0; self.classes.len()]);
                i
            }
        }
    }

    pub fn update(&mut self, true_class: ClassId, predicted_class: ClassId) {
        let t = self.index_of(true_class);
        let p = self.index_of(predicted_class);
        self.counts[t][p] += 1;
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, class: ClassId) -> u64 {
        self.classes
            .binary_search(&class)
            .map_or(0, |i| self.counts[i].iter().sum())
    }

    pub fn get(&self, true_class: ClassId, predicted_class: ClassId) -> u64 {
        match (self.classes.binary_search(&true_class), self.classes.binary_search(&predicted_class)) {
            (Ok(t), Ok(p)) => self.counts[t][p],
            _ => 0,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in &self.classes {
            out.push_str(&format!(",{c}"));
        }
        out.push('\n');
        for (c, row) in self.classes.iter().zip(&self.counts) {
            out.push_str(&c.to_string());
            for v in row {
                out.push_str(&format!(",{v}"));
            }
            out.push('\n');
        }
        out
    }
}

/// One row of the per-step trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRow {
    pub h: u64,
    pub acc: f64,
    pub c_now: usize,
    pub c_avg: f64,
    pub rho: f64,
    pub ii: f64,
}

/// Accumulator updated once per prequential step, alongside the model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StreamMetrics {
    pub acc: f64,
    pub c_avg: f64,
    pub step: u64,
    pub confusion: ConfusionMatrix,
    /// `(h, ii)` sampled every `sample_every` steps.
    pub ii_history: Vec<(u64, f64)>,
    pub sample_every: u64,
}

impl StreamMetrics {
    pub fn new(sample_every: u64) -> Self {
        StreamMetrics {
            acc: 0.0,
            c_avg: 0.0,
            step: 0,
            confusion: ConfusionMatrix::default(),
            ii_history: Vec::new(),
            sample_every: sample_every.max(1),
        }
    }

    /// Records the outcome of one step, taken after the model learned.
    pub fn record(&mut self, true_class: ClassId, predicted_class: ClassId, model: &Model) -> TraceRow {
        self.step += 1;
        let h = self.step;
        self.acc = update_accuracy(self.acc, h, true_class == predicted_class);
        let c_now = model.granule_count();
        self.c_avg = update_compactness(self.c_avg, h, c_now);
        self.confusion.update(true_class, predicted_class);
        let ii = interpretability(model).map_or(f64::NAN, |r| r.ii);
        if h.is_multiple_of(self.sample_every) {
            self.ii_history.push((h, ii));
        }
        TraceRow {
            h,
            acc: self.acc,
            c_now,
            c_avg: self.c_avg,
            rho: model.rho,
            ii,
        }
    }

    pub fn mean_ii(&self) -> Option<f64> {
        if self.ii_history.is_empty() {
            return None;
        }
        Some(self.ii_history.iter().map(|&(_, v)| v).sum::<f64>() / self.ii_history.len() as f64)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn granule_with_widths(widths: &[f64]) -> Granule {
        let mut g = Granule::new_pointwise(&vec![0.0; widths.len()], 1, 0).unwrap();
        for (b, &w) in g.bounds.iter_mut().zip(widths) {
            *b = [0.0, 0.0, w, w].into();
        }
        g
    }

    #[test]
    fn accuracy_recursion_examples() {
        assert_eq!(update_accuracy(1.0, 2, true), 1.0);
        assert_eq!(update_accuracy(0.5, 2, true), 0.75);
        let mut acc = 0.0;
        for h in 1..=1000u64 {
            acc = update_accuracy(acc, h, h % 2 == 1);
        }
        assert_abs_diff_eq!(acc, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn compactness_examples() {
        let mut c = 0.0;
        for h in 1..=50 {
            c = update_compactness(c, h, 5);
            assert_abs_diff_eq!(c, 5.0, epsilon = 1e-12);
        }
        assert_eq!(update_compactness(10.0, 2, 20), 15.0);
        let mut c = 0.0;
        for (h, now) in [1usize, 2, 3].iter().enumerate() {
            c = update_compactness(c, h as u64 + 1, *now);
        }
        assert_abs_diff_eq!(c, 2.0, epsilon = 1e-15);
    }

    #[test]
    fn volume_examples() {
        let mut g = granule_with_widths(&[0.6, 0.6]);
        g.bounds[0] = [0.2, 0.3, 0.7, 0.8].into();
        assert_abs_diff_eq!(volume(&g), 0.36, epsilon = 1e-15);
        assert_eq!(volume(&Granule::new_pointwise(&[0.3, 0.9], 1, 0).unwrap()), 0.0);
        assert_eq!(volume(&granule_with_widths(&[1.0, 1.0, 1.0])), 1.0);
    }

    #[test]
    fn interpretability_single_granule() {
        let g = granule_with_widths(&[0.4]);
        let r = interpretability_with(&[g], 1.0).unwrap();
        assert_eq!(r.equilibrium, 1.0);
        assert_eq!(r.ii, 1.0);
    }

    #[test]
    fn interpretability_equal_volumes() {
        let gs = vec![granule_with_widths(&[0.5]), granule_with_widths(&[0.5])];
        let r = interpretability_with(&gs, default_theta(1)).unwrap();
        assert_eq!(r.equilibrium, 1.0);
    }

    #[test]
    fn interpretability_unbalanced_volumes() {
        let gs = vec![granule_with_widths(&[1.0]), granule_with_widths(&[0.0])];
        let r = interpretability_with(&gs, default_theta(1)).unwrap();
        let top = 1.0 / 1.001;
        assert_abs_diff_eq!(r.scaled_volumes[0], top, epsilon = 1e-15);
        assert_eq!(r.scaled_volumes[1], 0.0);
        let var = (top / 2.0).powi(2);
        assert_abs_diff_eq!(r.equilibrium, 1.0 - 4.0 * var, epsilon = 1e-12);
        assert_abs_diff_eq!(r.equilibrium, 0.002, epsilon = 1e-5);
        assert!(r.ii > 0.0);
    }

    #[test]
    fn epsilon_floor_for_many_features() {
        assert_eq!(volume_epsilon(1), 1e-3);
        assert_eq!(volume_epsilon(140), f64::MIN_POSITIVE);
    }

    #[test]
    fn ii_decreases_with_granule_count() {
        for n in 1..6 {
            let theta = default_theta(n);
            let f = |c: f64| (n as f64 + c + theta) / (3.0 * n as f64 * c * theta);
            let mut prev = f(1.0);
            for c in 2..200 {
                let cur = f(c as f64);
                assert!(cur < prev);
                prev = cur;
            }
        }
    }

    #[test]
    fn confusion_grows_and_counts() {
        let mut m = ConfusionMatrix::default();
        m.update(2, 2);
        m.update(1, 2);
        m.update(3, 1);
        assert_eq!(m.classes, vec![1, 2, 3]);
        assert_eq!(m.get(1, 2), 1);
        assert_eq!(m.get(2, 2), 1);
        assert_eq!(m.get(3, 1), 1);
        assert_eq!(m.total(), 3);
        assert_eq!(m.row_sum(1), 1);
        assert_eq!(m.to_csv().lines().count(), 4);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            #[test]
            fn recursion_equals_batch_mean(hits in prop::collection::vec(any::<bool>(), 1..500)) {
                let mut acc = 0.0;
                for (i, &hit) in hits.iter().enumerate() {
                    acc = update_accuracy(acc, i as u64 + 1, hit);
                }
                let mean = hits.iter().filter(|&&h| h).count() as f64 / hits.len() as f64;
                prop_assert!((acc - mean).abs() < 1e-12);
            }

            #[test]
            fn equilibrium_in_unit_range(widths in prop::collection::vec(prop::collection::vec(0.0f64..=1.0, 3), 1..12)) {
                let gs: Vec<Granule> = widths.iter().map(|w| granule_with_widths(w)).collect();
                let r = interpretability_with(&gs, default_theta(3)).unwrap();
                prop_assert!((0.0..=1.0).contains(&r.equilibrium));
                prop_assert!(r.ii > 0.0 && r.ii <= 1.0);
            }
        }
    }
}
