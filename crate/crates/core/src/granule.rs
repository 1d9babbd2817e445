//! Double-boundary hyper-box granules.
//!
//! Each axis of a granule holds four ordered bounds: the outer box (support)
//! governs coverage and moves slowly, the inner box (core) tracks drift.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ClassId;

/// The four ordered bounds of a granule on one feature axis:
/// `outer_lo <= inner_lo <= inner_hi <= outer_hi`.
///
/// Serialized as a `[outer_lo, inner_lo, inner_hi, outer_hi]` array.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 4]", into = "[f64; 4]")]
pub struct AxisBounds {
    pub outer_lo: f64,
    pub inner_lo: f64,
    pub inner_hi: f64,
    pub outer_hi: f64,
}

impl From<[f64; 4]> for AxisBounds {
    fn from(b: [f64; 4]) -> Self {
        AxisBounds {
            outer_lo: b[0],
            inner_lo: b[1],
            inner_hi: b[2],
            outer_hi: b[3],
        }
    }
}

impl From<AxisBounds> for [f64; 4] {
    fn from(b: AxisBounds) -> Self {
        [b.outer_lo, b.inner_lo, b.inner_hi, b.outer_hi]
    }
}

/// Closed interval `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }
}

impl AxisBounds {
    pub fn point(x: f64) -> Self {
        AxisBounds {
            outer_lo: x,
            inner_lo: x,
            inner_hi: x,
            outer_hi: x,
        }
    }

    pub fn midpoint(&self) -> f64 {
        (self.inner_lo + self.inner_hi) / 2.0
    }

    pub fn width(&self) -> f64 {
        self.outer_hi - self.outer_lo
    }

    pub fn core(&self) -> Interval {
        Interval {
            lo: self.inner_lo,
            hi: self.inner_hi,
        }
    }

    pub fn support(&self) -> Interval {
        Interval {
            lo: self.outer_lo,
            hi: self.outer_hi,
        }
    }

    pub fn expansion_region(&self, rho: f64) -> Interval {
        let mp = self.midpoint();
        Interval {
            lo: mp - rho / 2.0,
            hi: mp + rho / 2.0,
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.outer_lo <= self.inner_lo && self.inner_lo <= self.inner_hi && self.inner_hi <= self.outer_hi
    }

    /// Similarity between the bounds and a point, in `[0, 1]`.
    ///
    /// One minus the mean distance from `x` to the four bounds, relative to
    /// the span covering both the support and `x`. A pointwise granule that
    /// coincides with `x` has similarity 1.
    pub fn similarity(&self, x: f64) -> f64 {
        let num = (self.outer_lo - x).abs()
            + (self.inner_lo - x).abs()
            + (self.inner_hi - x).abs()
            + (self.outer_hi - x).abs();
        let span = self.outer_hi.max(x) - self.outer_lo.min(x);
        if span == 0.0 {
            return 1.0;
        }
        (1.0 - num / (4.0 * span)).clamp(0.0, 1.0)
    }

    fn adapt(&mut self, x: f64, rho: f64) {
        let mp = self.midpoint();
        let region = self.expansion_region(rho);
        if region.lo <= x && x < self.outer_lo {
            self.outer_lo = x;
        } else if self.outer_lo <= x && x < mp {
            self.inner_lo = x;
            self.inner_hi = mp;
        } else if mp <= x && x <= self.outer_hi {
            self.inner_lo = mp;
            self.inner_hi = x;
        } else if self.outer_hi < x && x <= region.hi {
            self.outer_hi = x;
        } else {
            return;
        }
        self.contract(rho);
    }

    /// Pulls the outer bounds inside `mp ± rho/2`, then clamps the inner
    /// bounds back into the outer box.
    fn contract(&mut self, rho: f64) {
        let region = self.expansion_region(rho);
        if region.lo > self.outer_lo {
            self.outer_lo = region.lo;
        }
        if region.hi < self.outer_hi {
            self.outer_hi = region.hi;
        }
        self.inner_lo = self.inner_lo.max(self.outer_lo);
        self.inner_hi = self.inner_hi.min(self.outer_hi);
    }
}

/// One n-dimensional double-boundary hyper-box with its synaptic weights,
/// class label and win/loss bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Granule {
    pub bounds: Vec<AxisBounds>,
    pub weights: Vec<f64>,
    pub label: ClassId,
    pub right_count: u64,
    pub wrong_count: u64,
    pub last_win_step: u64,
    pub created_step: u64,
}

impl Granule {
    /// Creates a degenerate granule sitting exactly on `x`, with unit weights.
    pub fn new_pointwise(x: &[f64], label: ClassId, step: u64) -> Result<Self> {
        check_unit_cube(x)?;
        Ok(Granule {
            bounds: x.iter().map(|&v| AxisBounds::point(v)).collect(),
            weights: vec![1.0; x.len()],
            label,
            right_count: 0,
            wrong_count: 0,
            last_win_step: step,
            created_step: step,
        })
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn midpoint(&self, j: usize) -> f64 {
        self.bounds[j].midpoint()
    }

    pub fn width(&self, j: usize) -> f64 {
        self.bounds[j].width()
    }

    pub fn core(&self, j: usize) -> Interval {
        self.bounds[j].core()
    }

    pub fn support(&self, j: usize) -> Interval {
        self.bounds[j].support()
    }

    pub fn expansion_region(&self, j: usize, rho: f64) -> Interval {
        self.bounds[j].expansion_region(rho)
    }

    /// Per-feature similarity vector between the granule and `x`.
    pub fn feature_similarity(&self, x: &[f64]) -> Vec<f64> {
        debug_assert_eq!(x.len(), self.dim());
        self.bounds
            .iter()
            .zip(x)
            .map(|(b, &xj)| b.similarity(xj))
            .collect()
    }

    /// True when every coordinate of `x` lies inside the expansion region.
    pub fn covers_expansion(&self, x: &[f64], rho: f64) -> bool {
        self.bounds
            .iter()
            .zip(x)
            .all(|(b, &xj)| b.expansion_region(rho).contains(xj))
    }

    /// Moves the granule toward `x`, one axis at a time.
    ///
    /// Axes where `x` falls outside the expansion region are left alone.
    pub fn adapt(&mut self, x: &[f64], rho: f64) {
        debug_assert_eq!(x.len(), self.dim());
        for (b, &xj) in self.bounds.iter_mut().zip(x) {
            b.adapt(xj, rho);
        }
    }

    /// Contracts every axis so that its width does not exceed `rho`.
    pub fn enforce_max_width(&mut self, rho: f64) {
        for b in &mut self.bounds {
            b.contract(rho);
        }
    }

    pub fn is_ordered(&self) -> bool {
        self.bounds.iter().all(AxisBounds::is_ordered)
    }

    pub fn max_width(&self) -> f64 {
        self.bounds.iter().map(AxisBounds::width).fold(0.0, f64::max)
    }

    /// Product of the outer-box edges.
    pub fn volume(&self) -> f64 {
        self.bounds.iter().map(AxisBounds::width).product()
    }
}

/// Rejects vectors that are not finite or leave `[0, 1]`.
pub fn check_unit_cube(x: &[f64]) -> Result<()> {
    for (index, &value) in x.iter().enumerate() {
        if !value.is_finite() {
            return Err(Error::NonFinite { index, value });
        }
        if !(0.0..=1.0).contains(&value) {
            return Err(Error::OutOfUnitRange { index, value });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn single(b: [f64; 4]) -> Granule {
        Granule {
            bounds: vec![b.into()],
            weights: vec![1.0],
            label: 1,
            right_count: 0,
            wrong_count: 0,
            last_win_step: 0,
            created_step: 0,
        }
    }

    fn quad(g: &Granule, j: usize) -> [f64; 4] {
        g.bounds[j].into()
    }

    #[test]
    fn pointwise_creation() {
        let g = Granule::new_pointwise(&[0.3, 0.7], 2, 0).unwrap();
        assert_eq!(quad(&g, 0), [0.3; 4]);
        assert_eq!(quad(&g, 1), [0.7; 4]);
        assert_eq!(g.weights, vec![1.0, 1.0]);
        assert_eq!(g.label, 2);

        let corners = Granule::new_pointwise(&[0.0, 1.0], 1, 0).unwrap();
        assert_eq!(corners.width(0), 0.0);
        assert_eq!(corners.width(1), 0.0);

        let g = Granule::new_pointwise(&[0.5], 3, 10).unwrap();
        assert_eq!(g.last_win_step, 10);
        assert_eq!(g.created_step, 10);
        assert_eq!(g.right_count, 0);
        assert_eq!(g.wrong_count, 0);
    }

    #[test]
    fn pointwise_rejects_outside_cube() {
        assert!(matches!(
            Granule::new_pointwise(&[0.2, 1.5], 1, 0),
            Err(Error::OutOfUnitRange { index: 1, .. })
        ));
        assert!(matches!(
            Granule::new_pointwise(&[f64::NAN], 1, 0),
            Err(Error::NonFinite { index: 0, .. })
        ));
    }

    #[test]
    fn similarity_examples() {
        let g = single([0.2, 0.4, 0.6, 0.8]);
        assert_abs_diff_eq!(g.feature_similarity(&[0.5])[0], 2.0 / 3.0, epsilon = 1e-15);
        let p = single([0.5; 4]);
        assert_eq!(p.feature_similarity(&[0.5])[0], 1.0);
        assert_eq!(p.feature_similarity(&[1.0])[0], 0.0);
    }

    #[test]
    fn shape_queries() {
        let g = single([0.2, 0.4, 0.6, 0.8]);
        assert_abs_diff_eq!(g.midpoint(0), 0.5);
        assert_abs_diff_eq!(g.width(0), 0.6, epsilon = 1e-15);
        assert_eq!(g.core(0), Interval { lo: 0.4, hi: 0.6 });
        assert_eq!(g.support(0), Interval { lo: 0.2, hi: 0.8 });

        let p = single([0.3; 4]);
        assert_eq!((p.midpoint(0), p.width(0)), (0.3, 0.0));
        let full = single([0.0, 0.0, 1.0, 1.0]);
        assert_eq!((full.midpoint(0), full.width(0)), (0.5, 1.0));
    }

    #[test]
    fn expansion_regions() {
        let g = single([0.2, 0.4, 0.6, 0.8]);
        let e = g.expansion_region(0, 0.6);
        assert_abs_diff_eq!(e.lo, 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(e.hi, 0.8, epsilon = 1e-15);
        assert_eq!(g.expansion_region(0, 0.0), Interval { lo: 0.5, hi: 0.5 });

        let low = single([0.1; 4]);
        let e = low.expansion_region(0, 0.6);
        assert_abs_diff_eq!(e.lo, -0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(e.hi, 0.4, epsilon = 1e-15);
    }

    #[test]
    fn coverage() {
        let mut g = Granule::new_pointwise(&[0.5, 0.5], 1, 0).unwrap();
        g.bounds[0] = [0.4, 0.45, 0.55, 0.6].into();
        assert!(g.covers_expansion(&[0.7, 0.3], 0.6));
        assert!(!g.covers_expansion(&[0.9, 0.5], 0.6));

        let p = Granule::new_pointwise(&[0.25, 0.75], 1, 0).unwrap();
        assert!(p.covers_expansion(&[0.25, 0.75], 0.0));
    }

    #[test]
    fn adapt_outer_low_case() {
        let mut g = single([0.2, 0.4, 0.6, 0.8]);
        g.adapt(&[0.1], 0.8);
        assert_eq!(quad(&g, 0), [0.1, 0.4, 0.6, 0.8]);
    }

    #[test]
    fn adapt_inner_low_case() {
        let mut g = single([0.2, 0.4, 0.6, 0.8]);
        g.adapt(&[0.3], 0.8);
        let q = quad(&g, 0);
        assert_eq!(q, [0.2, 0.3, 0.5, 0.8]);
        assert_abs_diff_eq!(g.midpoint(0), 0.4);
    }

    #[test]
    fn adapt_fixed_point() {
        let mut g = single([0.5; 4]);
        g.adapt(&[0.5], 0.6);
        assert_eq!(quad(&g, 0), [0.5; 4]);
    }

    #[test]
    fn adapt_inner_high_and_outer_high_cases() {
        let mut g = single([0.2, 0.4, 0.6, 0.8]);
        g.adapt(&[0.7], 0.8);
        assert_eq!(quad(&g, 0), [0.2, 0.5, 0.7, 0.8]);

        let mut g = single([0.2, 0.4, 0.6, 0.8]);
        g.adapt(&[0.85], 0.8);
        assert_eq!(quad(&g, 0), [0.2, 0.4, 0.6, 0.85]);
    }

    #[test]
    fn adapt_skips_axes_outside_region() {
        let mut g = single([0.4, 0.45, 0.55, 0.6]);
        g.adapt(&[0.95], 0.4);
        assert_eq!(quad(&g, 0), [0.4, 0.45, 0.55, 0.6]);
    }

    #[test]
    fn adapt_contracts_after_midpoint_shift() {
        // inner moves to [0.3, 0.5] => mp = 0.4, so with rho = 0.6 the
        // upper outer bound is pulled to 0.7
        let mut g = single([0.2, 0.4, 0.6, 0.8]);
        g.adapt(&[0.3], 0.6);
        let q = quad(&g, 0);
        assert_abs_diff_eq!(q[3], 0.7, epsilon = 1e-15);
        assert!(g.is_ordered());
    }

    #[test]
    fn max_width_contraction() {
        let mut g = single([0.0, 0.4, 0.6, 1.0]);
        g.enforce_max_width(0.6);
        let q = quad(&g, 0);
        assert_abs_diff_eq!(q[0], 0.2, epsilon = 1e-15);
        assert_abs_diff_eq!(q[3], 0.8, epsilon = 1e-15);

        let mut narrow = single([0.4, 0.45, 0.55, 0.6]);
        narrow.enforce_max_width(0.6);
        assert_eq!(quad(&narrow, 0), [0.4, 0.45, 0.55, 0.6]);

        let mut g = single([0.0, 0.1, 0.9, 1.0]);
        g.enforce_max_width(0.4);
        let q = quad(&g, 0);
        assert_abs_diff_eq!(q[0], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(q[1], 0.3, epsilon = 1e-15);
        assert_abs_diff_eq!(q[2], 0.7, epsilon = 1e-15);
        assert_abs_diff_eq!(q[3], 0.7, epsilon = 1e-15);
    }

    #[test]
    fn adapt_idempotent_at_midpoint() {
        let mut g = single([0.3, 0.5, 0.5, 0.6]);
        let before = g.clone();
        g.adapt(&[0.5], 0.5);
        assert_eq!(g, before);
    }

    #[test]
    fn random_operations_keep_ordering() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 3;
        let x0: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
        let mut g = Granule::new_pointwise(&x0, 1, 0).unwrap();
        for _ in 0..100_000 {
            let rho: f64 = rng.gen_range(0.001..=1.0);
            if rng.gen_bool(0.1) {
                g.enforce_max_width(rho);
                assert!(g.max_width() <= rho + 1e-12);
            } else {
                let x: Vec<f64> = (0..n).map(|_| rng.gen()).collect();
                g.adapt(&x, rho);
            }
            assert!(g.is_ordered(), "{:?}", g.bounds);
            for b in &g.bounds {
                assert!((0.0..=1.0).contains(&b.outer_lo) && (0.0..=1.0).contains(&b.outer_hi));
            }
        }
    }

    #[test]
    fn json_layout() {
        let g = Granule::new_pointwise(&[0.25, 0.5], 4, 3).unwrap();
        let v = serde_json::to_value(&g).unwrap();
        assert_eq!(v["bounds"], serde_json::json!([[0.25, 0.25, 0.25, 0.25], [0.5, 0.5, 0.5, 0.5]]));
        assert_eq!(v["weights"], serde_json::json!([1.0, 1.0]));
        assert_eq!(v["label"], 4);
        let back: Granule = serde_json::from_value(v).unwrap();
        assert_eq!(back, g);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn ordered_bounds() -> impl Strategy<Value = [f64; 4]> {
            prop::array::uniform4(0.0f64..=1.0).prop_map(|mut a| {
                a.sort_by(|x, y| x.partial_cmp(y).unwrap());
                a
            })
        }

        proptest! {
            #[test]
            fn similarity_in_unit_range(b in ordered_bounds(), x in 0.0f64..=1.0) {
                let s = AxisBounds::from(b).similarity(x);
                prop_assert!((0.0..=1.0).contains(&s));
                let exact = b.iter().all(|&v| v == x);
                prop_assert_eq!(s == 1.0, exact);
            }

            #[test]
            fn width_bounded_after_contraction(b in ordered_bounds(), rho in 0.0f64..=1.0) {
                let mut g = single(b);
                g.enforce_max_width(rho);
                prop_assert!(g.width(0) <= rho + 1e-12);
                prop_assert!(g.is_ordered());
            }

            #[test]
            fn support_only_shrinks_by_contraction(
                b in ordered_bounds(), t in 0.0f64..=1.0, rho in 0.0f64..=1.0
            ) {
                // x inside the support: adapt only touches the inner box, so
                // the support can move only through the rho contraction
                let x = b[0] + t * (b[3] - b[0]);
                let mut g = single(b);
                g.adapt(&[x], rho);
                let after = g.support(0);
                prop_assert!(after.lo >= b[0]);
                prop_assert!(after.hi <= b[3]);
                if after.lo != b[0] || after.hi != b[3] {
                    prop_assert!(after.hi - after.lo <= rho + 1e-12);
                }
            }
        }
    }
}
