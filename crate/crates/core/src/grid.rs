use serde::{Deserialize, Serialize};

use crate::belief::Belief;

/// Uniform grid on `[0, 1]` with both endpoints.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Grid {
    size: usize,
}

impl Grid {
    /// Panics if `size < 2`.
    pub fn new(size: usize) -> Self {
        assert!(size >= 2, "grid needs at least two points, got {size}");
        Grid { size }
    }

    pub fn len(&self) -> usize {
        self.size
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    fn cells(&self) -> f64 {
        (self.size - 1) as f64
    }

    pub fn point(&self, i: usize) -> f64 {
        i as f64 / self.cells()
    }

    pub fn belief(&self, i: usize) -> Belief {
        Belief::new(self.point(i))
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.size).map(|i| self.point(i))
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells()
    }

    /// Grid point closest to one half.
    pub fn ref_index(&self) -> usize {
        self.nearest(0.5)
    }

    pub fn nearest(&self, x: f64) -> usize {
        ((x * self.cells()).round() as usize).min(self.size - 1)
    }

    /// Left node of the cell containing `x` and the weight on the right node.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let s = x.clamp(0.0, 1.0) * self.cells();
        let lo = (s.floor() as usize).min(self.size - 2);
        (lo, s - lo as f64)
    }

    /// Piecewise-linear interpolation of `values` at `x`.
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.size);
        let (lo, w) = self.locate(x);
        (1.0 - w) * values[lo] + w * values[lo + 1]
    }
}
