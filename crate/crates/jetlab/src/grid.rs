//! Uniform sampling grids over boxes. All sup-norm measurements in the
//! crate are grid maxima; the resolution rule (at least 8 samples per
//! relevant length scale, refinement-stable to 5%) is enforced by callers
//! through [`GridSpec`].

use serde::{Deserialize, Serialize};

pub const SAMPLES_PER_SCALE: usize = 8;
pub const REFINEMENT_STABILITY_TOL: f64 = 0.05;

/// Per-axis sample counts over a box.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct GridSpec {
    pub counts: Vec<usize>,
}

impl GridSpec {
    pub fn new(counts: Vec<usize>) -> Self {
        assert!(counts.iter().all(|&c| c >= 2), "need at least 2 samples per axis");
        GridSpec { counts }
    }

    /// Uniform count on every axis.
    pub fn cubic(m: usize, count: usize) -> Self {
        Self::new(vec![count; m])
    }

    /// Count satisfying the per-scale rule: at least `SAMPLES_PER_SCALE`
    /// samples for every interval of length `scale` inside `extent`.
    pub fn count_for_scale(extent: f64, scale: f64) -> usize {
        let c = (extent / scale * SAMPLES_PER_SCALE as f64).ceil() as usize;
        c.clamp(2, 200_000)
    }

    pub fn dim(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> usize {
        self.counts.iter().product()
    }

    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec::new(self.counts.iter().map(|&c| (c - 1) * factor + 1).collect())
    }

    pub fn steps(&self, lo: &[f64], hi: &[f64]) -> Vec<f64> {
        self.counts
            .iter()
            .zip(lo.iter().zip(hi))
            .map(|(&c, (&a, &b))| (b - a) / (c - 1) as f64)
            .collect()
    }

    /// Row-major iteration over the lattice points of `[lo, hi]`.
    pub fn points<'a>(&'a self, lo: &'a [f64], hi: &'a [f64]) -> GridIter<'a> {
        assert_eq!(self.dim(), lo.len());
        assert_eq!(self.dim(), hi.len());
        GridIter {
            spec: self,
            lo,
            hi,
            next: Some(vec![0; self.dim()]),
        }
    }

    /// The lattice point with the given per-axis indices.
    pub fn point_at(&self, lo: &[f64], hi: &[f64], digits: &[usize]) -> Vec<f64> {
        digits
            .iter()
            .zip(self.counts.iter().zip(lo.iter().zip(hi)))
            .map(|(&d, (&c, (&a, &b)))| {
                if c == 1 {
                    a
                } else {
                    a + (b - a) * d as f64 / (c - 1) as f64
                }
            })
            .collect()
    }
}

pub struct GridIter<'a> {
    spec: &'a GridSpec,
    lo: &'a [f64],
    hi: &'a [f64],
    next: Option<Vec<usize>>,
}

impl<'a> Iterator for GridIter<'a> {
    type Item = Vec<f64>;

    fn next(&mut self) -> Option<Vec<f64>> {
        let digits = self.next.take()?;
        let point = self.spec.point_at(self.lo, self.hi, &digits);
        // Advance the mixed-radix counter.
        let mut digits = digits;
        for axis in (0..digits.len()).rev() {
            digits[axis] += 1;
            if digits[axis] < self.spec.counts[axis] {
                self.next = Some(digits);
                return Some(point);
            }
            digits[axis] = 0;
        }
        Some(point)
    }
}

/// 1D helper: `count` uniform samples of `[lo, hi]`, endpoints included.
pub fn linspace(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    assert!(count >= 2);
    (0..count)
        .map(|i| lo + (hi - lo) * i as f64 / (count - 1) as f64)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_covers_box() {
        let g = GridSpec::new(vec![3, 2]);
        let pts: Vec<Vec<f64>> = g.points(&[-1.0, 0.0], &[1.0, 1.0]).collect();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[0], vec![-1.0, 0.0]);
        assert_eq!(pts[5], vec![1.0, 1.0]);
    }

    #[test]
    fn scale_rule() {
        assert_eq!(GridSpec::count_for_scale(2.0, 0.25), 64);
    }

    #[test]
    fn refinement_preserves_endpoints() {
        let g = GridSpec::new(vec![5]);
        let r = g.refined(2);
        assert_eq!(r.counts, vec![9]);
        let orig: Vec<f64> = g.points(&[0.0], &[1.0]).map(|p| p[0]).collect();
        let fine: Vec<f64> = r.points(&[0.0], &[1.0]).map(|p| p[0]).collect();
        for p in orig {
            assert!(fine.iter().any(|q| (q - p).abs() < 1e-12));
        }
    }
}
