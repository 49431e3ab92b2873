//! Result types shared by the holonomic-approximation constructions: the
//! isotopy handle, the holonomic-section handle, measured errors and
//! structural checks.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::localmodels::wiggle::WiggleIsotopy;
use crate::polyjet::jet::{jet_compose, Jet};
use crate::polyjet::section::JetField;
use crate::primitive::{jet_inverse, split_components};

/// An evaluable isotopy `F_t`, possibly conjugated by a linear frame map
/// or composed from stages.
#[derive(Clone)]
pub enum Motion {
    Identity { m: usize },
    Wiggle { wiggle: Arc<WiggleIsotopy>, z: Vec<f64> },
    /// `F(t, x) = frame^{-1}( inner(t, frame(x)) )`.
    Rotated { frame: Frame, inner: Box<Motion> },
    /// Applied left to right: `F = first o ... o last` in the composition
    /// order `F(t, x) = stages[0](t, stages[1](t, ... x))`.
    Composite { m: usize, stages: Vec<Motion> },
}

/// An orthogonal change of coordinates combined with a uniform dilation:
/// `frame(x) = R x / scale`, `frame^{-1}(y) = scale * R^T y`.
#[derive(Debug, Clone)]
pub struct Frame {
    /// Rows are the new orthonormal basis vectors in old coordinates.
    pub rows: Vec<Vec<f64>>,
    pub scale: f64,
}

impl Frame {
    pub fn identity(m: usize) -> Self {
        Frame {
            rows: (0..m)
                .map(|i| {
                    let mut e = vec![0.0; m];
                    e[i] = 1.0;
                    e
                })
                .collect(),
            scale: 1.0,
        }
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn to_frame(&self, x: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.iter().zip(x).map(|(a, b)| a * b).sum::<f64>() / self.scale)
            .collect()
    }

    pub fn from_frame(&self, y: &[f64]) -> Vec<f64> {
        let m = self.dim();
        (0..m)
            .map(|i| {
                self.rows
                    .iter()
                    .zip(y)
                    .map(|(row, &yj)| row[i] * yj)
                    .sum::<f64>()
                    * self.scale
            })
            .collect()
    }

    /// Jet of the linear map `to_frame` at `x`.
    pub fn to_frame_jet(&self, x: &[f64], r: usize) -> Jet<f64> {
        use crate::polyjet::multiindex::MultiIndex;
        use crate::polyjet::poly::TruncatedPoly;
        let m = self.dim();
        let y = self.to_frame(x);
        let comps = (0..m)
            .map(|i| {
                let mut p = TruncatedPoly::zero(m, r);
                p.set_coeff(&MultiIndex::zero(m), y[i]);
                if r >= 1 {
                    for j in 0..m {
                        let c = self.rows[i][j] / self.scale;
                        if c != 0.0 {
                            p.set_coeff(&MultiIndex::unit(m, j), c);
                        }
                    }
                }
                p
            })
            .collect();
        Jet::new(x.to_vec(), comps).expect("frame jet")
    }

    /// Jet of the linear map `from_frame` at `y`.
    pub fn from_frame_jet(&self, y: &[f64], r: usize) -> Jet<f64> {
        use crate::polyjet::multiindex::MultiIndex;
        use crate::polyjet::poly::TruncatedPoly;
        let m = self.dim();
        let x = self.from_frame(y);
        let comps = (0..m)
            .map(|i| {
                let mut p = TruncatedPoly::zero(m, r);
                p.set_coeff(&MultiIndex::zero(m), x[i]);
                if r >= 1 {
                    for j in 0..m {
                        let c = self.rows[j][i] * self.scale;
                        if c != 0.0 {
                            p.set_coeff(&MultiIndex::unit(m, j), c);
                        }
                    }
                }
                p
            })
            .collect();
        Jet::new(y.to_vec(), comps).expect("frame jet")
    }
}

impl Motion {
    pub fn dim(&self) -> usize {
        match self {
            Motion::Identity { m } => *m,
            Motion::Wiggle { wiggle, .. } => wiggle.m,
            Motion::Rotated { frame, .. } => frame.dim(),
            Motion::Composite { m, .. } => *m,
        }
    }

    pub fn is_identity(&self) -> bool {
        match self {
            Motion::Identity { .. } => true,
            Motion::Composite { stages, .. } => stages.iter().all(|s| s.is_identity()),
            _ => false,
        }
    }

    pub fn apply(&self, t: f64, x: &[f64]) -> Result<Vec<f64>> {
        match self {
            Motion::Identity { .. } => Ok(x.to_vec()),
            Motion::Wiggle { wiggle, z } => Ok(wiggle.apply(t, x, z)),
            Motion::Rotated { frame, inner } => {
                let inside = inner.apply(t, &frame.to_frame(x))?;
                Ok(frame.from_frame(&inside))
            }
            Motion::Composite { stages, .. } => {
                let mut y = x.to_vec();
                for stage in stages.iter().rev() {
                    y = stage.apply(t, &y)?;
                }
                Ok(y)
            }
        }
    }

    pub fn apply_inverse(&self, t: f64, y: &[f64]) -> Result<Vec<f64>> {
        match self {
            Motion::Identity { .. } => Ok(y.to_vec()),
            Motion::Wiggle { wiggle, z } => wiggle.apply_inverse(t, y, z),
            Motion::Rotated { frame, inner } => {
                let inside = inner.apply_inverse(t, &frame.to_frame(y))?;
                Ok(frame.from_frame(&inside))
            }
            Motion::Composite { stages, .. } => {
                let mut x = y.to_vec();
                for stage in stages {
                    x = stage.apply_inverse(t, &x)?;
                }
                Ok(x)
            }
        }
    }

    pub fn jet(&self, t: f64, x: &[f64], r: usize) -> Result<Jet<f64>> {
        match self {
            Motion::Identity { m } => {
                use crate::polyjet::poly::TruncatedPoly;
                let comps = (0..*m)
                    .map(|i| {
                        if r == 0 {
                            TruncatedPoly::constant(*m, 0, x[i])
                        } else {
                            TruncatedPoly::linear(*m, r, i, x[i])
                        }
                    })
                    .collect();
                Jet::new(x.to_vec(), comps)
            }
            Motion::Wiggle { wiggle, z } => wiggle.map_jet(t, x, z, r),
            Motion::Rotated { frame, inner } => {
                let into = frame.to_frame_jet(x, r);
                let mid = inner.jet(t, &into.value(), r)?;
                let out = frame.from_frame_jet(&mid.value(), r);
                let step = jet_compose(&mid, &split_components(&into))?;
                jet_compose(&out, &split_components(&step))
            }
            Motion::Composite { stages, .. } => {
                let mut jet = Motion::Identity { m: self.dim() }.jet(t, x, r)?;
                let mut point = x.to_vec();
                for stage in stages.iter().rev() {
                    let sj = stage.jet(t, &point, r)?;
                    point = sj.value();
                    jet = jet_compose(&sj, &split_components(&jet))?;
                }
                Ok(jet)
            }
        }
    }
}

/// A holonomic section pushed forward along a motion at `t = 1`:
/// `y -> jet of (h o F_1^{-1})` where `inner` is the jet field of `h`.
pub struct PushforwardField {
    pub inner: Arc<dyn JetField>,
    pub motion: Motion,
}

impl JetField for PushforwardField {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn len_out(&self) -> usize {
        self.inner.len_out()
    }
    fn jet(&self, y: &[f64], r: usize) -> Result<Jet<f64>> {
        let x = self.motion.apply_inverse(1.0, y)?;
        let inner_jet = self.inner.jet(&x, r)?;
        let fj = self.motion.jet(1.0, &x, r)?;
        let inv = jet_inverse(&fj)?;
        jet_compose(&inner_jet, &split_components(&inv))
    }
}

/// Pointwise sum of two jet fields.
pub struct SumField {
    pub a: Arc<dyn JetField>,
    pub b: Arc<dyn JetField>,
}

impl JetField for SumField {
    fn dim(&self) -> usize {
        self.a.dim()
    }
    fn len_out(&self) -> usize {
        self.a.len_out()
    }
    fn jet(&self, x: &[f64], r: usize) -> Result<Jet<f64>> {
        let ja = self.a.jet(x, r)?;
        let jb = self.b.jet(x, r)?;
        crate::polyjet::jet::jet_combine(&ja, &jb, &1.0, &1.0)
    }
}

/// A field conjugated by a frame: `x -> jet of (h o frame)` where `inner`
/// is the jet field of `h` in frame coordinates.
pub struct FramedField {
    pub inner: Arc<dyn JetField>,
    pub frame: Frame,
}

impl JetField for FramedField {
    fn dim(&self) -> usize {
        self.frame.dim()
    }
    fn len_out(&self) -> usize {
        self.inner.len_out()
    }
    fn jet(&self, x: &[f64], r: usize) -> Result<Jet<f64>> {
        let into = self.frame.to_frame_jet(x, r);
        let inner_jet = self.inner.jet(&into.value(), r)?;
        jet_compose(&inner_jet, &split_components(&into))
    }
}

/// Construction parameters echoed into every report.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ParamsReport {
    pub m: usize,
    pub n: usize,
    pub r: usize,
    pub k: usize,
    pub eps: f64,
    pub delta_requested: f64,
    pub delta_used: f64,
    pub amplitude_factor: f64,
    pub angle: f64,
    pub lambda: f64,
}

/// Grid measurements of the construction.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct MeasurementsReport {
    /// Two-point C^r norm of the input section.
    pub cr_norm: f64,
    /// Sup of the jet distance to sigma on the closeness region.
    pub c0_error: f64,
    /// `c0_error / (cr_norm * (eps + delta/eps))`, or the adjust analogue.
    pub c0_ratio: f64,
    /// Sup of the perp norm of sigma-hat over the domain.
    pub perp_sup: f64,
    /// `perp_sup / (cr_norm * delta/eps)`, or the adjust analogue.
    pub perp_ratio: f64,
    /// Sup of the (r-1)-jet of sigma-hat (orchestration contract).
    pub lower_jet_sup: Option<f64>,
    /// Holonomy defect of sigma-hat at the measurement grid and its
    /// half-step refinement.
    pub holonomy_defect_coarse: Option<f64>,
    pub holonomy_defect_fine: Option<f64>,
}

/// Structural checks; these gate the process exit status.
#[derive(Debug, Clone, Serialize, Deserialize, Default)]
pub struct ChecksReport {
    /// Max |sigma-hat| over sampled Op(boundary) points (exact 0 expected).
    pub boundary_section_max: f64,
    /// Max |F_t(x) - x| over sampled Op(boundary) points (exact 0 expected).
    pub boundary_isotopy_max: f64,
    /// Max deviation of the first row of dF_t from (1, 0, ..., 0).
    pub v_invariance_max: f64,
    /// Max jet distance between the glued local definitions across
    /// rectangle boundaries inside U.
    pub gluing_residual: f64,
    /// Grid min of `1 + d(shift)/dx_m` (positive certifies injectivity).
    pub injectivity_min: f64,
    /// Max |F_t(x) - x| over the domain (must stay below eps).
    pub isotopy_c0_dist: f64,
    /// Set when a refinement doubling moved some reported max by more
    /// than the stability tolerance.
    pub under_resolved: bool,
}

impl ChecksReport {
    pub fn structurally_sound(&self, eps: f64) -> bool {
        self.boundary_section_max < 1e-9
            && self.boundary_isotopy_max == 0.0
            && self.v_invariance_max == 0.0
            && self.gluing_residual < 1e-8
            && self.injectivity_min > 0.0
            && (eps == 0.0 || self.isotopy_c0_dist < eps)
    }
}

/// The output of one holonomic-approximation construction.
pub struct ApproximationResult {
    pub params: ParamsReport,
    pub measurements: MeasurementsReport,
    pub checks: ChecksReport,
    /// Which construction produced the result: "adjust", "transverse",
    /// "transverse-rotated", "top-order", "reduce".
    pub path: String,
    /// The holonomic section sigma-hat = j^r(f), evaluable anywhere.
    pub sigma_hat: Arc<dyn JetField>,
    pub motion: Motion,
}

impl ApproximationResult {
    pub fn report_json(&self) -> serde_json::Value {
        serde_json::json!({
            "params": self.params,
            "measurements": self.measurements,
            "checks": self.checks,
            "path": self.path,
        })
    }
}
