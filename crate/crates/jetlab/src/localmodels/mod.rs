//! Explicit constructions: cutoff profiles, the wiggle isotopy, the
//! transversality adjustment, the transverse local model and the induction
//! over primitive summands.

pub mod adjust;
pub mod profiles;
pub mod result;
pub mod transverse;
pub mod wiggle;

pub use adjust::{transversality_adjust, AdjustOptions};
pub use transverse::{
    parametric_transverse_approximate, transverse_approximate, ParametricResult,
    TransverseField, TransverseOptions,
};
pub use profiles::{Profile, SmoothStep};
pub use result::{
    ApproximationResult, ChecksReport, Frame, MeasurementsReport, Motion, ParamsReport,
    PushforwardField, SumField,
};
pub use wiggle::{build_wiggle_isotopy, WiggleIsotopy};
