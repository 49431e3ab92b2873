//! Multi-index combinatorics, truncated Taylor arithmetic, jets and their
//! norms, expression fields and jet sections.

pub mod expr;
pub mod jet;
pub mod multiindex;
pub mod poly;
pub mod scalar;
pub mod section;

pub use expr::{taylor_evaluate, Expr};
pub use jet::{jet_combine, jet_compose, jet_distance_c0, jet_norms, jet_project, Jet, JetNorms};
pub use multiindex::{enumerate_multiindices, MultiIndex};
pub use poly::TruncatedPoly;
pub use scalar::{Rat, Scalar};
pub use section::{
    holonomy_defect, section_cr_norm, DefectReport, ExprField, JetField, JetSection,
    SampledJets, SectionGenerator,
};
