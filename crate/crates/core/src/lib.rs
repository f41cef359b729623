//! Vector autoregressions and structural analysis.
//!
//! Reduced-form estimation, four identification schemes, impulse responses,
//! variance and historical decompositions, block-bootstrap bands, local projections,
//! error-correction algebra, robust trimmed fits and structural-break diagnostics.

pub mod bootstrap;
pub mod breaks;
pub mod cli;
pub mod data;
pub mod dynamics;
pub mod error;
pub mod ident;
pub mod lagselect;
pub mod linalg;
pub mod localproj;
pub mod robust;
pub mod simulate;
pub mod stats;
pub mod var;
pub mod vecm;

pub use data::{load_csv, transform, TimeSeriesDataset, Transform, TransformSpec};
pub use error::{Error, Result};
pub use stats::TestResult;
pub use var::{fit_var, VarModel};
