//! Structural-break diagnostics: CUSUM tests for covariance change and block-segmentation
//! break detection with information-criterion screening.

pub mod tv;
pub mod cusum;
pub mod bss;

pub use bss::{bss_detect, detect_breaks, lic_screen, BreakOptions, BreakReport};
pub use cusum::{cusum_covariance_test, CusumResult, CusumVariant};
