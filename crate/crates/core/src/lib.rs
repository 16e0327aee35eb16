pub mod adversarial;
pub mod creal;
pub mod halting;
pub mod nn;
pub mod qcbp;
pub mod rational;

pub use rational::{l1_norm_real, l2_norm_sq, rat_cmp, ArithError, ComplexRational, FieldOp, Rational, RationalMatrix, RationalVector};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");
