//! Exact quantum period finding by amplitude amplification, simulated on a
//! sparse qudit statevector, and the multiparty LCM, GCD, private set union
//! and private set intersection protocols built on top of it.

pub mod amplify;
pub mod error;
pub mod factorint;
pub mod mpqc;
pub mod periodfind;
pub mod qstate;

pub use error::{Error, Result};
pub use qstate::{ClassicalOracle, Marginal, RegisterLayout, SparseState};
