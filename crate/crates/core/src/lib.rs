//! Cyclic indefinite-causal-order charging of a qubit battery.
//!
//! `protocol` and `thermo` simulate the full switch + battery + charger
//! register; `analytic` evaluates the same quantities in closed form;
//! `circuit` realizes the two-charger case as gates with shot sampling.

pub mod analytic;
pub mod circuit;
pub mod error;
pub mod model;
pub mod protocol;
pub mod qmat;
pub mod thermo;
pub mod tol;

pub use analytic::{alpha_coeffs, closed_form_report, dco_zero_window, AlphaCoefficients, ClosedFormReport};
pub use circuit::{NoiseSpec, QuantumCircuit, ShotResult};
pub use error::{Error, Result};
pub use model::ModelParams;
pub use protocol::{run_ico, ProtocolResult};
pub use qmat::{DenseOperator, PureState, SubsystemLayout, C64};
pub use thermo::EnergyReport;
pub use tol::TOL;
