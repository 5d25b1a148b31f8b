//! Numerical tolerances shared by every invariant check in the crate.

/// Named tolerances. All values are absolute and measured in the max-entry norm
/// unless noted otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// 2-norm of a normalized state vector.
    pub norm: f64,
    /// `A - A†` for Hermitian operators.
    pub hermitian: f64,
    /// `U†U - I` for unitaries.
    pub unitary: f64,
    /// Smallest eigenvalue accepted for a density operator.
    pub psd: f64,
    /// Trace of a normalized density operator.
    pub trace: f64,
    /// `P² - P` and `P - P†` for projectors.
    pub projector: f64,
    /// `H - V diag(λ) V†` after diagonalization.
    pub eig_reconstruction: f64,
    /// Stored energy (units of ħω) below which an efficiency is undefined.
    pub energy_threshold: f64,
    /// Ergotropy (units of ħω) at or below which a state is reported passive.
    pub passivity: f64,
    /// Outcome probability below which a conditional state is not normalized.
    pub min_weight: f64,
}

pub const TOL: Tolerances = Tolerances {
    norm: 1e-12,
    hermitian: 1e-12,
    unitary: 1e-10,
    psd: 1e-12,
    trace: 1e-12,
    projector: 1e-10,
    eig_reconstruction: 1e-10,
    energy_threshold: 1e-9,
    passivity: 1e-12,
    min_weight: 1e-14,
};
