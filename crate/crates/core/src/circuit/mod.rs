//! Gate-level model of the two-charger protocol on the register `[D, Q, C1, C2]`.
//!
//! Qubit 0 is the most significant bit of a basis index, matching the
//! subsystem layout used by [`protocol`](crate::protocol).

mod qasm;
mod shots;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ModelParams;
use crate::qmat::{DenseOperator, SubsystemLayout, C64};

pub use qasm::{emit_qasm, parse_qasm};
pub use shots::{
    estimate, estimate_from_probabilities, outcome_probabilities, read_shot_records, sample, standard_errors,
    write_shot_records,
    BatteryOutcome, Counts, Estimate, OutcomeProbabilities, ShotRecord, ShotResult, StandardErrors, SwitchOutcome,
};

pub const NUM_QUBITS: usize = 4;
pub const QUBIT_LABELS: [&str; NUM_QUBITS] = ["D", "Q", "C1", "C2"];
pub const D: usize = 0;
pub const Q: usize = 1;
pub const C1: usize = 2;
pub const C2: usize = 3;

const REGISTER_DIM: usize = 1 << NUM_QUBITS;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GateKind {
    H,
    X,
    Cz,
    Xx,
    Yy,
    Cp,
    Rz,
}

impl GateKind {
    pub fn arity(self) -> usize {
        match self {
            GateKind::H | GateKind::X | GateKind::Rz => 1,
            GateKind::Cz | GateKind::Xx | GateKind::Yy | GateKind::Cp => 2,
        }
    }

    pub fn has_angle(self) -> bool {
        matches!(self, GateKind::Xx | GateKind::Yy | GateKind::Cp | GateKind::Rz)
    }
}

/// One gate. For two-qubit gates the first qubit is the more significant
/// factor of [`Gate::matrix`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gate {
    kind: GateKind,
    qubits: [usize; 2],
    arity: usize,
    angle: Option<f64>,
}

impl Gate {
    pub fn new(kind: GateKind, qubits: &[usize], angle: Option<f64>) -> Result<Self> {
        if qubits.len() != kind.arity() {
            return Err(Error::Circuit(format!("{kind:?} acts on {} qubit(s), got {}", kind.arity(), qubits.len())));
        }
        if qubits.len() == 2 && qubits[0] == qubits[1] {
            return Err(Error::Circuit(format!("{kind:?} on repeated qubit {}", qubits[0])));
        }
        match (kind.has_angle(), angle) {
            (true, Some(a)) if a.is_finite() => {}
            (true, Some(_)) => return Err(Error::NonFinite),
            (true, None) => return Err(Error::Circuit(format!("{kind:?} needs an angle"))),
            (false, Some(_)) => return Err(Error::Circuit(format!("{kind:?} takes no angle"))),
            (false, None) => {}
        }
        let mut q = [0; 2];
        q[..qubits.len()].copy_from_slice(qubits);
        Ok(Self { kind, qubits: q, arity: qubits.len(), angle })
    }

    fn fixed(kind: GateKind, qubits: &[usize], angle: Option<f64>) -> Self {
        Self::new(kind, qubits, angle).expect("well-formed gate")
    }

    pub fn h(q: usize) -> Self {
        Self::fixed(GateKind::H, &[q], None)
    }

    pub fn x(q: usize) -> Self {
        Self::fixed(GateKind::X, &[q], None)
    }

    pub fn cz(a: usize, b: usize) -> Self {
        Self::fixed(GateKind::Cz, &[a, b], None)
    }

    pub fn xx(theta: f64, a: usize, b: usize) -> Self {
        Self::fixed(GateKind::Xx, &[a, b], Some(theta))
    }

    pub fn yy(theta: f64, a: usize, b: usize) -> Self {
        Self::fixed(GateKind::Yy, &[a, b], Some(theta))
    }

    pub fn cp(theta: f64, a: usize, b: usize) -> Self {
        Self::fixed(GateKind::Cp, &[a, b], Some(theta))
    }

    pub fn rz(theta: f64, q: usize) -> Self {
        Self::fixed(GateKind::Rz, &[q], Some(theta))
    }

    pub fn kind(&self) -> GateKind {
        self.kind
    }

    pub fn qubits(&self) -> &[usize] {
        &self.qubits[..self.arity]
    }

    pub fn angle(&self) -> Option<f64> {
        self.angle
    }

    /// `XX(θ) = exp(−iθ/2 X⊗X)`, `YY(θ) = exp(−iθ/2 Y⊗Y)`, `CP(θ) = diag(1,1,1,e^{iθ})`,
    /// `CZ = diag(1,1,1,−1)`, `RZ(θ) = diag(e^{−iθ/2}, e^{iθ/2})`.
    pub fn matrix(&self) -> DMatrix<C64> {
        let z = C64::new(0.0, 0.0);
        let one = C64::new(1.0, 0.0);
        let a = self.angle.unwrap_or(0.0);
        let (c, s) = ((a / 2.0).cos(), (a / 2.0).sin());
        let cc = C64::new(c, 0.0);
        let mis = C64::new(0.0, -s);
        match self.kind {
            GateKind::H => {
                let r = C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                DMatrix::from_row_slice(2, 2, &[r, r, r, -r])
            }
            GateKind::X => DMatrix::from_row_slice(2, 2, &[z, one, one, z]),
            GateKind::Rz => DMatrix::from_diagonal(&DVector::from_vec(vec![
                C64::from_polar(1.0, -a / 2.0),
                C64::from_polar(1.0, a / 2.0),
            ])),
            GateKind::Cz => DMatrix::from_diagonal(&DVector::from_vec(vec![one, one, one, -one])),
            GateKind::Cp => DMatrix::from_diagonal(&DVector::from_vec(vec![one, one, one, C64::from_polar(1.0, a)])),
            #[rustfmt::skip]
            GateKind::Xx => DMatrix::from_row_slice(4, 4, &[
                cc, z, z, mis,
                z, cc, mis, z,
                z, mis, cc, z,
                mis, z, z, cc,
            ]),
            #[rustfmt::skip]
            GateKind::Yy => DMatrix::from_row_slice(4, 4, &[
                cc, z, z, -mis,
                z, cc, mis, z,
                z, mis, cc, z,
                -mis, z, z, cc,
            ]),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Section {
    Preparation,
    Charging,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Basis {
    X,
    Z,
}

/// Gate list split into state preparation and the charging unitary.
/// Measurement is fixed: `D` in the x-basis, `Q` in the z-basis.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct QuantumCircuit {
    preparation: Vec<Gate>,
    charging: Vec<Gate>,
}

impl QuantumCircuit {
    pub const MEASUREMENTS: [(usize, Basis); 2] = [(D, Basis::X), (Q, Basis::Z)];

    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, section: Section, gate: Gate) -> Result<()> {
        if let Some(&q) = gate.qubits().iter().find(|&&q| q >= NUM_QUBITS) {
            return Err(Error::Circuit(format!("qubit {q} outside a {NUM_QUBITS}-qubit register")));
        }
        match section {
            Section::Preparation => self.preparation.push(gate),
            Section::Charging => self.charging.push(gate),
        }
        Ok(())
    }

    pub fn preparation(&self) -> &[Gate] {
        &self.preparation
    }

    pub fn charging(&self) -> &[Gate] {
        &self.charging
    }

    pub fn gates(&self) -> impl Iterator<Item = &Gate> {
        self.preparation.iter().chain(&self.charging)
    }

    pub fn len(&self) -> usize {
        self.preparation.len() + self.charging.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// `(θ, φ) = (ωλt/2, ωt/2)`.
pub fn angles_of_time(params: &ModelParams, t: f64) -> (f64, f64) {
    let phi = params.omega() * t / 2.0;
    (phi * params.lambda(), phi)
}

/// Controlled pair unitary on `(Q, charger)`, active when `D = control`.
fn charging_block(gates: &mut Vec<Gate>, control: usize, charger: usize, theta: f64, phi: f64) {
    if control == 0 {
        gates.push(Gate::x(D));
    }
    // phase φ/2 − φ·(n_Q + n_C), relative to the inactive branch
    gates.push(Gate::cp(-phi, D, Q));
    gates.push(Gate::cp(-phi, D, charger));
    gates.push(Gate::rz(phi / 2.0, D));
    // exchange: the CZ pair flips the sign of the first half-rotation on the active branch only
    gates.push(Gate::cz(D, Q));
    gates.push(Gate::xx(-theta / 2.0, Q, charger));
    gates.push(Gate::yy(-theta / 2.0, Q, charger));
    gates.push(Gate::cz(D, Q));
    gates.push(Gate::xx(theta / 2.0, Q, charger));
    gates.push(Gate::yy(theta / 2.0, Q, charger));
    if control == 0 {
        gates.push(Gate::x(D));
    }
}

/// Two-charger circuit. Branch `D = 0` charges C1 then C2, branch `D = 1` charges C2 then C1.
pub fn build_ico_circuit(theta: f64, phi: f64) -> QuantumCircuit {
    let preparation = vec![Gate::h(D), Gate::x(C1), Gate::x(C2)];
    let mut charging = Vec::with_capacity(40);
    charging_block(&mut charging, 0, C1, theta, phi);
    charging_block(&mut charging, 1, C2, theta, phi);
    charging_block(&mut charging, 0, C2, theta, phi);
    charging_block(&mut charging, 1, C1, theta, phi);
    QuantumCircuit { preparation, charging }
}

fn apply_gate(state: &mut DVector<C64>, gate: &Gate) {
    let m = gate.matrix();
    let mask = |q: usize| 1usize << (NUM_QUBITS - 1 - q);
    match *gate.qubits() {
        [q] => {
            let b = mask(q);
            for i in (0..REGISTER_DIM).filter(|i| i & b == 0) {
                let (a0, a1) = (state[i], state[i | b]);
                state[i] = m[(0, 0)] * a0 + m[(0, 1)] * a1;
                state[i | b] = m[(1, 0)] * a0 + m[(1, 1)] * a1;
            }
        }
        [qa, qb] => {
            let (ba, bb) = (mask(qa), mask(qb));
            for i in (0..REGISTER_DIM).filter(|i| i & (ba | bb) == 0) {
                let idx = [i, i | bb, i | ba, i | ba | bb];
                let old = idx.map(|k| state[k]);
                for (r, &k) in idx.iter().enumerate() {
                    state[k] = (0..4).map(|c| m[(r, c)] * old[c]).sum();
                }
            }
        }
        _ => unreachable!("gates act on one or two qubits"),
    }
}

fn register_layout() -> SubsystemLayout {
    SubsystemLayout::protocol(2)
}

fn section_unitary(gates: &[Gate]) -> DenseOperator {
    let mut u = DMatrix::from_element(REGISTER_DIM, REGISTER_DIM, C64::new(0.0, 0.0));
    for col in 0..REGISTER_DIM {
        let mut v = DVector::from_element(REGISTER_DIM, C64::new(0.0, 0.0));
        v[col] = C64::new(1.0, 0.0);
        for g in gates {
            apply_gate(&mut v, g);
        }
        u.set_column(col, &v);
    }
    DenseOperator::new(register_layout(), u).expect("finite gates")
}

/// Unitary of the charging section on the `[D, Q, C1, C2]` layout.
pub fn charging_unitary(circuit: &QuantumCircuit) -> DenseOperator {
    section_unitary(circuit.charging())
}

/// Unitary of the whole gate list, preparation included.
pub fn circuit_unitary(circuit: &QuantumCircuit) -> DenseOperator {
    section_unitary(&circuit.gates().copied().collect::<Vec<_>>())
}

/// Global depolarizing noise applied to the final register state.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct NoiseSpec {
    depolarizing_p: f64,
}

impl NoiseSpec {
    pub fn new(depolarizing_p: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&depolarizing_p) {
            return Err(Error::InvalidParams(format!("depolarizing probability {depolarizing_p} outside [0, 1]")));
        }
        Ok(Self { depolarizing_p })
    }

    pub fn ideal() -> Self {
        Self::default()
    }

    pub fn depolarizing_p(&self) -> f64 {
        self.depolarizing_p
    }
}

/// Final state from `|0000⟩`: `(1−p)|ψ⟩⟨ψ| + p·I/16`.
pub fn simulate(circuit: &QuantumCircuit, noise: NoiseSpec) -> DenseOperator {
    let mut psi = DVector::from_element(REGISTER_DIM, C64::new(0.0, 0.0));
    psi[0] = C64::new(1.0, 0.0);
    for g in circuit.gates() {
        apply_gate(&mut psi, g);
    }
    let p = noise.depolarizing_p;
    let mut rho = &psi * psi.adjoint() * C64::new(1.0 - p, 0.0);
    for k in 0..REGISTER_DIM {
        rho[(k, k)] += C64::new(p / REGISTER_DIM as f64, 0.0);
    }
    DenseOperator::new(register_layout(), rho).expect("finite state")
}
