//! Battery and charger Hamiltonians and the two-body charging unitary.
//!
//! Two-level systems use `|g⟩ = index 0` and `|e⟩ = index 1`, matching the
//! computational mapping of the gate-level circuit. Pauli operators follow the
//! energy-basis convention `σ_z = |e⟩⟨e| - |g⟩⟨g|`, `σ_y = -i|e⟩⟨g| + i|g⟩⟨e|`.
//! `ħ = 1` throughout.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::qmat::{self, charger_label, DenseOperator, SubsystemLayout, C64};

pub const HBAR: f64 = 1.0;
pub const GROUND: usize = 0;
pub const EXCITED: usize = 1;

/// Physical parameters shared by every engine.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModelParams {
    n: usize,
    omega: f64,
    lambda: f64,
}

impl ModelParams {
    pub fn new(n: usize, omega: f64, lambda: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::InvalidParams(format!("need at least 2 chargers, got {n}")));
        }
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::InvalidParams(format!("omega must be positive, got {omega}")));
        }
        if !(lambda.is_finite() && lambda > 0.0) {
            return Err(Error::InvalidParams(format!("lambda must be positive, got {lambda}")));
        }
        Ok(Self { n, omega, lambda })
    }

    /// Number of chargers.
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    /// Energy quantum `ħω` used as the unit of every reported energy.
    pub fn energy_unit(&self) -> f64 {
        HBAR * self.omega
    }

    /// Duration of each pairwise interaction for total charging time `t`.
    pub fn step_time(&self, t: f64) -> f64 {
        t / self.n as f64
    }
}

fn qubit(label: &str) -> SubsystemLayout {
    SubsystemLayout::single(label, 2)
}

fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

pub fn sigma_z(label: &str) -> DenseOperator {
    DenseOperator::from_real(qubit(label), &[-1.0, 0.0, 0.0, 1.0]).expect("2x2")
}

pub fn sigma_x(label: &str) -> DenseOperator {
    DenseOperator::from_real(qubit(label), &[0.0, 1.0, 1.0, 0.0]).expect("2x2")
}

pub fn sigma_y(label: &str) -> DenseOperator {
    // rows/cols ordered (g, e): ⟨e|σ_y|g⟩ = -i, ⟨g|σ_y|e⟩ = +i
    let i = C64::new(0.0, 1.0);
    DenseOperator::from_fn(qubit(label), |r, col| match (r, col) {
        (GROUND, EXCITED) => i,
        (EXCITED, GROUND) => -i,
        _ => c(0.0),
    })
}

/// `|g⟩⟨g|` on the battery.
pub fn ground_density() -> DenseOperator {
    DenseOperator::from_real(qubit("Q"), &[1.0, 0.0, 0.0, 0.0]).expect("2x2")
}

/// `|e⟩⟨e|` on the battery.
pub fn excited_density() -> DenseOperator {
    DenseOperator::from_real(qubit("Q"), &[0.0, 0.0, 0.0, 1.0]).expect("2x2")
}

/// `H_Q = (ħω/2) σ_z`.
pub fn battery_hamiltonian(params: &ModelParams) -> DenseOperator {
    sigma_z("Q").scale(c(params.energy_unit() / 2.0))
}

/// Layout `[Q, C]` of a single battery-charger pair.
pub fn pair_layout() -> SubsystemLayout {
    SubsystemLayout::new([("Q", 2), ("C", 2)]).expect("distinct labels")
}

/// `H_l = (ħω/2)(σ_z^l + 1) + (ħω/2)σ_z^Q + (ħωλ/2)(σ_x^Q σ_x^l + σ_y^Q σ_y^l)`
/// on `[Q, C]`.
pub fn pair_hamiltonian(params: &ModelParams) -> DenseOperator {
    use qmat::Tensor;
    let layout = pair_layout();
    let w = params.energy_unit();
    let id_q = DenseOperator::identity(qubit("Q"));
    let id_c = DenseOperator::identity(qubit("C"));
    let charger = id_q.tensor(&sigma_z("C").add(&id_c).expect("2x2")).scale(c(w / 2.0));
    let battery = sigma_z("Q").tensor(&id_c).scale(c(w / 2.0));
    let exchange = sigma_x("Q")
        .tensor(&sigma_x("C"))
        .add(&sigma_y("Q").tensor(&sigma_y("C")))
        .expect("4x4")
        .scale(c(w * params.lambda / 2.0));
    let total = charger.add(&battery).and_then(|h| h.add(&exchange)).expect("4x4");
    total.relabel(layout).expect("same dims")
}

/// Closed-form pair evolution `U_l(t_l)` on `[Q, C]`: the free phases
/// `e^{-3iωt_l/2}`, `e^{-iωt_l/2}`, `e^{+iωt_l/2}` on the excitation sectors
/// and a `cos / -i sin` rotation by `ωλt_l` inside the single-excitation
/// sector.
pub fn pair_unitary(params: &ModelParams, t_l: f64) -> DenseOperator {
    let w = params.omega;
    let (sin, cos) = (w * params.lambda * t_l).sin_cos();
    let single = C64::from_polar(1.0, -w * t_l / 2.0);
    let double = C64::from_polar(1.0, -3.0 * w * t_l / 2.0);
    let vacuum = C64::from_polar(1.0, w * t_l / 2.0);
    let minus_i_sin = C64::new(0.0, -sin);

    let idx = |q: usize, ch: usize| 2 * q + ch;
    let ee = idx(EXCITED, EXCITED);
    let eg = idx(EXCITED, GROUND);
    let ge = idx(GROUND, EXCITED);
    let gg = idx(GROUND, GROUND);

    let mut u = DenseOperator::zeros(pair_layout()).into_matrix();
    u[(ee, ee)] = double;
    u[(eg, eg)] = single * cos;
    u[(ge, eg)] = single * minus_i_sin;
    u[(eg, ge)] = single * minus_i_sin;
    u[(ge, ge)] = single * cos;
    u[(gg, gg)] = vacuum;
    DenseOperator::new(pair_layout(), u).expect("finite 4x4")
}

/// Extend a `[Q, C]` operator to `layout`, acting on `(Q, C_{charger_index})`.
pub fn embed_pair(op: &DenseOperator, layout: &SubsystemLayout, charger_index: usize) -> Result<DenseOperator> {
    let local = relabel_pair(op, layout, charger_index)?;
    qmat::embed(&local, layout)
}

/// The `[Q, C]` operator relabeled as `[Q, C_l]`, ready for
/// [`qmat::PureState::apply_local`] on `layout`.
pub fn relabel_pair(op: &DenseOperator, layout: &SubsystemLayout, charger_index: usize) -> Result<DenseOperator> {
    let n_chargers = layout.labels().filter(|l| l.starts_with('C')).count();
    if charger_index == 0 || charger_index > n_chargers {
        return Err(Error::IndexOutOfRange { index: charger_index, max: n_chargers });
    }
    let target = SubsystemLayout::new([("Q".to_string(), 2), (charger_label(charger_index), 2)])?;
    op.relabel(target)
}

/// Excitation-number operator `|e⟩⟨e|_Q ⊗ 1 + 1 ⊗ |e⟩⟨e|_C` on `[Q, C]`.
pub fn pair_excitation_number() -> DenseOperator {
    DenseOperator::diagonal(pair_layout(), &[c(0.0), c(1.0), c(1.0), c(2.0)]).expect("4 entries")
}
