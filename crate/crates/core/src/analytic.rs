//! Closed-form amplitudes, interference term and energy figures for the
//! cyclic protocol. Independent of the matrix pipeline in `protocol`/`thermo`
//! and used as its oracle.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{ModelParams, EXCITED, GROUND};
use crate::qmat::{PureState, SubsystemLayout, C64};
use crate::thermo::efficiency;

/// `α_0 … α_N` at time `t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlphaCoefficients {
    pub t: f64,
    pub alpha: Vec<Complex64>,
}

impl AlphaCoefficients {
    pub fn n(&self) -> usize {
        self.alpha.len() - 1
    }

    /// `Σ_{u≥1} |α_u|²`.
    pub fn excited_weight(&self) -> f64 {
        self.alpha[1..].iter().map(|a| a.norm_sqr()).sum()
    }
}

/// Closed-form figures at one time. Energies are in units of ħω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClosedFormReport {
    pub t: f64,
    pub c1: f64,
    pub p1: f64,
    pub e: f64,
    pub w_ico: f64,
    pub w_dco: f64,
    pub p_ico: Option<f64>,
    pub p_dco: Option<f64>,
    pub passive_k1: bool,
    pub passive_dco: bool,
}

fn mixing_angle(params: &ModelParams, t: f64) -> f64 {
    params.omega() * params.lambda() * t / params.n() as f64
}

pub fn alpha_coeffs(params: &ModelParams, t: f64) -> AlphaCoefficients {
    let n = params.n();
    let x = mixing_angle(params, t);
    let phase = params.omega() * t / (2.0 * n as f64);
    // one step leaving Q in g, one swap step, one step with Q and C both excited
    let stay = Complex64::from_polar(1.0, -phase) * x.cos();
    let swap = Complex64::from_polar(1.0, -phase) * Complex64::new(0.0, -x.sin());
    let both = Complex64::from_polar(1.0, -3.0 * phase);

    let mut alpha = Vec::with_capacity(n + 1);
    alpha.push(stay.powu(n as u32));
    for j in 1..=n {
        alpha.push(both.powu((n - j) as u32) * swap * stay.powu((j - 1) as u32));
    }
    AlphaCoefficients { t, alpha }
}

/// 1-based charger that carries `α_i` in branch `j`.
pub fn charger_of(n: usize, j: usize, i: usize) -> usize {
    (j - 1 + i - 1) % n + 1
}

/// 1-based partner index `v ⊕ u` in the interference sum, wrapping cyclically in `1..=N`.
pub fn partner_index(n: usize, v: usize, u: usize) -> usize {
    (v - 1 + u) % n + 1
}

/// `|ψ_j(t)⟩` on `[Q, C1..CN]` built from the α-coefficients.
pub fn branch_state(params: &ModelParams, t: f64, j: usize) -> Result<PureState> {
    let n = params.n();
    if j == 0 || j > n {
        return Err(Error::IndexOutOfRange { index: j, max: n });
    }
    let alpha = alpha_coeffs(params, t).alpha;
    let layout = SubsystemLayout::battery_chargers(n);
    let mut amps = nalgebra::DVector::from_element(layout.total_dim(), C64::new(0.0, 0.0));

    let mut digits = vec![EXCITED; n + 1];
    digits[0] = GROUND;
    amps[layout.encode(&digits)] = alpha[0];
    for (i, a) in alpha.iter().enumerate().skip(1) {
        let mut digits = vec![EXCITED; n + 1];
        digits[charger_of(n, j, i)] = GROUND;
        amps[layout.encode(&digits)] = *a;
    }
    PureState::new(layout, amps)
}

/// `C = (2/N) Σ_{u=1}^{N−1} (N−u) Re Σ_{v=1}^{N} α_v α*_{v⊕u}`.
pub fn interference_term(params: &ModelParams, t: f64) -> f64 {
    interference_from(&alpha_coeffs(params, t))
}

fn interference_from(a: &AlphaCoefficients) -> f64 {
    let n = a.n();
    let alpha = &a.alpha;
    let mut total = 0.0;
    for u in 1..n {
        let inner: Complex64 = (1..=n).map(|v| alpha[v] * alpha[partner_index(n, v, u)].conj()).sum();
        total += (n - u) as f64 * inner.re;
    }
    2.0 * total / n as f64
}

pub fn closed_form_report(params: &ModelParams, t: f64) -> ClosedFormReport {
    let n = params.n() as f64;
    let a = alpha_coeffs(params, t);
    let c1 = interference_from(&a);
    let g1 = a.alpha[0].norm_sqr();
    let s = a.excited_weight();
    let e1 = (c1 + s) / n;

    let cos2n = mixing_angle(params, t).cos().powi(2 * params.n() as i32);
    let e = 1.0 - cos2n;
    let active = 1.0 - 2.0 * cos2n;

    let passive_k1 = g1 >= e1;
    let w_ico = if passive_k1 { (n - 1.0) / n * s - c1 / n } else { active };
    let passive_dco = cos2n >= 0.5;
    let w_dco = if passive_dco { 0.0 } else { active };

    ClosedFormReport {
        t,
        c1,
        p1: g1 + e1,
        e,
        w_ico,
        w_dco,
        p_ico: efficiency(e, w_ico),
        p_dco: efficiency(e, w_dco),
        passive_k1,
        passive_dco,
    }
}

/// Smallest `t > 0` with `cos^{2N}(ωλt/N) = 1/2`; the DCO ergotropy vanishes on `(0, t*)`.
pub fn dco_zero_window(params: &ModelParams) -> f64 {
    let n = params.n() as f64;
    n / (params.omega() * params.lambda()) * 2f64.powf(-1.0 / (2.0 * n)).acos()
}
