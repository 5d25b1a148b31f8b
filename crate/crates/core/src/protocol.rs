//! Switch-controlled charging: the total unitary, the joint input, the switch
//! measurement and the conditional battery states for ICO and DCO.
//!
//! The joint evolution is pure, so the register is simulated as a state
//! vector; density operators appear only after tracing out the switch and the
//! chargers.

use crate::error::{Error, Result};
use crate::model::{self, ModelParams, EXCITED, GROUND};
use crate::qmat::{DenseOperator, PureState, SubsystemLayout, C64, ZERO};
use crate::tol::TOL;

/// Charging sequence selected by switch state `|j⟩`: chargers
/// `(j, j+1, ..., N, 1, ..., j-1)`, first entry applied first.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CyclicOrder {
    j: usize,
    sequence: Vec<usize>,
}

impl CyclicOrder {
    pub fn new(n: usize, j: usize) -> Result<Self> {
        if j == 0 || j > n {
            return Err(Error::IndexOutOfRange { index: j, max: n });
        }
        let sequence = (0..n).map(|k| (j - 1 + k) % n + 1).collect();
        Ok(Self { j, sequence })
    }

    pub fn j(&self) -> usize {
        self.j
    }

    pub fn sequence(&self) -> &[usize] {
        &self.sequence
    }
}

/// `V_j(∏ U_l(t/N))` on `[Q, C1..CN]` as an explicit matrix.
pub fn branch_unitary(params: &ModelParams, t: f64, j: usize) -> Result<DenseOperator> {
    let order = CyclicOrder::new(params.n(), j)?;
    let layout = SubsystemLayout::battery_chargers(params.n());
    let u = model::pair_unitary(params, params.step_time(t));
    let mut total = DenseOperator::identity(layout.clone());
    for &l in order.sequence() {
        total = model::embed_pair(&u, &layout, l)?.compose(&total)?;
    }
    Ok(total)
}

/// `Σ_j |j⟩⟨j|_D ⊗ V_j(∏ U_l(t/N))` on `[D, Q, C1..CN]`.
pub fn total_unitary(params: &ModelParams, t: f64) -> DenseOperator {
    let n = params.n();
    let block = 1 << (n + 1);
    let mut m = DenseOperator::zeros(SubsystemLayout::protocol(n)).into_matrix();
    for j in 1..=n {
        let b = branch_unitary(params, t, j).expect("j in range");
        let offset = (j - 1) * block;
        m.view_mut((offset, offset), (block, block)).copy_from(b.matrix());
    }
    DenseOperator::new(SubsystemLayout::protocol(n), m).expect("finite")
}

/// `|g⟩_Q ⊗ |e⟩^{⊗N}` on `[Q, C1..CN]`.
pub fn battery_chargers_input(params: &ModelParams) -> PureState {
    let n = params.n();
    let mut digits = vec![EXCITED; n + 1];
    digits[0] = GROUND;
    PureState::basis(SubsystemLayout::battery_chargers(n), &digits).expect("valid digits")
}

/// `(Σ_m |m⟩_D)/√N ⊗ |g⟩_Q ⊗ |e⟩^{⊗N}`.
pub fn initial_state(params: &ModelParams) -> PureState {
    let n = params.n();
    let layout = SubsystemLayout::protocol(n);
    let inner = battery_chargers_input(params);
    let block = inner.layout().total_dim();
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let mut amps = nalgebra::DVector::from_element(layout.total_dim(), ZERO);
    for m in 0..n {
        for (k, a) in inner.amplitudes().iter().enumerate() {
            amps[m * block + k] = a * amp;
        }
    }
    PureState::new(layout, amps).expect("unit norm")
}

/// `Π_{k=1} = (1/N) Σ_{m,n} |m⟩⟨n|_D`.
pub fn switch_projector(n: usize) -> DenseOperator {
    assert!(n >= 2, "switch needs at least two levels");
    let v = C64::new(1.0 / n as f64, 0.0);
    DenseOperator::from_fn(SubsystemLayout::single("D", n), |_, _| v)
}

/// Battery-charger state after the single sequence `j`, `|ψ_j(t)⟩`.
pub fn evolve_branch(params: &ModelParams, t: f64, j: usize) -> Result<PureState> {
    let order = CyclicOrder::new(params.n(), j)?;
    let mut psi = battery_chargers_input(params);
    let u = model::pair_unitary(params, params.step_time(t));
    for &l in order.sequence() {
        let local = model::relabel_pair(&u, psi.layout(), l)?;
        psi = psi.apply_local(&local)?;
    }
    Ok(psi)
}

/// `U_tot |in⟩`, assembled branch by branch (`U_tot` is block diagonal in D).
pub fn evolved_state(params: &ModelParams, t: f64) -> PureState {
    let n = params.n();
    let layout = SubsystemLayout::protocol(n);
    let amp = C64::new(1.0 / (n as f64).sqrt(), 0.0);
    let block = 1 << (n + 1);
    let mut amps = nalgebra::DVector::from_element(layout.total_dim(), ZERO);
    for j in 1..=n {
        let psi = evolve_branch(params, t, j).expect("j in range");
        for (k, a) in psi.amplitudes().iter().enumerate() {
            amps[(j - 1) * block + k] = a * amp;
        }
    }
    PureState::new(layout, amps).expect("unitary evolution keeps the norm")
}

/// Unnormalized conditional battery state `σ` and its probability `Tr σ`.
#[derive(Debug, Clone, PartialEq)]
pub struct Conditional {
    pub weight: f64,
    pub unnormalized: DenseOperator,
}

impl Conditional {
    fn from_unnormalized(unnormalized: DenseOperator) -> Self {
        Self { weight: unnormalized.trace().re, unnormalized }
    }

    /// `σ / Tr σ`, or `None` when the outcome has (numerically) zero probability.
    pub fn normalized(&self) -> Option<DenseOperator> {
        (self.weight >= TOL.min_weight).then(|| self.unnormalized.scale(C64::new(1.0 / self.weight, 0.0)))
    }
}

/// Battery states at one charging time.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolResult {
    pub t: f64,
    /// Outcome `k = 1` (uniform superposition of the switch).
    pub given_1: Conditional,
    /// All outcomes `k ≠ 1` aggregated.
    pub rest: Conditional,
    /// Single-order (DCO) reference state.
    pub rho_bar: DenseOperator,
    /// `Σ_k p_k ρ_{Q|k}`.
    pub rho_avg: DenseOperator,
}

impl ProtocolResult {
    pub fn p1(&self) -> f64 {
        self.given_1.weight
    }

    pub fn rest_weight(&self) -> f64 {
        self.rest.weight
    }

    pub fn rho_given_1(&self) -> Option<DenseOperator> {
        self.given_1.normalized()
    }

    pub fn rho_rest(&self) -> Option<DenseOperator> {
        self.rest.normalized()
    }
}

/// Evolve, measure the switch with `{Π_1, 1 - Π_1}` and reduce to the battery.
pub fn run_ico(params: &ModelParams, t: f64) -> ProtocolResult {
    let out = evolved_state(params, t);
    let proj = switch_projector(params.n());
    let projected = out.apply_local(&proj).expect("D is in the layout");
    let complement = PureState::new_unnormalized(
        out.layout().clone(),
        out.amplitudes() - projected.amplitudes(),
    )
    .expect("finite");
    let sigma_1 = projected.reduced(&["Q"]).expect("Q is in the layout");
    let sigma_rest = complement.reduced(&["Q"]).expect("Q is in the layout");
    let rho_avg = sigma_1.add(&sigma_rest).expect("2x2");
    ProtocolResult {
        t,
        given_1: Conditional::from_unnormalized(sigma_1),
        rest: Conditional::from_unnormalized(sigma_rest),
        rho_bar: run_dco(params, t, 1).expect("j = 1 is valid"),
        rho_avg,
    }
}

/// Battery state after the single ordered sequence `j`.
pub fn run_dco(params: &ModelParams, t: f64, j: usize) -> Result<DenseOperator> {
    evolve_branch(params, t, j)?.reduced(&["Q"])
}

/// `Tr ρ_out²` of the joint pre-measurement state.
pub fn joint_purity(params: &ModelParams, t: f64) -> f64 {
    let rho = evolved_state(params, t).to_density();
    rho.compose(&rho).expect("same dims").trace().re
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmat::{embed, partial_trace, project_unnormalized, Tensor};
    use std::f64::consts::PI;

    fn params(n: usize) -> ModelParams {
        ModelParams::new(n, 1.0, 0.1).unwrap()
    }

    /// Density-matrix route: U ρ_in U†, (Π ⊗ 1) projection, explicit partial trace.
    fn density_route(p: &ModelParams, t: f64) -> (f64, DenseOperator, DenseOperator) {
        let layout = SubsystemLayout::protocol(p.n());
        let u = total_unitary(p, t);
        let rho_in = initial_state(p).to_density();
        let rho_out = u.compose(&rho_in).unwrap().compose(&u.adjoint()).unwrap();
        let big_proj = embed(&switch_projector(p.n()), &layout).unwrap();
        let (w, s) = project_unnormalized(&rho_out, &big_proj).unwrap();
        let comp = DenseOperator::identity(layout.clone()).add(&big_proj.scale(C64::new(-1.0, 0.0))).unwrap();
        let (_, r) = project_unnormalized(&rho_out, &comp).unwrap();
        (w, partial_trace(&s, &["Q"]).unwrap(), partial_trace(&r, &["Q"]).unwrap())
    }

    #[test]
    fn cyclic_orders() {
        assert_eq!(CyclicOrder::new(4, 1).unwrap().sequence(), &[1, 2, 3, 4]);
        assert_eq!(CyclicOrder::new(4, 3).unwrap().sequence(), &[3, 4, 1, 2]);
        assert!(CyclicOrder::new(4, 0).is_err());
        assert!(CyclicOrder::new(4, 5).is_err());
        for n in 2..=5 {
            for j in 1..=n {
                let mut s = CyclicOrder::new(n, j).unwrap().sequence().to_vec();
                s.sort_unstable();
                assert_eq!(s, (1..=n).collect::<Vec<_>>());
            }
        }
    }

    #[test]
    fn total_unitary_at_zero_is_identity() {
        let u = total_unitary(&params(3), 0.0);
        assert!(u.max_abs_diff(&DenseOperator::identity(SubsystemLayout::protocol(3))) < 1e-15);
    }

    #[test]
    fn total_unitary_is_block_diagonal_and_unitary() {
        let p = params(3);
        let u = total_unitary(&p, 7.3);
        assert!(u.unitarity_error() < 1e-10);
        let block = 16;
        for r in 0..u.dim() {
            for c in 0..u.dim() {
                if r / block != c / block {
                    assert_eq!(u.entry(r, c), ZERO);
                }
            }
        }
        for j in 1..=3 {
            assert!(branch_unitary(&p, 7.3, j).unwrap().unitarity_error() < 1e-10);
        }
    }

    #[test]
    fn two_charger_branch_one_is_u2_u1() {
        let p = params(2);
        let t = 5.1;
        let layout = SubsystemLayout::battery_chargers(2);
        let u = model::pair_unitary(&p, t / 2.0);
        let u1 = model::embed_pair(&u, &layout, 1).unwrap();
        let u2 = model::embed_pair(&u, &layout, 2).unwrap();
        let expected = u2.compose(&u1).unwrap();
        assert!(branch_unitary(&p, t, 1).unwrap().max_abs_diff(&expected) < 1e-14);
        let swapped = u1.compose(&u2).unwrap();
        assert!(branch_unitary(&p, t, 2).unwrap().max_abs_diff(&swapped) < 1e-14);
    }

    #[test]
    fn initial_state_layout() {
        let p = params(2);
        let psi = initial_state(&p);
        assert!((psi.norm() - 1.0).abs() < 1e-15);
        let nonzero: Vec<(usize, C64)> = psi
            .amplitudes()
            .iter()
            .enumerate()
            .filter(|(_, a)| a.norm() > 0.0)
            .map(|(i, a)| (i, *a))
            .collect();
        // (D, Q, C1, C2) = (0, g, e, e) and (1, g, e, e)
        let l = psi.layout();
        assert_eq!(nonzero.len(), 2);
        assert_eq!(nonzero[0].0, l.encode(&[0, GROUND, EXCITED, EXCITED]));
        assert_eq!(nonzero[1].0, l.encode(&[1, GROUND, EXCITED, EXCITED]));
        for (_, a) in nonzero {
            assert!((a - C64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0)).norm() < 1e-15);
        }
        for n in 2..=4 {
            let d = initial_state(&params(n)).reduced(&["D"]).unwrap();
            let uniform = DenseOperator::from_fn(SubsystemLayout::single("D", n), |_, _| C64::new(1.0 / n as f64, 0.0));
            assert!(d.max_abs_diff(&uniform) < 1e-15);
        }
    }

    #[test]
    fn switch_projector_properties() {
        let p2 = switch_projector(2);
        for z in p2.matrix().iter() {
            assert_eq!(*z, C64::new(0.5, 0.0));
        }
        for n in 2..=5 {
            let p = switch_projector(n);
            assert!(p.compose(&p).unwrap().max_abs_diff(&p) < 1e-12);
            assert!((p.trace().re - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fast_path_matches_total_unitary() {
        for n in 2..=4 {
            let p = params(n);
            let t = 9.7;
            let fast = evolved_state(&p, t);
            let slow = initial_state(&p).apply(&total_unitary(&p, t)).unwrap();
            assert!((fast.amplitudes() - slow.amplitudes()).norm() < 1e-13);
        }
    }

    #[test]
    fn run_ico_at_zero() {
        let r = run_ico(&params(3), 0.0);
        assert!((r.p1() - 1.0).abs() < 1e-15);
        assert!(r.rho_given_1().unwrap().max_abs_diff(&model::ground_density()) < 1e-15);
        assert!(r.rho_rest().is_none());
    }

    #[test]
    fn run_ico_reference_point() {
        // reference values from an independent brute-force state-vector script
        let r = run_ico(&params(2), 2.0 * PI);
        assert!((r.p1() - 0.818250).abs() < 1e-5, "p1 = {}", r.p1());
        let g = r.rho_given_1().unwrap().populations()[GROUND];
        assert!((g - 0.99986).abs() < 1e-4, "ground = {g}");
        assert!((r.p1() + r.rest_weight() - 1.0).abs() < 1e-10);
    }

    #[test]
    fn run_ico_matches_density_matrix_route() {
        for n in 2..=4 {
            let p = params(n);
            for &t in &[0.3, 6.0, 17.5, 40.2] {
                let r = run_ico(&p, t);
                let (w, s1, s_rest) = density_route(&p, t);
                assert!((r.p1() - w).abs() < 1e-12);
                assert!(r.given_1.unnormalized.max_abs_diff(&s1) < 1e-12);
                assert!(r.rest.unnormalized.max_abs_diff(&s_rest) < 1e-12);
            }
        }
    }

    #[test]
    fn complement_is_excited() {
        for n in 2..=5 {
            let p = params(n);
            for k in 0..40 {
                let t = k as f64 * 1.37;
                let r = run_ico(&p, t);
                let rest = &r.rest.unnormalized;
                assert!(rest.populations()[GROUND].abs() <= 1e-9);
                assert!(rest.max_off_diagonal() <= 1e-9);
                if let Some(rho) = r.rho_rest() {
                    if r.rest_weight() > 1e-6 {
                        assert!(rho.max_abs_diff(&model::excited_density()) <= 1e-9);
                    }
                }
            }
        }
    }

    #[test]
    fn mixture_identity_and_energy_equality() {
        for n in 2..=5 {
            let p = params(n);
            for k in 0..25 {
                let t = k as f64 * 2.9;
                let r = run_ico(&p, t);
                assert!(r.rho_avg.max_abs_diff(&r.rho_bar) < 1e-10);
                let e_avg = r.rho_avg.populations()[EXCITED];
                let e_bar = r.rho_bar.populations()[EXCITED];
                assert!((e_avg - e_bar).abs() < 1e-10);
                r.rho_bar.check_density().unwrap();
                r.rho_avg.check_density().unwrap();
                if let Some(rho) = r.rho_given_1() {
                    rho.check_density().unwrap();
                }
            }
        }
    }

    #[test]
    fn joint_state_stays_pure() {
        for n in 2..=4 {
            for &t in &[0.0, 3.3, 21.0] {
                assert!((joint_purity(&params(n), t) - 1.0).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn dco_examples() {
        let p = params(2);
        assert!(run_dco(&p, 0.0, 1).unwrap().max_abs_diff(&model::ground_density()) < 1e-15);
        let a = run_dco(&p, 8.4, 1).unwrap();
        let b = run_dco(&p, 8.4, 2).unwrap();
        assert!(a.max_abs_diff(&b) <= 1e-12);
        let e = run_dco(&p, 2.0 * PI, 1).unwrap().populations()[EXCITED];
        let x: f64 = (0.1 * 2.0 * PI / 2.0).cos();
        assert!((e - (1.0 - x.powi(4))).abs() < 1e-12);
        assert!((e - 0.181864).abs() < 1e-5);
        assert!(matches!(run_dco(&p, 1.0, 3), Err(Error::IndexOutOfRange { .. })));

        let p4 = params(4);
        for j in 2..=4 {
            let d = run_dco(&p4, 13.0, j).unwrap().max_abs_diff(&run_dco(&p4, 13.0, 1).unwrap());
            assert!(d <= 1e-12);
        }
    }

    #[test]
    fn dco_state_is_the_product_evolution() {
        // the DCO state is also the D-diagonal reduction of the full evolution with |j⟩_D input
        let p = params(3);
        let t = 11.0;
        let d = PureState::basis(SubsystemLayout::single("D", 3), &[1]).unwrap();
        let input = d.tensor(&battery_chargers_input(&p));
        let out = input.apply(&total_unitary(&p, t)).unwrap();
        let reduced = out.reduced(&["Q"]).unwrap();
        assert!(reduced.max_abs_diff(&run_dco(&p, t, 2).unwrap()) < 1e-13);
    }
}
