//! Passive states, ergotropy, daemonic ergotropy, stored energy and charging
//! efficiency.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, ModelParams};
use crate::protocol::{Conditional, ProtocolResult};
use crate::qmat::{hermitian_eig, DenseOperator, C64};
use crate::tol::TOL;

/// Energy bookkeeping for one protocol at one time. Energies are in units of ħω.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyReport {
    pub stored_energy: f64,
    pub ergotropy: f64,
    /// `W / E`, `None` when `E` is below [`TOL.energy_threshold`](crate::tol::Tolerances).
    pub efficiency: Option<f64>,
    /// ICO: passivity of the `k = 1` conditional state. DCO: passivity of `ρ̄`.
    pub passive: bool,
}

/// `W / E`, undefined for vanishing stored energy.
pub fn efficiency(stored_energy: f64, ergotropy: f64) -> Option<f64> {
    (stored_energy >= TOL.energy_threshold).then(|| ergotropy / stored_energy)
}

fn check_dims(rho: &DenseOperator, h: &DenseOperator) -> Result<()> {
    if rho.dim() != h.dim() {
        return Err(Error::DimensionMismatch { expected: h.dim(), found: rho.dim() });
    }
    Ok(())
}

fn expectation(rho: &DenseOperator, h: &DenseOperator) -> f64 {
    rho.compose(h).expect("checked dims").trace().re
}

/// Populations of `ρ` (descending) placed on the eigenstates of `h`
/// (ascending energy). Ties keep eigenvector order.
pub fn passive_state(rho: &DenseOperator, h: &DenseOperator) -> Result<DenseOperator> {
    check_dims(rho, h)?;
    let r = hermitian_eig(rho)?;
    let e = hermitian_eig(h)?;
    let d = rho.dim();
    let mut phi = nalgebra::DMatrix::from_element(d, d, C64::new(0.0, 0.0));
    for (k, &p) in r.values.iter().rev().enumerate() {
        let v = e.vectors.column(k);
        phi += v * v.adjoint() * C64::new(p, 0.0);
    }
    DenseOperator::new(h.layout().clone(), phi)
}

/// `Tr[ρH] - Tr[φH]` with `φ` the passive state of `ρ`; never negative.
pub fn ergotropy(rho: &DenseOperator, h: &DenseOperator) -> Result<f64> {
    check_dims(rho, h)?;
    let r = hermitian_eig(rho)?;
    let e = hermitian_eig(h)?;
    let passive_energy: f64 = r.values.iter().rev().zip(&e.values).map(|(p, eps)| p * eps).sum();
    Ok((expectation(rho, h) - passive_energy).max(0.0))
}

pub fn is_passive(rho: &DenseOperator, h: &DenseOperator) -> Result<bool> {
    Ok(ergotropy(rho, h)? <= TOL.passivity)
}

/// Outcome probabilities with their normalized conditional states.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalEnsemble {
    members: Vec<(f64, DenseOperator)>,
}

impl ConditionalEnsemble {
    pub fn new(members: Vec<(f64, DenseOperator)>) -> Result<Self> {
        if members.iter().any(|(p, _)| p.is_nan() || *p < 0.0) {
            return Err(Error::InvalidParams("negative outcome probability".into()));
        }
        let total: f64 = members.iter().map(|(p, _)| p).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(Error::InvalidParams(format!("outcome probabilities sum to {total}")));
        }
        Ok(Self { members })
    }

    /// Ensemble from unnormalized conditionals; zero-weight outcomes are dropped.
    pub fn from_conditionals<'a>(parts: impl IntoIterator<Item = &'a Conditional>) -> Result<Self> {
        let members = parts
            .into_iter()
            .filter_map(|c| c.normalized().map(|rho| (c.weight, rho)))
            .collect();
        Self::new(members)
    }

    pub fn members(&self) -> &[(f64, DenseOperator)] {
        &self.members
    }

    /// `Σ_k p_k ρ_k`.
    pub fn average(&self) -> DenseOperator {
        let mut it = self.members.iter();
        let (p0, r0) = it.next().expect("non-empty ensemble");
        it.fold(r0.scale(C64::new(*p0, 0.0)), |acc, (p, r)| {
            acc.add(&r.scale(C64::new(*p, 0.0))).expect("same dims")
        })
    }
}

/// `Σ_k p_k W(ρ_k)`.
pub fn daemonic_ergotropy(ens: &ConditionalEnsemble, h: &DenseOperator) -> Result<f64> {
    ens.members.iter().map(|(p, rho)| Ok(p * ergotropy(rho, h)?)).sum()
}

/// `Tr[ρ_avg H] - Tr[ρ_0 H]`.
pub fn stored_energy(rho_avg: &DenseOperator, rho0: &DenseOperator, h: &DenseOperator) -> Result<f64> {
    check_dims(rho_avg, h)?;
    check_dims(rho0, h)?;
    Ok(expectation(rho_avg, h) - expectation(rho0, h))
}

/// ICO and DCO energy reports, in units of ħω, relative to `ρ_0 = |g⟩⟨g|`.
pub fn report(result: &ProtocolResult, params: &ModelParams) -> Result<(EnergyReport, EnergyReport)> {
    let h = model::battery_hamiltonian(params);
    let unit = params.energy_unit();
    let rho0 = model::ground_density();

    let ensemble = ConditionalEnsemble::from_conditionals([&result.given_1, &result.rest])?;
    let e_ico = stored_energy(&result.rho_avg, &rho0, &h)? / unit;
    let w_ico = daemonic_ergotropy(&ensemble, &h)? / unit;
    let passive_k1 = match result.rho_given_1() {
        Some(rho) => is_passive(&rho, &h)?,
        None => true,
    };
    let ico = EnergyReport {
        stored_energy: e_ico,
        ergotropy: w_ico,
        efficiency: efficiency(e_ico, w_ico),
        passive: passive_k1,
    };

    let e_dco = stored_energy(&result.rho_bar, &rho0, &h)? / unit;
    let w_dco = ergotropy(&result.rho_bar, &h)? / unit;
    let dco = EnergyReport {
        stored_energy: e_dco,
        ergotropy: w_dco,
        efficiency: efficiency(e_dco, w_dco),
        passive: w_dco * unit <= TOL.passivity,
    };
    Ok((ico, dco))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{excited_density, ground_density, EXCITED, GROUND};
    use crate::protocol::run_ico;
    use crate::qmat::testing::{random_density, random_hermitian};
    use crate::qmat::SubsystemLayout;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::PI;

    fn params() -> ModelParams {
        ModelParams::new(2, 1.0, 0.1).unwrap()
    }

    fn diag_q(g: f64, e: f64) -> DenseOperator {
        DenseOperator::from_real(SubsystemLayout::single("Q", 2), &[g, 0.0, 0.0, e]).unwrap()
    }

    /// Minimum of Σ r_π(k) ε_k over every permutation π.
    fn brute_force_passive_energy(pops: &[f64], energies: &[f64]) -> f64 {
        fn permute(items: &mut Vec<f64>, k: usize, energies: &[f64], best: &mut f64) {
            if k == items.len() {
                let e: f64 = items.iter().zip(energies).map(|(p, e)| p * e).sum();
                *best = best.min(e);
                return;
            }
            for i in k..items.len() {
                items.swap(k, i);
                permute(items, k + 1, energies, best);
                items.swap(k, i);
            }
        }
        let mut best = f64::INFINITY;
        permute(&mut pops.to_vec(), 0, energies, &mut best);
        best
    }

    #[test]
    fn passive_state_examples() {
        let h = model::battery_hamiltonian(&params());
        let phi = passive_state(&excited_density(), &h).unwrap();
        assert!(phi.max_abs_diff(&ground_density()) < 1e-14);
        let already = diag_q(0.8, 0.2);
        assert!(passive_state(&already, &h).unwrap().max_abs_diff(&already) < 1e-14);
        let flipped = passive_state(&diag_q(0.3, 0.7), &h).unwrap();
        assert!(flipped.max_abs_diff(&diag_q(0.7, 0.3)) < 1e-14);
    }

    #[test]
    fn ergotropy_examples() {
        let h = model::battery_hamiltonian(&params());
        assert_eq!(ergotropy(&ground_density(), &h).unwrap(), 0.0);
        assert!((ergotropy(&excited_density(), &h).unwrap() - 1.0).abs() < 1e-14);
        // two permutations of (0.3, 0.7) over (-1/2, +1/2): energies 0.2 and -0.2
        let rho = diag_q(0.3, 0.7);
        let oracle = 0.2 - brute_force_passive_energy(&[0.3, 0.7], &[-0.5, 0.5]);
        assert!((oracle - 0.4).abs() < 1e-15);
        assert!((ergotropy(&rho, &h).unwrap() - oracle).abs() < 1e-14);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let h = model::battery_hamiltonian(&params());
        let big = DenseOperator::identity(SubsystemLayout::single("x", 3)).scale(C64::new(1.0 / 3.0, 0.0));
        assert!(matches!(ergotropy(&big, &h), Err(Error::DimensionMismatch { .. })));
        assert!(passive_state(&big, &h).is_err());
    }

    #[test]
    fn ergotropy_matches_permutation_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for d in 2..=4 {
            for _ in 0..20 {
                let layout = SubsystemLayout::single("x", d);
                let rho = random_density(&mut rng, layout.clone());
                let h = random_hermitian(&mut rng, layout);
                let pops = hermitian_eig(&rho).unwrap().values;
                let energies = hermitian_eig(&h).unwrap().values;
                let mean = rho.compose(&h).unwrap().trace().re;
                let oracle = mean - brute_force_passive_energy(&pops, &energies);
                let w = ergotropy(&rho, &h).unwrap();
                assert!((w - oracle.max(0.0)).abs() < 1e-10);
                let phi = passive_state(&rho, &h).unwrap();
                assert!((mean - phi.compose(&h).unwrap().trace().re - w).abs() < 1e-10);
                assert!(is_passive(&phi, &h).unwrap());
            }
        }
    }

    #[test]
    fn daemonic_examples() {
        let h = model::battery_hamiltonian(&params());
        let single = ConditionalEnsemble::new(vec![(1.0, diag_q(0.3, 0.7))]).unwrap();
        assert!((daemonic_ergotropy(&single, &h).unwrap() - 0.4).abs() < 1e-14);

        let split = ConditionalEnsemble::new(vec![(0.5, ground_density()), (0.5, excited_density())]).unwrap();
        let daemonic = daemonic_ergotropy(&split, &h).unwrap();
        let plain = ergotropy(&split.average(), &h).unwrap();
        assert!((daemonic - 0.5).abs() < 1e-14);
        assert!(plain.abs() < 1e-14);

        let same = ConditionalEnsemble::new(vec![(0.25, diag_q(0.1, 0.9)), (0.75, diag_q(0.1, 0.9))]).unwrap();
        assert!((daemonic_ergotropy(&same, &h).unwrap() - 0.8).abs() < 1e-14);

        assert!(ConditionalEnsemble::new(vec![(0.5, ground_density())]).is_err());
        assert!(ConditionalEnsemble::new(vec![(1.5, ground_density()), (-0.5, ground_density())]).is_err());
    }

    #[test]
    fn stored_energy_examples() {
        let p = params();
        let h = model::battery_hamiltonian(&p);
        let g = ground_density();
        assert_eq!(stored_energy(&g, &g, &h).unwrap(), 0.0);
        assert!((stored_energy(&excited_density(), &g, &h).unwrap() - 1.0).abs() < 1e-15);
        let r = run_ico(&p, 2.0 * PI);
        let e = stored_energy(&r.rho_avg, &g, &h).unwrap();
        let x: f64 = (0.1 * PI).cos();
        assert!((e - (1.0 - x.powi(4))).abs() < 1e-12);
        assert!((e - 0.181864).abs() < 1e-5);
    }

    #[test]
    fn report_examples() {
        let p = params();
        let (ico, dco) = report(&run_ico(&p, 0.0), &p).unwrap();
        for r in [ico, dco] {
            assert!(r.stored_energy.abs() < 1e-14);
            assert!(r.ergotropy.abs() < 1e-14);
            assert_eq!(r.efficiency, None);
        }

        let (ico, dco) = report(&run_ico(&p, 2.0 * PI), &p).unwrap();
        assert!((ico.efficiency.unwrap() - 0.9994).abs() < 1e-3);
        assert_eq!(dco.efficiency, Some(0.0));
        assert!(dco.passive && ico.passive);

        let (ico, dco) = report(&run_ico(&p, 4.0 * PI), &p).unwrap();
        assert!((ico.efficiency.unwrap() - 0.2505).abs() < 1e-3);
        assert!((dco.efficiency.unwrap() - 0.2505).abs() < 1e-3);
        assert!(!ico.passive && !dco.passive);
    }

    #[test]
    fn protocol_invariants_on_a_grid() {
        for n in 2..=4 {
            let p = ModelParams::new(n, 1.0, 0.1).unwrap();
            let h = model::battery_hamiltonian(&p);
            for k in 0..60 {
                let t = k as f64 * 1.9;
                let r = run_ico(&p, t);
                let (ico, dco) = report(&r, &p).unwrap();
                assert!(ico.ergotropy >= dco.ergotropy - 1e-10);
                for rep in [ico, dco] {
                    if let Some(eff) = rep.efficiency {
                        assert!((-1e-12..=1.0 + 1e-10).contains(&eff));
                    }
                    if rep.stored_energy > 0.0 {
                        assert!(rep.ergotropy <= rep.stored_energy + 1e-10);
                    }
                }
                // daemonic dominance over the ergotropy of the average state
                assert!(ico.ergotropy >= ergotropy(&r.rho_avg, &h).unwrap() - 1e-10);
                // sign test on populations
                if let Some(rho) = r.rho_given_1() {
                    let pops = rho.populations();
                    let gap = pops[GROUND] - pops[EXCITED];
                    if gap.abs() > 1e-9 {
                        assert_eq!(ico.passive, gap >= 0.0, "t = {t}");
                    }
                }
            }
        }
    }
}
