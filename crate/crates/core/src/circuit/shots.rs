//! Born probabilities, seeded shot sampling, count-based estimation and the
//! shot CSV format.

use std::io::{Read, Write};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Binomial, Distribution};
use serde::{Deserialize, Serialize};

use super::{simulate, NoiseSpec, QuantumCircuit, REGISTER_DIM};
use crate::error::{Error, Result};
use crate::qmat::DenseOperator;
use crate::thermo::{efficiency, EnergyReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum SwitchOutcome {
    Plus,
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum BatteryOutcome {
    G,
    E,
}

/// Index order `(+,g), (+,e), (−,g), (−,e)`.
fn slot(d: SwitchOutcome, q: BatteryOutcome) -> usize {
    let d = match d {
        SwitchOutcome::Plus => 0,
        SwitchOutcome::Minus => 2,
    };
    d + matches!(q, BatteryOutcome::E) as usize
}

/// Joint distribution of the switch x-outcome and battery z-outcome.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutcomeProbabilities(pub [f64; 4]);

impl OutcomeProbabilities {
    pub fn get(&self, d: SwitchOutcome, q: BatteryOutcome) -> f64 {
        self.0[slot(d, q)]
    }

    pub fn plus(&self) -> f64 {
        self.0[0] + self.0[1]
    }

    pub fn excited(&self) -> f64 {
        self.0[1] + self.0[3]
    }
}

/// Born probabilities of `(D in x, Q in z)` on a four-qubit state.
pub fn outcome_probabilities(rho: &DenseOperator) -> OutcomeProbabilities {
    assert_eq!(rho.dim(), REGISTER_DIM, "four-qubit register expected");
    let half = REGISTER_DIM / 2;
    let quarter = REGISTER_DIM / 4;
    let mut p = [0.0; 4];
    for q in 0..2 {
        for c in 0..quarter {
            let a = q * quarter + c;
            let b = half + a;
            let diag = rho.entry(a, a).re + rho.entry(b, b).re;
            let cross = 2.0 * rho.entry(a, b).re;
            p[q] += 0.5 * (diag + cross);
            p[2 + q] += 0.5 * (diag - cross);
        }
    }
    OutcomeProbabilities(p)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Counts {
    pub plus_g: u64,
    pub plus_e: u64,
    pub minus_g: u64,
    pub minus_e: u64,
}

impl Counts {
    pub fn from_array(c: [u64; 4]) -> Self {
        Self { plus_g: c[0], plus_e: c[1], minus_g: c[2], minus_e: c[3] }
    }

    pub fn to_array(self) -> [u64; 4] {
        [self.plus_g, self.plus_e, self.minus_g, self.minus_e]
    }

    pub fn get(&self, d: SwitchOutcome, q: BatteryOutcome) -> u64 {
        self.to_array()[slot(d, q)]
    }

    pub fn total(&self) -> u64 {
        self.to_array().iter().sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ShotResult {
    pub shots: u64,
    pub seed: u64,
    pub counts: Counts,
}

impl ShotResult {
    pub fn new(shots: u64, seed: u64, counts: Counts) -> Result<Self> {
        if shots == 0 {
            return Err(Error::Shots("shot count must be positive".into()));
        }
        if counts.total() != shots {
            return Err(Error::Shots(format!("counts sum to {} but shots = {shots}", counts.total())));
        }
        Ok(Self { shots, seed, counts })
    }
}

/// Multinomial draw over the four outcomes as a chain of binomials, so the
/// stream of random numbers depends only on `seed`.
pub fn sample(circuit: &QuantumCircuit, noise: NoiseSpec, shots: u64, seed: u64) -> Result<ShotResult> {
    if shots == 0 {
        return Err(Error::Shots("shot count must be positive".into()));
    }
    let probs = outcome_probabilities(&simulate(circuit, noise)).0.map(|p| p.max(0.0));
    let total: f64 = probs.iter().sum();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut counts = [0u64; 4];
    let mut remaining = shots;
    let mut mass = 1.0;
    for k in 0..3 {
        let pk = probs[k] / total;
        let cond = if mass > 0.0 { (pk / mass).clamp(0.0, 1.0) } else { 0.0 };
        let draw = Binomial::new(remaining, cond).map_err(|e| Error::Shots(e.to_string()))?.sample(&mut rng);
        counts[k] = draw;
        remaining -= draw;
        mass -= pk;
    }
    counts[3] = remaining;
    ShotResult::new(shots, seed, Counts::from_array(counts))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StandardErrors {
    pub p_plus: f64,
    pub stored_energy: f64,
    pub ergotropy: f64,
    pub efficiency: Option<f64>,
}

/// Count-based estimates in units of ħω.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub p_plus: f64,
    pub report: EnergyReport,
    /// Switch outcomes with no recorded shots; they contribute zero work.
    pub empty_branches: Vec<SwitchOutcome>,
    pub std_err: Option<StandardErrors>,
}

fn work(q: &[f64; 4]) -> f64 {
    (q[1] - q[0]).max(0.0) + (q[3] - q[2]).max(0.0)
}

fn work_gradient(q: &[f64; 4]) -> [f64; 4] {
    let step = |x: f64| if x > 0.0 { 1.0 } else { 0.0 };
    let (a, b) = (step(q[1] - q[0]), step(q[3] - q[2]));
    [-a, a, -b, b]
}

/// `gᵀ(diag(q) − qqᵀ)g / n`.
fn multinomial_se(q: &[f64; 4], g: &[f64; 4], n: f64) -> f64 {
    let mean: f64 = q.iter().zip(g).map(|(a, b)| a * b).sum();
    let second: f64 = q.iter().zip(g).map(|(a, b)| a * b * b).sum();
    ((second - mean * mean).max(0.0) / n).sqrt()
}

fn point_estimate(q: [f64; 4]) -> Estimate {
    let e = q[1] + q[3];
    let w = work(&q);
    let empty_branches = [(SwitchOutcome::Plus, q[0] + q[1]), (SwitchOutcome::Minus, q[2] + q[3])]
        .into_iter()
        .filter(|(_, p)| *p <= 0.0)
        .map(|(d, _)| d)
        .collect();
    Estimate {
        p_plus: q[0] + q[1],
        report: EnergyReport {
            stored_energy: e,
            ergotropy: w,
            efficiency: efficiency(e, w),
            passive: q[1] <= q[0],
        },
        empty_branches,
        std_err: None,
    }
}

/// Estimates from exact (or fractional) outcome probabilities; no sampling error.
pub fn estimate_from_probabilities(probs: OutcomeProbabilities) -> Estimate {
    point_estimate(probs.0)
}

/// Delta-method standard errors of the count estimators at outcome
/// probabilities `probs` after `shots` draws.
pub fn standard_errors(probs: &OutcomeProbabilities, shots: u64) -> StandardErrors {
    let q = probs.0;
    let n = shots as f64;
    let e = q[1] + q[3];
    let w = work(&q);
    let g_e = [0.0, 1.0, 0.0, 1.0];
    let g_w = work_gradient(&q);
    let efficiency = efficiency(e, w).map(|_| {
        let g_p: [f64; 4] = std::array::from_fn(|k| (g_w[k] * e - w * g_e[k]) / (e * e));
        multinomial_se(&q, &g_p, n)
    });
    StandardErrors {
        p_plus: multinomial_se(&q, &[1.0, 1.0, 0.0, 0.0], n),
        stored_energy: multinomial_se(&q, &g_e, n),
        ergotropy: multinomial_se(&q, &g_w, n),
        efficiency,
    }
}

/// Estimates from counts, with standard errors at the observed frequencies.
pub fn estimate(result: &ShotResult) -> Result<Estimate> {
    if result.shots == 0 || result.counts.total() != result.shots {
        return Err(Error::Shots("counts do not match the shot total".into()));
    }
    let n = result.shots as f64;
    let freq = OutcomeProbabilities(result.counts.to_array().map(|c| c as f64 / n));
    let mut est = point_estimate(freq.0);
    est.std_err = Some(standard_errors(&freq, result.shots));
    Ok(est)
}

/// One CSV row: `t,theta,phi,shots,seed,c_pg,c_pe,c_mg,c_me`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ShotRecord {
    pub t: f64,
    pub theta: f64,
    pub phi: f64,
    pub shots: u64,
    pub seed: u64,
    pub c_pg: u64,
    pub c_pe: u64,
    pub c_mg: u64,
    pub c_me: u64,
}

impl ShotRecord {
    pub fn new(t: f64, theta: f64, phi: f64, result: &ShotResult) -> Self {
        let c = result.counts;
        Self {
            t,
            theta,
            phi,
            shots: result.shots,
            seed: result.seed,
            c_pg: c.plus_g,
            c_pe: c.plus_e,
            c_mg: c.minus_g,
            c_me: c.minus_e,
        }
    }

    pub fn result(&self) -> Result<ShotResult> {
        let counts = Counts::from_array([self.c_pg, self.c_pe, self.c_mg, self.c_me]);
        ShotResult::new(self.shots, self.seed, counts)
    }
}

pub fn write_shot_records<W: Write>(writer: W, records: &[ShotRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in records {
        w.serialize(r).map_err(|e| Error::Shots(e.to_string()))?;
    }
    w.flush().map_err(|e| Error::Shots(e.to_string()))
}

pub fn read_shot_records<R: Read>(reader: R) -> Result<Vec<ShotRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let records = r
        .deserialize()
        .collect::<std::result::Result<Vec<ShotRecord>, _>>()
        .map_err(|e| Error::Shots(e.to_string()))?;
    for rec in &records {
        rec.result()?;
    }
    Ok(records)
}
