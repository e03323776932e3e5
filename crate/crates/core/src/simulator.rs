//! Single-trajectory urn simulation with checkpointing and martingale tracking.
//!
//! Counts are `f64`; all structural analysis stays exact elsewhere. Zero
//! replacement entries add exactly `0.0`, so colors that never receive balls
//! keep their initial count bit for bit.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::matrix::ReplacementMatrix;
use crate::rational;
use crate::spectral::{right_eigenvector_zeta, ColorRate};
use crate::stats::CompensatedSum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("checkpoint schedule is empty (steps must be at least 1)")]
    ScheduleEmpty,
    #[error("geometric ratio must exceed 1, got {0}")]
    InvalidGamma(f64),
    #[error("tracked color {} out of range", .0 + 1)]
    ColorOutOfRange(usize),
    #[error("zeta vector has {found} entries, expected {expected}")]
    ZetaLength { expected: usize, found: usize },
}

/// Floating-point copy of a model used in the inner loop.
#[derive(Debug, Clone, PartialEq)]
pub struct SimModel {
    dim: usize,
    rows: Vec<f64>,
    initial: Vec<f64>,
}

impl SimModel {
    pub fn new(matrix: &ReplacementMatrix) -> Self {
        let dim = matrix.dim();
        let rows = matrix.to_f64_rows().into_iter().flatten().collect();
        SimModel { dim, rows, initial: matrix.initial_f64() }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.rows[i * self.dim..(i + 1) * self.dim]
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.rows[i * self.dim + j]
    }

    pub fn initial(&self) -> &[f64] {
        &self.initial
    }
}

/// Urn composition after `n` draws together with its random stream.
#[derive(Debug, Clone)]
pub struct UrnState {
    n: u64,
    counts: Vec<f64>,
    rng: ChaCha8Rng,
    cumulative: Vec<f64>,
}

impl UrnState {
    pub fn new(model: &SimModel, seed: u64) -> Self {
        UrnState {
            n: 0,
            counts: model.initial.clone(),
            rng: ChaCha8Rng::seed_from_u64(seed),
            cumulative: vec![0.0; model.dim],
        }
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    /// Draws a color with probability proportional to its count, adds the
    /// matching row and returns the drawn color.
    pub fn step(&mut self, model: &SimModel) -> usize {
        let mut total = 0.0;
        for (c, acc) in self.counts.iter().zip(self.cumulative.iter_mut()) {
            total += c;
            *acc = total;
        }
        let u = self.rng.gen::<f64>() * total;
        let drawn = self
            .cumulative
            .iter()
            .position(|&acc| u < acc)
            // rounding can leave u at the total; take the last color present
            .unwrap_or_else(|| self.counts.iter().rposition(|&c| c > 0.0).expect("urn is never empty"));
        for (c, r) in self.counts.iter_mut().zip(model.row(drawn)) {
            *c += r;
        }
        self.n += 1;
        drawn
    }
}

/// Checkpoint times: `ceil(gamma^m)` for `m = 0, 1, ...`, the decade anchors
/// `steps / 10^k`, and `steps` itself, deduplicated and sorted.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Schedule {
    pub gamma: Option<f64>,
    pub points: Vec<u64>,
}

impl Schedule {
    pub fn geometric(steps: u64, gamma: f64) -> Result<Schedule, SimError> {
        if steps == 0 {
            return Err(SimError::ScheduleEmpty);
        }
        if !(gamma > 1.0) || !gamma.is_finite() {
            return Err(SimError::InvalidGamma(gamma));
        }
        let mut points = Vec::new();
        let mut m = 0;
        loop {
            let p = gamma.powi(m).ceil();
            if p > steps as f64 {
                break;
            }
            points.push(p as u64);
            m += 1;
        }
        let mut anchor = steps / 10;
        while anchor >= 1 {
            points.push(anchor);
            anchor /= 10;
        }
        points.push(steps);
        points.sort_unstable();
        points.dedup();
        Ok(Schedule { gamma: Some(gamma), points })
    }

    pub fn explicit(mut points: Vec<u64>) -> Result<Schedule, SimError> {
        points.retain(|&p| p > 0);
        points.sort_unstable();
        points.dedup();
        if points.is_empty() {
            return Err(SimError::ScheduleEmpty);
        }
        Ok(Schedule { gamma: None, points })
    }

    pub fn steps(&self) -> u64 {
        *self.points.last().expect("schedule is nonempty")
    }
}

/// Parameters of a simulation run, recorded next to its output.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimulationParams {
    pub steps: u64,
    pub reps: usize,
    pub seed: u64,
    pub gamma: f64,
}

impl SimulationParams {
    /// SHA-256 of the canonical JSON form.
    pub fn hash(&self) -> String {
        let json = serde_json::to_string(self).expect("params serialize");
        hex::encode(Sha256::digest(json.as_bytes()))
    }
}

/// A right eigenvector `zeta` with eigenvalue `lambda`; `C_N zeta / Pi_N(lambda)`
/// is a martingale.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ZetaSpec {
    pub block: usize,
    pub lambda: f64,
    pub zeta: Vec<f64>,
}

/// Martingales to record alongside counts.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Tracking {
    pub zetas: Vec<ZetaSpec>,
    /// Colors for the compensated martingale
    /// `C_{N,l}/Pi_N(r_l) - sum_{m<l} sum_{n<N} r_{ml}/(n+1+r_l) C_{n,m}/Pi_n(r_l)`.
    pub m_colors: Vec<usize>,
}

impl Tracking {
    /// One `U` per block of the matrix (in its given order) whose leading
    /// diagonal exceeds every earlier diagonal, plus `M` for every color.
    pub fn full(matrix: &ReplacementMatrix) -> Tracking {
        Tracking { zetas: zeta_specs(matrix), m_colors: (0..matrix.dim()).collect() }
    }
}

pub fn zeta_specs(matrix: &ReplacementMatrix) -> Vec<ZetaSpec> {
    let structure = matrix.block_structure();
    structure
        .blocks
        .iter()
        .enumerate()
        .filter(|(_, b)| b.nu == 0)
        .map(|(j, b)| {
            let zeta = right_eigenvector_zeta(matrix, &structure, j).expect("nu = 0 block");
            ZetaSpec {
                block: j,
                lambda: rational::to_f64(&b.lambda),
                zeta: zeta.iter().map(rational::to_f64).collect::<Vec<_>>(),
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub schedule: Schedule,
    pub tracking: Tracking,
}

impl RunConfig {
    pub fn counts_only(schedule: Schedule) -> Self {
        RunConfig { schedule, tracking: Tracking::default() }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Checkpoint {
    pub n: u64,
    pub counts: Vec<f64>,
    /// One value per entry of `Tracking::zetas`.
    pub u: Vec<f64>,
    /// One value per entry of `Tracking::m_colors`.
    pub m: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Trajectory {
    pub seed: u64,
    pub checkpoints: Vec<Checkpoint>,
}

impl Trajectory {
    pub fn last(&self) -> &Checkpoint {
        self.checkpoints.last().expect("trajectory has checkpoints")
    }
}

struct MState {
    color: usize,
    own: f64,
    donors: Vec<(usize, f64)>,
    euler: f64,
    compensator: CompensatedSum,
}

pub fn run(model: &SimModel, config: &RunConfig, seed: u64) -> Result<Trajectory, SimError> {
    let dim = model.dim();
    for spec in &config.tracking.zetas {
        if spec.zeta.len() != dim {
            return Err(SimError::ZetaLength { expected: dim, found: spec.zeta.len() });
        }
    }
    let mut m_states = config
        .tracking
        .m_colors
        .iter()
        .map(|&l| {
            if l >= dim {
                return Err(SimError::ColorOutOfRange(l));
            }
            let donors = (0..l)
                .map(|m| (m, model.entry(m, l)))
                .filter(|&(_, r)| r != 0.0)
                .collect();
            Ok(MState {
                color: l,
                own: model.entry(l, l),
                donors,
                euler: 1.0,
                compensator: CompensatedSum::new(),
            })
        })
        .collect::<Result<Vec<_>, _>>()?;
    let mut u_euler: Vec<f64> = vec![1.0; config.tracking.zetas.len()];

    let mut state = UrnState::new(model, seed);
    let mut checkpoints = Vec::with_capacity(config.schedule.points.len());
    for &target in &config.schedule.points {
        while state.n < target {
            let n = state.n as f64;
            for ms in &mut m_states {
                let inflow: f64 = ms.donors.iter().map(|&(m, r)| r * state.counts[m]).sum();
                if inflow != 0.0 {
                    ms.compensator.add(inflow / ((n + 1.0 + ms.own) * ms.euler));
                }
                ms.euler *= 1.0 + ms.own / (n + 1.0);
            }
            for (e, spec) in u_euler.iter_mut().zip(&config.tracking.zetas) {
                *e *= 1.0 + spec.lambda / (n + 1.0);
            }
            state.step(model);
        }
        let u = config
            .tracking
            .zetas
            .iter()
            .zip(&u_euler)
            .map(|(spec, e)| {
                let dot: f64 = state.counts.iter().zip(&spec.zeta).map(|(c, z)| c * z).sum();
                dot / e
            })
            .collect();
        let m = m_states
            .iter()
            .map(|ms| state.counts[ms.color] / ms.euler - ms.compensator.value())
            .collect();
        checkpoints.push(Checkpoint { n: state.n, counts: state.counts.clone(), u, m });
    }
    Ok(Trajectory { seed, checkpoints })
}

/// `C_{N,k} / (N^{s_k} (log N)^{d_k})` per checkpoint. Entries are `None` at
/// `N = 1` for colors with a log correction.
pub fn scaled_counts(trajectory: &Trajectory, rates: &[ColorRate]) -> Vec<(u64, Vec<Option<f64>>)> {
    trajectory
        .checkpoints
        .iter()
        .map(|cp| (cp.n, scale_checkpoint(cp, rates)))
        .collect()
}

pub fn scale_checkpoint(cp: &Checkpoint, rates: &[ColorRate]) -> Vec<Option<f64>> {
    cp.counts
        .iter()
        .zip(rates)
        .map(|(&c, rate)| {
            if cp.n < 2 && rate.log_power > 0 {
                None
            } else {
                Some(c / rate.scale(cp.n as f64))
            }
        })
        .collect()
}
