//! Seeded, order-independent ensembles of trajectories.

use std::io::{self, Write};

use rayon::prelude::*;
use serde::Serialize;

use crate::simulator::{run, scale_checkpoint, Checkpoint, RunConfig, SimError, SimModel, Trajectory};
use crate::spectral::ColorRate;
use crate::stats::Summary;

/// Per-replication seed: a SplitMix64 finalizer applied to the master seed
/// offset by the replication index, so neighbouring indices get unrelated
/// streams.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Ensemble {
    pub master_seed: u64,
    /// Indexed by replication.
    pub trajectories: Vec<Trajectory>,
}

/// Runs `reps` replications in parallel. Replication `i` always uses
/// `derive_seed(master_seed, i)` and results are stored by index, so the
/// ensemble does not depend on scheduling or thread count.
pub fn run_ensemble(
    model: &SimModel,
    config: &RunConfig,
    master_seed: u64,
    reps: usize,
) -> Result<Ensemble, SimError> {
    let trajectories = (0..reps)
        .into_par_iter()
        .map(|i| run(model, config, derive_seed(master_seed, i as u64)))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ensemble { master_seed, trajectories })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckpointSummary {
    pub n: u64,
    pub raw: Vec<Summary>,
    /// `None` where the scaling is undefined (log correction at `N = 1`).
    pub scaled: Vec<Option<Summary>>,
}

impl Ensemble {
    pub fn reps(&self) -> usize {
        self.trajectories.len()
    }

    pub fn checkpoint_times(&self) -> Vec<u64> {
        self.trajectories
            .first()
            .map(|t| t.checkpoints.iter().map(|c| c.n).collect())
            .unwrap_or_default()
    }

    /// Index of the checkpoint at time `n`, if present.
    pub fn checkpoint_index(&self, n: u64) -> Option<usize> {
        self.checkpoint_times().iter().position(|&t| t == n)
    }

    /// `f` applied to checkpoint `index` of every replication, in replication order.
    pub fn column<F: Fn(&Checkpoint) -> f64>(&self, index: usize, f: F) -> Vec<f64> {
        self.trajectories.iter().map(|t| f(&t.checkpoints[index])).collect()
    }

    pub fn counts_at(&self, index: usize, color: usize) -> Vec<f64> {
        self.column(index, |c| c.counts[color])
    }

    pub fn summaries(&self, rates: &[ColorRate]) -> Vec<CheckpointSummary> {
        let times = self.checkpoint_times();
        times
            .iter()
            .enumerate()
            .map(|(idx, &n)| {
                let dim = rates.len();
                let raw = (0..dim).map(|k| Summary::of(&self.counts_at(idx, k))).collect();
                let scaled_rows: Vec<Vec<Option<f64>>> = self
                    .trajectories
                    .iter()
                    .map(|t| scale_checkpoint(&t.checkpoints[idx], rates))
                    .collect();
                let scaled = (0..dim)
                    .map(|k| {
                        let values: Option<Vec<f64>> = scaled_rows.iter().map(|row| row[k]).collect();
                        values.map(|v| Summary::of(&v))
                    })
                    .collect();
                CheckpointSummary { n, raw, scaled }
            })
            .collect()
    }

    /// Writes every checkpoint of every replication as CSV:
    /// `rep,N,c_1..c_K,scaled_1..scaled_K,U_<block>..,M_<color>..`.
    /// Undefined scaled values are left empty.
    pub fn write_csv<W: Write>(
        &self,
        out: &mut W,
        rates: &[ColorRate],
        u_blocks: &[usize],
        m_colors: &[usize],
    ) -> io::Result<()> {
        let dim = rates.len();
        let mut header = vec!["rep".to_string(), "N".to_string()];
        header.extend((1..=dim).map(|k| format!("c_{k}")));
        header.extend((1..=dim).map(|k| format!("scaled_{k}")));
        header.extend(u_blocks.iter().map(|b| format!("U_{}", b + 1)));
        header.extend(m_colors.iter().map(|l| format!("M_{}", l + 1)));
        writeln!(out, "{}", header.join(","))?;
        for (rep, t) in self.trajectories.iter().enumerate() {
            for cp in &t.checkpoints {
                let mut fields = vec![rep.to_string(), cp.n.to_string()];
                fields.extend(cp.counts.iter().map(|c| c.to_string()));
                fields.extend(
                    scale_checkpoint(cp, rates)
                        .into_iter()
                        .map(|v| v.map(|x| x.to_string()).unwrap_or_default()),
                );
                fields.extend(cp.u.iter().map(|v| v.to_string()));
                fields.extend(cp.m.iter().map(|v| v.to_string()));
                writeln!(out, "{}", fields.join(","))?;
            }
        }
        Ok(())
    }
}
