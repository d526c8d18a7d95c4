use ndarray::Array2;
use rayon::prelude::*;

use super::{TrajectoryConfig, TrajectoryRecord};
use crate::error::{Error, Result};
use crate::operators::{trace_distance, DensityMatrix, Operator, C64};

/// Runs `cfg.n_traj` trajectories in parallel. Trajectory `k` gets seed
/// `cfg.seed + k`, so results do not depend on scheduling.
pub fn run_ensemble<F>(cfg: &TrajectoryConfig, run: F) -> Result<Vec<TrajectoryRecord>>
where
    F: Fn(&TrajectoryConfig) -> Result<TrajectoryRecord> + Sync,
{
    (0..cfg.n_traj as u64)
        .into_par_iter()
        .map(|k| {
            let mut c = cfg.clone();
            c.seed = cfg.seed.wrapping_add(k);
            run(&c)
        })
        .collect()
}

/// Pointwise ensemble statistics.
#[derive(Clone, Debug)]
pub struct EnsembleAverage {
    pub times: Vec<f64>,
    pub states: Vec<Operator>,
    pub mean_fidelity: Vec<f64>,
    /// Standard error of the mean fidelity.
    pub fidelity_std_error: Vec<f64>,
    /// Trace distance to the reference solution, when one was supplied.
    pub trace_distance: Option<Vec<f64>>,
}

impl EnsembleAverage {
    pub fn max_trace_distance(&self) -> Option<f64> {
        self.trace_distance
            .as_ref()
            .map(|d| d.iter().copied().fold(0.0, f64::max))
    }
}

/// Averages conditional states over records sharing one grid and compares
/// against an optional deterministic reference on the same grid.
pub fn ensemble_average(records: &[TrajectoryRecord], reference: Option<&[DensityMatrix]>) -> Result<EnsembleAverage> {
    let first = records
        .first()
        .ok_or_else(|| Error::InvalidConfig("no trajectories to average".into()))?;
    let times = first.times.clone();
    let n_t = times.len();
    if first.states.len() != n_t {
        return Err(Error::InvalidConfig("records were run without stored states".into()));
    }
    if records
        .iter()
        .any(|r| r.times != times || r.states.len() != n_t)
    {
        return Err(Error::GridMismatch);
    }
    let dim = first.states[0].dim();
    let count = records.len() as f64;
    let mut states = Vec::with_capacity(n_t);
    let mut mean_fidelity = Vec::with_capacity(n_t);
    let mut fidelity_std_error = Vec::with_capacity(n_t);
    for k in 0..n_t {
        let mut acc = Array2::<C64>::zeros((dim, dim));
        let (mut s1, mut s2) = (0.0, 0.0);
        for r in records {
            acc += r.states[k].array();
            s1 += r.fidelity[k];
            s2 += r.fidelity[k] * r.fidelity[k];
        }
        acc.mapv_inplace(|z| z / count);
        states.push(Operator::from_array_unchecked(acc));
        let mean = s1 / count;
        mean_fidelity.push(mean);
        let var = if records.len() > 1 {
            ((s2 - count * mean * mean) / (count - 1.0)).max(0.0)
        } else {
            0.0
        };
        fidelity_std_error.push((var / count).sqrt());
    }
    let trace_distance = match reference {
        None => None,
        Some(refs) => {
            if refs.len() != n_t || refs.iter().any(|r| r.dim() != dim) {
                return Err(Error::GridMismatch);
            }
            Some(
                states
                    .iter()
                    .zip(refs)
                    .map(|(a, b)| trace_distance(a, b.operator()))
                    .collect(),
            )
        }
    };
    Ok(EnsembleAverage {
        times,
        states,
        mean_fidelity,
        fidelity_std_error,
        trace_distance,
    })
}
