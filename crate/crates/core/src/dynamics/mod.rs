//! Master-equation integrators and trajectory solvers.
//!
//! Deterministic equations are integrated with classical RK4 on
//! `ρ̇ = Kρ + ρK† + Σ w_k L_k ρ L_k†`. Trajectories use first-order steps:
//! Bernoulli jump sampling for the jump unraveling and a Kraus-form
//! Euler step for the diffusive one.

mod ensemble;
mod master;
mod trajectory;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::synthesis::ErrorChannel;

pub use ensemble::{ensemble_average, run_ensemble, EnsembleAverage};
pub use master::{
    integrate, integrate_feedback_me_diffusive, integrate_feedback_me_jump,
    integrate_feedback_me_jump_lindblad, integrate_lindblad, Liouvillian, MasterSolution,
};
pub use trajectory::{run_pulse_scheme, trajectory_diffusive, trajectory_jump, JumpEvent, TrajectoryRecord};

/// Maximum of `dt · (‖c‖² + γ²)` over channels.
pub const STEP_BOUND: f64 = 0.05;
/// Allowed trace drift of deterministic integrators per unit time.
pub const TRACE_DRIFT_TOL: f64 = 1e-9;
/// Most negative eigenvalue tolerated before a run is declared broken.
pub const NEGATIVITY_TOL: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Unraveling {
    Jump,
    Diffusive,
}

/// Time grid, seeding and recording options shared by all solvers.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct TrajectoryConfig {
    pub dt: f64,
    pub t_final: f64,
    pub seed: u64,
    pub unraveling: Unraveling,
    pub n_traj: usize,
    /// Record every `record_every`-th step (the final step is always recorded).
    pub record_every: usize,
    /// Keep the state at every recorded time (needed for ensemble averages).
    pub store_states: bool,
    /// Post-select on the no-jump record: jump trajectories never jump.
    pub no_jumps: bool,
}

impl TrajectoryConfig {
    pub fn new(dt: f64, t_final: f64) -> Self {
        Self {
            dt,
            t_final,
            seed: 0,
            unraveling: Unraveling::Jump,
            n_traj: 1,
            record_every: 1,
            store_states: true,
            no_jumps: false,
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    pub fn with_unraveling(mut self, unraveling: Unraveling) -> Self {
        self.unraveling = unraveling;
        self
    }

    pub fn with_n_traj(mut self, n_traj: usize) -> Self {
        self.n_traj = n_traj;
        self
    }

    pub fn with_record_every(mut self, every: usize) -> Self {
        self.record_every = every;
        self
    }

    pub fn with_store_states(mut self, store: bool) -> Self {
        self.store_states = store;
        self
    }

    pub fn with_no_jumps(mut self, no_jumps: bool) -> Self {
        self.no_jumps = no_jumps;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt = {}", self.dt)));
        }
        if !(self.t_final >= 0.0 && self.t_final.is_finite()) {
            return Err(Error::InvalidConfig(format!("t_final = {}", self.t_final)));
        }
        if self.record_every == 0 {
            return Err(Error::InvalidConfig("record_every must be positive".into()));
        }
        self.n_steps().map(|_| ())
    }

    /// Number of steps; `t_final` must be an integer multiple of `dt`.
    pub fn n_steps(&self) -> Result<usize> {
        let steps = (self.t_final / self.dt).round();
        if (steps * self.dt - self.t_final).abs() > 1e-9 * self.t_final.max(1.0) {
            return Err(Error::InvalidConfig(format!(
                "t_final = {} is not a multiple of dt = {}",
                self.t_final, self.dt
            )));
        }
        Ok(steps as usize)
    }

    pub(crate) fn is_recorded(&self, step: usize, n_steps: usize) -> bool {
        step % self.record_every == 0 || step == n_steps
    }

    /// Recorded time grid.
    pub fn times(&self) -> Result<Vec<f64>> {
        let n = self.n_steps()?;
        Ok((0..=n)
            .filter(|&k| self.is_recorded(k, n))
            .map(|k| k as f64 * self.dt)
            .collect())
    }

    /// Rejects `dt · rate > 0.05`.
    pub fn check_step_bound(&self, rate: f64) -> Result<()> {
        let value = self.dt * rate;
        if value > STEP_BOUND {
            return Err(Error::StepBound {
                value,
                limit: STEP_BOUND,
            });
        }
        Ok(())
    }

    pub(crate) fn check_channels(&self, channels: &[ErrorChannel]) -> Result<()> {
        let rate = channels.iter().map(ErrorChannel::max_rate).fold(0.0, f64::max);
        self.check_step_bound(rate)
    }
}
