use ndarray::Array2;

use super::{TrajectoryConfig, NEGATIVITY_TOL, TRACE_DRIFT_TOL};
use crate::codes::Codespace;
use crate::error::{Error, Result};
use crate::metrics::{codespace_leakage, state_fidelity};
use crate::operators::{dissipator, eigh, DensityMatrix, Ket, Operator, C64, I};
use crate::synthesis::{FeedbackScheme, Mode};

/// `ρ̇ = Kρ + ρK† + Σ_k w_k L_k ρ L_k†`.
#[derive(Clone, Debug)]
pub struct Liouvillian {
    k: Array2<C64>,
    jumps: Vec<(f64, Array2<C64>)>,
}

impl Liouvillian {
    pub fn new(k: Operator, jumps: Vec<(f64, Operator)>) -> Result<Self> {
        for (_, l) in &jumps {
            if l.dim() != k.dim() {
                return Err(Error::DimensionMismatch {
                    expected: k.dim(),
                    found: l.dim(),
                });
            }
        }
        Ok(Self {
            k: k.into_array(),
            jumps: jumps
                .into_iter()
                .filter(|(w, _)| *w != 0.0)
                .map(|(w, l)| (w, l.into_array()))
                .collect(),
        })
    }

    /// `−i[H,ρ] + Σ 𝒟[c_j]ρ`.
    pub fn lindblad(h: &Operator, jumps: &[Operator]) -> Result<Self> {
        let mut k = h.scale(-I);
        for c in jumps {
            if c.dim() != h.dim() {
                return Err(Error::DimensionMismatch {
                    expected: h.dim(),
                    found: c.dim(),
                });
            }
            k = &k - &(&c.dagger() * c).scale_real(0.5);
        }
        Self::new(k, jumps.iter().map(|c| (1.0, c.clone())).collect())
    }

    /// Jump feedback: detected events (weight `η`) are followed by `U_j`,
    /// undetected ones (weight `1 − η`) are not.
    pub fn feedback_jump(scheme: &FeedbackScheme) -> Result<Self> {
        if scheme.mode != Mode::Jump {
            return Err(Error::ModeMismatch {
                expected: Mode::Jump.to_string(),
                found: scheme.mode.to_string(),
            });
        }
        let mut jumps = Vec::with_capacity(2 * scheme.channels.len());
        for (k, (ch, e)) in scheme.channels.iter().zip(scheme.jump_operators()).enumerate() {
            let u = scheme.recovery(k).expect("jump scheme");
            jumps.push((ch.eta, u * &e));
            jumps.push((1.0 - ch.eta, e));
        }
        Self::new(scheme.no_jump_generator(), jumps)
    }

    /// Diffusive feedback:
    /// `−i[H + Σ(c̃†F + Fc̃)/2, ρ] + Σ 𝒟[c̃ − iF]ρ + Σ (1−η)/η 𝒟[F]ρ`.
    pub fn feedback_diffusive(scheme: &FeedbackScheme) -> Result<Self> {
        if scheme.mode != Mode::Diffusive {
            return Err(Error::ModeMismatch {
                expected: Mode::Diffusive.to_string(),
                found: scheme.mode.to_string(),
            });
        }
        let mut h = scheme.driving_h.clone();
        let mut jumps = Vec::with_capacity(2 * scheme.channels.len());
        for (k, (ch, c)) in scheme.channels.iter().zip(scheme.rotated_operators()).enumerate() {
            if ch.eta == 0.0 {
                return Err(Error::InvalidChannel(format!(
                    "eta = 0 on qubit {} makes the diffusive feedback equation singular",
                    ch.qubit
                )));
            }
            let f = scheme.feedback(k).expect("diffusive scheme");
            h = &h + &(&(&c.dagger() * f) + &(f * &c)).scale_real(0.5);
            jumps.push((1.0, &c - &f.scale(I)));
            jumps.push(((1.0 - ch.eta) / ch.eta, f.clone()));
        }
        let mut k = h.scale(-I);
        for (w, l) in &jumps {
            k = &k - &(&l.dagger() * l).scale_real(0.5 * w);
        }
        Self::new(k, jumps)
    }

    pub fn dim(&self) -> usize {
        self.k.nrows()
    }

    /// Upper bound on the generator norm, `2‖K‖_F + Σ w‖L‖_F²`. RK4 is stable
    /// for `dt` times this below about 2.5.
    pub fn norm_bound(&self) -> f64 {
        let fro = |a: &Array2<C64>| a.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        2.0 * fro(&self.k) + self.jumps.iter().map(|(w, l)| w * fro(l).powi(2)).sum::<f64>()
    }

    /// Valid for Hermitian `rho` only.
    pub(crate) fn apply_array(&self, rho: &Array2<C64>) -> Array2<C64> {
        let kr = self.k.dot(rho);
        let mut out = &kr + &kr.t().mapv(|z| z.conj());
        for (w, l) in &self.jumps {
            let lr = l.dot(rho);
            let term = lr.dot(&l.t().mapv(|z| z.conj()));
            out.scaled_add(C64::new(*w, 0.0), &term);
        }
        out
    }

    /// Generator applied to a Hermitian operator.
    pub fn apply(&self, rho: &Operator) -> Operator {
        Operator::from_array_unchecked(self.apply_array(rho.array()))
    }
}

/// States of a deterministic run on the recorded grid.
#[derive(Clone, Debug)]
pub struct MasterSolution {
    pub times: Vec<f64>,
    pub states: Vec<DensityMatrix>,
}

impl MasterSolution {
    pub fn final_state(&self) -> &DensityMatrix {
        self.states.last().expect("a solution holds at least the initial state")
    }

    pub fn fidelity(&self, psi: &Ket) -> Result<Vec<f64>> {
        self.states.iter().map(|r| state_fidelity(r, psi)).collect()
    }

    pub fn leakage(&self, cs: &Codespace) -> Result<Vec<f64>> {
        self.states.iter().map(|r| codespace_leakage(r, cs)).collect()
    }

    /// `Re tr(Oρ)` along the grid.
    pub fn expectation(&self, o: &Operator) -> Vec<f64> {
        self.states
            .iter()
            .map(|r| (o * r.operator()).trace().re)
            .collect()
    }
}

fn check_integrity(rho: &Array2<C64>, t: f64) -> Result<()> {
    let op = Operator::from_array_unchecked(rho.clone());
    let tr = op.trace();
    if (tr.re - 1.0).abs() > TRACE_DRIFT_TOL * t.max(1.0) || tr.im.abs() > TRACE_DRIFT_TOL * t.max(1.0) {
        return Err(Error::NumericalIntegrity {
            time: t,
            detail: format!("trace drifted to {tr}"),
        });
    }
    let lowest = eigh(&op).0[0];
    if lowest < -NEGATIVITY_TOL {
        return Err(Error::NumericalIntegrity {
            time: t,
            detail: format!("eigenvalue {lowest:e} below zero"),
        });
    }
    Ok(())
}

fn rk4<F>(rho0: &DensityMatrix, cfg: &TrajectoryConfig, f: F) -> Result<MasterSolution>
where
    F: Fn(&Array2<C64>) -> Array2<C64>,
{
    cfg.validate()?;
    let n = cfg.n_steps()?;
    let dt = cfg.dt;
    let half = C64::new(dt / 2.0, 0.0);
    let full = C64::new(dt, 0.0);
    let sixth = C64::new(dt / 6.0, 0.0);
    let mut rho = rho0.operator().array().clone();
    let mut times = vec![0.0];
    let mut states = vec![rho0.clone()];
    for step in 1..=n {
        let k1 = f(&rho);
        let mut tmp = rho.clone();
        tmp.scaled_add(half, &k1);
        let k2 = f(&tmp);
        tmp.assign(&rho);
        tmp.scaled_add(half, &k2);
        let k3 = f(&tmp);
        tmp.assign(&rho);
        tmp.scaled_add(full, &k3);
        let k4 = f(&tmp);
        let mut incr = k1;
        incr.scaled_add(C64::new(2.0, 0.0), &k2);
        incr.scaled_add(C64::new(2.0, 0.0), &k3);
        incr += &k4;
        rho.scaled_add(sixth, &incr);
        // the generator assumes Hermitian input (ρK† is formed as (Kρ)†), so
        // rounding must not be allowed to build up an anti-Hermitian part
        rho = (&rho + &rho.t().mapv(|z| z.conj())).mapv(|z| z * 0.5);
        if cfg.is_recorded(step, n) {
            let t = step as f64 * dt;
            check_integrity(&rho, t)?;
            times.push(t);
            states.push(DensityMatrix::from_operator_unchecked(Operator::from_array_unchecked(
                rho.clone(),
            )));
        }
    }
    Ok(MasterSolution { times, states })
}

fn check_dim(rho0: &DensityMatrix, dim: usize) -> Result<()> {
    if rho0.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: rho0.dim(),
        });
    }
    Ok(())
}

/// RK4 integration of an arbitrary generator.
pub fn integrate(rho0: &DensityMatrix, l: &Liouvillian, cfg: &TrajectoryConfig) -> Result<MasterSolution> {
    rho0.validate()?;
    check_dim(rho0, l.dim())?;
    rk4(rho0, cfg, |r| l.apply_array(r))
}

/// `ρ̇ = −i[H,ρ] + Σ 𝒟[c_j]ρ` with full-space jump operators.
pub fn integrate_lindblad(
    rho0: &DensityMatrix,
    h: &Operator,
    jumps: &[Operator],
    cfg: &TrajectoryConfig,
) -> Result<MasterSolution> {
    let rate = jumps
        .iter()
        .map(|c| eigh(&(&c.dagger() * c)).0.last().copied().unwrap_or(0.0))
        .fold(0.0, f64::max);
    cfg.check_step_bound(rate)?;
    integrate(rho0, &Liouvillian::lindblad(h, jumps)?, cfg)
}

/// Jump-feedback master equation (Kraus-form generator).
pub fn integrate_feedback_me_jump(
    rho0: &DensityMatrix,
    scheme: &FeedbackScheme,
    cfg: &TrajectoryConfig,
) -> Result<MasterSolution> {
    cfg.check_channels(&scheme.channels)?;
    integrate(rho0, &Liouvillian::feedback_jump(scheme)?, cfg)
}

/// Same equation as [`integrate_feedback_me_jump`] written in Lindblad form
/// `−i[H_tot,ρ] + Σ η𝒟[U_jE_j]ρ + (1−η)𝒟[E_j]ρ` and evaluated through the
/// dissipator; used as an independent cross-check.
pub fn integrate_feedback_me_jump_lindblad(
    rho0: &DensityMatrix,
    scheme: &FeedbackScheme,
    cfg: &TrajectoryConfig,
) -> Result<MasterSolution> {
    if scheme.mode != Mode::Jump {
        return Err(Error::ModeMismatch {
            expected: Mode::Jump.to_string(),
            found: scheme.mode.to_string(),
        });
    }
    cfg.check_channels(&scheme.channels)?;
    rho0.validate()?;
    check_dim(rho0, scheme.dim())?;
    let h = scheme.total_hamiltonian();
    let mut terms = Vec::new();
    for (k, (ch, e)) in scheme.channels.iter().zip(scheme.jump_operators()).enumerate() {
        let u = scheme.recovery(k).expect("jump scheme");
        terms.push((ch.eta, u * &e));
        terms.push((1.0 - ch.eta, e));
    }
    rk4(rho0, cfg, |r| {
        let rho = Operator::from_array_unchecked(r.clone());
        let mut out = h.commutator(&rho).scale(-I);
        for (w, l) in &terms {
            if *w != 0.0 {
                out = &out + &dissipator(l, &rho).expect("shapes checked").scale_real(*w);
            }
        }
        out.into_array()
    })
}

/// Diffusive-feedback master equation including the `(1−η)/η 𝒟[F]` term.
pub fn integrate_feedback_me_diffusive(
    rho0: &DensityMatrix,
    scheme: &FeedbackScheme,
    cfg: &TrajectoryConfig,
) -> Result<MasterSolution> {
    cfg.check_channels(&scheme.channels)?;
    integrate(rho0, &Liouvillian::feedback_diffusive(scheme)?, cfg)
}
