use ndarray::{Array1, Array2};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::{TrajectoryConfig, NEGATIVITY_TOL};
use crate::codes::build_codespace;
use crate::error::{Error, Result};
use crate::operators::{eigh, expm, DensityMatrix, Ket, Operator, C64, I};
use crate::synthesis::{FeedbackScheme, Mode};

/// A jump of channel `channel` during the step ending at `time`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct JumpEvent {
    pub time: f64,
    pub channel: usize,
    /// Whether the event was detected (and therefore corrected).
    pub detected: bool,
}

/// Output of one stochastic run, sampled on the recorded grid.
#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRecord {
    pub times: Vec<f64>,
    /// Overlap with the initial state, `tr(ρ₀ρ)`.
    pub fidelity: Vec<f64>,
    pub leakage: Vec<f64>,
    pub purity: Vec<f64>,
    /// Smallest overlap with the initial state over every step.
    pub min_fidelity: f64,
    pub events: Vec<JumpEvent>,
    /// Cumulative jumps per channel at each recorded time (jump unraveling).
    pub jump_counts: Vec<Vec<u64>>,
    /// `dQ_j/dt` of the step ending at each recorded time (diffusive unraveling).
    pub currents: Vec<Vec<f64>>,
    /// States at the recorded times, if requested.
    pub states: Vec<Operator>,
    pub final_state: DensityMatrix,
}

fn dagger(a: &Array2<C64>) -> Array2<C64> {
    a.t().mapv(|z| z.conj())
}

fn cdot(a: &Ket, b: &Ket) -> C64 {
    a.iter().zip(b).map(|(x, y)| x.conj() * y).sum()
}

fn expect(op: &Array2<C64>, psi: &Ket) -> f64 {
    cdot(psi, &op.dot(psi)).re
}

fn normalize_or_fail(psi: &mut Ket, t: f64) -> Result<()> {
    let norm = psi.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
    if !(norm > 1e-150 && norm.is_finite()) {
        return Err(Error::NumericalIntegrity {
            time: t,
            detail: format!("state norm collapsed to {norm:e}"),
        });
    }
    psi.mapv_inplace(|z| z / norm);
    Ok(())
}

fn check_ket(psi0: &Ket, dim: usize) -> Result<()> {
    if psi0.len() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: psi0.len(),
        });
    }
    let norm2: f64 = psi0.iter().map(|z| z.norm_sqr()).sum();
    if (norm2 - 1.0).abs() > 1e-8 {
        return Err(Error::InvalidConfig(format!(
            "initial state has squared norm {norm2}"
        )));
    }
    Ok(())
}

/// Projector onto the scheme's codespace, used for leakage.
fn projector(scheme: &FeedbackScheme) -> Result<Array2<C64>> {
    Ok(build_codespace(&scheme.stabilizer)?.projector().array().clone())
}

struct JumpSetup {
    jumps: Vec<Array2<C64>>,
    corrected: Vec<Array2<C64>>,
    rates: Vec<Array2<C64>>,
    etas: Vec<f64>,
    no_jump: Array2<C64>,
    exact: bool,
}

impl JumpSetup {
    fn new(scheme: &FeedbackScheme, dt: f64, exact: bool) -> Self {
        let es = scheme.jump_operators();
        let jumps: Vec<_> = es.iter().map(|e| e.array().clone()).collect();
        let corrected = es
            .iter()
            .enumerate()
            .map(|(k, e)| (scheme.recovery(k).expect("jump scheme") * e).into_array())
            .collect();
        let rates = es.iter().map(|e| (&e.dagger() * e).into_array()).collect();
        let k = scheme.no_jump_generator();
        let no_jump = if exact {
            expm(&k.scale_real(dt)).into_array()
        } else {
            (&Operator::identity(k.dim()) + &k.scale_real(dt)).into_array()
        };
        Self {
            jumps,
            corrected,
            rates,
            etas: scheme.channels.iter().map(|c| c.eta).collect(),
            no_jump,
            exact,
        }
    }
}

fn jump_run(
    psi0: &Ket,
    scheme: &FeedbackScheme,
    cfg: &TrajectoryConfig,
    pulse: Option<(usize, Array2<C64>)>,
) -> Result<TrajectoryRecord> {
    cfg.validate()?;
    cfg.check_channels(&scheme.channels)?;
    check_ket(psi0, scheme.dim())?;
    let n = cfg.n_steps()?;
    let dt = cfg.dt;
    let setup = JumpSetup::new(scheme, dt, pulse.is_some());
    let p = projector(scheme)?;
    let n_ch = setup.jumps.len();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut psi = psi0.clone();
    let mut counts = vec![0u64; n_ch];
    let mut rec = Recorder::new(cfg, n_ch);
    rec.record_pure(0.0, &psi, psi0, &p, &counts, None);
    let mut fired = vec![false; n_ch];
    let mut rates = vec![0.0; n_ch];
    for step in 1..=n {
        let t = step as f64 * dt;
        for j in 0..n_ch {
            rates[j] = expect(&setup.rates[j], &psi);
            let u: f64 = rng.random();
            fired[j] = !cfg.no_jumps && u < rates[j] * dt;
        }
        if fired.iter().any(|&f| f) {
            for j in 0..n_ch {
                if !fired[j] {
                    continue;
                }
                let detected = setup.etas[j] >= 1.0 || rng.random::<f64>() < setup.etas[j];
                psi = if detected {
                    setup.corrected[j].dot(&psi)
                } else {
                    setup.jumps[j].dot(&psi)
                };
                normalize_or_fail(&mut psi, t)?;
                counts[j] += 1;
                rec.events.push(JumpEvent {
                    time: t,
                    channel: j,
                    detected,
                });
            }
        } else {
            let mut next = setup.no_jump.dot(&psi);
            if !setup.exact {
                let shift = C64::new(0.5 * dt * rates.iter().sum::<f64>(), 0.0);
                next.scaled_add(shift, &psi);
            }
            psi = next;
            normalize_or_fail(&mut psi, t)?;
        }
        if let Some((half, s)) = &pulse {
            if step % half == 0 {
                psi = s.dot(&psi);
            }
        }
        rec.track_min(cdot(psi0, &psi).norm_sqr());
        if cfg.is_recorded(step, n) {
            rec.record_pure(t, &psi, psi0, &p, &counts, None);
        }
    }
    Ok(rec.finish_pure(&psi))
}

/// Jump unraveling with immediate correction.
///
/// Each step, every channel jumps with probability `⟨E_j†E_j⟩dt`. A detected
/// jump applies `U_jE_j`, an undetected one (probability `1 − η_j`) only
/// `E_j`. Otherwise the state takes the first-order no-jump step
/// `(I − iH dt − Σ(E†E − ⟨E†E⟩)dt/2)ψ`. The state is renormalized after
/// every update.
pub fn trajectory_jump(psi0: &Ket, scheme: &FeedbackScheme, cfg: &TrajectoryConfig) -> Result<TrajectoryRecord> {
    if scheme.mode != Mode::Jump {
        return Err(Error::ModeMismatch {
            expected: Mode::Jump.to_string(),
            found: scheme.mode.to_string(),
        });
    }
    jump_run(psi0, scheme, cfg, None)
}

/// Jump trajectory of a pulse scheme: the stabilizer is applied after every
/// step ending at a multiple of `T_c/2`. No-jump intervals use the exact
/// propagator `e^{K dt}` so a full period reproduces the scalar identity.
pub fn run_pulse_scheme(psi0: &Ket, scheme: &FeedbackScheme, cfg: &TrajectoryConfig) -> Result<TrajectoryRecord> {
    let pulse = match (&scheme.mode, &scheme.pulse) {
        (Mode::Pulse, Some(p)) => p,
        _ => {
            return Err(Error::ModeMismatch {
                expected: Mode::Pulse.to_string(),
                found: scheme.mode.to_string(),
            })
        }
    };
    let half = pulse.period / 2.0 / cfg.dt;
    let steps = half.round();
    if steps < 1.0 || (half - steps).abs() > 1e-9 * half.max(1.0) {
        return Err(Error::InvalidConfig(format!(
            "half period {} is not a multiple of dt = {}",
            pulse.period / 2.0,
            cfg.dt
        )));
    }
    jump_run(psi0, scheme, cfg, Some((steps as usize, pulse.operator.array().clone())))
}

/// Conditioned diffusive evolution with current feedback `H_fb = (dQ/dt)F`.
///
/// With `L_j = c̃_j − iF_j` each step applies the Kraus operator
/// `M = I − (iH' + ½ΣL†L)dt + Σ L_j dQ_j`, `dQ_j = ⟨c̃_j + c̃_j†⟩dt + dW_j`,
/// then re-Hermitizes and renormalizes. To first order this is the
/// Euler–Maruyama step of the feedback-conditioned stochastic master
/// equation and keeps `ρ` positive. Fidelity is the overlap `tr(ρ₀ρ)`.
pub fn trajectory_diffusive(
    rho0: &DensityMatrix,
    scheme: &FeedbackScheme,
    cfg: &TrajectoryConfig,
) -> Result<TrajectoryRecord> {
    if scheme.mode != Mode::Diffusive {
        return Err(Error::ModeMismatch {
            expected: Mode::Diffusive.to_string(),
            found: scheme.mode.to_string(),
        });
    }
    if let Some(ch) = scheme.channels.iter().find(|c| c.eta < 1.0) {
        return Err(Error::Unsupported(format!(
            "conditioned diffusive evolution needs eta = 1 (qubit {} has {})",
            ch.qubit, ch.eta
        )));
    }
    cfg.validate()?;
    cfg.check_channels(&scheme.channels)?;
    rho0.validate()?;
    if rho0.dim() != scheme.dim() {
        return Err(Error::DimensionMismatch {
            expected: scheme.dim(),
            found: rho0.dim(),
        });
    }
    let n = cfg.n_steps()?;
    let dt = cfg.dt;
    let dim = scheme.dim();
    let p = projector(scheme)?;
    let cs = scheme.rotated_operators();
    let mut h = scheme.driving_h.clone();
    let mut ls = Vec::with_capacity(cs.len());
    let mut quadratures = Vec::with_capacity(cs.len());
    for (k, c) in cs.iter().enumerate() {
        let f = scheme.feedback(k).expect("diffusive scheme");
        h = &h + &(&(&c.dagger() * f) + &(f * c)).scale_real(0.5);
        ls.push((c - &f.scale(I)).into_array());
        quadratures.push((c + &c.dagger()).into_array());
    }
    let mut drift = Operator::identity(dim).into_array();
    drift.scaled_add(C64::new(0.0, -dt), h.array());
    for l in &ls {
        drift.scaled_add(C64::new(-0.5 * dt, 0.0), &dagger(l).dot(l));
    }
    let rho_ref = rho0.operator().array().clone();
    let mut rho = rho_ref.clone();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let sqrt_dt = dt.sqrt();
    let mut rec = Recorder::new(cfg, ls.len());
    let mut current = vec![0.0; ls.len()];
    rec.record_mixed(0.0, &rho, &rho_ref, &p, &current);
    for step in 1..=n {
        let t = step as f64 * dt;
        let mut m = drift.clone();
        for j in 0..ls.len() {
            let dw: f64 = rng.sample::<f64, _>(StandardNormal) * sqrt_dt;
            let mean = trace_product(&quadratures[j], &rho).re;
            let dq = mean * dt + dw;
            current[j] = dq / dt;
            m.scaled_add(C64::new(dq, 0.0), &ls[j]);
        }
        let next = m.dot(&rho).dot(&dagger(&m));
        rho = (&next + &dagger(&next)).mapv(|z| z * 0.5);
        let tr = (0..dim).map(|i| rho[[i, i]].re).sum::<f64>();
        if !(tr > 0.0 && tr.is_finite()) {
            return Err(Error::NumericalIntegrity {
                time: t,
                detail: format!("trace collapsed to {tr:e}"),
            });
        }
        rho.mapv_inplace(|z| z / tr);
        rec.track_min(trace_product(&rho_ref, &rho).re);
        if cfg.is_recorded(step, n) {
            let lowest = eigh(&Operator::from_array_unchecked(rho.clone())).0[0];
            if lowest < -NEGATIVITY_TOL {
                return Err(Error::NumericalIntegrity {
                    time: t,
                    detail: format!("eigenvalue {lowest:e} below zero"),
                });
            }
            rec.record_mixed(t, &rho, &rho_ref, &p, &current);
        }
    }
    Ok(rec.finish_mixed(rho))
}

/// `tr(AB)` without forming the product.
fn trace_product(a: &Array2<C64>, b: &Array2<C64>) -> C64 {
    let d = a.nrows();
    let mut s = C64::new(0.0, 0.0);
    for i in 0..d {
        for k in 0..d {
            s += a[[i, k]] * b[[k, i]];
        }
    }
    s
}

struct Recorder<'a> {
    cfg: &'a TrajectoryConfig,
    times: Vec<f64>,
    fidelity: Vec<f64>,
    leakage: Vec<f64>,
    purity: Vec<f64>,
    min_fidelity: f64,
    events: Vec<JumpEvent>,
    jump_counts: Vec<Vec<u64>>,
    currents: Vec<Vec<f64>>,
    states: Vec<Operator>,
    n_channels: usize,
}

impl<'a> Recorder<'a> {
    fn new(cfg: &'a TrajectoryConfig, n_channels: usize) -> Self {
        Self {
            cfg,
            times: Vec::new(),
            fidelity: Vec::new(),
            leakage: Vec::new(),
            purity: Vec::new(),
            min_fidelity: f64::INFINITY,
            events: Vec::new(),
            jump_counts: Vec::new(),
            currents: Vec::new(),
            states: Vec::new(),
            n_channels,
        }
    }

    fn track_min(&mut self, f: f64) {
        self.min_fidelity = self.min_fidelity.min(f);
    }

    fn record_pure(&mut self, t: f64, psi: &Ket, psi0: &Ket, p: &Array2<C64>, counts: &[u64], _: Option<()>) {
        let f = cdot(psi0, psi).norm_sqr();
        self.track_min(f);
        self.times.push(t);
        self.fidelity.push(f);
        self.leakage.push(1.0 - expect(p, psi));
        self.purity.push(1.0);
        self.jump_counts.push(counts.to_vec());
        if self.cfg.store_states {
            self.states.push(ket_to_density(psi));
        }
    }

    fn record_mixed(&mut self, t: f64, rho: &Array2<C64>, rho0: &Array2<C64>, p: &Array2<C64>, current: &[f64]) {
        let f = trace_product(rho0, rho).re;
        self.track_min(f);
        self.times.push(t);
        self.fidelity.push(f);
        self.leakage.push(1.0 - trace_product(p, rho).re);
        self.purity.push(rho.iter().map(|z| z.norm_sqr()).sum());
        self.currents.push(current.to_vec());
        if self.cfg.store_states {
            self.states.push(Operator::from_array_unchecked(rho.clone()));
        }
    }

    fn finish(self, final_state: DensityMatrix) -> TrajectoryRecord {
        debug_assert!(self.jump_counts.iter().all(|c| c.len() == self.n_channels));
        TrajectoryRecord {
            times: self.times,
            fidelity: self.fidelity,
            leakage: self.leakage,
            purity: self.purity,
            min_fidelity: self.min_fidelity,
            events: self.events,
            jump_counts: self.jump_counts,
            currents: self.currents,
            states: self.states,
            final_state,
        }
    }

    fn finish_pure(self, psi: &Ket) -> TrajectoryRecord {
        self.finish(DensityMatrix::from_ket(psi))
    }

    fn finish_mixed(self, rho: Array2<C64>) -> TrajectoryRecord {
        self.finish(DensityMatrix::from_operator_unchecked(Operator::from_array_unchecked(rho)))
    }
}

fn ket_to_density(psi: &Array1<C64>) -> Operator {
    let d = psi.len();
    Operator::from_array_unchecked(Array2::from_shape_fn((d, d), |(i, j)| psi[i] * psi[j].conj()))
}
