use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use fbqec::codes::{build_codespace, encode, encoded_operators, logical_product_state, Codespace, GeneralizedStabilizer};
use fbqec::dynamics::{
    integrate_feedback_me_diffusive, integrate_feedback_me_jump, run_ensemble, run_pulse_scheme, trajectory_diffusive,
    trajectory_jump, MasterSolution, TrajectoryConfig, TrajectoryRecord, Unraveling,
};
use fbqec::metrics::{fit_exponential, state_fidelity, DecayFit};
use fbqec::operators::{exp_hermitian, DensityMatrix, Ket, Operator, PauliString, C64};
use fbqec::synthesis::{
    anticommutation_residual, check_scheme, pulse_scheme, synth_stabilizer, Certificate, CertificateReport,
    ErrorChannel, FeedbackScheme, Mode, ANTICOMMUTE_TOL,
};
use serde::Serialize;

use crate::config::{Gate, Resolved, Scenario, ScenarioConfig};
use crate::CliError;

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SUMMARY_FILE: &str = "summary.json";

/// One synthesized scheme of a scenario and its certificate report. The
/// scheme is absent when synthesis itself was refused.
pub struct SchemeRun {
    pub label: String,
    pub eta: Option<f64>,
    pub stabilizer: GeneralizedStabilizer,
    pub scheme: Option<FeedbackScheme>,
    pub codespace: Codespace,
    pub report: CertificateReport,
    /// Encoded gate Hamiltonian, for the gate scenario.
    pub gate: Option<Operator>,
}

#[derive(Serialize)]
pub struct SchemeManifest {
    pub label: String,
    pub mode: Mode,
    /// Bloch direction of each stabilizer factor.
    pub stabilizer_directions: Vec<[f64; 3]>,
    /// Nonzero entries of the driving Hamiltonian as `[row, col, re, im]`.
    pub driving_hamiltonian: Option<Vec<[f64; 4]>>,
    pub certificates_passed: bool,
    pub certificates: CertificateReport,
}

#[derive(Serialize)]
pub struct Manifest {
    pub program: &'static str,
    pub version: &'static str,
    pub config: ScenarioConfig,
    pub schemes: Vec<SchemeManifest>,
}

#[derive(Clone, Debug, Serialize)]
pub struct RunSummary {
    pub label: String,
    pub csv: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta: Option<f64>,
    pub n_traj: usize,
    pub final_fidelity: f64,
    pub final_leakage: f64,
    pub final_purity: f64,
    /// Smallest fidelity on the grid; for ensembles, the smallest
    /// conditional fidelity of any trajectory.
    pub min_fidelity: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub logical_x_decay: Option<DecayFit>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gate_fidelity: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Summary {
    pub scenario: Scenario,
    pub runs: Vec<RunSummary>,
}

/// Recorded time series of one run.
pub struct TimeSeries {
    pub times: Vec<f64>,
    pub fidelity: Vec<f64>,
    pub leakage: Vec<f64>,
    pub purity: Vec<f64>,
    /// `jump_count` or `current`.
    pub channel_column: &'static str,
    pub channel_qubits: Vec<usize>,
    /// Indexed by time, then channel.
    pub channel_values: Vec<Vec<f64>>,
    pub min_fidelity: f64,
    pub logical_x: Option<Vec<f64>>,
}

impl TimeSeries {
    /// CSV with 17 significant digits.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("t,fidelity,leakage,purity");
        for q in &self.channel_qubits {
            let _ = write!(out, ",{}_{q}", self.channel_column);
        }
        out.push('\n');
        for k in 0..self.times.len() {
            let _ = write!(
                out,
                "{:.16e},{:.16e},{:.16e},{:.16e}",
                self.times[k], self.fidelity[k], self.leakage[k], self.purity[k]
            );
            for v in &self.channel_values[k] {
                let _ = write!(out, ",{v:.16e}");
            }
            out.push('\n');
        }
        out
    }
}

fn stabilizer_for(r: &Resolved, channels: &[ErrorChannel]) -> Result<GeneralizedStabilizer, CliError> {
    match &r.stabilizer {
        Some(text) => {
            let p: PauliString = text.parse().map_err(|e: fbqec::Error| CliError::Config(e.to_string()))?;
            GeneralizedStabilizer::from_pauli(&p).map_err(|e| CliError::Config(e.to_string()))
        }
        None => synth_stabilizer(channels).map_err(CliError::from),
    }
}

/// Report for a scheme that could not be synthesized: the stabilizer
/// conditions, plus the refusing condition if it was something else.
fn preflight_report(s: &GeneralizedStabilizer, channels: &[ErrorChannel], mode: Mode, err: &fbqec::Error) -> CertificateReport {
    let smat = s.matrix();
    let inv = (&(&smat * &smat) - &Operator::identity(smat.dim())).max_abs();
    let mut certificates = vec![cert("stabilizer-involution", None, inv, 1e-10)];
    for ch in channels {
        let name = if ch.is_diffusive() { "{S,A}=0" } else { "{S,D}=0" };
        certificates.push(cert(name, Some(ch.qubit), anticommutation_residual(s, ch), ANTICOMMUTE_TOL));
    }
    if certificates.iter().all(|c| c.passed) {
        let (name, qubit, residual) = match err {
            fbqec::Error::KnillLaflamme { qubit, residual } => ("knill-laflamme", Some(*qubit), *residual),
            fbqec::Error::NonHermitian { deviation, .. } => ("feedback-hermitian", None, *deviation),
            _ => ("synthesis", None, 1.0),
        };
        certificates.push(cert(name, qubit, residual, 0.0));
    }
    CertificateReport { mode, certificates }
}

fn cert(name: &str, qubit: Option<usize>, residual: f64, tolerance: f64) -> Certificate {
    Certificate {
        name: name.to_string(),
        qubit,
        residual,
        tolerance,
        passed: residual <= tolerance,
    }
}

fn finish(
    label: &str,
    eta: Option<f64>,
    s: GeneralizedStabilizer,
    channels: &[ErrorChannel],
    mode: Mode,
    built: fbqec::Result<FeedbackScheme>,
) -> Result<SchemeRun, CliError> {
    let codespace = build_codespace(&s)?;
    let (scheme, report) = match built {
        Ok(scheme) => {
            let report = check_scheme(&scheme, &codespace);
            (Some(scheme), report)
        }
        Err(e) => match CliError::from(e.clone()) {
            CliError::Certificate(_) => (None, preflight_report(&s, channels, mode, &e)),
            other => return Err(other),
        },
    };
    Ok(SchemeRun {
        label: label.to_string(),
        eta,
        stabilizer: s,
        scheme,
        codespace,
        report,
        gate: None,
    })
}

/// Synthesizes every scheme the scenario needs and checks its certificates.
pub fn synthesize(r: &Resolved) -> Result<Vec<SchemeRun>, CliError> {
    let mut channels = r.error_channels()?;
    if r.mode == Mode::Diffusive {
        channels = channels.into_iter().map(ErrorChannel::diffusive).collect();
    }
    let s = stabilizer_for(r, &channels)?;
    let mut runs = Vec::new();
    match r.scenario {
        Scenario::ImperfectEtaSweep => {
            for &eta in &r.eta_values {
                let chans: Vec<_> = channels.iter().cloned().map(|c| c.with_eta(eta)).collect();
                let built = FeedbackScheme::for_stabilizer(&chans, s.clone(), r.mode);
                runs.push(finish(&format!("eta{eta}"), Some(eta), s.clone(), &chans, r.mode, built)?);
            }
        }
        Scenario::PulseVsDriving => {
            let built = pulse_scheme(&channels, &s, r.pulse_period);
            runs.push(finish("pulse", None, s.clone(), &channels, Mode::Pulse, built)?);
            let built = FeedbackScheme::for_stabilizer(&channels, s.clone(), Mode::Jump);
            runs.push(finish("driving", None, s, &channels, Mode::Jump, built)?);
        }
        Scenario::EncodedGate => {
            let ops = encoded_operators(&s)?;
            let h = match r.gate {
                Gate::X1 => ops.xbar[0].scale_real(std::f64::consts::PI / (2.0 * r.t_final)),
                Gate::X1x2 => ops.xx(0, 1).scale_real(std::f64::consts::PI / (4.0 * r.t_final)),
            };
            // certify the correcting scheme, then add the gate; it acts
            // inside the codespace and is not a scalar there
            let built = FeedbackScheme::for_stabilizer(&channels, s.clone(), r.mode);
            let mut run = finish("gate", None, s, &channels, r.mode, built)?;
            run.scheme = run.scheme.map(|sc| sc.with_extra_hamiltonian(&h)).transpose()?;
            run.gate = Some(h);
            runs.push(run);
        }
        _ => {
            let built = FeedbackScheme::for_stabilizer(&channels, s.clone(), r.mode);
            runs.push(finish("main", None, s, &channels, r.mode, built)?);
        }
    }
    Ok(runs)
}

fn matrix_entries(op: &Operator) -> Vec<[f64; 4]> {
    let mut out = Vec::new();
    for i in 0..op.dim() {
        for j in 0..op.dim() {
            let z = op.get(i, j);
            if z != C64::new(0.0, 0.0) {
                out.push([i as f64, j as f64, z.re, z.im]);
            }
        }
    }
    out
}

pub fn manifest(r: &Resolved, runs: &[SchemeRun]) -> Manifest {
    Manifest {
        program: "fbqec",
        version: env!("CARGO_PKG_VERSION"),
        config: r.to_config(),
        schemes: runs
            .iter()
            .map(|run| SchemeManifest {
                label: run.label.clone(),
                mode: run.report.mode,
                stabilizer_directions: (0..run.stabilizer.n_qubits()).map(|q| run.stabilizer.direction(q)).collect(),
                driving_hamiltonian: run.scheme.as_ref().map(|s| matrix_entries(&s.driving_h)),
                certificates_passed: run.report.passed(),
                certificates: run.report.clone(),
            })
            .collect(),
    }
}

/// Error naming every failing certificate, if any.
pub fn certificate_failure(runs: &[SchemeRun]) -> Option<CliError> {
    let failures: Vec<String> = runs
        .iter()
        .filter(|r| !r.report.passed())
        .map(|r| format!("[{}] {}", r.label, r.report.failure_summary()))
        .collect();
    (!failures.is_empty()).then(|| CliError::Certificate(failures.join("; ")))
}

fn initial_ket(r: &Resolved, cs: &Codespace) -> Result<Ket, CliError> {
    Ok(encode(&logical_product_state(&r.initial_state), cs)?)
}

fn trapezoid_cumulative(times: &[f64], rates: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    let mut out = Vec::with_capacity(rates.len());
    for k in 0..rates.len() {
        if k > 0 {
            acc += 0.5 * (rates[k] + rates[k - 1]) * (times[k] - times[k - 1]);
        }
        out.push(acc);
    }
    out
}

fn master_series(
    r: &Resolved,
    run: &SchemeRun,
    scheme: &FeedbackScheme,
    psi0: &Ket,
    logical_x: Option<&Operator>,
) -> Result<TimeSeries, CliError> {
    let cfg = TrajectoryConfig::new(r.dt, r.t_final).with_record_every(r.record_every);
    let rho0 = DensityMatrix::from_ket(psi0);
    let sol: MasterSolution = match scheme.mode {
        Mode::Diffusive => integrate_feedback_me_diffusive(&rho0, scheme, &cfg)?,
        _ => integrate_feedback_me_jump(&rho0, scheme, &cfg)?,
    };
    let fidelity = match &run.gate {
        Some(h) => sol
            .times
            .iter()
            .zip(&sol.states)
            .map(|(&t, rho)| state_fidelity(rho, &exp_hermitian(h, C64::new(0.0, -t)).apply(psi0)))
            .collect::<fbqec::Result<Vec<_>>>()?,
        None => sol.fidelity(psi0)?,
    };
    let leakage = sol.leakage(&run.codespace)?;
    let purity = sol.states.iter().map(DensityMatrix::purity).collect();
    let (channel_column, per_channel): (_, Vec<Vec<f64>>) = match scheme.mode {
        Mode::Diffusive => (
            "current",
            scheme
                .rotated_operators()
                .iter()
                .map(|c| sol.expectation(&(c + &c.dagger())))
                .collect(),
        ),
        _ => (
            "jump_count",
            scheme
                .jump_operators()
                .iter()
                .zip(&scheme.channels)
                .map(|(e, ch)| {
                    let rate: Vec<f64> = sol.expectation(&(&e.dagger() * e)).iter().map(|v| ch.eta * v).collect();
                    trapezoid_cumulative(&sol.times, &rate)
                })
                .collect(),
        ),
    };
    let channel_values = (0..sol.times.len())
        .map(|k| per_channel.iter().map(|v| v[k]).collect())
        .collect();
    let min_fidelity = fidelity.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(TimeSeries {
        logical_x: logical_x.map(|x| sol.expectation(x)),
        times: sol.times,
        fidelity,
        leakage,
        purity,
        channel_column,
        channel_qubits: scheme.channels.iter().map(|c| c.qubit).collect(),
        channel_values,
        min_fidelity,
    })
}

fn ensemble_series(r: &Resolved, scheme: &FeedbackScheme, psi0: &Ket) -> Result<TimeSeries, CliError> {
    let unraveling = if scheme.mode == Mode::Diffusive {
        Unraveling::Diffusive
    } else {
        Unraveling::Jump
    };
    let cfg = TrajectoryConfig::new(r.dt, r.t_final)
        .with_record_every(r.record_every)
        .with_n_traj(r.n_traj)
        .with_seed(r.seed)
        .with_unraveling(unraveling)
        .with_store_states(false);
    let rho0 = DensityMatrix::from_ket(psi0);
    let records: Vec<TrajectoryRecord> = match scheme.mode {
        Mode::Jump => run_ensemble(&cfg, |c| trajectory_jump(psi0, scheme, c))?,
        Mode::Pulse => run_ensemble(&cfg, |c| run_pulse_scheme(psi0, scheme, c))?,
        Mode::Diffusive => run_ensemble(&cfg, |c| trajectory_diffusive(&rho0, scheme, c))?,
    };
    let count = records.len() as f64;
    let times = records[0].times.clone();
    let mean = |f: &dyn Fn(&TrajectoryRecord, usize) -> f64| -> Vec<f64> {
        (0..times.len())
            .map(|k| records.iter().map(|rec| f(rec, k)).sum::<f64>() / count)
            .collect()
    };
    let n_ch = scheme.channels.len();
    let (channel_column, channel_values) = if scheme.mode == Mode::Diffusive {
        let v = (0..times.len())
            .map(|k| (0..n_ch).map(|j| records.iter().map(|rec| rec.currents[k][j]).sum::<f64>() / count).collect())
            .collect();
        ("current", v)
    } else {
        let v = (0..times.len())
            .map(|k| {
                (0..n_ch)
                    .map(|j| records.iter().map(|rec| rec.jump_counts[k][j] as f64).sum::<f64>() / count)
                    .collect()
            })
            .collect();
        ("jump_count", v)
    };
    Ok(TimeSeries {
        fidelity: mean(&|rec, k| rec.fidelity[k]),
        leakage: mean(&|rec, k| rec.leakage[k]),
        purity: mean(&|rec, k| rec.purity[k]),
        channel_column,
        channel_qubits: scheme.channels.iter().map(|c| c.qubit).collect(),
        channel_values,
        min_fidelity: records.iter().map(|rec| rec.min_fidelity).fold(f64::INFINITY, f64::min),
        logical_x: None,
        times,
    })
}

/// Runs the dynamics of every scheme. All schemes must carry passing
/// certificates.
pub fn simulate(r: &Resolved, runs: &[SchemeRun]) -> Result<Vec<(RunSummary, TimeSeries)>, CliError> {
    let multi = runs.len() > 1;
    runs.iter()
        .map(|run| {
            let scheme = run.scheme.as_ref().expect("certified schemes exist");
            let psi0 = initial_ket(r, &run.codespace)?;
            let logical_x = if r.scenario == Scenario::ImperfectEtaSweep {
                Some(encoded_operators(&run.stabilizer)?.xbar[0].clone())
            } else {
                None
            };
            let ts = if r.n_traj == 0 {
                master_series(r, run, scheme, &psi0, logical_x.as_ref())?
            } else {
                ensemble_series(r, scheme, &psi0)?
            };
            let fit = match &ts.logical_x {
                Some(x) => Some(fit_exponential(&ts.times, x)?),
                None => None,
            };
            let last = ts.times.len() - 1;
            let summary = RunSummary {
                label: run.label.clone(),
                csv: if multi {
                    format!("timeseries_{}.csv", run.label)
                } else {
                    "timeseries.csv".to_string()
                },
                eta: run.eta,
                n_traj: r.n_traj,
                final_fidelity: ts.fidelity[last],
                final_leakage: ts.leakage[last],
                final_purity: ts.purity[last],
                min_fidelity: ts.min_fidelity,
                logical_x_decay: fit,
                gate_fidelity: run.gate.as_ref().map(|_| ts.fidelity[last]),
            };
            Ok((summary, ts))
        })
        .collect()
}

fn write_file(path: &Path, contents: &str) -> Result<(), CliError> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("cannot write {}: {e}", path.display())))
}

fn to_json<T: Serialize>(value: &T) -> String {
    let mut s = serde_json::to_string_pretty(value).expect("serializable");
    s.push('\n');
    s
}

/// Resolves, synthesizes and certifies without running dynamics.
pub fn certify(cfg: &ScenarioConfig) -> Result<(Manifest, Option<CliError>), CliError> {
    let r = cfg.resolve()?;
    let runs = synthesize(&r)?;
    Ok((manifest(&r, &runs), certificate_failure(&runs)))
}

/// Full scenario run. Writes the manifest, then (only if every certificate
/// passes and the dynamics succeed) the CSV time series and the summary.
pub fn run_scenario(cfg: &ScenarioConfig, output: Option<&Path>) -> Result<(PathBuf, Summary), CliError> {
    let mut r = cfg.resolve()?;
    if let Some(dir) = output {
        r.output = dir.to_path_buf();
    }
    let runs = synthesize(&r)?;
    std::fs::create_dir_all(&r.output)
        .map_err(|e| CliError::Io(format!("cannot create {}: {e}", r.output.display())))?;
    write_file(&r.output.join(MANIFEST_FILE), &to_json(&manifest(&r, &runs)))?;
    if let Some(err) = certificate_failure(&runs) {
        return Err(err);
    }
    let results = simulate(&r, &runs)?;
    for (summary, ts) in &results {
        write_file(&r.output.join(&summary.csv), &ts.to_csv())?;
    }
    let summary = Summary {
        scenario: r.scenario,
        runs: results.into_iter().map(|(s, _)| s).collect(),
    };
    write_file(&r.output.join(SUMMARY_FILE), &to_json(&summary))?;
    Ok((r.output, summary))
}
