use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use fbqec::codes::LogicalState;
use fbqec::operators::{Operator, C64};
use fbqec::synthesis::{ErrorChannel, Mode};
use serde::{Deserialize, Serialize};

use crate::CliError;

/// Built-in experiments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    TwoQubitJump,
    TwoQubitDiffusive,
    NQubitSpont,
    GeneralChannel,
    ImperfectEtaSweep,
    EncodedGate,
    PulseVsDriving,
}

impl Scenario {
    pub const ALL: [Scenario; 7] = [
        Scenario::TwoQubitJump,
        Scenario::TwoQubitDiffusive,
        Scenario::NQubitSpont,
        Scenario::GeneralChannel,
        Scenario::ImperfectEtaSweep,
        Scenario::EncodedGate,
        Scenario::PulseVsDriving,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scenario::TwoQubitJump => "two-qubit-jump",
            Scenario::TwoQubitDiffusive => "two-qubit-diffusive",
            Scenario::NQubitSpont => "n-qubit-spont",
            Scenario::GeneralChannel => "general-channel",
            Scenario::ImperfectEtaSweep => "imperfect-eta-sweep",
            Scenario::EncodedGate => "encoded-gate",
            Scenario::PulseVsDriving => "pulse-vs-driving",
        }
    }

    pub fn description(self) -> &'static str {
        match self {
            Scenario::TwoQubitJump => "two-qubit memory under detected decay, jump recovery",
            Scenario::TwoQubitDiffusive => "two-qubit memory under homodyne detection, current feedback",
            Scenario::NQubitSpont => "n-qubit memory (n <= 5) under detected decay",
            Scenario::GeneralChannel => "arbitrary one-qubit channels, synthesized stabilizer",
            Scenario::ImperfectEtaSweep => "logical coherence decay versus detection efficiency",
            Scenario::EncodedGate => "encoded Hamiltonian gate under active jump correction",
            Scenario::PulseVsDriving => "stabilizer pulses versus continuous driving, trajectory ensembles",
        }
    }

    fn default_mode(self) -> Mode {
        match self {
            Scenario::TwoQubitDiffusive => Mode::Diffusive,
            Scenario::PulseVsDriving => Mode::Pulse,
            _ => Mode::Jump,
        }
    }

    fn allowed_modes(self) -> &'static [Mode] {
        match self {
            Scenario::TwoQubitJump | Scenario::ImperfectEtaSweep | Scenario::EncodedGate => &[Mode::Jump],
            Scenario::TwoQubitDiffusive => &[Mode::Diffusive],
            Scenario::PulseVsDriving => &[Mode::Pulse],
            Scenario::NQubitSpont | Scenario::GeneralChannel => &[Mode::Jump, Mode::Diffusive],
        }
    }

    fn default_n_qubits(self) -> usize {
        match self {
            Scenario::NQubitSpont | Scenario::EncodedGate => 3,
            _ => 2,
        }
    }

    fn default_operator(self) -> &'static str {
        match self {
            Scenario::GeneralChannel => "Z",
            _ => "decay",
        }
    }

    fn default_t_final(self) -> f64 {
        match self {
            Scenario::TwoQubitJump | Scenario::TwoQubitDiffusive => 5.0,
            Scenario::NQubitSpont | Scenario::PulseVsDriving => 3.0,
            Scenario::GeneralChannel => 2.0,
            Scenario::ImperfectEtaSweep => 10.0,
            Scenario::EncodedGate => 1.0,
        }
    }

    fn default_n_traj(self) -> usize {
        match self {
            Scenario::PulseVsDriving => 200,
            _ => 0,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = CliError;
    fn from_str(s: &str) -> Result<Self, CliError> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| CliError::Config(format!("unknown scenario {s:?}")))
    }
}

/// Encoded gate Hamiltonians for the `encoded-gate` scenario.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Gate {
    /// `(π/2T) X̄₁`, a logical X up to phase after time `T`.
    X1,
    /// `(π/4T) X̄₁X̄₂`, an entangling interaction.
    X1x2,
}

/// One error channel. Exactly one of `operator` and `matrix` is given.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChannelSpec {
    /// Zero-based qubit index.
    pub qubit: usize,
    /// `decay` (`2|0⟩⟨1|`), `sigma-`, `sigma+`, `X`, `Y` or `Z`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub operator: Option<String>,
    /// Row-major 2×2 entries as `[re, im]` pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<[[f64; 2]; 4]>,
    #[serde(default = "one")]
    pub kappa: f64,
    #[serde(default)]
    pub phi: f64,
    /// Finite offset of the jump operator; ignored in diffusive mode.
    #[serde(default)]
    pub gamma: f64,
    #[serde(default = "one")]
    pub eta: f64,
}

fn one() -> f64 {
    1.0
}

impl ChannelSpec {
    fn named(qubit: usize, operator: &str) -> Self {
        Self {
            qubit,
            operator: Some(operator.to_string()),
            matrix: None,
            kappa: 1.0,
            phi: 0.0,
            gamma: 0.0,
            eta: 1.0,
        }
    }

    pub fn operator_matrix(&self) -> Result<Operator, CliError> {
        match (&self.operator, &self.matrix) {
            (Some(name), None) => match name.as_str() {
                "decay" => Ok(Operator::sigma_minus().scale_real(2.0)),
                "sigma-" => Ok(Operator::sigma_minus()),
                "sigma+" => Ok(Operator::sigma_minus().dagger()),
                "X" => Ok(Operator::pauli_x()),
                "Y" => Ok(Operator::pauli_y()),
                "Z" => Ok(Operator::pauli_z()),
                other => Err(CliError::Config(format!(
                    "channel on qubit {}: unknown operator {other:?}",
                    self.qubit
                ))),
            },
            (None, Some(m)) => Operator::from_vec(2, m.iter().map(|&[re, im]| C64::new(re, im)).collect())
                .map_err(|e| CliError::Config(e.to_string())),
            _ => Err(CliError::Config(format!(
                "channel on qubit {}: give exactly one of `operator` and `matrix`",
                self.qubit
            ))),
        }
    }

    pub fn to_channel(&self) -> Result<ErrorChannel, CliError> {
        if !(self.gamma.is_finite() && self.gamma >= 0.0) {
            return Err(CliError::Config(format!(
                "channel on qubit {}: gamma must be finite and non-negative",
                self.qubit
            )));
        }
        let ch = ErrorChannel::new(self.qubit, self.operator_matrix()?)
            .map_err(|e| CliError::Config(e.to_string()))?
            .with_kappa(self.kappa)
            .with_phi(self.phi)
            .with_gamma(self.gamma)
            .with_eta(self.eta);
        ch.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(ch)
    }
}

/// Scenario description as read from TOML. Omitted fields take scenario
/// defaults; [`ScenarioConfig::resolve`] fills them in explicitly.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioConfig {
    pub scenario: Scenario,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_qubits: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<Mode>,
    /// Pauli string overriding the synthesized stabilizer.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stabilizer: Option<String>,
    /// One symbol from {0, 1, +, -, i, -i} per logical qubit.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial_state: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_final: Option<f64>,
    /// 0 integrates the master equation, otherwise trajectories are averaged.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_traj: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub record_every: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta_values: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gate: Option<Gate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pulse_period: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub channels: Option<Vec<ChannelSpec>>,
}

/// Fully resolved configuration with every field the scenario uses.
#[derive(Clone, Debug, PartialEq)]
pub struct Resolved {
    pub scenario: Scenario,
    pub n_qubits: usize,
    pub mode: Mode,
    pub stabilizer: Option<String>,
    pub initial_state: Vec<LogicalState>,
    pub dt: f64,
    pub t_final: f64,
    pub n_traj: usize,
    pub seed: u64,
    pub record_every: usize,
    pub output: PathBuf,
    pub eta_values: Vec<f64>,
    pub gate: Gate,
    pub pulse_period: f64,
    pub channels: Vec<ChannelSpec>,
}

pub const MAX_SCENARIO_QUBITS: usize = 5;

impl ScenarioConfig {
    /// Minimal config: only the scenario name.
    pub fn new(scenario: Scenario) -> Self {
        Self {
            scenario,
            n_qubits: None,
            mode: None,
            stabilizer: None,
            initial_state: None,
            dt: None,
            t_final: None,
            n_traj: None,
            seed: None,
            record_every: None,
            output: None,
            eta_values: None,
            gate: None,
            pulse_period: None,
            channels: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Fills in every default and validates the result.
    pub fn resolve(&self) -> Result<Resolved, CliError> {
        let sc = self.scenario;
        let n = self.n_qubits.unwrap_or(sc.default_n_qubits());
        let fixed_two = matches!(sc, Scenario::TwoQubitJump | Scenario::TwoQubitDiffusive);
        if fixed_two && n != 2 {
            return Err(CliError::Config(format!("{sc} needs n_qubits = 2")));
        }
        if !(2..=MAX_SCENARIO_QUBITS).contains(&n) {
            return Err(CliError::Config(format!(
                "n_qubits must be in 2..={MAX_SCENARIO_QUBITS}, got {n}"
            )));
        }
        if sc == Scenario::EncodedGate && self.gate == Some(Gate::X1x2) && n < 3 {
            return Err(CliError::Config("the X1X2 gate needs at least two logical qubits".into()));
        }
        let mode = self.mode.unwrap_or(sc.default_mode());
        if !sc.allowed_modes().contains(&mode) {
            return Err(CliError::Config(format!("{sc} does not support mode {mode}")));
        }

        let initial_state = match &self.initial_state {
            None => vec![LogicalState::Plus; n - 1],
            Some(v) => {
                if v.len() != n - 1 {
                    return Err(CliError::Config(format!(
                        "initial_state needs {} entries (one per logical qubit), got {}",
                        n - 1,
                        v.len()
                    )));
                }
                v.iter()
                    .map(|s| s.parse().map_err(|e: fbqec::Error| CliError::Config(e.to_string())))
                    .collect::<Result<Vec<_>, _>>()?
            }
        };
        if sc == Scenario::ImperfectEtaSweep && initial_state[0] != LogicalState::Plus {
            return Err(CliError::Config(
                "imperfect-eta-sweep fits the decay of the first logical X and needs initial state + there".into(),
            ));
        }

        let dt = self.dt.unwrap_or(1e-3);
        let t_final = self.t_final.unwrap_or(sc.default_t_final());
        if !(dt > 0.0 && dt.is_finite() && t_final > 0.0 && t_final.is_finite()) {
            return Err(CliError::Config("dt and t_final must be positive and finite".into()));
        }
        let n_traj = self.n_traj.unwrap_or(sc.default_n_traj());
        match sc {
            Scenario::PulseVsDriving if n_traj == 0 => {
                return Err(CliError::Config("pulse-vs-driving runs trajectories; set n_traj > 0".into()))
            }
            Scenario::ImperfectEtaSweep | Scenario::EncodedGate if n_traj != 0 => {
                return Err(CliError::Config(format!("{sc} integrates the master equation; set n_traj = 0")))
            }
            _ => {}
        }
        let record_every = self.record_every.unwrap_or(10);
        if record_every == 0 {
            return Err(CliError::Config("record_every must be at least 1".into()));
        }

        let channels = match &self.channels {
            None => (0..n).map(|q| ChannelSpec::named(q, sc.default_operator())).collect(),
            Some(c) => {
                let mut c = c.clone();
                c.sort_by_key(|s| s.qubit);
                c
            }
        };
        if channels.len() != n || channels.iter().enumerate().any(|(k, c)| c.qubit != k) {
            return Err(CliError::Config(format!(
                "exactly one channel per qubit 0..{} is required",
                n - 1
            )));
        }
        for c in &channels {
            c.to_channel()?;
        }

        let eta_values = self.eta_values.clone().unwrap_or_else(|| vec![0.8, 0.9, 0.99, 1.0]);
        if eta_values.is_empty() || eta_values.iter().any(|&e| !(e > 0.0 && e <= 1.0)) {
            return Err(CliError::Config("eta_values must be non-empty and in (0, 1]".into()));
        }
        let pulse_period = self.pulse_period.unwrap_or(0.1);
        if !(pulse_period > 0.0 && pulse_period.is_finite()) {
            return Err(CliError::Config("pulse_period must be positive".into()));
        }
        if let Some(s) = &self.stabilizer {
            if s.chars().count() != n {
                return Err(CliError::Config(format!("stabilizer {s:?} must have {n} letters")));
            }
        }

        Ok(Resolved {
            scenario: sc,
            n_qubits: n,
            mode,
            stabilizer: self.stabilizer.clone(),
            initial_state,
            dt,
            t_final,
            n_traj,
            seed: self.seed.unwrap_or(1),
            record_every,
            output: self.output.clone().unwrap_or_else(|| PathBuf::from("runs").join(sc.name())),
            eta_values,
            gate: self.gate.unwrap_or(Gate::X1),
            pulse_period,
            channels,
        })
    }
}

impl Resolved {
    /// Back to the file format with every field explicit.
    pub fn to_config(&self) -> ScenarioConfig {
        let sc = self.scenario;
        ScenarioConfig {
            scenario: sc,
            n_qubits: Some(self.n_qubits),
            mode: Some(self.mode),
            stabilizer: self.stabilizer.clone(),
            initial_state: Some(self.initial_state.iter().map(|s| s.symbol().to_string()).collect()),
            dt: Some(self.dt),
            t_final: Some(self.t_final),
            n_traj: Some(self.n_traj),
            seed: Some(self.seed),
            record_every: Some(self.record_every),
            output: Some(self.output.clone()),
            eta_values: (sc == Scenario::ImperfectEtaSweep).then(|| self.eta_values.clone()),
            gate: (sc == Scenario::EncodedGate).then_some(self.gate),
            pulse_period: (sc == Scenario::PulseVsDriving).then_some(self.pulse_period),
            channels: Some(self.channels.clone()),
        }
    }

    pub fn error_channels(&self) -> Result<Vec<ErrorChannel>, CliError> {
        self.channels.iter().map(ChannelSpec::to_channel).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn resolved_config_round_trips() {
        for sc in Scenario::ALL {
            let resolved = ScenarioConfig::new(sc).resolve().unwrap();
            let cfg = resolved.to_config();
            let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
            assert_eq!(back, cfg, "{sc}");
            assert_eq!(back.resolve().unwrap(), resolved);
        }
    }

    #[test]
    fn matrix_channels_round_trip() {
        let mut cfg = ScenarioConfig::new(Scenario::GeneralChannel);
        cfg.channels = Some(
            (0..2)
                .map(|q| ChannelSpec {
                    qubit: q,
                    operator: None,
                    matrix: Some([[0.1, -0.2], [1.0 / 3.0, 0.0], [0.0, 1e-17], [-0.7, 0.25]]),
                    kappa: 0.7,
                    phi: 0.3,
                    gamma: 1.5,
                    eta: 1.0,
                })
                .collect(),
        );
        let back = ScenarioConfig::from_toml(&cfg.to_toml()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(ScenarioConfig::from_toml("scenario = \"two-qubit-jump\"\nkapa = 1.0\n").is_err());
        let text = "scenario = \"general-channel\"\n[[channels]]\nqubit = 0\noperator = \"Z\"\nkapa = 2.0\n";
        assert!(ScenarioConfig::from_toml(text).is_err());
        assert!(ScenarioConfig::from_toml("scenario = \"no-such-thing\"\n").is_err());
    }

    #[test]
    fn invalid_settings_are_config_errors() {
        let mut cfg = ScenarioConfig::new(Scenario::TwoQubitJump);
        cfg.n_qubits = Some(3);
        assert!(matches!(cfg.resolve(), Err(CliError::Config(_))));
        let mut cfg = ScenarioConfig::new(Scenario::TwoQubitJump);
        cfg.mode = Some(Mode::Diffusive);
        assert!(cfg.resolve().is_err());
        let mut cfg = ScenarioConfig::new(Scenario::NQubitSpont);
        cfg.initial_state = Some(vec!["+".into()]);
        assert!(cfg.resolve().is_err());
        let mut cfg = ScenarioConfig::new(Scenario::GeneralChannel);
        cfg.channels = Some(vec![ChannelSpec::named(0, "Z"), ChannelSpec::named(0, "X")]);
        assert!(cfg.resolve().is_err());
        cfg.channels = Some(vec![ChannelSpec::named(0, "Z"), ChannelSpec::named(1, "W")]);
        assert!(cfg.resolve().is_err());
    }

    #[test]
    fn logical_state_symbols_parse() {
        let mut cfg = ScenarioConfig::new(Scenario::NQubitSpont);
        cfg.n_qubits = Some(5);
        cfg.initial_state = Some(["0", "1", "-", "i", "-i"].iter().skip(1).map(|s| s.to_string()).collect());
        let r = cfg.resolve().unwrap();
        assert_eq!(
            r.initial_state,
            vec![LogicalState::One, LogicalState::Minus, LogicalState::PlusI, LogicalState::MinusI]
        );
    }
}
