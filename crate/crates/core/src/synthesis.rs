//! Code, Hamiltonian and feedback synthesis for detected one-qubit errors.
//!
//! Each channel is written as `e^{−iφ}c = χI + A + iB` with Hermitian
//! traceless `A`, `B`. For a jump unraveling with offset `γ` the relevant
//! error is `E = e^{−iφ}c + γ` and the code must satisfy `{S, D} = 0` where
//! `D` is the traceless part of `E†E`; for the diffusive limit the condition
//! becomes `{S, A} = 0`. Given the condition, the driving Hamiltonian makes
//! the no-jump evolution act as a scalar on the codespace and the jump
//! recovery (or the current feedback `F = B − iAS`) returns every error
//! image to the codespace.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::codes::{build_codespace, kl_check, Codespace, GeneralizedStabilizer, PauliStabilizerGroup};
use crate::error::{Error, Result};
use crate::operators::{
    eigh, exp_hermitian, expm, inner, normalize, outer, Ket, OneQubitDecomposition, Operator,
    Pauli, PauliString, C64, HERMITIAN_TOL, I,
};

/// Tolerance of the per-site anticommutation test.
pub const ANTICOMMUTE_TOL: f64 = 1e-10;
/// Tolerance of the codespace annihilation certificates.
pub const ANNIHILATION_TOL: f64 = 1e-12;
/// Tolerance of the no-jump scalar certificate, per unit time.
pub const NO_JUMP_TOL: f64 = 1e-10;
/// Tolerance of the recovery certificate `U E w ∝ w`.
pub const RECOVERY_TOL: f64 = 1e-9;
/// Below this norm a traceless one-qubit operator counts as zero.
const ZERO_DIRECTION_TOL: f64 = 1e-12;

/// One detected measurement process acting on a single qubit.
///
/// The full-space jump operator is `√κ · op` on `qubit` (0-based). `gamma`
/// is the real local-oscillator offset of the jump unraveling; `f64::INFINITY`
/// selects the diffusive limit.
#[derive(Clone, Debug, PartialEq)]
pub struct ErrorChannel {
    pub qubit: usize,
    pub op: Operator,
    pub kappa: f64,
    pub phi: f64,
    pub gamma: f64,
    pub eta: f64,
}

impl ErrorChannel {
    /// Bare jump channel (`κ = 1`, `φ = 0`, `γ = 0`, `η = 1`).
    pub fn new(qubit: usize, op: Operator) -> Result<Self> {
        let ch = Self {
            qubit,
            op,
            kappa: 1.0,
            phi: 0.0,
            gamma: 0.0,
            eta: 1.0,
        };
        ch.validate()?;
        Ok(ch)
    }

    /// `op = 2|0⟩⟨1| = X + iY`, so the decay rate is `4κ`.
    pub fn spontaneous_emission(qubit: usize, kappa: f64) -> Self {
        Self {
            qubit,
            op: Operator::sigma_minus().scale_real(2.0),
            kappa,
            phi: 0.0,
            gamma: 0.0,
            eta: 1.0,
        }
    }

    pub fn with_kappa(mut self, kappa: f64) -> Self {
        self.kappa = kappa;
        self
    }

    pub fn with_phi(mut self, phi: f64) -> Self {
        self.phi = phi;
        self
    }

    pub fn with_gamma(mut self, gamma: f64) -> Self {
        self.gamma = gamma;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Self {
        self.eta = eta;
        self
    }

    /// Same channel in the diffusive limit.
    pub fn diffusive(mut self) -> Self {
        self.gamma = f64::INFINITY;
        self
    }

    pub fn is_diffusive(&self) -> bool {
        self.gamma.is_infinite()
    }

    pub fn validate(&self) -> Result<()> {
        if self.op.dim() != 2 {
            return Err(Error::InvalidChannel(format!(
                "operator on qubit {} must be 2x2",
                self.qubit
            )));
        }
        if !(self.kappa >= 0.0 && self.kappa.is_finite()) {
            return Err(Error::InvalidChannel(format!("kappa = {}", self.kappa)));
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(Error::InvalidChannel(format!("eta = {}", self.eta)));
        }
        if self.gamma.is_nan() || self.gamma < 0.0 {
            return Err(Error::InvalidChannel(format!("gamma = {}", self.gamma)));
        }
        if !self.phi.is_finite() {
            return Err(Error::InvalidChannel(format!("phi = {}", self.phi)));
        }
        Ok(())
    }

    /// `c = √κ · op` (2×2).
    pub fn jump_operator(&self) -> Operator {
        self.op.scale_real(self.kappa.sqrt())
    }

    /// `c̃ = e^{−iφ} c` (2×2).
    pub fn rotated(&self) -> Operator {
        self.jump_operator().scale(C64::from_polar(1.0, -self.phi))
    }

    /// `E = c̃ + γ` (2×2); the bare rotated operator in the diffusive limit.
    pub fn offset_operator(&self) -> Operator {
        let c = self.rotated();
        if self.is_diffusive() {
            c
        } else {
            &c + &Operator::identity(2).scale_real(self.gamma)
        }
    }

    /// Rate bound used by the step-size check: `‖c‖² + γ²`.
    pub fn max_rate(&self) -> f64 {
        let c = self.jump_operator();
        let top = eigh(&(&c.dagger() * &c)).0[1].max(0.0);
        if self.is_diffusive() {
            top
        } else {
            top + self.gamma * self.gamma
        }
    }
}

/// Unraveling and correction style of a scheme.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Jump,
    Diffusive,
    Pulse,
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Mode::Jump => "jump",
            Mode::Diffusive => "diffusive",
            Mode::Pulse => "pulse",
        })
    }
}

/// `e^{−iφ}c = χI + A + iB`.
pub fn decompose(ch: &ErrorChannel) -> OneQubitDecomposition {
    OneQubitDecomposition::of(&ch.rotated()).expect("channel operators are 2x2")
}

/// Traceless part of `E†E` for `E = e^{−iφ}c + γ` (finite γ only).
pub fn error_hermitian_d(ch: &ErrorChannel) -> Result<Operator> {
    if ch.is_diffusive() {
        return Err(Error::Unsupported(
            "D is defined for finite offsets; the diffusive limit uses A".into(),
        ));
    }
    let e = ch.offset_operator();
    Ok((&e.dagger() * &e).traceless_part())
}

/// `D = 2Re(χ+γ)A + 2Im(χ+γ)B − 2(a×b)·σ`, the expanded form of the
/// traceless part of `E†E`.
pub fn error_hermitian_d_closed_form(dec: &OneQubitDecomposition, gamma: f64) -> Operator {
    let z = dec.chi + gamma;
    let (a, b) = (dec.a_vec, dec.b_vec);
    let cross = [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ];
    let v = [0, 1, 2].map(|k| 2.0 * z.re * a[k] + 2.0 * z.im * b[k] - 2.0 * cross[k]);
    Operator::from_bloch(v)
}

/// The operator the stabilizer factor must anticommute with: `D` for a jump
/// unraveling, `A` in the diffusive limit.
pub fn protected_operator(ch: &ErrorChannel) -> Operator {
    if ch.is_diffusive() {
        decompose(ch).a()
    } else {
        error_hermitian_d(ch).expect("finite offset")
    }
}

/// `‖{s_j, D}‖_max` for the channel's qubit.
pub fn anticommutation_residual(s: &GeneralizedStabilizer, ch: &ErrorChannel) -> f64 {
    s.factor(ch.qubit)
        .anticommutator(&protected_operator(ch))
        .max_abs()
}

pub fn correctable(s: &GeneralizedStabilizer, ch: &ErrorChannel) -> bool {
    ch.qubit < s.n_qubits() && anticommutation_residual(s, ch) <= ANTICOMMUTE_TOL
}

/// Unit vector orthogonal to `d` (deterministic): the normalized component
/// of `x̂` orthogonal to `d̂`, or `ẑ` when `d̂ ∥ x̂`; `x̂` when `d = 0`.
pub fn orthogonal_direction(d: [f64; 3]) -> [f64; 3] {
    let len = (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt();
    if len <= ZERO_DIRECTION_TOL {
        return [1.0, 0.0, 0.0];
    }
    let dh = d.map(|x| x / len);
    let m = [1.0 - dh[0] * dh[0], -dh[0] * dh[1], -dh[0] * dh[2]];
    let mlen = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
    if mlen <= 1e-8 {
        [0.0, 0.0, 1.0]
    } else {
        m.map(|x| x / mlen)
    }
}

fn check_one_per_qubit(channels: &[ErrorChannel], n: usize) -> Result<()> {
    let mut seen = vec![false; n];
    for ch in channels {
        ch.validate()?;
        if ch.qubit >= n {
            return Err(Error::InvalidChannel(format!(
                "qubit {} out of range for {n} qubits",
                ch.qubit
            )));
        }
        if std::mem::replace(&mut seen[ch.qubit], true) {
            return Err(Error::DuplicateChannel { qubit: ch.qubit });
        }
    }
    Ok(())
}

/// `S = s_1 ⊗ … ⊗ s_n` with `{s_j, D_j} = 0` for one channel per qubit.
pub fn synth_stabilizer(channels: &[ErrorChannel]) -> Result<GeneralizedStabilizer> {
    let n = channels.len();
    if n == 0 {
        return Err(Error::InvalidConfig("no channels".into()));
    }
    check_one_per_qubit(channels, n)?;
    let mut dirs = vec![[1.0, 0.0, 0.0]; n];
    for ch in channels {
        let c = protected_operator(ch).pauli_coefficients()?;
        dirs[ch.qubit] = orthogonal_direction([c[1].re, c[2].re, c[3].re]);
    }
    GeneralizedStabilizer::from_directions(&dirs)
}

fn lift(op: &Operator, qubit: usize, n: usize) -> Result<Operator> {
    op.embed(qubit, n)
}

/// `−(iγ/2)(c̃ − c̃†)`, the Hamiltonian shift that accompanies the offset `γ`.
pub fn offset_hamiltonian(ch: &ErrorChannel, n: usize) -> Result<Operator> {
    if ch.is_diffusive() || ch.gamma == 0.0 {
        return Ok(Operator::zeros(1 << n));
    }
    let c = ch.rotated();
    let h = (&c - &c.dagger()).scale(C64::new(0.0, -ch.gamma / 2.0));
    lift(&h, ch.qubit, n)
}

fn ensure_hermitian(what: &str, h: Operator) -> Result<Operator> {
    let deviation = h.hermitian_deviation();
    if deviation > HERMITIAN_TOL * h.max_abs().max(1.0) {
        return Err(Error::NonHermitian {
            what: what.into(),
            deviation,
        });
    }
    // symmetrize away rounding
    Ok((&h + &h.dagger()).scale_real(0.5))
}

/// `L'_j = A_j(I − S)`, the part of `c̃_j − iF_j` that annihilates the codespace.
fn annihilating_part(ch: &ErrorChannel, s: &GeneralizedStabilizer) -> Result<Operator> {
    let n = s.n_qubits();
    let a = lift(&decompose(ch).a(), ch.qubit, n)?;
    let smat = s.matrix();
    Ok(&a - &(&a * &smat))
}

/// Constant driving Hamiltonian.
///
/// * jump: `Σ_j (i/2)D_jS + (iγ_j/2)(c̃_j − c̃_j†)`.
/// * diffusive: `−Σ_j (c̃_j†F_j + F_jc̃_j)/2 − (i/2)(χ_j*L'_j − χ_jL'_j†)` with
///   `L'_j = A_j(I − S)`. The second term removes the Hamiltonian part of
///   `𝒟[χ + L'] − 𝒟[L']` and vanishes for traceless `c`.
/// * pulse: zero.
pub fn driving_hamiltonian(
    channels: &[ErrorChannel],
    s: &GeneralizedStabilizer,
    mode: Mode,
) -> Result<Operator> {
    let n = s.n_qubits();
    let dim = 1 << n;
    let mut h = Operator::zeros(dim);
    match mode {
        Mode::Pulse => {}
        Mode::Jump => {
            let smat = s.matrix();
            for ch in channels {
                if ch.is_diffusive() {
                    return Err(Error::ModeMismatch {
                        expected: "finite offset".into(),
                        found: "diffusive channel".into(),
                    });
                }
                let d = lift(&error_hermitian_d(ch)?, ch.qubit, n)?;
                let term = (&d * &smat).scale(I * 0.5);
                h = &(&h + &term) - &offset_hamiltonian(ch, n)?;
            }
        }
        Mode::Diffusive => {
            for ch in channels {
                let c = lift(&ch.rotated(), ch.qubit, n)?;
                let f = feedback_diffusive(ch, s)?;
                let fb = &(&c.dagger() * &f) + &(&f * &c);
                let chi = decompose(ch).chi;
                let lp = annihilating_part(ch, s)?;
                let shift = (&lp.scale(chi.conj()) - &lp.dagger().scale(chi)).scale(I * -0.5);
                h = &(&h - &fb.scale_real(0.5)) + &shift;
            }
        }
    }
    ensure_hermitian("driving Hamiltonian", h)
}

/// `F = B − iAS` lifted to the full space; rejected unless Hermitian, which
/// holds iff `{s_j, A_j} = 0`.
pub fn feedback_diffusive(ch: &ErrorChannel, s: &GeneralizedStabilizer) -> Result<Operator> {
    let n = s.n_qubits();
    let dec = decompose(ch);
    let a = lift(&dec.a(), ch.qubit, n)?;
    let b = lift(&dec.b(), ch.qubit, n)?;
    let f = &b - &(&a * &s.matrix()).scale(I);
    ensure_hermitian(&format!("feedback operator F on qubit {}", ch.qubit), f)
}

/// Unitary `U` with `U·E·w_μ = √Λ·w_μ` for every codeword, `E = c̃ + γ`.
///
/// The normalized images `E w_μ/√Λ` are mapped back onto the codewords and
/// the orthogonal complements are paired in eigenbasis order.
pub fn recovery_unitary(ch: &ErrorChannel, cs: &Codespace) -> Result<Operator> {
    let n = cs.n_qubits();
    let dim = cs.dim();
    let e = lift(&ch.offset_operator(), ch.qubit, n)?;
    let kl = kl_check(&e, cs);
    if !kl.ok {
        return Err(Error::KnillLaflamme {
            qubit: ch.qubit,
            residual: kl.residual,
        });
    }
    if kl.lambda <= f64::MIN_POSITIVE {
        return Ok(Operator::identity(dim));
    }
    let scale = 1.0 / kl.lambda.sqrt();
    let mut images: Vec<Ket> = Vec::with_capacity(cs.codewords().len());
    for w in cs.codewords() {
        let mut v = e.apply(w).mapv(|z| z * scale);
        for u in &images {
            let proj = inner(u, &v);
            v.scaled_add(-proj, u);
        }
        normalize(&mut v);
        images.push(v);
    }
    let words = cs.codewords();
    let mut u = Operator::zeros(dim);
    for (w, v) in words.iter().zip(&images) {
        u = &u + &outer(w, v);
    }
    let src = complement_basis(&images, dim);
    let dst = complement_basis(words, dim);
    for (q, p) in dst.iter().zip(&src) {
        u = &u + &outer(q, p);
    }
    let deviation = u.unitary_deviation();
    if deviation > HERMITIAN_TOL {
        return Err(Error::NumericalIntegrity {
            time: 0.0,
            detail: format!("recovery unitary deviation {deviation:e}"),
        });
    }
    Ok(u)
}

/// Orthonormal basis of the complement of `span(vs)`: the eigenvalue-one
/// eigenvectors of `I − Σ|v⟩⟨v|`, in ascending eigenvalue order.
fn complement_basis(vs: &[Ket], dim: usize) -> Vec<Ket> {
    let mut q = Operator::identity(dim);
    for v in vs {
        q = &q - &outer(v, v);
    }
    let (vals, vecs) = eigh(&q);
    vals.into_iter()
        .zip(vecs)
        .filter(|(l, _)| *l > 0.5)
        .map(|(_, v)| v)
        .collect()
}

/// Per-channel correction.
#[derive(Clone, Debug, PartialEq)]
pub enum Correction {
    /// Unitary applied immediately after each detected jump.
    Recovery(Operator),
    /// Hermitian `F` driven by the measurement current, `H_fb = (dQ/dt)F`.
    Feedback(Operator),
}

impl Correction {
    pub fn operator(&self) -> &Operator {
        match self {
            Correction::Recovery(u) | Correction::Feedback(u) => u,
        }
    }
}

/// Periodic pulses of `operator` every `period/2`.
#[derive(Clone, Debug, PartialEq)]
pub struct PulseSchedule {
    pub operator: Operator,
    pub period: f64,
}

/// Everything needed to run a protected (or deliberately unprotected) memory.
#[derive(Clone, Debug)]
pub struct FeedbackScheme {
    pub mode: Mode,
    pub stabilizer: GeneralizedStabilizer,
    pub channels: Vec<ErrorChannel>,
    pub driving_h: Operator,
    /// One entry per channel, same order as `channels`.
    pub corrections: Vec<Correction>,
    pub pulse: Option<PulseSchedule>,
}

impl FeedbackScheme {
    /// Full synthesis for one channel per qubit. In diffusive mode the
    /// channels are taken in their diffusive limit.
    pub fn synthesize(channels: &[ErrorChannel], mode: Mode) -> Result<Self> {
        let channels: Vec<ErrorChannel> = match mode {
            Mode::Diffusive => channels.iter().cloned().map(ErrorChannel::diffusive).collect(),
            _ => {
                if let Some(ch) = channels.iter().find(|c| c.is_diffusive()) {
                    return Err(Error::ModeMismatch {
                        expected: mode.to_string(),
                        found: format!("diffusive channel on qubit {}", ch.qubit),
                    });
                }
                channels.to_vec()
            }
        };
        let s = synth_stabilizer(&channels)?;
        Self::for_stabilizer(&channels, s, mode)
    }

    /// Synthesis for a given stabilizer; fails if any channel violates the
    /// anticommutation condition.
    pub fn for_stabilizer(channels: &[ErrorChannel], s: GeneralizedStabilizer, mode: Mode) -> Result<Self> {
        if mode == Mode::Pulse {
            return Err(Error::InvalidConfig(
                "pulse schemes need a period; use pulse_scheme".into(),
            ));
        }
        check_one_per_qubit(channels, s.n_qubits())?;
        for ch in channels {
            let residual = anticommutation_residual(&s, ch);
            if residual > ANTICOMMUTE_TOL {
                return Err(Error::NotAnticommuting {
                    qubit: ch.qubit,
                    residual,
                });
            }
        }
        let driving_h = driving_hamiltonian(channels, &s, mode)?;
        let corrections = match mode {
            Mode::Diffusive => channels
                .iter()
                .map(|ch| feedback_diffusive(ch, &s).map(Correction::Feedback))
                .collect::<Result<Vec<_>>>()?,
            _ => {
                let cs = build_codespace(&s)?;
                channels
                    .iter()
                    .map(|ch| recovery_unitary(ch, &cs).map(Correction::Recovery))
                    .collect::<Result<Vec<_>>>()?
            }
        };
        Ok(Self {
            mode,
            stabilizer: s,
            channels: channels.to_vec(),
            driving_h,
            corrections,
            pulse: None,
        })
    }

    /// Negative control: no driving Hamiltonian, identity recoveries or zero
    /// feedback.
    pub fn unprotected(channels: &[ErrorChannel], s: GeneralizedStabilizer, mode: Mode) -> Result<Self> {
        check_one_per_qubit(channels, s.n_qubits())?;
        let dim = 1 << s.n_qubits();
        let channels: Vec<ErrorChannel> = match mode {
            Mode::Diffusive => channels.iter().cloned().map(ErrorChannel::diffusive).collect(),
            _ => channels.to_vec(),
        };
        let corrections = channels
            .iter()
            .map(|_| match mode {
                Mode::Diffusive => Correction::Feedback(Operator::zeros(dim)),
                _ => Correction::Recovery(Operator::identity(dim)),
            })
            .collect();
        Ok(Self {
            mode,
            stabilizer: s,
            channels,
            driving_h: Operator::zeros(dim),
            corrections,
            pulse: None,
        })
    }

    /// Adds a Hamiltonian (e.g. an encoded gate) on top of the driving term.
    pub fn with_extra_hamiltonian(mut self, h: &Operator) -> Result<Self> {
        if h.dim() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                found: h.dim(),
            });
        }
        self.driving_h = &self.driving_h + h;
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.stabilizer.n_qubits()
    }

    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }

    /// Full-space `E_j = c̃_j + γ_j` (bare `c̃_j` in the diffusive limit).
    pub fn jump_operators(&self) -> Vec<Operator> {
        let n = self.n_qubits();
        self.channels
            .iter()
            .map(|ch| lift(&ch.offset_operator(), ch.qubit, n).expect("validated channel"))
            .collect()
    }

    /// Full-space `c̃_j`.
    pub fn rotated_operators(&self) -> Vec<Operator> {
        let n = self.n_qubits();
        self.channels
            .iter()
            .map(|ch| lift(&ch.rotated(), ch.qubit, n).expect("validated channel"))
            .collect()
    }

    /// Total Hamiltonian of the no-jump evolution: driving term plus the
    /// offset shifts of every finite-γ channel.
    pub fn total_hamiltonian(&self) -> Operator {
        let n = self.n_qubits();
        let mut h = self.driving_h.clone();
        if self.mode != Mode::Diffusive {
            for ch in &self.channels {
                h = &h + &offset_hamiltonian(ch, n).expect("validated channel");
            }
        }
        h
    }

    /// Non-Hermitian no-jump generator `K = −iH_tot − ½Σ E_j†E_j`.
    pub fn no_jump_generator(&self) -> Operator {
        let mut k = self.total_hamiltonian().scale(-I);
        for e in self.jump_operators() {
            k = &k - &(&e.dagger() * &e).scale_real(0.5);
        }
        k
    }

    pub fn recovery(&self, index: usize) -> Option<&Operator> {
        match &self.corrections[index] {
            Correction::Recovery(u) => Some(u),
            Correction::Feedback(_) => None,
        }
    }

    pub fn feedback(&self, index: usize) -> Option<&Operator> {
        match &self.corrections[index] {
            Correction::Feedback(f) => Some(f),
            Correction::Recovery(_) => None,
        }
    }
}

/// Fast-pulse alternative to the driving Hamiltonian: apply `S` every
/// `period/2`, no driving Hamiltonian, jumps corrected by recovery unitaries.
pub fn pulse_scheme(channels: &[ErrorChannel], s: &GeneralizedStabilizer, period: f64) -> Result<FeedbackScheme> {
    if !(period > 0.0 && period.is_finite()) {
        return Err(Error::InvalidConfig(format!("pulse period {period}")));
    }
    check_one_per_qubit(channels, s.n_qubits())?;
    for ch in channels {
        if ch.gamma != 0.0 {
            return Err(Error::InvalidChannel(format!(
                "pulse schemes need bare jumps, qubit {} has gamma = {}",
                ch.qubit, ch.gamma
            )));
        }
        let residual = anticommutation_residual(s, ch);
        if residual > ANTICOMMUTE_TOL {
            return Err(Error::NotAnticommuting {
                qubit: ch.qubit,
                residual,
            });
        }
    }
    let cs = build_codespace(s)?;
    let corrections = channels
        .iter()
        .map(|ch| recovery_unitary(ch, &cs).map(Correction::Recovery))
        .collect::<Result<Vec<_>>>()?;
    Ok(FeedbackScheme {
        mode: Mode::Pulse,
        stabilizer: s.clone(),
        channels: channels.to_vec(),
        driving_h: Operator::zeros(cs.dim()),
        corrections,
        pulse: Some(PulseSchedule {
            operator: s.matrix(),
            period,
        }),
    })
}

/// No-jump propagator over one full pulse period,
/// `e^{K T/2} S e^{K T/2} S` with `K` the no-jump generator.
pub fn pulse_period_propagator(scheme: &FeedbackScheme) -> Result<Operator> {
    let pulse = scheme.pulse.as_ref().ok_or_else(|| Error::ModeMismatch {
        expected: "pulse".into(),
        found: scheme.mode.to_string(),
    })?;
    let half = expm(&scheme.no_jump_generator().scale_real(pulse.period / 2.0));
    let s = &pulse.operator;
    Ok(&(&(&half * s) * &half) * s)
}

/// Jump scheme approximating the diffusive one at large offset `γ`:
/// recovery `e^{−iV}` with `V = F/γ − (c̃†F + Fc̃)/(2γ²)` and driving
/// `K = −Σ γ_j F_j` plus the diffusive χ-compensation term.
pub fn asymptotic_jump_scheme(channels: &[ErrorChannel]) -> Result<FeedbackScheme> {
    for ch in channels {
        if ch.is_diffusive() || ch.gamma <= 0.0 {
            return Err(Error::InvalidChannel(format!(
                "asymptotic scheme needs a finite positive offset on qubit {}",
                ch.qubit
            )));
        }
    }
    let diffusive: Vec<ErrorChannel> = channels.iter().cloned().map(ErrorChannel::diffusive).collect();
    let reference = FeedbackScheme::synthesize(&diffusive, Mode::Diffusive)?;
    let s = reference.stabilizer.clone();
    let n = s.n_qubits();
    let mut driving = Operator::zeros(1 << n);
    let mut corrections = Vec::with_capacity(channels.len());
    for (k, ch) in channels.iter().enumerate() {
        let f = reference.feedback(k).expect("diffusive scheme").clone();
        let c = lift(&ch.rotated(), ch.qubit, n)?;
        let v2 = (&(&c.dagger() * &f) + &(&f * &c)).scale_real(-0.5);
        let v = &f.scale_real(1.0 / ch.gamma) + &v2.scale_real(1.0 / (ch.gamma * ch.gamma));
        corrections.push(Correction::Recovery(exp_hermitian(&v, -I)));
        driving = &driving - &f.scale_real(ch.gamma);
    }
    // the χ compensation is what remains of the diffusive driving term once the
    // (c̃†F + Fc̃)/2 part is handled by V₂
    let mut chi_shift = reference.driving_h.clone();
    for (k, c) in reference.rotated_operators().iter().enumerate() {
        let f = reference.feedback(k).expect("diffusive scheme");
        chi_shift = &chi_shift + &(&(&c.dagger() * f) + &(f * c)).scale_real(0.5);
    }
    driving = &driving + &chi_shift;
    Ok(FeedbackScheme {
        mode: Mode::Jump,
        stabilizer: s,
        channels: channels.to_vec(),
        driving_h: ensure_hermitian("asymptotic driving Hamiltonian", driving)?,
        corrections,
        pulse: None,
    })
}

/// Stabilizer from the five-qubit code acting as `X` on `qubit`, which
/// anticommutes with `D ∝ Z` from spontaneous emission there.
pub fn five_qubit_stabilizer_for(qubit: usize) -> Option<PauliString> {
    PauliStabilizerGroup::five_qubit_code()
        .generator_acting_as(qubit, Pauli::X)
        .cloned()
}

/// Single machine-checked condition.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Certificate {
    pub name: String,
    /// Qubit of the channel the condition refers to, if any.
    pub qubit: Option<usize>,
    pub residual: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Certificate {
    fn new(name: &str, qubit: Option<usize>, residual: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            qubit,
            residual,
            tolerance,
            passed: residual <= tolerance,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CertificateReport {
    pub mode: Mode,
    pub certificates: Vec<Certificate>,
}

impl CertificateReport {
    pub fn passed(&self) -> bool {
        self.certificates.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Certificate> {
        self.certificates.iter().filter(|c| !c.passed)
    }

    /// One line per failing condition.
    pub fn failure_summary(&self) -> String {
        self.failures()
            .map(|c| match c.qubit {
                Some(q) => format!("{} (qubit {}): residual {:e} > {:e}", c.name, q, c.residual, c.tolerance),
                None => format!("{}: residual {:e} > {:e}", c.name, c.residual, c.tolerance),
            })
            .collect::<Vec<_>>()
            .join("; ")
    }
}

/// `‖(K − k)P‖_max` with `k = tr(PKP)/tr(P)`.
fn scalar_on_codespace_residual(k: &Operator, p: &Operator) -> f64 {
    let kp = k * p;
    let scalar = (p * &kp).trace() / p.trace();
    (&kp - &p.scale(scalar)).max_abs()
}

/// Verifies the protection conditions of a scheme on its codespace.
///
/// * anticommutation `{s_j, D_j} = 0` (or `{s_j, A_j} = 0`) per channel;
/// * Hermitian driving Hamiltonian;
/// * jump: the no-jump generator acts as a scalar on `P`, each recovery is
///   unitary and `U_j E_j P = √Λ_j P`;
/// * diffusive: each `F_j` is Hermitian, `(c̃_j − iF_j − χ_j)P = 0`, and the
///   no-jump generator of the feedback master equation is a scalar on `P`;
/// * pulse: the full-period no-jump propagator is a scalar multiple of `I`.
pub fn check_scheme(scheme: &FeedbackScheme, cs: &Codespace) -> CertificateReport {
    let mut certs = Vec::new();
    let p = cs.projector();
    let n = scheme.n_qubits();
    let smat = scheme.stabilizer.matrix();
    let inv = (&(&smat * &smat) - &Operator::identity(smat.dim())).max_abs();
    certs.push(Certificate::new("stabilizer-involution", None, inv, 1e-10));
    for ch in &scheme.channels {
        let name = if ch.is_diffusive() { "{S,A}=0" } else { "{S,D}=0" };
        certs.push(Certificate::new(
            name,
            Some(ch.qubit),
            anticommutation_residual(&scheme.stabilizer, ch),
            ANTICOMMUTE_TOL,
        ));
    }
    certs.push(Certificate::new(
        "driving-hamiltonian-hermitian",
        None,
        scheme.driving_h.hermitian_deviation(),
        HERMITIAN_TOL,
    ));

    let jumps = scheme.jump_operators();
    match scheme.mode {
        Mode::Jump | Mode::Pulse => {
            if scheme.mode == Mode::Jump {
                let residual = scalar_on_codespace_residual(&scheme.no_jump_generator(), p);
                certs.push(Certificate::new("no-jump-scalar", None, residual, NO_JUMP_TOL));
            } else {
                let (residual, tol) = match pulse_period_propagator(scheme) {
                    Ok(prop) => {
                        let scalar = prop.trace() / prop.dim() as f64;
                        let r = (&prop - &Operator::identity(prop.dim()).scale(scalar)).max_abs();
                        (r, 1e-10 * scalar.norm().max(f64::MIN_POSITIVE))
                    }
                    Err(_) => (f64::INFINITY, 0.0),
                };
                certs.push(Certificate::new("pulse-period-scalar", None, residual, tol));
            }
            for ((ch, e), corr) in scheme.channels.iter().zip(&jumps).zip(&scheme.corrections) {
                let u = corr.operator();
                certs.push(Certificate::new(
                    "recovery-unitary",
                    Some(ch.qubit),
                    u.unitary_deviation(),
                    HERMITIAN_TOL,
                ));
                let kl = kl_check(e, cs);
                let residual = if kl.ok {
                    let ue = u * e;
                    (&(&ue * p) - &p.scale_real(kl.lambda.max(0.0).sqrt())).max_abs()
                } else {
                    kl.residual.max(RECOVERY_TOL * 2.0)
                };
                certs.push(Certificate::new("recovery-maps-codespace", Some(ch.qubit), residual, RECOVERY_TOL));
            }
        }
        Mode::Diffusive => {
            let mut generator = scheme.driving_h.scale(-I);
            for ((ch, c), corr) in scheme.channels.iter().zip(&jumps).zip(&scheme.corrections) {
                let f = corr.operator();
                certs.push(Certificate::new(
                    "feedback-hermitian",
                    Some(ch.qubit),
                    f.hermitian_deviation(),
                    HERMITIAN_TOL,
                ));
                let chi = decompose(ch).chi;
                let l = c - &f.scale(I);
                let shifted = &l - &Operator::identity(l.dim()).scale(chi);
                certs.push(Certificate::new(
                    "feedback-annihilation",
                    Some(ch.qubit),
                    (&shifted * p).max_abs(),
                    ANNIHILATION_TOL * chi.norm().max(1.0) * f.max_abs().max(1.0),
                ));
                let fb = &(&c.dagger() * f) + &(f * c);
                generator = &generator - &fb.scale(I * 0.5);
                generator = &generator - &(&l.dagger() * &l).scale_real(0.5);
            }
            let residual = scalar_on_codespace_residual(&generator, p);
            certs.push(Certificate::new("no-jump-scalar", None, residual, NO_JUMP_TOL));
        }
    }
    let _ = n;
    CertificateReport {
        mode: scheme.mode,
        certificates: certs,
    }
}
