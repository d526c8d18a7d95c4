//! Single-generator (generalized) stabilizer codes.
//!
//! A generalized stabilizer is `S = s_1 ⊗ … ⊗ s_n` with each `s_j = m̂_j·σ`
//! a traceless Hermitian involution. Every such `S` is locally conjugate to
//! `X^{⊗n}`: `S = U X^{⊗n} U†` with `U = ⊗ U_j`. Codewords and encoded
//! operators are built for `X^{⊗n}` and then mapped through `U`.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::operators::{
    basis_ket, exp_hermitian, inner, normalize, Ket, Operator, Pauli, PauliString, C64, ONE,
};

/// Tolerance on the per-factor invariants `f = f†`, `tr f = 0`, `f² = I`.
pub const FACTOR_TOL: f64 = 1e-12;
/// Tolerance on `S² = I` and on projector identities.
pub const CODE_TOL: f64 = 1e-10;

/// `S = s_1 ⊗ … ⊗ s_n`, optionally with local unitaries `U_j` such that
/// `U_j X U_j† = s_j`.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneralizedStabilizer {
    factors: Vec<Operator>,
    conjugators: Option<Vec<Operator>>,
}

impl GeneralizedStabilizer {
    /// From explicit one-qubit factors. No conjugating unitaries are attached.
    pub fn new(factors: Vec<Operator>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidStabilizer("no factors".into()));
        }
        for (j, f) in factors.iter().enumerate() {
            check_factor(j, f)?;
        }
        Ok(Self {
            factors,
            conjugators: None,
        })
    }

    /// `S = ⊗ (m̂_j·σ)` with canonical conjugators (the rotation taking `x̂` to `m̂_j`).
    pub fn from_directions(directions: &[[f64; 3]]) -> Result<Self> {
        let mut factors = Vec::with_capacity(directions.len());
        let mut conj = Vec::with_capacity(directions.len());
        for (j, m) in directions.iter().enumerate() {
            let len = (m[0] * m[0] + m[1] * m[1] + m[2] * m[2]).sqrt();
            if (len - 1.0).abs() > FACTOR_TOL {
                return Err(Error::InvalidStabilizer(format!(
                    "direction for qubit {j} has length {len}"
                )));
            }
            factors.push(Operator::from_bloch(*m));
            conj.push(rotation_from_x(*m));
        }
        Self::new(factors)?.with_conjugators(conj)
    }

    /// From a Pauli string with no identity letters and a real phase.
    pub fn from_pauli(p: &PauliString) -> Result<Self> {
        let sign = match p.phase.power() {
            0 => 1.0,
            2 => -1.0,
            _ => {
                return Err(Error::InvalidStabilizer(format!(
                    "{p} has an imaginary phase"
                )))
            }
        };
        let mut dirs = Vec::with_capacity(p.len());
        for (j, letter) in p.letters.iter().enumerate() {
            let s = if j == 0 { sign } else { 1.0 };
            dirs.push(match letter {
                Pauli::X => [s, 0.0, 0.0],
                Pauli::Y => [0.0, s, 0.0],
                Pauli::Z => [0.0, 0.0, s],
                Pauli::I => {
                    return Err(Error::InvalidStabilizer(format!(
                        "{p} acts trivially on qubit {j}"
                    )))
                }
            });
        }
        Self::from_directions(&dirs)
    }

    /// `s_j = U_j X U_j†` for the given local unitaries.
    pub fn conjugated(unitaries: Vec<Operator>) -> Result<Self> {
        let x = Operator::pauli_x();
        let mut factors = Vec::with_capacity(unitaries.len());
        for (j, u) in unitaries.iter().enumerate() {
            if u.dim() != 2 || u.unitary_deviation() > FACTOR_TOL {
                return Err(Error::InvalidStabilizer(format!(
                    "conjugator for qubit {j} is not a one-qubit unitary"
                )));
            }
            factors.push(&(u * &x) * &u.dagger());
        }
        let mut s = Self::new(factors)?;
        s.conjugators = Some(unitaries);
        Ok(s)
    }

    /// Attaches conjugators after checking `U_j X U_j† = s_j`.
    pub fn with_conjugators(mut self, unitaries: Vec<Operator>) -> Result<Self> {
        if unitaries.len() != self.factors.len() {
            return Err(Error::DimensionMismatch {
                expected: self.factors.len(),
                found: unitaries.len(),
            });
        }
        let x = Operator::pauli_x();
        for (j, (u, f)) in unitaries.iter().zip(&self.factors).enumerate() {
            let img = &(u * &x) * &u.dagger();
            if u.unitary_deviation() > FACTOR_TOL || (&img - f).max_abs() > FACTOR_TOL {
                return Err(Error::InvalidStabilizer(format!(
                    "conjugator for qubit {j} does not map X to the factor"
                )));
            }
        }
        self.conjugators = Some(unitaries);
        Ok(self)
    }

    pub fn n_qubits(&self) -> usize {
        self.factors.len()
    }

    pub fn factors(&self) -> &[Operator] {
        &self.factors
    }

    pub fn factor(&self, qubit: usize) -> &Operator {
        &self.factors[qubit]
    }

    pub fn conjugators(&self) -> Option<&[Operator]> {
        self.conjugators.as_deref()
    }

    /// Bloch direction `m̂_j` of factor `j`.
    pub fn direction(&self, qubit: usize) -> [f64; 3] {
        let c = self.factors[qubit]
            .pauli_coefficients()
            .expect("factors are 2x2");
        [c[1].re, c[2].re, c[3].re]
    }

    /// Full `2ⁿ × 2ⁿ` matrix of `S`.
    pub fn matrix(&self) -> Operator {
        Operator::tensor(&self.factors)
    }

    /// Explicit conjugators if present, otherwise the canonical rotations.
    fn local_unitaries(&self) -> Vec<Operator> {
        match &self.conjugators {
            Some(u) => u.clone(),
            None => (0..self.n_qubits())
                .map(|j| rotation_from_x(self.direction(j)))
                .collect(),
        }
    }
}

fn check_factor(j: usize, f: &Operator) -> Result<()> {
    if f.dim() != 2 {
        return Err(Error::InvalidStabilizer(format!(
            "factor {j} is not a one-qubit operator"
        )));
    }
    let herm = f.hermitian_deviation();
    let tr = f.trace().norm();
    let inv = (&(f * f) - &Operator::identity(2)).max_abs();
    if herm > FACTOR_TOL || tr > FACTOR_TOL || inv > FACTOR_TOL {
        return Err(Error::InvalidStabilizer(format!(
            "factor {j} is not a traceless Hermitian involution \
             (hermiticity {herm:e}, trace {tr:e}, f^2-I {inv:e})"
        )));
    }
    Ok(())
}

/// SU(2) rotation `U` with `U X U† = m̂·σ`.
fn rotation_from_x(m: [f64; 3]) -> Operator {
    // axis x̂ × m̂ = (0, −m_z, m_y), angle between x̂ and m̂
    let axis = [0.0, -m[2], m[1]];
    let s = (axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let c = m[0];
    if s < 1e-14 {
        return if c > 0.0 {
            Operator::identity(2)
        } else {
            // π about ẑ: (−iZ) X (iZ) = −X
            Operator::pauli_z().scale(C64::new(0.0, -1.0))
        };
    }
    let theta = s.atan2(c);
    let n = Operator::from_bloch([0.0, axis[1] / s, axis[2] / s]);
    exp_hermitian(&n, C64::new(0.0, -theta / 2.0))
}

/// The code defined by a single generalized stabilizer.
#[derive(Clone, Debug)]
pub struct Codespace {
    stabilizer: GeneralizedStabilizer,
    projector: Operator,
    codewords: Vec<Ket>,
}

impl Codespace {
    pub fn stabilizer(&self) -> &GeneralizedStabilizer {
        &self.stabilizer
    }

    /// `P = (I + S)/2`.
    pub fn projector(&self) -> &Operator {
        &self.projector
    }

    /// Orthonormal basis of the +1 eigenspace, indexed by logical bitstring.
    pub fn codewords(&self) -> &[Ket] {
        &self.codewords
    }

    pub fn n_qubits(&self) -> usize {
        self.stabilizer.n_qubits()
    }

    pub fn n_logical(&self) -> usize {
        self.n_qubits() - 1
    }

    /// Physical dimension `2ⁿ`.
    pub fn dim(&self) -> usize {
        1 << self.n_qubits()
    }
}

/// Projector and deterministic codeword basis for `S`.
///
/// The fiducial codeword is `U·(|0…0⟩ + |1…1⟩)/√2`, i.e. the normalized
/// projection of `|0…0⟩` for `S = X^{⊗n}`; logical bitstring `b` maps to
/// `∏_μ X̄_μ^{b_μ}` applied to it, bitstrings in lexicographic order.
pub fn build_codespace(s: &GeneralizedStabilizer) -> Result<Codespace> {
    let n = s.n_qubits();
    let smat = s.matrix();
    let dim = smat.dim();
    let deviation = (&(&smat * &smat) - &Operator::identity(dim)).max_abs();
    if deviation > CODE_TOL {
        return Err(Error::NotInvolution { deviation });
    }
    let projector = (&Operator::identity(dim) + &smat).scale_real(0.5);

    let u = Operator::tensor(&s.local_unitaries());
    let x_code = Operator::tensor(&vec![Operator::pauli_x(); n]);
    let p_x = (&Operator::identity(dim) + &x_code).scale_real(0.5);
    let mut w0 = p_x.apply(&basis_ket(dim, 0));
    normalize(&mut w0);

    let k = n - 1;
    let codewords = (0..1usize << k)
        .map(|bits| {
            let mut w = w0.clone();
            for mu in 0..k {
                if bits >> (k - 1 - mu) & 1 == 1 {
                    w = flip_qubit(&w, mu, n);
                }
            }
            u.apply(&w)
        })
        .collect();

    Ok(Codespace {
        stabilizer: s.clone(),
        projector,
        codewords,
    })
}

/// Applies X on `qubit` by permuting amplitudes.
fn flip_qubit(v: &Ket, qubit: usize, n: usize) -> Ket {
    let mask = 1usize << (n - 1 - qubit);
    Ket::from_shape_fn(v.len(), |i| v[i ^ mask])
}

/// Logical Pauli operators of the code.
#[derive(Clone, Debug)]
pub struct EncodedOperators {
    pub xbar: Vec<Operator>,
    pub zbar: Vec<Operator>,
}

impl EncodedOperators {
    /// `X̄_μ X̄_ν`.
    pub fn xx(&self, mu: usize, nu: usize) -> Operator {
        &self.xbar[mu] * &self.xbar[nu]
    }
}

/// `X̄_μ = U_μXU_μ†` on qubit μ, `Z̄_μ = U_μZU_μ†` on qubit μ times `U_nZU_n†`
/// on the last qubit, for μ = 1…n−1.
pub fn encoded_operators(s: &GeneralizedStabilizer) -> Result<EncodedOperators> {
    let us = s.conjugators().ok_or(Error::MissingConjugators)?;
    let n = s.n_qubits();
    let conj = |u: &Operator, p: Operator| &(u * &p) * &u.dagger();
    let last_z = conj(&us[n - 1], Operator::pauli_z()).embed(n - 1, n)?;
    let mut xbar = Vec::with_capacity(n - 1);
    let mut zbar = Vec::with_capacity(n - 1);
    for (mu, u) in us.iter().enumerate().take(n - 1) {
        xbar.push(conj(u, Operator::pauli_x()).embed(mu, n)?);
        zbar.push(&conj(u, Operator::pauli_z()).embed(mu, n)? * &last_z);
    }
    Ok(EncodedOperators { xbar, zbar })
}

/// Maps a logical state on `n − 1` qubits into the codespace.
pub fn encode(logical: &Ket, cs: &Codespace) -> Result<Ket> {
    let words = cs.codewords();
    if logical.len() != words.len() {
        return Err(Error::DimensionMismatch {
            expected: words.len(),
            found: logical.len(),
        });
    }
    let mut out = Ket::zeros(cs.dim());
    for (amp, w) in logical.iter().zip(words) {
        out.scaled_add(*amp, w);
    }
    Ok(out)
}

/// Outcome of the Knill–Laflamme test for a single known error.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KnillLaflamme {
    pub ok: bool,
    /// `Λ_E`, the mean diagonal of the codeword Gram matrix of `E†E`.
    pub lambda: f64,
    /// `max_{μν} |⟨w_μ|E†E|w_ν⟩ − Λ δ_{μν}|`.
    pub residual: f64,
}

/// Checks `⟨w_μ|E†E|w_ν⟩ = Λ δ_{μν}` over the codeword basis.
pub fn kl_check(e: &Operator, cs: &Codespace) -> KnillLaflamme {
    let ede = &e.dagger() * e;
    let images: Vec<Ket> = cs.codewords().iter().map(|w| ede.apply(w)).collect();
    let words = cs.codewords();
    let diag: Vec<C64> = words.iter().zip(&images).map(|(w, v)| inner(w, v)).collect();
    let lambda = diag.iter().map(|z| z.re).sum::<f64>() / diag.len() as f64;
    let mut residual: f64 = 0.0;
    for (mu, w) in words.iter().enumerate() {
        for (nu, v) in images.iter().enumerate() {
            let target = if mu == nu { ONE * lambda } else { C64::new(0.0, 0.0) };
            residual = residual.max((inner(w, v) - target).norm());
        }
    }
    KnillLaflamme {
        ok: residual <= CODE_TOL * lambda.abs().max(1.0),
        lambda,
        residual,
    }
}

/// One-qubit logical preparation.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogicalState {
    Zero,
    One,
    Plus,
    Minus,
    PlusI,
    MinusI,
}

impl LogicalState {
    pub fn ket(self) -> Ket {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let (a, b) = match self {
            LogicalState::Zero => (ONE, C64::new(0.0, 0.0)),
            LogicalState::One => (C64::new(0.0, 0.0), ONE),
            LogicalState::Plus => (ONE * h, ONE * h),
            LogicalState::Minus => (ONE * h, -ONE * h),
            LogicalState::PlusI => (ONE * h, C64::new(0.0, h)),
            LogicalState::MinusI => (ONE * h, C64::new(0.0, -h)),
        };
        Ket::from_vec(vec![a, b])
    }

    pub fn symbol(self) -> &'static str {
        match self {
            LogicalState::Zero => "0",
            LogicalState::One => "1",
            LogicalState::Plus => "+",
            LogicalState::Minus => "-",
            LogicalState::PlusI => "i",
            LogicalState::MinusI => "-i",
        }
    }
}

impl FromStr for LogicalState {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "0" => Ok(LogicalState::Zero),
            "1" => Ok(LogicalState::One),
            "+" => Ok(LogicalState::Plus),
            "-" | "−" => Ok(LogicalState::Minus),
            "i" | "+i" => Ok(LogicalState::PlusI),
            "-i" | "−i" => Ok(LogicalState::MinusI),
            other => Err(Error::InvalidConfig(format!(
                "unknown logical state {other:?}"
            ))),
        }
    }
}

/// Tensor product of one-qubit logical preparations; the first entry is
/// logical qubit 1 (leftmost factor).
pub fn logical_product_state(states: &[LogicalState]) -> Ket {
    states.iter().fold(Ket::from_vec(vec![ONE]), |acc, s| {
        let k = s.ket();
        Ket::from_shape_fn(acc.len() * 2, |i| acc[i / 2] * k[i % 2])
    })
}

/// Stabilizer group with several commuting Pauli generators.
#[derive(Clone, Debug)]
pub struct PauliStabilizerGroup {
    generators: Vec<PauliString>,
}

impl PauliStabilizerGroup {
    pub fn new(generators: Vec<PauliString>) -> Result<Self> {
        let n = generators
            .first()
            .ok_or_else(|| Error::InvalidStabilizer("no generators".into()))?
            .len();
        for (a, g) in generators.iter().enumerate() {
            if g.len() != n {
                return Err(Error::LengthMismatch {
                    left: n,
                    right: g.len(),
                });
            }
            if !matches!(g.phase.power(), 0 | 2) {
                return Err(Error::InvalidStabilizer(format!("{g} is not Hermitian")));
            }
            for h in &generators[..a] {
                if g.anticommutes(h)? {
                    return Err(Error::InvalidStabilizer(format!(
                        "{g} and {h} anticommute"
                    )));
                }
            }
        }
        Ok(Self { generators })
    }

    /// `{XZZXI, IXZZX, XIXZZ, ZXIXZ}`.
    pub fn five_qubit_code() -> Self {
        let gens = ["XZZXI", "IXZZX", "XIXZZ", "ZXIXZ"]
            .iter()
            .map(|s| s.parse().expect("valid literal"))
            .collect();
        Self::new(gens).expect("five-qubit generators commute")
    }

    pub fn generators(&self) -> &[PauliString] {
        &self.generators
    }

    pub fn n_qubits(&self) -> usize {
        self.generators[0].len()
    }

    /// `∏_g (I + g)/2`.
    pub fn projector(&self) -> Operator {
        let dim = 1 << self.n_qubits();
        let id = Operator::identity(dim);
        self.generators.iter().fold(id.clone(), |acc, g| {
            &acc * &(&id + &g.to_matrix()).scale_real(0.5)
        })
    }

    /// First generator acting as `letter` on `qubit`.
    pub fn generator_acting_as(&self, qubit: usize, letter: Pauli) -> Option<&PauliString> {
        self.generators.iter().find(|g| g.letters[qubit] == letter)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{eigh, norm};

    fn ps(s: &str) -> PauliString {
        s.parse().unwrap()
    }

    fn close(a: &Ket, b: &Ket, tol: f64) -> bool {
        a.iter().zip(b.iter()).all(|(x, y)| (x - y).norm() <= tol)
    }

    fn ket(amps: &[f64]) -> Ket {
        Ket::from_iter(amps.iter().map(|&a| C64::new(a, 0.0)))
    }

    #[test]
    fn xx_codewords_match_bell_basis() {
        let cs = build_codespace(&GeneralizedStabilizer::from_pauli(&ps("XX")).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert!(close(&cs.codewords()[0], &ket(&[h, 0.0, 0.0, h]), 1e-15));
        assert!(close(&cs.codewords()[1], &ket(&[0.0, h, h, 0.0]), 1e-15));
    }

    #[test]
    fn single_qubit_z_code_is_ground_state() {
        let cs = build_codespace(&GeneralizedStabilizer::from_pauli(&ps("Z")).unwrap()).unwrap();
        assert_eq!(cs.codewords().len(), 1);
        let w = &cs.codewords()[0];
        assert!((w[0].norm() - 1.0).abs() < 1e-14 && w[1].norm() < 1e-14);
    }

    #[test]
    fn xxx_codespace_matches_eigensolver() {
        let s = GeneralizedStabilizer::from_pauli(&ps("XXX")).unwrap();
        let cs = build_codespace(&s).unwrap();
        let (vals, vecs) = eigh(&s.matrix());
        let plus: Vec<&Ket> = vals.iter().zip(&vecs).filter(|(v, _)| **v > 0.0).map(|(_, k)| k).collect();
        assert_eq!(plus.len(), 4);
        assert_eq!(cs.codewords().len(), 4);
        // every codeword lies in the span of the +1 eigenvectors
        for w in cs.codewords() {
            let captured: f64 = plus.iter().map(|v| inner(v, w).norm_sqr()).sum();
            assert!((captured - 1.0).abs() < 1e-12);
        }
        assert!((cs.projector().trace().re - 4.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_non_involutive_factors() {
        let bad = Operator::pauli_x().scale_real(2.0);
        assert!(GeneralizedStabilizer::new(vec![bad]).is_err());
        assert!(GeneralizedStabilizer::new(vec![Operator::identity(2)]).is_err());
        assert!(GeneralizedStabilizer::from_pauli(&ps("XI")).is_err());
        assert!(GeneralizedStabilizer::from_pauli(&ps("iXX")).is_err());
        assert!(GeneralizedStabilizer::from_directions(&[[1.0, 1.0, 0.0]]).is_err());
    }

    #[test]
    fn encoded_operators_for_xx_and_xxx() {
        let e2 = encoded_operators(&GeneralizedStabilizer::from_pauli(&ps("XX")).unwrap()).unwrap();
        assert_eq!(e2.xbar[0], ps("XI").to_matrix());
        assert_eq!(e2.zbar[0], ps("ZZ").to_matrix());
        let e3 = encoded_operators(&GeneralizedStabilizer::from_pauli(&ps("XXX")).unwrap()).unwrap();
        assert_eq!(e3.xbar[0], ps("XII").to_matrix());
        assert_eq!(e3.zbar[0], ps("ZIZ").to_matrix());
        assert_eq!(e3.xx(0, 1), ps("XXI").to_matrix());
    }

    #[test]
    fn hadamard_conjugated_code_has_valid_encoded_operators() {
        for n in 2..=4 {
            let s = GeneralizedStabilizer::conjugated(vec![Operator::hadamard(); n]).unwrap();
            assert!((&s.matrix() - &Operator::tensor(&vec![Operator::pauli_z(); n])).max_abs() < 1e-14);
            let ops = encoded_operators(&s).unwrap();
            check_commutation(&ops, &s.matrix());
        }
    }

    fn check_commutation(ops: &EncodedOperators, s: &Operator) {
        let k = ops.xbar.len();
        for mu in 0..k {
            assert!(ops.xbar[mu].anticommutator(&ops.zbar[mu]).max_abs() < 1e-12);
            assert!(ops.xbar[mu].commutator(s).max_abs() < 1e-12);
            assert!(ops.zbar[mu].commutator(s).max_abs() < 1e-12);
            for nu in 0..k {
                assert!(ops.xbar[mu].commutator(&ops.xbar[nu]).max_abs() < 1e-12);
                assert!(ops.zbar[mu].commutator(&ops.zbar[nu]).max_abs() < 1e-12);
                if mu != nu {
                    assert!(ops.xbar[mu].commutator(&ops.zbar[nu]).max_abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn missing_conjugators_are_reported() {
        let s = GeneralizedStabilizer::new(vec![Operator::pauli_x(), Operator::pauli_x()]).unwrap();
        assert!(matches!(encoded_operators(&s), Err(Error::MissingConjugators)));
        // the codespace itself does not need them
        assert_eq!(build_codespace(&s).unwrap().codewords().len(), 2);
    }

    #[test]
    fn encode_examples_for_xx() {
        let cs = build_codespace(&GeneralizedStabilizer::from_pauli(&ps("XX")).unwrap()).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let zero = encode(&LogicalState::Zero.ket(), &cs).unwrap();
        let one = encode(&LogicalState::One.ket(), &cs).unwrap();
        let plus = encode(&LogicalState::Plus.ket(), &cs).unwrap();
        assert!(close(&zero, &ket(&[h, 0.0, 0.0, h]), 1e-15));
        assert!(close(&one, &ket(&[0.0, h, h, 0.0]), 1e-15));
        assert!(close(&plus, &ket(&[0.5, 0.5, 0.5, 0.5]), 1e-15));
        assert!(encode(&ket(&[1.0, 0.0, 0.0, 0.0]), &cs).is_err());
    }

    #[test]
    fn kl_examples() {
        let cs = build_codespace(&GeneralizedStabilizer::from_pauli(&ps("XX")).unwrap()).unwrap();
        let kappa: f64 = 0.7;
        let emission = Operator::sigma_minus().scale_real(2.0 * kappa.sqrt()).embed(0, 2).unwrap();
        let r = kl_check(&emission, &cs);
        assert!(r.ok);
        // E†E = 4κ|1⟩⟨1|⊗I has codeword expectation 2κ
        assert!((r.lambda - 2.0 * kappa).abs() < 1e-14);

        let id = kl_check(&Operator::identity(4), &cs);
        assert!(id.ok && (id.lambda - 1.0).abs() < 1e-15);

        // ZI is unitary, hence trivially correctable once known
        let z = kl_check(&ps("ZI").to_matrix(), &cs);
        assert!(z.ok && (z.lambda - 1.0).abs() < 1e-15);

        // decay is not correctable on the ZZ code: off-diagonal Gram entry 2
        let zz = build_codespace(&GeneralizedStabilizer::from_pauli(&ps("ZZ")).unwrap()).unwrap();
        let bad = kl_check(&Operator::sigma_minus().scale_real(2.0).embed(0, 2).unwrap(), &zz);
        assert!(!bad.ok);
        assert!((bad.residual - 2.0).abs() < 1e-12);
    }

    #[test]
    fn five_qubit_code_has_x_generator_for_every_qubit() {
        let code = PauliStabilizerGroup::five_qubit_code();
        for j in 0..5 {
            let g = code.generator_acting_as(j, Pauli::X).expect("X generator");
            assert_eq!(g.letters[j], Pauli::X);
        }
        let p = code.projector();
        assert!((p.trace().re - 2.0).abs() < 1e-12);
        assert!((&(&p * &p) - &p).max_abs() < 1e-12);
    }

    #[test]
    fn logical_product_state_ordering() {
        let k = logical_product_state(&[LogicalState::One, LogicalState::Zero]);
        assert_eq!(k.len(), 4);
        assert!((k[2] - ONE).norm() < 1e-15);
        assert!((norm(&logical_product_state(&[LogicalState::PlusI; 3])) - 1.0).abs() < 1e-14);
        assert_eq!("-i".parse::<LogicalState>().unwrap(), LogicalState::MinusI);
        assert!("2".parse::<LogicalState>().is_err());
    }
}
