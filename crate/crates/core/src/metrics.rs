//! Fidelity, leakage and exponential-decay fits.

use serde::Serialize;

use crate::codes::Codespace;
use crate::error::{Error, Result};
use crate::operators::{Ket, Operator};

/// Fraction of samples dropped from the start of a series before fitting.
pub const FIT_SKIP_FRACTION: f64 = 0.1;

/// `y ≈ amplitude · e^{−rate·t}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct DecayFit {
    pub rate: f64,
    pub amplitude: f64,
    pub r_squared: f64,
}

/// `⟨ψ|ρ|ψ⟩`, with `ψ` normalized here so global scale does not matter.
pub fn state_fidelity(rho: impl AsRef<Operator>, psi: &Ket) -> Result<f64> {
    let rho = rho.as_ref();
    if rho.dim() != psi.len() {
        return Err(Error::DimensionMismatch {
            expected: rho.dim(),
            found: psi.len(),
        });
    }
    let norm2: f64 = psi.iter().map(|z| z.norm_sqr()).sum();
    Ok(rho.expectation(psi).re / norm2)
}

/// `1 − tr(Pρ)`.
pub fn codespace_leakage(rho: impl AsRef<Operator>, cs: &Codespace) -> Result<f64> {
    let rho = rho.as_ref();
    if rho.dim() != cs.dim() {
        return Err(Error::DimensionMismatch {
            expected: cs.dim(),
            found: rho.dim(),
        });
    }
    let p = cs.projector();
    let d = rho.dim();
    // tr(Pρ) without forming the product
    let mut tr = 0.0;
    for i in 0..d {
        for j in 0..d {
            tr += (p.get(i, j) * rho.get(j, i)).re;
        }
    }
    Ok(1.0 - tr)
}

/// `tr ρ²` for Hermitian `ρ`.
pub fn purity(rho: impl AsRef<Operator>) -> f64 {
    rho.as_ref().array().iter().map(|z| z.norm_sqr()).sum()
}

/// Least-squares fit of `ln y` against `t` after dropping the first 10% of
/// samples.
pub fn fit_exponential(t: &[f64], y: &[f64]) -> Result<DecayFit> {
    if t.len() != y.len() {
        return Err(Error::LengthMismatch {
            left: t.len(),
            right: y.len(),
        });
    }
    let skip = (t.len() as f64 * FIT_SKIP_FRACTION).floor() as usize;
    let (t, y) = (&t[skip..], &y[skip..]);
    if t.len() < 2 {
        return Err(Error::InvalidConfig("need at least two samples to fit".into()));
    }
    if let Some(bad) = y.iter().find(|v| v.is_nan() || **v <= 0.0) {
        return Err(Error::InvalidConfig(format!(
            "non-positive value {bad} in fit window"
        )));
    }
    let logs: Vec<f64> = y.iter().map(|v| v.ln()).collect();
    let n = t.len() as f64;
    let tm = t.iter().sum::<f64>() / n;
    let lm = logs.iter().sum::<f64>() / n;
    let (mut stt, mut stl) = (0.0, 0.0);
    for (ti, li) in t.iter().zip(&logs) {
        stt += (ti - tm) * (ti - tm);
        stl += (ti - tm) * (li - lm);
    }
    if stt == 0.0 {
        return Err(Error::InvalidConfig("all sample times are equal".into()));
    }
    let slope = stl / stt;
    let intercept = lm - slope * tm;
    let (mut ss_res, mut ss_tot) = (0.0, 0.0);
    for (ti, li) in t.iter().zip(&logs) {
        let r = li - (intercept + slope * ti);
        ss_res += r * r;
        ss_tot += (li - lm) * (li - lm);
    }
    let r_squared = if ss_tot <= 1e-24 * n * lm.abs().max(1.0).powi(2) {
        1.0
    } else {
        (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
    };
    Ok(DecayFit {
        rate: -slope,
        amplitude: intercept.exp(),
        r_squared,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codes::{build_codespace, GeneralizedStabilizer};
    use crate::operators::{basis_ket, DensityMatrix, C64};
    use proptest::prelude::*;

    fn xx_code() -> Codespace {
        build_codespace(&GeneralizedStabilizer::from_pauli(&"XX".parse().unwrap()).unwrap()).unwrap()
    }

    #[test]
    fn fidelity_examples() {
        let psi = (basis_ket(4, 0) + basis_ket(4, 3)).mapv(|z| z * std::f64::consts::FRAC_1_SQRT_2);
        let rho = DensityMatrix::from_ket(&psi);
        assert!((state_fidelity(&rho, &psi).unwrap() - 1.0).abs() < 1e-15);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!((state_fidelity(&mixed, &psi).unwrap() - 0.25).abs() < 1e-15);
        assert!(state_fidelity(&mixed, &basis_ket(2, 0)).is_err());
        let phased = psi.mapv(|z| z * C64::from_polar(1.0, 0.7));
        assert!((state_fidelity(&rho, &phased).unwrap() - 1.0).abs() < 1e-14);
    }

    #[test]
    fn leakage_examples() {
        let cs = xx_code();
        let rho = DensityMatrix::from_ket(&cs.codewords()[0]);
        assert!(codespace_leakage(&rho, &cs).unwrap().abs() < 1e-12);
        let ten = DensityMatrix::from_ket(&basis_ket(4, 2));
        assert!((codespace_leakage(&ten, &cs).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn purity_of_mixed_state() {
        assert!((purity(DensityMatrix::maximally_mixed(4)) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn exact_exponential() {
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.01).collect();
        let y: Vec<f64> = t.iter().map(|t| 2.0 * (-3.0 * t).exp()).collect();
        let fit = fit_exponential(&t, &y).unwrap();
        assert!((fit.rate - 3.0).abs() < 1e-6);
        assert!((fit.amplitude - 2.0).abs() < 1e-6);
        assert!(fit.r_squared > 0.999_999);
    }

    #[test]
    fn constant_series_has_zero_rate() {
        let t: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let fit = fit_exponential(&t, &vec![0.5; 50]).unwrap();
        assert_eq!(fit.rate, 0.0);
        assert_eq!(fit.r_squared, 1.0);
    }

    #[test]
    fn rejects_bad_input() {
        assert!(fit_exponential(&[0.0, 1.0, 2.0], &[1.0, 0.0, 1.0]).is_err());
        assert!(fit_exponential(&[0.0, 1.0], &[1.0]).is_err());
    }

    proptest! {
        #[test]
        fn noisy_exponential_within_one_percent(
            rate in 0.2f64..5.0,
            amp in 0.1f64..10.0,
            noise in proptest::collection::vec(-1e-3f64..1e-3, 100),
        ) {
            let t: Vec<f64> = (0..100).map(|k| k as f64 * 2.0 / (rate * 100.0)).collect();
            let y: Vec<f64> = t.iter().zip(&noise).map(|(t, e)| amp * (-rate * t).exp() * (1.0 + e)).collect();
            let fit = fit_exponential(&t, &y).unwrap();
            prop_assert!((fit.rate - rate).abs() / rate < 0.01);
        }
    }
}
