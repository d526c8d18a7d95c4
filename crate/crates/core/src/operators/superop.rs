//! Lindblad dissipator and the measurement-innovation superoperator.

use super::{Operator, C64};
use crate::error::{Error, Result};

fn check_shapes(c: &Operator, rho: &Operator) -> Result<()> {
    if c.dim() != rho.dim() {
        return Err(Error::DimensionMismatch {
            expected: c.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

/// `𝒟[c]ρ = cρc† − ½(c†cρ + ρc†c)`.
pub fn dissipator(c: &Operator, rho: impl AsRef<Operator>) -> Result<Operator> {
    let rho = rho.as_ref();
    check_shapes(c, rho)?;
    let cd = c.dagger();
    let cdc = &cd * c;
    let jump = &(c * rho) * &cd;
    let anti = &(&cdc * rho) + &(rho * &cdc);
    Ok(&jump - &anti.scale_real(0.5))
}

/// `ℋ[c]ρ = cρ + ρc† − ρ·tr(cρ + ρc†)`.
pub fn h_superop(c: &Operator, rho: impl AsRef<Operator>) -> Result<Operator> {
    let rho = rho.as_ref();
    check_shapes(c, rho)?;
    let sum = &(c * rho) + &(rho * &c.dagger());
    let tr: C64 = sum.trace();
    Ok(&sum - &rho.scale(tr))
}
