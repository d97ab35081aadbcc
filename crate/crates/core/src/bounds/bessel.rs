//! First positive zero of `J_ν`.

use nalgebra::DMatrix;

use crate::error::{param, Error, Result};

/// Truncation order for the tridiagonal eigenproblem.
const ORDER: usize = 160;

/// `j_{ν,1}` for `ν ∈ [0, 10]`.
///
/// The positive eigenvalues of the symmetric tridiagonal matrix with zero
/// diagonal and off-diagonal `1/(2 sqrt((ν+k)(ν+k+1)))`, `k = 1, 2, …`,
/// converge to `1/j_{ν,k}`; the largest gives the first zero. The result
/// is cross-checked against a sign change of the ascending series.
pub fn bessel_first_zero(nu: f64) -> Result<f64> {
    if !(0.0..=10.0).contains(&nu) {
        return Err(param(format!("Bessel order must lie in [0, 10], got {nu}")));
    }
    let mut t = DMatrix::<f64>::zeros(ORDER, ORDER);
    for k in 0..ORDER - 1 {
        let a = nu + k as f64 + 1.0;
        let off = 0.5 / (a * (a + 1.0)).sqrt();
        t[(k, k + 1)] = off;
        t[(k + 1, k)] = off;
    }
    let top = t.symmetric_eigenvalues().iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let zero = 1.0 / top;
    let eps = 1e-6 * zero;
    if bessel_series(nu, zero - eps) * bessel_series(nu, zero + eps) >= 0.0 {
        return Err(Error::Numeric(format!("no sign change of J_{nu} near {zero}")));
    }
    Ok(zero)
}

/// `Γ(ν+1)(2/x)^ν J_ν(x) = Σ_k (-x²/4)^k / (k! (ν+1)_k)`, which has the
/// same positive zeros as `J_ν`.
pub fn bessel_series(nu: f64, x: f64) -> f64 {
    let q = -0.25 * x * x;
    let mut term = 1.0;
    let mut sum = 1.0;
    for k in 1..400 {
        term *= q / (k as f64 * (nu + k as f64));
        sum += term;
        if term.abs() < 1e-17 * sum.abs().max(1e-300) && k as f64 > x {
            break;
        }
    }
    sum
}
