//! Free-electron sector: self-energy, dispersion-relation shift, and the
//! physical <-> bare mass maps, all to leading order in the coupling.

use crate::quadrature::{integrate_adaptive, QuadError};
use crate::units::{Params, ParamsError};
use serde::Serialize;
use std::f64::consts::PI;
use thiserror::Error;

/// Solution of the mass map, with solver diagnostics.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct MassRenormResult {
    pub m: f64,
    pub m0: f64,
    pub alpha: f64,
    pub lambda: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Dispersion-relation evaluation at fixed total momentum.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DispersionResult {
    pub p: [f64; 3],
    /// E_P - E_0.
    pub shift: f64,
    /// Closed-form coefficient of |P|^2 around P = 0.
    pub p2_coefficient: f64,
    /// Set when |P| > 0.5 m0, where the leading-order error degrades.
    pub large_momentum_warning: bool,
}

#[derive(Debug, Error)]
pub enum RenormError {
    #[error("dispersion relation requires |P| < m0 (|P| = {p}, m0 = {m0})")]
    MomentumTooLarge { p: f64, m0: f64 },
    #[error("bare-mass solve did not converge after {0} iterations")]
    NoConvergence(usize),
    #[error(transparent)]
    Params(#[from] ParamsError),
    #[error(transparent)]
    Quad(#[from] QuadError),
}

/// The bracket ln(1 + L/2m0) - (3/4) L(L + 4m0/3)/(L + 2m0)^2 common to the
/// mass map and the |P|^2 coefficient.
fn mass_bracket(m0: f64, lambda: f64) -> f64 {
    if lambda == 0.0 {
        return 0.0;
    }
    (1.0 + lambda / (2.0 * m0)).ln()
        - 0.75 * lambda * (lambda + 4.0 * m0 / 3.0) / ((lambda + 2.0 * m0) * (lambda + 2.0 * m0))
}

/// Vacuum self-energy (2 alpha/pi)(Lambda - 2 m0 ln(1 + Lambda/2m0)).
pub fn self_energy(params: &Params) -> Result<f64, RenormError> {
    params.validate()?;
    let m0 = params.bare_mass_or_derive(1e-12)?;
    if params.lambda == 0.0 {
        return Ok(0.0);
    }
    Ok(2.0 * params.alpha / PI
        * (params.lambda - 2.0 * m0 * (1.0 + params.lambda / (2.0 * m0)).ln()))
}

/// Closed-form coefficient of |P|^2 in the dispersion relation:
/// 1/(2m0) - (8 alpha / 3 pi m0) * bracket, i.e. 1/(2m) at leading order.
pub fn dispersion_p2_coefficient(params: &Params) -> Result<f64, RenormError> {
    params.validate()?;
    let m0 = params.bare_mass_or_derive(1e-12)?;
    Ok(1.0 / (2.0 * m0)
        - 8.0 * params.alpha / (3.0 * PI * m0) * mass_bracket(m0, params.lambda))
}

/// E_P - E_0 by 2D quadrature of the full momentum-space integral, with the
/// P.k term retained in the denominator.
///
/// Everything is reduced to the m0 = 1/2 normalization (energies scale as
/// 2 m0 * g(Lambda/2m0, P/2m0)); the azimuthal angle is integrated out and
/// the (|k|, cos theta) integral is done by iterated adaptive quadrature.
pub fn dispersion_shift(
    p: [f64; 3],
    params: &Params,
    tol: f64,
) -> Result<DispersionResult, RenormError> {
    params.validate()?;
    let m0 = params.bare_mass_or_derive(1e-12)?;
    let pnorm = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    if pnorm >= m0 {
        return Err(RenormError::MomentumTooLarge { p: pnorm, m0 });
    }
    let p2c = dispersion_p2_coefficient(params)?;
    let ph = pnorm / (2.0 * m0);
    let lh = params.lambda / (2.0 * m0);
    if pnorm == 0.0 || params.alpha == 0.0 || lh == 0.0 {
        // every integrand term carries |P|^2 or (P.k)^2, so the radiative
        // part vanishes and only the free |P|^2/(2m0) piece survives
        return Ok(DispersionResult {
            p,
            shift: pnorm * pnorm / (2.0 * m0),
            p2_coefficient: p2c,
            large_momentum_warning: false,
        });
    }
    let inner_tol = tol * 0.1;
    let outer = integrate_adaptive(
        |k: f64| {
            let kk = k * k + k;
            let inner = integrate_adaptive(
                |mu: f64| {
                    let pk = ph * k * mu;
                    k / (kk - 2.0 * pk)
                        * (ph * ph / (k * k) + pk * pk * (2.0 / (kk * kk) - 1.0 / (k * k * k * k)))
                },
                -1.0,
                1.0,
                inner_tol,
            )
            .map(|r| r.value)
            .unwrap_or(f64::NAN);
            2.0 * PI * k * k * inner
        },
        0.0,
        lh,
        tol,
    )?;
    let shift = 2.0 * m0 * (ph * ph - params.alpha / (PI * PI) * outer.value);
    Ok(DispersionResult {
        p,
        shift,
        p2_coefficient: p2c,
        large_momentum_warning: pnorm > 0.5 * m0,
    })
}

/// Physical mass from the bare mass (exact leading-order relation).
pub fn physical_mass(m0: f64, alpha: f64, lambda: f64) -> MassRenormResult {
    let m = m0 * (1.0 + alpha * 16.0 / (3.0 * PI) * mass_bracket(m0, lambda));
    MassRenormResult {
        m,
        m0,
        alpha,
        lambda,
        residual: 0.0,
        iterations: 0,
    }
}

/// Invert the mass map: the unique m0 in (0, m] with physical_mass(m0) = m.
///
/// The relation is strictly increasing in m0, so plain bisection on (0, m]
/// brackets the root; tolerance is relative on m0.
pub fn bare_mass(m: f64, alpha: f64, lambda: f64, tol: f64) -> MassRenormResult {
    if alpha == 0.0 || lambda == 0.0 {
        return MassRenormResult {
            m,
            m0: m,
            alpha,
            lambda,
            residual: 0.0,
            iterations: 0,
        };
    }
    let mut lo = m * 1e-15;
    let mut hi = m;
    let mut iterations = 0usize;
    // f(m0) = physical_mass(m0) - m; f(hi) >= 0, f(lo) < 0
    let f = |m0: f64| physical_mass(m0, alpha, lambda).m - m;
    let mut mid;
    while (hi - lo) > tol * m * 0.5 && iterations < 200 {
        mid = 0.5 * (lo + hi);
        if f(mid) >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    mid = 0.5 * (lo + hi);
    MassRenormResult {
        m,
        m0: mid,
        alpha,
        lambda,
        residual: f(mid).abs(),
        iterations,
    }
}

/// Dipole-approximation mass m0 + (4 alpha / 3 pi) Lambda.
pub fn dipole_mass(m0: f64, alpha: f64, lambda: f64) -> f64 {
    m0 + 4.0 * alpha / (3.0 * PI) * lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(m0: f64, alpha: f64, lambda: f64) -> Params {
        Params {
            m: m0, // unused by the m0-explicit paths
            m0: Some(m0),
            alpha,
            lambda,
            ..Params::default()
        }
    }

    #[test]
    fn self_energy_values() {
        let p = params(0.5, 1.0, 1.0);
        let v = self_energy(&p).unwrap();
        // (2/pi)(1 - ln 2)
        assert!((v - 0.19534857206227818).abs() < 1e-15);
        assert_eq!(self_energy(&params(0.5, 0.0, 1.0)).unwrap(), 0.0);
        assert_eq!(self_energy(&params(0.5, 1.0, 0.0)).unwrap(), 0.0);
    }

    #[test]
    fn self_energy_matches_quadrature() {
        // independent oracle at m0 = 1/2: (2a/pi) Int_0^L k/(1+k) dk
        let p = params(0.5, 0.7, 3.0);
        let v = self_energy(&p).unwrap();
        let q = integrate_adaptive(|k| k / (1.0 + k), 0.0, 3.0, 1e-13).unwrap();
        assert!((v - 2.0 * 0.7 / PI * q.value).abs() < 1e-12);
    }

    #[test]
    fn mass_map_examples() {
        assert_eq!(physical_mass(1.0, 0.0, 5.0).m, 1.0);
        assert_eq!(physical_mass(1.0, 0.1, 0.0).m, 1.0);
        let r = physical_mass(1.0, 1.0 / 137.0, 2.0);
        assert!((r.m - 1.0047168374003004).abs() < 1e-14);
        assert!((mass_bracket(1.0, 2.0) - 0.3806471805599453).abs() < 1e-15);
    }

    #[test]
    fn mass_monotone_and_strict() {
        let base = physical_mass(1.0, 0.01, 10.0).m;
        assert!(physical_mass(1.0, 0.02, 10.0).m > base);
        assert!(physical_mass(1.0, 0.01, 20.0).m > base);
        assert!(base > 1.0);
    }

    #[test]
    fn mass_scaling_covariance() {
        let s = 3.0;
        let a = physical_mass(s * 0.4, 0.05, s * 7.0).m;
        let b = s * physical_mass(0.4, 0.05, 7.0).m;
        assert!((a - b).abs() < 1e-12 * a.abs());
    }

    #[test]
    fn bare_mass_round_trip() {
        for &x in &[0.1, 0.5, 1.0, 2.0] {
            for &alpha in &[0.001, 0.01, 1.0 / 137.0] {
                for &lambda in &[0.5, 1.0, 10.0, 100.0] {
                    let m = physical_mass(x, alpha, lambda).m;
                    let back = bare_mass(m, alpha, lambda, 1e-13);
                    assert!(
                        (back.m0 - x).abs() < 1e-12 * x,
                        "x={x} alpha={alpha} lambda={lambda}: got {}",
                        back.m0
                    );
                }
            }
        }
        let r = bare_mass(1.0, 1.0 / 137.0, 100.0, 1e-13);
        assert!(r.m0 < 1.0);
    }

    #[test]
    fn dipole_examples() {
        assert_eq!(dipole_mass(1.0, 0.0, 5.0), 1.0);
        assert!((dipole_mass(1.0, 3.0 * PI / 4.0, 1.0) - 2.0).abs() < 1e-15);
        // dipole - physical = O((Lambda/m0)^2) at small cutoff
        let mut prev = f64::INFINITY;
        for &lam in &[1e-2, 1e-3] {
            let d = dipole_mass(1.0, 0.01, lam) - physical_mass(1.0, 0.01, lam).m;
            let scaled = d / (lam * lam);
            assert!(scaled.abs() < 1.0);
            assert!(d.abs() < prev);
            prev = d.abs();
        }
    }

    #[test]
    fn dispersion_zero_and_symmetry() {
        let p = params(0.5, 0.01, 1.0);
        let r = dispersion_shift([0.0, 0.0, 0.0], &p, 1e-8).unwrap();
        assert_eq!(r.shift, 0.0);
        let a = dispersion_shift([0.01, 0.0, 0.0], &p, 1e-9).unwrap();
        let b = dispersion_shift([-0.01, 0.0, 0.0], &p, 1e-9).unwrap();
        assert_eq!(a.shift, b.shift);
        assert!(matches!(
            dispersion_shift([0.6, 0.0, 0.0], &p, 1e-8),
            Err(RenormError::MomentumTooLarge { .. })
        ));
    }

    #[test]
    fn dispersion_matches_frozen_oracle() {
        // high-precision reference for m0=1/2, alpha=0.01, Lambda=1, |P|=0.025
        let p = params(0.5, 0.01, 1.0);
        let r = dispersion_shift([0.0, 0.0, 0.025], &p, 1e-10).unwrap();
        assert!(
            (r.shift - 6.209600052023e-4).abs() < 1e-12,
            "shift = {}",
            r.shift
        );
    }

    #[test]
    fn dispersion_small_p_limit() {
        let p = params(1.0, 1.0 / 137.0, 2.0);
        let c = dispersion_p2_coefficient(&p).unwrap();
        for &frac in &[0.05, 0.02] {
            let pm = frac * 1.0;
            let r = dispersion_shift([0.0, 0.0, pm], &p, 1e-9).unwrap();
            let rel = (r.shift - c * pm * pm) / (c * pm * pm);
            assert!(rel.abs() < 1e-4, "frac={frac} rel={rel}");
        }
    }
}
