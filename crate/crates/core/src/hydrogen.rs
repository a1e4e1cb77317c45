//! Analytic hydrogenic bound states sampled on a radial grid, their gradient
//! channels, and the sum rules used to validate spectral sums.
//!
//! Radial functions are dimensionless: r in units of 1/(m beta Z), R_nl
//! normalized by Int R^2 r^2 dr = 1. Physical scales re-enter through
//! [`crate::units::Params`] in the energy-valued helpers.

use crate::spectral::{build_radial_hamiltonian, GridConfig, RadialGrid};
use crate::units::Params;
use std::sync::Arc;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum HydrogenError {
    #[error("invalid quantum numbers n={n}, l={l} (need n >= 1 and l < n)")]
    InvalidQuantumNumbers { n: u32, l: u32 },
}

/// A radial amplitude f(r) sampled on the grid nodes (R-like normalization,
/// i.e. the full wavefunction piece is f(r) Y_lm).
#[derive(Debug, Clone)]
pub struct RadialFunction {
    pub l: u32,
    pub grid: Arc<RadialGrid>,
    pub values: Vec<f64>,
}

impl RadialFunction {
    /// Orthonormal grid vector: y_i = r_i f(r_i) sqrt(w_i).
    pub fn to_vec(&self) -> Vec<f64> {
        let u: Vec<f64> = self
            .values
            .iter()
            .zip(&self.grid.nodes)
            .map(|(f, r)| f * r)
            .collect();
        self.grid.u_to_vec(&u)
    }

    /// Int f^2 r^2 dr on the grid.
    pub fn norm2(&self) -> f64 {
        self.to_vec().iter().map(|y| y * y).sum()
    }
}

/// Bound-state energy, physical units: -m (beta Z)^2 / (2 n^2).
pub fn bound_energy(n: u32, params: &Params) -> f64 {
    let bz = params.beta_z();
    -params.m * bz * bz / (2.0 * (n * n) as f64)
}

fn factorial(k: u32) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Associated Laguerre L_k^a(x) by the three-term recurrence.
fn laguerre(k: u32, a: f64, x: f64) -> f64 {
    let mut lm1 = 1.0;
    if k == 0 {
        return lm1;
    }
    let mut l = 1.0 + a - x;
    for j in 1..k {
        let jf = j as f64;
        let lnext = ((2.0 * jf + 1.0 + a - x) * l - (jf + a) * lm1) / (jf + 1.0);
        lm1 = l;
        l = lnext;
    }
    l
}

fn norm_nl(n: u32, l: u32) -> f64 {
    let nf = n as f64;
    ((2.0 / nf).powi(3) * factorial(n - l - 1) / (2.0 * nf * factorial(n + l))).sqrt()
}

/// R_nl(r), dimensionless units.
pub fn radial_value(n: u32, l: u32, r: f64) -> f64 {
    let nf = n as f64;
    let x = 2.0 * r / nf;
    norm_nl(n, l) * (-0.5 * x).exp() * x.powi(l as i32) * laguerre(n - l - 1, (2 * l + 1) as f64, x)
}

/// dR_nl/dr, analytic (Laguerre derivative L' = -L_{k-1}^{a+1}).
pub fn radial_derivative(n: u32, l: u32, r: f64) -> f64 {
    let nf = n as f64;
    let x = 2.0 * r / nf;
    let k = n - l - 1;
    let a = (2 * l + 1) as f64;
    let lag = laguerre(k, a, x);
    let dlag = if k == 0 { 0.0 } else { -laguerre(k - 1, a + 1.0, x) };
    let xl = x.powi(l as i32);
    // d/dx of e^{-x/2} x^l L(x), times dx/dr = 2/n
    let dl_dx = (-0.5 * x).exp()
        * (xl * dlag + (l as f64) * if l == 0 { 0.0 } else { x.powi(l as i32 - 1) } * lag
            - 0.5 * xl * lag);
    norm_nl(n, l) * dl_dx * 2.0 / nf
}

/// Sample R_nl on the grid.
pub fn bound_state(
    n: u32,
    l: u32,
    grid: &Arc<RadialGrid>,
) -> Result<RadialFunction, HydrogenError> {
    if n == 0 || l >= n {
        return Err(HydrogenError::InvalidQuantumNumbers { n, l });
    }
    Ok(RadialFunction {
        l,
        grid: Arc::clone(grid),
        values: grid.nodes.iter().map(|&r| radial_value(n, l, r)).collect(),
    })
}

/// One angular channel of the gradient of a bound state: grad(R_nl Y_lm)
/// decomposes into amplitudes on l+1 and l-1, summed over m and final m'.
#[derive(Debug, Clone)]
pub struct GradientChannel {
    /// Angular momentum the channel couples to.
    pub l: u32,
    pub amplitude: RadialFunction,
}

/// Gradient channels of (n,l), m-averaged: the channel norms satisfy
/// sum_ch Int w^2 r^2 dr = p^2 = 1/n^2 (dimensionless).
pub fn gradient_channels(
    n: u32,
    l: u32,
    grid: &Arc<RadialGrid>,
) -> Result<Vec<GradientChannel>, HydrogenError> {
    if n == 0 || l >= n {
        return Err(HydrogenError::InvalidQuantumNumbers { n, l });
    }
    let lf = l as f64;
    let mut out = Vec::new();
    // l -> l+1: w = sqrt((l+1)/(2l+1)) (R' - l R / r)
    let cup = ((lf + 1.0) / (2.0 * lf + 1.0)).sqrt();
    let up: Vec<f64> = grid
        .nodes
        .iter()
        .map(|&r| cup * (radial_derivative(n, l, r) - lf * radial_value(n, l, r) / r))
        .collect();
    out.push(GradientChannel {
        l: l + 1,
        amplitude: RadialFunction {
            l: l + 1,
            grid: Arc::clone(grid),
            values: up,
        },
    });
    if l > 0 {
        // l -> l-1: w = sqrt(l/(2l+1)) (R' + (l+1) R / r)
        let cdn = (lf / (2.0 * lf + 1.0)).sqrt();
        let dn: Vec<f64> = grid
            .nodes
            .iter()
            .map(|&r| {
                cdn * (radial_derivative(n, l, r) + (lf + 1.0) * radial_value(n, l, r) / r)
            })
            .collect();
        out.push(GradientChannel {
            l: l - 1,
            amplitude: RadialFunction {
                l: l - 1,
                grid: Arc::clone(grid),
                values: dn,
            },
        });
    }
    Ok(out)
}

/// The two sum rules used to certify the discretization, physical units.
#[derive(Debug, Clone, Copy)]
pub struct SumRules {
    /// sum_j <p_j phi | p_j phi>; exact value 2 m |e_n|.
    pub p2: f64,
    /// sum_j <p_j phi | (h - e_n) | p_j phi>; exact value 2 m^3 (beta Z)^4
    /// for the ground state.
    pub double_commutator: f64,
}

/// Direct quadratic-form evaluation of the sum rules on one grid (no
/// eigendecomposition needed).
pub fn sum_rules(
    n: u32,
    l: u32,
    params: &Params,
    grid: &Arc<RadialGrid>,
) -> Result<SumRules, HydrogenError> {
    let channels = gradient_channels(n, l, grid)?;
    let bz = params.beta_z();
    let grad_scale = (params.m * bz * bz) * params.m; // (m beta Z)^2
    let e = bound_energy(n, params);
    let mut p2 = 0.0;
    let mut dc = 0.0;
    for ch in &channels {
        let y = ch.amplitude.to_vec();
        let n2: f64 = y.iter().map(|v| v * v).sum();
        let op = build_radial_hamiltonian(ch.l, params, grid);
        p2 += grad_scale * n2;
        dc += grad_scale * (op.quadratic_form(&y) - e * n2);
    }
    Ok(SumRules {
        p2,
        double_commutator: dc,
    })
}

/// Sum rules with two-level Richardson extrapolation in the grid spacing;
/// returns (extrapolated values, level differences as error estimates).
pub fn sum_rules_extrapolated(
    n: u32,
    l: u32,
    params: &Params,
    config: &GridConfig,
) -> Result<(SumRules, SumRules), HydrogenError> {
    let coarse = sum_rules(n, l, params, &config.build())?;
    let fineconf = config.refined();
    let fine = sum_rules(n, l, params, &fineconf.build())?;
    let h1 = 1.0 / config.n as f64;
    let h2 = 1.0 / fineconf.n as f64;
    let (p2, p2e) = crate::spectral::richardson(h1, coarse.p2, h2, fine.p2);
    let (dc, dce) = crate::spectral::richardson(
        h1,
        coarse.double_commutator,
        h2,
        fine.double_commutator,
    );
    Ok((
        SumRules {
            p2,
            double_commutator: dc,
        },
        SumRules {
            p2: p2e,
            double_commutator: dce,
        },
    ))
}
