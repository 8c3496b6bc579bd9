//! Levi-Civita and Sundman transformation machinery.
//!
//! The dependent-variable change squares a separation coordinate and the
//! independent-variable change rescales time so the flow slows near
//! collision; together they extend solutions through binary collisions as
//! elastic bounces at the fixed energy level.

mod chart;
mod col2bp;

pub use chart::{
    check_on_level, field_jacobian, gamma_gradient, gamma_value, hamiltonian_field,
    jac_closure, project_energy, rhs_closure, rhs_with_time_closure, time_scale_value, Chart,
    ChartFn, PoincareChart, GAMMA_TOLERANCE,
};
pub use col2bp::{
    col2bp_collision_start, col2bp_solve, verify_bracket_identities, BracketResiduals,
    Col2bpChart, Col2bpClosedForm,
};

use crate::error::{Error, Result};

/// Collinear Levi-Civita map: separation x = Q^2.
pub fn levi_civita(q: f64) -> f64 {
    q * q
}

/// Positive branch of the collinear inverse, Q = +sqrt(x).
pub fn levi_civita_inv(x: f64) -> Result<f64> {
    if x < 0.0 {
        return Err(Error::ChartDomain(format!("separation must be nonnegative, got {x}")));
    }
    Ok(x.sqrt())
}

/// Planar Levi-Civita map: the separation is the complex square of Q,
/// (Q0^2 - Q1^2, 2 Q0 Q1). The collision Q = 0 is an ordinary point.
pub fn levi_civita_planar(q: [f64; 2]) -> [f64; 2] {
    [q[0] * q[0] - q[1] * q[1], 2.0 * q[0] * q[1]]
}

/// Principal branch of the planar inverse: nonnegative first component,
/// second component carrying the separation's half-angle sign. The other
/// preimage is -Q (the deck transformation of the double cover).
pub fn levi_civita_planar_inv(r: [f64; 2]) -> [f64; 2] {
    let norm = (r[0] * r[0] + r[1] * r[1]).sqrt();
    let angle = r[1].atan2(r[0]);
    let root = norm.sqrt();
    [root * (0.5 * angle).cos(), root * (0.5 * angle).sin()]
}

/// Canonical momentum conjugate to a collinear Levi-Civita coordinate.
pub fn momentum_to_regularized(q_reg: f64, p: f64) -> f64 {
    2.0 * q_reg * p
}

/// Inverse of [`momentum_to_regularized`]; undefined at the collision.
pub fn momentum_from_regularized(q_reg: f64, p_reg: f64) -> Result<f64> {
    if q_reg == 0.0 {
        return Err(Error::ChartDomain(
            "physical momentum is undefined at the collision point".into(),
        ));
    }
    Ok(p_reg / (2.0 * q_reg))
}

/// Planar analogue: W = 2 conj(Z) s as a complex product.
pub fn momentum_to_regularized_planar(z: [f64; 2], s: [f64; 2]) -> [f64; 2] {
    [
        2.0 * (z[0] * s[0] + z[1] * s[1]),
        2.0 * (z[0] * s[1] - z[1] * s[0]),
    ]
}

/// Inverse of the planar momentum map, s = W Z / (2 |Z|^2).
pub fn momentum_from_regularized_planar(z: [f64; 2], w: [f64; 2]) -> Result<[f64; 2]> {
    let norm_sq = z[0] * z[0] + z[1] * z[1];
    if norm_sq == 0.0 {
        return Err(Error::ChartDomain(
            "physical momentum is undefined at the collision point".into(),
        ));
    }
    Ok([
        (w[0] * z[0] - w[1] * z[1]) / (2.0 * norm_sq),
        (w[0] * z[1] + w[1] * z[0]) / (2.0 * norm_sq),
    ])
}

/// State of a regularized flow: Levi-Civita coordinates, conjugate momenta,
/// fictitious time, accumulated physical time, and the fixed energy level.
#[derive(Debug, Clone, PartialEq)]
pub struct RegularizedState {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub s: f64,
    pub t: f64,
    pub energy: f64,
}

impl RegularizedState {
    pub fn new(q: Vec<f64>, p: Vec<f64>, energy: f64) -> Self {
        RegularizedState { q, p, s: 0.0, t: 0.0, energy }
    }

    /// Chart layout [q..., p...] used by the integrator.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut v = self.q.clone();
        v.extend_from_slice(&self.p);
        v
    }

    pub fn from_vec(x: &[f64], s: f64, t: f64, energy: f64) -> Self {
        let d = x.len() / 2;
        RegularizedState {
            q: x[..d].to_vec(),
            p: x[d..].to_vec(),
            s,
            t,
            energy,
        }
    }
}
