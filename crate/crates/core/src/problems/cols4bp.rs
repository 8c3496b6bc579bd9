//! Collinear symmetric four-body chart.
//!
//! Bodies sit at q1 >= q2 >= 0 >= -q2 >= -q1 with masses (1, m, m, 1); the
//! symmetry reduces the problem to two degrees of freedom. The inner binary
//! collision q2 = 0 and the simultaneous binary collision q1 = q2 are both
//! Levi-Civita squared: Q1^2 = q2, Q2^2 = q1 - q2, with g = Q1^2 Q2^2.
//! Total collapse q1 = q2 = 0 stays singular and is fenced by the guard.

use super::require_close;
use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::nbody::PhaseState;
use crate::regularize::{Chart, RegularizedState};

#[derive(Debug, Clone)]
pub struct ColS4bpChart {
    pub m: f64,
    pub energy: f64,
}

impl ColS4bpChart {
    pub fn new(m: f64, energy: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::Invalid(format!("mass parameter must be positive, got {m}")));
        }
        Ok(ColS4bpChart { m, energy })
    }

    /// Reduced Hamiltonian on (q1, q2) with canonical momenta p1 = 2 q1',
    /// p2 = 2 m q2'; equals the total energy of the 4-body configuration.
    pub fn reduced_hamiltonian(&self, q1: f64, q2: f64, p1: f64, p2: f64) -> f64 {
        let m = self.m;
        let kinetic = 0.25 * p1 * p1 + p2 * p2 / (4.0 * m);
        let potential =
            2.0 * m / (q1 - q2) + 2.0 * m / (q1 + q2) + 0.5 / q1 + 0.5 * m * m / q2;
        kinetic - potential
    }

    /// |P1| pinned by Gamma = 0 at the inner collision Q1 = 0.
    pub fn transit_momentum_inner(&self) -> f64 {
        (8.0 * self.m.powi(3)).sqrt()
    }

    /// |P2| pinned by Gamma = 0 at the simultaneous binary collision Q2 = 0.
    pub fn transit_momentum_sbc(&self) -> f64 {
        (32.0 * self.m * self.m / (self.m + 1.0)).sqrt()
    }

    pub fn to_physical(&self, reg: &RegularizedState) -> Result<PhaseState> {
        let (q1r, q2r) = (reg.q[0], reg.q[1]);
        if q1r == 0.0 || q2r == 0.0 {
            return Err(Error::ChartDomain(
                "physical velocities are undefined at a collision state".into(),
            ));
        }
        let q2 = q1r * q1r;
        let q1 = q2 + q2r * q2r;
        let pb = reg.p[0] / (2.0 * q1r);
        let pa = reg.p[1] / (2.0 * q2r);
        let p1 = pa;
        let p2 = pb - pa;
        let v1 = 0.5 * p1;
        let v2 = p2 / (2.0 * self.m);
        PhaseState::new(
            1,
            vec![q1, q2, -q2, -q1],
            vec![v1, v2, -v2, -v1],
            reg.t,
        )
    }

    pub fn from_physical(&self, state: &PhaseState) -> Result<RegularizedState> {
        if state.dim != 1 || state.bodies() != 4 {
            return Err(Error::ChartDomain("cols4bp expects 4 collinear bodies".into()));
        }
        let q = &state.positions;
        let v = &state.velocities;
        require_close(q[3], -q[0], "symmetry q4 = -q1")?;
        require_close(q[2], -q[1], "symmetry q3 = -q2")?;
        require_close(v[3], -v[0], "symmetry v4 = -v1")?;
        require_close(v[2], -v[1], "symmetry v3 = -v2")?;
        let (q1, q2) = (q[0], q[1]);
        if !(q1 > q2 && q2 > 0.0) {
            return Err(Error::ChartDomain(format!(
                "ordering q1 > q2 > 0 violated (q1 = {q1}, q2 = {q2})"
            )));
        }
        let p1 = 2.0 * v[0];
        let p2 = 2.0 * self.m * v[1];
        let pa = p1;
        let pb = p1 + p2;
        let energy = self.reduced_hamiltonian(q1, q2, p1, p2);
        let (q1r, q2r) = (q2.sqrt(), (q1 - q2).sqrt());
        Ok(RegularizedState {
            q: vec![q1r, q2r],
            p: vec![2.0 * q1r * pb, 2.0 * q2r * pa],
            s: 0.0,
            t: state.time,
            energy,
        })
    }
}

impl Chart<4> for ColS4bpChart {
    fn gamma<S: Scalar>(&self, x: &[S; 4]) -> S {
        let m = self.m;
        let [q1, q2, p1, p2] = *x;
        let q1s = q1.sq();
        let q2s = q2.sq();
        let g = q1s * q2s;
        let cross = q2 * p1 - q1 * p2;
        let kinetic = q1s * p2.sq() * (1.0 / 16.0) + cross.sq() * (1.0 / (16.0 * m));
        let potential = q1s * (2.0 * m)
            + q2s * (0.5 * m * m)
            + g * (2.0 * m) / (q2s + q1s * 2.0)
            + g * 0.5 / (q1s + q2s);
        kinetic - potential - g * self.energy
    }

    fn time_scale<S: Scalar>(&self, x: &[S; 4]) -> S {
        x[0].sq() * x[1].sq()
    }
}

/// Energy of a symmetric collinear 4-body state, for chart construction.
pub fn cols4bp_energy(m: f64, state: &PhaseState) -> Result<f64> {
    let chart = ColS4bpChart::new(m, 0.0)?;
    Ok(chart.from_physical(state)?.energy)
}
