//! Concrete regularized charts for the collinear 3-body, collinear symmetric
//! 4-body, and planar pairwise-symmetric 4-body problems.
//!
//! Each chart is derived mechanically: reduce by symmetry and center of mass,
//! write the Hamiltonian in relative separations, apply pairwise Levi-Civita,
//! and time-transform with g equal to the product of the regularized channel
//! separations. The extended Hamiltonians are written with collision factors
//! cancelled, so each binary (or simultaneous binary) collision is an
//! ordinary point of the field; only the triple-collision set stays out of
//! every chart and is fenced by a guard.

pub mod col3bp;
pub mod cols4bp;
pub mod pps4bp;

pub use col3bp::{col3bp_energy, Col3bpChart};
pub use cols4bp::{cols4bp_energy, ColS4bpChart};
pub use pps4bp::{pps4bp_energy, Pps4CollinearChart, Pps4SbcChart};

use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::integrate::{
    integrate_with_events, EventSpec, IntegratorConfig, Termination, Trajectory,
};
use crate::nbody::{MassVector, PhaseState};
use crate::regularize::{
    field_jacobian, gamma_gradient, gamma_value, hamiltonian_field, time_scale_value,
    Col2bpChart, RegularizedState,
};
use nalgebra::DMatrix;

/// Both regularized channels below this size triggers the chart abort.
pub const TRIPLE_COLLISION_GUARD: f64 = 1e-6;

/// Relative tolerance for symmetry and energy checks in conversions.
const CONVERSION_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemTag {
    Col2bp,
    Col3bp,
    ColS4bp,
    Pps4bp,
}

impl std::fmt::Display for ProblemTag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            ProblemTag::Col2bp => "col2bp",
            ProblemTag::Col3bp => "col3bp",
            ProblemTag::ColS4bp => "cols4bp",
            ProblemTag::Pps4bp => "pps4bp",
        };
        f.write_str(s)
    }
}

/// Problem identity: tag, pattern-checked masses, energy level, and the
/// dimension of the regularized phase space.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub tag: ProblemTag,
    pub masses: MassVector,
    pub energy: f64,
    pub regularized_dimension: usize,
}

/// Which bodies coincide at a collision event.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CollisionKind {
    /// The central pair meets at the origin.
    InnerBinary,
    /// One binary of the collinear 3-body chain.
    PairBinary(Side),
    /// Two disjoint pairs collide at the same instant.
    SimultaneousBinary(SbcChannel),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

/// The two simultaneous-binary-collision pairings of the 4-body problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SbcChannel {
    /// Bodies 1-2 and 3-4 coincide (the outer pairs of the collinear chain).
    OneTwo,
    /// Bodies 1-4 and 2-3 coincide.
    OneFour,
}

impl std::fmt::Display for CollisionKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CollisionKind::InnerBinary => write!(f, "inner-binary"),
            CollisionKind::PairBinary(Side::Left) => write!(f, "left-binary"),
            CollisionKind::PairBinary(Side::Right) => write!(f, "right-binary"),
            CollisionKind::SimultaneousBinary(SbcChannel::OneTwo) => write!(f, "sbc-12-34"),
            CollisionKind::SimultaneousBinary(SbcChannel::OneFour) => write!(f, "sbc-14-23"),
        }
    }
}

impl std::str::FromStr for CollisionKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "inner-binary" => Ok(CollisionKind::InnerBinary),
            "left-binary" => Ok(CollisionKind::PairBinary(Side::Left)),
            "right-binary" => Ok(CollisionKind::PairBinary(Side::Right)),
            "sbc-12-34" => Ok(CollisionKind::SimultaneousBinary(SbcChannel::OneTwo)),
            "sbc-14-23" => Ok(CollisionKind::SimultaneousBinary(SbcChannel::OneFour)),
            other => Err(Error::Invalid(format!("unknown collision kind {other:?}"))),
        }
    }
}

/// One collision event along an orbit, with both clocks attached.
#[derive(Debug, Clone, PartialEq)]
pub struct CollisionEvent {
    pub kind: CollisionKind,
    pub s: f64,
    pub t: f64,
}

/// Ordered collision events over one period.
pub type CollisionItinerary = Vec<CollisionEvent>;

/// A regularized problem chart behind a uniform, dimension-erased surface.
#[derive(Debug, Clone)]
pub enum Problem {
    Col2bp(Col2bpChart),
    Col3bp(Col3bpChart),
    ColS4bp(ColS4bpChart),
    Pps4Sbc(Pps4SbcChart),
    Pps4Collinear(Pps4CollinearChart),
}

/// Regularized collinear two-body chart.
pub fn col2bp_field(m1: f64, m2: f64, energy: f64) -> Result<Problem> {
    Ok(Problem::Col2bp(Col2bpChart::new(m1, m2, energy)?))
}

/// Regularized collinear three-body chart covering the binary collisions
/// q1 = q2 and q2 = q3. Not valid at the triple collision.
pub fn col3bp_field(masses: [f64; 3], energy: f64) -> Result<Problem> {
    Ok(Problem::Col3bp(Col3bpChart::new(masses, energy)?))
}

/// Regularized collinear symmetric four-body chart covering the inner binary
/// collision q2 = 0 and the simultaneous binary collision q1 = q2 > 0.
pub fn cols4bp_field(m: f64, energy: f64) -> Result<Problem> {
    Ok(Problem::ColS4bp(ColS4bpChart::new(m, energy)?))
}

/// Regularized planar pairwise-symmetric four-body chart covering the two
/// simultaneous-binary-collision channels q1 = q2 and q1 = q4.
pub fn pps4bp_field(m: f64, energy: f64) -> Result<Problem> {
    Ok(Problem::Pps4Sbc(Pps4SbcChart::new(m, energy)?))
}

/// Regularized planar pairwise-symmetric four-body chart covering the
/// channels crossed by the collinear Schubart-like orbit: the q1 = q2
/// simultaneous binary collision and the central binary collision q2 = 0.
pub fn pps4bp_collinear_field(m: f64, energy: f64) -> Result<Problem> {
    Ok(Problem::Pps4Collinear(Pps4CollinearChart::new(m, energy)?))
}

macro_rules! dispatch {
    ($self:expr, $chart:ident, $dim:ident => $body:expr) => {
        match $self {
            Problem::Col2bp($chart) => {
                const $dim: usize = 2;
                $body
            }
            Problem::Col3bp($chart) => {
                const $dim: usize = 4;
                $body
            }
            Problem::ColS4bp($chart) => {
                const $dim: usize = 4;
                $body
            }
            Problem::Pps4Sbc($chart) => {
                const $dim: usize = 8;
                $body
            }
            Problem::Pps4Collinear($chart) => {
                const $dim: usize = 8;
                $body
            }
        }
    };
}

impl Problem {
    /// Dimension of the regularized phase space [Q..., P...].
    pub fn dim(&self) -> usize {
        dispatch!(self, _c, D => D)
    }

    pub fn energy(&self) -> f64 {
        dispatch!(self, c, _D => c.energy)
    }

    pub fn spec(&self) -> ProblemSpec {
        let (tag, masses) = match self {
            Problem::Col2bp(c) => (ProblemTag::Col2bp, vec![c.m1, c.m2]),
            Problem::Col3bp(c) => (ProblemTag::Col3bp, c.masses.to_vec()),
            Problem::ColS4bp(c) => (ProblemTag::ColS4bp, vec![1.0, c.m, c.m, 1.0]),
            Problem::Pps4Sbc(c) => (ProblemTag::Pps4bp, vec![1.0, c.m, 1.0, c.m]),
            Problem::Pps4Collinear(c) => (ProblemTag::Pps4bp, vec![1.0, c.m, 1.0, c.m]),
        };
        ProblemSpec {
            tag,
            masses: MassVector::new(masses).expect("validated at construction"),
            energy: self.energy(),
            regularized_dimension: self.dim(),
        }
    }

    /// Masses and spatial dimension of the underlying physical problem.
    pub fn physical_layout(&self) -> (MassVector, usize) {
        let spec = self.spec();
        let dim = match self.spec().tag {
            ProblemTag::Pps4bp => 2,
            _ => 1,
        };
        (spec.masses, dim)
    }

    pub fn gamma(&self, x: &[f64]) -> f64 {
        dispatch!(self, c, D => gamma_value::<_, D>(c, x))
    }

    pub fn grad_gamma(&self, x: &[f64]) -> Vec<f64> {
        dispatch!(self, c, D => gamma_gradient::<_, D>(c, x).to_vec())
    }

    pub fn time_scale(&self, x: &[f64]) -> f64 {
        dispatch!(self, c, D => time_scale_value::<_, D>(c, x))
    }

    pub fn field(&self, x: &[f64], dx: &mut [f64]) {
        dispatch!(self, c, D => hamiltonian_field::<_, D>(c, x, dx))
    }

    pub fn jacobian(&self, x: &[f64], jac: &mut DMatrix<f64>) {
        dispatch!(self, c, D => field_jacobian::<_, D>(c, x, jac))
    }

    /// Integrator closure on [Q, P].
    pub fn rhs(&self) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
        move |_s, x, dx| self.field(x, dx)
    }

    /// Integrator closure on [Q, P, t] with dt/ds = g(Q).
    pub fn rhs_with_time(&self) -> impl Fn(f64, &[f64], &mut [f64]) + '_ {
        let d = self.dim();
        move |_s, x, dx| {
            self.field(&x[..d], &mut dx[..d]);
            dx[d] = self.time_scale(&x[..d]);
        }
    }

    pub fn jac_closure(&self) -> impl Fn(f64, &[f64], &mut DMatrix<f64>) + '_ {
        move |_s, x, jac| self.jacobian(x, jac)
    }

    /// One regularized channel: the range of state components whose joint
    /// vanishing is a collision of `kind`.
    pub fn channels(&self) -> Vec<(std::ops::Range<usize>, CollisionKind)> {
        use CollisionKind::*;
        match self {
            Problem::Col2bp(_) => vec![(0..1, InnerBinary)],
            Problem::Col3bp(_) => vec![
                (0..1, PairBinary(Side::Left)),
                (1..2, PairBinary(Side::Right)),
            ],
            Problem::ColS4bp(_) => vec![
                (0..1, InnerBinary),
                (1..2, SimultaneousBinary(SbcChannel::OneTwo)),
            ],
            Problem::Pps4Sbc(_) => vec![
                (0..2, SimultaneousBinary(SbcChannel::OneTwo)),
                (2..4, SimultaneousBinary(SbcChannel::OneFour)),
            ],
            Problem::Pps4Collinear(_) => vec![
                (0..2, InnerBinary),
                (2..4, SimultaneousBinary(SbcChannel::OneTwo)),
            ],
        }
    }

    /// Guard function: positive inside the chart's domain, crossing zero when
    /// the flow approaches a coincidence the chart does not regularize. For
    /// the collinear charts that is the triple collision (both channels
    /// small); the planar charts additionally keep singular denominators for
    /// the central binary collisions they do not square.
    pub fn guard(&self) -> Option<impl Fn(&[f64]) -> f64 + '_> {
        if matches!(self, Problem::Col2bp(_)) {
            return None; // a single channel: the collision itself is regular
        }
        Some(move |x: &[f64]| match self {
            Problem::Col2bp(_) => unreachable!(),
            Problem::Col3bp(_) | Problem::ColS4bp(_) => {
                x[0].abs().max(x[1].abs()) - TRIPLE_COLLISION_GUARD
            }
            Problem::Pps4Sbc(_) => {
                // 2 q1 = Z1^2 + Z2^2 and 2 q2 = Z2^2 - Z1^2 stay singular.
                let sq = |a: f64, b: f64| [a * a - b * b, 2.0 * a * b];
                let (s1, s2) = (sq(x[0], x[1]), sq(x[2], x[3]));
                let q1 = (s1[0] + s2[0]).hypot(s1[1] + s2[1]);
                let q2 = (s2[0] - s1[0]).hypot(s2[1] - s1[1]);
                q1.min(q2) - TRIPLE_COLLISION_GUARD
            }
            Problem::Pps4Collinear(_) => {
                // q1 = Y1^2 + Y2^2 and q1 + q2 = Y2^2 + 2 Y1^2 stay singular.
                let sq = |a: f64, b: f64| [a * a - b * b, 2.0 * a * b];
                let (s1, s2) = (sq(x[0], x[1]), sq(x[2], x[3]));
                let central = (s1[0] + s2[0]).hypot(s1[1] + s2[1]);
                let outer = (s2[0] + 2.0 * s1[0]).hypot(s2[1] + 2.0 * s1[1]);
                central.min(outer) - TRIPLE_COLLISION_GUARD
            }
        })
    }

    /// Integrate the regularized field with the triple-collision guard armed
    /// as a terminal event (reported as an error), plus caller events.
    /// `with_time` selects the [Q, P, t] extension of the state.
    pub fn integrate_guarded(
        &self,
        x0: &[f64],
        span: (f64, f64),
        cfg: &IntegratorConfig,
        events: &[EventSpec],
        with_time: bool,
    ) -> Result<Trajectory> {
        let d = self.dim();
        let expected_len = if with_time { d + 1 } else { d };
        if x0.len() != expected_len {
            return Err(Error::Invalid(format!(
                "state length {} does not match chart dimension {expected_len}",
                x0.len()
            )));
        }
        let guard = self.guard();
        if let Some(g) = guard.as_ref() {
            if g(&x0[..d]) <= 0.0 {
                return Err(Error::TripleCollisionChart { s: span.0 });
            }
        }
        let guard_pred = guard
            .as_ref()
            .map(|g| move |x: &[f64]| g(&x[..d]));
        let mut all: Vec<EventSpec> = Vec::with_capacity(events.len() + 1);
        for e in events {
            all.push(EventSpec { predicate: e.predicate, terminal: e.terminal });
        }
        let guard_index = all.len();
        if let Some(p) = guard_pred.as_ref() {
            all.push(EventSpec { predicate: p, terminal: true });
        }

        let traj = if with_time {
            let rhs = self.rhs_with_time();
            integrate_with_events(&rhs, x0, span, cfg, &all)?
        } else {
            let rhs = self.rhs();
            integrate_with_events(&rhs, x0, span, cfg, &all)?
        };
        if traj.termination == Termination::EventHit(guard_index) && guard_pred.is_some() {
            return Err(Error::TripleCollisionChart { s: traj.end().0 });
        }
        Ok(traj)
    }

    /// Reconstruct the physical state of all bodies from reduced regularized
    /// coordinates, using the symmetry pattern and C = 0, L = 0.
    pub fn to_physical(&self, reg: &RegularizedState) -> Result<PhaseState> {
        match self {
            Problem::Col2bp(c) => col2bp_to_physical(c, reg),
            Problem::Col3bp(c) => c.to_physical(reg),
            Problem::ColS4bp(c) => c.to_physical(reg),
            Problem::Pps4Sbc(c) => c.to_physical(reg),
            Problem::Pps4Collinear(c) => c.to_physical(reg),
        }
    }

    /// Map a physical state into the chart. Requires positive separations in
    /// the regularized channels and the chart's symmetry pattern; the state's
    /// energy must sit on the chart's level.
    pub fn from_physical(&self, state: &PhaseState) -> Result<RegularizedState> {
        let reg = match self {
            Problem::Col2bp(c) => col2bp_from_physical(c, state)?,
            Problem::Col3bp(c) => c.from_physical(state)?,
            Problem::ColS4bp(c) => c.from_physical(state)?,
            Problem::Pps4Sbc(c) => c.from_physical(state)?,
            Problem::Pps4Collinear(c) => c.from_physical(state)?,
        };
        let scale = 1.0 + self.energy().abs();
        if (reg.energy - self.energy()).abs() > 1e-6 * scale {
            return Err(Error::NotOnEnergyLevel {
                residual: (reg.energy - self.energy()).abs(),
            });
        }
        Ok(reg)
    }

    /// Angular momentum expressed in chart coordinates; `None` for the
    /// collinear charts, where it vanishes identically.
    pub fn angular_momentum(&self, x: &[f64]) -> Option<f64> {
        match self {
            Problem::Pps4Sbc(_) | Problem::Pps4Collinear(_) => {
                // A = (Im(conj(Z1) W1) + Im(conj(Z2) W2)) / 2 in either chart.
                let im = |z: &[f64], w: &[f64]| z[0] * w[1] - z[1] * w[0];
                Some(0.5 * (im(&x[0..2], &x[4..6]) + im(&x[2..4], &x[6..8])))
            }
            _ => None,
        }
    }
}

fn col2bp_to_physical(c: &Col2bpChart, reg: &RegularizedState) -> Result<PhaseState> {
    let w = reg.q[0];
    let x = w * w;
    let p_phys = crate::regularize::momentum_from_regularized(w, reg.p[0])?;
    // Separation x and relative momentum p with C = 0, L = 0.
    let total = c.m1 + c.m2;
    let q1 = -c.m2 * x / total;
    let q2 = c.m1 * x / total;
    let v_rel = p_phys / c.reduced_mass();
    let v1 = -c.m2 * v_rel / total;
    let v2 = c.m1 * v_rel / total;
    PhaseState::new(1, vec![q1, q2], vec![v1, v2], reg.t)
}

fn col2bp_from_physical(c: &Col2bpChart, state: &PhaseState) -> Result<RegularizedState> {
    if state.dim != 1 || state.bodies() != 2 {
        return Err(Error::ChartDomain("col2bp expects 2 collinear bodies".into()));
    }
    let x = state.positions[1] - state.positions[0];
    if x <= 0.0 {
        return Err(Error::ChartDomain("requires q2 > q1".into()));
    }
    let w = x.sqrt();
    let v_rel = state.velocities[1] - state.velocities[0];
    let p_phys = c.reduced_mass() * v_rel;
    let p = crate::regularize::momentum_to_regularized(w, p_phys);
    let energy = p_phys * p_phys / (2.0 * c.reduced_mass()) - c.m1 * c.m2 / x;
    Ok(RegularizedState {
        q: vec![w],
        p: vec![p],
        s: 0.0,
        t: state.time,
        energy,
    })
}

/// Shared check: a value pair that must agree to the conversion tolerance.
pub(crate) fn require_close(a: f64, b: f64, what: &str) -> Result<()> {
    let scale = 1.0 + a.abs().max(b.abs());
    if (a - b).abs() > CONVERSION_TOL * scale {
        return Err(Error::ChartDomain(format!(
            "{what} violated: {a} vs {b}"
        )));
    }
    Ok(())
}

// Complex helpers over AD scalars, used by the planar charts.

pub(crate) fn cadd<S: Scalar>(a: [S; 2], b: [S; 2]) -> [S; 2] {
    [a[0] + b[0], a[1] + b[1]]
}

pub(crate) fn csub<S: Scalar>(a: [S; 2], b: [S; 2]) -> [S; 2] {
    [a[0] - b[0], a[1] - b[1]]
}

pub(crate) fn csq<S: Scalar>(a: [S; 2]) -> [S; 2] {
    [a[0].sq() - a[1].sq(), a[0] * a[1] * 2.0]
}

/// a * conj(b)
pub(crate) fn mul_conj<S: Scalar>(a: [S; 2], b: [S; 2]) -> [S; 2] {
    [a[0] * b[0] + a[1] * b[1], a[1] * b[0] - a[0] * b[1]]
}

pub(crate) fn norm_sq<S: Scalar>(a: [S; 2]) -> S {
    a[0].sq() + a[1].sq()
}

pub(crate) fn cnorm<S: Scalar>(a: [S; 2]) -> S {
    norm_sq(a).sqrt()
}
