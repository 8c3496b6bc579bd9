//! Periodic collision-orbit computation by symmetry shooting, return-map
//! fixed points, and continuation in the mass parameter.
//!
//! Orbits are found at energy -1 and rescaled to other negative energies by
//! the homogeneity of the potential. Every returned orbit is validated by
//! flowing it for one period and matching the initial state modulo the
//! Levi-Civita deck transformation; initial conditions are solver outputs,
//! never imported constants.

mod collinear;
mod sbc;

pub use collinear::{cols4bp_orbit, pps4bp_collinear_orbit, schubart_orbit};
pub use sbc::pps4bp_sbc_orbit;

use crate::error::{Error, Result};
use crate::integrate::{refine_all_events, EventSpec, IntegratorConfig, Trajectory};
use crate::problems::{
    col3bp_field, cols4bp_field, pps4bp_collinear_field, pps4bp_field, CollisionEvent,
    CollisionItinerary, Problem,
};
use crate::regularize::RegularizedState;
use nalgebra::{DMatrix, DVector};

/// Newton convergence tolerance on the shooting targets.
pub const SHOOTING_TOL: f64 = 1e-10;
/// Iteration cap for the Newton solve.
pub const MAX_SHOOTING_ITER: usize = 50;
/// Integrator tolerance used inside shooting and orbit validation.
pub const ORBIT_INTEGRATION_TOL: f64 = 1e-12;

/// Which periodic-orbit family an orbit belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OrbitKind {
    /// Collinear 3-body orbit alternating binary collisions of the chain.
    Schubart,
    /// Collinear symmetric 4-body orbit alternating the simultaneous binary
    /// collision with the inner binary collision.
    ColS4,
    /// The ColS4 orbit embedded in the planar pairwise-symmetric phase space.
    Pps4Collinear,
    /// The non-collinear planar orbit alternating the two simultaneous
    /// binary collision channels.
    Pps4Sbc,
}

impl std::fmt::Display for OrbitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            OrbitKind::Schubart => "schubart",
            OrbitKind::ColS4 => "cols4bp",
            OrbitKind::Pps4Collinear => "pps4bp-collinear",
            OrbitKind::Pps4Sbc => "pps4bp-sbc",
        };
        f.write_str(s)
    }
}

impl std::str::FromStr for OrbitKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "schubart" | "col3bp" => Ok(OrbitKind::Schubart),
            "cols4bp" => Ok(OrbitKind::ColS4),
            "pps4bp-collinear" => Ok(OrbitKind::Pps4Collinear),
            "pps4bp-sbc" => Ok(OrbitKind::Pps4Sbc),
            other => Err(Error::Invalid(format!("unknown orbit family {other:?}"))),
        }
    }
}

/// A converged periodic orbit in its regularized chart.
#[derive(Debug, Clone)]
pub struct PeriodicOrbit {
    pub kind: OrbitKind,
    /// Family parameter: the middle mass for Schubart, m for the 4-body
    /// families.
    pub mass_parameter: f64,
    pub masses: Vec<f64>,
    pub energy: f64,
    pub initial: RegularizedState,
    pub period_s: f64,
    pub period_t: f64,
    pub itinerary: CollisionItinerary,
    /// Worst of the shooting target norm and the deck-matched return error.
    pub residual: f64,
    /// Channel sign flips picked up over one period.
    pub deck: (bool, bool),
}

impl PeriodicOrbit {
    /// Rebuild the regularized chart this orbit lives in.
    pub fn problem(&self) -> Result<Problem> {
        match self.kind {
            OrbitKind::Schubart => {
                col3bp_field([self.masses[0], self.masses[1], self.masses[2]], self.energy)
            }
            OrbitKind::ColS4 => cols4bp_field(self.mass_parameter, self.energy),
            OrbitKind::Pps4Collinear => {
                pps4bp_collinear_field(self.mass_parameter, self.energy)
            }
            OrbitKind::Pps4Sbc => pps4bp_field(self.mass_parameter, self.energy),
        }
    }

    /// Diagonal sign vector of the deck transformation at return.
    pub fn deck_signs(&self) -> Vec<f64> {
        deck_signs(self.initial.q.len() * 2, self.deck)
    }

    /// Rescale to another negative energy by the exact homogeneity map:
    /// lengths scale by lambda = E_old / E_new, times by lambda^(3/2).
    pub fn rescaled_to_energy(&self, energy: f64) -> Result<PeriodicOrbit> {
        if energy >= 0.0 {
            return Err(Error::NonNegativeEnergy(energy));
        }
        let lambda = self.energy / energy;
        let sqrt_l = lambda.sqrt();
        let mut orbit = self.clone();
        orbit.energy = energy;
        orbit.initial.energy = energy;
        for q in orbit.initial.q.iter_mut() {
            *q *= sqrt_l;
        }
        // With g quartic in Q, fictitious time contracts as lambda^(-1/2)
        // while momenta are scale-invariant.
        orbit.initial.s *= 1.0 / sqrt_l;
        orbit.initial.t *= lambda * sqrt_l;
        orbit.period_s /= sqrt_l;
        orbit.period_t *= lambda * sqrt_l;
        for ev in orbit.itinerary.iter_mut() {
            ev.s /= sqrt_l;
            ev.t *= lambda * sqrt_l;
        }
        Ok(orbit)
    }
}

pub(crate) fn deck_signs(dim: usize, deck: (bool, bool)) -> Vec<f64> {
    let mut signs = vec![1.0; dim];
    let half = dim / 2;
    let channel = half / 2;
    let flip = |signs: &mut [f64], lo: usize| {
        for s in signs[lo..lo + channel].iter_mut() {
            *s = -*s;
        }
    };
    if deck.0 {
        flip(&mut signs, 0);
        flip(&mut signs, half);
    }
    if deck.1 {
        flip(&mut signs, channel);
        flip(&mut signs, half + channel);
    }
    signs
}

/// Where the shooting segment ends.
pub enum HalfPeriodStop {
    /// First sign change of this state component after leaving the section.
    ComponentZero(usize),
    /// The unknown with this index is the segment length in fictitious time.
    AtUnknownTime(usize),
}

/// Declarative one-segment shooting problem: a section map from the
/// unknowns, a stop condition, and symmetry targets that vanish on the
/// periodic orbit.
pub struct ShootingSpec<'a> {
    pub section: &'a dyn Fn(&[f64]) -> Result<Vec<f64>>,
    pub half_period: HalfPeriodStop,
    /// Residuals as a function of (stop state, unknowns).
    pub targets: &'a dyn Fn(&[f64], &[f64]) -> Vec<f64>,
    pub unknowns: usize,
    pub s_max: f64,
}

/// State and clock where a trial segment stopped.
pub struct ShotOutcome {
    pub s_stop: f64,
    pub state: Vec<f64>,
}

pub(crate) fn evaluate_shot(
    problem: &Problem,
    spec: &ShootingSpec,
    unknowns: &[f64],
) -> Result<ShotOutcome> {
    let x0 = (spec.section)(unknowns)?;
    let cfg = IntegratorConfig {
        dense_output: false,
        ..IntegratorConfig::with_tol(ORBIT_INTEGRATION_TOL)
    };
    match spec.half_period {
        HalfPeriodStop::ComponentZero(idx) => {
            let pred = move |x: &[f64]| x[idx];
            let ev = EventSpec { predicate: &pred, terminal: true };
            let traj = problem.integrate_guarded(&x0, (0.0, spec.s_max), &cfg, &[ev], false)?;
            match traj.termination {
                crate::integrate::Termination::EventHit(0) => Ok(ShotOutcome {
                    s_stop: traj.end().0,
                    state: traj.end().1.clone(),
                }),
                _ => Err(Error::NoSignChange),
            }
        }
        HalfPeriodStop::AtUnknownTime(idx) => {
            let s_stop = unknowns[idx];
            if !(s_stop > 0.0) {
                return Err(Error::Invalid("segment length must be positive".into()));
            }
            let traj = problem.integrate_guarded(&x0, (0.0, s_stop), &cfg, &[], false)?;
            traj.ensure_completed()?;
            Ok(ShotOutcome { s_stop, state: traj.end().1.clone() })
        }
    }
}

/// Damped Newton iteration on the shooting targets with a central
/// finite-difference Jacobian of the flow.
///
/// Returns the converged unknowns, the final segment, and the target norm.
pub fn shoot(
    problem: &Problem,
    spec: &ShootingSpec,
    guess: &[f64],
) -> Result<(Vec<f64>, ShotOutcome, f64)> {
    let n = spec.unknowns;
    debug_assert_eq!(guess.len(), n);
    let mut u = guess.to_vec();
    let eval = |u: &[f64]| -> Result<(ShotOutcome, Vec<f64>)> {
        let shot = evaluate_shot(problem, spec, u)?;
        let t = (spec.targets)(&shot.state, u);
        Ok((shot, t))
    };

    // Aim well below the acceptance tolerance so the deck-matched return
    // error of the assembled orbit also lands under it.
    let target_tol = 1e-12;
    let (mut shot, mut targets) = eval(&u)?;
    let mut norm = inf_norm(&targets);
    for iteration in 0..MAX_SHOOTING_ITER {
        if norm <= target_tol {
            return Ok((u, shot, norm));
        }
        // Central-difference Jacobian of the targets.
        let mut jac = DMatrix::zeros(targets.len(), n);
        for j in 0..n {
            let h = 1e-6 * (1.0 + u[j].abs());
            let mut up = u.clone();
            let mut um = u.clone();
            up[j] += h;
            um[j] -= h;
            let tp = eval(&up)?.1;
            let tm = eval(&um)?.1;
            for i in 0..targets.len() {
                jac[(i, j)] = (tp[i] - tm[i]) / (2.0 * h);
            }
        }
        let rhs = DVector::from_iterator(targets.len(), targets.iter().map(|v| -v));
        let delta = jac
            .lu()
            .solve(&rhs)
            .ok_or(Error::NoConvergence { residual: norm, iterations: iteration })?;

        // Backtracking line search.
        let mut scale = 1.0;
        let mut advanced = false;
        for _ in 0..10 {
            let trial: Vec<f64> = u
                .iter()
                .zip(delta.iter())
                .map(|(ui, di)| ui + scale * di)
                .collect();
            match eval(&trial) {
                Ok((s, t)) => {
                    let tn = inf_norm(&t);
                    if tn < norm {
                        u = trial;
                        shot = s;
                        targets = t;
                        norm = tn;
                        advanced = true;
                        break;
                    }
                }
                Err(_) => {}
            }
            scale *= 0.5;
        }
        if !advanced {
            // Stalled at the evaluation noise floor.
            if norm <= SHOOTING_TOL {
                return Ok((u, shot, norm));
            }
            return Err(Error::NoConvergence { residual: norm, iterations: iteration });
        }
    }
    if norm <= SHOOTING_TOL {
        return Ok((u, shot, norm));
    }
    Err(Error::NoConvergence { residual: norm, iterations: MAX_SHOOTING_ITER })
}

pub(crate) fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |a, b| a.max(b.abs()))
}

/// Flow one full period with the time quadrature, extract the itinerary,
/// match the deck transformation at return, and assemble the orbit record.
pub(crate) fn assemble_orbit(
    problem: &Problem,
    kind: OrbitKind,
    mass_parameter: f64,
    x0: &[f64],
    period_s: f64,
    shooting_residual: f64,
) -> Result<PeriodicOrbit> {
    let dim = problem.dim();
    let cfg = IntegratorConfig::with_tol(ORBIT_INTEGRATION_TOL);
    let mut xt0 = x0.to_vec();
    xt0.push(0.0);
    // Overshoot a little so the period can be polished within dense data.
    let traj = problem.integrate_guarded(&xt0, (0.0, 1.02 * period_s), &cfg, &[], true)?;
    traj.ensure_completed()?;

    // Deck matching at the nominal period.
    let scale = 1.0 + inf_norm(x0);
    let at_nominal = traj.eval(period_s)?;
    let mut best = (f64::INFINITY, (false, false));
    for deck in [(false, false), (true, false), (false, true), (true, true)] {
        let signs = deck_signs(dim, deck);
        let err = (0..dim)
            .map(|i| (signs[i] * at_nominal[i] - x0[i]).abs())
            .fold(0.0, f64::max)
            / scale;
        if err < best.0 {
            best = (err, deck);
        }
    }
    let deck = best.1;
    let signs = deck_signs(dim, deck);

    // Polish the period along the flow direction: remove the component of
    // the return mismatch that a small time shift absorbs.
    let mut t_per = period_s;
    for _ in 0..3 {
        let xt = traj.eval(t_per)?;
        let mut f = vec![0.0; dim];
        problem.field(&xt[..dim], &mut f);
        let mut num = 0.0;
        let mut den = 0.0;
        for i in 0..dim {
            let e = signs[i] * xt[i] - x0[i];
            let fd = signs[i] * f[i];
            num += fd * e;
            den += fd * fd;
        }
        if den == 0.0 {
            break;
        }
        let delta = -num / den;
        if (t_per + delta) <= 0.0 || (t_per + delta) > 1.02 * period_s {
            break;
        }
        t_per += delta;
        if delta.abs() < 1e-15 * period_s {
            break;
        }
    }
    let at_period = traj.eval(t_per)?;
    let return_err = (0..dim)
        .map(|i| (signs[i] * at_period[i] - x0[i]).abs())
        .fold(0.0, f64::max)
        / scale;
    let period_t = at_period[dim];

    let itinerary = extract_itinerary(problem, &traj, x0, t_per)?;
    let spec = problem.spec();
    Ok(PeriodicOrbit {
        kind,
        mass_parameter,
        masses: spec.masses.as_slice().to_vec(),
        energy: problem.energy(),
        initial: RegularizedState::from_vec(x0, 0.0, 0.0, problem.energy()),
        period_s: t_per,
        period_t,
        itinerary,
        residual: shooting_residual.max(return_err),
        deck,
    })
}

/// Collision events over one period [0, period_s) of a dense [Q, P, t]
/// trajectory.
///
/// A collision the orbit starts on is listed at s = 0. Interior events are
/// located by sign crossings of scalar channel coordinates, or for planar
/// channels by minima of the squared channel norm at collision depth. The
/// period-end crossing duplicates the start and is dropped.
pub(crate) fn extract_itinerary(
    problem: &Problem,
    traj: &Trajectory,
    x0: &[f64],
    period_s: f64,
) -> Result<CollisionItinerary> {
    let dim = problem.dim();
    let margin = 1e-3 * period_s;
    let mut events: Vec<CollisionEvent> = Vec::new();
    for (range, kind) in problem.channels() {
        let start_norm: f64 = x0[range.clone()].iter().map(|q| q * q).sum();
        if start_norm < 1e-16 {
            events.push(CollisionEvent { kind, s: 0.0, t: 0.0 });
        }
        if range.len() == 1 {
            let idx = range.start;
            let pred = move |x: &[f64]| x[idx];
            for (s, state) in refine_all_events(traj, &pred)? {
                if s > margin && s < period_s - margin {
                    events.push(CollisionEvent { kind, s, t: state[dim] });
                }
            }
        } else {
            // Zero crossing of d|Z|^2/ds, computed through the field, with
            // the norm itself at collision depth.
            let r = range.clone();
            let pred = {
                let problem = problem.clone();
                move |x: &[f64]| {
                    let mut f = vec![0.0; dim];
                    problem.field(&x[..dim], &mut f);
                    2.0 * x[r.clone()]
                        .iter()
                        .zip(&f[r.clone()])
                        .map(|(z, dz)| z * dz)
                        .sum::<f64>()
                }
            };
            for (s, state) in refine_all_events(traj, &pred)? {
                let norm_sq: f64 = state[range.clone()].iter().map(|z| z * z).sum();
                if norm_sq < 1e-8 && s > margin && s < period_s - margin {
                    events.push(CollisionEvent { kind, s, t: state[dim] });
                }
            }
        }
    }
    events.sort_by(|a, b| a.s.total_cmp(&b.s));
    Ok(events)
}

/// Continue a converged orbit family in its mass parameter up to `to`,
/// stepping adaptively with steps at most `max_step`. The returned family is
/// ordered along the walk and starts with the base orbit.
pub fn continue_family(
    base: &PeriodicOrbit,
    to: f64,
    max_step: f64,
) -> Result<Vec<PeriodicOrbit>> {
    let mut family = vec![base.clone()];
    if to == base.mass_parameter {
        return Ok(family);
    }
    let mut step = max_step.min((to - base.mass_parameter).abs());
    let direction = (to - base.mass_parameter).signum();
    let mut current = base.clone();
    loop {
        let remaining = (to - current.mass_parameter).abs();
        if remaining < 1e-12 {
            return Ok(family);
        }
        let h = step.min(remaining);
        let m_next = current.mass_parameter + direction * h;
        match solve_member(&current, m_next) {
            Ok(orbit) => {
                family.push(orbit.clone());
                current = orbit;
                step = (step * 1.5).min(max_step);
            }
            Err(_) => {
                step *= 0.5;
                if step < 1e-4 {
                    return Err(Error::ContinuationStalled {
                        parameter: current.mass_parameter,
                        step,
                    });
                }
            }
        }
    }
}

/// Solve one family member at the given mass parameter, seeded from a
/// converged neighbor.
pub fn solve_member(neighbor: &PeriodicOrbit, m: f64) -> Result<PeriodicOrbit> {
    match neighbor.kind {
        OrbitKind::Schubart => {
            collinear::schubart_symmetric_at(neighbor.masses[0], m, Some(neighbor.initial.q[1]))
        }
        OrbitKind::ColS4 => collinear::cols4_at(m, Some(neighbor.initial.q[1])),
        OrbitKind::Pps4Collinear => {
            let col = collinear::cols4_at(m, Some(neighbor.initial.q[2]))?;
            collinear::embed_cols4(&col)
        }
        OrbitKind::Pps4Sbc => sbc::sbc_at(m, Some(sbc::unknowns_of(neighbor))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deck_sign_patterns() {
        assert_eq!(deck_signs(4, (false, false)), vec![1.0; 4]);
        assert_eq!(deck_signs(4, (true, false)), vec![-1.0, 1.0, -1.0, 1.0]);
        assert_eq!(deck_signs(4, (false, true)), vec![1.0, -1.0, 1.0, -1.0]);
        assert_eq!(
            deck_signs(8, (true, true)),
            vec![-1.0; 8]
        );
        assert_eq!(
            deck_signs(8, (true, false)),
            vec![-1.0, -1.0, 1.0, 1.0, -1.0, -1.0, 1.0, 1.0]
        );
    }
}
