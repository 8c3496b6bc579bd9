//! The non-collinear simultaneous-binary-collision orbit of the planar
//! pairwise-symmetric four-body problem.
//!
//! The orbit starts on a channel-1 collision (Z1 = 0) with the colliding
//! pairs' net momentum zero (W2 = 0); |W1| is pinned by the energy relation
//! and the angular momentum vanishes identically on that section. Rotation
//! invariance fixes Z2 to the positive x axis, leaving three unknowns: the
//! section radius, the approach angle of W1, and the half period. The
//! half-period state must reach the other channel's collision set Z2 = 0
//! with W1 = 0; one component of W1 is already forced by A = 0, so the
//! system is square.

use super::{assemble_orbit, shoot, HalfPeriodStop, OrbitKind, PeriodicOrbit, ShootingSpec};
use crate::error::{Error, Result};
use crate::integrate::IntegratorConfig;
use crate::problems::{pps4bp_field, Problem};

const FAMILY_ENERGY: f64 = -1.0;

fn sbc_section(w_pin: f64) -> impl Fn(&[f64]) -> Result<Vec<f64>> {
    move |u: &[f64]| {
        let (zeta, theta) = (u[0], u[1]);
        if !(zeta > 0.0) {
            return Err(Error::ChartDomain("section radius must be positive".into()));
        }
        Ok(vec![
            0.0,
            0.0,
            zeta,
            0.0,
            w_pin * theta.cos(),
            w_pin * theta.sin(),
            0.0,
            0.0,
        ])
    }
}

fn sbc_targets(state: &[f64], _u: &[f64]) -> Vec<f64> {
    // Z2 = 0 plus the A-independent component of W1 = 0.
    vec![
        state[2],
        state[3],
        state[0] * state[4] + state[1] * state[5],
    ]
}

/// Coarse scan over (section radius, approach angle): each trial trajectory
/// is scored by its first close approach to the symmetric half-period set
/// {Z2 = 0, W1 = 0}. Scoring the first local minimum, not the global one,
/// keeps the seeds on the fundamental orbit rather than a multi-bounce
/// repeat of it, and a loose tolerance is plenty for seeding.
fn grid_seed(problem: &Problem, w_pin: f64, s_span: f64) -> Vec<[f64; 3]> {
    let section = sbc_section(w_pin);
    let cfg = IntegratorConfig {
        dense_output: false,
        max_steps: 30_000,
        ..IntegratorConfig::with_tol(1e-7)
    };
    let mut scored: Vec<(f64, [f64; 3])> = Vec::new();
    let n_zeta = 30;
    let n_theta = 40;
    for iz in 0..n_zeta {
        let zeta = 0.3 + 2.4 * iz as f64 / (n_zeta - 1) as f64;
        for it in 0..n_theta {
            let theta = std::f64::consts::PI * it as f64 / n_theta as f64;
            let Ok(x0) = section(&[zeta, theta]) else { continue };
            let Ok(traj) = problem.integrate_guarded(&x0, (0.0, s_span), &cfg, &[], false)
            else {
                continue;
            };
            let score = |x: &[f64]| {
                (x[2] * x[2] + x[3] * x[3]) / (zeta * zeta)
                    + (x[4] * x[4] + x[5] * x[5]) / (w_pin * w_pin)
            };
            let sc: Vec<(f64, f64)> = traj.samples.iter().map(|(s, x)| (*s, score(x))).collect();
            for i in 1..sc.len().saturating_sub(1) {
                if sc[i].1 < sc[i - 1].1 && sc[i].1 < sc[i + 1].1 && sc[i].1 < 0.1 {
                    scored.push((sc[i].1, [zeta, theta, sc[i].0]));
                    break;
                }
            }
        }
    }
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut seeds: Vec<[f64; 3]> = scored.into_iter().take(12).map(|(_, seed)| seed).collect();
    // Among comparable seeds prefer the shortest half period.
    seeds.sort_by(|a, b| a[2].total_cmp(&b[2]));
    seeds
}

/// Non-collinear SBC orbit at the family energy.
pub(crate) fn sbc_at(m: f64, seed: Option<[f64; 3]>) -> Result<PeriodicOrbit> {
    let problem = pps4bp_field(m, FAMILY_ENERGY)?;
    let w_pin = match &problem {
        Problem::Pps4Sbc(c) => c.transit_momentum(),
        _ => unreachable!(),
    };
    let section = sbc_section(w_pin);
    let spec = ShootingSpec {
        section: &section,
        half_period: HalfPeriodStop::AtUnknownTime(2),
        targets: &sbc_targets,
        unknowns: 3,
        s_max: 0.0, // unused with AtUnknownTime
    };
    let seeds = match seed {
        Some(s) => vec![s],
        None => grid_seed(&problem, w_pin, 8.0),
    };
    let mut last_err = Error::NoConvergence { residual: f64::INFINITY, iterations: 0 };
    for s in seeds {
        match shoot(&problem, &spec, &s) {
            Ok((u, _shot, norm)) => {
                let x0 = section(&u)?;
                return assemble_orbit(&problem, OrbitKind::Pps4Sbc, m, &x0, 2.0 * u[2], norm);
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

pub(crate) fn unknowns_of(orbit: &PeriodicOrbit) -> [f64; 3] {
    let zeta = orbit.initial.q[2];
    let theta = orbit.initial.p[1].atan2(orbit.initial.p[0]);
    [zeta, theta, 0.5 * orbit.period_s]
}

/// The non-collinear periodic simultaneous-binary-collision orbit, reached
/// by continuation in m from the equal-mass solution when m != 1.
pub fn pps4bp_sbc_orbit(m: f64, energy: f64) -> Result<PeriodicOrbit> {
    if energy >= 0.0 {
        return Err(Error::NonNegativeEnergy(energy));
    }
    if !(m > 0.0) {
        return Err(Error::Invalid(format!("mass parameter must be positive, got {m}")));
    }
    let base = sbc_at(1.0, None)?;
    let orbit = if (m - 1.0).abs() < 1e-14 {
        base
    } else {
        let family = super::continue_family(&base, m, 0.02)?;
        family.last().expect("family contains the base").clone()
    };
    if (energy - FAMILY_ENERGY).abs() < 1e-15 {
        Ok(orbit)
    } else {
        orbit.rescaled_to_energy(energy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orbits::{inf_norm, ORBIT_INTEGRATION_TOL};
    use crate::problems::{CollisionKind, SbcChannel};

    #[test]
    fn equal_mass_sbc_orbit_exists() {
        let orbit = sbc_at(1.0, None).unwrap();
        assert!(orbit.residual <= 1e-10, "residual {:e}", orbit.residual);
        assert_eq!(orbit.deck, (true, true));

        // Zero angular momentum along the whole orbit.
        let problem = orbit.problem().unwrap();
        let cfg = IntegratorConfig::with_tol(ORBIT_INTEGRATION_TOL);
        let traj = problem
            .integrate_guarded(&orbit.initial.to_vec(), (0.0, orbit.period_s), &cfg, &[], false)
            .unwrap();
        for (_, x) in &traj.samples {
            assert!(problem.angular_momentum(x).unwrap().abs() < 1e-9);
        }

        // The itinerary alternates the two SBC channels.
        assert_eq!(orbit.itinerary.len(), 2, "{:?}", orbit.itinerary);
        let kinds: Vec<_> = orbit.itinerary.iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&CollisionKind::SimultaneousBinary(SbcChannel::OneTwo)));
        assert!(kinds.contains(&CollisionKind::SimultaneousBinary(SbcChannel::OneFour)));

        // Periodicity modulo the deck transformation.
        let signs = orbit.deck_signs();
        let end = traj.end();
        let x0 = orbit.initial.to_vec();
        let err = (0..8)
            .map(|i| (signs[i] * end.1[i] - x0[i]).abs())
            .fold(0.0, f64::max)
            / (1.0 + inf_norm(&x0));
        assert!(err <= 1e-9, "periodicity {err:e}");
    }

    #[test]
    fn continuation_reaches_smaller_masses() {
        let orbit = pps4bp_sbc_orbit(0.9, -1.0).unwrap();
        assert!(orbit.residual <= 1e-10);
        assert!((orbit.mass_parameter - 0.9).abs() < 1e-12);
    }
}
