//! Shooting for the collinear orbit families.
//!
//! Both collinear charts share the section structure: the orbit starts on a
//! channel-1 collision (Q1 = 0) with the transit momentum pinned by the
//! energy relation and the far degree of freedom at a turning point (P2 = 0).
//! With symmetric masses one unknown remains, the section coordinate Q2, and
//! the half-period target is a perpendicular crossing at the opposite
//! collision: P1 = 0 at the first zero of Q2. Reversibility then closes the
//! orbit over twice the half period with both channel signs flipped.

use super::{
    assemble_orbit, evaluate_shot, shoot, HalfPeriodStop, OrbitKind, PeriodicOrbit, ShootingSpec,
};
use crate::error::{Error, Result};
use crate::problems::{col3bp_field, cols4bp_field, pps4bp_collinear_field, Problem};

/// All orbit searches run at this energy; other energies come from the
/// homogeneity rescaling.
pub(crate) const FAMILY_ENERGY: f64 = -1.0;

struct SymmetricSetup {
    problem: Problem,
    transit_p1: f64,
    kind: OrbitKind,
    mass_parameter: f64,
}

fn symmetric_section(transit_p1: f64) -> impl Fn(&[f64]) -> Result<Vec<f64>> {
    move |u: &[f64]| {
        let xi = u[0];
        if !(xi > 0.0) {
            return Err(Error::ChartDomain("section coordinate must be positive".into()));
        }
        let p2 = if u.len() > 1 { u[1] } else { 0.0 };
        Ok(vec![0.0, xi, transit_p1, p2])
    }
}

/// Scan the one free section coordinate for sign changes of the half-period
/// target; each bracket is a Newton seed.
fn grid_seeds(setup: &SymmetricSetup, lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let section = symmetric_section(setup.transit_p1);
    let targets = |state: &[f64], _u: &[f64]| vec![state[2]];
    let spec = ShootingSpec {
        section: &section,
        half_period: HalfPeriodStop::ComponentZero(1),
        targets: &targets,
        unknowns: 1,
        s_max: 80.0,
    };
    let mut samples: Vec<(f64, f64)> = Vec::new();
    for i in 0..points {
        let xi = lo + (hi - lo) * i as f64 / (points - 1) as f64;
        if let Ok(shot) = evaluate_shot(&setup.problem, &spec, &[xi]) {
            samples.push((xi, shot.state[2]));
        }
    }
    let mut seeds = Vec::new();
    for w in samples.windows(2) {
        if w[0].1 * w[1].1 < 0.0 {
            seeds.push(0.5 * (w[0].0 + w[1].0));
        }
    }
    seeds
}

fn solve_symmetric(setup: &SymmetricSetup, seed: Option<f64>) -> Result<PeriodicOrbit> {
    let section = symmetric_section(setup.transit_p1);
    let targets = |state: &[f64], _u: &[f64]| vec![state[2]];
    let spec = ShootingSpec {
        section: &section,
        half_period: HalfPeriodStop::ComponentZero(1),
        targets: &targets,
        unknowns: 1,
        s_max: 80.0,
    };
    let seeds: Vec<f64> = match seed {
        Some(xi) => vec![xi],
        None => {
            let mut s = grid_seeds(setup, 0.05, 4.0, 120);
            if s.is_empty() {
                s = grid_seeds(setup, 0.02, 12.0, 240);
            }
            s
        }
    };
    let mut last_err = Error::NoConvergence { residual: f64::INFINITY, iterations: 0 };
    for xi in seeds {
        match shoot(&setup.problem, &spec, &[xi]) {
            Ok((u, shot, norm)) => {
                let x0 = section(&u)?;
                return assemble_orbit(
                    &setup.problem,
                    setup.kind,
                    setup.mass_parameter,
                    &x0,
                    2.0 * shot.s_stop,
                    norm,
                );
            }
            Err(e) => last_err = e,
        }
    }
    Err(last_err)
}

/// Schubart orbit for m1 = m3 at the family energy.
pub(crate) fn schubart_symmetric_at(
    m_outer: f64,
    m_middle: f64,
    seed: Option<f64>,
) -> Result<PeriodicOrbit> {
    let masses = [m_outer, m_middle, m_outer];
    let problem = col3bp_field(masses, FAMILY_ENERGY)?;
    let transit = match &problem {
        Problem::Col3bp(c) => c.transit_momentum_first(),
        _ => unreachable!(),
    };
    let setup = SymmetricSetup {
        problem,
        transit_p1: transit,
        kind: OrbitKind::Schubart,
        mass_parameter: m_middle,
    };
    solve_symmetric(&setup, seed)
}

/// Schubart orbit for arbitrary masses: a fixed point of the return map on
/// the Q1 = 0 section, with two unknowns (Q2, P2). Seeded by a homotopy in
/// m3 from the symmetric configuration.
fn schubart_asymmetric_at(masses: [f64; 3], seed: [f64; 2]) -> Result<PeriodicOrbit> {
    let problem = col3bp_field(masses, FAMILY_ENERGY)?;
    let transit = match &problem {
        Problem::Col3bp(c) => c.transit_momentum_first(),
        _ => unreachable!(),
    };
    let section = symmetric_section(transit);
    // Over one itinerary cycle both channels flip sign, so the fixed-point
    // condition compares the return against the deck image of the start.
    let targets =
        |state: &[f64], u: &[f64]| vec![state[1] + u[0], state[3] + u[1]];
    let spec = ShootingSpec {
        section: &section,
        half_period: HalfPeriodStop::ComponentZero(0),
        targets: &targets,
        unknowns: 2,
        s_max: 160.0,
    };
    let (u, shot, norm) = shoot(&problem, &spec, &seed)?;
    let x0 = section(&u)?;
    assemble_orbit(
        &problem,
        OrbitKind::Schubart,
        masses[1],
        &x0,
        shot.s_stop,
        norm,
    )
}

/// Schubart orbit of the collinear three-body problem.
pub fn schubart_orbit(masses: [f64; 3], energy: f64) -> Result<PeriodicOrbit> {
    if energy >= 0.0 {
        return Err(Error::NonNegativeEnergy(energy));
    }
    if masses.iter().any(|m| !(*m > 0.0)) {
        return Err(Error::Invalid("masses must be positive".into()));
    }
    let rel = (masses[0] - masses[2]).abs() / (masses[0] + masses[2]);
    let orbit = if rel < 1e-12 {
        schubart_symmetric_at(masses[0], masses[1], None)?
    } else {
        // Walk m3 from the symmetric value toward the target.
        let base = schubart_symmetric_at(masses[0], masses[1], None)?;
        let mut seed = [base.initial.q[1], base.initial.p[1]];
        let mut m3 = masses[0];
        let target = masses[2];
        let mut step: f64 = 0.05 * (1.0 + target.abs());
        let mut orbit = None;
        while (target - m3).abs() > 1e-14 {
            let next = if (target - m3).abs() <= step {
                target
            } else {
                m3 + step.copysign(target - m3)
            };
            match schubart_asymmetric_at([masses[0], masses[1], next], seed) {
                Ok(o) => {
                    seed = [o.initial.q[1], o.initial.p[1]];
                    m3 = next;
                    orbit = Some(o);
                    step *= 1.5;
                }
                Err(e) => {
                    step *= 0.5;
                    if step < 1e-4 {
                        return Err(e);
                    }
                }
            }
        }
        orbit.expect("loop ran at least once")
    };
    if (energy - FAMILY_ENERGY).abs() < 1e-15 {
        Ok(orbit)
    } else {
        orbit.rescaled_to_energy(energy)
    }
}

/// Schubart-like orbit of the collinear symmetric four-body problem at the
/// family energy.
pub(crate) fn cols4_at(m: f64, seed: Option<f64>) -> Result<PeriodicOrbit> {
    let problem = cols4bp_field(m, FAMILY_ENERGY)?;
    let transit = match &problem {
        Problem::ColS4bp(c) => c.transit_momentum_inner(),
        _ => unreachable!(),
    };
    let setup = SymmetricSetup {
        problem,
        transit_p1: transit,
        kind: OrbitKind::ColS4,
        mass_parameter: m,
    };
    solve_symmetric(&setup, seed)
}

/// Schubart-like orbit of the collinear symmetric four-body problem.
pub fn cols4bp_orbit(m: f64, energy: f64) -> Result<PeriodicOrbit> {
    if energy >= 0.0 {
        return Err(Error::NonNegativeEnergy(energy));
    }
    let orbit = cols4_at(m, None)?;
    if (energy - FAMILY_ENERGY).abs() < 1e-15 {
        Ok(orbit)
    } else {
        orbit.rescaled_to_energy(energy)
    }
}

/// Embed a ColS4 orbit into the planar pairwise-symmetric chart, where the
/// same curve is a periodic solution with transverse directions attached.
pub(crate) fn embed_cols4(orbit: &PeriodicOrbit) -> Result<PeriodicOrbit> {
    let problem = pps4bp_collinear_field(orbit.mass_parameter, orbit.energy)?;
    let q = &orbit.initial.q;
    let p = &orbit.initial.p;
    let x0 = [q[0], 0.0, q[1], 0.0, p[0], 0.0, p[1], 0.0];
    let embedded = assemble_orbit(
        &problem,
        OrbitKind::Pps4Collinear,
        orbit.mass_parameter,
        &x0,
        orbit.period_s,
        orbit.residual,
    )?;
    Ok(embedded)
}

/// The ColS4 orbit as a periodic solution of the planar pairwise-symmetric
/// problem; identical physical trace, planar phase space.
pub fn pps4bp_collinear_orbit(m: f64, energy: f64) -> Result<PeriodicOrbit> {
    if energy >= 0.0 {
        return Err(Error::NonNegativeEnergy(energy));
    }
    let orbit = cols4_at(m, None)?;
    let embedded = embed_cols4(&orbit)?;
    if (energy - FAMILY_ENERGY).abs() < 1e-15 {
        Ok(embedded)
    } else {
        embedded.rescaled_to_energy(energy)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::IntegratorConfig;
    use crate::orbits::{continue_family, deck_signs, inf_norm};
    use crate::problems::{CollisionKind, SbcChannel, Side};

    fn check_periodicity(orbit: &PeriodicOrbit) -> f64 {
        let problem = orbit.problem().unwrap();
        let x0 = orbit.initial.to_vec();
        let cfg = IntegratorConfig::with_tol(1e-12);
        let traj = problem
            .integrate_guarded(&x0, (0.0, orbit.period_s), &cfg, &[], false)
            .unwrap();
        let signs = orbit.deck_signs();
        let end = traj.end();
        let scale = 1.0 + inf_norm(&x0);
        (0..x0.len())
            .map(|i| (signs[i] * end.1[i] - x0[i]).abs())
            .fold(0.0, f64::max)
            / scale
    }

    #[test]
    fn schubart_equal_masses_converges() {
        let orbit = schubart_orbit([1.0 / 3.0; 3], -1.0).unwrap();
        assert!(orbit.residual <= 1e-10, "residual {:e}", orbit.residual);
        assert!(orbit.period_s > 0.0 && orbit.period_t > 0.0);
        assert_eq!(orbit.deck, (true, true));

        // The itinerary alternates left- and right-pair binary collisions.
        assert_eq!(orbit.itinerary.len(), 2);
        let kinds: Vec<_> = orbit.itinerary.iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&CollisionKind::PairBinary(Side::Left)));
        assert!(kinds.contains(&CollisionKind::PairBinary(Side::Right)));

        let return_err = check_periodicity(&orbit);
        assert!(
            return_err <= 10.0 * orbit.residual.max(1e-11),
            "periodicity {return_err:e}"
        );
    }

    #[test]
    fn schubart_near_equal_masses_converges() {
        let orbit = schubart_orbit([0.333333, 0.333334, 0.333333], -1.0).unwrap();
        assert!(orbit.residual <= 1e-10);
    }

    #[test]
    fn schubart_asymmetric_masses_converge() {
        let orbit = schubart_orbit([1.0, 1.0, 1.15], -1.0).unwrap();
        assert!(orbit.residual <= 1e-10);
        let return_err = check_periodicity(&orbit);
        assert!(return_err <= 1e-9, "periodicity {return_err:e}");
    }

    #[test]
    fn energy_rescaling_matches_homogeneity() {
        let base = schubart_orbit([1.0 / 3.0; 3], -1.0).unwrap();
        let scaled = schubart_orbit([1.0 / 3.0; 3], -2.0).unwrap();
        // Physical period scales like |E|^(-3/2).
        let expect = base.period_t * 2.0_f64.powf(-1.5);
        assert!(
            (scaled.period_t - expect).abs() <= 1e-9 * expect,
            "{} vs {}",
            scaled.period_t,
            expect
        );
        // The rescaled initial condition is genuinely periodic on the
        // rescaled field.
        let return_err = check_periodicity(&scaled);
        assert!(return_err <= 1e-9, "periodicity {return_err:e}");
    }

    #[test]
    fn cols4_unit_mass_converges_with_alternating_itinerary() {
        let orbit = cols4bp_orbit(1.0, -1.0).unwrap();
        assert!(orbit.residual <= 1e-10, "residual {:e}", orbit.residual);
        assert_eq!(orbit.itinerary.len(), 2);
        let kinds: Vec<_> = orbit.itinerary.iter().map(|e| e.kind).collect();
        assert!(kinds.contains(&CollisionKind::InnerBinary));
        assert!(kinds.contains(&CollisionKind::SimultaneousBinary(SbcChannel::OneTwo)));
        assert!(check_periodicity(&orbit) <= 1e-9);
    }

    #[test]
    fn pps4_collinear_orbit_equals_the_cols4_trace() {
        let col = cols4bp_orbit(1.0, -1.0).unwrap();
        let planar = pps4bp_collinear_orbit(1.0, -1.0).unwrap();
        assert!(planar.residual <= 1e-9);
        assert!((planar.period_s - col.period_s).abs() < 1e-10);
        assert!((planar.period_t - col.period_t).abs() < 1e-8);

        // Physical traces coincide: sample both flows at common s.
        let p4 = col.problem().unwrap();
        let p8 = planar.problem().unwrap();
        let cfg = IntegratorConfig::with_tol(1e-12);
        let mut x4 = col.initial.to_vec();
        x4.push(0.0);
        let mut x8 = planar.initial.to_vec();
        x8.push(0.0);
        let t4 = p4
            .integrate_guarded(&x4, (0.0, col.period_s), &cfg, &[], true)
            .unwrap();
        let t8 = p8
            .integrate_guarded(&x8, (0.0, col.period_s), &cfg, &[], true)
            .unwrap();
        for frac in [0.2, 0.5, 0.8] {
            let s = frac * col.period_s;
            let a = t4.eval(s).unwrap();
            let b = t8.eval(s).unwrap();
            let reg4 = crate::regularize::RegularizedState::from_vec(&a[..4], s, a[4], -1.0);
            let reg8 = crate::regularize::RegularizedState::from_vec(&b[..8], s, b[8], -1.0);
            let phys4 = p4.to_physical(&reg4).unwrap();
            let phys8 = p8.to_physical(&reg8).unwrap();
            // Bodies (q1, q2) of the collinear problem appear as the x
            // components of the planar embedding.
            assert!((phys4.positions[0] - phys8.positions[0]).abs() < 1e-8);
            assert!((phys4.positions[1] - phys8.positions[2]).abs() < 1e-8);
            assert!((phys4.time - phys8.time).abs() < 1e-8);
        }
    }

    #[test]
    fn family_continuation_tracks_the_middle_mass() {
        let base = schubart_symmetric_at(1.0, 1.0, None).unwrap();
        let family = continue_family(&base, 1.6, 0.2).unwrap();
        assert!(family.len() >= 4);
        assert!((family.last().unwrap().mass_parameter - 1.6).abs() < 1e-12);
        for orbit in &family {
            assert!(orbit.residual <= 1e-10);
        }
        // Cross-check continuation against a direct solve.
        let direct = schubart_symmetric_at(1.0, 1.6, None).unwrap();
        let cont = family.last().unwrap();
        assert!((direct.initial.q[1] - cont.initial.q[1]).abs() < 1e-8);
        assert!((direct.period_s - cont.period_s).abs() < 1e-8);
    }

    #[test]
    fn zero_length_continuation_returns_the_base() {
        let base = cols4_at(1.0, None).unwrap();
        let family = continue_family(&base, 1.0, 0.1).unwrap();
        assert_eq!(family.len(), 1);
    }

    #[test]
    fn degenerate_guess_on_the_guard_aborts() {
        let problem = cols4bp_field(1.0, -1.0).unwrap();
        let transit = match &problem {
            Problem::ColS4bp(c) => c.transit_momentum_inner(),
            _ => unreachable!(),
        };
        let section = symmetric_section(transit);
        let targets = |state: &[f64], _u: &[f64]| vec![state[2]];
        let spec = ShootingSpec {
            section: &section,
            half_period: HalfPeriodStop::ComponentZero(1),
            targets: &targets,
            unknowns: 1,
            s_max: 10.0,
        };
        let err = evaluate_shot(&problem, &spec, &[1e-7]);
        assert!(matches!(err, Err(Error::TripleCollisionChart { .. })));
    }

    #[test]
    fn deck_signs_flip_both_channels_over_one_period() {
        let orbit = cols4_at(1.0, None).unwrap();
        assert_eq!(deck_signs(4, orbit.deck), vec![-1.0; 4]);
    }
}
