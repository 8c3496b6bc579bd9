//! Collinear three-body chart.
//!
//! Chain coordinates a = q2 - q1, b = q3 - q2 reduce out the center of mass;
//! both binary collisions are Levi-Civita squared, Q1^2 = a, Q2^2 = b, with
//! chain momenta p_a, p_b mapped canonically to P1 = 2 Q1 p_a, P2 = 2 Q2 p_b
//! and the time scale g = Q1^2 Q2^2. The only singularity left is the triple
//! collision Q1 = Q2 = 0.

use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::nbody::PhaseState;
use crate::regularize::{Chart, RegularizedState};

#[derive(Debug, Clone)]
pub struct Col3bpChart {
    pub masses: [f64; 3],
    pub energy: f64,
}

impl Col3bpChart {
    pub fn new(masses: [f64; 3], energy: f64) -> Result<Self> {
        if masses.iter().any(|m| !(*m > 0.0)) {
            return Err(Error::Invalid("masses must be positive".into()));
        }
        Ok(Col3bpChart { masses, energy })
    }

    fn kinetic_coeffs(&self) -> (f64, f64, f64) {
        let [m1, m2, m3] = self.masses;
        (1.0 / m1 + 1.0 / m2, 1.0 / m2, 1.0 / m2 + 1.0 / m3)
    }

    /// Reduced Hamiltonian in chain coordinates, valid away from collisions.
    pub fn reduced_hamiltonian(&self, a: f64, b: f64, pa: f64, pb: f64) -> f64 {
        let [m1, m2, m3] = self.masses;
        let (alpha, beta, gamma) = self.kinetic_coeffs();
        let kinetic = 0.5 * alpha * pa * pa - beta * pa * pb + 0.5 * gamma * pb * pb;
        let potential = m1 * m2 / a + m2 * m3 / b + m1 * m3 / (a + b);
        kinetic - potential
    }

    /// Regularized transit momentum |P1| at the q1 = q2 collision, pinned by
    /// Gamma = 0 independently of the energy level.
    pub fn transit_momentum_first(&self) -> f64 {
        let [m1, m2, _] = self.masses;
        let (alpha, _, _) = self.kinetic_coeffs();
        (8.0 * m1 * m2 / alpha).sqrt()
    }

    pub fn to_physical(&self, reg: &RegularizedState) -> Result<PhaseState> {
        let [m1, m2, m3] = self.masses;
        let total = m1 + m2 + m3;
        let (q1r, q2r) = (reg.q[0], reg.q[1]);
        if q1r == 0.0 || q2r == 0.0 {
            return Err(Error::ChartDomain(
                "physical velocities are undefined at a collision state".into(),
            ));
        }
        let (a, b) = (q1r * q1r, q2r * q2r);
        let pa = reg.p[0] / (2.0 * q1r);
        let pb = reg.p[1] / (2.0 * q2r);
        let q1 = -((m2 + m3) * a + m3 * b) / total;
        let q2 = q1 + a;
        let q3 = q2 + b;
        let v1 = -pa / m1;
        let v2 = (pa - pb) / m2;
        let v3 = pb / m3;
        PhaseState::new(1, vec![q1, q2, q3], vec![v1, v2, v3], reg.t)
    }

    pub fn from_physical(&self, state: &PhaseState) -> Result<RegularizedState> {
        if state.dim != 1 || state.bodies() != 3 {
            return Err(Error::ChartDomain("col3bp expects 3 collinear bodies".into()));
        }
        let [m1, m2, m3] = self.masses;
        let total = m1 + m2 + m3;
        let q = &state.positions;
        let v = &state.velocities;
        let a = q[1] - q[0];
        let b = q[2] - q[1];
        if a <= 0.0 || b <= 0.0 {
            return Err(Error::ChartDomain(format!(
                "ordering q1 < q2 < q3 violated (a = {a}, b = {b})"
            )));
        }
        // Reduce to the center-of-mass frame before reading chain momenta.
        let l = (m1 * v[0] + m2 * v[1] + m3 * v[2]) / total;
        let pa = -m1 * (v[0] - l);
        let pb = m3 * (v[2] - l);
        let energy = self.reduced_hamiltonian(a, b, pa, pb);
        let (q1r, q2r) = (a.sqrt(), b.sqrt());
        Ok(RegularizedState {
            q: vec![q1r, q2r],
            p: vec![2.0 * q1r * pa, 2.0 * q2r * pb],
            s: 0.0,
            t: state.time,
            energy,
        })
    }
}

impl Chart<4> for Col3bpChart {
    fn gamma<S: Scalar>(&self, x: &[S; 4]) -> S {
        let [m1, m2, m3] = self.masses;
        let (alpha, beta, gam) = self.kinetic_coeffs();
        let [q1, q2, p1, p2] = *x;
        let q1s = q1.sq();
        let q2s = q2.sq();
        let g = q1s * q2s;
        let kinetic =
            p1.sq() * q2s * (alpha / 8.0) - p1 * p2 * q1 * q2 * (beta / 4.0) + p2.sq() * q1s * (gam / 8.0);
        let potential = q2s * (m1 * m2) + q1s * (m2 * m3) + g * (m1 * m3) / (q1s + q2s);
        kinetic - potential - g * self.energy
    }

    fn time_scale<S: Scalar>(&self, x: &[S; 4]) -> S {
        x[0].sq() * x[1].sq()
    }
}

/// Energy of a collinear 3-body state in its center-of-mass frame; the value
/// to build the chart with before calling `from_physical`.
pub fn col3bp_energy(masses: [f64; 3], state: &PhaseState) -> Result<f64> {
    let chart = Col3bpChart::new(masses, 0.0)?;
    let reg = chart.from_physical(state)?;
    Ok(reg.energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;
    use crate::integrate::{integrate, refine_event, IntegratorConfig};
    use crate::nbody::{integrals, nbody_rhs, pack_state, MassVector};
    use crate::problems::{col3bp_field, Problem};
    use crate::regularize::gamma_value;
    use approx::assert_relative_eq;
    use nalgebra::DMatrix;

    fn equal_masses() -> [f64; 3] {
        [1.0 / 3.0; 3]
    }

    #[test]
    fn conversion_by_direct_substitution() {
        // q = (-1, 0, 2), equal masses: a = 1, b = 2 so Q1 = 1, Q2 = sqrt(2).
        let chart = Col3bpChart::new(equal_masses(), 0.0).unwrap();
        let state = PhaseState::new(1, vec![-1.0, 0.0, 2.0], vec![0.0; 3], 0.0).unwrap();
        let reg = chart.from_physical(&state).unwrap();
        assert_relative_eq!(reg.q[0], 1.0, max_relative = 1e-14);
        assert_relative_eq!(reg.q[1], 2.0_f64.sqrt(), max_relative = 1e-14);
    }

    #[test]
    fn round_trip_is_identity_away_from_collisions() {
        let chart = Col3bpChart::new([0.5, 1.0, 1.5], 0.0).unwrap();
        let state = PhaseState::new(
            1,
            vec![-1.2, -0.1, 0.9],
            vec![0.05, -0.2, 0.1],
            0.0,
        )
        .unwrap();
        let reg = chart.from_physical(&state).unwrap();
        let back = chart.to_physical(&reg).unwrap();
        // Reconstruction is in the center-of-mass frame.
        let m = MassVector::new(vec![0.5, 1.0, 1.5]).unwrap();
        let ints = integrals(&state, &m).unwrap();
        for j in 0..3 {
            let expect_q = state.positions[j] - ints.center_of_mass[0];
            let expect_v = state.velocities[j] - ints.linear_momentum[0];
            assert_relative_eq!(back.positions[j], expect_q, epsilon = 1e-12);
            assert_relative_eq!(back.velocities[j], expect_v, epsilon = 1e-12);
        }
    }

    #[test]
    fn gamma_is_the_scaled_energy_defect_of_the_full_problem() {
        let masses = [0.7, 1.1, 0.4];
        let e = -0.3;
        let chart = Col3bpChart::new(masses, e).unwrap();
        let m = MassVector::new(masses.to_vec()).unwrap();
        for (a, b, pa, pb) in [(0.8, 1.3, 0.2, -0.4), (2.0, 0.3, -1.0, 0.5), (1.0, 1.0, 0.0, 0.0)] {
            let reg = RegularizedState {
                q: vec![a.sqrt(), b.sqrt()],
                p: vec![2.0 * a.sqrt() * pa, 2.0 * b.sqrt() * pb],
                s: 0.0,
                t: 0.0,
                energy: e,
            };
            let x = reg.to_vec();
            let gamma = gamma_value::<_, 4>(&chart, &x);
            // Independent route: H from the full-problem integrals of the
            // reconstructed physical state.
            let phys = chart.to_physical(&reg).unwrap();
            let h = integrals(&phys, &m).unwrap().total_energy;
            let g = a * b;
            assert_relative_eq!(gamma, g * (h - e), epsilon = 1e-11);
        }
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let problem = col3bp_field([0.9, 0.5, 1.4], -0.6).unwrap();
        let x0 = [0.8, 1.1, 0.3, -0.7];
        let mut jac = DMatrix::zeros(4, 4);
        problem.jacobian(&x0, &mut jac);
        let h = 1e-6;
        for j in 0..4 {
            let (mut xp, mut xm) = (x0, x0);
            xp[j] += h;
            xm[j] -= h;
            let (mut fp, mut fm) = ([0.0; 4], [0.0; 4]);
            problem.field(&xp, &mut fp);
            problem.field(&xm, &mut fm);
            for i in 0..4 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert_relative_eq!(jac[(i, j)], fd, epsilon = 1e-5, max_relative = 1e-6);
            }
        }
    }

    #[test]
    fn regularized_flow_matches_physical_integration() {
        let masses = equal_masses();
        let m = MassVector::new(masses.to_vec()).unwrap();
        let state = PhaseState::new(
            1,
            vec![-1.0, -0.05, 1.05],
            vec![-0.3, 0.0, 0.3],
            0.0,
        )
        .unwrap();
        let e = col3bp_energy(masses, &state).unwrap();
        assert!(e < 0.0);
        let problem = col3bp_field(masses, e).unwrap();
        let reg = problem.from_physical(&state).unwrap();

        // Physical route.
        let rhs = |_s: f64, x: &[f64], dx: &mut [f64]| nbody_rhs(&m, 1, x, dx);
        let cfg = IntegratorConfig::with_tol(1e-12);
        let phys_traj = integrate(&rhs, &pack_state(&state), (0.0, 1.0), &cfg).unwrap();
        phys_traj.ensure_completed().unwrap();
        let phys_end = phys_traj.final_state();

        // Regularized route, stopped at physical time t = 1.
        let mut x0 = reg.to_vec();
        x0.push(0.0);
        let traj = problem
            .integrate_guarded(&x0, (0.0, 50.0), &cfg, &[], true)
            .unwrap();
        let (_, at_t1) = refine_event(&traj, &|x: &[f64]| x[4] - 1.0).unwrap();
        let reg_end = RegularizedState::from_vec(&at_t1[..4], 0.0, 1.0, e);
        let back = problem.to_physical(&reg_end).unwrap();

        for j in 0..3 {
            assert!(
                (back.positions[j] - phys_end[j]).abs() < 1e-8,
                "position {j}: {} vs {}",
                back.positions[j],
                phys_end[j]
            );
            assert!(
                (back.velocities[j] - phys_end[3 + j]).abs() < 1e-8,
                "velocity {j}"
            );
        }
    }

    #[test]
    fn binary_collision_transit_is_regular() {
        let masses = equal_masses();
        // Heading into the q1 = q2 collision with the far pair wide.
        let a = 0.04_f64;
        let b = 1.0_f64;
        let (pa, pb) = (-0.5, 0.0);
        let chart = Col3bpChart::new(masses, 0.0).unwrap();
        let e = chart.reduced_hamiltonian(a, b, pa, pb);
        let problem = col3bp_field(masses, e).unwrap();
        let x0 = [
            a.sqrt(),
            b.sqrt(),
            2.0 * a.sqrt() * pa,
            2.0 * b.sqrt() * pb,
        ];
        let cfg = IntegratorConfig::with_tol(1e-12);
        let traj = problem
            .integrate_guarded(&x0, (0.0, 2.0), &cfg, &[], false)
            .unwrap();
        let (s_c, at_c) = refine_event(&traj, &|x: &[f64]| x[0]).unwrap();

        // Finite regularized velocity through the event, with |P1| pinned by
        // the energy relation.
        let mut f = [0.0; 4];
        problem.field(&at_c, &mut f);
        assert!(f.iter().all(|v| v.is_finite()));
        assert_relative_eq!(
            at_c[2].abs(),
            problem_transit(&problem),
            epsilon = 1e-8
        );

        // The pair separation a = Q1^2 grows on exit.
        let after = traj.eval(s_c + 0.05).unwrap();
        assert!(after[0] * after[0] > 1e-6);
        let da_ds = 2.0 * after[0] * {
            let mut g = [0.0; 4];
            problem.field(&after, &mut g);
            g[0]
        };
        assert!(da_ds > 0.0, "separation must increase after transit");
    }

    fn problem_transit(p: &Problem) -> f64 {
        match p {
            Problem::Col3bp(c) => c.transit_momentum_first(),
            _ => unreachable!(),
        }
    }

    #[test]
    fn total_collapse_seed_trips_the_guard() {
        let masses = equal_masses();
        let state = PhaseState::new(1, vec![-1.0, 0.0, 1.0], vec![0.0; 3], 0.0).unwrap();
        let e = col3bp_energy(masses, &state).unwrap();
        let problem = col3bp_field(masses, e).unwrap();
        let x0 = problem.from_physical(&state).unwrap().to_vec();
        // The time transform freezes the flow near total collapse: the
        // channel coordinates decay like 1/s, so the guard sits deep into
        // fictitious time. The collapse orbit is a saddle, so the tolerance
        // must be tight enough to track it into the guard shell.
        let cfg = IntegratorConfig::with_tol(1e-11);
        let err = problem.integrate_guarded(&x0, (0.0, 1e8), &cfg, &[], false);
        assert!(matches!(err, Err(Error::TripleCollisionChart { .. })));
    }
}
