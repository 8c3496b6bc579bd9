//! Planar pairwise-symmetric four-body charts.
//!
//! Bodies of mass 1 sit at q1 and -q1, bodies of mass m at q2 and -q2. The
//! symmetry reduces the problem to two planar coordinates; collision
//! channels are regularized by the complex-square Levi-Civita map per
//! channel. Two charts are provided, because no single chart covers every
//! non-total-collapse collision:
//!
//! * [`Pps4SbcChart`] squares the two simultaneous-binary-collision channels
//!   r1 = q1 - q2 and r2 = q1 + q2; the central binary collisions q1 = 0 and
//!   q2 = 0 stay singular there.
//! * [`Pps4CollinearChart`] squares the central binary channel q2 and the
//!   pair channel q1 - q2, the two collisions crossed by the collinear
//!   Schubart-like orbit; the q1 = 0 and q1 = -q2 coincidences stay singular.
//!
//! On the real subspace the collinear chart reproduces the collinear
//! symmetric four-body chart coordinate-for-coordinate.

use super::{cadd, cnorm, csq, csub, mul_conj, norm_sq, require_close};
use crate::ad::Scalar;
use crate::error::{Error, Result};
use crate::nbody::PhaseState;
use crate::regularize::{
    levi_civita_planar_inv, momentum_from_regularized_planar, momentum_to_regularized_planar,
    Chart, RegularizedState,
};

/// Reduced Hamiltonian shared by both charts, on (q1, q2) in R^2 with
/// canonical momenta p1 = 2 q1', p2 = 2 m q2'. Equals the total energy.
pub fn pps4bp_reduced_hamiltonian(m: f64, q1: [f64; 2], q2: [f64; 2], p1: [f64; 2], p2: [f64; 2]) -> f64 {
    let nrm = |v: [f64; 2]| (v[0] * v[0] + v[1] * v[1]).sqrt();
    let r1 = nrm([q1[0] - q2[0], q1[1] - q2[1]]);
    let r2 = nrm([q1[0] + q2[0], q1[1] + q2[1]]);
    let kinetic = (p1[0] * p1[0] + p1[1] * p1[1]) / 4.0
        + (p2[0] * p2[0] + p2[1] * p2[1]) / (4.0 * m);
    let potential = 2.0 * m / r1 + 2.0 * m / r2 + 0.5 / nrm(q1) + 0.5 * m * m / nrm(q2);
    kinetic - potential
}

fn split(x: &[f64]) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    (
        [x[0], x[1]],
        [x[2], x[3]],
        [x[4], x[5]],
        [x[6], x[7]],
    )
}

fn check_pairwise_symmetry(state: &PhaseState) -> Result<()> {
    if state.dim != 2 || state.bodies() != 4 {
        return Err(Error::ChartDomain("pps4bp expects 4 planar bodies".into()));
    }
    for c in 0..2 {
        require_close(state.positions[2 * 2 + c], -state.positions[c], "symmetry q3 = -q1")?;
        require_close(state.positions[3 * 2 + c], -state.positions[2 + c], "symmetry q4 = -q2")?;
        require_close(state.velocities[2 * 2 + c], -state.velocities[c], "symmetry v3 = -v1")?;
        require_close(state.velocities[3 * 2 + c], -state.velocities[2 + c], "symmetry v4 = -v2")?;
    }
    Ok(())
}

fn assemble_physical(
    m: f64,
    q1: [f64; 2],
    q2: [f64; 2],
    p1: [f64; 2],
    p2: [f64; 2],
    t: f64,
) -> Result<PhaseState> {
    let _ = m;
    let v1 = [0.5 * p1[0], 0.5 * p1[1]];
    let v2 = [p2[0] / (2.0 * m), p2[1] / (2.0 * m)];
    PhaseState::new(
        2,
        vec![q1[0], q1[1], q2[0], q2[1], -q1[0], -q1[1], -q2[0], -q2[1]],
        vec![v1[0], v1[1], v2[0], v2[1], -v1[0], -v1[1], -v2[0], -v2[1]],
        t,
    )
}

fn read_reduced(state: &PhaseState, m: f64) -> ([f64; 2], [f64; 2], [f64; 2], [f64; 2]) {
    let q1 = [state.positions[0], state.positions[1]];
    let q2 = [state.positions[2], state.positions[3]];
    let p1 = [2.0 * state.velocities[0], 2.0 * state.velocities[1]];
    let p2 = [2.0 * m * state.velocities[2], 2.0 * m * state.velocities[3]];
    (q1, q2, p1, p2)
}

/// Chart regularizing both simultaneous-binary-collision channels,
/// Z1^2 = q1 - q2 and Z2^2 = q1 + q2, with g = |Z1|^2 |Z2|^2.
/// State layout [Z1, Z2, W1, W2].
#[derive(Debug, Clone)]
pub struct Pps4SbcChart {
    pub m: f64,
    pub energy: f64,
}

impl Pps4SbcChart {
    pub fn new(m: f64, energy: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::Invalid(format!("mass parameter must be positive, got {m}")));
        }
        Ok(Pps4SbcChart { m, energy })
    }

    /// |W| pinned by Gamma = 0 while the other channel is at its collision;
    /// the same for both channels, each being a (1, m) binary pair.
    pub fn transit_momentum(&self) -> f64 {
        (32.0 * self.m * self.m / (self.m + 1.0)).sqrt()
    }

    pub fn to_physical(&self, reg: &RegularizedState) -> Result<PhaseState> {
        let x = reg.to_vec();
        let (z1, z2, w1, w2) = split(&x);
        let r1 = [z1[0] * z1[0] - z1[1] * z1[1], 2.0 * z1[0] * z1[1]];
        let r2 = [z2[0] * z2[0] - z2[1] * z2[1], 2.0 * z2[0] * z2[1]];
        let q1 = [0.5 * (r1[0] + r2[0]), 0.5 * (r1[1] + r2[1])];
        let q2 = [0.5 * (r2[0] - r1[0]), 0.5 * (r2[1] - r1[1])];
        let s1 = momentum_from_regularized_planar(z1, w1)?;
        let s2 = momentum_from_regularized_planar(z2, w2)?;
        let p1 = [s1[0] + s2[0], s1[1] + s2[1]];
        let p2 = [s2[0] - s1[0], s2[1] - s1[1]];
        assemble_physical(self.m, q1, q2, p1, p2, reg.t)
    }

    pub fn from_physical(&self, state: &PhaseState) -> Result<RegularizedState> {
        check_pairwise_symmetry(state)?;
        let (q1, q2, p1, p2) = read_reduced(state, self.m);
        let r1 = [q1[0] - q2[0], q1[1] - q2[1]];
        let r2 = [q1[0] + q2[0], q1[1] + q2[1]];
        if r1[0].hypot(r1[1]) == 0.0 || r2[0].hypot(r2[1]) == 0.0 {
            return Err(Error::ChartDomain("separations must be positive".into()));
        }
        let z1 = levi_civita_planar_inv(r1);
        let z2 = levi_civita_planar_inv(r2);
        let s1 = [0.5 * (p1[0] - p2[0]), 0.5 * (p1[1] - p2[1])];
        let s2 = [0.5 * (p1[0] + p2[0]), 0.5 * (p1[1] + p2[1])];
        let w1 = momentum_to_regularized_planar(z1, s1);
        let w2 = momentum_to_regularized_planar(z2, s2);
        Ok(RegularizedState {
            q: vec![z1[0], z1[1], z2[0], z2[1]],
            p: vec![w1[0], w1[1], w2[0], w2[1]],
            s: 0.0,
            t: state.time,
            energy: pps4bp_reduced_hamiltonian(self.m, q1, q2, p1, p2),
        })
    }
}

impl Chart<8> for Pps4SbcChart {
    fn gamma<S: Scalar>(&self, x: &[S; 8]) -> S {
        let m = self.m;
        let z1 = [x[0], x[1]];
        let z2 = [x[2], x[3]];
        let w1 = [x[4], x[5]];
        let w2 = [x[6], x[7]];
        let n1 = norm_sq(z1);
        let n2 = norm_sq(z2);
        let g = n1 * n2;
        let a = mul_conj(w1, z2);
        let b = mul_conj(w2, z1);
        let kinetic =
            norm_sq(cadd(a, b)) * (1.0 / 16.0) + norm_sq(csub(b, a)) * (1.0 / (16.0 * m));
        let two_q1 = cadd(csq(z1), csq(z2));
        let two_q2 = csub(csq(z2), csq(z1));
        let potential =
            (n1 + n2) * (2.0 * m) + g / cnorm(two_q1) + g * (m * m) / cnorm(two_q2);
        kinetic - potential - g * self.energy
    }

    fn time_scale<S: Scalar>(&self, x: &[S; 8]) -> S {
        norm_sq([x[0], x[1]]) * norm_sq([x[2], x[3]])
    }
}

/// Chart regularizing the collisions crossed by the collinear Schubart-like
/// orbit: Y1^2 = q2 (central binary of the mass-m pair) and Y2^2 = q1 - q2
/// (the q1 = q2 simultaneous binary collision), with g = |Y1|^2 |Y2|^2.
/// State layout [Y1, Y2, V1, V2]; on the real subspace this is exactly the
/// collinear symmetric four-body chart.
#[derive(Debug, Clone)]
pub struct Pps4CollinearChart {
    pub m: f64,
    pub energy: f64,
}

impl Pps4CollinearChart {
    pub fn new(m: f64, energy: f64) -> Result<Self> {
        if !(m > 0.0) {
            return Err(Error::Invalid(format!("mass parameter must be positive, got {m}")));
        }
        Ok(Pps4CollinearChart { m, energy })
    }

    pub fn transit_momentum_inner(&self) -> f64 {
        (8.0 * self.m.powi(3)).sqrt()
    }

    pub fn transit_momentum_sbc(&self) -> f64 {
        (32.0 * self.m * self.m / (self.m + 1.0)).sqrt()
    }

    pub fn to_physical(&self, reg: &RegularizedState) -> Result<PhaseState> {
        let x = reg.to_vec();
        let (y1, y2, v1, v2) = split(&x);
        let c2 = [y1[0] * y1[0] - y1[1] * y1[1], 2.0 * y1[0] * y1[1]];
        let c1 = [y2[0] * y2[0] - y2[1] * y2[1], 2.0 * y2[0] * y2[1]];
        let q2 = c2;
        let q1 = [c1[0] + c2[0], c1[1] + c2[1]];
        let u2 = momentum_from_regularized_planar(y1, v1)?;
        let u1 = momentum_from_regularized_planar(y2, v2)?;
        let p1 = u1;
        let p2 = [u2[0] - u1[0], u2[1] - u1[1]];
        assemble_physical(self.m, q1, q2, p1, p2, reg.t)
    }

    pub fn from_physical(&self, state: &PhaseState) -> Result<RegularizedState> {
        check_pairwise_symmetry(state)?;
        let (q1, q2, p1, p2) = read_reduced(state, self.m);
        let c1 = [q1[0] - q2[0], q1[1] - q2[1]];
        let c2 = q2;
        if c1[0].hypot(c1[1]) == 0.0 || c2[0].hypot(c2[1]) == 0.0 {
            return Err(Error::ChartDomain("separations must be positive".into()));
        }
        let y1 = levi_civita_planar_inv(c2);
        let y2 = levi_civita_planar_inv(c1);
        let u1 = p1;
        let u2 = [p1[0] + p2[0], p1[1] + p2[1]];
        let v1 = momentum_to_regularized_planar(y1, u2);
        let v2 = momentum_to_regularized_planar(y2, u1);
        Ok(RegularizedState {
            q: vec![y1[0], y1[1], y2[0], y2[1]],
            p: vec![v1[0], v1[1], v2[0], v2[1]],
            s: 0.0,
            t: state.time,
            energy: pps4bp_reduced_hamiltonian(self.m, q1, q2, p1, p2),
        })
    }

    /// Embed a collinear symmetric four-body chart state into this chart.
    pub fn embed_collinear(&self, reg: &RegularizedState) -> RegularizedState {
        RegularizedState {
            q: vec![reg.q[0], 0.0, reg.q[1], 0.0],
            p: vec![reg.p[0], 0.0, reg.p[1], 0.0],
            s: reg.s,
            t: reg.t,
            energy: reg.energy,
        }
    }
}

impl Chart<8> for Pps4CollinearChart {
    fn gamma<S: Scalar>(&self, x: &[S; 8]) -> S {
        let m = self.m;
        let y1 = [x[0], x[1]];
        let y2 = [x[2], x[3]];
        let v1 = [x[4], x[5]];
        let v2 = [x[6], x[7]];
        let n1 = norm_sq(y1);
        let n2 = norm_sq(y2);
        let g = n1 * n2;
        let cross = csub(mul_conj(v1, y2), mul_conj(v2, y1));
        let kinetic =
            n1 * norm_sq(v2) * (1.0 / 16.0) + norm_sq(cross) * (1.0 / (16.0 * m));
        let sq1 = csq(y1);
        let outer = cadd(csq(y2), [sq1[0] * 2.0, sq1[1] * 2.0]); // q1 + q2
        let central = cadd(csq(y2), sq1); // q1
        let potential = n1 * (2.0 * m)
            + g * (2.0 * m) / cnorm(outer)
            + g * 0.5 / cnorm(central)
            + n2 * (0.5 * m * m);
        kinetic - potential - g * self.energy
    }

    fn time_scale<S: Scalar>(&self, x: &[S; 8]) -> S {
        norm_sq([x[0], x[1]]) * norm_sq([x[2], x[3]])
    }
}

/// Energy of a pairwise-symmetric planar 4-body state.
pub fn pps4bp_energy(m: f64, state: &PhaseState) -> Result<f64> {
    check_pairwise_symmetry(state)?;
    let (q1, q2, p1, p2) = read_reduced(state, m);
    Ok(pps4bp_reduced_hamiltonian(m, q1, q2, p1, p2))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, refine_event, IntegratorConfig};
    use crate::nbody::{integrals, nbody_rhs, pack_state, MassVector};
    use crate::problems::{cols4bp_field, pps4bp_collinear_field, pps4bp_field};
    use crate::regularize::gamma_value;
    use approx::assert_relative_eq;

    fn pairwise_state(q1: [f64; 2], q2: [f64; 2], v1: [f64; 2], v2: [f64; 2]) -> PhaseState {
        PhaseState::new(
            2,
            vec![q1[0], q1[1], q2[0], q2[1], -q1[0], -q1[1], -q2[0], -q2[1]],
            vec![v1[0], v1[1], v2[0], v2[1], -v1[0], -v1[1], -v2[0], -v2[1]],
            0.0,
        )
        .unwrap()
    }

    fn generic_state() -> PhaseState {
        pairwise_state([1.5, 0.3], [0.2, -0.6], [0.1, 0.2], [-0.2, 0.4])
    }

    #[test]
    fn round_trips_both_charts() {
        let state = generic_state();
        for m in [0.8, 1.0] {
            let sbc = Pps4SbcChart::new(m, 0.0).unwrap();
            let reg = sbc.from_physical(&state).unwrap();
            let back = sbc.to_physical(&reg).unwrap();
            for j in 0..8 {
                assert_relative_eq!(back.positions[j], state.positions[j], epsilon = 1e-12);
                assert_relative_eq!(back.velocities[j], state.velocities[j], epsilon = 1e-12);
            }

            let col = Pps4CollinearChart::new(m, 0.0).unwrap();
            let reg = col.from_physical(&state).unwrap();
            let back = col.to_physical(&reg).unwrap();
            for j in 0..8 {
                assert_relative_eq!(back.positions[j], state.positions[j], epsilon = 1e-12);
                assert_relative_eq!(back.velocities[j], state.velocities[j], epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn gamma_is_the_scaled_energy_defect_both_charts() {
        let m = 0.8;
        let e = -2.0;
        let masses = MassVector::new(vec![1.0, m, 1.0, m]).unwrap();
        let state = generic_state();
        let h = integrals(&state, &masses).unwrap().total_energy;

        let sbc = Pps4SbcChart::new(m, e).unwrap();
        let reg = sbc.from_physical(&state).unwrap();
        let x = reg.to_vec();
        let g = crate::regularize::time_scale_value::<_, 8>(&sbc, &x);
        assert_relative_eq!(gamma_value::<_, 8>(&sbc, &x), g * (h - e), epsilon = 1e-10);

        let col = Pps4CollinearChart::new(m, e).unwrap();
        let reg = col.from_physical(&state).unwrap();
        let x = reg.to_vec();
        let g = crate::regularize::time_scale_value::<_, 8>(&col, &x);
        assert_relative_eq!(gamma_value::<_, 8>(&col, &x), g * (h - e), epsilon = 1e-10);
    }

    #[test]
    fn regularized_flow_matches_physical_integration() {
        let m = 0.8;
        let masses = MassVector::new(vec![1.0, m, 1.0, m]).unwrap();
        let state = generic_state();
        let e = pps4bp_energy(m, &state).unwrap();
        assert!(e < 0.0);

        let rhs = |_s: f64, x: &[f64], dx: &mut [f64]| nbody_rhs(&masses, 2, x, dx);
        let cfg = IntegratorConfig::with_tol(1e-12);
        let phys = integrate(&rhs, &pack_state(&state), (0.0, 1.0), &cfg).unwrap();
        phys.ensure_completed().unwrap();
        let phys_end = phys.final_state();

        for problem in [pps4bp_field(m, e).unwrap(), pps4bp_collinear_field(m, e).unwrap()] {
            let reg = problem.from_physical(&state).unwrap();
            let mut x0 = reg.to_vec();
            x0.push(0.0);
            let traj = problem
                .integrate_guarded(&x0, (0.0, 50.0), &cfg, &[], true)
                .unwrap();
            let (_, at_t1) = refine_event(&traj, &|x: &[f64]| x[8] - 1.0).unwrap();
            let back = problem
                .to_physical(&crate::regularize::RegularizedState::from_vec(
                    &at_t1[..8],
                    0.0,
                    1.0,
                    e,
                ))
                .unwrap();
            for j in 0..8 {
                assert!(
                    (back.positions[j] - phys_end[j]).abs() < 1e-8,
                    "position {j}: {} vs {}",
                    back.positions[j],
                    phys_end[j]
                );
                assert!((back.velocities[j] - phys_end[8 + j]).abs() < 1e-8, "velocity {j}");
            }
        }
    }

    #[test]
    fn zero_angular_momentum_is_preserved() {
        let m = 1.0;
        // Radial velocities make A = 0 exactly.
        let state = pairwise_state([1.2, 0.0], [0.0, 0.7], [0.25, 0.0], [0.0, 0.35]);
        let e = pps4bp_energy(m, &state).unwrap();
        let problem = pps4bp_field(m, e).unwrap();
        let reg = problem.from_physical(&state).unwrap();
        let x0 = reg.to_vec();
        assert!(problem.angular_momentum(&x0).unwrap().abs() < 1e-14);
        let cfg = IntegratorConfig::with_tol(1e-11);
        let rhs = problem.rhs();
        let traj = integrate(&rhs, &x0, (0.0, 1.5), &cfg).unwrap();
        for (_, x) in &traj.samples {
            assert!(problem.angular_momentum(x).unwrap().abs() < 1e-9);
        }
    }

    #[test]
    fn collinear_subspace_reproduces_the_collinear_chart() {
        let m = 0.9;
        let (q1, q2, vv1, vv2) = (2.1, 0.7, 0.15, -0.3);
        let col_state =
            PhaseState::new(1, vec![q1, q2, -q2, -q1], vec![vv1, vv2, -vv2, -vv1], 0.0).unwrap();
        let e = crate::problems::cols4bp::cols4bp_energy(m, &col_state).unwrap();

        let col4 = cols4bp_field(m, e).unwrap();
        let reg4 = col4.from_physical(&col_state).unwrap();
        let planar = pps4bp_collinear_field(m, e).unwrap();
        let chart8 = match &planar {
            crate::problems::Problem::Pps4Collinear(c) => c.clone(),
            _ => unreachable!(),
        };
        let reg8 = chart8.embed_collinear(&reg4);

        let cfg = IntegratorConfig::with_tol(1e-12);
        let t4 = col4.integrate_guarded(&reg4.to_vec(), (0.0, 4.0), &cfg, &[], false).unwrap();
        let t8 = planar.integrate_guarded(&reg8.to_vec(), (0.0, 4.0), &cfg, &[], false).unwrap();
        for s in [0.5, 1.5, 2.5, 3.5] {
            let a = t4.eval(s).unwrap();
            let b = t8.eval(s).unwrap();
            // x components track the collinear chart; y components stay zero.
            assert!((a[0] - b[0]).abs() < 1e-9);
            assert!((a[1] - b[2]).abs() < 1e-9);
            assert!((a[2] - b[4]).abs() < 1e-9);
            assert!((a[3] - b[6]).abs() < 1e-9);
            for idx in [1, 3, 5, 7] {
                assert_eq!(b[idx], 0.0);
            }
        }
    }

    #[test]
    fn sbc_transit_is_regular_with_pinned_momentum() {
        let m = 1.0;
        // Collinear two-pair infall embedded in the SBC chart: hits the
        // q1 = q2 channel exactly on the real subspace.
        let (q1, q2, v1, v2) = (1.1, 0.9, -0.6, 0.0);
        let state = pairwise_state([q1, 0.0], [q2, 0.0], [v1, 0.0], [v2, 0.0]);
        let e = pps4bp_energy(m, &state).unwrap();
        let sbc = Pps4SbcChart::new(m, e).unwrap();
        let problem = pps4bp_field(m, e).unwrap();
        let x0 = sbc.from_physical(&state).unwrap().to_vec();
        let cfg = IntegratorConfig::with_tol(1e-12);
        let traj = problem.integrate_guarded(&x0, (0.0, 5.0), &cfg, &[], false).unwrap();
        // The channel coordinate Z1 stays real and crosses zero.
        let (_, at_c) = refine_event(&traj, &|x: &[f64]| x[0]).unwrap();
        assert!(at_c[1].abs() < 1e-12, "collinear flow stays real");
        let w1 = (at_c[4] * at_c[4] + at_c[5] * at_c[5]).sqrt();
        assert_relative_eq!(w1, sbc.transit_momentum(), epsilon = 1e-8);
        let mut f = [0.0; 8];
        problem.field(&at_c, &mut f);
        assert!(f.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn unregularized_coincidence_trips_the_guard() {
        let m = 1.0;
        // Central infall of the mass-m pair: q2 -> 0 is not regularized in
        // the SBC chart.
        let state = pairwise_state([2.0, 0.0], [0.12, 0.0], [0.0, 0.0], [-0.4, 0.0]);
        let e = pps4bp_energy(m, &state).unwrap();
        let problem = pps4bp_field(m, e).unwrap();
        let x0 = problem.from_physical(&state).unwrap().to_vec();
        let cfg = IntegratorConfig { max_steps: 400_000, ..IntegratorConfig::with_tol(1e-10) };
        let res = problem.integrate_guarded(&x0, (0.0, 20.0), &cfg, &[], false);
        assert!(
            matches!(res, Err(Error::TripleCollisionChart { .. })),
            "got {res:?}"
        );
    }
}
