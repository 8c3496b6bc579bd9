//! Physical-coordinate N-body dynamics: accelerations, first integrals,
//! pairwise distances, and finite-data singularity diagnostics.
//!
//! Units are normalized so the gravitational constant is 1. The spatial
//! dimension is a runtime parameter: 1 for collinear problems, 2 for planar
//! ones, 3 is supported but unused by the bundled problem charts.

use crate::error::{Error, Result};

/// Strictly positive masses of the N bodies.
#[derive(Debug, Clone, PartialEq)]
pub struct MassVector(Vec<f64>);

impl MassVector {
    pub fn new(masses: Vec<f64>) -> Result<Self> {
        if masses.len() < 2 {
            return Err(Error::Invalid(format!(
                "need at least 2 bodies, got {}",
                masses.len()
            )));
        }
        if let Some(m) = masses.iter().find(|m| !(**m > 0.0)) {
            return Err(Error::Invalid(format!("masses must be positive, got {m}")));
        }
        Ok(MassVector(masses))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn get(&self, j: usize) -> f64 {
        self.0[j]
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Positions and velocities of all bodies at one instant, stored flat with
/// stride `dim`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhaseState {
    pub dim: usize,
    pub positions: Vec<f64>,
    pub velocities: Vec<f64>,
    pub time: f64,
}

impl PhaseState {
    pub fn new(dim: usize, positions: Vec<f64>, velocities: Vec<f64>, time: f64) -> Result<Self> {
        if !(1..=3).contains(&dim) {
            return Err(Error::Invalid(format!("dimension must be 1, 2, or 3, got {dim}")));
        }
        if positions.len() != velocities.len() || positions.len() % dim != 0 {
            return Err(Error::Invalid(
                "positions and velocities must hold N vectors of length dim".into(),
            ));
        }
        Ok(PhaseState { dim, positions, velocities, time })
    }

    pub fn bodies(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn position(&self, j: usize) -> &[f64] {
        &self.positions[j * self.dim..(j + 1) * self.dim]
    }

    pub fn velocity(&self, j: usize) -> &[f64] {
        &self.velocities[j * self.dim..(j + 1) * self.dim]
    }

    pub fn distance(&self, j: usize, k: usize) -> f64 {
        let (a, b) = (self.position(j), self.position(k));
        a.iter()
            .zip(b)
            .map(|(x, y)| (x - y) * (x - y))
            .sum::<f64>()
            .sqrt()
    }
}

/// The classical integrals of motion evaluated on one state.
///
/// `angular_momentum` holds one scalar for dim 1 and 2 (identically zero in
/// dim 1) and the full 3-vector for dim 3.
#[derive(Debug, Clone, PartialEq)]
pub struct IntegralSet {
    pub center_of_mass: Vec<f64>,
    pub linear_momentum: Vec<f64>,
    pub angular_momentum: Vec<f64>,
    pub self_potential: f64,
    pub kinetic: f64,
    pub total_energy: f64,
    pub half_moment_of_inertia: f64,
}

/// a_j = sum_{k != j} m_k (q_k - q_j) / r_jk^3, flattened with stride `dim`.
pub fn accelerations(state: &PhaseState, masses: &MassVector) -> Result<Vec<f64>> {
    let n = state.bodies();
    debug_assert_eq!(n, masses.len());
    let dim = state.dim;
    let mut acc = vec![0.0; n * dim];
    for j in 0..n {
        for k in (j + 1)..n {
            let r = state.distance(j, k);
            if r == 0.0 {
                return Err(Error::CollisionConfiguration(j, k));
            }
            let inv_r3 = 1.0 / (r * r * r);
            for c in 0..dim {
                let diff = state.positions[k * dim + c] - state.positions[j * dim + c];
                acc[j * dim + c] += masses.get(k) * diff * inv_r3;
                acc[k * dim + c] -= masses.get(j) * diff * inv_r3;
            }
        }
    }
    Ok(acc)
}

/// Evaluate all first integrals on one state.
pub fn integrals(state: &PhaseState, masses: &MassVector) -> Result<IntegralSet> {
    let n = state.bodies();
    let dim = state.dim;
    let total_mass = masses.total();

    let mut center = vec![0.0; dim];
    let mut momentum = vec![0.0; dim];
    let mut kinetic = 0.0;
    let mut half_i = 0.0;
    for j in 0..n {
        let m = masses.get(j);
        let q = state.position(j);
        let v = state.velocity(j);
        for c in 0..dim {
            center[c] += m * q[c];
            momentum[c] += m * v[c];
        }
        kinetic += 0.5 * m * v.iter().map(|x| x * x).sum::<f64>();
        half_i += 0.5 * m * q.iter().map(|x| x * x).sum::<f64>();
    }
    for c in 0..dim {
        center[c] /= total_mass;
        momentum[c] /= total_mass;
    }

    let angular = match dim {
        1 => vec![0.0],
        2 => {
            let mut a = 0.0;
            for j in 0..n {
                let (q, v) = (state.position(j), state.velocity(j));
                a += masses.get(j) * (q[0] * v[1] - q[1] * v[0]);
            }
            vec![a]
        }
        _ => {
            let mut a = [0.0; 3];
            for j in 0..n {
                let (q, v) = (state.position(j), state.velocity(j));
                a[0] += masses.get(j) * (q[1] * v[2] - q[2] * v[1]);
                a[1] += masses.get(j) * (q[2] * v[0] - q[0] * v[2]);
                a[2] += masses.get(j) * (q[0] * v[1] - q[1] * v[0]);
            }
            a.to_vec()
        }
    };

    let mut potential = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let r = state.distance(j, k);
            if r == 0.0 {
                return Err(Error::CollisionConfiguration(j, k));
            }
            potential += masses.get(j) * masses.get(k) / r;
        }
    }

    Ok(IntegralSet {
        center_of_mass: center,
        linear_momentum: momentum,
        angular_momentum: angular,
        self_potential: potential,
        kinetic,
        total_energy: kinetic - potential,
        half_moment_of_inertia: half_i,
    })
}

/// Minimum and maximum over all pairwise distances.
pub fn extreme_distances(state: &PhaseState) -> (f64, f64) {
    let n = state.bodies();
    let mut r_min = f64::INFINITY;
    let mut r_max: f64 = 0.0;
    for j in 0..n {
        for k in (j + 1)..n {
            let r = state.distance(j, k);
            r_min = r_min.min(r);
            r_max = r_max.max(r);
        }
    }
    (r_min, r_max)
}

/// Verdict of the windowed trend diagnostics. A verdict is a finite-data
/// heuristic over a truncated trajectory, not a proof of a singularity.
#[derive(Debug, Clone, PartialEq)]
pub enum SingularityVerdict {
    NoSingularityIndicated,
    /// r_min trends to zero while the half moment of inertia stays bounded.
    CollisionApproach {
        r_min: f64,
        half_moment_of_inertia: f64,
    },
    /// r_max trends to zero: every body is falling toward one point.
    TotalCollapseApproach {
        r_max: f64,
    },
}

#[derive(Debug, Clone)]
pub struct DiagnosticsConfig {
    /// Number of trailing samples that must trend monotonically.
    pub window: usize,
    /// Distance threshold, in the problem's length scale.
    pub r_threshold: f64,
    /// Growth factor of I over the trajectory beyond which the moment of
    /// inertia no longer counts as bounded.
    pub i_bound_factor: f64,
    pub min_samples: usize,
}

impl Default for DiagnosticsConfig {
    fn default() -> Self {
        DiagnosticsConfig {
            window: 50,
            r_threshold: 1e-3,
            i_bound_factor: 100.0,
            min_samples: 50,
        }
    }
}

/// Classify the tail of a time-ordered trajectory.
pub fn singularity_diagnostics(
    trajectory: &[(PhaseState, IntegralSet)],
    config: &DiagnosticsConfig,
) -> Result<SingularityVerdict> {
    if trajectory.len() < config.min_samples.max(2) {
        return Err(Error::InsufficientData {
            needed: config.min_samples.max(2),
            got: trajectory.len(),
        });
    }

    let window = config.window.min(trajectory.len());
    let tail = &trajectory[trajectory.len() - window..];
    let dists: Vec<(f64, f64)> = tail.iter().map(|(s, _)| extreme_distances(s)).collect();

    let decreasing = |sel: &dyn Fn(&(f64, f64)) -> f64| {
        dists.windows(2).all(|w| sel(&w[1]) < sel(&w[0]))
    };
    let r_min_last = dists.last().unwrap().0;
    let r_max_last = dists.last().unwrap().1;

    // With two bodies every collision is formally a total collapse; report
    // the more specific binary verdict instead.
    let many_bodies = trajectory[0].0.bodies() >= 3;
    if many_bodies && decreasing(&|d| d.1) && r_max_last < config.r_threshold {
        return Ok(SingularityVerdict::TotalCollapseApproach { r_max: r_max_last });
    }

    let i0 = trajectory[0].1.half_moment_of_inertia.max(f64::MIN_POSITIVE);
    let i_last = trajectory.last().unwrap().1.half_moment_of_inertia;
    let i_bounded = i_last <= config.i_bound_factor * i0;
    if decreasing(&|d| d.0) && r_min_last < config.r_threshold && i_bounded {
        return Ok(SingularityVerdict::CollisionApproach {
            r_min: r_min_last,
            half_moment_of_inertia: i_last,
        });
    }

    Ok(SingularityVerdict::NoSingularityIndicated)
}

/// First-order ODE right-hand side for the physical equations of motion on
/// the flattened state `[q, v]`. Any collision on the path makes the force
/// evaluation blow up; no regularization is applied here by design.
pub fn nbody_rhs(masses: &MassVector, dim: usize, x: &[f64], dx: &mut [f64]) {
    let n = masses.len();
    let nd = n * dim;
    dx[..nd].copy_from_slice(&x[nd..]);
    for a in dx[nd..].iter_mut() {
        *a = 0.0;
    }
    for j in 0..n {
        for k in (j + 1)..n {
            let mut r2 = 0.0;
            for c in 0..dim {
                let d = x[k * dim + c] - x[j * dim + c];
                r2 += d * d;
            }
            let inv_r3 = 1.0 / (r2 * r2.sqrt());
            for c in 0..dim {
                let d = x[k * dim + c] - x[j * dim + c];
                dx[nd + j * dim + c] += masses.get(k) * d * inv_r3;
                dx[nd + k * dim + c] -= masses.get(j) * d * inv_r3;
            }
        }
    }
}

/// Pack a `PhaseState` into the flat `[q, v]` layout used by `nbody_rhs`.
pub fn pack_state(state: &PhaseState) -> Vec<f64> {
    let mut x = state.positions.clone();
    x.extend_from_slice(&state.velocities);
    x
}

/// Inverse of [`pack_state`].
pub fn unpack_state(dim: usize, x: &[f64], time: f64) -> PhaseState {
    let nd = x.len() / 2;
    PhaseState {
        dim,
        positions: x[..nd].to_vec(),
        velocities: x[nd..].to_vec(),
        time,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn state1(q: &[f64], v: &[f64]) -> PhaseState {
        PhaseState::new(1, q.to_vec(), v.to_vec(), 0.0).unwrap()
    }

    #[test]
    fn rejects_bad_masses() {
        assert!(MassVector::new(vec![1.0]).is_err());
        assert!(MassVector::new(vec![1.0, 0.0]).is_err());
        assert!(MassVector::new(vec![1.0, -2.0]).is_err());
        assert!(MassVector::new(vec![1.0, 2.0]).is_ok());
    }

    #[test]
    fn two_body_acceleration_by_direct_substitution() {
        // m = (1, 1), q = (-1, 1): separation 2, |a| = 1 * 2 / 2^3 = 1/4.
        let m = MassVector::new(vec![1.0, 1.0]).unwrap();
        let s = state1(&[-1.0, 1.0], &[0.0, 0.0]);
        let a = accelerations(&s, &m).unwrap();
        assert_relative_eq!(a[0], 0.25, max_relative = 1e-15);
        assert_relative_eq!(a[1], -0.25, max_relative = 1e-15);
    }

    #[test]
    fn symmetric_middle_body_feels_no_force() {
        let m = MassVector::new(vec![1.0, 1.0, 1.0]).unwrap();
        let s = state1(&[-0.7, 0.0, 0.7], &[0.0; 3]);
        let a = accelerations(&s, &m).unwrap();
        assert_eq!(a[1], 0.0);
    }

    #[test]
    fn total_collapse_seed_accelerations() {
        let third = 1.0 / 3.0;
        let m = MassVector::new(vec![third; 3]).unwrap();
        let s = state1(&[-1.0, 0.0, 1.0], &[0.0; 3]);
        let a = accelerations(&s, &m).unwrap();
        assert!(a[0] > 0.0);
        assert_relative_eq!(a[2], -a[0], max_relative = 1e-15);
        assert_eq!(a[1], 0.0);
    }

    #[test]
    fn collision_configuration_is_an_error() {
        let m = MassVector::new(vec![1.0, 1.0]).unwrap();
        let s = state1(&[0.5, 0.5], &[0.0, 0.0]);
        assert!(matches!(
            accelerations(&s, &m),
            Err(Error::CollisionConfiguration(0, 1))
        ));
        assert!(integrals(&s, &m).is_err());
    }

    #[test]
    fn integrals_by_direct_substitution() {
        let m = MassVector::new(vec![1.0, 1.0]).unwrap();
        let s = state1(&[-1.0, 1.0], &[0.0, 0.0]);
        let ints = integrals(&s, &m).unwrap();
        assert_relative_eq!(ints.self_potential, 0.5, max_relative = 1e-15);
        assert_eq!(ints.kinetic, 0.0);
        assert_relative_eq!(ints.total_energy, -0.5, max_relative = 1e-15);
        assert_eq!(ints.center_of_mass[0], 0.0);
        assert_eq!(ints.linear_momentum[0], 0.0);
        assert_relative_eq!(ints.half_moment_of_inertia, 1.0, max_relative = 1e-15);
        assert_eq!(ints.angular_momentum, vec![0.0]);
    }

    #[test]
    fn extreme_distances_cases() {
        let s = state1(&[-1.0, 0.0, 1.0], &[0.0; 3]);
        assert_eq!(extreme_distances(&s), (1.0, 2.0));

        let coincident = state1(&[0.3, 0.3, 0.3], &[0.0; 3]);
        assert_eq!(extreme_distances(&coincident), (0.0, 0.0));

        let pair = state1(&[0.0, 2.5], &[0.0, 0.0]);
        let (lo, hi) = extreme_distances(&pair);
        assert_eq!(lo, hi);
    }

    #[test]
    fn diagnostics_insufficient_data() {
        let cfg = DiagnosticsConfig::default();
        assert!(matches!(
            singularity_diagnostics(&[], &cfg),
            Err(Error::InsufficientData { .. })
        ));
    }

    fn sample_trajectory(
        masses: &MassVector,
        dim: usize,
        state: &PhaseState,
        t_end: f64,
        n: usize,
    ) -> Vec<(PhaseState, IntegralSet)> {
        use crate::integrate::{integrate, IntegratorConfig};
        let rhs = |_s: f64, x: &[f64], dx: &mut [f64]| nbody_rhs(masses, dim, x, dx);
        let cfg = IntegratorConfig { max_steps: 400_000, ..IntegratorConfig::with_tol(1e-10) };
        let traj = integrate(&rhs, &pack_state(state), (0.0, t_end), &cfg).unwrap();
        let mut out = Vec::new();
        for i in 0..n {
            let t_last = traj.end().0;
            let s = t_last * i as f64 / (n - 1) as f64;
            let Ok(x) = traj.eval(s) else { continue };
            let ps = unpack_state(dim, &x, s);
            let ints = integrals(&ps, masses).unwrap();
            out.push((ps, ints));
        }
        out
    }

    #[test]
    fn circular_orbit_indicates_no_singularity_and_conserves_h() {
        // Closed-form circular Kepler orbit: m = (1, 1) at separation 1 needs
        // relative speed sqrt(2).
        let m = MassVector::new(vec![1.0, 1.0]).unwrap();
        let v = 2.0_f64.sqrt() / 2.0;
        let state = PhaseState::new(
            2,
            vec![-0.5, 0.0, 0.5, 0.0],
            vec![0.0, -v, 0.0, v],
            0.0,
        )
        .unwrap();
        let h0 = integrals(&state, &m).unwrap().total_energy;
        assert!(h0 < 0.0);
        let traj = sample_trajectory(&m, 2, &state, 10.0, 200);
        for (_, ints) in &traj {
            assert!((ints.total_energy - h0).abs() < 1e-8);
        }
        let verdict = singularity_diagnostics(&traj, &DiagnosticsConfig::default()).unwrap();
        assert_eq!(verdict, SingularityVerdict::NoSingularityIndicated);
    }

    #[test]
    fn total_collapse_seed_is_flagged() {
        let third = 1.0 / 3.0;
        let m = MassVector::new(vec![third; 3]).unwrap();
        let state = state1(&[-1.0, 0.0, 1.0], &[0.0; 3]);
        // The raw integration dies near the collapse; diagnose its tail.
        let traj = sample_trajectory(&m, 1, &state, 20.0, 400);
        let cfg = DiagnosticsConfig::default();
        let verdict = singularity_diagnostics(&traj, &cfg).unwrap();
        assert!(matches!(verdict, SingularityVerdict::TotalCollapseApproach { .. }));
    }

    #[test]
    fn two_body_infall_is_a_collision_approach_with_bounded_i() {
        let m = MassVector::new(vec![1.0, 1.0]).unwrap();
        let state = state1(&[-0.5, 0.5], &[0.0, 0.0]);
        let traj = sample_trajectory(&m, 1, &state, 10.0, 400);
        let verdict = singularity_diagnostics(&traj, &DiagnosticsConfig::default()).unwrap();
        match verdict {
            SingularityVerdict::CollisionApproach { half_moment_of_inertia, .. } => {
                assert!(half_moment_of_inertia <= 0.5);
            }
            other => panic!("expected collision approach, got {other:?}"),
        }
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        fn masses_and_state(n: usize, dim: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
            (
                proptest::collection::vec(0.1f64..5.0, n),
                proptest::collection::vec(-3.0f64..3.0, n * dim),
                proptest::collection::vec(-2.0f64..2.0, n * dim),
            )
        }

        fn min_separation(state: &PhaseState) -> f64 {
            extreme_distances(state).0
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(64))]

            #[test]
            fn newtons_third_law((m, q, v) in masses_and_state(4, 2)) {
                let state = PhaseState::new(2, q, v, 0.0).unwrap();
                prop_assume!(min_separation(&state) > 1e-3);
                let masses = MassVector::new(m).unwrap();
                let acc = accelerations(&state, &masses).unwrap();
                for c in 0..2 {
                    let total: f64 = (0..4).map(|j| masses.get(j) * acc[j * 2 + c]).sum();
                    prop_assert!(total.abs() < 1e-10);
                }
            }

            #[test]
            fn translation_invariance((m, q, v) in masses_and_state(3, 2), shift in -5.0f64..5.0) {
                let state = PhaseState::new(2, q.clone(), v.clone(), 0.0).unwrap();
                prop_assume!(min_separation(&state) > 1e-3);
                let shifted_q: Vec<f64> = q.iter().map(|x| x + shift).collect();
                let shifted = PhaseState::new(2, shifted_q, v, 0.0).unwrap();
                let masses = MassVector::new(m).unwrap();
                let a = accelerations(&state, &masses).unwrap();
                let b = accelerations(&shifted, &masses).unwrap();
                for (x, y) in a.iter().zip(&b) {
                    prop_assert!((x - y).abs() <= 1e-9 * (1.0 + x.abs()));
                }
            }

            #[test]
            fn angular_momentum_vanishes_in_dim_one((m, q, v) in masses_and_state(3, 1)) {
                let state = PhaseState::new(1, q, v, 0.0).unwrap();
                prop_assume!(min_separation(&state) > 1e-3);
                let masses = MassVector::new(m).unwrap();
                let ints = integrals(&state, &masses).unwrap();
                prop_assert_eq!(ints.angular_momentum[0], 0.0);
            }

            #[test]
            fn reflection_transformation_rules((m, q, v) in masses_and_state(3, 2)) {
                let state = PhaseState::new(2, q.clone(), v.clone(), 0.0).unwrap();
                prop_assume!(min_separation(&state) > 1e-3);
                let masses = MassVector::new(m).unwrap();
                let ints = integrals(&state, &masses).unwrap();

                // Point reflection through the origin: U, K, H, I unchanged;
                // C and L negated; the planar A scalar unchanged.
                let refl = PhaseState::new(
                    2,
                    q.iter().map(|x| -x).collect(),
                    v.iter().map(|x| -x).collect(),
                    0.0,
                ).unwrap();
                let ri = integrals(&refl, &masses).unwrap();
                prop_assert!((ri.self_potential - ints.self_potential).abs() < 1e-12);
                prop_assert!((ri.kinetic - ints.kinetic).abs() < 1e-12);
                prop_assert!((ri.total_energy - ints.total_energy).abs() < 1e-12);
                prop_assert!((ri.half_moment_of_inertia - ints.half_moment_of_inertia).abs() < 1e-12);
                prop_assert!((ri.center_of_mass[0] + ints.center_of_mass[0]).abs() < 1e-12);
                prop_assert!((ri.linear_momentum[1] + ints.linear_momentum[1]).abs() < 1e-12);
                prop_assert!((ri.angular_momentum[0] - ints.angular_momentum[0]).abs() < 1e-12);

                // Mirror reflection about the x axis flips the A scalar.
                let mirror_q: Vec<f64> = q.chunks(2).flat_map(|c| [c[0], -c[1]]).collect();
                let mirror_v: Vec<f64> = v.chunks(2).flat_map(|c| [c[0], -c[1]]).collect();
                let mir = PhaseState::new(2, mirror_q, mirror_v, 0.0).unwrap();
                let mi = integrals(&mir, &masses).unwrap();
                prop_assert!((mi.angular_momentum[0] + ints.angular_momentum[0]).abs() < 1e-12);
            }
        }
    }
}
