//! The collinear two-body problem in regularized coordinates.
//!
//! With separation x = w^2, reduced mass mu = m1 m2 / (m1 + m2), conjugate
//! momentum P = 2 w p, and time scale g = x, the extended Hamiltonian is
//! Gamma = P^2 / (8 mu) - m1 m2 - E w^2, i.e. a shifted harmonic
//! oscillator: w'' = (E / (2 mu)) w. For E < 0 the
//! flow is fully solvable, which makes this chart the oracle for everything
//! built on top of it.

use super::chart::Chart;
use crate::ad::Scalar;
use crate::error::{Error, Result};

/// Regularized collinear two-body chart, phase layout [w, P].
#[derive(Debug, Clone)]
pub struct Col2bpChart {
    pub m1: f64,
    pub m2: f64,
    pub energy: f64,
}

impl Col2bpChart {
    pub fn new(m1: f64, m2: f64, energy: f64) -> Result<Self> {
        if !(m1 > 0.0) || !(m2 > 0.0) {
            return Err(Error::Invalid("masses must be positive".into()));
        }
        Ok(Col2bpChart { m1, m2, energy })
    }

    pub fn reduced_mass(&self) -> f64 {
        self.m1 * self.m2 / (self.m1 + self.m2)
    }

    /// Regularized transit speed |dw/ds| at the collision, fixed by the
    /// energy relation independently of E.
    pub fn collision_speed(&self) -> f64 {
        ((self.m1 + self.m2) / 2.0).sqrt()
    }

    /// Momentum P from the regularized velocity dw/ds.
    pub fn momentum_from_w_dot(&self, w_dot: f64) -> f64 {
        4.0 * self.reduced_mass() * w_dot
    }

    pub fn w_dot_from_momentum(&self, p: f64) -> f64 {
        p / (4.0 * self.reduced_mass())
    }

    /// State at a collision, exiting with positive w.
    pub fn collision_state(&self) -> [f64; 2] {
        [0.0, self.momentum_from_w_dot(self.collision_speed())]
    }
}

impl Chart<2> for Col2bpChart {
    fn gamma<S: Scalar>(&self, x: &[S; 2]) -> S {
        let w = x[0];
        let p = x[1];
        p.sq() * (1.0 / (8.0 * self.reduced_mass())) - S::constant(self.m1 * self.m2)
            - w.sq() * self.energy
    }

    fn time_scale<S: Scalar>(&self, x: &[S; 2]) -> S {
        x[0].sq()
    }
}

/// Closed-form solution of the regularized collinear two-body problem at
/// negative energy: w(s) = w_max sin(omega s) taking w(0) = 0 at collision.
#[derive(Debug, Clone)]
pub struct Col2bpClosedForm {
    pub m1: f64,
    pub m2: f64,
    pub energy: f64,
    pub omega: f64,
    pub w_max: f64,
}

/// Solve the regularized collinear two-body problem in closed form.
pub fn col2bp_solve(m1: f64, m2: f64, energy: f64) -> Result<Col2bpClosedForm> {
    if !(m1 > 0.0) || !(m2 > 0.0) {
        return Err(Error::Invalid("masses must be positive".into()));
    }
    if energy >= 0.0 {
        return Err(Error::NonNegativeEnergy(energy));
    }
    let omega = (-(m1 + m2) * energy / (2.0 * m1 * m2)).sqrt();
    let w_max = (-m1 * m2 / energy).sqrt();
    Ok(Col2bpClosedForm { m1, m2, energy, omega, w_max })
}

impl Col2bpClosedForm {
    pub fn w(&self, s: f64) -> f64 {
        self.w_max * (self.omega * s).sin()
    }

    pub fn w_dot(&self, s: f64) -> f64 {
        self.w_max * self.omega * (self.omega * s).cos()
    }

    /// Physical separation x(s) = w(s)^2.
    pub fn x(&self, s: f64) -> f64 {
        self.w(s).powi(2)
    }

    /// Physical time t(s) = integral of w^2 ds from 0.
    pub fn t(&self, s: f64) -> f64 {
        self.w_max * self.w_max * (0.5 * s - (2.0 * self.omega * s).sin() / (4.0 * self.omega))
    }

    /// Regularized velocity magnitude at every collision.
    pub fn collision_velocity(&self) -> f64 {
        ((self.m1 + self.m2) / 2.0).sqrt()
    }

    /// Fictitious time between consecutive collisions (zeros of w).
    pub fn s_between_collisions(&self) -> f64 {
        std::f64::consts::PI / self.omega
    }

    /// Period of w(s) in fictitious time.
    pub fn s_period(&self) -> f64 {
        std::f64::consts::TAU / self.omega
    }

    /// Collision-to-collision physical period of x(t).
    pub fn physical_period(&self) -> f64 {
        self.t(self.s_between_collisions())
    }

    pub fn chart(&self) -> Col2bpChart {
        Col2bpChart { m1: self.m1, m2: self.m2, energy: self.energy }
    }

    /// Chart state [w, P] at fictitious time s.
    pub fn state(&self, s: f64) -> [f64; 2] {
        [self.w(s), self.chart().momentum_from_w_dot(self.w_dot(s))]
    }
}

/// Maximum residuals of the two bracket identities of the regularized flow,
/// evaluated over a sequence of chart states [w, P].
///
/// The first bracket is the regularized equation of motion,
/// 2 w w'' - 2 (w')^2 + (m1 + m2), with w'' taken from the field; the second
/// is the energy relation E w^2 - (2 m1 m2 / (m1 + m2)) (w')^2 + m1 m2.
/// Both vanish identically on the Gamma = 0 level.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BracketResiduals {
    pub equation_of_motion: f64,
    pub energy_relation: f64,
}

pub fn verify_bracket_identities(chart: &Col2bpChart, states: &[[f64; 2]]) -> BracketResiduals {
    let mu = chart.reduced_mass();
    let msum = chart.m1 + chart.m2;
    let mprod = chart.m1 * chart.m2;
    let e = chart.energy;
    let mut r_eom: f64 = 0.0;
    let mut r_energy: f64 = 0.0;
    for st in states {
        let (w, p) = (st[0], st[1]);
        let w_dot = chart.w_dot_from_momentum(p);
        // w'' = E w / (2 mu) along the regularized field.
        let eom = e * w * w / mu - p * p / (8.0 * mu * mu) + msum;
        let energy = e * w * w - 2.0 * mu * w_dot * w_dot + mprod;
        r_eom = r_eom.max(eom.abs());
        r_energy = r_energy.max(energy.abs());
    }
    BracketResiduals { equation_of_motion: r_eom, energy_relation: r_energy }
}

/// Collinear two-body state on the Gamma = 0 level exiting a collision, with
/// the time quadrature appended: the canonical simulation start [w, P, t].
pub fn col2bp_collision_start(chart: &Col2bpChart) -> Vec<f64> {
    let st = chart.collision_state();
    vec![st[0], st[1], 0.0]
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, refine_event, IntegratorConfig};
    use crate::regularize::{rhs_closure, rhs_with_time_closure};
    use approx::assert_relative_eq;

    #[test]
    fn closed_form_equal_masses_unit_energy() {
        let cf = col2bp_solve(1.0, 1.0, -1.0).unwrap();
        assert_relative_eq!(cf.omega, 1.0, max_relative = 1e-15);
        assert_relative_eq!(cf.w_max, 1.0, max_relative = 1e-15);
        assert_relative_eq!(cf.collision_velocity(), 1.0, max_relative = 1e-15);
        assert_relative_eq!(cf.s_period(), std::f64::consts::TAU, max_relative = 1e-15);

        // Kepler oracle: T = 2 pi sqrt(a^3 / (m1 + m2)), a = m1 m2 / (-2 E).
        let a = 1.0 / 2.0;
        let t_kepler = std::f64::consts::TAU * (a * a * a / 2.0).sqrt();
        assert_relative_eq!(cf.physical_period(), t_kepler, max_relative = 1e-12);
        assert_relative_eq!(cf.physical_period(), std::f64::consts::FRAC_PI_2, max_relative = 1e-12);
    }

    #[test]
    fn rejects_nonnegative_energy() {
        assert!(matches!(col2bp_solve(1.0, 1.0, 0.0), Err(Error::NonNegativeEnergy(_))));
        assert!(matches!(col2bp_solve(1.0, 1.0, 2.0), Err(Error::NonNegativeEnergy(_))));
    }

    #[test]
    fn collision_velocity_for_arbitrary_masses() {
        for (m1, m2, e) in [(1.0, 2.0, -0.5), (0.3, 5.0, -2.0), (4.0, 4.0, -1.0)] {
            let cf = col2bp_solve(m1, m2, e).unwrap();
            let v = cf.w_dot(0.0);
            assert_relative_eq!(v * v, (m1 + m2) / 2.0, max_relative = 1e-12);
        }
    }

    #[test]
    fn collision_doubling_w_has_two_zeros_per_period() {
        let cf = col2bp_solve(1.0, 1.0, -1.0).unwrap();
        let period = cf.s_period();
        let mut zeros = 0;
        let n = 4000;
        let mut prev = cf.w(1e-9);
        for i in 1..=n {
            let s = 1e-9 + period * i as f64 / n as f64;
            let cur = cf.w(s);
            if prev * cur < 0.0 {
                zeros += 1;
            }
            prev = cur;
        }
        assert_eq!(zeros, 2);
        // x = w^2 vanishes at both, i.e. once per physical period of x.
        assert!(cf.x(cf.s_between_collisions()) < 1e-25);
    }

    #[test]
    fn closed_form_brackets_vanish_to_roundoff() {
        let cf = col2bp_solve(1.0, 1.0, -1.0).unwrap();
        let chart = cf.chart();
        let states: Vec<[f64; 2]> = (0..200).map(|i| cf.state(0.05 * i as f64)).collect();
        let res = verify_bracket_identities(&chart, &states);
        assert!(res.equation_of_motion < 1e-13);
        assert!(res.energy_relation < 1e-13);
    }

    #[test]
    fn constructed_violation_is_reported_exactly() {
        let chart = Col2bpChart::new(1.0, 1.0, -1.0).unwrap();
        let delta = 3e-4;
        // At w = 0 the energy relation reads m1 m2 - 2 mu (w')^2; pick w' so
        // the residual is exactly delta.
        let w_dot = ((chart.m1 * chart.m2 + delta) / (2.0 * chart.reduced_mass())).sqrt();
        let state = [0.0, chart.momentum_from_w_dot(w_dot)];
        let res = verify_bracket_identities(&chart, &[state]);
        assert_relative_eq!(res.energy_relation, delta, max_relative = 1e-9);
    }

    #[test]
    fn integrated_flow_matches_closed_form_through_ten_collisions() {
        let cf = col2bp_solve(1.0, 1.0, -1.0).unwrap();
        let chart = cf.chart();
        let rhs = rhs_with_time_closure::<_, 2>(&chart);
        let cfg = IntegratorConfig::with_tol(1e-12);
        let s_end = 10.0 * cf.s_between_collisions();
        let x0 = col2bp_collision_start(&chart);
        let traj = integrate(&rhs, &x0, (0.0, s_end), &cfg).unwrap();
        traj.ensure_completed().unwrap();
        for i in 0..=100 {
            let s = s_end * i as f64 / 100.0;
            let x = traj.eval(s).unwrap();
            assert!((x[0] - cf.w(s)).abs() < 1e-8, "w mismatch at s = {s}");
            assert!(
                (chart.w_dot_from_momentum(x[1]) - cf.w_dot(s)).abs() < 1e-8,
                "w' mismatch at s = {s}"
            );
            assert!((x[2] - cf.t(s)).abs() < 1e-8, "t mismatch at s = {s}");
        }
    }

    #[test]
    fn integrated_collision_transit_has_pinned_speed() {
        let cf = col2bp_solve(1.0, 1.0, -1.0).unwrap();
        let chart = cf.chart();
        let rhs = rhs_closure::<_, 2>(&chart);
        let cfg = IntegratorConfig::with_tol(1e-13);
        // Start a quarter period before a collision, at the turning point.
        let x0 = cf.state(-0.25 * cf.s_period());
        let traj = integrate(&rhs, &x0, (0.0, 2.0), &cfg).unwrap();
        let (_, at_zero) = refine_event(&traj, &|x: &[f64]| x[0]).unwrap();
        let w_dot = chart.w_dot_from_momentum(at_zero[1]).abs();
        assert!((w_dot - chart.collision_speed()).abs() <= 1e-8);
    }

    #[test]
    fn gamma_stays_pinned_along_the_flow() {
        let chart = Col2bpChart::new(1.0, 2.0, -0.7).unwrap();
        let rhs = rhs_closure::<_, 2>(&chart);
        let tol = 1e-10;
        let cfg = IntegratorConfig::with_tol(tol);
        let x0 = chart.collision_state();
        let traj = integrate(&rhs, &x0, (0.0, 20.0), &cfg).unwrap();
        for (_, x) in &traj.samples {
            let g = crate::regularize::gamma_value::<_, 2>(&chart, x);
            assert!(g.abs() <= 100.0 * tol, "Gamma drift {g:e}");
        }
    }

    #[test]
    fn generic_poincare_product_matches_cancelled_gamma_away_from_collision() {
        use crate::ad::Scalar;
        use crate::regularize::{ChartFn, PoincareChart};

        struct RawH {
            mu: f64,
            mprod: f64,
        }
        impl ChartFn<2> for RawH {
            fn eval<S: Scalar>(&self, x: &[S; 2]) -> S {
                // H = p^2 / (2 mu) - m1 m2 / x with p = P / (2w), x = w^2.
                let w2 = x[0].sq();
                let p_phys = x[1] / (x[0] * 2.0);
                p_phys.sq() * (1.0 / (2.0 * self.mu)) - S::constant(self.mprod) / w2
            }
        }
        struct Sep;
        impl ChartFn<2> for Sep {
            fn eval<S: Scalar>(&self, x: &[S; 2]) -> S {
                x[0].sq()
            }
        }

        let chart = Col2bpChart::new(1.0, 3.0, -0.8).unwrap();
        let generic = PoincareChart::new(RawH { mu: chart.reduced_mass(), mprod: 3.0 }, Sep, -0.8);
        for state in [[0.7, 0.4], [1.3, -2.0], [0.2, 1.0]] {
            let a = crate::regularize::gamma_value::<_, 2>(&chart, &state);
            let b = crate::regularize::gamma_value::<_, 2>(&generic, &state);
            assert_relative_eq!(a, b, epsilon = 1e-12);
        }
    }
}
