//! Regularized Hamiltonian charts.
//!
//! A chart supplies the extended Hamiltonian Gamma(Q, P; E) = g (H - E) in
//! Levi-Civita coordinates, written with the collision factors cancelled so
//! it is smooth on the regularized collision set, plus the time scale
//! dt/ds = g(Q). Everything else is derived here: the Hamiltonian vector
//! field and its Jacobian come from dual-number passes over `gamma`, so the
//! per-problem code never hand-writes a derivative.

use crate::ad::{Grad, Hess, Scalar};
use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Default tolerance for the on-level check |Gamma| <= tol.
pub const GAMMA_TOLERANCE: f64 = 1e-9;

/// A regularized chart with phase-space dimension `D` (layout [Q..., P...]).
pub trait Chart<const D: usize> {
    /// Extended Hamiltonian Gamma = g (H - E), collision factors cancelled.
    fn gamma<S: Scalar>(&self, x: &[S; D]) -> S;

    /// Time transformation dt/ds = g(Q), nonnegative, zero exactly on the
    /// regularized collision set.
    fn time_scale<S: Scalar>(&self, x: &[S; D]) -> S;
}

/// Scalar function on a chart's phase space, usable with any AD scalar.
pub trait ChartFn<const D: usize> {
    fn eval<S: Scalar>(&self, x: &[S; D]) -> S;
}

/// Generic Poincare time transformation: given a Hamiltonian H and a positive
/// scale g vanishing on the collision set, the chart of Gamma = g (H - E).
///
/// The product is formed numerically, so this combinator is only as smooth
/// as the supplied H; problem charts cancel the collision factors by hand
/// and implement [`Chart`] directly.
pub struct PoincareChart<H, G> {
    pub hamiltonian: H,
    pub scale: G,
    pub energy: f64,
}

impl<H, G> PoincareChart<H, G> {
    pub fn new(hamiltonian: H, scale: G, energy: f64) -> Self {
        PoincareChart { hamiltonian, scale, energy }
    }
}

impl<H: ChartFn<D>, G: ChartFn<D>, const D: usize> Chart<D> for PoincareChart<H, G> {
    fn gamma<S: Scalar>(&self, x: &[S; D]) -> S {
        self.scale.eval(x) * (self.hamiltonian.eval(x) - S::constant(self.energy))
    }

    fn time_scale<S: Scalar>(&self, x: &[S; D]) -> S {
        self.scale.eval(x)
    }
}

fn as_array<const D: usize>(x: &[f64]) -> &[f64; D] {
    x[..D].try_into().expect("state dimension mismatch")
}

fn seed_grad<const D: usize>(x: &[f64; D]) -> [Grad<D>; D] {
    std::array::from_fn(|i| Grad::var(x[i], i))
}

fn seed_hess<const D: usize>(x: &[f64; D]) -> [Hess<D>; D] {
    std::array::from_fn(|i| Hess::var(x[i], i))
}

pub fn gamma_value<C: Chart<D>, const D: usize>(chart: &C, x: &[f64]) -> f64 {
    chart.gamma(as_array::<D>(x))
}

pub fn time_scale_value<C: Chart<D>, const D: usize>(chart: &C, x: &[f64]) -> f64 {
    chart.time_scale(as_array::<D>(x))
}

pub fn gamma_gradient<C: Chart<D>, const D: usize>(chart: &C, x: &[f64]) -> [f64; D] {
    chart.gamma(&seed_grad(as_array::<D>(x))).d
}

/// Hamiltonian vector field of Gamma: dQ/ds = dGamma/dP, dP/ds = -dGamma/dQ.
pub fn hamiltonian_field<C: Chart<D>, const D: usize>(chart: &C, x: &[f64], dx: &mut [f64]) {
    let g = gamma_gradient::<C, D>(chart, x);
    let d = D / 2;
    for i in 0..d {
        dx[i] = g[d + i];
        dx[d + i] = -g[i];
    }
}

/// Jacobian of the Hamiltonian vector field from the Hessian of Gamma.
pub fn field_jacobian<C: Chart<D>, const D: usize>(chart: &C, x: &[f64], jac: &mut DMatrix<f64>) {
    let h = chart.gamma(&seed_hess(as_array::<D>(x))).h;
    let d = D / 2;
    for j in 0..D {
        for i in 0..d {
            jac[(i, j)] = h[d + i][j];
            jac[(d + i, j)] = -h[i][j];
        }
    }
}

/// Closure adapter for the integrator: the chart's field on [Q, P].
pub fn rhs_closure<'c, C: Chart<D>, const D: usize>(
    chart: &'c C,
) -> impl Fn(f64, &[f64], &mut [f64]) + 'c {
    move |_s, x, dx| hamiltonian_field::<C, D>(chart, x, dx)
}

/// Closure adapter with the physical-time quadrature appended: state
/// [Q, P, t] with dt/ds = g(Q).
pub fn rhs_with_time_closure<'c, C: Chart<D>, const D: usize>(
    chart: &'c C,
) -> impl Fn(f64, &[f64], &mut [f64]) + 'c {
    move |_s, x, dx| {
        hamiltonian_field::<C, D>(chart, &x[..D], &mut dx[..D]);
        dx[D] = time_scale_value::<C, D>(chart, &x[..D]);
    }
}

pub fn jac_closure<'c, C: Chart<D>, const D: usize>(
    chart: &'c C,
) -> impl Fn(f64, &[f64], &mut DMatrix<f64>) + 'c {
    move |_s, x, jac| field_jacobian::<C, D>(chart, x, jac)
}

/// Check that a state sits on the Gamma = 0 level within `tol`.
pub fn check_on_level<C: Chart<D>, const D: usize>(chart: &C, x: &[f64], tol: f64) -> Result<()> {
    let residual = gamma_value::<C, D>(chart, x).abs();
    if residual > tol {
        return Err(Error::NotOnEnergyLevel { residual });
    }
    Ok(())
}

/// Project a state onto Gamma = 0 by solving for one momentum component.
///
/// Gamma is exactly quadratic in each momentum, so the projection is a
/// closed-form root; the nonnegative root is chosen by convention.
pub fn project_energy<C: Chart<D>, const D: usize>(
    chart: &C,
    x: &mut [f64],
    momentum_index: usize,
) -> Result<()> {
    let d = D / 2;
    let comp = d + momentum_index;
    debug_assert!(momentum_index < d);

    let mut base = *as_array::<D>(x);
    base[comp] = 0.0;
    let at_zero = chart.gamma(&seed_hess(&base));
    let a = 0.5 * at_zero.h[comp][comp];
    let b = at_zero.d[comp];
    let c = at_zero.v;

    let eta = if a.abs() < 1e-14 {
        if b.abs() < 1e-14 {
            return Err(Error::ChartDomain(
                "energy level does not depend on the chosen momentum".into(),
            ));
        }
        -c / b
    } else {
        let disc = b * b - 4.0 * a * c;
        if disc < 0.0 {
            return Err(Error::ChartDomain(
                "no real momentum reaches the energy level".into(),
            ));
        }
        let r1 = (-b + disc.sqrt()) / (2.0 * a);
        let r2 = (-b - disc.sqrt()) / (2.0 * a);
        if r1 >= 0.0 {
            r1
        } else if r2 >= 0.0 {
            r2
        } else {
            r1.max(r2)
        }
    };
    x[comp] = eta;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrate::{integrate, IntegratorConfig};
    use approx::assert_relative_eq;

    // H = (p^2 + w^2) / 2, the harmonic oscillator.
    struct OscillatorH;
    impl ChartFn<2> for OscillatorH {
        fn eval<S: Scalar>(&self, x: &[S; 2]) -> S {
            (x[1].sq() + x[0].sq()) * 0.5
        }
    }

    struct UnitScale;
    impl ChartFn<2> for UnitScale {
        fn eval<S: Scalar>(&self, _x: &[S; 2]) -> S {
            S::constant(1.0)
        }
    }

    #[test]
    fn unit_scale_gives_the_physical_field_and_t_equals_s() {
        let chart = PoincareChart::new(OscillatorH, UnitScale, 0.5);
        let mut dx = [0.0; 2];
        hamiltonian_field::<_, 2>(&chart, &[0.3, 0.8], &mut dx);
        assert_relative_eq!(dx[0], 0.8, max_relative = 1e-14);
        assert_relative_eq!(dx[1], -0.3, max_relative = 1e-14);

        let rhs = rhs_with_time_closure::<_, 2>(&chart);
        let cfg = IntegratorConfig::with_tol(1e-12);
        let traj = integrate(&rhs, &[0.0, 1.0, 0.0], (0.0, 2.5), &cfg).unwrap();
        let end = traj.final_state();
        assert_relative_eq!(end[2], 2.5, epsilon = 1e-10); // t = s
    }

    #[test]
    fn off_level_state_is_rejected() {
        let chart = PoincareChart::new(OscillatorH, UnitScale, 0.5);
        assert!(check_on_level::<_, 2>(&chart, &[0.0, 1.0], 1e-9).is_ok());
        let err = check_on_level::<_, 2>(&chart, &[0.0, 1.1], 1e-9);
        assert!(matches!(err, Err(Error::NotOnEnergyLevel { .. })));
    }

    #[test]
    fn project_energy_picks_the_nonnegative_root() {
        let chart = PoincareChart::new(OscillatorH, UnitScale, 0.5);
        let mut x = [0.6, 0.123];
        project_energy::<_, 2>(&chart, &mut x, 0).unwrap();
        assert!(x[1] >= 0.0);
        assert!(gamma_value::<_, 2>(&chart, &x).abs() < 1e-14);
    }

    #[test]
    fn jacobian_matches_finite_differences_of_the_field() {
        let chart = PoincareChart::new(OscillatorH, UnitScale, 0.5);
        let x0 = [0.4, -0.7];
        let mut jac = DMatrix::zeros(2, 2);
        field_jacobian::<_, 2>(&chart, &x0, &mut jac);
        let h = 1e-6;
        for j in 0..2 {
            let mut xp = x0;
            let mut xm = x0;
            xp[j] += h;
            xm[j] -= h;
            let (mut fp, mut fm) = ([0.0; 2], [0.0; 2]);
            hamiltonian_field::<_, 2>(&chart, &xp, &mut fp);
            hamiltonian_field::<_, 2>(&chart, &xm, &mut fm);
            for i in 0..2 {
                let fd = (fp[i] - fm[i]) / (2.0 * h);
                assert_relative_eq!(jac[(i, j)], fd, epsilon = 1e-8);
            }
        }
    }
}
