//! Adaptive explicit integration with dense output, event location, and
//! joint integration of variational equations.
//!
//! The stepper is the Dormand-Prince 5(4) embedded pair with the classic
//! PI step-size controller and the quartic dense-output interpolant. All
//! arithmetic is plain `f64` and single-threaded, so identical inputs
//! produce bit-identical trajectories.

use crate::error::{Error, Result};
use nalgebra::DMatrix;

/// Right-hand side of an ODE x' = f(s, x).
pub type Rhs<'a> = &'a dyn Fn(f64, &[f64], &mut [f64]);

/// Jacobian of a right-hand side, written into a dense n-by-n matrix.
pub type Jac<'a> = &'a dyn Fn(f64, &[f64], &mut DMatrix<f64>);

#[derive(Debug, Clone)]
pub struct IntegratorConfig {
    pub rel_tol: f64,
    pub abs_tol: f64,
    pub max_step: f64,
    pub max_steps: usize,
    /// Keep per-step interpolation data. Required by event refinement.
    pub dense_output: bool,
}

impl Default for IntegratorConfig {
    fn default() -> Self {
        IntegratorConfig {
            rel_tol: 1e-10,
            abs_tol: 1e-12,
            max_step: f64::INFINITY,
            max_steps: 1_000_000,
            dense_output: true,
        }
    }
}

impl IntegratorConfig {
    pub fn with_tol(tol: f64) -> Self {
        IntegratorConfig {
            rel_tol: tol,
            abs_tol: tol * 1e-2,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) || !(self.abs_tol > 0.0) || !(self.max_step > 0.0) {
            return Err(Error::Invalid("tolerances and max_step must be positive".into()));
        }
        if self.max_steps == 0 {
            return Err(Error::Invalid("max_steps must be at least 1".into()));
        }
        Ok(())
    }
}

/// Why stepping stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Termination {
    Completed,
    /// Terminal event with this index fired; the trajectory ends on it.
    EventHit(usize),
    StepLimit,
    StepUnderflow,
}

/// Dense-output data for one accepted step over [s0, s0 + h].
#[derive(Debug, Clone)]
pub struct DenseSegment {
    pub s0: f64,
    pub h: f64,
    cont: [Vec<f64>; 5],
}

impl DenseSegment {
    pub fn eval(&self, s: f64) -> Vec<f64> {
        let theta = (s - self.s0) / self.h;
        let th1 = 1.0 - theta;
        let n = self.cont[0].len();
        let mut out = vec![0.0; n];
        for i in 0..n {
            out[i] = self.cont[0][i]
                + theta
                    * (self.cont[1][i]
                        + th1 * (self.cont[2][i] + theta * (self.cont[3][i] + th1 * self.cont[4][i])));
        }
        out
    }

    pub fn contains(&self, s: f64) -> bool {
        s >= self.s0 - 1e-14 * self.h.abs() && s <= self.s0 + self.h * (1.0 + 1e-14)
    }
}

/// Time-ordered output of one integration.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub samples: Vec<(f64, Vec<f64>)>,
    pub dense: Vec<DenseSegment>,
    pub termination: Termination,
}

impl Trajectory {
    pub fn start(&self) -> &(f64, Vec<f64>) {
        self.samples.first().expect("trajectory has at least one sample")
    }

    pub fn end(&self) -> &(f64, Vec<f64>) {
        self.samples.last().expect("trajectory has at least one sample")
    }

    pub fn final_state(&self) -> &[f64] {
        &self.end().1
    }

    /// Interpolate the state at `s` from the dense segments.
    pub fn eval(&self, s: f64) -> Result<Vec<f64>> {
        if let Some((s0, x0)) = self.samples.first() {
            if s == *s0 {
                return Ok(x0.clone());
            }
        }
        let idx = self
            .dense
            .partition_point(|seg| seg.s0 + seg.h < s)
            .min(self.dense.len().saturating_sub(1));
        match self.dense.get(idx) {
            Some(seg) if seg.contains(s) => Ok(seg.eval(s)),
            _ => Err(Error::Invalid(format!("s = {s} outside the integrated span"))),
        }
    }

    /// Map a non-`Completed` termination to its error.
    pub fn ensure_completed(&self) -> Result<()> {
        match self.termination {
            Termination::Completed | Termination::EventHit(_) => Ok(()),
            Termination::StepLimit => Err(Error::StepLimit { s: self.end().0 }),
            Termination::StepUnderflow => Err(Error::StepUnderflow { s: self.end().0 }),
        }
    }
}

/// Scalar event function watched during integration. The event fires when
/// the predicate changes sign between accepted steps; leaving an exact zero
/// does not count as a crossing, so sections may start on their own event.
pub struct EventSpec<'a> {
    pub predicate: &'a dyn Fn(&[f64]) -> f64,
    pub terminal: bool,
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
const B: [f64; 7] = [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0, 0.0];
// b - bhat, for the embedded error estimate.
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// Dense-output weights.
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

const SAFETY: f64 = 0.9;
const BETA: f64 = 0.04;
const EXPO1: f64 = 0.2 - BETA * 0.75;
const MAX_GROWTH: f64 = 10.0;
const MAX_SHRINK: f64 = 0.2;

fn initial_step(f: Rhs, s0: f64, x0: &[f64], f0: &[f64], end: f64, cfg: &IntegratorConfig) -> f64 {
    let n = x0.len();
    let sc = |i: usize| cfg.abs_tol + cfg.rel_tol * x0[i].abs();
    let dnf: f64 = (0..n).map(|i| (f0[i] / sc(i)).powi(2)).sum();
    let dny: f64 = (0..n).map(|i| (x0[i] / sc(i)).powi(2)).sum();
    let mut h = if dnf <= 1e-10 || dny <= 1e-10 {
        1e-6
    } else {
        0.01 * (dny / dnf).sqrt()
    };
    h = h.min(cfg.max_step).min(end - s0);

    let mut x1 = vec![0.0; n];
    for i in 0..n {
        x1[i] = x0[i] + h * f0[i];
    }
    let mut f1 = vec![0.0; n];
    f(s0 + h, &x1, &mut f1);
    let der2: f64 = (0..n)
        .map(|i| ((f1[i] - f0[i]) / sc(i)).powi(2))
        .sum::<f64>()
        .sqrt()
        / h;
    let der12 = der2.max(dnf.sqrt());
    let h1 = if der12 <= 1e-15 {
        (h * 1e-3).max(1e-6)
    } else {
        (0.01 / der12).powf(0.2)
    };
    (100.0 * h).min(h1).min(cfg.max_step).min(end - s0)
}

struct Stepper<'a> {
    f: Rhs<'a>,
    n: usize,
    k: [Vec<f64>; 7],
    x_stage: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(f: Rhs<'a>, n: usize) -> Self {
        Stepper {
            f,
            n,
            k: std::array::from_fn(|_| vec![0.0; n]),
            x_stage: vec![0.0; n],
        }
    }

    /// One trial step from (s, x) with k[0] = f(s, x) already filled.
    /// Returns (x_new, err_norm); fills k[6] with f(s + h, x_new) for FSAL.
    fn try_step(&mut self, s: f64, x: &[f64], h: f64, cfg: &IntegratorConfig) -> (Vec<f64>, f64) {
        let n = self.n;
        for stage in 1..6 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in self.k.iter().enumerate().take(stage) {
                    acc += A[stage - 1][j] * kj[i];
                }
                self.x_stage[i] = x[i] + h * acc;
            }
            let (head, tail) = self.k.split_at_mut(stage);
            let _ = head;
            (self.f)(s + C[stage] * h, &self.x_stage, &mut tail[0]);
        }
        let mut x_new = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for (j, kj) in self.k.iter().enumerate().take(6) {
                acc += B[j] * kj[i];
            }
            x_new[i] = x[i] + h * acc;
        }
        let (head, tail) = self.k.split_at_mut(6);
        let _ = head;
        (self.f)(s + h, &x_new, &mut tail[0]);

        let mut err_sq = 0.0;
        for i in 0..n {
            let mut e = 0.0;
            for (j, kj) in self.k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sc = cfg.abs_tol + cfg.rel_tol * x[i].abs().max(x_new[i].abs());
            err_sq += (e / sc) * (e / sc);
        }
        let err = (err_sq / n as f64).sqrt();
        (x_new, err)
    }

    fn dense_segment(&self, s0: f64, h: f64, x0: &[f64], x1: &[f64]) -> DenseSegment {
        let n = self.n;
        let mut cont: [Vec<f64>; 5] = std::array::from_fn(|_| vec![0.0; n]);
        for i in 0..n {
            let dy = x1[i] - x0[i];
            let bspl = h * self.k[0][i] - dy;
            cont[0][i] = x0[i];
            cont[1][i] = dy;
            cont[2][i] = bspl;
            cont[3][i] = dy - h * self.k[6][i] - bspl;
            let mut acc = 0.0;
            for (j, kj) in self.k.iter().enumerate() {
                acc += D[j] * kj[i];
            }
            cont[4][i] = h * acc;
        }
        DenseSegment { s0, h, cont }
    }
}

/// Integrate x' = f(s, x) over [start, end] with adaptive steps.
pub fn integrate(f: Rhs, x0: &[f64], span: (f64, f64), cfg: &IntegratorConfig) -> Result<Trajectory> {
    integrate_with_events(f, x0, span, cfg, &[])
}

/// As [`integrate`], additionally watching scalar event functions. A terminal
/// event truncates the trajectory exactly on the refined event state.
pub fn integrate_with_events(
    f: Rhs,
    x0: &[f64],
    span: (f64, f64),
    cfg: &IntegratorConfig,
    events: &[EventSpec],
) -> Result<Trajectory> {
    cfg.validate()?;
    let (start, end) = span;
    if end < start {
        return Err(Error::Invalid(format!("span must satisfy start <= end, got ({start}, {end})")));
    }
    let n = x0.len();
    let mut samples = vec![(start, x0.to_vec())];
    let mut dense: Vec<DenseSegment> = Vec::new();
    if end == start {
        return Ok(Trajectory { samples, dense, termination: Termination::Completed });
    }

    let mut stepper = Stepper::new(f, n);
    let mut s = start;
    let mut x = x0.to_vec();
    (f)(s, &x, &mut stepper.k[0]);
    let mut h = initial_step(f, s, &x, &stepper.k[0], end, cfg);
    let mut ev_prev: Vec<f64> = events.iter().map(|e| (e.predicate)(&x)).collect();
    let mut facold: f64 = 1e-4;
    let mut steps = 0usize;

    loop {
        if steps >= cfg.max_steps {
            return Ok(Trajectory { samples, dense, termination: Termination::StepLimit });
        }
        if 0.1 * h.abs() <= s.abs() * f64::EPSILON || h <= f64::MIN_POSITIVE {
            return Ok(Trajectory { samples, dense, termination: Termination::StepUnderflow });
        }
        let mut last = false;
        if s + 1.01 * h >= end {
            h = end - s;
            last = true;
        }

        let (x_new, err) = stepper.try_step(s, &x, h, cfg);
        steps += 1;

        if !err.is_finite() {
            h *= 0.1;
            continue;
        }

        let fac11 = err.powf(EXPO1);
        if err <= 1.0 {
            // Accepted.
            let fac = (fac11 / facold.powf(BETA) / SAFETY).clamp(1.0 / MAX_GROWTH, 1.0 / MAX_SHRINK);
            facold = err.max(1e-4);
            let seg = stepper.dense_segment(s, h, &x, &x_new);

            // Event scan over this step.
            let mut hit: Option<(usize, f64)> = None;
            for (ie, ev) in events.iter().enumerate() {
                let p_new = (ev.predicate)(&x_new);
                let p_old = ev_prev[ie];
                let crossed = (p_old != 0.0 && p_old * p_new < 0.0) || (p_old != 0.0 && p_new == 0.0);
                if crossed {
                    let s_ev = locate_zero(&seg, ev.predicate, s, s + h, p_old, p_new);
                    if ev.terminal && hit.map(|(_, sh)| s_ev < sh).unwrap_or(true) {
                        hit = Some((ie, s_ev));
                    }
                }
                ev_prev[ie] = p_new;
            }

            if let Some((ie, s_ev)) = hit {
                let x_ev = seg.eval(s_ev);
                if cfg.dense_output {
                    dense.push(seg);
                }
                samples.push((s_ev, x_ev));
                return Ok(Trajectory { samples, dense, termination: Termination::EventHit(ie) });
            }

            if cfg.dense_output {
                dense.push(seg);
            }
            s += h;
            x = x_new;
            stepper.k.swap(0, 6); // FSAL
            samples.push((s, x.clone()));

            if last || s >= end {
                return Ok(Trajectory { samples, dense, termination: Termination::Completed });
            }
            h = (h / fac).min(cfg.max_step);
        } else {
            // Rejected; shrink and retry.
            h /= (fac11 / SAFETY).min(1.0 / MAX_SHRINK);
        }
    }
}

/// Bisection/secant hybrid on the dense interpolant.
fn locate_zero(
    seg: &DenseSegment,
    pred: &dyn Fn(&[f64]) -> f64,
    mut a: f64,
    mut b: f64,
    mut pa: f64,
    mut pb: f64,
) -> f64 {
    if pb == 0.0 {
        return b;
    }
    let scale = pa.abs().max(pb.abs());
    for _ in 0..200 {
        // Secant proposal, safeguarded to the bracket interior.
        let mut m = b - pb * (b - a) / (pb - pa);
        let lo = a + 0.05 * (b - a);
        let hi = b - 0.05 * (b - a);
        if !(m >= lo && m <= hi) {
            m = 0.5 * (a + b);
        }
        let pm = pred(&seg.eval(m));
        if pm.abs() <= 1e-12 * scale || (b - a).abs() <= 4.0 * f64::EPSILON * (1.0 + m.abs()) {
            return m;
        }
        if pa * pm < 0.0 {
            b = m;
            pb = pm;
        } else {
            a = m;
            pa = pm;
        }
    }
    0.5 * (a + b)
}

/// Locate a zero of `predicate` along an integrated trajectory.
///
/// Scans samples in order; an exact zero at a sample is returned as is,
/// otherwise the first bracketing step is refined on its dense segment to
/// |predicate| <= 1e-12 times the bracket's predicate scale.
pub fn refine_event(
    trajectory: &Trajectory,
    predicate: &dyn Fn(&[f64]) -> f64,
) -> Result<(f64, Vec<f64>)> {
    let samples = &trajectory.samples;
    if samples.is_empty() {
        return Err(Error::NoSignChange);
    }
    let mut p_prev = predicate(&samples[0].1);
    if p_prev == 0.0 {
        // A zero the trajectory departs from is the section it was launched
        // off of, not an event; only a persistent zero is returned as is.
        match samples.get(1) {
            Some(next) if predicate(&next.1) != 0.0 => {}
            _ => return Ok(samples[0].clone()),
        }
    }
    for (idx, win) in samples.windows(2).enumerate() {
        let p_next = predicate(&win[1].1);
        if p_next == 0.0 {
            return Ok(win[1].clone());
        }
        if p_prev * p_next < 0.0 {
            let seg = trajectory
                .dense
                .get(idx)
                .ok_or_else(|| Error::Invalid("event refinement needs dense output".into()))?;
            let s_ev = locate_zero(seg, predicate, win[0].0, win[1].0, p_prev, p_next);
            return Ok((s_ev, seg.eval(s_ev)));
        }
        p_prev = p_next;
    }
    Err(Error::NoSignChange)
}

/// Every zero crossing of `predicate` along the trajectory, refined on the
/// dense segments; a zero the first sample departs from is skipped.
pub fn refine_all_events(
    trajectory: &Trajectory,
    predicate: &dyn Fn(&[f64]) -> f64,
) -> Result<Vec<(f64, Vec<f64>)>> {
    let samples = &trajectory.samples;
    let mut out = Vec::new();
    if samples.len() < 2 {
        return Ok(out);
    }
    let mut p_prev = predicate(&samples[0].1);
    for (idx, win) in samples.windows(2).enumerate() {
        let p_next = predicate(&win[1].1);
        if p_next == 0.0 {
            out.push(win[1].clone());
        } else if p_prev != 0.0 && p_prev * p_next < 0.0 {
            let seg = trajectory
                .dense
                .get(idx)
                .ok_or_else(|| Error::Invalid("event refinement needs dense output".into()))?;
            let s_ev = locate_zero(seg, predicate, win[0].0, win[1].0, p_prev, p_next);
            out.push((s_ev, seg.eval(s_ev)));
        }
        p_prev = p_next;
    }
    Ok(out)
}

/// Integrate x' = f(x) jointly with its variational equations
/// dPhi/ds = Df(x(s)) Phi, Phi(start) = I.
///
/// The returned trajectory holds the base state only; the transition matrix
/// is returned at the final sample. Error control covers both the state and
/// the matrix entries.
pub fn integrate_variational(
    f: Rhs,
    jac: Jac,
    x0: &[f64],
    span: (f64, f64),
    cfg: &IntegratorConfig,
) -> Result<(Trajectory, DMatrix<f64>)> {
    let n = x0.len();
    let mut j = DMatrix::<f64>::zeros(n, n);
    let jac_cell = std::cell::RefCell::new(&mut j);
    let aug_rhs = |s: f64, xa: &[f64], dxa: &mut [f64]| {
        let (x, phi) = xa.split_at(n);
        let (dx, dphi) = dxa.split_at_mut(n);
        f(s, x, dx);
        let mut jref = jac_cell.borrow_mut();
        jac(s, x, &mut jref);
        for c in 0..n {
            let col = &phi[c * n..(c + 1) * n];
            for r in 0..n {
                let mut acc = 0.0;
                for (m, cm) in col.iter().enumerate() {
                    acc += jref[(r, m)] * cm;
                }
                dphi[c * n + r] = acc;
            }
        }
    };

    let mut xa0 = vec![0.0; n + n * n];
    xa0[..n].copy_from_slice(x0);
    for i in 0..n {
        xa0[n + i * n + i] = 1.0;
    }
    let mut aug_cfg = cfg.clone();
    aug_cfg.dense_output = false;
    let traj = integrate(&aug_rhs, &xa0, span, &aug_cfg)?;

    let phi_flat = &traj.end().1[n..];
    let phi = DMatrix::from_column_slice(n, n, phi_flat);
    let samples = traj
        .samples
        .iter()
        .map(|(s, xa)| (*s, xa[..n].to_vec()))
        .collect();
    let stripped = Trajectory {
        samples,
        dense: Vec::new(),
        termination: traj.termination,
    };
    Ok((stripped, phi))
}
