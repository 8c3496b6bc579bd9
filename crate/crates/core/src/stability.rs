//! Monodromy computation along regularized periodic orbits, spectral
//! classification, mass sweeps, and stability-boundary bisection.
//!
//! The monodromy is the transition matrix of the variational flow over one
//! period, composed with the deck transformation when the orbit returns to
//! the mirrored sheet of the Levi-Civita cover. Classification looks only at
//! eigenvalue moduli after removing the trivial unit pair spanned by the
//! flow and energy directions: all moduli on the unit circle within
//! tolerance is spectral stability, any modulus beyond it is linear
//! instability. Nothing stronger is inferred; a spectrally stable orbit may
//! still be nonlinearly unstable.

use crate::error::{Error, Result};
use crate::integrate::{integrate_variational, IntegratorConfig};
use crate::orbits::{continue_family, OrbitKind, PeriodicOrbit};
use crate::problems::Problem;
use nalgebra::{Complex, DMatrix, DVector};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

#[derive(Debug, Clone)]
pub struct StabilityOptions {
    /// Integrator tolerance for the variational flow.
    pub integrator_tol: f64,
    /// Half-width of the unit-circle band counted as modulus one.
    pub modulus_tolerance: f64,
    /// Eigenvector-overlap threshold identifying the trivial pair.
    pub trivial_overlap: f64,
    /// Condition-number cap on the eigenvector basis.
    pub condition_limit: f64,
}

impl Default for StabilityOptions {
    fn default() -> Self {
        StabilityOptions {
            integrator_tol: 1e-10,
            modulus_tolerance: 1e-3,
            trivial_overlap: 0.9,
            condition_limit: 1e10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Classification {
    SpectrallyStable,
    LinearlyUnstable,
    Indeterminate,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::SpectrallyStable => "spectrally-stable",
            Classification::LinearlyUnstable => "linearly-unstable",
            Classification::Indeterminate => "indeterminate",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Clone)]
pub struct StabilityReport {
    pub kind: OrbitKind,
    pub mass_parameter: f64,
    pub energy: f64,
    pub monodromy: DMatrix<f64>,
    pub determinant: f64,
    /// Full eigenvalue multiset of the monodromy.
    pub eigenvalues: Vec<Complex<f64>>,
    /// After removing the trivial flow/energy pair.
    pub nontrivial: Vec<Complex<f64>>,
    pub classification: Classification,
    pub modulus_tolerance: f64,
    pub integrator_tol: f64,
}

impl StabilityReport {
    pub fn max_nontrivial_modulus(&self) -> f64 {
        self.nontrivial.iter().map(|l| l.norm()).fold(0.0, f64::max)
    }
}

/// Transition matrix of the regularized flow over one period, composed with
/// the deck transformation at return. A zero-period orbit degenerates to the
/// identity.
pub fn monodromy(orbit: &PeriodicOrbit, opts: &StabilityOptions) -> Result<DMatrix<f64>> {
    let problem = orbit.problem()?;
    let dim = problem.dim();
    if orbit.period_s == 0.0 {
        return Ok(DMatrix::identity(dim, dim));
    }
    let rhs = problem.rhs();
    let jac = problem.jac_closure();
    let cfg = IntegratorConfig {
        dense_output: false,
        ..IntegratorConfig::with_tol(opts.integrator_tol)
    };
    let x0 = orbit.initial.to_vec();
    let (traj, phi) =
        integrate_variational(&rhs, &jac, &x0, (0.0, orbit.period_s), &cfg)?;
    traj.ensure_completed()?;
    let signs = orbit.deck_signs();
    let mut m = phi;
    for r in 0..dim {
        for c in 0..dim {
            m[(r, c)] *= signs[r];
        }
    }
    Ok(m)
}

/// Eigenvalues of a real matrix as a complex multiset.
pub fn eigenvalues(m: &DMatrix<f64>) -> Vec<Complex<f64>> {
    m.clone().complex_eigenvalues().iter().copied().collect()
}

/// Eigenvector for a computed eigenvalue: the right-singular vector of
/// M - lambda I belonging to its smallest singular value.
fn eigenvector(m: &DMatrix<f64>, lambda: Complex<f64>) -> DVector<Complex<f64>> {
    let n = m.nrows();
    let mut shifted = m.map(|v| Complex::new(v, 0.0));
    for i in 0..n {
        shifted[(i, i)] -= lambda;
    }
    let svd = shifted.svd(false, true);
    let v_t = svd.v_t.expect("requested V^H");
    let last = v_t.nrows() - 1;
    DVector::from_iterator(n, (0..n).map(|i| v_t[(last, i)].conj()))
}

/// Classify a nontrivial eigenvalue multiset by moduli alone.
///
/// Moduli in the outer half of the tolerance band, (1 + tol/2, 1 + tol], are
/// reported as indeterminate rather than silently counted stable.
pub fn classify(nontrivial: &[Complex<f64>], modulus_tolerance: f64) -> Classification {
    if nontrivial.is_empty() {
        return Classification::SpectrallyStable;
    }
    let tol = modulus_tolerance;
    let max_mod = nontrivial.iter().map(|l| l.norm()).fold(0.0, f64::max);
    let min_mod = nontrivial.iter().map(|l| l.norm()).fold(f64::INFINITY, f64::min);
    if max_mod > 1.0 + tol {
        Classification::LinearlyUnstable
    } else if max_mod <= 1.0 + 0.5 * tol && min_mod >= 1.0 - tol {
        Classification::SpectrallyStable
    } else {
        Classification::Indeterminate
    }
}

/// Orthonormal real basis of the plane spanned by the flow direction and
/// the energy gradient at the orbit's initial point.
fn trivial_plane(problem: &Problem, x0: &[f64]) -> Vec<DVector<f64>> {
    let dim = problem.dim();
    let mut f = vec![0.0; dim];
    problem.field(x0, &mut f);
    let grad = problem.grad_gamma(x0);
    let mut basis: Vec<DVector<f64>> = Vec::new();
    for v in [f, grad] {
        let mut v = DVector::from_vec(v);
        for b in &basis {
            let proj = b.dot(&v);
            v -= b * proj;
        }
        let n = v.norm();
        if n > 1e-12 {
            basis.push(v / n);
        }
    }
    basis
}

fn overlap_with_plane(v: &DVector<Complex<f64>>, plane: &[DVector<f64>]) -> f64 {
    let norm = v.norm();
    if norm == 0.0 {
        return 0.0;
    }
    let mut proj_sq = 0.0;
    for b in plane {
        let coeff: Complex<f64> = v
            .iter()
            .zip(b.iter())
            .map(|(vi, bi)| vi.conj() * Complex::new(*bi, 0.0))
            .sum();
        proj_sq += coeff.norm_sqr();
    }
    proj_sq.sqrt() / norm
}

/// Full stability analysis of a converged orbit.
pub fn stability_report(
    orbit: &PeriodicOrbit,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    if orbit.residual > 1e-9 {
        return Err(Error::Invalid(format!(
            "orbit residual {:e} too large for stability analysis",
            orbit.residual
        )));
    }
    let m = monodromy(orbit, opts)?;
    report_from_monodromy(orbit, m, opts)
}

fn report_from_monodromy(
    orbit: &PeriodicOrbit,
    m: DMatrix<f64>,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    let problem = orbit.problem()?;
    let determinant = m.clone().lu().determinant();
    let eigs = eigenvalues(&m);
    let n = eigs.len();

    // Eigenvector basis condition estimate.
    let vectors: Vec<DVector<Complex<f64>>> =
        eigs.iter().map(|l| eigenvector(&m, *l)).collect();
    let mut vmat = DMatrix::<Complex<f64>>::zeros(n, n);
    for (c, v) in vectors.iter().enumerate() {
        vmat.set_column(c, v);
    }
    let sv = vmat.svd(false, false).singular_values;
    let cond = sv.max() / sv.min().max(f64::MIN_POSITIVE);
    if cond > opts.condition_limit {
        return Err(Error::IllConditionedSpectrum(cond));
    }

    // Remove the two eigenvalues carried by the flow/energy plane: among
    // those whose eigenvectors overlap the plane, the two closest to 1.
    let plane = trivial_plane(&problem, &orbit.initial.to_vec());
    let mut candidates: Vec<usize> = (0..n)
        .filter(|&i| overlap_with_plane(&vectors[i], &plane) >= opts.trivial_overlap)
        .collect();
    if candidates.len() < 2 {
        // Defective unit clusters can scramble the numerical eigenvectors;
        // fall back to proximity to 1.
        candidates = (0..n).collect();
    }
    candidates.sort_by(|&a, &b| {
        let da = (eigs[a] - Complex::new(1.0, 0.0)).norm();
        let db = (eigs[b] - Complex::new(1.0, 0.0)).norm();
        da.total_cmp(&db)
    });
    let removed: Vec<usize> = candidates.into_iter().take(2).collect();
    let nontrivial: Vec<Complex<f64>> = (0..n)
        .filter(|i| !removed.contains(i))
        .map(|i| eigs[i])
        .collect();

    let classification = classify(&nontrivial, opts.modulus_tolerance);
    Ok(StabilityReport {
        kind: orbit.kind,
        mass_parameter: orbit.mass_parameter,
        energy: orbit.energy,
        monodromy: m,
        determinant,
        eigenvalues: eigs,
        nontrivial,
        classification,
        modulus_tolerance: opts.modulus_tolerance,
        integrator_tol: opts.integrator_tol,
    })
}

/// Stability analysis with one tightened retry when the first pass lands in
/// the indeterminate band.
pub fn stability_report_refined(
    orbit: &PeriodicOrbit,
    opts: &StabilityOptions,
) -> Result<StabilityReport> {
    let report = stability_report(orbit, opts)?;
    if report.classification != Classification::Indeterminate {
        return Ok(report);
    }
    let tightened = StabilityOptions {
        integrator_tol: opts.integrator_tol * 1e-2,
        ..opts.clone()
    };
    stability_report(orbit, &tightened)
}

/// Base mass at which each family is findable without a seed.
fn family_anchor(kind: OrbitKind) -> f64 {
    let _ = kind;
    1.0
}

/// Solve the family member at mass `m` with no prior neighbor.
pub fn orbit_at(kind: OrbitKind, m: f64) -> Result<PeriodicOrbit> {
    let anchor = family_anchor(kind);
    let base = match kind {
        OrbitKind::Schubart => crate::orbits::schubart_orbit([1.0, anchor, 1.0], -1.0)?,
        OrbitKind::ColS4 => crate::orbits::cols4bp_orbit(anchor, -1.0)?,
        OrbitKind::Pps4Collinear => crate::orbits::pps4bp_collinear_orbit(anchor, -1.0)?,
        OrbitKind::Pps4Sbc => crate::orbits::pps4bp_sbc_orbit(anchor, -1.0)?,
    };
    if (m - anchor).abs() < 1e-14 {
        return Ok(base);
    }
    let family = continue_family(&base, m, family_step(kind, m.max(anchor)))?;
    Ok(family.last().expect("family includes the base").clone())
}

/// Continuation step cap per family; the simultaneous-binary-collision
/// family uses short steps, the collinear families scale with the mass.
fn family_step(kind: OrbitKind, m_scale: f64) -> f64 {
    match kind {
        OrbitKind::Pps4Sbc => 0.02,
        _ => 0.1 * (1.0 + m_scale.abs()),
    }
}

/// Run a closure inside a worker pool of the requested width; 0 leaves the
/// default pool. Without the `parallel` feature the closure just runs.
pub fn with_jobs<T: Send>(jobs: usize, f: impl FnOnce() -> T + Send) -> T {
    #[cfg(feature = "parallel")]
    {
        if jobs == 0 {
            f()
        } else {
            match rayon::ThreadPoolBuilder::new().num_threads(jobs).build() {
                Ok(pool) => pool.install(f),
                Err(_) => f(),
            }
        }
    }
    #[cfg(not(feature = "parallel"))]
    {
        let _ = jobs;
        f()
    }
}

/// One sweep row: a mass, and the analysis when the family member exists.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub m: f64,
    /// `None` marks a mass where continuation failed; never interpolated.
    pub report: Option<StabilityReport>,
}

/// Stability classification over a mass grid.
///
/// Orbits are continued sequentially outward from the family anchor; the
/// per-row monodromy analyses are independent and run in parallel when the
/// `parallel` feature is on and `parallel` is requested.
pub fn sweep(
    kind: OrbitKind,
    mass_grid: &[f64],
    opts: &StabilityOptions,
    parallel: bool,
) -> Result<Vec<SweepRow>> {
    let mut grid: Vec<f64> = mass_grid.to_vec();
    grid.sort_by(|a, b| a.total_cmp(b));
    grid.dedup();

    // Phase 1: orbits by outward continuation from the anchor.
    let anchor = family_anchor(kind);
    let base = orbit_at(kind, anchor)?;
    let mut orbits: Vec<Option<PeriodicOrbit>> = vec![None; grid.len()];
    let above: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] >= anchor).collect();
    let below: Vec<usize> = (0..grid.len()).filter(|&i| grid[i] < anchor).rev().collect();
    for walk in [above, below] {
        let mut current = base.clone();
        for idx in walk {
            let m = grid[idx];
            match continue_family(&current, m, family_step(kind, m.max(current.mass_parameter)))
            {
                Ok(family) => {
                    let orbit = family.last().unwrap().clone();
                    current = orbit.clone();
                    orbits[idx] = Some(orbit);
                }
                Err(_) => break,
            }
        }
    }

    // Phase 2: independent analyses, merged in mass order.
    let analyze = |pair: (&f64, &Option<PeriodicOrbit>)| -> SweepRow {
        let (m, orbit) = pair;
        let report = orbit
            .as_ref()
            .and_then(|o| stability_report_refined(o, opts).ok());
        SweepRow { m: *m, report }
    };
    let rows: Vec<SweepRow> = if parallel {
        #[cfg(feature = "parallel")]
        {
            grid.par_iter().zip(orbits.par_iter()).map(analyze).collect()
        }
        #[cfg(not(feature = "parallel"))]
        {
            grid.iter().zip(orbits.iter()).map(analyze).collect()
        }
    } else {
        grid.iter().zip(orbits.iter()).map(analyze).collect()
    };
    Ok(rows)
}

#[derive(Debug, Clone)]
pub struct BoundaryResult {
    pub m_star: f64,
    pub bracket: (f64, f64),
    pub lo_classification: Classification,
    pub hi_classification: Classification,
}

/// Bisect a stability boundary inside a mass bracket down to width 1e-3.
/// The endpoints must classify differently.
pub fn find_boundary(
    kind: OrbitKind,
    bracket: (f64, f64),
    opts: &StabilityOptions,
) -> Result<BoundaryResult> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(Error::Invalid("bracket must satisfy lo < hi".into()));
    }
    let mut orbit_lo = orbit_at(kind, lo)?;
    let class_of = |orbit: &PeriodicOrbit| -> Result<Classification> {
        Ok(stability_report_refined(orbit, opts)?.classification)
    };
    let lo_class = class_of(&orbit_lo)?;
    let mut orbit_hi = continue_family(&orbit_lo, hi, family_step(kind, hi))?
        .last()
        .unwrap()
        .clone();
    let hi_class = class_of(&orbit_hi)?;
    if lo_class == hi_class {
        return Err(Error::SameClassification);
    }

    while hi - lo > 1e-3 {
        let mid = 0.5 * (lo + hi);
        // Seed the midpoint from the nearer bracket edge.
        let seed = if mid - lo <= hi - mid { &orbit_lo } else { &orbit_hi };
        let orbit_mid = continue_family(seed, mid, family_step(kind, mid))?
            .last()
            .unwrap()
            .clone();
        let mid_class = class_of(&orbit_mid)?;
        if mid_class == lo_class {
            lo = mid;
            orbit_lo = orbit_mid;
        } else {
            hi = mid;
            orbit_hi = orbit_mid;
        }
    }
    Ok(BoundaryResult {
        m_star: 0.5 * (lo + hi),
        bracket: (lo, hi),
        lo_classification: lo_class,
        hi_classification: hi_class,
    })
}
