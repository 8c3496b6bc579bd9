//! Subcommand implementations.

use crate::config::Resolver;
use crate::dto::{EventDto, OrbitFile, StabilityFile, SCHEMA_VERSION};
use crate::output::{emit, fmt17, to_json_string};
use crate::{CliArgs, CliError};
use schubart_core::compare::{run_compare, CompareScenario};
use schubart_core::integrate::{refine_all_events, IntegratorConfig, Termination};
use schubart_core::nbody::{
    integrals, nbody_rhs, pack_state, singularity_diagnostics, unpack_state, DiagnosticsConfig,
    MassVector, PhaseState,
};
use schubart_core::orbits::{
    cols4bp_orbit, pps4bp_collinear_orbit, pps4bp_sbc_orbit, schubart_orbit, OrbitKind,
    PeriodicOrbit,
};
use schubart_core::problems::{
    col2bp_field, col3bp_field, cols4bp_field, pps4bp_collinear_field, pps4bp_field, Problem,
};
use schubart_core::regularize::{col2bp_solve, verify_bracket_identities, RegularizedState};
use schubart_core::stability::{
    find_boundary, stability_report_refined, sweep, with_jobs, StabilityOptions,
};
use serde::Serialize;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

fn out_path(r: &Resolver) -> Option<PathBuf> {
    let s = r.get("out");
    if s.is_empty() {
        None
    } else {
        Some(PathBuf::from(s))
    }
}

fn require_json(r: &Resolver) -> Result<(), CliError> {
    match r.get("format") {
        "json" => Ok(()),
        other => Err(CliError::usage(format!(
            "format {other:?} not supported here; CSV exists for sweep tables only"
        ))),
    }
}

fn integrator_config(r: &Resolver) -> Result<IntegratorConfig, CliError> {
    let cfg = IntegratorConfig {
        rel_tol: r.get_f64("rel-tol")?,
        abs_tol: r.get_f64("abs-tol")?,
        ..Default::default()
    };
    cfg.validate().map_err(CliError::from)?;
    Ok(cfg)
}

fn stability_options(r: &Resolver) -> Result<StabilityOptions, CliError> {
    Ok(StabilityOptions {
        integrator_tol: r.get_f64("rel-tol")?,
        modulus_tolerance: r.get_f64("modulus-tol")?,
        ..Default::default()
    })
}

// ---------------------------------------------------------------- simulate

#[derive(Serialize)]
struct SampleDto {
    s: f64,
    t: f64,
    state: Vec<f64>,
    positions: Option<Vec<f64>>,
    velocities: Option<Vec<f64>>,
    energy: Option<f64>,
    angular_momentum: Option<f64>,
}

#[derive(Serialize)]
struct SimulateFile {
    schema_version: u32,
    command: String,
    config: BTreeMap<String, String>,
    termination: String,
    /// Machine-readable failure reason; null on success.
    reason: Option<String>,
    events: Vec<EventDto>,
    energy_drift_max: Option<f64>,
    diagnostics: Option<String>,
    samples: Vec<SampleDto>,
}

pub fn cmd_simulate(args: &CliArgs) -> Result<i32, CliError> {
    let mut r = Resolver::new(&[
        ("problem", "col2bp"),
        ("masses", "1,1"),
        ("m", "1"),
        ("energy", ""),
        ("rel-tol", "1e-10"),
        ("abs-tol", "1e-12"),
        ("raw", "false"),
        ("collisions", ""),
        ("s-span", ""),
        ("t-final", ""),
        ("ic", ""),
        ("max-samples", "2000"),
        ("format", "json"),
        ("out", ""),
    ]);
    args.resolve(&mut r)?;
    require_json(&r)?;
    let raw = r.get("raw") == "true";
    let problem_tag = r.get("problem").to_string();

    let (file, code) = if raw {
        simulate_raw(&r, &problem_tag)?
    } else {
        simulate_regularized(&r, &problem_tag)?
    };
    emit(out_path(&r).as_deref(), &to_json_string(&file)?)?;
    Ok(code)
}

fn parse_ic(r: &Resolver, bodies: usize, dim: usize) -> Result<Option<PhaseState>, CliError> {
    let ic = r.get_f64_list("ic")?;
    if ic.is_empty() {
        return Ok(None);
    }
    let need = 2 * bodies * dim;
    if ic.len() != need {
        return Err(CliError::usage(format!(
            "ic needs {need} numbers (positions then velocities), got {}",
            ic.len()
        )));
    }
    let (q, v) = ic.split_at(bodies * dim);
    Ok(Some(
        PhaseState::new(dim, q.to_vec(), v.to_vec(), 0.0).map_err(CliError::from)?,
    ))
}

fn problem_layout(tag: &str) -> Result<(usize, usize), CliError> {
    match tag {
        "col2bp" => Ok((2, 1)),
        "col3bp" => Ok((3, 1)),
        "cols4bp" => Ok((4, 1)),
        "pps4bp" | "pps4bp-sbc" | "pps4bp-collinear" => Ok((4, 2)),
        other => Err(CliError::usage(format!("unknown problem {other:?}"))),
    }
}

fn masses_for(r: &Resolver, tag: &str) -> Result<Vec<f64>, CliError> {
    match tag {
        "col2bp" | "col3bp" => {
            let masses = r.get_f64_list("masses")?;
            let need = if tag == "col2bp" { 2 } else { 3 };
            if masses.len() != need {
                return Err(CliError::usage(format!("{tag} needs {need} masses")));
            }
            Ok(masses)
        }
        "cols4bp" => {
            let m = r.get_f64("m")?;
            Ok(vec![1.0, m, m, 1.0])
        }
        _ => {
            let m = r.get_f64("m")?;
            Ok(vec![1.0, m, 1.0, m])
        }
    }
}

fn build_problem(tag: &str, r: &Resolver, ic: Option<&PhaseState>) -> Result<Problem, CliError> {
    let energy_flag = r.get("energy");
    let energy = |default: Option<f64>| -> Result<f64, CliError> {
        if energy_flag.is_empty() {
            default.ok_or_else(|| CliError::usage("energy (or an ic to derive it) required".into()))
        } else {
            Ok(r.get_f64("energy")?)
        }
    };
    match tag {
        "col2bp" => {
            let masses = masses_for(r, tag)?;
            Ok(col2bp_field(masses[0], masses[1], energy(Some(-1.0))?).map_err(CliError::from)?)
        }
        "col3bp" => {
            let masses = masses_for(r, tag)?;
            let m3: [f64; 3] = [masses[0], masses[1], masses[2]];
            let derived = ic
                .map(|s| schubart_core::problems::col3bp_energy(m3, s))
                .transpose()
                .map_err(CliError::from)?;
            Ok(col3bp_field(m3, energy(derived)?).map_err(CliError::from)?)
        }
        "cols4bp" => {
            let m = r.get_f64("m")?;
            let derived = ic
                .map(|s| schubart_core::problems::cols4bp_energy(m, s))
                .transpose()
                .map_err(CliError::from)?;
            Ok(cols4bp_field(m, energy(derived)?).map_err(CliError::from)?)
        }
        "pps4bp" | "pps4bp-sbc" | "pps4bp-collinear" => {
            let m = r.get_f64("m")?;
            let derived = ic
                .map(|s| schubart_core::problems::pps4bp_energy(m, s))
                .transpose()
                .map_err(CliError::from)?;
            let e = energy(derived)?;
            if tag == "pps4bp-collinear" {
                Ok(pps4bp_collinear_field(m, e).map_err(CliError::from)?)
            } else {
                Ok(pps4bp_field(m, e).map_err(CliError::from)?)
            }
        }
        other => Err(CliError::usage(format!("unknown problem {other:?}"))),
    }
}

fn termination_strings(t: Termination, guard_hit: bool) -> (String, Option<String>, i32) {
    match t {
        Termination::Completed | Termination::EventHit(_) if !guard_hit => {
            ("completed".into(), None, 0)
        }
        _ if guard_hit => ("chart-abort".into(), Some("TripleCollisionChart".into()), 3),
        Termination::StepUnderflow => ("step-underflow".into(), Some("StepUnderflow".into()), 3),
        Termination::StepLimit => ("step-limit".into(), Some("StepLimit".into()), 3),
        _ => ("completed".into(), None, 0),
    }
}

fn thin_indices(n: usize, max: usize) -> Vec<usize> {
    if n <= max {
        return (0..n).collect();
    }
    let stride = n.div_ceil(max);
    let mut idx: Vec<usize> = (0..n).step_by(stride).collect();
    if *idx.last().unwrap() != n - 1 {
        idx.push(n - 1);
    }
    idx
}

fn simulate_regularized(r: &Resolver, tag: &str) -> Result<(SimulateFile, i32), CliError> {
    let (bodies, dim) = problem_layout(tag)?;
    let ic = parse_ic(r, bodies, dim)?;
    let problem = build_problem(tag, r, ic.as_ref())?;
    let d = problem.dim();
    let cfg = integrator_config(r)?;
    let masses = MassVector::new(masses_for(r, tag)?).map_err(CliError::from)?;

    // Initial regularized state with the time quadrature appended.
    let mut x0 = match (&ic, &problem) {
        (Some(state), _) => problem.from_physical(state).map_err(CliError::from)?.to_vec(),
        (None, Problem::Col2bp(chart)) => chart.collision_state().to_vec(),
        (None, _) => {
            return Err(CliError::usage(format!("{tag} requires --ic")));
        }
    };
    x0.push(0.0);

    // Span: collision count (col2bp), fictitious span, or physical horizon.
    let collisions = r.get("collisions");
    let s_span = r.get("s-span");
    let t_final = r.get("t-final");
    let (span, t_stop): ((f64, f64), Option<f64>) = if !collisions.is_empty() {
        if tag != "col2bp" {
            return Err(CliError::usage("collisions is only supported for col2bp".into()));
        }
        let n = r.get_usize("collisions")?;
        let cf = col2bp_solve(masses.get(0), masses.get(1), problem.energy())
            .map_err(CliError::from)?;
        let s_end = n as f64 * cf.s_between_collisions();
        ((0.0, s_end * (1.0 + 1e-9) + 1e-12), None)
    } else if !s_span.is_empty() {
        let parts = r.get_f64_list("s-span")?;
        if parts.len() != 2 || parts[0] != 0.0 || parts[1] < 0.0 {
            return Err(CliError::usage("s-span must be `0,end` with end >= 0".into()));
        }
        ((parts[0], parts[1]), None)
    } else if !t_final.is_empty() {
        let t = r.get_f64("t-final")?;
        ((0.0, 1e9), Some(t))
    } else {
        return Err(CliError::usage(
            "one of --collisions, --s-span, or --t-final is required".into(),
        ));
    };

    // Terminal events: the physical-time stop, then the chart guard.
    let rhs = problem.rhs_with_time();
    let t_pred = t_stop.map(|t| move |x: &[f64]| x[d] - t);
    let guard = problem.guard();
    let guard_pred = guard.as_ref().map(|g| move |x: &[f64]| g(&x[..d]));
    let mut events = Vec::new();
    if let Some(p) = t_pred.as_ref() {
        events.push(schubart_core::integrate::EventSpec { predicate: p, terminal: true });
    }
    let guard_index = events.len();
    if let Some(p) = guard_pred.as_ref() {
        events.push(schubart_core::integrate::EventSpec { predicate: p, terminal: true });
    }
    let traj = schubart_core::integrate::integrate_with_events(&rhs, &x0, span, &cfg, &events)
        .map_err(CliError::from)?;
    let guard_hit = guard_pred.is_some()
        && traj.termination == Termination::EventHit(guard_index);

    // Collision events along the run.
    let mut collision_events = Vec::new();
    for (range, kind) in problem.channels() {
        if range.len() == 1 {
            let idx = range.start;
            let pred = move |x: &[f64]| x[idx];
            for (s, state) in refine_all_events(&traj, &pred).map_err(CliError::from)? {
                collision_events.push(EventDto { kind: kind.to_string(), s, t: state[d] });
            }
        }
    }
    collision_events.sort_by(|a, b| a.s.total_cmp(&b.s));

    // Samples with physical reconstruction away from collisions.
    let energy = problem.energy();
    let mut samples = Vec::new();
    let idx = thin_indices(traj.samples.len(), r.get_usize("max-samples")?.max(2));
    let mut drift: Option<f64> = None;
    for i in idx {
        let (s, x) = &traj.samples[i];
        let g = problem.time_scale(&x[..d]);
        let reg = RegularizedState::from_vec(&x[..d], *s, x[d], energy);
        // Near a collision the flow is frozen and H is pure amplification of
        // the pinned Gamma; physical columns are reported away from it.
        let physical = if g >= 1e-3 {
            problem.to_physical(&reg).ok()
        } else {
            None
        };
        let (positions, velocities, h, a) = match physical {
            Some(p) => {
                let ints = integrals(&p, &masses).map_err(CliError::from)?;
                let dmax = (ints.total_energy - energy).abs();
                drift = Some(drift.unwrap_or(0.0).max(dmax));
                (
                    Some(p.positions.clone()),
                    Some(p.velocities.clone()),
                    Some(ints.total_energy),
                    Some(ints.angular_momentum[0]),
                )
            }
            None => (None, None, None, None),
        };
        samples.push(SampleDto {
            s: *s,
            t: x[d],
            state: x[..d].to_vec(),
            positions,
            velocities,
            energy: h,
            angular_momentum: a,
        });
    }
    if span.1 == span.0 {
        samples.clear(); // empty span: header-only output
    }

    let (termination, reason, code) = termination_strings(traj.termination, guard_hit);
    Ok((
        SimulateFile {
            schema_version: SCHEMA_VERSION,
            command: "simulate".into(),
            config: r.echo(),
            termination,
            reason,
            events: collision_events,
            energy_drift_max: drift,
            diagnostics: None,
            samples,
        },
        code,
    ))
}

fn simulate_raw(r: &Resolver, tag: &str) -> Result<(SimulateFile, i32), CliError> {
    let (bodies, dim) = problem_layout(tag)?;
    let masses = MassVector::new(masses_for(r, tag)?).map_err(CliError::from)?;
    let ic = parse_ic(r, bodies, dim)?;
    let state = match (ic, tag) {
        (Some(s), _) => s,
        (None, "col2bp") => {
            // Rest at the outer turning point of the requested energy.
            let e = if r.get("energy").is_empty() { -1.0 } else { r.get_f64("energy")? };
            if e >= 0.0 {
                return Err(CliError::from(schubart_core::Error::NonNegativeEnergy(e)));
            }
            let (m1, m2) = (masses.get(0), masses.get(1));
            let x_max = -m1 * m2 / e;
            let total = m1 + m2;
            PhaseState::new(
                1,
                vec![-m2 * x_max / total, m1 * x_max / total],
                vec![0.0, 0.0],
                0.0,
            )
            .map_err(CliError::from)?
        }
        (None, _) => return Err(CliError::usage(format!("raw {tag} requires --ic"))),
    };

    let t_final = if r.get("t-final").is_empty() { 10.0 } else { r.get_f64("t-final")? };
    let cfg = integrator_config(r)?;
    let rhs = |_s: f64, x: &[f64], dx: &mut [f64]| nbody_rhs(&masses, dim, x, dx);
    let traj =
        schubart_core::integrate::integrate(&rhs, &pack_state(&state), (0.0, t_final), &cfg)
            .map_err(CliError::from)?;

    let ints0 = integrals(&state, &masses).map_err(CliError::from)?;
    let mut samples = Vec::new();
    let mut pairs = Vec::new();
    let mut drift: f64 = 0.0;
    for i in thin_indices(traj.samples.len(), r.get_usize("max-samples")?.max(2)) {
        let (t, x) = &traj.samples[i];
        let ps = unpack_state(dim, x, *t);
        match integrals(&ps, &masses) {
            Ok(ints) => {
                drift = drift.max((ints.total_energy - ints0.total_energy).abs());
                samples.push(SampleDto {
                    s: *t,
                    t: *t,
                    state: x.clone(),
                    positions: Some(ps.positions.clone()),
                    velocities: Some(ps.velocities.clone()),
                    energy: Some(ints.total_energy),
                    angular_momentum: Some(ints.angular_momentum[0]),
                });
                pairs.push((ps, ints));
            }
            Err(_) => samples.push(SampleDto {
                s: *t,
                t: *t,
                state: x.clone(),
                positions: None,
                velocities: None,
                energy: None,
                angular_momentum: None,
            }),
        }
    }
    if t_final == 0.0 {
        samples.clear();
    }
    let diagnostics = singularity_diagnostics(&pairs, &DiagnosticsConfig::default())
        .ok()
        .map(|v| format!("{v:?}"));

    let (termination, reason, code) = termination_strings(traj.termination, false);
    Ok((
        SimulateFile {
            schema_version: SCHEMA_VERSION,
            command: "simulate".into(),
            config: r.echo(),
            termination,
            reason,
            events: Vec::new(),
            energy_drift_max: Some(drift),
            diagnostics,
            samples,
        },
        code,
    ))
}

// --------------------------------------------------------------- find-orbit

pub fn cmd_find_orbit(args: &CliArgs) -> Result<i32, CliError> {
    let mut r = Resolver::new(&[
        ("problem", "col3bp"),
        ("masses", ""),
        ("m", "1"),
        ("energy", "-1"),
        ("rel-tol", "1e-10"),
        ("abs-tol", "1e-12"),
        ("format", "json"),
        ("out", ""),
    ]);
    args.resolve(&mut r)?;
    require_json(&r)?;
    let energy = r.get_f64("energy")?;
    let orbit = match r.get("problem") {
        "col3bp" => {
            let masses = r.get_f64_list("masses")?;
            if masses.len() != 3 {
                return Err(CliError::usage("col3bp needs --masses m1,m2,m3".into()));
            }
            schubart_orbit([masses[0], masses[1], masses[2]], energy)
        }
        "cols4bp" => cols4bp_orbit(r.get_f64("m")?, energy),
        "pps4bp-collinear" => pps4bp_collinear_orbit(r.get_f64("m")?, energy),
        "pps4bp-sbc" => pps4bp_sbc_orbit(r.get_f64("m")?, energy),
        other => return Err(CliError::usage(format!("unknown orbit problem {other:?}"))),
    }
    .map_err(CliError::from)?;

    let file = OrbitFile::from_orbit(&orbit, r.echo())?;
    emit(out_path(&r).as_deref(), &to_json_string(&file)?)?;
    Ok(0)
}

// ---------------------------------------------------------------- stability

pub fn cmd_stability(args: &CliArgs, orbit_path: &Path) -> Result<i32, CliError> {
    let mut r = Resolver::new(&[
        ("rel-tol", "1e-10"),
        ("abs-tol", "1e-12"),
        ("modulus-tol", "1e-3"),
        ("format", "json"),
        ("out", ""),
    ]);
    args.resolve(&mut r)?;
    require_json(&r)?;
    let text = std::fs::read_to_string(orbit_path)
        .map_err(|e| CliError::usage(format!("cannot read {}: {e}", orbit_path.display())))?;
    let file: OrbitFile = serde_json::from_str(&text)
        .map_err(|e| CliError::usage(format!("invalid orbit file: {e}")))?;
    let orbit = file.to_orbit()?;
    if orbit.residual > 1e-9 {
        return Err(CliError::usage(format!(
            "orbit residual {:e} exceeds the solver tolerance; refusing to analyze",
            orbit.residual
        )));
    }
    let opts = stability_options(&r)?;
    let report = stability_report_refined(&orbit, &opts).map_err(CliError::from)?;
    let out = StabilityFile::from_report(&report, r.echo());
    emit(out_path(&r).as_deref(), &to_json_string(&out)?)?;
    Ok(0)
}

// -------------------------------------------------------------------- sweep

#[derive(Serialize)]
struct SweepRowDto {
    m: f64,
    classification: String,
    max_nontrivial_modulus: Option<f64>,
    nontrivial: Vec<crate::dto::EigenvalueDto>,
}

#[derive(Serialize)]
struct SweepFile {
    schema_version: u32,
    command: String,
    config: BTreeMap<String, String>,
    rows: Vec<SweepRowDto>,
}

fn family_kind(tag: &str) -> Result<OrbitKind, CliError> {
    tag.parse::<OrbitKind>().map_err(CliError::from)
}

pub fn cmd_sweep(args: &CliArgs) -> Result<i32, CliError> {
    let mut r = Resolver::new(&[
        ("problem", "cols4bp"),
        ("m-range", ""),
        ("step", "0.25"),
        ("rel-tol", "1e-10"),
        ("abs-tol", "1e-12"),
        ("modulus-tol", "1e-3"),
        ("jobs", "0"),
        ("format", "csv"),
        ("out", ""),
    ]);
    args.resolve(&mut r)?;
    let kind = family_kind(r.get("problem"))?;
    let range = r.get_f64_list("m-range")?;
    if range.len() != 2 || !(range[0] < range[1]) {
        return Err(CliError::usage("m-range must be `lo,hi` with lo < hi".into()));
    }
    let step = r.get_f64("step")?;
    if !(step > 0.0) {
        return Err(CliError::usage("step must be positive".into()));
    }
    let mut grid = Vec::new();
    let mut m = range[0];
    while m <= range[1] + 1e-12 {
        grid.push(m.min(range[1]));
        m += step;
    }
    if *grid.last().unwrap() < range[1] - 1e-12 {
        grid.push(range[1]);
    }

    let opts = stability_options(&r)?;
    let jobs = r.get_usize("jobs")?;
    let rows = with_jobs(jobs, || sweep(kind, &grid, &opts, jobs != 1)).map_err(CliError::from)?;

    let dto_rows: Vec<SweepRowDto> = rows
        .iter()
        .map(|row| match &row.report {
            Some(rep) => SweepRowDto {
                m: row.m,
                classification: rep.classification.to_string(),
                max_nontrivial_modulus: Some(rep.max_nontrivial_modulus()),
                nontrivial: rep
                    .nontrivial
                    .iter()
                    .map(|l| crate::dto::EigenvalueDto { re: l.re, im: l.im, modulus: l.norm() })
                    .collect(),
            },
            None => SweepRowDto {
                m: row.m,
                classification: "absent".into(),
                max_nontrivial_modulus: None,
                nontrivial: Vec::new(),
            },
        })
        .collect();

    let payload = match r.get("format") {
        "json" => to_json_string(&SweepFile {
            schema_version: SCHEMA_VERSION,
            command: "sweep".into(),
            config: r.echo(),
            rows: dto_rows,
        })?,
        "csv" => {
            let mut out = String::new();
            for (k, v) in r.echo() {
                out.push_str(&format!("# {k} = {v}\n"));
            }
            out.push_str("m,classification,max_nontrivial_modulus,nontrivial_moduli\n");
            for row in &dto_rows {
                let max = row
                    .max_nontrivial_modulus
                    .map(fmt17)
                    .unwrap_or_default();
                let moduli: Vec<String> =
                    row.nontrivial.iter().map(|e| fmt17(e.modulus)).collect();
                out.push_str(&format!(
                    "{},{},{},{}\n",
                    fmt17(row.m),
                    row.classification,
                    max,
                    moduli.join(";")
                ));
            }
            out
        }
        other => return Err(CliError::usage(format!("unknown format {other:?}"))),
    };
    emit(out_path(&r).as_deref(), &payload)?;
    Ok(0)
}

// ----------------------------------------------------------------- boundary

#[derive(Serialize)]
struct BoundaryFile {
    schema_version: u32,
    command: String,
    config: BTreeMap<String, String>,
    m_star: f64,
    bracket: [f64; 2],
    lo_classification: String,
    hi_classification: String,
}

pub fn cmd_boundary(args: &CliArgs) -> Result<i32, CliError> {
    let mut r = Resolver::new(&[
        ("problem", "cols4bp"),
        ("bracket", ""),
        ("rel-tol", "1e-10"),
        ("abs-tol", "1e-12"),
        ("modulus-tol", "1e-3"),
        ("format", "json"),
        ("out", ""),
    ]);
    args.resolve(&mut r)?;
    require_json(&r)?;
    let kind = family_kind(r.get("problem"))?;
    let bracket = r.get_f64_list("bracket")?;
    if bracket.len() != 2 {
        return Err(CliError::usage("bracket must be `lo,hi`".into()));
    }
    let opts = stability_options(&r)?;
    let result = find_boundary(kind, (bracket[0], bracket[1]), &opts).map_err(CliError::from)?;
    let file = BoundaryFile {
        schema_version: SCHEMA_VERSION,
        command: "boundary".into(),
        config: r.echo(),
        m_star: result.m_star,
        bracket: [result.bracket.0, result.bracket.1],
        lo_classification: result.lo_classification.to_string(),
        hi_classification: result.hi_classification.to_string(),
    };
    emit(out_path(&r).as_deref(), &to_json_string(&file)?)?;
    Ok(0)
}

// ------------------------------------------------------------------ compare

#[derive(Serialize)]
struct CompareRowDto {
    closest_approach: f64,
    method: String,
    completed: bool,
    energy_drift: f64,
    steps: usize,
    wall_seconds: Option<f64>,
}

#[derive(Serialize)]
struct CompareFile {
    schema_version: u32,
    command: String,
    config: BTreeMap<String, String>,
    rows: Vec<CompareRowDto>,
}

pub fn cmd_compare(args: &CliArgs) -> Result<i32, CliError> {
    let mut r = Resolver::new(&[
        ("problem", "col2bp"),
        ("masses", "1,1"),
        ("energy", "-0.5"),
        ("approaches", "1,1e-2,1e-4,1e-6"),
        ("rel-tol", "1e-10"),
        ("timings", "false"),
        ("format", "json"),
        ("out", ""),
    ]);
    args.resolve(&mut r)?;
    require_json(&r)?;
    if r.get("problem") != "col2bp" {
        return Err(CliError::usage("compare supports the two-body problem only".into()));
    }
    let masses = r.get_f64_list("masses")?;
    if masses.len() != 2 {
        return Err(CliError::usage("compare needs two masses".into()));
    }
    let scenario = CompareScenario {
        m1: masses[0],
        m2: masses[1],
        energy: r.get_f64("energy")?,
        approaches: r.get_f64_list("approaches")?,
        rel_tol: r.get_f64("rel-tol")?,
        ..Default::default()
    };
    let include_timings = r.get("timings") == "true";
    let rows = run_compare(&scenario).map_err(CliError::from)?;
    let file = CompareFile {
        schema_version: SCHEMA_VERSION,
        command: "compare".into(),
        config: r.echo(),
        rows: rows
            .iter()
            .map(|row| CompareRowDto {
                closest_approach: row.closest_approach,
                method: row.method.to_string(),
                completed: row.completed,
                energy_drift: row.energy_drift,
                steps: row.steps,
                wall_seconds: include_timings.then_some(row.wall_seconds),
            })
            .collect(),
    };
    emit(out_path(&r).as_deref(), &to_json_string(&file)?)?;
    Ok(0)
}

// -------------------------------------------------------------- demo-col2bp

#[derive(Serialize)]
struct DemoFile {
    schema_version: u32,
    command: String,
    config: BTreeMap<String, String>,
    omega: f64,
    w_max: f64,
    collision_velocity: f64,
    s_period: f64,
    physical_period: f64,
    kepler_period_oracle: f64,
    collisions_integrated: usize,
    closed_form_max_error: f64,
    bracket_residual_equation_of_motion: f64,
    bracket_residual_energy_relation: f64,
}

pub fn cmd_demo_col2bp(args: &CliArgs) -> Result<i32, CliError> {
    let mut r = Resolver::new(&[
        ("masses", "1,1"),
        ("energy", "-1"),
        ("rel-tol", "1e-12"),
        ("abs-tol", "1e-14"),
        ("format", "json"),
        ("out", ""),
    ]);
    args.resolve(&mut r)?;
    require_json(&r)?;
    let masses = r.get_f64_list("masses")?;
    if masses.len() != 2 {
        return Err(CliError::usage("demo needs two masses".into()));
    }
    let energy = r.get_f64("energy")?;
    let cf = col2bp_solve(masses[0], masses[1], energy).map_err(CliError::from)?;
    let chart = cf.chart();
    let collisions = 10usize;
    let s_end = collisions as f64 * cf.s_between_collisions();
    let rhs = schubart_core::regularize::rhs_with_time_closure::<_, 2>(&chart);
    let cfg = integrator_config(&r)?;
    let mut x0 = chart.collision_state().to_vec();
    x0.push(0.0);
    let traj = schubart_core::integrate::integrate(&rhs, &x0, (0.0, s_end), &cfg)
        .map_err(CliError::from)?;
    traj.ensure_completed().map_err(CliError::from)?;

    let mut max_err: f64 = 0.0;
    let mut states = Vec::new();
    for i in 0..=400 {
        let s = s_end * i as f64 / 400.0;
        let x = traj.eval(s).map_err(CliError::from)?;
        max_err = max_err
            .max((x[0] - cf.w(s)).abs())
            .max((chart.w_dot_from_momentum(x[1]) - cf.w_dot(s)).abs())
            .max((x[2] - cf.t(s)).abs());
        states.push([x[0], x[1]]);
    }
    let residuals = verify_bracket_identities(&chart, &states);

    let a = masses[0] * masses[1] / (-2.0 * energy);
    let kepler = std::f64::consts::TAU * (a * a * a / (masses[0] + masses[1])).sqrt();
    let file = DemoFile {
        schema_version: SCHEMA_VERSION,
        command: "demo-col2bp".into(),
        config: r.echo(),
        omega: cf.omega,
        w_max: cf.w_max,
        collision_velocity: cf.collision_velocity(),
        s_period: cf.s_period(),
        physical_period: cf.physical_period(),
        kepler_period_oracle: kepler,
        collisions_integrated: collisions,
        closed_form_max_error: max_err,
        bracket_residual_equation_of_motion: residuals.equation_of_motion,
        bracket_residual_energy_relation: residuals.energy_relation,
    };
    emit(out_path(&r).as_deref(), &to_json_string(&file)?)?;
    Ok(0)
}
