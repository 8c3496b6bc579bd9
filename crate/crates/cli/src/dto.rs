//! On-disk record types. The JSON schema is versioned and kept separate from
//! the library types so files stay stable across internal refactors.

use crate::CliError;
use schubart_core::orbits::{OrbitKind, PeriodicOrbit};
use schubart_core::problems::CollisionEvent;
use schubart_core::regularize::RegularizedState;
use schubart_core::stability::StabilityReport;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct RegStateDto {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub s: f64,
    pub t: f64,
    pub energy: f64,
}

impl From<&RegularizedState> for RegStateDto {
    fn from(state: &RegularizedState) -> Self {
        RegStateDto {
            q: state.q.clone(),
            p: state.p.clone(),
            s: state.s,
            t: state.t,
            energy: state.energy,
        }
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EventDto {
    pub kind: String,
    pub s: f64,
    pub t: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct OrbitFile {
    pub schema_version: u32,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub kind: String,
    pub masses: Vec<f64>,
    pub mass_parameter: f64,
    pub energy: f64,
    pub initial: RegStateDto,
    pub period_s: f64,
    pub period_t: f64,
    pub itinerary: Vec<EventDto>,
    pub residual: f64,
    pub deck: [bool; 2],
    /// Angular momentum at the initial state; null for collinear charts
    /// where it vanishes identically.
    pub angular_momentum: Option<f64>,
}

impl OrbitFile {
    pub fn from_orbit(
        orbit: &PeriodicOrbit,
        config: BTreeMap<String, String>,
    ) -> Result<Self, CliError> {
        let problem = orbit.problem().map_err(CliError::from)?;
        let angular_momentum = problem.angular_momentum(&orbit.initial.to_vec());
        Ok(OrbitFile {
            schema_version: SCHEMA_VERSION,
            command: "find-orbit".into(),
            config,
            kind: orbit.kind.to_string(),
            masses: orbit.masses.clone(),
            mass_parameter: orbit.mass_parameter,
            energy: orbit.energy,
            initial: (&orbit.initial).into(),
            period_s: orbit.period_s,
            period_t: orbit.period_t,
            itinerary: orbit
                .itinerary
                .iter()
                .map(|e: &CollisionEvent| EventDto { kind: e.kind.to_string(), s: e.s, t: e.t })
                .collect(),
            residual: orbit.residual,
            deck: [orbit.deck.0, orbit.deck.1],
            angular_momentum,
        })
    }

    pub fn to_orbit(&self) -> Result<PeriodicOrbit, CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::usage(format!(
                "unsupported schema version {}",
                self.schema_version
            )));
        }
        let kind: OrbitKind = self.kind.parse().map_err(CliError::from)?;
        let mut itinerary = Vec::new();
        for e in &self.itinerary {
            itinerary.push(CollisionEvent {
                kind: e.kind.parse().map_err(CliError::from)?,
                s: e.s,
                t: e.t,
            });
        }
        Ok(PeriodicOrbit {
            kind,
            mass_parameter: self.mass_parameter,
            masses: self.masses.clone(),
            energy: self.energy,
            initial: RegularizedState {
                q: self.initial.q.clone(),
                p: self.initial.p.clone(),
                s: self.initial.s,
                t: self.initial.t,
                energy: self.initial.energy,
            },
            period_s: self.period_s,
            period_t: self.period_t,
            itinerary,
            residual: self.residual,
            deck: (self.deck[0], self.deck[1]),
        })
    }
}

#[derive(Debug, Serialize, Deserialize)]
pub struct EigenvalueDto {
    pub re: f64,
    pub im: f64,
    pub modulus: f64,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct StabilityFile {
    pub schema_version: u32,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub kind: String,
    pub mass_parameter: f64,
    pub energy: f64,
    pub determinant: f64,
    pub eigenvalues: Vec<EigenvalueDto>,
    pub nontrivial: Vec<EigenvalueDto>,
    pub classification: String,
    pub modulus_tolerance: f64,
    pub integrator_tol: f64,
}

impl StabilityFile {
    pub fn from_report(report: &StabilityReport, config: BTreeMap<String, String>) -> Self {
        let conv = |v: &[nalgebra::Complex<f64>]| -> Vec<EigenvalueDto> {
            v.iter()
                .map(|l| EigenvalueDto { re: l.re, im: l.im, modulus: l.norm() })
                .collect()
        };
        StabilityFile {
            schema_version: SCHEMA_VERSION,
            command: "stability".into(),
            config,
            kind: report.kind.to_string(),
            mass_parameter: report.mass_parameter,
            energy: report.energy,
            determinant: report.determinant,
            eigenvalues: conv(&report.eigenvalues),
            nontrivial: conv(&report.nontrivial),
            classification: report.classification.to_string(),
            modulus_tolerance: report.modulus_tolerance,
            integrator_tol: report.integrator_tol,
        }
    }
}
