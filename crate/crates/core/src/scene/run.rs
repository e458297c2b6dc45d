use std::time::{Duration, Instant};

use serde::{Deserialize, Serialize};

use crate::math::Vec3;
use crate::rod::elastic_energy;
use crate::stepper::{ContactRecord, Simulator, SolverStats, StepReport, System};

use super::spec::SceneSpec;
use super::SceneError;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Energies {
    pub stretch: f64,
    pub twist: f64,
    pub bend: f64,
    pub kinetic: f64,
    pub gravity: f64,
}

impl Energies {
    fn of(system: &System) -> Result<Self, SceneError> {
        let mut e = Energies { kinetic: system.kinetic_energy()?, gravity: system.potential_energy()?, ..Default::default() };
        for r in &system.rods {
            let el = elastic_energy(&r.state, &r.params).map_err(crate::stepper::StepperError::from)?;
            e.stretch += el.stretch;
            e.twist += el.twist;
            e.bend += el.bend;
        }
        Ok(e)
    }
}

/// State at the end of a step (step 0 is the initial state).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: usize,
    pub time: f64,
    /// Generalized positions, rods first, then per body quaternion `(w, x, y, z)` and position.
    pub q: Vec<f64>,
    /// Velocities, rods first, then per body angular and linear velocity.
    pub v: Vec<f64>,
    pub contact_count: usize,
    /// Smallest signed distance among this step's contacts.
    pub min_phi: Option<f64>,
    /// Per-contact detail; empty unless contacts are logged.
    pub contacts: Vec<ContactRecord>,
    pub newton_iterations: usize,
    pub solver: Option<SolverStats>,
    pub energy: Energies,
    /// Force of each probe controller during the step.
    pub probes: Vec<Vec3>,
}

impl StepRecord {
    pub fn max_penetration(&self) -> f64 {
        self.min_phi.map_or(0.0, |p| (-p).max(0.0))
    }

    pub fn max_speed(&self) -> f64 {
        self.v.iter().fold(0.0f64, |m, x| m.max(x.abs()))
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub steps: usize,
    pub final_time: f64,
    pub max_penetration: f64,
    pub newton_iterations: usize,
    pub solver_iterations: usize,
}

/// Machine-readable reason a run stopped early.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureRecord {
    /// Index of the step that failed.
    pub step: usize,
    /// Time at the start of that step.
    pub time: f64,
    pub reason: String,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RunLog {
    pub scene: String,
    pub probe_names: Vec<String>,
    pub records: Vec<StepRecord>,
    pub summary: RunSummary,
    pub failure: Option<FailureRecord>,
    /// Not exported, so logs of identical runs are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
}

impl RunLog {
    /// Mean norm of each probe's force over records with `time >= from`.
    pub fn mean_probe_forces(&self, from: f64) -> Vec<f64> {
        let tail: Vec<&StepRecord> = self.records.iter().filter(|r| r.step > 0 && r.time >= from).collect();
        (0..self.probe_names.len())
            .map(|k| tail.iter().map(|r| r.probes[k].norm()).sum::<f64>() / tail.len().max(1) as f64)
            .collect()
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Progress {
    pub step: usize,
    pub steps: usize,
    pub time: f64,
}

fn record(
    step: usize,
    sim: &Simulator,
    report: Option<&StepReport>,
    probes: &[usize],
    log_contacts: bool,
) -> Result<StepRecord, SceneError> {
    let s = &sim.system;
    Ok(StepRecord {
        step,
        time: s.time,
        q: s.positions(),
        v: s.velocity(),
        contact_count: report.map_or(0, |r| r.contacts.len()),
        min_phi: report.and_then(|r| r.min_phi()),
        contacts: match report {
            Some(r) if log_contacts => r.contacts.clone(),
            _ => Vec::new(),
        },
        newton_iterations: report.map_or(0, |r| r.newton_iterations),
        solver: report.and_then(|r| r.solver),
        energy: Energies::of(s)?,
        probes: probes.iter().map(|&i| report.map_or(Vec3::zeros(), |r| r.controller_forces[i])).collect(),
    })
}

/// Simulate `spec` for its full duration.
///
/// On a step failure the returned [`SceneError::StepFailure`] carries the log
/// up to the last good step, ending with a failure record.
pub fn run_simulation(spec: &SceneSpec, progress: &mut dyn FnMut(&Progress)) -> Result<RunLog, SceneError> {
    let start = Instant::now();
    let system = spec.build_system()?;
    let probes = spec.probe_indices()?;
    let steps = spec.step_count();
    let mut sim = Simulator::new(system, spec.stepper)?;
    let mut log = RunLog { scene: spec.name.clone(), probe_names: spec.output.probes.clone(), ..Default::default() };
    log.records.reserve(steps + 1);
    log.records.push(record(0, &sim, None, &probes, spec.output.log_contacts)?);
    for k in 1..=steps {
        match sim.step() {
            Ok(report) => {
                let r = record(k, &sim, Some(&report), &probes, spec.output.log_contacts)?;
                let sum = &mut log.summary;
                sum.max_penetration = sum.max_penetration.max(r.max_penetration());
                sum.newton_iterations += r.newton_iterations;
                sum.solver_iterations += r.solver.map_or(0, |s| s.iterations);
                log.records.push(r);
            }
            Err(source) => {
                log::error!("{}: step {k} failed: {source}", spec.name);
                log.summary.steps = k - 1;
                log.summary.final_time = sim.system.time;
                log.failure = Some(FailureRecord { step: k, time: sim.system.time, reason: source.to_string() });
                log.wall_time = start.elapsed();
                return Err(SceneError::StepFailure { step: k, source, log: Box::new(log) });
            }
        }
        if k % 100 == 0 || k == steps {
            log::debug!("{}: step {k}/{steps} t = {:.4}", spec.name, sim.system.time);
        }
        progress(&Progress { step: k, steps, time: sim.system.time });
    }
    log.summary.steps = steps;
    log.summary.final_time = sim.system.time;
    log.wall_time = start.elapsed();
    Ok(log)
}
