//! Scene files, scenario builders, the simulation driver and run logs.
//!
//! Scene files are line-oriented: `[kind name]` section headers followed by
//! `key = value` lines, `#` comments, SI units and radians. Numbers may be
//! written as products and quotients involving `pi` (`2*pi`, `-pi/2`).
//!
//! | section | keys |
//! |---|---|
//! | `[scene]` | `name`, `duration` (required), `gravity`, `contact_model` = `point`\|`patch` |
//! | `[stepper]` | `dt`, `theta`, `theta_vq`, `newton_tolerance`, `newton_max_iterations`, `regularization_floor`, `contact_margin`, `bias_scale`, `solver_tolerance`, `solver_max_iterations`, `solver_epsilon` |
//! | `[friction]` | `default` |
//! | `[friction_pair]` | `a`, `b`, `mu` (repeatable) |
//! | `[material NAME]` | `youngs_modulus`, `shear_modulus`, `density`, `rayleigh_alpha`, `rayleigh_beta` |
//! | `[rod NAME]` | `material`, `section` = `circular R`\|`rectangular W H`, `curve`, curve keys, `rest` = `initial`\|`straight`, `self_collision`, `velocity` |
//! | `[body NAME]` | `shape` = `sphere R`\|`capsule R H`\|`box X Y Z`\|`halfspace`, `position`, `orientation` (w x y z), `motion` = `dynamic`\|`fixed`\|`kinematic`, `mass`, `linear_velocity`, `angular_velocity`, `p_max`, `resolution` |
//! | `[controller NAME]` | `type` = `node_pd`\|`node_force`\|`body_pd`\|`clamp`, `rod`/`body`, `node`, `kp`, `kd`, `target`, `target_velocity`, `force`, `ramp_time`, `twist` |
//! | `[output]` | `format` = `csv`\|`jsonl`, `log_contacts`, `probes` (controller names) |
//!
//! Curve keys: `straight` takes `start end segments`; `arc` takes
//! `center radius axis reference angle_start angle_end segments`; `ring`
//! takes `center radius axis reference segments`; `helix` takes the arc keys
//! plus `pitch` (rise per radian) and `tail_segments`; `polyline` takes
//! `points` (`x y z; x y z; ...`) and `closed`. Negative node indices count
//! from the end of the rod; a clamp with `node = all` holds the whole rod.

mod document;
mod export;
mod parse;
mod print;
mod run;
mod scenarios;
mod spec;

use thiserror::Error;

use crate::stepper::StepperError;

pub use document::{Diagnostic, Document, Entry, Section};
pub use export::{export_log, read_csv, read_jsonl, write_csv, write_jsonl, CsvLog, CsvRow, CSV_FIXED_COLUMNS};
pub use parse::{parse_f64, parse_scene, scene_from_document};
pub use print::{fmt_f64, print_scene, scene_to_document};
pub use run::{run_simulation, Energies, FailureRecord, Progress, RunLog, RunSummary, StepRecord};
pub use scenarios::{build_scenario, capstan_tensions, ScenarioParams, SCENARIOS};
pub use spec::{
    BodySpec, ControllerKind, ControllerSpec, CurveSpec, FrictionPair, FrictionSpec, LogFormat, MaterialSpec,
    MotionKind, OutputSpec, RodSpec, SceneSpec,
};

fn join(d: &[Diagnostic]) -> String {
    d.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("\n")
}

#[derive(Debug, Error)]
pub enum SceneError {
    #[error("scene syntax error:\n{}", join(.0))]
    Parse(Vec<Diagnostic>),
    #[error("invalid scene:\n{}", join(.0))]
    Validation(Vec<Diagnostic>),
    #[error("unknown scenario `{0}` (known: capstan, ring_chain, overhand_knot, sphere_on_plane)")]
    UnknownScenario(String),
    #[error("{0}")]
    Io(#[from] std::io::Error),
    #[error("malformed log: {0}")]
    Log(String),
    #[error("step {step} failed: {source}")]
    StepFailure {
        step: usize,
        #[source]
        source: StepperError,
        /// Everything recorded up to the failure, ending in a failure record.
        log: Box<RunLog>,
    },
}

impl From<StepperError> for SceneError {
    fn from(e: StepperError) -> Self {
        SceneError::Validation(vec![Diagnostic::new(0, "", e.to_string())])
    }
}
