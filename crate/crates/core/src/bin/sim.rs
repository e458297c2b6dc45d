use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

use clap::{Parser, Subcommand, ValueEnum};
use filament_sim::scene::{
    build_scenario, export_log, parse_scene, print_scene, run_simulation, scene_from_document, Document, LogFormat,
    RunLog, SceneError, SceneSpec, ScenarioParams,
};
use filament_sim::stepper::ContactModel;

#[derive(Parser)]
#[command(name = "sim", about = "Simulate elastic rods in frictional contact", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Csv,
    Jsonl,
}

#[derive(Clone, Copy, ValueEnum)]
enum Model {
    Point,
    Patch,
}

#[derive(clap::Args)]
struct Overrides {
    /// Time step (s).
    #[arg(long)]
    dt: Option<f64>,
    /// Simulated duration (s).
    #[arg(long)]
    duration: Option<f64>,
    #[arg(long, value_enum)]
    contact_model: Option<Model>,
    #[arg(long)]
    theta: Option<f64>,
    #[arg(long)]
    theta_vq: Option<f64>,
    /// Log file; defaults to `<scene name>.<format>`.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Keep per-contact detail in the log.
    #[arg(long)]
    log_contacts: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run a scene file.
    Run {
        scene: PathBuf,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run a built-in scenario (capstan, ring_chain, overhand_knot, sphere_on_plane).
    Scenario {
        name: String,
        /// Scenario parameter, `key=value`; repeatable.
        #[arg(long = "param", value_parser = key_value)]
        params: Vec<(String, String)>,
        /// Write the scene file to this path instead of running it.
        #[arg(long)]
        emit_scene: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Run variants of a scene file in parallel.
    Sweep {
        template: PathBuf,
        /// `section.key=v1,v2,...`, e.g. `friction.default=0.1,0.2` or
        /// `rod.rope.angle_end=pi,2*pi`; repeatable (all combinations run).
        #[arg(long, value_parser = key_value, required = true)]
        vary: Vec<(String, String)>,
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Directory for the per-variant logs.
        #[arg(long, default_value = ".")]
        out: PathBuf,
        #[arg(long, value_enum)]
        format: Option<Format>,
    },
}

fn key_value(s: &str) -> Result<(String, String), String> {
    let (k, v) = s.split_once('=').ok_or_else(|| format!("expected key=value, found `{s}`"))?;
    Ok((k.trim().to_string(), v.trim().to_string()))
}

fn to_format(f: Format) -> LogFormat {
    match f {
        Format::Csv => LogFormat::Csv,
        Format::Jsonl => LogFormat::Jsonl,
    }
}

fn extension(f: LogFormat) -> &'static str {
    match f {
        LogFormat::Csv => "csv",
        LogFormat::Jsonl => "jsonl",
    }
}

fn apply(spec: &mut SceneSpec, o: &Overrides) -> Result<(), SceneError> {
    if let Some(dt) = o.dt {
        spec.stepper.dt = dt;
    }
    if let Some(d) = o.duration {
        spec.duration = d;
    }
    if let Some(m) = o.contact_model {
        spec.contact_model = match m {
            Model::Point => ContactModel::Point,
            Model::Patch => ContactModel::Patch,
        };
    }
    if let Some(t) = o.theta {
        spec.stepper.theta = t;
    }
    if let Some(t) = o.theta_vq {
        spec.stepper.theta_vq = t;
    }
    if let Some(f) = o.format {
        spec.output.format = to_format(f);
    }
    spec.output.log_contacts |= o.log_contacts;
    // Re-validate through the text form so overrides get the parser's checks.
    *spec = parse_scene(&print_scene(spec))?;
    Ok(())
}

fn summarize(log: &RunLog, path: &Path) {
    println!(
        "{}: {} steps to t = {:.6} s, max penetration {:.3e} m, {:.2} s wall, log {}",
        log.scene,
        log.summary.steps,
        log.summary.final_time,
        log.summary.max_penetration,
        log.wall_time.as_secs_f64(),
        path.display()
    );
}

/// Run and write the log; on a step failure the partial log is still written.
fn run_and_export(spec: &SceneSpec, path: &Path) -> Result<RunLog, SceneError> {
    let steps = spec.step_count();
    let mut next = 0;
    let mut progress = |p: &filament_sim::scene::Progress| {
        if p.step * 10 >= next * steps {
            log::info!("{}: {}% (t = {:.3} s)", spec.name, 10 * next, p.time);
            next += 1;
        }
    };
    match run_simulation(spec, &mut progress) {
        Ok(log) => {
            export_log(&log, spec.output.format, path)?;
            Ok(log)
        }
        Err(SceneError::StepFailure { step, source, log }) => {
            export_log(&log, spec.output.format, path)?;
            Err(SceneError::StepFailure { step, source, log })
        }
        Err(e) => Err(e),
    }
}

fn exit_code(e: &SceneError) -> u8 {
    match e {
        SceneError::Parse(_) | SceneError::Validation(_) | SceneError::UnknownScenario(_) => 2,
        SceneError::StepFailure { .. } => 3,
        SceneError::Io(_) | SceneError::Log(_) => 1,
    }
}

fn default_out(spec: &SceneSpec, o: &Overrides) -> PathBuf {
    o.out.clone().unwrap_or_else(|| PathBuf::from(format!("{}.{}", spec.name, extension(spec.output.format))))
}

fn run(cli: Cli) -> Result<(), SceneError> {
    match cli.command {
        Command::Run { scene, overrides } => {
            let mut spec = parse_scene(&std::fs::read_to_string(&scene)?)?;
            apply(&mut spec, &overrides)?;
            let out = default_out(&spec, &overrides);
            summarize(&run_and_export(&spec, &out)?, &out);
        }
        Command::Scenario { name, params, emit_scene, overrides } => {
            let params: ScenarioParams = params.into_iter().collect();
            let mut spec = build_scenario(&name, &params)?;
            apply(&mut spec, &overrides)?;
            if let Some(path) = emit_scene {
                std::fs::write(path, print_scene(&spec))?;
                return Ok(());
            }
            let out = default_out(&spec, &overrides);
            summarize(&run_and_export(&spec, &out)?, &out);
        }
        Command::Sweep { template, vary, jobs, out, format } => {
            let doc = Document::parse(&std::fs::read_to_string(&template)?).map_err(SceneError::Parse)?;
            let variants = expand(&doc, &vary)?;
            std::fs::create_dir_all(&out)?;
            let stem = template.file_stem().map_or("scene".into(), |s| s.to_string_lossy().into_owned());
            let next = AtomicUsize::new(0);
            let worst = Mutex::new(None::<SceneError>);
            std::thread::scope(|s| {
                for _ in 0..jobs.max(1).min(variants.len()) {
                    s.spawn(|| loop {
                        let k = next.fetch_add(1, Ordering::SeqCst);
                        let Some((label, spec)) = variants.get(k) else { break };
                        let mut spec = spec.clone();
                        if let Some(f) = format {
                            spec.output.format = to_format(f);
                        }
                        let path = out.join(format!("{stem}_{label}.{}", extension(spec.output.format)));
                        match run_and_export(&spec, &path) {
                            Ok(log) => summarize(&log, &path),
                            Err(e) => {
                                eprintln!("{label}: {e}");
                                let mut w = worst.lock().unwrap();
                                if w.as_ref().is_none_or(|x| exit_code(x) < exit_code(&e)) {
                                    *w = Some(e);
                                }
                            }
                        }
                    });
                }
            });
            if let Some(e) = worst.into_inner().unwrap() {
                return Err(e);
            }
        }
    }
    Ok(())
}

/// Every combination of the varied values, labelled for file names.
fn expand(doc: &Document, vary: &[(String, String)]) -> Result<Vec<(String, SceneSpec)>, SceneError> {
    let mut docs = vec![(String::new(), doc.clone())];
    for (path, values) in vary {
        let (header, key) = match path.rsplit_once('.') {
            Some((h, k)) => (h.replace('.', " "), k.to_string()),
            None => return Err(bad_vary(path, "expected section.key")),
        };
        let mut grown = Vec::new();
        for (label, d) in &docs {
            for v in values.split(',').map(str::trim) {
                let mut d = d.clone();
                d.section_mut(&header).ok_or_else(|| bad_vary(path, "no such section"))?.set(&key, v);
                let tag: String = v.chars().map(|c| if c.is_ascii_alphanumeric() || c == '.' { c } else { '_' }).collect();
                let label = if label.is_empty() { format!("{key}-{tag}") } else { format!("{label}_{key}-{tag}") };
                grown.push((label, d));
            }
        }
        docs = grown;
    }
    docs.into_iter().map(|(l, d)| Ok((l, scene_from_document(&d)?))).collect()
}

fn bad_vary(path: &str, reason: &str) -> SceneError {
    SceneError::Validation(vec![filament_sim::scene::Diagnostic::new(0, path, reason)])
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("SIM_LOG", "warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
