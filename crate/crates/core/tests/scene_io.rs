use std::f64::consts::PI;
use std::path::PathBuf;

use filament_sim::scene::{
    build_scenario, parse_scene, print_scene, read_csv, read_jsonl, run_simulation, write_csv, write_jsonl,
    ControllerKind, CurveSpec, SceneError, ScenarioParams, SCENARIOS, CSV_FIXED_COLUMNS,
};

fn shipped(name: &str) -> String {
    let path = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenes").join(format!("{name}.scene"));
    std::fs::read_to_string(path).unwrap()
}

fn params(kv: &[(&str, &str)]) -> ScenarioParams {
    kv.iter().map(|(k, v)| (k.to_string(), v.to_string())).collect()
}

#[test]
fn shipped_scenes_match_the_scenarios() {
    for name in SCENARIOS {
        let parsed = parse_scene(&shipped(name)).unwrap_or_else(|e| panic!("{name}: {e}"));
        assert_eq!(parsed, build_scenario(name, &ScenarioParams::new()).unwrap(), "{name}");
    }
}

#[test]
fn print_then_parse_is_identity() {
    let variants = [
        ("capstan", params(&[("phi", "0.4*pi"), ("mu", "0.35")])),
        ("ring_chain", params(&[("n", "3")])),
        ("overhand_knot", ScenarioParams::new()),
        ("sphere_on_plane", params(&[("model", "patch")])),
    ];
    for (name, p) in variants {
        let spec = build_scenario(name, &p).unwrap();
        let text = print_scene(&spec);
        assert_eq!(parse_scene(&text).unwrap(), spec, "{name}");
        assert_eq!(print_scene(&parse_scene(&text).unwrap()), text);
    }
}

#[test]
fn capstan_scene_declares_the_setup() {
    let spec = parse_scene(&shipped("capstan")).unwrap();
    assert_eq!(spec.friction.default, 0.2);
    let CurveSpec::Helix { angle_start, angle_end, .. } = spec.rods[0].curve else { panic!("not a helix") };
    assert!((angle_end - angle_start - 2.0 * PI).abs() < 1e-12);
    let gains: Vec<_> = spec
        .controllers
        .iter()
        .filter_map(|c| match c.kind {
            ControllerKind::NodePd { kp, kd, .. } => Some((kp, kd)),
            _ => None,
        })
        .collect();
    assert_eq!(gains, vec![(200.0, 2.0)]);
    assert_eq!(spec.output.probes, vec!["anchor".to_string(), "pull".to_string()]);
}

#[test]
fn unknown_scenario_and_parameters_are_rejected() {
    assert!(matches!(build_scenario("trebuchet", &ScenarioParams::new()), Err(SceneError::UnknownScenario(_))));
    assert!(matches!(build_scenario("capstan", &params(&[("colour", "red")])), Err(SceneError::Validation(_))));
    assert!(matches!(build_scenario("capstan", &params(&[("phi", "lots")])), Err(SceneError::Validation(_))));
}

#[test]
fn runs_are_bitwise_deterministic() {
    let mut spec = build_scenario("capstan", &params(&[("phi", "0.4*pi")])).unwrap();
    spec.duration = 0.05;
    spec.output.log_contacts = true;
    let dump = || {
        let log = run_simulation(&spec, &mut |_| {}).unwrap();
        let mut buf = Vec::new();
        write_jsonl(&log, &mut buf).unwrap();
        buf
    };
    let a = dump();
    assert!(a == dump(), "two runs of the same scene produced different logs");
    assert_eq!(read_jsonl(a.as_slice()).unwrap().records.len(), 51);
}

#[test]
fn capstan_csv_exposes_probe_columns() {
    let mut spec = build_scenario("capstan", &params(&[("phi", "0.4*pi")])).unwrap();
    spec.duration = 0.2;
    let log = run_simulation(&spec, &mut |_| {}).unwrap();
    let mut buf = Vec::new();
    write_csv(&log, &mut buf).unwrap();
    let csv = read_csv(buf.as_slice()).unwrap();
    assert_eq!(&csv.columns[..CSV_FIXED_COLUMNS.len()], CSV_FIXED_COLUMNS);
    assert_eq!(csv.rows.len(), log.records.len());
    let fx = csv.column("pull_fx").unwrap();
    for (row, rec) in fx.iter().zip(&log.records) {
        assert_eq!(row.unwrap(), rec.probes[1].x);
    }
    assert!(csv.rows.iter().all(|r| r.status == "ok"));
}

#[test]
fn zero_gravity_rod_at_rest_stays_put() {
    let text = "
[scene]
duration = 0.1
gravity = 0 0 0

[material steel]
youngs_modulus = 2e11
shear_modulus = 8e10
density = 7850

[rod wire]
material = steel
section = circular 1e-3
curve = arc
center = 0 0 0
radius = 0.1
axis = 0 0 1
reference = 1 0 0
angle_start = 0
angle_end = pi
segments = 12
";
    let spec = parse_scene(text).unwrap();
    let log = run_simulation(&spec, &mut |_| {}).unwrap();
    let q0 = &log.records[0].q;
    for r in &log.records {
        assert_eq!(&r.q, q0, "step {}", r.step);
    }
}
