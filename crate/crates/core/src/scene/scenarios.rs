use std::collections::BTreeMap;
use std::f64::consts::PI;

use crate::collision::ShapeKind;
use crate::math::Vec3;
use crate::rod::{CrossSection, RestShape};
use crate::stepper::{ContactModel, PressureSpec};

use super::document::Diagnostic;
use super::parse::parse_f64;
use super::run::RunLog;
use super::spec::{
    BodySpec, ControllerKind, ControllerSpec, CurveSpec, MaterialSpec, MotionKind, RodSpec, SceneSpec,
};
use super::SceneError;

/// Named scenario parameters, as given on the command line (`key=value`).
pub type ScenarioParams = BTreeMap<String, String>;

pub const SCENARIOS: [&str; 4] = ["capstan", "ring_chain", "overhand_knot", "sphere_on_plane"];

struct Params<'a> {
    given: &'a ScenarioParams,
    used: Vec<&'a str>,
    errors: Vec<Diagnostic>,
}

impl<'a> Params<'a> {
    fn f(&mut self, key: &'a str, default: f64) -> f64 {
        self.used.push(key);
        match self.given.get(key) {
            None => default,
            Some(v) => parse_f64(v).unwrap_or_else(|r| {
                self.errors.push(Diagnostic::new(0, key, r));
                default
            }),
        }
    }

    fn n(&mut self, key: &'a str, default: usize) -> usize {
        self.used.push(key);
        match self.given.get(key) {
            None => default,
            Some(v) => v.parse().unwrap_or_else(|_| {
                self.errors.push(Diagnostic::new(0, key, format!("expected a non-negative integer, found `{v}`")));
                default
            }),
        }
    }

    fn s(&mut self, key: &'a str, default: &'a str, options: &[&str]) -> String {
        self.used.push(key);
        let v = self.given.get(key).map_or(default, String::as_str);
        if !options.contains(&v) {
            self.errors.push(Diagnostic::new(0, key, format!("expected one of {}, found `{v}`", options.join(", "))));
            return default.into();
        }
        v.into()
    }

    fn finish(mut self, spec: SceneSpec) -> Result<SceneSpec, SceneError> {
        for k in self.given.keys() {
            if !self.used.contains(&k.as_str()) {
                self.errors.push(Diagnostic::new(0, k.clone(), "unknown scenario parameter"));
            }
        }
        if self.errors.is_empty() {
            spec.validate()?;
            Ok(spec)
        } else {
            Err(SceneError::Validation(self.errors))
        }
    }
}

/// A fully parameterized benchmark scene.
///
/// Unspecified parameters take documented defaults; unknown ones are rejected.
pub fn build_scenario(name: &str, params: &ScenarioParams) -> Result<SceneSpec, SceneError> {
    let mut p = Params { given: params, used: Vec::new(), errors: Vec::new() };
    let spec = match name {
        "capstan" => capstan(&mut p),
        "ring_chain" => ring_chain(&mut p),
        "overhand_knot" => overhand_knot(&mut p),
        "sphere_on_plane" => sphere_on_plane(&mut p),
        _ => return Err(SceneError::UnknownScenario(name.into())),
    };
    p.finish(spec)
}

fn material(name: &str, e: f64, g: f64, density: f64, alpha: f64) -> MaterialSpec {
    MaterialSpec {
        name: name.into(),
        youngs_modulus: e,
        shear_modulus: g,
        density,
        rayleigh_alpha: alpha,
        rayleigh_beta: 0.0,
    }
}

fn fixed_body(name: &str, shape: ShapeKind, position: Vec3) -> BodySpec {
    BodySpec {
        name: name.into(),
        shape,
        position,
        orientation: [1.0, 0.0, 0.0, 0.0],
        motion: MotionKind::Fixed,
        linear_velocity: Vec3::zeros(),
        angular_velocity: Vec3::zeros(),
        mass: 0.0,
        pressure: None,
    }
}

/// A rope wrapped around a fixed cylindrical post through angle `phi`. One
/// end is held by a PD controller, the other pulled along its tangent by a
/// force ramped over the whole run, so the rope slides quasi-statically and
/// the end forces approach `T₂ = T₁ e^{μφ}`.
///
/// The wrapped part is a helix whose pitch keeps the rope clear of itself
/// after a full turn; self-collision and gravity are off.
fn capstan(p: &mut Params) -> SceneSpec {
    let phi = p.f("phi", 2.0 * PI);
    let dphi = p.f("dphi", PI / 40.0);
    let mu = p.f("mu", 0.2);
    let post_radius = p.f("post_radius", 0.05);
    let r = p.f("rope_radius", 0.002);
    let force = p.f("force", 2.0);
    let kp = p.f("kp", 200.0);
    let kd = p.f("kd", 2.0);
    let duration = p.f("duration", 3.0);
    let dt = p.f("dt", 1e-3);
    let tails = p.n("tail_segments", 8);

    let rho = post_radius + r;
    let segments = ((phi / dphi).round() as usize).max(1);
    let a0 = -PI / 2.0;
    let a1 = a0 + segments as f64 * dphi;
    let pitch = 5.0 * r / (2.0 * PI);
    let tangent = Vec3::new(-rho * a1.sin(), rho * a1.cos(), pitch).normalize();

    let mut s = SceneSpec::new("capstan", duration);
    s.gravity = Vec3::zeros();
    s.stepper.dt = dt;
    s.friction.default = mu;
    s.materials.push(material("rope", 1e7, 1e7 / 3.0, 1000.0, 0.0));
    s.rods.push(RodSpec {
        name: "rope".into(),
        material: "rope".into(),
        section: CrossSection::Circular { radius: r },
        curve: CurveSpec::Helix {
            center: Vec3::zeros(),
            radius: rho,
            axis: Vec3::z(),
            reference: Vec3::x(),
            angle_start: a0,
            angle_end: a1,
            pitch,
            segments,
            tail_segments: tails,
        },
        rest: RestShape::Straight,
        self_collision: false,
        velocity: Vec3::zeros(),
    });
    s.bodies.push(fixed_body(
        "post",
        ShapeKind::Capsule { radius: post_radius, half_length: 0.1 },
        Vec3::zeros(),
    ));
    s.controllers.push(ControllerSpec {
        name: "anchor".into(),
        kind: ControllerKind::NodePd {
            rod: "rope".into(),
            node: 0,
            kp,
            kd,
            target: None,
            target_velocity: Vec3::zeros(),
        },
    });
    s.controllers.push(ControllerSpec {
        name: "pull".into(),
        kind: ControllerKind::NodeForce { rod: "rope".into(), node: -1, force: tangent * force, ramp_time: duration },
    });
    s.output.probes = vec!["anchor".into(), "pull".into()];
    s.output.log_contacts = false;
    s
}

/// Capstan end forces `(T₁, T₂)`: held-end and pulled-end probe force norms,
/// averaged over the final 20% of the run.
pub fn capstan_tensions(log: &RunLog) -> Option<(f64, f64)> {
    let last = log.records.last()?;
    let f = log.mean_probe_forces(0.8 * last.time);
    let t1 = f.get(log.probe_names.iter().position(|n| n == "anchor")?)?;
    let t2 = f.get(log.probe_names.iter().position(|n| n == "pull")?)?;
    Some((*t1, *t2))
}

/// A vertical chain of interlocked rings hanging from a fixed top ring.
/// Consecutive rings lie in perpendicular planes and start just touching.
fn ring_chain(p: &mut Params) -> SceneSpec {
    let n = p.n("n", 5).max(1);
    let radius = p.f("radius", 0.01);
    let r = p.f("section_radius", 1.25e-3);
    let segments = p.n("segments", 20);
    let mu = p.f("mu", 0.5);
    let damping = p.f("damping", 2.0);
    let duration = p.f("duration", 15.0);
    let dt = p.f("dt", 8e-4);

    let mut s = SceneSpec::new("ring_chain", duration);
    s.stepper.dt = dt;
    s.friction.default = mu;
    s.materials.push(material("ring", 1e7, 1e7 / 3.0, 500.0, damping));
    let spacing = 2.0 * radius - 2.0 * r;
    for k in 0..n {
        let axis = if k % 2 == 0 { Vec3::y() } else { Vec3::x() };
        s.rods.push(RodSpec {
            name: format!("ring{k}"),
            material: "ring".into(),
            section: CrossSection::Circular { radius: r },
            curve: CurveSpec::Ring {
                center: Vec3::new(0.0, 0.0, -(k as f64) * spacing),
                radius,
                axis,
                reference: Vec3::z(),
                segments,
            },
            rest: RestShape::Initial,
            self_collision: false,
            velocity: Vec3::zeros(),
        });
    }
    s.controllers.push(ControllerSpec {
        name: "hold".into(),
        kind: ControllerKind::Clamp { rod: "ring0".into(), node: None, twist: true },
    });
    s.output.log_contacts = false;
    s
}

/// An open overhand knot: a trefoil cut open at an outer lobe, with a
/// vertical ramp separating the cut ends and straight tangent tails. Both
/// tail ends are pulled apart by PD controllers tracking moving targets.
fn overhand_knot(p: &mut Params) -> SceneSpec {
    let scale = p.f("scale", 0.01);
    let r = p.f("rope_radius", 1.5e-3);
    let segment = p.f("segment_length", 4e-3);
    let tail_len = p.f("tail_length", 0.04);
    let speed = p.f("pull_speed", 0.05);
    let mu = p.f("mu", 0.3);
    let kp = p.f("kp", 50.0);
    let kd = p.f("kd", 1.0);
    let duration = p.f("duration", 0.5);
    let dt = p.f("dt", 1e-3);
    let margin = p.f("contact_margin", 2e-3);

    // Trefoil x = sin t + 2 sin 2t, y = cos t − 2 cos 2t, z = −sin 3t, opened
    // at the outer lobe t₀ = π/3 and lifted by a ramp of one rope diameter
    // per turn plus clearance.
    let t0 = PI / 3.0;
    let ramp = (4.0 * r + 2e-3) / (2.0 * PI);
    let at = |t: f64| {
        Vec3::new(t.sin() + 2.0 * (2.0 * t).sin(), t.cos() - 2.0 * (2.0 * t).cos(), -(3.0 * t).sin()) * scale
            + Vec3::new(0.0, 0.0, ramp * (t - t0 - PI))
    };
    // Arc-length resampling of the knot body.
    let fine: Vec<Vec3> = (0..=4000).map(|k| at(t0 + 2.0 * PI * k as f64 / 4000.0)).collect();
    let mut cum = vec![0.0];
    for w in fine.windows(2) {
        cum.push(cum.last().unwrap() + (w[1] - w[0]).norm());
    }
    let total = *cum.last().unwrap();
    let n_body = ((total / segment).round() as usize).max(3);
    let mut body = Vec::with_capacity(n_body + 1);
    let mut j = 0;
    for k in 0..=n_body {
        let target = total * k as f64 / n_body as f64;
        while j + 1 < cum.len() - 1 && cum[j + 1] < target {
            j += 1;
        }
        let w = ((target - cum[j]) / (cum[j + 1] - cum[j])).clamp(0.0, 1.0);
        body.push(fine[j] + (fine[j + 1] - fine[j]) * w);
    }
    let h = total / n_body as f64;
    let n_tail = ((tail_len / h).round() as usize).max(1);
    let t_start = (body[1] - body[0]).normalize();
    let t_end = (body[n_body] - body[n_body - 1]).normalize();
    let mut points: Vec<Vec3> = (1..=n_tail).rev().map(|k| body[0] - t_start * (k as f64 * h)).collect();
    points.extend(body.iter().copied());
    points.extend((1..=n_tail).map(|k| body[n_body] + t_end * (k as f64 * h)));

    let mut s = SceneSpec::new("overhand_knot", duration);
    s.gravity = Vec3::zeros();
    s.stepper.dt = dt;
    // Strands move about a rope radius per step while the knot springs
    // into shape; contacts are created early enough to stop them.
    s.stepper.contact_margin = margin;
    s.friction.default = mu;
    s.materials.push(material("rope", 1e7, 1e7 / 3.0, 1000.0, 0.0));
    s.rods.push(RodSpec {
        name: "rope".into(),
        material: "rope".into(),
        section: CrossSection::Circular { radius: r },
        curve: CurveSpec::Polyline { points: points.clone(), closed: false },
        rest: RestShape::Straight,
        self_collision: true,
        velocity: Vec3::zeros(),
    });
    for (name, node, pos, dir) in [("left", 0i64, points[0], -t_start), ("right", -1, *points.last().unwrap(), t_end)] {
        s.controllers.push(ControllerSpec {
            name: name.into(),
            kind: ControllerKind::NodePd {
                rod: "rope".into(),
                node,
                kp,
                kd,
                target: Some(pos),
                target_velocity: dir * speed,
            },
        });
    }
    s.output.probes = vec!["left".into(), "right".into()];
    s
}

/// A 1 kg sphere of radius 0.1 m on a fixed ground plane.
fn sphere_on_plane(p: &mut Params) -> SceneSpec {
    let model = p.s("model", "point", &["point", "patch"]);
    let radius = p.f("radius", 0.1);
    let mass = p.f("mass", 1.0);
    let height = p.f("height", 0.1);
    let mu = p.f("mu", 0.5);
    let p_max = p.f("p_max", 1e6);
    let resolution = p.n("resolution", 2) as u32;
    let duration = p.f("duration", 1.0);
    let dt = p.f("dt", 1e-3);

    let mut s = SceneSpec::new("sphere_on_plane", duration);
    s.stepper.dt = dt;
    s.friction.default = mu;
    let pressure = (model == "patch").then_some(PressureSpec { p_max, resolution });
    if pressure.is_some() {
        s.contact_model = ContactModel::Patch;
    }
    let mut ground = fixed_body("ground", ShapeKind::Halfspace, Vec3::zeros());
    ground.pressure = pressure;
    s.bodies.push(ground);
    s.bodies.push(BodySpec {
        motion: MotionKind::Dynamic,
        mass,
        pressure,
        ..fixed_body("ball", ShapeKind::Sphere { radius }, Vec3::new(0.0, 0.0, height))
    });
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    fn none() -> ScenarioParams {
        ScenarioParams::new()
    }

    #[test]
    fn capstan_has_eighty_wrapped_segments_and_free_ends() {
        let s = build_scenario("capstan", &none()).unwrap();
        let CurveSpec::Helix { segments, tail_segments, angle_start, angle_end, .. } = s.rods[0].curve else {
            panic!()
        };
        assert_eq!(segments, 80);
        assert!(tail_segments > 0);
        assert!((angle_end - angle_start - 2.0 * PI).abs() < 1e-12);
        assert_eq!(s.friction.default, 0.2);
        assert!(!s.rods[0].self_collision);
        s.build_system().unwrap();
    }

    #[test]
    fn ring_chain_parameters() {
        let s = build_scenario("ring_chain", &none()).unwrap();
        assert_eq!(s.rods.len(), 5);
        for r in &s.rods {
            assert_eq!(r.curve.segment_count(), 20);
            assert_eq!(r.section, CrossSection::Circular { radius: 1.25e-3 });
        }
        assert_eq!(s.materials[0].density, 500.0);
        assert_eq!(s.materials[0].youngs_modulus, 1e7);
        s.build_system().unwrap();
    }

    #[test]
    fn knot_strands_start_separated() {
        let s = build_scenario("overhand_knot", &none()).unwrap();
        let (nodes, _) = s.rods[0].curve.nodes();
        let CrossSection::Circular { radius } = s.rods[0].section else { panic!() };
        let mut closest = f64::INFINITY;
        for i in 0..nodes.len() {
            for j in i + 4..nodes.len() {
                closest = closest.min((nodes[i] - nodes[j]).norm());
            }
        }
        assert!(closest > 2.0 * radius, "closest non-adjacent nodes {closest}");
    }

    #[test]
    fn sphere_on_plane_both_models() {
        for model in ["point", "patch"] {
            let params = ScenarioParams::from([("model".to_string(), model.to_string())]);
            build_scenario("sphere_on_plane", &params).unwrap().build_system().unwrap();
        }
    }

    #[test]
    fn bad_names_and_parameters() {
        assert!(matches!(build_scenario("pulley", &none()), Err(SceneError::UnknownScenario(_))));
        let params = ScenarioParams::from([("wrap".to_string(), "1".to_string())]);
        assert!(matches!(build_scenario("capstan", &params), Err(SceneError::Validation(_))));
    }
}
