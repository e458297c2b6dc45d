use crate::collision::ShapeKind;
use crate::math::Vec3;
use crate::rod::{CrossSection, RestShape};
use crate::stepper::ContactModel;

use super::document::{Document, Section};
use super::spec::{ControllerKind, CurveSpec, LogFormat, MotionKind, SceneSpec};

/// Shortest text that parses back to exactly `x`.
pub fn fmt_f64(x: f64) -> String {
    let a = x.abs();
    if a != 0.0 && !(1e-3..1e7).contains(&a) {
        format!("{x:e}")
    } else {
        format!("{x}")
    }
}

fn fmt_vec3(v: &Vec3) -> String {
    format!("{} {} {}", fmt_f64(v.x), fmt_f64(v.y), fmt_f64(v.z))
}

struct Builder(Section);

impl Builder {
    fn new(kind: &str, name: Option<&str>) -> Self {
        Builder(Section { kind: kind.into(), name: name.map(Into::into), line: 0, entries: vec![] })
    }
    fn kv(mut self, key: &str, value: impl Into<String>) -> Self {
        self.0.set(key, &value.into());
        self
    }
    fn f(self, key: &str, x: f64) -> Self {
        self.kv(key, fmt_f64(x))
    }
    fn v(self, key: &str, x: &Vec3) -> Self {
        self.kv(key, fmt_vec3(x))
    }
}

pub fn scene_to_document(spec: &SceneSpec) -> Document {
    let mut out = Vec::new();
    let model = match spec.contact_model {
        ContactModel::Point => "point",
        ContactModel::Patch => "patch",
    };
    out.push(
        Builder::new("scene", None)
            .kv("name", spec.name.clone())
            .f("duration", spec.duration)
            .v("gravity", &spec.gravity)
            .kv("contact_model", model),
    );
    let c = &spec.stepper;
    out.push(
        Builder::new("stepper", None)
            .f("dt", c.dt)
            .f("theta", c.theta)
            .f("theta_vq", c.theta_vq)
            .f("newton_tolerance", c.newton_tolerance)
            .kv("newton_max_iterations", c.newton_max_iterations.to_string())
            .f("regularization_floor", c.regularization_floor)
            .f("contact_margin", c.contact_margin)
            .f("bias_scale", c.bias_scale)
            .f("solver_tolerance", c.solver.tolerance)
            .kv("solver_max_iterations", c.solver.max_iterations.to_string())
            .f("solver_epsilon", c.solver.epsilon),
    );
    out.push(Builder::new("friction", None).f("default", spec.friction.default));
    for p in &spec.friction.pairs {
        out.push(Builder::new("friction_pair", None).kv("a", p.a.clone()).kv("b", p.b.clone()).f("mu", p.mu));
    }
    for m in &spec.materials {
        out.push(
            Builder::new("material", Some(&m.name))
                .f("youngs_modulus", m.youngs_modulus)
                .f("shear_modulus", m.shear_modulus)
                .f("density", m.density)
                .f("rayleigh_alpha", m.rayleigh_alpha)
                .f("rayleigh_beta", m.rayleigh_beta),
        );
    }
    for r in &spec.rods {
        let section = match r.section {
            CrossSection::Circular { radius } => format!("circular {}", fmt_f64(radius)),
            CrossSection::Rectangular { width, height } => format!("rectangular {} {}", fmt_f64(width), fmt_f64(height)),
        };
        let rest = match r.rest {
            RestShape::Initial => "initial",
            RestShape::Straight => "straight",
        };
        let mut b = Builder::new("rod", Some(&r.name)).kv("material", r.material.clone()).kv("section", section);
        b = match &r.curve {
            CurveSpec::Straight { start, end, segments } => {
                b.kv("curve", "straight").v("start", start).v("end", end).kv("segments", segments.to_string())
            }
            CurveSpec::Arc { center, radius, axis, reference, angle_start, angle_end, segments } => b
                .kv("curve", "arc")
                .v("center", center)
                .f("radius", *radius)
                .v("axis", axis)
                .v("reference", reference)
                .f("angle_start", *angle_start)
                .f("angle_end", *angle_end)
                .kv("segments", segments.to_string()),
            CurveSpec::Ring { center, radius, axis, reference, segments } => b
                .kv("curve", "ring")
                .v("center", center)
                .f("radius", *radius)
                .v("axis", axis)
                .v("reference", reference)
                .kv("segments", segments.to_string()),
            CurveSpec::Helix {
                center,
                radius,
                axis,
                reference,
                angle_start,
                angle_end,
                pitch,
                segments,
                tail_segments,
            } => b
                .kv("curve", "helix")
                .v("center", center)
                .f("radius", *radius)
                .v("axis", axis)
                .v("reference", reference)
                .f("angle_start", *angle_start)
                .f("angle_end", *angle_end)
                .f("pitch", *pitch)
                .kv("segments", segments.to_string())
                .kv("tail_segments", tail_segments.to_string()),
            CurveSpec::Polyline { points, closed } => b
                .kv("curve", "polyline")
                .kv("points", points.iter().map(fmt_vec3).collect::<Vec<_>>().join("; "))
                .kv("closed", closed.to_string()),
        };
        out.push(b.kv("rest", rest).kv("self_collision", r.self_collision.to_string()).v("velocity", &r.velocity));
    }
    for body in &spec.bodies {
        let shape = match body.shape {
            ShapeKind::Sphere { radius } => format!("sphere {}", fmt_f64(radius)),
            ShapeKind::Capsule { radius, half_length } => format!("capsule {} {}", fmt_f64(radius), fmt_f64(half_length)),
            ShapeKind::Box { half_extents } => format!("box {}", fmt_vec3(&half_extents)),
            ShapeKind::Halfspace => "halfspace".into(),
        };
        let motion = match body.motion {
            MotionKind::Dynamic => "dynamic",
            MotionKind::Fixed => "fixed",
            MotionKind::Kinematic => "kinematic",
        };
        let mut b = Builder::new("body", Some(&body.name))
            .kv("shape", shape)
            .v("position", &body.position)
            .kv("orientation", body.orientation.iter().map(|x| fmt_f64(*x)).collect::<Vec<_>>().join(" "))
            .kv("motion", motion)
            .f("mass", body.mass)
            .v("linear_velocity", &body.linear_velocity)
            .v("angular_velocity", &body.angular_velocity);
        if let Some(p) = body.pressure {
            b = b.f("p_max", p.p_max).kv("resolution", p.resolution.to_string());
        }
        out.push(b);
    }
    for c in &spec.controllers {
        let b = Builder::new("controller", Some(&c.name));
        out.push(match &c.kind {
            ControllerKind::NodePd { rod, node, kp, kd, target, target_velocity } => {
                let b = b.kv("type", "node_pd").kv("rod", rod.clone()).kv("node", node.to_string()).f("kp", *kp).f("kd", *kd);
                let b = match target {
                    Some(t) => b.v("target", t),
                    None => b,
                };
                b.v("target_velocity", target_velocity)
            }
            ControllerKind::NodeForce { rod, node, force, ramp_time } => b
                .kv("type", "node_force")
                .kv("rod", rod.clone())
                .kv("node", node.to_string())
                .v("force", force)
                .f("ramp_time", *ramp_time),
            ControllerKind::BodyPd { body, kp, kd, target, target_velocity } => {
                let b = b.kv("type", "body_pd").kv("body", body.clone()).f("kp", *kp).f("kd", *kd);
                let b = match target {
                    Some(t) => b.v("target", t),
                    None => b,
                };
                b.v("target_velocity", target_velocity)
            }
            ControllerKind::Clamp { rod, node, twist } => b
                .kv("type", "clamp")
                .kv("rod", rod.clone())
                .kv("node", node.map_or("all".into(), |n| n.to_string()))
                .kv("twist", twist.to_string()),
        });
    }
    let format = match spec.output.format {
        LogFormat::Csv => "csv",
        LogFormat::Jsonl => "jsonl",
    };
    let mut o = Builder::new("output", None).kv("format", format).kv("log_contacts", spec.output.log_contacts.to_string());
    if !spec.output.probes.is_empty() {
        o = o.kv("probes", spec.output.probes.join(" "));
    }
    out.push(o);
    Document { sections: out.into_iter().map(|b| b.0).collect() }
}

/// Scene text that [`super::parse_scene`] maps back to `spec`.
pub fn print_scene(spec: &SceneSpec) -> String {
    scene_to_document(spec).to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn floats_round_trip(x in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL | proptest::num::f64::ZERO) {
            let s = fmt_f64(x);
            prop_assert_eq!(super::super::parse::parse_f64(&s).unwrap().to_bits(), x.to_bits(), "{}", s);
        }
    }
}
