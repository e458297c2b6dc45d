use std::collections::HashSet;

use crate::collision::ShapeKind;
use crate::math::Vec3;
use crate::rod::{CrossSection, RestShape};
use crate::stepper::{ContactModel, PressureSpec};

use super::document::{Diagnostic, Document, Section};
use super::spec::{
    BodySpec, ControllerKind, ControllerSpec, CurveSpec, FrictionPair, LogFormat, MaterialSpec, MotionKind, RodSpec,
    SceneSpec,
};
use super::SceneError;

/// Parse scene text into a validated spec.
///
/// Syntax problems are reported as [`SceneError::Parse`]; bad values,
/// missing or unknown keys and dangling references as
/// [`SceneError::Validation`]. Every problem found is reported, not only the first.
pub fn parse_scene(text: &str) -> Result<SceneSpec, SceneError> {
    let doc = Document::parse(text).map_err(SceneError::Parse)?;
    scene_from_document(&doc)
}

pub fn scene_from_document(doc: &Document) -> Result<SceneSpec, SceneError> {
    let mut errors = Vec::new();
    let spec = build(doc, &mut errors);
    if !errors.is_empty() {
        errors.sort_by_key(|d| d.line);
        return Err(SceneError::Validation(errors));
    }
    spec.validate()?;
    Ok(spec)
}

pub fn parse_f64(s: &str) -> Result<f64, String> {
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s),
    };
    let mut value = 1.0;
    let mut op = '*';
    let mut rest = body;
    loop {
        let end = rest.find(['*', '/']).unwrap_or(rest.len());
        let token = rest[..end].trim();
        let x = if token == "pi" {
            std::f64::consts::PI
        } else {
            token.parse::<f64>().map_err(|_| format!("`{s}` is not a number"))?
        };
        value = if op == '*' { value * x } else { value / x };
        if end == rest.len() {
            break;
        }
        op = rest.as_bytes()[end] as char;
        rest = &rest[end + 1..];
    }
    let v = if neg { -value } else { value };
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("`{s}` is not finite"))
    }
}

fn parse_floats(s: &str, n: usize) -> Result<Vec<f64>, String> {
    let xs: Vec<f64> = s.split_whitespace().map(parse_f64).collect::<Result<_, _>>()?;
    if xs.len() != n {
        return Err(format!("expected {n} numbers, found {}", xs.len()));
    }
    Ok(xs)
}

fn parse_vec3(s: &str) -> Result<Vec3, String> {
    parse_floats(s, 3).map(|v| Vec3::new(v[0], v[1], v[2]))
}

fn parse_points(s: &str) -> Result<Vec<Vec3>, String> {
    s.split(';').filter(|p| !p.trim().is_empty()).map(parse_vec3).collect()
}

fn parse_bool(s: &str) -> Result<bool, String> {
    match s {
        "true" => Ok(true),
        "false" => Ok(false),
        _ => Err(format!("expected true or false, found `{s}`")),
    }
}

fn parse_usize(s: &str) -> Result<usize, String> {
    s.parse().map_err(|_| format!("expected a non-negative integer, found `{s}`"))
}

fn parse_i64(s: &str) -> Result<i64, String> {
    s.parse().map_err(|_| format!("expected an integer, found `{s}`"))
}

fn parse_name(s: &str) -> Result<String, String> {
    if !s.is_empty() && s.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '-') {
        Ok(s.to_string())
    } else {
        Err(format!("`{s}` is not a valid name"))
    }
}

fn keyword<'a, T: Copy>(options: &'a [(&'a str, T)]) -> impl Fn(&str) -> Result<T, String> + 'a {
    move |s| {
        options.iter().find(|(k, _)| *k == s).map(|(_, v)| *v).ok_or_else(|| {
            let names: Vec<&str> = options.iter().map(|(k, _)| *k).collect();
            format!("expected one of {}, found `{s}`", names.join(", "))
        })
    }
}

fn parse_shape(s: &str) -> Result<ShapeKind, String> {
    let (kind, args) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
    let shape = match kind {
        "sphere" => ShapeKind::Sphere { radius: parse_floats(args, 1)?[0] },
        "capsule" => {
            let v = parse_floats(args, 2)?;
            ShapeKind::Capsule { radius: v[0], half_length: v[1] }
        }
        "box" => ShapeKind::Box { half_extents: parse_vec3(args)? },
        "halfspace" if args.trim().is_empty() => ShapeKind::Halfspace,
        _ => return Err(format!("unknown shape `{s}`")),
    };
    shape.validate().map_err(|e| e.to_string())?;
    Ok(shape)
}

fn parse_section(s: &str) -> Result<CrossSection, String> {
    let (kind, args) = s.split_once(char::is_whitespace).unwrap_or((s, ""));
    let c = match kind {
        "circular" => CrossSection::Circular { radius: parse_floats(args, 1)?[0] },
        "rectangular" => {
            let v = parse_floats(args, 2)?;
            CrossSection::Rectangular { width: v[0], height: v[1] }
        }
        _ => return Err(format!("unknown cross-section `{s}`")),
    };
    let ok = match c {
        CrossSection::Circular { radius } => radius > 0.0,
        CrossSection::Rectangular { width, height } => width > 0.0 && height > 0.0,
    };
    if ok {
        Ok(c)
    } else {
        Err("cross-section dimensions must be positive".into())
    }
}

fn positive(x: f64) -> Result<f64, String> {
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, found {x}"))
    }
}

fn non_negative(x: f64) -> Result<f64, String> {
    if x >= 0.0 {
        Ok(x)
    } else {
        Err(format!("must be non-negative, found {x}"))
    }
}

/// Reads the entries of one section, recording which keys were consumed.
struct Reader<'a> {
    section: &'a Section,
    used: HashSet<&'a str>,
}

impl<'a> Reader<'a> {
    fn new(section: &'a Section) -> Self {
        Self { section, used: HashSet::new() }
    }

    fn field(&self, key: &str) -> String {
        format!("[{}] {key}", self.section.header())
    }

    fn line_of(&self, key: &str) -> usize {
        self.section.get(key).map_or(self.section.line, |e| e.line)
    }

    fn opt<T>(&mut self, key: &str, errors: &mut Vec<Diagnostic>, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        let e = self.section.get(key)?;
        self.used.insert(&e.key);
        match parse(&e.value) {
            Ok(v) => Some(v),
            Err(reason) => {
                errors.push(Diagnostic::new(e.line, self.field(key), reason));
                None
            }
        }
    }

    fn or<T>(&mut self, key: &str, default: T, errors: &mut Vec<Diagnostic>, parse: impl Fn(&str) -> Result<T, String>) -> T {
        self.opt(key, errors, parse).unwrap_or(default)
    }

    fn req<T>(&mut self, key: &str, errors: &mut Vec<Diagnostic>, parse: impl Fn(&str) -> Result<T, String>) -> Option<T> {
        if self.section.get(key).is_none() {
            errors.push(Diagnostic::new(self.section.line, self.field(key), "missing required key"));
            return None;
        }
        self.opt(key, errors, parse)
    }

    fn finish(&self, errors: &mut Vec<Diagnostic>, context: &str) {
        for e in &self.section.entries {
            if !self.used.contains(e.key.as_str()) {
                errors.push(Diagnostic::new(e.line, self.field(&e.key), format!("unknown key{context}")));
            }
        }
    }
}

fn build(doc: &Document, errors: &mut Vec<Diagnostic>) -> SceneSpec {
    let mut spec = SceneSpec::new("scene", 1.0);
    let mut seen_singletons: Vec<(&str, usize)> = Vec::new();
    let mut have_scene = false;
    // Deferred cross-reference checks: (line, field, referenced name, what it must be).
    let mut refs: Vec<(usize, String, String, &str)> = Vec::new();

    for s in &doc.sections {
        let singleton = matches!(s.kind.as_str(), "scene" | "stepper" | "friction" | "output");
        if singleton {
            if let Some((_, first)) = seen_singletons.iter().find(|(k, _)| *k == s.kind) {
                errors.push(Diagnostic::new(s.line, format!("[{}]", s.kind), format!("repeats the section on line {first}")));
                continue;
            }
            seen_singletons.push((&s.kind, s.line));
            if s.name.is_some() {
                errors.push(Diagnostic::new(s.line, format!("[{}]", s.header()), "this section takes no name"));
                continue;
            }
        }
        let named = matches!(s.kind.as_str(), "material" | "rod" | "body" | "controller");
        if named && s.name.is_none() {
            errors.push(Diagnostic::new(s.line, format!("[{}]", s.kind), "section needs a name"));
            continue;
        }
        let name = s.name.clone().unwrap_or_default();
        let mut r = Reader::new(s);
        match s.kind.as_str() {
            "scene" => {
                have_scene = true;
                spec.name = r.or("name", spec.name.clone(), errors, parse_name);
                spec.duration = r.req("duration", errors, |v| parse_f64(v).and_then(positive)).unwrap_or(1.0);
                spec.gravity = r.or("gravity", spec.gravity, errors, parse_vec3);
                spec.contact_model = r.or(
                    "contact_model",
                    spec.contact_model,
                    errors,
                    keyword(&[("point", ContactModel::Point), ("patch", ContactModel::Patch)]),
                );
                r.finish(errors, "");
            }
            "stepper" => {
                let c = &mut spec.stepper;
                let f = |v: &str| parse_f64(v).and_then(positive);
                c.dt = r.or("dt", c.dt, errors, f);
                let unit = |v: &str| {
                    parse_f64(v).and_then(|x| if (0.0..=1.0).contains(&x) { Ok(x) } else { Err("must lie in [0, 1]".into()) })
                };
                c.theta = r.or("theta", c.theta, errors, unit);
                c.theta_vq = r.or("theta_vq", c.theta_vq, errors, unit);
                c.newton_tolerance = r.or("newton_tolerance", c.newton_tolerance, errors, f);
                c.newton_max_iterations = r.or("newton_max_iterations", c.newton_max_iterations, errors, parse_usize);
                c.regularization_floor = r.or("regularization_floor", c.regularization_floor, errors, f);
                c.contact_margin =
                    r.or("contact_margin", c.contact_margin, errors, |v| parse_f64(v).and_then(non_negative));
                c.bias_scale = r.or("bias_scale", c.bias_scale, errors, |v| parse_f64(v).and_then(non_negative));
                c.solver.tolerance = r.or("solver_tolerance", c.solver.tolerance, errors, f);
                c.solver.max_iterations = r.or("solver_max_iterations", c.solver.max_iterations, errors, parse_usize);
                c.solver.epsilon = r.or("solver_epsilon", c.solver.epsilon, errors, f);
                r.finish(errors, "");
            }
            "friction" => {
                spec.friction.default = r.or("default", 0.0, errors, |v| parse_f64(v).and_then(non_negative));
                r.finish(errors, "");
            }
            "friction_pair" => {
                let a = r.req("a", errors, parse_name);
                let b = r.req("b", errors, parse_name);
                let mu = r.req("mu", errors, |v| parse_f64(v).and_then(non_negative));
                for (k, n) in [("a", &a), ("b", &b)] {
                    if let Some(n) = n {
                        refs.push((r.line_of(k), r.field(k), n.clone(), "rod or body"));
                    }
                }
                r.finish(errors, "");
                if let (Some(a), Some(b), Some(mu)) = (a, b, mu) {
                    spec.friction.pairs.push(FrictionPair { a, b, mu });
                }
            }
            "material" => {
                let f = |v: &str| parse_f64(v).and_then(positive);
                let e = r.req("youngs_modulus", errors, f);
                let g = r.req("shear_modulus", errors, f);
                let rho = r.req("density", errors, f);
                let alpha = r.or("rayleigh_alpha", 0.0, errors, |v| parse_f64(v).and_then(non_negative));
                let beta = r.or("rayleigh_beta", 0.0, errors, |v| parse_f64(v).and_then(non_negative));
                r.finish(errors, "");
                if spec.materials.iter().any(|m| m.name == name) {
                    errors.push(Diagnostic::new(s.line, format!("[{}]", s.header()), "duplicate material"));
                }
                if let (Some(e), Some(g), Some(rho)) = (e, g, rho) {
                    spec.materials.push(MaterialSpec {
                        name: name.clone(),
                        youngs_modulus: e,
                        shear_modulus: g,
                        density: rho,
                        rayleigh_alpha: alpha,
                        rayleigh_beta: beta,
                    });
                }
            }
            "rod" => {
                if let Some(rod) = read_rod(&mut r, name.clone(), errors) {
                    refs.push((r.line_of("material"), r.field("material"), rod.material.clone(), "material"));
                    spec.rods.push(rod);
                }
            }
            "body" => {
                if let Some(body) = read_body(&mut r, name.clone(), errors) {
                    spec.bodies.push(body);
                }
            }
            "controller" => {
                if let Some(c) = read_controller(&mut r, name.clone(), errors, &mut refs) {
                    spec.controllers.push(c);
                }
            }
            "output" => {
                let o = &mut spec.output;
                o.format = r.or("format", o.format, errors, keyword(&[("csv", LogFormat::Csv), ("jsonl", LogFormat::Jsonl)]));
                o.log_contacts = r.or("log_contacts", o.log_contacts, errors, parse_bool);
                o.probes = r.or("probes", Vec::new(), errors, |v| v.split_whitespace().map(parse_name).collect());
                for p in o.probes.clone() {
                    refs.push((r.line_of("probes"), r.field("probes"), p, "controller"));
                }
                r.finish(errors, "");
            }
            other => {
                errors.push(Diagnostic::new(s.line, format!("[{}]", s.header()), format!("unknown section `{other}`")));
                continue;
            }
        }
        if named {
            let dup = match s.kind.as_str() {
                "rod" | "body" => spec.rods.iter().filter(|x| x.name == name).count()
                    + spec.bodies.iter().filter(|x| x.name == name).count(),
                "controller" => spec.controllers.iter().filter(|x| x.name == name).count(),
                _ => 0,
            };
            if dup > 1 {
                errors.push(Diagnostic::new(s.line, format!("[{}]", s.header()), "name already used"));
            }
        }
    }
    if !have_scene {
        errors.push(Diagnostic::new(1, "[scene]", "missing required section"));
    }
    for (line, field, target, what) in refs {
        let found = match what {
            "material" => spec.materials.iter().any(|m| m.name == target),
            "rod" => spec.rods.iter().any(|m| m.name == target),
            "body" => spec.bodies.iter().any(|m| m.name == target),
            "controller" => spec.controllers.iter().any(|m| m.name == target),
            _ => spec.rods.iter().any(|m| m.name == target) || spec.bodies.iter().any(|m| m.name == target),
        };
        if !found {
            errors.push(Diagnostic::new(line, field, format!("no {what} named `{target}`")));
        }
    }
    spec
}

fn read_rod(r: &mut Reader, name: String, errors: &mut Vec<Diagnostic>) -> Option<RodSpec> {
    let material = r.req("material", errors, parse_name);
    let section = r.req("section", errors, parse_section);
    let kind = r.req(
        "curve",
        errors,
        keyword(&[("straight", 0), ("arc", 1), ("ring", 2), ("helix", 3), ("polyline", 4)]),
    );
    let rest = r.or("rest", RestShape::Initial, errors, keyword(&[("initial", RestShape::Initial), ("straight", RestShape::Straight)]));
    let self_collision = r.or("self_collision", false, errors, parse_bool);
    let velocity = r.or("velocity", Vec3::zeros(), errors, parse_vec3);
    let segments = |r: &mut Reader, errors: &mut Vec<Diagnostic>| {
        r.req("segments", errors, |v| parse_usize(v).and_then(|n| if n >= 1 { Ok(n) } else { Err("must be at least 1".into()) }))
    };
    let radius = |r: &mut Reader, errors: &mut Vec<Diagnostic>| r.req("radius", errors, |v| parse_f64(v).and_then(positive));
    let curve = match kind {
        Some(0) => {
            let start = r.req("start", errors, parse_vec3);
            let end = r.req("end", errors, parse_vec3);
            let n = segments(r, errors);
            Some(CurveSpec::Straight { start: start?, end: end?, segments: n? })
        }
        Some(1) => {
            let center = r.or("center", Vec3::zeros(), errors, parse_vec3);
            let radius = radius(r, errors);
            let axis = r.or("axis", Vec3::z(), errors, parse_vec3);
            let reference = r.or("reference", Vec3::x(), errors, parse_vec3);
            let a0 = r.req("angle_start", errors, parse_f64);
            let a1 = r.req("angle_end", errors, parse_f64);
            let n = segments(r, errors);
            Some(CurveSpec::Arc { center, radius: radius?, axis, reference, angle_start: a0?, angle_end: a1?, segments: n? })
        }
        Some(2) => {
            let center = r.or("center", Vec3::zeros(), errors, parse_vec3);
            let radius = radius(r, errors);
            let axis = r.or("axis", Vec3::z(), errors, parse_vec3);
            let reference = r.or("reference", Vec3::x(), errors, parse_vec3);
            let n = segments(r, errors);
            Some(CurveSpec::Ring { center, radius: radius?, axis, reference, segments: n? })
        }
        Some(3) => {
            let center = r.or("center", Vec3::zeros(), errors, parse_vec3);
            let radius = radius(r, errors);
            let axis = r.or("axis", Vec3::z(), errors, parse_vec3);
            let reference = r.or("reference", Vec3::x(), errors, parse_vec3);
            let a0 = r.req("angle_start", errors, parse_f64);
            let a1 = r.req("angle_end", errors, parse_f64);
            let pitch = r.or("pitch", 0.0, errors, parse_f64);
            let n = segments(r, errors);
            let tail_segments = r.or("tail_segments", 0, errors, parse_usize);
            Some(CurveSpec::Helix {
                center,
                radius: radius?,
                axis,
                reference,
                angle_start: a0?,
                angle_end: a1?,
                pitch,
                segments: n?,
                tail_segments,
            })
        }
        Some(4) => {
            let points = r.req("points", errors, parse_points);
            let closed = r.or("closed", false, errors, parse_bool);
            let min = if closed { 3 } else { 2 };
            match points {
                Some(p) if p.len() < min => {
                    errors.push(Diagnostic::new(r.line_of("points"), r.field("points"), format!("needs at least {min} points")));
                    None
                }
                p => Some(CurveSpec::Polyline { points: p?, closed }),
            }
        }
        _ => None,
    };
    let curve_name = kind.map_or("", |k| ["straight", "arc", "ring", "helix", "polyline"][k]);
    let context = if curve_name.is_empty() { String::new() } else { format!(" for a {curve_name} rod") };
    r.finish(errors, &context);
    Some(RodSpec { name, material: material?, section: section?, curve: curve?, rest, self_collision, velocity })
}

fn read_body(r: &mut Reader, name: String, errors: &mut Vec<Diagnostic>) -> Option<BodySpec> {
    let shape = r.req("shape", errors, parse_shape);
    let position = r.or("position", Vec3::zeros(), errors, parse_vec3);
    let orientation = r.or("orientation", [1.0, 0.0, 0.0, 0.0], errors, |v| {
        let q = parse_floats(v, 4)?;
        if q.iter().map(|x| x * x).sum::<f64>() > 0.0 {
            Ok([q[0], q[1], q[2], q[3]])
        } else {
            Err("quaternion must be nonzero".into())
        }
    });
    let motion = r.or(
        "motion",
        MotionKind::Dynamic,
        errors,
        keyword(&[("dynamic", MotionKind::Dynamic), ("fixed", MotionKind::Fixed), ("kinematic", MotionKind::Kinematic)]),
    );
    let mass = if motion == MotionKind::Dynamic {
        r.req("mass", errors, |v| parse_f64(v).and_then(positive))
    } else {
        Some(r.or("mass", 0.0, errors, |v| parse_f64(v).and_then(non_negative)))
    };
    let linear_velocity = r.or("linear_velocity", Vec3::zeros(), errors, parse_vec3);
    let angular_velocity = r.or("angular_velocity", Vec3::zeros(), errors, parse_vec3);
    let p_max = r.opt("p_max", errors, |v| parse_f64(v).and_then(positive));
    let resolution = r.opt("resolution", errors, |v| {
        v.parse::<u32>().ok().filter(|n| *n >= 1).ok_or_else(|| format!("expected a positive integer, found `{v}`"))
    });
    let has = |k: &str| r.section.get(k).is_some();
    let pressure = match (p_max, resolution) {
        (Some(p_max), Some(resolution)) => Some(PressureSpec { p_max, resolution }),
        _ if has("p_max") != has("resolution") => {
            errors.push(Diagnostic::new(r.section.line, r.field("p_max"), "p_max and resolution go together"));
            None
        }
        _ => None,
    };
    r.finish(errors, "");
    Some(BodySpec {
        name,
        shape: shape?,
        position,
        orientation,
        motion,
        linear_velocity,
        angular_velocity,
        mass: mass?,
        pressure,
    })
}

fn read_controller(
    r: &mut Reader,
    name: String,
    errors: &mut Vec<Diagnostic>,
    refs: &mut Vec<(usize, String, String, &'static str)>,
) -> Option<ControllerSpec> {
    let kind = r.req(
        "type",
        errors,
        keyword(&[("node_pd", 0), ("node_force", 1), ("body_pd", 2), ("clamp", 3)]),
    );
    let gain = |v: &str| parse_f64(v).and_then(non_negative);
    let mut rod = |r: &mut Reader, errors: &mut Vec<Diagnostic>| {
        let v = r.req("rod", errors, parse_name);
        if let Some(n) = &v {
            refs.push((r.line_of("rod"), r.field("rod"), n.clone(), "rod"));
        }
        v
    };
    let out = match kind {
        Some(0) => {
            let rod = rod(r, errors);
            let node = r.req("node", errors, parse_i64);
            let kp = r.req("kp", errors, gain);
            let kd = r.or("kd", 0.0, errors, gain);
            let target = r.opt("target", errors, parse_vec3);
            let target_velocity = r.or("target_velocity", Vec3::zeros(), errors, parse_vec3);
            Some(ControllerKind::NodePd { rod: rod?, node: node?, kp: kp?, kd, target, target_velocity })
        }
        Some(1) => {
            let rod = rod(r, errors);
            let node = r.req("node", errors, parse_i64);
            let force = r.req("force", errors, parse_vec3);
            let ramp_time = r.or("ramp_time", 0.0, errors, |v| parse_f64(v).and_then(non_negative));
            Some(ControllerKind::NodeForce { rod: rod?, node: node?, force: force?, ramp_time })
        }
        Some(2) => {
            let body = r.req("body", errors, parse_name);
            if let Some(n) = &body {
                refs.push((r.line_of("body"), r.field("body"), n.clone(), "body"));
            }
            let kp = r.req("kp", errors, gain);
            let kd = r.or("kd", 0.0, errors, gain);
            let target = r.opt("target", errors, parse_vec3);
            let target_velocity = r.or("target_velocity", Vec3::zeros(), errors, parse_vec3);
            Some(ControllerKind::BodyPd { body: body?, kp: kp?, kd, target, target_velocity })
        }
        Some(3) => {
            let rod = rod(r, errors);
            let node = r.req("node", errors, |v| if v == "all" { Ok(None) } else { parse_i64(v).map(Some) });
            let twist = r.or("twist", true, errors, parse_bool);
            Some(ControllerKind::Clamp { rod: rod?, node: node?, twist })
        }
        _ => None,
    };
    r.finish(errors, kind.map_or("", |_| " for this controller type"));
    Some(ControllerSpec { name, kind: out? })
}
