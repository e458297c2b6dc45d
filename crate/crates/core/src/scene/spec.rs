use crate::collision::{Pose, Shape, ShapeKind};
use crate::math::{any_perpendicular, Quat, Vec3};
use crate::rod::{CrossSection, RestShape, RodParameters, RodState};
use crate::stepper::{
    BodyMotion, ContactModel, Controller, FrictionTable, Participant, PressureSpec, RigidBody, RodBody, StepperConfig,
    System, Trajectory,
};

use super::SceneError;

#[derive(Clone, Debug, PartialEq)]
pub struct SceneSpec {
    pub name: String,
    /// Simulated time (s).
    pub duration: f64,
    pub gravity: Vec3,
    pub contact_model: ContactModel,
    pub stepper: StepperConfig,
    pub friction: FrictionSpec,
    pub materials: Vec<MaterialSpec>,
    pub rods: Vec<RodSpec>,
    pub bodies: Vec<BodySpec>,
    pub controllers: Vec<ControllerSpec>,
    pub output: OutputSpec,
}

#[derive(Clone, Debug, PartialEq)]
pub struct FrictionSpec {
    pub default: f64,
    pub pairs: Vec<FrictionPair>,
}

/// Coefficient between two named rods or bodies.
#[derive(Clone, Debug, PartialEq)]
pub struct FrictionPair {
    pub a: String,
    pub b: String,
    pub mu: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct MaterialSpec {
    pub name: String,
    pub youngs_modulus: f64,
    pub shear_modulus: f64,
    pub density: f64,
    pub rayleigh_alpha: f64,
    pub rayleigh_beta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RodSpec {
    pub name: String,
    pub material: String,
    pub section: CrossSection,
    pub curve: CurveSpec,
    pub rest: RestShape,
    pub self_collision: bool,
    /// Uniform initial velocity.
    pub velocity: Vec3,
}

/// Rod centerline. Angles are measured in the plane normal to `axis`,
/// from `reference` (projected onto that plane) towards `axis × reference`.
#[derive(Clone, Debug, PartialEq)]
pub enum CurveSpec {
    Straight { start: Vec3, end: Vec3, segments: usize },
    Arc { center: Vec3, radius: f64, axis: Vec3, reference: Vec3, angle_start: f64, angle_end: f64, segments: usize },
    Ring { center: Vec3, radius: f64, axis: Vec3, reference: Vec3, segments: usize },
    /// Helix rising `pitch` along `axis` per radian, with optional straight
    /// tangent tails at both ends whose segments match the helix's
    /// in-plane segment length.
    Helix {
        center: Vec3,
        radius: f64,
        axis: Vec3,
        reference: Vec3,
        angle_start: f64,
        angle_end: f64,
        pitch: f64,
        segments: usize,
        tail_segments: usize,
    },
    Polyline { points: Vec<Vec3>, closed: bool },
}

#[derive(Clone, Debug, PartialEq)]
pub struct BodySpec {
    pub name: String,
    pub shape: ShapeKind,
    pub position: Vec3,
    /// Quaternion `[w, x, y, z]`; normalized when the system is built.
    pub orientation: [f64; 4],
    pub motion: MotionKind,
    /// Initial velocity of dynamic bodies, constant velocity of kinematic ones.
    pub linear_velocity: Vec3,
    pub angular_velocity: Vec3,
    pub mass: f64,
    pub pressure: Option<PressureSpec>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MotionKind {
    Dynamic,
    Fixed,
    Kinematic,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ControllerSpec {
    pub name: String,
    pub kind: ControllerKind,
}

/// Node indices may be negative to count from the rod's end (`-1` is the
/// last node). A clamp without a node holds every node of its rod.
#[derive(Clone, Debug, PartialEq)]
pub enum ControllerKind {
    NodePd { rod: String, node: i64, kp: f64, kd: f64, target: Option<Vec3>, target_velocity: Vec3 },
    NodeForce { rod: String, node: i64, force: Vec3, ramp_time: f64 },
    BodyPd { body: String, kp: f64, kd: f64, target: Option<Vec3>, target_velocity: Vec3 },
    Clamp { rod: String, node: Option<i64>, twist: bool },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum LogFormat {
    Csv,
    Jsonl,
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputSpec {
    pub format: LogFormat,
    /// Keep per-contact detail in every step record.
    pub log_contacts: bool,
    /// Controllers whose forces become log columns.
    pub probes: Vec<String>,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { format: LogFormat::Csv, log_contacts: true, probes: Vec::new() }
    }
}

impl SceneSpec {
    /// An empty scene with default settings.
    pub fn new(name: &str, duration: f64) -> Self {
        Self {
            name: name.into(),
            duration,
            gravity: Vec3::new(0.0, 0.0, -9.81),
            contact_model: ContactModel::Point,
            stepper: StepperConfig::default(),
            friction: FrictionSpec { default: 0.0, pairs: Vec::new() },
            materials: Vec::new(),
            rods: Vec::new(),
            bodies: Vec::new(),
            controllers: Vec::new(),
            output: OutputSpec::default(),
        }
    }

    pub fn step_count(&self) -> usize {
        (self.duration / self.stepper.dt - 1e-9).ceil().max(0.0) as usize
    }

    fn participant(&self, name: &str) -> Option<Participant> {
        if let Some(i) = self.rods.iter().position(|r| r.name == name) {
            return Some(Participant::Rod(i));
        }
        self.bodies.iter().position(|b| b.name == name).map(Participant::Body)
    }

    fn rod_index(&self, name: &str) -> Result<usize, SceneError> {
        self.rods.iter().position(|r| r.name == name).ok_or_else(|| invalid(format!("unknown rod `{name}`")))
    }

    /// Number of system controllers each scene controller expands to.
    fn expansion(&self, c: &ControllerSpec) -> usize {
        match &c.kind {
            ControllerKind::Clamp { rod, node: None, .. } => {
                self.rods.iter().find(|r| &r.name == rod).map_or(0, |r| r.curve.node_count())
            }
            _ => 1,
        }
    }

    /// System controller indices of the probes, in `output.probes` order.
    pub fn probe_indices(&self) -> Result<Vec<usize>, SceneError> {
        self.output
            .probes
            .iter()
            .map(|p| {
                let k = self.controllers.iter().position(|c| &c.name == p).ok_or_else(|| invalid(format!("unknown probe `{p}`")))?;
                Ok(self.controllers[..k].iter().map(|c| self.expansion(c)).sum())
            })
            .collect()
    }

    /// Cross-reference and range checks that hold for any well-formed scene.
    pub fn validate(&self) -> Result<(), SceneError> {
        let mut problems = Vec::new();
        let mut names = std::collections::HashSet::new();
        for n in self.rods.iter().map(|r| &r.name).chain(self.bodies.iter().map(|b| &b.name)) {
            if !names.insert(n) {
                problems.push(format!("duplicate rod/body name `{n}`"));
            }
        }
        if !(self.duration > 0.0) {
            problems.push("duration must be positive".into());
        }
        for r in &self.rods {
            if !self.materials.iter().any(|m| m.name == r.material) {
                problems.push(format!("rod `{}` uses undefined material `{}`", r.name, r.material));
            }
            if r.curve.segment_count() < 1 {
                problems.push(format!("rod `{}` needs at least one segment", r.name));
            }
        }
        for p in &self.friction.pairs {
            for n in [&p.a, &p.b] {
                if self.participant(n).is_none() {
                    problems.push(format!("friction pair names unknown `{n}`"));
                }
            }
        }
        for c in &self.controllers {
            let target = match &c.kind {
                ControllerKind::NodePd { rod, .. }
                | ControllerKind::NodeForce { rod, .. }
                | ControllerKind::Clamp { rod, .. } => (!self.rods.iter().any(|r| &r.name == rod)).then_some(rod),
                ControllerKind::BodyPd { body, .. } => (!self.bodies.iter().any(|b| &b.name == body)).then_some(body),
            };
            if let Some(t) = target {
                problems.push(format!("controller `{}` targets unknown `{t}`", c.name));
            }
        }
        for p in &self.output.probes {
            if !self.controllers.iter().any(|c| &c.name == p) {
                problems.push(format!("probe `{p}` is not a controller"));
            }
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(SceneError::Validation(problems.into_iter().map(|r| super::Diagnostic::new(0, "", r)).collect()))
        }
    }

    /// Instantiate the simulated system and its stepper configuration.
    pub fn build_system(&self) -> Result<System, SceneError> {
        self.validate()?;
        let mut sys = System::new(self.gravity);
        sys.contact_model = self.contact_model;
        for r in &self.rods {
            let m = self.materials.iter().find(|m| m.name == r.material).expect("validated");
            let params = RodParameters::new(
                m.youngs_modulus,
                m.shear_modulus,
                r.section,
                m.density,
                m.rayleigh_alpha,
                m.rayleigh_beta,
            )
            .map_err(|e| invalid(format!("rod `{}`: {e}", r.name)))?;
            let (nodes, closed) = r.curve.nodes();
            let state = if closed { RodState::closed(nodes, r.rest) } else { RodState::open(nodes, r.rest) }
                .map_err(|e| invalid(format!("rod `{}`: {e}", r.name)))?;
            let mut body = RodBody::at_rest(state, params, r.self_collision);
            for i in 0..body.state.node_count() {
                let d = RodState::node_dof(i);
                body.velocity[d..d + 3].copy_from_slice(r.velocity.as_slice());
            }
            sys.rods.push(body);
        }
        for b in &self.bodies {
            let [w, x, y, z] = b.orientation;
            let q = nalgebra::Quaternion::new(w, x, y, z);
            if !(q.norm() > 0.0) || !q.norm().is_finite() {
                return Err(invalid(format!("body `{}` has a degenerate orientation", b.name)));
            }
            let shape = Shape::new(b.shape, Pose::new(Quat::from_quaternion(q), b.position));
            let motion = match b.motion {
                MotionKind::Dynamic => BodyMotion::Dynamic,
                MotionKind::Fixed => BodyMotion::Fixed,
                MotionKind::Kinematic => BodyMotion::Kinematic { linear: b.linear_velocity, angular: b.angular_velocity },
            };
            let mut body = RigidBody::new(shape, b.mass, motion);
            if b.motion == MotionKind::Dynamic {
                body.linear_velocity = b.linear_velocity;
                body.angular_velocity = b.angular_velocity;
            }
            body.pressure = b.pressure;
            sys.bodies.push(body);
        }
        let node = |rod: usize, k: i64| -> Result<usize, SceneError> {
            let n = sys.rods[rod].state.node_count() as i64;
            let i = if k < 0 { n + k } else { k };
            if (0..n).contains(&i) {
                Ok(i as usize)
            } else {
                Err(invalid(format!("node {k} is outside rod `{}`", self.rods[rod].name)))
            }
        };
        let mut controllers = Vec::new();
        for c in &self.controllers {
            if let ControllerKind::Clamp { rod, node: None, twist } = &c.kind {
                let r = self.rod_index(rod)?;
                let n = sys.rods[r].state.node_count();
                controllers.extend((0..n).map(|i| Controller::Clamp { rod: r, node: i, twist: *twist }));
                continue;
            }
            controllers.push(match &c.kind {
                ControllerKind::NodePd { rod, node: k, kp, kd, target, target_velocity } => {
                    let r = self.rod_index(rod)?;
                    let i = node(r, *k)?;
                    let start = target.unwrap_or(sys.rods[r].state.nodes[i]);
                    Controller::NodePd {
                        rod: r,
                        node: i,
                        kp: *kp,
                        kd: *kd,
                        target: Trajectory { start, velocity: *target_velocity },
                    }
                }
                ControllerKind::NodeForce { rod, node: k, force, ramp_time } => {
                    let r = self.rod_index(rod)?;
                    Controller::NodeForce { rod: r, node: node(r, *k)?, force: *force, ramp_time: *ramp_time }
                }
                ControllerKind::BodyPd { body, kp, kd, target, target_velocity } => {
                    let b = self.bodies.iter().position(|x| &x.name == body).expect("validated");
                    let start = target.unwrap_or(sys.bodies[b].com());
                    Controller::BodyPd { body: b, kp: *kp, kd: *kd, target: Trajectory { start, velocity: *target_velocity } }
                }
                ControllerKind::Clamp { rod, node: k, twist } => {
                    let r = self.rod_index(rod)?;
                    Controller::Clamp { rod: r, node: node(r, k.expect("expanded above"))?, twist: *twist }
                }
            });
        }
        sys.controllers = controllers;
        let mut friction = FrictionTable::uniform(self.friction.default);
        for p in &self.friction.pairs {
            let (a, b) = (self.participant(&p.a).expect("validated"), self.participant(&p.b).expect("validated"));
            friction.overrides.push((a, b, p.mu));
        }
        sys.friction = friction;
        sys.validate()?;
        Ok(sys)
    }
}

fn invalid(reason: String) -> SceneError {
    SceneError::Validation(vec![super::Diagnostic::new(0, "", reason)])
}

/// In-plane orthonormal pair `(e1, e2)` for a curve about `axis`.
fn plane_basis(axis: &Vec3, reference: &Vec3) -> (Vec3, Vec3, Vec3) {
    let a = axis.normalize();
    let r = reference - reference.dot(&a) * a;
    let e1 = if r.norm() > 1e-12 { r.normalize() } else { any_perpendicular(&a) };
    (a, e1, a.cross(&e1))
}

impl CurveSpec {
    pub fn segment_count(&self) -> usize {
        match self {
            CurveSpec::Straight { segments, .. } | CurveSpec::Arc { segments, .. } | CurveSpec::Ring { segments, .. } => {
                *segments
            }
            CurveSpec::Helix { segments, tail_segments, .. } => segments + 2 * tail_segments,
            CurveSpec::Polyline { points, closed } => {
                if *closed {
                    points.len()
                } else {
                    points.len().saturating_sub(1)
                }
            }
        }
    }

    pub fn node_count(&self) -> usize {
        match self {
            CurveSpec::Ring { segments, .. } => *segments,
            CurveSpec::Polyline { points, .. } => points.len(),
            _ => self.segment_count() + 1,
        }
    }

    /// Node positions and whether the rod is closed.
    pub fn nodes(&self) -> (Vec<Vec3>, bool) {
        match self {
            CurveSpec::Straight { start, end, segments } => {
                let n = *segments;
                ((0..=n).map(|k| start + (end - start) * (k as f64 / n as f64)).collect(), false)
            }
            CurveSpec::Arc { center, radius, axis, reference, angle_start, angle_end, segments } => {
                let radius = *radius;
                let (_, e1, e2) = plane_basis(axis, reference);
                let n = *segments;
                let nodes = (0..=n)
                    .map(|k| {
                        let t = angle_start + (angle_end - angle_start) * k as f64 / n as f64;
                        center + radius * (t.cos() * e1 + t.sin() * e2)
                    })
                    .collect();
                (nodes, false)
            }
            CurveSpec::Ring { center, radius, axis, reference, segments } => {
                let radius = *radius;
                let (_, e1, e2) = plane_basis(axis, reference);
                let n = *segments;
                let nodes = (0..n)
                    .map(|k| {
                        let t = std::f64::consts::TAU * k as f64 / n as f64;
                        center + radius * (t.cos() * e1 + t.sin() * e2)
                    })
                    .collect();
                (nodes, true)
            }
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
            } => {
                let (radius, pitch) = (*radius, *pitch);
                let (a, e1, e2) = plane_basis(axis, reference);
                let at = |t: f64| center + radius * (t.cos() * e1 + t.sin() * e2) + pitch * (t - angle_start) * a;
                let tangent =
                    |t: f64| (radius * (-t.sin() * e1 + t.cos() * e2) + pitch * a).normalize();
                let n = *segments;
                let dt = (angle_end - angle_start) / n as f64;
                let tail = radius * dt.abs();
                let sign = dt.signum();
                let mut nodes = Vec::with_capacity(n + 1 + 2 * tail_segments);
                for k in (1..=*tail_segments).rev() {
                    nodes.push(at(*angle_start) - sign * tangent(*angle_start) * (k as f64 * tail));
                }
                for k in 0..=n {
                    nodes.push(at(angle_start + k as f64 * dt));
                }
                for k in 1..=*tail_segments {
                    nodes.push(at(*angle_end) + sign * tangent(*angle_end) * (k as f64 * tail));
                }
                (nodes, false)
            }
            CurveSpec::Polyline { points, closed } => (points.clone(), *closed),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn straight_curve_spacing() {
        let c = CurveSpec::Straight { start: Vec3::zeros(), end: Vec3::new(1.0, 0.0, 0.0), segments: 4 };
        let (n, closed) = c.nodes();
        assert!(!closed);
        assert_eq!(n.len(), 5);
        assert!((n[1].x - 0.25).abs() < 1e-15);
    }

    #[test]
    fn ring_nodes_lie_on_circle() {
        let c = CurveSpec::Ring {
            center: Vec3::new(1.0, 2.0, 3.0),
            radius: 0.5,
            axis: Vec3::new(1.0, 1.0, 0.0),
            reference: Vec3::z(),
            segments: 12,
        };
        let (n, closed) = c.nodes();
        assert!(closed);
        assert_eq!(n.len(), 12);
        for p in &n {
            let d = p - Vec3::new(1.0, 2.0, 3.0);
            assert!((d.norm() - 0.5).abs() < 1e-12);
            assert!(d.dot(&Vec3::new(1.0, 1.0, 0.0)).abs() < 1e-12);
        }
        assert!((n[0] - Vec3::new(1.0, 2.0, 3.5)).norm() < 1e-12);
    }

    #[test]
    fn helix_tails_are_tangent() {
        let c = CurveSpec::Helix {
            center: Vec3::zeros(),
            radius: 1.0,
            axis: Vec3::z(),
            reference: Vec3::x(),
            angle_start: 0.0,
            angle_end: PI,
            pitch: 0.01,
            segments: 20,
            tail_segments: 3,
        };
        let (n, _) = c.nodes();
        assert_eq!(n.len(), 27);
        assert_eq!(c.segment_count(), 26);
        // Tail edges have the in-plane arc segment length and continue the helix direction.
        let tail = (n[1] - n[0]).norm();
        assert!((tail - PI / 20.0).abs() < 1e-12);
        let t_in = (n[3] - n[2]).normalize();
        let t_arc = (n[4] - n[3]).normalize();
        assert!(t_in.dot(&t_arc) > 0.99);
    }
}
