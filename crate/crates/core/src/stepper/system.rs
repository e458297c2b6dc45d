use serde::{Deserialize, Serialize};

use crate::collision::{BodyLayout, Shape, ShapeKind, SystemTopology};
use crate::math::{Mat3, Vec3};
use crate::rod::{RodParameters, RodState};

use super::StepperError;

/// One elastic rod with its material.
#[derive(Clone, Debug)]
pub struct RodBody {
    pub state: RodState,
    /// Rates in the rod's interleaved DoF order.
    pub velocity: Vec<f64>,
    pub params: RodParameters,
    pub self_collision: bool,
}

impl RodBody {
    pub fn at_rest(state: RodState, params: RodParameters, self_collision: bool) -> Self {
        let velocity = vec![0.0; state.dof_count()];
        Self { state, velocity, params, self_collision }
    }
}

/// Straight-line target: `position(t) = start + velocity · t`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub start: Vec3,
    pub velocity: Vec3,
}

impl Trajectory {
    pub fn fixed(p: Vec3) -> Self {
        Self { start: p, velocity: Vec3::zeros() }
    }

    pub fn position(&self, t: f64) -> Vec3 {
        self.start + t * self.velocity
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum BodyMotion {
    Dynamic,
    Fixed,
    /// Prescribed constant world-frame velocities.
    Kinematic { linear: Vec3, angular: Vec3 },
}

/// Pressure-field parameters for the patch contact model.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PressureSpec {
    pub p_max: f64,
    pub resolution: u32,
}

#[derive(Clone, Debug)]
pub struct RigidBody {
    /// Shape at the current pose; the pose's translation is the center of mass.
    pub shape: Shape,
    pub mass: f64,
    /// Principal moments in the body frame.
    pub inertia: Vec3,
    pub motion: BodyMotion,
    /// Body-frame angular velocity.
    pub angular_velocity: Vec3,
    /// World-frame linear velocity.
    pub linear_velocity: Vec3,
    pub pressure: Option<PressureSpec>,
}

impl RigidBody {
    /// Uniform solid of `shape` with mass `mass` (unused for non-dynamic bodies).
    pub fn new(shape: Shape, mass: f64, motion: BodyMotion) -> Self {
        let inertia = if matches!(shape.kind, ShapeKind::Halfspace) { Vec3::zeros() } else { shape.kind.inertia_diagonal(mass) };
        let (linear_velocity, angular_velocity) = match motion {
            BodyMotion::Kinematic { linear, angular } => (linear, shape.pose.rotation.inverse() * angular),
            _ => (Vec3::zeros(), Vec3::zeros()),
        };
        Self { shape, mass, inertia, motion, angular_velocity, linear_velocity, pressure: None }
    }

    pub fn is_dynamic(&self) -> bool {
        self.motion == BodyMotion::Dynamic
    }

    pub fn rotation(&self) -> Mat3 {
        self.shape.pose.matrix()
    }

    pub fn com(&self) -> Vec3 {
        self.shape.pose.translation
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Controller {
    /// Spring-damper pulling a rod node toward a moving target.
    NodePd { rod: usize, node: usize, kp: f64, kd: f64, target: Trajectory },
    /// External force on a rod node, ramped linearly from zero over `ramp_time`.
    NodeForce { rod: usize, node: usize, force: Vec3, ramp_time: f64 },
    /// Spring-damper on a dynamic body's center of mass.
    BodyPd { body: usize, kp: f64, kd: f64, target: Trajectory },
    /// Node held still (position and, when `twist`, the adjacent material angles).
    Clamp { rod: usize, node: usize, twist: bool },
}

impl Controller {
    pub fn node_force_at(force: &Vec3, ramp_time: f64, t: f64) -> Vec3 {
        if ramp_time > 0.0 {
            force * (t / ramp_time).clamp(0.0, 1.0)
        } else {
            *force
        }
    }
}

/// Participant in a friction lookup.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Participant {
    Rod(usize),
    Body(usize),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrictionTable {
    pub default: f64,
    pub overrides: Vec<(Participant, Participant, f64)>,
}

impl FrictionTable {
    pub fn uniform(mu: f64) -> Self {
        Self { default: mu, overrides: Vec::new() }
    }

    pub fn lookup(&self, a: Participant, b: Participant) -> f64 {
        self.overrides
            .iter()
            .find(|(x, y, _)| (*x == a && *y == b) || (*x == b && *y == a))
            .map_or(self.default, |o| o.2)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ContactModel {
    Point,
    Patch,
}

/// Everything that is simulated, at one instant.
#[derive(Clone, Debug)]
pub struct System {
    pub time: f64,
    pub rods: Vec<RodBody>,
    pub bodies: Vec<RigidBody>,
    pub controllers: Vec<Controller>,
    pub gravity: Vec3,
    pub friction: FrictionTable,
    pub contact_model: ContactModel,
}

impl System {
    pub fn new(gravity: Vec3) -> Self {
        Self {
            time: 0.0,
            rods: Vec::new(),
            bodies: Vec::new(),
            controllers: Vec::new(),
            gravity,
            friction: FrictionTable::uniform(0.0),
            contact_model: ContactModel::Point,
        }
    }

    pub fn validate(&self) -> Result<(), StepperError> {
        for r in &self.rods {
            r.params.validate()?;
            if r.velocity.len() != r.state.dof_count() {
                return Err(StepperError::InvalidSystem("rod velocity length".into()));
            }
        }
        for b in &self.bodies {
            b.shape.kind.validate()?;
            if b.is_dynamic() && (!(b.mass > 0.0) || matches!(b.shape.kind, ShapeKind::Halfspace)) {
                return Err(StepperError::InvalidSystem("dynamic bodies need positive mass and a bounded shape".into()));
            }
        }
        for c in &self.controllers {
            let ok = match *c {
                Controller::NodePd { rod, node, .. } | Controller::NodeForce { rod, node, .. } | Controller::Clamp { rod, node, .. } => {
                    rod < self.rods.len() && node < self.rods[rod].state.node_count()
                }
                Controller::BodyPd { body, .. } => body < self.bodies.len() && self.bodies[body].is_dynamic(),
            };
            if !ok {
                return Err(StepperError::InvalidSystem(format!("controller {c:?} references a missing target")));
            }
        }
        Ok(())
    }

    /// Velocity layout: rods first, then six DoFs per rigid body.
    pub fn topology(&self) -> SystemTopology {
        let mut offset = 0;
        let mut rods = Vec::new();
        for r in &self.rods {
            rods.push(BodyLayout::Rod { offset, node_count: r.state.node_count() });
            offset += r.state.dof_count();
        }
        let mut bodies = Vec::new();
        for b in &self.bodies {
            bodies.push(BodyLayout::Rigid { offset, rotation: b.rotation(), com: b.com() });
            offset += 6;
        }
        SystemTopology { rods, bodies, n_v: offset }
    }

    pub fn rod_offsets(&self) -> Vec<usize> {
        let mut out = Vec::new();
        let mut o = 0;
        for r in &self.rods {
            out.push(o);
            o += r.state.dof_count();
        }
        out
    }

    pub fn body_offset(&self, body: usize) -> usize {
        self.rods.iter().map(|r| r.state.dof_count()).sum::<usize>() + 6 * body
    }

    pub fn velocity(&self) -> Vec<f64> {
        let mut v = Vec::new();
        for r in &self.rods {
            v.extend_from_slice(&r.velocity);
        }
        for b in &self.bodies {
            v.extend(b.angular_velocity.iter().chain(b.linear_velocity.iter()));
        }
        v
    }

    /// Generalized coordinates: rod DoFs, then per body quaternion `(w, x, y, z)` and position.
    pub fn positions(&self) -> Vec<f64> {
        let mut q = Vec::new();
        for r in &self.rods {
            q.extend(r.state.q());
        }
        for b in &self.bodies {
            let qq = b.shape.pose.rotation.quaternion();
            q.extend([qq.w, qq.i, qq.j, qq.k]);
            q.extend(b.com().iter());
        }
        q
    }

    /// Prescribed velocity of each DoF, `None` for free DoFs.
    pub fn prescribed(&self) -> Vec<Option<f64>> {
        let mut out: Vec<Option<f64>> = vec![None; self.topology().n_v];
        let offsets = self.rod_offsets();
        for c in &self.controllers {
            if let Controller::Clamp { rod, node, twist } = *c {
                let o = offsets[rod];
                for d in 0..3 {
                    out[o + RodState::node_dof(node) + d] = Some(0.0);
                }
                if twist {
                    let s = &self.rods[rod].state;
                    for e in 0..s.edge_count() {
                        let (a, b) = s.edge_nodes(e);
                        if a == node || b == node {
                            out[o + RodState::edge_dof(e)] = Some(0.0);
                        }
                    }
                }
            }
        }
        for (i, b) in self.bodies.iter().enumerate() {
            let o = self.body_offset(i);
            match b.motion {
                BodyMotion::Dynamic => {}
                BodyMotion::Fixed => (0..6).for_each(|k| out[o + k] = Some(0.0)),
                BodyMotion::Kinematic { .. } => {
                    for k in 0..3 {
                        out[o + k] = Some(b.angular_velocity[k]);
                        out[o + 3 + k] = Some(b.linear_velocity[k]);
                    }
                }
            }
        }
        out
    }

    /// Kinetic energy `½ vᵀ M v` with lumped rod masses.
    pub fn kinetic_energy(&self) -> Result<f64, StepperError> {
        let mut e = 0.0;
        for r in &self.rods {
            let m = crate::rod::lumped_mass(&r.state, &r.params)?;
            e += 0.5 * m.iter().zip(&r.velocity).map(|(m, v)| m * v * v).sum::<f64>();
        }
        for b in self.bodies.iter().filter(|b| b.is_dynamic()) {
            e += 0.5 * b.mass * b.linear_velocity.norm_squared();
            e += 0.5 * b.inertia.component_mul(&b.angular_velocity).dot(&b.angular_velocity);
        }
        Ok(e)
    }

    /// Gravitational potential energy relative to the origin.
    pub fn potential_energy(&self) -> Result<f64, StepperError> {
        let mut e = 0.0;
        for r in &self.rods {
            let m = crate::rod::lumped_mass(&r.state, &r.params)?;
            for (i, x) in r.state.nodes.iter().enumerate() {
                e -= m[RodState::node_dof(i)] * self.gravity.dot(x);
            }
        }
        for b in self.bodies.iter().filter(|b| b.is_dynamic()) {
            e -= b.mass * self.gravity.dot(&b.com());
        }
        Ok(e)
    }
}
