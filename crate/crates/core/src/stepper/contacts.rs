use crate::collision::{
    build_pressure_body, closest_on_segment, filament_self_and_body_pairs, patch_contact_query,
    point_contact_query_with_margin, BodyGeometry, ColliderId, CollisionError, ContactPoint, ContactSide, GeomContact,
    PatchData, Pose, PressureBody, RodGeometry, Shape,
};

use super::system::{ContactModel, Participant, System};

/// Capsule primitives of every rod at its current configuration.
pub fn rod_geometry(system: &System) -> Vec<RodGeometry> {
    system
        .rods
        .iter()
        .map(|r| {
            let radius = r.params.cross_section.contact_radius();
            let segments = (0..r.state.edge_count())
                .map(|e| {
                    let (a, b) = r.state.edge_nodes(e);
                    Shape::capsule_between(&r.state.nodes[a], &r.state.nodes[b], radius)
                })
                .collect();
            let shortest = r.state.rest().edge_lengths.iter().cloned().fold(f64::INFINITY, f64::min);
            // Neighbours closer along the rod than one diameter always overlap.
            let exclusion_window = 1 + (2.0 * radius / shortest).ceil() as usize;
            RodGeometry { segments, closed: r.state.is_closed(), self_collision: r.self_collision, exclusion_window }
        })
        .collect()
}

/// Reference-pose pressure meshes, built once per body.
#[derive(Debug, Default)]
pub struct PressureCache {
    local: Vec<Option<PressureBody>>,
}

impl PressureCache {
    fn world(&mut self, system: &System, body: usize) -> Result<Option<PressureBody>, CollisionError> {
        if self.local.len() != system.bodies.len() {
            self.local = vec![None; system.bodies.len()];
        }
        let b = &system.bodies[body];
        let Some(spec) = b.pressure else { return Ok(None) };
        if self.local[body].is_none() {
            let reference = Shape::new(b.shape.kind, Pose::identity());
            self.local[body] = Some(build_pressure_body(&reference, spec.p_max, spec.resolution as usize)?);
        }
        Ok(self.local[body].as_ref().map(|p| p.transformed(&b.shape.pose)))
    }
}

fn segment_side(system: &System, rod: usize, edge: usize, p: &crate::math::Vec3) -> ContactSide {
    let s = &system.rods[rod].state;
    let (a, b) = s.edge_nodes(edge);
    ContactSide::Rod { rod, edge, s: closest_on_segment(&s.nodes[a], &s.nodes[b], p) }
}

fn participant(id: ColliderId) -> Participant {
    match id {
        ColliderId::Segment { rod, .. } => Participant::Rod(rod),
        ColliderId::Body(b) => Participant::Body(b),
    }
}

/// All contacts with signed distance at most `margin` at the current configuration.
pub fn detect_contacts(system: &System, margin: f64, pressure: &mut PressureCache) -> Result<Vec<ContactPoint>, CollisionError> {
    let rods = rod_geometry(system);
    let bodies: Vec<BodyGeometry> =
        system.bodies.iter().map(|b| BodyGeometry { shape: b.shape, dynamic: b.is_dynamic() }).collect();
    let pairs = filament_self_and_body_pairs(&rods, &bodies, margin);
    let mut out = Vec::new();
    for (a, b) in pairs {
        let mu = system.friction.lookup(participant(a), participant(b));
        let shape = |id: ColliderId| match id {
            ColliderId::Segment { rod, edge } => &rods[rod].segments[edge],
            ColliderId::Body(i) => &bodies[i].shape,
        };
        let side = |id: ColliderId, p: &crate::math::Vec3| match id {
            ColliderId::Segment { rod, edge } => segment_side(system, rod, edge, p),
            ColliderId::Body(body) => ContactSide::Body { body },
        };
        if let (ColliderId::Body(ia), ColliderId::Body(ib)) = (a, b) {
            if system.contact_model == ContactModel::Patch {
                if let (Some(pa), Some(pb)) = (pressure.world(system, ia)?, pressure.world(system, ib)?) {
                    for poly in patch_contact_query(&pa, &pb)? {
                        out.push(ContactPoint {
                            a: ContactSide::Body { body: ia },
                            b: ContactSide::Body { body: ib },
                            position: poly.centroid,
                            normal: poly.normal,
                            phi: poly.phi,
                            mu,
                            patch: Some(PatchData { area: poly.area, pressure: poly.pressure, gradient: poly.gradient }),
                        });
                    }
                    continue;
                }
            }
        }
        for GeomContact { position, normal, phi } in point_contact_query_with_margin(shape(a), shape(b), margin)? {
            out.push(ContactPoint { a: side(a, &position), b: side(b, &position), position, normal, phi, mu, patch: None });
        }
    }
    Ok(out)
}
