use serde::{Deserialize, Serialize};

use super::shape::{Aabb, Shape, ShapeKind};

/// Identifies one collision primitive of the system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ColliderId {
    Segment { rod: usize, edge: usize },
    Body(usize),
}

/// Segment primitives of one rod, one per edge.
#[derive(Clone, Debug)]
pub struct RodGeometry {
    pub segments: Vec<Shape>,
    pub closed: bool,
    pub self_collision: bool,
    /// Segments whose index distance along the rod is at most this are not
    /// paired. 1 excludes exactly the segments sharing a node.
    pub exclusion_window: usize,
}

#[derive(Clone, Debug)]
pub struct BodyGeometry {
    pub shape: Shape,
    /// Pairs between two non-dynamic bodies are skipped.
    pub dynamic: bool,
}

fn excluded(rod: &RodGeometry, i: usize, j: usize) -> bool {
    let n = rod.segments.len();
    let d = i.abs_diff(j);
    let d = if rod.closed { d.min(n - d) } else { d };
    d <= rod.exclusion_window
}

/// Candidate pairs whose bounds, inflated by `margin`, overlap.
///
/// Rod segments pair with each other (self pairs only when enabled, never
/// within the exclusion window) and with every body; bodies pair with each
/// other when at least one is dynamic. Output is sorted.
pub fn filament_self_and_body_pairs(
    rods: &[RodGeometry],
    bodies: &[BodyGeometry],
    margin: f64,
) -> Vec<(ColliderId, ColliderId)> {
    struct Entry {
        id: ColliderId,
        bounds: Aabb,
        dynamic: bool,
    }
    let mut bounded = Vec::new();
    let mut unbounded = Vec::new();
    for (r, rod) in rods.iter().enumerate() {
        for (e, s) in rod.segments.iter().enumerate() {
            let bounds = s.aabb().expect("rod segments are bounded").inflated(margin);
            bounded.push(Entry { id: ColliderId::Segment { rod: r, edge: e }, bounds, dynamic: true });
        }
    }
    for (b, body) in bodies.iter().enumerate() {
        match body.shape.aabb() {
            Some(a) => bounded.push(Entry { id: ColliderId::Body(b), bounds: a.inflated(margin), dynamic: body.dynamic }),
            None => unbounded.push((b, body.dynamic)),
        }
    }

    let allowed = |a: &ColliderId, b: &ColliderId| match (*a, *b) {
        (ColliderId::Segment { rod: ra, edge: ea }, ColliderId::Segment { rod: rb, edge: eb }) => {
            ra != rb || (rods[ra].self_collision && !excluded(&rods[ra], ea, eb))
        }
        _ => true,
    };

    let mut out = Vec::new();
    bounded.sort_by(|a, b| a.bounds.min.x.total_cmp(&b.bounds.min.x).then(a.id.cmp(&b.id)));
    for i in 0..bounded.len() {
        for j in i + 1..bounded.len() {
            if bounded[j].bounds.min.x > bounded[i].bounds.max.x {
                break;
            }
            let (a, b) = (&bounded[i], &bounded[j]);
            if !(a.dynamic || b.dynamic) || !a.bounds.overlaps(&b.bounds) || !allowed(&a.id, &b.id) {
                continue;
            }
            out.push(if a.id < b.id { (a.id, b.id) } else { (b.id, a.id) });
        }
    }
    for &(h, h_dynamic) in &unbounded {
        let plane = &bodies[h].shape;
        for e in &bounded {
            if !(e.dynamic || h_dynamic) {
                continue;
            }
            // Skip primitives entirely above the plane.
            if plane.kind == ShapeKind::Halfspace && lowest_signed_distance(plane, &e.bounds) > 0.0 {
                continue;
            }
            let hid = ColliderId::Body(h);
            out.push(if e.id < hid { (e.id, hid) } else { (hid, e.id) });
        }
    }
    out.sort();
    out.dedup();
    out
}

fn lowest_signed_distance(plane: &Shape, b: &Aabb) -> f64 {
    let n = plane.halfspace_normal();
    let c = 0.5 * (b.min + b.max);
    let h = 0.5 * (b.max - b.min);
    plane.signed_distance(&c) - h.dot(&n.abs())
}
