use crate::math::Vec3;

use super::shape::{box_sdf, Shape, ShapeKind};
use super::CollisionError;

/// Geometric result of a point-contact query.
///
/// `normal` points from shape B into shape A; `phi` is negative when the
/// shapes overlap; `position` lies halfway between the two surfaces.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GeomContact {
    pub position: Vec3,
    pub normal: Vec3,
    pub phi: f64,
}

impl GeomContact {
    fn flipped(self) -> Self {
        Self { normal: -self.normal, ..self }
    }
}

/// Contacts between two shapes that overlap; see [`point_contact_query_with_margin`].
pub fn point_contact_query(a: &Shape, b: &Shape) -> Result<Vec<GeomContact>, CollisionError> {
    point_contact_query_with_margin(a, b, 0.0)
}

/// Contacts with signed distance at most `margin`.
pub fn point_contact_query_with_margin(a: &Shape, b: &Shape, margin: f64) -> Result<Vec<GeomContact>, CollisionError> {
    fn rank(k: &ShapeKind) -> u8 {
        match k {
            ShapeKind::Sphere { .. } => 0,
            ShapeKind::Capsule { .. } => 1,
            ShapeKind::Box { .. } => 2,
            ShapeKind::Halfspace => 3,
        }
    }
    if rank(&a.kind) > rank(&b.kind) {
        let out = ordered_query(b, a, margin)?;
        return Ok(out.into_iter().map(GeomContact::flipped).collect());
    }
    ordered_query(a, b, margin)
}

fn ordered_query(a: &Shape, b: &Shape, margin: f64) -> Result<Vec<GeomContact>, CollisionError> {
    use ShapeKind::*;
    let mut out = Vec::new();
    match (a.kind, b.kind) {
        (Sphere { radius: ra }, Sphere { radius: rb }) => {
            push_ball_ball(&mut out, &a.pose.translation, ra, &b.pose.translation, rb, margin);
        }
        (Sphere { radius }, Capsule { radius: rb, .. }) => {
            let c = a.pose.translation;
            let (p, q) = b.segment().unwrap();
            let s = closest_on_segment(&p, &q, &c);
            push_ball_ball(&mut out, &c, radius, &(p + s * (q - p)), rb, margin);
        }
        (Capsule { radius: ra, .. }, Capsule { radius: rb, .. }) => {
            let (p0, p1) = a.segment().unwrap();
            let (q0, q1) = b.segment().unwrap();
            let (s, t) = closest_between_segments(&p0, &p1, &q0, &q1);
            push_ball_ball(&mut out, &(p0 + s * (p1 - p0)), ra, &(q0 + t * (q1 - q0)), rb, margin);
        }
        (Sphere { radius }, Box { .. }) => {
            push_ball_box(&mut out, &a.pose.translation, radius, b, margin);
        }
        (Capsule { radius, .. }, Box { .. }) => {
            let (p, q) = a.segment().unwrap();
            let s = minimize_convex(|s| b.signed_distance(&(p + s * (q - p))));
            push_ball_box(&mut out, &(p + s * (q - p)), radius, b, margin);
            // A capsule lying along a face touches over an interval; its ends
            // carry the moment balance.
            for e in [0.0, 1.0] {
                if (e - s).abs() > 0.25 {
                    push_ball_box(&mut out, &(p + e * (q - p)), radius, b, margin);
                }
            }
        }
        (Sphere { radius }, Halfspace) => {
            push_ball_halfspace(&mut out, &a.pose.translation, radius, b, margin);
        }
        (Capsule { radius, .. }, Halfspace) => {
            let (p, q) = a.segment().unwrap();
            push_ball_halfspace(&mut out, &p, radius, b, margin);
            if (q - p).norm() > 0.0 {
                push_ball_halfspace(&mut out, &q, radius, b, margin);
            }
        }
        (Box { .. }, Halfspace) => {
            let n = b.halfspace_normal();
            for v in a.box_vertices().unwrap() {
                let phi = b.signed_distance(&v);
                if phi <= margin {
                    out.push(GeomContact { position: v - 0.5 * phi * n, normal: n, phi });
                }
            }
        }
        (Box { .. }, Box { .. }) => {
            for v in a.box_vertices().unwrap() {
                let phi = b.signed_distance(&v);
                if phi <= margin {
                    let n = box_normal(b, &v);
                    out.push(GeomContact { position: v - 0.5 * phi * n, normal: n, phi });
                }
            }
            for v in b.box_vertices().unwrap() {
                let phi = a.signed_distance(&v);
                if phi <= margin {
                    let n = -box_normal(a, &v);
                    out.push(GeomContact { position: v + 0.5 * phi * n, normal: n, phi });
                }
            }
        }
        _ => {
            return Err(CollisionError::UnsupportedPair { a: a.kind.name(), b: b.kind.name() });
        }
    }
    Ok(out)
}

fn push_ball_ball(out: &mut Vec<GeomContact>, ca: &Vec3, ra: f64, cb: &Vec3, rb: f64, margin: f64) {
    let d = ca - cb;
    let dist = d.norm();
    let phi = dist - ra - rb;
    if phi > margin {
        return;
    }
    let n = if dist > 1e-14 { d / dist } else { Vec3::z() };
    let position = ca - n * (ra + 0.5 * phi);
    out.push(GeomContact { position, normal: n, phi });
}

fn push_ball_halfspace(out: &mut Vec<GeomContact>, c: &Vec3, r: f64, h: &Shape, margin: f64) {
    let n = h.halfspace_normal();
    let phi = h.signed_distance(c) - r;
    if phi <= margin {
        out.push(GeomContact { position: c - n * (r + 0.5 * phi), normal: n, phi });
    }
}

fn push_ball_box(out: &mut Vec<GeomContact>, c: &Vec3, r: f64, b: &Shape, margin: f64) {
    let d = b.signed_distance(c);
    let phi = d - r;
    if phi <= margin {
        let n = box_normal(b, c);
        out.push(GeomContact { position: c - n * (r + 0.5 * phi), normal: n, phi });
    }
}

/// Outward unit normal of a box at the surface feature nearest to `p`.
pub(crate) fn box_normal(b: &Shape, p: &Vec3) -> Vec3 {
    let h = match b.kind {
        ShapeKind::Box { half_extents } => half_extents,
        _ => unreachable!("box_normal on {}", b.kind.name()),
    };
    let l = b.pose.inverse_transform_point(p);
    let q = l.abs() - h;
    let local = if q.max() > 0.0 {
        let c = l.sup(&-h).inf(&h);
        let d = l - c;
        d / d.norm()
    } else {
        let k = q.imax();
        let mut n = Vec3::zeros();
        n[k] = if l[k] >= 0.0 { 1.0 } else { -1.0 };
        n
    };
    debug_assert!(box_sdf(&l, &h).is_finite());
    b.pose.rotation * local
}

/// Parameter in [0, 1] of the point on segment `a`–`b` closest to `p`.
pub fn closest_on_segment(a: &Vec3, b: &Vec3, p: &Vec3) -> f64 {
    let d = b - a;
    let dd = d.dot(&d);
    if dd <= 0.0 {
        return 0.0;
    }
    ((p - a).dot(&d) / dd).clamp(0.0, 1.0)
}

/// Parameters `(s, t)` of the closest points between segments `p0`–`p1`
/// and `q0`–`q1`. Parallel overlaps resolve to the middle of the overlap.
pub fn closest_between_segments(p0: &Vec3, p1: &Vec3, q0: &Vec3, q1: &Vec3) -> (f64, f64) {
    let d1 = p1 - p0;
    let d2 = q1 - q0;
    let r = p0 - q0;
    let a = d1.dot(&d1);
    let e = d2.dot(&d2);
    let f = d2.dot(&r);
    if a <= 1e-300 && e <= 1e-300 {
        return (0.0, 0.0);
    }
    if a <= 1e-300 {
        return (0.0, (f / e).clamp(0.0, 1.0));
    }
    let c = d1.dot(&r);
    if e <= 1e-300 {
        return ((-c / a).clamp(0.0, 1.0), 0.0);
    }
    let b = d1.dot(&d2);
    let denom = a * e - b * b;
    if denom <= 1e-12 * a * e {
        // Parallel: project q's end points onto p and take the overlap middle.
        let s0 = (-c / a).clamp(0.0, 1.0);
        let s1 = ((q1 - p0).dot(&d1) / a).clamp(0.0, 1.0);
        let s = 0.5 * (s0 + s1);
        let t = closest_on_segment(q0, q1, &(p0 + s * d1));
        return (s, t);
    }
    let mut s = ((b * f - c * e) / denom).clamp(0.0, 1.0);
    let mut t = (b * s + f) / e;
    if t < 0.0 {
        t = 0.0;
        s = (-c / a).clamp(0.0, 1.0);
    } else if t > 1.0 {
        t = 1.0;
        s = ((b - c) / a).clamp(0.0, 1.0);
    }
    (s, t)
}

/// Minimizer over [0, 1] of a convex function by golden-section search.
fn minimize_convex(f: impl Fn(f64) -> f64) -> f64 {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let (mut lo, mut hi) = (0.0, 1.0);
    let mut x1 = hi - g * (hi - lo);
    let mut x2 = lo + g * (hi - lo);
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..80 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - g * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + g * (hi - lo);
            f2 = f(x2);
        }
        if hi - lo < 1e-12 {
            break;
        }
    }
    let mid = 0.5 * (lo + hi);
    [0.0, mid, 1.0].into_iter().min_by(|x, y| f(*x).total_cmp(&f(*y))).unwrap()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::Pose;

    fn sphere(r: f64, c: Vec3) -> Shape {
        Shape::new(ShapeKind::Sphere { radius: r }, Pose::from_translation(c))
    }

    #[test]
    fn sphere_on_halfspace() {
        let ground = Shape::new(ShapeKind::Halfspace, Pose::identity());
        let c = point_contact_query(&sphere(1.0, Vec3::new(0.0, 0.0, 0.8)), &ground).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].phi + 0.2).abs() < 1e-15);
        assert_eq!(c[0].normal, Vec3::z());
        let swapped = point_contact_query(&ground, &sphere(1.0, Vec3::new(0.0, 0.0, 0.8))).unwrap();
        assert_eq!(swapped[0].normal, -Vec3::z());
        assert_eq!(swapped[0].phi, c[0].phi);
    }

    #[test]
    fn separated_spheres_do_not_touch() {
        let c = point_contact_query(&sphere(1.0, Vec3::zeros()), &sphere(1.0, Vec3::new(3.0, 0.0, 0.0))).unwrap();
        assert!(c.is_empty());
    }

    #[test]
    fn crossing_capsules() {
        let a = Shape::capsule_between(&Vec3::new(-1.0, 0.0, 0.15), &Vec3::new(1.0, 0.0, 0.15), 0.1);
        let b = Shape::capsule_between(&Vec3::new(0.0, -1.0, 0.0), &Vec3::new(0.0, 1.0, 0.0), 0.1);
        let c = point_contact_query(&a, &b).unwrap();
        assert_eq!(c.len(), 1);
        assert!((c[0].phi + 0.05).abs() < 1e-14);
        assert!((c[0].normal - Vec3::z()).norm() < 1e-14);
        assert!((c[0].position - Vec3::new(0.0, 0.0, 0.075)).norm() < 1e-14);
    }

    #[test]
    fn box_resting_on_ground_reports_four_corners() {
        let ground = Shape::new(ShapeKind::Halfspace, Pose::identity());
        let b = Shape::new(ShapeKind::Box { half_extents: Vec3::new(0.5, 0.5, 0.5) }, Pose::from_translation(Vec3::new(0.0, 0.0, 0.49)));
        let c = point_contact_query(&b, &ground).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.iter().all(|k| (k.phi + 0.01).abs() < 1e-12));
    }

    #[test]
    fn halfspace_pair_unsupported() {
        let h = Shape::new(ShapeKind::Halfspace, Pose::identity());
        assert!(matches!(point_contact_query(&h, &h), Err(CollisionError::UnsupportedPair { .. })));
    }
}
