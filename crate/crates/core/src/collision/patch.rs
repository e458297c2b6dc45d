use crate::math::Vec3;

use super::pressure::PressureBody;
use super::CollisionError;

/// One polygon of a contact patch, reduced to an equivalent point contact.
#[derive(Clone, Debug, PartialEq)]
pub struct PatchPolygon {
    pub centroid: Vec3,
    /// From B into A.
    pub normal: Vec3,
    pub area: f64,
    pub pressure: f64,
    /// Effective pressure slope along the normal (Pa/m).
    pub gradient: f64,
    pub phi: f64,
    pub vertices: Vec<Vec3>,
}

impl PatchPolygon {
    pub fn normal_force(&self) -> f64 {
        self.area * self.pressure
    }

    pub fn stiffness(&self) -> f64 {
        self.area * self.gradient
    }
}

pub const MIN_POLYGON_AREA: f64 = 1e-14;
const MIN_FIELD_GRADIENT: f64 = 1e-12;

/// Equal-pressure surface between two pressure bodies, one polygon per
/// intersecting tet pair. Sorted by centroid for determinism.
pub fn patch_contact_query(a: &PressureBody, b: &PressureBody) -> Result<Vec<PatchPolygon>, CollisionError> {
    let mut out = Vec::new();
    if !a.aabb().overlaps(&b.aabb()) {
        return Ok(out);
    }
    let boxes_b: Vec<_> = (0..b.tets.len()).map(|t| b.tet_aabb(t)).collect();
    let fields_b: Vec<_> = (0..b.tets.len()).map(|t| b.tet_field(t)).collect();
    let region = b.aabb();
    for ta in 0..a.tets.len() {
        let box_a = a.tet_aabb(ta);
        if !box_a.overlaps(&region) {
            continue;
        }
        let (ga, ca) = a.tet_field(ta);
        let va = a.tet_vertices(ta);
        for tb in 0..b.tets.len() {
            if !box_a.overlaps(&boxes_b[tb]) {
                continue;
            }
            let (gb, cb) = fields_b[tb];
            let grad = ga - gb;
            let off = ca - cb;
            let f = va.map(|v| grad.dot(&v) + off);
            if grad.norm() < MIN_FIELD_GRADIENT {
                let scale = a.modulus.max(b.modulus);
                if f.iter().all(|x| x.abs() <= 1e-12 * scale) && tets_overlap(&va, &b.tet_vertices(tb)) {
                    return Err(CollisionError::DegenerateGradient);
                }
                continue;
            }
            let Some(poly) = plane_section(&va, &f) else { continue };
            let poly = clip_by_tet(poly, &b.tet_vertices(tb));
            if poly.len() < 3 {
                continue;
            }
            let n = grad / grad.norm();
            let (area, centroid) = polygon_area_centroid(&poly, &n);
            if area < MIN_POLYGON_AREA {
                continue;
            }
            let g_a = ga.dot(&n);
            let g_b = -gb.dot(&n);
            if !(g_a > 0.0 && g_b > 0.0) {
                continue;
            }
            let gradient = g_a * g_b / (g_a + g_b);
            let pressure = (ga.dot(&centroid) + ca).max(0.0);
            out.push(PatchPolygon { centroid, normal: n, area, pressure, gradient, phi: -pressure / gradient, vertices: poly });
        }
    }
    out.sort_by(|p, q| {
        (0..3).map(|k| p.centroid[k].total_cmp(&q.centroid[k])).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal)
    });
    Ok(out)
}

/// Polygon where the affine function with vertex values `f` vanishes inside tet `v`.
fn plane_section(v: &[Vec3; 4], f: &[f64; 4]) -> Option<Vec<Vec3>> {
    let mut pts = Vec::with_capacity(4);
    for i in 0..4 {
        for j in i + 1..4 {
            if (f[i] < 0.0) != (f[j] < 0.0) {
                let s = f[i] / (f[i] - f[j]);
                pts.push(v[i] + s * (v[j] - v[i]));
            }
        }
    }
    if pts.len() < 3 {
        return None;
    }
    if pts.len() == 4 {
        // The quad's vertices come in edge order (01,02,03,12,13,23 subset);
        // sort them by angle around the centroid.
        let c = pts.iter().sum::<Vec3>() / 4.0;
        let n = (pts[1] - pts[0]).cross(&(pts[2] - pts[0]));
        let n = if n.norm() > 0.0 { n.normalize() } else { return None };
        let u = (pts[0] - c).normalize();
        let w = n.cross(&u);
        pts.sort_by(|p, q| {
            let ap = (p - c).dot(&w).atan2((p - c).dot(&u));
            let aq = (q - c).dot(&w).atan2((q - c).dot(&u));
            ap.total_cmp(&aq)
        });
    }
    Some(pts)
}

/// Inward-facing planes `(normal, offset)` of a positively oriented tet:
/// a point is inside when `normal·x >= offset` for all four.
fn tet_planes(v: &[Vec3; 4]) -> [(Vec3, f64); 4] {
    let faces = [[1, 2, 3, 0], [0, 3, 2, 1], [0, 1, 3, 2], [0, 2, 1, 3]];
    faces.map(|[a, b, c, opp]| {
        let mut n = (v[b] - v[a]).cross(&(v[c] - v[a]));
        if n.dot(&(v[opp] - v[a])) < 0.0 {
            n = -n;
        }
        (n, n.dot(&v[a]))
    })
}

fn clip_by_tet(mut poly: Vec<Vec3>, tet: &[Vec3; 4]) -> Vec<Vec3> {
    for (n, d) in tet_planes(tet) {
        if poly.is_empty() {
            break;
        }
        let mut next = Vec::with_capacity(poly.len() + 1);
        for i in 0..poly.len() {
            let p = poly[i];
            let q = poly[(i + 1) % poly.len()];
            let (sp, sq) = (n.dot(&p) - d, n.dot(&q) - d);
            if sp >= 0.0 {
                next.push(p);
            }
            if (sp >= 0.0) != (sq >= 0.0) {
                next.push(p + (sp / (sp - sq)) * (q - p));
            }
        }
        poly = next;
    }
    poly
}

fn polygon_area_centroid(poly: &[Vec3], n: &Vec3) -> (f64, Vec3) {
    let o = poly[0];
    let mut area = 0.0;
    let mut c = Vec3::zeros();
    for i in 1..poly.len() - 1 {
        let a = 0.5 * (poly[i] - o).cross(&(poly[i + 1] - o)).dot(n);
        area += a;
        c += a * (o + poly[i] + poly[i + 1]) / 3.0;
    }
    if area.abs() < 1e-300 {
        return (0.0, o);
    }
    (area.abs(), c / area)
}

/// Whether two tets share interior volume (separating-axis test on face normals and edge pairs).
fn tets_overlap(a: &[Vec3; 4], b: &[Vec3; 4]) -> bool {
    let mut axes: Vec<Vec3> = tet_planes(a).iter().chain(tet_planes(b).iter()).map(|(n, _)| *n).collect();
    let edges = |v: &[Vec3; 4]| [v[1] - v[0], v[2] - v[0], v[3] - v[0], v[2] - v[1], v[3] - v[1], v[3] - v[2]];
    for ea in edges(a) {
        for eb in edges(b) {
            axes.push(ea.cross(&eb));
        }
    }
    axes.iter().filter(|ax| ax.norm() > 1e-300).all(|ax| {
        let pa = a.map(|p| p.dot(ax));
        let pb = b.map(|p| p.dot(ax));
        let (a0, a1) = (pa.iter().cloned().fold(f64::INFINITY, f64::min), pa.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        let (b0, b1) = (pb.iter().cloned().fold(f64::INFINITY, f64::min), pb.iter().cloned().fold(f64::NEG_INFINITY, f64::max));
        a0 < b1 && b0 < a1
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::collision::{build_pressure_body, Pose, Shape, ShapeKind};

    #[test]
    fn polygon_formulas() {
        let p = PatchPolygon {
            centroid: Vec3::zeros(),
            normal: Vec3::z(),
            area: 0.01,
            pressure: 100.0,
            gradient: 1e4,
            phi: -100.0 / 1e4,
            vertices: vec![],
        };
        assert!((p.normal_force() - 1.0).abs() < 1e-12);
        assert!((p.stiffness() - 100.0).abs() < 1e-12);
        assert!((p.phi + 0.01).abs() < 1e-15);
    }

    #[test]
    fn coincident_fields_are_degenerate() {
        let s = Shape::new(ShapeKind::Sphere { radius: 1.0 }, Pose::identity());
        let a = build_pressure_body(&s, 1e3, 0).unwrap();
        assert!(matches!(patch_contact_query(&a, &a), Err(CollisionError::DegenerateGradient)));
    }

    #[test]
    fn sphere_on_slab_patch_points_up() {
        let ground = build_pressure_body(&Shape::new(ShapeKind::Halfspace, Pose::identity()), 1e6, 1).unwrap();
        let ball = Shape::new(ShapeKind::Sphere { radius: 0.1 }, Pose::from_translation(Vec3::new(0.0, 0.0, 0.095)));
        let ball = build_pressure_body(&ball, 1e5, 2).unwrap();
        let patch = patch_contact_query(&ball, &ground).unwrap();
        assert!(!patch.is_empty());
        for p in &patch {
            assert!(p.normal.z > 0.9, "normal {:?}", p.normal);
            assert!(p.phi <= 0.0 && p.gradient > 0.0);
        }
        let swapped = patch_contact_query(&ground, &ball).unwrap();
        let f1: f64 = patch.iter().map(|p| p.normal_force()).sum();
        let f2: f64 = swapped.iter().map(|p| p.normal_force()).sum();
        assert!((f1 - f2).abs() < 1e-9 * f1);
    }
}
