use std::fmt::Write as _;

use crate::math::Vec3;

use super::CollisionError;

/// One polygon of a patch dump.
#[derive(Clone, Debug, PartialEq)]
pub struct DumpPolygon {
    pub body_a: String,
    pub body_b: String,
    pub normal: Vec3,
    pub area: f64,
    pub vertices: Vec<Vec3>,
}

/// Polygon soup, one polygon per line:
/// `body_a body_b nx ny nz area x1 y1 z1 x2 y2 z2 ...`. Lines starting
/// with `#` are comments.
pub fn write_patch_dump(polys: &[DumpPolygon]) -> String {
    let mut s = String::from("# body_a body_b nx ny nz area vertices...\n");
    for p in polys {
        write!(s, "{} {} {:e} {:e} {:e} {:e}", p.body_a, p.body_b, p.normal.x, p.normal.y, p.normal.z, p.area).unwrap();
        for v in &p.vertices {
            write!(s, " {:e} {:e} {:e}", v.x, v.y, v.z).unwrap();
        }
        s.push('\n');
    }
    s
}

pub fn parse_patch_dump(text: &str) -> Result<Vec<DumpPolygon>, CollisionError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |reason: String| CollisionError::DumpParse { line: i + 1, reason };
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() < 6 {
            return Err(err(format!("expected at least 6 fields, found {}", tokens.len())));
        }
        let nums = tokens[2..]
            .iter()
            .map(|t| t.parse::<f64>().map_err(|_| err(format!("not a number: {t:?}"))))
            .collect::<Result<Vec<f64>, _>>()?;
        if nums.iter().any(|x| !x.is_finite()) {
            return Err(err("non-finite value".into()));
        }
        let coords = &nums[4..];
        if coords.len() % 3 != 0 || coords.len() < 9 {
            return Err(err(format!("vertex list of {} numbers is not three or more points", coords.len())));
        }
        out.push(DumpPolygon {
            body_a: tokens[0].to_string(),
            body_b: tokens[1].to_string(),
            normal: Vec3::new(nums[0], nums[1], nums[2]),
            area: nums[3],
            vertices: coords.chunks(3).map(|c| Vec3::new(c[0], c[1], c[2])).collect(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let p = DumpPolygon {
            body_a: "ball".into(),
            body_b: "ground".into(),
            normal: Vec3::z(),
            area: 1.5e-4,
            vertices: vec![Vec3::zeros(), Vec3::x() * 0.01, Vec3::y() * 0.01],
        };
        let text = write_patch_dump(std::slice::from_ref(&p));
        assert_eq!(parse_patch_dump(&text).unwrap(), vec![p]);
    }

    #[test]
    fn rejects_short_vertex_list() {
        assert!(matches!(
            parse_patch_dump("a b 0 0 1 1 0 0 0 1 1 1"),
            Err(CollisionError::DumpParse { line: 1, .. })
        ));
    }
}
