use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::RodError;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum CrossSection {
    Circular { radius: f64 },
    /// `width` is measured along the first material director, `height`
    /// along the second.
    Rectangular { width: f64, height: f64 },
}

impl CrossSection {
    pub fn area(&self) -> f64 {
        match *self {
            CrossSection::Circular { radius } => PI * radius * radius,
            CrossSection::Rectangular { width, height } => width * height,
        }
    }

    /// Second moment for bending that displaces the section along m1
    /// (pairs with the first scalar curvature).
    pub fn i1(&self) -> f64 {
        match *self {
            CrossSection::Circular { radius } => PI * radius.powi(4) / 4.0,
            CrossSection::Rectangular { width, height } => width.powi(3) * height / 12.0,
        }
    }

    pub fn i2(&self) -> f64 {
        match *self {
            CrossSection::Circular { radius } => PI * radius.powi(4) / 4.0,
            CrossSection::Rectangular { width, height } => width * height.powi(3) / 12.0,
        }
    }

    pub fn polar_moment(&self) -> f64 {
        self.i1() + self.i2()
    }

    /// Radius of the capsule used for point contact, or the half-diagonal
    /// bound for rectangular sections.
    pub fn contact_radius(&self) -> f64 {
        match *self {
            CrossSection::Circular { radius } => radius,
            CrossSection::Rectangular { width, height } => 0.5 * width.min(height),
        }
    }
}

/// Material and section data of one rod.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RodParameters {
    pub youngs_modulus: f64,
    pub shear_modulus: f64,
    pub cross_section: CrossSection,
    pub density: f64,
    pub rayleigh_alpha: f64,
    pub rayleigh_beta: f64,
}

impl RodParameters {
    pub fn new(
        youngs_modulus: f64,
        shear_modulus: f64,
        cross_section: CrossSection,
        density: f64,
        rayleigh_alpha: f64,
        rayleigh_beta: f64,
    ) -> Result<Self, RodError> {
        let p = Self { youngs_modulus, shear_modulus, cross_section, density, rayleigh_alpha, rayleigh_beta };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), RodError> {
        let positive = [
            ("youngs_modulus", self.youngs_modulus),
            ("shear_modulus", self.shear_modulus),
            ("density", self.density),
            ("area", self.area()),
            ("i1", self.i1()),
            ("i2", self.i2()),
            ("polar_moment", self.polar_moment()),
        ];
        for (name, v) in positive {
            if !(v > 0.0) || !v.is_finite() {
                return Err(RodError::InvalidParameter { name, value: v });
            }
        }
        for (name, v) in [("rayleigh_alpha", self.rayleigh_alpha), ("rayleigh_beta", self.rayleigh_beta)] {
            if !(v >= 0.0) || !v.is_finite() {
                return Err(RodError::InvalidParameter { name, value: v });
            }
        }
        Ok(())
    }

    pub fn area(&self) -> f64 {
        self.cross_section.area()
    }
    pub fn i1(&self) -> f64 {
        self.cross_section.i1()
    }
    pub fn i2(&self) -> f64 {
        self.cross_section.i2()
    }
    pub fn polar_moment(&self) -> f64 {
        self.cross_section.polar_moment()
    }
    pub fn stretch_stiffness(&self) -> f64 {
        self.youngs_modulus * self.area()
    }
    pub fn twist_stiffness(&self) -> f64 {
        self.shear_modulus * self.polar_moment()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circular_section_moments() {
        let s = CrossSection::Circular { radius: 0.01 };
        assert_eq!(s.i1(), s.i2());
        assert!((s.polar_moment() - (s.i1() + s.i2())).abs() < 1e-30);
        assert!((s.area() - PI * 1e-4).abs() < 1e-18);
    }

    #[test]
    fn rejects_zero_density() {
        let s = CrossSection::Circular { radius: 0.01 };
        assert!(matches!(
            RodParameters::new(1e6, 4e5, s, 0.0, 0.0, 0.0),
            Err(RodError::InvalidParameter { name: "density", .. })
        ));
        assert!(RodParameters::new(1e6, 4e5, s, 1000.0, -1.0, 0.0).is_err());
    }
}
