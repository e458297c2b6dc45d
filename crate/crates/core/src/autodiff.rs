//! Second-order forward-mode differentiation over a fixed number of inputs.
//!
//! [`Jet`] carries a value, gradient and full Hessian. The rod bending and
//! twisting stencil is written once, generically over [`Scalar`], and
//! evaluated with `f64` for energies and [`Jet8`] for Hessians.

use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(&self) -> f64;
    fn sqrt(self) -> Self;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn atan2(self, x: Self) -> Self;

    fn scale(self, s: f64) -> Self {
        self * Self::cst(s)
    }
}

impl Scalar for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn atan2(self, x: Self) -> Self {
        f64::atan2(self, x)
    }
    fn scale(self, s: f64) -> Self {
        self * s
    }
}

/// Value, gradient and Hessian. The Hessian is stored as its packed upper
/// triangle, `M = N(N+1)/2` entries row by row; read it through [`Jet::hess`].
#[derive(Clone, Copy, Debug)]
pub struct Jet<const N: usize, const M: usize> {
    pub v: f64,
    pub g: [f64; N],
    h: [f64; M],
    /// No dependence on the variables; lets products skip derivative work.
    constant: bool,
}

pub type Jet8 = Jet<8, 36>;

impl<const N: usize, const M: usize> Jet<N, M> {
    const PACKED: () = assert!(M == N * (N + 1) / 2);

    pub fn constant(v: f64) -> Self {
        let () = Self::PACKED;
        Self { v, g: [0.0; N], h: [0.0; M], constant: true }
    }

    /// The `i`-th independent variable with value `v`.
    pub fn variable(v: f64, i: usize) -> Self {
        let mut j = Self::constant(v);
        j.g[i] = 1.0;
        j.constant = false;
        j
    }

    pub fn hess(&self, i: usize, k: usize) -> f64 {
        let (i, k) = (i.min(k), i.max(k));
        self.h[i * (2 * N + 1 - i) / 2 + k - i]
    }

    /// Apply a scalar function given f, f', f''.
    fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        if self.constant {
            return Self::constant(f);
        }
        let mut out = Self::constant(f);
        out.constant = false;
        for i in 0..N {
            out.g[i] = df * self.g[i];
        }
        let mut p = 0;
        for i in 0..N {
            let gi = d2f * self.g[i];
            for k in i..N {
                out.h[p] = df * self.h[p] + gi * self.g[k];
                p += 1;
            }
        }
        out
    }

    fn zip(mut self, o: &Self, f: impl Fn(f64, f64) -> f64) -> Self {
        self.v = f(self.v, o.v);
        if o.constant {
            return self;
        }
        self.constant = false;
        for i in 0..N {
            self.g[i] = f(self.g[i], o.g[i]);
        }
        for p in 0..M {
            self.h[p] = f(self.h[p], o.h[p]);
        }
        self
    }
}
impl<const N: usize, const M: usize> Add for Jet<N, M> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        if self.constant {
            return Self { v: self.v + o.v, ..o };
        }
        self.zip(&o, |a, b| a + b)
    }
}

impl<const N: usize, const M: usize> Sub for Jet<N, M> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        if self.constant {
            return (-o).zip(&self, |a, b| a + b);
        }
        self.zip(&o, |a, b| a - b)
    }
}

impl<const N: usize, const M: usize> Neg for Jet<N, M> {
    type Output = Self;
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl<const N: usize, const M: usize> Mul for Jet<N, M> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        if self.constant {
            return o.scale(self.v);
        }
        if o.constant {
            return self.scale(o.v);
        }
        let mut out = Self::constant(self.v * o.v);
        out.constant = false;
        for i in 0..N {
            out.g[i] = self.g[i] * o.v + self.v * o.g[i];
        }
        let mut p = 0;
        for i in 0..N {
            for k in i..N {
                out.h[p] = self.h[p] * o.v + self.v * o.h[p] + self.g[i] * o.g[k] + o.g[i] * self.g[k];
                p += 1;
            }
        }
        out
    }
}

impl<const N: usize, const M: usize> Div for Jet<N, M> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let r = 1.0 / o.v;
        self * o.chain(r, -r * r, 2.0 * r * r * r)
    }
}

impl<const N: usize, const M: usize> Scalar for Jet<N, M> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn sqrt(self) -> Self {
        let s = self.v.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.v))
    }
    fn sin(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.v.sin_cos();
        self.chain(c, -s, -c)
    }
    fn atan2(self, x: Self) -> Self {
        let y = self;
        let r2 = x.v * x.v + y.v * y.v;
        let fy = x.v / r2;
        let fx = -y.v / r2;
        let r4 = r2 * r2;
        let fyy = -2.0 * x.v * y.v / r4;
        let fxx = 2.0 * x.v * y.v / r4;
        let fxy = (y.v * y.v - x.v * x.v) / r4;
        let mut out = Self::constant(y.v.atan2(x.v));
        if x.constant && y.constant {
            return out;
        }
        out.constant = false;
        for i in 0..N {
            out.g[i] = fy * y.g[i] + fx * x.g[i];
        }
        let mut p = 0;
        for i in 0..N {
            for k in i..N {
                out.h[p] = fy * y.h[p]
                    + fx * x.h[p]
                    + fyy * y.g[i] * y.g[k]
                    + fxx * x.g[i] * x.g[k]
                    + fxy * (y.g[i] * x.g[k] + x.g[i] * y.g[k]);
                p += 1;
            }
        }
        out
    }
    fn scale(mut self, s: f64) -> Self {
        self.v *= s;
        if self.constant {
            return self;
        }
        for g in &mut self.g {
            *g *= s;
        }
        for h in &mut self.h {
            *h *= s;
        }
        self
    }
}

/// Minimal 3-vector over a generic scalar.
#[derive(Clone, Copy, Debug)]
pub struct V3<T>(pub [T; 3]);

impl<T: Scalar> V3<T> {
    pub fn from_f64(v: &crate::math::Vec3) -> Self {
        V3([T::cst(v.x), T::cst(v.y), T::cst(v.z)])
    }
    pub fn dot(&self, o: &Self) -> T {
        self.0[0] * o.0[0] + self.0[1] * o.0[1] + self.0[2] * o.0[2]
    }
    pub fn cross(&self, o: &Self) -> Self {
        let a = &self.0;
        let b = &o.0;
        V3([
            a[1] * b[2] - a[2] * b[1],
            a[2] * b[0] - a[0] * b[2],
            a[0] * b[1] - a[1] * b[0],
        ])
    }
    pub fn mul(&self, s: T) -> Self {
        V3([self.0[0] * s, self.0[1] * s, self.0[2] * s])
    }
    pub fn add(&self, o: &Self) -> Self {
        V3([self.0[0] + o.0[0], self.0[1] + o.0[1], self.0[2] + o.0[2]])
    }
    pub fn sub(&self, o: &Self) -> Self {
        V3([self.0[0] - o.0[0], self.0[1] - o.0[1], self.0[2] - o.0[2]])
    }
    pub fn norm(&self) -> T {
        self.dot(self).sqrt()
    }
}
