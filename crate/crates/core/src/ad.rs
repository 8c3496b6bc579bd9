//! Forward-mode dual numbers.
//!
//! Regularized vector fields are derived from a scalar generating function
//! (an extended Hamiltonian). Evaluating that function over `Grad` yields its
//! exact gradient, and over `Hess` its exact Hessian, so fields and their
//! Jacobians come from one scalar definition with no hand-written derivatives.

use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar interface shared by `f64` and the dual types. Generating functions
/// are written once against this trait.
pub trait Scalar:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Mul<f64, Output = Self>
{
    fn constant(v: f64) -> Self;
    fn value(&self) -> f64;
    fn recip(self) -> Self;
    fn sqrt(self) -> Self;

    fn sq(self) -> Self {
        self * self
    }
}

impl Scalar for f64 {
    fn constant(v: f64) -> Self {
        v
    }
    fn value(&self) -> f64 {
        *self
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
}

/// Value with first derivatives along `N` seed directions.
#[derive(Clone, Copy, Debug)]
pub struct Grad<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Grad<N> {
    /// Seed the `i`-th independent variable.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; N];
        d[i] = 1.0;
        Grad { v, d }
    }

    fn chain(self, u: f64, du: f64) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = du * self.d[i];
        }
        Grad { v: u, d }
    }
}

impl<const N: usize> Add for Grad<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut d = self.d;
        for i in 0..N {
            d[i] += rhs.d[i];
        }
        Grad { v: self.v + rhs.v, d }
    }
}

impl<const N: usize> Sub for Grad<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut d = self.d;
        for i in 0..N {
            d[i] -= rhs.d[i];
        }
        Grad { v: self.v - rhs.v, d }
    }
}

impl<const N: usize> Mul for Grad<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * rhs.v + rhs.d[i] * self.v;
        }
        Grad { v: self.v * rhs.v, d }
    }
}

impl<const N: usize> Mul<f64> for Grad<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.chain(self.v * rhs, rhs)
    }
}

impl<const N: usize> Div for Grad<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const N: usize> Neg for Grad<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0)
    }
}

impl<const N: usize> Scalar for Grad<N> {
    fn constant(v: f64) -> Self {
        Grad { v, d: [0.0; N] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn recip(self) -> Self {
        let u = 1.0 / self.v;
        self.chain(u, -u * u)
    }
    fn sqrt(self) -> Self {
        let u = self.v.sqrt();
        self.chain(u, 0.5 / u)
    }
}

/// Value with first and second derivatives along `N` seed directions.
#[derive(Clone, Copy, Debug)]
pub struct Hess<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
    pub h: [[f64; N]; N],
}

impl<const N: usize> Hess<N> {
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; N];
        d[i] = 1.0;
        Hess { v, d, h: [[0.0; N]; N] }
    }

    /// Unary chain rule: value `u`, first derivative `du`, second `ddu`.
    fn chain(self, u: f64, du: f64, ddu: f64) -> Self {
        let mut d = [0.0; N];
        let mut h = [[0.0; N]; N];
        for i in 0..N {
            d[i] = du * self.d[i];
            for j in 0..N {
                h[i][j] = du * self.h[i][j] + ddu * self.d[i] * self.d[j];
            }
        }
        Hess { v: u, d, h }
    }
}

impl<const N: usize> Add for Hess<N> {
    type Output = Self;
    fn add(self, rhs: Self) -> Self {
        let mut out = self;
        out.v += rhs.v;
        for i in 0..N {
            out.d[i] += rhs.d[i];
            for j in 0..N {
                out.h[i][j] += rhs.h[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Sub for Hess<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        let mut out = self;
        out.v -= rhs.v;
        for i in 0..N {
            out.d[i] -= rhs.d[i];
            for j in 0..N {
                out.h[i][j] -= rhs.h[i][j];
            }
        }
        out
    }
}

impl<const N: usize> Mul for Hess<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let mut d = [0.0; N];
        let mut h = [[0.0; N]; N];
        for i in 0..N {
            d[i] = self.d[i] * rhs.v + rhs.d[i] * self.v;
            for j in 0..N {
                h[i][j] = self.h[i][j] * rhs.v
                    + rhs.h[i][j] * self.v
                    + self.d[i] * rhs.d[j]
                    + self.d[j] * rhs.d[i];
            }
        }
        Hess { v: self.v * rhs.v, d, h }
    }
}

impl<const N: usize> Mul<f64> for Hess<N> {
    type Output = Self;
    fn mul(self, rhs: f64) -> Self {
        self.chain(self.v * rhs, rhs, 0.0)
    }
}

impl<const N: usize> Div for Hess<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}

impl<const N: usize> Neg for Hess<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0, 0.0)
    }
}

impl<const N: usize> Scalar for Hess<N> {
    fn constant(v: f64) -> Self {
        Hess { v, d: [0.0; N], h: [[0.0; N]; N] }
    }
    fn value(&self) -> f64 {
        self.v
    }
    fn recip(self) -> Self {
        let u = 1.0 / self.v;
        self.chain(u, -u * u, 2.0 * u * u * u)
    }
    fn sqrt(self) -> Self {
        let u = self.v.sqrt();
        self.chain(u, 0.5 / u, -0.25 / (u * u * u))
    }
}
