//! Forward-mode spatial jets.
//!
//! A [`SpatialJet`] carries the value of a scalar field together with its
//! gradient and Laplacian with respect to the electron coordinates. Only the
//! trace of the Hessian is propagated; the product rule for the Laplacian
//! needs nothing more than the gradients of the operands.

use std::ops::{Add, AddAssign, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Value, gradient and Laplacian of a scalar field at one point.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SpatialJet {
    pub value: f64,
    pub grad: [f64; 3],
    pub lap: f64,
}

/// Elementary scalar functions that can be lifted onto jets and tapes.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum UnaryFn {
    Exp,
    Sigmoid,
    Negate,
    Sqrt,
    Reciprocal,
}

impl UnaryFn {
    /// `[f, f', f'', f''']` at `x`. Domain checks are the caller's job.
    #[inline]
    pub fn derivatives(self, x: f64) -> [f64; 4] {
        match self {
            UnaryFn::Exp => {
                let e = x.exp();
                [e, e, e, e]
            }
            UnaryFn::Sigmoid => {
                let s = sigmoid(x);
                let s1 = s * (1.0 - s);
                let s2 = s1 * (1.0 - 2.0 * s);
                let s3 = s1 * (1.0 - 6.0 * s + 6.0 * s * s);
                [s, s1, s2, s3]
            }
            UnaryFn::Negate => [-x, -1.0, 0.0, 0.0],
            UnaryFn::Sqrt => {
                let s = x.sqrt();
                [s, 0.5 / s, -0.25 / (x * s), 0.375 / (x * x * s)]
            }
            UnaryFn::Reciprocal => {
                let r = 1.0 / x;
                let r2 = r * r;
                [r, -r2, 2.0 * r2 * r, -6.0 * r2 * r2]
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            UnaryFn::Exp => "exp",
            UnaryFn::Sigmoid => "sigmoid",
            UnaryFn::Negate => "negate",
            UnaryFn::Sqrt => "sqrt",
            UnaryFn::Reciprocal => "reciprocal",
        }
    }

    /// Rejects arguments outside the function's domain.
    pub fn check_domain(self, x: f64) -> Result<()> {
        match self {
            UnaryFn::Sqrt | UnaryFn::Reciprocal if !(x > 0.0) => Err(Error::Domain {
                op: self.name(),
                value: x,
            }),
            _ => Ok(()),
        }
    }
}

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl SpatialJet {
    pub const ZERO: SpatialJet = SpatialJet {
        value: 0.0,
        grad: [0.0; 3],
        lap: 0.0,
    };

    pub fn new(value: f64, grad: [f64; 3], lap: f64) -> Self {
        Self { value, grad, lap }
    }

    /// A field that does not vary in space.
    pub fn constant(value: f64) -> Self {
        Self {
            value,
            ..Self::ZERO
        }
    }

    /// Jet of coordinate `axis` (0 = x, 1 = y, 2 = z) at `r`.
    pub fn seed(r: [f64; 3], axis: usize) -> Self {
        assert!(axis < 3, "coordinate index {axis} out of range");
        let mut grad = [0.0; 3];
        grad[axis] = 1.0;
        Self {
            value: r[axis],
            grad,
            lap: 0.0,
        }
    }

    /// The three coordinate jets at `r`.
    pub fn coordinates(r: [f64; 3]) -> [Self; 3] {
        [Self::seed(r, 0), Self::seed(r, 1), Self::seed(r, 2)]
    }

    #[inline]
    pub fn grad_dot(&self, other: &Self) -> f64 {
        self.grad[0] * other.grad[0] + self.grad[1] * other.grad[1] + self.grad[2] * other.grad[2]
    }

    #[inline]
    pub fn grad_norm_sq(&self) -> f64 {
        self.grad_dot(self)
    }

    #[inline]
    pub fn scale(self, c: f64) -> Self {
        Self {
            value: self.value * c,
            grad: [self.grad[0] * c, self.grad[1] * c, self.grad[2] * c],
            lap: self.lap * c,
        }
    }

    /// `self += c * x`, componentwise.
    #[inline]
    pub fn axpy(&mut self, c: f64, x: &Self) {
        self.value += c * x.value;
        self.grad[0] += c * x.grad[0];
        self.grad[1] += c * x.grad[1];
        self.grad[2] += c * x.grad[2];
        self.lap += c * x.lap;
    }

    /// Sum of componentwise products; the pairing used when contracting an
    /// adjoint jet with a primal jet.
    #[inline]
    pub fn contract(&self, other: &Self) -> f64 {
        self.value * other.value + self.grad_dot(other) + self.lap * other.lap
    }

    /// Lifts a scalar function given its first two derivatives at `self.value`.
    #[inline]
    pub fn chain(self, f: f64, df: f64, d2f: f64) -> Self {
        Self {
            value: f,
            grad: [df * self.grad[0], df * self.grad[1], df * self.grad[2]],
            lap: d2f * self.grad_norm_sq() + df * self.lap,
        }
    }

    /// Applies an elementary function, checking its domain.
    pub fn apply(self, f: UnaryFn) -> Result<Self> {
        f.check_domain(self.value)?;
        let [v, d1, d2, _] = f.derivatives(self.value);
        Ok(self.chain(v, d1, d2))
    }

    pub fn exp(self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn sigmoid(self) -> Self {
        let [v, d1, d2, _] = UnaryFn::Sigmoid.derivatives(self.value);
        self.chain(v, d1, d2)
    }

    pub fn sqrt(self) -> Result<Self> {
        self.apply(UnaryFn::Sqrt)
    }

    pub fn recip(self) -> Result<Self> {
        self.apply(UnaryFn::Reciprocal)
    }

    pub fn is_finite(&self) -> bool {
        self.value.is_finite() && self.grad.iter().all(|g| g.is_finite()) && self.lap.is_finite()
    }
}

impl Add for SpatialJet {
    type Output = Self;

    #[inline]
    fn add(self, b: Self) -> Self {
        Self {
            value: self.value + b.value,
            grad: [
                self.grad[0] + b.grad[0],
                self.grad[1] + b.grad[1],
                self.grad[2] + b.grad[2],
            ],
            lap: self.lap + b.lap,
        }
    }
}

impl AddAssign for SpatialJet {
    #[inline]
    fn add_assign(&mut self, b: Self) {
        *self = *self + b;
    }
}

impl Sub for SpatialJet {
    type Output = Self;

    #[inline]
    fn sub(self, b: Self) -> Self {
        self + (-b)
    }
}

impl Neg for SpatialJet {
    type Output = Self;

    #[inline]
    fn neg(self) -> Self {
        self.scale(-1.0)
    }
}

impl Mul for SpatialJet {
    type Output = Self;

    #[inline]
    fn mul(self, b: Self) -> Self {
        let a = self;
        Self {
            value: a.value * b.value,
            grad: [
                a.value * b.grad[0] + b.value * a.grad[0],
                a.value * b.grad[1] + b.value * a.grad[1],
                a.value * b.grad[2] + b.value * a.grad[2],
            ],
            lap: a.lap * b.value + b.lap * a.value + 2.0 * a.grad_dot(&b),
        }
    }
}

impl Mul<f64> for SpatialJet {
    type Output = Self;

    #[inline]
    fn mul(self, c: f64) -> Self {
        self.scale(c)
    }
}

/// Euclidean distance from `center` to the point of the coordinate jets.
pub fn distance(coords: &[SpatialJet; 3], center: [f64; 3]) -> Result<SpatialJet> {
    let d = [
        coords[0] - SpatialJet::constant(center[0]),
        coords[1] - SpatialJet::constant(center[1]),
        coords[2] - SpatialJet::constant(center[2]),
    ];
    (d[0] * d[0] + d[1] * d[1] + d[2] * d[2]).sqrt()
}
