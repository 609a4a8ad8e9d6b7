//! Forward-mode automatic differentiation.
//!
//! [`Jet2`] carries second-order partials in `(t, r)`, [`Jet1`] first-order
//! ones, and [`Hyper`] carries gradient and Hessian in the eight tangent
//! bundle coordinates. All of them, and plain `f64`, implement [`Real`], so
//! formulas are written once and evaluated at whatever order is needed.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

/// Scalar type usable in generic formulas.
pub trait Real:
    Copy
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + Add<f64, Output = Self>
    + Sub<f64, Output = Self>
    + Mul<f64, Output = Self>
    + Div<f64, Output = Self>
{
    fn cst(c: f64) -> Self;
    fn val(&self) -> f64;

    /// Applies a scalar function given its value and first two derivatives
    /// at `self.val()`.
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self;

    fn recip(self) -> Self {
        let x = self.val();
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }
    fn sin(self) -> Self {
        let (s, c) = self.val().sin_cos();
        self.chain(s, c, -s)
    }
    fn cos(self) -> Self {
        let (s, c) = self.val().sin_cos();
        self.chain(c, -s, -c)
    }
    fn tan(self) -> Self {
        let t = self.val().tan();
        let sec2 = 1.0 + t * t;
        self.chain(t, sec2, 2.0 * t * sec2)
    }
    fn exp(self) -> Self {
        let e = self.val().exp();
        self.chain(e, e, e)
    }
    fn ln(self) -> Self {
        let x = self.val();
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }
    fn sqrt(self) -> Self {
        let x = self.val();
        let s = x.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * x))
    }
    fn abs(self) -> Self {
        let x = self.val();
        let sg = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        self.chain(x.abs(), sg, 0.0)
    }
    /// `self^p` for a real constant exponent; the base must be positive
    /// unless `p` is an integer.
    fn powf(self, p: f64) -> Self {
        let x = self.val();
        self.chain(
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
        )
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Self::cst(1.0);
        }
        let mut base = if n < 0 { self.recip() } else { self };
        let mut k = n.unsigned_abs();
        let mut acc: Option<Self> = None;
        while k > 0 {
            if k & 1 == 1 {
                acc = Some(match acc {
                    None => base,
                    Some(a) => a * base,
                });
            }
            k >>= 1;
            if k > 0 {
                base = base * base;
            }
        }
        acc.unwrap()
    }

    /// Evaluates the second-order Taylor polynomial of a `(t, r)` field at
    /// displacements `dt`, `dr` (both with zero value).
    fn taylor(j: &Jet2, dt: Self, dr: Self) -> Self {
        Self::cst(j.value)
            + dt * j.d_t
            + dr * j.d_r
            + dt * dt * (0.5 * j.d_tt)
            + dt * dr * j.d_tr
            + dr * dr * (0.5 * j.d_rr)
    }
}

impl Real for f64 {
    fn cst(c: f64) -> Self {
        c
    }
    fn val(&self) -> f64 {
        *self
    }
    fn chain(self, f0: f64, _f1: f64, _f2: f64) -> Self {
        f0
    }
    fn recip(self) -> Self {
        1.0 / self
    }
    fn sin(self) -> Self {
        f64::sin(self)
    }
    fn cos(self) -> Self {
        f64::cos(self)
    }
    fn exp(self) -> Self {
        f64::exp(self)
    }
    fn ln(self) -> Self {
        f64::ln(self)
    }
    fn sqrt(self) -> Self {
        f64::sqrt(self)
    }
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn powf(self, p: f64) -> Self {
        f64::powf(self, p)
    }
    fn taylor(j: &Jet2, _dt: Self, _dr: Self) -> Self {
        j.value
    }
}

macro_rules! scalar_ops {
    ($t:ty) => {
        impl Add<f64> for $t {
            type Output = $t;
            fn add(mut self, c: f64) -> $t {
                self.value += c;
                self
            }
        }
        impl Sub<f64> for $t {
            type Output = $t;
            fn sub(mut self, c: f64) -> $t {
                self.value -= c;
                self
            }
        }
        impl Div<f64> for $t {
            type Output = $t;
            fn div(self, c: f64) -> $t {
                self * (1.0 / c)
            }
        }
        impl Sub for $t {
            type Output = $t;
            fn sub(self, o: $t) -> $t {
                self + (-o)
            }
        }
        impl Div for $t {
            type Output = $t;
            #[allow(clippy::suspicious_arithmetic_impl)]
            fn div(self, o: $t) -> $t {
                self * o.recip()
            }
        }
    };
}

/// Value and first partials in `(t, r)`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet1 {
    pub value: f64,
    pub d_t: f64,
    pub d_r: f64,
}

impl Jet1 {
    pub fn new(value: f64, d_t: f64, d_r: f64) -> Self {
        Jet1 { value, d_t, d_r }
    }
    /// Same field as a [`Jet2`] with unknown second partials set to zero.
    pub fn to_jet2(self) -> Jet2 {
        Jet2 {
            value: self.value,
            d_t: self.d_t,
            d_r: self.d_r,
            ..Jet2::default()
        }
    }
}

impl Add for Jet1 {
    type Output = Jet1;
    fn add(self, o: Jet1) -> Jet1 {
        Jet1::new(self.value + o.value, self.d_t + o.d_t, self.d_r + o.d_r)
    }
}
impl Neg for Jet1 {
    type Output = Jet1;
    fn neg(self) -> Jet1 {
        Jet1::new(-self.value, -self.d_t, -self.d_r)
    }
}
impl Mul for Jet1 {
    type Output = Jet1;
    fn mul(self, o: Jet1) -> Jet1 {
        Jet1::new(
            self.value * o.value,
            self.d_t * o.value + self.value * o.d_t,
            self.d_r * o.value + self.value * o.d_r,
        )
    }
}
impl Mul<f64> for Jet1 {
    type Output = Jet1;
    fn mul(self, c: f64) -> Jet1 {
        Jet1::new(self.value * c, self.d_t * c, self.d_r * c)
    }
}
scalar_ops!(Jet1);

impl Real for Jet1 {
    fn cst(c: f64) -> Self {
        Jet1::new(c, 0.0, 0.0)
    }
    fn val(&self) -> f64 {
        self.value
    }
    fn chain(self, f0: f64, f1: f64, _f2: f64) -> Self {
        Jet1::new(f0, f1 * self.d_t, f1 * self.d_r)
    }
    fn taylor(j: &Jet2, dt: Self, dr: Self) -> Self {
        // First order suffices: dt, dr have zero value.
        Self::cst(j.value) + dt * j.d_t + dr * j.d_r
    }
}

/// Value and partials to second order in `(t, r)`.
///
/// `kink` is set when `abs` was evaluated exactly at zero, where its
/// derivative is taken as 0.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Jet2 {
    pub value: f64,
    pub d_t: f64,
    pub d_r: f64,
    pub d_tt: f64,
    pub d_tr: f64,
    pub d_rr: f64,
    pub kink: bool,
}

impl Jet2 {
    pub fn constant(c: f64) -> Self {
        Jet2 {
            value: c,
            ..Default::default()
        }
    }
    pub fn var_t(t: f64) -> Self {
        Jet2 {
            value: t,
            d_t: 1.0,
            ..Default::default()
        }
    }
    pub fn var_r(r: f64) -> Self {
        Jet2 {
            value: r,
            d_r: 1.0,
            ..Default::default()
        }
    }
    pub fn to_jet1(self) -> Jet1 {
        Jet1::new(self.value, self.d_t, self.d_r)
    }
    /// `∂_t` of the field as a first-order jet.
    pub fn partial_t(self) -> Jet1 {
        Jet1::new(self.d_t, self.d_tt, self.d_tr)
    }
    /// `∂_r` of the field as a first-order jet.
    pub fn partial_r(self) -> Jet1 {
        Jet1::new(self.d_r, self.d_tr, self.d_rr)
    }
}

impl Add for Jet2 {
    type Output = Jet2;
    fn add(self, o: Jet2) -> Jet2 {
        Jet2 {
            value: self.value + o.value,
            d_t: self.d_t + o.d_t,
            d_r: self.d_r + o.d_r,
            d_tt: self.d_tt + o.d_tt,
            d_tr: self.d_tr + o.d_tr,
            d_rr: self.d_rr + o.d_rr,
            kink: self.kink || o.kink,
        }
    }
}
impl Neg for Jet2 {
    type Output = Jet2;
    fn neg(self) -> Jet2 {
        self * -1.0
    }
}
impl Mul for Jet2 {
    type Output = Jet2;
    fn mul(self, o: Jet2) -> Jet2 {
        let (f, g) = (self, o);
        Jet2 {
            value: f.value * g.value,
            d_t: f.d_t * g.value + f.value * g.d_t,
            d_r: f.d_r * g.value + f.value * g.d_r,
            d_tt: f.d_tt * g.value + 2.0 * f.d_t * g.d_t + f.value * g.d_tt,
            d_tr: f.d_tr * g.value + f.d_t * g.d_r + f.d_r * g.d_t + f.value * g.d_tr,
            d_rr: f.d_rr * g.value + 2.0 * f.d_r * g.d_r + f.value * g.d_rr,
            kink: f.kink || g.kink,
        }
    }
}
impl Mul<f64> for Jet2 {
    type Output = Jet2;
    fn mul(self, c: f64) -> Jet2 {
        Jet2 {
            value: self.value * c,
            d_t: self.d_t * c,
            d_r: self.d_r * c,
            d_tt: self.d_tt * c,
            d_tr: self.d_tr * c,
            d_rr: self.d_rr * c,
            kink: self.kink,
        }
    }
}
scalar_ops!(Jet2);

impl Real for Jet2 {
    fn cst(c: f64) -> Self {
        Jet2::constant(c)
    }
    fn val(&self) -> f64 {
        self.value
    }
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        Jet2 {
            value: f0,
            d_t: f1 * self.d_t,
            d_r: f1 * self.d_r,
            d_tt: f2 * self.d_t * self.d_t + f1 * self.d_tt,
            d_tr: f2 * self.d_t * self.d_r + f1 * self.d_tr,
            d_rr: f2 * self.d_r * self.d_r + f1 * self.d_rr,
            kink: self.kink,
        }
    }
    fn abs(self) -> Self {
        let x = self.value;
        let sg = if x > 0.0 {
            1.0
        } else if x < 0.0 {
            -1.0
        } else {
            0.0
        };
        let mut out = self.chain(x.abs(), sg, 0.0);
        out.kink |= x == 0.0;
        out
    }
}

/// Number of independent variables carried by [`Hyper`].
pub const NV: usize = 8;

/// Value, gradient and Hessian in the eight coordinates
/// `(t, r, θ, φ, ṫ, ṙ, θ̇, φ̇)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hyper {
    pub value: f64,
    pub grad: [f64; NV],
    pub hess: [[f64; NV]; NV],
}

impl Hyper {
    pub fn constant(c: f64) -> Self {
        Hyper {
            value: c,
            grad: [0.0; NV],
            hess: [[0.0; NV]; NV],
        }
    }
    /// Independent variable number `i` with value `x`.
    pub fn var(x: f64, i: usize) -> Self {
        let mut h = Hyper::constant(x);
        h.grad[i] = 1.0;
        h
    }
    /// The eight seeded coordinates of a point.
    pub fn seed(x: &[f64; NV]) -> [Hyper; NV] {
        std::array::from_fn(|i| Hyper::var(x[i], i))
    }
}

impl Add for Hyper {
    type Output = Hyper;
    fn add(mut self, o: Hyper) -> Hyper {
        self.value += o.value;
        for i in 0..NV {
            self.grad[i] += o.grad[i];
            for j in 0..NV {
                self.hess[i][j] += o.hess[i][j];
            }
        }
        self
    }
}
impl Neg for Hyper {
    type Output = Hyper;
    fn neg(self) -> Hyper {
        self * -1.0
    }
}
impl Mul for Hyper {
    type Output = Hyper;
    fn mul(self, o: Hyper) -> Hyper {
        let mut out = Hyper::constant(self.value * o.value);
        for i in 0..NV {
            out.grad[i] = self.grad[i] * o.value + self.value * o.grad[i];
            for j in 0..NV {
                out.hess[i][j] = self.hess[i][j] * o.value
                    + self.value * o.hess[i][j]
                    + self.grad[i] * o.grad[j]
                    + o.grad[i] * self.grad[j];
            }
        }
        out
    }
}
impl Mul<f64> for Hyper {
    type Output = Hyper;
    fn mul(mut self, c: f64) -> Hyper {
        self.value *= c;
        for i in 0..NV {
            self.grad[i] *= c;
            for j in 0..NV {
                self.hess[i][j] *= c;
            }
        }
        self
    }
}
scalar_ops!(Hyper);

impl Real for Hyper {
    fn cst(c: f64) -> Self {
        Hyper::constant(c)
    }
    fn val(&self) -> f64 {
        self.value
    }
    fn chain(self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Hyper::constant(f0);
        for i in 0..NV {
            out.grad[i] = f1 * self.grad[i];
            for j in 0..NV {
                out.hess[i][j] = f2 * self.grad[i] * self.grad[j] + f1 * self.hess[i][j];
            }
        }
        out
    }
}
