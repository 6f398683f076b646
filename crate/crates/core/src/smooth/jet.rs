//! First-order jets (dual numbers) for forward-mode differentiation.
//!
//! A [`Jet`] carries a value together with a single directional derivative.
//! Evaluating a function on jets seeded with a unit direction `e_i` yields
//! the value of the function and its partial derivative along `e_i` in one
//! pass; the chain rule is carried by the arithmetic.
//!
//! The [`Real`] trait abstracts over `f64` and [`Jet`] so that small
//! numerical kernels (matrix exponentials, linear solves, rotation matrices)
//! can be shared between plain evaluation and differentiated evaluation.

use std::fmt;
use std::ops::{Add, AddAssign, Div, DivAssign, Mul, MulAssign, Neg, Sub, SubAssign};

use num_traits::{One, Zero};

/// Value plus one directional derivative: `re + eps·ε` with `ε² = 0`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Jet {
    pub re: f64,
    pub eps: f64,
}

impl Jet {
    pub const fn new(re: f64, eps: f64) -> Self {
        Self { re, eps }
    }

    /// A constant: zero derivative.
    pub const fn constant(re: f64) -> Self {
        Self { re, eps: 0.0 }
    }

    /// A seeded variable: unit derivative.
    pub const fn variable(re: f64) -> Self {
        Self { re, eps: 1.0 }
    }

    #[inline]
    fn chain(self, value: f64, slope: f64) -> Self {
        Self {
            re: value,
            eps: self.eps * slope,
        }
    }
}

impl fmt::Display for Jet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} + {}ε", self.re, self.eps)
    }
}

impl From<f64> for Jet {
    fn from(re: f64) -> Self {
        Self::constant(re)
    }
}

impl Add for Jet {
    type Output = Jet;
    #[inline]
    fn add(self, rhs: Jet) -> Jet {
        Jet::new(self.re + rhs.re, self.eps + rhs.eps)
    }
}

impl Sub for Jet {
    type Output = Jet;
    #[inline]
    fn sub(self, rhs: Jet) -> Jet {
        Jet::new(self.re - rhs.re, self.eps - rhs.eps)
    }
}

impl Mul for Jet {
    type Output = Jet;
    #[inline]
    fn mul(self, rhs: Jet) -> Jet {
        Jet::new(self.re * rhs.re, self.eps * rhs.re + self.re * rhs.eps)
    }
}

impl Div for Jet {
    type Output = Jet;
    #[inline]
    fn div(self, rhs: Jet) -> Jet {
        let inv = 1.0 / rhs.re;
        Jet::new(
            self.re * inv,
            (self.eps * rhs.re - self.re * rhs.eps) * inv * inv,
        )
    }
}

impl Neg for Jet {
    type Output = Jet;
    #[inline]
    fn neg(self) -> Jet {
        Jet::new(-self.re, -self.eps)
    }
}

macro_rules! scalar_rhs {
    ($($tr:ident $m:ident),*) => {$(
        impl $tr<f64> for Jet {
            type Output = Jet;
            #[inline]
            fn $m(self, rhs: f64) -> Jet { $tr::$m(self, Jet::constant(rhs)) }
        }
        impl $tr<Jet> for f64 {
            type Output = Jet;
            #[inline]
            fn $m(self, rhs: Jet) -> Jet { $tr::$m(Jet::constant(self), rhs) }
        }
    )*};
}
scalar_rhs!(Add add, Sub sub, Mul mul, Div div);

macro_rules! assign_ops {
    ($($tr:ident $m:ident $op:ident),*) => {$(
        impl $tr for Jet {
            #[inline]
            fn $m(&mut self, rhs: Jet) { *self = self.$op(rhs); }
        }
    )*};
}
assign_ops!(AddAssign add_assign add, SubAssign sub_assign sub, MulAssign mul_assign mul, DivAssign div_assign div);

impl Zero for Jet {
    fn zero() -> Self {
        Jet::constant(0.0)
    }
    fn is_zero(&self) -> bool {
        self.re == 0.0 && self.eps == 0.0
    }
}

impl One for Jet {
    fn one() -> Self {
        Jet::constant(1.0)
    }
}

/// Scalar arithmetic shared by `f64` and [`Jet`].
pub trait Real:
    nalgebra::Scalar
    + Copy
    + Zero
    + One
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
    + AddAssign
    + SubAssign
    + MulAssign
    + DivAssign
    + Send
    + Sync
{
    fn from_f64(x: f64) -> Self;
    /// The primal value.
    fn re(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn powi(self, n: i32) -> Self;
}

impl Real for f64 {
    fn from_f64(x: f64) -> Self {
        x
    }
    fn re(self) -> f64 {
        self
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
    fn powi(self, n: i32) -> Self {
        f64::powi(self, n)
    }
}

impl Real for Jet {
    fn from_f64(x: f64) -> Self {
        Jet::constant(x)
    }
    fn re(self) -> f64 {
        self.re
    }
    fn sin(self) -> Self {
        self.chain(self.re.sin(), self.re.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.re.cos(), -self.re.sin())
    }
    fn exp(self) -> Self {
        let e = self.re.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.re.ln(), 1.0 / self.re)
    }
    fn sqrt(self) -> Self {
        let r = self.re.sqrt();
        self.chain(r, 0.5 / r)
    }
    fn powi(self, n: i32) -> Self {
        if n == 0 {
            return Jet::constant(1.0);
        }
        self.chain(self.re.powi(n), f64::from(n) * self.re.powi(n - 1))
    }
}
