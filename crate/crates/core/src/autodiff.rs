//! Scalar abstraction shared by the loss code.
//!
//! Everything differentiable is written once against [`Real`]; it is then
//! evaluated with `f64` for values, with [`Dual`] for exact forward-mode
//! gradients, and with [`Probe`] to measure how close an input sits to the
//! non-smooth points (`abs`, `min`, `max`) of the expression.

use std::cell::Cell;
use std::ops::{Add, Div, Mul, Neg, Sub};

pub trait Real:
    Copy
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn cst(v: f64) -> Self;
    fn value(self) -> f64;
    fn sin(self) -> Self;
    fn cos(self) -> Self;
    fn exp(self) -> Self;
    fn ln(self) -> Self;
    fn sqrt(self) -> Self;
    fn abs(self) -> Self;
    fn min(self, other: Self) -> Self;
    fn max(self, other: Self) -> Self;

    fn sin_cos(self) -> (Self, Self) {
        (self.sin(), self.cos())
    }
}

impl Real for f64 {
    fn cst(v: f64) -> Self {
        v
    }
    fn value(self) -> f64 {
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
    fn abs(self) -> Self {
        f64::abs(self)
    }
    fn min(self, other: Self) -> Self {
        f64::min(self, other)
    }
    fn max(self, other: Self) -> Self {
        f64::max(self, other)
    }
    fn sin_cos(self) -> (Self, Self) {
        f64::sin_cos(self)
    }
}

/// Value plus `N` partial derivatives.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dual<const N: usize> {
    pub v: f64,
    pub d: [f64; N],
}

impl<const N: usize> Dual<N> {
    pub fn constant(v: f64) -> Self {
        Self { v, d: [0.0; N] }
    }

    /// The `i`-th independent variable.
    pub fn var(v: f64, i: usize) -> Self {
        let mut d = [0.0; N];
        d[i] = 1.0;
        Self { v, d }
    }

    /// Seeds `values` as variables `offset..offset + M`.
    pub fn vars<const M: usize>(values: [f64; M], offset: usize) -> [Self; M] {
        let mut out = [Self::constant(0.0); M];
        for (k, v) in values.into_iter().enumerate() {
            out[k] = Self::var(v, offset + k);
        }
        out
    }

    fn chain(self, v: f64, dv: f64) -> Self {
        let mut d = self.d;
        for x in d.iter_mut() {
            *x *= dv;
        }
        Self { v, d }
    }
}

impl<const N: usize> Add for Dual<N> {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x += y;
        }
        Self { v: self.v + o.v, d }
    }
}

impl<const N: usize> Sub for Dual<N> {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        let mut d = self.d;
        for (x, y) in d.iter_mut().zip(o.d) {
            *x -= y;
        }
        Self { v: self.v - o.v, d }
    }
}

impl<const N: usize> Mul for Dual<N> {
    type Output = Self;
    fn mul(self, o: Self) -> Self {
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = self.d[i] * o.v + self.v * o.d[i];
        }
        Self { v: self.v * o.v, d }
    }
}

impl<const N: usize> Div for Dual<N> {
    type Output = Self;
    fn div(self, o: Self) -> Self {
        let inv = 1.0 / o.v;
        let v = self.v * inv;
        let mut d = [0.0; N];
        for i in 0..N {
            d[i] = (self.d[i] - v * o.d[i]) * inv;
        }
        Self { v, d }
    }
}

impl<const N: usize> Neg for Dual<N> {
    type Output = Self;
    fn neg(self) -> Self {
        self.chain(-self.v, -1.0)
    }
}

impl<const N: usize> Real for Dual<N> {
    fn cst(v: f64) -> Self {
        Self::constant(v)
    }
    fn value(self) -> f64 {
        self.v
    }
    fn sin(self) -> Self {
        self.chain(self.v.sin(), self.v.cos())
    }
    fn cos(self) -> Self {
        self.chain(self.v.cos(), -self.v.sin())
    }
    fn exp(self) -> Self {
        let e = self.v.exp();
        self.chain(e, e)
    }
    fn ln(self) -> Self {
        self.chain(self.v.ln(), 1.0 / self.v)
    }
    fn sqrt(self) -> Self {
        let r = self.v.sqrt();
        self.chain(r, 0.5 / r)
    }
    fn abs(self) -> Self {
        if self.v < 0.0 {
            -self
        } else {
            self
        }
    }
    fn min(self, other: Self) -> Self {
        if other.v < self.v {
            other
        } else {
            self
        }
    }
    fn max(self, other: Self) -> Self {
        if other.v > self.v {
            other
        } else {
            self
        }
    }
}

thread_local! {
    static PROBE_GAP: Cell<f64> = const { Cell::new(f64::INFINITY) };
}

/// `f64` wrapper that records the smallest distance to a branch point seen
/// while evaluating an expression (`|x|` for `abs`, `|a - b|` for `min`/`max`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Probe(pub f64);

impl Probe {
    /// Runs `f` and returns its result together with the smallest recorded gap.
    pub fn measure<R>(f: impl FnOnce() -> R) -> (R, f64) {
        PROBE_GAP.with(|g| g.set(f64::INFINITY));
        let r = f();
        let gap = PROBE_GAP.with(|g| g.get());
        (r, gap)
    }

    fn record(gap: f64) {
        PROBE_GAP.with(|g| {
            if gap < g.get() {
                g.set(gap)
            }
        });
    }
}

macro_rules! probe_binop {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr for Probe {
            type Output = Self;
            fn $f(self, o: Self) -> Self {
                Probe(self.0 $op o.0)
            }
        }
    };
}
probe_binop!(Add, add, +);
probe_binop!(Sub, sub, -);
probe_binop!(Mul, mul, *);
probe_binop!(Div, div, /);

impl Neg for Probe {
    type Output = Self;
    fn neg(self) -> Self {
        Probe(-self.0)
    }
}

impl Real for Probe {
    fn cst(v: f64) -> Self {
        Probe(v)
    }
    fn value(self) -> f64 {
        self.0
    }
    fn sin(self) -> Self {
        Probe(self.0.sin())
    }
    fn cos(self) -> Self {
        Probe(self.0.cos())
    }
    fn exp(self) -> Self {
        Probe(self.0.exp())
    }
    fn ln(self) -> Self {
        Probe(self.0.ln())
    }
    fn sqrt(self) -> Self {
        Probe(self.0.sqrt())
    }
    fn abs(self) -> Self {
        Probe::record(self.0.abs());
        Probe(self.0.abs())
    }
    fn min(self, other: Self) -> Self {
        Probe::record((self.0 - other.0).abs());
        Probe(self.0.min(other.0))
    }
    fn max(self, other: Self) -> Self {
        Probe::record((self.0 - other.0).abs());
        Probe(self.0.max(other.0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f<T: Real>(x: T, y: T) -> T {
        (x * y).sin() + x.exp() / (y * y + T::cst(1.0)).sqrt() - (x - y).abs().max(T::cst(0.1))
    }

    #[test]
    fn dual_matches_hand_derivative() {
        let [x, y] = Dual::<2>::vars([0.3, 1.7], 0);
        let r = f(x, y);
        let (xv, yv) = (0.3f64, 1.7f64);
        let s = (yv * yv + 1.0).sqrt();
        // d/dx: y cos(xy) + e^x / s + 1   (x < y, so |x - y| = y - x)
        let dx = yv * (xv * yv).cos() + xv.exp() / s + 1.0;
        let dy = xv * (xv * yv).cos() - xv.exp() * yv / (s * s * s) - 1.0;
        assert!((r.v - f(xv, yv)).abs() < 1e-15);
        assert!((r.d[0] - dx).abs() < 1e-12);
        assert!((r.d[1] - dy).abs() < 1e-12);
    }

    #[test]
    fn dual_ln_and_cos() {
        let x = Dual::<1>::var(2.0, 0);
        let r = x.ln() * x.cos();
        let expected = 0.5 * 2f64.cos() - 2f64.ln() * 2f64.sin();
        assert!((r.d[0] - expected).abs() < 1e-14);
    }

    #[test]
    fn probe_reports_branch_distance() {
        let (_, gap) = Probe::measure(|| f(Probe(0.3), Probe(1.7)));
        // |x - y| = 1.4 and max(1.4, 0.1) has gap 1.3
        assert!((gap - 1.3).abs() < 1e-12);
        let (_, gap) = Probe::measure(|| Probe(2.0).sin());
        assert!(gap.is_infinite());
    }
}
