//! Second-order forward jets over a fixed number of variables.
//!
//! A [`Jet`] carries a value, its gradient and its Hessian. Only the upper
//! triangle of the Hessian is ever written; reads go through [`Jet::d2`],
//! which orders the index pair, so `d2(i, j)` and `d2(j, i)` are the same
//! stored entry.

use std::ops::{Add, Div, Mul, Neg, Sub};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet<const N: usize> {
    pub value: f64,
    pub grad: [f64; N],
    hess: [[f64; N]; N],
}

impl<const N: usize> Jet<N> {
    pub fn constant(value: f64) -> Self {
        Jet {
            value,
            grad: [0.0; N],
            hess: [[0.0; N]; N],
        }
    }

    /// The independent variable with index `idx`.
    pub fn variable(value: f64, idx: usize) -> Self {
        let mut j = Self::constant(value);
        j.grad[idx] = 1.0;
        j
    }

    pub fn d2(&self, i: usize, j: usize) -> f64 {
        if i <= j {
            self.hess[i][j]
        } else {
            self.hess[j][i]
        }
    }

    pub fn set_d2(&mut self, i: usize, j: usize, v: f64) {
        if i <= j {
            self.hess[i][j] = v;
        } else {
            self.hess[j][i] = v;
        }
    }

    pub fn is_constant(&self) -> bool {
        self.grad.iter().all(|g| *g == 0.0)
            && (0..N).all(|i| (i..N).all(|j| self.hess[i][j] == 0.0))
    }

    /// Push the jet through a scalar function with value `f0`, first
    /// derivative `f1` and second derivative `f2` at `self.value`.
    pub fn chain(&self, f0: f64, f1: f64, f2: f64) -> Self {
        let mut out = Self::constant(f0);
        for i in 0..N {
            out.grad[i] = f1 * self.grad[i];
            for j in i..N {
                out.hess[i][j] = f1 * self.hess[i][j] + f2 * self.grad[i] * self.grad[j];
            }
        }
        out
    }

    pub fn recip(&self) -> Self {
        let x = self.value;
        self.chain(1.0 / x, -1.0 / (x * x), 2.0 / (x * x * x))
    }

    pub fn sqrt(&self) -> Self {
        let s = self.value.sqrt();
        self.chain(s, 0.5 / s, -0.25 / (s * self.value))
    }

    pub fn exp(&self) -> Self {
        let e = self.value.exp();
        self.chain(e, e, e)
    }

    pub fn ln(&self) -> Self {
        let x = self.value;
        self.chain(x.ln(), 1.0 / x, -1.0 / (x * x))
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(s, c, -s)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value.sin_cos();
        self.chain(c, -s, -c)
    }

    pub fn atan(&self) -> Self {
        let x = self.value;
        let q = 1.0 + x * x;
        self.chain(x.atan(), 1.0 / q, -2.0 * x / (q * q))
    }

    /// `self^p` for a constant exponent. Integer exponents use `powi` so
    /// negative bases stay in the real domain.
    pub fn powf_const(&self, p: f64) -> Self {
        let x = self.value;
        if p == 0.0 {
            return Self::constant(1.0);
        }
        if p.fract() == 0.0 && p.abs() < i32::MAX as f64 {
            let k = p as i32;
            let f0 = x.powi(k);
            let f1 = p * x.powi(k - 1);
            let f2 = if k == 1 { 0.0 } else { p * (p - 1.0) * x.powi(k - 2) };
            return self.chain(f0, f1, f2);
        }
        self.chain(
            x.powf(p),
            p * x.powf(p - 1.0),
            p * (p - 1.0) * x.powf(p - 2.0),
        )
    }

    /// Second-order composition `outer(self, other)` where `outer` is given
    /// by its value, gradient `(f_a, f_b)` and Hessian `(f_aa, f_ab, f_bb)`
    /// at `(self.value, other.value)`.
    pub fn compose2(
        a: &Self,
        b: &Self,
        f: f64,
        (fa, fb): (f64, f64),
        (faa, fab, fbb): (f64, f64, f64),
    ) -> Self {
        let mut out = Self::constant(f);
        for i in 0..N {
            out.grad[i] = fa * a.grad[i] + fb * b.grad[i];
            for j in i..N {
                out.hess[i][j] = fa * a.hess[i][j]
                    + fb * b.hess[i][j]
                    + faa * a.grad[i] * a.grad[j]
                    + fab * (a.grad[i] * b.grad[j] + b.grad[i] * a.grad[j])
                    + fbb * b.grad[i] * b.grad[j];
            }
        }
        out
    }
}

impl<const N: usize> Add for Jet<N> {
    type Output = Self;
    fn add(mut self, rhs: Self) -> Self {
        self.value += rhs.value;
        for i in 0..N {
            self.grad[i] += rhs.grad[i];
            for j in i..N {
                self.hess[i][j] += rhs.hess[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Sub for Jet<N> {
    type Output = Self;
    fn sub(self, rhs: Self) -> Self {
        self + (-rhs)
    }
}

impl<const N: usize> Neg for Jet<N> {
    type Output = Self;
    fn neg(mut self) -> Self {
        self.value = -self.value;
        for i in 0..N {
            self.grad[i] = -self.grad[i];
            for j in i..N {
                self.hess[i][j] = -self.hess[i][j];
            }
        }
        self
    }
}

impl<const N: usize> Mul for Jet<N> {
    type Output = Self;
    fn mul(self, rhs: Self) -> Self {
        let (a, b) = (&self, &rhs);
        let mut out = Self::constant(a.value * b.value);
        for i in 0..N {
            out.grad[i] = a.value * b.grad[i] + b.value * a.grad[i];
            for j in i..N {
                out.hess[i][j] = a.value * b.hess[i][j]
                    + b.value * a.hess[i][j]
                    + a.grad[i] * b.grad[j]
                    + a.grad[j] * b.grad[i];
            }
        }
        out
    }
}

impl<const N: usize> Mul<f64> for Jet<N> {
    type Output = Self;
    fn mul(mut self, k: f64) -> Self {
        self.value *= k;
        for i in 0..N {
            self.grad[i] *= k;
            for j in i..N {
                self.hess[i][j] *= k;
            }
        }
        self
    }
}

#[allow(clippy::suspicious_arithmetic_impl)]
impl<const N: usize> Div for Jet<N> {
    type Output = Self;
    fn div(self, rhs: Self) -> Self {
        self * rhs.recip()
    }
}
