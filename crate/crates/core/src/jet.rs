//! Truncated bivariate Taylor series in the surface coordinates `(theta, z)`.
//!
//! A [`Jet`] of order `N` stores the Taylor coefficients of a smooth function
//! around a base point up to total degree `N`. Arithmetic on jets is exact
//! derivative propagation, so a closed-form geometry or trial field evaluated
//! on jets yields its analytic partial derivatives without finite differences.
//!
//! Coefficients are grouped by total degree: index `d(d+1)/2 + j` holds the
//! coefficient of `dtheta^(d-j) dz^j`.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};
use std::sync::OnceLock;

/// Highest total derivative order a jet can carry.
pub const MAX_ORDER: usize = 6;
const LEN: usize = (MAX_ORDER + 1) * (MAX_ORDER + 2) / 2;

#[inline]
const fn index(i: usize, j: usize) -> usize {
    let d = i + j;
    d * (d + 1) / 2 + j
}

#[inline]
const fn len_for(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

const FACTORIAL: [f64; MAX_ORDER + 2] = [1.0, 1.0, 2.0, 6.0, 24.0, 120.0, 720.0, 5040.0];

/// (lhs index, rhs index, product index, total degree), sorted by degree.
fn product_table() -> &'static [(u8, u8, u8, u8)] {
    static TABLE: OnceLock<Vec<(u8, u8, u8, u8)>> = OnceLock::new();
    TABLE.get_or_init(|| {
        let mut out = Vec::new();
        for d1 in 0..=MAX_ORDER {
            for j1 in 0..=d1 {
                for d2 in 0..=(MAX_ORDER - d1) {
                    for j2 in 0..=d2 {
                        let (i1, i2) = (d1 - j1, d2 - j2);
                        out.push((
                            index(i1, j1) as u8,
                            index(i2, j2) as u8,
                            index(i1 + i2, j1 + j2) as u8,
                            (d1 + d2) as u8,
                        ));
                    }
                }
            }
        }
        out.sort_by_key(|e| e.3);
        out
    })
}

fn product_prefix(order: usize) -> usize {
    static PREFIX: OnceLock<[usize; MAX_ORDER + 1]> = OnceLock::new();
    PREFIX.get_or_init(|| {
        let table = product_table();
        let mut p = [0usize; MAX_ORDER + 1];
        for (n, slot) in p.iter_mut().enumerate() {
            *slot = table.iter().take_while(|e| e.3 as usize <= n).count();
        }
        p
    })[order]
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Jet {
    order: usize,
    c: [f64; LEN],
}

impl Jet {
    pub fn constant(value: f64, order: usize) -> Self {
        assert!(order <= MAX_ORDER, "jet order {order} exceeds {MAX_ORDER}");
        let mut c = [0.0; LEN];
        c[0] = value;
        Jet { order, c }
    }

    pub fn zero(order: usize) -> Self {
        Self::constant(0.0, order)
    }

    /// The coordinate function `theta` expanded at `theta0`.
    pub fn theta(theta0: f64, order: usize) -> Self {
        let mut j = Self::constant(theta0, order);
        if order >= 1 {
            j.c[index(1, 0)] = 1.0;
        }
        j
    }

    /// The coordinate function `z` expanded at `z0`.
    pub fn z(z0: f64, order: usize) -> Self {
        let mut j = Self::constant(z0, order);
        if order >= 1 {
            j.c[index(0, 1)] = 1.0;
        }
        j
    }

    /// Jet of a function of `theta` alone from its derivative stack
    /// `[f, f', f'', ...]` at the base point.
    pub fn from_theta_derivatives(derivs: &[f64], order: usize) -> Self {
        let mut j = Self::zero(order);
        for (k, d) in derivs.iter().enumerate().take(order + 1) {
            j.c[index(k, 0)] = d / FACTORIAL[k];
        }
        j
    }

    /// Jet of a function of `z` alone from its derivative stack.
    pub fn from_z_derivatives(derivs: &[f64], order: usize) -> Self {
        let mut j = Self::zero(order);
        for (k, d) in derivs.iter().enumerate().take(order + 1) {
            j.c[index(0, k)] = d / FACTORIAL[k];
        }
        j
    }

    /// Builds a jet from partial derivatives; `derivative(i, j)` returns
    /// `d^(i+j) f / dtheta^i dz^j`.
    pub fn from_partials(order: usize, mut derivative: impl FnMut(usize, usize) -> f64) -> Self {
        let mut jet = Self::zero(order);
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                jet.c[index(i, j)] = derivative(i, j) / (FACTORIAL[i] * FACTORIAL[j]);
            }
        }
        jet
    }

    #[inline]
    pub fn order(&self) -> usize {
        self.order
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.c[0]
    }

    /// Partial derivative `d^(i+j) / dtheta^i dz^j` at the base point.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        if i + j > self.order {
            return 0.0;
        }
        self.c[index(i, j)] * FACTORIAL[i] * FACTORIAL[j]
    }

    #[inline]
    pub fn d_theta(&self) -> f64 {
        self.d(1, 0)
    }

    #[inline]
    pub fn d_z(&self) -> f64 {
        self.d(0, 1)
    }

    pub fn truncate(&self, order: usize) -> Self {
        let order = order.min(self.order);
        let mut out = Self::zero(order);
        out.c[..len_for(order)].copy_from_slice(&self.c[..len_for(order)]);
        out
    }

    /// `d/dtheta`, one order lower.
    pub fn partial_theta(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut out = Self::zero(order);
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                out.c[index(i, j)] = (i + 1) as f64 * self.c[index(i + 1, j)];
            }
        }
        out
    }

    /// `d/dz`, one order lower.
    pub fn partial_z(&self) -> Self {
        assert!(self.order >= 1, "cannot differentiate an order-0 jet");
        let order = self.order - 1;
        let mut out = Self::zero(order);
        for d in 0..=order {
            for j in 0..=d {
                let i = d - j;
                out.c[index(i, j)] = (j + 1) as f64 * self.c[index(i, j + 1)];
            }
        }
        out
    }

    /// Reflection `theta -> -theta` of the expansion variable.
    pub fn reflect_theta(&self) -> Self {
        let mut out = *self;
        for d in 0..=self.order {
            for j in 0..=d {
                if (d - j) % 2 == 1 {
                    out.c[index(d - j, j)] = -out.c[index(d - j, j)];
                }
            }
        }
        out
    }

    pub fn scale(&self, s: f64) -> Self {
        let mut out = *self;
        out.c[..len_for(self.order)].iter_mut().for_each(|x| *x *= s);
        out
    }

    /// `F(self)` for a univariate `F` given its derivative stack at `self.value()`.
    pub fn compose(&self, derivs: &[f64]) -> Self {
        let n = self.order;
        assert!(derivs.len() > n, "need {} derivatives, got {}", n + 1, derivs.len());
        let mut delta = *self;
        delta.c[0] = 0.0;
        let mut acc = Self::constant(derivs[n] / FACTORIAL[n], n);
        for k in (0..n).rev() {
            acc = acc * delta;
            acc.c[0] += derivs[k] / FACTORIAL[k];
        }
        acc
    }

    pub fn exp(&self) -> Self {
        let e = self.value().exp();
        self.compose(&[e; MAX_ORDER + 1])
    }

    pub fn sin(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [s, c, -s, -c];
        let d: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.compose(&d)
    }

    pub fn cos(&self) -> Self {
        let (s, c) = self.value().sin_cos();
        let cycle = [c, -s, -c, s];
        let d: Vec<f64> = (0..=self.order).map(|k| cycle[k % 4]).collect();
        self.compose(&d)
    }

    pub fn recip(&self) -> Self {
        let x = self.value();
        let mut d = [0.0; MAX_ORDER + 1];
        let mut p = 1.0 / x;
        for (k, slot) in d.iter_mut().enumerate().take(self.order + 1) {
            *slot = p;
            p *= -((k + 1) as f64) / x;
        }
        self.compose(&d)
    }

    pub fn powf(&self, exponent: f64) -> Self {
        let x = self.value();
        let mut d = [0.0; MAX_ORDER + 1];
        let mut coef = 1.0;
        for (k, slot) in d.iter_mut().enumerate().take(self.order + 1) {
            *slot = coef * x.powf(exponent - k as f64);
            coef *= exponent - k as f64;
        }
        self.compose(&d)
    }

    pub fn sqrt(&self) -> Self {
        self.powf(0.5)
    }

    pub fn is_finite(&self) -> bool {
        self.c[..len_for(self.order)].iter().all(|x| x.is_finite())
    }
}

impl Add for Jet {
    type Output = Jet;
    fn add(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for k in 0..len_for(order) {
            out.c[k] = self.c[k] + rhs.c[k];
        }
        out
    }
}

impl AddAssign for Jet {
    fn add_assign(&mut self, rhs: Jet) {
        *self = *self + rhs;
    }
}

impl Sub for Jet {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for k in 0..len_for(order) {
            out.c[k] = self.c[k] - rhs.c[k];
        }
        out
    }
}

impl Neg for Jet {
    type Output = Jet;
    fn neg(self) -> Jet {
        self.scale(-1.0)
    }
}

impl Mul for Jet {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        let order = self.order.min(rhs.order);
        let mut out = Jet::zero(order);
        for &(a, b, p, _) in &product_table()[..product_prefix(order)] {
            out.c[p as usize] += self.c[a as usize] * rhs.c[b as usize];
        }
        out
    }
}

impl Div for Jet {
    type Output = Jet;
    #[allow(clippy::suspicious_arithmetic_impl)]
    fn div(self, rhs: Jet) -> Jet {
        self * rhs.recip()
    }
}

impl Add<f64> for Jet {
    type Output = Jet;
    fn add(mut self, rhs: f64) -> Jet {
        self.c[0] += rhs;
        self
    }
}

impl Sub<f64> for Jet {
    type Output = Jet;
    fn sub(mut self, rhs: f64) -> Jet {
        self.c[0] -= rhs;
        self
    }
}

impl Mul<f64> for Jet {
    type Output = Jet;
    fn mul(self, rhs: f64) -> Jet {
        self.scale(rhs)
    }
}

impl Mul<Jet> for f64 {
    type Output = Jet;
    fn mul(self, rhs: Jet) -> Jet {
        rhs.scale(self)
    }
}

impl Sub<Jet> for f64 {
    type Output = Jet;
    fn sub(self, rhs: Jet) -> Jet {
        -rhs + self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn fd(f: impl Fn(f64, f64) -> f64, th: f64, z: f64, i: usize, j: usize) -> f64 {
        // nested central differences, adequate for orders <= 2 at step 1e-3
        let h = 1e-3;
        match (i, j) {
            (1, 0) => (f(th + h, z) - f(th - h, z)) / (2.0 * h),
            (0, 1) => (f(th, z + h) - f(th, z - h)) / (2.0 * h),
            (2, 0) => (f(th + h, z) - 2.0 * f(th, z) + f(th - h, z)) / (h * h),
            (0, 2) => (f(th, z + h) - 2.0 * f(th, z) + f(th, z - h)) / (h * h),
            (1, 1) => {
                (f(th + h, z + h) - f(th + h, z - h) - f(th - h, z + h) + f(th - h, z - h))
                    / (4.0 * h * h)
            }
            _ => unreachable!(),
        }
    }

    #[test]
    fn composite_expression_matches_finite_differences() {
        let f = |th: f64, z: f64| (th * z).sin() * (1.0 + th * th).sqrt() / (2.0 + z).exp() + (th - z).cos();
        let (th, z) = (0.37, 0.81);
        let jt = Jet::theta(th, 4);
        let jz = Jet::z(z, 4);
        let jet = (jt * jz).sin() * (jt * jt + 1.0).sqrt() / (jz + 2.0).exp() + (jt - jz).cos();
        assert!((jet.value() - f(th, z)).abs() < 1e-14);
        for &(i, j) in &[(1, 0), (0, 1), (2, 0), (0, 2), (1, 1)] {
            let expect = fd(f, th, z, i, j);
            assert!((jet.d(i, j) - expect).abs() < 1e-5, "d({i},{j}) {} vs {}", jet.d(i, j), expect);
        }
    }

    #[test]
    fn high_order_univariate_derivatives_are_exact() {
        // d^k/dx^k exp(2x) = 2^k exp(2x)
        let x = 0.3;
        let jet = (Jet::theta(x, 6) * 2.0).exp();
        for k in 0..=6 {
            let expect = 2f64.powi(k as i32) * (2.0 * x).exp();
            assert!((jet.d(k, 0) - expect).abs() < 1e-10 * expect);
        }
        // 1/(1+z): k-th derivative (-1)^k k! / (1+z)^(k+1)
        let z = 0.5;
        let jet = (Jet::z(z, 6) + 1.0).recip();
        for k in 0..=6 {
            let expect = (-1f64).powi(k as i32) * FACTORIAL[k] / (1.0 + z).powi(k as i32 + 1);
            assert!((jet.d(0, k) - expect).abs() < 1e-10 * expect.abs());
        }
    }

    #[test]
    fn partial_derivative_lowers_order_and_commutes() {
        let jt = Jet::theta(0.2, 5);
        let jz = Jet::z(0.7, 5);
        let f = (jt * jt * jz).sin() + jz.exp() * jt;
        let a = f.partial_theta().partial_z();
        let b = f.partial_z().partial_theta();
        assert_eq!(a.order(), 3);
        for d in 0..=3 {
            for j in 0..=d {
                assert!((a.d(d - j, j) - b.d(d - j, j)).abs() < 1e-12);
                assert!((a.d(d - j, j) - f.d(d - j + 1, j + 1)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn mixed_orders_truncate_to_the_lower() {
        let a = Jet::theta(1.0, 4);
        let b = Jet::z(2.0, 2);
        assert_eq!((a * b).order(), 2);
        assert_eq!((a + b).order(), 2);
    }
}
