use std::fmt;
use std::sync::Arc;

use crate::jet::{Jet, MAX_ORDER};

pub const STACK: usize = MAX_ORDER + 2;

/// A smooth function of one variable given by its derivative stack
/// `[f, f', ..., f^(7)]`.
#[derive(Clone)]
pub struct Profile {
    label: String,
    f: Arc<dyn Fn(f64) -> [f64; STACK] + Send + Sync>,
    poly: Option<Vec<f64>>,
}

impl fmt::Debug for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Profile({})", self.label)
    }
}

impl Profile {
    pub fn from_fn(label: impl Into<String>, f: impl Fn(f64) -> [f64; STACK] + Send + Sync + 'static) -> Self {
        Profile { label: label.into(), f: Arc::new(f), poly: None }
    }

    pub fn constant(c: f64) -> Self {
        Self::polynomial(&[c])
    }

    /// `c0 + c1 x`.
    pub fn linear(c0: f64, c1: f64) -> Self {
        Self::polynomial(&[c0, c1])
    }

    /// `sum_k coeffs[k] x^k`.
    pub fn polynomial(coeffs: &[f64]) -> Self {
        let c = coeffs.to_vec();
        let label = format!("poly{c:?}");
        let cc = c.clone();
        let mut p = Self::from_fn(label, move |x| {
            let mut out = [0.0; STACK];
            for (d, slot) in out.iter_mut().enumerate() {
                let mut acc = 0.0;
                for k in (d..cc.len()).rev() {
                    let falling: f64 = ((k - d + 1)..=k).map(|m| m as f64).product();
                    acc = acc * x + cc[k] * falling;
                }
                *slot = acc;
            }
            out
        });
        p.poly = Some(c);
        p
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn coefficients(&self) -> Option<&[f64]> {
        self.poly.as_deref()
    }

    #[inline]
    pub fn derivs(&self, x: f64) -> [f64; STACK] {
        (self.f)(x)
    }

    #[inline]
    pub fn value(&self, x: f64) -> f64 {
        self.derivs(x)[0]
    }

    pub fn theta_jet(&self, theta: f64, order: usize) -> Jet {
        Jet::from_theta_derivatives(&self.derivs(theta), order)
    }

    pub fn z_jet(&self, z: f64, order: usize) -> Jet {
        Jet::from_z_derivatives(&self.derivs(z), order)
    }

    /// Jet of the derivative `f'` as a function of `z`.
    pub fn z_jet_of_derivative(&self, z: f64, order: usize) -> Jet {
        Jet::from_z_derivatives(&self.derivs(z)[1..], order)
    }

    pub fn theta_jet_of_derivative(&self, theta: f64, order: usize) -> Jet {
        Jet::from_theta_derivatives(&self.derivs(theta)[1..], order)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn polynomial_derivative_stack() {
        // 1 + 2x + 3x^2 + 4x^3 at x = 0.5
        let p = Profile::polynomial(&[1.0, 2.0, 3.0, 4.0]);
        let d = p.derivs(0.5);
        assert!((d[0] - (1.0 + 1.0 + 0.75 + 0.5)).abs() < 1e-15);
        assert!((d[1] - (2.0 + 3.0 + 3.0)).abs() < 1e-15);
        assert!((d[2] - (6.0 + 12.0)).abs() < 1e-15);
        assert!((d[3] - 24.0).abs() < 1e-15);
        assert_eq!(d[4], 0.0);
    }
}
