use serde::{Deserialize, Serialize};

use crate::jet::Jet;

/// Shape of a one-dimensional bump supported on `[0, 1]`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BumpShape {
    /// `exp(4 - 1/(x(1-x)))`, smooth with all derivatives vanishing at the ends.
    #[default]
    Exponential,
    /// `(4 x (1-x))^6`, vanishing with five derivatives at the ends.
    Polynomial,
    /// `sin^k(pi x)`, vanishing with `k - 1` derivatives at the ends.
    SinePower(u8),
}

impl BumpShape {
    /// The bump composed with the jet `x`; zero outside `(0, 1)`.
    pub fn apply(&self, x: &Jet) -> Jet {
        let s = x.value();
        let q = *x * (1.0 - *x);
        match self {
            BumpShape::Exponential => {
                if s * (1.0 - s) < 1.0 / 200.0 {
                    return Jet::zero(x.order());
                }
                (4.0 - q.recip()).exp()
            }
            BumpShape::Polynomial => {
                if s <= 0.0 || s >= 1.0 {
                    return Jet::zero(x.order());
                }
                let p = q * 4.0;
                let p2 = p * p;
                p2 * p2 * p2
            }
            BumpShape::SinePower(k) => {
                if s <= 0.0 || s >= 1.0 {
                    return Jet::zero(x.order());
                }
                let r = (*x * std::f64::consts::PI).sin();
                (1..*k).fold(r, |acc, _| acc * r)
            }
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        self.apply(&Jet::theta(x, 0)).value()
    }
}

/// Smooth bump `W(theta, z) = psi((theta - a)/(b - a)) psi((z - z1)/(z2 - z1))`
/// compactly supported in `[a, b] x [z1, z2]`; `z`-derivatives carry powers of
/// the inverse width.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BumpProfile {
    pub shape: BumpShape,
    pub theta_support: (f64, f64),
    pub z_support: (f64, f64),
}

impl BumpProfile {
    pub fn new(shape: BumpShape, theta_support: (f64, f64), z_support: (f64, f64)) -> Self {
        BumpProfile { shape, theta_support, z_support }
    }

    pub fn theta_factor(&self, theta: Jet) -> Jet {
        let (a, b) = self.theta_support;
        self.shape.apply(&((theta - a) * (1.0 / (b - a))))
    }

    pub fn z_factor(&self, z: Jet) -> Jet {
        let (z1, z2) = self.z_support;
        self.shape.apply(&((z - z1) * (1.0 / (z2 - z1))))
    }

    pub fn jet(&self, theta: f64, z: f64, order: usize) -> Jet {
        self.theta_factor(Jet::theta(theta, order)) * self.z_factor(Jet::z(z, order))
    }
}
