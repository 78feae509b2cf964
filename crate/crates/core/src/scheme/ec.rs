//! Short Weierstrass curves `y^2 = x^3 + Ax + B` over a prime field, affine
//! coordinates, schoolbook formulas.

use num_bigint::BigUint;
use num_traits::Zero;

use super::arith::{mod_inverse, mod_neg, mod_sub};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Point {
    Infinity,
    Affine { x: BigUint, y: BigUint },
}

impl Point {
    pub fn affine(x: impl Into<BigUint>, y: impl Into<BigUint>) -> Self {
        Point::Affine {
            x: x.into(),
            y: y.into(),
        }
    }

    pub fn is_infinity(&self) -> bool {
        matches!(self, Point::Infinity)
    }

    pub fn x(&self) -> Option<&BigUint> {
        match self {
            Point::Infinity => None,
            Point::Affine { x, .. } => Some(x),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Curve {
    pub p: BigUint,
    pub a: BigUint,
    pub b: BigUint,
}

impl Curve {
    pub fn new(p: BigUint, a: BigUint, b: BigUint) -> Self {
        let a = a % &p;
        let b = b % &p;
        Curve { p, a, b }
    }

    /// `4A^3 + 27B^2 mod p`; zero means the curve is singular.
    pub fn discriminant(&self) -> BigUint {
        let p = &self.p;
        let a3 = self.a.modpow(&BigUint::from(3u32), p);
        let b2 = (&self.b * &self.b) % p;
        (BigUint::from(4u32) * a3 + BigUint::from(27u32) * b2) % p
    }

    pub fn is_singular(&self) -> bool {
        self.discriminant().is_zero()
    }

    pub fn contains(&self, pt: &Point) -> bool {
        match pt {
            Point::Infinity => true,
            Point::Affine { x, y } => {
                let p = &self.p;
                if x >= p || y >= p {
                    return false;
                }
                let lhs = (y * y) % p;
                let rhs = (x * x % p * x + &self.a * x + &self.b) % p;
                lhs == rhs
            }
        }
    }

    pub fn neg(&self, pt: &Point) -> Point {
        match pt {
            Point::Infinity => Point::Infinity,
            Point::Affine { x, y } => Point::Affine {
                x: x.clone(),
                y: mod_neg(y, &self.p),
            },
        }
    }

    pub fn add(&self, lhs: &Point, rhs: &Point) -> Point {
        let p = &self.p;
        let (x1, y1, x2, y2) = match (lhs, rhs) {
            (Point::Infinity, other) | (other, Point::Infinity) => return other.clone(),
            (Point::Affine { x: x1, y: y1 }, Point::Affine { x: x2, y: y2 }) => (x1, y1, x2, y2),
        };

        let slope = if x1 == x2 {
            if ((y1 + y2) % p).is_zero() {
                return Point::Infinity;
            }
            // tangent
            let num = (BigUint::from(3u32) * x1 * x1 + &self.a) % p;
            let den = (BigUint::from(2u32) * y1) % p;
            num * mod_inverse(&den, p).expect("2y invertible for y != 0") % p
        } else {
            let num = mod_sub(y2, y1, p);
            let den = mod_sub(x2, x1, p);
            num * mod_inverse(&den, p).expect("distinct x coordinates") % p
        };

        let x3 = mod_sub(&mod_sub(&(&slope * &slope % p), x1, p), x2, p);
        let y3 = mod_sub(&(&slope * mod_sub(x1, &x3, p) % p), y1, p);
        Point::Affine { x: x3, y: y3 }
    }

    pub fn double(&self, pt: &Point) -> Point {
        self.add(pt, pt)
    }

    /// Left-to-right double-and-add.
    pub fn mul(&self, k: &BigUint, pt: &Point) -> Point {
        let mut acc = Point::Infinity;
        for i in (0..k.bits()).rev() {
            acc = self.double(&acc);
            if k.bit(i) {
                acc = self.add(&acc, pt);
            }
        }
        acc
    }
}
