//! Exact evaluation of affine forms `c_0 + sum_k y_k c_k` in the search
//! offsets, in fixed-width two's complement.

use std::cmp::Ordering;

use num_bigint::{BigInt, BigUint, Sign};
use num_integer::Integer;

const LIMBS: usize = 8;

/// Inputs are limited to this many bits so that a sum of 64 terms with
/// 63-bit multipliers stays far inside the 512-bit range.
const INPUT_BITS: u64 = 400;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) struct Wide([u64; LIMBS]);

impl Wide {
    #[cfg(test)]
    pub(crate) const ZERO: Wide = Wide([0; LIMBS]);

    pub(crate) fn from_bigint(v: &BigInt) -> Option<Wide> {
        if v.bits() > INPUT_BITS {
            return None;
        }
        let (sign, digits) = v.to_u64_digits();
        let mut w = [0; LIMBS];
        w[..digits.len()].copy_from_slice(&digits);
        let w = Wide(w);
        Some(if sign == Sign::Minus { w.neg() } else { w })
    }

    pub(crate) fn to_bigint(self) -> BigInt {
        let (neg, mag) = if self.is_neg() { (true, self.neg()) } else { (false, self) };
        let words: Vec<u32> = mag.0.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect();
        let v = BigInt::from_biguint(Sign::Plus, BigUint::from_slice(&words));
        if neg {
            -v
        } else {
            v
        }
    }

    pub(crate) fn is_neg(&self) -> bool {
        self.0[LIMBS - 1] >> 63 == 1
    }

    pub(crate) fn is_zero(&self) -> bool {
        self.0 == [0; LIMBS]
    }

    pub(crate) fn neg(self) -> Wide {
        let mut out = [0; LIMBS];
        let mut carry = 1u64;
        for (o, &x) in out.iter_mut().zip(&self.0) {
            let (s, c) = (!x).overflowing_add(carry);
            *o = s;
            carry = c as u64;
        }
        Wide(out)
    }

    pub(crate) fn add(self, other: &Wide) -> Wide {
        let mut out = [0; LIMBS];
        let mut carry = false;
        for ((o, &a), &b) in out.iter_mut().zip(&self.0).zip(&other.0) {
            let (s, c1) = a.overflowing_add(b);
            let (s, c2) = s.overflowing_add(carry as u64);
            *o = s;
            carry = c1 | c2;
        }
        Wide(out)
    }

    pub(crate) fn sub(self, other: &Wide) -> Wide {
        let mut out = [0; LIMBS];
        let mut borrow = false;
        for ((o, &a), &b) in out.iter_mut().zip(&self.0).zip(&other.0) {
            let (d, b1) = a.overflowing_sub(b);
            let (d, b2) = d.overflowing_sub(borrow as u64);
            *o = d;
            borrow = b1 | b2;
        }
        Wide(out)
    }

    /// `self * m` modulo `2^512`.
    fn mul_small(&self, m: u64) -> Wide {
        let mut out = [0; LIMBS];
        let mut carry = 0u64;
        for (o, &a) in out.iter_mut().zip(&self.0) {
            let p = a as u128 * m as u128 + carry as u128;
            *o = p as u64;
            carry = (p >> 64) as u64;
        }
        Wide(out)
    }

    /// `self += c * y`.
    pub(crate) fn add_mul(&mut self, c: &Wide, y: i64) {
        let p = c.mul_small(y.unsigned_abs());
        *self = if y >= 0 { self.add(&p) } else { self.sub(&p) };
    }

    pub(crate) fn to_f64(self) -> f64 {
        if self.is_neg() {
            return -self.neg().to_f64();
        }
        self.0.iter().rev().fold(0.0, |acc, &w| acc * 18446744073709551616.0 + w as f64)
    }

    /// Logical shift for non-negative values.
    pub(crate) fn shr(&self, bits: usize) -> Wide {
        let (limbs, rem) = (bits / 64, bits % 64);
        let mut out = [0; LIMBS];
        for i in 0..LIMBS.saturating_sub(limbs) {
            let lo = self.0[i + limbs] >> rem;
            let hi = match (rem, self.0.get(i + limbs + 1)) {
                (0, _) | (_, None) => 0,
                (_, Some(&h)) => h << (64 - rem),
            };
            out[i] = lo | hi;
        }
        Wide(out)
    }

    pub(crate) fn shl(&self, bits: usize) -> Wide {
        let (limbs, rem) = (bits / 64, bits % 64);
        let mut out = [0; LIMBS];
        for i in limbs..LIMBS {
            let hi = self.0[i - limbs] << rem;
            let lo = if rem == 0 || i == limbs { 0 } else { self.0[i - limbs - 1] >> (64 - rem) };
            out[i] = hi | lo;
        }
        Wide(out)
    }

    /// The low `bits` bits.
    pub(crate) fn low_bits(&self, bits: usize) -> Wide {
        let mut out = self.0;
        for (i, w) in out.iter_mut().enumerate() {
            let start = i * 64;
            if start >= bits {
                *w = 0;
            } else if bits - start < 64 {
                *w &= (1u64 << (bits - start)) - 1;
            }
        }
        Wide(out)
    }

    /// Little-endian bytes of a non-negative value, without trailing zeros.
    pub(crate) fn to_bytes_le(self) -> Vec<u8> {
        let mut out: Vec<u8> = self.0.iter().flat_map(|w| w.to_le_bytes()).collect();
        while out.last() == Some(&0) {
            out.pop();
        }
        out
    }
}

impl Ord for Wide {
    fn cmp(&self, other: &Self) -> Ordering {
        match (self.is_neg(), other.is_neg()) {
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            _ => self.0.iter().rev().cmp(other.0.iter().rev()),
        }
    }
}

impl PartialOrd for Wide {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// `c_0 + sum_k y_k c_k`, evaluated exactly.
#[derive(Clone, Debug)]
pub(crate) struct Form {
    base: Wide,
    coeffs: Vec<Wide>,
}

impl Form {
    /// `None` when an input is too wide or there are more than 64 terms.
    pub(crate) fn new(base: &BigInt, coeffs: &[BigInt]) -> Option<Form> {
        if coeffs.len() > 64 {
            return None;
        }
        Some(Form {
            base: Wide::from_bigint(base)?,
            coeffs: coeffs.iter().map(Wide::from_bigint).collect::<Option<_>>()?,
        })
    }

    /// The form `(m * self + b) mod q`, coefficient by coefficient.
    pub(crate) fn scaled_mod(base: &BigInt, coeffs: &[BigInt], m: &BigInt, b: &BigInt, q: &BigInt) -> Option<Form> {
        let base = (m * base + b).mod_floor(q);
        let coeffs: Vec<BigInt> = coeffs.iter().map(|c| (m * c).mod_floor(q)).collect();
        Form::new(&base, &coeffs)
    }

    pub(crate) fn eval(&self, y: &[i64]) -> Wide {
        let mut acc = self.base;
        for (c, &yk) in self.coeffs.iter().zip(y) {
            if yk != 0 {
                acc.add_mul(c, yk);
            }
        }
        acc
    }
}

/// Reduction modulo a positive `q` of at most 400 bits.
#[derive(Clone, Debug)]
pub(crate) struct ModQ {
    q: Wide,
    q_f: f64,
}

impl ModQ {
    pub(crate) fn new(q: &BigInt) -> Option<ModQ> {
        if q.sign() != Sign::Plus {
            return None;
        }
        let w = Wide::from_bigint(q)?;
        Some(ModQ { q: w, q_f: w.to_f64() })
    }

    pub(crate) fn q(&self) -> &Wide {
        &self.q
    }

    /// `v mod q` in `[0, q)`.
    pub(crate) fn reduce(&self, v: Wide) -> Wide {
        let m = (v.to_f64() / self.q_f).floor();
        let mut r = v;
        if m.abs() < 1.0e15 {
            r.add_mul(&self.q, -(m as i64));
        } else {
            let exact = v.to_bigint().mod_floor(&self.q.to_bigint());
            return Wide::from_bigint(&exact).expect("below q");
        }
        while r.is_neg() {
            r = r.add(&self.q);
        }
        while r >= self.q {
            r = r.sub(&self.q);
        }
        r
    }
}
