//! Montgomery multiplication modulo an odd multi-limb modulus.

use num_bigint::BigUint;
use num_traits::Zero;

#[derive(Clone, Debug)]
pub(crate) struct Mont {
    modulus: BigUint,
    m: Vec<u64>,
    /// `-m^{-1} mod 2^64`.
    m0inv: u64,
    /// `2^{128 n} mod m`.
    r2: Vec<u64>,
}

const MAX_LIMBS: usize = 128;

fn limbs(x: &BigUint, n: usize) -> Vec<u64> {
    let mut v = x.to_u64_digits();
    v.resize(n, 0);
    v
}

impl Mont {
    /// `None` for even or zero moduli and for moduli above `64 MAX_LIMBS` bits.
    pub(crate) fn new(m: &BigUint) -> Option<Self> {
        let digits = m.to_u64_digits();
        if m.is_zero() || !m.bit(0) || digits.len() > MAX_LIMBS {
            return None;
        }
        let n = digits.len();
        let mut inv = 1u64;
        for _ in 0..6 {
            inv = inv.wrapping_mul(2u64.wrapping_sub(digits[0].wrapping_mul(inv)));
        }
        let r2 = (BigUint::from(1u8) << (128 * n)) % m;
        Some(Mont {
            modulus: m.clone(),
            m: digits,
            m0inv: inv.wrapping_neg(),
            r2: limbs(&r2, n),
        })
    }

    pub(crate) fn limbs(&self) -> usize {
        self.m.len()
    }

    /// `a b 2^{-64 n} mod m` into `out`, for `a, b < m`.
    pub(crate) fn mul(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        match self.m.len() {
            1 => self.mul_n::<1>(a, b, out),
            2 => self.mul_n::<2>(a, b, out),
            4 => self.mul_n::<4>(a, b, out),
            8 => self.mul_n::<8>(a, b, out),
            16 => self.mul_n::<16>(a, b, out),
            32 => self.mul_n::<32>(a, b, out),
            _ => self.mul_any(a, b, out),
        }
    }

    fn mul_n<const N: usize>(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let a: &[u64; N] = a[..N].try_into().expect("N limbs");
        let b: &[u64; N] = b[..N].try_into().expect("N limbs");
        let m: &[u64; N] = self.m[..N].try_into().expect("N limbs");
        let mut t = [0u64; N];
        let mut hi = 0u64;
        for &bi in b {
            let mut c = 0u64;
            for j in 0..N {
                let s = t[j] as u128 + a[j] as u128 * bi as u128 + c as u128;
                t[j] = s as u64;
                c = (s >> 64) as u64;
            }
            let s = hi as u128 + c as u128;
            hi = s as u64;
            let hi2 = (s >> 64) as u64;

            let k = t[0].wrapping_mul(self.m0inv);
            let s = t[0] as u128 + k as u128 * m[0] as u128;
            let mut c = (s >> 64) as u64;
            for j in 1..N {
                let s = t[j] as u128 + k as u128 * m[j] as u128 + c as u128;
                t[j - 1] = s as u64;
                c = (s >> 64) as u64;
            }
            let s = hi as u128 + c as u128;
            t[N - 1] = s as u64;
            hi = hi2 + (s >> 64) as u64;
        }
        if hi != 0 || !t.iter().rev().lt(m.iter().rev()) {
            let mut borrow = false;
            for j in 0..N {
                let (d, b1) = t[j].overflowing_sub(m[j]);
                let (d, b2) = d.overflowing_sub(borrow as u64);
                t[j] = d;
                borrow = b1 | b2;
            }
        }
        out[..N].copy_from_slice(&t);
    }

    fn mul_any(&self, a: &[u64], b: &[u64], out: &mut [u64]) {
        let n = self.m.len();
        let m = &self.m;
        let mut t = [0u64; MAX_LIMBS + 2];
        let t = &mut t[..n + 2];
        for &bi in b.iter().take(n) {
            let mut c: u64 = 0;
            for j in 0..n {
                let s = t[j] as u128 + a[j] as u128 * bi as u128 + c as u128;
                t[j] = s as u64;
                c = (s >> 64) as u64;
            }
            let s = t[n] as u128 + c as u128;
            t[n] = s as u64;
            t[n + 1] = (s >> 64) as u64;

            let k = t[0].wrapping_mul(self.m0inv);
            let s = t[0] as u128 + k as u128 * m[0] as u128;
            let mut c = (s >> 64) as u64;
            for j in 1..n {
                let s = t[j] as u128 + k as u128 * m[j] as u128 + c as u128;
                t[j - 1] = s as u64;
                c = (s >> 64) as u64;
            }
            let s = t[n] as u128 + c as u128;
            t[n - 1] = s as u64;
            t[n] = t[n + 1] + (s >> 64) as u64;
        }
        let ge = t[n] != 0 || !t[..n].iter().rev().lt(m.iter().rev());
        if ge {
            let mut borrow = 0u64;
            for j in 0..n {
                let (d, b1) = t[j].overflowing_sub(m[j]);
                let (d, b2) = d.overflowing_sub(borrow);
                out[j] = d;
                borrow = (b1 | b2) as u64;
            }
        } else {
            out[..n].copy_from_slice(&t[..n]);
        }
    }

    /// Montgomery form of `x mod m`.
    pub(crate) fn to_mont(&self, x: &BigUint) -> Vec<u64> {
        let n = self.m.len();
        let x = limbs(&(x % &self.modulus), n);
        let mut out = vec![0; n];
        self.mul(&x, &self.r2, &mut out);
        out
    }

    #[cfg(test)]
    pub(crate) fn from_mont(&self, x: &[u64]) -> BigUint {
        let n = self.m.len();
        let mut one = vec![0; n];
        one[0] = 1;
        let mut out = vec![0; n];
        self.mul(x, &one, &mut out);
        let words: Vec<u32> = out.iter().flat_map(|w| [*w as u32, (*w >> 32) as u32]).collect();
        BigUint::from_slice(&words)
    }
}
