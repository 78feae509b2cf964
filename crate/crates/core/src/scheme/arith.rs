//! Modular helpers and probabilistic primality testing over `BigUint`.

use num_bigint::{BigUint, RandBigInt};
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Miller–Rabin rounds used for every primality decision in the crate.
pub const MILLER_RABIN_ROUNDS: usize = 64;

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

/// Probabilistic primality test: trial division by small primes followed by
/// `MILLER_RABIN_ROUNDS` Miller–Rabin rounds.
///
/// Witnesses come from a generator seeded by the candidate itself, so the
/// answer is a pure function of `n` and never consumes caller randomness.
pub fn is_probable_prime(n: &BigUint) -> bool {
    if n < &BigUint::from(2u32) {
        return false;
    }
    for &sp in SMALL_PRIMES.iter() {
        let sp_big = BigUint::from(sp);
        if n == &sp_big {
            return true;
        }
        if (n % sp).is_zero() {
            return false;
        }
    }

    let one = BigUint::one();
    let n_minus_one = n - &one;
    let twos = n_minus_one.trailing_zeros().unwrap_or(0);
    let odd = &n_minus_one >> twos;

    let mut seed = [0u8; 32];
    for (dst, src) in seed.iter_mut().zip(n.to_bytes_le()) {
        *dst = src;
    }
    let mut rng = ChaCha8Rng::from_seed(seed);
    let two = BigUint::from(2u32);

    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let base = rng.gen_biguint_range(&two, &n_minus_one);
        let mut x = base.modpow(&odd, n);
        if x == one || x == n_minus_one {
            continue;
        }
        for _ in 1..twos {
            x = (&x * &x) % n;
            if x == n_minus_one {
                continue 'witness;
            }
            if x == one {
                return false;
            }
        }
        return false;
    }
    true
}

/// `x^{-1} mod m`, or `None` when `gcd(x, m) != 1`.
pub fn mod_inverse(x: &BigUint, m: &BigUint) -> Option<BigUint> {
    let x = x % m;
    if x.is_zero() {
        return None;
    }
    x.modinv(m)
}

/// `(a - b) mod m` for operands already reduced mod `m`.
pub fn mod_sub(a: &BigUint, b: &BigUint, m: &BigUint) -> BigUint {
    if a >= b {
        (a - b) % m
    } else {
        (m - (b - a) % m) % m
    }
}

/// `(-a) mod m`.
pub fn mod_neg(a: &BigUint, m: &BigUint) -> BigUint {
    let a = a % m;
    if a.is_zero() {
        a
    } else {
        m - a
    }
}

/// Uniform sample of exactly `bits` bits (top bit set).
pub fn random_exact_bits<R: rand::Rng + ?Sized>(rng: &mut R, bits: u64) -> BigUint {
    debug_assert!(bits >= 1);
    let mut v = rng.gen_biguint(bits);
    v.set_bit(bits - 1, true);
    v
}

/// True when `a` divides `b`.
pub fn divides(a: &BigUint, b: &BigUint) -> bool {
    !a.is_zero() && b.is_multiple_of(a)
}
