//! Prime generation over big integers with a caller-supplied RNG, so key
//! generation is deterministic for a fixed seed.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::RngCore;

use crate::error::{Error, Result};

const SMALL_PRIMES: [u32; 54] = [
    2, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37, 41, 43, 47, 53, 59, 61, 67, 71, 73, 79, 83, 89,
    97, 101, 103, 107, 109, 113, 127, 131, 137, 139, 149, 151, 157, 163, 167, 173, 179, 181, 191,
    193, 197, 199, 211, 223, 227, 229, 233, 239, 241, 251,
];

const MILLER_RABIN_ROUNDS: usize = 40;
const MAX_CANDIDATES: usize = 100_000;

/// Uniform random integer in [0, bound) by rejection on the top bits.
pub fn random_below<R: RngCore + ?Sized>(rng: &mut R, bound: &BigUint) -> BigUint {
    assert!(!bound.is_zero(), "bound must be positive");
    let bits = bound.bits();
    let bytes = bits.div_ceil(8) as usize;
    let shift = (bytes as u64 * 8).saturating_sub(bits) as u32;
    loop {
        let mut buf = vec![0u8; bytes];
        rng.fill_bytes(&mut buf);
        buf[0] >>= shift;
        let candidate = BigUint::from_bytes_be(&buf);
        if &candidate < bound {
            return candidate;
        }
    }
}

/// Miller-Rabin with randomized bases from the supplied RNG.
pub fn is_probable_prime<R: RngCore + ?Sized>(n: &BigUint, rng: &mut R) -> bool {
    let two = BigUint::from(2u32);
    if n < &two {
        return false;
    }
    for &p in &SMALL_PRIMES {
        let p = BigUint::from(p);
        if n == &p {
            return true;
        }
        if (n % &p).is_zero() {
            return false;
        }
    }
    // n - 1 = d * 2^s with d odd
    let n_minus_1 = n - BigUint::one();
    let s = n_minus_1.trailing_zeros().unwrap_or(0);
    let d = &n_minus_1 >> s;
    let upper = n - BigUint::from(3u32);
    'witness: for _ in 0..MILLER_RABIN_ROUNDS {
        let a = random_below(rng, &upper) + &two; // a in [2, n-2]
        let mut x = a.modpow(&d, n);
        if x.is_one() || x == n_minus_1 {
            continue;
        }
        for _ in 0..s.saturating_sub(1) {
            x = x.modpow(&two, n);
            if x == n_minus_1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Random prime with exactly `bits` bits and the two top bits set, so the
/// product of two such primes has full bit length.
pub fn generate_prime<R: RngCore + ?Sized>(bits: u64, rng: &mut R) -> Result<BigUint> {
    if bits < 8 {
        return Err(Error::KeyGeneration(format!(
            "prime size {bits} bits is too small"
        )));
    }
    let top = (BigUint::one() << (bits - 1)) | (BigUint::one() << (bits - 2));
    let span = BigUint::one() << (bits - 2);
    for _ in 0..MAX_CANDIDATES {
        let mut candidate = &top + random_below(rng, &span);
        candidate |= BigUint::one(); // force odd
        if is_probable_prime(&candidate, rng) {
            return Ok(candidate);
        }
    }
    Err(Error::KeyGeneration(format!(
        "no {bits}-bit prime found within {MAX_CANDIDATES} candidates"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha12Rng;

    #[test]
    fn recognizes_small_primes_and_composites() {
        let mut rng = ChaCha12Rng::seed_from_u64(1);
        for p in [2u32, 3, 5, 7, 257, 65_537, 104_729] {
            assert!(is_probable_prime(&BigUint::from(p), &mut rng), "{p}");
        }
        for c in [1u32, 4, 255, 65_535, 104_730, 561, 41_041] {
            assert!(!is_probable_prime(&BigUint::from(c), &mut rng), "{c}");
        }
    }

    #[test]
    fn generated_primes_have_requested_size() {
        let mut rng = ChaCha12Rng::seed_from_u64(2);
        for bits in [16u64, 32, 64] {
            let p = generate_prime(bits, &mut rng).unwrap();
            assert_eq!(p.bits(), bits);
            assert!(is_probable_prime(&p, &mut rng));
        }
    }

    #[test]
    fn random_below_stays_in_range() {
        let mut rng = ChaCha12Rng::seed_from_u64(3);
        let bound = BigUint::from(1_000_003u32);
        for _ in 0..1000 {
            assert!(random_below(&mut rng, &bound) < bound);
        }
    }
}
