//! Additively homomorphic encryption over residues modulo n², with the
//! standard generator g = n + 1 so plaintext exponentiation reduces to one
//! multiplication: (n+1)^m = 1 + m·n (mod n²).
//!
//! The server-side API (addition, scalar multiplication, encrypted SED)
//! takes only the public key, ciphertexts, and plaintext probes; secret-key
//! material is confined to key generation and decryption.

use num_bigint::BigUint;
use num_integer::Integer;
use num_traits::{One, Zero};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha12Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

use super::primes::{generate_prime, random_below};

/// Truncated SHA-256 of the public modulus; guards against mixing keys.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct KeyFingerprint(pub [u8; 8]);

impl KeyFingerprint {
    pub fn of_modulus(n: &BigUint) -> Self {
        let digest = Sha256::digest(n.to_bytes_be());
        let mut out = [0u8; 8];
        out.copy_from_slice(&digest[..8]);
        KeyFingerprint(out)
    }

    pub fn to_hex(self) -> String {
        self.0.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        if s.len() != 16 || !s.bytes().all(|b| b.is_ascii_hexdigit()) {
            return Err(Error::FormatInvalid(format!(
                "key fingerprint '{s}' is not 16 hex digits"
            )));
        }
        let mut out = [0u8; 8];
        for (i, chunk) in s.as_bytes().chunks(2).enumerate() {
            out[i] = u8::from_str_radix(std::str::from_utf8(chunk).unwrap(), 16).unwrap();
        }
        Ok(KeyFingerprint(out))
    }
}

impl std::fmt::Display for KeyFingerprint {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for b in &self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

/// Public encryption key: modulus n = p·q (generator is implicitly n + 1).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PublicKey {
    n: BigUint,
    n_squared: BigUint,
    bits: u32,
    fingerprint: KeyFingerprint,
}

/// Secret decryption key: lambda = lcm(p-1, q-1) and its inverse mod n.
#[derive(Debug, Clone)]
pub struct SecretKey {
    lambda: BigUint,
    mu: BigUint,
    public: PublicKey,
}

/// Public/secret key pair.
#[derive(Debug, Clone)]
pub struct KeyPair {
    pub public: PublicKey,
    pub secret: SecretKey,
}

/// A residue modulo n², tagged with the key it belongs to.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Ciphertext {
    value: BigUint,
    key: KeyFingerprint,
}

impl Ciphertext {
    pub fn value(&self) -> &BigUint {
        &self.value
    }

    pub fn key_fingerprint(&self) -> KeyFingerprint {
        self.key
    }

    /// Rebuilds a ciphertext read from storage, validating its range.
    pub fn from_parts(value: BigUint, pk: &PublicKey) -> Result<Ciphertext> {
        if value.is_zero() || value >= *pk.n_squared() {
            return Err(Error::CiphertextInvalid(
                "stored value outside (0, n^2)".into(),
            ));
        }
        Ok(Ciphertext {
            value,
            key: pk.fingerprint(),
        })
    }
}

impl PublicKey {
    pub fn n(&self) -> &BigUint {
        &self.n
    }

    pub fn n_squared(&self) -> &BigUint {
        &self.n_squared
    }

    pub fn bits(&self) -> u32 {
        self.bits
    }

    pub fn fingerprint(&self) -> KeyFingerprint {
        self.fingerprint
    }

    fn from_modulus(n: BigUint) -> PublicKey {
        let n_squared = &n * &n;
        let bits = n.bits() as u32;
        let fingerprint = KeyFingerprint::of_modulus(&n);
        PublicKey {
            n,
            n_squared,
            bits,
            fingerprint,
        }
    }

    fn check_fingerprint(&self, c: &Ciphertext) -> Result<()> {
        if c.key != self.fingerprint {
            return Err(Error::KeyMismatch {
                expected: self.fingerprint.to_hex(),
                actual: c.key.to_hex(),
            });
        }
        Ok(())
    }

    fn check_ciphertext(&self, c: &Ciphertext) -> Result<()> {
        self.check_fingerprint(c)?;
        if c.value.is_zero() || c.value >= self.n_squared {
            return Err(Error::CiphertextInvalid(
                "value outside (0, n^2)".into(),
            ));
        }
        Ok(())
    }

    /// (n+1)^m mod n² without exponentiation.
    fn plaintext_power(&self, m: &BigUint) -> BigUint {
        (BigUint::one() + m * &self.n) % &self.n_squared
    }

    /// Encrypts m in [0, n) with fresh randomness from `rng`.
    pub fn encrypt<R: RngCore + ?Sized>(&self, m: &BigUint, rng: &mut R) -> Result<Ciphertext> {
        if m >= &self.n {
            return Err(Error::MessageRange(format!(
                "message needs {} bits, modulus has {}",
                m.bits(),
                self.bits
            )));
        }
        let r = loop {
            let candidate = random_below(rng, &self.n);
            if candidate.is_zero() {
                continue;
            }
            if candidate.gcd(&self.n).is_one() {
                break candidate;
            }
        };
        let value = (self.plaintext_power(m) * r.modpow(&self.n, &self.n_squared)) % &self.n_squared;
        Ok(Ciphertext {
            value,
            key: self.fingerprint,
        })
    }

    /// Encrypts a signed value by modular encoding: v < 0 maps to n - |v|.
    /// Valid while |v| < n/2 (centered lift on decryption).
    pub fn encrypt_signed<R: RngCore + ?Sized>(&self, v: i64, rng: &mut R) -> Result<Ciphertext> {
        self.encrypt(&self.encode_signed(v)?, rng)
    }

    pub fn encode_signed(&self, v: i64) -> Result<BigUint> {
        let magnitude = BigUint::from(v.unsigned_abs());
        if &magnitude * 2u32 >= self.n {
            return Err(Error::MessageRange(format!(
                "|{v}| is not below n/2"
            )));
        }
        Ok(if v < 0 { &self.n - magnitude } else { magnitude })
    }
}

/// Homomorphic addition: Dec(he_add(Enc(a), Enc(b))) = (a + b) mod n.
pub fn he_add(pk: &PublicKey, c1: &Ciphertext, c2: &Ciphertext) -> Result<Ciphertext> {
    pk.check_ciphertext(c1)?;
    pk.check_ciphertext(c2)?;
    Ok(Ciphertext {
        value: (&c1.value * &c2.value) % pk.n_squared(),
        key: pk.fingerprint(),
    })
}

/// Plaintext-scalar multiplication: Dec(he_scalar_mul(Enc(a), s)) = a·s mod n.
pub fn he_scalar_mul(pk: &PublicKey, c: &Ciphertext, s: &BigUint) -> Result<Ciphertext> {
    pk.check_ciphertext(c)?;
    Ok(Ciphertext {
        value: c.value.modpow(s, pk.n_squared()),
        key: pk.fingerprint(),
    })
}

/// Homomorphic negation via modular inversion of the ciphertext.
pub(super) fn he_neg(pk: &PublicKey, c: &Ciphertext) -> Result<Ciphertext> {
    let inv = c
        .value
        .modinv(pk.n_squared())
        .ok_or_else(|| Error::CiphertextInvalid("value not invertible mod n^2".into()))?;
    Ok(Ciphertext {
        value: inv,
        key: pk.fingerprint(),
    })
}

/// Adds a plaintext constant: Dec = (a + m) mod n. One multiplication.
pub(super) fn he_add_plain(pk: &PublicKey, c: &Ciphertext, m: &BigUint) -> BigUint {
    (&c.value * pk.plaintext_power(m)) % pk.n_squared()
}

pub(super) fn ciphertext_from_value(value: BigUint, pk: &PublicKey) -> Ciphertext {
    Ciphertext {
        value,
        key: pk.fingerprint(),
    }
}

pub(super) fn raw_mul(pk: &PublicKey, a: &BigUint, b: &BigUint) -> BigUint {
    (a * b) % pk.n_squared()
}

impl SecretKey {
    pub fn public(&self) -> &PublicKey {
        &self.public
    }

    fn l_function(&self, x: &BigUint) -> BigUint {
        (x - BigUint::one()) / &self.public.n
    }

    /// Decrypts to the plaintext residue in [0, n).
    pub fn decrypt(&self, c: &Ciphertext) -> Result<BigUint> {
        self.public.check_ciphertext(c)?;
        let x = c.value.modpow(&self.lambda, self.public.n_squared());
        Ok((self.l_function(&x) * &self.mu) % &self.public.n)
    }

    /// Decrypts with a centered lift: residues above n/2 map to negatives.
    pub fn decrypt_signed(&self, c: &Ciphertext) -> Result<i64> {
        let m = self.decrypt(c)?;
        let doubled = &m * 2u32;
        let value = if doubled >= self.public.n {
            let magnitude = &self.public.n - &m;
            -i64::try_from(u64::try_from(&magnitude).map_err(|_| {
                Error::MessageRange("centered value exceeds i64".into())
            })?)
            .map_err(|_| Error::MessageRange("centered value exceeds i64".into()))?
        } else {
            i64::try_from(u64::try_from(&m).map_err(|_| {
                Error::MessageRange("centered value exceeds i64".into())
            })?)
            .map_err(|_| Error::MessageRange("centered value exceeds i64".into()))?
        };
        Ok(value)
    }

    /// Decrypts a value known to be a small non-negative integer.
    pub fn decrypt_u64(&self, c: &Ciphertext) -> Result<u64> {
        let m = self.decrypt(c)?;
        u64::try_from(&m).map_err(|_| Error::MessageRange("plaintext exceeds u64".into()))
    }
}

impl KeyPair {
    /// Builds a key pair from two explicit primes (toy/test scale).
    pub fn from_primes(p: &BigUint, q: &BigUint) -> Result<KeyPair> {
        if p == q {
            return Err(Error::KeyGeneration("primes must differ".into()));
        }
        let n = p * q;
        let lambda = (p - BigUint::one()).lcm(&(q - BigUint::one()));
        let mu = lambda.modinv(&n).ok_or_else(|| {
            Error::KeyGeneration("lcm(p-1, q-1) is not invertible mod n".into())
        })?;
        let public = PublicKey::from_modulus(n);
        Ok(KeyPair {
            secret: SecretKey {
                lambda,
                mu,
                public: public.clone(),
            },
            public,
        })
    }
}

/// ChaCha12 stream keyed by a seed and up to three context words; used for
/// reproducible encryption randomness in deterministic test mode.
pub fn seeded_rng(seed: u64, context: &[u64]) -> ChaCha12Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    for (i, c) in context.iter().take(3).enumerate() {
        key[8 + i * 8..16 + i * 8].copy_from_slice(&c.to_le_bytes());
    }
    ChaCha12Rng::from_seed(key)
}

/// Deterministic key generation: same (bits, seed) always yields the same
/// key pair. `bits` is the modulus size; at least 64 (test scale), 2048 by
/// default in production flows.
pub fn keygen(bits: u32, seed: u64) -> Result<KeyPair> {
    if bits < 64 {
        return Err(Error::InvalidParameter(format!(
            "modulus size {bits} below the 64-bit test-scale minimum"
        )));
    }
    let mut rng = seeded_rng(seed, &[u64::from(bits), 0x6b65_7967]);
    let half = u64::from(bits) / 2;
    for _ in 0..16 {
        let p = generate_prime(half, &mut rng)?;
        let q = generate_prime(u64::from(bits) - half, &mut rng)?;
        if p == q {
            continue;
        }
        match KeyPair::from_primes(&p, &q) {
            Ok(pair) => {
                debug_assert!(pair.public.n.bits() >= u64::from(bits) - 1);
                return Ok(pair);
            }
            // gcd(lambda, n) != 1: extremely rare, retry with new primes
            Err(_) => continue,
        }
    }
    Err(Error::KeyGeneration(
        "no usable prime pair after bounded attempts".into(),
    ))
}

/// Serialized public key (JSON, hex-encoded integers).
#[derive(Debug, Serialize, Deserialize)]
pub struct PublicKeyFile {
    pub bits: u32,
    pub n_hex: String,
    pub fingerprint: String,
}

/// Serialized secret key (JSON, hex-encoded integers). Holds the public
/// part too so decryption needs a single file.
#[derive(Debug, Serialize, Deserialize)]
pub struct SecretKeyFile {
    pub bits: u32,
    pub n_hex: String,
    pub lambda_hex: String,
    pub mu_hex: String,
}

impl PublicKey {
    pub fn to_file(&self) -> PublicKeyFile {
        PublicKeyFile {
            bits: self.bits,
            n_hex: self.n.to_str_radix(16),
            fingerprint: self.fingerprint.to_hex(),
        }
    }

    pub fn from_file(file: &PublicKeyFile) -> Result<PublicKey> {
        let n = BigUint::parse_bytes(file.n_hex.as_bytes(), 16)
            .ok_or_else(|| Error::FormatInvalid("public key modulus is not hex".into()))?;
        let pk = PublicKey::from_modulus(n);
        if pk.fingerprint.to_hex() != file.fingerprint {
            return Err(Error::KeyMismatch {
                expected: file.fingerprint.clone(),
                actual: pk.fingerprint.to_hex(),
            });
        }
        Ok(pk)
    }
}

impl SecretKey {
    pub fn to_file(&self) -> SecretKeyFile {
        SecretKeyFile {
            bits: self.public.bits,
            n_hex: self.public.n.to_str_radix(16),
            lambda_hex: self.lambda.to_str_radix(16),
            mu_hex: self.mu.to_str_radix(16),
        }
    }

    pub fn from_file(file: &SecretKeyFile) -> Result<SecretKey> {
        let parse = |s: &str, what: &str| {
            BigUint::parse_bytes(s.as_bytes(), 16)
                .ok_or_else(|| Error::FormatInvalid(format!("secret key {what} is not hex")))
        };
        let n = parse(&file.n_hex, "modulus")?;
        Ok(SecretKey {
            lambda: parse(&file.lambda_hex, "lambda")?,
            mu: parse(&file.mu_hex, "mu")?,
            public: PublicKey::from_modulus(n),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy_pair() -> KeyPair {
        KeyPair::from_primes(&BigUint::from(5u32), &BigUint::from(7u32)).unwrap()
    }

    #[test]
    fn toy_modulus_roundtrips_every_message() {
        let pair = toy_pair();
        let mut rng = seeded_rng(1, &[]);
        assert_eq!(pair.public.n(), &BigUint::from(35u32));
        for m in 0u32..35 {
            let c = pair.public.encrypt(&BigUint::from(m), &mut rng).unwrap();
            assert_eq!(pair.secret.decrypt(&c).unwrap(), BigUint::from(m));
        }
    }

    #[test]
    fn keygen_is_deterministic() {
        let a = keygen(64, 42).unwrap();
        let b = keygen(64, 42).unwrap();
        assert_eq!(a.public, b.public);
        let c = keygen(64, 43).unwrap();
        assert_ne!(a.public, c.public);
    }

    #[test]
    fn keygen_rejects_tiny_moduli() {
        assert!(keygen(32, 1).is_err());
    }

    #[test]
    fn encryption_is_randomized() {
        let pair = keygen(128, 9).unwrap();
        let mut rng = seeded_rng(2, &[]);
        let m = BigUint::from(1234u32);
        let c1 = pair.public.encrypt(&m, &mut rng).unwrap();
        let c2 = pair.public.encrypt(&m, &mut rng).unwrap();
        assert_ne!(c1.value(), c2.value());
        assert_eq!(pair.secret.decrypt(&c1).unwrap(), m);
        assert_eq!(pair.secret.decrypt(&c2).unwrap(), m);
    }

    #[test]
    fn message_must_be_below_modulus() {
        let pair = toy_pair();
        let mut rng = seeded_rng(3, &[]);
        assert!(pair.public.encrypt(&BigUint::from(35u32), &mut rng).is_err());
    }

    #[test]
    fn homomorphic_add_and_scalar_mul() {
        let pair = keygen(128, 5).unwrap();
        let mut rng = seeded_rng(4, &[]);
        let c2 = pair.public.encrypt(&BigUint::from(2u32), &mut rng).unwrap();
        let c3 = pair.public.encrypt(&BigUint::from(3u32), &mut rng).unwrap();
        let sum = he_add(&pair.public, &c2, &c3).unwrap();
        assert_eq!(pair.secret.decrypt_u64(&sum).unwrap(), 5);
        let c4 = pair.public.encrypt(&BigUint::from(4u32), &mut rng).unwrap();
        let product = he_scalar_mul(&pair.public, &c4, &BigUint::from(3u32)).unwrap();
        assert_eq!(pair.secret.decrypt_u64(&product).unwrap(), 12);
    }

    #[test]
    fn scalar_n_minus_two_negates_twice() {
        let pair = keygen(128, 6).unwrap();
        let mut rng = seeded_rng(5, &[]);
        let m = 21u64;
        let c = pair.public.encrypt(&BigUint::from(m), &mut rng).unwrap();
        let s = pair.public.n() - BigUint::from(2u32);
        let scaled = he_scalar_mul(&pair.public, &c, &s).unwrap();
        assert_eq!(pair.secret.decrypt_signed(&scaled).unwrap(), -(2 * m as i64));
    }

    #[test]
    fn mixed_keys_are_rejected() {
        let a = keygen(128, 1).unwrap();
        let b = keygen(128, 2).unwrap();
        let mut rng = seeded_rng(6, &[]);
        let ca = a.public.encrypt(&BigUint::from(1u32), &mut rng).unwrap();
        let cb = b.public.encrypt(&BigUint::from(1u32), &mut rng).unwrap();
        assert!(matches!(
            he_add(&a.public, &ca, &cb),
            Err(Error::KeyMismatch { .. })
        ));
        assert!(b.secret.decrypt(&ca).is_err());
    }

    #[test]
    fn signed_encoding_round_trips() {
        let pair = keygen(128, 7).unwrap();
        let mut rng = seeded_rng(7, &[]);
        for v in [-123_456i64, -1, 0, 1, 98_765] {
            let c = pair.public.encrypt_signed(v, &mut rng).unwrap();
            assert_eq!(pair.secret.decrypt_signed(&c).unwrap(), v);
        }
    }

    #[test]
    fn key_files_round_trip() {
        let pair = keygen(128, 8).unwrap();
        let pk = PublicKey::from_file(&pair.public.to_file()).unwrap();
        assert_eq!(pk, pair.public);
        let sk = SecretKey::from_file(&pair.secret.to_file()).unwrap();
        let mut rng = seeded_rng(8, &[]);
        let c = pk.encrypt(&BigUint::from(77u32), &mut rng).unwrap();
        assert_eq!(sk.decrypt_u64(&c).unwrap(), 77);
    }
}
