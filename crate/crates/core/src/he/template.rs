//! Encrypted template enrollment and the encrypted squared-Euclidean-
//! distance protocol.
//!
//! Enrollment stores element-wise ciphertexts Enc(y_i) plus Enc(sum y_i²);
//! authentication evaluates SED = sum x_i² - 2 sum x_i y_i + sum y_i² over
//! ciphertexts and the plaintext probe, optionally restricted to an index
//! selection so full templates can be enrolled once and compared truncated.

use num_bigint::BigUint;
use num_traits::One;
use rand::RngCore;

use crate::error::{Error, Result};
use crate::matching::sed_integer;
use crate::vector::{VectorKind, VectorPayload};

use super::paillier::{
    ciphertext_from_value, he_add_plain, he_neg, raw_mul, Ciphertext, PublicKey,
};

/// Numeric kind of the enrolled vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EncryptedKind {
    Binary,
    Quantized,
}

/// Element-wise encrypted reference template with its encrypted squared
/// norm. For quantized templates, element squares can be stored alongside
/// to enable subset (truncated) matching without decryption; binary
/// templates need no extra storage since y_i² = y_i.
#[derive(Debug, Clone)]
pub struct EncryptedTemplate {
    pub(crate) elements: Vec<Ciphertext>,
    pub(crate) squares: Option<Vec<Ciphertext>>,
    pub(crate) norm_sq: Ciphertext,
    pub(crate) dim: u32,
    pub(crate) q: u32,
    pub(crate) kind: EncryptedKind,
}

impl EncryptedTemplate {
    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn kind(&self) -> EncryptedKind {
        self.kind
    }

    pub fn has_squares(&self) -> bool {
        self.squares.is_some()
    }

    pub fn elements(&self) -> &[Ciphertext] {
        &self.elements
    }

    pub fn squares(&self) -> Option<&[Ciphertext]> {
        self.squares.as_deref()
    }

    pub fn norm_sq(&self) -> &Ciphertext {
        &self.norm_sq
    }

    /// Reassembles a template from stored ciphertexts (gallery files).
    pub fn from_parts(
        elements: Vec<Ciphertext>,
        squares: Option<Vec<Ciphertext>>,
        norm_sq: Ciphertext,
        q: u32,
        kind: EncryptedKind,
    ) -> Result<EncryptedTemplate> {
        if elements.is_empty() {
            return Err(Error::EmptyInput("encrypted template elements".into()));
        }
        if let Some(s) = &squares {
            if s.len() != elements.len() {
                return Err(Error::FormatInvalid(
                    "squared-element count differs from element count".into(),
                ));
            }
        }
        Ok(EncryptedTemplate {
            dim: elements.len() as u32,
            elements,
            squares,
            norm_sq,
            q,
            kind,
        })
    }
}

fn integer_levels_checked(payload: &VectorPayload) -> Result<(Vec<u32>, u32, EncryptedKind)> {
    match payload {
        VectorPayload::Binary(v) => Ok((
            v.bits().iter().map(|&b| u32::from(b)).collect(),
            2,
            EncryptedKind::Binary,
        )),
        VectorPayload::Quantized(v) => {
            Ok((v.levels().to_vec(), v.q(), EncryptedKind::Quantized))
        }
        VectorPayload::Real(_) => Err(Error::KindMismatch {
            left: "quantized or binary".into(),
            right: VectorKind::Real.to_string(),
        }),
    }
}

/// Encrypts a quantized or binary template element-wise together with its
/// squared norm. The plaintext is not retained.
///
/// With `store_squares`, quantized templates additionally store Enc(y_i²)
/// so that subset matching can recompute the truncated norm homomorphically.
pub fn enroll_encrypted<R: RngCore + ?Sized>(
    pk: &PublicKey,
    payload: &VectorPayload,
    store_squares: bool,
    rng: &mut R,
) -> Result<EncryptedTemplate> {
    let (levels, q, kind) = integer_levels_checked(payload)?;
    if BigUint::from(q - 1) >= *pk.n() {
        return Err(Error::MessageRange(format!(
            "level bound {q} does not fit the modulus"
        )));
    }
    let mut elements = Vec::with_capacity(levels.len());
    for &y in &levels {
        elements.push(pk.encrypt(&BigUint::from(y), rng)?);
    }
    let squares = if store_squares && kind == EncryptedKind::Quantized {
        let mut sq = Vec::with_capacity(levels.len());
        for &y in &levels {
            sq.push(pk.encrypt(&BigUint::from(u64::from(y) * u64::from(y)), rng)?);
        }
        Some(sq)
    } else {
        None
    };
    let norm: u64 = levels.iter().map(|&y| u64::from(y) * u64::from(y)).sum();
    let norm_sq = pk.encrypt(&BigUint::from(norm), rng)?;
    Ok(EncryptedTemplate {
        dim: levels.len() as u32,
        elements,
        squares,
        norm_sq,
        q,
        kind,
    })
}

fn check_selection(selection: &[usize], dim: usize) -> Result<()> {
    if selection.is_empty() {
        return Err(Error::EmptyInput("index selection".into()));
    }
    let mut prev: Option<usize> = None;
    for &i in selection {
        if i >= dim {
            return Err(Error::InvalidParameter(format!(
                "selection index {i} outside [0, {dim})"
            )));
        }
        if let Some(p) = prev {
            if i <= p {
                return Err(Error::InvalidParameter(
                    "selection indices must be strictly increasing".into(),
                ));
            }
        }
        prev = Some(i);
    }
    Ok(())
}

/// Encrypted squared Euclidean distance between a plaintext probe and an
/// enrolled template, optionally restricted to `selection` (the same index
/// subset implicitly applied to both sides).
///
/// The returned ciphertext decrypts to sed(x, y) exactly. Only the public
/// key, ciphertexts and the plaintext probe are touched.
pub fn encrypted_sed(
    pk: &PublicKey,
    probe: &VectorPayload,
    template: &EncryptedTemplate,
    selection: Option<&[usize]>,
) -> Result<Ciphertext> {
    pk.fingerprint_check(&template.norm_sq)?;
    let (probe_levels, probe_q, probe_kind) = integer_levels_checked(probe)?;
    if probe_kind != template.kind || probe_q != template.q {
        return Err(Error::KindMismatch {
            left: format!("{:?}(q={})", template.kind, template.q),
            right: format!("{:?}(q={})", probe_kind, probe_q),
        });
    }
    let full: Vec<usize>;
    let indices: &[usize] = match selection {
        Some(s) => {
            check_selection(s, template.dim as usize)?;
            if probe_levels.len() != s.len() && probe_levels.len() != template.dim as usize {
                return Err(Error::DimensionMismatch {
                    left: probe_levels.len(),
                    right: s.len(),
                });
            }
            s
        }
        None => {
            if probe_levels.len() != template.dim as usize {
                return Err(Error::DimensionMismatch {
                    left: probe_levels.len(),
                    right: template.dim as usize,
                });
            }
            full = (0..template.dim as usize).collect();
            &full
        }
    };
    // The probe may be supplied pre-truncated (len == |S|) or full-length
    // (the selection is then applied to it here, mirroring the template side).
    let probe_selected: Vec<u32> = if probe_levels.len() == indices.len() {
        probe_levels
    } else {
        indices.iter().map(|&i| probe_levels[i]).collect()
    };

    // cross term: product of Enc(y_i)^(x_i), squared once at the end
    let mut cross = BigUint::one();
    for (&x, &i) in probe_selected.iter().zip(indices) {
        match x {
            0 => {}
            1 => cross = raw_mul(pk, &cross, template.elements[i].value()),
            _ => {
                let powered = template.elements[i]
                    .value()
                    .modpow(&BigUint::from(x), pk.n_squared());
                cross = raw_mul(pk, &cross, &powered);
            }
        }
    }
    let cross_sq = raw_mul(pk, &cross, &cross);
    let minus_double_cross = he_neg(pk, &ciphertext_from_value(cross_sq, pk))?;

    // template norm over the selection
    let is_full = indices.len() == template.dim as usize;
    let norm_term = if is_full {
        template.norm_sq.clone()
    } else {
        match template.kind {
            EncryptedKind::Binary => {
                // bits: y_i² = y_i, so the subset norm is the homomorphic sum
                // of the element ciphertexts
                let mut acc = BigUint::one();
                for &i in indices {
                    acc = raw_mul(pk, &acc, template.elements[i].value());
                }
                ciphertext_from_value(acc, pk)
            }
            EncryptedKind::Quantized => {
                let squares = template.squares.as_ref().ok_or_else(|| {
                    Error::InvalidParameter(
                        "subset matching needs squared-element ciphertexts; enroll with squares enabled"
                            .into(),
                    )
                })?;
                let mut acc = BigUint::one();
                for &i in indices {
                    acc = raw_mul(pk, &acc, squares[i].value());
                }
                ciphertext_from_value(acc, pk)
            }
        }
    };

    // probe norm as a plaintext constant
    let probe_norm: u64 = probe_selected.iter().map(|&x| u64::from(x) * u64::from(x)).sum();
    let with_probe_norm = he_add_plain(pk, &norm_term, &BigUint::from(probe_norm));
    let value = raw_mul(pk, &with_probe_norm, minus_double_cross.value());
    Ok(ciphertext_from_value(value, pk))
}

impl PublicKey {
    fn fingerprint_check(&self, c: &Ciphertext) -> Result<()> {
        if c.key_fingerprint() != self.fingerprint() {
            return Err(Error::KeyMismatch {
                expected: self.fingerprint().to_hex(),
                actual: c.key_fingerprint().to_hex(),
            });
        }
        Ok(())
    }
}

/// Plaintext oracle for the encrypted path: exact SED over integer levels.
pub fn plain_sed_levels(a: &[u32], b: &[u32]) -> u64 {
    sed_integer(a, b)
}
