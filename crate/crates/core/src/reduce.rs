//! Training-free dimensionality reduction and fusion operators.
//!
//! A [`ReductionPlan`] composes the operators in a fixed order:
//! quantize -> truncate -> fuse. All operators are pure functions over
//! immutable inputs and are cheap, index-based selections or element-wise
//! additions, so they map directly onto encrypted-domain selection.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{
    concat, BinaryVector, FeatureVector, Modality, Provenance, QuantizedVector, Template,
    VectorPayload,
};

/// Quantization stage of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Quantization {
    None,
    /// Single-bit encoding: 0 below the threshold, 1 at or above it.
    Binary { threshold: f64 },
    /// Equal-width quantization to `q` levels over a fixed range.
    Levels { q: u32, range: (f64, f64) },
}

impl Default for Quantization {
    fn default() -> Self {
        Quantization::None
    }
}

/// Truncation stage of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Truncation {
    None,
    /// Contiguous 1/k slice, 1-based fraction index i in [1, k].
    Fraction { k: u32, i: u32 },
    /// Every x-th element (stride selection from offset 0).
    Interleave { x: u32 },
    /// Element-wise sum of the k contiguous fractions.
    Sum { k: u32 },
    /// First `len` elements; generalizes `Fraction {k, i=1}` to lengths
    /// that do not divide the dimension.
    Prefix { len: u32 },
}

impl Default for Truncation {
    fn default() -> Self {
        Truncation::None
    }
}

/// Fusion stage of a plan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Fusion {
    None,
    /// Feature-level concatenation in the given modality order.
    Concat { order: Vec<Modality> },
}

impl Default for Fusion {
    fn default() -> Self {
        Fusion::None
    }
}

/// Declarative reduction pipeline, applied as quantize -> truncate -> fuse.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct ReductionPlan {
    #[serde(default)]
    pub quantization: Quantization,
    #[serde(default)]
    pub truncation: Truncation,
    #[serde(default)]
    pub fusion: Fusion,
}

impl ReductionPlan {
    pub fn identity() -> Self {
        ReductionPlan::default()
    }

    /// Output dimension of the per-template stages for input dimension `d`.
    pub fn reduced_dim(&self, d: usize) -> Result<usize> {
        Ok(match &self.truncation {
            Truncation::None => d,
            Truncation::Fraction { k, .. } | Truncation::Sum { k } => {
                check_divides(*k, d, "k")?;
                d / *k as usize
            }
            Truncation::Interleave { x } => {
                check_divides(*x, d, "x")?;
                d / *x as usize
            }
            Truncation::Prefix { len } => {
                check_prefix_len(*len, d)?;
                *len as usize
            }
        })
    }
}

fn check_divides(k: u32, d: usize, name: &str) -> Result<()> {
    if k == 0 || d % k as usize != 0 {
        return Err(Error::InvalidParameter(format!(
            "{name}={k} must divide the dimension {d}"
        )));
    }
    Ok(())
}

fn check_prefix_len(len: u32, d: usize) -> Result<()> {
    if len == 0 || len as usize > d {
        return Err(Error::InvalidParameter(format!(
            "prefix length {len} outside [1, {d}]"
        )));
    }
    Ok(())
}

/// Single-bit encoding: output bit is 0 where the element is below `t`,
/// 1 where it is at or above `t`. Total over all inputs.
pub fn binarize(v: &FeatureVector, t: f64) -> BinaryVector {
    let bits = v
        .elements()
        .iter()
        .map(|&x| if x < t { 0u8 } else { 1u8 })
        .collect();
    BinaryVector::new(bits).expect("non-empty input produces non-empty output")
}

/// Equal-width quantization of each element to `q = 2^l` levels over
/// `range = (x_min, x_max)`. Inputs are clamped to the range first, so the
/// output always lies in [0, q-1].
pub fn quantize(v: &FeatureVector, q: u32, range: (f64, f64)) -> Result<QuantizedVector> {
    if q < 2 || !q.is_power_of_two() {
        return Err(Error::InvalidParameter(format!(
            "quantization intervals q={q} must be a power of two >= 2"
        )));
    }
    let (x_min, x_max) = range;
    if !(x_min < x_max) {
        return Err(Error::InvalidParameter(format!(
            "degenerate quantization range [{x_min}, {x_max}]"
        )));
    }
    let width = x_max - x_min;
    let levels = v
        .elements()
        .iter()
        .map(|&x| {
            let clamped = x.clamp(x_min, x_max);
            let level = ((clamped - x_min) / width * f64::from(q - 1)).floor();
            // clamp guards the x == x_max endpoint where floor hits q-1 exactly
            (level as u32).min(q - 1)
        })
        .collect();
    QuantizedVector::new(levels, q)
}

fn fraction_bounds(dim: usize, k: u32, i: u32) -> Result<(usize, usize)> {
    check_divides(k, dim, "k")?;
    if i < 1 || i > k {
        return Err(Error::InvalidParameter(format!(
            "fraction index i={i} outside [1, {k}]"
        )));
    }
    let part = dim / k as usize;
    let start = (i as usize - 1) * part;
    Ok((start, start + part))
}

fn select_indices(payload: &VectorPayload, indices: impl Iterator<Item = usize>) -> VectorPayload {
    match payload {
        VectorPayload::Real(v) => {
            let el = v.elements();
            VectorPayload::Real(
                FeatureVector::new(indices.map(|i| el[i]).collect()).expect("non-empty selection"),
            )
        }
        VectorPayload::Quantized(v) => {
            let el = v.levels();
            VectorPayload::Quantized(
                QuantizedVector::new(indices.map(|i| el[i]).collect(), v.q())
                    .expect("selection preserves the level bound"),
            )
        }
        VectorPayload::Binary(v) => {
            let el = v.bits();
            VectorPayload::Binary(
                BinaryVector::new(indices.map(|i| el[i]).collect()).expect("non-empty selection"),
            )
        }
    }
}

/// The i-th of k contiguous fractions (1-based), length d/k.
pub fn fraction(v: &VectorPayload, k: u32, i: u32) -> Result<VectorPayload> {
    let (start, end) = fraction_bounds(v.dim(), k, i)?;
    Ok(select_indices(v, start..end))
}

/// Every x-th element starting at offset 0, length d/x.
pub fn interleave(v: &VectorPayload, x: u32) -> Result<VectorPayload> {
    let d = v.dim();
    check_divides(x, d, "x")?;
    Ok(select_indices(v, (0..d).step_by(x as usize)))
}

/// Literal index-generation formula `i_k = floor(k * (d-1) / (x-1))` for
/// k = 0..x-1. Documented for reference only: it yields exactly `x` indices
/// (an x-point spread), not the d/x-element downsampling used by
/// [`interleave`]. Requires x >= 2.
pub fn interleave_literal(v: &VectorPayload, x: u32) -> Result<VectorPayload> {
    if x < 2 {
        return Err(Error::InvalidParameter(
            "literal interleaving needs x >= 2".into(),
        ));
    }
    let d = v.dim();
    let indices = (0..x as usize).map(|k| k * (d - 1) / (x as usize - 1));
    Ok(select_indices(v, indices))
}

/// Element-wise sum of the k contiguous fractions, length d/k.
///
/// Binary inputs become integer counts in [0, k]; quantized inputs widen
/// their level bound to k*(q-1)+1. k = 1 is the identity.
pub fn sum_fractions(v: &VectorPayload, k: u32) -> Result<VectorPayload> {
    let d = v.dim();
    check_divides(k, d, "k")?;
    if k == 1 {
        return Ok(v.clone());
    }
    let part = d / k as usize;
    match v {
        VectorPayload::Real(fv) => {
            let el = fv.elements();
            let mut out = vec![0.0f64; part];
            for i in 0..k as usize {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot += el[i * part + j];
                }
            }
            Ok(VectorPayload::Real(FeatureVector::new(out)?))
        }
        VectorPayload::Quantized(qv) => {
            let el = qv.levels();
            let mut out = vec![0u32; part];
            for i in 0..k as usize {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot += el[i * part + j];
                }
            }
            let bound = k * (qv.q() - 1) + 1;
            Ok(VectorPayload::Quantized(QuantizedVector::new(out, bound)?))
        }
        VectorPayload::Binary(bv) => {
            let el = bv.bits();
            let mut out = vec![0u32; part];
            for i in 0..k as usize {
                for (j, slot) in out.iter_mut().enumerate() {
                    *slot += u32::from(el[i * part + j]);
                }
            }
            Ok(VectorPayload::Quantized(QuantizedVector::new(out, k + 1)?))
        }
    }
}

/// First `len` elements.
pub fn prefix(v: &VectorPayload, len: u32) -> Result<VectorPayload> {
    check_prefix_len(len, v.dim())?;
    Ok(select_indices(v, 0..len as usize))
}

/// Index set kept by an index-based truncation, or `None` for the full
/// vector. Sum truncation is not an index selection and is rejected.
pub fn selection_indices(truncation: &Truncation, dim: usize) -> Result<Option<Vec<usize>>> {
    match truncation {
        Truncation::None => Ok(None),
        Truncation::Fraction { k, i } => {
            let (start, end) = fraction_bounds(dim, *k, *i)?;
            Ok(Some((start..end).collect()))
        }
        Truncation::Interleave { x } => {
            check_divides(*x, dim, "x")?;
            Ok(Some((0..dim).step_by(*x as usize).collect()))
        }
        Truncation::Prefix { len } => {
            check_prefix_len(*len, dim)?;
            Ok(Some((0..*len as usize).collect()))
        }
        Truncation::Sum { .. } => Err(Error::InvalidParameter(
            "sum truncation is addition, not an index selection".into(),
        )),
    }
}

fn apply_quantization(payload: &VectorPayload, quantization: &Quantization) -> Result<VectorPayload> {
    match quantization {
        Quantization::None => Ok(payload.clone()),
        Quantization::Binary { threshold } => match payload {
            VectorPayload::Real(v) => Ok(VectorPayload::Binary(binarize(v, *threshold))),
            other => Err(Error::KindMismatch {
                left: "real (binarization input)".into(),
                right: other.kind().to_string(),
            }),
        },
        Quantization::Levels { q, range } => match payload {
            VectorPayload::Real(v) => Ok(VectorPayload::Quantized(quantize(v, *q, *range)?)),
            other => Err(Error::KindMismatch {
                left: "real (quantization input)".into(),
                right: other.kind().to_string(),
            }),
        },
    }
}

fn apply_truncation(payload: &VectorPayload, truncation: &Truncation) -> Result<VectorPayload> {
    match truncation {
        Truncation::None => Ok(payload.clone()),
        Truncation::Fraction { k, i } => fraction(payload, *k, *i),
        Truncation::Interleave { x } => interleave(payload, *x),
        Truncation::Sum { k } => sum_fractions(payload, *k),
        Truncation::Prefix { len } => prefix(payload, *len),
    }
}

/// Runs the per-template stages of a plan (quantize, then truncate) and
/// records the plan in the output's provenance. Fusion operates across
/// modalities and is handled by [`fuse_concat`].
pub fn apply_plan(t: &Template, plan: &ReductionPlan) -> Result<Template> {
    let quantized = apply_quantization(&t.payload, &plan.quantization)?;
    let truncated = apply_truncation(&quantized, &plan.truncation)?;
    Ok(Template {
        payload: truncated,
        subject_id: t.subject_id.clone(),
        sample_index: t.sample_index,
        provenance: Provenance::Reduced(plan.clone()),
    })
}

/// Concatenates the per-modality templates of one subject-sample in the
/// given modality order. All payloads must share a numeric kind and every
/// modality in `order` must be present exactly once.
pub fn fuse_concat(parts: &[(Modality, Template)], order: &[Modality]) -> Result<Template> {
    if parts.is_empty() {
        return Err(Error::EmptyInput("fusion parts".into()));
    }
    if order.is_empty() {
        return Err(Error::EmptyInput("fusion modality order".into()));
    }
    let subject = &parts[0].1.subject_id;
    if parts.iter().any(|(_, t)| &t.subject_id != subject) {
        return Err(Error::InvalidParameter(
            "fusion parts belong to different subjects".into(),
        ));
    }
    if parts.len() != order.len() {
        return Err(Error::InvalidParameter(format!(
            "fusion expects {} modalities, got {}",
            order.len(),
            parts.len()
        )));
    }
    let mut ordered = Vec::with_capacity(order.len());
    for modality in order {
        let t = parts
            .iter()
            .find(|(m, _)| m == modality)
            .map(|(_, t)| t)
            .ok_or_else(|| {
                Error::InvalidParameter(format!("missing modality {modality} in fusion input"))
            })?;
        ordered.push(t);
    }
    let payloads: Vec<VectorPayload> = ordered.iter().map(|t| t.payload.clone()).collect();
    let fused = concat(&payloads)?;
    Ok(Template {
        payload: fused,
        subject_id: subject.clone(),
        sample_index: parts[0].1.sample_index,
        provenance: Provenance::Fused {
            order: order.to_vec(),
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::prelude::*;
    use rand_chacha::ChaCha12Rng;

    fn fv(v: &[f64]) -> FeatureVector {
        FeatureVector::new(v.to_vec()).unwrap()
    }

    fn real(v: &[f64]) -> VectorPayload {
        VectorPayload::Real(fv(v))
    }

    fn random_real(dim: usize, seed: u64) -> VectorPayload {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        real(&(0..dim).map(|_| rng.random_range(-1.0..1.0)).collect::<Vec<_>>())
    }

    #[test]
    fn binarize_boundary_maps_to_one() {
        let out = binarize(&fv(&[-0.3, 0.0, 0.7]), 0.0);
        assert_eq!(out.bits(), &[0, 1, 1]);
    }

    #[test]
    fn binarize_all_negative_gives_zeros() {
        let out = binarize(&fv(&[-1.0, -0.5, -0.1]), 0.0);
        assert_eq!(out.bits(), &[0, 0, 0]);
    }

    #[test]
    fn binarize_matches_sign_scan_oracle() {
        let v = random_real(512, 7);
        let out = binarize(v.as_real().unwrap(), 0.0);
        // independent sign scan
        for (bit, x) in out.bits().iter().zip(v.as_real().unwrap().elements()) {
            let expected = if x.is_sign_negative() && *x != 0.0 { 0 } else { 1 };
            assert_eq!(*bit, expected, "element {x}");
        }
    }

    #[test]
    fn quantize_endpoints() {
        let out = quantize(&fv(&[-1.0, 1.0]), 4, (-1.0, 1.0)).unwrap();
        assert_eq!(out.levels(), &[0, 3]);
    }

    #[test]
    fn quantize_mid_value_int8() {
        // floor(((0.25 + 1) / 2) * 255) = floor(159.375) = 159
        let out = quantize(&fv(&[0.25]), 256, (-1.0, 1.0)).unwrap();
        assert_eq!(out.levels(), &[159]);
    }

    #[test]
    fn quantize_matches_independent_oracle() {
        let v = random_real(512, 11);
        let el = v.as_real().unwrap().elements();
        for q in [2u32, 4, 16, 256] {
            let out = quantize(v.as_real().unwrap(), q, (-1.0, 1.0)).unwrap();
            for (lvl, &x) in out.levels().iter().zip(el) {
                let c = x.clamp(-1.0, 1.0);
                let expected = (((c + 1.0) / 2.0) * f64::from(q - 1)).floor() as u32;
                assert_eq!(*lvl, expected.min(q - 1));
            }
        }
    }

    #[test]
    fn quantize_clamps_out_of_range() {
        let out = quantize(&fv(&[-5.0, 5.0]), 16, (-1.0, 1.0)).unwrap();
        assert_eq!(out.levels(), &[0, 15]);
    }

    #[test]
    fn quantize_rejects_degenerate_range() {
        assert!(quantize(&fv(&[0.0]), 4, (1.0, 1.0)).is_err());
    }

    #[test]
    fn quantize_rejects_non_power_of_two() {
        assert!(quantize(&fv(&[0.0]), 3, (-1.0, 1.0)).is_err());
        assert!(quantize(&fv(&[0.0]), 1, (-1.0, 1.0)).is_err());
    }

    #[test]
    fn fraction_second_quarter() {
        let v = real(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let out = fraction(&v, 4, 2).unwrap();
        assert_eq!(out.as_real().unwrap().elements(), &[3.0, 4.0]);
    }

    #[test]
    fn fraction_identity() {
        let v = random_real(16, 3);
        assert_eq!(fraction(&v, 1, 1).unwrap(), v);
    }

    #[test]
    fn fraction_rejects_bad_parameters() {
        let v = random_real(10, 3);
        assert!(fraction(&v, 3, 1).is_err()); // 3 does not divide 10
        assert!(fraction(&v, 2, 0).is_err());
        assert!(fraction(&v, 2, 3).is_err());
    }

    #[test]
    fn fractions_reconstruct_original() {
        for k in [2u32, 4, 8] {
            let v = random_real(512, u64::from(k));
            let parts: Vec<_> = (1..=k).map(|i| fraction(&v, k, i).unwrap()).collect();
            assert_eq!(concat(&parts).unwrap(), v);
        }
    }

    #[test]
    fn interleave_stride_rule() {
        let v = real(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let out = interleave(&v, 2).unwrap();
        assert_eq!(out.as_real().unwrap().elements(), &[1.0, 3.0, 5.0, 7.0]);
    }

    #[test]
    fn interleave_identity_and_dims() {
        let v = random_real(512, 5);
        assert_eq!(interleave(&v, 1).unwrap(), v);
        assert_eq!(interleave(&v, 4).unwrap().dim(), 128);
    }

    #[test]
    fn interleave_rejects_non_divisor() {
        let v = random_real(10, 5);
        assert!(interleave(&v, 3).is_err());
    }

    #[test]
    fn interleave_literal_yields_x_points() {
        let v = real(&[1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0]);
        let out = interleave_literal(&v, 4).unwrap();
        // floor(k * 7 / 3) for k = 0..3 -> 0, 2, 4, 7
        assert_eq!(out.as_real().unwrap().elements(), &[1.0, 3.0, 5.0, 8.0]);
        assert!(interleave_literal(&v, 1).is_err());
    }

    #[test]
    fn sum_fractions_halves() {
        let v = real(&[1.0, 2.0, 3.0, 4.0]);
        let out = sum_fractions(&v, 2).unwrap();
        assert_eq!(out.as_real().unwrap().elements(), &[4.0, 6.0]);
    }

    #[test]
    fn sum_fractions_identity() {
        let v = random_real(64, 9);
        assert_eq!(sum_fractions(&v, 1).unwrap(), v);
    }

    #[test]
    fn sum_fractions_counts_active_bits() {
        let v = VectorPayload::Binary(BinaryVector::new(vec![1, 0, 1, 1]).unwrap());
        let out = sum_fractions(&v, 2).unwrap();
        let q = out.as_quantized().unwrap();
        assert_eq!(q.levels(), &[2, 1]);
        assert_eq!(q.q(), 3);
    }

    #[test]
    fn sum_fractions_equals_sum_of_fractions_brute_force() {
        for k in [2u32, 4, 8] {
            let v = random_real(64, 100 + u64::from(k));
            let summed = sum_fractions(&v, k).unwrap();
            let el = v.as_real().unwrap().elements();
            let part = 64 / k as usize;
            // brute-force oracle: explicit double loop over fractions
            for j in 0..part {
                let mut acc = 0.0;
                for i in 0..k as usize {
                    acc += el[i * part + j];
                }
                assert_eq!(summed.as_real().unwrap().elements()[j], acc);
            }
        }
    }

    #[test]
    fn selection_indices_match_operators() {
        let v = random_real(32, 21);
        let sel = selection_indices(&Truncation::Fraction { k: 4, i: 3 }, 32)
            .unwrap()
            .unwrap();
        assert_eq!(select_indices(&v, sel.into_iter()), fraction(&v, 4, 3).unwrap());
        let sel = selection_indices(&Truncation::Interleave { x: 8 }, 32)
            .unwrap()
            .unwrap();
        assert_eq!(select_indices(&v, sel.into_iter()), interleave(&v, 8).unwrap());
        assert!(selection_indices(&Truncation::Sum { k: 2 }, 32).is_err());
        assert!(selection_indices(&Truncation::None, 32).unwrap().is_none());
    }

    #[test]
    fn apply_plan_identity() {
        let t = Template::raw(random_real(8, 2), "s0", 0);
        let out = apply_plan(&t, &ReductionPlan::identity()).unwrap();
        assert_eq!(out.payload, t.payload);
    }

    #[test]
    fn apply_plan_binary_fraction() {
        let t = Template::raw(random_real(512, 13), "s0", 0);
        let plan = ReductionPlan {
            quantization: Quantization::Binary { threshold: 0.0 },
            truncation: Truncation::Fraction { k: 2, i: 1 },
            fusion: Fusion::None,
        };
        let out = apply_plan(&t, &plan).unwrap();
        assert_eq!(out.payload.dim(), 256);
        assert!(out.payload.as_binary().is_some());
        assert_eq!(out.provenance, Provenance::Reduced(plan));
    }

    #[test]
    fn apply_plan_levels_interleave_range() {
        let t = Template::raw(random_real(512, 17), "s0", 0);
        let plan = ReductionPlan {
            quantization: Quantization::Levels {
                q: 4,
                range: (-1.0, 1.0),
            },
            truncation: Truncation::Interleave { x: 4 },
            fusion: Fusion::None,
        };
        let out = apply_plan(&t, &plan).unwrap();
        let qv = out.payload.as_quantized().unwrap();
        assert_eq!(qv.dim(), 128);
        assert!(qv.levels().iter().all(|&l| l <= 3));
    }

    #[test]
    fn apply_plan_rejects_quantizing_binary_input() {
        let t = Template::raw(
            VectorPayload::Binary(BinaryVector::new(vec![0, 1]).unwrap()),
            "s0",
            0,
        );
        let plan = ReductionPlan {
            quantization: Quantization::Binary { threshold: 0.0 },
            ..Default::default()
        };
        assert!(apply_plan(&t, &plan).is_err());
    }

    #[test]
    fn fuse_concat_three_modalities() {
        let order = Modality::default_order();
        let parts: Vec<_> = order
            .iter()
            .map(|m| (m.clone(), Template::raw(random_real(512, 1), "s0", 0)))
            .collect();
        let fused = fuse_concat(&parts, &order).unwrap();
        assert_eq!(fused.payload.dim(), 1536);
        assert_eq!(
            fused.provenance,
            Provenance::Fused {
                order: order.clone()
            }
        );
    }

    #[test]
    fn fuse_concat_uneven_total_512() {
        let order = Modality::default_order();
        let dims = [171usize, 171, 170];
        let parts: Vec<_> = order
            .iter()
            .zip(dims)
            .map(|(m, d)| (m.clone(), Template::raw(random_real(d, 1), "s0", 0)))
            .collect();
        assert_eq!(fuse_concat(&parts, &order).unwrap().payload.dim(), 512);
    }

    #[test]
    fn fuse_concat_single_modality_unchanged() {
        let order = vec![Modality::iris()];
        let t = Template::raw(random_real(16, 4), "s0", 0);
        let parts = vec![(Modality::iris(), t.clone())];
        assert_eq!(fuse_concat(&parts, &order).unwrap().payload, t.payload);
    }

    #[test]
    fn fuse_concat_rejects_missing_modality_and_kind_mismatch() {
        let order = Modality::default_order();
        let parts = vec![
            (Modality::face(), Template::raw(random_real(8, 1), "s0", 0)),
            (
                Modality::fingerprint(),
                Template::raw(random_real(8, 2), "s0", 0),
            ),
        ];
        assert!(fuse_concat(&parts, &order).is_err());

        let mixed = vec![
            (Modality::face(), Template::raw(random_real(8, 1), "s0", 0)),
            (
                Modality::fingerprint(),
                Template::raw(
                    VectorPayload::Binary(BinaryVector::new(vec![1; 8]).unwrap()),
                    "s0",
                    0,
                ),
            ),
            (Modality::iris(), Template::raw(random_real(8, 3), "s0", 0)),
        ];
        assert!(fuse_concat(&mixed, &order).is_err());
    }

    #[test]
    fn plan_json_round_trip() {
        let plan = ReductionPlan {
            quantization: Quantization::Levels {
                q: 16,
                range: (-1.0, 1.0),
            },
            truncation: Truncation::Fraction { k: 4, i: 2 },
            fusion: Fusion::Concat {
                order: Modality::default_order(),
            },
        };
        let json = serde_json::to_string(&plan).unwrap();
        let back: ReductionPlan = serde_json::from_str(&json).unwrap();
        assert_eq!(back, plan);
    }
}
