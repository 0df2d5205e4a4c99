//! Fundamental vector and dataset types shared by all modules.
//!
//! Feature vectors are real-valued embeddings; reduced representations are
//! either quantized integer levels or single bits. All types are immutable
//! after construction and safe to share across threads.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::ReductionPlan;

/// Biometric modality tag. The three standard modalities have canonical
/// constructors; arbitrary string tags are accepted for extensibility.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Modality(String);

impl Modality {
    pub fn face() -> Self {
        Modality("face".into())
    }

    pub fn fingerprint() -> Self {
        Modality("fingerprint".into())
    }

    pub fn iris() -> Self {
        Modality("iris".into())
    }

    pub fn new(tag: impl Into<String>) -> Self {
        Modality(tag.into())
    }

    pub fn name(&self) -> &str {
        &self.0
    }

    /// Default modality ordering used for fusion and reports.
    pub fn default_order() -> Vec<Modality> {
        vec![Self::face(), Self::fingerprint(), Self::iris()]
    }
}

impl std::fmt::Display for Modality {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

/// Real-valued embedding vector (64-bit IEEE elements).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    elements: Vec<f64>,
}

impl FeatureVector {
    pub fn new(elements: Vec<f64>) -> Result<Self> {
        if elements.is_empty() {
            return Err(Error::EmptyInput("feature vector".into()));
        }
        Ok(FeatureVector { elements })
    }

    pub fn dim(&self) -> usize {
        self.elements.len()
    }

    pub fn elements(&self) -> &[f64] {
        &self.elements
    }

    pub fn norm(&self) -> f64 {
        self.elements.iter().map(|x| x * x).sum::<f64>().sqrt()
    }

    /// Whether the empirical element mean lies within `tol` of zero.
    pub fn mean_centered_within(&self, tol: f64) -> bool {
        let mean = self.elements.iter().sum::<f64>() / self.elements.len() as f64;
        mean.abs() <= tol
    }
}

/// Vector over {0, 1}, one byte per element in memory. File storage packs
/// eight bits per byte (see the template file format).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryVector {
    bits: Vec<u8>,
}

impl BinaryVector {
    pub fn new(bits: Vec<u8>) -> Result<Self> {
        if bits.is_empty() {
            return Err(Error::EmptyInput("binary vector".into()));
        }
        if let Some(bad) = bits.iter().find(|&&b| b > 1) {
            return Err(Error::InvalidParameter(format!(
                "binary vector element {bad} outside {{0,1}}"
            )));
        }
        Ok(BinaryVector { bits })
    }

    pub fn dim(&self) -> usize {
        self.bits.len()
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    /// Number of set bits.
    pub fn weight(&self) -> u64 {
        self.bits.iter().map(|&b| u64::from(b)).sum()
    }
}

/// Vector of non-negative integer levels. `q` is the number of representable
/// levels: every element lies in [0, q-1]. The quantization operation
/// produces power-of-two `q`; summed vectors may carry any bound >= 2.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedVector {
    levels: Vec<u32>,
    q: u32,
}

impl QuantizedVector {
    pub fn new(levels: Vec<u32>, q: u32) -> Result<Self> {
        if levels.is_empty() {
            return Err(Error::EmptyInput("quantized vector".into()));
        }
        if q < 2 {
            return Err(Error::InvalidParameter(format!(
                "level bound q={q} must be at least 2"
            )));
        }
        if let Some(bad) = levels.iter().find(|&&v| v >= q) {
            return Err(Error::InvalidParameter(format!(
                "level {bad} outside [0, {}]",
                q - 1
            )));
        }
        Ok(QuantizedVector { levels, q })
    }

    pub fn dim(&self) -> usize {
        self.levels.len()
    }

    pub fn levels(&self) -> &[u32] {
        &self.levels
    }

    pub fn q(&self) -> u32 {
        self.q
    }
}

/// Numeric kind of a payload, used for mismatch checks and file headers.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VectorKind {
    Real,
    Quantized { q: u32 },
    Binary,
}

impl std::fmt::Display for VectorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            VectorKind::Real => write!(f, "real"),
            VectorKind::Quantized { q } => write!(f, "quantized(q={q})"),
            VectorKind::Binary => write!(f, "binary"),
        }
    }
}

/// A feature vector in any of the three representations handled by the
/// reduction pipeline.
#[derive(Debug, Clone, PartialEq)]
pub enum VectorPayload {
    Real(FeatureVector),
    Quantized(QuantizedVector),
    Binary(BinaryVector),
}

impl VectorPayload {
    pub fn dim(&self) -> usize {
        match self {
            VectorPayload::Real(v) => v.dim(),
            VectorPayload::Quantized(v) => v.dim(),
            VectorPayload::Binary(v) => v.dim(),
        }
    }

    pub fn kind(&self) -> VectorKind {
        match self {
            VectorPayload::Real(_) => VectorKind::Real,
            VectorPayload::Quantized(v) => VectorKind::Quantized { q: v.q() },
            VectorPayload::Binary(_) => VectorKind::Binary,
        }
    }

    pub fn as_real(&self) -> Option<&FeatureVector> {
        match self {
            VectorPayload::Real(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_quantized(&self) -> Option<&QuantizedVector> {
        match self {
            VectorPayload::Quantized(v) => Some(v),
            _ => None,
        }
    }

    pub fn as_binary(&self) -> Option<&BinaryVector> {
        match self {
            VectorPayload::Binary(v) => Some(v),
            _ => None,
        }
    }

    /// Integer levels of a quantized or binary payload.
    pub fn integer_levels(&self) -> Option<Vec<u32>> {
        match self {
            VectorPayload::Real(_) => None,
            VectorPayload::Quantized(v) => Some(v.levels().to_vec()),
            VectorPayload::Binary(v) => Some(v.bits().iter().map(|&b| u32::from(b)).collect()),
        }
    }
}

fn kind_mismatch(left: VectorKind, right: VectorKind) -> Error {
    Error::KindMismatch {
        left: left.to_string(),
        right: right.to_string(),
    }
}

/// Concatenates vectors of the same numeric kind, in order.
///
/// Quantized parts must share the same level bound `q`; mixing kinds is
/// rejected. Output dimension is the sum of part dimensions.
pub fn concat(parts: &[VectorPayload]) -> Result<VectorPayload> {
    let first = parts
        .first()
        .ok_or_else(|| Error::EmptyInput("concat parts".into()))?;
    let kind = first.kind();
    for p in parts.iter().skip(1) {
        if p.kind() != kind {
            return Err(kind_mismatch(kind, p.kind()));
        }
    }
    match first {
        VectorPayload::Real(_) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend_from_slice(p.as_real().unwrap().elements());
            }
            Ok(VectorPayload::Real(FeatureVector::new(out)?))
        }
        VectorPayload::Quantized(q0) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend_from_slice(p.as_quantized().unwrap().levels());
            }
            Ok(VectorPayload::Quantized(QuantizedVector::new(out, q0.q())?))
        }
        VectorPayload::Binary(_) => {
            let mut out = Vec::new();
            for p in parts {
                out.extend_from_slice(p.as_binary().unwrap().bits());
            }
            Ok(VectorPayload::Binary(BinaryVector::new(out)?))
        }
    }
}

/// Scales a vector to unit Euclidean norm. Zero vectors are rejected.
pub fn l2_normalize(v: &FeatureVector) -> Result<FeatureVector> {
    let norm = v.norm();
    if norm == 0.0 || !norm.is_finite() {
        return Err(Error::InvalidParameter(
            "cannot normalize a zero or non-finite vector".into(),
        ));
    }
    FeatureVector::new(v.elements().iter().map(|x| x / norm).collect())
}

/// How a template's payload was produced.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    /// Unmodified extractor output.
    Raw,
    /// Output of a reduction plan.
    Reduced(ReductionPlan),
    /// Concatenation of per-modality templates, in the recorded order.
    Fused { order: Vec<Modality> },
}

/// Stored biometric reference: payload plus subject/sample bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct Template {
    pub payload: VectorPayload,
    pub subject_id: String,
    pub sample_index: u32,
    pub provenance: Provenance,
}

impl Template {
    pub fn raw(payload: VectorPayload, subject_id: impl Into<String>, sample_index: u32) -> Self {
        Template {
            payload,
            subject_id: subject_id.into(),
            sample_index,
            provenance: Provenance::Raw,
        }
    }
}

/// All templates of one virtual subject, grouped per modality.
/// `samples[m]` aligns with `MultiDataset::modalities[m]`.
#[derive(Debug, Clone)]
pub struct SubjectRecords {
    pub subject_id: String,
    pub samples: Vec<Vec<Template>>,
}

/// Multi-modal dataset of virtual subjects.
#[derive(Debug, Clone)]
pub struct MultiDataset {
    pub modalities: Vec<Modality>,
    pub subjects: Vec<SubjectRecords>,
}

impl MultiDataset {
    /// Checks structural invariants: every subject has at least one template
    /// in every modality and per-modality dimensions are uniform.
    pub fn validate(&self) -> Result<()> {
        if self.modalities.is_empty() {
            return Err(Error::EmptyInput("dataset modalities".into()));
        }
        let mut dims = vec![None; self.modalities.len()];
        for subject in &self.subjects {
            if subject.samples.len() != self.modalities.len() {
                return Err(Error::InvalidParameter(format!(
                    "subject {} has {} modality groups, dataset has {}",
                    subject.subject_id,
                    subject.samples.len(),
                    self.modalities.len()
                )));
            }
            for (m, templates) in subject.samples.iter().enumerate() {
                if templates.is_empty() {
                    return Err(Error::InvalidParameter(format!(
                        "subject {} has no templates for modality {}",
                        subject.subject_id, self.modalities[m]
                    )));
                }
                for t in templates {
                    match dims[m] {
                        None => dims[m] = Some(t.payload.dim()),
                        Some(d) if d == t.payload.dim() => {}
                        Some(d) => {
                            return Err(Error::DimensionMismatch {
                                left: d,
                                right: t.payload.dim(),
                            })
                        }
                    }
                }
            }
        }
        Ok(())
    }

    pub fn modality_index(&self, modality: &Modality) -> Option<usize> {
        self.modalities.iter().position(|m| m == modality)
    }

    /// Dataset restricted to the given modality indices, preserving order.
    pub fn restrict(&self, modality_indices: &[usize]) -> Result<MultiDataset> {
        for &m in modality_indices {
            if m >= self.modalities.len() {
                return Err(Error::InvalidParameter(format!(
                    "modality index {m} out of range"
                )));
            }
        }
        Ok(MultiDataset {
            modalities: modality_indices
                .iter()
                .map(|&m| self.modalities[m].clone())
                .collect(),
            subjects: self
                .subjects
                .iter()
                .map(|s| SubjectRecords {
                    subject_id: s.subject_id.clone(),
                    samples: modality_indices
                        .iter()
                        .map(|&m| s.samples[m].clone())
                        .collect(),
                })
                .collect(),
        })
    }

    /// Total number of templates across subjects and modalities.
    pub fn template_count(&self) -> usize {
        self.subjects
            .iter()
            .map(|s| s.samples.iter().map(Vec::len).sum::<usize>())
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(v: &[f64]) -> VectorPayload {
        VectorPayload::Real(FeatureVector::new(v.to_vec()).unwrap())
    }

    #[test]
    fn concat_joins_in_order() {
        let out = concat(&[real(&[1.0, 2.0]), real(&[3.0])]).unwrap();
        assert_eq!(out.as_real().unwrap().elements(), &[1.0, 2.0, 3.0]);
    }

    #[test]
    fn concat_of_three_512_dim_is_1536() {
        let parts: Vec<_> = (0..3).map(|_| real(&vec![0.25; 512])).collect();
        assert_eq!(concat(&parts).unwrap().dim(), 1536);
    }

    #[test]
    fn concat_single_part_is_identity() {
        let v = real(&[4.0, 5.0]);
        assert_eq!(concat(std::slice::from_ref(&v)).unwrap(), v);
    }

    #[test]
    fn concat_rejects_kind_mismatch() {
        let b = VectorPayload::Binary(BinaryVector::new(vec![1, 0]).unwrap());
        let err = concat(&[real(&[1.0]), b]).unwrap_err();
        assert!(matches!(err, Error::KindMismatch { .. }));
    }

    #[test]
    fn concat_rejects_different_level_bounds() {
        let a = VectorPayload::Quantized(QuantizedVector::new(vec![1], 4).unwrap());
        let b = VectorPayload::Quantized(QuantizedVector::new(vec![1], 8).unwrap());
        assert!(concat(&[a, b]).is_err());
    }

    #[test]
    fn l2_normalize_three_four_five() {
        let v = FeatureVector::new(vec![3.0, 4.0]).unwrap();
        let n = l2_normalize(&v).unwrap();
        assert_eq!(n.elements(), &[0.6, 0.8]);
    }

    #[test]
    fn l2_normalize_idempotent() {
        let v = FeatureVector::new(vec![0.3, -1.2, 2.5]).unwrap();
        let once = l2_normalize(&v).unwrap();
        let twice = l2_normalize(&once).unwrap();
        for (a, b) in once.elements().iter().zip(twice.elements()) {
            assert!((a - b).abs() <= 1e-9);
        }
    }

    #[test]
    fn l2_normalize_rejects_zero_vector() {
        let v = FeatureVector::new(vec![0.0, 0.0]).unwrap();
        assert!(l2_normalize(&v).is_err());
    }

    #[test]
    fn binary_vector_rejects_non_bits() {
        assert!(BinaryVector::new(vec![0, 1, 2]).is_err());
    }

    #[test]
    fn quantized_vector_enforces_bound() {
        assert!(QuantizedVector::new(vec![4], 4).is_err());
        assert!(QuantizedVector::new(vec![3], 4).is_ok());
    }
}
