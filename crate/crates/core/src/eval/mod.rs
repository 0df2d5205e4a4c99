//! Score collection, DET/EER computation, and the experiment runner.
//!
//! Scores are dissimilarities. FMR at a threshold is the fraction of
//! non-mated scores at or below it; FNMR is the fraction of mated scores
//! above it. The EER estimator interpolates linearly at the sign change of
//! FMR - FNMR, which is deterministic and order-stable.

pub mod experiment;

pub use experiment::{
    run_experiment, CellStat, DimInterpretation, ExperimentSpec, PlanFamily, ReportColumn,
    ReportTable, TruncationFamily,
};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::he;
use crate::matching::{score_fusion_sum, sed, Score};
use crate::reduce::{apply_plan, Fusion, ReductionPlan};
use crate::synth::ComparisonSet;
use crate::vector::{concat, MultiDataset, VectorPayload};

/// Labeled dissimilarity scores for one experiment run.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSet {
    pub mated: Vec<f64>,
    pub non_mated: Vec<f64>,
}

impl ScoreSet {
    pub fn new(mated: Vec<f64>, non_mated: Vec<f64>) -> Self {
        ScoreSet { mated, non_mated }
    }

    fn check_non_empty(&self) -> Result<()> {
        if self.mated.is_empty() {
            return Err(Error::EmptyInput("mated scores".into()));
        }
        if self.non_mated.is_empty() {
            return Err(Error::EmptyInput("non-mated scores".into()));
        }
        Ok(())
    }
}

/// One operating point of a DET curve.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetPoint {
    pub threshold: f64,
    pub fmr: f64,
    pub fnmr: f64,
}

/// Detection error trade-off curve over all distinct score thresholds,
/// with -inf/+inf sentinel points.
#[derive(Debug, Clone, PartialEq)]
pub struct DetCurve {
    pub points: Vec<DetPoint>,
}

/// Equal error rate and the threshold at which it is attained.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EerResult {
    /// Typically in [0, 0.5]; values above 0.5 indicate inverted polarity.
    pub eer: f64,
    pub threshold: f64,
}

/// Builds the DET curve of a score set.
pub fn det_curve(scores: &ScoreSet) -> Result<DetCurve> {
    scores.check_non_empty()?;
    let mut mated = scores.mated.clone();
    let mut non_mated = scores.non_mated.clone();
    mated.sort_by(f64::total_cmp);
    non_mated.sort_by(f64::total_cmp);

    let mut thresholds: Vec<f64> = mated.iter().chain(&non_mated).copied().collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let n_m = mated.len() as f64;
    let n_nm = non_mated.len() as f64;
    let mut points = Vec::with_capacity(thresholds.len() + 2);
    points.push(DetPoint {
        threshold: f64::NEG_INFINITY,
        fmr: 0.0,
        fnmr: 1.0,
    });
    let mut i_m = 0usize;
    let mut i_nm = 0usize;
    for t in thresholds {
        while i_m < mated.len() && mated[i_m] <= t {
            i_m += 1;
        }
        while i_nm < non_mated.len() && non_mated[i_nm] <= t {
            i_nm += 1;
        }
        points.push(DetPoint {
            threshold: t,
            fmr: i_nm as f64 / n_nm,
            fnmr: (mated.len() - i_m) as f64 / n_m,
        });
    }
    points.push(DetPoint {
        threshold: f64::INFINITY,
        fmr: 1.0,
        fnmr: 0.0,
    });
    Ok(DetCurve { points })
}

/// Equal error rate via linear interpolation at the FMR - FNMR sign change.
pub fn eer(scores: &ScoreSet) -> Result<EerResult> {
    let curve = det_curve(scores)?;
    eer_from_curve(&curve)
}

pub fn eer_from_curve(curve: &DetCurve) -> Result<EerResult> {
    let points = &curve.points;
    if points.len() < 2 {
        return Err(Error::EmptyInput("DET curve".into()));
    }
    for w in points.windows(2) {
        let (p, q) = (w[0], w[1]);
        let diff_p = p.fmr - p.fnmr;
        let diff_q = q.fmr - q.fnmr;
        if diff_p == 0.0 {
            return Ok(EerResult {
                eer: p.fmr,
                threshold: p.threshold,
            });
        }
        if diff_p < 0.0 && diff_q >= 0.0 {
            if diff_q == 0.0 {
                return Ok(EerResult {
                    eer: q.fmr,
                    threshold: q.threshold,
                });
            }
            let alpha = (p.fnmr - p.fmr) / ((q.fmr - p.fmr) - (q.fnmr - p.fnmr));
            let eer = p.fmr + alpha * (q.fmr - p.fmr);
            let threshold = if p.threshold.is_finite() {
                p.threshold + alpha * (q.threshold - p.threshold)
            } else {
                q.threshold
            };
            return Ok(EerResult { eer, threshold });
        }
    }
    // unreachable for non-empty score sets: the +inf sentinel has diff = +1
    Err(Error::InvalidParameter(
        "DET curve has no FMR/FNMR crossing".into(),
    ))
}

/// Parameters of the additively homomorphic backend used by
/// [`collect_scores`]. The evaluation harness holds the key pair and is the
/// only decrypting party.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeOptions {
    pub bits: u32,
    pub seed: u64,
}

impl Default for HeOptions {
    fn default() -> Self {
        HeOptions {
            bits: 2048,
            seed: 7,
        }
    }
}

/// Score-collection backend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Backend {
    Plaintext,
    Encrypted(HeOptions),
}

/// Reduced per-comparison payloads of one dataset: either one fused vector
/// per sample tuple or one vector per modality.
struct ReducedUnits {
    /// per subject, per usable tuple index: the payload(s) to score
    units: Vec<Vec<Vec<VectorPayload>>>,
}

fn reduce_units(
    ds: &MultiDataset,
    plan: &ReductionPlan,
    pairs: &ComparisonSet,
) -> Result<ReducedUnits> {
    let fused_order: Option<Vec<usize>> = match &plan.fusion {
        Fusion::None => None,
        Fusion::Concat { order } => {
            if order.len() != ds.modalities.len() {
                return Err(Error::InvalidParameter(format!(
                    "fusion order lists {} modalities, dataset has {}",
                    order.len(),
                    ds.modalities.len()
                )));
            }
            let mut indices = Vec::with_capacity(order.len());
            for m in order {
                let idx = ds.modality_index(m).ok_or_else(|| {
                    Error::InvalidParameter(format!("fusion order names unknown modality {m}"))
                })?;
                if indices.contains(&idx) {
                    return Err(Error::InvalidParameter(format!(
                        "fusion order repeats modality {m}"
                    )));
                }
                indices.push(idx);
            }
            Some(indices)
        }
    };
    let per_template = ReductionPlan {
        quantization: plan.quantization.clone(),
        truncation: plan.truncation.clone(),
        fusion: Fusion::None,
    };
    let max_tuple: Vec<usize> = {
        let mut m = vec![0usize; ds.subjects.len()];
        for p in &pairs.mated {
            m[p.subject] = m[p.subject].max(p.sample_b + 1).max(p.sample_a + 1);
        }
        for p in &pairs.non_mated {
            m[p.subject_a] = m[p.subject_a].max(1);
            m[p.subject_b] = m[p.subject_b].max(1);
        }
        m
    };
    let units = ds
        .subjects
        .par_iter()
        .enumerate()
        .map(|(s, subject)| -> Result<Vec<Vec<VectorPayload>>> {
            let tuples = max_tuple[s];
            let usable = subject.samples.iter().map(Vec::len).min().unwrap_or(0);
            if tuples > usable {
                return Err(Error::InvalidParameter(format!(
                    "comparison set references tuple {} of subject {}, which has {}",
                    tuples - 1,
                    subject.subject_id,
                    usable
                )));
            }
            (0..tuples)
                .map(|j| -> Result<Vec<VectorPayload>> {
                    let reduced: Vec<VectorPayload> = subject
                        .samples
                        .iter()
                        .map(|templates| {
                            apply_plan(&templates[j], &per_template).map(|t| t.payload)
                        })
                        .collect::<Result<_>>()?;
                    match &fused_order {
                        Some(indices) => {
                            let ordered: Vec<VectorPayload> =
                                indices.iter().map(|&m| reduced[m].clone()).collect();
                            Ok(vec![concat(&ordered)?])
                        }
                        None => Ok(reduced),
                    }
                })
                .collect()
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ReducedUnits { units })
}

fn plaintext_pair_score(a: &[VectorPayload], b: &[VectorPayload]) -> Result<f64> {
    let parts: Vec<Score> = a
        .iter()
        .zip(b)
        .map(|(x, y)| sed(x, y))
        .collect::<Result<_>>()?;
    Ok(score_fusion_sum(&parts)?.value)
}

/// Collects one dissimilarity score per comparison pair.
///
/// With concat fusion each pair is scored on the fused vectors; without it,
/// multi-modality datasets use sum-rule fusion of per-modality SEDs (the two
/// coincide exactly under SED). The encrypted backend requires integer-kind
/// payloads and yields scores identical to the plaintext backend.
pub fn collect_scores(
    ds: &MultiDataset,
    plan: &ReductionPlan,
    pairs: &ComparisonSet,
    backend: &Backend,
) -> Result<ScoreSet> {
    ds.validate()?;
    if pairs.mated.is_empty() && pairs.non_mated.is_empty() {
        return Err(Error::EmptyInput("comparison set".into()));
    }
    let reduced = reduce_units(ds, plan, pairs)?;
    match backend {
        Backend::Plaintext => {
            let mated = pairs
                .mated
                .par_iter()
                .map(|p| {
                    plaintext_pair_score(
                        &reduced.units[p.subject][p.sample_a],
                        &reduced.units[p.subject][p.sample_b],
                    )
                })
                .collect::<Result<Vec<_>>>()?;
            let non_mated = pairs
                .non_mated
                .par_iter()
                .map(|p| {
                    plaintext_pair_score(&reduced.units[p.subject_a][0], &reduced.units[p.subject_b][0])
                })
                .collect::<Result<Vec<_>>>()?;
            Ok(ScoreSet::new(mated, non_mated))
        }
        Backend::Encrypted(options) => {
            encrypted_scores(&reduced, pairs, options)
        }
    }
}

fn encrypted_scores(
    reduced: &ReducedUnits,
    pairs: &ComparisonSet,
    options: &HeOptions,
) -> Result<ScoreSet> {
    for subject in &reduced.units {
        for tuple in subject {
            for payload in tuple {
                if payload.integer_levels().is_none() {
                    return Err(Error::KindMismatch {
                        left: "integer (encrypted backend)".into(),
                        right: payload.kind().to_string(),
                    });
                }
            }
        }
    }
    let keys = he::keygen(options.bits, options.seed)?;
    let pk = keys.public.clone();
    // Enroll every referenced unit once; probes stay plaintext.
    let enrolled: Vec<Vec<Vec<he::EncryptedTemplate>>> = reduced
        .units
        .par_iter()
        .enumerate()
        .map(|(s, subject)| {
            subject
                .iter()
                .enumerate()
                .map(|(j, tuple)| {
                    tuple
                        .iter()
                        .enumerate()
                        .map(|(u, payload)| {
                            let mut rng = he::seeded_rng(
                                options.seed ^ 0xE4C0_11E7,
                                &[s as u64, j as u64, u as u64],
                            );
                            he::enroll_encrypted(&pk, payload, false, &mut rng)
                        })
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;

    let score_pair = |probe: &[VectorPayload],
                      gallery: &[he::EncryptedTemplate]|
     -> Result<f64> {
        let mut total = 0u64;
        for (x, enc) in probe.iter().zip(gallery) {
            let ct = he::encrypted_sed(&pk, x, enc, None)?;
            total += keys.secret.decrypt_u64(&ct)?;
        }
        Ok(total as f64)
    };
    let mated = pairs
        .mated
        .par_iter()
        .map(|p| {
            score_pair(
                &reduced.units[p.subject][p.sample_a],
                &enrolled[p.subject][p.sample_b],
            )
        })
        .collect::<Result<Vec<_>>>()?;
    let non_mated = pairs
        .non_mated
        .par_iter()
        .map(|p| score_pair(&reduced.units[p.subject_a][0], &enrolled[p.subject_b][0]))
        .collect::<Result<Vec<_>>>()?;
    Ok(ScoreSet::new(mated, non_mated))
}
