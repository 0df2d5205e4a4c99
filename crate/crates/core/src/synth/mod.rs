//! Deterministic synthetic multi-biometric dataset generation, noise
//! calibration, and comparison-pair enumeration.
//!
//! Every random draw comes from a ChaCha12 stream keyed by
//! (master seed, subject, modality, sample, role), so generation is
//! byte-identical for a fixed config across runs and platforms, and safe
//! to parallelize across subjects.

pub mod normal;

use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::vector::{
    l2_normalize, FeatureVector, Modality, MultiDataset, SubjectRecords, Template, VectorPayload,
};
use normal::standard_normal;

/// Per-modality noise parameters. The effective sample noise is
/// `sigma + degradation`; the degradation knob models deliberately lowered
/// sample quality for one modality without touching its calibrated sigma.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModalityNoise {
    pub modality: Modality,
    pub sigma: f64,
    #[serde(default)]
    pub degradation: f64,
}

/// Configuration of the synthetic generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthConfig {
    pub subjects: u32,
    pub samples_per_modality: u32,
    pub dim: u32,
    pub modalities: Vec<ModalityNoise>,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            subjects: 200,
            samples_per_modality: 4,
            dim: 512,
            modalities: vec![
                ModalityNoise {
                    modality: Modality::face(),
                    sigma: 0.050,
                    degradation: 0.0,
                },
                ModalityNoise {
                    modality: Modality::fingerprint(),
                    sigma: 0.045,
                    degradation: 0.0,
                },
                ModalityNoise {
                    modality: Modality::iris(),
                    sigma: 0.048,
                    degradation: 0.0,
                },
            ],
            seed: 1,
        }
    }
}

impl SynthConfig {
    /// Validates generator parameters. Sigma zero is accepted as the
    /// degenerate no-noise mode (all samples of a subject identical).
    pub fn validate(&self) -> Result<()> {
        if self.subjects < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 subjects, got {}",
                self.subjects
            )));
        }
        if self.samples_per_modality < 2 {
            return Err(Error::InvalidParameter(format!(
                "need at least 2 samples per modality, got {}",
                self.samples_per_modality
            )));
        }
        if self.dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        if self.modalities.is_empty() {
            return Err(Error::EmptyInput("modalities".into()));
        }
        if self.modalities.len() > 255 {
            return Err(Error::InvalidParameter(
                "at most 255 modalities supported".into(),
            ));
        }
        for (i, m) in self.modalities.iter().enumerate() {
            if !(m.sigma >= 0.0) || !(m.degradation >= 0.0) {
                return Err(Error::InvalidParameter(format!(
                    "noise parameters for {} must be non-negative",
                    m.modality
                )));
            }
            if self.modalities[..i].iter().any(|o| o.modality == m.modality) {
                return Err(Error::InvalidParameter(format!(
                    "duplicate modality {}",
                    m.modality
                )));
            }
        }
        Ok(())
    }

    pub fn modality_order(&self) -> Vec<Modality> {
        self.modalities.iter().map(|m| m.modality.clone()).collect()
    }
}

const STREAM_TAG: &[u8; 14] = b"biotrunc-synth";
const ROLE_CLASS_MEAN: u8 = 0;
const ROLE_SAMPLE: u8 = 1;

/// 32-byte ChaCha12 key for one (subject, modality, sample, role) stream.
fn stream_seed(master: u64, subject: u32, modality: u8, sample: u32, role: u8) -> [u8; 32] {
    let mut seed = [0u8; 32];
    seed[0..8].copy_from_slice(&master.to_le_bytes());
    seed[8..12].copy_from_slice(&subject.to_le_bytes());
    seed[12] = modality;
    seed[13..17].copy_from_slice(&sample.to_le_bytes());
    seed[17] = role;
    seed[18..32].copy_from_slice(STREAM_TAG);
    seed
}

fn normal_vector(seed: [u8; 32], dim: usize) -> Vec<f64> {
    let mut rng = ChaCha12Rng::from_seed(seed);
    (0..dim).map(|_| standard_normal(&mut rng)).collect()
}

fn subject_id(index: u32) -> String {
    format!("subj-{index:05}")
}

/// Generates the synthetic dataset described by `config`.
///
/// Per subject and modality a unit-norm class mean is drawn from an
/// isotropic standard normal; each sample is the re-normalized class mean
/// plus isotropic noise scaled by `sigma + degradation`.
pub fn generate(config: &SynthConfig) -> Result<MultiDataset> {
    config.validate()?;
    let dim = config.dim as usize;
    let subjects: Vec<SubjectRecords> = (0..config.subjects)
        .into_par_iter()
        .map(|s| -> Result<SubjectRecords> {
            let mut samples = Vec::with_capacity(config.modalities.len());
            for (m_idx, noise) in config.modalities.iter().enumerate() {
                let scale = noise.sigma + noise.degradation;
                let mean_raw = normal_vector(
                    stream_seed(config.seed, s, m_idx as u8, 0, ROLE_CLASS_MEAN),
                    dim,
                );
                let mean = l2_normalize(&FeatureVector::new(mean_raw)?)?;
                let mut templates = Vec::with_capacity(config.samples_per_modality as usize);
                for j in 0..config.samples_per_modality {
                    let eps = normal_vector(
                        stream_seed(config.seed, s, m_idx as u8, j, ROLE_SAMPLE),
                        dim,
                    );
                    let raw: Vec<f64> = mean
                        .elements()
                        .iter()
                        .zip(&eps)
                        .map(|(mu, e)| mu + scale * e)
                        .collect();
                    let sample = l2_normalize(&FeatureVector::new(raw)?)?;
                    templates.push(Template::raw(
                        VectorPayload::Real(sample),
                        subject_id(s),
                        j,
                    ));
                }
                samples.push(templates);
            }
            Ok(SubjectRecords {
                subject_id: subject_id(s),
                samples,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ds = MultiDataset {
        modalities: config.modality_order(),
        subjects,
    };
    ds.validate()?;
    Ok(ds)
}

/// Mated comparison between two sample tuples of one subject.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MatedPair {
    pub subject: usize,
    pub sample_a: usize,
    pub sample_b: usize,
}

/// Non-mated comparison between the first tuples of two subjects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct NonMatedPair {
    pub subject_a: usize,
    pub subject_b: usize,
}

/// Enumerated comparison protocol over a dataset.
#[derive(Debug, Clone)]
pub struct ComparisonSet {
    pub mated: Vec<MatedPair>,
    pub non_mated: Vec<NonMatedPair>,
    /// True when no non-mated comparison exists (fewer than two subjects).
    pub degenerate: bool,
}

impl ComparisonSet {
    pub fn counts(&self) -> (usize, usize) {
        (self.mated.len(), self.non_mated.len())
    }
}

/// Enumerates mated and non-mated comparisons.
///
/// Each subject contributes multi-modal sample tuples; with
/// `limit_by_scarcest` the tuple count is the minimum template count over
/// modalities, otherwise all modalities must hold equally many templates.
/// Mated pairs are all within-subject tuple pairs; non-mated pairs are all
/// cross-subject pairs of first tuples.
pub fn enumerate_comparisons(ds: &MultiDataset, limit_by_scarcest: bool) -> Result<ComparisonSet> {
    ds.validate()?;
    let mut tuples_per_subject = Vec::with_capacity(ds.subjects.len());
    for subject in &ds.subjects {
        let counts: Vec<usize> = subject.samples.iter().map(Vec::len).collect();
        let tuples = if limit_by_scarcest {
            *counts.iter().min().expect("validated non-empty")
        } else {
            let first = counts[0];
            if counts.iter().any(|&c| c != first) {
                return Err(Error::InvalidParameter(format!(
                    "subject {} has unequal per-modality sample counts {counts:?}",
                    subject.subject_id
                )));
            }
            first
        };
        if tuples == 0 {
            return Err(Error::InvalidParameter(format!(
                "subject {} has no usable sample tuples",
                subject.subject_id
            )));
        }
        tuples_per_subject.push(tuples);
    }
    let mut mated = Vec::new();
    for (s, &tuples) in tuples_per_subject.iter().enumerate() {
        for a in 0..tuples {
            for b in (a + 1)..tuples {
                mated.push(MatedPair {
                    subject: s,
                    sample_a: a,
                    sample_b: b,
                });
            }
        }
    }
    let n = ds.subjects.len();
    let mut non_mated = Vec::with_capacity(n * (n.saturating_sub(1)) / 2);
    for a in 0..n {
        for b in (a + 1)..n {
            non_mated.push(NonMatedPair {
                subject_a: a,
                subject_b: b,
            });
        }
    }
    Ok(ComparisonSet {
        degenerate: non_mated.is_empty(),
        mated,
        non_mated,
    })
}

/// Result of a noise calibration run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CalibrationOutcome {
    /// Calibrated sigma per modality, aligned with the config order.
    pub sigmas: Vec<f64>,
    /// Held-out full-dimension EER achieved with each calibrated sigma.
    pub achieved_eer: Vec<f64>,
}

fn single_modality_eer(base: &SynthConfig, modality_idx: usize, sigma: f64, seed: u64) -> Result<f64> {
    let noise = &base.modalities[modality_idx];
    let config = SynthConfig {
        modalities: vec![ModalityNoise {
            modality: noise.modality.clone(),
            sigma,
            degradation: noise.degradation,
        }],
        seed,
        ..base.clone()
    };
    let ds = generate(&config)?;
    let pairs = enumerate_comparisons(&ds, true)?;
    let scores = crate::eval::collect_scores(
        &ds,
        &crate::reduce::ReductionPlan::identity(),
        &pairs,
        &crate::eval::Backend::Plaintext,
    )?;
    Ok(crate::eval::eer(&scores)?.eer)
}

const SEARCH_SIGMA_LO: f64 = 1e-3;
const SEARCH_SIGMA_HI: f64 = 1.0;
const MAX_BISECTION_STEPS: usize = 32;

/// Bisection search for per-modality sigma such that the single-modality
/// full-dimension float EER lands in `[lo, hi]` on a held-out dataset.
///
/// EER is monotone in sigma on average, so plain bisection on a search
/// dataset converges; each candidate inside the band is confirmed on a
/// held-out seed before being accepted.
pub fn calibrate(target: (f64, f64), base: &SynthConfig) -> Result<CalibrationOutcome> {
    let (lo, hi) = target;
    if !(0.0 < lo && lo < hi && hi < 0.5) {
        return Err(Error::InvalidParameter(format!(
            "calibration target must satisfy 0 < lo < hi < 0.5, got [{lo}, {hi}]"
        )));
    }
    base.validate()?;
    let search_seed = base.seed ^ 0x5EA2_C41B;
    let heldout_seed = base.seed.wrapping_add(0x9E37_79B9);
    let mut sigmas = Vec::with_capacity(base.modalities.len());
    let mut achieved = Vec::with_capacity(base.modalities.len());
    for m in 0..base.modalities.len() {
        let mut lo_sigma = SEARCH_SIGMA_LO;
        let mut hi_sigma = SEARCH_SIGMA_HI;
        let mut found = None;
        let mut last = (lo_sigma, f64::NAN);
        for _ in 0..MAX_BISECTION_STEPS {
            let mid = 0.5 * (lo_sigma + hi_sigma);
            let e = single_modality_eer(base, m, mid, search_seed)?;
            last = (mid, e);
            if e < lo {
                lo_sigma = mid;
            } else if e > hi {
                hi_sigma = mid;
            } else {
                let held = single_modality_eer(base, m, mid, heldout_seed)?;
                last = (mid, held);
                if held >= lo && held <= hi {
                    found = Some((mid, held));
                    break;
                } else if held < lo {
                    lo_sigma = mid;
                } else {
                    hi_sigma = mid;
                }
            }
        }
        match found {
            Some((sigma, eer)) => {
                sigmas.push(sigma);
                achieved.push(eer);
            }
            None => {
                return Err(Error::CalibrationFailed(format!(
                    "modality {}: target [{lo}, {hi}] not reached; bracket sigma in [{lo_sigma}, {hi_sigma}], last sigma {} gave EER {}",
                    base.modalities[m].modality, last.0, last.1
                )));
            }
        }
    }
    Ok(CalibrationOutcome {
        sigmas,
        achieved_eer: achieved,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config(seed: u64) -> SynthConfig {
        SynthConfig {
            subjects: 10,
            samples_per_modality: 2,
            dim: 32,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn same_seed_gives_identical_datasets() {
        let a = generate(&small_config(7)).unwrap();
        let b = generate(&small_config(7)).unwrap();
        for (sa, sb) in a.subjects.iter().zip(&b.subjects) {
            assert_eq!(sa.subject_id, sb.subject_id);
            for (ma, mb) in sa.samples.iter().zip(&sb.samples) {
                for (ta, tb) in ma.iter().zip(mb) {
                    assert_eq!(ta.payload, tb.payload);
                }
            }
        }
    }

    #[test]
    fn different_seed_gives_different_data() {
        let a = generate(&small_config(7)).unwrap();
        let b = generate(&small_config(8)).unwrap();
        assert_ne!(
            a.subjects[0].samples[0][0].payload,
            b.subjects[0].samples[0][0].payload
        );
    }

    #[test]
    fn template_count_matches_config() {
        let ds = generate(&small_config(3)).unwrap();
        // 10 subjects x 2 samples x 3 modalities
        assert_eq!(ds.template_count(), 60);
    }

    #[test]
    fn zero_noise_duplicates_subject_samples() {
        let mut config = small_config(5);
        for m in &mut config.modalities {
            m.sigma = 0.0;
            m.degradation = 0.0;
        }
        let ds = generate(&config).unwrap();
        for subject in &ds.subjects {
            for templates in &subject.samples {
                for t in &templates[1..] {
                    assert_eq!(t.payload, templates[0].payload);
                }
            }
        }
    }

    #[test]
    fn generated_vectors_are_unit_norm_and_centered() {
        let config = SynthConfig {
            subjects: 4,
            samples_per_modality: 2,
            dim: 512,
            seed: 11,
            ..Default::default()
        };
        let ds = generate(&config).unwrap();
        // empirical mean of a unit-norm 512-dim sample concentrates near 0
        // with std about 1/dim; 8/dim is an 8-sigma bound
        let tol = 8.0 / 512.0;
        for subject in &ds.subjects {
            for templates in &subject.samples {
                for t in templates {
                    let v = t.payload.as_real().unwrap();
                    assert!((v.norm() - 1.0).abs() <= 1e-9);
                    assert!(v.mean_centered_within(tol));
                }
            }
        }
    }

    #[test]
    fn config_validation_rejects_bad_inputs() {
        let mut c = small_config(1);
        c.subjects = 1;
        assert!(c.validate().is_err());
        let mut c = small_config(1);
        c.samples_per_modality = 1;
        assert!(c.validate().is_err());
        let mut c = small_config(1);
        c.modalities[0].sigma = -0.1;
        assert!(c.validate().is_err());
        let mut c = small_config(1);
        c.modalities[1].modality = c.modalities[0].modality.clone();
        assert!(c.validate().is_err());
    }

    #[test]
    fn enumeration_counts_follow_protocol() {
        let ds = generate(&small_config(2)).unwrap();
        let pairs = enumerate_comparisons(&ds, true).unwrap();
        // 10 subjects x C(2,2)=1 mated each; C(10,2)=45 non-mated
        assert_eq!(pairs.counts(), (10, 45));
        assert!(!pairs.degenerate);
    }

    #[test]
    fn enumeration_limits_by_scarcest_modality() {
        let mut ds = generate(&small_config(2)).unwrap();
        // drop one fingerprint sample from subject 0: tuples = min(2, 1, 2) = 1
        ds.subjects[0].samples[1].pop();
        let pairs = enumerate_comparisons(&ds, true).unwrap();
        assert_eq!(pairs.counts(), (9, 45));
        // strict mode rejects the unequal counts
        assert!(enumerate_comparisons(&ds, false).is_err());
    }

    #[test]
    fn single_subject_is_degenerate() {
        let mut ds = generate(&small_config(2)).unwrap();
        ds.subjects.truncate(1);
        let pairs = enumerate_comparisons(&ds, true).unwrap();
        assert_eq!(pairs.non_mated.len(), 0);
        assert!(pairs.degenerate);
    }

    #[test]
    fn calibrate_rejects_bad_target() {
        let base = small_config(1);
        assert!(calibrate((0.2, 0.1), &base).is_err());
        assert!(calibrate((0.0, 0.1), &base).is_err());
        assert!(calibrate((0.1, 0.6), &base).is_err());
    }
}
