//! Experiment runner: evaluates reduction plan families over a dimension
//! grid and reports per-column mean ± std EER tables.
//!
//! For fraction plans at dimension d/k all k fraction indices are run and
//! the dispersion over indices is reported; interleaving and sum plans are
//! single runs, so their std column stays empty.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::reduce::{Fusion, Quantization, ReductionPlan, Truncation};
use crate::synth::{enumerate_comparisons, generate, SynthConfig};
use crate::vector::MultiDataset;

use super::{collect_scores, eer, Backend};

/// Truncation family evaluated over the dimension grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TruncationFamily {
    Fractions,
    Interleaving,
    Sum,
}

impl TruncationFamily {
    pub fn label(&self) -> &'static str {
        match self {
            TruncationFamily::Fractions => "fractions",
            TruncationFamily::Interleaving => "interleaving",
            TruncationFamily::Sum => "sum",
        }
    }
}

/// A truncation family plus the quantization applied before it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanFamily {
    pub family: TruncationFamily,
    pub quantization: Quantization,
}

impl PlanFamily {
    pub fn quant_label(&self) -> String {
        match &self.quantization {
            Quantization::None => "float".into(),
            Quantization::Binary { .. } => "binary".into(),
            Quantization::Levels { q, .. } => format!("int{}", q.trailing_zeros()),
        }
    }

    pub fn label(&self) -> String {
        format!("{}-{}", self.family.label(), self.quant_label())
    }

    /// Parses labels like `fractions-binary`, `interleaving-float`,
    /// `sum-int4` (intL means q = 2^L over the fixed range [-1, 1]).
    pub fn parse(label: &str) -> Result<Self> {
        let (family_str, quant_str) = label.split_once('-').ok_or_else(|| {
            Error::InvalidParameter(format!(
                "plan family '{label}' must look like fractions-binary"
            ))
        })?;
        let family = match family_str {
            "fractions" => TruncationFamily::Fractions,
            "interleaving" => TruncationFamily::Interleaving,
            "sum" => TruncationFamily::Sum,
            other => {
                return Err(Error::InvalidParameter(format!(
                    "unknown truncation family '{other}'"
                )))
            }
        };
        let quantization = match quant_str {
            "float" => Quantization::None,
            "binary" => Quantization::Binary { threshold: 0.0 },
            other => match other.strip_prefix("int") {
                Some(bits) => {
                    let l: u32 = bits.parse().map_err(|_| {
                        Error::InvalidParameter(format!("unknown quantization '{other}'"))
                    })?;
                    if l == 0 || l > 16 {
                        return Err(Error::InvalidParameter(format!(
                            "int quantization bits {l} outside [1, 16]"
                        )));
                    }
                    Quantization::Levels {
                        q: 1 << l,
                        range: (-1.0, 1.0),
                    }
                }
                None => {
                    return Err(Error::InvalidParameter(format!(
                        "unknown quantization '{other}'"
                    )))
                }
            },
        };
        Ok(PlanFamily {
            family,
            quantization,
        })
    }
}

/// How a grid value maps to dimensions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DimInterpretation {
    /// Grid value is the per-modality dimension; the fused column
    /// concatenates one reduced vector per modality (length 3d).
    PerModality,
    /// Grid value is the total fused dimension, split as evenly as possible
    /// across modalities by prefix truncation (e.g. 512 -> 171/171/170).
    TotalFused,
}

/// Full experiment description.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub synth: SynthConfig,
    pub families: Vec<PlanFamily>,
    pub grid: Vec<u32>,
    pub seeds: Vec<u64>,
    pub interpretation: DimInterpretation,
    pub backend: Backend,
}

pub const DEFAULT_GRID: [u32; 6] = [16, 32, 64, 128, 256, 512];

impl ExperimentSpec {
    pub fn validate(&self) -> Result<()> {
        self.synth.validate()?;
        if self.families.is_empty() {
            return Err(Error::EmptyInput("plan families".into()));
        }
        if self.grid.is_empty() {
            return Err(Error::EmptyInput("dimension grid".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::EmptyInput("seeds".into()));
        }
        let d = self.synth.dim;
        for &g in &self.grid {
            match self.interpretation {
                DimInterpretation::PerModality => {
                    if g == 0 || g > d || d % g != 0 {
                        return Err(Error::InvalidParameter(format!(
                            "grid dimension {g} must divide the base dimension {d}"
                        )));
                    }
                }
                DimInterpretation::TotalFused => {
                    let n = self.synth.modalities.len() as u32;
                    if g == 0 || g > d * n {
                        return Err(Error::InvalidParameter(format!(
                            "total fused dimension {g} outside [1, {}]",
                            d * n
                        )));
                    }
                }
            }
        }
        Ok(())
    }
}

/// One table cell: EER statistics over the runs at one dimension.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellStat {
    pub dim: u32,
    pub mean_eer: f64,
    /// Sample standard deviation over fraction indices; absent for
    /// single-run cells.
    pub std_eer: Option<f64>,
    pub runs: u32,
}

/// One report column (fused "all" or a single modality).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportColumn {
    pub label: String,
    pub cells: Vec<CellStat>,
}

/// Table of EER statistics for one plan family on one dataset seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportTable {
    pub family: String,
    pub quantization: String,
    pub seed: u64,
    pub grid: Vec<u32>,
    pub columns: Vec<ReportColumn>,
}

fn truncations_for(family: TruncationFamily, base_dim: u32, grid_dim: u32) -> Vec<Truncation> {
    let factor = base_dim / grid_dim;
    if factor == 1 {
        return vec![Truncation::None];
    }
    match family {
        TruncationFamily::Fractions => (1..=factor)
            .map(|i| Truncation::Fraction { k: factor, i })
            .collect(),
        TruncationFamily::Interleaving => vec![Truncation::Interleave { x: factor }],
        TruncationFamily::Sum => vec![Truncation::Sum { k: factor }],
    }
}

fn cell_from_eers(dim: u32, eers: &[f64]) -> CellStat {
    let n = eers.len();
    let mean = eers.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        let var = eers.iter().map(|e| (e - mean) * (e - mean)).sum::<f64>() / (n as f64 - 1.0);
        Some(var.sqrt())
    } else {
        None
    };
    CellStat {
        dim,
        mean_eer: mean,
        std_eer: std,
        runs: n as u32,
    }
}

/// Splits a total dimension as evenly as possible over `parts` modalities
/// (larger shares first), e.g. 512 over 3 -> [171, 171, 170].
pub fn split_total_dim(total: u32, parts: u32) -> Vec<u32> {
    let base = total / parts;
    let extra = total % parts;
    (0..parts)
        .map(|i| base + u32::from(i < extra))
        .collect()
}

fn run_cells_per_modality(
    ds: &MultiDataset,
    pairs: &crate::synth::ComparisonSet,
    family: &PlanFamily,
    base_dim: u32,
    grid: &[u32],
    backend: &Backend,
) -> Result<Vec<ReportColumn>> {
    let fused_order = ds.modalities.clone();
    let mut columns: Vec<ReportColumn> = Vec::new();
    let mut all = ReportColumn {
        label: "all".into(),
        cells: Vec::new(),
    };
    let mut singles: Vec<ReportColumn> = ds
        .modalities
        .iter()
        .map(|m| ReportColumn {
            label: m.name().into(),
            cells: Vec::new(),
        })
        .collect();
    let single_datasets: Vec<MultiDataset> = (0..ds.modalities.len())
        .map(|m| ds.restrict(&[m]))
        .collect::<Result<_>>()?;
    for &g in grid {
        let truncations = truncations_for(family.family, base_dim, g);
        let mut fused_eers = Vec::with_capacity(truncations.len());
        let mut single_eers: Vec<Vec<f64>> = vec![Vec::new(); ds.modalities.len()];
        for truncation in &truncations {
            let fused_plan = ReductionPlan {
                quantization: family.quantization.clone(),
                truncation: truncation.clone(),
                fusion: Fusion::Concat {
                    order: fused_order.clone(),
                },
            };
            let scores = collect_scores(ds, &fused_plan, pairs, backend)?;
            fused_eers.push(eer(&scores)?.eer);
            let single_plan = ReductionPlan {
                quantization: family.quantization.clone(),
                truncation: truncation.clone(),
                fusion: Fusion::None,
            };
            for (m, ds_m) in single_datasets.iter().enumerate() {
                let scores = collect_scores(ds_m, &single_plan, pairs, backend)?;
                single_eers[m].push(eer(&scores)?.eer);
            }
        }
        all.cells.push(cell_from_eers(g, &fused_eers));
        for (m, eers) in single_eers.iter().enumerate() {
            singles[m].cells.push(cell_from_eers(g, eers));
        }
    }
    columns.push(all);
    columns.extend(singles);
    Ok(columns)
}

fn run_cells_total_fused(
    ds: &MultiDataset,
    pairs: &crate::synth::ComparisonSet,
    family: &PlanFamily,
    base_dim: u32,
    grid: &[u32],
    backend: &Backend,
) -> Result<Vec<ReportColumn>> {
    if family.family != TruncationFamily::Fractions {
        return Err(Error::InvalidParameter(
            "total-dim interpretation is defined for the fractions family only".into(),
        ));
    }
    let n = ds.modalities.len() as u32;
    let mut all = ReportColumn {
        label: "all".into(),
        cells: Vec::new(),
    };
    for &g in grid {
        let lengths = split_total_dim(g, n);
        if lengths.iter().any(|&len| len == 0 || len > base_dim) {
            return Err(Error::InvalidParameter(format!(
                "total dimension {g} cannot be split over {n} modalities of dimension {base_dim}"
            )));
        }
        // prefix-truncate each modality to its share, then score the pair
        // as the sum of per-modality SEDs (identical to fused concat)
        let mut per_pair_mated = vec![0.0f64; pairs.mated.len()];
        let mut per_pair_non_mated = vec![0.0f64; pairs.non_mated.len()];
        for (m, &len) in lengths.iter().enumerate() {
            let plan = ReductionPlan {
                quantization: family.quantization.clone(),
                truncation: Truncation::Prefix { len },
                fusion: Fusion::None,
            };
            let ds_m = ds.restrict(&[m])?;
            let scores = collect_scores(&ds_m, &plan, pairs, backend)?;
            for (acc, s) in per_pair_mated.iter_mut().zip(&scores.mated) {
                *acc += s;
            }
            for (acc, s) in per_pair_non_mated.iter_mut().zip(&scores.non_mated) {
                *acc += s;
            }
        }
        let fused = super::ScoreSet::new(per_pair_mated, per_pair_non_mated);
        all.cells.push(cell_from_eers(g, &[eer(&fused)?.eer]));
    }
    Ok(vec![all])
}

/// Runs the experiment and returns one table per (family, seed).
pub fn run_experiment(spec: &ExperimentSpec) -> Result<Vec<ReportTable>> {
    spec.validate()?;
    let mut tables = Vec::with_capacity(spec.families.len() * spec.seeds.len());
    for &seed in &spec.seeds {
        let config = SynthConfig {
            seed,
            ..spec.synth.clone()
        };
        let ds = generate(&config)?;
        let pairs = enumerate_comparisons(&ds, true)?;
        for family in &spec.families {
            let columns = match spec.interpretation {
                DimInterpretation::PerModality => run_cells_per_modality(
                    &ds,
                    &pairs,
                    family,
                    config.dim,
                    &spec.grid,
                    &spec.backend,
                )?,
                DimInterpretation::TotalFused => run_cells_total_fused(
                    &ds,
                    &pairs,
                    family,
                    config.dim,
                    &spec.grid,
                    &spec.backend,
                )?,
            };
            tables.push(ReportTable {
                family: family.family.label().into(),
                quantization: family.quant_label(),
                seed,
                grid: spec.grid.clone(),
                columns,
            });
        }
    }
    Ok(tables)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_labels_round_trip() {
        for label in ["fractions-binary", "interleaving-float", "sum-int4"] {
            let family = PlanFamily::parse(label).unwrap();
            assert_eq!(family.label(), label);
        }
        assert!(PlanFamily::parse("pca-float").is_err());
        assert!(PlanFamily::parse("fractions-int0").is_err());
        assert!(PlanFamily::parse("fractions").is_err());
    }

    #[test]
    fn split_total_dim_is_even_and_complete() {
        assert_eq!(split_total_dim(512, 3), vec![171, 171, 170]);
        assert_eq!(split_total_dim(384, 3), vec![128, 128, 128]);
        assert_eq!(split_total_dim(7, 4), vec![2, 2, 2, 1]);
    }

    #[test]
    fn fraction_cells_report_std_single_runs_do_not() {
        let spec = ExperimentSpec {
            synth: SynthConfig {
                subjects: 12,
                samples_per_modality: 2,
                dim: 64,
                seed: 3,
                ..Default::default()
            },
            families: vec![
                PlanFamily::parse("fractions-float").unwrap(),
                PlanFamily::parse("interleaving-float").unwrap(),
            ],
            grid: vec![32, 64],
            seeds: vec![3],
            interpretation: DimInterpretation::PerModality,
            backend: Backend::Plaintext,
        };
        let tables = run_experiment(&spec).unwrap();
        assert_eq!(tables.len(), 2);
        let fractions = &tables[0];
        assert_eq!(fractions.columns.len(), 4);
        let all = &fractions.columns[0];
        assert_eq!(all.cells[0].runs, 2); // k = 2 fraction indices at dim 32
        assert!(all.cells[0].std_eer.is_some());
        assert_eq!(all.cells[1].runs, 1); // full dimension: single run
        assert!(all.cells[1].std_eer.is_none());
        let interleaving = &tables[1];
        assert!(interleaving.columns[0].cells[0].std_eer.is_none());
    }

    #[test]
    fn total_fused_runs_prefix_split() {
        let spec = ExperimentSpec {
            synth: SynthConfig {
                subjects: 12,
                samples_per_modality: 2,
                dim: 64,
                seed: 5,
                ..Default::default()
            },
            families: vec![PlanFamily::parse("fractions-float").unwrap()],
            grid: vec![64],
            seeds: vec![5],
            interpretation: DimInterpretation::TotalFused,
            backend: Backend::Plaintext,
        };
        let tables = run_experiment(&spec).unwrap();
        assert_eq!(tables[0].columns.len(), 1);
        assert_eq!(tables[0].columns[0].label, "all");
        assert_eq!(tables[0].columns[0].cells[0].dim, 64);
    }

    #[test]
    fn grid_must_divide_base_dimension() {
        let spec = ExperimentSpec {
            synth: SynthConfig {
                subjects: 4,
                samples_per_modality: 2,
                dim: 64,
                seed: 1,
                ..Default::default()
            },
            families: vec![PlanFamily::parse("fractions-float").unwrap()],
            grid: vec![48],
            seeds: vec![1],
            interpretation: DimInterpretation::PerModality,
            backend: Backend::Plaintext,
        };
        assert!(spec.validate().is_err());
    }
}
