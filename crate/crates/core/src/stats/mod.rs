//! Spearman rank correlation, significance, and correlation tables.

mod matrix;
pub mod special;

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricScore};
use crate::seed;

pub use matrix::{metric_matrix, CorrelationMatrix};

pub const DEFAULT_ALPHA: f64 = 0.05;
pub const DEFAULT_TAU: f64 = 0.4;
/// Permutation p-values are only used below this sample size.
pub const EXACT_P_MAX_N: usize = 30;
/// Up to this size every permutation is enumerated.
pub const EXHAUSTIVE_MAX_N: usize = 8;
pub const DEFAULT_RESAMPLES: usize = 20_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    pub alpha: f64,
    pub tau: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds {
            alpha: DEFAULT_ALPHA,
            tau: DEFAULT_TAU,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Strength {
    Weak,
    ModerateStrong,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PValueMethod {
    TApproximation,
    Permutation,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CorrelationResult {
    pub rho: f64,
    pub n: usize,
    pub p_value: f64,
    pub significant: bool,
    pub strength: Strength,
    pub alpha: f64,
    pub tau: f64,
    pub p_method: PValueMethod,
}

impl CorrelationResult {
    fn classify(rho: f64, n: usize, p_value: f64, p_method: PValueMethod, th: Thresholds) -> Self {
        CorrelationResult {
            rho,
            n,
            p_value,
            significant: p_value < th.alpha,
            strength: if rho.abs() >= th.tau {
                Strength::ModerateStrong
            } else {
                Strength::Weak
            },
            alpha: th.alpha,
            tau: th.tau,
            p_method,
        }
    }

    /// Significant and at least moderate: the cells a table renders in bold.
    pub fn is_strong(&self) -> bool {
        self.significant && self.strength == Strength::ModerateStrong
    }
}

/// How the p-value of a correlation is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PValueMode {
    #[default]
    TApproximation,
    /// Permutation test for n below [`EXACT_P_MAX_N`], seeded; t otherwise.
    Permutation { seed: u64, resamples: usize },
}

/// 1-based ranks with ties given the mean of the positions they span.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        // Positions start+1 ..= end share their mean.
        let rank = (start + 1 + end) as f64 / 2.0;
        for &i in &order[start..end] {
            ranks[i] = rank;
        }
        start = end;
    }
    ranks
}

/// Ranks centred on their mean, which is (n + 1) / 2 regardless of ties.
fn centred_ranks(values: &[f64]) -> Vec<f64> {
    let mean = (values.len() + 1) as f64 / 2.0;
    average_ranks(values).into_iter().map(|r| r - mean).collect()
}

fn check_inputs(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 3 {
        return Err(Error::InsufficientN {
            required: 3,
            actual: x.len(),
        });
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(Error::NonFiniteInput);
    }
    Ok(())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(p, q)| p * q).sum()
}

struct RankPair {
    rx: Vec<f64>,
    ry: Vec<f64>,
    norm: f64,
}

impl RankPair {
    fn new(x: &[f64], y: &[f64]) -> Result<Self> {
        check_inputs(x, y)?;
        let rx = centred_ranks(x);
        let ry = centred_ranks(y);
        let sxx = dot(&rx, &rx);
        let syy = dot(&ry, &ry);
        if sxx == 0.0 || syy == 0.0 {
            return Err(Error::ConstantInput);
        }
        Ok(RankPair {
            rx,
            ry,
            norm: (sxx * syy).sqrt(),
        })
    }

    fn rho_with(&self, ry: &[f64]) -> f64 {
        (dot(&self.rx, ry) / self.norm).clamp(-1.0, 1.0)
    }
}

/// Spearman's rho alone.
pub fn spearman_rho(x: &[f64], y: &[f64]) -> Result<f64> {
    let pair = RankPair::new(x, y)?;
    Ok(pair.rho_with(&pair.ry))
}

/// Two-tailed p-value of rho under the t approximation with n - 2 df.
pub fn t_approx_p_value(rho: f64, n: usize) -> f64 {
    if rho.abs() >= 1.0 {
        return 0.0;
    }
    let df = (n - 2) as f64;
    // df / (df + t^2) simplifies to 1 - rho^2.
    special::regularized_incomplete_beta(df / 2.0, 0.5, 1.0 - rho * rho).clamp(0.0, 1.0)
}

/// Two-sided permutation p-value of rho.
pub fn permutation_p_value(x: &[f64], y: &[f64], seed: u64, resamples: usize) -> Result<f64> {
    let pair = RankPair::new(x, y)?;
    let observed = pair.rho_with(&pair.ry).abs();
    // Guards against counting an equal statistic as smaller through rounding.
    let bar = observed - 1e-12;
    let n = x.len();
    let mut ry = pair.ry.clone();
    if n <= EXHAUSTIVE_MAX_N {
        let (mut hits, mut total) = (0u64, 0u64);
        for_each_permutation(&mut ry, &mut |perm| {
            total += 1;
            if pair.rho_with(perm).abs() >= bar {
                hits += 1;
            }
        });
        return Ok(hits as f64 / total as f64);
    }
    let mut rng = seed::rng(seed);
    let resamples = resamples.max(1);
    let mut hits = 0usize;
    for _ in 0..resamples {
        ry.shuffle(&mut rng);
        if pair.rho_with(&ry).abs() >= bar {
            hits += 1;
        }
    }
    Ok((hits + 1) as f64 / (resamples + 1) as f64)
}

/// Heap's algorithm.
fn for_each_permutation(items: &mut [f64], visit: &mut impl FnMut(&[f64])) {
    let n = items.len();
    let mut c = vec![0usize; n];
    visit(items);
    let mut i = 0;
    while i < n {
        if c[i] < i {
            if i % 2 == 0 {
                items.swap(0, i);
            } else {
                items.swap(c[i], i);
            }
            visit(items);
            c[i] += 1;
            i = 0;
        } else {
            c[i] = 0;
            i += 1;
        }
    }
}

/// Spearman correlation with default thresholds and the t approximation.
pub fn spearman(x: &[f64], y: &[f64]) -> Result<CorrelationResult> {
    spearman_with(x, y, Thresholds::default(), PValueMode::TApproximation)
}

pub fn spearman_with(x: &[f64], y: &[f64], thresholds: Thresholds, mode: PValueMode) -> Result<CorrelationResult> {
    let rho = spearman_rho(x, y)?;
    let n = x.len();
    let (p, method) = match mode {
        PValueMode::Permutation { seed, resamples } if n < EXACT_P_MAX_N => {
            (permutation_p_value(x, y, seed, resamples)?, PValueMethod::Permutation)
        }
        _ => (t_approx_p_value(rho, n), PValueMethod::TApproximation),
    };
    Ok(CorrelationResult::classify(rho, n, p, method, thresholds))
}

/// Outcome of one table cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum CellOutcome {
    Computed(CorrelationResult),
    InsufficientN,
    ConstantInput,
}

impl CellOutcome {
    pub fn result(&self) -> Option<&CorrelationResult> {
        match self {
            CellOutcome::Computed(r) => Some(r),
            _ => None,
        }
    }

    pub fn status(&self) -> &'static str {
        match self {
            CellOutcome::Computed(_) => "computed",
            CellOutcome::InsufficientN => "insufficient_n",
            CellOutcome::ConstantInput => "constant_input",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationCell {
    pub source: String,
    pub metric: Metric,
    pub property: String,
    /// Pairs that entered the correlation.
    pub n: usize,
    /// Scores whose prompt had no value for the property.
    pub dropped: usize,
    pub outcome: CellOutcome,
}

/// Fills one cell from paired observations, mapping precondition failures to
/// cell statuses.
pub fn correlation_cell(x: &[f64], y: &[f64], thresholds: Thresholds, mode: PValueMode) -> Result<CellOutcome> {
    match spearman_with(x, y, thresholds, mode) {
        Ok(r) => Ok(CellOutcome::Computed(r)),
        Err(Error::InsufficientN { .. }) => Ok(CellOutcome::InsufficientN),
        Err(Error::ConstantInput) => Ok(CellOutcome::ConstantInput),
        Err(e) => Err(e),
    }
}

/// Per-cell permutation seed so cells are independent of evaluation order.
pub fn cell_mode(mode: PValueMode, key: &str) -> PValueMode {
    match mode {
        PValueMode::Permutation { seed, resamples } => PValueMode::Permutation {
            seed: seed::derive_seed(seed, key),
            resamples,
        },
        other => other,
    }
}

/// Correlates one per-prompt property against scores in every (source, metric)
/// group. Scores without a property value are dropped pairwise.
pub fn correlate_profiles(
    scores: &[MetricScore],
    profile: &BTreeMap<String, f64>,
    property: &str,
    thresholds: Thresholds,
    mode: PValueMode,
) -> Result<Vec<CorrelationCell>> {
    let mut groups: BTreeMap<(&str, Metric), Vec<&MetricScore>> = BTreeMap::new();
    for s in scores {
        groups.entry((s.source.as_str(), s.metric)).or_default().push(s);
    }
    let mut cells = Vec::with_capacity(groups.len());
    for ((source, metric), mut group) in groups {
        group.sort_by(|a, b| a.prompt_id.cmp(&b.prompt_id));
        let (xs, ys): (Vec<f64>, Vec<f64>) = group
            .iter()
            .filter_map(|s| profile.get(&s.prompt_id).map(|&p| (p, s.value)))
            .unzip();
        let key = format!("perm/{source}/{metric}/{property}");
        cells.push(CorrelationCell {
            source: source.to_string(),
            metric,
            property: property.to_string(),
            n: xs.len(),
            dropped: group.len() - xs.len(),
            outcome: correlation_cell(&xs, &ys, thresholds, cell_mode(mode, &key))?,
        });
    }
    Ok(cells)
}

/// A correlation cell tagged with the dataset its prompts came from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetCell {
    pub dataset: String,
    #[serde(flatten)]
    pub cell: CorrelationCell,
}

/// Runs [`correlate_profiles`] separately on the prompts of each dataset.
pub fn correlate_by_dataset(
    scores: &[MetricScore],
    dataset_of: &BTreeMap<String, String>,
    profile: &BTreeMap<String, f64>,
    property: &str,
    thresholds: Thresholds,
    mode: PValueMode,
) -> Result<Vec<DatasetCell>> {
    let mut split: BTreeMap<&str, Vec<MetricScore>> = BTreeMap::new();
    for s in scores {
        let ds = dataset_of.get(&s.prompt_id).map_or("", String::as_str);
        split.entry(ds).or_default().push(s.clone());
    }
    let mut out = Vec::new();
    for (ds, subset) in split {
        for cell in correlate_profiles(&subset, profile, property, thresholds, mode)? {
            out.push(DatasetCell {
                dataset: ds.to_string(),
                cell,
            });
        }
    }
    Ok(out)
}
