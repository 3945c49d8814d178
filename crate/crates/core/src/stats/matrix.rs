use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{cell_mode, correlation_cell, CellOutcome, PValueMode, Thresholds};
use crate::error::{Error, Result};
use crate::metrics::{Metric, MetricScore};

/// Pairwise Spearman correlations between the metrics scored for one source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorrelationMatrix {
    pub source: String,
    pub labels: Vec<Metric>,
    /// `None` where a pair had too few shared prompts or no rank variance.
    pub rho: Vec<Vec<Option<f64>>>,
    pub p: Vec<Vec<Option<f64>>>,
    pub n: Vec<Vec<usize>>,
    pub alpha: f64,
    pub tau: f64,
}

pub fn metric_matrix(
    scores: &[MetricScore],
    source: &str,
    thresholds: Thresholds,
    mode: PValueMode,
) -> Result<CorrelationMatrix> {
    let mut by_metric: BTreeMap<Metric, BTreeMap<&str, f64>> = BTreeMap::new();
    for s in scores.iter().filter(|s| s.source == source) {
        by_metric
            .entry(s.metric)
            .or_default()
            .insert(s.prompt_id.as_str(), s.value);
    }
    let labels: Vec<Metric> = Metric::ALL.into_iter().filter(|m| by_metric.contains_key(m)).collect();
    if labels.len() < 2 {
        return Err(Error::TooFewMetrics(labels.len()));
    }

    let k = labels.len();
    let mut rho = vec![vec![None; k]; k];
    let mut p = vec![vec![None; k]; k];
    let mut n = vec![vec![0; k]; k];
    for i in 0..k {
        let a = &by_metric[&labels[i]];
        rho[i][i] = Some(1.0);
        p[i][i] = Some(0.0);
        n[i][i] = a.len();
        for j in i + 1..k {
            let b = &by_metric[&labels[j]];
            let (xs, ys): (Vec<f64>, Vec<f64>) = a.iter().filter_map(|(id, &va)| b.get(id).map(|&vb| (va, vb))).unzip();
            let key = format!("perm/matrix/{source}/{}/{}", labels[i], labels[j]);
            let cell = correlation_cell(&xs, &ys, thresholds, cell_mode(mode, &key))?;
            if let CellOutcome::Computed(r) = cell {
                rho[i][j] = Some(r.rho);
                rho[j][i] = Some(r.rho);
                p[i][j] = Some(r.p_value);
                p[j][i] = Some(r.p_value);
            }
            n[i][j] = xs.len();
            n[j][i] = xs.len();
        }
    }
    Ok(CorrelationMatrix {
        source: source.to_string(),
        labels,
        rho,
        p,
        n,
        alpha: thresholds.alpha,
        tau: thresholds.tau,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    fn scores_from(columns: &[(Metric, Vec<f64>)]) -> Vec<MetricScore> {
        columns
            .iter()
            .flat_map(|(m, values)| {
                values.iter().enumerate().map(move |(i, &v)| MetricScore {
                    prompt_id: format!("p{i:04}"),
                    source: "s".into(),
                    metric: *m,
                    value: v,
                    n_questions: 1,
                })
            })
            .collect()
    }

    #[test]
    fn identical_vectors_give_one() {
        let v = vec![0.3, 0.1, 0.9, 0.5];
        let m = metric_matrix(
            &scores_from(&[(Metric::Tifa, v.clone()), (Metric::Dsg, v)]),
            "s",
            Thresholds::default(),
            PValueMode::default(),
        )
        .unwrap();
        assert_eq!(m.labels, vec![Metric::Tifa, Metric::Dsg]);
        assert_eq!(m.rho[0][1], Some(1.0));
        assert_eq!(m.rho[1][0], Some(1.0));
    }

    #[test]
    fn too_few_metrics() {
        let s = scores_from(&[(Metric::Tifa, vec![1.0, 2.0, 3.0])]);
        assert!(matches!(
            metric_matrix(&s, "s", Thresholds::default(), PValueMode::default()),
            Err(Error::TooFewMetrics(1))
        ));
        assert!(matches!(
            metric_matrix(&s, "other", Thresholds::default(), PValueMode::default()),
            Err(Error::TooFewMetrics(0))
        ));
    }

    #[test]
    fn independent_uniform_vectors() {
        let mut rng = crate::seed::rng(20_240_601);
        let columns: Vec<(Metric, Vec<f64>)> = Metric::ALL
            .into_iter()
            .map(|m| (m, (0..1000).map(|_| rng.random::<f64>()).collect()))
            .collect();
        let m = metric_matrix(
            &scores_from(&columns),
            "s",
            Thresholds::default(),
            PValueMode::default(),
        )
        .unwrap();
        assert_eq!(m.labels, Metric::ALL.to_vec());
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    let rho = m.rho[i][j].unwrap();
                    // |rho| of independent samples has sd about 1/sqrt(999) = 0.032.
                    assert!(rho.abs() < 0.1, "{i},{j}: {rho}");
                    assert_eq!(m.n[i][j], 1000);
                }
            }
        }
    }

    #[test]
    fn pairwise_deletion() {
        let mut s = scores_from(&[
            (Metric::Tifa, vec![1.0, 2.0, 3.0, 4.0]),
            (Metric::Vpeval, vec![4.0, 3.0, 2.0]),
        ]);
        s.push(MetricScore {
            prompt_id: "only-clip".into(),
            source: "s".into(),
            metric: Metric::Clipscore,
            value: 0.2,
            n_questions: 0,
        });
        let m = metric_matrix(&s, "s", Thresholds::default(), PValueMode::default()).unwrap();
        assert_eq!(m.labels, vec![Metric::Clipscore, Metric::Tifa, Metric::Vpeval]);
        assert_eq!(m.rho[1][2], Some(-1.0));
        assert_eq!(m.n[1][2], 3);
        assert_eq!(m.rho[0][1], None);
        assert_eq!(m.n[0][1], 0);
    }

    proptest! {
        #[test]
        fn symmetric_with_unit_diagonal(
            a in prop::collection::vec(0u8..6, 3..30),
            b in prop::collection::vec(0u8..6, 3..30),
            c in prop::collection::vec(-5.0f64..5.0, 3..30),
        ) {
            let s = scores_from(&[
                (Metric::Tifa, a.into_iter().map(f64::from).collect()),
                (Metric::Dsg, b.into_iter().map(f64::from).collect()),
                (Metric::Clipscore, c),
            ]);
            let m = metric_matrix(&s, "s", Thresholds::default(), PValueMode::default()).unwrap();
            for i in 0..m.labels.len() {
                prop_assert_eq!(m.rho[i][i], Some(1.0));
                for j in 0..m.labels.len() {
                    prop_assert_eq!(m.rho[i][j], m.rho[j][i]);
                    prop_assert_eq!(m.p[i][j], m.p[j][i]);
                }
            }
        }
    }
}
