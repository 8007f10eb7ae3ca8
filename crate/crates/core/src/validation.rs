//! Cross-validation of frozen models on held-out scenarios and the
//! drift-reduction statistics.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::ingest::dataset_tag;
use crate::regression::evaluate;
use crate::scalar::{convert, Scalar};
use crate::types::{ExpansionModel, ScenarioDataset};

/// Drift and residual statistics of one scenario (or the pooled samples).
///
/// Reductions are `100·(1 − residual/drift)`; they are reported as null
/// when the drift denominator is zero rather than flattered to 100 %.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ScenarioValidation<T> {
    pub tag: String,
    pub n_samples: usize,
    pub max_drift_um: T,
    pub max_residual_um: T,
    pub mean_abs_drift_um: T,
    pub mean_abs_residual_um: T,
    pub reduction_max_pct: Option<T>,
    pub reduction_mean_pct: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ValidationReport<T> {
    pub scenarios: Vec<ScenarioValidation<T>>,
    /// Statistics over the union of all valid samples.
    pub pooled: ScenarioValidation<T>,
}

fn reduction<T: Scalar>(drift: T, residual: T) -> Option<T> {
    (drift > T::zero()).then(|| convert::<T>(100.0) * (T::one() - residual / drift))
}

fn stats<T: Scalar>(
    tag: String,
    drift: impl Iterator<Item = T>,
    residuals: &[T],
) -> ScenarioValidation<T> {
    let mut max_drift = T::zero();
    let mut sum_drift = T::zero();
    let mut count = 0usize;
    for d in drift {
        let a = d.abs();
        max_drift = max_drift.max(a);
        sum_drift += a;
        count += 1;
    }
    let n = convert::<T>(count as f64);
    let mean_drift = sum_drift / n;
    let max_residual = residuals.iter().fold(T::zero(), |acc, r| acc.max(r.abs()));
    let mean_residual = residuals.iter().fold(T::zero(), |acc, &r| acc + r.abs()) / n;
    ScenarioValidation {
        tag,
        n_samples: count,
        max_drift_um: max_drift,
        max_residual_um: max_residual,
        mean_abs_drift_um: mean_drift,
        mean_abs_residual_um: mean_residual,
        reduction_max_pct: reduction(max_drift, max_residual),
        reduction_mean_pct: reduction(mean_drift, mean_residual),
    }
}

/// Evaluates a frozen model on held-out scenarios.
///
/// Every dataset's content tag must be absent from `training_tags`;
/// a match is a leakage error. Coefficients are never refit, so two
/// consecutive calls yield identical reports.
pub fn cross_validate<T: Scalar>(
    model: &ExpansionModel<T>,
    training_tags: &[String],
    scenarios: &[ScenarioDataset<T>],
) -> Result<ValidationReport<T>> {
    if scenarios.is_empty() {
        return Err(Error::InvalidInput("no validation scenarios supplied".into()));
    }

    let mut per_scenario = Vec::with_capacity(scenarios.len());
    let mut pooled_drift: Vec<T> = Vec::new();
    let mut pooled_residuals: Vec<T> = Vec::new();
    for dataset in scenarios {
        let tag = dataset_tag(dataset);
        if training_tags.contains(&tag) {
            return Err(Error::Leakage { tag });
        }
        let report = evaluate(model, dataset)?;
        let drift: Vec<T> = dataset
            .valid_indices()
            .map(|k| dataset.dq_measured()[k])
            .collect();
        per_scenario.push(stats(tag, drift.iter().copied(), report.residuals()));
        pooled_drift.extend_from_slice(&drift);
        pooled_residuals.extend_from_slice(report.residuals());
    }

    let pooled = stats("pooled".into(), pooled_drift.into_iter(), &pooled_residuals);
    Ok(ValidationReport { scenarios: per_scenario, pooled })
}

/// Plot-ready trace of one scenario:
/// `time_s,measured_um,predicted_um,residual_um,valid`.
pub fn trace_csv<T: Scalar>(
    model: &ExpansionModel<T>,
    dataset: &ScenarioDataset<T>,
) -> Result<String> {
    let mut out = String::from("time_s,measured_um,predicted_um,residual_um,valid\n");
    let mut row = Vec::with_capacity(dataset.n_sensors());
    for k in 0..dataset.n_samples() {
        dataset.delta_t_row_into(k, &mut row);
        let predicted = model.predict(dataset.q()[k], &row)?;
        let measured = dataset.dq_measured()[k];
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            dataset.time()[k],
            measured,
            predicted,
            measured - predicted,
            u8::from(dataset.valid()[k]),
        ));
    }
    Ok(out)
}
