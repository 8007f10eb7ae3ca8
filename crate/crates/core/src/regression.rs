//! Coefficient identification for one sensor configuration by linear least
//! squares, with a single MAD-threshold outlier pass.

use crate::error::{Error, Result};
use crate::linalg::{solve_lstsq, DesignMatrix};
use crate::scalar::{convert, Scalar};
use crate::types::{
    ExpansionModel, FitReport, ScenarioDataset, SensorConfig, SensorCoeffs,
};

/// Condition-estimate threshold above which a design is rejected as
/// degenerate.
pub const CONDITION_THRESHOLD: f64 = 1e12;

/// Outlier removal policy: after a first fit, samples with
/// `|residual| > c·σ` are discarded (σ is the MAD-based robust scale) and
/// the model is refit once. `c ≤ 0` disables removal.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OutlierPolicy<T> {
    pub c: T,
}

impl<T: Scalar> Default for OutlierPolicy<T> {
    fn default() -> Self {
        Self { c: convert(5.0) }
    }
}

impl<T: Scalar> OutlierPolicy<T> {
    pub fn disabled() -> Self {
        Self { c: T::zero() }
    }

    pub fn is_enabled(&self) -> bool {
        self.c > T::zero()
    }
}

/// Labels of the design columns in order, e.g. `["q0*dT7", "q*dT7"]`.
pub fn column_labels(config: &SensorConfig) -> Vec<String> {
    config
        .sensors()
        .iter()
        .flat_map(|id| [format!("q0*dT{id}"), format!("q*dT{id}")])
        .collect()
}

/// Builds the design matrix over the valid samples of `dataset`.
///
/// Column order is fixed as `[q0·ΔT_i, q·ΔT_i, q0·ΔT_j, q·ΔT_j]`; the
/// response is the measured expansion in µm.
pub fn build_design<T: Scalar>(
    dataset: &ScenarioDataset<T>,
    config: &SensorConfig,
) -> Result<(DesignMatrix<T>, Vec<T>)> {
    let config = config.canonicalized()?;
    let sensors = config.sensors();
    let cols = 2 * sensors.len();
    let mut columns = Vec::with_capacity(sensors.len());
    for id in &sensors {
        columns.push(dataset.delta_t(*id)?);
    }

    let q0 = dataset.q0();
    let q = dataset.q();
    let dq = dataset.dq_measured();
    let mut rows = Vec::with_capacity(dataset.n_valid());
    let mut y = Vec::with_capacity(dataset.n_valid());
    for k in dataset.valid_indices() {
        let mut row = Vec::with_capacity(cols);
        for col in &columns {
            let dt = col[k];
            row.push(q0 * dt);
            row.push(q[k] * dt);
        }
        rows.push(row);
        y.push(dq[k]);
    }

    if rows.len() < cols {
        return Err(Error::InsufficientData { rows: rows.len(), cols });
    }
    Ok((DesignMatrix::from_rows(rows), y))
}

/// Fits `config` on `dataset`, returning the identified model and the
/// residual report of the final (outlier-cleaned) fit.
pub fn fit<T: Scalar>(
    dataset: &ScenarioDataset<T>,
    config: &SensorConfig,
    policy: &OutlierPolicy<T>,
) -> Result<(ExpansionModel<T>, FitReport<T>)> {
    let config = config.canonicalized()?;
    let (x, y) = build_design(dataset, &config)?;
    let threshold = convert::<T>(CONDITION_THRESHOLD);

    let solve = |x: &DesignMatrix<T>, y: &[T]| {
        solve_lstsq(x, y, threshold).map_err(|deficiency| {
            let labels = column_labels(&config);
            Error::DegenerateData {
                columns: deficiency.columns.iter().map(|&c| labels[c].clone()).collect(),
            }
        })
    };

    let first = solve(&x, &y)?;
    let mut residuals = subtract(&y, &x.apply(&first.coeffs));
    let mut n_removed = 0usize;
    let mut coeffs = first.coeffs;

    if policy.is_enabled() {
        let sigma = mad_sigma(&residuals);
        // Perfect fits leave only rounding noise; a machine-precision floor
        // keeps the threshold from chasing it.
        let floor = convert::<T>(100.0)
            * T::epsilon()
            * y.iter().fold(T::one(), |acc, &v| acc.max(v.abs()));
        if sigma > floor {
            let limit = policy.c * sigma;
            let keep: Vec<bool> = residuals.iter().map(|r| r.abs() <= limit).collect();
            n_removed = keep.iter().filter(|&&k| !k).count();
            if n_removed > 0 {
                let kept_rows = keep.len() - n_removed;
                if kept_rows < x.cols() {
                    return Err(Error::InsufficientData { rows: kept_rows, cols: x.cols() });
                }
                let x2 = x.filter_rows(&keep);
                let y2: Vec<T> = y
                    .iter()
                    .zip(&keep)
                    .filter_map(|(&v, &k)| k.then_some(v))
                    .collect();
                let second = solve(&x2, &y2)?;
                residuals = subtract(&y2, &x2.apply(&second.coeffs));
                coeffs = second.coeffs;
            }
        }
    }

    let pairs = coeffs
        .chunks_exact(2)
        .map(|ab| SensorCoeffs { a: ab[0], b: ab[1] })
        .collect();
    let model = ExpansionModel::new(config, pairs, dataset.q0())?;
    let report = FitReport::from_residuals(residuals, n_removed)?;
    Ok((model, report))
}

/// Residuals of a frozen model on the valid samples of `dataset` — the
/// cross-validation primitive. No refitting takes place.
pub fn evaluate<T: Scalar>(
    model: &ExpansionModel<T>,
    dataset: &ScenarioDataset<T>,
) -> Result<FitReport<T>> {
    let q = dataset.q();
    let dq = dataset.dq_measured();
    let mut row = Vec::with_capacity(dataset.n_sensors());
    let mut residuals = Vec::with_capacity(dataset.n_valid());
    for k in dataset.valid_indices() {
        dataset.delta_t_row_into(k, &mut row);
        residuals.push(dq[k] - model.predict(q[k], &row)?);
    }
    FitReport::from_residuals(residuals, 0)
}

fn subtract<T: Scalar>(y: &[T], fitted: &[T]) -> Vec<T> {
    y.iter().zip(fitted).map(|(&a, &b)| a - b).collect()
}

/// Robust scale estimate `1.4826·median(|r − median(r)|)`.
fn mad_sigma<T: Scalar>(residuals: &[T]) -> T {
    let med = median(residuals.to_vec());
    let deviations: Vec<T> = residuals.iter().map(|&r| (r - med).abs()).collect();
    convert::<T>(1.4826) * median(deviations)
}

fn median<T: Scalar>(mut values: Vec<T>) -> T {
    debug_assert!(!values.is_empty());
    values.sort_by(|a, b| a.partial_cmp(b).expect("residuals are finite"));
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        let two = T::one() + T::one();
        (values[n / 2 - 1] + values[n / 2]) / two
    }
}
