//! Domain types and the pure expansion-model arithmetic shared by all modules.
//!
//! Units are fixed project-wide: rod displacement `q` and contracted length
//! `q0` in millimetres, expansion in micrometres, relative temperatures in
//! kelvins. All I/O converts at the boundary; internal arithmetic never
//! mixes units.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};

/// Physical unit of a [`TimeSeries`] channel.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Unit {
    Millimetre,
    Micrometre,
    Kelvin,
}

impl Unit {
    /// Suffix used in CSV column names.
    pub fn suffix(self) -> &'static str {
        match self {
            Unit::Millimetre => "mm",
            Unit::Micrometre => "um",
            Unit::Kelvin => "K",
        }
    }
}

impl fmt::Display for Unit {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.suffix())
    }
}

/// 1-based identifier of a temperature sensor.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SensorId(pub u16);

impl SensorId {
    /// Zero-based column index into per-sensor storage.
    pub fn index(self) -> usize {
        debug_assert!(self.0 >= 1, "sensor ids are 1-based");
        usize::from(self.0) - 1
    }
}

impl fmt::Display for SensorId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Uniformly sampled scalar channel with a per-sample validity mask.
///
/// Samples flagged invalid are excluded from every statistic and fit.
#[derive(Clone, Debug, PartialEq)]
pub struct TimeSeries<T> {
    t0: T,
    dt: T,
    values: Vec<T>,
    valid: Vec<bool>,
    unit: Unit,
}

impl<T: Scalar> TimeSeries<T> {
    pub fn new(t0: T, dt: T, values: Vec<T>, valid: Vec<bool>, unit: Unit) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("time series must hold at least one sample".into()));
        }
        if values.len() != valid.len() {
            return Err(Error::LengthMismatch(format!(
                "time series has {} values but {} validity flags",
                values.len(),
                valid.len()
            )));
        }
        if !(dt > T::zero()) {
            return Err(Error::InvalidInput(format!("sample period dt must be positive, got {dt}")));
        }
        Ok(Self { t0, dt, values, valid, unit })
    }

    pub fn t0(&self) -> T {
        self.t0
    }

    pub fn dt(&self) -> T {
        self.dt
    }

    pub fn unit(&self) -> Unit {
        self.unit
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least one sample by construction
    }

    pub fn values(&self) -> &[T] {
        &self.values
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    /// Index of the first valid sample, if any.
    pub fn first_valid(&self) -> Option<usize> {
        self.valid.iter().position(|&v| v)
    }

    /// `(index, value)` pairs of the valid samples.
    pub fn valid_samples(&self) -> impl Iterator<Item = (usize, T)> + '_ {
        self.values
            .iter()
            .zip(&self.valid)
            .enumerate()
            .filter_map(|(i, (&v, &ok))| ok.then_some((i, v)))
    }
}

/// Sensor configuration under evaluation: one thermocouple or an unordered
/// pair. Pairs are kept in canonical order `i < j`; the prediction formula
/// is invariant under the swap.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SensorConfig {
    Single { i: SensorId },
    Pair { i: SensorId, j: SensorId },
}

impl SensorConfig {
    pub fn single(i: SensorId) -> Self {
        SensorConfig::Single { i }
    }

    /// Builds a pair in canonical order. `i == j` is rejected.
    pub fn pair(i: SensorId, j: SensorId) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidInput(format!("sensor pair ({i}, {j}) must use two distinct sensors")));
        }
        let (lo, hi) = if i < j { (i, j) } else { (j, i) };
        Ok(SensorConfig::Pair { i: lo, j: hi })
    }

    /// Canonical form of `self`, validating the pair invariant.
    pub fn canonicalized(self) -> Result<Self> {
        match self {
            SensorConfig::Single { .. } => Ok(self),
            SensorConfig::Pair { i, j } => SensorConfig::pair(i, j),
        }
    }

    pub fn sensors(&self) -> Vec<SensorId> {
        match *self {
            SensorConfig::Single { i } => vec![i],
            SensorConfig::Pair { i, j } => vec![i, j],
        }
    }

    pub fn arity(&self) -> usize {
        match self {
            SensorConfig::Single { .. } => 1,
            SensorConfig::Pair { .. } => 2,
        }
    }

    /// Short label such as `7` or `7-15`, used in reports and filenames.
    pub fn label(&self) -> String {
        match *self {
            SensorConfig::Single { i } => format!("{i}"),
            SensorConfig::Pair { i, j } => format!("{i}-{j}"),
        }
    }
}

impl fmt::Display for SensorConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Per-sensor coefficient pair of the expansion model, in µm·mm⁻¹·K⁻¹.
///
/// `a` scales the fixed part (`a·q0·ΔT`), `b` the moving part (`b·q·ΔT`).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SensorCoeffs<T> {
    pub a: T,
    pub b: T,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
struct ModelRepr<T> {
    config: SensorConfig,
    coefficients: Vec<CoeffEntry<T>>,
    q0_mm: T,
}

/// One sensor's coefficients as serialized in model documents.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct CoeffEntry<T> {
    pub sensor: SensorId,
    pub a_um_per_mm_k: T,
    pub b_um_per_mm_k: T,
}

/// Identified linear expansion model for one sensor configuration.
///
/// Prediction is linear and homogeneous in ΔT: an all-zero temperature
/// vector predicts exactly zero expansion. There is no intercept; the
/// zero-reference at the start of every dataset makes one redundant.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(
    bound = "T: Scalar",
    try_from = "ModelRepr<T>",
    into = "ModelRepr<T>"
)]
pub struct ExpansionModel<T> {
    config: SensorConfig,
    coeffs: Vec<SensorCoeffs<T>>,
    q0: T,
}

impl<T: Scalar> ExpansionModel<T> {
    /// `coeffs` must follow the canonical sensor order of `config`.
    pub fn new(config: SensorConfig, coeffs: Vec<SensorCoeffs<T>>, q0: T) -> Result<Self> {
        let config = config.canonicalized()?;
        if coeffs.len() != config.arity() {
            return Err(Error::InvalidInput(format!(
                "model for configuration {config} needs {} coefficient pairs, got {}",
                config.arity(),
                coeffs.len()
            )));
        }
        if !(q0 > T::zero()) {
            return Err(Error::InvalidInput(format!("q0 must be positive, got {q0} mm")));
        }
        Ok(Self { config, coeffs, q0 })
    }

    pub fn config(&self) -> SensorConfig {
        self.config
    }

    pub fn coeffs(&self) -> &[SensorCoeffs<T>] {
        &self.coeffs
    }

    pub fn q0(&self) -> T {
        self.q0
    }

    /// Predicted thermal expansion in µm; see [`predict_expansion`].
    pub fn predict(&self, q: T, delta_t: &[T]) -> Result<T> {
        predict_expansion(self, q, delta_t)
    }
}

impl<T: Scalar> TryFrom<ModelRepr<T>> for ExpansionModel<T> {
    type Error = Error;

    fn try_from(repr: ModelRepr<T>) -> Result<Self> {
        let config = repr.config.canonicalized()?;
        let sensors = config.sensors();
        if repr.coefficients.len() != sensors.len() {
            return Err(Error::InvalidInput(format!(
                "model document for configuration {config} carries {} coefficient entries",
                repr.coefficients.len()
            )));
        }
        let mut coeffs = Vec::with_capacity(sensors.len());
        for (id, entry) in sensors.iter().zip(&repr.coefficients) {
            if entry.sensor != *id {
                return Err(Error::InvalidInput(format!(
                    "coefficient entry for sensor {} does not match configuration {config}",
                    entry.sensor
                )));
            }
            coeffs.push(SensorCoeffs { a: entry.a_um_per_mm_k, b: entry.b_um_per_mm_k });
        }
        ExpansionModel::new(config, coeffs, repr.q0_mm)
    }
}

impl<T: Scalar> From<ExpansionModel<T>> for ModelRepr<T> {
    fn from(model: ExpansionModel<T>) -> Self {
        let coefficients = model
            .config
            .sensors()
            .into_iter()
            .zip(&model.coeffs)
            .map(|(sensor, c)| CoeffEntry { sensor, a_um_per_mm_k: c.a, b_um_per_mm_k: c.b })
            .collect();
        ModelRepr { config: model.config, coefficients, q0_mm: model.q0 }
    }
}

/// Evaluates `A_i·q0·ΔT_i + B_i·q·ΔT_i (+ A_j·q0·ΔT_j + B_j·q·ΔT_j)` in µm.
///
/// `delta_t` holds one relative temperature per sensor, indexed by sensor id
/// (id 1 at index 0). A configuration referencing a sensor beyond the slice
/// is a configuration error.
pub fn predict_expansion<T: Scalar>(model: &ExpansionModel<T>, q: T, delta_t: &[T]) -> Result<T> {
    let mut total = T::zero();
    for (id, c) in model.config.sensors().into_iter().zip(&model.coeffs) {
        let dt = *delta_t
            .get(id.index())
            .ok_or(Error::MissingSensor { id: id.0, available: delta_t.len() })?;
        total += (c.a * model.q0 + c.b * q) * dt;
    }
    Ok(total)
}

/// RMSE (`√(Σr²)/√p`) and L∞ (`max|r|`) of a residual vector, in µm.
pub fn residual_norms<T: Scalar>(residuals: &[T]) -> Result<(T, T)> {
    if residuals.is_empty() {
        return Err(Error::EmptyResiduals);
    }
    let sum_sq = residuals.iter().fold(T::zero(), |acc, &r| acc + r * r);
    let p = convert::<T>(residuals.len() as f64);
    let rmse = sum_sq.sqrt() / p.sqrt();
    let linf = residuals.iter().fold(T::zero(), |acc, &r| acc.max(r.abs()));
    Ok((rmse, linf))
}

/// Residual summary of one configuration on one dataset.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct FitReport<T> {
    #[serde(rename = "residuals_um")]
    residuals: Vec<T>,
    #[serde(rename = "rmse_um")]
    rmse: T,
    #[serde(rename = "linf_um")]
    linf: T,
    n_samples: usize,
    n_outliers_removed: usize,
}

impl<T: Scalar> FitReport<T> {
    /// Builds a report from per-sample residuals (measured − predicted, µm),
    /// computing both norms so the invariants hold by construction.
    pub fn from_residuals(residuals: Vec<T>, n_outliers_removed: usize) -> Result<Self> {
        let (rmse, linf) = residual_norms(&residuals)?;
        let n_samples = residuals.len();
        Ok(Self { residuals, rmse, linf, n_samples, n_outliers_removed })
    }

    pub fn residuals(&self) -> &[T] {
        &self.residuals
    }

    pub fn rmse(&self) -> T {
        self.rmse
    }

    pub fn linf(&self) -> T {
        self.linf
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn n_outliers_removed(&self) -> usize {
        self.n_outliers_removed
    }
}

/// Aligned multi-channel calibration record on a uniform grid.
///
/// Construction enforces the zero-reference protocol: at the first valid
/// sample every ΔT column and the measured expansion are exactly zero.
#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioDataset<T> {
    time: Vec<T>,
    q: Vec<T>,
    delta_t: Vec<Vec<T>>,
    dq_measured: Vec<T>,
    valid: Vec<bool>,
    q0: T,
}

impl<T: Scalar> ScenarioDataset<T> {
    pub fn new(
        time: Vec<T>,
        q: Vec<T>,
        delta_t: Vec<Vec<T>>,
        dq_measured: Vec<T>,
        valid: Vec<bool>,
        q0: T,
        stroke: T,
    ) -> Result<Self> {
        let n = time.len();
        if n == 0 {
            return Err(Error::InvalidInput("dataset must hold at least one sample".into()));
        }
        for (name, len) in [("q", q.len()), ("dq_measured", dq_measured.len()), ("valid", valid.len())] {
            if len != n {
                return Err(Error::LengthMismatch(format!("column {name} has {len} samples, expected {n}")));
            }
        }
        for (s, col) in delta_t.iter().enumerate() {
            if col.len() != n {
                return Err(Error::LengthMismatch(format!(
                    "temperature column {} has {} samples, expected {n}",
                    s + 1,
                    col.len()
                )));
            }
        }
        if !(q0 > T::zero()) {
            return Err(Error::InvalidInput(format!("q0 must be positive, got {q0} mm")));
        }
        for (k, &qk) in q.iter().enumerate() {
            if qk < T::zero() || qk > stroke {
                return Err(Error::InvalidInput(format!(
                    "q = {qk} mm at sample {k} is outside the stroke [0, {stroke}] mm"
                )));
            }
        }
        let first_valid = valid
            .iter()
            .position(|&v| v)
            .ok_or(Error::AllInvalid)?;
        if dq_measured[first_valid] != T::zero()
            || delta_t.iter().any(|col| col[first_valid] != T::zero())
        {
            return Err(Error::InvalidInput(
                "dataset is not zero-referenced: ΔT and measured expansion must be 0 at the first valid sample"
                    .into(),
            ));
        }
        Ok(Self { time, q, delta_t, dq_measured, valid, q0 })
    }

    pub fn n_samples(&self) -> usize {
        self.time.len()
    }

    pub fn n_sensors(&self) -> usize {
        self.delta_t.len()
    }

    pub fn time(&self) -> &[T] {
        &self.time
    }

    pub fn q(&self) -> &[T] {
        &self.q
    }

    /// Column of ΔT samples for one sensor.
    pub fn delta_t(&self, id: SensorId) -> Result<&[T]> {
        self.delta_t
            .get(id.index())
            .map(Vec::as_slice)
            .ok_or(Error::MissingSensor { id: id.0, available: self.n_sensors() })
    }

    pub fn delta_t_columns(&self) -> &[Vec<T>] {
        &self.delta_t
    }

    pub fn dq_measured(&self) -> &[T] {
        &self.dq_measured
    }

    pub fn valid(&self) -> &[bool] {
        &self.valid
    }

    pub fn q0(&self) -> T {
        self.q0
    }

    pub fn first_valid(&self) -> usize {
        self.valid.iter().position(|&v| v).expect("checked at construction")
    }

    pub fn valid_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.valid.iter().enumerate().filter_map(|(i, &v)| v.then_some(i))
    }

    pub fn n_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    /// Gathers the per-sensor ΔT row of sample `k` into `buf`.
    pub fn delta_t_row_into(&self, k: usize, buf: &mut Vec<T>) {
        buf.clear();
        buf.extend(self.delta_t.iter().map(|col| col[k]));
    }

    /// Concatenates datasets sample-wise for pooled regression.
    ///
    /// All parts must agree on sensor count and q0. The zero-reference of
    /// each part is preserved; the global invariant holds because the first
    /// part's first valid sample leads.
    pub fn concat(parts: &[ScenarioDataset<T>]) -> Result<ScenarioDataset<T>> {
        let first = parts
            .first()
            .ok_or_else(|| Error::InvalidInput("no datasets supplied".into()))?;
        let n_sensors = first.n_sensors();
        let q0 = first.q0;
        let mut out = first.clone();
        for part in &parts[1..] {
            if part.n_sensors() != n_sensors {
                return Err(Error::LengthMismatch(format!(
                    "cannot concatenate datasets with {} and {n_sensors} sensors",
                    part.n_sensors()
                )));
            }
            if part.q0 != q0 {
                return Err(Error::InvalidInput(format!(
                    "cannot concatenate datasets with q0 {} mm and {q0} mm",
                    part.q0
                )));
            }
            out.time.extend_from_slice(&part.time);
            out.q.extend_from_slice(&part.q);
            for (dst, src) in out.delta_t.iter_mut().zip(&part.delta_t) {
                dst.extend_from_slice(src);
            }
            out.dq_measured.extend_from_slice(&part.dq_measured);
            out.valid.extend_from_slice(&part.valid);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sid(i: u16) -> SensorId {
        SensorId(i)
    }

    fn eq8_model() -> ExpansionModel<f64> {
        ExpansionModel::new(
            SensorConfig::single(sid(7)),
            vec![SensorCoeffs { a: 1.99e-3, b: 1.09e-3 }],
            500.0,
        )
        .unwrap()
    }

    #[test]
    fn predict_matches_hand_substitution() {
        // A·q0·ΔT + B·q·ΔT = 1.99e-3·500·2 + 1.09e-3·100·2 = 2.208 µm
        let model = eq8_model();
        let mut delta_t = vec![0.0; 7];
        delta_t[6] = 2.0;
        let out = predict_expansion(&model, 100.0, &delta_t).unwrap();
        assert!((out - 2.208).abs() < 1e-12, "got {out}");
    }

    #[test]
    fn predict_is_homogeneous_in_delta_t() {
        let model = eq8_model();
        let out = predict_expansion(&model, 180.0, &[0.0; 7]).unwrap();
        assert_eq!(out, 0.0);
    }

    #[test]
    fn predict_pair_is_index_permutation_symmetric() {
        let (a, b, c, d) = (1.3e-3, 0.4e-3, 0.9e-3, 0.2e-3);
        let forward = ExpansionModel::new(
            SensorConfig::pair(sid(1), sid(2)).unwrap(),
            vec![SensorCoeffs { a, b }, SensorCoeffs { a: c, b: d }],
            500.0,
        )
        .unwrap();
        let swapped = ExpansionModel::new(
            SensorConfig::pair(sid(1), sid(2)).unwrap(),
            vec![SensorCoeffs { a: c, b: d }, SensorCoeffs { a, b }],
            500.0,
        )
        .unwrap();
        let fwd = predict_expansion(&forward, 80.0, &[1.7, -0.6]).unwrap();
        let swp = predict_expansion(&swapped, 80.0, &[-0.6, 1.7]).unwrap();
        assert_eq!(fwd, swp);
    }

    #[test]
    fn predict_rejects_missing_channel() {
        let model = eq8_model();
        let err = predict_expansion(&model, 10.0, &[0.1, 0.2]).unwrap_err();
        assert!(matches!(err, Error::MissingSensor { id: 7, available: 2 }));
    }

    #[test]
    fn norms_pythagorean() {
        let (rmse, linf) = residual_norms(&[3.0, 4.0]).unwrap();
        assert!((rmse - 5.0 / 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(linf, 4.0);
    }

    #[test]
    fn norms_zero_vector() {
        let (rmse, linf) = residual_norms(&[0.0, 0.0, 0.0]).unwrap();
        assert_eq!((rmse, linf), (0.0, 0.0));
    }

    #[test]
    fn norms_hand_arithmetic() {
        // Σr² = 1 + 4 + 2.25 = 7.25, rmse = √(7.25/3), linf = 2
        let (rmse, linf) = residual_norms(&[1.0, -2.0, 1.5]).unwrap();
        assert!((rmse - (7.25f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(linf, 2.0);
    }

    #[test]
    fn norms_reject_empty_input() {
        assert!(matches!(residual_norms::<f64>(&[]), Err(Error::EmptyResiduals)));
    }

    #[test]
    fn fit_report_invariants() {
        let report = FitReport::from_residuals(vec![1.0, -2.0, 1.5], 2).unwrap();
        assert!(report.rmse() <= report.linf());
        assert!(report.linf() <= report.rmse() * 3.0f64.sqrt());
        assert_eq!(report.n_samples(), 3);
        assert_eq!(report.n_outliers_removed(), 2);
    }

    #[test]
    fn pair_config_is_canonicalized() {
        let cfg = SensorConfig::pair(sid(15), sid(7)).unwrap();
        assert_eq!(cfg, SensorConfig::Pair { i: sid(7), j: sid(15) });
        assert!(SensorConfig::pair(sid(4), sid(4)).is_err());
    }

    #[test]
    fn time_series_invariants() {
        assert!(TimeSeries::new(0.0, 1.0, vec![], vec![], Unit::Kelvin).is_err());
        assert!(TimeSeries::new(0.0, 0.0, vec![1.0], vec![true], Unit::Kelvin).is_err());
        assert!(TimeSeries::new(0.0, 1.0, vec![1.0], vec![true, false], Unit::Kelvin).is_err());
        let ts = TimeSeries::new(0.0, 0.5, vec![1.0, 2.0], vec![false, true], Unit::Kelvin).unwrap();
        assert_eq!(ts.first_valid(), Some(1));
        assert_eq!(ts.valid_samples().collect::<Vec<_>>(), vec![(1, 2.0)]);
    }

    #[test]
    fn dataset_requires_zero_reference() {
        let err = ScenarioDataset::new(
            vec![0.0, 1.0],
            vec![0.0, 0.0],
            vec![vec![0.5, 1.0]],
            vec![0.0, 0.1],
            vec![true, true],
            500.0,
            250.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));

        let ds = ScenarioDataset::new(
            vec![0.0, 1.0],
            vec![0.0, 0.0],
            vec![vec![0.0, 1.0]],
            vec![0.0, 0.1],
            vec![true, true],
            500.0,
            250.0,
        )
        .unwrap();
        assert_eq!(ds.n_sensors(), 1);
        assert_eq!(ds.first_valid(), 0);
    }

    #[test]
    fn dataset_rejects_q_outside_stroke() {
        let err = ScenarioDataset::new(
            vec![0.0],
            vec![260.0],
            vec![vec![0.0]],
            vec![0.0],
            vec![true],
            500.0,
            250.0,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidInput(_)));
    }

    #[test]
    fn model_round_trips_through_json() {
        let model = eq8_model();
        let json = serde_json::to_string(&model).unwrap();
        let back: ExpansionModel<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(model, back);
        assert!(json.contains("a_um_per_mm_k"));
        assert!(json.contains("q0_mm"));
    }
}
