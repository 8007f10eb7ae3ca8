//! Setpoint correction: rewrites commanded positions so the leg lands on
//! target despite its current thermal state.

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};
use crate::types::{predict_expansion, ExpansionModel, ScenarioDataset, TimeSeries, Unit};

/// Parameters of the correction loop.
///
/// The `b·q·ΔT` term makes the predicted expansion depend on the commanded
/// position itself, so the corrected setpoint is the fixed point of
/// `q ← q_setpoint − predict(q)/1000`. For physical coefficient magnitudes
/// the iteration contracts by ~1e-5 per step and converges immediately;
/// the cap exists so a pathological model fails loudly instead of spinning.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CorrectionSettings<T> {
    pub stroke: T,
    /// Fixed-point termination threshold in mm.
    pub tolerance: T,
    pub max_iterations: usize,
    /// Trailing moving-average window (samples) applied to ΔT before
    /// batch correction; 0 or 1 leaves the temperatures raw.
    pub smooth_window: usize,
}

impl<T: Scalar> CorrectionSettings<T> {
    pub fn new(stroke: T) -> Self {
        Self {
            stroke,
            tolerance: convert(1e-6),
            max_iterations: 10,
            smooth_window: 0,
        }
    }
}

/// Thermally corrected setpoint in mm.
///
/// With ΔT = 0 this is the identity. A correction that leaves the stroke is
/// refused — never clamped — with the uncorrected setpoint carried in the
/// error so the caller can decide what to command.
pub fn correct_setpoint<T: Scalar>(
    model: &ExpansionModel<T>,
    q_setpoint: T,
    delta_t: &[T],
    settings: &CorrectionSettings<T>,
) -> Result<T> {
    if q_setpoint < T::zero() || q_setpoint > settings.stroke {
        return Err(Error::InvalidInput(format!(
            "setpoint {q_setpoint} mm is outside the stroke [0, {}] mm",
            settings.stroke
        )));
    }
    let um_per_mm = convert::<T>(1000.0);
    let mut q = q_setpoint;
    for _ in 0..settings.max_iterations {
        let expansion = predict_expansion(model, q, delta_t)?;
        let next = q_setpoint - expansion / um_per_mm;
        let step = (next - q).abs();
        q = next;
        if step < settings.tolerance {
            if q < T::zero() || q > settings.stroke {
                return Err(Error::OutOfStroke {
                    corrected: q.to_f64().unwrap_or(f64::NAN),
                    uncorrected: q_setpoint.to_f64().unwrap_or(f64::NAN),
                    stroke: settings.stroke.to_f64().unwrap_or(f64::NAN),
                });
            }
            return Ok(q);
        }
    }
    Err(Error::NonConvergence { iterations: settings.max_iterations })
}

/// Applies [`correct_setpoint`] sample-wise over an aligned motion trace
/// and per-sensor temperature series. The validity mask is carried over
/// from the motion trace.
pub fn batch_correct<T: Scalar>(
    model: &ExpansionModel<T>,
    motion: &TimeSeries<T>,
    thermals: &[TimeSeries<T>],
    settings: &CorrectionSettings<T>,
) -> Result<TimeSeries<T>> {
    let n = motion.len();
    for (s, th) in thermals.iter().enumerate() {
        if th.len() != n {
            return Err(Error::LengthMismatch(format!(
                "temperature series {} is not aligned with the motion trace",
                s + 1
            )));
        }
    }
    let columns: Vec<Vec<T>> = thermals
        .iter()
        .map(|th| smooth_trailing(th.values(), settings.smooth_window))
        .collect();
    let mut corrected = Vec::with_capacity(n);
    let mut row = vec![T::zero(); columns.len()];
    for k in 0..n {
        for (s, col) in columns.iter().enumerate() {
            row[s] = col[k];
        }
        corrected.push(correct_setpoint(model, motion.values()[k], &row, settings)?);
    }
    TimeSeries::new(motion.t0(), motion.dt(), corrected, motion.valid().to_vec(), Unit::Millimetre)
}

/// Batch correction over a dataset's setpoint and temperature columns.
/// Returns the corrected setpoints and the predicted expansion at the
/// corrected position, both per sample.
pub fn batch_correct_dataset<T: Scalar>(
    model: &ExpansionModel<T>,
    dataset: &ScenarioDataset<T>,
    settings: &CorrectionSettings<T>,
) -> Result<(Vec<T>, Vec<T>)> {
    let columns: Vec<Vec<T>> = dataset
        .delta_t_columns()
        .iter()
        .map(|col| smooth_trailing(col, settings.smooth_window))
        .collect();
    let n = dataset.n_samples();
    let mut corrected = Vec::with_capacity(n);
    let mut predicted = Vec::with_capacity(n);
    let mut row = vec![T::zero(); columns.len()];
    for k in 0..n {
        for (s, col) in columns.iter().enumerate() {
            row[s] = col[k];
        }
        let q_corr = correct_setpoint(model, dataset.q()[k], &row, settings)?;
        corrected.push(q_corr);
        predicted.push(predict_expansion(model, q_corr, &row)?);
    }
    Ok((corrected, predicted))
}

/// Trailing moving average over the last `window` samples (uniform
/// weights, shorter at the start). `window ≤ 1` is the identity.
fn smooth_trailing<T: Scalar>(values: &[T], window: usize) -> Vec<T> {
    if window <= 1 {
        return values.to_vec();
    }
    let mut out = Vec::with_capacity(values.len());
    let mut acc = T::zero();
    for k in 0..values.len() {
        acc += values[k];
        if k >= window {
            acc -= values[k - window];
        }
        let span = convert::<T>(k.min(window - 1) as f64 + 1.0);
        out.push(acc / span);
    }
    out
}
