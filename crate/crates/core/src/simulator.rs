//! Synthetic scenario generator: motion profiles, lumped-parameter thermal
//! dynamics, ground-truth expansion and interferometer observation effects.
//!
//! Each sensor node integrates a first-order plant
//! `dT_k/dt = −(T_k − T_amb(t))/τ_k + (h_k/τ_k)·u(t)` with `u = 1` during
//! movement (heating) phases, by explicit Euler. The closed-form exponential
//! response doubles as an independent test oracle.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::{convert, Scalar};
use crate::types::{predict_expansion, ExpansionModel, ScenarioDataset, TimeSeries, Unit};

/// One phase of a user scenario.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar", tag = "kind", rename_all = "snake_case")]
pub enum PhaseKind<T> {
    /// Leg follows commanded displacements toward `target_q`.
    Movement {
        #[serde(rename = "target_q_mm")]
        target_q: T,
    },
    /// Leg holds position and cools.
    Rest,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct Phase<T> {
    #[serde(flatten)]
    pub kind: PhaseKind<T>,
    #[serde(rename = "duration_s")]
    pub duration: T,
}

impl<T> Phase<T> {
    pub fn movement(target_q: T, duration: T) -> Self {
        Phase { kind: PhaseKind::Movement { target_q }, duration }
    }

    pub fn rest(duration: T) -> Self {
        Phase { kind: PhaseKind::Rest, duration }
    }
}

fn default_increment<T: Scalar>() -> T {
    convert(10.0)
}

fn default_stabilization<T: Scalar>() -> T {
    convert(5.0)
}

fn default_move_speed<T: Scalar>() -> T {
    convert(5.0)
}

/// Motion scenario: ordered phases plus sampling and stepping parameters.
///
/// Movement phases decompose into steps of at most `increment` millimetres;
/// a stabilization window after each step is masked invalid because the
/// interferometric measurement is unreliable until vibrations settle.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ScenarioSpec<T> {
    pub phases: Vec<Phase<T>>,
    #[serde(rename = "increment_mm", default = "default_increment")]
    pub increment: T,
    #[serde(rename = "stabilization_window_s", default = "default_stabilization")]
    pub stabilization_window: T,
    #[serde(rename = "sample_dt_s")]
    pub sample_dt: T,
    /// The testbed's drive speed is not prescribed anywhere; it only shapes
    /// the invalid windows, so it is configurable rather than asserted.
    #[serde(rename = "move_speed_mm_per_s", default = "default_move_speed")]
    pub move_speed: T,
}

impl<T: Scalar> ScenarioSpec<T> {
    fn validate(&self, stroke: T) -> Result<()> {
        if self.phases.is_empty() {
            return Err(Error::InvalidInput("scenario needs at least one phase".into()));
        }
        if !(self.sample_dt > T::zero()) {
            return Err(Error::InvalidInput("sample_dt must be positive".into()));
        }
        if !(self.increment > T::zero()) {
            return Err(Error::InvalidInput("increment must be positive".into()));
        }
        if !(self.move_speed > T::zero()) {
            return Err(Error::InvalidInput("move_speed must be positive".into()));
        }
        if self.stabilization_window < T::zero() {
            return Err(Error::InvalidInput("stabilization_window must not be negative".into()));
        }
        for (i, phase) in self.phases.iter().enumerate() {
            if !(phase.duration > T::zero()) {
                return Err(Error::InvalidInput(format!("phase {i} has non-positive duration")));
            }
            if let PhaseKind::Movement { target_q } = phase.kind {
                if target_q < T::zero() || target_q > stroke {
                    return Err(Error::InvalidInput(format!(
                        "phase {i} target {target_q} mm is outside the stroke [0, {stroke}] mm"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Thermal plant: per-node first-order dynamics, ambient drift bounds,
/// the ground-truth expansion model and the interferometer beam effects.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ThermalPlantSpec<T> {
    pub n_sensors: usize,
    #[serde(rename = "tau_s")]
    pub tau: Vec<T>,
    #[serde(rename = "gain_k")]
    pub gain: Vec<T>,
    #[serde(rename = "ambient_amplitude_k")]
    pub ambient_amplitude: T,
    #[serde(rename = "ambient_rate_cap_k_per_h")]
    pub ambient_rate_cap: T,
    pub true_model: ExpansionModel<T>,
    #[serde(rename = "beam_sigma_um")]
    pub beam_sigma: T,
    #[serde(rename = "beam_offsets_um")]
    pub beam_offsets: [T; 3],
}

impl<T: Scalar> ThermalPlantSpec<T> {
    fn validate(&self) -> Result<()> {
        if self.n_sensors == 0 {
            return Err(Error::InvalidInput("plant needs at least one sensor".into()));
        }
        for (name, len) in [("tau_s", self.tau.len()), ("gain_k", self.gain.len())] {
            if len != self.n_sensors {
                return Err(Error::LengthMismatch(format!(
                    "{name} has {len} entries for {} sensors",
                    self.n_sensors
                )));
            }
        }
        if self.tau.iter().any(|&t| !(t > T::zero())) {
            return Err(Error::InvalidInput("every time constant must be positive".into()));
        }
        if self.ambient_amplitude < T::zero() || self.ambient_amplitude > convert(2.0) {
            return Err(Error::InvalidInput(
                "ambient amplitude must stay within the stabilized ±2 K band".into(),
            ));
        }
        if self.ambient_rate_cap < T::zero() || self.ambient_rate_cap > T::one() {
            return Err(Error::InvalidInput("ambient rate cap must stay within 1 K/h".into()));
        }
        if self.beam_sigma < T::zero() {
            return Err(Error::InvalidInput("beam sigma must not be negative".into()));
        }
        for id in self.true_model.config().sensors() {
            if id.index() >= self.n_sensors {
                return Err(Error::MissingSensor { id: id.0, available: self.n_sensors });
            }
        }
        Ok(())
    }

    fn tau_min(&self) -> T {
        self.tau.iter().copied().fold(T::infinity(), T::min)
    }
}

/// Linear τ profile from 200 s (sensor 1, near the motor) to 2000 s.
pub fn default_tau<T: Scalar>(n: usize) -> Vec<T> {
    linear_profile(n, 200.0, 2000.0)
}

/// Linear steady-state heating gain profile from 4 K down to 0.5 K.
pub fn default_gain<T: Scalar>(n: usize) -> Vec<T> {
    linear_profile(n, 4.0, 0.5)
}

fn linear_profile<T: Scalar>(n: usize, first: f64, last: f64) -> Vec<T> {
    if n <= 1 {
        return vec![convert(first); n];
    }
    (0..n)
        .map(|k| convert(first + (last - first) * k as f64 / (n - 1) as f64))
        .collect()
}

/// Commanded setpoint trace plus the per-sample heating indicator that
/// drives the thermal plant.
#[derive(Clone, Debug, PartialEq)]
pub struct Motion<T> {
    pub setpoint: TimeSeries<T>,
    pub heating: Vec<bool>,
}

#[derive(Clone, Copy)]
struct Segment<T> {
    t_start: T,
    t_end: T,
    q_start: T,
    q_end: T,
}

/// Generates the piecewise setpoint trace of a scenario.
///
/// Samples are invalid during each movement step and for
/// `stabilization_window` seconds after it; everything else is valid.
pub fn generate_motion<T: Scalar>(spec: &ScenarioSpec<T>, stroke: T) -> Result<Motion<T>> {
    spec.validate(stroke)?;

    let mut segments: Vec<Segment<T>> = Vec::new();
    let mut invalid: Vec<(T, T)> = Vec::new();
    let mut heating: Vec<(T, T)> = Vec::new();
    let mut t = T::zero();
    let mut q = T::zero();

    for phase in &spec.phases {
        match phase.kind {
            PhaseKind::Rest => {
                segments.push(Segment { t_start: t, t_end: t + phase.duration, q_start: q, q_end: q });
            }
            PhaseKind::Movement { target_q } => {
                heating.push((t, t + phase.duration));
                let delta = target_q - q;
                if delta == T::zero() {
                    segments.push(Segment {
                        t_start: t,
                        t_end: t + phase.duration,
                        q_start: q,
                        q_end: q,
                    });
                } else {
                    let n_steps = (delta.abs() / spec.increment)
                        .ceil()
                        .to_usize()
                        .expect("step count fits in usize");
                    let steps_t = convert::<T>(n_steps as f64);
                    let step_q = delta / steps_t;
                    let slot = phase.duration / steps_t;
                    let ramp = (step_q.abs() / spec.move_speed).min(slot);
                    for s in 0..n_steps {
                        let slot_start = t + slot * convert::<T>(s as f64);
                        let q_next = if s + 1 == n_steps {
                            target_q
                        } else {
                            q + step_q
                        };
                        segments.push(Segment {
                            t_start: slot_start,
                            t_end: slot_start + ramp,
                            q_start: q,
                            q_end: q_next,
                        });
                        if ramp < slot {
                            segments.push(Segment {
                                t_start: slot_start + ramp,
                                t_end: slot_start + slot,
                                q_start: q_next,
                                q_end: q_next,
                            });
                        }
                        invalid.push((slot_start, slot_start + ramp + spec.stabilization_window));
                        q = q_next;
                    }
                }
            }
        }
        t += phase.duration;
    }

    let total = t;
    let dt = spec.sample_dt;
    let n = (total / dt)
        .floor()
        .to_usize()
        .expect("sample count fits in usize")
        + 1;

    let invalid = merge_intervals(invalid);
    let mut values = Vec::with_capacity(n);
    let mut valid = Vec::with_capacity(n);
    let mut heat = Vec::with_capacity(n);
    let mut seg_idx = 0usize;
    let mut inv_idx = 0usize;
    let mut heat_idx = 0usize;

    for k in 0..n {
        let tk = dt * convert::<T>(k as f64);

        while seg_idx + 1 < segments.len() && tk >= segments[seg_idx].t_end {
            seg_idx += 1;
        }
        let seg = &segments[seg_idx];
        let qk = if seg.t_end > seg.t_start && tk < seg.t_end {
            let frac = ((tk - seg.t_start) / (seg.t_end - seg.t_start)).max(T::zero());
            seg.q_start + (seg.q_end - seg.q_start) * frac
        } else {
            seg.q_end
        };
        values.push(qk);

        while inv_idx < invalid.len() && tk >= invalid[inv_idx].1 {
            inv_idx += 1;
        }
        valid.push(!(inv_idx < invalid.len() && tk >= invalid[inv_idx].0));

        while heat_idx < heating.len() && tk >= heating[heat_idx].1 {
            heat_idx += 1;
        }
        heat.push(heat_idx < heating.len() && tk >= heating[heat_idx].0);
    }

    Ok(Motion {
        setpoint: TimeSeries::new(T::zero(), dt, values, valid, Unit::Millimetre)?,
        heating: heat,
    })
}

fn merge_intervals<T: Scalar>(mut intervals: Vec<(T, T)>) -> Vec<(T, T)> {
    intervals.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite bounds"));
    let mut merged: Vec<(T, T)> = Vec::with_capacity(intervals.len());
    for (start, end) in intervals {
        match merged.last_mut() {
            Some(last) if start <= last.1 => last.1 = last.1.max(end),
            _ => merged.push((start, end)),
        }
    }
    merged
}

/// Slow ambient drift `A·sin(ωt + φ)` at the fastest rate the cap allows.
struct AmbientModel<T> {
    amplitude: T,
    omega: T,
    phase: T,
}

impl<T: Scalar> AmbientModel<T> {
    fn new(amplitude: T, rate_cap_per_hour: T, phase: T) -> Self {
        if amplitude <= T::zero() || rate_cap_per_hour <= T::zero() {
            return Self { amplitude: T::zero(), omega: T::zero(), phase: T::zero() };
        }
        let rate_per_s = rate_cap_per_hour / convert(3600.0);
        Self { amplitude, omega: rate_per_s / amplitude, phase }
    }

    fn at(&self, t: T) -> T {
        if self.amplitude == T::zero() {
            return T::zero();
        }
        let arg = (self.omega * t + self.phase).to_f64().expect("finite argument");
        self.amplitude * convert::<T>(libm::sin(arg))
    }
}

/// Integrates the per-node thermal dynamics along a motion profile.
///
/// Output is one ΔT series per sensor, zero-referenced at t = 0 and valid
/// everywhere (thermocouples record through motion). Refuses integration
/// when `dt ≥ min τ / 2`.
pub fn simulate_thermals<T: Scalar>(
    plant: &ThermalPlantSpec<T>,
    motion: &Motion<T>,
    ambient_phase: T,
) -> Result<Vec<TimeSeries<T>>> {
    plant.validate()?;
    let dt = motion.setpoint.dt();
    let tau_min = plant.tau_min();
    let two = convert::<T>(2.0);
    if dt >= tau_min / two {
        return Err(Error::UnstableIntegration {
            dt: dt.to_f64().unwrap_or(f64::NAN),
            tau_min: tau_min.to_f64().unwrap_or(f64::NAN),
        });
    }

    let n = motion.setpoint.len();
    let ns = plant.n_sensors;
    let ambient = AmbientModel::new(plant.ambient_amplitude, plant.ambient_rate_cap, ambient_phase);

    let mut state: Vec<T> = vec![ambient.at(T::zero()); ns];
    let initial = state.clone();
    let mut series: Vec<Vec<T>> = (0..ns).map(|_| Vec::with_capacity(n)).collect();
    for col in &mut series {
        col.push(T::zero());
    }

    for k in 1..n {
        let t_prev = dt * convert::<T>((k - 1) as f64);
        let amb = ambient.at(t_prev);
        let u = if motion.heating[k - 1] { T::one() } else { T::zero() };
        for s in 0..ns {
            let tau = plant.tau[s];
            let slope = (amb - state[s]) / tau + plant.gain[s] / tau * u;
            state[s] += dt * slope;
            series[s].push(state[s] - initial[s]);
        }
    }

    series
        .into_iter()
        .map(|col| TimeSeries::new(T::zero(), dt, col, vec![true; n], Unit::Kelvin))
        .collect()
}

/// Standard normal deviate by Box–Muller. Routing the transcendentals
/// through libm keeps the stream bit-identical across platforms.
fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    let radius = libm::sqrt(-2.0 * libm::log(1.0 - u1));
    radius * libm::cos(2.0 * std::f64::consts::PI * u2)
}

/// Observes the ground-truth expansion through the three-beam
/// interferometer: each beam reads truth plus its static offset plus
/// Gaussian noise, and their average defines the dilatation. The result is
/// zero-referenced at the first valid sample and carries the motion mask.
pub fn observe_expansion<T: Scalar>(
    true_model: &ExpansionModel<T>,
    setpoint: &TimeSeries<T>,
    thermals: &[TimeSeries<T>],
    beam_sigma: T,
    beam_offsets: &[T; 3],
    rng: &mut impl Rng,
) -> Result<TimeSeries<T>> {
    let n = setpoint.len();
    let dt = setpoint.dt();
    for (s, th) in thermals.iter().enumerate() {
        if th.len() != n || th.dt() != dt {
            return Err(Error::LengthMismatch(format!(
                "temperature series {} is not aligned with the motion trace",
                s + 1
            )));
        }
    }

    let clean = beam_sigma == T::zero() && beam_offsets.iter().all(|&o| o == T::zero());
    let three = convert::<T>(3.0);
    let q = setpoint.values();
    let mut row = vec![T::zero(); thermals.len()];
    let mut raw = Vec::with_capacity(n);
    for k in 0..n {
        for (s, th) in thermals.iter().enumerate() {
            row[s] = th.values()[k];
        }
        let truth = predict_expansion(true_model, q[k], &row)?;
        let value = if clean {
            truth
        } else {
            let mut acc = T::zero();
            for &offset in beam_offsets {
                let noise = beam_sigma * convert::<T>(gauss(rng));
                acc += truth + offset + noise;
            }
            acc / three
        };
        raw.push(value);
    }

    let anchor = raw[setpoint.first_valid().ok_or(Error::AllInvalid)?];
    let measured = raw.into_iter().map(|v| v - anchor).collect();
    TimeSeries::new(T::zero(), dt, measured, setpoint.valid().to_vec(), Unit::Micrometre)
}

/// Joins the simulated channels into a [`ScenarioDataset`], re-applying the
/// zero reference at the first jointly-valid sample.
pub fn assemble_dataset<T: Scalar>(
    setpoint: &TimeSeries<T>,
    thermals: &[TimeSeries<T>],
    expansion: &TimeSeries<T>,
    q0: T,
    stroke: T,
) -> Result<ScenarioDataset<T>> {
    let n = setpoint.len();
    let dt = setpoint.dt();
    if expansion.len() != n || expansion.dt() != dt {
        return Err(Error::LengthMismatch("expansion trace is not aligned with the motion trace".into()));
    }
    for (s, th) in thermals.iter().enumerate() {
        if th.len() != n || th.dt() != dt {
            return Err(Error::LengthMismatch(format!(
                "temperature series {} is not aligned with the motion trace",
                s + 1
            )));
        }
    }

    let valid: Vec<bool> = (0..n)
        .map(|k| {
            setpoint.is_valid(k)
                && expansion.is_valid(k)
                && thermals.iter().all(|th| th.is_valid(k))
        })
        .collect();
    let fv = valid.iter().position(|&v| v).ok_or(Error::AllInvalid)?;

    let time: Vec<T> = (0..n).map(|k| dt * convert::<T>(k as f64)).collect();
    let delta_t: Vec<Vec<T>> = thermals
        .iter()
        .map(|th| {
            let shift = th.values()[fv];
            th.values().iter().map(|&v| v - shift).collect()
        })
        .collect();
    let dq_shift = expansion.values()[fv];
    let dq: Vec<T> = expansion.values().iter().map(|&v| v - dq_shift).collect();

    ScenarioDataset::new(time, setpoint.values().to_vec(), delta_t, dq, valid, q0, stroke)
}

/// Runs one scenario end to end. Identical spec, plant and seed produce a
/// bit-identical dataset.
pub fn simulate_scenario<T: Scalar>(
    spec: &ScenarioSpec<T>,
    plant: &ThermalPlantSpec<T>,
    stroke: T,
    seed: u64,
) -> Result<ScenarioDataset<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let ambient_phase = convert::<T>(rng.random::<f64>() * std::f64::consts::TAU);
    let motion = generate_motion(spec, stroke)?;
    let thermals = simulate_thermals(plant, &motion, ambient_phase)?;
    let expansion = observe_expansion(
        &plant.true_model,
        &motion.setpoint,
        &thermals,
        plant.beam_sigma,
        &plant.beam_offsets,
        &mut rng,
    )?;
    assemble_dataset(&motion.setpoint, &thermals, &expansion, plant.true_model.q0(), stroke)
}
