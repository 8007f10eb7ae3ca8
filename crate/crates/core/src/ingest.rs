//! Dataset and report I/O: the canonical dataset CSV, raw multi-rate
//! channel ingestion with grid alignment and zero-referencing, JSON report
//! writing, and atomic file output.
//!
//! Dataset CSV layout: header `time_s,q_mm,valid,dq_um,dT01_K,...,dTNN_K`,
//! one row per grid sample, `valid` ∈ {0,1}, decimal point, UTF-8. Numbers
//! are written in shortest round-trip decimal form, so
//! `load(write(x)) == x` bit-exactly.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;
use crate::types::{
    CoeffEntry, ExpansionModel, ScenarioDataset, SensorConfig, SensorId, Unit,
};

/// Writes `contents` to `path` through a temporary file in the same
/// directory plus an atomic rename, so partial outputs never land on disk.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty());
    if let Some(dir) = dir {
        fs::create_dir_all(dir)?;
    }
    let mut tmp = tempfile::NamedTempFile::new_in(dir.unwrap_or(Path::new(".")))?;
    tmp.write_all(contents.as_bytes())?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

pub fn to_json_pretty<S: Serialize>(value: &S) -> Result<String> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    Ok(text)
}

pub fn write_json<S: Serialize>(path: &Path, value: &S) -> Result<()> {
    write_atomic(path, &to_json_pretty(value)?)
}

pub fn read_json<D: DeserializeOwned>(path: &Path) -> Result<D> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn sensor_column(id: usize) -> String {
    format!("dT{id:02}_K")
}

/// Canonical CSV serialization of a dataset.
pub fn dataset_to_csv<T: Scalar>(dataset: &ScenarioDataset<T>) -> String {
    let n = dataset.n_samples();
    let mut out = String::with_capacity(n * 16 * (4 + dataset.n_sensors()));
    out.push_str("time_s,q_mm,valid,dq_um");
    for s in 1..=dataset.n_sensors() {
        out.push(',');
        out.push_str(&sensor_column(s));
    }
    out.push('\n');
    let columns = dataset.delta_t_columns();
    for k in 0..n {
        out.push_str(&format!(
            "{},{},{},{}",
            dataset.time()[k],
            dataset.q()[k],
            u8::from(dataset.valid()[k]),
            dataset.dq_measured()[k],
        ));
        for col in columns {
            out.push(',');
            out.push_str(&format!("{}", col[k]));
        }
        out.push('\n');
    }
    out
}

/// Parses the canonical dataset CSV. `q0` is supplied out-of-band (it is
/// dataset metadata, not a column); `stroke` bounds the q column.
pub fn dataset_from_csv<T: Scalar>(text: &str, q0: T, stroke: T) -> Result<ScenarioDataset<T>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Csv { line: 1, msg: "empty file".into() })?;
    let fields: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if fields.len() < 5 || fields[..4] != ["time_s", "q_mm", "valid", "dq_um"] {
        return Err(Error::Csv {
            line: 1,
            msg: "header must start with time_s,q_mm,valid,dq_um".into(),
        });
    }
    let n_sensors = fields.len() - 4;
    for (s, field) in fields[4..].iter().enumerate() {
        let expected = sensor_column(s + 1);
        if *field != expected {
            return Err(Error::UnknownColumn((*field).to_string()));
        }
    }

    let mut time = Vec::new();
    let mut q = Vec::new();
    let mut valid = Vec::new();
    let mut dq = Vec::new();
    let mut delta_t: Vec<Vec<T>> = vec![Vec::new(); n_sensors];
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != fields.len() {
            return Err(Error::Csv {
                line: row,
                msg: format!("expected {} cells, found {}", fields.len(), cells.len()),
            });
        }
        let parse = |cell: &str, what: &str| -> Result<T> {
            cell.parse::<T>().map_err(|e| Error::Csv {
                line: row,
                msg: format!("bad {what} value `{cell}`: {e}"),
            })
        };
        let t = parse(cells[0], "time_s")?;
        if let Some(&prev) = time.last() {
            if t <= prev {
                return Err(Error::NonMonotonicTime { row });
            }
        }
        time.push(t);
        q.push(parse(cells[1], "q_mm")?);
        valid.push(match cells[2] {
            "0" => false,
            "1" => true,
            other => {
                return Err(Error::Csv { line: row, msg: format!("bad valid flag `{other}`") })
            }
        });
        dq.push(parse(cells[3], "dq_um")?);
        for (s, cell) in cells[4..].iter().enumerate() {
            delta_t[s].push(parse(cell, &sensor_column(s + 1))?);
        }
    }

    ScenarioDataset::new(time, q, delta_t, dq, valid, q0, stroke)
}

pub fn write_dataset<T: Scalar>(path: &Path, dataset: &ScenarioDataset<T>) -> Result<()> {
    write_atomic(path, &dataset_to_csv(dataset))
}

pub fn load_dataset<T: Scalar>(path: &Path, q0: T, stroke: T) -> Result<ScenarioDataset<T>> {
    dataset_from_csv(&fs::read_to_string(path)?, q0, stroke)
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf29ce484222325;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(0x100000001b3);
    }
    hash
}

/// Content-derived identity tag of a dataset, used to detect training /
/// validation leakage independently of file names.
pub fn dataset_tag<T: Scalar>(dataset: &ScenarioDataset<T>) -> String {
    format!("{:016x}", fnv1a64(dataset_to_csv(dataset).as_bytes()))
}

/// A raw, possibly non-uniformly sampled channel prior to grid alignment.
#[derive(Clone, Debug, PartialEq)]
pub struct RawChannel<T> {
    pub kind: ChannelKind,
    pub unit: Unit,
    pub time: Vec<T>,
    pub values: Vec<T>,
    pub valid: Vec<bool>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ChannelKind {
    /// Rod displacement, `q_mm`.
    Displacement,
    /// Measured thermal expansion, `dq_um`.
    Expansion,
    /// Relative sensor temperature, `dTnn_K`.
    Temperature(SensorId),
}

fn channel_kind(name: &str) -> Result<(ChannelKind, Unit)> {
    match name {
        "q_mm" => Ok((ChannelKind::Displacement, Unit::Millimetre)),
        "dq_um" => Ok((ChannelKind::Expansion, Unit::Micrometre)),
        _ => {
            if let Some(rest) = name.strip_prefix("dT").and_then(|r| r.strip_suffix("_K")) {
                let id: u16 = rest
                    .parse()
                    .map_err(|_| Error::UnknownColumn(name.to_string()))?;
                if id == 0 {
                    return Err(Error::UnknownColumn(name.to_string()));
                }
                return Ok((ChannelKind::Temperature(SensorId(id)), Unit::Kelvin));
            }
            Err(Error::UnknownColumn(name.to_string()))
        }
    }
}

/// Parses one raw-channel CSV: `time_s,<channel>[,<channel>...][,valid]`.
///
/// All channels in one file share that file's time base; multi-rate data
/// lives in separate files. Timestamps must be strictly increasing.
pub fn parse_raw_channels<T: Scalar>(text: &str) -> Result<Vec<RawChannel<T>>> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::Csv { line: 1, msg: "empty file".into() })?;
    let fields: Vec<&str> = header.trim_end_matches('\r').split(',').collect();
    if fields.first() != Some(&"time_s") {
        return Err(Error::Csv { line: 1, msg: "first column must be time_s".into() });
    }
    let has_valid = fields.last() == Some(&"valid");
    let channel_fields = &fields[1..fields.len() - usize::from(has_valid)];
    if channel_fields.is_empty() {
        return Err(Error::Csv { line: 1, msg: "no channel columns".into() });
    }
    let mut kinds = Vec::with_capacity(channel_fields.len());
    for name in channel_fields {
        kinds.push(channel_kind(name)?);
    }

    let mut time: Vec<T> = Vec::new();
    let mut valid: Vec<bool> = Vec::new();
    let mut columns: Vec<Vec<T>> = vec![Vec::new(); kinds.len()];
    for (idx, line) in lines {
        let line = line.trim_end_matches('\r');
        if line.is_empty() {
            continue;
        }
        let row = idx + 1;
        let cells: Vec<&str> = line.split(',').collect();
        if cells.len() != fields.len() {
            return Err(Error::Csv {
                line: row,
                msg: format!("expected {} cells, found {}", fields.len(), cells.len()),
            });
        }
        let parse = |cell: &str| -> Result<T> {
            cell.parse::<T>()
                .map_err(|e| Error::Csv { line: row, msg: format!("bad value `{cell}`: {e}") })
        };
        let t = parse(cells[0])?;
        if let Some(&prev) = time.last() {
            if t <= prev {
                return Err(Error::NonMonotonicTime { row });
            }
        }
        time.push(t);
        valid.push(if has_valid {
            match *cells.last().unwrap() {
                "0" => false,
                "1" => true,
                other => {
                    return Err(Error::Csv {
                        line: row,
                        msg: format!("bad valid flag `{other}`"),
                    })
                }
            }
        } else {
            true
        });
        for (c, cell) in cells[1..1 + kinds.len()].iter().enumerate() {
            columns[c].push(parse(cell)?);
        }
    }
    if time.is_empty() {
        return Err(Error::Csv { line: 2, msg: "no samples".into() });
    }

    Ok(kinds
        .into_iter()
        .zip(columns)
        .map(|((kind, unit), values)| RawChannel {
            kind,
            unit,
            time: time.clone(),
            values,
            valid: valid.clone(),
        })
        .collect())
}

/// Loads raw channels from one or more CSV files, rejecting duplicates.
pub fn load_raw_channels<T: Scalar>(paths: &[impl AsRef<Path>]) -> Result<Vec<RawChannel<T>>> {
    let mut channels: Vec<RawChannel<T>> = Vec::new();
    for path in paths {
        for channel in parse_raw_channels(&fs::read_to_string(path.as_ref())?)? {
            if channels.iter().any(|c| c.kind == channel.kind) {
                return Err(match channel.kind {
                    ChannelKind::Temperature(id) => Error::DuplicateSensor(id.0),
                    ChannelKind::Displacement => Error::UnknownColumn("duplicate q_mm".into()),
                    ChannelKind::Expansion => Error::UnknownColumn("duplicate dq_um".into()),
                });
            }
            channels.push(channel);
        }
    }
    Ok(channels)
}

/// Linear interpolation of a raw channel at grid time `t`.
///
/// A grid point is valid only when the samples it interpolates between are
/// valid; an exact hit inherits that single sample's flag.
fn interpolate<T: Scalar>(channel: &RawChannel<T>, t: T, cursor: &mut usize) -> (T, bool) {
    let time = &channel.time;
    while *cursor + 1 < time.len() && time[*cursor + 1] <= t {
        *cursor += 1;
    }
    let i = *cursor;
    if time[i] == t || i + 1 == time.len() {
        return (channel.values[i], channel.valid[i]);
    }
    let (t0, t1) = (time[i], time[i + 1]);
    let frac = (t - t0) / (t1 - t0);
    let value = channel.values[i] + (channel.values[i + 1] - channel.values[i]) * frac;
    (value, channel.valid[i] && channel.valid[i + 1])
}

/// Resamples raw channels onto a uniform grid over their common time window
/// and applies the zero reference at the first jointly-valid grid sample.
///
/// Validity is conjunctive: a grid sample is valid only if every channel is
/// valid there. The q channel is absolute and is not shifted.
pub fn align_and_zero<T: Scalar>(
    channels: &[RawChannel<T>],
    grid_dt: T,
    q0: T,
    stroke: T,
) -> Result<ScenarioDataset<T>> {
    if !(grid_dt > T::zero()) {
        return Err(Error::InvalidInput("grid dt must be positive".into()));
    }
    let mut displacement = None;
    let mut expansion = None;
    let mut temperatures: Vec<(&RawChannel<T>, SensorId)> = Vec::new();
    for channel in channels {
        match channel.kind {
            ChannelKind::Displacement => displacement = Some(channel),
            ChannelKind::Expansion => expansion = Some(channel),
            ChannelKind::Temperature(id) => temperatures.push((channel, id)),
        }
    }
    let displacement =
        displacement.ok_or_else(|| Error::InvalidInput("missing q_mm channel".into()))?;
    let expansion =
        expansion.ok_or_else(|| Error::InvalidInput("missing dq_um channel".into()))?;
    if temperatures.is_empty() {
        return Err(Error::InvalidInput("at least one temperature channel is required".into()));
    }
    temperatures.sort_by_key(|(_, id)| *id);
    for (k, (_, id)) in temperatures.iter().enumerate() {
        if id.index() != k {
            return Err(Error::InvalidInput(format!(
                "temperature channels must be numbered 1..N without gaps; found sensor {id}"
            )));
        }
    }

    let start = channels
        .iter()
        .map(|c| c.time[0])
        .fold(T::neg_infinity(), T::max);
    let end = channels
        .iter()
        .map(|c| *c.time.last().expect("non-empty channel"))
        .fold(T::infinity(), T::min);
    if end < start {
        return Err(Error::EmptyOverlap);
    }
    let n = ((end - start) / grid_dt)
        .floor()
        .to_usize()
        .ok_or(Error::EmptyOverlap)?
        + 1;

    let ordered: Vec<&RawChannel<T>> = std::iter::once(displacement)
        .chain(std::iter::once(expansion))
        .chain(temperatures.iter().map(|(c, _)| *c))
        .collect();
    let mut cursors = vec![0usize; ordered.len()];
    let mut grid: Vec<Vec<T>> = vec![Vec::with_capacity(n); ordered.len()];
    let mut time = Vec::with_capacity(n);
    let mut valid = vec![true; n];
    for k in 0..n {
        let t = start + grid_dt * crate::scalar::convert::<T>(k as f64);
        time.push(t - start);
        for (c, channel) in ordered.iter().enumerate() {
            let (value, ok) = interpolate(channel, t, &mut cursors[c]);
            grid[c].push(value);
            valid[k] = valid[k] && ok;
        }
    }

    let fv = valid.iter().position(|&v| v).ok_or(Error::AllInvalid)?;
    let q = grid[0].clone();
    let dq_shift = grid[1][fv];
    let dq: Vec<T> = grid[1].iter().map(|&v| v - dq_shift).collect();
    let delta_t: Vec<Vec<T>> = grid[2..]
        .iter()
        .map(|col| {
            let shift = col[fv];
            col.iter().map(|&v| v - shift).collect()
        })
        .collect();

    ScenarioDataset::new(time, q, delta_t, dq, valid, q0, stroke)
}

/// Model JSON document: the identified model plus fit provenance. The
/// training tags let validation refuse leaked datasets.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(bound = "T: Scalar")]
pub struct ModelDocument<T> {
    pub config: SensorConfig,
    pub coefficients: Vec<CoeffEntry<T>>,
    pub q0_mm: T,
    #[serde(default)]
    pub training_tags: Vec<String>,
    #[serde(default)]
    pub outlier_c: Option<T>,
    #[serde(default)]
    pub n_outliers_removed: usize,
}

impl<T: Scalar> ModelDocument<T> {
    pub fn new(
        model: &ExpansionModel<T>,
        training_tags: Vec<String>,
        outlier_c: Option<T>,
        n_outliers_removed: usize,
    ) -> Self {
        let coefficients = model
            .config()
            .sensors()
            .into_iter()
            .zip(model.coeffs())
            .map(|(sensor, c)| CoeffEntry {
                sensor,
                a_um_per_mm_k: c.a,
                b_um_per_mm_k: c.b,
            })
            .collect();
        Self {
            config: model.config(),
            coefficients,
            q0_mm: model.q0(),
            training_tags,
            outlier_c,
            n_outliers_removed,
        }
    }

    pub fn to_model(&self) -> Result<ExpansionModel<T>> {
        let json = serde_json::to_string(self)?;
        Ok(serde_json::from_str(&json)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulator::{
        default_gain, default_tau, generate_motion, simulate_scenario, Phase, ScenarioSpec,
        ThermalPlantSpec,
    };
    use crate::types::{SensorCoeffs, SensorConfig};

    fn sim_dataset(seed: u64) -> ScenarioDataset<f64> {
        let spec = ScenarioSpec {
            phases: vec![Phase::rest(20.0), Phase::movement(60.0, 120.0), Phase::rest(100.0)],
            increment: 10.0,
            stabilization_window: 5.0,
            sample_dt: 1.0,
            move_speed: 5.0,
        };
        let plant = ThermalPlantSpec {
            n_sensors: 3,
            tau: default_tau(3),
            gain: default_gain(3),
            ambient_amplitude: 0.0,
            ambient_rate_cap: 1.0,
            true_model: ExpansionModel::new(
                SensorConfig::pair(SensorId(1), SensorId(3)).unwrap(),
                vec![SensorCoeffs { a: 1.2e-3, b: 0.6e-3 }, SensorCoeffs { a: 0.7e-3, b: 0.2e-3 }],
                500.0,
            )
            .unwrap(),
            beam_sigma: 0.05,
            beam_offsets: [0.1, -0.2, 0.05],
        };
        simulate_scenario(&spec, &plant, 250.0, seed).unwrap()
    }

    #[test]
    fn dataset_csv_round_trips_bit_exactly() {
        let ds = sim_dataset(11);
        let text = dataset_to_csv(&ds);
        assert!(text.starts_with("time_s,q_mm,valid,dq_um,dT01_K,dT02_K,dT03_K\n"));
        let back = dataset_from_csv::<f64>(&text, ds.q0(), 250.0).unwrap();
        assert_eq!(ds, back);
        assert_eq!(dataset_tag(&ds), dataset_tag(&back));
    }

    #[test]
    fn tag_changes_with_content() {
        let a = sim_dataset(11);
        let b = sim_dataset(12);
        assert_ne!(dataset_tag(&a), dataset_tag(&b));
    }

    #[test]
    fn csv_rejects_malformed_input() {
        assert!(matches!(
            dataset_from_csv::<f64>("time_s,q_mm\n", 500.0, 250.0),
            Err(Error::Csv { .. })
        ));
        let bad_unit = "time_s,q_mm,valid,dq_um,dT01_C\n0,0,1,0,0\n";
        assert!(matches!(
            dataset_from_csv::<f64>(bad_unit, 500.0, 250.0),
            Err(Error::UnknownColumn(_))
        ));
        let backwards = "time_s,q_mm,valid,dq_um,dT01_K\n0,0,1,0,0\n0,0,1,0,0\n";
        assert!(matches!(
            dataset_from_csv::<f64>(backwards, 500.0, 250.0),
            Err(Error::NonMonotonicTime { row: 3 })
        ));
    }

    #[test]
    fn raw_channels_parse_and_reject_duplicates() {
        let text = "time_s,q_mm,dT01_K,valid\n0,0,0.5,1\n1,10,0.75,0\n";
        let channels = parse_raw_channels::<f64>(text).unwrap();
        assert_eq!(channels.len(), 2);
        assert_eq!(channels[0].kind, ChannelKind::Displacement);
        assert_eq!(channels[1].kind, ChannelKind::Temperature(SensorId(1)));
        assert_eq!(channels[1].valid, vec![true, false]);

        assert!(matches!(
            parse_raw_channels::<f64>("time_s,dT00_K\n0,1\n"),
            Err(Error::UnknownColumn(_))
        ));
    }

    #[test]
    fn on_grid_channels_pass_through_except_zero_shift() {
        let time: Vec<f64> = (0..5).map(|k| k as f64).collect();
        let channels = vec![
            RawChannel {
                kind: ChannelKind::Displacement,
                unit: Unit::Millimetre,
                time: time.clone(),
                values: vec![0.0, 10.0, 20.0, 20.0, 20.0],
                valid: vec![true; 5],
            },
            RawChannel {
                kind: ChannelKind::Expansion,
                unit: Unit::Micrometre,
                time: time.clone(),
                values: vec![0.25, 0.5, 0.75, 1.0, 1.25],
                valid: vec![true; 5],
            },
            RawChannel {
                kind: ChannelKind::Temperature(SensorId(1)),
                unit: Unit::Kelvin,
                time,
                values: vec![5.0, 5.5, 6.0, 6.5, 7.0],
                valid: vec![true; 5],
            },
        ];
        let ds = align_and_zero(&channels, 1.0, 500.0, 250.0).unwrap();
        assert_eq!(ds.q(), &[0.0, 10.0, 20.0, 20.0, 20.0]);
        assert_eq!(ds.dq_measured(), &[0.0, 0.25, 0.5, 0.75, 1.0]);
        assert_eq!(ds.delta_t(SensorId(1)).unwrap(), &[0.0, 0.5, 1.0, 1.5, 2.0]);
    }

    #[test]
    fn upsampling_interpolates_midpoints() {
        // 1 Hz channel on a 0.5 s grid: midpoint samples are the means of
        // their neighbours.
        let channels = vec![
            RawChannel {
                kind: ChannelKind::Displacement,
                unit: Unit::Millimetre,
                time: vec![0.0, 1.0, 2.0],
                values: vec![0.0, 10.0, 30.0],
                valid: vec![true; 3],
            },
            RawChannel {
                kind: ChannelKind::Expansion,
                unit: Unit::Micrometre,
                time: vec![0.0, 1.0, 2.0],
                values: vec![1.0, 2.0, 4.0],
                valid: vec![true; 3],
            },
            RawChannel {
                kind: ChannelKind::Temperature(SensorId(1)),
                unit: Unit::Kelvin,
                time: vec![0.0, 1.0, 2.0],
                values: vec![0.0, 1.0, 1.5],
                valid: vec![true; 3],
            },
        ];
        let ds = align_and_zero(&channels, 0.5, 500.0, 250.0).unwrap();
        assert_eq!(ds.n_samples(), 5);
        assert_eq!(ds.q(), &[0.0, 5.0, 10.0, 20.0, 30.0]);
        assert_eq!(ds.dq_measured(), &[0.0, 0.5, 1.0, 2.0, 3.0]);
    }

    #[test]
    fn constant_offsets_vanish_after_zero_referencing() {
        // Dyadic values keep the +5 K shift exact in binary floating point,
        // so the two ingests must agree bit for bit.
        let time: Vec<f64> = (0..8).map(|k| k as f64 * 0.5).collect();
        let temps: Vec<f64> = (0..8).map(|k| k as f64 * 0.25).collect();
        let shifted: Vec<f64> = temps.iter().map(|t| t + 5.0).collect();
        let build = |values: Vec<f64>| {
            vec![
                RawChannel {
                    kind: ChannelKind::Displacement,
                    unit: Unit::Millimetre,
                    time: time.clone(),
                    values: vec![0.0; 8],
                    valid: vec![true; 8],
                },
                RawChannel {
                    kind: ChannelKind::Expansion,
                    unit: Unit::Micrometre,
                    time: time.clone(),
                    values: (0..8).map(|k| k as f64 * 0.125).collect(),
                    valid: vec![true; 8],
                },
                RawChannel {
                    kind: ChannelKind::Temperature(SensorId(1)),
                    unit: Unit::Kelvin,
                    time: time.clone(),
                    values,
                    valid: vec![true; 8],
                },
            ]
        };
        let base = align_and_zero(&build(temps), 0.5, 500.0, 250.0).unwrap();
        let offset = align_and_zero(&build(shifted), 0.5, 500.0, 250.0).unwrap();
        assert_eq!(base, offset);
    }

    #[test]
    fn alignment_is_idempotent() {
        let ds = sim_dataset(21);
        let to_channels = |ds: &ScenarioDataset<f64>| {
            let mut channels = vec![
                RawChannel {
                    kind: ChannelKind::Displacement,
                    unit: Unit::Millimetre,
                    time: ds.time().to_vec(),
                    values: ds.q().to_vec(),
                    valid: ds.valid().to_vec(),
                },
                RawChannel {
                    kind: ChannelKind::Expansion,
                    unit: Unit::Micrometre,
                    time: ds.time().to_vec(),
                    values: ds.dq_measured().to_vec(),
                    valid: ds.valid().to_vec(),
                },
            ];
            for (s, col) in ds.delta_t_columns().iter().enumerate() {
                channels.push(RawChannel {
                    kind: ChannelKind::Temperature(SensorId(s as u16 + 1)),
                    unit: Unit::Kelvin,
                    time: ds.time().to_vec(),
                    values: col.clone(),
                    valid: ds.valid().to_vec(),
                });
            }
            channels
        };
        let once = align_and_zero(&to_channels(&ds), 1.0, ds.q0(), 250.0).unwrap();
        let twice = align_and_zero(&to_channels(&once), 1.0, ds.q0(), 250.0).unwrap();
        assert_eq!(once, twice);
    }

    #[test]
    fn disjoint_channels_are_an_empty_overlap() {
        let a = RawChannel::<f64> {
            kind: ChannelKind::Displacement,
            unit: Unit::Millimetre,
            time: vec![0.0, 1.0],
            values: vec![0.0, 0.0],
            valid: vec![true; 2],
        };
        let b = RawChannel::<f64> {
            kind: ChannelKind::Expansion,
            unit: Unit::Micrometre,
            time: vec![5.0, 6.0],
            values: vec![0.0, 0.0],
            valid: vec![true; 2],
        };
        let c = RawChannel::<f64> {
            kind: ChannelKind::Temperature(SensorId(1)),
            unit: Unit::Kelvin,
            time: vec![0.0, 6.0],
            values: vec![0.0, 0.0],
            valid: vec![true; 2],
        };
        let err = align_and_zero(&[a, b, c], 1.0, 500.0, 250.0).unwrap_err();
        assert!(matches!(err, Error::EmptyOverlap));
    }

    #[test]
    fn model_document_round_trips() {
        let model = ExpansionModel::new(
            SensorConfig::single(SensorId(7)),
            vec![SensorCoeffs { a: 1.99e-3, b: 1.09e-3 }],
            500.0,
        )
        .unwrap();
        let doc = ModelDocument::new(&model, vec!["abc".into()], Some(5.0), 2);
        let json = to_json_pretty(&doc).unwrap();
        let back: ModelDocument<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(back.to_model().unwrap(), model);
        assert_eq!(back.training_tags, vec!["abc".to_string()]);

        // A plain model JSON (no provenance) also deserializes as a model.
        let bare: ExpansionModel<f64> = serde_json::from_str(&json).unwrap();
        assert_eq!(bare, model);
    }

    #[test]
    fn atomic_write_replaces_whole_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.json");
        write_atomic(&path, "{\"a\":1}\n").unwrap();
        write_atomic(&path, "{\"a\":2}\n").unwrap();
        assert_eq!(fs::read_to_string(&path).unwrap(), "{\"a\":2}\n");
    }

    #[test]
    fn motion_profile_survives_grid_alignment() {
        let spec = ScenarioSpec {
            phases: vec![Phase::rest(10.0), Phase::movement(20.0, 30.0), Phase::rest(20.0)],
            increment: 10.0,
            stabilization_window: 5.0,
            sample_dt: 0.5,
            move_speed: 5.0,
        };
        let motion = generate_motion(&spec, 250.0).unwrap();
        assert!(motion.setpoint.valid().iter().any(|&v| !v));
    }
}
