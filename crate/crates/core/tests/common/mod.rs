//! Shared helpers for the integration suites: independent oracles and the
//! synthetic testbench used by the paper-analogue checks.
#![allow(dead_code, clippy::needless_range_loop)] // each test binary uses its own subset
//!
//! The oracles here deliberately avoid the library's solver paths: least
//! squares goes through normal equations plus Gaussian elimination, and the
//! Pareto oracle is the quadratic dominance scan.

use rand::Rng;
use thermdrift::selection::{CellStatus, CriteriaMatrices};
use thermdrift::simulator::{Phase, ScenarioSpec, ThermalPlantSpec};
use thermdrift::{ExpansionModel, SensorCoeffs, SensorConfig, SensorId};

pub const STROKE: f64 = 250.0;
pub const Q0: f64 = 500.0;

/// Least-squares oracle: normal equations `XᵀX β = Xᵀy` solved by Gaussian
/// elimination with partial pivoting.
pub fn lstsq_oracle(rows: &[Vec<f64>], y: &[f64]) -> Vec<f64> {
    let k = rows[0].len();
    let mut ata = vec![vec![0.0f64; k]; k];
    let mut aty = vec![0.0f64; k];
    for (row, &yi) in rows.iter().zip(y) {
        for i in 0..k {
            aty[i] += row[i] * yi;
            for j in 0..k {
                ata[i][j] += row[i] * row[j];
            }
        }
    }

    for col in 0..k {
        let pivot = (col..k)
            .max_by(|&a, &b| ata[a][col].abs().partial_cmp(&ata[b][col].abs()).unwrap())
            .unwrap();
        ata.swap(col, pivot);
        aty.swap(col, pivot);
        let diag = ata[col][col];
        assert!(diag != 0.0, "oracle given a singular system");
        for row in col + 1..k {
            let factor = ata[row][col] / diag;
            for j in col..k {
                ata[row][j] -= factor * ata[col][j];
            }
            aty[row] -= factor * aty[col];
        }
    }
    let mut beta = vec![0.0f64; k];
    for i in (0..k).rev() {
        let mut acc = aty[i];
        for j in i + 1..k {
            acc -= ata[i][j] * beta[j];
        }
        beta[i] = acc / ata[i][i];
    }
    beta
}

/// Pareto oracle: a candidate survives iff no other candidate dominates it
/// (≤ on both criteria, < on at least one).
pub fn pareto_oracle(candidates: &[(f64, f64)]) -> Vec<usize> {
    (0..candidates.len())
        .filter(|&i| {
            let (ri, li) = candidates[i];
            !candidates.iter().enumerate().any(|(j, &(rj, lj))| {
                j != i && rj <= ri && lj <= li && (rj < ri || lj < li)
            })
        })
        .collect()
}

/// Standard normal deviate for test data generation.
pub fn gauss(rng: &mut impl Rng) -> f64 {
    let u1: f64 = rng.random();
    let u2: f64 = rng.random();
    (-2.0 * (1.0 - u1).ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Random symmetric criteria matrices with quantized values (to force
/// ties) and a sprinkling of degenerate cells.
pub fn random_matrices(rng: &mut impl Rng, max_n: usize) -> CriteriaMatrices<f64> {
    let n = rng.random_range(1..=max_n);
    let mut rmse = vec![f64::NAN; n * n];
    let mut linf = vec![f64::NAN; n * n];
    let mut status = vec![CellStatus::Degenerate; n * n];
    for i in 0..n {
        for j in i..n {
            if rng.random::<f64>() < 0.15 {
                continue; // leave the cell degenerate
            }
            let r = rng.random_range(1..=6) as f64 * 0.5;
            let l = r + rng.random_range(0..=6) as f64 * 0.5;
            for idx in [i * n + j, j * n + i] {
                rmse[idx] = r;
                linf[idx] = l;
                status[idx] = CellStatus::Ok;
            }
        }
    }
    CriteriaMatrices::from_parts(n, rmse, linf, status, n * (n + 1) / 2).unwrap()
}

/// Dataset with curved per-sensor temperature profiles and an expansion
/// column generated exactly from the given coefficients.
pub fn synthetic_dataset(
    coeffs: &[(f64, f64)],
    n_sensors: usize,
    q0: f64,
    n: usize,
) -> thermdrift::ScenarioDataset<f64> {
    let time: Vec<f64> = (0..n).map(|k| k as f64).collect();
    let q: Vec<f64> = (0..n).map(|k| (k as f64 * 6.2) % 240.0).collect();
    let delta_t: Vec<Vec<f64>> = (0..n_sensors)
        .map(|s| {
            (0..n)
                .map(|k| {
                    let t = k as f64;
                    0.02 * t + 0.01 * (s as f64 + 1.0) * t * t / (t + 30.0)
                })
                .collect()
        })
        .collect();
    let dq: Vec<f64> = (0..n)
        .map(|k| {
            coeffs
                .iter()
                .enumerate()
                .map(|(s, &(a, b))| (a * q0 + b * q[k]) * delta_t[s][k])
                .sum()
        })
        .collect();
    thermdrift::ScenarioDataset::new(time, q, delta_t, dq, vec![true; n], q0, STROKE).unwrap()
}

pub fn pair(i: u16, j: u16) -> SensorConfig {
    SensorConfig::pair(SensorId(i), SensorId(j)).unwrap()
}

pub fn single(i: u16) -> SensorConfig {
    SensorConfig::single(SensorId(i))
}

/// The 17-sensor desk-scale plant: thermally dominant fast node 3 in the
/// lower block, slow node 14 in the upper block, mild background gains and
/// a slow ambient drift within the stabilized-room bounds.
pub fn desk_plant_17(beam_sigma: f64) -> ThermalPlantSpec<f64> {
    let n = 17;
    let mut tau = Vec::with_capacity(n);
    let mut gain = Vec::with_capacity(n);
    for k in 0..n {
        if k < 8 {
            // lower block: fast response near the drive train
            tau.push(200.0 + 50.0 * k as f64);
            gain.push(0.6 + 0.1 * k as f64);
        } else {
            // upper block: slow, weakly heated
            tau.push(1200.0 + 150.0 * (k - 8) as f64);
            gain.push(1.2 - 0.1 * (k - 8) as f64);
        }
    }
    tau[2] = 300.0;
    gain[2] = 5.0; // dominant lower node (sensor 3)
    tau[13] = 1800.0;
    gain[13] = 2.5; // dominant upper node (sensor 14)

    ThermalPlantSpec {
        n_sensors: n,
        tau,
        gain,
        ambient_amplitude: 0.3,
        ambient_rate_cap: 1.0,
        true_model: ExpansionModel::new(
            pair(3, 14),
            vec![
                SensorCoeffs { a: 1.1e-3, b: 0.9e-3 },
                SensorCoeffs { a: 0.9e-3, b: 0.4e-3 },
            ],
            Q0,
        )
        .unwrap(),
        beam_sigma,
        beam_offsets: [0.3, -0.2, 0.1],
    }
}

/// Alternating movement/rest scenario in one of eight layouts.
pub fn usage_scenario(style: usize) -> ScenarioSpec<f64> {
    let phases = match style % 8 {
        0 => vec![
            Phase::rest(120.0),
            Phase::movement(150.0, 300.0),
            Phase::rest(600.0),
            Phase::movement(30.0, 240.0),
            Phase::rest(500.0),
            Phase::movement(220.0, 380.0),
            Phase::rest(700.0),
        ],
        1 => vec![
            Phase::rest(60.0),
            Phase::movement(80.0, 160.0),
            Phase::rest(400.0),
            Phase::movement(200.0, 240.0),
            Phase::rest(800.0),
            Phase::movement(10.0, 380.0),
            Phase::rest(400.0),
        ],
        2 => vec![
            Phase::rest(180.0),
            Phase::movement(120.0, 240.0),
            Phase::rest(300.0),
            Phase::movement(240.0, 240.0),
            Phase::rest(900.0),
            Phase::movement(60.0, 360.0),
            Phase::rest(600.0),
        ],
        3 => vec![
            Phase::rest(90.0),
            Phase::movement(200.0, 400.0),
            Phase::rest(500.0),
            Phase::movement(100.0, 200.0),
            Phase::rest(450.0),
            Phase::movement(180.0, 160.0),
            Phase::rest(800.0),
        ],
        4 => vec![
            Phase::rest(150.0),
            Phase::movement(60.0, 120.0),
            Phase::rest(350.0),
            Phase::movement(160.0, 200.0),
            Phase::rest(600.0),
            Phase::movement(40.0, 240.0),
            Phase::rest(550.0),
        ],
        5 => vec![
            Phase::rest(70.0),
            Phase::movement(240.0, 480.0),
            Phase::rest(700.0),
            Phase::movement(120.0, 240.0),
            Phase::rest(650.0),
        ],
        6 => vec![
            Phase::rest(200.0),
            Phase::movement(90.0, 180.0),
            Phase::rest(250.0),
            Phase::movement(210.0, 240.0),
            Phase::rest(400.0),
            Phase::movement(150.0, 120.0),
            Phase::rest(750.0),
        ],
        _ => vec![
            Phase::rest(100.0),
            Phase::movement(170.0, 340.0),
            Phase::rest(550.0),
            Phase::movement(20.0, 300.0),
            Phase::rest(450.0),
            Phase::movement(130.0, 220.0),
            Phase::rest(500.0),
        ],
    };
    ScenarioSpec {
        phases,
        increment: 10.0,
        stabilization_window: 5.0,
        sample_dt: 1.0,
        move_speed: 5.0,
    }
}
