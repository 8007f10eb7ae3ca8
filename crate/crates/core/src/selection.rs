//! Exhaustive sensor-configuration ranking and Pareto front extraction.
//!
//! All singles and unordered pairs are fitted — `n(n−1)/2 + n` regressions —
//! and their RMSE / L∞ scores fill two symmetric n×n matrices with the
//! single-sensor results on the diagonal. The nondominated subset over the
//! two criteria is the Pareto front.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::regression::{fit, OutlierPolicy};
use crate::scalar::Scalar;
use crate::types::{ScenarioDataset, SensorConfig, SensorId};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CellStatus {
    Ok,
    Degenerate,
}

/// Symmetric n×n criteria matrices over all sensor configurations.
///
/// Cell `(i, j)` with `i ≠ j` holds the pair result, the diagonal holds the
/// singles. Degenerate configurations carry NaN scores and are excluded
/// from the Pareto front.
#[derive(Clone, Debug)]
pub struct CriteriaMatrices<T> {
    n: usize,
    rmse: Vec<T>,
    linf: Vec<T>,
    status: Vec<CellStatus>,
    n_fits: usize,
}

impl<T: Scalar> CriteriaMatrices<T> {
    /// Builds matrices from externally computed cells (row-major, n×n).
    /// Mirror cells must agree in status and, where usable, in value.
    pub fn from_parts(
        n: usize,
        rmse: Vec<T>,
        linf: Vec<T>,
        status: Vec<CellStatus>,
        n_fits: usize,
    ) -> Result<Self> {
        if rmse.len() != n * n || linf.len() != n * n || status.len() != n * n {
            return Err(Error::LengthMismatch(format!(
                "criteria matrices must hold {0}×{0} cells",
                n
            )));
        }
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (i * n + j, j * n + i);
                let symmetric = status[a] == status[b]
                    && (status[a] != CellStatus::Ok || (rmse[a] == rmse[b] && linf[a] == linf[b]));
                if !symmetric {
                    return Err(Error::InvalidInput(format!(
                        "criteria matrices must be symmetric; cells ({i},{j}) and ({j},{i}) differ"
                    )));
                }
            }
        }
        Ok(Self { n, rmse, linf, status, n_fits })
    }

    pub fn n_sensors(&self) -> usize {
        self.n
    }

    /// Number of regressions executed to fill the matrices.
    pub fn n_fits(&self) -> usize {
        self.n_fits
    }

    pub fn rmse(&self, i: usize, j: usize) -> T {
        self.rmse[i * self.n + j]
    }

    pub fn linf(&self, i: usize, j: usize) -> T {
        self.linf[i * self.n + j]
    }

    pub fn status(&self, i: usize, j: usize) -> CellStatus {
        self.status[i * self.n + j]
    }

    fn config_at(&self, i: usize, j: usize) -> SensorConfig {
        let a = SensorId(i as u16 + 1);
        let b = SensorId(j as u16 + 1);
        if i == j {
            SensorConfig::single(a)
        } else {
            SensorConfig::pair(a, b).expect("i != j")
        }
    }

    /// Unique cells `(i ≤ j)` in deterministic order.
    pub fn cells(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n).flat_map(move |i| (i..self.n).map(move |j| (i, j)))
    }

    /// Best single sensor (lowest RMSE diagonal cell), if any is usable.
    pub fn best_single(&self) -> Option<(SensorConfig, T, T)> {
        (0..self.n)
            .filter(|&i| self.status(i, i) == CellStatus::Ok)
            .map(|i| (self.config_at(i, i), self.rmse(i, i), self.linf(i, i)))
            .min_by(|a, b| a.1.partial_cmp(&b.1).expect("finite rmse"))
    }
}

/// Fits every single and every unordered pair on `dataset`.
///
/// Per-cell failures (rank-deficient designs, cold sensors) are recorded as
/// degenerate rather than aborting the scan. Both mirror cells are written
/// from the same fit, so the matrices are symmetric bit for bit.
pub fn rank_all<T: Scalar>(
    dataset: &ScenarioDataset<T>,
    policy: &OutlierPolicy<T>,
) -> Result<CriteriaMatrices<T>> {
    let n = dataset.n_sensors();
    if n == 0 {
        return Err(Error::InvalidInput("dataset has no temperature sensors".into()));
    }
    let mut matrices = CriteriaMatrices {
        n,
        rmse: vec![T::nan(); n * n],
        linf: vec![T::nan(); n * n],
        status: vec![CellStatus::Degenerate; n * n],
        n_fits: 0,
    };
    for i in 0..n {
        for j in i..n {
            let config = matrices.config_at(i, j);
            matrices.n_fits += 1;
            if let Ok((_, report)) = fit(dataset, &config, policy) {
                for idx in [i * n + j, j * n + i] {
                    matrices.rmse[idx] = report.rmse();
                    matrices.linf[idx] = report.linf();
                    matrices.status[idx] = CellStatus::Ok;
                }
            }
        }
    }
    Ok(matrices)
}

/// One nondominated configuration with its two scores.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ParetoEntry<T> {
    pub config: SensorConfig,
    pub label: String,
    #[serde(rename = "rmse_um")]
    pub rmse: T,
    #[serde(rename = "linf_um")]
    pub linf: T,
}

/// Pareto front over (RMSE, L∞), sorted by RMSE ascending. Configurations
/// tied on both criteria are all kept.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct ParetoResult<T> {
    pub front: Vec<ParetoEntry<T>>,
    pub dominated_count: usize,
}

/// Extracts the nondominated set from the usable cells of `matrices`.
///
/// Sort-and-sweep: after ordering by (rmse, linf), a group of candidates
/// sharing one rmse survives iff its minimal linf improves on every
/// strictly-better-rmse candidate seen so far; within the group exactly the
/// minimal-linf members survive (ties on both criteria are kept).
pub fn pareto_front<T: Scalar>(matrices: &CriteriaMatrices<T>) -> Result<ParetoResult<T>> {
    let mut candidates: Vec<(T, T, SensorConfig)> = matrices
        .cells()
        .filter(|&(i, j)| matrices.status(i, j) == CellStatus::Ok)
        .map(|(i, j)| (matrices.rmse(i, j), matrices.linf(i, j), matrices.config_at(i, j)))
        .collect();
    if candidates.is_empty() {
        return Err(Error::EmptyFront);
    }
    candidates.sort_by(|a, b| {
        (a.0, a.1)
            .partial_cmp(&(b.0, b.1))
            .expect("finite criteria")
    });

    let mut front = Vec::new();
    let mut best_linf = T::infinity();
    let mut idx = 0;
    while idx < candidates.len() {
        let rmse = candidates[idx].0;
        let mut group_end = idx;
        while group_end < candidates.len() && candidates[group_end].0 == rmse {
            group_end += 1;
        }
        let group_min_linf = candidates[idx].1; // sorted by linf within the group
        if group_min_linf < best_linf {
            for &(r, l, config) in &candidates[idx..group_end] {
                if l == group_min_linf {
                    front.push(ParetoEntry { config, label: config.label(), rmse: r, linf: l });
                }
            }
            best_linf = group_min_linf;
        }
        idx = group_end;
    }

    let dominated_count = candidates.len() - front.len();
    Ok(ParetoResult { front, dominated_count })
}

/// Min-max normalization of a criteria matrix into [0, 1] for display.
/// Degenerate cells map to the NaN sentinel (null in JSON exports).
pub fn normalize_for_display<T: Scalar>(matrices: &CriteriaMatrices<T>, linf: bool) -> Vec<T> {
    let source = if linf { &matrices.linf } else { &matrices.rmse };
    let ok: Vec<T> = source
        .iter()
        .zip(&matrices.status)
        .filter_map(|(&v, &s)| (s == CellStatus::Ok).then_some(v))
        .collect();
    let (lo, hi) = ok.iter().fold((T::infinity(), T::neg_infinity()), |(lo, hi), &v| {
        (lo.min(v), hi.max(v))
    });
    let span = hi - lo;
    source
        .iter()
        .zip(&matrices.status)
        .map(|(&v, &s)| {
            if s != CellStatus::Ok {
                T::nan()
            } else if span > T::zero() {
                (v - lo) / span
            } else {
                T::zero()
            }
        })
        .collect()
}

/// JSON export of the matrices: raw and normalized criteria (null for
/// degenerate cells) plus the per-cell status.
#[derive(Clone, Debug, Serialize)]
#[serde(bound = "T: Scalar")]
pub struct CriteriaDocument<T> {
    pub n_sensors: usize,
    pub n_fits: usize,
    pub rmse_um: Vec<Vec<Option<T>>>,
    pub linf_um: Vec<Vec<Option<T>>>,
    pub rmse_norm: Vec<Vec<Option<T>>>,
    pub linf_norm: Vec<Vec<Option<T>>>,
    pub status: Vec<Vec<CellStatus>>,
}

impl<T: Scalar> CriteriaMatrices<T> {
    pub fn to_document(&self) -> CriteriaDocument<T> {
        let n = self.n;
        let rows = |flat: &[T]| -> Vec<Vec<Option<T>>> {
            (0..n)
                .map(|i| {
                    (0..n)
                        .map(|j| {
                            let v = flat[i * n + j];
                            v.is_finite().then_some(v)
                        })
                        .collect()
                })
                .collect()
        };
        CriteriaDocument {
            n_sensors: n,
            n_fits: self.n_fits,
            rmse_um: rows(&self.rmse),
            linf_um: rows(&self.linf),
            rmse_norm: rows(&normalize_for_display(self, false)),
            linf_norm: rows(&normalize_for_display(self, true)),
            status: (0..n)
                .map(|i| (0..n).map(|j| self.status(i, j)).collect())
                .collect(),
        }
    }

    /// Plot-ready CSV, one unique cell per row. Degenerate cells leave
    /// their value fields empty.
    pub fn cells_csv(&self) -> String {
        let rmse_norm = normalize_for_display(self, false);
        let linf_norm = normalize_for_display(self, true);
        let mut out = String::from("i,j,rmse_um,linf_um,rmse_norm,linf_norm,status\n");
        for (i, j) in self.cells() {
            let idx = i * self.n + j;
            let field = |v: T| if v.is_finite() { format!("{v}") } else { String::new() };
            out.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                i + 1,
                j + 1,
                field(self.rmse[idx]),
                field(self.linf[idx]),
                field(rmse_norm[idx]),
                field(linf_norm[idx]),
                match self.status[idx] {
                    CellStatus::Ok => "ok",
                    CellStatus::Degenerate => "degenerate",
                },
            ));
        }
        out
    }
}
