//! Small dense least-squares solver.
//!
//! The designs here are tall and narrow (p samples, at most 4 columns) but
//! can be badly conditioned: the `q0·ΔT` and `q·ΔT` columns of one sensor
//! are strongly correlated whenever the rod barely moves. The solver
//! therefore uses a column-pivoted Householder QR instead of normal
//! equations, which would square the condition number.

use crate::scalar::Scalar;

/// Row-major dense matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DesignMatrix<T> {
    data: Vec<T>,
    rows: usize,
    cols: usize,
}

impl<T: Scalar> DesignMatrix<T> {
    pub fn from_rows(rows: Vec<Vec<T>>) -> Self {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        debug_assert!(rows.iter().all(|r| r.len() == n_cols));
        let data = rows.into_iter().flatten().collect();
        Self { data, rows: n_rows, cols: n_cols }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn at(&self, r: usize, c: usize) -> T {
        self.data[r * self.cols + c]
    }

    pub fn row(&self, r: usize) -> &[T] {
        &self.data[r * self.cols..(r + 1) * self.cols]
    }

    /// `X·beta`.
    pub fn apply(&self, beta: &[T]) -> Vec<T> {
        debug_assert_eq!(beta.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                self.row(r)
                    .iter()
                    .zip(beta)
                    .fold(T::zero(), |acc, (&x, &b)| acc + x * b)
            })
            .collect()
    }

    /// Keeps only the rows whose index satisfies `keep`.
    pub fn filter_rows(&self, keep: &[bool]) -> Self {
        debug_assert_eq!(keep.len(), self.rows);
        let rows = (0..self.rows)
            .filter(|&r| keep[r])
            .map(|r| self.row(r).to_vec())
            .collect();
        Self::from_rows(rows)
    }

    fn at_mut(&mut self, r: usize, c: usize) -> &mut T {
        &mut self.data[r * self.cols + c]
    }
}

/// Least-squares solution with a condition estimate from the pivoted R
/// diagonal (`|r₀₀| / |r_kk|`, a lower bound on the true κ₂).
#[derive(Clone, Debug)]
pub struct Lstsq<T> {
    pub coeffs: Vec<T>,
    pub condition_estimate: T,
}

/// Column indices (in the original order) found to be collinear.
#[derive(Clone, Debug)]
pub struct RankDeficiency {
    pub columns: Vec<usize>,
}

/// Solves `min ‖X·beta − y‖₂` by column-pivoted Householder QR.
///
/// Columns whose pivot norm falls below `|r₀₀| / cond_threshold` mark the
/// design rank-deficient; the offending original column indices are
/// returned so callers can name them. Requires `rows ≥ cols ≥ 1`.
pub fn solve_lstsq<T: Scalar>(
    x: &DesignMatrix<T>,
    y: &[T],
    cond_threshold: T,
) -> Result<Lstsq<T>, RankDeficiency> {
    let (m, k) = (x.rows(), x.cols());
    debug_assert!(k >= 1 && m >= k && y.len() == m);

    let mut a = x.clone();
    let mut qty = y.to_vec();
    let mut perm: Vec<usize> = (0..k).collect();
    let mut r_diag = vec![T::zero(); k];

    for step in 0..k {
        // Column norms are recomputed from scratch each step; with at most
        // four columns this costs nothing and avoids downdating error.
        let mut pivot = step;
        let mut best = T::zero();
        for c in step..k {
            let norm_sq = (step..m).fold(T::zero(), |acc, r| {
                let v = a.at(r, c);
                acc + v * v
            });
            if norm_sq > best {
                best = norm_sq;
                pivot = c;
            }
        }
        if pivot != step {
            for r in 0..m {
                let tmp = a.at(r, step);
                *a.at_mut(r, step) = a.at(r, pivot);
                *a.at_mut(r, pivot) = tmp;
            }
            perm.swap(step, pivot);
        }

        let norm = best.sqrt();
        let deficient = if step == 0 {
            norm == T::zero()
        } else {
            norm < r_diag[0].abs() / cond_threshold
        };
        if deficient {
            let mut columns: Vec<usize> = perm[step..].to_vec();
            columns.sort_unstable();
            return Err(RankDeficiency { columns });
        }

        // Householder reflector for column `step`, rows step..m.
        let x0 = a.at(step, step);
        let alpha = if x0 >= T::zero() { -norm } else { norm };
        let mut v: Vec<T> = (step..m).map(|r| a.at(r, step)).collect();
        v[0] -= alpha;
        let v_norm_sq = v.iter().fold(T::zero(), |acc, &e| acc + e * e);

        if v_norm_sq > T::zero() {
            let two = T::one() + T::one();
            let beta = two / v_norm_sq;
            for c in step..k {
                let dot = (step..m).fold(T::zero(), |acc, r| acc + v[r - step] * a.at(r, c));
                let scale = beta * dot;
                for r in step..m {
                    let upd = a.at(r, c) - scale * v[r - step];
                    *a.at_mut(r, c) = upd;
                }
            }
            let dot = (step..m).fold(T::zero(), |acc, r| acc + v[r - step] * qty[r]);
            let scale = beta * dot;
            for r in step..m {
                qty[r] -= scale * v[r - step];
            }
        }
        *a.at_mut(step, step) = alpha;
        r_diag[step] = alpha;
    }

    // Back-substitution on R, then undo the column permutation.
    let mut beta_perm = vec![T::zero(); k];
    for i in (0..k).rev() {
        let mut acc = qty[i];
        for (j, &b) in beta_perm.iter().enumerate().skip(i + 1) {
            acc -= a.at(i, j) * b;
        }
        beta_perm[i] = acc / r_diag[i];
    }
    let mut coeffs = vec![T::zero(); k];
    for (slot, &col) in perm.iter().enumerate() {
        coeffs[col] = beta_perm[slot];
    }

    let condition_estimate = r_diag[0].abs() / r_diag[k - 1].abs();
    Ok(Lstsq { coeffs, condition_estimate })
}
