//! OLS estimation of the dyadic linear model.
//!
//! The model is `y_m = x_m'β + ε_m` over the `M` active dyads. The fit keeps
//! everything the sandwich variance estimators need downstream: the inverse
//! cross-product ("bread") matrix, the residuals, and the per-dyad score
//! vectors `ε̂_m · x_m`.
//!
//! Normal equations are solved through an eigendecomposition of `X'X` rather
//! than an explicit inverse; the same factorization yields the materialized
//! bread matrix and the conditioning check.

use crate::dyad::DyadId;
use crate::error::{Error, Result};
use nalgebra::{DMatrix, DVector};
use std::collections::HashMap;
use std::sync::Arc;

/// Default bound on the condition number of `X'X`.
pub const DEFAULT_MAX_CONDITION: f64 = 1e12;

/// Outcomes, design matrix, and dyad alignment for one regression.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionData {
    /// Length-`M` outcome vector.
    pub y: DVector<f64>,
    /// `M×K` design matrix.
    pub x: DMatrix<f64>,
    /// Dyad id of each row; a bijection onto `0..M` of the companion network.
    pub dyad_ids: Vec<DyadId>,
    /// Column names, length `K`.
    pub names: Vec<String>,
    /// Which column, if any, is the intercept.
    pub intercept_col: Option<usize>,
    /// Fixed-effect group of each row, when a grouped model is requested.
    pub group_ids: Option<Vec<i64>>,
}

impl RegressionData {
    /// Validates dimensions and finiteness.
    pub fn new(
        y: DVector<f64>,
        x: DMatrix<f64>,
        dyad_ids: Vec<DyadId>,
        names: Vec<String>,
        intercept_col: Option<usize>,
        group_ids: Option<Vec<i64>>,
    ) -> Result<Self> {
        let m = y.len();
        if x.nrows() != m || dyad_ids.len() != m {
            return Err(Error::InvalidData(format!(
                "row mismatch: y has {m}, X has {}, dyad ids {}",
                x.nrows(),
                dyad_ids.len()
            )));
        }
        if names.len() != x.ncols() {
            return Err(Error::InvalidData(format!(
                "{} column names for {} columns",
                names.len(),
                x.ncols()
            )));
        }
        if let Some(c) = intercept_col {
            if c >= x.ncols() {
                return Err(Error::InvalidData(format!("intercept column {c} out of range")));
            }
        }
        if let Some(g) = &group_ids {
            if g.len() != m {
                return Err(Error::InvalidData(format!(
                    "{} group ids for {m} rows",
                    g.len()
                )));
            }
        }
        if y.iter().any(|v| !v.is_finite()) || x.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidData("non-finite entry in y or X".into()));
        }
        Ok(RegressionData {
            y,
            x,
            dyad_ids,
            names,
            intercept_col,
            group_ids,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.y.len()
    }

    pub fn n_cols(&self) -> usize {
        self.x.ncols()
    }
}

/// A fitted OLS model.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// Coefficient vector `β̂`, length `K`.
    pub beta: DVector<f64>,
    /// Residuals `ε̂_m = y_m − x_m'β̂`, length `M`.
    pub residuals: DVector<f64>,
    /// Materialized `(X'X)⁻¹`.
    pub bread: DMatrix<f64>,
    /// Cross-product `X'X`.
    pub xtx: DMatrix<f64>,
    /// Per-dyad scores, row `m` is `ε̂_m · x_m'` (`M×K`).
    pub scores: DMatrix<f64>,
    /// Smallest singular value of the design matrix.
    pub min_singular: f64,
    /// The data the fit was computed from.
    pub data: Arc<RegressionData>,
}

/// Options for [`ols_fit`].
#[derive(Debug, Clone, Copy)]
pub struct OlsOptions {
    /// Reject fits whose `X'X` condition number exceeds this bound.
    pub max_condition: f64,
}

impl Default for OlsOptions {
    fn default() -> Self {
        OlsOptions {
            max_condition: DEFAULT_MAX_CONDITION,
        }
    }
}

/// Ordinary least squares with default conditioning bound.
pub fn ols_fit(data: Arc<RegressionData>) -> Result<OlsFit> {
    ols_fit_with(data, OlsOptions::default())
}

/// Ordinary least squares; solves the normal equations via the symmetric
/// eigendecomposition of `X'X`.
pub fn ols_fit_with(data: Arc<RegressionData>, opts: OlsOptions) -> Result<OlsFit> {
    let m = data.n_rows();
    let k = data.n_cols();
    if m < k {
        return Err(Error::InvalidData(format!(
            "need at least as many rows as columns, got M = {m}, K = {k}"
        )));
    }
    if k == 0 {
        return Err(Error::InvalidData("design matrix has no columns".into()));
    }
    let xtx = data.x.tr_mul(&data.x);
    let eig = xtx.clone().symmetric_eigen();
    let lambda_max = eig.eigenvalues.iter().cloned().fold(f64::MIN, f64::max);
    let lambda_min = eig.eigenvalues.iter().cloned().fold(f64::MAX, f64::min);
    let min_singular = lambda_min.max(0.0).sqrt();
    let condition = if lambda_min > 0.0 {
        lambda_max / lambda_min
    } else {
        f64::INFINITY
    };
    if !condition.is_finite() || condition > opts.max_condition {
        return Err(Error::RankDeficient {
            min_singular,
            condition,
            bound: opts.max_condition,
        });
    }
    // bread = Q Λ⁻¹ Q'
    let q = &eig.eigenvectors;
    let inv_lambda = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| 1.0 / l));
    let bread = q * inv_lambda * q.transpose();
    let xty = data.x.tr_mul(&data.y);
    let beta = &bread * &xty;
    let residuals = &data.y - &data.x * &beta;
    let mut scores = data.x.clone();
    for (r, mut row) in scores.row_iter_mut().enumerate() {
        row *= residuals[r];
    }
    Ok(OlsFit {
        beta,
        residuals,
        bread,
        xtx,
        scores,
        min_singular,
        data,
    })
}

/// Demeans `y` and every non-intercept column within each fixed-effect
/// group, dropping the intercept column.
///
/// The slopes of an OLS fit on the result equal the slopes of the
/// dummy-expanded regression with one indicator per group.
pub fn within_demean(data: &RegressionData) -> Result<RegressionData> {
    let groups = data
        .group_ids
        .as_ref()
        .ok_or_else(|| Error::InvalidData("within_demean requires group ids".into()))?;
    let m = data.n_rows();
    let mut group_rows: HashMap<i64, Vec<usize>> = HashMap::new();
    for (r, &g) in groups.iter().enumerate() {
        group_rows.entry(g).or_default().push(r);
    }

    let keep: Vec<usize> = (0..data.n_cols())
        .filter(|&c| Some(c) != data.intercept_col)
        .collect();
    let mut x = DMatrix::zeros(m, keep.len());
    for (out_c, &c) in keep.iter().enumerate() {
        x.set_column(out_c, &data.x.column(c));
    }
    let mut y = data.y.clone();
    for rows in group_rows.values() {
        let inv = 1.0 / rows.len() as f64;
        let y_mean = rows.iter().map(|&r| y[r]).sum::<f64>() * inv;
        for &r in rows {
            y[r] -= y_mean;
        }
        for c in 0..x.ncols() {
            let mean = rows.iter().map(|&r| x[(r, c)]).sum::<f64>() * inv;
            for &r in rows {
                x[(r, c)] -= mean;
            }
        }
    }
    let names = keep.iter().map(|&c| data.names[c].clone()).collect();
    RegressionData::new(y, x, data.dyad_ids.clone(), names, None, Some(groups.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn arc(data: RegressionData) -> Arc<RegressionData> {
        Arc::new(data)
    }

    fn random_data(m: usize, k: usize, seed: u64) -> RegressionData {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = DMatrix::from_fn(m, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let y = DVector::from_fn(m, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let names = (0..k).map(|c| format!("x{c}")).collect();
        RegressionData::new(y, x, (0..m).collect(), names, None, None).unwrap()
    }

    #[test]
    fn exact_linear_outcome_recovers_coefficients() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let m = 40;
        let x = DMatrix::from_fn(m, 3, |_, _| rng.random::<f64>() * 4.0 - 2.0);
        let beta = DVector::from_vec(vec![1.5, -2.0, 0.25]);
        let y = &x * &beta;
        let data = RegressionData::new(
            y,
            x,
            (0..m).collect(),
            vec!["a".into(), "b".into(), "c".into()],
            None,
            None,
        )
        .unwrap();
        let fit = ols_fit(arc(data)).unwrap();
        for k in 0..3 {
            assert_relative_eq!(fit.beta[k], beta[k], max_relative = 1e-10, epsilon = 1e-10);
        }
        assert!(fit.residuals.amax() < 1e-10);
    }

    #[test]
    fn ones_column_fits_the_mean() {
        let y = DVector::from_vec(vec![1.0, 2.0, 6.0]);
        let x = DMatrix::from_element(3, 1, 1.0);
        let data =
            RegressionData::new(y, x, vec![0, 1, 2], vec!["const".into()], Some(0), None).unwrap();
        let fit = ols_fit(arc(data)).unwrap();
        assert_relative_eq!(fit.beta[0], 3.0, epsilon = 1e-12);
    }

    #[test]
    fn matches_explicit_normal_equation_solve() {
        let data = random_data(50, 3, 11);
        let fit = ols_fit(arc(data.clone())).unwrap();
        // independent oracle: explicit 3x3 inversion by cofactors
        let g = data.x.tr_mul(&data.x);
        let b = data.x.tr_mul(&data.y);
        let det = g[(0, 0)] * (g[(1, 1)] * g[(2, 2)] - g[(1, 2)] * g[(2, 1)])
            - g[(0, 1)] * (g[(1, 0)] * g[(2, 2)] - g[(1, 2)] * g[(2, 0)])
            + g[(0, 2)] * (g[(1, 0)] * g[(2, 1)] - g[(1, 1)] * g[(2, 0)]);
        let mut inv = DMatrix::zeros(3, 3);
        for i in 0..3 {
            for j in 0..3 {
                let mut minor = [[0.0; 2]; 2];
                let (mut mi, mut mj);
                mi = 0;
                for r in 0..3 {
                    if r == i {
                        continue;
                    }
                    mj = 0;
                    for c in 0..3 {
                        if c == j {
                            continue;
                        }
                        minor[mi][mj] = g[(r, c)];
                        mj += 1;
                    }
                    mi += 1;
                }
                let cof = (minor[0][0] * minor[1][1] - minor[0][1] * minor[1][0])
                    * if (i + j) % 2 == 0 { 1.0 } else { -1.0 };
                inv[(j, i)] = cof / det;
            }
        }
        let beta_oracle = &inv * &b;
        for k in 0..3 {
            assert_relative_eq!(fit.beta[k], beta_oracle[k], max_relative = 1e-9);
        }
    }

    #[test]
    fn orthogonality_of_residuals() {
        let data = random_data(80, 4, 23);
        let fit = ols_fit(arc(data.clone())).unwrap();
        let xr = data.x.tr_mul(&fit.residuals);
        let bound = 1e-8 * data.x.norm() * data.y.norm();
        assert!(xr.amax() <= bound, "X'e = {xr}");
    }

    #[test]
    fn rank_deficiency_names_smallest_singular_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let col: Vec<f64> = (0..20).map(|_| rng.random()).collect();
        let mut x = DMatrix::zeros(20, 2);
        for r in 0..20 {
            x[(r, 0)] = col[r];
            x[(r, 1)] = 2.0 * col[r];
        }
        let y = DVector::from_element(20, 1.0);
        let data = RegressionData::new(
            y,
            x,
            (0..20).collect(),
            vec!["a".into(), "b".into()],
            None,
            None,
        )
        .unwrap();
        match ols_fit(arc(data)) {
            Err(Error::RankDeficient { min_singular, .. }) => {
                assert!(min_singular < 1e-6, "min singular {min_singular}");
            }
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn single_group_demeaning_centers_columns() {
        let mut data = random_data(30, 2, 7);
        data.group_ids = Some(vec![0; 30]);
        let demeaned = within_demean(&data).unwrap();
        assert!(demeaned.y.mean().abs() < 1e-12);
        for c in 0..2 {
            assert!(demeaned.x.column(c).mean().abs() < 1e-12);
        }
    }

    #[test]
    fn constant_outcome_per_group_demeans_to_zero() {
        let y = DVector::from_vec(vec![4.0, 4.0, -1.0, -1.0]);
        let x = DMatrix::from_element(4, 1, 1.0);
        let data = RegressionData::new(
            y,
            x,
            vec![0, 1, 2, 3],
            vec!["const".into()],
            Some(0),
            Some(vec![0, 0, 1, 1]),
        )
        .unwrap();
        let demeaned = within_demean(&data).unwrap();
        assert!(demeaned.y.amax() < 1e-12);
        assert_eq!(demeaned.n_cols(), 0);
    }

    #[test]
    fn demeaning_requires_groups() {
        let data = random_data(10, 2, 1);
        assert!(within_demean(&data).is_err());
    }

    #[test]
    fn demeaned_fit_matches_dummy_expansion() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let m = 40;
        let n_groups = 4;
        let k = 2;
        let groups: Vec<i64> = (0..m).map(|_| rng.random_range(0..n_groups) as i64).collect();
        let x = DMatrix::from_fn(m, k, |_, _| rng.random::<f64>() * 2.0 - 1.0);
        let y = DVector::from_fn(m, |r, _| {
            x[(r, 0)] * 2.0 - x[(r, 1)] + groups[r] as f64 * 0.7 + rng.random::<f64>()
        });
        let data = RegressionData::new(
            y.clone(),
            x.clone(),
            (0..m).collect(),
            vec!["a".into(), "b".into()],
            None,
            Some(groups.clone()),
        )
        .unwrap();
        let fe_fit = ols_fit(arc(within_demean(&data).unwrap())).unwrap();

        // oracle: dummy expansion, one indicator per group
        let mut xd = DMatrix::zeros(m, k + n_groups);
        for r in 0..m {
            xd[(r, 0)] = x[(r, 0)];
            xd[(r, 1)] = x[(r, 1)];
            xd[(r, k + groups[r] as usize)] = 1.0;
        }
        let names = (0..k + n_groups).map(|c| format!("c{c}")).collect();
        let dummy =
            RegressionData::new(y, xd, (0..m).collect(), names, None, None).unwrap();
        let dummy_fit = ols_fit(arc(dummy)).unwrap();
        for c in 0..k {
            assert_relative_eq!(fe_fit.beta[c], dummy_fit.beta[c], max_relative = 1e-8);
        }
    }

    #[test]
    fn beta_invariant_to_joint_row_permutation() {
        let data = random_data(25, 3, 31);
        let fit = ols_fit(arc(data.clone())).unwrap();
        let perm: Vec<usize> = (0..25).rev().collect();
        let y2 = DVector::from_fn(25, |r, _| data.y[perm[r]]);
        let x2 = DMatrix::from_fn(25, 3, |r, c| data.x[(perm[r], c)]);
        let ids2: Vec<usize> = perm.iter().map(|&r| data.dyad_ids[r]).collect();
        let data2 =
            RegressionData::new(y2, x2, ids2, data.names.clone(), None, None).unwrap();
        let fit2 = ols_fit(arc(data2)).unwrap();
        for k in 0..3 {
            assert_relative_eq!(fit.beta[k], fit2.beta[k], max_relative = 1e-10);
        }
    }

    #[test]
    fn column_scaling_rescales_coefficient() {
        let data = random_data(30, 2, 41);
        let fit = ols_fit(arc(data.clone())).unwrap();
        let c = 8.0;
        let mut x2 = data.x.clone();
        for r in 0..30 {
            x2[(r, 1)] *= c;
        }
        let data2 = RegressionData::new(
            data.y.clone(),
            x2.clone(),
            data.dyad_ids.clone(),
            data.names.clone(),
            None,
            None,
        )
        .unwrap();
        let fit2 = ols_fit(arc(data2)).unwrap();
        assert_relative_eq!(fit2.beta[1], fit.beta[1] / c, max_relative = 1e-9);
        let fitted1 = &data.x * &fit.beta;
        let fitted2 = &x2 * &fit2.beta;
        assert!((fitted1 - fitted2).amax() < 1e-10);
    }
}
