//! Degree-based regularization of the adjacency matrix.
//!
//! Rows (columns) whose degree reaches `tau` times the `alpha`-th largest
//! degree are scaled down, with `alpha = floor(n / mean degree)`. The oracle
//! variant uses known degree scales instead of order statistics.

use std::io::Write;

use ndarray::{Array1, Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{jacobi_svd, operator_norm, CsrMatrix, LowRankUpdate};
use crate::types::{largest_remainder, BiAdjacency, Membership, SbmSpec};

/// Default trimming multiplier.
pub const DEFAULT_TAU: f64 = 3.0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Side {
    Rows,
    Cols,
}

/// Degrees of one side with the order statistic used as a degree proxy.
#[derive(Clone, Debug)]
pub struct DegreeStatistic {
    pub degrees: Array1<f64>,
    pub mean: f64,
    /// `floor(n / mean)`, clamped to `[1, n]`.
    pub alpha: usize,
    pub alpha_clamped: bool,
    /// The `alpha`-th largest degree.
    pub order_statistic: f64,
}

pub fn degree_order_statistic(a: &BiAdjacency, side: Side) -> Result<DegreeStatistic> {
    let degrees = match side {
        Side::Rows => a.row_degrees(),
        Side::Cols => a.col_degrees(),
    };
    if degrees.iter().any(|&d| d < 0.0) {
        return Err(Error::validation("degrees must be nonnegative"));
    }
    let n = degrees.len();
    let mean = degrees.sum() / n as f64;
    if mean == 0.0 {
        return Err(Error::ZeroGraph);
    }
    let raw = (n as f64 / mean).floor();
    let alpha = (raw as usize).clamp(1, n);
    let alpha_clamped = raw < 1.0 || raw > n as f64;
    let mut sorted = degrees.to_vec();
    sorted.sort_by(|x, y| y.total_cmp(x));
    Ok(DegreeStatistic {
        order_statistic: sorted[alpha - 1],
        degrees,
        mean,
        alpha,
        alpha_clamped,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RegularizationMode {
    Weights,
    Oracle,
    None,
}

/// How row and column weights combine into the regularized entries.
///
/// `L1` gives `A_ij w_i w'_j`, so trimmed rows (columns) have l1 norm at most
/// their cap. `L2` gives `A_ij sqrt(w_i w'_j)`, the square-root variant under
/// which trimmed rows have squared l2 norm at most their cap; it shrinks less
/// aggressively.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WeightForm {
    #[default]
    L1,
    L2,
}

impl std::str::FromStr for WeightForm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l1" => Ok(WeightForm::L1),
            "l2" => Ok(WeightForm::L2),
            _ => Err(Error::validation(format!("unknown weight form {s:?}"))),
        }
    }
}

/// What the regularizer did to each side.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RegularizationReport {
    /// Trimming multiplier; `inf` disables regularization, `null` for the oracle mode.
    #[serde(with = "crate::serde_extended")]
    pub tau: f64,
    pub mode: RegularizationMode,
    #[serde(default)]
    pub weight_form: WeightForm,
    /// Set when every degree is zero and the matrix was returned unchanged.
    pub zero_graph: bool,
    pub alpha_row: usize,
    pub alpha_col: usize,
    pub alpha_clamped: bool,
    #[serde(with = "crate::serde_extended")]
    pub dhat_row: f64,
    #[serde(with = "crate::serde_extended")]
    pub dhat_col: f64,
    pub trimmed_rows: Vec<usize>,
    pub trimmed_cols: Vec<usize>,
    pub weights_row: Vec<f64>,
    pub weights_col: Vec<f64>,
}

impl RegularizationReport {
    fn identity(a: &BiAdjacency, tau: f64, zero_graph: bool) -> Self {
        Self {
            tau,
            mode: RegularizationMode::None,
            weight_form: WeightForm::L1,
            zero_graph,
            alpha_row: 0,
            alpha_col: 0,
            alpha_clamped: false,
            dhat_row: f64::INFINITY,
            dhat_col: f64::INFINITY,
            trimmed_rows: Vec::new(),
            trimmed_cols: Vec::new(),
            weights_row: vec![1.0; a.n_rows()],
            weights_col: vec![1.0; a.n_cols()],
        }
    }
}

/// Indices with `degree >= threshold` (only when `threshold > 0`) and the
/// weights `min(cap / degree, 1)` applied to them.
fn trim(degrees: &Array1<f64>, threshold: f64, cap: f64, strict: bool) -> (Vec<usize>, Vec<f64>) {
    let mut trimmed = Vec::new();
    let mut weights = vec![1.0; degrees.len()];
    if threshold > 0.0 {
        for (i, &d) in degrees.iter().enumerate() {
            let hit = if strict { d > threshold } else { d >= threshold };
            if hit {
                trimmed.push(i);
                if d > 0.0 {
                    weights[i] = (cap / d).min(1.0);
                }
            }
        }
    }
    (trimmed, weights)
}

fn reweight(a: &BiAdjacency, wr: &[f64], wc: &[f64], form: WeightForm) -> BiAdjacency {
    let e = a.entries();
    let out = Array2::from_shape_fn(e.dim(), |(i, j)| {
        let v = e[[i, j]];
        match (v == 0.0, form) {
            (true, _) => 0.0,
            (false, WeightForm::L1) => v * wr[i] * wc[j],
            (false, WeightForm::L2) => v * (wr[i] * wc[j]).sqrt(),
        }
    });
    BiAdjacency::from_parts_unchecked(out, a.is_symmetric())
}

/// Data-driven regularization: thresholds `tau * D_(alpha)` on each side and
/// weights `w_i = min(dhat / D_i, 1)`, giving `A_re = A o (w w'^T)`.
///
/// `tau = inf` returns `A` unchanged. An all-zero matrix is returned unchanged
/// with `zero_graph` set.
pub fn regularize_data_driven(a: &BiAdjacency, tau: f64) -> Result<(BiAdjacency, RegularizationReport)> {
    regularize_data_driven_with(a, tau, WeightForm::L1)
}

/// [`regularize_data_driven`] with a choice of weight form.
pub fn regularize_data_driven_with(
    a: &BiAdjacency,
    tau: f64,
    form: WeightForm,
) -> Result<(BiAdjacency, RegularizationReport)> {
    if !(tau > 0.0) {
        return Err(Error::validation(format!("tau must be positive, got {tau}")));
    }
    if tau.is_infinite() {
        return Ok((a.clone(), RegularizationReport::identity(a, tau, false)));
    }
    let (rows, cols) = match (
        degree_order_statistic(a, Side::Rows),
        degree_order_statistic(a, Side::Cols),
    ) {
        (Ok(r), Ok(c)) => (r, c),
        (Err(Error::ZeroGraph), _) | (_, Err(Error::ZeroGraph)) => {
            return Ok((a.clone(), RegularizationReport::identity(a, tau, true)));
        }
        (Err(e), _) | (_, Err(e)) => return Err(e),
    };
    let dhat_row = tau * rows.order_statistic;
    let dhat_col = tau * cols.order_statistic;
    let (trimmed_rows, weights_row) = trim(&rows.degrees, dhat_row, dhat_row, false);
    let (trimmed_cols, weights_col) = trim(&cols.degrees, dhat_col, dhat_col, false);
    let out = reweight(a, &weights_row, &weights_col, form);
    debug_assert!(match form {
        WeightForm::L1 => l1_constraints_hold(&out, &trimmed_rows, dhat_row, &trimmed_cols, dhat_col),
        WeightForm::L2 => l2_constraints_hold(&out, &trimmed_rows, dhat_row, &trimmed_cols, dhat_col),
    });
    Ok((
        out,
        RegularizationReport {
            tau,
            mode: RegularizationMode::Weights,
            weight_form: form,
            zero_graph: false,
            alpha_row: rows.alpha,
            alpha_col: cols.alpha,
            alpha_clamped: rows.alpha_clamped || cols.alpha_clamped,
            dhat_row,
            dhat_col,
            trimmed_rows,
            trimmed_cols,
            weights_row,
            weights_col,
        },
    ))
}

/// Whether every listed row (column) has l1 norm at most its cap, up to rounding.
pub fn l1_constraints_hold(
    a_re: &BiAdjacency,
    rows: &[usize],
    row_cap: f64,
    cols: &[usize],
    col_cap: f64,
) -> bool {
    let slack = |cap: f64| cap + 1e-9 * cap.max(1.0);
    let rd = a_re.row_degrees();
    let cd = a_re.col_degrees();
    rows.iter().all(|&i| rd[i] <= slack(row_cap)) && cols.iter().all(|&j| cd[j] <= slack(col_cap))
}

/// Whether every listed row (column) has squared l2 norm at most its cap.
pub fn l2_constraints_hold(
    a_re: &BiAdjacency,
    rows: &[usize],
    row_cap: f64,
    cols: &[usize],
    col_cap: f64,
) -> bool {
    let slack = |cap: f64| cap + 1e-9 * cap.max(1.0);
    let sq = a_re.entries().mapv(|v| v * v);
    let rd = sq.sum_axis(ndarray::Axis(1));
    let cd = sq.sum_axis(ndarray::Axis(0));
    rows.iter().all(|&i| rd[i] <= slack(row_cap)) && cols.iter().all(|&j| cd[j] <= slack(col_cap))
}

/// Degree thresholds and caps for the oracle scheme.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OracleCaps {
    pub row_threshold: f64,
    pub row_cap: f64,
    pub col_threshold: f64,
    pub col_cap: f64,
}

impl OracleCaps {
    /// Trim degrees above `2d` down to `d_prime` on both sides.
    pub fn from_degree_scale(d: f64, d_prime: f64) -> Self {
        Self {
            row_threshold: 2.0 * d,
            row_cap: d_prime,
            col_threshold: 2.0 * d,
            col_cap: d_prime,
        }
    }

    /// Trim at `tau` times the expected maximum row and column degrees of `spec`.
    pub fn expected_max_degree(spec: &SbmSpec, tau: f64) -> Self {
        let b = spec.connectivity();
        let n1 = largest_remainder(spec.n1, &spec.proportions_rows);
        let n2 = largest_remainder(spec.n2, &spec.proportions_cols);
        let row_max = (0..b.nrows())
            .map(|s| (0..b.ncols()).map(|t| b[[s, t]] * n2[t] as f64).sum::<f64>())
            .fold(0.0, f64::max);
        let col_max = (0..b.ncols())
            .map(|t| (0..b.nrows()).map(|s| b[[s, t]] * n1[s] as f64).sum::<f64>())
            .fold(0.0, f64::max);
        Self {
            row_threshold: tau * row_max,
            row_cap: tau * row_max,
            col_threshold: tau * col_max,
            col_cap: tau * col_max,
        }
    }
}

/// Oracle regularization: rows and columns with degree above `2d` are scaled
/// so their l1 norm is at most `d_prime`.
pub fn regularize_oracle(a: &BiAdjacency, d: f64, d_prime: f64) -> Result<(BiAdjacency, RegularizationReport)> {
    if !(d > 0.0 && d_prime > 0.0) {
        return Err(Error::validation("oracle degree scales must be positive"));
    }
    regularize_capped(a, OracleCaps::from_degree_scale(d, d_prime))
}

/// Scales rows (columns) with degree strictly above the threshold to the cap.
pub fn regularize_capped(a: &BiAdjacency, caps: OracleCaps) -> Result<(BiAdjacency, RegularizationReport)> {
    regularize_capped_with(a, caps, WeightForm::L1)
}

pub fn regularize_capped_with(
    a: &BiAdjacency,
    caps: OracleCaps,
    form: WeightForm,
) -> Result<(BiAdjacency, RegularizationReport)> {
    let (trimmed_rows, weights_row) = trim(&a.row_degrees(), caps.row_threshold, caps.row_cap, true);
    let (trimmed_cols, weights_col) = trim(&a.col_degrees(), caps.col_threshold, caps.col_cap, true);
    let out = reweight(a, &weights_row, &weights_col, form);
    Ok((
        out,
        RegularizationReport {
            tau: f64::NAN,
            mode: RegularizationMode::Oracle,
            weight_form: form,
            zero_graph: a.nnz() == 0,
            alpha_row: 0,
            alpha_col: 0,
            alpha_clamped: false,
            dhat_row: caps.row_cap,
            dhat_col: caps.col_cap,
            trimmed_rows,
            trimmed_cols,
            weights_row,
            weights_col,
        },
    ))
}

/// `||A_re - P||` and its ratio to `||P||`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConcentrationError {
    pub abs: f64,
    pub rel: f64,
}

const NORM_TOL: f64 = 1e-10;

/// Concentration error against a dense mean matrix.
pub fn concentration_error(a_re: ArrayView2<f64>, p: ArrayView2<f64>) -> Result<ConcentrationError> {
    if a_re.dim() != p.dim() {
        return Err(Error::DimensionMismatch(format!(
            "regularized matrix is {:?} but mean is {:?}",
            a_re.dim(),
            p.dim()
        )));
    }
    let diff = &a_re - &p;
    let abs = operator_norm(&diff, NORM_TOL)?;
    let scale = operator_norm(&p, NORM_TOL)?;
    Ok(ConcentrationError {
        abs,
        rel: abs / scale,
    })
}

/// Concentration error against the block mean `Z1 B Z2^T`, without forming it:
/// the difference is applied as a sparse matrix minus a rank-`k2` correction.
pub fn concentration_error_block(
    a_re: ArrayView2<f64>,
    b: &Array2<f64>,
    rows: &Membership,
    cols: &Membership,
) -> Result<ConcentrationError> {
    if a_re.dim() != (rows.len(), cols.len()) || b.dim() != (rows.k(), cols.k()) {
        return Err(Error::DimensionMismatch(
            "adjacency, memberships and connectivity disagree".into(),
        ));
    }
    let left = rows.to_matrix().dot(b);
    let right = cols.to_matrix();
    let sparse = CsrMatrix::from_dense(a_re);
    let op = LowRankUpdate {
        base: &sparse,
        left: left.view(),
        right: right.view(),
    };
    let abs = operator_norm(&op, NORM_TOL)?;
    let s1: Vec<f64> = rows.cluster_sizes().iter().map(|&s| (s as f64).sqrt()).collect();
    let s2: Vec<f64> = cols.cluster_sizes().iter().map(|&s| (s as f64).sqrt()).collect();
    let b_bar = Array2::from_shape_fn(b.dim(), |(s, t)| s1[s] * b[[s, t]] * s2[t]);
    let scale = jacobi_svd(b_bar.view()).sigma[0];
    Ok(ConcentrationError {
        abs,
        rel: abs / scale,
    })
}

/// Check of the degree regime under which `D_(alpha)` tracks the maximum
/// expected degree.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DegreeAssumption {
    /// Smallest `beta >= 1` with `n_rt >= n_r / (beta k_r)` on both sides.
    pub beta: f64,
    /// Expected average row degree.
    pub dbar: f64,
    pub lower: f64,
    pub upper: f64,
    pub n1_le_n2: bool,
    pub holds: bool,
}

pub fn check_degree_assumption(spec: &SbmSpec) -> Result<DegreeAssumption> {
    spec.validate()?;
    let (k1, k2) = (spec.k1() as f64, spec.k2() as f64);
    let (n1, n2) = (spec.n1 as f64, spec.n2 as f64);
    let rs = spec.row_sizes();
    let cs = spec.col_sizes();
    let beta_side = |sizes: &[usize], n: f64, k: f64| {
        sizes.iter().map(|&s| n / (k * s as f64)).fold(1.0, f64::max)
    };
    let beta = beta_side(&rs, n1, k1).max(beta_side(&cs, n2, k2));
    let b = spec.connectivity();
    let mut total = 0.0;
    for (s, &a) in rs.iter().enumerate() {
        for (t, &c) in cs.iter().enumerate() {
            total += b[[s, t]] * (a * c) as f64;
        }
    }
    let dbar = total / n1;
    let lower = (n2 / n1).powi(2) * (8.0 * beta * k1).max(8.0 * beta * k2).max(90.0);
    let upper = n1 / 2.0;
    let n1_le_n2 = spec.n1 <= spec.n2;
    Ok(DegreeAssumption {
        beta,
        dbar,
        lower,
        upper,
        n1_le_n2,
        holds: n1_le_n2 && lower <= dbar && dbar <= upper,
    })
}

/// Whether `d_max / 2 <= D_(alpha) <= 3 d_max / 2` for the row side, where
/// `d_max` is the largest expected row degree.
pub fn degree_proxy_holds(a: &BiAdjacency, expected_row_degrees: &[f64]) -> Result<bool> {
    let stat = degree_order_statistic(a, Side::Rows)?;
    let d_max = expected_row_degrees.iter().copied().fold(0.0, f64::max);
    Ok(d_max / 2.0 <= stat.order_statistic && stat.order_statistic <= 1.5 * d_max)
}

/// Writes `side,degree,count` rows for the degree distributions of both sides.
pub fn write_degree_histogram<W: Write>(a: &BiAdjacency, out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["side", "degree", "count"])?;
    for (name, degrees) in [("rows", a.row_degrees()), ("cols", a.col_degrees())] {
        let mut values: Vec<f64> = degrees.to_vec();
        values.sort_by(f64::total_cmp);
        let mut i = 0;
        while i < values.len() {
            let j = values[i..].iter().take_while(|&&v| v == values[i]).count();
            w.write_record([name.to_string(), values[i].to_string(), j.to_string()])?;
            i += j;
        }
    }
    w.flush().map_err(|e| Error::io("<degree histogram>", e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::array;

    fn rows_with_degrees(degrees: &[usize], width: usize) -> BiAdjacency {
        let a = Array2::from_shape_fn((degrees.len(), width), |(i, j)| f64::from(u8::from(j < degrees[i])));
        BiAdjacency::new(a).unwrap()
    }

    #[test]
    fn order_statistic_examples() {
        let s = degree_order_statistic(&rows_with_degrees(&[1, 2, 3, 10], 12), Side::Rows).unwrap();
        assert_eq!((s.mean, s.alpha, s.order_statistic), (4.0, 1, 10.0));
        let s = degree_order_statistic(&rows_with_degrees(&[5, 5, 5, 5], 6), Side::Rows).unwrap();
        assert_eq!((s.mean, s.alpha, s.order_statistic), (5.0, 1, 5.0));
        assert!(s.alpha_clamped);
        let zero = BiAdjacency::new(Array2::zeros((3, 3))).unwrap();
        assert!(matches!(degree_order_statistic(&zero, Side::Rows), Err(Error::ZeroGraph)));
    }

    #[test]
    fn no_trimming_below_threshold() {
        let a = rows_with_degrees(&[1, 2, 3, 10], 12);
        let (re, report) = regularize_data_driven(&a, 3.0).unwrap();
        assert_eq!(report.dhat_row, 30.0);
        assert!(report.trimmed_rows.is_empty());
        assert!(report.weights_row.iter().all(|&w| w == 1.0));
        // untrimmed rows keep their entries wherever the column is untrimmed too
        for ((i, j), &v) in a.entries().indexed_iter() {
            if !report.trimmed_cols.contains(&j) {
                assert_eq!(re.entries()[[i, j]], v);
            }
        }
    }

    #[test]
    fn hub_row_is_scaled_to_threshold() {
        // 99 light rows of degree 1 and one hub of degree 100: mean ~ 1.99,
        // alpha = 50, D_(alpha) = 1, dhat = 3 for tau = 3. Use tau = 30 for dhat = 30.
        let mut degrees = vec![1; 99];
        degrees.push(100);
        let a = rows_with_degrees(&degrees, 200);
        let (re, report) = regularize_data_driven(&a, 30.0).unwrap();
        assert_eq!(report.dhat_row, 30.0);
        assert_eq!(report.trimmed_rows, vec![99]);
        assert!((report.weights_row[99] - 0.3).abs() < 1e-15);
        assert!((re.row_degrees()[99] - 30.0).abs() < 1e-12);
    }

    #[test]
    fn square_root_weights_bound_l2_norms() {
        let mut degrees = vec![1; 99];
        degrees.push(100);
        let a = rows_with_degrees(&degrees, 200);
        let (re, report) = regularize_data_driven_with(&a, 30.0, WeightForm::L2).unwrap();
        assert_eq!(report.weight_form, WeightForm::L2);
        // the hub's entries are scaled by sqrt(0.3): squared l2 norm 30
        let hub = re.entries().row(99).mapv(|v| v * v).sum();
        assert!((hub - 30.0).abs() < 1e-9);
        assert!(l2_constraints_hold(&re, &report.trimmed_rows, 30.0, &report.trimmed_cols, report.dhat_col));
        let (l1, _) = regularize_data_driven(&a, 30.0).unwrap();
        assert!(re.entries().iter().zip(l1.entries()).all(|(x, y)| x >= y));
    }

    #[test]
    fn infinite_tau_is_identity() {
        let a = rows_with_degrees(&[1, 7, 3], 8);
        let (re, report) = regularize_data_driven(&a, f64::INFINITY).unwrap();
        assert_eq!(re.entries(), a.entries());
        assert_eq!(report.mode, RegularizationMode::None);
        assert!(report.trimmed_rows.is_empty() && report.trimmed_cols.is_empty());
        let json = serde_json::to_string(&report).unwrap();
        assert!(json.contains(r#""tau":"inf""#));
    }

    #[test]
    fn zero_graph_is_flagged() {
        let zero = BiAdjacency::new(Array2::zeros((3, 4))).unwrap();
        let (re, report) = regularize_data_driven(&zero, 3.0).unwrap();
        assert!(report.zero_graph);
        assert_eq!(re.nnz(), 0);
    }

    #[test]
    fn oracle_examples() {
        let a = rows_with_degrees(&[2, 2, 3, 2], 10);
        let (re, report) = regularize_oracle(&a, 2.0, 2.0).unwrap();
        assert_eq!(re.entries(), a.entries());
        assert!(report.trimmed_rows.is_empty());

        let a = rows_with_degrees(&[2, 2, 10, 2], 10);
        let (re, report) = regularize_oracle(&a, 2.0, 2.0).unwrap();
        assert_eq!(report.trimmed_rows, vec![2]);
        assert!((report.weights_row[2] - 0.2).abs() < 1e-15);
        assert!((re.entries()[[2, 0]] - 0.2).abs() < 1e-15);
    }

    #[test]
    fn concentration_examples() {
        let p = Array2::from_elem((4, 5), 0.25);
        let c = concentration_error(p.view(), p.view()).unwrap();
        assert_eq!(c.abs, 0.0);
        let u = array![0.5, 0.5, 0.5, 0.5];
        let v = array![0.6, 0.0, 0.8, 0.0, 0.0];
        let eps = 0.125;
        let pert = &p + &(eps * &u.view().insert_axis(ndarray::Axis(1)).dot(&v.view().insert_axis(ndarray::Axis(0))));
        let c = concentration_error(pert.view(), p.view()).unwrap();
        assert!((c.abs - eps).abs() < 1e-12);
    }

    #[test]
    fn block_concentration_matches_dense() {
        let rows = Membership::new(vec![0, 1, 0, 1, 1, 0], 2).unwrap();
        let cols = Membership::new(vec![1, 1, 0, 0, 1], 2).unwrap();
        let b = array![[0.3, 0.6], [0.1, 0.2]];
        let a = Array2::from_shape_fn((6, 5), |(i, j)| f64::from(u8::from((i * 5 + j) % 3 == 0)));
        let p = crate::models::block_mean(&b, &rows, &cols);
        let dense = concentration_error(a.view(), p.view()).unwrap();
        let block = concentration_error_block(a.view(), &b, &rows, &cols).unwrap();
        assert!((dense.abs - block.abs).abs() < 1e-10);
        assert!((dense.rel - block.rel).abs() < 1e-10);
    }

    #[test]
    fn degree_assumption_for_balanced_spec() {
        let psi = crate::models::planted_partition(2, 1.0, 0.5) * 400.0;
        let spec = SbmSpec::balanced(1000, 1000, psi, 0);
        let check = check_degree_assumption(&spec).unwrap();
        assert_eq!(check.beta, 1.0);
        assert!((check.dbar - 300.0).abs() < 1e-9);
        assert!(check.holds);
    }

    #[test]
    fn histogram_counts_degrees() {
        let a = rows_with_degrees(&[1, 1, 3], 3);
        let mut buf = Vec::new();
        write_degree_histogram(&a, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("side,degree,count\nrows,1,2\nrows,3,1\n"));
        assert!(text.ends_with("cols,1,2\ncols,3,1\n"));
    }
}
