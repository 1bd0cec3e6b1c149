use std::ops::{Index, IndexMut};

use serde::{Deserialize, Serialize};

use super::{FEASIBLE_COST_CEILING, INFEASIBLE_COST};
use crate::error::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MatrixRepr")]
pub struct Matrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

#[derive(Deserialize)]
struct MatrixRepr {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl TryFrom<MatrixRepr> for Matrix {
    type Error = Error;

    fn try_from(r: MatrixRepr) -> Result<Self> {
        Matrix::from_vec(r.rows, r.cols, r.data)
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::filled(rows, cols, 0.0)
    }

    pub fn filled(rows: usize, cols: usize, value: f64) -> Self {
        Matrix { rows, cols, data: vec![value; rows * cols] }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, data: rows.concat() }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::Invariant(format!("matrix data has {} entries, expected {rows}x{cols}", data.len())));
        }
        Ok(Matrix { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Matrix { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn iter(&self) -> impl Iterator<Item = &f64> {
        self.data.iter()
    }

    pub fn max_abs_diff(&self, other: &Matrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data.iter().zip(&other.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = f64;

    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &self.data[i * self.cols + j]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        debug_assert!(i < self.rows && j < self.cols);
        &mut self.data[i * self.cols + j]
    }
}

/// Ride-service provider cost data for one epoch.
///
/// `c` is `m x p` (ride costs), `d` is `m x q` (charge costs), `a` is `m x p`
/// (cost of reaching the drop-off) and `w` is `m x p` (fixed per-pair
/// incentive the EV would like to offer). An entry of `c` or `d` equal to
/// [`INFEASIBLE_COST`] marks the pair as infeasible.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CostMatrices {
    pub c: Matrix,
    pub d: Matrix,
    pub a: Matrix,
    pub w: Matrix,
}

impl CostMatrices {
    pub fn m(&self) -> usize {
        self.c.rows()
    }

    pub fn p(&self) -> usize {
        self.c.cols()
    }

    pub fn q(&self) -> usize {
        self.d.cols()
    }

    pub fn ride_feasible(&self, i: usize, j: usize) -> bool {
        self.c[(i, j)] != INFEASIBLE_COST
    }

    pub fn charge_feasible(&self, i: usize, k: usize) -> bool {
        self.d[(i, k)] != INFEASIBLE_COST
    }

    /// Checks dimensions, sign and the sentinel convention.
    pub fn validate(&self) -> Result<()> {
        let (m, p, q) = (self.m(), self.p(), self.q());
        if self.d.rows() != m || self.a.rows() != m || self.w.rows() != m {
            return Err(Error::Invariant("cost matrices disagree on EV count".into()));
        }
        if self.a.cols() != p || self.w.cols() != p {
            return Err(Error::Invariant("cost matrices disagree on ride count".into()));
        }
        let _ = q;
        for (name, mat) in [("C", &self.c), ("D", &self.d), ("A", &self.a)] {
            for &v in mat.iter() {
                let ok = v == INFEASIBLE_COST || (v.is_finite() && (0.0..FEASIBLE_COST_CEILING).contains(&v));
                if !ok {
                    return Err(Error::Invariant(format!(
                        "{name} entry {v} is neither a cost in [0, 1e5) nor the sentinel"
                    )));
                }
            }
        }
        if self.w.iter().any(|v| !v.is_finite()) {
            return Err(Error::Invariant("W has a non-finite entry".into()));
        }
        Ok(())
    }
}

/// A permutation assignment over the padded `h x h` index sets.
///
/// Rows `0..m` are real EVs, columns `0..p` rides, `p..p+q` charge requests;
/// anything beyond is a virtual agent.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AssignmentMatrix {
    m: usize,
    p: usize,
    q: usize,
    row_to_col: Vec<usize>,
}

impl AssignmentMatrix {
    pub fn new(m: usize, p: usize, q: usize, row_to_col: Vec<usize>) -> Result<Self> {
        let h = m.max(p + q);
        if row_to_col.len() != h {
            return Err(Error::Invariant(format!("assignment has {} rows, expected h = {h}", row_to_col.len())));
        }
        let mut seen = vec![false; h];
        for &j in &row_to_col {
            if j >= h || std::mem::replace(&mut seen[j], true) {
                return Err(Error::Invariant("assignment is not a permutation".into()));
            }
        }
        Ok(AssignmentMatrix { m, p, q, row_to_col })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.q
    }

    pub fn h(&self) -> usize {
        self.row_to_col.len()
    }

    pub fn col_of(&self, row: usize) -> usize {
        self.row_to_col[row]
    }

    pub fn permutation(&self) -> &[usize] {
        &self.row_to_col
    }

    pub fn is_assigned(&self, i: usize, j: usize) -> bool {
        self.row_to_col[i] == j
    }

    /// Real EV holding charge request `k`, if any.
    pub fn ev_for_charge(&self, k: usize) -> Option<usize> {
        let col = self.p + k;
        (0..self.m).find(|&i| self.row_to_col[i] == col)
    }

    pub fn to_dense(&self) -> Matrix {
        let h = self.h();
        let mut x = Matrix::zeros(h, h);
        for (i, &j) in self.row_to_col.iter().enumerate() {
            x[(i, j)] = 1.0;
        }
        x
    }
}

/// Incentives `y_ij` on the real block: `m x (p + q)`, rides first.
/// Virtual rows and columns are implicitly zero.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IncentiveMatrix {
    p: usize,
    values: Matrix,
}

impl IncentiveMatrix {
    pub fn zeros(m: usize, p: usize, q: usize) -> Self {
        IncentiveMatrix { p, values: Matrix::zeros(m, p + q) }
    }

    pub fn from_blocks(ride: &Matrix, charge: &Matrix) -> Self {
        assert_eq!(ride.rows(), charge.rows());
        let (m, p, q) = (ride.rows(), ride.cols(), charge.cols());
        let values = Matrix::from_fn(m, p + q, |i, j| if j < p { ride[(i, j)] } else { charge[(i, j - p)] });
        IncentiveMatrix { p, values }
    }

    pub fn m(&self) -> usize {
        self.values.rows()
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn q(&self) -> usize {
        self.values.cols() - self.p
    }

    pub fn ride(&self, i: usize, j: usize) -> f64 {
        self.values[(i, j)]
    }

    pub fn charge(&self, i: usize, k: usize) -> f64 {
        self.values[(i, self.p + k)]
    }

    pub fn set_ride(&mut self, i: usize, j: usize, v: f64) {
        self.values[(i, j)] = v;
    }

    pub fn set_charge(&mut self, i: usize, k: usize, v: f64) {
        let p = self.p;
        self.values[(i, p + k)] = v;
    }

    /// Entry over the padded index sets; zero for virtual rows or columns.
    pub fn padded(&self, i: usize, j: usize) -> f64 {
        if i < self.m() && j < self.values.cols() {
            self.values[(i, j)]
        } else {
            0.0
        }
    }

    pub fn values(&self) -> &Matrix {
        &self.values
    }

    pub fn ride_sum(&self) -> f64 {
        (0..self.m()).flat_map(|i| (0..self.p).map(move |j| (i, j))).map(|(i, j)| self.values[(i, j)]).sum()
    }

    pub fn charge_sum(&self) -> f64 {
        self.values.iter().sum::<f64>() - self.ride_sum()
    }

    pub fn max_abs_diff(&self, other: &IncentiveMatrix) -> f64 {
        self.values.max_abs_diff(&other.values)
    }
}
