//! Sparse direct solver for the first-step systems of absorbing chains.
//!
//! Every system solved here has the form `(I - Q) x = b` where `Q` is the
//! substochastic block of a transition matrix restricted to transient states
//! that all reach the absorbing set. Such matrices are nonsingular M-matrices:
//! every Schur complement is again an M-matrix, so elimination with diagonal
//! pivots in *any* order never meets a zero pivot. The pivot order is chosen
//! greedily by Markowitz cost to keep fill-in low (series paths eliminate with
//! no fill at all).
//!
//! The same factorization runs over `f64` (with iterative refinement and a
//! componentwise backward-error check) and over `BigRational` (exact, with the
//! solution certified by exact re-substitution).

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Debug;

use num_rational::BigRational;
use num_traits::{Num, Signed, Zero};

use crate::error::{Error, Result};

/// Scalar field the elimination runs over.
pub trait Scalar: Clone + Debug + Num + Send + Sync {
    /// Exact `num / den` for small integer data (transition probabilities).
    fn ratio(num: u64, den: u64) -> Self;
    /// Whether a pivot should be treated as zero.
    fn is_bad_pivot(&self) -> bool;
}

impl Scalar for f64 {
    fn ratio(num: u64, den: u64) -> Self {
        num as f64 / den as f64
    }

    fn is_bad_pivot(&self) -> bool {
        *self == 0.0 || !self.is_finite()
    }
}

impl Scalar for BigRational {
    fn ratio(num: u64, den: u64) -> Self {
        BigRational::new(num.into(), den.into())
    }

    fn is_bad_pivot(&self) -> bool {
        self.is_zero()
    }
}

/// Square sparse matrix stored by rows with sorted column indices.
#[derive(Clone, Debug, PartialEq)]
pub struct SparseMatrix<T> {
    rows: Vec<Vec<(usize, T)>>,
}

impl<T: Scalar> SparseMatrix<T> {
    /// Rows are sorted and entries for the same column are summed.
    pub fn from_rows(rows: Vec<Vec<(usize, T)>>) -> Self {
        let n = rows.len();
        let rows = rows
            .into_iter()
            .map(|row| {
                let mut merged: BTreeMap<usize, T> = BTreeMap::new();
                for (j, v) in row {
                    assert!(j < n, "column {j} out of range for {n}x{n} matrix");
                    let e = merged.entry(j).or_insert_with(T::zero);
                    *e = e.clone() + v;
                }
                merged.into_iter().filter(|(_, v)| !v.is_zero()).collect()
            })
            .collect();
        SparseMatrix { rows }
    }

    pub fn n(&self) -> usize {
        self.rows.len()
    }

    pub fn row(&self, i: usize) -> &[(usize, T)] {
        &self.rows[i]
    }

    pub fn nnz(&self) -> usize {
        self.rows.iter().map(Vec::len).sum()
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        self.rows
            .iter()
            .map(|row| {
                row.iter()
                    .fold(T::zero(), |acc, (j, a)| acc + a.clone() * x[*j].clone())
            })
            .collect()
    }
}

/// LU factors with diagonal pivoting in a fill-reducing order.
#[derive(Clone, Debug)]
pub struct SparseLu<T> {
    order: Vec<usize>,
    /// Per pivot step: `(row, multiplier)` applied to the right-hand side.
    lower: Vec<Vec<(usize, T)>>,
    /// Per pivot step: off-diagonal entries of the pivot row.
    upper: Vec<Vec<(usize, T)>>,
    pivots: Vec<T>,
}

impl<T: Scalar> SparseLu<T> {
    pub fn factor(a: &SparseMatrix<T>) -> Result<Self> {
        let n = a.n();
        let mut rows: Vec<BTreeMap<usize, T>> = a
            .rows
            .iter()
            .map(|r| r.iter().cloned().collect())
            .collect();
        let mut cols: Vec<BTreeSet<usize>> = vec![BTreeSet::new(); n];
        for (i, row) in rows.iter().enumerate() {
            for &j in row.keys() {
                cols[j].insert(i);
            }
        }
        let cost = |rows: &[BTreeMap<usize, T>], cols: &[BTreeSet<usize>], i: usize| {
            rows[i].len().saturating_sub(1) * cols[i].len().saturating_sub(1)
        };
        let mut key: Vec<usize> = (0..n).map(|i| cost(&rows, &cols, i)).collect();
        let mut queue: BTreeSet<(usize, usize)> = (0..n).map(|i| (key[i], i)).collect();
        let mut active = vec![true; n];

        let mut order = Vec::with_capacity(n);
        let mut lower = Vec::with_capacity(n);
        let mut upper = Vec::with_capacity(n);
        let mut pivots = Vec::with_capacity(n);

        while let Some((_, k)) = queue.pop_first() {
            active[k] = false;
            let mut pivot_row = std::mem::take(&mut rows[k]);
            let pivot = pivot_row.remove(&k).unwrap_or_else(T::zero);
            if pivot.is_bad_pivot() {
                return Err(Error::Singular(k));
            }
            for &j in pivot_row.keys() {
                cols[j].remove(&k);
            }
            let below: Vec<usize> = std::mem::take(&mut cols[k])
                .into_iter()
                .filter(|&r| r != k && active[r])
                .collect();

            let mut touched: BTreeSet<usize> = pivot_row.keys().copied().collect();
            let mut multipliers = Vec::with_capacity(below.len());
            for &r in &below {
                let a_rk = rows[r].remove(&k).expect("column index out of sync");
                let f = a_rk / pivot.clone();
                for (&j, u) in &pivot_row {
                    let cur = rows[r].remove(&j);
                    let next = match cur {
                        Some(v) => v - f.clone() * u.clone(),
                        None => {
                            cols[j].insert(r);
                            T::zero() - f.clone() * u.clone()
                        }
                    };
                    if next.is_zero() {
                        cols[j].remove(&r);
                    } else {
                        rows[r].insert(j, next);
                    }
                }
                multipliers.push((r, f));
                touched.insert(r);
            }
            for i in touched {
                if active[i] {
                    queue.remove(&(key[i], i));
                    key[i] = cost(&rows, &cols, i);
                    queue.insert((key[i], i));
                }
            }

            order.push(k);
            lower.push(multipliers);
            upper.push(pivot_row.into_iter().collect());
            pivots.push(pivot);
        }

        Ok(SparseLu {
            order,
            lower,
            upper,
            pivots,
        })
    }

    pub fn n(&self) -> usize {
        self.order.len()
    }

    /// Entries stored in both factors (fill-in diagnostic).
    pub fn factor_nnz(&self) -> usize {
        self.lower.iter().map(Vec::len).sum::<usize>()
            + self.upper.iter().map(Vec::len).sum::<usize>()
            + self.pivots.len()
    }

    pub fn solve(&self, rhs: &[T]) -> Vec<T> {
        assert_eq!(rhs.len(), self.n());
        let mut b = rhs.to_vec();
        for (step, &k) in self.order.iter().enumerate() {
            let bk = b[k].clone();
            if bk.is_zero() {
                continue;
            }
            for (r, f) in &self.lower[step] {
                b[*r] = b[*r].clone() - f.clone() * bk.clone();
            }
        }
        let mut x = vec![T::zero(); self.n()];
        for (step, &k) in self.order.iter().enumerate().rev() {
            let acc = self.upper[step]
                .iter()
                .fold(b[k].clone(), |acc, (j, u)| acc - u.clone() * x[*j].clone());
            x[k] = acc / self.pivots[step].clone();
        }
        x
    }
}

/// Largest componentwise backward error `|b - Ax|_i / (|A||x| + |b|)_i`.
pub fn backward_error(a: &SparseMatrix<f64>, x: &[f64], b: &[f64]) -> f64 {
    (0..a.n())
        .map(|i| {
            let (mut r, mut s) = (b[i], b[i].abs());
            for &(j, v) in a.row(i) {
                r -= v * x[j];
                s += (v * x[j]).abs();
            }
            if s == 0.0 {
                r.abs()
            } else {
                r.abs() / s
            }
        })
        .fold(0.0, f64::max)
}

/// Floating solve with iterative refinement.
#[derive(Clone, Debug)]
pub struct FloatSolver {
    matrix: SparseMatrix<f64>,
    lu: SparseLu<f64>,
    tol: f64,
    max_refinements: usize,
}

/// Solution vector together with its componentwise backward error.
#[derive(Clone, Debug, PartialEq)]
pub struct Refined {
    pub x: Vec<f64>,
    pub residual: f64,
    pub refinements: usize,
}

impl FloatSolver {
    pub const DEFAULT_TOL: f64 = 1e-9;

    pub fn new(matrix: SparseMatrix<f64>, tol: f64) -> Result<Self> {
        let lu = SparseLu::factor(&matrix)?;
        Ok(FloatSolver {
            matrix,
            lu,
            tol,
            max_refinements: 4,
        })
    }

    pub fn matrix(&self) -> &SparseMatrix<f64> {
        &self.matrix
    }

    pub fn solve(&self, b: &[f64]) -> Result<Refined> {
        let mut x = self.lu.solve(b);
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::SolveOverflow);
        }
        let mut residual = backward_error(&self.matrix, &x, b);
        let mut refinements = 0;
        while residual > f64::EPSILON * 4.0 && refinements < self.max_refinements {
            let ax = self.matrix.mul_vec(&x);
            let r: Vec<f64> = b.iter().zip(&ax).map(|(bi, ai)| bi - ai).collect();
            let dx = self.lu.solve(&r);
            let candidate: Vec<f64> = x.iter().zip(&dx).map(|(xi, di)| xi + di).collect();
            if candidate.iter().any(|v| !v.is_finite()) {
                return Err(Error::SolveOverflow);
            }
            let next = backward_error(&self.matrix, &candidate, b);
            refinements += 1;
            if next >= residual {
                break;
            }
            x = candidate;
            residual = next;
        }
        if residual > self.tol {
            return Err(Error::ResidualTooLarge {
                residual,
                tol: self.tol,
            });
        }
        Ok(Refined {
            x,
            residual,
            refinements,
        })
    }
}

/// Exact solve over the rationals, certified by exact re-substitution.
pub fn solve_exact(a: &SparseMatrix<BigRational>, b: &[BigRational]) -> Result<Vec<BigRational>> {
    let f = <BigRational as Arithmetic>::factor(a.clone(), 0.0)?;
    <BigRational as Arithmetic>::solve(&f, b).map(|(x, _)| x)
}

/// Arithmetic a first-step system can be solved in.
pub trait Arithmetic: Scalar + 'static {
    type Factored: Send + Sync;

    fn factor(m: SparseMatrix<Self>, tol: f64) -> Result<Self::Factored>;
    /// Solution and its backward error (zero for exact arithmetic).
    fn solve(f: &Self::Factored, rhs: &[Self]) -> Result<(Vec<Self>, f64)>;
    fn to_f64(&self) -> f64;
}

impl Arithmetic for f64 {
    type Factored = FloatSolver;

    fn factor(m: SparseMatrix<f64>, tol: f64) -> Result<FloatSolver> {
        FloatSolver::new(m, tol)
    }

    fn solve(f: &FloatSolver, rhs: &[f64]) -> Result<(Vec<f64>, f64)> {
        f.solve(rhs).map(|r| (r.x, r.residual))
    }

    fn to_f64(&self) -> f64 {
        *self
    }
}

/// Exact factorization plus the matrix it certifies against.
#[derive(Clone, Debug)]
pub struct ExactSolver {
    matrix: SparseMatrix<BigRational>,
    lu: SparseLu<BigRational>,
}

impl Arithmetic for BigRational {
    type Factored = ExactSolver;

    fn factor(m: SparseMatrix<BigRational>, _tol: f64) -> Result<ExactSolver> {
        let lu = SparseLu::factor(&m)?;
        Ok(ExactSolver { matrix: m, lu })
    }

    fn solve(f: &ExactSolver, rhs: &[BigRational]) -> Result<(Vec<BigRational>, f64)> {
        let x = f.lu.solve(rhs);
        if f.matrix.mul_vec(&x) != rhs {
            return Err(Error::ResidualTooLarge {
                residual: f64::INFINITY,
                tol: 0.0,
            });
        }
        Ok((x, 0.0))
    }

    fn to_f64(&self) -> f64 {
        rational_to_f64(self)
    }
}

/// Nearest `f64`, saturating to infinity when out of range.
pub fn rational_to_f64(q: &BigRational) -> f64 {
    use num_traits::ToPrimitive;
    ToPrimitive::to_f64(q).unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(n: i64, d: i64) -> BigRational {
        BigRational::new(n.into(), d.into())
    }

    /// Dense Gaussian elimination with partial pivoting, test-only reference.
    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.iter().zip(b).map(|(r, &bi)| {
            let mut r = r.clone();
            r.push(bi);
            r
        }).collect();
        for c in 0..n {
            let p = (c..n).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs())).unwrap();
            m.swap(c, p);
            for r in c + 1..n {
                let f = m[r][c] / m[c][c];
                for k in c..=n {
                    m[r][k] -= f * m[c][k];
                }
            }
        }
        let mut x = vec![0.0; n];
        for i in (0..n).rev() {
            let s: f64 = (i + 1..n).map(|j| m[i][j] * x[j]).sum();
            x[i] = (m[i][n] - s) / m[i][i];
        }
        x
    }

    #[test]
    fn two_by_two_first_step_system() {
        // T(v) = 1 + T(a)/2, T(a) = 1 + T(v)  =>  T(a) = 4, T(v) = 3.
        let a = SparseMatrix::from_rows(vec![
            vec![(0, 1.0), (1, -1.0)],
            vec![(0, -0.5), (1, 1.0)],
        ]);
        let s = FloatSolver::new(a, 1e-12).unwrap();
        let r = s.solve(&[1.0, 1.0]).unwrap();
        assert!((r.x[0] - 4.0).abs() < 1e-14);
        assert!((r.x[1] - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exact_matches_hand_solution() {
        let a = SparseMatrix::from_rows(vec![
            vec![(0, q(1, 1)), (1, q(-1, 1))],
            vec![(0, q(-1, 2)), (1, q(1, 1))],
        ]);
        let x = solve_exact(&a, &[q(1, 1), q(1, 1)]).unwrap();
        assert_eq!(x, vec![q(4, 1), q(3, 1)]);
    }

    #[test]
    fn singular_is_reported() {
        let a = SparseMatrix::from_rows(vec![
            vec![(0, q(1, 1)), (1, q(-1, 1))],
            vec![(0, q(-1, 1)), (1, q(1, 1))],
        ]);
        assert!(matches!(solve_exact(&a, &[q(1, 1), q(1, 1)]), Err(Error::Singular(_))));
    }

    #[test]
    fn path_system_has_no_fill() {
        // Tridiagonal (I - Q) for the simple walk on a path absorbed at one end.
        let n = 50;
        let rows = (0..n)
            .map(|i| {
                let mut r = vec![(i, 1.0)];
                if i > 0 {
                    r.push((i - 1, -0.5));
                }
                if i + 1 < n {
                    r.push((i + 1, if i == 0 { -1.0 } else { -0.5 }));
                }
                r
            })
            .collect();
        let a = SparseMatrix::from_rows(rows);
        let lu = SparseLu::factor(&a).unwrap();
        assert!(lu.factor_nnz() <= a.nnz());
    }

    #[test]
    fn matches_dense_reference_on_diagonally_dominant_system() {
        let n = 12;
        let mut dense = vec![vec![0.0; n]; n];
        let mut rows = vec![Vec::new(); n];
        for i in 0..n {
            for j in 0..n {
                if i != j && (i * 7 + j * 3) % 5 == 0 {
                    let v = -(((i + 2 * j) % 4 + 1) as f64) / 40.0;
                    dense[i][j] = v;
                    rows[i].push((j, v));
                }
            }
            dense[i][i] = 1.0;
            rows[i].push((i, 1.0));
        }
        let b: Vec<f64> = (0..n).map(|i| 1.0 + i as f64).collect();
        let want = dense_solve(&dense, &b);
        let got = FloatSolver::new(SparseMatrix::from_rows(rows), 1e-12)
            .unwrap()
            .solve(&b)
            .unwrap();
        for (g, w) in got.x.iter().zip(&want) {
            assert!((g - w).abs() <= 1e-12 * w.abs().max(1.0));
        }
    }
}
