//! Sparse storage and the direct solvers behind the equilibrium routines.
//!
//! `ProfileLu` is an envelope (skyline) LU without pivoting, applied after a
//! reverse Cuthill-McKee reordering. It is meant for matrices of the form
//! `theta*I - A` with `A` a generator: those are column diagonally dominant,
//! so Gaussian elimination needs no row exchanges and fill stays inside the
//! symmetric envelope.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// Square compressed-sparse-column matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix<T> {
    n: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<T>,
}

impl<T: Scalar> CscMatrix<T> {
    /// Build from per-column `(row, value)` lists. Duplicate rows are summed.
    pub fn from_columns(n: usize, columns: Vec<Vec<(usize, T)>>) -> Self {
        assert_eq!(columns.len(), n, "one entry list per column");
        let mut col_ptr = Vec::with_capacity(n + 1);
        let mut row_idx = Vec::new();
        let mut values = Vec::new();
        col_ptr.push(0);
        for mut col in columns {
            col.sort_by_key(|&(i, _)| i);
            for (i, v) in col {
                assert!(i < n, "row {i} out of range");
                if row_idx.len() > *col_ptr.last().unwrap() && *row_idx.last().unwrap() == i {
                    let last = values.last_mut().unwrap();
                    *last = *last + v;
                } else {
                    row_idx.push(i);
                    values.push(v);
                }
            }
            col_ptr.push(row_idx.len());
        }
        Self {
            n,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, T)> + '_ {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        self.row_idx[r.clone()]
            .iter()
            .copied()
            .zip(self.values[r].iter().copied())
    }

    pub fn get(&self, i: usize, j: usize) -> T {
        let r = self.col_ptr[j]..self.col_ptr[j + 1];
        match self.row_idx[r.clone()].binary_search(&i) {
            Ok(p) => self.values[r.start + p],
            Err(_) => T::zero(),
        }
    }

    pub fn mul_vec(&self, x: &[T]) -> Vec<T> {
        assert_eq!(x.len(), self.n);
        let mut y = vec![T::zero(); self.n];
        for (j, &xj) in x.iter().enumerate() {
            for (i, v) in self.column(j) {
                y[i] = y[i] + v * xj;
            }
        }
        y
    }

    #[allow(clippy::needless_range_loop)]
    pub fn to_dense(&self) -> Vec<Vec<T>> {
        let mut d = vec![vec![T::zero(); self.n]; self.n];
        for j in 0..self.n {
            for (i, v) in self.column(j) {
                d[i][j] = v;
            }
        }
        d
    }

    /// `shift*I - self`.
    pub fn shifted_negation(&self, shift: T) -> Self {
        let columns = (0..self.n)
            .map(|j| {
                let mut col: Vec<(usize, T)> = self.column(j).map(|(i, v)| (i, -v)).collect();
                col.push((j, shift));
                col
            })
            .collect();
        Self::from_columns(self.n, columns)
    }

    /// Principal submatrix on `keep` (indices into `self`, kept in order).
    pub fn principal_submatrix(&self, keep: &[usize]) -> Self {
        let mut map = vec![usize::MAX; self.n];
        for (new, &old) in keep.iter().enumerate() {
            map[old] = new;
        }
        let columns = keep
            .iter()
            .map(|&j| {
                self.column(j)
                    .filter(|&(i, _)| map[i] != usize::MAX)
                    .map(|(i, v)| (map[i], v))
                    .collect()
            })
            .collect();
        Self::from_columns(keep.len(), columns)
    }

    /// Indices reachable from `start` along nonzero off-diagonal entries,
    /// following the column convention `j -> i` for entry `(i, j)`.
    pub fn reachable_from(&self, start: usize) -> Vec<usize> {
        let mut seen = vec![false; self.n];
        seen[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(j) = queue.pop_front() {
            for (i, v) in self.column(j) {
                if i != j && v != T::zero() && !seen[i] {
                    seen[i] = true;
                    queue.push_back(i);
                }
            }
        }
        (0..self.n).filter(|&i| seen[i]).collect()
    }

    /// Symmetrized adjacency lists (diagonal excluded).
    fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n];
        for j in 0..self.n {
            for (i, _) in self.column(j) {
                if i != j {
                    adj[i].push(j);
                    adj[j].push(i);
                }
            }
        }
        for a in &mut adj {
            a.sort_unstable();
            a.dedup();
        }
        adj
    }
}

/// Reverse Cuthill-McKee ordering. Returns `perm` with `perm[new] = old`.
pub fn reverse_cuthill_mckee(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    let mut order = Vec::with_capacity(n);
    let mut placed = vec![false; n];
    let degree = |v: usize| adj[v].len();
    while order.len() < n {
        // Start each component at a pseudo-peripheral node.
        let seed = (0..n)
            .filter(|&v| !placed[v])
            .min_by_key(|&v| degree(v))
            .unwrap();
        let mut start = seed;
        let mut depth = 0;
        for _ in 0..4 {
            let (last, d) = bfs_last_level(adj, start, &placed);
            if d <= depth {
                break;
            }
            depth = d;
            start = last;
        }
        let begin = order.len();
        placed[start] = true;
        order.push(start);
        let mut head = begin;
        while head < order.len() {
            let v = order[head];
            head += 1;
            let mut next: Vec<usize> = adj[v].iter().copied().filter(|&u| !placed[u]).collect();
            next.sort_by_key(|&u| (degree(u), u));
            for u in next {
                placed[u] = true;
                order.push(u);
            }
        }
    }
    order.reverse();
    order
}

fn bfs_last_level(adj: &[Vec<usize>], start: usize, placed: &[bool]) -> (usize, usize) {
    let mut level = vec![usize::MAX; adj.len()];
    level[start] = 0;
    let mut queue = VecDeque::from([start]);
    let mut last = start;
    while let Some(v) = queue.pop_front() {
        if level[v] > level[last] || (level[v] == level[last] && adj[v].len() < adj[last].len()) {
            last = v;
        }
        for &u in &adj[v] {
            if !placed[u] && level[u] == usize::MAX {
                level[u] = level[v] + 1;
                queue.push_back(u);
            }
        }
    }
    (last, level[last])
}

/// Envelope LU factorization `P M P^T = L U` of a matrix that needs no
/// pivoting.
#[derive(Debug, Clone)]
pub struct ProfileLu<T> {
    perm: Vec<usize>,
    first: Vec<usize>,
    offset: Vec<usize>,
    // Strict lower row `k` of L (unit diagonal implied) and strict upper
    // column `k` of U, both spanning `first[k]..k`.
    lower: Vec<T>,
    upper: Vec<T>,
    diag: Vec<T>,
}

impl<T: Scalar> ProfileLu<T> {
    pub fn factor(m: &CscMatrix<T>) -> Result<Self> {
        let perm = reverse_cuthill_mckee(&m.adjacency());
        Self::factor_with(m, perm)
    }

    /// Factor under a given ordering (`perm[new] = old`).
    pub fn factor_with(m: &CscMatrix<T>, perm: Vec<usize>) -> Result<Self> {
        let n = m.dim();
        assert_eq!(perm.len(), n);
        let mut inv = vec![0; n];
        for (new, &old) in perm.iter().enumerate() {
            inv[old] = new;
        }
        let mut first: Vec<usize> = (0..n).collect();
        for j in 0..n {
            for (i, _) in m.column(j) {
                let (pi, pj) = (inv[i], inv[j]);
                let (hi, lo) = if pi > pj { (pi, pj) } else { (pj, pi) };
                first[hi] = first[hi].min(lo);
            }
        }
        let mut offset = Vec::with_capacity(n + 1);
        offset.push(0);
        for k in 0..n {
            offset.push(offset[k] + (k - first[k]));
        }
        let size = offset[n];
        let mut lower = vec![T::zero(); size];
        let mut upper = vec![T::zero(); size];
        let mut diag = vec![T::zero(); n];
        for j in 0..n {
            let pj = inv[j];
            for (i, v) in m.column(j) {
                let pi = inv[i];
                if pi == pj {
                    diag[pi] = v;
                } else if pi > pj {
                    lower[offset[pi] + pj - first[pi]] = v;
                } else {
                    upper[offset[pj] + pi - first[pj]] = v;
                }
            }
        }

        for k in 0..n {
            let fk = first[k];
            let ok = offset[k];
            // Column k of U.
            for i in fk..k {
                let lo = fk.max(first[i]);
                let s = dot(
                    &lower[offset[i] + lo - first[i]..offset[i] + i - first[i]],
                    &upper[ok + lo - fk..ok + i - fk],
                );
                let u = &mut upper[ok + i - fk];
                *u = *u - s;
            }
            // Row k of L.
            for j in fk..k {
                let lo = fk.max(first[j]);
                let s = dot(
                    &lower[ok + lo - fk..ok + j - fk],
                    &upper[offset[j] + lo - first[j]..offset[j] + j - first[j]],
                );
                let l = &mut lower[ok + j - fk];
                *l = (*l - s) / diag[j];
            }
            let s = dot(&lower[ok..ok + k - fk], &upper[ok..ok + k - fk]);
            diag[k] = diag[k] - s;
            let p = diag[k];
            if p.abs() <= T::epsilon() * T::lit(1e-6) || !p.is_finite() {
                return Err(Error::Singular {
                    index: perm[k],
                    pivot: p.to_f64().unwrap_or(f64::NAN),
                });
            }
        }
        Ok(Self {
            perm,
            first,
            offset,
            lower,
            upper,
            diag,
        })
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Number of stored off-diagonal factor entries.
    pub fn envelope_size(&self) -> usize {
        self.lower.len()
    }

    pub fn solve(&self, b: &[T]) -> Vec<T> {
        let n = self.dim();
        assert_eq!(b.len(), n);
        let mut y: Vec<T> = self.perm.iter().map(|&old| b[old]).collect();
        for k in 0..n {
            let fk = self.first[k];
            let row = &self.lower[self.offset[k]..self.offset[k + 1]];
            let s = dot(row, &y[fk..k]);
            y[k] = y[k] - s;
        }
        for k in (0..n).rev() {
            y[k] = y[k] / self.diag[k];
            let yk = y[k];
            let fk = self.first[k];
            let col = &self.upper[self.offset[k]..self.offset[k + 1]];
            for (yi, &u) in y[fk..k].iter_mut().zip(col) {
                *yi = *yi - u * yk;
            }
        }
        let mut x = vec![T::zero(); n];
        for (new, &old) in self.perm.iter().enumerate() {
            x[old] = y[new];
        }
        x
    }
}

#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

/// Dense Gaussian elimination with partial pivoting; `a` is row-major.
#[allow(clippy::needless_range_loop)]
pub fn dense_solve<T: Scalar>(mut a: Vec<Vec<T>>, mut b: Vec<T>) -> Result<Vec<T>> {
    let n = b.len();
    if a.len() != n {
        return Err(Error::LengthMismatch {
            left: a.len(),
            right: n,
        });
    }
    for k in 0..n {
        let p = (k..n)
            .max_by(|&x, &y| a[x][k].abs().partial_cmp(&a[y][k].abs()).unwrap())
            .unwrap();
        if a[p][k] == T::zero() || !a[p][k].is_finite() {
            return Err(Error::Singular {
                index: k,
                pivot: a[p][k].to_f64().unwrap_or(f64::NAN),
            });
        }
        a.swap(k, p);
        b.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            if f == T::zero() {
                continue;
            }
            for j in k..n {
                let v = a[k][j];
                a[i][j] = a[i][j] - f * v;
            }
            let v = b[k];
            b[i] = b[i] - f * v;
        }
    }
    for k in (0..n).rev() {
        let s = (k + 1..n).fold(T::zero(), |acc, j| acc + a[k][j] * b[j]);
        b[k] = (b[k] - s) / a[k][k];
    }
    Ok(b)
}
