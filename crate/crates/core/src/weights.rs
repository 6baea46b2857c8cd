//! Sparse spatial weight matrices.
//!
//! A [`WeightMatrix`] is a non-negative `n x n` matrix with a zero diagonal,
//! stored row-compressed with sorted, deduplicated column indices. Zero
//! weights are never stored.
//!
//! Lattices are indexed row-major: cell `(r, c)` (0-based) has index
//! `r * cols + c`. After [`WeightMatrix::lower_triangularize`] a location only
//! depends on locations with a smaller index, so information flows from the
//! first row/column of the grid towards the last.

use std::cmp::Reverse;
use std::collections::BinaryHeap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest `n` for which [`WeightMatrix::to_dense`] is allowed.
pub const MAX_DENSE_N: usize = 4096;

const ROW_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Contiguity {
    /// 4-neighbourhood.
    Rook,
    /// 8-neighbourhood.
    Queen,
}

impl std::str::FromStr for Contiguity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rook" => Ok(Contiguity::Rook),
            "queen" => Ok(Contiguity::Queen),
            other => Err(Error::InvalidInput(format!("unknown contiguity scheme '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WeightMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    cols: Vec<usize>,
    vals: Vec<f64>,
    row_standardized: bool,
    triangular_order: Option<Vec<usize>>,
}

impl WeightMatrix {
    pub fn zeros(n: usize) -> Self {
        WeightMatrix {
            n,
            row_ptr: vec![0; n + 1],
            cols: Vec::new(),
            vals: Vec::new(),
            row_standardized: false,
            triangular_order: None,
        }
    }

    /// Builds a matrix from 0-based `(row, col, weight)` triplets.
    ///
    /// Zero weights are dropped. Diagonal entries, negative or non-finite
    /// weights, out-of-range indices and duplicated `(row, col)` keys are
    /// rejected.
    pub fn from_triplets<I>(n: usize, triplets: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize, f64)>,
    {
        let mut entries: Vec<(usize, usize, f64)> = Vec::new();
        for (i, j, w) in triplets {
            if i >= n || j >= n {
                return Err(Error::InvalidInput(format!(
                    "entry ({i}, {j}) out of range for n = {n}"
                )));
            }
            if !w.is_finite() || w < 0.0 {
                return Err(Error::InvalidInput(format!(
                    "weight w[{i},{j}] = {w} must be finite and non-negative"
                )));
            }
            if w == 0.0 {
                continue;
            }
            if i == j {
                return Err(Error::InvalidInput(format!(
                    "diagonal entry w[{i},{i}] = {w} must be zero"
                )));
            }
            entries.push((i, j, w));
        }
        entries.sort_by_key(|&(i, j, _)| (i, j));
        if let Some(dup) = entries.windows(2).find(|p| (p[0].0, p[0].1) == (p[1].0, p[1].1)) {
            return Err(Error::InvalidInput(format!(
                "duplicate entry ({}, {})",
                dup[0].0, dup[0].1
            )));
        }
        Ok(Self::from_sorted(n, entries))
    }

    fn from_sorted(n: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut row_ptr = vec![0usize; n + 1];
        for &(i, _, _) in &entries {
            row_ptr[i + 1] += 1;
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        let (cols, vals) = entries.into_iter().map(|(_, j, w)| (j, w)).unzip();
        WeightMatrix {
            n,
            row_ptr,
            cols,
            vals,
            row_standardized: false,
            triangular_order: None,
        }
    }

    /// Binary contiguity matrix of a `rows x cols` lattice.
    pub fn grid_contiguity(rows: usize, cols: usize, scheme: Contiguity) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::InvalidInput(format!(
                "grid dimensions must be positive, got {rows}x{cols}"
            )));
        }
        let offsets: &[(isize, isize)] = match scheme {
            Contiguity::Rook => &[(-1, 0), (0, -1), (0, 1), (1, 0)],
            Contiguity::Queen => &[(-1, -1), (-1, 0), (-1, 1), (0, -1), (0, 1), (1, -1), (1, 0), (1, 1)],
        };
        let mut entries = Vec::with_capacity(rows * cols * offsets.len());
        for r in 0..rows {
            for c in 0..cols {
                let i = r * cols + c;
                for &(dr, dc) in offsets {
                    let (rr, cc) = (r as isize + dr, c as isize + dc);
                    if rr < 0 || cc < 0 || rr >= rows as isize || cc >= cols as isize {
                        continue;
                    }
                    entries.push((i, rr as usize * cols + cc as usize, 1.0));
                }
            }
        }
        // offsets are listed in row-major order, so entries are already sorted
        Ok(Self::from_sorted(rows * cols, entries))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vals.is_empty()
    }

    pub fn is_row_standardized(&self) -> bool {
        self.row_standardized
    }

    pub fn triangular_order(&self) -> Option<&[usize]> {
        self.triangular_order.as_deref()
    }

    /// Stored entries of row `i` as `(col, weight)`.
    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[range.clone()]
            .iter()
            .copied()
            .zip(self.vals[range].iter().copied())
    }

    /// All stored entries as `(row, col, weight)` in row-major order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.n).flat_map(move |i| self.row(i).map(move |(j, w)| (i, j, w)))
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let range = self.row_ptr[i]..self.row_ptr[i + 1];
        match self.cols[range.clone()].binary_search(&j) {
            Ok(k) => self.vals[range.start + k],
            Err(_) => 0.0,
        }
    }

    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.row(i).map(|(_, w)| w).sum()).collect()
    }

    /// Infinity norm, i.e. the largest row sum.
    pub fn max_row_sum(&self) -> f64 {
        self.row_sums().into_iter().fold(0.0, f64::max)
    }

    pub fn neighbour_counts(&self) -> Vec<usize> {
        (0..self.n).map(|i| self.row_ptr[i + 1] - self.row_ptr[i]).collect()
    }

    pub fn is_symmetric(&self) -> bool {
        self.iter().all(|(i, j, w)| self.get(j, i) == w)
    }

    /// `W x`.
    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        assert_eq!(x.len(), self.n, "vector length must match matrix dimension");
        (0..self.n).map(|i| self.row(i).map(|(j, w)| w * x[j]).sum()).collect()
    }

    /// Dense row-major copy. Only available for `n <= MAX_DENSE_N`.
    pub fn to_dense(&self) -> Result<Vec<f64>> {
        if self.n > MAX_DENSE_N {
            return Err(Error::InvalidInput(format!(
                "dense conversion limited to n <= {MAX_DENSE_N}, got {}",
                self.n
            )));
        }
        let mut dense = vec![0.0; self.n * self.n];
        for (i, j, w) in self.iter() {
            dense[i * self.n + j] = w;
        }
        Ok(dense)
    }

    /// Each non-empty row divided by its sum. Empty rows (islands) stay empty.
    pub fn row_standardize(&self) -> Self {
        let mut out = self.clone();
        for i in 0..self.n {
            let range = self.row_ptr[i]..self.row_ptr[i + 1];
            let sum: f64 = self.vals[range.clone()].iter().sum();
            if sum > 0.0 {
                for v in &mut out.vals[range] {
                    *v /= sum;
                }
            }
        }
        out.row_standardized = true;
        out
    }

    /// Drops every entry on or above the diagonal. The result is strictly
    /// lower triangular in the current index order, which is recorded as its
    /// triangular order.
    pub fn lower_triangularize(&self) -> Self {
        let entries = self.iter().filter(|&(i, j, _)| j < i).collect();
        let mut out = Self::from_sorted(self.n, entries);
        out.triangular_order = Some((0..self.n).collect());
        out
    }

    /// Every weight multiplied by `factor`.
    pub fn scale(&self, factor: f64) -> Result<Self> {
        if !factor.is_finite() || factor < 0.0 {
            return Err(Error::InvalidInput(format!(
                "scale factor must be finite and non-negative, got {factor}"
            )));
        }
        if factor == 0.0 {
            return Ok(Self::zeros(self.n));
        }
        let mut out = self.clone();
        for v in &mut out.vals {
            *v *= factor;
        }
        out.row_standardized = self.row_standardized && factor == 1.0;
        Ok(out)
    }

    /// Topological order of the dependency graph (edge `j -> i` iff
    /// `w_ij > 0`), or `None` if the graph has a cycle. Ties are broken by
    /// smallest index, so a strictly lower triangular matrix yields the
    /// identity.
    pub fn find_triangular_order(&self) -> Option<Vec<usize>> {
        joint_triangular_order(&[self])
    }

    /// Same matrix with the triangular order stored, when one exists.
    pub fn with_triangular_order(mut self) -> Self {
        self.triangular_order = self.find_triangular_order();
        self
    }

    /// True when every stored entry `(i, j)` has `j` strictly before `i` in
    /// `order`.
    pub fn is_strictly_triangular_under(&self, order: &[usize]) -> bool {
        match positions(order, self.n) {
            Some(pos) => self.iter().all(|(i, j, _)| pos[j] < pos[i]),
            None => false,
        }
    }

    /// Relabels locations: entry `(i, j)` moves to `(new_of[i], new_of[j])`.
    pub fn permute(&self, new_of: &[usize]) -> Result<Self> {
        positions(new_of, self.n).ok_or_else(|| Error::InvalidInput("not a permutation".into()))?;
        let mut out = Self::from_triplets(self.n, self.iter().map(|(i, j, w)| (new_of[i], new_of[j], w)))?;
        out.row_standardized = self.row_standardized;
        Ok(out)
    }

    /// Reads `i,j,w` triplets with 1-based indices. The dimension is `n`
    /// when given, otherwise the largest index seen.
    pub fn read_csv<R: Read>(reader: R, n: Option<usize>) -> Result<Self> {
        #[derive(Deserialize)]
        struct Row {
            i: usize,
            j: usize,
            w: f64,
        }
        let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
        let headers = rdr.headers()?.clone();
        if headers.iter().collect::<Vec<_>>() != ["i", "j", "w"] {
            return Err(Error::InvalidInput(format!(
                "weight file header must be 'i,j,w', got '{}'",
                headers.iter().collect::<Vec<_>>().join(",")
            )));
        }
        let mut triplets = Vec::new();
        for row in rdr.deserialize::<Row>() {
            let row = row?;
            if row.i == 0 || row.j == 0 {
                return Err(Error::InvalidInput("weight file indices are 1-based".into()));
            }
            triplets.push((row.i - 1, row.j - 1, row.w));
        }
        let max_index = triplets.iter().map(|&(i, j, _)| i.max(j) + 1).max().unwrap_or(0);
        let n = match n {
            Some(n) if n < max_index => {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: max_index,
                })
            }
            Some(n) => n,
            None => max_index,
        };
        let mut w = Self::from_triplets(n, triplets)?;
        w.row_standardized = w.row_sums().iter().all(|&s| s == 0.0 || (s - 1.0).abs() <= ROW_SUM_TOL);
        Ok(w.with_triangular_order())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(writer);
        wtr.write_record(["i", "j", "w"])?;
        for (i, j, w) in self.iter() {
            wtr.write_record([(i + 1).to_string(), (j + 1).to_string(), crate::io::fmt_f64(w)])?;
        }
        wtr.flush()?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>, n: Option<usize>) -> Result<Self> {
        Self::read_csv(std::fs::File::open(path)?, n)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        self.write_csv(std::fs::File::create(path)?)
    }
}

/// Binary rook/queen contiguity of a lattice; same as [`WeightMatrix::grid_contiguity`].
pub fn build_grid_contiguity(rows: usize, cols: usize, scheme: Contiguity) -> Result<WeightMatrix> {
    WeightMatrix::grid_contiguity(rows, cols, scheme)
}

/// Topological order of the union of the dependency graphs of `mats`.
pub fn joint_triangular_order(mats: &[&WeightMatrix]) -> Option<Vec<usize>> {
    let n = mats.first()?.n;
    debug_assert!(mats.iter().all(|m| m.n == n));
    let mut dependents: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut indegree = vec![0usize; n];
    for i in 0..n {
        let mut deps: Vec<usize> = mats.iter().flat_map(|m| m.row(i).map(|(j, _)| j)).collect();
        deps.sort_unstable();
        deps.dedup();
        indegree[i] = deps.len();
        for j in deps {
            dependents[j].push(i);
        }
    }
    let mut ready: BinaryHeap<Reverse<usize>> = (0..n).filter(|&i| indegree[i] == 0).map(Reverse).collect();
    let mut order = Vec::with_capacity(n);
    while let Some(Reverse(j)) = ready.pop() {
        order.push(j);
        for &i in &dependents[j] {
            indegree[i] -= 1;
            if indegree[i] == 0 {
                ready.push(Reverse(i));
            }
        }
    }
    (order.len() == n).then_some(order)
}

/// Inverse of a permutation given as a list; `None` if `order` is not a
/// permutation of `0..n`.
pub(crate) fn positions(order: &[usize], n: usize) -> Option<Vec<usize>> {
    if order.len() != n {
        return None;
    }
    let mut pos = vec![usize::MAX; n];
    for (k, &i) in order.iter().enumerate() {
        if i >= n || pos[i] != usize::MAX {
            return None;
        }
        pos[i] = k;
    }
    Some(pos)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rook(r: usize, c: usize) -> WeightMatrix {
        WeightMatrix::grid_contiguity(r, c, Contiguity::Rook).unwrap()
    }

    #[test]
    fn single_cell_has_no_neighbours() {
        let w = rook(1, 1);
        assert_eq!(w.n(), 1);
        assert!(w.is_empty());
    }

    #[test]
    fn two_by_two_rook_has_two_neighbours_each() {
        let w = rook(2, 2);
        assert_eq!(w.neighbour_counts(), vec![2, 2, 2, 2]);
        assert!(w.iter().all(|(_, _, v)| v == 1.0));
    }

    #[test]
    fn queen_three_by_three_counts() {
        // hand enumeration of the 8-neighbourhood
        let w = WeightMatrix::grid_contiguity(3, 3, Contiguity::Queen).unwrap();
        assert_eq!(w.neighbour_counts(), vec![3, 5, 3, 5, 8, 5, 3, 5, 3]);
        let centre: Vec<usize> = w.row(4).map(|(j, _)| j).collect();
        assert_eq!(centre, vec![0, 1, 2, 3, 5, 6, 7, 8]);
    }

    #[test]
    fn zero_dimension_rejected() {
        assert!(WeightMatrix::grid_contiguity(0, 3, Contiguity::Rook).is_err());
        assert!(WeightMatrix::grid_contiguity(3, 0, Contiguity::Queen).is_err());
    }

    #[test]
    fn rook_edge_count() {
        for (r, c) in [(1, 5), (3, 4), (15, 15), (7, 2)] {
            let w = rook(r, c);
            assert_eq!(w.nnz(), 2 * (r * (c - 1) + c * (r - 1)));
            assert!(w.is_symmetric());
        }
    }

    #[test]
    fn row_standardize_cases() {
        let z = WeightMatrix::zeros(3).row_standardize();
        assert!(z.is_empty());
        assert!(z.is_row_standardized());

        let w = WeightMatrix::from_triplets(3, [(0, 1, 1.0), (0, 2, 1.0)]).unwrap();
        let s = w.row_standardize();
        assert_eq!(s.get(0, 1), 0.5);
        assert_eq!(s.get(0, 2), 0.5);
        assert_eq!(s.row_sums(), vec![1.0, 0.0, 0.0]);

        let g = rook(2, 2).row_standardize();
        assert!(g.iter().all(|(_, _, v)| v == 0.5));
    }

    #[test]
    fn lower_triangularize_cases() {
        let lower = WeightMatrix::from_triplets(3, [(1, 0, 0.3), (2, 0, 1.0), (2, 1, 2.0)]).unwrap();
        let t = lower.lower_triangularize();
        assert_eq!(t.iter().collect::<Vec<_>>(), lower.iter().collect::<Vec<_>>());
        assert_eq!(t.triangular_order(), Some(&[0, 1, 2][..]));

        // 2x2 rook: cells 0-1, 0-2, 1-3, 2-3 adjacent
        let t = rook(2, 2).lower_triangularize();
        let kept: Vec<(usize, usize)> = t.iter().map(|(i, j, _)| (i, j)).collect();
        assert_eq!(kept, vec![(1, 0), (2, 0), (3, 1), (3, 2)]);

        let z = WeightMatrix::zeros(4).lower_triangularize();
        assert!(z.is_empty());
    }

    #[test]
    fn lower_triangularize_clears_standardized_flag() {
        let t = rook(3, 3).row_standardize().lower_triangularize();
        assert!(!t.is_row_standardized());
    }

    #[test]
    fn triangular_order_cases() {
        let lower = WeightMatrix::from_triplets(3, [(1, 0, 1.0), (2, 1, 1.0)]).unwrap();
        assert_eq!(lower.find_triangular_order(), Some(vec![0, 1, 2]));

        let cycle = WeightMatrix::from_triplets(2, [(0, 1, 1.0), (1, 0, 1.0)]).unwrap();
        assert_eq!(cycle.find_triangular_order(), None);

        // upper triangular: order must be reversed
        let upper = WeightMatrix::from_triplets(3, [(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        let order = upper.find_triangular_order().unwrap();
        assert_eq!(order, vec![2, 1, 0]);
        assert!(upper.is_strictly_triangular_under(&order));
    }

    #[test]
    fn scale_cases() {
        let g = rook(2, 2).row_standardize();
        assert!(g.scale(0.0).unwrap().is_empty());
        assert_eq!(
            g.scale(1.0).unwrap().iter().collect::<Vec<_>>(),
            g.iter().collect::<Vec<_>>()
        );
        assert!(g.scale(0.5).unwrap().iter().all(|(_, _, v)| v == 0.25));
        assert!(g.scale(-1.0).is_err());
    }

    #[test]
    fn invalid_triplets_rejected() {
        assert!(WeightMatrix::from_triplets(2, [(0, 0, 1.0)]).is_err());
        assert!(WeightMatrix::from_triplets(2, [(0, 1, -1.0)]).is_err());
        assert!(WeightMatrix::from_triplets(2, [(0, 2, 1.0)]).is_err());
        assert!(WeightMatrix::from_triplets(2, [(0, 1, 1.0), (0, 1, 2.0)]).is_err());
        // zeros on the diagonal are fine (and not stored)
        assert!(WeightMatrix::from_triplets(2, [(0, 0, 0.0)]).unwrap().is_empty());
    }

    #[test]
    fn csv_roundtrip_keeps_isolates() {
        let w = WeightMatrix::from_triplets(4, [(1, 0, 0.5), (0, 1, 0.25)]).unwrap();
        let mut buf = Vec::new();
        w.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("i,j,w\n"));
        let back = WeightMatrix::read_csv(&buf[..], Some(4)).unwrap();
        assert_eq!(back.n(), 4);
        assert_eq!(back.iter().collect::<Vec<_>>(), w.iter().collect::<Vec<_>>());
        assert!(WeightMatrix::read_csv(&buf[..], Some(1)).is_err());
    }

    #[test]
    fn csv_loader_validates() {
        let diag = "i,j,w\n1,1,0.5\n";
        assert!(WeightMatrix::read_csv(diag.as_bytes(), None).is_err());
        let neg = "i,j,w\n1,2,-0.5\n";
        assert!(WeightMatrix::read_csv(neg.as_bytes(), None).is_err());
        let header = "a,b,c\n1,2,0.5\n";
        assert!(WeightMatrix::read_csv(header.as_bytes(), None).is_err());
    }
}
