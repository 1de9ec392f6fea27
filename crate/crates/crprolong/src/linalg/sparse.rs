//! Sparse vectors and an incremental exact echelon solver.
//!
//! Large homogeneous systems in the prolongation are assembled row by row;
//! the solver keeps its rows in reduced echelon form so the nullspace it
//! returns coincides with the dense canonical one.

use std::collections::BTreeMap;

use num_traits::{One, Zero};

use super::matrix::{LinalgError, Matrix};
use super::scalar::{GaussianRational, GR};

#[derive(Clone, Debug, Default, PartialEq, Eq, Hash)]
pub struct SparseVec {
    pub entries: BTreeMap<usize, GaussianRational>,
}

impl SparseVec {
    pub fn new() -> Self {
        SparseVec { entries: BTreeMap::new() }
    }

    pub fn unit(i: usize) -> Self {
        let mut v = SparseVec::new();
        v.entries.insert(i, GR::one());
        v
    }

    pub fn from_dense(v: &[GaussianRational], offset: usize) -> Self {
        let mut s = SparseVec::new();
        for (i, x) in v.iter().enumerate() {
            if !x.is_zero() {
                s.entries.insert(offset + i, x.clone());
            }
        }
        s
    }

    pub fn to_dense(&self, offset: usize, len: usize) -> Vec<GaussianRational> {
        let mut v = vec![GR::zero(); len];
        for (&i, x) in self.entries.range(offset..offset + len) {
            v[i - offset] = x.clone();
        }
        v
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, i: usize) -> GaussianRational {
        self.entries.get(&i).cloned().unwrap_or_else(GR::zero)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&usize, &GaussianRational)> {
        self.entries.iter()
    }

    pub fn leading(&self) -> Option<usize> {
        self.entries.keys().next().copied()
    }

    pub fn add_term(&mut self, i: usize, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        match self.entries.get_mut(&i) {
            Some(x) => {
                *x += c;
                if x.is_zero() {
                    self.entries.remove(&i);
                }
            }
            None => {
                self.entries.insert(i, c.clone());
            }
        }
    }

    /// self += c * other
    pub fn add_scaled(&mut self, other: &SparseVec, c: &GaussianRational) {
        if c.is_zero() {
            return;
        }
        for (&i, x) in &other.entries {
            self.add_term(i, &(x * c));
        }
    }

    pub fn scaled(&self, c: &GaussianRational) -> SparseVec {
        if c.is_zero() {
            return SparseVec::new();
        }
        SparseVec { entries: self.entries.iter().map(|(&i, x)| (i, x * c)).collect() }
    }

    pub fn neg(&self) -> SparseVec {
        SparseVec { entries: self.entries.iter().map(|(&i, x)| (i, -x)).collect() }
    }

    pub fn conj(&self) -> SparseVec {
        SparseVec { entries: self.entries.iter().map(|(&i, x)| (i, x.conj())).collect() }
    }

    pub fn dot(&self, other: &SparseVec) -> GaussianRational {
        let (small, large) = if self.len() <= other.len() { (self, other) } else { (other, self) };
        let mut acc = GR::zero();
        for (i, x) in &small.entries {
            if let Some(y) = large.entries.get(i) {
                acc += &(x * y);
            }
        }
        acc
    }

    pub fn shifted(&self, by: isize) -> SparseVec {
        SparseVec {
            entries: self.entries.iter().map(|(&i, x)| ((i as isize + by) as usize, x.clone())).collect(),
        }
    }
}

impl std::ops::Add<&SparseVec> for &SparseVec {
    type Output = SparseVec;
    fn add(self, o: &SparseVec) -> SparseVec {
        let mut r = self.clone();
        r.add_scaled(o, &GR::one());
        r
    }
}

impl std::ops::Sub<&SparseVec> for &SparseVec {
    type Output = SparseVec;
    fn sub(self, o: &SparseVec) -> SparseVec {
        let mut r = self.clone();
        r.add_scaled(o, &-GR::one());
        r
    }
}

/// Incremental reduced row echelon form for homogeneous systems.
#[derive(Clone, Debug)]
pub struct SparseSolver {
    ncols: usize,
    rows: BTreeMap<usize, SparseVec>,
}

impl SparseSolver {
    pub fn new(ncols: usize) -> Self {
        SparseSolver { ncols, rows: BTreeMap::new() }
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn rank(&self) -> usize {
        self.rows.len()
    }

    pub fn pivots(&self) -> Vec<usize> {
        self.rows.keys().copied().collect()
    }

    /// Remainder of `v` after elimination against the current pivots.
    pub fn reduce(&self, v: &SparseVec) -> SparseVec {
        let mut row = v.clone();
        let mut cursor = 0;
        while let Some((&c, x)) = row.entries.range(cursor..).next() {
            if let Some(p) = self.rows.get(&c) {
                let f = -x;
                row.add_scaled(p, &f);
            }
            cursor = c + 1;
        }
        row
    }

    /// Adds an equation; returns whether it increased the rank.
    pub fn add_row(&mut self, v: SparseVec) -> bool {
        debug_assert!(v.entries.keys().all(|&c| c < self.ncols));
        let mut row = self.reduce(&v);
        let Some(lead) = row.leading() else { return false };
        let inv = row.get(lead).inv();
        if !inv.is_one() {
            row = row.scaled(&inv);
        }
        for other in self.rows.values_mut() {
            if let Some(x) = other.entries.get(&lead) {
                let f = -x;
                other.add_scaled(&row, &f);
            }
        }
        self.rows.insert(lead, row);
        true
    }

    pub fn is_free(&self, col: usize) -> bool {
        !self.rows.contains_key(&col)
    }

    /// Canonical nullspace: one vector per free column in increasing order,
    /// free variable equal to 1, other free variables 0.
    pub fn nullspace(&self) -> Vec<SparseVec> {
        let mut out: BTreeMap<usize, SparseVec> = (0..self.ncols)
            .filter(|c| !self.rows.contains_key(c))
            .map(|c| (c, SparseVec::unit(c)))
            .collect();
        for (&p, row) in &self.rows {
            for (&f, x) in row.entries.range(p + 1..) {
                if let Some(v) = out.get_mut(&f) {
                    v.entries.insert(p, -x);
                }
            }
        }
        out.into_values().collect()
    }

    pub fn to_matrix(&self) -> Matrix {
        let mut m = Matrix::zeros(self.rows.len(), self.ncols);
        for (r, row) in self.rows.values().enumerate() {
            for (&c, x) in &row.entries {
                m[(r, c)] = x.clone();
            }
        }
        m
    }
}

/// Canonical basis of a subspace: echelon form with pivots taken from the
/// right, leading coefficient 1. For a nullspace this reproduces the
/// free-variable basis.
pub fn canonical_basis(vectors: &[SparseVec], ncols: usize) -> Vec<SparseVec> {
    let flip = |v: &SparseVec| SparseVec {
        entries: v.entries.iter().map(|(&i, x)| (ncols - 1 - i, x.clone())).collect(),
    };
    let mut solver = SparseSolver::new(ncols);
    for v in vectors {
        solver.add_row(flip(v));
    }
    let mut rows: Vec<(usize, SparseVec)> =
        solver.rows.iter().map(|(&p, r)| (ncols - 1 - p, flip(r))).collect();
    rows.sort_by_key(|(p, _)| *p);
    rows.into_iter().map(|(_, r)| r).collect()
}

/// Coordinates of vectors with respect to a fixed independent family,
/// read off at pivot positions and checked exactly.
#[derive(Clone, Debug)]
pub struct SpanDecoder {
    basis: Vec<SparseVec>,
    keys: Vec<usize>,
    inv: Matrix,
}

impl SpanDecoder {
    pub fn new(basis: Vec<SparseVec>) -> Result<Self, LinalgError> {
        let ncols = basis.iter().filter_map(|v| v.entries.keys().last()).max().map_or(0, |m| m + 1);
        let mut solver = SparseSolver::new(ncols);
        for v in &basis {
            if !solver.add_row(v.clone()) {
                return Err(LinalgError::Singular);
            }
        }
        let keys = solver.pivots();
        let d = basis.len();
        let mut sub = Matrix::zeros(d, d);
        for (k, &col) in keys.iter().enumerate() {
            for (j, v) in basis.iter().enumerate() {
                sub[(k, j)] = v.get(col);
            }
        }
        let inv = sub.inverse()?;
        Ok(SpanDecoder { basis, keys, inv })
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn basis(&self) -> &[SparseVec] {
        &self.basis
    }

    /// Coordinates assuming `v` lies in the span.
    pub fn coords_unchecked(&self, v: &SparseVec) -> Vec<GaussianRational> {
        let read: Vec<GR> = self.keys.iter().map(|&k| v.get(k)).collect();
        self.inv.mul_vec(&read)
    }

    pub fn recompose(&self, coords: &[GaussianRational]) -> SparseVec {
        let mut out = SparseVec::new();
        for (c, b) in coords.iter().zip(&self.basis) {
            out.add_scaled(b, c);
        }
        out
    }

    /// Exact coordinates, or `None` when `v` is outside the span.
    pub fn decode(&self, v: &SparseVec) -> Option<Vec<GaussianRational>> {
        let c = self.coords_unchecked(v);
        if &self.recompose(&c) == v {
            Some(c)
        } else {
            None
        }
    }

    /// v minus its projection along the pivot coordinates; zero iff v is in the span.
    pub fn residual(&self, v: &SparseVec) -> SparseVec {
        let c = self.coords_unchecked(v);
        v - &self.recompose(&c)
    }
}

#[cfg(test)]
mod tests {
    use super::super::matrix::nullspace;
    use super::*;

    fn dense_rows(m: &Matrix) -> Vec<SparseVec> {
        (0..m.rows).map(|r| SparseVec::from_dense(&m.row(r), 0)).collect()
    }

    #[test]
    fn sparse_nullspace_matches_dense() {
        let m = Matrix::from_int_rows(&[&[1, 2, 0, -1, 3], &[2, 4, 1, 0, 0], &[3, 6, 1, -1, 3]]);
        let mut s = SparseSolver::new(5);
        for r in dense_rows(&m) {
            s.add_row(r);
        }
        assert_eq!(s.rank(), 2);
        let sparse: Vec<Vec<GR>> = s.nullspace().iter().map(|v| v.to_dense(0, 5)).collect();
        assert_eq!(sparse, nullspace(&m));
    }

    #[test]
    fn canonical_basis_recovers_nullspace_form() {
        let m = Matrix::from_int_rows(&[&[1, 1, 1, 0], &[0, 1, -1, 2]]);
        let ns = nullspace(&m);
        let mixed = vec![
            SparseVec::from_dense(&super::super::matrix::vec_add(&ns[0], &ns[1]), 0),
            SparseVec::from_dense(&ns[1], 0).scaled(&GR::from_ints(0, 3)),
        ];
        let canon: Vec<Vec<GR>> = canonical_basis(&mixed, 4).iter().map(|v| v.to_dense(0, 4)).collect();
        assert_eq!(canon, ns);
    }

    #[test]
    fn decoder_roundtrip() {
        let b = vec![
            SparseVec::from_dense(&[GR::from_int(1), GR::from_int(1), GR::zero()], 0),
            SparseVec::from_dense(&[GR::zero(), GR::from_int(2), GR::from_ints(0, 1)], 0),
        ];
        let d = SpanDecoder::new(b.clone()).unwrap();
        let mut v = b[0].scaled(&GR::from_int(3));
        v.add_scaled(&b[1], &GR::from_ints(1, -1));
        assert_eq!(d.decode(&v).unwrap(), vec![GR::from_int(3), GR::from_ints(1, -1)]);
        assert!(d.decode(&SparseVec::unit(2)).is_none());
        assert!(!d.residual(&SparseVec::unit(2)).is_zero());
    }
}
