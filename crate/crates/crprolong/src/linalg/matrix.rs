//! Dense matrices over the Gaussian rationals.

use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::scalar::{GaussianRational, Rational, GR};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum LinalgError {
    #[error("matrix is not Hermitian")]
    NotHermitian,
    #[error("Hermitian form is singular")]
    SingularForm,
    #[error("matrix is singular")]
    Singular,
    #[error("shape mismatch: {0}")]
    Shape(String),
}

#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub entries: Vec<GaussianRational>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
pub struct SignaturePair {
    pub pos: usize,
    pub neg: usize,
}

impl SignaturePair {
    pub fn new(pos: usize, neg: usize) -> Self {
        SignaturePair { pos, neg }
    }
    pub fn flipped(self) -> Self {
        SignaturePair::new(self.neg, self.pos)
    }
}

/// Inertia of a (possibly degenerate) Hermitian form.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Inertia {
    pub pos: usize,
    pub neg: usize,
    pub zero: usize,
}

impl std::fmt::Debug for Matrix {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        writeln!(f, "Matrix {}x{} [", self.rows, self.cols)?;
        for r in 0..self.rows {
            let row: Vec<String> = (0..self.cols).map(|c| self[(r, c)].to_string()).collect();
            writeln!(f, "  [{}]", row.join(", "))?;
        }
        write!(f, "]")
    }
}

impl Index<(usize, usize)> for Matrix {
    type Output = GaussianRational;
    fn index(&self, (r, c): (usize, usize)) -> &GaussianRational {
        &self.entries[r * self.cols + c]
    }
}

impl IndexMut<(usize, usize)> for Matrix {
    fn index_mut(&mut self, (r, c): (usize, usize)) -> &mut GaussianRational {
        &mut self.entries[r * self.cols + c]
    }
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Matrix { rows, cols, entries: vec![GR::zero(); rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = GR::one();
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<GaussianRational>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        assert!(rows.iter().all(|x| x.len() == c), "ragged rows");
        Matrix { rows: r, cols: c, entries: rows.into_iter().flatten().collect() }
    }

    pub fn from_int_rows(rows: &[&[i64]]) -> Self {
        Self::from_rows(
            rows.iter().map(|r| r.iter().map(|&x| GR::from_int(x)).collect()).collect(),
        )
    }

    pub fn from_columns(cols: &[Vec<GaussianRational>]) -> Self {
        let c = cols.len();
        let r = cols.first().map_or(0, |x| x.len());
        let mut m = Self::zeros(r, c);
        for (j, col) in cols.iter().enumerate() {
            assert_eq!(col.len(), r);
            for (i, x) in col.iter().enumerate() {
                m[(i, j)] = x.clone();
            }
        }
        m
    }

    pub fn diag(d: &[GaussianRational]) -> Self {
        let mut m = Self::zeros(d.len(), d.len());
        for (i, x) in d.iter().enumerate() {
            m[(i, i)] = x.clone();
        }
        m
    }

    pub fn diag_ints(d: &[i64]) -> Self {
        Self::diag(&d.iter().map(|&x| GR::from_int(x)).collect::<Vec<_>>())
    }

    pub fn block_diag(blocks: &[Matrix]) -> Self {
        let r: usize = blocks.iter().map(|b| b.rows).sum();
        let c: usize = blocks.iter().map(|b| b.cols).sum();
        let mut m = Self::zeros(r, c);
        let (mut r0, mut c0) = (0, 0);
        for b in blocks {
            for i in 0..b.rows {
                for j in 0..b.cols {
                    m[(r0 + i, c0 + j)] = b[(i, j)].clone();
                }
            }
            r0 += b.rows;
            c0 += b.cols;
        }
        m
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_zero(&self) -> bool {
        self.entries.iter().all(|x| x.is_zero())
    }

    pub fn row(&self, r: usize) -> Vec<GaussianRational> {
        self.entries[r * self.cols..(r + 1) * self.cols].to_vec()
    }

    pub fn column(&self, c: usize) -> Vec<GaussianRational> {
        (0..self.rows).map(|r| self[(r, c)].clone()).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<GaussianRational>> {
        (0..self.rows).map(|r| self.row(r)).collect()
    }

    pub fn transpose(&self) -> Self {
        let mut m = Self::zeros(self.cols, self.rows);
        for r in 0..self.rows {
            for c in 0..self.cols {
                m[(c, r)] = self[(r, c)].clone();
            }
        }
        m
    }

    pub fn conj(&self) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x.conj()).collect(),
        }
    }

    pub fn conj_transpose(&self) -> Self {
        self.transpose().conj()
    }

    pub fn scale(&self, s: &GaussianRational) -> Self {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| x * s).collect(),
        }
    }

    pub fn is_hermitian(&self) -> bool {
        self.is_square() && *self == self.conj_transpose()
    }

    pub fn is_symmetric(&self) -> bool {
        self.is_square() && *self == self.transpose()
    }

    pub fn mul_vec(&self, v: &[GaussianRational]) -> Vec<GaussianRational> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|r| {
                let mut acc = GR::zero();
                for c in 0..self.cols {
                    let a = &self[(r, c)];
                    if !a.is_zero() && !v[c].is_zero() {
                        acc += &(a * &v[c]);
                    }
                }
                acc
            })
            .collect()
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Self {
        let mut m = Self::zeros(rows.len(), cols.len());
        for (i, &r) in rows.iter().enumerate() {
            for (j, &c) in cols.iter().enumerate() {
                m[(i, j)] = self[(r, c)].clone();
            }
        }
        m
    }

    pub fn rank(&self) -> usize {
        rref(self).1.len()
    }

    pub fn inverse(&self) -> Result<Matrix, LinalgError> {
        if !self.is_square() {
            return Err(LinalgError::Shape("inverse of non-square matrix".into()));
        }
        let n = self.rows;
        let mut aug = Matrix::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug[(i, j)] = self[(i, j)].clone();
            }
            aug[(i, n + i)] = GR::one();
        }
        let (r, piv) = rref(&aug);
        if !piv.iter().copied().take(n).eq(0..n) {
            return Err(LinalgError::Singular);
        }
        let cols: Vec<usize> = (n..2 * n).collect();
        let rows: Vec<usize> = (0..n).collect();
        Ok(r.submatrix(&rows, &cols))
    }

    /// Solve `self * x = b` for one particular solution, if consistent.
    pub fn solve(&self, b: &[GaussianRational]) -> Option<Vec<GaussianRational>> {
        assert_eq!(b.len(), self.rows);
        let mut aug = Matrix::zeros(self.rows, self.cols + 1);
        for r in 0..self.rows {
            for c in 0..self.cols {
                aug[(r, c)] = self[(r, c)].clone();
            }
            aug[(r, self.cols)] = b[r].clone();
        }
        let (red, piv) = rref(&aug);
        if piv.last() == Some(&self.cols) {
            return None;
        }
        let mut x = vec![GR::zero(); self.cols];
        for (i, &p) in piv.iter().enumerate() {
            x[p] = red[(i, self.cols)].clone();
        }
        Some(x)
    }
}

impl<'b> Mul<&'b Matrix> for &Matrix {
    type Output = Matrix;
    fn mul(self, o: &'b Matrix) -> Matrix {
        assert_eq!(self.cols, o.rows, "matrix product shape mismatch");
        let mut m = Matrix::zeros(self.rows, o.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self[(i, k)];
                if a.is_zero() {
                    continue;
                }
                for j in 0..o.cols {
                    let b = &o[(k, j)];
                    if !b.is_zero() {
                        let p = a * b;
                        m[(i, j)] += &p;
                    }
                }
            }
        }
        m
    }
}

impl<'b> Add<&'b Matrix> for &Matrix {
    type Output = Matrix;
    fn add(self, o: &'b Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a + b).collect(),
        }
    }
}

impl<'b> Sub<&'b Matrix> for &Matrix {
    type Output = Matrix;
    fn sub(self, o: &'b Matrix) -> Matrix {
        assert_eq!((self.rows, self.cols), (o.rows, o.cols));
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().zip(&o.entries).map(|(a, b)| a - b).collect(),
        }
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            entries: self.entries.iter().map(|x| -x).collect(),
        }
    }
}

impl Serialize for Matrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let rows: Vec<Vec<GaussianRational>> = Vec::deserialize(d)?;
        let c = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != c) {
            return Err(serde::de::Error::custom("ragged matrix rows"));
        }
        Ok(Matrix::from_rows(rows))
    }
}

/// Reduced row echelon form with the leftmost-pivot rule.
pub fn rref(m: &Matrix) -> (Matrix, Vec<usize>) {
    let mut a = m.clone();
    let mut pivots = Vec::new();
    let mut row = 0;
    for col in 0..a.cols {
        if row == a.rows {
            break;
        }
        let Some(p) = (row..a.rows).find(|&r| !a[(r, col)].is_zero()) else {
            continue;
        };
        if p != row {
            for c in 0..a.cols {
                a.entries.swap(p * a.cols + c, row * a.cols + c);
            }
        }
        let inv = a[(row, col)].inv();
        for c in col..a.cols {
            if !a[(row, c)].is_zero() {
                a[(row, c)] = &a[(row, c)] * &inv;
            }
        }
        for r in 0..a.rows {
            if r == row || a[(r, col)].is_zero() {
                continue;
            }
            let f = a[(r, col)].clone();
            for c in col..a.cols {
                if !a[(row, c)].is_zero() {
                    let d = &f * &a[(row, c)];
                    a[(r, c)] -= &d;
                }
            }
        }
        pivots.push(col);
        row += 1;
    }
    (a, pivots)
}

/// Canonical nullspace basis: one vector per free column, in increasing
/// column order, with that free variable equal to 1 and the others 0.
pub fn nullspace(m: &Matrix) -> Vec<Vec<GaussianRational>> {
    let (r, piv) = rref(m);
    let mut is_pivot = vec![false; m.cols];
    for &p in &piv {
        is_pivot[p] = true;
    }
    let mut basis = Vec::new();
    for f in 0..m.cols {
        if is_pivot[f] {
            continue;
        }
        let mut v = vec![GR::zero(); m.cols];
        v[f] = GR::one();
        for (i, &p) in piv.iter().enumerate() {
            v[p] = -&r[(i, f)];
        }
        basis.push(v);
    }
    basis
}

/// Inertia of a Hermitian matrix by exact congruence diagonalization.
pub fn hermitian_inertia(h: &Matrix) -> Result<Inertia, LinalgError> {
    if !h.is_hermitian() {
        return Err(LinalgError::NotHermitian);
    }
    let n = h.rows;
    let mut a = h.clone();
    let (mut pos, mut neg) = (0, 0);
    let mut k = 0;
    while k < n {
        let diag = (k..n).find(|&i| !a[(i, i)].is_zero());
        let p = match diag {
            Some(p) => p,
            None => {
                // all remaining diagonal entries vanish; mix in an off-diagonal pair
                let mut found = None;
                'outer: for i in k..n {
                    for j in k..n {
                        if i != j && !a[(i, j)].is_zero() {
                            found = Some((i, j));
                            break 'outer;
                        }
                    }
                }
                let Some((i, j)) = found else { break };
                let t = a[(i, j)].clone();
                add_congruent(&mut a, i, j, &t);
                debug_assert!(!a[(i, i)].is_zero());
                i
            }
        };
        swap_congruent(&mut a, k, p);
        let d = a[(k, k)].clone();
        debug_assert!(d.is_real());
        if d.re.is_positive() {
            pos += 1;
        } else {
            neg += 1;
        }
        for r in k + 1..n {
            if a[(r, k)].is_zero() {
                continue;
            }
            let f = &a[(r, k)] / &d;
            let mf = -&f;
            add_congruent(&mut a, r, k, &mf);
        }
        k += 1;
    }
    Ok(Inertia { pos, neg, zero: n - pos - neg })
}

/// row_i += t row_j, col_i += conj(t) col_j
fn add_congruent(a: &mut Matrix, i: usize, j: usize, t: &GaussianRational) {
    let n = a.rows;
    for c in 0..n {
        if !a[(j, c)].is_zero() {
            let d = t * &a[(j, c)];
            a[(i, c)] += &d;
        }
    }
    let tc = t.conj();
    for r in 0..n {
        if !a[(r, j)].is_zero() {
            let d = &a[(r, j)] * &tc;
            a[(r, i)] += &d;
        }
    }
}

fn swap_congruent(a: &mut Matrix, i: usize, j: usize) {
    if i == j {
        return;
    }
    let n = a.rows;
    for c in 0..n {
        a.entries.swap(i * n + c, j * n + c);
    }
    for r in 0..n {
        a.entries.swap(r * n + i, r * n + j);
    }
}

pub fn hermitian_signature(h: &Matrix) -> Result<SignaturePair, LinalgError> {
    let inertia = hermitian_inertia(h)?;
    if inertia.zero > 0 {
        return Err(LinalgError::SingularForm);
    }
    Ok(SignaturePair::new(inertia.pos, inertia.neg))
}

/// Realification of a complex-linear map: each entry x+iy becomes
/// [[x,-y],[y,x]] acting on (Re, Im) coordinate pairs.
pub fn realify(m: &Matrix) -> Matrix {
    let mut r = Matrix::zeros(2 * m.rows, 2 * m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let z = &m[(i, j)];
            r[(2 * i, 2 * j)] = GR::from_rational(z.re.clone());
            r[(2 * i, 2 * j + 1)] = GR::from_rational(-z.im.clone());
            r[(2 * i + 1, 2 * j)] = GR::from_rational(z.im.clone());
            r[(2 * i + 1, 2 * j + 1)] = GR::from_rational(z.re.clone());
        }
    }
    r
}

/// Realification of the anti-linear map y -> M conj(y): each entry x+iy
/// becomes [[x,y],[y,-x]].
pub fn realify_antilinear(m: &Matrix) -> Matrix {
    let mut r = Matrix::zeros(2 * m.rows, 2 * m.cols);
    for i in 0..m.rows {
        for j in 0..m.cols {
            let z = &m[(i, j)];
            r[(2 * i, 2 * j)] = GR::from_rational(z.re.clone());
            r[(2 * i, 2 * j + 1)] = GR::from_rational(z.im.clone());
            r[(2 * i + 1, 2 * j)] = GR::from_rational(z.im.clone());
            r[(2 * i + 1, 2 * j + 1)] = GR::from_rational(-z.re.clone());
        }
    }
    r
}

/// Complex vector to (Re, Im)-interleaved rational coordinates.
pub fn realify_vec(v: &[GaussianRational]) -> Vec<GaussianRational> {
    v.iter()
        .flat_map(|z| [GR::from_rational(z.re.clone()), GR::from_rational(z.im.clone())])
        .collect()
}

/// Inverse of `realify_vec`; imaginary parts of the input are ignored.
pub fn complexify_vec(v: &[GaussianRational]) -> Vec<GaussianRational> {
    v.chunks(2).map(|p| GR::new(p[0].re.clone(), p[1].re.clone())).collect()
}

pub fn dot(a: &[GaussianRational], b: &[GaussianRational]) -> GaussianRational {
    let mut acc = GR::zero();
    for (x, y) in a.iter().zip(b) {
        if !x.is_zero() && !y.is_zero() {
            acc += &(x * y);
        }
    }
    acc
}

/// uᵀ H conj(v)
pub fn hermitian_pair(h: &Matrix, u: &[GaussianRational], v: &[GaussianRational]) -> GaussianRational {
    let vc: Vec<GR> = v.iter().map(|x| x.conj()).collect();
    dot(u, &h.mul_vec(&vc))
}

pub fn vec_is_zero(v: &[GaussianRational]) -> bool {
    v.iter().all(|x| x.is_zero())
}

pub fn vec_scale(v: &[GaussianRational], s: &GaussianRational) -> Vec<GaussianRational> {
    v.iter().map(|x| x * s).collect()
}

pub fn vec_add(a: &[GaussianRational], b: &[GaussianRational]) -> Vec<GaussianRational> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

pub fn vec_sub(a: &[GaussianRational], b: &[GaussianRational]) -> Vec<GaussianRational> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn vec_conj(a: &[GaussianRational]) -> Vec<GaussianRational> {
    a.iter().map(|x| x.conj()).collect()
}

/// Rational real part check helper used by callers of `realify`.
pub fn all_real(m: &Matrix) -> bool {
    m.entries.iter().all(|x| x.is_real())
}

pub fn real_entry(m: &Matrix, r: usize, c: usize) -> Rational {
    m[(r, c)].re.clone()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn g(re: i64, im: i64) -> GR {
        GR::from_ints(re, im)
    }

    #[test]
    fn rref_of_identity_and_zero() {
        let (r, p) = rref(&Matrix::identity(3));
        assert_eq!(r, Matrix::identity(3));
        assert_eq!(p, vec![0, 1, 2]);
        let (r, p) = rref(&Matrix::zeros(2, 3));
        assert!(r.is_zero());
        assert!(p.is_empty());
    }

    #[test]
    fn rref_hermitian_pair() {
        let m = Matrix::from_rows(vec![vec![g(1, 0), g(0, 1)], vec![g(0, -1), g(1, 0)]]);
        let (r, p) = rref(&m);
        assert_eq!(r, Matrix::from_rows(vec![vec![g(1, 0), g(0, 1)], vec![g(0, 0), g(0, 0)]]));
        assert_eq!(p, vec![0]);
        let ns = nullspace(&m);
        assert_eq!(ns, vec![vec![g(0, -1), g(1, 0)]]);
        assert!(vec_is_zero(&m.mul_vec(&ns[0])));
    }

    #[test]
    fn nullspace_trivial_cases() {
        let ns = nullspace(&Matrix::zeros(3, 3));
        assert_eq!(ns.len(), 3);
        assert_eq!(ns[1], vec![g(0, 0), g(1, 0), g(0, 0)]);
        assert!(nullspace(&Matrix::identity(4)).is_empty());
    }

    #[test]
    fn signatures() {
        assert_eq!(hermitian_signature(&Matrix::diag_ints(&[1, -1])).unwrap(), SignaturePair::new(1, 1));
        let p2 = Matrix::from_int_rows(&[&[0, 1], &[1, 0]]);
        assert_eq!(hermitian_signature(&p2).unwrap(), SignaturePair::new(1, 1));
        let skew = Matrix::from_rows(vec![vec![g(0, 0), g(0, 1)], vec![g(0, -1), g(0, 0)]]);
        assert_eq!(hermitian_signature(&skew).unwrap(), SignaturePair::new(1, 1));
        assert_eq!(
            hermitian_signature(&Matrix::diag_ints(&[1, 0])),
            Err(LinalgError::SingularForm)
        );
        let bad = Matrix::from_rows(vec![vec![g(1, 0), g(0, 1)], vec![g(0, 1), g(1, 0)]]);
        assert_eq!(hermitian_signature(&bad), Err(LinalgError::NotHermitian));
    }

    #[test]
    fn realify_blocks() {
        let i = Matrix::from_rows(vec![vec![g(0, 1)]]);
        assert_eq!(realify(&i), Matrix::from_int_rows(&[&[0, -1], &[1, 0]]));
        let one = Matrix::from_rows(vec![vec![g(1, 0)]]);
        assert_eq!(realify_antilinear(&one), Matrix::from_int_rows(&[&[1, 0], &[0, -1]]));
        assert_eq!(realify_antilinear(&i), Matrix::from_int_rows(&[&[0, 1], &[1, 0]]));
        // composing the scalar-i block with the conjugation block
        let composed = &realify(&i) * &realify_antilinear(&one);
        assert_eq!(composed, realify_antilinear(&i));
    }

    #[test]
    fn inverse_and_solve() {
        let m = Matrix::from_rows(vec![vec![g(2, 1), g(0, 1)], vec![g(1, 0), g(3, -2)]]);
        let inv = m.inverse().unwrap();
        assert_eq!(&m * &inv, Matrix::identity(2));
        let x = m.solve(&[g(1, 0), g(0, 0)]).unwrap();
        assert_eq!(m.mul_vec(&x), vec![g(1, 0), g(0, 0)]);
    }
}
