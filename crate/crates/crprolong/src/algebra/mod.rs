//! (ℤ×ℤ)-graded complex Lie algebras given by sparse structure constants.
//!
//! The global basis is the concatenation of the component bases, components
//! sorted by biweight. Components of negative first weight come first and
//! span the negative part on which every other element acts.

mod derivations;
mod hom;
mod json;

use std::collections::BTreeMap;
use std::fmt;
use std::ops::Range;

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg::{LinalgError, Matrix, SpanDecoder, SparseVec, GR};

pub use derivations::{restrict_by_conditions, solve_derivations, SideCondition};
pub use hom::{decode_action, flatten_action, hom_bracket, op_act, op_bracket, HomAction, HomArg, HomElement};
pub use json::AlgebraJson;

#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct BiWeight {
    pub first: i32,
    pub second: i32,
}

impl BiWeight {
    pub const fn new(first: i32, second: i32) -> Self {
        BiWeight { first, second }
    }
    pub fn conj(self) -> Self {
        BiWeight::new(self.first, -self.second)
    }
}

impl std::ops::Add for BiWeight {
    type Output = BiWeight;
    fn add(self, o: BiWeight) -> BiWeight {
        BiWeight::new(self.first + o.first, self.second + o.second)
    }
}

impl std::ops::Sub for BiWeight {
    type Output = BiWeight;
    fn sub(self, o: BiWeight) -> BiWeight {
        BiWeight::new(self.first - o.first, self.second - o.second)
    }
}

impl fmt::Debug for BiWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first, self.second)
    }
}

impl fmt::Display for BiWeight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({},{})", self.first, self.second)
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum AlgebraError {
    #[error("component mismatch: {0}")]
    ComponentMismatch(String),
    #[error("bracket leaves the available components: {0}")]
    NotClosed(String),
    #[error("component {0} does not act faithfully on the negative part")]
    NotFaithful(BiWeight),
    #[error("malformed algebra data: {0}")]
    Malformed(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Component {
    pub weight: BiWeight,
    pub labels: Vec<String>,
    pub offset: usize,
}

impl Component {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }
    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.labels.len()
    }
}

/// A homogeneous element: coordinates in the basis of one component.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Element {
    pub weight: BiWeight,
    pub coords: Vec<GR>,
}

impl Element {
    pub fn is_zero(&self) -> bool {
        self.coords.iter().all(|c| c.is_zero())
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct JacobiViolation {
    pub triple: (usize, usize, usize),
    pub residual: SparseVec,
}

#[derive(Clone, Default)]
pub struct BigradedAlgebra {
    components: Vec<Component>,
    index: BTreeMap<BiWeight, usize>,
    owner: Vec<usize>,
    brackets: BTreeMap<(usize, usize), SparseVec>,
    involution: Vec<Option<SparseVec>>,
    decoders: BTreeMap<BiWeight, SpanDecoder>,
}

impl fmt::Debug for BigradedAlgebra {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let dims: Vec<String> = self.components.iter().map(|c| format!("{}:{}", c.weight, c.dim())).collect();
        write!(f, "BigradedAlgebra[{}; {} brackets]", dims.join(" "), self.brackets.len())
    }
}

impl BigradedAlgebra {
    pub fn new() -> Self {
        Self::default()
    }

    /// Appends a component. Components must arrive in increasing biweight order.
    pub fn add_component(&mut self, weight: BiWeight, labels: Vec<String>) -> Result<Range<usize>, AlgebraError> {
        if weight.first < -2 {
            return Err(AlgebraError::ComponentMismatch(format!("first weight below -2 at {weight}")));
        }
        if let Some(last) = self.components.last() {
            if last.weight >= weight {
                return Err(AlgebraError::ComponentMismatch(format!(
                    "component {weight} added after {}",
                    last.weight
                )));
            }
        }
        if labels.is_empty() {
            return Err(AlgebraError::ComponentMismatch(format!("empty component {weight}")));
        }
        let offset = self.dim();
        let idx = self.components.len();
        let d = labels.len();
        self.components.push(Component { weight, labels, offset });
        self.index.insert(weight, idx);
        self.owner.extend(std::iter::repeat_n(idx, d));
        self.involution.extend(std::iter::repeat_n(None, d));
        Ok(offset..offset + d)
    }

    pub fn dim(&self) -> usize {
        self.owner.len()
    }

    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn component(&self, w: BiWeight) -> Option<&Component> {
        self.index.get(&w).map(|&i| &self.components[i])
    }

    pub fn has_component(&self, w: BiWeight) -> bool {
        self.index.contains_key(&w)
    }

    pub fn component_dim(&self, w: BiWeight) -> usize {
        self.component(w).map_or(0, |c| c.dim())
    }

    pub fn weight_of(&self, x: usize) -> BiWeight {
        self.components[self.owner[x]].weight
    }

    pub fn label(&self, x: usize) -> &str {
        let c = &self.components[self.owner[x]];
        &c.labels[x - c.offset]
    }

    pub fn index_of_label(&self, label: &str) -> Option<usize> {
        (0..self.dim()).find(|&x| self.label(x) == label)
    }

    /// Number of basis vectors of negative first weight; they occupy `0..n`.
    pub fn negative_dim(&self) -> usize {
        self.components.iter().filter(|c| c.weight.first < 0).map(|c| c.dim()).sum()
    }

    pub fn first_weights(&self) -> Vec<i32> {
        let mut v: Vec<i32> = self.components.iter().map(|c| c.weight.first).collect();
        v.dedup();
        v
    }

    /// Dimension of the sum of components with the given first weight.
    pub fn first_weight_dim(&self, i: i32) -> usize {
        self.components.iter().filter(|c| c.weight.first == i).map(|c| c.dim()).sum()
    }

    pub fn dims(&self) -> BTreeMap<BiWeight, usize> {
        self.components.iter().map(|c| (c.weight, c.dim())).collect()
    }

    pub fn basis_element(&self, x: usize) -> Element {
        let c = &self.components[self.owner[x]];
        let mut coords = vec![GR::zero(); c.dim()];
        coords[x - c.offset] = num_traits::One::one();
        Element { weight: c.weight, coords }
    }

    pub fn element_to_sparse(&self, e: &Element) -> Result<SparseVec, AlgebraError> {
        let c = self
            .component(e.weight)
            .ok_or_else(|| AlgebraError::ComponentMismatch(format!("no component {}", e.weight)))?;
        if c.dim() != e.coords.len() {
            return Err(AlgebraError::ComponentMismatch(format!(
                "element of length {} for component {} of dim {}",
                e.coords.len(),
                e.weight,
                c.dim()
            )));
        }
        Ok(SparseVec::from_dense(&e.coords, c.offset))
    }

    /// Splits a global vector into homogeneous pieces.
    pub fn split(&self, v: &SparseVec) -> BTreeMap<BiWeight, SparseVec> {
        let mut out: BTreeMap<BiWeight, SparseVec> = BTreeMap::new();
        for (&i, x) in v.iter() {
            out.entry(self.weight_of(i)).or_default().entries.insert(i, x.clone());
        }
        out
    }

    pub fn sparse_to_element(&self, w: BiWeight, v: &SparseVec) -> Element {
        match self.component(w) {
            Some(c) => {
                debug_assert!(v.iter().all(|(&i, _)| c.range().contains(&i)));
                Element { weight: w, coords: v.to_dense(c.offset, c.dim()) }
            }
            None => {
                debug_assert!(v.is_zero());
                Element { weight: w, coords: Vec::new() }
            }
        }
    }

    /// Records [e_x, e_y] = value (antisymmetry is implied).
    pub fn set_bracket(&mut self, x: usize, y: usize, value: SparseVec) -> Result<(), AlgebraError> {
        let target = self.weight_of(x) + self.weight_of(y);
        if let Some((&bad, _)) = value.iter().find(|(&i, _)| i >= self.dim() || self.weight_of(i) != target) {
            return Err(AlgebraError::ComponentMismatch(format!(
                "[{}, {}] has a term outside {target} (index {bad})",
                self.label(x),
                self.label(y)
            )));
        }
        if x == y {
            if !value.is_zero() {
                return Err(AlgebraError::Malformed(format!("[{0}, {0}] must vanish", self.label(x))));
            }
            return Ok(());
        }
        let (key, val) = if x < y { ((x, y), value) } else { ((y, x), value.neg()) };
        if val.is_zero() {
            self.brackets.remove(&key);
        } else {
            self.brackets.insert(key, val);
        }
        Ok(())
    }

    pub fn bracket_basis(&self, x: usize, y: usize) -> SparseVec {
        use std::cmp::Ordering;
        match x.cmp(&y) {
            Ordering::Less => self.brackets.get(&(x, y)).cloned().unwrap_or_default(),
            Ordering::Greater => self.brackets.get(&(y, x)).map(|v| v.neg()).unwrap_or_default(),
            Ordering::Equal => SparseVec::new(),
        }
    }

    pub fn bracket_sparse(&self, u: &SparseVec, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&x, a) in u.iter() {
            for (&y, b) in v.iter() {
                if x == y {
                    continue;
                }
                let (key, sign) = if x < y { ((x, y), false) } else { ((y, x), true) };
                if let Some(val) = self.brackets.get(&key) {
                    let c = if sign { -(a * b) } else { a * b };
                    out.add_scaled(val, &c);
                }
            }
        }
        out
    }

    pub fn bracket(&self, x: &Element, y: &Element) -> Result<Element, AlgebraError> {
        let u = self.element_to_sparse(x)?;
        let v = self.element_to_sparse(y)?;
        let w = x.weight + y.weight;
        Ok(self.sparse_to_element(w, &self.bracket_sparse(&u, &v)))
    }

    pub fn stored_brackets(&self) -> impl Iterator<Item = (&(usize, usize), &SparseVec)> {
        self.brackets.iter()
    }

    pub fn set_conj(&mut self, x: usize, image: SparseVec) -> Result<(), AlgebraError> {
        let target = self.weight_of(x).conj();
        if image.iter().any(|(&i, _)| i >= self.dim() || self.weight_of(i) != target) {
            return Err(AlgebraError::ComponentMismatch(format!(
                "conjugate of {} must lie in {target}",
                self.label(x)
            )));
        }
        self.involution[x] = Some(image);
        Ok(())
    }

    pub fn has_involution(&self) -> bool {
        self.involution.iter().all(|c| c.is_some())
    }

    pub fn conj_basis(&self, x: usize) -> SparseVec {
        self.involution[x].clone().unwrap_or_default()
    }

    /// conj(Σ a_x e_x) = Σ conj(a_x) conj(e_x)
    pub fn conj_sparse(&self, v: &SparseVec) -> SparseVec {
        let mut out = SparseVec::new();
        for (&x, a) in v.iter() {
            if let Some(img) = &self.involution[x] {
                out.add_scaled(img, &a.conj());
            }
        }
        out
    }

    /// Matrix of the involution from component `w` to component `w.conj()`:
    /// conj(x) = C · conj(coords(x)).
    pub fn involution_matrix(&self, w: BiWeight) -> Option<Matrix> {
        let src = self.component(w)?;
        let dst = self.component(w.conj())?;
        let mut m = Matrix::zeros(dst.dim(), src.dim());
        for (j, x) in src.range().enumerate() {
            let img = self.involution[x].as_ref()?;
            for (&i, c) in img.iter() {
                m[(i - dst.offset, j)] = c.clone();
            }
        }
        Some(m)
    }

    /// Exhaustive Jacobi sweep over basis triples x < y < z.
    pub fn jacobi_check(&self) -> Vec<JacobiViolation> {
        let n = self.dim();
        let mut out = Vec::new();
        for x in 0..n {
            for y in x + 1..n {
                let wxy = self.weight_of(x) + self.weight_of(y);
                for z in y + 1..n {
                    if !self.has_component(wxy + self.weight_of(z)) {
                        continue;
                    }
                    let r = self.jacobiator(x, y, z);
                    if !r.is_zero() {
                        out.push(JacobiViolation { triple: (x, y, z), residual: r });
                    }
                }
            }
        }
        out
    }

    pub fn jacobiator(&self, x: usize, y: usize, z: usize) -> SparseVec {
        let ez = SparseVec::unit(z);
        let ex = SparseVec::unit(x);
        let ey = SparseVec::unit(y);
        let mut r = self.bracket_sparse(&self.bracket_basis(x, y), &ez);
        r = &r + &self.bracket_sparse(&self.bracket_basis(y, z), &ex);
        &r + &self.bracket_sparse(&self.bracket_basis(z, x), &ey)
    }

    /// Problems with the involution: missing images, failure to square to
    /// the identity, or incompatibility with brackets.
    pub fn involution_check(&self) -> Vec<String> {
        let mut out = Vec::new();
        if !self.has_involution() {
            out.push("involution not defined on every basis vector".to_string());
            return out;
        }
        for x in 0..self.dim() {
            let twice = self.conj_sparse(&self.conj_basis(x));
            if twice != SparseVec::unit(x) {
                out.push(format!("conj(conj({})) is not the identity", self.label(x)));
            }
        }
        let n = self.dim();
        let conj: Vec<SparseVec> = (0..n).map(|x| self.conj_basis(x)).collect();
        for x in 0..n {
            for y in x + 1..n {
                if !self.has_component(self.weight_of(x) + self.weight_of(y)) {
                    continue;
                }
                let lhs = self.conj_sparse(&self.bracket_basis(x, y));
                let rhs = self.bracket_sparse(&conj[x], &conj[y]);
                if lhs != rhs {
                    out.push(format!(
                        "conj[{0}, {1}] != [conj {0}, conj {1}]",
                        self.label(x),
                        self.label(y)
                    ));
                }
            }
        }
        out
    }

    /// K(x,y) = tr(ad x ∘ ad y) on the full space.
    pub fn killing_form(&self) -> Matrix {
        let n = self.dim();
        // ad[x][b] = [e_x, e_b]
        let ad: Vec<Vec<SparseVec>> =
            (0..n).map(|x| (0..n).map(|b| self.bracket_basis(x, b)).collect()).collect();
        let mut k = Matrix::zeros(n, n);
        for x in 0..n {
            for y in x..n {
                let w = self.weight_of(x) + self.weight_of(y);
                if w != BiWeight::new(0, 0) {
                    continue;
                }
                let mut acc = GR::zero();
                for b in 0..n {
                    for (&a, c) in ad[x][b].iter() {
                        let d = ad[y][a].get(b);
                        if !d.is_zero() {
                            acc += &(c * &d);
                        }
                    }
                }
                k[(x, y)] = acc.clone();
                k[(y, x)] = acc;
            }
        }
        k
    }

    /// Flattened action of a nonnegative basis vector on the negative part:
    /// key b * dim + t carries the coefficient of e_t in [e_x, e_b].
    pub fn flat_action(&self, v: &SparseVec) -> SparseVec {
        let nd = self.negative_dim();
        let n = self.dim();
        let mut out = SparseVec::new();
        for b in 0..nd {
            let r = self.bracket_sparse(v, &SparseVec::unit(b));
            for (&t, c) in r.iter() {
                out.entries.insert(b * n + t, c.clone());
            }
        }
        out
    }

    /// Rebuilds coordinate decoders for all nonnegative components.
    pub fn refresh_decoders(&mut self) -> Result<(), AlgebraError> {
        let mut decs = BTreeMap::new();
        for c in &self.components {
            if c.weight.first < 0 {
                continue;
            }
            let basis: Vec<SparseVec> = c.range().map(|x| self.flat_action(&SparseVec::unit(x))).collect();
            let dec = SpanDecoder::new(basis).map_err(|_| AlgebraError::NotFaithful(c.weight))?;
            decs.insert(c.weight, dec);
        }
        self.decoders = decs;
        Ok(())
    }

    pub fn decoder(&self, w: BiWeight) -> Option<&SpanDecoder> {
        self.decoders.get(&w)
    }

    /// Adjoint matrix of a global vector (column b = [v, e_b]).
    pub fn ad_matrix(&self, v: &SparseVec) -> Matrix {
        let n = self.dim();
        let mut m = Matrix::zeros(n, n);
        for b in 0..n {
            for (&a, c) in self.bracket_sparse(v, &SparseVec::unit(b)).iter() {
                m[(a, b)] = c.clone();
            }
        }
        m
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_traits::One;

    pub(crate) fn heisenberg(n: usize) -> BigradedAlgebra {
        let mut a = BigradedAlgebra::new();
        a.add_component(BiWeight::new(-2, 0), vec!["e0".into()]).unwrap();
        a.add_component(BiWeight::new(-1, -1), (1..=n).map(|i| format!("eb{i}")).collect()).unwrap();
        a.add_component(BiWeight::new(-1, 1), (1..=n).map(|i| format!("e{i}")).collect()).unwrap();
        for i in 0..n {
            a.set_bracket(1 + n + i, 1 + i, SparseVec::unit(0)).unwrap();
        }
        a.set_conj(0, SparseVec::unit(0).neg()).unwrap();
        for i in 0..n {
            a.set_conj(1 + i, SparseVec::unit(1 + n + i)).unwrap();
            a.set_conj(1 + n + i, SparseVec::unit(1 + i)).unwrap();
        }
        a
    }

    #[test]
    fn heisenberg_brackets() {
        let a = heisenberg(1);
        let e1 = a.basis_element(2);
        let eb1 = a.basis_element(1);
        let e0 = a.basis_element(0);
        assert_eq!(a.bracket(&e1, &eb1).unwrap(), Element { weight: BiWeight::new(-2, 0), coords: vec![GR::one()] });
        let z = a.bracket(&e0, &e1).unwrap();
        assert_eq!(z.weight, BiWeight::new(-3, 1));
        assert!(z.is_zero());
        assert!(a.jacobi_check().is_empty());
        assert!(a.involution_check().is_empty());
        assert!(a.killing_form().is_zero());
    }

    #[test]
    fn rejects_misgraded_bracket() {
        let mut a = heisenberg(1);
        assert!(a.set_bracket(1, 2, SparseVec::unit(1)).is_err());
        assert!(a.add_component(BiWeight::new(-3, 0), vec!["x".into()]).is_err());
    }

    #[test]
    fn component_mismatch_on_bad_element() {
        let a = heisenberg(1);
        let bad = Element { weight: BiWeight::new(0, 0), coords: vec![GR::one()] };
        assert!(matches!(a.bracket(&bad, &a.basis_element(0)), Err(AlgebraError::ComponentMismatch(_))));
    }
}
