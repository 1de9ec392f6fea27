//! Graded maps from the negative part into the algebra, and their brackets.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::{AlgebraError, BiWeight, BigradedAlgebra};
use crate::linalg::{Matrix, SparseVec};

/// A graded map g₋ → g stored by source component: each block sends the
/// component at `w` into the component at `w + bidegree`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomElement {
    pub bidegree: BiWeight,
    pub blocks: BTreeMap<BiWeight, Matrix>,
}

/// The same data as a list of images of the negative basis vectors.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HomAction {
    pub bidegree: BiWeight,
    pub values: Vec<SparseVec>,
}

impl HomAction {
    pub fn zero(alg: &BigradedAlgebra, bidegree: BiWeight) -> Self {
        HomAction { bidegree, values: vec![SparseVec::new(); alg.negative_dim()] }
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.is_zero())
    }

    pub fn add_scaled(&mut self, other: &HomAction, c: &crate::linalg::GR) {
        for (a, b) in self.values.iter_mut().zip(&other.values) {
            a.add_scaled(b, c);
        }
    }

    pub fn neg(&self) -> HomAction {
        HomAction { bidegree: self.bidegree, values: self.values.iter().map(|v| v.neg()).collect() }
    }

    /// Action of a nonnegative element already present in the algebra.
    pub fn of_element(alg: &BigradedAlgebra, weight: BiWeight, v: &SparseVec) -> Self {
        let values = (0..alg.negative_dim()).map(|b| alg.bracket_sparse(v, &SparseVec::unit(b))).collect();
        HomAction { bidegree: weight, values }
    }
}

impl HomElement {
    pub fn zero(bidegree: BiWeight) -> Self {
        HomElement { bidegree, blocks: BTreeMap::new() }
    }

    pub fn is_zero(&self) -> bool {
        self.blocks.values().all(|m| m.is_zero())
    }

    pub fn to_action(&self, alg: &BigradedAlgebra) -> Result<HomAction, AlgebraError> {
        let mut act = HomAction::zero(alg, self.bidegree);
        for (&w, m) in &self.blocks {
            let src = alg
                .component(w)
                .filter(|c| c.weight.first < 0)
                .ok_or_else(|| AlgebraError::ComponentMismatch(format!("no negative component {w}")))?;
            if m.is_zero() {
                continue;
            }
            let dst = alg.component(w + self.bidegree).ok_or_else(|| {
                AlgebraError::ComponentMismatch(format!("no target component {}", w + self.bidegree))
            })?;
            if (m.rows, m.cols) != (dst.dim(), src.dim()) {
                return Err(AlgebraError::ComponentMismatch(format!("block {w} has wrong shape")));
            }
            for (j, b) in src.range().enumerate() {
                act.values[b] = SparseVec::from_dense(&m.column(j), dst.offset);
            }
        }
        Ok(act)
    }

    pub fn from_action(alg: &BigradedAlgebra, act: &HomAction) -> Result<HomElement, AlgebraError> {
        let mut blocks = BTreeMap::new();
        for c in alg.components().iter().filter(|c| c.weight.first < 0) {
            let tw = c.weight + act.bidegree;
            match alg.component(tw) {
                Some(dst) => {
                    let mut m = Matrix::zeros(dst.dim(), c.dim());
                    for (j, b) in c.range().enumerate() {
                        for (&t, x) in act.values[b].iter() {
                            if !dst.range().contains(&t) {
                                return Err(AlgebraError::ComponentMismatch(format!(
                                    "image of {} leaves {tw}",
                                    alg.label(b)
                                )));
                            }
                            m[(t - dst.offset, j)] = x.clone();
                        }
                    }
                    blocks.insert(c.weight, m);
                }
                None => {
                    if c.range().any(|b| !act.values[b].is_zero()) {
                        return Err(AlgebraError::ComponentMismatch(format!("no target component {tw}")));
                    }
                }
            }
        }
        Ok(HomElement { bidegree: act.bidegree, blocks })
    }
}

/// Flattened coordinates of an action: key b * dim + t.
pub fn flatten_action(alg: &BigradedAlgebra, act: &HomAction) -> SparseVec {
    let n = alg.dim();
    let mut out = SparseVec::new();
    for (b, v) in act.values.iter().enumerate() {
        for (&t, x) in v.iter() {
            out.entries.insert(b * n + t, x.clone());
        }
    }
    out
}

/// Identifies an action with an element of the component at its bidegree.
pub fn decode_action(alg: &BigradedAlgebra, act: &HomAction) -> Result<SparseVec, AlgebraError> {
    if act.is_zero() {
        return Ok(SparseVec::new());
    }
    let w = act.bidegree;
    let Some(comp) = alg.component(w) else {
        return Err(AlgebraError::NotClosed(format!("nonzero map of bidegree {w} with no such component")));
    };
    let dec = alg
        .decoder(w)
        .ok_or_else(|| AlgebraError::NotClosed(format!("no decoder for component {w}")))?;
    let coords = dec
        .decode(&flatten_action(alg, act))
        .ok_or_else(|| AlgebraError::NotClosed(format!("map of bidegree {w} is outside the computed component")))?;
    Ok(SparseVec::from_dense(&coords, comp.offset))
}

/// Operand of a bracket: a homogeneous element of the algebra or a map on g₋.
#[derive(Clone, Copy, Debug)]
pub enum HomArg<'a> {
    Element(BiWeight, &'a SparseVec),
    Hom(&'a HomAction),
}

impl HomArg<'_> {
    pub fn weight(&self) -> BiWeight {
        match self {
            HomArg::Element(w, _) => *w,
            HomArg::Hom(a) => a.bidegree,
        }
    }
}

/// [x, u] for an operand x and a vector u of the algebra.
pub fn op_act(alg: &BigradedAlgebra, x: &HomArg, u: &SparseVec) -> Result<SparseVec, AlgebraError> {
    match x {
        HomArg::Element(_, v) => Ok(alg.bracket_sparse(v, u)),
        HomArg::Hom(a) => {
            let nd = alg.negative_dim();
            let mut out = SparseVec::new();
            let mut rest = SparseVec::new();
            for (&i, c) in u.iter() {
                if i < nd {
                    out.add_scaled(&a.values[i], c);
                } else {
                    rest.entries.insert(i, c.clone());
                }
            }
            for (w, piece) in alg.split(&rest) {
                // [a, u] = -[u, a], computed through the action on g₋
                let act = op_bracket(alg, &HomArg::Element(w, &piece), x)?;
                out.add_scaled(&decode_action(alg, &act)?, &-crate::linalg::GR::from_int(1));
            }
            Ok(out)
        }
    }
}

/// [x, y] as a map on g₋: v ↦ [x, [y, v]] − [y, [x, v]].
pub fn op_bracket(alg: &BigradedAlgebra, x: &HomArg, y: &HomArg) -> Result<HomAction, AlgebraError> {
    let nd = alg.negative_dim();
    let mut values = Vec::with_capacity(nd);
    for b in 0..nd {
        let e = SparseVec::unit(b);
        let yv = op_act(alg, y, &e)?;
        let xv = op_act(alg, x, &e)?;
        let mut r = op_act(alg, x, &yv)?;
        let s = op_act(alg, y, &xv)?;
        r.add_scaled(&s, &-crate::linalg::GR::from_int(1));
        values.push(r);
    }
    Ok(HomAction { bidegree: x.weight() + y.weight(), values })
}

/// [w, f](v) = [w, f(v)] − f([w, v]) on g₋.
pub fn hom_bracket(alg: &BigradedAlgebra, w: HomArg, f: &HomElement) -> Result<HomElement, AlgebraError> {
    if let HomArg::Element(wt, v) = w {
        if v.iter().any(|(&i, _)| alg.weight_of(i) != wt) {
            return Err(AlgebraError::ComponentMismatch(format!("element is not homogeneous of weight {wt}")));
        }
        if wt.first < 0 {
            return Err(AlgebraError::ComponentMismatch("hom_bracket needs a nonnegative first argument".into()));
        }
    }
    let fa = f.to_action(alg)?;
    let act = op_bracket(alg, &w, &HomArg::Hom(&fa))?;
    HomElement::from_action(alg, &act)
}

impl HomElement {
    pub fn is_derivation(&self, alg: &BigradedAlgebra) -> Result<bool, AlgebraError> {
        let act = self.to_action(alg)?;
        let nd = alg.negative_dim();
        let x = HomArg::Hom(&act);
        for b1 in 0..nd {
            for b2 in b1 + 1..nd {
                let lhs = op_act(alg, &x, &alg.bracket_basis(b1, b2))?;
                let mut rhs = alg.bracket_sparse(&act.values[b1], &SparseVec::unit(b2));
                rhs = &rhs + &alg.bracket_sparse(&SparseVec::unit(b1), &act.values[b2]);
                if lhs != rhs {
                    return Ok(false);
                }
            }
        }
        Ok(true)
    }

    pub fn scale(&self, c: &crate::linalg::GR) -> HomElement {
        HomElement {
            bidegree: self.bidegree,
            blocks: self.blocks.iter().map(|(&w, m)| (w, m.scale(c))).collect(),
        }
    }

    pub fn nonzero_blocks(&self) -> impl Iterator<Item = (&BiWeight, &Matrix)> {
        self.blocks.iter().filter(|(_, m)| !m.is_zero())
    }

    pub fn block_is_zero(&self, w: BiWeight) -> bool {
        self.blocks.get(&w).is_none_or(|m| m.entries.iter().all(|x| x.is_zero()))
    }
}
