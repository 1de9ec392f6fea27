//! Graded derivations of the negative part with values in the algebra.

use std::collections::BTreeMap;

use num_traits::Zero;

use super::hom::{flatten_action, HomAction, HomElement};
use super::{AlgebraError, BiWeight, BigradedAlgebra};
use crate::linalg::{canonical_basis, nullspace, Matrix, SparseSolver, SparseVec, GR};

/// A linear constraint evaluated on a candidate map; the map is admissible
/// when every returned residual vanishes.
pub type SideCondition<'a> = &'a dyn Fn(&HomElement) -> Result<Vec<GR>, AlgebraError>;

/// Canonical basis of the maps f: g₋ → g of the given bidegree with
/// f([v₁,v₂]) = [f(v₁),v₂] + [v₁,f(v₂)], cut down by the side conditions.
/// With `second = None` every second-weight shift is solved and the bases
/// are concatenated in increasing shift.
pub fn solve_derivations(
    alg: &BigradedAlgebra,
    first: i32,
    second: Option<i32>,
    side_conditions: &[SideCondition],
) -> Result<Vec<HomElement>, AlgebraError> {
    let shifts = match second {
        Some(s) => vec![s],
        None => candidate_shifts(alg, first),
    };
    let mut actions = Vec::new();
    for s in shifts {
        let mut sol = leibniz_solutions(alg, BiWeight::new(first, s));
        if !side_conditions.is_empty() && !sol.is_empty() {
            sol = apply_side_conditions(alg, sol, side_conditions)?;
        }
        actions.extend(sol);
    }
    actions.iter().map(|a| HomElement::from_action(alg, a)).collect()
}

pub(crate) fn candidate_shifts(alg: &BigradedAlgebra, first: i32) -> Vec<i32> {
    let mut out: Vec<i32> = Vec::new();
    for src in alg.components().iter().filter(|c| c.weight.first < 0) {
        for dst in alg.components().iter().filter(|c| c.weight.first == src.weight.first + first) {
            out.push(dst.weight.second - src.weight.second);
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Canonical nullspace of the Leibniz system at one bidegree.
pub(crate) fn leibniz_solutions(alg: &BigradedAlgebra, bidegree: BiWeight) -> Vec<HomAction> {
    let nd = alg.negative_dim();
    let targets: Vec<std::ops::Range<usize>> = (0..nd)
        .map(|b| alg.component(alg.weight_of(b) + bidegree).map_or(0..0, |c| c.range()))
        .collect();
    let mut var_of: BTreeMap<(usize, usize), usize> = BTreeMap::new();
    let mut vars: Vec<(usize, usize)> = Vec::new();
    for (b, r) in targets.iter().enumerate() {
        for t in r.clone() {
            var_of.insert((b, t), vars.len());
            vars.push((b, t));
        }
    }
    if vars.is_empty() {
        return Vec::new();
    }
    let mut solver = SparseSolver::new(vars.len());
    let minus_one = -GR::from_int(1);
    for b1 in 0..nd {
        for b2 in b1 + 1..nd {
            let mut eqs: BTreeMap<usize, SparseVec> = BTreeMap::new();
            for (&c, k) in alg.bracket_basis(b1, b2).iter() {
                for t in targets[c].clone() {
                    eqs.entry(t).or_default().add_term(var_of[&(c, t)], k);
                }
            }
            for (src, other, sign) in [(b1, b2, &minus_one), (b2, b1, &GR::from_int(1))] {
                for t in targets[src].clone() {
                    for (&o, val) in alg.bracket_basis(t, other).iter() {
                        eqs.entry(o).or_default().add_term(var_of[&(src, t)], &(val * sign));
                    }
                }
            }
            for (_, row) in eqs {
                if !row.is_zero() {
                    solver.add_row(row);
                }
            }
        }
    }
    solver
        .nullspace()
        .into_iter()
        .map(|v| {
            let mut act = HomAction::zero(alg, bidegree);
            for (&var, x) in v.iter() {
                let (b, t) = vars[var];
                act.values[b].entries.insert(t, x.clone());
            }
            act
        })
        .collect()
}

/// Subspace of the span of `basis` (one bidegree) satisfying the conditions.
pub fn restrict_by_conditions(
    alg: &BigradedAlgebra,
    basis: &[HomElement],
    side_conditions: &[SideCondition],
) -> Result<Vec<HomElement>, AlgebraError> {
    if basis.is_empty() {
        return Ok(Vec::new());
    }
    let actions = basis.iter().map(|h| h.to_action(alg)).collect::<Result<Vec<_>, _>>()?;
    let cut = apply_side_conditions(alg, actions, side_conditions)?;
    cut.iter().map(|a| HomElement::from_action(alg, a)).collect()
}

fn apply_side_conditions(
    alg: &BigradedAlgebra,
    actions: Vec<HomAction>,
    side_conditions: &[SideCondition],
) -> Result<Vec<HomAction>, AlgebraError> {
    let mut columns: Vec<Vec<GR>> = Vec::with_capacity(actions.len());
    for a in &actions {
        let h = HomElement::from_action(alg, a)?;
        let mut col = Vec::new();
        for cond in side_conditions {
            col.extend(cond(&h)?);
        }
        columns.push(col);
    }
    let rows = columns.first().map_or(0, |c| c.len());
    if columns.iter().any(|c| c.len() != rows) {
        return Err(AlgebraError::Malformed("side condition returned residuals of varying length".into()));
    }
    let m = Matrix::from_columns(&columns);
    let combos = if rows == 0 { (0..actions.len()).map(|i| unit(i, actions.len())).collect() } else { nullspace(&m) };
    restrict(alg, &actions, &combos)
}

fn unit(i: usize, n: usize) -> Vec<GR> {
    let mut v = vec![GR::zero(); n];
    v[i] = GR::from_int(1);
    v
}

/// Canonical basis of the span of the given combinations of `actions`.
pub(crate) fn restrict(
    alg: &BigradedAlgebra,
    actions: &[HomAction],
    combos: &[Vec<GR>],
) -> Result<Vec<HomAction>, AlgebraError> {
    let n = alg.dim();
    let nd = alg.negative_dim();
    let mut flat = Vec::with_capacity(combos.len());
    let mut by_shift: BTreeMap<BiWeight, Vec<SparseVec>> = BTreeMap::new();
    for c in combos {
        let mut acc: Option<HomAction> = None;
        for (x, a) in c.iter().zip(actions) {
            if x.is_zero() {
                continue;
            }
            match &mut acc {
                None => {
                    let mut z = HomAction::zero(alg, a.bidegree);
                    z.add_scaled(a, x);
                    acc = Some(z);
                }
                Some(z) => {
                    if z.bidegree != a.bidegree {
                        return Err(AlgebraError::Malformed("combination mixes bidegrees".into()));
                    }
                    z.add_scaled(a, x);
                }
            }
        }
        if let Some(z) = acc {
            flat.push((z.bidegree, flatten_action(alg, &z)));
        }
    }
    for (w, v) in flat {
        by_shift.entry(w).or_default().push(v);
    }
    let mut out = Vec::new();
    for (w, vs) in by_shift {
        for v in canonical_basis(&vs, nd * n) {
            let mut act = HomAction::zero(alg, w);
            for (&k, x) in v.iter() {
                act.values[k / n].entries.insert(k % n, x.clone());
            }
            out.push(act);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::super::tests::heisenberg;
    use super::*;

    #[test]
    fn full_grading_preserving_derivations() {
        let h1 = heisenberg(1);
        assert_eq!(solve_derivations(&h1, 0, None, &[]).unwrap().len(), 4);
        let h2 = heisenberg(2);
        assert_eq!(solve_derivations(&h2, 0, None, &[]).unwrap().len(), 11);
    }

    #[test]
    fn bigrading_preserving_derivations() {
        // c = b1 + b2 for n = 1 leaves two free parameters
        let h1 = heisenberg(1);
        let d = solve_derivations(&h1, 0, Some(0), &[]).unwrap();
        assert_eq!(d.len(), 2);
        assert!(d.iter().all(|f| f.is_derivation(&h1).unwrap()));
    }

    #[test]
    fn side_condition_cuts() {
        let h1 = heisenberg(1);
        let kill_e0 = |f: &HomElement| -> Result<Vec<GR>, AlgebraError> {
            Ok(f.blocks.get(&BiWeight::new(-2, 0)).map(|m| m.entries.clone()).unwrap_or_default())
        };
        let d = solve_derivations(&h1, 0, Some(0), &[&kill_e0]).unwrap();
        assert_eq!(d.len(), 1);
    }
}
