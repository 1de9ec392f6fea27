//! Bigraded universal prolongation of a regular symbol.
//!
//! Weight 1 is computed as the full degree-1 Tanaka space, then cut to the
//! (1,±1) blocks by the 𝔤₀,±₂ conditions. Higher weights are ordinary
//! Tanaka steps of 𝔤₋ ⊕ 𝔤₀ ⊕ 𝔤₁ ⊕ …, split by second-weight shift.

use std::collections::BTreeMap;

use num_traits::Zero;
use serde::Serialize;
use thiserror::Error;

use crate::algebra::{
    decode_action, flatten_action, op_bracket, restrict_by_conditions, solve_derivations, AlgebraError, BiWeight,
    BigradedAlgebra, HomAction, HomArg, HomElement,
};
use crate::linalg::{
    complexify_vec, hermitian_inertia, nullspace, realify_antilinear, Inertia, Matrix, Rational, SpanDecoder,
    SparseSolver, SparseVec, GR,
};
use crate::symbol::{conj_action, SymbolAlgebra, W_F, W_FBAR};

pub const DEFAULT_MAX_DEGREE: i32 = 10;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ProlongError {
    #[error("NotRegular: {0}")]
    NotRegular(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

/// Degree-1 Tanaka space split by second-weight shift.
#[derive(Clone, Debug)]
pub struct FirstProlongation {
    pub by_shift: BTreeMap<i32, Vec<HomElement>>,
}

impl FirstProlongation {
    pub fn dim(&self) -> usize {
        self.by_shift.values().map(|v| v.len()).sum()
    }
    pub fn shift_dim(&self, s: i32) -> usize {
        self.by_shift.get(&s).map_or(0, |v| v.len())
    }
}

pub fn first_standard_prolongation(sym: &SymbolAlgebra) -> Result<FirstProlongation, ProlongError> {
    require_regular(sym)?;
    let mut by_shift: BTreeMap<i32, Vec<HomElement>> = BTreeMap::new();
    for h in solve_derivations(&sym.algebra, 1, None, &[])? {
        by_shift.entry(h.bidegree.second).or_default().push(h);
    }
    Ok(FirstProlongation { by_shift })
}

fn require_regular(sym: &SymbolAlgebra) -> Result<(), ProlongError> {
    if let Some(&(k, m)) = sym.irregular.first() {
        return Err(ProlongError::NotRegular(format!("[f{}, fbar{}] is not in g00", k + 1, m + 1)));
    }
    Ok(())
}

fn dense_flat(alg: &BigradedAlgebra, act: &HomAction) -> Vec<GR> {
    flatten_action(alg, act).to_dense(0, alg.negative_dim() * alg.dim())
}

fn bracket_elem(alg: &BigradedAlgebra, x: usize, f: &HomAction) -> Result<HomAction, AlgebraError> {
    let ux = SparseVec::unit(x);
    op_bracket(alg, &HomArg::Element(alg.weight_of(x), &ux), &HomArg::Hom(f))
}

/// Bases of 𝔤₁,₁ and 𝔤₁,₋₁: the (1,±1) blocks of the degree-1 space
/// killed by 𝔤₀,±₂ and by two brackets with 𝔤₀,∓₂, then reduced to the
/// largest 𝔤₀-stable subspace.
pub fn first_bigraded_prolongation(
    sym: &SymbolAlgebra,
    gtilde: &FirstProlongation,
) -> Result<(Vec<HomElement>, Vec<HomElement>), ProlongError> {
    require_regular(sym)?;
    let alg = &sym.algebra;
    let fs: Vec<usize> = alg.component(W_F).map(|c| c.range().collect()).unwrap_or_default();
    let fbars: Vec<usize> = alg.component(W_FBAR).map(|c| c.range().collect()).unwrap_or_default();
    let cut = |s: i32| -> Result<Vec<HomElement>, ProlongError> {
        let (same, opposite) = if s > 0 { (&fs, &fbars) } else { (&fbars, &fs) };
        let cond = |h: &HomElement| -> Result<Vec<GR>, AlgebraError> {
            let a = h.to_action(alg)?;
            let mut out = Vec::new();
            for &x in same {
                out.extend(dense_flat(alg, &bracket_elem(alg, x, &a)?));
            }
            for &x in opposite {
                let inner = bracket_elem(alg, x, &a)?;
                for &y in opposite {
                    out.extend(dense_flat(alg, &bracket_elem(alg, y, &inner)?));
                }
            }
            Ok(out)
        };
        let basis = gtilde.by_shift.get(&s).cloned().unwrap_or_default();
        Ok(restrict_by_conditions(alg, &basis, &[&cond])?)
    };
    let mut plus = cut(1)?;
    let mut minus = cut(-1)?;
    let zero_weight: Vec<usize> = alg.components().iter().filter(|c| c.weight.first == 0).flat_map(|c| c.range()).collect();
    loop {
        let decoders = [(1, span_decoder(alg, &plus)?), (-1, span_decoder(alg, &minus)?)];
        let stable = |h: &HomElement| -> Result<Vec<GR>, AlgebraError> {
            let a = h.to_action(alg)?;
            let mut out = Vec::new();
            for &w in &zero_weight {
                let b = bracket_elem(alg, w, &a)?;
                let flat = flatten_action(alg, &b);
                let res = match decoders.iter().find(|(s, _)| *s == b.bidegree.second) {
                    Some((_, d)) => d.residual(&flat),
                    None => flat,
                };
                out.extend(res.to_dense(0, alg.negative_dim() * alg.dim()));
            }
            Ok(out)
        };
        let p2 = restrict_by_conditions(alg, &plus, &[&stable])?;
        let m2 = restrict_by_conditions(alg, &minus, &[&stable])?;
        let done = p2.len() == plus.len() && m2.len() == minus.len();
        plus = p2;
        minus = m2;
        if done {
            break;
        }
    }
    Ok((plus, minus))
}

fn span_decoder(alg: &BigradedAlgebra, basis: &[HomElement]) -> Result<SpanDecoder, AlgebraError> {
    let flats = basis.iter().map(|h| h.to_action(alg).map(|a| flatten_action(alg, &a))).collect::<Result<Vec<_>, _>>()?;
    Ok(SpanDecoder::new(flats)?)
}

/// Canonical basis of 𝔤_i for i ≥ 2, split by shift; empty when 𝔤_i = 0.
pub fn higher_prolongation(alg: &BigradedAlgebra, i: i32) -> Result<BTreeMap<i32, Vec<HomElement>>, ProlongError> {
    let mut out: BTreeMap<i32, Vec<HomElement>> = BTreeMap::new();
    for h in solve_derivations(alg, i, None, &[])? {
        out.entry(h.bidegree.second).or_default().push(h);
    }
    Ok(out)
}

fn component_labels(w: BiWeight, d: usize) -> Vec<String> {
    (1..=d).map(|k| format!("g{},{}#{k}", w.first, w.second)).collect()
}

/// Adds the components of one first weight and all brackets landing in it.
fn attach_weight(
    alg: &mut BigradedAlgebra,
    i: i32,
    by_shift: &BTreeMap<i32, Vec<HomElement>>,
) -> Result<(), AlgebraError> {
    let mut new_ranges = Vec::new();
    for (&s, basis) in by_shift {
        if basis.is_empty() {
            continue;
        }
        let w = BiWeight::new(i, s);
        let actions = basis.iter().map(|h| h.to_action(alg)).collect::<Result<Vec<_>, _>>()?;
        let r = alg.add_component(w, component_labels(w, basis.len()))?;
        for (x, act) in r.clone().zip(&actions) {
            for (b, v) in act.values.iter().enumerate() {
                alg.set_bracket(x, b, v.clone())?;
            }
        }
        new_ranges.push(r);
    }
    alg.refresh_decoders()?;
    brackets_at_total_weight(alg, i)?;
    for r in new_ranges {
        for x in r {
            let c = conj_action(alg, x);
            let img = decode_action(alg, &c)?;
            alg.set_conj(x, img)?;
        }
    }
    Ok(())
}

fn nonneg_ranges(alg: &BigradedAlgebra, a: i32) -> Vec<usize> {
    alg.components().iter().filter(|c| c.weight.first == a).flat_map(|c| c.range()).collect()
}

/// Computes [g_a, g_b] for a + b = t, 0 ≤ a ≤ b, from the action on g₋.
fn brackets_at_total_weight(alg: &mut BigradedAlgebra, t: i32) -> Result<(), AlgebraError> {
    let mut updates = Vec::new();
    for a in 0..=t / 2 {
        let xs = nonneg_ranges(alg, a);
        let ys = nonneg_ranges(alg, t - a);
        for &x in &xs {
            for &y in &ys {
                if a == t - a && y <= x {
                    continue;
                }
                let (ux, uy) = (SparseVec::unit(x), SparseVec::unit(y));
                let act = op_bracket(alg, &HomArg::Element(alg.weight_of(x), &ux), &HomArg::Element(alg.weight_of(y), &uy))?;
                let v = decode_action(alg, &act)?;
                updates.push((x, y, v));
            }
        }
        // brackets inside one total weight do not feed each other
    }
    for (x, y, v) in updates {
        alg.set_bracket(x, y, v)?;
    }
    Ok(())
}

#[derive(Clone, Debug, Serialize)]
pub struct Verification {
    pub jacobi_checked: bool,
    pub jacobi_violations: usize,
    pub involution_problems: Vec<String>,
    pub grading_element: bool,
    pub real_jacobi_violations: usize,
}

impl Verification {
    pub fn passed(&self) -> bool {
        self.jacobi_violations == 0
            && self.involution_problems.is_empty()
            && self.grading_element
            && self.real_jacobi_violations == 0
    }
}

/// Rational structure constants of the fixed-point algebra of the involution.
#[derive(Clone, Debug)]
pub struct RealForm {
    pub labels: Vec<String>,
    pub first_weights: Vec<i32>,
    /// real basis vectors in complex coordinates
    pub basis: Vec<SparseVec>,
    pub structure: BTreeMap<(usize, usize), Vec<(usize, Rational)>>,
}

#[derive(Clone, Debug)]
pub struct KillingData {
    pub matrix: Matrix,
    pub real_matrix: Matrix,
    pub inertia: Inertia,
}

impl KillingData {
    pub fn semisimple(&self) -> bool {
        self.inertia.zero == 0
    }
}

#[derive(Clone, Debug)]
pub struct ProlongationResult {
    pub algebra: BigradedAlgebra,
    pub dims: BTreeMap<BiWeight, usize>,
    pub gtilde1_dims: BTreeMap<i32, usize>,
    pub terminated_at: i32,
    pub max_degree_reached: bool,
    pub verification: Verification,
    pub real_form: RealForm,
    pub killing: KillingData,
    pub grading_element: Option<Vec<GR>>,
}

impl ProlongationResult {
    pub fn total_complex(&self) -> usize {
        self.algebra.dim()
    }

    pub fn first_weight_dim(&self, i: i32) -> usize {
        self.algebra.first_weight_dim(i)
    }

    pub fn ledger_json(&self) -> serde_json::Value {
        let dims: serde_json::Map<String, serde_json::Value> =
            self.dims.iter().map(|(w, d)| (w.to_string(), serde_json::json!(d))).collect();
        serde_json::json!({
            "dims": dims,
            "total_complex": self.total_complex(),
            "terminated_at": self.terminated_at,
            "max_degree_reached": self.max_degree_reached,
            "gtilde1": self.gtilde1_dims.iter().map(|(s, d)| (format!("(1,{s})"), serde_json::json!(d))).collect::<serde_json::Map<_, _>>(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct AssembleOptions {
    pub max_degree: i32,
    pub jacobi: bool,
}

impl Default for AssembleOptions {
    fn default() -> Self {
        AssembleOptions { max_degree: DEFAULT_MAX_DEGREE, jacobi: true }
    }
}

pub fn assemble(sym: &SymbolAlgebra) -> Result<ProlongationResult, ProlongError> {
    assemble_with(sym, AssembleOptions::default())
}

pub fn assemble_with(sym: &SymbolAlgebra, opts: AssembleOptions) -> Result<ProlongationResult, ProlongError> {
    let gtilde = first_standard_prolongation(sym)?;
    let (plus, minus) = first_bigraded_prolongation(sym, &gtilde)?;
    let mut alg = sym.algebra.clone();
    let mut first: BTreeMap<i32, Vec<HomElement>> = BTreeMap::new();
    first.insert(-1, minus);
    first.insert(1, plus);
    let mut terminated_at = 1;
    let mut max_degree_reached = false;
    if first.values().any(|v| !v.is_empty()) {
        attach_weight(&mut alg, 1, &first)?;
        let mut i = 2;
        loop {
            if i > opts.max_degree {
                max_degree_reached = true;
                terminated_at = i;
                break;
            }
            let next = higher_prolongation(&alg, i)?;
            if next.values().all(|v| v.is_empty()) {
                terminated_at = i;
                break;
            }
            attach_weight(&mut alg, i, &next)?;
            i += 1;
        }
        if !max_degree_reached {
            // every bracket past the top weight must vanish
            let top = terminated_at - 1;
            for t in terminated_at..=2 * top {
                brackets_at_total_weight(&mut alg, t)?;
            }
        }
    }
    let grading = grading_element(&alg);
    let jac = if opts.jacobi { alg.jacobi_check().len() } else { 0 };
    let inv = alg.involution_check();
    let real_form = real_form(&alg)?;
    let real_jac = if opts.jacobi { real_form.jacobi_check() } else { 0 };
    let killing = killing_data(&alg, &real_form);
    let verification = Verification {
        jacobi_checked: opts.jacobi,
        jacobi_violations: jac,
        involution_problems: inv,
        grading_element: grading.is_some(),
        real_jacobi_violations: real_jac,
    };
    Ok(ProlongationResult {
        dims: alg.dims(),
        gtilde1_dims: gtilde.by_shift.iter().map(|(&s, v)| (s, v.len())).collect(),
        algebra: alg,
        terminated_at,
        max_degree_reached,
        verification,
        real_form,
        killing,
        grading_element: grading,
    })
}

/// Z in the weight-0 part with [Z, x] = (first weight of x)·x for every basis x.
pub fn grading_element(alg: &BigradedAlgebra) -> Option<Vec<GR>> {
    let zs: Vec<usize> = nonneg_ranges(alg, 0);
    let n = alg.dim();
    let t = zs.len();
    let mut solver = SparseSolver::new(t + 1);
    for x in 0..n {
        let mut rows: BTreeMap<usize, SparseVec> = BTreeMap::new();
        for (k, &z) in zs.iter().enumerate() {
            for (&o, c) in alg.bracket_basis(z, x).iter() {
                rows.entry(o).or_default().add_term(k, c);
            }
        }
        let wx = alg.weight_of(x).first;
        if wx != 0 {
            rows.entry(x).or_default().add_term(t, &GR::from_int(-wx as i64));
        }
        for (_, r) in rows {
            if !r.is_zero() {
                solver.add_row(r);
            }
        }
    }
    if !solver.is_free(t) {
        return None;
    }
    let v = solver.nullspace().into_iter().find(|v| !v.get(t).is_zero())?;
    Some(v.to_dense(0, t))
}

pub fn real_form(alg: &BigradedAlgebra) -> Result<RealForm, ProlongError> {
    let mut labels = Vec::new();
    let mut first_weights = Vec::new();
    let mut basis: Vec<SparseVec> = Vec::new();
    let i = GR::i();
    for c in alg.components().iter().filter(|c| c.weight.second == 0) {
        let m = alg
            .involution_matrix(c.weight)
            .ok_or_else(|| AlgebraError::Malformed(format!("involution missing on {}", c.weight)))?;
        let r = &realify_antilinear(&m) - &Matrix::identity(2 * c.dim());
        let fixed = nullspace(&r);
        if fixed.len() != c.dim() {
            return Err(AlgebraError::Malformed(format!("fixed space of {} has wrong dimension", c.weight)).into());
        }
        for (k, v) in fixed.iter().enumerate() {
            basis.push(SparseVec::from_dense(&complexify_vec(v), c.offset));
            labels.push(format!("fix{}#{}", c.weight, k + 1));
            first_weights.push(c.weight.first);
        }
    }
    for c in alg.components().iter().filter(|c| c.weight.second > 0) {
        for x in c.range() {
            let xb = alg.conj_basis(x);
            let ux = SparseVec::unit(x);
            basis.push(&ux + &xb);
            basis.push((&ux - &xb).scaled(&i));
            labels.push(format!("re({})", alg.label(x)));
            labels.push(format!("im({})", alg.label(x)));
            first_weights.push(c.weight.first);
            first_weights.push(c.weight.first);
        }
    }
    let n = alg.dim();
    if basis.len() != n {
        return Err(AlgebraError::Malformed("real basis has the wrong size".into()).into());
    }
    let p = Matrix::from_columns(&basis.iter().map(|b| b.to_dense(0, n)).collect::<Vec<_>>());
    let pinv = p.inverse().map_err(AlgebraError::from)?;
    let mut structure = BTreeMap::new();
    for a in 0..n {
        for b in a + 1..n {
            let w = alg.bracket_sparse(&basis[a], &basis[b]);
            if w.is_zero() {
                continue;
            }
            let coords = pinv.mul_vec(&w.to_dense(0, n));
            let mut terms = Vec::new();
            for (k, x) in coords.iter().enumerate() {
                if !x.is_real() {
                    return Err(AlgebraError::Malformed(format!("real bracket [{}, {}] is not real", labels[a], labels[b])).into());
                }
                if !x.is_zero() {
                    terms.push((k, x.re.clone()));
                }
            }
            structure.insert((a, b), terms);
        }
    }
    Ok(RealForm { labels, first_weights, basis, structure })
}

impl RealForm {
    pub fn dim(&self) -> usize {
        self.labels.len()
    }

    fn bracket(&self, u: &BTreeMap<usize, Rational>, v: &BTreeMap<usize, Rational>) -> BTreeMap<usize, Rational> {
        let mut out: BTreeMap<usize, Rational> = BTreeMap::new();
        for (&a, x) in u {
            for (&b, y) in v {
                if a == b {
                    continue;
                }
                let (key, sign) = if a < b { ((a, b), 1) } else { ((b, a), -1) };
                if let Some(terms) = self.structure.get(&key) {
                    for (k, c) in terms {
                        let e = out.entry(*k).or_insert_with(Rational::zero);
                        *e += x * y * c * Rational::from_integer(sign.into());
                    }
                }
            }
        }
        out.retain(|_, c| !c.is_zero());
        out
    }

    fn unit(a: usize) -> BTreeMap<usize, Rational> {
        BTreeMap::from([(a, Rational::from_integer(1.into()))])
    }

    /// Number of violating triples of the rational Jacobi identity.
    pub fn jacobi_check(&self) -> usize {
        let n = self.dim();
        let mut bad = 0;
        for x in 0..n {
            for y in x + 1..n {
                let xy = self.bracket(&Self::unit(x), &Self::unit(y));
                for z in y + 1..n {
                    let wsum = self.first_weights[x] + self.first_weights[y] + self.first_weights[z];
                    if !self.first_weights.contains(&wsum) {
                        continue;
                    }
                    let mut r = self.bracket(&xy, &Self::unit(z));
                    for (k, c) in self.bracket(&self.bracket(&Self::unit(y), &Self::unit(z)), &Self::unit(x)) {
                        *r.entry(k).or_insert_with(Rational::zero) += c;
                    }
                    for (k, c) in self.bracket(&self.bracket(&Self::unit(z), &Self::unit(x)), &Self::unit(y)) {
                        *r.entry(k).or_insert_with(Rational::zero) += c;
                    }
                    if r.values().any(|c| !c.is_zero()) {
                        bad += 1;
                    }
                }
            }
        }
        bad
    }

    /// Killing form computed from the rational structure constants.
    pub fn killing_form(&self) -> Matrix {
        let n = self.dim();
        let ad: Vec<Vec<BTreeMap<usize, Rational>>> =
            (0..n).map(|x| (0..n).map(|b| self.bracket(&Self::unit(x), &Self::unit(b))).collect()).collect();
        let mut k = Matrix::zeros(n, n);
        for x in 0..n {
            for y in x..n {
                if self.first_weights[x] + self.first_weights[y] != 0 {
                    continue;
                }
                let mut acc = Rational::zero();
                for b in 0..n {
                    for (a, c) in &ad[x][b] {
                        if let Some(d) = ad[y][*a].get(&b) {
                            acc += c * d;
                        }
                    }
                }
                k[(x, y)] = GR::from_rational(acc.clone());
                k[(y, x)] = GR::from_rational(acc);
            }
        }
        k
    }

    pub fn signature_counts(&self) -> Inertia {
        hermitian_inertia(&self.killing_form()).expect("real symmetric matrix")
    }
}

fn killing_data(alg: &BigradedAlgebra, rf: &RealForm) -> KillingData {
    let matrix = alg.killing_form();
    let real_matrix = rf.killing_form();
    let inertia = hermitian_inertia(&real_matrix).expect("real symmetric matrix");
    KillingData { matrix, real_matrix, inertia }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::symbol::{build_symbol, SymbolInput};

    fn type_i(n: usize) -> SymbolAlgebra {
        build_symbol(&SymbolInput::new(Matrix::identity(n), vec![Matrix::identity(n)])).unwrap()
    }

    #[test]
    fn dim_five_chain() {
        let sym = type_i(1);
        let gt = first_standard_prolongation(&sym).unwrap();
        // weight-3 polynomials in the contact model: x³, x²y, xy², y³, xz, yz
        assert_eq!(gt.dim(), 6);
        let (p, m) = first_bigraded_prolongation(&sym, &gt).unwrap();
        assert_eq!(p.len() + m.len(), 2);
        let res = assemble(&sym).unwrap();
        let per: Vec<usize> = (-2..=2).map(|i| res.first_weight_dim(i)).collect();
        assert_eq!(per, vec![1, 2, 4, 2, 1]);
        assert_eq!(res.total_complex(), 10);
        assert_eq!(res.terminated_at, 3);
        assert!(res.verification.passed(), "{:?}", res.verification);
        assert_eq!((res.killing.inertia.pos, res.killing.inertia.neg), (6, 4));
    }

    fn sym(h: Matrix, m: Matrix) -> SymbolAlgebra {
        build_symbol(&SymbolInput::new(h, vec![m])).unwrap()
    }

    fn per_weight(res: &ProlongationResult) -> Vec<usize> {
        (-2..=3).map(|i| res.first_weight_dim(i)).collect()
    }

    #[test]
    fn type_ii_one() {
        let res = assemble(&sym(Matrix::diag_ints(&[1, -1]), Matrix::from_int_rows(&[&[0, -1], &[1, 0]]))).unwrap();
        assert_eq!(per_weight(&res), vec![1, 4, 5, 4, 1, 0]);
        assert!(res.verification.passed());
        assert_eq!((res.killing.inertia.pos, res.killing.inertia.neg), (6, 9));
    }

    #[test]
    fn nilpotent_j2_and_j3() {
        let j2 = assemble(&sym(Matrix::from_int_rows(&[&[0, 1], &[1, 0]]), Matrix::from_int_rows(&[&[0, 1], &[0, 0]]))).unwrap();
        assert_eq!(per_weight(&j2), vec![1, 4, 6, 4, 1, 0]);
        assert_eq!(j2.gtilde1_dims.get(&3), Some(&1));
        assert!(!j2.killing.semisimple());
        let p3 = Matrix::from_int_rows(&[&[0, 0, 1], &[0, 1, 0], &[1, 0, 0]]);
        let j3 = Matrix::from_int_rows(&[&[0, 1, 0], &[0, 0, 1], &[0, 0, 0]]);
        let res = assemble(&sym(p3, j3)).unwrap();
        assert_eq!(per_weight(&res), vec![1, 6, 7, 2, 0, 0]);
        assert!(res.verification.passed());
    }

    #[test]
    fn weakly_non_nilpotent_stops_at_g0() {
        let res = assemble(&sym(Matrix::diag_ints(&[1, 1]), Matrix::diag_ints(&[1, 0]))).unwrap();
        assert_eq!(res.first_weight_dim(1), 0);
        assert_eq!(res.terminated_at, 1);
        assert_eq!(res.total_complex(), 10);
    }

    #[test]
    fn max_degree_cap_is_reported() {
        let res = assemble_with(&type_i(1), AssembleOptions { max_degree: 1, jacobi: false }).unwrap();
        assert!(res.max_degree_reached);
        assert_eq!(res.first_weight_dim(2), 0);
    }
}
