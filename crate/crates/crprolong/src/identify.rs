//! Golden models of the prolongations and real-form identification.
//!
//! A golden model is built twice where possible: from explicit matrices
//! (brackets are matrix commutators) and from explicit derivations of g₋
//! (brackets are commutators of actions). Both carry the same labels.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::sync::{Arc, Mutex, OnceLock};

use num_traits::Zero;
use serde_json::{json, Value};
use thiserror::Error;

use crate::algebra::{decode_action, op_bracket, AlgebraError, BiWeight, BigradedAlgebra, HomAction, HomArg};
use crate::linalg::{
    complexify_vec, hermitian_inertia, nullspace, realify_antilinear, Inertia, Matrix, SignaturePair, SpanDecoder,
    SparseSolver, SparseVec, GR,
};
use crate::prolong::ProlongationResult;
use crate::symbol::conj_action;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum IdentifyError {
    #[error("malformed golden model name: {0}")]
    MalformedName(String),
    #[error("no golden model for {0}")]
    NoGoldenModel(String),
    #[error("golden model construction failed: {0}")]
    Construction(String),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum GoldenName {
    /// so(p+2, q+2)
    So { p: usize, q: usize },
    /// so*(2p+4)
    SoStar { p: usize },
    Nilpotent { n1: usize, n2: usize, n3: usize },
}

impl GoldenName {
    pub fn n(&self) -> usize {
        match *self {
            GoldenName::So { p, q } => p + q,
            GoldenName::SoStar { p } => 2 * p,
            GoldenName::Nilpotent { n1, n2, n3 } => n1 + 2 * n2 + 3 * n3,
        }
    }

    fn check(&self) -> Result<(), IdentifyError> {
        match *self {
            GoldenName::So { p, q } if p + q == 0 => Err(IdentifyError::MalformedName(self.to_string())),
            GoldenName::SoStar { p } if p == 0 => Err(IdentifyError::MalformedName(self.to_string())),
            GoldenName::Nilpotent { n1: 0, n2: 0, n3: 1 } | GoldenName::Nilpotent { n1: 0, n2: 1, n3: 0 } => Ok(()),
            GoldenName::Nilpotent { .. } => Err(IdentifyError::NoGoldenModel(self.to_string())),
            _ => Ok(()),
        }
    }
}

impl fmt::Display for GoldenName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            GoldenName::So { p, q } => write!(f, "so({},{})", p + 2, q + 2),
            GoldenName::SoStar { p } => write!(f, "so*({})", 2 * p + 4),
            GoldenName::Nilpotent { n1, n2, n3 } => write!(f, "nilpotent({n1},{n2},{n3})"),
        }
    }
}

fn parse_args(s: &str, prefix: &str) -> Option<Vec<usize>> {
    let inner = s.strip_prefix(prefix)?.strip_prefix('(')?.strip_suffix(')')?;
    inner.split(',').map(|t| t.trim().parse().ok()).collect()
}

impl FromStr for GoldenName {
    type Err = IdentifyError;

    /// Accepts so(a,b), so*(m), so_star(m) and nilpotent(n1,n2,n3).
    fn from_str(s: &str) -> Result<Self, IdentifyError> {
        let s = s.trim();
        let bad = || IdentifyError::MalformedName(s.to_string());
        let name = if let Some(v) = parse_args(s, "so*").or_else(|| parse_args(s, "so_star")) {
            match v.as_slice() {
                [m] if *m >= 6 && m % 2 == 0 => GoldenName::SoStar { p: (m - 4) / 2 },
                _ => return Err(bad()),
            }
        } else if let Some(v) = parse_args(s, "so") {
            match v.as_slice() {
                [a, b] if *a >= 2 && *b >= 2 => GoldenName::So { p: a - 2, q: b - 2 },
                _ => return Err(bad()),
            }
        } else if let Some(v) = parse_args(s, "nilpotent") {
            match v.as_slice() {
                [n1, n2, n3] => GoldenName::Nilpotent { n1: *n1, n2: *n2, n3: *n3 },
                _ => return Err(bad()),
            }
        } else {
            return Err(bad());
        };
        match name.check() {
            Err(IdentifyError::MalformedName(_)) => Err(bad()),
            other => other.map(|_| name),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Fingerprint {
    pub complex_dim: usize,
    pub killing_signature: SignaturePair,
    pub semisimple: bool,
    pub dims: BTreeMap<BiWeight, usize>,
}

impl Fingerprint {
    fn from_inertia(alg: &BigradedAlgebra, k: Inertia) -> Self {
        Fingerprint {
            complex_dim: alg.dim(),
            killing_signature: SignaturePair::new(k.pos, k.neg),
            semisimple: k.zero == 0,
            dims: alg.dims(),
        }
    }

    pub fn of_result(res: &ProlongationResult) -> Self {
        Fingerprint::from_inertia(&res.algebra, res.killing.inertia)
    }

    fn key(&self) -> (usize, SignaturePair, bool) {
        (self.complex_dim, self.killing_signature, self.semisimple)
    }

    pub fn to_json(&self) -> Value {
        json!({
            "dim": self.complex_dim,
            "killing_signature": [self.killing_signature.pos, self.killing_signature.neg],
            "semisimple": self.semisimple,
        })
    }
}

#[derive(Clone, Debug)]
pub struct GoldenModel {
    pub name: GoldenName,
    pub algebra: BigradedAlgebra,
    pub fingerprint: Fingerprint,
    /// real structure of the matrix realization as an anti-linear map on
    /// the labeled basis; None for derivation-only models
    pub matrix_real_structure: Option<Matrix>,
}

impl GoldenModel {
    pub fn to_json(&self) -> Value {
        let dims: serde_json::Map<String, Value> =
            self.fingerprint.dims.iter().map(|(w, d)| (w.to_string(), json!(d))).collect();
        json!({
            "name": self.name.to_string(),
            "fingerprint": self.fingerprint.to_json(),
            "dims": dims,
            "algebra": serde_json::to_value(self.algebra.to_json_struct()).expect("algebra json"),
        })
    }
}

// ---------------------------------------------------------------------------
// construction helpers

type Terms = Vec<(String, GR)>;

fn g(k: i64) -> GR {
    GR::from_int(k)
}

fn gi(k: i64) -> GR {
    GR::from_ints(0, k)
}

fn e(a: usize) -> String {
    format!("e{}", a + 1)
}

fn eb(a: usize) -> String {
    format!("ebar{}", a + 1)
}

/// Negative part with labels e0, ebar_i, e_i and [e_α, ē_β] = H[α][β] e₀.
fn negative_part(h: &Matrix) -> Result<BigradedAlgebra, AlgebraError> {
    let n = h.rows;
    let mut a = BigradedAlgebra::new();
    a.add_component(BiWeight::new(-2, 0), vec!["e0".into()])?;
    a.add_component(BiWeight::new(-1, -1), (0..n).map(eb).collect())?;
    a.add_component(BiWeight::new(-1, 1), (0..n).map(e).collect())?;
    Ok(a)
}

fn set_negative_structure(a: &mut BigradedAlgebra, h: Option<&Matrix>, n: usize) -> Result<(), AlgebraError> {
    if let Some(h) = h {
        for x in 0..n {
            for y in 0..n {
                if !h[(x, y)].is_zero() {
                    a.set_bracket(1 + n + x, 1 + y, SparseVec::unit(0).scaled(&h[(x, y)]))?;
                }
            }
        }
    }
    a.set_conj(0, SparseVec::unit(0).neg())?;
    for x in 0..n {
        a.set_conj(1 + n + x, SparseVec::unit(1 + x))?;
        a.set_conj(1 + x, SparseVec::unit(1 + n + x))?;
    }
    Ok(())
}

fn derive_conj(a: &mut BigradedAlgebra) -> Result<(), AlgebraError> {
    for x in a.negative_dim()..a.dim() {
        let c = conj_action(a, x);
        let img = decode_action(a, &c)?;
        a.set_conj(x, img)?;
    }
    Ok(())
}

fn resolve(a: &BigradedAlgebra, terms: &Terms) -> Result<SparseVec, IdentifyError> {
    let mut v = SparseVec::new();
    for (l, c) in terms {
        let x = a.index_of_label(l).ok_or_else(|| IdentifyError::Construction(format!("unknown label {l}")))?;
        v.add_term(x, c);
    }
    Ok(v)
}

fn group_by_weight<T>(items: Vec<(BiWeight, String, T)>) -> BTreeMap<BiWeight, Vec<(String, T)>> {
    let mut out: BTreeMap<BiWeight, Vec<(String, T)>> = BTreeMap::new();
    for (w, l, t) in items {
        out.entry(w).or_default().push((l, t));
    }
    out
}

/// A nonnegative basis element given by its action on g₋.
struct Derivation {
    weight: BiWeight,
    label: String,
    action: Vec<(String, Terms)>,
}

fn der(first: i32, second: i32, label: impl Into<String>, action: Vec<(String, Terms)>) -> Derivation {
    Derivation { weight: BiWeight::new(first, second), label: label.into(), action }
}

/// Adds coefficient c of `label` to the value on `on`.
fn push(action: &mut Vec<(String, Terms)>, on: String, label: String, c: GR) {
    if c.is_zero() {
        return;
    }
    match action.iter_mut().find(|(l, _)| *l == on) {
        Some((_, t)) => t.push((label, c)),
        None => action.push((on, vec![(label, c)])),
    }
}

/// Builds the algebra whose nonnegative part acts on g₋ by the given
/// derivations; every remaining bracket is the commutator of actions.
fn algebra_from_derivations(h: &Matrix, elements: Vec<Derivation>) -> Result<BigradedAlgebra, IdentifyError> {
    let n = h.rows;
    let mut a = negative_part(h)?;
    let items = elements.into_iter().map(|d| (d.weight, d.label, d.action)).collect();
    let groups = group_by_weight(items);
    for (w, elts) in &groups {
        a.add_component(*w, elts.iter().map(|(l, _)| l.clone()).collect())?;
    }
    set_negative_structure(&mut a, Some(h), n)?;
    for elts in groups.values() {
        for (l, action) in elts {
            let x = a.index_of_label(l).expect("label just added");
            for (on, terms) in action {
                let b = a
                    .index_of_label(on)
                    .filter(|&b| b < a.negative_dim())
                    .ok_or_else(|| IdentifyError::Construction(format!("{l} acts on unknown {on}")))?;
                let v = resolve(&a, terms)?;
                a.set_bracket(x, b, v)?;
            }
        }
    }
    a.refresh_decoders()?;
    close_brackets(&mut a)?;
    derive_conj(&mut a)?;
    Ok(a)
}

/// Brackets of nonnegative elements, in increasing total first weight.
fn close_brackets(a: &mut BigradedAlgebra) -> Result<(), IdentifyError> {
    let nd = a.negative_dim();
    let top = a.components().last().map_or(0, |c| c.weight.first);
    for t in 0..=2 * top {
        let mut updates = Vec::new();
        for x in nd..a.dim() {
            for y in x + 1..a.dim() {
                if a.weight_of(x).first + a.weight_of(y).first != t {
                    continue;
                }
                let (ux, uy) = (SparseVec::unit(x), SparseVec::unit(y));
                let act = op_bracket(a, &HomArg::Element(a.weight_of(x), &ux), &HomArg::Element(a.weight_of(y), &uy))?;
                let v = decode_action(a, &act)
                    .map_err(|e| IdentifyError::Construction(format!("[{}, {}]: {e}", a.label(x), a.label(y))))?;
                updates.push((x, y, v));
            }
        }
        for (x, y, v) in updates {
            a.set_bracket(x, y, v)?;
        }
    }
    Ok(())
}

/// Formula of conj(X) from the formula of X: v ↦ conj(X(conj v)).
fn conjugate_action(stage: &BigradedAlgebra, action: &[(String, Terms)]) -> Result<Vec<(String, Terms)>, IdentifyError> {
    let nd = stage.negative_dim();
    let mut out = Vec::new();
    for b in 0..nd {
        let cb = stage.conj_basis(b);
        let mut val = SparseVec::new();
        for (&y, c) in cb.iter() {
            if let Some((_, terms)) = action.iter().find(|(l, _)| l == stage.label(y)) {
                val.add_scaled(&resolve(stage, terms)?, c);
            }
        }
        let img = stage.conj_sparse(&val);
        if !img.is_zero() {
            out.push((stage.label(b).to_string(), img.iter().map(|(&i, c)| (stage.label(i).to_string(), c.clone())).collect()));
        }
    }
    Ok(out)
}

/// A labeled matrix of the realization.
struct MatrixElement {
    weight: BiWeight,
    label: String,
    m: Matrix,
}

/// Σ c E^i_j with 1-based indices, E^i_j having its 1 in column i, row j.
fn em(size: usize, entries: &[(usize, usize, GR)]) -> Matrix {
    let mut m = Matrix::zeros(size, size);
    for (i, j, c) in entries {
        m[(j - 1, i - 1)] += c;
    }
    m
}

fn flat(m: &Matrix) -> SparseVec {
    SparseVec::from_dense(&m.entries, 0)
}

/// Builds the algebra spanned by labeled matrices under the commutator and
/// returns it with the matrix real structure `sigma` on the labeled basis.
fn algebra_from_matrices(
    elements: Vec<MatrixElement>,
    n: usize,
    invariant_form: &Matrix,
    sigma: impl Fn(&Matrix) -> Matrix,
) -> Result<(BigradedAlgebra, Matrix), IdentifyError> {
    for el in &elements {
        let t = &(&el.m.transpose() * invariant_form) + &(invariant_form * &el.m);
        if !t.is_zero() {
            return Err(IdentifyError::Construction(format!("{} does not preserve the invariant form", el.label)));
        }
    }
    let mut a = BigradedAlgebra::new();
    let items = elements.into_iter().map(|d| (d.weight, d.label, d.m)).collect();
    let groups = group_by_weight(items);
    let mut mats = Vec::new();
    for (w, elts) in &groups {
        a.add_component(*w, elts.iter().map(|(l, _)| l.clone()).collect())?;
        mats.extend(elts.iter().map(|(_, m)| m.clone()));
    }
    let dec = SpanDecoder::new(mats.iter().map(flat).collect())
        .map_err(|_| IdentifyError::Construction("labeled matrices are linearly dependent".into()))?;
    let coords = |m: &Matrix, what: &str| -> Result<SparseVec, IdentifyError> {
        dec.decode(&flat(m))
            .map(|c| SparseVec::from_dense(&c, 0))
            .ok_or_else(|| IdentifyError::Construction(format!("{what} leaves the labeled span")))
    };
    let d = mats.len();
    for x in 0..d {
        for y in x + 1..d {
            let c = &(&mats[x] * &mats[y]) - &(&mats[y] * &mats[x]);
            let v = coords(&c, &format!("[{}, {}]", a.label(x), a.label(y)))?;
            a.set_bracket(x, y, v)?;
        }
    }
    set_negative_structure(&mut a, None, n)?;
    a.refresh_decoders()?;
    derive_conj(&mut a)?;
    let mut s = Matrix::zeros(d, d);
    for (x, m) in mats.iter().enumerate() {
        let v = coords(&sigma(m), &format!("real structure of {}", a.label(x)))?;
        for (&i, c) in v.iter() {
            s[(i, x)] = c.clone();
        }
    }
    Ok((a, s))
}

/// Killing inertia on the fixed points of the anti-linear map v ↦ S conj(v).
pub fn real_killing_inertia(alg: &BigradedAlgebra, s: &Matrix) -> Result<Inertia, IdentifyError> {
    let d = alg.dim();
    let r = &realify_antilinear(s) - &Matrix::identity(2 * d);
    let fixed: Vec<Vec<GR>> = nullspace(&r).iter().map(|v| complexify_vec(v)).collect();
    if fixed.len() != d {
        return Err(IdentifyError::Construction("real structure is not an involution".into()));
    }
    let k = alg.killing_form();
    let kb: Vec<Vec<GR>> = fixed.iter().map(|b| k.mul_vec(b)).collect();
    let mut gram = Matrix::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            let v = crate::linalg::matrix::dot(&fixed[i], &kb[j]);
            if !v.is_real() {
                return Err(IdentifyError::Construction("Killing form is not real on the real form".into()));
            }
            gram[(i, j)] = v;
        }
    }
    hermitian_inertia(&gram).map_err(|e| IdentifyError::Construction(e.to_string()))
}

/// Whole-space matrix of the algebra's own involution.
pub fn involution_as_matrix(alg: &BigradedAlgebra) -> Matrix {
    let d = alg.dim();
    let mut s = Matrix::zeros(d, d);
    for x in 0..d {
        for (&i, c) in alg.conj_basis(x).iter() {
            s[(i, x)] = c.clone();
        }
    }
    s
}

// ---------------------------------------------------------------------------
// so(p+2, q+2)

fn eps_of(p: usize, q: usize) -> Vec<i64> {
    (0..p + q).map(|a| if a < p { 1 } else { -1 }).collect()
}

fn skew_label(a: usize, b: usize) -> String {
    format!("e{},{}", a + 1, b + 1)
}

/// e_{ab} with e_{ba} = −e_{ab}, e_{aa} = 0.
fn skew(prefix: &str, a: usize, b: usize) -> Option<(String, i64)> {
    use std::cmp::Ordering::*;
    match a.cmp(&b) {
        Less => Some((format!("{prefix}{},{}", a + 1, b + 1), 1)),
        Greater => Some((format!("{prefix}{},{}", b + 1, a + 1), -1)),
        Equal => None,
    }
}

fn type_i_matrices(p: usize, q: usize) -> Vec<MatrixElement> {
    let n = p + q;
    let size = n + 4;
    let eps = eps_of(p, q);
    let mut out = Vec::new();
    let mut add = |f: i32, s: i32, label: String, ent: Vec<(usize, usize, GR)>| {
        out.push(MatrixElement { weight: BiWeight::new(f, s), label, m: em(size, &ent) });
    };
    add(-2, 0, "e0".into(), vec![(1, 4, g(1)), (2, 3, g(-1))]);
    for a in 0..n {
        add(-1, -1, eb(a), vec![(5 + a, 4, g(eps[a])), (2, 5 + a, g(-1))]);
    }
    for a in 0..n {
        add(-1, 1, e(a), vec![(5 + a, 3, g(eps[a])), (1, 5 + a, g(-1))]);
    }
    add(0, -2, eb(n), vec![(3, 4, g(1)), (2, 1, g(-1))]);
    add(0, 0, "E".into(), vec![(1, 1, g(-1)), (2, 2, g(1)), (3, 3, g(1)), (4, 4, g(-1))]);
    add(0, 0, "Ehat".into(), vec![(1, 1, g(-1)), (2, 2, g(-1)), (3, 3, g(1)), (4, 4, g(1))]);
    for a in 0..n {
        for b in a + 1..n {
            add(0, 0, skew_label(a, b), vec![(5 + b, 5 + a, g(eps[a])), (5 + a, 5 + b, g(-eps[b]))]);
        }
    }
    add(0, 2, e(n), vec![(4, 3, g(1)), (1, 2, g(-1))]);
    for a in 0..n {
        add(1, -1, format!("Ebar{}", a + 1), vec![(5 + a, 1, g(2 * eps[a])), (3, 5 + a, g(-2))]);
    }
    for a in 0..n {
        add(1, 1, format!("E{}", a + 1), vec![(5 + a, 2, g(2 * eps[a])), (4, 5 + a, g(-2))]);
    }
    add(2, 0, "E0".into(), vec![(3, 2, g(2)), (4, 1, g(-2))]);
    out
}

fn type_i_form(p: usize, q: usize) -> Matrix {
    let n = p + q;
    let eps = eps_of(p, q);
    let mut ent = vec![(1, 3, g(1)), (3, 1, g(1)), (2, 4, g(1)), (4, 2, g(1))];
    for a in 0..n {
        ent.push((5 + a, 5 + a, g(eps[a])));
    }
    em(n + 4, &ent)
}

/// Derivation formulas for the Type I prolongation.
fn type_i_derivations(p: usize, q: usize) -> Vec<Derivation> {
    let n = p + q;
    let eps = eps_of(p, q);
    let mut out = Vec::new();
    out.push(der(0, -2, eb(n), (0..n).map(|a| (e(a), vec![(eb(a), g(1))])).collect()));
    let mut ee = Vec::new();
    let mut eh = vec![("e0".to_string(), vec![("e0".to_string(), g(2))])];
    for a in 0..n {
        ee.push((e(a), vec![(e(a), g(1))]));
        ee.push((eb(a), vec![(eb(a), g(-1))]));
        eh.push((e(a), vec![(e(a), g(1))]));
        eh.push((eb(a), vec![(eb(a), g(1))]));
    }
    out.push(der(0, 0, "E", ee));
    out.push(der(0, 0, "Ehat", eh));
    for a in 0..n {
        for b in a + 1..n {
            let act = vec![
                (e(b), vec![(e(a), g(eps[a]))]),
                (e(a), vec![(e(b), g(-eps[b]))]),
                (eb(b), vec![(eb(a), g(eps[a]))]),
                (eb(a), vec![(eb(b), g(-eps[b]))]),
            ];
            out.push(der(0, 0, skew_label(a, b), act));
        }
    }
    out.push(der(0, 2, e(n), (0..n).map(|a| (eb(a), vec![(e(a), g(1))])).collect()));
    for a in 0..n {
        let mut act = vec![("e0".to_string(), vec![(eb(a), g(-2))])];
        push(&mut act, eb(a), eb(n), g(2 * eps[a]));
        for b in 0..n {
            if a == b {
                push(&mut act, e(b), "Ehat".into(), g(eps[a]));
                push(&mut act, e(b), "E".into(), g(eps[a]));
            }
            if let Some((l, s)) = skew("e", a, b) {
                push(&mut act, e(b), l, g(-2 * eps[a] * eps[b] * s));
            }
        }
        out.push(der(1, -1, format!("Ebar{}", a + 1), act));
    }
    for a in 0..n {
        let mut act = vec![("e0".to_string(), vec![(e(a), g(2))])];
        push(&mut act, e(a), e(n), g(2 * eps[a]));
        for b in 0..n {
            if a == b {
                push(&mut act, eb(b), "Ehat".into(), g(eps[a]));
                push(&mut act, eb(b), "E".into(), g(-eps[a]));
            }
            if let Some((l, s)) = skew("e", a, b) {
                push(&mut act, eb(b), l, g(-2 * eps[a] * eps[b] * s));
            }
        }
        out.push(der(1, 1, format!("E{}", a + 1), act));
    }
    out.push(der(2, 0, "E0", top_derivation(n)));
    out
}

/// E₀ = 2Ê⊗e⁰ + Σ (E_α⊗e^α − Ē_α⊗ē^α).
fn top_derivation(n: usize) -> Vec<(String, Terms)> {
    let mut act = vec![("e0".to_string(), vec![("Ehat".to_string(), g(2))])];
    for a in 0..n {
        act.push((e(a), vec![(format!("E{}", a + 1), g(1))]));
        act.push((eb(a), vec![(format!("Ebar{}", a + 1), g(-1))]));
    }
    act
}

// ---------------------------------------------------------------------------
// so*(2p+4)

fn type_ii_matrices(p: usize) -> Vec<MatrixElement> {
    let n = 2 * p;
    let size = n + 4;
    let (p1, p2, n3, n4) = (p + 1, p + 2, n + 3, n + 4);
    let mut out = Vec::new();
    let mut add = |f: i32, s: i32, label: String, ent: Vec<(usize, usize, GR)>| {
        out.push(MatrixElement { weight: BiWeight::new(f, s), label, m: em(size, &ent) });
    };
    add(-2, 0, "e0".into(), vec![(p2, n3, gi(1)), (p1, n4, gi(-1))]);
    for a in 1..=p {
        add(-1, -1, eb(a - 1), vec![(p2 + a, n4, g(1)), (p2, a, g(-1))]);
    }
    for a in 1..=p {
        add(-1, -1, eb(p + a - 1), vec![(p2, p2 + a, gi(1)), (a, n4, gi(-1))]);
    }
    for a in 1..=p {
        add(-1, 1, e(a - 1), vec![(p1, p2 + a, gi(1)), (a, n3, gi(-1))]);
    }
    for a in 1..=p {
        add(-1, 1, e(p + a - 1), vec![(p1, a, g(1)), (p2 + a, n3, g(-1))]);
    }
    add(0, -2, eb(n), vec![(n3, n4, g(1)), (p2, p1, g(-1))]);
    add(0, 0, "E".into(), vec![(p1, p1, g(-1)), (p2, p2, g(1)), (n3, n3, g(1)), (n4, n4, g(-1))]);
    add(0, 0, "Ehat".into(), vec![(p1, p1, g(-1)), (p2, p2, g(-1)), (n3, n3, g(1)), (n4, n4, g(1))]);
    for a in 1..=p {
        for b in 1..=p {
            add(0, 0, format!("E{a},{b}"), vec![(a, b, g(-1)), (p2 + b, p2 + a, g(1))]);
        }
    }
    for a in 1..=p {
        for b in a + 1..=p {
            add(0, 0, format!("e{a},{b}"), vec![(b, p2 + a, gi(1)), (a, p2 + b, gi(-1))]);
        }
    }
    for a in 1..=p {
        for b in a + 1..=p {
            add(0, 0, format!("ebar{a},{b}"), vec![(p2 + b, a, gi(1)), (p2 + a, b, gi(-1))]);
        }
    }
    add(0, 2, e(n), vec![(p1, p2, g(1)), (n4, n3, g(-1))]);
    for a in 1..=p {
        add(1, -1, format!("Ebar{a}"), vec![(p2 + a, p1, gi(2)), (n3, a, gi(-2))]);
    }
    for a in 1..=p {
        add(1, -1, format!("Ebar{}", p + a), vec![(a, p1, g(2)), (n3, p2 + a, g(-2))]);
    }
    for a in 1..=p {
        add(1, 1, format!("E{a}"), vec![(a, p2, g(2)), (n4, p2 + a, g(-2))]);
    }
    for a in 1..=p {
        add(1, 1, format!("E{}", p + a), vec![(n4, a, gi(2)), (p2 + a, p2, gi(-2))]);
    }
    add(2, 0, "E0".into(), vec![(n3, p2, gi(2)), (n4, p1, gi(-2))]);
    out
}

fn type_ii_form(p: usize) -> Matrix {
    let m = p + 2;
    let mut ent = Vec::new();
    for i in 1..=m {
        ent.push((i, m + i, g(1)));
        ent.push((m + i, i, g(1)));
    }
    em(2 * m, &ent)
}

fn type_ii_derivations(p: usize) -> Vec<Derivation> {
    let n = 2 * p;
    // 0-based: a ↦ e(a), p + a ↦ e(p + a)
    let ebig = |a: usize, b: usize| format!("E{},{}", a + 1, b + 1);
    let mut out = Vec::new();
    let mut vbar = Vec::new();
    let mut v = Vec::new();
    for a in 0..p {
        vbar.push((e(a), vec![(eb(p + a), g(1))]));
        vbar.push((e(p + a), vec![(eb(a), g(-1))]));
        v.push((eb(a), vec![(e(p + a), g(1))]));
        v.push((eb(p + a), vec![(e(a), g(-1))]));
    }
    out.push(der(0, -2, eb(n), vbar));
    let mut ee = Vec::new();
    let mut eh = vec![("e0".to_string(), vec![("e0".to_string(), g(2))])];
    for a in 0..n {
        ee.push((e(a), vec![(e(a), g(1))]));
        ee.push((eb(a), vec![(eb(a), g(-1))]));
        eh.push((e(a), vec![(e(a), g(1))]));
        eh.push((eb(a), vec![(eb(a), g(1))]));
    }
    out.push(der(0, 0, "E", ee));
    out.push(der(0, 0, "Ehat", eh));
    for a in 0..p {
        for b in 0..p {
            let mut act = Vec::new();
            push(&mut act, e(b), e(a), g(1));
            push(&mut act, e(p + a), e(p + b), g(-1));
            push(&mut act, eb(a), eb(b), g(-1));
            push(&mut act, eb(p + b), eb(p + a), g(1));
            out.push(der(0, 0, ebig(a, b), act));
        }
    }
    for a in 0..p {
        for b in a + 1..p {
            let act = vec![
                (e(p + b), vec![(e(a), g(1))]),
                (e(p + a), vec![(e(b), g(-1))]),
                (eb(a), vec![(eb(p + b), g(1))]),
                (eb(b), vec![(eb(p + a), g(-1))]),
            ];
            out.push(der(0, 0, format!("e{},{}", a + 1, b + 1), act));
        }
    }
    for a in 0..p {
        for b in a + 1..p {
            let act = vec![
                (eb(p + b), vec![(eb(a), g(1))]),
                (eb(p + a), vec![(eb(b), g(-1))]),
                (e(a), vec![(e(p + b), g(1))]),
                (e(b), vec![(e(p + a), g(-1))]),
            ];
            out.push(der(0, 0, format!("ebar{},{}", a + 1, b + 1), act));
        }
    }
    out.push(der(0, 2, e(n), v));
    let mut bars = Vec::new();
    let mut plain = Vec::new();
    for a in 0..p {
        let mut ea = vec![("e0".to_string(), vec![(e(a), g(2))])];
        push(&mut ea, e(p + a), e(n), g(2));
        push(&mut ea, eb(a), "Ehat".into(), g(1));
        push(&mut ea, eb(a), "E".into(), g(-1));
        let mut epa = vec![("e0".to_string(), vec![(e(p + a), g(2))])];
        push(&mut epa, e(a), e(n), g(2));
        push(&mut epa, eb(p + a), "E".into(), g(1));
        push(&mut epa, eb(p + a), "Ehat".into(), g(-1));
        let mut eba = vec![("e0".to_string(), vec![(eb(a), g(-2))])];
        push(&mut eba, eb(p + a), eb(n), g(2));
        push(&mut eba, e(a), "Ehat".into(), g(1));
        push(&mut eba, e(a), "E".into(), g(1));
        let mut ebpa = vec![("e0".to_string(), vec![(eb(p + a), g(-2))])];
        push(&mut ebpa, eb(a), eb(n), g(2));
        push(&mut ebpa, e(p + a), "Ehat".into(), g(-1));
        push(&mut ebpa, e(p + a), "E".into(), g(-1));
        for b in 0..p {
            push(&mut ea, eb(b), ebig(a, b), g(-2));
            push(&mut epa, eb(p + b), ebig(b, a), g(-2));
            push(&mut eba, e(b), ebig(b, a), g(2));
            push(&mut ebpa, e(p + b), ebig(a, b), g(2));
            if let Some((l, s)) = skew("e", a, b) {
                push(&mut ea, eb(p + b), l.clone(), g(2 * s));
                push(&mut ebpa, e(b), l, g(2 * s));
            }
            if let Some((l, s)) = skew("ebar", a, b) {
                push(&mut epa, eb(b), l.clone(), g(2 * s));
                push(&mut eba, e(p + b), l, g(2 * s));
            }
        }
        bars.push((a, eba));
        bars.push((p + a, ebpa));
        plain.push((a, ea));
        plain.push((p + a, epa));
    }
    bars.sort_by_key(|(k, _)| *k);
    plain.sort_by_key(|(k, _)| *k);
    for (k, act) in bars {
        out.push(der(1, -1, format!("Ebar{}", k + 1), act));
    }
    for (k, act) in plain {
        out.push(der(1, 1, format!("E{}", k + 1), act));
    }
    out.push(der(2, 0, "E0", top_derivation(n)));
    out
}

// ---------------------------------------------------------------------------
// nilpotent models with n₁ = 0

fn ehat_action(n: usize) -> Vec<(String, Terms)> {
    let mut eh = vec![("e0".to_string(), vec![("e0".to_string(), g(2))])];
    for a in 0..n {
        eh.push((e(a), vec![(e(a), g(1))]));
        eh.push((eb(a), vec![(eb(a), g(1))]));
    }
    eh
}

/// x ⊗ y* entries of a derivation, as (on, value, coefficient).
fn tensor(entries: &[(String, String, i64)]) -> Vec<(String, Terms)> {
    let mut act = Vec::new();
    for (on, val, c) in entries {
        push(&mut act, on.clone(), val.clone(), g(*c));
    }
    act
}

fn antidiagonal(n: usize) -> Matrix {
    let mut m = Matrix::zeros(n, n);
    for i in 0..n {
        m[(i, n - 1 - i)] = g(1);
    }
    m
}

/// The basic (A₃) symbol: single block, no (A₁) summands.
fn basic_a3_derivations() -> Vec<Derivation> {
    let s = |x: &str| x.to_string();
    let (e1, e2, e3, b1, b2, b3) = (e(0), e(1), e(2), eb(0), eb(1), eb(2));
    vec![
        der(0, -2, "vbar", tensor(&[(e2.clone(), b1.clone(), 1), (e3.clone(), b2.clone(), 1)])),
        der(0, 0, "Ehat", ehat_action(3)),
        der(0, 0, "E13", tensor(&[(e1.clone(), e1.clone(), 1), (b3.clone(), b3.clone(), -1)])),
        der(0, 0, "Ebar13", tensor(&[(b1.clone(), b1.clone(), 1), (e3.clone(), e3.clone(), -1)])),
        der(0, 0, "e13", tensor(&[(e3.clone(), e1.clone(), 1), (b3.clone(), b1.clone(), -1)])),
        der(0, 0, "e22", tensor(&[(e2.clone(), e2.clone(), 1), (b2.clone(), b2.clone(), -1)])),
        der(0, 2, "v", tensor(&[(b2.clone(), e1.clone(), 1), (b3.clone(), e2.clone(), 1)])),
        der(
            1,
            -1,
            "Ebar1",
            tensor(&[
                (s("e0"), b1.clone(), -2),
                (b2.clone(), s("vbar"), 2),
                (e1.clone(), s("e13"), 2),
                (e3.clone(), s("Ehat"), 1),
                (e3.clone(), s("e22"), -1),
                (e3.clone(), s("E13"), 1),
                (e3.clone(), s("Ebar13"), -3),
            ]),
        ),
        der(
            1,
            1,
            "E1",
            tensor(&[
                (s("e0"), e1.clone(), 2),
                (e2.clone(), s("v"), 2),
                (b1.clone(), s("e13"), -2),
                (b3.clone(), s("Ehat"), 1),
                (b3.clone(), s("e22"), 1),
                (b3.clone(), s("Ebar13"), 1),
                (b3.clone(), s("E13"), -3),
            ]),
        ),
    ]
}

/// One (A₂) block with ε = +1.
fn single_a2_derivations() -> Result<Vec<Derivation>, IdentifyError> {
    let s = |x: &str| x.to_string();
    let (e1, e2, b1, b2) = (e(0), e(1), eb(0), eb(1));
    let mut out = vec![
        der(0, -2, "vbar", tensor(&[(e2.clone(), b1.clone(), 1)])),
        der(0, 0, "Ehat", ehat_action(2)),
        der(0, 0, "E", tensor(&[(e1.clone(), e1.clone(), 1), (b2.clone(), b2.clone(), -1)])),
        der(0, 0, "Ebar", tensor(&[(b1.clone(), b1.clone(), 1), (e2.clone(), e2.clone(), -1)])),
        der(0, 0, "e12", tensor(&[(e2.clone(), e1.clone(), 1), (b2.clone(), b1.clone(), -1)])),
        der(0, 2, "v", tensor(&[(b2.clone(), e1.clone(), 1)])),
    ];
    let e11 = tensor(&[
        (s("e0"), e1.clone(), 2),
        (e1.clone(), s("v"), 2),
        (b1.clone(), s("e12"), -2),
        (b2.clone(), s("Ehat"), 1),
        (b2.clone(), s("E"), -1),
        (b2.clone(), s("Ebar"), 1),
    ]);
    let e12 = tensor(&[(e2.clone(), s("v"), 1), (b2.clone(), s("e12"), 1)]);
    let mut stage_elems = Vec::new();
    for d in &out {
        stage_elems.push(der(d.weight.first, d.weight.second, d.label.clone(), d.action.clone()));
    }
    let stage = algebra_from_derivations(&antidiagonal(2), stage_elems)?;
    let c11 = conjugate_action(&stage, &e11)?;
    let c12 = conjugate_action(&stage, &e12)?;
    out.push(der(1, -1, "Ebar^1_1", c11));
    out.push(der(1, -1, "Ebar^1_2", c12));
    out.push(der(1, 1, "E^1_1", e11));
    out.push(der(1, 1, "E^1_2", e12));
    out.push(der(2, 0, "E0", tensor(&[(e2.clone(), s("E^1_2"), 1), (b2.clone(), s("Ebar^1_2"), -1)])));
    Ok(out)
}

// ---------------------------------------------------------------------------
// public construction

/// Golden model with its matrix realization when one exists.
pub fn build_golden(name: &GoldenName) -> Result<GoldenModel, IdentifyError> {
    name.check()?;
    let (algebra, s) = match *name {
        GoldenName::So { p, q } => {
            let n = p + q;
            let (a, s) = algebra_from_matrices(type_i_matrices(p, q), n, &type_i_form(p, q), |m| m.conj())?;
            (a, Some(s))
        }
        GoldenName::SoStar { p } => {
            let m = p + 2;
            // quaternionic structure X ↦ ω X̄ ω⁻¹, ω = [[0, 1], [−1, 0]]
            let mut omega = Matrix::zeros(2 * m, 2 * m);
            for i in 0..m {
                omega[(i, m + i)] = g(1);
                omega[(m + i, i)] = g(-1);
            }
            let omega_inv = omega.scale(&g(-1));
            let (a, s) = algebra_from_matrices(type_ii_matrices(p), 2 * p, &type_ii_form(p), |x| {
                &(&omega * &x.conj()) * &omega_inv
            })?;
            (a, Some(s))
        }
        GoldenName::Nilpotent { .. } => (derivation_model(name)?, None),
    };
    let inertia = match &s {
        Some(s) => real_killing_inertia(&algebra, s)?,
        None => real_killing_inertia(&algebra, &involution_as_matrix(&algebra))?,
    };
    let fingerprint = Fingerprint::from_inertia(&algebra, inertia);
    Ok(GoldenModel { name: *name, algebra, fingerprint, matrix_real_structure: s })
}

pub fn build_golden_str(name: &str) -> Result<GoldenModel, IdentifyError> {
    build_golden(&name.parse()?)
}

/// The same labeled basis built from derivation formulas on g₋.
pub fn derivation_model(name: &GoldenName) -> Result<BigradedAlgebra, IdentifyError> {
    name.check()?;
    match *name {
        GoldenName::So { p, q } => {
            let h = Matrix::diag_ints(&eps_of(p, q));
            algebra_from_derivations(&h, type_i_derivations(p, q))
        }
        GoldenName::SoStar { p } => {
            let h = Matrix::diag_ints(&eps_of(p, p));
            algebra_from_derivations(&h, type_ii_derivations(p))
        }
        GoldenName::Nilpotent { n3: 1, .. } => algebra_from_derivations(&antidiagonal(3), basic_a3_derivations()),
        GoldenName::Nilpotent { .. } => algebra_from_derivations(&antidiagonal(2), single_a2_derivations()?),
    }
}

// ---------------------------------------------------------------------------
// matching

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Mismatch {
    Killing { computed: SignaturePair, golden: SignaturePair },
    Dims { weight: BiWeight, computed: usize, golden: usize },
    MissingLabel(String),
    NotInComponent(String),
    NotSpanning(BiWeight),
    Bracket { a: String, b: String, golden: String, computed: String },
    Involution { label: String, golden: String, computed: String },
}

impl fmt::Display for Mismatch {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Mismatch::Killing { computed, golden } => write!(
                f,
                "Killing signature ({},{}) differs from golden ({},{})",
                computed.pos, computed.neg, golden.pos, golden.neg
            ),
            Mismatch::Dims { weight, computed, golden } => {
                write!(f, "dimension of {weight} is {computed}, golden has {golden}")
            }
            Mismatch::MissingLabel(l) => write!(f, "computed algebra has no basis vector {l}"),
            Mismatch::NotInComponent(l) => write!(f, "golden {l} is not in the computed component"),
            Mismatch::NotSpanning(w) => write!(f, "golden basis does not span computed component {w}"),
            Mismatch::Bracket { a, b, golden, computed } => {
                write!(f, "bracket [{a}, {b}]: golden {golden}, computed {computed}")
            }
            Mismatch::Involution { label, golden, computed } => {
                write!(f, "conjugate of {label}: golden {golden}, computed {computed}")
            }
        }
    }
}

#[derive(Clone, Debug, Error, PartialEq, Eq)]
#[error("mismatch against {golden}: {reason}")]
pub struct MismatchReport {
    pub golden: String,
    pub reason: Mismatch,
}

#[derive(Clone, Debug)]
pub struct MatchReport {
    pub golden: String,
    /// image of each golden basis vector in computed coordinates
    pub images: Vec<(String, SparseVec)>,
    pub constants_checked: usize,
}

pub fn format_vec(alg: &BigradedAlgebra, v: &SparseVec) -> String {
    if v.is_zero() {
        return "0".into();
    }
    let parts: Vec<String> = v.iter().map(|(&i, c)| format!("({c})*{}", alg.label(i))).collect();
    parts.join(" + ")
}

/// Labeled isomorphism check: golden negative labels are identified with
/// the computed ones, every other golden vector is located through its
/// action on g₋, then all brackets and conjugates are compared.
pub fn match_algebras(
    computed: &BigradedAlgebra,
    golden: &BigradedAlgebra,
    golden_name: &str,
) -> Result<MatchReport, MismatchReport> {
    let fail = |reason| MismatchReport { golden: golden_name.to_string(), reason };
    let (cd, gd) = (computed.dims(), golden.dims());
    for w in cd.keys().chain(gd.keys()) {
        let (a, b) = (cd.get(w).copied().unwrap_or(0), gd.get(w).copied().unwrap_or(0));
        if a != b {
            return Err(fail(Mismatch::Dims { weight: *w, computed: a, golden: b }));
        }
    }
    let nd = golden.negative_dim();
    let mut phi: Vec<SparseVec> = Vec::with_capacity(golden.dim());
    let mut to_golden = vec![0usize; nd];
    for x in 0..nd {
        let l = golden.label(x);
        let c = computed
            .index_of_label(l)
            .filter(|&c| c < nd && computed.weight_of(c) == golden.weight_of(x))
            .ok_or_else(|| fail(Mismatch::MissingLabel(l.to_string())))?;
        to_golden[c] = x;
        phi.push(SparseVec::unit(c));
    }
    let image = |phi: &[SparseVec], v: &SparseVec| {
        let mut out = SparseVec::new();
        for (&i, c) in v.iter() {
            out.add_scaled(&phi[i], c);
        }
        out
    };
    for x in nd..golden.dim() {
        let values = (0..nd).map(|c| image(&phi, &golden.bracket_basis(x, to_golden[c]))).collect();
        let act = HomAction { bidegree: golden.weight_of(x), values };
        let v = decode_action(computed, &act).map_err(|_| fail(Mismatch::NotInComponent(golden.label(x).to_string())))?;
        phi.push(v);
    }
    for comp in golden.components() {
        let mut s = SparseSolver::new(computed.dim());
        for x in comp.range() {
            s.add_row(phi[x].clone());
        }
        if s.rank() != comp.dim() {
            return Err(fail(Mismatch::NotSpanning(comp.weight)));
        }
    }
    let mut checked = 0;
    for x in 0..golden.dim() {
        for y in x + 1..golden.dim() {
            let lhs = image(&phi, &golden.bracket_basis(x, y));
            let rhs = computed.bracket_sparse(&phi[x], &phi[y]);
            checked += 1;
            if lhs != rhs {
                return Err(fail(Mismatch::Bracket {
                    a: golden.label(x).to_string(),
                    b: golden.label(y).to_string(),
                    golden: format_vec(computed, &lhs),
                    computed: format_vec(computed, &rhs),
                }));
            }
        }
    }
    for x in 0..golden.dim() {
        let lhs = image(&phi, &golden.conj_basis(x));
        let rhs = computed.conj_sparse(&phi[x]);
        if lhs != rhs {
            return Err(fail(Mismatch::Involution {
                label: golden.label(x).to_string(),
                golden: format_vec(computed, &lhs),
                computed: format_vec(computed, &rhs),
            }));
        }
    }
    let images = (0..golden.dim()).map(|x| (golden.label(x).to_string(), phi[x].clone())).collect();
    Ok(MatchReport { golden: golden_name.to_string(), images, constants_checked: checked })
}

pub fn match_structure(computed: &ProlongationResult, golden: &GoldenModel) -> Result<MatchReport, MismatchReport> {
    let k = computed.killing.inertia;
    let ks = SignaturePair::new(k.pos, k.neg);
    if ks != golden.fingerprint.killing_signature {
        return Err(MismatchReport {
            golden: golden.name.to_string(),
            reason: Mismatch::Killing { computed: ks, golden: golden.fingerprint.killing_signature },
        });
    }
    match_algebras(&computed.algebra, &golden.algebra, &golden.name.to_string())
}

/// Structure constants and conjugation agree label by label.
pub fn compare_labeled(a: &BigradedAlgebra, b: &BigradedAlgebra, name: &str) -> Result<usize, MismatchReport> {
    let fail = |reason| MismatchReport { golden: name.to_string(), reason };
    for (ca, cb) in a.components().iter().zip(b.components()) {
        if ca.weight != cb.weight || ca.labels != cb.labels {
            return Err(fail(Mismatch::Dims { weight: ca.weight, computed: ca.dim(), golden: cb.dim() }));
        }
    }
    if a.components().len() != b.components().len() {
        return Err(fail(Mismatch::NotSpanning(BiWeight::new(0, 0))));
    }
    let mut checked = 0;
    for x in 0..a.dim() {
        for y in x + 1..a.dim() {
            let (u, v) = (a.bracket_basis(x, y), b.bracket_basis(x, y));
            checked += 1;
            if u != v {
                return Err(fail(Mismatch::Bracket {
                    a: a.label(x).to_string(),
                    b: a.label(y).to_string(),
                    golden: format_vec(b, &v),
                    computed: format_vec(a, &u),
                }));
            }
        }
        if a.conj_basis(x) != b.conj_basis(x) {
            return Err(fail(Mismatch::Involution {
                label: a.label(x).to_string(),
                golden: format_vec(b, &b.conj_basis(x)),
                computed: format_vec(a, &a.conj_basis(x)),
            }));
        }
    }
    Ok(checked)
}

// ---------------------------------------------------------------------------
// identification

/// Golden models with dim g₋₁,₁ = n: so(p+2,q+2) for p ≥ q and so*(n+4).
fn table_models(n: usize) -> Vec<GoldenName> {
    let mut out: Vec<GoldenName> = (0..=n / 2).rev().map(|q| GoldenName::So { p: n - q, q }).collect();
    out.reverse();
    if n.is_multiple_of(2) {
        out.push(GoldenName::SoStar { p: n / 2 });
    }
    out
}

type Table = Arc<Vec<GoldenModel>>;

/// Golden table for one n, built on first use and shared afterwards.
pub fn golden_table(n: usize) -> Result<Table, IdentifyError> {
    static TABLES: OnceLock<Mutex<BTreeMap<usize, Table>>> = OnceLock::new();
    let tables = TABLES.get_or_init(|| Mutex::new(BTreeMap::new()));
    if let Some(t) = tables.lock().expect("golden table lock").get(&n) {
        return Ok(t.clone());
    }
    let models = table_models(n).iter().map(build_golden).collect::<Result<Vec<_>, _>>()?;
    let t = Arc::new(models);
    Ok(tables.lock().expect("golden table lock").entry(n).or_insert(t).clone())
}

/// Dimensions (g₀,₀, g₁, g₂) predicted for a nilpotent profile, when the
/// profile has a nontrivial prolongation.
pub fn nilpotent_prediction(n1: usize, n2: usize, n3: usize) -> Option<(usize, usize, usize)> {
    match (n2, n3) {
        (0, 1) => Some((5 + 2 * n1 + n1 * n1, 2, 0)),
        (n2, 0) if n2 >= 1 => Some((3 + n2 + 4 * (n2 * (n2 - 1) / 2) + 2 * n1 * n2 + n1 * n1, 4 * n2 + 2 * n1, 1)),
        _ => None,
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Identification {
    pub name: String,
    pub fingerprint: Fingerprint,
    pub matched_golden: bool,
}

impl Identification {
    pub fn to_json(&self) -> Value {
        json!({
            "name": self.name,
            "fingerprint": self.fingerprint.to_json(),
            "matched_golden": self.matched_golden,
        })
    }
}

pub const UNRECOGNIZED: &str = "unrecognized";
pub const G0_ONLY: &str = "g0-only";

pub fn identify_real_form(res: &ProlongationResult) -> Identification {
    let fingerprint = Fingerprint::of_result(res);
    let done = |name: String, matched: bool| Identification { name, fingerprint: fingerprint.clone(), matched_golden: matched };
    let n = res.algebra.component_dim(BiWeight::new(-1, 1));
    if res.max_degree_reached || n == 0 {
        return done(UNRECOGNIZED.into(), false);
    }
    if res.first_weight_dim(1) == 0 {
        return done(G0_ONLY.into(), false);
    }
    if fingerprint.semisimple {
        let Ok(table) = golden_table(n) else {
            return done(UNRECOGNIZED.into(), false);
        };
        let candidates: Vec<&GoldenModel> = table.iter().filter(|m| m.fingerprint.key() == fingerprint.key()).collect();
        if let Some(m) = candidates.iter().find(|m| match_structure(res, m).is_ok()) {
            return done(m.name.to_string(), true);
        }
        return match candidates.first() {
            Some(m) => done(m.name.to_string(), false),
            None => done(UNRECOGNIZED.into(), false),
        };
    }
    let g00 = res.algebra.component_dim(BiWeight::new(0, 0));
    let observed = (g00, res.first_weight_dim(1), res.first_weight_dim(2));
    if res.first_weight_dim(3) != 0 {
        return done(UNRECOGNIZED.into(), false);
    }
    let mut profiles = Vec::new();
    if n >= 3 {
        profiles.push((n - 3, 0, 1));
    }
    for n2 in 1..=n / 2 {
        profiles.push((n - 2 * n2, n2, 0));
    }
    for (n1, n2, n3) in profiles {
        if nilpotent_prediction(n1, n2, n3) == Some(observed) {
            let name = GoldenName::Nilpotent { n1, n2, n3 };
            let matched = build_golden(&name).is_ok_and(|m| match_structure(res, &m).is_ok());
            return done(name.to_string(), matched);
        }
    }
    done(UNRECOGNIZED.into(), false)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classify::{emit_normal_form_matrices, Block, Family};
    use crate::prolong::assemble;
    use crate::symbol::build_symbol;

    fn run(f: &Family) -> ProlongationResult {
        assemble(&build_symbol(&emit_normal_form_matrices(f).unwrap()).unwrap()).unwrap()
    }

    fn sig(m: &GoldenModel) -> (usize, usize) {
        (m.fingerprint.killing_signature.pos, m.fingerprint.killing_signature.neg)
    }

    #[test]
    fn names_parse_and_print() {
        for s in ["so(3,2)", "so(4,2)", "so*(6)", "nilpotent(0,0,1)"] {
            assert_eq!(s.parse::<GoldenName>().unwrap().to_string(), s);
        }
        assert_eq!("so_star(8)".parse::<GoldenName>().unwrap(), GoldenName::SoStar { p: 2 });
        for s in ["so(2,2)", "so*(7)", "so*(4)", "so(1,5)", "su(2,2)", "so(3)", "nilpotent(1,2)"] {
            assert!(matches!(s.parse::<GoldenName>(), Err(IdentifyError::MalformedName(_))), "{s}");
        }
        assert!(matches!("nilpotent(3,0,1)".parse::<GoldenName>(), Err(IdentifyError::NoGoldenModel(_))));
    }

    #[test]
    fn small_golden_models() {
        let m = build_golden_str("so(3,2)").unwrap();
        assert_eq!(m.algebra.dim(), 10);
        assert!(m.algebra.jacobi_check().is_empty());
        assert!(m.algebra.involution_check().is_empty());
        assert_eq!(sig(&m), (6, 4));
        let s = build_golden_str("so*(6)").unwrap();
        assert_eq!(s.algebra.dim(), 15);
        assert!(s.algebra.jacobi_check().is_empty());
        assert_eq!(sig(&s), (6, 9));
        let nil = build_golden_str("nilpotent(0,0,1)").unwrap();
        assert_eq!(nil.algebra.dim(), 1 + 6 + 2 + 5 + 2);
        assert!(nil.algebra.jacobi_check().is_empty());
        assert!(nil.algebra.involution_check().is_empty());
        assert!(!nil.fingerprint.semisimple);
    }

    #[test]
    fn dim_fifteen_forms_are_separated() {
        let sigs: Vec<(usize, usize)> =
            ["so(4,2)", "so(3,3)", "so*(6)"].iter().map(|s| sig(&build_golden_str(s).unwrap())).collect();
        assert_eq!(sigs, vec![(8, 7), (9, 6), (6, 9)]);
    }

    #[test]
    fn labeled_real_form_matches_matrix_real_form() {
        for s in ["so(3,2)", "so(4,2)", "so(3,3)", "so*(6)", "so*(8)"] {
            let m = build_golden_str(s).unwrap();
            let own = real_killing_inertia(&m.algebra, &involution_as_matrix(&m.algebra)).unwrap();
            assert_eq!(SignaturePair::new(own.pos, own.neg), m.fingerprint.killing_signature, "{s}");
        }
    }

    #[test]
    fn matrix_and_derivation_variants_agree() {
        for s in ["so(3,2)", "so(4,2)", "so(3,3)", "so(5,3)", "so*(6)", "so*(8)"] {
            let name: GoldenName = s.parse().unwrap();
            let m = build_golden(&name).unwrap();
            let d = derivation_model(&name).unwrap();
            compare_labeled(&d, &m.algebra, s).unwrap();
        }
    }

    #[test]
    fn type_i_matches_golden() {
        let r = run(&Family::TypeI { p: 1, q: 0 });
        let rep = match_structure(&r, &build_golden_str("so(3,2)").unwrap()).unwrap();
        assert_eq!(rep.constants_checked, 45);
        let r = run(&Family::TypeI { p: 2, q: 0 });
        match_structure(&r, &build_golden_str("so(4,2)").unwrap()).unwrap();
        let err = match_structure(&r, &build_golden_str("so(3,3)").unwrap()).unwrap_err();
        assert!(matches!(err.reason, Mismatch::Killing { .. }), "{err}");
    }

    #[test]
    fn type_ii_matches_golden() {
        let r = run(&Family::TypeII { p: 1 });
        match_structure(&r, &build_golden_str("so*(6)").unwrap()).unwrap();
        let id = identify_real_form(&r);
        assert_eq!(id.name, "so*(6)");
        assert!(id.matched_golden);
    }

    #[test]
    fn nilpotent_goldens_match() {
        let a3 = run(&Family::Nilpotent { blocks: vec![Block { k: 3, eps: 1 }] });
        match_structure(&a3, &build_golden_str("nilpotent(0,0,1)").unwrap()).unwrap();
        let a2 = run(&Family::Nilpotent { blocks: vec![Block { k: 2, eps: 1 }] });
        match_structure(&a2, &build_golden_str("nilpotent(0,1,0)").unwrap()).unwrap();
        assert_eq!(identify_real_form(&a2).name, "nilpotent(0,1,0)");
    }

    #[test]
    fn identification_json() {
        let id = identify_real_form(&run(&Family::TypeI { p: 2, q: 0 }));
        assert_eq!(
            id.to_json().to_string(),
            r#"{"fingerprint":{"dim":15,"killing_signature":[8,7],"semisimple":true},"matched_golden":true,"name":"so(4,2)"}"#
        );
    }

    #[test]
    fn weak_is_g0_only() {
        let r = run(&Family::Weak { p: 2, q: 0, p1: 1, q1: 0, alpha_sign: 1 });
        assert_eq!(identify_real_form(&r).name, G0_ONLY);
    }
}
