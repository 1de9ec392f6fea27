//! Normal forms of regular symbols with one-dimensional kernel.
//!
//! Conventions: ℓ(u,v) = uᵀH conj(v), A(y) = M conj(y). A witness (g, r, c)
//! satisfies r gᵀHḡ = H₀ and c g⁻¹Mḡ = M₀ for the emitted normal form
//! (H₀, M₀). Columns of g are the new basis vectors.

use std::cell::{Cell, RefCell};
use std::fmt;

use num_traits::{One, Signed, Zero};
use serde_json::{json, Value};
use thiserror::Error;

use crate::linalg::scalar::{rat_sqrt, two_squares};
use crate::linalg::{
    complexify_vec, hermitian_inertia, hermitian_pair, hermitian_signature, nullspace, rat_to_string,
    realify_antilinear, rref, Matrix, Rational, SignaturePair, GR,
};
use crate::symbol::{alpha_of, validate_symbol, SymbolError, SymbolInput};

const SEARCH_LIMIT: usize = 20_000;
const NORM_SEARCH: u128 = 1 << 20;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum ClassifyError {
    #[error("NotRegular: {0}")]
    NotRegular(String),
    #[error("KernelRankUnsupported: classification needs kernel rank 1, got {0}")]
    KernelRankUnsupported(usize),
    #[error("MalformedTag: {0}")]
    MalformedTag(String),
    #[error("Impossible: {0}")]
    Impossible(String),
    #[error(transparent)]
    Symbol(#[from] SymbolError),
}

/// One Jordan-type block J_k with form ε P_k.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Block {
    pub k: usize,
    pub eps: i8,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub enum Family {
    TypeI { p: usize, q: usize },
    TypeII { p: usize },
    /// α ≠ 0 with nonzero kernel; (p1,q1) is the signature on the image.
    Weak { p: usize, q: usize, p1: usize, q1: usize, alpha_sign: i8 },
    Nilpotent { blocks: Vec<Block> },
}

fn sign_char(e: i8) -> char {
    if e > 0 {
        '+'
    } else {
        '-'
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::TypeI { p, q } => write!(f, "I({p},{q})"),
            Family::TypeII { p } => write!(f, "II({p})"),
            Family::Weak { p, q, p1, q1, alpha_sign } => {
                write!(f, "weak({p},{q};{p1},{q1};{})", sign_char(*alpha_sign))
            }
            Family::Nilpotent { blocks } => {
                let parts: Vec<String> = blocks.iter().map(|b| format!("{}{}", b.k, sign_char(b.eps))).collect();
                write!(f, "nil[{}]", parts.join(","))
            }
        }
    }
}

/// Blocks sorted by decreasing size, positive signs first.
pub fn canonical_blocks(mut blocks: Vec<Block>) -> Vec<Block> {
    blocks.sort_by(|a, b| b.k.cmp(&a.k).then(b.eps.cmp(&a.eps)));
    blocks
}

impl Family {
    pub fn n(&self) -> usize {
        match self {
            Family::TypeI { p, q } | Family::Weak { p, q, .. } => p + q,
            Family::TypeII { p } => 2 * p,
            Family::Nilpotent { blocks } => blocks.iter().map(|b| b.k).sum(),
        }
    }

    pub fn alpha_sign(&self) -> i8 {
        match self {
            Family::TypeI { .. } => 1,
            Family::TypeII { .. } => -1,
            Family::Weak { alpha_sign, .. } => *alpha_sign,
            Family::Nilpotent { .. } => 0,
        }
    }

    pub fn form(&self) -> &'static str {
        match self {
            Family::TypeI { .. } => "I",
            Family::TypeII { .. } => "II",
            Family::Weak { .. } => "non_nilpotent",
            Family::Nilpotent { .. } => "nilpotent",
        }
    }

    /// (n₁, n₂, n₃) block counts of a nilpotent family.
    pub fn jordan_profile(&self) -> Option<(usize, usize, usize)> {
        let Family::Nilpotent { blocks } = self else { return None };
        let count = |k| blocks.iter().filter(|b| b.k == k).count();
        Some((count(1), count(2), count(3)))
    }

    pub fn to_descriptor(&self) -> Value {
        match self {
            Family::TypeI { p, q } => json!({"form": "I", "p": p, "q": q}),
            Family::TypeII { p } => json!({"form": "II", "p": p}),
            Family::Weak { p, q, p1, q1, alpha_sign } => {
                json!({"form": "non_nilpotent", "p": p, "q": q, "p1": p1, "q1": q1, "alpha_sign": alpha_sign})
            }
            Family::Nilpotent { blocks } => json!({
                "form": "nilpotent",
                "blocks": blocks.iter().map(|b| json!({"k": b.k, "eps": b.eps})).collect::<Vec<_>>(),
            }),
        }
    }

    pub fn from_descriptor(v: &Value) -> Result<Family, ClassifyError> {
        let bad = |s: String| ClassifyError::MalformedTag(s);
        let uint = |key: &str| -> Result<usize, ClassifyError> {
            v.get(key)
                .and_then(Value::as_u64)
                .map(|x| x as usize)
                .ok_or_else(|| bad(format!("missing or invalid \"{key}\"")))
        };
        let sign = |x: &Value, key: &str| -> Result<i8, ClassifyError> {
            match x.get(key).and_then(Value::as_i64) {
                Some(1) => Ok(1),
                Some(-1) => Ok(-1),
                _ => Err(bad(format!("\"{key}\" must be 1 or -1"))),
            }
        };
        let form = v.get("form").and_then(Value::as_str).ok_or_else(|| bad("missing \"form\"".into()))?;
        let fam = match form {
            "I" => Family::TypeI { p: uint("p")?, q: uint("q").or(Ok::<_, ClassifyError>(0))? },
            "II" => Family::TypeII { p: uint("p")? },
            "non_nilpotent" => Family::Weak {
                p: uint("p")?,
                q: uint("q")?,
                p1: uint("p1")?,
                q1: uint("q1")?,
                alpha_sign: sign(v, "alpha_sign")?,
            },
            "nilpotent" => {
                let arr = v.get("blocks").and_then(Value::as_array).ok_or_else(|| bad("missing \"blocks\"".into()))?;
                let mut blocks = Vec::new();
                for b in arr {
                    let k = b.get("k").and_then(Value::as_u64).ok_or_else(|| bad("block without \"k\"".into()))?;
                    let eps = if b.get("eps").is_some() { sign(b, "eps")? } else { 1 };
                    blocks.push(Block { k: k as usize, eps });
                }
                Family::Nilpotent { blocks }
            }
            other => return Err(bad(format!("unknown form {other:?}"))),
        };
        fam.check()?;
        Ok(fam)
    }

    fn check(&self) -> Result<(), ClassifyError> {
        let bad = |s: &str| Err(ClassifyError::MalformedTag(s.into()));
        match self {
            Family::TypeI { p, q } if p + q == 0 => bad("I needs p+q >= 1"),
            Family::TypeII { p: 0 } => bad("II needs p >= 1"),
            Family::Weak { p, q, p1, q1, alpha_sign } => {
                if p1 > p || q1 > q {
                    bad("non_nilpotent needs p1 <= p and q1 <= q")
                } else if p1 + q1 == 0 || p1 + q1 == p + q {
                    bad("non_nilpotent needs 0 < p1+q1 < p+q")
                } else if *alpha_sign < 0 && p1 != q1 {
                    bad("negative alpha needs a split image signature p1 = q1")
                } else {
                    Ok(())
                }
            }
            Family::Nilpotent { blocks } => {
                if blocks.is_empty() {
                    bad("nilpotent needs at least one block")
                } else if blocks.iter().any(|b| b.k == 0 || b.k > 3) {
                    bad("nilpotent block sizes must be 1, 2 or 3")
                } else if blocks.iter().all(|b| b.k == 1) {
                    bad("nilpotent needs a block with k > 1")
                } else {
                    Ok(())
                }
            }
            _ => Ok(()),
        }
    }
}

fn p_matrix(k: usize, eps: i8) -> Matrix {
    let mut m = Matrix::zeros(k, k);
    for i in 0..k {
        m[(i, k - 1 - i)] = GR::from_int(eps as i64);
    }
    m
}

fn j_matrix(k: usize) -> Matrix {
    let mut m = Matrix::zeros(k, k);
    for i in 0..k.saturating_sub(1) {
        m[(i, i + 1)] = GR::one();
    }
    m
}

fn signs(p: usize, q: usize) -> Vec<i64> {
    std::iter::repeat_n(1, p).chain(std::iter::repeat_n(-1, q)).collect()
}

fn type_ii_operator(p: usize) -> Matrix {
    let mut m = Matrix::zeros(2 * p, 2 * p);
    for j in 0..p {
        m[(p + j, j)] = GR::one();
        m[(j, p + j)] = GR::from_int(-1);
    }
    m
}

/// The literal normal-form matrices of a family tag.
pub fn emit_normal_form_matrices(f: &Family) -> Result<SymbolInput, ClassifyError> {
    f.check()?;
    let (h, m) = match f {
        Family::TypeI { p, q } => (Matrix::diag_ints(&signs(*p, *q)), Matrix::identity(p + q)),
        Family::TypeII { p } => (Matrix::diag_ints(&signs(*p, *p)), type_ii_operator(*p)),
        Family::Weak { p, q, p1, q1, alpha_sign } => {
            let (hw, mw) = if *alpha_sign > 0 {
                (Matrix::diag_ints(&signs(*p1, *q1)), Matrix::identity(p1 + q1))
            } else {
                (Matrix::diag_ints(&signs(*p1, *p1)), type_ii_operator(*p1))
            };
            let z = p + q - p1 - q1;
            let hz = Matrix::diag_ints(&signs(p - p1, q - q1));
            (Matrix::block_diag(&[hw, hz]), Matrix::block_diag(&[mw, Matrix::zeros(z, z)]))
        }
        Family::Nilpotent { blocks } => (
            Matrix::block_diag(&blocks.iter().map(|b| p_matrix(b.k, b.eps)).collect::<Vec<_>>()),
            Matrix::block_diag(&blocks.iter().map(|b| j_matrix(b.k)).collect::<Vec<_>>()),
        ),
    };
    Ok(SymbolInput::new(h, vec![m]))
}

/// Every canonical tag with n = dim 𝔤₋₁,₁, in a fixed order: I, II, weak
/// (α>0 then α<0), nilpotent.
pub fn canonical_families(n: usize) -> Vec<Family> {
    let mut out = Vec::new();
    for q in 0..=n / 2 {
        out.push(Family::TypeI { p: n - q, q });
    }
    if n.is_multiple_of(2) && n > 0 {
        out.push(Family::TypeII { p: n / 2 });
    }
    for alpha_sign in [1i8, -1] {
        for q in 0..=n {
            let p = n - q;
            for p1 in 0..=p {
                for q1 in 0..=q {
                    let f = Family::Weak { p, q, p1, q1, alpha_sign };
                    if f.check().is_ok() && (p, q, p1, q1) >= (q, p, q1, p1) {
                        out.push(f);
                    }
                }
            }
        }
    }
    for n3 in (0..=n / 3).rev() {
        for n2 in (0..=(n - 3 * n3) / 2).rev() {
            if n2 + n3 == 0 {
                continue;
            }
            let n1 = n - 3 * n3 - 2 * n2;
            for a in (0..=n3).rev() {
                for c in (0..=n1).rev() {
                    let (b, d) = (n3 - a, n1 - c);
                    let p = 2 * a + b + n2 + c;
                    let q = a + 2 * b + n2 + d;
                    if (p, a) < (q, b) {
                        continue;
                    }
                    let mut blocks = Vec::new();
                    blocks.extend(std::iter::repeat_n(Block { k: 3, eps: 1 }, a));
                    blocks.extend(std::iter::repeat_n(Block { k: 3, eps: -1 }, b));
                    blocks.extend(std::iter::repeat_n(Block { k: 2, eps: 1 }, n2));
                    blocks.extend(std::iter::repeat_n(Block { k: 1, eps: 1 }, c));
                    blocks.extend(std::iter::repeat_n(Block { k: 1, eps: -1 }, d));
                    out.push(Family::Nilpotent { blocks });
                }
            }
        }
    }
    out
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NilpotentCounts {
    pub n1: usize,
    pub n2: usize,
    pub n3: usize,
    /// signs of ℓ(A²x, y) on the k=3 blocks
    pub k3: SignaturePair,
    pub k1: SignaturePair,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ClassificationInvariants {
    pub alpha: Rational,
    pub alpha_sign: i8,
    /// +1 or −1: the sign applied to ℓ to reach p ≥ q
    pub orientation: i8,
    pub sig_l: SignaturePair,
    pub rank_a: usize,
    pub rank_a2: usize,
    pub sig_w: Option<SignaturePair>,
    pub nilpotent: Option<NilpotentCounts>,
}

impl ClassificationInvariants {
    pub fn to_json(&self) -> Value {
        let sig = |s: &SignaturePair| json!([s.pos, s.neg]);
        let mut v = json!({
            "alpha": rat_to_string(&self.alpha),
            "alpha_sign": self.alpha_sign,
            "orientation": self.orientation,
            "sig_l": sig(&self.sig_l),
            "rank_A": self.rank_a,
            "rank_A2": self.rank_a2,
            "sig_W": self.sig_w.as_ref().map(sig),
        });
        if let Some(c) = &self.nilpotent {
            v["jordan"] = json!({"n1": c.n1, "n2": c.n2, "n3": c.n3, "k3_signs": sig(&c.k3), "k1_signs": sig(&c.k1)});
        }
        v
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasisChange {
    pub g: Matrix,
    pub l_scale: Rational,
    pub a_scale: GR,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Classification {
    pub invariants: ClassificationInvariants,
    pub family: Family,
    pub basis_change: Option<BasisChange>,
    pub verified: bool,
    pub note: Option<String>,
}

impl Classification {
    pub fn to_json(&self) -> Value {
        let mut v = self.family.to_descriptor();
        let obj = v.as_object_mut().expect("descriptor is an object");
        let form = obj.remove("form").expect("descriptor has a form");
        obj.insert("family".into(), form);
        obj.insert("tag".into(), json!(self.family.to_string()));
        obj.insert("alpha_sign".into(), json!(self.family.alpha_sign()));
        obj.insert("invariants".into(), self.invariants.to_json());
        obj.insert(
            "basis_change".into(),
            match &self.basis_change {
                Some(b) => json!({
                    "g": serde_json::to_value(&b.g).expect("matrix serializes"),
                    "l_scale": rat_to_string(&b.l_scale),
                    "a_scale": serde_json::to_value(&b.a_scale).expect("scalar serializes"),
                }),
                None => Value::Null,
            },
        );
        obj.insert("verified".into(), json!(self.verified));
        if let Some(n) = &self.note {
            obj.insert("note".into(), json!(n));
        }
        v
    }
}

fn sign_of(r: &Rational) -> i8 {
    if r.is_positive() {
        1
    } else if r.is_negative() {
        -1
    } else {
        0
    }
}

fn column_space(m: &Matrix) -> Vec<Vec<GR>> {
    let (_, piv) = rref(m);
    piv.iter().map(|&c| m.column(c)).collect()
}

fn gram(h: &Matrix, basis: &[Vec<GR>]) -> Matrix {
    let k = basis.len();
    let mut g = Matrix::zeros(k, k);
    for i in 0..k {
        for j in 0..k {
            g[(i, j)] = hermitian_pair(h, &basis[i], &basis[j]);
        }
    }
    g
}

/// For kernel rank 1, regularity is the condition A³ = αA with α real; the
/// bracket-closure test in `check_regular` agrees (cross-checked in tests).
fn require_regular(input: &SymbolInput) -> Result<Rational, ClassifyError> {
    if input.kernel_rank != 1 || input.operators.len() != 1 {
        return Err(ClassifyError::KernelRankUnsupported(input.operators.len()));
    }
    validate_symbol(input)?;
    match alpha_of(&input.operators[0]) {
        Ok(Some(a)) => Ok(a),
        Ok(None) => Err(ClassifyError::NotRegular("A^3 is not in C*A".into())),
        Err(e) => Err(ClassifyError::NotRegular(e)),
    }
}

/// Invariants and the canonical family tag, without a witness.
pub fn invariants(input: &SymbolInput) -> Result<(ClassificationInvariants, Family), ClassifyError> {
    let alpha = require_regular(input)?;
    let h = &input.hermitian;
    let m = &input.operators[0];
    let n = input.n;
    let sig = hermitian_signature(h).map_err(|_| ClassifyError::Symbol(SymbolError::DegenerateLeviForm))?;
    let (p, q) = (sig.pos, sig.neg);
    let a2 = m * &m.conj();
    let rank_a = m.rank();
    let rank_a2 = a2.rank();
    let s = sign_of(&alpha);
    if s != 0 {
        let g = gram(h, &column_space(m));
        let w = hermitian_signature(&g)
            .map_err(|_| ClassifyError::Impossible("ℓ is degenerate on the image of A".into()))?;
        if s < 0 && w.pos != w.neg {
            return Err(ClassifyError::Impossible(format!(
                "negative alpha needs a split signature on the image of A, got ({},{})",
                w.pos, w.neg
            )));
        }
        let flip = (q, p, w.neg, w.pos) > (p, q, w.pos, w.neg);
        let (sl, sw) = if flip { (sig.flipped(), w.flipped()) } else { (sig, w) };
        let family = if rank_a == n {
            if s > 0 {
                Family::TypeI { p: sl.pos, q: sl.neg }
            } else {
                Family::TypeII { p: n / 2 }
            }
        } else {
            Family::Weak { p: sl.pos, q: sl.neg, p1: sw.pos, q1: sw.neg, alpha_sign: s }
        };
        let inv = ClassificationInvariants {
            alpha,
            alpha_sign: s,
            orientation: if flip { -1 } else { 1 },
            sig_l: sl,
            rank_a,
            rank_a2,
            sig_w: Some(sw),
            nilpotent: None,
        };
        return Ok((inv, family));
    }
    let n3 = rank_a2;
    let n2 = rank_a
        .checked_sub(2 * n3)
        .ok_or_else(|| ClassifyError::Impossible("rank A < 2 rank A²".into()))?;
    let n1 = n
        .checked_sub(3 * n3 + 2 * n2)
        .ok_or_else(|| ClassifyError::Impossible("block counts exceed n".into()))?;
    let phi = &a2.transpose() * h;
    let k3 = hermitian_inertia(&phi).map_err(|_| ClassifyError::Impossible("ℓ(A²x,y) is not Hermitian".into()))?;
    let (a, b) = (k3.pos, k3.neg);
    let c1p = p as i64 - (n2 + 2 * a + b) as i64;
    let c1n = q as i64 - (n2 + a + 2 * b) as i64;
    if c1p < 0 || c1n < 0 || (c1p + c1n) as usize != n1 || a + b != n3 {
        return Err(ClassifyError::Impossible("block signs do not fit the signature of ℓ".into()));
    }
    let flip = (q, b) > (p, a);
    let (sl, s3, s1) = if flip {
        (sig.flipped(), SignaturePair::new(b, a), SignaturePair::new(c1n as usize, c1p as usize))
    } else {
        (sig, SignaturePair::new(a, b), SignaturePair::new(c1p as usize, c1n as usize))
    };
    let mut blocks = Vec::new();
    blocks.extend(std::iter::repeat_n(Block { k: 3, eps: 1 }, s3.pos));
    blocks.extend(std::iter::repeat_n(Block { k: 3, eps: -1 }, s3.neg));
    blocks.extend(std::iter::repeat_n(Block { k: 2, eps: 1 }, n2));
    blocks.extend(std::iter::repeat_n(Block { k: 1, eps: 1 }, s1.pos));
    blocks.extend(std::iter::repeat_n(Block { k: 1, eps: -1 }, s1.neg));
    let inv = ClassificationInvariants {
        alpha,
        alpha_sign: 0,
        orientation: if flip { -1 } else { 1 },
        sig_l: sl,
        rank_a,
        rank_a2,
        sig_w: None,
        nilpotent: Some(NilpotentCounts { n1, n2, n3, k3: s3, k1: s1 }),
    };
    Ok((inv, Family::Nilpotent { blocks }))
}

const NILPOTENT_NOTE: &str = "k=2 block signs are normalized to +1 by a diagonal rescaling; k=1 and k=3 sign counts are invariants up to the global sign of the Hermitian form";

pub fn classify(input: &SymbolInput) -> Result<Classification, ClassifyError> {
    let (invariants, family) = invariants(input)?;
    let target = emit_normal_form_matrices(&family)?;
    let mut basis_change = None;
    let mut note = None;
    match a_scale(&invariants.alpha) {
        None => note = Some(format!("|alpha| = {} has no square norm in Q(i); no witness", rat_to_string(&invariants.alpha.abs()))),
        Some(c) => {
            let fixed = l_scale_candidates(input).into_iter().map(|r| (r, false));
            for (rmag, free) in std::iter::once((Rational::one(), true)).chain(fixed) {
                let r = if invariants.orientation < 0 { -rmag } else { rmag };
                let Some((g, r, c)) = build_witness(input, &family, &r, free, &c) else { continue };
                if let Ok(t) = input.transform(&g, &GR::from_rational(r.clone()), &c) {
                    if t.hermitian == target.hermitian && t.operators == target.operators {
                        basis_change = Some(BasisChange { g, l_scale: r, a_scale: c });
                        break;
                    }
                }
            }
            if basis_change.is_none() {
                note = Some("no basis change over Q(i) found by the bounded search".into());
            }
        }
    }
    if note.is_none() && matches!(family, Family::Nilpotent { .. }) {
        note = Some(NILPOTENT_NOTE.into());
    }
    Ok(Classification { verified: basis_change.is_some(), invariants, family, basis_change, note })
}

pub fn equivalent(a: &SymbolInput, b: &SymbolInput) -> Result<bool, ClassifyError> {
    Ok(invariants(a)?.1 == invariants(b)?.1)
}

/// c with |c|² |α| = 1, or 1 when α = 0.
fn a_scale(alpha: &Rational) -> Option<GR> {
    if alpha.is_zero() {
        return Some(GR::one());
    }
    let t = alpha.abs().recip();
    if let Some(s) = rat_sqrt(&t) {
        return Some(GR::from_rational(s));
    }
    two_squares(&t, NORM_SEARCH)
}

fn l_scale_candidates(input: &SymbolInput) -> Vec<Rational> {
    let h = &input.hermitian;
    let m = &input.operators[0];
    let a2 = m * &m.conj();
    let phi = &a2.transpose() * h;
    let mut out = vec![Rational::one()];
    for mat in [h, &phi, &(&m.transpose() * h)] {
        for i in 0..h.rows {
            for j in i..h.rows {
                let x = &mat[(i, j)];
                for part in [&x.re, &x.im] {
                    if !part.is_zero() {
                        let r = part.abs().recip();
                        if !out.contains(&r) {
                            out.push(r);
                        }
                    }
                }
            }
        }
    }
    out.truncate(8);
    out
}

struct Ctx<'a> {
    h: &'a Matrix,
    m: &'a Matrix,
    c: RefCell<GR>,
    /// c is unconstrained when α = 0 and no k=3 block has fixed |c|
    c_free: Cell<bool>,
    r: RefCell<Rational>,
    /// the magnitude of r is fixed by the first normalization
    free: Cell<bool>,
}

impl Ctx<'_> {
    fn ell(&self, u: &[GR], v: &[GR]) -> GR {
        hermitian_pair(self.h, u, v).scale(&self.r.borrow())
    }
    /// λ with |λ|²|q| = 1; while r is free, rescales r instead.
    fn inv_norm(&self, q: &Rational) -> Option<GR> {
        if q.is_zero() {
            return None;
        }
        if self.free.get() {
            self.free.set(false);
            let r = &*self.r.borrow() / q.abs();
            *self.r.borrow_mut() = r;
            return Some(GR::one());
        }
        let t = q.abs().recip();
        rat_sqrt(&t).map(GR::from_rational).or_else(|| two_squares(&t, NORM_SEARCH))
    }
    /// Real t with t²|q| = 1.
    fn inv_sqrt(&self, q: &Rational) -> Option<Rational> {
        let lam = self.inv_norm(q)?;
        if lam.is_one() {
            return Some(Rational::one());
        }
        rat_sqrt(&q.abs().recip())
    }
    fn op(&self, x: &[GR]) -> Vec<GR> {
        let c = self.c.borrow();
        let xc: Vec<GR> = x.iter().map(|z| &z.conj() * &*c).collect();
        self.m.mul_vec(&xc)
    }
    /// Basis of {y ∈ span(basis) : ℓ(y, w) = 0 for all w in `against`}.
    fn complement(&self, basis: &[Vec<GR>], against: &[Vec<GR>]) -> Vec<Vec<GR>> {
        let mut c = Matrix::zeros(against.len(), basis.len());
        for (i, w) in against.iter().enumerate() {
            for (k, b) in basis.iter().enumerate() {
                c[(i, k)] = self.ell(b, w);
            }
        }
        nullspace(&c).into_iter().map(|t| combine(basis, &t)).collect()
    }
    /// Real version: coefficients restricted to ℚ; assumes ℓ is real on the span.
    fn complement_real(&self, basis: &[Vec<GR>], against: &[Vec<GR>]) -> Vec<Vec<GR>> {
        let mut c = Matrix::zeros(against.len(), basis.len());
        for (i, w) in against.iter().enumerate() {
            for (k, b) in basis.iter().enumerate() {
                c[(i, k)] = GR::from_rational(self.ell(b, w).re);
            }
        }
        nullspace(&c).into_iter().map(|t| combine(basis, &t)).collect()
    }
}

fn combine(basis: &[Vec<GR>], t: &[GR]) -> Vec<GR> {
    let n = basis.first().map_or(0, |b| b.len());
    let mut out = vec![GR::zero(); n];
    for (b, c) in basis.iter().zip(t) {
        if c.is_zero() {
            continue;
        }
        for (o, x) in out.iter_mut().zip(b) {
            *o += &(x * c);
        }
    }
    out
}

fn scaled(v: &[GR], s: &GR) -> Vec<GR> {
    v.iter().map(|x| x * s).collect()
}

fn added(a: &[GR], b: &[GR]) -> Vec<GR> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

fn real_alphabet() -> Vec<GR> {
    [1, -1, 2, -2, 3, -3].iter().map(|&x| GR::from_int(x)).collect()
}

fn complex_alphabet() -> Vec<GR> {
    [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1), (2, 0), (-2, 0), (0, 2), (0, -2)]
        .iter()
        .map(|&(a, b)| GR::from_ints(a, b))
        .collect()
}

/// Tries small combinations of `basis` (leading coefficient 1, support up to
/// three vectors) until `f` accepts one.
fn search<T>(basis: &[Vec<GR>], alphabet: &[GR], mut f: impl FnMut(Vec<GR>) -> Option<T>) -> Option<T> {
    let k = basis.len();
    let mut tried = 0usize;
    for support in 1..=k.min(3) {
        let mut idx: Vec<usize> = (0..support).collect();
        loop {
            let tails = alphabet.len().pow(support as u32 - 1);
            for code in 0..tails {
                let mut v = basis[idx[0]].clone();
                let mut c = code;
                for &j in &idx[1..] {
                    let a = &alphabet[c % alphabet.len()];
                    c /= alphabet.len();
                    v = added(&v, &scaled(&basis[j], a));
                }
                if let Some(t) = f(v) {
                    return Some(t);
                }
                tried += 1;
                if tried >= SEARCH_LIMIT {
                    return None;
                }
            }
            // next index subset
            let mut i = support;
            while i > 0 && idx[i - 1] == k - support + i - 1 {
                i -= 1;
            }
            if i == 0 {
                break;
            }
            idx[i - 1] += 1;
            for j in i..support {
                idx[j] = idx[j - 1] + 1;
            }
        }
    }
    None
}

/// Orthonormal basis of a complex subspace for the Hermitian form; positive vectors first.
fn orthonormal_hermitian(ctx: &Ctx, mut basis: Vec<Vec<GR>>) -> Option<Vec<Vec<GR>>> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    while !basis.is_empty() {
        let (u, s) = search(&basis, &complex_alphabet(), |x| {
            let q = ctx.ell(&x, &x).re;
            if q.is_zero() {
                return None;
            }
            let lam = ctx.inv_norm(&q)?;
            Some((scaled(&x, &lam), sign_of(&q)))
        })?;
        basis = ctx.complement(&basis, std::slice::from_ref(&u));
        if s > 0 { pos.push(u) } else { neg.push(u) }
    }
    pos.extend(neg);
    Some(pos)
}

/// Orthonormal basis of the B-fixed vectors (a ℚ-form of W when B² = 1).
fn orthonormal_fixed(ctx: &Ctx, mut basis: Vec<Vec<GR>>) -> Option<Vec<Vec<GR>>> {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    while !basis.is_empty() {
        let (u, s) = search(&basis, &real_alphabet(), |x| {
            let q = ctx.ell(&x, &x).re;
            let t = ctx.inv_sqrt(&q)?;
            Some((scaled(&x, &GR::from_rational(t)), sign_of(&q)))
        })?;
        basis = ctx.complement_real(&basis, std::slice::from_ref(&u));
        if s > 0 { pos.push(u) } else { neg.push(u) }
    }
    pos.extend(neg);
    Some(pos)
}

/// Vectors u₁..u_p with ℓ(u,u) = 1, ℓ(Bu,u) = 0, mutually orthogonal together
/// with the Bu's, when B² = −1 on the span.
fn type_ii_basis(ctx: &Ctx, mut basis: Vec<Vec<GR>>) -> Option<Vec<Vec<GR>>> {
    let mut us = Vec::new();
    while !basis.is_empty() {
        let u = search(&basis, &complex_alphabet(), |x| {
            let bx = ctx.op(&x);
            let a = ctx.ell(&x, &x).re;
            let b = ctx.ell(&bx, &x);
            let mut y = if b.is_zero() {
                if a.is_zero() {
                    return None;
                }
                x
            } else {
                let sd = rat_sqrt(&(&a * &a + b.norm_sq()))?;
                let lam = &GR::from_rational(&a + &sd) / &b.conj();
                added(&scaled(&x, &lam), &bx)
            };
            let mut qy = ctx.ell(&y, &y).re;
            if qy.is_zero() {
                return None;
            }
            if qy.is_negative() {
                y = ctx.op(&y);
                qy = -qy;
            }
            let u = scaled(&y, &ctx.inv_norm(&qy)?);
            (ctx.ell(&u, &u).is_one() && ctx.ell(&ctx.op(&u), &u).is_zero()).then_some(u)
        })?;
        let v = ctx.op(&u);
        basis = ctx.complement(&basis, &[u.clone(), v]);
        us.push(u);
    }
    Some(us)
}

fn vanishes_on(f: impl Fn(&[GR]) -> Vec<GR>, basis: &[Vec<GR>]) -> bool {
    basis.iter().all(|b| f(b).iter().all(|x| x.is_zero()))
}

/// Jordan-type chains for B³ = 0. Returns (k, ε, chain) with the chain
/// ordered b₁ = B b₂, b₂ = B b₃, ….
fn nilpotent_chains(ctx: &Ctx, n: usize) -> Option<Vec<(usize, i8, Vec<Vec<GR>>)>> {
    let mut basis: Vec<Vec<GR>> = (0..n)
        .map(|i| {
            let mut v = vec![GR::zero(); n];
            v[i] = GR::one();
            v
        })
        .collect();
    let mut out = Vec::new();
    let two = GR::from_int(2);
    while !vanishes_on(|x| ctx.op(&ctx.op(x)), &basis) {
        let chain = search(&basis, &complex_alphabet(), |x| {
            let ax = ctx.op(&x);
            let a2x = ctx.op(&ax);
            let d = ctx.ell(&a2x, &x).re;
            if d.is_zero() {
                return None;
            }
            let lam = ctx.inv_norm(&d)?;
            let dd = GR::from_rational(d.clone());
            let s = (-&ctx.ell(&ax, &x) / &(&two * &dd)).conj();
            let y = added(&x, &scaled(&ax, &s));
            let t = -&ctx.ell(&y, &y) / &(&two * &dd);
            let x1 = added(&y, &scaled(&a2x, &t));
            let b3 = scaled(&x1, &lam);
            let b2 = ctx.op(&b3);
            let b1 = ctx.op(&b2);
            let ok = ctx.ell(&b3, &b3).is_zero() && ctx.ell(&b2, &b3).is_zero();
            ok.then(|| (sign_of(&d), vec![b1, b2, b3]))
        })?;
        basis = ctx.complement(&basis, &chain.1);
        ctx.c_free.set(false);
        out.push((3, chain.0, chain.1));
    }
    while !vanishes_on(|x| ctx.op(x), &basis) {
        let chain = search(&basis, &complex_alphabet(), |x| {
            let mut ax = ctx.op(&x);
            let mut w = ctx.ell(&ax, &x);
            if w.is_zero() {
                return None;
            }
            if ctx.c_free.get() {
                ctx.c_free.set(false);
                let c = &*ctx.c.borrow() / &w;
                *ctx.c.borrow_mut() = c;
                ax = ctx.op(&x);
                w = ctx.ell(&ax, &x);
            }
            let lam = w.inv().sqrt()?.conj();
            let mu = -&ctx.ell(&x, &x) / &(&two * &w);
            let x1 = added(&x, &scaled(&ax, &mu));
            let b2 = scaled(&x1, &lam);
            let b1 = ctx.op(&b2);
            (ctx.ell(&b1, &b2).is_one() && ctx.ell(&b2, &b2).is_zero()).then(|| vec![b1, b2])
        })?;
        basis = ctx.complement(&basis, &chain);
        out.push((2, 1, chain));
    }
    for u in orthonormal_hermitian(ctx, basis)? {
        let s = sign_of(&ctx.ell(&u, &u).re);
        out.push((1, s, vec![u]));
    }
    Some(out)
}

/// Column matrix of a witness basis for `family`, given r and c.
fn build_witness(input: &SymbolInput, family: &Family, r: &Rational, free: bool, c: &GR) -> Option<(Matrix, Rational, GR)> {
    let ctx = Ctx {
        h: &input.hermitian,
        m: &input.operators[0],
        c: RefCell::new(c.clone()),
        c_free: Cell::new(family.alpha_sign() == 0),
        r: RefCell::new(r.clone()),
        free: Cell::new(free),
    };
    let n = input.n;
    let cols: Vec<Vec<GR>> = match family {
        Family::Nilpotent { .. } => {
            let mut chains = nilpotent_chains(&ctx, n)?;
            chains.sort_by(|a, b| b.0.cmp(&a.0).then(b.1.cmp(&a.1)));
            chains.into_iter().flat_map(|(_, _, ch)| ch).collect()
        }
        _ => {
            let mut cols = if family.alpha_sign() > 0 {
                let mc = ctx.m.scale(c);
                let fixed = nullspace(&(&realify_antilinear(&mc) - &Matrix::identity(2 * n)));
                orthonormal_fixed(&ctx, fixed.iter().map(|v| complexify_vec(v)).collect())?
            } else {
                let us = type_ii_basis(&ctx, column_space(ctx.m))?;
                let vs: Vec<Vec<GR>> = us.iter().map(|u| ctx.op(u)).collect();
                us.into_iter().chain(vs).collect()
            };
            let z = nullspace(&ctx.m.conj());
            if !z.is_empty() {
                cols.extend(orthonormal_hermitian(&ctx, z)?);
            }
            cols
        }
    };
    (cols.len() == n).then(|| (Matrix::from_columns(&cols), ctx.r.into_inner(), ctx.c.into_inner()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn classify_tag(inp: &SymbolInput) -> Family {
        classify(inp).unwrap().family
    }

    #[test]
    fn spec_examples() {
        let i2 = SymbolInput::new(Matrix::identity(2), vec![Matrix::identity(2)]);
        let c = classify(&i2).unwrap();
        assert_eq!(c.family, Family::TypeI { p: 2, q: 0 });
        assert!(c.verified);
        let ii = SymbolInput::new(Matrix::diag_ints(&[1, -1]), vec![Matrix::from_int_rows(&[&[0, -1], &[1, 0]])]);
        assert_eq!(classify_tag(&ii), Family::TypeII { p: 1 });
        let j2 = SymbolInput::new(Matrix::from_int_rows(&[&[0, 1], &[1, 0]]), vec![j_matrix(2)]);
        let c = classify(&j2).unwrap();
        assert_eq!(c.family, Family::Nilpotent { blocks: vec![Block { k: 2, eps: 1 }] });
        assert!(c.verified);
    }

    #[test]
    fn irregular_is_rejected() {
        let inp = SymbolInput::new(Matrix::identity(2), vec![Matrix::diag_ints(&[1, 2])]);
        assert!(matches!(classify(&inp), Err(ClassifyError::NotRegular(_))));
    }

    #[test]
    fn negative_p2_absorbs_into_positive() {
        let minus = SymbolInput::new(p_matrix(2, -1), vec![j_matrix(2)]);
        let c = classify(&minus).unwrap();
        assert_eq!(c.family, Family::Nilpotent { blocks: vec![Block { k: 2, eps: 1 }] });
        assert!(c.verified);
    }

    #[test]
    fn scaled_line_is_equivalent() {
        let a = SymbolInput::new(Matrix::identity(1), vec![Matrix::identity(1)]);
        let b = a.transform(&Matrix::identity(1), &GR::from_int(3), &GR::new(crate::linalg::rat(1, 2), crate::linalg::rat(1, 2))).unwrap();
        assert!(equivalent(&a, &b).unwrap());
        assert!(classify(&b).unwrap().verified);
        let i2 = emit_normal_form_matrices(&Family::TypeI { p: 2, q: 0 }).unwrap();
        let ii = emit_normal_form_matrices(&Family::TypeII { p: 1 }).unwrap();
        assert!(!equivalent(&i2, &ii).unwrap());
        let mixed = Family::Nilpotent { blocks: vec![Block { k: 2, eps: 1 }, Block { k: 1, eps: -1 }] };
        let three = Family::Nilpotent { blocks: vec![Block { k: 3, eps: 1 }] };
        let (x, y) = (emit_normal_form_matrices(&mixed).unwrap(), emit_normal_form_matrices(&three).unwrap());
        assert!(!equivalent(&x, &y).unwrap());
    }

    #[test]
    fn emitted_matrices() {
        let f = Family::Nilpotent { blocks: vec![Block { k: 3, eps: -1 }] };
        let s = emit_normal_form_matrices(&f).unwrap();
        assert_eq!(s.operators[0], j_matrix(3));
        assert_eq!(s.hermitian, p_matrix(3, -1));
        assert!(emit_normal_form_matrices(&Family::Nilpotent { blocks: vec![Block { k: 1, eps: 1 }] }).is_err());
        assert!(emit_normal_form_matrices(&Family::Weak { p: 1, q: 1, p1: 1, q1: 0, alpha_sign: -1 }).is_err());
    }

    #[test]
    fn descriptors_roundtrip() {
        for n in 1..=4 {
            for f in canonical_families(n) {
                assert_eq!(Family::from_descriptor(&f.to_descriptor()).unwrap(), f);
            }
        }
        let v = json!({"form": "nilpotent", "blocks": [{"k": 2, "eps": 1}, {"k": 1, "eps": -1}]});
        assert_eq!(Family::from_descriptor(&v).unwrap().n(), 3);
        assert!(Family::from_descriptor(&json!({"form": "III"})).is_err());
    }

    #[test]
    fn family_counts() {
        // n = 2: I(2,0), I(1,1), II(1), weak ×2 for α>0 ((2,0;1,0), (1,1;1,0)), nil[2+]
        let f = canonical_families(2);
        assert_eq!(f.len(), 6, "{f:?}");
    }

    /// (g, r, c) with g upper triangular over small Gaussian integers.
    pub(crate) fn random_change(rng: &mut impl rand::Rng, n: usize) -> (Matrix, GR, GR) {
        use rand::Rng;
        let small = |rng: &mut dyn rand::RngCore, nonzero: bool| loop {
            let z = GR::from_ints(rng.gen_range(-2..=2), rng.gen_range(-2..=2));
            if !nonzero || !z.is_zero() {
                break z;
            }
        };
        let mut g = Matrix::identity(n);
        for i in 0..n {
            g[(i, i)] = small(rng, true);
            for j in i + 1..n {
                g[(i, j)] = small(rng, false);
            }
        }
        let k = rng.gen_range(1..=3) * if rng.gen_bool(0.5) { 1 } else { -1 };
        let r = GR::from_rational(crate::linalg::rat(k, rng.gen_range(1..=3)));
        (g, r, small(rng, true))
    }

    #[test]
    fn random_changes_keep_tag_and_witness() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        for n in 1..=3 {
            for f in canonical_families(n) {
                let base = emit_normal_form_matrices(&f).unwrap();
                for _ in 0..4 {
                    let (g, r, c) = random_change(&mut rng, n);
                    let cl = classify(&base.transform(&g, &r, &c).unwrap()).unwrap();
                    assert_eq!(cl.family, f);
                    assert!(cl.verified, "{f}");
                }
            }
        }
    }

    #[test]
    fn fast_regularity_matches_bracket_closure() {
        use crate::symbol::{build_symbol, check_regular};
        let mut inputs: Vec<SymbolInput> = (1..=3).flat_map(canonical_families).map(|f| emit_normal_form_matrices(&f).unwrap()).collect();
        inputs.push(SymbolInput::new(Matrix::identity(2), vec![Matrix::diag_ints(&[1, 2])]));
        inputs.push(SymbolInput::new(Matrix::identity(2), vec![Matrix::from_int_rows(&[&[1, 1], &[1, 0]])]));
        inputs.push(SymbolInput::new(Matrix::diag_ints(&[1, -1]), vec![Matrix::from_int_rows(&[&[1, 1], &[-1, 0]])]));
        for inp in inputs {
            let slow = check_regular(&build_symbol(&inp).unwrap()).regular;
            assert_eq!(require_regular(&inp).is_ok(), slow, "{inp:?}");
        }
    }
}
