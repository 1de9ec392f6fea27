//! CR symbols built from a Hermitian form and anti-linear operators.
//!
//! Conventions: ℓ(u,v) = uᵀ H conj(v), and the operator A_k acts by
//! A_k(y) = M_k conj(y). In the algebra, [e_α, ē_β] = H[α][β] e₀ and
//! f_k(ē_β) = A_k(e_β), with conj(e₀) = −e₀.

use num_traits::Zero;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;

use crate::algebra::{
    decode_action, op_bracket, solve_derivations, AlgebraError, BiWeight, BigradedAlgebra, HomAction, HomArg,
    HomElement,
};
use crate::linalg::scalar::scalar_from_json;
use crate::linalg::{nullspace, Matrix, Rational, SparseVec, GR};

pub const W_E0: BiWeight = BiWeight::new(-2, 0);
pub const W_E: BiWeight = BiWeight::new(-1, 1);
pub const W_EBAR: BiWeight = BiWeight::new(-1, -1);
pub const W_F: BiWeight = BiWeight::new(0, 2);
pub const W_FBAR: BiWeight = BiWeight::new(0, -2);
pub const W_G00: BiWeight = BiWeight::new(0, 0);

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SymbolInput {
    pub n: usize,
    pub kernel_rank: usize,
    pub hermitian: Matrix,
    pub operators: Vec<Matrix>,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SymbolError {
    #[error("malformed symbol input: {0}")]
    Shape(String),
    #[error("NotHermitian: the Levi form matrix is not Hermitian")]
    NotHermitian,
    #[error("DegenerateLeviForm: the Hermitian matrix is singular")]
    DegenerateLeviForm,
    #[error("NotSelfAdjoint: M_{k}^T H is not symmetric", k = .0 + 1)]
    NotSelfAdjoint(usize),
    #[error("NotTwoNondegenerate: kernel vector {0:?} gives a vanishing operator")]
    NotTwoNondegenerate(Vec<GR>),
    #[error(transparent)]
    Algebra(#[from] AlgebraError),
}

impl SymbolInput {
    pub fn new(hermitian: Matrix, operators: Vec<Matrix>) -> Self {
        SymbolInput { n: hermitian.rows, kernel_rank: operators.len(), hermitian, operators }
    }

    /// Raw JSON form {"n","kernel_rank","hermitian","operators"}; scalars may
    /// be integers, "p/q" strings or {"re","im"} objects.
    pub fn from_json_value(v: &Value) -> Result<SymbolInput, SymbolError> {
        let bad = |s: &str| SymbolError::Shape(s.to_string());
        let parse_matrix = |m: &Value| -> Result<Matrix, SymbolError> {
            let rows = m.as_array().ok_or_else(|| bad("matrix must be an array of rows"))?;
            let mut out = Vec::new();
            for r in rows {
                let r = r.as_array().ok_or_else(|| bad("matrix row must be an array"))?;
                out.push(r.iter().map(scalar_from_json).collect::<Result<Vec<_>, _>>().map_err(SymbolError::Shape)?);
            }
            let c = out.first().map_or(0, |r| r.len());
            if out.iter().any(|r| r.len() != c) {
                return Err(bad("ragged matrix"));
            }
            Ok(Matrix::from_rows(out))
        };
        let h = parse_matrix(v.get("hermitian").ok_or_else(|| bad("missing hermitian"))?)?;
        let ops = v
            .get("operators")
            .and_then(|o| o.as_array())
            .ok_or_else(|| bad("missing operators"))?
            .iter()
            .map(parse_matrix)
            .collect::<Result<Vec<_>, _>>()?;
        let n = match v.get("n") {
            Some(x) => x.as_u64().ok_or_else(|| bad("n must be a nonnegative integer"))? as usize,
            None => h.rows,
        };
        let r = match v.get("kernel_rank") {
            Some(x) => x.as_u64().ok_or_else(|| bad("kernel_rank must be a nonnegative integer"))? as usize,
            None => ops.len(),
        };
        Ok(SymbolInput { n, kernel_rank: r, hermitian: h, operators: ops })
    }

    pub fn to_json_value(&self) -> Value {
        serde_json::to_value(self).expect("symbol serializes")
    }

    /// The operator composition A∘B as a linear map: M_A conj(M_B).
    pub fn compose_antilinear(a: &Matrix, b: &Matrix) -> Matrix {
        a * &b.conj()
    }

    pub fn dim_m(&self) -> usize {
        2 * (self.n + self.kernel_rank) + 1
    }

    /// H ↦ r gᵀ H conj(g), M ↦ c g⁻¹ M conj(g).
    pub fn transform(&self, g: &Matrix, r: &GR, c: &GR) -> Result<SymbolInput, SymbolError> {
        let gi = g.inverse().map_err(|_| SymbolError::Shape("basis change is singular".into()))?;
        let h = (&(&g.transpose() * &self.hermitian) * &g.conj()).scale(r);
        let ops = self.operators.iter().map(|m| (&(&gi * m) * &g.conj()).scale(c)).collect();
        Ok(SymbolInput { n: self.n, kernel_rank: self.kernel_rank, hermitian: h, operators: ops })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CheckedSymbol {
    pub input: SymbolInput,
    pub dim_m: usize,
}

pub fn validate_symbol(input: &SymbolInput) -> Result<CheckedSymbol, SymbolError> {
    let n = input.n;
    let h = &input.hermitian;
    if n == 0 {
        return Err(SymbolError::Shape("n must be positive".into()));
    }
    if (h.rows, h.cols) != (n, n) {
        return Err(SymbolError::Shape(format!("hermitian must be {n}x{n}")));
    }
    if input.kernel_rank != input.operators.len() {
        return Err(SymbolError::Shape("kernel_rank differs from the number of operators".into()));
    }
    if input.kernel_rank == 0 {
        return Err(SymbolError::Shape("kernel_rank must be at least 1".into()));
    }
    if let Some(k) = input.operators.iter().position(|m| (m.rows, m.cols) != (n, n)) {
        return Err(SymbolError::Shape(format!("operator {} must be {n}x{n}", k + 1)));
    }
    if !h.is_hermitian() {
        return Err(SymbolError::NotHermitian);
    }
    if h.rank() < n {
        return Err(SymbolError::DegenerateLeviForm);
    }
    for (k, m) in input.operators.iter().enumerate() {
        if !(&m.transpose() * h).is_symmetric() {
            return Err(SymbolError::NotSelfAdjoint(k));
        }
    }
    let cols: Vec<Vec<GR>> = input.operators.iter().map(|m| m.entries.clone()).collect();
    if let Some(w) = nullspace(&Matrix::from_columns(&cols)).into_iter().next() {
        return Err(SymbolError::NotTwoNondegenerate(w));
    }
    Ok(CheckedSymbol { input: input.clone(), dim_m: input.dim_m() })
}

/// The symbol algebra. When the symbol is not regular some brackets
/// [f_k, f̄_m] leave 𝔤₀,₀; they are left unset and listed in `irregular`.
#[derive(Clone, Debug)]
pub struct SymbolAlgebra {
    pub algebra: BigradedAlgebra,
    pub g00_basis: Vec<HomElement>,
    pub meta: SymbolInput,
    pub irregular: Vec<(usize, usize)>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RegularityReport {
    pub regular: bool,
    #[serde(serialize_with = "ser_opt_rat")]
    pub alpha: Option<Rational>,
    pub witness: Option<String>,
}

fn ser_opt_rat<S: serde::Serializer>(v: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(r) => s.serialize_str(&crate::linalg::rat_to_string(r)),
        None => s.serialize_none(),
    }
}

fn heisenberg(h: &Matrix) -> Result<BigradedAlgebra, AlgebraError> {
    let n = h.rows;
    let mut a = BigradedAlgebra::new();
    add_negative(&mut a, n)?;
    set_negative(&mut a, h)?;
    Ok(a)
}

fn add_negative(a: &mut BigradedAlgebra, n: usize) -> Result<(), AlgebraError> {
    a.add_component(W_E0, vec!["e0".into()])?;
    a.add_component(W_EBAR, (1..=n).map(|i| format!("ebar{i}")).collect())?;
    a.add_component(W_E, (1..=n).map(|i| format!("e{i}")).collect())?;
    Ok(())
}

fn set_negative(a: &mut BigradedAlgebra, h: &Matrix) -> Result<(), AlgebraError> {
    let n = h.rows;
    for al in 0..n {
        for be in 0..n {
            let c = &h[(al, be)];
            if !c.is_zero() {
                a.set_bracket(e_idx(n, al), ebar_idx(be), SparseVec::unit(0).scaled(c))?;
            }
        }
    }
    a.set_conj(0, SparseVec::unit(0).neg())?;
    for al in 0..n {
        a.set_conj(e_idx(n, al), SparseVec::unit(ebar_idx(al)))?;
        a.set_conj(ebar_idx(al), SparseVec::unit(e_idx(n, al)))?;
    }
    Ok(())
}

pub fn ebar_idx(beta: usize) -> usize {
    1 + beta
}

pub fn e_idx(n: usize, alpha: usize) -> usize {
    1 + n + alpha
}

fn vec_rows(ms: &[Matrix]) -> Matrix {
    Matrix::from_rows(ms.iter().map(|m| m.entries.clone()).collect())
}

/// Bigrading-preserving derivations of g₋ normalizing span{A_k} and its conjugate.
pub fn compute_g00(input: &SymbolInput) -> Result<Vec<HomElement>, SymbolError> {
    let g = heisenberg(&input.hermitian)?;
    let ms = &input.operators;
    let mbars: Vec<Matrix> = ms.iter().map(|m| m.conj()).collect();
    let ann = nullspace(&vec_rows(ms));
    let ann_bar = nullspace(&vec_rows(&mbars));
    let cond = |b: &HomElement| -> Result<Vec<GR>, AlgebraError> {
        let b1 = &b.blocks[&W_E];
        let b2 = &b.blocks[&W_EBAR];
        let mut out = Vec::new();
        for k in 0..ms.len() {
            // [B, f_k] on ē is B1 M_k − M_k B2 ; [B, f̄_k] on e is B2 M̄_k − M̄_k B1
            let d = &(b1 * &ms[k]) - &(&ms[k] * b2);
            let dbar = &(b2 * &mbars[k]) - &(&mbars[k] * b1);
            for a in &ann {
                out.push(crate::linalg::matrix::dot(a, &d.entries));
            }
            for a in &ann_bar {
                out.push(crate::linalg::matrix::dot(a, &dbar.entries));
            }
        }
        Ok(out)
    };
    Ok(solve_derivations(&g, 0, Some(0), &[&cond])?)
}

pub fn build_symbol(input: &SymbolInput) -> Result<SymbolAlgebra, SymbolError> {
    validate_symbol(input)?;
    let n = input.n;
    let r = input.kernel_rank;
    let g00 = compute_g00(input)?;
    let g = heisenberg(&input.hermitian)?;
    let mut a = BigradedAlgebra::new();
    add_negative(&mut a, n)?;
    let fbar = a.add_component(W_FBAR, (1..=r).map(|k| format!("fbar{k}")).collect())?;
    let b00 = a.add_component(W_G00, (1..=g00.len()).map(|k| format!("B{k}")).collect())?;
    let f = a.add_component(W_F, (1..=r).map(|k| format!("f{k}")).collect())?;
    set_negative(&mut a, &input.hermitian)?;
    for (k, x) in f.clone().enumerate() {
        let m = &input.operators[k];
        for be in 0..n {
            a.set_bracket(x, ebar_idx(be), SparseVec::from_dense(&m.column(be), e_idx(n, 0)))?;
        }
    }
    for (k, x) in fbar.clone().enumerate() {
        let m = input.operators[k].conj();
        for be in 0..n {
            a.set_bracket(x, e_idx(n, be), SparseVec::from_dense(&m.column(be), ebar_idx(0)))?;
        }
    }
    for (j, x) in b00.clone().enumerate() {
        let act = g00[j].to_action(&g)?;
        for (b, v) in act.values.iter().enumerate() {
            a.set_bracket(x, b, v.clone())?;
        }
    }
    a.refresh_decoders()?;
    let zero_weight: Vec<usize> = (fbar.start..f.end).collect();
    let mut irregular = Vec::new();
    for (i, &x) in zero_weight.iter().enumerate() {
        for &y in &zero_weight[i + 1..] {
            let (ux, uy) = (SparseVec::unit(x), SparseVec::unit(y));
            let act = op_bracket(&a, &HomArg::Element(a.weight_of(x), &ux), &HomArg::Element(a.weight_of(y), &uy))?;
            match decode_action(&a, &act) {
                Ok(v) => a.set_bracket(x, y, v)?,
                Err(AlgebraError::NotClosed(_)) if fbar.contains(&x) && f.contains(&y) => {
                    irregular.push((y - f.start, x - fbar.start));
                }
                Err(e) => return Err(e.into()),
            }
        }
    }
    for (k, x) in f.clone().enumerate() {
        a.set_conj(x, SparseVec::unit(fbar.start + k))?;
        a.set_conj(fbar.start + k, SparseVec::unit(x))?;
    }
    for x in b00.clone() {
        let conj = conj_action(&a, x);
        let img = decode_action(&a, &conj)?;
        a.set_conj(x, img)?;
    }
    irregular.sort_unstable();
    Ok(SymbolAlgebra { algebra: a, g00_basis: g00, meta: input.clone(), irregular })
}

/// Action of conj∘x∘conj for a nonnegative basis vector x.
pub(crate) fn conj_action(a: &BigradedAlgebra, x: usize) -> HomAction {
    let nd = a.negative_dim();
    let values = (0..nd)
        .map(|b| {
            let cb = a.conj_basis(b);
            let img = a.bracket_sparse(&SparseVec::unit(x), &cb);
            a.conj_sparse(&img)
        })
        .collect();
    HomAction { bidegree: a.weight_of(x).conj(), values }
}

impl SymbolAlgebra {
    pub fn n(&self) -> usize {
        self.meta.n
    }

    pub fn dims(&self) -> [usize; 6] {
        let a = &self.algebra;
        [W_E0, W_E, W_EBAR, W_F, W_FBAR, W_G00].map(|w| a.component_dim(w))
    }

    pub fn is_regular(&self) -> bool {
        self.irregular.is_empty()
    }

    pub fn e0(&self) -> usize {
        0
    }

    pub fn e(&self, alpha: usize) -> usize {
        e_idx(self.n(), alpha)
    }

    pub fn ebar(&self, beta: usize) -> usize {
        ebar_idx(beta)
    }

    pub fn f(&self, k: usize) -> usize {
        self.algebra.component(W_F).expect("symbol has f").offset + k
    }

    pub fn fbar(&self, k: usize) -> usize {
        self.algebra.component(W_FBAR).expect("symbol has fbar").offset + k
    }

    /// Coordinates in 𝔤₀,₀ of the conformal generator acting by −1 on 𝔤₋₁ and −2 on 𝔤₋₂.
    pub fn conformal_generator(&self) -> Option<Vec<GR>> {
        let a = &self.algebra;
        let nd = a.negative_dim();
        let mut act = HomAction::zero(a, W_G00);
        act.values[0] = SparseVec::unit(0).scaled(&GR::from_int(-2));
        for b in 1..nd {
            act.values[b] = SparseVec::unit(b).neg();
        }
        let v = decode_action(a, &act).ok()?;
        let c = a.component(W_G00)?;
        Some(v.to_dense(c.offset, c.dim()))
    }
}

/// α with M conj(M) M = α M, if such a real α exists.
pub fn alpha_of(m: &Matrix) -> Result<Option<Rational>, String> {
    let cube = &(m * &m.conj()) * m;
    let Some(pos) = m.entries.iter().position(|x| !x.is_zero()) else {
        return Err("operator vanishes".into());
    };
    let alpha = &cube.entries[pos] / &m.entries[pos];
    if cube != m.scale(&alpha) {
        return Ok(None);
    }
    if !alpha.is_real() {
        return Err(format!("A^3 = {alpha} A with non-real coefficient"));
    }
    Ok(Some(alpha.re))
}

pub fn check_regular(sym: &SymbolAlgebra) -> RegularityReport {
    let alpha = if sym.meta.kernel_rank == 1 { Some(alpha_of(&sym.meta.operators[0])) } else { None };
    if let Some(&(k, m)) = sym.irregular.first() {
        let witness = match &alpha {
            Some(Ok(None)) => "A^3 is not in C*A".to_string(),
            Some(Err(e)) => e.clone(),
            _ => format!("[f{}, fbar{}] is not in g00", k + 1, m + 1),
        };
        return RegularityReport { regular: false, alpha: None, witness: Some(witness) };
    }
    match alpha {
        None => RegularityReport { regular: true, alpha: None, witness: None },
        Some(Ok(Some(a))) => RegularityReport { regular: true, alpha: Some(a), witness: None },
        Some(Ok(None)) => RegularityReport {
            regular: false,
            alpha: None,
            witness: Some("brackets close but A^3 is not in C*A".into()),
        },
        Some(Err(e)) => RegularityReport { regular: false, alpha: None, witness: Some(e) },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn type_i(n: usize) -> SymbolInput {
        SymbolInput::new(Matrix::identity(n), vec![Matrix::identity(n)])
    }

    #[test]
    fn validation_errors() {
        assert_eq!(validate_symbol(&type_i(1)).unwrap().dim_m, 5);
        let zero = SymbolInput::new(Matrix::identity(2), vec![Matrix::zeros(2, 2)]);
        assert!(matches!(validate_symbol(&zero), Err(SymbolError::NotTwoNondegenerate(_))));
        let degenerate = SymbolInput::new(Matrix::diag_ints(&[1, 0]), vec![Matrix::identity(2)]);
        assert_eq!(validate_symbol(&degenerate), Err(SymbolError::DegenerateLeviForm));
        let skew = SymbolInput::new(Matrix::diag_ints(&[1, 1]), vec![Matrix::from_int_rows(&[&[0, 1], &[0, 0]])]);
        assert_eq!(validate_symbol(&skew), Err(SymbolError::NotSelfAdjoint(0)));
    }

    #[test]
    fn type_i_one_symbol() {
        let s = build_symbol(&type_i(1)).unwrap();
        assert_eq!(s.dims(), [1, 1, 1, 1, 1, 2]);
        let a = &s.algebra;
        assert_eq!(a.bracket_basis(s.e(0), s.ebar(0)), SparseVec::unit(0));
        assert_eq!(a.bracket_basis(s.f(0), s.ebar(0)), SparseVec::unit(s.e(0)));
        assert!(a.jacobi_check().is_empty());
        assert!(a.involution_check().is_empty());
        assert!(s.conformal_generator().is_some());
        let rep = check_regular(&s);
        assert!(rep.regular);
        assert_eq!(rep.alpha, Some(crate::linalg::rat_int(1)));
    }

    #[test]
    fn g00_dimensions() {
        for n in 1..=4 {
            let s = build_symbol(&type_i(n)).unwrap();
            assert_eq!(s.g00_basis.len(), 2 + n * (n - 1) / 2);
        }
    }

    #[test]
    fn irregular_diagonal_operator() {
        let inp = SymbolInput::new(Matrix::identity(2), vec![Matrix::diag_ints(&[1, 2])]);
        let s = build_symbol(&inp).unwrap();
        let rep = check_regular(&s);
        assert!(!rep.regular);
        assert!(rep.witness.unwrap().contains("A^3"));
    }

    #[test]
    fn nilpotent_j2() {
        let inp = SymbolInput::new(
            Matrix::from_int_rows(&[&[0, 1], &[1, 0]]),
            vec![Matrix::from_int_rows(&[&[0, 1], &[0, 0]])],
        );
        let s = build_symbol(&inp).unwrap();
        let a = &s.algebra;
        assert_eq!(a.bracket_basis(s.f(0), s.ebar(1)), SparseVec::unit(s.e(0)));
        assert!(a.bracket_basis(s.f(0), s.ebar(0)).is_zero());
        let rep = check_regular(&s);
        assert!(rep.regular);
        assert_eq!(rep.alpha, Some(crate::linalg::rat_int(0)));
        assert_eq!(s.g00_basis.len(), 4);
    }
}
