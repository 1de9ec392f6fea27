//! Byte-reproducible JSON form of a bigraded algebra.

use serde::{Deserialize, Serialize};
use serde_json::Value;

use super::{AlgebraError, BiWeight, BigradedAlgebra};
use crate::linalg::scalar::{rat_to_string, scalar_from_json};
use crate::linalg::{SparseVec, GR};

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct AlgebraJson {
    pub field: String,
    pub components: Vec<ComponentJson>,
    pub brackets: Vec<BracketJson>,
    pub involution: Vec<InvolutionJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct ComponentJson {
    pub weight: [i32; 2],
    pub dim: usize,
    pub labels: Vec<String>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct BracketJson {
    pub a: [i32; 3],
    pub b: [i32; 3],
    pub value: Vec<TermJson>,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct TermJson {
    pub idx: usize,
    pub re: String,
    pub im: String,
}

#[derive(Serialize, Deserialize, Debug, Clone, PartialEq)]
pub struct InvolutionJson {
    pub from: [i32; 2],
    pub matrix: Vec<Vec<Value>>,
}

impl BigradedAlgebra {
    fn local(&self, x: usize) -> [i32; 3] {
        let w = self.weight_of(x);
        let off = self.component(w).map_or(0, |c| c.offset);
        [w.first, w.second, (x - off) as i32]
    }

    pub fn to_json_struct(&self) -> AlgebraJson {
        let components = self
            .components()
            .iter()
            .map(|c| ComponentJson { weight: [c.weight.first, c.weight.second], dim: c.dim(), labels: c.labels.clone() })
            .collect();
        let brackets = self
            .stored_brackets()
            .map(|(&(x, y), v)| {
                let off = self.component(self.weight_of(x) + self.weight_of(y)).map_or(0, |c| c.offset);
                BracketJson {
                    a: self.local(x),
                    b: self.local(y),
                    value: v
                        .iter()
                        .map(|(&i, c)| TermJson { idx: i - off, re: rat_to_string(&c.re), im: rat_to_string(&c.im) })
                        .collect(),
                }
            })
            .collect();
        let involution = self
            .components()
            .iter()
            .filter_map(|c| {
                self.involution_matrix(c.weight).map(|m| InvolutionJson {
                    from: [c.weight.first, c.weight.second],
                    matrix: m
                        .to_rows()
                        .iter()
                        .map(|r| r.iter().map(|x| serde_json::to_value(x).expect("scalar serializes")).collect())
                        .collect(),
                })
            })
            .collect();
        AlgebraJson { field: "gaussian_rational".into(), components, brackets, involution }
    }

    pub fn to_json_string(&self) -> String {
        serde_json::to_string_pretty(&self.to_json_struct()).expect("algebra serializes") + "\n"
    }

    pub fn from_json_struct(j: &AlgebraJson) -> Result<BigradedAlgebra, AlgebraError> {
        if j.field != "gaussian_rational" {
            return Err(AlgebraError::Malformed(format!("unsupported field {}", j.field)));
        }
        let mut alg = BigradedAlgebra::new();
        for c in &j.components {
            if c.labels.len() != c.dim {
                return Err(AlgebraError::Malformed(format!("component {:?} label count differs from dim", c.weight)));
            }
            alg.add_component(BiWeight::new(c.weight[0], c.weight[1]), c.labels.clone())?;
        }
        let global = |alg: &BigradedAlgebra, w: BiWeight, i: i32| -> Result<usize, AlgebraError> {
            let c = alg.component(w).ok_or_else(|| AlgebraError::Malformed(format!("unknown component {w}")))?;
            if i < 0 || i as usize >= c.dim() {
                return Err(AlgebraError::Malformed(format!("index {i} out of range in {w}")));
            }
            Ok(c.offset + i as usize)
        };
        for b in &j.brackets {
            let wa = BiWeight::new(b.a[0], b.a[1]);
            let wb = BiWeight::new(b.b[0], b.b[1]);
            let x = global(&alg, wa, b.a[2])?;
            let y = global(&alg, wb, b.b[2])?;
            let mut v = SparseVec::new();
            for t in &b.value {
                let re = crate::linalg::parse_rational(&t.re)
                    .ok_or_else(|| AlgebraError::Malformed(format!("bad rational {}", t.re)))?;
                let im = crate::linalg::parse_rational(&t.im)
                    .ok_or_else(|| AlgebraError::Malformed(format!("bad rational {}", t.im)))?;
                let k = global(&alg, wa + wb, t.idx as i32)?;
                v.add_term(k, &GR::new(re, im));
            }
            alg.set_bracket(x, y, v)?;
        }
        for inv in &j.involution {
            let w = BiWeight::new(inv.from[0], inv.from[1]);
            let src = alg.component(w).ok_or_else(|| AlgebraError::Malformed(format!("unknown component {w}")))?.clone();
            let dst = alg
                .component(w.conj())
                .ok_or_else(|| AlgebraError::Malformed(format!("no mirror component for {w}")))?
                .clone();
            if inv.matrix.len() != dst.dim() || inv.matrix.iter().any(|r| r.len() != src.dim()) {
                return Err(AlgebraError::Malformed(format!("involution block for {w} has wrong shape")));
            }
            for (j, x) in src.range().enumerate() {
                let mut img = SparseVec::new();
                for (i, row) in inv.matrix.iter().enumerate() {
                    let c = scalar_from_json(&row[j]).map_err(AlgebraError::Malformed)?;
                    img.add_term(dst.offset + i, &c);
                }
                alg.set_conj(x, img)?;
            }
        }
        Ok(alg)
    }

    pub fn from_json_str(s: &str) -> Result<BigradedAlgebra, AlgebraError> {
        let j: AlgebraJson = serde_json::from_str(s).map_err(|e| AlgebraError::Malformed(e.to_string()))?;
        Self::from_json_struct(&j)
    }
}
