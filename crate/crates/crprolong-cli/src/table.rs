//! Dimension table over every canonical r=1 family of a given dim M.
//!
//! Rows follow the order of `canonical_families`: I(p,q) with p >= q by
//! increasing q, then II, weak families (alpha > 0, then alpha < 0), then
//! nilpotent block profiles. Rows are computed in parallel; order is fixed.

use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;

use crprolong::algebra::BiWeight;
use crprolong::classify::{canonical_families, emit_normal_form_matrices, Family};
use crprolong::symbol::{build_symbol, check_regular};

use crate::{effective_pass, pretty, prolong_symbol, Format, VerifyLevel};

pub const STRONG: &str = "strongly-non-nilpotent";
pub const WEAK: &str = "weakly-non-nilpotent";
pub const NILPOTENT: &str = "nilpotent";

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Row {
    pub dim_m: usize,
    pub family: String,
    pub class: &'static str,
    pub g00: usize,
    pub g1: usize,
    pub g2: usize,
    pub total: usize,
    pub real_form: String,
    pub verified: bool,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub dim_m: usize,
    pub strongly_non_nilpotent: Option<usize>,
    pub nilpotent_max: Option<usize>,
    pub max: usize,
    /// (dim M - 1)^2 / 4 + 7
    pub formula: usize,
    pub attained_by: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Table {
    pub rows: Vec<Row>,
    pub summary: Vec<Summary>,
}

pub fn class_of(f: &Family) -> &'static str {
    match f {
        Family::TypeI { .. } | Family::TypeII { .. } => STRONG,
        Family::Weak { .. } => WEAK,
        Family::Nilpotent { .. } => NILPOTENT,
    }
}

pub fn max_formula(dim_m: usize) -> usize {
    (dim_m - 1) * (dim_m - 1) / 4 + 7
}

/// (dim M, family) jobs in output order.
pub fn enumerate(dims: &[usize]) -> Vec<(usize, Family)> {
    dims.iter().flat_map(|&d| canonical_families((d - 3) / 2).into_iter().map(move |f| (d, f))).collect()
}

pub fn row_for(dim_m: usize, f: &Family, max_degree: i32, verify: VerifyLevel) -> Result<Row, String> {
    let input = emit_normal_form_matrices(f).map_err(|e| format!("{f}: {e}"))?;
    let sym = build_symbol(&input).map_err(|e| format!("{f}: {e}"))?;
    let reg = check_regular(&sym);
    if !reg.regular {
        return Err(format!("{f}: normal form is not regular: {}", reg.witness.unwrap_or_default()));
    }
    let p = prolong_symbol(&sym, max_degree, verify).map_err(|e| format!("{f}: {e}"))?;
    let r = &p.result;
    Ok(Row {
        dim_m,
        family: f.to_string(),
        class: class_of(f),
        g00: r.algebra.component_dim(BiWeight::new(0, 0)),
        g1: r.first_weight_dim(1),
        g2: r.first_weight_dim(2),
        total: r.total_complex(),
        real_form: p.identification.name.clone(),
        verified: effective_pass(&p),
    })
}

fn summarize(dim_m: usize, rows: &[Row]) -> Summary {
    let mine: Vec<&Row> = rows.iter().filter(|r| r.dim_m == dim_m).collect();
    let best = |class: &str| mine.iter().filter(|r| r.class == class).map(|r| r.total).max();
    let max = mine.iter().map(|r| r.total).max().unwrap_or(0);
    Summary {
        dim_m,
        strongly_non_nilpotent: best(STRONG),
        nilpotent_max: best(NILPOTENT),
        max,
        formula: max_formula(dim_m),
        attained_by: mine.iter().filter(|r| r.total == max).map(|r| r.family.clone()).collect(),
    }
}

pub fn build(dims: &[usize], max_degree: i32, verify: VerifyLevel) -> Result<Table, String> {
    let rows = enumerate(dims)
        .par_iter()
        .map(|(d, f)| row_for(*d, f, max_degree, verify))
        .collect::<Result<Vec<_>, _>>()?;
    let mut seen = Vec::new();
    for &d in dims {
        if !seen.contains(&d) {
            seen.push(d);
        }
    }
    let summary = seen.into_iter().map(|d| summarize(d, &rows)).collect();
    Ok(Table { rows, summary })
}

fn opt(v: Option<usize>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

impl Table {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => pretty(&json!({"rows": self.rows, "summary": self.summary})),
            Format::Csv => self.csv(),
            Format::Md => self.markdown(),
        }
    }

    /// Row table, a blank line, then the summary table.
    fn csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dim_m", "family", "class", "g00", "g1", "g2", "total", "real_form", "verified"]).expect("csv");
        for r in &self.rows {
            w.write_record([
                r.dim_m.to_string(),
                r.family.clone(),
                r.class.to_string(),
                r.g00.to_string(),
                r.g1.to_string(),
                r.g2.to_string(),
                r.total.to_string(),
                r.real_form.clone(),
                r.verified.to_string(),
            ])
            .expect("csv");
        }
        let mut out = String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8");
        out.push('\n');
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record(["dim_m", "strongly_non_nilpotent", "nilpotent_max", "max", "formula", "attained_by"]).expect("csv");
        for s in &self.summary {
            w.write_record([
                s.dim_m.to_string(),
                opt(s.strongly_non_nilpotent),
                opt(s.nilpotent_max),
                s.max.to_string(),
                s.formula.to_string(),
                s.attained_by.join(" "),
            ])
            .expect("csv");
        }
        out.push_str(&String::from_utf8(w.into_inner().expect("csv flush")).expect("utf8"));
        out
    }

    fn markdown(&self) -> String {
        let mut out = String::from("| dim M | family | class | g0,0 | g1 | g2 | total | real form | verified |\n");
        out.push_str("|---|---|---|---|---|---|---|---|---|\n");
        for r in &self.rows {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} | {} | {} | {} |\n",
                r.dim_m, r.family, r.class, r.g00, r.g1, r.g2, r.total, r.real_form, r.verified
            ));
        }
        out.push_str("\n| dim M | strongly non-nilpotent | nilpotent max | max | (dim M-1)^2/4+7 | attained by |\n");
        out.push_str("|---|---|---|---|---|---|\n");
        for s in &self.summary {
            out.push_str(&format!(
                "| {} | {} | {} | {} | {} | {} |\n",
                s.dim_m,
                opt(s.strongly_non_nilpotent),
                opt(s.nilpotent_max),
                s.max,
                s.formula,
                s.attained_by.join(", ")
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn formula_and_order() {
        assert_eq!([7, 9, 11].map(max_formula), [16, 23, 32]);
        let tags: Vec<String> = enumerate(&[7]).into_iter().map(|(_, f)| f.to_string()).collect();
        assert_eq!(tags, ["I(2,0)", "I(1,1)", "II(1)", "weak(2,0;1,0;+)", "weak(1,1;1,0;+)", "nil[2+]"]);
    }

    #[test]
    fn markdown_has_both_tables() {
        let t = build(&[5], 10, VerifyLevel::Full).unwrap();
        let md = t.render(Format::Md);
        assert_eq!(md.matches("| 5 |").count(), 2);
        assert_eq!(t.summary[0].attained_by, ["I(1,0)"]);
    }
}
