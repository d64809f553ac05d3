//! Model formulas and sum-coded design matrices.
//!
//! A formula like `y ~ a + b + a:b` turns into an intercept column followed
//! by one coding block per term. Categorical blocks use sum coding: the
//! first sorted level carries -1 in every contrast column, each other level
//! carries a single +1 (level j of an L-level factor places its +1 in column
//! L-j+1, counting from 1). Interaction blocks are element-wise products of
//! their member blocks. Continuous variables enter mean-centered.

use crate::dataset::{Dataset, VarKind, Variable, VariableData};
use crate::error::{Error, Result};
use crate::linalg::singular_values;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::ops::Range;

/// One model term: a single variable or an interaction of several.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Term {
    Main(String),
    Interaction(Vec<String>),
}

impl Term {
    pub fn members(&self) -> Vec<&str> {
        match self {
            Term::Main(v) => vec![v.as_str()],
            Term::Interaction(vs) => vs.iter().map(|s| s.as_str()).collect(),
        }
    }

    /// Member-order-insensitive key for duplicate detection (`a:b` == `b:a`).
    fn canonical(&self) -> Vec<String> {
        let mut m: Vec<String> = self.members().iter().map(|s| s.to_string()).collect();
        m.sort();
        m
    }

    pub fn parse(text: &str) -> Result<Term> {
        let parts: Vec<String> = text.split(':').map(|p| p.trim().to_string()).collect();
        for p in &parts {
            check_identifier(p)?;
        }
        match parts.len() {
            1 => Ok(Term::Main(parts.into_iter().next().unwrap())),
            _ => {
                let mut seen = std::collections::BTreeSet::new();
                for p in &parts {
                    if !seen.insert(p.clone()) {
                        return Err(Error::Formula(format!(
                            "interaction {text:?} repeats variable {p:?}"
                        )));
                    }
                }
                Ok(Term::Interaction(parts))
            }
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.members().join(":"))
    }
}

fn check_identifier(name: &str) -> Result<()> {
    if name.is_empty() {
        return Err(Error::Formula("empty name".into()));
    }
    if !name
        .chars()
        .all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.')
    {
        return Err(Error::Formula(format!("invalid name {name:?}")));
    }
    Ok(())
}

/// Parsed model: response block plus ordered terms.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub response: String,
    pub terms: Vec<Term>,
}

impl ModelSpec {
    pub fn term(&self, text: &str) -> Result<&Term> {
        let wanted = Term::parse(text)?;
        self.terms
            .iter()
            .find(|t| t.canonical() == wanted.canonical())
            .ok_or_else(|| Error::UnknownTerm(text.to_string()))
    }

    pub fn formula(&self) -> String {
        let rhs: Vec<String> = self.terms.iter().map(|t| t.to_string()).collect();
        format!("{} ~ {}", self.response, rhs.join(" + "))
    }
}

/// Parse `response ~ term (+ term)*` where a term is `name` or
/// `name(:name)+`. Whitespace-insensitive.
pub fn parse_formula(text: &str) -> Result<ModelSpec> {
    let (lhs, rhs) = text
        .split_once('~')
        .ok_or_else(|| Error::Formula(format!("expected `response ~ terms` in {text:?}")))?;
    let response = lhs.trim().to_string();
    check_identifier(&response)?;
    if rhs.trim().is_empty() {
        return Err(Error::Formula("empty right-hand side".into()));
    }
    let mut terms = Vec::new();
    for raw in rhs.split('+') {
        let raw = raw.trim();
        if raw.is_empty() {
            return Err(Error::Formula("empty term between `+`".into()));
        }
        let term = Term::parse(raw)?;
        if terms
            .iter()
            .any(|t: &Term| t.canonical() == term.canonical())
        {
            return Err(Error::Formula(format!("duplicate term {raw:?}")));
        }
        terms.push(term);
    }
    Ok(ModelSpec { response, terms })
}

/// Sum-coding block for per-sample `labels` over the sorted `levels`.
/// `n x (L-1)`; level j >= 2 places its +1 in column `L - j + 1`
/// (1-based), the first sorted level carries -1 everywhere.
pub fn code_factor<S: AsRef<str>>(labels: &[S], levels: &[String]) -> Result<Array2<f64>> {
    let l = levels.len();
    if l < 2 {
        return Err(Error::SingleLevel {
            name: String::new(),
            n: l,
        });
    }
    let codes = labels
        .iter()
        .map(|lab| {
            levels
                .iter()
                .position(|x| x == lab.as_ref())
                .map(|p| p as u32)
                .ok_or_else(|| Error::UnseenLabel {
                    name: String::new(),
                    label: lab.as_ref().to_string(),
                })
        })
        .collect::<Result<Vec<u32>>>()?;
    Ok(sum_coding(&codes, l))
}

/// Sum coding on level indices: level 0 -> all -1; level j >= 1 -> +1 in
/// 0-based column `L - j - 1`, zeros elsewhere.
pub(crate) fn sum_coding(codes: &[u32], n_levels: usize) -> Array2<f64> {
    let n = codes.len();
    let width = n_levels - 1;
    let mut block = Array2::zeros((n, width));
    for (i, &code) in codes.iter().enumerate() {
        if code == 0 {
            for c in 0..width {
                block[[i, c]] = -1.0;
            }
        } else {
            block[[i, n_levels - code as usize - 1]] = 1.0;
        }
    }
    block
}

/// All pairwise element-wise column products, `a`-column major.
pub fn interaction_block(a: &Array2<f64>, b: &Array2<f64>) -> Result<Array2<f64>> {
    if a.nrows() != b.nrows() {
        return Err(Error::Dimension(format!(
            "interaction blocks have {} and {} rows",
            a.nrows(),
            b.nrows()
        )));
    }
    let n = a.nrows();
    let (ka, kb) = (a.ncols(), b.ncols());
    let mut out = Array2::zeros((n, ka * kb));
    for ca in 0..ka {
        for cb in 0..kb {
            for i in 0..n {
                out[[i, ca * kb + cb]] = a[[i, ca]] * b[[i, cb]];
            }
        }
    }
    Ok(out)
}

/// Design matrix with an all-ones intercept column followed by per-term
/// coding blocks, in term order.
#[derive(Clone, Debug)]
pub struct CodedDesign {
    pub x: Array2<f64>,
    /// Column range of each term's block within `x` (intercept is column 0).
    pub blocks: Vec<(Term, Range<usize>)>,
}

impl CodedDesign {
    pub fn n_samples(&self) -> usize {
        self.x.nrows()
    }

    pub fn block_range(&self, term: &Term) -> Result<Range<usize>> {
        self.blocks
            .iter()
            .find(|(t, _)| t == term)
            .map(|(_, r)| r.clone())
            .ok_or_else(|| Error::UnknownTerm(term.to_string()))
    }

    /// The `n x k_d` coding block of a term.
    pub fn block(&self, term: &Term) -> Result<Array2<f64>> {
        let r = self.block_range(term)?;
        Ok(self.x.slice(ndarray::s![.., r.start..r.end]).to_owned())
    }
}

fn main_block(var: &Variable) -> Result<Array2<f64>> {
    match &var.data {
        VariableData::Categorical { levels, codes } => {
            if levels.len() < 2 {
                return Err(Error::SingleLevel {
                    name: var.name.clone(),
                    n: levels.len(),
                });
            }
            Ok(sum_coding(codes, levels.len()))
        }
        VariableData::Continuous(vals) => {
            let n = vals.len();
            let mean = vals.iter().sum::<f64>() / n as f64;
            let mut col = Array2::zeros((n, 1));
            for i in 0..n {
                col[[i, 0]] = vals[i] - mean;
            }
            Ok(col)
        }
    }
}

/// Build the full sum-coded design matrix for a model over a dataset.
pub fn build_design(spec: &ModelSpec, d: &Dataset) -> Result<CodedDesign> {
    if spec.response != d.response_block {
        return Err(Error::UnknownResponse(spec.response.clone()));
    }
    let n = d.n_samples();
    let mut term_blocks: Vec<(Term, Array2<f64>)> = Vec::new();
    for term in &spec.terms {
        let block = match term {
            Term::Main(name) => main_block(d.variable(name)?)?,
            Term::Interaction(names) => {
                let vars: Vec<&Variable> = names
                    .iter()
                    .map(|nm| d.variable(nm))
                    .collect::<Result<Vec<_>>>()?;
                let n_cont = vars
                    .iter()
                    .filter(|v| v.kind() == VarKind::Continuous)
                    .count();
                if n_cont > 1 {
                    return Err(Error::InvalidArgument(format!(
                        "interaction {term} has {n_cont} continuous members; at most one is supported"
                    )));
                }
                let mut acc = main_block(vars[0])?;
                for v in &vars[1..] {
                    acc = interaction_block(&acc, &main_block(v)?)?;
                }
                acc
            }
        };
        term_blocks.push((term.clone(), block));
    }

    let total_cols = 1 + term_blocks.iter().map(|(_, b)| b.ncols()).sum::<usize>();
    let mut x = Array2::zeros((n, total_cols));
    for i in 0..n {
        x[[i, 0]] = 1.0;
    }
    let mut blocks = Vec::with_capacity(term_blocks.len());
    let mut col = 1usize;
    for (term, block) in term_blocks {
        let width = block.ncols();
        for c in 0..width {
            for i in 0..n {
                x[[i, col + c]] = block[[i, c]];
            }
        }
        blocks.push((term, col..col + width));
        col += width;
    }

    // Rank check on singular values; on failure, walk the terms to name the
    // first block whose addition stops the rank from growing.
    let sv = singular_values(&x);
    let rank_ok = sv.last().copied().unwrap_or(0.0) > 1e-10 * sv[0];
    if !rank_ok {
        let mut cols_so_far = 1usize;
        for (term, range) in &blocks {
            let width = range.end - range.start;
            let sub = x.slice(ndarray::s![.., 0..range.end]).to_owned();
            let sv_sub = singular_values(&sub);
            let rank = sv_sub.iter().filter(|&&s| s > 1e-10 * sv_sub[0]).count();
            if rank < cols_so_far + width {
                return Err(Error::RankDeficient {
                    term: term.to_string(),
                });
            }
            cols_so_far += width;
        }
        return Err(Error::RankDeficient {
            term: "intercept".to_string(),
        });
    }

    Ok(CodedDesign { x, blocks })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    #[test]
    fn parses_four_main_terms() {
        let spec = parse_formula("proteins ~ ms + group + sex + age").unwrap();
        assert_eq!(spec.response, "proteins");
        assert_eq!(spec.terms.len(), 4);
        assert!(matches!(spec.terms[0], Term::Main(ref m) if m == "ms"));
    }

    #[test]
    fn parses_interaction() {
        let spec = parse_formula("y ~ a + b + a:b").unwrap();
        assert_eq!(spec.terms.len(), 3);
        assert_eq!(
            spec.terms[2],
            Term::Interaction(vec!["a".into(), "b".into()])
        );
        assert_eq!(spec.formula(), "y ~ a + b + a:b");
    }

    #[test]
    fn rejects_empty_rhs_and_duplicates() {
        assert!(parse_formula("y ~").is_err());
        assert!(parse_formula("y ~ a + a").is_err());
        assert!(parse_formula("y ~ a:b + b:a").is_err());
        assert!(parse_formula("y ~ a:a").is_err());
        assert!(parse_formula("just_y").is_err());
    }

    #[test]
    fn whitespace_insensitive() {
        let a = parse_formula("y~a+b: c").unwrap();
        let b = parse_formula("y ~ a + b:c").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn two_level_coding_matches_table_one_column() {
        let labels: Vec<&str> = (0..12).map(|i| if i < 6 { "A" } else { "B" }).collect();
        let block = code_factor(&labels, &["A".to_string(), "B".to_string()]).unwrap();
        for i in 0..12 {
            let expect = if i < 6 { -1.0 } else { 1.0 };
            assert_eq!(block[[i, 0]], expect);
        }
    }

    #[test]
    fn three_level_coding_rows() {
        let levels = vec!["l1".to_string(), "l2".into(), "l3".into()];
        let labels = ["l1", "l2", "l3"];
        let block = code_factor(&labels, &levels).unwrap();
        // level 1 -> (-1, -1); level 2 -> (0, 1); level 3 -> (1, 0)
        assert_eq!(block.row(0).to_vec(), vec![-1.0, -1.0]);
        assert_eq!(block.row(1).to_vec(), vec![0.0, 1.0]);
        assert_eq!(block.row(2).to_vec(), vec![1.0, 0.0]);
    }

    #[test]
    fn single_level_factor_is_an_error() {
        let labels = ["only", "only"];
        assert!(code_factor(&labels, &["only".to_string()]).is_err());
    }

    #[test]
    fn unseen_label_is_an_error() {
        let labels = ["A", "C"];
        assert!(code_factor(&labels, &["A".to_string(), "B".into()]).is_err());
    }

    #[test]
    fn interaction_of_single_columns_is_product() {
        let a = arr2(&[[-1.0], [-1.0], [1.0], [1.0]]);
        let b = arr2(&[[-1.0], [1.0], [-1.0], [1.0]]);
        let ab = interaction_block(&a, &b).unwrap();
        assert_eq!(
            ab.column(0).to_vec(),
            vec![1.0, -1.0, -1.0, 1.0]
        );
    }

    #[test]
    fn interaction_with_zero_block_is_zero() {
        let a = arr2(&[[2.0], [3.0]]);
        let z = Array2::zeros((2, 2));
        let az = interaction_block(&a, &z).unwrap();
        assert!(az.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn interaction_rejects_row_mismatch() {
        let a = Array2::zeros((3, 1));
        let b = Array2::zeros((4, 1));
        assert!(interaction_block(&a, &b).is_err());
    }

    #[test]
    fn balanced_design_blocks_are_mutually_orthogonal() {
        use crate::dataset::{Dataset, Variable};
        // full 2x3 crossing, two replicates: exact +-1/0 arithmetic, so the
        // Gram off-diagonal blocks vanish to machine zero
        let f1: Vec<&str> = (0..12).map(|i| if i < 6 { "a" } else { "b" }).collect();
        let f2: Vec<&str> = (0..12)
            .map(|i| ["p", "q", "r"][(i / 2) % 3])
            .collect();
        let d = Dataset::new(
            Array2::from_shape_fn((12, 1), |(i, _)| i as f64),
            "y",
            vec!["y1".into()],
            (0..12).map(|i| i.to_string()).collect(),
            vec![
                Variable::categorical("f1", &f1).unwrap(),
                Variable::categorical("f2", &f2).unwrap(),
            ],
        )
        .unwrap();
        let spec = parse_formula("y ~ f1 + f2 + f1:f2").unwrap();
        let design = build_design(&spec, &d).unwrap();
        let gram = design.x.t().dot(&design.x);
        let ranges: Vec<std::ops::Range<usize>> = std::iter::once(0..1)
            .chain(design.blocks.iter().map(|(_, r)| r.clone()))
            .collect();
        for (bi, ri) in ranges.iter().enumerate() {
            for rj in ranges.iter().skip(bi + 1) {
                for r in ri.clone() {
                    for c in rj.clone() {
                        assert!(
                            gram[[r, c]].abs() <= 1e-12,
                            "gram[{r},{c}] = {}",
                            gram[[r, c]]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn aliased_factors_give_rank_error_naming_the_term() {
        use crate::dataset::{Dataset, Variable};
        let labels = ["a", "a", "b", "b", "a", "b"];
        let d = Dataset::new(
            Array2::from_shape_fn((6, 1), |(i, _)| i as f64),
            "y",
            vec!["y1".into()],
            (0..6).map(|i| i.to_string()).collect(),
            vec![
                Variable::categorical("f1", &labels).unwrap(),
                Variable::categorical("f2", &labels).unwrap(),
            ],
        )
        .unwrap();
        let spec = parse_formula("y ~ f1 + f2").unwrap();
        match build_design(&spec, &d) {
            Err(crate::error::Error::RankDeficient { term }) => assert_eq!(term, "f2"),
            other => panic!("expected rank deficiency, got {other:?}"),
        }
    }

    #[test]
    fn permuting_samples_permutes_design_rows() {
        use crate::dataset::{Dataset, Variable};
        let labels1 = ["a", "a", "b", "b", "a", "b"];
        let labels2 = ["x", "y", "x", "y", "y", "x"];
        let ages = [31.0, 45.0, 27.0, 60.0, 52.0, 38.0];
        let d = Dataset::new(
            Array2::from_shape_fn((6, 2), |(i, j)| (i * 2 + j) as f64),
            "y",
            vec!["y1".into(), "y2".into()],
            (0..6).map(|i| i.to_string()).collect(),
            vec![
                Variable::categorical("f1", &labels1).unwrap(),
                Variable::categorical("f2", &labels2).unwrap(),
                Variable::continuous("age", ages.to_vec()).unwrap(),
            ],
        )
        .unwrap();
        let spec = parse_formula("y ~ f1 + f2 + f1:f2 + age").unwrap();
        let design = build_design(&spec, &d).unwrap();
        let perm = [3usize, 0, 5, 1, 4, 2];
        let shuffled = d.select_rows(&perm).unwrap();
        let design_p = build_design(&spec, &shuffled).unwrap();
        for (new_row, &old_row) in perm.iter().enumerate() {
            for c in 0..design.x.ncols() {
                assert_eq!(design_p.x[[new_row, c]], design.x[[old_row, c]]);
            }
        }
    }

    proptest::proptest! {
        #[test]
        fn formula_display_reparses_identically(
            names in proptest::collection::vec("[a-z][a-z0-9_]{0,6}", 1..5)
        ) {
            let mut seen = std::collections::BTreeSet::new();
            let terms: Vec<String> = names
                .into_iter()
                .filter(|n| seen.insert(n.clone()))
                .collect();
            let text = format!("resp ~ {}", terms.join(" + "));
            let spec = parse_formula(&text).unwrap();
            let again = parse_formula(&spec.formula()).unwrap();
            proptest::prop_assert_eq!(spec, again);
        }
    }
}
