//! Sample-by-response dataset loading, typing and validation.
//!
//! A [`Dataset`] holds a complete, finite response matrix `Y` (samples as
//! rows) together with typed input variables. Categorical levels are recorded
//! in first-appearance order and then sorted lexicographically, which fixes
//! the contrast coding regardless of file row order. Missing values are hard
//! errors; the linear model in step 1 assumes complete data.

use crate::error::{Error, Result};
use crate::util::fmt_sig;
use ndarray::Array2;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::io::Write;
use std::path::Path;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum VarKind {
    Categorical,
    Continuous,
}

/// One typed input variable with its per-sample values.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Variable {
    pub name: String,
    pub data: VariableData,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum VariableData {
    /// `levels` sorted lexicographically; `codes[i]` indexes into `levels`.
    Categorical { levels: Vec<String>, codes: Vec<u32> },
    Continuous(Vec<f64>),
}

impl Variable {
    pub fn categorical<S: AsRef<str>>(name: &str, labels: &[S]) -> Result<Variable> {
        let mut levels: Vec<String> = Vec::new();
        for l in labels {
            let l = l.as_ref();
            if !levels.iter().any(|x| x == l) {
                levels.push(l.to_string());
            }
        }
        levels.sort();
        Self::categorical_with_levels(name, labels, levels)
    }

    /// Categorical variable with an explicit level set (may include levels
    /// not observed in `labels`, e.g. after filtering samples).
    pub fn categorical_with_levels<S: AsRef<str>>(
        name: &str,
        labels: &[S],
        mut levels: Vec<String>,
    ) -> Result<Variable> {
        levels.sort();
        levels.dedup();
        if levels.len() < 2 {
            return Err(Error::SingleLevel {
                name: name.to_string(),
                n: levels.len(),
            });
        }
        let codes = labels
            .iter()
            .map(|l| {
                levels
                    .iter()
                    .position(|x| x == l.as_ref())
                    .map(|p| p as u32)
                    .ok_or_else(|| Error::UnseenLabel {
                        name: name.to_string(),
                        label: l.as_ref().to_string(),
                    })
            })
            .collect::<Result<Vec<u32>>>()?;
        Ok(Variable {
            name: name.to_string(),
            data: VariableData::Categorical { levels, codes },
        })
    }

    pub fn continuous(name: &str, values: Vec<f64>) -> Result<Variable> {
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                row: i,
                column: name.to_string(),
            });
        }
        Ok(Variable {
            name: name.to_string(),
            data: VariableData::Continuous(values),
        })
    }

    pub fn kind(&self) -> VarKind {
        match self.data {
            VariableData::Categorical { .. } => VarKind::Categorical,
            VariableData::Continuous(_) => VarKind::Continuous,
        }
    }

    pub fn len(&self) -> usize {
        match &self.data {
            VariableData::Categorical { codes, .. } => codes.len(),
            VariableData::Continuous(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Sorted level labels (categorical only).
    pub fn levels(&self) -> Option<&[String]> {
        match &self.data {
            VariableData::Categorical { levels, .. } => Some(levels),
            VariableData::Continuous(_) => None,
        }
    }

    /// Per-sample label of a categorical variable.
    pub fn label(&self, sample: usize) -> Option<&str> {
        match &self.data {
            VariableData::Categorical { levels, codes } => {
                Some(levels[codes[sample] as usize].as_str())
            }
            VariableData::Continuous(_) => None,
        }
    }
}

/// Complete response matrix plus typed input variables.
#[derive(Clone, Debug)]
pub struct Dataset {
    pub y: Array2<f64>,
    pub response_block: String,
    pub response_names: Vec<String>,
    pub sample_ids: Vec<String>,
    pub variables: Vec<Variable>,
}

impl Dataset {
    pub fn new(
        y: Array2<f64>,
        response_block: &str,
        response_names: Vec<String>,
        sample_ids: Vec<String>,
        variables: Vec<Variable>,
    ) -> Result<Dataset> {
        let (n, nresp) = y.dim();
        if n < 3 {
            return Err(Error::InvalidData(format!(
                "need at least 3 samples, got {n}"
            )));
        }
        if nresp < 1 {
            return Err(Error::InvalidData("need at least 1 response".into()));
        }
        if response_names.len() != nresp {
            return Err(Error::Dimension(format!(
                "{} response names for {} responses",
                response_names.len(),
                nresp
            )));
        }
        if sample_ids.len() != n {
            return Err(Error::Dimension(format!(
                "{} sample ids for {} samples",
                sample_ids.len(),
                n
            )));
        }
        let mut seen = BTreeSet::new();
        for id in &sample_ids {
            if !seen.insert(id.clone()) {
                return Err(Error::DuplicateSampleId { id: id.clone() });
            }
        }
        for ((i, j), v) in y.indexed_iter() {
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: i,
                    column: response_names[j].clone(),
                });
            }
        }
        for var in &variables {
            if var.len() != n {
                return Err(Error::Dimension(format!(
                    "variable {:?} has {} values for {} samples",
                    var.name,
                    var.len(),
                    n
                )));
            }
        }
        Ok(Dataset {
            y,
            response_block: response_block.to_string(),
            response_names,
            sample_ids,
            variables,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.y.nrows()
    }

    pub fn n_responses(&self) -> usize {
        self.y.ncols()
    }

    pub fn variable(&self, name: &str) -> Result<&Variable> {
        self.variables
            .iter()
            .find(|v| v.name == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    /// New dataset restricted to the given sample rows (in the given order).
    pub fn select_rows(&self, rows: &[usize]) -> Result<Dataset> {
        let y = Array2::from_shape_fn((rows.len(), self.n_responses()), |(i, j)| {
            self.y[[rows[i], j]]
        });
        let sample_ids = rows.iter().map(|&r| self.sample_ids[r].clone()).collect();
        let variables = self
            .variables
            .iter()
            .map(|v| Variable {
                name: v.name.clone(),
                data: match &v.data {
                    VariableData::Categorical { levels, codes } => VariableData::Categorical {
                        levels: levels.clone(),
                        codes: rows.iter().map(|&r| codes[r]).collect(),
                    },
                    VariableData::Continuous(vals) => {
                        VariableData::Continuous(rows.iter().map(|&r| vals[r]).collect())
                    }
                },
            })
            .collect();
        Dataset::new(
            y,
            &self.response_block,
            self.response_names.clone(),
            sample_ids,
            variables,
        )
    }
}

/// Which CSV columns hold the responses.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ResponseSelector {
    /// Every column whose name starts with the prefix.
    Prefix(String),
    /// Explicit column names.
    Names(Vec<String>),
    /// Contiguous header range, inclusive on both ends.
    Range(String, String),
}

impl ResponseSelector {
    /// `a:b` is a header range, a comma list is explicit names, anything
    /// else is a prefix.
    pub fn parse(text: &str) -> ResponseSelector {
        if let Some((a, b)) = text.split_once(':') {
            ResponseSelector::Range(a.trim().to_string(), b.trim().to_string())
        } else if text.contains(',') {
            ResponseSelector::Names(text.split(',').map(|s| s.trim().to_string()).collect())
        } else {
            ResponseSelector::Prefix(text.trim().to_string())
        }
    }
}

/// Column-role map for CSV ingestion.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Schema {
    pub responses: ResponseSelector,
    /// Sample-id column; row index is used when absent.
    pub id_column: Option<String>,
    /// Force a kind instead of inferring it from the values.
    #[serde(default)]
    pub forced_kinds: BTreeMap<String, VarKind>,
    /// Name for the response block; defaults to the prefix (or "Y").
    #[serde(default)]
    pub response_block: Option<String>,
}

fn is_missing(cell: &str) -> bool {
    let t = cell.trim();
    t.is_empty() || t.eq_ignore_ascii_case("na") || t.eq_ignore_ascii_case("nan")
}

/// Load a dataset from a UTF-8, comma-separated, headered CSV file.
pub fn load_dataset(path: &Path, schema: &Schema) -> Result<Dataset> {
    let file = std::fs::File::open(path).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader
        .headers()?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();

    let response_idx: Vec<usize> = match &schema.responses {
        ResponseSelector::Prefix(p) => headers
            .iter()
            .enumerate()
            .filter(|(_, h)| h.starts_with(p.as_str()))
            .map(|(i, _)| i)
            .collect(),
        ResponseSelector::Names(names) => names
            .iter()
            .map(|n| {
                headers
                    .iter()
                    .position(|h| h == n)
                    .ok_or_else(|| Error::InvalidData(format!("response column {n:?} not found")))
            })
            .collect::<Result<Vec<_>>>()?,
        ResponseSelector::Range(a, b) => {
            let ia = headers
                .iter()
                .position(|h| h == a)
                .ok_or_else(|| Error::InvalidData(format!("response column {a:?} not found")))?;
            let ib = headers
                .iter()
                .position(|h| h == b)
                .ok_or_else(|| Error::InvalidData(format!("response column {b:?} not found")))?;
            if ib < ia {
                return Err(Error::InvalidData(format!(
                    "response range {a}:{b} is reversed"
                )));
            }
            (ia..=ib).collect()
        }
    };
    if response_idx.is_empty() {
        return Err(Error::InvalidData(
            "schema selects no response columns".into(),
        ));
    }
    let id_idx = match &schema.id_column {
        Some(name) => Some(
            headers
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::InvalidData(format!("id column {name:?} not found")))?,
        ),
        None => None,
    };
    let is_response: BTreeSet<usize> = response_idx.iter().copied().collect();
    let variable_idx: Vec<usize> = (0..headers.len())
        .filter(|i| !is_response.contains(i) && Some(*i) != id_idx)
        .collect();

    let mut rows: Vec<csv::StringRecord> = Vec::new();
    for record in reader.records() {
        rows.push(record?);
    }
    let n = rows.len();

    let mut sample_ids = Vec::with_capacity(n);
    for (r, row) in rows.iter().enumerate() {
        let id = match id_idx {
            Some(i) => row.get(i).unwrap_or("").trim().to_string(),
            None => r.to_string(),
        };
        sample_ids.push(id);
    }

    let cell = |row: &csv::StringRecord, col: usize| -> String {
        row.get(col).unwrap_or("").trim().to_string()
    };

    let mut y = Array2::zeros((n, response_idx.len()));
    for (r, row) in rows.iter().enumerate() {
        for (jj, &c) in response_idx.iter().enumerate() {
            let text = cell(row, c);
            if is_missing(&text) {
                return Err(Error::MissingValue {
                    row: r,
                    column: headers[c].clone(),
                });
            }
            let v: f64 = text.parse().map_err(|_| Error::NonNumeric {
                row: r,
                column: headers[c].clone(),
                value: text.clone(),
            })?;
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    row: r,
                    column: headers[c].clone(),
                });
            }
            y[[r, jj]] = v;
        }
    }

    let mut variables = Vec::with_capacity(variable_idx.len());
    for &c in &variable_idx {
        let name = headers[c].clone();
        let raw: Vec<String> = rows.iter().map(|row| cell(row, c)).collect();
        if let Some((r, _)) = raw.iter().enumerate().find(|(_, t)| is_missing(t)) {
            return Err(Error::MissingValue {
                row: r,
                column: name,
            });
        }
        let forced = schema.forced_kinds.get(&name).copied();
        let all_numeric = raw.iter().all(|t| t.parse::<f64>().is_ok());
        let kind = forced.unwrap_or(if all_numeric {
            VarKind::Continuous
        } else {
            VarKind::Categorical
        });
        let var = match kind {
            VarKind::Continuous => {
                let mut vals = Vec::with_capacity(n);
                for (r, t) in raw.iter().enumerate() {
                    let v: f64 = t.parse().map_err(|_| Error::NonNumeric {
                        row: r,
                        column: name.clone(),
                        value: t.clone(),
                    })?;
                    vals.push(v);
                }
                Variable::continuous(&name, vals)?
            }
            VarKind::Categorical => Variable::categorical(&name, &raw)?,
        };
        variables.push(var);
    }

    let block = schema.response_block.clone().unwrap_or_else(|| {
        match &schema.responses {
            ResponseSelector::Prefix(p) if !p.is_empty() => p.clone(),
            _ => "Y".to_string(),
        }
    });
    let response_names = response_idx.iter().map(|&i| headers[i].clone()).collect();
    Dataset::new(y, &block, response_names, sample_ids, variables)
}

/// Write a dataset back to CSV. Numeric cells carry 17 significant digits so
/// a reload recovers every float bit-exactly.
pub fn save_dataset(d: &Dataset, path: &Path) -> Result<()> {
    let quote = crate::report::csv_field;
    let mut out = std::io::BufWriter::new(std::fs::File::create(path).map_err(|source| {
        Error::Io {
            path: path.display().to_string(),
            source,
        }
    })?);
    let mut header = vec!["id".to_string()];
    header.extend(d.variables.iter().map(|v| quote(&v.name)));
    header.extend(d.response_names.iter().map(|n| quote(n)));
    writeln!(out, "{}", header.join(",")).map_err(|source| Error::Io {
        path: path.display().to_string(),
        source,
    })?;
    for r in 0..d.n_samples() {
        let mut fields = vec![quote(&d.sample_ids[r])];
        for var in &d.variables {
            match &var.data {
                VariableData::Categorical { .. } => {
                    fields.push(quote(var.label(r).unwrap_or("")))
                }
                VariableData::Continuous(vals) => fields.push(fmt_sig(vals[r], 17)),
            }
        }
        for j in 0..d.n_responses() {
            fields.push(fmt_sig(d.y[[r, j]], 17));
        }
        writeln!(out, "{}", fields.join(",")).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
    }
    Ok(())
}

/// Per-factor level counts.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FactorLevelCounts {
    pub variable: String,
    pub counts: Vec<(String, usize)>,
}

/// Read-only data quality report; never mutates the dataset.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ValidationReport {
    pub zero_variance_responses: Vec<String>,
    pub constant_variables: Vec<String>,
    pub factor_levels: Vec<FactorLevelCounts>,
    /// (variable, level) pairs declared but observed in zero samples.
    pub empty_levels: Vec<(String, String)>,
    /// Counts over the full crossing of all categorical variables, in
    /// lexicographic cell order.
    pub cells: Vec<(Vec<String>, usize)>,
    /// Every cell of the crossing observed the same positive number of times.
    pub balanced: bool,
}

pub fn validate_dataset(d: &Dataset) -> ValidationReport {
    let n = d.n_samples();
    let mut zero_variance_responses = Vec::new();
    for j in 0..d.n_responses() {
        let col = d.y.column(j);
        let first = col[0];
        if col.iter().all(|&v| v == first) {
            zero_variance_responses.push(d.response_names[j].clone());
        }
    }

    let mut constant_variables = Vec::new();
    let mut factor_levels = Vec::new();
    let mut empty_levels = Vec::new();
    for var in &d.variables {
        match &var.data {
            VariableData::Categorical { levels, codes } => {
                let mut counts = vec![0usize; levels.len()];
                for &c in codes {
                    counts[c as usize] += 1;
                }
                let observed = counts.iter().filter(|&&c| c > 0).count();
                if observed <= 1 {
                    constant_variables.push(var.name.clone());
                }
                for (l, &c) in levels.iter().zip(counts.iter()) {
                    if c == 0 {
                        empty_levels.push((var.name.clone(), l.clone()));
                    }
                }
                factor_levels.push(FactorLevelCounts {
                    variable: var.name.clone(),
                    counts: levels.iter().cloned().zip(counts).collect(),
                });
            }
            VariableData::Continuous(vals) => {
                if vals.iter().all(|&v| v == vals[0]) {
                    constant_variables.push(var.name.clone());
                }
            }
        }
    }

    // Crossing of all categorical variables.
    let cats: Vec<&Variable> = d
        .variables
        .iter()
        .filter(|v| v.kind() == VarKind::Categorical)
        .collect();
    let mut cells = Vec::new();
    let mut balanced = true;
    if !cats.is_empty() {
        let mut cell_counts: BTreeMap<Vec<String>, usize> = BTreeMap::new();
        // seed with the full crossing so empty cells show up
        let mut combos: Vec<Vec<String>> = vec![Vec::new()];
        for var in &cats {
            let levels = var.levels().unwrap();
            combos = combos
                .iter()
                .flat_map(|c| {
                    levels.iter().map(move |l| {
                        let mut c2 = c.clone();
                        c2.push(l.clone());
                        c2
                    })
                })
                .collect();
        }
        for combo in combos {
            cell_counts.insert(combo, 0);
        }
        for r in 0..n {
            let key: Vec<String> = cats
                .iter()
                .map(|v| v.label(r).unwrap().to_string())
                .collect();
            *cell_counts.entry(key).or_insert(0) += 1;
        }
        let first = *cell_counts.values().next().unwrap();
        balanced = first > 0 && cell_counts.values().all(|&c| c == first);
        cells = cell_counts.into_iter().collect();
    }

    ValidationReport {
        zero_variance_responses,
        constant_variables,
        factor_levels,
        empty_levels,
        cells,
        balanced,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::arr2;

    fn write_tmp(content: &str) -> tempfile::NamedTempFile {
        let mut f = tempfile::NamedTempFile::new().unwrap();
        f.write_all(content.as_bytes()).unwrap();
        f
    }

    fn schema_y() -> Schema {
        Schema {
            responses: ResponseSelector::Prefix("y".into()),
            id_column: Some("id".into()),
            forced_kinds: BTreeMap::new(),
            response_block: None,
        }
    }

    #[test]
    fn loads_twelve_row_csv() {
        let mut body = String::from("id,f1,f2,y1,y2,y3,y4,y5\n");
        for i in 0..12 {
            let f1 = if i < 6 { "A" } else { "B" };
            let f2 = if (i / 3) % 2 == 0 { "a" } else { "b" };
            body.push_str(&format!(
                "s{i},{f1},{f2},{},{},{},{},{}\n",
                i, i + 1, i + 2, i + 3, i + 4
            ));
        }
        let f = write_tmp(&body);
        let d = load_dataset(f.path(), &schema_y()).unwrap();
        assert_eq!(d.n_samples(), 12);
        assert_eq!(d.n_responses(), 5);
        assert_eq!(d.response_block, "y");
        assert_eq!(d.variables.len(), 2);
        assert_eq!(d.variable("f1").unwrap().kind(), VarKind::Categorical);
    }

    #[test]
    fn missing_response_cell_is_an_error() {
        let body = "id,f1,y1,y2,y3\na,x,1,2,3\nb,x,4,NA,6\nc,z,7,8,9\n";
        let f = write_tmp(body);
        let err = load_dataset(f.path(), &schema_y()).unwrap_err();
        match err {
            Error::MissingValue { row, column } => {
                assert_eq!(row, 1);
                assert_eq!(column, "y2");
            }
            other => panic!("unexpected error {other}"),
        }
    }

    #[test]
    fn non_numeric_response_is_an_error() {
        let body = "id,f1,y1\na,x,1\nb,x,oops\nc,z,3\n";
        let f = write_tmp(body);
        assert!(matches!(
            load_dataset(f.path(), &schema_y()),
            Err(Error::NonNumeric { row: 1, .. })
        ));
    }

    #[test]
    fn duplicate_sample_ids_rejected() {
        let body = "id,f1,y1\na,x,1\na,x,2\nc,z,3\n";
        let f = write_tmp(body);
        assert!(matches!(
            load_dataset(f.path(), &schema_y()),
            Err(Error::DuplicateSampleId { .. })
        ));
    }

    #[test]
    fn levels_sorted_lexicographically() {
        let v = Variable::categorical("f", &["zebra", "apple", "zebra", "mango"]).unwrap();
        assert_eq!(
            v.levels().unwrap(),
            &["apple".to_string(), "mango".into(), "zebra".into()]
        );
    }

    #[test]
    fn validation_flags_constant_response_and_balance() {
        // balanced 2x2 with 3 replicates
        let n = 12;
        let f1: Vec<&str> = (0..n).map(|i| if i < 6 { "A" } else { "B" }).collect();
        let f2: Vec<&str> = (0..n)
            .map(|i| if (i / 3) % 2 == 0 { "a" } else { "b" })
            .collect();
        let mut y = Array2::zeros((n, 2));
        for i in 0..n {
            y[[i, 0]] = 7.0; // constant
            y[[i, 1]] = i as f64;
        }
        let d = Dataset::new(
            y,
            "y",
            vec!["y1".into(), "y2".into()],
            (0..n).map(|i| i.to_string()).collect(),
            vec![
                Variable::categorical("f1", &f1).unwrap(),
                Variable::categorical("f2", &f2).unwrap(),
            ],
        )
        .unwrap();
        let report = validate_dataset(&d);
        assert_eq!(report.zero_variance_responses, vec!["y1".to_string()]);
        assert_eq!(report.cells.len(), 4);
        assert!(report.cells.iter().all(|(_, c)| *c == 3));
        assert!(report.balanced);
        // purity
        assert_eq!(report, validate_dataset(&d));
    }

    #[test]
    fn validation_flags_empty_level() {
        let labels = ["A", "A", "B", "B"];
        let var = Variable::categorical_with_levels(
            "f",
            &labels,
            vec!["A".into(), "B".into(), "C".into()],
        )
        .unwrap();
        let d = Dataset::new(
            arr2(&[[1.0], [2.0], [3.0], [4.0]]),
            "y",
            vec!["y1".into()],
            vec!["a".into(), "b".into(), "c".into(), "d".into()],
            vec![var],
        )
        .unwrap();
        let report = validate_dataset(&d);
        assert_eq!(report.empty_levels, vec![("f".to_string(), "C".to_string())]);
        assert!(!report.balanced);
    }

    #[test]
    fn csv_with_factor_labels_codes_like_the_two_by_two_layout() {
        // two factors as labels, three replicates; the coded design built
        // from the loaded dataset carries the +-1 pattern of the full
        // crossing bit-exactly
        let mut body = String::from("id,f1,f2,y1\n");
        for i in 0..12 {
            let f1 = if i < 6 { "A" } else { "B" };
            let f2 = if (i / 3) % 2 == 0 { "a" } else { "b" };
            body.push_str(&format!("s{i},{f1},{f2},{}\n", i));
        }
        let f = write_tmp(&body);
        let d = load_dataset(f.path(), &schema_y()).unwrap();
        let spec = crate::design::parse_formula("y ~ f1 + f2 + f1:f2").unwrap();
        let design = crate::design::build_design(&spec, &d).unwrap();
        for i in 0..12 {
            let x1 = if i < 6 { -1.0 } else { 1.0 };
            let x2 = if (i / 3) % 2 == 0 { -1.0 } else { 1.0 };
            assert_eq!(design.x[[i, 0]], 1.0);
            assert_eq!(design.x[[i, 1]], x1);
            assert_eq!(design.x[[i, 2]], x2);
            assert_eq!(design.x[[i, 3]], x1 * x2);
        }
    }

    #[test]
    fn save_load_round_trip_is_bit_exact() {
        let mut body = String::from("id,f1,age,y1,y2\n");
        let vals = [
            (0.1, 1.0 / 3.0),
            (std::f64::consts::PI, -7.25e-11),
            (123456.789, 2.0f64.sqrt()),
        ];
        for (i, (a, b)) in vals.iter().enumerate() {
            body.push_str(&format!("s{i},{},{},{a:.17e},{b:.17e}\n", i % 2, 19.25 + i as f64));
        }
        let f = write_tmp(&body);
        let mut schema = schema_y();
        schema.forced_kinds.insert("f1".into(), VarKind::Categorical);
        let d1 = load_dataset(f.path(), &schema).unwrap();
        let saved = tempfile::NamedTempFile::new().unwrap();
        save_dataset(&d1, saved.path()).unwrap();
        let d2 = load_dataset(saved.path(), &schema).unwrap();
        assert_eq!(d1.y, d2.y);
        assert_eq!(d1.variables, d2.variables);
        assert_eq!(d1.sample_ids, d2.sample_ids);
    }
}
