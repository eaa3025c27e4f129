//! Finite formula tables and their constructions.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A finite matrix of formula values `φ(a, b)` in `[0, 1]`.
///
/// Rows are indexed by the x-side parameters, columns by the y-side
/// parameters. Values are stored row-major. The table is immutable once
/// built.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FormulaTable {
    row_labels: Vec<String>,
    col_labels: Vec<String>,
    values: Vec<f64>,
    #[serde(skip)]
    boolean: bool,
}

impl FormulaTable {
    /// Builds a table, checking shape, range and label distinctness.
    pub fn new(row_labels: Vec<String>, col_labels: Vec<String>, values: Vec<f64>) -> Result<Self> {
        if row_labels.is_empty() || col_labels.is_empty() {
            return Err(Error::validation(
                "table must have at least one row and one column",
            ));
        }
        if values.len() != row_labels.len() * col_labels.len() {
            return Err(Error::Dimension(format!(
                "{} values for a {}x{} table",
                values.len(),
                row_labels.len(),
                col_labels.len()
            )));
        }
        check_distinct("row", &row_labels)?;
        check_distinct("column", &col_labels)?;
        let cols = col_labels.len();
        for (k, &v) in values.iter().enumerate() {
            if !(0.0..=1.0).contains(&v) {
                return Err(Error::validation(format!(
                    "value {v} at row {}, col {} is outside [0,1]",
                    k / cols + 1,
                    k % cols + 1
                )));
            }
        }
        let boolean = values.iter().all(|&v| v == 0.0 || v == 1.0);
        Ok(FormulaTable {
            row_labels,
            col_labels,
            values,
            boolean,
        })
    }

    /// Builds a table from nested rows with auto labels `r0..`, `c0..`.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n_rows = rows.len();
        let n_cols = rows.first().map_or(0, Vec::len);
        if let Some((i, r)) = rows.iter().enumerate().find(|(_, r)| r.len() != n_cols) {
            return Err(Error::Dimension(format!(
                "row {} has {} entries, expected {n_cols}",
                i + 1,
                r.len()
            )));
        }
        let values = rows.iter().flatten().copied().collect();
        FormulaTable::new(auto_labels('r', n_rows), auto_labels('c', n_cols), values)
    }

    /// Builds a table from a generator function with auto labels.
    pub fn from_fn(rows: usize, cols: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut values = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                values.push(f(i, j));
            }
        }
        FormulaTable::new(auto_labels('r', rows), auto_labels('c', cols), values)
    }

    /// The strict half-graph of order `n`: value 1 iff `i < j`.
    pub fn half_graph(n: usize) -> Self {
        FormulaTable::from_fn(n, n, |i, j| if i < j { 1.0 } else { 0.0 })
            .expect("half graph is a valid table")
    }

    /// The `n × n` identity table.
    pub fn identity(n: usize) -> Self {
        FormulaTable::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
            .expect("identity is a valid table")
    }

    pub fn constant(rows: usize, cols: usize, c: f64) -> Result<Self> {
        FormulaTable::from_fn(rows, cols, |_, _| c)
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    pub fn row_labels(&self) -> &[String] {
        &self.row_labels
    }

    pub fn col_labels(&self) -> &[String] {
        &self.col_labels
    }

    /// True iff every entry is exactly 0 or 1.
    pub fn is_boolean(&self) -> bool {
        self.boolean
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.n_cols() + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        let c = self.n_cols();
        &self.values[row * c..(row + 1) * c]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.values.chunks(self.n_cols())
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// The tilde table: `result[j][i] = self[i][j]`, labels swapped.
    pub fn transpose(&self) -> Self {
        let (r, c) = (self.n_rows(), self.n_cols());
        let mut values = Vec::with_capacity(r * c);
        for j in 0..c {
            for i in 0..r {
                values.push(self.get(i, j));
            }
        }
        FormulaTable {
            row_labels: self.col_labels.clone(),
            col_labels: self.row_labels.clone(),
            values,
            boolean: self.boolean,
        }
    }

    /// Sub-table on the given row and column indices, in the given order.
    pub fn restrict(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if rows.is_empty() || cols.is_empty() {
            return Err(Error::validation(
                "restriction needs non-empty row and column subsets",
            ));
        }
        for &i in rows {
            check_index("row", i, self.n_rows())?;
        }
        for &j in cols {
            check_index("column", j, self.n_cols())?;
        }
        let mut values = Vec::with_capacity(rows.len() * cols.len());
        for &i in rows {
            for &j in cols {
                values.push(self.get(i, j));
            }
        }
        FormulaTable::new(
            rows.iter().map(|&i| self.row_labels[i].clone()).collect(),
            cols.iter().map(|&j| self.col_labels[j].clone()).collect(),
            values,
        )
    }

    /// Translation table of a function on a finite group:
    /// `value[g][h] = f(g∘h)`.
    pub fn from_group(group: &GroupFunction) -> Result<Self> {
        group.validate()?;
        let n = group.order;
        FormulaTable::new(
            (0..n).map(|g| format!("g{g}")).collect(),
            (0..n).map(|h| format!("h{h}")).collect(),
            group
                .cayley
                .iter()
                .flat_map(|row| row.iter().map(|&k| group.f_values[k]))
                .collect(),
        )
    }

    /// Reads a table in the CSV table format.
    pub fn load_csv(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        FormulaTable::parse_csv(&text)
    }

    /// Parses the CSV table format.
    ///
    /// An optional first line starting with `#` carries column labels. If
    /// its first cell is `labels`, every data line starts with a row label.
    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut reader = csv::ReaderBuilder::new()
            .has_headers(false)
            .flexible(true)
            .trim(csv::Trim::All)
            .from_reader(text.as_bytes());

        let mut col_labels: Option<Vec<String>> = None;
        let mut has_row_labels = false;
        let mut row_labels = Vec::new();
        let mut values = Vec::new();
        let mut n_cols: Option<usize> = None;
        let mut first = true;

        for record in reader.records() {
            let record = record.map_err(|e| {
                let line = e.position().map_or(0, |p| p.line() as usize);
                Error::Parse {
                    line,
                    column: 1,
                    message: e.to_string(),
                }
            })?;
            let line = record.position().map_or(0, |p| p.line() as usize);
            if record.len() == 1 && record[0].is_empty() {
                continue;
            }
            if first {
                first = false;
                if let Some(head) = record[0].strip_prefix('#') {
                    let mut labels: Vec<String> = std::iter::once(head.trim())
                        .chain(record.iter().skip(1))
                        .map(str::to_owned)
                        .collect();
                    if labels.first().map(String::as_str) == Some("labels") {
                        has_row_labels = true;
                        labels.remove(0);
                    }
                    n_cols = Some(labels.len());
                    col_labels = Some(labels);
                    continue;
                }
            }

            let row_no = row_labels.len() + 1;
            let mut cells = record.iter().enumerate();
            if has_row_labels {
                let (_, label) = cells.next().expect("non-empty record");
                row_labels.push(label.to_owned());
            } else {
                row_labels.push(format!("r{}", row_no - 1));
            }
            let offset = usize::from(has_row_labels);
            let width = record.len() - offset;
            match n_cols {
                None => n_cols = Some(width),
                Some(c) if c != width => {
                    return Err(Error::Parse {
                        line,
                        column: record.len().min(c + offset) + 1,
                        message: format!("expected {c} values, found {width}"),
                    });
                }
                Some(_) => {}
            }
            for (k, cell) in cells {
                let v: f64 = cell.parse().map_err(|_| Error::Parse {
                    line,
                    column: k + 1,
                    message: format!("`{cell}` is not a decimal number"),
                })?;
                if !(0.0..=1.0).contains(&v) {
                    return Err(Error::validation(format!(
                        "value {cell} at row {row_no}, col {} is outside [0,1]",
                        k + 1 - offset
                    )));
                }
                values.push(v);
            }
        }

        let n_cols = n_cols.unwrap_or(0);
        if row_labels.is_empty() || n_cols == 0 {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "table has no data".into(),
            });
        }
        let col_labels = col_labels.unwrap_or_else(|| auto_labels('c', n_cols));
        FormulaTable::new(row_labels, col_labels, values)
    }

    /// Serializes in the CSV table format, always with a label header.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("#labels");
        for l in &self.col_labels {
            out.push(',');
            out.push_str(l);
        }
        out.push('\n');
        for (label, row) in self.row_labels.iter().zip(self.rows()) {
            out.push_str(label);
            for v in row {
                let _ = write!(out, ",{v}");
            }
            out.push('\n');
        }
        out
    }
}

fn auto_labels(prefix: char, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

fn check_distinct(axis: &str, labels: &[String]) -> Result<()> {
    let mut seen = HashSet::with_capacity(labels.len());
    for l in labels {
        if !seen.insert(l.as_str()) {
            return Err(Error::validation(format!("duplicate {axis} label `{l}`")));
        }
    }
    Ok(())
}

pub(crate) fn check_index(axis: &'static str, index: usize, len: usize) -> Result<()> {
    if index < len {
        Ok(())
    } else {
        Err(Error::IndexOutOfRange { axis, index, len })
    }
}

/// A function on a finite group given by its Cayley table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupFunction {
    pub order: usize,
    /// `cayley[g][h]` is the index of `g∘h`.
    pub cayley: Vec<Vec<usize>>,
    pub f_values: Vec<f64>,
}

impl GroupFunction {
    /// The cyclic group `Z_n` under addition mod n.
    pub fn cyclic(f_values: Vec<f64>) -> Self {
        let n = f_values.len();
        GroupFunction {
            order: n,
            cayley: (0..n)
                .map(|g| (0..n).map(|h| (g + h) % n).collect())
                .collect(),
            f_values,
        }
    }

    pub fn load_json(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })
    }

    /// Checks the Latin-square property and the range of `f`.
    pub fn validate(&self) -> Result<()> {
        let n = self.order;
        if n == 0 {
            return Err(Error::validation("group order must be positive"));
        }
        if self.f_values.len() != n || self.cayley.len() != n {
            return Err(Error::Dimension(format!(
                "group of order {n} needs {n} values and {n} Cayley rows"
            )));
        }
        if let Some(v) = self.f_values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::validation(format!("f value {v} is outside [0,1]")));
        }
        for (g, row) in self.cayley.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Dimension(format!(
                    "Cayley row {g} has {} entries",
                    row.len()
                )));
            }
            if !is_permutation(row.iter().copied(), n) {
                return Err(Error::validation(format!(
                    "Cayley row {g} is not a permutation"
                )));
            }
        }
        for h in 0..n {
            if !is_permutation(self.cayley.iter().map(|row| row[h]), n) {
                return Err(Error::validation(format!(
                    "Cayley column {h} is not a permutation"
                )));
            }
        }
        Ok(())
    }
}

fn is_permutation(it: impl Iterator<Item = usize>, n: usize) -> bool {
    let mut seen = vec![false; n];
    for k in it {
        if k >= n || std::mem::replace(&mut seen[k], true) {
            return false;
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_plain_boolean_table() {
        let t = FormulaTable::parse_csv("0,1\n1,0").unwrap();
        assert_eq!(t.values(), &[0.0, 1.0, 1.0, 0.0]);
        assert!(t.is_boolean());
        assert_eq!(t.row_labels(), &["r0", "r1"]);
        assert_eq!(t.col_labels(), &["c0", "c1"]);
    }

    #[test]
    fn out_of_range_names_the_cell() {
        let err = FormulaTable::parse_csv("1.5").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Validation(_)));
        assert!(msg.contains("row 1, col 1"), "{msg}");
    }

    #[test]
    fn half_graph_file() {
        let t = FormulaTable::parse_csv("0,1,1\n0,0,1\n0,0,0\n").unwrap();
        assert!(t.is_boolean());
        assert_eq!(t.row(0), &[0.0, 1.0, 1.0]);
        assert_eq!(t, FormulaTable::half_graph(3));
    }

    #[test]
    fn header_and_row_labels_with_crlf() {
        let t = FormulaTable::parse_csv("#labels,u,v\r\na,0.25,1\r\nb,0,0.5\r\n").unwrap();
        assert_eq!(t.row_labels(), &["a", "b"]);
        assert_eq!(t.col_labels(), &["u", "v"]);
        assert_eq!(t.get(1, 1), 0.5);
        assert!(!t.is_boolean());
        assert_eq!(FormulaTable::parse_csv(&t.to_csv()).unwrap(), t);
    }

    #[test]
    fn header_without_row_labels() {
        let t = FormulaTable::parse_csv("# p, q\n1,0\n").unwrap();
        assert_eq!(t.col_labels(), &["p", "q"]);
        assert_eq!(t.row_labels(), &["r0"]);
    }

    #[test]
    fn malformed_cell_reports_position() {
        match FormulaTable::parse_csv("0,1\n0,x\n").unwrap_err() {
            Error::Parse { line, column, .. } => assert_eq!((line, column), (2, 2)),
            e => panic!("unexpected {e:?}"),
        }
        assert!(matches!(
            FormulaTable::parse_csv("0,1\n0\n").unwrap_err(),
            Error::Parse { line: 2, .. }
        ));
        assert!(FormulaTable::parse_csv("").is_err());
    }

    #[test]
    fn duplicate_labels_rejected() {
        assert!(FormulaTable::parse_csv("#a,a\n0,1\n").is_err());
    }

    #[test]
    fn transpose_examples() {
        let t = FormulaTable::from_rows(&[vec![0.0, 1.0], vec![0.0, 0.0]]).unwrap();
        let tt = t.transpose();
        assert_eq!(tt.values(), &[0.0, 0.0, 1.0, 0.0]);
        assert_eq!(tt.row_labels(), t.col_labels());
        assert_eq!(tt.transpose(), t);

        let h = FormulaTable::half_graph(3).transpose();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(h.get(j, i), if i < j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn group_parity_checkerboard() {
        let t = FormulaTable::from_group(&GroupFunction::cyclic(vec![0.0, 1.0, 0.0, 1.0])).unwrap();
        for g in 0..4 {
            for h in 0..4 {
                assert_eq!(t.get(g, h), ((g + h) % 2) as f64);
            }
        }
    }

    #[test]
    fn group_cyclic_shift_and_constant() {
        let t = FormulaTable::from_group(&GroupFunction::cyclic(vec![0.0, 0.5, 1.0])).unwrap();
        assert_eq!(t.row(1), &[0.5, 1.0, 0.0]);
        assert_eq!(t.row(2), &[1.0, 0.0, 0.5]);
        let c = FormulaTable::from_group(&GroupFunction::cyclic(vec![0.3; 5])).unwrap();
        assert!(c.values().iter().all(|&v| v == 0.3));
    }

    #[test]
    fn group_latin_square_violation() {
        let g = GroupFunction {
            order: 2,
            cayley: vec![vec![0, 1], vec![0, 1]],
            f_values: vec![0.0, 1.0],
        };
        assert!(matches!(
            FormulaTable::from_group(&g),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn restrict_examples() {
        let h = FormulaTable::half_graph(4);
        assert_eq!(h.restrict(&[0, 1, 2, 3], &[0, 1, 2, 3]).unwrap(), h);
        let sub = h.restrict(&[0, 1], &[2, 3]).unwrap();
        assert!(sub.values().iter().all(|&v| v == 1.0));
        assert_eq!(sub.col_labels(), &["c2", "c3"]);
        assert!(h.restrict(&[0], &[]).is_err());
        assert!(matches!(
            h.restrict(&[4], &[0]),
            Err(Error::IndexOutOfRange { index: 4, .. })
        ));
    }
}
