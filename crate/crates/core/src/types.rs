//! Realized types of a finite table and the uniform metric between them.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::table::{check_index, FormulaTable};

/// A type restricted to the finite column set of a table: the vector of
/// values `φ(p, b)` over the columns `b`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypePoint {
    pub values: Vec<f64>,
    /// Hash of the column labels the values are indexed by, when known.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub columns: Option<String>,
}

impl TypePoint {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if let Some(v) = values.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::validation(format!(
                "type value {v} is outside [0,1]"
            )));
        }
        Ok(TypePoint {
            values,
            columns: None,
        })
    }

    /// The type realized by row `i` of `t`.
    pub fn from_row(t: &FormulaTable, i: usize) -> Result<Self> {
        check_index("row", i, t.n_rows())?;
        Ok(TypePoint {
            values: t.row(i).to_vec(),
            columns: Some(column_hash(t)),
        })
    }

    /// Attaches the column hash of `t` after checking the length.
    pub fn for_table(mut self, t: &FormulaTable) -> Result<Self> {
        if self.values.len() != t.n_cols() {
            return Err(Error::Dimension(format!(
                "type has {} values but the table has {} columns",
                self.values.len(),
                t.n_cols()
            )));
        }
        let hash = column_hash(t);
        if let Some(h) = &self.columns {
            if *h != hash {
                return Err(Error::validation(
                    "type was recorded over a different column set",
                ));
            }
        }
        self.columns = Some(hash);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Short hex digest of a table's column labels.
pub fn column_hash(t: &FormulaTable) -> String {
    let mut h = Sha256::new();
    for l in t.col_labels() {
        h.update(l.as_bytes());
        h.update([0]);
    }
    h.finalize()
        .iter()
        .take(8)
        .map(|b| format!("{b:02x}"))
        .collect()
}

/// `max_b |p[b] - q[b]|`.
pub fn sup_dist(p: &TypePoint, q: &TypePoint) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::Dimension(format!(
            "types of length {} and {}",
            p.len(),
            q.len()
        )));
    }
    if let (Some(a), Some(b)) = (&p.columns, &q.columns) {
        if a != b {
            return Err(Error::validation("types are over different column sets"));
        }
    }
    Ok(sup_dist_slices(&p.values, &q.values))
}

pub(crate) fn sup_dist_slices(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .fold(0.0, |m, (a, b)| f64::max(m, (a - b).abs()))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RealizedType {
    /// Row index of the representative.
    pub representative: usize,
    pub point: TypePoint,
    /// All rows assigned to this type, in row order.
    pub members: Vec<usize>,
}

impl RealizedType {
    pub fn multiplicity(&self) -> usize {
        self.members.len()
    }
}

/// Groups rows into types greedily in row order: a row joins the first
/// representative within `tol`, otherwise it becomes a new one.
pub fn realized_types(t: &FormulaTable, tol: f64) -> Result<Vec<RealizedType>> {
    if !(tol >= 0.0) {
        return Err(Error::validation("type tolerance must be non-negative"));
    }
    let mut types: Vec<RealizedType> = Vec::new();
    for i in 0..t.n_rows() {
        let row = t.row(i);
        match types
            .iter_mut()
            .find(|ty| sup_dist_slices(t.row(ty.representative), row) <= tol)
        {
            Some(ty) => ty.members.push(i),
            None => types.push(RealizedType {
                representative: i,
                point: TypePoint::from_row(t, i)?,
                members: vec![i],
            }),
        }
    }
    Ok(types)
}

/// Rows at or below which the minimum ε-net is computed exactly.
pub const EXACT_NET_MAX_ROWS: usize = 20;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DensityCharacter {
    pub epsilon: f64,
    pub size: usize,
    /// False when `size` is only a greedy upper bound.
    pub exact: bool,
    pub centers: Vec<usize>,
}

/// Size of a minimum ε-net of the rows under the uniform metric, with
/// centers drawn from the rows themselves.
pub fn density_character(t: &FormulaTable, epsilon: f64) -> Result<DensityCharacter> {
    if !(epsilon > 0.0) {
        return Err(Error::validation("epsilon must be positive"));
    }
    let n = t.n_rows();
    let balls: Vec<Vec<usize>> = (0..n)
        .map(|c| {
            (0..n)
                .filter(|&r| sup_dist_slices(t.row(c), t.row(r)) <= epsilon)
                .collect()
        })
        .collect();
    let greedy = greedy_cover(n, &balls);
    if n > EXACT_NET_MAX_ROWS {
        return Ok(DensityCharacter {
            epsilon,
            size: greedy.len(),
            exact: false,
            centers: greedy,
        });
    }
    let masks: Vec<u32> = balls
        .iter()
        .map(|b| b.iter().fold(0, |m, &r| m | 1 << r))
        .collect();
    let full = if n == 32 { u32::MAX } else { (1u32 << n) - 1 };
    for k in 1..greedy.len() {
        let mut chosen = Vec::with_capacity(k);
        if exact_cover(&masks, full, 0, k, &mut chosen) {
            chosen.sort_unstable();
            return Ok(DensityCharacter {
                epsilon,
                size: k,
                exact: true,
                centers: chosen,
            });
        }
    }
    Ok(DensityCharacter {
        epsilon,
        size: greedy.len(),
        exact: true,
        centers: greedy,
    })
}

fn greedy_cover(n: usize, balls: &[Vec<usize>]) -> Vec<usize> {
    let mut covered = vec![false; n];
    let mut left = n;
    let mut centers = Vec::new();
    while left > 0 {
        let (best, _) = balls
            .iter()
            .enumerate()
            .map(|(c, b)| (c, b.iter().filter(|&&r| !covered[r]).count()))
            .fold((0, 0), |acc, x| if x.1 > acc.1 { x } else { acc });
        for &r in &balls[best] {
            if !covered[r] {
                covered[r] = true;
                left -= 1;
            }
        }
        centers.push(best);
    }
    centers.sort_unstable();
    centers
}

/// Can `budget` more balls cover `full \ covered`? Branches on the lowest
/// uncovered row, which some chosen ball must contain.
fn exact_cover(
    masks: &[u32],
    full: u32,
    covered: u32,
    budget: usize,
    chosen: &mut Vec<usize>,
) -> bool {
    let missing = full & !covered;
    if missing == 0 {
        return true;
    }
    if budget == 0 {
        return false;
    }
    let u = missing.trailing_zeros();
    for (c, &m) in masks.iter().enumerate() {
        if m >> u & 1 == 1 {
            chosen.push(c);
            if exact_cover(masks, full, covered | m, budget - 1, chosen) {
                return true;
            }
            chosen.pop();
        }
    }
    false
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Subsequence {
    /// Strictly increasing positions into the input sequence.
    pub indices: Vec<usize>,
    /// Coordinatewise mean of the selected rows.
    pub limit: TypePoint,
}

/// Extracts a subsequence whose every coordinate oscillates by at most
/// `tol`, by pigeonhole diagonalization over the coordinates.
///
/// For each coordinate in turn the surviving rows are restricted to the
/// most populated interval of width `tol`. If fewer than two rows survive,
/// the closest τ-close pair is used instead; when no such pair exists the
/// result has a single index.
pub fn extract_convergent_subsequence(rows: &[TypePoint], tol: f64) -> Result<Subsequence> {
    if !(tol > 0.0) {
        return Err(Error::validation("subsequence tolerance must be positive"));
    }
    if rows.len() < 2 {
        return Err(Error::validation("need at least two rows"));
    }
    let c = rows[0].len();
    if rows.iter().any(|r| r.len() != c) {
        return Err(Error::Dimension("rows of unequal length".into()));
    }

    let mut alive: Vec<usize> = (0..rows.len()).collect();
    for coord in 0..c {
        alive = densest_window(&alive, |i| rows[i].values[coord], tol);
    }
    if alive.len() < 2 {
        alive = closest_pair(rows, tol).map_or(alive, |(i, j)| vec![i, j]);
    }
    alive.sort_unstable();

    let k = alive.len() as f64;
    let limit = (0..c)
        .map(|coord| alive.iter().map(|&i| rows[i].values[coord]).sum::<f64>() / k)
        .collect();
    Ok(Subsequence {
        indices: alive,
        limit: TypePoint {
            values: limit,
            columns: rows[0].columns.clone(),
        },
    })
}

/// Largest subset of `idx` whose values lie in an interval of width
/// `tol`; among equally large windows the lowest one wins.
fn densest_window(idx: &[usize], value: impl Fn(usize) -> f64, tol: f64) -> Vec<usize> {
    let mut sorted: Vec<(f64, usize)> = idx.iter().map(|&i| (value(i), i)).collect();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let (mut best_lo, mut best_len) = (0, 0);
    let mut lo = 0;
    for hi in 0..sorted.len() {
        while sorted[hi].0 - sorted[lo].0 > tol {
            lo += 1;
        }
        if hi + 1 - lo > best_len {
            best_len = hi + 1 - lo;
            best_lo = lo;
        }
    }
    sorted[best_lo..best_lo + best_len]
        .iter()
        .map(|&(_, i)| i)
        .collect()
}

fn closest_pair(rows: &[TypePoint], tol: f64) -> Option<(usize, usize)> {
    let mut best: Option<(f64, usize, usize)> = None;
    for i in 0..rows.len() {
        for j in i + 1..rows.len() {
            let d = sup_dist_slices(&rows[i].values, &rows[j].values);
            if d <= tol && best.map_or(true, |(bd, ..)| d < bd) {
                best = Some((d, i, j));
            }
        }
    }
    best.map(|(_, i, j)| (i, j))
}
