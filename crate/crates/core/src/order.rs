//! The order property: margin ladders and iterated double limits.
//!
//! A ladder of length `n` is a pair of index sequences `a_1..a_n`,
//! `b_1..b_n` with thresholds `r < s`. In the `HighAbove` direction the
//! cells `(a_i, b_j)` with `i < j` are `>= s` and those with `i >= j` are
//! `<= r`; `LowAbove` swaps the two conditions. Long ladders of a fixed
//! margin `s - r` witness instability of the formula.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::{check_dims, KernelExpr, PointSet};
use crate::table::{check_index, FormulaTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Direction {
    HighAbove,
    LowAbove,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ladder {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub r: f64,
    pub s: f64,
    pub direction: Direction,
}

impl Ladder {
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn margin(&self) -> f64 {
        self.s - self.r
    }

    /// The ladder of the transposed table obtained by reversing both
    /// sequences and swapping their roles. Direction and thresholds are
    /// preserved.
    pub fn transposed(&self) -> Ladder {
        Ladder {
            rows: self.cols.iter().rev().copied().collect(),
            cols: self.rows.iter().rev().copied().collect(),
            r: self.r,
            s: self.s,
            direction: self.direction,
        }
    }
}

/// Checks the ladder pattern exactly.
///
/// Errors on out-of-range or repeated indices and on sequences of
/// unequal or zero length.
pub fn verify_ladder(t: &FormulaTable, l: &Ladder) -> Result<bool> {
    if l.rows.is_empty() || l.rows.len() != l.cols.len() {
        return Err(Error::validation(
            "ladder index sequences must be non-empty and of equal length",
        ));
    }
    check_distinct_indices("row", &l.rows, t.n_rows())?;
    check_distinct_indices("column", &l.cols, t.n_cols())?;
    if !(0.0..=1.0).contains(&l.r) || !(0.0..=1.0).contains(&l.s) || l.r >= l.s {
        return Ok(false);
    }
    for (i, &a) in l.rows.iter().enumerate() {
        for (j, &b) in l.cols.iter().enumerate() {
            let v = t.get(a, b);
            let above = i < j;
            let high = match l.direction {
                Direction::HighAbove => above,
                Direction::LowAbove => !above,
            };
            let ok = if high { v >= l.s } else { v <= l.r };
            if !ok {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

fn check_distinct_indices(axis: &'static str, idx: &[usize], len: usize) -> Result<()> {
    let mut seen = vec![false; len];
    for &i in idx {
        check_index(axis, i, len)?;
        if std::mem::replace(&mut seen[i], true) {
            return Err(Error::validation(format!(
                "repeated {axis} index {i} in ladder"
            )));
        }
    }
    Ok(())
}

/// Fixed-width bitset over table indices.
#[derive(Clone, PartialEq, Eq)]
struct Bits(Vec<u64>);

impl Bits {
    fn empty(n: usize) -> Self {
        Bits(vec![0; n.div_ceil(64)])
    }

    fn full(n: usize) -> Self {
        let mut b = Bits::empty(n);
        for i in 0..n {
            b.insert(i);
        }
        b
    }

    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn remove(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    fn contains(&self, i: usize) -> bool {
        self.0[i / 64] >> (i % 64) & 1 == 1
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn count(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }

    fn iter(&self) -> impl Iterator<Item = usize> + '_ {
        self.0.iter().enumerate().flat_map(|(k, &w)| {
            let mut w = w;
            std::iter::from_fn(move || {
                if w == 0 {
                    return None;
                }
                let bit = w.trailing_zeros() as usize;
                w &= w - 1;
                Some(k * 64 + bit)
            })
        })
    }
}

/// Boolean view of a table at one threshold in one direction.
///
/// `above[a]` holds the columns `b` where `(a, b)` may sit strictly above
/// the ladder diagonal; `below[b]` holds the rows `a` where `(a, b)` may
/// sit on or below it. The two relations are disjoint.
struct Pattern {
    n_rows: usize,
    n_cols: usize,
    above: Vec<Bits>,
    below: Vec<Bits>,
}

impl Pattern {
    fn new(t: &FormulaTable, direction: Direction, threshold: f64, delta: f64) -> Self {
        let (nr, nc) = (t.n_rows(), t.n_cols());
        let mut above = vec![Bits::empty(nc); nr];
        let mut below = vec![Bits::empty(nr); nc];
        for a in 0..nr {
            for b in 0..nc {
                let v = t.get(a, b);
                let (is_above, is_below) = match direction {
                    Direction::HighAbove => (v - threshold >= delta, v <= threshold),
                    Direction::LowAbove => (threshold - v >= delta, v >= threshold),
                };
                if is_above {
                    above[a].insert(b);
                }
                if is_below {
                    below[b].insert(a);
                }
            }
        }
        Pattern {
            n_rows: nr,
            n_cols: nc,
            above,
            below,
        }
    }

    /// Depth-first search for `n` pairs, rows outer and columns inner in
    /// ascending order. Returns the first complete pattern.
    fn search(&self, n: usize) -> Option<(Vec<usize>, Vec<usize>)> {
        let mut rows = Vec::with_capacity(n);
        let mut cols = Vec::with_capacity(n);
        let found = self.extend(
            n,
            &Bits::full(self.n_rows),
            &Bits::full(self.n_cols),
            &mut rows,
            &mut cols,
        );
        found.then_some((rows, cols))
    }

    fn extend(
        &self,
        n: usize,
        row_cand: &Bits,
        col_cand: &Bits,
        rows: &mut Vec<usize>,
        cols: &mut Vec<usize>,
    ) -> bool {
        let depth = rows.len();
        if depth == n {
            return true;
        }
        if depth + row_cand.count().min(col_cand.count()) < n {
            return false;
        }
        for a in row_cand.iter() {
            let next_cols = col_cand.and(&self.above[a]);
            if depth + 1 < n && next_cols.count() + depth + 1 < n {
                continue;
            }
            for b in col_cand.iter() {
                if !self.below[b].contains(a) {
                    continue;
                }
                let mut next_rows = row_cand.and(&self.below[b]);
                next_rows.remove(a);
                let mut nc = next_cols.clone();
                nc.remove(b);
                rows.push(a);
                cols.push(b);
                if self.extend(n, &next_rows, &nc, rows, cols) {
                    return true;
                }
                rows.pop();
                cols.pop();
            }
        }
        false
    }
}

/// Distinct table values usable as the binding threshold in `direction`,
/// ascending. In `HighAbove` the threshold is `r`, in `LowAbove` it is `s`.
fn thresholds(t: &FormulaTable, direction: Direction, delta: f64) -> Vec<f64> {
    let mut vals: Vec<f64> = t.values().to_vec();
    vals.sort_by(f64::total_cmp);
    vals.dedup();
    vals.retain(|&v| match direction {
        Direction::HighAbove => 1.0 - v >= delta,
        Direction::LowAbove => v - 0.0 >= delta,
    });
    vals
}

/// Tightest thresholds for a pattern already known to be a ladder shape.
fn ladder_from_pattern(
    t: &FormulaTable,
    direction: Direction,
    rows: Vec<usize>,
    cols: Vec<usize>,
) -> Ladder {
    let mut above_min = f64::INFINITY;
    let mut above_max = f64::NEG_INFINITY;
    let mut below_min = f64::INFINITY;
    let mut below_max = f64::NEG_INFINITY;
    for (i, &a) in rows.iter().enumerate() {
        for (j, &b) in cols.iter().enumerate() {
            let v = t.get(a, b);
            if i < j {
                above_min = above_min.min(v);
                above_max = above_max.max(v);
            } else {
                below_min = below_min.min(v);
                below_max = below_max.max(v);
            }
        }
    }
    let (r, s) = match direction {
        Direction::HighAbove => (
            below_max,
            if above_min.is_finite() {
                above_min
            } else {
                1.0
            },
        ),
        Direction::LowAbove => (
            if above_max.is_finite() {
                above_max
            } else {
                0.0
            },
            below_min,
        ),
    };
    Ladder {
        rows,
        cols,
        r,
        s,
        direction,
    }
}

fn check_margin(delta: f64) -> Result<()> {
    if delta > 0.0 && delta <= 1.0 {
        Ok(())
    } else {
        Err(Error::validation(format!(
            "margin {delta} must lie in (0, 1]"
        )))
    }
}

/// Exhaustive search for a ladder of length `n` and margin at least
/// `delta`, trying `HighAbove` before `LowAbove` and thresholds in
/// ascending order.
pub fn find_ladder(t: &FormulaTable, n: usize, delta: f64) -> Result<Option<Ladder>> {
    check_margin(delta)?;
    if n == 0 || n > t.n_rows().min(t.n_cols()) {
        return Err(Error::validation(format!(
            "ladder length {n} must lie in 1..={}",
            t.n_rows().min(t.n_cols())
        )));
    }
    for direction in [Direction::HighAbove, Direction::LowAbove] {
        for th in thresholds(t, direction, delta) {
            let pattern = Pattern::new(t, direction, th, delta);
            if let Some((rows, cols)) = pattern.search(n) {
                let ladder = ladder_from_pattern(t, direction, rows, cols);
                debug_assert!(ladder.margin() >= delta);
                return Ok(Some(ladder));
            }
        }
    }
    Ok(None)
}

/// Largest `n` admitting a ladder of margin `delta`; 0 if none exists.
pub fn ladder_index(t: &FormulaTable, delta: f64) -> Result<usize> {
    check_margin(delta)?;
    let max = t.n_rows().min(t.n_cols());
    let mut best = 0;
    for n in 1..=max {
        if find_ladder(t, n, delta)?.is_none() {
            break;
        }
        best = n;
    }
    Ok(best)
}

/// Randomized greedy ladder construction for tables too large for the
/// exhaustive search. Every returned ladder passes [`verify_ladder`].
///
/// Each of the `budget` iterations picks a direction and a threshold at
/// random and grows a ladder one pair at a time, choosing the pair that
/// keeps the most candidates alive (random tie-breaking).
pub fn ladder_lower_bound(
    t: &FormulaTable,
    delta: f64,
    seed: u64,
    budget: usize,
) -> Result<Option<Ladder>> {
    check_margin(delta)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let options: Vec<(Direction, Vec<f64>)> = [Direction::HighAbove, Direction::LowAbove]
        .into_iter()
        .map(|d| (d, thresholds(t, d, delta)))
        .filter(|(_, th)| !th.is_empty())
        .collect();
    if options.is_empty() {
        return Ok(None);
    }
    let cap = t.n_rows().min(t.n_cols());
    let mut best: Option<Ladder> = None;
    for _ in 0..budget {
        let (direction, ths) = &options[rng.gen_range(0..options.len())];
        let th = ths[rng.gen_range(0..ths.len())];
        let pattern = Pattern::new(t, *direction, th, delta);
        let (rows, cols) = greedy_grow(&pattern, &mut rng);
        if rows.len() > best.as_ref().map_or(0, Ladder::len) {
            let ladder = ladder_from_pattern(t, *direction, rows, cols);
            debug_assert!(verify_ladder(t, &ladder).unwrap_or(false));
            best = Some(ladder);
            if best.as_ref().map_or(0, Ladder::len) == cap {
                break;
            }
        }
    }
    Ok(best)
}

fn greedy_grow(p: &Pattern, rng: &mut ChaCha8Rng) -> (Vec<usize>, Vec<usize>) {
    let mut row_cand = Bits::full(p.n_rows);
    let mut col_cand = Bits::full(p.n_cols);
    let mut rows = Vec::new();
    let mut cols = Vec::new();
    loop {
        let mut best_score = None;
        let mut choices: Vec<(usize, usize)> = Vec::new();
        for a in row_cand.iter() {
            let next_cols = col_cand.and(&p.above[a]).count();
            for b in col_cand.iter() {
                if !p.below[b].contains(a) {
                    continue;
                }
                // a and b themselves never survive into the next round
                let next_rows = row_cand.and(&p.below[b]).count() - 1;
                let score = next_rows.min(next_cols);
                match best_score {
                    Some(s) if score < s => {}
                    Some(s) if score == s => choices.push((a, b)),
                    _ => {
                        best_score = Some(score);
                        choices.clear();
                        choices.push((a, b));
                    }
                }
            }
        }
        let Some(&(a, b)) = choices.choose(rng) else {
            return (rows, cols);
        };
        row_cand = row_cand.and(&p.below[b]);
        row_cand.remove(a);
        col_cand = col_cand.and(&p.above[a]);
        col_cand.remove(b);
        rows.push(a);
        cols.push(b);
    }
}

/// Outcome of the iterated-limit estimate. A `None` limit means the
/// window did not settle within the tolerance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DoubleLimitReport {
    /// `lim_n lim_m φ(a_n, b_m)`.
    pub limit_nm: Option<f64>,
    /// `lim_m lim_n φ(a_n, b_m)`.
    pub limit_mn: Option<f64>,
    pub gap: Option<f64>,
    pub window: usize,
    pub tolerance: f64,
}

/// Window limit: `Some(mean)` when the values span at most `tol`. Equal
/// values are returned as-is so eventually constant tails are exact.
fn window_limit(vals: &[f64], tol: f64) -> Option<f64> {
    let first = vals[0];
    if vals.iter().all(|&v| v == first) {
        return Some(first);
    }
    let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (hi - lo <= tol).then(|| vals.iter().sum::<f64>() / vals.len() as f64)
}

/// `lim_outer lim_inner value(outer, inner)`.
///
/// The inner window is the last `w` inner indices; the outer window is the
/// last `w` indices of the first half of the outer sequence, so that the
/// inner index always runs ahead of the outer one.
fn iterated_limit(
    n_outer: usize,
    n_inner: usize,
    w: usize,
    tol: f64,
    value: impl Fn(usize, usize) -> Result<f64>,
) -> Result<Option<f64>> {
    let half = n_outer / 2;
    let mut inner_limits = Vec::with_capacity(w);
    for o in half - w..half {
        let vals = (n_inner - w..n_inner)
            .map(|i| value(o, i))
            .collect::<Result<Vec<_>>>()?;
        match window_limit(&vals, tol) {
            Some(l) => inner_limits.push(l),
            None => return Ok(None),
        }
    }
    Ok(window_limit(&inner_limits, tol))
}

/// Estimates both iterated limits of `e(a_n, b_m)` along the given
/// sequences.
pub fn double_limit(
    e: &KernelExpr,
    xs: &PointSet,
    ys: &PointSet,
    window: usize,
    tol: f64,
) -> Result<DoubleLimitReport> {
    if window < 2 {
        return Err(Error::validation("double-limit window must be at least 2"));
    }
    if tol <= 0.0 || !tol.is_finite() {
        return Err(Error::validation("double-limit tolerance must be positive"));
    }
    if xs.len() < 2 * window || ys.len() < 2 * window {
        return Err(Error::validation(format!(
            "sequences of length {} and {} are too short for window {window} (need {})",
            xs.len(),
            ys.len(),
            2 * window
        )));
    }
    check_dims(e, xs.dim(), ys.dim())?;
    let limit_nm = iterated_limit(xs.len(), ys.len(), window, tol, |n, m| {
        e.eval(xs.get(n), ys.get(m))
    })?;
    let limit_mn = iterated_limit(ys.len(), xs.len(), window, tol, |m, n| {
        e.eval(xs.get(n), ys.get(m))
    })?;
    let gap = match (limit_nm, limit_mn) {
        (Some(a), Some(b)) => Some((a - b).abs()),
        _ => None,
    };
    Ok(DoubleLimitReport {
        limit_nm,
        limit_mn,
        gap,
        window,
        tolerance: tol,
    })
}

fn strictly_monotone(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[0] < w[1]) || v.windows(2).all(|w| w[0] > w[1])
}

/// Double limit along two strictly monotone scalar sequences, the shape of
/// sampling that turns a ladder family into a double-limit gap.
pub fn ladder_to_gap(
    e: &KernelExpr,
    a: &[f64],
    b: &[f64],
    window: usize,
    tol: f64,
) -> Result<DoubleLimitReport> {
    if !strictly_monotone(a) || !strictly_monotone(b) {
        return Err(Error::validation(
            "ladder sampling sequences must be strictly monotone",
        ));
    }
    double_limit(
        e,
        &PointSet::from_scalars(a)?,
        &PointSet::from_scalars(b)?,
        window,
        tol,
    )
}
