//! Defining predicates for types.
//!
//! A type `p` over the columns of a table is defined by a predicate `ψ(y)`
//! when `ψ(b) = p[b]` for every column `b`. Predicates are built from the
//! rows of the table (the instances `φ(a, y)`), either as convex
//! combinations or, for Boolean tables, as strict majority votes over an
//! odd multiset of rows.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lp::{Cmp, LinearProgram};
use crate::table::{check_index, FormulaTable};
use crate::types::{realized_types, sup_dist_slices, TypePoint};

/// Tolerance on the weight sum of a convex definition.
pub const SIMPLEX_TOL: f64 = 1e-9;

/// The type to be defined: a row of the table or an explicit vector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum TargetSpec {
    Row { row: usize },
    Point(Vec<f64>),
}

impl TargetSpec {
    /// The target as a vector over the columns of `t`.
    pub fn resolve(&self, t: &FormulaTable) -> Result<Vec<f64>> {
        match self {
            TargetSpec::Row { row } => {
                check_index("row", *row, t.n_rows())?;
                Ok(t.row(*row).to_vec())
            }
            TargetSpec::Point(v) => Ok(TypePoint::new(v.clone())?.for_table(t)?.values),
        }
    }

    /// Parses `row:<i>` or a comma-separated vector.
    pub fn parse(s: &str) -> Result<Self> {
        if let Some(i) = s.strip_prefix("row:") {
            let row = i
                .trim()
                .parse()
                .map_err(|_| Error::validation(format!("bad row reference `{s}`")))?;
            return Ok(TargetSpec::Row { row });
        }
        s.split(',')
            .map(|v| v.trim().parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map(TargetSpec::Point)
            .map_err(|_| Error::validation(format!("bad target `{s}`")))
    }

    /// Reads a target file: a JSON array of numbers, `{"row": i}`, or a
    /// JSON list of either.
    pub fn load_json(path: impl AsRef<Path>) -> Result<Vec<Self>> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| Error::Io {
            path: path.display().to_string(),
            source,
        })?;
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum OneOrMany {
            One(TargetSpec),
            Many(Vec<TargetSpec>),
        }
        match serde_json::from_str(&text).map_err(|e| Error::Parse {
            line: e.line(),
            column: e.column(),
            message: e.to_string(),
        })? {
            OneOrMany::One(t) => Ok(vec![t]),
            OneOrMany::Many(ts) => Ok(ts),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConvexDefinition {
    /// Row indices, ascending, without duplicates.
    pub support: Vec<usize>,
    pub weights: Vec<f64>,
    /// Verified maximum column error against the target.
    pub sup_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MajorityDefinition {
    /// Multiset of row indices, non-decreasing.
    pub rows: Vec<usize>,
    pub k: usize,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Definition {
    Convex(ConvexDefinition),
    Majority(MajorityDefinition),
}

#[derive(Serialize)]
struct DefinitionJson<'a> {
    kind: &'static str,
    rows: &'a [usize],
    #[serde(skip_serializing_if = "Option::is_none")]
    weights: Option<&'a [f64]>,
    sup_error: f64,
    k: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    exact: Option<bool>,
}

impl Serialize for Definition {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Definition::Convex(c) => DefinitionJson {
                kind: "convex",
                rows: &c.support,
                weights: Some(&c.weights),
                sup_error: c.sup_error,
                k: c.support.len(),
                exact: None,
            },
            Definition::Majority(m) => DefinitionJson {
                kind: "majority",
                rows: &m.rows,
                weights: None,
                sup_error: if m.exact { 0.0 } else { 1.0 },
                k: m.k,
                exact: Some(m.exact),
            },
        }
        .serialize(s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Verification {
    pub ok: bool,
    pub error: f64,
}

fn convex_error(t: &FormulaTable, support: &[usize], weights: &[f64], target: &[f64]) -> f64 {
    (0..t.n_cols())
        .map(|b| {
            let v: f64 = support
                .iter()
                .zip(weights)
                .map(|(&a, w)| w * t.get(a, b))
                .sum();
            (v - target[b]).abs()
        })
        .fold(0.0, f64::max)
}

fn majority_vote(t: &FormulaTable, rows: &[usize], b: usize) -> f64 {
    let ones = rows.iter().filter(|&&a| t.get(a, b) == 1.0).count();
    if 2 * ones > rows.len() {
        1.0
    } else {
        0.0
    }
}

fn majority_matches(t: &FormulaTable, rows: &[usize], target: &[f64]) -> bool {
    (0..t.n_cols()).all(|b| majority_vote(t, rows, b) == target[b])
}

/// Recomputes the error of a definition against `target`.
///
/// Convex definitions pass when their error is at most `tol`; majority
/// definitions must match exactly and report an error of 0 or 1.
pub fn verify_definition(
    t: &FormulaTable,
    def: &Definition,
    target: &TargetSpec,
    tol: f64,
) -> Result<Verification> {
    let p = target.resolve(t)?;
    match def {
        Definition::Convex(c) => {
            check_convex(t, c)?;
            let error = convex_error(t, &c.support, &c.weights, &p);
            Ok(Verification {
                ok: error <= tol,
                error,
            })
        }
        Definition::Majority(m) => {
            if m.rows.len() != m.k || m.k % 2 == 0 {
                return Err(Error::validation(
                    "majority definitions need an odd k equal to the row count",
                ));
            }
            for &a in &m.rows {
                check_index("row", a, t.n_rows())?;
            }
            let ok = majority_matches(t, &m.rows, &p);
            Ok(Verification {
                ok,
                error: if ok { 0.0 } else { 1.0 },
            })
        }
    }
}

fn check_convex(t: &FormulaTable, c: &ConvexDefinition) -> Result<()> {
    if c.support.is_empty() || c.support.len() != c.weights.len() {
        return Err(Error::validation(
            "convex support and weights must be non-empty and aligned",
        ));
    }
    let mut seen = vec![false; t.n_rows()];
    for &a in &c.support {
        check_index("row", a, t.n_rows())?;
        if std::mem::replace(&mut seen[a], true) {
            return Err(Error::validation(format!(
                "row {a} repeated in convex support"
            )));
        }
    }
    if c.weights.iter().any(|&w| !(w >= 0.0)) {
        return Err(Error::validation("convex weights must be non-negative"));
    }
    let sum: f64 = c.weights.iter().sum();
    if (sum - 1.0).abs() > SIMPLEX_TOL {
        return Err(Error::validation(format!(
            "convex weights sum to {sum}, not 1"
        )));
    }
    Ok(())
}

fn check_candidates(t: &FormulaTable, candidates: &[usize]) -> Result<Vec<usize>> {
    if candidates.is_empty() {
        return Err(Error::validation("candidate row set is empty"));
    }
    let mut c = candidates.to_vec();
    for &a in &c {
        check_index("row", a, t.n_rows())?;
    }
    c.sort_unstable();
    c.dedup();
    Ok(c)
}

/// Best convex approximation of the target by the candidate rows in the
/// uniform norm, solved exactly as a linear program:
///
/// ```text
/// minimize e  subject to  |Σ_i w_i·t[a_i][b] - p[b]| <= e  for all b,
///                          w >= 0,  Σ_i w_i = 1
/// ```
///
/// A candidate equal to the target is returned directly with weight 1.
pub fn lp_define(
    t: &FormulaTable,
    target: &TargetSpec,
    candidates: &[usize],
) -> Result<ConvexDefinition> {
    let cand = check_candidates(t, candidates)?;
    let p = target.resolve(t)?;
    if let Some(&a) = cand.iter().find(|&&a| t.row(a) == p.as_slice()) {
        return Ok(ConvexDefinition {
            support: vec![a],
            weights: vec![1.0],
            sup_error: 0.0,
        });
    }

    let k = cand.len();
    let mut objective = vec![0.0; k + 1];
    objective[k] = 1.0;
    let mut lp = LinearProgram::minimize(objective);
    for b in 0..t.n_cols() {
        let mut plus: Vec<f64> = cand.iter().map(|&a| t.get(a, b)).collect();
        plus.push(-1.0);
        let mut minus: Vec<f64> = cand.iter().map(|&a| -t.get(a, b)).collect();
        minus.push(-1.0);
        lp.constraint(plus, Cmp::Le, p[b]);
        lp.constraint(minus, Cmp::Le, -p[b]);
    }
    let mut simplex = vec![1.0; k];
    simplex.push(0.0);
    lp.constraint(simplex, Cmp::Eq, 1.0);
    let sol = lp.solve()?;

    let total: f64 = sol.x[..k].iter().sum();
    if !(total > 0.0) {
        return Err(Error::Numeric("LP returned an empty combination".into()));
    }
    let (support, weights): (Vec<usize>, Vec<f64>) = cand
        .iter()
        .zip(&sol.x[..k])
        .filter(|(_, &w)| w > 1e-13)
        .map(|(&a, &w)| (a, w / total))
        .unzip();
    let sup_error = convex_error(t, &support, &weights, &p);
    Ok(ConvexDefinition {
        support,
        weights,
        sup_error,
    })
}

/// Additive slack of [`greedy_define`] over the LP optimum:
/// `2·sqrt(ln(2c)/T)`.
pub fn greedy_bound(cols: usize, rounds: usize) -> f64 {
    2.0 * ((2.0 * cols as f64).ln() / rounds as f64).sqrt()
}

/// Uniform average of `rounds` rows chosen by multiplicative weights.
///
/// The adversary keeps a distribution over the `2c` signed column errors
/// `±(t[a][b] - p[b])`. Each round the row minimizing the weighted signed
/// error is chosen; ties go to the row closest to the target in the
/// uniform norm, then to the lowest index. Constraint weights are then
/// multiplied by `exp(η·error)` with `η = sqrt(ln(2c)/T)`. The resulting
/// average is within [`greedy_bound`] of the best convex combination.
pub fn greedy_define(
    t: &FormulaTable,
    target: &TargetSpec,
    rounds: usize,
) -> Result<ConvexDefinition> {
    if rounds == 0 {
        return Err(Error::validation("greedy rounds must be at least 1"));
    }
    let p = target.resolve(t)?;
    let c = t.n_cols();
    let eta = ((2.0 * c as f64).ln() / rounds as f64).sqrt();
    let closeness: Vec<f64> = t.rows().map(|r| sup_dist_slices(r, &p)).collect();

    // log-weights of the +error and -error constraints per column
    let mut log_plus = vec![0.0f64; c];
    let mut log_minus = vec![0.0f64; c];
    let mut counts = vec![0usize; t.n_rows()];
    let mut signed = vec![0.0; c];
    for _ in 0..rounds {
        let top = log_plus
            .iter()
            .chain(&log_minus)
            .copied()
            .fold(f64::NEG_INFINITY, f64::max);
        let mut z = 0.0;
        for b in 0..c {
            let (qp, qm) = ((log_plus[b] - top).exp(), (log_minus[b] - top).exp());
            signed[b] = qp - qm;
            z += qp + qm;
        }
        let mut best = (f64::INFINITY, f64::INFINITY, usize::MAX);
        for (a, row) in t.rows().enumerate() {
            let score: f64 = (0..c).map(|b| signed[b] / z * (row[b] - p[b])).sum();
            let key = (score, closeness[a], a);
            if key.0 < best.0 || (key.0 == best.0 && (key.1, key.2) < (best.1, best.2)) {
                best = key;
            }
        }
        let a = best.2;
        counts[a] += 1;
        let row = t.row(a);
        for b in 0..c {
            let err = row[b] - p[b];
            log_plus[b] += eta * err;
            log_minus[b] -= eta * err;
        }
    }
    let (support, weights): (Vec<usize>, Vec<f64>) = counts
        .iter()
        .enumerate()
        .filter(|(_, &n)| n > 0)
        .map(|(a, &n)| (a, n as f64 / rounds as f64))
        .unzip();
    let sup_error = convex_error(t, &support, &weights, &p);
    Ok(ConvexDefinition {
        support,
        weights,
        sup_error,
    })
}

fn boolean_target(t: &FormulaTable, target: &TargetSpec) -> Result<Vec<f64>> {
    if !t.is_boolean() {
        return Err(Error::validation(
            "majority definitions need a Boolean table",
        ));
    }
    let p = target.resolve(t)?;
    if p.iter().any(|&v| v != 0.0 && v != 1.0) {
        return Err(Error::validation(
            "majority definitions need a {0,1}-valued target",
        ));
    }
    Ok(p)
}

fn check_k_max(k_max: usize) -> Result<()> {
    if k_max % 2 == 1 {
        Ok(())
    } else {
        Err(Error::validation(format!("k_max must be odd, got {k_max}")))
    }
}

/// Searches multisets of exactly `k` rows, lexicographically, for one
/// whose strict majority equals the target at every column.
fn majority_with_k(t: &FormulaTable, p: &[f64], k: usize) -> Option<Vec<usize>> {
    // identical rows are interchangeable; keep the first of each
    let mut distinct: Vec<usize> = Vec::new();
    for a in 0..t.n_rows() {
        if !distinct.iter().any(|&d| t.row(d) == t.row(a)) {
            distinct.push(a);
        }
    }
    let agree: Vec<Vec<bool>> = distinct
        .iter()
        .map(|&a| (0..t.n_cols()).map(|b| t.get(a, b) == p[b]).collect())
        .collect();
    let need = k.div_ceil(2);
    let mut votes = vec![0usize; t.n_cols()];
    let mut chosen = Vec::with_capacity(k);

    fn go(
        agree: &[Vec<bool>],
        start: usize,
        left: usize,
        need: usize,
        votes: &mut [usize],
        chosen: &mut Vec<usize>,
    ) -> bool {
        if votes.iter().any(|&v| v + left < need) {
            return false;
        }
        if left == 0 {
            return true;
        }
        for i in start..agree.len() {
            for (v, &ok) in votes.iter_mut().zip(&agree[i]) {
                *v += usize::from(ok);
            }
            chosen.push(i);
            if go(agree, i, left - 1, need, votes, chosen) {
                return true;
            }
            chosen.pop();
            for (v, &ok) in votes.iter_mut().zip(&agree[i]) {
                *v -= usize::from(ok);
            }
        }
        false
    }

    go(&agree, 0, k, need, &mut votes, &mut chosen)
        .then(|| chosen.into_iter().map(|i| distinct[i]).collect())
}

/// Smallest odd `k <= k_max` and a multiset of `k` rows whose strict
/// majority vote equals the Boolean target at every column.
pub fn majority_define(
    t: &FormulaTable,
    target: &TargetSpec,
    k_max: usize,
) -> Result<Option<MajorityDefinition>> {
    check_k_max(k_max)?;
    let p = boolean_target(t, target)?;
    Ok((1..=k_max).step_by(2).find_map(|k| {
        majority_with_k(t, &p, k).map(|rows| MajorityDefinition {
            rows,
            k,
            exact: true,
        })
    }))
}

/// A family of Boolean tables, each with the targets to be defined.
#[derive(Debug, Clone)]
pub struct Instance {
    pub table: FormulaTable,
    pub targets: Vec<TargetSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniformBound {
    /// Smallest odd `k` that defines every target with exactly `k` rows.
    pub k: Option<usize>,
    /// Minimal `k` per instance and target.
    pub per_target: Vec<Vec<Option<usize>>>,
    /// `(instance, target)` of the first target that blocks a uniform `k`.
    pub failing: Option<(usize, usize)>,
}

/// Smallest single odd `k <= k_max` such that every target of every
/// instance is a strict majority of exactly `k` rows (repetitions allowed).
///
/// Each target is tested at every odd size rather than padded from its
/// minimal size, since definability at `k` need not carry over to `k + 2`.
pub fn uniform_majority_bound(instances: &[Instance], k_max: usize) -> Result<UniformBound> {
    check_k_max(k_max)?;
    let sizes: Vec<usize> = (1..=k_max).step_by(2).collect();
    let mut feasible: Vec<Vec<Vec<bool>>> = Vec::with_capacity(instances.len());
    for inst in instances {
        let mut per = Vec::with_capacity(inst.targets.len());
        for target in &inst.targets {
            let p = boolean_target(&inst.table, target)?;
            per.push(
                sizes
                    .iter()
                    .map(|&k| majority_with_k(&inst.table, &p, k).is_some())
                    .collect(),
            );
        }
        feasible.push(per);
    }
    let per_target = feasible
        .iter()
        .map(|per| {
            per.iter()
                .map(|f| f.iter().position(|&x| x).map(|i| sizes[i]))
                .collect()
        })
        .collect();
    let k = (0..sizes.len())
        .find(|&i| feasible.iter().flatten().all(|f| f[i]))
        .map(|i| sizes[i]);
    let failing = if k.is_some() {
        None
    } else {
        let flat = || {
            feasible
                .iter()
                .enumerate()
                .flat_map(|(i, per)| per.iter().enumerate().map(move |(j, f)| ((i, j), f)))
        };
        flat()
            .find(|(_, f)| f.iter().all(|&x| !x))
            .or_else(|| flat().find(|(_, f)| !f[sizes.len() - 1]))
            .map(|(ij, _)| ij)
    };
    Ok(UniformBound {
        k,
        per_target,
        failing,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TypeRecord {
    pub representative: usize,
    pub multiplicity: usize,
    pub lp_error: f64,
    pub greedy_error: f64,
    /// Minimal majority size, for Boolean tables.
    pub majority_k: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DefinabilityReport {
    pub rounds: usize,
    pub k_max: usize,
    pub types: Vec<TypeRecord>,
    pub max_lp_error: f64,
    pub max_greedy_error: f64,
    pub max_k: Option<usize>,
    /// `(tolerance, number of types whose LP error is within it)`.
    pub defined_within: Vec<(f64, usize)>,
}

/// Defines every realized type of `t` from all rows and tabulates the
/// errors.
pub fn definability_report(
    t: &FormulaTable,
    tolerances: &[f64],
    rounds: usize,
    k_max: usize,
) -> Result<DefinabilityReport> {
    check_k_max(k_max)?;
    let all: Vec<usize> = (0..t.n_rows()).collect();
    let types = realized_types(t, 0.0)?;
    let records = types
        .par_iter()
        .map(|ty| {
            let target = TargetSpec::Row {
                row: ty.representative,
            };
            let lp = lp_define(t, &target, &all)?;
            let greedy = greedy_define(t, &target, rounds)?;
            let majority_k = if t.is_boolean() {
                majority_define(t, &target, k_max)?.map(|m| m.k)
            } else {
                None
            };
            Ok(TypeRecord {
                representative: ty.representative,
                multiplicity: ty.multiplicity(),
                lp_error: lp.sup_error,
                greedy_error: greedy.sup_error,
                majority_k,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let max_lp_error = records.iter().map(|r| r.lp_error).fold(0.0, f64::max);
    let max_greedy_error = records.iter().map(|r| r.greedy_error).fold(0.0, f64::max);
    let max_k = records.iter().filter_map(|r| r.majority_k).max();
    let defined_within = tolerances
        .iter()
        .map(|&tol| (tol, records.iter().filter(|r| r.lp_error <= tol).count()))
        .collect();
    Ok(DefinabilityReport {
        rounds,
        k_max,
        types: records,
        max_lp_error,
        max_greedy_error,
        max_k,
        defined_within,
    })
}
