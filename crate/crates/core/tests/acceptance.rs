//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each,
//! and exits nonzero if any criterion fails.
//!
//! The oracles here are deliberately naive and share no code with the
//! library searches they check.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use stabdef::kernel::{parse, sample_table, PointSet};
use stabdef::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 10] = [
        ("ladder oracle agreement", c1_ladder_oracle),
        ("transpose duality", c2_transpose_duality),
        ("canonical values", c3_canonical),
        ("double-limit gap", c4_double_limit),
        ("stability plateau", c5_plateau),
        ("lp/greedy sandwich", c6_sandwich),
        ("majority oracle agreement", c7_majority),
        ("self-definability sweep", c8_self_definability),
        ("subsequence contract", c9_subsequence),
        (
            "parser round-trip and cli determinism",
            c10_roundtrip_determinism,
        ),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let o = run();
        let verdict = if o.pass { "PASS" } else { "FAIL" };
        println!(
            "criterion {:>2} {verdict}  {name}: {} [{:.2?}]",
            i + 1,
            o.detail,
            start.elapsed()
        );
        failed += usize::from(!o.pass);
    }
    println!(
        "{} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    if failed > 0 {
        std::process::exit(1);
    }
}

// ---------------------------------------------------------------- corpus

fn matrix(rows: usize, cols: usize, mut cell: impl FnMut() -> f64) -> FormulaTable {
    let rows: Vec<Vec<f64>> = (0..rows)
        .map(|_| (0..cols).map(|_| cell()).collect())
        .collect();
    FormulaTable::from_rows(&rows).unwrap()
}

fn random_table(rng: &mut ChaCha8Rng, boolean: bool, max_dim: usize) -> FormulaTable {
    let r = rng.gen_range(1..=max_dim);
    let c = rng.gen_range(1..=max_dim);
    let rows: Vec<Vec<f64>> = (0..r)
        .map(|_| {
            (0..c)
                .map(|_| {
                    if boolean {
                        f64::from(u8::from(rng.gen_bool(0.5)))
                    } else {
                        // a coarse grid so margins hit thresholds exactly
                        f64::from(rng.gen_range(0..=20u8)) / 20.0
                    }
                })
                .collect()
        })
        .collect();
    FormulaTable::from_rows(&rows).unwrap()
}

fn ladder_corpus() -> Vec<FormulaTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x1add);
    let mut out: Vec<FormulaTable> = (0..100).map(|_| random_table(&mut rng, true, 6)).collect();
    out.extend((0..100).map(|_| random_table(&mut rng, false, 6)));
    out
}

const MARGINS: [f64; 3] = [1.0, 0.5, 0.25];

// ---------------------------------------------------------------- oracles

/// All ordered sequences of `n` distinct indices below `m`.
fn arrangements(m: usize, n: usize) -> Vec<Vec<usize>> {
    let mut out: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..n {
        let mut next = Vec::new();
        for p in &out {
            for i in (0..m).filter(|i| !p.contains(i)) {
                let mut q = p.clone();
                q.push(i);
                next.push(q);
            }
        }
        out = next;
    }
    out
}

/// Best ladder margin of each length `1..=min(rows, cols)` over both
/// orientations, by brute force. `best[n - 1]` is the margin for length n.
fn brute_margins(t: &FormulaTable) -> Vec<f64> {
    let max = t.n_rows().min(t.n_cols());
    let mut best = Vec::new();
    for n in 1..=max {
        if best.last().is_some_and(|&m: &f64| m < 0.25) {
            // a ladder restricts to shorter ladders with the same margin
            best.push(f64::NEG_INFINITY);
            continue;
        }
        let rows = arrangements(t.n_rows(), n);
        let cols = arrangements(t.n_cols(), n);
        let mut m = f64::NEG_INFINITY;
        for a in &rows {
            for b in &cols {
                let (mut up_min, mut up_max) = (f64::INFINITY, f64::NEG_INFINITY);
                let (mut lo_min, mut lo_max) = (f64::INFINITY, f64::NEG_INFINITY);
                for i in 0..n {
                    for j in 0..n {
                        let v = t.get(a[i], b[j]);
                        if i < j {
                            up_min = up_min.min(v);
                            up_max = up_max.max(v);
                        } else {
                            lo_min = lo_min.min(v);
                            lo_max = lo_max.max(v);
                        }
                    }
                }
                // high above the diagonal: s = min upper (1 if none), r = max lower
                let high = if n == 1 { 1.0 } else { up_min } - lo_max;
                // low above the diagonal: s = min lower, r = max upper (0 if none)
                let low = lo_min - if n == 1 { 0.0 } else { up_max };
                m = m.max(high).max(low);
            }
        }
        best.push(m);
    }
    best
}

fn brute_index(margins: &[f64], delta: f64) -> usize {
    margins
        .iter()
        .rposition(|&m| m >= delta)
        .map_or(0, |p| p + 1)
}

// ---------------------------------------------------------------- criteria

fn c1_ladder_oracle() -> Outcome {
    let start = Instant::now();
    let corpus = ladder_corpus();
    let mut checked = 0;
    let mut mismatches = Vec::new();
    for (k, t) in corpus.iter().enumerate() {
        let margins = brute_margins(t);
        for &delta in &MARGINS {
            let got = ladder_index(t, delta).unwrap();
            let want = brute_index(&margins, delta);
            checked += 1;
            if got != want {
                mismatches.push(format!("table {k} delta {delta}: {got} vs {want}"));
            }
        }
    }
    let elapsed = start.elapsed();
    let pass = mismatches.is_empty() && elapsed < Duration::from_secs(60);
    outcome(
        pass,
        format!(
            "{}/{checked} instances agree, {elapsed:.2?} (limit 60s){}",
            checked - mismatches.len(),
            mismatches
                .first()
                .map_or(String::new(), |m| format!("; first mismatch {m}"))
        ),
    )
}

fn c2_transpose_duality() -> Outcome {
    let corpus = ladder_corpus();
    let mut bad = 0;
    let mut n = 0;
    for t in &corpus {
        let tt = t.transpose();
        for &delta in &MARGINS {
            n += 1;
            if ladder_index(t, delta).unwrap() != ladder_index(&tt, delta).unwrap() {
                bad += 1;
            }
        }
    }
    outcome(bad == 0, format!("{}/{n} instances agree", n - bad))
}

fn c3_canonical() -> Outcome {
    let mut notes = Vec::new();
    for n in 2..=7 {
        let got = ladder_index(&FormulaTable::half_graph(n), 1.0).unwrap();
        if got != n {
            notes.push(format!("half-graph {n} -> {got}"));
        }
    }
    for n in 3..=6 {
        let t = FormulaTable::identity(n);
        let got = ladder_index(&t, 1.0).unwrap();
        let oracle = brute_index(&brute_margins(&t), 1.0);
        if got != 2 || oracle != 2 {
            notes.push(format!("identity {n} -> {got} (oracle {oracle})"));
        }
    }
    let z4 = FormulaTable::from_group(&GroupFunction::cyclic(vec![0.0, 1.0, 0.0, 1.0])).unwrap();
    let got = ladder_index(&z4, 1.0).unwrap();
    let oracle = brute_index(&brute_margins(&z4), 1.0);
    if got != 1 || oracle != 1 {
        notes.push(format!("Z4 parity -> {got} (oracle {oracle})"));
    }
    if notes.is_empty() {
        outcome(
            true,
            "half-graph 2..7 = n, identity 3..6 = 2, Z4 parity = 1",
        )
    } else {
        outcome(false, notes.join(", "))
    }
}

fn c4_double_limit() -> Outcome {
    let start = Instant::now();
    let lt = parse("lt(x[0], y[0])").unwrap();
    let a: Vec<f64> = (1..=20).map(|n| 1.0 - 2f64.powi(-n)).collect();
    let b: Vec<f64> = (1..=20).map(|m| 1.0 - 3f64.powi(-m)).collect();
    let unstable = ladder_to_gap(&lt, &a, &b, 5, 0.01).unwrap();

    let dot = parse("0.5 * (1 + dot(x, y))").unwrap();
    let basis: Vec<Vec<f64>> = (0..20)
        .map(|n| (0..20).map(|k| f64::from(u8::from(k == n))).collect())
        .collect();
    let pts = PointSet::new(basis).unwrap();
    let stable = double_limit(&dot, &pts, &pts, 5, 0.01).unwrap();
    let elapsed = start.elapsed();

    let pass =
        unstable.gap == Some(1.0) && stable.gap == Some(0.0) && elapsed < Duration::from_secs(1);
    outcome(
        pass,
        format!(
            "lt gap {:?} (limits {:?}/{:?}), dot gap {:?} (limits {:?}/{:?}), {elapsed:.2?} (limit 1s)",
            unstable.gap, unstable.limit_nm, unstable.limit_mn, stable.gap, stable.limit_nm, stable.limit_mn
        ),
    )
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-3 && norm <= 1.0 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn c5_plateau() -> Outcome {
    const SIZES: [usize; 3] = [10, 20, 30];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let xs: Vec<Vec<f64>> = (0..30).map(|_| unit_vector(&mut rng, 3)).collect();
    let ys: Vec<Vec<f64>> = (0..30).map(|_| unit_vector(&mut rng, 3)).collect();
    let scalars: Vec<Vec<f64>> = (0..30).map(|_| vec![rng.gen::<f64>()]).collect();
    let dot = parse("0.5 * (1 + dot(x, y))").unwrap();
    let lt = parse("lt(x[0], y[0])").unwrap();

    let mut dot_idx = Vec::new();
    let mut lt_idx = Vec::new();
    let mut heuristic_ok = true;
    for n in SIZES {
        let t = sample_table(
            &dot,
            &PointSet::new(xs[..n].to_vec()).unwrap(),
            &PointSet::new(ys[..n].to_vec()).unwrap(),
        )
        .unwrap();
        let exact = ladder_index(&t, 0.5).unwrap();
        let lower = ladder_lower_bound(&t, 0.5, 0, 200)
            .unwrap()
            .map_or(0, |l| l.len());
        heuristic_ok &= lower <= exact;
        dot_idx.push(exact);

        let s = PointSet::new(scalars[..n].to_vec()).unwrap();
        lt_idx.push(ladder_index(&sample_table(&lt, &s, &s).unwrap(), 0.5).unwrap());
    }
    let plateau = dot_idx.windows(2).all(|w| w[0] == w[1]);
    let linear = lt_idx.iter().zip(SIZES).all(|(&k, n)| k == n);
    outcome(
        plateau && linear && heuristic_ok,
        format!(
            "dot index at 10/20/30 = {dot_idx:?} (plateau required), lt index = {lt_idx:?}, \
             heuristic <= exact: {heuristic_ok}"
        ),
    )
}

/// Smallest sup error over the weight grid with step 1/100, or a witness
/// below `floor`. Branch and bound: a partial assignment is dropped when
/// every completion is provably at least `floor` away at some column.
fn grid_beats(t: &FormulaTable, target: &[f64], floor: f64) -> Option<f64> {
    const STEPS: u32 = 100;
    let m = t.n_rows();
    let c = t.n_cols();
    // suffix ranges of each column over rows i..m
    let mut lo = vec![vec![f64::INFINITY; c]; m + 1];
    let mut hi = vec![vec![f64::NEG_INFINITY; c]; m + 1];
    for i in (0..m).rev() {
        for b in 0..c {
            lo[i][b] = lo[i + 1][b].min(t.get(i, b));
            hi[i][b] = hi[i + 1][b].max(t.get(i, b));
        }
    }
    struct Ctx<'a> {
        t: &'a FormulaTable,
        target: &'a [f64],
        floor: f64,
        lo: Vec<Vec<f64>>,
        hi: Vec<Vec<f64>>,
        // partial[i][b]: column b of the weighted sum over rows 0..i
        partial: Vec<Vec<f64>>,
    }
    fn go(cx: &mut Ctx, i: usize, left: u32) -> Option<f64> {
        let m = cx.t.n_rows();
        let c = cx.t.n_cols();
        let rest = f64::from(left) / f64::from(STEPS);
        if i == m - 1 {
            let err = (0..c)
                .map(|b| (cx.partial[i][b] + rest * cx.t.get(i, b) - cx.target[b]).abs())
                .fold(0.0, f64::max);
            return (err < cx.floor).then_some(err);
        }
        let bound = (0..c)
            .map(|b| {
                let p = cx.partial[i][b];
                let (l, h) = (p + rest * cx.lo[i][b], p + rest * cx.hi[i][b]);
                (l - cx.target[b]).max(cx.target[b] - h).max(0.0)
            })
            .fold(0.0, f64::max);
        if bound >= cx.floor {
            return None;
        }
        for u in 0..=left {
            let w = f64::from(u) / f64::from(STEPS);
            for b in 0..c {
                cx.partial[i + 1][b] = cx.partial[i][b] + w * cx.t.get(i, b);
            }
            if let Some(hit) = go(cx, i + 1, left - u) {
                return Some(hit);
            }
        }
        None
    }
    let mut cx = Ctx {
        t,
        target,
        floor,
        lo,
        hi,
        partial: vec![vec![0.0; c]; m + 1],
    };
    go(&mut cx, 0, STEPS)
}

fn c6_sandwich() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let instances: Vec<(FormulaTable, Vec<f64>)> = (0..100)
        .map(|_| {
            let (r, c) = (rng.gen_range(1..=8), rng.gen_range(1..=8));
            let t = matrix(r, c, || rng.gen::<f64>());
            let target = (0..c).map(|_| rng.gen()).collect();
            (t, target)
        })
        .collect();
    let results: Vec<(f64, Option<String>)> = instances
        .par_iter()
        .enumerate()
        .map(|(k, (t, target))| {
            let spec = TargetSpec::Point(target.clone());
            let all: Vec<usize> = (0..t.n_rows()).collect();
            let lp = lp_define(t, &spec, &all).unwrap();
            let greedy = greedy_define(t, &spec, 1000).unwrap();
            let allowance = 2.0 * ((2.0 * t.n_cols() as f64).ln() / 1000.0).sqrt();
            let headroom = lp.sup_error + allowance - greedy.sup_error;
            let note = if let Some(err) = grid_beats(t, target, lp.sup_error - 1e-9) {
                Some(format!(
                    "instance {k}: grid point error {err} below lp {}",
                    lp.sup_error
                ))
            } else if headroom < 0.0 {
                Some(format!(
                    "instance {k}: greedy {} exceeds lp {} + {allowance}",
                    greedy.sup_error, lp.sup_error
                ))
            } else {
                None
            };
            (headroom, note)
        })
        .collect();
    let worst = results.iter().map(|r| r.0).fold(f64::INFINITY, f64::min);
    let notes: Vec<&String> = results.iter().filter_map(|r| r.1.as_ref()).collect();
    outcome(
        notes.is_empty(),
        format!(
            "100 instances, lp <= every grid point (step 1e-2, slack 1e-9), min greedy headroom {worst:.4}{}",
            notes.first().map_or(String::new(), |n| format!("; {n}"))
        ),
    )
}

fn multisets(m: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(m: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in from..m {
            cur.push(i);
            rec(m, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(m, k, 0, &mut Vec::new(), &mut out);
    out
}

fn brute_majority_k(t: &FormulaTable, target: &[f64], k_max: usize) -> Option<usize> {
    (1..=k_max).step_by(2).find(|&k| {
        multisets(t.n_rows(), k).iter().any(|rows| {
            (0..t.n_cols()).all(|b| {
                let ones = rows.iter().filter(|&&a| t.get(a, b) == 1.0).count();
                f64::from(u8::from(2 * ones > k)) == target[b]
            })
        })
    })
}

fn c7_majority() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut agree = 0;
    let mut verified = true;
    let mut notes = Vec::new();
    for k in 0..100 {
        let t = matrix(5, 5, || f64::from(u8::from(rng.gen_bool(0.5))));
        let spec = if k % 2 == 0 {
            TargetSpec::Row {
                row: rng.gen_range(0..5),
            }
        } else {
            TargetSpec::Point(
                (0..5)
                    .map(|_| f64::from(u8::from(rng.gen_bool(0.5))))
                    .collect(),
            )
        };
        let target = spec.resolve(&t).unwrap();
        let got = majority_define(&t, &spec, 5).unwrap();
        let want = brute_majority_k(&t, &target, 5);
        if got.as_ref().map(|d| d.k) == want {
            agree += 1;
        } else {
            notes.push(format!(
                "instance {k}: {:?} vs {want:?}",
                got.as_ref().map(|d| d.k)
            ));
        }
        if let Some(d) = got {
            let v = verify_definition(&t, &Definition::Majority(d), &spec, 0.0).unwrap();
            verified &= v.ok && v.error == 0.0;
        }
    }
    outcome(
        agree == 100 && verified,
        format!(
            "{agree}/100 minimal k agree, all definitions verify exactly: {verified}{}",
            notes.first().map_or(String::new(), |n| format!("; {n}"))
        ),
    )
}

fn canonical_corpus() -> Vec<(String, FormulaTable)> {
    let mut out = Vec::new();
    for n in 2..=7 {
        out.push((format!("half-graph {n}"), FormulaTable::half_graph(n)));
    }
    for n in 3..=6 {
        out.push((format!("identity {n}"), FormulaTable::identity(n)));
    }
    out.push((
        "constant 1".into(),
        FormulaTable::constant(3, 4, 1.0).unwrap(),
    ));
    out.push((
        "constant 0.5".into(),
        FormulaTable::constant(3, 4, 0.5).unwrap(),
    ));
    out.push((
        "Z4 parity".into(),
        FormulaTable::from_group(&GroupFunction::cyclic(vec![0.0, 1.0, 0.0, 1.0])).unwrap(),
    ));
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let xs = PointSet::new((0..8).map(|_| unit_vector(&mut rng, 3)).collect()).unwrap();
    let ys = PointSet::new((0..8).map(|_| unit_vector(&mut rng, 3)).collect()).unwrap();
    out.push((
        "dot-kernel sample".into(),
        sample_table(&parse("0.5 * (1 + dot(x, y))").unwrap(), &xs, &ys).unwrap(),
    ));
    out
}

fn c8_self_definability() -> Outcome {
    let mut types = 0;
    let mut notes = Vec::new();
    for (name, t) in canonical_corpus() {
        let all: Vec<usize> = (0..t.n_rows()).collect();
        for ty in realized_types(&t, 0.0).unwrap() {
            types += 1;
            let spec = TargetSpec::Row {
                row: ty.representative,
            };
            let lp = lp_define(&t, &spec, &all).unwrap();
            if lp.sup_error != 0.0 {
                notes.push(format!(
                    "{name} row {}: lp error {}",
                    ty.representative, lp.sup_error
                ));
            }
            // majority votes are only defined on Boolean tables
            if t.is_boolean() {
                let k = majority_define(&t, &spec, 5).unwrap().map(|d| d.k);
                if k != Some(1) {
                    notes.push(format!(
                        "{name} row {}: majority k {k:?}",
                        ty.representative
                    ));
                }
            }
        }
    }
    outcome(
        notes.is_empty(),
        format!(
            "{types} realized types over the canonical corpus{}",
            notes.first().map_or(String::new(), |n| format!("; {n}"))
        ),
    )
}

fn c9_subsequence() -> Outcome {
    const TOL: f64 = 0.1;
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut ok = 0;
    let mut lengths = Vec::new();
    for _ in 0..100 {
        let c = rng.gen_range(1..=4);
        let rows: Vec<TypePoint> = (0..64)
            .map(|_| TypePoint::new((0..c).map(|_| rng.gen()).collect()).unwrap())
            .collect();
        let sub = extract_convergent_subsequence(&rows, TOL).unwrap();
        let idx = &sub.indices;
        let increasing =
            !idx.is_empty() && idx.windows(2).all(|w| w[0] < w[1]) && idx.iter().all(|&i| i < 64);
        let oscillation = (0..c)
            .map(|b| {
                let vals = idx.iter().map(|&i| rows[i].values[b]);
                vals.clone().fold(f64::NEG_INFINITY, f64::max) - vals.fold(f64::INFINITY, f64::min)
            })
            .fold(0.0, f64::max);
        if increasing && oscillation <= TOL {
            ok += 1;
        }
        lengths.push(idx.len());
    }
    outcome(
        ok == 100,
        format!(
            "{ok}/100 pass (subsequence length min {} max {})",
            lengths.iter().min().unwrap(),
            lengths.iter().max().unwrap()
        ),
    )
}

const EXPRESSIONS: [&str; 50] = [
    "0.5*(1+dot(x,y))",
    "lt(x[0],y[0])",
    "le(x[0], y[0])",
    "x[0]",
    "y[2]",
    "1",
    "0.25",
    "1e-3",
    "2.5E2",
    "-x[0]",
    "--x[0]",
    "-(x[0]+y[0])",
    "x[0]-y[0]-x[1]",
    "x[0]-(y[0]-x[1])",
    "x[0]/y[0]/2",
    "x[0]/(y[0]/2)",
    "x[0]*y[0]+x[1]*y[1]",
    "(x[0]+y[0])*(x[1]+y[1])",
    "abs(x[0]-y[0])",
    "1-abs(x[0]-y[0])",
    "min(x[0],y[0])",
    "max(x[0], min(y[0], 0.5))",
    "pow(x[0],2)",
    "pow(x[0]+1, y[0])",
    "dist2(x,y)",
    "dist2(y,x)",
    "1/(1+dist2(x,y))",
    "dot(y,x)",
    "0.5*(1-dot(x,y))",
    "max(0,min(1,dot(x,y)))",
    "lt(x[0]+y[0],1)",
    "le(abs(x[0]),abs(y[0]))",
    "lt(x[0],y[0])*le(y[1],x[1])",
    "1-lt(x[0],y[0])",
    "(((x[0])))",
    "x[0]*(y[0]*x[1])",
    "(x[0]*y[0])*x[1]",
    "x[0]+(y[0]+x[1])",
    "x[0]-(-y[0])",
    "-x[0]*y[0]",
    "-(x[0]*y[0])",
    "(-x[0])*y[0]",
    "x[0]*-y[0]",
    "min(max(x[0],y[0]),max(x[1],y[1]))",
    "abs(-x[0])",
    "pow(abs(x[0]-y[0]),0.5)",
    "x[10]+y[11]",
    "0.1*x[0]+0.2*x[1]+0.3*x[2]",
    "lt(dot(x,y),0.5)",
    "  le ( x[0] , 0.5 )  ",
];

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("tests/data")
        .join(name)
}

/// Runs the CLI and returns stdout, or the report file when `--json` is
/// requested, with the timing map blanked.
fn run_cli(args: &[&str], json: Option<&Path>) -> std::result::Result<String, String> {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_stabdef"));
    cmd.args(args).arg("--seed").arg("3").arg("--jobs").arg("2");
    if let Some(p) = json {
        cmd.arg("--json").arg(p).arg("--quiet");
    }
    let out = cmd.output().map_err(|e| e.to_string())?;
    if !out.status.success() {
        return Err(format!("{args:?} exited with {}", out.status));
    }
    let text = match json {
        Some(p) => std::fs::read_to_string(p).map_err(|e| e.to_string())?,
        None => String::from_utf8(out.stdout).map_err(|e| e.to_string())?,
    };
    Ok(strip_timings(&text))
}

fn strip_timings(text: &str) -> String {
    match serde_json::from_str::<serde_json::Value>(text) {
        Ok(mut v) => {
            if let Some(t) = v.get_mut("timings_ms") {
                *t = serde_json::Value::Null;
            }
            serde_json::to_string_pretty(&v).unwrap()
        }
        Err(_) => text.to_owned(),
    }
}

fn cli_commands() -> Vec<Vec<String>> {
    let d = |n: &str| data(n).display().to_string();
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    vec![
        s(&["analyze", &d("halfgraph5.csv"), "--margin", "1.0"]),
        s(&[
            "analyze",
            &d("continuous.csv"),
            "--margin",
            "0.25",
            "--exhaustive-max",
            "1",
        ]),
        s(&["analyze", "--group", &d("z4_parity.json")]),
        s(&[
            "analyze",
            "--kernel",
            "0.5*(1+dot(x,y))",
            "--x",
            &d("dot_x.csv"),
            "--y",
            &d("dot_y.csv"),
            "--margin",
            "0.5",
        ]),
        s(&[
            "define",
            &d("continuous.csv"),
            "--target",
            "row:0",
            "--mode",
            "lp",
        ]),
        s(&[
            "define",
            &d("continuous.csv"),
            "--target",
            "0.5,0.5,0.5",
            "--mode",
            "greedy",
        ]),
        s(&[
            "define",
            &d("majority3.csv"),
            "--target-file",
            &d("all_ones.json"),
            "--mode",
            "majority",
        ]),
        s(&["define", &d("identity4.csv"), "--mode", "all"]),
        s(&[
            "doublelimit",
            "--kernel",
            "lt(x[0],y[0])",
            "--x",
            &d("lt_a.csv"),
            "--y",
            &d("lt_b.csv"),
        ]),
        s(&["uniform", &d("manifest_mixed.json")]),
        s(&["kernel", "parse", "0.5*(1+dot(x,y))"]),
        s(&["kernel", "print", "x[0]-(y[0]-x[1])"]),
        s(&[
            "kernel",
            "sample",
            "lt(x[0],y[0])",
            "--x",
            &d("lt_pts.csv"),
            "--y",
            &d("lt_pts.csv"),
        ]),
    ]
}

fn c10_roundtrip_determinism() -> Outcome {
    let mut notes = Vec::new();
    for src in EXPRESSIONS {
        let ast = match parse(src) {
            Ok(a) => a,
            Err(e) => {
                notes.push(format!("`{src}` does not parse: {e}"));
                continue;
            }
        };
        let printed = ast.to_string();
        let reparsed = parse(&printed).unwrap();
        if reparsed != ast || reparsed.to_string() != printed {
            notes.push(format!("`{src}` is not a fixpoint: `{printed}`"));
        }
    }
    let dir = tempfile::tempdir().unwrap();
    let commands = cli_commands();
    for (k, args) in commands.iter().enumerate() {
        let args: Vec<&str> = args.iter().map(String::as_str).collect();
        let text_output = args[..2] == ["kernel", "print"];
        let run = |tag: &str| {
            let path = dir.path().join(format!("{k}-{tag}.json"));
            run_cli(&args, (!text_output).then_some(path.as_path()))
        };
        match (run("a"), run("b")) {
            (Ok(a), Ok(b)) if a == b => {}
            (Ok(_), Ok(_)) => notes.push(format!("{args:?} differs between runs")),
            (Err(e), _) | (_, Err(e)) => notes.push(e),
        }
    }
    outcome(
        notes.is_empty(),
        format!(
            "{} expressions round-trip, {} cli commands reproduce byte-identically{}",
            EXPRESSIONS.len(),
            commands.len(),
            notes.first().map_or(String::new(), |n| format!("; {n}"))
        ),
    )
}
