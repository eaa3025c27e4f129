//! C interface to `stabdef`.
//!
//! Tables and kernels are opaque handles created by `*_new`/`*_parse`
//! functions and released with the matching `*_free`. Every fallible call
//! returns a [`StabdefStatus`]; on failure the message is available from
//! [`stabdef_last_error`] on the same thread until the next failing call.
//! Outputs are written only on success.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use stabdef::kernel::{parse, sample_table, PointSet};
use stabdef::{
    density_character, double_limit, ladder_index, lp_define, majority_define, realized_types,
    Error, FormulaTable, KernelExpr, TargetSpec,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StabdefStatus {
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// Parse, validation or I/O failure.
    Input = 2,
    /// Division by zero, NaN or a failed numeric solve.
    Numeric = 3,
    /// A Rust panic was caught at the boundary.
    Panic = 4,
}

/// Opaque formula table.
pub struct StabdefTable(FormulaTable);

/// Opaque parsed kernel expression.
pub struct StabdefKernel(KernelExpr);

/// Iterated limits of a kernel; a `has_*` flag of 0 means the limit did
/// not settle and the value is unspecified.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct StabdefDoubleLimit {
    pub has_limit_nm: bool,
    pub limit_nm: f64,
    pub has_limit_mn: bool,
    pub limit_mn: f64,
    pub has_gap: bool,
    pub gap: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(StabdefStatus);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = if e.is_input_error() {
            StabdefStatus::Input
        } else {
            StabdefStatus::Numeric
        };
        set_error(e.to_string());
        Fail(status)
    }
}

fn null(name: &str) -> Fail {
    set_error(format!("argument `{name}` is null"));
    Fail(StabdefStatus::NullArgument)
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> StabdefStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => StabdefStatus::Ok,
        Ok(Err(Fail(s))) => s,
        Err(_) => {
            set_error("internal panic".into());
            StabdefStatus::Panic
        }
    }
}

unsafe fn deref<'a, T>(p: *const T, name: &str) -> Result<&'a T, Fail> {
    p.as_ref().ok_or_else(|| null(name))
}

unsafe fn out<'a, T>(p: *mut T, name: &str) -> Result<&'a mut T, Fail> {
    p.as_mut().ok_or_else(|| null(name))
}

unsafe fn slice<'a>(p: *const f64, len: usize, name: &str) -> Result<&'a [f64], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(name));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn string<'a>(p: *const c_char, name: &str) -> Result<&'a str, Fail> {
    if p.is_null() {
        return Err(null(name));
    }
    CStr::from_ptr(p).to_str().map_err(|_| {
        set_error(format!("argument `{name}` is not valid UTF-8"));
        Fail(StabdefStatus::Input)
    })
}

/// `count` points of dimension `dim`, row-major.
unsafe fn points(p: *const f64, count: usize, dim: usize, name: &str) -> Result<PointSet, Fail> {
    let flat = slice(p, count * dim, name)?;
    let pts = if dim == 0 {
        vec![vec![]; count]
    } else {
        flat.chunks(dim).map(<[f64]>::to_vec).collect()
    };
    Ok(PointSet::new(pts)?)
}

/// Message of the last failing call on this thread, or null. The pointer
/// stays valid until the next failing call on this thread.
#[no_mangle]
pub extern "C" fn stabdef_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Creates a table from `rows * cols` row-major values in `[0, 1]`.
///
/// # Safety
/// `values` must point to `rows * cols` doubles; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabdef_table_new(
    values: *const f64,
    rows: usize,
    cols: usize,
    out_table: *mut *mut StabdefTable,
) -> StabdefStatus {
    guard(|| {
        let out_table = out(out_table, "out_table")?;
        let v = slice(values, rows.saturating_mul(cols), "values")?;
        let t = FormulaTable::from_fn(rows, cols, |i, j| v[i * cols + j])?;
        *out_table = Box::into_raw(Box::new(StabdefTable(t)));
        Ok(())
    })
}

/// Loads a table from a CSV file.
///
/// # Safety
/// `path` must be a nul-terminated string; `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabdef_table_load_csv(
    path: *const c_char,
    out_table: *mut *mut StabdefTable,
) -> StabdefStatus {
    guard(|| {
        let out_table = out(out_table, "out_table")?;
        let t = FormulaTable::load_csv(string(path, "path")?)?;
        *out_table = Box::into_raw(Box::new(StabdefTable(t)));
        Ok(())
    })
}

/// Releases a table. Null is ignored.
///
/// # Safety
/// `table` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stabdef_table_free(table: *mut StabdefTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// # Safety
/// `table` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stabdef_table_rows(table: *const StabdefTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.n_rows())
}

/// # Safety
/// `table` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stabdef_table_cols(table: *const StabdefTable) -> usize {
    table.as_ref().map_or(0, |t| t.0.n_cols())
}

/// # Safety
/// `table` must be a live handle; `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabdef_table_get(
    table: *const StabdefTable,
    row: usize,
    col: usize,
    out_value: *mut f64,
) -> StabdefStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        let out_value = out(out_value, "out_value")?;
        if row >= t.n_rows() || col >= t.n_cols() {
            return Err(Error::IndexOutOfRange {
                axis: if row >= t.n_rows() { "row" } else { "column" },
                index: if row >= t.n_rows() { row } else { col },
                len: if row >= t.n_rows() {
                    t.n_rows()
                } else {
                    t.n_cols()
                },
            }
            .into());
        }
        *out_value = t.get(row, col);
        Ok(())
    })
}

/// New handle holding the transpose of `table`.
///
/// # Safety
/// `table` must be a live handle; `out_table` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabdef_table_transpose(
    table: *const StabdefTable,
    out_table: *mut *mut StabdefTable,
) -> StabdefStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        let out_table = out(out_table, "out_table")?;
        *out_table = Box::into_raw(Box::new(StabdefTable(t.transpose())));
        Ok(())
    })
}

/// Exact ladder index of `table` at margin `delta`.
///
/// # Safety
/// `table` must be a live handle; `out_index` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabdef_ladder_index(
    table: *const StabdefTable,
    delta: f64,
    out_index: *mut usize,
) -> StabdefStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        let out_index = out(out_index, "out_index")?;
        *out_index = ladder_index(t, delta)?;
        Ok(())
    })
}

/// Number of realized types of `table` at tolerance `tol`.
///
/// # Safety
/// `table` must be a live handle; `out_count` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabdef_realized_type_count(
    table: *const StabdefTable,
    tol: f64,
    out_count: *mut usize,
) -> StabdefStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        let out_count = out(out_count, "out_count")?;
        *out_count = realized_types(t, tol)?.len();
        Ok(())
    })
}

/// Size of an epsilon-net of the rows; `out_exact` tells whether it is the
/// minimum.
///
/// # Safety
/// `table` must be a live handle; outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabdef_density_character(
    table: *const StabdefTable,
    epsilon: f64,
    out_size: *mut usize,
    out_exact: *mut bool,
) -> StabdefStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        let out_size = out(out_size, "out_size")?;
        let out_exact = out(out_exact, "out_exact")?;
        let d = density_character(t, epsilon)?;
        *out_size = d.size;
        *out_exact = d.exact;
        Ok(())
    })
}

/// Best convex combination of all rows approximating `target` (length =
/// column count) in the sup norm. `out_weights` receives one weight per
/// row.
///
/// # Safety
/// `target` must hold `target_len` doubles and `out_weights` room for one
/// double per row.
#[no_mangle]
pub unsafe extern "C" fn stabdef_lp_define(
    table: *const StabdefTable,
    target: *const f64,
    target_len: usize,
    out_weights: *mut f64,
    out_error: *mut f64,
) -> StabdefStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        let p = slice(target, target_len, "target")?.to_vec();
        if out_weights.is_null() {
            return Err(null("out_weights"));
        }
        let out_error = out(out_error, "out_error")?;
        let all: Vec<usize> = (0..t.n_rows()).collect();
        let def = lp_define(t, &TargetSpec::Point(p), &all)?;
        let weights = std::slice::from_raw_parts_mut(out_weights, t.n_rows());
        weights.fill(0.0);
        for (&a, &w) in def.support.iter().zip(&def.weights) {
            weights[a] = w;
        }
        *out_error = def.sup_error;
        Ok(())
    })
}

/// Smallest odd `k <= k_max` whose strict majority vote of rows equals the
/// Boolean `target`. `out_counts` receives each row's multiplicity; `out_k`
/// is 0 when no such vote exists.
///
/// # Safety
/// `target` must hold `target_len` doubles and `out_counts` room for one
/// `size_t` per row.
#[no_mangle]
pub unsafe extern "C" fn stabdef_majority_define(
    table: *const StabdefTable,
    target: *const f64,
    target_len: usize,
    k_max: usize,
    out_k: *mut usize,
    out_counts: *mut usize,
) -> StabdefStatus {
    guard(|| {
        let t = &deref(table, "table")?.0;
        let p = slice(target, target_len, "target")?.to_vec();
        if out_counts.is_null() {
            return Err(null("out_counts"));
        }
        let out_k = out(out_k, "out_k")?;
        let def = majority_define(t, &TargetSpec::Point(p), k_max)?;
        let counts = std::slice::from_raw_parts_mut(out_counts, t.n_rows());
        counts.fill(0);
        *out_k = 0;
        if let Some(d) = def {
            for a in d.rows {
                counts[a] += 1;
            }
            *out_k = d.k;
        }
        Ok(())
    })
}

/// Parses a kernel expression.
///
/// # Safety
/// `source` must be a nul-terminated string; `out_kernel` must be writable.
#[no_mangle]
pub unsafe extern "C" fn stabdef_kernel_parse(
    source: *const c_char,
    out_kernel: *mut *mut StabdefKernel,
) -> StabdefStatus {
    guard(|| {
        let out_kernel = out(out_kernel, "out_kernel")?;
        let e = parse(string(source, "source")?)?;
        *out_kernel = Box::into_raw(Box::new(StabdefKernel(e)));
        Ok(())
    })
}

/// Releases a kernel. Null is ignored.
///
/// # Safety
/// `kernel` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stabdef_kernel_free(kernel: *mut StabdefKernel) {
    if !kernel.is_null() {
        drop(Box::from_raw(kernel));
    }
}

/// Canonical text of a kernel, to be released with
/// [`stabdef_string_free`]. Null if `kernel` is null.
///
/// # Safety
/// `kernel` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn stabdef_kernel_to_string(kernel: *const StabdefKernel) -> *mut c_char {
    kernel.as_ref().map_or(ptr::null_mut(), |k| {
        CString::new(k.0.to_string())
            .expect("canonical text has no nul")
            .into_raw()
    })
}

/// # Safety
/// `s` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn stabdef_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Evaluates a kernel at one pair of points, clamped to `[0, 1]`.
///
/// # Safety
/// `x` and `y` must hold `x_len` and `y_len` doubles.
#[no_mangle]
pub unsafe extern "C" fn stabdef_kernel_eval(
    kernel: *const StabdefKernel,
    x: *const f64,
    x_len: usize,
    y: *const f64,
    y_len: usize,
    out_value: *mut f64,
) -> StabdefStatus {
    guard(|| {
        let k = &deref(kernel, "kernel")?.0;
        let out_value = out(out_value, "out_value")?;
        *out_value = k.eval(slice(x, x_len, "x")?, slice(y, y_len, "y")?)?;
        Ok(())
    })
}

/// Tabulates a kernel on `nx` points of dimension `x_dim` against `ny`
/// points of dimension `y_dim` (both row-major).
///
/// # Safety
/// The point buffers must hold `nx * x_dim` and `ny * y_dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn stabdef_kernel_sample(
    kernel: *const StabdefKernel,
    xs: *const f64,
    nx: usize,
    x_dim: usize,
    ys: *const f64,
    ny: usize,
    y_dim: usize,
    out_table: *mut *mut StabdefTable,
) -> StabdefStatus {
    guard(|| {
        let k = &deref(kernel, "kernel")?.0;
        let out_table = out(out_table, "out_table")?;
        let t = sample_table(
            k,
            &points(xs, nx, x_dim, "xs")?,
            &points(ys, ny, y_dim, "ys")?,
        )?;
        *out_table = Box::into_raw(Box::new(StabdefTable(t)));
        Ok(())
    })
}

/// Iterated double limits of a kernel along two point sequences.
///
/// # Safety
/// The point buffers must hold `nx * dim` and `ny * dim` doubles.
#[no_mangle]
pub unsafe extern "C" fn stabdef_double_limit(
    kernel: *const StabdefKernel,
    xs: *const f64,
    nx: usize,
    ys: *const f64,
    ny: usize,
    dim: usize,
    window: usize,
    tol: f64,
    out_report: *mut StabdefDoubleLimit,
) -> StabdefStatus {
    guard(|| {
        let k = &deref(kernel, "kernel")?.0;
        let out_report = out(out_report, "out_report")?;
        let r = double_limit(
            k,
            &points(xs, nx, dim, "xs")?,
            &points(ys, ny, dim, "ys")?,
            window,
            tol,
        )?;
        *out_report = StabdefDoubleLimit {
            has_limit_nm: r.limit_nm.is_some(),
            limit_nm: r.limit_nm.unwrap_or(f64::NAN),
            has_limit_mn: r.limit_mn.is_some(),
            limit_mn: r.limit_mn.unwrap_or(f64::NAN),
            has_gap: r.gap.is_some(),
            gap: r.gap.unwrap_or(f64::NAN),
        };
        Ok(())
    })
}
