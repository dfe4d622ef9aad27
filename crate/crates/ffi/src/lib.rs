//! C ABI over the `bisis` crate.
//!
//! Every entry point returns a [`BisisStatus`]; on failure the message is
//! available from [`bisis_last_error_message`] on the same thread. Handles
//! returned through out-pointers are owned by the caller and must be released
//! with the matching `*_free` function. Array arguments are `(pointer, len)`
//! pairs and `len` must equal the graph's node count.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use bisis::allocate::{local_search_from, solve_perturbation_lp, LocalSearchOptions};
use bisis::dynamics::{
    single_sis_fixed_point, steady_state, EpidemicParams, StatePair, SteadyStateConfig,
};
use bisis::graph::{load_edge_list, LoadOptions};
use bisis::seeding::{critical_pair, survival_margin, CommunityPlan, CriticalOptions};
use bisis::spectral::{pf_eigenpair, PowerOptions, ScaledOperator};
use bisis::{Error, Graph};

/// Result code of every call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BisisStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Io = 3,
    Parse = 4,
    /// Empty, disconnected or self-looped input.
    InvalidGraph = 5,
    NonConvergence = 6,
    /// A requested budget differs from the critical one, or cannot be spent.
    InfeasibleBudget = 7,
    /// Degenerate eigenvalues, or a state the model cannot handle.
    Numerical = 8,
    Panic = 99,
}

/// Opaque graph handle.
pub struct BisisGraph(Graph);

/// Opaque community plan: the participation vector `u`, the scale `gamma`,
/// the node costs and the entrant's survival margin.
pub struct BisisPlan {
    plan: CommunityPlan,
    margin: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

struct Fail(BisisStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        let status = match &e {
            Error::Io { .. } => BisisStatus::Io,
            Error::Parse { .. } => BisisStatus::Parse,
            Error::SelfLoop { .. } | Error::EmptyGraph | Error::Disconnected { .. } => {
                BisisStatus::InvalidGraph
            }
            Error::NonConvergence { .. } => BisisStatus::NonConvergence,
            Error::InfeasibleBudget { .. } | Error::UnspendableBudget { .. } => {
                BisisStatus::InfeasibleBudget
            }
            Error::DegenerateEigenvalue { .. }
            | Error::NotProportional { .. }
            | Error::AlreadySupercritical { .. }
            | Error::ProbeTooLarge { .. }
            | Error::InvalidState(_) => BisisStatus::Numerical,
            _ => BisisStatus::InvalidArgument,
        };
        Fail(status, e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BisisStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, converting errors and panics into a status plus last-error message.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BisisStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BisisStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".into());
            set_error(format!("panic: {msg}"));
            BisisStatus::Panic
        }
    }
}

unsafe fn slice<'a, T>(p: *const T, len: usize, what: &str) -> Result<&'a [T], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn slice_mut<'a, T>(p: *mut T, len: usize, what: &str) -> Result<&'a mut [T], Fail> {
    if len == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts_mut(p, len))
}

unsafe fn graph_ref<'a>(g: *const BisisGraph) -> Result<&'a Graph, Fail> {
    g.as_ref().map(|g| &g.0).ok_or_else(|| null("graph"))
}

fn check_n(g: &Graph, len: usize) -> Result<(), Fail> {
    if len != g.n() {
        return Err(Error::DimensionMismatch {
            expected: g.n(),
            got: len,
        }
        .into());
    }
    Ok(())
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Message of the last failed call on this thread, or null after a success.
/// The pointer stays valid until the next call on the same thread.
#[no_mangle]
pub extern "C" fn bisis_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn bisis_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Builds a graph on `n` nodes from `m` undirected edges `(src[k], dst[k])`.
/// Duplicate edges are merged; self-loops and disconnected input are errors.
///
/// # Safety
/// `src` and `dst` must point to `m` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bisis_graph_from_edges(
    n: usize,
    src: *const u32,
    dst: *const u32,
    m: usize,
    out: *mut *mut BisisGraph,
) -> BisisStatus {
    guard(|| {
        let (s, d) = (slice(src, m, "src")?, slice(dst, m, "dst")?);
        let g = Graph::from_edges(n, s.iter().zip(d).map(|(&a, &b)| (a as usize, b as usize)))?;
        write_out(out, Box::into_raw(Box::new(BisisGraph(g))), "out")
    })
}

/// Loads a whitespace-separated edge list (base detected automatically).
///
/// # Safety
/// `path` must be a NUL-terminated string; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bisis_graph_load(
    path: *const c_char,
    out: *mut *mut BisisGraph,
) -> BisisStatus {
    guard(|| {
        if path.is_null() {
            return Err(null("path"));
        }
        let path = CStr::from_ptr(path)
            .to_str()
            .map_err(|_| Fail(BisisStatus::InvalidArgument, "path is not UTF-8".into()))?;
        let loaded = load_edge_list(path, &LoadOptions::default())?;
        write_out(
            out,
            Box::into_raw(Box::new(BisisGraph(loaded.graph))),
            "out",
        )
    })
}

/// Releases a graph. Null is ignored.
///
/// # Safety
/// `g` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bisis_graph_free(g: *mut BisisGraph) {
    if !g.is_null() {
        drop(Box::from_raw(g));
    }
}

/// Node count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn bisis_graph_node_count(g: *const BisisGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.n())
}

/// Undirected edge count, or 0 for a null handle.
///
/// # Safety
/// `g` must be null or a live graph handle.
#[no_mangle]
pub unsafe extern "C" fn bisis_graph_edge_count(g: *const BisisGraph) -> usize {
    g.as_ref().map_or(0, |g| g.0.num_edges())
}

/// Incumbent equilibrium of the single-product SIS model with strength `tau`.
///
/// # Safety
/// `g` must be a live handle; `x_out` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn bisis_sis_fixed_point(
    g: *const BisisGraph,
    tau: f64,
    x_out: *mut f64,
    len: usize,
) -> BisisStatus {
    guard(|| {
        let g = graph_ref(g)?;
        check_n(g, len)?;
        let x = single_sis_fixed_point(g, tau, 1e-13)?;
        slice_mut(x_out, len, "x_out")?.copy_from_slice(&x);
        Ok(())
    })
}

/// Perron-Frobenius pair of `diag(scale) A`. `vector_out` may be null.
///
/// # Safety
/// `scale` must hold `len` readable values, `vector_out` (if non-null) `len`
/// writable ones; `lambda_out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bisis_pf_eigenpair(
    g: *const BisisGraph,
    scale: *const f64,
    len: usize,
    lambda_out: *mut f64,
    vector_out: *mut f64,
) -> BisisStatus {
    guard(|| {
        let g = graph_ref(g)?;
        check_n(g, len)?;
        let s = slice(scale, len, "scale")?;
        let pair = pf_eigenpair(&ScaledOperator::new(g, s)?, &PowerOptions::default())?;
        if !vector_out.is_null() {
            slice_mut(vector_out, len, "vector_out")?.copy_from_slice(&pair.vector);
        }
        write_out(lambda_out, pair.lambda, "lambda_out")
    })
}

/// Box-constrained budget-neutral LP: maximise `nu . alpha` subject to
/// `w . alpha = 0` and `|alpha_i| <= epsilon`.
///
/// # Safety
/// `nu` and `w` must hold `len` readable values and `alpha_out` `len`
/// writable ones; `objective_out` may be null.
#[no_mangle]
pub unsafe extern "C" fn bisis_solve_lp(
    nu: *const f64,
    w: *const f64,
    len: usize,
    epsilon: f64,
    alpha_out: *mut f64,
    objective_out: *mut f64,
) -> BisisStatus {
    guard(|| {
        let step = solve_perturbation_lp(slice(nu, len, "nu")?, slice(w, len, "w")?, epsilon)?;
        slice_mut(alpha_out, len, "alpha_out")?.copy_from_slice(&step.alpha);
        if !objective_out.is_null() {
            objective_out.write(step.objective);
        }
        Ok(())
    })
}

fn boxed_plan(plan: CommunityPlan, margin: f64) -> *mut BisisPlan {
    Box::into_raw(Box::new(BisisPlan { plan, margin }))
}

/// Critical community against the incumbent equilibrium `x_star`, with the
/// largest participation probability set to `u_max`.
///
/// # Safety
/// `x_star` and `w` must hold `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bisis_critical_plan(
    g: *const BisisGraph,
    x_star: *const f64,
    w: *const f64,
    len: usize,
    tau2: f64,
    u_max: f64,
    out: *mut *mut BisisPlan,
) -> BisisStatus {
    guard(|| {
        let g = graph_ref(g)?;
        check_n(g, len)?;
        let (x, w) = (slice(x_star, len, "x_star")?, slice(w, len, "w")?);
        let opts = CriticalOptions {
            u_max,
            ..CriticalOptions::default()
        };
        let crit = critical_pair(g, x, tau2, w, &opts)?;
        let margin = crit.threshold_gap;
        write_out(out, boxed_plan(crit.plan, margin), "out")
    })
}

/// Critical community followed by one local-search step of size `epsilon`
/// (per-node clamping, `u_max` 0.5).
///
/// # Safety
/// `w` must hold `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bisis_local_search(
    g: *const BisisGraph,
    tau1: f64,
    tau2: f64,
    w: *const f64,
    len: usize,
    epsilon: f64,
    out: *mut *mut BisisPlan,
) -> BisisStatus {
    guard(|| {
        let g = graph_ref(g)?;
        check_n(g, len)?;
        let params = EpidemicParams::from_tau(tau1, tau2)?;
        let x_star = single_sis_fixed_point(g, tau1, 1e-13)?;
        let r = local_search_from(
            g,
            &params,
            &x_star,
            slice(w, len, "w")?,
            &LocalSearchOptions::new(epsilon),
        )?;
        write_out(out, boxed_plan(r.plan, r.margin), "out")
    })
}

/// Builds a plan from explicit `gamma`, `u` and costs `w`, with its survival
/// margin against the incumbent equilibrium at `tau1`.
///
/// # Safety
/// `u` and `w` must hold `len` readable values; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bisis_plan_new(
    g: *const BisisGraph,
    tau1: f64,
    tau2: f64,
    gamma: f64,
    u: *const f64,
    w: *const f64,
    len: usize,
    out: *mut *mut BisisPlan,
) -> BisisStatus {
    guard(|| {
        let g = graph_ref(g)?;
        check_n(g, len)?;
        let plan = CommunityPlan::new(
            gamma,
            slice(u, len, "u")?.to_vec(),
            slice(w, len, "w")?.to_vec(),
        )?;
        let x_star = single_sis_fixed_point(g, tau1, 1e-13)?;
        let margin = survival_margin(g, &x_star, tau2, &plan)?;
        write_out(out, boxed_plan(plan, margin), "out")
    })
}

/// Releases a plan. Null is ignored.
///
/// # Safety
/// `p` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn bisis_plan_free(p: *mut BisisPlan) {
    if !p.is_null() {
        drop(Box::from_raw(p));
    }
}

/// Node count of the plan, or 0 for a null handle.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn bisis_plan_len(p: *const BisisPlan) -> usize {
    p.as_ref().map_or(0, |p| p.plan.u().len())
}

/// `gamma`, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn bisis_plan_gamma(p: *const BisisPlan) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.plan.gamma())
}

/// Budget spent, `sqrt(gamma) * sum w_i u_i`, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn bisis_plan_budget(p: *const BisisPlan) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.plan.budget_spent())
}

/// Survival margin `tau2 lambda - 1`, or NaN for a null handle.
///
/// # Safety
/// `p` must be null or a live plan handle.
#[no_mangle]
pub unsafe extern "C" fn bisis_plan_margin(p: *const BisisPlan) -> f64 {
    p.as_ref().map_or(f64::NAN, |p| p.margin)
}

/// Copies `u` into `u_out`.
///
/// # Safety
/// `p` must be a live plan handle; `u_out` must hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn bisis_plan_u(
    p: *const BisisPlan,
    u_out: *mut f64,
    len: usize,
) -> BisisStatus {
    guard(|| {
        let p = p.as_ref().ok_or_else(|| null("plan"))?;
        let u = p.plan.u();
        if len != u.len() {
            return Err(Error::DimensionMismatch {
                expected: u.len(),
                got: len,
            }
            .into());
        }
        slice_mut(u_out, len, "u_out")?.copy_from_slice(u);
        Ok(())
    })
}

/// Coupled equilibrium reached from `(x*, y0)` under `plan` (null for no
/// community term). Writes both shares.
///
/// # Safety
/// `g` must be a live handle, `plan` null or live; `x_out` and `y_out` must
/// hold `len` writable values.
#[no_mangle]
pub unsafe extern "C" fn bisis_equilibrium(
    g: *const BisisGraph,
    tau1: f64,
    tau2: f64,
    plan: *const BisisPlan,
    y0: f64,
    x_out: *mut f64,
    y_out: *mut f64,
    len: usize,
) -> BisisStatus {
    guard(|| {
        let g = graph_ref(g)?;
        check_n(g, len)?;
        let params = EpidemicParams::from_tau(tau1, tau2)?;
        let x_star = single_sis_fixed_point(g, tau1, 1e-13)?;
        let community = match plan.as_ref() {
            Some(p) => {
                check_n(g, p.plan.u().len())?;
                Some(p.plan.community())
            }
            None => None,
        };
        let init = StatePair::seeded(&x_star, y0)?;
        let r = steady_state(g, &params, community, &init, &SteadyStateConfig::default())?;
        if !r.converged {
            return Err(Error::NonConvergence {
                what: "equilibrium",
                iterations: r.steps,
                residual: r.residual_x.max(r.residual_y),
            }
            .into());
        }
        slice_mut(x_out, len, "x_out")?.copy_from_slice(&r.state.x);
        slice_mut(y_out, len, "y_out")?.copy_from_slice(&r.state.y);
        Ok(())
    })
}
