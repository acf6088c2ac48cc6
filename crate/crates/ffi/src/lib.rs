//! C ABI for graph loading, influence scoring, selection, the agreement
//! bound, and the preference-loss family.
//!
//! Every fallible function returns a [`ColabelStatus`]; on failure a
//! thread-local message is set and can be read with
//! [`colabel_last_error_message`]. Handles returned by the constructors own
//! their data and must be released with the matching `_free` function.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use colabel::agreement::agreement_accuracy_bound;
use colabel::influence::{influence_scores, select_top_k};
use colabel::objectives::{
    combined_loss, instruction_loss, odds, orpo_preference_function, preference_loss,
    preference_loss_grad, LossConfig,
};
use colabel::{Error, Graph};

/// Result code of a C ABI call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColabelStatus {
    Ok = 0,
    /// A pointer, range, or value argument was unusable.
    InvalidArgument = 1,
    IoError = 2,
    ParseError = 3,
    /// Training or evaluation produced a non-finite number.
    NumericError = 4,
    MissingData = 5,
    EndpointError = 6,
    /// An unexpected internal failure; detail in the last-error message.
    InternalError = 7,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error_message(message: &str) {
    let sanitized = message.replace('\0', " ");
    LAST_ERROR.with(|slot| {
        *slot.borrow_mut() = CString::new(sanitized).unwrap_or_default();
    });
}

fn status_of(e: &Error) -> ColabelStatus {
    match e {
        Error::Io { .. } => ColabelStatus::IoError,
        Error::Parse { .. } => ColabelStatus::ParseError,
        Error::InvalidInput(_) => ColabelStatus::InvalidArgument,
        Error::NonFiniteLoss { .. } => ColabelStatus::NumericError,
        Error::MissingPredictions { .. } => ColabelStatus::MissingData,
        Error::Endpoint(_) => ColabelStatus::EndpointError,
        Error::Stage { source, .. } => status_of(source),
    }
}

fn fail(e: &Error) -> ColabelStatus {
    set_error_message(&e.to_string());
    status_of(e)
}

fn invalid(message: &str) -> ColabelStatus {
    set_error_message(message);
    ColabelStatus::InvalidArgument
}

/// Runs a body with panics converted to `InternalError`.
fn guarded(body: impl FnOnce() -> ColabelStatus) -> ColabelStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => status,
        Err(panic) => {
            let detail = panic
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| panic.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "panic".to_string());
            set_error_message(&format!("internal error: {detail}"));
            ColabelStatus::InternalError
        }
    }
}

/// Message describing the most recent failure on this thread.
///
/// The pointer stays valid until the next failing call on the same thread.
/// Returns an empty string when no error has occurred.
#[no_mangle]
pub extern "C" fn colabel_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| slot.borrow().as_ptr())
}

/// Opaque undirected graph handle.
pub struct ColabelGraph {
    inner: Graph,
}

unsafe fn read_slice<'a, T>(ptr: *const T, len: usize) -> Option<&'a [T]> {
    if len == 0 {
        Some(&[])
    } else if ptr.is_null() {
        None
    } else {
        Some(std::slice::from_raw_parts(ptr, len))
    }
}

/// Loads a graph from a tab-separated edge list, optionally headed by
/// `n=<count>`. Returns null on failure; see the last-error message.
///
/// # Safety
/// `path` must be a valid NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn colabel_graph_load(path: *const c_char) -> *mut ColabelGraph {
    if path.is_null() {
        invalid("path is null");
        return std::ptr::null_mut();
    }
    let Ok(path) = CStr::from_ptr(path).to_str() else {
        invalid("path is not valid UTF-8");
        return std::ptr::null_mut();
    };
    let mut out = std::ptr::null_mut();
    guarded(|| match Graph::load_edge_list(path) {
        Ok(inner) => {
            out = Box::into_raw(Box::new(ColabelGraph { inner }));
            ColabelStatus::Ok
        }
        Err(e) => fail(&e),
    });
    out
}

/// Builds a graph from `n_edges` (source, target) pairs laid out as
/// `2 * n_edges` node ids. Self-loops are dropped and duplicates merged.
///
/// # Safety
/// `edges` must point to `2 * n_edges` readable ids (or be null when
/// `n_edges` is zero).
#[no_mangle]
pub unsafe extern "C" fn colabel_graph_from_edges(
    n_nodes: usize,
    edges: *const usize,
    n_edges: usize,
) -> *mut ColabelGraph {
    let Some(flat) = read_slice(edges, n_edges.saturating_mul(2)) else {
        invalid("edges is null");
        return std::ptr::null_mut();
    };
    let mut out = std::ptr::null_mut();
    guarded(|| {
        let pairs = flat.chunks_exact(2).map(|p| (p[0], p[1]));
        match Graph::from_edges(n_nodes, pairs) {
            Ok(inner) => {
                out = Box::into_raw(Box::new(ColabelGraph { inner }));
                ColabelStatus::Ok
            }
            Err(e) => fail(&e),
        }
    });
    out
}

/// Releases a graph handle. Null is ignored.
///
/// # Safety
/// `graph` must have come from a colabel constructor and not been freed.
#[no_mangle]
pub unsafe extern "C" fn colabel_graph_free(graph: *mut ColabelGraph) {
    if !graph.is_null() {
        drop(Box::from_raw(graph));
    }
}

/// Node count; zero for a null handle.
///
/// # Safety
/// `graph` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn colabel_graph_num_nodes(graph: *const ColabelGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.n_nodes())
}

/// Undirected edge count; zero for a null handle.
///
/// # Safety
/// `graph` must be a live handle or null.
#[no_mangle]
pub unsafe extern "C" fn colabel_graph_num_edges(graph: *const ColabelGraph) -> usize {
    graph.as_ref().map_or(0, |g| g.inner.n_edges())
}

/// Writes the degree of `node` into `out_degree`.
///
/// # Safety
/// `graph` must be a live handle; `out_degree` must be writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_graph_degree(
    graph: *const ColabelGraph,
    node: usize,
    out_degree: *mut usize,
) -> ColabelStatus {
    let Some(g) = graph.as_ref() else {
        return invalid("graph is null");
    };
    if out_degree.is_null() {
        return invalid("out_degree is null");
    }
    if node >= g.inner.n_nodes() {
        return invalid(&format!("node {node} >= node count {}", g.inner.n_nodes()));
    }
    *out_degree = g.inner.degree(node);
    ColabelStatus::Ok
}

/// Writes the log influence score of every candidate against the best
/// source into `out_scores` (length `n_candidates`). Unreachable candidates
/// get negative infinity.
///
/// # Safety
/// Array arguments must match their stated lengths; `out_scores` must hold
/// `n_candidates` doubles.
#[no_mangle]
pub unsafe extern "C" fn colabel_influence_log_scores(
    graph: *const ColabelGraph,
    sources: *const usize,
    n_sources: usize,
    candidates: *const usize,
    n_candidates: usize,
    out_scores: *mut f64,
) -> ColabelStatus {
    let Some(g) = graph.as_ref() else {
        return invalid("graph is null");
    };
    let Some(sources) = read_slice(sources, n_sources) else {
        return invalid("sources is null");
    };
    let Some(candidates) = read_slice(candidates, n_candidates) else {
        return invalid("candidates is null");
    };
    if out_scores.is_null() && n_candidates > 0 {
        return invalid("out_scores is null");
    }
    guarded(|| match influence_scores(&g.inner, sources, candidates) {
        Ok(table) => {
            for (i, entry) in table.entries.iter().enumerate() {
                *out_scores.add(i) = entry.log_score;
            }
            ColabelStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Picks up to `k` candidates by descending influence score. Writes the
/// chosen node ids into `out_nodes` (capacity `k`), the number written into
/// `out_selected`, and the unfilled request into `out_shortfall`.
///
/// # Safety
/// Array arguments must match their stated lengths; `out_nodes` must hold
/// `k` ids; the two count pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_select_top_k(
    graph: *const ColabelGraph,
    sources: *const usize,
    n_sources: usize,
    candidates: *const usize,
    n_candidates: usize,
    k: usize,
    out_nodes: *mut usize,
    out_selected: *mut usize,
    out_shortfall: *mut usize,
) -> ColabelStatus {
    let Some(g) = graph.as_ref() else {
        return invalid("graph is null");
    };
    let Some(sources) = read_slice(sources, n_sources) else {
        return invalid("sources is null");
    };
    let Some(candidates) = read_slice(candidates, n_candidates) else {
        return invalid("candidates is null");
    };
    if (out_nodes.is_null() && k > 0) || out_selected.is_null() || out_shortfall.is_null() {
        return invalid("output pointer is null");
    }
    guarded(|| {
        let selection = influence_scores(&g.inner, sources, candidates)
            .and_then(|table| select_top_k(&table, k));
        match selection {
            Ok(selection) => {
                for (i, &node) in selection.nodes.iter().enumerate() {
                    *out_nodes.add(i) = node;
                }
                *out_selected = selection.nodes.len();
                *out_shortfall = selection.shortfall;
                ColabelStatus::Ok
            }
            Err(e) => fail(&e),
        }
    })
}

/// Predicted accuracy within the agreement set of two conditionally
/// independent annotators with accuracies `p_llm` and `p_gnn` over
/// `n_classes` classes. `out_exceeds_both` reports whether the value
/// strictly exceeds both accuracies.
///
/// # Safety
/// `out_value` and `out_exceeds_both` must be writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_agreement_accuracy_bound(
    p_llm: f64,
    p_gnn: f64,
    n_classes: usize,
    out_value: *mut f64,
    out_exceeds_both: *mut bool,
) -> ColabelStatus {
    if out_value.is_null() || out_exceeds_both.is_null() {
        return invalid("output pointer is null");
    }
    guarded(|| match agreement_accuracy_bound(p_llm, p_gnn, n_classes) {
        Ok(bound) => {
            *out_value = bound.value;
            *out_exceeds_both = bound.exceeds_both;
            ColabelStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

unsafe fn scalar_result(out: *mut f64, value: colabel::Result<f64>) -> ColabelStatus {
    if out.is_null() {
        return invalid("output pointer is null");
    }
    match value {
        Ok(v) => {
            *out = v;
            ColabelStatus::Ok
        }
        Err(e) => fail(&e),
    }
}

/// Negative log likelihood of probability `p` clamped into
/// `[epsilon, 1 - epsilon]`.
///
/// # Safety
/// `out_loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_instruction_loss(
    p: f64,
    epsilon: f64,
    out_loss: *mut f64,
) -> ColabelStatus {
    guarded(|| scalar_result(out_loss, instruction_loss(p, epsilon)))
}

/// Odds `p / (1 - p)`; `p` must lie strictly inside (0, 1).
///
/// # Safety
/// `out_odds` must be writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_odds(p: f64, out_odds: *mut f64) -> ColabelStatus {
    guarded(|| scalar_result(out_odds, odds(p)))
}

/// Log odds ratio of the chosen over the rejected probability.
///
/// # Safety
/// `out_value` must be writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_orpo_preference_function(
    p_chosen: f64,
    p_rejected: f64,
    out_value: *mut f64,
) -> ColabelStatus {
    guarded(|| scalar_result(out_value, orpo_preference_function(p_chosen, p_rejected)))
}

/// Preference loss `-ln(sigmoid(log odds ratio))`.
///
/// # Safety
/// `out_loss` must be writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_preference_loss(
    p_chosen: f64,
    p_rejected: f64,
    out_loss: *mut f64,
) -> ColabelStatus {
    guarded(|| scalar_result(out_loss, preference_loss(p_chosen, p_rejected)))
}

/// Analytic partial derivatives of the preference loss with respect to both
/// probabilities.
///
/// # Safety
/// Both output pointers must be writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_preference_loss_grad(
    p_chosen: f64,
    p_rejected: f64,
    out_d_chosen: *mut f64,
    out_d_rejected: *mut f64,
) -> ColabelStatus {
    if out_d_chosen.is_null() || out_d_rejected.is_null() {
        return invalid("output pointer is null");
    }
    guarded(|| match preference_loss_grad(p_chosen, p_rejected) {
        Ok((dc, dr)) => {
            *out_d_chosen = dc;
            *out_d_rejected = dr;
            ColabelStatus::Ok
        }
        Err(e) => fail(&e),
    })
}

/// Mean instruction loss over `instr_probs` plus `lambda` times the mean
/// preference loss over the `(pref_chosen[i], pref_rejected[i])` pairs.
///
/// # Safety
/// Array arguments must match their stated lengths; `out_loss` must be
/// writable.
#[no_mangle]
pub unsafe extern "C" fn colabel_combined_loss(
    instr_probs: *const f64,
    n_instr: usize,
    pref_chosen: *const f64,
    pref_rejected: *const f64,
    n_pref: usize,
    lambda: f64,
    epsilon: f64,
    out_loss: *mut f64,
) -> ColabelStatus {
    let Some(instr) = read_slice(instr_probs, n_instr) else {
        return invalid("instr_probs is null");
    };
    let (Some(chosen), Some(rejected)) = (
        read_slice(pref_chosen, n_pref),
        read_slice(pref_rejected, n_pref),
    ) else {
        return invalid("preference array is null");
    };
    let pairs: Vec<(f64, f64)> = chosen
        .iter()
        .copied()
        .zip(rejected.iter().copied())
        .collect();
    let config = LossConfig {
        lambda,
        epsilon_clip: epsilon,
    };
    guarded(|| scalar_result(out_loss, combined_loss(instr, &pairs, &config)))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        unsafe {
            CStr::from_ptr(colabel_last_error_message())
                .to_string_lossy()
                .into_owned()
        }
    }

    fn path_graph() -> *mut ColabelGraph {
        let edges = [0usize, 1, 1, 2];
        unsafe { colabel_graph_from_edges(3, edges.as_ptr(), 2) }
    }

    #[test]
    fn graph_lifecycle_and_getters() {
        let g = path_graph();
        assert!(!g.is_null());
        unsafe {
            assert_eq!(colabel_graph_num_nodes(g), 3);
            assert_eq!(colabel_graph_num_edges(g), 2);
            let mut degree = 0usize;
            assert_eq!(colabel_graph_degree(g, 1, &mut degree), ColabelStatus::Ok);
            assert_eq!(degree, 2);
            assert_eq!(
                colabel_graph_degree(g, 9, &mut degree),
                ColabelStatus::InvalidArgument
            );
            assert!(last_error().contains("node 9"));
            colabel_graph_free(g);
            colabel_graph_free(std::ptr::null_mut());
        }
    }

    #[test]
    fn from_edges_rejects_out_of_range() {
        let edges = [0usize, 5];
        let g = unsafe { colabel_graph_from_edges(2, edges.as_ptr(), 1) };
        assert!(g.is_null());
        assert!(last_error().contains('5'));
    }

    #[test]
    fn load_missing_file_sets_io_error() {
        let path = CString::new("/nonexistent/colabel-test.tsv").unwrap();
        let g = unsafe { colabel_graph_load(path.as_ptr()) };
        assert!(g.is_null());
        assert!(last_error().contains("colabel-test.tsv"));
    }

    #[test]
    fn load_round_trips_saved_graph() {
        let dir = std::env::temp_dir().join("colabel-ffi-load-test");
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("graph.tsv");
        std::fs::write(&path, "n=4\n0\t1\n1\t2\n2\t3\n").unwrap();
        let c_path = CString::new(path.to_str().unwrap()).unwrap();
        let g = unsafe { colabel_graph_load(c_path.as_ptr()) };
        assert!(!g.is_null());
        unsafe {
            assert_eq!(colabel_graph_num_nodes(g), 4);
            assert_eq!(colabel_graph_num_edges(g), 3);
            colabel_graph_free(g);
        }
        std::fs::remove_dir_all(&dir).unwrap();
    }

    #[test]
    fn influence_scores_match_path_hand_value() {
        let g = path_graph();
        let sources = [0usize];
        let candidates = [1usize, 2];
        let mut scores = [0.0f64; 2];
        let status = unsafe {
            colabel_influence_log_scores(
                g,
                sources.as_ptr(),
                1,
                candidates.as_ptr(),
                2,
                scores.as_mut_ptr(),
            )
        };
        assert_eq!(status, ColabelStatus::Ok);
        // One path 0-1 with end degree 2, one path 0-1-2 with degrees 2 and 1.
        assert!((scores[0] - 0.5f64.ln()).abs() < 1e-12);
        assert!((scores[1] - 0.5f64.ln()).abs() < 1e-12);
        unsafe { colabel_graph_free(g) };
    }

    #[test]
    fn select_top_k_orders_and_reports_shortfall() {
        // Node 3 is isolated, so only two of three requested slots fill.
        let edges = [0usize, 1, 1, 2];
        let g = unsafe { colabel_graph_from_edges(4, edges.as_ptr(), 2) };
        let sources = [0usize];
        let candidates = [1usize, 2, 3];
        let mut nodes = [0usize; 3];
        let mut selected = 0usize;
        let mut shortfall = 0usize;
        let status = unsafe {
            colabel_select_top_k(
                g,
                sources.as_ptr(),
                1,
                candidates.as_ptr(),
                3,
                3,
                nodes.as_mut_ptr(),
                &mut selected,
                &mut shortfall,
            )
        };
        assert_eq!(status, ColabelStatus::Ok);
        assert_eq!(selected, 2);
        assert_eq!(shortfall, 1);
        assert_eq!(&nodes[..2], &[1, 2]);
        unsafe { colabel_graph_free(g) };
    }

    #[test]
    fn empty_sources_is_invalid() {
        let g = path_graph();
        let candidates = [1usize];
        let mut scores = [0.0f64; 1];
        let status = unsafe {
            colabel_influence_log_scores(
                g,
                std::ptr::null(),
                0,
                candidates.as_ptr(),
                1,
                scores.as_mut_ptr(),
            )
        };
        assert_eq!(status, ColabelStatus::InvalidArgument);
        assert!(last_error().contains("source"));
        unsafe { colabel_graph_free(g) };
    }

    #[test]
    fn agreement_bound_hand_value() {
        let mut value = 0.0f64;
        let mut exceeds = false;
        let status =
            unsafe { colabel_agreement_accuracy_bound(0.8, 0.7, 7, &mut value, &mut exceeds) };
        assert_eq!(status, ColabelStatus::Ok);
        assert!((value - 0.56 / 0.57).abs() < 1e-12);
        assert!(exceeds);
        let status =
            unsafe { colabel_agreement_accuracy_bound(1.2, 0.7, 7, &mut value, &mut exceeds) };
        assert_eq!(status, ColabelStatus::InvalidArgument);
    }

    #[test]
    fn loss_functions_match_hand_values() {
        unsafe {
            let mut v = 0.0f64;
            assert_eq!(colabel_odds(0.75, &mut v), ColabelStatus::Ok);
            assert!((v - 3.0).abs() < 1e-12);
            assert_eq!(colabel_odds(1.0, &mut v), ColabelStatus::InvalidArgument);

            assert_eq!(
                colabel_orpo_preference_function(0.9, 0.1, &mut v),
                ColabelStatus::Ok
            );
            assert!((v - 81f64.ln()).abs() < 1e-12);

            assert_eq!(colabel_preference_loss(0.5, 0.5, &mut v), ColabelStatus::Ok);
            assert!((v - 2f64.ln()).abs() < 1e-12);

            assert_eq!(
                colabel_instruction_loss(0.5, 1e-7, &mut v),
                ColabelStatus::Ok
            );
            assert!((v - 2f64.ln()).abs() < 1e-12);

            let mut dc = 0.0f64;
            let mut dr = 0.0f64;
            assert_eq!(
                colabel_preference_loss_grad(0.5, 0.5, &mut dc, &mut dr),
                ColabelStatus::Ok
            );
            assert!((dc + 2.0).abs() < 1e-12);
            assert!((dr - 2.0).abs() < 1e-12);
        }
    }

    #[test]
    fn combined_loss_composes() {
        let instr = [0.5f64];
        let chosen = [0.5f64];
        let rejected = [0.5f64];
        let mut v = 0.0f64;
        let status = unsafe {
            colabel_combined_loss(
                instr.as_ptr(),
                1,
                chosen.as_ptr(),
                rejected.as_ptr(),
                1,
                0.1,
                1e-7,
                &mut v,
            )
        };
        assert_eq!(status, ColabelStatus::Ok);
        assert!((v - 1.1 * 2f64.ln()).abs() < 1e-12);
    }

    #[test]
    fn null_outputs_are_rejected() {
        unsafe {
            assert_eq!(
                colabel_odds(0.5, std::ptr::null_mut()),
                ColabelStatus::InvalidArgument
            );
            let g = path_graph();
            let sources = [0usize];
            let candidates = [1usize];
            assert_eq!(
                colabel_influence_log_scores(
                    g,
                    sources.as_ptr(),
                    1,
                    candidates.as_ptr(),
                    1,
                    std::ptr::null_mut()
                ),
                ColabelStatus::InvalidArgument
            );
            colabel_graph_free(g);
        }
    }

    #[test]
    fn generated_header_covers_the_surface() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR"))
            .join("include")
            .join("colabel.h");
        let text = std::fs::read_to_string(&header).expect("header generated at build time");
        for symbol in [
            "colabel_graph_load",
            "colabel_graph_from_edges",
            "colabel_graph_free",
            "colabel_graph_num_nodes",
            "colabel_graph_num_edges",
            "colabel_graph_degree",
            "colabel_influence_log_scores",
            "colabel_select_top_k",
            "colabel_agreement_accuracy_bound",
            "colabel_instruction_loss",
            "colabel_odds",
            "colabel_orpo_preference_function",
            "colabel_preference_loss",
            "colabel_preference_loss_grad",
            "colabel_combined_loss",
            "colabel_last_error_message",
            "ColabelStatus",
            "ColabelGraph",
        ] {
            assert!(text.contains(symbol), "header is missing {symbol}");
        }
    }
}
