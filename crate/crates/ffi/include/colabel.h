/* C interface for the colabel pseudo-labeling library. */

#ifndef COLABEL_H
#define COLABEL_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result code of a C ABI call.
typedef enum ColabelStatus {
  COLABEL_STATUS_OK = 0,
  // A pointer, range, or value argument was unusable.
  COLABEL_STATUS_INVALID_ARGUMENT = 1,
  COLABEL_STATUS_IO_ERROR = 2,
  COLABEL_STATUS_PARSE_ERROR = 3,
  // Training or evaluation produced a non-finite number.
  COLABEL_STATUS_NUMERIC_ERROR = 4,
  COLABEL_STATUS_MISSING_DATA = 5,
  COLABEL_STATUS_ENDPOINT_ERROR = 6,
  // An unexpected internal failure; detail in the last-error message.
  COLABEL_STATUS_INTERNAL_ERROR = 7,
} ColabelStatus;

// Opaque undirected graph handle.
typedef struct ColabelGraph ColabelGraph;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message describing the most recent failure on this thread.
//
// The pointer stays valid until the next failing call on the same thread.
// Returns an empty string when no error has occurred.
const char *colabel_last_error_message(void);

// Loads a graph from a tab-separated edge list, optionally headed by
// `n=<count>`. Returns null on failure; see the last-error message.
//
// # Safety
// `path` must be a valid NUL-terminated string.
struct ColabelGraph *colabel_graph_load(const char *path);

// Builds a graph from `n_edges` (source, target) pairs laid out as
// `2 * n_edges` node ids. Self-loops are dropped and duplicates merged.
//
// # Safety
// `edges` must point to `2 * n_edges` readable ids (or be null when
// `n_edges` is zero).
struct ColabelGraph *colabel_graph_from_edges(uintptr_t n_nodes,
                                              const uintptr_t *edges,
                                              uintptr_t n_edges);

// Releases a graph handle. Null is ignored.
//
// # Safety
// `graph` must have come from a colabel constructor and not been freed.
void colabel_graph_free(struct ColabelGraph *graph);

// Node count; zero for a null handle.
//
// # Safety
// `graph` must be a live handle or null.
uintptr_t colabel_graph_num_nodes(const struct ColabelGraph *graph);

// Undirected edge count; zero for a null handle.
//
// # Safety
// `graph` must be a live handle or null.
uintptr_t colabel_graph_num_edges(const struct ColabelGraph *graph);

// Writes the degree of `node` into `out_degree`.
//
// # Safety
// `graph` must be a live handle; `out_degree` must be writable.
enum ColabelStatus colabel_graph_degree(const struct ColabelGraph *graph,
                                        uintptr_t node,
                                        uintptr_t *out_degree);

// Writes the log influence score of every candidate against the best
// source into `out_scores` (length `n_candidates`). Unreachable candidates
// get negative infinity.
//
// # Safety
// Array arguments must match their stated lengths; `out_scores` must hold
// `n_candidates` doubles.
enum ColabelStatus colabel_influence_log_scores(const struct ColabelGraph *graph,
                                                const uintptr_t *sources,
                                                uintptr_t n_sources,
                                                const uintptr_t *candidates,
                                                uintptr_t n_candidates,
                                                double *out_scores);

// Picks up to `k` candidates by descending influence score. Writes the
// chosen node ids into `out_nodes` (capacity `k`), the number written into
// `out_selected`, and the unfilled request into `out_shortfall`.
//
// # Safety
// Array arguments must match their stated lengths; `out_nodes` must hold
// `k` ids; the two count pointers must be writable.
enum ColabelStatus colabel_select_top_k(const struct ColabelGraph *graph,
                                        const uintptr_t *sources,
                                        uintptr_t n_sources,
                                        const uintptr_t *candidates,
                                        uintptr_t n_candidates,
                                        uintptr_t k,
                                        uintptr_t *out_nodes,
                                        uintptr_t *out_selected,
                                        uintptr_t *out_shortfall);

// Predicted accuracy within the agreement set of two conditionally
// independent annotators with accuracies `p_llm` and `p_gnn` over
// `n_classes` classes. `out_exceeds_both` reports whether the value
// strictly exceeds both accuracies.
//
// # Safety
// `out_value` and `out_exceeds_both` must be writable.
enum ColabelStatus colabel_agreement_accuracy_bound(double p_llm,
                                                    double p_gnn,
                                                    uintptr_t n_classes,
                                                    double *out_value,
                                                    bool *out_exceeds_both);

// Negative log likelihood of probability `p` clamped into
// `[epsilon, 1 - epsilon]`.
//
// # Safety
// `out_loss` must be writable.
enum ColabelStatus colabel_instruction_loss(double p, double epsilon, double *out_loss);

// Odds `p / (1 - p)`; `p` must lie strictly inside (0, 1).
//
// # Safety
// `out_odds` must be writable.
enum ColabelStatus colabel_odds(double p, double *out_odds);

// Log odds ratio of the chosen over the rejected probability.
//
// # Safety
// `out_value` must be writable.
enum ColabelStatus colabel_orpo_preference_function(double p_chosen,
                                                    double p_rejected,
                                                    double *out_value);

// Preference loss `-ln(sigmoid(log odds ratio))`.
//
// # Safety
// `out_loss` must be writable.
enum ColabelStatus colabel_preference_loss(double p_chosen, double p_rejected, double *out_loss);

// Analytic partial derivatives of the preference loss with respect to both
// probabilities.
//
// # Safety
// Both output pointers must be writable.
enum ColabelStatus colabel_preference_loss_grad(double p_chosen,
                                                double p_rejected,
                                                double *out_d_chosen,
                                                double *out_d_rejected);

// Mean instruction loss over `instr_probs` plus `lambda` times the mean
// preference loss over the `(pref_chosen[i], pref_rejected[i])` pairs.
//
// # Safety
// Array arguments must match their stated lengths; `out_loss` must be
// writable.
enum ColabelStatus colabel_combined_loss(const double *instr_probs,
                                         uintptr_t n_instr,
                                         const double *pref_chosen,
                                         const double *pref_rejected,
                                         uintptr_t n_pref,
                                         double lambda,
                                         double epsilon,
                                         double *out_loss);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* COLABEL_H */
