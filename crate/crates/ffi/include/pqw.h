#ifndef PQW_H
#define PQW_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Result codes of every fallible call.
typedef enum PqwStatus {
  PQW_STATUS_OK = 0,
  PQW_STATUS_NULL_POINTER = 1,
  PQW_STATUS_INVALID_ARGUMENT = 2,
  PQW_STATUS_GUARD = 3,
  PQW_STATUS_DIMENSION_MISMATCH = 4,
  PQW_STATUS_NUMERICAL = 5,
  PQW_STATUS_PANIC = 6,
} PqwStatus;

// Graph kind for [`pqw_topology_new`].
typedef enum PqwTopologyKind {
  PQW_TOPOLOGY_KIND_LINE = 0,
  PQW_TOPOLOGY_KIND_CIRCLE = 1,
} PqwTopologyKind;

// Orthonormal attractor basis of a topology.
typedef struct PqwAttractorBasis PqwAttractorBasis;

// A density matrix.
typedef struct PqwDensityMatrix PqwDensityMatrix;

// A line or circle of N sites.
typedef struct PqwTopology PqwTopology;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread, or null.
//
// The pointer stays valid until the next failing call on the same thread.
const char *pqw_last_error(void);

// Creates a topology with `n_sites` sites.
//
// # Safety
// `out` must be valid for one pointer write.
enum PqwStatus pqw_topology_new(enum PqwTopologyKind kind,
                                size_t n_sites,
                                struct PqwTopology **out);

// # Safety
// `t` must be null or a handle from [`pqw_topology_new`] not yet freed.
void pqw_topology_free(struct PqwTopology *t);

// Builds the orthonormal attractor basis for one or two particles.
//
// # Safety
// `t` must be a live topology handle and `out` valid for one pointer write.
enum PqwStatus pqw_attractor_basis_new(const struct PqwTopology *t,
                                       size_t particles,
                                       struct PqwAttractorBasis **out);

// Writes the sector sizes for eigenvalues 1, i, −i, −1 to `sizes[0..4]`.
//
// # Safety
// `b` must be a live basis handle and `sizes` valid for four writes.
enum PqwStatus pqw_attractor_basis_sector_sizes(const struct PqwAttractorBasis *b, size_t *sizes);

// # Safety
// `b` must be null or a basis handle not yet freed.
void pqw_attractor_basis_free(struct PqwAttractorBasis *b);

// Two walkers on sites `x`, `y` with Bell coin a|ψ+⟩ + b|ψ−⟩ + c|φ+⟩ + d|φ−⟩.
//
// `coin` holds `[re a, im a, re b, im b, re c, im c, re d, im d]` and must be normalized.
//
// # Safety
// `t` must be a live topology, `coin` valid for eight reads and `out` for one pointer write.
enum PqwStatus pqw_density_from_bell(const struct PqwTopology *t,
                                     size_t x,
                                     size_t y,
                                     const double *coin,
                                     struct PqwDensityMatrix **out);

// Matrix side length.
//
// # Safety
// `rho` must be a live density handle and `dim` valid for one write.
enum PqwStatus pqw_density_dim(const struct PqwDensityMatrix *rho, size_t *dim);

// Copies the matrix row-major as interleaved `(re, im)` pairs; `len` is the buffer length in doubles.
//
// # Safety
// `rho` must be a live density handle and `buf` valid for `len` writes.
enum PqwStatus pqw_density_copy(const struct PqwDensityMatrix *rho,
                                double *buf,
                                size_t len);

// # Safety
// `rho` must be null or a density handle not yet freed.
void pqw_density_free(struct PqwDensityMatrix *rho);

// Applies the exact channel with uniform break probability `p` for `steps` steps.
//
// # Safety
// Handles must be live and `out` valid for one pointer write.
enum PqwStatus pqw_evolve_exact(const struct PqwTopology *t,
                                size_t particles,
                                double p,
                                const struct PqwDensityMatrix *rho,
                                size_t steps,
                                struct PqwDensityMatrix **out);

// Asymptotic state at time `n` predicted by the attractor basis.
//
// # Safety
// Handles must be live and `out` valid for one pointer write.
enum PqwStatus pqw_project_asymptotic(const struct PqwAttractorBasis *b,
                                      const struct PqwDensityMatrix *rho,
                                      uint64_t n,
                                      struct PqwDensityMatrix **out);

// Two-qubit coin state after tracing out both positions.
//
// # Safety
// `rho` must be a live two-particle density handle and `out` valid for one pointer write.
enum PqwStatus pqw_reduced_coin_state(const struct PqwDensityMatrix *rho,
                                      struct PqwDensityMatrix **out);

// Hilbert–Schmidt distance between two states of equal dimension.
//
// # Safety
// Handles must be live and `out` valid for one write.
enum PqwStatus pqw_hs_distance(const struct PqwDensityMatrix *a,
                               const struct PqwDensityMatrix *b,
                               double *out);

// Negativity for the split `d1 × d2`.
//
// # Safety
// `rho` must be a live density handle and `out` valid for one write.
enum PqwStatus pqw_negativity(const struct PqwDensityMatrix *rho,
                              size_t d1,
                              size_t d2,
                              double *out);

// Concurrence of a two-qubit (4×4) state.
//
// # Safety
// `rho` must be a live density handle and `out` valid for one write.
enum PqwStatus pqw_concurrence(const struct PqwDensityMatrix *rho, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* PQW_H */
