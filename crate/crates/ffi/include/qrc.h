#ifndef QRC_H
#define QRC_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum QrcStatus {
  QRC_STATUS_OK = 0,
  QRC_STATUS_NULL_POINTER = 1,
  QRC_STATUS_INVALID_ARGUMENT = 2,
  QRC_STATUS_CONFIG = 3,
  QRC_STATUS_NUMERICAL = 4,
  QRC_STATUS_IO = 5,
  QRC_STATUS_CACHE = 6,
  QRC_STATUS_PANIC = 7,
} QrcStatus;

/**
 * Drive parameters of the kicked-Ising reservoir.
 */
typedef struct QrcDrive QrcDrive;

/**
 * Percolation network of an effective Hamiltonian.
 */
typedef struct QrcNetwork QrcNetwork;

/**
 * Dense unitary on `2^N` basis states.
 */
typedef struct QrcUnitary QrcUnitary;

/**
 * Message for the last failed call on this thread, or NULL if none.
 *
 * The pointer stays valid until the next failing call on the same thread.
 */
const char *qrc_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *qrc_version(void);

/**
 * Creates drive parameters with no disorder.
 *
 * # Safety
 * `out` must be a valid pointer to writable storage for one handle.
 */
enum QrcStatus qrc_drive_new(uint32_t num_qubits,
                             double epsilon,
                             double j0t,
                             double alpha,
                             uint32_t periods,
                             struct QrcDrive **out);

/**
 * Enables onsite disorder fields drawn from Uniform[0, width] with `seed`.
 *
 * # Safety
 * `drive` must be a live handle from [`qrc_drive_new`].
 */
enum QrcStatus qrc_drive_set_disorder(struct QrcDrive *drive, double width, uint64_t seed);

/**
 * # Safety
 * `drive` must be NULL or a handle from [`qrc_drive_new`] not yet freed.
 */
void qrc_drive_free(struct QrcDrive *drive);

/**
 * One drive period `F = U2 U1`.
 *
 * # Safety
 * `drive` must be a live handle; `out` must be writable.
 */
enum QrcStatus qrc_floquet_operator(const struct QrcDrive *drive, struct QrcUnitary **out);

/**
 * `F^n` for the drive's period count.
 *
 * # Safety
 * `drive` must be a live handle; `out` must be writable.
 */
enum QrcStatus qrc_propagator(const struct QrcDrive *drive, struct QrcUnitary **out);

/**
 * Side length `2^N` of the matrix, or 0 for NULL.
 *
 * # Safety
 * `u` must be NULL or a live handle.
 */
size_t qrc_unitary_dim(const struct QrcUnitary *u);

/**
 * Copies the entries into `out` (row-major, interleaved, `2 * dim * dim` doubles).
 *
 * # Safety
 * `u` must be a live handle and `out` must hold `len` doubles.
 */
enum QrcStatus qrc_unitary_entries(const struct QrcUnitary *u, double *out, size_t len);

/**
 * # Safety
 * `u` must be NULL or a handle not yet freed.
 */
void qrc_unitary_free(struct QrcUnitary *u);

/**
 * Applies `u` to a normalized state of length `dim` (interleaved in and out).
 *
 * # Safety
 * `state_in` and `state_out` must each hold `2 * dim` doubles.
 */
enum QrcStatus qrc_evolve(const struct QrcUnitary *u,
                          const double *state_in,
                          double *state_out,
                          size_t dim);

/**
 * Product state of `num_qubits` Bloch angles, written to `out` (`2 * 2^N` doubles).
 *
 * # Safety
 * `thetas` and `phis` must hold `num_qubits` doubles; `out` must hold `out_len`.
 */
enum QrcStatus qrc_product_state(const double *thetas,
                                 const double *phis,
                                 size_t num_qubits,
                                 double *out,
                                 size_t out_len);

/**
 * Exact outcome probabilities of a state, z-scored across outcomes.
 *
 * # Safety
 * `state` must hold `2 * dim` doubles and `out` `dim` doubles.
 */
enum QrcStatus qrc_standardized_probabilities(const double *state, size_t dim, double *out);

/**
 * Effective Hamiltonian of a one-period operator and its percolation network.
 *
 * # Safety
 * `floquet` must be a live handle; `out` must be writable.
 */
enum QrcStatus qrc_network_new(const struct QrcUnitary *floquet, struct QrcNetwork **out);

/**
 * # Safety
 * `net` must be NULL or a live handle.
 */
size_t qrc_network_num_edges(const struct QrcNetwork *net);

/**
 * # Safety
 * `net` must be NULL or a live handle.
 */
size_t qrc_network_max_degree(const struct QrcNetwork *net);

/**
 * Degree of every node, `2^N` entries.
 *
 * # Safety
 * `net` must be a live handle and `out` must hold `len` entries.
 */
enum QrcStatus qrc_network_degrees(const struct QrcNetwork *net, size_t *out, size_t len);

/**
 * Log-log least-squares slope and r² of the degree histogram.
 *
 * # Safety
 * `net` must be a live handle; `slope` and `r_squared` must be writable.
 */
enum QrcStatus qrc_network_powerlaw(const struct QrcNetwork *net, double *slope, double *r_squared);

/**
 * # Safety
 * `net` must be NULL or a handle not yet freed.
 */
void qrc_network_free(struct QrcNetwork *net);

#endif  /* QRC_H */
