#ifndef CONTACT_LAB_H
#define CONTACT_LAB_H

/* Generated by cbindgen from the contact-lab-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Status code returned by every FFI entry point.
typedef enum ClStatus {
  // The call succeeded and all out-parameters are populated.
  CL_STATUS_OK = 0,
  // A required pointer argument was null.
  CL_STATUS_NULL_POINTER = 1,
  // A string argument was not valid UTF-8.
  CL_STATUS_INVALID_UTF8 = 2,
  // Arguments were structurally valid but rejected (unknown family,
  // malformed config, wrong buffer length, zero iterate, ...).
  CL_STATUS_INVALID_ARGUMENT = 3,
  // The computation itself failed (integration or solver error).
  CL_STATUS_RUNTIME_ERROR = 4,
  // The library caught a panic; state is consistent but the call did
  // nothing.
  CL_STATUS_INTERNAL_PANIC = 5,
} ClStatus;

// Opaque handle to a compactly supported contactomorphism (a word of
// contact Hamiltonian flows together with its integration settings).
typedef struct ClMap ClMap;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Builds a catalog contactomorphism.
//
// `family` is one of `radial_twist`, `z_perturbed_twist`,
// `anisotropic_twist`, `hamiltonian_lift`; `params_json` carries its
// parameters, e.g. `{"c": 1.0, "power": 2}` or
// `{"c": 0.7, "a": 1.0, "b": 2.0}`. `periodic_z` selects the manifold
// (`false` for Euclidean space, `true` for the circle-fibered case) and
// `steps_per_unit` the RK4 resolution per unit of flow time.
//
// # Safety
// `family` and `params_json` must be NUL-terminated strings; `out` must be
// a valid pointer. On success `*out` owns the handle and must be released
// with [`cl_map_free`].
enum ClStatus cl_map_new(const char *family,
                         const char *params_json,
                         size_t n,
                         bool periodic_z,
                         size_t steps_per_unit,
                         struct ClMap **out);

// Creates the `k`-th iterate of `map` as a new handle.
//
// # Safety
// `map` must be a live handle; `out` must be valid. On success `*out`
// owns the new handle.
enum ClStatus cl_map_iterate(const struct ClMap *map, size_t k, struct ClMap **out);

// Releases a handle created by [`cl_map_new`] or [`cl_map_iterate`].
// Passing null is a no-op.
//
// # Safety
// `map` must be null or a live handle; the handle must not be used again.
void cl_map_free(struct ClMap *map);

// Writes the flat point dimension `2 n + 1` of the map to `*out_dim`.
//
// # Safety
// `map` must be a live handle and `out_dim` a valid pointer.
enum ClStatus cl_map_dim(const struct ClMap *map, size_t *out_dim);

// Evaluates the map at `q`, writing the image point (flat layout, same
// length as `q`) and the conformal exponent `g` with `phi* alpha = e^g alpha`.
//
// # Safety
// `map` must be a live handle; `q` must point to `len` doubles;
// `out_image` must have room for `len` doubles; `out_g` must be valid.
enum ClStatus cl_map_evaluate(const struct ClMap *map,
                              const double *q,
                              size_t len,
                              double *out_image,
                              double *out_g);

// Writes the Euclidean norm of the translated-point residual
// `[phi(q)_xy - q_xy, g(q)]` to `*out_norm`; zero exactly on translated
// points of the map.
//
// # Safety
// Same pointer contracts as [`cl_map_evaluate`].
enum ClStatus cl_translated_residual(const struct ClMap *map,
                                     const double *q,
                                     size_t len,
                                     double *out_norm);

// Writes the contact action `z(phi(q)) - z(q)` (the Reeb displacement;
// the action of a translated point when the residual vanishes) to
// `*out_action`.
//
// # Safety
// Same pointer contracts as [`cl_map_evaluate`].
enum ClStatus cl_contact_action(const struct ClMap *map,
                                const double *q,
                                size_t len,
                                double *out_action);

// Writes the Legendrian-graph point of the map at `q` as
// `[base (2n+1), p (2n+1), theta]`, `4 n + 3` doubles in total: the jet
// coordinates in which translated points are exactly the intersections
// with the wall `p = 0` and `theta` is the contact action there.
//
// # Safety
// `map` must be a live handle; `q` must point to `len` doubles;
// `out_graph` must have room for `graph_len = 2 * len + 1` doubles.
enum ClStatus cl_jet_graph_point(const struct ClMap *map,
                                 const double *q,
                                 size_t len,
                                 double *out_graph,
                                 size_t graph_len);

// Runs a full translated-point census from an experiment configuration
// (the same JSON schema the CLI accepts) and returns the report JSON.
//
// # Safety
// `config_json` must be a NUL-terminated string and `out_report_json` a
// valid pointer. On success `*out_report_json` owns a NUL-terminated
// string that must be released with [`cl_string_free`].
enum ClStatus cl_census_run(const char *config_json, char **out_report_json);

// Releases a string returned by [`cl_census_run`]. Passing null is a
// no-op.
//
// # Safety
// `s` must be null or a string owned by this library; it must not be used
// again.
void cl_string_free(char *s);

// Returns the message for the most recent failure on this thread, or an
// empty string if nothing failed yet. The pointer stays valid until the
// next failing call on the same thread.
const char *cl_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CONTACT_LAB_H */
