#ifndef HKIT_H
#define HKIT_H

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

#define HKIT_OK 0

#define HKIT_ERR_NULL 1

#define HKIT_ERR_DIMENSION 2

#define HKIT_ERR_DEGREE 3

#define HKIT_ERR_YOUNG_CONDITION 4

#define HKIT_ERR_PRECONDITION 5

#define HKIT_ERR_ON_CURVE 6

#define HKIT_ERR_PARSE 7

#define HKIT_ERR_IO 8

#define HKIT_ERR_INTERNAL 9

#define HKIT_ERR_PANIC 10

#define HKIT_ERR_BUFFER 11

#define HKIT_YOUNG_RS 0

#define HKIT_YOUNG_MOLLIFIED 1

// Differential form on a flat torus, stored by Fourier modes.
typedef struct HkitForm HkitForm;

// Uniformly or non-uniformly sampled path in R^d.
typedef struct HkitPath HkitPath;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *hkit_version(void);

// Copies the calling thread's last error message into `buf`.
// `needed` (nullable) receives the size including the terminator.
//
// # Safety
// `buf` must be writable for `len` bytes or null.
int hkit_last_error(char *buf, size_t len, size_t *needed);

// Path from `len` sample times and `len * dim` row-major values.
//
// # Safety
// `times` and `values` must point to arrays of the stated sizes.
int hkit_path_new(const double *times,
                  size_t len,
                  size_t dim,
                  const double *values,
                  struct HkitPath **out);

// Random Weierstrass path of Hölder exponent `gamma` on [0, 1] with `n` intervals.
//
// # Safety
// `out` must be writable.
int hkit_path_weierstrass(double gamma,
                          uint32_t base,
                          size_t terms,
                          size_t n,
                          size_t dim,
                          uint64_t seed,
                          struct HkitPath **out);

// # Safety
// `path` must be a live handle; `len` and `dim` writable.
int hkit_path_shape(const struct HkitPath *path, size_t *len, size_t *dim);

// Copies the row-major sample values into `buf` of capacity `cap` doubles.
//
// # Safety
// `path` must be a live handle and `buf` writable for `cap` doubles.
int hkit_path_values(const struct HkitPath *path, double *buf, size_t cap);

// # Safety
// `path` must come from this library and not be used afterwards. Null is ignored.
void hkit_path_free(struct HkitPath *path);

// ∫ f dg for scalar paths on a common grid. `method` is `HKIT_YOUNG_RS` or
// `HKIT_YOUNG_MOLLIFIED`; NaN exponents are estimated from the data.
//
// # Safety
// Handles must be live; `value` and `error_estimate` writable (the latter nullable).
int hkit_young(const struct HkitPath *f,
               const struct HkitPath *g,
               int method,
               double alpha,
               double beta,
               double *value,
               double *error_estimate);

// Korányi distance between points given as interleaved (x1, y1, …, xn, yn, t).
//
// # Safety
// `p` and `q` must hold `2n + 1` doubles each.
int hkit_koranyi_dist(size_t n, const double *p, const double *q, double *out);

// Horizontal lift of an even-dimensional planar path starting at height `t0`;
// the result has one extra (height) component.
//
// # Safety
// `planar` must be a live handle and `out` writable.
int hkit_horizontal_lift(const struct HkitPath *planar, double t0, struct HkitPath **out);

// Random real k-form of degree `l` on T^k with modes |ξ_i| ≤ `m`.
//
// # Safety
// `out` must be writable.
int hkit_form_random(size_t k,
                     size_t l,
                     size_t m,
                     uint64_t seed,
                     bool mean_zero,
                     struct HkitForm **out);

// # Safety
// `json` must be a NUL-terminated string; `out` writable.
int hkit_form_from_json(const char *json, struct HkitForm **out);

// Serializes a form; with a short buffer returns `HKIT_ERR_BUFFER` and sets `needed`.
//
// # Safety
// `form` must be live; `buf` writable for `len` bytes or null; `needed` nullable.
int hkit_form_to_json(const struct HkitForm *form, char *buf, size_t len, size_t *needed);

// L² norm over the torus.
//
// # Safety
// `form` must be live and `out` writable.
int hkit_form_norm(const struct HkitForm *form, double *out);

// w = dα + δβ + h. Each output handle is nullable and receives a new form.
//
// # Safety
// `form` must be live; non-null outputs writable.
int hkit_hodge_split(const struct HkitForm *form,
                     struct HkitForm **d_part,
                     struct HkitForm **delta_part,
                     struct HkitForm **harmonic);

// # Safety
// `form` must come from this library and not be used afterwards. Null is ignored.
void hkit_form_free(struct HkitForm *form);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HKIT_H */
