// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstddef>
#include <string>

namespace mmm::kernels {

// Data-parallel inner loops used by the operator forward/backward paths.
// Scalar reference implementations define the semantics; SIMD variants are
// selected at runtime (cpuid, overridable via MMM_KERNELS=scalar|avx2) and
// equivalence-tested against the reference.
//
// Complex arrays are split-layout (separate re/im planes) so the mode-mixing
// products vectorize along the mode axis.
struct KernelTable {
    const char* name;

    // y[i] += a * x[i]
    void (*axpy_f32)(size_t n, float a, const float* x, float* y);
    void (*axpy_f64)(size_t n, double a, const double* x, double* y);

    // y[i] = x[i] + a * s[i]
    void (*add_scaled_f32)(size_t n, const float* x, float a, const float* s, float* y);
    void (*add_scaled_f64)(size_t n, const double* x, double a, const double* s, double* y);

    // sum_i x[i] * y[i], accumulated in double
    double (*dot_f32)(size_t n, const float* x, const float* y);
    double (*dot_f64)(size_t n, const double* x, const double* y);

    // sum_i x[i], accumulated in double
    double (*sum_f32)(size_t n, const float* x);
    double (*sum_f64)(size_t n, const double* x);

    // o += a * b (conj_a=false) or o += conj(a) * b (conj_a=true), split complex
    void (*cmul_acc_f32)(size_t n, const float* ar, const float* ai, const float* br, const float* bi, float* or_,
                         float* oi, bool conj_a);
    void (*cmul_acc_f64)(size_t n, const double* ar, const double* ai, const double* br, const double* bi,
                         double* or_, double* oi, bool conj_a);

    // y[i] = gelu(x[i]) = 0.5 x (1 + erf(x / sqrt 2))
    void (*gelu_f32)(size_t n, const float* x, float* y);
    void (*gelu_f64)(size_t n, const double* x, double* y);

    // dx[i] = g[i] * gelu'(x[i])
    void (*gelu_grad_f32)(size_t n, const float* x, const float* g, float* dx);
    void (*gelu_grad_f64)(size_t n, const double* x, const double* g, double* dx);
};

const KernelTable& scalar_table();
#if defined(MMM_HAVE_AVX2)
const KernelTable& avx2_table();
#endif

// Active table: chosen once per process from CPU features / MMM_KERNELS.
const KernelTable& active();
// Force a backend by name ("scalar", "avx2"); throws on unknown/unavailable.
void set_backend(const std::string& name);
std::string backend_name();

// Typed convenience wrappers over the active table.
inline void axpy(size_t n, float a, const float* x, float* y) { active().axpy_f32(n, a, x, y); }
inline void axpy(size_t n, double a, const double* x, double* y) { active().axpy_f64(n, a, x, y); }
inline void add_scaled(size_t n, const float* x, float a, const float* s, float* y) {
    active().add_scaled_f32(n, x, a, s, y);
}
inline void add_scaled(size_t n, const double* x, double a, const double* s, double* y) {
    active().add_scaled_f64(n, x, a, s, y);
}
inline double dot(size_t n, const float* x, const float* y) { return active().dot_f32(n, x, y); }
inline double dot(size_t n, const double* x, const double* y) { return active().dot_f64(n, x, y); }
inline double sum(size_t n, const float* x) { return active().sum_f32(n, x); }
inline double sum(size_t n, const double* x) { return active().sum_f64(n, x); }
inline void cmul_acc(size_t n, const float* ar, const float* ai, const float* br, const float* bi, float* or_,
                     float* oi, bool conj_a) {
    active().cmul_acc_f32(n, ar, ai, br, bi, or_, oi, conj_a);
}
inline void cmul_acc(size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* or_,
                     double* oi, bool conj_a) {
    active().cmul_acc_f64(n, ar, ai, br, bi, or_, oi, conj_a);
}
inline void gelu(size_t n, const float* x, float* y) { active().gelu_f32(n, x, y); }
inline void gelu(size_t n, const double* x, double* y) { active().gelu_f64(n, x, y); }
inline void gelu_grad(size_t n, const float* x, const float* g, float* dx) { active().gelu_grad_f32(n, x, g, dx); }
inline void gelu_grad(size_t n, const double* x, const double* g, double* dx) { active().gelu_grad_f64(n, x, g, dx); }

}  // namespace mmm::kernels
