// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#include <cmath>
#include <cstddef>

#include "mmm/kernels.hpp"

namespace mmm::kernels {

namespace {

template <typename T>
void axpy_impl(size_t n, T a, const T* x, T* y) {
    for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

template <typename T>
void add_scaled_impl(size_t n, const T* x, T a, const T* s, T* y) {
    for (size_t i = 0; i < n; ++i) y[i] = x[i] + a * s[i];
}

template <typename T>
double dot_impl(size_t n, const T* x, const T* y) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return acc;
}

template <typename T>
double sum_impl(size_t n, const T* x) {
    double acc = 0.0;
    for (size_t i = 0; i < n; ++i) acc += static_cast<double>(x[i]);
    return acc;
}

template <typename T>
void cmul_acc_impl(size_t n, const T* ar, const T* ai, const T* br, const T* bi, T* or_, T* oi, bool conj_a) {
    if (!conj_a) {
        for (size_t i = 0; i < n; ++i) {
            or_[i] += ar[i] * br[i] - ai[i] * bi[i];
            oi[i] += ar[i] * bi[i] + ai[i] * br[i];
        }
    } else {
        for (size_t i = 0; i < n; ++i) {
            or_[i] += ar[i] * br[i] + ai[i] * bi[i];
            oi[i] += ar[i] * bi[i] - ai[i] * br[i];
        }
    }
}

// Single-precision erf via the Abramowitz-Stegun rational fit (|err| < 2e-7),
// shared with the SIMD variant so the two backends agree tightly. Double
// precision uses std::erf so the f64 gradient-check path stays exact.
inline float erf_poly(float x) {
    const float sign = x < 0.0f ? -1.0f : 1.0f;
    const float ax = std::fabs(x);
    const float t = 1.0f / (1.0f + 0.3275911f * ax);
    float p = 1.061405429f;
    p = p * t - 1.453152027f;
    p = p * t + 1.421413741f;
    p = p * t - 0.284496736f;
    p = p * t + 0.254829592f;
    const float e = std::exp(-ax * ax);
    return sign * (1.0f - p * t * e);
}

constexpr double kInvSqrt2 = 0.70710678118654752440;
constexpr double kInvSqrt2Pi = 0.39894228040143267794;

void gelu_f32_impl(size_t n, const float* x, float* y) {
    for (size_t i = 0; i < n; ++i) {
        const float v = x[i];
        y[i] = 0.5f * v * (1.0f + erf_poly(v * static_cast<float>(kInvSqrt2)));
    }
}

void gelu_f64_impl(size_t n, const double* x, double* y) {
    for (size_t i = 0; i < n; ++i) {
        const double v = x[i];
        y[i] = 0.5 * v * (1.0 + std::erf(v * kInvSqrt2));
    }
}

void gelu_grad_f32_impl(size_t n, const float* x, const float* g, float* dx) {
    for (size_t i = 0; i < n; ++i) {
        const float v = x[i];
        const float cdf = 0.5f * (1.0f + erf_poly(v * static_cast<float>(kInvSqrt2)));
        const float pdf = static_cast<float>(kInvSqrt2Pi) * std::exp(-0.5f * v * v);
        dx[i] = g[i] * (cdf + v * pdf);
    }
}

void gelu_grad_f64_impl(size_t n, const double* x, const double* g, double* dx) {
    for (size_t i = 0; i < n; ++i) {
        const double v = x[i];
        const double cdf = 0.5 * (1.0 + std::erf(v * kInvSqrt2));
        const double pdf = kInvSqrt2Pi * std::exp(-0.5 * v * v);
        dx[i] = g[i] * (cdf + v * pdf);
    }
}

}  // namespace

const KernelTable& scalar_table() {
    static const KernelTable table = {
        "scalar",
        axpy_impl<float>,
        axpy_impl<double>,
        add_scaled_impl<float>,
        add_scaled_impl<double>,
        dot_impl<float>,
        dot_impl<double>,
        sum_impl<float>,
        sum_impl<double>,
        cmul_acc_impl<float>,
        cmul_acc_impl<double>,
        gelu_f32_impl,
        gelu_f64_impl,
        gelu_grad_f32_impl,
        gelu_grad_f64_impl,
    };
    return table;
}

}  // namespace mmm::kernels
