// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

// AVX2/FMA kernel variants. Compiled with -mavx2 -mfma; only reached through
// the dispatch table after a runtime cpuid check.

#include <immintrin.h>

#include <cmath>
#include <cstddef>

#include "mmm/kernels.hpp"

namespace mmm::kernels {

namespace {

void axpy_f32(size_t n, float a, const float* x, float* y) {
    const __m256 va = _mm256_set1_ps(a);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vy = _mm256_loadu_ps(y + i);
        vy = _mm256_fmadd_ps(va, _mm256_loadu_ps(x + i), vy);
        _mm256_storeu_ps(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void axpy_f64(size_t n, double a, const double* x, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d vy = _mm256_loadu_pd(y + i);
        vy = _mm256_fmadd_pd(va, _mm256_loadu_pd(x + i), vy);
        _mm256_storeu_pd(y + i, vy);
    }
    for (; i < n; ++i) y[i] += a * x[i];
}

void add_scaled_f32(size_t n, const float* x, float a, const float* s, float* y) {
    const __m256 va = _mm256_set1_ps(a);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_fmadd_ps(va, _mm256_loadu_ps(s + i), _mm256_loadu_ps(x + i));
        _mm256_storeu_ps(y + i, v);
    }
    for (; i < n; ++i) y[i] = x[i] + a * s[i];
}

void add_scaled_f64(size_t n, const double* x, double a, const double* s, double* y) {
    const __m256d va = _mm256_set1_pd(a);
    size_t i = 0;
    for (; i + 4 <= n; i += 4) {
        __m256d v = _mm256_fmadd_pd(va, _mm256_loadu_pd(s + i), _mm256_loadu_pd(x + i));
        _mm256_storeu_pd(y + i, v);
    }
    for (; i < n; ++i) y[i] = x[i] + a * s[i];
}

double hsum_pd(__m256d v) {
    __m128d lo = _mm256_castpd256_pd128(v);
    __m128d hi = _mm256_extractf128_pd(v, 1);
    lo = _mm_add_pd(lo, hi);
    return _mm_cvtsd_f64(lo) + _mm_cvtsd_f64(_mm_unpackhi_pd(lo, lo));
}

// f32 reductions accumulate in double lanes so they track the scalar
// reference closely even for long vectors.
double dot_f32(size_t n, const float* x, const float* y) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vx = _mm256_loadu_ps(x + i);
        __m256 vy = _mm256_loadu_ps(y + i);
        __m256d x0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vx));
        __m256d x1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1));
        __m256d y0 = _mm256_cvtps_pd(_mm256_castps256_ps128(vy));
        __m256d y1 = _mm256_cvtps_pd(_mm256_extractf128_ps(vy, 1));
        acc0 = _mm256_fmadd_pd(x0, y0, acc0);
        acc1 = _mm256_fmadd_pd(x1, y1, acc1);
    }
    double acc = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += static_cast<double>(x[i]) * static_cast<double>(y[i]);
    return acc;
}

double dot_f64(size_t n, const double* x, const double* y) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i), _mm256_loadu_pd(y + i), acc0);
        acc1 = _mm256_fmadd_pd(_mm256_loadu_pd(x + i + 4), _mm256_loadu_pd(y + i + 4), acc1);
    }
    double acc = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i] * y[i];
    return acc;
}

double sum_f32(size_t n, const float* x) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 vx = _mm256_loadu_ps(x + i);
        acc0 = _mm256_add_pd(acc0, _mm256_cvtps_pd(_mm256_castps256_ps128(vx)));
        acc1 = _mm256_add_pd(acc1, _mm256_cvtps_pd(_mm256_extractf128_ps(vx, 1)));
    }
    double acc = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += static_cast<double>(x[i]);
    return acc;
}

double sum_f64(size_t n, const double* x) {
    __m256d acc0 = _mm256_setzero_pd();
    __m256d acc1 = _mm256_setzero_pd();
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        acc0 = _mm256_add_pd(acc0, _mm256_loadu_pd(x + i));
        acc1 = _mm256_add_pd(acc1, _mm256_loadu_pd(x + i + 4));
    }
    double acc = hsum_pd(_mm256_add_pd(acc0, acc1));
    for (; i < n; ++i) acc += x[i];
    return acc;
}

void cmul_acc_f32(size_t n, const float* ar, const float* ai, const float* br, const float* bi, float* or_, float* oi,
                  bool conj_a) {
    size_t i = 0;
    if (!conj_a) {
        for (; i + 8 <= n; i += 8) {
            __m256 var = _mm256_loadu_ps(ar + i), vai = _mm256_loadu_ps(ai + i);
            __m256 vbr = _mm256_loadu_ps(br + i), vbi = _mm256_loadu_ps(bi + i);
            __m256 re = _mm256_fmsub_ps(vai, vbi, _mm256_mul_ps(var, vbr));  // ai*bi - ar*br
            __m256 im = _mm256_fmadd_ps(var, vbi, _mm256_mul_ps(vai, vbr));
            _mm256_storeu_ps(or_ + i, _mm256_sub_ps(_mm256_loadu_ps(or_ + i), re));
            _mm256_storeu_ps(oi + i, _mm256_add_ps(_mm256_loadu_ps(oi + i), im));
        }
        for (; i < n; ++i) {
            or_[i] += ar[i] * br[i] - ai[i] * bi[i];
            oi[i] += ar[i] * bi[i] + ai[i] * br[i];
        }
    } else {
        for (; i + 8 <= n; i += 8) {
            __m256 var = _mm256_loadu_ps(ar + i), vai = _mm256_loadu_ps(ai + i);
            __m256 vbr = _mm256_loadu_ps(br + i), vbi = _mm256_loadu_ps(bi + i);
            __m256 re = _mm256_fmadd_ps(vai, vbi, _mm256_mul_ps(var, vbr));
            __m256 im = _mm256_fmsub_ps(var, vbi, _mm256_mul_ps(vai, vbr));
            _mm256_storeu_ps(or_ + i, _mm256_add_ps(_mm256_loadu_ps(or_ + i), re));
            _mm256_storeu_ps(oi + i, _mm256_add_ps(_mm256_loadu_ps(oi + i), im));
        }
        for (; i < n; ++i) {
            or_[i] += ar[i] * br[i] + ai[i] * bi[i];
            oi[i] += ar[i] * bi[i] - ai[i] * br[i];
        }
    }
}

void cmul_acc_f64(size_t n, const double* ar, const double* ai, const double* br, const double* bi, double* or_,
                  double* oi, bool conj_a) {
    size_t i = 0;
    if (!conj_a) {
        for (; i + 4 <= n; i += 4) {
            __m256d var = _mm256_loadu_pd(ar + i), vai = _mm256_loadu_pd(ai + i);
            __m256d vbr = _mm256_loadu_pd(br + i), vbi = _mm256_loadu_pd(bi + i);
            __m256d re = _mm256_fmsub_pd(vai, vbi, _mm256_mul_pd(var, vbr));
            __m256d im = _mm256_fmadd_pd(var, vbi, _mm256_mul_pd(vai, vbr));
            _mm256_storeu_pd(or_ + i, _mm256_sub_pd(_mm256_loadu_pd(or_ + i), re));
            _mm256_storeu_pd(oi + i, _mm256_add_pd(_mm256_loadu_pd(oi + i), im));
        }
        for (; i < n; ++i) {
            or_[i] += ar[i] * br[i] - ai[i] * bi[i];
            oi[i] += ar[i] * bi[i] + ai[i] * br[i];
        }
    } else {
        for (; i + 4 <= n; i += 4) {
            __m256d var = _mm256_loadu_pd(ar + i), vai = _mm256_loadu_pd(ai + i);
            __m256d vbr = _mm256_loadu_pd(br + i), vbi = _mm256_loadu_pd(bi + i);
            __m256d re = _mm256_fmadd_pd(vai, vbi, _mm256_mul_pd(var, vbr));
            __m256d im = _mm256_fmsub_pd(var, vbi, _mm256_mul_pd(vai, vbr));
            _mm256_storeu_pd(or_ + i, _mm256_add_pd(_mm256_loadu_pd(or_ + i), re));
            _mm256_storeu_pd(oi + i, _mm256_add_pd(_mm256_loadu_pd(oi + i), im));
        }
        for (; i < n; ++i) {
            or_[i] += ar[i] * br[i] + ai[i] * bi[i];
            oi[i] += ar[i] * bi[i] - ai[i] * br[i];
        }
    }
}

// Vectorized expf: range reduction x = n ln2 + r, degree-5 minimax on r,
// 2^n via exponent-field insertion. Relative error ~1e-7 over normal range.
__m256 exp256_ps(__m256 x) {
    const __m256 hi = _mm256_set1_ps(88.3762626647950f);
    const __m256 lo = _mm256_set1_ps(-87.3365478515625f);
    x = _mm256_min_ps(_mm256_max_ps(x, lo), hi);
    const __m256 log2e = _mm256_set1_ps(1.44269504088896341f);
    __m256 nf = _mm256_round_ps(_mm256_mul_ps(x, log2e), _MM_FROUND_TO_NEAREST_INT | _MM_FROUND_NO_EXC);
    const __m256 ln2_hi = _mm256_set1_ps(0.693359375f);
    const __m256 ln2_lo = _mm256_set1_ps(-2.12194440e-4f);
    __m256 r = _mm256_fnmadd_ps(nf, ln2_hi, x);
    r = _mm256_fnmadd_ps(nf, ln2_lo, r);
    __m256 p = _mm256_set1_ps(1.9875691500e-4f);
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.3981999507e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(8.3334519073e-3f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(4.1665795894e-2f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(1.6666665459e-1f));
    p = _mm256_fmadd_ps(p, r, _mm256_set1_ps(5.0000001201e-1f));
    __m256 r2 = _mm256_mul_ps(r, r);
    __m256 y = _mm256_fmadd_ps(p, r2, _mm256_add_ps(r, _mm256_set1_ps(1.0f)));
    __m256i ni = _mm256_cvtps_epi32(nf);
    __m256i pow2 = _mm256_slli_epi32(_mm256_add_epi32(ni, _mm256_set1_epi32(127)), 23);
    return _mm256_mul_ps(y, _mm256_castsi256_ps(pow2));
}

// Same Abramowitz-Stegun fit as the scalar f32 reference.
__m256 erf256_ps(__m256 x) {
    const __m256 sign_mask = _mm256_set1_ps(-0.0f);
    __m256 sign = _mm256_and_ps(x, sign_mask);
    __m256 ax = _mm256_andnot_ps(sign_mask, x);
    __m256 t = _mm256_div_ps(_mm256_set1_ps(1.0f), _mm256_fmadd_ps(_mm256_set1_ps(0.3275911f), ax, _mm256_set1_ps(1.0f)));
    __m256 p = _mm256_set1_ps(1.061405429f);
    p = _mm256_fmadd_ps(p, t, _mm256_set1_ps(-1.453152027f));
    p = _mm256_fmadd_ps(p, t, _mm256_set1_ps(1.421413741f));
    p = _mm256_fmadd_ps(p, t, _mm256_set1_ps(-0.284496736f));
    p = _mm256_fmadd_ps(p, t, _mm256_set1_ps(0.254829592f));
    __m256 e = exp256_ps(_mm256_mul_ps(_mm256_sub_ps(_mm256_setzero_ps(), ax), ax));
    __m256 r = _mm256_fnmadd_ps(_mm256_mul_ps(p, t), e, _mm256_set1_ps(1.0f));
    return _mm256_or_ps(r, sign);
}

void gelu_f32(size_t n, const float* x, float* y) {
    const __m256 inv_sqrt2 = _mm256_set1_ps(0.707106781f);
    const __m256 half = _mm256_set1_ps(0.5f);
    const __m256 one = _mm256_set1_ps(1.0f);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        __m256 cdf2 = _mm256_add_ps(one, erf256_ps(_mm256_mul_ps(v, inv_sqrt2)));
        _mm256_storeu_ps(y + i, _mm256_mul_ps(_mm256_mul_ps(half, v), cdf2));
    }
    if (i < n) scalar_table().gelu_f32(n - i, x + i, y + i);
}

void gelu_grad_f32(size_t n, const float* x, const float* g, float* dx) {
    const __m256 inv_sqrt2 = _mm256_set1_ps(0.707106781f);
    const __m256 inv_sqrt2pi = _mm256_set1_ps(0.398942280f);
    const __m256 half = _mm256_set1_ps(0.5f);
    const __m256 one = _mm256_set1_ps(1.0f);
    size_t i = 0;
    for (; i + 8 <= n; i += 8) {
        __m256 v = _mm256_loadu_ps(x + i);
        __m256 cdf = _mm256_mul_ps(half, _mm256_add_ps(one, erf256_ps(_mm256_mul_ps(v, inv_sqrt2))));
        __m256 pdf = _mm256_mul_ps(inv_sqrt2pi, exp256_ps(_mm256_mul_ps(_mm256_set1_ps(-0.5f), _mm256_mul_ps(v, v))));
        __m256 d = _mm256_fmadd_ps(v, pdf, cdf);
        _mm256_storeu_ps(dx + i, _mm256_mul_ps(_mm256_loadu_ps(g + i), d));
    }
    if (i < n) scalar_table().gelu_grad_f32(n - i, x + i, g + i, dx + i);
}

}  // namespace

const KernelTable& avx2_table() {
    static const KernelTable table = {
        "avx2",
        axpy_f32,
        axpy_f64,
        add_scaled_f32,
        add_scaled_f64,
        dot_f32,
        dot_f64,
        sum_f32,
        sum_f64,
        cmul_acc_f32,
        cmul_acc_f64,
        gelu_f32,
        scalar_table().gelu_f64,  // f64 activation stays on the exact scalar path
        gelu_grad_f32,
        scalar_table().gelu_grad_f64,
    };
    return table;
}

}  // namespace mmm::kernels
