// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmm/fft.hpp"

#include <fftw3.h>

#include <mutex>

namespace mmm::fft {

namespace {
std::mutex& plan_mutex() {
    static std::mutex mu;
    return mu;
}
}  // namespace

template <typename T>
struct FftwApi;

template <>
struct FftwApi<double> {
    using cplx = fftw_complex;
    using plan = fftw_plan;
    static void* alloc(size_t n) { return fftw_malloc(n); }
    static void free_buf(void* p) { fftw_free(p); }
    static plan plan_2d(int n, cplx* in, cplx* out, int sign) {
        return fftw_plan_dft_2d(n, n, in, out, sign, FFTW_ESTIMATE);
    }
    static void execute(plan p) { fftw_execute(p); }
    static void destroy(plan p) { fftw_destroy_plan(p); }
};

template <>
struct FftwApi<float> {
    using cplx = fftwf_complex;
    using plan = fftwf_plan;
    static void* alloc(size_t n) { return fftwf_malloc(n); }
    static void free_buf(void* p) { fftwf_free(p); }
    static plan plan_2d(int n, cplx* in, cplx* out, int sign) {
        return fftwf_plan_dft_2d(n, n, in, out, sign, FFTW_ESTIMATE);
    }
    static void execute(plan p) { fftwf_execute(p); }
    static void destroy(plan p) { fftwf_destroy_plan(p); }
};

template <typename T>
struct Fft2<T>::Impl {
    using Api = FftwApi<T>;
    typename Api::cplx* in = nullptr;
    typename Api::cplx* out = nullptr;
    typename Api::plan fwd{};
    typename Api::plan bwd{};
};

template <typename T>
Fft2<T>::Fft2(int n) : n_(n), impl_(new Impl) {
    using Api = FftwApi<T>;
    size_t bytes = sizeof(typename Api::cplx) * static_cast<size_t>(n) * n;
    impl_->in = static_cast<typename Api::cplx*>(Api::alloc(bytes));
    impl_->out = static_cast<typename Api::cplx*>(Api::alloc(bytes));
    std::lock_guard<std::mutex> lock(plan_mutex());
    impl_->fwd = Api::plan_2d(n, impl_->in, impl_->out, FFTW_FORWARD);
    impl_->bwd = Api::plan_2d(n, impl_->in, impl_->out, FFTW_BACKWARD);
}

template <typename T>
Fft2<T>::~Fft2() {
    using Api = FftwApi<T>;
    {
        std::lock_guard<std::mutex> lock(plan_mutex());
        Api::destroy(impl_->fwd);
        Api::destroy(impl_->bwd);
    }
    Api::free_buf(impl_->in);
    Api::free_buf(impl_->out);
}

template <typename T>
std::complex<T>* Fft2<T>::in() {
    return reinterpret_cast<std::complex<T>*>(impl_->in);
}

template <typename T>
std::complex<T>* Fft2<T>::out() {
    return reinterpret_cast<std::complex<T>*>(impl_->out);
}

template <typename T>
void Fft2<T>::forward() {
    FftwApi<T>::execute(impl_->fwd);
}

template <typename T>
void Fft2<T>::backward() {
    FftwApi<T>::execute(impl_->bwd);
}

template class Fft2<float>;
template class Fft2<double>;

}  // namespace mmm::fft
