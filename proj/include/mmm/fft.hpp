// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <complex>
#include <memory>

namespace mmm::fft {

// Per-thread 2-D complex FFT workspace of fixed size n x n. Plans are created
// with FFTW_ESTIMATE so planning is deterministic; execution happens on the
// workspace's own buffers (callers copy in/out). Plan creation/destruction is
// serialized internally; execution is safe concurrently across workspaces.
template <typename T>
class Fft2 {
public:
    explicit Fft2(int n);
    ~Fft2();
    Fft2(const Fft2&) = delete;
    Fft2& operator=(const Fft2&) = delete;

    int size() const { return n_; }

    std::complex<T>* in();        // n*n buffer, row-major
    std::complex<T>* out();       // n*n buffer, row-major
    void forward();               // out = unnormalized forward transform of in
    void backward();              // out = unnormalized inverse transform of in

private:
    struct Impl;
    int n_;
    std::unique_ptr<Impl> impl_;
};

extern template class Fft2<float>;
extern template class Fft2<double>;

}  // namespace mmm::fft
