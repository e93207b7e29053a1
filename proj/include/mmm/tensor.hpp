// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmm/common.hpp"

namespace mmm {

enum class Dtype : uint8_t { F32 = 0, F64 = 1, U8 = 2 };

inline size_t dtype_size(Dtype d) {
    switch (d) {
        case Dtype::F32: return 4;
        case Dtype::F64: return 8;
        case Dtype::U8: return 1;
    }
    throw ValidationError("unknown dtype code");
}

// In-memory image of the on-disk tensor format: dtype + dims + row-major
// little-endian payload. Invariant: payload.size() == numel() * dtype_size().
struct Tensor {
    Dtype dtype = Dtype::F64;
    std::vector<uint64_t> dims;
    std::vector<uint8_t> payload;

    uint64_t numel() const {
        uint64_t n = 1;
        for (uint64_t d : dims) n *= d;
        return n;
    }

    static Tensor from_f64(const std::vector<double>& values, std::vector<uint64_t> dims);
    static Tensor from_f32(const std::vector<float>& values, std::vector<uint64_t> dims);
    static Tensor from_u8(const std::vector<uint8_t>& values, std::vector<uint64_t> dims);

    std::vector<double> to_f64() const;   // F32 widens, U8 converts
    std::vector<float> to_f32() const;    // F64 narrows
    std::vector<uint8_t> to_u8() const;   // requires dtype == U8

    bool operator==(const Tensor&) const = default;
};

}  // namespace mmm
