// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <string>

#include "mmm/kernels.hpp"

namespace mmm::kernels {

namespace {

bool cpu_has_avx2() {
#if defined(MMM_HAVE_AVX2)
    return __builtin_cpu_supports("avx2") && __builtin_cpu_supports("fma");
#else
    return false;
#endif
}

const KernelTable* pick_default() {
    if (const char* env = std::getenv("MMM_KERNELS")) {
        std::string want = env;
#if defined(MMM_HAVE_AVX2)
        if (want == "avx2" && cpu_has_avx2()) return &avx2_table();
#endif
        if (want == "scalar") return &scalar_table();
        // Unknown or unavailable request falls through to auto-detection.
    }
#if defined(MMM_HAVE_AVX2)
    if (cpu_has_avx2()) return &avx2_table();
#endif
    return &scalar_table();
}

std::atomic<const KernelTable*> g_active{nullptr};

}  // namespace

const KernelTable& active() {
    const KernelTable* t = g_active.load(std::memory_order_acquire);
    if (!t) {
        t = pick_default();
        g_active.store(t, std::memory_order_release);
    }
    return *t;
}

void set_backend(const std::string& name) {
    if (name == "scalar") {
        g_active.store(&scalar_table(), std::memory_order_release);
        return;
    }
#if defined(MMM_HAVE_AVX2)
    if (name == "avx2") {
        if (!cpu_has_avx2()) throw std::runtime_error("avx2 backend requested but CPU lacks AVX2/FMA");
        g_active.store(&avx2_table(), std::memory_order_release);
        return;
    }
#endif
    throw std::runtime_error("unknown kernel backend: " + name);
}

std::string backend_name() { return active().name; }

}  // namespace mmm::kernels
