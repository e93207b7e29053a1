// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmm/stimulus.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

namespace mmm::stimulus {

namespace {
constexpr double kPi = std::numbers::pi;
constexpr double kTwoPi = 2.0 * std::numbers::pi;

const char* kParamNames[kPhaseDim] = {"phi1", "alpha1", "beta1", "phi2", "alpha2", "beta2"};

double wavenumber(int j) { return kPi * kFrequencyScale / (j + 1); }
}  // namespace

void PhaseParams::validate() const {
    for (int j = 0; j < kNumHarmonics; ++j) {
        if (!(amp(j) >= 0.0 && amp(j) <= kPi))
            throw ValidationError(std::string(kParamNames[3 * j]) + " out of bounds [0, pi]");
        if (!(shift_x(j) >= 0.0 && shift_x(j) < kTwoPi))
            throw ValidationError(std::string(kParamNames[3 * j + 1]) + " out of bounds [0, 2pi)");
        if (!(shift_y(j) >= 0.0 && shift_y(j) < kTwoPi))
            throw ValidationError(std::string(kParamNames[3 * j + 2]) + " out of bounds [0, 2pi)");
    }
}

double phase_at(const PhaseParams& p, double x, double y) {
    double acc = 0.0;
    for (int j = 0; j < kNumHarmonics; ++j) {
        const double k = wavenumber(j);
        acc += p.amp(j) * std::cos(k * x + p.shift_x(j)) * std::cos(k * y + p.shift_y(j));
    }
    return acc;
}

Grid2D<double> phase_field(const PhaseParams& p, int grid) {
    p.validate();
    Grid2D<double> out(grid, grid);
    for (int i = 0; i < grid; ++i) {
        const double y = (i + 0.5) / grid;
        for (int j = 0; j < grid; ++j) {
            const double x = (j + 0.5) / grid;
            out(i, j) = phase_at(p, x, y);
        }
    }
    return out;
}

std::array<Grid2D<double>, kPhaseDim> phase_jacobian(const PhaseParams& p, int grid) {
    p.validate();
    std::array<Grid2D<double>, kPhaseDim> out;
    for (auto& g : out) g = Grid2D<double>(grid, grid);
    for (int i = 0; i < grid; ++i) {
        const double y = (i + 0.5) / grid;
        for (int j = 0; j < grid; ++j) {
            const double x = (j + 0.5) / grid;
            for (int h = 0; h < kNumHarmonics; ++h) {
                const double k = wavenumber(h);
                const double cx = std::cos(k * x + p.shift_x(h));
                const double sx = std::sin(k * x + p.shift_x(h));
                const double cy = std::cos(k * y + p.shift_y(h));
                const double sy = std::sin(k * y + p.shift_y(h));
                out[3 * h](i, j) = cx * cy;
                out[3 * h + 1](i, j) = -p.amp(h) * sx * cy;
                out[3 * h + 2](i, j) = -p.amp(h) * cx * sy;
            }
        }
    }
    return out;
}

PhaseParams project_to_bounds(const PhaseParams& p) {
    PhaseParams out = p;
    for (int j = 0; j < kNumHarmonics; ++j) {
        out.v[3 * j] = std::clamp(out.v[3 * j], 0.0, kPi);
        for (int s = 1; s <= 2; ++s) {
            double& a = out.v[3 * j + s];
            a = std::fmod(a, kTwoPi);
            if (a < 0.0) a += kTwoPi;
        }
    }
    return out;
}

}  // namespace mmm::stimulus
