// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <vector>

#include "mmm/common.hpp"

namespace mmm::stimulus {

// Two-harmonic phase parameterization [phi1, alpha1, beta1, phi2, alpha2,
// beta2]: amplitudes in [0, pi], shifts in [0, 2*pi).
struct PhaseParams {
    std::array<double, 6> v{};

    double amp(int j) const { return v[3 * j]; }        // j in {0,1}
    double shift_x(int j) const { return v[3 * j + 1]; }
    double shift_y(int j) const { return v[3 * j + 2]; }

    // Throws ValidationError naming the offending variable.
    void validate() const;

    bool operator==(const PhaseParams&) const = default;
};

inline constexpr int kNumHarmonics = 2;
inline constexpr int kPhaseDim = 6;

// Dimensionless spatial frequency multiplier: harmonic j has wavenumber
// pi * kFrequencyScale / j over normalized supercell coordinates [0,1).
inline constexpr double kFrequencyScale = 3.0;

// phi(x,y) = sum_j amp_j cos(k_j x + alpha_j) cos(k_j y + beta_j),
// x,y in supercell units.
double phase_at(const PhaseParams& p, double x, double y);

// Sampled at pixel centers (p+0.5)/G. |phi| <= amp_1 + amp_2 everywhere.
Grid2D<double> phase_field(const PhaseParams& p, int grid);

// Analytic partials d(phi)/d(param_k), same grid sampling, ordered as the
// parameter vector.
std::array<Grid2D<double>, kPhaseDim> phase_jacobian(const PhaseParams& p, int grid);

// Clamp amplitudes to [0, pi] and wrap shifts mod 2*pi (phases are periodic).
PhaseParams project_to_bounds(const PhaseParams& p);

}  // namespace mmm::stimulus
