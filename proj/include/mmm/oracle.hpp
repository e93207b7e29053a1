// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <array>
#include <complex>
#include <cstdint>
#include <string>
#include <vector>

#include "mmm/common.hpp"

namespace mmm::oracle {

// Deterministic synthetic field solver: gap-driven boundary sources radiated
// through an oscillatory long-range kernel. All constants are versioned and
// serialized with every dataset so results are pinned.
struct Constants {
    std::string version = "oracle-v1";
    double source_gain = 1.0;       // A0
    double gap_softening = 0.03;    // eps0 in A = A0 / (eps0 + d_gap/N)^2
    int tiles = 3;                  // supercell is tiles x tiles copies
    // Kernel K(r) = exp(i k0 r) / (1 + r * tiles), r in unit-cell lengths,
    // k0 = 2*pi*tiles/3.
    double wavenumber() const { return 2.0 * 3.14159265358979323846 * tiles / 3.0; }

    bool operator==(const Constants&) const = default;
};

using EnergyField = Grid2D<double>;  // |E|^2, non-negative

// 3x3 patch-integrated energies, normalized to unit sum.
struct ResponseMatrix {
    std::array<double, 9> l{};
    double operator()(int m, int n) const { return l[m * 3 + n]; }
    double& operator()(int m, int n) { return l[m * 3 + n]; }
};

// Task scoring weights over the 3x3 response, row-major.
struct TaskWeights {
    std::string label;
    std::array<double, 9> w{};
};

// Built-in targets: center focus, top-middle focus, and the corner pattern
// (shipped verbatim with a negative corner; see corner_focus_variant).
TaskWeights task_center();
TaskWeights task_top();
TaskWeights task_corner();
// Corner task with the +8 focusing sign, used by the end-to-end pipeline.
TaskWeights task_corner_focus();

// Tile the meta-atom tiles x tiles; result is (tiles*n) x (tiles*n).
Grid2D<uint8_t> tile_supercell(const Grid2D<uint8_t>& atom, int tiles);

// Full pipeline: boundary map -> gap distances -> complex sources ->
// radiating-kernel convolution -> |E|^2. phase must match the tiled grid.
EnergyField simulate(const Grid2D<uint8_t>& atom, const Grid2D<double>& phase, const Constants& constants);

// Convolve an explicit complex source field with the radiating kernel
// (atom_n fixes the unit-cell length in pixels). Exposed for property tests.
EnergyField radiate(const std::vector<std::complex<double>>& sources, int grid, int atom_n,
                    const Constants& constants);

// Gap-driven source amplitudes (zero off the boundary map). Exposed for
// inspection and tests.
Grid2D<double> source_amplitudes(const Grid2D<uint8_t>& supercell, int atom_n, const Constants& constants);

// Patch-sum the field into 3x3 and normalize to unit sum; throws on an
// all-zero field.
ResponseMatrix response_matrix(const EnergyField& field);

// J = sum_mn W_mn * L_mn (larger is better).
double fom(const ResponseMatrix& response, const TaskWeights& weights);

}  // namespace mmm::oracle
