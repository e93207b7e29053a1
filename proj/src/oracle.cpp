// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>

#include "mmm/fft.hpp"

namespace mmm::oracle {

namespace {

// Integer two-pass chamfer distance (orthogonal 3, diagonal 4) to the cells
// of one component; exact for these masks, hence bit-exact under mirroring.
constexpr int32_t kInf = std::numeric_limits<int32_t>::max() / 4;

void chamfer_to(const std::vector<uint8_t>& mask, int g, std::vector<int32_t>& d) {
    d.assign(static_cast<size_t>(g) * g, kInf);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j)
            if (mask[i * g + j]) d[i * g + j] = 0;
    auto relax = [&](int i, int j, int di, int dj, int w) {
        const int ni = i + di, nj = j + dj;
        if (ni < 0 || ni >= g || nj < 0 || nj >= g) return;
        d[i * g + j] = std::min(d[i * g + j], d[ni * g + nj] + w);
    };
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            relax(i, j, -1, 0, 3);
            relax(i, j, 0, -1, 3);
            relax(i, j, -1, -1, 4);
            relax(i, j, -1, 1, 4);
        }
    for (int i = g - 1; i >= 0; --i)
        for (int j = g - 1; j >= 0; --j) {
            relax(i, j, 1, 0, 3);
            relax(i, j, 0, 1, 3);
            relax(i, j, 1, 1, 4);
            relax(i, j, 1, -1, 4);
        }
}

// 8-connected component labels over material cells; 0 = void, labels from 1.
int label_components(const Grid2D<uint8_t>& grid, std::vector<int>& labels) {
    const int g = grid.rows();
    labels.assign(static_cast<size_t>(g) * g, 0);
    int next = 0;
    std::deque<int> queue;
    for (int start = 0; start < g * g; ++start) {
        if (!grid.data()[start] || labels[start]) continue;
        ++next;
        labels[start] = next;
        queue.push_back(start);
        while (!queue.empty()) {
            const int cur = queue.front();
            queue.pop_front();
            const int ci = cur / g, cj = cur % g;
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    if (di == 0 && dj == 0) continue;
                    const int ni = ci + di, nj = cj + dj;
                    if (ni < 0 || ni >= g || nj < 0 || nj >= g) continue;
                    const int idx = ni * g + nj;
                    if (grid.data()[idx] && !labels[idx]) {
                        labels[idx] = next;
                        queue.push_back(idx);
                    }
                }
        }
    }
    return next;
}

}  // namespace

TaskWeights task_center() { return {"center", {-1, -1, -1, -1, 8, -1, -1, -1, -1}}; }
TaskWeights task_top() { return {"top", {-1, 8, -1, -1, -1, -1, -1, -1, -1}}; }
TaskWeights task_corner() { return {"corner", {-1, -1, -1, -1, -1, -1, -1, -1, -8}}; }
TaskWeights task_corner_focus() { return {"corner_focus", {-1, -1, -1, -1, -1, -1, -1, -1, 8}}; }

Grid2D<uint8_t> tile_supercell(const Grid2D<uint8_t>& atom, int tiles) {
    const int n = atom.rows();
    Grid2D<uint8_t> out(n * tiles, n * tiles, 0);
    for (int i = 0; i < n * tiles; ++i)
        for (int j = 0; j < n * tiles; ++j) out(i, j) = atom(i % n, j % n);
    return out;
}

Grid2D<double> source_amplitudes(const Grid2D<uint8_t>& supercell, int atom_n, const Constants& constants) {
    const int g = supercell.rows();
    if (g != supercell.cols()) throw ValidationError("supercell must be square");

    // Boundary map: cells differing from any in-grid 4-neighbor; out-of-grid
    // counts as void.
    auto value_at = [&](int i, int j) -> uint8_t {
        if (i < 0 || i >= g || j < 0 || j >= g) return 0;
        return supercell(i, j);
    };
    std::vector<uint8_t> boundary(static_cast<size_t>(g) * g, 0);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            const uint8_t v = supercell(i, j);
            if (v != value_at(i - 1, j) || v != value_at(i + 1, j) || v != value_at(i, j - 1) ||
                v != value_at(i, j + 1))
                boundary[i * g + j] = 1;
        }

    std::vector<int> labels;
    const int ncomp = label_components(supercell, labels);

    // Per-component chamfer fields. d_gap(b) is the distance to the nearest
    // material cell of a component not already touching b's 8-neighborhood;
    // if none is eligible the supercell span G is used.
    std::vector<std::vector<int32_t>> dist(ncomp);
    std::vector<uint8_t> mask(static_cast<size_t>(g) * g);
    for (int c = 0; c < ncomp; ++c) {
        for (int idx = 0; idx < g * g; ++idx) mask[idx] = labels[idx] == c + 1 ? 1 : 0;
        chamfer_to(mask, g, dist[c]);
    }

    Grid2D<double> amp(g, g, 0.0);
    std::vector<uint8_t> adjacent(ncomp + 1);
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            if (!boundary[i * g + j]) continue;
            std::fill(adjacent.begin(), adjacent.end(), 0);
            for (int di = -1; di <= 1; ++di)
                for (int dj = -1; dj <= 1; ++dj) {
                    const int ni = i + di, nj = j + dj;
                    if (ni < 0 || ni >= g || nj < 0 || nj >= g) continue;
                    adjacent[labels[ni * g + nj]] = 1;
                }
            double d_gap = static_cast<double>(g);
            for (int c = 0; c < ncomp; ++c) {
                if (adjacent[c + 1]) continue;
                const int32_t d = dist[c][i * g + j];
                if (d < kInf) d_gap = std::min(d_gap, static_cast<double>(d) / 3.0);
            }
            const double scaled = constants.gap_softening + d_gap / atom_n;
            amp(i, j) = constants.source_gain / (scaled * scaled);
        }
    return amp;
}

EnergyField radiate(const std::vector<std::complex<double>>& sources, int grid, int atom_n,
                    const Constants& constants) {
    if (static_cast<int>(sources.size()) != grid * grid) throw ValidationError("source field size mismatch");
    const int pad = 2 * grid;  // linear convolution needs >= 2*grid-1
    fft::Fft2<double> fft(pad);

    // Kernel sampled at pixel offsets, wrapped into the padded grid.
    const double k0 = constants.wavenumber();
    const double decay = static_cast<double>(constants.tiles);
    std::vector<std::complex<double>> khat(static_cast<size_t>(pad) * pad);
    {
        auto* in = fft.in();
        std::fill(in, in + static_cast<size_t>(pad) * pad, std::complex<double>(0.0, 0.0));
        for (int dy = -(grid - 1); dy <= grid - 1; ++dy)
            for (int dx = -(grid - 1); dx <= grid - 1; ++dx) {
                const double r = std::hypot(static_cast<double>(dx), static_cast<double>(dy)) / atom_n;
                const std::complex<double> k = std::polar(1.0 / (1.0 + r * decay), k0 * r);
                const int wy = (dy + pad) % pad;
                const int wx = (dx + pad) % pad;
                in[static_cast<size_t>(wy) * pad + wx] = k;
            }
        fft.forward();
        std::copy(fft.out(), fft.out() + khat.size(), khat.begin());
    }

    {
        auto* in = fft.in();
        std::fill(in, in + static_cast<size_t>(pad) * pad, std::complex<double>(0.0, 0.0));
        for (int i = 0; i < grid; ++i)
            for (int j = 0; j < grid; ++j) in[static_cast<size_t>(i) * pad + j] = sources[i * grid + j];
        fft.forward();
    }
    {
        auto* in = fft.in();
        const auto* shat = fft.out();
        for (size_t idx = 0; idx < khat.size(); ++idx) in[idx] = shat[idx] * khat[idx];
        fft.backward();
    }
    EnergyField out(grid, grid, 0.0);
    const double norm = 1.0 / (static_cast<double>(pad) * pad);
    const auto* e = fft.out();
    for (int i = 0; i < grid; ++i)
        for (int j = 0; j < grid; ++j) out(i, j) = std::norm(e[static_cast<size_t>(i) * pad + j] * norm);
    return out;
}

EnergyField simulate(const Grid2D<uint8_t>& atom, const Grid2D<double>& phase, const Constants& constants) {
    const int n = atom.rows();
    if (n != atom.cols()) throw ValidationError("meta-atom image must be square");
    const int g = n * constants.tiles;
    if (phase.rows() != g || phase.cols() != g)
        throw ValidationError("phase grid does not match tiled supercell (expected " + std::to_string(g) + ")");
    for (size_t i = 0; i < phase.size(); ++i)
        if (!std::isfinite(phase.data()[i])) throw ValidationError("non-finite phase value");

    const Grid2D<uint8_t> cell = tile_supercell(atom, constants.tiles);
    const Grid2D<double> amp = source_amplitudes(cell, n, constants);
    std::vector<std::complex<double>> sources(static_cast<size_t>(g) * g, {0.0, 0.0});
    bool any = false;
    for (int i = 0; i < g; ++i)
        for (int j = 0; j < g; ++j) {
            const double a = amp(i, j);
            if (a != 0.0) {
                sources[static_cast<size_t>(i) * g + j] = std::polar(a, phase(i, j));
                any = true;
            }
        }
    if (!any) return EnergyField(g, g, 0.0);  // no sources, identically zero field
    return radiate(sources, g, n, constants);
}

ResponseMatrix response_matrix(const EnergyField& field) {
    const int g = field.rows();
    if (g != field.cols() || g % 3 != 0) throw ValidationError("field must be square with side divisible by 3");
    const int patch = g / 3;
    ResponseMatrix r;
    double total = 0.0;
    for (int m = 0; m < 3; ++m)
        for (int n = 0; n < 3; ++n) {
            double acc = 0.0;
            for (int i = m * patch; i < (m + 1) * patch; ++i)
                for (int j = n * patch; j < (n + 1) * patch; ++j) {
                    const double v = field(i, j);
                    if (!(v >= 0.0) || !std::isfinite(v)) throw ValidationError("energy field must be finite and non-negative");
                    acc += v;
                }
            r(m, n) = acc;
            total += acc;
        }
    if (total <= 0.0) throw ValidationError("degenerate response: field integrates to zero");
    for (double& v : r.l) v /= total;
    return r;
}

double fom(const ResponseMatrix& response, const TaskWeights& weights) {
    double acc = 0.0;
    for (int i = 0; i < 9; ++i) acc += weights.w[i] * response.l[i];
    return acc;
}

}  // namespace mmm::oracle
