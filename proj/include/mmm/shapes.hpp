// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mmm/common.hpp"

namespace mmm::shapes {

// Binary material indicator on an N x N pixel grid, quadrant mirror symmetric:
// chi(i,j) = chi(N-1-i,j) = chi(i,N-1-j).
using MetaAtomImage = Grid2D<uint8_t>;

// Sparse spectral descriptor: the non-negative-frequency quadrant of the
// centered real spectrum, (m+1)^2 coefficients, row-major in (k,l).
struct FourierFeature {
    int m = 5;
    int source_n = 0;
    std::vector<double> coeffs;  // length (m+1)^2

    int dim() const { return (m + 1) * (m + 1); }
    bool operator==(const FourierFeature&) const = default;
};

// Min-max normalized reconstruction; exactly constant inputs map to 0.5.
using LevelSet = Grid2D<double>;

struct BlendSpec {
    std::vector<int> class_indices;  // 2..4 distinct entries
    std::vector<double> weights;     // simplex weights, aligned with class_indices
};

// Per-component statistics of a feature collection, used for standardized
// distances and the optimizer's coordinate box.
struct FeatureStats {
    std::vector<double> mean;
    std::vector<double> stddev;   // components with zero spread store 1
    std::vector<double> min_std;  // per-component min of standardized values
    std::vector<double> max_std;

    std::vector<double> standardize(const std::vector<double>& raw) const;
    std::vector<double> destandardize(const std::vector<double>& std_coords) const;
};

enum class AtomClass { Bowtie = 0, Ellipse, IBeam, Ring, SquareRing, Cross };
inline constexpr int kNumClasses = 6;
inline constexpr const char* kGeneratorConstantsVersion = "atoms-v1";

std::string class_name(AtomClass c);
AtomClass class_from_name(const std::string& name);

// Parametric generator for the start-up families. N even, >= 16; output is
// quadrant symmetric with material fraction in [0.05, 0.7].
MetaAtomImage class_representative(AtomClass c, int n);

double material_fraction(const MetaAtomImage& img);
// Throws ValidationError naming the first offending pixel if asymmetric.
void validate_quadrant_symmetry(const MetaAtomImage& img);

// Centered 2-D transform, low-frequency (2m+1)^2 block, stored as its real
// quadrant. Requires quadrant symmetry (which makes the block real) and
// 2m+1 < N.
FourierFeature encode(const MetaAtomImage& img, int m);

// Un-normalized reconstruction; linear in the feature coefficients.
Grid2D<double> decode_raw(const FourierFeature& f, int n);

struct Decoded {
    LevelSet level_set;
    MetaAtomImage image;
};
Decoded decode(const FourierFeature& f, int n, double threshold = 0.5);

// Convex combination of features (shared m and source resolution).
FourierFeature blend(const std::vector<FourierFeature>& features, const std::vector<double>& weights);

struct GroundSet {
    int m = 5;
    int n = 0;
    uint64_t seed = 0;
    int nb_min = 2;
    int nb_max = 4;
    std::vector<FourierFeature> features;
    std::vector<BlendSpec> specs;
    FeatureStats stats;
};

// Deterministic bulk synthesis; every output decodes to a non-empty, non-full
// image (resampled within a bounded retry budget, else throws).
GroundSet synthesize_ground_set(int count, int nb_min, int nb_max, int n, int m, uint64_t seed, int jobs = 1);

FeatureStats compute_stats(const std::vector<FourierFeature>& features);

}  // namespace mmm::shapes
