// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmm/shapes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>
#include <numbers>

#include "mmm/parallel.hpp"
#include "mmm/rng.hpp"

namespace mmm::shapes {

namespace {

constexpr double kPi = std::numbers::pi;

// Cosine/sine tables of the centered transform phase 2*pi*k*(i-c)/N with
// c = (N-1)/2. Built mirror-exact: entries for i and N-1-i are bitwise
// identical (cos) or exact negations (sin), so symmetric inputs stay
// symmetric through decode.
struct PhaseTables {
    int n, m;
    std::vector<double> cos_t;  // (m+1) x n
    std::vector<double> sin_t;

    PhaseTables(int n_, int m_) : n(n_), m(m_), cos_t((m_ + 1) * n_), sin_t((m_ + 1) * n_) {
        const double c = 0.5 * (n - 1);
        for (int k = 0; k <= m; ++k) {
            for (int i = 0; i * 2 < n; ++i) {
                const double th = 2.0 * kPi * k * (i - c) / n;
                const double cv = std::cos(th);
                const double sv = std::sin(th);
                cos_t[k * n + i] = cv;
                cos_t[k * n + (n - 1 - i)] = cv;
                sin_t[k * n + i] = sv;
                sin_t[k * n + (n - 1 - i)] = -sv;
            }
        }
    }
    double c(int k, int i) const { return cos_t[k * n + i]; }
    double s(int k, int i) const { return sin_t[k * n + i]; }
};

struct ClassGeometry {
    // Dimensions are fractions of N; see kGeneratorConstantsVersion.
    static bool inside(AtomClass cls, double a, double b) {
        const double pa = std::fabs(a), pb = std::fabs(b);
        switch (cls) {
            case AtomClass::Bowtie: {
                const double gap = 0.03, xmax = 0.42, h = 0.30;
                if (pb < gap || pb > xmax) return false;
                return pa <= h * (pb - gap) / (xmax - gap);
            }
            case AtomClass::Ellipse: {
                const double ra = 0.25, rb = 0.35;
                const double qa = a / ra, qb = b / rb;
                return qa * qa + qb * qb <= 1.0;
            }
            case AtomClass::IBeam: {
                const bool web = pb <= 0.06 && pa <= 0.32;
                const bool flange = pa >= 0.22 && pa <= 0.32 && pb <= 0.35;
                return web || flange;
            }
            case AtomClass::Ring: {
                const double r = std::hypot(a, b);
                return r >= 0.20 && r <= 0.35;
            }
            case AtomClass::SquareRing: {
                const double q = std::max(pa, pb);
                return q > 0.22 && q <= 0.35;
            }
            case AtomClass::Cross: {
                return (pb <= 0.10 && pa <= 0.38) || (pa <= 0.10 && pb <= 0.38);
            }
        }
        throw ValidationError("unknown meta-atom class id");
    }
};

}  // namespace

std::string class_name(AtomClass c) {
    switch (c) {
        case AtomClass::Bowtie: return "bowtie";
        case AtomClass::Ellipse: return "ellipse";
        case AtomClass::IBeam: return "ibeam";
        case AtomClass::Ring: return "ring";
        case AtomClass::SquareRing: return "square_ring";
        case AtomClass::Cross: return "cross";
    }
    throw ValidationError("unknown meta-atom class id");
}

AtomClass class_from_name(const std::string& name) {
    for (int i = 0; i < kNumClasses; ++i) {
        if (name == class_name(static_cast<AtomClass>(i))) return static_cast<AtomClass>(i);
    }
    throw ValidationError("unknown meta-atom class: " + name);
}

MetaAtomImage class_representative(AtomClass c, int n) {
    if (n < 16 || n % 2 != 0) throw ValidationError("meta-atom resolution must be even and >= 16");
    MetaAtomImage img(n, n, 0);
    const double cc = 0.5 * (n - 1);
    // Evaluate one quadrant and mirror so symmetry is exact by construction.
    for (int i = 0; i * 2 < n; ++i) {
        for (int j = 0; j * 2 < n; ++j) {
            const double a = (i - cc) / n;
            const double b = (j - cc) / n;
            const uint8_t v = ClassGeometry::inside(c, a, b) ? 1 : 0;
            img(i, j) = v;
            img(n - 1 - i, j) = v;
            img(i, n - 1 - j) = v;
            img(n - 1 - i, n - 1 - j) = v;
        }
    }
    return img;
}

double material_fraction(const MetaAtomImage& img) {
    size_t count = 0;
    for (size_t i = 0; i < img.size(); ++i) count += img.data()[i];
    return static_cast<double>(count) / static_cast<double>(img.size());
}

void validate_quadrant_symmetry(const MetaAtomImage& img) {
    const int n = img.rows();
    if (n != img.cols()) throw ValidationError("meta-atom image must be square");
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            if (img(i, j) != img(n - 1 - i, j) || img(i, j) != img(i, n - 1 - j)) {
                throw ValidationError("quadrant symmetry violated at pixel (" + std::to_string(i) + "," +
                                      std::to_string(j) + ")");
            }
        }
    }
}

FourierFeature encode(const MetaAtomImage& img, int m) {
    const int n = img.rows();
    if (n != img.cols()) throw ValidationError("meta-atom image must be square");
    if (2 * m + 1 >= n) throw ValidationError("feature block 2m+1 must be smaller than resolution");
    validate_quadrant_symmetry(img);

    PhaseTables tab(n, m);
    // Row pass: P[k][j] = sum_i chi(i,j) * exp(-i * theta_k(i)).
    std::vector<std::complex<double>> row((m + 1) * n);
    for (int k = 0; k <= m; ++k) {
        for (int j = 0; j < n; ++j) {
            double re = 0.0, im = 0.0;
            for (int i = 0; i < n; ++i) {
                if (img(i, j)) {
                    re += tab.c(k, i);
                    im -= tab.s(k, i);
                }
            }
            row[k * n + j] = {re, im};
        }
    }
    FourierFeature f;
    f.m = m;
    f.source_n = n;
    f.coeffs.assign((m + 1) * (m + 1), 0.0);
    double block_norm2 = 0.0, im_max = 0.0;
    for (int k = 0; k <= m; ++k) {
        for (int l = 0; l <= m; ++l) {
            std::complex<double> acc = 0.0;
            for (int j = 0; j < n; ++j) {
                acc += row[k * n + j] * std::complex<double>(tab.c(l, j), -tab.s(l, j));
            }
            f.coeffs[k * (m + 1) + l] = acc.real();
            block_norm2 += std::norm(acc);
            im_max = std::max(im_max, std::fabs(acc.imag()));
        }
    }
    const double block_norm = std::sqrt(block_norm2);
    if (im_max >= 1e-9 * std::max(block_norm, 1e-30) && block_norm > 0.0)
        throw ValidationError("imaginary residue exceeds tolerance; input not quadrant symmetric?");
    return f;
}

Grid2D<double> decode_raw(const FourierFeature& f, int n) {
    if (2 * f.m + 1 > n) throw ValidationError("feature block 2m+1 exceeds target resolution");
    if (static_cast<int>(f.coeffs.size()) != f.dim()) throw ValidationError("feature coefficient count mismatch");
    for (double v : f.coeffs)
        if (!std::isfinite(v)) throw ValidationError("non-finite feature coefficient");

    const int m = f.m;
    PhaseTables tab(n, m);
    // Mirror expansion folds into cosine weights: eps_k = 1 for k=0, else 2.
    // raw(i,j) = (1/N^2) sum_{k,l} eps_k eps_l A[k,l] cos(theta_k(i)) cos(theta_l(j))
    std::vector<double> partial((m + 1) * n);  // B[k][j]
    for (int k = 0; k <= m; ++k) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int l = 0; l <= m; ++l) {
                const double eps_l = (l == 0) ? 1.0 : 2.0;
                acc += eps_l * f.coeffs[k * (m + 1) + l] * tab.c(l, j);
            }
            partial[k * n + j] = acc;
        }
    }
    Grid2D<double> out(n, n, 0.0);
    const double inv_n2 = 1.0 / (static_cast<double>(n) * n);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            double acc = 0.0;
            for (int k = 0; k <= m; ++k) {
                const double eps_k = (k == 0) ? 1.0 : 2.0;
                acc += eps_k * partial[k * n + j] * tab.c(k, i);
            }
            out(i, j) = acc * inv_n2;
        }
    }
    return out;
}

Decoded decode(const FourierFeature& f, int n, double threshold) {
    Grid2D<double> raw = decode_raw(f, n);
    double mn = raw.data()[0], mx = raw.data()[0];
    for (size_t i = 0; i < raw.size(); ++i) {
        mn = std::min(mn, raw.data()[i]);
        mx = std::max(mx, raw.data()[i]);
    }
    Decoded d;
    d.level_set = Grid2D<double>(n, n, 0.5);
    d.image = MetaAtomImage(n, n, 0);
    if (mx == mn) return d;  // constant reconstruction: level 0.5, empty image
    const double inv = 1.0 / (mx - mn);
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < n; ++j) {
            const double v = (raw(i, j) - mn) * inv;
            d.level_set(i, j) = v;
            d.image(i, j) = v >= threshold ? 1 : 0;
        }
    }
    return d;
}

FourierFeature blend(const std::vector<FourierFeature>& features, const std::vector<double>& weights) {
    if (features.empty()) throw ValidationError("blend requires at least one feature");
    if (features.size() != weights.size()) throw ValidationError("blend weights/features length mismatch");
    double wsum = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0 && w <= 1.0)) throw ValidationError("blend weights must lie in [0,1]");
        wsum += w;
    }
    if (std::fabs(wsum - 1.0) > 1e-12) throw ValidationError("blend weights must sum to 1 within 1e-12");
    const int m = features[0].m;
    const int n = features[0].source_n;
    for (const auto& f : features) {
        if (f.m != m) throw ValidationError("blended features must share m");
        if (f.source_n != n) throw ValidationError("blended features must share source resolution");
    }
    FourierFeature out;
    out.m = m;
    out.source_n = n;
    out.coeffs.assign(features[0].coeffs.size(), 0.0);
    // Per-component affine standardization cancels under convex weights, so the
    // combination is taken directly on the coefficients.
    for (size_t k = 0; k < features.size(); ++k) {
        for (size_t i = 0; i < out.coeffs.size(); ++i) out.coeffs[i] += weights[k] * features[k].coeffs[i];
    }
    return out;
}

std::vector<double> FeatureStats::standardize(const std::vector<double>& raw) const {
    std::vector<double> out(raw.size());
    for (size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - mean[i]) / stddev[i];
    return out;
}

std::vector<double> FeatureStats::destandardize(const std::vector<double>& std_coords) const {
    std::vector<double> out(std_coords.size());
    for (size_t i = 0; i < std_coords.size(); ++i) out[i] = mean[i] + stddev[i] * std_coords[i];
    return out;
}

FeatureStats compute_stats(const std::vector<FourierFeature>& features) {
    if (features.empty()) throw ValidationError("cannot compute stats of empty feature set");
    const size_t dim = features[0].coeffs.size();
    FeatureStats st;
    st.mean.assign(dim, 0.0);
    st.stddev.assign(dim, 0.0);
    const double inv = 1.0 / static_cast<double>(features.size());
    for (const auto& f : features)
        for (size_t i = 0; i < dim; ++i) st.mean[i] += f.coeffs[i];
    for (size_t i = 0; i < dim; ++i) st.mean[i] *= inv;
    for (const auto& f : features)
        for (size_t i = 0; i < dim; ++i) {
            const double d = f.coeffs[i] - st.mean[i];
            st.stddev[i] += d * d;
        }
    for (size_t i = 0; i < dim; ++i) {
        st.stddev[i] = std::sqrt(st.stddev[i] * inv);
        if (st.stddev[i] == 0.0) st.stddev[i] = 1.0;
    }
    st.min_std.assign(dim, std::numeric_limits<double>::infinity());
    st.max_std.assign(dim, -std::numeric_limits<double>::infinity());
    for (const auto& f : features)
        for (size_t i = 0; i < dim; ++i) {
            const double z = (f.coeffs[i] - st.mean[i]) / st.stddev[i];
            st.min_std[i] = std::min(st.min_std[i], z);
            st.max_std[i] = std::max(st.max_std[i], z);
        }
    return st;
}

GroundSet synthesize_ground_set(int count, int nb_min, int nb_max, int n, int m, uint64_t seed, int jobs) {
    if (count < 1) throw ValidationError("ground set count must be >= 1");
    if (nb_min < 2 || nb_max > 4 || nb_min > nb_max) throw ValidationError("blend class count must satisfy 2 <= nb_min <= nb_max <= 4");

    std::vector<FourierFeature> class_features(kNumClasses);
    for (int c = 0; c < kNumClasses; ++c) class_features[c] = encode(class_representative(static_cast<AtomClass>(c), n), m);

    GroundSet gs;
    gs.m = m;
    gs.n = n;
    gs.seed = seed;
    gs.nb_min = nb_min;
    gs.nb_max = nb_max;
    gs.features.resize(count);
    gs.specs.resize(count);

    constexpr int kMaxRetries = 100;
    parallel_for(static_cast<size_t>(count), jobs, [&](size_t idx) {
        Rng rng = Rng::stream(seed, idx);
        for (int attempt = 0; attempt < kMaxRetries; ++attempt) {
            const int nb = nb_min + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(nb_max - nb_min + 1)));
            // Distinct class subset via partial Fisher-Yates.
            std::vector<int> pool(kNumClasses);
            for (int c = 0; c < kNumClasses; ++c) pool[c] = c;
            for (int k = 0; k < nb; ++k) {
                const int j = k + static_cast<int>(rng.uniform_int(static_cast<uint64_t>(kNumClasses - k)));
                std::swap(pool[k], pool[j]);
            }
            // Flat simplex weights from sorted uniform gaps.
            std::vector<double> cuts(nb - 1);
            for (double& c : cuts) c = rng.uniform01();
            std::sort(cuts.begin(), cuts.end());
            std::vector<double> w(nb);
            double prev = 0.0;
            for (int k = 0; k < nb - 1; ++k) {
                w[k] = cuts[k] - prev;
                prev = cuts[k];
            }
            w[nb - 1] = 1.0 - prev;

            std::vector<FourierFeature> parts;
            parts.reserve(nb);
            for (int k = 0; k < nb; ++k) parts.push_back(class_features[pool[k]]);
            FourierFeature z = blend(parts, w);
            const Decoded dec = decode(z, n);
            const double frac = material_fraction(dec.image);
            if (frac > 0.0 && frac < 1.0) {
                gs.specs[idx] = BlendSpec{std::vector<int>(pool.begin(), pool.begin() + nb), w};
                gs.features[idx] = std::move(z);
                return;
            }
        }
        throw ValidationError("ground set synthesis retry budget exhausted at index " + std::to_string(idx));
    });

    gs.stats = compute_stats(gs.features);
    return gs;
}

}  // namespace mmm::shapes
