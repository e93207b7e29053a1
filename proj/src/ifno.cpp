// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#include "mmm/ifno.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstring>
#include <limits>
#include <map>

#include <nlohmann/json.hpp>

#include "mmm/kernels.hpp"
#include "mmm/parallel.hpp"
#include "mmm/rng.hpp"

namespace mmm::ifno {

using json = nlohmann::json;

namespace {
std::map<std::string, std::vector<uint64_t>> archive_shapes(uint64_t w, uint64_t mo, uint64_t lw, uint64_t in,
                                                            uint64_t out) {
    return {
        {"lift_w", {w, in}},          {"lift_b", {w}},
        {"w", {w, w}},                {"c", {w}},
        {"spec_re", {w, w, mo, mo}},  {"spec_im", {w, w, mo, mo}},
        {"q1_w", {lw, w}},            {"q1_b", {lw}},
        {"q2_w", {out, lw}},          {"q2_b", {out}},
    };
}
}  // namespace

void IfnoConfig::validate() const {
    if (modes < 1 || width < 1 || lastwidth < 1 || depth < 1 || in_channels < 1 || out_channels < 1)
        throw ValidationError("ifno config fields must all be >= 1");
}

void TrainConfig::validate() const {
    if (!(lr0 > 0.0)) throw ValidationError("lr0 must be > 0");
    if (!(gamma > 0.0 && gamma <= 1.0)) throw ValidationError("gamma must be in (0, 1]");
    if (n_step < 1) throw ValidationError("n_step must be >= 1");
    if (epochs < 0) throw ValidationError("epochs must be >= 0");
    if (batch < 1) throw ValidationError("batch must be >= 1");
}

uint64_t count_parameters(const IfnoConfig& cfg) {
    cfg.validate();
    const uint64_t w = cfg.width, mo = cfg.modes, lw = cfg.lastwidth;
    const uint64_t in = cfg.in_channels, out = cfg.out_channels;
    return 2 * w * w * mo * mo  // complex spectral tensor
           + w * w + w          // pointwise W, c
           + in * w + w         // lift
           + w * lw + lw        // projection stage 1
           + lw * out + out;    // projection stage 2
}

template <typename T>
IfnoModel<T> IfnoModel<T>::zeros(const IfnoConfig& cfg) {
    cfg.validate();
    IfnoModel<T> m;
    m.cfg = cfg;
    const size_t w = cfg.width, mo = cfg.modes, lw = cfg.lastwidth;
    m.lift_w.assign(w * cfg.in_channels, T{});
    m.lift_b.assign(w, T{});
    m.w.assign(w * w, T{});
    m.c.assign(w, T{});
    m.phi_re.assign(w * w * mo * mo, T{});
    m.phi_im.assign(w * w * mo * mo, T{});
    m.q1_w.assign(lw * w, T{});
    m.q1_b.assign(lw, T{});
    m.q2_w.assign(static_cast<size_t>(cfg.out_channels) * lw, T{});
    m.q2_b.assign(cfg.out_channels, T{});
    return m;
}

template <typename T>
IfnoModel<T> IfnoModel<T>::init(const IfnoConfig& cfg, uint64_t seed) {
    IfnoModel<T> m = zeros(cfg);
    Rng rng(seed);
    auto fill_uniform = [&](std::vector<T>& v, double scale) {
        for (auto& x : v) x = static_cast<T>(rng.uniform(-scale, scale));
    };
    fill_uniform(m.lift_w, 1.0 / std::sqrt(static_cast<double>(cfg.in_channels)));
    fill_uniform(m.lift_b, 1.0 / std::sqrt(static_cast<double>(cfg.in_channels)));
    fill_uniform(m.w, 1.0 / std::sqrt(static_cast<double>(cfg.width)));
    fill_uniform(m.c, 1.0 / std::sqrt(static_cast<double>(cfg.width)));
    const double spec_scale = 1.0 / (static_cast<double>(cfg.width) * cfg.modes);
    fill_uniform(m.phi_re, spec_scale);
    fill_uniform(m.phi_im, spec_scale);
    fill_uniform(m.q1_w, 1.0 / std::sqrt(static_cast<double>(cfg.width)));
    fill_uniform(m.q1_b, 1.0 / std::sqrt(static_cast<double>(cfg.width)));
    fill_uniform(m.q2_w, 1.0 / std::sqrt(static_cast<double>(cfg.lastwidth)));
    fill_uniform(m.q2_b, 1.0 / std::sqrt(static_cast<double>(cfg.lastwidth)));
    return m;
}

template <typename T>
size_t IfnoModel<T>::allocated_parameters() const {
    size_t n = 0;
    for (const auto& [name, vec] : tensors()) n += vec->size();
    return n;
}

template <typename T>
void IfnoModel<T>::fill(T value) {
    for (auto& [name, vec] : tensors()) std::fill(vec->begin(), vec->end(), value);
}

template <typename T>
void IfnoModel<T>::accumulate(const IfnoModel& other, T scale) {
    auto mine = tensors();
    auto theirs = other.tensors();
    for (size_t i = 0; i < mine.size(); ++i)
        kernels::axpy(mine[i].second->size(), scale, theirs[i].second->data(), mine[i].second->data());
}

template <typename T>
std::vector<std::pair<std::string, std::vector<T>*>> IfnoModel<T>::tensors() {
    return {{"lift_w", &lift_w}, {"lift_b", &lift_b}, {"w", &w},         {"c", &c},
            {"spec_re", &phi_re}, {"spec_im", &phi_im}, {"q1_w", &q1_w}, {"q1_b", &q1_b},
            {"q2_w", &q2_w},      {"q2_b", &q2_b}};
}

template <typename T>
std::vector<std::pair<std::string, const std::vector<T>*>> IfnoModel<T>::tensors() const {
    return {{"lift_w", &lift_w}, {"lift_b", &lift_b}, {"w", &w},         {"c", &c},
            {"spec_re", &phi_re}, {"spec_im", &phi_im}, {"q1_w", &q1_w}, {"q1_b", &q1_b},
            {"q2_w", &q2_w},      {"q2_b", &q2_b}};
}

template <typename T>
Workspace<T>::Workspace(int grid, const IfnoConfig& cfg) : grid_(grid), cfg_(cfg), fft_(grid) {
    cfg.validate();
    if (grid < cfg.modes) throw ValidationError("grid must be >= modes");
    const size_t nm = static_cast<size_t>(cfg.modes) * cfg.modes;
    const size_t wide = std::max(cfg.width, std::max(cfg.in_channels, std::max(cfg.out_channels, cfg.lastwidth)));
    block_re_.assign(static_cast<size_t>(cfg.width) * nm, T{});
    block_im_.assign(static_cast<size_t>(cfg.width) * nm, T{});
    block2_re_.assign(static_cast<size_t>(cfg.width) * nm, T{});
    block2_im_.assign(static_cast<size_t>(cfg.width) * nm, T{});
    field_.assign(wide * static_cast<size_t>(grid) * grid, T{});
}

// Shared forward/backward plumbing.
template <typename T>
struct Engine {
    const IfnoModel<T>& model;
    Workspace<T>& ws;
    int grid;
    size_t np;  // grid^2
    size_t nm;  // modes^2

    Engine(const IfnoModel<T>& m, Workspace<T>& w) : model(m), ws(w), grid(w.grid()) {
        np = static_cast<size_t>(grid) * grid;
        nm = static_cast<size_t>(m.cfg.modes) * m.cfg.modes;
    }

    // FFT of a real field; low-frequency modes x modes block into (re, im).
    void block_fft(const T* field, T* re, T* im) {
        auto* in = ws.fft_.in();
        for (size_t p = 0; p < np; ++p) in[p] = std::complex<T>(field[p], T{});
        ws.fft_.forward();
        const auto* out = ws.fft_.out();
        const int modes = model.cfg.modes;
        for (int kx = 0; kx < modes; ++kx) {
            const std::complex<T>* row = out + static_cast<size_t>(kx) * grid;
            T* rrow = re + static_cast<size_t>(kx) * modes;
            T* irow = im + static_cast<size_t>(kx) * modes;
            for (int ky = 0; ky < modes; ++ky) {
                rrow[ky] = row[ky].real();
                irow[ky] = row[ky].imag();
            }
        }
    }

    // Real part of the inverse transform of the zero-padded block, times
    // scale; adds into field when accumulate is set.
    void block_ifft(const T* re, const T* im, T scale, T* field, bool accumulate) {
        auto* in = ws.fft_.in();
        std::fill(in, in + np, std::complex<T>(T{}, T{}));
        const int modes = model.cfg.modes;
        for (int kx = 0; kx < modes; ++kx) {
            std::complex<T>* row = in + static_cast<size_t>(kx) * grid;
            const T* rrow = re + static_cast<size_t>(kx) * modes;
            const T* irow = im + static_cast<size_t>(kx) * modes;
            for (int ky = 0; ky < modes; ++ky) row[ky] = std::complex<T>(rrow[ky], irow[ky]);
        }
        ws.fft_.backward();
        const auto* out = ws.fft_.out();
        if (accumulate) {
            for (size_t p = 0; p < np; ++p) field[p] += out[p].real() * scale;
        } else {
            for (size_t p = 0; p < np; ++p) field[p] = out[p].real() * scale;
        }
    }

    void activation(size_t n, const T* x, T* y) {
        if (model.cfg.activation == Activation::Zero) {
            std::fill(y, y + n, T{});
        } else {
            kernels::gelu(n, x, y);
        }
    }

    void activation_grad(size_t n, const T* x, const T* g, T* dx) {
        if (model.cfg.activation == Activation::Zero) {
            std::fill(dx, dx + n, T{});
        } else {
            kernels::gelu_grad(n, x, g, dx);
        }
    }
};

template <typename T>
void forward(const IfnoModel<T>& model, const T* input, int grid, Workspace<T>& ws, ForwardCache<T>& cache) {
    const IfnoConfig& cfg = model.cfg;
    if (grid < cfg.modes) throw ValidationError("grid must be >= modes");
    if (ws.grid() != grid) throw ValidationError("workspace grid mismatch");
    Engine<T> eng(model, ws);
    const size_t np = eng.np, nm = eng.nm;
    const int width = cfg.width, depth = cfg.depth;

    cache.grid = grid;
    cache.v.assign(depth + 1, std::vector<T>(static_cast<size_t>(width) * np));
    cache.t.assign(depth, std::vector<T>(static_cast<size_t>(width) * np));
    cache.ublock_re.assign(depth, std::vector<T>(static_cast<size_t>(width) * nm));
    cache.ublock_im.assign(depth, std::vector<T>(static_cast<size_t>(width) * nm));
    cache.q1.assign(static_cast<size_t>(cfg.lastwidth) * np, T{});
    cache.h.assign(static_cast<size_t>(cfg.lastwidth) * np, T{});
    cache.out.assign(static_cast<size_t>(cfg.out_channels) * np, T{});

    // Lift: v0 = lift_w * a + lift_b, pointwise over the grid.
    for (int o = 0; o < width; ++o) {
        T* row = cache.v[0].data() + static_cast<size_t>(o) * np;
        std::fill(row, row + np, model.lift_b[o]);
        for (int ci = 0; ci < cfg.in_channels; ++ci)
            kernels::axpy(np, model.lift_w[static_cast<size_t>(o) * cfg.in_channels + ci],
                          input + static_cast<size_t>(ci) * np, row);
    }

    const T inv_np = static_cast<T>(1.0 / static_cast<double>(np));
    const T layer_scale = static_cast<T>(1.0 / static_cast<double>(depth));
    T* s = ws.field_.data();  // activation scratch (width x np)

    for (int l = 0; l < depth; ++l) {
        const std::vector<T>& v = cache.v[l];
        std::vector<T>& t = cache.t[l];
        // Spectral path: per-channel FFT block, complex channel mixing.
        for (int ci = 0; ci < width; ++ci)
            eng.block_fft(v.data() + static_cast<size_t>(ci) * np,
                          cache.ublock_re[l].data() + static_cast<size_t>(ci) * nm,
                          cache.ublock_im[l].data() + static_cast<size_t>(ci) * nm);
        std::fill(ws.block_re_.begin(), ws.block_re_.end(), T{});
        std::fill(ws.block_im_.begin(), ws.block_im_.end(), T{});
        for (int o = 0; o < width; ++o) {
            T* yr = ws.block_re_.data() + static_cast<size_t>(o) * nm;
            T* yi = ws.block_im_.data() + static_cast<size_t>(o) * nm;
            for (int ci = 0; ci < width; ++ci) {
                const size_t off = (static_cast<size_t>(o) * width + ci) * nm;
                kernels::cmul_acc(nm, model.phi_re.data() + off, model.phi_im.data() + off,
                                  cache.ublock_re[l].data() + static_cast<size_t>(ci) * nm,
                                  cache.ublock_im[l].data() + static_cast<size_t>(ci) * nm, yr, yi, false);
            }
        }
        // t = IFFT(Y)/np + W v + c.
        for (int o = 0; o < width; ++o) {
            T* trow = t.data() + static_cast<size_t>(o) * np;
            eng.block_ifft(ws.block_re_.data() + static_cast<size_t>(o) * nm,
                           ws.block_im_.data() + static_cast<size_t>(o) * nm, inv_np, trow, false);
            const T bias = model.c[o];
            for (size_t p = 0; p < np; ++p) trow[p] += bias;
            for (int ci = 0; ci < width; ++ci)
                kernels::axpy(np, model.w[static_cast<size_t>(o) * width + ci], v.data() + static_cast<size_t>(ci) * np,
                              trow);
        }
        // v_{l+1} = v_l + (1/L) sigma(t).
        eng.activation(static_cast<size_t>(width) * np, t.data(), s);
        kernels::add_scaled(static_cast<size_t>(width) * np, v.data(), layer_scale, s, cache.v[l + 1].data());
    }

    // Projection: q1 = Q1 v_L + b, h = sigma(q1), out = Q2 h + b.
    for (int o = 0; o < cfg.lastwidth; ++o) {
        T* row = cache.q1.data() + static_cast<size_t>(o) * np;
        std::fill(row, row + np, model.q1_b[o]);
        for (int ci = 0; ci < width; ++ci)
            kernels::axpy(np, model.q1_w[static_cast<size_t>(o) * width + ci],
                          cache.v[depth].data() + static_cast<size_t>(ci) * np, row);
    }
    eng.activation(cache.q1.size(), cache.q1.data(), cache.h.data());
    for (int o = 0; o < cfg.out_channels; ++o) {
        T* row = cache.out.data() + static_cast<size_t>(o) * np;
        std::fill(row, row + np, model.q2_b[o]);
        for (int ci = 0; ci < cfg.lastwidth; ++ci)
            kernels::axpy(np, model.q2_w[static_cast<size_t>(o) * cfg.lastwidth + ci],
                          cache.h.data() + static_cast<size_t>(ci) * np, row);
    }
}

template <typename T>
void backward(const IfnoModel<T>& model, const T* input, int grid, const ForwardCache<T>& cache,
              const T* grad_out, Workspace<T>& ws, IfnoModel<T>& grads, T* ginput) {
    const IfnoConfig& cfg = model.cfg;
    if (cache.grid != grid || ws.grid() != grid) throw ValidationError("cache/model/grid mismatch in backward");
    if (static_cast<int>(cache.v.size()) != cfg.depth + 1)
        throw ValidationError("forward cache does not match model depth");
    Engine<T> eng(model, ws);
    const size_t np = eng.np, nm = eng.nm;
    const int width = cfg.width, depth = cfg.depth;
    const T inv_np = static_cast<T>(1.0 / static_cast<double>(np));
    const T layer_scale = static_cast<T>(1.0 / static_cast<double>(depth));

    std::vector<T> gh(static_cast<size_t>(cfg.lastwidth) * np, T{});
    // Q2 adjoint.
    for (int o = 0; o < cfg.out_channels; ++o) {
        const T* grow = grad_out + static_cast<size_t>(o) * np;
        grads.q2_b[o] += static_cast<T>(kernels::sum(np, grow));
        for (int ci = 0; ci < cfg.lastwidth; ++ci) {
            grads.q2_w[static_cast<size_t>(o) * cfg.lastwidth + ci] +=
                static_cast<T>(kernels::dot(np, grow, cache.h.data() + static_cast<size_t>(ci) * np));
            kernels::axpy(np, model.q2_w[static_cast<size_t>(o) * cfg.lastwidth + ci], grow,
                          gh.data() + static_cast<size_t>(ci) * np);
        }
    }
    // Through sigma(q1) and Q1.
    std::vector<T> gq1(static_cast<size_t>(cfg.lastwidth) * np);
    eng.activation_grad(gq1.size(), cache.q1.data(), gh.data(), gq1.data());
    std::vector<T> gv(static_cast<size_t>(width) * np, T{});
    for (int o = 0; o < cfg.lastwidth; ++o) {
        const T* grow = gq1.data() + static_cast<size_t>(o) * np;
        grads.q1_b[o] += static_cast<T>(kernels::sum(np, grow));
        for (int ci = 0; ci < width; ++ci) {
            grads.q1_w[static_cast<size_t>(o) * width + ci] +=
                static_cast<T>(kernels::dot(np, grow, cache.v[depth].data() + static_cast<size_t>(ci) * np));
            kernels::axpy(np, model.q1_w[static_cast<size_t>(o) * width + ci], grow,
                          gv.data() + static_cast<size_t>(ci) * np);
        }
    }

    std::vector<T> gt(static_cast<size_t>(width) * np);
    std::vector<T> gv_prev(static_cast<size_t>(width) * np);
    for (int l = depth - 1; l >= 0; --l) {
        const std::vector<T>& v = cache.v[l];
        // gt = sigma'(t) .* (gv / L).
        eng.activation_grad(static_cast<size_t>(width) * np, cache.t[l].data(), gv.data(), gt.data());
        for (auto& x : gt) x *= layer_scale;
        // Pointwise path adjoints.
        gv_prev = gv;  // skip connection
        for (int o = 0; o < width; ++o) {
            const T* grow = gt.data() + static_cast<size_t>(o) * np;
            grads.c[o] += static_cast<T>(kernels::sum(np, grow));
            for (int ci = 0; ci < width; ++ci) {
                grads.w[static_cast<size_t>(o) * width + ci] +=
                    static_cast<T>(kernels::dot(np, grow, v.data() + static_cast<size_t>(ci) * np));
                kernels::axpy(np, model.w[static_cast<size_t>(o) * width + ci], grow,
                              gv_prev.data() + static_cast<size_t>(ci) * np);
            }
        }
        // Spectral adjoint: Ghat = FFT(gt)/np on the block; then
        // gU = conj(phi) Ghat, gphi += conj(U) Ghat, gv += Re(IFFT_pad(gU)).
        std::fill(ws.block2_re_.begin(), ws.block2_re_.end(), T{});
        std::fill(ws.block2_im_.begin(), ws.block2_im_.end(), T{});
        for (int o = 0; o < width; ++o) {
            T* ghr = ws.block_re_.data() + static_cast<size_t>(o) * nm;
            T* ghi = ws.block_im_.data() + static_cast<size_t>(o) * nm;
            eng.block_fft(gt.data() + static_cast<size_t>(o) * np, ghr, ghi);
            for (size_t k = 0; k < nm; ++k) {
                ghr[k] *= inv_np;
                ghi[k] *= inv_np;
            }
        }
        for (int o = 0; o < width; ++o) {
            const T* ghr = ws.block_re_.data() + static_cast<size_t>(o) * nm;
            const T* ghi = ws.block_im_.data() + static_cast<size_t>(o) * nm;
            for (int ci = 0; ci < width; ++ci) {
                const size_t off = (static_cast<size_t>(o) * width + ci) * nm;
                kernels::cmul_acc(nm, model.phi_re.data() + off, model.phi_im.data() + off, ghr, ghi,
                                  ws.block2_re_.data() + static_cast<size_t>(ci) * nm,
                                  ws.block2_im_.data() + static_cast<size_t>(ci) * nm, true);
                kernels::cmul_acc(nm, cache.ublock_re[l].data() + static_cast<size_t>(ci) * nm,
                                  cache.ublock_im[l].data() + static_cast<size_t>(ci) * nm, ghr, ghi,
                                  grads.phi_re.data() + off, grads.phi_im.data() + off, true);
            }
        }
        for (int ci = 0; ci < width; ++ci)
            eng.block_ifft(ws.block2_re_.data() + static_cast<size_t>(ci) * nm,
                           ws.block2_im_.data() + static_cast<size_t>(ci) * nm, T{1},
                           gv_prev.data() + static_cast<size_t>(ci) * np, true);
        gv.swap(gv_prev);
    }

    // Lift adjoint and input gradients.
    if (ginput) std::fill(ginput, ginput + static_cast<size_t>(cfg.in_channels) * np, T{});
    for (int o = 0; o < width; ++o) {
        const T* grow = gv.data() + static_cast<size_t>(o) * np;
        grads.lift_b[o] += static_cast<T>(kernels::sum(np, grow));
        for (int ci = 0; ci < cfg.in_channels; ++ci) {
            grads.lift_w[static_cast<size_t>(o) * cfg.in_channels + ci] +=
                static_cast<T>(kernels::dot(np, grow, input + static_cast<size_t>(ci) * np));
            if (ginput)
                kernels::axpy(np, model.lift_w[static_cast<size_t>(o) * cfg.in_channels + ci], grow,
                              ginput + static_cast<size_t>(ci) * np);
        }
    }
}

template <typename T>
IfnoModel<T> shallow_to_deep(const IfnoModel<T>& model, int depth2) {
    if (depth2 <= model.cfg.depth)
        throw ValidationError("target depth must exceed the trained depth");
    IfnoModel<T> out = model;
    out.cfg.depth = depth2;
    return out;
}

double learning_rate(int iteration, const TrainConfig& cfg) {
    if (iteration < 0) throw ValidationError("iteration must be >= 0");
    return cfg.lr0 * std::pow(cfg.gamma, static_cast<double>(iteration / cfg.n_step));
}

namespace {

// Loss value and gradient w.r.t. prediction for one sample.
template <typename T>
double loss_and_grad(Loss kind, const std::vector<T>& pred, const std::vector<float>& target, std::vector<T>* grad) {
    const size_t n = pred.size();
    if (grad) grad->assign(n, T{});
    if (kind == Loss::Mse) {
        double acc = 0.0;
        for (size_t i = 0; i < n; ++i) {
            const double d = static_cast<double>(pred[i]) - target[i];
            acc += d * d;
            if (grad) (*grad)[i] = static_cast<T>(2.0 * d / static_cast<double>(n));
        }
        return acc / static_cast<double>(n);
    }
    double num2 = 0.0, den2 = 0.0;
    for (size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(pred[i]) - target[i];
        num2 += d * d;
        den2 += static_cast<double>(target[i]) * target[i];
    }
    const double num = std::sqrt(num2);
    const double den = std::sqrt(std::max(den2, 1e-300));
    if (grad && num > 0.0) {
        const double scale = 1.0 / (num * den);
        for (size_t i = 0; i < n; ++i)
            (*grad)[i] = static_cast<T>((static_cast<double>(pred[i]) - target[i]) * scale);
    }
    return num / den;
}

template <typename T>
std::vector<T> widen(const std::vector<float>& x) {
    return std::vector<T>(x.begin(), x.end());
}

template <typename T>
struct AdamState {
    IfnoModel<T> m, v;
    int64_t step = 0;
};

template <typename T>
void adam_step(IfnoModel<T>& params, const IfnoModel<T>& grads, AdamState<T>& st, double lr, double wd) {
    constexpr double beta1 = 0.9, beta2 = 0.999, eps = 1e-8;
    st.step += 1;
    const double bc1 = 1.0 - std::pow(beta1, static_cast<double>(st.step));
    const double bc2 = 1.0 - std::pow(beta2, static_cast<double>(st.step));
    auto p = params.tensors();
    auto g = grads.tensors();
    auto m = st.m.tensors();
    auto v = st.v.tensors();
    for (size_t t = 0; t < p.size(); ++t) {
        T* pp = p[t].second->data();
        const T* gg = g[t].second->data();
        T* mm = m[t].second->data();
        T* vv = v[t].second->data();
        const size_t n = p[t].second->size();
        for (size_t i = 0; i < n; ++i) {
            const double gi = gg[i];
            const double mi = beta1 * mm[i] + (1.0 - beta1) * gi;
            const double vi = beta2 * vv[i] + (1.0 - beta2) * gi * gi;
            mm[i] = static_cast<T>(mi);
            vv[i] = static_cast<T>(vi);
            const double update = (mi / bc1) / (std::sqrt(vi / bc2) + eps) + wd * pp[i];
            pp[i] = static_cast<T>(pp[i] - lr * update);
        }
    }
}

}  // namespace

template <typename T>
double evaluate(const IfnoModel<T>& model, const TrainData& data, const std::vector<size_t>& indices, Loss loss,
                int jobs) {
    if (indices.empty()) return 0.0;
    std::vector<double> losses(indices.size());
    const int nthreads = std::max(1, jobs);
    std::vector<std::unique_ptr<Workspace<T>>> wss;
    std::vector<std::unique_ptr<ForwardCache<T>>> caches;
    for (int t = 0; t < nthreads; ++t) {
        wss.emplace_back(new Workspace<T>(data.grid, model.cfg));
        caches.emplace_back(new ForwardCache<T>());
    }
    parallel_for_worker(indices.size(), nthreads, [&](int wkr, size_t i) {
        std::vector<T> input = widen<T>(data.inputs[indices[i]]);
        forward(model, input.data(), data.grid, *wss[wkr], *caches[wkr]);
        losses[i] = loss_and_grad<T>(loss, caches[wkr]->out, data.targets[indices[i]], nullptr);
    });
    double acc = 0.0;
    for (double l : losses) acc += l;
    return acc / static_cast<double>(indices.size());
}

template <typename T>
std::pair<IfnoModel<T>, TrainHistory> train(const TrainData& data, const IfnoConfig& cfg, const TrainConfig& tc) {
    cfg.validate();
    tc.validate();
    if (data.grid < cfg.modes) throw ValidationError("training grid must be >= modes");

    IfnoModel<T> model = IfnoModel<T>::init(cfg, tc.seed);
    TrainHistory hist;
    if (tc.epochs == 0) return {model, hist};
    if (data.train_idx.empty()) throw ValidationError("training split is empty");

    AdamState<T> adam{IfnoModel<T>::zeros(cfg), IfnoModel<T>::zeros(cfg), 0};
    IfnoModel<T> best = model;
    double best_test = std::numeric_limits<double>::infinity();
    int best_epoch = -1;

    const int jobs = std::max(1, tc.jobs);
    std::vector<std::unique_ptr<Workspace<T>>> wss;
    std::vector<std::unique_ptr<ForwardCache<T>>> caches;
    for (int t = 0; t < jobs; ++t) {
        wss.emplace_back(new Workspace<T>(data.grid, cfg));
        caches.emplace_back(new ForwardCache<T>());
    }

    std::vector<size_t> order = data.train_idx;
    for (int epoch = 0; epoch < tc.epochs; ++epoch) {
        const double lr = learning_rate(epoch, tc);
        Rng shuffle_rng = Rng::stream(tc.seed, static_cast<uint64_t>(epoch) + 1);
        order = data.train_idx;
        shuffle_rng.shuffle(order);

        double epoch_loss = 0.0;
        for (size_t start = 0; start < order.size(); start += tc.batch) {
            const size_t bsz = std::min<size_t>(tc.batch, order.size() - start);
            std::vector<IfnoModel<T>> sample_grads(bsz, IfnoModel<T>::zeros(cfg));
            std::vector<double> sample_loss(bsz, 0.0);
            std::mutex mu;
            std::vector<std::thread::id> owners;
            parallel_for(bsz, jobs, [&](size_t bi) {
                int s;
                {
                    std::lock_guard<std::mutex> lock(mu);
                    auto it = std::find(owners.begin(), owners.end(), std::this_thread::get_id());
                    if (it == owners.end()) {
                        owners.push_back(std::this_thread::get_id());
                        s = static_cast<int>(owners.size()) - 1;
                    } else {
                        s = static_cast<int>(it - owners.begin());
                    }
                }
                const size_t idx = order[start + bi];
                std::vector<T> input = widen<T>(data.inputs[idx]);
                forward(model, input.data(), data.grid, *wss[s], *caches[s]);
                std::vector<T> gout;
                sample_loss[bi] = loss_and_grad<T>(tc.loss, caches[s]->out, data.targets[idx], &gout);
                backward(model, input.data(), data.grid, *caches[s], gout.data(), *wss[s], sample_grads[bi],
                         static_cast<T*>(nullptr));
            });
            // Reduce per-sample gradients in sample order: results are
            // independent of the job count.
            IfnoModel<T> batch_grad = IfnoModel<T>::zeros(cfg);
            const T inv_b = static_cast<T>(1.0 / static_cast<double>(bsz));
            for (size_t bi = 0; bi < bsz; ++bi) {
                batch_grad.accumulate(sample_grads[bi], inv_b);
                epoch_loss += sample_loss[bi];
            }
            bool finite = true;
            for (const auto& [name, vec] : batch_grad.tensors())
                for (T x : *vec)
                    if (!std::isfinite(static_cast<double>(x))) finite = false;
            if (!finite || !std::isfinite(epoch_loss))
                throw ValidationError("training diverged (non-finite loss/gradient) at epoch " +
                                      std::to_string(epoch));
            adam_step(model, batch_grad, adam, lr, tc.weight_decay);
        }
        epoch_loss /= static_cast<double>(order.size());
        const double test_loss = evaluate(model, data, data.test_idx, tc.loss, jobs);
        hist.rows.push_back({epoch, lr, epoch_loss, test_loss});
        if (!data.test_idx.empty() ? test_loss < best_test : epoch_loss < best_test) {
            best_test = data.test_idx.empty() ? epoch_loss : test_loss;
            best = model;
            best_epoch = epoch;
        }
    }
    hist.best_epoch = best_epoch;
    hist.best_test_loss = best_test;
    return {best, hist};
}

template <typename T>
io::ModelArchive to_archive(const IfnoModel<T>& model, const std::string& extra_config_json) {
    io::ModelArchive a;
    json cfg;
    cfg["modes"] = model.cfg.modes;
    cfg["width"] = model.cfg.width;
    cfg["lastwidth"] = model.cfg.lastwidth;
    cfg["depth"] = model.cfg.depth;
    cfg["in_channels"] = model.cfg.in_channels;
    cfg["out_channels"] = model.cfg.out_channels;
    cfg["activation"] = model.cfg.activation == Activation::Gelu ? "gelu" : "zero";
    cfg["dtype"] = std::is_same_v<T, float> ? "f32" : "f64";
    json extra = json::parse(extra_config_json);
    for (auto& [key, value] : extra.items()) cfg[key] = value;

    const size_t w = model.cfg.width, mo = model.cfg.modes, lw = model.cfg.lastwidth;
    const size_t in = model.cfg.in_channels, out = model.cfg.out_channels;
    auto shapes = archive_shapes(w, mo, lw, in, out);
    for (const auto& [name, vec] : model.tensors()) {
        std::vector<uint64_t> dims = shapes.at(name);
        if constexpr (std::is_same_v<T, float>) {
            a.entries[name] = Tensor::from_f32(*vec, dims);
        } else {
            a.entries[name] = Tensor::from_f64(*vec, dims);
        }
    }
    a.config = cfg.dump();
    return a;
}

template <typename T>
IfnoModel<T> from_archive(const io::ModelArchive& archive) {
    json cfg;
    try {
        cfg = json::parse(archive.config);
    } catch (const json::exception& e) {
        throw SchemaError(std::string("archive config is not valid JSON: ") + e.what());
    }
    IfnoConfig c;
    try {
        c.modes = cfg.at("modes").get<int>();
        c.width = cfg.at("width").get<int>();
        c.lastwidth = cfg.at("lastwidth").get<int>();
        c.depth = cfg.at("depth").get<int>();
        c.in_channels = cfg.at("in_channels").get<int>();
        c.out_channels = cfg.at("out_channels").get<int>();
        const std::string act = cfg.value("activation", "gelu");
        c.activation = act == "zero" ? Activation::Zero : Activation::Gelu;
    } catch (const json::exception& e) {
        throw SchemaError(std::string("archive config missing architecture field: ") + e.what());
    }
    c.validate();
    IfnoModel<T> m = IfnoModel<T>::zeros(c);
    auto shapes = archive_shapes(c.width, c.modes, c.lastwidth, c.in_channels, c.out_channels);
    for (auto& [name, vec] : m.tensors()) {
        auto it = archive.entries.find(name);
        if (it == archive.entries.end()) throw SchemaError("archive missing required tensor entry: " + name);
        const std::vector<uint64_t>& want = shapes.at(name);
        if (it->second.dims != want) throw SchemaError("archive tensor has wrong shape: " + name);
        if constexpr (std::is_same_v<T, float>) {
            *vec = it->second.to_f32();
        } else {
            *vec = it->second.to_f64();
        }
    }
    return m;
}

std::string archive_config_json(const io::ModelArchive& archive) { return archive.config; }

template struct IfnoModel<float>;
template struct IfnoModel<double>;
template class Workspace<float>;
template class Workspace<double>;
template void forward<float>(const IfnoModel<float>&, const float*, int, Workspace<float>&, ForwardCache<float>&);
template void forward<double>(const IfnoModel<double>&, const double*, int, Workspace<double>&,
                              ForwardCache<double>&);
template void backward<float>(const IfnoModel<float>&, const float*, int, const ForwardCache<float>&, const float*,
                              Workspace<float>&, IfnoModel<float>&, float*);
template void backward<double>(const IfnoModel<double>&, const double*, int, const ForwardCache<double>&,
                               const double*, Workspace<double>&, IfnoModel<double>&, double*);
template IfnoModel<float> shallow_to_deep<float>(const IfnoModel<float>&, int);
template IfnoModel<double> shallow_to_deep<double>(const IfnoModel<double>&, int);
template std::pair<IfnoModel<float>, TrainHistory> train<float>(const TrainData&, const IfnoConfig&,
                                                                const TrainConfig&);
template std::pair<IfnoModel<double>, TrainHistory> train<double>(const TrainData&, const IfnoConfig&,
                                                                  const TrainConfig&);
template double evaluate<float>(const IfnoModel<float>&, const TrainData&, const std::vector<size_t>&, Loss, int);
template double evaluate<double>(const IfnoModel<double>&, const TrainData&, const std::vector<size_t>&, Loss, int);
template io::ModelArchive to_archive<float>(const IfnoModel<float>&, const std::string&);
template io::ModelArchive to_archive<double>(const IfnoModel<double>&, const std::string&);
template IfnoModel<float> from_archive<float>(const io::ModelArchive&);
template IfnoModel<double> from_archive<double>(const io::ModelArchive&);

}  // namespace mmm::ifno
