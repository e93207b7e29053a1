// Copyright (c) 2026 The mmm Authors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "mmm/common.hpp"
#include "mmm/fft.hpp"
#include "mmm/io.hpp"

namespace mmm::ifno {

enum class Activation { Gelu, Zero };  // Zero turns layers into identities (test hook)

struct IfnoConfig {
    int modes = 16;
    int width = 16;
    int lastwidth = 32;
    int depth = 4;
    int in_channels = 4;
    int out_channels = 1;
    Activation activation = Activation::Gelu;

    void validate() const;
    bool operator==(const IfnoConfig&) const = default;
};

// Trainable parameter count; depth-independent because every spectral layer
// shares one (W, c, phi) set.
uint64_t count_parameters(const IfnoConfig& cfg);

// Parameter container. The spectral tensor is split-complex, laid out
// [out_channel][in_channel][mode] with mode = kx*modes + ky so the mode axis
// is contiguous for the mixing kernels.
template <typename T>
struct IfnoModel {
    IfnoConfig cfg;
    std::vector<T> lift_w, lift_b;  // width x in_channels, width
    std::vector<T> w, c;            // width x width, width
    std::vector<T> phi_re, phi_im;  // width x width x modes^2
    std::vector<T> q1_w, q1_b;      // lastwidth x width, lastwidth
    std::vector<T> q2_w, q2_b;      // out_channels x lastwidth, out_channels

    static IfnoModel zeros(const IfnoConfig& cfg);
    // Lift/projection affines ~ U(+-fan_in^-1/2); spectral entries
    // ~ U(+-1/(width*modes)) per real component.
    static IfnoModel init(const IfnoConfig& cfg, uint64_t seed);

    size_t allocated_parameters() const;  // enumeration over actual tensors
    void fill(T value);
    void accumulate(const IfnoModel& other, T scale);  // this += scale * other

    // (name, pointer) pairs over every parameter tensor, fixed order.
    std::vector<std::pair<std::string, std::vector<T>*>> tensors();
    std::vector<std::pair<std::string, const std::vector<T>*>> tensors() const;
};

// Per-thread scratch: FFT workspace plus split-complex block buffers.
template <typename T>
class Workspace {
public:
    Workspace(int grid, const IfnoConfig& cfg);

    int grid() const { return grid_; }

private:
    template <typename U>
    friend struct Engine;
    int grid_;
    IfnoConfig cfg_;
    fft::Fft2<T> fft_;
    std::vector<T> block_re_, block_im_;    // width x modes^2 scratch (per-layer Y / Ghat)
    std::vector<T> block2_re_, block2_im_;  // second scratch (Gu)
    std::vector<T> field_;                  // width x grid^2 scratch
};

// Activations cached by forward for the matching backward call.
template <typename T>
struct ForwardCache {
    int grid = 0;
    std::vector<std::vector<T>> v;          // depth+1 entries, width x np
    std::vector<std::vector<T>> t;          // depth entries, width x np (pre-activation)
    std::vector<std::vector<T>> ublock_re;  // depth entries, width x modes^2
    std::vector<std::vector<T>> ublock_im;
    std::vector<T> q1;  // lastwidth x np (pre-activation)
    std::vector<T> h;   // lastwidth x np
    std::vector<T> out; // out_channels x np
};

// input is channel-major (in_channels x grid^2). Requires grid >= modes.
template <typename T>
void forward(const IfnoModel<T>& model, const T* input, int grid, Workspace<T>& ws, ForwardCache<T>& cache);

// Exact reverse-mode gradients. grads accumulates (same shapes as model);
// ginput, if non-null, receives d(loss)/d(input) for all input channels.
template <typename T>
void backward(const IfnoModel<T>& model, const T* input, int grid, const ForwardCache<T>& cache,
              const T* grad_out, Workspace<T>& ws, IfnoModel<T>& grads, T* ginput);

// Copies shared parameters to a deeper configuration (depth2 > depth).
template <typename T>
IfnoModel<T> shallow_to_deep(const IfnoModel<T>& model, int depth2);

// ---- training -------------------------------------------------------------

enum class Loss { RelativeL2, Mse };

struct TrainConfig {
    double lr0 = 0.01;
    double gamma = 0.5;
    int n_step = 100;
    double weight_decay = 1e-5;
    int epochs = 500;
    int batch = 8;
    uint64_t seed = 0;
    Loss loss = Loss::RelativeL2;
    int jobs = 1;

    void validate() const;
};

// lr(i) = lr0 * gamma^floor(i / n_step); i counts epochs.
double learning_rate(int iteration, const TrainConfig& cfg);

// Channel-major training pairs; split indices refer to positions in `inputs`.
struct TrainData {
    int grid = 0;
    int in_channels = 4;
    std::vector<std::vector<float>> inputs;   // each in_channels x grid^2
    std::vector<std::vector<float>> targets;  // each grid^2
    std::vector<size_t> train_idx, test_idx;
};

struct HistoryRow {
    int epoch;
    double lr;
    double train_loss;
    double test_loss;
};

struct TrainHistory {
    std::vector<HistoryRow> rows;
    int best_epoch = -1;
    double best_test_loss = 0.0;
};

// Adam with decoupled weight decay and the step scheduler above. Returns the
// best-test-loss snapshot. Deterministic for a given seed and any job count
// (per-sample gradients are reduced in sample order).
template <typename T>
std::pair<IfnoModel<T>, TrainHistory> train(const TrainData& data, const IfnoConfig& cfg, const TrainConfig& tc);

// Mean loss of the model over the given sample indices.
template <typename T>
double evaluate(const IfnoModel<T>& model, const TrainData& data, const std::vector<size_t>& indices, Loss loss,
                int jobs);

// ---- archive bridge --------------------------------------------------------

// extra_config entries are merged into the archive's config JSON (used for
// target-transform metadata and provenance).
template <typename T>
io::ModelArchive to_archive(const IfnoModel<T>& model, const std::string& extra_config_json = "{}");

// Validates that every tensor required by the config is present with the
// right shape (SchemaError naming the entry otherwise).
template <typename T>
IfnoModel<T> from_archive(const io::ModelArchive& archive);

std::string archive_config_json(const io::ModelArchive& archive);

extern template struct IfnoModel<float>;
extern template struct IfnoModel<double>;
extern template class Workspace<float>;
extern template class Workspace<double>;

}  // namespace mmm::ifno
