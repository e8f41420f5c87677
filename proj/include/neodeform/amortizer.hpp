#pragma once

// Small U-net that maps (atrophy map, one-hot labels) to a displacement field
// and is trained directly on the biomechanical cost.
//
// Layer order (also the checkpoint order), for channel widths c[0..L-1]. Each
// block is kConvsPerBlock 3x3 convolutions; the first one maps the block input
// width to c[l], the rest c[l] -> c[l].
//   enc[0]      block  6 -> c[0]
//   enc[l]      block  c[l-1] -> c[l]          after 2x2 average pooling
//   dec[l]      block  c[l+1] + c[l] -> c[l]   for l = L-2 .. 0, after nearest
//                                              upsampling and skip concatenation
//   final       1x1    c[0] -> 2               linear
// Hidden layers use leaky ReLU (slope 0.2); convolutions are zero padded.

#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

#include <Eigen/Core>

#include "neodeform/biomech.hpp"

namespace neodeform {

inline constexpr int kNetInputChannels = 1 + kTissueCount;
inline constexpr int kNetOutputChannels = 2;
inline constexpr double kLeakySlope = 0.2;
inline constexpr int kConvsPerBlock = 2;
/// The atrophy channel is fed as kAtrophyInputScale * (a - 1).
inline constexpr double kAtrophyInputScale = 10.0;

struct NetArchitecture {
    std::vector<int> channels{16, 32, 64};

    int levels() const noexcept { return static_cast<int>(channels.size()); }
    /// Grid sides must be multiples of this.
    int divisor() const noexcept { return 1 << (levels() - 1); }
    void validate() const;
    friend bool operator==(const NetArchitecture&, const NetArchitecture&) = default;
};

struct LayerShape {
    int in_channels;
    int out_channels;
    int kernel;  // 3 or 1
    std::size_t weight_offset;
    std::size_t bias_offset;

    std::size_t weight_count() const noexcept {
        return static_cast<std::size_t>(out_channels) * in_channels * kernel * kernel;
    }
};

std::vector<LayerShape> layer_shapes(const NetArchitecture& arch);

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// All parameters in one flat vector; each layer stores its weights as
/// out x in x k x k followed by out biases.
struct NetWeights {
    NetArchitecture arch;
    std::vector<LayerShape> layers;
    std::vector<double> params;

    static NetWeights zeros(const NetArchitecture& arch);

    std::size_t layer_count() const noexcept { return layers.size(); }
    Eigen::Map<RowMatrix> weight(std::size_t layer);
    Eigen::Map<const RowMatrix> weight(std::size_t layer) const;
    Eigen::Map<Eigen::VectorXd> bias(std::size_t layer);
    Eigen::Map<const Eigen::VectorXd> bias(std::size_t layer) const;

    friend bool operator==(const NetWeights& a, const NetWeights& b) {
        return a.arch == b.arch && a.params == b.params;
    }
};

/// He-style uniform init, U(-sqrt(6 / fan_in), +sqrt(6 / fan_in)), zero biases.
/// The final layer is zeroed unless `zero_final` is false.
NetWeights init_weights(const NetArchitecture& arch, std::uint64_t seed, bool zero_final = true);

/// Fully random weights for gradient probes: He-uniform kernels, U(-0.1, 0.1)
/// biases, final kernel scaled by 0.05 so the predicted field stays small.
/// Random biases keep pre-activations off the leaky-ReLU kink.
NetWeights probe_weights(const NetArchitecture& arch, std::uint64_t seed);

DisplacementField net_forward(const NetWeights& w, const ScalarField& atrophy, const LabelField& labels);

/// dL/dw given dL/du; returned with the same layout as `w`.
NetWeights net_backward(const NetWeights& w, const ScalarField& atrophy, const LabelField& labels,
                        const DisplacementField& upstream);

struct TrainingSample {
    ScalarField atrophy;
    LabelField labels;
};

struct TrainOptions {
    int epochs = 1000;
    int batch_size = 8;
    double learning_rate = 1e-4;
    std::uint64_t seed = 0;
    EnergyParams params;

    /// Learning rate 1e-5.
    static TrainOptions slow();
};

struct TrainLog {
    double initial_loss = 0.0;             ///< dataset mean at the initial weights
    std::vector<double> epoch_loss;        ///< mean sample loss seen during each epoch
    std::vector<std::size_t> epoch_skipped;  ///< samples dropped for inverted elements
};

struct TrainResult {
    NetWeights weights;
    TrainLog log;
};

TrainResult train(std::span<const TrainingSample> dataset, const TrainOptions& opts, const NetArchitecture& arch = {});

/// Mean total loss of the network prediction over the samples.
double mean_prediction_loss(const NetWeights& w, std::span<const TrainingSample> samples,
                            const EnergyParams& params);

struct NetGradCheckReport {
    std::size_t n_probes = 0;
    double max_rel_error = 0.0;
    double max_abs_error = 0.0;
    bool pass = false;
};

/// Central differences of total_loss(net_forward(w)) at random weights,
/// against net_backward(loss_gradient). Relative error uses max(1, |numeric|).
NetGradCheckReport net_gradient_check(const NetWeights& w, const ScalarField& atrophy, const LabelField& labels,
                                      const EnergyParams& params, std::size_t n_probes, double step, double tolerance,
                                      std::uint64_t seed);

// Checkpoint: "NAWT" | u32 version (=1) | u32 level count | u32 width per level
// | f64 parameters in layer order. Little-endian.
inline constexpr std::uint32_t kCheckpointVersion = 1;
std::vector<std::uint8_t> encode_checkpoint(const NetWeights& w);
NetWeights decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const std::filesystem::path& path, const NetWeights& w);
NetWeights load_checkpoint(const std::filesystem::path& path);

}  // namespace neodeform
