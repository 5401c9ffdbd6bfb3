#pragma once

#include "skyirr/linalg.hpp"
#include "skyirr/random.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace skyirr {

enum class Activation : std::uint8_t { Relu, Sigmoid, Tanh, Linear };
enum class Head : std::uint8_t { Identity, Softmax };
enum class Mode : std::uint8_t { Train, Infer };

inline constexpr double kBatchNormEps = 1e-5;
inline constexpr double kBatchNormMomentum = 0.9;

struct LayerSpec {
    std::size_t units = 1;
    Activation activation = Activation::Linear;
    double dropout_rate = 0.0;
    bool batch_norm = false;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

// One hidden or output layer: dense -> batch norm (optional) -> activation -> dropout (train only).
// gamma/beta/running_* are empty when batch_norm is off.
struct DenseLayer {
    LayerSpec spec;
    Matrix weights; // fan_in x units
    RowVector biases;
    RowVector gamma;
    RowVector beta;
    RowVector running_mean;
    RowVector running_var;
};

// Affine map applied by infer() to identity-head outputs, so regressors can
// train on a standardized target and still report physical units.
struct OutputScaling {
    double offset = 0.0;
    double scale = 1.0;

    friend bool operator==(const OutputScaling&, const OutputScaling&) = default;
};

class NetworkModel {
public:
    NetworkModel() = default;
    NetworkModel(std::size_t input_dim, std::vector<DenseLayer> layers, Head head, Mode mode = Mode::Train);

    std::size_t input_dim() const noexcept { return input_dim_; }
    std::size_t output_dim() const noexcept;
    Head head() const noexcept { return head_; }
    Mode mode() const noexcept { return mode_; }
    void set_mode(Mode mode) noexcept { mode_ = mode; }
    const OutputScaling& output_scaling() const noexcept { return scaling_; }
    void set_output_scaling(OutputScaling scaling) noexcept { scaling_ = scaling; }

    const std::vector<DenseLayer>& layers() const noexcept { return layers_; }
    // Any mutable access invalidates outstanding forward caches.
    std::vector<DenseLayer>& mutable_layers() noexcept;

    // Trainable parameters flattened per layer as weights (row-major), biases, gamma, beta.
    std::size_t parameter_count() const noexcept;
    std::vector<double> parameters() const;
    void set_parameters(std::span<const double> values);

    std::uint64_t generation() const noexcept { return generation_; }

private:
    friend struct ForwardAccess;

    std::size_t input_dim_ = 0;
    std::vector<DenseLayer> layers_;
    Head head_ = Head::Identity;
    Mode mode_ = Mode::Train;
    OutputScaling scaling_;
    std::uint64_t generation_ = 0;
};

struct LayerCache {
    Matrix input;
    Matrix pre;      // activation input (after batch norm when enabled)
    Matrix xhat;     // normalized pre-activation (batch norm only)
    RowVector inv_std;
    Matrix activated; // activation output before dropout
    Matrix dropout;   // scaled keep mask, empty when dropout inactive
};

struct ForwardCache {
    const NetworkModel* model = nullptr;
    std::uint64_t generation = 0;
    Mode mode = Mode::Infer;
    std::vector<LayerCache> layers;
};

struct ForwardResult {
    Matrix outputs; // head applied (softmax probabilities or identity scores)
    ForwardCache cache;
};

ForwardResult forward(NetworkModel& model, const Matrix& batch, Rng& rng, Mode mode);

// Deterministic inference pass with running statistics, no dropout, and the
// model's output scaling applied to identity heads.
Matrix infer(const NetworkModel& model, const Matrix& batch);

struct LayerGradient {
    Matrix weights;
    RowVector biases;
    RowVector gamma;
    RowVector beta;
};

struct GradientSet {
    std::vector<LayerGradient> layers;

    std::vector<double> flatten() const;
};

// loss_grad is taken with respect to the pre-head scores (for softmax heads,
// the fused cross-entropy gradient).
GradientSet backward(const NetworkModel& model, const ForwardCache& cache, const Matrix& loss_grad);

struct LossResult {
    double value = 0.0;
    Matrix grad;
};

LossResult mse_loss(const Matrix& pred, const Matrix& target);
LossResult cross_entropy_loss(const Matrix& probabilities, const Matrix& one_hot);

// lambda * sum of squared weights (biases and batch-norm parameters excluded).
double l2_penalty(const NetworkModel& model, double lambda);
void add_l2_gradient(const NetworkModel& model, double lambda, GradientSet& grads);

// He-uniform weights for relu layers, Xavier-uniform otherwise; zero biases,
// gamma 1, beta 0, running mean 0, running variance 1.
NetworkModel init_params(std::span<const LayerSpec> specs, std::size_t input_dim, std::uint64_t seed,
                         Head head = Head::Identity);

Matrix softmax_rows(const Matrix& scores);

} // namespace skyirr
