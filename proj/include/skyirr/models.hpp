#pragma once

#include "skyirr/features.hpp"
#include "skyirr/linalg.hpp"
#include "skyirr/neuralnet.hpp"
#include "skyirr/optim.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <vector>

namespace skyirr {

// Class labels: clear = 0, cloudy = 1.
enum class SkyLabel : int { Clear = 0, Cloudy = 1 };

// ---------------------------------------------------------------------------
// Sky classifier: one sigmoid hidden layer, softmax over {clear, cloudy},
// cross-entropy + l2 on weights, trained full-batch with L-BFGS.
// ---------------------------------------------------------------------------

struct ClassifierConfig {
    std::size_t input_dim = 64;
    std::size_t hidden_units = 27;
    Activation activation = Activation::Sigmoid;
    double l2 = 0.01; // weighs |W|^2 against the summed, not averaged, cross-entropy
    LbfgsConfig optimizer{};
};

NetworkModel train_classifier(const Matrix& features, std::span<const int> labels, const ClassifierConfig& config,
                              std::uint64_t seed);

struct Classification {
    SkyLabel label = SkyLabel::Clear;
    std::array<double, 2> probabilities{0.5, 0.5};
};

// argmax of the probability pair; an exact tie resolves to clear.
SkyLabel decide(const std::array<double, 2>& probabilities) noexcept;

Classification classify(const NetworkModel& model, std::span<const double> row);
std::vector<Classification> classify_batch(const NetworkModel& model, const Matrix& rows);

// ---------------------------------------------------------------------------
// GHI regressor: five batch-normalized ReLU hidden layers with dropout,
// MSE on a standardized target, SGD with Nesterov momentum over mini-batches.
// ---------------------------------------------------------------------------

struct RegressorConfig {
    std::size_t input_dim = 256;
    std::vector<std::size_t> hidden_units{256, 128, 128, 64, 37};
    Activation activation = Activation::Relu;
    std::vector<double> dropout{0.5, 0.5, 0.5, 0.5, 0.3};
    bool batch_norm = true;
    double learning_rate = 0.01;
    double momentum = 0.9;
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
};

std::vector<LayerSpec> regressor_layers(const RegressorConfig& config);

// Invoked after each epoch with the mean training loss on the standardized target.
using EpochCallback = std::function<void(std::size_t epoch, double mean_loss)>;

NetworkModel train_regressor(const Matrix& features, std::span<const double> targets, const RegressorConfig& config,
                             std::uint64_t seed, const EpochCallback& on_epoch = {});

// Non-negative GHI estimate in W/m^2.
double estimate_ghi(const NetworkModel& model, std::span<const double> row);
std::vector<double> estimate_ghi_batch(const NetworkModel& model, const Matrix& rows);

// ---------------------------------------------------------------------------
// Metrics
// ---------------------------------------------------------------------------

double accuracy(std::span<const int> predictions, std::span<const int> labels);
double r2_score(std::span<const double> pred, std::span<const double> target);
double mae(std::span<const double> pred, std::span<const double> target);

// ---------------------------------------------------------------------------
// Splits and k-fold cross-validation
// ---------------------------------------------------------------------------

struct Fold {
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
};

// Seeded shuffle, then k contiguous folds whose sizes differ by at most one.
std::vector<Fold> make_folds(std::size_t n, std::size_t k, std::uint64_t seed);

// Seeded shuffle, first round(fraction * n) rows train, rest test.
Fold holdout_split(std::size_t n, double train_fraction, std::uint64_t seed);

struct Dataset {
    Matrix features;
    std::vector<double> targets; // empty when unused
    std::vector<int> labels;     // empty when unused

    std::size_t rows() const noexcept { return static_cast<std::size_t>(features.rows()); }
    Dataset subset(std::span<const std::size_t> rows) const;
};

// A fold's rows after scaling with the scaler fitted on that fold's training rows.
struct FoldData {
    Dataset data;
    StandardScaler scaler;
};

struct FoldMetrics {
    std::optional<double> accuracy;
    std::optional<double> r2;
    std::optional<double> mae;
};

using Predictor = std::function<std::vector<double>(const Matrix& scaled_features)>;
using TrainFn = std::function<Predictor(const FoldData& train, std::uint64_t seed)>;
using EvalFn = std::function<FoldMetrics(std::span<const double> predictions, const FoldData& validation)>;

struct EvalReport {
    std::size_t fold_count = 0;
    std::vector<FoldMetrics> folds;
    FoldMetrics mean;
    FoldMetrics std; // population standard deviation across folds
};

// Fold i trains with seed + i. The scaler is fitted on training rows only.
EvalReport kfold_cv(const Dataset& dataset, std::size_t k, const TrainFn& train_fn, const EvalFn& eval_fn,
                    std::uint64_t seed);

FoldMetrics classification_metrics(std::span<const double> predictions, const FoldData& validation);
FoldMetrics regression_metrics(std::span<const double> predictions, const FoldData& validation);

// Fills mean/std from folds.
void aggregate(EvalReport& report);

} // namespace skyirr
