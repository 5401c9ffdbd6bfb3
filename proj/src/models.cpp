#include "skyirr/models.hpp"

#include "skyirr/error.hpp"
#include "skyirr/random.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace skyirr {

namespace {

void require_input_dim(const Matrix& features, std::size_t expected)
{
    if (static_cast<std::size_t>(features.cols()) != expected) {
        throw Error(Errc::DimensionMismatch, "features have " + std::to_string(features.cols()) +
                                                 " columns, model expects " + std::to_string(expected));
    }
}

void require_trained(const NetworkModel& model, Head head)
{
    if (model.mode() != Mode::Infer || model.layers().empty()) {
        throw Error(Errc::UntrainedModel, "model has not been trained");
    }
    if (model.head() != head) {
        throw Error(Errc::UntrainedModel, "model has the wrong output head for this operation");
    }
}

Matrix row_matrix(std::span<const double> row)
{
    Matrix m(1, static_cast<Eigen::Index>(row.size()));
    std::copy(row.begin(), row.end(), m.data());
    return m;
}

} // namespace

NetworkModel train_classifier(const Matrix& features, std::span<const int> labels, const ClassifierConfig& config,
                              std::uint64_t seed)
{
    require_input_dim(features, config.input_dim);
    if (static_cast<std::size_t>(features.rows()) != labels.size()) {
        throw Error(Errc::LengthMismatch, "feature and label counts differ");
    }
    if (labels.size() < 2) {
        throw Error(Errc::InsufficientData, "need at least two rows");
    }
    const bool has_clear = std::count(labels.begin(), labels.end(), 0) > 0;
    const bool has_cloudy = std::count(labels.begin(), labels.end(), 1) > 0;
    if (!has_clear || !has_cloudy) {
        throw Error(Errc::SingleClassData, "training labels contain a single class");
    }

    Matrix one_hot = Matrix::Zero(features.rows(), 2);
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] != 0 && labels[i] != 1) {
            throw Error(Errc::InvalidDistribution, "labels must be 0 (clear) or 1 (cloudy)");
        }
        one_hot(static_cast<Eigen::Index>(i), labels[i]) = 1.0;
    }

    const std::array<LayerSpec, 2> specs{
        LayerSpec{config.hidden_units, config.activation, 0.0, false},
        LayerSpec{2, Activation::Linear, 0.0, false},
    };
    NetworkModel model = init_params(specs, config.input_dim, seed, Head::Softmax);
    Rng unused(seed);

    // Summed cross-entropy + l2 * |W|^2, divided through by n to keep gradients O(1).
    const double lambda = config.l2 / static_cast<double>(labels.size());
    const Objective objective = [&](std::span<const double> x, std::span<double> grad) {
        model.set_parameters(x);
        ForwardResult fr = forward(model, features, unused, Mode::Train);
        const LossResult loss = cross_entropy_loss(fr.outputs, one_hot);
        GradientSet g = backward(model, fr.cache, loss.grad);
        add_l2_gradient(model, lambda, g);
        const std::vector<double> flat = g.flatten();
        std::copy(flat.begin(), flat.end(), grad.begin());
        return loss.value + l2_penalty(model, lambda);
    };
    // A stalled line search at machine precision still leaves the best point found.
    const LbfgsResult result = lbfgs_run(objective, model.parameters(), config.optimizer);
    model.set_parameters(result.params);
    model.set_mode(Mode::Infer);
    return model;
}

SkyLabel decide(const std::array<double, 2>& probabilities) noexcept
{
    return probabilities[1] > probabilities[0] ? SkyLabel::Cloudy : SkyLabel::Clear;
}

std::vector<Classification> classify_batch(const NetworkModel& model, const Matrix& rows)
{
    require_trained(model, Head::Softmax);
    require_input_dim(rows, model.input_dim());
    const Matrix probs = infer(model, rows);
    std::vector<Classification> out(static_cast<std::size_t>(rows.rows()));
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        out[i].probabilities = {probs(r, 0), probs(r, 1)};
        out[i].label = decide(out[i].probabilities);
    }
    return out;
}

Classification classify(const NetworkModel& model, std::span<const double> row)
{
    return classify_batch(model, row_matrix(row)).front();
}

std::vector<LayerSpec> regressor_layers(const RegressorConfig& config)
{
    if (config.dropout.size() != config.hidden_units.size()) {
        throw Error(Errc::LengthMismatch, "one dropout rate per hidden layer required");
    }
    std::vector<LayerSpec> specs;
    for (std::size_t j = 0; j < config.hidden_units.size(); ++j) {
        specs.push_back({config.hidden_units[j], config.activation, config.dropout[j], config.batch_norm});
    }
    specs.push_back({1, Activation::Linear, 0.0, false});
    return specs;
}

NetworkModel train_regressor(const Matrix& features, std::span<const double> targets, const RegressorConfig& config,
                             std::uint64_t seed, const EpochCallback& on_epoch)
{
    require_input_dim(features, config.input_dim);
    const std::size_t n = static_cast<std::size_t>(features.rows());
    if (targets.size() != n) {
        throw Error(Errc::LengthMismatch, "feature and target counts differ");
    }
    const std::size_t batch_size = std::max<std::size_t>(2, config.batch_size);
    if (n < 2 * batch_size) {
        throw Error(Errc::InsufficientData, std::to_string(n) + " rows is fewer than twice the batch size");
    }

    const double mean = std::accumulate(targets.begin(), targets.end(), 0.0) / static_cast<double>(n);
    double var = 0.0;
    for (const double t : targets) {
        var += (t - mean) * (t - mean);
    }
    const double std_dev = std::sqrt(var / static_cast<double>(n));
    const double scale = std_dev > 0.0 ? std_dev : 1.0;
    Matrix scaled_target(static_cast<Eigen::Index>(n), 1);
    for (std::size_t i = 0; i < n; ++i) {
        scaled_target(static_cast<Eigen::Index>(i), 0) = (targets[i] - mean) / scale;
    }

    const std::vector<LayerSpec> specs = regressor_layers(config);
    NetworkModel model = init_params(specs, config.input_dim, seed, Head::Identity);
    Rng rng(derive_seed(seed, 1));
    SgdNesterovState state{config.learning_rate, config.momentum, {}};
    std::vector<double> params = model.parameters();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Eigen::Index> rows;
    Matrix xb;
    Matrix yb;

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(std::span<std::size_t>(order), rng);
        double loss_sum = 0.0;
        std::size_t batches = 0;
        for (std::size_t start = 0; start + 2 <= n; start += batch_size) {
            const std::size_t stop = std::min(n, start + batch_size);
            rows.assign(order.begin() + static_cast<std::ptrdiff_t>(start),
                        order.begin() + static_cast<std::ptrdiff_t>(stop));
            xb = features(rows, Eigen::all);
            yb = scaled_target(rows, Eigen::all);
            double batch_loss = 0.0;
            sgd_nesterov_step(state, params, [&](std::span<const double> lookahead) {
                model.set_parameters(lookahead);
                ForwardResult fr = forward(model, xb, rng, Mode::Train);
                const LossResult loss = mse_loss(fr.outputs, yb);
                batch_loss = loss.value;
                return backward(model, fr.cache, loss.grad).flatten();
            });
            loss_sum += batch_loss;
            ++batches;
        }
        if (on_epoch) {
            on_epoch(epoch, loss_sum / static_cast<double>(std::max<std::size_t>(1, batches)));
        }
    }
    model.set_parameters(params);
    model.set_output_scaling({mean, scale});
    model.set_mode(Mode::Infer);
    return model;
}

std::vector<double> estimate_ghi_batch(const NetworkModel& model, const Matrix& rows)
{
    require_trained(model, Head::Identity);
    require_input_dim(rows, model.input_dim());
    const Matrix out = infer(model, rows);
    std::vector<double> ghi(static_cast<std::size_t>(out.rows()));
    for (std::size_t i = 0; i < ghi.size(); ++i) {
        ghi[i] = std::max(0.0, out(static_cast<Eigen::Index>(i), 0));
    }
    return ghi;
}

double estimate_ghi(const NetworkModel& model, std::span<const double> row)
{
    return estimate_ghi_batch(model, row_matrix(row)).front();
}

double accuracy(std::span<const int> predictions, std::span<const int> labels)
{
    if (predictions.size() != labels.size()) {
        throw Error(Errc::LengthMismatch, "prediction and label counts differ");
    }
    if (predictions.empty()) {
        throw Error(Errc::EmptySet, "accuracy of no predictions");
    }
    std::size_t hits = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        hits += predictions[i] == labels[i] ? 1 : 0;
    }
    return static_cast<double>(hits) / static_cast<double>(labels.size());
}

double r2_score(std::span<const double> pred, std::span<const double> target)
{
    if (pred.size() != target.size()) {
        throw Error(Errc::LengthMismatch, "prediction and target counts differ");
    }
    if (target.empty()) {
        throw Error(Errc::EmptySet, "r2 of no predictions");
    }
    const double mean = std::accumulate(target.begin(), target.end(), 0.0) / static_cast<double>(target.size());
    double ss_res = 0.0;
    double ss_tot = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        ss_res += (target[i] - pred[i]) * (target[i] - pred[i]);
        ss_tot += (target[i] - mean) * (target[i] - mean);
    }
    if (!(ss_tot > 0.0)) {
        throw Error(Errc::ZeroVariance, "target has zero variance");
    }
    return 1.0 - ss_res / ss_tot;
}

double mae(std::span<const double> pred, std::span<const double> target)
{
    if (pred.size() != target.size()) {
        throw Error(Errc::LengthMismatch, "prediction and target counts differ");
    }
    if (target.empty()) {
        throw Error(Errc::EmptySet, "mae of no predictions");
    }
    double sum = 0.0;
    for (std::size_t i = 0; i < target.size(); ++i) {
        sum += std::abs(pred[i] - target[i]);
    }
    return sum / static_cast<double>(target.size());
}

std::vector<Fold> make_folds(std::size_t n, std::size_t k, std::uint64_t seed)
{
    if (k < 2 || n < k) {
        throw Error(Errc::TooFewRows, std::to_string(n) + " rows cannot form " + std::to_string(k) + " folds");
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(std::span<std::size_t>(order), rng);

    std::vector<Fold> folds(k);
    const std::size_t base = n / k;
    const std::size_t extra = n % k;
    std::size_t start = 0;
    for (std::size_t f = 0; f < k; ++f) {
        const std::size_t size = base + (f < extra ? 1 : 0);
        const std::size_t stop = start + size;
        for (std::size_t i = 0; i < n; ++i) {
            (i >= start && i < stop ? folds[f].validation : folds[f].train).push_back(order[i]);
        }
        start = stop;
    }
    return folds;
}

Fold holdout_split(std::size_t n, double train_fraction, std::uint64_t seed)
{
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    Rng rng(seed);
    shuffle(std::span<std::size_t>(order), rng);
    const auto cut = static_cast<std::size_t>(std::llround(std::clamp(train_fraction, 0.0, 1.0) * static_cast<double>(n)));
    Fold out;
    out.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(cut));
    out.validation.assign(order.begin() + static_cast<std::ptrdiff_t>(cut), order.end());
    return out;
}

Dataset Dataset::subset(std::span<const std::size_t> rows) const
{
    Dataset out;
    std::vector<Eigen::Index> idx(rows.begin(), rows.end());
    out.features = features(idx, Eigen::all);
    for (const std::size_t r : rows) {
        if (!targets.empty()) {
            out.targets.push_back(targets[r]);
        }
        if (!labels.empty()) {
            out.labels.push_back(labels[r]);
        }
    }
    return out;
}

namespace {

void accumulate_metric(std::optional<double> FoldMetrics::*member, EvalReport& report)
{
    std::vector<double> values;
    for (const FoldMetrics& f : report.folds) {
        if (f.*member) {
            values.push_back(*(f.*member));
        }
    }
    if (values.empty() || values.size() != report.folds.size()) {
        return;
    }
    const double mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
    double var = 0.0;
    for (const double v : values) {
        var += (v - mean) * (v - mean);
    }
    report.mean.*member = mean;
    report.std.*member = std::sqrt(var / static_cast<double>(values.size()));
}

} // namespace

void aggregate(EvalReport& report)
{
    report.fold_count = report.folds.size();
    report.mean = {};
    report.std = {};
    accumulate_metric(&FoldMetrics::accuracy, report);
    accumulate_metric(&FoldMetrics::r2, report);
    accumulate_metric(&FoldMetrics::mae, report);
}

EvalReport kfold_cv(const Dataset& dataset, std::size_t k, const TrainFn& train_fn, const EvalFn& eval_fn,
                    std::uint64_t seed)
{
    const std::vector<Fold> folds = make_folds(dataset.rows(), k, seed);
    EvalReport report;
    for (std::size_t f = 0; f < folds.size(); ++f) {
        FoldData train{dataset.subset(folds[f].train), {}};
        FoldData validation{dataset.subset(folds[f].validation), {}};
        train.scaler = fit_scaler(train.data.features);
        validation.scaler = train.scaler;
        train.data.features = transform(train.scaler, train.data.features);
        validation.data.features = transform(train.scaler, validation.data.features);

        const Predictor predict = train_fn(train, derive_seed(seed, f));
        const std::vector<double> predictions = predict(validation.data.features);
        report.folds.push_back(eval_fn(predictions, validation));
    }
    aggregate(report);
    return report;
}

FoldMetrics classification_metrics(std::span<const double> predictions, const FoldData& validation)
{
    std::vector<int> predicted(predictions.size());
    std::transform(predictions.begin(), predictions.end(), predicted.begin(),
                   [](double p) { return static_cast<int>(std::lround(p)); });
    FoldMetrics m;
    m.accuracy = accuracy(predicted, validation.data.labels);
    return m;
}

FoldMetrics regression_metrics(std::span<const double> predictions, const FoldData& validation)
{
    FoldMetrics m;
    m.r2 = r2_score(predictions, validation.data.targets);
    m.mae = mae(predictions, validation.data.targets);
    return m;
}

} // namespace skyirr
