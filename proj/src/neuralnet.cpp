#include "skyirr/neuralnet.hpp"

#include "skyirr/error.hpp"

#include <cmath>
#include <string>

namespace skyirr {

NetworkModel::NetworkModel(std::size_t input_dim, std::vector<DenseLayer> layers, Head head, Mode mode)
    : input_dim_(input_dim), layers_(std::move(layers)), head_(head), mode_(mode)
{
    std::size_t fan_in = input_dim_;
    for (std::size_t j = 0; j < layers_.size(); ++j) {
        const DenseLayer& layer = layers_[j];
        const auto units = static_cast<Eigen::Index>(layer.spec.units);
        const bool shapes_ok = layer.spec.units >= 1 && layer.weights.rows() == static_cast<Eigen::Index>(fan_in) &&
                               layer.weights.cols() == units && layer.biases.size() == units;
        const Eigen::Index norm_size = layer.spec.batch_norm ? units : 0;
        const bool norm_ok = layer.gamma.size() == norm_size && layer.beta.size() == norm_size &&
                             layer.running_mean.size() == norm_size && layer.running_var.size() == norm_size;
        if (!shapes_ok || !norm_ok) {
            throw Error(Errc::DimensionMismatch, "layer " + std::to_string(j) + " does not chain with its input");
        }
        if (!(layer.spec.dropout_rate >= 0.0 && layer.spec.dropout_rate < 1.0)) {
            throw Error(Errc::DimensionMismatch, "dropout rate must lie in [0, 1)");
        }
        fan_in = layer.spec.units;
    }
}

std::size_t NetworkModel::output_dim() const noexcept
{
    return layers_.empty() ? input_dim_ : layers_.back().spec.units;
}

std::vector<DenseLayer>& NetworkModel::mutable_layers() noexcept
{
    ++generation_;
    return layers_;
}

std::size_t NetworkModel::parameter_count() const noexcept
{
    std::size_t n = 0;
    for (const DenseLayer& layer : layers_) {
        n += static_cast<std::size_t>(layer.weights.size() + layer.biases.size() + layer.gamma.size() +
                                      layer.beta.size());
    }
    return n;
}

namespace {

template <class Block, class Fn>
void for_each_block(Block& layers, Fn&& fn)
{
    for (auto& layer : layers) {
        fn(layer.weights.data(), layer.weights.size());
        fn(layer.biases.data(), layer.biases.size());
        fn(layer.gamma.data(), layer.gamma.size());
        fn(layer.beta.data(), layer.beta.size());
    }
}

} // namespace

std::vector<double> NetworkModel::parameters() const
{
    std::vector<double> out;
    out.reserve(parameter_count());
    for_each_block(layers_, [&](const double* data, Eigen::Index size) { out.insert(out.end(), data, data + size); });
    return out;
}

void NetworkModel::set_parameters(std::span<const double> values)
{
    if (values.size() != parameter_count()) {
        throw Error(Errc::DimensionMismatch, "parameter vector length " + std::to_string(values.size()) +
                                                 " != " + std::to_string(parameter_count()));
    }
    std::size_t pos = 0;
    for_each_block(mutable_layers(), [&](double* data, Eigen::Index size) {
        std::copy_n(values.begin() + static_cast<std::ptrdiff_t>(pos), size, data);
        pos += static_cast<std::size_t>(size);
    });
}

std::vector<double> GradientSet::flatten() const
{
    std::vector<double> out;
    for_each_block(layers, [&](const double* data, Eigen::Index size) { out.insert(out.end(), data, data + size); });
    return out;
}

Matrix softmax_rows(const Matrix& scores)
{
    Matrix out(scores.rows(), scores.cols());
    for (Eigen::Index i = 0; i < scores.rows(); ++i) {
        const double peak = scores.row(i).maxCoeff();
        out.row(i) = (scores.row(i).array() - peak).exp();
        out.row(i) /= out.row(i).sum();
    }
    return out;
}

namespace {

Matrix activate(const Matrix& z, Activation act)
{
    switch (act) {
    case Activation::Relu: return z.cwiseMax(0.0);
    case Activation::Sigmoid: return (1.0 + (-z.array()).exp()).inverse().matrix();
    case Activation::Tanh: return z.array().tanh().matrix();
    case Activation::Linear: return z;
    }
    return z;
}

// d activation / d z expressed through the pre-activation z and output a.
Matrix activation_derivative(const Matrix& z, const Matrix& a, Activation act)
{
    switch (act) {
    case Activation::Relu: return (z.array() > 0.0).cast<double>().matrix();
    case Activation::Sigmoid: return (a.array() * (1.0 - a.array())).matrix();
    case Activation::Tanh: return (1.0 - a.array().square()).matrix();
    case Activation::Linear: return Matrix::Ones(z.rows(), z.cols());
    }
    return Matrix::Ones(z.rows(), z.cols());
}

struct BatchStats {
    RowVector mean;
    RowVector var;
};

// Shared by forward() and infer(). rng may be null only in infer mode.
Matrix run_layers(const NetworkModel& model, const Matrix& batch, Rng* rng, Mode mode, ForwardCache* cache,
                  std::vector<BatchStats>* stats)
{
    if (static_cast<std::size_t>(batch.cols()) != model.input_dim()) {
        throw Error(Errc::DimensionMismatch, "batch has " + std::to_string(batch.cols()) + " columns, model expects " +
                                                 std::to_string(model.input_dim()));
    }
    const Eigen::Index n = batch.rows();
    Matrix x = batch;
    if (cache) {
        cache->layers.clear();
        cache->layers.reserve(model.layers().size());
    }
    for (const DenseLayer& layer : model.layers()) {
        LayerCache entry;
        Matrix z = x * layer.weights;
        z.rowwise() += layer.biases;
        if (cache) {
            entry.input = x;
        }
        Matrix y;
        if (layer.spec.batch_norm) {
            RowVector mean;
            RowVector var;
            if (mode == Mode::Train) {
                if (n < 2) {
                    throw Error(Errc::DegenerateBatch, "train-mode batch norm needs at least 2 rows");
                }
                mean = z.colwise().mean();
                var = (z.rowwise() - mean).array().square().colwise().mean().matrix();
                if (stats) {
                    stats->push_back({mean, var});
                }
            } else {
                mean = layer.running_mean;
                var = layer.running_var;
            }
            const RowVector inv_std = (var.array() + kBatchNormEps).rsqrt().matrix();
            Matrix xhat = (z.rowwise() - mean).array().rowwise() * inv_std.array();
            y = (xhat.array().rowwise() * layer.gamma.array()).matrix();
            y.rowwise() += layer.beta;
            if (cache) {
                entry.xhat = std::move(xhat);
                entry.inv_std = inv_std;
            }
        } else {
            y = std::move(z);
        }
        Matrix a = activate(y, layer.spec.activation);
        if (cache) {
            entry.activated = a;
            entry.pre = std::move(y);
        }
        if (mode == Mode::Train && layer.spec.dropout_rate > 0.0) {
            const double rate = layer.spec.dropout_rate;
            const double keep_scale = 1.0 / (1.0 - rate);
            Matrix mask(a.rows(), a.cols());
            for (Eigen::Index i = 0; i < mask.size(); ++i) {
                mask.data()[i] = uniform01(*rng) < rate ? 0.0 : keep_scale;
            }
            a = a.cwiseProduct(mask);
            if (cache) {
                entry.dropout = std::move(mask);
            }
        }
        if (cache) {
            cache->layers.push_back(std::move(entry));
        }
        x = std::move(a);
    }
    if (model.head() == Head::Softmax) {
        return softmax_rows(x);
    }
    return x;
}

} // namespace

struct ForwardAccess {
    static void update_running_stats(NetworkModel& model, const std::vector<BatchStats>& stats)
    {
        std::size_t s = 0;
        for (DenseLayer& layer : model.layers_) {
            if (!layer.spec.batch_norm) {
                continue;
            }
            layer.running_mean = kBatchNormMomentum * layer.running_mean + (1.0 - kBatchNormMomentum) * stats[s].mean;
            layer.running_var = kBatchNormMomentum * layer.running_var + (1.0 - kBatchNormMomentum) * stats[s].var;
            ++s;
        }
    }
};

ForwardResult forward(NetworkModel& model, const Matrix& batch, Rng& rng, Mode mode)
{
    ForwardResult result;
    std::vector<BatchStats> stats;
    result.outputs = run_layers(model, batch, &rng, mode, &result.cache, &stats);
    result.cache.model = &model;
    result.cache.generation = model.generation();
    result.cache.mode = mode;
    if (mode == Mode::Train) {
        ForwardAccess::update_running_stats(model, stats);
    }
    return result;
}

Matrix infer(const NetworkModel& model, const Matrix& batch)
{
    Matrix out = run_layers(model, batch, nullptr, Mode::Infer, nullptr, nullptr);
    if (model.head() == Head::Identity) {
        const OutputScaling& s = model.output_scaling();
        out = (out.array() * s.scale + s.offset).matrix();
    }
    return out;
}

GradientSet backward(const NetworkModel& model, const ForwardCache& cache, const Matrix& loss_grad)
{
    if (cache.model != &model || cache.generation != model.generation() ||
        cache.layers.size() != model.layers().size()) {
        throw Error(Errc::StaleCache, "forward cache does not belong to the current model parameters");
    }
    if (cache.layers.empty()) {
        return {};
    }
    const Eigen::Index n = cache.layers.front().input.rows();
    if (loss_grad.rows() != n || static_cast<std::size_t>(loss_grad.cols()) != model.output_dim()) {
        throw Error(Errc::DimensionMismatch, "loss gradient shape does not match the forward outputs");
    }

    GradientSet grads;
    grads.layers.resize(model.layers().size());
    Matrix upstream = loss_grad;
    for (std::size_t j = model.layers().size(); j-- > 0;) {
        const DenseLayer& layer = model.layers()[j];
        const LayerCache& entry = cache.layers[j];
        LayerGradient& g = grads.layers[j];

        if (entry.dropout.size() > 0) {
            upstream = upstream.cwiseProduct(entry.dropout);
        }
        Matrix dy = upstream.cwiseProduct(activation_derivative(entry.pre, entry.activated, layer.spec.activation));

        Matrix dz;
        if (layer.spec.batch_norm) {
            g.gamma = (dy.array() * entry.xhat.array()).colwise().sum().matrix();
            g.beta = dy.colwise().sum();
            const Matrix dxhat = (dy.array().rowwise() * layer.gamma.array()).matrix();
            if (cache.mode == Mode::Train) {
                // Full batch-statistics chain rule.
                const RowVector sum_dxhat = dxhat.colwise().sum();
                const RowVector sum_dxhat_xhat = (dxhat.array() * entry.xhat.array()).colwise().sum().matrix();
                const double inv_n = 1.0 / static_cast<double>(n);
                Matrix t = static_cast<double>(n) * dxhat;
                t.rowwise() -= sum_dxhat;
                t -= (entry.xhat.array().rowwise() * sum_dxhat_xhat.array()).matrix();
                dz = ((t.array().rowwise() * entry.inv_std.array()) * inv_n).matrix();
            } else {
                dz = (dxhat.array().rowwise() * entry.inv_std.array()).matrix();
            }
        } else {
            dz = std::move(dy);
        }
        g.weights = entry.input.transpose() * dz;
        g.biases = dz.colwise().sum();
        if (j > 0) {
            upstream = dz * layer.weights.transpose();
        }
    }
    return grads;
}

LossResult mse_loss(const Matrix& pred, const Matrix& target)
{
    if (pred.rows() != target.rows() || pred.cols() != target.cols()) {
        throw Error(Errc::LengthMismatch, "prediction and target shapes differ");
    }
    if (pred.rows() == 0) {
        throw Error(Errc::EmptySet, "empty batch");
    }
    const double count = static_cast<double>(pred.size());
    const Matrix diff = pred - target;
    return {diff.squaredNorm() / count, (2.0 / count) * diff};
}

LossResult cross_entropy_loss(const Matrix& probabilities, const Matrix& one_hot)
{
    if (probabilities.rows() != one_hot.rows() || probabilities.cols() != one_hot.cols()) {
        throw Error(Errc::LengthMismatch, "probability and target shapes differ");
    }
    if (probabilities.rows() == 0) {
        throw Error(Errc::EmptySet, "empty batch");
    }
    for (Eigen::Index i = 0; i < probabilities.rows(); ++i) {
        const double sum = probabilities.row(i).sum();
        if (!(std::abs(sum - 1.0) <= 1e-9) || (probabilities.row(i).array() < 0.0).any()) {
            throw Error(Errc::InvalidDistribution, "row " + std::to_string(i) + " is not a probability distribution");
        }
    }
    const auto n = static_cast<double>(probabilities.rows());
    double total = 0.0;
    for (Eigen::Index i = 0; i < probabilities.size(); ++i) {
        const double y = one_hot.data()[i];
        if (y != 0.0) {
            total -= y * std::log(std::max(probabilities.data()[i], 1e-300));
        }
    }
    return {total / n, (probabilities - one_hot) / n};
}

double l2_penalty(const NetworkModel& model, double lambda)
{
    double sum = 0.0;
    for (const DenseLayer& layer : model.layers()) {
        sum += layer.weights.squaredNorm();
    }
    return lambda * sum;
}

void add_l2_gradient(const NetworkModel& model, double lambda, GradientSet& grads)
{
    for (std::size_t j = 0; j < model.layers().size(); ++j) {
        grads.layers[j].weights += (2.0 * lambda) * model.layers()[j].weights;
    }
}

NetworkModel init_params(std::span<const LayerSpec> specs, std::size_t input_dim, std::uint64_t seed, Head head)
{
    Rng rng(seed);
    std::vector<DenseLayer> layers;
    std::size_t fan_in = input_dim;
    for (const LayerSpec& spec : specs) {
        DenseLayer layer;
        layer.spec = spec;
        const auto rows = static_cast<Eigen::Index>(fan_in);
        const auto cols = static_cast<Eigen::Index>(spec.units);
        const double limit = spec.activation == Activation::Relu
                                 ? std::sqrt(6.0 / static_cast<double>(fan_in))
                                 : std::sqrt(6.0 / static_cast<double>(fan_in + spec.units));
        layer.weights.resize(rows, cols);
        for (Eigen::Index i = 0; i < layer.weights.size(); ++i) {
            layer.weights.data()[i] = uniform(rng, -limit, limit);
        }
        layer.biases = RowVector::Zero(cols);
        if (spec.batch_norm) {
            layer.gamma = RowVector::Ones(cols);
            layer.beta = RowVector::Zero(cols);
            layer.running_mean = RowVector::Zero(cols);
            layer.running_var = RowVector::Ones(cols);
        }
        layers.push_back(std::move(layer));
        fan_in = spec.units;
    }
    return NetworkModel(input_dim, std::move(layers), head, Mode::Train);
}

} // namespace skyirr
