#include "skyirr/features.hpp"

#include "skyirr/error.hpp"

#include <cmath>
#include <numeric>

namespace skyirr {

std::uint64_t PcnpVector::total() const noexcept
{
    return std::accumulate(counts.begin(), counts.end(), std::uint64_t{0});
}

PcnpVector extract_pcnp(const SegmentedImage& segmented)
{
    PcnpVector out;
    out.counts.assign(segmented.palette.k(), 0);
    for (const std::int32_t label : segmented.labels) {
        if (label != SegmentedImage::kMasked) {
            ++out.counts[static_cast<std::size_t>(label)];
        }
    }
    return out;
}

StandardScaler fit_scaler(const Matrix& matrix)
{
    if (matrix.rows() == 0) {
        throw Error(Errc::EmptyMatrix, "cannot fit a scaler on zero rows");
    }
    const auto n = static_cast<double>(matrix.rows());
    StandardScaler scaler;
    scaler.means.resize(static_cast<std::size_t>(matrix.cols()));
    scaler.stds.resize(static_cast<std::size_t>(matrix.cols()));
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        const double mean = matrix.col(j).sum() / n;
        const double var = (matrix.col(j).array() - mean).square().sum() / n;
        scaler.means[static_cast<std::size_t>(j)] = mean;
        scaler.stds[static_cast<std::size_t>(j)] = std::sqrt(var);
    }
    return scaler;
}

std::vector<double> transform(const StandardScaler& scaler, std::span<const double> row)
{
    if (row.size() != scaler.dim()) {
        throw Error(Errc::LengthMismatch, "row has " + std::to_string(row.size()) + " values, scaler expects " +
                                              std::to_string(scaler.dim()));
    }
    std::vector<double> out(row.size());
    for (std::size_t i = 0; i < row.size(); ++i) {
        out[i] = scaler.stds[i] > 0.0 ? (row[i] - scaler.means[i]) / scaler.stds[i] : 0.0;
    }
    return out;
}

Matrix transform(const StandardScaler& scaler, const Matrix& matrix)
{
    if (static_cast<std::size_t>(matrix.cols()) != scaler.dim()) {
        throw Error(Errc::LengthMismatch, "matrix has " + std::to_string(matrix.cols()) +
                                              " columns, scaler expects " + std::to_string(scaler.dim()));
    }
    Matrix out(matrix.rows(), matrix.cols());
    for (Eigen::Index j = 0; j < matrix.cols(); ++j) {
        const auto s = static_cast<std::size_t>(j);
        if (scaler.stds[s] > 0.0) {
            out.col(j) = (matrix.col(j).array() - scaler.means[s]) / scaler.stds[s];
        } else {
            out.col(j).setZero();
        }
    }
    return out;
}

} // namespace skyirr
