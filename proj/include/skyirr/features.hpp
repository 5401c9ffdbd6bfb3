#pragma once

#include "skyirr/clustering.hpp"
#include "skyirr/linalg.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace skyirr {

// Per-cluster pixel counts of one segmented image; masked pixels excluded.
struct PcnpVector {
    std::vector<std::uint64_t> counts;

    std::uint64_t total() const noexcept;
};

PcnpVector extract_pcnp(const SegmentedImage& segmented);

// Column means and population standard deviations.
struct StandardScaler {
    std::vector<double> means;
    std::vector<double> stds;

    std::size_t dim() const noexcept { return means.size(); }
    friend bool operator==(const StandardScaler&, const StandardScaler&) = default;
};

StandardScaler fit_scaler(const Matrix& matrix);

// (x - mean) / std per column; columns with std == 0 map to 0.
std::vector<double> transform(const StandardScaler& scaler, std::span<const double> row);
Matrix transform(const StandardScaler& scaler, const Matrix& matrix);

} // namespace skyirr
