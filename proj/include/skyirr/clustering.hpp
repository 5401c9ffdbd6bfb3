#pragma once

#include "skyirr/imaging.hpp"

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace skyirr {

using Point3 = std::array<double, 3>;

inline Point3 to_point(const Rgb& c)
{
    return {static_cast<double>(c.r), static_cast<double>(c.g), static_cast<double>(c.b)};
}

std::vector<Point3> to_points(std::span<const Rgb> colors);

inline double squared_distance(const Point3& a, const Point3& b)
{
    const double dr = a[0] - b[0];
    const double dg = a[1] - b[1];
    const double db = a[2] - b[2];
    return dr * dr + dg * dg + db * db;
}

// The learned palette ("super-pixels") plus per-center assignment counts
// used as the mini-batch learning-rate denominators.
struct Centroids {
    std::vector<Point3> points;
    std::vector<std::uint64_t> counts;

    std::size_t k() const noexcept { return points.size(); }
    friend bool operator==(const Centroids&, const Centroids&) = default;
};

enum class InitMethod : std::uint8_t { RandomSample, KMeansPlusPlus };

Centroids init_centroids(std::span<const Point3> sample, std::size_t k, std::uint64_t seed,
                         InitMethod method = InitMethod::KMeansPlusPlus);

// Nearest center by squared Euclidean distance; ties go to the lowest index.
std::size_t assign(const Centroids& centroids, const Point3& point);

// One Sculley mini-batch step: nearest centers are cached for the whole batch
// first, then each point pulls its center with rate 1 / counts[c].
void partial_fit(Centroids& centroids, std::span<const Point3> batch);

struct FitConfig {
    std::size_t batch_size = 1024;
    std::size_t epochs = 10;
    bool reseed_empty = true;
    InitMethod init = InitMethod::KMeansPlusPlus;
};

// Called after every epoch with the epoch index (0-based) and current centers.
using EpochObserver = std::function<void(std::size_t epoch, const Centroids& centroids)>;

Centroids fit(std::span<const Point3> points, std::size_t k, std::uint64_t seed, const FitConfig& config = {},
              const EpochObserver& observer = {});

// Continues training from given centers; fit() is init_centroids + fit_from.
void fit_from(Centroids& centroids, std::span<const Point3> points, std::uint64_t seed, const FitConfig& config,
              const EpochObserver& observer = {});

// Mean squared distance from each point to its nearest center.
double inertia(const Centroids& centroids, std::span<const Point3> points);

struct SegmentedImage {
    static constexpr std::int32_t kMasked = -1;

    int width = 0;
    int height = 0;
    std::vector<std::int32_t> labels;
    Centroids palette;
};

SegmentedImage quantize(const ImageRGB& image, const SkyMask& mask, const Centroids& centroids);

// Labels become rounded palette colors; masked pixels are painted black.
ImageRGB render_segmented(const SegmentedImage& segmented);

} // namespace skyirr
