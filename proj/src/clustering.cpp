#include "skyirr/clustering.hpp"

#include "skyirr/error.hpp"
#include "skyirr/random.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace skyirr {

std::vector<Point3> to_points(std::span<const Rgb> colors)
{
    std::vector<Point3> out;
    out.reserve(colors.size());
    for (const Rgb& c : colors) {
        out.push_back(to_point(c));
    }
    return out;
}

namespace {

struct Nearest {
    std::size_t index;
    double distance;
};

Nearest nearest(const std::vector<Point3>& centers, const Point3& p)
{
    Nearest best{0, std::numeric_limits<double>::infinity()};
    for (std::size_t c = 0; c < centers.size(); ++c) {
        const double d = squared_distance(centers[c], p);
        if (d < best.distance) {
            best = {c, d};
        }
    }
    return best;
}

Centroids init_random_sample(std::span<const Point3> sample, std::size_t k, Rng& rng)
{
    std::vector<std::size_t> order(sample.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    // Partial Fisher-Yates: the first k slots become a uniform k-subset.
    for (std::size_t i = 0; i < k; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, sample.size() - i));
        std::swap(order[i], order[j]);
    }
    Centroids out;
    for (std::size_t i = 0; i < k; ++i) {
        out.points.push_back(sample[order[i]]);
    }
    out.counts.assign(k, 0);
    return out;
}

Centroids init_kmeans_plus_plus(std::span<const Point3> sample, std::size_t k, Rng& rng)
{
    Centroids out;
    out.points.push_back(sample[uniform_index(rng, sample.size())]);
    std::vector<double> d2(sample.size());
    for (std::size_t i = 0; i < sample.size(); ++i) {
        d2[i] = squared_distance(sample[i], out.points[0]);
    }
    while (out.points.size() < k) {
        const double total = std::accumulate(d2.begin(), d2.end(), 0.0);
        std::size_t pick = 0;
        if (total > 0.0) {
            const double target = uniform01(rng) * total;
            double acc = 0.0;
            pick = sample.size();
            for (std::size_t i = 0; i < sample.size(); ++i) {
                acc += d2[i];
                if (target < acc && d2[i] > 0.0) {
                    pick = i;
                    break;
                }
            }
            if (pick == sample.size()) {
                // Rounding at the top of the cumulative sum: take the last positive weight.
                for (std::size_t i = sample.size(); i-- > 0;) {
                    if (d2[i] > 0.0) {
                        pick = i;
                        break;
                    }
                }
            }
        } else {
            // Fewer distinct points than k.
            pick = static_cast<std::size_t>(uniform_index(rng, sample.size()));
        }
        out.points.push_back(sample[pick]);
        for (std::size_t i = 0; i < sample.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(sample[i], out.points.back()));
        }
    }
    out.counts.assign(k, 0);
    return out;
}

} // namespace

Centroids init_centroids(std::span<const Point3> sample, std::size_t k, std::uint64_t seed, InitMethod method)
{
    if (k == 0) {
        throw Error(Errc::InsufficientData, "k must be at least 1");
    }
    if (sample.size() < k) {
        throw Error(Errc::InsufficientData,
                    "sample of " + std::to_string(sample.size()) + " points is smaller than k = " + std::to_string(k));
    }
    Rng rng(seed);
    return method == InitMethod::RandomSample ? init_random_sample(sample, k, rng)
                                              : init_kmeans_plus_plus(sample, k, rng);
}

std::size_t assign(const Centroids& centroids, const Point3& point)
{
    return nearest(centroids.points, point).index;
}

void partial_fit(Centroids& centroids, std::span<const Point3> batch)
{
    std::vector<std::size_t> cached(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) {
        cached[i] = assign(centroids, batch[i]);
    }
    for (std::size_t i = 0; i < batch.size(); ++i) {
        const std::size_t c = cached[i];
        centroids.counts[c] += 1;
        const double eta = 1.0 / static_cast<double>(centroids.counts[c]);
        Point3& center = centroids.points[c];
        // (1 - eta) c + eta x, written so a center sitting on x stays put exactly.
        for (int d = 0; d < 3; ++d) {
            center[d] += eta * (batch[i][d] - center[d]);
        }
    }
}

namespace {

void reseed_empty_centers(Centroids& centroids, std::span<const Point3> points)
{
    std::vector<std::size_t> empty;
    for (std::size_t c = 0; c < centroids.k(); ++c) {
        if (centroids.counts[c] == 0) {
            empty.push_back(c);
        }
    }
    if (empty.empty()) {
        return;
    }
    std::vector<std::pair<double, std::size_t>> far;
    far.reserve(points.size());
    for (std::size_t i = 0; i < points.size(); ++i) {
        far.emplace_back(nearest(centroids.points, points[i]).distance, i);
    }
    const std::size_t take = std::min(empty.size(), far.size());
    std::partial_sort(far.begin(), far.begin() + static_cast<std::ptrdiff_t>(take), far.end(),
                      [](const auto& a, const auto& b) { return a.first > b.first || (a.first == b.first && a.second < b.second); });
    for (std::size_t j = 0; j < take; ++j) {
        if (far[j].first <= 0.0) {
            break;
        }
        centroids.points[empty[j]] = points[far[j].second];
    }
}

} // namespace

void fit_from(Centroids& centroids, std::span<const Point3> points, std::uint64_t seed, const FitConfig& config,
              const EpochObserver& observer)
{
    if (points.size() < centroids.k()) {
        throw Error(Errc::InsufficientData, "fewer points than clusters");
    }
    const std::size_t batch_size = std::max<std::size_t>(1, config.batch_size);
    Rng rng(seed);
    std::vector<std::size_t> order(points.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<Point3> batch;
    batch.reserve(batch_size);

    for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
        shuffle(std::span<std::size_t>(order), rng);
        for (std::size_t start = 0; start < order.size(); start += batch_size) {
            const std::size_t stop = std::min(order.size(), start + batch_size);
            batch.clear();
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(points[order[i]]);
            }
            partial_fit(centroids, batch);
        }
        if (config.reseed_empty) {
            reseed_empty_centers(centroids, points);
        }
        if (observer) {
            observer(epoch, centroids);
        }
    }
}

Centroids fit(std::span<const Point3> points, std::size_t k, std::uint64_t seed, const FitConfig& config,
              const EpochObserver& observer)
{
    Centroids centroids = init_centroids(points, k, seed, config.init);
    fit_from(centroids, points, derive_seed(seed, 1), config, observer);
    return centroids;
}

double inertia(const Centroids& centroids, std::span<const Point3> points)
{
    if (points.empty()) {
        throw Error(Errc::EmptySet, "inertia of an empty point set");
    }
    if (centroids.k() == 0) {
        throw Error(Errc::InsufficientData, "no centers");
    }
    double total = 0.0;
    for (const Point3& p : points) {
        total += nearest(centroids.points, p).distance;
    }
    return total / static_cast<double>(points.size());
}

SegmentedImage quantize(const ImageRGB& image, const SkyMask& mask, const Centroids& centroids)
{
    if (mask.width != image.width() || mask.height != image.height()) {
        throw Error(Errc::DimensionMismatch, "mask and image dimensions differ");
    }
    if (centroids.k() == 0) {
        throw Error(Errc::InsufficientData, "empty palette");
    }
    SegmentedImage out;
    out.width = image.width();
    out.height = image.height();
    out.labels.assign(image.size(), SegmentedImage::kMasked);
    out.palette = centroids;

    // Sky images repeat colors heavily; memoize per distinct color.
    std::vector<std::int32_t> memo;
    std::vector<std::uint32_t> memo_keys;
    constexpr std::size_t kMemoSize = 1u << 14;
    memo.assign(kMemoSize, -1);
    memo_keys.assign(kMemoSize, 0);

    std::size_t idx = 0;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x, ++idx) {
            if (!mask.visible(x, y)) {
                continue;
            }
            const Rgb c = image.at(x, y);
            const std::uint32_t key = (std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b;
            const std::size_t slot = (key * 2654435761u) >> 18 & (kMemoSize - 1);
            if (memo[slot] >= 0 && memo_keys[slot] == key) {
                out.labels[idx] = memo[slot];
                continue;
            }
            const auto label = static_cast<std::int32_t>(assign(centroids, to_point(c)));
            memo[slot] = label;
            memo_keys[slot] = key;
            out.labels[idx] = label;
        }
    }
    return out;
}

ImageRGB render_segmented(const SegmentedImage& segmented)
{
    std::vector<Rgb> palette;
    palette.reserve(segmented.palette.k());
    for (const Point3& p : segmented.palette.points) {
        auto channel = [](double v) {
            return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
        };
        palette.push_back(Rgb{channel(p[0]), channel(p[1]), channel(p[2])});
    }
    std::vector<Rgb> pixels(segmented.labels.size());
    for (std::size_t i = 0; i < pixels.size(); ++i) {
        const std::int32_t label = segmented.labels[i];
        pixels[i] = label == SegmentedImage::kMasked ? Rgb{0, 0, 0} : palette[static_cast<std::size_t>(label)];
    }
    return ImageRGB(segmented.width, segmented.height, std::move(pixels));
}

} // namespace skyirr
