#include "skyirr/pipeline.hpp"

#include "skyirr/random.hpp"

#include <algorithm>
#include <numeric>

namespace skyirr {

std::vector<Point3> sample_pixels(const ImageRGB& image, std::size_t max_pixels, Rng& rng)
{
    const MaskedPixelSet visible = apply_mask(image, SkyMask::centered(image.width(), image.height()));
    if (max_pixels == 0 || visible.size() <= max_pixels) {
        return to_points(visible.colors);
    }
    std::vector<std::size_t> idx(visible.size());
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    for (std::size_t i = 0; i < max_pixels; ++i) {
        const auto j = i + static_cast<std::size_t>(uniform_index(rng, idx.size() - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(max_pixels);
    std::sort(idx.begin(), idx.end());
    std::vector<Point3> out;
    out.reserve(max_pixels);
    for (const std::size_t i : idx) {
        out.push_back(to_point(visible.colors[i]));
    }
    return out;
}

Centroids train_palette(std::size_t image_count, const ImageSource& source, std::size_t k, std::uint64_t seed,
                        const FitConfig& config, std::size_t pixels_per_image)
{
    Rng rng(seed);
    std::vector<Point3> pool;
    for (std::size_t i = 0; i < image_count; ++i) {
        const std::vector<Point3> px = sample_pixels(source(i), pixels_per_image, rng);
        pool.insert(pool.end(), px.begin(), px.end());
    }
    return fit(pool, k, derive_seed(seed, 1), config);
}

PcnpVector image_pcnp(const ImageRGB& image, const Centroids& palette)
{
    return extract_pcnp(quantize(image, SkyMask::centered(image.width(), image.height()), palette));
}

Matrix pcnp_matrix(std::size_t image_count, const ImageSource& source, const Centroids& palette)
{
    Matrix out(static_cast<Eigen::Index>(image_count), static_cast<Eigen::Index>(palette.k()));
    for (std::size_t i = 0; i < image_count; ++i) {
        const PcnpVector v = image_pcnp(source(i), palette);
        for (std::size_t j = 0; j < v.counts.size(); ++j) {
            out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = static_cast<double>(v.counts[j]);
        }
    }
    return out;
}

} // namespace skyirr
