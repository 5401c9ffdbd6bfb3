#pragma once

#include "skyirr/clustering.hpp"
#include "skyirr/features.hpp"
#include "skyirr/imaging.hpp"
#include "skyirr/linalg.hpp"
#include "skyirr/random.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace skyirr {

// Glue shared by the CLI and the acceptance suite. Every image is masked with
// SkyMask::centered for its own dimensions.

using ImageSource = std::function<ImageRGB(std::size_t index)>;

// Visible pixels of one image; when max_pixels > 0 and the image has more,
// a seeded uniform subset of that size (in row-major order).
std::vector<Point3> sample_pixels(const ImageRGB& image, std::size_t max_pixels, Rng& rng);

// Builds the pixel pool from every image and fits the palette.
Centroids train_palette(std::size_t image_count, const ImageSource& source, std::size_t k, std::uint64_t seed,
                        const FitConfig& config, std::size_t pixels_per_image);

PcnpVector image_pcnp(const ImageRGB& image, const Centroids& palette);

// One PCNP row per image, raw counts.
Matrix pcnp_matrix(std::size_t image_count, const ImageSource& source, const Centroids& palette);

} // namespace skyirr
