#pragma once

#include "skyirr/imaging.hpp"
#include "skyirr/models.hpp"
#include "skyirr/random.hpp"

#include <cstdint>
#include <filesystem>
#include <numbers>
#include <vector>

namespace skyirr {

// Synthetic hemispheric sky scenes whose GHI is known in closed form:
//   ghi = peak * sin(max(elevation, 0)) * (1 - 0.6 * cloud_fraction) * (1 - 0.75 * sun_occlusion)
inline constexpr double kDefaultClearSkyPeak = 931.0;
inline constexpr double kCloudAttenuation = 0.6;
inline constexpr double kOcclusionAttenuation = 0.75;
inline constexpr double kCloudyThreshold = 0.02;  // cloud_fraction above this => cloudy
inline constexpr double kCoverageTolerance = 0.02; // rendered vs requested cloud fraction

struct SceneParams {
    double sun_azimuth_angle = 0.0;             // radians, clockwise from image "north" (up)
    double sun_elevation = std::numbers::pi / 2; // radians
    int cloud_count = 0;
    double cloud_fraction = 0.0; // share of visible pixels covered by cloud
    double sun_occlusion = 0.0;  // share of solar-disk pixels covered by cloud
    double clear_sky_peak = kDefaultClearSkyPeak;
};

struct SceneTruth {
    ImageRGB image;
    double ghi = 0.0;
    SkyLabel label = SkyLabel::Clear;
    SceneParams params;
};

double transfer_ghi(const SceneParams& params);
SkyLabel label_for(const SceneParams& params);

// Per-pixel geometry shared by the renderer and its tests.
struct SkyGeometry {
    double center_x = 0.0;
    double center_y = 0.0;
    double radius = 0.0; // horizon radius in pixels
    double sun_x = 0.0;
    double sun_y = 0.0;
    double sun_radius = 0.0;

    static SkyGeometry from(const SceneParams& params, const SkyMask& mask);
    bool in_sun_disk(int x, int y) const noexcept;
};

SceneTruth render_scene(const SceneParams& params, int width, int height, const SkyMask& mask, std::uint64_t seed);

struct SceneDistribution {
    double cloudy_fraction = 0.5;
    double min_elevation = 5.0 * std::numbers::pi / 180.0;
    double max_elevation = std::numbers::pi / 2;
    double min_cloud_fraction = 0.05;
    double max_cloud_fraction = 1.0;
    double occlusion_probability = 0.5;
    int max_cloud_count = 6;
    double clear_sky_peak = kDefaultClearSkyPeak;
};

SceneParams sample_scene(const SceneDistribution& dist, Rng& rng);

// Scene i draws from Rng(seed + i); infeasible coverage draws are resampled
// from the same stream. Scenes with ghi == 0 are dropped.
std::vector<SceneTruth> generate_scenes(std::size_t n, const SceneDistribution& dist, std::uint64_t seed, int width,
                                        int height);

// Writes img_NNNNNN.ppm files and manifest.csv (path,ghi,label) into out_dir.
// Returns the manifest path.
std::filesystem::path generate_dataset(std::size_t n, const SceneDistribution& dist, std::uint64_t seed,
                                       const std::filesystem::path& out_dir, int width = 512, int height = 512);

} // namespace skyirr
