#include "skyirr/synthsky.hpp"

#include "skyirr/error.hpp"
#include "skyirr/tables.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>

namespace skyirr {

double transfer_ghi(const SceneParams& p)
{
    return p.clear_sky_peak * std::sin(std::max(p.sun_elevation, 0.0)) * (1.0 - kCloudAttenuation * p.cloud_fraction) *
           (1.0 - kOcclusionAttenuation * p.sun_occlusion);
}

SkyLabel label_for(const SceneParams& p)
{
    return p.cloud_fraction > kCloudyThreshold ? SkyLabel::Cloudy : SkyLabel::Clear;
}

SkyGeometry SkyGeometry::from(const SceneParams& params, const SkyMask& mask)
{
    SkyGeometry g;
    if (mask.kind == MaskKind::Circular) {
        g.center_x = mask.center_x;
        g.center_y = mask.center_y;
        g.radius = mask.radius;
    } else {
        g.center_x = mask.width / 2.0;
        g.center_y = mask.height / 2.0;
        g.radius = std::min(mask.width, mask.height) / 2.0;
    }
    // Equidistant fisheye: image radius proportional to zenith angle.
    const double zenith = std::clamp(std::numbers::pi / 2 - params.sun_elevation, 0.0, std::numbers::pi / 2);
    const double r = zenith / (std::numbers::pi / 2) * 0.85 * g.radius;
    g.sun_x = g.center_x + r * std::sin(params.sun_azimuth_angle);
    g.sun_y = g.center_y - r * std::cos(params.sun_azimuth_angle);
    g.sun_radius = std::max(1.5, 0.11 * g.radius);
    return g;
}

bool SkyGeometry::in_sun_disk(int x, int y) const noexcept
{
    const double dx = x - sun_x;
    const double dy = y - sun_y;
    return dx * dx + dy * dy <= sun_radius * sun_radius;
}

namespace {

using Color = std::array<double, 3>;

Color mix(const Color& a, const Color& b, double t)
{
    return {a[0] + (b[0] - a[0]) * t, a[1] + (b[1] - a[1]) * t, a[2] + (b[2] - a[2]) * t};
}

Rgb quantize_color(const Color& c)
{
    auto ch = [](double v) { return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L)); };
    return {ch(c[0]), ch(c[1]), ch(c[2])};
}

struct Palette {
    double brightness; // sin(elevation)

    Color sky(const SkyGeometry& g, int x, int y) const
    {
        const double s = brightness;
        const Color zenith{30 + 50 * s, 70 + 90 * s, 130 + 110 * s};
        const Color horizon{150 + 80 * s, 170 + 70 * s, 190 + 55 * s};
        const double dx = x - g.center_x;
        const double dy = y - g.center_y;
        const double rho2 = (dx * dx + dy * dy) / (g.radius * g.radius);
        Color c = mix(zenith, horizon, 0.45 * std::min(rho2, 1.0));
        const double glare = (0.35 + 0.55 * s) * std::exp(-sun_distance(g, x, y) / (0.18 * g.radius));
        return mix(c, {255, 252, 235}, glare);
    }

    Color sun() const { return {255, 235 + 18 * brightness, 190 + 40 * brightness}; }

    // White near the sun fading to dark gray away from it.
    Color cloud(const SkyGeometry& g, int x, int y) const
    {
        const double level = (0.45 + 0.55 * brightness) * (100 + 150 * std::exp(-sun_distance(g, x, y) / (0.35 * g.radius)));
        return {level, level, std::min(255.0, level * 1.04 + 4)};
    }

    static double sun_distance(const SkyGeometry& g, int x, int y)
    {
        return std::hypot(x - g.sun_x, y - g.sun_y);
    }
};

class Ellipse {
public:
    Ellipse(double cx, double cy, double a, double b, double angle)
        : cx_(cx), cy_(cy), a_(a), b_(b), cos_(std::cos(angle)), sin_(std::sin(angle))
    {}

    double min_axis() const noexcept { return std::min(a_, b_); }

    // Normalized radius; <= 1 inside. Pixels outside the bounding square return > 1 early.
    double q(int x, int y) const noexcept
    {
        const double dx = x - cx_;
        const double dy = y - cy_;
        const double reach = std::max(a_, b_);
        if (std::abs(dx) > reach || std::abs(dy) > reach) {
            return 2.0;
        }
        const double u = (dx * cos_ + dy * sin_) / a_;
        const double v = (-dx * sin_ + dy * cos_) / b_;
        return std::sqrt(u * u + v * v);
    }

private:
    double cx_;
    double cy_;
    double a_;
    double b_;
    double cos_;
    double sin_;
};

class CoverageCanvas {
public:
    CoverageCanvas(int width, int height, const SkyMask& mask, const SkyGeometry& geo)
        : width_(width), alpha_(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), 0.0)
    {
        for (int y = 0; y < height; ++y) {
            for (int x = 0; x < width; ++x) {
                if (!mask.visible(x, y)) {
                    continue;
                }
                (geo.in_sun_disk(x, y) ? disk_ : open_).push_back({x, y});
            }
        }
    }

    std::size_t visible() const noexcept { return disk_.size() + open_.size(); }
    std::size_t covered() const noexcept { return covered_; }
    const std::vector<PixelPos>& disk() const noexcept { return disk_; }
    const std::vector<PixelPos>& open() const noexcept { return open_; }

    bool is_covered(const PixelPos& p) const { return alpha_[index(p)] > 0.0; }

    std::size_t newly_covered(const Ellipse& e, const std::vector<PixelPos>& pool) const
    {
        std::size_t n = 0;
        for (const PixelPos& p : pool) {
            n += !is_covered(p) && e.q(p.x, p.y) <= 1.0 ? 1 : 0;
        }
        return n;
    }

    void paint(const Ellipse& e, const std::vector<PixelPos>& pool)
    {
        const double edge = e.min_axis();
        for (const PixelPos& p : pool) {
            const double q = e.q(p.x, p.y);
            if (q > 1.0) {
                continue;
            }
            // Anti-aliased rim: alpha ramps from 0.5 at the boundary to 1 one pixel inside.
            const double alpha = std::clamp(0.5 + (1.0 - q) * edge, 0.5, 1.0);
            double& slot = alpha_[index(p)];
            if (slot == 0.0) {
                ++covered_;
            }
            slot = std::max(slot, alpha);
        }
    }

    double alpha(int x, int y) const { return alpha_[index({x, y})]; }

private:
    std::size_t index(const PixelPos& p) const
    {
        return static_cast<std::size_t>(p.y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(p.x);
    }

    int width_;
    std::vector<double> alpha_;
    std::vector<PixelPos> disk_;
    std::vector<PixelPos> open_;
    std::size_t covered_ = 0;
};

void place_occluder(CoverageCanvas& canvas, const SkyGeometry& geo, double occlusion, Rng& rng)
{
    if (occlusion <= 0.0 || canvas.disk().empty()) {
        return;
    }
    const double radius = 1.25 * geo.sun_radius;
    const double theta = uniform(rng, 0.0, 2 * std::numbers::pi);
    const auto disk_total = static_cast<double>(canvas.disk().size());
    auto ellipse_at = [&](double t) {
        return Ellipse{geo.sun_x + t * std::cos(theta), geo.sun_y + t * std::sin(theta), radius, radius, 0.0};
    };
    auto fraction = [&](double t) {
        return static_cast<double>(canvas.newly_covered(ellipse_at(t), canvas.disk())) / disk_total;
    };
    // Covered share of the disk shrinks as the occluder slides away.
    double lo = 0.0;
    double hi = radius + geo.sun_radius + 1.0;
    for (int it = 0; it < 40; ++it) {
        const double mid = 0.5 * (lo + hi);
        (fraction(mid) >= occlusion ? lo : hi) = mid;
    }
    const double t = std::abs(fraction(lo) - occlusion) <= std::abs(fraction(hi) - occlusion) ? lo : hi;
    const Ellipse e = ellipse_at(t);
    canvas.paint(e, canvas.disk());
    canvas.paint(e, canvas.open());
}

void place_clouds(CoverageCanvas& canvas, const SceneParams& params, const SkyGeometry& geo, Rng& rng)
{
    const auto visible = static_cast<double>(canvas.visible());
    const auto target = static_cast<std::size_t>(std::llround(params.cloud_fraction * visible));
    const auto slack = static_cast<std::size_t>(std::floor(0.005 * visible));
    const int planned = std::max(1, params.cloud_count);
    constexpr int kMaxBlobs = 400;

    std::vector<PixelPos> uncovered;
    for (int blob = 0; blob < kMaxBlobs && canvas.covered() + slack < target; ++blob) {
        uncovered.clear();
        for (const PixelPos& p : canvas.open()) {
            if (!canvas.is_covered(p)) {
                uncovered.push_back(p);
            }
        }
        if (uncovered.empty()) {
            break;
        }
        const std::size_t remaining = target - canvas.covered();
        const int blobs_left = std::max(1, planned - blob);
        const double share = static_cast<double>(remaining) / blobs_left;
        const PixelPos seed_px = uncovered[uniform_index(rng, uncovered.size())];
        const double aspect = uniform(rng, 0.5, 1.0);
        const double angle = uniform(rng, 0.0, std::numbers::pi);

        auto ellipse_for = [&](double a) {
            return Ellipse{static_cast<double>(seed_px.x), static_cast<double>(seed_px.y), a, a * aspect, angle};
        };
        // Largest size whose new coverage does not overshoot the share.
        double lo = 0.5;
        double hi = 4.0 * geo.radius;
        for (int it = 0; it < 30; ++it) {
            const double mid = 0.5 * (lo + hi);
            const auto gained = static_cast<double>(canvas.newly_covered(ellipse_for(mid), canvas.open()));
            (gained <= std::max(share, 1.0) ? lo : hi) = mid;
        }
        canvas.paint(ellipse_for(lo), canvas.open());
    }
}

} // namespace

SceneTruth render_scene(const SceneParams& params, int width, int height, const SkyMask& mask, std::uint64_t seed)
{
    if (mask.width != width || mask.height != height) {
        throw Error(Errc::DimensionMismatch, "mask and image dimensions differ");
    }
    const bool params_ok = params.cloud_fraction >= 0.0 && params.cloud_fraction <= 1.0 && params.sun_occlusion >= 0.0 &&
                           params.sun_occlusion <= 1.0 && params.clear_sky_peak > 0.0 && params.cloud_count >= 0;
    if (!params_ok) {
        throw Error(Errc::UnreachableCoverage, "scene parameters outside their valid ranges");
    }
    Rng rng(seed);
    const SkyGeometry geo = SkyGeometry::from(params, mask);
    const Palette palette{std::sin(std::max(params.sun_elevation, 0.0))};

    CoverageCanvas canvas(width, height, mask, geo);
    if (canvas.visible() == 0 && params.cloud_fraction > 0.0) {
        throw Error(Errc::UnreachableCoverage, "mask hides every pixel");
    }
    place_occluder(canvas, geo, params.sun_occlusion, rng);
    const double requested = params.cloud_fraction;
    if (canvas.visible() > 0) {
        const double after_occluder = static_cast<double>(canvas.covered()) / static_cast<double>(canvas.visible());
        if (after_occluder > requested + kCoverageTolerance) {
            throw Error(Errc::UnreachableCoverage, "sun occlusion alone exceeds the requested cloud fraction");
        }
        place_clouds(canvas, params, geo, rng);
        const double achieved = static_cast<double>(canvas.covered()) / static_cast<double>(canvas.visible());
        if (std::abs(achieved - requested) > kCoverageTolerance) {
            throw Error(Errc::UnreachableCoverage, "achieved cloud fraction " + std::to_string(achieved) +
                                                       " vs requested " + std::to_string(requested));
        }
    }

    ImageRGB image(width, height);
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            if (!mask.visible(x, y)) {
                continue;
            }
            Color c = geo.in_sun_disk(x, y) ? palette.sun() : palette.sky(geo, x, y);
            const double a = canvas.alpha(x, y);
            if (a > 0.0) {
                c = mix(c, palette.cloud(geo, x, y), a);
            }
            image.at(x, y) = quantize_color(c);
        }
    }
    return SceneTruth{std::move(image), transfer_ghi(params), label_for(params), params};
}

SceneParams sample_scene(const SceneDistribution& dist, Rng& rng)
{
    SceneParams p;
    p.clear_sky_peak = dist.clear_sky_peak;
    p.sun_azimuth_angle = uniform(rng, 0.0, 2 * std::numbers::pi);
    p.sun_elevation = uniform(rng, dist.min_elevation, dist.max_elevation);
    if (uniform01(rng) < dist.cloudy_fraction) {
        p.cloud_fraction = uniform(rng, dist.min_cloud_fraction, dist.max_cloud_fraction);
        p.cloud_count = 1 + static_cast<int>(uniform_index(rng, static_cast<std::uint64_t>(std::max(1, dist.max_cloud_count))));
        if (uniform01(rng) < dist.occlusion_probability) {
            p.sun_occlusion = uniform01(rng);
        }
    }
    return p;
}

namespace {

template <class Sink>
void for_each_scene(std::size_t n, const SceneDistribution& dist, std::uint64_t seed, int width, int height, Sink&& sink)
{
    const SkyMask mask = SkyMask::centered(width, height);
    constexpr int kMaxAttempts = 64;
    for (std::size_t i = 0; i < n; ++i) {
        Rng rng(derive_seed(seed, i));
        for (int attempt = 0;; ++attempt) {
            const SceneParams params = sample_scene(dist, rng);
            const std::uint64_t render_seed = rng();
            try {
                SceneTruth scene = render_scene(params, width, height, mask, render_seed);
                if (scene.ghi > 0.0) {
                    sink(i, std::move(scene));
                }
                break;
            } catch (const Error& e) {
                if (e.code() != Errc::UnreachableCoverage || attempt + 1 >= kMaxAttempts) {
                    throw;
                }
            }
        }
    }
}

} // namespace

std::vector<SceneTruth> generate_scenes(std::size_t n, const SceneDistribution& dist, std::uint64_t seed, int width,
                                        int height)
{
    std::vector<SceneTruth> out;
    out.reserve(n);
    for_each_scene(n, dist, seed, width, height, [&](std::size_t, SceneTruth scene) { out.push_back(std::move(scene)); });
    return out;
}

std::filesystem::path generate_dataset(std::size_t n, const SceneDistribution& dist, std::uint64_t seed,
                                       const std::filesystem::path& out_dir, int width, int height)
{
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec) {
        throw Error(Errc::IoFailure, "cannot create " + out_dir.string() + ": " + ec.message());
    }
    std::vector<ManifestRecord> records;
    for_each_scene(n, dist, seed, width, height, [&](std::size_t i, SceneTruth scene) {
        char name[32];
        std::snprintf(name, sizeof name, "img_%06zu.ppm", i);
        store_ppm(scene.image, out_dir / name);
        records.push_back({name, scene.ghi, scene.label});
    });
    const auto manifest = out_dir / "manifest.csv";
    write_manifest(records, manifest);
    return manifest;
}

} // namespace skyirr
