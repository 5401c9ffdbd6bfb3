#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

namespace skyirr {

struct Rgb {
    std::uint8_t r = 0;
    std::uint8_t g = 0;
    std::uint8_t b = 0;

    friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Row-major 8-bit RGB raster.
class ImageRGB {
public:
    ImageRGB() = default;
    ImageRGB(int width, int height, Rgb fill = {});
    ImageRGB(int width, int height, std::vector<Rgb> pixels);

    int width() const noexcept { return width_; }
    int height() const noexcept { return height_; }
    std::size_t size() const noexcept { return pixels_.size(); }

    const Rgb& at(int x, int y) const { return pixels_[index(x, y)]; }
    Rgb& at(int x, int y) { return pixels_[index(x, y)]; }
    const std::vector<Rgb>& pixels() const noexcept { return pixels_; }

    friend bool operator==(const ImageRGB&, const ImageRGB&) = default;

private:
    std::size_t index(int x, int y) const
    {
        return static_cast<std::size_t>(y) * static_cast<std::size_t>(width_) + static_cast<std::size_t>(x);
    }

    int width_ = 0;
    int height_ = 0;
    std::vector<Rgb> pixels_;
};

enum class MaskKind : std::uint8_t { None, Circular };

// Visibility rule: for Circular, (x, y) is visible iff
// (x - center_x)^2 + (y - center_y)^2 <= radius^2.
struct SkyMask {
    int width = 0;
    int height = 0;
    MaskKind kind = MaskKind::None;
    double center_x = 0.0;
    double center_y = 0.0;
    double radius = 0.0;

    static SkyMask none(int width, int height);
    static SkyMask circular(int width, int height, double center_x, double center_y, double radius);
    // Centered disk of radius min(width, height) / 2.
    static SkyMask centered(int width, int height);

    bool visible(int x, int y) const noexcept;
    std::size_t visible_count() const noexcept;
};

struct PixelPos {
    int x = 0;
    int y = 0;

    friend bool operator==(const PixelPos&, const PixelPos&) = default;
};

struct MaskedPixelSet {
    std::vector<PixelPos> positions;
    std::vector<Rgb> colors;

    std::size_t size() const noexcept { return colors.size(); }
};

ImageRGB load_ppm(const std::filesystem::path& path);
void store_ppm(const ImageRGB& image, const std::filesystem::path& path);

// In-memory codec behind load_ppm/store_ppm.
ImageRGB decode_ppm(const std::vector<std::uint8_t>& bytes);
std::vector<std::uint8_t> encode_ppm(const ImageRGB& image);

MaskedPixelSet apply_mask(const ImageRGB& image, const SkyMask& mask);

} // namespace skyirr
