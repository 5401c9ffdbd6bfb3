#include "skyirr/imaging.hpp"

#include "skyirr/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <string>

namespace skyirr {

ImageRGB::ImageRGB(int width, int height, Rgb fill)
{
    if (width < 0 || height < 0) {
        throw Error(Errc::DimensionMismatch, "negative image dimensions");
    }
    width_ = width;
    height_ = height;
    pixels_.assign(static_cast<std::size_t>(width) * static_cast<std::size_t>(height), fill);
}

ImageRGB::ImageRGB(int width, int height, std::vector<Rgb> pixels)
{
    if (width < 0 || height < 0 ||
        pixels.size() != static_cast<std::size_t>(width) * static_cast<std::size_t>(height)) {
        throw Error(Errc::DimensionMismatch, "pixel count does not match width x height");
    }
    width_ = width;
    height_ = height;
    pixels_ = std::move(pixels);
}

SkyMask SkyMask::none(int width, int height)
{
    return SkyMask{width, height, MaskKind::None, width / 2.0, height / 2.0, 0.0};
}

SkyMask SkyMask::circular(int width, int height, double center_x, double center_y, double radius)
{
    return SkyMask{width, height, MaskKind::Circular, center_x, center_y, radius};
}

SkyMask SkyMask::centered(int width, int height)
{
    return circular(width, height, width / 2.0, height / 2.0, std::min(width, height) / 2.0);
}

bool SkyMask::visible(int x, int y) const noexcept
{
    if (kind == MaskKind::None) {
        return true;
    }
    const double dx = x - center_x;
    const double dy = y - center_y;
    return dx * dx + dy * dy <= radius * radius;
}

std::size_t SkyMask::visible_count() const noexcept
{
    std::size_t n = 0;
    for (int y = 0; y < height; ++y) {
        for (int x = 0; x < width; ++x) {
            n += visible(x, y) ? 1 : 0;
        }
    }
    return n;
}

namespace {

class HeaderReader {
public:
    explicit HeaderReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    std::string token()
    {
        skip_space_and_comments();
        std::string out;
        while (pos_ < bytes_.size() && !std::isspace(bytes_[pos_])) {
            out.push_back(static_cast<char>(bytes_[pos_++]));
        }
        return out;
    }

    // Exactly one whitespace byte separates maxval from the raster.
    void consume_single_space()
    {
        if (pos_ >= bytes_.size() || !std::isspace(bytes_[pos_])) {
            throw Error(Errc::MalformedHeader, "missing whitespace after maxval");
        }
        ++pos_;
    }

    std::size_t position() const noexcept { return pos_; }

private:
    void skip_space_and_comments()
    {
        while (pos_ < bytes_.size()) {
            if (std::isspace(bytes_[pos_])) {
                ++pos_;
            } else if (bytes_[pos_] == '#') {
                while (pos_ < bytes_.size() && bytes_[pos_] != '\n') {
                    ++pos_;
                }
            } else {
                break;
            }
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

int parse_dimension(const std::string& token, const char* what)
{
    int value = 0;
    const auto [end, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
    if (token.empty() || ec != std::errc{} || end != token.data() + token.size() || value < 0) {
        throw Error(Errc::MalformedHeader, std::string("non-numeric ") + what + " '" + token + "'");
    }
    return value;
}

} // namespace

ImageRGB decode_ppm(const std::vector<std::uint8_t>& bytes)
{
    HeaderReader reader(bytes);
    if (reader.token() != "P6") {
        throw Error(Errc::MalformedHeader, "expected magic P6");
    }
    const int width = parse_dimension(reader.token(), "width");
    const int height = parse_dimension(reader.token(), "height");
    const int maxval = parse_dimension(reader.token(), "maxval");
    if (maxval != 255) {
        throw Error(Errc::UnsupportedMaxval, "maxval " + std::to_string(maxval));
    }
    reader.consume_single_space();

    const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
    const std::size_t offset = reader.position();
    if (bytes.size() - offset < 3 * count) {
        throw Error(Errc::TruncatedPixelData,
                    "expected " + std::to_string(3 * count) + " bytes, found " + std::to_string(bytes.size() - offset));
    }
    std::vector<Rgb> pixels(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::size_t p = offset + 3 * i;
        pixels[i] = Rgb{bytes[p], bytes[p + 1], bytes[p + 2]};
    }
    return ImageRGB(width, height, std::move(pixels));
}

std::vector<std::uint8_t> encode_ppm(const ImageRGB& image)
{
    const std::string header =
        "P6\n" + std::to_string(image.width()) + " " + std::to_string(image.height()) + "\n255\n";
    std::vector<std::uint8_t> out(header.begin(), header.end());
    out.reserve(out.size() + 3 * image.size());
    for (const Rgb& px : image.pixels()) {
        out.push_back(px.r);
        out.push_back(px.g);
        out.push_back(px.b);
    }
    return out;
}

ImageRGB load_ppm(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot open " + path.string());
    }
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_ppm(bytes);
}

void store_ppm(const ImageRGB& image, const std::filesystem::path& path)
{
    const auto bytes = encode_ppm(image);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::IoFailure, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(Errc::IoFailure, "short write to " + path.string());
    }
}

MaskedPixelSet apply_mask(const ImageRGB& image, const SkyMask& mask)
{
    if (mask.width != image.width() || mask.height != image.height()) {
        throw Error(Errc::DimensionMismatch, "mask and image dimensions differ");
    }
    MaskedPixelSet out;
    for (int y = 0; y < image.height(); ++y) {
        for (int x = 0; x < image.width(); ++x) {
            if (mask.visible(x, y)) {
                out.positions.push_back({x, y});
                out.colors.push_back(image.at(x, y));
            }
        }
    }
    return out;
}

} // namespace skyirr
