#pragma once

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace skyirr {

enum class Errc {
    MalformedHeader,
    UnsupportedMaxval,
    TruncatedPixelData,
    IoFailure,
    DimensionMismatch,
    InsufficientData,
    EmptySet,
    EmptyMatrix,
    LengthMismatch,
    DegenerateBatch,
    StaleCache,
    InvalidDistribution,
    NonFiniteGradient,
    LineSearchFailure,
    NonFiniteObjective,
    SingleClassData,
    UntrainedModel,
    ZeroVariance,
    TooFewRows,
    UnreachableCoverage,
    MissingHeader,
    MalformedRow,
    BadMagic,
    UnsupportedVersion,
    CorruptSection,
    UsageError,
};

std::string_view to_string(Errc code) noexcept;

// Every failure in the library is reported as an Error carrying its code.
// MalformedRow errors additionally carry the 1-based line number.
class Error : public std::runtime_error {
public:
    Error(Errc code, const std::string& what, std::optional<std::size_t> line = std::nullopt);

    Errc code() const noexcept { return code_; }
    std::optional<std::size_t> line() const noexcept { return line_; }

private:
    Errc code_;
    std::optional<std::size_t> line_;
};

} // namespace skyirr
