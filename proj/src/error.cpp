#include "skyirr/error.hpp"

namespace skyirr {

std::string_view to_string(Errc code) noexcept
{
    switch (code) {
    case Errc::MalformedHeader: return "MalformedHeader";
    case Errc::UnsupportedMaxval: return "UnsupportedMaxval";
    case Errc::TruncatedPixelData: return "TruncatedPixelData";
    case Errc::IoFailure: return "IoFailure";
    case Errc::DimensionMismatch: return "DimensionMismatch";
    case Errc::InsufficientData: return "InsufficientData";
    case Errc::EmptySet: return "EmptySet";
    case Errc::EmptyMatrix: return "EmptyMatrix";
    case Errc::LengthMismatch: return "LengthMismatch";
    case Errc::DegenerateBatch: return "DegenerateBatch";
    case Errc::StaleCache: return "StaleCache";
    case Errc::InvalidDistribution: return "InvalidDistribution";
    case Errc::NonFiniteGradient: return "NonFiniteGradient";
    case Errc::LineSearchFailure: return "LineSearchFailure";
    case Errc::NonFiniteObjective: return "NonFiniteObjective";
    case Errc::SingleClassData: return "SingleClassData";
    case Errc::UntrainedModel: return "UntrainedModel";
    case Errc::ZeroVariance: return "ZeroVariance";
    case Errc::TooFewRows: return "TooFewRows";
    case Errc::UnreachableCoverage: return "UnreachableCoverage";
    case Errc::MissingHeader: return "MissingHeader";
    case Errc::MalformedRow: return "MalformedRow";
    case Errc::BadMagic: return "BadMagic";
    case Errc::UnsupportedVersion: return "UnsupportedVersion";
    case Errc::CorruptSection: return "CorruptSection";
    case Errc::UsageError: return "UsageError";
    }
    return "Unknown";
}

namespace {

std::string format_message(Errc code, const std::string& what, std::optional<std::size_t> line)
{
    std::string msg{to_string(code)};
    if (line) {
        msg += " at line " + std::to_string(*line);
    }
    if (!what.empty()) {
        msg += ": " + what;
    }
    return msg;
}

} // namespace

Error::Error(Errc code, const std::string& what, std::optional<std::size_t> line)
    : std::runtime_error(format_message(code, what, line)), code_(code), line_(line)
{}

} // namespace skyirr
