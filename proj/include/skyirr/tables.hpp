#pragma once

#include "skyirr/linalg.hpp"
#include "skyirr/models.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace skyirr {

// Shortest decimal text that parses back to the identical double.
std::string format_double(double value);

std::string_view label_name(SkyLabel label) noexcept;
std::optional<SkyLabel> parse_label(std::string_view text) noexcept;

// --- manifest.csv: "path,ghi,label" ----------------------------------------

struct ManifestRecord {
    std::string image_path; // relative to the manifest's directory
    std::optional<double> ghi;
    std::optional<SkyLabel> label;

    friend bool operator==(const ManifestRecord&, const ManifestRecord&) = default;
};

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path);
std::vector<ManifestRecord> parse_manifest(const std::string& text);
void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path);

// --- features CSV: "pcnp0,...,pcnp{k-1}[,ghi][,label]" ---------------------

struct FeatureTable {
    Matrix features;
    bool has_ghi = false;
    bool has_label = false;
    std::vector<std::optional<double>> ghi;
    std::vector<std::optional<SkyLabel>> labels;

    std::size_t rows() const noexcept { return static_cast<std::size_t>(features.rows()); }
    std::size_t k() const noexcept { return static_cast<std::size_t>(features.cols()); }
};

std::string format_features_csv(const FeatureTable& table);
FeatureTable parse_features_csv(const std::string& text);
void write_features_csv(const FeatureTable& table, const std::filesystem::path& path);
FeatureTable read_features_csv(const std::filesystem::path& path);

// --- evaluation report: "fold,accuracy,r2,mae" plus mean and std rows -------

std::string format_report_csv(const EvalReport& report);
void write_report_csv(const EvalReport& report, const std::filesystem::path& path);

std::string read_text(const std::filesystem::path& path);
void write_text(const std::string& text, const std::filesystem::path& path);

} // namespace skyirr
