#include "skyirr/tables.hpp"

#include "skyirr/error.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

namespace skyirr {

std::string format_double(double value)
{
    char buf[64];
    const auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, end);
}

std::string_view label_name(SkyLabel label) noexcept
{
    return label == SkyLabel::Cloudy ? "cloudy" : "clear";
}

std::optional<SkyLabel> parse_label(std::string_view text) noexcept
{
    if (text == "clear" || text == "0") {
        return SkyLabel::Clear;
    }
    if (text == "cloudy" || text == "1") {
        return SkyLabel::Cloudy;
    }
    return std::nullopt;
}

std::string read_text(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot open " + path.string());
    }
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const std::string& text, const std::filesystem::path& path)
{
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::IoFailure, "cannot write " + path.string());
    }
    out << text;
    if (!out) {
        throw Error(Errc::IoFailure, "short write to " + path.string());
    }
}

namespace {

std::vector<std::string> split_lines(const std::string& text)
{
    std::vector<std::string> lines;
    std::string line;
    std::istringstream in(text);
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') {
            line.pop_back();
        }
        lines.push_back(line);
    }
    return lines;
}

std::vector<std::string_view> split_fields(std::string_view line)
{
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        out.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
        if (comma == std::string_view::npos) {
            break;
        }
        start = comma + 1;
    }
    return out;
}

std::optional<double> parse_real(std::string_view field)
{
    double value = 0.0;
    const auto [end, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (field.empty() || ec != std::errc{} || end != field.data() + field.size()) {
        return std::nullopt;
    }
    return value;
}

std::string optional_cell(const std::optional<double>& v)
{
    return v ? format_double(*v) : std::string{};
}

} // namespace

std::vector<ManifestRecord> parse_manifest(const std::string& text)
{
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty() || lines.front() != "path,ghi,label") {
        throw Error(Errc::MissingHeader, "manifest must start with 'path,ghi,label'");
    }
    std::vector<ManifestRecord> records;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = split_fields(lines[i]);
        if (fields.size() != 3 || fields[0].empty()) {
            throw Error(Errc::MalformedRow, "expected 3 fields with a non-empty path", line_no);
        }
        ManifestRecord r;
        r.image_path = std::string(fields[0]);
        if (!fields[1].empty()) {
            r.ghi = parse_real(fields[1]);
            if (!r.ghi || !(*r.ghi >= 0.0)) {
                throw Error(Errc::MalformedRow, "ghi '" + std::string(fields[1]) + "' is not a non-negative number",
                            line_no);
            }
        }
        if (!fields[2].empty()) {
            r.label = parse_label(fields[2]);
            if (!r.label) {
                throw Error(Errc::MalformedRow, "label '" + std::string(fields[2]) + "' is not clear/cloudy", line_no);
            }
        }
        records.push_back(std::move(r));
    }
    return records;
}

std::vector<ManifestRecord> read_manifest(const std::filesystem::path& path)
{
    return parse_manifest(read_text(path));
}

void write_manifest(const std::vector<ManifestRecord>& records, const std::filesystem::path& path)
{
    std::string text = "path,ghi,label\n";
    for (const ManifestRecord& r : records) {
        text += r.image_path + ",";
        text += optional_cell(r.ghi) + ",";
        if (r.label) {
            text += label_name(*r.label);
        }
        text += "\n";
    }
    write_text(text, path);
}

std::string format_features_csv(const FeatureTable& table)
{
    std::string text;
    for (std::size_t j = 0; j < table.k(); ++j) {
        text += (j ? ",pcnp" : "pcnp") + std::to_string(j);
    }
    if (table.has_ghi) {
        text += ",ghi";
    }
    if (table.has_label) {
        text += ",label";
    }
    text += "\n";
    for (std::size_t i = 0; i < table.rows(); ++i) {
        const auto r = static_cast<Eigen::Index>(i);
        for (std::size_t j = 0; j < table.k(); ++j) {
            if (j) {
                text += ",";
            }
            text += format_double(table.features(r, static_cast<Eigen::Index>(j)));
        }
        if (table.has_ghi) {
            text += "," + optional_cell(table.ghi[i]);
        }
        if (table.has_label) {
            text += ",";
            if (table.labels[i]) {
                text += label_name(*table.labels[i]);
            }
        }
        text += "\n";
    }
    return text;
}

FeatureTable parse_features_csv(const std::string& text)
{
    const std::vector<std::string> lines = split_lines(text);
    if (lines.empty()) {
        throw Error(Errc::MissingHeader, "features file is empty");
    }
    const auto header = split_fields(lines.front());
    FeatureTable table;
    std::size_t k = 0;
    while (k < header.size() && header[k] == "pcnp" + std::to_string(k)) {
        ++k;
    }
    std::size_t col = k;
    if (col < header.size() && header[col] == "ghi") {
        table.has_ghi = true;
        ++col;
    }
    if (col < header.size() && header[col] == "label") {
        table.has_label = true;
        ++col;
    }
    if (k == 0 || col != header.size()) {
        throw Error(Errc::MissingHeader, "expected header pcnp0..pcnp{k-1}[,ghi][,label]");
    }

    std::vector<std::vector<double>> rows;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        const std::size_t line_no = i + 1;
        if (lines[i].empty()) {
            continue;
        }
        const auto fields = split_fields(lines[i]);
        if (fields.size() != header.size()) {
            throw Error(Errc::MalformedRow, "expected " + std::to_string(header.size()) + " fields", line_no);
        }
        std::vector<double> row(k);
        for (std::size_t j = 0; j < k; ++j) {
            const auto v = parse_real(fields[j]);
            if (!v) {
                throw Error(Errc::MalformedRow, "non-numeric feature '" + std::string(fields[j]) + "'", line_no);
            }
            row[j] = *v;
        }
        std::size_t c = k;
        if (table.has_ghi) {
            std::optional<double> g;
            if (!fields[c].empty()) {
                g = parse_real(fields[c]);
                if (!g) {
                    throw Error(Errc::MalformedRow, "non-numeric ghi", line_no);
                }
            }
            table.ghi.push_back(g);
            ++c;
        }
        if (table.has_label) {
            std::optional<SkyLabel> l;
            if (!fields[c].empty()) {
                l = parse_label(fields[c]);
                if (!l) {
                    throw Error(Errc::MalformedRow, "bad label", line_no);
                }
            }
            table.labels.push_back(l);
        }
        rows.push_back(std::move(row));
    }
    table.features.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(k));
    for (std::size_t i = 0; i < rows.size(); ++i) {
        for (std::size_t j = 0; j < k; ++j) {
            table.features(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
        }
    }
    return table;
}

void write_features_csv(const FeatureTable& table, const std::filesystem::path& path)
{
    write_text(format_features_csv(table), path);
}

FeatureTable read_features_csv(const std::filesystem::path& path)
{
    return parse_features_csv(read_text(path));
}

std::string format_report_csv(const EvalReport& report)
{
    std::string text = "fold,accuracy,r2,mae\n";
    auto row = [&](const std::string& name, const FoldMetrics& m) {
        text += name + "," + optional_cell(m.accuracy) + "," + optional_cell(m.r2) + "," + optional_cell(m.mae) + "\n";
    };
    for (std::size_t f = 0; f < report.folds.size(); ++f) {
        row(std::to_string(f), report.folds[f]);
    }
    row("mean", report.mean);
    row("std", report.std);
    return text;
}

void write_report_csv(const EvalReport& report, const std::filesystem::path& path)
{
    write_text(format_report_csv(report), path);
}

} // namespace skyirr
