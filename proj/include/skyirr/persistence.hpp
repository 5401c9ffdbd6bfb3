#pragma once

#include "skyirr/clustering.hpp"
#include "skyirr/features.hpp"
#include "skyirr/neuralnet.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace skyirr {

// Binary model container, all integers little-endian:
//   "SKYM" | u16 version | u8 kind | u32 section_count
//   per section: u16 name_len | name (ASCII) | u64 element_count | element_count x f64 (LE)
// Integer-valued fields (dimensions, counts, enum codes) are stored as exact doubles.
inline constexpr char kModelMagic[4] = {'S', 'K', 'Y', 'M'};
inline constexpr std::uint16_t kModelFormatVersion = 1;

enum class ModelKind : std::uint8_t { Centroids = 1, Scaler = 2, Classifier = 3, Regressor = 4 };

struct ModelSection {
    std::string name;
    std::vector<double> values;

    friend bool operator==(const ModelSection&, const ModelSection&) = default;
};

struct ModelFile {
    ModelKind kind = ModelKind::Centroids;
    std::vector<ModelSection> sections;

    const ModelSection& section(const std::string& name) const;
    friend bool operator==(const ModelFile&, const ModelFile&) = default;
};

std::vector<std::uint8_t> encode_model_file(const ModelFile& file);
ModelFile decode_model_file(const std::vector<std::uint8_t>& bytes);
void write_model_file(const ModelFile& file, const std::filesystem::path& path);
ModelFile read_model_file(const std::filesystem::path& path);

ModelFile to_model_file(const Centroids& centroids);
ModelFile to_model_file(const StandardScaler& scaler);
// Softmax heads are stored as classifiers, identity heads as regressors.
ModelFile to_model_file(const NetworkModel& model);

Centroids centroids_from(const ModelFile& file);
StandardScaler scaler_from(const ModelFile& file);
NetworkModel network_from(const ModelFile& file);

template <class Model>
void store_model(const Model& model, const std::filesystem::path& path)
{
    write_model_file(to_model_file(model), path);
}

Centroids load_centroids(const std::filesystem::path& path);
StandardScaler load_scaler(const std::filesystem::path& path);
NetworkModel load_network(const std::filesystem::path& path);

} // namespace skyirr
