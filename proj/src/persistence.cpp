#include "skyirr/persistence.hpp"

#include "skyirr/error.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>

namespace skyirr {

namespace {

template <class T>
void put_le(std::vector<std::uint8_t>& out, T value)
{
    for (std::size_t i = 0; i < sizeof(T); ++i) {
        out.push_back(static_cast<std::uint8_t>(value >> (8 * i)));
    }
}

class ByteReader {
public:
    explicit ByteReader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

    template <class T>
    T get_le(const char* what)
    {
        need(sizeof(T), what);
        T value = 0;
        for (std::size_t i = 0; i < sizeof(T); ++i) {
            value |= static_cast<T>(static_cast<T>(bytes_[pos_ + i]) << (8 * i));
        }
        pos_ += sizeof(T);
        return value;
    }

    std::string get_string(std::size_t n)
    {
        need(n, "section name");
        std::string s(reinterpret_cast<const char*>(bytes_.data() + pos_), n);
        pos_ += n;
        return s;
    }

    std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

private:
    void need(std::size_t n, const char* what)
    {
        if (remaining() < n) {
            throw Error(Errc::CorruptSection, std::string("truncated ") + what);
        }
    }

    const std::vector<std::uint8_t>& bytes_;
    std::size_t pos_ = 0;
};

} // namespace

const ModelSection& ModelFile::section(const std::string& name) const
{
    for (const ModelSection& s : sections) {
        if (s.name == name) {
            return s;
        }
    }
    throw Error(Errc::CorruptSection, "missing section '" + name + "'");
}

std::vector<std::uint8_t> encode_model_file(const ModelFile& file)
{
    std::vector<std::uint8_t> out(std::begin(kModelMagic), std::end(kModelMagic));
    put_le<std::uint16_t>(out, kModelFormatVersion);
    put_le<std::uint8_t>(out, static_cast<std::uint8_t>(file.kind));
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(file.sections.size()));
    for (const ModelSection& s : file.sections) {
        put_le<std::uint16_t>(out, static_cast<std::uint16_t>(s.name.size()));
        out.insert(out.end(), s.name.begin(), s.name.end());
        put_le<std::uint64_t>(out, s.values.size());
        for (const double v : s.values) {
            put_le<std::uint64_t>(out, std::bit_cast<std::uint64_t>(v));
        }
    }
    return out;
}

ModelFile decode_model_file(const std::vector<std::uint8_t>& bytes)
{
    if (bytes.size() < 4 || std::memcmp(bytes.data(), kModelMagic, 4) != 0) {
        throw Error(Errc::BadMagic, "not a SKYM model file");
    }
    ByteReader reader(bytes);
    reader.get_string(4);
    const auto version = reader.get_le<std::uint16_t>("version");
    if (version != kModelFormatVersion) {
        throw Error(Errc::UnsupportedVersion, "format version " + std::to_string(version));
    }
    const auto kind = reader.get_le<std::uint8_t>("kind");
    if (kind < 1 || kind > 4) {
        throw Error(Errc::CorruptSection, "unknown model kind " + std::to_string(kind));
    }
    ModelFile file;
    file.kind = static_cast<ModelKind>(kind);
    const auto count = reader.get_le<std::uint32_t>("section count");
    for (std::uint32_t i = 0; i < count; ++i) {
        ModelSection s;
        const auto name_len = reader.get_le<std::uint16_t>("name length");
        s.name = reader.get_string(name_len);
        const auto n = reader.get_le<std::uint64_t>("element count");
        if (n > reader.remaining() / 8) {
            throw Error(Errc::CorruptSection, "section '" + s.name + "' payload truncated");
        }
        s.values.resize(n);
        for (auto& v : s.values) {
            v = std::bit_cast<double>(reader.get_le<std::uint64_t>("payload"));
        }
        file.sections.push_back(std::move(s));
    }
    if (reader.remaining() != 0) {
        throw Error(Errc::CorruptSection, "trailing bytes after last section");
    }
    return file;
}

void write_model_file(const ModelFile& file, const std::filesystem::path& path)
{
    const auto bytes = encode_model_file(file);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) {
        throw Error(Errc::IoFailure, "cannot write " + path.string());
    }
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) {
        throw Error(Errc::IoFailure, "short write to " + path.string());
    }
}

ModelFile read_model_file(const std::filesystem::path& path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in) {
        throw Error(Errc::IoFailure, "cannot open " + path.string());
    }
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return decode_model_file(bytes);
}

namespace {

void require_kind(const ModelFile& file, ModelKind kind, const char* what)
{
    if (file.kind != kind) {
        throw Error(Errc::CorruptSection, std::string("model file does not hold ") + what);
    }
}

std::size_t as_count(double v, const std::string& what)
{
    if (!(v >= 0.0) || v != std::floor(v) || v > 9007199254740992.0) {
        throw Error(Errc::CorruptSection, what + " is not a valid count");
    }
    return static_cast<std::size_t>(v);
}

const std::vector<double>& sized(const ModelFile& file, const std::string& name, std::size_t expected)
{
    const ModelSection& s = file.section(name);
    if (s.values.size() != expected) {
        throw Error(Errc::CorruptSection, "section '" + name + "' has " + std::to_string(s.values.size()) +
                                              " values, expected " + std::to_string(expected));
    }
    return s.values;
}

void put_vector(ModelFile& file, const std::string& name, const double* data, Eigen::Index n)
{
    file.sections.push_back({name, std::vector<double>(data, data + n)});
}

} // namespace

ModelFile to_model_file(const Centroids& centroids)
{
    ModelFile file;
    file.kind = ModelKind::Centroids;
    ModelSection points{"points", {}};
    ModelSection counts{"counts", {}};
    for (std::size_t c = 0; c < centroids.k(); ++c) {
        points.values.insert(points.values.end(), centroids.points[c].begin(), centroids.points[c].end());
        counts.values.push_back(static_cast<double>(centroids.counts[c]));
    }
    file.sections = {{"k", {static_cast<double>(centroids.k())}}, std::move(points), std::move(counts)};
    return file;
}

Centroids centroids_from(const ModelFile& file)
{
    require_kind(file, ModelKind::Centroids, "centroids");
    const std::size_t k = as_count(sized(file, "k", 1)[0], "k");
    const auto& points = sized(file, "points", 3 * k);
    const auto& counts = sized(file, "counts", k);
    Centroids out;
    for (std::size_t c = 0; c < k; ++c) {
        out.points.push_back({points[3 * c], points[3 * c + 1], points[3 * c + 2]});
        out.counts.push_back(as_count(counts[c], "count"));
    }
    return out;
}

ModelFile to_model_file(const StandardScaler& scaler)
{
    ModelFile file;
    file.kind = ModelKind::Scaler;
    file.sections = {{"means", scaler.means}, {"stds", scaler.stds}};
    return file;
}

StandardScaler scaler_from(const ModelFile& file)
{
    require_kind(file, ModelKind::Scaler, "a scaler");
    StandardScaler out;
    out.means = file.section("means").values;
    out.stds = sized(file, "stds", out.means.size());
    return out;
}

ModelFile to_model_file(const NetworkModel& model)
{
    ModelFile file;
    file.kind = model.head() == Head::Softmax ? ModelKind::Classifier : ModelKind::Regressor;
    file.sections.push_back({"network",
                             {static_cast<double>(model.input_dim()), static_cast<double>(model.layers().size()),
                              static_cast<double>(model.head()), static_cast<double>(model.mode()),
                              model.output_scaling().offset, model.output_scaling().scale}});
    for (std::size_t j = 0; j < model.layers().size(); ++j) {
        const DenseLayer& l = model.layers()[j];
        const std::string p = "layer" + std::to_string(j) + ".";
        file.sections.push_back({p + "spec",
                                 {static_cast<double>(l.spec.units), static_cast<double>(l.spec.activation),
                                  l.spec.dropout_rate, l.spec.batch_norm ? 1.0 : 0.0}});
        put_vector(file, p + "weights", l.weights.data(), l.weights.size());
        put_vector(file, p + "biases", l.biases.data(), l.biases.size());
        if (l.spec.batch_norm) {
            put_vector(file, p + "gamma", l.gamma.data(), l.gamma.size());
            put_vector(file, p + "beta", l.beta.data(), l.beta.size());
            put_vector(file, p + "running_mean", l.running_mean.data(), l.running_mean.size());
            put_vector(file, p + "running_var", l.running_var.data(), l.running_var.size());
        }
    }
    return file;
}

NetworkModel network_from(const ModelFile& file)
{
    if (file.kind != ModelKind::Classifier && file.kind != ModelKind::Regressor) {
        throw Error(Errc::CorruptSection, "model file does not hold a network");
    }
    const auto& net = sized(file, "network", 6);
    const std::size_t input_dim = as_count(net[0], "input_dim");
    const std::size_t layer_count = as_count(net[1], "layer count");
    const std::size_t head = as_count(net[2], "head");
    const std::size_t mode = as_count(net[3], "mode");
    if (head > 1 || mode > 1) {
        throw Error(Errc::CorruptSection, "unknown head or mode code");
    }
    std::vector<DenseLayer> layers;
    std::size_t fan_in = input_dim;
    for (std::size_t j = 0; j < layer_count; ++j) {
        const std::string p = "layer" + std::to_string(j) + ".";
        const auto& spec = sized(file, p + "spec", 4);
        DenseLayer l;
        l.spec.units = as_count(spec[0], "units");
        const std::size_t act = as_count(spec[1], "activation");
        if (act > 3) {
            throw Error(Errc::CorruptSection, "unknown activation code");
        }
        l.spec.activation = static_cast<Activation>(act);
        l.spec.dropout_rate = spec[2];
        l.spec.batch_norm = spec[3] != 0.0;
        const auto units = static_cast<Eigen::Index>(l.spec.units);
        const auto& w = sized(file, p + "weights", fan_in * l.spec.units);
        l.weights = Eigen::Map<const Matrix>(w.data(), static_cast<Eigen::Index>(fan_in), units);
        l.biases = Eigen::Map<const RowVector>(sized(file, p + "biases", l.spec.units).data(), units);
        if (l.spec.batch_norm) {
            l.gamma = Eigen::Map<const RowVector>(sized(file, p + "gamma", l.spec.units).data(), units);
            l.beta = Eigen::Map<const RowVector>(sized(file, p + "beta", l.spec.units).data(), units);
            l.running_mean = Eigen::Map<const RowVector>(sized(file, p + "running_mean", l.spec.units).data(), units);
            l.running_var = Eigen::Map<const RowVector>(sized(file, p + "running_var", l.spec.units).data(), units);
        }
        layers.push_back(std::move(l));
        fan_in = layers.back().spec.units;
    }
    try {
        NetworkModel model(input_dim, std::move(layers), static_cast<Head>(head), static_cast<Mode>(mode));
        model.set_output_scaling({net[4], net[5]});
        return model;
    } catch (const Error& e) {
        throw Error(Errc::CorruptSection, e.what());
    }
}

Centroids load_centroids(const std::filesystem::path& path)
{
    return centroids_from(read_model_file(path));
}

StandardScaler load_scaler(const std::filesystem::path& path)
{
    return scaler_from(read_model_file(path));
}

NetworkModel load_network(const std::filesystem::path& path)
{
    return network_from(read_model_file(path));
}

} // namespace skyirr
