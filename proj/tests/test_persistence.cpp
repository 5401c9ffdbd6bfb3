#include "skyirr/error.hpp"
#include "skyirr/persistence.hpp"
#include "skyirr/tables.hpp"

#include "test_support.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <limits>

using namespace skyirr;

namespace {

template <class Fn>
Error error_of(Fn&& fn)
{
    try {
        fn();
    } catch (const Error& e) {
        return e;
    }
    ADD_FAILURE() << "no error raised";
    return Error(Errc::UsageError, "none");
}

NetworkModel trained_looking_network(std::uint64_t seed, Head head)
{
    const std::array<LayerSpec, 3> specs{LayerSpec{7, Activation::Relu, 0.5, true}, LayerSpec{5, Activation::Tanh, 0.3, true},
                                         LayerSpec{head == Head::Softmax ? 2u : 1u, Activation::Linear}};
    NetworkModel m = init_params(specs, 6, seed, head);
    Rng rng(seed);
    for (DenseLayer& l : m.mutable_layers()) {
        if (l.spec.batch_norm) {
            for (Eigen::Index j = 0; j < l.running_mean.size(); ++j) {
                l.running_mean(j) = uniform(rng, -1, 1);
                l.running_var(j) = uniform(rng, 0.1, 3);
                l.gamma(j) = uniform(rng, 0.5, 1.5);
                l.beta(j) = uniform(rng, -0.5, 0.5);
            }
        }
        l.biases = test::random_matrix(1, l.biases.size(), rng);
    }
    m.set_output_scaling({512.25, 201.0 / 3.0});
    m.set_mode(Mode::Infer);
    return m;
}

std::vector<std::uint64_t> bits(std::span<const double> v)
{
    std::vector<std::uint64_t> out;
    for (const double d : v) {
        out.push_back(std::bit_cast<std::uint64_t>(d));
    }
    return out;
}

} // namespace

TEST(ModelFile, HeaderLayout)
{
    ModelFile f{ModelKind::Scaler, {{"ab", {1.0}}}};
    const auto bytes = encode_model_file(f);
    ASSERT_EQ(bytes.size(), 4u + 2 + 1 + 4 + (2 + 2 + 8 + 8));
    EXPECT_EQ(std::memcmp(bytes.data(), "SKYM", 4), 0);
    EXPECT_EQ(bytes[4], 1);
    EXPECT_EQ(bytes[5], 0);
    EXPECT_EQ(bytes[6], 2);
    EXPECT_EQ(bytes[7], 1);
    EXPECT_EQ(bytes[8] | bytes[9] | bytes[10], 0);
    EXPECT_EQ(bytes[11], 2);
    EXPECT_EQ(bytes[13], 'a');
    EXPECT_EQ(bytes[15], 1);
    // 1.0 is 0x3FF0000000000000, little-endian.
    EXPECT_EQ(bytes[23 + 6], 0xF0);
    EXPECT_EQ(bytes[23 + 7], 0x3F);
    EXPECT_EQ(decode_model_file(bytes), f);
}

TEST(ModelFile, SpecialValuesSurviveBitExactly)
{
    ModelFile f{ModelKind::Regressor,
                {{"x",
                  {0.0, -0.0, std::numeric_limits<double>::denorm_min(), std::numeric_limits<double>::max(),
                   std::numeric_limits<double>::infinity(), 0.1, 1.0 / 3.0}}}};
    const ModelFile back = decode_model_file(encode_model_file(f));
    EXPECT_EQ(bits(back.sections[0].values), bits(f.sections[0].values));
}

TEST(ModelFile, Errors)
{
    auto bytes = encode_model_file(to_model_file(StandardScaler{{1.0, 2.0}, {3.0, 4.0}}));
    auto bad = bytes;
    std::memcpy(bad.data(), "XXXX", 4);
    EXPECT_EQ(error_of([&] { decode_model_file(bad); }).code(), Errc::BadMagic);
    bad = bytes;
    bad[4] = 2;
    EXPECT_EQ(error_of([&] { decode_model_file(bad); }).code(), Errc::UnsupportedVersion);
    bad = bytes;
    bad[6] = 9;
    EXPECT_EQ(error_of([&] { decode_model_file(bad); }).code(), Errc::CorruptSection);
    for (std::size_t cut = 0; cut < bytes.size(); ++cut) {
        const std::vector<std::uint8_t> truncated(bytes.begin(), bytes.begin() + static_cast<std::ptrdiff_t>(cut));
        const Errc code = error_of([&] { decode_model_file(truncated); }).code();
        EXPECT_TRUE(code == Errc::CorruptSection || code == Errc::BadMagic) << "cut " << cut;
    }
    bad = bytes;
    bad.push_back(0);
    EXPECT_EQ(error_of([&] { decode_model_file(bad); }).code(), Errc::CorruptSection);
    // A scaler file is not a network.
    EXPECT_EQ(error_of([&] { network_from(decode_model_file(bytes)); }).code(), Errc::CorruptSection);
    test::TempDir dir;
    EXPECT_EQ(error_of([&] { read_model_file(dir.path() / "missing.skym"); }).code(), Errc::IoFailure);
}

TEST(ModelFile, CentroidsRoundTrip)
{
    Rng rng(1);
    Centroids c;
    for (int i = 0; i < 64; ++i) {
        c.points.push_back({uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255)});
        c.counts.push_back(uniform_index(rng, 1u << 30));
    }
    test::TempDir dir;
    store_model(c, dir.path() / "c.skym");
    const Centroids back = load_centroids(dir.path() / "c.skym");
    EXPECT_EQ(back, c);
    EXPECT_EQ(read_model_file(dir.path() / "c.skym").kind, ModelKind::Centroids);
}

TEST(ModelFile, ScalerRoundTrip)
{
    Rng rng(2);
    const StandardScaler s = fit_scaler(test::random_matrix(30, 9, rng, -100, 100));
    test::TempDir dir;
    store_model(s, dir.path() / "s.skym");
    const StandardScaler back = load_scaler(dir.path() / "s.skym");
    EXPECT_EQ(bits(back.means), bits(s.means));
    EXPECT_EQ(bits(back.stds), bits(s.stds));
}

TEST(ModelFile, NetworkRoundTripIsBitExact)
{
    for (const Head head : {Head::Identity, Head::Softmax}) {
        const NetworkModel m = trained_looking_network(3, head);
        test::TempDir dir;
        store_model(m, dir.path() / "n.skym");
        EXPECT_EQ(read_model_file(dir.path() / "n.skym").kind,
                  head == Head::Softmax ? ModelKind::Classifier : ModelKind::Regressor);
        const NetworkModel back = load_network(dir.path() / "n.skym");
        EXPECT_EQ(back.head(), head);
        EXPECT_EQ(back.mode(), Mode::Infer);
        EXPECT_EQ(back.input_dim(), 6u);
        EXPECT_EQ(bits(back.parameters()), bits(m.parameters()));
        EXPECT_EQ(back.output_scaling().offset, m.output_scaling().offset);
        EXPECT_EQ(back.output_scaling().scale, m.output_scaling().scale);
        ASSERT_EQ(back.layers().size(), m.layers().size());
        for (std::size_t i = 0; i < m.layers().size(); ++i) {
            EXPECT_EQ(back.layers()[i].spec, m.layers()[i].spec);
            EXPECT_EQ(back.layers()[i].running_mean, m.layers()[i].running_mean);
            EXPECT_EQ(back.layers()[i].running_var, m.layers()[i].running_var);
        }
        Rng rng(4);
        const Matrix rows = test::random_matrix(100, 6, rng, -3, 3);
        EXPECT_EQ(infer(back, rows), infer(m, rows));
        // Re-encoding the loaded model reproduces the file byte for byte.
        EXPECT_EQ(encode_model_file(to_model_file(back)), encode_model_file(to_model_file(m)));
    }
}

TEST(Manifest, Parsing)
{
    EXPECT_TRUE(parse_manifest("path,ghi,label\n").empty());
    const auto rows = parse_manifest("path,ghi,label\nimg/a.ppm,412.5,cloudy\nb.ppm,,\nc.ppm,0,clear\n");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(rows[0], (ManifestRecord{"img/a.ppm", 412.5, SkyLabel::Cloudy}));
    EXPECT_EQ(rows[1], (ManifestRecord{"b.ppm", std::nullopt, std::nullopt}));
    EXPECT_EQ(rows[2], (ManifestRecord{"c.ppm", 0.0, SkyLabel::Clear}));
    EXPECT_EQ(parse_manifest("path,ghi,label\r\nx.ppm,1,1\r\n").front().label, SkyLabel::Cloudy);
}

TEST(Manifest, Errors)
{
    EXPECT_EQ(error_of([] { parse_manifest(""); }).code(), Errc::MissingHeader);
    EXPECT_EQ(error_of([] { parse_manifest("file,ghi,label\n"); }).code(), Errc::MissingHeader);
    for (const char* row : {"a.ppm,abc,clear", "a.ppm,-3,clear", "a.ppm,1,sunny", "a.ppm,1", "a.ppm,1,clear,x",
                            ",1,clear", "a.ppm,nan,clear"}) {
        const Error e = error_of([&] { parse_manifest(std::string("path,ghi,label\nok.ppm,1,clear\n") + row + "\n"); });
        EXPECT_EQ(e.code(), Errc::MalformedRow) << row;
        EXPECT_EQ(e.line(), std::optional<std::size_t>(3)) << row;
    }
}

TEST(Manifest, RoundTrip)
{
    Rng rng(5);
    std::vector<ManifestRecord> records;
    for (int i = 0; i < 50; ++i) {
        ManifestRecord r{"dir/img_" + std::to_string(i) + ".ppm", std::nullopt, std::nullopt};
        if (i % 3) {
            r.ghi = uniform(rng, 0, 931);
        }
        if (i % 4) {
            r.label = i % 2 ? SkyLabel::Cloudy : SkyLabel::Clear;
        }
        records.push_back(r);
    }
    test::TempDir dir;
    write_manifest(records, dir.path() / "m.csv");
    EXPECT_EQ(read_manifest(dir.path() / "m.csv"), records);
}

TEST(Tables, FormatDoubleRoundTrips)
{
    Rng rng(6);
    for (int i = 0; i < 1000; ++i) {
        const double v = std::ldexp(uniform(rng, -1, 1), static_cast<int>(uniform_index(rng, 80)) - 40);
        EXPECT_EQ(std::stod(format_double(v)), v);
    }
    EXPECT_EQ(format_double(412.5), "412.5");
    EXPECT_EQ(format_double(3.0), "3");
}

TEST(Tables, FeaturesCsv)
{
    FeatureTable t;
    t.features.resize(3, 4);
    t.features << 1, 2, 3, 4, 0, 0, 0, 10, 5, 5, 5, 5;
    t.has_ghi = true;
    t.has_label = true;
    t.ghi = {100.5, std::nullopt, 0.25};
    t.labels = {SkyLabel::Clear, SkyLabel::Cloudy, std::nullopt};
    const std::string text = format_features_csv(t);
    EXPECT_EQ(text.substr(0, text.find('\n')), "pcnp0,pcnp1,pcnp2,pcnp3,ghi,label");
    const FeatureTable back = parse_features_csv(text);
    EXPECT_EQ(back.features, t.features);
    EXPECT_EQ(back.ghi, t.ghi);
    EXPECT_EQ(back.labels, t.labels);
    EXPECT_EQ(format_features_csv(back), text);

    FeatureTable bare;
    bare.features = Matrix::Ones(2, 3);
    const FeatureTable bare_back = parse_features_csv(format_features_csv(bare));
    EXPECT_FALSE(bare_back.has_ghi);
    EXPECT_FALSE(bare_back.has_label);
    EXPECT_EQ(bare_back.k(), 3u);

    EXPECT_EQ(error_of([] { parse_features_csv("a,b\n1,2\n"); }).code(), Errc::MissingHeader);
    const Error e = error_of([] { parse_features_csv("pcnp0,pcnp1\n1,2\n1,x\n"); });
    EXPECT_EQ(e.code(), Errc::MalformedRow);
    EXPECT_EQ(e.line(), std::optional<std::size_t>(3));
}

TEST(Tables, ReportCsv)
{
    EvalReport r;
    r.folds = {FoldMetrics{std::nullopt, 0.5, 10.0}, FoldMetrics{std::nullopt, 0.75, 20.0}};
    aggregate(r);
    const std::string text = format_report_csv(r);
    EXPECT_EQ(text, "fold,accuracy,r2,mae\n0,,0.5,10\n1,,0.75,20\nmean,,0.625,15\nstd,,0.125,5\n");
}
