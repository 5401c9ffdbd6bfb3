// Command-line pipeline: synth -> train-kmeans -> extract -> train-* -> classify/estimate/evaluate.

#include "skyirr/error.hpp"
#include "skyirr/models.hpp"
#include "skyirr/persistence.hpp"
#include "skyirr/pipeline.hpp"
#include "skyirr/synthsky.hpp"
#include "skyirr/tables.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;
using namespace skyirr;

namespace {

constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

struct Manifest {
    fs::path base;
    std::vector<ManifestRecord> records;

    ImageRGB image(std::size_t i) const { return load_ppm(base / records[i].image_path); }
};

Manifest open_manifest(const fs::path& path)
{
    return {path.parent_path(), read_manifest(path)};
}

fs::path scaler_path(const std::string& explicit_path, const std::string& model_path)
{
    return explicit_path.empty() ? fs::path(model_path + ".scaler") : fs::path(explicit_path);
}

void emit(const std::string& text, const std::string& out)
{
    if (out.empty()) {
        std::cout << text;
    } else {
        write_text(text, out);
    }
}

// Rows of a features table that carry the requested target.
std::vector<std::size_t> rows_with_label(const FeatureTable& t)
{
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        if (t.has_label && t.labels[i]) {
            rows.push_back(i);
        }
    }
    return rows;
}

// Zero-GHI rows carry no irradiance signal and are dropped.
std::vector<std::size_t> rows_with_ghi(const FeatureTable& t)
{
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < t.rows(); ++i) {
        if (t.has_ghi && t.ghi[i] && *t.ghi[i] > 0.0) {
            rows.push_back(i);
        }
    }
    return rows;
}

Dataset dataset_from(const FeatureTable& t, std::span<const std::size_t> rows)
{
    Dataset d;
    std::vector<Eigen::Index> idx(rows.begin(), rows.end());
    d.features = t.features(idx, Eigen::all);
    for (const std::size_t r : rows) {
        if (t.has_ghi && t.ghi[r]) {
            d.targets.push_back(*t.ghi[r]);
        }
        if (t.has_label && t.labels[r]) {
            d.labels.push_back(static_cast<int>(*t.labels[r]));
        }
    }
    if (d.targets.size() != rows.size()) {
        d.targets.clear();
    }
    if (d.labels.size() != rows.size()) {
        d.labels.clear();
    }
    return d;
}

// Feature rows for inference: either one image through the palette or a features CSV.
Matrix inference_rows(const std::string& image, const std::string& palette, const std::string& features)
{
    if (image.empty() == features.empty()) {
        throw Error(Errc::UsageError, "pass exactly one of --image or --features");
    }
    if (!image.empty()) {
        if (palette.empty()) {
            throw Error(Errc::UsageError, "--image requires --palette");
        }
        const PcnpVector v = image_pcnp(load_ppm(image), load_centroids(palette));
        Matrix row(1, static_cast<Eigen::Index>(v.counts.size()));
        for (std::size_t j = 0; j < v.counts.size(); ++j) {
            row(0, static_cast<Eigen::Index>(j)) = static_cast<double>(v.counts[j]);
        }
        return row;
    }
    return read_features_csv(features).features;
}

struct Options {
    // synth
    std::size_t count = 0;
    double mix = 0.5;
    int size = 512;
    // shared
    std::uint64_t seed = 1;
    std::string out;
    std::string manifest;
    std::string model;
    std::string scaler;
    std::string features;
    std::string image;
    std::string palette;
    // train-kmeans
    std::size_t k = 256;
    std::size_t kmeans_batch = 1024;
    std::size_t kmeans_epochs = 10;
    std::size_t pixels_per_image = 1000;
    // training
    double split = 0.75;
    double regressor_split = 1.0;
    std::size_t epochs = 200;
    std::size_t batch_size = 128;
    // evaluate
    std::size_t folds = 10;
    std::string task = "regressor";
};

void run_synth(const Options& o)
{
    SceneDistribution dist;
    dist.cloudy_fraction = o.mix;
    const fs::path manifest = generate_dataset(o.count, dist, o.seed, o.out, o.size, o.size);
    std::cout << manifest.string() << '\n';
}

void run_train_kmeans(const Options& o)
{
    const Manifest m = open_manifest(o.manifest);
    if (m.records.empty()) {
        throw Error(Errc::InsufficientData, "manifest lists no images");
    }
    FitConfig config;
    config.batch_size = o.kmeans_batch;
    config.epochs = o.kmeans_epochs;
    const Centroids palette = train_palette(
        m.records.size(), [&](std::size_t i) { return m.image(i); }, o.k, o.seed, config, o.pixels_per_image);
    store_model(palette, o.out);
}

void run_segment(const Options& o)
{
    const ImageRGB image = load_ppm(o.image);
    const SegmentedImage seg = quantize(image, SkyMask::centered(image.width(), image.height()), load_centroids(o.model));
    store_ppm(render_segmented(seg), o.out);
}

void run_extract(const Options& o)
{
    const Manifest m = open_manifest(o.manifest);
    const Centroids palette = load_centroids(o.model);
    FeatureTable table;
    table.features = pcnp_matrix(m.records.size(), [&](std::size_t i) { return m.image(i); }, palette);
    for (const ManifestRecord& r : m.records) {
        table.has_ghi = table.has_ghi || r.ghi.has_value();
        table.has_label = table.has_label || r.label.has_value();
        table.ghi.push_back(r.ghi);
        table.labels.push_back(r.label);
    }
    write_features_csv(table, o.out);
}

void run_train_classifier(const Options& o)
{
    const FeatureTable table = read_features_csv(o.features);
    const Dataset all = dataset_from(table, rows_with_label(table));
    if (all.labels.empty()) {
        throw Error(Errc::InsufficientData, "no labeled rows in " + o.features);
    }
    const Fold split = holdout_split(all.rows(), o.split, o.seed);
    const Dataset train = all.subset(split.train);
    const StandardScaler scaler = fit_scaler(train.features);
    ClassifierConfig config;
    config.input_dim = table.k();
    const NetworkModel model = train_classifier(transform(scaler, train.features), train.labels, config, o.seed);
    store_model(model, o.out);
    store_model(scaler, scaler_path(o.scaler, o.out));
    if (!split.validation.empty()) {
        const Dataset test = all.subset(split.validation);
        std::vector<int> predicted;
        for (const Classification& c : classify_batch(model, transform(scaler, test.features))) {
            predicted.push_back(static_cast<int>(c.label));
        }
        std::cout << "held-out accuracy " << format_double(accuracy(predicted, test.labels)) << " on "
                  << test.rows() << " rows\n";
    }
}

void run_train_regressor(const Options& o)
{
    const FeatureTable table = read_features_csv(o.features);
    const Dataset all = dataset_from(table, rows_with_ghi(table));
    if (all.targets.empty()) {
        throw Error(Errc::InsufficientData, "no rows with positive ghi in " + o.features);
    }
    const Fold split = holdout_split(all.rows(), o.regressor_split, o.seed);
    const Dataset train = all.subset(split.train);
    const StandardScaler scaler = fit_scaler(train.features);
    RegressorConfig config;
    config.input_dim = table.k();
    config.epochs = o.epochs;
    config.batch_size = o.batch_size;
    const NetworkModel model = train_regressor(transform(scaler, train.features), train.targets, config, o.seed);
    store_model(model, o.out);
    store_model(scaler, scaler_path(o.scaler, o.out));
    if (!split.validation.empty()) {
        const Dataset test = all.subset(split.validation);
        const std::vector<double> pred = estimate_ghi_batch(model, transform(scaler, test.features));
        std::cout << "held-out r2 " << format_double(r2_score(pred, test.targets)) << " mae "
                  << format_double(mae(pred, test.targets)) << " on " << test.rows() << " rows\n";
    }
}

void run_classify(const Options& o)
{
    const NetworkModel model = load_network(o.model);
    const StandardScaler scaler = load_scaler(o.scaler);
    const Matrix rows = inference_rows(o.image, o.palette, o.features);
    std::ostringstream text;
    text << "row,label,p_clear,p_cloudy\n";
    const auto results = classify_batch(model, transform(scaler, rows));
    for (std::size_t i = 0; i < results.size(); ++i) {
        text << i << ',' << label_name(results[i].label) << ',' << format_double(results[i].probabilities[0]) << ','
             << format_double(results[i].probabilities[1]) << '\n';
    }
    emit(text.str(), o.out);
}

void run_estimate(const Options& o)
{
    const NetworkModel model = load_network(o.model);
    const StandardScaler scaler = load_scaler(o.scaler);
    const Matrix rows = inference_rows(o.image, o.palette, o.features);
    std::ostringstream text;
    text << "row,ghi\n";
    const std::vector<double> ghi = estimate_ghi_batch(model, transform(scaler, rows));
    for (std::size_t i = 0; i < ghi.size(); ++i) {
        text << i << ',' << format_double(ghi[i]) << '\n';
    }
    emit(text.str(), o.out);
}

void run_evaluate(const Options& o)
{
    const FeatureTable table = read_features_csv(o.features);
    EvalReport report;
    if (o.task == "classifier") {
        const Dataset d = dataset_from(table, rows_with_label(table));
        ClassifierConfig config;
        config.input_dim = table.k();
        const TrainFn train = [&](const FoldData& fold, std::uint64_t seed) -> Predictor {
            const NetworkModel model = train_classifier(fold.data.features, fold.data.labels, config, seed);
            return [model](const Matrix& x) {
                std::vector<double> out;
                for (const Classification& c : classify_batch(model, x)) {
                    out.push_back(static_cast<double>(c.label));
                }
                return out;
            };
        };
        report = kfold_cv(d, o.folds, train, classification_metrics, o.seed);
    } else {
        const Dataset d = dataset_from(table, rows_with_ghi(table));
        RegressorConfig config;
        config.input_dim = table.k();
        config.epochs = o.epochs;
        config.batch_size = o.batch_size;
        const TrainFn train = [&](const FoldData& fold, std::uint64_t seed) -> Predictor {
            const NetworkModel model = train_regressor(fold.data.features, fold.data.targets, config, seed);
            return [model](const Matrix& x) { return estimate_ghi_batch(model, x); };
        };
        report = kfold_cv(d, o.folds, train, regression_metrics, o.seed);
    }
    write_report_csv(report, o.out);
    std::cout << format_report_csv(report);
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Sky-image segmentation, sky classification and GHI estimation"};
    app.require_subcommand(1);
    Options o;

    auto* synth = app.add_subcommand("synth", "Render synthetic sky scenes with known GHI");
    synth->add_option("--count", o.count, "Number of scenes")->required();
    synth->add_option("--out", o.out, "Output directory")->required();
    synth->add_option("--seed", o.seed);
    synth->add_option("--mix", o.mix, "Share of cloudy scenes")->check(CLI::Range(0.0, 1.0));
    synth->add_option("--size", o.size, "Image width and height in pixels")->check(CLI::PositiveNumber);

    auto* kmeans = app.add_subcommand("train-kmeans", "Fit the color palette with mini-batch k-means");
    kmeans->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
    kmeans->add_option("--k", o.k, "Palette size")->check(CLI::PositiveNumber);
    kmeans->add_option("--batch-size", o.kmeans_batch)->check(CLI::PositiveNumber);
    kmeans->add_option("--epochs", o.kmeans_epochs);
    kmeans->add_option("--pixels-per-image", o.pixels_per_image, "Visible pixels sampled per image (0 = all)");
    kmeans->add_option("--seed", o.seed);
    kmeans->add_option("--out", o.out)->required();

    auto* segment = app.add_subcommand("segment", "Render an image with its palette colors");
    segment->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
    segment->add_option("--image", o.image)->required()->check(CLI::ExistingFile);
    segment->add_option("--out", o.out)->required();

    auto* extract = app.add_subcommand("extract", "Write PCNP features for every manifest image");
    extract->add_option("--model", o.model, "Palette model")->required()->check(CLI::ExistingFile);
    extract->add_option("--manifest", o.manifest)->required()->check(CLI::ExistingFile);
    extract->add_option("--out", o.out)->required();

    auto* classifier = app.add_subcommand("train-classifier", "Train the clear/cloudy classifier");
    classifier->add_option("--features", o.features)->required()->check(CLI::ExistingFile);
    classifier->add_option("--split", o.split, "Training share; the rest is held out")->check(CLI::Range(0.0, 1.0));
    classifier->add_option("--seed", o.seed);
    classifier->add_option("--out", o.out)->required();
    classifier->add_option("--scaler-out", o.scaler, "Defaults to <out>.scaler");

    auto* regressor = app.add_subcommand("train-regressor", "Train the GHI regressor");
    regressor->add_option("--features", o.features)->required()->check(CLI::ExistingFile);
    regressor->add_option("--epochs", o.epochs);
    regressor->add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber);
    regressor->add_option("--split", o.regressor_split, "Training share; the rest is held out")
        ->check(CLI::Range(0.0, 1.0));
    regressor->add_option("--seed", o.seed);
    regressor->add_option("--out", o.out)->required();
    regressor->add_option("--scaler-out", o.scaler, "Defaults to <out>.scaler");

    for (auto [name, help] : {std::pair{"classify", "Classify images or feature rows"},
                              std::pair{"estimate", "Estimate GHI for images or feature rows"}}) {
        auto* cmd = app.add_subcommand(name, help);
        cmd->add_option("--model", o.model)->required()->check(CLI::ExistingFile);
        cmd->add_option("--scaler", o.scaler)->required()->check(CLI::ExistingFile);
        cmd->add_option("--image", o.image)->check(CLI::ExistingFile);
        cmd->add_option("--palette", o.palette, "Palette model, needed with --image")->check(CLI::ExistingFile);
        cmd->add_option("--features", o.features)->check(CLI::ExistingFile);
        cmd->add_option("--out", o.out, "CSV output (stdout when omitted)");
    }

    auto* evaluate = app.add_subcommand("evaluate", "k-fold cross-validation from a features CSV");
    evaluate->add_option("--features", o.features)->required()->check(CLI::ExistingFile);
    evaluate->add_option("--task", o.task)->check(CLI::IsMember({"classifier", "regressor"}));
    evaluate->add_option("--folds", o.folds)->check(CLI::Range(2, 1000000));
    evaluate->add_option("--epochs", o.epochs);
    evaluate->add_option("--batch-size", o.batch_size)->check(CLI::PositiveNumber);
    evaluate->add_option("--seed", o.seed);
    evaluate->add_option("--out", o.out, "Report CSV")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitUsage;
    }

    try {
        const std::string cmd = app.get_subcommands().front()->get_name();
        if (cmd == "synth") {
            run_synth(o);
        } else if (cmd == "train-kmeans") {
            run_train_kmeans(o);
        } else if (cmd == "segment") {
            run_segment(o);
        } else if (cmd == "extract") {
            run_extract(o);
        } else if (cmd == "train-classifier") {
            run_train_classifier(o);
        } else if (cmd == "train-regressor") {
            run_train_regressor(o);
        } else if (cmd == "classify") {
            run_classify(o);
        } else if (cmd == "estimate") {
            run_estimate(o);
        } else {
            run_evaluate(o);
        }
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return e.code() == Errc::UsageError ? kExitUsage : kExitRuntime;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitRuntime;
    }
    return 0;
}
