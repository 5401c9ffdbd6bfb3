#include "skyirr/clustering.hpp"
#include "skyirr/error.hpp"

#include "oracles.hpp"
#include "test_support.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <set>

using namespace skyirr;

namespace {

Centroids make_centroids(std::vector<Point3> points)
{
    Centroids c;
    c.counts.assign(points.size(), 0);
    c.points = std::move(points);
    return c;
}

} // namespace

TEST(Init, SingleCenterRandomSample)
{
    const std::vector<Point3> sample{{1, 2, 3}, {4, 5, 6}, {7, 8, 9}};
    const Centroids c = init_centroids(sample, 1, 3, InitMethod::RandomSample);
    ASSERT_EQ(c.k(), 1u);
    EXPECT_NE(std::find(sample.begin(), sample.end(), c.points[0]), sample.end());
    EXPECT_EQ(c.counts, std::vector<std::uint64_t>{0});
}

TEST(Init, ExhaustionReturnsWholeSample)
{
    const std::vector<Point3> sample{{1, 0, 0}, {2, 0, 0}, {3, 0, 0}, {4, 0, 0}, {5, 0, 0}};
    for (const InitMethod m : {InitMethod::RandomSample, InitMethod::KMeansPlusPlus}) {
        const Centroids c = init_centroids(sample, sample.size(), 17, m);
        std::set<Point3> got(c.points.begin(), c.points.end());
        EXPECT_EQ(got, std::set<Point3>(sample.begin(), sample.end()));
    }
}

TEST(Init, DeterministicGivenSeed)
{
    Rng rng(1);
    const auto pts = oracle::three_blobs(50, rng);
    EXPECT_EQ(init_centroids(pts, 8, 99), init_centroids(pts, 8, 99));
    EXPECT_EQ(init_centroids(pts, 8, 99, InitMethod::RandomSample), init_centroids(pts, 8, 99, InitMethod::RandomSample));
}

TEST(Init, InsufficientData)
{
    const std::vector<Point3> sample{{1, 0, 0}};
    try {
        init_centroids(sample, 2, 0);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InsufficientData);
    }
}

TEST(Init, KMeansPlusPlusMatchesDSquaredOracle)
{
    // Three well-separated two-point clusters.
    const std::vector<Point3> pts{{0, 0, 0}, {1, 0, 0}, {100, 0, 0}, {101, 0, 0}, {0, 100, 0}, {1, 100, 0}};
    const std::vector<int> group{0, 0, 1, 1, 2, 2};
    const double exact = oracle::dsquared_one_per_group(pts, group, 3);
    ASSERT_GE(exact, 0.9);

    constexpr int kTrials = 1000;
    int hits = 0;
    for (int t = 0; t < kTrials; ++t) {
        const Centroids c = init_centroids(pts, 3, static_cast<std::uint64_t>(t));
        std::set<int> groups;
        for (const Point3& p : c.points) {
            groups.insert(group[static_cast<std::size_t>(std::find(pts.begin(), pts.end(), p) - pts.begin())]);
        }
        hits += groups.size() == 3 ? 1 : 0;
    }
    const double freq = static_cast<double>(hits) / kTrials;
    const double sigma = std::sqrt(exact * (1 - exact) / kTrials);
    EXPECT_GE(freq, 0.9);
    EXPECT_NEAR(freq, exact, 4 * sigma + 1e-3);
}

TEST(Assign, NearestAndTies)
{
    EXPECT_EQ(assign(make_centroids({{0, 0, 0}, {255, 255, 255}}), {10, 10, 10}), 0u);
    EXPECT_EQ(assign(make_centroids({{0, 0, 0}, {2, 0, 0}}), {1, 0, 0}), 0u);
    EXPECT_EQ(assign(make_centroids({{2, 0, 0}, {0, 0, 0}, {2, 0, 0}}), {1, 0, 0}), 0u);
    EXPECT_EQ(assign(make_centroids({{5, 5, 5}, {3, 3, 3}, {3, 3, 3}}), {3, 3, 3}), 1u);
}

TEST(Assign, MatchesExhaustiveScan)
{
    Rng rng(2024);
    std::vector<Point3> centers(64);
    for (auto& c : centers) {
        c = {uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255)};
    }
    const Centroids cent = make_centroids(centers);
    for (int i = 0; i < 1000; ++i) {
        const Point3 q{static_cast<double>(uniform_index(rng, 256)), static_cast<double>(uniform_index(rng, 256)),
                       static_cast<double>(uniform_index(rng, 256))};
        ASSERT_EQ(assign(cent, q), oracle::nearest_scan(centers, q));
    }
}

TEST(PartialFit, FirstPointOverwritesThenAverages)
{
    Centroids c = make_centroids({{0, 0, 0}});
    const std::vector<Point3> first{{9, 9, 9}};
    partial_fit(c, first);
    EXPECT_EQ(c.points[0], (Point3{9, 9, 9}));
    EXPECT_EQ(c.counts[0], 1u);
    const std::vector<Point3> second{{3, 3, 3}};
    partial_fit(c, second);
    EXPECT_EQ(c.points[0], (Point3{6, 6, 6}));
    EXPECT_EQ(c.counts[0], 2u);
}

TEST(PartialFit, AssignmentsCachedBeforeUpdates)
{
    // With per-point reassignment the second point would follow the moved
    // center; cached assignments keep both points on center 0.
    Centroids c = make_centroids({{0, 0, 0}, {10, 0, 0}});
    const std::vector<Point3> batch{{4, 0, 0}, {4.9, 0, 0}};
    partial_fit(c, batch);
    EXPECT_EQ(c.counts, (std::vector<std::uint64_t>{2, 0}));
}

TEST(PartialFit, CountsAndConvexHullInvariants)
{
    Rng rng(8);
    const auto pts = oracle::three_blobs(100, rng);
    Centroids c = init_centroids(pts, 5, 4, InitMethod::RandomSample);
    // Per-center coordinate bounding boxes of {init} U {assigned points}.
    std::vector<Point3> lo = c.points;
    std::vector<Point3> hi = c.points;
    for (int step = 0; step < 40; ++step) {
        std::vector<Point3> batch;
        for (int i = 0; i < 16; ++i) {
            batch.push_back(pts[uniform_index(rng, pts.size())]);
        }
        const std::vector<std::uint64_t> before = c.counts;
        for (const Point3& p : batch) {
            const std::size_t a = oracle::nearest_scan(c.points, p);
            for (int d = 0; d < 3; ++d) {
                lo[a][d] = std::min(lo[a][d], p[d]);
                hi[a][d] = std::max(hi[a][d], p[d]);
            }
        }
        partial_fit(c, batch);
        std::uint64_t increments = 0;
        for (std::size_t j = 0; j < c.k(); ++j) {
            ASSERT_GE(c.counts[j], before[j]);
            increments += c.counts[j] - before[j];
            for (int d = 0; d < 3; ++d) {
                ASSERT_GE(c.points[j][d], lo[j][d] - 1e-9);
                ASSERT_LE(c.points[j][d], hi[j][d] + 1e-9);
            }
        }
        ASSERT_EQ(increments, batch.size());
    }
}

TEST(Fit, MiniBatchWithinTenPercentOfLloyd)
{
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        Rng rng(seed + 100);
        const auto pts = oracle::three_blobs(100, rng);
        const Centroids init = init_centroids(pts, 3, seed);
        const double lloyd_inertia = oracle::mean_sq_error(oracle::lloyd(init.points, pts), pts);

        Centroids mb = init;
        fit_from(mb, pts, seed, FitConfig{32, 50, true, InitMethod::KMeansPlusPlus});
        EXPECT_LE(inertia(mb, pts), 1.10 * lloyd_inertia) << "seed " << seed;
    }
}

TEST(Fit, InertiaNonIncreasingOverEarlyEpochs)
{
    Rng rng(77);
    const auto pts = oracle::three_blobs(100, rng);
    std::vector<double> history;
    FitConfig cfg{32, 5, true, InitMethod::KMeansPlusPlus};
    fit(pts, 3, 5, cfg, [&](std::size_t, const Centroids& c) { history.push_back(inertia(c, pts)); });
    ASSERT_EQ(history.size(), 5u);
    for (std::size_t i = 1; i < history.size(); ++i) {
        EXPECT_LE(history[i], 1.05 * history[i - 1]) << "epoch " << i;
    }
}

TEST(Fit, SingleCenterIsRunningMean)
{
    Rng rng(3);
    std::vector<Point3> pts;
    Point3 mean{0, 0, 0};
    for (int i = 0; i < 500; ++i) {
        pts.push_back({uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255)});
        for (int d = 0; d < 3; ++d) {
            mean[d] += pts.back()[d] / 500.0;
        }
    }
    const Centroids c = fit(pts, 1, 9, FitConfig{64, 3, true, InitMethod::KMeansPlusPlus});
    for (int d = 0; d < 3; ++d) {
        EXPECT_NEAR(c.points[0][d], mean[d], 1e-9);
    }
    EXPECT_EQ(c.counts[0], 1500u);
}

TEST(Fit, ExactThreeColorRecovery)
{
    std::vector<Point3> pts;
    const std::vector<Point3> colors{{10, 20, 200}, {240, 240, 240}, {90, 90, 90}};
    for (int i = 0; i < 300; ++i) {
        pts.push_back(colors[static_cast<std::size_t>(i % 3)]);
    }
    const Centroids c = fit(pts, 3, 1, FitConfig{});
    EXPECT_LT(inertia(c, pts), 1e-6);
    EXPECT_EQ(std::set<Point3>(c.points.begin(), c.points.end()), std::set<Point3>(colors.begin(), colors.end()));
}

TEST(Fit, StarvedCenterWithoutReseeding)
{
    const std::vector<Point3> pts(50, Point3{30, 60, 90});
    const Centroids c = fit(pts, 2, 4, FitConfig{8, 3, false, InitMethod::KMeansPlusPlus});
    EXPECT_EQ(c.points[0], (Point3{30, 60, 90}));
    EXPECT_EQ(c.counts[0], 150u);
    EXPECT_EQ(c.counts[1], 0u);
}

TEST(Fit, ReseedingRevivesEmptyCenters)
{
    // Both centers start left of everything, so the second never wins a point
    // in the first epoch and is moved to the farthest point at epoch end.
    std::vector<Point3> pts;
    for (int i = 0; i < 20; ++i) {
        pts.push_back({static_cast<double>(i % 2), 0, 0});
        pts.push_back({200.0 + i % 2, 0, 0});
    }
    Centroids c = make_centroids({{0, 0, 0}, {-1000, 0, 0}});
    Centroids idle = c;
    fit_from(c, pts, 1, FitConfig{8, 3, true, InitMethod::KMeansPlusPlus});
    fit_from(idle, pts, 1, FitConfig{8, 3, false, InitMethod::KMeansPlusPlus});
    EXPECT_GT(c.counts[1], 0u);
    EXPECT_EQ(idle.counts[1], 0u);
    EXPECT_LT(inertia(c, pts), inertia(idle, pts));
}

TEST(Fit, DeterministicGivenSeed)
{
    Rng rng(12);
    const auto pts = oracle::three_blobs(60, rng);
    EXPECT_EQ(fit(pts, 4, 21, FitConfig{16, 4, true, InitMethod::KMeansPlusPlus}),
              fit(pts, 4, 21, FitConfig{16, 4, true, InitMethod::KMeansPlusPlus}));
}

TEST(Inertia, Basics)
{
    const std::vector<Point3> pts{{1, 2, 3}, {4, 5, 6}};
    EXPECT_EQ(inertia(make_centroids(pts), pts), 0.0);
    const std::vector<Point3> one{{3, 4, 0}};
    EXPECT_DOUBLE_EQ(inertia(make_centroids({{0, 0, 0}}), one), 25.0);
    try {
        inertia(make_centroids({{0, 0, 0}}), std::vector<Point3>{});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::EmptySet);
    }
}

TEST(Inertia, MatchesDirectComputation)
{
    Rng rng(31);
    std::vector<Point3> centers(7);
    std::vector<Point3> pts(400);
    for (auto& c : centers) {
        c = {uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255)};
    }
    for (auto& p : pts) {
        p = {uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255)};
    }
    EXPECT_NEAR(inertia(make_centroids(centers), pts), oracle::mean_sq_error(centers, pts), 1e-9);
}

TEST(Quantize, SingleCluster)
{
    Rng rng(4);
    const ImageRGB img = test::random_image(10, 10, rng);
    const SkyMask mask = SkyMask::centered(10, 10);
    const SegmentedImage seg = quantize(img, mask, make_centroids({{128, 128, 128}}));
    for (int y = 0; y < 10; ++y) {
        for (int x = 0; x < 10; ++x) {
            EXPECT_EQ(seg.labels[static_cast<std::size_t>(y * 10 + x)], mask.visible(x, y) ? 0 : SegmentedImage::kMasked);
        }
    }
}

TEST(Quantize, LabelsArePointwiseAssign)
{
    Rng rng(6);
    const ImageRGB img = test::random_image(32, 24, rng);
    std::vector<Point3> centers(20);
    for (auto& c : centers) {
        c = {uniform(rng, 0, 255), uniform(rng, 0, 255), uniform(rng, 0, 255)};
    }
    const Centroids cent = make_centroids(centers);
    const SkyMask mask = SkyMask::circular(32, 24, 15, 11, 10);
    const SegmentedImage seg = quantize(img, mask, cent);
    for (int y = 0; y < 24; ++y) {
        for (int x = 0; x < 32; ++x) {
            const std::int32_t expected =
                mask.visible(x, y) ? static_cast<std::int32_t>(oracle::nearest_scan(centers, to_point(img.at(x, y))))
                                   : SegmentedImage::kMasked;
            ASSERT_EQ(seg.labels[static_cast<std::size_t>(y * 32 + x)], expected);
        }
    }
}

TEST(Quantize, RenderedImageHasAtMostKColors)
{
    Rng rng(10);
    const ImageRGB img = test::random_image(512, 512, rng);
    std::vector<Point3> sample;
    for (int i = 0; i < 5000; ++i) {
        sample.push_back(to_point(img.pixels()[uniform_index(rng, img.size())]));
    }
    const Centroids cent = fit(sample, 64, 2, FitConfig{256, 2, true, InitMethod::KMeansPlusPlus});
    const SkyMask mask = SkyMask::centered(512, 512);
    const ImageRGB rendered = render_segmented(quantize(img, mask, cent));
    std::set<std::uint32_t> colors;
    for (int y = 0; y < 512; ++y) {
        for (int x = 0; x < 512; ++x) {
            const Rgb c = rendered.at(x, y);
            if (!mask.visible(x, y)) {
                ASSERT_EQ(c, (Rgb{0, 0, 0}));
                continue;
            }
            colors.insert((std::uint32_t{c.r} << 16) | (std::uint32_t{c.g} << 8) | c.b);
        }
    }
    EXPECT_LE(colors.size(), 64u);
    EXPECT_GE(colors.size(), 2u);
}

TEST(Quantize, DimensionMismatch)
{
    try {
        quantize(ImageRGB(4, 4), SkyMask::none(3, 4), make_centroids({{0, 0, 0}}));
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DimensionMismatch);
    }
}
