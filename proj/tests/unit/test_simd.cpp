#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <vector>

#include "mechdetect/error.hpp"
#include "mechdetect/gbdt.hpp"
#include "mechdetect/random.hpp"
#include "mechdetect/simd/kernels.hpp"
#include "mechdetect/synthetic.hpp"

using namespace mechdetect;
namespace simd = mechdetect::simd;

namespace {

struct Inputs {
    std::vector<double> raw;
    std::vector<std::uint8_t> labels;
};

Inputs random_inputs(std::size_t n, std::uint64_t seed, double scale) {
    Rng rng(seed);
    Inputs in;
    in.raw.resize(n);
    in.labels.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        in.raw[i] = rng.normal() * scale;
        in.labels[i] = rng.uniform01() < 0.3;
    }
    return in;
}

class BackendGuard {
public:
    BackendGuard() : saved_(simd::active_backend()) {}
    ~BackendGuard() { simd::set_backend(saved_); }

private:
    simd::Backend saved_;
};

} // namespace

TEST(Simd, ScalarAlwaysAvailable) {
    EXPECT_TRUE(simd::backend_available(simd::Backend::Scalar));
    BackendGuard guard;
    simd::set_backend(simd::Backend::Scalar);
    EXPECT_EQ(simd::active_backend(), simd::Backend::Scalar);
}

TEST(Simd, GradientsMatchScalarReference) {
    if (!simd::backend_available(simd::Backend::Avx2)) GTEST_SKIP() << "AVX2 not available";
    // Odd lengths exercise the vector tail.
    for (std::size_t n : {1u, 3u, 4u, 7u, 64u, 1001u}) {
        for (double scale : {0.5, 5.0, 40.0}) {
            const auto in = random_inputs(n, n * 31 + static_cast<std::uint64_t>(scale), scale);
            std::vector<double> g1(n), h1(n), g2(n), h2(n);
            simd::scalar::logistic_gradients(in.raw, in.labels, g1, h1);
            simd::avx2::logistic_gradients(in.raw, in.labels, g2, h2);
            for (std::size_t i = 0; i < n; ++i) {
                EXPECT_NEAR(g1[i], g2[i], 1e-14) << "raw=" << in.raw[i];
                EXPECT_NEAR(h1[i], h2[i], 1e-14) << "raw=" << in.raw[i];
            }
        }
    }
}

TEST(Simd, GradientsAtExtremeScores) {
    if (!simd::backend_available(simd::Backend::Avx2)) GTEST_SKIP() << "AVX2 not available";
    const std::vector<double> raw{-800, -100, -30, -1e-300, 0, 1e-300, 30, 100, 800};
    const std::vector<std::uint8_t> labels{1, 0, 1, 0, 1, 0, 1, 0, 1};
    std::vector<double> g1(raw.size()), h1(raw.size()), g2(raw.size()), h2(raw.size());
    simd::scalar::logistic_gradients(raw, labels, g1, h1);
    simd::avx2::logistic_gradients(raw, labels, g2, h2);
    for (std::size_t i = 0; i < raw.size(); ++i) {
        EXPECT_TRUE(std::isfinite(g2[i]));
        EXPECT_TRUE(std::isfinite(h2[i]));
        EXPECT_NEAR(g1[i], g2[i], 1e-14);
        EXPECT_NEAR(h1[i], h2[i], 1e-14);
    }
}

TEST(Simd, LossMatchesScalarReference) {
    if (!simd::backend_available(simd::Backend::Avx2)) GTEST_SKIP() << "AVX2 not available";
    for (std::size_t n : {1u, 5u, 8u, 999u}) {
        for (double scale : {0.1, 3.0, 50.0}) {
            const auto in = random_inputs(n, n + 7, scale);
            const double a = simd::scalar::logistic_loss(in.raw, in.labels);
            const double b = simd::avx2::logistic_loss(in.raw, in.labels);
            EXPECT_NEAR(a, b, 1e-12 * std::max(1.0, std::abs(a)));
        }
    }
}

TEST(Simd, HistogramsAreBitIdentical) {
    if (!simd::backend_available(simd::Backend::Avx2)) GTEST_SKIP() << "AVX2 not available";
    Rng rng(5);
    for (std::size_t n : {0u, 1u, 3u, 4u, 5u, 17u, 2000u}) {
        std::vector<std::uint8_t> bins(n + 10);
        std::vector<double> g(n + 10), h(n + 10);
        for (std::size_t i = 0; i < bins.size(); ++i) {
            // Concentrated bins produce repeated indices inside one vector.
            bins[i] = rng.uniform01() < 0.2 ? static_cast<std::uint8_t>(kMissingBin)
                                            : static_cast<std::uint8_t>(rng.uniform_index(6));
            g[i] = rng.normal();
            h[i] = rng.uniform01();
        }
        std::vector<std::uint32_t> rows;
        for (std::uint32_t r = 0; r < bins.size(); ++r)
            if (rows.size() < n && rng.uniform01() < 0.9) rows.push_back(r);
        std::vector<simd::HistogramBin> h1(256), h2(256);
        simd::scalar::build_histogram(bins, rows, g, h, h1);
        simd::avx2::build_histogram(bins, rows, g, h, h2);
        for (std::size_t b = 0; b < 256; ++b) {
            EXPECT_EQ(std::memcmp(&h1[b].sum_gradients, &h2[b].sum_gradients, sizeof(double)), 0);
            EXPECT_EQ(std::memcmp(&h1[b].sum_hessians, &h2[b].sum_hessians, sizeof(double)), 0);
            EXPECT_EQ(h1[b].count, h2[b].count);
        }
    }
}

TEST(Simd, FittedModelsAgreeAcrossBackends) {
    if (!simd::backend_available(simd::Backend::Avx2)) GTEST_SKIP() << "AVX2 not available";
    const auto ds = make_synthetic_dataset(12, 600);
    MaskColumn target;
    Rng rng(1);
    for (std::size_t i = 0; i < ds.table.n_rows(); ++i)
        target.bits.push_back(ds.table.column(0).is_numeric()
                                  ? ds.table.column(0).number(i) + rng.normal() > 0.0
                                  : rng.uniform01() < 0.5);
    GbdtParams params;
    params.n_iterations = 20;

    BackendGuard guard;
    simd::set_backend(simd::Backend::Scalar);
    const auto a = fit(ds.table, target, params).predict_scores(ds.table);
    simd::set_backend(simd::Backend::Avx2);
    const auto b = fit(ds.table, target, params).predict_scores(ds.table);
    ASSERT_EQ(a.size(), b.size());
    for (std::size_t i = 0; i < a.size(); ++i) EXPECT_NEAR(a[i], b[i], 1e-9);
}
