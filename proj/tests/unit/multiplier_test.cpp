#include "episcan/errors.hpp"
#include "episcan/multiplier.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <set>

using namespace episcan;

namespace {

struct MeanSe {
    double mean;
    double se;
};

MeanSe mean_se(const std::vector<double>& xs) {
    const double n = static_cast<double>(xs.size());
    const double m = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) {
        ss += (x - m) * (x - m);
    }
    return {m, std::sqrt(ss / (n - 1.0) / n)};
}

void expect_cov(const KernelSpec& k, const LatticeShape& s, const Lag& lag, double want, Index reps,
                std::uint64_t seed) {
    Rng rng(seed);
    const MeanSe r = mean_se(multiplier_cov_samples(k, s, lag, reps, rng));
    EXPECT_LE(std::abs(r.mean - want), 3.0 * r.se) << "mean " << r.mean << " se " << r.se << " want " << want;
}

}  // namespace

TEST(KernelValue, WorkedExamples) {
    const Lag zero{0, 0};
    EXPECT_EQ(kernel_value(KernelSpec{KernelKind::ExponentialAR, 6}, zero), 1.0);
    EXPECT_EQ(kernel_value(KernelSpec{KernelKind::BartlettMA, 3}, zero), 1.0);
    EXPECT_NEAR(kernel_value(KernelSpec{KernelKind::ExponentialAR, 6}, Lag{1, 0}), std::exp(-1.0 / 6.0), 1e-15);
    EXPECT_NEAR(kernel_value(KernelSpec{KernelKind::ExponentialAR, 6}, Lag{1, 0}), 0.8465, 5e-5);
    EXPECT_NEAR(kernel_value(KernelSpec{KernelKind::BartlettMA, 2}, Lag{1, 1}), 4.0 / 9.0, 1e-15);
    EXPECT_EQ(kernel_value(KernelSpec{KernelKind::BartlettMA, 2}, Lag{3, 0}), 0.0);
    EXPECT_EQ(kernel_value(KernelSpec{KernelKind::BartlettMA, 2}, Lag{-1, 2}),
              kernel_value(KernelSpec{KernelKind::BartlettMA, 2}, Lag{1, -2}));
}

TEST(KernelSpec, ParseAndValidate) {
    EXPECT_EQ(parse_kernel_kind("ar"), KernelKind::ExponentialAR);
    EXPECT_EQ(parse_kernel_kind("ma"), KernelKind::BartlettMA);
    EXPECT_EQ(to_string(KernelKind::BartlettMA), "ma");
    EXPECT_THROW(parse_kernel_kind("gauss"), ConfigError);
    EXPECT_THROW((KernelSpec{KernelKind::ExponentialAR, 0}.validate()), ConfigError);
    EXPECT_EQ(ma_half_width(2), 1);
    EXPECT_EQ(ma_half_width(5), 2);
    EXPECT_EQ(ma_effective_bandwidth(5), 4);
    EXPECT_EQ(ma_effective_bandwidth(6), 6);
}

TEST(DeriveSeed, DeterministicAndDistinct) {
    EXPECT_EQ(derive_seed(7, 3), derive_seed(7, 3));
    std::set<std::uint64_t> seen;
    for (std::uint64_t s = 0; s < 1000; ++s) {
        seen.insert(derive_seed(42, s));
    }
    EXPECT_EQ(seen.size(), 1000U);
    EXPECT_NE(derive_seed(1, 0), derive_seed(0, 1));
}

TEST(SampleMultiplier, SeedDeterminesField) {
    const LatticeShape s = LatticeShape::cube(6, 2);
    for (KernelKind kind : {KernelKind::ExponentialAR, KernelKind::BartlettMA}) {
        const KernelSpec k{kind, 3};
        const MultiplierField a = sample_multiplier(k, s, 99);
        const MultiplierField b = sample_multiplier(k, s, 99);
        const MultiplierField c = sample_multiplier(k, s, 100);
        EXPECT_EQ(a.values, b.values);
        EXPECT_NE(a.values, c.values);
        EXPECT_EQ(a.seed, 99U);
        EXPECT_EQ(a.values.size(), 36U);
    }
}

TEST(SeparableArFilter, ZeroCoefficientIsIdentity) {
    const LatticeShape s = LatticeShape::cube(3, 2);
    std::vector<double> v{1, 2, 3, 4, 5, 6, 7, 8, 9};
    const auto before = v;
    separable_ar_filter(s, 0.0, v);
    EXPECT_EQ(v, before);
    EXPECT_THROW(separable_ar_filter(s, 1.0, v), ConfigError);
}

TEST(SeparableArFilter, OneDimensionalRecursion) {
    const LatticeShape s = LatticeShape::cube(3, 1);
    std::vector<double> v{1, 1, 1};
    separable_ar_filter(s, 0.5, v);
    const double c = std::sqrt(0.75);
    EXPECT_DOUBLE_EQ(v[0], 1.0);
    EXPECT_DOUBLE_EQ(v[1], 0.5 + c);
    EXPECT_DOUBLE_EQ(v[2], 0.5 * (0.5 + c) + c);
}

TEST(MultiplierCovariance, ArKernel) {
    const LatticeShape s = LatticeShape::cube(60, 2);
    const KernelSpec k{KernelKind::ExponentialAR, 6};
    expect_cov(k, s, Lag{0, 0}, 1.0, 200, 1);
    expect_cov(k, s, Lag{1, 0}, std::exp(-1.0 / 6.0), 200, 2);
    expect_cov(k, s, Lag{2, 3}, std::exp(-5.0 / 6.0), 200, 3);
}

TEST(MultiplierCovariance, ArLargeBandwidthIsNearlyConstant) {
    Rng rng(4);
    const double c = empirical_multiplier_cov(KernelSpec{KernelKind::ExponentialAR, 10000}, LatticeShape::cube(20, 2),
                                              Lag{1, 0}, 50, rng);
    Rng rng0(4);
    const double v = empirical_multiplier_cov(KernelSpec{KernelKind::ExponentialAR, 10000}, LatticeShape::cube(20, 2),
                                              Lag{0, 0}, 50, rng0);
    EXPECT_NEAR(c / v, 1.0, 0.01);
}

TEST(MultiplierCovariance, MaKernel) {
    const LatticeShape s = LatticeShape::cube(60, 2);
    const KernelSpec k{KernelKind::BartlettMA, 2};
    expect_cov(k, s, Lag{0, 0}, 1.0, 200, 5);
    expect_cov(k, s, Lag{1, 0}, 2.0 / 3.0, 200, 6);
    expect_cov(k, s, Lag{2, 0}, 1.0 / 3.0, 200, 7);
    expect_cov(k, s, Lag{1, 1}, 4.0 / 9.0, 200, 8);
    expect_cov(k, s, Lag{3, 0}, 0.0, 200, 9);
}

TEST(MultiplierCovariance, OddBandwidthUsesEffectiveBartlett) {
    const LatticeShape s = LatticeShape::cube(60, 1);
    const KernelSpec k{KernelKind::BartlettMA, 5};
    const KernelSpec eff{KernelKind::BartlettMA, ma_effective_bandwidth(5)};
    expect_cov(k, s, Lag{2}, kernel_value(eff, Lag{2}), 400, 10);
}

TEST(MultiplierCovariance, Errors) {
    Rng rng(1);
    const LatticeShape s = LatticeShape::cube(5, 2);
    EXPECT_THROW(empirical_multiplier_cov(KernelSpec{}, s, Lag{5, 0}, 10, rng), IndexError);
    EXPECT_THROW(empirical_multiplier_cov(KernelSpec{}, s, Lag{1}, 10, rng), IndexError);
    EXPECT_THROW(empirical_multiplier_cov(KernelSpec{}, s, Lag{1, 0}, 1, rng), ConfigError);
}

TEST(BandwidthTooLarge, ComparesWithRootOfSmallestSide) {
    EXPECT_TRUE(bandwidth_too_large(KernelSpec{KernelKind::ExponentialAR, 6}, LatticeShape::cube(30, 2)));
    EXPECT_FALSE(bandwidth_too_large(KernelSpec{KernelKind::ExponentialAR, 5}, LatticeShape::cube(30, 2)));
    EXPECT_TRUE(bandwidth_too_large(KernelSpec{KernelKind::BartlettMA, 3}, LatticeShape(IndexVec{100, 9})));
}
