#include "episcan/errors.hpp"
#include "episcan/hilbert_gram.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <random>

using namespace episcan;

TEST(ObservationField, RejectsNonFiniteAndWrongSize) {
    const LatticeShape s = LatticeShape::cube(2, 1);
    EXPECT_THROW(ObservationField(s, 1, {1.0, std::numeric_limits<double>::quiet_NaN()}), DataError);
    EXPECT_THROW(ObservationField(s, 1, {1.0, std::numeric_limits<double>::infinity()}), DataError);
    EXPECT_THROW(ObservationField(s, 1, {1.0}), ConfigError);
    EXPECT_TRUE(ObservationField(s, 1, {2.0, 2.0}).is_constant());
    EXPECT_FALSE(ObservationField(s, 1, {2.0, 3.0}).is_constant());
}

TEST(WeightSurvival, WorkedExamples) {
    EXPECT_DOUBLE_EQ(weight_survival(WeightSpec{{GaussianWeight{0, 1}}}, std::vector<double>{0.0}), 0.5);
    EXPECT_DOUBLE_EQ(weight_survival(WeightSpec{{GaussianWeight{100, 1000}}}, std::vector<double>{100.0}), 0.5);
    EXPECT_DOUBLE_EQ(weight_survival(WeightSpec{{UniformWeight{0, 1}}}, std::vector<double>{0.25}), 0.75);
    EXPECT_DOUBLE_EQ(weight_survival(WeightSpec{{UniformWeight{0, 1}}}, std::vector<double>{-3.0}), 1.0);
    EXPECT_DOUBLE_EQ(weight_survival(WeightSpec{{UniformWeight{0, 1}}}, std::vector<double>{3.0}), 0.0);
}

TEST(WeightSurvival, MatchesQuadratureOfDensity) {
    const double mu = 0.3;
    const double sigma = 1.7;
    for (double t : {-4.0, -1.0, 0.0, 0.5, 2.5}) {
        const double want =
            oracle::integrate([&](double s) { return oracle::gaussian_density(s, mu, sigma); }, t, mu + 40 * sigma);
        EXPECT_NEAR(weight_survival(WeightSpec{{GaussianWeight{mu, sigma}}}, std::vector<double>{t}), want, 1e-10);
    }
    // Product over coordinates.
    const WeightSpec w{{GaussianWeight{0, 1}, UniformWeight{-1, 3}}};
    EXPECT_NEAR(weight_survival(w, std::vector<double>{0.0, 1.0}), 0.5 * 0.5, 1e-15);
}

TEST(WeightSpec, ParseAndValidate) {
    EXPECT_EQ(parse_coordinate_weight("gaussian:100:1000"), CoordinateWeight(GaussianWeight{100, 1000}));
    EXPECT_EQ(parse_coordinate_weight("uniform:-1:2.5"), CoordinateWeight(UniformWeight{-1, 2.5}));
    EXPECT_EQ(to_string(parse_coordinate_weight("gaussian:100:1000")), "gaussian:100:1000");
    EXPECT_THROW(parse_coordinate_weight("cauchy:0:1"), ConfigError);
    EXPECT_THROW(parse_coordinate_weight("gaussian:0"), ConfigError);
    EXPECT_THROW(parse_coordinate_weight("gaussian:0:x"), ConfigError);
    EXPECT_THROW((WeightSpec{{GaussianWeight{0, 0}}}.validate()), ConfigError);
    EXPECT_THROW((WeightSpec{{UniformWeight{1, 1}}}.validate()), ConfigError);
    EXPECT_THROW(WeightSpec{}.validate(), ConfigError);
}

TEST(GramIndicator, WorkedExamples) {
    const LatticeShape s = LatticeShape::cube(2, 1);
    const WeightSpec w{{GaussianWeight{0, 1}}};
    const GramMatrix g = gram_indicator_cvm(ObservationField(s, 1, {0.0, 0.0}), w);
    EXPECT_DOUBLE_EQ(g(0, 1), 0.5);

    const GramMatrix h = gram_indicator_cvm(ObservationField(s, 1, {-1e6, 0.7}), w);
    EXPECT_DOUBLE_EQ(h(0, 1), weight_survival(w, std::vector<double>{0.7}));
    EXPECT_DOUBLE_EQ(h(0, 0), 1.0);
}

TEST(GramIndicator, MatchesQuadratureOfIndicatorProduct) {
    std::mt19937_64 rng(17);
    const LatticeShape s = LatticeShape::cube(3, 2);
    const ObservationField f = oracle::random_field(s, 1, rng);
    const GramMatrix g = gram_indicator_cvm(f, WeightSpec{{GaussianWeight{0, 1}}});
    for (Index i = 0; i < s.points(); ++i) {
        for (Index j = 0; j < s.points(); ++j) {
            const double lo = std::max(f.at(i)[0], f.at(j)[0]);
            // The integrand 1{x_i <= t} 1{x_j <= t} phi(t) vanishes below max(x_i, x_j).
            const double want = oracle::integrate([](double t) { return oracle::gaussian_density(t, 0, 1); }, lo, 40.0);
            EXPECT_NEAR(g(i, j), want, 1e-8) << i << "," << j;
        }
    }
}

TEST(GramIndicator, SymmetricBoundedAndPsd) {
    std::mt19937_64 rng(23);
    const LatticeShape s = LatticeShape::cube(4, 2);
    const ObservationField f = oracle::random_field(s, 2, rng);
    const GramMatrix g = gram_indicator_cvm(f, WeightSpec{{GaussianWeight{0, 1}, UniformWeight{-2, 2}}}, 3);
    const Index n = g.size();
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < n; ++j) {
            EXPECT_EQ(g(i, j), g(j, i));
            EXPECT_GE(g(i, j), 0.0);
            EXPECT_LE(g(i, j), std::min(g(i, i), g(j, j)));
        }
    }
    // x^T G x >= 0 for random directions.
    std::normal_distribution<double> normal;
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(n);
        for (double& v : x) {
            v = normal(rng);
        }
        double q = 0;
        for (Index i = 0; i < n; ++i) {
            for (Index j = 0; j < n; ++j) {
                q += x[i] * g(i, j) * x[j];
            }
        }
        EXPECT_GE(q, -1e-8);
    }
}

TEST(GramIndicator, ScalarCaseIsMinOfSurvivals) {
    std::mt19937_64 rng(29);
    const LatticeShape s = LatticeShape::cube(6, 1);
    const ObservationField f = oracle::random_field(s, 1, rng);
    const WeightSpec w = WeightSpec::simulation_default(1);
    const GramMatrix g = gram_indicator_cvm(f, w);
    for (Index i = 0; i < 6; ++i) {
        for (Index j = 0; j < 6; ++j) {
            const double si = weight_survival(w, f.at(i));
            const double sj = weight_survival(w, f.at(j));
            EXPECT_EQ(g(i, j), std::min(si, sj));
        }
    }
}

TEST(GramIndicator, ThreadCountDoesNotChangeEntries) {
    std::mt19937_64 rng(31);
    const ObservationField f = oracle::random_field(LatticeShape::cube(5, 2), 2, rng);
    const WeightSpec w = WeightSpec::simulation_default(2);
    EXPECT_EQ(gram_indicator_cvm(f, w, 1).entries, gram_indicator_cvm(f, w, 4).entries);
}

TEST(GramIndicator, WeightDimensionMustMatch) {
    const ObservationField f(LatticeShape::cube(2, 1), 2);
    EXPECT_THROW(gram_indicator_cvm(f, WeightSpec::simulation_default(1)), ConfigError);
}

TEST(GramEuclidean, WorkedExamples) {
    const LatticeShape s = LatticeShape::cube(2, 1);
    const GramMatrix g = gram_euclidean(ObservationField(s, 2, {1, 0, 0, 1}));
    EXPECT_EQ(g.entries, (std::vector<double>{1, 0, 0, 1}));
    const GramMatrix h = gram_euclidean(ObservationField(LatticeShape::cube(3, 1), 2, {1, 2, 1, 2, 1, 2}));
    for (double e : h.entries) {
        EXPECT_EQ(e, 5.0);
    }
    EXPECT_EQ(h.total_sum, 45.0);
    EXPECT_EQ(h.row_sums[1], 15.0);
}

TEST(GramEuclidean, MatchesLoop) {
    std::mt19937_64 rng(37);
    const ObservationField f = oracle::random_field(LatticeShape::cube(4, 1), 2, rng);
    const GramMatrix g = gram_euclidean(f);
    for (Index i = 0; i < 4; ++i) {
        for (Index j = 0; j < 4; ++j) {
            EXPECT_EQ(g(i, j), f.at(i)[0] * f.at(j)[0] + f.at(i)[1] * f.at(j)[1]);
        }
    }
}

TEST(MeanAssignment, GlobalAndTwoGroup) {
    const LatticeShape s = LatticeShape::cube(3, 2);
    const MeanAssignment g = MeanAssignment::global(s);
    EXPECT_EQ(g.groups(), 1U);
    EXPECT_EQ(g.group_size(0), 9U);
    const MeanAssignment t = MeanAssignment::two_group(s, Block{{0, 0}, {2, 1}});
    EXPECT_EQ(t.groups(), 2U);
    EXPECT_EQ(t.group_size(t.group_of(0)), 2U);
    EXPECT_EQ(t.group_size(t.group_of(8)), 7U);
    EXPECT_THROW(MeanAssignment::two_group(s, Block{{0, 0}, {3, 3}}), ConfigError);
    EXPECT_THROW(MeanAssignment::two_group(s, Block{{0, 0}, {4, 3}}), IndexError);
}

TEST(CenterGram, GlobalRowSumsVanishAndConstantGivesZero) {
    std::mt19937_64 rng(41);
    const LatticeShape s = LatticeShape::cube(4, 2);
    const GramMatrix g = gram_indicator_cvm(oracle::random_field(s, 1, rng), WeightSpec{{GaussianWeight{0, 1}}});
    const GramMatrix c = center_gram(g, MeanAssignment::global(s));
    for (double r : c.row_sums) {
        EXPECT_NEAR(r, 0.0, 1e-13);
    }
    const GramMatrix k = center_gram(gram_euclidean(ObservationField(s, 1, std::vector<double>(16, 3.0))),
                                     MeanAssignment::global(s));
    for (double e : k.entries) {
        EXPECT_NEAR(e, 0.0, 1e-13);
    }
}

TEST(CenterGram, TwoGroupMatchesExpansion) {
    const LatticeShape s = LatticeShape::cube(4, 1);
    GramMatrix g{s, {4, 1, 2, 0, 1, 3, 1, 1, 2, 1, 5, 2, 0, 1, 2, 6}, {}, 0.0};
    g.refresh_sums();
    const MeanAssignment m = MeanAssignment::two_group(s, Block{{1}, {3}});
    const GramMatrix c = center_gram(g, m);
    const std::vector<Index> labels(m.labels().begin(), m.labels().end());
    const auto want = oracle::centered_gram(g, labels);
    for (Index k = 0; k < 16; ++k) {
        EXPECT_NEAR(c.entries[k], want[k], 1e-14);
    }
}

TEST(CenterGram, AgreesWithGramOfCenteredField) {
    std::mt19937_64 rng(43);
    const LatticeShape s = LatticeShape::cube(3, 2);
    const ObservationField f = oracle::random_field(s, 3, rng);
    for (const MeanAssignment& m : {MeanAssignment::global(s), MeanAssignment::two_group(s, Block{{1, 0}, {3, 2}})}) {
        const GramMatrix a = center_gram(gram_euclidean(f), m);
        const GramMatrix b = gram_euclidean(center_field(f, m));
        for (Index k = 0; k < a.entries.size(); ++k) {
            EXPECT_NEAR(a.entries[k], b.entries[k], 1e-12);
        }
    }
}
