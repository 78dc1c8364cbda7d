#include <lfs/error.hpp>
#include <lfs/margin.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <random>

using namespace lfs;

namespace {

LogitRow make_row(const std::vector<double>& c, std::size_t y, double s) { return {c, y, s}; }

std::vector<MarginSpec> margin_specs()
{
    return {MarginSpec::plain(), MarginSpec::angular(2), MarginSpec::additive_angular(0.5), MarginSpec::additive(0.35),
            MarginSpec::combined(2, 0.3, 0.2)};
}

} // namespace

TEST(MarginSpec, FactoriesRejectOutOfRange)
{
    EXPECT_THROW(MarginSpec::angular(0), ContractError);
    EXPECT_THROW(MarginSpec::additive_angular(0.0), ContractError);
    EXPECT_THROW(MarginSpec::additive(-0.1), ContractError);
    EXPECT_THROW(MarginSpec::combined(1, -0.1, 0.0), ContractError);
    EXPECT_THROW(MarginSpec::unified(0.5), ContractError);
    EXPECT_NO_THROW(MarginSpec::unified(0.0));
    EXPECT_EQ(MarginSpec::additive(0.35).describe(), "am(m3=0.35)");
}

TEST(MarginTransform, SpecExamples)
{
    EXPECT_EQ(margin_transform(MarginSpec::plain(), 0.7), 0.7);
    EXPECT_NEAR(margin_transform(MarginSpec::additive(0.35), 0.7), 0.35, 1e-15);
    EXPECT_NEAR(margin_transform(MarginSpec::additive_angular(0.5), 0.7), std::cos(std::acos(0.7) + 0.5), 1e-15);
    EXPECT_NEAR(margin_transform(MarginSpec::angular(3), 0.2), std::cos(3.0 * std::acos(0.2)), 1e-14);
    EXPECT_NEAR(margin_transform(MarginSpec::combined(2, 0.3, 0.2), -0.4), std::cos(2.0 * std::acos(-0.4) + 0.3) - 0.2,
                1e-14);
    EXPECT_THROW(margin_transform(MarginSpec::unified(-1.0), 0.5), ContractError);
}

TEST(MarginTransform, DerivativeMatchesFiniteDifference)
{
    for (const auto& spec : margin_specs()) {
        for (double c : {-0.8, -0.3, 0.1, 0.55, 0.9}) {
            const double step = 1e-6;
            const double fd =
                (margin_transform(spec, c + step) - margin_transform(spec, c - step)) / (2.0 * step);
            EXPECT_LE(oracle::relative_error(margin_transform_derivative(spec, c), fd, 1e-3), 1e-6)
                << spec.describe() << " at " << c;
        }
    }
}

TEST(SoftmaxProbability, SymmetryAndSingleClass)
{
    for (double s : {1.0, 32.0, 64.0}) {
        EXPECT_DOUBLE_EQ(softmax_probability(make_row({0.3, 0.3}, 1, s)), 0.5);
    }
    EXPECT_EQ(softmax_probability(make_row({0.1}, 0, 32.0)), 1.0);
}

TEST(SoftmaxProbability, MatchesNaiveFormula)
{
    std::mt19937_64 gen(21);
    for (int t = 0; t < 200; ++t) {
        const auto c = oracle::random_cosines(gen, 4);
        const std::size_t y = t % 4;
        const double want = static_cast<double>(oracle::softmax_target(c, y, 32.0, c[y]));
        EXPECT_LE(oracle::relative_error(softmax_probability(make_row(c, y, 32.0)), want, 1e-300), 1e-12);
    }
}

TEST(SoftmaxTarget, ComplementKeepsPrecision)
{
    // p is 1 - ~e^-120, so 1 - p must come from the log domain rather than subtraction.
    const auto t = softmax_target(make_row({1.0, -1.0}, 0, 60.0));
    EXPECT_EQ(t.value, 1.0);
    EXPECT_NEAR(t.complement / std::exp(-120.0), 1.0, 1e-12);
}

TEST(MarginProbability, PlainEqualsSoftmaxExactly)
{
    std::mt19937_64 gen(22);
    for (int t = 0; t < 100; ++t) {
        const auto c = oracle::random_cosines(gen, 6);
        const auto row = make_row(c, t % 6, 32.0);
        EXPECT_EQ(margin_probability(MarginSpec::plain(), row), softmax_probability(row));
    }
}

TEST(MarginProbability, AdditiveReducesProbability)
{
    std::mt19937_64 gen(23);
    for (int t = 0; t < 200; ++t) {
        const auto c = oracle::random_cosines(gen, 2 + t % 5);
        const auto row = make_row(c, 0, 4.0);
        EXPECT_LT(margin_probability(MarginSpec::additive(0.35), row), softmax_probability(row));
    }
}

TEST(MarginProbability, MatchesNaiveFormula)
{
    std::mt19937_64 gen(24);
    for (const auto& spec : margin_specs()) {
        for (int t = 0; t < 50; ++t) {
            const auto c = oracle::random_cosines(gen, 5);
            const std::size_t y = t % 5;
            const double f = margin_transform(spec, c[y]);
            const double want = static_cast<double>(oracle::softmax_target(c, y, 16.0, f));
            EXPECT_LE(oracle::relative_error(margin_probability(spec, make_row(c, y, 16.0)), want, 1e-300), 1e-12);
        }
    }
}

TEST(MarginProbability, IdentityWithModulatingFunctionK3)
{
    std::mt19937_64 gen(25);
    const auto spec = MarginSpec::additive(0.35);
    for (int t = 0; t < 200; ++t) {
        const auto c = oracle::random_cosines(gen, 3);
        const auto row = make_row(c, t % 3, 32.0);
        const double a = modulating_factor(spec, c[row.label], 32.0);
        const double pm = margin_probability(spec, row);
        const double via_h = modulating_function(a, softmax_target(row)) * softmax_probability(row);
        EXPECT_LE(oracle::relative_error(via_h, pm, 1e-300), 1e-9);
    }
}

TEST(ModulatingFactor, TableExamples)
{
    for (double c : {-1.0, -0.3, 0.0, 0.5, 1.0}) {
        EXPECT_EQ(modulating_factor(MarginSpec::plain(), c, 32.0), 0.0);
    }
    const double am = modulating_factor(MarginSpec::additive(0.35), 0.2, 32.0);
    EXPECT_NEAR(am / (1.0 - std::exp(11.2)), 1.0, 1e-14);
    EXPECT_NEAR(am, -7.3129e4, 0.5);
    const double arc = modulating_factor(MarginSpec::additive_angular(0.5), 0.7, 32.0);
    EXPECT_NEAR(arc / (1.0 - std::exp(32.0 * (0.7 - std::cos(std::acos(0.7) + 0.5)))), 1.0, 1e-12);
    EXPECT_THROW(modulating_factor(MarginSpec::unified(-1.0), 0.3, 32.0), ContractError);
}

TEST(ModulatingFactor, AngularCanBePositive)
{
    // theta near pi: cos(2 theta) is close to 1, well above cos(theta).
    EXPECT_GT(modulating_factor(MarginSpec::angular(2), -0.95, 16.0), 0.0);
}

TEST(ModulatingFunction, Examples)
{
    for (double p : {0.01, 0.5, 1.0}) {
        EXPECT_EQ(modulating_function(0.0, p), 1.0);
    }
    EXPECT_NEAR(modulating_function(-1.0, 0.5), 2.0 / 3.0, 1e-15);
    EXPECT_NEAR(modulating_function(-10000.0, 0.9), 1.0 / 1001.0, 1e-15);
    EXPECT_THROW(modulating_function(0.1, 0.5), ContractError);
    EXPECT_THROW(modulating_function(-1.0, 1.5), ContractError);
}

TEST(ModulatingFunction, ReductionAndMonotonicity)
{
    std::mt19937_64 gen(26);
    std::uniform_real_distribution<double> ua(-1e4, 0.0);
    std::uniform_real_distribution<double> up(1e-6, 1.0);
    for (int t = 0; t < 20000; ++t) {
        const double a = ua(gen);
        const double p = up(gen);
        const double h = modulating_function(a, p);
        ASSERT_GT(h, 0.0);
        ASSERT_LE(h, 1.0);
        ASSERT_LE(h * p, p);
        const double a2 = a + (0.0 - a) * 0.5;
        if (a < -1e-9 && p < 1.0) {
            ASSERT_LT(h, modulating_function(a2, p)) << a << " " << p;
        }
        const double p2 = p + (1.0 - p) * 0.5;
        if (a < -1e-9 && p < 1.0 - 1e-9) {
            ASSERT_LT(h, modulating_function(a, p2)) << a << " " << p;
        }
    }
}

TEST(UnifiedLoss, Examples)
{
    EXPECT_NEAR(unified_loss(0.0, make_row({0.4, 0.4}, 0, 32.0)), std::log(2.0), 1e-15);
    // cosines equal -> p = 0.5
    EXPECT_NEAR(unified_loss(-1.0, make_row({-0.2, -0.2}, 1, 7.0)), std::log(3.0), 1e-14);
    EXPECT_THROW(unified_loss(1e-3, make_row({0.4, 0.4}, 0, 32.0)), ContractError);
}

TEST(UnifiedLoss, ZeroFactorIsCrossEntropyExactly)
{
    std::mt19937_64 gen(27);
    for (int t = 0; t < 100; ++t) {
        const auto c = oracle::random_cosines(gen, 7);
        const auto row = make_row(c, t % 7, 32.0);
        EXPECT_EQ(unified_loss(0.0, row), -softmax_target(row).log_value);
        EXPECT_EQ(unified_loss(0.0, row), margin_loss(MarginSpec::plain(), row));
    }
}

TEST(UnifiedLoss, MatchesAdditiveMarginWithEqualFactor)
{
    std::mt19937_64 gen(28);
    for (int t = 0; t < 100; ++t) {
        const auto c = oracle::random_cosines(gen, 5);
        const double s = 32.0;
        const auto row = make_row(c, t % 5, s);
        // a = 1 - e^{s m3}  =>  m3 = log(1 - a) / s
        const double m3 = std::log1p(100.0) / s;
        const auto spec = MarginSpec::additive(m3);
        ASSERT_NEAR(modulating_factor(spec, c[row.label], s), -100.0, 1e-10);
        EXPECT_LE(oracle::relative_error(unified_loss(-100.0, row), margin_loss(spec, row), 1e-12), 1e-9);
    }
}

TEST(UnifiedLoss, NonNegative)
{
    std::mt19937_64 gen(29);
    std::uniform_real_distribution<double> ua(-1e4, 0.0);
    for (int t = 0; t < 1000; ++t) {
        const auto c = oracle::random_cosines(gen, 2 + t % 9);
        EXPECT_GE(unified_loss(ua(gen), make_row(c, 0, 32.0)), 0.0);
    }
}

TEST(UnifiedLossGradient, ZeroFactorIsScaledCrossEntropyGradient)
{
    std::mt19937_64 gen(30);
    for (int t = 0; t < 50; ++t) {
        const auto c = oracle::random_cosines(gen, 5);
        const std::size_t y = t % 5;
        const auto row = make_row(c, y, 32.0);
        const auto g = unified_loss_gradient(0.0, row);
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double pk = static_cast<double>(oracle::softmax_target(c, k, 32.0, c[k]));
            EXPECT_NEAR(g[k], 32.0 * (pk - (k == y ? 1.0 : 0.0)), 1e-10);
        }
    }
}

TEST(UnifiedLossGradient, MatchesCentralDifferences)
{
    std::mt19937_64 gen(31);
    std::uniform_real_distribution<double> loga(-1.0, 4.0);
    std::uniform_real_distribution<double> cosd(-0.9, 0.9);
    for (int t = 0; t < 100; ++t) {
        const double a = t % 5 == 0 ? 0.0 : -std::pow(10.0, loga(gen));
        const double s = std::vector<double>{1.0, 4.0, 16.0, 32.0}[t % 4];
        std::vector<double> c(2 + t % 6);
        for (auto& x : c) {
            x = cosd(gen);
        }
        const std::size_t y = t % c.size();
        const auto g = unified_loss_gradient(a, make_row(c, y, s));
        const auto f = [&](const std::vector<double>& x) { return unified_loss(a, make_row(x, y, s)); };
        double scale = 0.0;
        for (double v : g) {
            scale = std::max(scale, std::abs(v));
        }
        for (std::size_t k = 0; k < c.size(); ++k) {
            const double fd = oracle::central_difference(f, c, k, 1e-6);
            EXPECT_LE(std::abs(g[k] - fd) / std::max(std::abs(fd), 1e-3 * scale + 1e-12), 1e-5)
                << "a=" << a << " s=" << s << " k=" << k;
        }
    }
}

TEST(UnifiedLossGradient, SymmetricRowHasEqualOffTargetComponents)
{
    const auto g = unified_loss_gradient(-10.0, make_row({0.2, 0.2, 0.2}, 1, 32.0));
    EXPECT_EQ(g[0], g[2]);
    EXPECT_LT(g[1], 0.0);
}

TEST(MarginLoss, Examples)
{
    EXPECT_NEAR(margin_loss(MarginSpec::plain(), make_row({0.1, 0.1, 0.1, 0.1}, 2, 32.0)), std::log(4.0), 1e-14);
    std::mt19937_64 gen(32);
    for (int t = 0; t < 50; ++t) {
        const auto c = oracle::random_cosines(gen, 4);
        const auto row = make_row(c, 1, 32.0);
        const auto spec = MarginSpec::additive(0.35);
        const double a = modulating_factor(spec, c[1], 32.0);
        EXPECT_LE(oracle::relative_error(margin_loss(spec, row), unified_loss(a, row), 1e-12), 1e-9);
    }
}

TEST(MarginLoss, AdditiveNonIncreasingInTargetCosine)
{
    std::vector<double> c{0.0, 0.3, -0.2, 0.5};
    double previous = INFINITY;
    for (int i = 0; i <= 200; ++i) {
        c[0] = -1.0 + i / 100.0;
        const double l = margin_loss(MarginSpec::additive(0.35), make_row(c, 0, 32.0));
        EXPECT_LE(l, previous);
        previous = l;
    }
}

TEST(MarginLossGradient, MatchesCentralDifferences)
{
    std::mt19937_64 gen(33);
    std::uniform_real_distribution<double> cosd(-0.9, 0.9);
    for (const auto& spec : margin_specs()) {
        for (int t = 0; t < 20; ++t) {
            std::vector<double> c(3 + t % 4);
            for (auto& x : c) {
                x = cosd(gen);
            }
            const std::size_t y = t % c.size();
            const double s = 16.0;
            const auto g = margin_loss_gradient(spec, make_row(c, y, s));
            const auto f = [&](const std::vector<double>& x) { return margin_loss(spec, make_row(x, y, s)); };
            for (std::size_t k = 0; k < c.size(); ++k) {
                const double fd = oracle::central_difference(f, c, k, 1e-6);
                EXPECT_NEAR(g[k], fd, 1e-5 * std::max(1.0, std::abs(fd))) << spec.describe() << " k=" << k;
            }
        }
    }
}

TEST(LossAndGradient, PlainAndUnifiedZeroAgreeBitForBit)
{
    std::mt19937_64 gen(34);
    for (int t = 0; t < 50; ++t) {
        const auto c = oracle::random_cosines(gen, 6);
        const auto row = make_row(c, t % 6, 32.0);
        std::vector<double> g1(6), g2(6);
        EXPECT_EQ(loss_and_gradient(MarginSpec::plain(), row, g1), loss_and_gradient(MarginSpec::unified(0.0), row, g2));
        EXPECT_EQ(g1, g2);
    }
}

TEST(LogitRow, ValidationRejectsBadRows)
{
    std::vector<double> c{0.1, 1.5};
    EXPECT_THROW(validate(make_row(c, 0, 1.0)), ContractError);
    std::vector<double> ok{0.1, 0.2};
    EXPECT_THROW(validate(make_row(ok, 2, 1.0)), ContractError);
    EXPECT_THROW(validate(make_row(ok, 0, 0.0)), ContractError);
}
