#include <lfs/error.hpp>
#include <lfs/model.hpp>

#include "network_oracle.hpp"
#include "oracles.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace lfs;

namespace {

Network small_net(std::uint64_t seed, std::vector<std::size_t> dims = {8, 16, 4}, std::size_t k = 3)
{
    return init_network(dims, k, 16.0, RngStream(seed, "model"));
}

DenseMatrix upstream_for(const Network& net, const ForwardCache& cache, const std::vector<std::size_t>& labels,
                         double a)
{
    DenseMatrix g(cache.cosines.rows(), cache.cosines.cols());
    for (std::size_t n = 0; n < g.rows(); ++n) {
        const auto row = unified_loss_gradient(a, LogitRow{cache.cosines.row(n), labels[n], net.head.scale});
        for (std::size_t k = 0; k < row.size(); ++k) {
            g(n, k) = row[k] / static_cast<double>(g.rows());
        }
    }
    return g;
}

} // namespace

TEST(InitNetwork, Shapes)
{
    const auto net = small_net(1);
    ASSERT_EQ(net.backbone.weights.size(), 2U);
    EXPECT_EQ(net.backbone.weights[0].rows(), 16U);
    EXPECT_EQ(net.backbone.weights[0].cols(), 8U);
    EXPECT_EQ(net.backbone.weights[1].rows(), 4U);
    EXPECT_EQ(net.backbone.weights[1].cols(), 16U);
    EXPECT_EQ(net.head.class_weights.rows(), 3U);
    EXPECT_EQ(net.head.class_weights.cols(), 4U);
    for (const auto& b : net.backbone.biases) {
        for (double v : b) {
            EXPECT_EQ(v, 0.0);
        }
    }
}

TEST(InitNetwork, DeterministicPerStream)
{
    EXPECT_EQ(small_net(5), small_net(5));
    EXPECT_NE(small_net(5), small_net(6));
}

TEST(InitNetwork, HeVariance)
{
    const auto net = init_network(std::vector<std::size_t>{200, 50, 8}, 4, 32.0, RngStream(2, "he"));
    const auto w = net.backbone.weights[0].values();
    ASSERT_EQ(w.size(), 10000U);
    double sq = 0.0;
    for (double v : w) {
        sq += v * v;
    }
    EXPECT_NEAR(sq / w.size(), 2.0 / 200.0, 0.2 * 2.0 / 200.0);
}

TEST(InitNetwork, DegenerateDimsThrow)
{
    EXPECT_THROW(init_network(std::vector<std::size_t>{8}, 3, 1.0, RngStream(0, "m")), ContractError);
    EXPECT_THROW(init_network(std::vector<std::size_t>{8, 0, 4}, 3, 1.0, RngStream(0, "m")), ContractError);
    EXPECT_THROW(init_network(std::vector<std::size_t>{8, 4}, 1, 1.0, RngStream(0, "m")), ContractError);
    EXPECT_THROW(init_network(std::vector<std::size_t>{8, 4}, 3, 0.0, RngStream(0, "m")), ContractError);
}

TEST(Forward, CosinesBoundedAndUnitNorms)
{
    std::mt19937_64 gen(3);
    const auto net = small_net(3);
    const auto batch = oracle::random_matrix(gen, 10, 8, 3.0);
    const auto cache = forward(net, batch);
    for (double c : cache.cosines.values()) {
        EXPECT_GE(c, -1.0);
        EXPECT_LE(c, 1.0);
    }
    for (std::size_t n = 0; n < 10; ++n) {
        EXPECT_NEAR(l2_norm(cache.normalized_embedding.row(n)), 1.0, 1e-12);
    }
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_NEAR(l2_norm(cache.normalized_weights.row(k)), 1.0, 1e-12);
    }
}

TEST(Forward, DuplicateRowsGiveDuplicateCosines)
{
    std::mt19937_64 gen(4);
    const auto net = small_net(4);
    auto batch = oracle::random_matrix(gen, 3, 8);
    std::copy(batch.row(0).begin(), batch.row(0).end(), batch.row(2).begin());
    const auto cache = forward(net, batch);
    for (std::size_t k = 0; k < 3; ++k) {
        EXPECT_EQ(cache.cosines(0, k), cache.cosines(2, k));
    }
}

TEST(Forward, MatchesStraightLineRecomputation)
{
    std::mt19937_64 gen(5);
    const auto net = small_net(5);
    const auto batch = oracle::random_matrix(gen, 4, 8);
    const auto cache = forward(net, batch);
    const auto want = oracle::cosines(net, batch);
    for (std::size_t n = 0; n < 4; ++n) {
        for (std::size_t k = 0; k < 3; ++k) {
            EXPECT_NEAR(cache.cosines(n, k), want[n][k], 1e-12);
        }
    }
}

TEST(Forward, InvariantToClassWeightRescaling)
{
    std::mt19937_64 gen(6);
    auto net = small_net(6);
    const auto batch = oracle::random_matrix(gen, 5, 8);
    const auto before = forward(net, batch).cosines;
    for (double& v : net.head.class_weights.row(1)) {
        v *= 2.0;
    }
    const auto after = forward(net, batch).cosines;
    for (std::size_t i = 0; i < before.size(); ++i) {
        EXPECT_NEAR(before.values()[i], after.values()[i], 1e-12);
    }
}

TEST(Forward, ShapeMismatchThrows)
{
    EXPECT_THROW(forward(small_net(7), DenseMatrix(2, 7)), ContractError);
}

TEST(Backward, ZeroUpstreamGivesZeroGradients)
{
    std::mt19937_64 gen(8);
    const auto net = small_net(8);
    const auto cache = forward(net, oracle::random_matrix(gen, 3, 8));
    const auto g = backward(net, cache, DenseMatrix(3, 3));
    EXPECT_EQ(g, zeros_like(net));
}

TEST(Backward, MatchesCentralDifferencesTwoLayer)
{
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        std::mt19937_64 gen(100 + seed);
        auto net = init_network(std::vector<std::size_t>{5, 6, 4}, 4, 8.0, RngStream(seed, "fd"));
        for (auto& b : net.backbone.biases) {
            for (double& v : b) {
                v = std::normal_distribution<double>(0.0, 0.1)(gen);
            }
        }
        const auto batch = oracle::random_matrix(gen, 3, 5);
        const std::vector<std::size_t> labels{0, 3, 1};
        const double a = seed % 3 == 0 ? 0.0 : -std::pow(10.0, static_cast<double>(seed % 4));

        const auto cache = forward(net, batch);
        auto grads = backward(net, cache, upstream_for(net, cache, labels, a));

        auto params = parameter_blocks(net);
        const auto g = parameter_blocks(std::as_const(grads));
        for (std::size_t b = 0; b < params.size(); ++b) {
            for (std::size_t i = 0; i < params[b].size(); ++i) {
                const double w0 = params[b][i];
                const double h = 1e-5;
                params[b][i] = w0 + h;
                const double up = oracle::mean_unified_loss(net, batch, labels, a);
                params[b][i] = w0 - h;
                const double down = oracle::mean_unified_loss(net, batch, labels, a);
                params[b][i] = w0;
                const double fd = (up - down) / (2.0 * h);
                EXPECT_LE(std::abs(g[b][i] - fd) / std::max(std::abs(fd), 1e-6), 1e-4)
                    << "seed " << seed << " block " << b << " index " << i << " analytic " << g[b][i] << " fd " << fd;
            }
        }
    }
}

TEST(Embed, MatchesForwardEmbedding)
{
    std::mt19937_64 gen(9);
    const auto net = small_net(9);
    const auto batch = oracle::random_matrix(gen, 6, 8);
    EXPECT_EQ(embed(net.backbone, batch), forward(net, batch).normalized_embedding);
}

TEST(ParameterDigest, ChangesWithAnyParameter)
{
    auto net = small_net(10);
    const auto d0 = parameter_digest(net);
    EXPECT_EQ(d0, parameter_digest(small_net(10)));
    net.backbone.biases[1][2] += 1e-12;
    EXPECT_NE(d0, parameter_digest(net));
}
