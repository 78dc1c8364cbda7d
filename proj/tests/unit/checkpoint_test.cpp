#include <lfs/checkpoint.hpp>
#include <lfs/error.hpp>

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <bit>
#include <cstring>
#include <fstream>

using namespace lfs;

namespace {

Network sample_net() { return init_network(std::vector<std::size_t>{6, 5, 3}, 4, 32.0, RngStream(9, "ckpt")); }

std::uint32_t read_u32(const std::vector<std::byte>& b, std::size_t at)
{
    std::uint32_t v = 0;
    for (int i = 3; i >= 0; --i) {
        v = (v << 8) | std::to_integer<std::uint32_t>(b[at + i]);
    }
    return v;
}

} // namespace

TEST(Checkpoint, RoundTripIsBitExact)
{
    const auto net = sample_net();
    EXPECT_EQ(decode_checkpoint(encode_checkpoint(net)), net);
}

TEST(Checkpoint, LayoutHeader)
{
    const auto bytes = encode_checkpoint(sample_net());
    ASSERT_GE(bytes.size(), 8U);
    EXPECT_EQ(std::memcmp(bytes.data(), "LFS1", 4), 0);
    EXPECT_EQ(read_u32(bytes, 4), 2U);
    EXPECT_EQ(read_u32(bytes, 8), 5U);  // rows of the first layer
    EXPECT_EQ(read_u32(bytes, 12), 6U); // cols
    // magic + count + 2 layers (shape + weights + biases) + head (K, d, s, weights)
    const std::size_t expected = 4 + 4 + (8 + 8 * (30 + 5)) + (8 + 8 * (15 + 3)) + (8 + 8 + 8 * 12);
    EXPECT_EQ(bytes.size(), expected);
}

TEST(Checkpoint, BadMagicRejected)
{
    auto bytes = encode_checkpoint(sample_net());
    bytes[3] = std::byte{'2'};
    EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, EveryTruncationRejected)
{
    const auto bytes = encode_checkpoint(sample_net());
    for (std::size_t n = 0; n < bytes.size(); ++n) {
        EXPECT_THROW(decode_checkpoint(std::span(bytes.data(), n)), FormatError) << "length " << n;
    }
}

TEST(Checkpoint, TrailingBytesRejected)
{
    auto bytes = encode_checkpoint(sample_net());
    bytes.push_back(std::byte{0});
    EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, NonComposingShapesRejected)
{
    auto bytes = encode_checkpoint(sample_net());
    // second layer's column count lives right after the first layer block
    const std::size_t at = 8 + 8 + 8 * 35 + 4;
    ASSERT_EQ(read_u32(bytes, at), 5U);
    bytes[at] = std::byte{7};
    EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, NonFiniteWeightRejected)
{
    auto bytes = encode_checkpoint(sample_net());
    const double nan = std::nan("");
    std::memcpy(bytes.data() + 16, &nan, sizeof nan);
    EXPECT_THROW(decode_checkpoint(bytes), FormatError);
}

TEST(Checkpoint, FileRoundTripAndMissingFile)
{
    oracle::TempDir dir("ckpt");
    const auto net = sample_net();
    write_checkpoint(dir.path() / "m.lfs", net);
    EXPECT_EQ(read_checkpoint(dir.path() / "m.lfs"), net);
    EXPECT_THROW(read_checkpoint(dir.path() / "absent.lfs"), DataError);
}
