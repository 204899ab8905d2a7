#include <gtest/gtest.h>

#include <set>

#include "snnlap/rng.hpp"

using namespace snnlap;

TEST(Philox, KnownAnswerZero) {
  const auto out = Philox4x64::block({0, 0, 0, 0}, {0, 0});
  EXPECT_EQ(out[0], 0x16554d9eca36314cULL);
  EXPECT_EQ(out[1], 0xdb20fe9d672d0fdcULL);
  EXPECT_EQ(out[2], 0xd7e772cee186176bULL);
  EXPECT_EQ(out[3], 0x7e68b68aec7ba23bULL);
}

TEST(Philox, KnownAnswerAllOnesKey) {
  const std::uint64_t ones = ~std::uint64_t{0};
  const auto out = Philox4x64::block({0, 0, 0, 0}, {ones, ones});
  EXPECT_EQ(out[0], 0x44b7493d1acfc229ULL);
  EXPECT_EQ(out[1], 0x6636af8e997921ddULL);
  EXPECT_EQ(out[2], 0x3f73e132b5b3780eULL);
  EXPECT_EQ(out[3], 0x605644dde03b01b1ULL);
}

TEST(Philox, KnownAnswerPiDigits) {
  const auto out = Philox4x64::block(
      {0x243f6a8885a308d3ULL, 0x13198a2e03707344ULL, 0xa4093822299f31d0ULL, 0x082efa98ec4e6c89ULL},
      {0x452821e638d01377ULL, 0xbe5466cf34e90c6cULL});
  EXPECT_EQ(out[0], 0xa528f45403e61d95ULL);
  EXPECT_EQ(out[1], 0x38c72dbd566e9788ULL);
  EXPECT_EQ(out[2], 0xa5a1610e72fd18b5ULL);
  EXPECT_EQ(out[3], 0x57bd43b5e52b7fe6ULL);
}

TEST(RandomStream, SameTripleSameSequence) {
  RandomStream a(7, StreamPurpose::Sampling, 3), b(7, StreamPurpose::Sampling, 3);
  for (int i = 0; i < 100; ++i) EXPECT_EQ(a.next_u64(), b.next_u64());
}

TEST(RandomStream, DistinctTriplesDiffer) {
  std::set<std::uint64_t> firsts;
  for (std::uint64_t seed : {1, 2})
    for (auto purpose : {StreamPurpose::Sampling, StreamPurpose::Trials})
      for (std::uint64_t idx : {0, 1}) firsts.insert(RandomStream(seed, purpose, idx).next_u64());
  EXPECT_EQ(firsts.size(), 8u);
}

TEST(RandomStream, UniformInRangeWithSensibleMean) {
  RandomStream r(1, StreamPurpose::Test, 0);
  double sum = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double u = r.uniform();
    ASSERT_GE(u, 0.0);
    ASSERT_LT(u, 1.0);
    sum += u;
  }
  EXPECT_NEAR(sum / n, 0.5, 4.0 * std::sqrt(1.0 / 12.0 / n));
}

TEST(RandomStream, BelowStaysInBoundAndHitsAll) {
  RandomStream r(2, StreamPurpose::Test, 0);
  std::vector<int> hits(7, 0);
  for (int i = 0; i < 7000; ++i) {
    const auto v = r.below(7);
    ASSERT_LT(v, 7u);
    ++hits[v];
  }
  for (int h : hits) EXPECT_GT(h, 800);
}

TEST(RandomStream, NormalMoments) {
  RandomStream r(3, StreamPurpose::Test, 0);
  double s = 0.0, s2 = 0.0;
  const int n = 100000;
  for (int i = 0; i < n; ++i) {
    const double z = r.normal();
    s += z;
    s2 += z * z;
  }
  EXPECT_NEAR(s / n, 0.0, 0.02);
  EXPECT_NEAR(s2 / n, 1.0, 0.03);
}

TEST(DeriveSeed, MixesChildren) {
  EXPECT_NE(derive_seed(1, 0), derive_seed(1, 1));
  EXPECT_NE(derive_seed(1, 0), derive_seed(2, 0));
  EXPECT_EQ(derive_seed(5, 9), derive_seed(5, 9));
}
