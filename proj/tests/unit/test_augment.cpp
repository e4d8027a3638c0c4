#include <gtest/gtest.h>

#include "helpers.hpp"
#include "sdmae/augment.hpp"
#include "sdmae/data.hpp"
#include "sdmae/error.hpp"

using namespace sdmae;
using testing_support::random_image;

namespace {

Frame frame_of(const Image& img, int index = 0) { return Frame{img, index}; }

OverlayEvent square_event(int size, int len, double value) {
  OverlayEvent e;
  e.event_id = "sq";
  for (int i = 0; i < len; ++i) {
    e.clip.emplace_back(size, size, 1, value + 0.01 * i);
    e.masks.emplace_back(size, size, 1, 1.0);
  }
  return e;
}

}  // namespace

TEST(Composite, ZeroMaskIsIdentity) {
  Rng rng(1);
  const Frame f = frame_of(random_image(16, 16, 1, rng));
  const Image ev = random_image(6, 6, 1, rng);
  const BinaryMap mask(6, 6, 1, 0.0);
  const auto [out, amap] = composite_event(f, ev, mask, {3, 4});
  EXPECT_EQ(out.pixels, f.pixels);
  EXPECT_EQ(count_nonzero(amap), 0u);
}

TEST(Composite, FourByFourFullMaskChangesSixteenPixels) {
  const Frame f = frame_of(Image(10, 10, 1, 0.5));
  const Image ev(4, 4, 1, 0.9);
  const BinaryMap mask(4, 4, 1, 1.0);
  const auto [out, amap] = composite_event(f, ev, mask, {2, 5});
  int changed = 0;
  for (int r = 0; r < 10; ++r)
    for (int c = 0; c < 10; ++c)
      if (out.pixels.at(r, c) != f.pixels.at(r, c)) {
        ++changed;
        EXPECT_DOUBLE_EQ(out.pixels.at(r, c), 0.9);
      }
  EXPECT_EQ(changed, 16);
  double sum = 0.0;
  for (double v : amap.data()) sum += v;
  EXPECT_DOUBLE_EQ(sum, 16.0);
}

TEST(Composite, CornerFullFrameEvent) {
  Rng rng(5);
  const Frame f = frame_of(random_image(8, 8, 1, rng));
  const Image ev = random_image(8, 8, 1, rng);
  BinaryMap mask(8, 8, 1, 0.0);
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) mask.at(r, c) = (r + c) % 2;
  const auto [out, amap] = composite_event(f, ev, mask, {0, 0});
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c)
      EXPECT_DOUBLE_EQ(out.pixels.at(r, c), mask.at(r, c) == 1.0 ? ev.at(r, c) : f.pixels.at(r, c));
  EXPECT_EQ(amap, mask);
}

TEST(Composite, RgbEventOnGrayFrame) {
  const Frame f = frame_of(Image(6, 6, 1, 0.0));
  Image ev(2, 2, 3, 0.0);
  for (int r = 0; r < 2; ++r)
    for (int c = 0; c < 2; ++c) ev.at(r, c, 1) = 1.0;
  const auto [out, amap] = composite_event(f, ev, BinaryMap(2, 2, 1, 1.0), {1, 1});
  EXPECT_EQ(out.pixels.channels(), 1);
  EXPECT_NEAR(out.pixels.at(1, 1), 0.587, 1e-12);
}

TEST(Composite, OutOfBoundsRejected) {
  const Frame f = frame_of(Image(6, 6, 1, 0.0));
  EXPECT_THROW(composite_event(f, Image(3, 3, 1), BinaryMap(3, 3, 1, 1.0), {4, 0}), ShapeError);
  EXPECT_THROW(composite_event(f, Image(3, 3, 1), BinaryMap(3, 3, 1, 1.0), {-1, 0}), ShapeError);
}

TEST(Composite, NeverTouchesUnmaskedPixels) {
  Rng rng(9);
  for (int trial = 0; trial < 100; ++trial) {
    const Frame f = frame_of(random_image(12, 12, 1, rng));
    const int s = 1 + static_cast<int>(rng.below(12));
    const Image ev = random_image(s, s, 1, rng);
    BinaryMap mask(s, s, 1);
    for (double& v : mask.data()) v = rng.bernoulli(0.5) ? 1.0 : 0.0;
    const PixelPos pos{static_cast<int>(rng.below(13 - s)), static_cast<int>(rng.below(13 - s))};
    const auto [out, amap] = composite_event(f, ev, mask, pos);
    for (int r = 0; r < 12; ++r)
      for (int c = 0; c < 12; ++c)
        if (amap.at(r, c) == 0.0) ASSERT_EQ(out.pixels.at(r, c), f.pixels.at(r, c));
  }
}

TEST(TrainingSample, NoAugmentationAtZero) {
  Rng rng(2);
  const Frame prev = frame_of(random_image(16, 16, 1, rng), 0);
  const Frame cur = frame_of(random_image(16, 16, 1, rng), 1);
  const std::vector<OverlayEvent> bank{square_event(4, 5, 0.1)};
  for (int i = 0; i < 50; ++i) {
    const TrainingSample s = make_training_sample(prev, cur, bank, 0.0, rng);
    EXPECT_FALSE(s.augmented);
    EXPECT_EQ(s.input_frame.pixels, s.target_frame.pixels);
    EXPECT_EQ(s.prev_frame.pixels, prev.pixels);
    EXPECT_EQ(count_nonzero(s.anomaly_map), 0u);
  }
}

TEST(TrainingSample, AlwaysAugmentedAtOneDiffOnMaskSupport) {
  Rng rng(3);
  const Frame prev = frame_of(Image(16, 16, 1, 0.5), 0);
  const Frame cur = frame_of(Image(16, 16, 1, 0.5), 1);
  const std::vector<OverlayEvent> bank{square_event(5, 6, 0.1)};
  for (int i = 0; i < 50; ++i) {
    const TrainingSample s = make_training_sample(prev, cur, bank, 1.0, rng);
    ASSERT_TRUE(s.augmented);
    EXPECT_EQ(s.target_frame.pixels, cur.pixels);
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c)
        EXPECT_EQ(s.input_frame.pixels.at(r, c) != cur.pixels.at(r, c), s.anomaly_map.at(r, c) == 1.0);
    EXPECT_EQ(count_nonzero(s.anomaly_map), 25u);
    // the predecessor carries the previous clip frame at the same place
    for (int r = 0; r < 16; ++r)
      for (int c = 0; c < 16; ++c)
        if (s.anomaly_map.at(r, c) == 1.0)
          EXPECT_NEAR(s.input_frame.pixels.at(r, c) - s.prev_frame.pixels.at(r, c), 0.01, 1e-12);
  }
}

TEST(TrainingSample, QuarterProbabilityStatistics) {
  Rng rng(4);
  const Frame prev = frame_of(Image(8, 8, 1, 0.5), 0);
  const Frame cur = frame_of(Image(8, 8, 1, 0.5), 1);
  const std::vector<OverlayEvent> bank{square_event(3, 4, 0.1)};
  int hits = 0;
  for (int i = 0; i < 10000; ++i) hits += make_training_sample(prev, cur, bank, 0.25, rng).augmented ? 1 : 0;
  EXPECT_NEAR(hits / 10000.0, 0.25, 0.02);
}

TEST(TrainingSample, EmptyBankWithPositiveProbability) {
  Rng rng(5);
  const Frame f = frame_of(Image(8, 8, 1, 0.5));
  EXPECT_THROW(make_training_sample(f, f, {}, 0.5, rng), DataError);
  EXPECT_NO_THROW(make_training_sample(f, f, {}, 0.0, rng));
}

TEST(TrainingSample, OversizedEventIsShrunk) {
  Rng rng(6);
  const Frame f = frame_of(Image(8, 8, 1, 0.5));
  const std::vector<OverlayEvent> bank{square_event(20, 3, 0.1)};
  const TrainingSample s = make_training_sample(f, f, bank, 1.0, rng);
  EXPECT_TRUE(s.augmented);
  EXPECT_GT(count_nonzero(s.anomaly_map), 0u);
}
