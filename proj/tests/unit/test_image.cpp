#include <gtest/gtest.h>

#include <fstream>

#include "helpers.hpp"
#include "sdmae/error.hpp"
#include "sdmae/image.hpp"
#include "sdmae/png_io.hpp"

using namespace sdmae;
using testing_support::TempDir;

TEST(Image, PngRoundTripGrayAndRgb) {
  TempDir dir("png");
  Rng rng(1);
  for (int c : {1, 3}) {
    Image img(5, 7, c);
    for (double& v : img.data()) v = static_cast<double>(rng.below(256)) / 255.0;
    const auto path = dir / ("img" + std::to_string(c) + ".png");
    write_png(path, img);
    const Image back = read_png(path);
    ASSERT_TRUE(back.same_shape(img));
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_NEAR(back.data()[i], img.data()[i], 1e-12);
  }
}

TEST(Image, ReadMissingPngNamesPath) {
  try {
    read_png("/nonexistent/x.png");
    FAIL();
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("/nonexistent/x.png"), std::string::npos);
  }
}

TEST(Image, UndecodableFileIsError) {
  TempDir dir("badpng");
  const auto p = dir / "bad.png";
  std::ofstream(p) << "not a png";
  EXPECT_THROW(read_png(p), Error);
}

TEST(Image, LumaConversion) {
  Image rgb(1, 1, 3);
  rgb.at(0, 0, 0) = 1.0;
  rgb.at(0, 0, 1) = 0.5;
  rgb.at(0, 0, 2) = 0.0;
  EXPECT_NEAR(convert_channels(rgb, 1).at(0, 0), 0.299 + 0.5 * 0.587, 1e-12);
  const Image back = convert_channels(convert_channels(rgb, 1), 3);
  EXPECT_EQ(back.channels(), 3);
  EXPECT_DOUBLE_EQ(back.at(0, 0, 0), back.at(0, 0, 2));
}

TEST(Image, ResizeIdentityAndConstant) {
  Rng rng(2);
  const Image img = testing_support::random_image(6, 9, 2, rng);
  EXPECT_EQ(resize_bilinear(img, 6, 9), img);
  EXPECT_EQ(resize_nearest(img, 6, 9), img);
  const Image flat(4, 4, 1, 0.3);
  const Image big = resize_bilinear(flat, 11, 13);
  for (double v : big.data()) EXPECT_NEAR(v, 0.3, 1e-12);
}

TEST(Image, ChannelSliceAndConcat) {
  Rng rng(4);
  const Image a = testing_support::random_image(3, 3, 2, rng);
  const Image b = testing_support::random_image(3, 3, 1, rng);
  const Image ab = concat_channels(a, b);
  EXPECT_EQ(slice_channels(ab, 0, 2), a);
  EXPECT_EQ(slice_channels(ab, 2, 1), b);
  EXPECT_THROW(slice_channels(ab, 2, 2), ShapeError);
}
