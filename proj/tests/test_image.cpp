#include <gtest/gtest.h>
#include <png.h>

#include <cstdio>
#include <fstream>

#include "evalkit/error.hpp"
#include "evalkit/image.hpp"
#include "test_util.hpp"

namespace evalkit {
namespace {

using testing::ScratchDir;

// Writes a PNG with an arbitrary layout through libpng directly.
void WriteRawPng(const std::filesystem::path& path, int w, int h, int bit_depth,
                 int color_type, const std::vector<png_byte>& bytes) {
  std::FILE* f = std::fopen(path.c_str(), "wb");
  ASSERT_NE(f, nullptr);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png_create_info_struct(png);
  png_init_io(png, f);
  png_set_IHDR(png, info, w, h, bit_depth, color_type, PNG_INTERLACE_NONE,
               PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  const std::size_t stride = bytes.size() / h;
  for (int y = 0; y < h; ++y) {
    png_write_row(png, const_cast<png_bytep>(bytes.data() + y * stride));
  }
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(f);
}

TEST(ImagePlane, RejectsOutOfRangeAndBadShape) {
  EXPECT_THROW(ImagePlane(1, 1, 1, {1.5}), ParameterError);
  EXPECT_THROW(ImagePlane(1, 1, 1, {-0.1}), ParameterError);
  EXPECT_THROW(ImagePlane(1, 1, 1, {std::nan("")}), ParameterError);
  EXPECT_THROW(ImagePlane(2, 1, 1, {0.1}), DimensionError);
  EXPECT_THROW(ImagePlane(0, 1, 1, {}), DimensionError);
  EXPECT_THROW(ImagePlane(1, 1, 2, {0.1, 0.2}), DimensionError);
  EXPECT_NO_THROW(ImagePlane(1, 1, 3, {0.0, 0.5, 1.0}));
}

TEST(ImageId, DerivedFromRelativePath) {
  EXPECT_EQ(ImageId::FromRelativePath("set5/baby.png").str(), "set5/baby");
  EXPECT_THROW(ImageId(""), ParameterError);
  EXPECT_EQ(ImageId::FromRelativePath("/data/set5/baby.png").str(), "baby");
  EXPECT_EQ(ImageId::FromRelativePath("../other/bird.png").str(), "bird");
  EXPECT_EQ(ImageId::FromRelativePath("a/./b.png").str(), "a/b");
  EXPECT_THROW(ImageId("/abs/x"), ParameterError);
  EXPECT_THROW(ImageId("a/../../x"), ParameterError);
}

TEST(Luminance, Rec601Weights) {
  const ImagePlane rgb(3, 1, 3, {1, 1, 1, 1, 0, 0, 0, 0, 1});
  const ImagePlane y = ToLuminance(rgb);
  ASSERT_EQ(y.channels(), 1u);
  EXPECT_DOUBLE_EQ(y.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(y.at(1, 0), 0.299);
  EXPECT_DOUBLE_EQ(y.at(2, 0), 0.114);
  EXPECT_EQ(ToLuminance(y), y);
  const ImagePlane gray = testing::RandomImage(5, 4, 1, 3);
  EXPECT_EQ(ToLuminance(gray), gray);
}

TEST(ImageIo, Gray8Values) {
  const auto dir = ScratchDir("io_gray8");
  WriteRawPng(dir / "a.png", 2, 2, 8, PNG_COLOR_TYPE_GRAY, {51, 102, 153, 204});
  const ImagePlane img = LoadImage(dir / "a.png");
  ASSERT_EQ(img.width(), 2u);
  ASSERT_EQ(img.channels(), 1u);
  EXPECT_DOUBLE_EQ(img.at(0, 0), 0.2);
  EXPECT_DOUBLE_EQ(img.at(1, 0), 0.4);
  EXPECT_DOUBLE_EQ(img.at(0, 1), 0.6);
  EXPECT_DOUBLE_EQ(img.at(1, 1), 0.8);
  WriteRawPng(dir / "b.png", 1, 1, 8, PNG_COLOR_TYPE_GRAY, {255});
  EXPECT_EQ(LoadImage(dir / "b.png").at(0, 0), 1.0);
  WriteRawPng(dir / "c.png", 1, 1, 8, PNG_COLOR_TYPE_GRAY, {0});
  EXPECT_EQ(LoadImage(dir / "c.png").at(0, 0), 0.0);
}

TEST(ImageIo, SixteenBitAndAlpha) {
  const auto dir = ScratchDir("io_16");
  WriteRawPng(dir / "g16.png", 2, 1, 16, PNG_COLOR_TYPE_GRAY, {0xFF, 0xFF, 0x80, 0x00});
  const ImagePlane g = LoadImage(dir / "g16.png");
  EXPECT_DOUBLE_EQ(g.at(0, 0), 1.0);
  EXPECT_DOUBLE_EQ(g.at(1, 0), 0x8000 / 65535.0);

  WriteRawPng(dir / "rgba.png", 1, 1, 8, PNG_COLOR_TYPE_RGB_ALPHA, {255, 0, 51, 7});
  const ImagePlane rgb = LoadImage(dir / "rgba.png");
  ASSERT_EQ(rgb.channels(), 3u);
  EXPECT_DOUBLE_EQ(rgb.at(0, 0, 0), 1.0);
  EXPECT_DOUBLE_EQ(rgb.at(0, 0, 2), 0.2);

  WriteRawPng(dir / "ga.png", 1, 1, 8, PNG_COLOR_TYPE_GRAY_ALPHA, {102, 0});
  const ImagePlane ga = LoadImage(dir / "ga.png");
  ASSERT_EQ(ga.channels(), 1u);
  EXPECT_DOUBLE_EQ(ga.at(0, 0), 0.4);
}

TEST(ImageIo, SaveQuantizesAndRoundTrips) {
  const auto dir = ScratchDir("io_save");
  SaveImage(ImagePlane(2, 1, 1, {0.5, 1.0}), dir / "q.png");
  const ImagePlane q = LoadImage(dir / "q.png");
  EXPECT_DOUBLE_EQ(q.at(0, 0), 128 / 255.0);
  EXPECT_DOUBLE_EQ(q.at(1, 0), 1.0);
  EXPECT_EQ(QuantizeSample(0.5), 128);

  const ImagePlane lattice = QuantizeTo8Bit(testing::RandomImage(7, 5, 3, 11));
  SaveImage(lattice, dir / "rt.png");
  EXPECT_EQ(LoadImage(dir / "rt.png"), lattice);
}

TEST(ImageIo, Errors) {
  const auto dir = ScratchDir("io_err");
  EXPECT_THROW(LoadImage(dir / "missing.png"), IoError);
  std::ofstream(dir / "junk.png") << "not a png at all";
  EXPECT_THROW(LoadImage(dir / "junk.png"), FormatError);
  EXPECT_THROW(SaveImage(ImagePlane::Filled(1, 1, 1, 0.0), dir / "no" / "dir.png"), IoError);
}

TEST(ImageOps, Flips) {
  const ImagePlane img(2, 2, 1, {0.1, 0.2, 0.3, 0.4});
  EXPECT_EQ(FlipHorizontal(img), ImagePlane(2, 2, 1, {0.2, 0.1, 0.4, 0.3}));
  EXPECT_EQ(FlipVertical(img), ImagePlane(2, 2, 1, {0.3, 0.4, 0.1, 0.2}));
}

}  // namespace
}  // namespace evalkit
