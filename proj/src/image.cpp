#include "evalkit/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <csetjmp>
#include <cstdio>
#include <memory>

#include "evalkit/error.hpp"

namespace evalkit {

ImagePlane::ImagePlane(std::size_t width, std::size_t height,
                       std::size_t channels, std::vector<double> data)
    : width_(width), height_(height), channels_(channels), data_(std::move(data)) {
  if (width_ < 1 || height_ < 1) {
    throw DimensionError("image dimensions must be at least 1x1");
  }
  if (channels_ != 1 && channels_ != 3) {
    throw DimensionError("image must have 1 or 3 channels, got " +
                         std::to_string(channels_));
  }
  if (data_.size() != width_ * height_ * channels_) {
    throw DimensionError("sample count does not match width*height*channels");
  }
  for (double s : data_) {
    // Negated form also rejects NaN.
    if (!(s >= 0.0 && s <= 1.0)) {
      throw ParameterError("sample outside [0,1]: " + std::to_string(s));
    }
  }
}

ImagePlane ImagePlane::Filled(std::size_t width, std::size_t height,
                              std::size_t channels, double value) {
  return ImagePlane(width, height, channels,
                    std::vector<double>(width * height * channels, value));
}

ImagePlane ImagePlane::FromClamped(std::size_t width, std::size_t height,
                                   std::size_t channels,
                                   std::vector<double> data) {
  for (double& s : data) s = std::clamp(s, 0.0, 1.0);
  return ImagePlane(width, height, channels, std::move(data));
}

ImagePlane ImagePlane::Channel(std::size_t c) const {
  if (c >= channels_) throw ParameterError("channel index out of range");
  std::vector<double> out(width_ * height_);
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = data_[i * channels_ + c];
  return ImagePlane(width_, height_, 1, std::move(out));
}

ImageId::ImageId(std::string value) : value_(std::move(value)) {
  if (value_.empty()) throw ParameterError("image id must be non-empty");
  const std::filesystem::path p(value_);
  if (p.is_absolute() || p.has_root_name()) {
    throw ParameterError("image id '" + value_ + "' must be a relative path");
  }
  for (const auto& part : p) {
    if (part == "..") throw ParameterError("image id '" + value_ + "' must not contain '..'");
  }
}

ImageId ImageId::FromRelativePath(const std::filesystem::path& relative) {
  std::filesystem::path p = relative.lexically_normal();
  if (p.is_absolute() || (!p.empty() && *p.begin() == "..")) p = p.filename();
  p.replace_extension();
  return ImageId(p.generic_string());
}

ImagePlane ToLuminance(const ImagePlane& img) {
  if (img.channels() == 1) return img;
  const auto src = img.data();
  std::vector<double> out(img.width() * img.height());
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double y = 0.299 * src[3 * i] + 0.587 * src[3 * i + 1] +
                     0.114 * src[3 * i + 2];
    out[i] = std::clamp(y, 0.0, 1.0);
  }
  return ImagePlane(img.width(), img.height(), 1, std::move(out));
}

ImagePlane FlipHorizontal(const ImagePlane& img) {
  const std::size_t w = img.width(), h = img.height(), ch = img.channels();
  const auto src = img.data();
  std::vector<double> out(src.size());
  for (std::size_t y = 0; y < h; ++y) {
    for (std::size_t x = 0; x < w; ++x) {
      for (std::size_t c = 0; c < ch; ++c) {
        out[(y * w + x) * ch + c] = src[(y * w + (w - 1 - x)) * ch + c];
      }
    }
  }
  return ImagePlane(w, h, ch, std::move(out));
}

ImagePlane FlipVertical(const ImagePlane& img) {
  const std::size_t w = img.width(), h = img.height(), ch = img.channels();
  const auto src = img.data();
  std::vector<double> out(src.size());
  const std::size_t row = w * ch;
  for (std::size_t y = 0; y < h; ++y) {
    std::copy_n(src.begin() + (h - 1 - y) * row, row, out.begin() + y * row);
  }
  return ImagePlane(w, h, ch, std::move(out));
}

unsigned char QuantizeSample(double s) {
  const double clamped = std::clamp(s, 0.0, 1.0);
  return static_cast<unsigned char>(std::lround(clamped * 255.0));
}

ImagePlane QuantizeTo8Bit(const ImagePlane& img) {
  const auto src = img.data();
  std::vector<double> out(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) out[i] = QuantizeSample(src[i]) / 255.0;
  return ImagePlane(img.width(), img.height(), img.channels(), std::move(out));
}

namespace {

struct FileCloser {
  void operator()(std::FILE* f) const {
    if (f) std::fclose(f);
  }
};
using FilePtr = std::unique_ptr<std::FILE, FileCloser>;

FilePtr OpenFile(const std::filesystem::path& path, const char* mode) {
  return FilePtr(std::fopen(path.c_str(), mode));
}

}  // namespace

ImagePlane LoadImage(const std::filesystem::path& path) {
  FilePtr file = OpenFile(path, "rb");
  if (!file) throw IoError("cannot open " + path.string());

  png_byte signature[8];
  if (std::fread(signature, 1, 8, file.get()) != 8 ||
      png_sig_cmp(signature, 0, 8) != 0) {
    throw FormatError(path.string() + " is not a PNG file");
  }

  png_structp png =
      png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng read struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng info struct allocation failed");
  }

  std::vector<png_byte> pixels;
  std::vector<png_bytep> rows;
  png_uint_32 width = 0, height = 0;
  int bit_depth = 0, channels = 0;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("corrupt PNG data in " + path.string());
  }

  png_init_io(png, file.get());
  png_set_sig_bytes(png, 8);
  png_read_info(png, info);

  const int color_type = png_get_color_type(png, info);
  bit_depth = png_get_bit_depth(png, info);

  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) {
    png_set_expand_gray_1_2_4_to_8(png);
  }
  // tRNS would otherwise be expanded into an alpha channel we then drop.
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type & PNG_COLOR_MASK_ALPHA || png_get_valid(png, info, PNG_INFO_tRNS)) {
    png_set_strip_alpha(png);
  }
  png_read_update_info(png, info);

  width = png_get_image_width(png, info);
  height = png_get_image_height(png, info);
  bit_depth = png_get_bit_depth(png, info);
  channels = png_get_channels(png, info);
  if ((bit_depth != 8 && bit_depth != 16) || (channels != 1 && channels != 3)) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError("unsupported PNG layout in " + path.string());
  }

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  pixels.resize(rowbytes * height);
  rows.resize(height);
  for (png_uint_32 y = 0; y < height; ++y) rows[y] = pixels.data() + y * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);

  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> data(count);
  if (bit_depth == 8) {
    for (std::size_t i = 0; i < count; ++i) data[i] = pixels[i] / 255.0;
  } else {
    // 16-bit samples are big-endian in the decoded rows.
    for (std::size_t i = 0; i < count; ++i) {
      const unsigned v = (unsigned{pixels[2 * i]} << 8) | pixels[2 * i + 1];
      data[i] = v / 65535.0;
    }
  }
  return ImagePlane(width, height, static_cast<std::size_t>(channels),
                    std::move(data));
}

void SaveImage(const ImagePlane& img, const std::filesystem::path& path) {
  FilePtr file = OpenFile(path, "wb");
  if (!file) throw IoError("cannot open " + path.string() + " for writing");

  png_structp png =
      png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng write struct allocation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng info struct allocation failed");
  }

  const auto src = img.data();
  std::vector<png_byte> bytes(src.size());
  for (std::size_t i = 0; i < src.size(); ++i) bytes[i] = QuantizeSample(src[i]);
  std::vector<png_bytep> rows(img.height());
  const std::size_t stride = img.width() * img.channels();
  for (std::size_t y = 0; y < img.height(); ++y) rows[y] = bytes.data() + y * stride;

  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed writing " + path.string());
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(img.width()),
               static_cast<png_uint_32>(img.height()), 8,
               img.channels() == 1 ? PNG_COLOR_TYPE_GRAY : PNG_COLOR_TYPE_RGB,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT,
               PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  png_write_image(png, rows.data());
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);

  if (std::fflush(file.get()) != 0) throw IoError("failed writing " + path.string());
}

}  // namespace evalkit
