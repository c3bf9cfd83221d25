#pragma once

#include <cstddef>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace evalkit {

/// Normalized floating-point raster. Samples lie in [0,1], row-major,
/// channel-interleaved. Channels is 1 (luma) or 3 (RGB).
///
/// Immutable after construction: every operation in the library returns a
/// new plane, so planes can be shared freely across worker threads.
class ImagePlane {
 public:
  /// Validates dimensions, channel count and the [0,1] sample range.
  /// Throws DimensionError / ParameterError on violation.
  ImagePlane(std::size_t width, std::size_t height, std::size_t channels,
             std::vector<double> data);

  /// Constant-valued plane.
  static ImagePlane Filled(std::size_t width, std::size_t height,
                           std::size_t channels, double value);

  /// Builds a plane from arbitrary reals, clamping each sample into [0,1].
  static ImagePlane FromClamped(std::size_t width, std::size_t height,
                                std::size_t channels, std::vector<double> data);

  std::size_t width() const { return width_; }
  std::size_t height() const { return height_; }
  std::size_t channels() const { return channels_; }
  std::size_t size() const { return data_.size(); }

  std::span<const double> data() const { return data_; }
  double at(std::size_t x, std::size_t y, std::size_t c = 0) const {
    return data_[(y * width_ + x) * channels_ + c];
  }

  /// One channel extracted as a 1-channel plane.
  ImagePlane Channel(std::size_t c) const;

  bool SameShape(const ImagePlane& other) const {
    return width_ == other.width_ && height_ == other.height_ &&
           channels_ == other.channels_;
  }

  friend bool operator==(const ImagePlane&, const ImagePlane&) = default;

 private:
  std::size_t width_;
  std::size_t height_;
  std::size_t channels_;
  std::vector<double> data_;
};

/// Opaque per-entry identifier: the manifest-relative path without extension.
class ImageId {
 public:
  explicit ImageId(std::string value);

  /// "dir/name.png" -> "dir/name" (generic separators). Absolute paths and
  /// paths escaping upward with ".." keep only the file stem. Ids must be
  /// relative and free of "..", otherwise ParameterError.
  static ImageId FromRelativePath(const std::filesystem::path& relative);

  const std::string& str() const { return value_; }
  friend auto operator<=>(const ImageId&, const ImageId&) = default;

 private:
  std::string value_;
};

/// Rec. 601 luma (0.299, 0.587, 0.114). Single-channel input is returned
/// unchanged.
ImagePlane ToLuminance(const ImagePlane& img);

ImagePlane FlipHorizontal(const ImagePlane& img);
ImagePlane FlipVertical(const ImagePlane& img);

/// Loads an 8- or 16-bit grayscale/RGB PNG (alpha dropped, palettes
/// expanded). Samples are divided by 2^bitdepth - 1.
/// Throws IoError when the file cannot be read, FormatError otherwise.
ImagePlane LoadImage(const std::filesystem::path& path);

/// Writes an 8-bit PNG; each sample is clamped to [0,1] and stored as
/// round(s * 255).
void SaveImage(const ImagePlane& img, const std::filesystem::path& path);

/// Byte encoding used by SaveImage, exposed for tests.
unsigned char QuantizeSample(double s);

/// Snaps every sample onto the 8-bit lattice k/255, i.e. the plane that
/// LoadImage(SaveImage(img)) would return.
ImagePlane QuantizeTo8Bit(const ImagePlane& img);

}  // namespace evalkit
