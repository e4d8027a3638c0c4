#include "sdmae/image.hpp"

#include <algorithm>
#include <cmath>

#include "sdmae/error.hpp"

namespace sdmae {

Image::Image(int height, int width, int channels, double fill)
    : height_(height), width_(width), channels_(channels) {
  if (height < 0 || width < 0 || channels < 0) throw ShapeError("Image: negative dimension");
  data_.assign(static_cast<std::size_t>(height) * width * channels, fill);
}

Image resize_bilinear(const Image& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  if (src.empty()) throw ShapeError("resize_bilinear: empty source");
  Image out(height, width, src.channels());
  const double sy = static_cast<double>(src.height()) / height;
  const double sx = static_cast<double>(src.width()) / width;
  for (int r = 0; r < height; ++r) {
    const double fy = std::clamp((r + 0.5) * sy - 0.5, 0.0, src.height() - 1.0);
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height() - 1);
    const double ty = fy - y0;
    for (int c = 0; c < width; ++c) {
      const double fx = std::clamp((c + 0.5) * sx - 0.5, 0.0, src.width() - 1.0);
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width() - 1);
      const double tx = fx - x0;
      for (int ch = 0; ch < src.channels(); ++ch) {
        const double top = src.at(y0, x0, ch) * (1 - tx) + src.at(y0, x1, ch) * tx;
        const double bot = src.at(y1, x0, ch) * (1 - tx) + src.at(y1, x1, ch) * tx;
        out.at(r, c, ch) = top * (1 - ty) + bot * ty;
      }
    }
  }
  return out;
}

Image resize_nearest(const Image& src, int height, int width) {
  if (src.height() == height && src.width() == width) return src;
  if (src.empty()) throw ShapeError("resize_nearest: empty source");
  Image out(height, width, src.channels());
  for (int r = 0; r < height; ++r) {
    const int y = std::min(src.height() - 1, r * src.height() / height);
    for (int c = 0; c < width; ++c) {
      const int x = std::min(src.width() - 1, c * src.width() / width);
      for (int ch = 0; ch < src.channels(); ++ch) out.at(r, c, ch) = src.at(y, x, ch);
    }
  }
  return out;
}

Image convert_channels(const Image& src, int channels) {
  if (src.channels() == channels) return src;
  Image out(src.height(), src.width(), channels);
  if (channels == 1 && src.channels() >= 3) {
    for (int r = 0; r < src.height(); ++r)
      for (int c = 0; c < src.width(); ++c)
        out.at(r, c) = 0.299 * src.at(r, c, 0) + 0.587 * src.at(r, c, 1) + 0.114 * src.at(r, c, 2);
    return out;
  }
  if (src.channels() == 1) {
    for (int r = 0; r < src.height(); ++r)
      for (int c = 0; c < src.width(); ++c)
        for (int ch = 0; ch < channels; ++ch) out.at(r, c, ch) = src.at(r, c);
    return out;
  }
  if (src.channels() == 4 && channels == 3) return slice_channels(src, 0, 3);
  if (src.channels() == 2 && channels == 1) return slice_channels(src, 0, 1);
  throw ShapeError("convert_channels: unsupported conversion " + std::to_string(src.channels()) +
                   " -> " + std::to_string(channels));
}

Image concat_channels(const Image& a, const Image& b) {
  if (!a.same_spatial(b)) throw ShapeError("concat_channels: spatial dims differ");
  Image out(a.height(), a.width(), a.channels() + b.channels());
  for (int r = 0; r < a.height(); ++r)
    for (int c = 0; c < a.width(); ++c) {
      for (int ch = 0; ch < a.channels(); ++ch) out.at(r, c, ch) = a.at(r, c, ch);
      for (int ch = 0; ch < b.channels(); ++ch) out.at(r, c, a.channels() + ch) = b.at(r, c, ch);
    }
  return out;
}

Image slice_channels(const Image& src, int first, int count) {
  if (first < 0 || count < 0 || first + count > src.channels())
    throw ShapeError("slice_channels: channel range out of bounds");
  Image out(src.height(), src.width(), count);
  for (int r = 0; r < src.height(); ++r)
    for (int c = 0; c < src.width(); ++c)
      for (int ch = 0; ch < count; ++ch) out.at(r, c, ch) = src.at(r, c, first + ch);
  return out;
}

std::size_t count_nonzero(const Image& img) {
  return static_cast<std::size_t>(
      std::count_if(img.data().begin(), img.data().end(), [](double v) { return v != 0.0; }));
}

}  // namespace sdmae
