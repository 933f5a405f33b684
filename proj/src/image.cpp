#include "image.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "errors.hpp"

namespace p2g {

namespace {

int read_header_int(std::istream& in) {
  int ch = in.peek();
  while (ch != EOF) {
    if (std::isspace(ch)) {
      in.get();
    } else if (ch == '#') {
      std::string skip;
      std::getline(in, skip);
    } else {
      break;
    }
    ch = in.peek();
  }
  int value = 0;
  if (!(in >> value)) fail(ErrorKind::IoError, "malformed netpbm header");
  return value;
}

}  // namespace

FeatureMap read_pnm(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) fail(ErrorKind::IoError, "cannot open image " + path);
  std::string magic(2, '\0');
  in.read(magic.data(), 2);
  const bool gray = magic == "P2" || magic == "P5";
  const bool binary = magic == "P5" || magic == "P6";
  if (!gray && magic != "P3" && magic != "P6") fail(ErrorKind::IoError, "unsupported image format in " + path);
  const int width = read_header_int(in);
  const int height = read_header_int(in);
  const int maxval = read_header_int(in);
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535) {
    fail(ErrorKind::IoError, "bad image dimensions in " + path);
  }
  const int channels = gray ? 1 : 3;
  FeatureMap img(channels, height, width);
  const std::size_t count = static_cast<std::size_t>(width) * height * channels;
  std::vector<double> interleaved(count);
  if (binary) {
    in.get();  // single whitespace after maxval
    const int bytes = maxval > 255 ? 2 : 1;
    std::vector<unsigned char> raw(count * bytes);
    in.read(reinterpret_cast<char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
    if (static_cast<std::size_t>(in.gcount()) != raw.size()) fail(ErrorKind::IoError, "truncated image " + path);
    for (std::size_t i = 0; i < count; ++i) {
      const int v = bytes == 2 ? (raw[2 * i] << 8) | raw[2 * i + 1] : raw[i];
      interleaved[i] = static_cast<double>(v) / maxval;
    }
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      int v = 0;
      if (!(in >> v)) fail(ErrorKind::IoError, "truncated image " + path);
      interleaved[i] = static_cast<double>(v) / maxval;
    }
  }
  for (int y = 0; y < height; ++y) {
    for (int x = 0; x < width; ++x) {
      for (int c = 0; c < channels; ++c) {
        img.at(c, y, x) = interleaved[(static_cast<std::size_t>(y) * width + x) * channels + c];
      }
    }
  }
  return img;
}

void write_pnm(const std::string& path, const FeatureMap& image) {
  if (image.channels != 1 && image.channels != 3) fail(ErrorKind::IoError, "netpbm output needs 1 or 3 channels");
  std::ofstream out(path, std::ios::binary);
  if (!out) fail(ErrorKind::IoError, "cannot write image " + path);
  out << (image.channels == 1 ? "P5" : "P6") << "\n" << image.width << " " << image.height << "\n255\n";
  std::vector<unsigned char> raw;
  raw.reserve(static_cast<std::size_t>(image.width) * image.height * image.channels);
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      for (int c = 0; c < image.channels; ++c) {
        const double v = std::clamp(image.at(c, y, x), 0.0, 1.0);
        raw.push_back(static_cast<unsigned char>(std::lround(v * 255.0)));
      }
    }
  }
  out.write(reinterpret_cast<const char*>(raw.data()), static_cast<std::streamsize>(raw.size()));
}

FeatureMap resize_bilinear(const FeatureMap& src, int out_h, int out_w) {
  if (src.empty()) fail(ErrorKind::EmptyFeatureMap, "cannot resize an empty image");
  FeatureMap dst(src.channels, out_h, out_w);
  const double sy = static_cast<double>(src.height) / out_h;
  const double sx = static_cast<double>(src.width) / out_w;
  for (int y = 0; y < out_h; ++y) {
    const double fy = std::clamp((y + 0.5) * sy - 0.5, 0.0, static_cast<double>(src.height - 1));
    const int y0 = static_cast<int>(fy);
    const int y1 = std::min(y0 + 1, src.height - 1);
    const double wy = fy - y0;
    for (int x = 0; x < out_w; ++x) {
      const double fx = std::clamp((x + 0.5) * sx - 0.5, 0.0, static_cast<double>(src.width - 1));
      const int x0 = static_cast<int>(fx);
      const int x1 = std::min(x0 + 1, src.width - 1);
      const double wx = fx - x0;
      for (int c = 0; c < src.channels; ++c) {
        const double top = src.at(c, y0, x0) * (1 - wx) + src.at(c, y0, x1) * wx;
        const double bottom = src.at(c, y1, x0) * (1 - wx) + src.at(c, y1, x1) * wx;
        dst.at(c, y, x) = top * (1 - wy) + bottom * wy;
      }
    }
  }
  return dst;
}

FeatureMap to_grayscale(const FeatureMap& src) {
  if (src.channels == 1) return src;
  FeatureMap out(1, src.height, src.width);
  for (int y = 0; y < src.height; ++y) {
    for (int x = 0; x < src.width; ++x) {
      // ITU-R BT.601 luma
      out.at(0, y, x) = 0.299 * src.at(0, y, x) + 0.587 * src.at(1, y, x) + 0.114 * src.at(2, y, x);
    }
  }
  return out;
}

}  // namespace p2g
