#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <iterator>

#include "fdsc/dataio.hpp"
#include "fdsc/errors.hpp"

namespace fdsc {
namespace {

struct RawImage {
  ImageShape shape;
  std::vector<double> pixels;  // H x W x C, [0, 1]
};

// Binary PGM (P5) or PPM (P6), 8 or 16 bit.
RawImage read_pnm(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open image " + path.string());
  std::string magic;
  in >> magic;
  if (magic != "P5" && magic != "P6") throw FormatError("unsupported PNM type in " + path.string());
  auto next_int = [&]() {
    for (;;) {
      in >> std::ws;
      if (in.peek() == '#') {
        std::string comment;
        std::getline(in, comment);
        continue;
      }
      int v = -1;
      if (!(in >> v)) throw FormatError("bad PNM header in " + path.string());
      return v;
    }
  };
  const int width = next_int();
  const int height = next_int();
  const int maxval = next_int();
  in.get();  // single whitespace before the raster
  if (width <= 0 || height <= 0 || maxval <= 0 || maxval > 65535)
    throw FormatError("bad PNM header in " + path.string());

  RawImage img;
  img.shape = {height, width, magic == "P5" ? 1 : 3};
  const std::size_t count = static_cast<std::size_t>(img.shape.size());
  const std::size_t bytes_per = maxval < 256 ? 1 : 2;
  std::vector<unsigned char> raster(count * bytes_per);
  in.read(reinterpret_cast<char*>(raster.data()), static_cast<std::streamsize>(raster.size()));
  if (static_cast<std::size_t>(in.gcount()) != raster.size())
    throw FormatError("truncated PNM raster in " + path.string());
  img.pixels.resize(count);
  for (std::size_t i = 0; i < count; ++i) {
    const unsigned v = bytes_per == 1 ? raster[i] : (unsigned{raster[2 * i]} << 8) | raster[2 * i + 1];
    img.pixels[i] = static_cast<double>(v) / maxval;
  }
  return img;
}

RawImage read_png(const std::filesystem::path& path) {
  png_image image{};
  image.version = PNG_IMAGE_VERSION;
  if (!png_image_begin_read_from_file(&image, path.c_str()))
    throw FormatError("unreadable PNG " + path.string() + ": " + image.message);
  const bool color = (image.format & PNG_FORMAT_FLAG_COLOR) != 0;
  image.format = color ? PNG_FORMAT_RGB : PNG_FORMAT_GRAY;
  std::vector<unsigned char> buffer(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, buffer.data(), 0, nullptr)) {
    const std::string message = image.message;
    png_image_free(&image);
    throw FormatError("unreadable PNG " + path.string() + ": " + message);
  }
  RawImage img;
  img.shape = {static_cast<int>(image.height), static_cast<int>(image.width), color ? 3 : 1};
  img.pixels.resize(buffer.size());
  std::transform(buffer.begin(), buffer.end(), img.pixels.begin(),
                 [](unsigned char b) { return b / 255.0; });
  return img;
}

RawImage read_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  try {
    if (ext == ".png") return read_png(path);
    return read_pnm(path);
  } catch (const FormatError&) {
    throw;
  } catch (const std::exception& e) {
    throw FormatError("unreadable image " + path.string() + ": " + e.what());
  }
}

bool is_image(const std::filesystem::path& path) {
  std::string ext = path.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(), [](unsigned char ch) { return std::tolower(ch); });
  return ext == ".png" || ext == ".pgm" || ext == ".ppm" || ext == ".pnm";
}

// Gray <-> RGB so every sample in a dataset has the same channel count.
std::vector<double> convert_channels(const RawImage& img, int channels) {
  if (img.shape.channels == channels) return img.pixels;
  const int count = img.shape.height * img.shape.width;
  std::vector<double> out(static_cast<std::size_t>(count) * channels);
  for (int p = 0; p < count; ++p) {
    if (channels == 3) {
      for (int ch = 0; ch < 3; ++ch) out[3 * p + ch] = img.pixels[p];
    } else {
      out[p] = 0.299 * img.pixels[3 * p] + 0.587 * img.pixels[3 * p + 1] +
               0.114 * img.pixels[3 * p + 2];
    }
  }
  return out;
}

}  // namespace

std::vector<double> resize_bilinear(const std::vector<double>& pixels, ImageShape from,
                                    int target_h, int target_w) {
  if (target_h <= 0 || target_w <= 0) throw ConfigError("resize target must be positive");
  if (static_cast<int>(pixels.size()) != from.size()) throw ShapeError("pixel buffer size mismatch");
  const int channels = from.channels;
  auto source_coord = [](int i, int src, int dst) {
    if (dst == 1) return 0.5 * (src - 1);
    return static_cast<double>(i) * (src - 1) / (dst - 1);
  };
  std::vector<double> out(static_cast<std::size_t>(target_h) * target_w * channels);
  for (int y = 0; y < target_h; ++y) {
    const double sy = source_coord(y, from.height, target_h);
    const int y0 = std::min(static_cast<int>(std::floor(sy)), from.height - 1);
    const int y1 = std::min(y0 + 1, from.height - 1);
    const double fy = sy - y0;
    for (int x = 0; x < target_w; ++x) {
      const double sx = source_coord(x, from.width, target_w);
      const int x0 = std::min(static_cast<int>(std::floor(sx)), from.width - 1);
      const int x1 = std::min(x0 + 1, from.width - 1);
      const double fx = sx - x0;
      for (int ch = 0; ch < channels; ++ch) {
        auto at = [&](int yy, int xx) { return pixels[(static_cast<std::size_t>(yy) * from.width + xx) * channels + ch]; };
        const double top = (1.0 - fx) * at(y0, x0) + fx * at(y0, x1);
        const double bottom = (1.0 - fx) * at(y1, x0) + fx * at(y1, x1);
        out[(static_cast<std::size_t>(y) * target_w + x) * channels + ch] = (1.0 - fy) * top + fy * bottom;
      }
    }
  }
  return out;
}

Dataset load_image_dir(const std::filesystem::path& root, int target_h, int target_w) {
  namespace fs = std::filesystem;
  if (!fs::is_directory(root)) throw FormatError("not a directory: " + root.string());
  std::vector<fs::path> class_dirs;
  for (const auto& entry : fs::directory_iterator(root))
    if (entry.is_directory()) class_dirs.push_back(entry.path());
  std::sort(class_dirs.begin(), class_dirs.end(),
            [](const fs::path& a, const fs::path& b) { return a.filename().string() < b.filename().string(); });
  if (class_dirs.empty()) throw FormatError("no class directories under " + root.string());

  std::vector<std::pair<RawImage, int>> images;
  for (std::size_t label = 0; label < class_dirs.size(); ++label) {
    std::vector<fs::path> files;
    for (const auto& entry : fs::directory_iterator(class_dirs[label]))
      if (entry.is_regular_file() && is_image(entry.path())) files.push_back(entry.path());
    std::sort(files.begin(), files.end());
    for (const auto& file : files) images.emplace_back(read_image(file), static_cast<int>(label));
  }
  if (images.empty()) throw FormatError("no images found under " + root.string());

  const int channels = images.front().first.shape.channels;
  Dataset out;
  out.shape = {target_h, target_w, channels};
  out.class_count = static_cast<int>(class_dirs.size());
  out.samples.resize(static_cast<Eigen::Index>(images.size()), out.shape.size());
  out.labels.reserve(images.size());
  for (std::size_t i = 0; i < images.size(); ++i) {
    const RawImage& img = images[i].first;
    const ImageShape converted{img.shape.height, img.shape.width, channels};
    const auto resized = resize_bilinear(convert_channels(img, channels), converted, target_h, target_w);
    for (std::size_t p = 0; p < resized.size(); ++p)
      out.samples(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(p)) = std::clamp(resized[p], 0.0, 1.0);
    out.labels.push_back(images[i].second);
  }
  return out;
}

}  // namespace fdsc
