#include "fdsc/conv.hpp"

#include "fdsc/errors.hpp"

namespace fdsc {

ConvGeometry ConvGeometry::make(int image_channels, int image_h, int image_w, int grid_channels,
                                int kernel_h, int kernel_w, int stride) {
  if (image_channels < 1 || image_h < 1 || image_w < 1 || grid_channels < 1 || kernel_h < 1 ||
      kernel_w < 1 || stride < 1)
    throw ShapeError("convolution geometry needs positive sizes");
  ConvGeometry g;
  g.image_channels = image_channels;
  g.image_h = image_h;
  g.image_w = image_w;
  g.grid_channels = grid_channels;
  g.kernel_h = kernel_h;
  g.kernel_w = kernel_w;
  g.stride = stride;
  g.pad_h = (kernel_h - 1) / 2;
  g.pad_w = (kernel_w - 1) / 2;
  g.grid_h = (image_h + 2 * g.pad_h - kernel_h) / stride + 1;
  g.grid_w = (image_w + 2 * g.pad_w - kernel_w) / stride + 1;
  if (g.grid_h < 1 || g.grid_w < 1) throw ShapeError("kernel larger than padded image");
  return g;
}

Matrix im2col(const Matrix& image, const ConvGeometry& g, int n) {
  const int ip = g.image_pixels();
  const int gp = g.grid_pixels();
  Matrix cols = Matrix::Zero(g.patch_size(), static_cast<Eigen::Index>(n) * gp);
  for (int s = 0; s < n; ++s) {
    for (int oy = 0; oy < g.grid_h; ++oy) {
      for (int ox = 0; ox < g.grid_w; ++ox) {
        const Eigen::Index col = static_cast<Eigen::Index>(s) * gp + oy * g.grid_w + ox;
        for (int c = 0; c < g.image_channels; ++c) {
          for (int i = 0; i < g.kernel_h; ++i) {
            const int iy = oy * g.stride - g.pad_h + i;
            if (iy < 0 || iy >= g.image_h) continue;
            for (int j = 0; j < g.kernel_w; ++j) {
              const int ix = ox * g.stride - g.pad_w + j;
              if (ix < 0 || ix >= g.image_w) continue;
              cols((c * g.kernel_h + i) * g.kernel_w + j, col) =
                  image(c, static_cast<Eigen::Index>(s) * ip + iy * g.image_w + ix);
            }
          }
        }
      }
    }
  }
  return cols;
}

Matrix col2im(const Matrix& cols, const ConvGeometry& g, int n) {
  const int ip = g.image_pixels();
  const int gp = g.grid_pixels();
  Matrix image = Matrix::Zero(g.image_channels, static_cast<Eigen::Index>(n) * ip);
  for (int s = 0; s < n; ++s) {
    for (int oy = 0; oy < g.grid_h; ++oy) {
      for (int ox = 0; ox < g.grid_w; ++ox) {
        const Eigen::Index col = static_cast<Eigen::Index>(s) * gp + oy * g.grid_w + ox;
        for (int c = 0; c < g.image_channels; ++c) {
          for (int i = 0; i < g.kernel_h; ++i) {
            const int iy = oy * g.stride - g.pad_h + i;
            if (iy < 0 || iy >= g.image_h) continue;
            for (int j = 0; j < g.kernel_w; ++j) {
              const int ix = ox * g.stride - g.pad_w + j;
              if (ix < 0 || ix >= g.image_w) continue;
              image(c, static_cast<Eigen::Index>(s) * ip + iy * g.image_w + ix) +=
                  cols((c * g.kernel_h + i) * g.kernel_w + j, col);
            }
          }
        }
      }
    }
  }
  return image;
}

Matrix conv_forward(const Matrix& kernels, const Vector& biases, const Matrix& image,
                    const ConvGeometry& g, int n, Matrix* cols) {
  if (kernels.rows() != g.grid_channels || kernels.cols() != g.patch_size() ||
      biases.size() != g.grid_channels)
    throw ShapeError("convolution kernel shape mismatch");
  if (image.rows() != g.image_channels ||
      image.cols() != static_cast<Eigen::Index>(n) * g.image_pixels())
    throw ShapeError("convolution input shape mismatch");
  Matrix unfolded = im2col(image, g, n);
  Matrix out = kernels * unfolded;
  out.colwise() += biases;
  if (cols != nullptr) *cols = std::move(unfolded);
  return out;
}

Matrix conv_transpose_forward(const Matrix& kernels, const Vector& biases, const Matrix& grid,
                              const ConvGeometry& g, int n) {
  if (kernels.rows() != g.grid_channels || kernels.cols() != g.patch_size() ||
      biases.size() != g.image_channels)
    throw ShapeError("transposed convolution kernel shape mismatch");
  if (grid.rows() != g.grid_channels ||
      grid.cols() != static_cast<Eigen::Index>(n) * g.grid_pixels())
    throw ShapeError("transposed convolution input shape mismatch");
  Matrix cols = kernels.transpose() * grid;
  Matrix out = col2im(cols, g, n);
  out.colwise() += biases;
  return out;
}

Matrix rows_to_channel_major(const RowMatrix& rows, int channels, int pixels) {
  if (rows.cols() != static_cast<Eigen::Index>(channels) * pixels)
    throw ShapeError("row width does not match image shape");
  const Eigen::Index n = rows.rows();
  Matrix act(channels, n * pixels);
  for (Eigen::Index s = 0; s < n; ++s)
    for (int p = 0; p < pixels; ++p)
      for (int c = 0; c < channels; ++c) act(c, s * pixels + p) = rows(s, static_cast<Eigen::Index>(p) * channels + c);
  return act;
}

RowMatrix channel_major_to_rows(const Matrix& act, int channels, int pixels) {
  const Eigen::Index n = act.cols() / pixels;
  RowMatrix rows(n, static_cast<Eigen::Index>(channels) * pixels);
  for (Eigen::Index s = 0; s < n; ++s)
    for (int p = 0; p < pixels; ++p)
      for (int c = 0; c < channels; ++c) rows(s, static_cast<Eigen::Index>(p) * channels + c) = act(c, s * pixels + p);
  return rows;
}

RowMatrix channel_major_to_features(const Matrix& act, int channels, int pixels) {
  const Eigen::Index n = act.cols() / pixels;
  RowMatrix z(n, static_cast<Eigen::Index>(channels) * pixels);
  for (Eigen::Index s = 0; s < n; ++s)
    for (int c = 0; c < channels; ++c)
      for (int p = 0; p < pixels; ++p) z(s, static_cast<Eigen::Index>(c) * pixels + p) = act(c, s * pixels + p);
  return z;
}

Matrix features_to_channel_major(const RowMatrix& features, int channels, int pixels) {
  if (features.cols() != static_cast<Eigen::Index>(channels) * pixels)
    throw ShapeError("feature width does not match latent shape");
  const Eigen::Index n = features.rows();
  Matrix act(channels, n * pixels);
  for (Eigen::Index s = 0; s < n; ++s)
    for (int c = 0; c < channels; ++c)
      for (int p = 0; p < pixels; ++p) act(c, s * pixels + p) = features(s, static_cast<Eigen::Index>(c) * pixels + p);
  return act;
}

}  // namespace fdsc
