#pragma once

#include "fdsc/types.hpp"

namespace fdsc {

// Geometry of a strided 2-D convolution with "same"-style padding
// (pad = (kernel - 1) / 2). The image side is the convolution input; the
// grid side is its output. A transposed convolution uses the same geometry
// with the roles swapped: it maps grid -> image.
struct ConvGeometry {
  int image_channels = 0;
  int image_h = 0;
  int image_w = 0;
  int grid_channels = 0;
  int kernel_h = 0;
  int kernel_w = 0;
  int stride = 1;
  int pad_h = 0;
  int pad_w = 0;
  int grid_h = 0;
  int grid_w = 0;

  static ConvGeometry make(int image_channels, int image_h, int image_w, int grid_channels,
                           int kernel_h, int kernel_w, int stride);

  int patch_size() const { return image_channels * kernel_h * kernel_w; }
  int image_pixels() const { return image_h * image_w; }
  int grid_pixels() const { return grid_h * grid_w; }
};

// Activation batches are stored channel-major: a channels x (n * h * w)
// matrix whose column s*h*w + y*w + x holds every channel of one location.

// Unfolds image patches: (image_channels*kh*kw) x (n * grid_h * grid_w).
Matrix im2col(const Matrix& image, const ConvGeometry& g, int n);

// Adjoint of im2col: scatters (accumulating) patch columns back to images.
Matrix col2im(const Matrix& cols, const ConvGeometry& g, int n);

// Convolution: kernels are grid_channels x patch_size; returns the grid
// activations before any nonlinearity. `cols` receives the unfolded input.
Matrix conv_forward(const Matrix& kernels, const Vector& biases, const Matrix& image,
                    const ConvGeometry& g, int n, Matrix* cols = nullptr);

// Transposed convolution: kernels are grid_channels x patch_size (the same
// layout as the convolution they mirror); biases have image_channels rows.
Matrix conv_transpose_forward(const Matrix& kernels, const Vector& biases, const Matrix& grid,
                              const ConvGeometry& g, int n);

// HWC-flattened rows (n x h*w*c) <-> channel-major batch.
Matrix rows_to_channel_major(const RowMatrix& rows, int channels, int pixels);
RowMatrix channel_major_to_rows(const Matrix& act, int channels, int pixels);

// Channel-major batch <-> CHW-flattened feature rows (n x c*h*w).
RowMatrix channel_major_to_features(const Matrix& act, int channels, int pixels);
Matrix features_to_channel_major(const RowMatrix& features, int channels, int pixels);

}  // namespace fdsc
