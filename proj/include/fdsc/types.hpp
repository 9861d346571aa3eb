#pragma once

#include <Eigen/Dense>

namespace fdsc {

// Sample matrices keep one sample per row.
using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

struct ImageShape {
  int height = 0;
  int width = 0;
  int channels = 1;

  int size() const { return height * width * channels; }
  bool operator==(const ImageShape&) const = default;
};

}  // namespace fdsc
