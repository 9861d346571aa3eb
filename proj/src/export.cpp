#include "fdsc/export.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <fstream>
#include <numeric>

#include "fdsc/errors.hpp"
#include "fdsc/experiment.hpp"
#include "fdsc/spectral.hpp"

namespace fdsc {

RowMatrix pca_2d(const RowMatrix& points) {
  if (points.rows() < 1) throw DataError("PCA needs at least one sample");
  const RowMatrix centred = points.rowwise() - points.colwise().mean();
  RowMatrix out = RowMatrix::Zero(points.rows(), 2);
  if (centred.cols() == 0) return out;
  Eigen::BDCSVD<Matrix> svd(Matrix(centred), Eigen::ComputeThinV);
  const Eigen::Index axes = std::min<Eigen::Index>(2, svd.matrixV().cols());
  for (Eigen::Index a = 0; a < axes; ++a) {
    Vector v = svd.matrixV().col(a);
    Eigen::Index arg;
    v.cwiseAbs().maxCoeff(&arg);
    if (v[arg] < 0.0) v = -v;
    out.col(a) = centred * v;
  }
  return out;
}

std::vector<int> label_order(const std::vector<int>& labels) {
  std::vector<int> order(labels.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return labels[a] < labels[b]; });
  return order;
}

Matrix permute_symmetric(const Matrix& w, const std::vector<int>& order) {
  if (w.rows() != w.cols() || static_cast<std::size_t>(w.rows()) != order.size())
    throw ShapeError("permutation does not match matrix size");
  const auto n = static_cast<Eigen::Index>(order.size());
  Matrix out(n, n);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) out(i, j) = w(order[i], order[j]);
  return out;
}

void export_views(const ExperimentConfig& config, const Federation& fed, const std::filesystem::path& out_dir) {
  std::filesystem::create_directories(out_dir);
  for (const auto& client : fed.clients) {
    const std::string stem = "client_" + std::to_string(client.client_id);
    const RowMatrix proj = pca_2d(encode(client.params.encoder, client.shard.samples));
    std::ofstream csv(out_dir / (stem + "_pca.csv"));
    if (!csv) throw ConfigError("cannot write " + (out_dir / (stem + "_pca.csv")).string());
    csv.precision(9);
    csv << "x,y,label\n";
    for (Eigen::Index i = 0; i < proj.rows(); ++i)
      csv << proj(i, 0) << ',' << proj(i, 1) << ',' << client.shard.labels[i] << '\n';
    const AffinityMatrix w = affinity_from_r(client.params.self_expressive.r, config.affinity_top_s);
    write_affinity_binary(out_dir / (stem + "_affinity.bin"),
                          permute_symmetric(w.w, label_order(client.shard.labels)));
  }
}

void export_views(const std::filesystem::path& run_dir) {
  ExperimentConfig config;
  const Federation fed = load_run_state(run_dir, config);
  export_views(config, fed, run_dir / "exports");
}

}  // namespace fdsc
