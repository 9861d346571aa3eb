#pragma once

#include <filesystem>
#include <vector>

#include "fdsc/config.hpp"
#include "fdsc/federation.hpp"
#include "fdsc/types.hpp"

namespace fdsc {

// Projection onto the top two principal axes of the centred rows. Each
// axis is signed so its largest-magnitude loading is positive.
RowMatrix pca_2d(const RowMatrix& points);

// Indices that stably sort samples by label.
std::vector<int> label_order(const std::vector<int>& labels);

// W[order][order].
Matrix permute_symmetric(const Matrix& w, const std::vector<int>& order);

// Writes client_<id>_pca.csv (x, y, label) from the encoder output and
// client_<id>_affinity.bin (label-sorted) into `out_dir`.
void export_views(const ExperimentConfig& config, const Federation& fed, const std::filesystem::path& out_dir);

// Same, reading the run's manifest and checkpoints; writes to run_dir/exports.
void export_views(const std::filesystem::path& run_dir);

}  // namespace fdsc
