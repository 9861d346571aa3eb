#pragma once

#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "fdsc/types.hpp"

namespace fdsc {

// A labelled image set. Rows of `samples` are images flattened in
// row-major H x W x C order with pixel values in [0, 1].
struct Dataset {
  RowMatrix samples;
  std::vector<int> labels;
  ImageShape shape;
  int class_count = 0;

  int size() const { return static_cast<int>(labels.size()); }

  // Throws DataError if any invariant (label range, pixel range, shape) fails.
  void validate() const;
};

// One client's private slice of a dataset.
struct DatasetShard {
  int client_id = 0;
  RowMatrix samples;
  std::vector<int> labels;
  std::set<int> classes_present;
  // Row index of each sample in the source dataset.
  std::vector<int> sample_indices;
  ImageShape shape;

  int size() const { return static_cast<int>(labels.size()); }
  // Number of distinct labels actually present in the shard.
  int distinct_labels() const;
};

struct PartitionSpec {
  int clients = 1;               // m
  int classes_per_client = 1;    // q
  int samples_per_client = 0;    // 0 means floor(n / m)
  std::uint64_t seed = 0;
};

// Reads MNIST IDX image/label files. Files ending in ".gz" are inflated
// transparently. Throws FormatError on bad magic, truncation, or count
// mismatch.
Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path);

// Reads one subdirectory per class (lexicographic order gives the class
// index) of binary PGM or PNG images, resized to target_h x target_w.
Dataset load_image_dir(const std::filesystem::path& root, int target_h, int target_w);

// Bilinear resize of one H x W x C image (row-major, interleaved channels)
// with corner-aligned sampling. A target extent of 1 samples the centre.
std::vector<double> resize_bilinear(const std::vector<double>& pixels, ImageShape from,
                                    int target_h, int target_w);

// Non-IID split: each client draws q classes, then samples from the
// shared pool restricted to those classes without replacement.
std::vector<DatasetShard> partition(const Dataset& dataset, const PartitionSpec& spec);

// Keeps the first `count` samples (count <= 0 keeps all).
Dataset take_prefix(const Dataset& dataset, int count);

// JSON array of {client_id, classes, sample_indices}.
std::string partition_manifest_json(const std::vector<DatasetShard>& shards);

}  // namespace fdsc
