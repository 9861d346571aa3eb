#include "fdsc/dataio.hpp"

#include <zlib.h>

#include <algorithm>
#include <array>
#include <memory>
#include <nlohmann/json.hpp>

#include "fdsc/errors.hpp"
#include "fdsc/random.hpp"

namespace fdsc {
namespace {

// gzread handles both compressed and plain files.
std::vector<unsigned char> read_all(const std::filesystem::path& path) {
  gzFile file = gzopen(path.c_str(), "rb");
  if (file == nullptr) throw FormatError("cannot open " + path.string());
  std::unique_ptr<gzFile_s, decltype(&gzclose)> guard(file, &gzclose);
  std::vector<unsigned char> bytes;
  std::array<unsigned char, 1 << 16> buffer{};
  for (;;) {
    const int got = gzread(file, buffer.data(), static_cast<unsigned>(buffer.size()));
    if (got < 0) throw FormatError("read error in " + path.string());
    if (got == 0) break;
    bytes.insert(bytes.end(), buffer.begin(), buffer.begin() + got);
  }
  return bytes;
}

std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset,
                        const std::filesystem::path& path) {
  if (offset + 4 > bytes.size()) throw FormatError("truncated header in " + path.string());
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

constexpr std::uint32_t kImageMagic = 0x00000803;
constexpr std::uint32_t kLabelMagic = 0x00000801;

}  // namespace

void Dataset::validate() const {
  if (shape.height <= 0 || shape.width <= 0 || shape.channels <= 0)
    throw DataError("dataset image shape must be positive");
  if (samples.cols() != shape.size())
    throw DataError("sample width does not match image shape");
  if (samples.rows() != static_cast<Eigen::Index>(labels.size()))
    throw DataError("sample/label count mismatch");
  if (class_count <= 0) throw DataError("class count must be positive");
  for (int label : labels)
    if (label < 0 || label >= class_count) throw DataError("label out of range");
  if (samples.size() > 0 && (samples.minCoeff() < 0.0 || samples.maxCoeff() > 1.0))
    throw DataError("pixel values must lie in [0, 1]");
}

int DatasetShard::distinct_labels() const {
  return static_cast<int>(std::set<int>(labels.begin(), labels.end()).size());
}

Dataset load_mnist_idx(const std::filesystem::path& images_path,
                       const std::filesystem::path& labels_path) {
  const auto images = read_all(images_path);
  const auto labels = read_all(labels_path);

  if (read_be32(images, 0, images_path) != kImageMagic)
    throw FormatError("bad image magic in " + images_path.string());
  const std::uint32_t n = read_be32(images, 4, images_path);
  const std::uint32_t rows = read_be32(images, 8, images_path);
  const std::uint32_t cols = read_be32(images, 12, images_path);
  const std::size_t pixels = std::size_t{rows} * cols;
  if (images.size() < 16 + std::size_t{n} * pixels)
    throw FormatError("truncated image payload in " + images_path.string());

  if (read_be32(labels, 0, labels_path) != kLabelMagic)
    throw FormatError("bad label magic in " + labels_path.string());
  const std::uint32_t label_count = read_be32(labels, 4, labels_path);
  if (label_count != n)
    throw FormatError("image count " + std::to_string(n) + " != label count " +
                      std::to_string(label_count));
  if (labels.size() < 8 + std::size_t{n})
    throw FormatError("truncated label payload in " + labels_path.string());

  Dataset out;
  out.shape = {static_cast<int>(rows), static_cast<int>(cols), 1};
  out.class_count = 10;
  out.samples.resize(n, static_cast<Eigen::Index>(pixels));
  out.labels.resize(n);
  for (std::uint32_t i = 0; i < n; ++i) {
    const unsigned char* src = images.data() + 16 + std::size_t{i} * pixels;
    for (std::size_t p = 0; p < pixels; ++p) out.samples(i, p) = src[p] / 255.0;
    const int label = labels[8 + i];
    if (label >= out.class_count) throw FormatError("MNIST label above 9");
    out.labels[i] = label;
  }
  return out;
}

Dataset take_prefix(const Dataset& dataset, int count) {
  if (count <= 0 || count >= dataset.size()) return dataset;
  Dataset out;
  out.shape = dataset.shape;
  out.class_count = dataset.class_count;
  out.samples = dataset.samples.topRows(count);
  out.labels.assign(dataset.labels.begin(), dataset.labels.begin() + count);
  return out;
}

std::vector<DatasetShard> partition(const Dataset& dataset, const PartitionSpec& spec) {
  const int n = dataset.size();
  const int c = dataset.class_count;
  if (spec.clients < 1) throw ConfigError("partition needs at least one client");
  if (spec.classes_per_client < 1 || spec.classes_per_client > c)
    throw ConfigError("classes per client q must satisfy 1 <= q <= c");
  if (n < spec.clients) throw ConfigError("fewer samples than clients");
  const int per_client = spec.samples_per_client > 0 ? spec.samples_per_client : n / spec.clients;
  if (static_cast<long long>(per_client) * spec.clients > n)
    throw ConfigError("m * samples_per_client exceeds the dataset size");

  Rng rng(spec.seed);
  std::vector<char> taken(n, 0);
  std::vector<DatasetShard> shards;
  shards.reserve(spec.clients);

  for (int client = 0; client < spec.clients; ++client) {
    // q classes uniformly without replacement (partial Fisher-Yates).
    std::vector<int> classes(c);
    for (int i = 0; i < c; ++i) classes[i] = i;
    for (int i = 0; i < spec.classes_per_client; ++i) {
      const int j = i + static_cast<int>(rng.below(c - i));
      std::swap(classes[i], classes[j]);
    }
    std::set<int> chosen(classes.begin(), classes.begin() + spec.classes_per_client);

    std::vector<int> pool;
    std::vector<int> eligible;
    for (int i = 0; i < n; ++i) {
      if (!chosen.contains(dataset.labels[i])) continue;
      eligible.push_back(i);
      if (!taken[i]) pool.push_back(i);
    }
    if (eligible.empty())
      throw ConfigError("client " + std::to_string(client) + " drew classes with no samples");

    std::vector<int> picked;
    picked.reserve(per_client);
    const int without = std::min<int>(per_client, static_cast<int>(pool.size()));
    for (int i = 0; i < without; ++i) {
      const int j = i + static_cast<int>(rng.below(pool.size() - i));
      std::swap(pool[i], pool[j]);
      picked.push_back(pool[i]);
      taken[pool[i]] = 1;
    }
    // Pool exhausted for these classes: top up with replacement.
    while (static_cast<int>(picked.size()) < per_client)
      picked.push_back(eligible[rng.below(eligible.size())]);

    DatasetShard shard;
    shard.client_id = client;
    shard.shape = dataset.shape;
    shard.classes_present = std::move(chosen);
    shard.sample_indices = picked;
    shard.samples.resize(per_client, dataset.samples.cols());
    shard.labels.resize(per_client);
    for (int i = 0; i < per_client; ++i) {
      shard.samples.row(i) = dataset.samples.row(picked[i]);
      shard.labels[i] = dataset.labels[picked[i]];
    }
    shards.push_back(std::move(shard));
  }
  return shards;
}

std::string partition_manifest_json(const std::vector<DatasetShard>& shards) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& shard : shards) {
    out.push_back({{"client_id", shard.client_id},
                   {"classes", std::vector<int>(shard.classes_present.begin(),
                                                shard.classes_present.end())},
                   {"sample_indices", shard.sample_indices}});
  }
  return out.dump(2);
}

}  // namespace fdsc
