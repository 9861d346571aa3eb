#include "fdsc/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <map>
#include <numeric>

#include "fdsc/errors.hpp"

namespace fdsc {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes little-endian host");

template <class T>
void put(std::ofstream& out, T value) {
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <class T>
bool get(std::ifstream& in, T& value) {
  in.read(reinterpret_cast<char*>(&value), sizeof(T));
  return static_cast<std::size_t>(in.gcount()) == sizeof(T);
}

template <class Params>
std::vector<NamedTensor> collect(const Params& params) {
  std::vector<NamedTensor> tensors;
  for_each_tensor(params, [&](const std::string& name, std::span<const double> values,
                              const std::vector<std::int64_t>& dims) {
    NamedTensor t{name, dims, std::vector<float>(values.size())};
    for (std::size_t i = 0; i < values.size(); ++i) t.values[i] = static_cast<float>(values[i]);
    tensors.push_back(std::move(t));
  });
  return tensors;
}

template <class Params>
void restore(const std::filesystem::path& path, Params& params) {
  std::map<std::string, NamedTensor> by_name;
  for (auto& t : read_tensors(path)) by_name.emplace(t.name, std::move(t));
  for_each_tensor(params, [&](const std::string& name, std::span<double> values,
                              const std::vector<std::int64_t>& dims) {
    auto it = by_name.find(name);
    if (it == by_name.end()) throw FormatError("checkpoint " + path.string() + " lacks tensor " + name);
    if (it->second.dims != dims) throw ShapeError("checkpoint tensor " + name + " has unexpected dims");
    for (std::size_t i = 0; i < values.size(); ++i) values[i] = it->second.values[i];
  });
}

}  // namespace

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write checkpoint " + path.string());
  out.write("FDSC", 4);
  put(out, kCheckpointVersion);
  for (const auto& t : tensors) {
    const std::int64_t count = std::accumulate(t.dims.begin(), t.dims.end(), std::int64_t{1}, std::multiplies<>());
    if (count != static_cast<std::int64_t>(t.values.size()))
      throw ShapeError("tensor " + t.name + " payload does not match its dims");
    put(out, static_cast<std::uint32_t>(t.name.size()));
    out.write(t.name.data(), static_cast<std::streamsize>(t.name.size()));
    put(out, static_cast<std::uint32_t>(t.dims.size()));
    for (auto d : t.dims) put(out, static_cast<std::uint32_t>(d));
    out.write(reinterpret_cast<const char*>(t.values.data()),
              static_cast<std::streamsize>(t.values.size() * sizeof(float)));
  }
  if (!out) throw ConfigError("failed writing checkpoint " + path.string());
}

std::vector<NamedTensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("missing checkpoint " + path.string());
  char magic[4];
  in.read(magic, 4);
  if (in.gcount() != 4 || std::memcmp(magic, "FDSC", 4) != 0)
    throw FormatError("bad checkpoint magic in " + path.string());
  std::uint16_t version = 0;
  if (!get(in, version) || version != kCheckpointVersion)
    throw FormatError("unsupported checkpoint version in " + path.string());

  std::vector<NamedTensor> tensors;
  for (;;) {
    std::uint32_t name_len = 0;
    in.read(reinterpret_cast<char*>(&name_len), sizeof(name_len));
    if (in.gcount() == 0) break;
    if (in.gcount() != sizeof(name_len) || name_len > (1u << 16))
      throw FormatError("truncated checkpoint " + path.string());
    NamedTensor t;
    t.name.resize(name_len);
    in.read(t.name.data(), name_len);
    std::uint32_t rank = 0;
    if (static_cast<std::uint32_t>(in.gcount()) != name_len || !get(in, rank) || rank > 8)
      throw FormatError("truncated checkpoint " + path.string());
    std::int64_t count = 1;
    for (std::uint32_t i = 0; i < rank; ++i) {
      std::uint32_t d = 0;
      if (!get(in, d)) throw FormatError("truncated checkpoint " + path.string());
      t.dims.push_back(d);
      count *= d;
    }
    t.values.resize(static_cast<std::size_t>(count));
    in.read(reinterpret_cast<char*>(t.values.data()), static_cast<std::streamsize>(count * sizeof(float)));
    if (in.gcount() != static_cast<std::streamsize>(count * sizeof(float)))
      throw FormatError("truncated checkpoint payload in " + path.string());
    tensors.push_back(std::move(t));
  }
  return tensors;
}

void save_checkpoint(const std::filesystem::path& path, const NetParams& net) { write_tensors(path, collect(net)); }

void save_checkpoint(const std::filesystem::path& path, const EncoderParams& encoder) {
  write_tensors(path, collect(encoder));
}

void load_checkpoint(const std::filesystem::path& path, NetParams& net) { restore(path, net); }

void load_checkpoint(const std::filesystem::path& path, EncoderParams& encoder) { restore(path, encoder); }

}  // namespace fdsc
