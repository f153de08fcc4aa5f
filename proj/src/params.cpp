// SPDX-License-Identifier: Apache-2.0

#include "s2sum/params.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <random>

#include "s2sum/text.hpp"

namespace s2sum {

double unit_uniform(std::uint64_t bits) { return static_cast<double>(bits >> 11) * 0x1.0p-53; }

Tensor ParamStore::add(const std::string& name, Shape shape, Init init) {
  if (contains(name)) throw ContractError("parameter '" + name + "' registered twice");
  Tensor t = Tensor::zeros(std::move(shape), /*requires_grad=*/true);
  entries_.push_back({name, t, init});
  return t;
}

void ParamStore::initialize(std::uint64_t seed, double scale) {
  std::mt19937_64 rng(seed);
  for (auto& e : entries_) {
    auto values = e.tensor.mutable_values();
    if (e.init == Init::kZero) {
      std::fill(values.begin(), values.end(), 0.0);
      continue;
    }
    for (double& v : values) v = (2.0 * unit_uniform(rng()) - 1.0) * scale;
  }
  zero_grad();
}

const Tensor& ParamStore::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e.tensor;
  throw std::out_of_range("no parameter named '" + name + "'");
}

bool ParamStore::contains(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

std::size_t ParamStore::parameter_count() const {
  std::size_t n = 0;
  for (const auto& e : entries_) n += e.tensor.size();
  return n;
}

void ParamStore::zero_grad() {
  for (auto& e : entries_) e.tensor.zero_grad();
}

double ParamStore::grad_norm() const {
  double sq = 0.0;
  for (const auto& e : entries_)
    for (double g : e.tensor.grad()) sq += g * g;
  return std::sqrt(sq);
}

bool ParamStore::all_finite() const {
  for (const auto& e : entries_)
    for (double v : e.tensor.values())
      if (!std::isfinite(v)) return false;
  return true;
}

std::vector<std::vector<double>> ParamStore::snapshot() const {
  std::vector<std::vector<double>> out;
  out.reserve(entries_.size());
  for (const auto& e : entries_) out.emplace_back(e.tensor.values().begin(), e.tensor.values().end());
  return out;
}

void ParamStore::restore(const std::vector<std::vector<double>>& values) {
  if (values.size() != entries_.size()) throw ContractError("restore: snapshot does not match parameter count");
  for (std::size_t i = 0; i < entries_.size(); ++i) {
    auto dst = entries_[i].tensor.mutable_values();
    if (values[i].size() != dst.size()) throw ContractError("restore: size mismatch for " + entries_[i].name);
    std::copy(values[i].begin(), values[i].end(), dst.begin());
  }
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[8] = {'S', '2', 'S', 'M', 'C', 'K', 'v', '1'};
constexpr std::uint32_t kVersion = 1;

template <typename T>
void put_le(std::string& out, T v) {
  for (std::size_t i = 0; i < sizeof(T); ++i) out.push_back(static_cast<char>((static_cast<std::uint64_t>(v) >> (8 * i)) & 0xffu));
}

void put_double(std::string& out, double v) { put_le(out, std::bit_cast<std::uint64_t>(v)); }

class ByteReader {
 public:
  explicit ByteReader(const std::string& bytes) : bytes_(bytes) {}
  template <typename T>
  T le() {
    need(sizeof(T));
    std::uint64_t v = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i)
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += sizeof(T);
    return static_cast<T>(v);
  }
  std::string take(std::size_t n) {
    need(n);
    std::string s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::size_t pos() const { return pos_; }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw DataError("checkpoint truncated");
  }
  const std::string& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params, const std::string& config_json) {
  std::string out(kMagic, sizeof(kMagic));
  put_le<std::uint32_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(config_json.size()));
  out += config_json;
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(params.size()));
  std::uint64_t offset = 0;
  for (const auto& e : params.entries()) {
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out += e.name;
    put_le<std::uint32_t>(out, static_cast<std::uint32_t>(e.tensor.rank()));
    for (std::size_t d : e.tensor.shape()) put_le<std::uint64_t>(out, d);
    put_le<std::uint64_t>(out, offset);
    offset += e.tensor.size() * sizeof(double);
  }
  for (const auto& e : params.entries())
    for (double v : e.tensor.values()) put_double(out, v);

  std::ofstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot write checkpoint " + path.string());
  file.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!file) throw DataError("failed writing checkpoint " + path.string());
}

CheckpointData read_checkpoint(const std::filesystem::path& path) {
  std::ifstream file(path, std::ios::binary);
  if (!file) throw DataError("cannot open checkpoint " + path.string());
  const std::string bytes((std::istreambuf_iterator<char>(file)), std::istreambuf_iterator<char>());
  ByteReader r(bytes);
  if (r.take(8) != std::string(kMagic, 8)) throw DataError(path.string() + ": not a checkpoint");
  const auto version = r.le<std::uint32_t>();
  if (version != kVersion) throw DataError(path.string() + ": unsupported checkpoint version " + std::to_string(version));
  CheckpointData data;
  data.config_json = r.take(r.le<std::uint32_t>());
  const auto count = r.le<std::uint32_t>();
  std::vector<std::uint64_t> offsets;
  for (std::uint32_t i = 0; i < count; ++i) {
    data.names.push_back(r.take(r.le<std::uint32_t>()));
    Shape shape(r.le<std::uint32_t>());
    for (auto& d : shape) d = static_cast<std::size_t>(r.le<std::uint64_t>());
    data.shapes.push_back(std::move(shape));
    offsets.push_back(r.le<std::uint64_t>());
  }
  const std::size_t blob_start = r.pos();
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t n = shape_size(data.shapes[i]);
    const std::size_t begin = blob_start + offsets[i];
    if (begin + n * sizeof(double) > bytes.size()) throw DataError(path.string() + ": blob out of range");
    std::vector<double> values(n);
    for (std::size_t k = 0; k < n; ++k) {
      std::uint64_t bits = 0;
      for (std::size_t b = 0; b < 8; ++b)
        bits |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[begin + k * 8 + b])) << (8 * b);
      values[k] = std::bit_cast<double>(bits);
    }
    data.values.push_back(std::move(values));
  }
  return data;
}

void load_into(const CheckpointData& data, ParamStore& params) {
  if (data.names.size() != params.size()) {
    throw DataError("checkpoint holds " + std::to_string(data.names.size()) + " tensors, model expects " +
                    std::to_string(params.size()));
  }
  for (std::size_t i = 0; i < data.names.size(); ++i) {
    const auto& e = params.entries()[i];
    if (e.name != data.names[i] || e.tensor.shape() != data.shapes[i]) {
      throw DataError("checkpoint tensor " + data.names[i] + shape_string(data.shapes[i]) + " does not match model tensor " +
                      e.name + shape_string(e.tensor.shape()));
    }
  }
  params.restore(data.values);
}

}  // namespace s2sum
