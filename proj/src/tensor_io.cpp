// Copyright 2026 The hdrdiff Authors
// SPDX-License-Identifier: Apache-2.0

#include "hdrdiff/tensor_io.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>
#include <limits>
#include <sstream>

namespace hdrdiff {

static_assert(std::endian::native == std::endian::little, "HDRF I/O assumes a little-endian host");

namespace {

constexpr char kMagic[4] = {'H', 'D', 'R', 'F'};
// Largest element count accepted; keeps byte counts far from overflow.
constexpr std::uint64_t kMaxElements = std::uint64_t{1} << 40;

template <typename T>
void put(std::vector<char>& out, T v) {
  char b[sizeof(T)];
  std::memcpy(b, &v, sizeof(T));
  out.insert(out.end(), b, b + sizeof(T));
}

class Reader {
 public:
  Reader(const std::vector<char>& bytes, const std::string& source) : bytes_(bytes), source_(source) {}

  template <typename T>
  T get(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, bytes_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }

  void read(void* dst, std::size_t n, const char* what) {
    need(n, what);
    if (n) std::memcpy(dst, bytes_.data() + pos_, n);
    pos_ += n;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }
  const std::string& source() const { return source_; }

 private:
  void need(std::size_t n, const char* what) {
    if (remaining() < n)
      throw TruncatedFileError(source_ + ": truncated while reading " + what + " at byte " + std::to_string(pos_));
  }

  const std::vector<char>& bytes_;
  const std::string& source_;
  std::size_t pos_ = 0;
};

NamedTensor bytes_tensor(const std::string& name, const std::string& text) {
  NamedTensor n{name, {static_cast<std::uint32_t>(text.size())}, {}};
  n.data.reserve(text.size());
  for (unsigned char ch : text) n.data.push_back(static_cast<float>(ch));
  return n;
}

std::string tensor_bytes(const NamedTensor& n) {
  std::string s;
  s.reserve(n.data.size());
  for (float f : n.data) {
    if (!(f >= 0.0f && f <= 255.0f)) throw LoadError("tensor '" + n.name + "' does not hold byte values");
    s.push_back(static_cast<char>(static_cast<unsigned char>(f)));
  }
  return s;
}

template <typename Scalar>
NamedTensor matrix_tensor(const std::string& name, const std::vector<int>& dims, const Matrix<Scalar>& m) {
  NamedTensor n{name, {}, std::vector<float>(static_cast<std::size_t>(m.size()))};
  for (int d : dims) n.dims.push_back(static_cast<std::uint32_t>(d));
  const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m.template cast<float>();
  std::copy(rm.data(), rm.data() + rm.size(), n.data.begin());
  return n;
}

template <typename Scalar>
Matrix<Scalar> tensor_matrix(const NamedTensor& n, const std::vector<int>& dims) {
  std::vector<std::uint32_t> want(dims.begin(), dims.end());
  if (n.dims != want) throw LoadError("checkpoint tensor '" + n.name + "' has unexpected shape");
  Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> m(
      n.data.data(), matrix_rows(dims), matrix_cols(dims));
  return m.template cast<Scalar>();
}

}  // namespace

std::uint64_t NamedTensor::numel() const {
  std::uint64_t n = 1;
  for (std::uint32_t d : dims) n *= d;
  return n;
}

std::vector<char> encode_tensors(const std::vector<NamedTensor>& tensors) {
  if (tensors.size() > std::numeric_limits<std::uint32_t>::max()) throw InvalidArgument("HDRF: too many tensors");
  std::vector<char> out(kMagic, kMagic + 4);
  put<std::uint16_t>(out, kHdrfVersion);
  put<std::uint32_t>(out, static_cast<std::uint32_t>(tensors.size()));
  for (const NamedTensor& t : tensors) {
    if (t.name.size() > std::numeric_limits<std::uint16_t>::max())
      throw InvalidArgument("HDRF: tensor name longer than 65535 bytes");
    if (t.dims.size() > std::numeric_limits<std::uint8_t>::max())
      throw InvalidArgument("HDRF: tensor '" + t.name + "' has more than 255 dims");
    if (t.numel() != t.data.size())
      throw ShapeMismatch("HDRF: tensor '" + t.name + "' data size does not match its dims");
    put<std::uint16_t>(out, static_cast<std::uint16_t>(t.name.size()));
    out.insert(out.end(), t.name.begin(), t.name.end());
    put<std::uint8_t>(out, static_cast<std::uint8_t>(t.dims.size()));
    for (std::uint32_t d : t.dims) put<std::uint32_t>(out, d);
    const char* p = reinterpret_cast<const char*>(t.data.data());
    out.insert(out.end(), p, p + t.data.size() * sizeof(float));
  }
  return out;
}

std::vector<NamedTensor> decode_tensors(const std::vector<char>& bytes, const std::string& source) {
  Reader r(bytes, source);
  char magic[4];
  r.read(magic, 4, "magic");
  if (std::memcmp(magic, kMagic, 4) != 0) throw BadMagicError(source + ": not an HDRF file (bad magic)");
  const auto version = r.get<std::uint16_t>("version");
  if (version != kHdrfVersion)
    throw VersionMismatchError(source + ": unsupported HDRF version " + std::to_string(version));
  const auto count = r.get<std::uint32_t>("tensor count");
  std::vector<NamedTensor> out;
  for (std::uint32_t i = 0; i < count; ++i) {
    NamedTensor t;
    const auto len = r.get<std::uint16_t>("name length");
    t.name.resize(len);
    r.read(t.name.data(), len, "name");
    const auto ndim = r.get<std::uint8_t>("ndim");
    std::uint64_t numel = 1;
    for (int d = 0; d < ndim; ++d) {
      const auto dim = r.get<std::uint32_t>("dims");
      t.dims.push_back(dim);
      if (dim != 0 && numel > kMaxElements / dim)
        throw DimOverflowError(source + ": tensor '" + t.name + "' element count overflows");
      numel *= dim;
    }
    if (numel > kMaxElements) throw DimOverflowError(source + ": tensor '" + t.name + "' element count overflows");
    if (numel * sizeof(float) > r.remaining())
      throw TruncatedFileError(source + ": truncated in data of tensor '" + t.name + "'");
    t.data.resize(static_cast<std::size_t>(numel));
    r.read(t.data.data(), t.data.size() * sizeof(float), "data");
    out.push_back(std::move(t));
  }
  if (r.remaining() != 0) throw LoadError(source + ": trailing bytes after last tensor");
  return out;
}

void write_tensors(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  const std::vector<char> bytes = encode_tensors(tensors);
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw Error(path.string() + ": cannot open for writing");
  f.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!f) throw Error(path.string() + ": write failed");
}

std::vector<NamedTensor> read_tensors(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw LoadError(path.string() + ": cannot open");
  const std::vector<char> bytes((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());
  return decode_tensors(bytes, path.string());
}

template <typename Scalar>
std::vector<NamedTensor> checkpoint_tensors(const TrainState<Scalar>& state, const std::string& config_text) {
  std::vector<NamedTensor> out;
  out.push_back(bytes_tensor("meta/config", config_text));
  // Counters as decimal text: float32 cannot hold large integers exactly.
  out.push_back(bytes_tensor("meta/step", std::to_string(state.iteration) + " " + std::to_string(state.adam.step)));
  std::ostringstream rng;
  rng << state.rng;
  out.push_back(bytes_tensor("meta/rng", rng.str()));
  for (const auto& [name, p] : state.params.entries()) {
    out.push_back(matrix_tensor<Scalar>("param/" + name, p.dims, p.value));
    out.push_back(matrix_tensor<Scalar>("ema/" + name, p.dims, p.ema));
    auto m = state.adam.m.find(name);
    auto v = state.adam.v.find(name);
    if (m != state.adam.m.end() && m->second.size() != 0)
      out.push_back(matrix_tensor<Scalar>("adam_m/" + name, p.dims, m->second));
    if (v != state.adam.v.end() && v->second.size() != 0)
      out.push_back(matrix_tensor<Scalar>("adam_v/" + name, p.dims, v->second));
  }
  return out;
}

template <typename Scalar>
Checkpoint<Scalar> load_checkpoint(const std::filesystem::path& path) {
  const std::vector<NamedTensor> ts = read_tensors(path);
  Checkpoint<Scalar> ck;
  std::map<std::string, const NamedTensor*> by_name;
  for (const NamedTensor& t : ts) by_name[t.name] = &t;
  auto meta = [&](const std::string& key) -> std::string {
    auto it = by_name.find(key);
    if (it == by_name.end()) throw LoadError(path.string() + ": checkpoint lacks " + key);
    return tensor_bytes(*it->second);
  };
  ck.config_text = meta("meta/config");
  {
    std::istringstream s(meta("meta/step"));
    if (!(s >> ck.state.iteration >> ck.state.adam.step)) throw LoadError(path.string() + ": malformed meta/step");
    std::istringstream r(meta("meta/rng"));
    if (!(r >> ck.state.rng)) throw LoadError(path.string() + ": malformed meta/rng");
  }
  for (const NamedTensor& t : ts) {
    if (t.name.rfind("param/", 0) != 0) continue;
    const std::string name = t.name.substr(6);
    std::vector<int> dims(t.dims.begin(), t.dims.end());
    ck.state.params.add(name, dims, tensor_matrix<Scalar>(t, dims));
    auto ema = by_name.find("ema/" + name);
    if (ema == by_name.end()) throw LoadError(path.string() + ": checkpoint lacks ema/" + name);
    ck.state.params.at(name).ema = tensor_matrix<Scalar>(*ema->second, dims);
    if (auto m = by_name.find("adam_m/" + name); m != by_name.end())
      ck.state.adam.m[name] = tensor_matrix<Scalar>(*m->second, dims);
    if (auto v = by_name.find("adam_v/" + name); v != by_name.end())
      ck.state.adam.v[name] = tensor_matrix<Scalar>(*v->second, dims);
  }
  return ck;
}

#define HDRDIFF_INSTANTIATE(S)                                                                            \
  template std::vector<NamedTensor> checkpoint_tensors<S>(const TrainState<S>&, const std::string&);     \
  template Checkpoint<S> load_checkpoint<S>(const std::filesystem::path&);

HDRDIFF_INSTANTIATE(float)
HDRDIFF_INSTANTIATE(double)
#undef HDRDIFF_INSTANTIATE

}  // namespace hdrdiff
