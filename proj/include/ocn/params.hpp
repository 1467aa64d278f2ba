#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "ocn/tensor.hpp"

namespace ocn {

struct Parameter {
  std::string name;
  Tensor tensor;
  bool trainable = true;
};

// Named, insertion-ordered collection of model parameters. Names are unique;
// shapes are fixed at registration.
class ParamStore {
 public:
  Tensor add(const std::string& name, Tensor t, bool trainable = true) {
    if (index_.count(name)) throw std::invalid_argument("ParamStore: duplicate name " + name);
    t.set_requires_grad(trainable);
    index_[name] = params_.size();
    params_.push_back({name, t, trainable});
    return t;
  }

  bool has(const std::string& name) const { return index_.count(name) != 0; }

  Tensor get(const std::string& name) const {
    auto it = index_.find(name);
    if (it == index_.end()) throw std::invalid_argument("ParamStore: unknown parameter " + name);
    return params_[it->second].tensor;
  }

  std::vector<Parameter>& all() { return params_; }
  const std::vector<Parameter>& all() const { return params_; }
  std::size_t size() const { return params_.size(); }

  void zero_grad() {
    for (auto& p : params_) p.tensor.zero_grad();
  }

  std::size_t value_count() const {
    std::size_t n = 0;
    for (const auto& p : params_) n += p.tensor.size();
    return n;
  }

 private:
  std::vector<Parameter> params_;
  std::unordered_map<std::string, std::size_t> index_;
};

// ---------------------------------------------------------------------------
// Checkpoint archive. Exact layout (all integers little-endian):
//   magic   "OCNW"            4 bytes
//   version uint32            currently 1
//   count   uint32            number of entries
//   entry*  name_len uint32, name bytes,
//           ndim uint32 (always 2), dims uint32[ndim]  (rows, cols),
//           values float64-LE[rows*cols], row-major
// ---------------------------------------------------------------------------

namespace detail {

constexpr char kCkptMagic[4] = {'O', 'C', 'N', 'W'};
constexpr std::uint32_t kCkptVersion = 1;

inline void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t v;
  std::memcpy(&v, &d, 8);
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

struct ByteReader {
  const std::string& buf;
  std::size_t pos = 0;
  explicit ByteReader(const std::string& b) : buf(b) {}
  void need(std::size_t n) const {
    if (pos + n > buf.size()) throw std::runtime_error("checkpoint: truncated file");
  }
  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 4;
    return v;
  }
  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf[pos + i])) << (8 * i);
    pos += 8;
    double d;
    std::memcpy(&d, &v, 8);
    return d;
  }
  std::string bytes(std::size_t n) {
    need(n);
    std::string s = buf.substr(pos, n);
    pos += n;
    return s;
  }
};

}  // namespace detail

inline std::string serialize_checkpoint(const std::vector<Parameter>& params) {
  std::string out;
  out.append(detail::kCkptMagic, 4);
  detail::put_u32(out, detail::kCkptVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    detail::put_u32(out, static_cast<std::uint32_t>(p.name.size()));
    out.append(p.name);
    detail::put_u32(out, 2);
    detail::put_u32(out, static_cast<std::uint32_t>(p.tensor.rows()));
    detail::put_u32(out, static_cast<std::uint32_t>(p.tensor.cols()));
    for (double v : p.tensor.values()) detail::put_f64(out, v);
  }
  return out;
}

inline void save_checkpoint(const ParamStore& store, const std::string& path) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write checkpoint: " + path);
  const std::string bytes = serialize_checkpoint(store.all());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("checkpoint write failed: " + path);
}

inline std::vector<Parameter> load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint: " + path);
  std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  detail::ByteReader r(buf);
  if (r.bytes(4) != std::string(detail::kCkptMagic, 4))
    throw std::runtime_error("checkpoint: bad magic in " + path);
  const std::uint32_t version = r.u32();
  if (version != detail::kCkptVersion)
    throw std::runtime_error("checkpoint: unsupported format version " + std::to_string(version));
  const std::uint32_t count = r.u32();
  std::vector<Parameter> out;
  out.reserve(count);
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::uint32_t name_len = r.u32();
    const std::string name = r.bytes(name_len);
    const std::uint32_t ndim = r.u32();
    if (ndim != 2) throw std::runtime_error("checkpoint: entry " + name + " has ndim " + std::to_string(ndim));
    const int rows = static_cast<int>(r.u32());
    const int cols = static_cast<int>(r.u32());
    Tensor t(rows, cols);
    for (auto& v : t.values()) v = r.f64();
    out.push_back({name, t, true});
  }
  return out;
}

// Copies checkpoint entries into matching parameters of `store`. Every name
// in `store` (with the given prefix, if any) must be present with an
// identical shape; extra checkpoint entries outside the prefix are ignored.
inline void restore_into(ParamStore& store, const std::vector<Parameter>& loaded,
                         const std::string& prefix = "") {
  std::unordered_map<std::string, const Parameter*> by_name;
  for (const auto& p : loaded) by_name[p.name] = &p;
  for (auto& p : store.all()) {
    if (!prefix.empty() && p.name.rfind(prefix, 0) != 0) continue;
    auto it = by_name.find(p.name);
    if (it == by_name.end())
      throw std::runtime_error("checkpoint: missing parameter " + p.name);
    const Tensor& src = it->second->tensor;
    if (src.rows() != p.tensor.rows() || src.cols() != p.tensor.cols())
      throw std::runtime_error("checkpoint: shape mismatch for " + p.name + ": checkpoint " +
                               src.shape_str() + " vs model " + p.tensor.shape_str());
    p.tensor.values() = src.values();
  }
}

}  // namespace ocn
