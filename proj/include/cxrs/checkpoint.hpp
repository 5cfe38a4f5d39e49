#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "cxrs/error.hpp"
#include "cxrs/nn.hpp"
#include "cxrs/rng.hpp"
#include "cxrs/tensor.hpp"

namespace cxrs {

// On-disk model snapshot. Layout: magic "CXRS", one version byte, a u64
// entry count, then per entry a length-prefixed UTF-8 name, u64 rank, u64
// dims, and raw f64 values; a u64-length-prefixed JSON metadata trailer ends
// the file. All integers and doubles are little-endian.
struct Checkpoint {
  static constexpr char kMagic[4] = {'C', 'X', 'R', 'S'};
  static constexpr std::uint8_t kVersion = 1;

  std::vector<std::pair<std::string, Tensor>> entries;
  nlohmann::ordered_json metadata;

  const Tensor* find(const std::string& name) const {
    for (const auto& [n, t] : entries) {
      if (n == name) return &t;
    }
    return nullptr;
  }
};

namespace detail {

inline void put_u64(std::string& out, std::uint64_t v) {
  for (int i = 0; i < 8; ++i) out.push_back(static_cast<char>((v >> (8 * i)) & 0xff));
}

inline void put_f64(std::string& out, double d) {
  std::uint64_t bits;
  std::memcpy(&bits, &d, 8);
  put_u64(out, bits);
}

class ByteReader {
 public:
  ByteReader(const std::string& buf, std::string path)
      : buf_(buf), path_(std::move(path)) {}

  void require(std::size_t n) const {
    if (pos_ + n > buf_.size()) {
      throw FormatError("checkpoint '" + path_ + "' is truncated");
    }
  }

  std::uint64_t u64() {
    require(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) {
      v |= static_cast<std::uint64_t>(static_cast<unsigned char>(buf_[pos_ + i])) << (8 * i);
    }
    pos_ += 8;
    return v;
  }

  double f64() {
    const std::uint64_t bits = u64();
    double d;
    std::memcpy(&d, &bits, 8);
    return d;
  }

  std::uint8_t u8() {
    require(1);
    return static_cast<std::uint8_t>(buf_[pos_++]);
  }

  std::string bytes(std::size_t n) {
    require(n);
    std::string s = buf_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return buf_.size() - pos_; }

 private:
  const std::string& buf_;
  std::string path_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::string out;
  out.append(Checkpoint::kMagic, 4);
  out.push_back(static_cast<char>(Checkpoint::kVersion));
  detail::put_u64(out, ckpt.entries.size());
  for (const auto& [name, tensor] : ckpt.entries) {
    detail::put_u64(out, name.size());
    out.append(name);
    detail::put_u64(out, tensor.rank());
    for (std::size_t d : tensor.shape) detail::put_u64(out, d);
    for (double v : tensor.data) detail::put_f64(out, v);
  }
  const std::string meta = ckpt.metadata.is_null() ? "{}" : ckpt.metadata.dump();
  detail::put_u64(out, meta.size());
  out.append(meta);

  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open '" + path + "' for writing");
  f.write(out.data(), static_cast<std::streamsize>(out.size()));
  if (!f) throw IoError("short write to '" + path + "'");
}

inline void save_checkpoint(const SeverityNet& net, nlohmann::ordered_json metadata,
                            const std::string& path) {
  Checkpoint ckpt;
  for (const auto& [name, var] : net.parameters()) {
    ckpt.entries.emplace_back(name, var->value);
  }
  ckpt.metadata = std::move(metadata);
  save_checkpoint(ckpt, path);
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open checkpoint '" + path + "'");
  std::string buf((std::istreambuf_iterator<char>(f)), std::istreambuf_iterator<char>());

  detail::ByteReader r(buf, path);
  if (r.bytes(4) != std::string(Checkpoint::kMagic, 4)) {
    throw FormatError("'" + path + "' is not a checkpoint (bad magic bytes)");
  }
  const std::uint8_t version = r.u8();
  if (version != Checkpoint::kVersion) {
    throw FormatError("checkpoint version " + std::to_string(version) +
                      " unsupported (expected " + std::to_string(Checkpoint::kVersion) + ")");
  }

  Checkpoint ckpt;
  const std::uint64_t count = r.u64();
  for (std::uint64_t e = 0; e < count; ++e) {
    const std::uint64_t name_len = r.u64();
    if (name_len > (1u << 16)) throw FormatError("checkpoint entry name absurdly long");
    const std::string name = r.bytes(name_len);

    const std::uint64_t rank = r.u64();
    if (rank == 0 || rank > 32) {
      throw FormatError("checkpoint tensor '" + name + "' has rank " + std::to_string(rank));
    }
    std::vector<std::size_t> shape(rank);
    std::size_t numel = 1;
    for (auto& d : shape) {
      const std::uint64_t dim = r.u64();
      if (dim == 0 || dim > r.remaining()) {
        throw FormatError("checkpoint tensor '" + name + "' has an implausible dimension");
      }
      d = static_cast<std::size_t>(dim);
      numel *= d;
    }
    r.require(numel * 8);
    Tensor t(std::move(shape));
    for (double& v : t.data) v = r.f64();
    ckpt.entries.emplace_back(name, std::move(t));
  }

  const std::uint64_t meta_len = r.u64();
  const std::string meta = r.bytes(meta_len);
  try {
    ckpt.metadata = nlohmann::ordered_json::parse(meta);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError("checkpoint metadata is not valid JSON: " + std::string(e.what()));
  }
  return ckpt;
}

struct TransferReport {
  std::vector<std::string> loaded;       // copied from the checkpoint
  std::vector<std::string> initialized;  // absent from it, freshly drawn
};

// Copies every name-matching tensor into the network. In strict mode all
// parameters must be present; otherwise missing ones (typically a replaced
// head) are re-initialized from `rng`. A shape conflict on a matching name is
// always fatal and lists the offenders.
inline TransferReport apply_checkpoint(SeverityNet& net, const Checkpoint& ckpt,
                                       bool strict, Rng& rng) {
  std::vector<std::string> conflicts, missing;
  for (const auto& [name, var] : net.parameters()) {
    const Tensor* stored = ckpt.find(name);
    if (!stored) {
      missing.push_back(name);
    } else if (stored->shape != var->value.shape) {
      conflicts.push_back(name + ": stored " + shape_to_string(stored->shape) +
                          " vs network " + shape_to_string(var->value.shape));
    }
  }
  if (!conflicts.empty()) {
    std::string msg = "checkpoint shape conflicts:";
    for (const auto& c : conflicts) msg += "\n  " + c;
    throw IncompatibilityError(msg);
  }
  if (strict && !missing.empty()) {
    std::string msg = "checkpoint is missing parameters:";
    for (const auto& m : missing) msg += " " + m;
    throw IncompatibilityError(msg);
  }

  TransferReport report;
  for (const auto& [name, var] : net.parameters()) {
    if (const Tensor* stored = ckpt.find(name)) {
      var->value = *stored;
      var->zero_grad();
      report.loaded.push_back(name);
    } else {
      net.initialize_parameter(name, var, rng);
      report.initialized.push_back(name);
    }
  }
  return report;
}

}  // namespace cxrs
