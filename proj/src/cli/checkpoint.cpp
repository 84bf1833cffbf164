#include <bit>
#include <cstring>
#include <fstream>
#include <sstream>

#include "maskrl/cli.hpp"
#include "maskrl/errors.hpp"

namespace maskrl::cli {

namespace {

constexpr char kMagic[8] = {'M', 'A', 'S', 'K', 'R', 'L', 'C', 'K'};

class Writer {
 public:
  void u8(std::uint8_t v) { out_.push_back(static_cast<char>(v)); }
  void u32(std::uint32_t v) {
    for (int i = 0; i < 4; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) u8(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  void i32(std::int32_t v) { u32(static_cast<std::uint32_t>(v)); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void bytes(std::string_view s) { out_.append(s); }
  void str(std::string_view s) {
    u32(static_cast<std::uint32_t>(s.size()));
    bytes(s);
  }
  std::string take() { return std::move(out_); }

 private:
  std::string out_;
};

class Reader {
 public:
  explicit Reader(std::string_view in) : in_(in) {}
  std::uint8_t u8() {
    need(1);
    return static_cast<std::uint8_t>(in_[pos_++]);
  }
  std::uint32_t u32() {
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(u8()) << (8 * i);
    return v;
  }
  std::uint64_t u64() {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(u8()) << (8 * i);
    return v;
  }
  std::int32_t i32() { return static_cast<std::int32_t>(u32()); }
  double f64() { return std::bit_cast<double>(u64()); }
  std::string_view bytes(std::size_t n) {
    need(n);
    auto s = in_.substr(pos_, n);
    pos_ += n;
    return s;
  }
  std::string str() { return std::string(bytes(u32())); }
  bool done() const { return pos_ == in_.size(); }

 private:
  void need(std::size_t n) const {
    if (in_.size() - pos_ < n) throw ConfigError("checkpoint: truncated file");
  }
  std::string_view in_;
  std::size_t pos_ = 0;
};

void write_tensor(Writer& w, const nnx::Tensor2& t) {
  w.u32(static_cast<std::uint32_t>(t.rows()));
  w.u32(static_cast<std::uint32_t>(t.cols()));
  for (Eigen::Index i = 0; i < t.size(); ++i) w.f64(t.data()[i]);
}

nnx::Tensor2 read_tensor(Reader& r) {
  const auto rows = r.u32(), cols = r.u32();
  if (static_cast<std::uint64_t>(rows) * cols > (std::uint64_t{1} << 32)) throw ConfigError("checkpoint: tensor too large");
  nnx::Tensor2 t(rows, cols);
  for (Eigen::Index i = 0; i < t.size(); ++i) t.data()[i] = r.f64();
  return t;
}

}  // namespace

std::string encode_checkpoint(const MaskCheckpoint& c) {
  Writer w;
  w.bytes(std::string_view(kMagic, sizeof kMagic));
  w.u32(kCheckpointVersion);
  w.u64(c.backbone_seed);
  w.u32(static_cast<std::uint32_t>(c.arch.input));
  w.u32(static_cast<std::uint32_t>(c.arch.hidden.size()));
  for (int h : c.arch.hidden) w.u32(static_cast<std::uint32_t>(h));
  w.u32(static_cast<std::uint32_t>(c.arch.actions));
  w.u8(c.mode == masknet::MaskMode::binary ? 0 : 1);
  w.f64(c.threshold);
  w.u32(static_cast<std::uint32_t>(c.store.size()));
  for (std::size_t i = 0; i < c.store.size(); ++i) {
    const auto& e = c.store[i];
    w.i32(e.task_id);
    w.str(i < c.labels.size() ? c.labels[i] : std::string{});
    w.u32(static_cast<std::uint32_t>(e.scores.layers.size()));
    for (const auto& t : e.scores.layers) write_tensor(w, t);
    w.u32(static_cast<std::uint32_t>(e.betas.size()));
    for (const auto& b : e.betas) {
      w.u32(static_cast<std::uint32_t>(b.size()));
      for (Eigen::Index j = 0; j < b.size(); ++j) w.f64(b(j));
    }
  }
  return w.take();
}

MaskCheckpoint decode_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.bytes(sizeof kMagic) != std::string_view(kMagic, sizeof kMagic)) throw ConfigError("checkpoint: bad magic");
  const auto version = r.u32();
  if (version != kCheckpointVersion) throw ConfigError("checkpoint: unsupported version " + std::to_string(version));
  MaskCheckpoint c;
  c.backbone_seed = r.u64();
  c.arch.input = static_cast<int>(r.u32());
  c.arch.hidden.resize(r.u32());
  for (auto& h : c.arch.hidden) h = static_cast<int>(r.u32());
  c.arch.actions = static_cast<int>(r.u32());
  c.arch.validate();
  const auto mode = r.u8();
  if (mode > 1) throw ConfigError("checkpoint: unknown mask mode");
  c.mode = mode == 0 ? masknet::MaskMode::binary : masknet::MaskMode::continuous;
  c.threshold = r.f64();
  const auto entries = r.u32();
  for (std::uint32_t i = 0; i < entries; ++i) {
    masknet::StoredMask e;
    e.task_id = r.i32();
    c.labels.push_back(r.str());
    e.scores.mode = c.mode;
    e.scores.threshold = c.threshold;
    const auto layers = r.u32();
    if (layers != c.arch.layer_count()) throw ConfigError("checkpoint: layer count does not match the architecture");
    for (std::uint32_t l = 0; l < layers; ++l) {
      auto t = read_tensor(r);
      auto [rows, cols] = c.arch.layer_shape(l);
      if (t.rows() != rows || t.cols() != cols) throw ConfigError("checkpoint: score tensor shape mismatch");
      e.scores.layers.push_back(std::move(t));
    }
    const auto beta_layers = r.u32();
    if (beta_layers != 0 && beta_layers != layers) throw ConfigError("checkpoint: beta layer count mismatch");
    for (std::uint32_t l = 0; l < beta_layers; ++l) {
      nnx::Vector b(r.u32());
      for (Eigen::Index j = 0; j < b.size(); ++j) b(j) = r.f64();
      e.betas.push_back(std::move(b));
    }
    c.store.append(std::move(e));
  }
  if (!r.done()) throw ConfigError("checkpoint: trailing bytes");
  return c;
}

void save_checkpoint(const fs::path& path, const MaskCheckpoint& c) { write_file(path, encode_checkpoint(c)); }

MaskCheckpoint load_checkpoint(const fs::path& path) { return decode_checkpoint(read_file(path)); }

}  // namespace maskrl::cli
