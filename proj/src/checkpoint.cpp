#include <cstdint>
#include <cstring>
#include <fstream>
#include <vector>

#include "coltwin/errors.hpp"
#include "coltwin/training.hpp"

namespace coltwin::training {

namespace {

constexpr std::uint32_t kMagic = 0x4354574e;  // "CTWN"

std::uint64_t fnv1a(const std::vector<char>& data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char c : data) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ULL;
  }
  return h;
}

class Writer {
 public:
  void u8(std::uint8_t v) { raw(&v, 1); }
  void u32(std::uint32_t v) { raw(&v, 4); }
  void u64(std::uint64_t v) { raw(&v, 8); }
  void i64(std::int64_t v) { raw(&v, 8); }
  void f64(double v) { raw(&v, 8); }
  void text(const std::string& s) {
    u64(s.size());
    raw(s.data(), s.size());
  }
  void matrix(const Eigen::MatrixXd& m) {
    u32(static_cast<std::uint32_t>(m.rows()));
    u32(static_cast<std::uint32_t>(m.cols()));
    raw(m.data(), sizeof(double) * static_cast<std::size_t>(m.size()));
  }
  void vector(const Eigen::VectorXd& v) {
    u32(static_cast<std::uint32_t>(v.size()));
    raw(v.data(), sizeof(double) * static_cast<std::size_t>(v.size()));
  }
  void params(const nn::NetworkParams& p) {
    matrix(p.w1); vector(p.b1);
    matrix(p.w2); vector(p.b2);
    matrix(p.w3); vector(p.b3);
    matrix(p.s13);
    matrix(p.w4); vector(p.b4);
    matrix(p.s24);
    matrix(p.w5); vector(p.b5);
  }
  const std::vector<char>& buffer() const { return buf_; }

 private:
  void raw(const void* p, std::size_t n) {
    const char* c = static_cast<const char*>(p);
    buf_.insert(buf_.end(), c, c + n);
  }
  std::vector<char> buf_;
};

class Reader {
 public:
  explicit Reader(std::vector<char> buf) : buf_(std::move(buf)) {}
  std::uint8_t u8() { return take<std::uint8_t>(); }
  std::uint32_t u32() { return take<std::uint32_t>(); }
  std::uint64_t u64() { return take<std::uint64_t>(); }
  std::int64_t i64() { return take<std::int64_t>(); }
  double f64() { return take<double>(); }
  std::string text() {
    std::uint64_t n = u64();
    check(n);
    std::string s(buf_.data() + pos_, n);
    pos_ += n;
    return s;
  }
  Eigen::MatrixXd matrix() {
    std::uint32_t r = u32(), c = u32();
    Eigen::MatrixXd m(r, c);
    std::size_t bytes = sizeof(double) * static_cast<std::size_t>(m.size());
    check(bytes);
    std::memcpy(m.data(), buf_.data() + pos_, bytes);
    pos_ += bytes;
    return m;
  }
  Eigen::VectorXd vector() {
    std::uint32_t n = u32();
    Eigen::VectorXd v(n);
    std::size_t bytes = sizeof(double) * static_cast<std::size_t>(v.size());
    check(bytes);
    std::memcpy(v.data(), buf_.data() + pos_, bytes);
    pos_ += bytes;
    return v;
  }
  nn::NetworkParams params() {
    nn::NetworkParams p;
    p.w1 = matrix(); p.b1 = vector();
    p.w2 = matrix(); p.b2 = vector();
    p.w3 = matrix(); p.b3 = vector();
    p.s13 = matrix();
    p.w4 = matrix(); p.b4 = vector();
    p.s24 = matrix();
    p.w5 = matrix(); p.b5 = vector();
    return p;
  }

 private:
  template <typename T>
  T take() {
    check(sizeof(T));
    T v;
    std::memcpy(&v, buf_.data() + pos_, sizeof(T));
    pos_ += sizeof(T);
    return v;
  }
  void check(std::size_t n) const {
    if (pos_ + n > buf_.size())
      throw CheckpointError("checkpoint truncated");
  }
  std::vector<char> buf_;
  std::size_t pos_ = 0;
};

void write_stats(Writer& w, const data::NormStats& s) {
  w.u32(static_cast<std::uint32_t>(s.min.size()));
  for (Eigen::Index j = 0; j < s.min.size(); ++j) {
    w.f64(s.min[j]);
    w.f64(s.max[j]);
    w.u8(s.is_constant[static_cast<std::size_t>(j)]);
  }
}

data::NormStats read_stats(Reader& r) {
  data::NormStats s;
  std::uint32_t n = r.u32();
  s.min.resize(n);
  s.max.resize(n);
  s.is_constant.resize(n);
  for (std::uint32_t j = 0; j < n; ++j) {
    s.min[j] = r.f64();
    s.max[j] = r.f64();
    s.is_constant[j] = r.u8();
  }
  return s;
}

void write_history(Writer& w, const std::vector<EpochStats>& h) {
  w.u32(static_cast<std::uint32_t>(h.size()));
  for (const EpochStats& e : h) {
    w.f64(e.terms.l_data);
    w.f64(e.terms.l_vle);
    w.f64(e.terms.l_mass);
    w.f64(e.terms.l_energy);
    w.f64(e.terms.l_mccabe);
    w.f64(e.terms.l_bc);
    w.f64(e.terms.l_reg);
    w.f64(e.terms.weights.lambda_d);
    w.f64(e.terms.weights.lambda_p);
    w.f64(e.terms.weights.lambda_b);
    w.f64(e.val_loss);
    w.f64(e.lr);
    w.f64(e.wall_ms);
  }
}

std::vector<EpochStats> read_history(Reader& r) {
  std::uint32_t n = r.u32();
  std::vector<EpochStats> h(n);
  for (EpochStats& e : h) {
    e.terms.l_data = r.f64();
    e.terms.l_vle = r.f64();
    e.terms.l_mass = r.f64();
    e.terms.l_energy = r.f64();
    e.terms.l_mccabe = r.f64();
    e.terms.l_bc = r.f64();
    e.terms.l_reg = r.f64();
    e.terms.weights.lambda_d = r.f64();
    e.terms.weights.lambda_p = r.f64();
    e.terms.weights.lambda_b = r.f64();
    e.val_loss = r.f64();
    e.lr = r.f64();
    e.wall_ms = r.f64();
  }
  return h;
}

}  // namespace

void save_checkpoint(const std::string& path, const Checkpoint& ckpt) {
  Writer w;
  w.u64(ckpt.seed);
  w.text(ckpt.mode);
  w.f64(ckpt.train_fraction);
  w.text(ckpt.resolved_config_json);
  write_stats(w, ckpt.stats);
  w.params(ckpt.params);
  w.u8(ckpt.training.has_value() ? 1 : 0);
  if (ckpt.training) {
    const TrainingSnapshot& t = *ckpt.training;
    w.i64(t.epochs_completed);
    w.params(t.params);
    w.params(t.adam.m);
    w.params(t.adam.v);
    w.i64(t.adam.step);
    w.u64(t.shuffle_state);
    w.i64(t.colloc_cursor);
    w.i64(t.pair_cursor);
    w.f64(t.best_val);
    w.i64(t.best_epoch);
    w.params(t.best_params);
    write_history(w, t.history);
  }

  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCategory::other, "cannot write checkpoint " + path);
  const std::vector<char>& payload = w.buffer();
  std::uint32_t magic = kMagic, version = Checkpoint::kVersion;
  std::uint64_t size = payload.size(), hash = fnv1a(payload);
  out.write(reinterpret_cast<const char*>(&magic), 4);
  out.write(reinterpret_cast<const char*>(&version), 4);
  out.write(reinterpret_cast<const char*>(&size), 8);
  out.write(payload.data(), static_cast<std::streamsize>(payload.size()));
  out.write(reinterpret_cast<const char*>(&hash), 8);
  if (!out) throw Error(ErrorCategory::other, "short write on " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw MissingFileError("cannot open checkpoint " + path);
  std::uint32_t magic = 0, version = 0;
  std::uint64_t size = 0;
  in.read(reinterpret_cast<char*>(&magic), 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&size), 8);
  if (!in || magic != kMagic)
    throw CheckpointError(path + " is not a coltwin checkpoint");
  if (version != Checkpoint::kVersion)
    throw CheckpointError("unsupported checkpoint version " +
                          std::to_string(version));
  std::vector<char> payload(size);
  in.read(payload.data(), static_cast<std::streamsize>(size));
  std::uint64_t stored_hash = 0;
  in.read(reinterpret_cast<char*>(&stored_hash), 8);
  if (!in) throw CheckpointError(path + " is truncated");
  if (fnv1a(payload) != stored_hash)
    throw CheckpointError(path + " failed the integrity check");

  Reader r(std::move(payload));
  Checkpoint c;
  c.seed = r.u64();
  c.mode = r.text();
  c.train_fraction = r.f64();
  c.resolved_config_json = r.text();
  c.stats = read_stats(r);
  c.params = r.params();
  if (r.u8()) {
    TrainingSnapshot t;
    t.epochs_completed = r.i64();
    t.params = r.params();
    t.adam = nn::AdamState::init();
    t.adam.m = r.params();
    t.adam.v = r.params();
    t.adam.step = r.i64();
    t.shuffle_state = r.u64();
    t.colloc_cursor = r.i64();
    t.pair_cursor = r.i64();
    t.best_val = r.f64();
    t.best_epoch = r.i64();
    t.best_params = r.params();
    t.history = read_history(r);
    c.training = std::move(t);
  }
  return c;
}

}  // namespace coltwin::training
