#include "tcr/decoupler/checkpoint.hpp"

#include <bit>
#include <cmath>
#include <cstring>

#include "tcr/common/errors.hpp"

namespace tcr::decoupler {

namespace {

void put_u32(std::string& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

void put_f64(std::string& out, double d) {
  auto v = std::bit_cast<std::uint64_t>(d);
  for (int i = 0; i < 8; ++i) out += static_cast<char>((v >> (8 * i)) & 0xff);
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  std::uint32_t u32() {
    need(4);
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 4;
    return v;
  }

  double f64() {
    need(8);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes_[pos_ + i])) << (8 * i);
    pos_ += 8;
    double d = std::bit_cast<double>(v);
    if (!std::isfinite(d)) throw FormatError("checkpoint contains a non-finite parameter");
    return d;
  }

  std::string_view take(std::size_t n) {
    need(n);
    auto s = bytes_.substr(pos_, n);
    pos_ += n;
    return s;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n) const {
    if (bytes_.size() - pos_ < n) throw FormatError("checkpoint is truncated");
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

void write_head(std::string& out, const ProjectionHead& h) {
  put_u32(out, static_cast<std::uint32_t>(h.d_in));
  put_u32(out, static_cast<std::uint32_t>(h.d_out));
  for (double w : h.weight) put_f64(out, w);
  for (double b : h.bias) put_f64(out, b);
}

ProjectionHead read_head(Reader& r) {
  ProjectionHead h;
  h.d_in = r.u32();
  h.d_out = r.u32();
  if (h.d_in == 0 || h.d_out == 0 || h.d_out > h.d_in || h.d_in > (1u << 20))
    throw FormatError("checkpoint head has invalid dimensions");
  if (r.remaining() / 8 < h.d_in * h.d_out + h.d_out) throw FormatError("checkpoint is truncated");
  h.weight.resize(h.d_in * h.d_out);
  for (double& w : h.weight) w = r.f64();
  h.bias.resize(h.d_out);
  for (double& b : h.bias) b = r.f64();
  return h;
}

}  // namespace

json meta_to_json(const TrainMeta& meta) {
  json j;
  j["seed"] = meta.config.seed;
  j["epochs"] = meta.config.epochs;
  j["tau"] = meta.config.tau;
  j["learning_rate"] = meta.config.learning_rate;
  j["batch_size"] = meta.config.batch_size;
  j["optimizer"] = to_string(meta.config.optimizer);
  j["d_out"] = meta.config.d_out;
  j["loss_curve"] = meta.loss_curve;
  j["embed"] = meta.embed.is_null() ? json::object() : meta.embed;
  return j;
}

TrainMeta meta_from_json(const json& j) {
  TrainMeta m;
  try {
    m.config.seed = j.at("seed").get<std::uint64_t>();
    m.config.epochs = j.at("epochs").get<int>();
    m.config.tau = j.at("tau").get<double>();
    m.config.learning_rate = j.at("learning_rate").get<double>();
    m.config.batch_size = j.at("batch_size").get<std::size_t>();
    auto opt = optimizer_from_string(j.at("optimizer").get<std::string>());
    if (!opt) throw FormatError("unknown optimizer in checkpoint metadata");
    m.config.optimizer = *opt;
    m.config.d_out = j.at("d_out").get<std::size_t>();
    m.loss_curve = j.at("loss_curve").get<std::vector<double>>();
    m.embed = j.value("embed", json::object());
  } catch (const json::exception& e) {
    throw FormatError(std::string("invalid checkpoint metadata: ") + e.what());
  }
  return m;
}

std::string serialize_checkpoint(const EncoderPair& pair) {
  pair.validate();
  std::string out = "TCRW";
  put_u32(out, kCheckpointVersion);
  write_head(out, pair.sem);
  write_head(out, pair.fact);
  std::string meta = meta_to_json(pair.meta).dump();
  put_u32(out, static_cast<std::uint32_t>(meta.size()));
  out += meta;
  return out;
}

EncoderPair deserialize_checkpoint(std::string_view bytes) {
  Reader r(bytes);
  if (r.take(4) != "TCRW") throw FormatError("not a TCR checkpoint (bad magic)");
  auto version = r.u32();
  if (version != kCheckpointVersion) throw FormatError("unsupported checkpoint version " + std::to_string(version));
  EncoderPair pair;
  pair.sem = read_head(r);
  pair.fact = read_head(r);
  if (pair.sem.d_in != pair.fact.d_in) throw FormatError("checkpoint heads disagree on input dimension");
  pair.base_dim = pair.sem.d_in;
  auto meta_len = r.u32();
  auto meta = r.take(meta_len);
  if (r.remaining() != 0) throw FormatError("checkpoint has trailing bytes");
  try {
    pair.meta = meta_from_json(json::parse(meta));
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint metadata is not JSON: ") + e.what());
  }
  return pair;
}

void save_checkpoint(const std::string& path, const EncoderPair& pair) {
  write_file(path, serialize_checkpoint(pair));
}

EncoderPair load_checkpoint(const std::string& path) { return deserialize_checkpoint(read_file(path)); }

}  // namespace tcr::decoupler
