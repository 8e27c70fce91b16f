#include "tcr/embedkit/embedding.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "tcr/common/errors.hpp"
#include "tcr/common/http.hpp"

namespace tcr::embedkit {

const char* to_string(EmbedSource s) {
  return s == EmbedSource::remote ? "remote" : "hash-fallback";
}

double dot(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimensionError("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double s = 0.0;
  for (std::size_t i = 0; i < u.size(); ++i) s += u[i] * v[i];
  return s;
}

double norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

double cosine(std::span<const double> u, std::span<const double> v) {
  if (u.size() != v.size())
    throw DimensionError("dimension mismatch: " + std::to_string(u.size()) + " vs " + std::to_string(v.size()));
  double nu = norm(u), nv = norm(v);
  if (nu == 0.0 || nv == 0.0) throw DegenerateVectorError("cosine of a zero vector");
  double c = dot(u, v) / (nu * nv);
  return std::clamp(c, -1.0, 1.0);
}

double cosine(const Embedding& u, const Embedding& v) { return cosine(u.values, v.values); }

void normalize_in_place(std::span<double> v) {
  double n = norm(v);
  if (n == 0.0 || !std::isfinite(n)) throw DegenerateVectorError("cannot normalize a zero or non-finite vector");
  for (double& x : v) x /= n;
}

Embedding normalize(const Embedding& v) {
  Embedding out = v;
  normalize_in_place(out.values);
  return out;
}

namespace {

std::uint64_t feature_hash(std::uint64_t seed, std::string_view gram) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  auto mix_byte = [&h](unsigned char b) {
    h ^= b;
    h *= 0x100000001b3ull;
  };
  for (int i = 0; i < 8; ++i) mix_byte(static_cast<unsigned char>(seed >> (8 * i)));
  for (char c : gram) mix_byte(static_cast<unsigned char>(c));
  h ^= h >> 33;
  h *= 0xff51afd7ed558ccdull;
  h ^= h >> 33;
  h *= 0xc4ceb9fe1a85ec53ull;
  h ^= h >> 33;
  return h;
}

bool is_token_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '\'';
}

std::vector<std::string> word_grams(std::string_view text) {
  std::string lower(text);
  for (char& c : lower)
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
  std::vector<std::string> tokens;
  std::string cur;
  for (char c : lower) {
    if (is_token_char(c)) {
      cur += c;
    } else if (!cur.empty()) {
      tokens.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) tokens.push_back(std::move(cur));
  if (tokens.empty()) tokens.emplace_back();

  std::vector<std::string> grams;
  for (const auto& tok : tokens) {
    std::string w = "<" + tok + ">";
    for (std::size_t n = 2; n <= 3; ++n)
      for (std::size_t i = 0; i + n <= w.size(); ++i) grams.push_back(w.substr(i, n));
  }
  std::sort(grams.begin(), grams.end());
  grams.erase(std::unique(grams.begin(), grams.end()), grams.end());
  return grams;
}

}  // namespace

Embedding hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed) {
  if (dim < 8) throw ConfigError("hash_embed requires dim >= 8");
  Embedding e;
  e.source = EmbedSource::hash_fallback;
  e.values.assign(dim, 0.0);
  auto grams = word_grams(text);
  for (const auto& g : grams) {
    std::uint64_t h = feature_hash(seed, g);
    e.values[h % dim] += (h >> 63) ? -1.0 : 1.0;
  }
  if (norm(e.values) == 0.0) {
    // every bucket cancelled out
    e.values[feature_hash(seed, grams.front()) % dim] = 1.0;
  }
  normalize_in_place(e.values);
  return e;
}

namespace {

std::vector<Embedding> remote_embed(const std::vector<std::string>& texts, const EmbedConfig& cfg) {
  std::vector<Embedding> out;
  out.reserve(texts.size());
  std::size_t batch = std::max<std::size_t>(1, std::min<std::size_t>(cfg.max_batch, 64));
  std::size_t expected_dim = 0;
  for (std::size_t start = 0; start < texts.size(); start += batch) {
    std::size_t end = std::min(texts.size(), start + batch);
    nlohmann::json req;
    req["texts"] = std::vector<std::string>(texts.begin() + static_cast<std::ptrdiff_t>(start),
                                            texts.begin() + static_cast<std::ptrdiff_t>(end));
    HttpResult res = http_post_json(*cfg.url, req.dump(), cfg.timeout_ms);
    if (res.status == 0) throw RemoteEmbedError(0, "embedding request failed: " + res.error);
    if (res.status != 200)
      throw RemoteEmbedError(res.status, "embedding service returned HTTP " + std::to_string(res.status));
    nlohmann::json body;
    try {
      body = nlohmann::json::parse(res.body);
    } catch (const nlohmann::json::exception& e) {
      throw ProtocolError(std::string("embedding response is not JSON: ") + e.what());
    }
    if (!body.is_object() || !body.contains("embeddings") || !body["embeddings"].is_array())
      throw ProtocolError("embedding response lacks an 'embeddings' array");
    const auto& rows = body["embeddings"];
    if (rows.size() != end - start)
      throw ProtocolError("embedding response has " + std::to_string(rows.size()) + " rows, expected " +
                          std::to_string(end - start));
    for (const auto& row : rows) {
      if (!row.is_array() || row.empty()) throw ProtocolError("embedding row is not a non-empty array");
      if (expected_dim == 0) expected_dim = row.size();
      if (row.size() != expected_dim) throw ProtocolError("embedding rows have inconsistent dimensions");
      Embedding e;
      e.source = EmbedSource::remote;
      e.values.reserve(row.size());
      for (const auto& x : row) {
        if (!x.is_number()) throw ProtocolError("embedding entry is not a number");
        double v = x.get<double>();
        if (!std::isfinite(v)) throw ProtocolError("embedding entry is not finite");
        e.values.push_back(v);
      }
      if (norm(e.values) == 0.0) throw ProtocolError("embedding service returned a zero vector");
      normalize_in_place(e.values);
      out.push_back(std::move(e));
    }
  }
  return out;
}

}  // namespace

std::vector<Embedding> embed_batch(const std::vector<std::string>& texts, const EmbedConfig& cfg) {
  if (texts.empty()) throw EmptyInputError("embed_batch requires at least one text");
  if (cfg.url) return remote_embed(texts, cfg);
  std::vector<Embedding> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(hash_embed(t, cfg.dim, cfg.seed));
  return out;
}

}  // namespace tcr::embedkit
