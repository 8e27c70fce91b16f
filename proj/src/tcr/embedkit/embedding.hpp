#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace tcr::embedkit {

enum class EmbedSource { remote, hash_fallback };

const char* to_string(EmbedSource s);

struct Embedding {
  std::vector<double> values;
  EmbedSource source = EmbedSource::hash_fallback;

  std::size_t dim() const { return values.size(); }
};

double dot(std::span<const double> u, std::span<const double> v);
double norm(std::span<const double> v);

double cosine(std::span<const double> u, std::span<const double> v);
double cosine(const Embedding& u, const Embedding& v);

void normalize_in_place(std::span<double> v);
Embedding normalize(const Embedding& v);

Embedding hash_embed(std::string_view text, std::size_t dim, std::uint64_t seed);

struct EmbedConfig {
  std::optional<std::string> url;  // unset: hash fallback
  std::size_t dim = 256;
  std::uint64_t seed = 7;
  int timeout_ms = 10000;
  std::size_t max_batch = 64;
};

// Remote mode posts {"texts": [...]} in sub-batches of at most max_batch.
std::vector<Embedding> embed_batch(const std::vector<std::string>& texts, const EmbedConfig& cfg);

}  // namespace tcr::embedkit
