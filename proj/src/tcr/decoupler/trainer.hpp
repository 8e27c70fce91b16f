#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "tcr/common/io.hpp"
#include "tcr/datagen/datagen.hpp"
#include "tcr/decoupler/head.hpp"

namespace tcr::decoupler {

enum class Optimizer { sgd, adam };

const char* to_string(Optimizer o);
std::optional<Optimizer> optimizer_from_string(std::string_view s);

struct TrainConfig {
  double tau = 0.07;
  int epochs = 60;
  std::size_t batch_size = 32;
  double learning_rate = 5e-3;
  std::uint64_t seed = 42;
  Optimizer optimizer = Optimizer::adam;
  std::size_t d_out = 64;

  void validate() const;
};

struct TrainMeta {
  TrainConfig config;
  std::vector<double> loss_curve;  // mean per-sample train loss; entry 0 is before training
  json embed;                      // embedding source description, carried into checkpoints
};

struct EncoderPair {
  ProjectionHead sem;
  ProjectionHead fact;
  std::size_t base_dim = 0;
  TrainMeta meta;

  void validate() const;
};

enum class Surface { statement, paraphrase, contradiction, unrelated };

std::string surface_key(const std::string& triple_id, Surface s);

using EmbeddingMap = std::unordered_map<std::string, Embedding>;

// Embeds all four surface forms of the selected triples.
EmbeddingMap embed_triples(const datagen::TripleSet& ts, const embedkit::EmbedConfig& cfg,
                           std::optional<datagen::Split> only = std::nullopt);

// Base embeddings of one quadruple: statement, paraphrase, contradiction, unrelated.
struct BaseQuad {
  std::array<SparseVec, 4> x;
};

std::vector<BaseQuad> collect_quads(const datagen::TripleSet& ts, const EmbeddingMap& emb,
                                    std::optional<datagen::Split> only, std::size_t* base_dim);

EncoderPair init_pair(std::size_t base_dim, const TrainConfig& cfg);

EncoderPair train(const datagen::TripleSet& ts, const EmbeddingMap& base_embeddings, const TrainConfig& cfg);

struct HeadGrads {
  std::vector<double> dw_sem, db_sem, dw_fact, db_fact;
};

// Summed loss_ctr over the quads, with gradients w.r.t. all head parameters when g is non-null.
double loss_ctr_grad(const EncoderPair& pair, std::span<const BaseQuad> batch, double tau, HeadGrads* g);

struct GradCheckResult {
  double max_rel_error = 0.0;
  double max_abs_grad = 0.0;
  std::size_t n_params = 0;
};

GradCheckResult grad_check(const EncoderPair& pair, std::span<const BaseQuad> sample, double tau, double epsilon);

}  // namespace tcr::decoupler
