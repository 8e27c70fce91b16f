#pragma once

#include <string>

#include "tcr/decoupler/trainer.hpp"

namespace tcr::decoupler {

// Layout: "TCRW", u32 version, then per head (sem, fact) u32 d_in, u32 d_out,
// weights (row-major d_in x d_out) and bias as little-endian f64, then a u32
// length and the JSON train_meta block.
inline constexpr std::uint32_t kCheckpointVersion = 1;

std::string serialize_checkpoint(const EncoderPair& pair);
EncoderPair deserialize_checkpoint(std::string_view bytes);

void save_checkpoint(const std::string& path, const EncoderPair& pair);
EncoderPair load_checkpoint(const std::string& path);

json meta_to_json(const TrainMeta& meta);
TrainMeta meta_from_json(const json& j);

}  // namespace tcr::decoupler
