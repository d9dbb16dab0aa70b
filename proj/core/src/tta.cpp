// SPDX-License-Identifier: Apache-2.0
#include "leod/tta.hpp"

#include <string>

#include "leod/error.hpp"

namespace leod {

std::vector<TtaVariant> standard_variants(int num_timesteps, double width, bool use_combined) {
  std::vector<TtaVariant> out{
      {false, false, num_timesteps, width},
      {true, false, num_timesteps, width},
      {false, true, num_timesteps, width},
  };
  if (use_combined) out.push_back({true, true, num_timesteps, width});
  return out;
}

std::vector<DetBox> unflip_boxes(std::span<const DetBox> boxes, const TtaVariant& variant) {
  if (variant.num_timesteps < 1) {
    throw Error(Errc::invalid_input, "variant needs at least one timestep");
  }
  std::vector<DetBox> out(boxes.begin(), boxes.end());
  for (DetBox& b : out) {
    if (b.t_step < 0 || b.t_step >= variant.num_timesteps) {
      throw Error(Errc::invalid_input, "box t_step " + std::to_string(b.t_step) +
                                           " outside [0, " +
                                           std::to_string(variant.num_timesteps) + ")");
    }
    if (variant.time_flipped) b.t_step = variant.num_timesteps - 1 - b.t_step;
    if (variant.h_flipped) b.x = variant.width - b.x - b.w;
  }
  return out;
}

std::vector<std::vector<DetBox>> tta_merge(std::span<const VariantOutput> variant_outputs,
                                           const NmsOptions& nms_options) {
  if (variant_outputs.empty()) return {};
  const TtaVariant& first = variant_outputs.front().first;
  for (const auto& [variant, boxes] : variant_outputs) {
    if (variant.num_timesteps != first.num_timesteps || variant.width != first.width) {
      throw Error(Errc::invalid_input, "TTA variants disagree on sequence length or width");
    }
  }
  const auto steps = static_cast<std::size_t>(first.num_timesteps);
  std::vector<std::vector<DetBox>> grouped(steps);
  for (const auto& [variant, boxes] : variant_outputs) {
    for (DetBox& b : unflip_boxes(boxes, variant)) {
      grouped[static_cast<std::size_t>(b.t_step)].push_back(std::move(b));
    }
  }
  std::vector<std::vector<DetBox>> merged(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    if (!grouped[t].empty()) merged[t] = nms(grouped[t], nms_options);
  }
  return merged;
}

}  // namespace leod
