// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <span>
#include <utility>
#include <vector>

#include "leod/geometry.hpp"

namespace leod {

/// Describes how the detector input was transformed for one inference run.
struct TtaVariant {
  bool time_flipped = false;
  bool h_flipped = false;
  int num_timesteps = 1;  // L
  double width = 0.0;     // W, sensor width in pixels

  friend bool operator==(const TtaVariant&, const TtaVariant&) = default;
};

/// The identity, time-flip, h-flip and (optionally) combined variants.
std::vector<TtaVariant> standard_variants(int num_timesteps, double width,
                                          bool use_combined = true);

/// Maps boxes predicted under `variant` back into the original frame:
/// t' = L - 1 - t for time flips and x' = W - x - w for horizontal flips.
/// Throws Errc::invalid_input for t_step outside [0, L).
std::vector<DetBox> unflip_boxes(std::span<const DetBox> boxes, const TtaVariant& variant);

using VariantOutput = std::pair<TtaVariant, std::vector<DetBox>>;

/// Unflips every variant, groups boxes by timestep in variant order, and
/// applies NMS per timestep. Returns L lists.
std::vector<std::vector<DetBox>> tta_merge(std::span<const VariantOutput> variant_outputs,
                                           const NmsOptions& nms_options = {});

}  // namespace leod
