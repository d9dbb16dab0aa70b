// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "leod/assign.hpp"
#include "leod/eval.hpp"
#include "leod/pipeline.hpp"
#include "leod/protocol.hpp"
#include "leod/tracker.hpp"

namespace leod {

/// Every tunable of the pipeline. Parsed from a TOML document with sections
/// [tta], [nms], [tracker], [thresholds], [thresholds.override.<class>],
/// [soft], [assign], [eval] and [protocol]; any unknown section or key is an
/// Errc::invalid_config error.
struct PipelineConfig {
  // [tta]
  double tta_tau_nms = 0.45;
  bool tta_use_combined = true;
  bool tta_flip_polarity = true;
  // [nms]
  bool nms_class_aware = true;
  // [tracker]
  TrackerParams tracker;
  InpaintRule inpaint_rule = InpaintRule::per_direction;
  // [thresholds]
  std::string profile = "gen1";
  double tau_hard_car = 0.6;
  int t_trk = 6;
  std::map<std::string, ClassOverride> overrides;
  // [soft]
  SoftRule soft_rule = SoftRule::all_below;
  // [assign]
  AssignOptions assign;
  std::vector<int> strides{8, 16, 32};
  // [eval]
  std::string eval_profile = "gen1";
  double min_diagonal = 30.0;
  double min_side = 10.0;
  std::string iou_set = "coco";  // "coco" or a single threshold such as "0.5"
  double tau_match = 0.75;
  // [protocol]
  SplitMode split_mode = SplitMode::wsod;
  double split_ratio = 0.05;
  std::uint64_t split_seed = 0;
};

PipelineConfig parse_config(const std::string& toml_text);
PipelineConfig load_config(const std::filesystem::path& path);

/// Class names of a dataset profile: "gen1" (car, pedestrian) or "1mpx"
/// (car, pedestrian, two-wheeler).
std::vector<std::string> profile_classes(const std::string& profile);

ThresholdConfig thresholds_from(const PipelineConfig& cfg);
NmsOptions nms_options_from(const PipelineConfig& cfg);
ForgeOptions forge_options_from(const PipelineConfig& cfg);
EvalFilter eval_filter_from(const PipelineConfig& cfg);
std::vector<double> iou_thresholds_from(const PipelineConfig& cfg);

/// Compact JSON of every effective value with sorted keys.
std::string canonical_config_json(const PipelineConfig& cfg);

/// Lowercase hex SHA-256 of canonical_config_json().
std::string config_digest(const PipelineConfig& cfg);

std::string sha256_hex(const std::string& bytes);

std::string to_string(SoftRule rule);
std::string to_string(InpaintRule rule);
std::string to_string(AssignStrategy strategy);

}  // namespace leod
