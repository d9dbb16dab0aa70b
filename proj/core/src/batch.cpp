// SPDX-License-Identifier: Apache-2.0
#include "leod/batch.hpp"

#include <algorithm>
#include <set>

#include "leod/error.hpp"
#include "leod/pipeline.hpp"

namespace leod {

void check_same_layout(const DetectionHeader& first, const DetectionHeader& other,
                       const std::string& what) {
  if (first.classes != other.classes || first.width != other.width ||
      first.height != other.height || first.num_steps != other.num_steps) {
    throw Error(Errc::invalid_input, what + " disagrees with the first input on classes or geometry");
  }
}

std::map<std::string, std::vector<VariantOutput>> variants_by_sequence(
    std::span<const DetectionFile> runs) {
  if (runs.empty() || runs.size() > 4) {
    throw Error(Errc::invalid_input, "expected 1 to 4 detection files (fwd, tflip, hflip, thflip)");
  }
  const DetectionHeader& header = runs.front().header;
  for (std::size_t i = 1; i < runs.size(); ++i) {
    check_same_layout(header, runs[i].header, "detection input " + std::to_string(i + 1));
  }
  const auto variants = standard_variants(header.num_steps, header.width, true);
  std::set<std::string> seqs;
  for (const auto& f : runs) {
    for (const auto& r : f.records) seqs.insert(r.seq);
  }
  std::map<std::string, std::vector<VariantOutput>> out;
  for (const auto& seq : seqs) {
    for (std::size_t i = 0; i < runs.size(); ++i) out[seq].push_back({variants[i], {}});
  }
  for (std::size_t i = 0; i < runs.size(); ++i) {
    for (const auto& r : runs[i].records) {
      if (r.src == RecordSource::gt) continue;
      out[r.seq][i].second.push_back(r.label.box);
    }
  }
  return out;
}

DetectionFile merge_detection_files(std::span<const DetectionFile> runs, const PipelineConfig& cfg) {
  const auto variants = variants_by_sequence(runs);
  DetectionFile merged;
  merged.header = runs.front().header;
  merged.header.config_digest = config_digest(cfg);
  for (const auto& [seq, outputs] : variants) {
    for (const auto& frame : tta_merge(outputs, nms_options_from(cfg))) {
      for (const DetBox& b : frame) {
        DetectionRecord r;
        r.seq = seq;
        r.src = RecordSource::det;
        r.label.box = b;
        merged.records.push_back(std::move(r));
      }
    }
  }
  return merged;
}

DetectionFile forge_detection_files(std::span<const DetectionFile> runs, const PipelineConfig& cfg,
                                    const ForgeFileOptions& options) {
  const ThresholdConfig thr = thresholds_from(cfg);
  validate_thresholds(thr);
  const std::string digest = config_digest(cfg);

  auto variants = variants_by_sequence(runs);
  const DetectionHeader& header = runs.front().header;
  if (header.num_classes() != thr.num_classes()) {
    throw Error(Errc::invalid_input, "input has " + std::to_string(header.num_classes()) +
                                         " classes but the threshold profile has " +
                                         std::to_string(thr.num_classes()));
  }

  std::map<std::string, std::map<int, std::vector<DetBox>>> gt;
  if (options.gt != nullptr) {
    check_same_layout(header, options.gt->header, "ground truth");
    gt = gt_by_sequence(*options.gt);
    for (auto& [seq, frames] : gt) {
      for (auto& [t, boxes] : frames) {
        for (DetBox& b : boxes) b.p_iou.resize(static_cast<std::size_t>(header.num_classes()), 0.0);
      }
    }
  } else if (options.split != nullptr) {
    throw Error(Errc::invalid_input, "a split needs ground truth");
  }
  if (options.split != nullptr) {
    for (auto& [seq, frames] : gt) {
      const auto kept = options.split->kept.find(seq);
      std::erase_if(frames, [&](const auto& kv) {
        return kept == options.split->kept.end() ||
               !std::binary_search(kept->second.begin(), kept->second.end(),
                                   static_cast<std::int64_t>(kv.first));
      });
    }
  }

  std::vector<SequenceInput> inputs;
  for (auto& [seq, outputs] : variants) {
    SequenceInput in;
    in.id = seq;
    in.num_steps = header.num_steps;
    in.width = header.width;
    in.variants = std::move(outputs);
    if (auto it = gt.find(seq); it != gt.end()) in.gt_labels = it->second;
    inputs.push_back(std::move(in));
  }
  RoundOptions opts;
  opts.forge = forge_options_from(cfg);
  opts.tta_nms = nms_options_from(cfg);
  opts.round = options.round;
  opts.config_digest = digest;
  opts.jobs = options.jobs;
  const auto sets = run_round(inputs, thr, opts);

  DetectionHeader out_header = header;
  out_header.config_digest = digest;
  out_header.round = options.round;
  return from_label_sets(out_header, sets);
}

}  // namespace leod
