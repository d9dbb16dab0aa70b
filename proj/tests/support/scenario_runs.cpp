// SPDX-License-Identifier: Apache-2.0
#include "scenario_runs.hpp"

namespace leod::scenario {

LabelQuality keep_quality(const PseudoLabelSet& labels, const std::vector<std::vector<DetBox>>& gt,
                          double tau) {
  GtFrames frames;
  for (std::size_t t = 0; t < gt.size(); ++t) frames[static_cast<int>(t)] = gt[t];
  int classes = 1;
  for (const auto& f : gt) {
    for (const DetBox& b : f) classes = std::max(classes, b.class_id + 1);
  }
  for (const auto& f : labels.labels) {
    for (const PseudoLabel& l : f) classes = std::max(classes, l.box.class_id + 1);
  }
  const PrTally tally = pseudo_label_tally(labels, frames, {}, PrMode::skipped_frames, classes, tau);
  LabelQuality q;
  for (const PrCounts& c : tally.per_class) q.counts += c;
  return q;
}

PseudoLabelSet as_keep(const std::vector<std::vector<DetBox>>& frames) {
  PseudoLabelSet s;
  s.labels.resize(frames.size());
  for (std::size_t t = 0; t < frames.size(); ++t) {
    for (const DetBox& b : frames[t]) {
      PseudoLabel l;
      l.box = b;
      s.labels[t].push_back(l);
    }
  }
  return s;
}

PseudoLabelSet threshold_only(const std::vector<std::vector<DetBox>>& frames,
                              const ThresholdConfig& cfg) {
  std::vector<std::vector<DetBox>> kept;
  for (const auto& f : frames) kept.push_back(hard_filter(f, cfg));
  return as_keep(kept);
}

namespace {

VariantOutput run_variant(const Scenario& sc, const TtaVariant& v) {
  std::vector<DetBox> flat;
  for (auto& f : generate_variant_detections(sc, v)) flat.insert(flat.end(), f.begin(), f.end());
  return {v, std::move(flat)};
}

}  // namespace

std::vector<VariantOutput> tta_outputs(const Scenario& sc, bool use_combined) {
  std::vector<VariantOutput> out;
  for (const TtaVariant& v : standard_variants(sc.duration_steps, sc.width, use_combined)) {
    out.push_back(run_variant(sc, v));
  }
  return out;
}

std::vector<VariantOutput> identity_output(const Scenario& sc) {
  return {run_variant(sc, TtaVariant{false, false, sc.duration_steps, static_cast<double>(sc.width)})};
}

PseudoLabelSet run_scenario(const Scenario& sc, const ThresholdConfig& cfg, bool use_tta,
                            const ForgeOptions& forge) {
  SequenceInput seq;
  seq.id = sc.name;
  seq.num_steps = sc.duration_steps;
  seq.width = sc.width;
  seq.variants = use_tta ? tta_outputs(sc) : identity_output(sc);
  RoundOptions opt;
  opt.forge = forge;
  const std::vector<SequenceInput> seqs{seq};
  return run_round(seqs, cfg, opt).at(sc.name);
}

std::vector<std::vector<int>> gt_objects(const Scenario& sc) { return generate(sc).gt_object; }

}  // namespace leod::scenario
