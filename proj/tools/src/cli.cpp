// SPDX-License-Identifier: Apache-2.0
#include "leod/cli.hpp"

#include <CLI11.hpp>
#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>

#include "leod/assign.hpp"
#include "leod/batch.hpp"
#include "leod/config.hpp"
#include "leod/detection_io.hpp"
#include "leod/error.hpp"
#include "leod/eval.hpp"
#include "leod/event_io.hpp"
#include "leod/evrep.hpp"
#include "leod/histogram_io.hpp"
#include "leod/pipeline.hpp"
#include "leod/protocol.hpp"
#include "leod/synth.hpp"
#include "leod/tta.hpp"

namespace leod::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

// ---------------------------------------------------------------- helpers

std::string read_text(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot create " + path.string());
  out << text;
  if (!out) throw Error(Errc::io_error, "failed writing " + path.string());
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    throw Error(Errc::parse_error, what + ": " + e.what());
  }
}

/// --config, then $LEOD_CONFIG, then built-in defaults.
PipelineConfig resolve_config(const std::string& path) {
  if (!path.empty()) return load_config(path);
  if (const char* env = std::getenv("LEOD_CONFIG"); env != nullptr && *env != '\0') {
    return load_config(env);
  }
  return PipelineConfig{};
}

void emit_detection_file(const std::string& out_path, const DetectionFile& file, std::ostream& out) {
  if (out_path.empty()) {
    write_detection_file(out, file);
  } else {
    write_detection_file(fs::path(out_path), file);
  }
}

void emit_text(const std::string& out_path, const std::string& text, std::ostream& out) {
  if (out_path.empty()) {
    out << text << '\n';
  } else {
    write_text(out_path, text + "\n");
  }
}

bool looks_like_detection_file(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      return j.is_object() && j.value("format", "") == kDetectionFormat;
    } catch (const json::exception&) {
      return false;
    }
  }
  return false;
}

/// A label index is either a JSON object {seq: [timestamps]} or a detection
/// file, in which case every timestep carrying a record counts as labeled.
LabelIndex read_label_index(const fs::path& path) {
  const std::string text = read_text(path);
  LabelIndex index;
  if (looks_like_detection_file(text)) {
    std::istringstream in(text);
    const DetectionFile file = read_detection_file(in);
    std::map<std::string, std::set<std::int64_t>> steps;
    for (const DetectionRecord& r : file.records) steps[r.seq].insert(r.label.box.t_step);
    for (const auto& [seq, ts] : steps) index[seq] = {ts.begin(), ts.end()};
    return index;
  }
  const json j = parse_json(text, path.string());
  if (!j.is_object()) throw Error(Errc::invalid_input, "label index must be a JSON object");
  for (const auto& [seq, ts] : j.items()) {
    auto v = ts.get<std::vector<std::int64_t>>();
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    index[seq] = std::move(v);
  }
  return index;
}

/// Every record as a pseudo label; raw detections become detected KEEP labels.
std::map<std::string, PseudoLabelSet> labels_of_any_file(const DetectionFile& file) {
  std::map<std::string, PseudoLabelSet> out;
  for (const DetectionRecord& r : file.records) {
    PseudoLabelSet& set = out[r.seq];
    if (set.labels.empty()) {
      set.sequence_id = r.seq;
      set.labels.resize(static_cast<std::size_t>(file.header.num_steps));
    }
    set.labels[static_cast<std::size_t>(r.label.box.t_step)].push_back(r.label);
  }
  return out;
}

std::vector<std::string> class_names_for(int num_classes) {
  if (num_classes == 2) return profile_classes("gen1");
  if (num_classes == 3) return profile_classes("1mpx");
  std::vector<std::string> out;
  for (int c = 0; c < num_classes; ++c) out.push_back("class" + std::to_string(c));
  return out;
}

json counts_json(const PrCounts& c) {
  return {{"tp", c.tp}, {"fp", c.fp}, {"fn", c.fn}, {"precision", c.precision()},
          {"recall", c.recall()}};
}

json loss_json(const LossBreakdown& l) {
  return {{"total", l.total}, {"l_obj", l.l_obj}, {"l_cls", l.l_cls}, {"l_box", l.l_box}};
}

// ---------------------------------------------------------------- split

struct SplitArgs {
  std::string labels;
  std::string mode;
  std::optional<double> ratio;
  std::optional<std::uint64_t> seed;
  std::string config;
  std::string out;
};

int cmd_split(const SplitArgs& a, std::ostream& out) {
  const PipelineConfig cfg = resolve_config(a.config);
  const LabelIndex index = read_label_index(a.labels);
  const SplitMode mode = a.mode.empty() ? cfg.split_mode : parse_split_mode(a.mode);
  const double ratio = a.ratio.value_or(cfg.split_ratio);
  const std::uint64_t seed = a.seed.value_or(cfg.split_seed);
  LabelSplit split;
  switch (mode) {
    case SplitMode::wsod: split = wsod_split(index, ratio); break;
    case SplitMode::ssod: split = ssod_split(index, ratio, seed); break;
    case SplitMode::full: split = full_split(index); break;
  }
  emit_text(a.out, split_to_json(split), out);
  return kExitOk;
}

// ---------------------------------------------------------------- histogram

struct HistogramArgs {
  std::string events;
  std::int64_t window_us = kDefaultWindowUs;
  int bins = kDefaultBins;
  std::uint32_t saturation = kDefaultSaturation;
  int width = 0;
  int height = 0;
  std::int64_t duration_us = 0;
  bool tflip = false;
  bool hflip = false;
  std::string config;
  std::string out;
};

int cmd_histogram(const HistogramArgs& a, std::ostream& out) {
  const PipelineConfig cfg = resolve_config(a.config);
  auto source = open_event_source(a.events, static_cast<std::uint16_t>(a.width),
                                  static_cast<std::uint16_t>(a.height), a.duration_us);
  EventStream stream = source->read();
  if (a.tflip) stream = time_flip_stream(stream, cfg.tta_flip_polarity);
  if (a.hflip) stream = hflip_stream(stream);
  const auto hist = build_histograms(stream, a.window_us, a.bins, a.saturation);
  save_histograms(a.out, hist);
  json summary = {{"windows", hist.size()},
                  {"shape", {hist.size(), 2 * a.bins, stream.height, stream.width}},
                  {"partial_last", !hist.empty() && hist.back().partial},
                  {"npy", a.out + ".npy"},
                  {"sidecar", a.out + ".json"}};
  out << summary.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- tta-merge

struct MergeArgs {
  std::vector<std::string> inputs;
  std::string config;
  std::string out;
};

std::vector<DetectionFile> read_runs(const std::vector<std::string>& paths) {
  std::vector<DetectionFile> files;
  for (const auto& p : paths) files.push_back(read_detection_file(fs::path(p)));
  return files;
}

int cmd_tta_merge(const MergeArgs& a, std::ostream& out) {
  const PipelineConfig cfg = resolve_config(a.config);
  emit_detection_file(a.out, merge_detection_files(read_runs(a.inputs), cfg), out);
  return kExitOk;
}

// ---------------------------------------------------------------- forge

struct ForgeArgs {
  std::vector<std::string> dets;
  std::string config;
  std::string gt;
  std::string split;
  int round = 1;
  int jobs = 1;
  std::string out;
};

int cmd_forge(const ForgeArgs& a, std::ostream& out) {
  const PipelineConfig cfg = resolve_config(a.config);
  // Fail on bad thresholds before touching any input file.
  validate_thresholds(thresholds_from(cfg));
  const auto runs = read_runs(a.dets);
  std::optional<DetectionFile> gt;
  std::optional<LabelSplit> split;
  if (!a.gt.empty()) gt = read_detection_file(fs::path(a.gt));
  if (!a.split.empty()) split = split_from_json(read_text(a.split));

  ForgeFileOptions opts;
  opts.gt = gt ? &*gt : nullptr;
  opts.split = split ? &*split : nullptr;
  opts.round = a.round;
  opts.jobs = a.jobs;
  const DetectionFile file = forge_detection_files(runs, cfg, opts);
  if (a.out.empty()) {
    write_detection_file(out, file);
    return kExitOk;
  }
  write_detection_file(fs::path(a.out), file);
  std::set<std::string> seqs;
  std::size_t keep = 0;
  std::size_t ignore = 0;
  for (const auto& r : file.records) {
    seqs.insert(r.seq);
    (r.label.certainty == Certainty::keep ? keep : ignore) += 1;
  }
  out << json{{"sequences", seqs.size()}, {"keep", keep}, {"ignore", ignore},
              {"round", a.round}, {"config_digest", *file.header.config_digest}}
             .dump()
      << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- assign

struct AssignArgs {
  std::string labels;
  std::string grid;
  std::string preds;
  std::string config;
  std::string out;
};

struct GridSpec {
  std::vector<int> strides;
  int height = 0;
  int width = 0;
};

/// "8,16,32@HxW"; the "@HxW" part is optional.
GridSpec parse_grid(const std::string& text, int default_h, int default_w) {
  GridSpec g{{}, default_h, default_w};
  const auto at = text.find('@');
  std::istringstream strides(text.substr(0, at));
  std::string item;
  try {
    while (std::getline(strides, item, ',')) {
      std::size_t used = 0;
      g.strides.push_back(std::stoi(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    }
    if (at != std::string::npos) {
      const std::string dims = text.substr(at + 1);
      const auto x = dims.find('x');
      if (x == std::string::npos) throw std::invalid_argument(dims);
      std::size_t used_h = 0;
      std::size_t used_w = 0;
      g.height = std::stoi(dims.substr(0, x), &used_h);
      g.width = std::stoi(dims.substr(x + 1), &used_w);
      if (used_h != x || used_w != dims.size() - x - 1) throw std::invalid_argument(dims);
    }
  } catch (const std::logic_error&) {
    throw Error(Errc::invalid_input, "malformed --grid '" + text + "', expected e.g. 8,16,32@240x304");
  }
  return g;
}

// Prediction file: header {"format":"leopred/1","num_classes":C,"num_anchors":N}
// then {"seq","t","p_obj":[N],"p_iou":[N*C],"delta":[[dx,dy,dw,dh],...]} per frame.
std::map<std::pair<std::string, int>, AnchorPrediction> read_predictions(const fs::path& path,
                                                                         const AnchorGrid& grid) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  std::map<std::pair<std::string, int>, AnchorPrediction> out;
  std::string line;
  int num_classes = -1;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const json j = parse_json(line, path.string() + ":" + std::to_string(line_no));
    try {
      if (num_classes < 0) {
        if (j.value("format", "") != "leopred/1") {
          throw Error(Errc::parse_error, "prediction file lacks a leopred/1 header");
        }
        num_classes = j.at("num_classes").get<int>();
        if (j.at("num_anchors").get<std::size_t>() != grid.size()) {
          throw Error(Errc::invalid_input, "prediction anchor count does not match --grid");
        }
        continue;
      }
      AnchorPrediction p;
      p.num_classes = num_classes;
      p.p_obj = j.at("p_obj").get<std::vector<double>>();
      p.p_iou = j.at("p_iou").get<std::vector<double>>();
      p.delta = j.at("delta").get<std::vector<BoxDelta>>();
      validate_prediction(p, grid);
      out[{j.at("seq").get<std::string>(), j.at("t").get<int>()}] = std::move(p);
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (num_classes < 0) throw Error(Errc::parse_error, "prediction file is empty");
  return out;
}

int cmd_assign(const AssignArgs& a, std::ostream& out) {
  const PipelineConfig cfg = resolve_config(a.config);
  const DetectionFile labels = read_detection_file(fs::path(a.labels));
  const GridSpec spec =
      a.grid.empty()
          ? GridSpec{cfg.strides, labels.header.height, labels.header.width}
          : parse_grid(a.grid, labels.header.height, labels.header.width);
  const AnchorGrid grid = make_grid(spec.strides, spec.height, spec.width);
  validate_grid(grid);
  std::map<std::pair<std::string, int>, AnchorPrediction> preds;
  if (!a.preds.empty()) preds = read_predictions(a.preds, grid);

  std::map<std::pair<std::string, int>, std::pair<std::vector<DetBox>, std::vector<DetBox>>> frames;
  for (const DetectionRecord& r : labels.records) {
    auto& [keep, ignore] = frames[{r.seq, r.label.box.t_step}];
    (r.label.certainty == Certainty::keep ? keep : ignore).push_back(r.label.box);
  }
  for (const auto& [key, p] : preds) frames[key];

  const std::string digest = config_digest(cfg);
  std::ostringstream file;
  file << json{{"format", "leoassign/1"},
               {"strides", spec.strides},
               {"height", spec.height},
               {"width", spec.width},
               {"num_anchors", grid.size()},
               {"config_digest", digest}}
              .dump()
       << '\n';
  json per_frame = json::array();
  LossBreakdown sum;
  std::size_t positives = 0;
  std::size_t masked = 0;
  std::size_t loss_frames = 0;
  for (const auto& [key, boxes] : frames) {
    const auto pit = preds.find(key);
    const AnchorPrediction* pred = pit == preds.end() ? nullptr : &pit->second;
    const AnchorAssignment asg = assign_anchors(grid, boxes.first, boxes.second, pred, cfg.assign);
    json pos = json::array();
    json msk = json::array();
    for (std::size_t i = 0; i < asg.size(); ++i) {
      if (asg.o[i] != 0) pos.push_back({i, asg.matched[i], asg.matched_class[i]});
      if (asg.r[i] != 0) msk.push_back({i, asg.matched[i]});
    }
    positives += asg.num_positive();
    masked += asg.num_masked();
    file << json{{"seq", key.first}, {"t", key.second}, {"positive", pos}, {"masked", msk}}.dump()
         << '\n';
    if (pred != nullptr) {
      const LossBreakdown l = detection_loss(*pred, asg);
      sum.total += l.total;
      sum.l_obj += l.l_obj;
      sum.l_cls += l.l_cls;
      sum.l_box += l.l_box;
      ++loss_frames;
      json f = loss_json(l);
      f["seq"] = key.first;
      f["t"] = key.second;
      per_frame.push_back(f);
    }
  }
  if (a.out.empty()) {
    out << file.str();
    return kExitOk;
  }
  write_text(a.out, file.str());
  json report = {{"frames", frames.size()},
                 {"num_anchors", grid.size()},
                 {"num_positive", positives},
                 {"num_masked", masked},
                 {"config_digest", digest}};
  if (loss_frames > 0) {
    const double n = static_cast<double>(loss_frames);
    report["loss"] = loss_json({sum.total / n, sum.l_obj / n, sum.l_cls / n, sum.l_box / n});
    report["per_frame"] = per_frame;
  }
  out << report.dump() << '\n';
  return kExitOk;
}

// ---------------------------------------------------------------- eval

struct EvalArgs {
  std::vector<std::string> pred;
  std::string gt;
  std::string mode = "pr";
  std::string split;
  std::string frames = "skipped";
  std::string labels;
  std::string precisions;
  std::string config;
  std::string out;
};

std::map<std::string, GtFrames> load_gt(const EvalArgs& a, DetectionHeader& header) {
  const DetectionFile gt_file = read_detection_file(fs::path(a.gt));
  header = gt_file.header;
  auto gt = gt_by_sequence(gt_file);
  if (!a.labels.empty()) {
    for (const auto& [seq, ts] : read_label_index(a.labels)) {
      for (std::int64_t t : ts) gt[seq][static_cast<int>(t)];
    }
  }
  return gt;
}

PrTally tally_for(const DetectionFile& pred, const std::map<std::string, GtFrames>& gt,
                  const std::optional<LabelSplit>& split, PrMode mode, double tau) {
  const auto sets = labels_of_any_file(pred);
  PrTally total;
  total.per_class.resize(static_cast<std::size_t>(pred.header.num_classes()));
  for (const auto& [seq, frames] : gt) {
    std::set<int> labeled;
    if (split) {
      if (auto it = split->kept.find(seq); it != split->kept.end()) {
        for (std::int64_t t : it->second) labeled.insert(static_cast<int>(t));
      }
    }
    PseudoLabelSet empty;
    empty.sequence_id = seq;
    empty.labels.resize(static_cast<std::size_t>(pred.header.num_steps));
    const auto sit = sets.find(seq);
    total += pseudo_label_tally(sit == sets.end() ? empty : sit->second, frames, labeled, mode,
                                pred.header.num_classes(), tau);
  }
  return total;
}

int cmd_eval(const EvalArgs& a, std::ostream& out) {
  const PipelineConfig cfg = resolve_config(a.config);
  std::optional<LabelSplit> split;
  if (!a.split.empty()) split = split_from_json(read_text(a.split));
  if (a.frames != "skipped" && a.frames != "labeled") {
    throw Error(Errc::invalid_input, "--frames must be skipped or labeled");
  }
  json result;
  if (a.mode == "stop" && !a.precisions.empty()) {
    std::vector<double> p;
    std::istringstream ss(a.precisions);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        p.push_back(std::stod(item));
      } catch (const std::logic_error&) {
        throw Error(Errc::invalid_input, "malformed --precisions entry '" + item + "'");
      }
    }
    result = {{"mode", "stop"}, {"precisions", p}, {"selected_round", stopping_decision(p)}};
  } else {
    if (a.pred.empty() || a.gt.empty()) throw Error(Errc::invalid_input, "--pred and --gt are required");
    DetectionHeader gt_header;
    const auto gt = load_gt(a, gt_header);
    std::vector<DetectionFile> preds;
    for (const auto& p : a.pred) {
      preds.push_back(read_detection_file(fs::path(p)));
      check_same_layout(gt_header, preds.back().header, p);
    }
    if (a.mode == "pr") {
      const PrMode mode = a.frames == "labeled" ? PrMode::labeled_frames : PrMode::skipped_frames;
      PrTally total;
      for (const auto& p : preds) {
        PrTally t = tally_for(p, gt, split, mode, cfg.tau_match);
        if (total.per_class.empty()) total.per_class.resize(t.per_class.size());
        total += t;
      }
      const PrReport report = pr_report(total);
      json per_class = json::array();
      for (std::size_t c = 0; c < total.per_class.size(); ++c) {
        json j = counts_json(total.per_class[c]);
        j["class"] = gt_header.classes[c];
        per_class.push_back(j);
      }
      PrCounts all;
      for (const auto& c : total.per_class) all += c;
      result = counts_json(all);
      result["mode"] = "pr";
      result["frames"] = a.frames;
      result["steps"] = total.participating_steps;
      result["tau_match"] = cfg.tau_match;
      result["per_class"] = per_class;
    } else if (a.mode == "map") {
      std::vector<std::vector<DetBox>> pred_frames;
      std::vector<std::vector<DetBox>> gt_frames;
      for (const auto& p : preds) {
        const auto sets = labels_of_any_file(p);
        std::set<std::string> seqs;
        for (const auto& [seq, _] : sets) seqs.insert(seq);
        for (const auto& [seq, _] : gt) seqs.insert(seq);
        for (const auto& seq : seqs) {
          const auto sit = sets.find(seq);
          const auto git = gt.find(seq);
          for (int t = 0; t < p.header.num_steps; ++t) {
            std::vector<DetBox> pf;
            if (sit != sets.end()) {
              for (const PseudoLabel& l : sit->second.labels[static_cast<std::size_t>(t)]) {
                if (l.certainty == Certainty::keep && l.source == LabelSource::pseudo) {
                  pf.push_back(l.box);
                }
              }
            }
            std::vector<DetBox> gf;
            if (git != gt.end()) {
              if (auto f = git->second.find(t); f != git->second.end()) gf = f->second;
            }
            pred_frames.push_back(std::move(pf));
            gt_frames.push_back(std::move(gf));
          }
        }
      }
      const auto thresholds = iou_thresholds_from(cfg);
      const ApResult ap = mean_ap(pred_frames, gt_frames, eval_filter_from(cfg),
                                  gt_header.num_classes(), thresholds);
      json per_class = json::object();
      for (std::size_t c = 0; c < ap.per_class_ap.size(); ++c) {
        per_class[gt_header.classes[c]] = ap.per_class_ap[c] < 0 ? json(nullptr) : json(ap.per_class_ap[c]);
      }
      result = {{"mode", "map"},
                {"map", ap.map},
                {"per_class_ap", per_class},
                {"iou_thresholds", ap.iou_thresholds}};
    } else if (a.mode == "stop") {
      // One prediction file per round, scored on frames used for training.
      std::vector<double> p;
      const PrMode mode = split ? PrMode::labeled_frames : PrMode::skipped_frames;
      for (const auto& f : preds) {
        const PrReport r = pr_report(tally_for(f, gt, split, mode, cfg.tau_match));
        p.push_back(r.overall.precision);
      }
      result = {{"mode", "stop"}, {"precisions", p}, {"selected_round", stopping_decision(p)}};
    } else {
      throw Error(Errc::invalid_input, "--mode must be pr, map or stop");
    }
  }
  result["config_digest"] = config_digest(cfg);
  emit_text(a.out, result.dump(), out);
  return kExitOk;
}

// ---------------------------------------------------------------- synth

struct SynthArgs {
  std::string scenario;
  std::uint64_t seed = 7;
  std::string out;
};

int cmd_synth(const SynthArgs& a, std::ostream& out) {
  const Scenario sc = find_scenario(a.scenario, a.seed);
  const SynthOutput data = generate(sc);
  const fs::path dir(a.out);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw Error(Errc::io_error, "cannot create " + dir.string() + ": " + ec.message());

  {
    std::ofstream ev(dir / "events.evb1", std::ios::binary);
    if (!ev) throw Error(Errc::io_error, "cannot create events.evb1");
    write_evb1(ev, data.events);
  }
  DetectionHeader header;
  header.classes = class_names_for(sc.num_classes);
  header.width = sc.width;
  header.height = sc.height;
  header.num_steps = sc.duration_steps;

  DetectionFile gt{header, {}};
  for (const auto& frame : data.gt) {
    for (const DetBox& b : frame) {
      DetectionRecord r;
      r.seq = sc.name;
      r.src = RecordSource::gt;
      r.label.box = b;
      r.label.source = LabelSource::ground_truth;
      gt.records.push_back(std::move(r));
    }
  }
  write_detection_file(dir / "gt.ndjson", gt);

  json index = json::object();
  std::vector<int> all_steps(static_cast<std::size_t>(sc.duration_steps));
  for (int t = 0; t < sc.duration_steps; ++t) all_steps[static_cast<std::size_t>(t)] = t;
  index[sc.name] = all_steps;
  write_text(dir / "labels.json", index.dump() + "\n");

  static const char* kNames[] = {"det_fwd", "det_tflip", "det_hflip", "det_thflip"};
  const auto variants = standard_variants(sc.duration_steps, sc.width, true);
  std::size_t det_count = 0;
  for (std::size_t v = 0; v < variants.size(); ++v) {
    DetectionFile det{header, {}};
    for (const auto& frame : generate_variant_detections(sc, variants[v])) {
      for (const DetBox& b : frame) {
        DetectionRecord r;
        r.seq = sc.name;
        r.src = RecordSource::det;
        r.label.box = b;
        det.records.push_back(std::move(r));
      }
    }
    if (v == 0) det_count = det.records.size();
    write_detection_file(dir / (std::string(kNames[v]) + ".ndjson"), det);
  }
  std::size_t gt_count = gt.records.size();
  out << json{{"scenario", sc.name},
              {"seed", sc.seed},
              {"num_steps", sc.duration_steps},
              {"events", data.events.events.size()},
              {"gt_boxes", gt_count},
              {"det_fwd_boxes", det_count},
              {"out", dir.string()}}
             .dump()
      << '\n';
  return kExitOk;
}

void report_error(std::ostream& err, const std::string& code, const std::string& message) {
  err << json{{"error", code}, {"message", message}}.dump() << '\n';
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Event-camera pseudo-label refinement toolkit", "leod"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "leod 0.1.0");

  SplitArgs split;
  auto* s = app.add_subcommand("split", "Sample the labeled timestamps kept for training");
  s->add_option("--labels", split.labels, "Label index JSON or detection file")->required();
  s->add_option("--mode", split.mode, "wsod, ssod or full");
  s->add_option("--ratio", split.ratio, "Fraction of labels to keep");
  s->add_option("--seed", split.seed, "Seed for the ssod sequence shuffle");
  s->add_option("--config", split.config, "Pipeline config (TOML)");
  s->add_option("--out", split.out, "Output file, stdout when omitted");

  HistogramArgs hist;
  auto* h = app.add_subcommand("histogram", "Bin an event stream into per-window histograms");
  h->add_option("--events", hist.events, "Event file (.evb1, .bin or .csv)")->required();
  h->add_option("--window-us", hist.window_us, "Window length in microseconds");
  h->add_option("--bins", hist.bins, "Temporal bins per window");
  h->add_option("--saturation", hist.saturation, "Per-cell count cap, 0 disables");
  h->add_option("--width", hist.width, "Sensor width for CSV input");
  h->add_option("--height", hist.height, "Sensor height for CSV input");
  h->add_option("--duration-us", hist.duration_us, "Stream duration for CSV input");
  h->add_flag("--tflip", hist.tflip, "Time-reverse the stream first");
  h->add_flag("--hflip", hist.hflip, "Mirror the stream horizontally first");
  h->add_option("--config", hist.config, "Pipeline config (TOML)");
  h->add_option("--out", hist.out, "Output stem; writes <stem>.npy and <stem>.json")->required();

  MergeArgs merge;
  auto* m = app.add_subcommand("tta-merge", "Merge detections from flipped inference runs");
  m->add_option("--inputs", merge.inputs, "det_fwd det_tflip [det_hflip det_thflip]")
      ->required()
      ->expected(1, 4);
  m->add_option("--config", merge.config, "Pipeline config (TOML)");
  m->add_option("--out", merge.out, "Output file, stdout when omitted");

  ForgeArgs forge_args;
  auto* f = app.add_subcommand("forge", "Produce certainty-tagged pseudo labels");
  f->add_option("--dets", forge_args.dets, "Detections: merged file, or fwd [tflip hflip thflip]")
      ->required()
      ->expected(1, 4);
  f->add_option("--config", forge_args.config, "Pipeline config (TOML), else $LEOD_CONFIG");
  f->add_option("--gt", forge_args.gt, "Ground-truth detection file");
  f->add_option("--split", forge_args.split, "Split JSON restricting which GT timesteps are used");
  f->add_option("--round", forge_args.round, "Self-training round")->check(CLI::PositiveNumber);
  f->add_option("--jobs", forge_args.jobs, "Worker threads")->check(CLI::PositiveNumber);
  f->add_option("--out", forge_args.out, "Output file, stdout when omitted");

  AssignArgs assign;
  auto* as = app.add_subcommand("assign", "Assign anchors to KEEP/IGNORE labels and report the loss");
  as->add_option("--labels", assign.labels, "Pseudo-label detection file")->required();
  as->add_option("--grid", assign.grid, "Strides and image size, e.g. 8,16,32@240x304");
  as->add_option("--preds", assign.preds, "Per-anchor predictions (leopred/1)");
  as->add_option("--config", assign.config, "Pipeline config (TOML)");
  as->add_option("--out", assign.out, "Assignment file; the loss report goes to stdout");

  EvalArgs ev;
  auto* e = app.add_subcommand("eval", "Precision/recall, mAP or round selection");
  e->add_option("--pred", ev.pred, "Prediction or pseudo-label file (repeat per round for stop)");
  e->add_option("--gt", ev.gt, "Ground-truth detection file");
  e->add_option("--mode", ev.mode, "pr, map or stop");
  e->add_option("--split", ev.split, "Split JSON marking labeled timesteps");
  e->add_option("--frames", ev.frames, "pr frames: skipped or labeled");
  e->add_option("--labels", ev.labels, "Label index of annotated timesteps (adds empty frames)");
  e->add_option("--precisions", ev.precisions, "Comma-separated per-round precisions for stop");
  e->add_option("--config", ev.config, "Pipeline config (TOML)");
  e->add_option("--out", ev.out, "Output file, stdout when omitted");

  SynthArgs syn;
  auto* sy = app.add_subcommand("synth", "Write a seeded synthetic dataset");
  sy->add_option("--scenario", syn.scenario, "static-car, crowd, fast-crosser, fp-storm, urban-01")
      ->required();
  sy->add_option("--seed", syn.seed, "Random seed");
  sy->add_option("--out", syn.out, "Output directory")->required();

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForVersion&) {
    out << app.version() << '\n';
    return kExitOk;
  } catch (const CLI::ParseError& ex) {
    report_error(err, "usage", ex.what());
    return kExitUsage;
  }

  try {
    if (s->parsed()) return cmd_split(split, out);
    if (h->parsed()) return cmd_histogram(hist, out);
    if (m->parsed()) return cmd_tta_merge(merge, out);
    if (f->parsed()) return cmd_forge(forge_args, out);
    if (as->parsed()) return cmd_assign(assign, out);
    if (e->parsed()) return cmd_eval(ev, out);
    if (sy->parsed()) return cmd_synth(syn, out);
  } catch (const Error& ex) {
    report_error(err, std::string(to_string(ex.code())), ex.what());
    return kExitError;
  } catch (const nlohmann::json::exception& ex) {
    report_error(err, "parse-error", ex.what());
    return kExitError;
  } catch (const std::exception& ex) {
    report_error(err, "internal", ex.what());
    return kExitError;
  }
  return kExitUsage;
}

}  // namespace leod::cli
