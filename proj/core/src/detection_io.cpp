// SPDX-License-Identifier: Apache-2.0
#include "leod/detection_io.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>

#include "leod/error.hpp"

namespace leod {

using nlohmann::json;

namespace {

RecordSource parse_source(const std::string& s) {
  if (s == "det") return RecordSource::det;
  if (s == "gt") return RecordSource::gt;
  if (s == "pseudo") return RecordSource::pseudo;
  throw Error(Errc::parse_error, "unknown record src '" + s + "'");
}

json header_to_json(const DetectionHeader& h) {
  json j = {{"format", kDetectionFormat},
            {"classes", h.classes},
            {"width", h.width},
            {"height", h.height},
            {"num_steps", h.num_steps}};
  if (h.config_digest) j["config_digest"] = *h.config_digest;
  if (h.round) j["round"] = *h.round;
  return j;
}

DetectionHeader header_from_json(const json& j) {
  if (!j.is_object() || !j.contains("format") || j["format"] != kDetectionFormat) {
    throw Error(Errc::parse_error, "first line is not a leodet/1 header");
  }
  DetectionHeader h;
  h.classes = j.at("classes").get<std::vector<std::string>>();
  h.width = j.at("width").get<int>();
  h.height = j.at("height").get<int>();
  h.num_steps = j.at("num_steps").get<int>();
  if (j.contains("config_digest")) h.config_digest = j["config_digest"].get<std::string>();
  if (j.contains("round")) h.round = j["round"].get<int>();
  if (h.classes.empty() || h.width <= 0 || h.height <= 0 || h.num_steps <= 0) {
    throw Error(Errc::invalid_input, "header needs classes and positive width/height/num_steps");
  }
  return h;
}

json record_to_json(const DetectionRecord& r) {
  const PseudoLabel& l = r.label;
  return {{"seq", r.seq},
          {"t", l.box.t_step},
          {"cls", l.box.class_id},
          {"x", l.box.x},
          {"y", l.box.y},
          {"w", l.box.w},
          {"h", l.box.h},
          {"p_obj", l.box.p_obj},
          {"p_iou", l.box.p_iou},
          {"src", to_string(r.src)},
          {"cert", l.certainty == Certainty::keep ? "keep" : "ignore"},
          {"prov", l.provenance == Provenance::detected ? "detected" : "inpainted"},
          {"tlen_f", l.track_len_fwd},
          {"tlen_b", l.track_len_bwd}};
}

DetectionRecord record_from_json(const json& j, const DetectionHeader& h) {
  DetectionRecord r;
  r.seq = j.at("seq").get<std::string>();
  r.src = parse_source(j.at("src").get<std::string>());
  PseudoLabel& l = r.label;
  l.box.t_step = j.at("t").get<int>();
  l.box.class_id = j.at("cls").get<int>();
  l.box.x = j.at("x").get<double>();
  l.box.y = j.at("y").get<double>();
  l.box.w = j.at("w").get<double>();
  l.box.h = j.at("h").get<double>();
  l.box.p_obj = j.at("p_obj").get<double>();
  l.box.p_iou = j.at("p_iou").get<std::vector<double>>();
  if (j.contains("cert")) {
    const auto c = j["cert"].get<std::string>();
    if (c != "keep" && c != "ignore") throw Error(Errc::parse_error, "unknown cert '" + c + "'");
    l.certainty = c == "keep" ? Certainty::keep : Certainty::ignore;
  }
  if (j.contains("prov")) {
    const auto p = j["prov"].get<std::string>();
    if (p != "detected" && p != "inpainted") throw Error(Errc::parse_error, "unknown prov '" + p + "'");
    l.provenance = p == "detected" ? Provenance::detected : Provenance::inpainted;
  }
  l.source = r.src == RecordSource::gt ? LabelSource::ground_truth : LabelSource::pseudo;
  l.track_len_fwd = j.value("tlen_f", 0);
  l.track_len_bwd = j.value("tlen_b", 0);
  if (l.box.t_step < 0 || l.box.t_step >= h.num_steps) {
    throw Error(Errc::invalid_input, "record timestep " + std::to_string(l.box.t_step) +
                                         " outside [0, " + std::to_string(h.num_steps) + ")");
  }
  validate_box(l.box, h.num_classes());
  return r;
}

}  // namespace

std::string to_string(RecordSource src) {
  switch (src) {
    case RecordSource::det: return "det";
    case RecordSource::gt: return "gt";
    case RecordSource::pseudo: return "pseudo";
  }
  return "det";
}

void write_detection_file(std::ostream& out, const DetectionFile& file) {
  out << header_to_json(file.header).dump() << '\n';
  for (const DetectionRecord& r : file.records) out << record_to_json(r).dump() << '\n';
  if (!out) throw Error(Errc::io_error, "failed writing detection file");
}

void write_detection_file(const std::filesystem::path& path, const DetectionFile& file) {
  std::ofstream out(path);
  if (!out) throw Error(Errc::io_error, "cannot create " + path.string());
  write_detection_file(out, file);
}

DetectionFile read_detection_file(std::istream& in) {
  DetectionFile file;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        file.header = header_from_json(j);
        have_header = true;
      } else {
        file.records.push_back(record_from_json(j, file.header));
      }
    } catch (const json::exception& e) {
      throw Error(Errc::parse_error, "line " + std::to_string(line_no) + ": " + e.what());
    } catch (const Error& e) {
      throw Error(e.code(), "line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!have_header) throw Error(Errc::parse_error, "detection file has no header");
  return file;
}

DetectionFile read_detection_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open " + path.string());
  return read_detection_file(in);
}

void canonical_order(std::vector<DetectionRecord>& records) {
  std::stable_sort(records.begin(), records.end(), [](const auto& a, const auto& b) {
    if (a.seq != b.seq) return a.seq < b.seq;
    return a.label.box.t_step < b.label.box.t_step;
  });
}

std::map<std::string, std::vector<std::vector<DetBox>>> frames_by_sequence(
    const DetectionFile& file, const std::vector<RecordSource>& sources) {
  std::map<std::string, std::vector<std::vector<DetBox>>> out;
  for (const DetectionRecord& r : file.records) {
    if (!sources.empty() && std::find(sources.begin(), sources.end(), r.src) == sources.end()) {
      continue;
    }
    auto& frames = out[r.seq];
    frames.resize(static_cast<std::size_t>(file.header.num_steps));
    frames[static_cast<std::size_t>(r.label.box.t_step)].push_back(r.label.box);
  }
  return out;
}

std::map<std::string, std::map<int, std::vector<DetBox>>> gt_by_sequence(const DetectionFile& file) {
  std::map<std::string, std::map<int, std::vector<DetBox>>> out;
  for (const DetectionRecord& r : file.records) {
    out[r.seq][r.label.box.t_step].push_back(r.label.box);
  }
  return out;
}

DetectionFile from_label_sets(const DetectionHeader& header,
                              const std::map<std::string, PseudoLabelSet>& sets) {
  DetectionFile file;
  file.header = header;
  for (const auto& [seq, set] : sets) {
    if (set.num_steps() != header.num_steps) {
      throw Error(Errc::invalid_input, "sequence " + seq + " has " + std::to_string(set.num_steps()) +
                                           " steps, header says " + std::to_string(header.num_steps));
    }
    for (const auto& frame : set.labels) {
      for (const PseudoLabel& l : frame) {
        file.records.push_back(
            {seq, l.source == LabelSource::ground_truth ? RecordSource::gt : RecordSource::pseudo, l});
      }
    }
  }
  return file;
}

std::map<std::string, PseudoLabelSet> to_label_sets(const DetectionFile& file) {
  std::map<std::string, PseudoLabelSet> out;
  for (const DetectionRecord& r : file.records) {
    if (r.src == RecordSource::det) {
      throw Error(Errc::invalid_input, "raw detection record in a label file (seq " + r.seq + ")");
    }
    PseudoLabelSet& set = out[r.seq];
    if (set.labels.empty()) {
      set.sequence_id = r.seq;
      set.labels.resize(static_cast<std::size_t>(file.header.num_steps));
      set.round = file.header.round.value_or(1);
      set.config_digest = file.header.config_digest.value_or("");
    }
    set.labels[static_cast<std::size_t>(r.label.box.t_step)].push_back(r.label);
  }
  return out;
}

}  // namespace leod
