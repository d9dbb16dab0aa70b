// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leod/pipeline.hpp"

namespace leod {

// NDJSON interchange: one header line
//   {"format":"leodet/1","classes":[...],"width":W,"height":H,"num_steps":L, ...}
// followed by one record per box
//   {seq,t,cls,x,y,w,h,p_obj,p_iou,src,cert,prov,tlen_f,tlen_b}.

inline constexpr const char* kDetectionFormat = "leodet/1";

enum class RecordSource { det, gt, pseudo };

struct DetectionHeader {
  std::vector<std::string> classes;
  int width = 0;
  int height = 0;
  int num_steps = 0;
  std::optional<std::string> config_digest;
  std::optional<int> round;

  int num_classes() const { return static_cast<int>(classes.size()); }
  friend bool operator==(const DetectionHeader&, const DetectionHeader&) = default;
};

struct DetectionRecord {
  std::string seq;
  RecordSource src = RecordSource::det;
  PseudoLabel label;

  friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

struct DetectionFile {
  DetectionHeader header;
  std::vector<DetectionRecord> records;

  friend bool operator==(const DetectionFile&, const DetectionFile&) = default;
};

void write_detection_file(std::ostream& out, const DetectionFile& file);
void write_detection_file(const std::filesystem::path& path, const DetectionFile& file);

/// Errc::parse_error on malformed lines or a missing header, Errc::invalid_input
/// when a record violates the header (class id, p_iou length, timestep range).
DetectionFile read_detection_file(std::istream& in);
DetectionFile read_detection_file(const std::filesystem::path& path);

/// Records sorted by (seq, t) keeping input order within a timestep.
void canonical_order(std::vector<DetectionRecord>& records);

/// Boxes of every sequence grouped by timestep; `num_steps` frames each.
/// Only records whose source is in `sources` are included (all when empty).
std::map<std::string, std::vector<std::vector<DetBox>>> frames_by_sequence(
    const DetectionFile& file, const std::vector<RecordSource>& sources = {});

/// Every record of a ground-truth file grouped per sequence as
/// {timestep -> boxes}; only timesteps that carry at least one record appear.
std::map<std::string, std::map<int, std::vector<DetBox>>> gt_by_sequence(const DetectionFile& file);

DetectionFile from_label_sets(const DetectionHeader& header,
                              const std::map<std::string, PseudoLabelSet>& sets);

/// Pseudo-label sets from a file written by from_label_sets(); "gt" records
/// become ground-truth KEEP labels and "det" records are rejected.
std::map<std::string, PseudoLabelSet> to_label_sets(const DetectionFile& file);

std::string to_string(RecordSource src);

}  // namespace leod
