// SPDX-License-Identifier: Apache-2.0
// File-level entry points shared by the command-line tool and language
// bindings, so both produce identical bytes from identical inputs.
#pragma once

#include <map>
#include <span>
#include <string>
#include <vector>

#include "leod/config.hpp"
#include "leod/detection_io.hpp"
#include "leod/protocol.hpp"
#include "leod/tta.hpp"

namespace leod {

/// Errc::invalid_input unless both headers agree on classes, width, height
/// and num_steps. `what` names the offending input in the message.
void check_same_layout(const DetectionHeader& first, const DetectionHeader& other,
                       const std::string& what);

/// Detector runs ordered identity, time-flip, h-flip, combined flip (1 to 4
/// files), regrouped per sequence. Ground-truth records are skipped.
std::map<std::string, std::vector<VariantOutput>> variants_by_sequence(
    std::span<const DetectionFile> runs);

/// tta_merge per sequence; the result carries the config digest.
DetectionFile merge_detection_files(std::span<const DetectionFile> runs, const PipelineConfig& cfg);

struct ForgeFileOptions {
  const DetectionFile* gt = nullptr;     // labeled boxes, optional
  const LabelSplit* split = nullptr;     // restricts which GT timesteps count; needs gt
  int round = 1;
  int jobs = 1;
};

/// One self-training round over detection files: thresholds and options
/// come from `cfg`, output records are in canonical order and the header is
/// stamped with the round and config digest.
DetectionFile forge_detection_files(std::span<const DetectionFile> runs, const PipelineConfig& cfg,
                                    const ForgeFileOptions& options = {});

}  // namespace leod
