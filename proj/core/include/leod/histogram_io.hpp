// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "leod/evrep.hpp"

namespace leod {

// A histogram stack is stored as a NumPy .npy array ('<u4', shape
// (K, 2B, H, W)) plus a JSON sidecar holding window_us, bins, saturation and
// the per-window index/partial flags. All histograms must share one shape.

void write_histograms_npy(std::ostream& out, std::span<const Histogram> histograms);
std::string histogram_sidecar_json(std::span<const Histogram> histograms);

std::vector<Histogram> read_histograms(std::istream& npy, const std::string& sidecar_json);

/// Writes `<stem>.npy` and `<stem>.json`.
void save_histograms(const std::filesystem::path& stem, std::span<const Histogram> histograms);
std::vector<Histogram> load_histograms(const std::filesystem::path& stem);

}  // namespace leod
