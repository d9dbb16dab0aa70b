// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace leod {

enum class SplitMode { wsod, ssod, full };

std::string to_string(SplitMode mode);
SplitMode parse_split_mode(const std::string& text);

/// Sequence id -> sorted labeled timestamps.
using LabelIndex = std::map<std::string, std::vector<std::int64_t>>;

struct LabelSplit {
  SplitMode mode = SplitMode::full;
  double ratio = 1.0;
  std::uint64_t seed = 0;
  LabelIndex kept;
  std::vector<std::string> warnings;

  std::size_t kept_count() const;
};

/// Keeps k = max(1, round(ratio * m)) labels per sequence at indices
/// floor(j * m / k). Throws Errc::invalid_input on an empty index or a ratio
/// outside (0, 1].
LabelSplit wsod_split(const LabelIndex& index, double ratio);

/// Shuffles the labeled sequences with the seeded generator and takes them in
/// order until the running label count first reaches ratio * total. If the
/// budget is smaller than every sequence, the smallest one is kept and a
/// warning recorded.
LabelSplit ssod_split(const LabelIndex& index, double ratio, std::uint64_t seed);

LabelSplit full_split(const LabelIndex& index);

/// Canonical JSON {kept, mode, ratio, seed}: keys sorted, no whitespace.
std::string split_to_json(const LabelSplit& split);
LabelSplit split_from_json(const std::string& text);

}  // namespace leod
