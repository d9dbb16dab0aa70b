// SPDX-License-Identifier: Apache-2.0
#include "leod/protocol.hpp"

#include <algorithm>
#include <cmath>
#include <nlohmann/json.hpp>

#include "leod/error.hpp"
#include "leod/rng.hpp"

namespace leod {

std::string to_string(SplitMode mode) {
  switch (mode) {
    case SplitMode::wsod: return "wsod";
    case SplitMode::ssod: return "ssod";
    case SplitMode::full: return "full";
  }
  return "full";
}

SplitMode parse_split_mode(const std::string& text) {
  if (text == "wsod") return SplitMode::wsod;
  if (text == "ssod") return SplitMode::ssod;
  if (text == "full") return SplitMode::full;
  throw Error(Errc::invalid_config, "unknown split mode '" + text + "'");
}

std::size_t LabelSplit::kept_count() const {
  std::size_t n = 0;
  for (const auto& [seq, ts] : kept) n += ts.size();
  return n;
}

namespace {

void require_nonempty(const LabelIndex& index) {
  if (index.empty()) throw Error(Errc::invalid_input, "label index is empty");
}

std::vector<std::int64_t> sorted_copy(const std::vector<std::int64_t>& ts) {
  std::vector<std::int64_t> out = ts;
  std::sort(out.begin(), out.end());
  return out;
}

}  // namespace

LabelSplit wsod_split(const LabelIndex& index, double ratio) {
  require_nonempty(index);
  if (!(ratio > 0.0 && ratio <= 1.0)) {
    throw Error(Errc::invalid_input, "WSOD ratio must lie in (0, 1]");
  }
  LabelSplit split;
  split.mode = SplitMode::wsod;
  split.ratio = ratio;
  for (const auto& [seq, raw] : index) {
    const std::vector<std::int64_t> ts = sorted_copy(raw);
    std::vector<std::int64_t>& kept = split.kept[seq];
    const auto m = static_cast<std::int64_t>(ts.size());
    if (m == 0) continue;
    const std::int64_t k =
        std::min(m, std::max<std::int64_t>(1, std::llround(ratio * static_cast<double>(m))));
    for (std::int64_t j = 0; j < k; ++j) {
      kept.push_back(ts[static_cast<std::size_t>(j * m / k)]);
    }
  }
  return split;
}

LabelSplit ssod_split(const LabelIndex& index, double ratio, std::uint64_t seed) {
  require_nonempty(index);
  if (!(ratio > 0.0 && ratio < 1.0)) {
    throw Error(Errc::invalid_input, "SSOD ratio must lie in (0, 1)");
  }
  LabelSplit split;
  split.mode = SplitMode::ssod;
  split.ratio = ratio;
  split.seed = seed;

  std::vector<std::string> order;
  std::size_t total = 0;
  for (const auto& [seq, ts] : index) {
    split.kept[seq] = {};
    if (!ts.empty()) order.push_back(seq);
    total += ts.size();
  }
  if (order.empty()) return split;

  Rng rng(seed);
  rng.shuffle(order);
  const double budget = ratio * static_cast<double>(total);

  auto smallest = std::min_element(order.begin(), order.end(), [&](const auto& a, const auto& b) {
    return index.at(a).size() < index.at(b).size();
  });
  if (static_cast<double>(index.at(*smallest).size()) > budget) {
    split.kept[*smallest] = sorted_copy(index.at(*smallest));
    split.warnings.push_back("label budget smaller than every sequence; kept smallest sequence '" +
                             *smallest + "'");
    return split;
  }

  std::size_t running = 0;
  for (const std::string& seq : order) {
    if (static_cast<double>(running) >= budget) break;
    split.kept[seq] = sorted_copy(index.at(seq));
    running += index.at(seq).size();
  }
  return split;
}

LabelSplit full_split(const LabelIndex& index) {
  require_nonempty(index);
  LabelSplit split;
  split.mode = SplitMode::full;
  split.ratio = 1.0;
  for (const auto& [seq, ts] : index) split.kept[seq] = sorted_copy(ts);
  return split;
}

std::string split_to_json(const LabelSplit& split) {
  nlohmann::json doc;
  doc["mode"] = to_string(split.mode);
  doc["ratio"] = split.ratio;
  doc["seed"] = split.seed;
  doc["kept"] = nlohmann::json::object();
  for (const auto& [seq, ts] : split.kept) doc["kept"][seq] = ts;
  return doc.dump();
}

LabelSplit split_from_json(const std::string& text) {
  try {
    const nlohmann::json doc = nlohmann::json::parse(text);
    LabelSplit split;
    split.mode = parse_split_mode(doc.at("mode").get<std::string>());
    split.ratio = doc.at("ratio").get<double>();
    split.seed = doc.at("seed").get<std::uint64_t>();
    for (const auto& [seq, ts] : doc.at("kept").items()) {
      split.kept[seq] = ts.get<std::vector<std::int64_t>>();
    }
    return split;
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("malformed split file: ") + e.what());
  }
}

}  // namespace leod
