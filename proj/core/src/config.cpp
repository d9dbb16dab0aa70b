// SPDX-License-Identifier: Apache-2.0
#include "leod/config.hpp"

#include <openssl/evp.h>

#include <array>
#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <nlohmann/json.hpp>
#include <set>
#include <sstream>
#include <variant>

#include "leod/error.hpp"

namespace leod {

namespace {

// Minimal TOML: [table] / [a.b.c] headers, `key = value` with strings,
// booleans, integers, floats and single-line arrays of those; `#` comments.
using Scalar = std::variant<bool, std::int64_t, double, std::string>;
struct Value {
  Scalar scalar;
  std::vector<Scalar> array;
  bool is_array = false;
};
using Table = std::map<std::string, Value>;
using Document = std::map<std::string, Table>;

[[noreturn]] void config_error(std::size_t line, const std::string& what) {
  throw Error(Errc::invalid_config, "config line " + std::to_string(line) + ": " + what);
}

std::string trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return std::string(s.substr(b, e - b));
}

std::string strip_comment(const std::string& line) {
  bool in_string = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
    if (line[i] == '#' && !in_string) return line.substr(0, i);
  }
  return line;
}

Scalar parse_scalar(const std::string& text, std::size_t line) {
  if (text.empty()) config_error(line, "missing value");
  if (text.front() == '"') {
    if (text.size() < 2 || text.back() != '"') config_error(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < text.size(); ++i) {
      if (text[i] == '\\' && i + 2 < text.size()) {
        const char c = text[++i];
        out.push_back(c == 'n' ? '\n' : c == 't' ? '\t' : c);
      } else {
        out.push_back(text[i]);
      }
    }
    return out;
  }
  if (text == "true") return true;
  if (text == "false") return false;
  std::string digits;
  for (char c : text) {
    if (c != '_') digits.push_back(c);
  }
  const bool floating = digits.find_first_of(".eE") != std::string::npos;
  if (!floating) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec == std::errc{} && p == digits.data() + digits.size()) return v;
  } else {
    double v = 0.0;
    auto [p, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), v);
    if (ec == std::errc{} && p == digits.data() + digits.size()) return v;
  }
  config_error(line, "cannot parse value '" + text + "'");
}

Value parse_value(const std::string& text, std::size_t line) {
  Value v;
  if (!text.empty() && text.front() == '[') {
    if (text.back() != ']') config_error(line, "arrays must close on the same line");
    v.is_array = true;
    const std::string body = trim(std::string_view(text).substr(1, text.size() - 2));
    std::string item;
    bool in_string = false;
    for (char c : body + ",") {
      if (c == '"') in_string = !in_string;
      if (c == ',' && !in_string) {
        const std::string t = trim(item);
        if (!t.empty()) v.array.push_back(parse_scalar(t, line));
        item.clear();
      } else {
        item.push_back(c);
      }
    }
    return v;
  }
  v.scalar = parse_scalar(text, line);
  return v;
}

Document parse_document(const std::string& text) {
  Document doc;
  std::string table;
  doc[table];
  std::istringstream in(text);
  std::string raw;
  std::size_t line = 0;
  while (std::getline(in, raw)) {
    ++line;
    const std::string s = trim(strip_comment(raw));
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']' || s.size() < 3) config_error(line, "malformed table header");
      table = trim(std::string_view(s).substr(1, s.size() - 2));
      if (doc.contains(table) && !doc[table].empty()) config_error(line, "duplicate table [" + table + "]");
      doc[table];
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) config_error(line, "expected key = value");
    const std::string key = trim(std::string_view(s).substr(0, eq));
    if (key.empty()) config_error(line, "empty key");
    if (doc[table].contains(key)) config_error(line, "duplicate key '" + key + "'");
    doc[table][key] = parse_value(trim(std::string_view(s).substr(eq + 1)), line);
  }
  return doc;
}

double as_double(const Value& v, const std::string& name) {
  if (!v.is_array) {
    if (const auto* d = std::get_if<double>(&v.scalar)) return *d;
    if (const auto* i = std::get_if<std::int64_t>(&v.scalar)) return static_cast<double>(*i);
  }
  throw Error(Errc::invalid_config, "'" + name + "' must be a number");
}

std::int64_t as_int(const Value& v, const std::string& name) {
  if (!v.is_array) {
    if (const auto* i = std::get_if<std::int64_t>(&v.scalar)) return *i;
  }
  throw Error(Errc::invalid_config, "'" + name + "' must be an integer");
}

bool as_bool(const Value& v, const std::string& name) {
  if (!v.is_array) {
    if (const auto* b = std::get_if<bool>(&v.scalar)) return *b;
  }
  throw Error(Errc::invalid_config, "'" + name + "' must be a boolean");
}

std::string as_string(const Value& v, const std::string& name) {
  if (!v.is_array) {
    if (const auto* s = std::get_if<std::string>(&v.scalar)) return *s;
  }
  throw Error(Errc::invalid_config, "'" + name + "' must be a string");
}

SoftRule parse_soft_rule(const std::string& s) {
  if (s == "and") return SoftRule::all_below;
  if (s == "or") return SoftRule::any_below;
  throw Error(Errc::invalid_config, "soft.rule must be \"and\" or \"or\"");
}

InpaintRule parse_inpaint_rule(const std::string& s) {
  if (s == "per_direction") return InpaintRule::per_direction;
  if (s == "bidirectional") return InpaintRule::bidirectional;
  if (s == "none") return InpaintRule::none;
  throw Error(Errc::invalid_config, "tracker.inpaint_rule must be per_direction, bidirectional or none");
}

AssignStrategy parse_strategy(const std::string& s) {
  if (s == "dynamic_k") return AssignStrategy::dynamic_k;
  if (s == "center_topk") return AssignStrategy::center_topk;
  throw Error(Errc::invalid_config, "assign.strategy must be dynamic_k or center_topk");
}

using Setter = std::function<void(PipelineConfig&, const Value&, const std::string&)>;

const std::map<std::string, std::map<std::string, Setter>>& setters() {
  static const std::map<std::string, std::map<std::string, Setter>> table = {
      {"tta",
       {{"tau_nms", [](auto& c, const Value& v, const auto& n) { c.tta_tau_nms = as_double(v, n); }},
        {"use_combined", [](auto& c, const Value& v, const auto& n) { c.tta_use_combined = as_bool(v, n); }},
        {"flip_polarity", [](auto& c, const Value& v, const auto& n) { c.tta_flip_polarity = as_bool(v, n); }}}},
      {"nms",
       {{"class_aware", [](auto& c, const Value& v, const auto& n) { c.nms_class_aware = as_bool(v, n); }}}},
      {"tracker",
       {{"tau_iou", [](auto& c, const Value& v, const auto& n) { c.tracker.tau_iou = as_double(v, n); }},
        {"tau_del", [](auto& c, const Value& v, const auto& n) { c.tracker.tau_del = as_double(v, n); }},
        {"decay", [](auto& c, const Value& v, const auto& n) { c.tracker.decay = as_double(v, n); }},
        {"init_q", [](auto& c, const Value& v, const auto& n) { c.tracker.init_q = as_double(v, n); }},
        {"inpaint_rule", [](auto& c, const Value& v, const auto& n) { c.inpaint_rule = parse_inpaint_rule(as_string(v, n)); }}}},
      {"thresholds",
       {{"profile", [](auto& c, const Value& v, const auto& n) { c.profile = as_string(v, n); }},
        {"tau_hard_car", [](auto& c, const Value& v, const auto& n) { c.tau_hard_car = as_double(v, n); }},
        {"t_trk", [](auto& c, const Value& v, const auto& n) { c.t_trk = static_cast<int>(as_int(v, n)); }}}},
      {"soft",
       {{"rule", [](auto& c, const Value& v, const auto& n) { c.soft_rule = parse_soft_rule(as_string(v, n)); }}}},
      {"assign",
       {{"strategy", [](auto& c, const Value& v, const auto& n) { c.assign.strategy = parse_strategy(as_string(v, n)); }},
        {"center_radius", [](auto& c, const Value& v, const auto& n) { c.assign.center_radius = as_double(v, n); }},
        {"topk", [](auto& c, const Value& v, const auto& n) { c.assign.topk = static_cast<int>(as_int(v, n)); }},
        {"strides",
         [](auto& c, const Value& v, const auto& n) {
           if (!v.is_array) throw Error(Errc::invalid_config, "'" + n + "' must be an array");
           c.strides.clear();
           for (const Scalar& s : v.array) {
             const auto* i = std::get_if<std::int64_t>(&s);
             if (i == nullptr) throw Error(Errc::invalid_config, "'" + n + "' must hold integers");
             c.strides.push_back(static_cast<int>(*i));
           }
         }}}},
      {"eval",
       {{"profile",
         [](auto& c, const Value& v, const auto& n) {
           c.eval_profile = as_string(v, n);
           const EvalFilter f = eval_filter_profile(c.eval_profile);
           c.min_diagonal = f.min_diagonal;
           c.min_side = f.min_side;
         }},
        {"min_diagonal", [](auto& c, const Value& v, const auto& n) { c.min_diagonal = as_double(v, n); }},
        {"min_side", [](auto& c, const Value& v, const auto& n) { c.min_side = as_double(v, n); }},
        {"iou_set",
         [](auto& c, const Value& v, const auto& n) {
           if (!v.is_array && std::holds_alternative<std::string>(v.scalar)) {
             c.iou_set = std::get<std::string>(v.scalar);
           } else {
             std::ostringstream os;
             os << as_double(v, n);
             c.iou_set = os.str();
           }
           iou_thresholds_from(c);  // reject bad values at parse time
         }},
        {"tau_match", [](auto& c, const Value& v, const auto& n) { c.tau_match = as_double(v, n); }}}},
      {"protocol",
       {{"mode", [](auto& c, const Value& v, const auto& n) { c.split_mode = parse_split_mode(as_string(v, n)); }},
        {"ratio", [](auto& c, const Value& v, const auto& n) { c.split_ratio = as_double(v, n); }},
        {"seed", [](auto& c, const Value& v, const auto& n) { c.split_seed = static_cast<std::uint64_t>(as_int(v, n)); }}}},
  };
  return table;
}

}  // namespace

PipelineConfig parse_config(const std::string& toml_text) {
  const Document doc = parse_document(toml_text);
  PipelineConfig cfg;
  // eval.profile resets the filter sizes, so apply it before explicit sizes.
  std::vector<std::pair<std::string, std::string>> order;
  for (const auto& [table, keys] : doc) {
    for (const auto& [key, value] : keys) {
      if (table == "eval" && key == "profile") order.insert(order.begin(), {table, key});
      else order.emplace_back(table, key);
    }
  }
  static const std::string kOverride = "thresholds.override.";
  for (const auto& [table, key] : order) {
    const Value& value = doc.at(table).at(key);
    const std::string name = table.empty() ? key : table + "." + key;
    if (table.starts_with(kOverride)) {
      const std::string cls = table.substr(kOverride.size());
      if (key == "hard") cfg.overrides[cls].hard = as_double(value, name);
      else if (key == "soft") cfg.overrides[cls].soft = as_double(value, name);
      else throw Error(Errc::invalid_config, "unknown config key '" + name + "'");
      continue;
    }
    const auto section = setters().find(table);
    if (section == setters().end()) {
      throw Error(Errc::invalid_config, "unknown config key '" + name + "'");
    }
    const auto setter = section->second.find(key);
    if (setter == section->second.end()) {
      throw Error(Errc::invalid_config, "unknown config key '" + name + "'");
    }
    setter->second(cfg, value, name);
  }
  for (const auto& [table, keys] : doc) {
    if (!table.empty() && keys.empty() && !setters().contains(table) &&
        !table.starts_with(kOverride)) {
      throw Error(Errc::invalid_config, "unknown config table [" + table + "]");
    }
  }
  return cfg;
}

PipelineConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::io_error, "cannot open config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::vector<std::string> profile_classes(const std::string& profile) {
  if (profile == "gen1") return {"car", "pedestrian"};
  if (profile == "1mpx") return {"car", "pedestrian", "two-wheeler"};
  throw Error(Errc::invalid_config, "unknown dataset profile '" + profile + "'");
}

ThresholdConfig thresholds_from(const PipelineConfig& cfg) {
  const auto classes = profile_classes(cfg.profile);
  ThresholdConfig out = derive_thresholds(cfg.tau_hard_car, classes, cfg.overrides, cfg.t_trk);
  out.soft_rule = cfg.soft_rule;
  return out;
}

NmsOptions nms_options_from(const PipelineConfig& cfg) {
  return {cfg.tta_tau_nms, cfg.nms_class_aware};
}

ForgeOptions forge_options_from(const PipelineConfig& cfg) {
  ForgeOptions out;
  out.tracker = cfg.tracker;
  out.inpaint_rule = cfg.inpaint_rule;
  out.dedup = nms_options_from(cfg);
  return out;
}

EvalFilter eval_filter_from(const PipelineConfig& cfg) { return {cfg.min_diagonal, cfg.min_side}; }

std::vector<double> iou_thresholds_from(const PipelineConfig& cfg) {
  if (cfg.iou_set == "coco") return coco_iou_thresholds();
  double v = 0.0;
  auto [p, ec] = std::from_chars(cfg.iou_set.data(), cfg.iou_set.data() + cfg.iou_set.size(), v);
  if (ec != std::errc{} || p != cfg.iou_set.data() + cfg.iou_set.size() || !(v > 0.0 && v < 1.0)) {
    throw Error(Errc::invalid_config, "eval.iou_set must be \"coco\" or a threshold in (0,1)");
  }
  return {v};
}

std::string to_string(SoftRule rule) { return rule == SoftRule::all_below ? "and" : "or"; }

std::string to_string(InpaintRule rule) {
  switch (rule) {
    case InpaintRule::per_direction: return "per_direction";
    case InpaintRule::bidirectional: return "bidirectional";
    case InpaintRule::none: return "none";
  }
  return "per_direction";
}

std::string to_string(AssignStrategy strategy) {
  return strategy == AssignStrategy::dynamic_k ? "dynamic_k" : "center_topk";
}

std::string canonical_config_json(const PipelineConfig& cfg) {
  nlohmann::json j;
  j["tta"] = {{"tau_nms", cfg.tta_tau_nms},
              {"use_combined", cfg.tta_use_combined},
              {"flip_polarity", cfg.tta_flip_polarity}};
  j["nms"] = {{"class_aware", cfg.nms_class_aware}};
  j["tracker"] = {{"tau_iou", cfg.tracker.tau_iou},
                  {"tau_del", cfg.tracker.tau_del},
                  {"decay", cfg.tracker.decay},
                  {"init_q", cfg.tracker.init_q},
                  {"inpaint_rule", to_string(cfg.inpaint_rule)}};
  nlohmann::json overrides = nlohmann::json::object();
  for (const auto& [cls, ov] : cfg.overrides) {
    nlohmann::json o = nlohmann::json::object();
    if (ov.hard) o["hard"] = *ov.hard;
    if (ov.soft) o["soft"] = *ov.soft;
    overrides[cls] = o;
  }
  j["thresholds"] = {{"profile", cfg.profile},
                     {"tau_hard_car", cfg.tau_hard_car},
                     {"t_trk", cfg.t_trk},
                     {"override", overrides}};
  j["soft"] = {{"rule", to_string(cfg.soft_rule)}};
  j["assign"] = {{"strategy", to_string(cfg.assign.strategy)},
                 {"center_radius", cfg.assign.center_radius},
                 {"topk", cfg.assign.topk},
                 {"strides", cfg.strides}};
  j["eval"] = {{"profile", cfg.eval_profile},
               {"min_diagonal", cfg.min_diagonal},
               {"min_side", cfg.min_side},
               {"iou_set", cfg.iou_set},
               {"tau_match", cfg.tau_match}};
  j["protocol"] = {{"mode", to_string(cfg.split_mode)},
                   {"ratio", cfg.split_ratio},
                   {"seed", cfg.split_seed}};
  return j.dump();
}

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md.data(), &len, EVP_sha256(), nullptr) != 1) {
    throw Error(Errc::io_error, "SHA-256 digest failed");
  }
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out.push_back(kHex[md[i] >> 4]);
    out.push_back(kHex[md[i] & 0xF]);
  }
  return out;
}

std::string config_digest(const PipelineConfig& cfg) {
  return sha256_hex(canonical_config_json(cfg));
}

}  // namespace leod
