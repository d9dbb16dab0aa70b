// SPDX-License-Identifier: Apache-2.0
#include "leod/histogram_io.hpp"

#include <array>
#include <fstream>
#include <istream>
#include <nlohmann/json.hpp>
#include <ostream>
#include <regex>
#include <sstream>

#include "leod/error.hpp"

namespace leod {

namespace {

constexpr char kMagic[] = "\x93NUMPY";

void check_uniform(std::span<const Histogram> hs) {
  if (hs.empty()) throw Error(Errc::empty_result, "no histograms to write");
  for (const Histogram& h : hs) {
    if (h.bins != hs[0].bins || h.height != hs[0].height || h.width != hs[0].width ||
        h.window_us != hs[0].window_us || h.saturation != hs[0].saturation) {
      throw Error(Errc::invalid_input, "histograms differ in shape or parameters");
    }
    if (h.data.size() != static_cast<std::size_t>(h.channels()) * h.height * h.width) {
      throw Error(Errc::invalid_input, "histogram data size does not match its shape");
    }
  }
}

}  // namespace

void write_histograms_npy(std::ostream& out, std::span<const Histogram> histograms) {
  check_uniform(histograms);
  const Histogram& first = histograms.front();
  std::ostringstream dict;
  dict << "{'descr': '<u4', 'fortran_order': False, 'shape': (" << histograms.size() << ", "
       << first.channels() << ", " << first.height << ", " << first.width << "), }";
  std::string header = dict.str();
  const std::size_t unpadded = 6 + 2 + 2 + header.size() + 1;
  header.append((64 - unpadded % 64) % 64, ' ');
  header.push_back('\n');
  out.write(kMagic, 6);
  out.put('\x01');
  out.put('\x00');
  const auto len = static_cast<std::uint16_t>(header.size());
  out.put(static_cast<char>(len & 0xFF));
  out.put(static_cast<char>(len >> 8));
  out.write(header.data(), static_cast<std::streamsize>(header.size()));
  for (const Histogram& h : histograms) {
    for (std::uint32_t v : h.data) {
      const std::array<char, 4> b{static_cast<char>(v & 0xFF), static_cast<char>((v >> 8) & 0xFF),
                                  static_cast<char>((v >> 16) & 0xFF),
                                  static_cast<char>((v >> 24) & 0xFF)};
      out.write(b.data(), 4);
    }
  }
  if (!out) throw Error(Errc::io_error, "failed writing .npy data");
}

std::string histogram_sidecar_json(std::span<const Histogram> histograms) {
  check_uniform(histograms);
  nlohmann::json windows = nlohmann::json::array();
  for (const Histogram& h : histograms) {
    windows.push_back({{"index", h.window_index}, {"partial", h.partial}});
  }
  const Histogram& first = histograms.front();
  return nlohmann::json{{"window_us", first.window_us},
                        {"bins", first.bins},
                        {"saturation", first.saturation},
                        {"layout", "bin-major, polarity inner: channel = 2*bin + (p == +1)"},
                        {"windows", windows}}
      .dump(1);
}

std::vector<Histogram> read_histograms(std::istream& npy, const std::string& sidecar_json) {
  std::array<char, 10> pre{};
  npy.read(pre.data(), 10);
  if (!npy || std::string(pre.data(), 6) != std::string(kMagic, 6) || pre[6] != 1) {
    throw Error(Errc::parse_error, "not a version-1 .npy file");
  }
  const std::size_t len = static_cast<unsigned char>(pre[8]) |
                          (static_cast<std::size_t>(static_cast<unsigned char>(pre[9])) << 8);
  std::string header(len, '\0');
  npy.read(header.data(), static_cast<std::streamsize>(len));
  static const std::regex kShape(
      R"('descr': '<u4'.*'shape': \((\d+), (\d+), (\d+), (\d+)\))");
  std::smatch m;
  if (!npy || !std::regex_search(header, m, kShape)) {
    throw Error(Errc::parse_error, ".npy header is not a '<u4' 4-d array");
  }
  const std::size_t k = std::stoul(m[1]);
  const int channels = std::stoi(m[2]);
  const int height = std::stoi(m[3]);
  const int width = std::stoi(m[4]);

  nlohmann::json side;
  try {
    side = nlohmann::json::parse(sidecar_json);
  } catch (const nlohmann::json::exception& e) {
    throw Error(Errc::parse_error, std::string("histogram sidecar: ") + e.what());
  }
  const auto& windows = side.at("windows");
  if (windows.size() != k || side.at("bins").get<int>() * 2 != channels) {
    throw Error(Errc::invalid_input, "sidecar does not match the .npy shape");
  }
  std::vector<Histogram> out(k);
  const std::size_t count = static_cast<std::size_t>(channels) * height * width;
  for (std::size_t i = 0; i < k; ++i) {
    Histogram& h = out[i];
    h.window_index = windows[i].at("index").get<std::int64_t>();
    h.partial = windows[i].at("partial").get<bool>();
    h.window_us = side.at("window_us").get<std::int64_t>();
    h.bins = side.at("bins").get<int>();
    h.saturation = side.at("saturation").get<std::uint32_t>();
    h.height = static_cast<std::uint16_t>(height);
    h.width = static_cast<std::uint16_t>(width);
    h.data.resize(count);
    for (std::uint32_t& v : h.data) {
      std::array<unsigned char, 4> b{};
      npy.read(reinterpret_cast<char*>(b.data()), 4);
      v = b[0] | (b[1] << 8) | (b[2] << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
    }
    if (!npy) throw Error(Errc::parse_error, ".npy data truncated");
  }
  return out;
}

void save_histograms(const std::filesystem::path& stem, std::span<const Histogram> histograms) {
  auto npy_path = stem;
  npy_path += ".npy";
  auto json_path = stem;
  json_path += ".json";
  std::ofstream npy(npy_path, std::ios::binary);
  std::ofstream side(json_path);
  if (!npy || !side) throw Error(Errc::io_error, "cannot create " + npy_path.string());
  write_histograms_npy(npy, histograms);
  side << histogram_sidecar_json(histograms) << '\n';
}

std::vector<Histogram> load_histograms(const std::filesystem::path& stem) {
  auto npy_path = stem;
  npy_path += ".npy";
  auto json_path = stem;
  json_path += ".json";
  std::ifstream npy(npy_path, std::ios::binary);
  std::ifstream side(json_path);
  if (!npy || !side) throw Error(Errc::io_error, "cannot open " + npy_path.string());
  std::ostringstream ss;
  ss << side.rdbuf();
  return read_histograms(npy, ss.str());
}

}  // namespace leod
