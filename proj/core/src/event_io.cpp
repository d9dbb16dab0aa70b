// SPDX-License-Identifier: Apache-2.0
#include "leod/event_io.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <string>

#include "leod/error.hpp"

namespace leod {

namespace {

template <typename T>
void put_le(std::ostream& out, T value) {
  std::array<char, sizeof(T)> bytes{};
  auto u = static_cast<std::make_unsigned_t<T>>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    bytes[i] = static_cast<char>((u >> (8 * i)) & 0xFF);
  }
  out.write(bytes.data(), bytes.size());
}

template <typename T>
T get_le(const unsigned char* p) {
  std::make_unsigned_t<T> u = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    u |= static_cast<std::make_unsigned_t<T>>(p[i]) << (8 * i);
  }
  return static_cast<T>(u);
}

template <typename T>
T parse_field(std::string_view text, std::size_t line) {
  T value{};
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc{} || ptr != text.data() + text.size()) {
    throw Error(Errc::parse_error, "bad CSV field '" + std::string(text) + "' on line " +
                                       std::to_string(line));
  }
  return value;
}

}  // namespace

void write_evb1(std::ostream& out, const EventStream& stream) {
  out.write("EVB1", 4);
  put_le<std::uint16_t>(out, stream.width);
  put_le<std::uint16_t>(out, stream.height);
  put_le<std::uint64_t>(out, static_cast<std::uint64_t>(stream.duration_us));
  static constexpr std::array<char, 7> pad{};
  for (const Event& e : stream.events) {
    put_le<std::uint64_t>(out, static_cast<std::uint64_t>(e.t_us));
    put_le<std::uint16_t>(out, e.x);
    put_le<std::uint16_t>(out, e.y);
    put_le<std::int8_t>(out, e.p);
    out.write(pad.data(), pad.size());
  }
  if (!out) throw Error(Errc::io_error, "failed writing EVB1 stream");
}

EventStream read_evb1(std::istream& in) {
  std::array<unsigned char, kEvb1HeaderSize> header{};
  in.read(reinterpret_cast<char*>(header.data()), header.size());
  if (in.gcount() != static_cast<std::streamsize>(header.size()) ||
      !std::equal(header.begin(), header.begin() + 4, "EVB1")) {
    throw Error(Errc::parse_error, "missing EVB1 header");
  }
  EventStream stream;
  stream.width = get_le<std::uint16_t>(header.data() + 4);
  stream.height = get_le<std::uint16_t>(header.data() + 6);
  stream.duration_us = static_cast<std::int64_t>(get_le<std::uint64_t>(header.data() + 8));

  std::array<unsigned char, kEvb1RecordSize> rec{};
  while (true) {
    in.read(reinterpret_cast<char*>(rec.data()), rec.size());
    const auto got = in.gcount();
    if (got == 0) break;
    if (got != static_cast<std::streamsize>(rec.size())) {
      throw Error(Errc::parse_error, "truncated EVB1 record");
    }
    Event e;
    e.t_us = static_cast<std::int64_t>(get_le<std::uint64_t>(rec.data()));
    e.x = get_le<std::uint16_t>(rec.data() + 8);
    e.y = get_le<std::uint16_t>(rec.data() + 10);
    e.p = get_le<std::int8_t>(rec.data() + 12);
    stream.events.push_back(e);
  }
  validate_stream(stream);
  return stream;
}

void write_events_csv(std::ostream& out, const EventStream& stream) {
  out << "t_us,x,y,p\n";
  for (const Event& e : stream.events) {
    out << e.t_us << ',' << e.x << ',' << e.y << ',' << static_cast<int>(e.p) << '\n';
  }
  if (!out) throw Error(Errc::io_error, "failed writing CSV events");
}

EventStream read_events_csv(std::istream& in, std::uint16_t width, std::uint16_t height,
                            std::int64_t duration_us) {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::parse_error, "empty CSV event file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != "t_us,x,y,p") throw Error(Errc::parse_error, "CSV header must be t_us,x,y,p");

  EventStream stream;
  std::size_t line_no = 1;
  std::int64_t max_t = -1;
  int max_x = -1;
  int max_y = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::array<std::string_view, 4> fields;
    std::string_view rest = line;
    for (std::size_t i = 0; i < 4; ++i) {
      const auto comma = rest.find(',');
      if ((comma == std::string_view::npos) != (i == 3)) {
        throw Error(Errc::parse_error, "CSV line " + std::to_string(line_no) + " needs 4 fields");
      }
      fields[i] = rest.substr(0, comma);
      if (comma != std::string_view::npos) rest.remove_prefix(comma + 1);
    }
    Event e;
    e.t_us = parse_field<std::int64_t>(fields[0], line_no);
    e.x = parse_field<std::uint16_t>(fields[1], line_no);
    e.y = parse_field<std::uint16_t>(fields[2], line_no);
    e.p = static_cast<std::int8_t>(parse_field<int>(fields[3], line_no));
    max_t = std::max(max_t, e.t_us);
    max_x = std::max<int>(max_x, e.x);
    max_y = std::max<int>(max_y, e.y);
    stream.events.push_back(e);
  }
  stream.width = width != 0 ? width : static_cast<std::uint16_t>(max_x + 1);
  stream.height = height != 0 ? height : static_cast<std::uint16_t>(max_y + 1);
  stream.duration_us = duration_us != 0 ? duration_us : max_t + 1;
  validate_stream(stream);
  return stream;
}

EventStream Evb1FileSource::read() {
  std::ifstream in(path_, std::ios::binary);
  if (!in) throw Error(Errc::io_error, "cannot open " + path_.string());
  return read_evb1(in);
}

EventStream CsvFileSource::read() {
  std::ifstream in(path_);
  if (!in) throw Error(Errc::io_error, "cannot open " + path_.string());
  return read_events_csv(in, width_, height_, duration_us_);
}

std::unique_ptr<EventSource> open_event_source(const std::filesystem::path& path,
                                               std::uint16_t width, std::uint16_t height,
                                               std::int64_t duration_us) {
  const auto ext = path.extension().string();
  if (ext == ".csv") return std::make_unique<CsvFileSource>(path, width, height, duration_us);
  if (ext == ".evb1" || ext == ".bin") return std::make_unique<Evb1FileSource>(path);
  throw Error(Errc::invalid_input, "unknown event file extension '" + ext + "'");
}

}  // namespace leod
