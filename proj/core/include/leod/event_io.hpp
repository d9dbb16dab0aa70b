// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <string>

#include "leod/evrep.hpp"

namespace leod {

// EVB1 layout, little-endian:
//   header (16 bytes): "EVB1", u16 width, u16 height, u64 duration_us
//   record (20 bytes): u64 t_us, u16 x, u16 y, i8 p, 7 zero pad bytes
inline constexpr std::size_t kEvb1HeaderSize = 16;
inline constexpr std::size_t kEvb1RecordSize = 20;

void write_evb1(std::ostream& out, const EventStream& stream);
EventStream read_evb1(std::istream& in);

/// CSV with header `t_us,x,y,p`. The CSV carries no resolution or duration,
/// so the caller supplies them.
void write_events_csv(std::ostream& out, const EventStream& stream);
EventStream read_events_csv(std::istream& in, std::uint16_t width, std::uint16_t height,
                            std::int64_t duration_us);

/// Source of event streams. Dataset-specific decoders (Gen1, 1Mpx) plug in
/// by implementing this interface.
class EventSource {
 public:
  virtual ~EventSource() = default;
  virtual EventStream read() = 0;
};

class Evb1FileSource final : public EventSource {
 public:
  explicit Evb1FileSource(std::filesystem::path path) : path_(std::move(path)) {}
  EventStream read() override;

 private:
  std::filesystem::path path_;
};

class CsvFileSource final : public EventSource {
 public:
  CsvFileSource(std::filesystem::path path, std::uint16_t width, std::uint16_t height,
                std::int64_t duration_us)
      : path_(std::move(path)), width_(width), height_(height), duration_us_(duration_us) {}
  EventStream read() override;

 private:
  std::filesystem::path path_;
  std::uint16_t width_;
  std::uint16_t height_;
  std::int64_t duration_us_;
};

/// Picks a source by extension: ".evb1"/".bin" or ".csv". CSV sources need
/// explicit geometry; passing zeros makes them infer width/height/duration
/// from the data.
std::unique_ptr<EventSource> open_event_source(const std::filesystem::path& path,
                                               std::uint16_t width = 0,
                                               std::uint16_t height = 0,
                                               std::int64_t duration_us = 0);

}  // namespace leod
