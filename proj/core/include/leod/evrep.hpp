// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <cstdint>
#include <vector>

namespace leod {

struct Event {
  std::int64_t t_us = 0;
  std::uint16_t x = 0;
  std::uint16_t y = 0;
  std::int8_t p = 1;  // polarity, -1 or +1

  friend bool operator==(const Event&, const Event&) = default;
};

struct EventStream {
  std::vector<Event> events;  // non-decreasing t_us
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::int64_t duration_us = 0;  // every t_us < duration_us

  friend bool operator==(const EventStream&, const EventStream&) = default;
};

/// Checks resolution bounds, polarity values, time ordering and duration.
/// Throws Errc::invalid_input.
void validate_stream(const EventStream& stream);

/// Dense per-window event counts of shape (2 * bins, height, width).
/// Channel of an event = 2 * bin + (p == +1 ? 1 : 0).
struct Histogram {
  std::int64_t window_index = 0;
  std::int64_t window_us = 0;
  int bins = 0;
  std::uint32_t saturation = 0;  // 0 disables clamping
  std::uint16_t height = 0;
  std::uint16_t width = 0;
  bool partial = false;  // trailing window shorter than window_us
  std::vector<std::uint32_t> data;

  int channels() const { return 2 * bins; }
  std::size_t offset(int channel, int row, int col) const {
    return (static_cast<std::size_t>(channel) * height + static_cast<std::size_t>(row)) *
               width +
           static_cast<std::size_t>(col);
  }
  std::uint32_t at(int channel, int row, int col) const { return data[offset(channel, row, col)]; }

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

constexpr std::int64_t kDefaultWindowUs = 50'000;
constexpr int kDefaultBins = 5;
constexpr std::uint32_t kDefaultSaturation = 255;

/// One histogram per window [k*window_us, (k+1)*window_us). A trailing
/// partial window is emitted with `partial = true`.
std::vector<Histogram> build_histograms(const EventStream& stream,
                                        std::int64_t window_us = kDefaultWindowUs,
                                        int bins = kDefaultBins,
                                        std::uint32_t saturation = kDefaultSaturation);

/// Replays the stream backwards: t' = duration - 1 - t, order reversed, and
/// polarity negated when flip_polarity is set.
EventStream time_flip_stream(const EventStream& stream, bool flip_polarity = true);

/// Mirrors columns: x' = width - 1 - x.
EventStream hflip_stream(const EventStream& stream);

}  // namespace leod
