// SPDX-License-Identifier: Apache-2.0
#include "leod/evrep.hpp"

#include <algorithm>
#include <string>

#include "leod/error.hpp"

namespace leod {

void validate_stream(const EventStream& stream) {
  std::int64_t prev = 0;
  for (std::size_t i = 0; i < stream.events.size(); ++i) {
    const Event& e = stream.events[i];
    if (e.x >= stream.width || e.y >= stream.height) {
      throw Error(Errc::invalid_input, "event " + std::to_string(i) + " outside sensor");
    }
    if (e.p != 1 && e.p != -1) {
      throw Error(Errc::invalid_input, "event " + std::to_string(i) + " has polarity not in {-1,+1}");
    }
    if (e.t_us < 0 || e.t_us >= stream.duration_us) {
      throw Error(Errc::invalid_input, "event " + std::to_string(i) + " outside [0, duration)");
    }
    if (i > 0 && e.t_us < prev) {
      throw Error(Errc::invalid_input, "event stream not sorted by time at " + std::to_string(i));
    }
    prev = e.t_us;
  }
}

std::vector<Histogram> build_histograms(const EventStream& stream, std::int64_t window_us,
                                        int bins, std::uint32_t saturation) {
  if (window_us <= 0 || bins < 1 || window_us % bins != 0) {
    throw Error(Errc::invalid_config, "window_us must be positive and divisible by bins");
  }
  validate_stream(stream);

  const std::int64_t full = stream.duration_us / window_us;
  const bool has_partial = stream.duration_us % window_us != 0;
  const std::int64_t count = full + (has_partial ? 1 : 0);
  const std::int64_t bin_us = window_us / bins;

  std::vector<Histogram> out(static_cast<std::size_t>(count));
  for (std::int64_t k = 0; k < count; ++k) {
    Histogram& h = out[static_cast<std::size_t>(k)];
    h.window_index = k;
    h.window_us = window_us;
    h.bins = bins;
    h.saturation = saturation;
    h.height = stream.height;
    h.width = stream.width;
    h.partial = has_partial && k == full;
    h.data.assign(static_cast<std::size_t>(h.channels()) * stream.height * stream.width, 0);
  }

  for (const Event& e : stream.events) {
    const std::int64_t k = e.t_us / window_us;
    const int bin = static_cast<int>((e.t_us - k * window_us) / bin_us);
    const int channel = 2 * bin + (e.p == 1 ? 1 : 0);
    Histogram& h = out[static_cast<std::size_t>(k)];
    std::uint32_t& cell = h.data[h.offset(channel, e.y, e.x)];
    if (saturation == 0 || cell < saturation) ++cell;
  }
  return out;
}

EventStream time_flip_stream(const EventStream& stream, bool flip_polarity) {
  EventStream out;
  out.width = stream.width;
  out.height = stream.height;
  out.duration_us = stream.duration_us;
  out.events.reserve(stream.events.size());
  for (auto it = stream.events.rbegin(); it != stream.events.rend(); ++it) {
    Event e = *it;
    e.t_us = stream.duration_us - 1 - e.t_us;
    if (flip_polarity) e.p = static_cast<std::int8_t>(-e.p);
    out.events.push_back(e);
  }
  return out;
}

EventStream hflip_stream(const EventStream& stream) {
  EventStream out = stream;
  for (Event& e : out.events) {
    e.x = static_cast<std::uint16_t>(stream.width - 1 - e.x);
  }
  return out;
}

}  // namespace leod
