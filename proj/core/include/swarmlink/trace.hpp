#pragma once

#include <cstdint>
#include <functional>
#include <istream>
#include <mutex>
#include <ostream>
#include <string_view>
#include <vector>

#include "swarmlink/middleware/bus.hpp"
#include "swarmlink/middleware/sim_network.hpp"
#include "swarmlink/text.hpp"

namespace swarmlink {

/// JSON-lines trace: one object per line, starting with "t_us" and "kind".
/// Kinds: telemetry, command, transition, membership, network, audit.
/// Thread-safe; lines are written whole.
class TraceWriter {
 public:
  /// `out` may be null: records are then only counted.
  explicit TraceWriter(std::ostream* out) : out_(out) {}

  /// Writes {"t_us", "kind", ...fields}. t_us never decreases within a
  /// writer: a record stamped earlier than its predecessor (possible when
  /// threads share a writer) carries the predecessor's time.
  void record(std::uint64_t t_us, std::string_view kind, const Json& fields);

  std::uint64_t records() const;
  void flush();

 private:
  mutable std::mutex mu_;
  std::ostream* out_;
  std::uint64_t records_ = 0;
  std::uint64_t last_t_us_ = 0;
};

using Clock = std::function<std::uint64_t()>;

/// Traces publish / deliver / retransmit / giveup / gap_skip events of `bus`
/// as "network" records stamped with `clock()`.
void trace_bus(mw::Bus& bus, TraceWriter& trace, Clock clock);

void trace_drop(TraceWriter& trace, std::uint64_t t_us, const mw::NetDrop& drop);

/// Reads a trace file. Throws InvalidArgument naming the offending line.
std::vector<Json> read_trace(std::istream& in);

}  // namespace swarmlink
