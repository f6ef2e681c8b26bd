#include "swarmlink/trace.hpp"

#include <algorithm>
#include <string>

namespace swarmlink {

void TraceWriter::record(std::uint64_t t_us, std::string_view kind, const Json& fields) {
  std::lock_guard lock(mu_);
  last_t_us_ = std::max(last_t_us_, t_us);
  Json line{{"t_us", last_t_us_}, {"kind", kind}};
  line.update(fields);
  const std::string text = line.dump();
  ++records_;
  if (out_) *out_ << text << '\n';
}

std::uint64_t TraceWriter::records() const {
  std::lock_guard lock(mu_);
  return records_;
}

void TraceWriter::flush() {
  std::lock_guard lock(mu_);
  if (out_) out_->flush();
}

void trace_bus(mw::Bus& bus, TraceWriter& trace, Clock clock) {
  const NodeId node = bus.self();
  mw::BusHooks hooks;
  hooks.on_publish = [&trace, clock, node](const mw::Envelope& e, const std::vector<NodeId>& destinations,
                                           const std::vector<NodeId>& awaiting) {
    Json f{{"event", "publish"},
           {"node", node},
           {"topic", e.topic.str()},
           {"publisher", e.publisher},
           {"seq", e.seq},
           {"reliable", e.qos.is_reliable()},
           {"destinations", destinations}};
    if (e.qos.is_reliable()) f["awaiting"] = awaiting;
    trace.record(clock(), "network", f);
  };
  hooks.on_deliver = [&trace, clock, node](const mw::Envelope& e, NodeId from, bool loopback, std::uint64_t arrival_us) {
    trace.record(clock(), "network",
                 Json{{"event", "deliver"},
                      {"node", node},
                      {"topic", e.topic.str()},
                      {"publisher", e.publisher},
                      {"seq", e.seq},
                      {"reliable", e.qos.is_reliable()},
                      {"from", from},
                      {"loopback", loopback},
                      {"sent_us", e.timestamp_us},
                      {"arrival_us", arrival_us}});
  };
  hooks.on_retransmit = [&trace, clock, node](const mw::Envelope& e, NodeId to, std::uint32_t attempt) {
    trace.record(clock(), "network",
                 Json{{"event", "retransmit"},
                      {"node", node},
                      {"topic", e.topic.str()},
                      {"seq", e.seq},
                      {"to", to},
                      {"attempt", attempt}});
  };
  hooks.on_give_up = [&trace, clock, node](const mw::TopicName& topic, std::uint64_t seq,
                                           const std::vector<NodeId>& unacked) {
    trace.record(clock(), "network",
                 Json{{"event", "giveup"}, {"node", node}, {"topic", topic.str()}, {"seq", seq}, {"unacked", unacked}});
  };
  hooks.on_gap_skip = [&trace, clock, node](const mw::TopicName& topic, NodeId publisher, std::uint64_t from_seq,
                                            std::uint64_t to_seq) {
    trace.record(clock(), "network",
                 Json{{"event", "gap_skip"},
                      {"node", node},
                      {"topic", topic.str()},
                      {"publisher", publisher},
                      {"from_seq", from_seq},
                      {"to_seq", to_seq}});
  };
  bus.set_hooks(std::move(hooks));
}

void trace_drop(TraceWriter& trace, std::uint64_t t_us, const mw::NetDrop& drop) {
  trace.record(t_us, "network",
               Json{{"event", "drop"},
                    {"from", drop.from},
                    {"to", drop.to},
                    {"topic", drop.header.topic.str()},
                    {"publisher", drop.header.publisher},
                    {"seq", drop.header.seq},
                    {"ack", drop.header.ack},
                    {"reason", mw::to_string(drop.reason)},
                    {"sent_us", drop.sent_us}});
}

std::vector<Json> read_trace(std::istream& in) {
  std::vector<Json> out;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      out.push_back(Json::parse(line));
    } catch (const nlohmann::json::exception& e) {
      throw InvalidArgument("trace line " + std::to_string(number) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace swarmlink
