#include "swarmlink/middleware/bus.hpp"

#include <algorithm>

#include "swarmlink/errors.hpp"
#include "swarmlink/middleware/wire.hpp"

namespace swarmlink::mw {

namespace {
constexpr std::size_t kMaxHeldPerStream = 1024;
}

// --- Subscription --------------------------------------------------------

std::optional<Envelope> Subscription::take() {
  std::lock_guard lock(mu_);
  if (queue_.empty()) return std::nullopt;
  Envelope e = std::move(queue_.front());
  queue_.pop_front();
  return e;
}

std::vector<Envelope> Subscription::drain() {
  std::lock_guard lock(mu_);
  std::vector<Envelope> out(std::make_move_iterator(queue_.begin()), std::make_move_iterator(queue_.end()));
  queue_.clear();
  return out;
}

std::size_t Subscription::size() const {
  std::lock_guard lock(mu_);
  return queue_.size();
}

void Subscription::push(const Envelope& e) {
  std::lock_guard lock(mu_);
  queue_.push_back(e);
  if (!qos_.is_reliable()) {
    while (queue_.size() > qos_.history_depth) queue_.pop_front();
  }
}

// --- Bus -----------------------------------------------------------------

Bus::Bus(Transport& transport, BusConfig config) : transport_(&transport), config_(config) {}

SubscriptionHandle Bus::subscribe(const TopicName& topic, QosProfile qos) {
  if (!qos.valid()) throw InvalidArgument("history_depth out of range");
  auto sub = std::make_shared<Subscription>(topic, qos);
  std::lock_guard lock(mu_);
  subscriptions_[topic].push_back(sub);
  transport_->announce(topic, qos);
  return sub;
}

void Bus::set_hooks(BusHooks hooks) {
  std::lock_guard lock(mu_);
  hooks_ = std::move(hooks);
}

BusStats Bus::stats() const {
  std::lock_guard lock(mu_);
  return stats_;
}

std::uint64_t Bus::next_seq(const TopicName& topic) const {
  std::lock_guard lock(mu_);
  auto it = writers_.find(topic);
  return it == writers_.end() ? 1 : it->second.last_seq + 1;
}

std::size_t Bus::retained(const TopicName& topic) const {
  std::lock_guard lock(mu_);
  auto it = writers_.find(topic);
  return it == writers_.end() ? 0 : it->second.retained.size();
}

void Bus::publish(const Envelope& envelope) {
  if (envelope.ack) throw ProtocolViolation("applications cannot publish ack frames");
  if (envelope.publisher != self()) {
    throw ProtocolViolation("envelope publisher " + std::to_string(envelope.publisher) + " is not this node (" +
                            std::to_string(self()) + ")");
  }
  auto frame = encode_frame(envelope);  // validates size, topic and qos

  std::lock_guard lock(mu_);
  auto& writer = writers_[envelope.topic];
  if (envelope.seq != writer.last_seq + 1) {
    throw ProtocolViolation("seq " + std::to_string(envelope.seq) + " on '" + envelope.topic.str() +
                            "' does not follow " + std::to_string(writer.last_seq));
  }

  std::vector<NodeId> awaiting;
  if (envelope.qos.is_reliable()) {
    awaiting = transport_->reliable_readers(envelope.topic);
    if (!awaiting.empty() && writer.retained.size() >= envelope.qos.history_depth) {
      throw BackPressure("retransmit buffer for '" + envelope.topic.str() + "' holds " +
                         std::to_string(writer.retained.size()) + " unacked messages");
    }
  }

  writer.last_seq = envelope.seq;
  ++stats_.published;
  const auto destinations = transport_->destinations(envelope.topic);
  if (hooks_.on_publish) hooks_.on_publish(envelope, destinations, awaiting);

  auto local = subscriptions_.find(envelope.topic);
  if (local != subscriptions_.end() && !local->second.empty()) surface(envelope, self(), true, envelope.timestamp_us);

  for (NodeId to : destinations) transport_->send(to, frame, envelope.timestamp_us);

  if (!awaiting.empty()) {
    Pending p;
    p.seq = envelope.seq;
    p.frame = std::move(frame);
    p.envelope = envelope;
    p.awaiting = std::move(awaiting);
    p.next_retransmit_us = envelope.timestamp_us + config_.retransmit_period_us;
    writer.retained.push_back(std::move(p));
  }
}

void Bus::poll(std::uint64_t now_us) {
  auto frames = transport_->receive();
  std::lock_guard lock(mu_);
  for (const auto& f : frames) handle_frame(f, now_us);
  skip_stale_gaps(now_us);
  retransmit_due(now_us);
}

void Bus::handle_frame(const InboundFrame& frame, std::uint64_t now_us) {
  Envelope e;
  try {
    e = decode_frame(frame.bytes);
  } catch (const DecodeError&) {
    ++stats_.decode_errors;
    return;
  }
  if (e.ack) {
    handle_ack(e);
  } else {
    // Transports without their own clock report 0; the poll time stands in.
    handle_data(e, frame.from, frame.arrival_us != 0 ? frame.arrival_us : now_us, now_us);
  }
}

void Bus::handle_ack(const Envelope& ack) {
  auto it = writers_.find(ack.topic);
  if (it == writers_.end()) return;
  const std::uint64_t seq = acked_seq(ack);
  auto& retained = it->second.retained;
  auto p = std::find_if(retained.begin(), retained.end(), [&](const Pending& x) { return x.seq == seq; });
  if (p == retained.end()) return;
  std::erase(p->awaiting, ack.publisher);
  if (p->awaiting.empty()) retained.erase(p);
}

void Bus::handle_data(const Envelope& data, NodeId from, std::uint64_t arrival_us, std::uint64_t now_us) {
  auto subs = subscriptions_.find(data.topic);
  if (subs == subscriptions_.end() || subs->second.empty()) return;

  const bool reliable_reader = std::any_of(subs->second.begin(), subs->second.end(),
                                           [](const SubscriptionHandle& s) { return s->qos().is_reliable(); });
  auto& stream = readers_[{data.publisher, data.topic}];

  if (!(data.qos.is_reliable() && reliable_reader)) {
    if (data.seq <= stream.watermark) {
      ++stats_.duplicates;
      return;
    }
    stream.watermark = data.seq;
    surface(data, from, false, arrival_us);
    return;
  }

  // Acks go out for duplicates too: the earlier ack may have been lost.
  transport_->send(from, encode_frame(make_ack(data, self(), now_us)), now_us);
  ++stats_.acks_sent;

  if (data.seq < stream.expected || stream.held.contains(data.seq)) {
    ++stats_.duplicates;
    return;
  }
  if (data.seq == stream.expected) {
    surface(data, from, false, arrival_us);
    ++stream.expected;
    flush_in_order(stream, from);
    return;
  }
  if (stream.held.empty()) stream.gap_since_us = now_us;
  stream.held.emplace(data.seq, std::pair{data, arrival_us});
  if (stream.held.size() > kMaxHeldPerStream) {
    stream.expected = stream.held.begin()->first;
    flush_in_order(stream, from);
  }
}

void Bus::flush_in_order(ReaderStream& stream, NodeId from) {
  while (!stream.held.empty() && stream.held.begin()->first == stream.expected) {
    const auto& [held, arrival] = stream.held.begin()->second;
    surface(held, from, false, arrival);
    stream.held.erase(stream.held.begin());
    ++stream.expected;
  }
}

void Bus::skip_stale_gaps(std::uint64_t now_us) {
  for (auto& [key, stream] : readers_) {
    if (stream.held.empty() || now_us - stream.gap_since_us <= config_.gap_timeout_us) continue;
    const std::uint64_t from_seq = stream.expected;
    stream.expected = stream.held.begin()->first;
    if (hooks_.on_gap_skip) hooks_.on_gap_skip(key.second, key.first, from_seq, stream.expected - 1);
    flush_in_order(stream, key.first);
    if (!stream.held.empty()) stream.gap_since_us = now_us;
  }
}

void Bus::retransmit_due(std::uint64_t now_us) {
  for (auto& [topic, writer] : writers_) {
    auto& retained = writer.retained;
    for (auto it = retained.begin(); it != retained.end();) {
      if (it->next_retransmit_us > now_us) {
        ++it;
        continue;
      }
      if (it->attempts >= config_.max_retransmits) {
        ++stats_.give_ups;
        if (hooks_.on_give_up) hooks_.on_give_up(topic, it->seq, it->awaiting);
        it = retained.erase(it);
        continue;
      }
      ++it->attempts;
      for (NodeId to : it->awaiting) {
        ++stats_.retransmits;
        if (hooks_.on_retransmit) hooks_.on_retransmit(it->envelope, to, it->attempts);
        transport_->send(to, it->frame, now_us);
      }
      it->next_retransmit_us += config_.retransmit_period_us;
      ++it;
    }
  }
}

void Bus::surface(const Envelope& e, NodeId from, bool loopback, std::uint64_t arrival_us) {
  auto it = subscriptions_.find(e.topic);
  if (it == subscriptions_.end()) return;
  for (auto& sub : it->second) sub->push(e);
  ++stats_.delivered;
  if (hooks_.on_deliver) hooks_.on_deliver(e, from, loopback, arrival_us);
}

// --- Publisher -----------------------------------------------------------

std::uint64_t Publisher::publish(std::vector<std::uint8_t> payload, std::uint64_t now_us) {
  Envelope e;
  e.topic = topic_;
  e.publisher = bus_->self();
  e.seq = bus_->next_seq(topic_);
  e.timestamp_us = now_us;
  e.qos = qos_;
  e.payload = std::move(payload);
  bus_->publish(e);
  return e.seq;
}

}  // namespace swarmlink::mw
