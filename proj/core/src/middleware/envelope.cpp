#include "swarmlink/middleware/envelope.hpp"

#include "swarmlink/errors.hpp"

namespace swarmlink::mw {

TopicName::TopicName(std::string value) : value_(std::move(value)) {
  if (!is_valid(value_)) {
    throw InvalidArgument("invalid topic name '" + value_ + "'");
  }
}

bool TopicName::is_valid(std::string_view value) noexcept {
  if (value.empty() || value.size() > 255) return false;
  for (char c : value) {
    const bool ok = (c >= 'a' && c <= 'z') || (c >= '0' && c <= '9') || c == '_' || c == '/';
    if (!ok) return false;
  }
  return true;
}

QosProfile QosProfile::best_effort(std::uint16_t depth) { return {Reliability::BestEffort, depth}; }

QosProfile QosProfile::reliable(std::uint16_t depth) { return {Reliability::Reliable, depth}; }

std::vector<std::uint8_t> to_bytes(std::string_view text) { return {text.begin(), text.end()}; }

std::string_view as_text(const std::vector<std::uint8_t>& bytes) noexcept {
  return {reinterpret_cast<const char*>(bytes.data()), bytes.size()};
}

}  // namespace swarmlink::mw
