#include "swarmlink/middleware/udp_transport.hpp"

#include <arpa/inet.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <cerrno>
#include <chrono>
#include <cstring>
#include <sstream>

#include "swarmlink/errors.hpp"
#include "swarmlink/middleware/wire.hpp"

namespace swarmlink::mw {

namespace {

sockaddr_in to_sockaddr(const UdpEndpoint& ep) {
  sockaddr_in addr{};
  addr.sin_family = AF_INET;
  addr.sin_port = htons(ep.port);
  if (inet_pton(AF_INET, ep.host.c_str(), &addr.sin_addr) != 1) {
    throw InvalidArgument("not an IPv4 address: " + ep.host);
  }
  return addr;
}

std::uint64_t wall_us() {
  using namespace std::chrono;
  return static_cast<std::uint64_t>(duration_cast<microseconds>(steady_clock::now().time_since_epoch()).count());
}

}  // namespace

UdpEndpoint parse_endpoint(const std::string& text) {
  auto colon = text.rfind(':');
  if (colon == std::string::npos || colon == 0 || colon + 1 == text.size()) {
    throw InvalidArgument("expected host:port, got '" + text + "'");
  }
  UdpEndpoint ep;
  ep.host = text.substr(0, colon);
  try {
    const int port = std::stoi(text.substr(colon + 1));
    if (port < 0 || port > 65535) throw std::out_of_range("port");
    ep.port = static_cast<std::uint16_t>(port);
  } catch (const std::exception&) {
    throw InvalidArgument("bad port in '" + text + "'");
  }
  return ep;
}

UdpTransport::UdpTransport(NodeId self, UdpEndpoint bind, std::map<NodeId, UdpEndpoint> peers,
                           std::uint64_t announce_period_us)
    : self_(self), peers_(std::move(peers)), announce_period_us_(announce_period_us) {
  peers_.erase(self_);
  fd_ = ::socket(AF_INET, SOCK_DGRAM, 0);
  if (fd_ < 0) throw InvalidArgument(std::string("socket: ") + std::strerror(errno));
  auto addr = to_sockaddr(bind);
  if (::bind(fd_, reinterpret_cast<sockaddr*>(&addr), sizeof(addr)) != 0) {
    const std::string err = std::strerror(errno);
    ::close(fd_);
    throw InvalidArgument("bind " + bind.host + ":" + std::to_string(bind.port) + ": " + err);
  }
  socklen_t len = sizeof(addr);
  ::getsockname(fd_, reinterpret_cast<sockaddr*>(&addr), &len);
  bound_port_ = ntohs(addr.sin_port);
  receiver_ = std::thread([this] { receive_loop(); });
}

UdpTransport::~UdpTransport() {
  running_ = false;
  if (receiver_.joinable()) receiver_.join();
  if (fd_ >= 0) ::close(fd_);
}

void UdpTransport::send_raw(const UdpEndpoint& to, const std::vector<std::uint8_t>& bytes) {
  auto addr = to_sockaddr(to);
  ::sendto(fd_, bytes.data(), bytes.size(), 0, reinterpret_cast<sockaddr*>(&addr), sizeof(addr));
}

void UdpTransport::send(NodeId to, std::vector<std::uint8_t> frame, std::uint64_t) {
  UdpEndpoint ep;
  {
    std::lock_guard lock(mu_);
    if (blocked_.contains(to)) return;
    auto it = peers_.find(to);
    if (it == peers_.end()) return;
    ep = it->second;
  }
  send_raw(ep, frame);
}

std::vector<InboundFrame> UdpTransport::receive() {
  std::lock_guard lock(mu_);
  std::vector<InboundFrame> out;
  out.swap(inbox_);
  return out;
}

std::vector<NodeId> UdpTransport::destinations(const TopicName&) const {
  std::lock_guard lock(mu_);
  std::vector<NodeId> out;
  for (const auto& [id, _] : peers_) out.push_back(id);
  return out;
}

std::vector<NodeId> UdpTransport::reliable_readers(const TopicName& topic) const {
  std::lock_guard lock(mu_);
  std::vector<NodeId> out;
  for (const auto& [id, subs] : remote_subs_) {
    auto it = subs.find(topic);
    if (it != subs.end() && it->second && peers_.contains(id)) out.push_back(id);
  }
  return out;
}

void UdpTransport::announce(const TopicName& topic, QosProfile qos) {
  {
    std::lock_guard lock(mu_);
    auto& entry = local_subs_[topic];
    entry = entry || qos.is_reliable();
  }
  send_announcement();
}

void UdpTransport::set_peer(NodeId peer, UdpEndpoint endpoint) {
  if (peer == self_) return;
  {
    std::lock_guard lock(mu_);
    peers_[peer] = std::move(endpoint);
  }
  send_announcement();
}

void UdpTransport::block(NodeId peer) {
  std::lock_guard lock(mu_);
  blocked_.insert(peer);
}

void UdpTransport::unblock(NodeId peer) {
  std::lock_guard lock(mu_);
  blocked_.erase(peer);
}

void UdpTransport::send_announcement() {
  std::ostringstream text;
  std::vector<std::pair<NodeId, UdpEndpoint>> targets;
  Envelope e;
  {
    std::lock_guard lock(mu_);
    for (const auto& [topic, reliable] : local_subs_) text << (reliable ? "r " : "b ") << topic.str() << '\n';
    for (const auto& [id, ep] : peers_) {
      if (!blocked_.contains(id)) targets.emplace_back(id, ep);
    }
    e.seq = ++announce_seq_;
  }
  e.topic = TopicName(kAnnounceTopic);
  e.publisher = self_;
  e.timestamp_us = wall_us();
  e.payload = to_bytes(text.str());
  if (e.payload.size() > kMaxPayloadBytes) return;
  const auto frame = encode_frame(e);
  for (const auto& [id, ep] : targets) send_raw(ep, frame);
}

void UdpTransport::receive_loop() {
  std::vector<std::uint8_t> buf(65536);
  std::uint64_t next_announce = wall_us() + announce_period_us_;
  while (running_) {
    pollfd pfd{fd_, POLLIN, 0};
    const int ready = ::poll(&pfd, 1, 50);
    if (wall_us() >= next_announce) {
      send_announcement();
      next_announce += announce_period_us_;
    }
    if (ready <= 0) continue;
    sockaddr_in src{};
    socklen_t len = sizeof(src);
    const auto n = ::recvfrom(fd_, buf.data(), buf.size(), 0, reinterpret_cast<sockaddr*>(&src), &len);
    if (n <= 0) continue;
    std::vector<std::uint8_t> bytes(buf.begin(), buf.begin() + n);

    Envelope peek;
    try {
      peek = decode_frame(bytes);
    } catch (const DecodeError&) {
      continue;
    }
    std::lock_guard lock(mu_);
    if (blocked_.contains(peek.publisher)) continue;
    if (peek.topic.str() == kAnnounceTopic) {
      std::map<TopicName, bool> subs;
      std::istringstream lines(std::string(as_text(peek.payload)));
      std::string kind, topic;
      while (lines >> kind >> topic) {
        if (TopicName::is_valid(topic)) subs[TopicName(topic)] = kind == "r";
      }
      remote_subs_[peek.publisher] = std::move(subs);
      continue;
    }
    inbox_.push_back({peek.publisher, std::move(bytes)});
  }
}

}  // namespace swarmlink::mw
