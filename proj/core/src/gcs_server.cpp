#include "swarmlink/gcs_server.hpp"

#include <boost/asio.hpp>
#include <boost/beast/core.hpp>
#include <boost/beast/http.hpp>
#include <boost/beast/websocket.hpp>

#include <charconv>
#include <chrono>
#include <cstdlib>

#include "swarmlink/errors.hpp"

namespace swarmlink {

namespace {

namespace beast = boost::beast;
namespace http = beast::http;
namespace websocket = beast::websocket;
namespace net = boost::asio;
using tcp = net::ip::tcp;

HttpReply error(int status, std::string reason) { return HttpReply{status, Json{{"error", std::move(reason)}}}; }

HttpReply reply(const CommandResponse& r) {
  if (r.accepted) return HttpReply{202, Json{{"command_id", r.command_id}}};
  return HttpReply{r.http_status, Json{{"command_id", r.command_id}, {"error", r.reason}}};
}

std::optional<std::uint64_t> parse_u64(std::string_view text) {
  std::uint64_t v = 0;
  const auto* end = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(text.data(), end, v);
  if (ec != std::errc() || ptr != end || text.empty()) return std::nullopt;
  return v;
}

std::vector<std::string> split_path(const std::string& path) {
  std::vector<std::string> parts;
  std::string part;
  for (const char c : path) {
    if (c != '/') {
      part.push_back(c);
    } else if (!part.empty()) {
      parts.push_back(std::move(part));
      part.clear();
    }
  }
  if (!part.empty()) parts.push_back(std::move(part));
  return parts;
}

std::optional<std::string> query_param(const std::string& query, const std::string& key) {
  std::size_t pos = 0;
  while (pos <= query.size()) {
    auto amp = query.find('&', pos);
    if (amp == std::string::npos) amp = query.size();
    const std::string pair = query.substr(pos, amp - pos);
    const auto eq = pair.find('=');
    if (pair.substr(0, eq) == key) return eq == std::string::npos ? std::string() : pair.substr(eq + 1);
    pos = amp + 1;
  }
  return std::nullopt;
}

// Body errors are the client's: 400 with the parser's message.
template <typename T>
T body_as(const std::string& body) {
  return from_text_json<T>(parse_json(body));
}

HttpReply swarm_state(GcsBackend& backend) {
  FeedItem item;
  if (auto s = backend.latest_snapshot()) {
    item.snapshot = std::move(*s);
  } else {
    item.snapshot.timestamp_us = backend.now_us();
  }
  item.stale = backend.stale();
  return HttpReply{200, feed_json(item)};
}

HttpReply post(GcsBackend& backend, const std::vector<std::string>& p, const std::string& body) {
  if (p.size() == 3 && p[1] == "swarm") {
    if (p[2] == "formation") return reply(backend.submit(op::SetFormation{body_as<FormationSpec>(body)}));
    if (p[2] == "leader") {
      const auto j = parse_json(body);
      if (!j.is_object() || !j.contains("id")) throw InvalidArgument("body must be {\"id\": <uav id>}");
      return reply(backend.submit(op::SetLeader{from_text_json<UavId>(j.at("id"))}));
    }
    if (p[2] == "waypoint") return reply(backend.submit(op::LeaderWaypoint{body_as<Setpoint>(body)}));
    if (p[2] == "command") {
      const auto j = parse_json(body);
      const auto action = j.is_object() ? j.value("action", std::string()) : std::string();
      static const std::set<std::string> swarm_actions{"arm_all", "takeoff_all", "offboard_all", "rtl_all", "land_all"};
      if (!swarm_actions.contains(action)) throw InvalidArgument("action must be one of arm_all, takeoff_all, offboard_all, rtl_all, land_all");
      return reply(backend.submit(from_text_json<OperatorCommand>(Json{{"action", action}})));
    }
  }
  if (p.size() == 4 && p[1] == "uav") {
    const auto id = parse_u64(p[2]);
    if (!id || *id == 0 || *id > 65535) return error(404, "unknown uav");
    const UavId uav(static_cast<std::uint32_t>(*id));
    if (p[3] == "command") return reply(backend.submit(op::ForUav{uav, body_as<UavCommand>(body)}));
    if (p[3] == "gimbal") return reply(backend.submit(op::GimbalPoint{uav, body_as<GimbalCommand>(body).target}));
  }
  return error(404, "not found");
}

}  // namespace

HttpReply handle_request(GcsBackend& backend, const std::string& method, const std::string& target,
                         const std::string& body) {
  const auto q = target.find('?');
  const std::string path = target.substr(0, q);
  const std::string query = q == std::string::npos ? std::string() : target.substr(q + 1);
  const auto parts = split_path(path);
  if (parts.empty() || parts[0] != "api") return error(404, "not found");

  const bool is_get_route = (parts.size() == 2 && (parts[1] == "swarm" || parts[1] == "audit"));
  if (method == "OPTIONS") return HttpReply{204, Json()};
  try {
    if (is_get_route) {
      if (method != "GET") return error(405, "method not allowed");
      if (parts[1] == "swarm") return swarm_state(backend);
      std::uint64_t since = 0;
      if (auto s = query_param(query, "since")) {
        auto v = parse_u64(*s);
        if (!v) return error(400, "since must be a command id");
        since = *v;
      }
      Json entries = Json::array();
      for (const auto& e : backend.audit_since(since)) entries.push_back(to_json_value(e));
      return HttpReply{200, entries};
    }
    if (method != "POST") return error(parts.size() >= 3 ? 405 : 404, parts.size() >= 3 ? "method not allowed" : "not found");
    return post(backend, parts, body);
  } catch (const InvalidArgument& e) {
    return error(400, e.what());
  }
}

// --- LiveSim ---------------------------------------------------------------

LiveSim::LiveSim(ScenarioConfig config, std::ostream* trace_out, double speed)
    : sim_(std::move(config), trace_out), speed_(speed) {
  if (!(speed > 0) || !std::isfinite(speed)) throw InvalidArgument("speed must be positive");
}

LiveSim::~LiveSim() { stop(); }

void LiveSim::start() {
  if (running_.exchange(true)) return;
  thread_ = std::thread([this] { loop(); });
}

void LiveSim::stop() {
  if (!running_.exchange(false)) return;
  if (thread_.joinable()) thread_.join();
  std::lock_guard lock(mu_);
  sim_.trace().flush();
}

void LiveSim::loop() {
  const auto period = std::chrono::duration<double, std::micro>(static_cast<double>(sim_.config().dt_us()) / speed_);
  auto next = std::chrono::steady_clock::now();
  while (running_) {
    {
      std::lock_guard lock(mu_);
      sim_.step();
      now_us_ = sim_.now_us();
    }
    next += std::chrono::duration_cast<std::chrono::steady_clock::duration>(period);
    std::this_thread::sleep_until(next);
  }
}

CommandResponse LiveSim::submit(const OperatorCommand& command) {
  std::lock_guard lock(mu_);
  return sim_.submit(command);
}

std::optional<SwarmSnapshot> LiveSim::latest_snapshot() const {
  std::lock_guard lock(mu_);
  return const_cast<Simulation&>(sim_).gcs_node().station().latest_snapshot();
}

bool LiveSim::stale() const {
  std::lock_guard lock(mu_);
  return const_cast<Simulation&>(sim_).gcs_node().station().stale(sim_.now_us());
}

std::vector<AuditEntry> LiveSim::audit_since(std::uint64_t since) const {
  std::lock_guard lock(mu_);
  return const_cast<Simulation&>(sim_).gcs_node().station().audit_since(since);
}

// SnapshotFeed is internally synchronized; the node object outlives the sim's use of it.
SnapshotFeed& LiveSim::feed() { return sim_.gcs_node().feed(); }

// --- RealBackend -------------------------------------------------------------

std::optional<SwarmSnapshot> RealBackend::latest_snapshot() const {
  return swarm_->gcs_node().station().latest_snapshot();
}

bool RealBackend::stale() const { return swarm_->gcs_node().station().stale(swarm_->now_us()); }

std::vector<AuditEntry> RealBackend::audit_since(std::uint64_t since) const {
  return swarm_->gcs_node().station().audit_since(since);
}

// --- GcsServer -----------------------------------------------------------------

namespace {

class WsSession : public std::enable_shared_from_this<WsSession> {
 public:
  WsSession(tcp::socket&& socket, GcsBackend& backend)
      : ws_(std::move(socket)), backend_(backend), timer_(ws_.get_executor()) {}

  void run(http::request<http::string_body> req) {
    ws_.set_option(websocket::stream_base::timeout::suggested(beast::role_type::server));
    ws_.set_option(websocket::stream_base::decorator(
        [](websocket::response_type& res) { res.set(http::field::server, "swarmlink-gcs"); }));
    ws_.async_accept(req, [self = shared_from_this()](beast::error_code ec) { self->on_accept(ec); });
  }

 private:
  void on_accept(beast::error_code ec) {
    if (ec) return;
    client_ = backend_.feed().connect(backend_.now_us());
    connected_ = true;
    ws_.text(true);
    read();
    tick();
  }

  // Inbound messages are ignored; the pending read detects the close.
  void read() {
    ws_.async_read(in_, [self = shared_from_this()](beast::error_code ec, std::size_t) {
      if (ec) return self->close();
      self->in_.consume(self->in_.size());
      self->read();
    });
  }

  void tick() {
    if (closed_) return;
    if (!writing_) {
      if (auto item = backend_.feed().poll(client_, backend_.now_us())) {
        out_ = feed_json(*item).dump();
        writing_ = true;
        ws_.async_write(net::buffer(out_), [self = shared_from_this()](beast::error_code ec, std::size_t) {
          self->writing_ = false;
          if (ec) self->close();
        });
      }
    }
    timer_.expires_after(std::chrono::milliseconds(20));
    timer_.async_wait([self = shared_from_this()](beast::error_code ec) {
      if (!ec) self->tick();
    });
  }

  void close() {
    if (closed_) return;
    closed_ = true;
    if (connected_) backend_.feed().disconnect(client_);
    timer_.cancel();
  }

  websocket::stream<beast::tcp_stream> ws_;
  GcsBackend& backend_;
  net::steady_timer timer_;
  beast::flat_buffer in_;
  std::string out_;
  SnapshotFeed::ClientId client_ = 0;
  bool connected_ = false;
  bool writing_ = false;
  bool closed_ = false;
};

class HttpSession : public std::enable_shared_from_this<HttpSession> {
 public:
  HttpSession(tcp::socket&& socket, GcsBackend& backend) : stream_(std::move(socket)), backend_(backend) {}

  void run() { read(); }

 private:
  void read() {
    req_ = {};
    stream_.expires_after(std::chrono::seconds(30));
    http::async_read(stream_, buffer_, req_,
                     [self = shared_from_this()](beast::error_code ec, std::size_t) { self->on_read(ec); });
  }

  void on_read(beast::error_code ec) {
    if (ec == http::error::end_of_stream) {
      stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
      return;
    }
    if (ec) return;
    const std::string target(req_.target());
    if (websocket::is_upgrade(req_) && target.substr(0, target.find('?')) == "/ws/state") {
      stream_.expires_never();
      std::make_shared<WsSession>(stream_.release_socket(), backend_)->run(std::move(req_));
      return;
    }
    const auto r = handle_request(backend_, std::string(req_.method_string()), target, req_.body());
    auto res = std::make_shared<http::response<http::string_body>>(static_cast<http::status>(r.status), req_.version());
    res->set(http::field::server, "swarmlink-gcs");
    res->set(http::field::access_control_allow_origin, "*");
    res->set(http::field::access_control_allow_methods, "GET, POST, OPTIONS");
    res->set(http::field::access_control_allow_headers, "Content-Type");
    if (r.status != 204) {
      res->set(http::field::content_type, "application/json");
      res->body() = r.body.dump();
    }
    res->keep_alive(req_.keep_alive());
    res->prepare_payload();
    http::async_write(stream_, *res, [self = shared_from_this(), res](beast::error_code ec, std::size_t) {
      if (ec) return;
      if (!res->keep_alive()) {
        self->stream_.socket().shutdown(tcp::socket::shutdown_send, ec);
        return;
      }
      self->read();
    });
  }

  beast::tcp_stream stream_;
  beast::flat_buffer buffer_;
  http::request<http::string_body> req_;
  GcsBackend& backend_;
};

}  // namespace

struct GcsServer::Impl {
  Impl(GcsBackend& b, mw::UdpEndpoint ep) : backend(b), bind(std::move(ep)), acceptor(ioc) {}

  void accept() {
    acceptor.async_accept(net::make_strand(ioc), [this](beast::error_code ec, tcp::socket socket) {
      if (!ec) std::make_shared<HttpSession>(std::move(socket), backend)->run();
      if (acceptor.is_open()) accept();
    });
  }

  GcsBackend& backend;
  mw::UdpEndpoint bind;
  net::io_context ioc{1};
  tcp::acceptor acceptor;
  std::thread thread;
  bool running = false;
};

GcsServer::GcsServer(GcsBackend& backend, const mw::UdpEndpoint& bind) : impl_(std::make_unique<Impl>(backend, bind)) {}

GcsServer::~GcsServer() { stop(); }

void GcsServer::start() {
  if (impl_->running) return;
  beast::error_code ec;
  const auto address = net::ip::make_address(impl_->bind.host, ec);
  if (ec) throw InvalidArgument("bad bind address '" + impl_->bind.host + "'");
  const tcp::endpoint endpoint(address, impl_->bind.port);
  auto& acc = impl_->acceptor;
  acc.open(endpoint.protocol(), ec);
  if (!ec) acc.set_option(net::socket_base::reuse_address(true), ec);
  if (!ec) acc.bind(endpoint, ec);
  if (!ec) acc.listen(net::socket_base::max_listen_connections, ec);
  if (ec) throw Error(Errc::invalid_argument, "cannot listen on " + impl_->bind.host + ":" +
                                                  std::to_string(impl_->bind.port) + ": " + ec.message());
  impl_->running = true;
  impl_->accept();
  impl_->thread = std::thread([this] { impl_->ioc.run(); });
}

void GcsServer::stop() {
  if (!impl_ || !impl_->running) return;
  impl_->running = false;
  net::post(impl_->ioc, [this] {
    beast::error_code ec;
    impl_->acceptor.close(ec);
  });
  impl_->ioc.stop();
  if (impl_->thread.joinable()) impl_->thread.join();
}

std::uint16_t GcsServer::port() const {
  beast::error_code ec;
  const auto ep = impl_->acceptor.local_endpoint(ec);
  return ec ? 0 : ep.port();
}

std::string default_bind_address() {
  const char* env = std::getenv("GCS_BIND");
  return env && *env ? std::string(env) : std::string("127.0.0.1:8400");
}

}  // namespace swarmlink
