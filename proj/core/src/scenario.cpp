#include "swarmlink/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "swarmlink/errors.hpp"

namespace swarmlink {

namespace {

std::size_t line_of(const YAML::Node& n) {
  const auto mark = n.Mark();
  return mark.line < 0 ? 0 : static_cast<std::size_t>(mark.line) + 1;
}

[[noreturn]] void fail(const YAML::Node& n, const std::string& what) { throw ConfigError(line_of(n), what); }

void require_map(const YAML::Node& n, const std::string& what) {
  if (!n.IsMap()) fail(n, what + " must be a mapping");
}

void allow_keys(const YAML::Node& n, const std::set<std::string>& keys, const std::string& where) {
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    if (!keys.contains(key)) fail(kv.first, "unknown key '" + key + "' in " + where);
  }
}

template <typename T>
T scalar(const YAML::Node& n, const std::string& what) {
  if (!n.IsScalar()) fail(n, what + " must be a scalar");
  try {
    return n.as<T>();
  } catch (const YAML::Exception&) {
    fail(n, what + " has the wrong type");
  }
}

template <typename T>
T scalar_or(const YAML::Node& map, const char* key, T fallback, const std::string& where) {
  const auto n = map[key];
  return n ? scalar<T>(n, where + "." + key) : fallback;
}

double finite(const YAML::Node& n, const std::string& what) {
  const auto v = scalar<double>(n, what);
  if (!std::isfinite(v)) fail(n, what + " must be finite");
  return v;
}

// Scalars become the narrowest JSON type that holds them; quoted scalars stay strings.
Json to_json_tree(const YAML::Node& n) {
  switch (n.Type()) {
    case YAML::NodeType::Null:
    case YAML::NodeType::Undefined:
      return nullptr;
    case YAML::NodeType::Sequence: {
      Json out = Json::array();
      for (const auto& item : n) out.push_back(to_json_tree(item));
      return out;
    }
    case YAML::NodeType::Map: {
      Json out = Json::object();
      for (const auto& kv : n) out[kv.first.as<std::string>()] = to_json_tree(kv.second);
      return out;
    }
    case YAML::NodeType::Scalar:
      break;
  }
  const std::string text = n.Scalar();
  if (n.Tag() == "!") return text;
  std::int64_t i = 0;
  if (YAML::convert<std::int64_t>::decode(n, i)) return i;
  double d = 0;
  if (YAML::convert<double>::decode(n, d)) return d;
  bool b = false;
  if (YAML::convert<bool>::decode(n, b)) return b;
  return text;
}

NodeId node_id(const YAML::Node& n, const std::string& what) {
  const auto v = scalar<std::int64_t>(n, what);
  if (v < 0 || v > 65535) fail(n, what + " outside 0..65535");
  return static_cast<NodeId>(v);
}

void parse_sim(const YAML::Node& n, ScenarioConfig& c) {
  require_map(n, "sim");
  allow_keys(n, {"seed", "dt_ms", "duration_s"}, "sim");
  c.seed = scalar_or<std::uint64_t>(n, "seed", 0, "sim");
  const auto dt = scalar_or<std::int64_t>(n, "dt_ms", 100, "sim");
  if (dt <= 0 || dt > 10'000) fail(n["dt_ms"], "sim.dt_ms must be in 1..10000");
  c.dt_ms = static_cast<std::uint32_t>(dt);
  if (!n["duration_s"]) fail(n, "sim.duration_s is required");
  c.duration_s = finite(n["duration_s"], "sim.duration_s");
  if (c.duration_s <= 0 || c.duration_s > 86'400) fail(n["duration_s"], "sim.duration_s must be in (0, 86400]");
}

void parse_network(const YAML::Node& n, ScenarioConfig& c, bool& explicit_seed) {
  require_map(n, "network");
  allow_keys(n, {"seed", "latency_mean_ms", "latency_jitter_ms", "drop_probability"}, "network");
  explicit_seed = static_cast<bool>(n["seed"]);
  if (explicit_seed) c.network.seed = scalar<std::uint64_t>(n["seed"], "network.seed");
  c.network.latency_mean_ms = n["latency_mean_ms"] ? finite(n["latency_mean_ms"], "network.latency_mean_ms") : 0.0;
  c.network.latency_jitter_ms =
      n["latency_jitter_ms"] ? finite(n["latency_jitter_ms"], "network.latency_jitter_ms") : 0.0;
  c.network.drop_probability =
      n["drop_probability"] ? finite(n["drop_probability"], "network.drop_probability") : 0.0;
  try {
    c.network.validate();
  } catch (const InvalidArgument& e) {
    fail(n, std::string("network: ") + e.what());
  }
}

void parse_membership(const YAML::Node& n, ScenarioConfig& c) {
  require_map(n, "membership");
  allow_keys(n, {"heartbeat_period_ms", "stale_after_missed", "leader_policy"}, "membership");
  auto& m = c.membership;
  const auto period = scalar_or<std::int64_t>(n, "heartbeat_period_ms", m.heartbeat_period_ms, "membership");
  if (period <= 0 || period > 60'000) fail(n["heartbeat_period_ms"], "membership.heartbeat_period_ms must be in 1..60000");
  m.heartbeat_period_ms = static_cast<std::uint32_t>(period);
  const auto missed = scalar_or<std::int64_t>(n, "stale_after_missed", m.stale_after_missed, "membership");
  if (missed < 1 || missed > 1000) fail(n["stale_after_missed"], "membership.stale_after_missed must be in 1..1000");
  m.stale_after_missed = static_cast<std::uint32_t>(missed);
  if (const auto p = n["leader_policy"]) {
    auto policy = leader_policy_from_string(scalar<std::string>(p, "membership.leader_policy"));
    if (!policy) fail(p, "membership.leader_policy must be 'lowest_id' or 'pinned:<id>'");
    m.leader_policy = *policy;
  }
}

void parse_params(const YAML::Node& n, VehicleParams& p) {
  require_map(n, "params");
  const std::map<std::string, double*> fields{
      {"max_horizontal_speed_mps", &p.max_horizontal_speed_mps},
      {"max_vertical_speed_mps", &p.max_vertical_speed_mps},
      {"max_yaw_rate_rps", &p.max_yaw_rate_rps},
      {"takeoff_altitude_m", &p.takeoff_altitude_m},
      {"takeoff_tolerance_m", &p.takeoff_tolerance_m},
      {"landing_tolerance_m", &p.landing_tolerance_m},
  };
  for (const auto& kv : n) {
    const auto key = kv.first.as<std::string>();
    auto it = fields.find(key);
    if (it == fields.end()) fail(kv.first, "unknown vehicle parameter '" + key + "'");
    *it->second = finite(kv.second, "params." + key);
  }
  try {
    p.validate();
  } catch (const InvalidArgument& e) {
    fail(n, std::string("params: ") + e.what());
  }
}

UavSpec parse_uav(const YAML::Node& n) {
  require_map(n, "uav entry");
  allow_keys(n, {"id", "class", "start_pos", "start_yaw", "params"}, "uav entry");
  if (!n["id"]) fail(n, "uav entry needs an id");
  const auto id = scalar<std::int64_t>(n["id"], "uav id");
  if (id < 1 || id > 65535) fail(n["id"], "uav id must be in 1..65535");
  UavSpec spec;
  spec.id = UavId(static_cast<std::uint32_t>(id));
  if (const auto cls = n["class"]) {
    auto parsed = uav_class_from_string(scalar<std::string>(cls, "class"));
    if (!parsed) fail(cls, "unknown uav class");
    spec.uav_class = *parsed;
  }
  if (const auto pos = n["start_pos"]) {
    if (!pos.IsSequence() || pos.size() != 3) fail(pos, "start_pos must be [n, e, d]");
    spec.start_position = {finite(pos[0], "start_pos"), finite(pos[1], "start_pos"), finite(pos[2], "start_pos")};
  }
  if (const auto yaw = n["start_yaw"]) spec.start_yaw = normalize_yaw(finite(yaw, "start_yaw"));
  if (const auto params = n["params"]) parse_params(params, spec.params);
  return spec;
}

bool parse_fault(const std::string& action, const YAML::Node& args, Fault& out) {
  auto arg = [&](const char* key) {
    if (!args || !args[key]) fail(args ? args : YAML::Node(), action + " needs args." + key);
    return node_id(args[key], std::string("args.") + key);
  };
  if (action == "kill_uav") {
    out = fault::KillUav{arg("id")};
  } else if (action == "silence_heartbeats") {
    const NodeId id = arg("id");
    if (id == kGroundStationNode) fail(args["id"], "silence_heartbeats needs a uav id");
    out = fault::SilenceHeartbeats{UavId(id)};
  } else if (action == "partition_link") {
    out = fault::PartitionLink{arg("a"), arg("b")};
  } else if (action == "restore_link") {
    out = fault::RestoreLink{arg("a"), arg("b")};
  } else {
    return false;
  }
  return true;
}

using LinkKey = std::pair<NodeId, NodeId>;
LinkKey link_key(NodeId a, NodeId b) { return a < b ? LinkKey{a, b} : LinkKey{b, a}; }

// Referential checks that need the whole file: ids exist, restores follow partitions.
void check_event(const ScenarioEvent& ev, const YAML::Node& n, const std::set<NodeId>& nodes,
                 std::set<LinkKey>& partitioned) {
  auto known = [&](NodeId id, const char* what) {
    if (!nodes.contains(id)) fail(n, std::string(what) + " " + std::to_string(id) + " is not in the scenario");
  };
  if (const auto* f = std::get_if<Fault>(&ev.action)) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (std::is_same_v<T, fault::KillUav>) {
            known(x.node, "kill_uav id");
          } else if constexpr (std::is_same_v<T, fault::SilenceHeartbeats>) {
            known(x.id.node(), "silence_heartbeats id");
          } else {
            known(x.a, "link end");
            known(x.b, "link end");
            if (x.a == x.b) fail(n, "a link needs two distinct nodes");
            if constexpr (std::is_same_v<T, fault::PartitionLink>) {
              partitioned.insert(link_key(x.a, x.b));
            } else if (partitioned.erase(link_key(x.a, x.b)) == 0) {
              fail(n, "restore_link without a prior partition_link");
            }
          }
        },
        *f);
    return;
  }
  std::visit(
      [&](const auto& c) {
        using T = std::decay_t<decltype(c)>;
        if constexpr (std::is_same_v<T, op::SetLeader> || std::is_same_v<T, op::ForUav> ||
                      std::is_same_v<T, op::GimbalPoint>) {
          known(c.id.node(), "uav id");
        }
      },
      std::get<OperatorCommand>(ev.action));
}

ScenarioEvent parse_event(const YAML::Node& n) {
  require_map(n, "event");
  allow_keys(n, {"t_s", "action", "args"}, "event");
  if (!n["t_s"] || !n["action"]) fail(n, "event needs t_s and action");
  const double t_s = finite(n["t_s"], "t_s");
  if (t_s < 0) fail(n["t_s"], "t_s must be >= 0");
  ScenarioEvent ev;
  ev.t_us = static_cast<std::uint64_t>(std::llround(t_s * 1e6));
  ev.line = line_of(n);
  const auto action = scalar<std::string>(n["action"], "action");
  const auto args = n["args"];
  if (args && !args.IsMap()) fail(args, "args must be a mapping");
  Fault f;
  if (parse_fault(action, args, f)) {
    ev.action = f;
    return ev;
  }
  Json j = args ? to_json_tree(args) : Json::object();
  j["action"] = action;
  try {
    ev.action = from_text_json<OperatorCommand>(j);
  } catch (const InvalidArgument& e) {
    fail(n, std::string("event '") + action + "': " + e.what());
  }
  return ev;
}

}  // namespace

std::uint64_t ScenarioConfig::duration_us() const noexcept {
  return static_cast<std::uint64_t>(std::llround(duration_s * 1e6));
}

void ScenarioConfig::override_seed(std::uint64_t s) noexcept {
  seed = s;
  network.seed = s;
}

ScenarioConfig parse_scenario(const std::string& text, const std::string& name) {
  YAML::Node root;
  try {
    root = YAML::Load(text);
  } catch (const YAML::ParserException& e) {
    throw ConfigError(static_cast<std::size_t>(e.mark.line) + 1, e.msg);
  }
  if (!root.IsMap()) throw ConfigError(1, "scenario must be a mapping");
  allow_keys(root, {"name", "sim", "network", "membership", "coordinator", "uavs", "events"}, "scenario");

  ScenarioConfig c;
  c.name = root["name"] ? scalar<std::string>(root["name"], "name") : name;
  if (!root["sim"]) throw ConfigError(1, "missing 'sim' section");
  parse_sim(root["sim"], c);
  bool network_seed = false;
  if (root["network"]) parse_network(root["network"], c, network_seed);
  if (!network_seed) c.network.seed = c.seed;
  if (root["membership"]) parse_membership(root["membership"], c);

  if (const auto mode = root["coordinator"]) {
    const auto text = scalar<std::string>(mode, "coordinator");
    if (text == "gcs") {
      c.coordinator = CoordinatorMode::Gcs;
    } else if (text == "onboard") {
      c.coordinator = CoordinatorMode::Onboard;
    } else {
      fail(mode, "coordinator must be 'gcs' or 'onboard'");
    }
  }

  const auto uavs = root["uavs"];
  if (!uavs || !uavs.IsSequence() || uavs.size() == 0) throw ConfigError(uavs ? line_of(uavs) : 1, "'uavs' must be a non-empty list");
  std::set<NodeId> nodes{kGroundStationNode};
  for (const auto& u : uavs) {
    auto spec = parse_uav(u);
    if (!nodes.insert(spec.id.node()).second) fail(u, "duplicate uav id " + std::to_string(spec.id.value()));
    c.uavs.push_back(std::move(spec));
  }

  if (const auto events = root["events"]) {
    if (!events.IsSequence()) fail(events, "'events' must be a list");
    std::set<LinkKey> partitioned;
    for (const auto& e : events) {
      auto ev = parse_event(e);
      if (!c.events.empty() && ev.t_us < c.events.back().t_us) fail(e, "events must be sorted by t_s");
      check_event(ev, e, nodes, partitioned);
      c.events.push_back(std::move(ev));
    }
  }
  return c;
}

ScenarioConfig load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(0, path + ": cannot open scenario file");
  std::ostringstream text;
  text << in.rdbuf();
  try {
    auto stem = path.substr(path.find_last_of('/') + 1);
    stem = stem.substr(0, stem.find('.'));
    return parse_scenario(text.str(), stem);
  } catch (const ConfigError& e) {
    throw ConfigError(e.line(), path + ":" + std::to_string(e.line()) + ": " + e.what());
  }
}

// --- faults ------------------------------------------------------------------

std::string_view fault_name(const Fault& f) noexcept {
  static constexpr std::string_view names[] = {"kill_uav", "silence_heartbeats", "partition_link", "restore_link"};
  return names[f.index()];
}

Json fault_fields(const Fault& f) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, fault::KillUav>) {
          return Json{{"id", x.node}};
        } else if constexpr (std::is_same_v<T, fault::SilenceHeartbeats>) {
          return Json{{"id", x.id}};
        } else {
          return Json{{"a", x.a}, {"b", x.b}};
        }
      },
      f);
}

// --- Simulation --------------------------------------------------------------

NodeOptions node_options(const ScenarioConfig& config) {
  NodeOptions o;
  o.coordinator.membership = config.membership;
  return o;
}

Json to_json_value(const RunSummary& s) {
  Json uavs = Json::array();
  for (const auto& u : s.uavs) {
    uavs.push_back(Json{{"id", u.id},
                        {"alive", u.alive},
                        {"mission_state", u.mission_state},
                        {"pose", u.pose},
                        {"coordinating", u.coordinating},
                        {"command_rejections", u.command_rejections},
                        {"fsm_rejections", u.fsm_rejections}});
  }
  return Json{{"end_us", s.end_us},
              {"final_snapshot", s.final_snapshot ? Json(*s.final_snapshot) : Json(nullptr)},
              {"uavs", uavs},
              {"frames_sent", s.frames_sent},
              {"frames_dropped", s.frames_dropped},
              {"trace_records", s.trace_records}};
}

Simulation::Simulation(ScenarioConfig config, std::ostream* trace_out)
    : config_(std::move(config)), trace_(trace_out), net_(config_.network) {
  const auto options = node_options(config_);
  const auto clock = [this] { return now_us_; };

  trace_.record(0, "membership",
                Json{{"event", "config"},
                     {"scenario", config_.name},
                     {"seed", config_.seed},
                     {"dt_ms", config_.dt_ms},
                     {"heartbeat_period_ms", config_.membership.heartbeat_period_ms},
                     {"stale_after_missed", config_.membership.stale_after_missed},
                     {"leader_policy", to_string(config_.membership.leader_policy)},
                     {"coordinator", config_.coordinator == CoordinatorMode::Gcs ? "gcs" : "onboard"}});

  gcs_bus_ = std::make_unique<mw::Bus>(net_.attach(kGroundStationNode));
  trace_bus(*gcs_bus_, trace_, clock);
  gcs_ = std::make_unique<GcsNode>(*gcs_bus_, options, config_.coordinator == CoordinatorMode::Gcs, &trace_);

  for (const auto& spec : config_.uavs) {
    UavSlot slot;
    slot.bus = std::make_unique<mw::Bus>(net_.attach(spec.id.node()));
    trace_bus(*slot.bus, trace_, clock);
    slot.node = std::make_unique<UavNode>(spec, *slot.bus, options, &trace_);
    slot.node->set_truth_source([this] { return truth(); });
    uavs_.emplace(spec.id, std::move(slot));
  }
}

Simulation::~Simulation() = default;

const UavNode* Simulation::uav(UavId id) const {
  auto it = uavs_.find(id);
  return it == uavs_.end() ? nullptr : it->second.node.get();
}

bool Simulation::alive(NodeId node) const {
  if (node == kGroundStationNode) return gcs_alive_;
  auto it = uavs_.find(UavId(node));
  return it != uavs_.end() && it->second.alive;
}

std::vector<TruthTarget> Simulation::truth() const {
  std::vector<TruthTarget> out;
  for (const auto& [id, slot] : uavs_) {
    if (slot.alive) out.push_back(TruthTarget{id, slot.node->vehicle().state().pose});
  }
  return out;
}

CommandResponse Simulation::submit(const OperatorCommand& command) {
  if (gcs_alive_) return gcs_->submit(command, now_us_);
  trace_.record(now_us_, "audit",
                Json{{"source", "operator"},
                     {"action", action_name(command)},
                     {"accepted", false},
                     {"reason", "ground station down"},
                     {"command", Json(command)}});
  return CommandResponse{false, 0, "ground station down", 503};
}

void Simulation::apply_fault(const Fault& f) {
  Json fields{{"event", "fault"}, {"fault", fault_name(f)}};
  fields.update(fault_fields(f));
  trace_.record(now_us_, "network", fields);
  std::visit(
      [this](const auto& x) {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, fault::KillUav>) {
          if (!alive(x.node)) return;
          if (x.node == kGroundStationNode) {
            gcs_alive_ = false;
          } else {
            uavs_.at(UavId(x.node)).alive = false;
          }
          net_.detach(x.node);
        } else if constexpr (std::is_same_v<T, fault::SilenceHeartbeats>) {
          uavs_.at(x.id).node->silence_heartbeats(true);
        } else if constexpr (std::is_same_v<T, fault::PartitionLink>) {
          net_.partition(x.a, x.b);
        } else {
          net_.restore(x.a, x.b);
        }
      },
      f);
}

void Simulation::apply(const ScenarioEvent& event) {
  if (const auto* f = std::get_if<Fault>(&event.action)) {
    apply_fault(*f);
  } else {
    submit(std::get<OperatorCommand>(event.action));
  }
}

void Simulation::step() {
  const std::uint64_t now = now_us_;
  while (next_event_ < config_.events.size() && config_.events[next_event_].t_us <= now) {
    apply(config_.events[next_event_++]);
  }
  net_.step(now);
  for (const auto& drop : net_.take_drops()) trace_drop(trace_, now, drop);

  if (gcs_alive_) gcs_bus_->poll(now);
  for (auto& [id, slot] : uavs_) {
    if (slot.alive) slot.bus->poll(now);
  }
  if (gcs_alive_) gcs_->ingest(now);
  for (auto& [id, slot] : uavs_) {
    if (slot.alive) slot.node->ingest(now);
  }
  if (gcs_alive_) gcs_->coordinate(now);
  for (auto& [id, slot] : uavs_) {
    if (slot.alive) slot.node->coordinate(now);
  }
  const double dt_s = static_cast<double>(config_.dt_ms) / 1000.0;
  for (auto& [id, slot] : uavs_) {
    if (slot.alive) slot.node->advance(now, dt_s);
  }
  now_us_ += config_.dt_us();
}

RunSummary Simulation::run() {
  while (!finished()) step();
  trace_.flush();
  return summary();
}

RunSummary Simulation::summary() const {
  RunSummary s;
  s.end_us = now_us_ >= config_.dt_us() ? now_us_ - config_.dt_us() : 0;
  if (gcs_alive_) s.final_snapshot = gcs_->station().latest_snapshot();
  for (const auto& [id, slot] : uavs_) {
    const auto& n = *slot.node;
    s.uavs.push_back(UavSummary{id, slot.alive, n.mission_state(), n.vehicle().state().pose, n.command_rejections(),
                                n.fsm_rejections(), n.coordinating()});
  }
  s.frames_sent = net_.frames_sent();
  s.frames_dropped = net_.frames_dropped();
  s.trace_records = trace_.records();
  return s;
}

}  // namespace swarmlink
