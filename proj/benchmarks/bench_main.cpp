#include <benchmark/benchmark.h>

#include <random>

#include "swarmlink/formation.hpp"
#include "swarmlink/middleware/bus.hpp"
#include "swarmlink/middleware/sim_network.hpp"
#include "swarmlink/middleware/wire.hpp"
#include "swarmlink/scenario.hpp"

using namespace swarmlink;
using namespace swarmlink::mw;

namespace {

Envelope sample_envelope(std::size_t payload) {
  Envelope e;
  e.topic = TopicName("uav/12/telemetry");
  e.publisher = 12;
  e.seq = 123456;
  e.timestamp_us = 987654321;
  e.qos = QosProfile::reliable(16);
  e.payload.assign(payload, 0xAB);
  return e;
}

void BM_EncodeFrame(benchmark::State& state) {
  const auto e = sample_envelope(static_cast<std::size_t>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(encode_frame(e));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_EncodeFrame)->Arg(0)->Arg(256)->Arg(4096);

void BM_DecodeFrame(benchmark::State& state) {
  const auto bytes = encode_frame(sample_envelope(static_cast<std::size_t>(state.range(0))));
  for (auto _ : state) benchmark::DoNotOptimize(decode_frame(bytes));
  state.SetBytesProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_DecodeFrame)->Arg(0)->Arg(256)->Arg(4096);

void BM_FormationOffsets(benchmark::State& state) {
  const FormationSpec spec{Geometry::Wedge, 10, 0};
  for (auto _ : state) benchmark::DoNotOptimize(compute_formation_offsets(spec, static_cast<std::size_t>(state.range(0))));
}
BENCHMARK(BM_FormationOffsets)->Arg(4)->Arg(16)->Arg(63);

void BM_FollowerSetpoint(benchmark::State& state) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-100, 100);
  const Pose leader{{u(rng), u(rng), -10}, 0.7};
  const BodyOffset o{{u(rng), u(rng), 0}};
  for (auto _ : state) benchmark::DoNotOptimize(follower_setpoint(leader, o));
}
BENCHMARK(BM_FollowerSetpoint);

// Reliable publish-to-delivery through the simulated network, 10 ms steps.
void BM_BusReliableThroughput(benchmark::State& state) {
  NetworkModel model;
  model.latency_mean_ms = 5;
  model.drop_probability = static_cast<double>(state.range(0)) / 100.0;
  SimNetwork net(model);
  auto& a_end = net.attach(1);
  auto& b_end = net.attach(2);
  Bus a(a_end);
  Bus b(b_end);
  const TopicName topic("uav/2/cmd");
  auto sub = b.subscribe(topic, QosProfile::reliable(16));
  Publisher pub(a, topic, QosProfile::reliable(16));
  const std::vector<std::uint8_t> payload(64, 1);
  std::uint64_t now = 0;
  std::size_t delivered = 0;
  for (auto _ : state) {
    pub.publish(payload, now);
    for (int i = 0; i < 5; ++i) {
      now += 10'000;
      net.step(now);
      a.poll(now);
      b.poll(now);
    }
    delivered += sub->drain().size();
  }
  state.counters["delivered"] = static_cast<double>(delivered);
}
BENCHMARK(BM_BusReliableThroughput)->Arg(0)->Arg(30);

const char* kFiveUavs = R"(sim: {seed: 7, dt_ms: 100, duration_s: 30}
network: {latency_mean_ms: 20, latency_jitter_ms: 5, drop_probability: 0.0}
uavs:
  - {id: 1, start_pos: [0, 0, 0]}
  - {id: 2, start_pos: [-5, -5, 0]}
  - {id: 3, start_pos: [-5, 5, 0]}
  - {id: 4, start_pos: [-10, -10, 0]}
  - {id: 5, start_pos: [-10, 10, 0]}
events:
  - {t_s: 1, action: arm_all}
  - {t_s: 2, action: takeoff_all}
  - {t_s: 8, action: offboard_all}
  - {t_s: 8.5, action: set_formation, args: {formation: {geometry: wedge, spacing_m: 10}}}
)";

// Whole-simulation cost of 30 simulated seconds with five vehicles, untraced.
void BM_SimulationFiveUavs(benchmark::State& state) {
  const auto config = parse_scenario(kFiveUavs, "bench");
  for (auto _ : state) {
    Simulation sim(config, nullptr);
    benchmark::DoNotOptimize(sim.run());
  }
}
BENCHMARK(BM_SimulationFiveUavs)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
