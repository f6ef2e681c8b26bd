#include <gtest/gtest.h>

#include <random>

#include "swarmlink/errors.hpp"
#include "swarmlink/payload.hpp"

using namespace swarmlink;

namespace {

constexpr double kHalfPi = 1.5707963267948966;

class ThrowingDetector final : public Detector {
 public:
  std::vector<Detection> detect(const FrameMeta&, std::span<const TruthTarget>, const Observer&) const override {
    throw std::runtime_error("model file missing");
  }
};

class NoisyDetector final : public Detector {
 public:
  std::vector<Detection> detect(const FrameMeta&, std::span<const TruthTarget>, const Observer&) const override {
    return {{1, 0.1, 0.0, 0.9}, {2, NAN, 0.0, 0.5}, {3, 0.0, 0.0, 1.5}};
  }
};

}  // namespace

TEST(Gimbal, CardinalTargets) {
  const Pose uav{{0, 0, -10}, 0};
  auto a = gimbal_point_at(uav, {10, 0, -10});
  EXPECT_NEAR(a.state.pan, 0, 1e-12);
  EXPECT_NEAR(a.state.tilt, 0, 1e-12);
  a = gimbal_point_at(uav, {0, 10, -10});
  EXPECT_NEAR(a.state.pan, kHalfPi, 1e-12);
  a = gimbal_point_at(uav, {0, 0, 0});
  EXPECT_NEAR(a.state.tilt, -kHalfPi, 1e-12);
  a = gimbal_point_at(uav, {10, 0, 0});
  EXPECT_NEAR(a.state.tilt, -kHalfPi / 2, 1e-12);  // 10 m ahead, 10 m down
  // Pan is relative to the nose: facing east, a target to the north is 90 degrees left.
  a = gimbal_point_at(Pose{{0, 0, -10}, kHalfPi}, {10, 0, -10});
  EXPECT_NEAR(a.state.pan, -kHalfPi, 1e-12);
  EXPECT_THROW(gimbal_point_at(uav, {0, 0, -10}), InvalidArgument);
}

TEST(Gimbal, TiltLimitsClamp) {
  GimbalLimits limits;
  limits.min_tilt = -1.0;
  const auto a = gimbal_point_at(Pose{{0, 0, -10}, 0}, {0, 0, 0}, limits);
  EXPECT_TRUE(a.clamped);
  EXPECT_DOUBLE_EQ(a.state.tilt, -1.0);
}

// Pointing at a target puts it on the boresight, so the stub detector sees it
// at the bearing and elevation the pointing computed.
TEST(Gimbal, PointedTargetIsDetectedOnBoresight) {
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-80, 80);
  std::uniform_real_distribution<double> yaw(-3.1, 3.1);
  const StubDetector det;
  for (int i = 0; i < 1000; ++i) {
    const Pose uav{{u(rng), u(rng), -20}, yaw(rng)};
    const Vec3 target{u(rng), u(rng), -std::abs(u(rng)) / 4};
    if ((target - uav.position).norm() < 1.0) continue;
    const auto aim = gimbal_point_at(uav, target);
    const FrameMeta f;
    const TruthTarget truth[] = {{UavId(7), Pose{target, 0}}};
    const auto d = det.detect(f, truth, Observer{uav, aim.state});
    ASSERT_EQ(d.size(), 1u) << i;
    EXPECT_NEAR(d[0].bearing, aim.state.pan, 1e-9);
    EXPECT_NEAR(d[0].elevation, aim.state.tilt, 1e-9);
  }
}

TEST(StubDetector, RangeAndFieldOfView) {
  const StubDetector det(100.0, kHalfPi);
  const Observer obs{Pose{{0, 0, -10}, 0}, GimbalState{}};
  const FrameMeta f;
  const TruthTarget targets[] = {
      {UavId(1), Pose{{50, 0, -10}, 0}},   // ahead
      {UavId(2), Pose{{50, 60, -10}, 0}},  // 50 degrees right, outside a 90 degree fov
      {UavId(3), Pose{{150, 0, -10}, 0}},  // out of range
      {UavId(4), Pose{{-50, 0, -10}, 0}},  // behind
  };
  const auto d = det.detect(f, targets, obs);
  ASSERT_EQ(d.size(), 1u);
  EXPECT_EQ(d[0].track_id, 1u);
}

TEST(RunDetector, FailingPluginYieldsNothingAndReports) {
  std::string error;
  const auto d = run_detector(ThrowingDetector{}, FrameMeta{}, {}, Observer{}, [&](const std::string& e) { error = e; });
  EXPECT_TRUE(d.empty());
  EXPECT_EQ(error, "model file missing");
  const auto n = run_detector(NoisyDetector{}, FrameMeta{}, {}, Observer{});
  ASSERT_EQ(n.size(), 1u);
  EXPECT_EQ(n[0].track_id, 1u);
}

TEST(CameraStream, EmitsAtConfiguredRateWithoutDrift) {
  CameraStream cam(UavId(2), 10.0);
  std::vector<std::uint64_t> times;
  for (std::uint64_t t = 0; t <= 10'000'000; t += 30'000) {
    if (auto f = cam.stream_tick(t)) {
      EXPECT_EQ(f->seq, times.size() + 1);
      EXPECT_EQ(f->source_uav, UavId(2));
      times.push_back(t);
    }
  }
  // Frame k is due at k * 100 ms; with 30 ms ticks it goes out at the first tick at or after that.
  // The last tick is 9.99 s, so frames 0..99 go out and the one due at 10 s does not.
  ASSERT_EQ(times.size(), 100u);
  for (std::size_t k = 0; k < times.size(); ++k) {
    EXPECT_GE(times[k], k * 100'000);
    EXPECT_LT(times[k], k * 100'000 + 30'000);
  }
  EXPECT_THROW(CameraStream(UavId(1), 0.0), InvalidArgument);
}
