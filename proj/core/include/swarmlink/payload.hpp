#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "swarmlink/model.hpp"

namespace swarmlink {

/// pan in (-pi, pi] relative to the vehicle nose, tilt in [-pi/2, pi/2]
/// (0 = horizon, -pi/2 = straight down).
struct GimbalState {
  double pan = 0.0;
  double tilt = 0.0;
  double zoom = 1.0;

  friend bool operator==(const GimbalState&, const GimbalState&) = default;
};

struct GimbalLimits {
  double min_tilt = -kPi / 2.0;
  double max_tilt = kPi / 2.0;
};

struct GimbalAim {
  GimbalState state;
  bool clamped = false;
};

/// Pan/tilt that put `target` on the boresight. Throws InvalidArgument when
/// the target coincides with the vehicle.
GimbalAim gimbal_point_at(const Pose& uav_pose, const Vec3& target, const GimbalLimits& limits = {});

struct FrameMeta {
  std::uint64_t seq = 0;
  std::uint64_t timestamp_us = 0;
  std::uint32_t width = 1280;
  std::uint32_t height = 720;
  UavId source_uav;

  friend bool operator==(const FrameMeta&, const FrameMeta&) = default;
};

/// Frame metadata producer. Emits at most one frame per 1/fps period.
class CameraStream {
 public:
  CameraStream(UavId source, double fps = 10.0, std::uint32_t width = 1280, std::uint32_t height = 720);

  std::optional<FrameMeta> stream_tick(std::uint64_t now_us);

  double fps() const noexcept { return fps_; }
  std::uint64_t frames_emitted() const noexcept { return seq_; }

 private:
  UavId source_;
  double fps_;
  std::uint32_t width_;
  std::uint32_t height_;
  std::optional<std::uint64_t> start_us_;
  std::uint64_t seq_ = 0;
};

struct Detection {
  std::uint32_t track_id = 0;
  double bearing = 0.0;    // body-frame azimuth, rad
  double elevation = 0.0;  // above the horizon, rad
  double confidence = 0.0;

  friend bool operator==(const Detection&, const Detection&) = default;
};

struct TruthTarget {
  UavId id;
  Pose pose;
};

struct Observer {
  Pose pose;
  GimbalState gimbal;
};

/// Detection plugin contract: a pure function of its inputs holding no
/// shared mutable state.
class Detector {
 public:
  virtual ~Detector() = default;
  virtual std::vector<Detection> detect(const FrameMeta& frame, std::span<const TruthTarget> truth,
                                        const Observer& observer) const = 0;
};

/// Geometric stand-in for a vision pipeline: reports every target within
/// range inside the camera's square field of view, with exact angles.
class StubDetector final : public Detector {
 public:
  explicit StubDetector(double max_range_m = 200.0, double fov_rad = kPi / 2.0)
      : max_range_m_(max_range_m), half_fov_(fov_rad / 2.0) {}

  std::vector<Detection> detect(const FrameMeta& frame, std::span<const TruthTarget> truth,
                                const Observer& observer) const override;

 private:
  double max_range_m_;
  double half_fov_;
};

using DetectorErrorSink = std::function<void(const std::string&)>;

/// Runs `plugin`; a throwing plugin yields no detections and reports
/// through `on_error`.
std::vector<Detection> run_detector(const Detector& plugin, const FrameMeta& frame,
                                    std::span<const TruthTarget> truth, const Observer& observer,
                                    const DetectorErrorSink& on_error = {});

}  // namespace swarmlink
