#include "swarmlink/payload.hpp"

#include <algorithm>
#include <cmath>

#include "swarmlink/errors.hpp"

namespace swarmlink {

namespace {

struct Angles {
  double azimuth;
  double elevation;
};

// Azimuth/elevation of a body-frame (x fwd, y right, z down) vector.
Angles body_angles(const Vec3& r) {
  const double horizontal = r.horizontal_norm();
  const double azimuth = horizontal < 1e-12 ? 0.0 : normalize_yaw(std::atan2(r.y, r.x));
  return {azimuth, std::atan2(-r.z, horizontal)};
}

}  // namespace

GimbalAim gimbal_point_at(const Pose& uav_pose, const Vec3& target, const GimbalLimits& limits) {
  const Vec3 world = target - uav_pose.position;
  if (world.norm() < 1e-12) throw InvalidArgument("gimbal target coincides with vehicle position");
  const Angles a = body_angles(rotate_z(world, -uav_pose.yaw));
  GimbalAim aim;
  aim.state.pan = a.azimuth;
  aim.state.tilt = std::clamp(a.elevation, limits.min_tilt, limits.max_tilt);
  aim.clamped = aim.state.tilt != a.elevation;
  return aim;
}

CameraStream::CameraStream(UavId source, double fps, std::uint32_t width, std::uint32_t height)
    : source_(source), fps_(fps), width_(width), height_(height) {
  if (!(fps > 0.0) || !std::isfinite(fps)) throw InvalidArgument("fps must be > 0");
  if (width == 0 || height == 0) throw InvalidArgument("frame dimensions must be > 0");
}

std::optional<FrameMeta> CameraStream::stream_tick(std::uint64_t now_us) {
  if (!start_us_) start_us_ = now_us;
  // Frame k is due at start + k / fps; computed from k to avoid drift.
  const auto due = *start_us_ + static_cast<std::uint64_t>(std::llround(static_cast<double>(seq_) * 1e6 / fps_));
  if (now_us < due) return std::nullopt;
  ++seq_;
  return FrameMeta{seq_, now_us, width_, height_, source_};
}

std::vector<Detection> StubDetector::detect(const FrameMeta&, std::span<const TruthTarget> truth,
                                            const Observer& observer) const {
  std::vector<Detection> out;
  for (const auto& t : truth) {
    const Vec3 world = t.pose.position - observer.pose.position;
    const double range = world.norm();
    if (range < 1e-9 || range > max_range_m_) continue;
    const Vec3 body = rotate_z(world, -observer.pose.yaw);
    // Camera frame: undo gimbal pan about z, then tilt about the camera's y axis.
    const Vec3 panned = rotate_z(body, -observer.gimbal.pan);
    const double ct = std::cos(observer.gimbal.tilt);
    const double st = std::sin(observer.gimbal.tilt);
    const Vec3 cam{panned.x * ct - panned.z * st, panned.y, panned.x * st + panned.z * ct};
    if (cam.x <= 0.0) continue;
    if (std::abs(std::atan2(cam.y, cam.x)) > half_fov_ + 1e-12) continue;
    if (std::abs(std::atan2(-cam.z, cam.x)) > half_fov_ + 1e-12) continue;
    const Angles a = body_angles(body);
    out.push_back({t.id.value(), a.azimuth, a.elevation, 1.0});
  }
  return out;
}

std::vector<Detection> run_detector(const Detector& plugin, const FrameMeta& frame,
                                    std::span<const TruthTarget> truth, const Observer& observer,
                                    const DetectorErrorSink& on_error) {
  try {
    auto detections = plugin.detect(frame, truth, observer);
    std::erase_if(detections, [](const Detection& d) {
      return !(d.confidence >= 0.0 && d.confidence <= 1.0) || !std::isfinite(d.bearing) ||
             !std::isfinite(d.elevation);
    });
    return detections;
  } catch (const std::exception& e) {
    if (on_error) on_error(e.what());
  } catch (...) {
    if (on_error) on_error("detector threw a non-standard exception");
  }
  return {};
}

}  // namespace swarmlink
