#include "sociocue/attention.hpp"

#include <cmath>

#include "sociocue/errors.hpp"
#include "sociocue/math_util.hpp"

namespace sociocue {

void AttentionConfig::validate() const {
  if (!(tau_deg > 0.0 && tau_deg <= 45.0)) {
    throw ValidationError("tau must lie in (0, 45] degrees");
  }
  if (on_frames < 1 || off_frames < 1) {
    throw ValidationError("hysteresis frame counts must be at least 1");
  }
  if (refractory_ms < 0) {
    throw ValidationError("refractory window must be non-negative");
  }
}

AttentionTracker::AttentionTracker(AttentionConfig cfg) : cfg_(cfg) {
  cfg_.validate();
}

std::vector<CueEvent> AttentionTracker::update(int track_id,
                                               const HeadPose& pose,
                                               Bearing bearing,
                                               const IdentityLabel& identity,
                                               std::int64_t timestamp_ms) {
  auto [it, inserted] = tracks_.try_emplace(track_id);
  TrackState& s = it->second;
  if (!inserted && timestamp_ms <= s.last_timestamp_ms) {
    throw StaleTimestamp("track " + std::to_string(track_id) +
                         " went back in time");
  }
  s.last_timestamp_ms = timestamp_ms;
  s.identity = identity;
  s.bearing_deg = bearing.deg;

  const double delta = wrap_deg(pose.yaw_deg - bearing.deg);
  return advance(track_id, s, std::abs(delta) <= cfg_.tau_deg, timestamp_ms);
}

std::vector<CueEvent> AttentionTracker::mark_absent(int track_id,
                                                    std::int64_t timestamp_ms) {
  const auto it = tracks_.find(track_id);
  if (it == tracks_.end()) return {};
  TrackState& s = it->second;
  if (timestamp_ms <= s.last_timestamp_ms) {
    throw StaleTimestamp("track " + std::to_string(track_id) +
                         " went back in time");
  }
  s.last_timestamp_ms = timestamp_ms;
  return advance(track_id, s, false, timestamp_ms);
}

std::vector<CueEvent> AttentionTracker::advance(int track_id, TrackState& s,
                                                bool contact,
                                                std::int64_t timestamp_ms) {
  if (contact) {
    ++s.on_run;
    s.off_run = 0;
  } else {
    ++s.off_run;
    s.on_run = 0;
  }

  std::vector<CueEvent> events;
  if (!s.active && s.on_run >= cfg_.on_frames) {
    s.active = true;
    s.announced = !s.last_announced_ms ||
                  timestamp_ms - *s.last_announced_ms >= cfg_.refractory_ms;
    if (s.announced) {
      s.last_announced_ms = timestamp_ms;
      CueEvent e;
      e.kind = CueEvent::Kind::GazeStart;
      e.track_id = track_id;
      e.timestamp_ms = timestamp_ms;
      e.bearing_deg = s.bearing_deg;
      e.identity = s.identity;
      events.push_back(std::move(e));
    }
  } else if (s.active && s.off_run >= cfg_.off_frames) {
    s.active = false;
    if (s.announced) {
      CueEvent e;
      e.kind = CueEvent::Kind::GazeEnd;
      e.track_id = track_id;
      e.timestamp_ms = timestamp_ms;
      e.bearing_deg = s.bearing_deg;
      e.identity = s.identity;
      events.push_back(std::move(e));
    }
    s.announced = false;
  }
  return events;
}

std::vector<ActiveGazer> AttentionTracker::active_gazers(
    std::int64_t /*timestamp_ms*/) const {
  std::vector<ActiveGazer> out;
  for (const auto& [track_id, s] : tracks_) {
    if (s.active) out.push_back({track_id, s.identity, s.bearing_deg});
  }
  return out;
}

}  // namespace sociocue
