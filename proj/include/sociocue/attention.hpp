#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sociocue/faceid.hpp"
#include "sociocue/headpose.hpp"

namespace sociocue {

struct AttentionConfig {
  double tau_deg = 10.0;            // eye-contact half-angle
  int on_frames = 5;                // consecutive frames to confirm start
  int off_frames = 8;               // consecutive frames to confirm end
  std::int64_t refractory_ms = 4000;  // gap between repeated announcements

  void validate() const;
};

// Semantic event feeding arbitration.
struct CueEvent {
  enum class Kind { GazeStart, GazeEnd, IdSnapshot };

  Kind kind = Kind::GazeStart;
  int track_id = -1;
  std::int64_t timestamp_ms = 0;
  double bearing_deg = 0.0;
  IdentityLabel identity;
  // IdSnapshot only: every visible track, sorted by bearing ascending.
  std::vector<std::pair<IdentityLabel, double>> roster;
};

struct ActiveGazer {
  int track_id = -1;
  IdentityLabel identity;
  double bearing_deg = 0.0;
};

// Turns per-frame head poses into debounced eye-contact events. Eye contact
// holds on a frame when |yaw - bearing| <= tau. A GazeStart is confirmed
// after on_frames consecutive contact frames, a GazeEnd after off_frames
// consecutive non-contact frames. Episodes confirmed within the refractory
// window of the previous announcement stay silent end to end, but still
// count as active gazers.
class AttentionTracker {
 public:
  explicit AttentionTracker(AttentionConfig cfg = {});

  // Feeds one observation of one track. Timestamps per track must strictly
  // increase (StaleTimestamp otherwise). Returns at most one event.
  std::vector<CueEvent> update(int track_id, const HeadPose& pose,
                               Bearing bearing, const IdentityLabel& identity,
                               std::int64_t timestamp_ms);

  // Call for a known track that produced no observation this frame; counts
  // as a non-contact frame so a departed gazer still ends its episode.
  std::vector<CueEvent> mark_absent(int track_id, std::int64_t timestamp_ms);

  // Tracks in the active (started, not ended) state, ordered by track id.
  // Reflects all updates processed up to and including `timestamp_ms`.
  std::vector<ActiveGazer> active_gazers(std::int64_t timestamp_ms) const;

  const AttentionConfig& config() const { return cfg_; }

 private:
  struct TrackState {
    int on_run = 0;
    int off_run = 0;
    bool active = false;
    bool announced = false;
    std::optional<std::int64_t> last_announced_ms;
    std::int64_t last_timestamp_ms = 0;
    IdentityLabel identity;
    double bearing_deg = 0.0;
  };

  std::vector<CueEvent> advance(int track_id, TrackState& s, bool contact,
                                std::int64_t timestamp_ms);

  AttentionConfig cfg_;
  std::map<int, TrackState> tracks_;
};

}  // namespace sociocue
