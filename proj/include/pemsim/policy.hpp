#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <vector>

#include "pemsim/pem.hpp"
#include "pemsim/world.hpp"

namespace pemsim {

struct PolicyConfig {
    double cruise_speed = 13.9;      // m/s
    double comfort_decel = 3.0;      // m/s^2
    double emergency_decel = 8.0;    // m/s^2
    double max_accel = 4.0;          // m/s^2
    double horizon_s = 4.0;          // conflict prediction horizon
    double prediction_dt = 0.1;      // extrapolation step
    double corridor_margin = 0.5;    // corridor half-width = lane/2 + margin
    double time_headway_s = 2.0;     // following target
    double standoff_m = 5.0;         // stop short of an incursion point
    int coast_limit = 5;             // frames a track survives without updates
    int history_window = 5;          // ring buffer length for velocity fits
    double dedup_radius_m = 2.0;     // stale-duplicate suppression gate

    void validate() const {
        if (cruise_speed <= 0 || comfort_decel <= 0 || emergency_decel <= 0 || max_accel <= 0 ||
            horizon_s <= 0 || prediction_dt <= 0 || corridor_margin < 0 || time_headway_s <= 0 ||
            standoff_m < 0 || coast_limit < 0 || history_window < 2)
            throw std::invalid_argument("PolicyConfig: non-positive parameter");
        if (emergency_decel < comfort_decel)
            throw std::invalid_argument("PolicyConfig: emergency must be >= comfort");
    }
};

// Longitudinal acceleration response, clamped to the actuator envelope.
struct Command {
    double acceleration = 0.0;  // m/s^2 in [-8, +4]
};

struct Track {
    std::uint64_t track_id = 0;
    Pose pose;                       // last perceived pose; coasts on misses
    ObjectClass object_class = ObjectClass::Vehicle;
    std::vector<std::pair<double, Vec2>> history;  // observed (time, position), ring buffer
    int age = 0;     // number of observations
    int misses = 0;  // consecutive frames without an update
    std::optional<Vec2> velocity_estimate;
};

// Least-squares slope of the observed positions against time over the ring
// buffer. Unknown until the track has two observations.
inline std::optional<Vec2> estimate_velocity(const Track& track) {
    if (track.age < 2 || track.history.size() < 2) return std::nullopt;
    const std::size_t n = track.history.size();
    double mean_t = 0.0;
    Vec2 mean_p;
    for (const auto& [t, p] : track.history) {
        mean_t += t;
        mean_p = mean_p + p;
    }
    mean_t /= static_cast<double>(n);
    mean_p = mean_p * (1.0 / static_cast<double>(n));
    double stt = 0.0;
    Vec2 stp;
    for (const auto& [t, p] : track.history) {
        const double dt = t - mean_t;
        stt += dt * dt;
        stp = stp + (p - mean_p) * dt;
    }
    if (stt <= 0.0) return std::nullopt;
    return stp * (1.0 / stt);
}

using TrackMap = std::map<std::uint64_t, Track>;

// Track maintenance. Association is by published track id only: no spatial
// re-association, so an id change starts a brand-new track. Matched tracks
// append history and reset misses; unmatched tracks coast (position
// extrapolated by the last velocity estimate when known, held otherwise) and
// are dropped once misses exceed the coast limit. A new detection also
// retires any track left unmatched this frame within the dedup radius: the
// perception evidently re-labeled that object, and keeping the stale twin
// would double-count it.
inline void update_tracks(TrackMap& tracks, const ObjectMap& om, double frame_dt,
                          const PolicyConfig& cfg) {
    std::vector<std::uint64_t> unmatched_old;
    std::vector<const PerceivedObject*> fresh;

    // Update matched tracks, collect new detections.
    std::map<std::uint64_t, const PerceivedObject*> by_id;
    for (const PerceivedObject& po : om.objects) by_id[po.track_id] = &po;

    for (auto& [id, track] : tracks) {
        const auto it = by_id.find(id);
        if (it == by_id.end()) {
            track.misses += 1;
            if (track.velocity_estimate)
                track.pose.position = track.pose.position + *track.velocity_estimate * frame_dt;
            unmatched_old.push_back(id);
        } else {
            const PerceivedObject& po = *it->second;
            track.pose = po.pose;
            track.object_class = po.object_class;
            track.misses = 0;
            track.age += 1;
            track.history.emplace_back(om.time, po.pose.position);
            if (track.history.size() > static_cast<std::size_t>(cfg.history_window))
                track.history.erase(track.history.begin());
            track.velocity_estimate = estimate_velocity(track);
            by_id.erase(it);
        }
    }

    for (const auto& [id, po] : by_id) {
        (void)id;
        fresh.push_back(po);
    }

    // Retire stale duplicates superseded by a fresh id.
    for (const PerceivedObject* po : fresh) {
        for (std::uint64_t old_id : unmatched_old) {
            const auto it = tracks.find(old_id);
            if (it == tracks.end()) continue;
            if ((it->second.pose.position - po->pose.position).norm() <= cfg.dedup_radius_m)
                tracks.erase(it);
        }
    }

    for (auto it = tracks.begin(); it != tracks.end();) {
        if (it->second.misses > cfg.coast_limit)
            it = tracks.erase(it);
        else
            ++it;
    }

    for (const PerceivedObject* po : fresh) {
        Track t;
        t.track_id = po->track_id;
        t.pose = po->pose;
        t.object_class = po->object_class;
        t.age = 1;
        t.misses = 0;
        t.history.emplace_back(om.time, po->pose.position);
        tracks.emplace(po->track_id, std::move(t));
    }
}

struct Conflict {
    double stop_distance = 0.0;  // m from the ego front bumper, standoff included
};

namespace detail {

// Route-frame view of the ego used by conflict prediction.
struct EgoRouteView {
    double s_front = 0.0;
    double speed = 0.0;
};

}  // namespace detail

// Constant-velocity conflict prediction against the ego route corridor.
// Unknown velocity is treated as stationary: that assumption is exactly the
// weakness tracking-loss experiments probe. Forward extrapolation further
// requires a mature track (a full fit window of observations); committing a
// braking maneuver to a velocity fitted from a near-empty window would act on
// noise, and a track that keeps being reborn under a new id never earns
// extrapolation at all. Objects estimated to be moving away along the route
// faster than a walking pace are following targets, not incursions; they are
// handled by the time-headway rule so that a lead vehicle far ahead does not
// trigger corridor braking. An incursion point only counts while the ego
// itself can reach it within the horizon at its current speed; beyond that
// the obstacle is not yet a constraint.
inline std::optional<Conflict> predict_conflict(const detail::EgoRouteView& ego,
                                                const Track& track, const Route& route,
                                                const PolicyConfig& cfg) {
    const bool mature = track.age >= cfg.history_window;
    const std::optional<Vec2> trusted =
        mature ? track.velocity_estimate : std::optional<Vec2>{};
    const Vec2 vel = trusted.value_or(Vec2{0.0, 0.0});
    const double corridor_half = 0.5 * route.lane_width() + cfg.corridor_margin;

    double s_track = 0.0, lateral = 0.0;
    route.project(track.pose.position, s_track, lateral);

    double route_speed = 0.0;
    if (trusted) {
        const double heading = route.heading_at(s_track);
        route_speed = vel.dot({std::cos(heading), std::sin(heading)});
    }

    if (route_speed > 1.0 && std::abs(lateral) <= corridor_half && s_track > ego.s_front) {
        // Same-direction lead: enforce the time-headway target by planning a
        // stop behind the lead's predicted stop point.
        const double gap = s_track - ego.s_front;
        if (gap < cfg.time_headway_s * ego.speed) {
            const double lead_stop = s_track + route_speed * route_speed / (2.0 * cfg.comfort_decel);
            return Conflict{lead_stop - ego.s_front - cfg.standoff_m};
        }
        return std::nullopt;
    }

    const int steps = static_cast<int>(std::round(cfg.horizon_s / cfg.prediction_dt));
    double nearest_s = std::numeric_limits<double>::infinity();
    for (int j = 0; j <= steps; ++j) {
        const Vec2 p = track.pose.position + vel * (cfg.prediction_dt * j);
        double s = 0.0, l = 0.0;
        route.project(p, s, l);
        if (std::abs(l) <= corridor_half && s > ego.s_front) nearest_s = std::min(nearest_s, s);
    }
    if (!std::isfinite(nearest_s)) return std::nullopt;
    const double reach = cfg.horizon_s * ego.speed + cfg.standoff_m;
    if (nearest_s - ego.s_front > reach) return std::nullopt;
    return Conflict{nearest_s - ego.s_front - cfg.standoff_m};
}

// Acceleration response. Without conflicts: proportional control toward the
// cruise speed. With conflicts: brake for the nearest stop distance, never
// softer than comfort, never harder than emergency.
inline Command plan_acceleration(double ego_speed, const std::vector<Conflict>& conflicts,
                                 const PolicyConfig& cfg) {
    double a;
    if (conflicts.empty()) {
        a = std::clamp(0.5 * (cfg.cruise_speed - ego_speed), -cfg.comfort_decel, cfg.max_accel);
    } else {
        double s = std::numeric_limits<double>::infinity();
        for (const Conflict& c : conflicts) s = std::min(s, c.stop_distance);
        const double a_req = ego_speed * ego_speed / (2.0 * std::max(s, 0.1));
        a = -std::min(std::max(a_req, cfg.comfort_decel), cfg.emergency_decel);
    }
    return Command{std::clamp(a, -8.0, 4.0)};
}

// The driving policy DP: a pure function of its own track state, the ego
// state, the route and the configuration. It never sees ground truth.
class DrivingPolicy {
public:
    explicit DrivingPolicy(PolicyConfig cfg = {}) : cfg_(cfg) { cfg_.validate(); }

    const PolicyConfig& config() const { return cfg_; }
    const TrackMap& tracks() const { return tracks_; }

    Command step(const ObjectMap& om, const EgoState& ego, const Route& route) {
        const double frame_dt = has_time_ ? om.time - last_time_ : 0.0;
        update_tracks(tracks_, om, frame_dt, cfg_);
        last_time_ = om.time;
        has_time_ = true;

        detail::EgoRouteView view;
        view.s_front = ego.route_s + 0.5 * ego.pose.length;
        view.speed = ego.speed;

        std::vector<Conflict> conflicts;
        for (const auto& [id, track] : tracks_) {
            (void)id;
            if (const auto c = predict_conflict(view, track, route, cfg_)) conflicts.push_back(*c);
        }
        return plan_acceleration(ego.speed, conflicts, cfg_);
    }

private:
    PolicyConfig cfg_;
    TrackMap tracks_;
    double last_time_ = 0.0;
    bool has_time_ = false;
};

}  // namespace pemsim
