#pragma once

#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "pemsim/pem.hpp"
#include "pemsim/policy.hpp"
#include "pemsim/scenario.hpp"
#include "pemsim/world.hpp"

namespace pemsim {

// Fixed-step clock. Time is derived from the frame index, never integrated,
// so it carries no accumulated float drift.
struct SimClock {
    int frame_index = 0;
    double dt = 0.1;

    double time() const { return frame_index * dt; }
};

enum class EpisodeOutcome { GoalReached, Collision, Timeout };

inline const char* to_string(EpisodeOutcome o) {
    switch (o) {
        case EpisodeOutcome::GoalReached: return "goal_reached";
        case EpisodeOutcome::Collision: return "collision";
        case EpisodeOutcome::Timeout: return "timeout";
    }
    return "?";
}

struct FrameRecord {
    WorldFrame world;        // ground truth at the frame start
    ObjectMap object_map;    // what the PEM reported
    PemFrameInfo pem_info;   // ground-truth provenance for metrics
    double command = 0.0;    // commanded longitudinal acceleration
    EgoState ego_after;      // ego after integration
};

struct EpisodeLog {
    std::string scenario_id;
    std::string pem_descriptor;
    std::uint64_t seed = 0;
    double dt = 0.1;
    std::vector<FrameRecord> frames;
    EpisodeOutcome outcome = EpisodeOutcome::Timeout;
    std::optional<std::uint64_t> collided_actor;
};

// Point-mass longitudinal step along the route. Speed clamps at zero (no
// reverse); displacement uses the trapezoid of the clamped speeds; heading
// follows the route tangent.
inline EgoState integrate_ego(const EgoState& state, double accel_command, double dt,
                              const Route& route) {
    const double a = std::clamp(accel_command, -8.0, 4.0);
    const double new_speed = std::max(0.0, state.speed + a * dt);
    const double displacement = 0.5 * (state.speed + new_speed) * dt;

    EgoState next = state;
    next.speed = new_speed;
    next.acceleration = a;
    next.route_s = state.route_s + displacement;
    next.pose.position = route.position_at(next.route_s);
    next.pose.heading = route.heading_at(next.route_s);
    return next;
}

// Separating-axis collision check of the ego footprint against each actor
// footprint. Touching edges count as collision. Returns the first colliding
// actor id in input order.
inline std::optional<std::uint64_t> check_collision(const Polygon& ego_footprint,
                                                    const std::vector<GroundTruthObject>& actors) {
    for (const GroundTruthObject& actor : actors)
        if (polygons_intersect(ego_footprint, actor.pose.footprint())) return actor.id;
    return std::nullopt;
}

namespace detail {

inline bool goal_satisfied(const GoalCondition& goal, const ScenarioDefinition& def,
                           const EgoState& ego, const std::vector<GroundTruthObject>& actors) {
    if (goal.kind == GoalKind::PassedPoint) {
        double s = 0.0, l = 0.0;
        def.route.project({goal.pass_s, 0.0}, s, l);
        return ego.route_s >= s;
    }
    for (const GroundTruthObject& actor : actors) {
        if (actor.id != goal.actor_id) continue;
        if (ego.speed > 1e-3 || actor.velocity.norm() > 1e-3) return false;
        double s_actor = 0.0, l = 0.0;
        def.route.project(actor.pose.position, s_actor, l);
        const double gap =
            (s_actor - 0.5 * actor.pose.length) - (ego.route_s + 0.5 * ego.pose.length);
        return gap > 0.0 && gap <= goal.max_gap;
    }
    return false;
}

}  // namespace detail

// One closed-loop realization. Deterministic: identical inputs, including the
// seed, produce an identical log. Per-frame pipeline order is exactly
// build world -> apply_pem -> policy step -> integrate ego -> collision check.
inline EpisodeLog run_episode(const ScenarioDefinition& scenario, const PemConfig& pem,
                              const PolicyConfig& policy_cfg, std::uint64_t seed,
                              double dt = 0.1) {
    pem.validate();
    EpisodeLog log;
    log.scenario_id = to_string(scenario.id);
    log.pem_descriptor = pem.name;
    log.seed = seed;
    log.dt = dt;

    RngStream rng(seed);
    PemState pem_state = make_pem_state(dt);
    DrivingPolicy policy(policy_cfg);
    EgoState ego = initial_ego_state(scenario);
    std::vector<ActorRuntime> runtimes(scenario.actors.size());

    const int max_frames = static_cast<int>(std::round(scenario.max_duration_s / dt));
    log.frames.reserve(static_cast<std::size_t>(max_frames));

    SimClock clock{0, dt};
    for (clock.frame_index = 0; clock.frame_index < max_frames; ++clock.frame_index) {
        const double t = clock.time();

        WorldFrame world;
        world.time = t;
        world.ego = ego;
        world.objects.reserve(scenario.actors.size());
        for (std::size_t i = 0; i < scenario.actors.size(); ++i)
            world.objects.push_back(eval_actor(scenario.actors[i], t, ego, runtimes[i]));

        auto [om, pem_info] = apply_pem(pem, pem_state, world, rng);
        const Command cmd = policy.step(om, ego, scenario.route);
        const EgoState ego_after = integrate_ego(ego, cmd.acceleration, dt, scenario.route);

        FrameRecord rec;
        rec.world = std::move(world);
        rec.object_map = std::move(om);
        rec.pem_info = std::move(pem_info);
        rec.command = cmd.acceleration;
        rec.ego_after = ego_after;
        log.frames.push_back(std::move(rec));

        // Collision and goal are evaluated at the post-integration instant.
        const double t_next = (clock.frame_index + 1) * dt;
        std::vector<GroundTruthObject> actors_next;
        actors_next.reserve(scenario.actors.size());
        for (std::size_t i = 0; i < scenario.actors.size(); ++i)
            actors_next.push_back(eval_actor(scenario.actors[i], t_next, ego_after, runtimes[i]));

        if (const auto hit = check_collision(ego_after.pose.footprint(), actors_next)) {
            log.outcome = EpisodeOutcome::Collision;
            log.collided_actor = *hit;
            return log;
        }
        if (detail::goal_satisfied(scenario.goal, scenario, ego_after, actors_next)) {
            log.outcome = EpisodeOutcome::GoalReached;
            return log;
        }
        ego = ego_after;
    }
    log.outcome = EpisodeOutcome::Timeout;
    return log;
}

// Debug serialization: one structured-text line per frame, preceded by a
// header line. Byte-stable for identical logs.
inline std::string to_log_lines(const EpisodeLog& log) {
    std::ostringstream out;
    out.precision(17);
    out << "header scenario=" << log.scenario_id << " pem=" << log.pem_descriptor
        << " seed=" << log.seed << " dt=" << log.dt << " outcome=" << to_string(log.outcome);
    if (log.collided_actor) out << " collided_actor=" << *log.collided_actor;
    out << "\n";
    for (std::size_t k = 0; k < log.frames.size(); ++k) {
        const FrameRecord& f = log.frames[k];
        out << "frame " << k << " t=" << f.world.time << " ego=(" << f.world.ego.pose.position.x
            << "," << f.world.ego.pose.position.y << ",v=" << f.world.ego.speed << ")";
        out << " gt=[";
        for (std::size_t i = 0; i < f.world.objects.size(); ++i) {
            const GroundTruthObject& o = f.world.objects[i];
            if (i) out << ";";
            out << o.id << ":" << to_string(o.object_class) << ":(" << o.pose.position.x << ","
                << o.pose.position.y << ")";
        }
        out << "] om=[";
        for (std::size_t i = 0; i < f.object_map.objects.size(); ++i) {
            const PerceivedObject& o = f.object_map.objects[i];
            if (i) out << ";";
            out << o.track_id << ":" << to_string(o.object_class) << ":(" << o.pose.position.x
                << "," << o.pose.position.y << ")";
        }
        out << "] cmd=" << f.command << " ego_after=(" << f.ego_after.pose.position.x << ","
            << f.ego_after.pose.position.y << ",v=" << f.ego_after.speed << ")\n";
    }
    return out.str();
}

}  // namespace pemsim
