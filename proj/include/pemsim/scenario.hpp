#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "pemsim/world.hpp"

namespace pemsim {

enum class ScenarioId { TC1, TC2, TC3, TC4, TC5 };

inline const char* to_string(ScenarioId id) {
    switch (id) {
        case ScenarioId::TC1: return "TC1";
        case ScenarioId::TC2: return "TC2";
        case ScenarioId::TC3: return "TC3";
        case ScenarioId::TC4: return "TC4";
        case ScenarioId::TC5: return "TC5";
    }
    return "?";
}

inline std::optional<ScenarioId> scenario_from_string(const std::string& s) {
    if (s == "TC1") return ScenarioId::TC1;
    if (s == "TC2") return ScenarioId::TC2;
    if (s == "TC3") return ScenarioId::TC3;
    if (s == "TC4") return ScenarioId::TC4;
    if (s == "TC5") return ScenarioId::TC5;
    return std::nullopt;
}

struct RoadLayout {
    double length = 300.0;      // m, straight segment along +x
    double lane_width = 3.5;    // m
    std::optional<double> stop_line_s;  // m, traffic-light stop line (TC1-3)
};

// Lead vehicle: cruises at `speed`, then decelerates at `decel` so its front
// bumper comes to rest at the stop line.
struct LeadVehicleScript {
    double start_s = 150.0;
    double speed = 10.0;
    double decel = 3.0;
    double stop_center_s = 277.75;
};

struct StandingPedestrianScript {
    double s = 80.0;
    double lateral = 0.0;
};

// Pedestrian standing off the road who starts crossing perpendicular to the
// ego lane once the ego closes within `trigger_gap`, then stops on the far
// side.
struct CrossingPedestrianScript {
    double s = 80.0;
    double start_lateral = -5.25;
    double end_lateral = 4.0;
    double walk_speed = 1.5;
    double trigger_gap = 40.0;
};

struct ActorScript {
    std::uint64_t id = 1;
    ObjectClass object_class = ObjectClass::Vehicle;
    std::variant<LeadVehicleScript, StandingPedestrianScript, CrossingPedestrianScript> motion;
};

enum class GoalKind {
    StoppedBehindActor,  // ego and actor at rest, ego within 30 m behind
    PassedPoint,         // ego center beyond a fixed arc position
};

struct GoalCondition {
    GoalKind kind = GoalKind::StoppedBehindActor;
    std::uint64_t actor_id = 1;
    double pass_s = 0.0;
    double max_gap = 30.0;
};

struct ScenarioDefinition {
    ScenarioId id = ScenarioId::TC1;
    RoadLayout road;
    Route route;
    double ego_start_s = 0.0;
    double ego_cruise_speed = 13.9;
    std::vector<ActorScript> actors;
    double max_duration_s = 60.0;
    GoalCondition goal;
};

// Per-actor mutable state owned by the running episode (trigger latches).
struct ActorRuntime {
    bool triggered = false;
    double trigger_time = 0.0;
};

namespace detail {

inline GroundTruthObject make_object(std::uint64_t id, ObjectClass cls, const Vec2& pos,
                                     double heading, const Vec2& vel) {
    GroundTruthObject o;
    o.id = id;
    o.object_class = cls;
    class_dimensions(cls, o.pose.length, o.pose.width, o.pose.height);
    o.pose.position = pos;
    o.pose.heading = heading;
    o.velocity = vel;
    return o;
}

}  // namespace detail

// Evaluates an actor script at time t. The runtime latch is advanced for
// trigger-based scripts; evaluation is otherwise closed-form in t.
inline GroundTruthObject eval_actor(const ActorScript& actor, double t, const EgoState& ego,
                                    ActorRuntime& rt) {
    if (const auto* lead = std::get_if<LeadVehicleScript>(&actor.motion)) {
        const double brake_s = lead->stop_center_s - lead->speed * lead->speed / (2.0 * lead->decel);
        const double t_brake = std::max(0.0, (brake_s - lead->start_s) / lead->speed);
        double s = 0.0, v = 0.0;
        if (t <= t_brake) {
            s = lead->start_s + lead->speed * t;
            v = lead->speed;
        } else {
            const double tau = t - t_brake;
            const double t_stop = lead->speed / lead->decel;
            if (tau < t_stop) {
                s = brake_s + lead->speed * tau - 0.5 * lead->decel * tau * tau;
                v = lead->speed - lead->decel * tau;
            } else {
                s = lead->stop_center_s;
                v = 0.0;
            }
        }
        return detail::make_object(actor.id, actor.object_class, {s, 0.0}, 0.0, {v, 0.0});
    }
    if (const auto* ped = std::get_if<StandingPedestrianScript>(&actor.motion)) {
        return detail::make_object(actor.id, actor.object_class, {ped->s, ped->lateral}, kPi / 2,
                                   {0.0, 0.0});
    }
    const auto& cross = std::get<CrossingPedestrianScript>(actor.motion);
    if (!rt.triggered && cross.s - ego.pose.position.x <= cross.trigger_gap) {
        rt.triggered = true;
        rt.trigger_time = t;
    }
    const double dir = cross.end_lateral >= cross.start_lateral ? 1.0 : -1.0;
    double y = cross.start_lateral;
    double vy = 0.0;
    if (rt.triggered) {
        y = cross.start_lateral + dir * cross.walk_speed * (t - rt.trigger_time);
        vy = dir * cross.walk_speed;
        if ((dir > 0 && y >= cross.end_lateral) || (dir < 0 && y <= cross.end_lateral)) {
            y = cross.end_lateral;
            vy = 0.0;
        }
    }
    return detail::make_object(actor.id, actor.object_class, {cross.s, y}, dir * kPi / 2,
                               {0.0, vy});
}

using ScenarioParams = std::map<std::string, double>;

namespace detail {

inline double param_or(const ScenarioParams& p, const std::string& key, double fallback) {
    const auto it = p.find(key);
    return it == p.end() ? fallback : it->second;
}

inline void check_keys(const ScenarioParams& p, std::initializer_list<const char*> allowed) {
    for (const auto& [key, value] : p) {
        (void)value;
        bool ok = false;
        for (const char* a : allowed)
            if (key == a) ok = true;
        if (!ok) throw std::invalid_argument("build_scenario: unknown parameter '" + key + "'");
    }
}

}  // namespace detail

// Constructs a fully concrete scenario from the catalog. Pure: identical
// (scenario_id, params) yield structurally identical definitions.
//
// Parameter families:
//   TC1/TC2/TC3: lead_speed in {7, 10, 15} m/s
//   TC4:         lateral_offset in [-3.5, 3.5] m
//   TC5:         walk_speed in (0, 3] m/s, trigger_gap in [10, 100] m,
//                start_lateral in [-8, -2.5] m
inline ScenarioDefinition build_scenario(ScenarioId id, const ScenarioParams& params = {}) {
    ScenarioDefinition def;
    def.id = id;
    def.road = RoadLayout{};
    def.route = Route({{-10.0, 0.0}, {330.0, 0.0}}, def.road.lane_width);
    def.ego_start_s = 10.0;  // route s of the road origin x=0
    def.ego_cruise_speed = 13.9;
    def.max_duration_s = 60.0;

    switch (id) {
        case ScenarioId::TC1:
        case ScenarioId::TC2:
        case ScenarioId::TC3: {
            detail::check_keys(params, {"lead_speed"});
            const double v = detail::param_or(params, "lead_speed", 10.0);
            if (v != 7.0 && v != 10.0 && v != 15.0)
                throw std::invalid_argument("build_scenario: lead_speed must be 7, 10 or 15");
            def.road.stop_line_s = 280.0;
            ActorScript lead;
            lead.id = 1;
            lead.object_class = ObjectClass::Vehicle;
            LeadVehicleScript script;
            script.start_s = 150.0;
            script.speed = v;
            script.decel = 3.0;
            script.stop_center_s = *def.road.stop_line_s - 4.5 / 2.0;
            lead.motion = script;
            def.actors = {lead};
            def.goal = {GoalKind::StoppedBehindActor, 1, 0.0, 30.0};
            break;
        }
        case ScenarioId::TC4: {
            detail::check_keys(params, {"lateral_offset"});
            const double off = detail::param_or(params, "lateral_offset", 0.0);
            if (off < -3.5 || off > 3.5)
                throw std::invalid_argument("build_scenario: lateral_offset outside [-3.5, 3.5]");
            ActorScript ped;
            ped.id = 1;
            ped.object_class = ObjectClass::Pedestrian;
            ped.motion = StandingPedestrianScript{80.0, off};
            def.actors = {ped};
            def.goal = {GoalKind::StoppedBehindActor, 1, 0.0, 30.0};
            break;
        }
        case ScenarioId::TC5: {
            detail::check_keys(params, {"walk_speed", "trigger_gap", "start_lateral"});
            const double walk = detail::param_or(params, "walk_speed", 1.5);
            const double trigger = detail::param_or(params, "trigger_gap", 40.0);
            const double start_lat = detail::param_or(params, "start_lateral", -5.25);
            if (walk <= 0.0 || walk > 3.0)
                throw std::invalid_argument("build_scenario: walk_speed outside (0, 3]");
            if (trigger < 10.0 || trigger > 100.0)
                throw std::invalid_argument("build_scenario: trigger_gap outside [10, 100]");
            if (start_lat < -8.0 || start_lat > -2.5)
                throw std::invalid_argument("build_scenario: start_lateral outside [-8, -2.5]");
            ActorScript ped;
            ped.id = 1;
            ped.object_class = ObjectClass::Pedestrian;
            ped.motion = CrossingPedestrianScript{80.0, start_lat, 4.0, walk, trigger};
            def.actors = {ped};
            def.goal = {GoalKind::PassedPoint, 1, 80.0 + 20.0, 0.0};
            break;
        }
    }
    return def;
}

// Ego state at episode start: at rest pose on the route, already at cruise
// speed so the approach phase has no startup transient.
inline EgoState initial_ego_state(const ScenarioDefinition& def) {
    EgoState ego;
    ego.route_s = def.ego_start_s;
    ego.pose.position = def.route.position_at(ego.route_s);
    ego.pose.heading = def.route.heading_at(ego.route_s);
    ego.pose.length = 4.5;
    ego.pose.width = 2.0;
    ego.pose.height = 1.5;
    ego.speed = def.ego_cruise_speed;
    ego.acceleration = 0.0;
    return ego;
}

}  // namespace pemsim
