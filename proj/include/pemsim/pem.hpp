#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "pemsim/rng.hpp"
#include "pemsim/world.hpp"

namespace pemsim {

// Region in ego-relative polar coordinates carrying its own error statistics.
// Intervals are closed at min and open at max, except an azimuth_max of +pi
// which is inclusive so a zone set can cover the full circle. Regions not
// covered by any zone are blind spots.
struct Zone {
    std::string zone_id;
    double azimuth_min = -kPi;
    double azimuth_max = kPi;
    double range_min = 0.0;
    double range_max = std::numeric_limits<double>::infinity();

    bool contains(double range, double azimuth) const {
        if (range < range_min || range >= range_max) return false;
        if (azimuth < azimuth_min) return false;
        if (azimuth < azimuth_max) return true;
        return azimuth == kPi && azimuth_max == kPi;
    }

    void validate() const {
        if (range_min < 0.0 || range_min >= range_max)
            throw std::invalid_argument("Zone '" + zone_id + "': need 0 <= range_min < range_max");
        if (azimuth_min >= azimuth_max || azimuth_min < -kPi || azimuth_max > kPi)
            throw std::invalid_argument("Zone '" + zone_id +
                                        "': need -pi <= azimuth_min < azimuth_max <= pi");
    }
};

// Index of the unique zone containing (range, azimuth), or nullopt for a
// blind spot.
inline std::optional<std::size_t> zone_of(const std::vector<Zone>& zones, double range,
                                          double azimuth) {
    for (std::size_t i = 0; i < zones.size(); ++i)
        if (zones[i].contains(range, azimuth)) return i;
    return std::nullopt;
}

struct FalseNegativeConfig {
    double steady_state_p = 1.0;   // long-run detection probability, [0, 1]
    double mean_sojourn_s = 1.0;   // mean undetected-state dwell, (0, 10] s
};

struct PositionNoiseConfig {
    double sigma_range_frac = 0.0;  // multiplicative noise on range
    double sigma_azimuth_rad = 0.0; // additive noise on azimuth
};

struct TrackingLossConfig {
    double p_tl = 0.0;  // per-frame probability a published id is replaced
};

struct MisclassificationConfig {
    // Row-stochastic confusion matrix, rows/cols indexed Vehicle=0, Pedestrian=1.
    std::array<std::array<double, 2>, 2> confusion = {{{1.0, 0.0}, {0.0, 1.0}}};
};

struct FalsePositiveConfig {
    double rate_per_frame = 0.0;  // Poisson rate of ghost detections per frame
    double p_vehicle = 0.5;       // spawn class distribution
};

// Per-zone, per-condition error generators. Disabled components are identity
// transforms.
struct ErrorGeneratorConfig {
    std::optional<FalseNegativeConfig> false_negative;
    std::optional<PositionNoiseConfig> position_noise;
    std::optional<TrackingLossConfig> tracking_loss;
    std::optional<MisclassificationConfig> misclassification;
    std::optional<FalsePositiveConfig> false_positive;

    void validate() const {
        if (false_negative) {
            if (false_negative->steady_state_p < 0.0 || false_negative->steady_state_p > 1.0)
                throw std::invalid_argument("false_negative.steady_state_p outside [0, 1]");
            if (false_negative->mean_sojourn_s <= 0.0 || false_negative->mean_sojourn_s > 10.0)
                throw std::invalid_argument("false_negative.mean_sojourn_s outside (0, 10]");
        }
        if (position_noise) {
            if (position_noise->sigma_range_frac < 0.0 || position_noise->sigma_azimuth_rad < 0.0)
                throw std::invalid_argument("position_noise sigmas must be non-negative");
        }
        if (tracking_loss && (tracking_loss->p_tl < 0.0 || tracking_loss->p_tl > 1.0))
            throw std::invalid_argument("tracking_loss.p_tl outside [0, 1]");
        if (misclassification) {
            for (const auto& row : misclassification->confusion) {
                double sum = 0.0;
                for (double v : row) {
                    if (v < 0.0 || v > 1.0)
                        throw std::invalid_argument("confusion entries must lie in [0, 1]");
                    sum += v;
                }
                if (std::abs(sum - 1.0) > 1e-9)
                    throw std::invalid_argument("confusion matrix rows must sum to 1");
            }
        }
        if (false_positive && false_positive->rate_per_frame < 0.0)
            throw std::invalid_argument("false_positive.rate_per_frame must be >= 0");
    }
};

// PEM = {T, Z, C}: generator tables T keyed by condition C over zone set Z.
struct PemConfig {
    std::string name = "pem";
    std::vector<Zone> zones;
    std::map<std::string, std::vector<ErrorGeneratorConfig>> condition_tables;
    std::string active_condition = "default";

    const std::vector<ErrorGeneratorConfig>& active_table() const {
        const auto it = condition_tables.find(active_condition);
        if (it == condition_tables.end())
            throw std::invalid_argument("PemConfig: unknown condition '" + active_condition + "'");
        return it->second;
    }

    void validate() const {
        if (zones.empty()) throw std::invalid_argument("PemConfig: zone set is empty");
        for (const Zone& z : zones) z.validate();
        for (std::size_t i = 0; i < zones.size(); ++i)
            for (std::size_t j = i + 1; j < zones.size(); ++j) {
                const Zone &a = zones[i], &b = zones[j];
                const bool az_overlap = a.azimuth_min < b.azimuth_max && b.azimuth_min < a.azimuth_max;
                const bool rg_overlap = a.range_min < b.range_max && b.range_min < a.range_max;
                if (az_overlap && rg_overlap)
                    throw std::invalid_argument("PemConfig: zones '" + a.zone_id + "' and '" +
                                                b.zone_id + "' overlap");
            }
        if (condition_tables.empty())
            throw std::invalid_argument("PemConfig: no condition tables");
        for (const auto& [cond, table] : condition_tables) {
            if (table.size() != zones.size())
                throw std::invalid_argument("PemConfig: condition '" + cond +
                                            "' table size != zone count");
            for (const ErrorGeneratorConfig& g : table) g.validate();
        }
        active_table();
    }
};

// Transition probabilities of the two-state detection chain at frame period
// dt: a = P(detected -> undetected), b = P(undetected -> detected).
// mean_sojourn_s parameterizes the undetected state; the detected-state dwell
// follows from the steady-state constraint. Both are clamped to [0, 1]; the
// stationary P(detected) equals steady_state_p exactly when unclamped.
struct MarkovParams {
    double p_drop = 0.0;      // a
    double p_recover = 1.0;   // b
};

inline MarkovParams markov_params(double steady_state_p, double mean_sojourn_s, double dt) {
    if (steady_state_p <= 0.0) return {1.0, 0.0};
    const double b = std::clamp(dt / mean_sojourn_s, 0.0, 1.0);
    if (steady_state_p >= 1.0) return {0.0, b};
    const double a = std::clamp(b * (1.0 - steady_state_p) / steady_state_p, 0.0, 1.0);
    return {a, b};
}

// Stationary detection probability of the (possibly clamped) chain.
inline double markov_stationary_detected(const MarkovParams& mp) {
    const double denom = mp.p_drop + mp.p_recover;
    if (denom <= 0.0) return mp.p_drop > 0.0 ? 0.0 : 1.0;
    return mp.p_recover / denom;
}

// Advances the chain one frame. Consumes exactly one uniform draw.
inline bool markov_step(bool detected, const MarkovParams& mp, RngStream& rng) {
    const double u = rng.uniform();
    if (detected) return u >= mp.p_drop;
    return u < mp.p_recover;
}

// Multiplicative range noise and additive azimuth noise. Consumes exactly two
// Gaussian draws, plus one more if the perturbed range comes out negative
// (resample once, then clamp to 0).
inline PolarPoint polar_noise(double range, double azimuth, double sigma_range_frac,
                              double sigma_azimuth_rad, RngStream& rng) {
    double r = range * (1.0 + sigma_range_frac * rng.gaussian());
    const double az = wrap_angle(azimuth + sigma_azimuth_rad * rng.gaussian());
    if (r < 0.0) {
        r = range * (1.0 + sigma_range_frac * rng.gaussian());
        if (r < 0.0) r = 0.0;
    }
    return {r, az};
}

// With probability p_tl the published identity is replaced by a fresh,
// never-used id. Consumes exactly one uniform draw.
inline std::uint64_t tracking_loss_id(std::uint64_t current_id, double p_tl, RngStream& rng,
                                      std::uint64_t& next_fresh_id) {
    if (rng.uniform() < p_tl) return next_fresh_id++;
    return current_id;
}

// Samples the perceived class from the confusion-matrix row of the true
// class. Consumes exactly one uniform draw.
inline ObjectClass misclassify(ObjectClass true_class, const MisclassificationConfig& cfg,
                               RngStream& rng) {
    const std::size_t row = true_class == ObjectClass::Vehicle ? 0 : 1;
    const double u = rng.uniform();
    return u < cfg.confusion[row][0] ? ObjectClass::Vehicle : ObjectClass::Pedestrian;
}

struct PerceivedObject {
    std::uint64_t track_id = 0;
    Pose pose;
    ObjectClass object_class = ObjectClass::Vehicle;
    // Velocity is deliberately absent: the driving policy estimates it from
    // track history.
};

struct ObjectMap {
    double time = 0.0;
    std::vector<PerceivedObject> objects;
};

// Base for PEM-allocated track ids; ground-truth ids must stay below it.
inline constexpr std::uint64_t kFreshIdBase = 1'000'000;

struct ObjectPemState {
    bool detected = true;          // current Markov chain state
    bool has_published = false;    // object was ever emitted
    std::uint64_t published_id = 0;
};

// Episode-local PEM state: one chain per ground-truth object ever seen inside
// zone coverage, plus the fresh-id allocator. Track ids are never reused
// within an episode.
struct PemState {
    double dt = 0.1;
    std::map<std::uint64_t, ObjectPemState> objects;
    std::uint64_t next_fresh_id = kFreshIdBase;
};

inline PemState make_pem_state(double dt) {
    PemState s;
    s.dt = dt;
    return s;
}

// Ghost detections: count ~ Poisson(rate), positions uniform over the zone's
// (azimuth, range) region, class from the spawn distribution with
// class-typical dimensions. Draws: 1 for the count + 3 per ghost.
inline std::vector<PerceivedObject> spawn_false_positives(const Zone& zone,
                                                          const FalsePositiveConfig& cfg,
                                                          const EgoState& ego, RngStream& rng,
                                                          std::uint64_t& next_fresh_id) {
    std::vector<PerceivedObject> out;
    const int count = rng.poisson(cfg.rate_per_frame);
    out.reserve(static_cast<std::size_t>(count));
    const double range_cap = std::min(zone.range_max, 1e4);
    for (int i = 0; i < count; ++i) {
        const double az = rng.uniform(zone.azimuth_min, zone.azimuth_max);
        const double range = rng.uniform(zone.range_min, range_cap);
        const ObjectClass cls =
            rng.uniform() < cfg.p_vehicle ? ObjectClass::Vehicle : ObjectClass::Pedestrian;
        PerceivedObject ghost;
        ghost.track_id = next_fresh_id++;
        ghost.object_class = cls;
        class_dimensions(cls, ghost.pose.length, ghost.pose.width, ghost.pose.height);
        ghost.pose.position = from_relative_polar(ego.pose.position, ego.pose.heading, {range, az});
        ghost.pose.heading = ego.pose.heading;
        out.push_back(ghost);
    }
    return out;
}

// Per-object outcome of one apply_pem call, used by the metrics layer to
// relate the object map back to ground truth. Not visible to the policy.
enum class DetectionStatus { Blind, Dropped, Detected };

struct PemFrameInfo {
    std::map<std::uint64_t, DetectionStatus> status;  // keyed by ground-truth id
};

// One frame of the perception error model: ground truth in, object map out.
// Objects are processed in ascending ground-truth id order and appended
// before zone false positives, so output order is a pure function of inputs.
inline std::pair<ObjectMap, PemFrameInfo> apply_pem(const PemConfig& config, PemState& state,
                                                    const WorldFrame& frame, RngStream& rng) {
    const std::vector<ErrorGeneratorConfig>& table = config.active_table();
    ObjectMap om;
    om.time = frame.time;
    PemFrameInfo info;

    std::vector<const GroundTruthObject*> ordered;
    ordered.reserve(frame.objects.size());
    for (const GroundTruthObject& o : frame.objects) ordered.push_back(&o);
    std::sort(ordered.begin(), ordered.end(),
              [](const GroundTruthObject* a, const GroundTruthObject* b) { return a->id < b->id; });

    for (const GroundTruthObject* obj : ordered) {
        if (obj->id >= kFreshIdBase)
            throw std::invalid_argument("apply_pem: ground-truth id collides with fresh-id range");
        const PolarPoint polar = relative_polar(frame.ego, obj->pose);
        const auto zidx = zone_of(config.zones, polar.range, polar.azimuth);
        if (!zidx) {
            info.status[obj->id] = DetectionStatus::Blind;
            continue;
        }
        const ErrorGeneratorConfig& gen = table[*zidx];

        bool detected = true;
        if (gen.false_negative) {
            const MarkovParams mp = markov_params(gen.false_negative->steady_state_p,
                                                  gen.false_negative->mean_sojourn_s, state.dt);
            auto it = state.objects.find(obj->id);
            if (it == state.objects.end()) {
                // First sighting: draw the initial state from the stationary
                // distribution to avoid startup bias in short episodes.
                ObjectPemState os;
                os.detected = rng.uniform() < markov_stationary_detected(mp);
                it = state.objects.emplace(obj->id, os).first;
            } else {
                it->second.detected = markov_step(it->second.detected, mp, rng);
            }
            detected = it->second.detected;
        } else {
            auto it = state.objects.find(obj->id);
            if (it == state.objects.end()) it = state.objects.emplace(obj->id, ObjectPemState{}).first;
            it->second.detected = true;
        }

        if (!detected) {
            info.status[obj->id] = DetectionStatus::Dropped;
            continue;
        }

        // With noise disabled the pose passes through bit-exactly; only a
        // perturbed measurement goes back through the polar transform.
        Vec2 perceived_position = obj->pose.position;
        if (gen.position_noise) {
            const PolarPoint perceived_polar =
                polar_noise(polar.range, polar.azimuth, gen.position_noise->sigma_range_frac,
                            gen.position_noise->sigma_azimuth_rad, rng);
            perceived_position = from_relative_polar(frame.ego.pose.position,
                                                     frame.ego.pose.heading, perceived_polar);
        }

        ObjectClass cls = obj->object_class;
        if (gen.misclassification) cls = misclassify(cls, *gen.misclassification, rng);

        ObjectPemState& os = state.objects[obj->id];
        if (!os.has_published) {
            os.has_published = true;
            os.published_id = obj->id;
        } else if (gen.tracking_loss) {
            os.published_id = tracking_loss_id(os.published_id, gen.tracking_loss->p_tl, rng,
                                               state.next_fresh_id);
        }

        PerceivedObject po;
        po.track_id = os.published_id;
        po.object_class = cls;
        po.pose = obj->pose;  // heading and dimensions pass through unperturbed
        po.pose.position = perceived_position;
        om.objects.push_back(po);
        info.status[obj->id] = DetectionStatus::Detected;
    }

    for (std::size_t z = 0; z < config.zones.size(); ++z) {
        if (!table[z].false_positive || table[z].false_positive->rate_per_frame <= 0.0) continue;
        auto ghosts = spawn_false_positives(config.zones[z], *table[z].false_positive, frame.ego,
                                            rng, state.next_fresh_id);
        om.objects.insert(om.objects.end(), ghosts.begin(), ghosts.end());
    }

    return {std::move(om), std::move(info)};
}

// --- Common configurations -------------------------------------------------

inline Zone full_coverage_zone() {
    Zone z;
    z.zone_id = "full";
    return z;
}

inline PemConfig make_perfect_pem() {
    PemConfig c;
    c.name = "perfect";
    c.zones = {full_coverage_zone()};
    c.condition_tables["default"] = {ErrorGeneratorConfig{}};
    return c;
}

inline PemConfig make_markov_pem(double steady_state_p, double mean_sojourn_s) {
    PemConfig c;
    std::ostringstream name;
    name << "markov_p" << steady_state_p << "_sj" << mean_sojourn_s;
    c.name = name.str();
    c.zones = {full_coverage_zone()};
    ErrorGeneratorConfig g;
    g.false_negative = FalseNegativeConfig{steady_state_p, mean_sojourn_s};
    c.condition_tables["default"] = {g};
    return c;
}

inline PemConfig make_noise_pem(double sigma_range_frac, double sigma_azimuth_rad) {
    PemConfig c;
    std::ostringstream name;
    name << "noise_d" << sigma_range_frac << "_az" << sigma_azimuth_rad;
    c.name = name.str();
    c.zones = {full_coverage_zone()};
    ErrorGeneratorConfig g;
    g.position_noise = PositionNoiseConfig{sigma_range_frac, sigma_azimuth_rad};
    c.condition_tables["default"] = {g};
    return c;
}

inline PemConfig make_tracking_loss_pem(double p_tl) {
    PemConfig c;
    std::ostringstream name;
    name << "tracking_loss_" << p_tl;
    c.name = name.str();
    c.zones = {full_coverage_zone()};
    ErrorGeneratorConfig g;
    g.tracking_loss = TrackingLossConfig{p_tl};
    c.condition_tables["default"] = {g};
    return c;
}

// Zone set with no coverage at all: every object is in a blind spot.
inline PemConfig make_blind_pem() {
    PemConfig c;
    c.name = "blind";
    Zone z;
    z.zone_id = "pinhole";
    z.range_min = 0.0;
    z.range_max = 1e-6;
    c.zones = {z};
    c.condition_tables["default"] = {ErrorGeneratorConfig{}};
    return c;
}

}  // namespace pemsim
