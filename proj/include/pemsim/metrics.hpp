#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pemsim/sim.hpp"

namespace pemsim {

// Minimum Euclidean distance between footprint boundaries; 0 when they
// intersect or touch.
inline double spatial_clearance(const Polygon& a, const Polygon& b) {
    return polygon_distance(a, b);
}

// Time headway to an obstacle: gap over speed, floored at 0.1 m/s and capped
// at 60 s for reporting.
inline double temporal_clearance(double gap_m, double ego_speed) {
    return std::min(gap_m / std::max(ego_speed, 0.1), 60.0);
}

struct ActorMetrics {
    double min_spatial_m = std::numeric_limits<double>::infinity();
    double min_temporal_s = 60.0;
    double min_ttc_s = 60.0;
    std::optional<double> detection_frequency;
    double max_nondetection_s = 0.0;
};

struct EpisodeMetrics {
    double min_spatial_m = std::numeric_limits<double>::infinity();
    double min_temporal_s = 60.0;
    double min_ttc_s = 60.0;  // secondary: gap over closing speed
    bool collided = false;
    std::optional<double> detection_frequency;  // primary actor
    double max_nondetection_s = 0.0;            // primary actor
    EpisodeOutcome outcome = EpisodeOutcome::Timeout;
    std::map<std::uint64_t, ActorMetrics> per_actor;
};

// Detection statistics for one actor over a log: relative detection frequency
// and the longest non-detection interval, both counted only over frames where
// the actor lies inside zone coverage so blind-spot geometry does not
// contaminate the temporal-error statistics.
inline std::pair<std::optional<double>, double> detection_stats(const EpisodeLog& log,
                                                                std::uint64_t actor_id) {
    std::size_t covered = 0, detected = 0;
    std::size_t run = 0, max_run = 0;
    for (const FrameRecord& f : log.frames) {
        const auto it = f.pem_info.status.find(actor_id);
        if (it == f.pem_info.status.end() || it->second == DetectionStatus::Blind) continue;
        ++covered;
        if (it->second == DetectionStatus::Detected) {
            ++detected;
            run = 0;
        } else {
            ++run;
            max_run = std::max(max_run, run);
        }
    }
    if (covered == 0) return {std::nullopt, 0.0};
    return {static_cast<double>(detected) / static_cast<double>(covered),
            static_cast<double>(max_run) * log.dt};
}

// Full per-episode safety metrics from a log. The primary actor (lowest id)
// provides the headline detection statistics.
inline EpisodeMetrics compute_metrics(const EpisodeLog& log) {
    EpisodeMetrics m;
    m.outcome = log.outcome;
    m.collided = log.outcome == EpisodeOutcome::Collision;

    std::map<std::uint64_t, double> prev_gap;
    for (const FrameRecord& f : log.frames) {
        const Polygon ego_fp = f.world.ego.pose.footprint();
        for (const GroundTruthObject& actor : f.world.objects) {
            ActorMetrics& am = m.per_actor[actor.id];
            const double gap = spatial_clearance(ego_fp, actor.pose.footprint());
            am.min_spatial_m = std::min(am.min_spatial_m, gap);
            am.min_temporal_s =
                std::min(am.min_temporal_s, temporal_clearance(gap, f.world.ego.speed));
            const auto pit = prev_gap.find(actor.id);
            if (pit != prev_gap.end()) {
                const double closing = (pit->second - gap) / log.dt;
                if (closing > 0.1)
                    am.min_ttc_s = std::min(am.min_ttc_s, std::min(gap / closing, 60.0));
            }
            prev_gap[actor.id] = gap;
        }
    }
    for (auto& [id, am] : m.per_actor) {
        const auto [freq, max_gap] = detection_stats(log, id);
        am.detection_frequency = freq;
        am.max_nondetection_s = max_gap;
        if (log.collided_actor && *log.collided_actor == id) am.min_spatial_m = 0.0;
        m.min_spatial_m = std::min(m.min_spatial_m, am.min_spatial_m);
        m.min_temporal_s = std::min(m.min_temporal_s, am.min_temporal_s);
        m.min_ttc_s = std::min(m.min_ttc_s, am.min_ttc_s);
    }
    if (m.collided) m.min_spatial_m = 0.0;
    if (!m.per_actor.empty()) {
        const ActorMetrics& primary = m.per_actor.begin()->second;
        m.detection_frequency = primary.detection_frequency;
        m.max_nondetection_s = primary.max_nondetection_s;
    }
    if (!std::isfinite(m.min_spatial_m)) m.min_spatial_m = 0.0;
    return m;
}

struct DistributionSummary {
    double min = 0.0, q1 = 0.0, median = 0.0, q3 = 0.0, max = 0.0;
};

// Nearest-rank quantile over a sorted copy; permutation invariant.
inline DistributionSummary summarize(std::vector<double> values) {
    DistributionSummary s;
    if (values.empty()) return s;
    std::sort(values.begin(), values.end());
    const auto rank = [&](double q) {
        const std::size_t n = values.size();
        std::size_t r = static_cast<std::size_t>(std::ceil(q * static_cast<double>(n)));
        r = std::clamp<std::size_t>(r, 1, n);
        return values[r - 1];
    };
    s.min = values.front();
    s.q1 = rank(0.25);
    s.median = rank(0.5);
    s.q3 = rank(0.75);
    s.max = values.back();
    return s;
}

struct ExperimentSummary {
    std::string cell_id;
    std::map<std::string, double> cell_params;
    std::size_t run_count = 0;
    double success_rate = 0.0;  // fraction of runs without collision
    DistributionSummary min_spatial_m;
    DistributionSummary min_temporal_s;
    DistributionSummary detection_frequency;  // over runs where defined
    DistributionSummary max_nondetection_s;
};

// Aggregates per-episode metrics for one cell of the experiment grid.
inline ExperimentSummary aggregate(const std::vector<EpisodeMetrics>& runs,
                                   const std::string& cell_id,
                                   const std::map<std::string, double>& cell_params) {
    if (runs.empty()) throw std::invalid_argument("aggregate: empty run collection");
    ExperimentSummary s;
    s.cell_id = cell_id;
    s.cell_params = cell_params;
    s.run_count = runs.size();

    std::size_t collisions = 0;
    std::vector<double> spatial, temporal, freq, nondet;
    for (const EpisodeMetrics& m : runs) {
        if (m.collided) ++collisions;
        spatial.push_back(m.min_spatial_m);
        temporal.push_back(m.min_temporal_s);
        if (m.detection_frequency) freq.push_back(*m.detection_frequency);
        nondet.push_back(m.max_nondetection_s);
    }
    s.success_rate = 1.0 - static_cast<double>(collisions) / static_cast<double>(runs.size());
    s.min_spatial_m = summarize(std::move(spatial));
    s.min_temporal_s = summarize(std::move(temporal));
    s.detection_frequency = summarize(std::move(freq));
    s.max_nondetection_s = summarize(std::move(nondet));
    return s;
}

}  // namespace pemsim
