#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "pemsim/geometry.hpp"

namespace pemsim {

enum class ObjectClass { Vehicle, Pedestrian };

inline const char* to_string(ObjectClass c) {
    return c == ObjectClass::Vehicle ? "vehicle" : "pedestrian";
}

// Typical footprint dimensions used for scripted actors and ghost detections.
inline void class_dimensions(ObjectClass c, double& length, double& width, double& height) {
    if (c == ObjectClass::Vehicle) {
        length = 4.5;
        width = 2.0;
        height = 1.6;
    } else {
        length = 0.5;
        width = 0.5;
        height = 1.7;
    }
}

// Planar pose of a bounding box: elevation is fixed at 0, pitch/roll dropped.
struct Pose {
    Vec2 position;
    double heading = 0.0;  // rad, (-pi, pi]
    double length = 1.0;   // m, along heading
    double width = 1.0;    // m
    double height = 1.0;   // m, carried but unused by planar geometry

    void validate() const {
        if (length <= 0.0 || width <= 0.0 || height <= 0.0)
            throw std::invalid_argument("Pose: dimensions must be strictly positive");
        if (heading <= -kPi || heading > kPi)
            throw std::invalid_argument("Pose: heading outside (-pi, pi]");
    }

    Polygon footprint() const { return oriented_rect(position, heading, length, width); }
};

struct GroundTruthObject {
    std::uint64_t id = 0;  // unique within an episode
    Pose pose;
    ObjectClass object_class = ObjectClass::Vehicle;
    Vec2 velocity;  // m/s

    void validate() const {
        pose.validate();
        if (velocity.norm() > 70.0)
            throw std::invalid_argument("GroundTruthObject: velocity above 70 m/s sanity bound");
    }
};

// Reference path the ego follows: a polyline with a lane width. Headings are
// segment tangents; arc length s parameterizes positions along it.
class Route {
public:
    Route() = default;
    Route(std::vector<Vec2> points, double lane_width)
        : points_(std::move(points)), lane_width_(lane_width) {
        if (points_.size() < 2) throw std::invalid_argument("Route: needs at least 2 points");
        if (lane_width_ <= 0.0) throw std::invalid_argument("Route: lane width must be positive");
        cum_.resize(points_.size(), 0.0);
        for (size_t i = 1; i < points_.size(); ++i) {
            const double seg = (points_[i] - points_[i - 1]).norm();
            if (seg <= 0.0) throw std::invalid_argument("Route: duplicate consecutive points");
            cum_[i] = cum_[i - 1] + seg;
        }
    }

    double length() const { return cum_.back(); }
    double lane_width() const { return lane_width_; }

    Vec2 position_at(double s) const {
        const size_t i = segment_index(s);
        const double t = (s - cum_[i]) / (cum_[i + 1] - cum_[i]);
        return points_[i] + (points_[i + 1] - points_[i]) * t;
    }

    double heading_at(double s) const {
        const size_t i = segment_index(s);
        const Vec2 d = points_[i + 1] - points_[i];
        return std::atan2(d.y, d.x);
    }

    // Projects a point onto the route: arc length of the closest path point
    // and signed lateral offset (positive left of travel direction).
    void project(const Vec2& p, double& s, double& lateral) const {
        double best = std::numeric_limits<double>::infinity();
        s = 0.0;
        lateral = 0.0;
        for (size_t i = 0; i + 1 < points_.size(); ++i) {
            const Vec2 a = points_[i], b = points_[i + 1];
            const Vec2 ab = b - a;
            const double t = std::clamp((p - a).dot(ab) / ab.norm_sq(), 0.0, 1.0);
            const Vec2 q = a + ab * t;
            const double d = (p - q).norm();
            if (d < best) {
                best = d;
                s = cum_[i] + t * ab.norm();
                const double side = ab.cross(p - a) >= 0.0 ? 1.0 : -1.0;
                lateral = side * d;
            }
        }
    }

private:
    size_t segment_index(double s) const {
        if (s <= 0.0) return 0;
        if (s >= cum_.back()) return points_.size() - 2;
        size_t lo = 0, hi = points_.size() - 1;
        while (hi - lo > 1) {
            const size_t mid = (lo + hi) / 2;
            (cum_[mid] <= s ? lo : hi) = mid;
        }
        return lo;
    }

    std::vector<Vec2> points_;
    double lane_width_ = 3.5;
    std::vector<double> cum_;
};

struct EgoState {
    Pose pose;
    double speed = 0.0;         // m/s, >= 0 (no reverse)
    double acceleration = 0.0;  // m/s^2, within [-8, +4]
    double route_s = 0.0;       // arc position of the pose center along the route

    void validate() const {
        pose.validate();
        if (speed < 0.0) throw std::invalid_argument("EgoState: negative speed");
        if (acceleration < -8.0 || acceleration > 4.0)
            throw std::invalid_argument("EgoState: acceleration outside [-8, +4]");
    }
};

// Ground truth at one simulation instant.
struct WorldFrame {
    double time = 0.0;  // s
    EgoState ego;
    std::vector<GroundTruthObject> objects;
};

// Range/azimuth of an object relative to the ego, azimuth measured
// counterclockwise from the ego heading.
inline PolarPoint relative_polar(const EgoState& ego, const Pose& obj_pose) {
    return to_relative_polar(ego.pose.position, ego.pose.heading, obj_pose.position);
}

}  // namespace pemsim
