#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace pemsim {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    bool operator==(const Vec2& o) const { return x == o.x && y == o.y; }

    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double cross(const Vec2& o) const { return x * o.y - y * o.x; }
    double norm() const { return std::hypot(x, y); }
    double norm_sq() const { return x * x + y * y; }
};

// Wraps an angle to (-pi, pi]. -pi maps to +pi.
inline double wrap_angle(double a) {
    double r = std::fmod(a + kPi, 2.0 * kPi);
    if (r <= 0.0) r += 2.0 * kPi;
    return r - kPi;
}

// Rotates v counterclockwise by angle.
inline Vec2 rotate(const Vec2& v, double angle) {
    const double c = std::cos(angle), s = std::sin(angle);
    return {c * v.x - s * v.y, s * v.x + c * v.y};
}

struct PolarPoint {
    double range = 0.0;    // m, >= 0
    double azimuth = 0.0;  // rad in (-pi, pi], 0 = straight ahead
};

// Position of a world point relative to an observer pose, in polar form.
// An object co-located with the observer yields (0, 0).
inline PolarPoint to_relative_polar(const Vec2& observer_pos, double observer_heading,
                                    const Vec2& point) {
    const Vec2 d = point - observer_pos;
    const double range = d.norm();
    if (range == 0.0) return {0.0, 0.0};
    return {range, wrap_angle(std::atan2(d.y, d.x) - observer_heading)};
}

// Inverse of to_relative_polar.
inline Vec2 from_relative_polar(const Vec2& observer_pos, double observer_heading,
                                const PolarPoint& p) {
    const double a = observer_heading + p.azimuth;
    return {observer_pos.x + p.range * std::cos(a), observer_pos.y + p.range * std::sin(a)};
}

// Convex planar polygon, vertices in counterclockwise order.
using Polygon = std::vector<Vec2>;

// Oriented bounding rectangle: length along heading, width across.
// Corners counterclockwise starting at front-right.
inline Polygon oriented_rect(const Vec2& center, double heading, double length, double width) {
    const double hl = 0.5 * length, hw = 0.5 * width;
    const std::array<Vec2, 4> local = {Vec2{hl, -hw}, Vec2{hl, hw}, Vec2{-hl, hw}, Vec2{-hl, -hw}};
    Polygon out;
    out.reserve(4);
    for (const Vec2& v : local) out.push_back(center + rotate(v, heading));
    return out;
}

inline double polygon_area(const Polygon& poly) {
    double a = 0.0;
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) a += poly[i].cross(poly[(i + 1) % n]);
    return 0.5 * a;
}

// Separating-axis intersection test for convex polygons.
// Touching boundaries count as intersecting.
inline bool polygons_intersect(const Polygon& a, const Polygon& b) {
    const auto separated_by_edges_of = [](const Polygon& p, const Polygon& q) {
        const size_t n = p.size();
        for (size_t i = 0; i < n; ++i) {
            const Vec2 edge = p[(i + 1) % n] - p[i];
            const Vec2 axis{-edge.y, edge.x};
            double pmin = std::numeric_limits<double>::infinity(), pmax = -pmin;
            double qmin = pmin, qmax = -pmin;
            for (const Vec2& v : p) {
                const double t = axis.dot(v);
                pmin = std::min(pmin, t);
                pmax = std::max(pmax, t);
            }
            for (const Vec2& v : q) {
                const double t = axis.dot(v);
                qmin = std::min(qmin, t);
                qmax = std::max(qmax, t);
            }
            if (pmax < qmin || qmax < pmin) return true;
        }
        return false;
    };
    return !separated_by_edges_of(a, b) && !separated_by_edges_of(b, a);
}

inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    const Vec2 ab = b - a;
    const double len_sq = ab.norm_sq();
    if (len_sq == 0.0) return (p - a).norm();
    const double t = std::clamp((p - a).dot(ab) / len_sq, 0.0, 1.0);
    return (p - (a + ab * t)).norm();
}

// Minimum distance between the boundaries of two convex polygons; 0 if they
// intersect or touch. For disjoint convex polygons the minimum is attained at
// a vertex/edge pair, so scanning those pairs both ways is exact.
inline double polygon_distance(const Polygon& a, const Polygon& b) {
    if (polygons_intersect(a, b)) return 0.0;
    double best = std::numeric_limits<double>::infinity();
    const auto scan = [&best](const Polygon& pts, const Polygon& poly) {
        const size_t n = poly.size();
        for (const Vec2& p : pts)
            for (size_t i = 0; i < n; ++i)
                best = std::min(best, point_segment_distance(p, poly[i], poly[(i + 1) % n]));
    };
    scan(a, b);
    scan(b, a);
    return best;
}

// Clips a convex polygon against the half-plane left of edge (a, b).
inline Polygon clip_halfplane(const Polygon& poly, const Vec2& a, const Vec2& b) {
    Polygon out;
    const size_t n = poly.size();
    const Vec2 edge = b - a;
    const auto inside = [&](const Vec2& p) { return edge.cross(p - a) >= 0.0; };
    for (size_t i = 0; i < n; ++i) {
        const Vec2& cur = poly[i];
        const Vec2& nxt = poly[(i + 1) % n];
        const bool cur_in = inside(cur), nxt_in = inside(nxt);
        if (cur_in) out.push_back(cur);
        if (cur_in != nxt_in) {
            const double denom = edge.cross(nxt - cur);
            if (denom != 0.0) {
                const double t = edge.cross(a - cur) / denom;
                out.push_back(cur + (nxt - cur) * t);
            }
        }
    }
    return out;
}

// Area of the intersection of two convex polygons (Sutherland-Hodgman).
inline double convex_intersection_area(const Polygon& a, const Polygon& b) {
    Polygon clipped = a;
    const size_t n = b.size();
    for (size_t i = 0; i < n && !clipped.empty(); ++i)
        clipped = clip_halfplane(clipped, b[i], b[(i + 1) % n]);
    if (clipped.size() < 3) return 0.0;
    return std::abs(polygon_area(clipped));
}

// Intersection-over-union of two convex polygons. Rejects degenerate input.
inline double iou(const Polygon& a, const Polygon& b) {
    const double area_a = std::abs(polygon_area(a));
    const double area_b = std::abs(polygon_area(b));
    if (area_a <= 0.0 || area_b <= 0.0)
        throw std::invalid_argument("iou: degenerate zero-area polygon");
    const double inter = convex_intersection_area(a, b);
    const double uni = area_a + area_b - inter;
    return inter / uni;
}

inline bool point_in_convex_polygon(const Vec2& p, const Polygon& poly) {
    const size_t n = poly.size();
    for (size_t i = 0; i < n; ++i) {
        const Vec2 edge = poly[(i + 1) % n] - poly[i];
        if (edge.cross(p - poly[i]) < 0.0) return false;
    }
    return true;
}

}  // namespace pemsim
