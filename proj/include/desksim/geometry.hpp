#pragma once

#include <algorithm>
#include <cmath>

namespace desksim {

inline constexpr double kPi = 3.14159265358979323846;

struct Vec2 {
    double x = 0.0;
    double y = 0.0;

    Vec2 operator+(const Vec2& o) const { return {x + o.x, y + o.y}; }
    Vec2 operator-(const Vec2& o) const { return {x - o.x, y - o.y}; }
    Vec2 operator*(double s) const { return {x * s, y * s}; }
    double dot(const Vec2& o) const { return x * o.x + y * o.y; }
    double norm() const { return std::sqrt(x * x + y * y); }
    bool operator==(const Vec2& o) const = default;
};

inline double distance(const Vec2& a, const Vec2& b) { return (a - b).norm(); }

// Normalizes an angle into [-pi, pi).
inline double normalize_angle(double theta) {
    double t = std::fmod(theta + kPi, 2.0 * kPi);
    if (t < 0.0) t += 2.0 * kPi;
    return t - kPi;
}

struct Pose2D {
    double x = 0.0;
    double y = 0.0;
    double theta = 0.0;  // normalized to [-pi, pi)

    Vec2 position() const { return {x, y}; }
    bool operator==(const Pose2D& o) const = default;
};

inline Pose2D make_pose(double x, double y, double theta = 0.0) {
    return Pose2D{x, y, normalize_angle(theta)};
}

// Axis-aligned rectangle, lo <= hi on both axes.
struct Rect {
    Vec2 lo;
    Vec2 hi;

    double width() const { return hi.x - lo.x; }
    double height() const { return hi.y - lo.y; }
    double area() const { return width() * height(); }
    Vec2 center() const { return {(lo.x + hi.x) * 0.5, (lo.y + hi.y) * 0.5}; }
    bool valid() const { return lo.x <= hi.x && lo.y <= hi.y; }

    bool contains(const Vec2& p) const {
        return p.x >= lo.x && p.x <= hi.x && p.y >= lo.y && p.y <= hi.y;
    }
    // Strict interior test, used for containment relations.
    bool contains_strictly(const Rect& r) const {
        return r.lo.x > lo.x && r.lo.y > lo.y && r.hi.x < hi.x && r.hi.y < hi.y;
    }
    bool intersects(const Rect& r) const {
        return !(r.lo.x > hi.x || r.hi.x < lo.x || r.lo.y > hi.y || r.hi.y < lo.y);
    }
    Rect inflated(double m) const { return {{lo.x - m, lo.y - m}, {hi.x + m, hi.y + m}}; }

    bool operator==(const Rect& o) const = default;
};

inline Rect rect_from_center(const Vec2& c, double w, double h) {
    return {{c.x - w * 0.5, c.y - h * 0.5}, {c.x + w * 0.5, c.y + h * 0.5}};
}

inline Rect rect_intersection(const Rect& a, const Rect& b) {
    Rect r{{std::max(a.lo.x, b.lo.x), std::max(a.lo.y, b.lo.y)},
           {std::min(a.hi.x, b.hi.x), std::min(a.hi.y, b.hi.y)}};
    if (!r.valid()) return Rect{{0, 0}, {0, 0}};
    return r;
}

inline double overlap_area(const Rect& a, const Rect& b) {
    double w = std::min(a.hi.x, b.hi.x) - std::max(a.lo.x, b.lo.x);
    double h = std::min(a.hi.y, b.hi.y) - std::max(a.lo.y, b.lo.y);
    if (w <= 0.0 || h <= 0.0) return 0.0;
    return w * h;
}

inline double clamp(double v, double lo, double hi) { return std::min(std::max(v, lo), hi); }

inline Vec2 clamp_to(const Vec2& p, const Rect& r) {
    return {clamp(p.x, r.lo.x, r.hi.x), clamp(p.y, r.lo.y, r.hi.y)};
}

// Distance from point p to segment ab.
inline double point_segment_distance(const Vec2& p, const Vec2& a, const Vec2& b) {
    Vec2 ab = b - a;
    double len2 = ab.dot(ab);
    if (len2 <= 0.0) return distance(p, a);
    double t = clamp((p - a).dot(ab) / len2, 0.0, 1.0);
    return distance(p, a + ab * t);
}

// Minimum distance between segments ab and cd.
inline double segment_segment_distance(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    auto orient = [](const Vec2& p, const Vec2& q, const Vec2& r) {
        return (q.x - p.x) * (r.y - p.y) - (q.y - p.y) * (r.x - p.x);
    };
    double o1 = orient(a, b, c), o2 = orient(a, b, d);
    double o3 = orient(c, d, a), o4 = orient(c, d, b);
    if (((o1 > 0) != (o2 > 0)) && ((o3 > 0) != (o4 > 0)) && o1 != o2 && o3 != o4) {
        return 0.0;  // proper crossing
    }
    double d1 = point_segment_distance(a, c, d);
    double d2 = point_segment_distance(b, c, d);
    double d3 = point_segment_distance(c, a, b);
    double d4 = point_segment_distance(d, a, b);
    return std::min(std::min(d1, d2), std::min(d3, d4));
}

// Distance from segment ab to an axis-aligned rect (0 when they touch or overlap).
inline double segment_rect_distance(const Vec2& a, const Vec2& b, const Rect& r) {
    if (r.contains(a) || r.contains(b)) return 0.0;
    Vec2 c0{r.lo.x, r.lo.y}, c1{r.hi.x, r.lo.y}, c2{r.hi.x, r.hi.y}, c3{r.lo.x, r.hi.y};
    double d = segment_segment_distance(a, b, c0, c1);
    d = std::min(d, segment_segment_distance(a, b, c1, c2));
    d = std::min(d, segment_segment_distance(a, b, c2, c3));
    d = std::min(d, segment_segment_distance(a, b, c3, c0));
    return d;
}

inline double rect_rect_distance(const Rect& a, const Rect& b) {
    double dx = std::max({0.0, b.lo.x - a.hi.x, a.lo.x - b.hi.x});
    double dy = std::max({0.0, b.lo.y - a.hi.y, a.lo.y - b.hi.y});
    return std::sqrt(dx * dx + dy * dy);
}

// Swept corridor of an end-effector motion: either a capsule around a segment
// or a rectangle inflated by the same radius (wipe/consolidate regions).
struct Corridor {
    enum class Kind { segment, region };
    Kind kind = Kind::segment;
    Vec2 a, b;    // segment endpoints (kind == segment)
    Rect region;  // kind == region
    double radius = 0.0;
};

inline Corridor segment_corridor(const Vec2& a, const Vec2& b, double radius) {
    Corridor c;
    c.kind = Corridor::Kind::segment;
    c.a = a;
    c.b = b;
    c.radius = radius;
    return c;
}

inline Corridor region_corridor(const Rect& r, double radius) {
    Corridor c;
    c.kind = Corridor::Kind::region;
    c.region = r;
    c.radius = radius;
    return c;
}

inline bool corridors_intersect(const Corridor& p, const Corridor& q) {
    double reach = p.radius + q.radius;
    using K = Corridor::Kind;
    if (p.kind == K::segment && q.kind == K::segment)
        return segment_segment_distance(p.a, p.b, q.a, q.b) <= reach;
    if (p.kind == K::segment && q.kind == K::region)
        return segment_rect_distance(p.a, p.b, q.region) <= reach;
    if (p.kind == K::region && q.kind == K::segment)
        return segment_rect_distance(q.a, q.b, p.region) <= reach;
    return rect_rect_distance(p.region, q.region) <= reach;
}

inline double corridor_point_distance(const Corridor& c, const Vec2& p) {
    if (c.kind == Corridor::Kind::segment) return point_segment_distance(p, c.a, c.b);
    if (c.region.contains(p)) return 0.0;
    Vec2 q = clamp_to(p, c.region);
    return distance(p, q);
}

inline Rect corridor_bounds(const Corridor& c) {
    if (c.kind == Corridor::Kind::segment) {
        Rect r{{std::min(c.a.x, c.b.x), std::min(c.a.y, c.b.y)},
               {std::max(c.a.x, c.b.x), std::max(c.a.y, c.b.y)}};
        return r.inflated(c.radius);
    }
    return c.region.inflated(c.radius);
}

}  // namespace desksim
