#pragma once

#include <variant>

#include "mathx.hpp"

namespace pcad {

struct PlaneSurface {
    Vec3 point;
    Vec3 normal;  // unit
};

struct CylinderSurface {
    Vec3 axis_point;
    Vec3 axis_dir;  // unit
    double radius = 1.0;
};

struct ConeSurface {
    Vec3 apex;
    Vec3 axis_dir;  // unit, from apex into the cone
    double half_angle = 0.25 * kPi;
};

struct TorusSurface {
    Vec3 center;
    Vec3 axis_dir;  // unit
    double major_r = 1.0;
    double minor_r = 0.25;
};

using AnalyticSurface =
    std::variant<PlaneSurface, CylinderSurface, ConeSurface, TorusSurface>;

inline const char* surface_kind(const AnalyticSurface& s) {
    switch (s.index()) {
        case 0: return "plane";
        case 1: return "cylinder";
        case 2: return "cone";
        default: return "torus";
    }
}

inline bool is_plane(const AnalyticSurface& s) {
    return std::holds_alternative<PlaneSurface>(s);
}

// Any unit vector orthogonal to n.
inline Vec3 any_orthogonal(const Vec3& n) {
    Vec3 cand = std::abs(n.x) < 0.9 ? Vec3{1, 0, 0} : Vec3{0, 1, 0};
    return n.cross(cand).normalized();
}

// Gaussian curvature at a surface point.
inline double gaussian_curvature(const AnalyticSurface& s, const Vec3& p) {
    if (std::holds_alternative<PlaneSurface>(s) ||
        std::holds_alternative<CylinderSurface>(s) ||
        std::holds_alternative<ConeSurface>(s))
        return 0.0;
    const auto& t = std::get<TorusSurface>(s);
    Vec3 rel = p - t.center;
    double h = rel.dot(t.axis_dir);
    Vec3 radial = rel - t.axis_dir * h;
    double d = radial.norm();
    if (t.minor_r <= 0) return 0.0;
    // tube angle phi: cos(phi) = (d - major_r) / minor_r
    double cphi = (d - t.major_r) / t.minor_r;
    cphi = std::max(-1.0, std::min(1.0, cphi));
    return cphi / (t.minor_r * (t.major_r + t.minor_r * cphi));
}

inline Vec3 surface_normal(const AnalyticSurface& s, const Vec3& p) {
    if (const auto* pl = std::get_if<PlaneSurface>(&s)) return pl->normal;
    if (const auto* cy = std::get_if<CylinderSurface>(&s)) {
        Vec3 rel = p - cy->axis_point;
        Vec3 radial = rel - cy->axis_dir * rel.dot(cy->axis_dir);
        return radial.normalized();
    }
    if (const auto* co = std::get_if<ConeSurface>(&s)) {
        Vec3 rel = p - co->apex;
        double h = rel.dot(co->axis_dir);
        Vec3 radial = (rel - co->axis_dir * h).normalized();
        // outward normal of a cone with half-angle a: radial*cos(a) - axis*sin(a)
        return (radial * std::cos(co->half_angle) - co->axis_dir * std::sin(co->half_angle))
            .normalized();
    }
    const auto& t = std::get<TorusSurface>(s);
    Vec3 rel = p - t.center;
    double h = rel.dot(t.axis_dir);
    Vec3 radial = rel - t.axis_dir * h;
    Vec3 ring = t.center + radial.normalized() * t.major_r;
    return (p - ring).normalized();
}

// ---------------------------------------------------------------------------
// Edge carrier curves
// ---------------------------------------------------------------------------

struct Line3 {
    Vec3 p0, p1;
    Vec3 dir() const { return (p1 - p0).normalized(); }
    double length() const { return (p1 - p0).norm(); }
};

struct Circle3 {
    Vec3 center;
    Vec3 axis;  // unit
    double radius = 1.0;
};

struct Arc3 {
    Vec3 center;
    Vec3 axis;  // unit
    double radius = 1.0;
    Vec3 start_dir;        // unit, from center to the arc start
    double sweep_rad = 0;  // positive about `axis`
};

struct PolyCurve {
    std::vector<Vec3> pts;
};

using EdgeCurve = std::variant<Line3, Arc3, Circle3, PolyCurve>;

inline const char* curve_kind(const EdgeCurve& c) {
    switch (c.index()) {
        case 0: return "line";
        case 1: return "arc";
        case 2: return "circle";
        default: return "polyline";
    }
}

}  // namespace pcad
