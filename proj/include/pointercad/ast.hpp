#pragma once

#include <optional>
#include <variant>
#include <vector>

#include "mathx.hpp"
#include "tokens.hpp"

namespace pcad {

// Sketch-frame 2D point, optionally snapped to a referenced edge.
struct Point2 {
    double x = 0, y = 0;
    std::optional<EntityRef> snap;

    Vec2 pos() const { return {x, y}; }
    bool operator==(const Point2& o) const {
        if (x != o.x || y != o.y) return false;
        if (snap.has_value() != o.snap.has_value()) return false;
        return !snap || *snap == *o.snap;
    }
};

enum class Orientation { CW, CCW };

struct LineCurve {
    Point2 start;
    bool operator==(const LineCurve& o) const { return start == o.start; }
};

struct ArcCurve {
    Point2 start;
    double sweep_deg = 90.0;  // in (0, 360)
    Orientation orient = Orientation::CCW;
    bool operator==(const ArcCurve& o) const {
        return start == o.start && sweep_deg == o.sweep_deg && orient == o.orient;
    }
};

struct CircleCurve {
    Point2 center;
    double radius = 1.0;
    bool operator==(const CircleCurve& o) const {
        return center == o.center && radius == o.radius;
    }
};

using Curve = std::variant<LineCurve, ArcCurve, CircleCurve>;

inline bool operator==(const Curve& a, const Curve& b) {
    return a.index() == b.index() &&
           std::visit(
               [&](const auto& ca) {
                   using T = std::decay_t<decltype(ca)>;
                   return ca == std::get<T>(b);
               },
               a);
}

// Chained representation: a non-circle curve's end point is the next curve's
// start (wrapping to the loop's first curve). A lone circle is a full loop.
struct Loop {
    std::vector<Curve> curves;
    bool is_circle() const {
        return curves.size() == 1 && std::holds_alternative<CircleCurve>(curves[0]);
    }
    bool operator==(const Loop& o) const { return curves == o.curves; }
};

struct Profile {
    std::vector<Loop> loops;
    bool operator==(const Profile& o) const { return loops == o.loops; }
};

enum class Dir { Xp, Xn, Yp, Yn, Zp, Zn };

inline int dir_token(Dir d) { return kTokDrXp + static_cast<int>(d); }
inline Dir dir_from_token(int t) { return static_cast<Dir>(t - kTokDrXp); }

inline Vec3 dir_vector(Dir d) {
    switch (d) {
        case Dir::Xp: return {1, 0, 0};
        case Dir::Xn: return {-1, 0, 0};
        case Dir::Yp: return {0, 1, 0};
        case Dir::Yn: return {0, -1, 0};
        case Dir::Zp: return {0, 0, 1};
        default: return {0, 0, -1};
    }
}

// Auxiliary in-plane reference direction for each dr symbol.
inline Vec3 dir_auxiliary(Dir d) {
    switch (d) {
        case Dir::Xp: return {0, 1, 0};   // Y+
        case Dir::Xn: return {0, 0, 1};   // Z+
        case Dir::Yp: return {0, 0, 1};   // Z+
        case Dir::Yn: return {1, 0, 0};   // X+
        case Dir::Zp: return {1, 0, 0};   // X+
        default: return {0, 1, 0};        // Y+
    }
}

struct FrameSpec {
    Dir dr = Dir::Zp;
    Point2 origin_hint;       // on the world plane orthogonal to dr
    double rotation_deg = 0;  // CCW about the plane normal
    double scale = 1.0;       // in-plane scale, (0, 2]

    bool operator==(const FrameSpec& o) const {
        return dr == o.dr && origin_hint == o.origin_hint &&
               rotation_deg == o.rotation_deg && scale == o.scale;
    }
};

// Baseline-only explicit placement (Euler Z-Y-X intrinsic + translation);
// set by the legacy decoder in place of a plane pointer.
struct EulerFrame {
    double rz = 0, ry = 0, rx = 0;  // degrees
    Vec3 translation;
    bool operator==(const EulerFrame& o) const {
        return rz == o.rz && ry == o.ry && rx == o.rx && translation == o.translation;
    }
};

struct Sketch {
    EntityRef plane;  // face or base plane
    FrameSpec frame;
    std::vector<Profile> profiles;
    std::optional<EulerFrame> explicit_frame;

    bool operator==(const Sketch& o) const {
        return plane == o.plane && frame == o.frame && profiles == o.profiles &&
               explicit_frame == o.explicit_frame;
    }
};

enum class BoolOp { New, Join, Cut, Intersect };

inline int bool_token(BoolOp b) { return kTokBoNew + static_cast<int>(b); }
inline BoolOp bool_from_token(int t) { return static_cast<BoolOp>(t - kTokBoNew); }

struct ExtrudeSpec {
    double e_p = 1.0;  // distance along +normal, >= 0
    double e_n = 0.0;  // distance along -normal, >= 0
    BoolOp op = BoolOp::New;
    bool operator==(const ExtrudeSpec& o) const {
        return e_p == o.e_p && e_n == o.e_n && op == o.op;
    }
};

struct EPartStep {
    std::vector<Sketch> sketches;
    ExtrudeSpec extrude;
    bool operator==(const EPartStep& o) const {
        return sketches == o.sketches && extrude == o.extrude;
    }
};

struct ChamferStep {
    double distance = 0.1;
    std::vector<EntityRef> edges;
    bool operator==(const ChamferStep& o) const {
        return distance == o.distance && edges == o.edges;
    }
};

struct FilletStep {
    double radius = 0.1;
    std::vector<EntityRef> edges;
    bool operator==(const FilletStep& o) const {
        return radius == o.radius && edges == o.edges;
    }
};

using Step = std::variant<EPartStep, ChamferStep, FilletStep>;

inline bool operator==(const Step& a, const Step& b) {
    return a.index() == b.index() &&
           std::visit(
               [&](const auto& sa) {
                   using T = std::decay_t<decltype(sa)>;
                   return sa == std::get<T>(b);
               },
               a);
}

struct Program {
    std::vector<Step> steps;
    bool operator==(const Program& o) const { return steps == o.steps; }
};

// Base plane stable ids (always present in the face candidate set).
enum BasePlaneId : int { kBaseRight = 0, kBaseFront = 1, kBaseTop = 2 };

inline EntityRef base_plane_ref(BasePlaneId id, int step_index = 0) {
    return {step_index, EntityRef::Kind::BasePlane, static_cast<int>(id)};
}

}  // namespace pcad
