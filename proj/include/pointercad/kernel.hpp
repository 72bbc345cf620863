#pragma once

#include <array>
#include <functional>

#include "ast.hpp"
#include "brep.hpp"
#include "csg.hpp"
#include "grammar.hpp"

namespace pcad {

struct TessConfig {
    int segments = 64;  // segments per full circle
};

// Epsilon inflation of prisms and cutters along their sweep direction keeps
// boolean inputs away from exactly coplanar contacts.
constexpr double kBoolInflate = 1e-5;

struct Frame {
    Vec3 origin;
    Vec3 u{1, 0, 0}, v{0, 1, 0}, w{0, 0, 1};
    double scale = 1.0;

    Vec3 to_world(const Vec2& p) const { return origin + (u * p.x + v * p.y) * scale; }
    Vec2 to_plane(const Vec3& q) const {
        Vec3 rel = q - origin;
        return {rel.dot(u) / scale, rel.dot(v) / scale};
    }
};

// Intrinsic Z-Y-X Euler angles (degrees) for the frame rotation, plus the
// origin as translation; used by the baseline stream layout.
inline EulerFrame frame_to_euler(const Frame& f) {
    EulerFrame e;
    e.translation = f.origin;
    double sy = -f.u.z;
    sy = std::clamp(sy, -1.0, 1.0);
    e.ry = rad2deg(std::asin(sy));
    if (std::abs(sy) < 1.0 - 1e-9) {
        e.rz = rad2deg(std::atan2(f.u.y, f.u.x));
        e.rx = rad2deg(std::atan2(f.v.z, f.w.z));
    } else {
        e.rz = rad2deg(std::atan2(-f.v.x, f.v.y));
        e.rx = 0;
    }
    e.rz = wrap_angle_deg(e.rz);
    e.ry = wrap_angle_deg(e.ry);
    e.rx = wrap_angle_deg(e.rx);
    return e;
}

inline Frame frame_from_euler(const EulerFrame& e) {
    double cz = std::cos(deg2rad(e.rz)), sz = std::sin(deg2rad(e.rz));
    double cy = std::cos(deg2rad(e.ry)), sy = std::sin(deg2rad(e.ry));
    double cx = std::cos(deg2rad(e.rx)), sx = std::sin(deg2rad(e.rx));
    Frame f;
    f.u = {cz * cy, sz * cy, -sy};
    f.v = {cz * sy * sx - sz * cx, sz * sy * sx + cz * cx, cy * sx};
    f.w = {cz * sy * cx + sz * sx, sz * sy * cx - cz * sx, cy * cx};
    f.origin = e.translation;
    return f;
}

// Sketch frame from a target plane and a FrameSpec: W' is the plane normal
// signed to agree with the world direction n of `dr`; U' is the projected
// auxiliary direction; the origin hint lives on the world plane orthogonal to
// n and is projected onto the sketch plane along n.
inline Frame build_frame(const PlaneSurface& plane, const FrameSpec& spec) {
    Vec3 n = dir_vector(spec.dr);
    Vec3 d = dir_auxiliary(spec.dr);
    double dn = plane.normal.dot(n);
    if (std::abs(dn) < 1e-9)
        throw DegenerateDirection("sketch plane normal orthogonal to the dr direction");
    Vec3 w = dn > 0 ? plane.normal : -plane.normal;
    Vec3 up = d - w * d.dot(w);
    if (up.norm() < 1e-9)
        throw DegenerateProjection("auxiliary direction parallel to the sketch normal");
    Vec3 u = up.normalized();
    Vec3 v = w.cross(u);
    Vec3 q = d * spec.origin_hint.x + n.cross(d) * spec.origin_hint.y;
    double t = (plane.point - q).dot(w) / n.dot(w);
    Frame f;
    f.origin = q + n * t;
    double a = deg2rad(spec.rotation_deg);
    f.u = u * std::cos(a) + v * std::sin(a);
    f.v = v * std::cos(a) - u * std::sin(a);
    f.w = w;
    if (!(spec.scale > 0))
        throw MalformedProgram("frame scale must be positive");
    f.scale = spec.scale;
    return f;
}

// ---------------------------------------------------------------------------
// Pointer reference lookup against the pre-step solid
// ---------------------------------------------------------------------------

inline PlaneSurface resolve_plane(const Solid& prev, const EntityRef& ref) {
    if (ref.kind == EntityRef::Kind::BasePlane) {
        if (ref.stable_id < 0 || ref.stable_id > 2)
            throw PointerResolutionFailed("unknown base plane id " +
                                          std::to_string(ref.stable_id));
        return base_plane_surface(static_cast<BasePlaneId>(ref.stable_id));
    }
    if (ref.kind != EntityRef::Kind::Face)
        throw PointerResolutionFailed("sketch plane reference must be a face");
    const BrepFace* f = prev.face_by_id(ref.stable_id);
    if (!f)
        throw PointerResolutionFailed("no face with id " + std::to_string(ref.stable_id));
    const auto* pl = std::get_if<PlaneSurface>(&f->surface);
    if (!pl) throw NonPlanarSketchTarget("face " + std::to_string(ref.stable_id) +
                                         " is not planar");
    PlaneSurface out = *pl;
    out.normal = out.normal * f->orient;
    return out;
}

inline const BrepEdge& resolve_edge(const Solid& prev, const EntityRef& ref) {
    if (ref.kind != EntityRef::Kind::Edge)
        throw PointerResolutionFailed("edge reference expected");
    const BrepEdge* e = prev.edge_by_id(ref.stable_id);
    if (!e)
        throw PointerResolutionFailed("no edge with id " + std::to_string(ref.stable_id));
    return *e;
}

// Nearest point on the carrier of the referenced edge's in-plane projection.
inline Vec2 resolve_snap(const Solid& prev, const Frame& frame, const Point2& p) {
    const BrepEdge& e = resolve_edge(prev, *p.snap);
    Vec2 q{p.x, p.y};
    if (const auto* ln = std::get_if<Line3>(&e.curve)) {
        Vec2 a = frame.to_plane(ln->p0);
        Vec2 b = frame.to_plane(ln->p1);
        Vec2 d = b - a;
        if (d.norm() < 1e-9)
            throw SnapFailure("edge projects to a point on the sketch plane");
        double t = (q - a).dot(d) / d.norm2();
        return a + d * t;
    }
    Vec3 axis;
    Vec3 center;
    double radius = 0;
    if (const auto* ci = std::get_if<Circle3>(&e.curve)) {
        axis = ci->axis;
        center = ci->center;
        radius = ci->radius;
    } else if (const auto* ar = std::get_if<Arc3>(&e.curve)) {
        axis = ar->axis;
        center = ar->center;
        radius = ar->radius;
    } else {
        throw SnapFailure("snap target has no line or circle carrier");
    }
    if (axis.cross(frame.w).norm() > 1e-6)
        throw SnapFailure("circular edge not parallel to the sketch plane");
    Vec2 c2 = frame.to_plane(center);
    Vec2 rel = q - c2;
    if (rel.norm() < 1e-12) throw SnapFailure("point coincides with the circle center");
    return c2 + rel.normalized() * (radius / frame.scale);
}

// ---------------------------------------------------------------------------
// Profile tessellation and triangulation
// ---------------------------------------------------------------------------

struct CurveGeom {
    bool circular = false;
    Vec2 center;      // in sketch coordinates
    double r = 0;     // in sketch coordinates
};

struct LoopPoly {
    std::vector<Vec2> pts;       // closed ring, last point implicitly joins the first
    std::vector<int> seg_curve;  // per segment: source curve index in the loop
    std::vector<CurveGeom> curves;
    double signed_area() const {
        double a = 0;
        for (size_t i = 0; i < pts.size(); ++i) a += pts[i].cross(pts[(i + 1) % pts.size()]);
        return 0.5 * a;
    }
    void reverse() {
        size_t n = pts.size();
        std::vector<Vec2> np(n);
        std::vector<int> ns(n);
        np[0] = pts[0];
        for (size_t k = 1; k < n; ++k) np[k] = pts[n - k];
        // segment k of the reversed ring covers old segment n-1-k
        for (size_t k = 0; k < n; ++k) ns[k] = seg_curve[n - 1 - k];
        pts.swap(np);
        seg_curve.swap(ns);
    }
};

struct Region {
    LoopPoly outer;               // CCW
    std::vector<LoopPoly> holes;  // CW
};

namespace kerneldetail {

inline double cross2(const Vec2& o, const Vec2& a, const Vec2& b) {
    return (a - o).cross(b - o);
}

inline bool point_in_ring(const Vec2& p, const std::vector<Vec2>& ring) {
    bool in = false;
    for (size_t i = 0, j = ring.size() - 1; i < ring.size(); j = i++) {
        if ((ring[i].y > p.y) != (ring[j].y > p.y) &&
            p.x < (ring[j].x - ring[i].x) * (p.y - ring[i].y) / (ring[j].y - ring[i].y) +
                      ring[i].x)
            in = !in;
    }
    return in;
}

inline bool segments_cross(const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& d) {
    double d1 = cross2(c, d, a), d2 = cross2(c, d, b);
    double d3 = cross2(a, b, c), d4 = cross2(a, b, d);
    return ((d1 > 0 && d2 < 0) || (d1 < 0 && d2 > 0)) &&
           ((d3 > 0 && d4 < 0) || (d3 < 0 && d4 > 0));
}

// Arc center for a chord (s -> e) subtending `sweep_deg` with the given
// orientation; tessellation rotates s about the center.
inline Vec2 arc_center(const Vec2& s, const Vec2& e, double sweep_deg, Orientation orient) {
    Vec2 chord = e - s;
    double clen = chord.norm();
    if (clen < 1e-12) throw DegenerateGeometry("arc with coincident endpoints");
    double half = deg2rad(sweep_deg) * 0.5;
    double r = clen / (2.0 * std::sin(half));
    double h = r * std::cos(half);
    Vec2 mid = (s + e) * 0.5;
    Vec2 perp{-chord.y / clen, chord.x / clen};  // CCW normal of the chord
    return orient == Orientation::CCW ? mid + perp * h : mid - perp * h;
}

inline Vec2 rotate2(const Vec2& p, const Vec2& about, double ang) {
    Vec2 rel = p - about;
    double c = std::cos(ang), s = std::sin(ang);
    return about + Vec2{rel.x * c - rel.y * s, rel.x * s + rel.y * c};
}

// Ear-clipping triangulation of a simple polygon (bridge-merged, so duplicate
// vertices may occur). Returns triangles as point triples.
inline void ear_clip(std::vector<Vec2> poly, std::vector<std::array<Vec2, 3>>& out) {
    size_t n = poly.size();
    if (n < 3) return;
    std::vector<int> next(n), prev(n);
    for (size_t i = 0; i < n; ++i) {
        next[i] = static_cast<int>((i + 1) % n);
        prev[i] = static_cast<int>((i + n - 1) % n);
    }
    double scale = 0;
    for (const auto& p : poly) scale = std::max({scale, std::abs(p.x), std::abs(p.y)});
    double area_eps = 1e-12 * std::max(1.0, scale * scale);

    auto inside_tri = [&](const Vec2& a, const Vec2& b, const Vec2& c, const Vec2& p) {
        double d1 = cross2(a, b, p), d2 = cross2(b, c, p), d3 = cross2(c, a, p);
        return d1 > area_eps && d2 > area_eps && d3 > area_eps;
    };

    int cur = 0;
    size_t remaining = n;
    int since_clip = 0;
    bool relaxed = false;
    while (remaining > 3) {
        int p = prev[cur], nx = next[cur];
        const Vec2& a = poly[p];
        const Vec2& b = poly[cur];
        const Vec2& c = poly[nx];
        double convex = cross2(a, b, c);
        bool ear = convex > area_eps || (relaxed && convex > -area_eps);
        if (ear) {
            for (int i = next[nx]; i != p && ear; i = next[i])
                if (inside_tri(a, b, c, poly[i])) ear = false;
        }
        if (ear) {
            if (convex > area_eps) out.push_back({a, b, c});
            next[p] = nx;
            prev[nx] = p;
            --remaining;
            cur = p;
            since_clip = 0;
            relaxed = false;
        } else {
            cur = nx;
            if (++since_clip > static_cast<int>(remaining)) {
                if (relaxed) throw AmbiguousRegion("cannot triangulate profile region");
                relaxed = true;
                since_clip = 0;
            }
        }
    }
    const Vec2& a = poly[prev[cur]];
    const Vec2& b = poly[cur];
    const Vec2& c = poly[next[cur]];
    if (cross2(a, b, c) > area_eps) out.push_back({a, b, c});
}

// Merge holes into the outer ring with visibility bridges, then ear-clip.
inline std::vector<std::array<Vec2, 3>> triangulate_region(const Region& region) {
    std::vector<Vec2> poly = region.outer.pts;
    std::vector<std::vector<Vec2>> holes;
    for (const auto& h : region.holes) holes.push_back(h.pts);
    std::sort(holes.begin(), holes.end(), [](const auto& a, const auto& b) {
        auto mx = [](const std::vector<Vec2>& r) {
            double m = -1e300;
            for (const auto& p : r) m = std::max(m, p.x);
            return m;
        };
        return mx(a) > mx(b);
    });

    for (size_t hi = 0; hi < holes.size(); ++hi) {
        const auto& hole = holes[hi];
        size_t mi = 0;
        for (size_t i = 1; i < hole.size(); ++i)
            if (hole[i].x > hole[mi].x) mi = i;
        Vec2 m = hole[mi];

        auto blocked = [&](const Vec2& a, const Vec2& b) {
            auto hits_ring = [&](const std::vector<Vec2>& ring) {
                for (size_t i = 0; i < ring.size(); ++i) {
                    const Vec2& c = ring[i];
                    const Vec2& d = ring[(i + 1) % ring.size()];
                    if ((c == a || c == b || d == a || d == b)) continue;
                    if (segments_cross(a, b, c, d)) return true;
                }
                return false;
            };
            if (hits_ring(poly)) return true;
            for (size_t k = hi; k < holes.size(); ++k)
                if (hits_ring(holes[k])) return true;
            return false;
        };

        std::vector<size_t> order(poly.size());
        std::iota(order.begin(), order.end(), size_t{0});
        std::sort(order.begin(), order.end(), [&](size_t a, size_t b) {
            return (poly[a] - m).norm2() < (poly[b] - m).norm2();
        });
        size_t bridge = poly.size();
        for (size_t idx : order) {
            if (poly[idx].x < m.x) continue;
            if (!blocked(m, poly[idx])) {
                bridge = idx;
                break;
            }
        }
        if (bridge == poly.size()) {
            for (size_t idx : order)
                if (!blocked(m, poly[idx])) {
                    bridge = idx;
                    break;
                }
        }
        if (bridge == poly.size())
            throw AmbiguousRegion("cannot bridge a hole to the outer loop");

        std::vector<Vec2> merged;
        merged.reserve(poly.size() + hole.size() + 2);
        for (size_t i = 0; i <= bridge; ++i) merged.push_back(poly[i]);
        for (size_t k = 0; k <= hole.size(); ++k)
            merged.push_back(hole[(mi + k) % hole.size()]);
        for (size_t i = bridge; i < poly.size(); ++i) merged.push_back(poly[i]);
        poly.swap(merged);
    }

    std::vector<std::array<Vec2, 3>> tris;
    ear_clip(std::move(poly), tris);
    return tris;
}

}  // namespace kerneldetail

// Tessellate a profile into oriented regions (outer CCW, holes CW), resolving
// snapped points against the pre-step solid.
inline std::vector<Region> evaluate_profile(const Profile& profile, const Frame& frame,
                                            const Solid& prev, const TessConfig& tess) {
    using namespace kerneldetail;
    std::vector<LoopPoly> polys;
    for (const auto& loop : profile.loops) {
        LoopPoly lp;
        auto place = [&](const Point2& p) -> Vec2 {
            if (p.snap) return resolve_snap(prev, frame, p);
            return {p.x, p.y};
        };
        if (loop.is_circle()) {
            const auto& ci = std::get<CircleCurve>(loop.curves[0]);
            Vec2 c = place(ci.center);
            int n = std::max(8, tess.segments);
            for (int i = 0; i < n; ++i) {
                double a = 2.0 * kPi * i / n;
                lp.pts.push_back(c + Vec2{std::cos(a), std::sin(a)} * ci.radius);
                lp.seg_curve.push_back(0);
            }
            lp.curves.push_back({true, c, ci.radius});
        } else {
            std::vector<Vec2> starts;
            for (const auto& cv : loop.curves) {
                if (const auto* ln = std::get_if<LineCurve>(&cv))
                    starts.push_back(place(ln->start));
                else if (const auto* ar = std::get_if<ArcCurve>(&cv))
                    starts.push_back(place(ar->start));
                else
                    throw MalformedProgram("circle inside a multi-curve loop");
            }
            for (size_t i = 0; i < loop.curves.size(); ++i) {
                Vec2 s = starts[i];
                Vec2 e = starts[(i + 1) % starts.size()];
                if (const auto* ar = std::get_if<ArcCurve>(&loop.curves[i])) {
                    Vec2 c = arc_center(s, e, ar->sweep_deg, ar->orient);
                    double r = (s - c).norm();
                    double sweep = deg2rad(ar->sweep_deg) *
                                   (ar->orient == Orientation::CCW ? 1.0 : -1.0);
                    int segs = std::max(
                        2, static_cast<int>(std::lround(tess.segments * ar->sweep_deg / 360.0)));
                    for (int k = 0; k < segs; ++k) {
                        lp.pts.push_back(rotate2(s, c, sweep * k / segs));
                        lp.seg_curve.push_back(static_cast<int>(i));
                    }
                    lp.curves.push_back({true, c, r});
                } else {
                    lp.pts.push_back(s);
                    lp.seg_curve.push_back(static_cast<int>(i));
                    lp.curves.push_back({false, {}, 0});
                }
            }
        }
        if (lp.pts.size() < 3) throw DegenerateGeometry("loop tessellates to < 3 points");
        polys.push_back(std::move(lp));
    }

    // self-intersection across all segments of the profile
    struct SegRef {
        size_t loop, seg;
        Vec2 a, b;
    };
    std::vector<SegRef> segs;
    for (size_t li = 0; li < polys.size(); ++li)
        for (size_t si = 0; si < polys[li].pts.size(); ++si)
            segs.push_back({li, si, polys[li].pts[si],
                            polys[li].pts[(si + 1) % polys[li].pts.size()]});
    for (size_t i = 0; i < segs.size(); ++i)
        for (size_t j = i + 1; j < segs.size(); ++j) {
            if (segs[i].loop == segs[j].loop) {
                size_t n = polys[segs[i].loop].pts.size();
                size_t d = (segs[j].seg + n - segs[i].seg) % n;
                if (d == 1 || d == n - 1) continue;
            }
            if (segments_cross(segs[i].a, segs[i].b, segs[j].a, segs[j].b))
                throw SelfIntersectingLoop("profile loops intersect");
        }

    // nesting: depth 0 loops are outers (CCW), depth 1 are their holes (CW)
    std::vector<int> depth(polys.size(), 0), parent(polys.size(), -1);
    for (size_t i = 0; i < polys.size(); ++i)
        for (size_t j = 0; j < polys.size(); ++j) {
            if (i == j) continue;
            if (point_in_ring(polys[i].pts[0], polys[j].pts)) {
                ++depth[i];
                parent[i] = static_cast<int>(j);
            }
        }
    std::vector<Region> regions;
    std::vector<int> region_of(polys.size(), -1);
    for (size_t i = 0; i < polys.size(); ++i) {
        if (depth[i] != 0) continue;
        if (polys[i].signed_area() < 0) polys[i].reverse();
        region_of[i] = static_cast<int>(regions.size());
        regions.push_back({std::move(polys[i]), {}});
    }
    for (size_t i = 0; i < polys.size(); ++i) {
        if (depth[i] == 0) continue;
        if (depth[i] > 1) throw AmbiguousRegion("loops nested deeper than one hole level");
        if (polys[i].signed_area() > 0) polys[i].reverse();
        regions[region_of[parent[i]]].holes.push_back(std::move(polys[i]));
    }
    if (regions.empty()) throw DegenerateGeometry("profile has no outer loop");
    return regions;
}

// ---------------------------------------------------------------------------
// Extrusion
// ---------------------------------------------------------------------------

struct ExecState {
    int next_tag = 1;
    std::map<int, AnalyticSurface> surfaces;
    int fresh(AnalyticSurface s) {
        surfaces.emplace(next_tag, std::move(s));
        return next_tag++;
    }
};

// Swept prism of a region between offsets -e_n and +e_p along the frame
// normal, as a tagged soup; caps are planes, straight walls planes, circular
// walls cylinders.
inline std::vector<SoupTri> build_prism(const Region& region, const Frame& frame, double e_p,
                                        double e_n, ExecState& st) {
    std::vector<SoupTri> soup;
    Vec3 w = frame.w;
    int top_tag = st.fresh(PlaneSurface{frame.origin + w * e_p, w});
    int bot_tag = st.fresh(PlaneSurface{frame.origin - w * e_n, -w});

    auto tris2d = kerneldetail::triangulate_region(region);
    for (const auto& t2 : tris2d) {
        Vec3 a = frame.to_world(t2[0]), b = frame.to_world(t2[1]), c = frame.to_world(t2[2]);
        soup.push_back({a + w * e_p, b + w * e_p, c + w * e_p, top_tag});
        soup.push_back({a - w * e_n, c - w * e_n, b - w * e_n, bot_tag});
    }

    auto walls = [&](const LoopPoly& lp) {
        std::vector<int> curve_tag(lp.curves.size(), -1);
        size_t n = lp.pts.size();
        for (size_t i = 0; i < n; ++i) {
            size_t j = (i + 1) % n;
            Vec3 bi = frame.to_world(lp.pts[i]) - w * e_n;
            Vec3 bj = frame.to_world(lp.pts[j]) - w * e_n;
            Vec3 ti = frame.to_world(lp.pts[i]) + w * e_p;
            Vec3 tj = frame.to_world(lp.pts[j]) + w * e_p;
            int ci = lp.seg_curve[i];
            if (curve_tag[ci] < 0) {
                const CurveGeom& g = lp.curves[ci];
                if (g.circular) {
                    curve_tag[ci] = st.fresh(CylinderSurface{frame.to_world(g.center), w,
                                                             g.r * frame.scale});
                } else {
                    Vec3 nrm = (bj - bi).cross(w).normalized();
                    curve_tag[ci] = st.fresh(PlaneSurface{bi, nrm});
                }
            }
            soup.push_back({bi, bj, tj, curve_tag[ci]});
            soup.push_back({bi, tj, ti, curve_tag[ci]});
        }
    };
    walls(region.outer);
    for (const auto& h : region.holes) walls(h);
    return soup;
}

inline Solid finish_solid(TriMesh mesh, const ExecState& st) {
    return make_solid(std::move(mesh), st.surfaces);
}

// ---------------------------------------------------------------------------
// Chamfer / fillet
// ---------------------------------------------------------------------------

namespace kerneldetail {

struct StraightEdgeInfo {
    Vec3 p0, p1;  // endpoints
    Vec3 t;       // edge direction as traversed by face A
    Vec3 na, nb;  // outward face normals
};

inline StraightEdgeInfo straight_edge_info(const Solid& s, const BrepEdge& e) {
    const BrepFace* fa = s.face_by_id(e.f1);
    const BrepFace* fb = s.face_by_id(e.f2);
    const auto* ln = std::get_if<Line3>(&e.curve);
    if (!ln || !fa || !fb || !is_plane(fa->surface) || !is_plane(fb->surface))
        throw UnsupportedEdge("chamfer/fillet needs a straight edge between planar faces");
    StraightEdgeInfo info;
    info.p0 = ln->p0;
    info.p1 = ln->p1;
    info.na = std::get<PlaneSurface>(fa->surface).normal * fa->orient;
    info.nb = std::get<PlaneSurface>(fb->surface).normal * fb->orient;
    // direction of the first boundary segment inside face A's winding
    int va = e.verts[0], vb = e.verts[1];
    bool found = false;
    for (int ti : fa->tris) {
        const auto& tr = s.mesh.t[ti];
        int vv[3] = {tr.a, tr.b, tr.c};
        for (int k = 0; k < 3; ++k) {
            if (vv[k] == va && vv[(k + 1) % 3] == vb) {
                info.t = (s.mesh.v[vb] - s.mesh.v[va]).normalized();
                found = true;
            } else if (vv[k] == vb && vv[(k + 1) % 3] == va) {
                info.t = (s.mesh.v[va] - s.mesh.v[vb]).normalized();
                found = true;
            }
        }
        if (found) break;
    }
    if (!found) throw ShapeError("edge not adjacent to its own face");
    if (info.na.cross(info.nb).dot(info.t) <= 0)
        throw UnsupportedEdge("concave edges are not supported");
    return info;
}

// Prism cutter around a straight convex edge: the hypotenuse (chamfer) or the
// blend arc (fillet) is exact; all other cross-section edges are inflated
// outward so only the new face touches the solid.
inline std::vector<SoupTri> straight_cutter(const StraightEdgeInfo& info, double dist,
                                            bool fillet, int segments, ExecState& st,
                                            double inflate) {
    Vec3 t = (info.p1 - info.p0).normalized();
    Vec3 ua = info.na.cross(info.t);
    Vec3 ub = info.nb.cross(-info.t);
    Vec3 outward = (info.na + info.nb).normalized();

    std::vector<Vec3> cs;  // cross-section offsets from a point E on the edge
    std::vector<int> tags;  // tag per cross-section segment i -> i+1
    double ab_dot = std::abs(info.na.dot(info.nb));
    if (ab_dot > 1.0 - 1e-9) throw UnsupportedEdge("adjacent faces are parallel");

    if (!fillet) {
        Vec3 a = ua * dist;
        Vec3 b = ub * dist;
        cs = {a, a + info.na * inflate, outward * (2 * inflate), b + info.nb * inflate, b};
        Vec3 bevel_n = ((b - a).cross(info.t)).normalized();
        if (bevel_n.dot(outward) < 0) bevel_n = -bevel_n;
        int bevel_tag = st.fresh(PlaneSurface{info.p0 + a, bevel_n});
        int scratch = st.fresh(PlaneSurface{info.p0, outward});
        tags = {scratch, scratch, scratch, scratch, bevel_tag};
    } else {
        double x = -dist / info.nb.dot(ua);
        double y = -dist / info.na.dot(ub);
        // nudge the blend axis toward the edge so the cylinder crosses the
        // adjacent faces transversally instead of tangentially
        Vec3 O = ua * x + ub * y + outward * inflate;
        Vec3 a = O + info.na * dist;
        Vec3 b = O + info.nb * dist;
        cs = {a, a + info.na * inflate, outward * (2 * inflate), b + info.nb * inflate, b};
        int blend_tag = st.fresh(CylinderSurface{info.p0 + O, t, dist});
        int scratch = st.fresh(PlaneSurface{info.p0, outward});
        tags = {scratch, scratch, scratch, scratch};
        double ang = std::acos(std::clamp(info.na.dot(info.nb), -1.0, 1.0));
        int segs = std::max(2, static_cast<int>(std::lround(segments * ang / (2.0 * kPi))));
        // arc from b back toward a, bulging toward the edge corner
        Vec3 rb = (b - O).normalized();
        Vec3 ra = (a - O).normalized();
        Vec3 rot_axis = rb.cross(ra).normalized();
        for (int k = 1; k < segs; ++k) {
            double aa = ang * k / segs;
            Vec3 dirk = rb * std::cos(aa) + rot_axis.cross(rb) * std::sin(aa);
            cs.push_back(O + dirk * dist);
            tags.push_back(blend_tag);
        }
        tags.push_back(blend_tag);
    }

    // extend well past the edge ends so intersections with neighboring blends
    // happen at macro scale, never as epsilon slivers
    double ext = 0.37 * dist + inflate;
    Vec3 e0 = info.p0 - t * ext;
    Vec3 e1 = info.p1 + t * ext;
    int cap_tag = st.fresh(PlaneSurface{e0, -t});
    int cap_tag2 = st.fresh(PlaneSurface{e1, t});

    // 2D cross-section in the plane orthogonal to the edge; na is orthogonal
    // to t because face A contains the edge
    Vec3 ex = info.na;
    Vec3 ey = t.cross(info.na).normalized();
    std::vector<Vec2> cs2(cs.size());
    for (size_t i = 0; i < cs.size(); ++i) cs2[i] = {cs[i].dot(ex), cs[i].dot(ey)};
    double area = 0;
    for (size_t i = 0; i < cs2.size(); ++i)
        area += cs2[i].cross(cs2[(i + 1) % cs2.size()]);
    if (area < 0) {
        // normalize the ring to CCW in (ex, ey); remap per-segment tags
        std::vector<Vec3> rp(cs.size());
        std::vector<Vec2> rp2(cs.size());
        std::vector<int> rt(cs.size());
        rp[0] = cs[0];
        rp2[0] = cs2[0];
        for (size_t k = 1; k < cs.size(); ++k) {
            rp[k] = cs[cs.size() - k];
            rp2[k] = cs2[cs.size() - k];
        }
        for (size_t k = 0; k < cs.size(); ++k) rt[k] = tags[cs.size() - 1 - k];
        cs.swap(rp);
        cs2.swap(rp2);
        tags.swap(rt);
    }

    std::vector<SoupTri> soup;
    size_t n = cs.size();
    for (size_t i = 0; i < n; ++i) {
        size_t j = (i + 1) % n;
        soup.push_back({e0 + cs[i], e0 + cs[j], e1 + cs[j], tags[i]});
        soup.push_back({e0 + cs[i], e1 + cs[j], e1 + cs[i], tags[i]});
    }
    std::vector<std::array<Vec2, 3>> cap_tris;
    ear_clip(cs2, cap_tris);
    auto lift = [&](const Vec2& p) { return ex * p.x + ey * p.y; };
    for (const auto& ct : cap_tris) {
        soup.push_back({e0 + lift(ct[0]), e0 + lift(ct[2]), e0 + lift(ct[1]), cap_tag});
        soup.push_back({e1 + lift(ct[0]), e1 + lift(ct[1]), e1 + lift(ct[2]), cap_tag2});
    }
    // orient outward
    TriMesh probe = weld(soup, 1e-12);
    if (probe.volume() < 0)
        for (auto& tr : soup) std::swap(tr.b, tr.c);
    return soup;
}

struct RimInfo {
    Vec3 center;   // circle center (on the cap plane)
    Vec3 np;       // outward cap normal; material lies on the -np side
    double r = 0;  // rim radius
    int cap_tag = 0, wall_tag = 0;
    double wall_depth = 0;  // extent of the wall below the cap plane
    double cap_inner = 0;   // largest radius of non-rim cap vertices
};

inline RimInfo rim_info(const Solid& s, const BrepEdge& e) {
    const auto* ci = std::get_if<Circle3>(&e.curve);
    const BrepFace* f1 = s.face_by_id(e.f1);
    const BrepFace* f2 = s.face_by_id(e.f2);
    if (!ci || !f1 || !f2) throw UnsupportedEdge("rim blend needs a full-circle edge");
    const BrepFace *cap = nullptr, *wall = nullptr;
    if (is_plane(f1->surface) && std::holds_alternative<CylinderSurface>(f2->surface)) {
        cap = f1;
        wall = f2;
    } else if (is_plane(f2->surface) && std::holds_alternative<CylinderSurface>(f1->surface)) {
        cap = f2;
        wall = f1;
    } else {
        throw UnsupportedEdge("rim blend needs a planar cap and a cylindrical wall");
    }
    const auto& cyl = std::get<CylinderSurface>(wall->surface);
    RimInfo info;
    info.np = std::get<PlaneSurface>(cap->surface).normal * cap->orient;
    if (cyl.axis_dir.cross(info.np).norm() > 1e-6)
        throw UnsupportedEdge("cylinder axis not perpendicular to the cap");
    if (wall->orient < 0) throw UnsupportedEdge("inner (hole) rims are not supported");
    info.center = ci->center;
    info.r = ci->radius;
    info.cap_tag = cap->tag;
    info.wall_tag = wall->tag;
    double tol = s.tol();
    std::set<int> rim(e.verts.begin(), e.verts.end());
    for (int ti : cap->tris) {
        const auto& tr = s.mesh.t[ti];
        for (int vi : {tr.a, tr.b, tr.c}) {
            if (rim.count(vi)) continue;
            Vec3 rel = s.mesh.v[vi] - info.center;
            info.cap_inner =
                std::max(info.cap_inner, (rel - info.np * rel.dot(info.np)).norm());
        }
    }
    for (int ti : wall->tris) {
        const auto& tr = s.mesh.t[ti];
        for (int vi : {tr.a, tr.b, tr.c}) {
            if (rim.count(vi)) continue;
            double d = -(s.mesh.v[vi] - info.center).dot(info.np);
            if (d > tol) info.wall_depth = std::max(info.wall_depth, d);
        }
    }
    return info;
}

// Replace the rim ring of a planar cap / cylinder wall pair with a conical
// bevel (chamfer) or a quarter-torus blend (fillet) band, rebuilt at the rim's
// existing tessellation azimuths.
inline void rim_surgery(TriMesh& m, const RimInfo& info, double dist, bool fillet,
                        int segments, ExecState& st, double tol) {
    // current rim vertices: on the cap plane at radius r, used by cap or wall
    std::vector<int> ring;
    for (size_t vi = 0; vi < m.v.size(); ++vi) {
        Vec3 rel = m.v[vi] - info.center;
        double h = rel.dot(info.np);
        double rad = (rel - info.np * h).norm();
        if (std::abs(h) < tol && std::abs(rad - info.r) < tol)
            ring.push_back(static_cast<int>(vi));
    }
    if (ring.size() < 3) throw ShapeError("rim ring not found in mesh");
    Vec3 e1 = any_orthogonal(info.np);
    Vec3 e2 = info.np.cross(e1);
    std::sort(ring.begin(), ring.end(), [&](int a, int b) {
        Vec3 ra = m.v[a] - info.center, rb = m.v[b] - info.center;
        return std::atan2(ra.dot(e2), ra.dot(e1)) < std::atan2(rb.dot(e2), rb.dot(e1));
    });
    std::unordered_map<int, int> ring_pos;
    for (size_t i = 0; i < ring.size(); ++i) ring_pos[ring[i]] = static_cast<int>(i);

    size_t n = ring.size();
    std::vector<Vec3> radial(n);
    for (size_t i = 0; i < n; ++i) {
        Vec3 rel = m.v[ring[i]] - info.center;
        radial[i] = (rel - info.np * rel.dot(info.np)).normalized();
    }

    // displaced rings
    std::vector<int> cap_ring(n), wall_ring(n);
    for (size_t i = 0; i < n; ++i) {
        cap_ring[i] = static_cast<int>(m.v.size());
        m.v.push_back(info.center + radial[i] * (info.r - dist));
        wall_ring[i] = static_cast<int>(m.v.size());
        m.v.push_back(info.center - info.np * dist + radial[i] * info.r);
    }

    for (auto& tr : m.t) {
        if (tr.tag == info.cap_tag) {
            for (int* vp : {&tr.a, &tr.b, &tr.c}) {
                auto it = ring_pos.find(*vp);
                if (it != ring_pos.end()) *vp = cap_ring[it->second];
            }
        } else if (tr.tag == info.wall_tag) {
            for (int* vp : {&tr.a, &tr.b, &tr.c}) {
                auto it = ring_pos.find(*vp);
                if (it != ring_pos.end()) *vp = wall_ring[it->second];
            }
        }
    }

    if (!fillet) {
        int cone_tag = st.fresh(ConeSurface{info.center + info.np * (info.r - dist),
                                            -info.np, 0.25 * kPi});
        for (size_t i = 0; i < n; ++i) {
            size_t j = (i + 1) % n;
            m.t.push_back({cap_ring[j], cap_ring[i], wall_ring[i], cone_tag});
            m.t.push_back({cap_ring[j], wall_ring[i], wall_ring[j], cone_tag});
        }
    } else {
        int torus_tag = st.fresh(TorusSurface{info.center - info.np * dist, info.np,
                                              info.r - dist, dist});
        int bands = std::max(2, segments / 4);
        std::vector<int> prev_ring = cap_ring;
        for (int k = 1; k <= bands; ++k) {
            double phi = 0.5 * kPi * k / bands;
            std::vector<int> cur(n);
            if (k == bands) {
                cur = wall_ring;
            } else {
                double rho = (info.r - dist) + dist * std::sin(phi);
                double depth = dist - dist * std::cos(phi);
                for (size_t i = 0; i < n; ++i) {
                    cur[i] = static_cast<int>(m.v.size());
                    m.v.push_back(info.center - info.np * depth + radial[i] * rho);
                }
            }
            for (size_t i = 0; i < n; ++i) {
                size_t j = (i + 1) % n;
                m.t.push_back({prev_ring[j], prev_ring[i], cur[i], torus_tag});
                m.t.push_back({prev_ring[j], cur[i], cur[j], torus_tag});
            }
            prev_ring = cur;
        }
    }
}

}  // namespace kerneldetail

// Chamfer or fillet a set of edges of `solid` with a uniform distance/radius.
inline Solid blend_edges(const Solid& solid, const std::vector<EntityRef>& edges, double dist,
                         bool fillet, const TessConfig& tess, ExecState& st) {
    using namespace kerneldetail;
    if (!(dist > 0)) throw MalformedProgram("blend distance must be positive");

    struct Job {
        bool rim;
        StraightEdgeInfo straight;
        RimInfo rim_info;
    };
    std::vector<Job> jobs;
    for (const auto& ref : edges) {
        const BrepEdge& e = resolve_edge(solid, ref);
        if (std::holds_alternative<Line3>(e.curve)) {
            jobs.push_back({false, straight_edge_info(solid, e), {}});
        } else if (std::holds_alternative<Circle3>(e.curve)) {
            jobs.push_back({true, {}, rim_info(solid, e)});
        } else {
            throw UnsupportedEdge("only straight edges and full-circle rims can be blended");
        }
    }
    auto too_large = [&](const std::string& msg) {
        if (fillet) throw FilletTooLarge(msg);
        throw ChamferTooLarge(msg);
    };
    for (const auto& j : jobs) {
        if (j.rim) {
            const RimInfo& ri = j.rim_info;
            if (dist >= ri.r) too_large("blend distance exceeds the rim radius");
            if (ri.wall_depth > 0 && dist >= ri.wall_depth)
                too_large("blend distance exceeds the wall height");
            if (ri.cap_inner > ri.r - dist + solid.tol() * 10)
                too_large("cap features inside the blend distance");
        } else {
            double len = (j.straight.p1 - j.straight.p0).norm();
            if (dist >= len) too_large("blend distance exceeds the edge length");
        }
    }

    TriMesh mesh = solid.mesh;
    double tol = solid.tol();
    for (const auto& j : jobs) {
        if (j.rim) continue;
        auto cutter = straight_cutter(j.straight, dist, fillet, tess.segments, st,
                                      kBoolInflate);
        mesh = mesh_boolean(mesh, weld(cutter, 1e-12), MeshBool::Subtract);
    }
    for (const auto& j : jobs)
        if (j.rim) rim_surgery(mesh, j.rim_info, dist, fillet, tess.segments, st, tol * 10);
    if (mesh.empty()) throw EmptyResult("blend removed the whole solid");
    return finish_solid(std::move(mesh), st);
}

// ---------------------------------------------------------------------------
// Program execution
// ---------------------------------------------------------------------------

struct ExecOptions {
    TessConfig tess;
};

struct ExecResult {
    std::vector<Solid> after_step;     // one entry per program step
    std::vector<Frame> sketch_frames;  // frames in sketch order across the program
    const Solid& final_solid() const { return after_step.back(); }
};

inline ExecResult execute_program(const Program& program, const ExecOptions& opt = {}) {
    auto diags = validate(program);
    if (!diags.empty()) throw ValidationFailed(diags.front().message);

    ExecResult res;
    ExecState st;
    Solid current;

    for (size_t k = 0; k < program.steps.size(); ++k) {
        try {
            if (const auto* ep = std::get_if<EPartStep>(&program.steps[k])) {
                const Solid prev = current;
                for (const auto& sk : ep->sketches) {
                    Frame frame;
                    if (sk.explicit_frame) {
                        frame = frame_from_euler(*sk.explicit_frame);
                    } else {
                        frame = build_frame(resolve_plane(prev, sk.plane), sk.frame);
                    }
                    res.sketch_frames.push_back(frame);
                    double e_p = ep->extrude.e_p, e_n = ep->extrude.e_n;
                    bool boolean = !current.empty();
                    if (boolean) {
                        e_p += kBoolInflate;
                        e_n += kBoolInflate;
                    }
                    std::vector<SoupTri> soup;
                    for (const auto& prof : sk.profiles)
                        for (const auto& region : evaluate_profile(prof, frame, prev, opt.tess))
                            for (auto& tri :
                                 build_prism(region, frame, e_p, e_n, st))
                                soup.push_back(tri);
                    TriMesh prism = weld(soup, 1e-12);
                    if (prism.empty()) throw DegenerateGeometry("sketch produced no prism");
                    if (!boolean) {
                        current = finish_solid(std::move(prism), st);
                    } else {
                        MeshBool op;
                        switch (ep->extrude.op) {
                            case BoolOp::Cut: op = MeshBool::Subtract; break;
                            case BoolOp::Intersect: op = MeshBool::Intersect; break;
                            default: op = MeshBool::Union; break;
                        }
                        TriMesh merged = mesh_boolean(current.mesh, prism, op);
                        if (merged.empty())
                            throw EmptyResult("boolean produced an empty solid");
                        current = finish_solid(std::move(merged), st);
                    }
                }
            } else if (const auto* ch = std::get_if<ChamferStep>(&program.steps[k])) {
                current = blend_edges(current, ch->edges, ch->distance, false, opt.tess, st);
            } else {
                const auto& fl = std::get<FilletStep>(program.steps[k]);
                current = blend_edges(current, fl.edges, fl.radius, true, opt.tess, st);
            }
        } catch (const Error& e) {
            std::string msg = e.what();
            std::string prefix = e.code() + ": ";
            if (msg.rfind(prefix, 0) == 0) msg = msg.substr(prefix.size());
            throw Error(e.code(), "step " + std::to_string(k) + ": " + msg);
        }
        res.after_step.push_back(current);
    }
    if (res.after_step.empty()) throw MalformedProgram("program has no steps");
    return res;
}

// The kernel registers the surfaces it creates in ExecState; for callers that
// only need the final mesh:
inline TriMesh execute_to_mesh(const Program& program, const ExecOptions& opt = {}) {
    return execute_program(program, opt).final_solid().mesh;
}

}  // namespace pcad
