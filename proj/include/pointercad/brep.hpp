#pragma once

#include <algorithm>
#include <map>
#include <numeric>
#include <optional>
#include <set>

#include "ast.hpp"
#include "mesh.hpp"
#include "surfaces.hpp"

namespace pcad {

// Base plane conventions: Top = XY (z=0, normal +z), Front = XZ (y=0, +y),
// Right = YZ (x=0, +x). Stable ids 0..2 are reserved for them.
inline PlaneSurface base_plane_surface(BasePlaneId id) {
    switch (id) {
        case kBaseRight: return {{0, 0, 0}, {1, 0, 0}};
        case kBaseFront: return {{0, 0, 0}, {0, 1, 0}};
        default: return {{0, 0, 0}, {0, 0, 1}};
    }
}

constexpr int kFirstFaceId = 3;

struct BrepFace {
    int id = -1;
    int tag = 0;
    AnalyticSurface surface;
    std::vector<int> tris;  // indices into mesh.t
    double area = 0;
    Vec3 centroid;
    double orient = 1.0;  // +1 if analytic normal matches triangle winding
};

struct BrepEdge {
    int id = -1;
    int f1 = -1, f2 = -1;  // face ids, f1 < f2
    std::vector<int> verts;  // ordered chain; closed loops do not repeat the start
    bool closed = false;
    EdgeCurve curve;
    double length = 0;
};

namespace brepdetail {

inline double point_segment_dist2(const Vec3& p, const Vec3& a, const Vec3& b) {
    Vec3 d = b - a;
    double len2 = d.norm2();
    double t = len2 > 0 ? std::clamp((p - a).dot(d) / len2, 0.0, 1.0) : 0.0;
    return (a + d * t - p).norm2();
}

inline double point_triangle_dist(const Vec3& p, const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 n = (b - a).cross(c - a);
    double n2 = n.norm2();
    if (n2 < 1e-30)
        return std::sqrt(std::min({point_segment_dist2(p, a, b), point_segment_dist2(p, b, c),
                                   point_segment_dist2(p, c, a)}));
    // barycentric test of the in-plane projection
    Vec3 q = p - n * ((p - a).dot(n) / n2);
    Vec3 v0 = b - a, v1 = c - a, v2 = q - a;
    double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
    double d20 = v2.dot(v0), d21 = v2.dot(v1);
    double den = d00 * d11 - d01 * d01;
    double v = (d11 * d20 - d01 * d21) / den;
    double w = (d00 * d21 - d01 * d20) / den;
    if (v >= 0 && w >= 0 && v + w <= 1) return (q - p).norm();
    return std::sqrt(std::min({point_segment_dist2(p, a, b), point_segment_dist2(p, b, c),
                               point_segment_dist2(p, c, a)}));
}

struct UnionFind {
    std::vector<int> parent;
    explicit UnionFind(int n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
    int find(int x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    }
    void unite(int a, int b) { parent[find(a)] = find(b); }
};

inline Vec3 circumcenter(const Vec3& a, const Vec3& b, const Vec3& c) {
    Vec3 ab = b - a, ac = c - a;
    Vec3 n = ab.cross(ac);
    double n2 = n.norm2();
    Vec3 d = (n.cross(ab) * ac.norm2() + ac.cross(n) * ab.norm2()) / (2.0 * n2);
    return a + d;
}

// Fit a line/arc/circle to an ordered vertex chain; fall back to a polyline.
inline EdgeCurve classify_chain(const std::vector<Vec3>& pts, bool closed, double tol) {
    size_t n = pts.size();
    if (!closed && n >= 2) {
        Vec3 d = pts.back() - pts.front();
        double len = d.norm();
        if (len > tol) {
            Vec3 u = d / len;
            bool collinear = true;
            for (const auto& p : pts) {
                Vec3 rel = p - pts.front();
                if ((rel - u * rel.dot(u)).norm() > tol) {
                    collinear = false;
                    break;
                }
            }
            if (collinear) return Line3{pts.front(), pts.back()};
        }
    }
    if (n >= 3) {
        Vec3 a = pts[0], b = pts[n / 3], c = pts[2 * n / 3];
        Vec3 nrm = (b - a).cross(c - a);
        if (nrm.norm() > tol * tol) {
            Vec3 axis = nrm.normalized();
            Vec3 ctr = circumcenter(a, b, c);
            double r = (a - ctr).norm();
            bool on_circle = r > tol;
            for (const auto& p : pts) {
                Vec3 rel = p - ctr;
                if (std::abs(rel.dot(axis)) > tol ||
                    std::abs(rel.norm() - r) > tol) {
                    on_circle = false;
                    break;
                }
            }
            if (on_circle) {
                if (closed) return Circle3{ctr, axis, r};
                Vec3 s0 = (pts.front() - ctr).normalized();
                Vec3 s1 = (pts.back() - ctr).normalized();
                double ang = std::atan2(axis.dot(s0.cross(s1)), s0.dot(s1));
                if (ang <= 0) ang += 2.0 * kPi;
                // pick the axis sign that traverses the chain positively
                Vec3 mid = (pts[n / 2] - ctr).normalized();
                double mid_ang = std::atan2(axis.dot(s0.cross(mid)), s0.dot(mid));
                if (mid_ang < 0) {
                    return Arc3{ctr, -axis, r, s0,
                                2.0 * kPi - ang == 0 ? ang : 2.0 * kPi - ang};
                }
                return Arc3{ctr, axis, r, s0, ang};
            }
        }
    }
    return PolyCurve{pts};
}

}  // namespace brepdetail

struct Solid {
    TriMesh mesh;
    std::map<int, AnalyticSurface> surfaces;  // tag -> carrier surface
    std::vector<BrepFace> faces;
    std::vector<BrepEdge> edges;
    std::vector<std::pair<int, int>> graph;  // adjacent face-id pairs, f1 < f2

    bool empty() const { return mesh.empty(); }

    const BrepFace* face_by_id(int id) const {
        for (const auto& f : faces)
            if (f.id == id) return &f;
        return nullptr;
    }
    const BrepEdge* edge_by_id(int id) const {
        for (const auto& e : edges)
            if (e.id == id) return &e;
        return nullptr;
    }

    double tol() const {
        Box3 bb = mesh.bbox();
        return 1e-6 * (bb.valid() ? std::max(bb.diagonal(), 1.0) : 1.0);
    }
};

// Derive faces (connected same-tag regions), edges (region boundaries) and the
// face-adjacency graph from the tagged mesh. Face ids start at kFirstFaceId;
// 0..2 are the base planes.
inline Solid make_solid(TriMesh mesh, std::map<int, AnalyticSurface> surfaces) {
    Solid s;
    s.mesh = std::move(mesh);
    s.surfaces = std::move(surfaces);
    const TriMesh& m = s.mesh;
    if (m.empty()) return s;

    std::string why;
    if (!is_closed_manifold(m, &why)) throw NonManifoldResult("solid mesh not closed: " + why);

    auto ekey = [](int a, int b) {
        return (static_cast<long long>(std::min(a, b)) << 32) |
               static_cast<unsigned>(std::max(a, b));
    };
    std::unordered_map<long long, std::pair<int, int>> edge_tris;
    for (size_t ti = 0; ti < m.t.size(); ++ti) {
        const auto& tr = m.t[ti];
        int vv[3] = {tr.a, tr.b, tr.c};
        for (int k = 0; k < 3; ++k) {
            long long key = ekey(vv[k], vv[(k + 1) % 3]);
            auto it = edge_tris.find(key);
            if (it == edge_tris.end())
                edge_tris[key] = {static_cast<int>(ti), -1};
            else
                it->second.second = static_cast<int>(ti);
        }
    }

    brepdetail::UnionFind uf(static_cast<int>(m.t.size()));
    for (const auto& [key, pr] : edge_tris) {
        (void)key;
        if (pr.second >= 0 && m.t[pr.first].tag == m.t[pr.second].tag)
            uf.unite(pr.first, pr.second);
    }

    std::unordered_map<int, int> root_to_face;
    for (size_t ti = 0; ti < m.t.size(); ++ti) {
        int r = uf.find(static_cast<int>(ti));
        auto [it, inserted] = root_to_face.try_emplace(r, static_cast<int>(s.faces.size()));
        if (inserted) {
            BrepFace f;
            f.tag = m.t[ti].tag;
            s.faces.push_back(std::move(f));
        }
        s.faces[it->second].tris.push_back(static_cast<int>(ti));
    }

    for (auto& f : s.faces) {
        Vec3 c{};
        Vec3 nsum{};
        for (int ti : f.tris) {
            double a = m.tri_area(m.t[ti]);
            f.area += a;
            c = c + m.tri_centroid(m.t[ti]) * a;
            nsum = nsum + m.tri_normal(m.t[ti]);
        }
        f.centroid = f.area > 0 ? c / f.area : c;
        auto it = s.surfaces.find(f.tag);
        if (it == s.surfaces.end())
            throw ShapeError("mesh tag " + std::to_string(f.tag) + " has no carrier surface");
        f.surface = it->second;
        Vec3 an = surface_normal(f.surface, f.centroid);
        f.orient = nsum.dot(an) >= 0 ? 1.0 : -1.0;
    }

    std::sort(s.faces.begin(), s.faces.end(), [](const BrepFace& a, const BrepFace& b) {
        if (a.tag != b.tag) return a.tag < b.tag;
        if (a.centroid.x != b.centroid.x) return a.centroid.x < b.centroid.x;
        if (a.centroid.y != b.centroid.y) return a.centroid.y < b.centroid.y;
        return a.centroid.z < b.centroid.z;
    });
    std::vector<int> tri_face(m.t.size());
    for (size_t fi = 0; fi < s.faces.size(); ++fi) {
        s.faces[fi].id = kFirstFaceId + static_cast<int>(fi);
        for (int ti : s.faces[fi].tris) tri_face[ti] = static_cast<int>(fi);
    }

    // boundary segments between different face regions, grouped by face pair
    struct Seg {
        int a, b;
    };
    std::map<std::pair<int, int>, std::vector<Seg>> groups;
    for (const auto& [key, pr] : edge_tris) {
        if (pr.second < 0) continue;
        int fa = tri_face[pr.first], fb = tri_face[pr.second];
        if (fa == fb) continue;
        int va = static_cast<int>(key >> 32), vb = static_cast<int>(key & 0xffffffff);
        groups[{std::min(fa, fb), std::max(fa, fb)}].push_back({va, vb});
    }

    double tol = s.tol();
    for (const auto& [fp, segs] : groups) {
        // chain segments into polylines by shared vertices
        std::unordered_map<int, std::vector<int>> adj;  // vertex -> seg indices
        for (size_t i = 0; i < segs.size(); ++i) {
            adj[segs[i].a].push_back(static_cast<int>(i));
            adj[segs[i].b].push_back(static_cast<int>(i));
        }
        std::vector<char> used(segs.size(), 0);
        auto walk = [&](int start_seg) {
            std::vector<int> chain{segs[start_seg].a, segs[start_seg].b};
            used[start_seg] = 1;
            for (int end = 0; end < 2; ++end) {
                while (true) {
                    int tip = end == 0 ? chain.back() : chain.front();
                    int next = -1;
                    for (int si : adj[tip])
                        if (!used[si]) {
                            next = si;
                            break;
                        }
                    if (next < 0) break;
                    used[next] = 1;
                    int other = segs[next].a == tip ? segs[next].b : segs[next].a;
                    if (end == 0)
                        chain.push_back(other);
                    else
                        chain.insert(chain.begin(), other);
                }
            }
            return chain;
        };
        for (size_t i = 0; i < segs.size(); ++i) {
            if (used[i]) continue;
            auto chain = walk(static_cast<int>(i));
            BrepEdge e;
            e.f1 = s.faces[fp.first].id;
            e.f2 = s.faces[fp.second].id;
            e.closed = chain.size() > 2 && chain.front() == chain.back();
            if (e.closed) chain.pop_back();
            e.verts = chain;
            std::vector<Vec3> pts;
            pts.reserve(chain.size());
            for (int vi : chain) pts.push_back(m.v[vi]);
            for (size_t k = 1; k < pts.size(); ++k) e.length += (pts[k] - pts[k - 1]).norm();
            if (e.closed && pts.size() > 1) e.length += (pts.front() - pts.back()).norm();
            e.curve = brepdetail::classify_chain(pts, e.closed, tol);
            s.edges.push_back(std::move(e));
        }
    }

    std::sort(s.edges.begin(), s.edges.end(), [&](const BrepEdge& a, const BrepEdge& b) {
        if (a.f1 != b.f1) return a.f1 < b.f1;
        if (a.f2 != b.f2) return a.f2 < b.f2;
        Vec3 ca{}, cb{};
        for (int vi : a.verts) ca = ca + m.v[vi];
        for (int vi : b.verts) cb = cb + m.v[vi];
        ca = ca / static_cast<double>(a.verts.size());
        cb = cb / static_cast<double>(b.verts.size());
        if (ca.x != cb.x) return ca.x < cb.x;
        if (ca.y != cb.y) return ca.y < cb.y;
        return ca.z < cb.z;
    });
    for (size_t ei = 0; ei < s.edges.size(); ++ei) s.edges[ei].id = static_cast<int>(ei);

    std::set<std::pair<int, int>> gset;
    for (const auto& e : s.edges) gset.insert({e.f1, e.f2});
    s.graph.assign(gset.begin(), gset.end());
    return s;
}

// ---------------------------------------------------------------------------
// Sampling for the neural embedding
// ---------------------------------------------------------------------------

constexpr int kGridN = 32;
constexpr int kFaceChannels = 8;   // x y z nx ny nz K vis
constexpr int kEdgeChannels = 12;  // pos tangent -tangent derivative

using FaceTensor = std::vector<double>;  // 32*32*8, channel-minor
using EdgeTensor = std::vector<double>;  // 32*12

namespace brepdetail {

// Angular span of a set of angles: returns {start, extent}. If the angles
// leave no gap larger than `gap_min`, the full turn is used.
inline std::pair<double, double> angular_span(std::vector<double> angles, double gap_min) {
    if (angles.empty()) return {0.0, 2.0 * kPi};
    for (auto& a : angles)
        if (a < 0) a += 2.0 * kPi;
    std::sort(angles.begin(), angles.end());
    double best_gap = 2.0 * kPi - (angles.back() - angles.front());
    size_t best_at = angles.size() - 1;
    for (size_t i = 0; i + 1 < angles.size(); ++i) {
        double g = angles[i + 1] - angles[i];
        if (g > best_gap) {
            best_gap = g;
            best_at = i;
        }
    }
    if (best_gap < gap_min) return {0.0, 2.0 * kPi};
    double start = angles[(best_at + 1) % angles.size()];
    return {start, 2.0 * kPi - best_gap};
}

}  // namespace brepdetail

inline FaceTensor sample_face(const Solid& s, const BrepFace& f) {
    const TriMesh& m = s.mesh;
    double tol = s.tol() * 10;
    FaceTensor out(kGridN * kGridN * kFaceChannels, 0.0);

    std::vector<Vec3> verts;
    for (int ti : f.tris) {
        const auto& tr = m.t[ti];
        verts.push_back(m.v[tr.a]);
        verts.push_back(m.v[tr.b]);
        verts.push_back(m.v[tr.c]);
    }

    auto visible = [&](const Vec3& p) {
        for (int ti : f.tris) {
            const auto& tr = m.t[ti];
            if (brepdetail::point_triangle_dist(p, m.v[tr.a], m.v[tr.b], m.v[tr.c]) <= tol)
                return 1.0;
        }
        return 0.0;
    };

    auto emit = [&](int iu, int iv, const Vec3& p) {
        double* px = &out[(static_cast<size_t>(iv) * kGridN + iu) * kFaceChannels];
        Vec3 n = surface_normal(f.surface, p) * f.orient;
        px[0] = p.x;
        px[1] = p.y;
        px[2] = p.z;
        px[3] = n.x;
        px[4] = n.y;
        px[5] = n.z;
        px[6] = gaussian_curvature(f.surface, p);
        px[7] = visible(p);
    };

    double gap_min = 2.0 * kPi / 16.0;
    if (const auto* pl = std::get_if<PlaneSurface>(&f.surface)) {
        Vec3 e1 = any_orthogonal(pl->normal);
        Vec3 e2 = pl->normal.cross(e1);
        // oriented bbox via 2D PCA of the region vertices
        double mu = 0, mv = 0;
        std::vector<Vec2> uv;
        uv.reserve(verts.size());
        for (const auto& p : verts) {
            Vec3 rel = p - pl->point;
            uv.push_back({rel.dot(e1), rel.dot(e2)});
            mu += uv.back().x;
            mv += uv.back().y;
        }
        mu /= uv.size();
        mv /= uv.size();
        double cxx = 0, cxy = 0, cyy = 0;
        for (const auto& q : uv) {
            cxx += (q.x - mu) * (q.x - mu);
            cxy += (q.x - mu) * (q.y - mv);
            cyy += (q.y - mv) * (q.y - mv);
        }
        double theta = 0.5 * std::atan2(2 * cxy, cxx - cyy);
        Vec3 a1 = e1 * std::cos(theta) + e2 * std::sin(theta);
        Vec3 a2 = e1 * -std::sin(theta) + e2 * std::cos(theta);
        double lo1 = 1e300, hi1 = -1e300, lo2 = 1e300, hi2 = -1e300;
        for (const auto& p : verts) {
            Vec3 rel = p - pl->point;
            lo1 = std::min(lo1, rel.dot(a1));
            hi1 = std::max(hi1, rel.dot(a1));
            lo2 = std::min(lo2, rel.dot(a2));
            hi2 = std::max(hi2, rel.dot(a2));
        }
        for (int iv = 0; iv < kGridN; ++iv)
            for (int iu = 0; iu < kGridN; ++iu) {
                double t1 = lo1 + (hi1 - lo1) * iu / (kGridN - 1.0);
                double t2 = lo2 + (hi2 - lo2) * iv / (kGridN - 1.0);
                emit(iu, iv, pl->point + a1 * t1 + a2 * t2);
            }
    } else if (const auto* cy = std::get_if<CylinderSurface>(&f.surface)) {
        Vec3 e1 = any_orthogonal(cy->axis_dir);
        Vec3 e2 = cy->axis_dir.cross(e1);
        std::vector<double> angs;
        double hlo = 1e300, hhi = -1e300;
        for (const auto& p : verts) {
            Vec3 rel = p - cy->axis_point;
            angs.push_back(std::atan2(rel.dot(e2), rel.dot(e1)));
            double h = rel.dot(cy->axis_dir);
            hlo = std::min(hlo, h);
            hhi = std::max(hhi, h);
        }
        auto [a0, ext] = brepdetail::angular_span(std::move(angs), gap_min);
        for (int iv = 0; iv < kGridN; ++iv)
            for (int iu = 0; iu < kGridN; ++iu) {
                double th = a0 + ext * iu / (ext < 2.0 * kPi - 1e-9 ? kGridN - 1.0
                                                                   : static_cast<double>(kGridN));
                double h = hlo + (hhi - hlo) * iv / (kGridN - 1.0);
                Vec3 p = cy->axis_point + cy->axis_dir * h +
                         (e1 * std::cos(th) + e2 * std::sin(th)) * cy->radius;
                emit(iu, iv, p);
            }
    } else if (const auto* co = std::get_if<ConeSurface>(&f.surface)) {
        Vec3 e1 = any_orthogonal(co->axis_dir);
        Vec3 e2 = co->axis_dir.cross(e1);
        std::vector<double> angs;
        double hlo = 1e300, hhi = -1e300;
        for (const auto& p : verts) {
            Vec3 rel = p - co->apex;
            angs.push_back(std::atan2(rel.dot(e2), rel.dot(e1)));
            double h = rel.dot(co->axis_dir);
            hlo = std::min(hlo, h);
            hhi = std::max(hhi, h);
        }
        auto [a0, ext] = brepdetail::angular_span(std::move(angs), gap_min);
        double tana = std::tan(co->half_angle);
        for (int iv = 0; iv < kGridN; ++iv)
            for (int iu = 0; iu < kGridN; ++iu) {
                double th = a0 + ext * iu / (ext < 2.0 * kPi - 1e-9 ? kGridN - 1.0
                                                                   : static_cast<double>(kGridN));
                double h = hlo + (hhi - hlo) * iv / (kGridN - 1.0);
                Vec3 p = co->apex + co->axis_dir * h +
                         (e1 * std::cos(th) + e2 * std::sin(th)) * (h * tana);
                emit(iu, iv, p);
            }
    } else {
        const auto& to = std::get<TorusSurface>(f.surface);
        Vec3 e1 = any_orthogonal(to.axis_dir);
        Vec3 e2 = to.axis_dir.cross(e1);
        std::vector<double> thetas, phis;
        for (const auto& p : verts) {
            Vec3 rel = p - to.center;
            thetas.push_back(std::atan2(rel.dot(e2), rel.dot(e1)));
            double h = rel.dot(to.axis_dir);
            double d = (rel - to.axis_dir * h).norm();
            phis.push_back(std::atan2(h, d - to.major_r));
        }
        auto [t0, text] = brepdetail::angular_span(std::move(thetas), gap_min);
        auto [p0, pext] = brepdetail::angular_span(std::move(phis), gap_min);
        for (int iv = 0; iv < kGridN; ++iv)
            for (int iu = 0; iu < kGridN; ++iu) {
                double th = t0 + text * iu / (text < 2.0 * kPi - 1e-9
                                                  ? kGridN - 1.0
                                                  : static_cast<double>(kGridN));
                double ph = p0 + pext * iv / (pext < 2.0 * kPi - 1e-9
                                                  ? kGridN - 1.0
                                                  : static_cast<double>(kGridN));
                Vec3 ring = e1 * std::cos(th) + e2 * std::sin(th);
                Vec3 p = to.center + ring * (to.major_r + to.minor_r * std::cos(ph)) +
                         to.axis_dir * (to.minor_r * std::sin(ph));
                emit(iu, iv, p);
            }
    }
    return out;
}

// Sampling for a base plane: a fixed patch of the world plane, fully visible.
inline FaceTensor sample_base_plane(BasePlaneId id) {
    PlaneSurface pl = base_plane_surface(id);
    Vec3 e1 = any_orthogonal(pl.normal);
    Vec3 e2 = pl.normal.cross(e1);
    FaceTensor out(kGridN * kGridN * kFaceChannels, 0.0);
    for (int iv = 0; iv < kGridN; ++iv)
        for (int iu = 0; iu < kGridN; ++iu) {
            double t1 = -0.5 + iu / (kGridN - 1.0);
            double t2 = -0.5 + iv / (kGridN - 1.0);
            Vec3 p = pl.point + e1 * t1 + e2 * t2;
            double* px = &out[(static_cast<size_t>(iv) * kGridN + iu) * kFaceChannels];
            px[0] = p.x;
            px[1] = p.y;
            px[2] = p.z;
            px[3] = pl.normal.x;
            px[4] = pl.normal.y;
            px[5] = pl.normal.z;
            px[6] = 0.0;
            px[7] = 1.0;
        }
    return out;
}

inline EdgeTensor sample_edge(const Solid& s, const BrepEdge& e) {
    EdgeTensor out(kGridN * kEdgeChannels, 0.0);
    auto emit = [&](int i, const Vec3& p, const Vec3& tangent, const Vec3& deriv) {
        double* px = &out[static_cast<size_t>(i) * kEdgeChannels];
        px[0] = p.x;
        px[1] = p.y;
        px[2] = p.z;
        px[3] = tangent.x;
        px[4] = tangent.y;
        px[5] = tangent.z;
        px[6] = -tangent.x;
        px[7] = -tangent.y;
        px[8] = -tangent.z;
        px[9] = deriv.x;
        px[10] = deriv.y;
        px[11] = deriv.z;
    };

    if (const auto* ln = std::get_if<Line3>(&e.curve)) {
        Vec3 d = ln->p1 - ln->p0;
        Vec3 u = d.normalized();
        for (int i = 0; i < kGridN; ++i) {
            double t = i / (kGridN - 1.0);
            emit(i, ln->p0 + d * t, u, d);
        }
    } else if (const auto* ar = std::get_if<Arc3>(&e.curve)) {
        Vec3 e2 = ar->axis.cross(ar->start_dir);
        for (int i = 0; i < kGridN; ++i) {
            double t = i / (kGridN - 1.0);
            double a = ar->sweep_rad * t;
            Vec3 radial = ar->start_dir * std::cos(a) + e2 * std::sin(a);
            Vec3 p = ar->center + radial * ar->radius;
            Vec3 tangent = ar->axis.cross(radial);
            emit(i, p, tangent, tangent * (ar->sweep_rad * ar->radius));
        }
    } else if (const auto* ci = std::get_if<Circle3>(&e.curve)) {
        Vec3 s0 = e.verts.empty() ? any_orthogonal(ci->axis)
                                  : (s.mesh.v[e.verts.front()] - ci->center).normalized();
        Vec3 e2 = ci->axis.cross(s0);
        for (int i = 0; i < kGridN; ++i) {
            double a = 2.0 * kPi * i / kGridN;
            Vec3 radial = s0 * std::cos(a) + e2 * std::sin(a);
            Vec3 p = ci->center + radial * ci->radius;
            Vec3 tangent = ci->axis.cross(radial);
            emit(i, p, tangent, tangent * (2.0 * kPi * ci->radius));
        }
    } else {
        const auto& pc = std::get<PolyCurve>(e.curve);
        std::vector<Vec3> pts = pc.pts;
        if (e.closed && !pts.empty()) pts.push_back(pts.front());
        std::vector<double> cum{0.0};
        for (size_t k = 1; k < pts.size(); ++k)
            cum.push_back(cum.back() + (pts[k] - pts[k - 1]).norm());
        double total = cum.back() > 0 ? cum.back() : 1.0;
        for (int i = 0; i < kGridN; ++i) {
            double want = total * i / (kGridN - 1.0);
            size_t k = 1;
            while (k + 1 < cum.size() && cum[k] < want) ++k;
            double seg = cum[k] - cum[k - 1];
            double t = seg > 0 ? (want - cum[k - 1]) / seg : 0.0;
            Vec3 p = pts[k - 1] + (pts[k] - pts[k - 1]) * t;
            Vec3 tangent = (pts[k] - pts[k - 1]).normalized();
            emit(i, p, tangent, tangent * total);
        }
    }
    return out;
}

}  // namespace pcad
