#pragma once

#include <algorithm>
#include <random>
#include <vector>

#include "kernel.hpp"
#include "mesh.hpp"

namespace pcad {

// ---------------------------------------------------------------------------
// Surface sampling and Chamfer distance
// ---------------------------------------------------------------------------

inline std::vector<Vec3> sample_surface(const TriMesh& m, int n, uint32_t seed) {
    if (m.empty()) throw DegenerateGeometry("cannot sample an empty mesh");
    std::vector<double> areas(m.t.size());
    for (size_t i = 0; i < m.t.size(); ++i) areas[i] = m.tri_area(m.t[i]);
    double total = 0;
    for (double a : areas) total += a;
    if (total <= 0) throw DegenerateGeometry("mesh has zero surface area");
    std::mt19937 rng(seed);
    std::discrete_distribution<size_t> pick(areas.begin(), areas.end());
    std::uniform_real_distribution<double> uni(0.0, 1.0);
    std::vector<Vec3> pts;
    pts.reserve(n);
    for (int k = 0; k < n; ++k) {
        const auto& tr = m.t[pick(rng)];
        double u = uni(rng), v = uni(rng);
        if (u + v > 1) {
            u = 1 - u;
            v = 1 - v;
        }
        Vec3 a = m.v[tr.a], b = m.v[tr.b], c = m.v[tr.c];
        pts.push_back(a + (b - a) * u + (c - a) * v);
    }
    return pts;
}

namespace metricsdetail {

// Uniform-grid nearest neighbor: cells sized to the point cloud, searched in
// growing shells until the best squared distance is certain.
struct NnGrid {
    std::vector<Vec3> pts;
    std::unordered_map<meshdetail::CellKey, std::vector<int>, meshdetail::CellHash> cells;
    double cell = 1.0;

    explicit NnGrid(std::vector<Vec3> p) : pts(std::move(p)) {
        Box3 bb;
        for (const auto& q : pts) bb.expand(q);
        double diag = bb.valid() ? bb.diagonal() : 1.0;
        cell = std::max(diag / 40.0, 1e-12);
        for (size_t i = 0; i < pts.size(); ++i)
            cells[meshdetail::cell_of(pts[i], cell)].push_back(static_cast<int>(i));
    }

    double nearest2(const Vec3& q) const {
        auto base = meshdetail::cell_of(q, cell);
        double best = 1e300;
        // any cell in shell r+1 or beyond is at least r*cell away from q
        for (long long ring = 0;; ++ring) {
            for (long long dx = -ring; dx <= ring; ++dx)
                for (long long dy = -ring; dy <= ring; ++dy)
                    for (long long dz = -ring; dz <= ring; ++dz) {
                        if (std::max({std::llabs(dx), std::llabs(dy), std::llabs(dz)}) != ring)
                            continue;
                        auto it = cells.find({base.x + dx, base.y + dy, base.z + dz});
                        if (it == cells.end()) continue;
                        for (int i : it->second) best = std::min(best, (pts[i] - q).norm2());
                    }
            double sealed = static_cast<double>(ring) * cell;
            if (best <= sealed * sealed || ring > 1000000) return best;
        }
    }
};

}  // namespace metricsdetail

// Symmetric mean squared nearest-neighbor distance over area-weighted point
// samples, scaled by 1e3. Both clouds draw from the same seed, so a mesh
// compared with itself scores exactly zero.
inline double chamfer_distance(const TriMesh& a, const TriMesh& b, int n = 8192,
                               uint32_t seed = 0) {
    auto pa = sample_surface(a, n, seed);
    auto pb = sample_surface(b, n, seed);
    metricsdetail::NnGrid ga(pa), gb(pb);
    double acc = 0;
    for (const auto& q : pa) acc += gb.nearest2(q) / n;
    for (const auto& q : pb) acc += ga.nearest2(q) / n;
    return acc * 1e3;
}

// ---------------------------------------------------------------------------
// Validity metrics
// ---------------------------------------------------------------------------

inline double invalidity_ratio(int n_test, int n_built) {
    if (n_test <= 0) throw ConfigError("invalidity ratio needs a nonempty test set");
    return static_cast<double>(n_test - n_built) / n_test;
}

inline double flux_enclosure_error(const TriMesh& m) { return m.vector_area().norm() * 1e3; }

inline double dangling_edge_length(const TriMesh& m) {
    std::unordered_map<long long, int> count;
    auto key = [](int a, int b) {
        int lo = std::min(a, b), hi = std::max(a, b);
        return (static_cast<long long>(lo) << 32) | static_cast<unsigned>(hi);
    };
    for (const auto& tr : m.t) {
        ++count[key(tr.a, tr.b)];
        ++count[key(tr.b, tr.c)];
        ++count[key(tr.c, tr.a)];
    }
    double len = 0;
    for (const auto& [k, n] : count) {
        if (n != 1) continue;
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffff);
        len += (m.v[a] - m.v[b]).norm();
    }
    return len * 1e3;
}

namespace metricsdetail {

// Devillers-Guigue style triangle-triangle intersection via signed distances
// against each supporting plane, with a 2D overlap test for coplanar pairs.
inline bool seg_tri_cross(const Vec3& p, const Vec3& q, const Vec3& a, const Vec3& b,
                          const Vec3& c) {
    Vec3 n = (b - a).cross(c - a);
    double dp = (p - a).dot(n), dq = (q - a).dot(n);
    // proper crossings only: an endpoint resting on the plane is a
    // measure-zero contact (geometrically adjacent triangles touch like this)
    double eps = 1e-9 * n.norm();
    if (!((dp > eps && dq < -eps) || (dp < -eps && dq > eps))) return false;
    double denom = dp - dq;
    if (denom == 0) return false;
    double t = dp / denom;
    Vec3 x = p + (q - p) * t;
    // barycentric containment
    Vec3 v0 = b - a, v1 = c - a, v2 = x - a;
    double d00 = v0.dot(v0), d01 = v0.dot(v1), d11 = v1.dot(v1);
    double d20 = v2.dot(v0), d21 = v2.dot(v1);
    double det = d00 * d11 - d01 * d01;
    if (det == 0) return false;
    double u = (d11 * d20 - d01 * d21) / det;
    double w = (d00 * d21 - d01 * d20) / det;
    return u >= 0 && w >= 0 && u + w <= 1;
}

inline bool tri_tri_intersect(const Vec3& a0, const Vec3& a1, const Vec3& a2, const Vec3& b0,
                              const Vec3& b1, const Vec3& b2) {
    Vec3 na = (a1 - a0).cross(a2 - a0);
    Vec3 nb = (b1 - b0).cross(b2 - b0);
    double db0 = (b0 - a0).dot(na), db1 = (b1 - a0).dot(na), db2 = (b2 - a0).dot(na);
    double da0 = (a0 - b0).dot(nb), da1 = (a1 - b0).dot(nb), da2 = (a2 - b0).dot(nb);
    double eps_a = 1e-12 * na.norm(), eps_b = 1e-12 * nb.norm();
    bool copl = std::abs(db0) <= eps_a && std::abs(db1) <= eps_a && std::abs(db2) <= eps_a;
    if (!copl) {
        if ((db0 > eps_a && db1 > eps_a && db2 > eps_a) ||
            (db0 < -eps_a && db1 < -eps_a && db2 < -eps_a))
            return false;
        if ((da0 > eps_b && da1 > eps_b && da2 > eps_b) ||
            (da0 < -eps_b && da1 < -eps_b && da2 < -eps_b))
            return false;
        const Vec3 A[3] = {a0, a1, a2};
        const Vec3 B[3] = {b0, b1, b2};
        for (int i = 0; i < 3; ++i) {
            if (seg_tri_cross(A[i], A[(i + 1) % 3], b0, b1, b2)) return true;
            if (seg_tri_cross(B[i], B[(i + 1) % 3], a0, a1, a2)) return true;
        }
        return false;
    }
    // coplanar: project to the dominant axis plane and run 2D tests
    Vec3 n = na.norm() > nb.norm() ? na : nb;
    int drop = 0;
    if (std::abs(n.y) > std::abs(n.x)) drop = 1;
    if (std::abs(n.z) > std::abs(drop == 0 ? n.x : n.y)) drop = 2;
    auto flat = [&](const Vec3& v) {
        switch (drop) {
            case 0: return Vec2{v.y, v.z};
            case 1: return Vec2{v.x, v.z};
            default: return Vec2{v.x, v.y};
        }
    };
    Vec2 A[3] = {flat(a0), flat(a1), flat(a2)};
    Vec2 B[3] = {flat(b0), flat(b1), flat(b2)};
    auto cross2 = [](const Vec2& u, const Vec2& v) { return u.x * v.y - u.y * v.x; };
    auto seg_cross = [&](const Vec2& p, const Vec2& q, const Vec2& r, const Vec2& s) {
        double d1 = cross2(q - p, r - p), d2 = cross2(q - p, s - p);
        double d3 = cross2(s - r, p - r), d4 = cross2(s - r, q - r);
        return d1 * d2 < 0 && d3 * d4 < 0;
    };
    auto inside = [&](const Vec2& p, const Vec2* t) {
        double s1 = cross2(t[1] - t[0], p - t[0]);
        double s2 = cross2(t[2] - t[1], p - t[1]);
        double s3 = cross2(t[0] - t[2], p - t[2]);
        return (s1 >= 0 && s2 >= 0 && s3 >= 0) || (s1 <= 0 && s2 <= 0 && s3 <= 0);
    };
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            if (seg_cross(A[i], A[(i + 1) % 3], B[j], B[(j + 1) % 3])) return true;
    if (inside(A[0], B) && inside(A[1], B) && inside(A[2], B)) return true;
    if (inside(B[0], A) && inside(B[1], A) && inside(B[2], A)) return true;
    return false;
}

}  // namespace metricsdetail

// Fraction of triangles that intersect some non-adjacent triangle. Pairs that
// share a vertex index are skipped, as are zero-area slivers (they carry no
// surface).
inline double self_intersection_ratio(const TriMesh& m) {
    if (m.t.empty()) return 0.0;
    std::vector<bool> bad(m.t.size(), false);
    std::vector<Box3> boxes(m.t.size());
    std::vector<bool> live(m.t.size(), false);
    for (size_t i = 0; i < m.t.size(); ++i) {
        boxes[i].expand(m.v[m.t[i].a]);
        boxes[i].expand(m.v[m.t[i].b]);
        boxes[i].expand(m.v[m.t[i].c]);
        live[i] = m.tri_area(m.t[i]) > 1e-14;
    }
    auto overlaps = [](const Box3& x, const Box3& y) {
        return x.lo.x <= y.hi.x && y.lo.x <= x.hi.x && x.lo.y <= y.hi.y && y.lo.y <= x.hi.y &&
               x.lo.z <= y.hi.z && y.lo.z <= x.hi.z;
    };
    for (size_t i = 0; i < m.t.size(); ++i) {
        if (!live[i]) continue;
        for (size_t j = i + 1; j < m.t.size(); ++j) {
            if (!live[j] || (bad[i] && bad[j])) continue;
            const auto& ti = m.t[i];
            const auto& tj = m.t[j];
            int share = 0;
            for (int u : {ti.a, ti.b, ti.c})
                for (int v : {tj.a, tj.b, tj.c})
                    if (u == v) ++share;
            if (share > 0) continue;
            if (!overlaps(boxes[i], boxes[j])) continue;
            if (metricsdetail::tri_tri_intersect(m.v[ti.a], m.v[ti.b], m.v[ti.c], m.v[tj.a],
                                                 m.v[tj.b], m.v[tj.c]))
                bad[i] = bad[j] = true;
        }
    }
    int n = 0;
    for (size_t i = 0; i < m.t.size(); ++i)
        if (bad[i]) ++n;
    return static_cast<double>(n) / static_cast<double>(m.t.size());
}

// ---------------------------------------------------------------------------
// Segmentation error
// ---------------------------------------------------------------------------

// Patches grow across mesh edges whose dihedral angle stays below the
// threshold; slivers with no usable normal merge into their neighbours.
inline int patch_count(const TriMesh& m, double dihedral_thresh_deg = 30.0) {
    if (m.t.empty()) return 0;
    brepdetail::UnionFind uf(m.t.size());
    std::unordered_map<long long, int> owner;
    auto key = [](int a, int b) {
        return (static_cast<long long>(a) << 32) | static_cast<unsigned>(b);
    };
    std::vector<Vec3> normals(m.t.size());
    for (size_t i = 0; i < m.t.size(); ++i) normals[i] = m.tri_normal(m.t[i]);
    double cos_thresh = std::cos(deg2rad(dihedral_thresh_deg));
    for (size_t i = 0; i < m.t.size(); ++i) {
        const auto& tr = m.t[i];
        int e[3][2] = {{tr.a, tr.b}, {tr.b, tr.c}, {tr.c, tr.a}};
        for (auto& ed : e) {
            auto it = owner.find(key(ed[1], ed[0]));
            if (it == owner.end()) {
                owner[key(ed[0], ed[1])] = static_cast<int>(i);
                continue;
            }
            int j = it->second;
            double ni = normals[i].norm(), nj = normals[j].norm();
            bool flat;
            if (ni < 1e-14 || nj < 1e-14)
                flat = true;  // sliver, merge through
            else
                flat = normals[i].dot(normals[j]) / (ni * nj) > cos_thresh;
            if (flat) uf.unite(static_cast<int>(i), j);
        }
    }
    std::vector<int> roots;
    for (size_t i = 0; i < m.t.size(); ++i) {
        int r = uf.find(static_cast<int>(i));
        if (std::find(roots.begin(), roots.end(), r) == roots.end()) roots.push_back(r);
    }
    return static_cast<int>(roots.size());
}

inline int seg_error(const TriMesh& a, const TriMesh& b, double dihedral_thresh_deg = 30.0) {
    return std::abs(patch_count(a, dihedral_thresh_deg) - patch_count(b, dihedral_thresh_deg));
}

// ---------------------------------------------------------------------------
// Primitive F1
// ---------------------------------------------------------------------------

enum class PrimitiveKind { Line, Arc, Circle, Extrusion, Chamfer, Fillet };

namespace metricsdetail {

// Each primitive becomes a fixed-length parameter vector in world
// coordinates; matching cost is the Chebyshev distance.
inline std::vector<std::vector<double>> extract_primitives(const Program& p, PrimitiveKind kind,
                                                           const ExecOptions& opt = {}) {
    std::vector<std::vector<double>> out;
    std::vector<Frame> frames;
    bool need_frames =
        kind == PrimitiveKind::Line || kind == PrimitiveKind::Arc || kind == PrimitiveKind::Circle;
    if (need_frames) frames = execute_program(p, opt).sketch_frames;

    size_t sketch_idx = 0;
    for (const auto& step : p.steps) {
        if (const auto* ep = std::get_if<EPartStep>(&step)) {
            for (const auto& sk : ep->sketches) {
                const Frame* fr = need_frames ? &frames[sketch_idx] : nullptr;
                ++sketch_idx;
                if (!need_frames) continue;
                for (const auto& prof : sk.profiles) {
                    for (const auto& loop : prof.loops) {
                        size_t n = loop.curves.size();
                        for (size_t i = 0; i < n; ++i) {
                            const auto& cur = loop.curves[i];
                            auto start_of = [&](size_t k) {
                                const auto& c = loop.curves[k % n];
                                if (const auto* ln = std::get_if<LineCurve>(&c))
                                    return Vec2{ln->start.x, ln->start.y};
                                const auto& ar = std::get<ArcCurve>(c);
                                return Vec2{ar.start.x, ar.start.y};
                            };
                            if (const auto* ci = std::get_if<CircleCurve>(&cur)) {
                                if (kind != PrimitiveKind::Circle) continue;
                                Vec3 c = fr->to_world({ci->center.x, ci->center.y});
                                out.push_back({c.x, c.y, c.z, ci->radius * fr->scale});
                            } else if (std::holds_alternative<LineCurve>(cur)) {
                                if (kind != PrimitiveKind::Line) continue;
                                Vec3 a = fr->to_world(start_of(i));
                                Vec3 b = fr->to_world(start_of(i + 1));
                                out.push_back({a.x, a.y, a.z, b.x, b.y, b.z});
                            } else {
                                if (kind != PrimitiveKind::Arc) continue;
                                const auto& ar = std::get<ArcCurve>(cur);
                                Vec3 a = fr->to_world({ar.start.x, ar.start.y});
                                Vec3 b = fr->to_world(start_of(i + 1));
                                double sweep = ar.orient == Orientation::CCW ? ar.sweep_deg
                                                                             : -ar.sweep_deg;
                                out.push_back({a.x, a.y, a.z, b.x, b.y, b.z, sweep / 360.0});
                            }
                        }
                    }
                }
            }
            if (kind == PrimitiveKind::Extrusion)
                out.push_back({ep->extrude.e_p, ep->extrude.e_n,
                               static_cast<double>(static_cast<int>(ep->extrude.op))});
        } else if (const auto* ch = std::get_if<ChamferStep>(&step)) {
            if (kind == PrimitiveKind::Chamfer)
                out.push_back({ch->distance, static_cast<double>(ch->edges.size())});
        } else if (const auto* fl = std::get_if<FilletStep>(&step)) {
            if (kind == PrimitiveKind::Fillet)
                out.push_back({fl->radius, static_cast<double>(fl->edges.size())});
        }
    }
    return out;
}

inline double chebyshev(const std::vector<double>& a, const std::vector<double>& b) {
    double d = 0;
    for (size_t i = 0; i < a.size(); ++i) d = std::max(d, std::abs(a[i] - b[i]));
    return d;
}

// O(n^3) Hungarian algorithm on a square padded cost matrix (minimization).
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    int n = static_cast<int>(cost.size());
    std::vector<double> u(n + 1), v(n + 1);
    std::vector<int> p(n + 1), way(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::vector<double> minv(n + 1, 1e300);
        std::vector<bool> used(n + 1, false);
        do {
            used[j0] = true;
            int i0 = p[j0], j1 = -1;
            double delta = 1e300;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0);
    }
    std::vector<int> match(n, -1);  // row -> column
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) match[p[j] - 1] = j - 1;
    return match;
}

}  // namespace metricsdetail

inline double primitive_f1(const Program& pred, const Program& gt, PrimitiveKind kind,
                           double tol = 1e-2, const ExecOptions& opt = {}) {
    auto a = metricsdetail::extract_primitives(pred, kind, opt);
    auto b = metricsdetail::extract_primitives(gt, kind, opt);
    if (a.empty() && b.empty()) return 1.0;
    if (a.empty() || b.empty()) return 0.0;
    int n = static_cast<int>(std::max(a.size(), b.size()));
    std::vector<std::vector<double>> cost(n, std::vector<double>(n, 1e6));
    for (size_t i = 0; i < a.size(); ++i)
        for (size_t j = 0; j < b.size(); ++j)
            if (a[i].size() == b[j].size()) cost[i][j] = metricsdetail::chebyshev(a[i], b[j]);
    auto match = metricsdetail::hungarian(cost);
    int tp = 0;
    for (size_t i = 0; i < a.size(); ++i) {
        int j = match[i];
        if (j >= 0 && j < static_cast<int>(b.size()) && cost[i][j] <= tol) ++tp;
    }
    double precision = static_cast<double>(tp) / a.size();
    double recall = static_cast<double>(tp) / b.size();
    if (precision + recall == 0) return 0.0;
    return 2 * precision * recall / (precision + recall);
}

}  // namespace pcad
