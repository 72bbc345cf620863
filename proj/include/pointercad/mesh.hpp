#pragma once

#include <algorithm>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "errors.hpp"
#include "mathx.hpp"

namespace pcad {

struct SoupTri {
    Vec3 a, b, c;
    int tag = 0;
};

// Indexed triangle mesh; triangles carry the analytic-surface tag of the
// face they tessellate.
struct TriMesh {
    struct Tri {
        int a, b, c;
        int tag;
    };
    std::vector<Vec3> v;
    std::vector<Tri> t;

    Vec3 pos(int i) const { return v[i]; }
    Vec3 tri_normal(const Tri& tr) const {
        return (v[tr.b] - v[tr.a]).cross(v[tr.c] - v[tr.a]);
    }
    double tri_area(const Tri& tr) const { return 0.5 * tri_normal(tr).norm(); }
    Vec3 tri_centroid(const Tri& tr) const { return (v[tr.a] + v[tr.b] + v[tr.c]) / 3.0; }

    double volume() const {
        double vol = 0;
        for (const auto& tr : t) vol += v[tr.a].dot(v[tr.b].cross(v[tr.c])) / 6.0;
        return vol;
    }

    Vec3 vector_area() const {
        Vec3 s{};
        for (const auto& tr : t) s = s + tri_normal(tr) * 0.5;
        return s;
    }

    double surface_area() const {
        double s = 0;
        for (const auto& tr : t) s += tri_area(tr);
        return s;
    }

    Box3 bbox() const {
        Box3 b;
        for (const auto& p : v) b.expand(p);
        return b;
    }

    bool empty() const { return t.empty(); }
};

namespace meshdetail {

struct CellKey {
    long long x, y, z;
    bool operator==(const CellKey& o) const { return x == o.x && y == o.y && z == o.z; }
};

struct CellHash {
    size_t operator()(const CellKey& k) const {
        return static_cast<size_t>(k.x * 73856093LL ^ k.y * 19349663LL ^ k.z * 83492791LL);
    }
};

inline CellKey cell_of(const Vec3& p, double cell) {
    return {static_cast<long long>(std::floor(p.x / cell)),
            static_cast<long long>(std::floor(p.y / cell)),
            static_cast<long long>(std::floor(p.z / cell))};
}

}  // namespace meshdetail

// Merge vertices closer than `tol` and drop zero-area triangles.
inline TriMesh weld(const std::vector<SoupTri>& soup, double tol = 1e-9) {
    TriMesh m;
    double cell = std::max(tol * 4.0, 1e-12);
    std::unordered_map<meshdetail::CellKey, std::vector<int>, meshdetail::CellHash> grid;
    auto intern = [&](const Vec3& p) -> int {
        auto base = meshdetail::cell_of(p, cell);
        for (long long dx = -1; dx <= 1; ++dx)
            for (long long dy = -1; dy <= 1; ++dy)
                for (long long dz = -1; dz <= 1; ++dz) {
                    auto it = grid.find({base.x + dx, base.y + dy, base.z + dz});
                    if (it == grid.end()) continue;
                    for (int idx : it->second)
                        if ((m.v[idx] - p).norm() <= tol) return idx;
                }
        m.v.push_back(p);
        grid[base].push_back(static_cast<int>(m.v.size() - 1));
        return static_cast<int>(m.v.size() - 1);
    };
    for (const auto& s : soup) {
        int a = intern(s.a), b = intern(s.b), c = intern(s.c);
        if (a == b || b == c || a == c) continue;
        m.t.push_back({a, b, c, s.tag});
    }
    return m;
}

inline void drop_degenerate(TriMesh& m, double area_tol) {
    std::vector<TriMesh::Tri> keep;
    keep.reserve(m.t.size());
    for (const auto& tr : m.t)
        if (m.tri_area(tr) > area_tol) keep.push_back(tr);
    m.t.swap(keep);
}

// Split triangle edges at vertices that lie on their interior so both sides
// of every edge share the same subdivision. No new vertices are created; each
// split consumes one junction point, so the recursion is bounded.
inline void heal_tjunctions(TriMesh& m, double tol = 1e-7) {
    for (int pass = 0; pass < 3; ++pass) {
        double cell = 0.05;
        Box3 bb = m.bbox();
        if (bb.valid()) cell = std::max(bb.diagonal() / 64.0, tol * 10);
        std::unordered_map<meshdetail::CellKey, std::vector<int>, meshdetail::CellHash> grid;
        for (size_t i = 0; i < m.v.size(); ++i)
            grid[meshdetail::cell_of(m.v[i], cell)].push_back(static_cast<int>(i));

        auto on_edge_points = [&](int ia, int ib, int iopp) {
            std::vector<int> found;
            Vec3 a = m.v[ia], b = m.v[ib];
            Vec3 d = b - a;
            double len2 = d.norm2();
            if (len2 == 0) return found;
            Box3 seg;
            seg.expand(a);
            seg.expand(b);
            auto lo = meshdetail::cell_of(seg.lo - Vec3{tol, tol, tol}, cell);
            auto hi = meshdetail::cell_of(seg.hi + Vec3{tol, tol, tol}, cell);
            for (long long x = lo.x; x <= hi.x; ++x)
                for (long long y = lo.y; y <= hi.y; ++y)
                    for (long long z = lo.z; z <= hi.z; ++z) {
                        auto it = grid.find({x, y, z});
                        if (it == grid.end()) continue;
                        for (int vi : it->second) {
                            if (vi == ia || vi == ib || vi == iopp) continue;
                            Vec3 p = m.v[vi];
                            // Points within tol of an endpoint are treated as
                            // that endpoint, not as a junction; splitting
                            // there would spawn sliver triangles.
                            if ((p - a).norm() <= tol || (p - b).norm() <= tol) continue;
                            double tpar = (p - a).dot(d) / len2;
                            if (tpar <= 0.0 || tpar >= 1.0) continue;
                            if ((a + d * tpar - p).norm() <= tol) found.push_back(vi);
                        }
                    }
            std::sort(found.begin(), found.end(), [&](int u, int w) {
                return (m.v[u] - a).norm2() < (m.v[w] - a).norm2();
            });
            return found;
        };

        // A cap triangle has one vertex on the interior of its opposite edge.
        // Drop it: neighbours across that edge get split at the cap vertex,
        // so the remaining edges pair up without it.
        auto is_cap = [&](int ia, int ib, int ic) {
            Vec3 a = m.v[ia], b = m.v[ib], c = m.v[ic];
            Vec3 d = b - a;
            double len2 = d.norm2();
            if (len2 == 0) return true;
            double tpar = (c - a).dot(d) / len2;
            if (tpar < 0.0 || tpar > 1.0) return false;
            return (a + d * tpar - c).norm() <= tol;
        };

        // Junction points are collected once per original edge; splits pass
        // the unconsumed points down to the child that owns the edge piece,
        // and the new interior edges never pick up points of their own. Each
        // split consumes one point, so the subdivision always terminates.
        struct Job {
            TriMesh::Tri t;
            std::vector<int> ab, bc, ca;
        };
        std::vector<TriMesh::Tri> out;
        bool changed = false;
        std::vector<Job> stack;
        auto rest = [](const std::vector<int>& v) {
            return std::vector<int>(v.begin() + 1, v.end());
        };
        for (const auto& tr : m.t) {
            if (is_cap(tr.a, tr.b, tr.c) || is_cap(tr.b, tr.c, tr.a) ||
                is_cap(tr.c, tr.a, tr.b)) {
                changed = true;
                continue;
            }
            stack.assign(1, {tr, on_edge_points(tr.a, tr.b, tr.c),
                             on_edge_points(tr.b, tr.c, tr.a),
                             on_edge_points(tr.c, tr.a, tr.b)});
            while (!stack.empty()) {
                Job cur = std::move(stack.back());
                stack.pop_back();
                const auto& [a, b, c, tag] = cur.t;
                if (!cur.ab.empty()) {
                    changed = true;
                    int p = cur.ab[0];
                    stack.push_back({{a, p, c, tag}, {}, {}, cur.ca});
                    stack.push_back({{p, b, c, tag}, rest(cur.ab), cur.bc, {}});
                } else if (!cur.bc.empty()) {
                    changed = true;
                    int p = cur.bc[0];
                    stack.push_back({{a, b, p, tag}, cur.ab, {}, {}});
                    stack.push_back({{a, p, c, tag}, {}, rest(cur.bc), cur.ca});
                } else if (!cur.ca.empty()) {
                    changed = true;
                    int p = cur.ca[0];
                    stack.push_back({{b, c, p, tag}, cur.bc, {}, {}});
                    stack.push_back({{b, p, a, tag}, {}, rest(cur.ca), cur.ab});
                } else {
                    out.push_back(cur.t);
                }
            }
        }
        m.t.swap(out);
        if (!changed) break;
    }
}

// Directed edges lacking a reverse partner bound the holes left where
// degenerate cap triangles were dropped during healing. Those holes are
// zero-area slivers, so fanning each boundary loop shut restores closedness
// without changing the shape.
inline void fill_hole_loops(TriMesh& m) {
    std::unordered_map<long long, int> dir;
    auto key = [](int a, int b) {
        return (static_cast<long long>(a) << 32) | static_cast<unsigned>(b);
    };
    for (size_t i = 0; i < m.t.size(); ++i) {
        const auto& tr = m.t[i];
        dir[key(tr.a, tr.b)] = tr.tag;
        dir[key(tr.b, tr.c)] = tr.tag;
        dir[key(tr.c, tr.a)] = tr.tag;
    }
    std::unordered_map<int, std::pair<int, int>> next;
    for (const auto& [k, tag] : dir) {
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffff);
        if (dir.find(key(b, a)) == dir.end()) next[a] = {b, tag};
    }
    while (!next.empty()) {
        int start = next.begin()->first;
        std::vector<int> loop;
        int tag = next.begin()->second.second;
        int cur = start;
        while (true) {
            auto it = next.find(cur);
            if (it == next.end()) break;
            loop.push_back(cur);
            cur = it->second.first;
            next.erase(it);
            if (cur == start) break;
        }
        if (cur != start || loop.size() < 3) continue;
        // boundary of the patch must be the reverse of the unmatched cycle
        std::reverse(loop.begin() + 1, loop.end());
        for (size_t k = 1; k + 1 < loop.size(); ++k)
            m.t.push_back({loop[0], loop[k], loop[k + 1], tag});
    }
}

// Two-manifold closedness: every directed edge must be matched by exactly one
// opposite directed edge.
inline bool is_closed_manifold(const TriMesh& m, std::string* why = nullptr) {
    std::unordered_map<long long, int> dir;
    auto key = [](int a, int b) {
        return (static_cast<long long>(a) << 32) | static_cast<unsigned>(b);
    };
    for (const auto& tr : m.t) {
        int e[3][2] = {{tr.a, tr.b}, {tr.b, tr.c}, {tr.c, tr.a}};
        for (auto& ed : e) {
            if (++dir[key(ed[0], ed[1])] > 1) {
                if (why) *why = "duplicate directed edge";
                return false;
            }
        }
    }
    for (const auto& [k, n] : dir) {
        int a = static_cast<int>(k >> 32), b = static_cast<int>(k & 0xffffffff);
        auto it = dir.find(key(b, a));
        if (it == dir.end()) {
            if (why) *why = "unmatched directed edge";
            return false;
        }
    }
    return true;
}

// Scale uniformly and recenter so the longest bbox axis spans exactly 1
// inside [-0.5, 0.5]^3.
inline TriMesh normalize_to_unit_box(const TriMesh& in) {
    Box3 bb = in.bbox();
    if (!bb.valid()) throw DegenerateGeometry("empty mesh");
    Vec3 ext = bb.extent();
    double longest = std::max({ext.x, ext.y, ext.z});
    if (longest <= 0) throw DegenerateGeometry("zero-extent mesh");
    Vec3 ctr = bb.center();
    TriMesh out = in;
    for (auto& p : out.v) p = (p - ctr) / longest;
    return out;
}

inline void write_stl(const TriMesh& m, const std::string& path) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw Error("IoError", "cannot open " + path);
    char header[80] = {0};
    std::snprintf(header, sizeof(header), "pointercad binary stl");
    f.write(header, 80);
    uint32_t n = static_cast<uint32_t>(m.t.size());
    f.write(reinterpret_cast<const char*>(&n), 4);
    for (const auto& tr : m.t) {
        Vec3 nr = m.tri_normal(tr).normalized();
        float buf[12] = {
            static_cast<float>(nr.x),        static_cast<float>(nr.y),
            static_cast<float>(nr.z),        static_cast<float>(m.v[tr.a].x),
            static_cast<float>(m.v[tr.a].y), static_cast<float>(m.v[tr.a].z),
            static_cast<float>(m.v[tr.b].x), static_cast<float>(m.v[tr.b].y),
            static_cast<float>(m.v[tr.b].z), static_cast<float>(m.v[tr.c].x),
            static_cast<float>(m.v[tr.c].y), static_cast<float>(m.v[tr.c].z)};
        f.write(reinterpret_cast<const char*>(buf), sizeof(buf));
        uint16_t attr = 0;
        f.write(reinterpret_cast<const char*>(&attr), 2);
    }
}

inline TriMesh read_stl(const std::string& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw Error("IoError", "cannot open " + path);
    char header[80];
    f.read(header, 80);
    uint32_t n = 0;
    f.read(reinterpret_cast<char*>(&n), 4);
    std::vector<SoupTri> soup;
    soup.reserve(n);
    for (uint32_t i = 0; i < n; ++i) {
        float buf[12];
        f.read(reinterpret_cast<char*>(buf), sizeof(buf));
        uint16_t attr;
        f.read(reinterpret_cast<char*>(&attr), 2);
        if (!f) throw Error("IoError", "truncated stl " + path);
        soup.push_back({{buf[3], buf[4], buf[5]},
                        {buf[6], buf[7], buf[8]},
                        {buf[9], buf[10], buf[11]},
                        0});
    }
    return weld(soup, 1e-7);
}

inline void write_obj(const TriMesh& m, const std::string& path) {
    std::ofstream f(path);
    if (!f) throw Error("IoError", "cannot open " + path);
    for (const auto& p : m.v) f << "v " << p.x << " " << p.y << " " << p.z << "\n";
    for (const auto& tr : m.t)
        f << "f " << tr.a + 1 << " " << tr.b + 1 << " " << tr.c + 1 << "\n";
}

}  // namespace pcad
