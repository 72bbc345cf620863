#pragma once

#include <memory>
#include <vector>

#include "mesh.hpp"

namespace pcad {

// BSP-based mesh CSG over tagged convex polygons. Coplanar face contacts are
// avoided upstream by inflating cutting solids with a small epsilon; the
// plane classifier therefore runs with a tight tolerance.
namespace csg {

constexpr double kPlaneEps = 1e-9;

struct Polygon {
    std::vector<Vec3> pts;
    int tag = 0;

    Vec3 normal() const {
        Vec3 n{};
        for (size_t i = 2; i < pts.size(); ++i)
            n = n + (pts[i - 1] - pts[0]).cross(pts[i] - pts[0]);
        return n;
    }
    void flip() { std::reverse(pts.begin(), pts.end()); }
};

struct Plane {
    Vec3 n;
    double w = 0;
    bool ok = false;

    static Plane from_polygon(const Polygon& p) {
        Plane pl;
        Vec3 n = p.normal();
        double len = n.norm();
        if (len < 1e-20) return pl;
        pl.n = n / len;
        pl.w = pl.n.dot(p.pts[0]);
        pl.ok = true;
        return pl;
    }
    void flip() {
        n = -n;
        w = -w;
    }

    enum Cls { Coplanar = 0, Front = 1, Back = 2, Spanning = 3 };

    void split(const Polygon& poly, std::vector<Polygon>& co_front,
               std::vector<Polygon>& co_back, std::vector<Polygon>& front,
               std::vector<Polygon>& back) const {
        int poly_cls = 0;
        std::vector<int> cls(poly.pts.size());
        for (size_t i = 0; i < poly.pts.size(); ++i) {
            double d = n.dot(poly.pts[i]) - w;
            int c = d < -kPlaneEps ? Back : (d > kPlaneEps ? Front : Coplanar);
            poly_cls |= c;
            cls[i] = c;
        }
        switch (poly_cls) {
            case Coplanar:
                (n.dot(Plane::from_polygon(poly).n) > 0 ? co_front : co_back).push_back(poly);
                break;
            case Front:
                front.push_back(poly);
                break;
            case Back:
                back.push_back(poly);
                break;
            default: {
                Polygon f, b;
                f.tag = b.tag = poly.tag;
                for (size_t i = 0; i < poly.pts.size(); ++i) {
                    size_t j = (i + 1) % poly.pts.size();
                    int ci = cls[i], cj = cls[j];
                    const Vec3& vi = poly.pts[i];
                    const Vec3& vj = poly.pts[j];
                    if (ci != Back) f.pts.push_back(vi);
                    if (ci != Front) b.pts.push_back(vi);
                    if ((ci | cj) == Spanning) {
                        double t = (w - n.dot(vi)) / n.dot(vj - vi);
                        Vec3 x = vi + (vj - vi) * t;
                        f.pts.push_back(x);
                        b.pts.push_back(x);
                    }
                }
                if (f.pts.size() >= 3) front.push_back(std::move(f));
                if (b.pts.size() >= 3) back.push_back(std::move(b));
                break;
            }
        }
    }
};

class Node {
  public:
    Node() = default;
    explicit Node(std::vector<Polygon> polys) { build(std::move(polys)); }

    void invert() {
        for (auto& p : polygons_) p.flip();
        if (plane_.ok) plane_.flip();
        if (front_) front_->invert();
        if (back_) back_->invert();
        std::swap(front_, back_);
    }

    std::vector<Polygon> clip_polygons(std::vector<Polygon> polys) const {
        if (!plane_.ok) return polys;
        std::vector<Polygon> front, back;
        for (auto& p : polys) plane_.split(p, front, back, front, back);
        if (front_) front = front_->clip_polygons(std::move(front));
        if (back_)
            back = back_->clip_polygons(std::move(back));
        else
            back.clear();
        front.insert(front.end(), back.begin(), back.end());
        return front;
    }

    void clip_to(const Node& other) {
        polygons_ = other.clip_polygons(std::move(polygons_));
        if (front_) front_->clip_to(other);
        if (back_) back_->clip_to(other);
    }

    std::vector<Polygon> all_polygons() const {
        std::vector<Polygon> out = polygons_;
        if (front_) {
            auto f = front_->all_polygons();
            out.insert(out.end(), f.begin(), f.end());
        }
        if (back_) {
            auto b = back_->all_polygons();
            out.insert(out.end(), b.begin(), b.end());
        }
        return out;
    }

    void build(std::vector<Polygon> polys) {
        if (polys.empty()) return;
        if (!plane_.ok) {
            for (const auto& p : polys) {
                plane_ = Plane::from_polygon(p);
                if (plane_.ok) break;
            }
            if (!plane_.ok) return;
        }
        std::vector<Polygon> front, back;
        for (auto& p : polys) plane_.split(p, polygons_, polygons_, front, back);
        if (!front.empty()) {
            if (!front_) front_ = std::make_unique<Node>();
            front_->build(std::move(front));
        }
        if (!back.empty()) {
            if (!back_) back_ = std::make_unique<Node>();
            back_->build(std::move(back));
        }
    }

  private:
    Plane plane_;
    std::vector<Polygon> polygons_;
    std::unique_ptr<Node> front_;
    std::unique_ptr<Node> back_;
};

inline std::vector<Polygon> to_polygons(const TriMesh& m) {
    std::vector<Polygon> out;
    out.reserve(m.t.size());
    for (const auto& tr : m.t)
        out.push_back({{m.v[tr.a], m.v[tr.b], m.v[tr.c]}, tr.tag});
    return out;
}

inline std::vector<SoupTri> to_soup(const std::vector<Polygon>& polys) {
    std::vector<SoupTri> soup;
    for (const auto& p : polys)
        for (size_t i = 2; i < p.pts.size(); ++i)
            soup.push_back({p.pts[0], p.pts[i - 1], p.pts[i], p.tag});
    return soup;
}

inline std::vector<Polygon> boolean_union(std::vector<Polygon> av, std::vector<Polygon> bv) {
    Node a(std::move(av)), b(std::move(bv));
    a.clip_to(b);
    b.clip_to(a);
    b.invert();
    b.clip_to(a);
    b.invert();
    auto out = a.all_polygons();
    auto bp = b.all_polygons();
    out.insert(out.end(), bp.begin(), bp.end());
    return out;
}

inline std::vector<Polygon> boolean_subtract(std::vector<Polygon> av, std::vector<Polygon> bv) {
    Node a(std::move(av)), b(std::move(bv));
    a.invert();
    a.clip_to(b);
    b.clip_to(a);
    b.invert();
    b.clip_to(a);
    b.invert();
    auto ap = a.all_polygons();
    auto bp = b.all_polygons();
    ap.insert(ap.end(), bp.begin(), bp.end());
    for (auto& p : ap) p.flip();
    return ap;
}

inline std::vector<Polygon> boolean_intersect(std::vector<Polygon> av, std::vector<Polygon> bv) {
    Node a(std::move(av)), b(std::move(bv));
    a.invert();
    b.clip_to(a);
    b.invert();
    a.clip_to(b);
    b.clip_to(a);
    auto ap = a.all_polygons();
    auto bp = b.all_polygons();
    ap.insert(ap.end(), bp.begin(), bp.end());
    for (auto& p : ap) p.flip();
    return ap;
}

}  // namespace csg

// Run a boolean on tagged meshes and rebuild a welded, healed, verified mesh.
enum class MeshBool { Union, Subtract, Intersect };

inline TriMesh mesh_boolean(const TriMesh& a, const TriMesh& b, MeshBool op) {
    std::vector<csg::Polygon> res;
    switch (op) {
        case MeshBool::Union:
            res = csg::boolean_union(csg::to_polygons(a), csg::to_polygons(b));
            break;
        case MeshBool::Subtract:
            res = csg::boolean_subtract(csg::to_polygons(a), csg::to_polygons(b));
            break;
        case MeshBool::Intersect:
            res = csg::boolean_intersect(csg::to_polygons(a), csg::to_polygons(b));
            break;
    }
    // Weld at the same tolerance the healer uses so a junction vertex can
    // never sit between the weld and heal thresholds of an edge endpoint.
    TriMesh m = weld(csg::to_soup(res), 1e-8);
    drop_degenerate(m, 1e-16);
    heal_tjunctions(m, 1e-8);
    drop_degenerate(m, 1e-18);
    fill_hole_loops(m);
    std::string why;
    if (!m.empty() && !is_closed_manifold(m, &why)) {
#ifdef PCAD_DEBUG_DUMP
        std::unordered_map<long long, int> dir;
        auto key = [](int x, int y) {
            return (static_cast<long long>(x) << 32) | static_cast<unsigned>(y);
        };
        for (const auto& tr : m.t)
            for (auto [x, y] : {std::pair{tr.a, tr.b}, {tr.b, tr.c}, {tr.c, tr.a}})
                ++dir[key(x, y)];
        for (const auto& [k, n] : dir) {
            int x = static_cast<int>(k >> 32), y = static_cast<int>(k & 0xffffffff);
            auto it = dir.find(key(y, x));
            if (n > 1 || it == dir.end())
                std::fprintf(stderr, "bad edge %d->%d n=%d rev=%d  (%.17g %.17g %.17g)-(%.17g %.17g %.17g)\n",
                             x, y, n, it == dir.end() ? 0 : it->second, m.v[x].x, m.v[x].y,
                             m.v[x].z, m.v[y].x, m.v[y].y, m.v[y].z);
        }
#endif
        throw NonManifoldResult("boolean produced a non-manifold mesh: " + why);
    }
    return m;
}

}  // namespace pcad
