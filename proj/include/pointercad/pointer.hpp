#pragma once

#include <optional>
#include <random>
#include <vector>

#include "brep.hpp"

namespace pcad {

constexpr int kEmbedDim = 128;
constexpr int kEmbedHidden = 256;

struct EmbedConfig {
    uint32_t seed = 42;
};

// Fixed pseudo-random encoder weights: a 1x1 convolution expanding sample
// channels to 256, global average pooling, and a linear projection to 128.
// Base planes get three fixed unit vectors of their own.
struct EmbedWeights {
    std::vector<double> face_w, face_b;  // 256 x kFaceChannels, 256
    std::vector<double> edge_w, edge_b;  // 256 x kEdgeChannels, 256
    std::vector<double> proj_w, proj_b;  // 128 x 256, 128
    std::vector<std::vector<double>> base;  // 3 x 128, unit
};

inline EmbedWeights make_embed_weights(uint32_t seed) {
    std::mt19937 rng(seed);
    auto draw = [&](std::vector<double>& v, size_t n, double scale) {
        std::normal_distribution<double> d(0.0, scale);
        v.resize(n);
        for (auto& x : v) x = d(rng);
    };
    EmbedWeights w;
    draw(w.face_w, kEmbedHidden * kFaceChannels, 1.0 / std::sqrt(kFaceChannels));
    draw(w.face_b, kEmbedHidden, 0.1);
    draw(w.edge_w, kEmbedHidden * kEdgeChannels, 1.0 / std::sqrt(kEdgeChannels));
    draw(w.edge_b, kEmbedHidden, 0.1);
    draw(w.proj_w, kEmbedDim * kEmbedHidden, 1.0 / std::sqrt(kEmbedHidden));
    draw(w.proj_b, kEmbedDim, 0.1);
    w.base.resize(3);
    for (auto& b : w.base) {
        draw(b, kEmbedDim, 1.0);
        double n = 0;
        for (double x : b) n += x * x;
        n = std::sqrt(n);
        for (double& x : b) x /= n;
    }
    return w;
}

namespace pointerdetail {

inline std::vector<double> embed_grid(const std::vector<double>& tensor, int channels,
                                      const std::vector<double>& conv_w,
                                      const std::vector<double>& conv_b,
                                      const EmbedWeights& w) {
    size_t positions = tensor.size() / channels;
    std::vector<double> pooled(kEmbedHidden, 0.0);
    for (size_t p = 0; p < positions; ++p) {
        for (int o = 0; o < kEmbedHidden; ++o) {
            double acc = conv_b[o];
            for (int c = 0; c < channels; ++c)
                acc += conv_w[o * channels + c] * tensor[p * channels + c];
            if (acc > 0) pooled[o] += acc;  // ReLU folded into the pooling sum
        }
    }
    for (double& x : pooled) x /= static_cast<double>(positions);
    std::vector<double> out(kEmbedDim);
    for (int o = 0; o < kEmbedDim; ++o) {
        double acc = w.proj_b[o];
        for (int i = 0; i < kEmbedHidden; ++i) acc += w.proj_w[o * kEmbedHidden + i] * pooled[i];
        out[o] = acc;
    }
    double n = 0;
    for (double x : out) n += x * x;
    n = std::sqrt(n);
    if (n > 0)
        for (double& x : out) x /= n;
    return out;
}

}  // namespace pointerdetail

inline std::vector<double> embed_face_tensor(const FaceTensor& t, const EmbedWeights& w) {
    return pointerdetail::embed_grid(t, kFaceChannels, w.face_w, w.face_b, w);
}

inline std::vector<double> embed_edge_tensor(const EdgeTensor& t, const EmbedWeights& w) {
    return pointerdetail::embed_grid(t, kEdgeChannels, w.edge_w, w.edge_b, w);
}

inline const std::vector<double>& embed_base_plane(BasePlaneId id, const EmbedWeights& w) {
    return w.base[static_cast<int>(id)];
}

// Candidate faces are the model faces plus the three base planes; candidate
// edges are the model edges. Entities are ordered by stable id, embeddings are
// unit vectors, and classes partition each list into geometric equivalence
// groups (coplanar carriers for faces, collinear carriers for edges).
struct CandidateSet {
    std::vector<EntityRef> faces;
    std::vector<EntityRef> edges;
    std::vector<std::vector<double>> face_emb;
    std::vector<std::vector<double>> edge_emb;
    std::vector<std::vector<int>> face_classes;
    std::vector<std::vector<int>> edge_classes;
    std::vector<int> face_class_of;  // candidate index -> class index
    std::vector<int> edge_class_of;

    int face_index(const EntityRef& r) const {
        for (size_t i = 0; i < faces.size(); ++i)
            if (faces[i] == r) return static_cast<int>(i);
        return -1;
    }
    int edge_index(const EntityRef& r) const {
        for (size_t i = 0; i < edges.size(); ++i)
            if (edges[i] == r) return static_cast<int>(i);
        return -1;
    }
};

struct PointerTruth {
    std::vector<EntityRef> positives;
    std::vector<EntityRef> negatives;
};

namespace pointerdetail {

inline bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }
inline bool near(const Vec3& a, const Vec3& b, double tol) { return (a - b).norm() <= tol; }

inline bool parallel_unsigned(const Vec3& a, const Vec3& b, double tol) {
    return a.cross(b).norm() <= tol;
}

// Unoriented plane carriers coincide: normals parallel up to sign and the
// points mutually on-plane. Sign is ignored because the dr token fixes the
// sketch normal orientation downstream.
inline bool same_plane(const PlaneSurface& a, const PlaneSurface& b, double tol) {
    if (!parallel_unsigned(a.normal, b.normal, tol)) return false;
    return std::abs((b.point - a.point).dot(a.normal)) <= tol;
}

inline bool same_axis(const Vec3& p1, const Vec3& d1, const Vec3& p2, const Vec3& d2,
                      double tol) {
    if (!parallel_unsigned(d1, d2, tol)) return false;
    Vec3 rel = p2 - p1;
    return (rel - d1 * rel.dot(d1)).norm() <= tol;
}

inline bool same_carrier(const AnalyticSurface& a, const AnalyticSurface& b, double tol) {
    if (a.index() != b.index()) return false;
    if (const auto* pa = std::get_if<PlaneSurface>(&a))
        return same_plane(*pa, std::get<PlaneSurface>(b), tol);
    if (const auto* ca = std::get_if<CylinderSurface>(&a)) {
        const auto& cb = std::get<CylinderSurface>(b);
        return near(ca->radius, cb.radius, tol) &&
               same_axis(ca->axis_point, ca->axis_dir, cb.axis_point, cb.axis_dir, tol);
    }
    if (const auto* na = std::get_if<ConeSurface>(&a)) {
        const auto& nb = std::get<ConeSurface>(b);
        return near(na->apex, nb.apex, tol) && near(na->axis_dir, nb.axis_dir, tol) &&
               near(na->half_angle, nb.half_angle, tol);
    }
    const auto& ta = std::get<TorusSurface>(a);
    const auto& tb = std::get<TorusSurface>(b);
    return near(ta.center, tb.center, tol) &&
           parallel_unsigned(ta.axis_dir, tb.axis_dir, tol) &&
           near(ta.major_r, tb.major_r, tol) && near(ta.minor_r, tb.minor_r, tol);
}

inline bool same_carrier(const EdgeCurve& a, const EdgeCurve& b, double tol) {
    const auto circle_of = [](const EdgeCurve& c) -> std::optional<Circle3> {
        if (const auto* ci = std::get_if<Circle3>(&c)) return *ci;
        if (const auto* ar = std::get_if<Arc3>(&c)) return Circle3{ar->center, ar->axis, ar->radius};
        return std::nullopt;
    };
    if (const auto* la = std::get_if<Line3>(&a)) {
        const auto* lb = std::get_if<Line3>(&b);
        if (!lb) return false;
        return same_axis(la->p0, la->dir(), lb->p0, lb->dir(), tol);
    }
    auto ca = circle_of(a), cb = circle_of(b);
    if (ca && cb)
        return near(ca->center, cb->center, tol) && parallel_unsigned(ca->axis, cb->axis, tol) &&
               near(ca->radius, cb->radius, tol);
    return false;  // polylines never share a carrier
}

template <typename Carrier, typename Fn>
std::vector<std::vector<int>> group_by_carrier(const std::vector<Carrier>& carriers, Fn&& same) {
    std::vector<std::vector<int>> groups;
    std::vector<int> owner(carriers.size(), -1);
    for (size_t i = 0; i < carriers.size(); ++i) {
        for (auto& g : groups) {
            if (same(carriers[g[0]], carriers[i])) {
                g.push_back(static_cast<int>(i));
                owner[i] = 1;
                break;
            }
        }
        if (owner[i] < 0) groups.push_back({static_cast<int>(i)});
    }
    return groups;
}

}  // namespace pointerdetail

// Group face candidates whose carrier planes (or identical curved carriers)
// coincide, and edge candidates whose carrier lines or circles coincide.
inline void equivalence_classes(const Solid& s, CandidateSet& set, double tol) {
    std::vector<AnalyticSurface> face_carriers;
    for (const auto& r : set.faces) {
        if (r.kind == EntityRef::Kind::BasePlane)
            face_carriers.push_back(base_plane_surface(static_cast<BasePlaneId>(r.stable_id)));
        else
            face_carriers.push_back(s.face_by_id(r.stable_id)->surface);
    }
    std::vector<EdgeCurve> edge_carriers;
    for (const auto& r : set.edges) edge_carriers.push_back(s.edge_by_id(r.stable_id)->curve);

    set.face_classes = pointerdetail::group_by_carrier(
        face_carriers,
        [&](const AnalyticSurface& a, const AnalyticSurface& b) {
            return pointerdetail::same_carrier(a, b, tol);
        });
    set.edge_classes = pointerdetail::group_by_carrier(
        edge_carriers, [&](const EdgeCurve& a, const EdgeCurve& b) {
            return pointerdetail::same_carrier(a, b, tol);
        });
    set.face_class_of.assign(set.faces.size(), -1);
    for (size_t g = 0; g < set.face_classes.size(); ++g)
        for (int i : set.face_classes[g]) set.face_class_of[i] = static_cast<int>(g);
    set.edge_class_of.assign(set.edges.size(), -1);
    for (size_t g = 0; g < set.edge_classes.size(); ++g)
        for (int i : set.edge_classes[g]) set.edge_class_of[i] = static_cast<int>(g);
}

inline CandidateSet enumerate_candidates(const Solid& s, const EmbedConfig& cfg = {}) {
    if (!s.empty()) {
        std::string why;
        if (!is_closed_manifold(s.mesh, &why))
            throw NonManifoldInput("candidate enumeration needs a manifold solid: " + why);
    }
    EmbedWeights w = make_embed_weights(cfg.seed);
    CandidateSet set;
    for (int b = 0; b < 3; ++b) {
        set.faces.push_back({0, EntityRef::Kind::BasePlane, b});
        set.face_emb.push_back(embed_base_plane(static_cast<BasePlaneId>(b), w));
    }
    for (const auto& f : s.faces) {
        set.faces.push_back({0, EntityRef::Kind::Face, f.id});
        set.face_emb.push_back(embed_face_tensor(sample_face(s, f), w));
    }
    for (const auto& e : s.edges) {
        set.edges.push_back({0, EntityRef::Kind::Edge, e.id});
        set.edge_emb.push_back(embed_edge_tensor(sample_edge(s, e), w));
    }
    equivalence_classes(s, set, s.tol());
    return set;
}

// Highest cosine similarity wins; ties go to the lowest stable id. The
// candidate lists are ordered by stable id (base planes first), so keeping
// the first strict maximum implements the tie rule.
inline EntityRef resolve(const std::vector<double>& query, const CandidateSet& set,
                         EntityRef::Kind kind) {
    const auto& refs = kind == EntityRef::Kind::Edge ? set.edges : set.faces;
    const auto& embs = kind == EntityRef::Kind::Edge ? set.edge_emb : set.face_emb;
    if (refs.empty()) throw NoCandidates("no candidates of the requested kind");
    double qn = 0;
    for (double x : query) qn += x * x;
    qn = std::sqrt(qn);
    int best = 0;
    double best_cos = -2;
    for (size_t i = 0; i < refs.size(); ++i) {
        double dot = 0;
        for (size_t k = 0; k < query.size() && k < embs[i].size(); ++k)
            dot += query[k] * embs[i][k];
        double c = qn > 0 ? dot / qn : 0.0;  // embeddings are unit already
        if (c > best_cos + 1e-15) {
            best_cos = c;
            best = static_cast<int>(i);
        }
    }
    return refs[best];
}

inline PointerTruth ground_truth(const EntityRef& target, const CandidateSet& set) {
    bool is_edge = target.kind == EntityRef::Kind::Edge;
    const auto& refs = is_edge ? set.edges : set.faces;
    const auto& classes = is_edge ? set.edge_classes : set.face_classes;
    const auto& class_of = is_edge ? set.edge_class_of : set.face_class_of;
    int idx = is_edge ? set.edge_index(target) : set.face_index(target);
    if (idx < 0) throw UnknownEntity("target entity is not in the candidate set");
    PointerTruth t;
    const auto& cls = classes[class_of[idx]];
    std::vector<bool> pos(refs.size(), false);
    for (int i : cls) pos[i] = true;
    for (size_t i = 0; i < refs.size(); ++i)
        (pos[i] ? t.positives : t.negatives).push_back(refs[i]);
    return t;
}

}  // namespace pcad
