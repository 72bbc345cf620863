#pragma once

#include <optional>
#include <random>

#include "kernel.hpp"

namespace pcad {

// Seeded generator of grammar-valid, executable programs. Each model index
// maps deterministically to one program; proposals that fail to execute are
// retried with fresh randomness, so every returned program builds a manifold
// solid.
struct CorpusSpec {
    int n_models = 100;
    int max_steps = 3;            // total steps per program (upper bound)
    double face_sketch_prob = 0.8;  // later sketches target a model face
    double circle_prob = 0.25;      // circular instead of rectangular profile
    double blend_prob = 0.25;       // chamfer/fillet instead of an extrude step
    double snap_prob = 0.4;         // snap one rectangle side to a face edge
    double cut_prob = 0.45;         // Cut instead of Join for later extrudes
    bool axis_aligned = false;      // rectangles on base planes, 1/64 grid only
    uint32_t seed = 1;
    ExecOptions exec;  // settings under which executability is verified
};

namespace corpusdetail {

inline double grid64(int units) { return units / 64.0; }

inline Dir closest_dir(const Vec3& n) {
    double ax = std::abs(n.x), ay = std::abs(n.y), az = std::abs(n.z);
    if (ax >= ay && ax >= az) return n.x >= 0 ? Dir::Xp : Dir::Xn;
    if (ay >= az) return n.y >= 0 ? Dir::Yp : Dir::Yn;
    return n.z >= 0 ? Dir::Zp : Dir::Zn;
}

inline Loop rect_loop(double x0, double y0, double x1, double y1) {
    Loop loop;
    loop.curves.emplace_back(LineCurve{{x0, y0}});
    loop.curves.emplace_back(LineCurve{{x1, y0}});
    loop.curves.emplace_back(LineCurve{{x1, y1}});
    loop.curves.emplace_back(LineCurve{{x0, y1}});
    return loop;
}

inline Sketch one_loop_sketch(const EntityRef& plane, Dir dr, Loop loop) {
    Sketch sk;
    sk.plane = plane;
    sk.frame.dr = dr;
    Profile pr;
    pr.loops.push_back(std::move(loop));
    sk.profiles.push_back(pr);
    return sk;
}

inline Dir plane_dir(BasePlaneId plane, bool positive) {
    switch (plane) {
        case kBaseRight: return positive ? Dir::Xp : Dir::Xn;
        case kBaseFront: return positive ? Dir::Yp : Dir::Yn;
        default: return positive ? Dir::Zp : Dir::Zn;
    }
}

inline EPartStep base_step(const CorpusSpec& spec, std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto plane = static_cast<BasePlaneId>(std::uniform_int_distribution<int>(0, 2)(rng));
    Dir dr = plane_dir(plane, unif(rng) < 0.8);
    EPartStep ep;
    if (spec.axis_aligned) {
        std::uniform_int_distribution<int> org(-48, 0), side(26, 64), hgt(16, 64);
        double x0 = grid64(org(rng)), y0 = grid64(org(rng));
        ep.sketches.push_back(one_loop_sketch(
            base_plane_ref(plane), dr,
            rect_loop(x0, y0, x0 + grid64(side(rng)), y0 + grid64(side(rng)))));
        ep.extrude = {grid64(hgt(rng)), 0.0, BoolOp::New};
        return ep;
    }
    std::uniform_real_distribution<double> center(-0.5, 0.5), half(0.2, 0.6);
    std::uniform_real_distribution<double> radius(0.25, 0.55), height(0.4, 1.0);
    double cx = center(rng), cy = center(rng);
    Loop loop;
    if (unif(rng) < spec.circle_prob) {
        loop.curves.emplace_back(CircleCurve{{cx, cy}, radius(rng)});
    } else {
        double hx = half(rng), hy = half(rng);
        loop = rect_loop(cx - hx, cy - hy, cx + hx, cy + hy);
    }
    ep.sketches.push_back(one_loop_sketch(base_plane_ref(plane), dr, std::move(loop)));
    ep.extrude = {height(rng), 0.0, BoolOp::New};
    return ep;
}

inline std::optional<Step> propose_axis_step(std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    auto plane = static_cast<BasePlaneId>(std::uniform_int_distribution<int>(0, 2)(rng));
    std::uniform_int_distribution<int> org(-32, 8), side(13, 40), hgt(10, 48);
    double x0 = grid64(org(rng)), y0 = grid64(org(rng));
    EPartStep ep;
    ep.sketches.push_back(one_loop_sketch(
        base_plane_ref(plane), plane_dir(plane, true),
        rect_loop(x0, y0, x0 + grid64(side(rng)), y0 + grid64(side(rng)))));
    ep.extrude = {grid64(hgt(rng)), 0.0, unif(rng) < 0.5 ? BoolOp::Cut : BoolOp::Join};
    return Step{ep};
}

// Snap one side of a rectangle onto a straight boundary edge of the target
// face whose carrier is parallel to that side in sketch coordinates.
inline void maybe_snap_side(Loop& rect, const Solid& solid, int face_id, const Frame& frame,
                            int step_index, double hx, double hy, std::mt19937& rng) {
    struct Carrier {
        int edge_id;
        bool vertical;  // carrier parallel to the sketch y axis
        double c;       // x (vertical) or y (horizontal) intercept
    };
    std::vector<Carrier> carriers;
    for (const BrepEdge& e : solid.edges) {
        if (e.f1 != face_id && e.f2 != face_id) continue;
        const auto* ln = std::get_if<Line3>(&e.curve);
        if (!ln) continue;
        Vec2 a = frame.to_plane(ln->p0), b = frame.to_plane(ln->p1);
        Vec2 d = b - a;
        double len = d.norm();
        if (len < 1e-9) continue;
        d = d * (1.0 / len);
        if (std::abs(d.y) > 0.999)
            carriers.push_back({e.id, true, a.x});
        else if (std::abs(d.x) > 0.999)
            carriers.push_back({e.id, false, a.y});
    }
    if (carriers.empty()) return;
    const Carrier& ca =
        carriers[std::uniform_int_distribution<size_t>(0, carriers.size() - 1)(rng)];
    EntityRef ref{step_index, EntityRef::Kind::Edge, ca.edge_id};
    // corners: 0=(-hx,-hy) 1=(hx,-hy) 2=(hx,hy) 3=(-hx,hy)
    auto set_snap = [&](int i, int j) {
        std::get<LineCurve>(rect.curves[i]).start.snap = ref;
        std::get<LineCurve>(rect.curves[j]).start.snap = ref;
    };
    if (ca.vertical) {
        bool left = std::abs(ca.c + hx) < std::abs(ca.c - hx);
        if (left && ca.c < hx - 0.05) set_snap(0, 3);
        if (!left && ca.c > -hx + 0.05) set_snap(1, 2);
    } else {
        bool bottom = std::abs(ca.c + hy) < std::abs(ca.c - hy);
        if (bottom && ca.c < hy - 0.05) set_snap(0, 1);
        if (!bottom && ca.c > -hy + 0.05) set_snap(2, 3);
    }
}

inline std::optional<Step> propose_face_step(const CorpusSpec& spec, const Solid& cur,
                                             int step_index, std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::vector<const BrepFace*> faces;
    for (const BrepFace& f : cur.faces)
        if (is_plane(f.surface) && f.area > 0.04) faces.push_back(&f);
    if (faces.empty()) return std::nullopt;
    const BrepFace* f =
        faces[std::uniform_int_distribution<size_t>(0, faces.size() - 1)(rng)];
    Vec3 normal = std::get<PlaneSurface>(f->surface).normal * f->orient;
    Dir dr = closest_dir(normal);
    Vec3 n3 = dir_vector(dr);
    Vec3 aux = dir_auxiliary(dr);

    Sketch sk;
    sk.plane = {step_index, EntityRef::Kind::Face, f->id};
    sk.frame.dr = dr;
    sk.frame.origin_hint = {f->centroid.dot(aux), f->centroid.dot(n3.cross(aux))};
    Frame frame;
    try {
        frame = build_frame(resolve_plane(cur, sk.plane), sk.frame);
    } catch (const Error&) {
        return std::nullopt;
    }

    double base = std::sqrt(f->area);
    std::uniform_real_distribution<double> frac(0.2, 0.45), aspect(0.6, 1.0);
    double half = std::clamp(frac(rng) * base, 0.05, 0.5);
    Loop loop;
    bool circle = unif(rng) < spec.circle_prob;
    if (circle) {
        loop.curves.emplace_back(CircleCurve{{0.0, 0.0}, half});
    } else {
        double hx = half * aspect(rng), hy = half * aspect(rng);
        loop = rect_loop(-hx, -hy, hx, hy);
        if (unif(rng) < spec.snap_prob)
            maybe_snap_side(loop, cur, f->id, frame, step_index, hx, hy, rng);
    }
    Profile pr;
    pr.loops.push_back(std::move(loop));
    sk.profiles.push_back(std::move(pr));

    EPartStep ep;
    ep.sketches.push_back(std::move(sk));
    std::uniform_real_distribution<double> height(0.15, 0.5), depth(0.1, 0.35);
    if (unif(rng) < spec.cut_prob)
        ep.extrude = {0.0, depth(rng), BoolOp::Cut};
    else
        ep.extrude = {height(rng), 0.0, BoolOp::Join};
    return Step{ep};
}

inline std::optional<Step> propose_blend_step(const Solid& cur, int step_index,
                                              std::mt19937& rng) {
    std::uniform_real_distribution<double> dd(0.03, 0.08);
    double dist = dd(rng);
    std::vector<int> cands;
    for (const BrepEdge& e : cur.edges) {
        if (std::holds_alternative<Line3>(e.curve)) {
            try {
                auto info = kerneldetail::straight_edge_info(cur, e);
                if ((info.p1 - info.p0).norm() > 3.0 * dist) cands.push_back(e.id);
            } catch (const Error&) {
            }
        } else if (std::holds_alternative<Circle3>(e.curve)) {
            try {
                auto ri = kerneldetail::rim_info(cur, e);
                if (dist < 0.8 * ri.r && (ri.wall_depth <= 0 || dist < 0.8 * ri.wall_depth) &&
                    ri.cap_inner < ri.r - dist - 0.02)
                    cands.push_back(e.id);
            } catch (const Error&) {
            }
        }
    }
    if (cands.empty()) return std::nullopt;
    std::shuffle(cands.begin(), cands.end(), rng);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    size_t take = std::min<size_t>(cands.size(), unif(rng) < 0.4 ? 2 : 1);
    std::vector<EntityRef> refs;
    for (size_t i = 0; i < take; ++i)
        refs.push_back({step_index, EntityRef::Kind::Edge, cands[i]});
    if (unif(rng) < 0.5) return Step{ChamferStep{dist, refs}};
    return Step{FilletStep{dist, refs}};
}

inline std::optional<Program> try_generate(const CorpusSpec& spec, std::mt19937& rng) {
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    Program prog;
    prog.steps.emplace_back(base_step(spec, rng));
    Solid cur;
    try {
        cur = execute_program(prog, spec.exec).final_solid();
    } catch (const Error&) {
        return std::nullopt;
    }

    int extra = spec.max_steps > 1
                    ? std::uniform_int_distribution<int>(1, spec.max_steps - 1)(rng)
                    : 0;
    for (int s = 0; s < extra; ++s) {
        for (int attempt = 0; attempt < 4; ++attempt) {
            int k = static_cast<int>(prog.steps.size());
            std::optional<Step> step;
            if (spec.axis_aligned)
                step = propose_axis_step(rng);
            else if (unif(rng) < spec.blend_prob)
                step = propose_blend_step(cur, k, rng);
            else if (unif(rng) < spec.face_sketch_prob)
                step = propose_face_step(spec, cur, k, rng);
            else
                step = Step{base_step(spec, rng)};
            if (!step) continue;
            if (const auto* ep = std::get_if<EPartStep>(&*step))
                if (k > 0 && ep->extrude.op == BoolOp::New) {
                    auto fixed = *ep;
                    fixed.extrude.op = BoolOp::Join;
                    step = Step{fixed};
                }
            prog.steps.push_back(*step);
            try {
                cur = execute_program(prog, spec.exec).final_solid();
                break;
            } catch (const Error&) {
                prog.steps.pop_back();
            }
        }
    }
    if (!validate(prog).empty()) return std::nullopt;
    return prog;
}

}  // namespace corpusdetail

inline Program generate_program(const CorpusSpec& spec, int index) {
    std::seed_seq seq{spec.seed, static_cast<uint32_t>(index), 0x9e3779b9u};
    std::mt19937 rng(seq);
    for (int attempt = 0; attempt < 32; ++attempt) {
        auto p = corpusdetail::try_generate(spec, rng);
        if (p) return *p;
    }
    // deterministic fallback that always executes
    EPartStep ep;
    ep.sketches.push_back(corpusdetail::one_loop_sketch(
        base_plane_ref(kBaseTop), Dir::Zp, corpusdetail::rect_loop(-0.5, -0.5, 0.5, 0.5)));
    ep.extrude = {0.5, 0.0, BoolOp::New};
    Program prog;
    prog.steps.emplace_back(ep);
    return prog;
}

inline std::vector<Program> generate_corpus(const CorpusSpec& spec) {
    std::vector<Program> out;
    out.reserve(spec.n_models);
    for (int i = 0; i < spec.n_models; ++i) out.push_back(generate_program(spec, i));
    return out;
}

// ---------------------------------------------------------------------------
// Voxel volume oracle for axis-aligned programs
// ---------------------------------------------------------------------------

// Independent volume estimate that bypasses the mesh kernel entirely: each
// step must be a rectangle on a base plane (axis-aligned box in world space);
// the boolean chain is evaluated per voxel center on an n^3 grid over
// [-2,2]^3. With coordinates on the 1/64 grid and the default n = 256 no box
// boundary passes through a voxel center, so the count is exact.
inline double voxel_volume(const Program& program, int n = 256) {
    struct BoxOp {
        Vec3 lo, hi;
        BoolOp op;
    };
    std::vector<BoxOp> boxes;
    for (const Step& step : program.steps) {
        const auto* ep = std::get_if<EPartStep>(&step);
        if (!ep) throw UnsupportedOperation("voxel oracle supports extrude steps only");
        for (const Sketch& sk : ep->sketches) {
            if (sk.explicit_frame || sk.plane.kind != EntityRef::Kind::BasePlane ||
                sk.frame.rotation_deg != 0 || sk.frame.scale != 1.0)
                throw UnsupportedOperation(
                    "voxel oracle needs unrotated base-plane sketches");
            Frame frame = build_frame(
                base_plane_surface(static_cast<BasePlaneId>(sk.plane.stable_id)), sk.frame);
            for (const Profile& pr : sk.profiles) {
                for (const Loop& loop : pr.loops) {
                    if (loop.curves.size() != 4)
                        throw UnsupportedOperation("voxel oracle needs rectangle loops");
                    std::vector<Vec2> pts;
                    for (const Curve& c : loop.curves) {
                        const auto* ln = std::get_if<LineCurve>(&c);
                        if (!ln || ln->start.snap)
                            throw UnsupportedOperation(
                                "voxel oracle needs unsnapped straight segments");
                        pts.push_back({ln->start.x, ln->start.y});
                    }
                    double x0 = pts[0].x, x1 = pts[0].x, y0 = pts[0].y, y1 = pts[0].y;
                    for (const Vec2& p : pts) {
                        x0 = std::min(x0, p.x);
                        x1 = std::max(x1, p.x);
                        y0 = std::min(y0, p.y);
                        y1 = std::max(y1, p.y);
                    }
                    for (const Vec2& p : pts)
                        if ((p.x != x0 && p.x != x1) || (p.y != y0 && p.y != y1))
                            throw UnsupportedOperation(
                                "voxel oracle needs axis-aligned rectangles");
                    BoxOp box;
                    box.op = ep->extrude.op;
                    bool first = true;
                    for (double px : {x0, x1})
                        for (double py : {y0, y1})
                            for (double e : {ep->extrude.e_p, -ep->extrude.e_n}) {
                                Vec3 q = frame.to_world({px, py}) + frame.w * e;
                                if (first) {
                                    box.lo = box.hi = q;
                                    first = false;
                                } else {
                                    box.lo = {std::min(box.lo.x, q.x), std::min(box.lo.y, q.y),
                                              std::min(box.lo.z, q.z)};
                                    box.hi = {std::max(box.hi.x, q.x), std::max(box.hi.y, q.y),
                                              std::max(box.hi.z, q.z)};
                                }
                            }
                    boxes.push_back(box);
                }
            }
        }
    }
    if (boxes.empty()) throw MalformedProgram("program has no steps");

    double h = 4.0 / n;
    // per-axis membership tables: voxel centers sit at -2 + (i + 0.5) h
    size_t nb = boxes.size();
    std::vector<std::vector<uint8_t>> inx(nb), iny(nb), inz(nb);
    for (size_t b = 0; b < nb; ++b) {
        inx[b].assign(n, 0);
        iny[b].assign(n, 0);
        inz[b].assign(n, 0);
        for (int i = 0; i < n; ++i) {
            double c = -2.0 + (i + 0.5) * h;
            inx[b][i] = c >= boxes[b].lo.x && c <= boxes[b].hi.x;
            iny[b][i] = c >= boxes[b].lo.y && c <= boxes[b].hi.y;
            inz[b][i] = c >= boxes[b].lo.z && c <= boxes[b].hi.z;
        }
    }
    long long count = 0;
    for (int k = 0; k < n; ++k)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                bool inside = false;
                for (size_t b = 0; b < nb; ++b) {
                    bool in = inx[b][i] && iny[b][j] && inz[b][k];
                    if (b == 0)
                        inside = in;
                    else
                        switch (boxes[b].op) {
                            case BoolOp::Cut: inside = inside && !in; break;
                            case BoolOp::Intersect: inside = inside && in; break;
                            default: inside = inside || in; break;
                        }
                }
                count += inside;
            }
    return count * h * h * h;
}

}  // namespace pcad
