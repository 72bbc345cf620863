#pragma once

#include <random>

#include "pointercad/codec.hpp"

namespace pcad::testing {

// Random grammar-valid (not necessarily executable) programs for codec and
// parser round-trip checks. Entity references use arbitrary stable ids.
inline Program random_syntactic_program(std::mt19937& rng) {
    std::uniform_real_distribution<double> coord(-2.0, 2.0);
    std::uniform_real_distribution<double> unit(0.05, 1.0);
    std::uniform_int_distribution<int> small(0, 3);
    auto maybe_snap = [&](Point2 p) {
        if (small(rng) == 0)
            p.snap = EntityRef{0, EntityRef::Kind::Edge, small(rng)};
        return p;
    };
    auto random_loop = [&]() {
        Loop loop;
        if (small(rng) == 0) {
            loop.curves.emplace_back(CircleCurve{{coord(rng), coord(rng)}, unit(rng)});
            return loop;
        }
        int n = 3 + small(rng);
        double cx = coord(rng), cy = coord(rng);
        for (int i = 0; i < n; ++i) {
            double a = 2 * kPi * i / n;
            Point2 p = maybe_snap({cx + std::cos(a), cy + std::sin(a)});
            if (small(rng) == 0)
                loop.curves.emplace_back(
                    ArcCurve{p, 30.0 + 40.0 * unit(rng),
                             small(rng) % 2 ? Orientation::CW : Orientation::CCW});
            else
                loop.curves.emplace_back(LineCurve{p});
        }
        return loop;
    };

    Program prog;
    int nsteps = 1 + small(rng);
    for (int s = 0; s < nsteps; ++s) {
        int kind = s == 0 ? 0 : small(rng);
        if (kind <= 1) {
            EPartStep ep;
            int nsk = 1 + (small(rng) == 0 ? 1 : 0);
            for (int k = 0; k < nsk; ++k) {
                Sketch sk;
                sk.plane = s == 0 ? base_plane_ref(static_cast<BasePlaneId>(small(rng) % 3))
                                  : EntityRef{s, EntityRef::Kind::Face, small(rng)};
                sk.frame.dr = static_cast<Dir>(std::uniform_int_distribution<int>(0, 5)(rng));
                sk.frame.origin_hint = maybe_snap({coord(rng), coord(rng)});
                sk.frame.rotation_deg = 90.0 * small(rng);
                sk.frame.scale = 0.5 + unit(rng);
                int np = 1 + (small(rng) == 0 ? 1 : 0);
                for (int p = 0; p < np; ++p) {
                    Profile pr;
                    pr.loops.push_back(random_loop());
                    sk.profiles.push_back(pr);
                }
                ep.sketches.push_back(sk);
            }
            ep.extrude.e_p = unit(rng);
            ep.extrude.e_n = small(rng) == 0 ? unit(rng) : 0.0;
            ep.extrude.op = s == 0 ? BoolOp::New
                                   : static_cast<BoolOp>(std::uniform_int_distribution<int>(
                                         0, 3)(rng));
            prog.steps.emplace_back(ep);
        } else {
            std::vector<EntityRef> edges;
            int ne = 1 + small(rng);
            for (int e = 0; e < ne; ++e)
                edges.push_back({s, EntityRef::Kind::Edge, e});
            if (kind == 2)
                prog.steps.emplace_back(ChamferStep{0.05 + 0.1 * unit(rng), edges});
            else
                prog.steps.emplace_back(FilletStep{0.05 + 0.1 * unit(rng), edges});
        }
    }
    return prog;
}

// Rectangle sketch on a base plane, lower-left corner at (x0, y0).
inline Sketch rect_sketch(double x0, double y0, double wdt, double hgt,
                          BasePlaneId plane = kBaseTop, Dir dr = Dir::Zp) {
    Sketch sk;
    sk.plane = base_plane_ref(plane);
    sk.frame.dr = dr;
    Loop loop;
    loop.curves.emplace_back(LineCurve{{x0, y0}});
    loop.curves.emplace_back(LineCurve{{x0 + wdt, y0}});
    loop.curves.emplace_back(LineCurve{{x0 + wdt, y0 + hgt}});
    loop.curves.emplace_back(LineCurve{{x0, y0 + hgt}});
    Profile pr;
    pr.loops.push_back(loop);
    sk.profiles.push_back(pr);
    return sk;
}

inline Sketch circle_sketch(double cx, double cy, double r, BasePlaneId plane = kBaseTop,
                            Dir dr = Dir::Zp) {
    Sketch sk;
    sk.plane = base_plane_ref(plane);
    sk.frame.dr = dr;
    Loop loop;
    loop.curves.emplace_back(CircleCurve{{cx, cy}, r});
    Profile pr;
    pr.loops.push_back(loop);
    sk.profiles.push_back(pr);
    return sk;
}

inline Program box_program(double wdt = 1, double dep = 1, double hgt = 1) {
    EPartStep ep;
    ep.sketches.push_back(rect_sketch(0, 0, wdt, dep));
    ep.extrude = {hgt, 0.0, BoolOp::New};
    Program p;
    p.steps.emplace_back(ep);
    return p;
}

inline Program cylinder_program(double r = 0.5, double hgt = 1) {
    EPartStep ep;
    ep.sketches.push_back(circle_sketch(0, 0, r));
    ep.extrude = {hgt, 0.0, BoolOp::New};
    Program p;
    p.steps.emplace_back(ep);
    return p;
}

// Area factor of an inscribed regular n-gon relative to its circle.
inline double polygon_area_factor(int n) {
    return n / (2.0 * kPi) * std::sin(2.0 * kPi / n);
}

}  // namespace pcad::testing
