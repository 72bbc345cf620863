#pragma once

#include <functional>

#include "grammar.hpp"

namespace pcad {

namespace detail {

// Visit every nv-normalized quantity in the program (coordinates, radii,
// distances). Frame scale and angles are excluded: they use fixed ranges.
template <typename Fn>
void for_each_nv(const Program& program, Fn&& fn) {
    auto point = [&](const Point2& p) {
        fn(p.x);
        fn(p.y);
    };
    for (const Step& step : program.steps) {
        if (const auto* ep = std::get_if<EPartStep>(&step)) {
            for (const Sketch& sk : ep->sketches) {
                point(sk.frame.origin_hint);
                if (sk.explicit_frame) {
                    fn(sk.explicit_frame->translation.x);
                    fn(sk.explicit_frame->translation.y);
                    fn(sk.explicit_frame->translation.z);
                }
                for (const Profile& pr : sk.profiles)
                    for (const Loop& loop : pr.loops)
                        for (const Curve& c : loop.curves) {
                            if (const auto* l = std::get_if<LineCurve>(&c)) {
                                point(l->start);
                            } else if (const auto* a = std::get_if<ArcCurve>(&c)) {
                                point(a->start);
                            } else {
                                const auto& ci = std::get<CircleCurve>(c);
                                point(ci.center);
                                fn(ci.radius);
                            }
                        }
            }
            fn(ep->extrude.e_p);
            fn(ep->extrude.e_n);
        } else if (const auto* ch = std::get_if<ChamferStep>(&step)) {
            fn(ch->distance);
        } else {
            fn(std::get<FilletStep>(step).radius);
        }
    }
}

template <typename Fn>
void mutate_each_nv(Program& program, Fn&& fn) {
    auto point = [&](Point2& p) {
        fn(p.x);
        fn(p.y);
    };
    for (Step& step : program.steps) {
        if (auto* ep = std::get_if<EPartStep>(&step)) {
            for (Sketch& sk : ep->sketches) {
                point(sk.frame.origin_hint);
                if (sk.explicit_frame) {
                    fn(sk.explicit_frame->translation.x);
                    fn(sk.explicit_frame->translation.y);
                    fn(sk.explicit_frame->translation.z);
                }
                for (Profile& pr : sk.profiles)
                    for (Loop& loop : pr.loops)
                        for (Curve& c : loop.curves) {
                            if (auto* l = std::get_if<LineCurve>(&c)) {
                                point(l->start);
                            } else if (auto* a = std::get_if<ArcCurve>(&c)) {
                                point(a->start);
                            } else {
                                auto& ci = std::get<CircleCurve>(c);
                                point(ci.center);
                                fn(ci.radius);
                            }
                        }
            }
            fn(ep->extrude.e_p);
            fn(ep->extrude.e_n);
        } else if (auto* ch = std::get_if<ChamferStep>(&step)) {
            fn(ch->distance);
        } else {
            fn(std::get<FilletStep>(step).radius);
        }
    }
}

template <typename Fn>
void mutate_each_ag(Program& program, Fn&& fn) {
    for (Step& step : program.steps) {
        if (auto* ep = std::get_if<EPartStep>(&step)) {
            for (Sketch& sk : ep->sketches) {
                fn(sk.frame.rotation_deg, /*is_sweep=*/false);
                for (Profile& pr : sk.profiles)
                    for (Loop& loop : pr.loops)
                        for (Curve& c : loop.curves)
                            if (auto* a = std::get_if<ArcCurve>(&c))
                                fn(a->sweep_deg, /*is_sweep=*/true);
            }
        }
    }
}

}  // namespace detail

// Per-program normalization basis: bounding interval over all nv quantities.
inline ValueNorm compute_norm(const Program& program) {
    double lo = std::numeric_limits<double>::infinity();
    double hi = -lo;
    detail::for_each_nv(program, [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    });
    if (!(lo <= hi)) return {0.0, 1.0};
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    return {lo, hi};
}

inline TokenStream encode(const Program& program, const QuantConfig& cfg) {
    if (program.steps.empty()) throw MalformedProgram("program has no steps");
    return serialize_with(program, cfg, compute_norm(program));
}

inline Program decode(const TokenStream& stream, const QuantConfig& cfg) {
    TokenStream s = stream;
    s.cfg = cfg;
    return parse(s);
}

inline Program decode(const TokenStream& stream) { return parse(stream); }

// Snap every quantizable value onto its bin center under the program's own
// normalization, so decode(encode(P)) == P exactly.
inline Program canonicalize(const Program& program, const QuantConfig& cfg) {
    Program p = program;
    ValueNorm norm = compute_norm(p);
    detail::mutate_each_nv(p, [&](double& v) {
        double u = std::min(1.0, std::max(0.0, norm.to_unit(v)));
        v = norm.from_unit(dequantize_value(quantize_value(u, cfg, ValueKind::Nv), cfg,
                                            ValueKind::Nv));
    });
    detail::mutate_each_ag(p, [&](double& a, bool is_sweep) {
        int bin = quantize_value(a, cfg, ValueKind::Ag);
        if (is_sweep) bin = std::max(1, std::min(cfg.max_bin() - 1, bin));
        a = wrap_angle_deg(dequantize_value(bin, cfg, ValueKind::Ag));
    });
    // scale uses a fixed (0,2] range
    for (Step& step : p.steps)
        if (auto* ep = std::get_if<EPartStep>(&step))
            for (Sketch& sk : ep->sketches) {
                int bin = quantize_value(sk.frame.scale / 2.0, cfg, ValueKind::Nv);
                bin = std::max(1, bin);  // keep scale positive
                sk.frame.scale = dequantize_value(bin, cfg, ValueKind::Nv) * 2.0;
            }
    // bin snapping can push sign-constrained values just below their bound;
    // lift those onto the smallest admissible bin center
    auto snap_up = [&](double v, double strict_above) {
        int bin = quantize_value(std::min(1.0, std::max(0.0, norm.to_unit(v))), cfg,
                                 ValueKind::Nv);
        double out = norm.from_unit(
            dequantize_value(bin, cfg, ValueKind::Nv));
        while (out <= strict_above && bin < cfg.max_bin()) {
            ++bin;
            out = norm.from_unit(dequantize_value(bin, cfg, ValueKind::Nv));
        }
        return out;
    };
    for (Step& step : p.steps) {
        if (auto* ep = std::get_if<EPartStep>(&step)) {
            if (ep->extrude.e_p < 0) ep->extrude.e_p = snap_up(ep->extrude.e_p < 0 ? ep->extrude.e_p : ep->extrude.e_n, -1e-300);
            if (ep->extrude.e_n < 0) ep->extrude.e_n = snap_up(ep->extrude.e_p < 0 ? ep->extrude.e_p : ep->extrude.e_n, -1e-300);
            if (ep->extrude.e_p + ep->extrude.e_n <= 0)
                ep->extrude.e_p = snap_up(ep->extrude.e_p, 0.0);
            for (Sketch& sk : ep->sketches)
                for (Profile& pr : sk.profiles)
                    for (Loop& loop : pr.loops)
                        for (Curve& c : loop.curves)
                            if (auto* ci = std::get_if<CircleCurve>(&c))
                                if (ci->radius <= 0) ci->radius = snap_up(ci->radius, 0.0);
        } else if (auto* ch = std::get_if<ChamferStep>(&step)) {
            if (ch->distance <= 0) ch->distance = snap_up(ch->distance, 0.0);
        } else {
            auto& f = std::get<FilletStep>(step);
            if (f.radius <= 0) f.radius = snap_up(f.radius, 0.0);
        }
    }
    return p;
}

// ---------------------------------------------------------------------------
// Legacy absolute-coordinate codec (six-parameter sketch placement)
// ---------------------------------------------------------------------------

namespace detail {

template <typename Fn>
void for_each_legacy_nv(const Program& program, const std::vector<EulerFrame>& frames, Fn&& fn) {
    size_t fi = 0;
    for (const Step& step : program.steps) {
        const auto* ep = std::get_if<EPartStep>(&step);
        if (!ep) continue;
        for (const Sketch& sk : ep->sketches) {
            const EulerFrame& f = frames.at(fi++);
            fn(f.translation.x);
            fn(f.translation.y);
            fn(f.translation.z);
            for (const Profile& pr : sk.profiles)
                for (const Loop& loop : pr.loops)
                    for (const Curve& c : loop.curves) {
                        if (const auto* l = std::get_if<LineCurve>(&c)) {
                            fn(l->start.x);
                            fn(l->start.y);
                        } else if (const auto* a = std::get_if<ArcCurve>(&c)) {
                            fn(a->start.x);
                            fn(a->start.y);
                        } else {
                            const auto& ci = std::get<CircleCurve>(c);
                            fn(ci.center.x);
                            fn(ci.center.y);
                            fn(ci.radius);
                        }
                    }
        }
        fn(ep->extrude.e_p);
        fn(ep->extrude.e_n);
    }
}

}  // namespace detail

// `frames` carries the executed world placement of each sketch, in program
// order. Snap references cannot be expressed in this form and are dropped;
// the raw coordinates are quantized as-is.
inline LegacyStream encode_legacy_with_frames(const Program& program, const QuantConfig& cfg,
                                              const std::vector<EulerFrame>& frames) {
    for (const Step& step : program.steps)
        if (!std::holds_alternative<EPartStep>(step))
            throw UnsupportedOperation(
                "chamfer/fillet cannot be expressed in the legacy representation");

    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    detail::for_each_legacy_nv(program, frames, [&](double v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    });
    if (!(lo <= hi)) throw MalformedProgram("program has no steps");
    if (hi - lo < 1e-12) {
        lo -= 0.5;
        hi += 0.5;
    }
    LegacyStream out;
    out.cfg = cfg;
    out.norm = {lo, hi};
    auto nv = [&](double v) {
        out.tokens.push_back(kTokValueBase +
                             quantize_value(out.norm.to_unit(v), cfg, ValueKind::Nv));
    };
    auto ag = [&](double v) {
        out.tokens.push_back(kTokValueBase + quantize_value(v, cfg, ValueKind::Ag));
    };
    size_t fi = 0;
    for (size_t si = 0; si < program.steps.size(); ++si) {
        const auto& ep = std::get<EPartStep>(program.steps[si]);
        for (const Sketch& sk : ep.sketches) {
            const EulerFrame& f = frames.at(fi++);
            out.tokens.push_back(kTokSs);
            ag(f.rz);
            ag(f.ry);
            ag(f.rx);
            nv(f.translation.x);
            nv(f.translation.y);
            nv(f.translation.z);
            for (const Profile& pr : sk.profiles) {
                out.tokens.push_back(kTokSp);
                for (const Loop& loop : pr.loops) {
                    out.tokens.push_back(kTokSl);
                    for (const Curve& c : loop.curves) {
                        out.tokens.push_back(kTokSx);
                        if (const auto* l = std::get_if<LineCurve>(&c)) {
                            nv(l->start.x);
                            nv(l->start.y);
                        } else if (const auto* a = std::get_if<ArcCurve>(&c)) {
                            nv(a->start.x);
                            nv(a->start.y);
                            ag(a->sweep_deg);
                            out.tokens.push_back(a->orient == Orientation::CW ? kTokOrCw
                                                                              : kTokOrCcw);
                        } else {
                            const auto& ci = std::get<CircleCurve>(c);
                            nv(ci.center.x);
                            nv(ci.center.y);
                            nv(ci.radius);
                        }
                    }
                }
            }
        }
        out.tokens.push_back(kTokSe);
        nv(ep.extrude.e_p);
        nv(ep.extrude.e_n);
        out.tokens.push_back(bool_token(ep.extrude.op));
        out.tokens.push_back(si + 1 == program.steps.size() ? kTokEm : kTokEs);
    }
    return out;
}

// Decoded sketches carry explicit Euler placements; the kernel builds frames
// from them directly instead of resolving a plane pointer.
inline Program decode_legacy(const LegacyStream& stream) {
    struct Rd {
        const LegacyStream& s;
        size_t pos = 0;
        bool eof() const { return pos >= s.tokens.size(); }
        int peek(size_t k = 0) const {
            return pos + k < s.tokens.size() ? s.tokens[pos + k] : -1;
        }
        int next(const char* what) {
            if (eof()) throw TruncatedStream(std::string("expected ") + what);
            int t = s.tokens[pos];
            if (t < 1 || t >= s.cfg.vocab_size()) throw UnknownToken("id " + std::to_string(t));
            ++pos;
            return t;
        }
        int expect(int id, const char* what) {
            size_t at = pos;
            int t = next(what);
            if (t != id)
                throw GrammarError("position " + std::to_string(at) + ": expected " + what);
            return t;
        }
        double value(ValueKind kind, const char* what) {
            size_t at = pos;
            int t = next(what);
            if (t < kTokValueBase)
                throw GrammarError("position " + std::to_string(at) + ": expected " + what);
            return dequantize_value(t - kTokValueBase, s.cfg, kind);
        }
        double nv(const char* what) { return s.norm.from_unit(value(ValueKind::Nv, what)); }
        double ag(const char* what) { return value(ValueKind::Ag, what); }
    } r{stream};

    Program prog;
    bool saw_em = false;
    if (r.eof()) throw TruncatedStream("empty stream");
    while (!r.eof()) {
        if (saw_em) throw TrailingTokens("tokens after em");
        EPartStep ep;
        while (r.peek() == kTokSs) {
            r.expect(kTokSs, "ss");
            Sketch sk;
            sk.plane = base_plane_ref(kBaseTop);
            EulerFrame f;
            f.rz = r.ag("rz");
            f.ry = r.ag("ry");
            f.rx = r.ag("rx");
            f.translation = {r.nv("tx"), r.nv("ty"), r.nv("tz")};
            sk.explicit_frame = f;
            if (r.peek() != kTokSp) throw GrammarError("expected sp");
            while (r.peek() == kTokSp) {
                r.expect(kTokSp, "sp");
                Profile pr;
                if (r.peek() != kTokSl) throw GrammarError("expected sl");
                while (r.peek() == kTokSl) {
                    r.expect(kTokSl, "sl");
                    Loop loop;
                    if (r.peek() != kTokSx) throw GrammarError("expected sx");
                    while (r.peek() == kTokSx) {
                        r.expect(kTokSx, "sx");
                        double x = r.nv("x"), y = r.nv("y");
                        if (r.peek() >= kTokValueBase) {
                            int after = r.peek(1);
                            if (after == kTokOrCw || after == kTokOrCcw) {
                                ArcCurve a;
                                a.start = {x, y, std::nullopt};
                                a.sweep_deg = r.ag("sweep");
                                a.orient = r.next("or") == kTokOrCw ? Orientation::CW
                                                                    : Orientation::CCW;
                                loop.curves.emplace_back(a);
                            } else {
                                CircleCurve c;
                                c.center = {x, y, std::nullopt};
                                c.radius = r.nv("radius");
                                loop.curves.emplace_back(c);
                            }
                        } else {
                            loop.curves.emplace_back(LineCurve{{x, y, std::nullopt}});
                        }
                    }
                    pr.loops.push_back(std::move(loop));
                }
                sk.profiles.push_back(std::move(pr));
            }
            ep.sketches.push_back(std::move(sk));
        }
        if (ep.sketches.empty()) throw GrammarError("expected ss");
        r.expect(kTokSe, "se");
        ep.extrude.e_p = std::max(0.0, r.nv("e_p"));
        ep.extrude.e_n = std::max(0.0, r.nv("e_n"));
        int bo = r.next("bo");
        if (bo < kTokBoNew || bo > kTokBoIntersect) throw GrammarError("expected bo");
        ep.extrude.op = bool_from_token(bo);
        prog.steps.emplace_back(std::move(ep));
        int term = r.next("es/em");
        if (term == kTokEm)
            saw_em = true;
        else if (term != kTokEs)
            throw GrammarError("expected es/em");
    }
    if (!saw_em) throw MissingTerminator("stream does not end with em");
    return prog;
}

}  // namespace pcad
