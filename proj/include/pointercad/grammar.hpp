#pragma once

#include <functional>
#include <sstream>
#include <string>
#include <vector>

#include "ast.hpp"
#include "errors.hpp"
#include "tokens.hpp"

namespace pcad {

constexpr double kEpsClose = 1e-6;
constexpr int kMaxPointerArity = 64;

enum class DiagCode {
    EmptyProgram,
    FirstStepNotNew,
    EmptyStep,
    EmptyProfile,
    ClosureViolation,
    DegeneratePrimitive,
    SweepOutOfRange,
    BadExtrude,
    BadScale,
    BadPointerKind,
    ArityExceeded,
    CircleInMixedLoop,
};

struct Diagnostic {
    DiagCode code;
    std::string path;  // AST path, e.g. "steps[2].sketches[0].profiles[1].loops[0]"
    std::string message;
};

using Diagnostics = std::vector<Diagnostic>;

inline const char* to_string(DiagCode c) {
    switch (c) {
        case DiagCode::EmptyProgram: return "EmptyProgram";
        case DiagCode::FirstStepNotNew: return "FirstStepNotNew";
        case DiagCode::EmptyStep: return "EmptyStep";
        case DiagCode::EmptyProfile: return "EmptyProfile";
        case DiagCode::ClosureViolation: return "ClosureViolation";
        case DiagCode::DegeneratePrimitive: return "DegeneratePrimitive";
        case DiagCode::SweepOutOfRange: return "SweepOutOfRange";
        case DiagCode::BadExtrude: return "BadExtrude";
        case DiagCode::BadScale: return "BadScale";
        case DiagCode::BadPointerKind: return "BadPointerKind";
        case DiagCode::ArityExceeded: return "ArityExceeded";
        case DiagCode::CircleInMixedLoop: return "CircleInMixedLoop";
    }
    return "?";
}

namespace detail {

inline void check_loop(const Loop& loop, const std::string& path, Diagnostics& out) {
    if (loop.curves.empty()) {
        out.push_back({DiagCode::EmptyProfile, path, "loop has no curves"});
        return;
    }
    bool has_circle = false;
    for (const auto& c : loop.curves)
        if (std::holds_alternative<CircleCurve>(c)) has_circle = true;
    if (has_circle && loop.curves.size() > 1) {
        out.push_back({DiagCode::CircleInMixedLoop, path,
                       "circle must be the only curve in its loop"});
        return;
    }
    if (loop.is_circle()) {
        const auto& c = std::get<CircleCurve>(loop.curves[0]);
        if (!(c.radius > 0))
            out.push_back({DiagCode::DegeneratePrimitive, path, "circle radius <= 0"});
        return;
    }
    if (loop.curves.size() < 2) {
        out.push_back({DiagCode::ClosureViolation, path,
                       "a single open curve cannot close a loop"});
        return;
    }
    // chained representation: each curve's end is the next curve's start, so
    // closure is structural; flag zero-length chords instead
    for (size_t i = 0; i < loop.curves.size(); ++i) {
        const auto& a = loop.curves[i];
        const auto& b = loop.curves[(i + 1) % loop.curves.size()];
        auto start_of = [](const Curve& c) -> Vec2 {
            if (auto* l = std::get_if<LineCurve>(&c)) return l->start.pos();
            return std::get<ArcCurve>(c).start.pos();
        };
        if ((start_of(a) - start_of(b)).norm() <= kEpsClose)
            out.push_back({DiagCode::ClosureViolation, path + ".curves[" + std::to_string(i) + "]",
                           "zero-length chord between consecutive curve starts"});
        if (auto* arc = std::get_if<ArcCurve>(&a)) {
            if (!(arc->sweep_deg > 0 && arc->sweep_deg < 360))
                out.push_back({DiagCode::SweepOutOfRange,
                               path + ".curves[" + std::to_string(i) + "]",
                               "arc sweep outside (0,360)"});
        }
    }
}

inline void check_point_snap(const Point2& p, const std::string& path, Diagnostics& out) {
    if (p.snap && p.snap->kind == EntityRef::Kind::Face)
        out.push_back({DiagCode::BadPointerKind, path, "snap must reference an edge"});
}

}  // namespace detail

// Returns an ordered list of violations; empty means valid.
inline Diagnostics validate(const Program& program) {
    Diagnostics out;
    if (program.steps.empty()) {
        out.push_back({DiagCode::EmptyProgram, "steps", "program has no steps"});
        return out;
    }
    if (const auto* first = std::get_if<EPartStep>(&program.steps[0])) {
        if (first->extrude.op != BoolOp::New)
            out.push_back({DiagCode::FirstStepNotNew, "steps[0]",
                           "first step must extrude with bool=New"});
    } else {
        out.push_back({DiagCode::FirstStepNotNew, "steps[0]",
                       "first step must be a sketch-extrude part"});
    }
    for (size_t si = 0; si < program.steps.size(); ++si) {
        std::string sp = "steps[" + std::to_string(si) + "]";
        const Step& step = program.steps[si];
        if (const auto* ep = std::get_if<EPartStep>(&step)) {
            if (ep->sketches.empty())
                out.push_back({DiagCode::EmptyStep, sp, "extrude step has no sketches"});
            for (size_t ki = 0; ki < ep->sketches.size(); ++ki) {
                const Sketch& sk = ep->sketches[ki];
                std::string kp = sp + ".sketches[" + std::to_string(ki) + "]";
                if (sk.plane.kind == EntityRef::Kind::Edge)
                    out.push_back({DiagCode::BadPointerKind, kp,
                                   "sketch plane must reference a face or base plane"});
                if (!(sk.frame.scale > 0 && sk.frame.scale <= 2.0))
                    out.push_back({DiagCode::BadScale, kp, "frame scale outside (0,2]"});
                detail::check_point_snap(sk.frame.origin_hint, kp + ".frame", out);
                if (sk.profiles.empty())
                    out.push_back({DiagCode::EmptyProfile, kp, "sketch has no profiles"});
                for (size_t pi = 0; pi < sk.profiles.size(); ++pi) {
                    const Profile& pr = sk.profiles[pi];
                    std::string pp = kp + ".profiles[" + std::to_string(pi) + "]";
                    if (pr.loops.empty())
                        out.push_back({DiagCode::EmptyProfile, pp, "profile has no loops"});
                    for (size_t li = 0; li < pr.loops.size(); ++li) {
                        std::string lp = pp + ".loops[" + std::to_string(li) + "]";
                        detail::check_loop(pr.loops[li], lp, out);
                        for (const auto& c : pr.loops[li].curves) {
                            if (auto* l = std::get_if<LineCurve>(&c))
                                detail::check_point_snap(l->start, lp, out);
                            else if (auto* a = std::get_if<ArcCurve>(&c))
                                detail::check_point_snap(a->start, lp, out);
                            else
                                detail::check_point_snap(std::get<CircleCurve>(c).center, lp, out);
                        }
                    }
                }
            }
            if (!(ep->extrude.e_p >= 0 && ep->extrude.e_n >= 0 &&
                  ep->extrude.e_p + ep->extrude.e_n > 0))
                out.push_back({DiagCode::BadExtrude, sp, "e_p + e_n must be positive"});
        } else {
            double param = 0;
            const std::vector<EntityRef>* edges = nullptr;
            if (const auto* ch = std::get_if<ChamferStep>(&step)) {
                param = ch->distance;
                edges = &ch->edges;
            } else {
                const auto& f = std::get<FilletStep>(step);
                param = f.radius;
                edges = &f.edges;
            }
            if (!(param > 0))
                out.push_back({DiagCode::DegeneratePrimitive, sp, "edge-blend parameter <= 0"});
            if (edges->empty())
                out.push_back({DiagCode::EmptyStep, sp, "no edges selected"});
            if (edges->size() > kMaxPointerArity)
                out.push_back({DiagCode::ArityExceeded, sp, "more than 64 edge pointers"});
            for (const auto& e : *edges)
                if (e.kind != EntityRef::Kind::Edge)
                    out.push_back({DiagCode::BadPointerKind, sp, "blend target must be an edge"});
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Serialization (Program -> TokenStream under a given quantization + norm)
// ---------------------------------------------------------------------------

namespace detail {

class StreamWriter {
  public:
    StreamWriter(const QuantConfig& cfg, const ValueNorm& norm) : cfg_(cfg), norm_(norm) {
        out_.cfg = cfg;
        out_.norm = norm;
    }

    void label(int id) { out_.tokens.push_back(id); }

    void nv(double raw, const std::string& path) {
        double u = norm_.to_unit(raw);
        if (u < -1e-12 || u > 1.0 + 1e-12) {
            std::ostringstream os;
            os << "value " << raw << " at " << path << " outside normalization range ["
               << norm_.lo << "," << norm_.hi << "]";
            throw RangeError(os.str());
        }
        u = std::min(1.0, std::max(0.0, u));
        out_.tokens.push_back(kTokValueBase + quantize_value(u, cfg_, ValueKind::Nv));
    }

    void nv_unit(double u, const std::string& path) {
        if (u < 0 || u > 1) throw RangeError("unit value at " + path + " outside [0,1]");
        out_.tokens.push_back(kTokValueBase + quantize_value(u, cfg_, ValueKind::Nv));
    }

    void ag(double deg) {
        out_.tokens.push_back(kTokValueBase + quantize_value(deg, cfg_, ValueKind::Ag));
    }

    void pointer(const EntityRef& ref) {
        out_.pointer_payloads[static_cast<int>(out_.tokens.size())] = ref;
        out_.tokens.push_back(kTokPe);
    }

    void pointer_slot(const std::optional<EntityRef>& ref) {
        if (ref)
            pointer(*ref);
        else
            out_.tokens.push_back(kTokPd);
    }

    TokenStream take() { return std::move(out_); }

  private:
    QuantConfig cfg_;
    ValueNorm norm_;
    TokenStream out_;
};

inline void write_point(StreamWriter& w, const Point2& p, const std::string& path) {
    w.nv(p.x, path + ".x");
    w.nv(p.y, path + ".y");
    w.pointer_slot(p.snap);
}

}  // namespace detail

// Lower a validated program to tokens. `norm` must cover every nv quantity.
inline TokenStream serialize_with(const Program& program, const QuantConfig& cfg,
                                  const ValueNorm& norm) {
    if (program.steps.empty()) throw MalformedProgram("program has no steps");
    Diagnostics diags = validate(program);
    if (!diags.empty()) {
        std::ostringstream os;
        os << diags.size() << " violation(s); first: " << to_string(diags[0].code) << " at "
           << diags[0].path;
        throw ValidationFailed(os.str());
    }
    detail::StreamWriter w(cfg, norm);
    for (size_t si = 0; si < program.steps.size(); ++si) {
        const Step& step = program.steps[si];
        std::string sp = "steps[" + std::to_string(si) + "]";
        if (const auto* ep = std::get_if<EPartStep>(&step)) {
            for (const auto& sk : ep->sketches) {
                w.label(kTokSs);
                w.pointer(sk.plane);
                // CS: dr P ag nv
                w.label(dir_token(sk.frame.dr));
                detail::write_point(w, sk.frame.origin_hint, sp + ".frame.origin");
                w.ag(sk.frame.rotation_deg);
                w.nv_unit(sk.frame.scale / 2.0, sp + ".frame.scale");
                for (const auto& pr : sk.profiles) {
                    w.label(kTokSp);
                    for (const auto& loop : pr.loops) {
                        w.label(kTokSl);
                        for (const auto& c : loop.curves) {
                            w.label(kTokSx);
                            if (const auto* l = std::get_if<LineCurve>(&c)) {
                                detail::write_point(w, l->start, sp);
                            } else if (const auto* a = std::get_if<ArcCurve>(&c)) {
                                detail::write_point(w, a->start, sp);
                                w.ag(a->sweep_deg);
                                w.label(a->orient == Orientation::CW ? kTokOrCw : kTokOrCcw);
                            } else {
                                const auto& ci = std::get<CircleCurve>(c);
                                detail::write_point(w, ci.center, sp);
                                w.nv(ci.radius, sp + ".radius");
                            }
                        }
                    }
                }
            }
            w.label(kTokSe);
            w.nv(ep->extrude.e_p, sp + ".e_p");
            w.nv(ep->extrude.e_n, sp + ".e_n");
            w.label(bool_token(ep->extrude.op));
        } else if (const auto* ch = std::get_if<ChamferStep>(&step)) {
            w.label(kTokSc);
            w.nv(ch->distance, sp + ".distance");
            for (const auto& e : ch->edges) w.pointer(e);
        } else {
            const auto& f = std::get<FilletStep>(step);
            w.label(kTokSf);
            w.nv(f.radius, sp + ".radius");
            for (const auto& e : f.edges) w.pointer(e);
        }
        w.label(si + 1 == program.steps.size() ? kTokEm : kTokEs);
    }
    return w.take();
}

// ---------------------------------------------------------------------------
// Parsing (TokenStream -> Program); recursive descent, LL(2)
// ---------------------------------------------------------------------------

namespace detail {

class StreamReader {
  public:
    explicit StreamReader(const TokenStream& s) : s_(s) {}

    bool eof() const { return pos_ >= s_.tokens.size(); }
    size_t pos() const { return pos_; }

    int peek(size_t ahead = 0) const {
        if (pos_ + ahead >= s_.tokens.size()) return -1;
        return s_.tokens[pos_ + ahead];
    }

    int next(const char* expected) {
        if (eof()) throw TruncatedStream(std::string("expected ") + expected + " at position " +
                                         std::to_string(pos_));
        int t = s_.tokens[pos_];
        if (t < 1 || t >= s_.cfg.vocab_size())
            throw UnknownToken("id " + std::to_string(t) + " at position " + std::to_string(pos_));
        ++pos_;
        return t;
    }

    int expect(int id, const char* what) {
        size_t at = pos_;
        int t = next(what);
        if (t != id) fail(at, what, t);
        return t;
    }

    [[noreturn]] void fail(size_t at, const char* expected, int found) const {
        std::ostringstream os;
        os << "position " << at << ": expected " << expected << ", found id " << found;
        throw GrammarError(os.str());
    }

    double read_value(ValueKind kind, const char* what) {
        size_t at = pos_;
        int t = next(what);
        if (t < kTokValueBase) fail(at, what, t);
        double u = dequantize_value(t - kTokValueBase, s_.cfg, kind);
        return kind == ValueKind::Nv ? u : u;  // unit or degrees
    }

    double read_nv(const char* what) { return s_.norm.from_unit(read_value(ValueKind::Nv, what)); }
    double read_nv_unit(const char* what) { return read_value(ValueKind::Nv, what); }
    double read_ag(const char* what) { return read_value(ValueKind::Ag, what); }

    std::optional<EntityRef> read_pointer_slot() {
        size_t at = pos_;
        int t = next("pointer state");
        if (t == kTokPd) return std::nullopt;
        if (t != kTokPe) fail(at, "pe/pd", t);
        auto it = s_.pointer_payloads.find(static_cast<int>(at));
        if (it == s_.pointer_payloads.end())
            throw GrammarError("position " + std::to_string(at) + ": pe token without payload");
        return it->second;
    }

    EntityRef read_pointer(const char* what) {
        auto r = read_pointer_slot();
        if (!r) fail(pos_ - 1, what, kTokPd);
        return *r;
    }

  private:
    const TokenStream& s_;
    size_t pos_ = 0;
};

inline Point2 parse_point(StreamReader& r) {
    Point2 p;
    p.x = r.read_nv("point x");
    p.y = r.read_nv("point y");
    p.snap = r.read_pointer_slot();
    return p;
}

inline bool is_value(int t) { return t >= kTokValueBase; }

}  // namespace detail

inline Program parse(const TokenStream& stream) {
    detail::StreamReader r(stream);
    Program prog;
    bool saw_em = false;
    if (r.eof()) throw TruncatedStream("empty stream");
    while (!r.eof()) {
        if (saw_em) throw TrailingTokens("tokens after em at position " + std::to_string(r.pos()));
        int head = r.peek();
        if (head == kTokSs) {
            EPartStep ep;
            while (r.peek() == kTokSs) {
                Sketch sk;
                r.expect(kTokSs, "ss");
                sk.plane = r.read_pointer("plane pointer");
                size_t at = r.pos();
                int dr = r.next("dr");
                if (dr < kTokDrXp || dr > kTokDrZn) r.fail(at, "dr", dr);
                sk.frame.dr = dir_from_token(dr);
                sk.frame.origin_hint = detail::parse_point(r);
                sk.frame.rotation_deg = r.read_ag("rotation");
                sk.frame.scale = r.read_nv_unit("scale") * 2.0;
                if (r.peek() != kTokSp) r.fail(r.pos(), "sp", r.peek());
                while (r.peek() == kTokSp) {
                    r.expect(kTokSp, "sp");
                    Profile pr;
                    if (r.peek() != kTokSl) r.fail(r.pos(), "sl", r.peek());
                    while (r.peek() == kTokSl) {
                        r.expect(kTokSl, "sl");
                        Loop loop;
                        if (r.peek() != kTokSx) r.fail(r.pos(), "sx", r.peek());
                        while (r.peek() == kTokSx) {
                            r.expect(kTokSx, "sx");
                            Point2 p = detail::parse_point(r);
                            if (detail::is_value(r.peek())) {
                                // Arc (value + orientation) vs Circle (value)
                                int after = r.peek(1);
                                if (after == kTokOrCw || after == kTokOrCcw) {
                                    ArcCurve a;
                                    a.start = p;
                                    a.sweep_deg = r.read_ag("sweep");
                                    a.orient = r.next("orientation") == kTokOrCw
                                                   ? Orientation::CW
                                                   : Orientation::CCW;
                                    loop.curves.emplace_back(a);
                                } else {
                                    CircleCurve c;
                                    c.center = p;
                                    c.radius = r.read_nv("radius");
                                    loop.curves.emplace_back(c);
                                }
                            } else {
                                loop.curves.emplace_back(LineCurve{p});
                            }
                        }
                        pr.loops.push_back(std::move(loop));
                    }
                    sk.profiles.push_back(std::move(pr));
                }
                ep.sketches.push_back(std::move(sk));
            }
            r.expect(kTokSe, "se");
            // extrude distances are nonnegative by construction; a zero can
            // dequantize to a slightly negative bin center, so clamp it back
            ep.extrude.e_p = std::max(0.0, r.read_nv("e_p"));
            ep.extrude.e_n = std::max(0.0, r.read_nv("e_n"));
            size_t at = r.pos();
            int bo = r.next("bo");
            if (bo < kTokBoNew || bo > kTokBoIntersect) r.fail(at, "bo", bo);
            ep.extrude.op = bool_from_token(bo);
            prog.steps.emplace_back(std::move(ep));
        } else if (head == kTokSc || head == kTokSf) {
            r.next("sc/sf");
            double param = r.read_nv("blend parameter");
            std::vector<EntityRef> edges;
            while (r.peek() == kTokPe) edges.push_back(r.read_pointer("edge pointer"));
            if (head == kTokSc)
                prog.steps.emplace_back(ChamferStep{param, std::move(edges)});
            else
                prog.steps.emplace_back(FilletStep{param, std::move(edges)});
        } else {
            size_t at = r.pos();
            int t = r.next("ss/sc/sf");  // throws UnknownToken for unassigned ids
            r.fail(at, "ss/sc/sf", t);
        }
        size_t at = r.pos();
        int term = r.next("es/em");
        if (term == kTokEm)
            saw_em = true;
        else if (term != kTokEs)
            r.fail(at, "es/em", term);
    }
    if (!saw_em) throw MissingTerminator("stream does not end with em");
    return prog;
}

// serialize(parse(s)) and parse(serialize(p)) are identities; the norm for
// serialization is taken from the caller via serialize_with.
inline TokenStream serialize(const Program& program, const QuantConfig& cfg,
                             const ValueNorm& norm) {
    return serialize_with(program, cfg, norm);
}

}  // namespace pcad
