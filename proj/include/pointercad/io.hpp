#pragma once

#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "brep.hpp"
#include "grammar.hpp"

namespace pcad {

using Json = nlohmann::json;

// ---------------------------------------------------------------------------
// Program AST <-> JSON (fixture-friendly, mirrors the type definitions)
// ---------------------------------------------------------------------------

namespace iodetail {

inline const char* dir_name(Dir d) {
    switch (d) {
        case Dir::Xp: return "+x";
        case Dir::Xn: return "-x";
        case Dir::Yp: return "+y";
        case Dir::Yn: return "-y";
        case Dir::Zp: return "+z";
        default: return "-z";
    }
}

inline Dir dir_from_name(const std::string& s) {
    if (s == "+x") return Dir::Xp;
    if (s == "-x") return Dir::Xn;
    if (s == "+y") return Dir::Yp;
    if (s == "-y") return Dir::Yn;
    if (s == "+z") return Dir::Zp;
    if (s == "-z") return Dir::Zn;
    throw FormatError("unknown direction '" + s + "'");
}

inline const char* bool_name(BoolOp b) {
    switch (b) {
        case BoolOp::New: return "new";
        case BoolOp::Join: return "join";
        case BoolOp::Cut: return "cut";
        default: return "intersect";
    }
}

inline BoolOp bool_from_name(const std::string& s) {
    if (s == "new") return BoolOp::New;
    if (s == "join") return BoolOp::Join;
    if (s == "cut") return BoolOp::Cut;
    if (s == "intersect") return BoolOp::Intersect;
    throw FormatError("unknown boolean op '" + s + "'");
}

inline EntityRef::Kind kind_from_name(const std::string& s) {
    if (s == "face") return EntityRef::Kind::Face;
    if (s == "edge") return EntityRef::Kind::Edge;
    if (s == "base_plane") return EntityRef::Kind::BasePlane;
    throw FormatError("unknown entity kind '" + s + "'");
}

}  // namespace iodetail

inline Json ref_to_json(const EntityRef& r) {
    return {{"step_index", r.step_index},
            {"kind", to_string(r.kind)},
            {"stable_id", r.stable_id}};
}

inline EntityRef ref_from_json(const Json& j) {
    return {j.at("step_index").get<int>(),
            iodetail::kind_from_name(j.at("kind").get<std::string>()),
            j.at("stable_id").get<int>()};
}

inline Json point_to_json(const Point2& p) {
    Json j{{"x", p.x}, {"y", p.y}};
    if (p.snap) j["snap"] = ref_to_json(*p.snap);
    return j;
}

inline Point2 point_from_json(const Json& j) {
    Point2 p;
    p.x = j.at("x").get<double>();
    p.y = j.at("y").get<double>();
    if (j.contains("snap")) p.snap = ref_from_json(j.at("snap"));
    return p;
}

inline Json program_to_json(const Program& prog) {
    Json steps = Json::array();
    for (const Step& step : prog.steps) {
        Json js;
        if (const auto* ep = std::get_if<EPartStep>(&step)) {
            js["type"] = "extrude";
            Json sketches = Json::array();
            for (const Sketch& sk : ep->sketches) {
                Json jk;
                jk["plane"] = ref_to_json(sk.plane);
                jk["dr"] = iodetail::dir_name(sk.frame.dr);
                jk["origin_hint"] = point_to_json(sk.frame.origin_hint);
                jk["rotation_deg"] = sk.frame.rotation_deg;
                jk["scale"] = sk.frame.scale;
                if (sk.explicit_frame) {
                    const EulerFrame& f = *sk.explicit_frame;
                    jk["explicit_frame"] = {
                        {"rz", f.rz},
                        {"ry", f.ry},
                        {"rx", f.rx},
                        {"translation", {f.translation.x, f.translation.y, f.translation.z}}};
                }
                Json profiles = Json::array();
                for (const Profile& pr : sk.profiles) {
                    Json loops = Json::array();
                    for (const Loop& loop : pr.loops) {
                        Json curves = Json::array();
                        for (const Curve& c : loop.curves) {
                            Json jc;
                            if (const auto* l = std::get_if<LineCurve>(&c)) {
                                jc["type"] = "line";
                                jc["start"] = point_to_json(l->start);
                            } else if (const auto* a = std::get_if<ArcCurve>(&c)) {
                                jc["type"] = "arc";
                                jc["start"] = point_to_json(a->start);
                                jc["sweep_deg"] = a->sweep_deg;
                                jc["orient"] = a->orient == Orientation::CW ? "cw" : "ccw";
                            } else {
                                const auto& ci = std::get<CircleCurve>(c);
                                jc["type"] = "circle";
                                jc["center"] = point_to_json(ci.center);
                                jc["radius"] = ci.radius;
                            }
                            curves.push_back(jc);
                        }
                        loops.push_back(curves);
                    }
                    profiles.push_back(loops);
                }
                jk["profiles"] = profiles;
                sketches.push_back(jk);
            }
            js["sketches"] = sketches;
            js["e_p"] = ep->extrude.e_p;
            js["e_n"] = ep->extrude.e_n;
            js["op"] = iodetail::bool_name(ep->extrude.op);
        } else {
            const std::vector<EntityRef>* edges;
            if (const auto* ch = std::get_if<ChamferStep>(&step)) {
                js["type"] = "chamfer";
                js["distance"] = ch->distance;
                edges = &ch->edges;
            } else {
                const auto& f = std::get<FilletStep>(step);
                js["type"] = "fillet";
                js["radius"] = f.radius;
                edges = &f.edges;
            }
            Json je = Json::array();
            for (const EntityRef& r : *edges) je.push_back(ref_to_json(r));
            js["edges"] = je;
        }
        steps.push_back(js);
    }
    return Json{{"steps", steps}};
}

inline Program program_from_json(const Json& j) {
    try {
        Program prog;
        for (const Json& js : j.at("steps")) {
            std::string type = js.at("type").get<std::string>();
            if (type == "extrude") {
                EPartStep ep;
                for (const Json& jk : js.at("sketches")) {
                    Sketch sk;
                    sk.plane = ref_from_json(jk.at("plane"));
                    sk.frame.dr = iodetail::dir_from_name(jk.at("dr").get<std::string>());
                    sk.frame.origin_hint = point_from_json(jk.at("origin_hint"));
                    sk.frame.rotation_deg = jk.value("rotation_deg", 0.0);
                    sk.frame.scale = jk.value("scale", 1.0);
                    if (jk.contains("explicit_frame")) {
                        const Json& jf = jk.at("explicit_frame");
                        EulerFrame f;
                        f.rz = jf.at("rz").get<double>();
                        f.ry = jf.at("ry").get<double>();
                        f.rx = jf.at("rx").get<double>();
                        const Json& t = jf.at("translation");
                        f.translation = {t.at(0).get<double>(), t.at(1).get<double>(),
                                         t.at(2).get<double>()};
                        sk.explicit_frame = f;
                    }
                    for (const Json& jp : jk.at("profiles")) {
                        Profile pr;
                        for (const Json& jl : jp) {
                            Loop loop;
                            for (const Json& jc : jl) {
                                std::string ct = jc.at("type").get<std::string>();
                                if (ct == "line") {
                                    loop.curves.emplace_back(
                                        LineCurve{point_from_json(jc.at("start"))});
                                } else if (ct == "arc") {
                                    ArcCurve a;
                                    a.start = point_from_json(jc.at("start"));
                                    a.sweep_deg = jc.at("sweep_deg").get<double>();
                                    a.orient = jc.at("orient").get<std::string>() == "cw"
                                                   ? Orientation::CW
                                                   : Orientation::CCW;
                                    loop.curves.emplace_back(a);
                                } else if (ct == "circle") {
                                    CircleCurve c;
                                    c.center = point_from_json(jc.at("center"));
                                    c.radius = jc.at("radius").get<double>();
                                    loop.curves.emplace_back(c);
                                } else {
                                    throw FormatError("unknown curve type '" + ct + "'");
                                }
                            }
                            pr.loops.push_back(std::move(loop));
                        }
                        sk.profiles.push_back(std::move(pr));
                    }
                    ep.sketches.push_back(std::move(sk));
                }
                ep.extrude.e_p = js.at("e_p").get<double>();
                ep.extrude.e_n = js.at("e_n").get<double>();
                ep.extrude.op = iodetail::bool_from_name(js.at("op").get<std::string>());
                prog.steps.emplace_back(std::move(ep));
            } else if (type == "chamfer" || type == "fillet") {
                std::vector<EntityRef> edges;
                for (const Json& je : js.at("edges")) edges.push_back(ref_from_json(je));
                if (type == "chamfer")
                    prog.steps.emplace_back(
                        ChamferStep{js.at("distance").get<double>(), std::move(edges)});
                else
                    prog.steps.emplace_back(
                        FilletStep{js.at("radius").get<double>(), std::move(edges)});
            } else {
                throw FormatError("unknown step type '" + type + "'");
            }
        }
        return prog;
    } catch (const Json::exception& e) {
        throw FormatError(std::string("program json: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// Token streams <-> JSON
// ---------------------------------------------------------------------------

inline Json stream_to_json(const TokenStream& s) {
    Json pointers = Json::array();
    for (const auto& [pos, ref] : s.pointer_payloads)
        pointers.push_back({{"pos", pos}, {"entity_ref", ref_to_json(ref)}});
    return {{"layout", "pointer"}, {"q", s.cfg.q},       {"value_min", s.norm.lo},
            {"value_max", s.norm.hi}, {"tokens", s.tokens}, {"pointers", pointers}};
}

inline TokenStream stream_from_json(const Json& j) {
    try {
        if (j.value("layout", "pointer") != std::string("pointer"))
            throw FormatError("not a pointer token stream");
        TokenStream s;
        s.cfg.q = j.at("q").get<int>();
        s.norm.lo = j.at("value_min").get<double>();
        s.norm.hi = j.at("value_max").get<double>();
        s.tokens = j.at("tokens").get<std::vector<int>>();
        for (const Json& jp : j.at("pointers"))
            s.pointer_payloads[jp.at("pos").get<int>()] = ref_from_json(jp.at("entity_ref"));
        if (!s.payload_invariant_ok())
            throw FormatError("pointer payloads do not line up with pe tokens");
        return s;
    } catch (const Json::exception& e) {
        throw FormatError(std::string("token stream json: ") + e.what());
    }
}

inline Json legacy_to_json(const LegacyStream& s) {
    return {{"layout", "legacy"},
            {"q", s.cfg.q},
            {"value_min", s.norm.lo},
            {"value_max", s.norm.hi},
            {"tokens", s.tokens}};
}

inline LegacyStream legacy_from_json(const Json& j) {
    try {
        if (j.value("layout", "legacy") != std::string("legacy"))
            throw FormatError("not a legacy token stream");
        LegacyStream s;
        s.cfg.q = j.at("q").get<int>();
        s.norm.lo = j.at("value_min").get<double>();
        s.norm.hi = j.at("value_max").get<double>();
        s.tokens = j.at("tokens").get<std::vector<int>>();
        return s;
    } catch (const Json::exception& e) {
        throw FormatError(std::string("legacy stream json: ") + e.what());
    }
}

// ---------------------------------------------------------------------------
// B-rep topology dump
// ---------------------------------------------------------------------------

namespace iodetail {

inline Json vec3_json(const Vec3& v) { return {v.x, v.y, v.z}; }

inline Json surface_json(const AnalyticSurface& s) {
    Json j{{"type", surface_kind(s)}};
    if (const auto* pl = std::get_if<PlaneSurface>(&s)) {
        j["point"] = vec3_json(pl->point);
        j["normal"] = vec3_json(pl->normal);
    } else if (const auto* cy = std::get_if<CylinderSurface>(&s)) {
        j["axis_point"] = vec3_json(cy->axis_point);
        j["axis_dir"] = vec3_json(cy->axis_dir);
        j["radius"] = cy->radius;
    } else if (const auto* co = std::get_if<ConeSurface>(&s)) {
        j["apex"] = vec3_json(co->apex);
        j["axis_dir"] = vec3_json(co->axis_dir);
        j["half_angle"] = co->half_angle;
    } else {
        const auto& t = std::get<TorusSurface>(s);
        j["center"] = vec3_json(t.center);
        j["axis_dir"] = vec3_json(t.axis_dir);
        j["major_r"] = t.major_r;
        j["minor_r"] = t.minor_r;
    }
    return j;
}

inline Json curve_json(const EdgeCurve& c) {
    Json j{{"type", curve_kind(c)}};
    if (const auto* ln = std::get_if<Line3>(&c)) {
        j["p0"] = vec3_json(ln->p0);
        j["p1"] = vec3_json(ln->p1);
    } else if (const auto* ar = std::get_if<Arc3>(&c)) {
        j["center"] = vec3_json(ar->center);
        j["axis"] = vec3_json(ar->axis);
        j["radius"] = ar->radius;
        j["start_dir"] = vec3_json(ar->start_dir);
        j["sweep_rad"] = ar->sweep_rad;
    } else if (const auto* ci = std::get_if<Circle3>(&c)) {
        j["center"] = vec3_json(ci->center);
        j["axis"] = vec3_json(ci->axis);
        j["radius"] = ci->radius;
    } else {
        const auto& pc = std::get<PolyCurve>(c);
        Json pts = Json::array();
        for (const Vec3& p : pc.pts) pts.push_back(vec3_json(p));
        j["points"] = pts;
    }
    return j;
}

}  // namespace iodetail

inline Json brep_to_json(const Solid& s) {
    Json faces = Json::array();
    for (const BrepFace& f : s.faces)
        faces.push_back({{"id", f.id},
                         {"tag", f.tag},
                         {"surface", iodetail::surface_json(f.surface)},
                         {"area", f.area},
                         {"orient", f.orient}});
    Json edges = Json::array();
    for (const BrepEdge& e : s.edges)
        edges.push_back({{"id", e.id},
                         {"curve", iodetail::curve_json(e.curve)},
                         {"faces", {e.f1, e.f2}},
                         {"closed", e.closed},
                         {"length", e.length}});
    Json graph = Json::array();
    for (const auto& [a, b] : s.graph) graph.push_back({a, b});
    return {{"faces", faces}, {"edges", edges}, {"graph", graph}};
}

// ---------------------------------------------------------------------------
// Mesh export
// ---------------------------------------------------------------------------

inline void write_stl(const TriMesh& m, std::ostream& os) {
    char header[80] = {};
    os.write(header, 80);
    auto u32 = [&](uint32_t v) { os.write(reinterpret_cast<const char*>(&v), 4); };
    auto f32 = [&](double d) {
        float v = static_cast<float>(d);
        os.write(reinterpret_cast<const char*>(&v), 4);
    };
    u32(static_cast<uint32_t>(m.t.size()));
    for (const auto& t : m.t) {
        Vec3 a = m.v[t.a], b = m.v[t.b], c = m.v[t.c];
        Vec3 n = (b - a).cross(c - a);
        double len = n.norm();
        if (len > 0) n = n * (1.0 / len);
        for (const Vec3& p : {n, a, b, c}) {
            f32(p.x);
            f32(p.y);
            f32(p.z);
        }
        uint16_t attr = 0;
        os.write(reinterpret_cast<const char*>(&attr), 2);
    }
}

inline void write_obj(const TriMesh& m, std::ostream& os) {
    os << std::setprecision(17);
    for (const Vec3& v : m.v) os << "v " << v.x << ' ' << v.y << ' ' << v.z << '\n';
    for (const auto& t : m.t)
        os << "f " << t.a + 1 << ' ' << t.b + 1 << ' ' << t.c + 1 << '\n';
}

// Minimal OBJ reader for meshes written by write_obj (triangles only).
inline TriMesh read_obj(std::istream& is) {
    TriMesh m;
    std::string line;
    while (std::getline(is, line)) {
        std::istringstream ls(line);
        std::string tag;
        ls >> tag;
        if (tag == "v") {
            Vec3 p;
            ls >> p.x >> p.y >> p.z;
            m.v.push_back(p);
        } else if (tag == "f") {
            int a, b, c;
            ls >> a >> b >> c;
            m.t.push_back({a - 1, b - 1, c - 1, 0});
        }
    }
    return m;
}

// ---------------------------------------------------------------------------
// Files and CSV
// ---------------------------------------------------------------------------

inline Json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot open " + path);
    try {
        return Json::parse(in);
    } catch (const Json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
}

inline void write_json_file(const std::string& path, const Json& j) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << j.dump(2) << '\n';
}

inline void write_text_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw IoError("cannot write " + path);
    out << text;
}

// 6 significant digits, the stable float formatting for CSV reports.
inline std::string fmt6(double v) {
    if (std::isnan(v)) return "nan";
    std::ostringstream os;
    os << std::setprecision(6) << v;
    return os.str();
}

inline std::string csv_table(const std::vector<std::string>& header,
                             const std::vector<std::vector<std::string>>& rows) {
    std::ostringstream os;
    for (size_t i = 0; i < header.size(); ++i) os << (i ? "," : "") << header[i];
    os << '\n';
    for (const auto& row : rows) {
        for (size_t i = 0; i < row.size(); ++i) os << (i ? "," : "") << row[i];
        os << '\n';
    }
    return os.str();
}

}  // namespace pcad
