#include <filesystem>
#include <iostream>
#include <random>

#include <CLI11.hpp>

#include "pointercad/io.hpp"
#include "pointercad/neural.hpp"
#include "pointercad/pointer.hpp"
#include "pointercad/study.hpp"

namespace fs = std::filesystem;
using namespace pcad;

namespace {

// Shared flags; seed falls back to the POINTERCAD_SEED environment variable.
struct Globals {
    uint32_t seed = 1;
    int q = 8;
    int tess_segments = 64;
    int jobs = 1;

    ExecOptions exec() const {
        ExecOptions o;
        o.tess.segments = tess_segments;
        return o;
    }
    QuantConfig quant() const {
        QuantConfig c;
        c.q = q;
        return c;
    }
};

uint32_t env_seed() {
    if (const char* s = std::getenv("POINTERCAD_SEED")) {
        try {
            return static_cast<uint32_t>(std::stoul(s));
        } catch (const std::exception&) {
        }
    }
    return 1;
}

// Exit codes partition the error space: 2 decode, 3 grammar, 4 kernel,
// 5 pointer resolution. Input reading counts as decoding.
int exit_code_for(const Error& e) {
    const std::string& c = e.code();
    if (c == "UnknownToken" || c == "TruncatedStream" || c == "TrailingTokens" ||
        c == "MissingTerminator" || c == "RangeError" || c == "FormatError" || c == "IoError")
        return 2;
    if (c == "GrammarError" || c == "ValidationFailed" || c == "MalformedProgram") return 3;
    if (c == "PointerResolutionFailed" || c == "UnknownEntity" || c == "NoCandidates" ||
        c == "NonManifoldInput" || c == "SnapFailure" || c == "NonPlanarSketchTarget")
        return 5;
    return 4;
}

void emit_json(const Json& j, const std::string& out) {
    if (out.empty())
        std::cout << j.dump(2) << '\n';
    else
        write_json_file(out, j);
}

void emit_text(const std::string& text, const std::string& out) {
    if (out.empty())
        std::cout << text;
    else
        write_text_file(out, text);
}

// A sequence file is either a program AST ({"steps": ...}) or a token
// stream ({"tokens": ...}, pointer or legacy layout).
Program load_program(const std::string& path) {
    Json j = read_json_file(path);
    if (j.contains("steps")) return program_from_json(j);
    if (!j.contains("tokens")) throw FormatError(path + ": neither a program nor a token stream");
    if (j.value("layout", "pointer") == std::string("legacy"))
        return decode_legacy(legacy_from_json(j));
    TokenStream s = stream_from_json(j);
    return decode(s, s.cfg);
}

std::string model_stem(int index) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "model_%03d", index);
    return buf;
}

// ---------------------------------------------------------------------------
// encode / decode / validate / build
// ---------------------------------------------------------------------------

int cmd_encode(const Globals& g, const std::string& in, const std::string& out, bool legacy) {
    Program prog = program_from_json(read_json_file(in));
    if (legacy) {
        std::vector<EulerFrame> frames;
        for (const Frame& f : execute_program(prog, g.exec()).sketch_frames)
            frames.push_back(frame_to_euler(f));
        emit_json(legacy_to_json(encode_legacy_with_frames(prog, g.quant(), frames)), out);
    } else {
        emit_json(stream_to_json(encode(prog, g.quant())), out);
    }
    return 0;
}

int cmd_decode(const std::string& in, const std::string& out) {
    Json j = read_json_file(in);
    Program prog = j.value("layout", "pointer") == std::string("legacy")
                       ? decode_legacy(legacy_from_json(j))
                       : [&] {
                             TokenStream s = stream_from_json(j);
                             return decode(s, s.cfg);
                         }();
    emit_json(program_to_json(prog), out);
    return 0;
}

int cmd_validate(const std::string& in) {
    Program prog = program_from_json(read_json_file(in));
    Diagnostics diags = validate(prog);
    for (const Diagnostic& d : diags)
        std::cout << to_string(d.code) << ' ' << d.path << ": " << d.message << '\n';
    if (diags.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    return 3;
}

int cmd_build(const Globals& g, const std::string& in, const std::string& out_stl,
              const std::string& out_brep, const std::string& out_obj) {
    Program prog = load_program(in);
    Diagnostics diags = validate(prog);
    if (!diags.empty()) throw ValidationFailed(diags.front().path + ": " + diags.front().message);
    ExecResult res = execute_program(prog, g.exec());
    const Solid& solid = res.final_solid();
    if (!out_stl.empty()) {
        std::ofstream os(out_stl, std::ios::binary);
        if (!os) throw IoError("cannot write " + out_stl);
        write_stl(solid.mesh, os);
    }
    if (!out_obj.empty()) {
        std::ofstream os(out_obj);
        if (!os) throw IoError("cannot write " + out_obj);
        write_obj(solid.mesh, os);
    }
    if (!out_brep.empty()) write_json_file(out_brep, brep_to_json(solid));
    std::cout << "built: " << solid.faces.size() << " faces, " << solid.edges.size()
              << " edges, " << solid.mesh.t.size() << " triangles\n";
    return 0;
}

// ---------------------------------------------------------------------------
// gen-corpus / quant-study
// ---------------------------------------------------------------------------

int cmd_gen_corpus(const Globals& g, CorpusSpec spec, const std::string& out_dir) {
    spec.seed = g.seed;
    spec.exec = g.exec();
    fs::create_directories(out_dir);

    std::vector<Program> progs(spec.n_models);
    std::vector<TriMesh> meshes(spec.n_models);
    parallel_for(spec.n_models, g.jobs, [&](int i) {
        progs[i] = generate_program(spec, i);
        meshes[i] = execute_to_mesh(progs[i], spec.exec);
    });

    Json manifest;
    manifest["seed"] = spec.seed;
    manifest["n_models"] = spec.n_models;
    manifest["tess_segments"] = g.tess_segments;
    Json models = Json::array();
    for (int i = 0; i < spec.n_models; ++i) {
        std::string stem = model_stem(i);
        write_json_file(out_dir + "/" + stem + ".json", program_to_json(progs[i]));
        std::ofstream os(out_dir + "/" + stem + ".obj");
        if (!os) throw IoError("cannot write " + stem + ".obj");
        write_obj(meshes[i], os);
        models.push_back({{"index", i},
                          {"program", stem + ".json"},
                          {"mesh", stem + ".obj"},
                          {"n_steps", progs[i].steps.size()}});
    }
    manifest["models"] = models;
    write_json_file(out_dir + "/manifest.json", manifest);
    std::cout << "wrote " << spec.n_models << " models to " << out_dir << '\n';
    return 0;
}

std::vector<Program> load_corpus_dir(const std::string& dir) {
    std::vector<std::string> files;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string name = e.path().filename().string();
        if (e.path().extension() == ".json" && name.rfind("model_", 0) == 0)
            files.push_back(e.path().string());
    }
    std::sort(files.begin(), files.end());
    if (files.empty()) throw IoError("no model_*.json files in " + dir);
    std::vector<Program> progs;
    for (const std::string& f : files) progs.push_back(program_from_json(read_json_file(f)));
    return progs;
}

int cmd_quant_study(const Globals& g, CorpusSpec corpus_spec, const std::string& corpus_dir,
                    const std::string& qs_csv, int n_samples, const std::string& out) {
    StudySpec spec;
    spec.corpus = corpus_spec;
    spec.corpus.seed = g.seed;
    spec.exec = g.exec();
    spec.corpus.exec = spec.exec;
    spec.cd_samples = n_samples;
    spec.cd_seed = g.seed;
    spec.jobs = g.jobs;
    if (!qs_csv.empty()) {
        spec.qs.clear();
        std::istringstream is(qs_csv);
        std::string tok;
        while (std::getline(is, tok, ',')) spec.qs.push_back(std::stoi(tok));
    }

    StudyResult res = corpus_dir.empty() ? run_quant_study(spec)
                                         : run_quant_study(spec, load_corpus_dir(corpus_dir));

    std::vector<std::vector<std::string>> rows;
    for (const StudyRow& r : res.rows)
        rows.push_back({std::to_string(r.model), std::to_string(r.q),
                        r.pointer_ok ? "1" : "0", r.legacy_ok ? "1" : "0", fmt6(r.cd_pointer),
                        fmt6(r.cd_legacy)});
    for (const StudyCell& c : res.cells)
        rows.push_back({"median", std::to_string(c.q), std::to_string(c.n_pointer),
                        std::to_string(c.n_legacy), fmt6(c.median_pointer),
                        fmt6(c.median_legacy)});
    emit_text(csv_table({"model", "q", "pointer_ok", "legacy_ok", "cd_pointer", "cd_legacy"},
                        rows),
              out);
    return 0;
}

// ---------------------------------------------------------------------------
// metrics
// ---------------------------------------------------------------------------

struct ModelEntry {
    std::string stem;
    std::string program;  // empty when only a mesh is present
    std::string mesh;
};

std::vector<ModelEntry> scan_models(const std::string& dir) {
    std::map<std::string, ModelEntry> by_stem;
    for (const auto& e : fs::directory_iterator(dir)) {
        std::string stem = e.path().stem().string();
        std::string ext = e.path().extension().string();
        if (ext != ".json" && ext != ".obj") continue;
        if (stem == "manifest") continue;
        ModelEntry& m = by_stem[stem];
        m.stem = stem;
        (ext == ".json" ? m.program : m.mesh) = e.path().string();
    }
    std::vector<ModelEntry> out;
    for (auto& [k, v] : by_stem) out.push_back(std::move(v));
    return out;
}

int cmd_metrics(const Globals& g, const std::string& pred_dir, const std::string& gt_dir,
                int n_samples, double seg_thresh, double f1_tol, const std::string& out) {
    auto preds = scan_models(pred_dir);
    auto gts = scan_models(gt_dir);
    std::map<std::string, const ModelEntry*> pred_by_stem;
    for (const auto& p : preds) pred_by_stem[p.stem] = &p;

    struct Row {
        std::string stem;
        bool paired = false, built = false, have_f1 = false;
        double cd = 0, seg = 0, flux = 0, dang = 0, sir = 0, f1_line = 0, f1_ext = 0;
    };
    std::vector<Row> rows(gts.size());
    double nan = std::numeric_limits<double>::quiet_NaN();

    parallel_for(static_cast<int>(gts.size()), g.jobs, [&](int i) {
        Row& row = rows[i];
        row.stem = gts[i].stem;
        row.cd = row.seg = row.flux = row.dang = row.sir = row.f1_line = row.f1_ext = nan;
        auto it = pred_by_stem.find(gts[i].stem);
        if (it == pred_by_stem.end()) return;
        row.paired = true;

        auto realize = [&](const ModelEntry& m, TriMesh& mesh, Program* prog) -> bool {
            try {
                if (!m.program.empty()) {
                    Program p = program_from_json(read_json_file(m.program));
                    mesh = execute_to_mesh(p, g.exec());
                    if (prog) *prog = std::move(p);
                    return true;
                }
                std::ifstream is(m.mesh);
                if (!is) throw IoError("cannot open " + m.mesh);
                mesh = read_obj(is);
                return !mesh.t.empty();
            } catch (const Error&) {
                return false;
            }
        };

        TriMesh gm, pm;
        Program gp, pp;
        bool gt_is_prog = !gts[i].program.empty(), pred_is_prog = !it->second->program.empty();
        if (!realize(gts[i], gm, gt_is_prog ? &gp : nullptr)) return;
        if (!realize(*it->second, pm, pred_is_prog ? &pp : nullptr)) return;
        row.built = true;

        row.cd = chamfer_distance(gm, pm, n_samples, g.seed ^ static_cast<uint32_t>(i));
        row.seg = seg_error(gm, pm, seg_thresh);
        row.flux = flux_enclosure_error(pm);
        row.dang = dangling_edge_length(pm);
        row.sir = self_intersection_ratio(pm);
        if (gt_is_prog && pred_is_prog) {
            row.have_f1 = true;
            row.f1_line = primitive_f1(pp, gp, PrimitiveKind::Line, f1_tol, g.exec());
            row.f1_ext = primitive_f1(pp, gp, PrimitiveKind::Extrusion, f1_tol, g.exec());
        }
    });

    int n_test = 0, n_built = 0;
    std::vector<double> cds, f1ls, f1es;
    std::vector<std::vector<std::string>> table;
    for (const Row& r : rows) {
        if (!r.paired) {
            std::cerr << "no prediction for " << r.stem << ", skipped\n";
            continue;
        }
        ++n_test;
        if (r.built) {
            ++n_built;
            cds.push_back(r.cd);
            if (r.have_f1) {
                f1ls.push_back(r.f1_line);
                f1es.push_back(r.f1_ext);
            }
        }
        table.push_back({r.stem, r.built ? "1" : "0", fmt6(r.cd), fmt6(r.seg), fmt6(r.flux),
                         fmt6(r.dang), fmt6(r.sir), fmt6(r.f1_line), fmt6(r.f1_ext)});
    }
    if (n_test == 0) throw IoError("no paired models between " + pred_dir + " and " + gt_dir);

    auto mean = [](const std::vector<double>& v) {
        if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
        double s = 0;
        for (double x : v) s += x;
        return s / v.size();
    };
    table.push_back({"aggregate", fmt6(invalidity_ratio(n_test, n_built)), fmt6(mean(cds)),
                     fmt6(studydetail::median(cds)), "", "", "", fmt6(mean(f1ls)),
                     fmt6(mean(f1es))});
    emit_text(csv_table({"model", "built", "cd", "seg_error", "flux_ee", "dang_el", "sir",
                         "f1_line", "f1_extrusion"},
                        table),
              out);
    return 0;
}

// ---------------------------------------------------------------------------
// resolve / gradcheck
// ---------------------------------------------------------------------------

int cmd_resolve(const Globals& g, const std::string& in, const std::string& kind_name,
                int stable_id, const std::string& out) {
    Program prog = load_program(in);
    ExecResult res = execute_program(prog, g.exec());
    CandidateSet set = enumerate_candidates(res.final_solid());

    EntityRef::Kind kind = iodetail::kind_from_name(kind_name);
    EntityRef target{0, kind, stable_id};
    bool is_edge = kind == EntityRef::Kind::Edge;
    const auto& refs = is_edge ? set.edges : set.faces;
    const auto& embs = is_edge ? set.edge_emb : set.face_emb;
    const auto& class_of = is_edge ? set.edge_class_of : set.face_class_of;
    int qi = is_edge ? set.edge_index(target) : set.face_index(target);
    if (qi < 0)
        throw UnknownEntity(kind_name + " " + std::to_string(stable_id) +
                            " is not on the final solid");

    std::vector<int> order(refs.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::vector<double> cos(refs.size());
    for (size_t i = 0; i < refs.size(); ++i) cos[i] = cosine(embs[qi], embs[i]);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return cos[a] > cos[b]; });

    std::vector<std::vector<std::string>> rows;
    for (size_t rank = 0; rank < order.size(); ++rank) {
        int i = order[rank];
        rows.push_back({std::to_string(rank), std::string(to_string(refs[i].kind)),
                        std::to_string(refs[i].stable_id), std::to_string(class_of[i]),
                        fmt6(cos[i])});
    }
    emit_text(csv_table({"rank", "kind", "stable_id", "class", "cosine"}, rows), out);
    return 0;
}

int cmd_gradcheck(const Globals& g) {
    std::mt19937 rng(g.seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    auto randv = [&](int n) {
        Vecd v(n);
        for (double& x : v) x = gauss(rng);
        return v;
    };

    double worst_label = 0, worst_p = 0, worst_s = 0;
    for (int trial = 0; trial < 8; ++trial) {
        Vecd logits = randv(6);
        Vecd grad;
        label_value_loss(logits, trial % 6, 0.1, &grad);
        worst_label = std::max(
            worst_label,
            grad_check([&](const Vecd& x) { return label_value_loss(x, trial % 6, 0.1); },
                       logits, grad));

        std::vector<Vecd> cands;
        for (int i = 0; i < 5; ++i) cands.push_back(randv(8));
        Vecd p = randv(8);
        std::vector<int> pos{0, 1}, neg{2, 3, 4};
        Vecd grad_p;
        double grad_log_s = 0;
        pointer_loss(p, cands, pos, neg, 0.07, &grad_p, &grad_log_s);
        worst_p = std::max(
            worst_p,
            grad_check([&](const Vecd& x) { return pointer_loss(x, cands, pos, neg, 0.07); }, p,
                       grad_p));
        double log_s = std::log(1.0 / 0.07);
        worst_s = std::max(
            worst_s, grad_check(
                         [&](const Vecd& x) {
                             return pointer_loss(p, cands, pos, neg, 1.0 / std::exp(x[0]));
                         },
                         {log_s}, {grad_log_s}));
    }
    std::cout << "label_value_loss max_rel_err " << worst_label << '\n';
    std::cout << "pointer_loss_grad_p max_rel_err " << worst_p << '\n';
    std::cout << "pointer_loss_grad_log_s max_rel_err " << worst_s << '\n';
    bool ok = worst_label < 1e-4 && worst_p < 1e-4 && worst_s < 1e-4;
    std::cout << (ok ? "ok\n" : "FAILED\n");
    return ok ? 0 : 1;
}

void add_corpus_flags(CLI::App* cmd, CorpusSpec& spec) {
    cmd->add_option("--n-models", spec.n_models, "number of models to generate");
    cmd->add_option("--max-steps", spec.max_steps, "upper bound on steps per program");
    cmd->add_option("--blend-prob", spec.blend_prob, "chamfer/fillet step probability");
    cmd->add_option("--snap-prob", spec.snap_prob, "snapped rectangle side probability");
    cmd->add_option("--circle-prob", spec.circle_prob, "circular profile probability");
    cmd->add_option("--cut-prob", spec.cut_prob, "Cut (vs Join) probability");
    cmd->add_option("--face-sketch-prob", spec.face_sketch_prob,
                    "probability a later sketch targets a model face");
    cmd->add_flag("--axis-aligned", spec.axis_aligned,
                  "base-plane rectangles on a 1/64 grid only");
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"pointer-based CAD sequence toolkit"};
    app.require_subcommand(1);

    Globals g;
    g.seed = env_seed();
    app.add_option("--seed", g.seed, "random seed (default: POINTERCAD_SEED or 1)");
    app.add_option("--q", g.q, "quantization bit width");
    app.add_option("--tess-segments", g.tess_segments, "tessellation segments per full circle");
    app.add_option("--jobs", g.jobs, "worker threads for model-level parallelism");

    std::string in, out, out_stl, out_brep, out_obj;
    bool legacy = false;

    auto* enc = app.add_subcommand("encode", "program AST JSON -> token stream JSON");
    enc->add_option("input", in)->required();
    enc->add_option("-o,--out", out, "output file (default: stdout)");
    enc->add_flag("--legacy", legacy, "emit the legacy layout with explicit frames");

    auto* dec = app.add_subcommand("decode", "token stream JSON -> program AST JSON");
    dec->add_option("input", in)->required();
    dec->add_option("-o,--out", out, "output file (default: stdout)");

    auto* val = app.add_subcommand("validate", "grammar-check a program AST");
    val->add_option("input", in)->required();

    auto* bld = app.add_subcommand("build", "decode, validate, execute, export");
    bld->add_option("input", in)->required();
    bld->add_option("--stl", out_stl, "binary STL output");
    bld->add_option("--obj", out_obj, "OBJ output");
    bld->add_option("--brep", out_brep, "topology dump JSON output");

    CorpusSpec corpus_spec;
    std::string out_dir;
    auto* gen = app.add_subcommand("gen-corpus", "generate a reproducible program corpus");
    gen->add_option("out_dir", out_dir)->required();
    add_corpus_flags(gen, corpus_spec);

    std::string corpus_dir, qs_csv;
    int n_samples = 8192;
    auto* study = app.add_subcommand("quant-study",
                                     "pointer-vs-legacy reconstruction error sweep over q");
    study->add_option("corpus_dir", corpus_dir, "directory of model_*.json (default: generate)");
    study->add_option("--q-values", qs_csv, "comma-separated bit widths (default 4..10)");
    study->add_option("--n-samples", n_samples, "chamfer-distance sample count");
    study->add_option("-o,--out", out, "CSV output file (default: stdout)");
    add_corpus_flags(study, corpus_spec);

    std::string pred_dir, gt_dir;
    double seg_thresh = 30.0, f1_tol = 1e-2;
    auto* met = app.add_subcommand("metrics", "reconstruction metrics over paired directories");
    met->add_option("pred_dir", pred_dir)->required();
    met->add_option("gt_dir", gt_dir)->required();
    met->add_option("--n-samples", n_samples, "chamfer-distance sample count");
    met->add_option("--seg-thresh", seg_thresh, "dihedral threshold (degrees) for seg_error");
    met->add_option("--f1-tol", f1_tol, "per-parameter matching tolerance for primitive F1");
    met->add_option("-o,--out", out, "CSV output file (default: stdout)");

    std::string kind = "face";
    int stable_id = 0;
    auto* res = app.add_subcommand("resolve", "similarity-ranked candidate table for an entity");
    res->add_option("input", in)->required();
    res->add_option("--kind", kind, "face, edge, or base_plane")->required();
    res->add_option("--id", stable_id, "stable id of the query entity")->required();
    res->add_option("-o,--out", out, "CSV output file (default: stdout)");

    auto* grd = app.add_subcommand("gradcheck",
                                   "finite-difference check of the loss gradients");

    for (auto* sub : app.get_subcommands({})) sub->fallthrough();

    CLI11_PARSE(app, argc, argv);

    try {
        if (enc->parsed()) return cmd_encode(g, in, out, legacy);
        if (dec->parsed()) return cmd_decode(in, out);
        if (val->parsed()) return cmd_validate(in);
        if (bld->parsed()) return cmd_build(g, in, out_stl, out_brep, out_obj);
        if (gen->parsed()) return cmd_gen_corpus(g, corpus_spec, out_dir);
        if (study->parsed())
            return cmd_quant_study(g, corpus_spec, corpus_dir, qs_csv, n_samples, out);
        if (met->parsed())
            return cmd_metrics(g, pred_dir, gt_dir, n_samples, seg_thresh, f1_tol, out);
        if (res->parsed()) return cmd_resolve(g, in, kind, stable_id, out);
        if (grd->parsed()) return cmd_gradcheck(g);
    } catch (const Error& e) {
        std::cerr << e.what() << '\n';
        return exit_code_for(e);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
