// Acceptance gate: one self-contained check per release criterion, each
// printing a single PASS/FAIL line. Exit status is the number of failures.

#include <chrono>
#include <cstdio>
#include <functional>
#include <random>
#include <sstream>

#include "pointercad/corpus.hpp"
#include "pointercad/io.hpp"
#include "pointercad/neural.hpp"
#include "pointercad/pointer.hpp"
#include "pointercad/study.hpp"
#include "test_util.hpp"

using namespace pcad;

namespace {

std::ostringstream g_why;

#define EXPECT(cond)                                                \
    do {                                                            \
        if (!(cond)) {                                              \
            g_why << "    " << __LINE__ << ": " << #cond << "\n";   \
            return false;                                           \
        }                                                           \
    } while (0)

bool near(double a, double b, double tol) { return std::abs(a - b) <= tol; }
bool near_rel(double a, double b, double rel) {
    return std::abs(a - b) <= rel * std::max(std::abs(a), std::abs(b));
}

// ---------------------------------------------------------------------------
// 1. Token-table conformance
// ---------------------------------------------------------------------------

bool c1_token_table() {
    EXPECT(kTokEm == 1);
    EXPECT(kTokEs == 2);
    EXPECT(kTokSs == 3);
    EXPECT(kTokSe == 4);
    EXPECT(kTokSc == 5);
    EXPECT(kTokSf == 6);
    EXPECT(kTokSp == 7);
    EXPECT(kTokSl == 8);
    EXPECT(kTokSx == 9);
    EXPECT(kTokPe == 10);
    EXPECT(kTokPd == 11);
    EXPECT(kTokOrCw == 12);
    EXPECT(kTokOrCcw == 13);
    EXPECT(kTokDrXp == 14 && kTokDrXn == 15 && kTokDrYp == 16);
    EXPECT(kTokDrYn == 17 && kTokDrZp == 18 && kTokDrZn == 19);
    EXPECT(kTokBoNew == 20 && kTokBoJoin == 21 && kTokBoCut == 22 && kTokBoIntersect == 23);
    EXPECT(kTokValueBase == 24);
    QuantConfig cfg;
    cfg.q = 6;
    EXPECT(cfg.vocab_size() == 24 + 64);

    // direction rows: symbol, primary, auxiliary
    struct Row {
        Dir d;
        int id;
        Vec3 primary, aux;
    };
    const Row rows[] = {
        {Dir::Xp, 14, {1, 0, 0}, {0, 1, 0}},  {Dir::Xn, 15, {-1, 0, 0}, {0, 0, 1}},
        {Dir::Yp, 16, {0, 1, 0}, {0, 0, 1}},  {Dir::Yn, 17, {0, -1, 0}, {1, 0, 0}},
        {Dir::Zp, 18, {0, 0, 1}, {1, 0, 0}},  {Dir::Zn, 19, {0, 0, -1}, {0, 1, 0}},
    };
    for (const Row& r : rows) {
        EXPECT(dir_token(r.d) == r.id);
        EXPECT(dir_from_token(r.id) == r.d);
        EXPECT((dir_vector(r.d) - r.primary).norm() == 0.0);
        EXPECT((dir_auxiliary(r.d) - r.aux).norm() == 0.0);
    }
    return true;
}

// ---------------------------------------------------------------------------
// 2. Round-trip over 1000 random valid programs
// ---------------------------------------------------------------------------

bool c2_round_trip() {
    std::mt19937 rng(7);
    for (int q : {4, 8, 12}) {
        QuantConfig cfg;
        cfg.q = q;
        for (int i = 0; i < 1000; ++i) {
            Program p = canonicalize(pcad::testing::random_syntactic_program(rng), cfg);
            TokenStream s = encode(p, cfg);
            EXPECT(s.payload_invariant_ok());
            EXPECT(decode(s) == p);
            EXPECT(parse(serialize(p, cfg, compute_norm(p))) == p);
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// 3. Quantization-error trend on a 200-model corpus
// ---------------------------------------------------------------------------

// Chamfer distance of a mesh against itself sampled with two different seeds:
// the sampling-noise floor for this mesh at this sample count.
double cross_seed_cd(const TriMesh& m, int n, uint32_t s1, uint32_t s2) {
    auto pa = sample_surface(m, n, s1);
    auto pb = sample_surface(m, n, s2);
    metricsdetail::NnGrid ga(pa), gb(pb);
    double acc = 0;
    for (const auto& q : pa) acc += gb.nearest2(q) / n;
    for (const auto& q : pb) acc += ga.nearest2(q) / n;
    return acc * 1e3;
}

bool c3_quant_trend() {
    StudySpec spec;
    spec.corpus.n_models = 200;
    spec.corpus.blend_prob = 0.0;
    spec.corpus.seed = 11;
    spec.exec.tess.segments = 32;
    spec.corpus.exec = spec.exec;
    spec.cd_samples = 8192;

    std::vector<Program> corpus = generate_corpus(spec.corpus);
    StudyResult res = run_quant_study(spec, corpus);
    EXPECT(res.n_compatible == res.n_models);  // blend-free corpus is extrude-only

    std::vector<double> noise;
    for (const Program& p : corpus)
        noise.push_back(
            cross_seed_cd(execute_to_mesh(p, spec.exec), spec.cd_samples, 1, 2));
    double noise_unit = studydetail::median(noise);
    EXPECT(noise_unit > 0);

    double prev_gap = std::numeric_limits<double>::infinity();
    for (const StudyCell& c : res.cells) {
        // a handful of round trips may fail at very coarse q; medians stay
        // meaningful as long as nearly all rows are valid
        EXPECT(c.n_pointer >= res.n_models * 95 / 100);
        EXPECT(c.n_legacy >= res.n_models * 95 / 100);
        // (a) pointer no worse than legacy at every q
        EXPECT(c.median_pointer <= c.median_legacy);
        // (b) at q = 8 the pointer median is at most a quarter of legacy's
        if (c.q == 8) EXPECT(c.median_pointer <= 0.25 * c.median_legacy);
        // (c) gap non-increasing in q within one sampling-noise unit
        double gap = c.median_legacy - c.median_pointer;
        EXPECT(gap <= prev_gap + noise_unit);
        prev_gap = gap;
    }
    return true;
}

// ---------------------------------------------------------------------------
// 4. Kernel analytic volumes
// ---------------------------------------------------------------------------

bool c4_analytic_volumes() {
    ExecOptions opt;  // default tessellation (64 segments)
    EXPECT(near(execute_to_mesh(pcad::testing::box_program(), opt).volume(), 1.0, 1e-9));

    // cube with a through cylinder cut of radius r
    double r = 0.3;
    Program cyl_cut = pcad::testing::box_program();
    {
        EPartStep cut;
        cut.sketches.push_back(pcad::testing::circle_sketch(0.5, 0.5, r));
        cut.extrude = {1.5, 0.5, BoolOp::Cut};
        cyl_cut.steps.emplace_back(cut);
    }
    EXPECT(near_rel(execute_to_mesh(cyl_cut, opt).volume(), 1.0 - kPi * r * r * 1.0, 0.005));

    // one-edge chamfer: removed prism c^2/2 over unit edge length
    ExecResult box = execute_program(pcad::testing::box_program(), opt);
    int edge_id = box.final_solid().edges.front().id;
    double c = 0.2;
    Program cham = pcad::testing::box_program();
    cham.steps.emplace_back(ChamferStep{c, {{1, EntityRef::Kind::Edge, edge_id}}});
    EXPECT(near_rel(execute_to_mesh(cham, opt).volume(), 1.0 - c * c / 2.0, 0.005));

    // one-edge fillet: removed (1 - pi/4) f^2 over unit edge length
    double f = 0.2;
    Program fil = pcad::testing::box_program();
    fil.steps.emplace_back(FilletStep{f, {{1, EntityRef::Kind::Edge, edge_id}}});
    EXPECT(near_rel(execute_to_mesh(fil, opt).volume(), 1.0 - (1.0 - kPi / 4.0) * f * f, 0.005));
    return true;
}

// ---------------------------------------------------------------------------
// 5. Watertightness of 50 random kernel outputs
// ---------------------------------------------------------------------------

bool c5_watertight() {
    CorpusSpec spec;
    spec.n_models = 50;
    spec.seed = 21;
    spec.exec.tess.segments = 32;
    for (int i = 0; i < spec.n_models; ++i) {
        TriMesh m = execute_to_mesh(generate_program(spec, i), spec.exec);
        EXPECT(flux_enclosure_error(m) < 1e-6);
        EXPECT(dangling_edge_length(m) == 0.0);
        EXPECT(self_intersection_ratio(m) == 0.0);
        EXPECT(is_closed_manifold(m));
    }
    return true;
}

// ---------------------------------------------------------------------------
// 6. Boolean volumes against the voxel oracle
// ---------------------------------------------------------------------------

bool c6_boolean_oracle() {
    CorpusSpec spec;
    spec.n_models = 30;
    spec.max_steps = 3;
    spec.axis_aligned = true;
    spec.blend_prob = 0.0;
    spec.circle_prob = 0.0;
    spec.snap_prob = 0.0;
    spec.seed = 31;
    spec.exec.tess.segments = 32;
    for (int i = 0; i < spec.n_models; ++i) {
        Program p = generate_program(spec, i);
        double kernel_vol = execute_to_mesh(p, spec.exec).volume();
        double oracle_vol = voxel_volume(p, 256);
        EXPECT(oracle_vol > 0);
        EXPECT(near_rel(kernel_vol, oracle_vol, 0.01));
    }
    return true;
}

// ---------------------------------------------------------------------------
// 7. Pointer resolution over 500 generated solids
// ---------------------------------------------------------------------------

bool c7_pointer_resolution(std::vector<Solid>& solids_out) {
    CorpusSpec spec;
    spec.n_models = 500;
    spec.seed = 41;
    spec.exec.tess.segments = 24;
    int n_frame_classes = 0, n_snap_classes = 0;
    for (int i = 0; i < spec.n_models; ++i) {
        Solid s = execute_program(generate_program(spec, i), spec.exec).final_solid();
        CandidateSet set = enumerate_candidates(s);

        // every candidate resolves into its own equivalence class
        for (size_t c = 0; c < set.faces.size(); ++c) {
            EntityRef got = resolve(set.face_emb[c], set, EntityRef::Kind::Face);
            EXPECT(set.face_class_of[set.face_index(got)] == set.face_class_of[c]);
        }
        for (size_t c = 0; c < set.edges.size(); ++c) {
            EntityRef got = resolve(set.edge_emb[c], set, EntityRef::Kind::Edge);
            EXPECT(set.edge_class_of[set.edge_index(got)] == set.edge_class_of[c]);
        }

        if (i < 60) solids_out.push_back(std::move(s));
    }

    // coplanar face classes give identical sketch frames; collinear edge
    // classes give identical snap results
    for (const Solid& s : solids_out) {
        CandidateSet set = enumerate_candidates(s);
        for (const auto& cls : set.face_classes) {
            if (cls.size() < 2) continue;
            std::vector<Frame> frames;
            bool ok = true;
            bool have_dr = false;
            Dir cls_dr = Dir::Zp;  // one dr per class: frames must agree for
                                   // the same request, whatever member is hit
            for (int idx : cls) {
                PlaneSurface pl;
                try {
                    pl = resolve_plane(s, set.faces[idx]);
                } catch (const Error&) {
                    ok = false;  // curved carrier, no sketch frame
                    break;
                }
                if (!have_dr) {
                    cls_dr = corpusdetail::closest_dir(pl.normal);
                    have_dr = true;
                }
                FrameSpec fs;
                fs.dr = cls_dr;
                fs.origin_hint = {0.12, -0.34};
                frames.push_back(build_frame(pl, fs));
            }
            if (!ok) continue;
            ++n_frame_classes;
            // class membership is decided within the solid's tolerance, so
            // carriers (and therefore frames) agree to that scale, far below
            // any feature size
            double tol = 64 * s.tol();
            for (const Frame& fr : frames) {
                EXPECT((fr.origin - frames[0].origin).norm() < tol);
                EXPECT((fr.u - frames[0].u).norm() < tol);
                EXPECT((fr.v - frames[0].v).norm() < tol);
                EXPECT((fr.w - frames[0].w).norm() < tol);
            }
        }
        FrameSpec top;
        top.dr = Dir::Zp;
        Frame sketch = build_frame(base_plane_surface(kBaseTop), top);
        for (const auto& cls : set.edge_classes) {
            if (cls.size() < 2) continue;
            std::vector<Vec2> snaps;
            int thrown = 0;
            for (int idx : cls) {
                Point2 p;
                p.x = 0.31;
                p.y = -0.17;
                p.snap = set.edges[idx];
                try {
                    snaps.push_back(resolve_snap(s, sketch, p));
                } catch (const Error&) {
                    ++thrown;  // e.g. the carrier projects to a point
                }
            }
            // degeneracy is a property of the shared carrier: all or none
            EXPECT(thrown == 0 || thrown == static_cast<int>(cls.size()));
            if (!snaps.empty()) ++n_snap_classes;
            for (const Vec2& q : snaps) EXPECT((q - snaps[0]).norm() < 64 * s.tol());
        }
    }
    EXPECT(n_frame_classes > 20);  // the corpus genuinely exercises the fixtures
    EXPECT(n_snap_classes > 20);
    return true;
}

// ---------------------------------------------------------------------------
// 8. Loss and gradient suite
// ---------------------------------------------------------------------------

bool c8_losses() {
    // L_v at alpha = 0 is plain cross-entropy
    Vecd logits{0.3, -1.2, 2.0, 0.7};
    for (int y = 0; y < 4; ++y) {
        Vecd p = softmax(logits);
        EXPECT(near(label_value_loss(logits, y, 0.0), -std::log(p[y]), 1e-12));
    }
    // uniform logits give ln N for any target
    Vecd uniform(7, 0.42);
    EXPECT(near(label_value_loss(uniform, 3, 0.0), std::log(7.0), 1e-12));
    EXPECT(near(label_value_loss(uniform, 0, 0.1), std::log(7.0), 1e-12));

    // hand-computed pointer-loss fixtures (s = 1/tau = 2)
    double s = 2.0;
    auto logsig = [](double x) { return -std::log1p(std::exp(-x)); };
    Vecd p{1.0, 0.0};
    EXPECT(near(pointer_loss(p, {{3.0, 0.0}}, {0}, {}, 0.5), -logsig(s), 1e-10));
    EXPECT(near(pointer_loss(p, {{0.0, 2.0}}, {}, {0}, 0.5), -logsig(0.0), 1e-10));
    EXPECT(near(pointer_loss(p, {{3.0, 0.0}, {0.0, 2.0}}, {0}, {1}, 0.5),
                0.5 * (-logsig(s) - logsig(0.0)), 1e-10));
    EXPECT(near(pointer_loss(p, {{-1.0, 0.0}}, {}, {0}, 0.5), -logsig(s), 1e-10));

    // finite-difference agreement, including d/d log s
    std::mt19937 rng(13);
    std::normal_distribution<double> gauss;
    auto randv = [&](int n) {
        Vecd v(n);
        for (double& x : v) x = gauss(rng);
        return v;
    };
    for (int trial = 0; trial < 6; ++trial) {
        Vecd lg = randv(5);
        Vecd grad;
        label_value_loss(lg, trial % 5, 0.1, &grad);
        EXPECT(grad_check([&](const Vecd& x) { return label_value_loss(x, trial % 5, 0.1); },
                          lg, grad) < 1e-4);

        std::vector<Vecd> cands;
        for (int i = 0; i < 4; ++i) cands.push_back(randv(6));
        Vecd q = randv(6);
        Vecd grad_p;
        double grad_log_s = 0;
        pointer_loss(q, cands, {0, 1}, {2, 3}, 0.07, &grad_p, &grad_log_s);
        EXPECT(grad_check(
                   [&](const Vecd& x) { return pointer_loss(x, cands, {0, 1}, {2, 3}, 0.07); },
                   q, grad_p) < 1e-4);
        double log_s = std::log(1.0 / 0.07);
        EXPECT(grad_check(
                   [&](const Vecd& x) {
                       return pointer_loss(q, cands, {0, 1}, {2, 3}, 1.0 / std::exp(x[0]));
                   },
                   {log_s}, {grad_log_s}) < 1e-4);
    }
    return true;
}

// ---------------------------------------------------------------------------
// 9. GNN and attention fixtures
// ---------------------------------------------------------------------------

bool c9_gnn_fixtures() {
    // hand-computed two-node toy layer under identity weights
    GnnParams ident = GnnParams::identity(2, 1);
    Graph g;
    g.nodes = {{1, 2}, {3, 4}};
    g.edges = {{0, 1}};
    g.edge_feats = {{0.5, -1}};
    Graph out = gnn_layer(g, ident);
    EXPECT(near(out.nodes[0][0], 2.5, 1e-10) && near(out.nodes[0][1], -2.0, 1e-10));
    EXPECT(near(out.nodes[1][0], 3.5, 1e-10) && near(out.nodes[1][1], 2.0, 1e-10));
    double s0 = (0.5 * 1 - 1 * 2) / std::sqrt(2.0);
    double s1 = (0.5 * 3 - 1 * 4) / std::sqrt(2.0);
    double w0 = std::exp(s0) / (std::exp(s0) + std::exp(s1));
    double w1 = 1.0 - w0;
    EXPECT(near(out.edge_feats[0][0], 0.5 + (w0 * 1 + w1 * 3) + (0.5 + 4.0), 1e-10));
    EXPECT(near(out.edge_feats[0][1], -1.0 + (w0 * 2 + w1 * 4) + (-1.0 + 6.0), 1e-10));

    // zero-weight residual identities hold exactly
    std::mt19937 rng(5);
    GnnParams p = GnnParams::random(4, 2, rng);
    p.attn.wo = Linear::zero(4, 4);
    p.psi.l2 = Linear::zero(4, 4);
    Graph h;
    h.nodes = {{1, 0, 0, 1}, {0, 1, 1, 0}};
    h.edges = {{0, 1}};
    h.edge_feats = {{0.25, 0.5, 0.75, 1.0}};
    Graph hr = gnn_layer(h, p);
    for (int d = 0; d < 4; ++d) EXPECT(hr.edge_feats[0][d] == h.edge_feats[0][d]);

    GnnParams q = GnnParams::random(4, 2, rng);
    q.f_theta = Linear::zero(4, 4);
    Graph qr = gnn_layer(h, q);
    Vecd acc(4);
    for (int d = 0; d < 4; ++d) acc[d] = (1.0 + q.eps) * h.nodes[0][d];
    Vecd expect = q.phi.apply(acc);
    for (int d = 0; d < 4; ++d) EXPECT(qr.nodes[0][d] == expect[d]);

    // MHA against a brute-force softmax oracle
    MhaParams mp = MhaParams::random(8, 4, rng);
    std::normal_distribution<double> d;
    auto randv = [&](int n) {
        Vecd v(n);
        for (double& x : v) x = d(rng);
        return v;
    };
    Vecd query = randv(8);
    std::vector<Vecd> keys, values;
    for (int n = 0; n < 5; ++n) {
        keys.push_back(randv(8));
        values.push_back(randv(8));
    }
    int hd = mp.dim / mp.heads;
    Vecd qq = mp.wq.apply(query);
    Vecd concat(mp.dim, 0.0);
    for (int head = 0; head < mp.heads; ++head) {
        std::vector<double> e(keys.size());
        double z = 0;
        for (size_t n = 0; n < keys.size(); ++n) {
            double sc = 0;
            Vecd kk = mp.wk.apply(keys[n]);
            for (int x = 0; x < hd; ++x) sc += qq[head * hd + x] * kk[head * hd + x];
            e[n] = std::exp(sc / std::sqrt(static_cast<double>(hd)));
            z += e[n];
        }
        for (size_t n = 0; n < keys.size(); ++n) {
            Vecd vv = mp.wv.apply(values[n]);
            for (int x = 0; x < hd; ++x) concat[head * hd + x] += e[n] / z * vv[head * hd + x];
        }
    }
    Vecd expect_mha = mp.wo.apply(concat);
    Vecd got = mha(query, keys, values, mp);
    for (int i = 0; i < 8; ++i) EXPECT(near(got[i], expect_mha[i], 1e-12));
    return true;
}

// ---------------------------------------------------------------------------
// 10. Metric oracles
// ---------------------------------------------------------------------------

bool c10_metric_oracles() {
    // CD against O(n^2) brute force
    TriMesh a = execute_to_mesh(pcad::testing::box_program());
    TriMesh b = execute_to_mesh(pcad::testing::cylinder_program());
    int n = 256;
    uint32_t seed = 3;
    auto pa = sample_surface(a, n, seed);
    auto pb = sample_surface(b, n, seed);
    auto brute = [&](const std::vector<Vec3>& from, const std::vector<Vec3>& to) {
        double acc = 0;
        for (const Vec3& q : from) {
            double best = std::numeric_limits<double>::infinity();
            for (const Vec3& t : to) best = std::min(best, (q - t).norm2());
            acc += best / n;
        }
        return acc;
    };
    double expect_cd = (brute(pa, pb) + brute(pb, pa)) * 1e3;
    EXPECT(near(chamfer_distance(a, b, n, seed), expect_cd, 1e-12));
    EXPECT(chamfer_distance(a, a, n, seed) == 0.0);

    // FluxEE of a cube missing its top face equals the face area (x 1e3)
    TriMesh open_cube;
    open_cube.v = a.v;
    for (const auto& t : a.t) {
        Vec3 nrm = (a.v[t.b] - a.v[t.a]).cross(a.v[t.c] - a.v[t.a]);
        if (nrm.z > 0.5) continue;  // drop the +z face
        open_cube.t.push_back(t);
    }
    EXPECT(open_cube.t.size() == a.t.size() - 2);
    EXPECT(near(flux_enclosure_error(open_cube), 1.0 * 1e3, 1e-9));

    // SIR on fixtures with hand-counted crossing pairs
    TriMesh clean;
    clean.v = {{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, {5, 0, 0}, {6, 0, 0}, {5, 1, 0}};
    clean.t = {{0, 1, 2, 0}, {3, 4, 5, 0}};
    EXPECT(self_intersection_ratio(clean) == 0.0);
    TriMesh cross = clean;
    cross.v.push_back({0.3, 0.3, -1});
    cross.v.push_back({0.4, 0.3, 1});
    cross.v.push_back({0.3, 0.4, 1});
    cross.t.push_back({6, 7, 8, 0});  // pierces triangle 0
    EXPECT(self_intersection_ratio(cross) == 2.0 / 3.0);
    TriMesh touching = clean;
    touching.v.push_back({0.3, 0.3, 0});  // vertex resting on triangle 0's plane
    touching.v.push_back({0.4, 0.3, 1});
    touching.v.push_back({0.3, 0.4, 1});
    touching.t.push_back({6, 7, 8, 0});
    EXPECT(self_intersection_ratio(touching) == 0.0);

    // F1 against an exhaustive matching oracle on small extrusion sets
    auto brute_f1 = [](const Program& pred, const Program& gt, double tol) {
        auto av = metricsdetail::extract_primitives(pred, PrimitiveKind::Extrusion);
        auto bv = metricsdetail::extract_primitives(gt, PrimitiveKind::Extrusion);
        if (av.empty() && bv.empty()) return 1.0;
        if (av.empty() || bv.empty()) return 0.0;
        size_t m = std::max(av.size(), bv.size());
        std::vector<int> perm(m);
        for (size_t i = 0; i < m; ++i) perm[i] = static_cast<int>(i);
        int best_tp = 0;
        do {
            int tp = 0;
            for (size_t i = 0; i < av.size(); ++i) {
                size_t j = perm[i];
                if (j >= bv.size() || av[i].size() != bv[j].size()) continue;
                if (metricsdetail::chebyshev(av[i], bv[j]) <= tol) ++tp;
            }
            best_tp = std::max(best_tp, tp);
        } while (std::next_permutation(perm.begin(), perm.end()));
        double prec = static_cast<double>(best_tp) / av.size();
        double rec = static_cast<double>(best_tp) / bv.size();
        return prec + rec == 0 ? 0.0 : 2 * prec * rec / (prec + rec);
    };
    CorpusSpec spec;
    spec.n_models = 8;
    spec.seed = 17;
    spec.blend_prob = 0.0;
    spec.exec.tess.segments = 24;
    for (int i = 0; i < spec.n_models; ++i) {
        Program gt = generate_program(spec, i);
        Program pred = gt;
        if (auto* ep = std::get_if<EPartStep>(&pred.steps[0]))
            ep->extrude.e_p += 0.05;  // push one extrusion outside a tight tol
        for (double tol : {1e-2, 1e-1}) {
            EXPECT(primitive_f1(pred, gt, PrimitiveKind::Extrusion, tol) ==
                   brute_f1(pred, gt, tol));
            EXPECT(primitive_f1(gt, gt, PrimitiveKind::Extrusion, tol) == 1.0);
        }
    }
    return true;
}

// ---------------------------------------------------------------------------
// 11. Fault-injection invalidity ratio
// ---------------------------------------------------------------------------

TokenStream delete_token(const TokenStream& s, size_t pos) {
    TokenStream out = s;
    out.tokens.erase(out.tokens.begin() + pos);
    out.pointer_payloads.clear();
    for (const auto& [p, ref] : s.pointer_payloads) {
        if (p == static_cast<int>(pos)) continue;
        out.pointer_payloads[p > static_cast<int>(pos) ? p - 1 : p] = ref;
    }
    return out;
}

bool c11_fault_injection() {
    CorpusSpec spec;
    spec.n_models = 100;
    spec.seed = 51;
    spec.exec.tess.segments = 24;
    QuantConfig cfg;
    cfg.q = 8;
    std::mt19937 rng(99);
    int n_built = 0;
    for (int i = 0; i < spec.n_models; ++i) {
        Program p = generate_program(spec, i);
        TokenStream s = encode(p, cfg);
        if (i % 4 == 0) {
            std::uniform_int_distribution<size_t> pick(0, s.tokens.size() - 1);
            s = delete_token(s, pick(rng));
        }
        // strict: a model counts as valid only if it decodes, validates, and
        // rebuilds with no post-processing
        try {
            Program back = decode(s);
            if (!validate(back).empty()) continue;
            execute_to_mesh(back, spec.exec);
            ++n_built;
        } catch (const Error&) {
        }
    }
    EXPECT(invalidity_ratio(spec.n_models, n_built) >= 0.25);
    return true;
}

}  // namespace

int main() {
    struct Entry {
        const char* name;
        std::function<bool()> fn;
    };
    std::vector<Solid> scratch;
    const Entry entries[] = {
        {"token-table conformance", c1_token_table},
        {"codec round trip (1000 programs, q in {4,8,12})", c2_round_trip},
        {"quantization-error trend (200-model corpus)", c3_quant_trend},
        {"kernel analytic volumes", c4_analytic_volumes},
        {"watertightness (50 kernel outputs)", c5_watertight},
        {"boolean voxel oracle (30 axis-aligned programs)", c6_boolean_oracle},
        {"pointer resolution (500 solids)", [&] { return c7_pointer_resolution(scratch); }},
        {"loss and gradient suite", c8_losses},
        {"gnn and attention fixtures", c9_gnn_fixtures},
        {"metric oracles", c10_metric_oracles},
        {"fault-injection invalidity ratio", c11_fault_injection},
    };
    int failures = 0;
    int idx = 0;
    for (const Entry& e : entries) {
        ++idx;
        g_why.str("");
        auto t0 = std::chrono::steady_clock::now();
        bool ok = false;
        std::string thrown;
        try {
            ok = e.fn();
        } catch (const std::exception& ex) {
            thrown = ex.what();
        }
        double secs =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        std::printf("[%2d] %-50s %s (%.1fs)\n", idx, e.name, ok ? "PASS" : "FAIL", secs);
        if (!ok) {
            ++failures;
            if (!thrown.empty()) std::printf("    threw: %s\n", thrown.c_str());
            std::fputs(g_why.str().c_str(), stdout);
        }
    }
    std::printf("%d/11 criteria passed\n", 11 - failures);
    return failures;
}
