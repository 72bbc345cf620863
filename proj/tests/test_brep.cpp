#include <catch2/catch_amalgamated.hpp>

#include "pointercad/kernel.hpp"
#include "test_util.hpp"

using namespace pcad;
using pcad::testing::box_program;
using pcad::testing::circle_sketch;
using pcad::testing::cylinder_program;

TEST_CASE("cube topology from tags") {
    Solid s = execute_program(box_program()).final_solid();
    REQUIRE(s.faces.size() == 6);
    REQUIRE(s.edges.size() == 12);
    CHECK(s.graph.size() == 12);
    for (const auto& f : s.faces) {
        CHECK(f.id >= kFirstFaceId);
        CHECK(is_plane(f.surface));
        CHECK(f.area == Catch::Approx(1.0));
    }
    for (const auto& e : s.edges) {
        CHECK(std::holds_alternative<Line3>(e.curve));
        CHECK(e.length == Catch::Approx(1.0));
        CHECK(e.f1 < e.f2);
        CHECK(s.face_by_id(e.f1) != nullptr);
        CHECK(s.face_by_id(e.f2) != nullptr);
    }
    // every face borders exactly 4 others
    std::map<int, int> deg;
    for (auto [a, b] : s.graph) {
        ++deg[a];
        ++deg[b];
    }
    for (const auto& f : s.faces) CHECK(deg[f.id] == 4);
}

TEST_CASE("face and edge ordering is deterministic") {
    Solid a = execute_program(box_program()).final_solid();
    Solid b = execute_program(box_program()).final_solid();
    REQUIRE(a.faces.size() == b.faces.size());
    for (size_t i = 0; i < a.faces.size(); ++i) {
        CHECK(a.faces[i].id == b.faces[i].id);
        CHECK((a.faces[i].centroid - b.faces[i].centroid).norm() < 1e-12);
    }
    REQUIRE(a.edges.size() == b.edges.size());
    for (size_t i = 0; i < a.edges.size(); ++i) CHECK(a.edges[i].id == b.edges[i].id);
}

TEST_CASE("cylinder topology and circle classification") {
    Solid s = execute_program(cylinder_program(0.5, 1.0)).final_solid();
    REQUIRE(s.faces.size() == 3);
    int planes = 0, cyls = 0;
    for (const auto& f : s.faces) {
        if (is_plane(f.surface)) ++planes;
        if (std::holds_alternative<CylinderSurface>(f.surface)) ++cyls;
    }
    CHECK(planes == 2);
    CHECK(cyls == 1);
    REQUIRE(s.edges.size() == 2);
    for (const auto& e : s.edges) {
        REQUIRE(std::holds_alternative<Circle3>(e.curve));
        const auto& ci = std::get<Circle3>(e.curve);
        CHECK(ci.radius == Catch::Approx(0.5).margin(1e-9));
        CHECK(std::abs(std::abs(ci.axis.z) - 1.0) < 1e-9);
        CHECK(e.closed);
    }
}

TEST_CASE("chain classification") {
    using brepdetail::classify_chain;
    SECTION("collinear chain is a line") {
        std::vector<Vec3> pts{{0, 0, 0}, {0.3, 0, 0}, {0.7, 0, 0}, {1, 0, 0}};
        EdgeCurve c = classify_chain(pts, false, 1e-9);
        REQUIRE(std::holds_alternative<Line3>(c));
        CHECK(std::get<Line3>(c).length() == Catch::Approx(1.0));
    }
    SECTION("circle points classify as a circle") {
        std::vector<Vec3> pts;
        for (int i = 0; i < 16; ++i) {
            double a = 2 * kPi * i / 16;
            pts.push_back({2 * std::cos(a), 2 * std::sin(a), 1.0});
        }
        EdgeCurve c = classify_chain(pts, true, 1e-9);
        REQUIRE(std::holds_alternative<Circle3>(c));
        CHECK(std::get<Circle3>(c).radius == Catch::Approx(2.0));
        CHECK((std::get<Circle3>(c).center - Vec3{0, 0, 1}).norm() < 1e-9);
    }
    SECTION("open circular chain is an arc") {
        std::vector<Vec3> pts;
        for (int i = 0; i <= 8; ++i) {
            double a = 0.5 * kPi * i / 8;
            pts.push_back({std::cos(a), std::sin(a), 0});
        }
        EdgeCurve c = classify_chain(pts, false, 1e-9);
        REQUIRE(std::holds_alternative<Arc3>(c));
        CHECK(std::get<Arc3>(c).sweep_rad == Catch::Approx(0.5 * kPi));
    }
    SECTION("irregular chain falls back to a polyline") {
        std::vector<Vec3> pts{{0, 0, 0}, {1, 0, 0}, {1, 1, 0.5}, {0, 2, 1}};
        EdgeCurve c = classify_chain(pts, false, 1e-9);
        CHECK(std::holds_alternative<PolyCurve>(c));
    }
}

TEST_CASE("sample_edge tensors") {
    Solid s = execute_program(box_program()).final_solid();
    const BrepEdge& e = s.edges.front();
    EdgeTensor t = sample_edge(s, e);
    REQUIRE(t.size() == 32u * 12u);
    const auto& ln = std::get<Line3>(e.curve);
    for (int i = 0; i < 32; ++i) {
        const double* px = &t[i * 12];
        // tangent is unit, reverse tangent is its negation
        Vec3 tan{px[3], px[4], px[5]};
        CHECK(tan.norm() == Catch::Approx(1.0));
        CHECK(px[6] == -px[3]);
        CHECK(px[7] == -px[4]);
        CHECK(px[8] == -px[5]);
        Vec3 d{px[9], px[10], px[11]};
        CHECK(d.norm() == Catch::Approx(ln.length()));
    }
    // endpoints hit the curve ends
    Vec3 first{t[0], t[1], t[2]};
    Vec3 last{t[31 * 12], t[31 * 12 + 1], t[31 * 12 + 2]};
    CHECK(((first - ln.p0).norm() < 1e-9 || (first - ln.p1).norm() < 1e-9));
    CHECK((last - first).norm() == Catch::Approx(ln.length()));
}

TEST_CASE("sample_edge on a circle") {
    Solid s = execute_program(cylinder_program(0.5, 1.0)).final_solid();
    const BrepEdge* rim = nullptr;
    for (const auto& e : s.edges)
        if (std::holds_alternative<Circle3>(e.curve)) rim = &e;
    REQUIRE(rim);
    EdgeTensor t = sample_edge(s, *rim);
    for (int i = 0; i < 32; ++i) {
        const double* px = &t[i * 12];
        Vec3 d{px[9], px[10], px[11]};
        CHECK(d.norm() == Catch::Approx(2 * kPi * 0.5));
        Vec3 p{px[0], px[1], px[2]};
        const auto& ci = std::get<Circle3>(rim->curve);
        CHECK((p - ci.center).norm() == Catch::Approx(0.5));
    }
}

TEST_CASE("sample_face on planar and curved faces") {
    Solid s = execute_program(cylinder_program(0.5, 1.0)).final_solid();
    const BrepFace* cap = nullptr;
    const BrepFace* wall = nullptr;
    for (const auto& f : s.faces) {
        if (is_plane(f.surface) && f.centroid.z > 0.5) cap = &f;
        if (std::holds_alternative<CylinderSurface>(f.surface)) wall = &f;
    }
    REQUIRE(cap);
    REQUIRE(wall);

    FaceTensor ct = sample_face(s, *cap);
    REQUIRE(ct.size() == 32u * 32u * 8u);
    int vis = 0;
    for (int i = 0; i < 32 * 32; ++i) {
        const double* px = &ct[i * 8];
        CHECK(px[6] == 0.0);  // K = 0 on a plane
        CHECK(std::abs(std::abs(px[5]) - 1.0) < 1e-9);
        vis += px[7] > 0.5;
    }
    // circular cap inside its oriented bbox: roughly pi/4 of samples visible
    CHECK(vis > 0.6 * 32 * 32);
    CHECK(vis < 32 * 32);

    FaceTensor wt = sample_face(s, *wall);
    for (int i = 0; i < 32 * 32; ++i) {
        const double* px = &wt[i * 8];
        CHECK(px[6] == 0.0);  // K = 0 on a cylinder
        Vec3 n{px[3], px[4], px[5]};
        CHECK(std::abs(n.z) < 1e-9);  // radial normals
        CHECK(n.norm() == Catch::Approx(1.0));
    }
}

TEST_CASE("visibility channel matches a point-in-region oracle") {
    Program p = box_program();
    EPartStep cut;
    cut.sketches.push_back(circle_sketch(0.5, 0.5, 0.25));
    cut.extrude = {1.5, 0.5, BoolOp::Cut};
    p.steps.emplace_back(cut);
    Solid s = execute_program(p).final_solid();

    const BrepFace* top = nullptr;
    for (const auto& f : s.faces) {
        const auto* pl = std::get_if<PlaneSurface>(&f.surface);
        if (pl && std::abs(f.centroid.z - 1.0) < 1e-6 && std::abs(pl->normal.z) > 0.9)
            top = &f;
    }
    REQUIRE(top);
    FaceTensor t = sample_face(s, *top);
    int mism = 0;
    for (int i = 0; i < 32 * 32; ++i) {
        const double* px = &t[i * 8];
        double dx = px[0] - 0.5, dy = px[1] - 0.5;
        double r = std::sqrt(dx * dx + dy * dy);
        bool inside_sq = px[0] >= -1e-9 && px[0] <= 1 + 1e-9 && px[1] >= -1e-9 &&
                         px[1] <= 1 + 1e-9;
        bool oracle = inside_sq && r > 0.25;
        bool vis = px[7] > 0.5;
        // allow disagreement near the hole boundary (tessellation width)
        if (vis != oracle && std::abs(r - 0.25) > 0.02) ++mism;
    }
    CHECK(mism == 0);
}

TEST_CASE("torus curvature on a rim fillet face") {
    Program p = cylinder_program(0.5, 1.0);
    Solid first = execute_program(p).final_solid();
    int rim_id = -1;
    for (const auto& e : first.edges) {
        const auto* ci = std::get_if<Circle3>(&e.curve);
        if (ci && std::abs(ci->center.z - 1.0) < 1e-9) rim_id = e.id;
    }
    REQUIRE(rim_id >= 0);
    p.steps.emplace_back(FilletStep{0.1, {{1, EntityRef::Kind::Edge, rim_id}}});
    Solid s = execute_program(p).final_solid();
    const BrepFace* blend = nullptr;
    for (const auto& f : s.faces)
        if (std::holds_alternative<TorusSurface>(f.surface)) blend = &f;
    REQUIRE(blend);
    const auto& to = std::get<TorusSurface>(blend->surface);
    CHECK(to.major_r == Catch::Approx(0.4));
    CHECK(to.minor_r == Catch::Approx(0.1));
    FaceTensor t = sample_face(s, *blend);
    int nonzero = 0;
    for (int i = 0; i < 32 * 32; ++i) {
        const double* px = &t[i * 8];
        // K = cos(phi) / (minor (major + minor cos(phi))) checked pointwise
        Vec3 pos{px[0], px[1], px[2]};
        double kk = gaussian_curvature(blend->surface, pos);
        CHECK(px[6] == Catch::Approx(kk).margin(1e-12));
        if (std::abs(px[6]) > 1e-6) ++nonzero;
    }
    CHECK(nonzero > 0);
}

TEST_CASE("base plane samples") {
    FaceTensor t = sample_base_plane(kBaseTop);
    REQUIRE(t.size() == 32u * 32u * 8u);
    for (int i = 0; i < 32 * 32; ++i) {
        const double* px = &t[i * 8];
        CHECK(px[2] == 0.0);
        CHECK(px[5] == 1.0);
        CHECK(px[7] == 1.0);
    }
    FaceTensor r = sample_base_plane(kBaseRight);
    for (int i = 0; i < 32 * 32; ++i) CHECK(r[i * 8] == 0.0);  // x = 0 plane
}

TEST_CASE("non-manifold soup is rejected by make_solid") {
    // two triangles sharing an edge with equal winding (duplicate directed edge)
    std::vector<SoupTri> soup{{{0, 0, 0}, {1, 0, 0}, {0, 1, 0}, 1},
                              {{0, 0, 0}, {1, 0, 0}, {0, 0, 1}, 1}};
    TriMesh m = weld(soup, 1e-12);
    CHECK_THROWS_AS(make_solid(m, {{1, PlaneSurface{{0, 0, 0}, {0, 0, 1}}}}),
                    NonManifoldResult);
}
