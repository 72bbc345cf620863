#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "pointercad/corpus.hpp"
#include "pointercad/io.hpp"
#include "test_util.hpp"

using namespace pcad;
namespace fs = std::filesystem;

namespace {

fs::path work_dir() {
    fs::path d = fs::temp_directory_path() / "pcad_harness";
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in);
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

#ifdef POINTERCAD_CLI_PATH
int run_cli(const std::string& args) {
    std::string cmd = std::string(POINTERCAD_CLI_PATH) + " " + args + " >/dev/null 2>&1";
    int rc = std::system(cmd.c_str());
    return WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
}
#endif

}  // namespace

TEST_CASE("program json round trip preserves the AST") {
    CorpusSpec spec;
    spec.n_models = 6;
    spec.seed = 5;
    spec.exec.tess.segments = 24;
    for (int i = 0; i < spec.n_models; ++i) {
        Program p = generate_program(spec, i);
        Json j = program_to_json(p);
        Program q = program_from_json(j);
        CHECK(program_to_json(q) == j);
        CHECK(validate(q).empty());
    }
}

TEST_CASE("program json round trip keeps snaps, pointers, and blends") {
    CorpusSpec spec;
    spec.n_models = 30;
    spec.seed = 2;
    spec.snap_prob = 1.0;
    spec.blend_prob = 0.5;
    spec.exec.tess.segments = 24;
    bool saw_snap = false, saw_blend = false;
    for (int i = 0; i < spec.n_models; ++i) {
        Program p = generate_program(spec, i);
        Program q = program_from_json(program_to_json(p));
        for (size_t s = 0; s < p.steps.size(); ++s) {
            CHECK(p.steps[s].index() == q.steps[s].index());
            if (!std::holds_alternative<EPartStep>(p.steps[s])) saw_blend = true;
        }
        for (const Step& st : q.steps)
            if (const auto* ep = std::get_if<EPartStep>(&st))
                for (const Sketch& sk : ep->sketches)
                    for (const Profile& pr : sk.profiles)
                        for (const Loop& lp : pr.loops)
                            for (const Curve& c : lp.curves)
                                if (const auto* l = std::get_if<LineCurve>(&c))
                                    if (l->start.snap) saw_snap = true;
        CHECK(program_to_json(p) == program_to_json(q));
    }
    CHECK(saw_snap);
    CHECK(saw_blend);
}

TEST_CASE("token stream json round trip is bit exact") {
    QuantConfig cfg;
    cfg.q = 8;
    Program p = pcad::testing::box_program();
    TokenStream s = encode(p, cfg);
    TokenStream t = stream_from_json(stream_to_json(s));
    CHECK(t.cfg.q == s.cfg.q);
    CHECK(t.tokens == s.tokens);
    CHECK(t.pointer_payloads == s.pointer_payloads);

    std::vector<EulerFrame> frames;
    for (const Frame& f : execute_program(p).sketch_frames) frames.push_back(frame_to_euler(f));
    LegacyStream l = encode_legacy_with_frames(p, cfg, frames);
    LegacyStream m = legacy_from_json(legacy_to_json(l));
    CHECK(m.tokens == l.tokens);
    CHECK(m.cfg.q == l.cfg.q);
}

TEST_CASE("malformed stream json is rejected as a format error") {
    QuantConfig cfg;
    TokenStream s = encode(pcad::testing::box_program(), cfg);
    Json j = stream_to_json(s);
    Json missing = j;
    missing.erase("tokens");
    CHECK_THROWS_AS(stream_from_json(missing), FormatError);
    Json wrong_pos = j;
    wrong_pos["pointers"][0]["pos"] = 0;  // token 0 is not a pointer slot
    CHECK_THROWS_AS(stream_from_json(wrong_pos), FormatError);
    CHECK_THROWS_AS(program_from_json(Json{{"steps", {{{"type", "warp"}}}}}), FormatError);
}

TEST_CASE("obj round trip and stl layout") {
    TriMesh m = execute_to_mesh(pcad::testing::box_program());
    std::stringstream obj;
    write_obj(m, obj);
    TriMesh r = read_obj(obj);
    REQUIRE(r.v.size() == m.v.size());
    REQUIRE(r.t.size() == m.t.size());
    for (size_t i = 0; i < m.v.size(); ++i) CHECK((r.v[i] - m.v[i]).norm() == 0.0);

    std::stringstream stl;
    write_stl(m, stl);
    std::string bytes = stl.str();
    REQUIRE(bytes.size() == 80 + 4 + 50 * m.t.size());
    uint32_t count;
    std::memcpy(&count, bytes.data() + 80, 4);
    CHECK(count == m.t.size());
}

TEST_CASE("brep dump lists faces, edges, and adjacency") {
    ExecResult res = execute_program(pcad::testing::box_program());
    Json j = brep_to_json(res.final_solid());
    CHECK(j.at("faces").size() == 6);
    CHECK(j.at("edges").size() == 12);
    CHECK(j.at("graph").size() == 12);
    for (const Json& f : j.at("faces")) CHECK(f.at("surface").at("type") == "plane");
    for (const Json& e : j.at("edges")) {
        CHECK(e.at("curve").at("type") == "line");
        CHECK(e.at("faces").size() == 2);
    }
}

TEST_CASE("csv formatting uses 6 significant digits and stable order") {
    CHECK(fmt6(0.123456789) == "0.123457");
    CHECK(fmt6(12345678.0) == "1.23457e+07");
    CHECK(fmt6(1.0) == "1");
    CHECK(fmt6(std::numeric_limits<double>::quiet_NaN()) == "nan");
    std::string t = csv_table({"a", "b"}, {{"1", "2"}, {"x", "y"}});
    CHECK(t == "a,b\n1,2\nx,y\n");
}

#ifdef POINTERCAD_CLI_PATH

TEST_CASE("cli build maps failures onto the documented exit codes") {
    fs::path d = work_dir();
    Program box = pcad::testing::box_program();
    write_json_file((d / "box.json").string(), program_to_json(box));
    QuantConfig cfg;
    TokenStream s = encode(box, cfg);
    write_json_file((d / "box_stream.json").string(), stream_to_json(s));

    Json trunc = stream_to_json(s);
    trunc["tokens"].erase(trunc["tokens"].size() - 1);
    write_json_file((d / "trunc.json").string(), trunc);

    Json bad = program_to_json(box);
    bad["steps"][0]["e_p"] = -1.0;
    bad["steps"][0]["e_n"] = 0.0;
    write_json_file((d / "bad_gram.json").string(), bad);

    Json stale = program_to_json(box);
    stale["steps"][0]["sketches"][0]["plane"] = {
        {"step_index", 0}, {"kind", "face"}, {"stable_id", 99}};
    write_json_file((d / "stale.json").string(), stale);

    std::string stl = (d / "out.stl").string();
    CHECK(run_cli("build " + (d / "box.json").string() + " --stl " + stl) == 0);
    CHECK(fs::file_size(stl) == 80 + 4 + 50 * 12);
    CHECK(run_cli("build " + (d / "box_stream.json").string()) == 0);
    CHECK(run_cli("build " + (d / "trunc.json").string()) == 2);
    CHECK(run_cli("build " + (d / "missing.json").string()) == 2);
    CHECK(run_cli("build " + (d / "bad_gram.json").string()) == 3);
    CHECK(run_cli("build " + (d / "stale.json").string()) == 5);
}

TEST_CASE("cli encode/decode round trip through files") {
    fs::path d = work_dir();
    Program box = pcad::testing::box_program();
    write_json_file((d / "rt_in.json").string(), program_to_json(box));
    REQUIRE(run_cli("--q 10 encode " + (d / "rt_in.json").string() + " -o " +
                    (d / "rt_stream.json").string()) == 0);
    REQUIRE(run_cli("decode " + (d / "rt_stream.json").string() + " -o " +
                    (d / "rt_out.json").string()) == 0);
    Program out = program_from_json(read_json_file((d / "rt_out.json").string()));
    CHECK(validate(out).empty());
    QuantConfig cfg;
    cfg.q = 10;
    // the decoded program re-encodes to the identical stream
    CHECK(encode(out, cfg).tokens == encode(box, cfg).tokens);
}

TEST_CASE("cli gen-corpus is byte-reproducible from the seed") {
    fs::path a = work_dir() / "corp_a", b = work_dir() / "corp_b";
    fs::remove_all(a);
    fs::remove_all(b);
    std::string flags = " --n-models 4 --tess-segments 24";
    REQUIRE(run_cli("--seed 9 gen-corpus " + a.string() + flags) == 0);
    REQUIRE(run_cli("--seed 9 gen-corpus " + b.string() + flags) == 0);
    REQUIRE(fs::exists(a / "manifest.json"));
    for (const char* f : {"manifest.json", "model_000.json", "model_000.obj", "model_003.obj"})
        CHECK(slurp(a / f) == slurp(b / f));
    fs::path c = work_dir() / "corp_c";
    fs::remove_all(c);
    REQUIRE(run_cli("--seed 10 gen-corpus " + c.string() + flags) == 0);
    CHECK(slurp(a / "model_000.json") != slurp(c / "model_000.json"));
}

TEST_CASE("cli quant-study and metrics emit the stable csv shapes") {
    fs::path d = work_dir();
    fs::path corp = d / "corp_a";  // written by the gen-corpus test
    if (!fs::exists(corp / "manifest.json"))
        REQUIRE(run_cli("--seed 9 gen-corpus " + corp.string() +
                        " --n-models 4 --tess-segments 24") == 0);

    fs::path csv = d / "study.csv";
    REQUIRE(run_cli("--seed 9 --tess-segments 24 quant-study " + corp.string() +
                    " --q-values 4,8 --n-samples 1024 -o " + csv.string()) == 0);
    std::istringstream is(slurp(csv));
    std::string line;
    REQUIRE(std::getline(is, line));
    CHECK(line == "model,q,pointer_ok,legacy_ok,cd_pointer,cd_legacy");
    int medians = 0, rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        if (line.rfind("median,", 0) == 0) ++medians;
    }
    CHECK(medians == 2);
    CHECK(rows >= medians + 2);

    fs::path mcsv = d / "metrics.csv";
    REQUIRE(run_cli("--tess-segments 24 metrics " + corp.string() + " " + corp.string() +
                    " --n-samples 1024 -o " + mcsv.string()) == 0);
    std::istringstream ms(slurp(mcsv));
    REQUIRE(std::getline(ms, line));
    CHECK(line == "model,built,cd,seg_error,flux_ee,dang_el,sir,f1_line,f1_extrusion");
    std::string last;
    while (std::getline(ms, line)) last = line;
    // identical directories: IR 0, CD 0, F1 1
    CHECK(last.rfind("aggregate,0,", 0) == 0);
    CHECK(last.substr(last.size() - 4) == ",1,1");
}

TEST_CASE("cli resolve ranks the query entity first") {
    fs::path d = work_dir();
    write_json_file((d / "res_box.json").string(),
                    program_to_json(pcad::testing::box_program()));
    fs::path csv = d / "resolve.csv";
    ExecResult res = execute_program(pcad::testing::box_program());
    int fid = res.final_solid().faces.front().id;
    REQUIRE(run_cli("resolve " + (d / "res_box.json").string() + " --kind face --id " +
                    std::to_string(fid) + " -o " + csv.string()) == 0);
    std::istringstream is(slurp(csv));
    std::string header, top;
    REQUIRE(std::getline(is, header));
    CHECK(header == "rank,kind,stable_id,class,cosine");
    REQUIRE(std::getline(is, top));
    CHECK(top.rfind("0,face," + std::to_string(fid) + ",", 0) == 0);
    CHECK(run_cli("resolve " + (d / "res_box.json").string() + " --kind face --id 99") == 5);
}

TEST_CASE("cli gradcheck passes its own tolerance") {
    CHECK(run_cli("gradcheck") == 0);
    CHECK(run_cli("--seed 123 gradcheck") == 0);
}

#endif  // POINTERCAD_CLI_PATH
