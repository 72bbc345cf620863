#pragma once

#include <atomic>
#include <thread>

#include "codec.hpp"
#include "corpus.hpp"
#include "metrics.hpp"

namespace pcad {

// Run fn(0..n-1) across `jobs` worker threads; work stealing by atomic index,
// so callers must write results into per-index slots to keep ordering.
inline void parallel_for(int n, int jobs, const std::function<void(int)>& fn) {
    jobs = std::max(1, std::min(jobs, n));
    if (jobs == 1) {
        for (int i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    for (int t = 0; t < jobs; ++t)
        pool.emplace_back([&] {
            for (int i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    for (auto& th : pool) th.join();
}

// Reconstruction-accuracy sweep over quantization widths: every model is
// round-tripped through both stream layouts at each q and compared against
// its unquantized build via chamfer distance. Models whose round trip fails
// to decode or rebuild stay in the table as invalid rows.
struct StudySpec {
    CorpusSpec corpus;
    std::vector<int> qs{4, 5, 6, 7, 8, 9, 10};
    int cd_samples = 8192;
    uint32_t cd_seed = 0;
    int jobs = 1;
    ExecOptions exec;
};

struct StudyRow {
    int model = 0;
    int q = 0;
    bool pointer_ok = false, legacy_ok = false;
    double cd_pointer = 0, cd_legacy = 0;  // NaN when the round trip failed
};

struct StudyCell {
    int q = 0;
    double median_pointer = 0, median_legacy = 0;
    int n_pointer = 0, n_legacy = 0;  // valid rows entering each median
};

struct StudyResult {
    int n_models = 0;      // corpus size before compatibility filtering
    int n_compatible = 0;  // extrude-only programs entering the comparison
    std::vector<StudyRow> rows;    // model-major, q-minor
    std::vector<StudyCell> cells;  // one per q
};

namespace studydetail {

inline bool legacy_compatible(const Program& p) {
    for (const Step& s : p.steps)
        if (!std::holds_alternative<EPartStep>(s)) return false;
    return true;
}

inline double median(std::vector<double> v) {
    if (v.empty()) return std::numeric_limits<double>::quiet_NaN();
    std::sort(v.begin(), v.end());
    size_t n = v.size();
    return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

}  // namespace studydetail

inline StudyResult run_quant_study(const StudySpec& spec,
                                   const std::vector<Program>& corpus) {
    std::vector<Program> progs;
    for (const Program& p : corpus)
        if (studydetail::legacy_compatible(p)) progs.push_back(p);

    StudyResult out;
    out.n_models = static_cast<int>(corpus.size());
    out.n_compatible = static_cast<int>(progs.size());

    double nan = std::numeric_limits<double>::quiet_NaN();
    std::vector<std::vector<StudyRow>> per(progs.size());
    parallel_for(static_cast<int>(progs.size()), spec.jobs, [&](int i) {
        TriMesh gt;
        std::vector<EulerFrame> frames;
        bool gt_ok = true;
        try {
            ExecResult res = execute_program(progs[i], spec.exec);
            gt = res.final_solid().mesh;
            for (const Frame& f : res.sketch_frames) frames.push_back(frame_to_euler(f));
        } catch (const Error&) {
            gt_ok = false;  // e.g. built under different tessellation settings
        }
        if (!gt_ok) {
            for (int q : spec.qs) {
                StudyRow row;
                row.model = i;
                row.q = q;
                row.cd_pointer = row.cd_legacy = nan;
                per[i].push_back(row);
            }
            return;
        }
        for (int q : spec.qs) {
            StudyRow row;
            row.model = i;
            row.q = q;
            row.cd_pointer = row.cd_legacy = nan;
            QuantConfig cfg;
            cfg.q = q;
            try {
                TriMesh m = execute_to_mesh(decode(encode(progs[i], cfg), cfg), spec.exec);
                row.cd_pointer = chamfer_distance(gt, m, spec.cd_samples, spec.cd_seed);
                row.pointer_ok = true;
            } catch (const Error&) {
            }
            try {
                TriMesh m = execute_to_mesh(
                    decode_legacy(encode_legacy_with_frames(progs[i], cfg, frames)),
                    spec.exec);
                row.cd_legacy = chamfer_distance(gt, m, spec.cd_samples, spec.cd_seed);
                row.legacy_ok = true;
            } catch (const Error&) {
            }
            per[i].push_back(row);
        }
    });
    for (const auto& rows : per)
        out.rows.insert(out.rows.end(), rows.begin(), rows.end());

    for (int q : spec.qs) {
        StudyCell cell;
        cell.q = q;
        std::vector<double> vp, vl;
        for (const StudyRow& r : out.rows) {
            if (r.q != q) continue;
            if (r.pointer_ok) vp.push_back(r.cd_pointer);
            if (r.legacy_ok) vl.push_back(r.cd_legacy);
        }
        cell.n_pointer = static_cast<int>(vp.size());
        cell.n_legacy = static_cast<int>(vl.size());
        cell.median_pointer = studydetail::median(std::move(vp));
        cell.median_legacy = studydetail::median(std::move(vl));
        out.cells.push_back(cell);
    }
    return out;
}

inline StudyResult run_quant_study(const StudySpec& spec) {
    return run_quant_study(spec, generate_corpus(spec.corpus));
}

}  // namespace pcad
