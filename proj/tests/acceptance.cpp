// Acceptance suite: one [PASS]/[FAIL] line per criterion, exit status 1 if
// any criterion fails. Tolerances and time limits are pinned here.

#include "oracles.hpp"

#include <genbundle/cli.hpp>

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>

using namespace genbundle;

namespace {

constexpr double det_band = 1e-9;        // Möbius Gram determinant = 1 within
constexpr double overlap_limit = 1e-10;  // overlap residuals
constexpr double klein_det_floor = 0.99;
constexpr double identity_limit = 1e-12;  // J^2, F^2, G0 symmetry, S^3 Gram
constexpr double agreement_limit = 1e-10;  // frame-induced vs metric structure
constexpr std::size_t structure_points = 1000;
constexpr std::size_t inputs_per_point = 10;
constexpr std::size_t sphere_points = 10000;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

int failures = 0;

void report(int id, const std::string& title, bool ok, const std::string& detail) {
    if (!ok) ++failures;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << id << ". " << title << " -- " << detail << std::endl;
}

std::string fmt(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.3e", x);
    return buf;
}

std::string timing(double s, double limit) { return fmt(s) + " s (limit " + fmt(limit) + " s)"; }

void classification_table() {
    const auto t0 = Clock::now();
    const auto rows = classify_table(64);
    const std::set<std::size_t> expected = {1, 3, 7, 15, 31, 63};
    bool ok = rows.size() == 64;
    std::string zero;
    for (const auto& r : rows) {
        if (r.obstruction_trivial) zero += (zero.empty() ? "" : ",") + std::to_string(r.n);
        ok = ok && r.obstruction_trivial == (expected.count(r.n) == 1);
    }
    const double s = seconds_since(t0);
    report(1, "RP^n obstruction zero exactly for n+1 a power of two, n <= 64", ok && s < 1.0,
           "zero at n = {" + zero + "}, " + timing(s, 1.0));
}

void lucas_oracle() {
    const auto t0 = Clock::now();
    const auto pascal = oracle::pascal_mod2(512);
    std::size_t cases = 0, mismatches = 0;
    for (std::size_t n = 0; n <= 512; ++n)
        for (std::size_t k = 0; k <= n; ++k, ++cases)
            if (binom_mod2(n, k) != (pascal[n][k] == 1)) ++mismatches;
    const double s = seconds_since(t0);
    report(2, "binom_mod2 agrees with Pascal's triangle mod 2 for 0 <= k <= n <= 512",
           mismatches == 0 && s < 1.0,
           std::to_string(cases) + " cases, " + std::to_string(mismatches) + " mismatches, " + timing(s, 1.0));
}

double section_overlap_max(const std::vector<Section>& sections, const Atlas& atlas, std::size_t per_branch) {
    const auto samples = overlap_samples(atlas, per_branch, 1e-3);
    double worst = 0.0;
    for (const Section& s : sections) worst = std::max(worst, overlap_consistency(s, atlas, samples));
    return worst;
}

void mobius_trivialization() {
    const auto t0 = Clock::now();
    const SectionFrame fr = mobius_frame();
    double lo = std::numeric_limits<double>::infinity(), hi = -lo;
    std::size_t min_per_chart = SIZE_MAX;
    for (const Chart& c : fr.atlas().charts()) {
        const auto pts = sample_chart(fr.atlas(), SampleGrid{c.name, {100, 100}, 1e-3});
        min_per_chart = std::min(min_per_chart, pts.size());
        for (const auto& p : pts) {
            const double d = gram_det(fr, p).det;
            lo = std::min(lo, d);
            hi = std::max(hi, d);
        }
    }
    const BandFields f = mobius_fields();
    std::vector<Section> all = {f.X, f.Y, f.Z};
    all.insert(all.end(), fr.sections().begin(), fr.sections().end());
    const double overlap = section_overlap_max(all, fr.atlas(), 1000);
    const double s = seconds_since(t0);
    const bool ok = min_per_chart >= 10000 && std::abs(lo - 1.0) <= det_band && std::abs(hi - 1.0) <= det_band &&
                    overlap < overlap_limit && s < 5.0;
    report(3, "Möbius frame: Gram det = 1, sections agree on overlaps", ok,
           std::to_string(min_per_chart) + " points per chart, det in [" + fmt(lo) + ", " + fmt(hi) +
               "], overlap (X, Y, Z, w1..w4) " + fmt(overlap) + ", " + timing(s, 5.0));
}

void klein_trivialization() {
    const SectionFrame fr = klein_frame();
    SamplingConfig sampling;
    const auto pts = frame_samples(fr.atlas(), sampling, 0xC0FFEE);
    VerifyOptions opts;
    const VerifyReport r = verify_frame(fr, pts, opts);
    const BandFields f = band_fields(fr.atlas());
    const double fields_overlap = section_overlap_max({f.X, f.Y, f.Z}, fr.atlas(), 1000);
    const double overlap = std::max(r.max_overlap_residual, fields_overlap);
    report(4, "Klein bottle frame passes the same suite",
           r.pass && r.min_gram_det > klein_det_floor && overlap < overlap_limit,
           std::to_string(r.samples) + " points, min det " + fmt(r.min_gram_det) + ", overlap " + fmt(overlap));
}

struct IdentityStats {
    double square = 0.0;
    double symmetry = 0.0;
    bool ranks_ok = true;
};

IdentityStats metric_identities(const SectionFrame& fr, std::span<const ManifoldPoint> pts, std::uint64_t seed) {
    IdentityStats st;
    const std::size_t n = fr.atlas().dim();
    for (StructureKind kind : {StructureKind::complex, StructureKind::paracomplex}) {
        const GenEndomorphism K = structure_from_metric(fr.atlas_ptr(), *fr.metric(), kind);
        std::mt19937_64 rng(seed);
        for (const auto& p : pts)
            for (std::size_t i = 0; i < inputs_per_point; ++i)
                st.square = std::max(st.square, square_residual(K, random_gen_vector(fr.atlas(), p, rng)));
        st.symmetry = std::max(st.symmetry, g0_symmetry_residual(K, pts, inputs_per_point, seed + 1).symmetric);
        if (kind == StructureKind::paracomplex)
            for (const auto& p : pts) st.ranks_ok = st.ranks_ok && eigen_rank(K, p, 1) == n && eigen_rank(K, p, -1) == n;
    }
    return st;
}

void structure_identities() {
    const auto t0 = Clock::now();
    SamplingConfig sampling;
    sampling.sphere_points = structure_points;
    struct Case {
        SectionFrame frame;
        bool check_paracomplex_agreement;
    };
    const std::vector<Case> cases = {{mobius_frame(), false}, {klein_frame(), false},
                                     {sphere_frame(1), true}, {sphere_frame(3), true}};
    bool ok = true;
    std::ostringstream detail;
    std::string note;
    for (const Case& c : cases) {
        // 500 per circle chart gives the same 1000 points as a 2-D grid
        sampling.resolution = {c.frame.atlas().dim() == 1 ? 500u : 100u};
        const auto all = frame_samples(c.frame.atlas(), sampling, 0xC0FFEE);
        const auto pts = stride_subset(all, structure_points);
        const IdentityStats st = metric_identities(c.frame, pts, 0xC0FFEE + 17);
        bool frame_ok = pts.size() == structure_points && st.square < identity_limit && st.symmetry < identity_limit &&
                        st.ranks_ok;
        detail << c.frame.atlas().name() << ": sq " << fmt(st.square) << " sym " << fmt(st.symmetry)
               << (st.ranks_ok ? " rank ok" : " rank BAD");
        if (c.frame.provenance() != FrameProvenance::klein) {
            const FrameMetricAgreement a =
                frame_vs_metric_agreement(c.frame, *c.frame.metric(), pts, inputs_per_point, 0xC0FFEE + 19);
            frame_ok = frame_ok && a.complex < agreement_limit;
            detail << " J-agree " << fmt(a.complex);
            if (c.check_paracomplex_agreement) {
                frame_ok = frame_ok && a.paracomplex < agreement_limit;
                detail << " F-agree " << fmt(a.paracomplex);
            } else {
                note = fmt(a.paracomplex);
            }
        }
        detail << "; ";
        ok = ok && frame_ok;
    }
    const double s = seconds_since(t0);
    report(5, "metric J/F identities on Möbius, Klein, S^1, S^3; frame J agrees with metric J", ok && s < 10.0,
           detail.str() + timing(s, 10.0));
    std::cout << "       note: the Möbius frame's w3<->w4 swap is not the metric F; max difference " << note
              << " (expected 2|sin(pi u)| at d/dv)" << std::endl;
}

void s3_gram_identity() {
    const SectionFrame fr = sphere_frame(3);
    double worst = 0.0;
    const auto pts = sample_sphere(3, sphere_points, 0xC0FFEE);
    for (const auto& p : pts) {
        const Mat W = fr.matrix_at(p);
        worst = std::max(worst, (W.transpose() * W - Mat::Identity(6, 6)).cwiseAbs().maxCoeff());
    }
    report(6, "S^3 quaternionic frame is orthonormal", pts.size() == sphere_points && worst < identity_limit,
           std::to_string(pts.size()) + " points, max |Gram - I| " + fmt(worst));
}

void allard_predicate() {
    const auto t0 = Clock::now();
    std::size_t bad = 0;
    for (std::uint64_t n = 1; n <= 1000000; ++n)
        if (allard_min_copies(1, n + 1) != 2) ++bad;
    const double s = seconds_since(t0);
    report(7, "allard_min_copies(1, n+1) = 2 for 1 <= n <= 10^6", bad == 0 && s < 1.0,
           std::to_string(bad) + " exceptions, " + timing(s, 1.0));
}

void negative_controls() {
    const SectionFrame mob = mobius_frame();
    std::vector<Section> dup = mob.sections();
    dup[3] = dup[2];
    const SectionFrame bad("duplicated w3", mob.atlas_ptr(), dup, FrameProvenance::user);
    SamplingConfig sampling;
    sampling.resolution = {50};
    const VerifyReport r = verify_frame(bad, frame_samples(bad.atlas(), sampling, 1), VerifyOptions{});
    const bool det_zero = std::abs(r.min_gram_det) < 1e-14;
    const Orientation om = orientability_probe(mobius_atlas());
    const Orientation ok_ = orientability_probe(klein_atlas());
    const Orientation ot = orientability_probe(torus_atlas());
    const bool ok = det_zero && !r.pass && om == Orientation::nonorientable && ok_ == Orientation::nonorientable &&
                    ot == Orientation::orientable_evidence;
    report(8, "negative controls", ok,
           "duplicated section det " + fmt(r.min_gram_det) + (r.pass ? " report PASSES" : " report fails") +
               "; mobius " + to_string(om) + ", klein " + to_string(ok_) + ", torus " + to_string(ot));
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void determinism() {
    const auto dir = std::filesystem::temp_directory_path() / "genbundle-acceptance";
    std::filesystem::create_directories(dir);
    std::string outputs[2];
    int codes[2];
    for (int i = 0; i < 2; ++i) {
        const std::string path = (dir / ("verify_" + std::to_string(i) + ".json")).string();
        const char* argv[] = {"genbundle", "verify", "--out", path.c_str()};
        std::ostringstream out, err;
        codes[i] = run_cli(4, argv, out, err);
        outputs[i] = slurp(path);
    }
    const bool same = !outputs[0].empty() && outputs[0] == outputs[1];
    report(9, "two verify runs give byte-identical JSON", same && codes[0] == codes[1],
           std::to_string(outputs[0].size()) + " bytes, exit codes " + std::to_string(codes[0]) + "/" +
               std::to_string(codes[1]));
}

}  // namespace

int main() {
    const std::pair<int, void (*)()> criteria[] = {
        {1, classification_table}, {2, lucas_oracle},     {3, mobius_trivialization},
        {4, klein_trivialization}, {5, structure_identities}, {6, s3_gram_identity},
        {7, allard_predicate},     {8, negative_controls}, {9, determinism}};
    for (const auto& [id, run] : criteria) {
        try {
            run();
        } catch (const std::exception& e) {
            report(id, "criterion aborted", false, e.what());
        }
    }
    std::cout << (failures == 0 ? "all criteria pass" : std::to_string(failures) + " criteria fail") << std::endl;
    return failures == 0 ? 0 : 1;
}
