#pragma once

// Sampling-based certification of frames: pointwise independence through
// Gram determinants, overlap consistency of sections, and the structure
// identities, aggregated into reports.

#include "genbundle/manifold.hpp"
#include "genbundle/structures.hpp"

#include <Eigen/Dense>
#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace genbundle {

struct SampleGrid {
    std::string chart;
    std::vector<std::size_t> resolution;
    double margin = 1e-3;
};

/// Uniform grid over the chart domain shrunk by the margin.
inline std::vector<ManifoldPoint> sample_chart(const Atlas& atlas, const SampleGrid& grid) {
    if (atlas.backend() != Backend::charts)
        throw std::invalid_argument("sample_chart: '" + atlas.name() + "' has no coordinate charts");
    if (!(grid.margin > 0.0)) throw std::invalid_argument("sample_chart: margin must be positive");
    const Chart& chart = atlas.chart(grid.chart);
    std::vector<ManifoldPoint> out;
    for (Vec& x : box_grid(chart.domain, grid.resolution, grid.margin)) out.push_back(ManifoldPoint{chart.name, std::move(x)});
    return out;
}

/// `count` deterministic points on S^n: normalized Gaussian 4-vectors from a
/// seeded generator, rejecting near-zero draws.
inline std::vector<ManifoldPoint> sample_sphere(std::size_t n, std::size_t count, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<ManifoldPoint> out;
    out.reserve(count);
    while (out.size() < count) {
        Vec x(static_cast<Eigen::Index>(n + 1));
        for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = gauss(rng);
        const double r = x.norm();
        if (r < 1e-3) continue;
        out.push_back(ManifoldPoint{ambient_chart, x / r});
    }
    return out;
}

struct SamplingConfig {
    /// Per-axis grid resolution for every chart; a single entry is broadcast.
    std::vector<std::size_t> resolution = {100, 100};
    double margin = 1e-3;
    std::size_t overlap_points = 1000;
    std::size_t sphere_points = 10000;
    /// Points (evenly strided from the frame samples) used for structure checks.
    std::size_t structure_points = 1000;
    std::size_t inputs_per_point = 10;
};

inline std::vector<std::size_t> resolution_for(const SamplingConfig& s, std::size_t dim) {
    if (s.resolution.size() == 1) return std::vector<std::size_t>(dim, s.resolution.front());
    if (s.resolution.size() != dim)
        throw std::invalid_argument("sampling: resolution has " + std::to_string(s.resolution.size()) +
                                    " entries for a " + std::to_string(dim) + "-dimensional atlas");
    return s.resolution;
}

/// Grid points of every chart (or sphere points for the embedded backend).
inline std::vector<ManifoldPoint> frame_samples(const Atlas& atlas, const SamplingConfig& s, std::uint64_t seed) {
    if (atlas.backend() == Backend::embedded_sphere) return sample_sphere(atlas.dim(), s.sphere_points, seed);
    std::vector<ManifoldPoint> out;
    const auto res = resolution_for(s, atlas.dim());
    for (const Chart& c : atlas.charts()) {
        auto pts = sample_chart(atlas, SampleGrid{c.name, res, s.margin});
        out.insert(out.end(), std::make_move_iterator(pts.begin()), std::make_move_iterator(pts.end()));
    }
    return out;
}

struct GramResult {
    double det = 0.0;
    double rcond = 0.0;
};

/// Gram determinant of the frame values at p under the block inner product,
/// and the reciprocal condition number of the value matrix.
inline GramResult gram_det(const SectionFrame& frame, const ManifoldPoint& p) {
    const Mat W = frame.matrix_at(p);
    const Mat gram = W.transpose() * W;
    const Eigen::JacobiSVD<Mat> svd(W);
    const Vec s = svd.singularValues();
    const double smax = s.size() ? s[0] : 0.0;
    const double smin = s.size() ? s[s.size() - 1] : 0.0;
    return {gram.determinant(), smax > 0.0 ? smin / smax : 0.0};
}

/// max over overlap samples of |transport(value in chart A) - value in chart B|;
/// infinite when the section lacks an expression on a sampled chart.
inline double overlap_consistency(const Section& section, const Atlas& atlas,
                                  std::span<const std::pair<const TransitionBranch*, Vec>> samples) {
    double worst = 0.0;
    for (const auto& [branch, x] : samples) {
        if (!section.covers(branch->from) || !section.covers(branch->to))
            return std::numeric_limits<double>::infinity();
        const GenVector here = section.at(ManifoldPoint{branch->from, x});
        const GenVector moved = transport(atlas, here, branch->to);
        const GenVector there = section.at(moved.base);
        worst = std::max(worst, (moved.block() - there.block()).norm());
    }
    return worst;
}

inline double overlap_consistency(const Section& section, const Atlas& atlas, std::size_t per_branch = 1000,
                                  double margin = 1e-3) {
    const auto samples = overlap_samples(atlas, per_branch, margin);
    return overlap_consistency(section, atlas, samples);
}

struct Tolerances {
    double det = 1e-8;
    double rcond = 1e-10;
    double overlap = 1e-10;
    double op = 1e-10;
};

struct StructureCheck {
    std::string name;
    double square_residual = 0.0;
    double symmetry_residual = 0.0;
    double skew_residual = 0.0;
    std::optional<double> frame_metric_residual;
    /// Paracomplex only: extreme +1 / -1 eigenspace dimensions over samples.
    std::optional<std::size_t> min_plus_rank, max_plus_rank, min_minus_rank, max_minus_rank;
    bool pass = true;
};

struct PointRecord {
    std::string chart;
    Vec coords;
    double det = 0.0;
    double rcond = 0.0;
};

struct VerifyReport {
    std::string frame;
    std::string atlas;
    std::string provenance;
    std::size_t samples = 0;
    double min_gram_det = std::numeric_limits<double>::infinity();
    double min_rcond = std::numeric_limits<double>::infinity();
    double max_overlap_residual = 0.0;
    double max_identity_residual = 0.0;
    bool pass = false;
    std::uint64_t seed = 0;
    Tolerances tolerances;
    std::vector<std::pair<std::string, double>> section_overlap;
    std::vector<StructureCheck> structures;
    std::vector<PointRecord> points;
};

struct VerifyOptions {
    SamplingConfig sampling;
    Tolerances tolerances;
    std::uint64_t seed = 0xC0FFEE;
    /// Any of "metric:J", "metric:F", "frame:J", "frame:F".
    std::vector<std::string> structures;
    bool keep_points = false;
};

/// Evenly strided subset of at most `count` points.
inline std::vector<ManifoldPoint> stride_subset(std::span<const ManifoldPoint> points, std::size_t count) {
    if (points.size() <= count || count == 0) return {points.begin(), points.end()};
    std::vector<ManifoldPoint> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) out.push_back(points[i * points.size() / count]);
    return out;
}

/// Builds one of the named structures for the frame.
inline GenEndomorphism named_structure(const SectionFrame& frame, const std::string& name) {
    const Metric metric = frame.metric() ? *frame.metric() : flat_metric(frame.atlas());
    if (name == "metric:J") return structure_from_metric(frame.atlas_ptr(), metric, StructureKind::complex);
    if (name == "metric:F") return structure_from_metric(frame.atlas_ptr(), metric, StructureKind::paracomplex);
    if (name == "frame:J") return structure_from_frame(frame, StructureKind::complex);
    if (name == "frame:F") return structure_from_frame(frame, StructureKind::paracomplex);
    throw std::invalid_argument("unknown structure '" + name + "' (expected metric:J, metric:F, frame:J or frame:F)");
}

inline StructureCheck check_structure(const SectionFrame& frame, const std::string& name,
                                      std::span<const ManifoldPoint> points, std::size_t inputs_per_point,
                                      std::uint64_t seed, const Tolerances& tol) {
    const GenEndomorphism K = named_structure(frame, name);
    StructureCheck check;
    check.name = name;
    std::mt19937_64 rng(seed);
    for (const ManifoldPoint& p : points)
        for (std::size_t i = 0; i < inputs_per_point; ++i)
            check.square_residual = std::max(check.square_residual, square_residual(K, random_gen_vector(frame.atlas(), p, rng)));
    const PairingResiduals g0 = g0_symmetry_residual(K, points, inputs_per_point, seed + 1);
    check.symmetry_residual = g0.symmetric;
    check.skew_residual = g0.skew;
    check.pass = check.square_residual < tol.op;
    if (K.source() == StructureSource::from_metric) check.pass = check.pass && check.symmetry_residual < tol.op;
    if (K.kind() == StructureKind::paracomplex) {
        const std::size_t n = frame.atlas().dim();
        std::size_t lo_p = SIZE_MAX, hi_p = 0, lo_m = SIZE_MAX, hi_m = 0;
        for (const ManifoldPoint& p : points) {
            const std::size_t rp = eigen_rank(K, p, 1), rm = eigen_rank(K, p, -1);
            lo_p = std::min(lo_p, rp), hi_p = std::max(hi_p, rp);
            lo_m = std::min(lo_m, rm), hi_m = std::max(hi_m, rm);
        }
        if (!points.empty()) {
            check.min_plus_rank = lo_p, check.max_plus_rank = hi_p;
            check.min_minus_rank = lo_m, check.max_minus_rank = hi_m;
            check.pass = check.pass && lo_p == n && hi_p == n && lo_m == n && hi_m == n;
        }
    }
    if (K.source() == StructureSource::from_frame && frame.metric()) {
        check.frame_metric_residual =
            frame_vs_metric_agreement(frame, *frame.metric(), points, inputs_per_point, seed + 2).of(K.kind());
        check.pass = check.pass && *check.frame_metric_residual < tol.op;
    }
    return check;
}

/// Certifies one frame over explicit samples. Failures are reported, not thrown.
inline VerifyReport verify_frame(const SectionFrame& frame, std::span<const ManifoldPoint> samples,
                                 const VerifyOptions& options) {
    VerifyReport r;
    r.frame = frame.name();
    r.atlas = frame.atlas().name();
    r.provenance = to_string(frame.provenance());
    r.seed = options.seed;
    r.tolerances = options.tolerances;
    r.samples = samples.size();
    for (const ManifoldPoint& p : samples) {
        GramResult g;
        try {
            g = gram_det(frame, p);
        } catch (const std::exception&) {
            g = {0.0, 0.0};  // section undefined at p
        }
        r.min_gram_det = std::min(r.min_gram_det, g.det);
        r.min_rcond = std::min(r.min_rcond, g.rcond);
        if (options.keep_points) r.points.push_back(PointRecord{p.chart, p.coords, g.det, g.rcond});
    }
    if (samples.empty()) r.min_gram_det = r.min_rcond = 0.0;

    const auto overlaps = overlap_samples(frame.atlas(), options.sampling.overlap_points, options.sampling.margin);
    for (const Section& s : frame.sections()) {
        const double res = overlap_consistency(s, frame.atlas(), overlaps);
        r.section_overlap.emplace_back(s.name(), res);
        r.max_overlap_residual = std::max(r.max_overlap_residual, res);
    }

    bool structures_ok = true;
    if (!options.structures.empty()) {
        const auto subset = stride_subset(samples, options.sampling.structure_points);
        for (const std::string& name : options.structures) {
            StructureCheck c;
            try {
                c = check_structure(frame, name, subset, options.sampling.inputs_per_point, options.seed + 17,
                                    options.tolerances);
            } catch (const std::domain_error&) {
                c.name = name;
                c.square_residual = std::numeric_limits<double>::infinity();
                c.pass = false;
            }
            structures_ok = structures_ok && c.pass;
            const double symmetry = name.starts_with("metric:") ? c.symmetry_residual : 0.0;
            r.max_identity_residual = std::max(
                {r.max_identity_residual, c.square_residual, symmetry, c.frame_metric_residual.value_or(0.0)});
            r.structures.push_back(std::move(c));
        }
    }
    r.pass = r.min_gram_det > options.tolerances.det && r.min_rcond > options.tolerances.rcond &&
             r.max_overlap_residual < options.tolerances.overlap && structures_ok;
    return r;
}

// ---------------------------------------------------------------------------
// Serialization

namespace detail {
inline nlohmann::json json_real(double x) {
    if (std::isfinite(x)) return x;
    if (std::isnan(x)) return "nan";
    return x > 0 ? "inf" : "-inf";
}
}  // namespace detail

inline nlohmann::json to_json(const Tolerances& t) {
    return {{"det", t.det}, {"rcond", t.rcond}, {"overlap", t.overlap}, {"op", t.op}};
}

inline nlohmann::json to_json(const StructureCheck& c) {
    nlohmann::json j = {{"name", c.name},
                        {"square_residual", detail::json_real(c.square_residual)},
                        {"g0_symmetric_residual", detail::json_real(c.symmetry_residual)},
                        {"g0_skew_residual", detail::json_real(c.skew_residual)},
                        {"pass", c.pass}};
    if (c.frame_metric_residual) j["frame_vs_metric_residual"] = detail::json_real(*c.frame_metric_residual);
    if (c.min_plus_rank) {
        j["plus_eigen_rank"] = {{"min", *c.min_plus_rank}, {"max", *c.max_plus_rank}};
        j["minus_eigen_rank"] = {{"min", *c.min_minus_rank}, {"max", *c.max_minus_rank}};
    }
    return j;
}

inline nlohmann::json to_json(const VerifyReport& r) {
    nlohmann::json overlap = nlohmann::json::object();
    for (const auto& [name, res] : r.section_overlap) overlap[name] = detail::json_real(res);
    nlohmann::json structures = nlohmann::json::array();
    for (const StructureCheck& c : r.structures) structures.push_back(to_json(c));
    return {{"frame", r.frame},
            {"atlas", r.atlas},
            {"provenance", r.provenance},
            {"samples", r.samples},
            {"min_gram_det", detail::json_real(r.min_gram_det)},
            {"min_rcond", detail::json_real(r.min_rcond)},
            {"max_overlap_residual", detail::json_real(r.max_overlap_residual)},
            {"max_identity_residual", detail::json_real(r.max_identity_residual)},
            {"pass", r.pass},
            {"seed", r.seed},
            {"tolerances", to_json(r.tolerances)},
            {"section_overlap_residuals", overlap},
            {"structures", structures}};
}

inline nlohmann::json to_json(const std::vector<VerifyReport>& reports) {
    nlohmann::json arr = nlohmann::json::array();
    for (const VerifyReport& r : reports) arr.push_back(to_json(r));
    return arr;
}

/// Per-point Gram determinants: frame,chart,coords,gram_det,rcond with coords
/// joined by ';'.
inline void write_points_csv(std::ostream& os, const std::vector<VerifyReport>& reports) {
    os << "frame,chart,coords,gram_det,rcond\n";
    os.precision(17);
    for (const VerifyReport& r : reports) {
        for (const PointRecord& p : r.points) {
            os << r.frame << ',' << p.chart << ',';
            for (Eigen::Index i = 0; i < p.coords.size(); ++i) os << (i ? ";" : "") << p.coords[i];
            os << ',' << p.det << ',' << p.rcond << '\n';
        }
    }
}

}  // namespace genbundle
