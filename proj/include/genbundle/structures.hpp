#pragma once

// Explicit global frames of TM + T*M and the generalized structures they (or
// a metric) induce.

#include "genbundle/manifold.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace genbundle {

enum class FrameProvenance { parallelizable, mobius, klein, sphere_explicit, user };

inline const char* to_string(FrameProvenance p) noexcept {
    switch (p) {
        case FrameProvenance::parallelizable: return "parallelizable";
        case FrameProvenance::mobius: return "mobius";
        case FrameProvenance::klein: return "klein";
        case FrameProvenance::sphere_explicit: return "sphere-explicit";
        case FrameProvenance::user: return "user";
    }
    return "?";
}

/// Ordered list of 2n global sections of TM + T*M over an n-dimensional atlas.
class SectionFrame {
  public:
    SectionFrame(std::string name, AtlasPtr atlas, std::vector<Section> sections, FrameProvenance provenance,
                 std::optional<Metric> metric = std::nullopt)
        : name_(std::move(name)),
          atlas_(std::move(atlas)),
          sections_(std::move(sections)),
          provenance_(provenance),
          metric_(std::move(metric)) {
        if (!atlas_) throw std::invalid_argument("frame '" + name_ + "': null atlas");
        if (sections_.size() != 2 * atlas_->dim())
            throw std::invalid_argument("frame '" + name_ + "': " + std::to_string(sections_.size()) +
                                        " sections for a " + std::to_string(atlas_->dim()) +
                                        "-dimensional atlas, expected " + std::to_string(2 * atlas_->dim()));
    }

    const std::string& name() const noexcept { return name_; }
    const Atlas& atlas() const noexcept { return *atlas_; }
    const AtlasPtr& atlas_ptr() const noexcept { return atlas_; }
    const std::vector<Section>& sections() const noexcept { return sections_; }
    FrameProvenance provenance() const noexcept { return provenance_; }
    /// Metric the frame was built with, if any.
    const std::optional<Metric>& metric() const noexcept { return metric_; }

    /// Section values at p as columns (tangent | covector) of a 2a x 2n matrix.
    Mat matrix_at(const ManifoldPoint& p) const {
        const auto a = static_cast<Eigen::Index>(atlas_->ambient_dim());
        Mat W(2 * a, static_cast<Eigen::Index>(sections_.size()));
        for (std::size_t j = 0; j < sections_.size(); ++j) W.col(static_cast<Eigen::Index>(j)) = sections_[j].at(p).block();
        return W;
    }

  private:
    std::string name_;
    AtlasPtr atlas_;
    std::vector<Section> sections_;
    FrameProvenance provenance_;
    std::optional<Metric> metric_;
};

// ---------------------------------------------------------------------------
// Frames

/// The section flat_g X of a vector field X.
inline Section flat_of(const Atlas& atlas, const Section& field, const Metric& g) {
    std::map<std::string, Section::ComponentFn> fns;
    for (const std::string& c : atlas.chart_names()) {
        if (!field.covers(c)) continue;
        fns[c] = [field, g, c](const Vec& x) -> Components {
            const ManifoldPoint p{c, x};
            const GenVector v = field.at(p);
            return {Vec::Zero(v.tangent.size()), flat(g, p, v.tangent)};
        };
    }
    return Section("flat(" + field.name() + ")", std::move(fns));
}

/// X^1, flat X^1, ..., X^n, flat X^n from n pointwise independent fields.
inline SectionFrame parallelizable_frame(AtlasPtr atlas, const std::vector<Section>& fields, const Metric& g,
                                         std::string name = "parallelizable") {
    if (!atlas) throw std::invalid_argument("parallelizable_frame: null atlas");
    if (fields.size() != atlas->dim())
        throw std::invalid_argument("parallelizable_frame: " + std::to_string(fields.size()) + " fields for a " +
                                    std::to_string(atlas->dim()) + "-dimensional manifold");
    std::vector<Section> sections;
    for (const Section& X : fields) {
        sections.push_back(X);
        sections.push_back(flat_of(*atlas, X, g));
    }
    return SectionFrame(std::move(name), std::move(atlas), std::move(sections), FrameProvenance::parallelizable, g);
}

struct BandFields {
    Section X;
    Section Y;
    Section Z;
};

/// X = d/du, Y = cos(pi u) d/dv, Z = sin(pi u) d/dv in every chart of a
/// Möbius-type atlas (same formula in both u-charts: cos and sin of pi(u-1)
/// change sign exactly as d/dv does across the twisted gluing).
inline BandFields band_fields(const Atlas& atlas) {
    if (atlas.backend() != Backend::charts || atlas.dim() != 2)
        throw std::invalid_argument("band_fields: need a two-dimensional chart atlas, got '" + atlas.name() + "'");
    const auto charts = atlas.chart_names();
    constexpr double pi = std::numbers::pi;
    return BandFields{
        vector_field("X", charts, [](const Vec&) -> Vec { return Vec::Unit(2, 0); }),
        vector_field("Y", charts, [](const Vec& x) -> Vec { return std::cos(pi * x[0]) * Vec::Unit(2, 1); }),
        vector_field("Z", charts, [](const Vec& x) -> Vec { return std::sin(pi * x[0]) * Vec::Unit(2, 1); }),
    };
}

inline BandFields mobius_fields() { return band_fields(mobius_atlas()); }

namespace detail {

inline SectionFrame band_frame(AtlasPtr atlas, const Metric& g, FrameProvenance provenance, std::string name) {
    const double residual = metric_compatibility_check(*atlas, g);
    if (!(residual <= 1e-10))
        throw std::domain_error("frame '" + name + "': metric '" + g.name() + "' is not well defined on " +
                                atlas->name() + " (overlap residual " + std::to_string(residual) + ")");
    const BandFields f = band_fields(*atlas);
    std::map<std::string, Section::ComponentFn> w3, w4;
    for (const std::string& c : atlas->chart_names()) {
        // w3 = Y - flat Z, w4 = Z + flat Y
        w3[c] = [f, g, c](const Vec& x) -> Components {
            const ManifoldPoint p{c, x};
            return {f.Y.at(p).tangent, -flat(g, p, f.Z.at(p).tangent)};
        };
        w4[c] = [f, g, c](const Vec& x) -> Components {
            const ManifoldPoint p{c, x};
            return {f.Z.at(p).tangent, flat(g, p, f.Y.at(p).tangent)};
        };
    }
    std::vector<Section> sections = {f.X, flat_of(*atlas, f.X, g), Section("Y - flat(Z)", std::move(w3)),
                                     Section("Z + flat(Y)", std::move(w4))};
    return SectionFrame(std::move(name), std::move(atlas), std::move(sections), provenance, g);
}

}  // namespace detail

/// (w1, w2, w3, w4) = (X, flat X, Y - flat Z, Z + flat Y) on the Möbius strip.
inline SectionFrame mobius_frame(const Metric& g) {
    return detail::band_frame(std::make_shared<const Atlas>(mobius_atlas()), g, FrameProvenance::mobius, "mobius:eq4");
}

inline SectionFrame mobius_frame() { return mobius_frame(flat_metric(mobius_atlas())); }

/// The Möbius formulas on the Klein bottle atlas; they involve only u, so they
/// descend through the theta gluing.
inline SectionFrame klein_frame(const Metric& g) {
    return detail::band_frame(std::make_shared<const Atlas>(klein_atlas()), g, FrameProvenance::klein,
                              "klein:analogous");
}

inline SectionFrame klein_frame() { return klein_frame(flat_metric(klein_atlas())); }

/// Left multiplication of p = a + bi + cj + dk by i, j, k (Hamilton's table).
inline Mat quaternion_left_fields(const Vec& p) {
    const double a = p[0], b = p[1], c = p[2], d = p[3];
    Mat m(4, 3);
    m.col(0) << -b, a, -d, c;
    m.col(1) << -c, d, a, -b;
    m.col(2) << -d, -c, b, a;
    return m;
}

/// Explicit parallelizable frames: S^1 as (d/dtheta, dtheta) on the circle
/// atlas, S^3 from left quaternion multiplication with the round metric.
inline SectionFrame sphere_frame(std::size_t n) {
    if (n == 1) {
        auto atlas = std::make_shared<const Atlas>(circle_atlas());
        std::vector<Section> fields = {
            vector_field("d/dtheta", atlas->chart_names(), [](const Vec&) -> Vec { return Vec::Ones(1); })};
        SectionFrame f = parallelizable_frame(atlas, fields, flat_metric(*atlas), "s1:parallel");
        return SectionFrame(f.name(), f.atlas_ptr(), f.sections(), FrameProvenance::sphere_explicit, f.metric());
    }
    if (n == 3) {
        auto atlas = std::make_shared<const Atlas>(Atlas::embedded_sphere(3));
        std::vector<Section> fields;
        const char* names[] = {"ip", "jp", "kp"};
        for (int i = 0; i < 3; ++i)
            fields.push_back(vector_field(names[i], {ambient_chart},
                                          [i](const Vec& p) -> Vec { return quaternion_left_fields(p).col(i); }));
        SectionFrame f = parallelizable_frame(atlas, fields, flat_metric(*atlas), "s3:quaternion");
        return SectionFrame(f.name(), f.atlas_ptr(), f.sections(), FrameProvenance::sphere_explicit, f.metric());
    }
    throw std::invalid_argument("sphere_frame: explicit frames exist here only for n = 1 and n = 3, not n = " +
                                std::to_string(n));
}

// ---------------------------------------------------------------------------
// Generalized structures

enum class StructureKind { complex, paracomplex };
enum class StructureSource { from_metric, from_frame };

/// Pointwise bundle endomorphism of TM + T*M.
class GenEndomorphism {
  public:
    using Rule = std::function<GenVector(const GenVector&)>;

    GenEndomorphism(std::string name, StructureKind kind, StructureSource source, AtlasPtr atlas, Rule rule)
        : name_(std::move(name)), kind_(kind), source_(source), atlas_(std::move(atlas)), rule_(std::move(rule)) {}

    const std::string& name() const noexcept { return name_; }
    StructureKind kind() const noexcept { return kind_; }
    StructureSource source() const noexcept { return source_; }
    const Atlas& atlas() const noexcept { return *atlas_; }

    GenVector operator()(const GenVector& e) const { return rule_(e); }

    /// Matrix of the endomorphism at p in the fiber basis (2n x 2n).
    Mat matrix_at(const ManifoldPoint& p) const {
        const Mat B = fiber_basis(*atlas_, p);
        Mat M(B.cols(), B.cols());
        for (Eigen::Index j = 0; j < B.cols(); ++j)
            M.col(j) = B.transpose() * (*this)(gen_vector_from_block(*atlas_, p, B.col(j))).block();
        return M;
    }

  private:
    std::string name_;
    StructureKind kind_;
    StructureSource source_;
    AtlasPtr atlas_;
    Rule rule_;
};

/// J(X + xi) = -sharp(xi) + flat(X); F(X + xi) = sharp(xi) + flat(X).
inline GenEndomorphism structure_from_metric(AtlasPtr atlas, const Metric& g, StructureKind kind) {
    const double sign = kind == StructureKind::complex ? -1.0 : 1.0;
    std::string name = std::string("metric:") + (kind == StructureKind::complex ? "J" : "F");
    return GenEndomorphism(std::move(name), kind, StructureSource::from_metric, std::move(atlas),
                           [g, sign](const GenVector& e) -> GenVector {
                               return GenVector{e.base, sign * sharp(g, e.base, e.covector), flat(g, e.base, e.tangent)};
                           });
}

/// Reciprocal condition number below which a frame counts as singular.
inline constexpr double frame_rcond_threshold = 1e-10;

/// J(w^(2i-1)) = w^(2i), J(w^(2i)) = -w^(2i-1); F the same without the sign.
inline GenEndomorphism structure_from_frame(const SectionFrame& frame, StructureKind kind) {
    const double sign = kind == StructureKind::complex ? -1.0 : 1.0;
    std::string name = std::string("frame:") + (kind == StructureKind::complex ? "J" : "F");
    AtlasPtr atlas = frame.atlas_ptr();
    return GenEndomorphism(
        std::move(name), kind, StructureSource::from_frame, atlas, [frame, atlas, sign](const GenVector& e) -> GenVector {
            const Mat W = frame.matrix_at(e.base);
            const Mat B = fiber_basis(*atlas, e.base);
            const Eigen::PartialPivLU<Mat> lu(B.transpose() * W);
            // Eigen's estimate is unreliable once a pivot is exactly zero, so
            // the pivot ratio of U bounds it as well.
            const Vec pivots = lu.matrixLU().diagonal().cwiseAbs();
            const double pivot_ratio = pivots.maxCoeff() > 0.0 ? pivots.minCoeff() / pivots.maxCoeff() : 0.0;
            const double rcond = std::min(lu.rcond(), pivot_ratio);
            if (!(rcond >= frame_rcond_threshold))
                throw std::domain_error("frame '" + frame.name() + "' is singular at " + e.base.chart +
                                        format_coords(e.base.coords) + " (rcond " + std::to_string(rcond) + ")");
            const Vec c = lu.solve(B.transpose() * e.block());
            Vec image(c.size());
            for (Eigen::Index i = 0; i + 1 < c.size(); i += 2) {
                image[i + 1] = c[i];
                image[i] = sign * c[i + 1];
            }
            return gen_vector_from_block(*atlas, e.base, W * image);
        });
}

/// Dimension of the eigenvalue-(+1 or -1) eigenspace of a paracomplex
/// structure at p, from the rank of F -+ Id.
inline std::size_t eigen_rank(const GenEndomorphism& F, const ManifoldPoint& p, int eigenvalue) {
    if (F.kind() != StructureKind::paracomplex)
        throw std::invalid_argument("eigen_rank: '" + F.name() + "' is not a paracomplex structure");
    if (eigenvalue != 1 && eigenvalue != -1) throw std::invalid_argument("eigen_rank: eigenvalue must be +1 or -1");
    const Mat M = F.matrix_at(p) - static_cast<double>(eigenvalue) * Mat::Identity(2 * F.atlas().dim(), 2 * F.atlas().dim());
    const Eigen::JacobiSVD<Mat> svd(M);
    const Vec s = svd.singularValues();
    const double threshold = 1e-8 * std::max(1.0, s.size() ? s[0] : 0.0);
    std::size_t rank = 0;
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > threshold) ++rank;
    return static_cast<std::size_t>(M.cols()) - rank;
}

/// Uniform random element of the fiber over p (entries in [-1, 1], projected
/// onto the tangent space for the embedded sphere).
inline GenVector random_gen_vector(const Atlas& atlas, const ManifoldPoint& p, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> unit(-1.0, 1.0);
    const auto a = static_cast<Eigen::Index>(atlas.ambient_dim());
    Vec t(a), c(a);
    for (Eigen::Index i = 0; i < a; ++i) t[i] = unit(rng);
    for (Eigen::Index i = 0; i < a; ++i) c[i] = unit(rng);
    if (atlas.backend() == Backend::embedded_sphere) {
        t -= p.coords * p.coords.dot(t);
        c -= p.coords * p.coords.dot(c);
    }
    return GenVector{p, t, c};
}

/// |K^2 e + e| for complex, |K^2 e - e| for paracomplex.
inline double square_residual(const GenEndomorphism& K, const GenVector& e) {
    const GenVector kk = K(K(e));
    const Vec target = K.kind() == StructureKind::complex ? Vec(-e.block()) : e.block();
    return (kk.block() - target).norm();
}

struct PairingResiduals {
    double symmetric = 0.0;  ///< |G0(Ke, f) - G0(e, Kf)|
    double skew = 0.0;       ///< |G0(Ke, f) + G0(e, Kf)|
};

inline PairingResiduals g0_residuals(const GenEndomorphism& K, const GenVector& e, const GenVector& f) {
    const double lhs = canonical_pairing(K(e), f);
    const double rhs = canonical_pairing(e, K(f));
    return {std::abs(lhs - rhs), std::abs(lhs + rhs)};
}

/// Maxima of the G0 residuals over `points` and `inputs_per_point` random
/// pairs (e, f) each.
inline PairingResiduals g0_symmetry_residual(const GenEndomorphism& K, std::span<const ManifoldPoint> points,
                                             std::size_t inputs_per_point, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    PairingResiduals worst;
    for (const ManifoldPoint& p : points) {
        for (std::size_t i = 0; i < inputs_per_point; ++i) {
            const GenVector e = random_gen_vector(K.atlas(), p, rng);
            const GenVector f = random_gen_vector(K.atlas(), p, rng);
            const PairingResiduals r = g0_residuals(K, e, f);
            worst.symmetric = std::max(worst.symmetric, r.symmetric);
            worst.skew = std::max(worst.skew, r.skew);
        }
    }
    return worst;
}

struct FrameMetricAgreement {
    double complex = 0.0;      ///< max |J_frame(e) - J_metric(e)|
    double paracomplex = 0.0;  ///< max |F_frame(e) - F_metric(e)|

    double of(StructureKind kind) const noexcept { return kind == StructureKind::complex ? complex : paracomplex; }
    double max() const noexcept { return std::max(complex, paracomplex); }
};

/// Compares the frame-induced structures with the metric ones on random
/// inputs at every sample point.
inline FrameMetricAgreement frame_vs_metric_agreement(const SectionFrame& frame, const Metric& g,
                                                      std::span<const ManifoldPoint> points,
                                                      std::size_t inputs_per_point, std::uint64_t seed) {
    FrameMetricAgreement out;
    for (StructureKind kind : {StructureKind::complex, StructureKind::paracomplex}) {
        std::mt19937_64 rng(seed);
        const GenEndomorphism from_frame = structure_from_frame(frame, kind);
        const GenEndomorphism from_metric = structure_from_metric(frame.atlas_ptr(), g, kind);
        double worst = 0.0;
        for (const ManifoldPoint& p : points) {
            for (std::size_t i = 0; i < inputs_per_point; ++i) {
                const GenVector e = random_gen_vector(frame.atlas(), p, rng);
                worst = std::max(worst, (from_frame(e).block() - from_metric(e).block()).norm());
            }
        }
        (kind == StructureKind::complex ? out.complex : out.paracomplex) = worst;
    }
    return out;
}

}  // namespace genbundle
