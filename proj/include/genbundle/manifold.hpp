#pragma once

// Chart-based and embedded presentations of manifolds, and the pointwise
// calculus on TM + T*M: transition maps, Jacobian transport, metrics,
// musical isomorphisms and the canonical pairing.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace genbundle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Chart name used for every point of an embedded-sphere atlas.
inline const std::string ambient_chart = "ambient";

/// Open interval (lower, upper).
struct Interval {
    double lower = 0.0;
    double upper = 0.0;

    bool contains(double x) const noexcept { return lower < x && x < upper; }
    bool empty() const noexcept { return !(lower < upper); }
    double width() const noexcept { return upper - lower; }
};

/// Open axis-aligned box.
struct Box {
    std::vector<Interval> axes;

    std::size_t dim() const noexcept { return axes.size(); }

    bool contains(const Vec& x) const noexcept {
        if (static_cast<std::size_t>(x.size()) != axes.size()) return false;
        for (std::size_t i = 0; i < axes.size(); ++i)
            if (!axes[i].contains(x[static_cast<Eigen::Index>(i)])) return false;
        return true;
    }

    bool empty() const noexcept {
        return axes.empty() || std::any_of(axes.begin(), axes.end(), [](const Interval& i) { return i.empty(); });
    }

    std::string to_string() const {
        std::ostringstream os;
        for (std::size_t i = 0; i < axes.size(); ++i) {
            if (i) os << " x ";
            os << '(' << axes[i].lower << ", " << axes[i].upper << ')';
        }
        return os.str();
    }
};

inline std::string format_coords(const Vec& x) {
    std::ostringstream os;
    os << '(';
    for (Eigen::Index i = 0; i < x.size(); ++i) os << (i ? ", " : "") << x[i];
    os << ')';
    return os.str();
}

/// Uniform grid over `box` shrunk by `margin` on every side, endpoints
/// included, last axis varying fastest.
inline std::vector<Vec> box_grid(const Box& box, const std::vector<std::size_t>& resolution, double margin) {
    if (resolution.size() != box.dim())
        throw std::invalid_argument("box_grid: resolution has " + std::to_string(resolution.size()) +
                                    " axes, box has " + std::to_string(box.dim()));
    if (!(margin > 0.0)) throw std::invalid_argument("box_grid: margin must be positive");
    std::vector<Interval> shrunk;
    for (std::size_t i = 0; i < box.dim(); ++i) {
        if (resolution[i] < 2) throw std::invalid_argument("box_grid: resolution must be >= 2 per axis");
        const Interval& a = box.axes[i];
        if (!(2.0 * margin < a.width()))
            throw std::domain_error("box_grid: margin " + std::to_string(margin) + " leaves axis " +
                                    std::to_string(i) + " of " + box.to_string() + " degenerate");
        shrunk.push_back({a.lower + margin, a.upper - margin});
    }
    std::size_t total = 1;
    for (std::size_t r : resolution) total *= r;
    std::vector<Vec> points;
    points.reserve(total);
    std::vector<std::size_t> idx(box.dim(), 0);
    for (std::size_t n = 0; n < total; ++n) {
        Vec p(static_cast<Eigen::Index>(box.dim()));
        for (std::size_t i = 0; i < box.dim(); ++i) {
            const double t = static_cast<double>(idx[i]) / static_cast<double>(resolution[i] - 1);
            p[static_cast<Eigen::Index>(i)] = shrunk[i].lower + (shrunk[i].upper - shrunk[i].lower) * t;
        }
        points.push_back(std::move(p));
        for (std::size_t i = box.dim(); i-- > 0;) {
            if (++idx[i] < resolution[i]) break;
            idx[i] = 0;
        }
    }
    return points;
}

struct Chart {
    std::string name;
    Box domain;

    std::size_t dim() const noexcept { return domain.dim(); }
};

/// One smooth piece of a transition map, defined on an open box of the
/// source chart's coordinates.
struct TransitionBranch {
    std::string from;
    std::string to;
    Box domain;
    std::function<Vec(const Vec&)> map;
    std::function<Mat(const Vec&)> jacobian;

    std::string label() const { return from + "->" + to + " on " + domain.to_string(); }
};

/// Branch x -> diag(signs) x + offset.
inline TransitionBranch affine_branch(std::string from, std::string to, Box domain, Vec signs, Vec offset) {
    const Mat jac = signs.asDiagonal();
    return TransitionBranch{std::move(from), std::move(to), std::move(domain),
                            [signs, offset](const Vec& x) -> Vec { return signs.cwiseProduct(x) + offset; },
                            [jac](const Vec&) -> Mat { return jac; }};
}

enum class Backend { charts, embedded_sphere };

class Atlas {
  public:
    static Atlas chart_based(std::string name, std::vector<Chart> charts, std::vector<TransitionBranch> branches) {
        if (charts.empty()) throw std::invalid_argument("atlas '" + name + "': no charts");
        Atlas a;
        a.name_ = std::move(name);
        a.backend_ = Backend::charts;
        a.dim_ = charts.front().dim();
        for (const Chart& c : charts) {
            if (c.dim() != a.dim_ || c.dim() < 1)
                throw std::invalid_argument("atlas '" + a.name_ + "': chart '" + c.name + "' has dimension " +
                                            std::to_string(c.dim()));
            if (c.domain.empty())
                throw std::invalid_argument("atlas '" + a.name_ + "': chart '" + c.name + "' has empty domain");
        }
        a.charts_ = std::move(charts);
        for (const TransitionBranch& b : branches) {
            const Chart& from = a.chart(b.from);
            a.chart(b.to);
            if (b.domain.dim() != a.dim_ || b.domain.empty())
                throw std::invalid_argument("atlas '" + a.name_ + "': bad branch domain " + b.label());
            for (std::size_t i = 0; i < a.dim_; ++i) {
                const Interval& d = b.domain.axes[i];
                const Interval& c = from.domain.axes[i];
                if (d.lower < c.lower || d.upper > c.upper)
                    throw std::invalid_argument("atlas '" + a.name_ + "': branch " + b.label() +
                                                " leaves its source chart");
            }
        }
        a.branches_ = std::move(branches);
        return a;
    }

    static Atlas embedded_sphere(std::size_t n) {
        if (n < 1) throw std::invalid_argument("embedded sphere: dimension must be >= 1");
        Atlas a;
        a.name_ = "sphere(" + std::to_string(n) + ")";
        a.backend_ = Backend::embedded_sphere;
        a.dim_ = n;
        return a;
    }

    const std::string& name() const noexcept { return name_; }
    Backend backend() const noexcept { return backend_; }
    std::size_t dim() const noexcept { return dim_; }

    /// Length of the component vectors of tangent vectors and covectors.
    std::size_t ambient_dim() const noexcept { return backend_ == Backend::charts ? dim_ : dim_ + 1; }

    const std::vector<Chart>& charts() const noexcept { return charts_; }
    const std::vector<TransitionBranch>& branches() const noexcept { return branches_; }

    std::vector<std::string> chart_names() const {
        if (backend_ == Backend::embedded_sphere) return {ambient_chart};
        std::vector<std::string> names;
        for (const Chart& c : charts_) names.push_back(c.name);
        return names;
    }

    bool has_chart(std::string_view name) const {
        if (backend_ == Backend::embedded_sphere) return name == ambient_chart;
        return std::any_of(charts_.begin(), charts_.end(), [&](const Chart& c) { return c.name == name; });
    }

    const Chart& chart(std::string_view name) const {
        for (const Chart& c : charts_)
            if (c.name == name) return c;
        throw std::invalid_argument("atlas '" + name_ + "': unknown chart '" + std::string(name) + "'");
    }

    /// Branch from `from` to `to` whose domain contains `coords`, if any.
    const TransitionBranch* find_branch(std::string_view from, std::string_view to, const Vec& coords) const {
        for (const TransitionBranch& b : branches_)
            if (b.from == from && b.to == to && b.domain.contains(coords)) return &b;
        return nullptr;
    }

  private:
    Atlas() = default;

    std::string name_;
    Backend backend_ = Backend::charts;
    std::size_t dim_ = 0;
    std::vector<Chart> charts_;
    std::vector<TransitionBranch> branches_;
};

using AtlasPtr = std::shared_ptr<const Atlas>;

struct ManifoldPoint {
    std::string chart;
    Vec coords;
};

/// Throws std::domain_error unless `p` is a valid point of `atlas`.
inline void validate_point(const Atlas& atlas, const ManifoldPoint& p) {
    if (atlas.backend() == Backend::embedded_sphere) {
        if (p.chart != ambient_chart || static_cast<std::size_t>(p.coords.size()) != atlas.ambient_dim() ||
            std::abs(p.coords.norm() - 1.0) > 1e-12)
            throw std::domain_error(atlas.name() + ": " + format_coords(p.coords) + " is not a unit vector in R^" +
                                    std::to_string(atlas.ambient_dim()));
        return;
    }
    if (!atlas.chart(p.chart).domain.contains(p.coords))
        throw std::domain_error(atlas.name() + ": " + format_coords(p.coords) + " lies outside chart '" + p.chart +
                                "'");
}

/// An element X + xi of the fiber of TM + T*M over `base`, in the chart basis
/// (d/dx^i, dx^i). Embedded backend: two ambient vectors orthogonal to the
/// base point, the covector identified through the round metric.
struct GenVector {
    ManifoldPoint base;
    Vec tangent;
    Vec covector;

    /// (tangent | covector) stacked.
    Vec block() const {
        Vec out(tangent.size() + covector.size());
        out << tangent, covector;
        return out;
    }

    GenVector& operator+=(const GenVector& o) {
        tangent += o.tangent;
        covector += o.covector;
        return *this;
    }

    friend GenVector operator+(GenVector a, const GenVector& b) { return a += b; }
    friend GenVector operator-(GenVector a, const GenVector& b) {
        a.tangent -= b.tangent;
        a.covector -= b.covector;
        return a;
    }
    friend GenVector operator*(double s, GenVector a) {
        a.tangent *= s;
        a.covector *= s;
        return a;
    }
};

inline GenVector make_gen_vector(ManifoldPoint base, Vec tangent, Vec covector) {
    return GenVector{std::move(base), std::move(tangent), std::move(covector)};
}

inline GenVector zero_gen_vector(const Atlas& atlas, ManifoldPoint base) {
    const auto n = static_cast<Eigen::Index>(atlas.ambient_dim());
    return GenVector{std::move(base), Vec::Zero(n), Vec::Zero(n)};
}

/// Orthonormal basis of T_pS^n as columns of an (n+1) x n matrix.
inline Mat sphere_tangent_basis(const Vec& p) {
    const Eigen::Index m = p.size();
    const Mat projector = Mat::Identity(m, m) - p * p.transpose();
    Eigen::JacobiSVD<Mat> svd(projector, Eigen::ComputeFullU);
    return svd.matrixU().leftCols(m - 1);
}

/// Basis of the fiber of TM + T*M at p as columns of a 2a x 2n matrix (a the
/// ambient dimension): the standard block basis for charts, an orthonormal
/// one for the embedded sphere.
inline Mat fiber_basis(const Atlas& atlas, const ManifoldPoint& p) {
    const auto n = static_cast<Eigen::Index>(atlas.dim());
    if (atlas.backend() == Backend::charts) return Mat::Identity(2 * n, 2 * n);
    const Mat t = sphere_tangent_basis(p.coords);
    const Eigen::Index a = t.rows();
    Mat b = Mat::Zero(2 * a, 2 * n);
    b.topLeftCorner(a, n) = t;
    b.bottomRightCorner(a, n) = t;
    return b;
}

/// Stacks a block vector back into a GenVector at `base`.
inline GenVector gen_vector_from_block(const Atlas& atlas, ManifoldPoint base, const Vec& block) {
    const auto a = static_cast<Eigen::Index>(atlas.ambient_dim());
    return GenVector{std::move(base), block.head(a), block.tail(a)};
}

// ---------------------------------------------------------------------------
// Transitions

inline const TransitionBranch& branch_for(const Atlas& atlas, const std::string& from, const std::string& to,
                                          const Vec& coords) {
    if (atlas.backend() != Backend::charts)
        throw std::invalid_argument(atlas.name() + ": embedded backend has no transition maps");
    atlas.chart(from);
    atlas.chart(to);
    const TransitionBranch* b = atlas.find_branch(from, to, coords);
    if (b == nullptr) {
        std::string known;
        for (const TransitionBranch& br : atlas.branches())
            if (br.from == from && br.to == to) known += (known.empty() ? "" : "; ") + br.domain.to_string();
        throw std::domain_error(atlas.name() + ": point " + format_coords(coords) + " of chart '" + from +
                                "' lies outside every " + from + "->" + to + " overlap branch [" + known + "]");
    }
    return *b;
}

inline Vec transition_apply(const Atlas& atlas, const std::string& from, const std::string& to, const Vec& coords) {
    if (from == to && atlas.backend() == Backend::charts) {
        validate_point(atlas, ManifoldPoint{from, coords});
        return coords;
    }
    return branch_for(atlas, from, to, coords).map(coords);
}

inline Mat jacobian(const Atlas& atlas, const std::string& from, const std::string& to, const Vec& coords) {
    if (from == to && atlas.backend() == Backend::charts) {
        validate_point(atlas, ManifoldPoint{from, coords});
        return Mat::Identity(coords.size(), coords.size());
    }
    return branch_for(atlas, from, to, coords).jacobian(coords);
}

inline ManifoldPoint change_chart(const Atlas& atlas, const ManifoldPoint& p, const std::string& to_chart) {
    if (p.chart == to_chart) return p;
    return ManifoldPoint{to_chart, transition_apply(atlas, p.chart, to_chart, p.coords)};
}

/// Re-expresses v in `to_chart`: tangent by J, covector by J^-T.
inline GenVector transport(const Atlas& atlas, const GenVector& v, const std::string& to_chart) {
    if (v.base.chart == to_chart) return v;
    const Mat J = jacobian(atlas, v.base.chart, to_chart, v.base.coords);
    const Eigen::PartialPivLU<Mat> lu(J.transpose());
    return GenVector{ManifoldPoint{to_chart, transition_apply(atlas, v.base.chart, to_chart, v.base.coords)},
                     J * v.tangent, lu.solve(v.covector)};
}

// ---------------------------------------------------------------------------
// Metrics

class Metric {
  public:
    using MatrixFn = std::function<Mat(const Vec&)>;

    Metric() = default;
    Metric(std::string name, std::map<std::string, MatrixFn> per_chart)
        : name_(std::move(name)), per_chart_(std::move(per_chart)) {}

    const std::string& name() const noexcept { return name_; }
    bool defined_on(const std::string& chart) const { return per_chart_.count(chart) != 0; }

    Mat at(const std::string& chart, const Vec& coords) const {
        auto it = per_chart_.find(chart);
        if (it == per_chart_.end())
            throw std::invalid_argument("metric '" + name_ + "' is not defined on chart '" + chart + "'");
        return it->second(coords);
    }

    Mat at(const ManifoldPoint& p) const { return at(p.chart, p.coords); }

  private:
    std::string name_;
    std::map<std::string, MatrixFn> per_chart_;
};

/// Euclidean metric in every chart; the round metric on the embedded sphere
/// (identity on ambient components).
inline Metric flat_metric(const Atlas& atlas) {
    const auto a = static_cast<Eigen::Index>(atlas.ambient_dim());
    std::map<std::string, Metric::MatrixFn> fns;
    for (const std::string& c : atlas.chart_names()) fns[c] = [a](const Vec&) -> Mat { return Mat::Identity(a, a); };
    return Metric(atlas.backend() == Backend::charts ? "flat" : "round", std::move(fns));
}

inline Vec flat(const Metric& g, const ManifoldPoint& p, const Vec& X) {
    const Mat G = g.at(p);
    if (G.cols() != X.size()) throw std::invalid_argument("flat: vector/metric dimension mismatch");
    return G * X;
}

inline Vec sharp(const Metric& g, const ManifoldPoint& p, const Vec& xi) {
    const Mat G = g.at(p);
    if (G.cols() != xi.size()) throw std::invalid_argument("sharp: covector/metric dimension mismatch");
    const Eigen::LDLT<Mat> ldlt(G);
    if (ldlt.info() != Eigen::Success || !ldlt.isPositive())
        throw std::domain_error("sharp: metric '" + g.name() + "' is not positive definite at " +
                                format_coords(p.coords));
    return ldlt.solve(xi);
}

inline bool same_point(const ManifoldPoint& a, const ManifoldPoint& b) {
    return a.chart == b.chart && a.coords.size() == b.coords.size() &&
           (a.coords - b.coords).norm() <= 1e-12 * (1.0 + a.coords.norm());
}

/// G0(X + xi, Y + eta) = (xi(Y) + eta(X)) / 2.
inline double canonical_pairing(const GenVector& e, const GenVector& f) {
    if (!same_point(e.base, f.base))
        throw std::invalid_argument("canonical_pairing: base points differ (" + e.base.chart +
                                    format_coords(e.base.coords) + " vs " + f.base.chart +
                                    format_coords(f.base.coords) + ")");
    return 0.5 * (e.covector.dot(f.tangent) + f.covector.dot(e.tangent));
}

/// Points sampled inside every transition branch, `per_branch` at most.
inline std::vector<std::pair<const TransitionBranch*, Vec>> overlap_samples(const Atlas& atlas,
                                                                            std::size_t per_branch,
                                                                            double margin) {
    std::vector<std::pair<const TransitionBranch*, Vec>> out;
    if (atlas.backend() != Backend::charts) return out;
    const auto dim = atlas.dim();
    const auto side = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::ceil(std::pow(static_cast<double>(per_branch), 1.0 / static_cast<double>(dim)) - 1e-9)));
    for (const TransitionBranch& b : atlas.branches()) {
        double m = margin;
        for (const Interval& i : b.domain.axes) m = std::min(m, 0.25 * i.width());
        for (Vec& x : box_grid(b.domain, std::vector<std::size_t>(dim, side), m)) out.emplace_back(&b, std::move(x));
    }
    return out;
}

/// max over overlap samples of |G_to - J^-T G_from J^-1| (Frobenius norm).
inline double metric_compatibility_check(const Atlas& atlas, const Metric& g, std::size_t per_branch = 1000,
                                         double margin = 1e-3) {
    double worst = 0.0;
    for (const auto& [branch, x] : overlap_samples(atlas, per_branch, margin)) {
        const Mat J = branch->jacobian(x);
        const Mat Jinv = J.inverse();
        const Mat pulled = Jinv.transpose() * g.at(branch->from, x) * Jinv;
        worst = std::max(worst, (g.at(branch->to, branch->map(x)) - pulled).norm());
    }
    return worst;
}

enum class Orientation { orientable_evidence, nonorientable };

inline const char* to_string(Orientation o) noexcept {
    return o == Orientation::nonorientable ? "nonorientable" : "orientable-evidence";
}

/// Looks for charts signs s_c with sign det J = s_from * s_to on every branch;
/// a contradiction around a cycle of overlaps proves non-orientability.
inline Orientation orientability_probe(const Atlas& atlas, std::size_t samples_per_axis = 5) {
    if (atlas.backend() != Backend::charts)
        throw std::invalid_argument("orientability_probe: unsupported for the embedded backend");
    const auto& charts = atlas.charts();
    std::vector<std::size_t> parent(charts.size());
    std::vector<int> parity(charts.size(), 0);  // parity relative to parent
    std::iota(parent.begin(), parent.end(), std::size_t{0});
    auto index_of = [&](const std::string& name) {
        for (std::size_t i = 0; i < charts.size(); ++i)
            if (charts[i].name == name) return i;
        throw std::invalid_argument("orientability_probe: unknown chart '" + name + "'");
    };
    auto find = [&](std::size_t i) {
        int par = 0;
        while (parent[i] != i) {
            par ^= parity[i];
            i = parent[i];
        }
        return std::pair{i, par};
    };
    bool consistent = true;
    for (const TransitionBranch& b : atlas.branches()) {
        double m = 1e-3;
        for (const Interval& i : b.domain.axes) m = std::min(m, 0.25 * i.width());
        int sign = 0;
        for (const Vec& x : box_grid(b.domain, std::vector<std::size_t>(atlas.dim(), samples_per_axis), m)) {
            const double det = b.jacobian(x).determinant();
            const int s = det > 0 ? 1 : (det < 0 ? -1 : 0);
            if (s == 0 || (sign != 0 && s != sign))
                throw std::domain_error("orientability_probe: Jacobian determinant of branch " + b.label() +
                                        " vanishes or changes sign");
            sign = s;
        }
        const int edge = sign < 0 ? 1 : 0;
        auto [ra, pa] = find(index_of(b.from));
        auto [rb, pb] = find(index_of(b.to));
        if (ra == rb) {
            if ((pa ^ pb) != edge) consistent = false;
        } else {
            parent[ra] = rb;
            parity[ra] = pa ^ pb ^ edge;
        }
    }
    return consistent ? Orientation::orientable_evidence : Orientation::nonorientable;
}

// ---------------------------------------------------------------------------
// Sections

struct Components {
    Vec tangent;
    Vec covector;
};

/// A global section of TM + T*M given by closed-form components in each chart
/// it covers. Agreement on overlaps is checked numerically, not enforced.
class Section {
  public:
    using ComponentFn = std::function<Components(const Vec&)>;

    Section() = default;
    Section(std::string name, std::map<std::string, ComponentFn> per_chart)
        : name_(std::move(name)), per_chart_(std::move(per_chart)) {}

    const std::string& name() const noexcept { return name_; }
    bool covers(const std::string& chart) const { return per_chart_.count(chart) != 0; }

    GenVector at(const ManifoldPoint& p) const {
        auto it = per_chart_.find(p.chart);
        if (it == per_chart_.end())
            throw std::out_of_range("section '" + name_ + "' has no expression on chart '" + p.chart + "'");
        Components c = it->second(p.coords);
        return GenVector{p, std::move(c.tangent), std::move(c.covector)};
    }

  private:
    std::string name_;
    std::map<std::string, ComponentFn> per_chart_;
};

/// A vector field (zero covector part) from per-chart tangent components.
inline Section vector_field(std::string name, const std::vector<std::string>& charts,
                            std::function<Vec(const Vec&)> tangent) {
    std::map<std::string, Section::ComponentFn> fns;
    for (const std::string& c : charts)
        fns[c] = [tangent](const Vec& x) -> Components {
            Vec t = tangent(x);
            return {t, Vec::Zero(t.size())};
        };
    return Section(std::move(name), std::move(fns));
}

// ---------------------------------------------------------------------------
// Built-in atlases

namespace detail {

struct FiberChart {
    std::string suffix;
    Interval range;
};

/// [0,1] x fiber with (u + 1, t) ~ (u, sign * t); u-charts x = (0,1) and
/// y = (-1/2,1/2). `period` > 0 makes the fiber a circle of that length.
inline Atlas band_atlas(std::string name, bool twisted, const std::vector<FiberChart>& fiber, double period) {
    struct UBranch {
        std::string from, to;
        Interval u;
        double shift;
        bool wraps;
    };
    const std::vector<UBranch> ubranches = {
        {"x", "y", {0.0, 0.5}, 0.0, false}, {"x", "y", {0.5, 1.0}, -1.0, true},
        {"y", "x", {0.0, 0.5}, 0.0, false}, {"y", "x", {-0.5, 0.0}, 1.0, true},
        {"x", "x", {0.0, 1.0}, 0.0, false}, {"y", "y", {-0.5, 0.5}, 0.0, false},
    };
    const std::map<std::string, Interval> uchart = {{"x", {0.0, 1.0}}, {"y", {-0.5, 0.5}}};

    std::vector<Chart> charts;
    for (const auto& [uc, ur] : uchart)
        for (const FiberChart& f : fiber) charts.push_back(Chart{uc + f.suffix, Box{{ur, f.range}}});

    std::vector<TransitionBranch> branches;
    const int kmax = period > 0.0 ? 2 : 0;
    for (const UBranch& ub : ubranches) {
        const double s = (ub.wraps && twisted) ? -1.0 : 1.0;
        for (const FiberChart& fa : fiber) {
            for (const FiberChart& fb : fiber) {
                if (ub.from == ub.to && fa.suffix == fb.suffix) continue;
                for (int k = -kmax; k <= kmax; ++k) {
                    const double t = k * period;
                    // preimage of fb.range under w -> s w + t
                    Interval pre = s > 0 ? Interval{fb.range.lower - t, fb.range.upper - t}
                                         : Interval{t - fb.range.upper, t - fb.range.lower};
                    Interval dom{std::max(pre.lower, fa.range.lower), std::min(pre.upper, fa.range.upper)};
                    if (dom.empty()) continue;
                    Vec signs(2), offset(2);
                    signs << 1.0, s;
                    offset << ub.shift, t;
                    branches.push_back(
                        affine_branch(ub.from + fa.suffix, ub.to + fb.suffix, Box{{ub.u, dom}}, signs, offset));
                }
            }
        }
    }
    return Atlas::chart_based(std::move(name), std::move(charts), std::move(branches));
}

inline Atlas circle_atlas() {
    constexpr double pi = std::numbers::pi;
    std::vector<Chart> charts = {Chart{"a", Box{{{0.0, 2 * pi}}}}, Chart{"b", Box{{{-pi, pi}}}}};
    auto branch = [](const char* from, const char* to, Interval dom, double shift) {
        return affine_branch(from, to, Box{{dom}}, Vec::Ones(1), Vec::Constant(1, shift));
    };
    std::vector<TransitionBranch> branches = {
        branch("a", "b", {0.0, pi}, 0.0), branch("a", "b", {pi, 2 * pi}, -2 * pi),
        branch("b", "a", {0.0, pi}, 0.0), branch("b", "a", {-pi, 0.0}, 2 * pi)};
    return Atlas::chart_based("circle", std::move(charts), std::move(branches));
}

}  // namespace detail

/// Möbius strip R x (-1,1) / (u, v) ~ (u + 1, -v) with charts x (0<u<1) and
/// y (-1/2<u<1/2).
inline Atlas mobius_atlas() { return detail::band_atlas("mobius", true, {{"", {-1.0, 1.0}}}, 0.0); }

/// Klein bottle in coordinates (u, theta), theta = pi v an angle on the
/// v-circle, (u + 1, theta) ~ (u, -theta). Charts xa, xb, ya, yb pair the
/// Möbius u-charts with theta in (-pi, pi) and (0, 2pi).
inline Atlas klein_atlas() {
    constexpr double pi = std::numbers::pi;
    return detail::band_atlas("klein", true, {{"a", {-pi, pi}}, {"b", {0.0, 2 * pi}}}, 2 * pi);
}

/// Flat torus with the same chart layout as the Klein bottle but untwisted.
inline Atlas torus_atlas() {
    constexpr double pi = std::numbers::pi;
    return detail::band_atlas("torus", false, {{"a", {-pi, pi}}, {"b", {0.0, 2 * pi}}}, 2 * pi);
}

inline Atlas circle_atlas() { return detail::circle_atlas(); }

/// "mobius", "klein", "circle", "torus", or "sphere(n)".
inline Atlas builtin_atlas(std::string_view name) {
    if (name == "mobius") return mobius_atlas();
    if (name == "klein") return klein_atlas();
    if (name == "circle") return circle_atlas();
    if (name == "torus") return torus_atlas();
    if (name.starts_with("sphere(") && name.ends_with(")")) {
        const std::string digits(name.substr(7, name.size() - 8));
        if (!digits.empty() && std::all_of(digits.begin(), digits.end(), [](char c) { return c >= '0' && c <= '9'; }) &&
            digits.size() < 6)
            return Atlas::embedded_sphere(static_cast<std::size_t>(std::stoul(digits)));
    }
    throw std::invalid_argument("unknown atlas '" + std::string(name) + "'");
}

}  // namespace genbundle
