#pragma once

// Declarative verification suites: JSON config -> atlases, metrics and frames
// (built-in or expression-defined) -> reports.

#include "genbundle/expression.hpp"
#include "genbundle/manifold.hpp"
#include "genbundle/structures.hpp"
#include "genbundle/verify.hpp"

#include <json.hpp>

#include <cstdint>
#include <fstream>
#include <map>
#include <memory>
#include <sstream>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace genbundle {

class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SuiteConfig {
    std::uint64_t seed = 0xC0FFEE;
    Tolerances tolerances;
    SamplingConfig sampling;
    nlohmann::json atlases = nlohmann::json::object();
    nlohmann::json metrics = nlohmann::json::object();
    std::vector<nlohmann::json> frames;
};

namespace detail {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

inline void parse_sampling(const nlohmann::json& j, SamplingConfig& s) {
    if (!j.is_object()) throw ConfigError("config: 'sampling' must be an object");
    if (j.contains("resolution")) {
        const auto& r = j.at("resolution");
        if (r.is_number_integer()) {
            if (r.get<long long>() < 2) throw ConfigError("config: sampling resolution must be at least 2");
            s.resolution = {r.get<std::size_t>()};
        }
        else
            s.resolution = get_or<std::vector<std::size_t>>(j, "resolution", s.resolution);
        if (s.resolution.empty()) throw ConfigError("config: empty sampling resolution");
    }
    s.margin = get_or(j, "margin", s.margin);
    s.overlap_points = get_or(j, "overlap_points", s.overlap_points);
    s.sphere_points = get_or(j, "sphere_points", s.sphere_points);
    s.structure_points = get_or(j, "structure_points", s.structure_points);
    s.inputs_per_point = get_or(j, "inputs_per_point", s.inputs_per_point);
}

}  // namespace detail

inline SuiteConfig parse_suite_config(const nlohmann::json& j) {
    if (!j.is_object()) throw ConfigError("config: top level must be a JSON object");
    SuiteConfig c;
    c.seed = detail::get_or<std::uint64_t>(j, "seed", c.seed);
    if (j.contains("tolerances")) {
        const auto& t = j.at("tolerances");
        c.tolerances.det = detail::get_or(t, "det", c.tolerances.det);
        c.tolerances.rcond = detail::get_or(t, "rcond", c.tolerances.rcond);
        c.tolerances.overlap = detail::get_or(t, "overlap", c.tolerances.overlap);
        c.tolerances.op = detail::get_or(t, "op", c.tolerances.op);
    }
    if (j.contains("sampling")) detail::parse_sampling(j.at("sampling"), c.sampling);
    if (j.contains("atlases")) {
        if (!j.at("atlases").is_object()) throw ConfigError("config: 'atlases' must be an object");
        c.atlases = j.at("atlases");
    }
    if (j.contains("metrics")) {
        if (!j.at("metrics").is_object()) throw ConfigError("config: 'metrics' must be an object");
        c.metrics = j.at("metrics");
    }
    if (j.contains("frames")) {
        if (!j.at("frames").is_array()) throw ConfigError("config: 'frames' must be an array");
        for (const auto& f : j.at("frames")) {
            if (!f.is_object() || (!f.contains("frame") && !f.contains("sections")))
                throw ConfigError("config: every frame entry needs 'frame' (built-in name) or 'sections'");
            c.frames.push_back(f);
        }
    }
    return c;
}

inline SuiteConfig load_suite_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open '" + path + "'");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError("config: '" + path + "' is not valid JSON: " + e.what());
    }
    return parse_suite_config(j);
}

/// Resolves atlas, metric and frame names for one suite.
class Registry {
  public:
    explicit Registry(const SuiteConfig& config) : config_(config) {}

    struct NamedAtlas {
        AtlasPtr atlas;
        std::vector<std::string> coords;
    };

    const NamedAtlas& atlas(const std::string& name) {
        auto it = atlases_.find(name);
        if (it != atlases_.end()) return it->second;
        NamedAtlas a = config_.atlases.contains(name) ? user_atlas(name, config_.atlases.at(name)) : builtin(name);
        return atlases_.emplace(name, std::move(a)).first->second;
    }

    Metric metric(const std::string& name, const std::string& atlas_name) {
        const NamedAtlas& a = atlas(atlas_name);
        if (name == "flat" || name == "round") return flat_metric(*a.atlas);
        if (!config_.metrics.contains(name)) throw ConfigError("config: unknown metric '" + name + "'");
        const auto& decl = config_.metrics.at(name);
        if (decl.value("atlas", atlas_name) != atlas_name)
            throw ConfigError("config: metric '" + name + "' belongs to atlas '" + decl.value("atlas", "") +
                              "', not '" + atlas_name + "'");
        std::map<std::string, Metric::MatrixFn> fns;
        for (const auto& [chart, rows] : charts_of(decl, "metric '" + name + "'").items()) {
            require_chart(*a.atlas, chart, "metric '" + name + "'");
            fns[chart] = matrix_fn(rows, a.coords, a.atlas->ambient_dim(), a.atlas->ambient_dim(),
                                   "metric '" + name + "' on chart '" + chart + "'");
        }
        return Metric(name, std::move(fns));
    }

    /// Frame and requested structures for one "frames" entry.
    SectionFrame frame(const nlohmann::json& entry) {
        const std::string metric_name = entry.value("metric", "flat");
        if (entry.contains("frame")) {
            const std::string name = entry.at("frame").get<std::string>();
            if (name == "mobius:eq4") return mobius_frame(metric(metric_name, "mobius"));
            if (name == "klein:analogous") return klein_frame(metric(metric_name, "klein"));
            if (name == "s1:parallel") {
                if (metric_name == "flat") return sphere_frame(1);
                const auto& a = atlas("circle");
                const std::vector<Section> fields = {sphere_frame(1).sections().front()};
                return parallelizable_frame(a.atlas, fields, metric(metric_name, "circle"), name);
            }
            if (name == "s3:quaternion") {
                if (metric_name != "flat" && metric_name != "round")
                    throw ConfigError("config: s3:quaternion supports only the round metric");
                return sphere_frame(3);
            }
            if (name == "torus:parallel") {
                const auto& a = atlas("torus");
                const auto charts = a.atlas->chart_names();
                std::vector<Section> fields = {
                    vector_field("d/du", charts, [](const Vec&) -> Vec { return Vec::Unit(2, 0); }),
                    vector_field("d/dtheta", charts, [](const Vec&) -> Vec { return Vec::Unit(2, 1); })};
                return parallelizable_frame(a.atlas, fields, metric(metric_name, "torus"), name);
            }
            throw ConfigError("config: unknown frame '" + name + "'");
        }
        const std::string name = entry.value("name", "user");
        const std::string atlas_name = entry.value("atlas", "");
        if (atlas_name.empty()) throw ConfigError("config: frame '" + name + "' needs an 'atlas'");
        const NamedAtlas& a = atlas(atlas_name);
        std::vector<Section> sections;
        for (const auto& s : entry.at("sections")) sections.push_back(user_section(a, s));
        std::optional<Metric> g;
        if (entry.contains("metric")) g = metric(metric_name, atlas_name);
        try {
            return SectionFrame(name, a.atlas, std::move(sections), FrameProvenance::user, std::move(g));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

  private:
    static std::vector<std::string> default_coords(std::size_t n, const char* stem) {
        std::vector<std::string> out;
        for (std::size_t i = 1; i <= n; ++i) out.push_back(stem + std::to_string(i));
        return out;
    }

    static NamedAtlas builtin(const std::string& name) {
        AtlasPtr a;
        try {
            a = std::make_shared<const Atlas>(builtin_atlas(name));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
        if (name == "mobius") return {a, {"u", "v"}};
        if (name == "klein" || name == "torus") return {a, {"u", "theta"}};
        if (name == "circle") return {a, {"theta"}};
        return {a, default_coords(a->ambient_dim(), "p")};
    }

    static const nlohmann::json& charts_of(const nlohmann::json& decl, const std::string& what) {
        if (!decl.contains("charts") || !decl.at("charts").is_object())
            throw ConfigError("config: " + what + " needs a 'charts' object");
        return decl.at("charts");
    }

    static void require_chart(const Atlas& atlas, const std::string& chart, const std::string& what) {
        if (!atlas.has_chart(chart))
            throw ConfigError("config: " + what + " refers to unknown chart '" + chart + "' of atlas '" +
                              atlas.name() + "'");
    }

    static std::vector<Expression> expressions(const nlohmann::json& list, const std::vector<std::string>& vars,
                                               std::size_t expected, const std::string& what) {
        if (!list.is_array() || list.size() != expected)
            throw ConfigError("config: " + what + " needs " + std::to_string(expected) + " expressions");
        std::vector<Expression> out;
        for (const auto& e : list) {
            if (!e.is_string() && !e.is_number()) throw ConfigError("config: " + what + ": expressions are strings");
            const std::string text = e.is_string() ? e.get<std::string>() : e.dump();
            try {
                out.push_back(Expression::parse(text, vars));
            } catch (const ExpressionError& err) {
                throw ConfigError("config: " + what + ": " + err.what());
            }
        }
        return out;
    }

    static std::function<Vec(const Vec&)> vector_fn(const nlohmann::json& list, const std::vector<std::string>& vars,
                                                    std::size_t n, const std::string& what) {
        auto exprs = expressions(list, vars, n, what);
        return [exprs](const Vec& x) -> Vec {
            const std::span<const double> values(x.data(), static_cast<std::size_t>(x.size()));
            Vec out(static_cast<Eigen::Index>(exprs.size()));
            for (std::size_t i = 0; i < exprs.size(); ++i) out[static_cast<Eigen::Index>(i)] = exprs[i](values);
            return out;
        };
    }

    static std::function<Mat(const Vec&)> matrix_fn(const nlohmann::json& rows, const std::vector<std::string>& vars,
                                                    std::size_t r, std::size_t c, const std::string& what) {
        if (!rows.is_array() || rows.size() != r)
            throw ConfigError("config: " + what + " needs a " + std::to_string(r) + "x" + std::to_string(c) + " matrix");
        std::vector<std::vector<Expression>> m;
        for (const auto& row : rows) m.push_back(expressions(row, vars, c, what));
        return [m](const Vec& x) -> Mat {
            const std::span<const double> values(x.data(), static_cast<std::size_t>(x.size()));
            Mat out(static_cast<Eigen::Index>(m.size()), static_cast<Eigen::Index>(m.front().size()));
            for (std::size_t i = 0; i < m.size(); ++i)
                for (std::size_t j = 0; j < m[i].size(); ++j)
                    out(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = m[i][j](values);
            return out;
        };
    }

    static Box box_from(const nlohmann::json& decl, std::size_t dim, const std::string& what) {
        const auto lower = detail::get_or<std::vector<double>>(decl, "lower", {});
        const auto upper = detail::get_or<std::vector<double>>(decl, "upper", {});
        if (lower.size() != dim || upper.size() != dim)
            throw ConfigError("config: " + what + " needs 'lower' and 'upper' of length " + std::to_string(dim));
        Box b;
        for (std::size_t i = 0; i < dim; ++i) b.axes.push_back({lower[i], upper[i]});
        return b;
    }

    static NamedAtlas user_atlas(const std::string& name, const nlohmann::json& decl) {
        const std::string what = "atlas '" + name + "'";
        if (!decl.contains("charts") || !decl.at("charts").is_array() || decl.at("charts").empty())
            throw ConfigError("config: " + what + " needs a non-empty 'charts' array");
        const std::size_t dim = decl.value("dim", decl.at("charts").front().value("lower", std::vector<double>{}).size());
        if (dim < 1) throw ConfigError("config: " + what + " has no dimension");
        const auto coords = decl.contains("coords") ? detail::get_or<std::vector<std::string>>(decl, "coords", {})
                                                    : default_coords(dim, "x");
        if (coords.size() != dim) throw ConfigError("config: " + what + ": 'coords' length must equal the dimension");
        std::vector<Chart> charts;
        for (const auto& c : decl.at("charts")) {
            const std::string cname = c.value("name", "");
            if (cname.empty()) throw ConfigError("config: " + what + ": chart without a name");
            charts.push_back(Chart{cname, box_from(c, dim, what + " chart '" + cname + "'")});
        }
        std::vector<TransitionBranch> branches;
        if (decl.contains("transitions")) {
            for (const auto& t : decl.at("transitions")) {
                const std::string from = t.value("from", ""), to = t.value("to", "");
                const std::string bwhat = what + " transition " + from + "->" + to;
                if (!t.contains("map") || !t.contains("jacobian"))
                    throw ConfigError("config: " + bwhat + " needs 'map' and an explicit 'jacobian'");
                branches.push_back(TransitionBranch{from, to, box_from(t, dim, bwhat),
                                                    vector_fn(t.at("map"), coords, dim, bwhat + " map"),
                                                    matrix_fn(t.at("jacobian"), coords, dim, dim, bwhat + " jacobian")});
            }
        }
        try {
            return {std::make_shared<const Atlas>(Atlas::chart_based(name, std::move(charts), std::move(branches))),
                    coords};
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("config: ") + e.what());
        }
    }

    static Section user_section(const NamedAtlas& a, const nlohmann::json& decl) {
        const std::string name = decl.value("name", "section");
        const std::string what = "section '" + name + "'";
        const std::size_t n = a.atlas->ambient_dim();
        std::map<std::string, Section::ComponentFn> fns;
        for (const auto& [chart, comps] : charts_of(decl, what).items()) {
            require_chart(*a.atlas, chart, what);
            const auto zero = nlohmann::json(std::vector<std::string>(n, "0"));
            auto tangent = vector_fn(comps.contains("tangent") ? comps.at("tangent") : zero, a.coords, n,
                                     what + " tangent on '" + chart + "'");
            auto covector = vector_fn(comps.contains("covector") ? comps.at("covector") : zero, a.coords, n,
                                      what + " covector on '" + chart + "'");
            fns[chart] = [tangent, covector](const Vec& x) -> Components { return {tangent(x), covector(x)}; };
        }
        return Section(name, std::move(fns));
    }

    const SuiteConfig& config_;
    std::map<std::string, NamedAtlas> atlases_;
};

/// One report per frame entry, in config order; deterministic given the seed.
inline std::vector<VerifyReport> run_suite(const SuiteConfig& config, bool keep_points = false) {
    Registry registry(config);
    std::vector<VerifyReport> reports;
    for (const auto& entry : config.frames) {
        const SectionFrame frame = registry.frame(entry);
        VerifyOptions opts;
        opts.sampling = config.sampling;
        if (entry.contains("sampling")) detail::parse_sampling(entry.at("sampling"), opts.sampling);
        opts.tolerances = config.tolerances;
        opts.seed = config.seed;
        opts.keep_points = keep_points;
        if (entry.contains("structures")) {
            opts.structures = detail::get_or<std::vector<std::string>>(entry, "structures", {});
            for (const std::string& s : opts.structures)
                if (s != "metric:J" && s != "metric:F" && s != "frame:J" && s != "frame:F")
                    throw ConfigError("config: unknown structure '" + s + "'");
        }
        std::vector<ManifoldPoint> samples;
        try {
            samples = frame_samples(frame.atlas(), opts.sampling, config.seed);
        } catch (const std::exception& e) {
            throw ConfigError(std::string("config: sampling '") + frame.name() + "': " + e.what());
        }
        reports.push_back(verify_frame(frame, samples, opts));
    }
    return reports;
}

}  // namespace genbundle
