#pragma once

// Command-line front end: sw, classify, verify, structures, report.
// Exit codes: 0 all checks pass, 1 verification failure, 2 usage/config error.

#include "genbundle/structures.hpp"
#include "genbundle/suite.hpp"
#include "genbundle/verify.hpp"
#include "genbundle/z2_classes.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#ifndef GENBUNDLE_DEFAULT_CONFIG
#define GENBUNDLE_DEFAULT_CONFIG "config/default.json"
#endif

namespace genbundle {

enum ExitCode : int { exit_ok = 0, exit_failure = 1, exit_usage = 2 };

inline nlohmann::json to_json(const Z2Poly& p) {
    return {{"poly", p.to_string()}, {"hex_le", p.to_hex_le()}, {"degree", p.truncation_degree()}};
}

inline nlohmann::json to_json(const SwClassification& row) {
    return {{"n", row.n},
            {"sphere",
             {{"tangent_trivial", row.sphere_tangent_trivial},
              {"generalized_trivial", row.sphere_gen_trivial},
              {"allard_min_copies", row.sphere_min_copies}}},
            {"projective",
             {{"tangent_sw", to_json(row.tangent_sw)},
              {"generalized_sw", to_json(row.gen_sw)},
              {"obstruction_trivial", row.obstruction_trivial},
              {"parallelizable", to_string(row.parallelizable_known)},
              {"generalized_trivial", to_string(row.rp_gen_trivial())}}}};
}

inline std::string sw_line(std::size_t n) {
    const Z2Poly t = sw_tangent_rpn(n);
    const Z2Poly g = sw_gen_tangent_rpn(n);
    return "w(T) = " + t.to_string() + "; w(TT) = " + g.to_string() +
           "; obstruction: " + (g.is_one() ? "zero" : "NONZERO");
}

inline const char* yes_no(bool b) noexcept { return b ? "yes" : "no"; }

inline const char* rp_gen_label(Tristate t) noexcept {
    switch (t) {
        case Tristate::yes: return "trivial";
        case Tristate::no: return "non-trivial";
        case Tristate::undecided: return "obstruction zero";
    }
    return "?";
}

/// Fixed-layout text table; columns sized to their widest cell.
inline std::string classify_text_table(const std::vector<SwClassification>& rows) {
    const std::vector<std::string> header = {"n",          "S^n TM trivial", "S^n TTM trivial", "RP^n TM trivial",
                                             "RP^n w(T)", "RP^n w(TT)",     "RP^n TTM"};
    std::vector<std::vector<std::string>> cells;
    for (const SwClassification& r : rows) {
        cells.push_back({std::to_string(r.n), yes_no(r.sphere_tangent_trivial), yes_no(r.sphere_gen_trivial),
                         to_string(r.parallelizable_known), r.tangent_sw.to_string(), r.gen_sw.to_string(),
                         rp_gen_label(r.rp_gen_trivial())});
    }
    std::vector<std::size_t> width(header.size());
    for (std::size_t c = 0; c < header.size(); ++c) {
        width[c] = header[c].size();
        for (const auto& row : cells) width[c] = std::max(width[c], row[c].size());
    }
    std::ostringstream os;
    auto emit = [&](const std::vector<std::string>& row) {
        std::string line;
        for (std::size_t c = 0; c < row.size(); ++c) {
            if (c) line += " | ";
            const std::string pad(width[c] - row[c].size(), ' ');
            line += c == 0 ? pad + row[c] : row[c] + pad;
        }
        while (!line.empty() && line.back() == ' ') line.pop_back();
        os << line << '\n';
    };
    emit(header);
    std::string rule;
    for (std::size_t c = 0; c < width.size(); ++c) {
        if (c) rule += "-+-";
        rule += std::string(width[c], '-');
    }
    os << rule << '\n';
    for (const auto& row : cells) emit(row);
    return os.str();
}

inline std::string classify_csv(const std::vector<SwClassification>& rows) {
    std::ostringstream os;
    os << "n,sphere_tm_trivial,sphere_ttm_trivial,sphere_allard_min_copies,rp_parallelizable,rp_w_t,rp_w_tt,"
          "rp_w_tt_hex_le,rp_obstruction_trivial,rp_ttm\n";
    for (const SwClassification& r : rows) {
        os << r.n << ',' << yes_no(r.sphere_tangent_trivial) << ',' << yes_no(r.sphere_gen_trivial) << ','
           << r.sphere_min_copies << ',' << to_string(r.parallelizable_known) << ',' << r.tangent_sw.to_string()
           << ',' << r.gen_sw.to_string() << ',' << r.gen_sw.to_hex_le() << ',' << yes_no(r.obstruction_trivial)
           << ',' << rp_gen_label(r.rp_gen_trivial()) << '\n';
    }
    return os.str();
}

inline std::string sci(double x) {
    std::ostringstream os;
    os << std::setprecision(3) << std::scientific << x;
    return os.str();
}

inline std::string report_summary(const VerifyReport& r) {
    std::ostringstream os;
    os << (r.pass ? "PASS " : "FAIL ") << r.frame << " (" << r.atlas << ") samples=" << r.samples
       << " min_gram_det=" << std::setprecision(12) << r.min_gram_det << " min_rcond=" << sci(r.min_rcond)
       << " max_overlap=" << sci(r.max_overlap_residual) << " max_identity=" << sci(r.max_identity_residual);
    for (const StructureCheck& c : r.structures) os << "\n  " << (c.pass ? "ok   " : "FAIL ") << c.name;
    os << '\n';
    return os.str();
}

inline std::string structure_summary(const std::string& atlas, const StructureCheck& c, std::size_t samples,
                                     std::size_t n) {
    std::ostringstream os;
    os << atlas << ' ' << c.name << ": square=" << sci(c.square_residual)
       << " g0_symmetric=" << sci(c.symmetry_residual) << " g0_skew=" << sci(c.skew_residual);
    if (c.frame_metric_residual) os << " frame_vs_metric=" << sci(*c.frame_metric_residual);
    if (c.min_plus_rank) {
        if (*c.min_plus_rank == n && *c.max_plus_rank == n)
            os << " plus-eigenrank " << n << " at all " << samples << " samples";
        else
            os << " plus-eigenrank in [" << *c.min_plus_rank << ", " << *c.max_plus_rank << "]";
    }
    os << (c.pass ? " PASS" : " FAIL") << '\n';
    return os.str();
}

/// Built-in frame checked by `structures <atlas>`.
inline std::optional<std::string> frame_for_atlas(const std::string& atlas) {
    if (atlas == "mobius") return "mobius:eq4";
    if (atlas == "klein") return "klein:analogous";
    if (atlas == "circle" || atlas == "sphere(1)" || atlas == "s1") return "s1:parallel";
    if (atlas == "sphere(3)" || atlas == "s3") return "s3:quaternion";
    if (atlas == "torus") return "torus:parallel";
    return std::nullopt;
}

struct OutputSink {
    std::ostream& fallback;
    std::optional<std::string> path;

    /// Writes `text` to the path (or the fallback stream). False on I/O failure.
    bool write(const std::string& text) const {
        if (!path) {
            fallback << text;
            return true;
        }
        std::ofstream f(*path, std::ios::binary);
        f << text;
        return static_cast<bool>(f);
    }
};

inline int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Certify triviality results for generalized tangent bundles TM + T*M"};
    app.require_subcommand(1);

    std::string format = "";
    std::optional<std::string> out_path;
    std::optional<std::uint64_t> seed;
    std::optional<double> tol_det, tol_overlap, tol_op;
    std::optional<std::size_t> grid;
    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--out", out_path, "Output path (default: stdout)");
        cmd->add_option("--format", format, "Output format")->check(CLI::IsMember({"json", "csv", "table"}));
        cmd->add_option("--seed", seed, "Random seed");
        cmd->add_option("--tol-det", tol_det, "Gram determinant threshold");
        cmd->add_option("--tol-overlap", tol_overlap, "Overlap residual threshold");
        cmd->add_option("--tol-op", tol_op, "Structure identity threshold");
        cmd->add_option("--grid", grid, "Grid resolution per chart axis")->check(CLI::Range(2, 100000));
    };

    std::size_t sw_n = 0;
    auto* sw = app.add_subcommand("sw", "Stiefel-Whitney classes of T RP^n and TT RP^n");
    sw->add_option("n", sw_n, "Dimension, 1..1024")->required()->check(CLI::Range(std::size_t{1}, max_rp_dimension));
    add_common(sw);

    std::size_t n_max = 0;
    auto* classify = app.add_subcommand("classify", "Triviality table for S^n and RP^n, n = 1..n_max");
    classify->add_option("n_max", n_max, "Largest dimension, 1..1024")
        ->required()
        ->check(CLI::Range(std::size_t{1}, max_rp_dimension));
    add_common(classify);

    std::string config_path;
    auto* verify = app.add_subcommand("verify", "Run a verification suite");
    verify->add_option("config", config_path, "Suite config (JSON); falls back to $GENBUNDLE_CONFIG");
    add_common(verify);

    std::string atlas_name;
    std::vector<std::string> structure_names;
    auto* structures = app.add_subcommand("structures", "Check generalized structure identities on an atlas");
    structures->add_option("atlas", atlas_name, "mobius, klein, circle, sphere(3) or torus")->required();
    structures->add_option("names", structure_names, "metric:J metric:F frame:J frame:F")->required();
    structures->add_option("--config", config_path, "Suite config supplying sampling defaults");
    add_common(structures);

    std::size_t report_n = 7;
    auto* report = app.add_subcommand("report", "Classification table plus verification suite as one JSON document");
    report->add_option("config", config_path, "Suite config (JSON); falls back to $GENBUNDLE_CONFIG");
    report->add_option("--n", report_n, "Classification range")->check(CLI::Range(std::size_t{1}, max_rp_dimension));
    add_common(report);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? exit_ok : exit_usage;
    }

    const OutputSink sink{out, out_path};
    auto apply_overrides = [&](SuiteConfig& c) {
        if (seed) c.seed = *seed;
        if (tol_det) c.tolerances.det = *tol_det;
        if (tol_overlap) c.tolerances.overlap = *tol_overlap;
        if (tol_op) c.tolerances.op = *tol_op;
        if (grid) c.sampling.resolution = {*grid};
    };
    auto resolve_config = [&]() -> SuiteConfig {
        std::string path = config_path;
        if (path.empty()) {
            if (const char* env = std::getenv("GENBUNDLE_CONFIG"); env != nullptr && *env != '\0')
                path = env;
            else
                path = GENBUNDLE_DEFAULT_CONFIG;
        }
        SuiteConfig c = load_suite_config(path);
        apply_overrides(c);
        return c;
    };
    auto write_or_fail = [&](const std::string& text) {
        if (sink.write(text)) return true;
        err << "error: cannot write '" << out_path.value_or("-") << "'\n";
        return false;
    };

    try {
        if (*sw) {
            if (format == "json") {
                nlohmann::json j = {{"n", sw_n},
                                    {"tangent_sw", to_json(sw_tangent_rpn(sw_n))},
                                    {"generalized_sw", to_json(sw_gen_tangent_rpn(sw_n))},
                                    {"obstruction_trivial", obstruction_trivial(sw_n)}};
                return write_or_fail(j.dump(2) + "\n") ? exit_ok : exit_usage;
            }
            return write_or_fail(sw_line(sw_n) + "\n") ? exit_ok : exit_usage;
        }
        if (*classify) {
            const auto rows = classify_table(n_max);
            std::string text;
            if (format == "json") {
                nlohmann::json arr = nlohmann::json::array();
                for (const auto& r : rows) arr.push_back(to_json(r));
                text = arr.dump(2) + "\n";
            } else if (format == "csv") {
                text = classify_csv(rows);
            } else {
                text = classify_text_table(rows);
            }
            return write_or_fail(text) ? exit_ok : exit_usage;
        }
        if (*verify) {
            const SuiteConfig config = resolve_config();
            const auto reports = run_suite(config, format == "csv");
            std::string text;
            if (format == "csv") {
                std::ostringstream os;
                write_points_csv(os, reports);
                text = os.str();
            } else if (format == "table") {
                for (const auto& r : reports) text += report_summary(r);
            } else {
                text = to_json(reports).dump(2) + "\n";
            }
            if (!write_or_fail(text)) return exit_usage;
            const bool ok = std::all_of(reports.begin(), reports.end(), [](const VerifyReport& r) { return r.pass; });
            return ok ? exit_ok : exit_failure;
        }
        if (*structures) {
            const auto frame_name = frame_for_atlas(atlas_name);
            if (!frame_name) {
                err << "error: unknown atlas '" << atlas_name << "'\n";
                return exit_usage;
            }
            for (const std::string& s : structure_names) {
                if (s != "metric:J" && s != "metric:F" && s != "frame:J" && s != "frame:F") {
                    err << "error: unknown structure '" << s << "'\n";
                    return exit_usage;
                }
            }
            // Sampling defaults come from the built-in SuiteConfig unless a config is given.
            SuiteConfig config;
            if (!config_path.empty() || std::getenv("GENBUNDLE_CONFIG") != nullptr)
                config = resolve_config();
            else
                apply_overrides(config);
            Registry registry(config);
            const SectionFrame frame = registry.frame(nlohmann::json{{"frame", *frame_name}});
            const auto samples = frame_samples(frame.atlas(), config.sampling, config.seed);
            const auto subset = stride_subset(samples, config.sampling.structure_points);
            std::string text;
            nlohmann::json arr = nlohmann::json::array();
            bool ok = true;
            for (const std::string& s : structure_names) {
                const StructureCheck c = check_structure(frame, s, subset, config.sampling.inputs_per_point,
                                                         config.seed + 17, config.tolerances);
                ok = ok && c.pass;
                arr.push_back(to_json(c));
                text += structure_summary(atlas_name, c, subset.size(), frame.atlas().dim());
            }
            if (format == "json") text = arr.dump(2) + "\n";
            if (!write_or_fail(text)) return exit_usage;
            return ok ? exit_ok : exit_failure;
        }
        if (*report) {
            const SuiteConfig config = resolve_config();
            const auto reports = run_suite(config);
            nlohmann::json rows = nlohmann::json::array();
            for (const auto& r : classify_table(report_n)) rows.push_back(to_json(r));
            const nlohmann::json doc = {{"classification", rows}, {"verification", to_json(reports)}};
            if (!write_or_fail(doc.dump(2) + "\n")) return exit_usage;
            const bool ok = std::all_of(reports.begin(), reports.end(), [](const VerifyReport& r) { return r.pass; });
            return ok ? exit_ok : exit_failure;
        }
    } catch (const ConfigError& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    } catch (const std::domain_error& e) {
        err << "error: " << e.what() << '\n';
        return exit_usage;
    }
    return exit_usage;
}

}  // namespace genbundle
