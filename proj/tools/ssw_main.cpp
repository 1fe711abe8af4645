// ssw — closed-form Wasserstein toolkit for two-map self-similar measures.
//
// Subcommands:
//   moments    closed-form coupling moments vs the discretized coupling
//   w1         exact 1-Wasserstein distance vs the monotone transport oracle
//   w2-bounds  2-Wasserstein sandwich bounds vs the oracle
//   sweep-r    CSV sweep of both moments across the coupling region
//   sweep-c    CSV sweep of W1/W2 bounds across contraction ratios for the
//              three canonical translation regimes
//   verify     full property suite, JSON report, exit 1 on any failure
//
// A JSON config file (--config) mirrors the flags; explicit flags win.

#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "ssw/closed_forms.hpp"
#include "ssw/detail/parallel.hpp"
#include "ssw/errors.hpp"
#include "ssw/ifs.hpp"
#include "ssw/transport.hpp"
#include "ssw/verification.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitVerifyFailed = 1;
constexpr int kExitUsage = 2;

/// Locale-independent rendering with 12 significant digits (CSV contract).
std::string fmt12(double value) {
    char buf[40];
    const auto res = std::to_chars(buf, buf + sizeof(buf), value, std::chars_format::general, 12);
    return std::string(buf, res.ptr);
}

struct Values {
    double c = 0.5;
    double t1 = 0.0;
    double t2 = 0.5;
    double p = 0.2;
    double q = 0.8;
    double r = 0.0;
    int depth = -1; // -1 = use the per-command default
    int grid = -1;  // -1 = use the per-command default
    int configs = 50;
    std::uint64_t seed = 42;
    std::string format;
    std::string out;
    std::string config_path;

    bool r_given = false;
    bool q_given = false;
};

/// Registers the shared flag set on a subcommand; returns nothing, CLI11
/// owns the bindings.
void add_common_flags(CLI::App* cmd, Values& v) {
    cmd->add_option("--config", v.config_path, "JSON config file mirroring the flags");
    cmd->add_option("--out", v.out, "write output to this path instead of stdout");
    cmd->add_option("--format", v.format, "output format: csv or json");
    cmd->add_option("--seed", v.seed, "seed for randomized computations");
}

void add_system_flags(CLI::App* cmd, Values& v) {
    cmd->add_option("--c", v.c, "contraction ratio in (0, 1/2]");
    cmd->add_option("--t1", v.t1, "translation of the first map");
    cmd->add_option("--t2", v.t2, "translation of the second map");
}

void add_weight_flags(CLI::App* cmd, Values& v) {
    cmd->add_option("--p", v.p, "first measure weight in (0, 1)");
    cmd->add_option("--q", v.q, "second measure weight in (0, 1)");
}

/// Applies config-file values to every flag the user did not pass explicitly.
void merge_config_file(CLI::App* cmd, Values& v) {
    if (v.config_path.empty()) return;
    std::ifstream in(v.config_path);
    if (!in) {
        throw CLI::ValidationError("--config", "cannot open config file: " + v.config_path);
    }
    json file;
    try {
        in >> file;
    } catch (const json::parse_error& err) {
        throw CLI::ValidationError("--config", std::string("invalid JSON: ") + err.what());
    }
    if (!file.is_object()) {
        throw CLI::ValidationError("--config", "config file must hold a JSON object");
    }

    auto flag_given = [&](const std::string& name) {
        const CLI::Option* opt = cmd->get_option_no_throw(name);
        return opt != nullptr && opt->count() > 0;
    };
    auto merge = [&](const char* key, auto& field) {
        if (!file.contains(key) || flag_given(std::string("--") + key)) return;
        using Field = std::remove_reference_t<decltype(field)>;
        field = file.at(key).get<Field>();
    };

    merge("c", v.c);
    merge("t1", v.t1);
    merge("t2", v.t2);
    merge("p", v.p);
    merge("q", v.q);
    merge("depth", v.depth);
    merge("grid", v.grid);
    merge("configs", v.configs);
    merge("seed", v.seed);
    merge("format", v.format);
    merge("out", v.out);
    if (file.contains("r") && !flag_given("--r")) {
        v.r = file.at("r").get<double>();
        v.r_given = true;
    }
    if (file.contains("q") && !flag_given("--q")) v.q_given = true;
}

void emit(const Values& v, const std::string& payload) {
    if (v.out.empty()) {
        std::cout << payload;
        return;
    }
    std::ofstream out(v.out, std::ios::binary);
    if (!out) {
        throw ssw::Error(ssw::Errc::out_of_range, "out", "cannot open output path " + v.out);
    }
    out << payload;
}

std::string resolve_format(const Values& v, const char* fallback) {
    const std::string format = v.format.empty() ? fallback : v.format;
    if (format != "csv" && format != "json") {
        throw CLI::ValidationError("--format", "must be csv or json");
    }
    return format;
}

std::string to_csv(const std::vector<std::string>& header,
                   const std::vector<std::vector<double>>& rows) {
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) {
        out << (i ? "," : "") << header[i];
    }
    out << "\n";
    for (const auto& row : rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            out << (i ? "," : "") << fmt12(row[i]);
        }
        out << "\n";
    }
    return out.str();
}

/// Single-record output: JSON object or a two-line CSV with the same keys.
std::string to_record(const std::string& format, const json& record) {
    if (format == "json") return record.dump(2) + "\n";
    std::vector<std::string> header;
    std::ostringstream values;
    bool first = true;
    for (auto it = record.begin(); it != record.end(); ++it) {
        header.push_back(it.key());
        if (!first) values << ",";
        first = false;
        if (it->is_number_float()) {
            values << fmt12(it->get<double>());
        } else if (it->is_boolean()) {
            values << (it->get<bool>() ? "true" : "false");
        } else if (it->is_string()) {
            values << it->get<std::string>();
        } else {
            values << it->dump();
        }
    }
    std::ostringstream out;
    for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
    out << "\n" << values.str() << "\n";
    return out.str();
}

int run_moments(Values& v) {
    if (!v.r_given) {
        throw CLI::ValidationError("--r", "moments requires a coupling parameter");
    }
    const int depth = v.depth > 0 ? v.depth : 10;
    const ssw::IfsSystem sys = ssw::validate_system(v.c, v.t1, v.t2);
    const ssw::MomentFormulaInput in = ssw::make_moment_input(sys, v.p, v.q, v.r);
    const ssw::CouplingRegion region = ssw::coupling_region(v.p, v.q);

    const double phi1 = ssw::first_moment(in);
    const double phi2 = ssw::second_moment(in);
    const ssw::DiscreteCoupling dc = ssw::discretize_coupling(sys, in.coupling, depth);
    const double oracle1 = ssw::coupling_moment(dc, 1);
    const double oracle2 = ssw::coupling_moment(dc, 2);
    const bool boundary =
        std::abs(v.r - region.lo) <= 1e-12 || std::abs(v.r - region.hi) <= 1e-12;

    json record;
    record["command"] = "moments";
    record["c"] = v.c;
    record["t1"] = v.t1;
    record["t2"] = v.t2;
    record["p"] = v.p;
    record["q"] = v.q;
    record["r"] = v.r;
    record["depth"] = depth;
    record["phi1"] = phi1;
    record["phi2"] = phi2;
    record["oracle_rho1"] = oracle1;
    record["oracle_rho2"] = oracle2;
    record["abs_gap_rho1"] = std::abs(oracle1 - phi1);
    record["abs_gap_rho2"] = std::abs(oracle2 - phi2);
    record["tolerance_rho1"] = 2.0 * std::pow(v.c, depth);
    record["tolerance_rho2"] = 4.0 * std::pow(v.c, depth);
    record["boundary"] = boundary;
    emit(v, to_record(resolve_format(v, "json"), record));
    return kExitOk;
}

int run_w1(Values& v) {
    const int depth = v.depth > 0 ? v.depth : 14;
    const ssw::IfsSystem sys = ssw::validate_system(v.c, v.t1, v.t2);
    const double exact = ssw::wasserstein1(sys, v.p, v.q);
    const ssw::DiscreteMeasure da =
        ssw::discretize_measure(ssw::make_measure(sys, v.p), depth);
    const ssw::DiscreteMeasure db =
        ssw::discretize_measure(ssw::make_measure(sys, v.q), depth);
    const double oracle = ssw::monotone_transport(da, db).cost_rho1;

    json record;
    record["command"] = "w1";
    record["c"] = v.c;
    record["t1"] = v.t1;
    record["t2"] = v.t2;
    record["p"] = v.p;
    record["q"] = v.q;
    record["depth"] = depth;
    record["w1_exact"] = exact;
    record["oracle_rho1"] = oracle;
    record["abs_gap"] = std::abs(oracle - exact);
    record["tolerance"] = 2.0 * std::pow(v.c, depth);
    emit(v, to_record(resolve_format(v, "json"), record));
    return kExitOk;
}

int run_w2_bounds(Values& v) {
    const int depth = v.depth > 0 ? v.depth : 14;
    const ssw::IfsSystem sys = ssw::validate_system(v.c, v.t1, v.t2);
    const ssw::W2Bounds bounds = ssw::wasserstein2_bounds(sys, v.p, v.q);
    const ssw::DiscreteMeasure da =
        ssw::discretize_measure(ssw::make_measure(sys, v.p), depth);
    const ssw::DiscreteMeasure db =
        ssw::discretize_measure(ssw::make_measure(sys, v.q), depth);
    const double oracle = ssw::monotone_transport(da, db).cost_rho2;

    json record;
    record["command"] = "w2-bounds";
    record["c"] = v.c;
    record["t1"] = v.t1;
    record["t2"] = v.t2;
    record["p"] = v.p;
    record["q"] = v.q;
    record["depth"] = depth;
    record["lower"] = bounds.lower;
    record["upper"] = bounds.upper;
    record["oracle_rho2"] = oracle;
    record["gap_to_lower"] = oracle - bounds.lower;
    record["gap_to_upper"] = bounds.upper - oracle;
    record["tolerance"] = 2.0 * std::pow(v.c, depth);
    emit(v, to_record(resolve_format(v, "json"), record));
    return kExitOk;
}

int run_sweep_r(Values& v) {
    const int grid = v.grid > 0 ? v.grid : 201;
    if (grid < 2) {
        throw CLI::ValidationError("--grid", "sweep needs at least 2 grid points");
    }
    const ssw::IfsSystem sys = ssw::validate_system(v.c, v.t1, v.t2);
    const ssw::CouplingRegion region = ssw::coupling_region(v.p, v.q);

    std::vector<std::vector<double>> rows(grid);
    ssw::detail::parallel_for(static_cast<std::size_t>(grid), [&](std::size_t i) {
        const double f = static_cast<double>(i) / (grid - 1);
        const double r = region.lo + (region.hi - region.lo) * f;
        const ssw::MomentFormulaInput in = ssw::make_moment_input(sys, v.p, v.q, r);
        rows[i] = {r, ssw::first_moment(in), ssw::second_moment(in)};
    });

    const std::string format = resolve_format(v, "csv");
    if (format == "csv") {
        emit(v, to_csv({"r", "phi1", "phi2"}, rows));
    } else {
        json arr = json::array();
        for (const auto& row : rows) {
            arr.push_back({{"r", row[0]}, {"phi1", row[1]}, {"phi2", row[2]}});
        }
        emit(v, arr.dump(2) + "\n");
    }
    return kExitOk;
}

int run_sweep_c(Values& v) {
    const int grid = v.grid > 0 ? v.grid : 50;
    if (grid < 2) {
        throw CLI::ValidationError("--grid", "sweep needs at least 2 grid points");
    }
    if (!v.q_given) v.q = 0.9; // regime plots default to (p, q) = (0.2, 0.9)

    const std::vector<std::string> header = {"c",          "w1_cantor",   "w1_close",
                                             "w1_mid",     "w2u_cantor",  "w2u_close",
                                             "w2u_mid",    "w2gap_cantor", "w2gap_close",
                                             "w2gap_mid"};
    std::vector<std::optional<std::vector<double>>> rows(grid);
    std::vector<std::string> warnings(grid);
    ssw::detail::parallel_for(static_cast<std::size_t>(grid), [&](std::size_t i) {
        const double c = 0.5 * static_cast<double>(i + 1) / grid;
        try {
            // The three translation regimes: maximal separation (middle-(1-2c)
            // Cantor set), touching intervals, and a fixed midpoint anchor.
            const ssw::IfsSystem cantor = ssw::validate_system(c, 0.0, 1.0 - c);
            const ssw::IfsSystem close = ssw::validate_system(c, 0.0, c);
            const ssw::IfsSystem mid = ssw::validate_system(c, 0.0, 0.5);
            const ssw::W2Bounds b_cantor = ssw::wasserstein2_bounds(cantor, v.p, v.q);
            const ssw::W2Bounds b_close = ssw::wasserstein2_bounds(close, v.p, v.q);
            const ssw::W2Bounds b_mid = ssw::wasserstein2_bounds(mid, v.p, v.q);
            rows[i] = std::vector<double>{c,
                                          b_cantor.lower,
                                          b_close.lower,
                                          b_mid.lower,
                                          b_cantor.upper,
                                          b_close.upper,
                                          b_mid.upper,
                                          b_cantor.upper - b_cantor.lower,
                                          b_close.upper - b_close.lower,
                                          b_mid.upper - b_mid.lower};
        } catch (const ssw::Error& err) {
            warnings[i] = "warning: skipping c=" + fmt12(c) + " (" + err.what() + ")";
        }
    });

    std::vector<std::vector<double>> kept;
    kept.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (rows[i]) {
            kept.push_back(*rows[i]);
        } else {
            std::cerr << warnings[i] << "\n";
        }
    }

    const std::string format = resolve_format(v, "csv");
    if (format == "csv") {
        emit(v, to_csv(header, kept));
    } else {
        json arr = json::array();
        for (const auto& row : kept) {
            json obj;
            for (std::size_t k = 0; k < header.size(); ++k) obj[header[k]] = row[k];
            arr.push_back(obj);
        }
        emit(v, arr.dump(2) + "\n");
    }
    return kExitOk;
}

int run_verify(Values& v) {
    ssw::verify::CheckOptions opt;
    opt.coupling_depth = v.depth > 0 ? v.depth : 10;
    opt.transport_depth = std::min(opt.coupling_depth + 4, 22);
    opt.config_count = v.configs;
    opt.seed = v.seed;

    const std::vector<ssw::verify::CheckResult> checks = ssw::verify::run_all_checks(opt);
    bool all_passed = true;

    json report;
    report["command"] = "verify";
    report["depth"] = opt.coupling_depth;
    report["transport_depth"] = opt.transport_depth;
    report["configs"] = opt.config_count;
    report["seed"] = opt.seed;
    json arr = json::array();
    for (const auto& check : checks) {
        all_passed = all_passed && check.passed;
        arr.push_back({{"name", check.name},
                       {"passed", check.passed},
                       {"max_gap", check.max_gap},
                       {"tolerance", check.tolerance},
                       {"detail", check.detail}});
    }
    report["checks"] = arr;
    report["all_passed"] = all_passed;
    emit(v, report.dump(2) + "\n");
    return all_passed ? kExitOk : kExitVerifyFailed;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"closed-form Wasserstein distances for two-map self-similar measures,"
                 " cross-checked by a brute-force transport oracle"};
    app.require_subcommand(1);

    Values v;

    CLI::App* moments = app.add_subcommand("moments", "closed-form coupling moments vs oracle");
    add_system_flags(moments, v);
    add_weight_flags(moments, v);
    CLI::Option* r_opt = moments->add_option("--r", v.r, "coupling parameter");
    moments->add_option("--depth", v.depth, "coupling discretization depth (default 10)");
    add_common_flags(moments, v);

    CLI::App* w1 = app.add_subcommand("w1", "exact 1-Wasserstein distance vs oracle");
    add_system_flags(w1, v);
    add_weight_flags(w1, v);
    w1->add_option("--depth", v.depth, "marginal discretization depth (default 14)");
    add_common_flags(w1, v);

    CLI::App* w2 = app.add_subcommand("w2-bounds", "2-Wasserstein sandwich bounds vs oracle");
    add_system_flags(w2, v);
    add_weight_flags(w2, v);
    w2->add_option("--depth", v.depth, "marginal discretization depth (default 14)");
    add_common_flags(w2, v);

    CLI::App* sweep_r = app.add_subcommand("sweep-r", "CSV sweep of both moments over the region");
    add_system_flags(sweep_r, v);
    add_weight_flags(sweep_r, v);
    sweep_r->add_option("--grid", v.grid, "number of grid points (default 201)");
    add_common_flags(sweep_r, v);

    CLI::App* sweep_c = app.add_subcommand(
        "sweep-c", "CSV sweep over contraction ratios for three translation regimes");
    add_weight_flags(sweep_c, v);
    sweep_c->add_option("--grid", v.grid, "number of c grid points over (0, 1/2] (default 50)");
    add_common_flags(sweep_c, v);

    CLI::App* verify = app.add_subcommand("verify", "run the full property suite");
    verify->add_option("--depth", v.depth, "coupling depth for convergence checks (default 10)");
    verify->add_option("--configs", v.configs, "random configurations per check (default 50)");
    add_common_flags(verify, v);

    try {
        app.parse(argc, argv);
        CLI::App* active = app.get_subcommands().front();
        v.r_given = r_opt->count() > 0;
        const CLI::Option* q_flag = active->get_option_no_throw("--q");
        v.q_given = q_flag != nullptr && q_flag->count() > 0;
        merge_config_file(active, v);

        if (active == moments) return run_moments(v);
        if (active == w1) return run_w1(v);
        if (active == w2) return run_w2_bounds(v);
        if (active == sweep_r) return run_sweep_r(v);
        if (active == sweep_c) return run_sweep_c(v);
        if (active == verify) return run_verify(v);
        return kExitUsage;
    } catch (const CLI::CallForHelp& help) {
        return app.exit(help);
    } catch (const CLI::ParseError& err) {
        app.exit(err);
        return kExitUsage;
    } catch (const ssw::Error& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitUsage;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << "\n";
        return kExitUsage;
    }
}
