#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "ssw/closed_forms.hpp"
#include "ssw/detail/parallel.hpp"
#include "ssw/detail/rng.hpp"
#include "ssw/ifs.hpp"
#include "ssw/transport.hpp"

namespace ssw::verify {

/// Knobs for the verification run. Tolerances are not configurable: every
/// check scales its bound from the depth actually used (3*c^k, 6*c^k, 12*c^k
/// with 1.5x headroom over the derived discretization error).
struct CheckOptions {
    int coupling_depth = 10;  ///< depth for coupling-moment checks (second moment uses depth-1)
    int transport_depth = 14; ///< depth for marginal discretizations fed to the transport oracle
    int config_count = 50;    ///< sampled configurations for the randomized checks
    std::uint64_t seed = 42;
};

struct CheckResult {
    std::string name;
    std::string detail;
    bool passed = true;
    double max_gap = 0.0;   ///< measured gap of the worst assertion (relative to its tolerance)
    double tolerance = 0.0; ///< tolerance of that assertion
};

namespace detail {

using ssw::detail::bounded;
using ssw::detail::parallel_for;
using ssw::detail::uniform;
using ssw::detail::uniform01;

struct SampledConfig {
    IfsSystem sys;
    double p = 0.0;
    double q = 0.0;
};

/// Random valid configuration. The contraction ratio stays in [0.1, 0.5] so
/// that depth-10 discretization signals sit far above double rounding noise,
/// and weights stay in [0.05, 0.95] with an optional minimum separation.
inline SampledConfig sample_config(std::mt19937_64& rng, double min_weight_gap = 0.0) {
    SampledConfig cfg;
    const double c = uniform(rng, 0.1, 0.5);
    const double t1 = uniform(rng, 0.0, 1.0 - 2.0 * c);
    const double t2 = uniform(rng, t1 + c, 1.0 - c);
    cfg.sys = validate_system(c, t1, t2);
    cfg.p = uniform(rng, 0.05, 0.95);
    cfg.q = uniform(rng, 0.05, 0.95);
    while (std::abs(cfg.p - cfg.q) < min_weight_gap) {
        cfg.q = uniform(rng, 0.05, 0.95);
    }
    return cfg;
}

/// Per-check accumulator: tracks the assertion with the worst gap/tolerance
/// ratio so one line can summarize many assertions.
struct Binding {
    bool passed = true;
    double gap = 0.0;
    double tol = 0.0;
    double worst_ratio = -1.0;

    void observe(double measured_gap, double tolerance) {
        const double ratio = tolerance > 0.0
                                 ? measured_gap / tolerance
                                 : (measured_gap == 0.0 ? 0.0 : std::numeric_limits<double>::infinity());
        if (ratio > worst_ratio) {
            worst_ratio = ratio;
            gap = measured_gap;
            tol = tolerance;
        }
        if (!(measured_gap <= tolerance)) passed = false;
    }

    void merge(const Binding& other) {
        if (other.worst_ratio > worst_ratio) {
            worst_ratio = other.worst_ratio;
            gap = other.gap;
            tol = other.tol;
        }
        passed = passed && other.passed;
    }

    CheckResult finish(std::string name, std::string detail) const {
        return CheckResult{std::move(name), std::move(detail), passed, gap, tol};
    }
};

/// Equal-ratio N-map discretization used only by the linear-test-function
/// counterexample; the library proper exposes only the two-map case.
inline DiscreteMeasure discretize_nmap(std::span<const GeneralIfsSpec::Map> maps,
                                       std::span<const double> weights, int depth) {
    DiscreteMeasure out;
    out.depth = depth;
    struct Frame {
        ssw::detail::Affine transform;
        double weight;
        int level;
    };
    std::vector<Frame> stack;
    stack.push_back({ssw::detail::Affine{}, 1.0, 0});
    while (!stack.empty()) {
        const Frame frame = stack.back();
        stack.pop_back();
        if (frame.level == depth) {
            out.atoms.push_back({frame.transform.mid(), frame.weight});
            continue;
        }
        for (std::size_t s = maps.size(); s-- > 0;) {
            stack.push_back({frame.transform.then(maps[s].ratio, maps[s].shift),
                             frame.weight * weights[s], frame.level + 1});
        }
    }
    std::stable_sort(out.atoms.begin(), out.atoms.end(),
                     [](const auto& a, const auto& b) { return a.position < b.position; });
    return out;
}

inline std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
    // splitmix64 step keeps the per-check streams decorrelated.
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

inline const std::array<double, 5> kRegionFractions = {0.1, 0.325, 0.55, 0.775, 1.0};

} // namespace detail

/// First-moment closed form against the depth-k discretized coupling moment,
/// |moment_1 - formula| <= 3 c^k, over sampled configs x 5 coupling values.
inline CheckResult check_first_moment_formula(const CheckOptions& opt,
                                              std::span<const detail::SampledConfig> configs) {
    const int depth = opt.coupling_depth;
    std::vector<detail::Binding> partial(configs.size());
    detail::parallel_for(configs.size(), [&](std::size_t i) {
        const auto& cfg = configs[i];
        const CouplingRegion region = coupling_region(cfg.p, cfg.q);
        for (const double f : detail::kRegionFractions) {
            const double r = region.lo + f * (region.hi - region.lo);
            const MomentFormulaInput in = make_moment_input(cfg.sys, cfg.p, cfg.q, r);
            const DiscreteCoupling dc = discretize_coupling(cfg.sys, in.coupling, depth);
            const double gap = std::abs(coupling_moment(dc, 1) - first_moment(in));
            partial[i].observe(gap, 3.0 * std::pow(cfg.sys.ratio, depth));
        }
    });
    detail::Binding binding;
    for (const auto& b : partial) binding.merge(b);
    std::ostringstream detail_text;
    detail_text << configs.size() << " configs x 5 r values at depth " << depth;
    return binding.finish("first-moment-formula", detail_text.str());
}

/// Squared second-moment closed form against the depth-(k-1) discretization,
/// |moment_2^2 - formula^2| <= 6 c^(k-1).
inline CheckResult check_second_moment_formula(const CheckOptions& opt,
                                               std::span<const detail::SampledConfig> configs) {
    const int depth = std::max(1, opt.coupling_depth - 1);
    std::vector<detail::Binding> partial(configs.size());
    detail::parallel_for(configs.size(), [&](std::size_t i) {
        const auto& cfg = configs[i];
        const CouplingRegion region = coupling_region(cfg.p, cfg.q);
        for (const double f : detail::kRegionFractions) {
            const double r = region.lo + f * (region.hi - region.lo);
            const MomentFormulaInput in = make_moment_input(cfg.sys, cfg.p, cfg.q, r);
            const DiscreteCoupling dc = discretize_coupling(cfg.sys, in.coupling, depth);
            const double oracle = coupling_moment(dc, 2);
            const double formula = second_moment(in);
            const double gap = std::abs(oracle * oracle - formula * formula);
            partial[i].observe(gap, 6.0 * std::pow(cfg.sys.ratio, depth));
        }
    });
    detail::Binding binding;
    for (const auto& b : partial) binding.merge(b);
    std::ostringstream detail_text;
    detail_text << configs.size() << " configs x 5 r values at depth " << depth;
    return binding.finish("second-moment-formula", detail_text.str());
}

/// W1 closed form against the monotone-rearrangement oracle on depth-k
/// marginals, and the W2 sandwich between the closed-form bounds. Returns the
/// two results (shared discretization pass).
inline std::pair<CheckResult, CheckResult> check_wasserstein_oracle(
    const CheckOptions& opt, std::span<const detail::SampledConfig> configs) {
    const int depth = opt.transport_depth;
    struct PerConfig {
        detail::Binding w1;
        detail::Binding w2;
        double slack_lo = 0.0;
        double slack_hi = 0.0;
    };
    std::vector<PerConfig> partial(configs.size());
    detail::parallel_for(configs.size(), [&](std::size_t i) {
        const auto& cfg = configs[i];
        const double tol = 3.0 * std::pow(cfg.sys.ratio, depth);
        const DiscreteMeasure da = discretize_measure(SelfSimilarMeasure{cfg.sys, cfg.p}, depth);
        const DiscreteMeasure db = discretize_measure(SelfSimilarMeasure{cfg.sys, cfg.q}, depth);
        const TransportPlan plan = monotone_transport(da, db);
        partial[i].w1.observe(std::abs(plan.cost_rho1 - wasserstein1(cfg.sys, cfg.p, cfg.q)), tol);

        const W2Bounds bounds = wasserstein2_bounds(cfg.sys, cfg.p, cfg.q);
        // violation = how far the oracle escapes the widened sandwich; 0 when inside
        const double low_violation = std::max(0.0, (bounds.lower - tol) - plan.cost_rho2);
        const double high_violation = std::max(0.0, plan.cost_rho2 - (bounds.upper + tol));
        partial[i].w2.observe(std::max(low_violation, high_violation), tol);
        partial[i].slack_lo = plan.cost_rho2 - bounds.lower;
        partial[i].slack_hi = bounds.upper - plan.cost_rho2;
    });

    detail::Binding w1_binding;
    detail::Binding w2_binding;
    double min_slack_lo = std::numeric_limits<double>::infinity();
    double min_slack_hi = std::numeric_limits<double>::infinity();
    for (const auto& pc : partial) {
        w1_binding.merge(pc.w1);
        w2_binding.merge(pc.w2);
        min_slack_lo = std::min(min_slack_lo, pc.slack_lo);
        min_slack_hi = std::min(min_slack_hi, pc.slack_hi);
    }

    // Pinned reference configuration: W1 = 0.6 from the closed form alone.
    const IfsSystem ref = validate_system(0.5, 0.0, 0.5);
    w1_binding.observe(std::abs(wasserstein1(ref, 0.2, 0.8) - 0.6), 1e-15);
    {
        const DiscreteMeasure da = discretize_measure(SelfSimilarMeasure{ref, 0.2}, depth);
        const DiscreteMeasure db = discretize_measure(SelfSimilarMeasure{ref, 0.8}, depth);
        const double oracle = monotone_transport(da, db).cost_rho1;
        w1_binding.observe(std::abs(oracle - 0.6), 3.0 * std::pow(0.5, depth));
    }

    std::ostringstream d1;
    d1 << configs.size() << " configs at depth " << depth << " plus the c=1/2 reference config";
    std::ostringstream d2;
    d2 << configs.size() << " configs at depth " << depth << "; min oracle slack to lower bound "
       << min_slack_lo << ", to upper bound " << min_slack_hi;
    return {w1_binding.finish("w1-closed-form-vs-oracle", d1.str()),
            w2_binding.finish("w2-bounds-sandwich", d2.str())};
}

/// Middle-(1-2c) Cantor family: W1 is independent of c (= |p-q|), while the
/// touching-intervals family (t2 - t1 = c) increases strictly with c and
/// stays below |p-q| for c < 1/2.
inline CheckResult check_c_independence(const CheckOptions&) {
    detail::Binding binding;
    const double p = 0.2, q = 0.9;
    double previous_close = -1.0;
    for (int i = 1; i <= 10; ++i) {
        const double c = 0.05 * i;
        const IfsSystem cantor = validate_system(c, 0.0, 1.0 - c);
        binding.observe(std::abs(wasserstein1(cantor, p, q) - 0.7), 1e-15);

        const IfsSystem close = validate_system(c, 0.0, c);
        const double w1_close = wasserstein1(close, p, q);
        if (w1_close <= previous_close) binding.passed = false;
        if (i < 10 && !(w1_close < 0.7)) binding.passed = false;
        previous_close = w1_close;
    }
    return binding.finish("cantor-family-c-independence",
                          "c in {0.05,...,0.50}, (t1,t2)=(0,1-c) constant vs (0,c) increasing");
}

/// Three equal-ratio maps with translations (0, c, 2c) and weight vectors
/// (0.4,0.5,0.1) vs (0.6,0.1,0.3): the linear-test lower bound vanishes even
/// though the measures are far apart, which the transport oracle certifies.
inline CheckResult check_linear_test_insufficiency(const CheckOptions&) {
    detail::Binding binding;
    std::ostringstream oracle_values;
    for (const double c : {0.05, 0.15, 0.25}) {
        const std::vector<GeneralIfsSpec::Map> maps = {{c, 0.0}, {c, c}, {c, 2.0 * c}};
        const std::vector<double> p_vec = {0.4, 0.5, 0.1};
        const std::vector<double> q_vec = {0.6, 0.1, 0.3};
        const GeneralIfsSpec spec = make_general_spec(maps, p_vec, q_vec);
        binding.observe(nmap_lower_bound(spec), 1e-14);

        const int depth = 9;
        const DiscreteMeasure da = detail::discretize_nmap(maps, p_vec, depth);
        const DiscreteMeasure db = detail::discretize_nmap(maps, q_vec, depth);
        const double oracle = monotone_transport(da, db).cost_rho1;
        // Positive beyond the discretization error: the bound is not tight.
        if (!(oracle > 2.0 * std::pow(c, depth))) binding.passed = false;
        oracle_values << " " << oracle;
    }
    return binding.finish("linear-test-insufficiency",
                          "3-map bound = 0 at c in {0.05,0.15,0.25}; oracle W1 estimates:" +
                              oracle_values.str());
}

/// Residual of the signed/absolute first-moment identity: bounded by 12 c^k
/// and decreasing in depth (saturating at double precision).
inline CheckResult check_moment_identity(const CheckOptions& opt) {
    const int top_depth = std::max(5, opt.coupling_depth);
    const std::array<int, 3> depths = {top_depth - 4, top_depth - 2, top_depth};
    const std::size_t count = std::max<std::size_t>(1, 2 * opt.config_count / 5);

    std::mt19937_64 rng(detail::mix_seed(opt.seed, 7));
    struct Case {
        detail::SampledConfig cfg;
        double r;
    };
    std::vector<Case> cases(count);
    for (auto& cs : cases) {
        cs.cfg = detail::sample_config(rng, 0.1);
        const CouplingRegion region = coupling_region(cs.cfg.p, cs.cfg.q);
        cs.r = region.lo + detail::uniform(rng, 0.15, 0.85) * (region.hi - region.lo);
    }

    std::vector<detail::Binding> partial(count);
    detail::parallel_for(count, [&](std::size_t i) {
        const auto& cs = cases[i];
        std::array<double, 3> residuals{};
        for (std::size_t k = 0; k < depths.size(); ++k) {
            residuals[k] =
                moment_identity_residual(cs.cfg.sys, cs.cfg.p, cs.cfg.q, cs.r, depths[k]);
            partial[i].observe(residuals[k], 12.0 * std::pow(cs.cfg.sys.ratio, depths[k]));
        }
        for (std::size_t k = 1; k < depths.size(); ++k) {
            const bool converged = residuals[k] <= 1e-14 && residuals[k - 1] <= 1e-14;
            if (!(residuals[k] < residuals[k - 1]) && !converged) partial[i].passed = false;
        }
    });
    detail::Binding binding;
    for (const auto& b : partial) binding.merge(b);
    std::ostringstream detail_text;
    detail_text << count << " configs with |p-q| >= 0.1 at depths {" << depths[0] << ","
                << depths[1] << "," << depths[2] << "}";
    return binding.finish("moment-identity-residual", detail_text.str());
}

/// Analytic features of the first moment: finite-difference slope agreement,
/// vanishing at its root, strict decrease and positivity across the region,
/// exact duality-gap closure, and the boundary identity with W1.
inline CheckResult check_analytic_features(const CheckOptions& opt) {
    const std::size_t count = std::max<std::size_t>(1, 2 * opt.config_count);
    std::mt19937_64 rng(detail::mix_seed(opt.seed, 8));
    struct Case {
        detail::SampledConfig cfg;
        double r;
    };
    std::vector<Case> cases(count);
    for (auto& cs : cases) {
        cs.cfg = detail::sample_config(rng, 0.05);
        const CouplingRegion region = coupling_region(cs.cfg.p, cs.cfg.q);
        cs.r = region.lo + detail::uniform(rng, 0.1, 0.9) * (region.hi - region.lo);
    }

    std::vector<detail::Binding> partial(count);
    detail::parallel_for(count, [&](std::size_t i) {
        const auto& [cfg, r] = cases[i];
        const IfsSystem& sys = cfg.sys;
        const CouplingRegion region = coupling_region(cfg.p, cfg.q);

        // Finite-difference derivative, relative agreement within 1e-6.
        const double h = 1e-6;
        const double fd = (first_moment_at(sys, cfg.p, cfg.q, r + h) -
                           first_moment_at(sys, cfg.p, cfg.q, r - h)) /
                          (2.0 * h);
        const double slope = first_moment_slope_at(sys, cfg.p, cfg.q, r);
        partial[i].observe(std::abs(fd - slope), 1e-6 * std::abs(slope));

        // The moment vanishes at its root.
        const double root = first_moment_root(cfg.p, cfg.q, sys.ratio);
        partial[i].observe(std::abs(first_moment_at(sys, cfg.p, cfg.q, root)), 1e-12);

        // Positive and strictly decreasing across a 101-point region grid.
        double previous = std::numeric_limits<double>::infinity();
        for (int g = 0; g <= 100; ++g) {
            const double rg = region.lo + (region.hi - region.lo) * (g / 100.0);
            const double value = first_moment(make_moment_input(sys, cfg.p, cfg.q, rg));
            if (!(value > 0.0) || !(value < previous)) partial[i].passed = false;
            previous = value;
        }

        // Duality gap closes exactly at |lambda| = 1.
        const double best_linear = std::max(linear_test_value(sys, cfg.p, cfg.q, 1.0),
                                            linear_test_value(sys, cfg.p, cfg.q, -1.0));
        partial[i].observe(std::abs(best_linear - wasserstein1(sys, cfg.p, cfg.q)), 0.0);

        // Right-endpoint value agrees with the exact W1.
        const double at_boundary =
            first_moment(make_moment_input(sys, cfg.p, cfg.q, region.hi));
        partial[i].observe(std::abs(at_boundary - wasserstein1(sys, cfg.p, cfg.q)), 1e-12);
    });
    detail::Binding binding;
    for (const auto& b : partial) binding.merge(b);
    std::ostringstream detail_text;
    detail_text << count << " configs; slope, root, monotonicity, duality, boundary identity";
    return binding.finish("analytic-features", detail_text.str());
}

/// Monotone plan optimality witness: random feasible couplings never undercut
/// the monotone cost (up to 1e-10) for either exponent.
inline CheckResult check_monotone_optimality(const CheckOptions& opt) {
    const std::size_t pair_count = std::max<std::size_t>(1, 2 * opt.config_count / 5);
    constexpr int kWitnesses = 1000;
    std::mt19937_64 rng(detail::mix_seed(opt.seed, 9));

    auto random_measure = [&rng]() {
        const std::size_t n = 1 + detail::bounded(rng, 64);
        DiscreteMeasure m;
        std::vector<double> weights(n);
        double total = 0.0;
        for (auto& w : weights) {
            w = detail::uniform(rng, 0.01, 1.0);
            total += w;
        }
        m.atoms.resize(n);
        for (std::size_t i = 0; i < n; ++i) {
            m.atoms[i] = {detail::uniform01(rng), weights[i] / total};
        }
        std::stable_sort(m.atoms.begin(), m.atoms.end(),
                         [](const auto& a, const auto& b) { return a.position < b.position; });
        return m;
    };

    struct Task {
        DiscreteMeasure a;
        DiscreteMeasure b;
        std::uint64_t seed;
    };
    std::vector<Task> tasks(pair_count);
    for (std::size_t i = 0; i < pair_count; ++i) {
        tasks[i] = {random_measure(), random_measure(), detail::mix_seed(opt.seed, 1000 + i)};
    }

    std::vector<detail::Binding> partial(pair_count);
    detail::parallel_for(pair_count, [&](std::size_t i) {
        const Task& task = tasks[i];
        const TransportPlan plan = monotone_transport(task.a, task.b);
        for (int w = 0; w < kWitnesses; ++w) {
            for (int rho = 1; rho <= 2; ++rho) {
                const double witness =
                    random_feasible_coupling_cost(task.a, task.b, task.seed + w, rho);
                const double reference = rho == 1 ? plan.cost_rho1 : plan.cost_rho2;
                partial[i].observe(std::max(0.0, reference - witness), 1e-10);
            }
        }
    });
    detail::Binding binding;
    for (const auto& b : partial) binding.merge(b);
    std::ostringstream detail_text;
    detail_text << pair_count << " atom pairs x " << kWitnesses << " seeded couplings, rho in {1,2}";
    return binding.finish("monotone-optimality-witness", detail_text.str());
}

/// Runs every check in a fixed order; results line up with the acceptance
/// suite one to one.
inline std::vector<CheckResult> run_all_checks(const CheckOptions& opt) {
    std::mt19937_64 rng(detail::mix_seed(opt.seed, 1));
    std::vector<detail::SampledConfig> configs(std::max(1, opt.config_count));
    for (auto& cfg : configs) cfg = detail::sample_config(rng);

    std::vector<CheckResult> results;
    results.push_back(check_first_moment_formula(opt, configs));
    results.push_back(check_second_moment_formula(opt, configs));
    auto [w1_result, w2_result] = check_wasserstein_oracle(opt, configs);
    results.push_back(std::move(w1_result));
    results.push_back(std::move(w2_result));
    results.push_back(check_c_independence(opt));
    results.push_back(check_linear_test_insufficiency(opt));
    results.push_back(check_moment_identity(opt));
    results.push_back(check_analytic_features(opt));
    results.push_back(check_monotone_optimality(opt));
    return results;
}

} // namespace ssw::verify
