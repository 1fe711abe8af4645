#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <vector>

#include "ssw/closed_forms.hpp"
#include "ssw/detail/rng.hpp"
#include "ssw/ifs.hpp"
#include "ssw/transport.hpp"

using Catch::Approx;
using ssw::Errc;
using ssw::Error;

namespace {

// The reference configuration used throughout: whole-interval system with
// weights (0.2, 0.8), coupling region (0, 0.2).
const ssw::IfsSystem kHalf = ssw::validate_system(0.5, 0.0, 0.5);

struct RandomConfig {
    ssw::IfsSystem sys;
    double p;
    double q;
};

RandomConfig random_config(std::mt19937_64& rng, double min_gap = 0.0) {
    const double c = ssw::detail::uniform(rng, 0.1, 0.5);
    const double t1 = ssw::detail::uniform(rng, 0.0, 1.0 - 2.0 * c);
    const double t2 = ssw::detail::uniform(rng, t1 + c, 1.0 - c);
    RandomConfig cfg{ssw::validate_system(c, t1, t2), ssw::detail::uniform(rng, 0.05, 0.95),
                     ssw::detail::uniform(rng, 0.05, 0.95)};
    while (std::abs(cfg.p - cfg.q) < min_gap) cfg.q = ssw::detail::uniform(rng, 0.05, 0.95);
    return cfg;
}

} // namespace

TEST_CASE("first moment reproduces hand-computed values") {
    // (t2-t1)/(1-c) = 1; numerator 0.5*0.36 + 0.5*0.8 = 0.58; denominator 0.9
    const auto in = ssw::make_moment_input(kHalf, 0.2, 0.8, 0.1);
    CHECK(ssw::first_moment(in) == Approx(0.58 / 0.9).margin(1e-14));

    // at r = min{p,q} the moment collapses to the exact W1
    const auto boundary = ssw::make_moment_input(kHalf, 0.2, 0.8, 0.2);
    CHECK(ssw::first_moment(boundary) == Approx(0.6).margin(1e-12));
    CHECK(ssw::first_moment(boundary) ==
          Approx(ssw::wasserstein1(kHalf, 0.2, 0.8)).margin(1e-12));
}

TEST_CASE("first moment at equal weights stays finite and matches brute force") {
    const auto in = ssw::make_moment_input(kHalf, 0.5, 0.5, 0.3);
    const double value = ssw::first_moment(in);
    CHECK(std::isfinite(value));
    CHECK(value == Approx(0.2 / 0.7).margin(1e-14)); // c(p-q)^2 = 0, spread = 0.4

    const auto dc = ssw::discretize_coupling(kHalf, in.coupling, 10);
    CHECK(std::abs(ssw::coupling_moment(dc, 1) - value) <= 3.0 * std::pow(0.5, 10));
}

TEST_CASE("first moment rejects pole-side evaluation") {
    // pole for (0.2, 0.8, c=0.5) sits at 1.0
    CHECK_THROWS_AS(ssw::first_moment_at(kHalf, 0.2, 0.8, 1.0), Error);
    CHECK_THROWS_AS(ssw::first_moment_at(kHalf, 0.2, 0.8, 1.5), Error);
    CHECK_NOTHROW(ssw::first_moment_at(kHalf, 0.2, 0.8, 0.9));
}

TEST_CASE("pole and root worked values") {
    CHECK(ssw::first_moment_pole(0.2, 0.8, 0.5) == Approx(1.0).margin(1e-15));
    CHECK(ssw::first_moment_pole(0.5, 0.5, 0.5) == Approx(1.0).margin(1e-15));
    CHECK(ssw::first_moment_root(0.2, 0.8, 0.5) == Approx(0.68).margin(1e-15));
    CHECK(ssw::first_moment_root(0.4, 0.4, 0.3) == Approx(0.4).margin(1e-15));
    CHECK(ssw::second_moment_root(0.2, 0.8, 0.5) == Approx(0.86).margin(1e-15));
    CHECK(ssw::second_moment_root(0.4, 0.4, 0.3) == Approx(0.4).margin(1e-15));
    CHECK_THROWS_AS(ssw::first_moment_pole(0.2, 0.8, 0.7), Error);
}

TEST_CASE("region, root and pole are ordered for random parameters") {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 100; ++i) {
        const auto cfg = random_config(rng);
        const auto region = ssw::coupling_region(cfg.p, cfg.q);
        const double root1 = ssw::first_moment_root(cfg.p, cfg.q, cfg.sys.ratio);
        const double root2 = ssw::second_moment_root(cfg.p, cfg.q, cfg.sys.ratio);
        const double pole = ssw::first_moment_pole(cfg.p, cfg.q, cfg.sys.ratio);
        CHECK(region.hi < root1);
        CHECK(root1 < pole);
        CHECK(root2 >= root1);
    }
}

TEST_CASE("first moment derivative worked value and sign") {
    const auto in = ssw::make_moment_input(kHalf, 0.2, 0.8, 0.1);
    // 2 * 0.5 * (0.25*0.36 - 0.25) / (0.5 * 0.9^2)
    CHECK(ssw::first_moment_slope(in) == Approx(-0.16 / 0.405).margin(1e-14));

    std::mt19937_64 rng(12);
    for (int i = 0; i < 100; ++i) {
        const auto cfg = random_config(rng);
        const auto region = ssw::coupling_region(cfg.p, cfg.q);
        const double r = region.lo + ssw::detail::uniform01(rng) * (region.hi - region.lo);
        CHECK(ssw::first_moment_slope_at(cfg.sys, cfg.p, cfg.q, r) < 0.0);
    }

    CHECK_THROWS_AS(ssw::first_moment_slope_at(kHalf, 0.2, 0.8, 1.0), Error);
}

TEST_CASE("first moment derivative matches central differences") {
    std::mt19937_64 rng(13);
    const double h = 1e-6;
    for (int i = 0; i < 50; ++i) {
        const auto cfg = random_config(rng, 0.05);
        const auto region = ssw::coupling_region(cfg.p, cfg.q);
        const double r =
            region.lo + ssw::detail::uniform(rng, 0.1, 0.9) * (region.hi - region.lo);
        const double fd = (ssw::first_moment_at(cfg.sys, cfg.p, cfg.q, r + h) -
                           ssw::first_moment_at(cfg.sys, cfg.p, cfg.q, r - h)) /
                          (2.0 * h);
        const double exact = ssw::first_moment_slope_at(cfg.sys, cfg.p, cfg.q, r);
        CHECK(fd == Approx(exact).epsilon(1e-6));
    }
}

TEST_CASE("second moment reproduces hand-computed values") {
    const auto in = ssw::make_moment_input(kHalf, 0.2, 0.8, 0.1);
    CHECK(ssw::second_moment(in) == Approx(std::sqrt(0.76 / 1.5)).margin(1e-14));

    const auto boundary = ssw::make_moment_input(kHalf, 0.2, 0.8, 0.2);
    CHECK(ssw::second_moment(boundary) == Approx(std::sqrt(0.66 / 1.5)).margin(1e-14));
    CHECK(ssw::second_moment(boundary) ==
          Approx(ssw::wasserstein2_bounds(kHalf, 0.2, 0.8).upper).margin(1e-14));
}

TEST_CASE("second moment dominates the first moment on the region") {
    std::mt19937_64 rng(14);
    for (int i = 0; i < 100; ++i) {
        const auto cfg = random_config(rng);
        const auto region = ssw::coupling_region(cfg.p, cfg.q);
        const double r = region.lo + ssw::detail::uniform01(rng) * (region.hi - region.lo);
        const auto in = ssw::make_moment_input(cfg.sys, cfg.p, cfg.q, r);
        CHECK(ssw::second_moment(in) >= ssw::first_moment(in) - 1e-14);
    }
}

TEST_CASE("second moment rejects a negative radicand") {
    const double beyond = ssw::second_moment_root(0.2, 0.8, 0.5) + 0.05;
    CHECK_THROWS_AS(ssw::second_moment_at(kHalf, 0.2, 0.8, beyond), Error);
}

TEST_CASE("squared second moment has constant negative slope") {
    const ssw::IfsSystem sys = kHalf;
    CHECK(ssw::second_moment_squared_slope(sys) == Approx(-0.5 / 0.75).margin(1e-14));

    std::mt19937_64 rng(15);
    for (int i = 0; i < 50; ++i) {
        const auto cfg = random_config(rng, 0.05);
        CHECK(ssw::second_moment_squared_slope(cfg.sys) < 0.0);

        const auto region = ssw::coupling_region(cfg.p, cfg.q);
        const double width = region.hi - region.lo;
        const double r = region.lo + ssw::detail::uniform(rng, 0.2, 0.8) * width;
        const double h = 1e-4 * width;
        const double hi_val = ssw::second_moment_at(cfg.sys, cfg.p, cfg.q, r + h);
        const double lo_val = ssw::second_moment_at(cfg.sys, cfg.p, cfg.q, r - h);
        const double fd = (hi_val * hi_val - lo_val * lo_val) / (2.0 * h);
        CHECK(fd == Approx(ssw::second_moment_squared_slope(cfg.sys)).epsilon(1e-8));
    }
}

TEST_CASE("measure mean closed form and discretized cross-check") {
    CHECK(ssw::measure_mean(ssw::make_measure(kHalf, 0.2)) == Approx(0.8).margin(1e-14));
    const ssw::IfsSystem cantor = ssw::validate_system(1.0 / 3, 0.0, 2.0 / 3);
    CHECK(ssw::measure_mean(ssw::make_measure(cantor, 0.5)) == Approx(0.5).margin(1e-14));

    const auto m = ssw::make_measure(kHalf, 0.2);
    const auto dm = ssw::discretize_measure(m, 14);
    const double discrete_mean = ssw::detail::pairwise_sum(
        0, dm.atoms.size(), [&](std::size_t i) { return dm.atoms[i].weight * dm.atoms[i].position; });
    CHECK(std::abs(discrete_mean - ssw::measure_mean(m)) <= std::pow(0.5, 14));

    std::mt19937_64 rng(16);
    for (int i = 0; i < 100; ++i) {
        const auto cfg = random_config(rng);
        const double mean = ssw::measure_mean(ssw::make_measure(cfg.sys, cfg.p));
        CHECK(mean >= 0.0);
        CHECK(mean <= 1.0);
    }
}

TEST_CASE("linear test value and duality closure") {
    CHECK(ssw::linear_test_value(kHalf, 0.2, 0.8, 1.0) == Approx(0.6).margin(1e-14));
    CHECK(ssw::linear_test_value(kHalf, 0.2, 0.8, 0.0) == 0.0);
    CHECK_THROWS_AS(ssw::linear_test_value(kHalf, 0.2, 0.8, 1.5), Error);

    std::mt19937_64 rng(17);
    for (int i = 0; i < 100; ++i) {
        const auto cfg = random_config(rng);
        const double best = std::max(ssw::linear_test_value(cfg.sys, cfg.p, cfg.q, 1.0),
                                     ssw::linear_test_value(cfg.sys, cfg.p, cfg.q, -1.0));
        CHECK(best == ssw::wasserstein1(cfg.sys, cfg.p, cfg.q)); // bit-exact by construction
    }
}

TEST_CASE("exact W1 worked values, symmetry, and the Cantor family") {
    CHECK(ssw::wasserstein1(kHalf, 0.2, 0.8) == Approx(0.6).margin(1e-15));
    CHECK(ssw::wasserstein1(kHalf, 0.3, 0.3) == 0.0);

    for (int i = 1; i <= 10; ++i) {
        const double c = 0.05 * i;
        const ssw::IfsSystem cantor = ssw::validate_system(c, 0.0, 1.0 - c);
        CHECK(ssw::wasserstein1(cantor, 0.2, 0.9) == Approx(0.7).margin(1e-15));
    }

    std::mt19937_64 rng(18);
    for (int i = 0; i < 50; ++i) {
        const auto cfg = random_config(rng);
        CHECK(ssw::wasserstein1(cfg.sys, cfg.p, cfg.q) ==
              Approx(ssw::wasserstein1(cfg.sys, cfg.q, cfg.p)).margin(1e-15));
    }
}

TEST_CASE("W2 bounds worked values and ordering") {
    const auto bounds = ssw::wasserstein2_bounds(kHalf, 0.2, 0.8);
    CHECK(bounds.lower == Approx(0.6).margin(1e-15));
    CHECK(bounds.upper == Approx(std::sqrt(0.66 / 1.5)).margin(1e-14));

    const auto equal = ssw::wasserstein2_bounds(kHalf, 0.4, 0.4);
    CHECK(equal.lower == 0.0);
    CHECK(equal.upper == 0.0);

    std::mt19937_64 rng(19);
    for (int i = 0; i < 100; ++i) {
        const auto cfg = random_config(rng);
        const auto b = ssw::wasserstein2_bounds(cfg.sys, cfg.p, cfg.q);
        CHECK(b.lower <= b.upper + 1e-15);
        const auto swapped = ssw::wasserstein2_bounds(cfg.sys, cfg.q, cfg.p);
        CHECK(b.lower == Approx(swapped.lower).margin(1e-15));
        CHECK(b.upper == Approx(swapped.upper).margin(1e-15));
    }

    // middle-(1-2c) family: the (t2-t1)/(1-c) prefactor cancels
    for (int i = 1; i <= 10; ++i) {
        const double c = 0.05 * i;
        const ssw::IfsSystem cantor = ssw::validate_system(c, 0.0, 1.0 - c);
        const double d = 0.7;
        const double expected = std::sqrt((2.0 * c * d * d + (1.0 - c) * d) / (1.0 + c));
        CHECK(ssw::wasserstein2_bounds(cantor, 0.2, 0.9).upper == Approx(expected).margin(1e-14));
    }
}

TEST_CASE("moments scale linearly in the translation gap") {
    std::mt19937_64 rng(20);
    for (int i = 0; i < 30; ++i) {
        const double c = ssw::detail::uniform(rng, 0.1, 0.4);
        const double p = ssw::detail::uniform(rng, 0.1, 0.9);
        const double q = ssw::detail::uniform(rng, 0.1, 0.9);
        const auto region = ssw::coupling_region(p, q);
        const double r = region.lo + ssw::detail::uniform01(rng) * (region.hi - region.lo);

        const ssw::IfsSystem narrow = ssw::validate_system(c, 0.0, c);
        const ssw::IfsSystem wide = ssw::validate_system(c, 0.0, 1.0 - c);
        const ssw::IfsSystem middle = ssw::validate_system(c, 0.0, 0.5);

        const double f_narrow = ssw::first_moment_at(narrow, p, q, r) / narrow.gap();
        const double f_wide = ssw::first_moment_at(wide, p, q, r) / wide.gap();
        const double f_middle = ssw::first_moment_at(middle, p, q, r) / middle.gap();
        CHECK(f_narrow == Approx(f_wide).epsilon(1e-12));
        CHECK(f_narrow == Approx(f_middle).epsilon(1e-12));

        const double s_narrow = ssw::second_moment_at(narrow, p, q, r) / narrow.gap();
        const double s_wide = ssw::second_moment_at(wide, p, q, r) / wide.gap();
        CHECK(s_narrow == Approx(s_wide).epsilon(1e-12));
    }
}

TEST_CASE("moments are symmetric in the weight pair") {
    std::mt19937_64 rng(21);
    for (int i = 0; i < 50; ++i) {
        const auto cfg = random_config(rng);
        const auto region = ssw::coupling_region(cfg.p, cfg.q);
        const double r = region.lo + ssw::detail::uniform01(rng) * (region.hi - region.lo);
        const auto in = ssw::make_moment_input(cfg.sys, cfg.p, cfg.q, r);
        const auto swapped = ssw::make_moment_input(cfg.sys, cfg.q, cfg.p, r);
        CHECK(ssw::first_moment(in) == Approx(ssw::first_moment(swapped)).margin(1e-15));
        CHECK(ssw::second_moment(in) == Approx(ssw::second_moment(swapped)).margin(1e-15));
    }
}

TEST_CASE("first moment is decreasing with W1 as its infimum on the region") {
    std::mt19937_64 rng(22);
    for (int i = 0; i < 50; ++i) {
        const auto cfg = random_config(rng, 0.05);
        const auto region = ssw::coupling_region(cfg.p, cfg.q);
        const double w1 = ssw::wasserstein1(cfg.sys, cfg.p, cfg.q);
        double previous = std::numeric_limits<double>::infinity();
        for (int g = 0; g <= 20; ++g) {
            const double r = region.lo + (region.hi - region.lo) * g / 20.0;
            const double value = ssw::first_moment(ssw::make_moment_input(cfg.sys, cfg.p, cfg.q, r));
            CHECK(value < previous);
            CHECK(value >= w1 - 1e-12);
            previous = value;
        }
    }
}

TEST_CASE("N-map lower bound: counterexample, reduction, and degenerate cases") {
    SECTION("three-map counterexample evaluates to zero") {
        for (const double c : {0.05, 0.15, 0.25}) {
            const auto spec = ssw::make_general_spec({{c, 0.0}, {c, c}, {c, 2.0 * c}},
                                                     {0.4, 0.5, 0.1}, {0.6, 0.1, 0.3});
            CHECK(ssw::nmap_lower_bound(spec) <= 1e-14);
        }
    }

    SECTION("two equal-ratio maps reduce to the exact W1") {
        std::mt19937_64 rng(23);
        for (int i = 0; i < 50; ++i) {
            const auto cfg = random_config(rng);
            const auto spec = ssw::make_general_spec(
                {{cfg.sys.ratio, cfg.sys.shift1}, {cfg.sys.ratio, cfg.sys.shift2}},
                {cfg.p, 1.0 - cfg.p}, {cfg.q, 1.0 - cfg.q});
            CHECK(ssw::nmap_lower_bound(spec) ==
                  Approx(ssw::wasserstein1(cfg.sys, cfg.p, cfg.q)).margin(1e-12));
        }
    }

    SECTION("identical weight vectors give zero") {
        const auto spec = ssw::make_general_spec({{0.2, 0.0}, {0.3, 0.5}}, {0.35, 0.65},
                                                 {0.35, 0.65});
        CHECK(ssw::nmap_lower_bound(spec) == 0.0);
    }

    SECTION("equal ratios match the simplified quotient") {
        std::mt19937_64 rng(24);
        for (int i = 0; i < 50; ++i) {
            const double c = ssw::detail::uniform(rng, 0.05, 0.3);
            const std::vector<ssw::GeneralIfsSpec::Map> maps = {
                {c, 0.0}, {c, ssw::detail::uniform(rng, c, 1.0 - 2.0 * c)}, {c, 1.0 - c}};
            auto draw_weights = [&rng]() {
                std::vector<double> w(3);
                double total = 0.0;
                for (auto& x : w) {
                    x = ssw::detail::uniform(rng, 0.05, 1.0);
                    total += x;
                }
                for (auto& x : w) x /= total;
                return w;
            };
            const auto pv = draw_weights();
            const auto qv = draw_weights();
            const auto spec = ssw::make_general_spec(maps, pv, qv);
            double signed_sum = 0.0;
            for (int k = 0; k < 3; ++k) signed_sum += (pv[k] - qv[k]) * maps[k].shift;
            CHECK(ssw::nmap_lower_bound(spec) ==
                  Approx(std::abs(signed_sum) / (1.0 - c)).margin(1e-12));
        }
    }

    SECTION("validation rejects broken specs") {
        CHECK_THROWS_AS(ssw::make_general_spec({{0.5, 0.0}}, {1.0}, {1.0}), Error);
        CHECK_THROWS_AS(
            ssw::make_general_spec({{0.5, 0.0}, {0.5, 0.4}}, {0.5, 0.5}, {0.5, 0.5}), Error);
        CHECK_THROWS_AS(
            ssw::make_general_spec({{0.3, 0.0}, {0.3, 0.5}}, {0.6, 0.6}, {0.5, 0.5}), Error);
        CHECK_THROWS_AS(
            ssw::make_general_spec({{1.2, 0.0}, {0.3, 0.5}}, {0.5, 0.5}, {0.5, 0.5}), Error);
    }
}

TEST_CASE("two-ratio lower bound reduces and stays below the oracle") {
    SECTION("equal ratios recover the exact W1") {
        std::mt19937_64 rng(25);
        for (int i = 0; i < 50; ++i) {
            const auto cfg = random_config(rng);
            const double bound = ssw::two_ratio_lower_bound(
                cfg.sys.ratio, cfg.sys.ratio, cfg.sys.shift1, cfg.sys.shift2, cfg.p, cfg.q);
            CHECK(bound == Approx(ssw::wasserstein1(cfg.sys, cfg.p, cfg.q)).margin(1e-12));
        }
    }

    SECTION("equal weights give zero") {
        CHECK(ssw::two_ratio_lower_bound(0.3, 0.4, 0.0, 0.6, 0.37, 0.37) == 0.0);
    }

    SECTION("bounded above by a distinct-ratio transport estimate") {
        // depth-12 two-ratio expansion built here: cylinder diameters are
        // products of the per-map ratios, so positions err by at most max_c^12
        const double c1 = 0.3, c2 = 0.4, t1 = 0.0, t2 = 0.6, p = 0.2, q = 0.8;
        const int depth = 12;
        auto expand = [&](double weight1) {
            std::vector<double> xs = {0.5}, ws = {1.0};
            for (int level = 0; level < depth; ++level) {
                std::vector<double> nx, nw;
                nx.reserve(2 * xs.size());
                nw.reserve(2 * xs.size());
                for (std::size_t k = 0; k < xs.size(); ++k) {
                    nx.push_back(c1 * xs[k] + t1);
                    nw.push_back(weight1 * ws[k]);
                }
                for (std::size_t k = 0; k < xs.size(); ++k) {
                    nx.push_back(c2 * xs[k] + t2);
                    nw.push_back((1.0 - weight1) * ws[k]);
                }
                xs = std::move(nx);
                ws = std::move(nw);
            }
            ssw::DiscreteMeasure m;
            m.depth = depth;
            m.atoms.resize(xs.size());
            for (std::size_t k = 0; k < xs.size(); ++k) m.atoms[k] = {xs[k], ws[k]};
            std::stable_sort(m.atoms.begin(), m.atoms.end(),
                             [](const auto& a, const auto& b) { return a.position < b.position; });
            return m;
        };
        const auto da = expand(p);
        const auto db = expand(q);
        const double oracle = ssw::monotone_transport(da, db).cost_rho1;
        const double bound = ssw::two_ratio_lower_bound(c1, c2, t1, t2, p, q);
        CHECK(oracle >= bound - 2.0 * std::pow(0.4, depth));
    }
}
