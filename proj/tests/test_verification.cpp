#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "ssw/verification.hpp"

TEST_CASE("verification suite passes at reduced depth and scales tolerances") {
    ssw::verify::CheckOptions opt;
    opt.coupling_depth = 6;
    opt.transport_depth = 10;
    opt.config_count = 5;
    opt.seed = 12345;

    const auto results = ssw::verify::run_all_checks(opt);
    REQUIRE(results.size() == 9);

    std::set<std::string> names;
    for (const auto& check : results) {
        INFO(check.name << ": gap " << check.max_gap << " vs tol " << check.tolerance << " ("
                        << check.detail << ")");
        CHECK(check.passed);
        names.insert(check.name);
    }
    CHECK(names.size() == results.size());
}

TEST_CASE("verification results are reproducible for a fixed seed") {
    ssw::verify::CheckOptions opt;
    opt.coupling_depth = 5;
    opt.transport_depth = 8;
    opt.config_count = 3;
    opt.seed = 777;

    const auto first = ssw::verify::run_all_checks(opt);
    const auto second = ssw::verify::run_all_checks(opt);
    REQUIRE(first.size() == second.size());
    for (std::size_t i = 0; i < first.size(); ++i) {
        CHECK(first[i].name == second[i].name);
        CHECK(first[i].passed == second[i].passed);
        CHECK(first[i].max_gap == second[i].max_gap);
        CHECK(first[i].tolerance == second[i].tolerance);
    }
}
