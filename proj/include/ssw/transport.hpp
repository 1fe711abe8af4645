#pragma once

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "ssw/closed_forms.hpp"
#include "ssw/detail/numeric.hpp"
#include "ssw/detail/rng.hpp"
#include "ssw/errors.hpp"
#include "ssw/ifs.hpp"

namespace ssw {

/// Mass threshold below which a split fragment is discarded (cumulative-sum
/// drift, not signal).
inline constexpr double kMassEps = 1e-15;

/// Coupling between two discrete measures as explicit (source, target, mass)
/// triples, plus its transport costs for exponents 1 and 2.
struct TransportPlan {
    struct Pair {
        std::size_t source;
        std::size_t target;
        double mass;
    };

    std::vector<Pair> pairs;
    double cost_rho1 = 0.0;
    double cost_rho2 = 0.0;
};

namespace detail {

inline void require_normalized(double mass, const char* name) {
    if (std::abs(mass - 1.0) > 1e-9) {
        throw Error(Errc::not_normalized, name,
                    "weights sum to " + std::to_string(mass) + ", expected 1");
    }
}

/// Pairs the two weight sequences in the given order by walking their
/// cumulative mass profiles: each emitted triple covers one segment between
/// consecutive breakpoints. Fragments below kMassEps are dropped and the rest
/// renormalized to total mass one. Shared by the monotone (sorted order) and
/// permuted-greedy (shuffled order) couplings so that equal orders give
/// bit-identical plans.
template <class WeightA, class WeightB>
std::vector<TransportPlan::Pair> pair_by_order(std::size_t na, WeightA&& wa, std::size_t nb,
                                               WeightB&& wb) {
    std::vector<TransportPlan::Pair> pairs;
    pairs.reserve(na + nb);
    CompensatedSum cum_a, cum_b;
    std::size_t i = 0, j = 0;
    double a_edge = na > 0 ? (cum_a.add(wa(0)), cum_a.value()) : 0.0;
    double b_edge = nb > 0 ? (cum_b.add(wb(0)), cum_b.value()) : 0.0;
    double prev = 0.0;
    while (i < na && j < nb) {
        const double cut = std::min(a_edge, b_edge);
        const double mass = cut - prev;
        if (mass > kMassEps) pairs.push_back({i, j, mass});
        if (a_edge <= cut + kMassEps) {
            ++i;
            if (i < na) {
                cum_a.add(wa(i));
                a_edge = cum_a.value();
            }
        }
        if (b_edge <= cut + kMassEps) {
            ++j;
            if (j < nb) {
                cum_b.add(wb(j));
                b_edge = cum_b.value();
            }
        }
        prev = cut;
    }
    const double total =
        pairwise_sum(0, pairs.size(), [&](std::size_t k) { return pairs[k].mass; });
    if (total > 0.0 && total != 1.0) {
        for (auto& pr : pairs) pr.mass /= total;
    }
    return pairs;
}

} // namespace detail

/// Optimal coupling of two discrete measures on the line (monotone
/// rearrangement / quantile coupling): sorted atoms are paired in cumulative
/// mass order. Optimal for every convex cost; costs are reported for
/// exponents 1 and 2.
inline TransportPlan monotone_transport(const DiscreteMeasure& a, const DiscreteMeasure& b) {
    detail::require_normalized(a.total_mass(), "a");
    detail::require_normalized(b.total_mass(), "b");

    TransportPlan plan;
    plan.pairs = detail::pair_by_order(
        a.atoms.size(), [&](std::size_t i) { return a.atoms[i].weight; }, b.atoms.size(),
        [&](std::size_t j) { return b.atoms[j].weight; });

    plan.cost_rho1 = detail::pairwise_sum(0, plan.pairs.size(), [&](std::size_t k) {
        const auto& pr = plan.pairs[k];
        return pr.mass * std::abs(a.atoms[pr.source].position - b.atoms[pr.target].position);
    });
    plan.cost_rho2 = std::sqrt(detail::pairwise_sum(0, plan.pairs.size(), [&](std::size_t k) {
        const auto& pr = plan.pairs[k];
        const double d = a.atoms[pr.source].position - b.atoms[pr.target].position;
        return pr.mass * (d * d); // association matches greedy_coupling_cost
    }));
    return plan;
}

/// rho-th root of the rho-th moment of |x-y| over a discrete coupling.
inline double coupling_moment(const DiscreteCoupling& dc, int rho) {
    if (rho != 1 && rho != 2) {
        throw Error(Errc::out_of_range, "rho", "moment exponent must be 1 or 2");
    }
    detail::require_normalized(dc.total_mass(), "coupling");
    const double sum = detail::pairwise_sum(0, dc.atoms.size(), [&](std::size_t i) {
        const auto& atom = dc.atoms[i];
        const double d = std::abs(atom.x - atom.y);
        return atom.weight * (rho == 1 ? d : d * d);
    });
    return rho == 1 ? sum : std::sqrt(sum);
}

/// Signed first moment, integral of (x - y) without the absolute value.
/// Equals the difference of the marginal means.
inline double signed_moment(const DiscreteCoupling& dc) {
    detail::require_normalized(dc.total_mass(), "coupling");
    return detail::pairwise_sum(0, dc.atoms.size(), [&](std::size_t i) {
        return dc.atoms[i].weight * (dc.atoms[i].x - dc.atoms[i].y);
    });
}

/// Residual of the self-similarity identity linking the signed and absolute
/// first moments of the coupling:
///   integral(x - y) = 4(t2-t1)(q-r)(p-r) / [(p-q)(1-c+c(p+q-2r))]
///                     - (p+q-2r)/(p-q) * integral|x - y|.
/// Both integrals are replaced by their depth-k discretizations; the result
/// decays like ratio^depth.
inline double moment_identity_residual(const IfsSystem& sys, double p, double q, double r,
                                       int depth) {
    if (std::abs(p - q) < 1e-12) {
        throw Error(Errc::degenerate_input, "p", "identity requires p != q");
    }
    const CouplingParam cp = make_coupling(p, q, r);
    const DiscreteCoupling dc = discretize_coupling(sys, cp, depth);
    const double c = sys.ratio;
    const double lhs = signed_moment(dc);
    const double direct = 4.0 * sys.gap() * (q - r) * (p - r) /
                          ((p - q) * (1.0 - c + c * (p + q - 2.0 * r)));
    const double rhs = direct - (p + q - 2.0 * r) / (p - q) * coupling_moment(dc, 1);
    return std::abs(lhs - rhs);
}

/// Cost of the feasible coupling produced by pairing the atoms in the orders
/// given by the two permutations (greedy mass matching). With identity
/// permutations on sorted atoms this is exactly the monotone plan.
inline double greedy_coupling_cost(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                   std::span<const std::size_t> perm_a,
                                   std::span<const std::size_t> perm_b, int rho) {
    if (rho != 1 && rho != 2) {
        throw Error(Errc::out_of_range, "rho", "cost exponent must be 1 or 2");
    }
    detail::require_normalized(a.total_mass(), "a");
    detail::require_normalized(b.total_mass(), "b");

    const auto pairs = detail::pair_by_order(
        perm_a.size(), [&](std::size_t i) { return a.atoms[perm_a[i]].weight; }, perm_b.size(),
        [&](std::size_t j) { return b.atoms[perm_b[j]].weight; });

    const double sum = detail::pairwise_sum(0, pairs.size(), [&](std::size_t k) {
        const auto& pr = pairs[k];
        const double d =
            std::abs(a.atoms[perm_a[pr.source]].position - b.atoms[perm_b[pr.target]].position);
        return pr.mass * (rho == 1 ? d : d * d);
    });
    return rho == 1 ? sum : std::sqrt(sum);
}

/// Cost of a random feasible coupling: both atom orders are shuffled with a
/// seeded generator, then matched greedily. Serves as an optimality witness
/// for monotone_transport (never cheaper, up to rounding).
inline double random_feasible_coupling_cost(const DiscreteMeasure& a, const DiscreteMeasure& b,
                                            std::uint64_t seed, int rho) {
    std::mt19937_64 rng(seed);
    const auto perm_a = detail::random_permutation(a.atoms.size(), rng);
    const auto perm_b = detail::random_permutation(b.atoms.size(), rng);
    return greedy_coupling_cost(a, b, perm_a, perm_b, rho);
}

} // namespace ssw
