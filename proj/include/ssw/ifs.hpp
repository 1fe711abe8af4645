#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "ssw/detail/numeric.hpp"
#include "ssw/errors.hpp"

namespace ssw {

/// Comparison slack for validation of compound parameter bounds. Keeps inputs
/// assembled with ordinary floating-point arithmetic (t2 = t1 + c, r = p + q - 1,
/// ...) from being rejected over a final-ulp disagreement.
inline constexpr double kBoundSlack = 1e-12;

/// Two-map equicontractive iterated function system on [0,1]:
///   map1(x) = ratio*x + shift1,   map2(x) = ratio*x + shift2.
/// Bounds (0 < ratio <= 1/2, 0 <= shift1 <= 1-2*ratio, shift1+ratio <= shift2
/// <= 1-ratio) force both images into [0,1] with disjoint interiors, so the
/// open unit interval witnesses the open set condition.
struct IfsSystem {
    double ratio;
    double shift1;
    double shift2;

    double map1(double x) const { return ratio * x + shift1; }
    double map2(double x) const { return ratio * x + shift2; }
    /// Distance between the two translations (t2 - t1 in the usual notation).
    double gap() const { return shift2 - shift1; }
};

inline IfsSystem validate_system(double ratio, double shift1, double shift2) {
    if (!(ratio > 0.0) || ratio > 0.5 + kBoundSlack) {
        throw Error(Errc::out_of_range, "c", "contraction ratio must lie in (0, 1/2]");
    }
    if (shift1 < -kBoundSlack || shift1 > 1.0 - 2.0 * ratio + kBoundSlack) {
        throw Error(Errc::out_of_range, "t1", "first translation must lie in [0, 1-2c]");
    }
    if (shift2 < shift1 + ratio - kBoundSlack || shift2 > 1.0 - ratio + kBoundSlack) {
        throw Error(Errc::out_of_range, "t2", "second translation must lie in [t1+c, 1-c]");
    }
    return IfsSystem{ratio, shift1, shift2};
}

/// The invariant probability measure that splits mass `weight` to map1 and
/// `1 - weight` to map2.
struct SelfSimilarMeasure {
    IfsSystem system;
    double weight;
};

inline SelfSimilarMeasure make_measure(const IfsSystem& system, double weight) {
    if (!(weight > 0.0) || !(weight < 1.0)) {
        throw Error(Errc::out_of_range, "p", "measure weight must lie in (0, 1)");
    }
    return SelfSimilarMeasure{system, weight};
}

struct CouplingRegion {
    double lo;
    double hi;
};

/// Admissible coupling parameters for marginal weights p and q:
/// [max{0, p+q-1}, min{p, q}]. Nonempty and of positive length for
/// p, q in (0,1). Endpoints are included; they carry the couplings obtained
/// as weak limits (one product-map weight degenerates to zero there).
inline CouplingRegion coupling_region(double p, double q) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw Error(Errc::out_of_range, "p", "weight must lie in (0, 1)");
    }
    if (!(q > 0.0) || !(q < 1.0)) {
        throw Error(Errc::out_of_range, "q", "weight must lie in (0, 1)");
    }
    return CouplingRegion{std::max(0.0, p + q - 1.0), std::min(p, q)};
}

/// Validated (p, q, r) triple identifying the self-similar coupling that
/// assigns weights (r, p-r, q-r, 1-p-q+r) to the four product maps
/// (map1,map1), (map1,map2), (map2,map1), (map2,map2).
struct CouplingParam {
    double p;
    double q;
    double r;

    /// Product-map weights in the order above. Values at the closed region
    /// boundary may round a hair below zero; clamp so downstream mass stays
    /// nonnegative.
    std::array<double, 4> weights() const {
        return {std::max(0.0, r), std::max(0.0, p - r), std::max(0.0, q - r),
                std::max(0.0, 1.0 - p - q + r)};
    }

    CouplingRegion region() const { return coupling_region(p, q); }
};

inline CouplingParam make_coupling(double p, double q, double r) {
    const CouplingRegion region = coupling_region(p, q);
    if (r < region.lo - kBoundSlack || r > region.hi + kBoundSlack) {
        throw Error(Errc::out_of_region, "r",
                    "coupling parameter must lie in [max{0,p+q-1}, min{p,q}]");
    }
    return CouplingParam{p, q, r};
}

/// Weighted point set approximating a measure on [0,1]; atoms are sorted by
/// position (ties keep generation order, i.e. word-lexicographic).
struct DiscreteMeasure {
    struct Atom {
        double position;
        double weight;
    };

    std::vector<Atom> atoms;
    int depth = 0;

    double total_mass() const {
        return detail::pairwise_sum(0, atoms.size(), [&](std::size_t i) { return atoms[i].weight; });
    }
};

/// Weighted point set on [0,1]^2 approximating a coupling.
struct DiscreteCoupling {
    struct Atom {
        double x;
        double y;
        double weight;
    };

    std::vector<Atom> atoms;
    int depth = 0;

    double total_mass() const {
        return detail::pairwise_sum(0, atoms.size(), [&](std::size_t i) { return atoms[i].weight; });
    }
};

/// Default cap on generated atoms (2^22). Both discretizers reject depths
/// whose atom count would exceed it instead of truncating.
inline constexpr std::uint64_t kDefaultAtomBudget = std::uint64_t{1} << 22;

namespace detail {

/// Affine transform x -> scale*x + offset; composition (f o g) appends g's
/// coefficients on the inside.
struct Affine {
    double scale = 1.0;
    double offset = 0.0;

    Affine then(double ratio, double shift) const { return {scale * ratio, offset + scale * shift}; }
    double mid() const { return scale * 0.5 + offset; }
};

inline void check_atom_budget(int depth, int branching, std::uint64_t budget) {
    if (depth < 0) {
        throw Error(Errc::out_of_range, "depth", "depth must be nonnegative");
    }
    std::uint64_t count = 1;
    for (int k = 0; k < depth; ++k) {
        count *= static_cast<std::uint64_t>(branching);
        if (count > budget) {
            throw Error(Errc::resource_limit, "depth",
                        "atom count " + std::to_string(branching) + "^" + std::to_string(depth) +
                            " exceeds budget " + std::to_string(budget));
        }
    }
}

} // namespace detail

/// One atom per word in {1,2}^depth, placed at the image of 1/2 under the
/// composed maps (the cylinder midpoint) and weighted by the product of map
/// probabilities. Every point of the support is within ratio^depth / 2 of the
/// atom carrying its cylinder's mass. Generation in word-lexicographic order
/// already yields ascending positions because map1's image precedes map2's.
inline DiscreteMeasure discretize_measure(const SelfSimilarMeasure& m, int depth,
                                          std::uint64_t atom_budget = kDefaultAtomBudget) {
    detail::check_atom_budget(depth, 2, atom_budget);

    DiscreteMeasure out;
    out.depth = depth;
    out.atoms.reserve(std::size_t{1} << depth);

    struct Frame {
        detail::Affine transform;
        double weight;
        int level;
    };
    std::vector<Frame> stack;
    stack.reserve(static_cast<std::size_t>(2 * depth + 1));
    stack.push_back({detail::Affine{}, 1.0, 0});
    const IfsSystem& sys = m.system;
    while (!stack.empty()) {
        const Frame frame = stack.back();
        stack.pop_back();
        if (frame.level == depth) {
            out.atoms.push_back({frame.transform.mid(), frame.weight});
            continue;
        }
        // Push map2 first so map1 (the left image) is expanded first.
        stack.push_back({frame.transform.then(sys.ratio, sys.shift2), frame.weight * (1.0 - m.weight),
                         frame.level + 1});
        stack.push_back({frame.transform.then(sys.ratio, sys.shift1), frame.weight * m.weight,
                         frame.level + 1});
    }
    return out;
}

/// One atom per word over the four product maps, at the image of (1/2, 1/2),
/// weighted by products of the coupling weights. Projections onto either axis
/// reproduce the corresponding discretize_measure output atom for atom.
inline DiscreteCoupling discretize_coupling(const IfsSystem& sys, const CouplingParam& cp, int depth,
                                            std::uint64_t atom_budget = kDefaultAtomBudget) {
    detail::check_atom_budget(depth, 4, atom_budget);

    const std::array<double, 4> map_weight = cp.weights();
    // (x-map shift, y-map shift) per product map, in weight order.
    const std::array<std::pair<double, double>, 4> shifts = {
        std::pair{sys.shift1, sys.shift1},
        std::pair{sys.shift1, sys.shift2},
        std::pair{sys.shift2, sys.shift1},
        std::pair{sys.shift2, sys.shift2},
    };

    DiscreteCoupling out;
    out.depth = depth;
    out.atoms.reserve(std::size_t{1} << (2 * depth));

    struct Frame {
        detail::Affine x;
        detail::Affine y;
        double weight;
        int level;
    };
    std::vector<Frame> stack;
    stack.reserve(static_cast<std::size_t>(4 * depth + 1));
    stack.push_back({detail::Affine{}, detail::Affine{}, 1.0, 0});
    while (!stack.empty()) {
        const Frame frame = stack.back();
        stack.pop_back();
        if (frame.level == depth) {
            out.atoms.push_back({frame.x.mid(), frame.y.mid(), frame.weight});
            continue;
        }
        for (int s = 3; s >= 0; --s) {
            stack.push_back({frame.x.then(sys.ratio, shifts[s].first),
                             frame.y.then(sys.ratio, shifts[s].second),
                             frame.weight * map_weight[s], frame.level + 1});
        }
    }
    return out;
}

} // namespace ssw
