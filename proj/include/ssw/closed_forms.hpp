#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "ssw/errors.hpp"
#include "ssw/ifs.hpp"

namespace ssw {

/// Argument tuple for the coupling moment formulas: a validated system plus a
/// validated coupling parameter triple.
struct MomentFormulaInput {
    IfsSystem sys;
    CouplingParam coupling;
};

inline MomentFormulaInput make_moment_input(const IfsSystem& sys, double p, double q, double r) {
    return MomentFormulaInput{sys, make_coupling(p, q, r)};
}

/// Location of the first moment's single simple pole, (p+q)/2 + (1-c)/(2c).
/// Always strictly right of the coupling region.
inline double first_moment_pole(double p, double q, double ratio) {
    if (!(ratio > 0.0) || ratio > 0.5 + kBoundSlack) {
        throw Error(Errc::out_of_range, "c", "contraction ratio must lie in (0, 1/2]");
    }
    return 0.5 * (p + q) + (1.0 - ratio) / (2.0 * ratio);
}

/// Root of the first moment, (p+q)/2 + c(p-q)^2 / (2(1-c)); strictly between
/// the coupling region and the pole.
inline double first_moment_root(double p, double q, double ratio) {
    return 0.5 * (p + q) + ratio * (p - q) * (p - q) / (2.0 * (1.0 - ratio));
}

/// Root of the second moment, (p+q)/2 + c(p-q)^2 / (1-c); the radicand is
/// positive left of it and negative right of it.
inline double second_moment_root(double p, double q, double ratio) {
    return 0.5 * (p + q) + ratio * (p - q) * (p - q) / (1.0 - ratio);
}

/// First moment of |x-y| under the self-similar coupling, evaluated as the
/// rational function of r on its full domain left of the pole:
///   (t2-t1)/(1-c) * [c(p-q)^2 + (1-c)(p+q-2r)] / [(1-c) + c(p+q-2r)].
/// Evaluation is refused at or beyond the pole rather than extrapolated.
inline double first_moment_at(const IfsSystem& sys, double p, double q, double r) {
    const double c = sys.ratio;
    const double spread = p + q - 2.0 * r;
    const double denom = (1.0 - c) + c * spread; // = 2c * (pole - r)
    if (denom <= kBoundSlack) {
        throw Error(Errc::pole_evaluation, "r",
                    "first moment is undefined at or beyond its pole");
    }
    const double numer = c * (p - q) * (p - q) + (1.0 - c) * spread;
    return sys.gap() / (1.0 - c) * numer / denom;
}

/// First moment on the validated coupling region (the operation surface).
inline double first_moment(const MomentFormulaInput& in) {
    return first_moment_at(in.sys, in.coupling.p, in.coupling.q, in.coupling.r);
}

/// d/dr of the first moment:
///   2(t2-t1) [c^2(p-q)^2 - (1-c)^2] / [(1-c)((1-c) + c(p+q-2r))^2].
/// Defined for every r except the pole; strictly negative (the numerator
/// bracket is negative for c <= 1/2).
inline double first_moment_slope_at(const IfsSystem& sys, double p, double q, double r) {
    const double c = sys.ratio;
    const double pole_distance = r - first_moment_pole(p, q, c);
    if (std::abs(pole_distance) <= 1e-12) {
        throw Error(Errc::pole_evaluation, "r", "derivative is undefined at the pole");
    }
    const double denom_root = (1.0 - c) + c * (p + q - 2.0 * r);
    const double numer = c * c * (p - q) * (p - q) - (1.0 - c) * (1.0 - c);
    return 2.0 * sys.gap() * numer / ((1.0 - c) * denom_root * denom_root);
}

inline double first_moment_slope(const MomentFormulaInput& in) {
    return first_moment_slope_at(in.sys, in.coupling.p, in.coupling.q, in.coupling.r);
}

/// Second moment of |x-y| under the self-similar coupling (positive root):
///   (t2-t1)/(1-c) * sqrt([2c(p-q)^2 + (1-c)(p+q-2r)] / (1+c)).
/// Defined wherever the radicand is nonnegative (r up to second_moment_root).
inline double second_moment_at(const IfsSystem& sys, double p, double q, double r) {
    const double c = sys.ratio;
    const double radicand = (2.0 * c * (p - q) * (p - q) + (1.0 - c) * (p + q - 2.0 * r)) / (1.0 + c);
    if (radicand < -kBoundSlack) {
        throw Error(Errc::domain_error, "r", "second moment radicand is negative");
    }
    return sys.gap() / (1.0 - c) * std::sqrt(std::max(0.0, radicand));
}

inline double second_moment(const MomentFormulaInput& in) {
    return second_moment_at(in.sys, in.coupling.p, in.coupling.q, in.coupling.r);
}

/// d/dr of the squared second moment, -2(t2-t1)^2 / (1-c^2); constant in r.
inline double second_moment_squared_slope(const IfsSystem& sys) {
    const double g = sys.gap();
    return -2.0 * g * g / (1.0 - sys.ratio * sys.ratio);
}

/// Mean of the self-similar measure, (p*t1 + (1-p)*t2) / (1-c).
inline double measure_mean(const SelfSimilarMeasure& m) {
    return (m.weight * m.system.shift1 + (1.0 - m.weight) * m.system.shift2) / (1.0 - m.system.ratio);
}

/// Value of the 1-Lipschitz test functional x -> lambda*x integrated against
/// the difference of the two measures: lambda (p-q)(t1-t2) / (1-c).
/// Maximizing over lambda in [-1, 1] attains the exact 1-Wasserstein distance.
inline double linear_test_value(const IfsSystem& sys, double p, double q, double lambda) {
    if (std::abs(lambda) > 1.0 + kBoundSlack) {
        throw Error(Errc::out_of_range, "lambda", "test-function slope must lie in [-1, 1]");
    }
    return lambda * (p - q) * (sys.shift1 - sys.shift2) / (1.0 - sys.ratio);
}

/// Exact 1-Wasserstein distance, (t2-t1) |p-q| / (1-c). Coincides with the
/// first moment at r = min{p,q} and with the maximized linear test value.
inline double wasserstein1(const IfsSystem& sys, double p, double q) {
    return sys.gap() * std::abs(p - q) / (1.0 - sys.ratio);
}

struct W2Bounds {
    double lower;
    double upper;
};

/// 2-Wasserstein sandwich: lower = exact W1, upper = the second moment at
/// r = min{p,q}, i.e. (t2-t1)/(1-c) * sqrt([2c(p-q)^2 + (1-c)|p-q|] / (1+c)).
inline W2Bounds wasserstein2_bounds(const IfsSystem& sys, double p, double q) {
    const double c = sys.ratio;
    const double d = std::abs(p - q);
    const double upper =
        sys.gap() / (1.0 - c) * std::sqrt((2.0 * c * d * d + (1.0 - c) * d) / (1.0 + c));
    return W2Bounds{wasserstein1(sys, p, q), upper};
}

/// N-map system with per-map contraction ratios, used only by the generalized
/// 1-Wasserstein lower bound. Maps must keep [0,1] invariant and their images
/// may overlap in at most a point.
struct GeneralIfsSpec {
    struct Map {
        double ratio;
        double shift;
    };

    std::vector<Map> maps;
    std::vector<double> p_weights;
    std::vector<double> q_weights;
};

inline GeneralIfsSpec make_general_spec(std::vector<GeneralIfsSpec::Map> maps,
                                        std::vector<double> p_weights,
                                        std::vector<double> q_weights) {
    using Map = GeneralIfsSpec::Map;
    const std::size_t n = maps.size();
    if (n < 2) {
        throw Error(Errc::out_of_range, "maps", "need at least two maps");
    }
    if (p_weights.size() != n || q_weights.size() != n) {
        throw Error(Errc::out_of_range, "weights", "weight vectors must match the map count");
    }
    for (const auto& m : maps) {
        if (!(m.ratio > 0.0) || !(m.ratio < 1.0)) {
            throw Error(Errc::out_of_range, "c_i", "contraction ratios must lie in (0, 1)");
        }
        if (m.shift < -kBoundSlack || m.shift + m.ratio > 1.0 + kBoundSlack) {
            throw Error(Errc::out_of_range, "t_i", "map image must stay inside [0, 1]");
        }
    }
    for (const double* vec : {p_weights.data(), q_weights.data()}) {
        double sum = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (!(vec[i] > 0.0) || !(vec[i] < 1.0)) {
                throw Error(Errc::out_of_range, "weights", "weights must lie in (0, 1)");
            }
            sum += vec[i];
        }
        if (std::abs(sum - 1.0) > 1e-12) {
            throw Error(Errc::out_of_range, "weights", "weights must sum to 1");
        }
    }
    // Images sorted by left endpoint must be disjoint up to point contact.
    std::vector<Map> sorted = maps;
    std::sort(sorted.begin(), sorted.end(), [](const Map& a, const Map& b) { return a.shift < b.shift; });
    for (std::size_t i = 1; i < n; ++i) {
        if (sorted[i].shift < sorted[i - 1].shift + sorted[i - 1].ratio - kBoundSlack) {
            throw Error(Errc::out_of_range, "t_i", "map images overlap in more than a point");
        }
    }
    return GeneralIfsSpec{std::move(maps), std::move(p_weights), std::move(q_weights)};
}

/// Generalized linear-test-function lower bound on W1 for N maps with
/// distinct ratios:
///   |(sum p_i t_i)(1 - sum q_i c_i) - (sum q_i t_i)(1 - sum p_i c_i)|
///   / [(1 - sum p_i c_i)(1 - sum q_i c_i)].
/// With equal ratios c it collapses to |sum (p_i - q_i) t_i| / (1-c).
inline double nmap_lower_bound(const GeneralIfsSpec& spec) {
    const std::size_t n = spec.maps.size();
    double pt = 0.0, qt = 0.0, pc = 0.0, qc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        pt += spec.p_weights[i] * spec.maps[i].shift;
        qt += spec.q_weights[i] * spec.maps[i].shift;
        pc += spec.p_weights[i] * spec.maps[i].ratio;
        qc += spec.q_weights[i] * spec.maps[i].ratio;
    }
    const double dp = 1.0 - pc;
    const double dq = 1.0 - qc;
    if (dp <= 0.0 || dq <= 0.0) {
        throw Error(Errc::degenerate_system, "c_i", "mean contraction must stay below 1");
    }
    return std::abs(pt * dq - qt * dp) / (dp * dq);
}

/// Two-map specialization with distinct ratios. Feasibility check mirrors
/// make_general_spec: both images in [0,1], overlapping in at most a point.
inline double two_ratio_lower_bound(double ratio1, double ratio2, double shift1, double shift2,
                                    double p, double q) {
    if (!(p > 0.0) || !(p < 1.0)) {
        throw Error(Errc::out_of_range, "p", "weight must lie in (0, 1)");
    }
    if (!(q > 0.0) || !(q < 1.0)) {
        throw Error(Errc::out_of_range, "q", "weight must lie in (0, 1)");
    }
    const GeneralIfsSpec spec =
        make_general_spec({{ratio1, shift1}, {ratio2, shift2}}, {p, 1.0 - p}, {q, 1.0 - q});
    return nmap_lower_bound(spec);
}

} // namespace ssw
