#pragma once

#include <string>
#include <vector>

#include "hbf/codebook.hpp"
#include "hbf/errors.hpp"

namespace hbf {

/// Per-beam Poisson arrival rates, service rates and loads rho = lambda / r.
struct TrafficModel {
    std::vector<double> lambda; // index 1..n
    std::vector<double> r;      // index 1..n, positive
    std::vector<double> rho;    // index 1..n

    static TrafficModel from_lambda_r(std::vector<double> lambda,
                                      std::vector<double> r);
    static TrafficModel from_rho_r(std::vector<double> rho, std::vector<double> r);

    /// Arrival rates (and hence loads) scaled by a common factor.
    TrafficModel scaled(double factor) const;

    /// Total arrival rate in the strict descendants of v.
    double ell(const CodebookTree& tree, int v) const;
};

struct PerformanceReport {
    std::vector<double> expected_n; // index 1..n
    std::vector<double> throughput; // index 1..n; r_v with the undefined flag
                                    // when lambda_v = 0
    std::vector<bool> throughput_undefined; // lambda_v = 0 (0/0 via Little)
    std::vector<bool> overloaded;           // MT: beam saturated, psi reported 0
    std::string method;                     // pf-exact | mt-line-exact |
                                            // mt-exp-approx | mt-sim-moments |
                                            // simulation | ctmc-oracle
    bool stable = true;
};

struct BusyPeriodStats {
    std::vector<double> mean;          // E[B_v]; 0 at leaves by convention
    std::vector<double> second_moment; // E[B_v^2]
    std::vector<double> void_prob;     // P(N^v = 0)
    std::vector<bool> overloaded;      // void probability fell to <= 0
    std::string source;                // exp-approx | simulated
};

/// Stability: every root-to-node load path sum < 1.
bool stability_check(const CodebookTree& tree, const TrafficModel& traffic);

/// Largest uniform lambda scaling that keeps the system strictly stable.
double critical_load_factor(const CodebookTree& tree, const TrafficModel& traffic);

/// Normalization constant c(rho) of the PF stationary distribution.
double pf_normalization(const CodebookTree& tree, const TrafficModel& traffic);

/// Stationary probability of a state under PF. Throws Unstable.
double pf_stationary_prob(const CodebookTree& tree, const TrafficModel& traffic,
                          const std::vector<long>& state);

/// Exact expected counts and flow throughput under PF. Throws Unstable.
PerformanceReport pf_performance(const CodebookTree& tree,
                                 const TrafficModel& traffic);

/// Exact MT performance on a line graph (preemptive-priority reduction).
/// Throws NotALine, Unstable (sum of loads >= 1).
PerformanceReport mt_line_performance(const CodebookTree& tree,
                                      const TrafficModel& traffic);

/// Leaf-to-root void probability and busy period recursion under MT. With
/// strict=true throws MtOverload as soon as a void probability drops to <= 0;
/// otherwise the affected beams (and their ancestors) are flagged.
/// Second moments use the exponential approximation E[B^2] = 2 E[B]^2.
BusyPeriodStats mt_void_and_busy(const CodebookTree& tree,
                                 const TrafficModel& traffic, bool strict = true);

/// Expected counts under MT from busy period moments. Beams whose local
/// stability denominator is <= 0 are flagged overloaded with throughput 0.
PerformanceReport mt_tree_performance(const CodebookTree& tree,
                                      const TrafficModel& traffic,
                                      const BusyPeriodStats& stats);

} // namespace hbf
