#pragma once

#include <cstdint>
#include <random>
#include <vector>

#include "hbf/codebook.hpp"
#include "hbf/errors.hpp"

namespace hbf {

/// Fairness parameter. alpha=0 is max throughput, alpha=1 proportional
/// fairness; max-min fairness is approximated by a large finite alpha.
struct AlphaParam {
    double alpha = 1.0;
    bool maxmin = false;
    double maxmin_alpha = 16.0;

    static AlphaParam max_min(double approx_alpha = 16.0) {
        return AlphaParam{approx_alpha, true, approx_alpha};
    }
    double effective() const { return maxmin ? maxmin_alpha : alpha; }
};

struct AllocationResult {
    double alpha = 1.0;
    std::vector<double> kappa; // index 1..n
    std::vector<double> gamma; // index 1..n
    std::vector<double> phi;   // index 1..n
    std::vector<double> theta; // index 1..n (zero for the alpha in {0,1} closed forms)
    std::vector<double> delta; // per flow, same order as the population; empty
                               // for the count-only entry points
    double utility = 0.0;      // -inf when a served flow gets rate 0 and alpha >= 1
    long op_count = 0;         // arithmetic-step instrumentation
};

/// Activation indicator per beam; no ancestor-descendant pair active.
using ActivationSet = std::vector<std::uint8_t>; // index 1..n

/// True iff every root-to-node gamma path sum is <= 1 + tol.
bool feasible(const CodebookTree& tree, const std::vector<double>& gamma,
              double tol = 1e-9);

/// Unique alpha-fair allocation via the two-pass tree dynamic program.
/// alpha=1 and alpha=0 dispatch to the closed forms below. Throws
/// EmptyPopulation if no flows, NonPositiveRate if some flow rate <= 0.
AllocationResult alpha_fair(const CodebookTree& tree, const FlowPopulation& pop,
                            AlphaParam alpha);

/// Proportional fair allocation from per-beam flow counts.
AllocationResult pf_closed_form(const CodebookTree& tree,
                                const std::vector<long>& counts);

/// Max throughput allocation: a beam is active iff all its descendants are empty.
AllocationResult mt_closed_form(const CodebookTree& tree,
                                const std::vector<long>& counts);

/// One slot of the randomized scheduler: Y_v ~ Bernoulli(kappa_v) independent,
/// Z_v = Y_v * prod over ancestors (1 - Y). E[Z_v] = gamma_v.
ActivationSet draw_activation(const CodebookTree& tree,
                              const std::vector<double>& kappa,
                              std::mt19937_64& rng);

/// Objective value sum_v phi_v f_alpha(gamma_v) for a given kappa vector;
/// shared by the solver's spot checks and the grid-search oracle.
double kappa_objective(const CodebookTree& tree, const std::vector<double>& phi,
                       const std::vector<double>& kappa, double alpha);

} // namespace hbf
