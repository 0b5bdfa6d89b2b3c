#pragma once

#include <string>
#include <vector>

#include "hbf/elastic.hpp"

namespace hbf {

/// Streaming traffic: xi circuits total, each class-v flow holds s_v of them
/// for its whole stay; arrivals that would break a path budget are blocked.
struct StreamingModel {
    int xi = 1;
    std::vector<int> s; // index 1..n, each in [1, xi]
    TrafficModel traffic;

    static StreamingModel make(int xi, std::vector<int> s, TrafficModel traffic);
};

struct BlockingReport {
    std::vector<double> p;      // index 1..n
    double normalization = 1.0; // c(rho) = c_1(xi)
    std::string method;         // blocking-dp | enumeration | simulation
    long op_count = 0;
};

/// True iff sum over every root-to-node path of n_v * s_v fits in xi.
bool admissible(const CodebookTree& tree, const StreamingModel& model,
                const std::vector<long>& state);

/// Two-phase dynamic program: O(xi |V| h(G)) time, O(xi |V|) memory.
BlockingReport blocking_probabilities(const CodebookTree& tree,
                                      const StreamingModel& model);

/// pi(n) = (1/c) prod rho^n / n!. Throws Inadmissible.
double streaming_stationary_prob(const CodebookTree& tree,
                                 const StreamingModel& model,
                                 const std::vector<long>& state);

/// Brute-force enumeration over the admissible state space; oracle for the
/// dynamic program. Throws TooLarge past max_states.
BlockingReport blocking_enumeration(const CodebookTree& tree,
                                    const StreamingModel& model,
                                    long max_states = 10'000'000);

/// Erlang B(xi, rho) by the standard recursion (single-node reduction check).
double erlang_b(int xi, double rho);

} // namespace hbf
