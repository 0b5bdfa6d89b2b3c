#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "hbf/alloc.hpp"
#include "hbf/codebook.hpp"
#include "hbf/elastic.hpp"

namespace hbf::validate {

/// Brute-force utility maximization over the kappa cube, independent of the
/// dynamic program: a joint coarse grid locates the basin, then exhaustive
/// per-coordinate sweeps at fine_step polish to grid resolution.
struct GridResult {
    double utility = 0.0;
    std::vector<double> kappa;
};
GridResult grid_search(const CodebookTree& tree, const FlowPopulation& pop,
                       double alpha, double coarse_step = 0.05,
                       double fine_step = 1e-3);

/// Direct objective evaluation sum_k f_alpha(r_k gamma_{v_k} delta_k) for a
/// kappa vector, with delta from the per-beam water-filling weights. Used by
/// the oracle only.
double utility_of_kappa(const CodebookTree& tree, const FlowPopulation& pop,
                        double alpha, const std::vector<double>& kappa);

/// Uniform random tree on n nodes in depth-sorted numbering.
CodebookTree random_tree(std::mt19937_64& rng, int n);

/// The 10-beam experiment fixture: edges {(1,2),(1,3),(1,4),(2,7),(2,9),
/// (3,5),(3,6),(4,8),(4,10)}.
CodebookTree example_tree();
/// Its base traffic: lambda = [.16,.09,.12,.09,.10,.10,.10,.10,.09,.09],
/// rho = [.11,.20,.31,.20,.59,.59,.61,.61,.18,.18], r = lambda / rho.
TrafficModel example_traffic();

struct CriterionResult {
    int id = 0;
    std::string name;
    bool pass = false;
    std::string detail;
    double seconds = 0.0;
};

struct AcceptanceOptions {
    std::uint64_t seed = 20240601;
    long sim_events = 10'000'000;  // heavy simulation horizon
    long light_sim_events = 2'000'000;
};

/// Runs the full acceptance/oracle-equivalence suite; one result per criterion.
std::vector<CriterionResult> run_acceptance(const AcceptanceOptions& opts);

} // namespace hbf::validate
