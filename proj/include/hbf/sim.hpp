#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hbf/elastic.hpp"
#include "hbf/streaming.hpp"

namespace hbf {

enum class FlowSizeDist { exponential, deterministic, hyperexponential };

enum class Policy { pf, mt, streaming };

struct SimConfig {
    long horizon_events = 1'000'000;
    double warmup_fraction = 0.2;
    std::uint64_t seed = 1;
    FlowSizeDist dist = FlowSizeDist::exponential;
    // hyperexponential branch: mean p*m1 + (1-p)*m2 must be 1
    double hyper_p = 0.5;
    double hyper_m1 = 0.5;
    double hyper_m2 = 1.5;
    Policy policy = Policy::pf;
    int batches = 20;

    void validate() const;
};

struct SimEstimate {
    std::vector<double> expected_n;  // index 1..n (elastic)
    std::vector<double> se_n;
    std::vector<double> throughput;  // lambda_v / E[N_v]
    std::vector<double> se_throughput;
    std::vector<double> blocking;    // index 1..n (streaming)
    std::vector<double> se_blocking;
    long events = 0;
    bool diverging = false; // elastic: counts kept growing through the run
};

/// Event-driven simulation of the elastic flow-level dynamics. The rate
/// allocation is recomputed from the current counts at every event; per-flow
/// residual work is tracked so non-exponential size distributions are exact.
SimEstimate simulate_elastic(const CodebookTree& tree, const TrafficModel& traffic,
                             Policy policy, const SimConfig& config);

/// Loss-system simulation with admission control.
SimEstimate simulate_streaming(const CodebookTree& tree, const StreamingModel& model,
                               const SimConfig& config);

struct CtmcSolution {
    std::vector<double> expected_n; // index 1..n
    double boundary_mass = 0.0;     // stationary mass at total count == cap
    long state_count = 0;
};

/// Exact stationary solve of the elastic CTMC truncated to total count <= cap
/// (arrivals at the cap are dropped). Throws TooLarge past 2e5 states.
CtmcSolution solve_truncated_ctmc(const CodebookTree& tree,
                                  const TrafficModel& traffic, Policy policy,
                                  int state_cap);

struct BusyMomentEstimate {
    double mean = 0.0;
    double second_moment = 0.0;
    double se_mean = 0.0;
    double se_second_moment = 0.0;
    long cycles = 0;
    bool regenerative = true; // false when cycle completion stalled
};

/// Regenerative estimation of the busy period of the descendants of a beam
/// under MT, over at least min_cycles completed cycles.
BusyMomentEstimate estimate_busy_moments(const CodebookTree& tree,
                                         const TrafficModel& traffic, int beam,
                                         long min_cycles = 10'000,
                                         std::uint64_t seed = 1);

/// Busy period stats with simulation-estimated moments for internal nodes
/// (source = "simulated"); void probabilities stay analytic.
BusyPeriodStats simulated_busy_stats(const CodebookTree& tree,
                                     const TrafficModel& traffic,
                                     long min_cycles = 10'000,
                                     std::uint64_t seed = 1);

} // namespace hbf
