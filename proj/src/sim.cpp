#include "hbf/sim.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <map>
#include <queue>
#include <random>

namespace hbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct SizeSampler {
    FlowSizeDist dist;
    double p, m1, m2;
    std::exponential_distribution<double> exp1{1.0};
    std::uniform_real_distribution<double> unif{0.0, 1.0};

    explicit SizeSampler(const SimConfig& cfg)
        : dist(cfg.dist), p(cfg.hyper_p), m1(cfg.hyper_m1), m2(cfg.hyper_m2) {}

    // unit-mean sample
    double operator()(std::mt19937_64& rng) {
        switch (dist) {
            case FlowSizeDist::exponential: return exp1(rng);
            case FlowSizeDist::deterministic: return 1.0;
            case FlowSizeDist::hyperexponential:
                return unif(rng) < p ? m1 * exp1(rng) : m2 * exp1(rng);
        }
        return 1.0;
    }
};

// In-place allocation recompute used inside the event loops; same formulas as
// pf_closed_form / mt_closed_form but without per-event allocation.
struct AllocScratch {
    std::vector<long> sub;
    std::vector<double> head;

    explicit AllocScratch(int n) : sub(n + 1), head(n + 1) {}

    void gamma_of(const CodebookTree& tree, const std::vector<long>& counts,
                  Policy policy, std::vector<double>& gamma) {
        int n = tree.node_count();
        for (int v = n; v >= 1; --v) {
            sub[v] = counts[v];
            for (int c : tree.children(v)) sub[v] += sub[c];
        }
        if (policy == Policy::mt) {
            for (int v = 1; v <= n; ++v)
                gamma[v] = sub[v] - counts[v] == 0 ? 1.0 : 0.0;
            return;
        }
        for (int v = 1; v <= n; ++v) {
            double kappa =
                sub[v] > 0 ? static_cast<double>(counts[v]) / sub[v] : 0.0;
            double prev = v == 1 ? 1.0 : head[tree.parent(v)];
            gamma[v] = kappa * prev;
            head[v] = prev * (1.0 - kappa);
        }
    }
};

struct BatchAcc {
    int batches;
    long batch_events;
    std::vector<std::vector<double>> area; // batch x beam
    std::vector<double> duration;
    int current = 0;

    BatchAcc(int b, long events_per_batch, int n)
        : batches(b), batch_events(events_per_batch),
          area(b, std::vector<double>(n + 1, 0.0)), duration(b, 0.0) {}

    void advance_event(long post_warmup_event) {
        int idx = static_cast<int>(post_warmup_event / std::max(batch_events, 1L));
        current = std::min(idx, batches - 1);
    }
};

} // namespace

void SimConfig::validate() const {
    if (horizon_events < 1) throw ConfigError("horizon_events must be positive");
    if (warmup_fraction < 0.0 || warmup_fraction >= 1.0)
        throw ConfigError("warmup_fraction must lie in [0,1)");
    if (batches < 2) throw ConfigError("need at least 2 batches");
    if (dist == FlowSizeDist::hyperexponential) {
        double mean = hyper_p * hyper_m1 + (1.0 - hyper_p) * hyper_m2;
        if (std::abs(mean - 1.0) > 1e-12)
            throw ConfigError("hyperexponential parameters must have mean 1");
    }
}

SimEstimate simulate_elastic(const CodebookTree& tree, const TrafficModel& traffic,
                             Policy policy, const SimConfig& config) {
    config.validate();
    const int n = tree.node_count();
    std::mt19937_64 rng(config.seed);
    SizeSampler sample_size(config);
    std::exponential_distribution<double> std_exp(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double total_lambda = 0.0;
    std::vector<double> lambda_cdf(n + 1, 0.0);
    for (int v = 1; v <= n; ++v) {
        total_lambda += traffic.lambda[v];
        lambda_cdf[v] = total_lambda;
    }
    if (total_lambda <= 0.0) throw ConfigError("no arrivals: total lambda is 0");

    // Per-beam processor sharing via virtual work: a flow arriving at beam v
    // with size S finishes when consumed[v] reaches its entry value plus S.
    using MinHeap =
        std::priority_queue<double, std::vector<double>, std::greater<double>>;
    std::vector<MinHeap> work(n + 1);
    std::vector<double> consumed(n + 1, 0.0);
    std::vector<long> counts(n + 1, 0);
    std::vector<double> gamma(n + 1, 0.0);
    AllocScratch scratch(n);

    const long warmup = static_cast<long>(config.warmup_fraction *
                                          static_cast<double>(config.horizon_events));
    const long measured = config.horizon_events - warmup;
    BatchAcc acc(config.batches, measured / config.batches, n);

    bool any_flows = false;
    long events = 0;
    double sum_counts_time = 0.0, elapsed_all = 0.0; // for the divergence heuristic

    while (events < config.horizon_events) {
        if (any_flows) scratch.gamma_of(tree, counts, policy, gamma);

        double dt_dep = kInf;
        int dep_beam = 0;
        for (int v = 1; v <= n; ++v) {
            if (counts[v] == 0 || gamma[v] <= 0.0) continue;
            double rate_per_flow = traffic.r[v] * gamma[v] / counts[v];
            double dt = (work[v].top() - consumed[v]) / rate_per_flow;
            if (dt < dt_dep) {
                dt_dep = dt;
                dep_beam = v;
            }
        }
        double dt_arr = std_exp(rng) / total_lambda;
        double dt = std::min(dt_arr, dt_dep);

        // advance clocks and time averages
        for (int v = 1; v <= n; ++v) {
            if (counts[v] > 0 && gamma[v] > 0.0)
                consumed[v] += traffic.r[v] * gamma[v] / counts[v] * dt;
            if (events >= warmup) acc.area[acc.current][v] += counts[v] * dt;
            sum_counts_time += counts[v] * dt;
        }
        if (events >= warmup) acc.duration[acc.current] += dt;
        elapsed_all += dt;

        if (dt_arr <= dt_dep) {
            double u = unif(rng) * total_lambda;
            int v = 1;
            while (u > lambda_cdf[v]) ++v;
            work[v].push(consumed[v] + sample_size(rng));
            counts[v]++;
            any_flows = true;
        } else {
            work[dep_beam].pop();
            counts[dep_beam]--;
        }
        ++events;
        if (events > warmup) acc.advance_event(events - warmup);
    }

    SimEstimate est;
    est.events = events;
    est.expected_n.assign(n + 1, 0.0);
    est.se_n.assign(n + 1, 0.0);
    est.throughput.assign(n + 1, 0.0);
    est.se_throughput.assign(n + 1, 0.0);

    double total_dur = 0.0;
    for (double d : acc.duration) total_dur += d;
    for (int v = 1; v <= n; ++v) {
        double total_area = 0.0;
        for (int b = 0; b < config.batches; ++b) total_area += acc.area[b][v];
        est.expected_n[v] = total_area / total_dur;

        double mean_of_means = 0.0, ss = 0.0;
        std::vector<double> bm(config.batches);
        for (int b = 0; b < config.batches; ++b) {
            bm[b] = acc.duration[b] > 0.0 ? acc.area[b][v] / acc.duration[b] : 0.0;
            mean_of_means += bm[b];
        }
        mean_of_means /= config.batches;
        for (double m : bm) ss += (m - mean_of_means) * (m - mean_of_means);
        est.se_n[v] = std::sqrt(ss / (config.batches - 1) / config.batches);

        if (traffic.lambda[v] > 0.0 && est.expected_n[v] > 0.0) {
            est.throughput[v] = traffic.lambda[v] / est.expected_n[v];
            // delta method: se(lambda/x) = lambda se(x) / x^2
            est.se_throughput[v] = traffic.lambda[v] * est.se_n[v] /
                                   (est.expected_n[v] * est.expected_n[v]);
        }
    }
    long total_now = 0;
    for (int v = 1; v <= n; ++v) total_now += counts[v];
    double avg_total = elapsed_all > 0.0 ? sum_counts_time / elapsed_all : 0.0;
    est.diverging = total_now > std::max(50.0, 10.0 * avg_total);
    return est;
}

SimEstimate simulate_streaming(const CodebookTree& tree, const StreamingModel& model,
                               const SimConfig& config) {
    config.validate();
    const int n = tree.node_count();
    const TrafficModel& traffic = model.traffic;
    std::mt19937_64 rng(config.seed);
    SizeSampler sample_size(config);
    std::exponential_distribution<double> std_exp(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    double total_lambda = 0.0;
    std::vector<double> lambda_cdf(n + 1, 0.0);
    for (int v = 1; v <= n; ++v) {
        total_lambda += traffic.lambda[v];
        lambda_cdf[v] = total_lambda;
    }
    if (total_lambda <= 0.0) throw ConfigError("no arrivals: total lambda is 0");

    std::vector<long> counts(n + 1, 0), used(n + 1, 0), maxpath(n + 1, 0);
    using Departure = std::pair<double, int>; // (time, beam)
    std::priority_queue<Departure, std::vector<Departure>, std::greater<>> departures;

    auto admits = [&](int v) {
        for (int w = 1; w <= n; ++w)
            used[w] = (w == 1 ? 0 : used[tree.parent(w)]) + counts[w] * model.s[w];
        for (int w = n; w >= 1; --w) {
            maxpath[w] = used[w];
            for (int c : tree.children(w)) maxpath[w] = std::max(maxpath[w], maxpath[c]);
        }
        return maxpath[v] + model.s[v] <= model.xi;
    };

    const long warmup = static_cast<long>(config.warmup_fraction *
                                          static_cast<double>(config.horizon_events));
    const long measured = config.horizon_events - warmup;
    const long per_batch = std::max(measured / config.batches, 1L);
    std::vector<std::vector<long>> arr(config.batches, std::vector<long>(n + 1, 0));
    std::vector<std::vector<long>> blk(config.batches, std::vector<long>(n + 1, 0));

    double t = 0.0;
    long events = 0;
    while (events < config.horizon_events) {
        double t_arr = t + std_exp(rng) / total_lambda;
        if (!departures.empty() && departures.top().first <= t_arr) {
            auto [td, beam] = departures.top();
            departures.pop();
            t = td;
            counts[beam]--;
        } else {
            t = t_arr;
            double u = unif(rng) * total_lambda;
            int v = 1;
            while (u > lambda_cdf[v]) ++v;
            bool admitted = admits(v);
            if (events >= warmup) {
                int b = std::min(static_cast<int>((events - warmup) / per_batch),
                                 config.batches - 1);
                arr[b][v]++;
                if (!admitted) blk[b][v]++;
            }
            if (admitted) {
                counts[v]++;
                departures.emplace(t + sample_size(rng) / traffic.r[v], v);
            }
        }
        ++events;
    }

    SimEstimate est;
    est.events = events;
    est.blocking.assign(n + 1, 0.0);
    est.se_blocking.assign(n + 1, 0.0);
    for (int v = 1; v <= n; ++v) {
        long total_arr = 0, total_blk = 0;
        std::vector<double> bp;
        for (int b = 0; b < config.batches; ++b) {
            total_arr += arr[b][v];
            total_blk += blk[b][v];
            if (arr[b][v] > 0)
                bp.push_back(static_cast<double>(blk[b][v]) / arr[b][v]);
        }
        if (total_arr > 0)
            est.blocking[v] = static_cast<double>(total_blk) / total_arr;
        if (bp.size() > 1) {
            double m = 0.0, ss = 0.0;
            for (double x : bp) m += x;
            m /= bp.size();
            for (double x : bp) ss += (x - m) * (x - m);
            est.se_blocking[v] = std::sqrt(ss / (bp.size() - 1) / bp.size());
        }
    }
    return est;
}

CtmcSolution solve_truncated_ctmc(const CodebookTree& tree,
                                  const TrafficModel& traffic, Policy policy,
                                  int state_cap) {
    const int n = tree.node_count();
    constexpr long kMaxStates = 200'000;

    // enumerate states with total count <= cap, depth-first
    std::vector<std::vector<int>> states;
    std::map<std::vector<int>, int> index;
    {
        std::vector<int> cur(n + 1, 0);
        std::function<void(int, int)> rec = [&](int v, int remaining) {
            if (v > n) {
                if (static_cast<long>(states.size()) >= kMaxStates)
                    throw TooLarge("truncated state space exceeds 2e5 states");
                index[cur] = static_cast<int>(states.size());
                states.push_back(cur);
                return;
            }
            for (int k = 0; k <= remaining; ++k) {
                cur[v] = k;
                rec(v + 1, remaining - k);
            }
            cur[v] = 0;
        };
        rec(1, state_cap);
    }
    const int m = static_cast<int>(states.size());

    // transitions
    std::vector<std::vector<std::pair<int, double>>> incoming(m);
    std::vector<double> out_rate(m, 0.0);
    std::vector<long> counts(n + 1, 0);
    std::vector<double> gamma(n + 1, 0.0);
    AllocScratch scratch(n);
    std::vector<int> neighbor(n + 1, 0);
    for (int i = 0; i < m; ++i) {
        const auto& st = states[i];
        long total = 0;
        for (int v = 1; v <= n; ++v) {
            counts[v] = st[v];
            total += st[v];
        }
        scratch.gamma_of(tree, counts, policy, gamma);
        std::vector<int> next(st);
        for (int v = 1; v <= n; ++v) {
            if (total < state_cap && traffic.lambda[v] > 0.0) {
                next[v] = st[v] + 1;
                int j = index.at(next);
                incoming[j].emplace_back(i, traffic.lambda[v]);
                out_rate[i] += traffic.lambda[v];
                next[v] = st[v];
            }
            if (st[v] > 0 && gamma[v] > 0.0) {
                double rate = traffic.r[v] * gamma[v];
                next[v] = st[v] - 1;
                int j = index.at(next);
                incoming[j].emplace_back(i, rate);
                out_rate[i] += rate;
                next[v] = st[v];
            }
        }
    }

    // Gauss-Seidel on the balance equations pi_i * out_i = sum_j pi_j q_ji
    std::vector<double> pi(m, 1.0 / m);
    const int max_sweeps = 20000;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        double delta = 0.0, mass = 0.0;
        for (int i = 0; i < m; ++i) {
            if (out_rate[i] == 0.0) continue;
            double inflow = 0.0;
            for (const auto& [j, rate] : incoming[i]) inflow += pi[j] * rate;
            double next = inflow / out_rate[i];
            delta += std::abs(next - pi[i]);
            pi[i] = next;
        }
        for (double x : pi) mass += x;
        for (double& x : pi) x /= mass;
        if (delta / mass < 1e-15 && sweep > 10) break;
    }

    CtmcSolution sol;
    sol.state_count = m;
    sol.expected_n.assign(n + 1, 0.0);
    for (int i = 0; i < m; ++i) {
        long total = 0;
        for (int v = 1; v <= n; ++v) {
            sol.expected_n[v] += states[i][v] * pi[i];
            total += states[i][v];
        }
        if (total == state_cap) sol.boundary_mass += pi[i];
    }
    return sol;
}

BusyMomentEstimate estimate_busy_moments(const CodebookTree& tree,
                                         const TrafficModel& traffic, int beam,
                                         long min_cycles, std::uint64_t seed) {
    BusyMomentEstimate est;
    std::vector<int> desc = tree.subtree(beam);
    desc.erase(desc.begin()); // strict descendants
    if (desc.empty()) {
        est.cycles = 0;
        return est; // leaf convention: mean 0
    }
    double ell = 0.0;
    for (int w : desc) ell += traffic.lambda[w];
    if (ell <= 0.0) {
        est.cycles = 0;
        return est;
    }

    const int n = tree.node_count();
    std::mt19937_64 rng(seed);
    std::exponential_distribution<double> std_exp(1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    std::vector<long> counts(n + 1, 0);
    std::vector<long> below(n + 1, 0); // flows strictly below w, within desc

    auto recompute_below = [&]() {
        for (int i = static_cast<int>(desc.size()) - 1; i >= 0; --i) {
            int w = desc[i];
            below[w] = 0;
            for (int c : tree.children(w)) below[w] += counts[c] + below[c];
        }
    };

    double sum_b = 0.0, sum_b2 = 0.0, sum_b3 = 0.0, sum_b4 = 0.0;
    long cycles = 0;
    const long kMaxEventsPerCycle = 100'000'000;

    while (cycles < min_cycles) {
        // cycle starts with one arrival from the empty state
        double u = unif(rng) * ell;
        double cum = 0.0;
        for (int w : desc) {
            cum += traffic.lambda[w];
            if (u <= cum) {
                counts[w] = 1;
                break;
            }
        }
        double elapsed = 0.0;
        long total = 1, cycle_events = 0;
        while (total > 0) {
            recompute_below();
            double rate = ell; // arrivals inside the subtree
            for (int w : desc)
                if (counts[w] > 0 && below[w] == 0) rate += traffic.r[w];
            elapsed += std_exp(rng) / rate;
            double pick = unif(rng) * rate;
            double acc = 0.0;
            bool done = false;
            for (int w : desc) {
                acc += traffic.lambda[w];
                if (pick <= acc) {
                    counts[w]++;
                    total++;
                    done = true;
                    break;
                }
            }
            if (!done) {
                for (int w : desc) {
                    if (counts[w] > 0 && below[w] == 0) {
                        acc += traffic.r[w];
                        if (pick <= acc) {
                            counts[w]--;
                            total--;
                            break;
                        }
                    }
                }
            }
            if (++cycle_events > kMaxEventsPerCycle) {
                est.regenerative = false;
                est.cycles = cycles;
                return est;
            }
        }
        sum_b += elapsed;
        sum_b2 += elapsed * elapsed;
        sum_b3 += elapsed * elapsed * elapsed;
        sum_b4 += elapsed * elapsed * elapsed * elapsed;
        ++cycles;
    }

    est.cycles = cycles;
    est.mean = sum_b / cycles;
    est.second_moment = sum_b2 / cycles;
    double var_b = sum_b2 / cycles - est.mean * est.mean;
    double var_b2 = sum_b4 / cycles - est.second_moment * est.second_moment;
    est.se_mean = std::sqrt(std::max(var_b, 0.0) / cycles);
    est.se_second_moment = std::sqrt(std::max(var_b2, 0.0) / cycles);
    return est;
}

BusyPeriodStats simulated_busy_stats(const CodebookTree& tree,
                                     const TrafficModel& traffic, long min_cycles,
                                     std::uint64_t seed) {
    BusyPeriodStats st = mt_void_and_busy(tree, traffic, /*strict=*/false);
    st.source = "simulated";
    for (int v = 1; v <= tree.node_count(); ++v) {
        if (st.overloaded[v] || tree.is_leaf(v)) continue;
        BusyMomentEstimate est =
            estimate_busy_moments(tree, traffic, v, min_cycles, seed + v);
        if (est.regenerative && est.cycles > 0)
            st.second_moment[v] = est.second_moment;
    }
    return st;
}

} // namespace hbf
