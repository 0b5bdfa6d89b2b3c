#include "hbf/elastic.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace hbf {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();

std::vector<double> pad(std::vector<double> v) {
    v.insert(v.begin(), 0.0);
    return v;
}

// Root-to-node load path sums, index 1..n.
std::vector<double> load_path_sums(const CodebookTree& tree,
                                   const TrafficModel& traffic) {
    int n = tree.node_count();
    std::vector<double> path(n + 1, 0.0);
    for (int v = 1; v <= n; ++v)
        path[v] = (v == 1 ? 0.0 : path[tree.parent(v)]) + traffic.rho[v];
    return path;
}

} // namespace

TrafficModel TrafficModel::from_lambda_r(std::vector<double> lambda,
                                         std::vector<double> r) {
    if (lambda.size() != r.size())
        throw ConfigError("lambda and r vectors must have equal length");
    TrafficModel t;
    t.lambda = pad(std::move(lambda));
    t.r = pad(std::move(r));
    t.rho.resize(t.lambda.size());
    for (std::size_t v = 1; v < t.lambda.size(); ++v) {
        if (!(t.r[v] > 0.0)) throw ConfigError("service rates must be positive");
        if (t.lambda[v] < 0.0) throw ConfigError("arrival rates must be nonnegative");
        t.rho[v] = t.lambda[v] / t.r[v];
    }
    return t;
}

TrafficModel TrafficModel::from_rho_r(std::vector<double> rho,
                                      std::vector<double> r) {
    if (rho.size() != r.size())
        throw ConfigError("rho and r vectors must have equal length");
    std::vector<double> lambda(rho.size());
    for (std::size_t i = 0; i < rho.size(); ++i) lambda[i] = rho[i] * r[i];
    return from_lambda_r(std::move(lambda), std::move(r));
}

TrafficModel TrafficModel::scaled(double factor) const {
    TrafficModel t = *this;
    for (std::size_t v = 1; v < t.lambda.size(); ++v) {
        t.lambda[v] *= factor;
        t.rho[v] *= factor;
    }
    return t;
}

double TrafficModel::ell(const CodebookTree& tree, int v) const {
    double total = 0.0;
    for (int w : tree.subtree(v))
        if (w != v) total += lambda[w];
    return total;
}

bool stability_check(const CodebookTree& tree, const TrafficModel& traffic) {
    auto path = load_path_sums(tree, traffic);
    for (int v = 1; v <= tree.node_count(); ++v)
        if (!(path[v] < 1.0)) return false;
    return true;
}

double critical_load_factor(const CodebookTree& tree, const TrafficModel& traffic) {
    auto path = load_path_sums(tree, traffic);
    double worst = *std::max_element(path.begin() + 1, path.end());
    return worst > 0.0 ? 1.0 / worst : kInf;
}

double pf_normalization(const CodebookTree& tree, const TrafficModel& traffic) {
    if (!stability_check(tree, traffic))
        throw Unstable("load path sum reaches 1: PF normalization diverges");
    auto path = load_path_sums(tree, traffic);
    double c = 1.0;
    for (int v = 1; v <= tree.node_count(); ++v)
        c *= (1.0 - (path[v] - traffic.rho[v])) / (1.0 - path[v]);
    return c;
}

double pf_stationary_prob(const CodebookTree& tree, const TrafficModel& traffic,
                          const std::vector<long>& state) {
    if (!stability_check(tree, traffic))
        throw Unstable("load path sum reaches 1: PF stationary distribution undefined");
    int n = tree.node_count();
    std::vector<long> sub(n + 1, 0);
    for (int v = n; v >= 1; --v) {
        sub[v] = state[v];
        for (int c : tree.children(v)) sub[v] += sub[c];
    }
    double p = 1.0 / pf_normalization(tree, traffic);
    for (int v = 1; v <= n; ++v) {
        p *= std::pow(traffic.rho[v], static_cast<double>(state[v]));
        // C(sub, n_v) by multiplicative update
        for (long i = 1; i <= state[v]; ++i)
            p *= static_cast<double>(sub[v] - state[v] + i) / static_cast<double>(i);
    }
    return p;
}

PerformanceReport pf_performance(const CodebookTree& tree,
                                 const TrafficModel& traffic) {
    if (!stability_check(tree, traffic))
        throw Unstable("load path sum reaches 1: PF performance undefined");
    int n = tree.node_count();
    auto path = load_path_sums(tree, traffic);

    PerformanceReport rep;
    rep.method = "pf-exact";
    rep.stable = true;
    rep.expected_n.assign(n + 1, 0.0);
    rep.throughput.assign(n + 1, 0.0);
    rep.throughput_undefined.assign(n + 1, false);
    rep.overloaded.assign(n + 1, false);
    for (int v = 1; v <= n; ++v) {
        double sum = 0.0;
        for (int w : tree.subtree(v))
            sum += (1.0 - tree.degree(w)) / (1.0 - path[w]);
        rep.expected_n[v] = traffic.rho[v] * sum;
        if (traffic.lambda[v] > 0.0) {
            rep.throughput[v] = traffic.lambda[v] / rep.expected_n[v];
        } else {
            rep.throughput[v] = traffic.r[v];
            rep.throughput_undefined[v] = true;
        }
    }
    return rep;
}

PerformanceReport mt_line_performance(const CodebookTree& tree,
                                      const TrafficModel& traffic) {
    if (!tree.is_line()) throw NotALine("MT line formula requires a line graph");
    int n = tree.node_count();
    double total_rho = 0.0;
    for (int v = 1; v <= n; ++v) total_rho += traffic.rho[v];
    if (!(total_rho < 1.0))
        throw Unstable("sum of loads reaches 1: MT line system unstable");

    PerformanceReport rep;
    rep.method = "mt-line-exact";
    rep.stable = true;
    rep.expected_n.assign(n + 1, 0.0);
    rep.throughput.assign(n + 1, 0.0);
    rep.throughput_undefined.assign(n + 1, false);
    rep.overloaded.assign(n + 1, false);
    for (int v = 1; v <= n; ++v) {
        double at_or_below = 0.0, below = 0.0, mix = 0.0;
        for (int w = v; w <= n; ++w) {
            at_or_below += traffic.rho[w];
            if (w > v) below += traffic.rho[w];
            mix += traffic.rho[w] * (traffic.r[v] / traffic.r[w] - 1.0);
        }
        rep.expected_n[v] =
            traffic.rho[v] * (1.0 + mix) / ((1.0 - at_or_below) * (1.0 - below));
        if (traffic.lambda[v] > 0.0) {
            rep.throughput[v] = traffic.lambda[v] / rep.expected_n[v];
        } else {
            rep.throughput[v] = traffic.r[v];
            rep.throughput_undefined[v] = true;
        }
    }
    return rep;
}

BusyPeriodStats mt_void_and_busy(const CodebookTree& tree,
                                 const TrafficModel& traffic, bool strict) {
    int n = tree.node_count();
    BusyPeriodStats st;
    st.source = "exp-approx";
    st.mean.assign(n + 1, 0.0);
    st.second_moment.assign(n + 1, 0.0);
    st.void_prob.assign(n + 1, 1.0);
    st.overloaded.assign(n + 1, false);

    for (int v = n; v >= 1; --v) {
        if (tree.is_leaf(v)) {
            st.void_prob[v] = 1.0 - traffic.rho[v];
            st.mean[v] = 0.0; // every use multiplies by ell_v = 0
            if (st.void_prob[v] <= 0.0) {
                if (strict)
                    throw MtOverload("beam " + std::to_string(v) +
                                     ": void probability <= 0 under MT");
                st.overloaded[v] = true;
                st.void_prob[v] = 0.0;
            }
            continue;
        }
        bool child_overloaded = false;
        double prod = 1.0;
        for (int c : tree.children(v)) {
            child_overloaded = child_overloaded || st.overloaded[c];
            prod *= st.void_prob[c];
        }
        double voidp = prod - traffic.rho[v];
        if (child_overloaded || voidp <= 0.0 || prod <= 0.0) {
            if (strict)
                throw MtOverload("beam " + std::to_string(v) +
                                 ": void probability <= 0 under MT");
            st.overloaded[v] = true;
            st.void_prob[v] = 0.0;
            st.mean[v] = kInf;
            st.second_moment[v] = kInf;
            continue;
        }
        st.void_prob[v] = voidp;
        double ell = traffic.ell(tree, v);
        st.mean[v] = ell > 0.0 ? (1.0 / prod - 1.0) / ell : 0.0;
    }
    for (int v = 1; v <= n; ++v)
        if (!st.overloaded[v])
            st.second_moment[v] = 2.0 * st.mean[v] * st.mean[v];
    return st;
}

PerformanceReport mt_tree_performance(const CodebookTree& tree,
                                      const TrafficModel& traffic,
                                      const BusyPeriodStats& stats) {
    int n = tree.node_count();
    PerformanceReport rep;
    rep.method = stats.source == "simulated" ? "mt-sim-moments" : "mt-exp-approx";
    rep.expected_n.assign(n + 1, 0.0);
    rep.throughput.assign(n + 1, 0.0);
    rep.throughput_undefined.assign(n + 1, false);
    rep.overloaded.assign(n + 1, false);
    rep.stable = true;
    for (int v = 1; v <= n; ++v) {
        if (stats.overloaded[v]) {
            rep.overloaded[v] = true;
            rep.stable = false;
            rep.expected_n[v] = kInf;
            rep.throughput[v] = 0.0;
            continue;
        }
        double ell = traffic.ell(tree, v);
        double cycle = 1.0 + stats.mean[v] * ell;
        double denom = 1.0 - traffic.rho[v] * cycle;
        if (denom <= 0.0) {
            rep.overloaded[v] = true;
            rep.stable = false;
            rep.expected_n[v] = kInf;
            rep.throughput[v] = 0.0;
            continue;
        }
        rep.expected_n[v] =
            (0.5 * traffic.lambda[v] * ell * stats.second_moment[v] +
             traffic.rho[v] * cycle * cycle) /
            (denom * cycle);
        if (traffic.lambda[v] > 0.0) {
            rep.throughput[v] = traffic.lambda[v] / rep.expected_n[v];
        } else {
            rep.throughput[v] = traffic.r[v];
            rep.throughput_undefined[v] = true;
        }
    }
    return rep;
}

} // namespace hbf
