#include "hbf/streaming.hpp"

#include <algorithm>
#include <cmath>

namespace hbf {

StreamingModel StreamingModel::make(int xi, std::vector<int> s,
                                    TrafficModel traffic) {
    if (xi < 1) throw ConfigError("xi must be a positive integer");
    StreamingModel m;
    m.xi = xi;
    m.s = std::move(s);
    m.s.insert(m.s.begin(), 0); // 1-based
    m.traffic = std::move(traffic);
    if (m.s.size() != m.traffic.lambda.size())
        throw ConfigError("circuit demand vector length must equal beam count");
    for (std::size_t v = 1; v < m.s.size(); ++v)
        if (m.s[v] < 1 || m.s[v] > xi)
            throw ConfigError("circuit demands must lie in [1, xi]");
    return m;
}

bool admissible(const CodebookTree& tree, const StreamingModel& model,
                const std::vector<long>& state) {
    int n = tree.node_count();
    std::vector<long> used(n + 1, 0);
    for (int v = 1; v <= n; ++v) {
        used[v] = (v == 1 ? 0 : used[tree.parent(v)]) + state[v] * model.s[v];
        if (used[v] > model.xi) return false;
    }
    return true;
}

BlockingReport blocking_probabilities(const CodebookTree& tree,
                                      const StreamingModel& model) {
    const int n = tree.node_count();
    const int xi = model.xi;
    const auto& rho = model.traffic.rho;
    const auto& s = model.s;
    long ops = 0;

    // Phase 1: partial normalization constants c_v(s), leaves first.
    // c_v(0) = 1: only the empty state fits.
    std::vector<std::vector<double>> c(n + 1, std::vector<double>(xi + 1, 0.0));
    for (int v = n; v >= 1; --v) {
        for (int budget = 0; budget <= xi; ++budget) {
            double acc = 0.0;
            double weight = 1.0; // rho^l / l!
            for (int l = 0; l * s[v] <= budget; ++l) {
                if (l > 0) weight *= rho[v] / l;
                double t = weight;
                for (int child : tree.children(v))
                    t *= c[child][budget - l * s[v]];
                acc += t;
            }
            c[v][budget] = acc;
            // op accounting: one table cell per (v, budget), weighted by degree
            ops += tree.degree(v) + 1;
        }
    }

    BlockingReport rep;
    rep.method = "blocking-dp";
    rep.normalization = c[1][xi];
    rep.p.assign(n + 1, 0.0);

    // Phase 2: for each class v, propagate q_{v,.} along the ancestor path.
    for (int v = 1; v <= n; ++v) {
        std::vector<double> q(xi + 1, 0.0); // q_{v, current path node}
        for (int budget = 0; budget <= xi; ++budget)
            q[budget] = budget >= s[v] ? c[v][budget - s[v]] : 0.0;
        int on_path = v;
        while (on_path != 1) {
            int a = tree.parent(on_path);
            std::vector<double> qa(xi + 1, 0.0);
            for (int budget = 0; budget <= xi; ++budget) {
                double acc = 0.0;
                double weight = 1.0;
                for (int l = 0; l * s[a] <= budget; ++l) {
                    if (l > 0) weight *= rho[a] / l;
                    double t = weight;
                    for (int child : tree.children(a))
                        t *= child == on_path ? q[budget - l * s[a]]
                                              : c[child][budget - l * s[a]];
                    acc += t;
                }
                qa[budget] = acc;
                ops += tree.degree(a) + 1;
            }
            q = std::move(qa);
            on_path = a;
        }
        rep.p[v] = 1.0 - q[xi] / c[1][xi];
    }
    rep.op_count = ops;
    return rep;
}

double streaming_stationary_prob(const CodebookTree& tree,
                                 const StreamingModel& model,
                                 const std::vector<long>& state) {
    if (!admissible(tree, model, state))
        throw Inadmissible("state outside the admission region");
    double w = 1.0;
    for (int v = 1; v <= tree.node_count(); ++v)
        for (long i = 1; i <= state[v]; ++i) w *= model.traffic.rho[v] / i;
    return w / blocking_probabilities(tree, model).normalization;
}

BlockingReport blocking_enumeration(const CodebookTree& tree,
                                    const StreamingModel& model,
                                    long max_states) {
    const int n = tree.node_count();
    const int xi = model.xi;
    BlockingReport rep;
    rep.method = "enumeration";
    rep.p.assign(n + 1, 0.0);

    std::vector<long> state(n + 1, 0), used(n + 1, 0);
    std::vector<double> blocked_sum(n + 1, 0.0);
    double total = 0.0;
    long visited = 0;

    // Nodes are depth-sorted, so assigning in id order keeps every ancestor
    // path budget checkable incrementally.
    auto weight_of = [&]() {
        double w = 1.0;
        for (int v = 1; v <= n; ++v)
            for (long i = 1; i <= state[v]; ++i) w *= model.traffic.rho[v] / i;
        return w;
    };

    std::vector<long> maxpath(n + 1, 0);
    auto visit_complete = [&]() {
        if (++visited > max_states)
            throw TooLarge("admissible state space exceeds the enumeration guard");
        double w = weight_of();
        total += w;
        // n + e^v admissible iff every path through the subtree of v has
        // s_v spare circuits
        for (int v = n; v >= 1; --v) {
            maxpath[v] = used[v];
            for (int c : tree.children(v)) maxpath[v] = std::max(maxpath[v], maxpath[c]);
        }
        for (int v = 1; v <= n; ++v)
            if (maxpath[v] + model.s[v] > xi) blocked_sum[v] += w;
    };

    auto rec = [&](auto&& self, int v) -> void {
        if (v > n) {
            visit_complete();
            return;
        }
        long anc_used = v == 1 ? 0 : used[tree.parent(v)];
        for (long k = 0; anc_used + k * model.s[v] <= xi; ++k) {
            state[v] = k;
            used[v] = anc_used + k * model.s[v];
            self(self, v + 1);
        }
        state[v] = 0;
    };
    rec(rec, 1);

    rep.normalization = total;
    for (int v = 1; v <= n; ++v) rep.p[v] = blocked_sum[v] / total;
    rep.op_count = visited;
    return rep;
}

double erlang_b(int xi, double rho) {
    double b = 1.0;
    for (int k = 1; k <= xi; ++k) b = rho * b / (k + rho * b);
    return b;
}

} // namespace hbf
