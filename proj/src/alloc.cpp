#include "hbf/alloc.hpp"

#include <cmath>
#include <limits>

namespace hbf {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double f_alpha(double r, double alpha) {
    if (alpha == 1.0) return std::log(r);
    return std::pow(r, 1.0 - alpha) / (1.0 - alpha);
}

// Descending product gamma_v = kappa_v * prod over ancestors (1 - kappa).
std::vector<double> gamma_from_kappa(const CodebookTree& tree,
                                     const std::vector<double>& kappa) {
    int n = tree.node_count();
    std::vector<double> gamma(n + 1, 0.0), head(n + 1, 1.0);
    gamma[1] = kappa[1];
    head[1] = 1.0 - kappa[1];
    for (int v = 2; v <= n; ++v) {
        int p = tree.parent(v);
        gamma[v] = kappa[v] * head[p];
        head[v] = head[p] * (1.0 - kappa[v]);
    }
    return gamma;
}

} // namespace

bool feasible(const CodebookTree& tree, const std::vector<double>& gamma,
              double tol) {
    int n = tree.node_count();
    std::vector<double> path(n + 1, 0.0);
    for (int v = 1; v <= n; ++v) {
        path[v] = (v == 1 ? 0.0 : path[tree.parent(v)]) + gamma[v];
        if (path[v] > 1.0 + tol) return false;
    }
    return true;
}

AllocationResult pf_closed_form(const CodebookTree& tree,
                                const std::vector<long>& counts) {
    int n = tree.node_count();
    long total = 0;
    for (int v = 1; v <= n; ++v) total += counts[v];
    if (total < 1) throw EmptyPopulation("no flows: allocation undefined");

    std::vector<long> sub(n + 1, 0);
    for (int v = n; v >= 1; --v) {
        sub[v] = counts[v];
        for (int c : tree.children(v)) sub[v] += sub[c];
    }
    AllocationResult res;
    res.alpha = 1.0;
    res.kappa.assign(n + 1, 0.0);
    res.phi.assign(n + 1, 0.0);
    res.theta.assign(n + 1, 0.0);
    for (int v = 1; v <= n; ++v) {
        res.phi[v] = static_cast<double>(counts[v]);
        if (sub[v] > 0)
            res.kappa[v] = static_cast<double>(counts[v]) / static_cast<double>(sub[v]);
    }
    res.gamma = gamma_from_kappa(tree, res.kappa);
    res.utility = std::numeric_limits<double>::quiet_NaN();
    res.op_count = 2L * n;
    return res;
}

AllocationResult mt_closed_form(const CodebookTree& tree,
                                const std::vector<long>& counts) {
    int n = tree.node_count();
    std::vector<long> below(n + 1, 0); // flows strictly below v
    for (int v = n; v >= 1; --v)
        for (int c : tree.children(v)) below[v] += counts[c] + below[c];

    AllocationResult res;
    res.alpha = 0.0;
    res.gamma.assign(n + 1, 0.0);
    res.phi.assign(n + 1, 0.0);
    res.theta.assign(n + 1, 0.0);
    for (int v = 1; v <= n; ++v) res.gamma[v] = below[v] == 0 ? 1.0 : 0.0;
    // Convention only; vacuously-active empty beams make gamma leave conv(Z),
    // so no kappa parametrization reproduces it exactly.
    res.kappa = res.gamma;
    res.utility = std::numeric_limits<double>::quiet_NaN();
    res.op_count = 2L * n;
    return res;
}

AllocationResult alpha_fair(const CodebookTree& tree, const FlowPopulation& pop,
                            AlphaParam alpha_param) {
    if (pop.flows.empty()) throw EmptyPopulation("no flows: allocation undefined");
    for (const Flow& f : pop.flows)
        if (!(f.rate > 0.0))
            throw NonPositiveRate("flow " + std::to_string(f.id) +
                                  " has non-positive rate");

    const double alpha = alpha_param.effective();
    const int n = tree.node_count();
    std::vector<long> counts = pop.counts(tree);

    if (alpha == 1.0 || alpha == 0.0) {
        AllocationResult res = alpha == 1.0 ? pf_closed_form(tree, counts)
                                            : mt_closed_form(tree, counts);
        res.delta.resize(pop.flows.size());
        res.utility = 0.0;
        for (std::size_t i = 0; i < pop.flows.size(); ++i) {
            const Flow& f = pop.flows[i];
            res.delta[i] = 1.0 / static_cast<double>(counts[f.beam]);
            res.utility += f_alpha(f.rate * res.gamma[f.beam] * res.delta[i], alpha);
        }
        return res;
    }

    long ops = 0;
    const double inv_alpha = 1.0 / alpha;

    // phi_v = (sum over flows at v of r^(1/alpha - 1))^alpha, delta from the
    // same per-beam sums
    std::vector<double> rsum(n + 1, 0.0);
    for (const Flow& f : pop.flows) {
        rsum[f.beam] += std::pow(f.rate, inv_alpha - 1.0);
        ++ops;
    }
    AllocationResult res;
    res.alpha = alpha;
    res.phi.assign(n + 1, 0.0);
    res.theta.assign(n + 1, 0.0);
    res.kappa.assign(n + 1, 0.0);
    for (int v = 1; v <= n; ++v) {
        res.phi[v] = rsum[v] > 0.0 ? std::pow(rsum[v], alpha) : 0.0;
        ++ops;
    }
    res.delta.resize(pop.flows.size());
    for (std::size_t i = 0; i < pop.flows.size(); ++i) {
        const Flow& f = pop.flows[i];
        res.delta[i] = std::pow(f.rate, inv_alpha - 1.0) / rsum[f.beam];
        ++ops;
    }

    // ascending pass
    for (int v = n; v >= 1; --v) {
        double tau = 0.0;
        for (int c : tree.children(v)) {
            tau += res.theta[c];
            ++ops;
        }
        double& kappa = res.kappa[v];
        double& theta = res.theta[v];
        const double phi = res.phi[v];
        if (phi == 0.0) {
            // no flows at v: never worth activating
            kappa = 0.0;
            theta = tau;
        } else if (tau == 0.0) {
            // leaf, or all descendant subtrees empty
            kappa = 1.0;
            theta = phi / (1.0 - alpha);
        } else {
            // (1-alpha) and tau carry the same sign for alpha>1, so the ratio
            // stays nonnegative
            double ratio = (1.0 - alpha) * tau / phi;
            if (ratio > 1e300) {
                kappa = 0.0;
                theta = tau;
            } else {
                double t = std::pow(ratio, inv_alpha);
                if (!std::isfinite(t)) {
                    kappa = 0.0;
                    theta = tau;
                } else {
                    kappa = 1.0 / (1.0 + t);
                    theta = std::pow(kappa, 1.0 - alpha) * phi / (1.0 - alpha) +
                            std::pow(1.0 - kappa, 1.0 - alpha) * tau;
                }
            }
        }
        ++ops;
    }

    res.gamma = gamma_from_kappa(tree, res.kappa);
    ops += n;

    res.utility = 0.0;
    for (std::size_t i = 0; i < pop.flows.size(); ++i) {
        const Flow& f = pop.flows[i];
        res.utility += f_alpha(f.rate * res.gamma[f.beam] * res.delta[i], alpha);
        ++ops;
    }
    res.op_count = ops;
    return res;
}

ActivationSet draw_activation(const CodebookTree& tree,
                              const std::vector<double>& kappa,
                              std::mt19937_64& rng) {
    int n = tree.node_count();
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    ActivationSet z(n + 1, 0);
    std::vector<std::uint8_t> y(n + 1, 0), blocked(n + 1, 0);
    for (int v = 1; v <= n; ++v) y[v] = unif(rng) < kappa[v] ? 1 : 0;
    for (int v = 1; v <= n; ++v) {
        int p = tree.parent(v);
        blocked[v] = p == 0 ? 0 : static_cast<std::uint8_t>(blocked[p] || y[p]);
        z[v] = static_cast<std::uint8_t>(y[v] && !blocked[v]);
    }
    return z;
}

double kappa_objective(const CodebookTree& tree, const std::vector<double>& phi,
                       const std::vector<double>& kappa, double alpha) {
    std::vector<double> gamma = gamma_from_kappa(tree, kappa);
    double u = 0.0;
    for (int v = 1; v <= tree.node_count(); ++v) {
        if (phi[v] == 0.0) continue;
        u += phi[v] * f_alpha(gamma[v], alpha);
    }
    return u;
}

} // namespace hbf
