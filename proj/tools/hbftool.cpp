// Experiment driver: loads a codebook + traffic config, runs load sweeps for
// the analytic and simulated performance models, and emits CSV artifacts.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "hbf/alloc.hpp"
#include "hbf/codebook.hpp"
#include "hbf/elastic.hpp"
#include "hbf/sim.hpp"
#include "hbf/streaming.hpp"
#include "hbf/validate.hpp"

using nlohmann::json;

namespace {

std::string num(double x) {
    if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.12g", x);
    return buf;
}

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        bool known = false;
        for (const char* k : allowed)
            if (it.key() == k) known = true;
        if (!known)
            throw hbf::ConfigError("unknown config key '" + it.key() + "' in " +
                                   where);
    }
}

struct Experiment {
    hbf::Codebook codebook;
    hbf::TrafficModel traffic;
    std::vector<double> sweep = {1.0};
    hbf::AlphaParam alpha;
    std::vector<std::pair<double, double>> flow_points;
    int xi = 0;
    std::vector<int> s;
    hbf::SimConfig sim;
    std::string mt_moments = "exp-approx";
    std::string output = ".";
    std::string mode;
};

hbf::SimConfig parse_sim(const json& j) {
    check_keys(j,
               {"events", "warmup_fraction", "seed", "distribution", "policy",
                "batches"},
               "sim");
    hbf::SimConfig cfg;
    if (j.contains("events")) cfg.horizon_events = j.at("events").get<long>();
    if (j.contains("warmup_fraction"))
        cfg.warmup_fraction = j.at("warmup_fraction").get<double>();
    if (j.contains("seed")) cfg.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("batches")) cfg.batches = j.at("batches").get<int>();
    if (j.contains("policy")) {
        std::string p = j.at("policy").get<std::string>();
        if (p == "pf") cfg.policy = hbf::Policy::pf;
        else if (p == "mt") cfg.policy = hbf::Policy::mt;
        else if (p == "streaming") cfg.policy = hbf::Policy::streaming;
        else throw hbf::ConfigError("unknown sim policy '" + p + "'");
    }
    if (j.contains("distribution")) {
        const json& d = j.at("distribution");
        if (d.is_string()) {
            std::string name = d.get<std::string>();
            if (name == "exponential") cfg.dist = hbf::FlowSizeDist::exponential;
            else if (name == "deterministic")
                cfg.dist = hbf::FlowSizeDist::deterministic;
            else throw hbf::ConfigError("unknown distribution '" + name + "'");
        } else {
            check_keys(d, {"hyperexponential"}, "sim.distribution");
            const json& h = d.at("hyperexponential");
            check_keys(h, {"p", "m1", "m2"}, "sim.distribution.hyperexponential");
            cfg.dist = hbf::FlowSizeDist::hyperexponential;
            cfg.hyper_p = h.at("p").get<double>();
            cfg.hyper_m1 = h.at("m1").get<double>();
            cfg.hyper_m2 = h.at("m2").get<double>();
        }
    }
    cfg.validate();
    return cfg;
}

Experiment load_experiment(const std::string& path, const std::string& verb) {
    std::ifstream in(path);
    if (!in) throw hbf::IoError("cannot open config file: " + path);
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw hbf::ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    check_keys(j,
               {"mode", "codebook", "traffic", "sweep", "alpha", "flows",
                "streaming", "sim", "mt_moments", "output"},
               "config");

    Experiment ex{hbf::load_codebook([&] {
                      if (!j.contains("codebook"))
                          throw hbf::ConfigError("config needs a codebook path");
                      std::filesystem::path p = j.at("codebook").get<std::string>();
                      if (p.is_relative())
                          p = std::filesystem::path(path).parent_path() / p;
                      return p.string();
                  }()),
                  hbf::TrafficModel{}};
    ex.mode = verb;
    if (j.contains("mode") && j.at("mode").get<std::string>() != verb)
        throw hbf::ConfigError("config mode '" +
                               j.at("mode").get<std::string>() +
                               "' does not match the command verb '" + verb + "'");

    const int n = ex.codebook.tree.node_count();
    if (j.contains("traffic")) {
        const json& t = j.at("traffic");
        check_keys(t, {"lambda", "rho", "r"}, "traffic");
        std::vector<double> r = t.at("r").get<std::vector<double>>();
        if (t.contains("lambda") == t.contains("rho"))
            throw hbf::ConfigError("traffic needs exactly one of lambda or rho");
        if (t.contains("lambda"))
            ex.traffic = hbf::TrafficModel::from_lambda_r(
                t.at("lambda").get<std::vector<double>>(), r);
        else
            ex.traffic = hbf::TrafficModel::from_rho_r(
                t.at("rho").get<std::vector<double>>(), r);
        if (static_cast<int>(ex.traffic.lambda.size()) != n + 1)
            throw hbf::ConfigError("traffic vector length must equal beam count");
    }
    if (j.contains("sweep")) {
        ex.sweep = j.at("sweep").get<std::vector<double>>();
        if (ex.sweep.empty()) throw hbf::ConfigError("sweep must be nonempty");
        for (double f : ex.sweep)
            if (!(f > 0.0)) throw hbf::ConfigError("sweep factors must be positive");
    }
    if (j.contains("alpha")) {
        if (j.at("alpha").is_string()) {
            if (j.at("alpha").get<std::string>() != "max-min")
                throw hbf::ConfigError("alpha must be a number or \"max-min\"");
            ex.alpha = hbf::AlphaParam::max_min();
        } else {
            ex.alpha = hbf::AlphaParam{j.at("alpha").get<double>()};
            if (ex.alpha.alpha < 0.0)
                throw hbf::ConfigError("alpha must be nonnegative");
        }
    }
    if (j.contains("flows")) {
        for (const json& f : j.at("flows")) {
            check_keys(f, {"x", "y"}, "flows[]");
            ex.flow_points.emplace_back(f.at("x").get<double>(),
                                        f.at("y").get<double>());
        }
    }
    if (j.contains("streaming")) {
        const json& s = j.at("streaming");
        check_keys(s, {"xi", "s"}, "streaming");
        ex.xi = s.at("xi").get<int>();
        ex.s = s.at("s").get<std::vector<int>>();
        if (static_cast<int>(ex.s.size()) != n)
            throw hbf::ConfigError("circuit demand vector length must equal beam count");
    }
    if (j.contains("sim")) ex.sim = parse_sim(j.at("sim"));
    if (j.contains("mt_moments")) {
        ex.mt_moments = j.at("mt_moments").get<std::string>();
        if (ex.mt_moments != "exp-approx" && ex.mt_moments != "simulated")
            throw hbf::ConfigError("mt_moments must be exp-approx or simulated");
    }
    if (j.contains("output")) ex.output = j.at("output").get<std::string>();
    return ex;
}

std::ofstream open_output(const Experiment& ex, const std::string& file) {
    std::filesystem::create_directories(ex.output);
    auto path = std::filesystem::path(ex.output) / file;
    std::ofstream out(path, std::ios::binary); // binary: LF endings everywhere
    if (!out) throw hbf::IoError("cannot write " + path.string());
    return out;
}

void require_traffic(const Experiment& ex) {
    if (ex.traffic.lambda.size() < 2)
        throw hbf::ConfigError("this mode needs a traffic section");
}

int run_allocate(const Experiment& ex) {
    if (ex.flow_points.empty())
        throw hbf::ConfigError("allocate needs a flows list");
    hbf::FlowPopulation pop;
    int id = 0;
    for (auto [x, y] : ex.flow_points) pop.flows.push_back({id++, x, y});
    hbf::associate_all(ex.codebook, pop);
    hbf::AllocationResult res = hbf::alpha_fair(ex.codebook.tree, pop, ex.alpha);

    json out;
    out["alpha"] = res.alpha;
    out["utility"] = res.utility;
    out["kappa"] = std::vector<double>(res.kappa.begin() + 1, res.kappa.end());
    out["gamma"] = std::vector<double>(res.gamma.begin() + 1, res.gamma.end());
    out["delta"] = res.delta;
    json flows = json::array();
    for (const hbf::Flow& f : pop.flows)
        flows.push_back({{"x", f.x}, {"y", f.y}, {"beam", f.beam}, {"rate", f.rate}});
    out["flows"] = flows;
    auto os = open_output(ex, "allocation.json");
    os << out.dump(2) << "\n";
    return 0;
}

void elastic_rows(std::ostream& os, const hbf::CodebookTree& tree,
                  const hbf::TrafficModel& traffic, double factor,
                  const hbf::PerformanceReport& rep,
                  const hbf::SimEstimate* sim = nullptr) {
    for (int v = 1; v <= tree.node_count(); ++v) {
        double psi = sim ? sim->throughput[v] : rep.throughput[v];
        double en = sim ? sim->expected_n[v] : rep.expected_n[v];
        os << num(factor) << ',' << v << ',' << tree.depth(v) << ','
           << rep.method << ',' << num(traffic.lambda[v]) << ','
           << num(traffic.rho[v]) << ',' << num(en);
        if (sim) os << ',' << num(sim->se_n[v]);
        os << ',' << num(psi);
        if (sim) os << ',' << num(sim->se_throughput[v]);
        os << ',' << num(psi / traffic.r[v]) << '\n';
    }
}

int run_analyze_pf(const Experiment& ex) {
    require_traffic(ex);
    auto os = open_output(ex, "pf.csv");
    double crit = hbf::critical_load_factor(ex.codebook.tree, ex.traffic);
    os << "# critical_load_factor=" << num(crit) << "\n";
    os << "load_factor,beam,depth,method,lambda,rho,expected_n,throughput,"
          "normalized_throughput\n";
    for (double f : ex.sweep) {
        hbf::TrafficModel t = ex.traffic.scaled(f);
        auto rep = hbf::pf_performance(ex.codebook.tree, t);
        elastic_rows(os, ex.codebook.tree, t, f, rep);
    }
    return 0;
}

int run_analyze_mt(const Experiment& ex) {
    require_traffic(ex);
    auto os = open_output(ex, "mt.csv");
    os << "load_factor,beam,depth,method,lambda,rho,expected_n,throughput,"
          "normalized_throughput\n";
    for (double f : ex.sweep) {
        hbf::TrafficModel t = ex.traffic.scaled(f);
        hbf::PerformanceReport rep;
        if (ex.codebook.tree.is_line() && ex.mt_moments == "exp-approx") {
            double total = 0.0;
            for (int v = 1; v <= ex.codebook.tree.node_count(); ++v)
                total += t.rho[v];
            if (total < 1.0) {
                rep = hbf::mt_line_performance(ex.codebook.tree, t);
                elastic_rows(os, ex.codebook.tree, t, f, rep);
                continue;
            }
        }
        hbf::BusyPeriodStats stats =
            ex.mt_moments == "simulated"
                ? hbf::simulated_busy_stats(ex.codebook.tree, t, 10'000,
                                            ex.sim.seed)
                : hbf::mt_void_and_busy(ex.codebook.tree, t, false);
        rep = hbf::mt_tree_performance(ex.codebook.tree, t, stats);
        elastic_rows(os, ex.codebook.tree, t, f, rep);
    }
    return 0;
}

int run_analyze_streaming(const Experiment& ex) {
    require_traffic(ex);
    if (ex.xi == 0) throw hbf::ConfigError("analyze-streaming needs a streaming section");
    auto os = open_output(ex, "streaming.csv");
    os << "load_factor,beam,depth,s_v,rho,blocking_probability,method\n";
    for (double f : ex.sweep) {
        hbf::TrafficModel t = ex.traffic.scaled(f);
        auto model = hbf::StreamingModel::make(ex.xi, ex.s, t);
        auto rep = hbf::blocking_probabilities(ex.codebook.tree, model);
        for (int v = 1; v <= ex.codebook.tree.node_count(); ++v)
            os << num(f) << ',' << v << ',' << ex.codebook.tree.depth(v) << ','
               << model.s[v] << ',' << num(t.rho[v]) << ',' << num(rep.p[v])
               << ',' << rep.method << '\n';
    }
    return 0;
}

int run_simulate(const Experiment& ex) {
    require_traffic(ex);
    if (ex.sim.policy == hbf::Policy::streaming) {
        if (ex.xi == 0)
            throw hbf::ConfigError("streaming simulation needs a streaming section");
        auto os = open_output(ex, "simulate.csv");
        os << "load_factor,beam,depth,s_v,rho,blocking_probability,"
              "se_blocking_probability,method\n";
        for (double f : ex.sweep) {
            hbf::TrafficModel t = ex.traffic.scaled(f);
            auto model = hbf::StreamingModel::make(ex.xi, ex.s, t);
            auto est = hbf::simulate_streaming(ex.codebook.tree, model, ex.sim);
            for (int v = 1; v <= ex.codebook.tree.node_count(); ++v)
                os << num(f) << ',' << v << ',' << ex.codebook.tree.depth(v)
                   << ',' << model.s[v] << ',' << num(t.rho[v]) << ','
                   << num(est.blocking[v]) << ',' << num(est.se_blocking[v])
                   << ",simulation\n";
        }
        return 0;
    }
    auto os = open_output(ex, "simulate.csv");
    os << "load_factor,beam,depth,method,lambda,rho,expected_n,se_expected_n,"
          "throughput,se_throughput,normalized_throughput\n";
    for (double f : ex.sweep) {
        hbf::TrafficModel t = ex.traffic.scaled(f);
        auto est = hbf::simulate_elastic(ex.codebook.tree, t, ex.sim.policy, ex.sim);
        hbf::PerformanceReport rep;
        rep.method = est.diverging ? "simulation-diverging" : "simulation";
        hbf::SimEstimate* se = &est;
        elastic_rows(os, ex.codebook.tree, t, f, rep, se);
    }
    return 0;
}

int run_validate(std::uint64_t seed, bool quick) {
    hbf::validate::AcceptanceOptions opts;
    if (seed) opts.seed = seed;
    if (quick) {
        opts.sim_events = 1'000'000;
        opts.light_sim_events = 300'000;
    }
    auto results = hbf::validate::run_acceptance(opts);
    bool ok = true;
    for (const auto& r : results) {
        std::cout << (r.pass ? "[PASS] " : "[FAIL] ") << "criterion " << r.id
                  << ": " << r.name << " (" << r.detail << ")\n";
        ok = ok && r.pass;
    }
    return ok ? 0 : 1;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"hierarchical beamforming performance models"};
    app.require_subcommand(1);

    std::string config_path;
    std::optional<std::uint64_t> seed_override;
    std::optional<std::string> output_override;
    bool quick = false;

    auto add_common = [&](CLI::App* sub, bool config_required) {
        auto* opt = sub->add_option("--config", config_path, "experiment config JSON");
        if (config_required) opt->required();
        sub->add_option("--seed", seed_override, "override the config seed");
        sub->add_option("--output", output_override, "override the output directory");
    };

    const char* verbs[] = {"allocate", "analyze-pf", "analyze-mt",
                           "analyze-streaming", "simulate"};
    for (const char* v : verbs) add_common(app.add_subcommand(v), true);
    auto* validate_cmd = app.add_subcommand("validate", "run the oracle-equivalence suite");
    add_common(validate_cmd, false);
    validate_cmd->add_flag("--quick", quick, "reduced simulation horizons");

    CLI11_PARSE(app, argc, argv);
    std::string verb = app.get_subcommands().front()->get_name();

    try {
        if (verb == "validate")
            return run_validate(seed_override.value_or(0), quick);
        Experiment ex = load_experiment(config_path, verb);
        if (seed_override) ex.sim.seed = *seed_override;
        if (output_override) ex.output = *output_override;
        if (verb == "allocate") return run_allocate(ex);
        if (verb == "analyze-pf") return run_analyze_pf(ex);
        if (verb == "analyze-mt") return run_analyze_mt(ex);
        if (verb == "analyze-streaming") return run_analyze_streaming(ex);
        if (verb == "simulate") return run_simulate(ex);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
