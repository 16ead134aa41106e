// Command-line front end: batch simulation, inefficiency-bound sweeps, chain
// fitting and the two-origin road-network experiment.

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "routing/datafit.hpp"
#include "routing/hybrid.hpp"
#include "routing/poa.hpp"
#include "routing/simulate.hpp"

using nlohmann::json;
using namespace routing;

namespace {

constexpr int kExitConfig = 2;
constexpr int kExitNumeric = 3;

struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

void check_keys(const json& j, const std::string& where, const std::set<std::string>& allowed) {
    for (const auto& [key, _] : j.items())
        if (!allowed.count(key))
            throw ConfigError("config error at " + where + ": unknown key '" + key + "'");
}

const json& field(const json& j, const std::string& where, const std::string& key) {
    if (!j.contains(key))
        throw ConfigError("config error at " + where + ": missing required field '" + key + "'");
    return j.at(key);
}

double num_field(const json& j, const std::string& where, const std::string& key) {
    const json& v = field(j, where, key);
    if (!v.is_number())
        throw ConfigError("config error at " + where + "." + key + ": expected a number");
    return v.get<double>();
}

MechanismKind parse_mechanism(const std::string& name) {
    for (MechanismKind k : {MechanismKind::Sharing, MechanismKind::Hiding,
                            MechanismKind::DeterministicRecommendation, MechanismKind::Upr,
                            MechanismKind::SocialOptimum})
        if (mechanism_name(k) == name) return k;
    throw ConfigError("config error: unknown mechanism '" + name +
                      "' (expected sharing|hiding|deterministic|upr|optimum)");
}

std::uint64_t default_seed() {
    if (const char* env = std::getenv("ROUTING_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw ConfigError("config error: ROUTING_SEED is not an unsigned integer");
        }
    }
    return 1;
}

struct SimulateConfig {
    NetworkConfig net;
    std::vector<double> x0;
    int horizon = 0;
    std::size_t episodes = 0;
    std::uint64_t seed = 1;
    std::vector<MechanismKind> mechanisms;
    std::string summary_path;  // empty = stdout
    std::string trace_prefix;  // empty = no traces
};

SimulateConfig load_simulate_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config error: cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("config error in " + path + ": " + e.what());
    }

    check_keys(j, "<root>", {"network", "run", "mechanisms", "output"});
    const json& net = field(j, "<root>", "network");
    const json& run = field(j, "<root>", "run");
    const json& mechs = field(j, "<root>", "mechanisms");

    SimulateConfig out;
    check_keys(net, "network", {"c0", "paths", "arrival_mass", "congestion_coeff"});
    out.net.det_path = PathModel::deterministic(num_field(net, "network", "c0"));
    const json& paths = field(net, "network", "paths");
    if (!paths.is_array() || paths.empty())
        throw ConfigError("config error at network.paths: expected a non-empty array");
    for (std::size_t i = 0; i < paths.size(); ++i) {
        const std::string where = "network.paths[" + std::to_string(i) + "]";
        const json& p = paths[i];
        check_keys(p, where, {"c_low", "c_high", "q_lh", "q_hh"});
        out.net.stoch_paths.push_back(
            PathModel::stochastic(num_field(p, where, "c_low"), num_field(p, where, "c_high"),
                                  num_field(p, where, "q_lh"), num_field(p, where, "q_hh")));
    }
    if (net.contains("arrival_mass")) out.net.arrival_mass = num_field(net, "network", "arrival_mass");
    if (net.contains("congestion_coeff"))
        out.net.congestion_coeff = net.at("congestion_coeff").get<std::vector<double>>();

    check_keys(run, "run", {"rho", "epsilon", "horizon", "episodes", "seed", "x0"});
    out.net.rho = num_field(run, "run", "rho");
    out.net.epsilon = num_field(run, "run", "epsilon");
    out.horizon = static_cast<int>(num_field(run, "run", "horizon"));
    out.episodes = static_cast<std::size_t>(num_field(run, "run", "episodes"));
    out.seed = run.contains("seed") ? run.at("seed").get<std::uint64_t>() : default_seed();
    if (run.contains("x0")) {
        out.x0 = run.at("x0").get<std::vector<double>>();
        if (out.x0.size() != out.net.num_stochastic())
            throw ConfigError("config error at run.x0: expected one belief per stochastic path");
    } else {
        for (const auto& p : out.net.stoch_paths) out.x0.push_back(p.stationary_high());
    }

    if (!mechs.is_array() || mechs.empty())
        throw ConfigError("config error at mechanisms: expected a non-empty array");
    for (const auto& m : mechs) out.mechanisms.push_back(parse_mechanism(m.get<std::string>()));

    if (j.contains("output")) {
        const json& o = j.at("output");
        check_keys(o, "output", {"summary", "traces"});
        if (o.contains("summary")) out.summary_path = o.at("summary").get<std::string>();
        if (o.contains("traces")) out.trace_prefix = o.at("traces").get<std::string>();
    }
    out.net.validate();
    if (out.horizon < 1 || out.episodes < 1)
        throw ConfigError("config error at run: horizon and episodes must be >= 1");
    return out;
}

std::ostream& open_or_stdout(std::ofstream& file, const std::string& path) {
    if (path.empty()) return std::cout;
    file.open(path, std::ios::binary);
    if (!file) throw ConfigError("config error: cannot write '" + path + "'");
    return file;
}

int cmd_simulate(const std::string& config_path, unsigned threads) {
    const SimulateConfig cfg = load_simulate_config(config_path);
    std::ofstream file;
    std::ostream& os = open_or_stdout(file, cfg.summary_path);
    os << "mechanism,mean,std_error,episodes\n";
    char buf[160];
    for (MechanismKind kind : cfg.mechanisms) {
        std::vector<EpisodeTrace> traces;
        const BatchSummary s =
            run_batch(cfg.net, kind, cfg.x0, cfg.horizon, cfg.episodes, cfg.seed, threads,
                      cfg.trace_prefix.empty() ? nullptr : &traces);
        std::snprintf(buf, sizeof(buf), "%s,%.10g,%.10g,%zu\n", mechanism_name(kind).c_str(),
                      s.mean, s.std_error, s.episodes);
        os << buf;
        for (const auto& tr : traces) {
            const std::string path = cfg.trace_prefix + "_" + mechanism_name(kind) + "_" +
                                     std::to_string(tr.episode) + ".trace";
            std::ofstream tf(path, std::ios::binary);
            if (!tf) throw ConfigError("config error: cannot write '" + path + "'");
            write_trace(tf, tr);
        }
    }
    return 0;
}

int cmd_poa(const std::string& scenario, double dial, std::size_t n_paths, double delta,
            std::size_t episodes, std::uint64_t seed, std::string mechanism,
            const std::string& output, unsigned threads) {
    ScenarioKind kind;
    if (scenario == "prop1") kind = ScenarioKind::Prop1;
    else if (scenario == "prop2") kind = ScenarioKind::Prop2;
    else if (scenario == "prop3") kind = ScenarioKind::Prop3;
    else throw ConfigError("config error: unknown scenario '" + scenario + "'");

    PoAScenario sc = worst_case_scenario(kind, dial, n_paths);
    if (delta > 0.0) sc.delta = delta;
    if (mechanism.empty())
        mechanism = kind == ScenarioKind::Prop1   ? "sharing"
                    : kind == ScenarioKind::Prop2 ? "hiding"
                                                  : "upr";
    const MechanismKind mech = parse_mechanism(mechanism);

    const PoaEstimate est =
        poa_estimate(sc.cfg, mech, sc.x0, sc.suggested_horizon(), episodes, seed, threads);
    double bound;
    switch (mech) {
        case MechanismKind::Sharing: bound = sharing_poa_bound(sc.bound_params()); break;
        case MechanismKind::Hiding: bound = hiding_poa_bound(sc.bound_params()); break;
        case MechanismKind::Upr: bound = upr_poa_value(n_paths); break;
        default: bound = 1.0; break;
    }
    PoaReportRow row{scenario, dial, n_paths, mechanism, est.ratio, bound, est.ratio - bound};

    std::ofstream file;
    std::ostream& os = open_or_stdout(file, output);
    write_poa_report_csv(os, {row});
    return 0;
}

int cmd_fit(const std::string& csv_path, double threshold, const std::string& output) {
    std::ifstream in(csv_path);
    if (!in) throw ConfigError("config error: cannot open '" + csv_path + "'");
    const auto series = read_speed_csv(in);

    json out = json::object();
    for (const auto& s : series) {
        const FittedChain fit = fit_transition_matrix(discretize(s, threshold));
        out[s.road_id] = {
            {"threshold", threshold},
            {"matrix", {{fit.matrix[0][0], fit.matrix[0][1]}, {fit.matrix[1][0], fit.matrix[1][1]}}},
            {"degenerate", fit.degenerate},
        };
    }
    std::ofstream file;
    std::ostream& os = open_or_stdout(file, output);
    os << out.dump(2) << "\n";
    return 0;
}

int cmd_hybrid(std::uint64_t seed, std::size_t episodes, int horizon, bool no_noise,
               const std::vector<std::string>& mechanisms, const std::string& output,
               unsigned threads) {
    const HybridNetwork net = build_shanghai_fixture();
    std::vector<MechanismKind> kinds;
    if (mechanisms.empty() || (mechanisms.size() == 1 && mechanisms[0] == "all")) {
        kinds = {MechanismKind::Hiding, MechanismKind::Sharing, MechanismKind::Upr};
    } else {
        for (const auto& m : mechanisms) kinds.push_back(parse_mechanism(m));
    }
    HybridExperimentOptions opts;
    opts.seed = seed;
    opts.episodes = episodes;
    opts.horizon = horizon;
    opts.arrival_noise = !no_noise;
    opts.threads = threads;

    const auto results = run_hybrid_experiment(net, kinds, opts);
    std::ofstream file;
    std::ostream& os = open_or_stdout(file, output);
    write_hybrid_report_csv(os, results);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Routing-game simulation and analysis toolkit"};
    app.require_subcommand(1);
    unsigned threads = 0;
    app.add_option("--threads", threads, "Worker threads (0 = all cores)")->capture_default_str();

    std::string config_path;
    auto* sim = app.add_subcommand("simulate", "Run a batch simulation from a JSON config");
    sim->add_option("config", config_path, "JSON run configuration")->required();

    std::string scenario, poa_mechanism, poa_output;
    double dial = 0.5, delta = 0.0;
    std::size_t poa_paths = 1, poa_episodes = 200;
    std::uint64_t poa_seed = 0;
    auto* poa = app.add_subcommand("poa", "Empirical vs closed-form inefficiency ratios");
    poa->add_option("--scenario", scenario, "prop1|prop2|prop3")->required();
    poa->add_option("--dial", dial, "Severity dial in (0,1)")->capture_default_str();
    poa->add_option("--paths", poa_paths, "Number of stochastic paths")->capture_default_str();
    poa->add_option("--delta", delta, "Learning-horizon cutoff (0 = scenario default)");
    poa->add_option("--episodes", poa_episodes, "Episodes per estimate")->capture_default_str();
    poa->add_option("--seed", poa_seed, "Base seed")->envname("ROUTING_SEED");
    poa->add_option("--mechanism", poa_mechanism, "Mechanism (default fits the scenario)");
    poa->add_option("--output", poa_output, "Report CSV path (default stdout)");

    std::string fit_csv, fit_output;
    double threshold = 0.0;
    auto* fit = app.add_subcommand("fit", "Fit two-state chains from a speed-band CSV");
    fit->add_option("csv", fit_csv, "Input CSV: timestamp,road_id,speed_band")->required();
    fit->add_option("--threshold", threshold, "High-cost state iff band < threshold")->required();
    fit->add_option("--output", fit_output, "Fitted matrices JSON path (default stdout)");

    std::uint64_t hy_seed = 0;
    std::size_t hy_episodes = 100;
    int hy_horizon = 30;
    bool no_noise = false;
    std::vector<std::string> hy_mechanisms;
    std::string hy_output;
    auto* hy = app.add_subcommand("hybrid", "Two-origin road-network comparison");
    hy->add_option("--seed", hy_seed, "Base seed")->envname("ROUTING_SEED");
    hy->add_option("--episodes", hy_episodes, "Episodes")->capture_default_str();
    hy->add_option("--horizon", hy_horizon, "Slots per episode")->capture_default_str();
    hy->add_flag("--no-noise", no_noise, "Disable arrival noise");
    hy->add_option("--mechanisms", hy_mechanisms, "Mechanisms to compare (or 'all')");
    hy->add_option("--output", hy_output, "Comparison CSV path (default stdout)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kExitConfig;
    }

    try {
        if (poa_seed == 0) poa_seed = default_seed();
        if (hy_seed == 0) hy_seed = default_seed();
        if (*sim) return cmd_simulate(config_path, threads);
        if (*poa)
            return cmd_poa(scenario, dial, poa_paths, delta, poa_episodes, poa_seed, poa_mechanism,
                           poa_output, threads);
        if (*fit) return cmd_fit(fit_csv, threshold, fit_output);
        if (*hy)
            return cmd_hybrid(hy_seed, hy_episodes, hy_horizon, no_noise, hy_mechanisms, hy_output,
                              threads);
    } catch (const ConfigError& e) {
        std::cerr << e.what() << "\n";
        return kExitConfig;
    } catch (const ContractViolation& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const json::exception& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kExitConfig;
    } catch (const std::runtime_error& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return kExitNumeric;
    }
    return 0;
}
