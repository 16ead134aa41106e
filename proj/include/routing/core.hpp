#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace routing {

/// Absolute tolerance for comparisons against case boundaries (e.g. the
/// E[c] >= c0 + 1 branch cuts). Ties resolve to the interior expression.
inline constexpr double kBoundaryTol = 1e-9;

/// Tolerance for flow-conservation checks.
inline constexpr double kFlowTol = 1e-12;

struct ContractViolation : std::logic_error {
    explicit ContractViolation(const std::string& what) : std::logic_error(what) {}
};

inline void require(bool cond, const char* msg) {
    if (!cond) throw ContractViolation(msg);
}

/// One path of the parallel network: either a fixed-cost deterministic path
/// or a stochastic path whose internal cost follows a two-state Markov chain
/// alternating between c_low and c_high.
struct PathModel {
    enum class Kind { Deterministic, Stochastic };

    Kind kind = Kind::Deterministic;
    double c_fixed = 0.0;            // deterministic only
    double c_low = 0.0;              // stochastic only, c_low < c_high
    double c_high = 0.0;
    double q_lh = 0.0;               // P(low -> high), q_lh < 1 - q_lh
    double q_hh = 0.0;               // P(high -> high), 1 - q_hh < q_hh

    static PathModel deterministic(double cost) {
        PathModel p;
        p.kind = Kind::Deterministic;
        p.c_fixed = cost;
        return p;
    }

    static PathModel stochastic(double c_low, double c_high, double q_lh, double q_hh) {
        PathModel p;
        p.kind = Kind::Stochastic;
        p.c_low = c_low;
        p.c_high = c_high;
        p.q_lh = q_lh;
        p.q_hh = q_hh;
        p.validate();
        return p;
    }

    bool is_stochastic() const { return kind == Kind::Stochastic; }

    double q_ll() const { return 1.0 - q_lh; }
    double q_hl() const { return 1.0 - q_hh; }

    /// Stationary probability of the high-cost state.
    double stationary_high() const { return q_lh / (q_lh + 1.0 - q_hh); }

    void validate() const {
        if (kind == Kind::Deterministic) return;
        require(q_lh > 0.0 && q_lh < 1.0, "PathModel: q_lh must lie in (0,1)");
        require(q_hh > 0.0 && q_hh < 1.0, "PathModel: q_hh must lie in (0,1)");
        require(q_lh < q_ll(), "PathModel: requires q_lh < q_ll");
        require(q_hl() < q_hh, "PathModel: requires q_hl < q_hh");
        require(c_low <= c_high, "PathModel: requires c_low <= c_high");
    }
};

/// Parallel network with deterministic path 0 and N stochastic paths.
struct NetworkConfig {
    PathModel det_path;                  // index 0
    std::vector<PathModel> stoch_paths;  // indices 1..N
    double rho = 0.95;                   // discount factor, in (0,1)
    double epsilon = 1e-3;               // minimum exploration flow
    double arrival_mass = 1.0;           // per-slot arriving flow
    std::vector<double> congestion_coeff;  // per path 0..N, defaults to 1

    std::size_t num_stochastic() const { return stoch_paths.size(); }
    std::size_t num_paths() const { return stoch_paths.size() + 1; }

    double c0() const { return det_path.c_fixed; }

    double coeff(std::size_t path) const {
        return congestion_coeff.empty() ? 1.0 : congestion_coeff.at(path);
    }

    const PathModel& stoch(std::size_t i) const {
        require(i >= 1 && i <= stoch_paths.size(), "NetworkConfig: stochastic path index out of range");
        return stoch_paths[i - 1];
    }

    void validate() const {
        require(!stoch_paths.empty(), "NetworkConfig: need at least one stochastic path");
        require(det_path.kind == PathModel::Kind::Deterministic, "NetworkConfig: path 0 must be deterministic");
        require(rho > 0.0 && rho < 1.0, "NetworkConfig: rho must lie in (0,1)");
        require(epsilon > 0.0, "NetworkConfig: epsilon must be positive");
        require(arrival_mass > 0.0, "NetworkConfig: arrival_mass must be positive");
        if (!congestion_coeff.empty())
            require(congestion_coeff.size() == num_paths(), "NetworkConfig: congestion_coeff size mismatch");
        for (const auto& p : stoch_paths) {
            require(p.is_stochastic(), "NetworkConfig: stoch_paths entry is not stochastic");
            p.validate();
        }
    }

    /// True when every stochastic path satisfies E[c|q_LH] < c0 and
    /// E[c|q_HH] > c0, the regime where exploration-vs-exploitation is
    /// non-trivial.
    bool non_trivial_regime() const;
};

/// Nonnegative flow per path (index 0 = deterministic), summing to the
/// arrival mass.
struct FlowAllocation {
    std::vector<double> f;  // size N+1

    double total() const {
        double s = 0.0;
        for (double v : f) s += v;
        return s;
    }

    double& operator[](std::size_t i) { return f[i]; }
    double operator[](std::size_t i) const { return f[i]; }
    std::size_t size() const { return f.size(); }

    static FlowAllocation zeros(std::size_t n_paths) {
        FlowAllocation a;
        a.f.assign(n_paths, 0.0);
        return a;
    }

    void check_conserved(double arrival_mass, double tol = 1e-9) const;
};

/// Realized cost state per stochastic path.
struct PathRealization {
    std::vector<bool> high;  // size N, true means c_high

    double cost(const NetworkConfig& cfg, std::size_t i) const {
        const auto& p = cfg.stoch(i);
        return high.at(i - 1) ? p.c_high : p.c_low;
    }
};

/// E[c_i(t) | x] = x*c_high + (1-x)*c_low for a stochastic path.
double expected_internal_cost(const PathModel& path, double x);

/// Immediate social cost f0(c0 + w0 f0) + sum_i f_i(E[c_i|x_i] + w_i f_i).
double immediate_social_cost(const NetworkConfig& cfg, const FlowAllocation& flows,
                             const std::vector<double>& x);

}  // namespace routing
