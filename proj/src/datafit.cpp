#include "routing/datafit.hpp"

#include <algorithm>
#include <istream>
#include <map>
#include <sstream>

#include "routing/simulate.hpp"

namespace routing {

void SpeedSeries::validate() const {
    require(!speed_band.empty(), "SpeedSeries: empty series");
    require(timestamps.size() == speed_band.size(), "SpeedSeries: column length mismatch");
    if (timestamps.size() < 2) return;
    const std::int64_t dt = timestamps[1] - timestamps[0];
    require(dt > 0, "SpeedSeries: timestamps must be strictly increasing");
    for (std::size_t i = 1; i < timestamps.size(); ++i)
        require(timestamps[i] - timestamps[i - 1] == dt, "SpeedSeries: non-uniform spacing");
}

std::vector<bool> discretize(const SpeedSeries& series, double threshold) {
    series.validate();
    const auto [lo, hi] = std::minmax_element(series.speed_band.begin(), series.speed_band.end());
    require(threshold > *lo && threshold <= *hi + 1.0,
            "discretize: threshold outside observed range");
    std::vector<bool> states(series.speed_band.size());
    for (std::size_t i = 0; i < states.size(); ++i) states[i] = series.speed_band[i] < threshold;
    return states;
}

FittedChain fit_transition_matrix(const std::vector<bool>& states) {
    require(states.size() >= 2, "fit_transition_matrix: need at least 2 observations");
    double n[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
    for (std::size_t i = 1; i < states.size(); ++i)
        n[states[i - 1] ? 1 : 0][states[i] ? 1 : 0] += 1.0;

    FittedChain fit;
    const bool saw_low = n[0][0] + n[0][1] > 0.0 || !states.front();
    const bool saw_high = n[1][0] + n[1][1] > 0.0 || states.front();
    fit.degenerate = !(saw_low && saw_high);
    if (fit.degenerate) {
        // Pin the chain to the single observed state.
        const int s = states.front() ? 1 : 0;
        fit.matrix[s][s] = 1.0;
        fit.matrix[1 - s][1 - s] = 1.0;
        return fit;
    }
    const double smooth = 1e-9;
    for (int r = 0; r < 2; ++r) {
        const double row = n[r][0] + n[r][1] + 2.0 * smooth;
        fit.matrix[r][0] = (n[r][0] + smooth) / row;
        fit.matrix[r][1] = (n[r][1] + smooth) / row;
    }
    return fit;
}

std::vector<SpeedSeries> read_speed_csv(std::istream& is) {
    std::map<std::string, std::vector<std::pair<std::int64_t, double>>> rows;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        std::istringstream ss(line);
        std::string ts, id, band;
        if (!std::getline(ss, ts, ',') || !std::getline(ss, id, ',') || !std::getline(ss, band))
            throw ContractViolation("read_speed_csv: malformed row at line " +
                                    std::to_string(lineno));
        if (lineno == 1 && ts == "timestamp") continue;  // optional header
        try {
            rows[id].emplace_back(std::stoll(ts), std::stod(band));
        } catch (const std::exception&) {
            throw ContractViolation("read_speed_csv: non-numeric field at line " +
                                    std::to_string(lineno));
        }
    }
    require(!rows.empty(), "read_speed_csv: no data rows");
    std::vector<SpeedSeries> out;
    for (auto& [id, data] : rows) {
        std::sort(data.begin(), data.end());
        SpeedSeries s;
        s.road_id = id;
        for (const auto& [t, v] : data) {
            s.timestamps.push_back(t);
            s.speed_band.push_back(v);
        }
        s.validate();
        out.push_back(std::move(s));
    }
    return out;
}

const std::vector<RoadChainFixture>& road_chain_fixtures() {
    static const std::vector<RoadChainFixture> fixtures = {
        {"N_CD", {{{0.6239, 0.3761}, {0.3525, 0.6475}}}},
        {"YA_E", {{{0.7873, 0.2127}, {0.3039, 0.6961}}}},
        {"E_YA", {{{0.8443, 0.1557}, {0.1326, 0.8674}}}},
        {"NS_E", {{{0.8730, 0.1280}, {0.0898, 0.9002}}}},
    };
    return fixtures;
}

std::vector<bool> sample_chain(const TransitionMatrix& m, std::size_t length, std::uint64_t seed,
                               bool initial_high) {
    require(length >= 1, "sample_chain: empty sample");
    const CounterRng rng{seed, 0};
    std::vector<bool> states(length);
    bool high = initial_high;
    for (std::size_t t = 0; t < length; ++t) {
        states[t] = high;
        const double p_high = high ? m[1][1] : m[0][1];
        high = rng.uniform(t, kStreamChain) < p_high;
    }
    return states;
}

}  // namespace routing
