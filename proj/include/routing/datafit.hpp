#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <vector>

#include "routing/core.hpp"

namespace routing {

/// Uniform 5-minute speed-band time series for one road.
struct SpeedSeries {
    std::string road_id;
    std::vector<std::int64_t> timestamps;  // strictly increasing, uniform spacing
    std::vector<double> speed_band;        // ordinal congestion score, higher = faster

    void validate() const;
};

/// 2x2 row-stochastic transition matrix, state 0 = low-cost (high speed),
/// state 1 = high-cost.
using TransitionMatrix = std::array<std::array<double, 2>, 2>;

struct FittedChain {
    double threshold = 0.0;
    TransitionMatrix matrix{};
    bool degenerate = false;  // only one state observed

    double q_lh() const { return matrix[0][1]; }
    double q_hh() const { return matrix[1][1]; }
};

/// state = high-cost (true) iff speed band < threshold.
std::vector<bool> discretize(const SpeedSeries& series, double threshold);

/// Maximum-likelihood transition counts per row, with add-1e-9 smoothing so
/// no probability is exactly zero. A single-state sequence is flagged
/// degenerate and pinned to its observed state.
FittedChain fit_transition_matrix(const std::vector<bool>& states);

/// CSV ingestion, columns: timestamp,road_id,speed_band (header optional).
/// Returns one series per road id, rows grouped by id and sorted by time.
std::vector<SpeedSeries> read_speed_csv(std::istream& is);

/// Published reference matrices for the four stochastic roads of the
/// two-origin road-network experiment (row 0 = low state).
struct RoadChainFixture {
    std::string name;
    TransitionMatrix matrix;
};

const std::vector<RoadChainFixture>& road_chain_fixtures();

/// Sample a binary state path of the given length from a transition matrix.
std::vector<bool> sample_chain(const TransitionMatrix& m, std::size_t length,
                               std::uint64_t seed, bool initial_high = false);

}  // namespace routing
