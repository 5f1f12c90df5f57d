#pragma once

// Euler-Maruyama Monte Carlo for the controlled state (and, for closed-loop policies,
// the follower's continuation value Y) with counter-based Gaussian streams.

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "stackelberg/model.hpp"
#include "stackelberg/target.hpp"

namespace stackelberg::simulate {

struct SimConfig {
    long n_paths = 100000;
    int n_steps = 500;
    std::uint64_t seed = 42;
    /// Paths (2i, 2i+1) share their increments up to sign; n_paths must then be even.
    bool antithetic = true;

    void check() const;
};

/// Standard normal for (seed, stream, step); identical on every platform.
double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t step);

struct GapStats {
    double mean = 0.0;
    double p95 = 0.0;
    double max = 0.0;
    /// Paths that entered the boundary override band at least once.
    double band_hit_fraction = 0.0;
};

struct SimResult {
    EquilibriumKind kind = EquilibriumKind::FirstBest;
    long n_paths = 0;
    int n_steps = 0;
    std::uint64_t seed = 0;
    double JL_mean = 0.0;
    double JL_se = 0.0;
    double JF_mean = 0.0;
    double JF_se = 0.0;
    /// Closed-loop runs only.
    std::optional<GapStats> gap;
    /// Paths whose Y was clamped back onto the band at least once.
    double clamp_fraction = 0.0;
    /// Paths that left the band by more than the two-cell buffer.
    long exits = 0;
};

/// Open-loop, memoryless and punishment strategies; throws std::invalid_argument for
/// descriptors that need a feedback table.
SimResult simulate(const GameParams& params, const StrategyDescriptor& strategy, const SimConfig& cfg,
                   EquilibriumKind kind);

class DomainExitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Closed-loop policy started from (x0, y0). Y follows dY = Pi(Z)^2 / (2 c_F) dt + Z sigma dW.
/// Throws DomainExitError when more than 1% of the paths leave the band beyond the buffer.
SimResult simulate(const GameParams& params, const FeedbackPolicy& policy, double y0, const SimConfig& cfg);

GapStats check_target_constraint(const GameParams& params, const FeedbackPolicy& policy, double y0,
                                 const SimConfig& cfg);

struct ComparisonRow {
    EquilibriumReport report;
    bool certified = true;
    std::optional<SimResult> mc;
};

/// One row per kind: closed form (or PDE for CL) beside the Monte Carlo estimate.
/// Rows whose closed form is not certified carry certified = false and no estimate.
std::vector<ComparisonRow> compare_all(const GameParams& params, const SimConfig& cfg,
                                       const target::GridOptions& grid,
                                       const target::LeaderOptions& leader = {});

/// "kind,n_paths,n_steps,seed,JL_mean,JL_se,JF_mean,JF_se,target_gap_mean,clamp_fraction".
void write_sim_csv(std::ostream& out, const std::vector<SimResult>& results);

}  // namespace stackelberg::simulate
