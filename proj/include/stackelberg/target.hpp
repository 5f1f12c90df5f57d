#pragma once

// Closed-loop equilibrium of the example: boundary PDEs, the leader's HJB on the
// reachable band in the reduced coordinate u = y - x, the choice of y0 and the
// feedback policy.

#include <iosfwd>
#include <string>

#include "stackelberg/closed_form.hpp"
#include "stackelberg/model.hpp"
#include "stackelberg/pde.hpp"

namespace stackelberg::target {

struct GridOptions {
    int n_steps = 2000;  // time intervals
    int n_nodes = 401;   // spatial nodes
    /// Half-width of the x-window for the boundary PDEs, in units of |sigma| sqrt(T).
    double window = 6.0;

    /// Throws std::invalid_argument on n_steps < 1, n_nodes < 3 or window <= 0.
    void check() const;
    /// "nu=<n_nodes>;nt=<n_steps>".
    std::string label() const;
};

struct NumericBoundaries {
    closed_form::BoundaryPair exact;
    pde::ValueSurface w_minus;
    pde::ValueSurface w_plus;
    double max_error = 0.0;
    Diagnostics diagnostics;
};

/// Solves both boundary HJB equations on an x-window around x0 and compares them with the
/// affine closed forms. Throws std::runtime_error("exactness check failed ...") if the
/// error exceeds 1e-4.
NumericBoundaries compute_boundaries_numeric(const GameParams& params, const GridOptions& grid);

struct LeaderOptions {
    /// Search box for z; defaults to pde::default_z_box when lo == hi.
    pde::ZBox z_box{};
    /// Saturated fraction of node updates above which "non_concave_region" is set.
    double saturation_limit = 0.01;
    /// Near T the band is resolved on dyadically finer copies of the u-grid: spacing h / 2^k
    /// while T - t < T / 4^k, so the spacing scales like h sqrt((T - t) / T). 0 disables it.
    int max_levels = 10;
};

struct LeaderSolution {
    GameParams params;
    GridOptions grid;
    /// psi(t, u) with v(t, x, y) = x + psi(t, y - x).
    pde::ValueSurface surface;
    closed_form::BoundaryPair boundaries;
    double x0 = 0.0;
    double y0_star = 0.0;
    double V_CL = 0.0;
    double V_F = 0.0;
    Diagnostics metadata;

    /// v(t, x, y); throws std::out_of_range off the band.
    double value(double t, double x, double y) const { return x + surface.value_at(t, y - x); }
};

/// Solves the reduced leader PDE and optimises y0 at params.x0.
LeaderSolution solve_leader(const GameParams& params, const GridOptions& grid, const LeaderOptions& options = {});

struct Y0Choice {
    double y0_star = 0.0;
    double V_CL = 0.0;
    double V_F = 0.0;
};

/// Node argmax of psi(0, .) (ties towards the smallest u), refined by a parabola through
/// the best node and its neighbours when that parabola is concave.
Y0Choice optimize_y0(const LeaderSolution& solution, double x0);

/// Stored argmaxes of the layer at or before t, at the node nearest to u's relative position
/// in the band. Within one local cell of a boundary the nearer boundary's control applies:
/// (-a_max, 1) below, (a_max, 1) above. After the last solved layer z = 1 and
/// a = u / (T - t) - 1 / (2 c_F), which steers u to 0 at T.
FeedbackPolicy extract_policy(const LeaderSolution& solution);

/// Closed-loop report at x0 (reuses the x-independent surface).
EquilibriumReport cl_report(const LeaderSolution& solution, double x0);

struct ReachabilityQuery {
    double t = 0.0;
    double x = 0.0;
    double y = 0.0;
};

/// w_minus(t, x) <= y <= w_plus(t, x) with the exact boundaries.
bool reachability_contains(const GameParams& params, const ReachabilityQuery& q);

/// "t,u,psi,a_star,z_star".
void write_surface_csv(const LeaderSolution& solution, std::ostream& out, int stride = 1);
/// Inverse of write_surface_csv: rebuilds the surface and re-optimises y0 at params.x0.
/// The cell width is taken from the t = 0 slice. Throws std::runtime_error on malformed input.
LeaderSolution read_surface_csv(const GameParams& params, std::istream& in, const GridOptions& grid);
/// "t,x,w_minus,w_plus" on the numeric boundary grid.
void write_boundaries_csv(const NumericBoundaries& boundaries, std::ostream& out, int stride = 1);
/// "kind,x0,leader_value,follower_value,y0_star,grid" and one CL row.
void write_summary_csv(const LeaderSolution& solution, std::ostream& out);

}  // namespace stackelberg::target
