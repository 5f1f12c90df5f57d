#pragma once

// Backward-in-time explicit monotone solvers for HJB equations
//     -d_t w - H(t, x, d_x w, d_xx w) = 0,   w(T-, x) = g(x),
// on a uniform node set whose active part may shrink in time, plus a
// semi-Lagrangian solver for a two-dimensional masked domain.

#include <functional>
#include <iosfwd>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "stackelberg/model.hpp"

namespace stackelberg::pde {

class CflError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// NaN/Inf produced at a node; the message carries the coordinates.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class MaskCollapsed : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// ---------------------------------------------------------------------------
// Hamiltonian pieces of the example, in closed form
// ---------------------------------------------------------------------------

/// min(max(z, lo), hi); throws std::invalid_argument when lo > hi.
double project_interval(double z, double lo, double hi);

struct ActionSup {
    double value = 0.0;
    double a_star = 0.0;
};

/// sup over a in [-a_max, a_max] of a p - c_L a^2 / 2.
ActionSup sup_a(double p, const GameParams& params);

struct ZBox {
    double lo = 0.0;
    double hi = 0.0;
};

/// [-2 b_max c_F, 3 b_max c_F].
ZBox default_z_box(const GameParams& params);

struct SensitivitySup {
    double value = 0.0;
    double z_star = 0.0;
    /// Maximiser sits on an end of the search box.
    bool saturated = false;
};

/// sup over z in the box of
///   Pi(z) vx / c_F + Pi(z)^2 vy / (2 c_F) + sigma^2 z^2 vyy / 2 + sigma^2 z vxy,
/// with Pi the projection on [0, b_max c_F]. Exact: every quadratic piece is maximised
/// through its stationary point, the breakpoints and the box ends. Ties go to the smallest z.
SensitivitySup sup_z(double vx, double vy, double vyy, double vxy, const GameParams& params, ZBox box);

// ---------------------------------------------------------------------------
// Generic one-dimensional solver
// ---------------------------------------------------------------------------

/// Hamiltonian linearised at its optimiser: value = running + drift * p + diffusion * q.
struct HamiltonianEval {
    double value = 0.0;
    double running = 0.0;
    double drift = 0.0;
    double diffusion = 0.0;
    double a_star = 0.0;
    double z_star = 0.0;
    bool saturated = false;
};

enum class Sense { Maximize, Minimize };

struct HamiltonianSpec {
    std::function<HamiltonianEval(double t, double x, double p, double q)> evaluate;
    Sense sense = Sense::Maximize;
    /// Bounds over all controls; they set the CFL sub-step.
    double drift_bound = 0.0;
    double diffusion_bound = 0.0;
};

/// Uniform nodes on [x_min, x_max] and a uniform time partition of [0, T].
/// lower/upper, when set, give a time-dependent active interval inside [x_min, x_max].
struct Grid1D {
    double T = 1.0;
    int n_time = 2;
    int n_space = 3;
    double x_min = 0.0;
    double x_max = 1.0;
    std::function<double(double)> lower;
    std::function<double(double)> upper;

    double dt() const { return T / (n_time - 1); }
    double h() const { return (x_max - x_min) / (n_space - 1); }
    double t_node(int n) const { return n == n_time - 1 ? T : n * dt(); }
    double x_node(int j) const { return j == n_space - 1 ? x_max : x_min + j * h(); }
    double lower_at(double t) const { return lower ? lower(t) : x_min; }
    double upper_at(double t) const { return upper ? upper(t) : x_max; }
    bool moving() const { return static_cast<bool>(lower) || static_cast<bool>(upper); }

    /// Throws std::invalid_argument on n_time < 2, n_space < 3 or an inverted interval.
    void check() const;
};

/// Dirichlet data g(t, x) at the active-interval ends, or w'' = 0 at a fixed edge.
/// a_star/z_star are the argmax records reported for knots fixed by Dirichlet data.
struct BoundaryCondition {
    std::function<double(double t, double x)> value;
    double a_star = 0.0;
    double z_star = 0.0;

    static BoundaryCondition dirichlet(std::function<double(double, double)> fn, double a = 0.0, double z = 0.0) {
        return {std::move(fn), a, z};
    }
    static BoundaryCondition extrapolate_linear() { return {}; }
    bool is_dirichlet() const { return static_cast<bool>(value); }
};

struct SolveOptions {
    /// Time layer carrying the terminal data; -1 means the last layer (t = T).
    int start_layer = -1;
    /// Layer at which the backward sweep stops.
    int stop_layer = 0;
    bool auto_substep = true;
    /// Keep every time layer; otherwise only the start and stop layers are stored.
    bool keep_history = true;
};

/// Knots of one time slice: boundary points of the active interval plus the active nodes.
struct SurfaceLayer {
    double t = 0.0;
    std::vector<double> coord;
    std::vector<double> value;
    std::vector<double> a_star;
    std::vector<double> z_star;
};

/// Piecewise linear in space, piecewise constant in time (the latest layer not after t).
class ValueSurface {
public:
    ValueSurface() = default;
    explicit ValueSurface(std::vector<SurfaceLayer> layers, Diagnostics diagnostics = {});

    const std::vector<SurfaceLayer>& layers() const { return layers_; }
    const SurfaceLayer& layer_at(double t) const;
    /// Throws std::out_of_range if x is outside the layer's span.
    double value_at(double t, double x) const;
    const Diagnostics& diagnostics() const { return diagnostics_; }
    Diagnostics& diagnostics() { return diagnostics_; }

    /// Header "t,<coord>,<value>,a_star,z_star"; time-major, space ascending; every stride-th layer
    /// (the first and last layers are always written).
    void write_csv(std::ostream& out, std::string_view coord_name = "x",
                   std::string_view value_name = "value", int stride = 1) const;

private:
    std::vector<SurfaceLayer> layers_;
    Diagnostics diagnostics_;
};

/// Linear interpolation on sorted knots; throws std::out_of_range outside [front, back].
double interpolate(const std::vector<double>& knots, const std::vector<double>& values, double x);

/// Explicit monotone sweep: central drift with diffusion max(D, |mu| h / 2) on regular
/// stencils, upwind drift next to a moving end, sub-steps sized from the local coefficients.
/// On a moving interval the nodes closer than h to an end are set by linear interpolation
/// towards the Dirichlet value.
ValueSurface solve_hjb_1d(const Grid1D& grid, const HamiltonianSpec& ham,
                          const std::function<double(double t, double x)>& terminal,
                          const BoundaryCondition& left, const BoundaryCondition& right,
                          const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// Two-dimensional masked solver (cross-check only)
// ---------------------------------------------------------------------------

struct Derivatives2D {
    double vx = 0.0;
    double vy = 0.0;
    double vxx = 0.0;
    double vyy = 0.0;
    double vxy = 0.0;
};

/// One admissible control with rank-one noise (vol_x, vol_y) dW.
struct Control2D {
    double running = 0.0;
    double drift_x = 0.0;
    double drift_y = 0.0;
    double vol_x = 0.0;
    double vol_y = 0.0;
    double a_star = 0.0;
    double z_star = 0.0;
    bool saturated = false;
};

struct HamiltonianSpec2D {
    /// Candidate controls at a node; the solver keeps the best one after the transport step.
    std::function<std::vector<Control2D>(double t, double x, double y, const Derivatives2D&)> candidates;
};

struct Grid2D {
    double T = 1.0;
    int n_time = 2;
    int n_x = 3;
    int n_y = 3;
    double x_min = 0.0;
    double x_max = 1.0;
    double y_min = 0.0;
    double y_max = 1.0;
    /// Active set {lower(t, x) <= y <= upper(t, x)}.
    std::function<double(double t, double x)> lower;
    std::function<double(double t, double x)> upper;

    double dt() const { return T / (n_time - 1); }
    double hx() const { return (x_max - x_min) / (n_x - 1); }
    double hy() const { return (y_max - y_min) / (n_y - 1); }
    void check() const;
};

/// Per-column knots: lower boundary point, active y-nodes, upper boundary point.
struct MaskedLayer2D {
    double t = 0.0;
    std::vector<double> x;
    std::vector<std::vector<double>> y;
    std::vector<std::vector<double>> value;
    std::vector<std::vector<double>> a_star;
    std::vector<std::vector<double>> z_star;

    /// Linear in x between columns (x clamped to the window). Both neighbouring columns are
    /// read at the same relative position inside their masks, clamped to the mask edges.
    double value_at(double x, double y) const;
};

class MaskedSurface2D {
public:
    MaskedSurface2D() = default;
    MaskedSurface2D(std::vector<MaskedLayer2D> layers, Diagnostics diagnostics);

    const std::vector<MaskedLayer2D>& layers() const { return layers_; }
    const MaskedLayer2D& layer_at(double t) const;
    double value_at(double t, double x, double y) const;
    const Diagnostics& diagnostics() const { return diagnostics_; }

    /// Header "t,x,y,value,a_star,z_star".
    void write_csv(std::ostream& out, int stride = 1) const;

private:
    std::vector<MaskedLayer2D> layers_;
    Diagnostics diagnostics_;
};

/// Semi-Lagrangian two-point scheme
///   v(t, x) = max_c { running dt + (v(t+dt, x + mu dt + s sqrt(dt)) + v(t+dt, x + mu dt - s sqrt(dt))) / 2 }
/// on the masked domain, with Dirichlet data on the mask edges. Starts at options.start_layer.
MaskedSurface2D solve_hjb_2d_masked(const Grid2D& grid, const HamiltonianSpec2D& ham,
                                    const std::function<double(double t, double x, double y)>& terminal,
                                    const std::function<double(double t, double x)>& lower_value,
                                    const std::function<double(double t, double x)>& upper_value,
                                    const SolveOptions& options = {});

// ---------------------------------------------------------------------------
// Hamiltonians of the example
// ---------------------------------------------------------------------------

enum class BoundarySide { Lower, Upper };

/// H(p, q) = sigma^2 q / 2 - Pi(p)^2 / (2 c_F) + (a + Pi(p) / c_F) p with the
/// infimum (lower boundary) or supremum (upper boundary) over a in A.
HamiltonianSpec boundary_hamiltonian(const GameParams& params, BoundarySide side);

/// Leader's interior Hamiltonian in the coordinate u = y - x for v = x + psi(t, u):
///   sup_a {a (1 - p) - c_L a^2 / 2}
/// + sup_z {Pi(z) (1 - p) / c_F + Pi(z)^2 p / (2 c_F) + sigma^2 (z - 1)^2 q / 2}.
HamiltonianSpec reduced_leader_hamiltonian(const GameParams& params, ZBox box);

/// Leader's interior Hamiltonian in (x, y): closed-form maximiser, the boundary-type
/// controls (a, 1) and a z-grid on [-z_hi / 4, 5 z_hi / 4] as candidates.
HamiltonianSpec2D leader_hamiltonian_2d(const GameParams& params, ZBox box);

}  // namespace stackelberg::pde
