#include "stackelberg/target.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace stackelberg::target {

void GridOptions::check() const {
    if (n_steps < 1) throw std::invalid_argument("grid: n_steps < 1");
    if (n_nodes < 3) throw std::invalid_argument("grid: n_nodes < 3");
    if (!(window > 0.0)) throw std::invalid_argument("grid: window <= 0");
}

std::string GridOptions::label() const {
    return "nu=" + std::to_string(n_nodes) + ";nt=" + std::to_string(n_steps);
}

NumericBoundaries compute_boundaries_numeric(const GameParams& params, const GridOptions& grid) {
    const auto p = validate(params);
    grid.check();
    NumericBoundaries out;
    out.exact = closed_form::boundaries_exact(p);

    pde::Grid1D g;
    g.T = p.T;
    g.n_time = grid.n_steps + 1;
    g.n_space = grid.n_nodes;
    const double half = grid.window * std::abs(p.sigma) * std::sqrt(p.T);
    g.x_min = p.x0 - half;
    g.x_max = p.x0 + half;

    const auto terminal = [](double, double x) { return x; };
    const auto edge = pde::BoundaryCondition::extrapolate_linear();
    out.w_minus = pde::solve_hjb_1d(g, pde::boundary_hamiltonian(p, pde::BoundarySide::Lower), terminal, edge, edge);
    out.w_plus = pde::solve_hjb_1d(g, pde::boundary_hamiltonian(p, pde::BoundarySide::Upper), terminal, edge, edge);

    double err = 0.0;
    for (const auto& l : out.w_minus.layers())
        for (std::size_t j = 0; j < l.coord.size(); ++j)
            err = std::max(err, std::abs(l.value[j] - out.exact.w_minus(l.t, l.coord[j])));
    for (const auto& l : out.w_plus.layers())
        for (std::size_t j = 0; j < l.coord.size(); ++j)
            err = std::max(err, std::abs(l.value[j] - out.exact.w_plus(l.t, l.coord[j])));
    out.max_error = err;
    out.diagnostics["max_error"] = err;
    out.diagnostics["h"] = g.h();
    out.diagnostics["dt"] = g.dt();
    if (!(err <= 1e-4))
        throw std::runtime_error("exactness check failed: boundary error " + format_number(err) + " > 1e-4");
    return out;
}

LeaderSolution solve_leader(const GameParams& params, const GridOptions& grid, const LeaderOptions& options) {
    const auto p = validate(params);
    grid.check();
    if (grid.n_steps < 3) throw std::invalid_argument("solve_leader: need at least 3 time steps");

    LeaderSolution sol;
    sol.params = p;
    sol.grid = grid;
    sol.boundaries = closed_form::boundaries_exact(p);
    const auto bnd = sol.boundaries;
    const auto phi = closed_form::boundary_leader_values(p);
    const pde::ZBox box = options.z_box.lo < options.z_box.hi ? options.z_box : pde::default_z_box(p);

    if (options.max_levels < 0) throw std::invalid_argument("solve_leader: max_levels < 0");
    const auto ham = pde::reduced_leader_hamiltonian(p, box);

    // psi on the boundaries is phi(t, x) - x.
    const auto left = pde::BoundaryCondition::dirichlet(
        [phi](double t, double) { return phi.slope_minus * (phi.T - t); }, -p.a_max, 1.0);
    const auto right = pde::BoundaryCondition::dirichlet(
        [phi](double t, double) { return phi.slope_plus * (phi.T - t); }, p.a_max, 1.0);

    pde::Grid1D g;
    g.T = p.T;
    g.n_time = grid.n_steps + 1;
    g.x_min = bnd.c_minus * p.T;
    g.x_max = bnd.c_plus * p.T;
    g.lower = [bnd](double t) { return bnd.c_minus * (bnd.T - t); };
    g.upper = [bnd](double t) { return bnd.c_plus * (bnd.T - t); };

    const int start = g.n_time - 3;
    const double ts = g.t_node(start);
    const auto horizon = [&](int k) { return p.T * std::ldexp(1.0, -2 * k); };
    int level = 0;
    while (level < options.max_levels && p.T - ts < horizon(level + 1)) ++level;

    const std::vector<double> knots{g.lower(ts), 0.0, g.upper(ts)};
    const std::vector<double> init{phi.slope_minus * (p.T - ts), 0.0, phi.slope_plus * (p.T - ts)};
    std::function<double(double, double)> terminal = [knots, init](double, double u) {
        return pde::interpolate(knots, init, u);
    };

    std::vector<pde::SurfaceLayer> layers;
    Diagnostics sum;
    double saturated = 0.0;
    pde::ValueSurface previous;
    int layer_from = start;
    for (int k = level; k >= 0; --k) {
        int stop = 0;
        if (k > 0) {
            stop = layer_from - 1;
            while (stop > 0 && p.T - g.t_node(stop) < horizon(k)) --stop;
        }
        pde::SolveOptions opt;
        opt.start_layer = layer_from;
        opt.stop_layer = stop;
        g.n_space = (grid.n_nodes - 1) * (1 << k) + 1;
        auto part = pde::solve_hjb_1d(g, ham, terminal, left, right, opt);

        const auto& d = part.diagnostics();
        sum["substeps_total"] += d.at("substeps_total");
        sum["node_updates"] += d.at("node_updates");
        saturated += d.at("saturated_fraction") * d.at("node_updates");
        if (k == level) sum["start_time"] = d.at("start_time");
        if (k == 0) {
            sum["h"] = d.at("h");
            sum["dt"] = d.at("dt");
        }
        sum["levels"] += 1.0;

        const auto& pl = part.layers();
        // The first layer of a coarser level repeats the last one of the finer level.
        layers.insert(layers.begin(), pl.begin(), layers.empty() ? pl.end() : pl.end() - 1);
        previous = std::move(part);
        terminal = [&previous](double t, double u) {
            const auto& l = previous.layer_at(t);
            return pde::interpolate(l.coord, l.value, std::clamp(u, l.coord.front(), l.coord.back()));
        };
        layer_from = stop;
        if (stop == 0) break;
    }
    sum["saturated_fraction"] = sum["node_updates"] > 0 ? saturated / sum["node_updates"] : 0.0;
    sol.surface = pde::ValueSurface(std::move(layers), sum);

    auto& meta = sol.metadata;
    meta = sol.surface.diagnostics();
    meta["n_nodes"] = grid.n_nodes;
    meta["n_steps"] = grid.n_steps;
    meta["z_box_lo"] = box.lo;
    meta["z_box_hi"] = box.hi;
    meta["non_concave_region"] = meta["saturated_fraction"] > options.saturation_limit ? 1.0 : 0.0;

    const auto choice = optimize_y0(sol, p.x0);
    sol.x0 = p.x0;
    sol.y0_star = choice.y0_star;
    sol.V_CL = choice.V_CL;
    sol.V_F = choice.V_F;
    return sol;
}

Y0Choice optimize_y0(const LeaderSolution& solution, double x0) {
    if (solution.surface.layers().empty()) throw std::logic_error("optimize_y0: empty surface");
    const auto& l = solution.surface.layers().front();
    if (l.t != 0.0 || l.coord.empty()) throw std::logic_error("optimize_y0: empty t=0 slice");
    const auto& u = l.coord;
    const auto& v = l.value;
    std::size_t k = 0;
    for (std::size_t j = 1; j < v.size(); ++j)
        if (v[j] > v[k]) k = j;

    double u_star = u[k], psi_star = v[k];
    if (k > 0 && k + 1 < v.size()) {
        // Parabola through (u[k-1], v[k-1]), (u[k], v[k]), (u[k+1], v[k+1]) in Newton form.
        const double u0 = u[k - 1], u1 = u[k], u2 = u[k + 1];
        const double d01 = (v[k] - v[k - 1]) / (u1 - u0);
        const double d12 = (v[k + 1] - v[k]) / (u2 - u1);
        const double c2 = (d12 - d01) / (u2 - u0);
        if (c2 < 0.0) {
            const double c1 = d01 - c2 * (u0 + u1);
            const double um = std::clamp(-c1 / (2.0 * c2), u0, u2);
            const double pm = v[k - 1] + d01 * (um - u0) + c2 * (um - u0) * (um - u1);
            if (pm > psi_star) {
                u_star = um;
                psi_star = pm;
            }
        }
    }
    Y0Choice c;
    c.y0_star = x0 + u_star;
    c.V_CL = x0 + psi_star;
    c.V_F = c.y0_star;
    return c;
}

FeedbackPolicy extract_policy(const LeaderSolution& solution) {
    const auto bnd = solution.boundaries;
    const double a_max = solution.params.a_max;
    const double h = solution.surface.diagnostics().at("h");
    const auto* surface = &solution.surface;
    auto lower = [bnd](double t, double x) { return bnd.w_minus(t, x); };
    auto upper = [bnd](double t, double x) { return bnd.w_plus(t, x); };
    const double c_F = solution.params.c_F;
    auto control = [bnd, a_max, c_F, surface](double t, double x, double y) {
        const double u = y - x, left = bnd.T - t;
        const double lo = bnd.c_minus * left, hi = bnd.c_plus * left;
        const auto& l = surface->layer_at(t);
        // Past the last solved layer: z = 1 and the drift that brings u to 0 exactly at T.
        if (t >= surface->layers().back().t) {
            const double a = left > 0.0 ? u / left - 0.5 / c_F : 0.0;
            return PolicyControl{std::clamp(a, -a_max, a_max), 1.0, false};
        }
        const std::size_t m = l.coord.size() / 2;
        const double cell = l.coord.size() >= 3 ? l.coord[m + 1] - l.coord[m] : hi - lo;
        const double dl = u - lo, dr = hi - u;
        if (std::min(dl, dr) <= cell) return dl <= dr ? PolicyControl{-a_max, 1.0, true} : PolicyControl{a_max, 1.0, true};
        // Same relative position in the stored layer's band.
        const double s = l.coord.front() + (u - lo) / (hi - lo) * (l.coord.back() - l.coord.front());
        const auto it = std::lower_bound(l.coord.begin(), l.coord.end(), s);
        std::size_t j = static_cast<std::size_t>(it - l.coord.begin());
        if (j == l.coord.size() || (j > 0 && s - l.coord[j - 1] <= l.coord[j] - s)) --j;
        return PolicyControl{l.a_star[j], l.z_star[j], false};
    };
    return FeedbackPolicy(control, lower, upper, h);
}

EquilibriumReport cl_report(const LeaderSolution& solution, double x0) {
    const auto c = optimize_y0(solution, x0);
    EquilibriumReport r;
    r.kind = EquilibriumKind::CL;
    r.x0 = x0;
    r.leader_value = c.V_CL;
    r.follower_value = c.V_F;
    const auto& p = solution.params;
    r.strategy = {FeedbackTableAction{solution.grid.label()}, SensitivityResponse{p.z_sat_hi(), p.c_F}};
    r.diagnostics = solution.metadata;
    r.diagnostics["y0_star"] = c.y0_star;
    return r;
}

bool reachability_contains(const GameParams& params, const ReachabilityQuery& q) {
    const auto p = validate(params);
    if (q.t < 0.0 || q.t > p.T) throw std::invalid_argument("reachability query: t outside [0, T]");
    const auto b = closed_form::boundaries_exact(p);
    return b.w_minus(q.t, q.x) <= q.y && q.y <= b.w_plus(q.t, q.x);
}

void write_surface_csv(const LeaderSolution& solution, std::ostream& out, int stride) {
    solution.surface.write_csv(out, "u", "psi", stride);
}

LeaderSolution read_surface_csv(const GameParams& params, std::istream& in, const GridOptions& grid) {
    const auto p = validate(params);
    std::string line;
    if (!std::getline(in, line) || line != "# schema=1") throw std::runtime_error("surface.csv: missing schema line");
    if (!std::getline(in, line) || line != "t,u,psi,a_star,z_star")
        throw std::runtime_error("surface.csv: unexpected header");

    std::vector<pde::SurfaceLayer> layers;
    long row = 2;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        std::istringstream fields(line);
        double v[5];
        char comma;
        fields >> v[0];
        for (int i = 1; i < 5; ++i) fields >> comma >> v[i];
        if (!fields || !(fields >> std::ws).eof())
            throw std::runtime_error("surface.csv: malformed row " + std::to_string(row));
        if (layers.empty() || layers.back().t != v[0]) {
            layers.emplace_back();
            layers.back().t = v[0];
        }
        auto& l = layers.back();
        l.coord.push_back(v[1]);
        l.value.push_back(v[2]);
        l.a_star.push_back(v[3]);
        l.z_star.push_back(v[4]);
    }
    if (layers.empty() || layers.front().t != 0.0) throw std::runtime_error("surface.csv: no t = 0 slice");

    const auto& first = layers.front().coord;
    Diagnostics d;
    d["h"] = first.size() >= 3 ? first[first.size() / 2 + 1] - first[first.size() / 2] : first.back() - first.front();

    LeaderSolution sol;
    sol.params = p;
    sol.grid = grid;
    sol.boundaries = closed_form::boundaries_exact(p);
    sol.surface = pde::ValueSurface(std::move(layers), d);
    sol.metadata = d;
    const auto c = optimize_y0(sol, p.x0);
    sol.x0 = p.x0;
    sol.y0_star = c.y0_star;
    sol.V_CL = c.V_CL;
    sol.V_F = c.V_F;
    return sol;
}

void write_boundaries_csv(const NumericBoundaries& b, std::ostream& out, int stride) {
    out << "# schema=1\nt,x,w_minus,w_plus\n";
    stride = std::max(stride, 1);
    const auto& lo = b.w_minus.layers();
    const auto& hi = b.w_plus.layers();
    for (std::size_t n = 0; n < lo.size(); ++n) {
        if (n % static_cast<std::size_t>(stride) != 0 && n + 1 != lo.size()) continue;
        for (std::size_t j = 0; j < lo[n].coord.size(); ++j) {
            out << format_number(lo[n].t) << ',' << format_number(lo[n].coord[j]) << ','
                << format_number(lo[n].value[j]) << ',' << format_number(hi[n].value[j]) << '\n';
        }
    }
}

void write_summary_csv(const LeaderSolution& solution, std::ostream& out) {
    out << "# schema=1\nkind,x0,leader_value,follower_value,y0_star,grid\n";
    out << "CL," << format_number(solution.x0) << ',' << format_number(solution.V_CL) << ','
        << format_number(solution.V_F) << ',' << format_number(solution.y0_star) << ',' << solution.grid.label()
        << '\n';
}

}  // namespace stackelberg::target
