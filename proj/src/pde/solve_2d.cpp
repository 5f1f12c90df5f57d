#include <algorithm>
#include <cmath>
#include <string>

#include "stackelberg/pde.hpp"

namespace stackelberg::pde {

void Grid2D::check() const {
    if (!(T > 0.0)) throw std::invalid_argument("Grid2D: T must be positive");
    if (n_time < 2 || n_x < 3 || n_y < 3) throw std::invalid_argument("Grid2D: too few nodes");
    if (!(x_max > x_min) || !(y_max > y_min)) throw std::invalid_argument("Grid2D: empty window");
    if (!lower || !upper) throw std::invalid_argument("Grid2D: mask bounds missing");
    const double tol = 1e-9 * (1.0 + std::abs(y_min) + std::abs(y_max));
    for (const double t : {0.0, T}) {
        for (int i = 0; i < n_x; ++i) {
            const double x = x_min + i * hx();
            const double lo = lower(t, x), hi = upper(t, x);
            if (lo > hi) throw std::invalid_argument("Grid2D: inverted mask at x=" + format_number(x));
            if (lo < y_min - tol || hi > y_max + tol)
                throw std::invalid_argument("Grid2D: mask leaves the y-window at x=" + format_number(x));
        }
    }
}

namespace {

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

struct Column {
    double lo, hi;
    int jlo, jhi;
};

}  // namespace

MaskedSurface2D solve_hjb_2d_masked(const Grid2D& grid, const HamiltonianSpec2D& ham,
                                    const std::function<double(double t, double x, double y)>& terminal,
                                    const std::function<double(double t, double x)>& lower_value,
                                    const std::function<double(double t, double x)>& upper_value,
                                    const SolveOptions& options) {
    grid.check();
    if (!ham.candidates) throw std::invalid_argument("solve_hjb_2d_masked: Hamiltonian has no candidates()");
    const int s = options.start_layer < 0 ? grid.n_time - 1 : options.start_layer;
    if (s < 1 || s > grid.n_time - 1)
        throw std::invalid_argument("solve_hjb_2d_masked: start_layer outside [1, n_time - 1]");

    const double hx = grid.hx(), hy = grid.hy(), dt = grid.dt();
    const double sqdt = std::sqrt(dt);
    const auto t_node = [&](int n) { return n == grid.n_time - 1 ? grid.T : n * dt; };
    const auto y_node = [&](int j) { return grid.y_min + j * hy; };

    std::vector<double> xs(grid.n_x);
    for (int i = 0; i < grid.n_x; ++i) xs[i] = i == grid.n_x - 1 ? grid.x_max : grid.x_min + i * hx;

    const auto column = [&](double t, double x) {
        Column c{grid.lower(t, x), grid.upper(t, x), 0, 0};
        c.jlo = std::clamp(static_cast<int>(std::ceil((c.lo - grid.y_min) / hy - 1e-9)), 0, grid.n_y - 1);
        c.jhi = std::clamp(static_cast<int>(std::floor((c.hi - grid.y_min) / hy + 1e-9)), 0, grid.n_y - 1);
        return c;
    };

    // Builds a layer whose interior values come from fill(i, y) -> (value, a, z, saturated).
    long updates = 0, saturated = 0;
    const auto build = [&](double t, auto&& fill) {
        MaskedLayer2D l;
        l.t = t;
        l.x = xs;
        const std::size_t nx = xs.size();
        l.y.resize(nx);
        l.value.resize(nx);
        l.a_star.resize(nx);
        l.z_star.resize(nx);
        for (std::size_t i = 0; i < nx; ++i) {
            const double x = xs[i];
            const Column c = column(t, x);
            auto& ys = l.y[i];
            auto& vs = l.value[i];
            const auto push = [&](double y, double v, double a, double z) {
                if (!std::isfinite(v)) {
                    throw NumericalError("solve_hjb_2d_masked: non-finite value at t=" + format_number(t) +
                                         ", x=" + format_number(x) + ", y=" + format_number(y));
                }
                ys.push_back(y);
                vs.push_back(v);
                l.a_star[i].push_back(a);
                l.z_star[i].push_back(z);
            };
            push(c.lo, lower_value(t, x), 0.0, 1.0);
            for (int j = c.jlo; j <= c.jhi; ++j) {
                const double y = y_node(j);
                if (y <= c.lo || near(y, c.lo) || y >= c.hi || near(y, c.hi)) continue;
                const auto r = fill(i, y);
                push(y, r.value, r.a, r.z);
            }
            if (!near(c.hi, c.lo)) push(c.hi, upper_value(t, x), 0.0, 1.0);
        }
        return l;
    };

    struct NodeResult {
        double value, a, z;
    };

    const double t_start = t_node(s);
    for (const double x : xs) {
        const Column c = column(t_start, x);
        if (c.jhi - c.jlo + 1 < 3) {
            throw MaskCollapsed("solve_hjb_2d_masked: mask collapsed (fewer than 3 active y-nodes at t=" +
                                format_number(t_start) + ", x=" + format_number(x) + ")");
        }
    }

    std::vector<MaskedLayer2D> layers;
    layers.push_back(build(t_start, [&](std::size_t i, double y) {
        return NodeResult{terminal(t_start, xs[i], y), 0.0, 0.0};
    }));

    for (int n = s - 1; n >= 0; --n) {
        const MaskedLayer2D& old = layers.back();
        const double t = t_node(n);
        const auto V = [&old](double x, double y) { return old.value_at(x, y); };
        MaskedLayer2D next = build(t, [&](std::size_t i, double y) {
            const double x = xs[i];
            Derivatives2D d;
            const double v0 = V(x, y);
            const double vxp = V(x + hx, y), vxm = V(x - hx, y);
            const double vyp = V(x, y + hy), vym = V(x, y - hy);
            d.vx = (vxp - vxm) / (2.0 * hx);
            d.vy = (vyp - vym) / (2.0 * hy);
            d.vxx = (vxp - 2.0 * v0 + vxm) / (hx * hx);
            d.vyy = (vyp - 2.0 * v0 + vym) / (hy * hy);
            d.vxy = (V(x + hx, y + hy) - V(x + hx, y - hy) - V(x - hx, y + hy) + V(x - hx, y - hy)) /
                    (4.0 * hx * hy);
            const auto cands = ham.candidates(t, x, y, d);
            if (cands.empty()) throw std::logic_error("solve_hjb_2d_masked: no candidate controls");
            NodeResult best{0.0, 0.0, 0.0};
            bool best_sat = false;
            bool first = true;
            for (const auto& c : cands) {
                const double mx = x + c.drift_x * dt, my = y + c.drift_y * dt;
                const double sx = c.vol_x * sqdt, sy = c.vol_y * sqdt;
                const double val = c.running * dt + 0.5 * (V(mx + sx, my + sy) + V(mx - sx, my - sy));
                if (first || val > best.value) {
                    best = {val, c.a_star, c.z_star};
                    best_sat = c.saturated;
                    first = false;
                }
            }
            ++updates;
            if (best_sat) ++saturated;
            return best;
        });
        if (options.keep_history || n == 0 || layers.size() == 1) {
            layers.push_back(std::move(next));
        } else {
            layers.back() = std::move(next);
        }
    }
    if (!options.keep_history && layers.size() > 2) layers.erase(layers.begin() + 1, layers.end() - 1);

    Diagnostics diag;
    diag["node_updates"] = static_cast<double>(updates);
    diag["saturated_fraction"] = updates > 0 ? static_cast<double>(saturated) / updates : 0.0;
    diag["hx"] = hx;
    diag["hy"] = hy;
    diag["dt"] = dt;
    diag["start_time"] = t_start;
    return MaskedSurface2D(std::move(layers), std::move(diag));
}

}  // namespace stackelberg::pde
