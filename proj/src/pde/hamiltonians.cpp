#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include "stackelberg/pde.hpp"

namespace stackelberg::pde {

double project_interval(double z, double lo, double hi) {
    if (lo > hi) throw std::invalid_argument("project_interval: lo > hi");
    return std::min(std::max(z, lo), hi);
}

ActionSup sup_a(double p, const GameParams& params) {
    const double a = std::clamp(p / params.c_L, -params.a_max, params.a_max);
    return {a * p - 0.5 * params.c_L * a * a, a};
}

ZBox default_z_box(const GameParams& params) {
    const double zh = params.z_sat_hi();
    return {-2.0 * zh, 3.0 * zh};
}

SensitivitySup sup_z(double vx, double vy, double vyy, double vxy, const GameParams& params, ZBox box) {
    if (box.lo > box.hi) throw std::invalid_argument("sup_z: empty z box");
    const double c = params.c_F;
    const double zh = params.z_sat_hi();
    const double s2 = params.sigma * params.sigma;

    const auto objective = [&](double z) {
        const double pz = std::clamp(z, 0.0, zh);
        return pz * vx / c + pz * pz * vy / (2.0 * c) + 0.5 * s2 * z * z * vyy + s2 * z * vxy;
    };

    std::array<double, 7> cand{};
    std::size_t n = 0;
    const auto push = [&](double z) {
        if (std::isfinite(z) && z >= box.lo && z <= box.hi) cand[n++] = z;
    };
    push(box.lo);
    push(box.hi);
    push(0.0);
    push(zh);
    // Outer pieces share the curvature sigma^2 vyy and slope sigma^2 vxy.
    if (vyy != 0.0) {
        const double z_out = -vxy / vyy;
        if (z_out < 0.0) push(z_out);
        if (z_out > zh) push(z_out);
    }
    const double curv = vy / (2.0 * c) + 0.5 * s2 * vyy;
    if (curv != 0.0) {
        const double z_mid = -(vx / c + s2 * vxy) / (2.0 * curv);
        if (z_mid > 0.0 && z_mid < zh) push(z_mid);
    }

    double best_z = cand[0];
    double best = objective(best_z);
    for (std::size_t i = 1; i < n; ++i) {
        const double g = objective(cand[i]);
        if (g > best || (g == best && cand[i] < best_z)) {
            best = g;
            best_z = cand[i];
        }
    }
    return {best, best_z, best_z == box.lo || best_z == box.hi};
}

HamiltonianSpec boundary_hamiltonian(const GameParams& params, BoundarySide side) {
    const auto p = validate(params);
    HamiltonianSpec spec;
    spec.sense = side == BoundarySide::Lower ? Sense::Minimize : Sense::Maximize;
    spec.drift_bound = p.a_max + p.b_max;
    spec.diffusion_bound = 0.5 * p.sigma * p.sigma;
    spec.evaluate = [p, side](double, double, double grad, double q) {
        // sigma != 0 pins the sensitivity to the gradient.
        const double z = grad;
        const double pz = std::clamp(z, 0.0, p.z_sat_hi());
        // Extremal action of a * grad; ties at grad = 0 go to the smallest a.
        double a = -p.a_max;
        if (side == BoundarySide::Lower && grad < 0.0) a = p.a_max;
        if (side == BoundarySide::Upper && grad > 0.0) a = p.a_max;
        HamiltonianEval e;
        e.running = -pz * pz / (2.0 * p.c_F);
        e.drift = a + pz / p.c_F;
        e.diffusion = 0.5 * p.sigma * p.sigma;
        e.value = e.running + e.drift * grad + e.diffusion * q;
        e.a_star = a;
        e.z_star = z;
        return e;
    };
    return spec;
}

HamiltonianSpec reduced_leader_hamiltonian(const GameParams& params, ZBox box) {
    const auto p = validate(params);
    const double zh = p.z_sat_hi();
    HamiltonianSpec spec;
    spec.sense = Sense::Maximize;
    spec.drift_bound = p.a_max + std::max(1.0 / (2.0 * p.c_F), 0.5 * p.c_F * p.b_max * p.b_max - p.b_max);
    const double z_far = std::max(std::abs(box.lo - 1.0), std::abs(box.hi - 1.0));
    spec.diffusion_bound = 0.5 * p.sigma * p.sigma * z_far * z_far;
    spec.evaluate = [p, box, zh](double, double, double grad, double q) {
        // v = x + psi(u): v_x = 1 - psi_u, v_y = psi_u, v_yy = psi_uu, v_xy = -psi_uu.
        const auto act = sup_a(1.0 - grad, p);
        const auto sens = sup_z(1.0 - grad, grad, q, -q, p, box);
        const double pz = std::clamp(sens.z_star, 0.0, zh);
        const double zm1 = sens.z_star - 1.0;
        HamiltonianEval e;
        e.running = act.a_star - 0.5 * p.c_L * act.a_star * act.a_star + pz / p.c_F;
        e.drift = pz * pz / (2.0 * p.c_F) - act.a_star - pz / p.c_F;
        e.diffusion = 0.5 * p.sigma * p.sigma * zm1 * zm1;
        e.value = e.running + e.drift * grad + e.diffusion * q;
        e.a_star = act.a_star;
        e.z_star = sens.z_star;
        e.saturated = sens.saturated;
        return e;
    };
    return spec;
}

HamiltonianSpec2D leader_hamiltonian_2d(const GameParams& params, ZBox box) {
    const auto p = validate(params);
    HamiltonianSpec2D spec;
    spec.candidates = [p, box](double, double, double, const Derivatives2D& d) {
        const double zh = p.z_sat_hi();
        const auto make = [&](double a, double z, bool saturated) {
            const double pz = std::clamp(z, 0.0, zh);
            Control2D c;
            c.running = -0.5 * p.c_L * a * a;
            c.drift_x = a + pz / p.c_F;
            c.drift_y = pz * pz / (2.0 * p.c_F);
            c.vol_x = p.sigma;
            c.vol_y = p.sigma * z;
            c.a_star = a;
            c.z_star = z;
            c.saturated = saturated;
            return c;
        };
        const auto act = sup_a(d.vx, p);
        const auto sens = sup_z(d.vx, d.vy, d.vyy, d.vxy, p, box);
        std::vector<Control2D> out{make(act.a_star, sens.z_star, sens.saturated), make(act.a_star, 1.0, false),
                                   make(-p.a_max, 1.0, false), make(p.a_max, 1.0, false)};
        // Finite-difference curvature is unreliable on coarse grids; a z-grid over the
        // saturation interval lets the transport step pick the sensitivity.
        const double lo = std::max(box.lo, -zh / 4.0), hi = std::min(box.hi, 1.25 * zh);
        for (int i = 0; i <= 24; ++i) out.push_back(make(act.a_star, lo + (hi - lo) * i / 24.0, false));
        return out;
    };
    return spec;
}

}  // namespace stackelberg::pde
