#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <string>

#include "stackelberg/pde.hpp"

namespace stackelberg::pde {

void Grid1D::check() const {
    if (!(T > 0.0)) throw std::invalid_argument("Grid1D: T must be positive");
    if (n_time < 2) throw std::invalid_argument("Grid1D: n_time < 2");
    if (n_space < 3) throw std::invalid_argument("Grid1D: n_space < 3");
    if (!(x_max > x_min)) throw std::invalid_argument("Grid1D: x_max <= x_min");
    for (int n = 0; n < n_time; ++n) {
        const double t = t_node(n);
        const double lo = lower_at(t), hi = upper_at(t);
        const double tol = 1e-9 * (1.0 + std::abs(x_min) + std::abs(x_max));
        if (lo > hi) throw std::invalid_argument("Grid1D: space_lo > space_hi at t=" + format_number(t));
        if (lo < x_min - tol || hi > x_max + tol)
            throw std::invalid_argument("Grid1D: active interval leaves [x_min, x_max] at t=" + format_number(t));
    }
}

namespace {

constexpr long kMaxSubsteps = 50'000'000;

bool near(double a, double b) { return std::abs(a - b) <= 1e-12 * (1.0 + std::abs(a) + std::abs(b)); }

struct Candidate {
    HamiltonianEval eval;
    double update = 0.0;  // upwinded H
    double rate = 0.0;    // weight removed from the centre node per unit time
};

class Solver1D {
public:
    Solver1D(const Grid1D& grid, const HamiltonianSpec& ham, const BoundaryCondition& left,
             const BoundaryCondition& right, const SolveOptions& options)
        : g_(grid), ham_(ham), left_(left), right_(right), opt_(options), n_(grid.n_space), h_(grid.h()),
          x_(n_), v_(n_), a_(n_), z_(n_), v_next_(n_), a_next_(n_), z_next_(n_), cand_(n_), has_cand_(n_) {
        for (int j = 0; j < n_; ++j) x_[j] = g_.x_node(j);
    }

    ValueSurface run(const std::function<double(double, double)>& terminal) {
        const int s = opt_.start_layer < 0 ? g_.n_time - 1 : opt_.start_layer;
        if (s < 1 || s > g_.n_time - 1)
            throw std::invalid_argument("solve_hjb_1d: start_layer outside [1, n_time - 1]");
        const int stop = opt_.stop_layer;
        if (stop < 0 || stop >= s) throw std::invalid_argument("solve_hjb_1d: stop_layer outside [0, start_layer)");

        t_ = g_.t_node(s);
        set_interval(t_, lo_, hi_, jlo_, jhi_);
        gl_ = left_.is_dirichlet() ? left_.value(t_, lo_) : 0.0;
        gr_ = right_.is_dirichlet() ? right_.value(t_, hi_) : 0.0;
        for (int j = jlo_; j <= jhi_; ++j) {
            v_[j] = terminal(t_, x_[j]);
            a_[j] = 0.0;
            z_[j] = 0.0;
            check_finite(j, v_[j]);
        }

        std::vector<SurfaceLayer> layers;
        layers.push_back(snapshot());
        for (int n = s - 1; n >= stop; --n) {
            const double target = g_.t_node(n);
            if (opt_.auto_substep) {
                while (t_ > target) {
                    if (++substeps_ > kMaxSubsteps) throw CflError("solve_hjb_1d: sub-step budget exhausted");
                    step(target, true);
                }
            } else {
                ++substeps_;
                step(target, false);
            }
            if (opt_.keep_history || n == stop) layers.push_back(snapshot());
        }

        Diagnostics d;
        d["substeps_total"] = static_cast<double>(substeps_);
        d["node_updates"] = static_cast<double>(updates_);
        d["saturated_fraction"] = updates_ > 0 ? static_cast<double>(saturated_) / updates_ : 0.0;
        d["h"] = h_;
        d["dt"] = g_.dt();
        d["start_time"] = g_.t_node(s);
        return ValueSurface(std::move(layers), std::move(d));
    }

private:
    void set_interval(double t, double& lo, double& hi, int& jlo, int& jhi) const {
        lo = g_.lower_at(t);
        hi = g_.upper_at(t);
        jlo = std::clamp(static_cast<int>(std::ceil((lo - g_.x_min) / h_ - 1e-9)), 0, n_ - 1);
        jhi = std::clamp(static_cast<int>(std::floor((hi - g_.x_min) / h_ + 1e-9)), 0, n_ - 1);
    }

    void check_finite(int j, double v) const {
        if (!std::isfinite(v)) {
            throw NumericalError("solve_hjb_1d: non-finite value at t=" + format_number(t_) +
                                 ", x=" + format_number(x_[j]));
        }
    }

    // Upwinded, linearised H at every node that is at least 3h/4 inside the current interval.
    double evaluate_candidates() {
        double max_rate = 0.0;
        const bool maximize = ham_.sense == Sense::Maximize;
        for (int j = jlo_; j <= jhi_; ++j) {
            has_cand_[j] = false;
            const double min_gap = 0.75 * h_ * (1.0 - 1e-9);
            if (x_[j] - lo_ < min_gap || hi_ - x_[j] < min_gap) continue;
            double vl, dl, vr, dr;
            if (j - 1 >= jlo_) {
                vl = v_[j - 1];
                dl = h_;
            } else {
                vl = gl_;
                dl = x_[j] - lo_;
            }
            if (j + 1 <= jhi_) {
                vr = v_[j + 1];
                dr = h_;
            } else {
                vr = gr_;
                dr = hi_ - x_[j];
            }
            const double v = v_[j];
            const double p_bwd = (v - vl) / dl;
            const double p_fwd = (vr - v) / dr;
            const double p_mid = (vr - vl) / (dl + dr);
            const double q = 2.0 * (p_fwd - p_bwd) / (dl + dr);

            Candidate best;
            bool first = true;
            for (const double p : std::array<double, 3>{p_bwd, p_mid, p_fwd}) {
                Candidate c;
                c.eval = ham_.evaluate(t_, x_[j], p, q);
                const auto& e = c.eval;
                if (e.diffusion < 0.0) throw std::logic_error("Hamiltonian returned negative diffusion");
                if (dl == h_ && dr == h_) {
                    // Central drift, diffusion raised just enough to stay monotone.
                    const double d_eff = std::max(e.diffusion, 0.5 * std::abs(e.drift) * h_);
                    c.update = e.running + e.drift * p_mid + d_eff * q;
                    c.rate = 2.0 * d_eff / (h_ * h_);
                } else {
                    const double mu_p = std::max(e.drift, 0.0), mu_m = std::min(e.drift, 0.0);
                    c.update = e.running + mu_p * p_fwd + mu_m * p_bwd + e.diffusion * q;
                    c.rate = 2.0 * e.diffusion / (dl * dr) + mu_p / dr - mu_m / dl;
                }
                max_rate = std::max(max_rate, c.rate);
                if (first || (maximize ? c.update > best.update : c.update < best.update)) {
                    best = c;
                    first = false;
                }
            }
            cand_[j] = best;
            has_cand_[j] = true;
        }
        return max_rate;
    }

    double boundary_shift(double t_new) const {
        double shift = 0.0;
        if (g_.lower) shift = std::max(shift, std::abs(g_.lower(t_new) - lo_));
        if (g_.upper) shift = std::max(shift, std::abs(g_.upper(t_new) - hi_));
        return shift;
    }

    void step(double target, bool adaptive) {
        const double max_rate = evaluate_candidates();
        double tau = t_ - target;
        if (adaptive) {
            if (max_rate * tau > 1.0) tau = 1.0 / max_rate;
            while (boundary_shift(t_ - tau) > 0.25 * h_) tau *= 0.5;
            if (tau < 1e-15 * g_.T) throw CflError("solve_hjb_1d: sub-step underflow at t=" + format_number(t_));
        } else {
            const double hmin = g_.moving() ? 0.75 * h_ : h_;
            const double bound_rate = 2.0 * ham_.diffusion_bound / (hmin * hmin) + 2.0 * ham_.drift_bound / hmin;
            if (bound_rate * tau > 1.0 || boundary_shift(t_ - tau) > 0.25 * h_) {
                throw CflError("solve_hjb_1d: dt=" + format_number(tau) + " violates the CFL bound " +
                               format_number(1.0 / bound_rate) + " and auto_substep is off");
            }
        }
        const double t_new = (t_ - tau <= target + 1e-14 * g_.T) ? target : t_ - tau;

        double lo, hi;
        int jlo, jhi;
        set_interval(t_new, lo, hi, jlo, jhi);
        const double gl = left_.is_dirichlet() ? left_.value(t_new, lo) : 0.0;
        const double gr = right_.is_dirichlet() ? right_.value(t_new, hi) : 0.0;

        // Regular nodes: at least h inside the new interval (a fixed edge node is never regular).
        const double gap = h_ * (1.0 - 1e-9);
        int rlo = jlo, rhi = jhi;
        while (rlo <= jhi && x_[rlo] - lo < gap) ++rlo;
        while (rhi >= jlo && hi - x_[rhi] < gap) --rhi;

        const double dt = t_ - t_new;
        for (int j = rlo; j <= rhi; ++j) {
            if (!has_cand_[j]) throw std::logic_error("solve_hjb_1d: regular node without a stencil");
            const auto& c = cand_[j];
            v_next_[j] = v_[j] + dt * c.update;
            a_next_[j] = c.eval.a_star;
            z_next_[j] = c.eval.z_star;
            ++updates_;
            if (c.eval.saturated) ++saturated_;
        }
        t_ = t_new;
        for (int j = rlo; j <= rhi; ++j) check_finite(j, v_next_[j]);

        const int n_regular = std::max(0, rhi - rlo + 1);
        // Left end.
        if (g_.lower) {
            double xa, va;
            if (n_regular > 0) {
                xa = x_[rlo];
                va = v_next_[rlo];
            } else if (g_.upper) {
                xa = hi;
                va = gr;
            } else {
                throw std::invalid_argument("solve_hjb_1d: active interval narrower than 2h next to a fixed edge");
            }
            for (int j = jlo; j < std::min(rlo, jhi + 1); ++j) {
                v_next_[j] = slave(x_[j], lo, gl, xa, va);
                a_next_[j] = left_.a_star;
                z_next_[j] = left_.z_star;
            }
        } else {
            fix_edge(0, 1, left_, t_new, rlo, rhi);
        }
        // Right end.
        if (g_.upper) {
            double xa, va;
            if (n_regular > 0) {
                xa = x_[rhi];
                va = v_next_[rhi];
            } else if (g_.lower) {
                xa = lo;
                va = gl;
            } else {
                throw std::invalid_argument("solve_hjb_1d: active interval narrower than 2h next to a fixed edge");
            }
            for (int j = std::max(rhi + 1, jlo); j <= jhi; ++j) {
                if (n_regular == 0 && j < rlo && g_.lower) continue;  // already set from the left
                v_next_[j] = slave(x_[j], hi, gr, xa, va);
                a_next_[j] = right_.a_star;
                z_next_[j] = right_.z_star;
            }
        } else {
            fix_edge(n_ - 1, -1, right_, t_new, rlo, rhi);
        }

        for (int j = jlo; j <= jhi; ++j) {
            check_finite(j, v_next_[j]);
            v_[j] = v_next_[j];
            a_[j] = a_next_[j];
            z_[j] = z_next_[j];
        }
        lo_ = lo;
        hi_ = hi;
        jlo_ = jlo;
        jhi_ = jhi;
        gl_ = gl;
        gr_ = gr;
    }

    static double slave(double x, double xb, double vb, double xa, double va) {
        if (near(xa, xb)) return vb;
        return vb + (x - xb) / (xa - xb) * (va - vb);
    }

    void fix_edge(int edge, int inward, const BoundaryCondition& bc, double t, int rlo, int rhi) {
        if (rhi - rlo + 1 < 2)
            throw std::invalid_argument("solve_hjb_1d: fewer than two regular nodes next to a fixed edge");
        const int j1 = edge + inward, j2 = edge + 2 * inward;
        if (bc.is_dirichlet()) {
            v_next_[edge] = bc.value(t, x_[edge]);
            a_next_[edge] = bc.a_star;
            z_next_[edge] = bc.z_star;
        } else {
            v_next_[edge] = 2.0 * v_next_[j1] - v_next_[j2];
            a_next_[edge] = a_next_[j1];
            z_next_[edge] = z_next_[j1];
        }
    }

    SurfaceLayer snapshot() const {
        SurfaceLayer l;
        l.t = t_;
        const auto push = [&l](double x, double v, double a, double z) {
            l.coord.push_back(x);
            l.value.push_back(v);
            l.a_star.push_back(a);
            l.z_star.push_back(z);
        };
        if (g_.lower) push(lo_, gl_, left_.a_star, left_.z_star);
        for (int j = jlo_; j <= jhi_; ++j) {
            if (g_.lower && (x_[j] <= lo_ || near(x_[j], lo_))) continue;
            if (g_.upper && (x_[j] >= hi_ || near(x_[j], hi_))) continue;
            push(x_[j], v_[j], a_[j], z_[j]);
        }
        if (g_.upper) push(hi_, gr_, right_.a_star, right_.z_star);
        return l;
    }

    const Grid1D& g_;
    const HamiltonianSpec& ham_;
    const BoundaryCondition& left_;
    const BoundaryCondition& right_;
    const SolveOptions& opt_;
    const int n_;
    const double h_;

    std::vector<double> x_, v_, a_, z_, v_next_, a_next_, z_next_;
    std::vector<Candidate> cand_;
    std::vector<char> has_cand_;

    double t_ = 0.0, lo_ = 0.0, hi_ = 0.0, gl_ = 0.0, gr_ = 0.0;
    int jlo_ = 0, jhi_ = 0;
    long substeps_ = 0, updates_ = 0, saturated_ = 0;
};

}  // namespace

ValueSurface solve_hjb_1d(const Grid1D& grid, const HamiltonianSpec& ham,
                          const std::function<double(double t, double x)>& terminal,
                          const BoundaryCondition& left, const BoundaryCondition& right,
                          const SolveOptions& options) {
    grid.check();
    if (!ham.evaluate) throw std::invalid_argument("solve_hjb_1d: Hamiltonian has no evaluate()");
    if (!terminal) throw std::invalid_argument("solve_hjb_1d: missing terminal condition");
    if ((grid.lower && !left.is_dirichlet()) || (grid.upper && !right.is_dirichlet()))
        throw std::invalid_argument("solve_hjb_1d: a moving end needs Dirichlet data");
    return Solver1D(grid, ham, left, right, options).run(terminal);
}

}  // namespace stackelberg::pde
