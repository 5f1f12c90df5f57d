#include "stackelberg/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <ostream>

#include "stackelberg/closed_form.hpp"

namespace stackelberg::simulate {

void SimConfig::check() const {
    if (n_paths < 2) throw std::invalid_argument("simulate: n_paths < 2");
    if (n_steps < 1) throw std::invalid_argument("simulate: n_steps < 1");
    if (antithetic && n_paths % 2 != 0) throw std::invalid_argument("simulate: antithetic needs an even n_paths");
}

namespace {

std::uint64_t mix(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ULL;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

// (0, 1]
double unit(std::uint64_t bits) { return static_cast<double>((bits >> 11) + 1) * 0x1.0p-53; }

struct Kahan {
    double sum = 0.0, c = 0.0;
    void add(double v) {
        const double y = v - c;
        const double t = sum + y;
        c = (t - sum) - y;
        sum = t;
    }
};

struct Moments {
    double mean, se;
};

// Antithetic pairs are averaged first so the standard error sees independent samples.
Moments moments(const std::vector<double>& v, bool antithetic) {
    std::vector<double> s;
    if (antithetic) {
        s.reserve(v.size() / 2);
        for (std::size_t i = 0; i + 1 < v.size(); i += 2) s.push_back(0.5 * (v[i] + v[i + 1]));
    } else {
        s = v;
    }
    Kahan m;
    for (double x : s) m.add(x);
    const double mean = m.sum / static_cast<double>(s.size());
    if (s.size() < 2) return {mean, 0.0};
    Kahan q;
    for (double x : s) q.add((x - mean) * (x - mean));
    const double var = q.sum / static_cast<double>(s.size() - 1);
    return {mean, std::sqrt(var / static_cast<double>(s.size()))};
}

struct Stream {
    std::uint64_t id;
    double sign;
};

Stream stream_of(long path, bool antithetic) {
    if (!antithetic) return {static_cast<std::uint64_t>(path), 1.0};
    return {static_cast<std::uint64_t>(path / 2), path % 2 == 0 ? 1.0 : -1.0};
}

template <class... F>
struct overloaded : F... {
    using F::operator()...;
};

}  // namespace

double gaussian(std::uint64_t seed, std::uint64_t stream, std::uint64_t step) {
    const std::uint64_t h = mix(mix(mix(seed) ^ stream) ^ step);
    const double u1 = unit(h);
    const double u2 = unit(mix(h));
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

SimResult simulate(const GameParams& params, const StrategyDescriptor& strategy, const SimConfig& cfg,
                   EquilibriumKind kind) {
    const auto p = validate(params);
    cfg.check();
    check_admissible(strategy, p);
    if (std::holds_alternative<FeedbackTableAction>(strategy.leader) ||
        std::holds_alternative<SensitivityResponse>(strategy.follower))
        throw std::invalid_argument("simulate: feedback strategies need a FeedbackPolicy");

    const double dt = p.T / cfg.n_steps, sqdt = std::sqrt(dt);
    std::vector<double> jl(cfg.n_paths), jf(cfg.n_paths);

    for (long path = 0; path < cfg.n_paths; ++path) {
        const auto s = stream_of(path, cfg.antithetic);
        double x = p.x0, w = 0.0, cost_a = 0.0, cost_b = 0.0;
        for (int n = 0; n < cfg.n_steps; ++n) {
            const double t = n * dt;
            const double b = std::visit(overloaded{[](const ConstantEffort& e) { return e.b; },
                                                   [t](const ExponentialEffort& e) { return e.at(t); },
                                                   [](const SensitivityResponse&) { return 0.0; }},
                                        strategy.follower);
            const double a = std::visit(
                overloaded{[](const ConstantAction& c) { return c.a; },
                           [&](const AffineTrackingAction& c) {
                               const double ref = c.x0 + c.reference_drift(t) + p.sigma * w;
                               return std::clamp(c.base + c.gain * (x - ref), -p.a_max, p.a_max);
                           },
                           [b](const PunishmentAction& c) {
                               return std::abs(b - c.b_hat) <= 1e-12 ? c.a_hat : c.a_hat - c.penalty;
                           },
                           [](const FeedbackTableAction&) { return 0.0; }},
                strategy.leader);
            const double dw = s.sign * gaussian(cfg.seed, s.id, static_cast<std::uint64_t>(n)) * sqdt;
            cost_a += a * a * dt;
            cost_b += b * b * dt;
            x += (a + b) * dt + p.sigma * dw;
            w += dw;
        }
        jl[path] = x - 0.5 * p.c_L * cost_a;
        jf[path] = x - 0.5 * p.c_F * cost_b;
    }

    SimResult r;
    r.kind = kind;
    r.n_paths = cfg.n_paths;
    r.n_steps = cfg.n_steps;
    r.seed = cfg.seed;
    const auto ml = moments(jl, cfg.antithetic), mf = moments(jf, cfg.antithetic);
    r.JL_mean = ml.mean;
    r.JL_se = ml.se;
    r.JF_mean = mf.mean;
    r.JF_se = mf.se;
    return r;
}

SimResult simulate(const GameParams& params, const FeedbackPolicy& policy, double y0, const SimConfig& cfg) {
    const auto p = validate(params);
    cfg.check();
    if (!policy.contains(0.0, p.x0, y0)) throw PolicyDomainError("simulate: y0 outside the reachable band");

    const double dt = p.T / cfg.n_steps, sqdt = std::sqrt(dt);
    const double buffer = 2.0 * policy.cell_width();
    const SensitivityResponse follower{p.z_sat_hi(), p.c_F};
    std::vector<double> jl(cfg.n_paths), jf(cfg.n_paths), gap(cfg.n_paths);
    long clamped = 0, hits = 0, exits = 0;

    for (long path = 0; path < cfg.n_paths; ++path) {
        const auto s = stream_of(path, cfg.antithetic);
        double x = p.x0, y = y0, cost_a = 0.0, cost_b = 0.0;
        bool was_clamped = false, hit = false, exited = false;
        for (int n = 0; n < cfg.n_steps; ++n) {
            const double t = n * dt;
            const double lo = policy.lower(t, x), hi = policy.upper(t, x);
            if (y < lo || y > hi) {
                const double miss = y < lo ? lo - y : y - hi;
                if (miss > buffer) exited = true;
                was_clamped = true;
                y = std::clamp(y, lo, hi);
            }
            const auto c = policy.control_at(t, x, y);
            hit = hit || c.on_boundary;
            const double b = follower.at(c.z);
            const double pi = p.c_F * b;
            const double dw = s.sign * gaussian(cfg.seed, s.id, static_cast<std::uint64_t>(n)) * sqdt;
            cost_a += c.a * c.a * dt;
            cost_b += b * b * dt;
            x += (c.a + b) * dt + p.sigma * dw;
            y += pi * pi / (2.0 * p.c_F) * dt + c.z * p.sigma * dw;
        }
        jl[path] = x - 0.5 * p.c_L * cost_a;
        jf[path] = x - 0.5 * p.c_F * cost_b;
        gap[path] = std::abs(y - x);
        clamped += was_clamped;
        hits += hit;
        exits += exited;
    }
    if (exits > cfg.n_paths / 100) {
        throw DomainExitError("simulate: " + std::to_string(exits) + " of " + std::to_string(cfg.n_paths) +
                              " paths left the band beyond the clamp buffer");
    }

    SimResult r;
    r.kind = EquilibriumKind::CL;
    r.n_paths = cfg.n_paths;
    r.n_steps = cfg.n_steps;
    r.seed = cfg.seed;
    const auto ml = moments(jl, cfg.antithetic), mf = moments(jf, cfg.antithetic);
    r.JL_mean = ml.mean;
    r.JL_se = ml.se;
    r.JF_mean = mf.mean;
    r.JF_se = mf.se;
    r.clamp_fraction = static_cast<double>(clamped) / cfg.n_paths;
    r.exits = exits;

    GapStats g;
    Kahan m;
    for (double v : gap) m.add(v);
    g.mean = m.sum / cfg.n_paths;
    g.max = *std::max_element(gap.begin(), gap.end());
    auto q = gap;
    const auto k = static_cast<std::size_t>(std::ceil(0.95 * q.size())) - 1;
    std::nth_element(q.begin(), q.begin() + static_cast<long>(k), q.end());
    g.p95 = q[k];
    g.band_hit_fraction = static_cast<double>(hits) / cfg.n_paths;
    r.gap = g;
    return r;
}

GapStats check_target_constraint(const GameParams& params, const FeedbackPolicy& policy, double y0,
                                 const SimConfig& cfg) {
    return *simulate(params, policy, y0, cfg).gap;
}

std::vector<ComparisonRow> compare_all(const GameParams& params, const SimConfig& cfg,
                                       const target::GridOptions& grid, const target::LeaderOptions& leader) {
    const auto p = validate(params);
    std::vector<ComparisonRow> rows;
    const auto closed = [&](EquilibriumKind kind, auto&& make) {
        ComparisonRow row;
        row.report.kind = kind;
        row.report.x0 = p.x0;
        try {
            row.report = make(p);
        } catch (const closed_form::NotCertified&) {
            row.certified = false;
            rows.push_back(row);
            return;
        }
        row.mc = simulate(p, row.report.strategy, cfg, kind);
        rows.push_back(row);
    };
    closed(EquilibriumKind::FirstBest, closed_form::first_best);
    closed(EquilibriumKind::AOL, closed_form::aol);
    closed(EquilibriumKind::AF, closed_form::af);
    closed(EquilibriumKind::ACLM, closed_form::aclm_optimal);
    closed(EquilibriumKind::ACL, closed_form::acl);

    const auto sol = target::solve_leader(p, grid, leader);
    ComparisonRow row;
    row.report = target::cl_report(sol, p.x0);
    row.mc = simulate(p, target::extract_policy(sol), sol.y0_star, cfg);
    rows.push_back(row);
    return rows;
}

void write_sim_csv(std::ostream& out, const std::vector<SimResult>& results) {
    out << "# schema=1\nkind,n_paths,n_steps,seed,JL_mean,JL_se,JF_mean,JF_se,target_gap_mean,clamp_fraction\n";
    for (const auto& r : results) {
        out << to_string(r.kind) << ',' << r.n_paths << ',' << r.n_steps << ',' << r.seed << ','
            << format_number(r.JL_mean) << ',' << format_number(r.JL_se) << ',' << format_number(r.JF_mean) << ','
            << format_number(r.JF_se) << ',' << (r.gap ? format_number(r.gap->mean) : std::string()) << ','
            << format_number(r.clamp_fraction) << '\n';
    }
}

}  // namespace stackelberg::simulate
