#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "stackelberg/closed_form.hpp"
#include "stackelberg/pde.hpp"

using namespace stackelberg;
using namespace stackelberg::closed_form;

namespace {

// Deterministic payoffs for constant controls.
double leader_payoff(const GameParams& p, double a, double b) {
    return p.x0 + (a + b) * p.T - 0.5 * p.c_L * a * a * p.T;
}
double follower_payoff(const GameParams& p, double a, double b) {
    return p.x0 + (a + b) * p.T - 0.5 * p.c_F * b * b * p.T;
}

double argmax_grid(double lo, double hi, const std::function<double(double)>& f) {
    double best = lo, fb = f(lo);
    for (int i = 1; i <= 200000; ++i) {
        const double x = lo + (hi - lo) * i / 200000.0;
        if (f(x) > fb) {
            fb = f(x);
            best = x;
        }
    }
    return best;
}

// Simpson on [0, T].
double integrate(const std::function<double(double)>& f, double T) {
    const int n = 2000;
    const double h = T / n;
    double s = f(0.0) + f(T);
    for (int i = 1; i < n; ++i) s += (i % 2 ? 4.0 : 2.0) * f(i * h);
    return s * h / 3.0;
}

GameParams random_params(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> U(0.5, 2.0);
    GameParams p;
    p.T = U(rng);
    p.sigma = U(rng);
    p.c_F = U(rng);
    p.c_L = U(rng);
    p.b_max = 1.0 / p.c_F + U(rng);
    p.a_max = 1.0 / p.c_L + 5.0 * U(rng);
    p.x0 = U(rng) - 1.0;
    return p;
}

}  // namespace

TEST_CASE("benchmark table") {
    const auto p = benchmark_params();
    CHECK(first_best(p).leader_value == 3.5);
    CHECK(first_best(p).follower_value == -0.5);
    CHECK(aol(p).leader_value == 1.5);
    CHECK(aol(p).follower_value == 1.5);
    CHECK(af(p).leader_value == 1.5);
    CHECK(acl(p).leader_value == 3.5);
    CHECK(acl(p).follower_value == -0.5);
    const auto m = aclm_optimal(p);
    CHECK(std::abs(m.leader_value - (0.5 + 2.0 / std::log(3.0))) <= 1e-12);
    CHECK(std::abs(m.leader_value - 2.320478) <= 1e-6);
    CHECK(std::abs(m.follower_value - 1.0) <= 1e-12);
}

TEST_CASE("first best is the pointwise optimum") {
    std::mt19937_64 rng(3);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_params(rng);
        const auto r = first_best(p);
        const double a = argmax_grid(-p.a_max, p.a_max, [&](double a) { return leader_payoff(p, a, p.b_max); });
        CHECK(std::abs(a - 1.0 / p.c_L) <= 1e-4 * p.a_max);
        CHECK(r.leader_value == doctest::Approx(leader_payoff(p, 1.0 / p.c_L, p.b_max)).epsilon(1e-12));
        CHECK(r.follower_value == doctest::Approx(follower_payoff(p, 1.0 / p.c_L, p.b_max)).epsilon(1e-12));
        CHECK(r.leader_value - r.follower_value ==
              doctest::Approx((p.b_max * p.b_max * p.c_F / 2 - 1 / (2 * p.c_L)) * p.T).epsilon(1e-12));
    }
}

TEST_CASE("open loop: follower best response, then leader optimum") {
    std::mt19937_64 rng(4);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_params(rng);
        const double b = argmax_grid(0.0, p.b_max, [&](double b) { return follower_payoff(p, 0.3, b); });
        CHECK(std::abs(b - 1.0 / p.c_F) <= 1e-4 * p.b_max);
        const auto r = aol(p);
        CHECK(r.leader_value == doctest::Approx(leader_payoff(p, 1.0 / p.c_L, 1.0 / p.c_F)).epsilon(1e-12));
        CHECK(r.follower_value == doctest::Approx(follower_payoff(p, 1.0 / p.c_L, 1.0 / p.c_F)).epsilon(1e-12));
        const auto f = af(p);
        CHECK(f.leader_value == r.leader_value);
        CHECK(f.follower_value == r.follower_value);
        CHECK(f.strategy == r.strategy);
        CHECK(f.kind == EquilibriumKind::AF);
    }
}

TEST_CASE("ACLM values by quadrature of the announced efforts") {
    const auto p = benchmark_params();
    for (double k : {0.1, 0.5, 1.0, std::log(3.0)}) {
        const auto r = aclm(p, k);
        const auto beta = [&](double t) { return std::exp(k * (p.T - t)) / p.c_F; };
        const double drift = integrate([&](double t) { return 1.0 / p.c_L + beta(t); }, p.T);
        const double cost_b = integrate([&](double t) { return beta(t) * beta(t); }, p.T);
        CHECK(r.leader_value == doctest::Approx(p.x0 + drift - 0.5 * p.c_L * p.T / (p.c_L * p.c_L)).epsilon(1e-10));
        CHECK(r.follower_value == doctest::Approx(p.x0 + drift - 0.5 * p.c_F * cost_b).epsilon(1e-10));
    }
    CHECK_THROWS_AS(aclm(p, 0.0), std::out_of_range);
    CHECK_THROWS_AS(aclm(p, 1.2), std::out_of_range);
}

TEST_CASE("ACLM leader value increases in the gain") {
    std::mt19937_64 rng(8);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_params(rng);
        const double kb = aclm_max_gain(p);
        double prev = -INFINITY;
        for (int j = 1; j <= 50; ++j) {
            const double v = aclm_leader_value(p, kb * j / 50.0);
            CHECK(v > prev);
            prev = v;
        }
    }
}

TEST_CASE("certification thresholds") {
    auto p = benchmark_params();
    CHECK(aclm_threshold(p) == 7.0);
    CHECK(acl_threshold(p) == 1.0);
    CHECK(acl_min_penalty(1.0, 3.0) == 2.0);
    CHECK(acl(p).diagnostics.at("penalty") == 3.0);
    p.a_max = 5.0;
    CHECK_THROWS_AS(aclm_optimal(p), NotCertified);
    CHECK_NOTHROW(acl(p));
    p.a_max = 7.0;
    CHECK_THROWS_AS(aclm_optimal(p), NotCertified);
    p.a_max = 7.0001;
    CHECK_NOTHROW(aclm_optimal(p));
    p.c_F = 0.5;
    p.b_max = 8.0;
    p.a_max = 2.0;
    CHECK(acl_threshold(p) > 2.0);
    CHECK_THROWS_AS(acl(p), NotCertified);
}

TEST_CASE("punishment is effective") {
    const auto p = benchmark_params();
    const auto r = acl(p);
    const auto& pa = std::get<PunishmentAction>(r.strategy.leader);
    const double comply = follower_payoff(p, pa.a_hat, pa.b_hat);
    const double best_dev = follower_payoff(p, pa.a_hat - pa.penalty, 1.0 / p.c_F);
    CHECK(comply > best_dev);
    CHECK(pa.a_hat - pa.penalty >= -p.a_max);
}

TEST_CASE("exact boundaries solve their HJB equations") {
    std::mt19937_64 rng(9);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_params(rng);
        const auto b = boundaries_exact(p);
        const auto lo = pde::boundary_hamiltonian(p, pde::BoundarySide::Lower);
        const auto hi = pde::boundary_hamiltonian(p, pde::BoundarySide::Upper);
        for (int k = 0; k < 10; ++k) {
            const double t = p.T * U(rng), x = 4.0 * U(rng) - 2.0, d = 1e-6;
            // w_t + H(w_x, w_xx) = 0 with w_x = 1, w_xx = 0.
            const double wt_lo = (b.w_minus(t + d, x) - b.w_minus(t - d, x)) / (2 * d);
            const double wt_hi = (b.w_plus(t + d, x) - b.w_plus(t - d, x)) / (2 * d);
            CHECK(std::abs(wt_lo + lo.evaluate(t, x, 1.0, 0.0).value) < 1e-8);
            CHECK(std::abs(wt_hi + hi.evaluate(t, x, 1.0, 0.0).value) < 1e-8);
            CHECK(b.w_plus(t, x) - b.w_minus(t, x) == doctest::Approx(2 * p.a_max * (p.T - t)));
        }
        CHECK(b.w_minus(p.T, 0.3) == 0.3);
        CHECK(b.w_plus(p.T, 0.3) == 0.3);
    }
    const auto b = boundaries_exact(benchmark_params());
    CHECK(b.w_minus(0.0, 0.0) == -9.5);
    CHECK(b.w_plus(0.0, 0.0) == 10.5);
}

TEST_CASE("leader values on the boundaries") {
    std::mt19937_64 rng(10);
    for (int i = 0; i < 20; ++i) {
        const auto p = random_params(rng);
        const auto phi = boundary_leader_values(p);
        // Boundary controls: a = -/+ a_max, z = 1 so b = 1 / c_F.
        const double b = 1.0 / p.c_F;
        CHECK(phi.phi_minus(0.0, p.x0) == doctest::Approx(leader_payoff(p, -p.a_max, b)).epsilon(1e-12));
        CHECK(phi.phi_plus(0.0, p.x0) == doctest::Approx(leader_payoff(p, p.a_max, b)).epsilon(1e-12));
    }
    const auto phi = boundary_leader_values(benchmark_params());
    CHECK(phi.phi_minus(0.0, 0.0) == -59.0);
    CHECK(phi.phi_plus(0.0, 0.0) == -39.0);
}
