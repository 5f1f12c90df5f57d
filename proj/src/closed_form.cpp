#include "stackelberg/closed_form.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace stackelberg::closed_form {

EquilibriumReport first_best(const GameParams& params) {
    const auto p = validate(params);
    EquilibriumReport r;
    r.kind = EquilibriumKind::FirstBest;
    r.x0 = p.x0;
    r.leader_value = p.x0 + (1.0 / (2.0 * p.c_L) + p.b_max) * p.T;
    r.follower_value = p.x0 + (1.0 / p.c_L + p.b_max - 0.5 * p.c_F * p.b_max * p.b_max) * p.T;
    r.strategy = {ConstantAction{1.0 / p.c_L}, ConstantEffort{p.b_max}};
    return r;
}

EquilibriumReport aol(const GameParams& params) {
    const auto p = validate(params);
    EquilibriumReport r;
    r.kind = EquilibriumKind::AOL;
    r.x0 = p.x0;
    r.leader_value = p.x0 + (1.0 / (2.0 * p.c_L) + 1.0 / p.c_F) * p.T;
    r.follower_value = p.x0 + (1.0 / p.c_L + 1.0 / (2.0 * p.c_F)) * p.T;
    r.strategy = {ConstantAction{1.0 / p.c_L}, ConstantEffort{1.0 / p.c_F}};
    return r;
}

EquilibriumReport af(const GameParams& params) {
    auto r = aol(params);
    r.kind = EquilibriumKind::AF;
    return r;
}

double aclm_max_gain(const GameParams& params) {
    return std::log(params.b_max * params.c_F) / params.T;
}

namespace {

// (e^{kT} - 1) / k, accurate for small k.
double growth(double k, double T) { return std::expm1(k * T) / k; }

}  // namespace

double aclm_leader_value(const GameParams& p, double k) {
    return p.x0 + p.T / (2.0 * p.c_L) + growth(k, p.T) / p.c_F;
}

double aclm_follower_value(const GameParams& p, double k) {
    return p.x0 + p.T / p.c_L + growth(k, p.T) / p.c_F - growth(2.0 * k, p.T) / (2.0 * p.c_F);
}

double aclm_threshold(const GameParams& p) {
    const double bc = p.b_max * p.c_F;
    return std::max(1.0 / p.c_L + p.b_max * (bc - 1.0), (bc * bc - 1.0) / (2.0 * p.c_F) - 1.0 / p.c_L);
}

EquilibriumReport aclm(const GameParams& params, double k) {
    const auto p = validate(params);
    const double k_bar = aclm_max_gain(p);
    if (!(k > 0.0) || k > k_bar * (1.0 + 1e-15)) {
        throw std::out_of_range("ACLM gain k=" + format_number(k) + " outside (0, " +
                                format_number(k_bar) + "]");
    }
    EquilibriumReport r;
    r.kind = EquilibriumKind::ACLM;
    r.x0 = p.x0;
    r.leader_value = aclm_leader_value(p, k);
    r.follower_value = aclm_follower_value(p, k);
    r.strategy = {AffineTrackingAction{k, 1.0 / p.c_L, p.x0, p.c_F, p.T},
                  ExponentialEffort{k, p.c_F, p.b_max, p.T}};
    r.diagnostics["gain"] = k;
    r.diagnostics["max_gain"] = k_bar;
    return r;
}

EquilibriumReport aclm_optimal(const GameParams& params) {
    const auto p = validate(params);
    if (!(p.a_max > aclm_threshold(p))) {
        throw NotCertified("ACLM closed form not certified for these parameters (a_max=" +
                           format_number(p.a_max) + " <= " + format_number(aclm_threshold(p)) + ")");
    }
    auto r = aclm(p, aclm_max_gain(p));
    r.diagnostics["threshold"] = aclm_threshold(p);
    return r;
}

double acl_min_penalty(double c_F, double b_max) {
    const double d = b_max - 1.0 / c_F;
    return 0.5 * c_F * d * d;
}

double acl_threshold(const GameParams& p) {
    return 1.0 / (2.0 * p.c_F) - p.b_max + 0.5 * p.c_F * p.b_max * p.b_max - 1.0 / p.c_L;
}

EquilibriumReport acl(const GameParams& params) {
    const auto p = validate(params);
    if (p.a_max < acl_threshold(p)) {
        throw NotCertified("ACL/first-best equivalence not certified (a_max=" + format_number(p.a_max) +
                           " < " + format_number(acl_threshold(p)) + ")");
    }
    const double a_hat = 1.0 / p.c_L;
    const double p_min = acl_min_penalty(p.c_F, p.b_max);
    // One unit above the effectiveness bound, capped so the punished action stays in A.
    const double penalty = std::min(p_min + 1.0, a_hat + p.a_max);

    auto r = first_best(p);
    r.kind = EquilibriumKind::ACL;
    r.strategy = {PunishmentAction{a_hat, penalty, p.b_max}, ConstantEffort{p.b_max}};
    r.diagnostics["penalty"] = penalty;
    r.diagnostics["min_penalty"] = p_min;
    r.diagnostics["threshold"] = acl_threshold(p);
    return r;
}

BoundaryPair boundaries_exact(const GameParams& params) {
    const auto p = validate(params);
    const double drift = 1.0 / (2.0 * p.c_F);
    return {p.T, drift - p.a_max, drift + p.a_max};
}

BoundaryLeaderValues boundary_leader_values(const GameParams& params) {
    const auto p = validate(params);
    const double base = 1.0 / p.c_F - 0.5 * p.c_L * p.a_max * p.a_max;
    return {p.T, base - p.a_max, base + p.a_max};
}

}  // namespace stackelberg::closed_form
