#pragma once

// Exact equilibrium values for the information structures that admit closed forms,
// and the exact reachability boundaries with the leader's value on them.

#include <stdexcept>

#include "stackelberg/model.hpp"

namespace stackelberg::closed_form {

/// Raised when a closed form is requested outside the parameter region where it is proven.
class NotCertified : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

EquilibriumReport first_best(const GameParams& params);
EquilibriumReport aol(const GameParams& params);
/// Feedback equilibrium; identical to aol() apart from the kind tag.
EquilibriumReport af(const GameParams& params);

/// Largest certified tracking gain, ln(b_max c_F) / T.
double aclm_max_gain(const GameParams& params);
/// Leader reward f(k) of the affine tracking strategy with gain k.
double aclm_leader_value(const GameParams& params, double k);
double aclm_follower_value(const GameParams& params, double k);
/// Threshold that a_max must exceed for the tracking strategy to stay inside A.
double aclm_threshold(const GameParams& params);

/// ACLM-k report. Throws std::out_of_range unless 0 < k <= aclm_max_gain(params).
EquilibriumReport aclm(const GameParams& params, double k);
/// ACLM report at the maximal gain. Throws NotCertified when a_max <= aclm_threshold(params).
EquilibriumReport aclm_optimal(const GameParams& params);

/// Smallest penalty that makes b_max the follower's best response: c_F (b_max - 1/c_F)^2 / 2.
double acl_min_penalty(double c_F, double b_max);
/// Lower bound on a_max under which punishment reproduces the first-best.
double acl_threshold(const GameParams& params);
/// Punishment equilibrium. Throws NotCertified when a_max < acl_threshold(params).
EquilibriumReport acl(const GameParams& params);

/// w_minus(t, x) = x + c_minus (T - t), w_plus(t, x) = x + c_plus (T - t).
struct BoundaryPair {
    double T = 1.0;
    double c_minus = 0.0;
    double c_plus = 0.0;

    double w_minus(double t, double x) const { return x + c_minus * (T - t); }
    double w_plus(double t, double x) const { return x + c_plus * (T - t); }
};

BoundaryPair boundaries_exact(const GameParams& params);

/// Leader value on the lower and upper boundary, phi(t, x) = x + slope (T - t).
struct BoundaryLeaderValues {
    double T = 1.0;
    double slope_minus = 0.0;
    double slope_plus = 0.0;

    double phi_minus(double t, double x) const { return x + slope_minus * (T - t); }
    double phi_plus(double t, double x) const { return x + slope_plus * (T - t); }
};

BoundaryLeaderValues boundary_leader_values(const GameParams& params);

}  // namespace stackelberg::closed_form
