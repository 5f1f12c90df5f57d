#pragma once

// Domain types shared by every solver: game constants, equilibrium reports,
// strategy descriptors and the feedback policy interface.

#include <functional>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "json.hpp"

namespace stackelberg {

/// Constants of the one-dimensional leader/follower game
///   dX = (alpha + beta) dt + sigma dW,  alpha in [-a_max, a_max], beta in [0, b_max].
struct GameParams {
    double T = 1.0;
    double sigma = 1.0;
    double c_F = 1.0;
    double c_L = 1.0;
    double a_max = 10.0;
    double b_max = 3.0;
    double x0 = 0.0;

    /// Upper end of the follower's saturation interval [0, b_max * c_F] for the sensitivity z.
    double z_sat_hi() const { return b_max * c_F; }

    bool operator==(const GameParams&) const = default;
};

/// Parameters of the benchmark scenario (T = 1, sigma = 1, c_F = c_L = 1, a_max = 10, b_max = 3, x0 = 0).
GameParams benchmark_params();

class ValidationError : public std::invalid_argument {
public:
    explicit ValidationError(std::vector<std::string> violations);
    const std::vector<std::string>& violations() const { return violations_; }

private:
    std::vector<std::string> violations_;
};

/// Returns the parameters unchanged if every standing assumption holds; otherwise throws
/// ValidationError naming each violated bound.
GameParams validate(const GameParams& params);

/// Exact keys: T, sigma, c_F, c_L, a_max, b_max, x0. Missing or unknown keys are rejected.
void to_json(nlohmann::json& j, const GameParams& params);
void from_json(const nlohmann::json& j, GameParams& params);

enum class EquilibriumKind { FirstBest, AOL, AF, ACLM, ACL, CL };

std::string_view to_string(EquilibriumKind kind);
EquilibriumKind parse_kind(std::string_view text);

inline constexpr EquilibriumKind kAllKinds[] = {
    EquilibriumKind::FirstBest, EquilibriumKind::AOL, EquilibriumKind::AF,
    EquilibriumKind::ACLM,      EquilibriumKind::ACL, EquilibriumKind::CL};

// ---------------------------------------------------------------------------
// Strategy descriptors
// ---------------------------------------------------------------------------

struct ConstantAction {
    double a = 0.0;
    bool operator==(const ConstantAction&) const = default;
};

/// a(t, x) = clamp(base + gain * (x - X*_t), -a_max, a_max) where the reference path is
/// X*_t = x0 + base * t + exp(gain*T) * (1 - exp(-gain*t)) / (gain * c_F) + sigma * W_t.
struct AffineTrackingAction {
    double gain = 0.0;
    double base = 0.0;
    double x0 = 0.0;
    double c_F = 1.0;
    double T = 1.0;

    /// Deterministic part of the reference path (everything except sigma * W_t).
    double reference_drift(double t) const;
    bool operator==(const AffineTrackingAction&) const = default;
};

/// Play a_hat while the observed effort equals b_hat, a_hat - penalty otherwise.
struct PunishmentAction {
    double a_hat = 0.0;
    double penalty = 0.0;
    double b_hat = 0.0;
    bool operator==(const PunishmentAction&) const = default;
};

/// Leader control read from a solved value surface; label identifies the grid.
struct FeedbackTableAction {
    std::string grid_label;
    bool operator==(const FeedbackTableAction&) const = default;
};

using LeaderControl =
    std::variant<ConstantAction, AffineTrackingAction, PunishmentAction, FeedbackTableAction>;

struct ConstantEffort {
    double b = 0.0;
    bool operator==(const ConstantEffort&) const = default;
};

/// b(t) = clamp(exp(gain * (T - t)) / c_F, 0, b_max).
struct ExponentialEffort {
    double gain = 0.0;
    double c_F = 1.0;
    double b_max = 0.0;
    double T = 1.0;

    double at(double t) const;
    bool operator==(const ExponentialEffort&) const = default;
};

/// b = clamp(z, 0, z_hi) / c_F for the sensitivity z announced by the leader.
struct SensitivityResponse {
    double z_hi = 0.0;
    double c_F = 1.0;

    double at(double z) const;
    bool operator==(const SensitivityResponse&) const = default;
};

using FollowerControl = std::variant<ConstantEffort, ExponentialEffort, SensitivityResponse>;

struct StrategyDescriptor {
    LeaderControl leader;
    FollowerControl follower;
    bool operator==(const StrategyDescriptor&) const = default;
};

/// Throws std::invalid_argument if a constant referenced by the descriptor leaves A or B.
void check_admissible(const StrategyDescriptor& strategy, const GameParams& params);

void to_json(nlohmann::json& j, const StrategyDescriptor& strategy);
void from_json(const nlohmann::json& j, StrategyDescriptor& strategy);

using Diagnostics = std::map<std::string, double>;

struct EquilibriumReport {
    EquilibriumKind kind = EquilibriumKind::FirstBest;
    double x0 = 0.0;
    double leader_value = 0.0;
    double follower_value = 0.0;
    StrategyDescriptor strategy;
    Diagnostics diagnostics;
};

/// "kind,x0,leader_value,follower_value" with 9 significant digits.
std::string csv_row(const EquilibriumReport& report);

// ---------------------------------------------------------------------------
// Feedback policy
// ---------------------------------------------------------------------------

struct PolicyControl {
    double a = 0.0;
    double z = 0.0;
    bool on_boundary = false;
};

class PolicyDomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Map (t, x, y) -> (a, z) valid on {w_minus(t, x) <= y <= w_plus(t, x)}.
class FeedbackPolicy {
public:
    using ControlFn = std::function<PolicyControl(double t, double x, double y)>;
    using BoundFn = std::function<double(double t, double x)>;

    FeedbackPolicy(ControlFn control, BoundFn lower, BoundFn upper, double cell_width);

    /// Throws PolicyDomainError when y lies outside the reachable band.
    PolicyControl control_at(double t, double x, double y) const;
    bool contains(double t, double x, double y) const;
    double lower(double t, double x) const { return lower_(t, x); }
    double upper(double t, double x) const { return upper_(t, x); }
    /// Spatial resolution of the underlying table; used for clamp buffers.
    double cell_width() const { return cell_width_; }

private:
    ControlFn control_;
    BoundFn lower_;
    BoundFn upper_;
    double cell_width_;
};

/// Formats with 9 significant digits.
std::string format_number(double value);

}  // namespace stackelberg
