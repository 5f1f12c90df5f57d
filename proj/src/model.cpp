#include "stackelberg/model.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace stackelberg {

GameParams benchmark_params() { return GameParams{}; }

namespace {

std::string join(const std::vector<std::string>& parts) {
    std::ostringstream out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out << "; ";
        out << parts[i];
    }
    return out.str();
}

}  // namespace

ValidationError::ValidationError(std::vector<std::string> violations)
    : std::invalid_argument("invalid game parameters: " + join(violations)),
      violations_(std::move(violations)) {}

GameParams validate(const GameParams& p) {
    std::vector<std::string> bad;
    const std::array<std::pair<const char*, double>, 7> all{{{"T", p.T},
                                                             {"sigma", p.sigma},
                                                             {"c_F", p.c_F},
                                                             {"c_L", p.c_L},
                                                             {"a_max", p.a_max},
                                                             {"b_max", p.b_max},
                                                             {"x0", p.x0}}};
    for (const auto& [name, value] : all) {
        if (!std::isfinite(value)) bad.push_back(std::string(name) + " is not finite");
    }
    if (!bad.empty()) throw ValidationError(std::move(bad));

    if (!(p.T > 0)) bad.emplace_back("T <= 0");
    if (p.sigma == 0) bad.emplace_back("sigma = 0");
    if (!(p.c_F > 0)) bad.emplace_back("c_F <= 0");
    if (!(p.c_L > 0)) bad.emplace_back("c_L <= 0");
    // The action-bound checks only make sense with positive costs.
    if (p.c_L > 0 && !(p.a_max > 1.0 / p.c_L)) bad.emplace_back("a_max <= 1/c_L");
    if (p.c_F > 0 && !(p.b_max > 1.0 / p.c_F)) bad.emplace_back("b_max <= 1/c_F");
    if (!bad.empty()) throw ValidationError(std::move(bad));
    return p;
}

namespace {
constexpr std::array<const char*, 7> kParamKeys{"T", "sigma", "c_F", "c_L", "a_max", "b_max", "x0"};
}

void to_json(nlohmann::json& j, const GameParams& p) {
    j = nlohmann::json{{"T", p.T},         {"sigma", p.sigma}, {"c_F", p.c_F}, {"c_L", p.c_L},
                       {"a_max", p.a_max}, {"b_max", p.b_max}, {"x0", p.x0}};
}

void from_json(const nlohmann::json& j, GameParams& p) {
    if (!j.is_object()) throw std::invalid_argument("GameParams JSON must be an object");
    for (const auto& [key, _] : j.items()) {
        if (std::find_if(kParamKeys.begin(), kParamKeys.end(),
                         [&](const char* k) { return key == k; }) == kParamKeys.end()) {
            throw std::invalid_argument("unknown GameParams key: " + key);
        }
    }
    for (const char* key : kParamKeys) {
        if (!j.contains(key)) throw std::invalid_argument(std::string("missing GameParams key: ") + key);
        if (!j.at(key).is_number()) throw std::invalid_argument(std::string("GameParams key not numeric: ") + key);
    }
    p.T = j.at("T").get<double>();
    p.sigma = j.at("sigma").get<double>();
    p.c_F = j.at("c_F").get<double>();
    p.c_L = j.at("c_L").get<double>();
    p.a_max = j.at("a_max").get<double>();
    p.b_max = j.at("b_max").get<double>();
    p.x0 = j.at("x0").get<double>();
}

std::string_view to_string(EquilibriumKind kind) {
    switch (kind) {
        case EquilibriumKind::FirstBest: return "FB";
        case EquilibriumKind::AOL: return "AOL";
        case EquilibriumKind::AF: return "AF";
        case EquilibriumKind::ACLM: return "ACLM";
        case EquilibriumKind::ACL: return "ACL";
        case EquilibriumKind::CL: return "CL";
    }
    return "?";
}

EquilibriumKind parse_kind(std::string_view text) {
    std::string lower(text);
    std::transform(lower.begin(), lower.end(), lower.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    if (lower == "fb" || lower == "firstbest" || lower == "first-best") return EquilibriumKind::FirstBest;
    if (lower == "aol") return EquilibriumKind::AOL;
    if (lower == "af") return EquilibriumKind::AF;
    if (lower == "aclm") return EquilibriumKind::ACLM;
    if (lower == "acl") return EquilibriumKind::ACL;
    if (lower == "cl") return EquilibriumKind::CL;
    throw std::invalid_argument("unknown equilibrium kind: " + std::string(text));
}

double AffineTrackingAction::reference_drift(double t) const {
    return x0 + base * t + std::exp(gain * T) * (-std::expm1(-gain * t)) / (gain * c_F);
}

double ExponentialEffort::at(double t) const {
    return std::clamp(std::exp(gain * (T - t)) / c_F, 0.0, b_max);
}

double SensitivityResponse::at(double z) const { return std::clamp(z, 0.0, z_hi) / c_F; }

void check_admissible(const StrategyDescriptor& s, const GameParams& p) {
    const auto in_a = [&](double a) { return a >= -p.a_max && a <= p.a_max; };
    const auto in_b = [&](double b) { return b >= 0.0 && b <= p.b_max; };
    std::visit(
        [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, ConstantAction>) {
                if (!in_a(c.a)) throw std::invalid_argument("leader constant outside A");
            } else if constexpr (std::is_same_v<C, AffineTrackingAction>) {
                if (!in_a(c.base)) throw std::invalid_argument("leader base action outside A");
                if (!(c.gain > 0)) throw std::invalid_argument("tracking gain must be positive");
            } else if constexpr (std::is_same_v<C, PunishmentAction>) {
                if (!in_a(c.a_hat) || !in_a(c.a_hat - c.penalty))
                    throw std::invalid_argument("punishment rule leaves A");
                if (!in_b(c.b_hat)) throw std::invalid_argument("recommended effort outside B");
            }
        },
        s.leader);
    std::visit(
        [&](const auto& c) {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, ConstantEffort>) {
                if (!in_b(c.b)) throw std::invalid_argument("follower constant outside B");
            } else if constexpr (std::is_same_v<C, ExponentialEffort>) {
                if (c.b_max > p.b_max) throw std::invalid_argument("effort cap exceeds b_max");
            } else if constexpr (std::is_same_v<C, SensitivityResponse>) {
                if (c.z_hi / c.c_F > p.b_max * (1 + 1e-15))
                    throw std::invalid_argument("sensitivity response exceeds b_max");
            }
        },
        s.follower);
}

void to_json(nlohmann::json& j, const StrategyDescriptor& s) {
    nlohmann::json leader = std::visit(
        [](const auto& c) -> nlohmann::json {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, ConstantAction>) {
                return {{"type", "constant"}, {"a", c.a}};
            } else if constexpr (std::is_same_v<C, AffineTrackingAction>) {
                return {{"type", "affine_tracking"}, {"gain", c.gain}, {"base", c.base},
                        {"x0", c.x0}, {"c_F", c.c_F}, {"T", c.T}};
            } else if constexpr (std::is_same_v<C, PunishmentAction>) {
                return {{"type", "punishment"}, {"a_hat", c.a_hat}, {"penalty", c.penalty},
                        {"b_hat", c.b_hat}};
            } else {
                return {{"type", "feedback_table"}, {"grid", c.grid_label}};
            }
        },
        s.leader);
    nlohmann::json follower = std::visit(
        [](const auto& c) -> nlohmann::json {
            using C = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<C, ConstantEffort>) {
                return {{"type", "constant"}, {"b", c.b}};
            } else if constexpr (std::is_same_v<C, ExponentialEffort>) {
                return {{"type", "exponential"}, {"gain", c.gain}, {"c_F", c.c_F},
                        {"b_max", c.b_max}, {"T", c.T}};
            } else {
                return {{"type", "sensitivity"}, {"z_hi", c.z_hi}, {"c_F", c.c_F}};
            }
        },
        s.follower);
    j = nlohmann::json{{"leader", leader}, {"follower", follower}};
}

void from_json(const nlohmann::json& j, StrategyDescriptor& s) {
    const auto& l = j.at("leader");
    const auto lt = l.at("type").get<std::string>();
    if (lt == "constant") {
        s.leader = ConstantAction{l.at("a").get<double>()};
    } else if (lt == "affine_tracking") {
        s.leader = AffineTrackingAction{l.at("gain").get<double>(), l.at("base").get<double>(),
                                        l.at("x0").get<double>(), l.at("c_F").get<double>(),
                                        l.at("T").get<double>()};
    } else if (lt == "punishment") {
        s.leader = PunishmentAction{l.at("a_hat").get<double>(), l.at("penalty").get<double>(),
                                    l.at("b_hat").get<double>()};
    } else if (lt == "feedback_table") {
        s.leader = FeedbackTableAction{l.at("grid").get<std::string>()};
    } else {
        throw std::invalid_argument("unknown leader control type: " + lt);
    }
    const auto& f = j.at("follower");
    const auto ft = f.at("type").get<std::string>();
    if (ft == "constant") {
        s.follower = ConstantEffort{f.at("b").get<double>()};
    } else if (ft == "exponential") {
        s.follower = ExponentialEffort{f.at("gain").get<double>(), f.at("c_F").get<double>(),
                                       f.at("b_max").get<double>(), f.at("T").get<double>()};
    } else if (ft == "sensitivity") {
        s.follower = SensitivityResponse{f.at("z_hi").get<double>(), f.at("c_F").get<double>()};
    } else {
        throw std::invalid_argument("unknown follower control type: " + ft);
    }
}

std::string format_number(double value) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", value);
    return buf;
}

std::string csv_row(const EquilibriumReport& r) {
    std::string row(to_string(r.kind));
    row += ',' + format_number(r.x0);
    row += ',' + format_number(r.leader_value);
    row += ',' + format_number(r.follower_value);
    return row;
}

FeedbackPolicy::FeedbackPolicy(ControlFn control, BoundFn lower, BoundFn upper, double cell_width)
    : control_(std::move(control)),
      lower_(std::move(lower)),
      upper_(std::move(upper)),
      cell_width_(cell_width) {
    if (!control_ || !lower_ || !upper_) throw std::invalid_argument("FeedbackPolicy needs all callables");
}

bool FeedbackPolicy::contains(double t, double x, double y) const {
    const double eps = 1e-12 * (1.0 + std::abs(y));
    return y >= lower_(t, x) - eps && y <= upper_(t, x) + eps;
}

PolicyControl FeedbackPolicy::control_at(double t, double x, double y) const {
    if (!contains(t, x, y)) {
        throw PolicyDomainError("policy query outside reachable band: t=" + format_number(t) +
                                " x=" + format_number(x) + " y=" + format_number(y));
    }
    return control_(t, x, y);
}

}  // namespace stackelberg
