#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "stackelberg/model.hpp"

using namespace stackelberg;

namespace {

std::vector<std::string> violations_of(const GameParams& p) {
    try {
        validate(p);
    } catch (const ValidationError& e) {
        return e.violations();
    }
    return {};
}

bool mentions(const std::vector<std::string>& v, const std::string& what) {
    for (const auto& s : v)
        if (s.find(what) != std::string::npos) return true;
    return false;
}

}  // namespace

TEST_CASE("benchmark parameters validate") {
    const auto p = benchmark_params();
    CHECK(p.T == 1.0);
    CHECK(p.sigma == 1.0);
    CHECK(p.a_max == 10.0);
    CHECK(p.b_max == 3.0);
    CHECK(validate(p) == p);
}

TEST_CASE("each violated bound is named") {
    auto p = benchmark_params();
    p.a_max = 0.5;
    CHECK(mentions(violations_of(p), "a_max <= 1/c_L"));
    p = benchmark_params();
    p.sigma = 0.0;
    CHECK(mentions(violations_of(p), "sigma = 0"));
    p = benchmark_params();
    p.b_max = 1.0;
    CHECK(mentions(violations_of(p), "b_max <= 1/c_F"));
    p = benchmark_params();
    p.T = -1.0;
    p.c_F = 0.0;
    const auto v = violations_of(p);
    CHECK(mentions(v, "T <= 0"));
    CHECK(mentions(v, "c_F <= 0"));
    p = benchmark_params();
    p.x0 = NAN;
    CHECK(mentions(violations_of(p), "x0 is not finite"));
    p = benchmark_params();
    p.sigma = -1.0;
    CHECK(violations_of(p).empty());
}

TEST_CASE("random invalid parameters are always rejected") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> U(-3.0, 3.0);
    int rejected = 0;
    for (int i = 0; i < 2000; ++i) {
        GameParams p{U(rng), U(rng), U(rng), U(rng), U(rng), U(rng), U(rng)};
        const bool ok = p.T > 0 && p.sigma != 0 && p.c_F > 0 && p.c_L > 0 && p.a_max > 1 / p.c_L &&
                        p.b_max > 1 / p.c_F;
        if (ok) {
            CHECK_NOTHROW(validate(p));
        } else {
            CHECK_THROWS_AS(validate(p), ValidationError);
            ++rejected;
        }
    }
    CHECK(rejected > 1000);
}

TEST_CASE("GameParams JSON") {
    GameParams p{0.7, -1.3, 1.25, 0.8, 20.0, 3.5, -0.1};
    nlohmann::json j = p;
    CHECK(j.size() == 7);
    for (const char* k : {"T", "sigma", "c_F", "c_L", "a_max", "b_max", "x0"}) CHECK(j.contains(k));
    CHECK(j.get<GameParams>() == p);
    CHECK(nlohmann::json::parse(j.dump()).get<GameParams>() == p);

    auto missing = j;
    missing.erase("b_max");
    CHECK_THROWS_AS(missing.get<GameParams>(), std::invalid_argument);
    auto extra = j;
    extra["a_min"] = 1.0;
    CHECK_THROWS_AS(extra.get<GameParams>(), std::invalid_argument);
    auto text = j;
    text["T"] = "1";
    CHECK_THROWS_AS(text.get<GameParams>(), std::invalid_argument);
}

TEST_CASE("strategy descriptors round-trip bit-exactly") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> U(-5.0, 5.0);
    for (int i = 0; i < 200; ++i) {
        const std::vector<StrategyDescriptor> all{
            {ConstantAction{U(rng)}, ConstantEffort{U(rng)}},
            {AffineTrackingAction{U(rng), U(rng), U(rng), U(rng), U(rng)},
             ExponentialEffort{U(rng), U(rng), U(rng), U(rng)}},
            {PunishmentAction{U(rng), U(rng), U(rng)}, SensitivityResponse{U(rng), U(rng)}},
            {FeedbackTableAction{"nu=401;nt=2000"}, ConstantEffort{U(rng) * 1e-300}},
        };
        for (const auto& s : all) {
            const nlohmann::json j = s;
            CHECK(nlohmann::json::parse(j.dump()).get<StrategyDescriptor>() == s);
        }
    }
    nlohmann::json bad = StrategyDescriptor{ConstantAction{1.0}, ConstantEffort{1.0}};
    bad["leader"]["type"] = "magic";
    CHECK_THROWS_AS(bad.get<StrategyDescriptor>(), std::invalid_argument);
}

TEST_CASE("kinds") {
    for (const auto k : kAllKinds) CHECK(parse_kind(to_string(k)) == k);
    CHECK(parse_kind("first-best") == EquilibriumKind::FirstBest);
    CHECK(parse_kind("ACLM") == EquilibriumKind::ACLM);
    CHECK_THROWS_AS(parse_kind("nash"), std::invalid_argument);
}

TEST_CASE("admissibility of descriptor constants") {
    const auto p = benchmark_params();
    CHECK_NOTHROW(check_admissible({ConstantAction{10.0}, ConstantEffort{3.0}}, p));
    CHECK_THROWS_AS(check_admissible({ConstantAction{10.5}, ConstantEffort{1.0}}, p), std::invalid_argument);
    CHECK_THROWS_AS(check_admissible({ConstantAction{0.0}, ConstantEffort{-0.1}}, p), std::invalid_argument);
    CHECK_THROWS_AS(check_admissible({PunishmentAction{1.0, 12.0, 3.0}, ConstantEffort{3.0}}, p),
                    std::invalid_argument);
    CHECK_THROWS_AS(check_admissible({AffineTrackingAction{0.0, 1.0, 0.0, 1.0, 1.0}, ConstantEffort{1.0}}, p),
                    std::invalid_argument);
    CHECK_THROWS_AS(check_admissible({ConstantAction{0.0}, SensitivityResponse{4.0, 1.0}}, p),
                    std::invalid_argument);
}

TEST_CASE("follower response rules") {
    const ExponentialEffort e{std::log(3.0), 1.0, 3.0, 1.0};
    CHECK(e.at(1.0) == doctest::Approx(1.0));
    CHECK(e.at(0.0) == doctest::Approx(3.0));
    const ExponentialEffort capped{2.0, 1.0, 3.0, 1.0};
    CHECK(capped.at(0.0) == 3.0);
    const SensitivityResponse s{3.0, 1.25};
    CHECK(s.at(-1.0) == 0.0);
    CHECK(s.at(2.0) == doctest::Approx(1.6));
    CHECK(s.at(9.0) == doctest::Approx(2.4));
    const AffineTrackingAction a{0.5, 1.0, 2.0, 1.0, 1.0};
    CHECK(a.reference_drift(0.0) == 2.0);
    CHECK(a.reference_drift(1.0) == doctest::Approx(2.0 + 1.0 + std::exp(0.5) * (1 - std::exp(-0.5)) / 0.5));
}

TEST_CASE("csv formatting") {
    CHECK(format_number(2.0 / 3.0) == "0.666666667");
    CHECK(format_number(3.5) == "3.5");
    CHECK(format_number(-59.0) == "-59");
    EquilibriumReport r;
    r.kind = EquilibriumKind::ACLM;
    r.leader_value = 0.5 + 2.0 / std::log(3.0);
    r.follower_value = 1.0;
    CHECK(csv_row(r) == "ACLM,0,2.32047845,1");
}

TEST_CASE("feedback policy domain") {
    const FeedbackPolicy pol([](double, double, double) { return PolicyControl{1.0, 2.0, false}; },
                             [](double, double x) { return x - 1.0; }, [](double, double x) { return x + 1.0; },
                             0.1);
    CHECK(pol.contains(0.0, 0.0, 1.0));
    CHECK_FALSE(pol.contains(0.0, 0.0, 1.01));
    CHECK(pol.control_at(0.0, 0.0, 0.5).z == 2.0);
    CHECK_THROWS_AS(pol.control_at(0.0, 3.0, 0.5), PolicyDomainError);
    CHECK_THROWS_AS(FeedbackPolicy({}, {}, {}, 0.1), std::invalid_argument);
}
