#include "stackelberg/cli.hpp"

#include <algorithm>
#include <fstream>
#include <ostream>

#include "CLI11.hpp"
#include "stackelberg/closed_form.hpp"

namespace stackelberg::cli {

namespace {

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> keys, const std::string& where) {
    if (!j.is_object()) throw std::invalid_argument(where + " must be a JSON object");
    for (const auto& [key, _] : j.items()) {
        if (std::none_of(keys.begin(), keys.end(), [&](const char* k) { return key == k; }))
            throw std::invalid_argument("unknown key in " + where + ": " + key);
    }
}

std::ofstream open_out(const RunConfig& c, const std::string& name) {
    std::filesystem::create_directories(c.out_dir);
    std::ofstream f(c.out_dir / name, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + (c.out_dir / name).string());
    return f;
}

using Builder = EquilibriumReport (*)(const GameParams&);

struct AnalyticRow {
    EquilibriumKind kind;
    Builder build;
};

constexpr AnalyticRow kAnalytic[] = {{EquilibriumKind::FirstBest, closed_form::first_best},
                                     {EquilibriumKind::AOL, closed_form::aol},
                                     {EquilibriumKind::AF, closed_form::af},
                                     {EquilibriumKind::ACLM, closed_form::aclm_optimal},
                                     {EquilibriumKind::ACL, closed_form::acl}};

std::optional<EquilibriumReport> try_build(Builder build, const GameParams& p) {
    try {
        return build(p);
    } catch (const closed_form::NotCertified&) {
        return std::nullopt;
    }
}

std::string value_row(EquilibriumKind kind, double x0, const std::optional<EquilibriumReport>& r) {
    std::string row(to_string(kind));
    row += ',' + format_number(x0);
    if (r) {
        row += ',' + format_number(r->leader_value) + ',' + format_number(r->follower_value) + ",1";
    } else {
        row += ",,,0";
    }
    return row;
}

void warn_coarse(const RunConfig& c, std::ostream& log) {
    if (c.grid.n_nodes < 51 || c.grid.n_steps < 100) {
        log << "warning: coarse grid (" << c.grid.label() << "); values are far from converged\n";
    }
}

}  // namespace

void from_json(const nlohmann::json& j, RunConfig& c) {
    reject_unknown(j, {"params", "grid", "sim"}, "config");
    if (!j.contains("params")) throw std::invalid_argument("config: missing \"params\"");
    c.params = j.at("params").get<GameParams>();
    if (j.contains("grid")) {
        const auto& g = j.at("grid");
        reject_unknown(g, {"n_steps", "n_nodes", "window"}, "grid");
        if (g.contains("n_steps")) c.grid.n_steps = g.at("n_steps").get<int>();
        if (g.contains("n_nodes")) c.grid.n_nodes = g.at("n_nodes").get<int>();
        if (g.contains("window")) c.grid.window = g.at("window").get<double>();
    }
    if (j.contains("sim")) {
        const auto& s = j.at("sim");
        reject_unknown(s, {"n_paths", "n_steps", "seed", "antithetic"}, "sim");
        if (s.contains("n_paths")) c.sim.n_paths = s.at("n_paths").get<long>();
        if (s.contains("n_steps")) c.sim.n_steps = s.at("n_steps").get<int>();
        if (s.contains("seed")) c.sim.seed = s.at("seed").get<std::uint64_t>();
        if (s.contains("antithetic")) c.sim.antithetic = s.at("antithetic").get<bool>();
    }
}

RunConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot read config " + path.string());
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::parse_error& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    RunConfig c;
    try {
        c = j.get<RunConfig>();
    } catch (const nlohmann::json::exception& e) {
        throw std::invalid_argument("config " + path.string() + ": " + e.what());
    }
    return c;
}

void cmd_closed_forms(const RunConfig& c, std::ostream& log) {
    const auto p = validate(c.params);
    auto f = open_out(c, "values.csv");
    f << "# schema=1\nkind,x0,leader_value,follower_value,certified\n";
    for (const auto& a : kAnalytic) {
        const auto row = value_row(a.kind, p.x0, try_build(a.build, p));
        f << row << '\n';
        log << row << '\n';
    }
}

void cmd_boundaries(const RunConfig& c, std::ostream& log) {
    const auto nb = target::compute_boundaries_numeric(c.params, c.grid);
    auto f = open_out(c, "boundaries.csv");
    target::write_boundaries_csv(nb, f, c.stride);
    log << "boundaries " << c.grid.label() << " max_error=" << format_number(nb.max_error) << '\n';
}

void cmd_leader(const RunConfig& c, std::ostream& log) {
    const auto p = validate(c.params);
    warn_coarse(c, log);
    const auto sol = target::solve_leader(p, c.grid);
    {
        auto f = open_out(c, "surface.csv");
        target::write_surface_csv(sol, f, c.stride);
    }
    {
        const auto nb = target::compute_boundaries_numeric(p, c.grid);
        auto f = open_out(c, "boundaries.csv");
        target::write_boundaries_csv(nb, f, c.stride);
    }
    auto f = open_out(c, "summary.csv");
    target::write_summary_csv(sol, f);
    log << "CL," << format_number(sol.x0) << ',' << format_number(sol.V_CL) << ',' << format_number(sol.V_F) << ','
        << format_number(sol.y0_star) << ',' << c.grid.label() << '\n';
    if (sol.metadata.at("non_concave_region") != 0.0) log << "warning: z-box saturation above the limit\n";
}

void cmd_simulate(const RunConfig& c, const SimulateOptions& o, std::ostream& log) {
    const auto p = validate(c.params);
    std::vector<simulate::SimResult> results;
    if (o.kind == "all") {
        for (const auto& row : simulate::compare_all(p, c.sim, c.grid))
            if (row.mc) results.push_back(*row.mc);
    } else {
        const auto kind = parse_kind(o.kind);
        if (kind == EquilibriumKind::CL) {
            target::LeaderSolution sol;
            if (o.solve) {
                sol = target::solve_leader(p, c.grid);
            } else {
                std::ifstream in(c.out_dir / "surface.csv");
                if (!in) {
                    throw std::invalid_argument("no leader artifact in " + c.out_dir.string() +
                                                "; run 'leader' first or pass --solve");
                }
                sol = target::read_surface_csv(p, in, c.grid);
            }
            const double y0 = o.y0 ? *o.y0 : sol.y0_star;
            results.push_back(simulate::simulate(p, target::extract_policy(sol), y0, c.sim));
        } else {
            EquilibriumReport rep;
            if (kind == EquilibriumKind::ACLM && o.gain) {
                rep = closed_form::aclm(p, *o.gain);
            } else {
                const auto it = std::find_if(std::begin(kAnalytic), std::end(kAnalytic),
                                             [&](const AnalyticRow& a) { return a.kind == kind; });
                rep = it->build(p);
            }
            results.push_back(simulate::simulate(p, rep.strategy, c.sim, kind));
        }
    }
    auto f = open_out(c, "sim.csv");
    simulate::write_sim_csv(f, results);
    simulate::write_sim_csv(log, results);
}

void cmd_sweep(const RunConfig& c, const SweepOptions& o, std::ostream& log) {
    if (o.n < 2) throw std::invalid_argument("sweep: n must be at least 2");
    auto p = validate(c.params);
    std::vector<double> xs(o.n);
    for (int i = 0; i < o.n; ++i) xs[i] = o.x0_min + (o.x0_max - o.x0_min) * i / (o.n - 1);

    std::optional<target::LeaderSolution> once;
    if (!o.no_shift) once = target::solve_leader(p, c.grid);

    auto f = open_out(c, "sweep.csv");
    f << "# schema=1\n# axis=x0;cl=" << (o.no_shift ? "per-x0" : "shifted") << ';' << c.grid.label() << '\n';
    f << "kind,x0,leader_value,follower_value,certified\n";
    for (const double x0 : xs) {
        p.x0 = x0;
        for (const auto& a : kAnalytic) f << value_row(a.kind, x0, try_build(a.build, p)) << '\n';
        EquilibriumReport r;
        if (once) {
            r = target::cl_report(*once, x0);
        } else {
            const auto sol = target::solve_leader(p, c.grid);
            r = target::cl_report(sol, x0);
        }
        f << value_row(EquilibriumKind::CL, x0, r) << '\n';
    }
    log << "sweep " << o.n << " points on [" << format_number(o.x0_min) << ", " << format_number(o.x0_max)
        << "]\n";
}

void cmd_compare(const RunConfig& c, std::ostream& log) {
    const auto rows = simulate::compare_all(c.params, c.sim, c.grid);
    auto f = open_out(c, "compare.csv");
    const std::string header =
        "# schema=1\nkind,x0,leader_value,follower_value,certified,JL_mean,JL_se,JF_mean,JF_se,target_gap_mean\n";
    f << header;
    log << header;
    for (const auto& r : rows) {
        std::string line =
            value_row(r.report.kind, r.report.x0, r.certified ? std::optional(r.report) : std::nullopt);
        if (r.mc) {
            line += ',' + format_number(r.mc->JL_mean) + ',' + format_number(r.mc->JL_se) + ',' +
                    format_number(r.mc->JF_mean) + ',' + format_number(r.mc->JF_se) + ',' +
                    (r.mc->gap ? format_number(r.mc->gap->mean) : std::string());
        } else {
            line += ",,,,,";
        }
        f << line << '\n';
        log << line << '\n';
    }
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Stackelberg leader/follower example: closed forms, closed-loop PDE, Monte Carlo"};
    app.name("stackelberg");
    app.require_subcommand(1);
    app.fallthrough();

    std::string config_path, out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> nu, nt, steps, stride;
    std::optional<long> paths;
    app.add_option("--config", config_path, "JSON config file")->check(CLI::ExistingFile);
    app.add_option("--out", out_dir, "output directory (default: out)");
    app.add_option("--seed", seed, "Monte Carlo seed");
    app.add_option("--nu", nu, "spatial nodes")->check(CLI::PositiveNumber);
    app.add_option("--nt", nt, "time steps")->check(CLI::PositiveNumber);
    app.add_option("--paths", paths, "Monte Carlo paths")->check(CLI::PositiveNumber);
    app.add_option("--steps", steps, "Monte Carlo steps")->check(CLI::PositiveNumber);
    app.add_option("--stride", stride, "layer stride for surface/boundary CSVs")->check(CLI::PositiveNumber);

    auto* closed = app.add_subcommand("closed-forms", "analytic equilibria -> values.csv");
    auto* bounds = app.add_subcommand("boundaries", "numeric reachability boundaries -> boundaries.csv");
    auto* leader = app.add_subcommand("leader", "closed-loop leader PDE -> surface/boundaries/summary.csv");

    SimulateOptions so;
    auto* sim = app.add_subcommand("simulate", "Monte Carlo -> sim.csv");
    sim->add_option("--kind", so.kind, "fb|aol|af|aclm|acl|cl|all")->capture_default_str();
    sim->add_option("--k", so.gain, "ACLM gain (default: maximal certified gain)");
    sim->add_option("--y0", so.y0, "CL initial follower value (default: y0*)");
    sim->add_flag("--solve", so.solve, "solve the leader PDE instead of reading surface.csv");

    SweepOptions sw;
    auto* sweep = app.add_subcommand("sweep", "values over x0 -> sweep.csv");
    sweep->add_option("--x0-min", sw.x0_min)->capture_default_str();
    sweep->add_option("--x0-max", sw.x0_max)->capture_default_str();
    sweep->add_option("--n", sw.n, "number of points (>= 2)")->capture_default_str()->check(CLI::Range(2, 100000));
    sweep->add_flag("--no-shift", sw.no_shift, "solve CL at every x0 instead of shifting one solve");

    auto* compare = app.add_subcommand("compare", "analytic/PDE values beside Monte Carlo -> compare.csv");

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::ParseError& e) {
        return app.exit(e, out, err);
    }

    try {
        RunConfig c = config_path.empty() ? RunConfig{} : load_config(config_path);
        if (!out_dir.empty()) c.out_dir = out_dir;
        if (seed) c.sim.seed = *seed;
        if (nu) c.grid.n_nodes = *nu;
        if (nt) c.grid.n_steps = *nt;
        if (paths) c.sim.n_paths = *paths;
        if (steps) c.sim.n_steps = *steps;
        if (stride) c.stride = *stride;
        validate(c.params);
        c.grid.check();
        c.sim.check();

        if (*closed) cmd_closed_forms(c, out);
        if (*bounds) cmd_boundaries(c, out);
        if (*leader) cmd_leader(c, out);
        if (*sim) cmd_simulate(c, so, out);
        if (*sweep) cmd_sweep(c, sw, out);
        if (*compare) cmd_compare(c, out);
    } catch (const std::invalid_argument& e) {
        err << "error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}

}  // namespace stackelberg::cli
