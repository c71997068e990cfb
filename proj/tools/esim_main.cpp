// esim: event-driven simulation and analysis of dynamic energy sharing
// between two battery-backed generators.
//
// Exit codes: 0 success, 1 validation/property failure, 2 I/O or usage error.

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "esim/analysis.hpp"
#include "esim/config.hpp"
#include "esim/errors.hpp"
#include "esim/model.hpp"
#include "esim/simulator.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitFailure = 1;
constexpr int kExitUsage = 2;

struct RunParams {
    std::string config_path;
    std::optional<double> horizon;
    std::optional<double> warmup;
    std::optional<std::uint64_t> seed;
    std::optional<double> grid_step;
    std::optional<double> c1;
    std::optional<double> c2;
};

struct Resolved {
    esim::ExperimentConfig cfg;
    double horizon = 0.0;
    double warmup = 0.0;
    std::uint64_t seed = 1;
    double grid_step = 0.25;
};

Resolved resolve(const RunParams& p) {
    Resolved r;
    r.cfg = esim::load_config_or_preset(p.config_path);
    if (p.c1) r.cfg.sharing.c1 = *p.c1;
    if (p.c2) r.cfg.sharing.c2 = *p.c2;
    if (p.horizon)
        r.horizon = *p.horizon;
    else if (r.cfg.horizon)
        r.horizon = *r.cfg.horizon;
    else if (const auto* trace = r.cfg.model.trace())
        r.horizon = trace->sample_period * static_cast<double>(trace->series.size());
    else
        r.horizon = 1e6;
    r.warmup = p.warmup ? *p.warmup : (r.cfg.warmup ? *r.cfg.warmup : 0.01 * r.horizon);
    r.seed = p.seed ? *p.seed : (r.cfg.seed ? *r.cfg.seed : 1);
    r.grid_step = p.grid_step ? *p.grid_step : (r.cfg.grid_step ? *r.cfg.grid_step : 0.25);
    if (!(r.horizon > r.warmup) || r.warmup < 0.0)
        throw esim::ConfigError("need horizon > warmup >= 0");
    return r;
}

std::string provenance(const Resolved& r) {
    esim::ExperimentConfig cfg = r.cfg;
    cfg.horizon = r.horizon;
    cfg.warmup = r.warmup;
    cfg.seed = r.seed;
    cfg.grid_step = r.grid_step;
    return esim::config_to_json(cfg);
}

void write_file(const std::string& path, const std::string& text) {
    std::ofstream out(path);
    if (!out) throw esim::ConfigError("cannot write " + path);
    out << text;
}

int cmd_validate(const std::string& config_path) {
    const auto cfg = esim::load_config_or_preset(config_path);
    const auto report = esim::validate_model(cfg.model);
    for (const auto& v : report.violations)
        std::cout << "VIOLATION: " << v.code << ": " << v.detail << "\n";
    for (const auto& n : report.notes) std::cout << "NOTE: " << n << "\n";
    const double m1 = esim::c_max(cfg.model, 1);
    const double m2 = esim::c_max(cfg.model, 2);
    if (report.ok()) {
        std::printf("OK: model valid; c1_max=%g c2_max=%g\n", m1, m2);
        if (cfg.sharing.c1 > m1 || cfg.sharing.c2 > m2 || cfg.sharing.c1 < 0.0 ||
            cfg.sharing.c2 < 0.0) {
            std::printf("VIOLATION: sharing config (%g, %g) outside [0,c1_max]x[0,c2_max]\n",
                        cfg.sharing.c1, cfg.sharing.c2);
            return kExitFailure;
        }
        return kExitOk;
    }
    return kExitFailure;
}

int cmd_simulate(const RunParams& params, const std::string& out_path,
                 const std::string& trajectory_path, bool standalone) {
    const Resolved r = resolve(params);
    esim::SimOptions opts;

    std::ofstream traj;
    if (!trajectory_path.empty()) {
        traj.open(trajectory_path);
        if (!traj) throw esim::ConfigError("cannot write " + trajectory_path);
        traj << "t,bg,b1,b2,lost1,lost2,over1,over2\n";
        traj.precision(17);
        opts.on_event = [&traj](const esim::HybridState& s, const esim::Accumulators& a) {
            traj << s.t << ',' << s.bg << ',' << s.b1 << ',' << s.b2 << ',' << a.lost1 << ','
                 << a.lost2 << ',' << a.over1 << ',' << a.over2 << '\n';
        };
    }

    std::optional<esim::HybridState> initial;
    if (r.cfg.initial)
        initial = esim::HybridState{0.0, r.cfg.initial->bg, r.cfg.initial->b1, r.cfg.initial->b2};
    const auto res =
        esim::simulate(r.cfg.model, r.cfg.sharing, r.horizon, r.warmup, r.seed, initial, opts);

    std::string report;
    char line[256];
    std::snprintf(line, sizeof line, "llr1=%.10g llr2=%.10g se1=%.3g se2=%.3g\n", res.llr1,
                  res.llr2, res.se1, res.se2);
    report += line;
    std::snprintf(line, sizeof line,
                  "lost=(%.10g, %.10g) over=(%.10g, %.10g) xfer=(%.10g, %.10g)\n", res.acc.lost1,
                  res.acc.lost2, res.acc.over1, res.acc.over2, res.acc.xfer_1to2,
                  res.acc.xfer_2to1);
    report += line;
    if (standalone) {
        const auto sa1 = esim::simulate_standalone(r.cfg.model, 1, r.horizon, r.warmup, r.seed);
        const auto sa2 = esim::simulate_standalone(r.cfg.model, 2, r.horizon, r.warmup, r.seed);
        std::snprintf(line, sizeof line, "llr_sa1=%.10g llr_sa2=%.10g\n", sa1.llr, sa2.llr);
        report += line;
    }
    std::cout << report;

    if (!out_path.empty()) {
        std::string text = "# config: ";
        std::string prov = provenance(r);
        for (char& ch : prov)
            if (ch == '\n') ch = ' ';
        text += prov + "\n" + report;
        write_file(out_path, text);
    }
    return kExitOk;
}

int cmd_sweep(const RunParams& params, const std::string& out_path, int jobs) {
    const Resolved r = resolve(params);
    const auto sweep =
        esim::pareto_sweep(r.cfg.model, r.grid_step, r.horizon, r.warmup, r.seed, jobs);

    std::string text = "# config: ";
    {
        std::string prov = provenance(r);
        for (char& ch : prov)
            if (ch == '\n') ch = ' ';
        text += prov + "\n";
    }
    char line[320];
    std::snprintf(line, sizeof line, "# llr_sa1=%.10g llr_sa2=%.10g\n", sweep.llr_sa1,
                  sweep.llr_sa2);
    text += line;
    text += "flatten_coord,c1,c2,llr1,llr2,benefit1,benefit2,se1,se2\n";
    for (const auto& p : sweep.points) {
        std::snprintf(line, sizeof line, "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.3g,%.3g\n",
                      p.flatten_coord, p.config.c1, p.config.c2, p.llr1, p.llr2, p.benefit1,
                      p.benefit2, p.se1, p.se2);
        text += line;
    }
    if (out_path.empty())
        std::cout << text;
    else
        write_file(out_path, text);
    return kExitOk;
}

int cmd_egalitarian(const RunParams& params, int jobs) {
    const Resolved r = resolve(params);
    const auto sweep =
        esim::pareto_sweep(r.cfg.model, r.grid_step, r.horizon, r.warmup, r.seed, jobs);
    const auto chosen = esim::egalitarian_solution(sweep.points, sweep.llr_sa1, sweep.llr_sa2);
    {
        std::string prov = provenance(r);
        for (char& ch : prov)
            if (ch == '\n') ch = ' ';
        std::printf("# config: %s\n", prov.c_str());
    }
    std::printf("egalitarian config: (c1, c2) = (%.10g, %.10g)\n", chosen.config.c1,
                chosen.config.c2);
    std::printf("llr: (%.10g, %.10g), standalone: (%.10g, %.10g)\n", chosen.llr1, chosen.llr2,
                sweep.llr_sa1, sweep.llr_sa2);
    std::printf("benefit: (%.10g, %.10g), min benefit: %.10g\n", chosen.benefit1, chosen.benefit2,
                std::min(chosen.benefit1, chosen.benefit2));
    if (std::min(chosen.benefit1, chosen.benefit2) <= 0.0)
        std::printf("warning: no configuration benefits both agents (min benefit 0)\n");
    return kExitOk;
}

int cmd_couple(const RunParams& params, double epsilon, int coord, const std::string& out_path) {
    const Resolved r = resolve(params);
    if (coord != 1 && coord != 2) throw esim::ConfigError("--coord must be 1 or 2");
    const double cmax =
        coord == 1 ? esim::c_max(r.cfg.model, 1) : esim::c_max(r.cfg.model, 2);
    const double base = coord == 1 ? r.cfg.sharing.c1 : r.cfg.sharing.c2;
    double eps = epsilon;
    if (base + eps > cmax) {
        eps = cmax - base;
        std::printf("warning: epsilon clipped to %.10g (c%d_max = %.10g)\n", eps, coord, cmax);
    }
    esim::SharingConfig perturbed = r.cfg.sharing;
    (coord == 1 ? perturbed.c1 : perturbed.c2) += eps;

    esim::CoupledOptions copts;
    copts.record_rows = !out_path.empty();
    const auto rep = esim::coupled_simulate(r.cfg.model, r.cfg.sharing, perturbed, r.horizon,
                                            r.seed, copts);

    constexpr double kSlack = 1e-9;
    bool all_ok = true;
    auto check = [&](const char* name, double min_gap) {
        const bool ok = min_gap >= -kSlack;
        all_ok = all_ok && ok;
        std::printf("%-34s min slack % .3e  %s\n", name, min_gap, ok ? "PASS" : "FAIL");
    };
    check("battery ordering b1~ <= b1", rep.min_battery_gap1);
    check("battery ordering b2~ <= b2", rep.min_battery_gap2);
    check("lost-load ordering (giver)", rep.min_lost_gap_giver);
    check("overflow ordering O1~ <= O1", rep.min_over_gap1);
    check("overflow ordering O2~ <= O2", rep.min_over_gap2);
    check("total lost ordering", rep.min_total_lost_gap);
    if (rep.lipschitz_applicable) {
        check("lipschitz bound (giver)", rep.min_lipschitz_slack_giver);
        check("lipschitz bound (receiver)", rep.min_lipschitz_slack_receiver);
    }
    std::printf("llr (base):      (%.10g, %.10g)\n", rep.llr1_a, rep.llr2_a);
    std::printf("llr (perturbed): (%.10g, %.10g)\n", rep.llr1_b, rep.llr2_b);

    if (!out_path.empty()) {
        std::string text = "# config: ";
        {
            std::string prov = provenance(r);
            for (char& ch : prov)
                if (ch == '\n') ch = ' ';
            text += prov + "\n";
        }
        text += "t,b1,b2,b1_pert,b2_pert,lost1,lost2,over1,over2,lost1_pert,lost2_"
                "pert,over1_pert,over2_pert\n";
        char line[512];
        for (const auto& row : rep.rows) {
            std::snprintf(line, sizeof line,
                          "%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%.10g,%."
                          "10g,%.10g\n",
                          row.t, row.b1_a, row.b2_a, row.b1_b, row.b2_b, row.lost1_a, row.lost2_a,
                          row.over1_a, row.over2_a, row.lost1_b, row.lost2_b, row.over1_b,
                          row.over2_b);
            text += line;
        }
        write_file(out_path, text);
    }
    return all_ok ? kExitOk : kExitFailure;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"dynamic energy sharing simulator"};
    app.require_subcommand(1);

    RunParams params;
    std::string out_path, trajectory_path;
    bool standalone = false;
    int jobs = 1;
    double epsilon = 0.25;
    int coord = 1;

    auto add_common = [&](CLI::App* sub, bool with_grid = false) {
        sub->add_option("config", params.config_path, "config file or preset name")->required();
        sub->add_option("--horizon", params.horizon, "simulation horizon");
        sub->add_option("--warmup", params.warmup, "warm-up time excluded from averages");
        sub->add_option("--seed", params.seed, "random seed");
        if (with_grid) sub->add_option("--grid-step", params.grid_step, "frontier grid step");
    };

    auto* validate = app.add_subcommand("validate", "check model assumptions");
    validate->add_option("config", params.config_path, "config file or preset name")->required();

    auto* simulate = app.add_subcommand("simulate", "run one configuration");
    add_common(simulate);
    simulate->add_option("--c1", params.c1, "override the sharing rate of agent 1");
    simulate->add_option("--c2", params.c2, "override the sharing rate of agent 2");
    simulate->add_option("--out", out_path, "write the report to a file");
    simulate->add_option("--trajectory", trajectory_path, "write an event-level CSV log");
    simulate->add_flag("--standalone", standalone, "also report standalone llr per agent");

    auto* sweep = app.add_subcommand("sweep", "sweep the sharing frontier");
    add_common(sweep, true);
    sweep->add_option("--out", out_path, "write the frontier CSV to a file");
    sweep->add_option("--jobs", jobs, "concurrent sweep workers");

    auto* egal = app.add_subcommand("egalitarian", "frontier point with maximal min benefit");
    add_common(egal, true);
    egal->add_option("--jobs", jobs, "concurrent sweep workers");

    auto* couple = app.add_subcommand("couple", "pathwise comparison against a perturbed config");
    add_common(couple);
    couple->add_option("--c1", params.c1, "override the sharing rate of agent 1");
    couple->add_option("--c2", params.c2, "override the sharing rate of agent 2");
    couple->add_option("--epsilon", epsilon, "perturbation size");
    couple->add_option("--coord", coord, "perturbed coordinate (1 or 2)");
    couple->add_option("--out", out_path, "write per-event rows to a CSV file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (validate->parsed()) return cmd_validate(params.config_path);
        if (simulate->parsed()) return cmd_simulate(params, out_path, trajectory_path, standalone);
        if (sweep->parsed()) return cmd_sweep(params, out_path, jobs);
        if (egal->parsed()) return cmd_egalitarian(params, jobs);
        if (couple->parsed()) return cmd_couple(params, epsilon, coord, out_path);
    } catch (const esim::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const esim::SimulationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitFailure;
    }
    return kExitUsage;
}
