#include "sagin/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>

#include "sagin/ao_driver.hpp"
#include "sagin/report_io.hpp"
#include "sagin/scenario.hpp"

namespace sagin {

namespace {

std::vector<double> parse_doubles(const std::string& text) {
    std::vector<double> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(std::stod(item));
    return out;
}

std::vector<std::string> parse_names(const std::string& text) {
    std::vector<std::string> out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) out.push_back(item);
    return out;
}

struct RunStats {
    double phi = 0, total_energy = 0;
    double mean_l = 0, mean_u = 0, mean_s = 0;
    int iters = 0;
};

RunStats run_stats(const Scenario& s_in, const RunReport& report) {
    const Scenario s = scheme_scenario(s_in, report.spec);
    const DerivedQuantities q = evaluate(s, report.final_decision);
    RunStats st;
    st.phi = q.objective;
    const double cells = static_cast<double>(s.num_mus) * s.num_slots;
    for (int m = 0; m < s.num_mus; ++m)
        for (int n = 0; n < s.num_slots; ++n) {
            st.total_energy += q.e_sum[m][n];
            st.mean_l += report.final_decision.offload[m][n].local / cells;
            st.mean_u += report.final_decision.offload[m][n].uav / cells;
            st.mean_s += report.final_decision.offload[m][n].leo / cells;
        }
    st.iters = static_cast<int>(report.trace.size()) - 1;
    return st;
}

int cmd_generate(int mus, int uavs, int slots, double area, std::uint64_t seed,
                 const std::string& out) {
    try {
        const Scenario s = generate_scenario(mus, uavs, slots, area, seed);
        const SolverSettings defaults;
        save_scenario(s, out, &defaults);
    } catch (const std::invalid_argument& e) {
        std::cerr << "generate: " << e.what() << "\n";
        return 3;
    } catch (const std::exception& e) {
        std::cerr << "generate: " << e.what() << "\n";
        return 3;
    }
    return 0;
}

int cmd_validate(const std::string& path) {
    Scenario s;
    try {
        s = load_scenario(path);
    } catch (const std::exception& e) {
        std::cerr << "validate: " << e.what() << "\n";
        return 3;
    }
    const std::vector<Violation> v = validate_scenario(s);
    for (const Violation& violation : v)
        std::cout << violation.field << ": " << violation.message << "\n";
    if (v.empty()) {
        std::cout << "ok\n";
        return 0;
    }
    return 1;
}

int cmd_solve(const std::string& scenario_path, const std::string& scheme_name_arg,
              const std::string& out_dir, double eps, int max_iters, std::int64_t seed,
              const std::string& fixed_split) {
    Scenario s;
    SolverSettings settings;
    try {
        s = load_scenario(scenario_path, &settings);
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return 3;
    }
    if (eps > 0) settings.ao_tolerance = eps;
    if (max_iters >= 0) settings.ao_max_iters = max_iters;
    if (seed >= 0) settings.rng_seed = static_cast<std::uint64_t>(seed);

    SchemeSpec spec;
    try {
        spec.scheme = scheme_from_name(scheme_name_arg);
    } catch (const std::exception& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return 2;
    }
    if (!fixed_split.empty()) {
        const std::vector<double> parts = parse_doubles(fixed_split);
        if (parts.size() != 3) {
            std::cerr << "solve: --fixed-split needs three comma-separated values\n";
            return 2;
        }
        spec.fixed_split = {parts[0], parts[1], parts[2]};
    }

    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);

    RunReport report;
    try {
        report = run_ao(s, spec, settings);
    } catch (const NoFeasibleStart& e) {
        std::cerr << "solve: " << e.what() << "\n";
        return 4;
    }
    save_report(report, out_dir + "/run.json");
    write_trace_csv(report, out_dir + "/trace.csv");
    write_trajectories_csv(report, out_dir + "/trajectories.csv");
    write_allocation_csv(s, report, out_dir + "/allocation.csv");
    write_energy_csv(s, report, out_dir + "/energy.csv");
    return report.termination == Termination::InfeasibleSubproblem ? 4 : 0;
}

int cmd_sweep(const std::string& axis, const std::string& values, const std::string& seeds,
              const std::string& schemes, const std::string& out, int mus, int uavs, int slots,
              double area) {
    const std::vector<double> value_list = parse_doubles(values);
    const std::vector<double> seed_list = parse_doubles(seeds);
    const std::vector<std::string> scheme_list = parse_names(schemes);
    if (value_list.empty() || seed_list.empty() || scheme_list.empty()) {
        std::cerr << "sweep: values, seeds, and schemes must be non-empty\n";
        return 2;
    }
    if (axis != "num_mus" && axis != "task_bits" && axis != "uav_bandwidth") {
        std::cerr << "sweep: axis must be num_mus | task_bits | uav_bandwidth\n";
        return 2;
    }
    for (double v : value_list)
        if (!(v > 0)) {
            std::cerr << "sweep: values must be positive\n";
            return 2;
        }

    std::FILE* f = std::fopen(out.c_str(), "w");
    if (!f) {
        std::cerr << "sweep: cannot open " << out << "\n";
        return 3;
    }
    std::fprintf(f,
                 "axis_value,seed,scheme,phi,total_energy_j,mean_omega_l,mean_omega_u,"
                 "mean_omega_s,iters,wall_ms,status\n");
    int successes = 0;
    for (double value : value_list)
        for (double seed_d : seed_list)
            for (const std::string& scheme : scheme_list) {
                const auto seed = static_cast<std::uint64_t>(seed_d);
                std::string status = "ok";
                RunStats st;
                double wall_ms = 0.0;
                try {
                    int row_mus = mus;
                    if (axis == "num_mus") row_mus = static_cast<int>(value);
                    Scenario s = generate_scenario(row_mus, uavs, slots, area, seed);
                    if (axis == "uav_bandwidth") s.uav_bandwidth = value;
                    if (axis == "task_bits") {
                        // Shift the draw window [5.5, 6.5] Mbit to be centred
                        // on the requested mean.
                        for (auto& row : s.task_bits)
                            for (double& d : row) d = std::max(1.0, d - 6.0e6 + value);
                    }
                    SolverSettings settings;
                    settings.rng_seed = seed;
                    SchemeSpec spec;
                    spec.scheme = scheme_from_name(scheme);
                    const auto t0 = std::chrono::steady_clock::now();
                    const RunReport report = run_ao(s, spec, settings);
                    wall_ms = std::chrono::duration<double, std::milli>(
                                  std::chrono::steady_clock::now() - t0)
                                  .count();
                    st = run_stats(s, report);
                    if (report.termination == Termination::InfeasibleSubproblem)
                        status = "infeasible_subproblem";
                    ++successes;
                } catch (const std::exception& e) {
                    status = std::string("error:") + e.what();
                    std::replace(status.begin(), status.end(), ',', ';');
                }
                std::fprintf(f, "%.9g,%llu,%s,%.9g,%.9g,%.9g,%.9g,%.9g,%d,%.9g,%s\n", value,
                             static_cast<unsigned long long>(seed), scheme.c_str(), st.phi,
                             st.total_energy, st.mean_l, st.mean_u, st.mean_s, st.iters,
                             wall_ms, status.c_str());
            }
    std::fclose(f);
    return successes > 0 ? 0 : 4;
}

}  // namespace

int cli_run(const std::vector<std::string>& args) {
    CLI::App app{"Energy-efficiency solver for a satellite/UAV-assisted MEC system"};
    app.require_subcommand(1);

    auto* gen = app.add_subcommand("generate", "Generate a scenario file");
    int mus = 8, uavs = 2, slots = 40;
    double area = 1000.0;
    std::uint64_t seed = 0;
    std::string out;
    gen->add_option("--mus", mus, "Number of MUs");
    gen->add_option("--uavs", uavs, "Number of UAVs");
    gen->add_option("--slots", slots, "Number of time slots");
    gen->add_option("--area", area, "Square side, m");
    gen->add_option("--seed", seed, "RNG seed");
    gen->add_option("--out", out, "Output scenario path")->required();

    auto* val = app.add_subcommand("validate", "Check a scenario file");
    std::string val_path;
    val->add_option("--scenario", val_path, "Scenario path")->required();

    auto* solve = app.add_subcommand("solve", "Run one scheme on a scenario");
    std::string solve_scenario, solve_scheme = "proposed", solve_out, fixed_split;
    double eps = -1;
    int max_iters = -1;
    std::int64_t solve_seed = -1;
    solve->add_option("--scenario", solve_scenario, "Scenario path")->required();
    solve->add_option("--scheme", solve_scheme,
                      "proposed|single_uav|fixed_trajectory|fixed_allocation|ls_offloading");
    solve->add_option("--out-dir", solve_out, "Output directory")->required();
    solve->add_option("--eps", eps, "AO convergence tolerance");
    solve->add_option("--max-iters", max_iters, "AO iteration cap");
    solve->add_option("--seed", solve_seed, "Settings RNG seed");
    solve->add_option("--fixed-split", fixed_split, "omega_l,omega_u,omega_s for fixed_allocation");

    auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
    std::string axis, values, seeds, schemes, sweep_out;
    int sw_mus = 8, sw_uavs = 2, sw_slots = 40;
    double sw_area = 1000.0;
    sweep->add_option("--axis", axis, "num_mus | task_bits | uav_bandwidth")->required();
    sweep->add_option("--values", values, "Comma-separated axis values")->required();
    sweep->add_option("--seeds", seeds, "Comma-separated seeds")->required();
    sweep->add_option("--schemes", schemes, "Comma-separated scheme names")->required();
    sweep->add_option("--out", sweep_out, "Output sweep.csv path")->required();
    sweep->add_option("--mus", sw_mus, "Base MU count");
    sweep->add_option("--uavs", sw_uavs, "Base UAV count");
    sweep->add_option("--slots", sw_slots, "Base slot count");
    sweep->add_option("--area", sw_area, "Base square side, m");

    std::vector<std::string> cli_args(args.rbegin(), args.rend());  // CLI11 wants reversed
    try {
        app.parse(cli_args);
    } catch (const CLI::CallForHelp&) {
        std::cout << app.help() << "\n";
        return 0;
    } catch (const CLI::ParseError& e) {
        std::cerr << e.what() << "\n" << app.help() << "\n";
        return 2;
    }

    if (gen->parsed()) return cmd_generate(mus, uavs, slots, area, seed, out);
    if (val->parsed()) return cmd_validate(val_path);
    if (solve->parsed())
        return cmd_solve(solve_scenario, solve_scheme, solve_out, eps, max_iters, solve_seed,
                         fixed_split);
    if (sweep->parsed())
        return cmd_sweep(axis, values, seeds, schemes, sweep_out, sw_mus, sw_uavs, sw_slots,
                         sw_area);
    return 2;
}

}  // namespace sagin
