#include "gossip.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace {

int run_named(const std::string& name, const std::string& config_path, std::optional<std::uint64_t> seed,
              const std::string& out_dir) {
    auto cfg = gossip::load_config(config_path);
    if (seed) cfg.base_seed = *seed;
    const auto summary = gossip::run_experiment(name, cfg);
    const auto paths = gossip::write_summary(summary, out_dir);
    std::cout << name << ": " << summary.rows.size() << " rows, config " << summary.config_hash << ", seed "
              << summary.seed << "\n";
    for (const auto& p : paths) std::cout << "  wrote " << p.string() << "\n";
    int failed = 0;
    for (const auto& [key, ok] : summary.invariants)
        if (!ok) {
            std::cerr << "invariant violated: " << key << "\n";
            ++failed;
        }
    return failed ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Gossip process simulator and limit-curve solver"};
    app.require_subcommand(1);
    app.footer(gossip::csv_schema_help() +
               "\nsolve-h writes t,h. simulate-balloon prints replicate,eps,sigma,tau,T,m_hat.\n"
               "GOSSIP_THREADS caps the number of worker threads.");

    std::string config_path, out_dir = ".";
    std::optional<std::uint64_t> seed;
    for (const auto& name : gossip::experiment_names()) {
        auto* sub = app.add_subcommand(name, "Run the " + name + " experiment");
        sub->add_option("--config", config_path, "key = value configuration file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed", seed, "Override base_seed");
        sub->add_option("--out", out_dir, "Output directory");
    }

    double t0 = -12.0, t1 = 15.0, step = 1e-3;
    std::string h_out = "h.csv";
    auto* solve = app.add_subcommand("solve-h", "Solve for the limiting coverage profile h");
    solve->add_option("--t0", t0, "Start time (<= -8)");
    solve->add_option("--t1", t1, "End time");
    solve->add_option("--step", step, "RK4 step (<= 1e-3)");
    solve->add_option("--out", h_out, "Output CSV");

    double n = 128.0, alpha = 1.0;
    int grid = 512, replicates = 100;
    std::vector<double> eps{0.05, 0.1, 0.3};
    std::uint64_t sim_seed = 1;
    auto* sim = app.add_subcommand("simulate-balloon", "Coupled balloon runs to full cover");
    sim->add_option("--n", n, "Torus side N");
    sim->add_option("--alpha", alpha, "Long-range exponent, lambda = N^-alpha");
    sim->add_option("--grid", grid, "Coverage grid side G");
    sim->add_option("--eps", eps, "Coverage levels")->delimiter(',');
    sim->add_option("--replicates", replicates, "Replicate count");
    sim->add_option("--seed", sim_seed, "Base seed");

    CLI11_PARSE(app, argc, argv);

    try {
        for (const auto& name : gossip::experiment_names())
            if (app.got_subcommand(name)) return run_named(name, config_path, seed, out_dir);

        if (app.got_subcommand(solve)) {
            const auto h = gossip::solve_h(t0, t1, step);
            gossip::emit_curve(h, h_out);
            std::cout << "wrote " << h_out << " (" << h.size() << " points)\n";
            return 0;
        }

        if (app.got_subcommand(sim)) {
            gossip::ExperimentConfig cfg;
            cfg.N = {static_cast<int>(n)};
            cfg.alpha = alpha;
            cfg.grid_G = grid;
            cfg.eps_list = eps;
            cfg.replicates = replicates;
            gossip::validate_config(cfg);
            gossip::CoupledPlan plan;
            plan.N = n;
            plan.alpha = alpha;
            plan.grid_G = grid;
            plan.eps = eps;
            plan.audit = false;
            const auto reps = gossip::farm_coupled(plan, sim_seed, static_cast<std::size_t>(replicates));
            std::cout << "replicate,eps,sigma,tau,T,m_hat\n";
            for (std::size_t i = 0; i < reps.size(); ++i)
                for (std::size_t e = 0; e < eps.size(); ++e)
                    std::cout << i << ',' << gossip::format_number(eps[e]) << ','
                              << gossip::format_number(reps[i].sigma[e]) << ',' << gossip::format_number(reps[i].tau[e])
                              << ',' << gossip::format_number(reps[i].cover) << ','
                              << gossip::format_number(reps[i].m_hat) << '\n';
            return 0;
        }
    } catch (const gossip::ConfigError& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
