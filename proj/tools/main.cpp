// Command-line front end: solve a problem with (CE-)MADS, run the
// standalone cross-entropy optimizer, run benchmark campaigns, recompute
// data profiles from stored histories, and list the built-in problems.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cemads/bench.hpp"
#include "cemads/blackbox.hpp"
#include "cemads/ce.hpp"
#include "cemads/mads.hpp"
#include "cemads/problems.hpp"

namespace {

using namespace cemads;

Vec parse_csv_reals(const std::string& text) {
    Vec out;
    std::stringstream ss(text);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (item.empty()) continue;
        out.push_back(std::stod(item));
    }
    return out;
}

struct ProblemOptions {
    std::string builtin;
    std::string external;
    std::vector<std::string> external_args;
    int n = 0;
    int m = 0;
    std::string lower;
    std::string upper;
    bool serial = false;

    void attach(CLI::App* cmd) {
        cmd->add_option("--problem", builtin, "built-in problem name (see list-problems)");
        cmd->add_option("--external", external, "external blackbox executable");
        cmd->add_option("--args", external_args, "extra arguments for the external blackbox");
        cmd->add_option("--n", n, "dimension of the external blackbox");
        cmd->add_option("--m", m, "constraint count of the external blackbox");
        cmd->add_option("--lower", lower, "comma-separated lower bounds (external)");
        cmd->add_option("--upper", upper, "comma-separated upper bounds (external)");
        cmd->add_flag("--serial-eval", serial, "serialize concurrent evaluator calls");
    }

    Problem build() const {
        if (!builtin.empty() && !external.empty())
            throw CLI::ValidationError("--problem and --external are mutually exclusive");
        if (!builtin.empty()) return make(builtin);
        if (external.empty())
            throw CLI::ValidationError("need --problem NAME or --external EXE");
        if (n < 1) throw CLI::ValidationError("--external requires --n");
        ExternalSpec spec;
        spec.exe = external;
        spec.args = external_args;
        spec.n = n;
        spec.m = m;
        spec.serial = serial;
        spec.bounds = BoundBox::unbounded(n);
        if (!lower.empty()) spec.bounds.lower = parse_csv_reals(lower);
        if (!upper.empty()) spec.bounds.upper = parse_csv_reals(upper);
        if (spec.bounds.lower.size() != static_cast<std::size_t>(n) ||
            spec.bounds.upper.size() != static_cast<std::size_t>(n))
            throw CLI::ValidationError("bound vectors must have length n");
        return spawn_external(spec);
    }

    Vec default_start(const Problem& p) const {
        if (!builtin.empty()) {
            const auto& spec = find_spec(builtin);
            if (!spec.start.empty()) return spec.start;
        }
        Vec x0(p.n, 0.0);
        for (int i = 0; i < p.n; ++i) {
            const double lo = p.bounds.lower[i], hi = p.bounds.upper[i];
            if (std::isfinite(lo) && std::isfinite(hi)) x0[i] = 0.5 * (lo + hi);
        }
        return x0;
    }
};

void print_point(const char* label, const Vec& x, double f, double h) {
    std::printf("%s x = (", label);
    for (std::size_t i = 0; i < x.size(); ++i) std::printf(i ? ", %.6g" : "%.6g", x[i]);
    std::printf(")\n%s f = %.6g\n%s h = %.6g\n", label, f, label, h);
}

int cmd_solve(const ProblemOptions& popt, const std::string& x0_csv, int budget,
              std::uint64_t seed, bool no_ce, const CeParams& ce, int stall_limit,
              double h_max, double stop_delta, bool no_opportunistic,
              const std::string& history_path, const std::string& cache_path) {
    Problem p = popt.build();
    Vec x0 = x0_csv.empty() ? popt.default_start(p) : parse_csv_reals(x0_csv);
    MadsConfig cfg;
    cfg.budget = budget > 0 ? budget : 1000 * (p.n + 1);
    cfg.seed = seed;
    cfg.h_max_init = h_max;
    cfg.stop_delta = stop_delta;
    cfg.opportunistic = !no_opportunistic;
    if (!no_ce) cfg.searches.push_back(make_ce_search({ce, stall_limit}));

    MadsRun run(p, x0, cfg);
    while (!run.done()) run.step();
    if (!cache_path.empty()) {
        if (std::FILE* out = std::fopen(cache_path.c_str(), "wb")) {
            run.cache().dump_csv(out);
            std::fclose(out);
        }
    }
    RunHistory h = run.finish();
    if (!history_path.empty()) write_history_file(history_path, h);

    std::printf("problem %s (n=%d, m=%d), algorithm %s\n", h.problem.c_str(), h.n, h.m,
                h.algorithm.c_str());
    std::printf("evaluations used: %d of %d\n", h.evals_used(), h.budget);
    if (h.final_best_feasible) {
        const auto& b = *h.final_best_feasible;
        print_point("best", b.x, b.f, b.h);
    } else if (h.final_best_infeasible) {
        const auto& b = *h.final_best_infeasible;
        std::printf("no feasible point found\n");
        print_point("best-infeasible", b.x, b.f, b.h);
    } else {
        std::printf("no evaluations recorded\n");
    }
    return 0;
}

int cmd_ce(const ProblemOptions& popt, const std::string& mu0_csv,
           const std::string& sigma0_csv, CeParams params, int budget, std::uint64_t seed,
           const std::string& trace_path) {
    Problem p = popt.build();
    Vec mu0 = mu0_csv.empty() ? popt.default_start(p) : parse_csv_reals(mu0_csv);
    Vec sigma0;
    if (sigma0_csv.empty()) {
        sigma0.assign(p.n, 1.0);
        for (int i = 0; i < p.n; ++i) {
            const double lo = p.bounds.lower[i], hi = p.bounds.upper[i];
            if (std::isfinite(lo) && std::isfinite(hi)) sigma0[i] = hi - lo;
        }
    } else {
        sigma0 = parse_csv_reals(sigma0_csv);
        if (sigma0.size() == 1) sigma0.assign(p.n, sigma0[0]);
    }
    if (budget <= 0) budget = 1000 * (p.n + 1);

    Rng rng(seed);
    CeResult r = ce_optimize(p, params, mu0, sigma0, rng, budget);
    if (!trace_path.empty()) {
        if (std::FILE* out = std::fopen(trace_path.c_str(), "wb")) {
            write_ce_trace(out, r, p.n);
            std::fclose(out);
        }
    }
    if (!r.ran()) {
        std::fprintf(stderr, "budget %d cannot cover one sample of %d points\n", budget,
                     params.samples(p.n));
        return 1;
    }
    std::printf("iterations: %zu, evaluations: %d\n", r.trace.size(), r.evals_used);
    print_point("best", r.best->x, r.best->f, r.best->h);
    return 0;
}

int cmd_bench(const std::string& config_path, const std::string& out_dir, int workers) {
    std::ifstream in(config_path);
    if (!in) {
        std::fprintf(stderr, "cannot open campaign config %s\n", config_path.c_str());
        return 1;
    }
    CampaignConfig cfg = parse_campaign_config(in);
    if (!out_dir.empty()) cfg.out_dir = out_dir;
    CampaignResult result = run_campaign(cfg, workers);
    for (const auto& err : result.errors)
        std::fprintf(stderr, "instance failed: %s\n", err.c_str());
    ProfileReport report = data_profile(result.histories, cfg.tau);
    for (const auto& name : report.excluded_problems)
        std::fprintf(stderr, "excluded (no feasible point found): %s\n", name.c_str());
    write_profile_csv(stdout, report, cfg.tau);
    return 0;
}

int cmd_profile(const std::string& dir, double tau, const std::string& out_path) {
    const auto histories = read_histories_dir(dir);
    if (histories.empty()) {
        std::fprintf(stderr, "no histories found under %s\n", dir.c_str());
        return 1;
    }
    ProfileReport report = data_profile(histories, tau);
    for (const auto& name : report.excluded_problems)
        std::fprintf(stderr, "excluded (no feasible point found): %s\n", name.c_str());
    if (out_path.empty()) {
        write_profile_csv(stdout, report, tau);
    } else if (std::FILE* out = std::fopen(out_path.c_str(), "wb")) {
        write_profile_csv(out, report, tau);
        std::fclose(out);
    } else {
        std::fprintf(stderr, "cannot write %s\n", out_path.c_str());
        return 1;
    }
    return 0;
}

int cmd_list_problems() {
    std::printf("name\tn\tm\tbounded\treference_best\tprovenance\n");
    for (const auto& spec : catalog()) {
        std::printf("%s\t%d\t%d\t%s\t", spec.name.c_str(), spec.n, spec.m,
                    spec.bounds.finite() ? "yes" : "no");
        if (spec.reference_best)
            std::printf("%.17g\t%s\n", *spec.reference_best, spec.ref_provenance.c_str());
        else
            std::printf("-\t-\n");
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"derivative-free optimization toolkit: MADS with a cross-entropy search step"};
    app.require_subcommand(1);

    // solve
    auto* solve_cmd = app.add_subcommand("solve", "run (CE-)MADS on one problem");
    ProblemOptions solve_popt;
    solve_popt.attach(solve_cmd);
    std::string x0_csv, history_path, cache_path;
    int budget = 0;
    std::uint64_t seed = 0;
    bool no_ce = false, no_opportunistic = false;
    CeParams ce_params;
    int stall_limit = 10;
    double h_max = kInf, stop_delta = 1e-9;
    solve_cmd->add_option("--x0", x0_csv, "start point, comma-separated");
    solve_cmd->add_option("--budget", budget, "evaluation budget (default 1000(n+1))");
    solve_cmd->add_option("--seed", seed, "random seed");
    solve_cmd->add_flag("--no-ce", no_ce, "disable the cross-entropy search step");
    solve_cmd->add_option("--ne", ce_params.ne, "elite count");
    solve_cmd->add_option("--ns", ce_params.ns, "samples per activation (0 = 2n)");
    solve_cmd->add_option("--alpha", ce_params.alpha, "smoothing coefficient");
    solve_cmd->add_option("--stall-limit", stall_limit,
                          "iterations without feasibility before rescue sampling");
    solve_cmd->add_option("--h-max", h_max, "initial barrier threshold");
    solve_cmd->add_option("--stop-delta", stop_delta, "poll size stopping threshold");
    solve_cmd->add_flag("--no-opportunistic", no_opportunistic,
                        "evaluate the whole poll frame");
    solve_cmd->add_option("--history", history_path, "write the run log (JSON lines)");
    solve_cmd->add_option("--cache", cache_path, "write the final cache (CSV)");

    // ce
    auto* ce_cmd = app.add_subcommand("ce", "run the standalone cross-entropy optimizer");
    ProblemOptions ce_popt;
    ce_popt.attach(ce_cmd);
    std::string mu0_csv, sigma0_csv, trace_path;
    CeParams ce_only{50, 10, 0.7, 0.0, 1e-3};
    int ce_budget = 0;
    std::uint64_t ce_seed = 0;
    ce_cmd->add_option("--mu0", mu0_csv, "initial mean, comma-separated");
    ce_cmd->add_option("--sigma0", sigma0_csv,
                       "initial standard deviation (scalar or comma-separated)");
    ce_cmd->add_option("--ns", ce_only.ns, "samples per iteration");
    ce_cmd->add_option("--ne", ce_only.ne, "elite count");
    ce_cmd->add_option("--alpha", ce_only.alpha, "smoothing coefficient");
    ce_cmd->add_option("--rho", ce_only.rho, "quantile fraction (0 = ne/ns)");
    ce_cmd->add_option("--sigma-stop", ce_only.sigma_stop, "termination threshold on |sigma|");
    ce_cmd->add_option("--budget", ce_budget, "evaluation budget (default 1000(n+1))");
    ce_cmd->add_option("--seed", ce_seed, "random seed");
    ce_cmd->add_option("--trace", trace_path, "write the per-iteration trace (CSV)");

    // bench
    auto* bench_cmd = app.add_subcommand("bench", "run a benchmark campaign");
    std::string config_path, bench_out;
    int workers = 1;
    bench_cmd->add_option("--config", config_path, "campaign config file")->required();
    bench_cmd->add_option("--out", bench_out, "history store directory");
    bench_cmd->add_option("--workers", workers, "parallel campaign workers");

    // profile
    auto* profile_cmd =
        app.add_subcommand("profile", "recompute data profiles from stored histories");
    std::string hist_dir, profile_out;
    double tau = 1e-3;
    profile_cmd->add_option("--histories", hist_dir, "history store directory")->required();
    profile_cmd->add_option("--tau", tau, "convergence tolerance");
    profile_cmd->add_option("--out", profile_out, "output CSV path (default stdout)");

    // list-problems
    app.add_subcommand("list-problems", "print the built-in problem catalog");

    CLI11_PARSE(app, argc, argv);

    try {
        if (solve_cmd->parsed())
            return cmd_solve(solve_popt, x0_csv, budget, seed, no_ce, ce_params, stall_limit,
                             h_max, stop_delta, no_opportunistic, history_path, cache_path);
        if (ce_cmd->parsed())
            return cmd_ce(ce_popt, mu0_csv, sigma0_csv, ce_only, ce_budget, ce_seed, trace_path);
        if (bench_cmd->parsed()) return cmd_bench(config_path, bench_out, workers);
        if (profile_cmd->parsed()) return cmd_profile(hist_dir, tau, profile_out);
        return cmd_list_problems();
    } catch (const CLI::ValidationError& e) {
        std::fprintf(stderr, "%s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
}
