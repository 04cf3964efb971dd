#pragma once

#include <algorithm>
#include <atomic>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cemads/blackbox.hpp"
#include "cemads/ce.hpp"
#include "cemads/mads.hpp"
#include "cemads/problems.hpp"

// Benchmark harness: runs algorithm variants over problem instances
// (start point x seed), persists evaluation histories, and computes data
// profiles. A history counts as solved after e evaluations when its best
// feasible objective has closed a (1 - tau) share of the gap between the
// worst first-feasible reference f_fea and the overall best f_star.

namespace cemads {

struct Instance {
    std::string problem;
    Vec start;
    std::uint64_t seed = 0;
    int start_idx = 0;
    int seed_idx = 0;
};

struct AlgorithmSpec {
    std::string name = "cemads";
    bool ce = true;
    CeParams params;
    int stall_limit = 10;
};

/// Slim per-run record retained for profile computation: the (f, h)
/// sequence in evaluation order.
struct CompactHistory {
    std::string algorithm;
    std::string problem;
    int start_idx = 0;
    int seed_idx = 0;
    int n = 0;
    std::vector<std::pair<double, double>> fh;

    bool reaches_feasible() const {
        for (const auto& [f, h] : fh)
            if (h == 0.0) return true;
        return false;
    }
};

struct BudgetRule {
    int scale = 1000;  // budget = scale * (n + 1) ...
    int fixed = 0;     // ... unless fixed > 0

    int budget_for(int n) const { return fixed > 0 ? fixed : scale * (n + 1); }

    static BudgetRule parse(const std::string& text) {
        BudgetRule r;
        std::string s;
        for (char c : text)
            if (!std::isspace(static_cast<unsigned char>(c))) s += c;
        const auto pos = s.find("(n+1)");
        if (pos != std::string::npos && pos + 5 == s.size()) {
            r.scale = std::stoi(s.substr(0, pos));
            r.fixed = 0;
        } else {
            r.fixed = std::stoi(s);
        }
        if (r.scale <= 0 && r.fixed <= 0) throw std::invalid_argument("bad budget rule");
        return r;
    }
};

struct CampaignConfig {
    std::vector<std::string> problems;
    std::vector<AlgorithmSpec> algorithms;
    int starts = 20;
    int seeds = 3;
    std::uint64_t base_seed = 0;
    BudgetRule budget;
    double tau = 1e-3;
    std::string out_dir;  // empty: keep histories in memory only
};

struct CampaignResult {
    std::vector<CompactHistory> histories;
    std::vector<std::string> errors;
};

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
    std::uint64_t z = a + 0x9e3779b97f4a7c15ULL * (b + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

/// Deterministic instance list: starts drawn uniformly inside each
/// problem's start box, seeds derived from the campaign base seed.
inline std::vector<Instance> make_instances(const CampaignConfig& cfg) {
    std::vector<Instance> out;
    for (std::size_t pi = 0; pi < cfg.problems.size(); ++pi) {
        const ProblemSpec& spec = find_spec(cfg.problems[pi]);
        for (int si = 0; si < cfg.starts; ++si) {
            Vec start(spec.n);
            Rng rng(mix_seed(cfg.base_seed, mix_seed(pi, si)));
            for (int i = 0; i < spec.n; ++i) {
                std::uniform_real_distribution<double> u(spec.start_box.lower[i],
                                                         spec.start_box.upper[i]);
                start[i] = u(rng);
            }
            for (int ki = 0; ki < cfg.seeds; ++ki) {
                Instance inst;
                inst.problem = spec.name;
                inst.start = start;
                inst.seed = mix_seed(cfg.base_seed, mix_seed(pi, mix_seed(si, ki)));
                inst.start_idx = si;
                inst.seed_idx = ki;
                out.push_back(std::move(inst));
            }
        }
    }
    return out;
}

inline MadsConfig solver_config(const AlgorithmSpec& alg, int budget, std::uint64_t seed) {
    MadsConfig cfg;
    cfg.budget = budget;
    cfg.seed = seed;
    cfg.algorithm_label = alg.name;
    if (alg.ce) cfg.searches.push_back(make_ce_search({alg.params, alg.stall_limit}));
    return cfg;
}

inline CompactHistory compact(const RunHistory& h, const Instance& inst,
                              const std::string& algorithm) {
    CompactHistory c;
    c.algorithm = algorithm;
    c.problem = h.problem;
    c.start_idx = inst.start_idx;
    c.seed_idx = inst.seed_idx;
    c.n = h.n;
    c.fh.reserve(h.evals.size());
    for (const auto& r : h.evals) c.fh.emplace_back(r.f, r.h);
    return c;
}

/// Run every (algorithm, instance) pair. Deterministic for a fixed config
/// regardless of the worker count; a crashing solver yields an all-unsolved
/// history and the campaign continues.
inline CampaignResult run_campaign(const CampaignConfig& cfg, int workers = 1) {
    if (cfg.problems.empty() || cfg.algorithms.empty())
        throw std::invalid_argument("run_campaign: need problems and algorithms");
    const std::vector<Instance> instances = make_instances(cfg);

    struct Task {
        std::size_t alg;
        std::size_t inst;
    };
    std::vector<Task> tasks;
    for (std::size_t a = 0; a < cfg.algorithms.size(); ++a)
        for (std::size_t i = 0; i < instances.size(); ++i) tasks.push_back({a, i});

    std::map<std::string, Problem> problems;
    for (const auto& name : cfg.problems) problems.emplace(name, make(name));

    CampaignResult result;
    result.histories.resize(tasks.size());
    std::mutex err_mutex;

    if (!cfg.out_dir.empty()) {
        for (const auto& alg : cfg.algorithms)
            for (const auto& name : cfg.problems)
                std::filesystem::create_directories(
                    std::filesystem::path(cfg.out_dir) / alg.name / name);
    }

    std::atomic<std::size_t> next{0};
    auto worker = [&]() {
        for (;;) {
            const std::size_t t = next.fetch_add(1);
            if (t >= tasks.size()) return;
            const AlgorithmSpec& alg = cfg.algorithms[tasks[t].alg];
            const Instance& inst = instances[tasks[t].inst];
            const Problem& problem = problems.at(inst.problem);
            const int budget = cfg.budget.budget_for(problem.n);
            try {
                RunHistory h = solve(problem, inst.start, solver_config(alg, budget, inst.seed));
                if (!cfg.out_dir.empty()) {
                    const auto path = std::filesystem::path(cfg.out_dir) / alg.name /
                                      inst.problem /
                                      (std::to_string(inst.start_idx) + "_" +
                                       std::to_string(inst.seed_idx) + ".jsonl");
                    write_history_file(path.string(), h);
                }
                result.histories[t] = compact(h, inst, alg.name);
            } catch (const std::exception& e) {
                CompactHistory c;
                c.algorithm = alg.name;
                c.problem = inst.problem;
                c.start_idx = inst.start_idx;
                c.seed_idx = inst.seed_idx;
                c.n = problem.n;
                result.histories[t] = std::move(c);
                std::lock_guard<std::mutex> lock(err_mutex);
                result.errors.push_back(inst.problem + "/" + alg.name + ": " + e.what());
            }
        }
    };

    if (workers <= 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
        for (auto& th : pool) th.join();
    }
    return result;
}

// ---------------------------------------------------------------------------
// Convergence references and data profiles.

/// Per-problem references over every history of that problem: f_fea is the
/// worst (max) objective at a history's first feasible evaluation, f_star
/// the best feasible objective overall. Empty when no history reaches
/// feasibility.
inline std::optional<std::pair<double, double>> references(
    const std::vector<const CompactHistory*>& histories) {
    double f_fea = -kInf, f_star = kInf;
    bool any = false;
    for (const auto* h : histories) {
        bool first_seen = false;
        for (const auto& [f, hv] : h->fh) {
            if (hv != 0.0) continue;
            if (!first_seen) {
                f_fea = std::max(f_fea, f);
                first_seen = true;
                any = true;
            }
            f_star = std::min(f_star, f);
        }
    }
    if (!any) return std::nullopt;
    return std::make_pair(f_fea, f_star);
}

/// Smallest 1-based evaluation count at which the best feasible objective
/// satisfies the convergence test, if ever.
inline std::optional<int> solved_at(const CompactHistory& h, double tau, double f_fea,
                                    double f_star) {
    if (tau <= 0.0 || tau >= 1.0) throw std::invalid_argument("solved_at: tau in (0,1)");
    const double threshold = f_fea - (1.0 - tau) * (f_fea - f_star);
    double best_feasible = kInf;
    for (std::size_t e = 0; e < h.fh.size(); ++e) {
        const auto& [f, hv] = h.fh[e];
        if (hv == 0.0) best_feasible = std::min(best_feasible, f);
        if (best_feasible <= threshold) return static_cast<int>(e) + 1;
    }
    return std::nullopt;
}

struct ProfileCurve {
    std::vector<std::pair<int, double>> points;  // (t groups of n+1 evals, fraction)

    double final_fraction() const { return points.empty() ? 0.0 : points.back().second; }
};

struct ProfileReport {
    std::map<std::string, ProfileCurve> curves;  // per algorithm
    std::vector<std::string> excluded_problems;  // no feasible point anywhere
    int pairs = 0;                               // denominator
};

/// Data profiles: for each algorithm, the fraction of (problem, instance)
/// pairs solved within t groups of n+1 evaluations.
inline ProfileReport data_profile(const std::vector<CompactHistory>& histories, double tau) {
    ProfileReport report;

    std::map<std::string, std::vector<const CompactHistory*>> by_problem;
    for (const auto& h : histories) by_problem[h.problem].push_back(&h);

    std::map<std::string, std::pair<double, double>> refs;
    for (const auto& [problem, hs] : by_problem) {
        if (auto r = references(hs))
            refs[problem] = *r;
        else
            report.excluded_problems.push_back(problem);
    }

    std::map<std::string, std::vector<std::optional<int>>> solve_groups;  // per algorithm
    int t_max = 0;
    for (const auto& h : histories) {
        auto it = refs.find(h.problem);
        if (it == refs.end()) continue;
        std::optional<int> groups;
        if (auto e = solved_at(h, tau, it->second.first, it->second.second)) {
            groups = static_cast<int>(
                std::ceil(static_cast<double>(*e) / static_cast<double>(h.n + 1)));
        }
        solve_groups[h.algorithm].push_back(groups);
        t_max = std::max(t_max, static_cast<int>(std::ceil(
                                    static_cast<double>(h.fh.size()) / (h.n + 1))));
    }

    for (auto& [alg, groups] : solve_groups) {
        report.pairs = static_cast<int>(groups.size());
        ProfileCurve curve;
        for (int t = 0; t <= t_max; ++t) {
            int solved = 0;
            for (const auto& g : groups)
                if (g && *g <= t) ++solved;
            curve.points.emplace_back(
                t, groups.empty() ? 0.0
                                  : static_cast<double>(solved) /
                                        static_cast<double>(groups.size()));
        }
        report.curves[alg] = std::move(curve);
    }
    return report;
}

/// CSV export: algorithm, tau, t, fraction.
inline void write_profile_csv(std::FILE* out, const ProfileReport& report, double tau) {
    std::fprintf(out, "algorithm,tau,t,fraction\n");
    for (const auto& [alg, curve] : report.curves)
        for (const auto& [t, frac] : curve.points)
            std::fprintf(out, "%s,%.17g,%d,%.17g\n", alg.c_str(), tau, t, frac);
}

// ---------------------------------------------------------------------------
// History store reading (JSON lines written by write_history).

inline double json_real(const nlohmann::json& v) {
    if (v.is_string()) {
        const std::string& s = v.get_ref<const std::string&>();
        if (s == "inf") return kInf;
        if (s == "-inf") return -kInf;
        return std::nan("");
    }
    return v.get<double>();
}

inline std::optional<CompactHistory> read_history_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) return std::nullopt;
    CompactHistory h;
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        nlohmann::json j = nlohmann::json::parse(line, nullptr, false);
        if (j.is_discarded()) return std::nullopt;
        if (j.contains("meta")) {
            h.problem = j["meta"].value("problem", "");
            h.algorithm = j["meta"].value("algorithm", "");
            h.n = j["meta"].value("n", 0);
        } else if (j.contains("e")) {
            h.fh.emplace_back(json_real(j["f"]), json_real(j["h"]));
        }
    }
    return h;
}

/// Load every *.jsonl under dir (sorted paths, deterministic order).
inline std::vector<CompactHistory> read_histories_dir(const std::string& dir) {
    std::vector<std::string> paths;
    for (const auto& entry : std::filesystem::recursive_directory_iterator(dir)) {
        if (entry.is_regular_file() && entry.path().extension() == ".jsonl")
            paths.push_back(entry.path().string());
    }
    std::sort(paths.begin(), paths.end());
    std::vector<CompactHistory> out;
    for (const auto& p : paths) {
        if (auto h = read_history_file(p)) out.push_back(std::move(*h));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Campaign configuration file: plain "key = value" lines, '#' comments.
//
//   problems   = RASTRIGIN, GRIEWANK
//   algorithms = cemads, mads
//   mads.ce        = off
//   cemads.ne      = 4
//   cemads.ns      = 0          # 0 means 2n
//   cemads.alpha   = 0.7
//   cemads.stall_limit = 10
//   starts     = 20
//   seeds      = 3
//   budget     = 1000(n+1)
//   base_seed  = 0
//   tau        = 1e-3

inline CampaignConfig parse_campaign_config(std::istream& in) {
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    auto split_list = [&trim](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    };

    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument("campaign config: expected 'key = value': " + line);
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }

    CampaignConfig cfg;
    if (!kv.count("problems")) throw std::invalid_argument("campaign config: missing problems");
    cfg.problems = split_list(kv["problems"]);
    const auto alg_names =
        kv.count("algorithms") ? split_list(kv["algorithms"]) : std::vector<std::string>{"cemads"};
    for (const auto& name : alg_names) {
        AlgorithmSpec alg;
        alg.name = name;
        auto get = [&](const std::string& key) -> std::optional<std::string> {
            auto it = kv.find(name + "." + key);
            if (it == kv.end()) return std::nullopt;
            return it->second;
        };
        if (auto v = get("ce")) alg.ce = !(*v == "off" || *v == "false" || *v == "0");
        if (auto v = get("ne")) alg.params.ne = std::stoi(*v);
        if (auto v = get("ns")) alg.params.ns = std::stoi(*v);
        if (auto v = get("alpha")) alg.params.alpha = std::stod(*v);
        if (auto v = get("stall_limit")) alg.stall_limit = std::stoi(*v);
        cfg.algorithms.push_back(std::move(alg));
    }
    if (kv.count("starts")) cfg.starts = std::stoi(kv["starts"]);
    if (kv.count("seeds")) cfg.seeds = std::stoi(kv["seeds"]);
    if (kv.count("base_seed")) cfg.base_seed = std::stoull(kv["base_seed"]);
    if (kv.count("budget")) cfg.budget = BudgetRule::parse(kv["budget"]);
    if (kv.count("tau")) cfg.tau = std::stod(kv["tau"]);
    return cfg;
}

}  // namespace cemads
