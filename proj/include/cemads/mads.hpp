#pragma once

#include <cstdio>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "cemads/blackbox.hpp"
#include "cemads/cache.hpp"
#include "cemads/mesh.hpp"

// The main direct-search loop. Each iteration runs the configured search
// steps (free-form exploration, full batch evaluation), then a poll step
// (rigid frame exploration, opportunistic), then updates the mesh sizes,
// the barrier threshold and the frame center. Inequality constraints are
// handled with a progressive barrier: the violation threshold h_max tracks
// the best infeasible incumbent downward, and infeasible points may lead
// the search as long as they improve the violation.

namespace cemads {

struct EvalRecord {
    int eval = 0;  // 0-based, contiguous
    int iter = 0;  // 0 = starting point, iterations count from 1
    std::string source;
    Vec x;
    double f = kInf;
    double h = kInf;
    EvalStatus status = EvalStatus::failed;
};

/// One sampling-search activation, recorded for trigger diagnostics.
struct CeActivationRecord {
    int iter = 0;
    bool escape = false;
    double sigma_norm = 0.0;     // elite spread measured when the step fired
    double sigma_p_after = 0.0;  // trigger reference after the update
    int stall = 0;               // consecutive iterations without feasibility
    int drawn = 0;
    std::size_t eval_watermark = 0;  // evals recorded when this was logged
};

struct RunHistory {
    std::string problem;
    std::string algorithm = "mads";
    int n = 0;
    int m = 0;
    std::uint64_t seed = 0;
    int budget = 0;
    std::vector<EvalRecord> evals;
    std::vector<CeActivationRecord> ce_activations;
    std::vector<std::string> warnings;
    std::optional<CacheEntry> final_best_feasible;
    std::optional<CacheEntry> final_best_infeasible;
    int iterations = 0;

    int evals_used() const { return static_cast<int>(evals.size()); }
};

struct SearchContext {
    const Problem& problem;
    const Cache& cache;
    const MeshState& mesh;
    double h_max;
    int iter;
    int budget_left;
    Rng& rng;
    RunHistory& history;
};

/// A search-step plugin. propose() returns trial points (not yet on the
/// mesh); the engine projects, evaluates and caches them, then calls
/// observe() so the plugin can update its internal state. An empty
/// proposal skips the step.
class SearchStep {
public:
    virtual ~SearchStep() = default;
    virtual std::string_view name() const = 0;
    virtual std::vector<Vec> propose(const SearchContext& ctx) = 0;
    virtual void observe(const SearchContext& ctx) { (void)ctx; }
};

struct MadsConfig {
    int budget = 1000;
    std::uint64_t seed = 0;
    // Factories, so each run gets fresh plugin state.
    std::vector<std::function<std::unique_ptr<SearchStep>()>> searches;
    double h_max_init = kInf;
    bool opportunistic = true;
    double stop_delta = 1e-9;
    std::string algorithm_label;  // history annotation only
};

enum class OutcomeKind { search_success, poll_success, failure };

struct IterationOutcome {
    OutcomeKind kind = OutcomeKind::failure;
    std::optional<CacheEntry> new_incumbent;
};

namespace detail {

struct IncumbentSnapshot {
    std::optional<CacheEntry> bf;
    std::optional<CacheEntry> bi;
    double h_max = kInf;
};

// Success test for a freshly evaluated point against the incumbents as
// they stood when the batch started: a feasible point must beat the
// feasible incumbent's objective; an infeasible one must dominate the
// infeasible incumbent or drop the violation below the barrier threshold.
inline bool improves(const CacheEntry& e, const IncumbentSnapshot& s) {
    if (e.feasible()) return !s.bf || e.f < s.bf->f;
    if (s.bi && dominates(e, *s.bi)) return true;
    return e.h < s.h_max;
}

}  // namespace detail

/// Best-order-minimal infeasible entry whose violation is admitted by the
/// barrier, if any.
inline std::optional<CacheEntry> barrier_incumbent(const Cache& cache, double h_max) {
    const CacheEntry* sel = nullptr;
    for (const auto& e : cache.entries()) {
        if (e.feasible() || e.h > h_max) continue;
        if (!sel || best_order(e, *sel)) sel = &e;
    }
    if (!sel) return std::nullopt;
    return *sel;
}

/// New barrier threshold: the violation of the best admitted infeasible
/// incumbent; never increases.
inline double barrier_update(double h_max, const Cache& cache) {
    if (auto bi = barrier_incumbent(cache, h_max)) return std::min(h_max, bi->h);
    return h_max;
}

/// One in-progress optimization run. solve() below drives it end to end;
/// tests may construct one and step through the phases directly.
class MadsRun {
public:
    MadsRun(const Problem& problem, const Vec& x0, const MadsConfig& cfg)
        : p_(problem), cfg_(cfg), rng_(cfg.seed), h_max_(cfg.h_max_init) {
        if (cfg.budget < 1) throw std::invalid_argument("mads: budget must be >= 1");
        if (static_cast<int>(x0.size()) != p_.n)
            throw std::invalid_argument("mads: start point dimension mismatch");
        for (const auto& make_step : cfg.searches) searches_.push_back(make_step());
        history_.problem = p_.name;
        history_.algorithm = cfg.algorithm_label.empty()
                                 ? (searches_.empty() ? "mads" : "ce-mads")
                                 : cfg.algorithm_label;
        history_.n = p_.n;
        history_.m = p_.m;
        history_.seed = cfg.seed;
        history_.budget = cfg.budget;
        bool clamped = false;
        mesh_ = init_mesh(p_, x0, &clamped);
        if (clamped) history_.warnings.push_back("start point clamped to bounds");
        commit(mesh_.center, "initial");
        if (auto bi = eligible_bi()) h_max_ = std::min(h_max_, bi->h);
    }

    /// Evaluate and cache a point unless it is a duplicate or the budget is
    /// spent. Returns the fresh entry, or nullptr if nothing was evaluated.
    const CacheEntry* commit(const Vec& x, std::string_view source) {
        if (budget_left() <= 0) return nullptr;
        if (cache_.contains(x)) return nullptr;
        Evaluation ev = evaluate(p_, x);
        auto res = cache_.insert(ev);
        const CacheEntry& entry = cache_.entries()[res.gen];
        EvalRecord rec;
        rec.eval = history_.evals_used();
        rec.iter = iter_;
        rec.source = std::string(source);
        rec.x = entry.x;
        rec.f = entry.f;
        rec.h = entry.h;
        rec.status = entry.status;
        history_.evals.push_back(std::move(rec));
        if (entry.feasible()) {
            if (!bf_ || entry.f < bf_->f) bf_ = entry;
        } else {
            if (!bi_ || best_order(entry, *bi_)) bi_ = entry;
        }
        return &entry;
    }

    int budget_left() const { return cfg_.budget - history_.evals_used(); }

    detail::IncumbentSnapshot snapshot() const {
        return {bf_, eligible_bi(), h_max_};
    }

    // Incumbents are tracked incrementally; bi_ is the best_order-minimal
    // infeasible entry, which has the smallest violation seen so far.
    std::optional<CacheEntry> eligible_bi() const {
        if (bi_ && bi_->h <= h_max_) return bi_;
        return std::nullopt;
    }

    /// Run every configured search step until one of them improves an
    /// incumbent. Search batches are always evaluated in full.
    IterationOutcome search_phase() {
        const auto snap = snapshot();
        for (auto& step : searches_) {
            SearchContext ctx{p_, cache_, mesh_, h_max_, iter_, budget_left(), rng_, history_};
            const auto proposals = step->propose(ctx);
            if (proposals.empty()) continue;
            bool improved = false;
            for (const auto& raw : proposals) {
                if (budget_left() <= 0) break;
                const Vec x = project_into_box(mesh_, p_.bounds, raw);
                if (const CacheEntry* e = commit(x, step->name()))
                    improved = improved || detail::improves(*e, snap);
            }
            SearchContext post{p_, cache_, mesh_, h_max_, iter_, budget_left(), rng_, history_};
            step->observe(post);
            if (improved) return {OutcomeKind::search_success, current_incumbent()};
            if (budget_left() <= 0) break;
        }
        return {OutcomeKind::failure, std::nullopt};
    }

    /// Evaluate the poll frame around the current center, stopping at the
    /// first improving point when opportunistic.
    IterationOutcome poll_step() {
        if (budget_left() <= 0) return {OutcomeKind::failure, std::nullopt};
        const auto snap = snapshot();
        const auto dirs = poll_directions(mesh_, rng_);
        bool improved = false;
        for (const auto& d : dirs) {
            if (budget_left() <= 0) break;
            Vec x(mesh_.dim());
            for (std::size_t i = 0; i < x.size(); ++i)
                x[i] = mesh_.center[i] + mesh_.delta[i] * d[i];
            x = project_into_box(mesh_, p_.bounds, x);
            if (const CacheEntry* e = commit(x, "poll")) {
                if (detail::improves(*e, snap)) {
                    improved = true;
                    if (cfg_.opportunistic) break;
                }
            }
        }
        if (improved) return {OutcomeKind::poll_success, current_incumbent()};
        return {OutcomeKind::failure, std::nullopt};
    }

    std::optional<CacheEntry> current_incumbent() const {
        if (bf_) return bf_;
        return eligible_bi();
    }

    /// One full iteration: search, poll, updates. Returns the outcome.
    IterationOutcome step() {
        ++iter_;
        history_.iterations = iter_;
        IterationOutcome outcome = search_phase();
        if (outcome.kind == OutcomeKind::failure) {
            IterationOutcome polled = poll_step();
            if (polled.kind != OutcomeKind::failure) outcome = polled;
        }
        mesh_ = update_sizes(mesh_, outcome.kind == OutcomeKind::failure
                                        ? IterationResult::failure
                                        : IterationResult::success);
        if (auto bi = eligible_bi()) h_max_ = std::min(h_max_, bi->h);
        if (outcome.kind != OutcomeKind::failure) {
            if (bf_)
                mesh_.center = bf_->x;
            else if (auto bi = eligible_bi())
                mesh_.center = bi->x;
        }
        return outcome;
    }

    bool done() const {
        return budget_left() <= 0 || max_poll_size(mesh_) < cfg_.stop_delta;
    }

    RunHistory finish() {
        history_.final_best_feasible = cache_.best_feasible();
        history_.final_best_infeasible = cache_.best_infeasible();
        return std::move(history_);
    }

    const Cache& cache() const { return cache_; }
    const MeshState& mesh() const { return mesh_; }
    MeshState& mesh() { return mesh_; }
    double h_max() const { return h_max_; }
    const RunHistory& history() const { return history_; }
    Rng& rng() { return rng_; }
    int iteration() const { return iter_; }

private:
    Problem p_;
    MadsConfig cfg_;
    Rng rng_;
    Cache cache_;
    MeshState mesh_;
    RunHistory history_;
    std::vector<std::unique_ptr<SearchStep>> searches_;
    double h_max_ = kInf;
    int iter_ = 0;
    std::optional<CacheEntry> bf_;  // feasible incumbent (argmin f, oldest on ties)
    std::optional<CacheEntry> bi_;  // best_order-minimal infeasible entry
};

/// Run the full loop. Deterministic for fixed (problem, x0, cfg.seed).
inline RunHistory solve(const Problem& p, const Vec& x0, const MadsConfig& cfg) {
    MadsRun run(p, x0, cfg);
    while (!run.done()) run.step();
    return run.finish();
}

// ---------------------------------------------------------------------------
// Run-log serialization: JSON lines, one record per evaluation plus meta,
// search-activation and final-summary records. Reals carry 17 significant
// digits; infinities are written as quoted "inf"/"-inf".

namespace jsonl {

inline void write_real(std::FILE* out, double v) {
    if (std::isfinite(v))
        std::fprintf(out, "%.17g", v);
    else if (v > 0)
        std::fprintf(out, "\"inf\"");
    else if (v < 0)
        std::fprintf(out, "\"-inf\"");
    else
        std::fprintf(out, "\"nan\"");
}

inline void write_eval(std::FILE* out, const EvalRecord& r) {
    std::fprintf(out, "{\"e\":%d,\"k\":%d,\"src\":\"%s\",\"x\":[", r.eval, r.iter,
                 r.source.c_str());
    for (std::size_t i = 0; i < r.x.size(); ++i) {
        if (i) std::fputc(',', out);
        write_real(out, r.x[i]);
    }
    std::fprintf(out, "],\"f\":");
    write_real(out, r.f);
    std::fprintf(out, ",\"h\":");
    write_real(out, r.h);
    std::fprintf(out, ",\"st\":\"%s\"}\n", r.status == EvalStatus::ok ? "ok" : "failed");
}

inline void write_activation(std::FILE* out, const CeActivationRecord& a) {
    std::fprintf(out, "{\"ce\":{\"k\":%d,\"mode\":\"%s\",\"sigma_k\":", a.iter,
                 a.escape ? "escape" : "normal");
    write_real(out, a.sigma_norm);
    std::fprintf(out, ",\"sigma_p\":");
    write_real(out, a.sigma_p_after);
    std::fprintf(out, ",\"stall\":%d,\"drawn\":%d}}\n", a.stall, a.drawn);
}

}  // namespace jsonl

inline void write_history(std::FILE* out, const RunHistory& h) {
    std::fprintf(out,
                 "{\"meta\":{\"problem\":\"%s\",\"algorithm\":\"%s\",\"n\":%d,\"m\":%d,"
                 "\"seed\":%llu,\"budget\":%d}}\n",
                 h.problem.c_str(), h.algorithm.c_str(), h.n, h.m,
                 static_cast<unsigned long long>(h.seed), h.budget);
    for (const auto& w : h.warnings) std::fprintf(out, "{\"warn\":\"%s\"}\n", w.c_str());
    std::size_t next_act = 0;
    for (std::size_t e = 0; e <= h.evals.size(); ++e) {
        while (next_act < h.ce_activations.size() &&
               h.ce_activations[next_act].eval_watermark <= e) {
            jsonl::write_activation(out, h.ce_activations[next_act]);
            ++next_act;
        }
        if (e < h.evals.size()) jsonl::write_eval(out, h.evals[e]);
    }
    std::fprintf(out, "{\"final\":{\"evals\":%d,\"iters\":%d", h.evals_used(), h.iterations);
    if (h.final_best_feasible) {
        std::fprintf(out, ",\"best_f\":");
        jsonl::write_real(out, h.final_best_feasible->f);
    }
    if (h.final_best_infeasible) {
        std::fprintf(out, ",\"best_h\":");
        jsonl::write_real(out, h.final_best_infeasible->h);
    }
    std::fprintf(out, "}}\n");
}

inline bool write_history_file(const std::string& path, const RunHistory& h) {
    std::FILE* out = std::fopen(path.c_str(), "wb");
    if (!out) return false;
    write_history(out, h);
    std::fclose(out);
    return true;
}

}  // namespace cemads
