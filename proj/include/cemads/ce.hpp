#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "cemads/blackbox.hpp"
#include "cemads/cache.hpp"
#include "cemads/mads.hpp"
#include "cemads/mesh.hpp"

// Cross-entropy machinery: a standalone optimizer that iteratively refits a
// normal distribution to elite samples, and a search-step plugin that runs
// the same refit inside the direct-search loop. The plugin activates only
// when the measured elite spread has shrunk since its last activation, and
// switches to a wide rescue distribution when the run cannot find a
// feasible point for several iterations.

namespace cemads {

struct CeParams {
    int ns = 0;          // samples per iteration; 0 means 2n
    int ne = 4;          // elite count
    double alpha = 0.7;  // smoothing coefficient in (0, 1]
    double rho = 0.0;    // elite fraction for the quantile; 0 means ne/ns
    double sigma_stop = 1e-3;

    int samples(int n) const { return ns > 0 ? ns : 2 * n; }
    double quantile_fraction(int n) const {
        if (rho > 0.0) return rho;
        return static_cast<double>(ne) / static_cast<double>(samples(n));
    }
};

struct CeState {
    Vec mu;
    Vec sigma;                   // smoothed parameters (convex-combination memory)
    double sigma_p_norm = kInf;  // elite-spread norm at the last activation
    int infeasible_stall = 0;    // consecutive iterations without a feasible point
    Vec sigma_init;              // spread measured at the first activation
    bool activated = false;
};

inline double l2_norm(const Vec& v) {
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

/// Draw one point, each coordinate from Normal(mu_i, sigma_i) conditioned
/// on [lower_i, upper_i] by rejection (100 attempts, then clamp). A zero
/// sigma_i degenerates to clamp(mu_i). Infinite bounds accept any draw.
inline Vec sample_truncated_normal(const Vec& mu, const Vec& sigma, const BoundBox& b,
                                   Rng& rng) {
    Vec x(mu.size());
    for (std::size_t i = 0; i < mu.size(); ++i) {
        const double lo = b.lower[i], hi = b.upper[i];
        if (sigma[i] <= 0.0) {
            x[i] = std::clamp(mu[i], lo, hi);
            continue;
        }
        double draw = mu[i];
        bool accepted = false;
        for (int attempt = 0; attempt < 100; ++attempt) {
            std::normal_distribution<double> nd(mu[i], sigma[i]);
            draw = nd(rng);
            if (draw >= lo && draw <= hi) {
                accepted = true;
                break;
            }
        }
        x[i] = accepted ? draw : std::clamp(draw, lo, hi);
    }
    return x;
}

/// Empirical quantile used as the level estimate: the ceil(rho * N)-th
/// smallest value, so at least a fraction rho of the sample lies at or
/// below it.
inline double quantile_gamma(const Vec& fvals, double rho) {
    if (fvals.empty()) throw std::invalid_argument("quantile_gamma: empty sample");
    if (rho <= 0.0 || rho >= 1.0) throw std::invalid_argument("quantile_gamma: rho in (0,1)");
    Vec sorted = fvals;
    std::sort(sorted.begin(), sorted.end());
    const auto idx = static_cast<std::size_t>(
        std::ceil(rho * static_cast<double>(sorted.size())));
    return sorted[std::max<std::size_t>(idx, 1) - 1];
}

/// Componentwise mean and sample standard deviation (divisor N-1) of the
/// elite coordinates. One point yields a zero spread.
inline std::pair<Vec, Vec> elite_stats(const std::vector<Vec>& elite_xs) {
    if (elite_xs.empty()) throw std::invalid_argument("elite_stats: no elite points");
    const std::size_t n = elite_xs.front().size();
    const double cnt = static_cast<double>(elite_xs.size());
    Vec mu(n, 0.0), sigma(n, 0.0);
    for (const auto& x : elite_xs)
        for (std::size_t i = 0; i < n; ++i) mu[i] += x[i];
    for (auto& v : mu) v /= cnt;
    if (elite_xs.size() >= 2) {
        for (const auto& x : elite_xs)
            for (std::size_t i = 0; i < n; ++i) {
                const double d = x[i] - mu[i];
                sigma[i] += d * d;
            }
        for (auto& v : sigma) v = std::sqrt(v / (cnt - 1.0));
    }
    return {mu, sigma};
}

/// Convex-combination update of the stored parameters toward fresh elite
/// statistics.
inline void smooth(CeState& state, const Vec& mu_tilde, const Vec& sigma_tilde,
                   double alpha) {
    if (alpha <= 0.0 || alpha > 1.0) throw std::invalid_argument("smooth: alpha in (0,1]");
    for (std::size_t i = 0; i < state.mu.size(); ++i) {
        state.mu[i] = alpha * mu_tilde[i] + (1.0 - alpha) * state.mu[i];
        state.sigma[i] = alpha * sigma_tilde[i] + (1.0 - alpha) * state.sigma[i];
    }
}

/// Finite sampling box: native bounds where finite, otherwise the frame
/// center plus/minus ten poll sizes.
inline BoundBox synth_bounds(const BoundBox& b, const Vec& center, const Vec& Delta) {
    BoundBox out;
    const std::size_t n = b.dim();
    out.lower.resize(n);
    out.upper.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        const bool lo_fin = std::isfinite(b.lower[i]);
        const bool hi_fin = std::isfinite(b.upper[i]);
        out.lower[i] = lo_fin ? b.lower[i] : center[i] - 10.0 * Delta[i];
        out.upper[i] = hi_fin ? b.upper[i] : center[i] + 10.0 * Delta[i];
    }
    return out;
}

/// Sampling parameters when the cache is still small: center the
/// distribution on the poll center with a spread of twice the synthesized
/// box width. With enough cached points, plain elite statistics.
inline std::pair<Vec, Vec> cold_start(const Cache& cache, int ne, const Vec& center,
                                      const BoundBox& synth) {
    if (cache.size() < static_cast<std::size_t>(ne)) {
        Vec sigma(synth.dim());
        for (std::size_t i = 0; i < synth.dim(); ++i)
            sigma[i] = 2.0 * (synth.upper[i] - synth.lower[i]);
        return {center, sigma};
    }
    const auto elite = cache.elites(static_cast<std::size_t>(ne));
    std::vector<Vec> xs;
    xs.reserve(elite.size());
    for (const auto& e : elite) xs.push_back(e.x);
    return elite_stats(xs);
}

enum class SearchDecision { no, normal, escape };

/// Whether the sampling search should run this iteration. Escape overrides
/// the spread trigger while no feasible point exists.
inline SearchDecision should_search(const CeState& state, double sigma_k_norm,
                                    bool feasible_found, int stall_limit) {
    if (!feasible_found && state.infeasible_stall >= stall_limit)
        return SearchDecision::escape;
    if (sigma_k_norm < state.sigma_p_norm) return SearchDecision::normal;
    return SearchDecision::no;
}

/// The sampling search step plugged into the direct-search loop.
class CeSearch final : public SearchStep {
public:
    struct Options {
        CeParams params;
        int stall_limit = 10;
    };

    CeSearch() = default;
    explicit CeSearch(Options opt) : opt_(opt) {}

    std::string_view name() const override { return "ce_search"; }

    std::vector<Vec> propose(const SearchContext& ctx) override {
        const bool feasible_found = ctx.cache.best_feasible().has_value();
        if (feasible_found)
            state_.infeasible_stall = 0;
        else
            state_.infeasible_stall += 1;
        if (ctx.budget_left <= 0) return {};

        const int n = ctx.problem.n;
        const BoundBox synth = synth_bounds(ctx.problem.bounds, ctx.mesh.center, ctx.mesh.Delta);
        auto [mu_k, sigma_k] = cold_start(ctx.cache, opt_.params.ne, ctx.mesh.center, synth);
        const double sk = l2_norm(sigma_k);
        const SearchDecision decision =
            should_search(state_, sk, feasible_found, opt_.stall_limit);
        if (decision == SearchDecision::no) return {};

        if (!state_.activated) {
            state_.sigma_init = sigma_k;
            state_.activated = true;
        }
        Vec mean = mu_k;
        Vec spread = sigma_k;
        if (decision == SearchDecision::escape) {
            if (auto incumbent = ctx.cache.best_entry()) mean = incumbent->x;
            spread = state_.sigma_init;
        }
        last_draw_sigma_ = spread;
        for (auto& s : last_draw_sigma_) s *= 2.0;

        const int want = std::min(opt_.params.samples(n), ctx.budget_left);
        std::vector<Vec> pts;
        pts.reserve(want);
        for (int i = 0; i < want; ++i)
            pts.push_back(sample_truncated_normal(mean, last_draw_sigma_, synth, ctx.rng));

        pending_ = true;
        pending_escape_ = decision == SearchDecision::escape;
        measured_mu_ = std::move(mu_k);
        measured_sigma_ = std::move(sigma_k);
        measured_norm_ = sk;
        pending_drawn_ = want;
        return pts;
    }

    void observe(const SearchContext& ctx) override {
        if (!pending_) return;
        pending_ = false;
        const auto elite = ctx.cache.elites(static_cast<std::size_t>(opt_.params.ne));
        std::vector<Vec> xs;
        xs.reserve(elite.size());
        for (const auto& e : elite) xs.push_back(e.x);
        auto [mu_t, sigma_t] = elite_stats(xs);
        if (state_.mu.empty()) {
            state_.mu = measured_mu_;
            state_.sigma = measured_sigma_;
        }
        smooth(state_, mu_t, sigma_t, opt_.params.alpha);
        // The trigger reference is the spread measured when this step
        // fired; the min keeps it non-increasing across escape activations.
        state_.sigma_p_norm = std::min(state_.sigma_p_norm, measured_norm_);

        CeActivationRecord rec;
        rec.iter = ctx.iter;
        rec.escape = pending_escape_;
        rec.sigma_norm = measured_norm_;
        rec.sigma_p_after = state_.sigma_p_norm;
        rec.stall = state_.infeasible_stall;
        rec.drawn = pending_drawn_;
        rec.eval_watermark = ctx.history.evals.size();
        ctx.history.ce_activations.push_back(rec);
    }

    const CeState& state() const { return state_; }
    const Vec& last_draw_sigma() const { return last_draw_sigma_; }

private:
    Options opt_;
    CeState state_;
    bool pending_ = false;
    bool pending_escape_ = false;
    Vec measured_mu_;
    Vec measured_sigma_;
    double measured_norm_ = 0.0;
    int pending_drawn_ = 0;
    Vec last_draw_sigma_;
};

inline std::function<std::unique_ptr<SearchStep>()> make_ce_search(CeSearch::Options opt) {
    return [opt] { return std::make_unique<CeSearch>(opt); };
}

// ---------------------------------------------------------------------------
// Standalone cross-entropy optimizer.

struct CeTraceRow {
    int iter = 0;
    Vec mu;
    Vec sigma;
    double gamma_hat = kInf;
    double best_f = kInf;
    double best_h = kInf;
};

struct CeResult {
    std::optional<Evaluation> best;
    std::vector<CeTraceRow> trace;
    int evals_used = 0;

    bool ran() const { return !trace.empty(); }
};

/// Iterate sample / elite refit / smooth until the spread norm falls below
/// sigma_stop or the budget cannot cover another full sample. Constraints
/// are handled through the violation-first elite ordering. A budget below
/// one sample yields an empty-trace result.
inline CeResult ce_optimize(const Problem& p, const CeParams& params, const Vec& mu0,
                            const Vec& sigma0, Rng& rng, int budget) {
    if (static_cast<int>(mu0.size()) != p.n || static_cast<int>(sigma0.size()) != p.n)
        throw std::invalid_argument("ce_optimize: parameter dimension mismatch");
    const int ns = params.samples(p.n);
    if (params.ne > ns) throw std::invalid_argument("ce_optimize: ne must not exceed ns");
    const double rho = params.quantile_fraction(p.n);

    CeResult result;
    CeState state;
    state.mu = mu0;
    state.sigma = sigma0;
    std::optional<CacheEntry> incumbent;

    int iter = 0;
    while (result.evals_used + ns <= budget && l2_norm(state.sigma) >= params.sigma_stop) {
        ++iter;
        std::vector<CacheEntry> sample;
        sample.reserve(ns);
        Vec fvals;
        fvals.reserve(ns);
        for (int i = 0; i < ns; ++i) {
            const Vec x = sample_truncated_normal(state.mu, state.sigma, p.bounds, rng);
            Evaluation ev = evaluate(p, x);
            ++result.evals_used;
            CacheEntry e;
            e.x = ev.x;
            e.f = ev.f;
            e.h = ev.h;
            e.status = ev.status;
            e.gen = static_cast<std::uint64_t>(result.evals_used - 1);
            fvals.push_back(ev.f);
            if (!incumbent || &best(e, *incumbent) == &e) incumbent = e;
            sample.push_back(std::move(e));
        }
        const double gamma_hat = quantile_gamma(fvals, rho);

        std::sort(sample.begin(), sample.end(), best_order);
        const std::size_t take = std::min<std::size_t>(params.ne, sample.size());
        std::vector<Vec> elite_xs;
        elite_xs.reserve(take);
        for (std::size_t i = 0; i < take; ++i) elite_xs.push_back(sample[i].x);
        auto [mu_t, sigma_t] = elite_stats(elite_xs);
        smooth(state, mu_t, sigma_t, params.alpha);

        CeTraceRow row;
        row.iter = iter;
        row.mu = state.mu;
        row.sigma = state.sigma;
        row.gamma_hat = gamma_hat;
        row.best_f = incumbent->f;
        row.best_h = incumbent->h;
        result.trace.push_back(std::move(row));
    }

    if (incumbent) {
        Evaluation ev;
        ev.x = incumbent->x;
        ev.f = incumbent->f;
        ev.h = incumbent->h;
        ev.status = incumbent->status;
        result.best = ev;
    }
    return result;
}

/// CSV trace: iter, mu_1..mu_n, sigma_1..sigma_n, gamma_hat, best_f, best_h.
inline void write_ce_trace(std::FILE* out, const CeResult& r, int n) {
    std::fprintf(out, "iter");
    for (int i = 1; i <= n; ++i) std::fprintf(out, ",mu_%d", i);
    for (int i = 1; i <= n; ++i) std::fprintf(out, ",sigma_%d", i);
    std::fprintf(out, ",gamma_hat,best_f,best_h\n");
    for (const auto& row : r.trace) {
        std::fprintf(out, "%d", row.iter);
        for (double v : row.mu) std::fprintf(out, ",%.17g", v);
        for (double v : row.sigma) std::fprintf(out, ",%.17g", v);
        std::fprintf(out, ",%.17g,%.17g,%.17g\n", row.gamma_hat, row.best_f, row.best_h);
    }
}

}  // namespace cemads
