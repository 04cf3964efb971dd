#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "cemads/blackbox.hpp"

// Evaluation cache: every visited point with its objective f, violation h
// and insertion index. The cache drives incumbent selection through a
// binary comparator ("best of two points") that prefers dominance, then
// smaller violation, then the older point. Sorting the cache under the
// induced total preorder yields the elite points used by the sampling
// search.

namespace cemads {

struct CacheEntry {
    Vec x;
    double f = kInf;
    double h = kInf;
    std::uint64_t gen = 0;  // unique, increasing insertion order
    EvalStatus status = EvalStatus::failed;

    bool feasible() const { return h == 0.0; }
};

/// True iff a is at least as good as b in both (f, h) within the same
/// feasibility class, with at least one strict inequality. Points in
/// different classes never dominate each other.
inline bool dominates(const CacheEntry& a, const CacheEntry& b) {
    const bool fa = a.feasible(), fb = b.feasible();
    if (fa && fb) return a.f < b.f;
    if (!fa && !fb) return a.f <= b.f && a.h <= b.h && (a.f < b.f || a.h < b.h);
    return false;
}

/// The best of two evaluated points: dominance first, then smaller
/// violation, then the point generated earlier.
inline const CacheEntry& best(const CacheEntry& a, const CacheEntry& b) {
    if (dominates(a, b) || a.h < b.h) return a;
    if (dominates(b, a) || b.h < a.h) return b;
    return a.gen <= b.gen ? a : b;  // Older
}

/// Strict ordering consistent with best() whenever best() is decisive:
/// feasible entries first by (f, gen); infeasible entries by (h, f, gen).
inline bool best_order(const CacheEntry& a, const CacheEntry& b) {
    const bool fa = a.feasible(), fb = b.feasible();
    if (fa != fb) return fa;
    if (fa) {
        if (a.f != b.f) return a.f < b.f;
        return a.gen < b.gen;
    }
    if (a.h != b.h) return a.h < b.h;
    if (a.f != b.f) return a.f < b.f;
    return a.gen < b.gen;
}

struct InsertResult {
    bool inserted = false;
    std::uint64_t gen = 0;  // new entry's index, or the existing duplicate's
};

class Cache {
public:
    /// Insert an evaluation unless a bitwise-identical point is present.
    InsertResult insert(const Evaluation& ev) {
        auto key = hash_key(ev.x);
        auto [it, fresh] = index_.try_emplace(key, entries_.size());
        if (!fresh) return {false, entries_[it->second].gen};
        CacheEntry e;
        e.x = ev.x;
        e.f = ev.f;
        e.h = ev.h;
        e.gen = next_gen_++;
        e.status = ev.status;
        entries_.push_back(std::move(e));
        return {true, entries_.back().gen};
    }

    bool contains(const Vec& x) const { return index_.count(hash_key(x)) > 0; }

    const std::vector<CacheEntry>& entries() const { return entries_; }
    std::size_t size() const { return entries_.size(); }
    bool empty() const { return entries_.empty(); }

    /// The min(k, size) head of the cache under best_order.
    std::vector<CacheEntry> elites(std::size_t k) const {
        if (k < 1) throw std::invalid_argument("elites: need k >= 1");
        std::vector<const CacheEntry*> ptrs;
        ptrs.reserve(entries_.size());
        for (const auto& e : entries_) ptrs.push_back(&e);
        const std::size_t take = std::min(k, ptrs.size());
        std::partial_sort(ptrs.begin(), ptrs.begin() + take, ptrs.end(),
                          [](const CacheEntry* a, const CacheEntry* b) {
                              return best_order(*a, *b);
                          });
        std::vector<CacheEntry> out;
        out.reserve(take);
        for (std::size_t i = 0; i < take; ++i) out.push_back(*ptrs[i]);
        return out;
    }

    /// Feasible incumbent: argmin f over h == 0 (gen tie-break).
    std::optional<CacheEntry> best_feasible() const {
        const CacheEntry* sel = nullptr;
        for (const auto& e : entries_) {
            if (!e.feasible()) continue;
            if (!sel || e.f < sel->f || (e.f == sel->f && e.gen < sel->gen)) sel = &e;
        }
        if (!sel) return std::nullopt;
        return *sel;
    }

    /// Infeasible incumbent: best_order-minimal entry among h > 0.
    std::optional<CacheEntry> best_infeasible() const {
        const CacheEntry* sel = nullptr;
        for (const auto& e : entries_) {
            if (e.feasible()) continue;
            if (!sel || best_order(e, *sel)) sel = &e;
        }
        if (!sel) return std::nullopt;
        return *sel;
    }

    std::pair<std::optional<CacheEntry>, std::optional<CacheEntry>> incumbents() const {
        return {best_feasible(), best_infeasible()};
    }

    /// Overall incumbent under best(): feasible incumbent when one exists.
    std::optional<CacheEntry> best_entry() const {
        if (auto bf = best_feasible()) return bf;
        return best_infeasible();
    }

    /// CSV dump: gen,x_1..x_n,f,h,status.
    void dump_csv(std::FILE* out) const {
        const std::size_t n = entries_.empty() ? 0 : entries_.front().x.size();
        std::fprintf(out, "gen");
        for (std::size_t i = 1; i <= n; ++i) std::fprintf(out, ",x_%zu", i);
        std::fprintf(out, ",f,h,status\n");
        for (const auto& e : entries_) {
            std::fprintf(out, "%llu", static_cast<unsigned long long>(e.gen));
            for (double v : e.x) std::fprintf(out, ",%.17g", v);
            std::fprintf(out, ",%.17g,%.17g,%s\n", e.f, e.h,
                         e.status == EvalStatus::ok ? "ok" : "failed");
        }
    }

private:
    // Exact (bitwise) coordinate identity: mesh rounding makes resampled
    // points bit-identical, and a tolerance would merge distinct mesh points.
    static std::string hash_key(const Vec& x) {
        std::string key(x.size() * sizeof(double), '\0');
        if (!x.empty()) std::memcpy(key.data(), x.data(), key.size());
        return key;
    }

    std::vector<CacheEntry> entries_;
    std::unordered_map<std::string, std::size_t> index_;
    std::uint64_t next_gen_ = 0;
};

}  // namespace cemads
