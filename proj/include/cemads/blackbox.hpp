#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <limits>
#include <mutex>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include <unistd.h>

// Problem model for inequality-constrained blackbox optimization:
//   minimize f(x) over x in [lower, upper] subject to c_j(x) <= 0.
// f and c come from an arbitrary evaluator (analytic formula or external
// simulation) that may fail to return a value at all.

namespace cemads {

using Vec = std::vector<double>;

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Per-coordinate box; entries may be -inf / +inf for unbounded coordinates.
struct BoundBox {
    Vec lower;
    Vec upper;

    std::size_t dim() const { return lower.size(); }

    static BoundBox unbounded(std::size_t n) {
        return BoundBox{Vec(n, -kInf), Vec(n, kInf)};
    }

    bool finite() const {
        for (double v : lower)
            if (!std::isfinite(v)) return false;
        for (double v : upper)
            if (!std::isfinite(v)) return false;
        return true;
    }
};

enum class EvalStatus { ok, failed };

/// Raw evaluator output: objective plus constraint values, or a failure
/// (a simulation that crashed or did not finish).
struct EvalOutput {
    EvalStatus status = EvalStatus::ok;
    double f = kInf;
    Vec c;

    static EvalOutput failure() { return EvalOutput{EvalStatus::failed, kInf, {}}; }
};

/// The blackbox being optimized. Immutable after construction.
struct Problem {
    std::string name;
    int n = 0;
    int m = 0;
    BoundBox bounds;
    std::function<EvalOutput(const Vec&)> evaluator;
    // Evaluators that cannot run concurrently (e.g. a simulation writing to
    // a fixed scratch directory) set this; the campaign runner then
    // serializes calls through eval_mutex.
    bool serial = false;
    std::shared_ptr<std::mutex> eval_mutex = std::make_shared<std::mutex>();
};

inline bool within_bounds(const BoundBox& b, const Vec& x) {
    if (b.lower.size() != x.size())
        throw std::invalid_argument("within_bounds: dimension mismatch");
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < b.lower[i] || x[i] > b.upper[i]) return false;
    }
    return true;
}

inline Vec clamp_to_bounds(const BoundBox& b, Vec x) {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (x[i] < b.lower[i]) x[i] = b.lower[i];
        if (x[i] > b.upper[i]) x[i] = b.upper[i];
    }
    return x;
}

/// Aggregate constraint violation: sum of squared positive parts inside the
/// bound box, +inf outside it or on evaluation failure. Zero exactly on the
/// feasible set.
inline double violation(const Vec& c, bool in_bounds, EvalStatus status) {
    if (!in_bounds || status == EvalStatus::failed) return kInf;
    double h = 0.0;
    for (double cj : c) {
        if (cj > 0.0) h += cj * cj;
    }
    return h;
}

/// An evaluated point: coordinates, objective, violation, raw constraints.
struct Evaluation {
    Vec x;
    double f = kInf;
    double h = kInf;
    Vec c;
    EvalStatus status = EvalStatus::failed;

    bool feasible() const { return h == 0.0; }
};

/// Run the problem's evaluator at x and derive (f, h). Evaluator exceptions
/// and non-finite outputs become failed evaluations, never propagated
/// errors; callers charge each call against their evaluation budget.
inline Evaluation evaluate(const Problem& p, const Vec& x) {
    if (static_cast<int>(x.size()) != p.n)
        throw std::invalid_argument("evaluate: point dimension does not match problem");
    Evaluation ev;
    ev.x = x;
    EvalOutput out;
    try {
        if (p.serial) {
            std::lock_guard<std::mutex> lock(*p.eval_mutex);
            out = p.evaluator(x);
        } else {
            out = p.evaluator(x);
        }
    } catch (...) {
        out = EvalOutput::failure();
    }
    if (out.status == EvalStatus::ok) {
        if (!std::isfinite(out.f) || static_cast<int>(out.c.size()) != p.m)
            out.status = EvalStatus::failed;
        for (double cj : out.c)
            if (!std::isfinite(cj)) out.status = EvalStatus::failed;
    }
    ev.status = out.status;
    const bool in_box = within_bounds(p.bounds, x);
    if (out.status == EvalStatus::ok) {
        ev.f = out.f;
        ev.c = out.c;
        ev.h = violation(ev.c, in_box, ev.status);
    } else {
        ev.f = kInf;
        ev.h = kInf;
    }
    return ev;
}

/// Description of an external blackbox executable. The evaluator writes the
/// point to a temporary file (one coordinate per line, full precision),
/// invokes the executable with that path, and reads "f c_1 ... c_m" from
/// its standard output. Nonzero exit status or unparsable output yields a
/// failed evaluation.
struct ExternalSpec {
    std::string exe;
    std::vector<std::string> args;  // "{in}" is replaced by the input path;
                                    // without it the path is appended last
    std::string name = "external";
    int n = 0;
    int m = 0;
    BoundBox bounds;  // defaults to unbounded when left empty
    bool serial = false;
};

namespace detail {

inline std::string shell_quote(const std::string& s) {
    std::string q = "'";
    for (char ch : s) {
        if (ch == '\'')
            q += "'\\''";
        else
            q += ch;
    }
    q += "'";
    return q;
}

inline bool parse_tokens(const std::string& text, int count, Vec& out) {
    out.clear();
    const char* p = text.c_str();
    char* end = nullptr;
    for (int i = 0; i < count; ++i) {
        double v = std::strtod(p, &end);
        if (end == p) return false;
        out.push_back(v);
        p = end;
    }
    return true;
}

}  // namespace detail

inline Problem spawn_external(const ExternalSpec& spec) {
    if (spec.n < 1) throw std::invalid_argument("spawn_external: dimension must be positive");
    if (std::FILE* f = std::fopen(spec.exe.c_str(), "rb")) {
        std::fclose(f);
    } else {
        throw std::runtime_error("spawn_external: executable not found: " + spec.exe);
    }
    Problem p;
    p.name = spec.name;
    p.n = spec.n;
    p.m = spec.m;
    p.bounds = spec.bounds.dim() == static_cast<std::size_t>(spec.n)
                   ? spec.bounds
                   : BoundBox::unbounded(spec.n);
    p.serial = spec.serial;
    const std::string exe = spec.exe;
    const std::vector<std::string> args = spec.args;
    const int m = spec.m;
    p.evaluator = [exe, args, m](const Vec& x) -> EvalOutput {
        char tmpl[] = "/tmp/cemads_in_XXXXXX";
        int fd = mkstemp(tmpl);
        if (fd < 0) return EvalOutput::failure();
        std::string in_path = tmpl;
        {
            std::FILE* f = fdopen(fd, "w");
            if (!f) {
                close(fd);
                std::remove(in_path.c_str());
                return EvalOutput::failure();
            }
            for (double v : x) std::fprintf(f, "%.17g\n", v);
            std::fclose(f);
        }
        std::string cmd = detail::shell_quote(exe);
        bool substituted = false;
        for (const auto& a : args) {
            if (a == "{in}") {
                cmd += " " + detail::shell_quote(in_path);
                substituted = true;
            } else {
                cmd += " " + detail::shell_quote(a);
            }
        }
        if (!substituted) cmd += " " + detail::shell_quote(in_path);
        cmd += " 2>/dev/null";

        EvalOutput out;
        std::FILE* pipe = popen(cmd.c_str(), "r");
        if (!pipe) {
            std::remove(in_path.c_str());
            return EvalOutput::failure();
        }
        std::string stdout_text;
        char buf[4096];
        std::size_t got;
        while ((got = std::fread(buf, 1, sizeof buf, pipe)) > 0)
            stdout_text.append(buf, got);
        int rc = pclose(pipe);
        std::remove(in_path.c_str());

        if (rc != 0) return EvalOutput::failure();
        Vec vals;
        if (!detail::parse_tokens(stdout_text, 1 + m, vals)) return EvalOutput::failure();
        out.status = EvalStatus::ok;
        out.f = vals[0];
        out.c.assign(vals.begin() + 1, vals.end());
        return out;
    };
    return p;
}

}  // namespace cemads
