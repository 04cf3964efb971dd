#pragma once

#include <cmath>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "cemads/blackbox.hpp"

// Built-in analytical test problems for benchmarking: classic smooth and
// multimodal objectives plus a set of inequality-constrained problems whose
// feasible regions are hard to reach. Every entry documents its dimension,
// constraint count, bounds, a standard start point, a box for drawing
// random starts, and (where an honest derivation exists) the best known
// objective value with its provenance.

namespace cemads {

struct ProblemSpec {
    std::string name;
    int n = 0;
    int m = 0;
    BoundBox bounds;
    Vec start;
    BoundBox start_box;  // random campaign starts are drawn here
    std::optional<double> reference_best;
    std::string ref_provenance;  // "analytic" or "oracle"
    bool multimodal = false;
};

namespace detail {

struct CatalogEntry {
    ProblemSpec spec;
    std::function<EvalOutput(const Vec&)> evaluator;
};

inline BoundBox box(std::size_t n, double lo, double hi) {
    return BoundBox{Vec(n, lo), Vec(n, hi)};
}

inline EvalOutput unconstrained(double f) { return EvalOutput{EvalStatus::ok, f, {}}; }

inline EvalOutput constrained(double f, Vec c) {
    return EvalOutput{EvalStatus::ok, f, std::move(c)};
}

inline std::vector<CatalogEntry> build_catalog() {
    std::vector<CatalogEntry> cat;
    const double inf = kInf;

    auto add = [&cat](ProblemSpec spec, std::function<EvalOutput(const Vec&)> ev) {
        if (spec.start_box.dim() == 0) spec.start_box = spec.bounds;
        cat.push_back({std::move(spec), std::move(ev)});
    };

    // --- smooth unconstrained -------------------------------------------

    add({"SPHERE2", 2, 0, box(2, -10, 10), {2, 2}, {}, 0.0, "analytic", false},
        [](const Vec& x) { return unconstrained(x[0] * x[0] + x[1] * x[1]); });

    add({"ROSENBROCK", 2, 0, box(2, -5, 10), {-1.2, 1}, {}, 0.0, "analytic", false},
        [](const Vec& x) {
            const double a = x[1] - x[0] * x[0], b = 1 - x[0];
            return unconstrained(100 * a * a + b * b);
        });

    add({"BEALE", 2, 0, BoundBox::unbounded(2), {1, 1}, box(2, -4.5, 4.5), 0.0, "analytic",
         false},
        [](const Vec& x) {
            const double t1 = 1.5 - x[0] + x[0] * x[1];
            const double t2 = 2.25 - x[0] + x[0] * x[1] * x[1];
            const double t3 = 2.625 - x[0] + x[0] * x[1] * x[1] * x[1];
            return unconstrained(t1 * t1 + t2 * t2 + t3 * t3);
        });

    for (int n : {6, 10}) {
        Vec start(n);
        for (int i = 0; i < n; ++i) start[i] = (i % 2 == 0) ? -1.2 : 1.0;
        add({"SROSENBR" + std::to_string(n), n, 0, BoundBox::unbounded(n), start,
             box(n, -5, 5), 0.0, "analytic", false},
            [](const Vec& x) {
                double f = 0;
                for (std::size_t i = 0; i + 1 < x.size(); i += 2) {
                    const double a = x[i + 1] - x[i] * x[i], b = 1 - x[i];
                    f += 100 * a * a + b * b;
                }
                return unconstrained(f);
            });
    }

    add({"ARWHEAD10", 10, 0, BoundBox::unbounded(10), Vec(10, 1.0), box(10, -5, 5), 0.0,
         "analytic", false},
        [](const Vec& x) {
            double f = 0;
            const double xn2 = x.back() * x.back();
            for (std::size_t i = 0; i + 1 < x.size(); ++i) {
                const double s = x[i] * x[i] + xn2;
                f += s * s - 4 * x[i] + 3;
            }
            return unconstrained(f);
        });

    add({"BDQRTIC10", 10, 0, BoundBox::unbounded(10), Vec(10, 1.0), box(10, -5, 5),
         std::nullopt, "", false},
        [](const Vec& x) {
            double f = 0;
            const double xn2 = x.back() * x.back();
            for (std::size_t i = 0; i + 4 < x.size(); ++i) {
                const double a = -4 * x[i] + 3;
                const double b = x[i] * x[i] + 2 * x[i + 1] * x[i + 1] +
                                 3 * x[i + 2] * x[i + 2] + 4 * x[i + 3] * x[i + 3] +
                                 5 * xn2;
                f += a * a + b * b;
            }
            return unconstrained(f);
        });

    for (int n : {4, 8, 12}) {
        Vec start(n);
        for (int i = 0; i < n; i += 4) {
            start[i] = 3;
            start[i + 1] = -1;
            start[i + 2] = 0;
            start[i + 3] = 1;
        }
        add({"POWELLSG" + std::to_string(n), n, 0, BoundBox::unbounded(n), start,
             box(n, -5, 5), 0.0, "analytic", false},
            [](const Vec& x) {
                double f = 0;
                for (std::size_t i = 0; i + 3 < x.size(); i += 4) {
                    const double a = x[i] + 10 * x[i + 1];
                    const double b = x[i + 2] - x[i + 3];
                    const double c = x[i + 1] - 2 * x[i + 2];
                    const double d = x[i] - x[i + 3];
                    f += a * a + 5 * b * b + c * c * c * c + 10 * d * d * d * d;
                }
                return unconstrained(f);
            });
    }

    {
        Vec start(10);
        for (int i = 0; i < 10; ++i) start[i] = 1.0 - (i + 1) / 10.0;
        add({"VARDIM10", 10, 0, BoundBox::unbounded(10), start, box(10, -5, 5), 0.0,
             "analytic", false},
            [](const Vec& x) {
                const double n = static_cast<double>(x.size());
                double f = 0, s = 0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double d = x[i] - 1;
                    f += d * d;
                    s += (i + 1) * x[i];
                }
                s -= n * (n + 1) / 2.0;
                f += s * s + s * s * s * s;
                return unconstrained(f);
            });
    }

    add({"TRIDIA10", 10, 0, BoundBox::unbounded(10), Vec(10, 1.0), box(10, -5, 5), 0.0,
         "analytic", false},
        [](const Vec& x) {
            double d0 = x[0] - 1;
            double f = d0 * d0;
            for (std::size_t i = 1; i < x.size(); ++i) {
                const double d = 2 * x[i] - x[i - 1];
                f += (i + 1) * d * d;
            }
            return unconstrained(f);
        });

    // --- multimodal -------------------------------------------------------

    add({"RASTRIGIN", 2, 0, box(2, -5.12, 5.12), {2.5, -1.5}, {}, 0.0, "analytic", true},
        [](const Vec& x) {
            double f = 10.0 * x.size();
            for (double xi : x) f += xi * xi - 10 * std::cos(2 * std::numbers::pi * xi);
            return unconstrained(f);
        });

    add({"GRIEWANK", 10, 0, box(10, -600, 600), Vec(10, 100.0), {}, 0.0, "analytic", true},
        [](const Vec& x) {
            double s = 0, prod = 1;
            for (std::size_t i = 0; i < x.size(); ++i) {
                s += x[i] * x[i];
                prod *= std::cos(x[i] / std::sqrt(i + 1.0));
            }
            return unconstrained(s / 4000.0 - prod + 1.0);
        });

    add({"BRANIN", 2, 0, BoundBox{{-5, 0}, {10, 15}}, {2.5, 7.5}, {},
         0.39788735772973816, "oracle", false},
        [](const Vec& x) {
            const double pi = std::numbers::pi;
            const double b = 5.1 / (4 * pi * pi), c = 5 / pi;
            const double t = 1 / (8 * pi);
            const double a = x[1] - b * x[0] * x[0] + c * x[0] - 6;
            return unconstrained(a * a + 10 * (1 - t) * std::cos(x[0]) + 10);
        });

    // --- constrained ------------------------------------------------------

    {
        Vec start(10, 0.0);
        start[9] = 10.0;
        // min x_10 within distance 10 of (1,...,1) and at least 10 from
        // (-1,...,-1); the floor of the first ball touches the second.
        add({"CRESCENT", 10, 2, BoundBox::unbounded(10), start, box(10, -10, 10), -9.0,
             "analytic", false},
            [](const Vec& x) {
                double s1 = 0, s2 = 0;
                for (double xi : x) {
                    s1 += (xi - 1) * (xi - 1);
                    s2 += (xi + 1) * (xi + 1);
                }
                return constrained(x.back(), {s1 - 100.0, 100.0 - s2});
            });
    }

    // Thin sinusoidal band; the unconstrained optimum of f sits inside it.
    add({"SNAKE", 2, 2, BoundBox::unbounded(2), {0, 2}, box(2, -10, 10), 0.0, "analytic",
         false},
        [](const Vec& x) {
            const double band = std::sin(x[0]);
            const double tx = 5.0, ty = std::sin(5.0) + 0.05;
            const double f = (x[0] - tx) * (x[0] - tx) + (x[1] - ty) * (x[1] - ty);
            return constrained(f, {band - x[1], x[1] - band - 0.1});
        });

    {
        Vec start(10, 5.0);
        add({"DISK", 10, 1, BoundBox::unbounded(10), start, box(10, -10, 10), -10.0,
             "analytic", false},
            [](const Vec& x) {
                double s = 0;
                for (double xi : x) s += xi * xi;
                return constrained(x.back(), {s - 100.0});
            });
    }

    add({"HS19", 2, 2, BoundBox{{13, 0}, {100, 100}}, {20.1, 5.84}, {},
         -6961.8138755801347, "oracle", false},
        [](const Vec& x) {
            const double a = x[0] - 10, b = x[1] - 20;
            const double c1 = -(x[0] - 5) * (x[0] - 5) - (x[1] - 5) * (x[1] - 5) + 100.0;
            const double c2 = (x[0] - 6) * (x[0] - 6) + (x[1] - 5) * (x[1] - 5) - 82.81;
            return constrained(a * a * a + b * b * b, {c1, c2});
        });

    add({"HS83", 5, 6, BoundBox{{78, 33, 27, 27, 27}, {102, 45, 45, 45, 45}},
         {78, 33, 27, 27, 27}, {}, -30665.538671783324, "oracle", false},
        [](const Vec& x) {
            const double g1 = 85.334407 + 0.0056858 * x[1] * x[4] +
                              0.0006262 * x[0] * x[3] - 0.0022053 * x[2] * x[4];
            const double g2 = 80.51249 + 0.0071317 * x[1] * x[4] +
                              0.0029955 * x[0] * x[1] + 0.0021813 * x[2] * x[2];
            const double g3 = 9.300961 + 0.0047026 * x[2] * x[4] +
                              0.0012547 * x[0] * x[2] + 0.0019085 * x[2] * x[3];
            const double f = 5.3578547 * x[2] * x[2] + 0.8356891 * x[0] * x[4] +
                             37.293239 * x[0] - 40792.141;
            return constrained(f, {-g1, g1 - 92.0, 90.0 - g2, g2 - 110.0, 20.0 - g3,
                                   g3 - 25.0});
        });

    {
        Vec start(10, 5.0);
        add({"G2_10", 10, 2, box(10, 0, 10), start, {}, std::nullopt, "", true},
            [](const Vec& x) {
                double sum4 = 0, prod2 = 1, wsum = 0, sum = 0;
                for (std::size_t i = 0; i < x.size(); ++i) {
                    const double c = std::cos(x[i]);
                    sum4 += c * c * c * c;
                    prod2 *= c * c;
                    wsum += (i + 1) * x[i] * x[i];
                    sum += x[i];
                }
                const double f = -std::fabs((sum4 - 2 * prod2) / std::sqrt(wsum));
                double prod = 1;
                for (double xi : x) prod *= xi;
                return constrained(f, {0.75 - prod, sum - 7.5 * x.size()});
            });
    }

    // Himmelblau objective restricted to a crescent-shaped ring overlap.
    add({"MEZMONTES", 2, 2, box(2, 0, 6), {3, 3}, {}, 13.590844571776147, "oracle", false},
        [](const Vec& x) {
            const double a = x[0] * x[0] + x[1] - 11;
            const double b = x[0] + x[1] * x[1] - 7;
            const double c1 =
                (x[0] - 0.05) * (x[0] - 0.05) + (x[1] - 2.5) * (x[1] - 2.5) - 4.84;
            const double c2 = 4.84 - x[0] * x[0] - (x[1] - 2.5) * (x[1] - 2.5);
            return constrained(a * a + b * b, {c1, c2});
        });

    (void)inf;
    return cat;
}

inline const std::vector<CatalogEntry>& catalog_entries() {
    static const std::vector<CatalogEntry> cat = build_catalog();
    return cat;
}

}  // namespace detail

/// All built-in problem descriptions.
inline std::vector<ProblemSpec> catalog() {
    std::vector<ProblemSpec> out;
    for (const auto& e : detail::catalog_entries()) out.push_back(e.spec);
    return out;
}

inline const ProblemSpec& find_spec(const std::string& name) {
    for (const auto& e : detail::catalog_entries())
        if (e.spec.name == name) return e.spec;
    std::string msg = "unknown problem '" + name + "'; valid names:";
    for (const auto& e : detail::catalog_entries()) msg += " " + e.spec.name;
    throw std::out_of_range(msg);
}

/// Instantiate a built-in problem by name. Unknown names raise a lookup
/// error listing the valid ones.
inline Problem make(const std::string& name) {
    for (const auto& e : detail::catalog_entries()) {
        if (e.spec.name != name) continue;
        Problem p;
        p.name = e.spec.name;
        p.n = e.spec.n;
        p.m = e.spec.m;
        p.bounds = e.spec.bounds;
        p.evaluator = e.evaluator;
        return p;
    }
    find_spec(name);  // throws with the listing
    return {};
}

}  // namespace cemads
