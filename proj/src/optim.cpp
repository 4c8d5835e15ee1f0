#include "qmest/optim.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace qmest::optim {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
constexpr double kInf = std::numeric_limits<double>::infinity();

double safe_eval(const Objective& f, const std::vector<double>& x, int& evals) {
    ++evals;
    const double v = f(x);
    return std::isfinite(v) ? v : kInf;
}

double dot(const std::vector<double>& a, const std::vector<double>& b) {
    return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

std::vector<double> gradient(const Objective& f, const std::vector<double>& x, double fx,
                             const Box& box, double rel_step, int& evals) {
    const std::size_t n = x.size();
    std::vector<double> g(n, 0.0);
    std::vector<double> xp = x;
    for (std::size_t i = 0; i < n; ++i) {
        const double h = rel_step * std::max(1.0, std::abs(x[i]));
        const bool up_ok = x[i] + h <= box.upper[i];
        const bool down_ok = x[i] - h >= box.lower[i];
        if (up_ok && down_ok) {
            xp[i] = x[i] + h;
            const double fp = safe_eval(f, xp, evals);
            xp[i] = x[i] - h;
            const double fm = safe_eval(f, xp, evals);
            g[i] = (fp - fm) / (2.0 * h);
        } else if (up_ok) {
            xp[i] = x[i] + h;
            g[i] = (safe_eval(f, xp, evals) - fx) / h;
        } else if (down_ok) {
            xp[i] = x[i] - h;
            g[i] = (fx - safe_eval(f, xp, evals)) / h;
        }
        if (!std::isfinite(g[i])) g[i] = 0.0;
        xp[i] = x[i];
    }
    return g;
}

// Zero the components that point out of the box at an active bound.
std::vector<double> project_gradient(const std::vector<double>& g, const std::vector<double>& x,
                                     const Box& box) {
    std::vector<double> pg = g;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if ((x[i] <= box.lower[i] && g[i] > 0.0) || (x[i] >= box.upper[i] && g[i] < 0.0)) {
            pg[i] = 0.0;
        }
    }
    return pg;
}

using Matrix = std::vector<std::vector<double>>;

Matrix identity(std::size_t n, double scale = 1.0) {
    Matrix m(n, std::vector<double>(n, 0.0));
    for (std::size_t i = 0; i < n; ++i) m[i][i] = scale;
    return m;
}

}  // namespace

std::vector<double> Box::clamp(std::vector<double> x) const {
    for (std::size_t i = 0; i < x.size(); ++i) x[i] = std::clamp(x[i], lower[i], upper[i]);
    return x;
}

bool Box::contains(const std::vector<double>& x) const {
    for (std::size_t i = 0; i < x.size(); ++i) {
        if (!(x[i] >= lower[i] && x[i] <= upper[i])) return false;
    }
    return true;
}

MinimizeResult quasi_newton_box(const Objective& f, std::vector<double> x0, const Box& box,
                                const QuasiNewtonOptions& opt) {
    const std::size_t n = x0.size();
    MinimizeResult res;
    std::vector<double> x = box.clamp(std::move(x0));
    double fx = safe_eval(f, x, res.evaluations);
    if (!std::isfinite(fx)) {
        res.x = x;
        return res;
    }
    std::vector<double> g = gradient(f, x, fx, box, opt.rel_step, res.evaluations);
    Matrix H = identity(n);
    bool fresh = true;  // H is the (unscaled) identity

    for (res.iterations = 0; res.iterations < opt.max_iterations; ++res.iterations) {
        const auto pg = project_gradient(g, x, box);
        double pg_norm = 0.0;
        for (double v : pg) pg_norm = std::max(pg_norm, std::abs(v));
        if (pg_norm <= opt.pgtol) {
            res.converged = true;
            break;
        }

        std::vector<double> d(n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            if (pg[i] == 0.0) continue;  // active: held at its bound
            for (std::size_t j = 0; j < n; ++j) d[i] -= H[i][j] * pg[j];
        }
        double slope = dot(pg, d);
        if (!(slope < 0.0)) {
            H = identity(n);
            fresh = true;
            for (std::size_t i = 0; i < n; ++i) d[i] = -pg[i];
            slope = dot(pg, d);
        }

        double t = 1.0;
        if (fresh) {
            double dmax = 0.0;
            for (double v : d) dmax = std::max(dmax, std::abs(v));
            if (dmax > 1.0) t = 1.0 / dmax;
        }

        std::vector<double> x_new;
        double f_new = kInf;
        bool accepted = false;
        for (int k = 0; k < 60; ++k) {
            x_new = x;
            for (std::size_t i = 0; i < n; ++i) x_new[i] += t * d[i];
            x_new = box.clamp(std::move(x_new));
            std::vector<double> step(n);
            for (std::size_t i = 0; i < n; ++i) step[i] = x_new[i] - x[i];
            const double decrease = dot(g, step);
            f_new = safe_eval(f, x_new, res.evaluations);
            if (f_new <= fx + 1e-4 * decrease && f_new < kInf) {
                accepted = true;
                break;
            }
            t *= 0.5;
        }

        if (!accepted) {
            if (!fresh) {
                H = identity(n);
                fresh = true;
                continue;
            }
            break;  // no progress along steepest descent either
        }

        const double f_old = fx;
        std::vector<double> g_new = gradient(f, x_new, f_new, box, opt.rel_step, res.evaluations);
        std::vector<double> s(n), y(n);
        for (std::size_t i = 0; i < n; ++i) {
            s[i] = x_new[i] - x[i];
            y[i] = g_new[i] - g[i];
        }
        x = std::move(x_new);
        fx = f_new;
        g = std::move(g_new);

        if (f_old - fx <= opt.factr * kEps * std::max({std::abs(f_old), std::abs(fx), 1.0})) {
            res.converged = true;
            ++res.iterations;
            break;
        }

        const double sy = dot(s, y);
        if (sy > 1e-10 * std::sqrt(dot(s, s) * dot(y, y))) {
            if (fresh) {
                H = identity(n, sy / dot(y, y));
                fresh = false;
            }
            // H+ = (I - rho s y^T) H (I - rho y s^T) + rho s s^T
            const double rho = 1.0 / sy;
            std::vector<double> Hy(n, 0.0);
            for (std::size_t i = 0; i < n; ++i)
                for (std::size_t j = 0; j < n; ++j) Hy[i] += H[i][j] * y[j];
            const double yHy = dot(y, Hy);
            for (std::size_t i = 0; i < n; ++i) {
                for (std::size_t j = 0; j < n; ++j) {
                    H[i][j] += -rho * (s[i] * Hy[j] + Hy[i] * s[j]) +
                               (rho * rho * yHy + rho) * s[i] * s[j];
                }
            }
        }
    }
    res.x = std::move(x);
    res.value = fx;
    return res;
}

MinimizeResult nelder_mead_box(const Objective& f, std::vector<double> x0, const Box& box,
                               const NelderMeadOptions& opt) {
    const std::size_t n = x0.size();
    MinimizeResult res;
    x0 = box.clamp(std::move(x0));

    std::vector<std::vector<double>> pts(n + 1, x0);
    std::vector<double> vals(n + 1);
    for (std::size_t i = 0; i < n; ++i) {
        const double width = box.upper[i] - box.lower[i];
        double h = opt.initial_step * std::max(std::abs(x0[i]), 1e-3 * width);
        if (h == 0.0) h = opt.initial_step;
        // Step away from the nearer wall so the simplex is not degenerate.
        if (x0[i] + h > box.upper[i]) h = -h;
        pts[i + 1][i] = std::clamp(x0[i] + h, box.lower[i], box.upper[i]);
    }
    for (std::size_t i = 0; i <= n; ++i) vals[i] = safe_eval(f, pts[i], res.evaluations);

    std::vector<std::size_t> order(n + 1);
    while (res.evaluations < opt.max_evaluations) {
        ++res.iterations;
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
        {
            std::vector<std::vector<double>> p2;
            std::vector<double> v2;
            for (auto k : order) {
                p2.push_back(pts[k]);
                v2.push_back(vals[k]);
            }
            pts.swap(p2);
            vals.swap(v2);
        }

        double fspread = vals[n] - vals[0];
        double xspread = 0.0;
        for (std::size_t i = 1; i <= n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                xspread = std::max(xspread, std::abs(pts[i][j] - pts[0][j]) /
                                                (1.0 + std::abs(pts[0][j])));
        if (std::isfinite(fspread) && fspread <= opt.f_tol * (std::abs(vals[0]) + opt.f_tol) &&
            xspread <= opt.x_tol) {
            res.converged = true;
            break;
        }
        if (xspread <= 1e-15) {  // collapsed without meeting f_tol
            res.converged = std::isfinite(vals[0]);
            break;
        }

        std::vector<double> centroid(n, 0.0);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) centroid[j] += pts[i][j] / static_cast<double>(n);

        const auto along = [&](double coef) {
            std::vector<double> p(n);
            for (std::size_t j = 0; j < n; ++j) p[j] = centroid[j] + coef * (pts[n][j] - centroid[j]);
            return box.clamp(std::move(p));
        };

        auto xr = along(-1.0);
        const double fr = safe_eval(f, xr, res.evaluations);
        if (fr < vals[0]) {
            auto xe = along(-2.0);
            const double fe = safe_eval(f, xe, res.evaluations);
            if (fe < fr) {
                pts[n] = std::move(xe);
                vals[n] = fe;
            } else {
                pts[n] = std::move(xr);
                vals[n] = fr;
            }
        } else if (fr < vals[n - 1]) {
            pts[n] = std::move(xr);
            vals[n] = fr;
        } else {
            const bool outside = fr < vals[n];
            auto xc = along(outside ? -0.5 : 0.5);
            const double fc = safe_eval(f, xc, res.evaluations);
            if (fc < std::min(fr, vals[n])) {
                pts[n] = std::move(xc);
                vals[n] = fc;
            } else {
                for (std::size_t i = 1; i <= n; ++i) {
                    for (std::size_t j = 0; j < n; ++j)
                        pts[i][j] = pts[0][j] + 0.5 * (pts[i][j] - pts[0][j]);
                    vals[i] = safe_eval(f, pts[i], res.evaluations);
                }
            }
        }
    }
    const auto best = std::min_element(vals.begin(), vals.end()) - vals.begin();
    res.x = pts[static_cast<std::size_t>(best)];
    res.value = vals[static_cast<std::size_t>(best)];
    return res;
}

ScalarMinimum brent_minimize(const std::function<double(double)>& f, double a, double b,
                             double tol) {
    // Brent (1973), as in netlib fmin.
    const double c = 0.5 * (3.0 - std::sqrt(5.0));
    const double eps = std::sqrt(kEps);
    ScalarMinimum out;
    const auto eval = [&](double x) {
        ++out.evaluations;
        const double v = f(x);
        return std::isfinite(v) ? v : kInf;
    };

    double v = a + c * (b - a);
    double w = v;
    double x = v;
    double d = 0.0;
    double e = 0.0;
    double fx = eval(x);
    double fv = fx;
    double fw = fx;
    const double tol3 = tol / 3.0;

    for (;;) {
        const double xm = 0.5 * (a + b);
        const double tol1 = eps * std::abs(x) + tol3;
        const double t2 = 2.0 * tol1;
        if (std::abs(x - xm) <= t2 - 0.5 * (b - a)) break;

        double p = 0.0, q = 0.0, r = 0.0;
        if (std::abs(e) > tol1) {
            r = (x - w) * (fx - fv);
            q = (x - v) * (fx - fw);
            p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0.0) p = -p;
            else q = -q;
            r = e;
            e = d;
        }
        if (std::abs(p) >= std::abs(0.5 * q * r) || p <= q * (a - x) || p >= q * (b - x)) {
            e = (x < xm) ? b - x : a - x;  // golden-section step
            d = c * e;
        } else {
            d = p / q;  // parabolic step
            const double u = x + d;
            if (u - a < t2 || b - u < t2) d = (x < xm) ? tol1 : -tol1;
        }

        const double u = (std::abs(d) >= tol1) ? x + d : (d > 0.0 ? x + tol1 : x - tol1);
        const double fu = eval(u);
        if (fu <= fx) {
            if (u < x) b = x;
            else a = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u;
            else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }
    out.x = x;
    out.value = fx;
    return out;
}

}  // namespace qmest::optim
