#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <numbers>

#include "clexp/common.hpp"

namespace clexp {

struct Rule1D {
    std::vector<double> nodes;
    std::vector<double> weights;
};

// Gauss-Legendre rule on [-1,1]; Newton iteration on P_n with the usual
// Chebyshev initial guess. Cached by order.
inline const Rule1D& gauss_legendre(int n) {
    static std::map<int, Rule1D> cache;
    auto it = cache.find(n);
    if (it != cache.end()) return it->second;
    if (n < 1) throw input_error("gauss_legendre: order must be >= 1");
    Rule1D r;
    r.nodes.resize(n);
    r.weights.resize(n);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
        double pp = 0.0;
        for (int iter = 0; iter < 100; ++iter) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * x * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (x * p0 - p1) / (x * x - 1.0);
            double dx = p0 / pp;
            x -= dx;
            if (std::abs(dx) < 1e-15) break;
        }
        r.nodes[i] = -x;
        r.nodes[n - 1 - i] = x;
        r.weights[i] = 2.0 / ((1.0 - x * x) * pp * pp);
        r.weights[n - 1 - i] = r.weights[i];
    }
    return cache.emplace(n, std::move(r)).first->second;
}

// Rule mapped to [a,b].
inline Rule1D gauss_legendre_on(int n, double a, double b) {
    const Rule1D& base = gauss_legendre(n);
    Rule1D r;
    r.nodes.reserve(n);
    r.weights.reserve(n);
    const double mid = 0.5 * (a + b), half = 0.5 * (b - a);
    for (int i = 0; i < n; ++i) {
        r.nodes.push_back(mid + half * base.nodes[i]);
        r.weights.push_back(half * base.weights[i]);
    }
    return r;
}

struct QuadratureConfig {
    int phi_order = 8;        // per-axis start order for field cubature
    int phi_max_order = 64;   // doubling cap
    int s_order = 8;          // per-axis start order on [0,1]^k
    int s_max_order = 32;
    double tol = 1e-8;        // relative-change stopping criterion
    double r_min = 8.0;       // minimum half-width when R = infinity
    double fd_step = 1e-3;    // base step for s-derivatives
    int angular_points = 32;  // circle rule for N = 2 shells/disks
};

// Tensor-product cubature of f over prod_i [0,1] sliced per axis by `rules`.
// Multi-index loop, innermost axis fastest; deterministic summation order.
template <typename F>
Complex tensor_integrate(const std::vector<Rule1D>& rules, F&& f) {
    const int k = static_cast<int>(rules.size());
    if (k == 0) return f(std::vector<double>{});
    std::vector<int> idx(k, 0);
    std::vector<double> x(k);
    Complex sum = 0.0;
    while (true) {
        double w = 1.0;
        for (int i = 0; i < k; ++i) {
            x[i] = rules[i].nodes[idx[i]];
            w *= rules[i].weights[idx[i]];
        }
        sum += w * f(x);
        int i = k - 1;
        while (i >= 0 && ++idx[i] == static_cast<int>(rules[i].nodes.size())) idx[i--] = 0;
        if (i < 0) break;
    }
    return sum;
}

struct AdaptiveResult {
    Complex value = 0.0;
    double residual = 0.0;  // last relative change
    bool converged = true;
    long evaluations = 0;
};

// Integrate over [0,1]^k with per-axis order doubling until the relative
// change drops below tol or max_order is hit.
template <typename F>
AdaptiveResult adaptive_unit_cube(int k, int order, int max_order, double tol, F&& f) {
    AdaptiveResult res;
    Complex prev = 0.0;
    bool have_prev = false;
    for (int n = order; n <= max_order; n *= 2) {
        std::vector<Rule1D> rules(k, gauss_legendre_on(n, 0.0, 1.0));
        Complex val = tensor_integrate(rules, f);
        long evals = 1;
        for (int i = 0; i < k; ++i) evals *= n;
        res.evaluations += evals;
        if (have_prev) {
            double change = std::abs(val - prev) / std::max(1.0, std::abs(val));
            res.residual = change;
            if (change < tol) {
                res.value = val;
                res.converged = true;
                return res;
            }
        }
        prev = val;
        have_prev = true;
        res.value = val;
    }
    res.converged = (k == 0);
    return res;
}

// ---------------------------------------------------------------------------
// Per-site integration domains. A site carries N field components; the
// constraint |phi(x)| <= R is an interval for N = 1 and a disk for N = 2.
// Shells (surface measures) appear in the integration-by-parts backend.
// ---------------------------------------------------------------------------

enum class SiteRegion { Ball, Annulus, FullSpace };

struct SiteDomain {
    SiteRegion region = SiteRegion::FullSpace;
    double r_inner = 0.0;  // annulus only
    double r_outer = 0.0;  // ball/annulus; for FullSpace the effective half-width
};

// Nodes/weights for one site in R^N.
struct SiteNodes {
    std::vector<std::vector<double>> points;  // each of size N
    std::vector<double> weights;
};

inline SiteNodes site_nodes(const SiteDomain& d, int ncomp, int order, int angular_points) {
    SiteNodes out;
    if (ncomp == 1) {
        auto push_interval = [&](double a, double b) {
            Rule1D r = gauss_legendre_on(order, a, b);
            for (size_t i = 0; i < r.nodes.size(); ++i) {
                out.points.push_back({r.nodes[i]});
                out.weights.push_back(r.weights[i]);
            }
        };
        switch (d.region) {
            case SiteRegion::Ball: push_interval(-d.r_outer, d.r_outer); break;
            case SiteRegion::FullSpace: push_interval(-d.r_outer, d.r_outer); break;
            case SiteRegion::Annulus:
                push_interval(-d.r_outer, -d.r_inner);
                push_interval(d.r_inner, d.r_outer);
                break;
        }
        return out;
    }
    if (ncomp == 2) {
        double a = (d.region == SiteRegion::Annulus) ? d.r_inner : 0.0;
        double b = d.r_outer;
        Rule1D rad = gauss_legendre_on(order, a, b);
        const int M = angular_points;
        for (size_t i = 0; i < rad.nodes.size(); ++i) {
            double rho = rad.nodes[i];
            double wrad = rad.weights[i] * rho * (2.0 * std::numbers::pi / M);
            for (int j = 0; j < M; ++j) {
                double th = 2.0 * std::numbers::pi * j / M;
                out.points.push_back({rho * std::cos(th), rho * std::sin(th)});
                out.weights.push_back(wrad);
            }
        }
        return out;
    }
    // N >= 3: tensor box with a ball/annulus indicator. Coarse but only used
    // beyond the configurations the engine is sized for.
    std::vector<Rule1D> axes(ncomp, gauss_legendre_on(order, -d.r_outer, d.r_outer));
    std::vector<int> idx(ncomp, 0);
    while (true) {
        std::vector<double> p(ncomp);
        double w = 1.0, n2 = 0.0;
        for (int i = 0; i < ncomp; ++i) {
            p[i] = axes[i].nodes[idx[i]];
            w *= axes[i].weights[idx[i]];
            n2 += p[i] * p[i];
        }
        double nr = std::sqrt(n2);
        bool inside = (d.region == SiteRegion::FullSpace) ||
                      (d.region == SiteRegion::Ball && nr <= d.r_outer) ||
                      (d.region == SiteRegion::Annulus && nr > d.r_inner && nr <= d.r_outer);
        if (inside) {
            out.points.push_back(p);
            out.weights.push_back(w);
        }
        int i = ncomp - 1;
        while (i >= 0 && ++idx[i] == static_cast<int>(axes[i].nodes.size())) idx[i--] = 0;
        if (i < 0) break;
    }
    return out;
}

// Tensor cubature over a product of site domains; f sees the flat field
// vector (site-major, component-minor).
template <typename F>
Complex sites_integrate(const std::vector<SiteNodes>& sites, F&& f) {
    const int ns = static_cast<int>(sites.size());
    int dim = 0;
    for (const auto& s : sites) {
        if (s.points.empty()) return 0.0;
        dim += static_cast<int>(s.points.front().size());
    }
    std::vector<int> idx(ns, 0);
    std::vector<double> phi(dim);
    Complex sum = 0.0;
    while (true) {
        double w = 1.0;
        int off = 0;
        for (int i = 0; i < ns; ++i) {
            const auto& p = sites[i].points[idx[i]];
            for (double c : p) phi[off++] = c;
            w *= sites[i].weights[idx[i]];
        }
        sum += w * f(phi);
        int i = ns - 1;
        while (i >= 0 && ++idx[i] == static_cast<int>(sites[i].points.size())) idx[i--] = 0;
        if (i < 0) break;
    }
    return sum;
}

// ---------------------------------------------------------------------------
// Finite differences. Central stencils for d^k/dx^k, k <= 4, plus mixed
// partials over several coordinates and one Richardson level. The same
// stencil is shared by the engine and oracle correlation paths.
// ---------------------------------------------------------------------------

struct Stencil1D {
    std::vector<double> offsets;  // in units of h
    std::vector<double> coeffs;   // divide by h^k
    int order;                    // derivative order k
};

inline Stencil1D central_stencil(int k) {
    switch (k) {
        case 0: return {{0.0}, {1.0}, 0};
        case 1: return {{-1.0, 1.0}, {-0.5, 0.5}, 1};
        case 2: return {{-1.0, 0.0, 1.0}, {1.0, -2.0, 1.0}, 2};
        case 3: return {{-2.0, -1.0, 1.0, 2.0}, {-0.5, 1.0, -1.0, 0.5}, 3};
        case 4: return {{-2.0, -1.0, 0.0, 1.0, 2.0}, {1.0, -4.0, 6.0, -4.0, 1.0}, 4};
        default: throw input_error("central_stencil: derivative order > 4 unsupported");
    }
}

// Mixed partial of f at `base` w.r.t. coordinates `coords` with multiplicity
// given by repeats in the list. f is called with the perturbed vector.
template <typename F>
Complex mixed_partial_once(F&& f, std::vector<double> base,
                           const std::vector<int>& coords, double h) {
    std::map<int, int> mult;
    for (int c : coords) mult[c]++;
    std::vector<std::pair<int, Stencil1D>> stencils;
    stencils.reserve(mult.size());
    for (auto& [c, k] : mult) stencils.emplace_back(c, central_stencil(k));

    Complex sum = 0.0;
    std::vector<int> idx(stencils.size(), 0);
    double hpow = 1.0;
    for (auto& [c, st] : stencils) hpow *= std::pow(h, st.order);
    while (true) {
        double coeff = 1.0;
        std::vector<double> x = base;
        for (size_t i = 0; i < stencils.size(); ++i) {
            const auto& [c, st] = stencils[i];
            coeff *= st.coeffs[idx[i]];
            x[c] += st.offsets[idx[i]] * h;
        }
        if (coeff != 0.0) sum += coeff * f(x);
        int i = static_cast<int>(stencils.size()) - 1;
        while (i >= 0 && ++idx[i] == static_cast<int>(stencils[i].second.offsets.size()))
            idx[i--] = 0;
        if (i < 0) break;
    }
    return sum / hpow;
}

struct FdResult {
    Complex value = 0.0;
    double error_estimate = 0.0;
};

// One Richardson level: central stencils have even error series, so
// (4 D(h/2) - D(h)) / 3 cancels the h^2 term.
template <typename F>
FdResult mixed_partial(F&& f, const std::vector<double>& base,
                       const std::vector<int>& coords, double h) {
    Complex d1 = mixed_partial_once(f, base, coords, h);
    Complex d2 = mixed_partial_once(f, base, coords, 0.5 * h);
    FdResult out;
    out.value = (4.0 * d2 - d1) / 3.0;
    out.error_estimate = std::abs(d2 - d1) / 3.0;
    return out;
}

}  // namespace clexp
