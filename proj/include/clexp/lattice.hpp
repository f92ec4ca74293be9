#pragma once

#include <cmath>
#include <limits>
#include <optional>

#include "clexp/common.hpp"

namespace clexp {

// Finite metric space of sites, each carrying `ncomp` real field components.
// Immutable after construction.
class Lattice {
public:
    enum class Preset { Torus1D, Torus2D, Explicit };

    // 1D torus Z/L with graph distance.
    static Lattice torus1d(int L, int ncomp) {
        if (L < 1) throw input_error("torus1d: L must be >= 1");
        std::vector<std::vector<double>> d(L, std::vector<double>(L, 0.0));
        for (int i = 0; i < L; ++i)
            for (int j = 0; j < L; ++j) {
                int diff = std::abs(i - j);
                d[i][j] = std::min(diff, L - diff);
            }
        return Lattice(std::move(d), ncomp, Preset::Torus1D, L);
    }

    // L x L torus with graph (L1) distance; site id = row * L + col.
    static Lattice torus2d(int L, int ncomp) {
        if (L < 1) throw input_error("torus2d: L must be >= 1");
        int n = L * L;
        auto ring = [L](int a, int b) {
            int diff = std::abs(a - b);
            return std::min(diff, L - diff);
        };
        std::vector<std::vector<double>> d(n, std::vector<double>(n, 0.0));
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j)
                d[i][j] = ring(i / L, j / L) + ring(i % L, j % L);
        return Lattice(std::move(d), ncomp, Preset::Torus2D, L);
    }

    // Explicit distance table; checked for symmetry, zero diagonal and the
    // triangle inequality.
    static Lattice explicit_metric(std::vector<std::vector<double>> d, int ncomp) {
        size_t n = d.size();
        for (size_t i = 0; i < n; ++i) {
            if (d[i].size() != n) throw input_error("metric table is not square");
            if (d[i][i] != 0.0) throw input_error("metric diagonal must be zero");
            for (size_t j = 0; j < n; ++j) {
                if (d[i][j] < 0.0) throw input_error("metric entries must be nonnegative");
                if (std::abs(d[i][j] - d[j][i]) > 1e-12)
                    throw input_error("metric table is not symmetric");
            }
        }
        for (size_t i = 0; i < n; ++i)
            for (size_t j = 0; j < n; ++j)
                for (size_t k = 0; k < n; ++k)
                    if (d[i][j] > d[i][k] + d[k][j] + 1e-12)
                        throw input_error("metric violates the triangle inequality");
        return Lattice(std::move(d), ncomp, Preset::Explicit, 0);
    }

    int size() const { return static_cast<int>(metric_.size()); }
    int ncomp() const { return ncomp_; }
    int dof() const { return size() * ncomp_; }
    Preset preset() const { return preset_; }
    int side() const { return side_; }
    bool vertex_transitive() const { return preset_ != Preset::Explicit; }

    double distance(SiteId x, SiteId y) const {
        check_site(x);
        check_site(y);
        return metric_[x][y];
    }

    // flat index of field component (x, n)
    int flat(SiteId x, int n) const { return x * ncomp_ + n; }

    // Total edge length of a minimum spanning tree over `points`, Prim on the
    // complete graph; ties broken by (site, site) lexicographic order so the
    // tree itself is deterministic.
    double tree_size(const SiteSet& points) const {
        return mst(points).total;
    }

    struct Mst {
        double total = 0.0;
        std::vector<SitePair> edges;
    };

    Mst mst(const SiteSet& pts) const {
        SiteSet points = sorted_unique(pts);
        if (points.empty()) throw input_error("tree_size: empty point set");
        for (SiteId x : points) check_site(x);
        Mst out;
        size_t n = points.size();
        if (n == 1) return out;
        std::vector<bool> in_tree(n, false);
        std::vector<double> best(n, std::numeric_limits<double>::infinity());
        std::vector<int> best_from(n, 0);
        in_tree[0] = true;
        for (size_t j = 1; j < n; ++j) {
            best[j] = metric_[points[0]][points[j]];
            best_from[j] = 0;
        }
        for (size_t step = 1; step < n; ++step) {
            int pick = -1;
            for (size_t j = 0; j < n; ++j) {
                if (in_tree[j]) continue;
                if (pick < 0 || best[j] < best[pick] - 1e-15) pick = static_cast<int>(j);
                // lexicographic tie-break: smaller (from, to) site pair wins
                else if (std::abs(best[j] - best[pick]) <= 1e-15) {
                    auto key = [&](int idx) {
                        return std::pair<SiteId, SiteId>(points[best_from[idx]], points[idx]);
                    };
                    if (key(static_cast<int>(j)) < key(pick)) pick = static_cast<int>(j);
                }
            }
            in_tree[pick] = true;
            out.total += best[pick];
            out.edges.emplace_back(points[best_from[pick]], points[pick]);
            for (size_t j = 0; j < n; ++j) {
                if (in_tree[j]) continue;
                double w = metric_[points[pick]][points[j]];
                if (w < best[j] - 1e-15 ||
                    (std::abs(w - best[j]) <= 1e-15 &&
                     std::pair(points[pick], points[j]) <
                         std::pair(points[best_from[j]], points[j]))) {
                    best[j] = w;
                    best_from[j] = pick;
                }
            }
        }
        return out;
    }

    // c_g(m) = sup_x sum_{x'} e^{-m d(x,x')}
    double geometric_constant_cg(double m) const {
        if (m <= 0.0) throw input_error("geometric_constant_cg: m must be > 0");
        double best = 0.0;
        for (int x = 0; x < size(); ++x) {
            double row = 0.0;
            for (int y = 0; y < size(); ++y) row += std::exp(-m * metric_[x][y]);
            best = std::max(best, row);
        }
        return best;
    }

    struct CgPrimeReport {
        double sup_ratio = 0.0;                  // over |Q| <= max_q
        std::optional<double> singleton_ball;    // vertex-transitive presets
    };

    // c_g'(a) = sup_Q |Q|^-1 |{x : d(x,Q) <= a}|, brute-forced over small Q.
    // The singleton ball |{x : d(x,x0) <= a}| upper-bounds the ratio on
    // transitive lattices and is reported alongside.
    CgPrimeReport geometric_constant_cg_prime(double a, int max_q = 3) const {
        if (a <= 0.0) throw input_error("geometric_constant_cg_prime: a must be > 0");
        CgPrimeReport rep;
        rep.sup_ratio = cg_prime_ratio(a, max_q);
        if (vertex_transitive()) rep.singleton_ball = neighborhood_count({0}, a);
        return rep;
    }

    // Literal neighborhood-growth ratio, valid for any a (used by the
    // hypothesis checker where log omega(R) may be nonpositive).
    double cg_prime_ratio(double a, int max_q = 3) const {
        int n = size();
        max_q = std::min(max_q, n);
        double best = 0.0;
        SiteSet q;
        enumerate_subsets(0, max_q, q, a, best);
        return best;
    }

private:
    Lattice(std::vector<std::vector<double>> metric, int ncomp, Preset preset, int side)
        : metric_(std::move(metric)), ncomp_(ncomp), preset_(preset), side_(side) {
        if (ncomp_ < 1) throw input_error("component count must be >= 1");
        if (metric_.empty()) throw input_error("lattice must have at least one site");
    }

    void check_site(SiteId x) const {
        if (x < 0 || x >= size()) throw input_error("unknown site id " + std::to_string(x));
    }

    int neighborhood_count(const SiteSet& q, double a) const {
        int count = 0;
        for (int x = 0; x < size(); ++x) {
            double dmin = std::numeric_limits<double>::infinity();
            for (SiteId y : q) dmin = std::min(dmin, metric_[x][y]);
            if (dmin <= a) ++count;
        }
        return count;
    }

    void enumerate_subsets(SiteId start, int max_q, SiteSet& q, double a, double& best) const {
        if (!q.empty()) {
            double ratio = static_cast<double>(neighborhood_count(q, a)) / q.size();
            best = std::max(best, ratio);
        }
        if (static_cast<int>(q.size()) == max_q) return;
        for (SiteId x = start; x < size(); ++x) {
            q.push_back(x);
            enumerate_subsets(x + 1, max_q, q, a, best);
            q.pop_back();
        }
    }

    std::vector<std::vector<double>> metric_;
    int ncomp_;
    Preset preset_;
    int side_;
};

// Unordered multiset of (site, component) points; the basic index object of
// power-series kernels.
struct PointMultiset {
    std::vector<std::pair<SiteId, int>> entries;  // sorted

    PointMultiset() = default;
    PointMultiset(std::initializer_list<std::pair<SiteId, int>> e) : entries(e) { normalize(); }
    explicit PointMultiset(std::vector<std::pair<SiteId, int>> e) : entries(std::move(e)) {
        normalize();
    }

    void normalize() { std::sort(entries.begin(), entries.end()); }
    int degree() const { return static_cast<int>(entries.size()); }

    SiteSet support() const {
        SiteSet s;
        for (auto& [x, n] : entries) s.push_back(x);
        return sorted_unique(s);
    }

    PointMultiset concat(const PointMultiset& other) const {
        PointMultiset out;
        out.entries = entries;
        out.entries.insert(out.entries.end(), other.entries.begin(), other.entries.end());
        out.normalize();
        return out;
    }

    bool operator==(const PointMultiset&) const = default;
    auto operator<=>(const PointMultiset&) const = default;
};

}  // namespace clexp
