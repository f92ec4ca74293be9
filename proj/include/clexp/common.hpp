#pragma once

#include <algorithm>
#include <complex>
#include <cstdint>
#include <iterator>
#include <stdexcept>
#include <string>
#include <vector>

namespace clexp {

using Complex = std::complex<double>;

// Error taxonomy, mapped onto CLI exit codes: input/model -> 2, numeric/resource -> 3.
struct input_error : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};
struct model_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct resource_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct numeric_error : std::runtime_error {
    double residual = 0.0;
    explicit numeric_error(const std::string& msg, double res = 0.0)
        : std::runtime_error(msg), residual(res) {}
};

using SiteId = int;
using SiteSet = std::vector<SiteId>;  // kept sorted, unique

inline SiteSet sorted_unique(SiteSet v) {
    std::sort(v.begin(), v.end());
    v.erase(std::unique(v.begin(), v.end()), v.end());
    return v;
}

inline bool contains(const SiteSet& s, SiteId x) {
    return std::binary_search(s.begin(), s.end(), x);
}

inline SiteSet set_union(const SiteSet& a, const SiteSet& b) {
    SiteSet out;
    std::set_union(a.begin(), a.end(), b.begin(), b.end(), std::back_inserter(out));
    return out;
}

inline bool sets_intersect(const SiteSet& a, const SiteSet& b) {
    auto ia = a.begin();
    auto ib = b.begin();
    while (ia != a.end() && ib != b.end()) {
        if (*ia < *ib) ++ia;
        else if (*ib < *ia) ++ib;
        else return true;
    }
    return false;
}

// Unordered pair of sites, normalized so a <= b.
struct SitePair {
    SiteId a, b;
    SitePair(SiteId x, SiteId y) : a(std::min(x, y)), b(std::max(x, y)) {}
    bool operator==(const SitePair&) const = default;
    auto operator<=>(const SitePair&) const = default;
};

}  // namespace clexp
