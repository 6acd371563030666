#include "bplab/beliefs.hpp"

#include <algorithm>
#include <cmath>

namespace bplab {

double max_abs_diff(const Beliefs& a, const Beliefs& b) {
    if (a.size() != b.size()) throw ModelError("max_abs_diff: belief sets differ in size");
    double worst = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        if (a[i].size() != b[i].size()) throw ModelError("max_abs_diff: belief vectors differ in arity");
        for (std::size_t s = 0; s < a[i].size(); ++s) worst = std::max(worst, std::abs(a[i][s] - b[i][s]));
    }
    return worst;
}

bool normalize_in_place(std::vector<double>& v) {
    double sum = 0.0;
    for (double x : v) sum += x;
    if (!(sum > 0.0) || !std::isfinite(sum)) return false;
    for (double& x : v) x /= sum;
    return true;
}

std::vector<double> indicator(int arity, int state) {
    std::vector<double> v(static_cast<std::size_t>(arity), 0.0);
    v[static_cast<std::size_t>(state)] = 1.0;
    return v;
}

}  // namespace bplab
