#include "qcrb/simplex.hpp"

#include <algorithm>
#include <numeric>
#include <vector>

namespace qcrb {

SimplexResult nelder_mead(const std::function<double(const RVector&)>& f, const RVector& x0,
                          const SimplexOptions& options) {
    const int n = static_cast<int>(x0.size());
    // Dimension-adaptive coefficients (reflection/expansion/contraction/shrink);
    // the standard values are kept in low dimension where the adaptive ones
    // degenerate.
    const double alpha = 1.0;
    const double beta = n > 2 ? 1.0 + 2.0 / n : 2.0;
    const double gamma = n > 2 ? 0.75 - 0.5 / n : 0.5;
    const double delta = n > 2 ? 1.0 - 1.0 / n : 0.5;

    std::vector<RVector> xs(static_cast<size_t>(n) + 1, x0);
    std::vector<double> fs(static_cast<size_t>(n) + 1);
    long evals = 0;
    auto eval = [&](const RVector& x) {
        ++evals;
        return f(x);
    };

    fs[0] = eval(xs[0]);
    for (int i = 0; i < n; ++i) {
        double h = options.init_step * std::max(1.0, std::abs(x0(i)));
        xs[static_cast<size_t>(i) + 1](i) += h;
        fs[static_cast<size_t>(i) + 1] = eval(xs[static_cast<size_t>(i) + 1]);
    }

    std::vector<int> order(static_cast<size_t>(n) + 1);
    std::iota(order.begin(), order.end(), 0);
    auto sort_order = [&]() {
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return fs[static_cast<size_t>(a)] < fs[static_cast<size_t>(b)]; });
    };

    bool converged = false;
    while (evals < options.max_evals) {
        sort_order();
        double f_best = fs[static_cast<size_t>(order.front())];
        double f_worst = fs[static_cast<size_t>(order.back())];
        if (f_worst - f_best <= options.ftol_rel * 0.5 * (std::abs(f_best) + std::abs(f_worst))) {
            converged = true;
            break;
        }

        // Centroid of all but the worst vertex.
        RVector centroid = RVector::Zero(n);
        for (size_t i = 0; i + 1 < order.size(); ++i) centroid += xs[static_cast<size_t>(order[i])];
        centroid /= static_cast<double>(n);

        int worst = order.back();
        int second = order[order.size() - 2];
        const RVector& xw = xs[static_cast<size_t>(worst)];

        RVector xr = centroid + alpha * (centroid - xw);
        double fr = eval(xr);
        if (fr < f_best) {
            RVector xe = centroid + beta * (xr - centroid);
            double fe = eval(xe);
            if (fe < fr) {
                xs[static_cast<size_t>(worst)] = xe;
                fs[static_cast<size_t>(worst)] = fe;
            } else {
                xs[static_cast<size_t>(worst)] = xr;
                fs[static_cast<size_t>(worst)] = fr;
            }
        } else if (fr < fs[static_cast<size_t>(second)]) {
            xs[static_cast<size_t>(worst)] = xr;
            fs[static_cast<size_t>(worst)] = fr;
        } else {
            bool outside = fr < fs[static_cast<size_t>(worst)];
            RVector xc = outside ? (centroid + gamma * (xr - centroid)).eval()
                                 : (centroid - gamma * (centroid - xw)).eval();
            double fc = eval(xc);
            if (fc < std::min(fr, fs[static_cast<size_t>(worst)])) {
                xs[static_cast<size_t>(worst)] = xc;
                fs[static_cast<size_t>(worst)] = fc;
            } else {
                // Shrink toward the best vertex.
                const RVector xb = xs[static_cast<size_t>(order.front())];
                for (size_t i = 1; i < order.size(); ++i) {
                    int idx = order[i];
                    xs[static_cast<size_t>(idx)] = xb + delta * (xs[static_cast<size_t>(idx)] - xb);
                    fs[static_cast<size_t>(idx)] = eval(xs[static_cast<size_t>(idx)]);
                    if (evals >= options.max_evals) break;
                }
            }
        }
    }

    sort_order();
    int best = order.front();
    return SimplexResult{xs[static_cast<size_t>(best)], fs[static_cast<size_t>(best)], evals,
                         converged};
}

} // namespace qcrb
