#include "fxtda/stl.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <vector>

#include "fxtda/common.hpp"
#include "fxtda/csv.hpp"

namespace fxtda {

namespace {

// The LOESS kernels follow the classic STL layout: series are addressed with
// 1-based positions so that x-coordinates coincide with indices. Vectors are
// allocated with one padding slot at index 0.
using Buffer = std::vector<double>;

// Local fit at abscissa xs over y[nleft..nright]. Returns false when every
// weight vanishes.
bool loess_estimate(const double* y, int n, int span, int degree, double xs, double& ys, int nleft,
                    int nright, double* w, bool use_rw, const double* rw) {
    const double range = static_cast<double>(n) - 1.0;
    double h = std::max(xs - nleft, nright - xs);
    if (span > n) h += static_cast<double>((span - n) / 2);
    const double h9 = 0.999 * h;
    const double h1 = 0.001 * h;

    double a = 0.0;
    for (int j = nleft; j <= nright; ++j) {
        w[j] = 0.0;
        const double r = std::abs(j - xs);
        if (r <= h9) {
            if (r <= h1) {
                w[j] = 1.0;
            } else {
                const double q = r / h;
                const double t = 1.0 - q * q * q;
                w[j] = t * t * t;
            }
            if (use_rw) w[j] *= rw[j];
            a += w[j];
        }
    }
    if (a <= 0.0) return false;

    for (int j = nleft; j <= nright; ++j) w[j] /= a;
    if (h > 0.0 && degree > 0) {
        a = 0.0;
        for (int j = nleft; j <= nright; ++j) a += w[j] * j;
        double b = xs - a;
        double c = 0.0;
        for (int j = nleft; j <= nright; ++j) c += w[j] * (j - a) * (j - a);
        if (std::sqrt(c) > 0.001 * range) {
            b /= c;
            for (int j = nleft; j <= nright; ++j) w[j] *= b * (j - a) + 1.0;
        }
    }
    ys = 0.0;
    for (int j = nleft; j <= nright; ++j) ys += w[j] * y[j];
    return true;
}

// LOESS smooth of y[1..n] into ys[1..n], evaluating every `jump` points and
// interpolating linearly in between.
void loess_smooth(const double* y, int n, int span, int degree, int jump, bool use_rw, const double* rw,
                  double* ys, double* work) {
    if (n < 2) {
        ys[1] = y[1];
        return;
    }
    const int step = std::min(jump, n - 1);
    int nleft = 1;
    int nright = n;
    if (span >= n) {
        nleft = 1;
        nright = n;
        for (int i = 1; i <= n; i += step) {
            if (!loess_estimate(y, n, span, degree, i, ys[i], nleft, nright, work, use_rw, rw)) ys[i] = y[i];
        }
    } else if (step == 1) {
        const int half = (span + 1) / 2;
        nleft = 1;
        nright = span;
        for (int i = 1; i <= n; ++i) {
            if (i > half && nright != n) {
                ++nleft;
                ++nright;
            }
            if (!loess_estimate(y, n, span, degree, i, ys[i], nleft, nright, work, use_rw, rw)) ys[i] = y[i];
        }
    } else {
        const int half = (span + 1) / 2;
        for (int i = 1; i <= n; i += step) {
            if (i < half) {
                nleft = 1;
                nright = span;
            } else if (i >= n - half + 1) {
                nleft = n - span + 1;
                nright = n;
            } else {
                nleft = i - half + 1;
                nright = span + i - half;
            }
            if (!loess_estimate(y, n, span, degree, i, ys[i], nleft, nright, work, use_rw, rw)) ys[i] = y[i];
        }
    }
    if (step != 1) {
        for (int i = 1; i <= n - step; i += step) {
            const double delta = (ys[i + step] - ys[i]) / step;
            for (int j = i + 1; j <= i + step - 1; ++j) ys[j] = ys[i] + delta * (j - i);
        }
        const int k = ((n - 1) / step) * step + 1;
        if (k != n) {
            if (!loess_estimate(y, n, span, degree, n, ys[n], nleft, nright, work, use_rw, rw)) ys[n] = y[n];
            if (k != n - 1) {
                const double delta = (ys[n] - ys[k]) / (n - k);
                for (int j = k + 1; j <= n - 1; ++j) ys[j] = ys[k] + delta * (j - k);
            }
        }
    }
}

// Moving average of length len over x[1..n] into ave[1..n-len+1].
void moving_average(const double* x, int n, int len, double* ave) {
    const int newn = n - len + 1;
    const double flen = len;
    double v = 0.0;
    for (int i = 1; i <= len; ++i) v += x[i];
    ave[1] = v / flen;
    int k = len;
    int m = 0;
    for (int j = 2; j <= newn; ++j) {
        ++k;
        ++m;
        v = v - x[m] + x[k];
        ave[j] = v / flen;
    }
}

// Smooths each cycle-subseries and extends it by one period on both ends.
// Output season[1..n+2*np].
void seasonal_smooth(const double* y, int n, int np, int ns, int degree, int jump, bool use_rw,
                     const double* rw, double* season, Buffer& sub, Buffer& fit, Buffer& subw, Buffer& work) {
    for (int j = 1; j <= np; ++j) {
        const int k = (n - j) / np + 1;
        for (int i = 1; i <= k; ++i) sub[i] = y[(i - 1) * np + j];
        if (use_rw) {
            for (int i = 1; i <= k; ++i) subw[i] = rw[(i - 1) * np + j];
        }
        // fit[2..k+1] holds the smoothed subseries; fit[1] and fit[k+2] the extensions.
        loess_smooth(sub.data(), k, ns, degree, jump, use_rw, subw.data(), fit.data() + 1, work.data());
        const int nright = std::min(ns, k);
        if (!loess_estimate(sub.data(), k, ns, degree, 0.0, fit[1], 1, nright, work.data(), use_rw,
                            subw.data())) {
            fit[1] = fit[2];
        }
        const int nleft = std::max(1, k - ns + 1);
        if (!loess_estimate(sub.data(), k, ns, degree, k + 1.0, fit[k + 2], nleft, k, work.data(), use_rw,
                            subw.data())) {
            fit[k + 2] = fit[k + 1];
        }
        for (int m = 1; m <= k + 2; ++m) season[(m - 1) * np + j] = fit[m];
    }
}

void robustness_weights(const double* y, int n, const double* fit, double* rw) {
    std::vector<double> r(static_cast<std::size_t>(n));
    for (int i = 1; i <= n; ++i) r[static_cast<std::size_t>(i - 1)] = std::abs(y[i] - fit[i]);
    const int mid1 = n / 2 + 1;
    const int mid2 = n - mid1 + 1;
    std::vector<double> sorted = r;
    std::nth_element(sorted.begin(), sorted.begin() + (mid1 - 1), sorted.end());
    const double a = sorted[static_cast<std::size_t>(mid1 - 1)];
    std::nth_element(sorted.begin(), sorted.begin() + (mid2 - 1), sorted.end());
    const double b = sorted[static_cast<std::size_t>(mid2 - 1)];
    const double cmad = 3.0 * (a + b);  // six times the median absolute residual
    const double c9 = 0.999 * cmad;
    const double c1 = 0.001 * cmad;
    for (int i = 1; i <= n; ++i) {
        const double ri = r[static_cast<std::size_t>(i - 1)];
        if (ri <= c1) {
            rw[i] = 1.0;
        } else if (ri <= c9) {
            const double q = ri / cmad;
            rw[i] = (1.0 - q * q) * (1.0 - q * q);
        } else {
            rw[i] = 0.0;
        }
    }
}

}  // namespace

int next_odd(double value) {
    int v = static_cast<int>(std::ceil(value));
    if (v % 2 == 0) ++v;
    return v;
}

StlDecomposition stl_decompose(const Eigen::Ref<const Eigen::VectorXd>& series, const StlConfig& config) {
    const int np = config.period;
    if (np < 2) throw Error(ErrorKind::Parameter, "STL period must be >= 2");
    const int n = static_cast<int>(series.size());
    if (n < 2 * np) {
        throw Error(ErrorKind::InsufficientData, "STL needs at least two full periods (" +
                                                     std::to_string(2 * np) + " points), got " +
                                                     std::to_string(n));
    }
    if (config.seasonal_span < 3 || config.seasonal_span % 2 == 0) {
        throw Error(ErrorKind::Parameter, "seasonal span must be odd and >= 3");
    }
    for (int i = 0; i < n; ++i) {
        if (!std::isfinite(series(i))) throw Error(ErrorKind::Domain, "STL input must be finite");
    }

    const int ns = config.seasonal_span;
    const int nt = config.trend_span.value_or(next_odd(1.5 * np / (1.0 - 1.5 / ns)));
    const int nl = config.lowpass_span.value_or(next_odd(np));
    if (nt < 3 || nt % 2 == 0 || nl < 3 || nl % 2 == 0) {
        throw Error(ErrorKind::Parameter, "trend and low-pass spans must be odd and >= 3");
    }
    const int ns_jump = static_cast<int>(std::ceil(ns / 10.0));
    const int nt_jump = static_cast<int>(std::ceil(nt / 10.0));
    const int nl_jump = static_cast<int>(std::ceil(nl / 10.0));

    const auto sz = static_cast<std::size_t>(n + 2 * np + 2);
    Buffer y(sz, 0.0), trend(sz, 0.0), season(sz, 0.0), rw(sz, 1.0), fit(sz, 0.0);
    Buffer w1(sz), w2(sz), w3(sz), w4(sz), w5(sz);
    Buffer sub(sz), subfit(sz), subw(sz), subwork(sz);
    for (int i = 1; i <= n; ++i) y[static_cast<std::size_t>(i)] = series(i - 1);

    bool use_rw = false;
    for (int outer = 0;; ++outer) {
        for (int inner = 0; inner < config.inner_loops; ++inner) {
            for (int i = 1; i <= n; ++i) w1[i] = y[i] - trend[i];
            // w2[1..n+2np]: extended cycle-subseries smooth
            seasonal_smooth(w1.data(), n, np, ns, config.seasonal_degree, ns_jump, use_rw, rw.data(), w2.data(),
                            sub, subfit, subw, subwork);
            // low-pass: moving averages np, np, 3, then LOESS
            moving_average(w2.data(), n + 2 * np, np, w3.data());
            moving_average(w3.data(), n + np + 1, np, w1.data());
            moving_average(w1.data(), n + 2, 3, w3.data());
            loess_smooth(w3.data(), n, nl, config.lowpass_degree, nl_jump, false, rw.data(), w1.data(),
                         w5.data());
            for (int i = 1; i <= n; ++i) season[i] = w2[np + i] - w1[i];
            for (int i = 1; i <= n; ++i) w1[i] = y[i] - season[i];
            loess_smooth(w1.data(), n, nt, config.trend_degree, nt_jump, use_rw, rw.data(), trend.data(),
                         w3.data());
        }
        if (outer >= config.outer_loops) break;
        for (int i = 1; i <= n; ++i) fit[i] = trend[i] + season[i];
        robustness_weights(y.data(), n, fit.data(), rw.data());
        use_rw = true;
    }

    StlDecomposition out;
    out.period = np;
    out.trend.resize(n);
    out.seasonal.resize(n);
    out.residual.resize(n);
    out.robustness_weights.resize(n);
    for (int i = 0; i < n; ++i) {
        out.trend(i) = trend[static_cast<std::size_t>(i + 1)];
        out.seasonal(i) = season[static_cast<std::size_t>(i + 1)];
        out.residual(i) = series(i) - out.trend(i) - out.seasonal(i);
        out.robustness_weights(i) = use_rw ? rw[static_cast<std::size_t>(i + 1)] : 1.0;
    }
    return out;
}

void write_stl_csv(std::ostream& out, const StlDecomposition& stl) {
    csv::write_row(out, {"trend", "seasonal", "residual"});
    for (Eigen::Index i = 0; i < stl.trend.size(); ++i) {
        csv::write_row(out, {format_double(stl.trend(i)), format_double(stl.seasonal(i)),
                             format_double(stl.residual(i))});
    }
}

}  // namespace fxtda
