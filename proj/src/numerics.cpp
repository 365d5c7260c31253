#include "parischain/numerics.hpp"
#include "parischain/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <thread>

namespace parischain {

std::vector<double> binomial_half_weights(int k) {
    std::vector<double> row(static_cast<std::size_t>(k) + 1, 0.0);
    row[0] = 1.0;
    for (int i = 1; i <= k; ++i) {
        for (int j = i; j > 0; --j) row[j] += row[j - 1];
    }
    const double scale = std::ldexp(1.0, -k);
    for (double& v : row) v *= scale;
    return row;
}

double expint_e1(double x) {
    if (x <= 0.0) throw DomainError("expint_e1 requires x > 0");
    if (x > 700.0) return 0.0;
    if (x <= 1.0) {
        // power series around 0
        constexpr double euler_gamma = 0.57721566490153286060;
        double sum = 0.0, term = 1.0;
        for (int k = 1; k <= 40; ++k) {
            term *= -x / k;
            const double add = -term / k;
            sum += add;
            if (std::abs(add) < 1e-18 * (std::abs(sum) + 1.0)) break;
        }
        return -euler_gamma - std::log(x) + sum;
    }
    // modified Lentz continued fraction
    const double tiny = 1e-300;
    double b = x + 1.0, c = 1.0 / tiny, d = 1.0 / b, h = d;
    for (int i = 1; i <= 200; ++i) {
        const double a = -static_cast<double>(i) * i;
        b += 2.0;
        d = 1.0 / (a * d + b);
        c = b + a / c;
        const double del = c * d;
        h *= del;
        if (std::abs(del - 1.0) < 1e-16) break;
    }
    return h * std::exp(-x);
}

namespace {

// Gauss-Kronrod 15-point nodes/weights on [-1, 1] (abscissae >= 0).
constexpr double kXgk[8] = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr double kWgk[8] = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr double kWg[4] = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct GkResult {
    double value;
    double error;
};

GkResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b), h = 0.5 * (b - a);
    double resk = 0.0, resg = 0.0;
    const double fc = f(c);
    resk += kWgk[7] * fc;
    resg += kWg[3] * fc;
    for (int j = 0; j < 7; ++j) {
        const double x = h * kXgk[j];
        const double f1 = f(c - x), f2 = f(c + x);
        resk += kWgk[j] * (f1 + f2);
        if (j % 2 == 1) resg += kWg[j / 2] * (f1 + f2);
    }
    return {resk * h, std::abs(resk - resg) * h};
}

} // namespace

double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol, double rel_tol) {
    if (a == b) return 0.0;
    double sign = 1.0;
    if (a > b) {
        std::swap(a, b);
        sign = -1.0;
    }
    struct Seg {
        double a, b, value, error;
    };
    GkResult head = gk15(f, a, b);
    std::vector<Seg> segs{{a, b, head.value, head.error}};
    double total = head.value, err = head.error;
    int iter = 0;
    while (err > std::max(abs_tol, rel_tol * std::abs(total))) {
        if (++iter > 2000)
            throw NumericalError("quadrature non-convergence on [" +
                                 std::to_string(a) + ", " + std::to_string(b) + "]");
        auto worst = std::max_element(
            segs.begin(), segs.end(),
            [](const Seg& u, const Seg& v) { return u.error < v.error; });
        const Seg s = *worst;
        const double mid = 0.5 * (s.a + s.b);
        GkResult left = gk15(f, s.a, mid), right = gk15(f, mid, s.b);
        total += left.value + right.value - s.value;
        err += left.error + right.error - s.error;
        *worst = {s.a, mid, left.value, left.error};
        segs.push_back({mid, s.b, right.value, right.error});
    }
    return sign * total;
}

double integrate_tail(const std::function<double(double)>& f, double a,
                      double abs_tol) {
    double width = std::max(1.0, std::abs(a) * 0.5);
    double total = 0.0, lo = a;
    for (int k = 0; k < 80; ++k) {
        const double hi = lo + width;
        const double piece = integrate(f, lo, hi, abs_tol * 0.25, 1e-10);
        total += piece;
        if (k > 1 && std::abs(piece) < 0.25 * abs_tol) return total;
        lo = hi;
        width *= 2.0;
    }
    throw NumericalError("tail quadrature did not decay starting at " + std::to_string(a));
}

void parallel_for(std::size_t n, const std::function<void(std::size_t)>& fn,
                  int threads) {
    if (n == 0) return;
    const std::size_t nt =
        std::min<std::size_t>(std::max(threads, 1), n);
    if (nt <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(nt);
    for (std::size_t t = 0; t < nt; ++t) {
        pool.emplace_back([&, t] {
            for (std::size_t i = t; i < n; i += nt) fn(i);
        });
    }
    for (auto& th : pool) th.join();
}

int default_threads() {
    const unsigned hc = std::thread::hardware_concurrency();
    return hc == 0 ? 1 : static_cast<int>(hc);
}

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

} // namespace parischain
