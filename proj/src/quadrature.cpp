#include "rirs/quadrature.hpp"

#include <array>
#include <cmath>

namespace rirs {

namespace {

// Gauss-Kronrod 7/15 nodes and weights on [-1, 1].
constexpr std::array<double, 8> kKronrodX = {
    0.991455371120813, 0.949107912342759, 0.864864423359769, 0.741531185599394,
    0.586087235467691, 0.405845151377397, 0.207784955007898, 0.0};
constexpr std::array<double, 8> kKronrodW = {
    0.022935322010529, 0.063092092629979, 0.104790010322250, 0.140653259715525,
    0.169004726639267, 0.190350578064785, 0.204432940075298, 0.209482141084728};
constexpr std::array<double, 4> kGaussW = {
    0.129484966168870, 0.279705391489277, 0.381830050505119, 0.417959183673469};

struct PanelResult {
    double kronrod;
    double err;
};

PanelResult gk15(const std::function<double(double)>& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fc = f(c);
    double gauss = fc * kGaussW[3];
    double kron = fc * kKronrodW[7];
    for (int i = 0; i < 7; ++i) {
        double x = h * kKronrodX[i];
        double v = f(c - x) + f(c + x);
        kron += v * kKronrodW[i];
        if (i % 2 == 1) gauss += v * kGaussW[i / 2];
    }
    kron *= h;
    gauss *= h;
    return {kron, std::fabs(kron - gauss)};
}

double adapt(const std::function<double(double)>& f, double a, double b, double tol,
             int depth, int max_depth) {
    PanelResult r = gk15(f, a, b);
    if (r.err <= tol * std::max(1.0, std::fabs(r.kronrod)) || depth >= max_depth) {
        return r.kronrod;
    }
    double c = 0.5 * (a + b);
    return adapt(f, a, c, tol * 0.7, depth + 1, max_depth) +
           adapt(f, c, b, tol * 0.7, depth + 1, max_depth);
}

}  // namespace

double integrate_gk(const std::function<double(double)>& f, double a, double b, double tol,
                    int max_depth) {
    if (!(b > a)) return 0.0;
    return adapt(f, a, b, tol, 0, max_depth);
}

double integrate_to_infinity(const std::function<double(double)>& f, double u0, double tol) {
    double acc = 0.0;
    double lo = u0;
    double len = 1.0;
    int stale = 0;
    for (int panel = 0; panel < 200; ++panel) {
        double piece = integrate_gk(f, lo, lo + len, tol);
        acc += piece;
        if (std::fabs(piece) <= tol * std::max(1e-300, std::fabs(acc))) {
            if (++stale >= 3) return acc;
        } else {
            stale = 0;
        }
        lo += len;
        len *= 1.6;
    }
    throw EvaluationError("integrate_to_infinity: integrand does not decay");
}

}  // namespace rirs
