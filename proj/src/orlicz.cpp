#include "rirs/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace rirs {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
}

OrliczFunction OrliczFunction::power(double p) {
    if (!(p >= 1.0) || !std::isfinite(p)) throw SpecError("Orlicz power: need p >= 1");
    OrliczFunction f;
    f.kind_ = Kind::Power;
    f.p_ = p;
    f.check_shape();
    return f;
}

OrliczFunction OrliczFunction::exponential() {
    OrliczFunction f;
    f.kind_ = Kind::Exp;
    f.check_shape();
    return f;
}

OrliczFunction OrliczFunction::piecewise_linear(std::vector<std::pair<double, double>> knots) {
    if (knots.empty()) throw SpecError("Orlicz piecewise: no knots");
    if (knots.front().first != 0.0) throw SpecError("Orlicz piecewise: first knot must be t = 0");
    double prev_t = -1.0, prev_s = -1.0;
    for (auto [t, s] : knots) {
        if (t <= prev_t) throw SpecError("Orlicz piecewise: knots not increasing");
        if (s < prev_s || s < 0) throw SpecError("Orlicz piecewise: slopes must be nondecreasing, >= 0");
        prev_t = t;
        prev_s = s;
    }
    if (knots.back().second <= 0) throw SpecError("Orlicz piecewise: constant function");
    OrliczFunction f;
    f.kind_ = Kind::PiecewiseLinear;
    f.knots_ = std::move(knots);
    f.check_shape();
    return f;
}

double OrliczFunction::operator()(double t) const {
    if (t < 0) throw DomainError("Orlicz: negative argument");
    switch (kind_) {
        case Kind::Power:
            return std::pow(t, p_);
        case Kind::Exp:
            return std::expm1(t);
        case Kind::PiecewiseLinear: {
            double acc = 0.0;
            for (std::size_t i = 0; i < knots_.size(); ++i) {
                double lo = knots_[i].first;
                double hi = (i + 1 < knots_.size()) ? knots_[i + 1].first : kInf;
                if (t <= lo) break;
                acc += knots_[i].second * (std::min(t, hi) - lo);
            }
            return acc;
        }
    }
    return 0.0;
}

double OrliczFunction::derivative_right(double t) const {
    if (t < 0) throw DomainError("Orlicz: negative argument");
    switch (kind_) {
        case Kind::Power:
            if (p_ == 1.0) return 1.0;
            return p_ * std::pow(t, p_ - 1.0);
        case Kind::Exp:
            return std::exp(t);
        case Kind::PiecewiseLinear: {
            double s = knots_.back().second;
            for (std::size_t i = 0; i + 1 < knots_.size(); ++i) {
                if (t < knots_[i + 1].first) return knots_[i].second;
            }
            return s;
        }
    }
    return 0.0;
}

bool OrliczFunction::delta2() const {
    switch (kind_) {
        case Kind::Power: return true;
        case Kind::Exp: return false;
        case Kind::PiecewiseLinear: return true;  // linear growth
    }
    return true;
}

double OrliczFunction::inverse(double y) const {
    if (y < 0) throw DomainError("Orlicz inverse: negative argument");
    if (y == 0) return 0.0;
    switch (kind_) {
        case Kind::Power:
            return std::pow(y, 1.0 / p_);
        case Kind::Exp:
            return std::log1p(y);
        case Kind::PiecewiseLinear: {
            double lo = 0.0, hi = 1.0;
            while ((*this)(hi) < y) hi *= 2.0;
            for (int it = 0; it < 200 && hi - lo > 1e-15 * std::max(1.0, hi); ++it) {
                double mid = 0.5 * (lo + hi);
                ((*this)(mid) < y ? lo : hi) = mid;
            }
            return 0.5 * (lo + hi);
        }
    }
    return 0.0;
}

double OrliczFunction::conjugate(double s) const {
    if (s < 0) throw DomainError("Orlicz conjugate: negative argument");
    if (s == 0) return 0.0;  // Phi(0) = 0 and Phi >= 0
    switch (kind_) {
        case Kind::Power: {
            if (p_ == 1.0) return s <= 1.0 ? 0.0 : kInf;
            // stationary at p t^{p-1} = s
            double q = p_ / (p_ - 1.0);
            return (p_ - 1.0) * std::pow(s / p_, q);
        }
        case Kind::Exp:
            // stationary at e^t = s, degenerate to t = 0 for s <= 1
            return s <= 1.0 ? 0.0 : s * std::log(s) - s + 1.0;
        case Kind::PiecewiseLinear: {
            if (s > knots_.back().second) return kInf;
            // analytic bracket from the derivative, then golden-section
            double lo = 0.0, hi = knots_.back().first + 1.0;
            while (derivative_right(hi) < s) hi *= 2.0;
            const double gr = 0.5 * (std::sqrt(5.0) - 1.0);
            double a = lo, b = hi;
            double x1 = b - gr * (b - a), x2 = a + gr * (b - a);
            auto obj = [&](double t) { return s * t - (*this)(t); };
            double f1 = obj(x1), f2 = obj(x2);
            for (int it = 0; it < 300 && b - a > 1e-13 * std::max(1.0, b); ++it) {
                if (f1 < f2) {
                    a = x1; x1 = x2; f1 = f2;
                    x2 = a + gr * (b - a); f2 = obj(x2);
                } else {
                    b = x2; x2 = x1; f2 = f1;
                    x1 = b - gr * (b - a); f1 = obj(x1);
                }
            }
            return std::max(0.0, obj(0.5 * (a + b)));
        }
    }
    return 0.0;
}

std::string OrliczFunction::name() const {
    switch (kind_) {
        case Kind::Power: {
            std::ostringstream os;
            os << "power:" << p_;
            return os.str();
        }
        case Kind::Exp:
            return "exp";
        case Kind::PiecewiseLinear:
            return "piecewise-linear";
    }
    return "?";
}

void OrliczFunction::check_shape() const {
    // Sampled convexity/monotonicity on a log grid; catches bad piecewise
    // entries and keeps the invariant visible at construction.
    if ((*this)(0.0) != 0.0) throw SpecError("Orlicz: Phi(0) != 0");
    double prev = 0.0;
    double prev_slope = -kInf;
    double prev_t = 0.0;
    for (int k = -12; k <= 12; ++k) {
        double t = std::pow(2.0, k);
        double v = (*this)(t);
        if (v < prev - 1e-14) throw SpecError("Orlicz: not increasing");
        double slope = (v - prev) / (t - prev_t);
        if (slope < prev_slope - 1e-10 * std::max(1.0, std::fabs(prev_slope))) {
            throw SpecError("Orlicz: sampled convexity check failed");
        }
        prev = v;
        prev_slope = slope;
        prev_t = t;
    }
    if (prev <= 0.0) throw SpecError("Orlicz: constant function");
}

}  // namespace rirs
