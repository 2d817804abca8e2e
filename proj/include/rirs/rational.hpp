#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace rirs {

using Int = boost::multiprecision::cpp_int;
using Rat = boost::multiprecision::cpp_rational;

inline double to_double(const Rat& r) { return r.convert_to<double>(); }

/// Exact conversion; every finite double is a dyadic rational.
inline Rat rat_from_double(double x) {
    if (!std::isfinite(x)) throw std::invalid_argument("rat_from_double: non-finite value");
    return Rat(x);
}

inline Int factorial(unsigned n) {
    Int f = 1;
    for (unsigned i = 2; i <= n; ++i) f *= i;
    return f;
}

inline Int pow2(unsigned n) {
    Int p = 1;
    p <<= n;
    return p;
}

namespace detail {
// hot-path tables; thread-safe via magic static init
inline const std::vector<Rat>& appb_scale_table() {
    static const std::vector<Rat> table = [] {
        std::vector<Rat> t(401);
        for (unsigned n = 0; n <= 400; ++n) t[n] = Rat(1, pow2(n) * factorial(n));
        return t;
    }();
    return table;
}
inline const std::vector<Rat>& staircase_breakpoint_table() {
    static const std::vector<Rat> table = [] {
        std::vector<Rat> t(401);
        for (unsigned n = 0; n <= 400; ++n) t[n] = Rat(1, pow2(n) * factorial(n + 1));
        return t;
    }();
    return table;
}
}  // namespace detail

/// s_n = 1/(2^n n!), the Appendix-B scale ladder.
inline Rat appb_scale(unsigned n) {
    if (n <= 400) return detail::appb_scale_table()[n];
    return Rat(1, pow2(n) * factorial(n));
}

/// c_n = 1/(2^n (n+1)!), breakpoints of the factorial staircase.
inline Rat staircase_breakpoint(unsigned n) {
    if (n <= 400) return detail::staircase_breakpoint_table()[n];
    return Rat(1, pow2(n) * factorial(n + 1));
}

inline Rat rat_abs(const Rat& r) { return r < 0 ? Rat(-r) : r; }

inline std::string rat_str(const Rat& r) {
    return numerator(r).str() + "/" + denominator(r).str();
}

}  // namespace rirs
