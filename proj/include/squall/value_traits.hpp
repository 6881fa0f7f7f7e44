#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <limits>
#include <string>

#include "squall/rational.hpp"

namespace squall {

/// The numeric field every algorithm is written over. Two instantiations:
/// double (fast, approximate) and Rational (exact). Algorithms that need
/// to branch on exactness use is_exact.
template <typename V>
struct ValueTraits;

template <>
struct ValueTraits<double> {
    static constexpr bool is_exact = false;
    static double zero() { return 0.0; }
    static double one() { return 1.0; }
    static double from_rational(Rational const& q) { return q.get_d(); }
    static double from_int(long n) { return static_cast<double>(n); }
    static Rational to_rational(double v) {
        Rational q;
        mpq_set_d(q.get_mpq_t(), v);
        return q;
    }
    static double to_double(double v) { return v; }
    static double abs(double v) { return std::fabs(v); }
    static bool is_zero(double v) { return v == 0.0; }
    static std::string to_string(double v) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.17g", v);
        return buf;
    }
    static double from_string(std::string const& s) {
        if (s.find('/') != std::string::npos) return rational_from_literal(s).get_d();
        char* end = nullptr;
        double v = s.empty() ? 0.0 : std::strtod(s.c_str(), &end);
        if (s.empty() || end != s.c_str() + s.size() || !std::isfinite(v))
            throw InputError("malformed numeric literal '" + s + "'");
        return v;
    }
};

template <>
struct ValueTraits<Rational> {
    static constexpr bool is_exact = true;
    static Rational zero() { return Rational(0); }
    static Rational one() { return Rational(1); }
    static Rational from_rational(Rational const& q) { return q; }
    static Rational from_int(long n) { return Rational(n); }
    static Rational to_rational(Rational const& v) { return v; }
    static double to_double(Rational const& v) { return v.get_d(); }
    static Rational abs(Rational const& v) { return v < 0 ? Rational(-v) : v; }
    static bool is_zero(Rational const& v) { return v == 0; }
    static std::string to_string(Rational const& v) { return rational_to_string(v); }
    static Rational from_string(std::string const& s) { return rational_from_literal(s); }
};

}  // namespace squall
