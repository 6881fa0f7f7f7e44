#pragma once

#include <gmpxx.h>

#include <string>

#include "squall/errors.hpp"

namespace squall {

/// Arbitrary-precision rational, the exact-arithmetic backend.
using Rational = mpq_class;
using Integer = mpz_class;

/// Parses a numeric literal exactly: "3", "-2", "0.125" (= 1/8), "1/3", "2.5e3".
/// Decimal fractions become exact rationals, so 0.1 is one tenth, not the
/// nearest double.
inline Rational rational_from_literal(std::string const& text) {
    std::string s = text;
    bool negative = false;
    if (!s.empty() && (s[0] == '+' || s[0] == '-')) {
        negative = s[0] == '-';
        s = s.substr(1);
    }
    if (s.empty()) throw InputError("empty numeric literal");

    auto bad = [&]() { throw InputError("malformed numeric literal '" + text + "'"); };

    Rational value;
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        std::string num = s.substr(0, slash), den = s.substr(slash + 1);
        if (num.empty() || den.empty()) bad();
        for (char c : num + den)
            if (!std::isdigit(static_cast<unsigned char>(c))) bad();
        Integer n(num, 10), d(den, 10);
        if (d == 0) throw InputError("zero denominator in '" + text + "'");
        value = Rational(n, d);
        value.canonicalize();
    } else {
        // [digits][.digits][e[+-]digits]
        std::string mantissa;
        long exponent10 = 0;
        auto epos = s.find_first_of("eE");
        std::string body = epos == std::string::npos ? s : s.substr(0, epos);
        if (epos != std::string::npos) {
            std::string exp = s.substr(epos + 1);
            if (exp.empty()) bad();
            try {
                exponent10 = std::stol(exp);
            } catch (std::exception const&) {
                bad();
            }
        }
        auto dot = body.find('.');
        if (dot != std::string::npos) {
            std::string frac = body.substr(dot + 1);
            mantissa = body.substr(0, dot) + frac;
            exponent10 -= static_cast<long>(frac.size());
        } else {
            mantissa = body;
        }
        if (mantissa.empty()) bad();
        for (char c : mantissa)
            if (!std::isdigit(static_cast<unsigned char>(c))) bad();
        Integer m(mantissa, 10);
        value = Rational(m);
        Integer pow10;
        mpz_ui_pow_ui(pow10.get_mpz_t(), 10, static_cast<unsigned long>(exponent10 < 0 ? -exponent10 : exponent10));
        if (exponent10 < 0)
            value /= Rational(pow10);
        else
            value *= Rational(pow10);
        value.canonicalize();
    }
    if (negative) value = -value;
    return value;
}

/// Canonical "p/q" (or just "p" for integers).
inline std::string rational_to_string(Rational const& value) {
    if (value.get_den() == 1) return value.get_num().get_str();
    return value.get_num().get_str() + "/" + value.get_den().get_str();
}

}  // namespace squall
