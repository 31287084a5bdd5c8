#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cmath>
#include <cstdint>
#include <string>
#include <type_traits>

#include "tandemq/common.hpp"

namespace tandemq {

// Exact scalar used by the bit-exact ("rational") evaluation mode. Everything
// numeric in the library is templated on the scalar, with double as the fast
// path and rat as the exact path.
using rat = boost::multiprecision::cpp_rational;

template <class T>
inline constexpr bool is_rational_v = std::is_same_v<T, rat>;

inline double to_double(double x) { return x; }
inline double to_double(const rat& x) { return x.template convert_to<double>(); }

template <class T>
T abs_val(const T& x) {
    return x < T(0) ? T(-x) : x;
}

// Integer power by repeated squaring; negative exponents go through the
// reciprocal. Works for both scalar types (exact for rat).
template <class T>
T pow_int(T base, long long e) {
    if (e < 0) {
        if (base == T(0)) throw numeric_error("pow_int: zero base with negative exponent");
        return T(1) / pow_int(base, -e);
    }
    T r(1);
    while (e > 0) {
        if (e & 1) r *= base;
        base *= base;
        e >>= 1;
    }
    return r;
}

// "p/q" (or plain integer / decimal) -> scalar. The rational parse is exact;
// decimal strings are scaled by powers of ten so "0.05" means 1/20.
inline rat parse_rat(const std::string& s) {
    auto bad = [&] { throw validation_error("cannot parse rational literal: '" + s + "'"); };
    if (s.empty()) bad();
    auto slash = s.find('/');
    if (slash != std::string::npos) {
        try {
            boost::multiprecision::cpp_int num(s.substr(0, slash));
            boost::multiprecision::cpp_int den(s.substr(slash + 1));
            if (den == 0) bad();
            return rat(num, den);
        } catch (const std::exception&) {
            bad();
        }
    }
    auto dot = s.find('.');
    if (dot != std::string::npos) {
        std::string digits = s.substr(0, dot) + s.substr(dot + 1);
        size_t frac_digits = s.size() - dot - 1;
        bool neg = false;
        if (!digits.empty() && (digits[0] == '-' || digits[0] == '+')) {
            neg = digits[0] == '-';
            digits.erase(0, 1);
        }
        // strip leading zeros; a bare leading zero reads as an octal prefix
        size_t nz = digits.find_first_not_of('0');
        digits = (nz == std::string::npos) ? "0" : digits.substr(nz);
        try {
            boost::multiprecision::cpp_int num(digits);
            if (neg) num = -num;
            boost::multiprecision::cpp_int den(1);
            for (size_t i = 0; i < frac_digits; ++i) den *= 10;
            return rat(num, den);
        } catch (const std::exception&) {
            bad();
        }
    }
    try {
        return rat(boost::multiprecision::cpp_int(s));
    } catch (const std::exception&) {
        bad();
    }
    return rat(0); // unreachable
}

inline std::string rat_to_string(const rat& x) {
    return x.str();
}

// Compensated (Kahan) accumulation for the float path; plain accumulation is
// already exact for rationals.
template <class T>
struct accumulator {
    T sum{0};
    void add(const T& x) { sum += x; }
    T value() const { return sum; }
};

template <>
struct accumulator<double> {
    double sum = 0.0;
    double carry = 0.0;
    void add(double x) {
        double y = x - carry;
        double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
    double value() const { return sum; }
};

} // namespace tandemq
