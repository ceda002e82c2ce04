#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <string>

namespace muster {

// Round counters and schedule constants overflow 64 bits
// (hypothesis budgets contain factors like m^(2*m^5)), so all timing
// arithmetic uses an arbitrary-precision integer.
using BigInt = boost::multiprecision::cpp_int;

inline BigInt bigpow(const BigInt& base, const BigInt& exp) {
    BigInt result = 1;
    BigInt b = base;
    BigInt e = exp;
    while (e > 0) {
        if ((e & 1) != 0) result *= b;
        e >>= 1;
        if (e > 0) b *= b;
    }
    return result;
}

inline std::uint64_t bit_length(std::uint64_t v) {
    std::uint64_t n = 0;
    while (v > 0) {
        ++n;
        v >>= 1;
    }
    return n;
}

inline std::string to_string(const BigInt& v) { return v.str(); }

}  // namespace muster
