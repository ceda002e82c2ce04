#include "muster/bitstring.hpp"

namespace muster {

BitString code(const BitString& s) {
    BitString out;
    out.reserve(2 * s.size() + 2);
    for (char b : s) {
        out.push_back(b);
        out.push_back(b);
    }
    out += "01";
    return out;
}

DecodeResult decode(const BitString& c) {
    DecodeResult r;
    if (!is_bit_string(c)) {
        for (std::size_t i = 0; i < c.size(); ++i) {
            if (c[i] != '0' && c[i] != '1') {
                r.error_index = i + 1;
                break;
            }
        }
        r.error = "not a binary string";
        return r;
    }
    if (c.size() < 2 || c.size() % 2 != 0) {
        r.error_index = c.size() + 1;
        r.error = "length is not a positive even number";
        return r;
    }
    BitString value;
    for (std::size_t k = 0; k + 2 <= c.size(); k += 2) {
        const bool last = (k + 2 == c.size());
        if (c[k] == '0' && c[k + 1] == '1') {
            if (!last) {
                r.error_index = k + 1;
                r.error = "terminator pair before end of string";
                return r;
            }
            r.ok = true;
            r.value = value;
            return r;
        }
        if (c[k] != c[k + 1]) {
            r.error_index = k + 1;
            r.error = "pair is neither doubled bit nor terminator";
            return r;
        }
        if (last) {
            r.error_index = k + 1;
            r.error = "missing terminator pair";
            return r;
        }
        value.push_back(c[k]);
    }
    r.error_index = 1;
    r.error = "empty string";
    return r;
}

BitString slice1(const BitString& s, std::int64_t i, std::int64_t j) {
    if (i > j) return {};
    if (i < 1 || j < 1) return {};
    const auto n = static_cast<std::int64_t>(s.size());
    if (i > n || j > n) return {};
    return s.substr(static_cast<std::size_t>(i - 1), static_cast<std::size_t>(j - i + 1));
}

BitString to_binary(std::uint64_t v) {
    BitString out;
    if (v == 0) return out;
    while (v > 0) {
        out.push_back((v & 1) ? '1' : '0');
        v >>= 1;
    }
    return {out.rbegin(), out.rend()};
}

std::uint64_t from_binary(const BitString& s) {
    std::uint64_t v = 0;
    for (char b : s) v = (v << 1) | (b == '1' ? 1u : 0u);
    return v;
}

bool is_bit_string(const BitString& s) {
    for (char b : s) {
        if (b != '0' && b != '1') return false;
    }
    return true;
}

}  // namespace muster
