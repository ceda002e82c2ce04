#pragma once

#include <cstddef>
#include <cstdint>
#include <string>

namespace muster {

// Binary strings are plain std::string over {'0','1'}. Positions follow the
// 1-based convention used throughout the movement-coded protocols, see
// slice1().
using BitString = std::string;

// code("") == "01"; otherwise every bit is doubled and "01" is appended.
// The image of code is prefix-free across distinct inputs, which is what
// lets receivers detect message boundaries from cardinality dips alone.
BitString code(const BitString& s);

struct DecodeResult {
    bool ok = false;
    BitString value;
    // 1-based index of the first offending position when !ok.
    std::size_t error_index = 0;
    std::string error;
};

// Inverse of code(). Rejects strings outside the image (odd length, bad
// pair structure, missing or early terminator).
DecodeResult decode(const BitString& c);

// s[i..j] with 1-based inclusive bounds; empty when i > j or either bound
// falls outside the string.
BitString slice1(const BitString& s, std::int64_t i, std::int64_t j);

// Binary representation of v >= 1, most significant bit first.
BitString to_binary(std::uint64_t v);

// Parses an MSB-first binary string produced by to_binary.
std::uint64_t from_binary(const BitString& s);

bool is_bit_string(const BitString& s);

}  // namespace muster
