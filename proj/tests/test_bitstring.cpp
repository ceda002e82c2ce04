#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "muster/bitstring.hpp"

#include <vector>

using namespace muster;

namespace {

// Every binary string of the given length, for brute-force sweeps.
std::vector<BitString> all_strings(std::size_t max_len) {
    std::vector<BitString> out{""};
    std::vector<BitString> frontier{""};
    for (std::size_t len = 1; len <= max_len; ++len) {
        std::vector<BitString> next;
        for (const auto& s : frontier) {
            next.push_back(s + "0");
            next.push_back(s + "1");
        }
        out.insert(out.end(), next.begin(), next.end());
        frontier = std::move(next);
    }
    return out;
}

}  // namespace

TEST_CASE("coding fixed points") {
    CHECK(code("") == "01");
    CHECK(code("1") == "1101");
    CHECK(code("10") == "110001");
    CHECK(code("101") == "11001101");
}

TEST_CASE("decode rejects strings outside the image") {
    CHECK_FALSE(decode("0").ok);
    CHECK_FALSE(decode("").ok);
    CHECK_FALSE(decode("11").ok);      // missing terminator
    CHECK_FALSE(decode("0111").ok);    // early terminator
    CHECK_FALSE(decode("1001").ok);    // bad pair
    CHECK_FALSE(decode("001101x").ok); // not binary
    const auto r = decode("100111");
    CHECK_FALSE(r.ok);
    CHECK(r.error_index == 1);
}

TEST_CASE("decode inverts code up to length 12") {
    for (const auto& s : all_strings(12)) {
        const auto r = decode(code(s));
        REQUIRE(r.ok);
        CHECK(r.value == s);
    }
}

TEST_CASE("code image structure") {
    for (const auto& s : all_strings(8)) {
        const BitString c = code(s);
        CHECK(c.size() % 2 == 0);
        // A 01 pair at an odd position appears exactly at the end.
        for (std::size_t k = 1; k + 1 <= c.size(); k += 2) {
            const bool terminator = c[k - 1] == '0' && c[k] == '1';
            CHECK(terminator == (k + 1 == c.size()));
        }
    }
}

TEST_CASE("codes of distinct strings are never prefixes of each other") {
    const auto strings = all_strings(8);
    std::vector<BitString> codes;
    for (const auto& s : strings) codes.push_back(code(s));
    for (std::size_t a = 0; a < strings.size(); ++a) {
        for (std::size_t b = 0; b < strings.size(); ++b) {
            if (a == b) continue;
            if (codes[a].size() > codes[b].size()) continue;
            CHECK(codes[b].compare(0, codes[a].size(), codes[a]) != 0);
        }
    }
}

TEST_CASE("slices follow the out-of-range convention") {
    const BitString s = "10110";
    CHECK(slice1(s, 1, 3) == "101");
    CHECK(slice1(s, 4, 4) == "1");
    CHECK(slice1(s, 3, 2) == "");
    CHECK(slice1(s, 0, 2) == "");
    CHECK(slice1(s, 2, 6) == "");
}

TEST_CASE("binary representation round-trip") {
    CHECK(to_binary(1) == "1");
    CHECK(to_binary(5) == "101");
    CHECK(to_binary(9) == "1001");
    CHECK(to_binary(0) == "");
    for (std::uint64_t v = 1; v <= 200; ++v) CHECK(from_binary(to_binary(v)) == v);
}
