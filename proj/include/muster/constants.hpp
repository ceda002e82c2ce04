#pragma once

#include "muster/bigint.hpp"
#include "muster/primitives.hpp"

#include <cstdint>
#include <memory>
#include <string>

namespace muster {

enum class ProfileId : std::uint8_t { Paper, Desk };

std::string to_string(ProfileId id);
ProfileId profile_from_string(const std::string& s);

// Timing schedule for the known-bound protocol. Both profiles share the
// constructed exploration sequence and the measured rendezvous factor; the
// profile id matters for the unknown-bound schedule and size-learning caps.
struct KnownSchedule {
    std::uint64_t N = 0;
    std::shared_ptr<const UxsEntry> uxs;
    std::uint64_t tz_factor = 0;

    const BigInt& texplo() const { return uxs->texplo; }

    // Rendezvous bound: two walks with distinct labels, the shorter of
    // binary length l, started at most texplo/2 apart, meet within P(l)
    // rounds of the later start.
    BigInt P(std::uint64_t l) const { return BigInt(3) * (2 * l + 4) * texplo() * tz_factor; }

    // Phase pacing: D(i) = P(i) + 3*(i+2)*texplo.
    BigInt D(std::uint64_t i) const { return P(i) + BigInt(3) * (i + 2) * texplo(); }

    // The inequalities the phase analysis rests on; checked on construction.
    void assert_inequalities(std::uint64_t up_to) const;
};

KnownSchedule make_known_schedule(std::uint64_t N);

// Declaration-round bound for a known-bound run, counted from the earliest
// wake: (floor(log2 N) + 2l + 4) * (4*D(floor(log2 N)+2l+3) + (5*(floor(log2
// N)+2l+2)+6)*texplo), with l the bit length of the smallest label.
BigInt known_declaration_bound(const KnownSchedule& sched, std::uint64_t smallest_label);

}  // namespace muster
