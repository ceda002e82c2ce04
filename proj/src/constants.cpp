#include "muster/constants.hpp"

#include <stdexcept>

namespace muster {

std::string to_string(ProfileId id) { return id == ProfileId::Paper ? "paper" : "desk"; }

ProfileId profile_from_string(const std::string& s) {
    if (s == "paper") return ProfileId::Paper;
    if (s == "desk") return ProfileId::Desk;
    throw std::invalid_argument("unknown profile: " + s);
}

void KnownSchedule::assert_inequalities(std::uint64_t up_to) const {
    const BigInt t = texplo();
    if (t <= 0 || t % 2 != 0) throw std::logic_error("texplo must be a positive even number");
    for (std::uint64_t i = 0; i + 1 <= up_to; ++i) {
        if (D(i + 1) <= D(i) + 3 * t) {
            throw std::logic_error("schedule violates D(i+1) > D(i) + 3*texplo at i=" +
                                   std::to_string(i));
        }
        if (D(i) < P(i) + t / 2) {
            throw std::logic_error("schedule violates D(i) >= P(i) + texplo/2 at i=" +
                                   std::to_string(i));
        }
    }
}

KnownSchedule make_known_schedule(std::uint64_t N) {
    KnownSchedule s;
    s.N = N;
    s.uxs = PrimitivesStore::instance().uxs(N);
    s.tz_factor = PrimitivesStore::instance().tz(N)->safety_factor;
    s.assert_inequalities(64);
    return s;
}

BigInt known_declaration_bound(const KnownSchedule& sched, std::uint64_t smallest_label) {
    const std::uint64_t l = bit_length(smallest_label);
    std::uint64_t log_n = 0;
    while ((std::uint64_t{1} << (log_n + 1)) <= sched.N) ++log_n;
    const std::uint64_t phases = log_n + 2 * l + 4;
    return BigInt(phases) *
           (4 * sched.D(log_n + 2 * l + 3) + BigInt(5 * (log_n + 2 * l + 2) + 6) * sched.texplo());
}

}  // namespace muster
