#pragma once

#include <cstdint>
#include <string>

namespace g2cp {

// UTC seconds since the Unix epoch. All wire timestamps are RFC 3339
// "YYYY-MM-DDTHH:MM:SSZ"; fractional seconds are accepted and discarded.
using Timestamp = std::int64_t;

Timestamp parse_rfc3339(const std::string& text);
std::string format_rfc3339(Timestamp t);

// Deterministic clock for scenario runs: a fixed base advanced one second per
// tick, so repeated runs produce byte-identical transcripts and logs.
class LogicalClock {
public:
    explicit LogicalClock(Timestamp base = kDefaultBase) : next_(base) {}

    Timestamp tick() { return next_++; }
    Timestamp peek() const { return next_; }

    static constexpr Timestamp kDefaultBase = 1767225600;  // 2026-01-01T00:00:00Z

private:
    Timestamp next_;
};

}  // namespace g2cp
