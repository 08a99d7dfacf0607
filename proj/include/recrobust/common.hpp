#pragma once

#include <cstddef>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>

namespace recrobust {

// Base class for everything thrown by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid configs, spec records that fail validation, unparseable reports.
class ConfigError : public Error {
public:
    using Error::Error;
};

// Dataset ingestion failures and schema violations.
class DataError : public Error {
public:
    using Error::Error;
};

// FNV-1a over raw bytes; used for fingerprinting artifacts in tests and
// for mixing labels into seeds.
std::uint64_t fnv1a64(std::string_view bytes);

class Fnv1a {
public:
    void update(std::string_view bytes);
    void update_u64(std::uint64_t v);
    void update_double(double v);
    std::uint64_t digest() const { return h_; }

private:
    std::uint64_t h_ = 14695981039346656037ull;
};

// floor(frac * n) with a small slack so that exactly-representable intents
// like 0.7 * 10 do not land on 6.999... and floor one short.
std::size_t floor_count(double frac, std::size_t n);

// round(frac * n), half away from zero.
std::size_t round_count(double frac, std::size_t n);

// Shortest round-trip decimal representation; identical to the string the
// JSON report serializer produces for the same value.
std::string format_double(double v);

namespace logging {
void set_verbose(bool on);
bool verbose();
// Writes a line to stderr when verbose mode is on.
void debug(const std::string& msg);
}  // namespace logging

}  // namespace recrobust
