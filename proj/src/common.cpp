#include "recrobust/common.hpp"

#include <cmath>
#include <cstring>
#include <iostream>

#include <nlohmann/json.hpp>

namespace recrobust {

namespace {
constexpr std::uint64_t kFnvOffset = 14695981039346656037ull;
constexpr std::uint64_t kFnvPrime = 1099511628211ull;
}  // namespace

std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = kFnvOffset;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= kFnvPrime;
    }
    return h;
}

void Fnv1a::update(std::string_view bytes) {
    for (unsigned char c : bytes) {
        h_ ^= c;
        h_ *= kFnvPrime;
    }
}

void Fnv1a::update_u64(std::uint64_t v) {
    for (int i = 0; i < 8; ++i) {
        h_ ^= (v >> (8 * i)) & 0xffu;
        h_ *= kFnvPrime;
    }
}

void Fnv1a::update_double(double v) {
    std::uint64_t bits;
    static_assert(sizeof(bits) == sizeof(v));
    std::memcpy(&bits, &v, sizeof(bits));
    update_u64(bits);
}

std::size_t floor_count(double frac, std::size_t n) {
    double x = frac * static_cast<double>(n);
    double f = std::floor(x + 1e-9);
    if (f < 0.0) return 0;
    return static_cast<std::size_t>(f);
}

std::size_t round_count(double frac, std::size_t n) {
    double x = frac * static_cast<double>(n);
    long long r = std::llround(x);
    if (r < 0) return 0;
    return static_cast<std::size_t>(r);
}

std::string format_double(double v) {
    return nlohmann::json(v).dump();
}

namespace logging {

namespace {
bool g_verbose = false;
}

void set_verbose(bool on) { g_verbose = on; }
bool verbose() { return g_verbose; }

void debug(const std::string& msg) {
    if (g_verbose) std::cerr << msg << "\n";
}

}  // namespace logging

}  // namespace recrobust
