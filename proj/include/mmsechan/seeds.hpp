#pragma once

#include <cstdint>
#include <initializer_list>

namespace mmsechan {

/// splitmix64 finalizer.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Deterministic child seed for an independent random stream identified by `parts`.
constexpr std::uint64_t derive_seed(std::uint64_t base, std::initializer_list<std::uint64_t> parts) {
    std::uint64_t s = mix64(base);
    for (std::uint64_t p : parts) s = mix64(s ^ mix64(p + 0x632BE59BD9B4E019ull));
    return s;
}

}  // namespace mmsechan
