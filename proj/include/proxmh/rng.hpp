#pragma once

// Counter-based random streams (Philox4x32-10).
//
// A stream is identified by a 64-bit key and a 64-bit stream id; the 128-bit
// Philox counter is (stream id, position). Splitting never touches the
// parent's position:
//
//   child = parent.split(i)  =>  child.key = mix(parent.key, parent.stream),
//                                child.stream = i, child.position = 0
//
// The sampler uses one child per chain (split(chain_index)), one per step
// (split(step_index)) and one per call site inside a step (see
// StreamSite), so the number of draws consumed by a rejection sampler never
// shifts the variates used elsewhere.

#include <array>
#include <cstdint>

namespace proxmh {

enum class StreamSite : std::uint64_t {
    LazyCoin = 0,
    Proposal = 1,
    Acceptance = 2,
    Initialization = 0xFFFF'FFFF'FFFF'FFFFull,
};

class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed, std::uint64_t stream = 0) noexcept;

    RandomStream split(std::uint64_t child) const noexcept;
    RandomStream split(StreamSite site) const noexcept {
        return split(static_cast<std::uint64_t>(site));
    }

    std::uint64_t next_u64() noexcept;

    /// Uniform on the open interval (0, 1) with 53 random bits.
    double uniform() noexcept;
    double normal() noexcept;
    double exponential() noexcept;
    bool coin() noexcept { return (next_u64() >> 63) != 0; }

    std::uint64_t key() const noexcept { return key_; }
    std::uint64_t stream_id() const noexcept { return stream_; }
    std::uint64_t position() const noexcept { return position_; }

    friend bool operator==(const RandomStream&, const RandomStream&) = default;

private:
    void refill() noexcept;

    std::uint64_t key_;
    std::uint64_t stream_;
    std::uint64_t position_ = 0;  ///< Philox blocks consumed
    std::array<std::uint64_t, 2> buffer_{};
    int buffered_ = 0;
    double spare_normal_ = 0.0;
    bool has_spare_ = false;
};

/// Raw Philox4x32-10 block function, exposed for known-answer tests.
std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> counter,
                                          std::array<std::uint32_t, 2> key) noexcept;

/// SplitMix64 finalizer, used to derive child keys.
std::uint64_t mix64(std::uint64_t z) noexcept;

}  // namespace proxmh
