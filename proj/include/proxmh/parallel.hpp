#pragma once

// Many independent chains. Each chain owns its state and stream; the kernel
// is shared read-only. Results are ordered by chain index, so the serial and
// OpenMP runners return identical vectors.

#include <cstdint>
#include <vector>

#include "proxmh/sampler.hpp"

namespace proxmh {

/// Worker count: `requested` if > 0, else PROXMH_THREADS, else the OpenMP
/// default.
int resolve_threads(int requested = 0);

/// Chains first_chain .. first_chain + n_chains - 1.
std::vector<ChainRun> run_chains_serial(const TransitionKernel& kernel, const SamplerConfig& config,
                                        std::uint64_t n_chains, std::uint64_t first_chain = 0);

/// Same result as run_chains_serial. If chains throw, the exception from the
/// lowest chain index is rethrown after all workers finish.
std::vector<ChainRun> run_chains(const TransitionKernel& kernel, const SamplerConfig& config,
                                 std::uint64_t n_chains, std::uint64_t first_chain = 0, int threads = 0);

}  // namespace proxmh
