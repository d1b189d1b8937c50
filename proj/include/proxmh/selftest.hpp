#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace proxmh {

struct SelftestResult {
    std::string name;
    bool passed = false;
    std::string detail;
};

/// Invariant suite behind `proxmh selftest`: closed-form partition
/// functions, detailed balance, the smooth reduction, laziness, grid
/// normalisation, proposal moment bounds on the bundled targets and
/// stationarity on the 1D lasso target. One line per check is written to
/// `out`.
std::vector<SelftestResult> run_selftest(std::ostream& out, int threads = 0);

}  // namespace proxmh
