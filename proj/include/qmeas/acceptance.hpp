#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace qmeas::acceptance {

// One verification criterion. Tolerances and run sizes are pinned inside the
// criterion implementations so a result is reproducible from the binary alone.
struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;  // measured values; on failure also the violated bounds
    double seconds = 0.0;
};

std::vector<int> criterion_ids();

// Runs one criterion. Exceptions escaping the check body are folded into a
// failed result. Throws ConfigError for an id that does not exist.
CriterionResult run_criterion(int id);

// Runs the listed criteria (all of them when `ids` is empty), printing one
// line per criterion, e.g.
//   C03 PASS norm-conservation-and-defect-scaling (2.1 s) max|norm-1|=3.2e-11 ...
// Returns 0 when every criterion passed, 4 otherwise.
int run(std::ostream& os, const std::vector<int>& ids = {});

}  // namespace qmeas::acceptance
