// Runs the release gate: one line per criterion, exit 0 only if all pass.
// Optional arguments select a subset of criterion ids (1..11).
#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "qmeas/acceptance.hpp"
#include "qmeas/errors.hpp"

int main(int argc, char** argv) {
    std::vector<int> ids;
    for (int i = 1; i < argc; ++i) {
        char* end = nullptr;
        const long v = std::strtol(argv[i], &end, 10);
        if (end == argv[i] || *end != '\0' || v < 1 || v > 11) {
            std::fprintf(stderr, "usage: %s [criterion-id...]  (ids are 1..11)\n", argv[0]);
            return qmeas::kExitConfig;
        }
        ids.push_back(static_cast<int>(v));
    }
    return qmeas::acceptance::run(std::cout, ids);
}
