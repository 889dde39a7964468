// Acceptance suite runner: one line per criterion, nonzero exit on failure.
#include <cstdio>
#include <cstring>

#include "tikflow/acceptance.hpp"

int main(int argc, char** argv) {
  tikflow::acceptance::Options opts;
  for (int i = 1; i + 1 < argc; i += 2) {
    if (std::strcmp(argv[i], "--only") == 0) opts.only = argv[i + 1];
    if (std::strcmp(argv[i], "--out") == 0) opts.out_dir = argv[i + 1];
    if (std::strcmp(argv[i], "--workers") == 0) opts.workers = std::atoi(argv[i + 1]);
  }
  opts.on_result = [](const tikflow::experiments::CheckResult& r) {
    std::printf("%-4s %-7s %s\n", r.id.c_str(), r.status.c_str(), r.detail.c_str());
    std::fflush(stdout);
  };
  const auto suite = tikflow::acceptance::run_suite(opts);
  std::printf("%s (%d failing)\n", suite.failures == 0 ? "ACCEPTANCE PASSED" : "ACCEPTANCE FAILED",
              suite.failures);
  return suite.failures == 0 ? 0 : 1;
}
