// Acceptance suite: one PASS/FAIL line per criterion, then the suite verdict.
// Usage: fraglab_acceptance [--seed S] [--threads K] [--criteria 1,5,9] [--report PATH]

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <thread>

#include "fraglab/harness.hpp"

int main(int argc, char** argv) {
  fraglab::RunConfig cfg;
  cfg.threads = std::max(1u, std::thread::hardware_concurrency());
  cfg.timing = true;
  std::string report;
  for (int i = 1; i + 1 < argc; i += 2) {
    const std::string flag = argv[i];
    if (flag == "--seed") cfg.seed = std::stoull(argv[i + 1]);
    else if (flag == "--threads") cfg.threads = static_cast<unsigned>(std::stoul(argv[i + 1]));
    else if (flag == "--report") report = argv[i + 1];
    else if (flag == "--criteria") {
      std::stringstream ss(argv[i + 1]);
      for (std::string item; std::getline(ss, item, ',');) cfg.criteria.push_back(std::stoi(item));
    }
    else {
      std::cerr << "unknown flag " << flag << "\n";
      return 2;
    }
  }

  const auto checks = fraglab::acceptance_checks();
  const auto res = fraglab::run_acceptance_suite(cfg);
  for (const auto& v : res.verdicts) {
    std::printf("    %-4s C%-2d %-55s stat=%-12.6g %s%s\n", v.pass ? "ok" : "FAIL", v.criterion, v.name.c_str(),
                v.statistic, v.p_value ? ("p=" + fraglab::format_number(*v.p_value) + " ").c_str() : "",
                v.detail.c_str());
  }
  for (const auto& c : checks) {
    if (!cfg.wants(c.criterion)) continue;
    double runtime = 0.0;
    for (const auto& v : res.verdicts)
      if (v.criterion == c.criterion) runtime = v.runtime;
    std::printf("%s criterion %2d: %-34s (%.1f s)\n", res.criterion_pass(c.criterion) ? "PASS" : "FAIL", c.criterion,
                c.name.c_str(), runtime);
  }
  std::printf("statistical failures before reseed: %zu\n", res.statistical_failures);
  std::printf("%s acceptance suite\n", res.pass ? "PASS" : "FAIL");
  if (!report.empty()) std::ofstream(report) << fraglab::render_report(res, cfg);
  return res.pass ? 0 : 1;
}
