// Runs the twelve acceptance criteria and prints one line per criterion.
// Usage: acceptance [config-file] [criterion ids...]

#include <cstdlib>
#include <iostream>
#include <string>
#include <vector>

#include "k3lab/error.hpp"
#include "k3lab/family.hpp"

int main(int argc, char** argv) {
  using namespace k3lab::family;
  ExperimentConfig cfg;
  std::vector<int> only;
  try {
    for (int i = 1; i < argc; ++i) {
      const std::string arg = argv[i];
      if (arg.find_first_not_of("0123456789") == std::string::npos)
        only.push_back(std::stoi(arg));
      else
        cfg = load_config(arg);
    }
  } catch (const k3lab::Error& e) {
    std::cerr << "acceptance: " << e.what() << "\n";
    return 2;
  }
  const AcceptanceReport report = verify_acceptance(cfg, only);
  std::cout << report.to_text();
  int passed = 0;
  for (const auto& c : report.criteria) passed += c.passed ? 1 : 0;
  std::cout << passed << " of " << report.criteria.size() << " criteria passed\n";
  return report.all_passed() ? 0 : 1;
}
