#include <cstdint>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "fbim/bench.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> out;
  std::optional<double> tol;
  std::optional<int> order;
};

int run(const std::string& suite, const CommonFlags& f) {
  fbim::ExperimentSpec spec = f.config.empty() ? fbim::ExperimentSpec{} : fbim::load_spec(f.config);
  spec.suite = suite;
  if (f.seed) spec.seed = *f.seed;
  if (f.out) spec.out_dir = *f.out;
  if (f.tol) spec.tol = *f.tol;
  if (f.order) spec.order = *f.order;
  std::filesystem::create_directories(spec.out_dir);

  const fbim::SuiteResult r = fbim::run_suite(spec);
  fbim::write_outputs(r, spec.out_dir);
  for (const auto& a : r.assertions)
    std::cout << (a.passed ? "PASS " : "FAIL ") << a.name << ": " << a.detail << '\n';
  std::cout << suite << ": " << (r.passed() ? "passed" : "failed") << " (outputs in " << spec.out_dir
            << ")\n";
  return r.passed() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Fluctuating boundary integral suites for periodic rigid-particle suspensions"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string chosen;
  for (const auto& name : fbim::suite_names()) {
    CLI::App* sub = app.add_subcommand(name, "run the " + name + " suite");
    sub->add_option("--config", flags.config, "JSON experiment file")->check(CLI::ExistingFile);
    sub->add_option("--seed", flags.seed, "base seed");
    sub->add_option("--out", flags.out, "output directory");
    sub->add_option("--tol", flags.tol, "Ewald and solver tolerance")->check(CLI::PositiveNumber);
    sub->add_option("--order", flags.order, "Alpert order")->check(CLI::IsMember({4, 8}));
    sub->callback([&chosen, name] { chosen = name; });
  }
  CLI11_PARSE(app, argc, argv);
  try {
    return run(chosen, flags);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  }
}
