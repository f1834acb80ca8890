// bochner-cli: curvature | verify | compare-frames | extend

#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "bochner/cli.hpp"

namespace {

std::array<int, 2> parse_grid(const std::string& s) {
  const auto x = s.find_first_of("xX");
  if (x == std::string::npos) throw bochner::cli::ConfigError("--grid: expected AxB, got '" + s + "'");
  try {
    std::size_t n1 = 0, n2 = 0;
    const int a = std::stoi(s.substr(0, x), &n1);
    const int b = std::stoi(s.substr(x + 1), &n2);
    if (n1 != x || n2 != s.size() - x - 1) throw std::invalid_argument(s);
    return {a, b};
  } catch (const std::logic_error&) {
    throw bochner::cli::ConfigError("--grid: expected AxB, got '" + s + "'");
  }
}

std::pair<std::string, double> parse_tol(const std::string& s) {
  const auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0)
    throw bochner::cli::ConfigError("--tol-override: expected NAME=VAL, got '" + s + "'");
  try {
    std::size_t n = 0;
    const double v = std::stod(s.substr(eq + 1), &n);
    if (n != s.size() - eq - 1) throw std::invalid_argument(s);
    return {s.substr(0, eq), v};
  } catch (const std::logic_error&) {
    throw bochner::cli::ConfigError("--tol-override: expected NAME=VAL, got '" + s + "'");
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Adapted frames, extensions and Bochner Laplacian decomposition checks"};
  app.set_version_flag("--version", std::string(bochner::cli::kVersion));
  app.require_subcommand(1);

  std::string config, suite, grid, json, csv, mutate;
  int points = 0;
  std::uint64_t seed = 0;
  std::vector<std::string> tols, frames;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config, "JSON run configuration")->required();
    sub->add_option("--points", points, "random sample count (needs a seed)");
    sub->add_option("--grid", grid, "grid size AxB");
    sub->add_option("--seed", seed, "random seed");
    sub->add_option("--tol-override", tols, "identity budget NAME=VAL (repeatable)");
    sub->add_option("--json", json, "write the JSON report here");
    sub->add_option("--csv", csv, "write per-row CSV here");
    sub->add_option("--frame", frames, "frame name (repeatable)");
    sub->add_option("--mutate", mutate, "debug: flip the sign of one decomposition term")->group("Debug");
  };
  auto* curvature = app.add_subcommand("curvature", "curvature and frame scalars per point");
  auto* verify = app.add_subcommand("verify", "run one identity suite");
  auto* compare = app.add_subcommand("compare-frames", "decompose one field in several frames");
  auto* extend = app.add_subcommand("extend", "build an extension and check its defining equations");
  for (auto* s : {curvature, verify, compare, extend}) add_common(s);
  verify->add_option("--suite", suite, "structure | lemmas | decomposition | extension | operators")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : bochner::cli::kExitConfig;
  }

  bochner::cli::Overrides ov;
  try {
    CLI::App* sub = app.get_subcommands().front();
    if (sub->count("--points")) ov.points = points;
    if (sub->count("--seed")) ov.seed = seed;
    if (sub->count("--grid")) ov.grid = parse_grid(grid);
    for (const auto& t : tols) ov.tolerances.push_back(parse_tol(t));
    if (sub->count("--json")) ov.json_path = json;
    if (sub->count("--csv")) ov.csv_path = csv;
    ov.frames = frames;
    ov.mutation = mutate;
    return bochner::cli::run(sub->get_name(), config, suite, ov, std::cout, std::cerr);
  } catch (const bochner::cli::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return bochner::cli::kExitConfig;
  }
}
