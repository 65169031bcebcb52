// contraq command-line front end.
//
//   contraq list
//   contraq run <scenario.json|name> [--out DIR] [--dt X] [--seed N]
//   contraq run --all [--out DIR] [--jobs N]
//   contraq bounds <scenario.json|name> [--dt X]
//
// Exit codes: 0 all checks pass, 2 check failure or solver error, 3 IO/schema.
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <future>
#include <iostream>
#include <thread>

#include "CLI11.hpp"
#include "contraq/runner.hpp"

namespace fs = std::filesystem;
using namespace contraq;

namespace {

constexpr int kExitIO = 3;

std::string default_out() {
  const char* env = std::getenv("CONTRAQ_OUT");
  return env && *env ? env : "contraq_out";
}

// A path, or the name of a bundled scenario.
std::string resolve(const std::string& arg) {
  if (fs::exists(arg)) return arg;
  const fs::path bundled = fs::path(bundled_scenario_dir()) / (arg + ".json");
  return fs::exists(bundled) ? bundled.string() : arg;
}

struct Outcome {
  int code = 0;
  std::string line;
  std::string details;
};

Outcome run_one(const std::string& path, const std::string& out, const RunOptions& opts) {
  Outcome o;
  try {
    const Scenario s = load_scenario(path);
    const RunReport rep = run(s, out, opts);
    size_t ok = 0;
    for (const auto& c : rep.checks) {
      if (c.passed) {
        ++ok;
        continue;
      }
      char buf[256];
      std::snprintf(buf, sizeof buf, "  %s: check %s (%s) failed, measured %.6g vs %.6g %s\n", rep.name.c_str(),
                    c.id.c_str(), c.type.c_str(), c.measured, c.threshold, c.detail.c_str());
      o.details += buf;
    }
    if (!rep.error.empty()) o.details += "  " + rep.name + ": " + rep.error + "\n";
    char buf[256];
    std::snprintf(buf, sizeof buf, "%-28s %s  %zu/%zu checks  %.3f s", rep.name.c_str(), rep.passed() ? "PASS" : "FAIL",
                  ok, rep.checks.size(), rep.duration_s);
    o.line = buf;
    o.code = rep.exit_code();
  } catch (const Error& e) {
    o.line = path + "  ERROR";
    o.details = std::string("  ") + to_string(e.kind()) + ": " + e.what() + "\n";
    o.code = e.kind() == ErrorKind::SchemaError || e.kind() == ErrorKind::UnknownBuiltin || e.kind() == ErrorKind::IOError
                 ? kExitIO
                 : 2;
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"contraq: constrained contraction analysis scenarios"};
  app.require_subcommand(1);

  auto* list = app.add_subcommand("list", "List bundled scenarios");

  std::string scenario, out = default_out();
  double dt = 0.0;
  std::uint64_t seed = 0;
  bool all = false;
  unsigned jobs = std::max(1u, std::thread::hardware_concurrency());
  auto* runc = app.add_subcommand("run", "Run a scenario and write results");
  runc->add_option("scenario", scenario, "Scenario file or bundled name");
  runc->add_flag("--all", all, "Run every bundled scenario");
  runc->add_option("--out", out, "Output directory (default $CONTRAQ_OUT or ./contraq_out)");
  auto* dt_opt = runc->add_option("--dt", dt, "Override the integration step")->check(CLI::PositiveNumber);
  auto* seed_opt = runc->add_option("--seed", seed, "Seed for randomized perturbation directions");
  runc->add_option("--jobs", jobs, "Parallel scenarios with --all")->check(CLI::PositiveNumber);

  std::string bscenario;
  double bdt = 0.0;
  auto* bounds = app.add_subcommand("bounds", "Print contraction bounds along a scenario trajectory");
  bounds->add_option("scenario", bscenario, "Scenario file or bundled name")->required();
  auto* bdt_opt = bounds->add_option("--dt", bdt, "Override the integration step")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);

  if (*list) {
    for (const auto& n : list_scenarios()) std::cout << n << '\n';
    return 0;
  }

  if (*bounds) {
    try {
      RunOptions opts;
      if (*bdt_opt) opts.dt = bdt;
      const BoundsSeries b = compute_bounds(load_scenario(resolve(bscenario)), opts);
      nlohmann::ordered_json j;
      j["lambda_min"] = b.min();
      j["lambda_max"] = b.max();
      j["samples"] = b.t.size();
      write_json(std::cout, j);
      return 0;
    } catch (const Error& e) {
      std::cerr << to_string(e.kind()) << ": " << e.what() << '\n';
      return e.kind() == ErrorKind::SchemaError || e.kind() == ErrorKind::UnknownBuiltin || e.kind() == ErrorKind::IOError
                 ? kExitIO
                 : 2;
    }
  }

  RunOptions opts;
  if (*dt_opt) opts.dt = dt;
  if (*seed_opt) opts.seed = seed;
  if (all == !scenario.empty()) {
    std::cerr << "run: give either a scenario or --all\n";
    return kExitIO;
  }

  std::vector<std::string> paths;
  if (all) {
    for (const auto& n : list_scenarios()) paths.push_back((fs::path(bundled_scenario_dir()) / (n + ".json")).string());
  } else {
    paths.push_back(resolve(scenario));
  }

  // Each scenario writes only its own files, so they can run side by side.
  std::vector<Outcome> results(paths.size());
  for (size_t start = 0; start < paths.size(); start += jobs) {
    std::vector<std::future<Outcome>> batch;
    for (size_t i = start; i < std::min(paths.size(), start + jobs); ++i)
      batch.push_back(std::async(std::launch::async, run_one, paths[i], out, opts));
    for (size_t i = 0; i < batch.size(); ++i) results[start + i] = batch[i].get();
  }

  int code = 0;
  for (const auto& r : results) {
    std::cout << r.line << '\n';
    std::cerr << r.details;
    code = std::max(code, r.code);
  }
  return code;
}
