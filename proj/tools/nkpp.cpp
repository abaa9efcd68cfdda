// nkpp: config-driven experiments for the doubly nonlocal Fisher-KPP equation.

#include <CLI11.hpp>

#include <cstdint>
#include <functional>
#include <iostream>
#include <optional>
#include <string>

#include "nkpp/nkpp.hpp"

namespace {

struct Globals {
  std::string out;
  bool force = false;
  std::optional<std::uint64_t> seed;
  int threads = 1;
};

int run_config(const std::string& path, std::optional<nkpp::ExperimentKind> kind, const Globals& g) {
  try {
    auto doc = nkpp::cfg::Document::load(path);
    if (g.seed) doc.set("", "seed", nkpp::cfg::Value{static_cast<double>(*g.seed)});
    auto exp = nkpp::experiment_from(doc, kind);
    nkpp::RunOptions opt;
    if (!g.out.empty()) opt.out_dir = g.out;
    opt.force = g.force;
    opt.threads = g.threads;
    const auto res = nkpp::run_experiment(std::move(exp), opt, std::cerr);
    for (const auto& v : res.verdicts)
      std::cout << (v.pass ? "PASS " : "FAIL ") << v.name << (v.detail.empty() ? "" : "  " + v.detail) << "\n";
    std::cout << "artifacts: " << res.out_dir.string() << "\n";
    return res.exit_code;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return nkpp::exit_code_for(ex);
  }
}

int run_compare(const std::string& a, const std::string& b, double tol, const Globals& g) {
  try {
    const auto ta = nkpp::io::load_table(a);
    const auto tb = nkpp::io::load_table(b);
    const auto rep = nkpp::io::compare_csv(ta, tb, tol);
    if (rep.hash_mismatch && !g.force) {
      std::cerr << "error: config hashes differ (" << ta.config_hash << " vs " << tb.config_hash
                << "); use --force to compare anyway\n";
      return nkpp::kExitConfig;
    }
    const auto diff = rep.differing();
    for (const auto& c : rep.columns) {
      if (c.max_rel == 0 && c.mismatched_text == 0) continue;
      std::cout << c.column << ": max_rel=" << nkpp::io::fmt(c.max_rel) << " max_abs=" << nkpp::io::fmt(c.max_abs)
                << " row=" << c.worst_row;
      if (c.mismatched_text) std::cout << " text_mismatches=" << c.mismatched_text;
      std::cout << (c.max_rel > tol || c.mismatched_text ? "  EXCEEDS" : "") << "\n";
    }
    if (diff.empty()) std::cout << "no differences above tolerance " << nkpp::io::fmt(tol) << "\n";
    return diff.empty() ? nkpp::kExitOk : nkpp::kExitVerdictFailed;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return nkpp::kExitConfig;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Numerical laboratory for the doubly nonlocal Fisher-KPP equation"};
  app.require_subcommand(1);
  Globals g;
  std::uint64_t seed = 0;
  app.add_option("--out", g.out, "output directory (overrides the config's `out`)");
  app.add_flag("--force", g.force, "run even when required assumptions fail; compare mismatched hashes");
  auto* seed_opt = app.add_option("--seed", seed, "seed for randomized initial data (overrides the config)");
  app.add_option("--threads", g.threads, "worker threads (accepted; runs are sequential)")->check(CLI::PositiveNumber);

  std::string config;
  std::function<int()> action;

  auto* run = app.add_subcommand("run", "run the experiment named by the config's `kind`");
  run->add_option("config", config, "config file")->required();
  run->fallthrough();
  run->callback([&] { action = [&] { return run_config(config, std::nullopt, g); }; });

  for (auto k : {nkpp::ExperimentKind::check, nkpp::ExperimentKind::speed, nkpp::ExperimentKind::front_set,
                 nkpp::ExperimentKind::simulate, nkpp::ExperimentKind::track, nkpp::ExperimentKind::weinberger,
                 nkpp::ExperimentKind::stationary}) {
    auto* sub = app.add_subcommand(nkpp::to_string(k), "run the config as a `" + nkpp::to_string(k) + "` experiment");
    sub->add_option("config", config, "config file")->required();
    sub->fallthrough();
    sub->callback([&, k] { action = [&, k] { return run_config(config, k, g); }; });
  }

  std::string a, b;
  double tol = 1e-12;
  auto* cmp = app.add_subcommand("compare", "elementwise relative differences between two artifacts");
  cmp->add_option("a", a, "first artifact (.csv, .json or .bin)")->required();
  cmp->add_option("b", b, "second artifact")->required();
  cmp->add_option("--tol", tol, "relative tolerance");
  cmp->fallthrough();
  cmp->callback([&] { action = [&] { return run_compare(a, b, tol, g); }; });

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return nkpp::kExitConfig;
  }
  if (seed_opt->count()) g.seed = seed;
  return action ? action() : nkpp::kExitConfig;
}
