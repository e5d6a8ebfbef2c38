// vinefx command-line front end.
//
// Exit codes: 0 success, 1 validation failure (usage, config, malformed
// inputs), 2 runtime failure.

#include "vinefx/errors.hpp"
#include "vinefx/harness.hpp"
#include "vinefx/io.hpp"
#include "vinefx/model.hpp"
#include "vinefx/rvine.hpp"
#include "vinefx/scenarios.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <algorithm>
#include <iostream>
#include <optional>

namespace {

using namespace vinefx;
using nlohmann::json;

struct Options
{
  std::string config, panel, instance, scenarios, solution, out, manifest, trace, summary;
  std::optional<std::uint64_t> seed;
  std::optional<std::string> method;
  std::optional<std::size_t> n, kc, kg;
  std::optional<double> mu;
};

class UsageError : public std::runtime_error
{
public:
  using std::runtime_error::runtime_error;
};

Config
effective_config(const Options& o)
{
  Config c = o.config.empty() ? Config::from_json(json::object()) : read_config(o.config);
  if (o.seed) {
    c.seed = *o.seed;
    c.ga.seed = *o.seed;
  }
  if (o.method)
    c.method = method_from_name(*o.method);
  if (o.n)
    c.n_scenarios = *o.n;
  if (o.mu)
    c.model["mu"] = *o.mu;
  if (o.kc)
    c.model["max_currencies"] = *o.kc;
  if (o.kg)
    c.model["max_forwards"] = *o.kg;
  return c;
}

void
need(const std::string& value, const char* flag)
{
  if (value.empty())
    throw UsageError(std::string("missing required option ") + flag);
}

ReturnPanel
adjusted_panel(const Options& o, const Config& c)
{
  need(o.panel, "--panel");
  return adjust_returns(load_panel(o.panel, c.base_currency));
}

ScenarioSet
scenario_input(const Options& o, const Config& c)
{
  if (!o.scenarios.empty())
    return read_scenarios(o.scenarios);
  if (o.panel.empty())
    throw UsageError("need --scenarios or --panel");
  return generate_scenarios(c.method, adjusted_panel(o, c), c.n_scenarios, c.seed);
}

Instance
instance_input(const Options& o, const Config& c)
{
  need(o.instance, "--instance");
  return apply_config(read_instance(o.instance), c);
}

json
inputs_of(const Options& o)
{
  json in = json::object();
  for (auto [key, value] : { std::pair{ "config", &o.config },
                             std::pair{ "panel", &o.panel },
                             std::pair{ "instance", &o.instance },
                             std::pair{ "scenarios", &o.scenarios },
                             std::pair{ "solution", &o.solution } })
    if (!value->empty())
      in[key] = *value;
  return in;
}

void
finish(const std::string& command,
       const std::vector<std::string>& args,
       const Options& o,
       const Config& c,
       std::vector<std::string> outputs)
{
  const std::string path = o.manifest.empty() ? o.out + ".manifest.json" : o.manifest;
  write_json(path, make_manifest(command, args, c, inputs_of(o), outputs));
}

int
run(std::vector<std::string> args);

int
replay(const std::string& path)
{
  const json m = read_json(path);
  if (!m.contains("args") || !m.contains("outputs"))
    throw UsageError("not a run manifest: " + path);
  auto args = m.at("args").get<std::vector<std::string>>();
  const int rc = run(args);
  if (rc != 0)
    return rc;
  int mismatches = 0;
  for (const auto& e : m.at("outputs")) {
    const auto p = e.at("path").get<std::string>();
    const auto want = e.value("fnv1a64", std::string());
    const auto got = file_digest(p);
    const bool same = want == got;
    std::cout << (same ? "identical " : "DIFFERENT ") << p << "\n";
    mismatches += same ? 0 : 1;
  }
  return mismatches ? 1 : 0;
}

int
run(std::vector<std::string> args)
{
  CLI::App app{ "Currency overlay optimisation with vine copula scenarios", "vinefx" };
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Options o;
  std::string replay_manifest;

  auto common = [&](CLI::App* s) {
    s->add_option("--config", o.config, "Run configuration (JSON)");
    s->add_option("--seed", o.seed, "Base seed");
    s->add_option("--out", o.out, "Output file")->required();
    s->add_option("--manifest", o.manifest, "Manifest path (default <out>.manifest.json)");
  };

  auto* fit = app.add_subcommand("fit-vine", "Fit marginals and an R-vine to a panel");
  common(fit);
  fit->add_option("--panel", o.panel, "Return panel (CSV)")->required();

  auto* gen = app.add_subcommand("gen-scenarios", "Generate return scenarios");
  common(gen);
  gen->add_option("--panel", o.panel, "Return panel (CSV)")->required();
  gen->add_option("--method", o.method, "rvc or mvn");
  gen->add_option("--n", o.n, "Number of scenarios");

  auto* opt = app.add_subcommand("optimize", "Solve the overlay model at one target");
  common(opt);
  opt->add_option("--instance", o.instance, "Instance (JSON)")->required();
  opt->add_option("--scenarios", o.scenarios, "Scenario file (CSV); generated from --panel if absent");
  opt->add_option("--panel", o.panel, "Return panel (CSV)");
  opt->add_option("--method", o.method, "rvc or mvn");
  opt->add_option("--n", o.n, "Number of scenarios");
  opt->add_option("--mu", o.mu, "Return target per period");
  opt->add_option("--kc", o.kc, "Currency cardinality");
  opt->add_option("--kg", o.kg, "Forward cardinality");
  opt->add_option("--trace", o.trace, "Write the GA trace (CSV)");

  auto* fr = app.add_subcommand("frontier", "Sweep the return target grid");
  common(fr);
  fr->add_option("--instance", o.instance, "Instance (JSON)")->required();
  fr->add_option("--scenarios", o.scenarios, "Scenario file (CSV); generated from --panel if absent");
  fr->add_option("--panel", o.panel, "Return panel (CSV)");
  fr->add_option("--method", o.method, "rvc or mvn");
  fr->add_option("--n", o.n, "Number of scenarios");
  fr->add_option("--kc", o.kc, "Currency cardinality");
  fr->add_option("--kg", o.kg, "Forward cardinality");

  auto* bt = app.add_subcommand("backtest", "Apply a solution to a return panel");
  common(bt);
  bt->add_option("--instance", o.instance, "Instance (JSON)")->required();
  bt->add_option("--solution", o.solution, "Solution (JSON)")->required();
  bt->add_option("--panel", o.panel, "Return panel (CSV)")->required();
  bt->add_option("--summary", o.summary, "Write summary statistics (JSON)");

  auto* st = app.add_subcommand("stability", "In-sample stability across scenario sizes");
  common(st);
  st->add_option("--instance", o.instance, "Instance (JSON)")->required();
  st->add_option("--panel", o.panel, "Return panel (CSV)")->required();
  st->add_option("--method", o.method, "rvc or mvn");
  st->add_option("--kc", o.kc, "Currency cardinality");
  st->add_option("--kg", o.kg, "Forward cardinality");

  auto* rp = app.add_subcommand("replay", "Re-run a manifest and compare outputs");
  rp->add_option("--manifest", replay_manifest)->required();

  const std::vector<std::string> given = args;
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 1;
  }
  args = given;

  if (*rp)
    return replay(replay_manifest);

  const Config c = effective_config(o);
  std::vector<std::string> outputs{ o.out };

  if (*fit) {
    RVineSpec spec;
    const auto adj = adjusted_panel(o, c);
    generate_rvc(adj, 1, parametric_families(), c.seed, &spec);
    write_json(o.out, json{ { "series", adj.names() }, { "vine", to_json(spec) } });
    finish("fit-vine", args, o, c, outputs);
  } else if (*gen) {
    write_scenarios(o.out, generate_scenarios(c.method, adjusted_panel(o, c), c.n_scenarios, c.seed));
    finish("gen-scenarios", args, o, c, outputs);
  } else if (*opt) {
    const Instance inst = instance_input(o, c);
    const ScenarioSet scen = scenario_input(o, c);
    GAConfig g = c.ga;
    g.seed = c.seed;
    const auto res = run_ga(inst, scen, g);
    write_json(o.out, to_json(inst, res.solution, res.evaluation));
    if (!o.trace.empty()) {
      write_text(o.trace, trace_to_csv(res.trace));
      outputs.push_back(o.trace);
    }
    std::cout << "cvar " << format_number(res.evaluation.risk.cvar) << " expected_return "
              << format_number(res.evaluation.expected_return) << " feasible "
              << (res.evaluation.feasible() ? "yes" : "no") << "\n";
    finish("optimize", args, o, c, outputs);
  } else if (*fr) {
    const Instance inst = instance_input(o, c);
    const ScenarioSet scen = scenario_input(o, c);
    GAConfig g = c.ga;
    g.seed = c.seed;
    const auto points = frontier(inst, scen, c.mu_grid, g);
    write_text(o.out, frontier_to_csv(points));
    for (const auto& p : points)
      if (!p.message.empty())
        std::cerr << "mu " << p.mu << ": " << p.message << "\n";
    finish("frontier", args, o, c, outputs);
  } else if (*bt) {
    const Instance inst = instance_input(o, c);
    const Solution sol = solution_from_json(inst, read_json(o.solution));
    const auto rep = backtest(allocation_from(inst, sol), load_panel(o.panel, c.base_currency));
    write_text(o.out, backtest_to_csv(rep));
    if (!o.summary.empty()) {
      write_json(o.summary, to_json(rep));
      outputs.push_back(o.summary);
    }
    std::cout << to_json(rep).dump() << "\n";
    finish("backtest", args, o, c, outputs);
  } else if (*st) {
    const Instance inst = instance_input(o, c);
    StabilityOptions so;
    so.sizes = c.stability_sizes;
    so.seeds = c.stability_seeds;
    so.targets = c.stability_targets;
    so.method = c.method;
    GAConfig g = c.ga;
    g.seed = c.seed;
    const auto rows = stability_report(adjusted_panel(o, c), inst, g, so);
    write_text(o.out, stability_to_csv(rows));
    for (const auto& r : rows)
      for (const auto& f : r.failures)
        std::cerr << "size " << r.size << ": " << f << "\n";
    finish("stability", args, o, c, outputs);
  }
  return 0;
}

} // namespace

int
main(int argc, char** argv)
{
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    return run(args);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 1;
  } catch (const InvalidParameter& e) {
    std::cerr << "invalid parameter: " << e.what() << "\n";
    return 1;
  } catch (const ParseError& e) {
    std::cerr << "parse error: " << e.what() << "\n";
    return 1;
  } catch (const MissingRateSeries& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const MissingColumn& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const EmptyPanel& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << "\n";
    return 2;
  }
}
