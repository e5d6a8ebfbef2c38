#include "vinefx/errors.hpp"
#include "vinefx/ga.hpp"
#include "vinefx/harness.hpp"
#include "vinefx/model.hpp"
#include "vinefx/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace vinefx {

namespace {

double
sample_std(const std::vector<double>& x)
{
  if (x.size() < 2)
    return 0.0;
  double m = 0.0;
  for (double v : x)
    m += v;
  m /= static_cast<double>(x.size());
  double ss = 0.0;
  for (double v : x)
    ss += (v - m) * (v - m);
  return std::sqrt(ss / static_cast<double>(x.size() - 1));
}

} // namespace

std::vector<StabilityRow>
stability_report(const ReturnPanel& adjusted,
                 const Instance& instance,
                 const GAConfig& config,
                 const StabilityOptions& options)
{
  if (options.sizes.empty() || options.seeds.empty())
    throw InvalidParameter("stability needs at least one size and one seed");
  const std::vector<double> targets = options.targets.empty() ? std::vector<double>{ instance.mu } : options.targets;

  std::vector<StabilityRow> rows;
  for (std::size_t n : options.sizes) {
    StabilityRow row;
    row.size = n;
    // cvar[t][s]; NaN marks a failed solve
    std::vector<std::vector<double>> cvar(targets.size());
    for (std::uint64_t s : options.seeds) {
      ScenarioSet scen;
      try {
        scen = generate_scenarios(options.method, adjusted, n, substream_seed(s, n));
      } catch (const std::exception& e) {
        row.failures.push_back("seed " + std::to_string(s) + ": " + e.what());
        continue;
      }
      const auto points = frontier(instance, scen, targets, [&] {
        GAConfig c = config;
        c.seed = substream_seed(config.seed, s, n);
        return c;
      }());
      for (std::size_t t = 0; t < targets.size(); ++t) {
        const auto& p = points[t];
        if (p.status == PointStatus::Solved) {
          cvar[t].push_back(p.cvar);
          ++row.solved;
        } else {
          std::ostringstream msg;
          msg << "seed " << s << " mu " << targets[t] << ": " << status_name(p.status);
          if (!p.message.empty())
            msg << " (" << p.message << ")";
          row.failures.push_back(msg.str());
        }
      }
    }

    std::vector<double> means;
    double seed_std = 0.0;
    std::size_t counted = 0;
    for (const auto& c : cvar) {
      if (c.empty())
        continue;
      double m = 0.0;
      for (double v : c)
        m += v;
      means.push_back(m / static_cast<double>(c.size()));
      seed_std += sample_std(c);
      ++counted;
    }
    if (!means.empty()) {
      double m = 0.0;
      for (double v : means)
        m += v;
      row.average = m / static_cast<double>(means.size());
      row.std = sample_std(means);
      row.min = *std::min_element(means.begin(), means.end());
      row.max = *std::max_element(means.begin(), means.end());
      row.range = row.max - row.min;
      row.seed_std = seed_std / static_cast<double>(counted);
    }
    rows.push_back(std::move(row));
  }
  return rows;
}

} // namespace vinefx
