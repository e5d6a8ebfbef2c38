#include "vinefx/rvine.hpp"

#include "vinefx/errors.hpp"
#include "vinefx/parallel.hpp"
#include "vinefx/random.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

namespace vinefx {

namespace {

using Mask = std::uint64_t;

Mask
bit(int v)
{
  return Mask{ 1 } << v;
}

std::vector<int>
mask_members(Mask m)
{
  std::vector<int> out;
  for (int v = 0; v < 64; ++v)
    if (m & bit(v))
      out.push_back(v);
  return out;
}

// Slots hold conditional distribution values F(var | set). Slot v < n is the
// raw uniform of variable v.
class SlotTable
{
public:
  explicit SlotTable(std::size_t n)
  {
    for (std::size_t v = 0; v < n; ++v)
      slots_[{ static_cast<int>(v), 0 }] = static_cast<int>(v);
    count_ = static_cast<int>(n);
  }

  int find(int var, Mask set) const
  {
    auto it = slots_.find({ var, set });
    return it == slots_.end() ? -1 : it->second;
  }

  int require(int var, Mask set, const char* what) const
  {
    const int s = find(var, set);
    if (s < 0)
      throw InvalidParameter(std::string("structure matrix is not a regular vine: ") + what);
    return s;
  }

  int add(int var, Mask set)
  {
    auto [it, inserted] = slots_.try_emplace({ var, set }, count_);
    if (inserted)
      ++count_;
    return it->second;
  }

  int size() const { return count_; }

private:
  std::map<std::pair<int, Mask>, int> slots_;
  int count_ = 0;
};

struct DensityStep
{
  const FittedBicop* copula;
  int a_in, b_in, a_out, b_out;
};

struct DensityPlan
{
  std::vector<DensityStep> steps;
  int slots = 0;
};

Mask
column_mask(const RVineSpec& s, std::size_t from_row, std::size_t col)
{
  Mask m = 0;
  for (std::size_t r = from_row; r < s.dimension(); ++r)
    m |= bit(s.structure(r, col) - 1);
  return m;
}

DensityPlan
density_plan(const RVineSpec& s)
{
  const std::size_t n = s.dimension();
  SlotTable table(n);
  DensityPlan plan;
  for (std::size_t t = 0; t + 1 < n; ++t) {
    const std::size_t k = n - 1 - t;
    for (std::size_t i = 0; i < k; ++i) {
      const int a = s.structure(i, i) - 1;
      const int b = s.structure(k, i) - 1;
      const Mask d = column_mask(s, k + 1, i);
      DensityStep st{ &s.pair(k, i), table.require(a, d, "missing conditional value"),
                      table.require(b, d, "missing conditional value"), 0, 0 };
      st.a_out = table.add(a, d | bit(b));
      st.b_out = table.add(b, d | bit(a));
      plan.steps.push_back(st);
    }
  }
  plan.slots = table.size();
  return plan;
}

struct InverseStep
{
  const FittedBicop* copula;
  int w_in, cond_in, out;
};

struct ColumnPlan
{
  int var;
  int top; // slot receiving the fresh uniform
  std::vector<InverseStep> inverse;
  std::vector<DensityStep> forward;
};

struct SamplingPlan
{
  std::vector<ColumnPlan> columns; // processed in order
  int slots = 0;
};

SamplingPlan
sampling_plan(const RVineSpec& s)
{
  const std::size_t n = s.dimension();
  SlotTable table(n);
  SamplingPlan plan;
  for (std::size_t ii = n; ii-- > 0;) {
    const int a = s.structure(ii, ii) - 1;
    ColumnPlan col{ a, table.add(a, column_mask(s, ii + 1, ii)), {}, {} };
    for (std::size_t k = ii + 1; k < n; ++k) {
      const int b = s.structure(k, ii) - 1;
      const Mask d = column_mask(s, k + 1, ii);
      const int w_in = table.require(a, d | bit(b), "broken sampling chain");
      const int cond = table.require(b, d, "conditional value not yet sampled");
      col.inverse.push_back({ &s.pair(k, ii), w_in, cond, table.add(a, d) });
    }
    for (std::size_t k = n; k-- > ii + 1;) {
      const int b = s.structure(k, ii) - 1;
      const Mask d = column_mask(s, k + 1, ii);
      DensityStep st{ &s.pair(k, ii), table.require(a, d, "broken sampling chain"),
                      table.require(b, d, "conditional value not yet sampled"), 0, 0 };
      st.a_out = table.require(a, d | bit(b), "broken sampling chain");
      st.b_out = table.add(b, d | bit(a));
      col.forward.push_back(st);
    }
    plan.columns.push_back(std::move(col));
  }
  plan.slots = table.size();
  return plan;
}

// Union-find over small integer ids.
struct Dsu
{
  std::vector<int> parent;
  explicit Dsu(std::size_t n) : parent(n) { std::iota(parent.begin(), parent.end(), 0); }
  int root(int x)
  {
    while (parent[x] != x)
      x = parent[x] = parent[parent[x]];
    return x;
  }
  bool join(int a, int b)
  {
    a = root(a);
    b = root(b);
    if (a == b)
      return false;
    parent[b] = a;
    return true;
  }
};

// ---- sequential fitting -------------------------------------------------

struct FitNode
{
  Mask all = 0;
  int a = -1, b = -1;   // conditioned pair, -1 for tree-0 nodes
  Mask cond = 0;
  FittedBicop copula;   // first argument is `a`
  std::vector<double> ha; // F(a | cond + b)
  std::vector<double> hb; // F(b | cond + a)

  const std::vector<double>& data_for(int v) const { return v == a ? ha : hb; }
};

int
single_member(Mask m)
{
  for (int v = 0; v < 64; ++v)
    if (m & bit(v))
      return v;
  return -1;
}

std::string
edge_label(int a, int b, Mask cond)
{
  std::string s = std::to_string(a + 1) + "," + std::to_string(b + 1);
  const auto members = mask_members(cond);
  if (!members.empty()) {
    s += "|";
    for (std::size_t i = 0; i < members.size(); ++i)
      s += (i ? "," : "") + std::to_string(members[i] + 1);
  }
  return s;
}

// Maximum spanning tree by Prim's algorithm over the allowed edges; ties go
// to the lexicographically smallest (p, q).
std::vector<std::pair<int, int>>
max_spanning_tree(int nodes, const std::vector<std::pair<int, int>>& edges,
                  const std::vector<double>& weight)
{
  std::vector<bool> in(static_cast<std::size_t>(nodes), false);
  in[0] = true;
  std::vector<std::pair<int, int>> chosen;
  for (int step = 1; step < nodes; ++step) {
    std::ptrdiff_t best = -1;
    for (std::size_t e = 0; e < edges.size(); ++e) {
      const auto [p, q] = edges[e];
      if (in[p] == in[q])
        continue;
      if (best < 0 || weight[e] > weight[best])
        best = static_cast<std::ptrdiff_t>(e);
    }
    if (best < 0)
      throw FitFailure("candidate graph of a vine tree is disconnected");
    chosen.push_back(edges[best]);
    in[edges[best].first] = true;
    in[edges[best].second] = true;
  }
  return chosen;
}

} // namespace

std::string
VineEdge::label() const
{
  Mask m = 0;
  for (int v : conditioning)
    m |= bit(v);
  return edge_label(first, second, m);
}

RVineSpec::RVineSpec(std::size_t dimension)
  : n_(dimension)
  , m_(dimension * dimension, 0)
  , pc_(dimension * dimension)
{
  if (dimension < 2 || dimension > 64)
    throw InvalidParameter("vine dimension must be between 2 and 64");
}

bool
RVineSpec::operator==(const RVineSpec& o) const
{
  if (n_ != o.n_ || m_ != o.m_)
    return false;
  for (std::size_t k = 0; k < n_; ++k)
    for (std::size_t i = 0; i < k; ++i) {
      const auto& x = pair(k, i);
      const auto& y = o.pair(k, i);
      if (x.family != y.family || x.theta != y.theta || x.theta2 != y.theta2)
        return false;
    }
  return true;
}

std::vector<std::vector<VineEdge>>
RVineSpec::trees() const
{
  std::vector<std::vector<VineEdge>> out(n_ - 1);
  for (std::size_t t = 0; t + 1 < n_; ++t) {
    const std::size_t k = n_ - 1 - t;
    for (std::size_t i = 0; i < k; ++i) {
      VineEdge e;
      e.first = structure(i, i) - 1;
      e.second = structure(k, i) - 1;
      for (std::size_t r = k + 1; r < n_; ++r)
        e.conditioning.push_back(structure(r, i) - 1);
      std::sort(e.conditioning.begin(), e.conditioning.end());
      e.copula = pair(k, i);
      out[t].push_back(std::move(e));
    }
  }
  return out;
}

void
RVineSpec::validate() const
{
  const int n = static_cast<int>(n_);
  if (n < 2)
    throw InvalidParameter("vine dimension must be at least 2");

  // Diagonal is a permutation; column entries are distinct labels that
  // belong to later columns.
  std::vector<bool> seen(n_, false);
  for (std::size_t i = 0; i < n_; ++i) {
    const int d = structure(i, i);
    if (d < 1 || d > n || seen[d - 1])
      throw InvalidParameter("structure diagonal is not a permutation of 1..n");
    seen[d - 1] = true;
  }
  for (std::size_t i = 0; i < n_; ++i) {
    for (std::size_t r = 0; r < i; ++r)
      if (structure(r, i) != 0)
        throw InvalidParameter("structure matrix has entries above the diagonal");
    Mask col = bit(structure(i, i) - 1);
    for (std::size_t k = i + 1; k < n_; ++k) {
      const int l = structure(k, i);
      if (l < 1 || l > n)
        throw InvalidParameter("structure entry out of range");
      bool later = false;
      for (std::size_t j = i + 1; j < n_; ++j)
        later = later || structure(j, j) == l;
      if (!later || (col & bit(l - 1)))
        throw InvalidParameter("column " + std::to_string(i + 1) +
                               " of the structure matrix repeats or reuses a variable");
      col |= bit(l - 1);
    }
  }

  // Every tree is a spanning tree over the previous tree's edges, and every
  // edge joins two edges of the previous tree that share a node.
  const auto ts = trees();
  std::vector<Mask> prev; // node sets of the previous tree
  for (int v = 0; v < n; ++v)
    prev.push_back(bit(v));
  for (std::size_t t = 0; t < ts.size(); ++t) {
    Dsu dsu(prev.size());
    std::vector<Mask> next;
    for (const auto& e : ts[t]) {
      Mask cond = 0;
      for (int v : e.conditioning)
        cond |= bit(v);
      const Mask left = cond | bit(e.first);
      const Mask right = cond | bit(e.second);
      const auto p = std::find(prev.begin(), prev.end(), left);
      const auto q = std::find(prev.begin(), prev.end(), right);
      if (p == prev.end() || q == prev.end())
        throw InvalidParameter("edge " + e.label() + " violates the proximity condition");
      if (!dsu.join(static_cast<int>(p - prev.begin()), static_cast<int>(q - prev.begin())))
        throw InvalidParameter("tree " + std::to_string(t + 1) + " contains a cycle");
      next.push_back(left | right);
      e.copula.validate();
    }
    prev = std::move(next);
  }
  density_plan(*this);
  sampling_plan(*this);
}

bool
RVineSpec::is_valid() const
{
  try {
    validate();
    return true;
  } catch (const Error&) {
    return false;
  }
}

RVineSpec
make_dvine(std::size_t dimension, const FittedBicop& copula)
{
  RVineSpec s(dimension);
  const int n = static_cast<int>(dimension);
  for (int i = 0; i < n; ++i) {
    s.set_structure(i, i, n - i);
    for (int k = i + 1; k < n; ++k) {
      s.set_structure(k, i, k - i);
      s.set_pair(k, i, copula);
    }
  }
  return s;
}

double
independence_threshold(std::size_t m)
{
  const double md = static_cast<double>(m);
  return 1.96 * std::sqrt(2.0 * (2.0 * md + 5.0) / (9.0 * md * (md - 1.0)));
}

RVineSpec
select_and_fit(const Eigen::MatrixXd& u, const std::vector<CopulaFamily>& candidates)
{
  const auto n = static_cast<int>(u.cols());
  const auto m = static_cast<std::size_t>(u.rows());
  if (n < 2)
    throw InvalidParameter("a vine needs at least two variables");
  if (n > 64)
    throw InvalidParameter("at most 64 variables are supported");
  if (m < 8)
    throw FitFailure("need at least 8 observations to fit a vine");
  if (candidates.empty())
    throw FitFailure("no candidate families");
  const double threshold = independence_threshold(m);

  std::vector<FitNode> nodes(static_cast<std::size_t>(n));
  for (int v = 0; v < n; ++v) {
    nodes[v].all = bit(v);
    nodes[v].ha.resize(m);
    for (std::size_t r = 0; r < m; ++r)
      nodes[v].ha[r] = u(static_cast<Eigen::Index>(r), v);
    nodes[v].a = v;
  }

  std::vector<std::vector<FitNode>> fitted; // per tree
  for (int t = 0; t + 1 < n; ++t) {
    const int count = static_cast<int>(nodes.size());
    std::vector<std::pair<int, int>> allowed;
    for (int p = 0; p < count; ++p)
      for (int q = p + 1; q < count; ++q)
        if (std::popcount(nodes[p].all & nodes[q].all) == t)
          allowed.emplace_back(p, q);

    auto conditioned = [&](int p, int q) {
      const int x = single_member(nodes[p].all & ~nodes[q].all);
      const int y = single_member(nodes[q].all & ~nodes[p].all);
      return std::pair{ x, y };
    };

    std::vector<double> tau(allowed.size());
    parallel_for(allowed.size(), [&](std::size_t e) {
      const auto [p, q] = allowed[e];
      const auto [x, y] = conditioned(p, q);
      tau[e] = empirical_tau(nodes[p].data_for(x), nodes[q].data_for(y));
    });
    std::vector<double> weight(tau.size());
    for (std::size_t e = 0; e < tau.size(); ++e)
      weight[e] = std::abs(tau[e]);

    const auto tree = max_spanning_tree(count, allowed, weight);

    std::vector<FitNode> next(tree.size());
    parallel_for(tree.size(), [&](std::size_t e) {
      const auto [p, q] = tree[e];
      const auto [x, y] = conditioned(p, q);
      const auto& dx = nodes[p].data_for(x);
      const auto& dy = nodes[q].data_for(y);
      FitNode& out = next[e];
      out.all = nodes[p].all | nodes[q].all;
      out.a = x;
      out.b = y;
      out.cond = nodes[p].all & nodes[q].all;

      const auto it = std::find(allowed.begin(), allowed.end(), tree[e]);
      const double tv = tau[static_cast<std::size_t>(it - allowed.begin())];
      if (std::abs(tv) < threshold) {
        out.copula = make_bicop(CopulaFamily::Independence);
        out.copula.n_obs = m;
      } else {
        try {
          out.copula = select_family(dx, dy, candidates);
        } catch (const FitFailure& err) {
          throw FitFailure("edge " + edge_label(x, y, out.cond) + ": " + err.what());
        }
      }
      out.ha.resize(m);
      out.hb.resize(m);
      for (std::size_t r = 0; r < m; ++r) {
        out.ha[r] = h_func(out.copula, dx[r], dy[r]);
        out.hb[r] = h_func_first(out.copula, dx[r], dy[r]);
      }
    });
    fitted.push_back(next);
    nodes = std::move(next);
  }

  // Peel the trees into matrix columns, one variable at a time.
  RVineSpec spec(static_cast<std::size_t>(n));
  std::vector<std::vector<bool>> used(fitted.size());
  for (std::size_t t = 0; t < fitted.size(); ++t)
    used[t].assign(fitted[t].size(), false);
  Mask remaining = (n == 64) ? ~Mask{ 0 } : (bit(n) - 1);

  for (int i = 0; i + 1 < n; ++i) {
    const int top = n - 2 - i;
    std::ptrdiff_t top_idx = -1;
    for (std::size_t e = 0; e < fitted[top].size(); ++e)
      if (!used[top][e])
        top_idx = static_cast<std::ptrdiff_t>(e);
    const FitNode& head = fitted[top][top_idx];

    bool placed = false;
    for (int x : { head.a, head.b }) {
      std::vector<std::ptrdiff_t> chain(static_cast<std::size_t>(top + 1), -1);
      int touching = 0;
      bool ok = true;
      Mask upper = head.all;
      for (int t = top; t >= 0 && ok; --t) {
        for (std::size_t e = 0; e < fitted[t].size(); ++e) {
          if (used[t][e] || !(fitted[t][e].all & bit(x)))
            continue;
          ++touching;
          const auto& f = fitted[t][e];
          if ((f.a == x || f.b == x) && (f.all & ~upper) == 0 && chain[t] < 0)
            chain[t] = static_cast<std::ptrdiff_t>(e);
        }
        if (chain[t] < 0)
          ok = false;
        else
          upper = fitted[t][chain[t]].all;
      }
      if (!ok || touching != top + 1)
        continue;

      spec.set_structure(i, i, x + 1);
      for (int t = 0; t <= top; ++t) {
        const auto& f = fitted[t][chain[t]];
        const int k = n - 1 - t;
        const int partner = f.a == x ? f.b : f.a;
        spec.set_structure(k, i, partner + 1);
        spec.set_pair(k, i, f.a == x ? f.copula : transpose(f.copula));
        used[t][chain[t]] = true;
      }
      remaining &= ~bit(x);
      placed = true;
      break;
    }
    if (!placed)
      throw FitFailure("fitted trees do not form a regular vine");
  }
  spec.set_structure(n - 1, n - 1, single_member(remaining) + 1);
  spec.validate();
  return spec;
}

double
log_density(const RVineSpec& spec, std::span<const double> u)
{
  if (u.size() != spec.dimension())
    throw DimensionMismatch("point has " + std::to_string(u.size()) +
                            " coordinates for a vine of dimension " +
                            std::to_string(spec.dimension()));
  const auto plan = density_plan(spec);
  std::vector<double> slot(static_cast<std::size_t>(plan.slots));
  std::copy(u.begin(), u.end(), slot.begin());
  double ll = 0.0;
  for (const auto& st : plan.steps) {
    const double a = slot[st.a_in];
    const double b = slot[st.b_in];
    ll += log_density(*st.copula, a, b);
    slot[st.a_out] = h_func(*st.copula, a, b);
    slot[st.b_out] = h_func_first(*st.copula, a, b);
  }
  return ll;
}

Eigen::MatrixXd
sample(const RVineSpec& spec, std::size_t n_rows, std::uint64_t seed, std::size_t threads)
{
  if (n_rows < 1)
    throw InvalidParameter("sample size must be at least 1");
  const auto plan = sampling_plan(spec);
  const std::size_t n = spec.dimension();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_rows), static_cast<Eigen::Index>(n));

  parallel_for(
    n_rows,
    [&](std::size_t r) {
      Rng rng(substream_seed(seed, r));
      std::vector<double> slot(static_cast<std::size_t>(plan.slots));
      for (const auto& col : plan.columns) {
        slot[col.top] = uniform_open(rng);
        for (const auto& st : col.inverse)
          slot[st.out] = inv_h(*st.copula, slot[st.w_in], slot[st.cond_in]);
        for (const auto& st : col.forward)
          slot[st.b_out] = h_func_first(*st.copula, slot[st.a_in], slot[st.b_in]);
        out(static_cast<Eigen::Index>(r), col.var) = slot[col.var];
      }
    },
    threads);
  return out;
}

nlohmann::json
to_json(const RVineSpec& spec)
{
  const std::size_t n = spec.dimension();
  nlohmann::json j;
  j["dimension"] = n;
  auto structure = nlohmann::json::array();
  auto families = nlohmann::json::array();
  auto theta = nlohmann::json::array();
  auto theta2 = nlohmann::json::array();
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t c = 0; c < n; ++c) {
      structure.push_back(spec.structure(r, c));
      const bool edge = r > c;
      families.push_back(edge ? std::string(family_name(spec.pair(r, c).family)) : "");
      theta.push_back(edge ? spec.pair(r, c).theta : 0.0);
      theta2.push_back(edge ? spec.pair(r, c).theta2 : 0.0);
    }
  j["structure"] = structure;
  j["families"] = families;
  j["theta"] = theta;
  j["theta2"] = theta2;
  return j;
}

RVineSpec
rvine_from_json(const nlohmann::json& j)
{
  try {
    const auto n = j.at("dimension").get<std::size_t>();
    const auto& st = j.at("structure");
    const auto& fam = j.at("families");
    const auto& th = j.at("theta");
    const auto& th2 = j.at("theta2");
    const std::size_t cells = n * n;
    if (st.size() != cells || fam.size() != cells || th.size() != cells || th2.size() != cells)
      throw InvalidParameter("vine arrays must have dimension^2 entries");
    RVineSpec spec(n);
    for (std::size_t r = 0; r < n; ++r)
      for (std::size_t c = 0; c < n; ++c) {
        const std::size_t at = r * n + c;
        spec.set_structure(r, c, st[at].get<int>());
        if (r > c)
          spec.set_pair(r, c,
                        make_bicop(family_from_name(fam[at].get<std::string>()),
                                   th[at].get<double>(), th2[at].get<double>()));
      }
    spec.validate();
    return spec;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidParameter(std::string("malformed vine document: ") + e.what());
  }
}

} // namespace vinefx
