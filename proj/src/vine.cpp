#include "vdc/vine.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <fstream>
#include <functional>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

#include <nlohmann/json.hpp>

#include "vdc/errors.hpp"
#include "vdc/rng.hpp"

namespace vdc {

namespace {

constexpr char kModelMagic[8] = {'V', 'D', 'C', 'M', 'O', 'D', 'E', 'L'};
constexpr std::uint32_t kModelVersion = 1;

void parallel_for(int count, int threads, const std::function<void(int)>& body) {
  if (threads <= 1 || count <= 1) {
    for (int i = 0; i < count; ++i) body(i);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  int workers = std::min(threads, count);
  std::exception_ptr error;
  std::mutex error_mutex;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&]() {
      for (;;) {
        int i = next.fetch_add(1);
        if (i >= count) return;
        try {
          body(i);
        } catch (...) {
          std::lock_guard<std::mutex> lock(error_mutex);
          if (!error) error = std::current_exception();
          return;
        }
      }
    });
  }
  for (auto& t : pool) t.join();
  if (error) std::rethrow_exception(error);
}

double clamp_unit_open(double x) {
  return std::min(std::max(x, 1e-15), 1.0 - 1e-15);
}

// Working node of the current tree during fitting. Level-1 nodes wrap a
// variable; higher nodes wrap an already fitted edge and carry the
// conditional margins of its two conditioned variables.
struct WorkNode {
  std::vector<int> complete;
  int edge_idx = -1;
  int var = -1;
  int prev_a = -1, prev_b = -1;
  std::vector<double> margin_j, margin_k;
};

struct CandidateEdge {
  int node_a = 0, node_b = 0;  // indices into the current node list
  int j = 0, k = 0;            // conditioned pair, j < k
  double tau = 0.0;
};

std::vector<int> set_intersection_sorted(const std::vector<int>& a,
                                         const std::vector<int>& b) {
  std::vector<int> out;
  std::set_intersection(a.begin(), a.end(), b.begin(), b.end(),
                        std::back_inserter(out));
  return out;
}

std::vector<int> set_difference_sorted(const std::vector<int>& a,
                                       const std::vector<int>& b) {
  std::vector<int> out;
  std::set_difference(a.begin(), a.end(), b.begin(), b.end(),
                      std::back_inserter(out));
  return out;
}

const std::vector<double>& margin_for(const WorkNode& node,
                                      const std::vector<VineEdge>& edges,
                                      const std::vector<std::vector<double>>& cols,
                                      int var) {
  if (node.edge_idx < 0) {
    if (node.var != var)
      throw std::logic_error("vine fit: margin requested for wrong variable");
    return cols[static_cast<std::size_t>(var)];
  }
  const VineEdge& e = edges[static_cast<std::size_t>(node.edge_idx)];
  if (var == e.j) return node.margin_j;
  if (var == e.k) return node.margin_k;
  throw std::logic_error("vine fit: variable not conditioned in parent edge");
}

struct UnionFind {
  std::vector<int> parent;
  explicit UnionFind(int n) : parent(n) {
    std::iota(parent.begin(), parent.end(), 0);
  }
  int find(int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  }
  bool unite(int a, int b) {
    a = find(a);
    b = find(b);
    if (a == b) return false;
    parent[b] = a;
    return true;
  }
};

}  // namespace

StructureKind structure_from_string(const std::string& s) {
  if (s == "dvine") return StructureKind::Dvine;
  if (s == "rvine") return StructureKind::Rvine;
  throw std::invalid_argument("unknown vine structure: " + s);
}

std::string structure_to_string(StructureKind k) {
  return k == StructureKind::Dvine ? "dvine" : "rvine";
}

std::vector<int> dvine_order_greedy(const std::vector<std::vector<double>>& tau) {
  const int d = static_cast<int>(tau.size());
  if (d == 2) return {0, 1};
  int best_i = 0, best_j = 1;
  double best = -1.0;
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j)
      if (std::abs(tau[i][j]) > best) {
        best = std::abs(tau[i][j]);
        best_i = i;
        best_j = j;
      }
  std::vector<int> path{best_i, best_j};
  std::vector<bool> used(d, false);
  used[best_i] = used[best_j] = true;
  while (static_cast<int>(path.size()) < d) {
    int front = path.front(), back = path.back();
    int pick = -1;
    bool at_front = false;
    double pick_tau = -1.0;
    for (int v = 0; v < d; ++v) {
      if (used[v]) continue;
      if (std::abs(tau[front][v]) > pick_tau) {
        pick_tau = std::abs(tau[front][v]);
        pick = v;
        at_front = true;
      }
      if (std::abs(tau[back][v]) > pick_tau) {
        pick_tau = std::abs(tau[back][v]);
        pick = v;
        at_front = false;
      }
    }
    used[pick] = true;
    if (at_front)
      path.insert(path.begin(), pick);
    else
      path.push_back(pick);
  }
  return path;
}

double grid_log_density(const GridBuffer& grid, double u, double v,
                        bool const_lookup) {
  if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0))
    throw std::domain_error("grid_log_density: coordinates must lie in (0,1)");
  const int m = grid.m;
  if (const_lookup) {
    int a = std::min(static_cast<int>(u * m), m - 1);
    int b = std::min(static_cast<int>(v * m), m - 1);
    return std::log(grid.at(a, b));
  }
  double gx = std::clamp(u * m - 0.5, 0.0, static_cast<double>(m - 1));
  double gy = std::clamp(v * m - 0.5, 0.0, static_cast<double>(m - 1));
  int a0 = std::min(static_cast<int>(gx), m - 2);
  int b0 = std::min(static_cast<int>(gy), m - 2);
  double wx = gx - a0, wy = gy - b0;
  double l00 = std::log(grid.at(a0, b0));
  double l01 = std::log(grid.at(a0, b0 + 1));
  double l10 = std::log(grid.at(a0 + 1, b0));
  double l11 = std::log(grid.at(a0 + 1, b0 + 1));
  return (1.0 - wx) * ((1.0 - wy) * l00 + wy * l01) +
         wx * ((1.0 - wy) * l10 + wy * l11);
}

namespace {

// Histogram over conditional pseudo-observations (coordinates are already
// in (0,1), no re-ranking between tree levels).
Histogram histogram_from_spans(std::span<const double> u,
                               std::span<const double> v, int m) {
  Histogram h;
  h.m = m;
  h.n = static_cast<long long>(u.size());
  h.values.assign(static_cast<std::size_t>(m) * m, 0.0);
  const double scale = 1.0 / (static_cast<double>(h.n) * h.delta() * h.delta());
  for (std::size_t i = 0; i < u.size(); ++i) {
    int a = std::min(static_cast<int>(u[i] * m), m - 1);
    int b = std::min(static_cast<int>(v[i] * m), m - 1);
    h.at(a, b) += scale;
  }
  return h;
}

void fit_edge_payload(VineEdge& e, const std::vector<double>& x,
                      const std::vector<double>& y, const FitConfig& cfg,
                      const std::string& edge_id, bool truncated) {
  const long long n = static_cast<long long>(x.size());
  e.stats.n_used = n;
  if (truncated) {
    e.grid.m = cfg.m;
    e.grid.values.assign(static_cast<std::size_t>(cfg.m) * cfg.m, 1.0);
    e.htables = build_h_tables(e.grid);
    e.stats.mean_log_density = 0.0;
    return;
  }
  Histogram h = histogram_from_spans(x, y, cfg.m);
  RawGrid raw = run_estimator(cfg.estimator, h, edge_id);
  auto [grid, report] = project(raw, cfg.k_ipfp);
  e.grid = std::move(grid);
  e.htables = build_h_tables(e.grid);
  double acc = 0.0;
  for (long long i = 0; i < n; ++i)
    acc += grid_log_density(e.grid, x[static_cast<std::size_t>(i)],
                            y[static_cast<std::size_t>(i)], cfg.const_lookup);
  e.stats.mean_log_density = acc / static_cast<double>(n);
}

}  // namespace

VineModel fit(const DataMatrix& data, const FitConfig& cfg) {
  if (data.d < 2) throw std::invalid_argument("fit: need at least 2 columns");
  if (data.n < std::max<long long>(cfg.min_samples, 2))
    throw DataError("fit: insufficient data (n=" + std::to_string(data.n) +
                    ", min_samples=" + std::to_string(cfg.min_samples) + ")");
  if (cfg.m < 2) throw std::invalid_argument("fit: grid size must be >= 2");

  const int d = data.d;
  std::vector<std::vector<double>> cols(static_cast<std::size_t>(d));
  for (int jj = 0; jj < d; ++jj) {
    auto raw_col = data.column(jj);
    bool constant = std::all_of(raw_col.begin(), raw_col.end(),
                                [&](double v) { return v == raw_col[0]; });
    if (constant)
      throw DataError("fit: column " + std::to_string(jj) + " is constant");
    cols[static_cast<std::size_t>(jj)] = rank_pit(raw_col);
  }

  std::vector<std::vector<double>> tau(static_cast<std::size_t>(d),
                                       std::vector<double>(static_cast<std::size_t>(d), 0.0));
  for (int i = 0; i < d; ++i)
    for (int jj = i + 1; jj < d; ++jj) {
      double t = kendall_tau(cols[static_cast<std::size_t>(i)],
                             cols[static_cast<std::size_t>(jj)]);
      tau[static_cast<std::size_t>(i)][static_cast<std::size_t>(jj)] = t;
      tau[static_cast<std::size_t>(jj)][static_cast<std::size_t>(i)] = t;
    }

  VineModel model;
  model.d = d;
  model.m = cfg.m;
  model.structure = cfg.structure;
  model.config = cfg;
  model.edges.reserve(static_cast<std::size_t>(d) * (d - 1) / 2);

  // Current tree's nodes; level 1 starts from the plain variables.
  std::vector<WorkNode> nodes(static_cast<std::size_t>(d));
  for (int v = 0; v < d; ++v) {
    nodes[static_cast<std::size_t>(v)].var = v;
    nodes[static_cast<std::size_t>(v)].complete = {v};
  }

  for (int level = 1; level <= d - 1; ++level) {
    std::vector<CandidateEdge> chosen;
    if (level == 1) {
      if (cfg.structure == StructureKind::Dvine) {
        model.order = dvine_order_greedy(tau);
        for (int i = 0; i + 1 < d; ++i) {
          CandidateEdge c;
          int a = model.order[static_cast<std::size_t>(i)];
          int b = model.order[static_cast<std::size_t>(i + 1)];
          c.j = std::min(a, b);
          c.k = std::max(a, b);
          c.node_a = c.j;
          c.node_b = c.k;
          c.tau = tau[static_cast<std::size_t>(c.j)][static_cast<std::size_t>(c.k)];
          chosen.push_back(c);
        }
      } else {
        std::vector<CandidateEdge> all;
        for (int i = 0; i < d; ++i)
          for (int jj = i + 1; jj < d; ++jj) {
            CandidateEdge c;
            c.node_a = i;
            c.node_b = jj;
            c.j = i;
            c.k = jj;
            c.tau = tau[static_cast<std::size_t>(i)][static_cast<std::size_t>(jj)];
            all.push_back(c);
          }
        std::sort(all.begin(), all.end(), [](const CandidateEdge& a,
                                             const CandidateEdge& b) {
          if (std::abs(a.tau) != std::abs(b.tau))
            return std::abs(a.tau) > std::abs(b.tau);
          if (a.j != b.j) return a.j < b.j;
          return a.k < b.k;
        });
        UnionFind uf(d);
        for (const auto& c : all)
          if (uf.unite(c.node_a, c.node_b)) chosen.push_back(c);
      }
    } else {
      const int node_count = static_cast<int>(nodes.size());
      std::vector<CandidateEdge> all;
      for (int a = 0; a < node_count; ++a)
        for (int b = a + 1; b < node_count; ++b) {
          const WorkNode& na = nodes[static_cast<std::size_t>(a)];
          const WorkNode& nb = nodes[static_cast<std::size_t>(b)];
          // proximity: the wrapped edges must share a node of the previous tree
          bool share = na.prev_a == nb.prev_a || na.prev_a == nb.prev_b ||
                       na.prev_b == nb.prev_a || na.prev_b == nb.prev_b;
          if (!share) continue;
          auto dj = set_difference_sorted(na.complete, nb.complete);
          auto dk = set_difference_sorted(nb.complete, na.complete);
          if (dj.size() != 1 || dk.size() != 1) continue;
          CandidateEdge c;
          c.node_a = a;
          c.node_b = b;
          c.j = dj[0];
          c.k = dk[0];
          if (c.j > c.k) {
            std::swap(c.j, c.k);
            std::swap(c.node_a, c.node_b);
          }
          const auto& xm = margin_for(nodes[static_cast<std::size_t>(c.node_a)],
                                      model.edges, cols, c.j);
          const auto& ym = margin_for(nodes[static_cast<std::size_t>(c.node_b)],
                                      model.edges, cols, c.k);
          try {
            c.tau = kendall_tau(xm, ym);
          } catch (const std::invalid_argument&) {
            c.tau = 0.0;  // constant conditional stream: weight 0
          }
          all.push_back(c);
        }
      if (cfg.structure == StructureKind::Dvine) {
        // nodes are kept in path order; join consecutive ones
        for (int i = 0; i + 1 < node_count; ++i) {
          auto it = std::find_if(all.begin(), all.end(), [&](const CandidateEdge& c) {
            return (c.node_a == i && c.node_b == i + 1) ||
                   (c.node_a == i + 1 && c.node_b == i);
          });
          if (it == all.end())
            throw std::logic_error("vine fit: missing consecutive D-vine pair");
          chosen.push_back(*it);
        }
      } else {
        std::sort(all.begin(), all.end(), [](const CandidateEdge& a,
                                             const CandidateEdge& b) {
          if (std::abs(a.tau) != std::abs(b.tau))
            return std::abs(a.tau) > std::abs(b.tau);
          if (a.j != b.j) return a.j < b.j;
          return a.k < b.k;
        });
        UnionFind uf(node_count);
        for (const auto& c : all)
          if (uf.unite(c.node_a, c.node_b)) chosen.push_back(c);
      }
      if (static_cast<int>(chosen.size()) != node_count - 1)
        throw std::logic_error("vine fit: tree " + std::to_string(level) +
                               " is not spanning");
    }

    // Fit the chosen edges (independent within a level).
    const bool truncated = cfg.max_tree_level > 0 && level > cfg.max_tree_level;
    const std::size_t base = model.edges.size();
    model.edges.resize(base + chosen.size());
    std::vector<std::vector<double>> xs(chosen.size()), ys(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const CandidateEdge& c = chosen[i];
      const WorkNode& na = nodes[static_cast<std::size_t>(c.node_a)];
      const WorkNode& nb = nodes[static_cast<std::size_t>(c.node_b)];
      VineEdge& e = model.edges[base + i];
      e.j = c.j;
      e.k = c.k;
      e.tree_level = level;
      e.conditioning = set_intersection_sorted(na.complete, nb.complete);
      e.stats.tau_hat = c.tau;
      e.parent_j = na.edge_idx;
      e.parent_j_side =
          (na.edge_idx >= 0 && model.edges[static_cast<std::size_t>(na.edge_idx)].k == c.j)
              ? 1
              : 0;
      e.parent_k = nb.edge_idx;
      e.parent_k_side =
          (nb.edge_idx >= 0 && model.edges[static_cast<std::size_t>(nb.edge_idx)].k == c.k)
              ? 1
              : 0;
      xs[i] = margin_for(na, model.edges, cols, c.j);
      ys[i] = margin_for(nb, model.edges, cols, c.k);
    }
    parallel_for(static_cast<int>(chosen.size()), cfg.threads, [&](int i) {
      std::string edge_id = "t" + std::to_string(level) + "_e" + std::to_string(i);
      fit_edge_payload(model.edges[base + static_cast<std::size_t>(i)],
                       xs[static_cast<std::size_t>(i)],
                       ys[static_cast<std::size_t>(i)], cfg, edge_id, truncated);
    });

    if (level == d - 1) break;

    // Next level's nodes wrap this level's edges and carry the transformed
    // margins U_{j|D u k} = h_{j|k;D}(U_{j|D} | U_{k|D}).
    std::vector<WorkNode> next(chosen.size());
    for (std::size_t i = 0; i < chosen.size(); ++i) {
      const CandidateEdge& c = chosen[i];
      const VineEdge& e = model.edges[base + i];
      WorkNode& wn = next[i];
      wn.edge_idx = static_cast<int>(base + i);
      wn.prev_a = c.node_a;
      wn.prev_b = c.node_b;
      wn.complete = e.conditioning;
      wn.complete.push_back(e.j);
      wn.complete.push_back(e.k);
      std::sort(wn.complete.begin(), wn.complete.end());
      const std::vector<double>& x = xs[i];
      const std::vector<double>& y = ys[i];
      wn.margin_j.resize(x.size());
      wn.margin_k.resize(x.size());
      for (std::size_t r = 0; r < x.size(); ++r) {
        wn.margin_j[r] =
            clamp_unit_open(h_forward(e.htables, HSide::UGivenV, x[r], y[r]));
        wn.margin_k[r] =
            clamp_unit_open(h_forward(e.htables, HSide::VGivenU, y[r], x[r]));
      }
    }
    nodes = std::move(next);
  }
  return model;
}

namespace {

// Shared recursion: resolves each edge's conditioned inputs from its
// parents' outputs, calls `visit(edge_index, log_density)` and fills the
// forward margins.
template <class Visit>
void eval_row_recursion(const VineModel& model, std::span<const double> row,
                        std::vector<double>& out_j, std::vector<double>& out_k,
                        Visit&& visit) {
  for (std::size_t idx = 0; idx < model.edges.size(); ++idx) {
    const VineEdge& e = model.edges[idx];
    double x = e.parent_j < 0
                   ? row[static_cast<std::size_t>(e.j)]
                   : (e.parent_j_side == 0
                          ? out_j[static_cast<std::size_t>(e.parent_j)]
                          : out_k[static_cast<std::size_t>(e.parent_j)]);
    double y = e.parent_k < 0
                   ? row[static_cast<std::size_t>(e.k)]
                   : (e.parent_k_side == 0
                          ? out_j[static_cast<std::size_t>(e.parent_k)]
                          : out_k[static_cast<std::size_t>(e.parent_k)]);
    x = clamp_unit_open(x);
    y = clamp_unit_open(y);
    visit(idx, grid_log_density(e.grid, x, y, model.config.const_lookup));
    out_j[idx] = h_forward(e.htables, HSide::UGivenV, x, y);
    out_k[idx] = h_forward(e.htables, HSide::VGivenU, y, x);
  }
}

}  // namespace

double log_likelihood(const VineModel& model, std::span<const double> u_row) {
  if (static_cast<int>(u_row.size()) != model.d)
    throw std::invalid_argument("log_likelihood: row has wrong dimension");
  for (double x : u_row)
    if (!(x > 0.0 && x < 1.0))
      throw std::domain_error("log_likelihood: coordinates must lie in (0,1)");
  std::vector<double> out_j(model.edges.size()), out_k(model.edges.size());
  double ll = 0.0;
  eval_row_recursion(model, u_row, out_j, out_k,
                     [&ll](std::size_t, double logc) { ll += logc; });
  return ll;
}

std::vector<double> edge_mean_log_density(const VineModel& model,
                                          const DataMatrix& u_data) {
  if (u_data.d != model.d)
    throw std::invalid_argument("edge_mean_log_density: dimension mismatch");
  if (u_data.n < 1)
    throw std::invalid_argument("edge_mean_log_density: empty data");
  std::vector<double> sums(model.edges.size(), 0.0);
  std::vector<double> out_j(model.edges.size()), out_k(model.edges.size());
  for (long long i = 0; i < u_data.n; ++i) {
    auto row = u_data.row(i);
    for (double x : row)
      if (!(x > 0.0 && x < 1.0))
        throw std::domain_error(
            "edge_mean_log_density: coordinates must lie in (0,1)");
    eval_row_recursion(model, row, out_j, out_k,
                       [&sums](std::size_t e, double logc) { sums[e] += logc; });
  }
  for (double& s : sums) s /= static_cast<double>(u_data.n);
  return sums;
}

namespace {

struct ColumnEntry {
  int edge = -1;
  bool new_is_j = false;  // whether the column's variable is edge.j
};

struct SamplingPlan {
  std::vector<int> natural;                         // v_1..v_d
  std::vector<std::vector<ColumnEntry>> columns;    // per natural index, ascending level
};

// Natural-order construction: repeatedly strip the top tree's conditioned
// variable together with the one edge per level that conditions it.
SamplingPlan build_sampling_plan(const VineModel& model) {
  const int d = model.d;
  std::vector<std::vector<int>> by_level(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < model.edges.size(); ++i)
    by_level[static_cast<std::size_t>(model.edges[i].tree_level)].push_back(
        static_cast<int>(i));

  std::vector<bool> removed(model.edges.size(), false);
  std::vector<bool> var_used(static_cast<std::size_t>(d), false);
  std::vector<std::pair<int, std::vector<ColumnEntry>>> stripped;

  for (int top = d - 1; top >= 1; --top) {
    int top_edge = -1;
    for (int e : by_level[static_cast<std::size_t>(top)])
      if (!removed[static_cast<std::size_t>(e)]) {
        if (top_edge >= 0)
          throw std::logic_error("sampling plan: multiple top edges remain");
        top_edge = e;
      }
    if (top_edge < 0)
      throw std::logic_error("sampling plan: missing top edge");
    const int var = model.edges[static_cast<std::size_t>(top_edge)].j;
    std::vector<ColumnEntry> chain;  // descending level
    chain.push_back({top_edge, true});
    removed[static_cast<std::size_t>(top_edge)] = true;
    for (int level = top - 1; level >= 1; --level) {
      int found = -1;
      for (int e : by_level[static_cast<std::size_t>(level)]) {
        if (removed[static_cast<std::size_t>(e)]) continue;
        const VineEdge& edge = model.edges[static_cast<std::size_t>(e)];
        if (edge.j == var || edge.k == var) {
          if (found >= 0)
            throw std::logic_error(
                "sampling plan: variable conditioned twice at one level");
          found = e;
        }
      }
      if (found < 0)
        throw std::logic_error("sampling plan: chain broken at level " +
                               std::to_string(level));
      chain.push_back({found, model.edges[static_cast<std::size_t>(found)].j == var});
      removed[static_cast<std::size_t>(found)] = true;
    }
    std::reverse(chain.begin(), chain.end());  // ascending level
    var_used[static_cast<std::size_t>(var)] = true;
    stripped.emplace_back(var, std::move(chain));
  }

  int leftover = -1;
  for (int v = 0; v < d; ++v)
    if (!var_used[static_cast<std::size_t>(v)]) leftover = v;
  SamplingPlan plan;
  plan.natural.resize(static_cast<std::size_t>(d));
  plan.columns.resize(static_cast<std::size_t>(d));
  plan.natural[0] = leftover;
  for (int t = 2; t <= d; ++t) {
    auto& entry = stripped[static_cast<std::size_t>(d - t)];
    plan.natural[static_cast<std::size_t>(t - 1)] = entry.first;
    plan.columns[static_cast<std::size_t>(t - 1)] = std::move(entry.second);
  }
  return plan;
}

}  // namespace

DataMatrix sample_model(const VineModel& model, long long n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("sample_model: n must be >= 1");
  if (model.edges.empty()) throw std::invalid_argument("sample_model: empty model");
  const SamplingPlan plan = build_sampling_plan(model);
  const int d = model.d;
  const std::size_t ecount = model.edges.size();

  DataMatrix out(n, d);
  Rng rng(seed);
  std::vector<double> w(static_cast<std::size_t>(d));
  std::vector<double> in_j(ecount), in_k(ecount), out_j(ecount), out_k(ecount);
  // NaN-filled so a dataflow ordering bug trips the h-function domain check
  std::vector<double> u(static_cast<std::size_t>(d),
                        std::numeric_limits<double>::quiet_NaN());

  auto resolve_partner = [&](const VineEdge& e, bool partner_is_k) {
    int parent = partner_is_k ? e.parent_k : e.parent_j;
    int side = partner_is_k ? e.parent_k_side : e.parent_j_side;
    int var = partner_is_k ? e.k : e.j;
    if (parent < 0) return u[static_cast<std::size_t>(var)];
    return side == 0 ? out_j[static_cast<std::size_t>(parent)]
                     : out_k[static_cast<std::size_t>(parent)];
  };

  for (long long r = 0; r < n; ++r) {
    for (int t = 0; t < d; ++t) w[static_cast<std::size_t>(t)] = rng.uniform();
    for (int t = 1; t <= d; ++t) {
      const int vt = plan.natural[static_cast<std::size_t>(t - 1)];
      if (t == 1) {
        u[static_cast<std::size_t>(vt)] = w[0];
        continue;
      }
      const auto& chain = plan.columns[static_cast<std::size_t>(t - 1)];
      double value = w[static_cast<std::size_t>(t - 1)];
      for (std::size_t ci = chain.size(); ci-- > 0;) {
        const ColumnEntry& ce = chain[ci];
        const VineEdge& e = model.edges[static_cast<std::size_t>(ce.edge)];
        double partner = resolve_partner(e, /*partner_is_k=*/ce.new_is_j);
        if (ce.new_is_j) {
          in_k[static_cast<std::size_t>(ce.edge)] = partner;
          value = h_inverse(e.htables, HSide::UGivenV, value, partner);
          in_j[static_cast<std::size_t>(ce.edge)] = value;
        } else {
          in_j[static_cast<std::size_t>(ce.edge)] = partner;
          value = h_inverse(e.htables, HSide::VGivenU, value, partner);
          in_k[static_cast<std::size_t>(ce.edge)] = value;
        }
      }
      u[static_cast<std::size_t>(vt)] = value;
      for (const ColumnEntry& ce : chain) {
        const VineEdge& e = model.edges[static_cast<std::size_t>(ce.edge)];
        double x = in_j[static_cast<std::size_t>(ce.edge)];
        double y = in_k[static_cast<std::size_t>(ce.edge)];
        out_j[static_cast<std::size_t>(ce.edge)] =
            h_forward(e.htables, HSide::UGivenV, x, y);
        out_k[static_cast<std::size_t>(ce.edge)] =
            h_forward(e.htables, HSide::VGivenU, y, x);
      }
    }
    for (int jv = 0; jv < d; ++jv)
      out.at(r, jv) = clamp_unit_open(u[static_cast<std::size_t>(jv)]);
  }
  return out;
}

VineModel uniformize_trees(const VineModel& model, const std::vector<int>& levels) {
  VineModel out = model;
  for (VineEdge& e : out.edges) {
    if (std::find(levels.begin(), levels.end(), e.tree_level) != levels.end()) {
      e.grid.values.assign(e.grid.values.size(), 1.0);
      e.stats.mean_log_density = 0.0;
    }
  }
  return out;
}

void check_structure(const VineModel& model) {
  const int d = model.d;
  std::vector<std::vector<int>> by_level(static_cast<std::size_t>(d));
  for (std::size_t i = 0; i < model.edges.size(); ++i) {
    const VineEdge& e = model.edges[i];
    if (e.tree_level < 1 || e.tree_level > d - 1)
      throw std::logic_error("structure: bad tree level");
    by_level[static_cast<std::size_t>(e.tree_level)].push_back(static_cast<int>(i));
  }
  auto complete_set = [&](int idx) {
    const VineEdge& e = model.edges[static_cast<std::size_t>(idx)];
    std::vector<int> c = e.conditioning;
    c.push_back(e.j);
    c.push_back(e.k);
    std::sort(c.begin(), c.end());
    return c;
  };
  for (int level = 1; level <= d - 1; ++level) {
    const auto& es = by_level[static_cast<std::size_t>(level)];
    if (static_cast<int>(es.size()) != d - level)
      throw std::logic_error("structure: tree " + std::to_string(level) +
                             " has " + std::to_string(es.size()) +
                             " edges, expected " + std::to_string(d - level));
    for (int idx : es) {
      const VineEdge& e = model.edges[static_cast<std::size_t>(idx)];
      if (static_cast<int>(e.conditioning.size()) != level - 1)
        throw std::logic_error("structure: conditioning size mismatch");
      if (level == 1) {
        if (e.parent_j >= 0 || e.parent_k >= 0)
          throw std::logic_error("structure: tree-1 edge has parents");
        continue;
      }
      if (e.parent_j < 0 || e.parent_k < 0)
        throw std::logic_error("structure: missing parent");
      auto ca = complete_set(e.parent_j);
      auto cb = complete_set(e.parent_k);
      auto inter = set_intersection_sorted(ca, cb);
      if (inter != e.conditioning)
        throw std::logic_error("structure: proximity condition violated");
      auto dj = set_difference_sorted(ca, cb);
      auto dk = set_difference_sorted(cb, ca);
      if (dj.size() != 1 || dk.size() != 1 || dj[0] != e.j || dk[0] != e.k)
        throw std::logic_error("structure: conditioned pair mismatch");
    }
    // spanning-tree check over this level's nodes
    if (level == 1) {
      UnionFind uf(d);
      int joins = 0;
      std::vector<int> degree(static_cast<std::size_t>(d), 0);
      for (int idx : es) {
        const VineEdge& e = model.edges[static_cast<std::size_t>(idx)];
        if (uf.unite(e.j, e.k)) ++joins;
        ++degree[static_cast<std::size_t>(e.j)];
        ++degree[static_cast<std::size_t>(e.k)];
      }
      if (joins != d - 1) throw std::logic_error("structure: tree 1 not spanning");
      if (model.structure == StructureKind::Dvine)
        for (int v = 0; v < d; ++v)
          if (degree[static_cast<std::size_t>(v)] > 2)
            throw std::logic_error("structure: D-vine tree 1 is not a path");
    } else {
      const auto& prev = by_level[static_cast<std::size_t>(level - 1)];
      std::vector<int> node_of(model.edges.size(), -1);
      for (std::size_t p = 0; p < prev.size(); ++p)
        node_of[static_cast<std::size_t>(prev[p])] = static_cast<int>(p);
      UnionFind uf(static_cast<int>(prev.size()));
      int joins = 0;
      for (int idx : es) {
        const VineEdge& e = model.edges[static_cast<std::size_t>(idx)];
        int a = node_of[static_cast<std::size_t>(e.parent_j)];
        int b = node_of[static_cast<std::size_t>(e.parent_k)];
        if (a < 0 || b < 0)
          throw std::logic_error("structure: parent not in previous tree");
        if (uf.unite(a, b)) ++joins;
      }
      if (joins != static_cast<int>(prev.size()) - 1)
        throw std::logic_error("structure: tree " + std::to_string(level) +
                               " not spanning");
    }
  }
}

namespace {

nlohmann::json estimator_config_to_json(const EdgeEstimatorConfig& cfg) {
  nlohmann::json j;
  j["kind"] = estimator_kind_to_string(cfg.kind);
  if (cfg.alpha) j["alpha"] = *cfg.alpha;
  if (cfg.bandwidth_cells) j["bandwidth_cells"] = *cfg.bandwidth_cells;
  if (!cfg.grid_dir.empty()) j["grid_dir"] = cfg.grid_dir;
  return j;
}

EdgeEstimatorConfig estimator_config_from_json(const nlohmann::json& j) {
  EdgeEstimatorConfig cfg;
  cfg.kind = estimator_kind_from_string(j.at("kind").get<std::string>());
  if (j.contains("alpha")) cfg.alpha = j["alpha"].get<double>();
  if (j.contains("bandwidth_cells"))
    cfg.bandwidth_cells = j["bandwidth_cells"].get<double>();
  if (j.contains("grid_dir")) cfg.grid_dir = j["grid_dir"].get<std::string>();
  return cfg;
}

void write_doubles(std::ofstream& f, const std::vector<double>& v) {
  f.write(reinterpret_cast<const char*>(v.data()),
          static_cast<std::streamsize>(v.size() * sizeof(double)));
}

void read_doubles(std::ifstream& f, std::vector<double>& v, std::size_t count) {
  v.resize(count);
  f.read(reinterpret_cast<char*>(v.data()),
         static_cast<std::streamsize>(count * sizeof(double)));
  if (!f) throw DataError("load_model: truncated payload");
}

}  // namespace

nlohmann::json fit_config_to_json(const FitConfig& cfg) {
  nlohmann::json j;
  j["structure"] = structure_to_string(cfg.structure);
  j["m"] = cfg.m;
  j["k_ipfp"] = cfg.k_ipfp;
  j["estimator"] = estimator_config_to_json(cfg.estimator);
  j["min_samples"] = cfg.min_samples;
  j["max_tree_level"] = cfg.max_tree_level;
  j["const_lookup"] = cfg.const_lookup;
  return j;
}

FitConfig fit_config_from_json(const nlohmann::json& j) {
  FitConfig cfg;
  cfg.structure = structure_from_string(j.at("structure").get<std::string>());
  cfg.m = j.at("m").get<int>();
  cfg.k_ipfp = j.at("k_ipfp").get<int>();
  cfg.estimator = estimator_config_from_json(j.at("estimator"));
  cfg.min_samples = j.value("min_samples", 100LL);
  cfg.max_tree_level = j.value("max_tree_level", 0);
  cfg.const_lookup = j.value("const_lookup", false);
  return cfg;
}

void save_model(const VineModel& model, const std::string& path) {
  nlohmann::json header;
  header["d"] = model.d;
  header["m"] = model.m;
  header["structure"] = structure_to_string(model.structure);
  header["order"] = model.order;
  header["config"] = fit_config_to_json(model.config);
  nlohmann::json edges = nlohmann::json::array();
  for (const VineEdge& e : model.edges) {
    edges.push_back({{"j", e.j},
                     {"k", e.k},
                     {"conditioning", e.conditioning},
                     {"tree_level", e.tree_level},
                     {"parent_j", e.parent_j},
                     {"parent_j_side", e.parent_j_side},
                     {"parent_k", e.parent_k},
                     {"parent_k_side", e.parent_k_side},
                     {"tau_hat", e.stats.tau_hat},
                     {"n_used", e.stats.n_used},
                     {"mean_log_density", e.stats.mean_log_density}});
  }
  header["edges"] = edges;
  std::string header_str = header.dump();

  std::ofstream f(path, std::ios::binary);
  if (!f) throw DataError("save_model: cannot open " + path);
  f.write(kModelMagic, sizeof(kModelMagic));
  std::uint32_t version = kModelVersion;
  f.write(reinterpret_cast<const char*>(&version), sizeof(version));
  std::uint64_t len = header_str.size();
  f.write(reinterpret_cast<const char*>(&len), sizeof(len));
  f.write(header_str.data(), static_cast<std::streamsize>(len));
  for (const VineEdge& e : model.edges) {
    write_doubles(f, e.grid.values);
    write_doubles(f, e.htables.h_u_given_v);
    write_doubles(f, e.htables.h_v_given_u);
  }
  if (!f) throw DataError("save_model: write failed for " + path);
}

VineModel load_model(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw DataError("load_model: cannot open " + path);
  char magic[8];
  f.read(magic, sizeof(magic));
  if (!f || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0)
    throw DataError("load_model: not a model file: " + path);
  std::uint32_t version = 0;
  f.read(reinterpret_cast<char*>(&version), sizeof(version));
  if (version != kModelVersion)
    throw DataError("load_model: unsupported version " + std::to_string(version));
  std::uint64_t len = 0;
  f.read(reinterpret_cast<char*>(&len), sizeof(len));
  std::string header_str(len, '\0');
  f.read(header_str.data(), static_cast<std::streamsize>(len));
  if (!f) throw DataError("load_model: truncated header");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_str);
  } catch (const nlohmann::json::exception& e) {
    throw DataError(std::string("load_model: bad header: ") + e.what());
  }
  VineModel model;
  model.d = header.at("d").get<int>();
  model.m = header.at("m").get<int>();
  model.structure = structure_from_string(header.at("structure").get<std::string>());
  model.order = header.at("order").get<std::vector<int>>();
  model.config = fit_config_from_json(header.at("config"));
  const std::size_t m = static_cast<std::size_t>(model.m);
  for (const auto& je : header.at("edges")) {
    VineEdge e;
    e.j = je.at("j").get<int>();
    e.k = je.at("k").get<int>();
    e.conditioning = je.at("conditioning").get<std::vector<int>>();
    e.tree_level = je.at("tree_level").get<int>();
    e.parent_j = je.at("parent_j").get<int>();
    e.parent_j_side = je.at("parent_j_side").get<int>();
    e.parent_k = je.at("parent_k").get<int>();
    e.parent_k_side = je.at("parent_k_side").get<int>();
    e.stats.tau_hat = je.at("tau_hat").get<double>();
    e.stats.n_used = je.at("n_used").get<long long>();
    e.stats.mean_log_density = je.at("mean_log_density").get<double>();
    e.grid.m = model.m;
    e.htables.m = model.m;
    read_doubles(f, e.grid.values, m * m);
    read_doubles(f, e.htables.h_u_given_v, m * (m + 1));
    read_doubles(f, e.htables.h_v_given_u, m * (m + 1));
    model.edges.push_back(std::move(e));
  }
  if (model.edges.size() !=
      static_cast<std::size_t>(model.d) * (model.d - 1) / 2)
    throw DataError("load_model: edge count mismatch");
  return model;
}

}  // namespace vdc
