// SPDX-License-Identifier: Apache-2.0
#include "dfnpart/partition.hpp"

#include "dfnpart/dofs.hpp"
#include "dfnpart/errors.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <optional>
#include <random>
#include <set>
#include <sstream>

namespace dfnpart {

namespace {

using Rng = std::mt19937_64;

struct WGraph
{
  int n = 0;
  std::vector<int> xadj{0};
  std::vector<int> adj;
  std::vector<long long> vw;
  std::vector<long long> ew;
  long long total = 0;
};

WGraph from_dfn_graph(const DfnGraph& g)
{
  WGraph w;
  w.n = g.num_nodes();
  w.xadj = g.xadj;
  w.adj = g.adjncy;
  w.vw = g.node_weights;
  w.ew = g.edge_weights;
  w.total = g.total_node_weight();
  return w;
}

std::vector<int> permutation(int n, Rng& rng)
{
  std::vector<int> p(static_cast<std::size_t>(n));
  std::iota(p.begin(), p.end(), 0);
  for (int i = n - 1; i > 0; --i)
    std::swap(p[static_cast<std::size_t>(i)], p[static_cast<std::size_t>(rng() % static_cast<std::uint64_t>(i + 1))]);
  return p;
}

long long cut_of(const WGraph& g, const std::vector<int>& side)
{
  long long c = 0;
  for (int u = 0; u < g.n; ++u)
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e)
      if (side[static_cast<std::size_t>(u)] != side[static_cast<std::size_t>(g.adj[e])])
        c += g.ew[e];
  return c / 2;
}

// ---- coarsening ---------------------------------------------------------------

// Heavy-edge matching; returns cmap (fine -> coarse) and the coarse node count.
int match_heavy_edges(const WGraph& g, long long max_vw, Rng& rng, std::vector<int>& cmap)
{
  std::vector<int> match(static_cast<std::size_t>(g.n), -1);
  for (int u : permutation(g.n, rng)) {
    if (match[static_cast<std::size_t>(u)] >= 0)
      continue;
    int best = -1;
    long long best_w = -1;
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e) {
      const int v = g.adj[e];
      if (match[static_cast<std::size_t>(v)] >= 0 || g.vw[u] + g.vw[v] > max_vw)
        continue;
      if (g.ew[e] > best_w || (g.ew[e] == best_w && v < best)) {
        best = v;
        best_w = g.ew[e];
      }
    }
    if (best < 0)
      best = u;
    match[static_cast<std::size_t>(u)] = best;
    match[static_cast<std::size_t>(best)] = u;
  }
  cmap.assign(static_cast<std::size_t>(g.n), -1);
  int nc = 0;
  for (int u = 0; u < g.n; ++u)
    if (cmap[static_cast<std::size_t>(u)] < 0) {
      cmap[static_cast<std::size_t>(u)] = nc;
      cmap[static_cast<std::size_t>(match[static_cast<std::size_t>(u)])] = nc;
      ++nc;
    }
  return nc;
}

WGraph contract(const WGraph& g, const std::vector<int>& cmap, int nc)
{
  std::vector<std::vector<int>> members(static_cast<std::size_t>(nc));
  for (int u = 0; u < g.n; ++u)
    members[static_cast<std::size_t>(cmap[static_cast<std::size_t>(u)])].push_back(u);
  WGraph c;
  c.n = nc;
  c.total = g.total;
  c.vw.assign(static_cast<std::size_t>(nc), 0);
  std::vector<int> slot(static_cast<std::size_t>(nc), -1);
  std::vector<std::pair<int, long long>> row;
  for (int cu = 0; cu < nc; ++cu) {
    row.clear();
    for (int u : members[static_cast<std::size_t>(cu)]) {
      c.vw[static_cast<std::size_t>(cu)] += g.vw[u];
      for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e) {
        const int cv = cmap[static_cast<std::size_t>(g.adj[e])];
        if (cv == cu)
          continue;
        if (slot[static_cast<std::size_t>(cv)] < 0) {
          slot[static_cast<std::size_t>(cv)] = static_cast<int>(row.size());
          row.emplace_back(cv, 0);
        }
        row[static_cast<std::size_t>(slot[static_cast<std::size_t>(cv)])].second += g.ew[e];
      }
    }
    for (const auto& [cv, w] : row)
      slot[static_cast<std::size_t>(cv)] = -1;
    std::sort(row.begin(), row.end());
    for (const auto& [cv, w] : row) {
      c.adj.push_back(cv);
      c.ew.push_back(w);
    }
    c.xadj.push_back(static_cast<int>(c.adj.size()));
  }
  return c;
}

// ---- 2-way refinement ------------------------------------------------------------

struct Bounds
{
  double target0;
  double max[2];
};

long long violation(const long long w[2], const Bounds& b)
{
  return static_cast<long long>(std::ceil(std::max(0.0, static_cast<double>(w[0]) - b.max[0]) +
                                          std::max(0.0, static_cast<double>(w[1]) - b.max[1])));
}

class TwoWay
{
public:
  TwoWay(const WGraph& g, std::vector<int>& side, const Bounds& b) : g_(g), side_(side), b_(b)
  {
    gain_.assign(static_cast<std::size_t>(g.n), 0);
    w_[0] = w_[1] = 0;
    for (int u = 0; u < g.n; ++u) {
      w_[side_[static_cast<std::size_t>(u)]] += g.vw[u];
      gain_[static_cast<std::size_t>(u)] = gain_of(u);
    }
    cut_ = cut_of(g, side_);
  }

  long long cut() const { return cut_; }
  long long viol() const { return violation(w_, b_); }

  // Moves nodes off an overweight side until both sides fit (or nothing fits).
  void balance()
  {
    for (int guard = 0; guard < g_.n && viol() > 0; ++guard) {
      const int from = heavier(0, 1) ? 0 : 1;
      int best = -1;
      for (int u = 0; u < g_.n; ++u) {
        if (side_[static_cast<std::size_t>(u)] != from ||
            static_cast<double>(w_[1 - from] + g_.vw[u]) > b_.max[1 - from])
          continue;
        if (best < 0 || gain_[static_cast<std::size_t>(u)] > gain_[static_cast<std::size_t>(best)])
          best = u;
      }
      if (best < 0)
        break;
      move(best);
    }
  }

  // One FM pass; returns true if the cut (or balance) improved.
  bool fm_pass(int max_stall)
  {
    std::set<std::pair<long long, int>> queue[2]; // (-gain, node) per source side
    std::vector<char> locked(static_cast<std::size_t>(g_.n), 0);
    for (int u = 0; u < g_.n; ++u)
      if (is_boundary(u))
        queue[side_[static_cast<std::size_t>(u)]].insert({-gain_[static_cast<std::size_t>(u)], u});
    long long max_vw = 0;
    for (long long x : g_.vw)
      max_vw = std::max(max_vw, x);

    const long long cut0 = cut_;
    const long long viol0 = viol();
    std::vector<int> moves;
    long long best_cut = cut0, best_viol = viol0;
    std::size_t best_len = 0;
    int stall = 0;
    while (stall < max_stall) {
      int cand[2] = {-1, -1};
      for (int from = 0; from < 2; ++from)
        for (const auto& entry : queue[from]) {
          // relaxed bound inside a pass; only feasible prefixes are kept
          if (static_cast<double>(w_[1 - from] + g_.vw[entry.second]) <= b_.max[1 - from] + static_cast<double>(max_vw)) {
            cand[from] = entry.second;
            break;
          }
        }
      int pick = cand[0];
      if (pick < 0 || (cand[1] >= 0 && prefer(cand[1], cand[0])))
        pick = cand[1];
      if (pick < 0) {
        // no admissible boundary move: an interior node may still open a path
        for (int u = 0; u < g_.n; ++u) {
          const int from = side_[static_cast<std::size_t>(u)];
          if (locked[static_cast<std::size_t>(u)] ||
              static_cast<double>(w_[1 - from] + g_.vw[u]) > b_.max[1 - from] + static_cast<double>(max_vw))
            continue;
          if (pick < 0 || prefer(u, pick))
            pick = u;
        }
      }
      if (pick < 0)
        break;
      const int from = side_[static_cast<std::size_t>(pick)];
      queue[from].erase({-gain_[static_cast<std::size_t>(pick)], pick});
      locked[static_cast<std::size_t>(pick)] = 1;
      move(pick, [&](int v, long long old_gain) {
        if (locked[static_cast<std::size_t>(v)])
          return;
        queue[side_[static_cast<std::size_t>(v)]].erase({-old_gain, v});
        if (is_boundary(v))
          queue[side_[static_cast<std::size_t>(v)]].insert({-gain_[static_cast<std::size_t>(v)], v});
      });
      moves.push_back(pick);
      const long long v = viol();
      if (v < best_viol || (v == best_viol && cut_ < best_cut)) {
        best_viol = v;
        best_cut = cut_;
        best_len = moves.size();
        stall = 0;
      }
      else
        ++stall;
    }
    while (moves.size() > best_len) {
      move(moves.back());
      moves.pop_back();
    }
    if (viol0 == 0 && (viol() != 0 || cut_ > cut0))
      throw PartitionError("internal: FM pass increased the edge cut");
    return best_len > 0;
  }

private:
  long long gain_of(int u) const
  {
    long long g = 0;
    for (int e = g_.xadj[u]; e < g_.xadj[u + 1]; ++e)
      g += side_[static_cast<std::size_t>(g_.adj[e])] != side_[static_cast<std::size_t>(u)] ? g_.ew[e] : -g_.ew[e];
    return g;
  }

  bool is_boundary(int u) const
  {
    for (int e = g_.xadj[u]; e < g_.xadj[u + 1]; ++e)
      if (side_[static_cast<std::size_t>(g_.adj[e])] != side_[static_cast<std::size_t>(u)])
        return true;
    return false;
  }

  bool heavier(int a, int b) const
  {
    const double oa = static_cast<double>(w_[a]) - b_.max[a];
    const double ob = static_cast<double>(w_[b]) - b_.max[b];
    return oa > ob;
  }

  // Higher gain first, then the move off the heavier side, then the lower id.
  bool prefer(int a, int b) const
  {
    const long long ga = gain_[static_cast<std::size_t>(a)], gb = gain_[static_cast<std::size_t>(b)];
    if (ga != gb)
      return ga > gb;
    const int sa = side_[static_cast<std::size_t>(a)], sb = side_[static_cast<std::size_t>(b)];
    if (sa != sb)
      return heavier(sa, sb);
    return a < b;
  }

  void move(int u)
  {
    move(u, [](int, long long) {});
  }

  template <class OnGain>
  void move(int u, OnGain on_gain)
  {
    const int from = side_[static_cast<std::size_t>(u)];
    cut_ -= gain_[static_cast<std::size_t>(u)];
    side_[static_cast<std::size_t>(u)] = 1 - from;
    w_[from] -= g_.vw[u];
    w_[1 - from] += g_.vw[u];
    gain_[static_cast<std::size_t>(u)] = -gain_[static_cast<std::size_t>(u)];
    for (int e = g_.xadj[u]; e < g_.xadj[u + 1]; ++e) {
      const int v = g_.adj[e];
      const long long old = gain_[static_cast<std::size_t>(v)];
      // v on the old side of u loses an internal edge, v on the new side gains one
      gain_[static_cast<std::size_t>(v)] += side_[static_cast<std::size_t>(v)] == from ? 2 * g_.ew[e] : -2 * g_.ew[e];
      on_gain(v, old);
    }
  }

  const WGraph& g_;
  std::vector<int>& side_;
  Bounds b_;
  std::vector<long long> gain_;
  long long w_[2];
  long long cut_ = 0;
};

void refine_two_way(const WGraph& g, std::vector<int>& side, const Bounds& b)
{
  TwoWay tw(g, side, b);
  tw.balance();
  const int stall = std::max(25, std::min(g.n, 200));
  for (int pass = 0; pass < 10; ++pass)
    if (!tw.fm_pass(stall))
      break;
}

// ---- initial bisection -----------------------------------------------------------

std::vector<int> grow_bisection(const WGraph& g, int seed_node, const Bounds& b)
{
  std::vector<int> side(static_cast<std::size_t>(g.n), 1);
  std::vector<long long> gain(static_cast<std::size_t>(g.n), 0); // gain of moving to side 0
  std::vector<char> frontier(static_cast<std::size_t>(g.n), 0);
  for (int u = 0; u < g.n; ++u)
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e)
      gain[static_cast<std::size_t>(u)] -= g.ew[e];
  long long w0 = 0;
  auto take = [&](int u) {
    side[static_cast<std::size_t>(u)] = 0;
    w0 += g.vw[u];
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e) {
      const int v = g.adj[e];
      gain[static_cast<std::size_t>(v)] += 2 * g.ew[e];
      frontier[static_cast<std::size_t>(v)] = 1;
    }
  };
  take(seed_node);
  while (static_cast<double>(w0) < b.target0) {
    int best = -1;
    bool best_front = false;
    for (int u = 0; u < g.n; ++u) {
      if (side[static_cast<std::size_t>(u)] == 0 || static_cast<double>(w0 + g.vw[u]) > b.max[0])
        continue;
      const bool f = frontier[static_cast<std::size_t>(u)] != 0;
      if (best < 0 || (f && !best_front) ||
          (f == best_front && gain[static_cast<std::size_t>(u)] > gain[static_cast<std::size_t>(best)]))
        best = u, best_front = f;
    }
    if (best < 0)
      break;
    take(best);
  }
  return side;
}

// Breadth-first growth from a random node with randomised visiting order.
std::vector<int> bfs_bisection(const WGraph& g, const Bounds& b, Rng& rng)
{
  std::vector<int> side(static_cast<std::size_t>(g.n), 1);
  const auto order = permutation(g.n, rng);
  long long w0 = 0;
  std::vector<int> queue;
  std::size_t head = 0;
  std::size_t next_seed = 0;
  while (static_cast<double>(w0) < b.target0) {
    if (head == queue.size()) {
      while (next_seed < order.size() && side[static_cast<std::size_t>(order[next_seed])] == 0)
        ++next_seed;
      if (next_seed == order.size())
        break;
      queue.push_back(order[next_seed++]);
    }
    const int u = queue[head++];
    if (side[static_cast<std::size_t>(u)] == 0 || static_cast<double>(w0 + g.vw[u]) > b.max[0])
      continue;
    side[static_cast<std::size_t>(u)] = 0;
    w0 += g.vw[u];
    std::vector<int> nb(g.adj.begin() + g.xadj[u], g.adj.begin() + g.xadj[u + 1]);
    std::shuffle(nb.begin(), nb.end(), rng);
    for (int v : nb)
      if (side[static_cast<std::size_t>(v)] == 1)
        queue.push_back(v);
  }
  return side;
}

std::vector<int> initial_bisection(const WGraph& g, const Bounds& b, Rng& rng, bool randomized)
{
  if (randomized) {
    std::vector<int> best;
    long long best_viol = 0, best_cut = 0;
    for (int t = 0; t < 4; ++t) {
      auto side = bfs_bisection(g, b, rng);
      refine_two_way(g, side, b);
      long long w[2] = {0, 0};
      for (int u = 0; u < g.n; ++u)
        w[side[static_cast<std::size_t>(u)]] += g.vw[u];
      const long long v = violation(w, b);
      const long long c = cut_of(g, side);
      if (best.empty() || v < best_viol || (v == best_viol && c < best_cut)) {
        best = std::move(side);
        best_viol = v;
        best_cut = c;
      }
    }
    return best;
  }
  std::vector<int> seeds;
  if (g.n <= 32) {
    seeds.resize(static_cast<std::size_t>(g.n));
    std::iota(seeds.begin(), seeds.end(), 0);
  }
  else {
    const auto p = permutation(g.n, rng);
    seeds.assign(p.begin(), p.begin() + std::min(g.n, 10));
  }
  std::vector<int> best;
  long long best_viol = 0, best_cut = 0;
  for (int s : seeds) {
    auto side = grow_bisection(g, s, b);
    refine_two_way(g, side, b);
    long long w[2] = {0, 0};
    for (int u = 0; u < g.n; ++u)
      w[side[static_cast<std::size_t>(u)]] += g.vw[u];
    const long long v = violation(w, b);
    const long long c = cut_of(g, side);
    if (best.empty() || v < best_viol || (v == best_viol && c < best_cut)) {
      best = std::move(side);
      best_viol = v;
      best_cut = c;
    }
  }
  return best;
}

// ---- multilevel bisection and recursion --------------------------------------------

std::vector<int> multilevel_bisect(const WGraph& g, const Bounds& b, int coarsen_to, Rng& rng, bool randomized)
{
  std::vector<WGraph> levels;
  std::vector<std::vector<int>> cmaps;
  const WGraph* cur = &g;
  const long long max_vw = std::max<long long>(1, static_cast<long long>(1.5 * static_cast<double>(g.total) / coarsen_to));
  while (cur->n > coarsen_to) {
    std::vector<int> cmap;
    const int nc = match_heavy_edges(*cur, max_vw, rng, cmap);
    if (nc > 0.95 * cur->n)
      break;
    levels.push_back(contract(*cur, cmap, nc));
    cmaps.push_back(std::move(cmap));
    cur = &levels.back();
  }
  std::vector<int> side = initial_bisection(*cur, b, rng, randomized);
  for (std::size_t l = levels.size(); l-- > 0;) {
    const WGraph& fine = l == 0 ? g : levels[l - 1];
    std::vector<int> fine_side(static_cast<std::size_t>(fine.n));
    for (int u = 0; u < fine.n; ++u)
      fine_side[static_cast<std::size_t>(u)] = side[static_cast<std::size_t>(cmaps[l][static_cast<std::size_t>(u)])];
    side = std::move(fine_side);
    refine_two_way(fine, side, b);
  }
  return side;
}

WGraph induced(const WGraph& g, const std::vector<int>& keep, std::vector<int>& local)
{
  local.assign(static_cast<std::size_t>(g.n), -1);
  for (std::size_t i = 0; i < keep.size(); ++i)
    local[static_cast<std::size_t>(keep[i])] = static_cast<int>(i);
  WGraph s;
  s.n = static_cast<int>(keep.size());
  for (int u : keep) {
    s.vw.push_back(g.vw[u]);
    s.total += g.vw[u];
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e)
      if (local[static_cast<std::size_t>(g.adj[e])] >= 0) {
        s.adj.push_back(local[static_cast<std::size_t>(g.adj[e])]);
        s.ew.push_back(g.ew[e]);
      }
    s.xadj.push_back(static_cast<int>(s.adj.size()));
  }
  return s;
}

void recursive_bisection(const WGraph& g, const std::vector<int>& ids, int k, int base, double tol_b, Rng& rng,
                         bool randomized, std::vector<int>& out)
{
  if (k == 1 || g.n == 0) {
    for (int id : ids)
      out[static_cast<std::size_t>(id)] = base;
    return;
  }
  const int k0 = k / 2;
  const double t0 = static_cast<double>(g.total) * k0 / k;
  const double t1 = static_cast<double>(g.total) - t0;
  const Bounds b{t0, {std::max((1.0 + tol_b) * t0, std::ceil(t0)), std::max((1.0 + tol_b) * t1, std::ceil(t1))}};
  std::vector<int> side = multilevel_bisect(g, b, std::max(30 * k, 200), rng, randomized);

  // both halves need at least as many nodes as parts
  const int need[2] = {k0, k - k0};
  for (int s = 0; s < 2; ++s) {
    int count = static_cast<int>(std::count(side.begin(), side.end(), s));
    for (int u = 0; u < g.n && count < need[s]; ++u)
      if (side[static_cast<std::size_t>(u)] != s &&
          std::count(side.begin(), side.end(), 1 - s) > need[1 - s]) {
        side[static_cast<std::size_t>(u)] = s;
        ++count;
      }
  }

  for (int s = 0; s < 2; ++s) {
    std::vector<int> keep;
    for (int u = 0; u < g.n; ++u)
      if (side[static_cast<std::size_t>(u)] == s)
        keep.push_back(u);
    std::vector<int> local;
    const WGraph sub = induced(g, keep, local);
    std::vector<int> sub_ids;
    for (int u : keep)
      sub_ids.push_back(ids[static_cast<std::size_t>(u)]);
    recursive_bisection(sub, sub_ids, s == 0 ? k0 : k - k0, s == 0 ? base : base + k0, tol_b, rng, randomized, out);
  }
}

// ---- k-way cleanup ---------------------------------------------------------------

// Quadratic swap search only below this size.
constexpr int swap_limit = 4000;
// Graphs up to this size get more restarts.
constexpr int small_graph = 2000;
// Tabu balancing only below this size.
constexpr int tabu_limit = 200;

// Small graphs whose integer weights defeat single moves: moves and swaps that never
// raise the total overweight, neutral ones allowed, recently moved nodes tabu.
void tabu_balance(const WGraph& g, std::vector<int>& part, int k, double bound)
{
  std::vector<long long> w(static_cast<std::size_t>(k), 0);
  std::vector<int> size(static_cast<std::size_t>(k), 0);
  for (int u = 0; u < g.n; ++u) {
    w[static_cast<std::size_t>(part[static_cast<std::size_t>(u)])] += g.vw[u];
    ++size[static_cast<std::size_t>(part[static_cast<std::size_t>(u)])];
  }
  auto over = [&](long long x) { return std::max(0.0, static_cast<double>(x) - bound); };
  auto total_over = [&] {
    double v = 0.0;
    for (long long x : w)
      v += over(x);
    return v;
  };
  // conn[u * k + q]: edge weight from u into part q
  std::vector<long long> conn(static_cast<std::size_t>(g.n) * static_cast<std::size_t>(k), 0);
  auto at = [&](int u, int q) -> long long& {
    return conn[static_cast<std::size_t>(u) * static_cast<std::size_t>(k) + static_cast<std::size_t>(q)];
  };
  for (int u = 0; u < g.n; ++u)
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e)
      at(u, part[static_cast<std::size_t>(g.adj[e])]) += g.ew[e];
  auto apply = [&](int u, int q) {
    const int p = part[static_cast<std::size_t>(u)];
    w[static_cast<std::size_t>(p)] -= g.vw[u];
    w[static_cast<std::size_t>(q)] += g.vw[u];
    --size[static_cast<std::size_t>(p)];
    ++size[static_cast<std::size_t>(q)];
    part[static_cast<std::size_t>(u)] = q;
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e) {
      at(g.adj[e], p) -= g.ew[e];
      at(g.adj[e], q) += g.ew[e];
    }
  };
  auto edge = [&](int u, int v) {
    long long x = 0;
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e)
      if (g.adj[e] == v)
        x += g.ew[e];
    return x;
  };

  std::vector<int> tabu_until(static_cast<std::size_t>(g.n), -1);
  const int tenure = std::max(2, g.n / 2);
  const int iterations = 50 * g.n;
  for (int it = 0; it < iterations; ++it) {
    const double v0 = total_over();
    if (v0 == 0.0)
      return;
    // best candidate by (overweight after, -gain, lowest ids)
    double best_v = v0;
    long long best_gain = std::numeric_limits<long long>::min();
    int bu = -1, bv = -1, bq = -1;
    auto consider = [&](double v, long long gain, int u, int v_node, int q) {
      if (v > v0 || v > best_v || (v == best_v && gain <= best_gain))
        return;
      best_v = v;
      best_gain = gain;
      bu = u;
      bv = v_node;
      bq = q;
    };
    for (int u = 0; u < g.n; ++u) {
      if (tabu_until[static_cast<std::size_t>(u)] >= it)
        continue;
      const int p = part[static_cast<std::size_t>(u)];
      if (size[static_cast<std::size_t>(p)] <= 1)
        continue;
      for (int q = 0; q < k; ++q) {
        if (q == p)
          continue;
        const double v = v0 - over(w[static_cast<std::size_t>(p)]) - over(w[static_cast<std::size_t>(q)]) +
                         over(w[static_cast<std::size_t>(p)] - g.vw[u]) + over(w[static_cast<std::size_t>(q)] + g.vw[u]);
        consider(v, at(u, q) - at(u, p), u, -1, q);
      }
    }
    for (int u = 0; u < g.n; ++u) {
      if (tabu_until[static_cast<std::size_t>(u)] >= it)
        continue;
      const int p = part[static_cast<std::size_t>(u)];
      for (int x = u + 1; x < g.n; ++x) {
        const int q = part[static_cast<std::size_t>(x)];
        if (q == p || g.vw[x] == g.vw[u] || tabu_until[static_cast<std::size_t>(x)] >= it)
          continue;
        const long long d = g.vw[x] - g.vw[u];
        const double v = v0 - over(w[static_cast<std::size_t>(p)]) - over(w[static_cast<std::size_t>(q)]) +
                         over(w[static_cast<std::size_t>(p)] + d) + over(w[static_cast<std::size_t>(q)] - d);
        const long long gain = at(u, q) - at(u, p) + at(x, p) - at(x, q) - 2 * edge(u, x);
        consider(v, gain, u, x, q);
      }
    }
    if (bu < 0)
      return;
    if (bv >= 0) {
      const int p = part[static_cast<std::size_t>(bu)];
      apply(bv, p);
      tabu_until[static_cast<std::size_t>(bv)] = it + tenure;
    }
    apply(bu, bq);
    tabu_until[static_cast<std::size_t>(bu)] = it + tenure;
  }
}

void kway_cleanup(const WGraph& g, std::vector<int>& part, int k, double bound)
{
  std::vector<long long> w(static_cast<std::size_t>(k), 0);
  std::vector<int> size(static_cast<std::size_t>(k), 0);
  for (int u = 0; u < g.n; ++u) {
    w[static_cast<std::size_t>(part[static_cast<std::size_t>(u)])] += g.vw[u];
    ++size[static_cast<std::size_t>(part[static_cast<std::size_t>(u)])];
  }
  std::vector<long long> conn(static_cast<std::size_t>(k), 0);
  auto connections = [&](int u) {
    std::fill(conn.begin(), conn.end(), 0);
    for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e)
      conn[static_cast<std::size_t>(part[static_cast<std::size_t>(g.adj[e])])] += g.ew[e];
  };
  auto apply = [&](int u, int q) {
    const int p = part[static_cast<std::size_t>(u)];
    w[static_cast<std::size_t>(p)] -= g.vw[u];
    --size[static_cast<std::size_t>(p)];
    w[static_cast<std::size_t>(q)] += g.vw[u];
    ++size[static_cast<std::size_t>(q)];
    part[static_cast<std::size_t>(u)] = q;
  };

  // overweight parts shed the node whose move costs least
  for (int guard = 0; guard < g.n; ++guard) {
    int over = -1;
    for (int p = 0; p < k; ++p)
      if (static_cast<double>(w[static_cast<std::size_t>(p)]) > bound &&
          (over < 0 || w[static_cast<std::size_t>(p)] > w[static_cast<std::size_t>(over)]))
        over = p;
    if (over < 0)
      break;
    int best_u = -1, best_q = -1;
    long long best_gain = std::numeric_limits<long long>::min();
    for (int u = 0; u < g.n; ++u) {
      if (part[static_cast<std::size_t>(u)] != over || size[static_cast<std::size_t>(over)] <= 1)
        continue;
      connections(u);
      for (int q = 0; q < k; ++q) {
        if (q == over || static_cast<double>(w[static_cast<std::size_t>(q)] + g.vw[u]) > bound)
          continue;
        const long long gain = conn[static_cast<std::size_t>(q)] - conn[static_cast<std::size_t>(over)];
        if (gain > best_gain) {
          best_gain = gain;
          best_u = u;
          best_q = q;
        }
      }
    }
    if (best_u < 0 && g.n <= swap_limit) {
      // no single move fits: exchange a heavier node of `over` with a lighter one elsewhere
      int best_v = -1;
      for (int u = 0; u < g.n; ++u) {
        if (part[static_cast<std::size_t>(u)] != over)
          continue;
        connections(u);
        const std::vector<long long> conn_u = conn;
        for (int v = 0; v < g.n; ++v) {
          const int q = part[static_cast<std::size_t>(v)];
          if (q == over || g.vw[v] >= g.vw[u] ||
              static_cast<double>(w[static_cast<std::size_t>(q)] - g.vw[v] + g.vw[u]) > bound)
            continue;
          connections(v);
          long long uv = 0;
          for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e)
            if (g.adj[e] == v)
              uv += g.ew[e];
          const long long gain = conn_u[static_cast<std::size_t>(q)] - conn_u[static_cast<std::size_t>(over)] +
                                 conn[static_cast<std::size_t>(over)] - conn[static_cast<std::size_t>(q)] - 2 * uv;
          if (gain > best_gain) {
            best_gain = gain;
            best_u = u;
            best_v = v;
          }
        }
      }
      if (best_u < 0)
        break;
      const int q = part[static_cast<std::size_t>(best_v)];
      apply(best_v, over);
      apply(best_u, q);
      continue;
    }
    if (best_u < 0)
      break;
    apply(best_u, best_q);
  }

  if (g.n <= tabu_limit)
    tabu_balance(g, part, k, bound);
  for (int p = 0; p < k; ++p) {
    w[static_cast<std::size_t>(p)] = 0;
    size[static_cast<std::size_t>(p)] = 0;
  }
  for (int u = 0; u < g.n; ++u) {
    w[static_cast<std::size_t>(part[static_cast<std::size_t>(u)])] += g.vw[u];
    ++size[static_cast<std::size_t>(part[static_cast<std::size_t>(u)])];
  }

  // greedy boundary refinement; every accepted move strictly lowers the cut
  for (int pass = 0; pass < 64; ++pass) {
    bool moved = false;
    for (int u = 0; u < g.n; ++u) {
      const int p = part[static_cast<std::size_t>(u)];
      if (size[static_cast<std::size_t>(p)] <= 1)
        continue;
      connections(u);
      int best_q = -1;
      long long best_gain = 0;
      for (int q = 0; q < k; ++q) {
        if (q == p || conn[static_cast<std::size_t>(q)] == 0)
          continue;
        const long long gain = conn[static_cast<std::size_t>(q)] - conn[static_cast<std::size_t>(p)];
        const bool fits = static_cast<double>(w[static_cast<std::size_t>(q)] + g.vw[u]) <= bound;
        if (fits && gain > best_gain) {
          best_gain = gain;
          best_q = q;
        }
      }
      if (best_q >= 0) {
        apply(u, best_q);
        moved = true;
      }
    }
    if (!moved && g.n <= tabu_limit) {
      // pairwise exchanges reach states single moves cannot under a tight bound
      long long best_gain = 0;
      int bu = -1, bx = -1;
      for (int u = 0; u < g.n; ++u) {
        const int p = part[static_cast<std::size_t>(u)];
        connections(u);
        const std::vector<long long> cu = conn;
        for (int x = u + 1; x < g.n; ++x) {
          const int q = part[static_cast<std::size_t>(x)];
          const long long d = g.vw[x] - g.vw[u];
          if (q == p || static_cast<double>(w[static_cast<std::size_t>(p)] + d) > bound ||
              static_cast<double>(w[static_cast<std::size_t>(q)] - d) > bound)
            continue;
          connections(x);
          long long ux = 0;
          for (int e = g.xadj[u]; e < g.xadj[u + 1]; ++e)
            if (g.adj[e] == x)
              ux += g.ew[e];
          const long long gain = cu[static_cast<std::size_t>(q)] - cu[static_cast<std::size_t>(p)] +
                                 conn[static_cast<std::size_t>(p)] - conn[static_cast<std::size_t>(q)] - 2 * ux;
          if (gain > best_gain) {
            best_gain = gain;
            bu = u;
            bx = x;
          }
        }
      }
      if (bu >= 0) {
        const int p = part[static_cast<std::size_t>(bu)], q = part[static_cast<std::size_t>(bx)];
        apply(bx, p);
        apply(bu, q);
        moved = true;
      }
    }
    if (!moved)
      break;
  }
}

double balance_bound(long long total, int k, double tol)
{
  return (1.0 + tol) * std::ceil(static_cast<double>(total) / k);
}

} // namespace

long long edge_cut(const DfnGraph& g, const std::vector<int>& part_of)
{
  long long c = 0;
  for (int u = 0; u < g.num_nodes(); ++u)
    for (int e = g.xadj[static_cast<std::size_t>(u)]; e < g.xadj[static_cast<std::size_t>(u) + 1]; ++e)
      if (part_of[static_cast<std::size_t>(u)] != part_of[static_cast<std::size_t>(g.adjncy[static_cast<std::size_t>(e)])])
        c += g.edge_weights[static_cast<std::size_t>(e)];
  return c / 2;
}

std::vector<long long> part_weights(const DfnGraph& g, const std::vector<int>& part_of, int k)
{
  std::vector<long long> w(static_cast<std::size_t>(k), 0);
  for (int u = 0; u < g.num_nodes(); ++u)
    w[static_cast<std::size_t>(part_of[static_cast<std::size_t>(u)])] += g.node_weights[static_cast<std::size_t>(u)];
  return w;
}

bool balance_ok(const DfnGraph& g, const std::vector<int>& part_of, int k, double balance_tol)
{
  const double bound = balance_bound(g.total_node_weight(), k, balance_tol);
  for (long long w : part_weights(g, part_of, k))
    if (static_cast<double>(w) > bound)
      return false;
  return true;
}

Partition partition_multilevel(const DfnGraph& g, int k, double balance_tol, std::uint64_t seed)
{
  const int n = g.num_nodes();
  if (k < 1)
    throw PartitionError("k must be >= 1");
  if (k > n)
    throw PartitionError("cannot split " + std::to_string(n) + " nodes into " + std::to_string(k) + " parts");
  if (balance_tol < 0.0)
    throw PartitionError("balance_tol must be >= 0");
  const long long total = g.total_node_weight();
  const double limit = balance_bound(total, k, balance_tol);
  for (int u = 0; u < n; ++u)
    if (static_cast<double>(g.node_weights[static_cast<std::size_t>(u)]) > limit)
      throw PartitionError("infeasible balance: node " + std::to_string(u) + " weighs " +
                           std::to_string(g.node_weights[static_cast<std::size_t>(u)]) + ", limit " +
                           std::to_string(limit));

  if (k == 1)
    return make_partition(g, std::vector<int>(static_cast<std::size_t>(n), 0), k, balance_tol);

  // independent restarts; the first balanced result with the lowest cut wins
  const WGraph wg = from_dfn_graph(g);
  const int depth = static_cast<int>(std::ceil(std::log2(static_cast<double>(k))));
  const double tol_b = std::pow(1.0 + balance_tol, 1.0 / depth) - 1.0;
  const int trials = n <= small_graph ? 8 : 2;
  std::optional<Partition> best;
  for (int t = 0; t < trials; ++t) {
    Rng rng(seed + 0x9E3779B97F4A7C15ULL * static_cast<std::uint64_t>(t));
    std::vector<int> part(static_cast<std::size_t>(n), 0);
    std::vector<int> ids(static_cast<std::size_t>(n));
    std::iota(ids.begin(), ids.end(), 0);
    recursive_bisection(wg, ids, k, 0, tol_b, rng, t > 0, part);
    kway_cleanup(wg, part, k, balance_bound(total, k, balance_tol));
    Partition p = make_partition(g, std::move(part), k, balance_tol);
    if (!best || (p.balance_satisfied && !best->balance_satisfied) ||
        (p.balance_satisfied == best->balance_satisfied && p.edge_cut < best->edge_cut))
      best = std::move(p);
  }
  return *best;
}

Partition make_partition(const DfnGraph& g, std::vector<int> part_of, int k, double balance_tol)
{
  if (k < 1)
    throw PartitionError("k must be >= 1");
  if (part_of.size() != static_cast<std::size_t>(g.num_nodes()))
    throw PartitionError("partition has " + std::to_string(part_of.size()) + " entries, graph has " +
                         std::to_string(g.num_nodes()) + " nodes");
  for (std::size_t u = 0; u < part_of.size(); ++u)
    if (part_of[u] < 0 || part_of[u] >= k)
      throw PartitionError("node " + std::to_string(u) + ": part id " + std::to_string(part_of[u]) +
                           " outside 0.." + std::to_string(k - 1));
  Partition p;
  p.k = k;
  p.strategy = g.strategy;
  p.edge_cut = edge_cut(g, part_of);
  p.balance_satisfied = balance_ok(g, part_of, k, balance_tol);
  p.part_of = std::move(part_of);
  return p;
}

std::string partition_to_string(const Partition& p)
{
  std::string out;
  for (int x : p.part_of)
    out += std::to_string(x) + "\n";
  return out;
}

Partition partition_from_string(std::string_view text, int n, int k)
{
  std::istringstream in{std::string(text)};
  std::vector<int> part;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos)
      continue;
    std::istringstream row(line);
    long long v = 0;
    std::string rest;
    if (!(row >> v) || (row >> rest))
      throw ParseError("partition file line " + std::to_string(line_no) + ": expected one integer");
    if (v < 0 || v >= k)
      throw PartitionError("partition file line " + std::to_string(line_no) + ": part id " + std::to_string(v) +
                           " outside 0.." + std::to_string(k - 1));
    part.push_back(static_cast<int>(v));
  }
  if (static_cast<int>(part.size()) != n)
    throw ParseError("partition file: expected " + std::to_string(n) + " lines, got " + std::to_string(part.size()));
  Partition p;
  p.k = k;
  p.part_of = std::move(part);
  return p;
}

void export_partition(const Partition& p, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out)
    throw Error("cannot write " + path.string());
  out << partition_to_string(p);
}

Partition import_partition(const std::filesystem::path& path, int n, int k)
{
  std::ifstream in(path);
  if (!in)
    throw Error("cannot read " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return partition_from_string(buf.str(), n, k);
}

FractureAssignment assignment_from_parts(const Dfn& dfn, std::vector<int> fracture_part, int k)
{
  if (fracture_part.size() != dfn.num_fractures())
    throw PartitionError("assignment size does not match the fracture count");
  for (int p : fracture_part)
    if (p < 0 || p >= k)
      throw PartitionError("fracture part id outside 0.." + std::to_string(k - 1));
  FractureAssignment a;
  a.k = k;
  a.fracture_part = std::move(fracture_part);
  for (const Trace& t : dfn.traces())
    a.trace_hint.push_back(a.part_of_fracture(t.it_pair.first));
  for (const CrossPoint& cp : dfn.cross_points())
    a.cp_hint.push_back(a.part_of_fracture(cp.icp_triple[0]));
  return a;
}

FractureAssignment fracture_assignment(const Partition& p, const DfnGraph& g, const Dfn& dfn)
{
  if (g.strategy == Strategy::MeshP)
    throw Error("a Dof-level partition has no fracture assignment");
  std::vector<int> fp(dfn.num_fractures(), -1);
  for (int u = 0; u < g.num_nodes(); ++u)
    if (g.labels[static_cast<std::size_t>(u)].kind == NodeLabelKind::Fracture)
      fp.at(static_cast<std::size_t>(g.labels[static_cast<std::size_t>(u)].id - 1)) = p.part_of[static_cast<std::size_t>(u)];
  if (std::find(fp.begin(), fp.end(), -1) != fp.end())
    throw PartitionError("graph does not cover every fracture");
  FractureAssignment a = assignment_from_parts(dfn, std::move(fp), p.k);
  for (int u = 0; u < g.num_nodes(); ++u) {
    const NodeLabel& l = g.labels[static_cast<std::size_t>(u)];
    const int part = p.part_of[static_cast<std::size_t>(u)];
    if (l.kind == NodeLabelKind::Trace) {
      const auto [r, s] = dfn.it(l.id);
      if (part == a.part_of_fracture(r) || part == a.part_of_fracture(s))
        a.trace_hint[static_cast<std::size_t>(l.id - 1)] = part;
    }
    else if (l.kind == NodeLabelKind::CrossPoint) {
      for (int r : dfn.icp(l.id))
        if (part == a.part_of_fracture(r))
          a.cp_hint[static_cast<std::size_t>(l.id - 1)] = part;
    }
  }
  return a;
}

namespace {

double imbalance(const std::vector<long long>& d)
{
  if (d.empty())
    return 1.0;
  const auto [lo, hi] = std::minmax_element(d.begin(), d.end());
  return *hi == 0 ? 1.0 : static_cast<double>(*lo) / static_cast<double>(*hi);
}

} // namespace

PartitionMetrics compute_metrics(const PolyMesh& mesh, const FractureAssignment& a, long long graph_edge_cut)
{
  const Dfn& dfn = mesh.dfn();
  PartitionMetrics m;
  m.graph_edge_cut = graph_edge_cut;
  for (const Trace& t : dfn.traces())
    if (a.part_of_fracture(t.it_pair.first) != a.part_of_fracture(t.it_pair.second))
      ++m.cut_C;
  m.dof_per_part.assign(static_cast<std::size_t>(a.k), 0);
  const std::vector<int> owner = dof_owners(mesh, a);
  for (const MeshNode& n : mesh.nodes())
    if (n.is_dof())
      ++m.dof_per_part[static_cast<std::size_t>(owner[static_cast<std::size_t>(n.id)])];
  m.imbalance_I = imbalance(m.dof_per_part);
  return m;
}

PartitionMetrics compute_mesh_metrics(const PolyMesh& mesh, const DfnGraph& dof_graph, const Partition& p)
{
  PartitionMetrics m;
  m.graph_edge_cut = edge_cut(dof_graph, p.part_of);
  m.dof_per_part.assign(static_cast<std::size_t>(p.k), 0);
  for (int u = 0; u < dof_graph.num_nodes(); ++u)
    ++m.dof_per_part[static_cast<std::size_t>(p.part_of[static_cast<std::size_t>(u)])];
  m.imbalance_I = imbalance(m.dof_per_part);

  std::vector<char> cut(mesh.dfn().num_traces(), 0);
  for (int u = 0; u < dof_graph.num_nodes(); ++u) {
    const MeshNode& node = mesh.node(dof_graph.labels[static_cast<std::size_t>(u)].id);
    if (node.traces.empty())
      continue;
    for (int e = dof_graph.xadj[static_cast<std::size_t>(u)]; e < dof_graph.xadj[static_cast<std::size_t>(u) + 1]; ++e)
      if (p.part_of[static_cast<std::size_t>(dof_graph.adjncy[static_cast<std::size_t>(e)])] !=
          p.part_of[static_cast<std::size_t>(u)])
        for (int t : node.traces)
          cut[static_cast<std::size_t>(t - 1)] = 1;
  }
  m.cut_C = static_cast<int>(std::count(cut.begin(), cut.end(), 1));
  return m;
}

} // namespace dfnpart
