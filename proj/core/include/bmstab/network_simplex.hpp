#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <vector>

#include "bmstab/error.hpp"

namespace bmstab {

struct PlanEntry {
  int i = 0;
  int j = 0;
  double mass = 0.0;
};

struct TransportSolveResult {
  std::vector<PlanEntry> entries;  // positive-mass arcs of the optimal basis
  std::vector<double> potential_source;
  std::vector<double> potential_target;
  double cost = 0.0;
  long iterations = 0;
};

// Primal network simplex on the dense bipartite transportation graph with a
// strongly feasible spanning tree (Cunningham's leaving-arc rule) and block
// pivoting. Costs are queried on demand, so no n1*n2 matrix is stored.
//
// Module-internal engine; solve_ot wraps it.
class NetworkSimplexEngine {
 public:
  template <typename CostFn>
  static TransportSolveResult solve(const std::vector<double>& supply,
                                    const std::vector<double>& demand,
                                    CostFn&& cost) {
    const int ns = static_cast<int>(supply.size());
    const int nt = static_cast<int>(demand.size());
    if (ns == 0 || nt == 0) throw PreconditionError("transport: empty side");

    double total_s = 0, total_d = 0, cmax = 0;
    for (double s : supply) total_s += s;
    for (double d : demand) total_d += d;
    if (std::abs(total_s - total_d) > 1e-9 * std::max(total_s, total_d))
      throw PreconditionError("transport: unbalanced supply and demand");
    for (int i = 0; i < ns; ++i)
      for (int j = 0; j < nt; ++j) cmax = std::max(cmax, std::abs(cost(i, j)));
    const double scale = (cmax > 0) ? cmax : 1.0;

    const int root = ns + nt;
    const int nv = ns + nt + 1;
    const double big = 4.0 * nv;

    std::vector<int> parent(nv, -1), first_child(nv, -1), next_sib(nv, -1),
        prev_sib(nv, -1);
    // Arc to parent: true when it is oriented child -> parent.
    std::vector<char> up(nv, 0);
    std::vector<double> flow(nv, 0.0), pi(nv, 0.0);

    auto attach = [&](int v, int p) {
      parent[v] = p;
      next_sib[v] = first_child[p];
      prev_sib[v] = -1;
      if (first_child[p] >= 0) prev_sib[first_child[p]] = v;
      first_child[p] = v;
    };
    auto detach = [&](int v) {
      const int p = parent[v];
      if (prev_sib[v] >= 0) next_sib[prev_sib[v]] = next_sib[v];
      else first_child[p] = next_sib[v];
      if (next_sib[v] >= 0) prev_sib[next_sib[v]] = prev_sib[v];
      parent[v] = -1;
      next_sib[v] = prev_sib[v] = -1;
    };

    pi[root] = 0.0;
    for (int i = 0; i < ns; ++i) {
      attach(i, root);
      up[i] = 1;  // arc i -> root, cost big
      flow[i] = supply[i];
      pi[i] = big;
    }
    for (int j = 0; j < nt; ++j) {
      const int v = ns + j;
      attach(v, root);
      up[v] = 0;  // arc root -> j, cost big
      flow[v] = demand[j];
      pi[v] = -big;
    }

    std::vector<int> depth(nv, 0);
    auto compute_depth = [&](int v) {
      int d = 0;
      for (int w = v; w != root; w = parent[w]) ++d;
      return d;
    };

    const int64_t arc_count = static_cast<int64_t>(ns) * nt;
    const int64_t block =
        std::max<int64_t>(64, static_cast<int64_t>(std::sqrt(static_cast<double>(arc_count))));
    const double enter_tol = -1e-11;
    int64_t pos = 0;
    long iters = 0;
    const long iter_cap = 2000 + 200L * (ns + nt) * 32L;

    std::vector<int> path_u, path_v;
    while (true) {
      // Block search for the most negative reduced cost.
      int best_i = -1, best_j = -1;
      double best_rc = enter_tol;
      int64_t scanned = 0;
      while (scanned < arc_count) {
        const int64_t end = std::min<int64_t>(block, arc_count - scanned);
        for (int64_t k = 0; k < end; ++k) {
          const int64_t a = (pos + scanned + k) % arc_count;
          const int i = static_cast<int>(a / nt);
          const int j = static_cast<int>(a % nt);
          const double rc = cost(i, j) / scale - pi[i] + pi[ns + j];
          if (rc < best_rc) {
            best_rc = rc;
            best_i = i;
            best_j = j;
          }
        }
        scanned += end;
        if (best_i >= 0) break;
      }
      if (best_i < 0) break;  // optimal
      pos = (pos + scanned) % arc_count;

      if (++iters > iter_cap)
        throw SolverError("network simplex: iteration cap exceeded", best_rc);

      const int u = best_i;
      const int v = ns + best_j;

      // Cycle: entering arc u->v plus the tree path v .. join .. u.
      int du = compute_depth(u), dv = compute_depth(v);
      int a = u, b = v;
      path_u.clear();
      path_v.clear();
      while (du > dv) { path_u.push_back(a); a = parent[a]; --du; }
      while (dv > du) { path_v.push_back(b); b = parent[b]; --dv; }
      while (a != b) {
        path_u.push_back(a);
        path_v.push_back(b);
        a = parent[a];
        b = parent[b];
      }

      // Residuals: traversing u-side against the child->parent walk,
      // v-side along it.
      double delta = std::numeric_limits<double>::infinity();
      // Strongly feasible rule: last blocking arc when walking the cycle
      // join -> u -> (enter) -> v -> join.
      int leave = -1;       // node whose parent-arc leaves
      bool leave_on_v = false;
      for (std::size_t k = path_u.size(); k-- > 0;) {
        const int w = path_u[k];
        const bool decreasing = up[w];  // child->parent arc opposes join->u walk
        if (decreasing && flow[w] <= delta) {
          if (flow[w] < delta) delta = flow[w];
          leave = w;
          leave_on_v = false;
        }
      }
      for (std::size_t k = 0; k < path_v.size(); ++k) {
        const int w = path_v[k];
        const bool decreasing = !up[w];
        if (decreasing && flow[w] <= delta) {
          if (flow[w] < delta) delta = flow[w];
          leave = w;
          leave_on_v = true;
        }
      }
      if (leave < 0)
        throw SolverError("network simplex: unbounded pivot", best_rc);

      // Apply flow change along the cycle.
      for (int w : path_u) flow[w] += up[w] ? -delta : delta;
      for (int w : path_v) flow[w] += up[w] ? delta : -delta;

      // Re-root the detached subtree at the entering arc's endpoint.
      const int detach_node = leave;
      const int sub_end = leave_on_v ? v : u;   // endpoint inside the subtree
      const int main_end = leave_on_v ? u : v;  // endpoint staying put
      detach(detach_node);

      // Reverse parent pointers from sub_end up to detach_node.
      int prev = main_end;
      int cur = sub_end;
      double carry_flow = delta;
      char carry_up = leave_on_v ? 0 : 1;  // orientation of u->v seen from cur
      // Entering arc orientation: u->v. If sub_end == v the arc enters the
      // subtree pointing at it (cur's new parent-arc is parent->cur when
      // looking from v, i.e. up=false for v ... handled via carry_up).
      while (true) {
        const int nxt = parent[cur];
        const double f = flow[cur];
        const char o = up[cur];
        if (nxt >= 0) detach(cur);
        attach(cur, prev);
        const double new_flow = carry_flow;
        const char new_up = carry_up;
        carry_flow = f;
        carry_up = static_cast<char>(!o);
        flow[cur] = new_flow;
        up[cur] = new_up;
        if (cur == detach_node) break;
        prev = cur;
        cur = nxt;
        if (cur < 0)
          throw SolverError("network simplex: tree corruption", 0.0);
      }

      // Potential shift on the re-rooted subtree.
      const double shift = leave_on_v ? -best_rc : best_rc;
      std::vector<int> stack = {sub_end};
      while (!stack.empty()) {
        const int w = stack.back();
        stack.pop_back();
        pi[w] += shift;
        for (int ch = first_child[w]; ch >= 0; ch = next_sib[ch])
          stack.push_back(ch);
      }
    }

    // Artificial arcs must end empty for a balanced feasible instance.
    for (int w = first_child[root]; w >= 0; w = next_sib[w])
      if (flow[w] > 1e-9 * std::max(1.0, total_s))
        throw SolverError("network simplex: infeasible (artificial flow)",
                          flow[w]);

    TransportSolveResult out;
    out.iterations = iters;
    out.potential_source.resize(ns);
    out.potential_target.resize(nt);
    for (int i = 0; i < ns; ++i) out.potential_source[i] = pi[i] * scale;
    for (int j = 0; j < nt; ++j) out.potential_target[j] = -pi[ns + j] * scale;
    for (int v = 0; v < ns + nt; ++v) {
      if (parent[v] < 0 || parent[v] == root) continue;
      if (!(flow[v] > 0)) continue;
      int i, j;
      if (v < ns) { i = v; j = parent[v] - ns; }
      else { i = parent[v]; j = v - ns; }
      out.entries.push_back(PlanEntry{i, j, flow[v]});
      out.cost += flow[v] * cost(i, j);
    }
    return out;
  }
};

}  // namespace bmstab
