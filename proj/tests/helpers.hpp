#pragma once
#include <random>
#include <set>
#include <string>
#include <vector>

#include "casper/graph.hpp"

namespace casper_test {

using casper::BinaryMatrix;

// consensus protein-signalling network: 11 nodes, 17 edges
inline std::pair<BinaryMatrix, std::vector<std::string>> sachs_consensus() {
  std::vector<std::string> names = {"Raf", "Mek",  "Plcg", "PIP2", "PIP3", "Erk",
                                    "Akt", "PKA",  "PKC",  "P38",  "Jnk"};
  auto id = [&](const std::string& n) {
    for (size_t k = 0; k < names.size(); ++k)
      if (names[k] == n) return static_cast<int>(k);
    throw std::logic_error("bad node name");
  };
  BinaryMatrix g = BinaryMatrix::Zero(11, 11);
  const char* edges[][2] = {
      {"PKC", "Raf"}, {"PKC", "Mek"}, {"PKC", "Jnk"},  {"PKC", "P38"}, {"PKC", "PKA"},
      {"PKA", "Raf"}, {"PKA", "Mek"}, {"PKA", "Erk"},  {"PKA", "Akt"}, {"PKA", "Jnk"},
      {"PKA", "P38"}, {"Raf", "Mek"}, {"Mek", "Erk"},  {"Erk", "Akt"}, {"Plcg", "PIP2"},
      {"Plcg", "PIP3"}, {"PIP3", "PIP2"}};
  for (auto& e : edges) g(id(e[0]), id(e[1])) = 1;
  return {g, names};
}

// random DAG: random order + density p on compatible pairs
inline BinaryMatrix random_dag(int d, double p, std::mt19937_64& rng) {
  std::vector<int> order(d);
  for (int i = 0; i < d; ++i) order[i] = i;
  std::shuffle(order.begin(), order.end(), rng);
  std::bernoulli_distribution coin(p);
  BinaryMatrix g = BinaryMatrix::Zero(d, d);
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (coin(rng)) g(order[a], order[b]) = 1;
  return g;
}

// ---- intervention-distance oracle: explicit path enumeration, independent of
// ---- the library's reachability machinery

struct Step {
  int node;
  bool forward;  // edge points toward this node
};

inline void all_paths(const BinaryMatrix& g, int from, int to, std::vector<Step>& cur,
                      std::vector<char>& used, std::vector<std::vector<Step>>& out) {
  int d = static_cast<int>(g.rows());
  int v = cur.back().node;
  if (v == to) {
    out.push_back(cur);
    return;
  }
  for (int w = 0; w < d; ++w) {
    if (used[w]) continue;
    if (g(v, w)) {
      used[w] = 1;
      cur.push_back({w, true});
      all_paths(g, from, to, cur, used, out);
      cur.pop_back();
      used[w] = 0;
    }
    if (g(w, v)) {
      used[w] = 1;
      cur.push_back({w, false});
      all_paths(g, from, to, cur, used, out);
      cur.pop_back();
      used[w] = 0;
    }
  }
}

inline std::vector<std::vector<Step>> enumerate_paths(const BinaryMatrix& g, int i, int j) {
  std::vector<std::vector<Step>> out;
  std::vector<Step> cur{{i, true}};
  std::vector<char> used(g.rows(), 0);
  used[i] = 1;
  all_paths(g, i, j, cur, used, out);
  return out;
}

inline std::vector<char> descendants_of(const BinaryMatrix& g, int s) {
  int d = static_cast<int>(g.rows());
  std::vector<char> seen(d, 0);
  seen[s] = 1;
  std::vector<int> stack{s};
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int w = 0; w < d; ++w)
      if (g(v, w) && !seen[w]) {
        seen[w] = 1;
        stack.push_back(w);
      }
  }
  return seen;
}

inline bool path_blocked(const BinaryMatrix& g, const std::vector<Step>& path,
                         const std::set<int>& z) {
  for (size_t t = 1; t + 1 < path.size(); ++t) {
    int b = path[t].node;
    bool collider = path[t].forward && !path[t + 1].forward;
    if (collider) {
      auto below = descendants_of(g, b);
      bool opened = false;
      for (int v : z)
        if (below[v]) opened = true;
      if (!opened) return true;
    } else {
      if (z.count(b)) return true;
    }
  }
  return false;
}

inline bool oracle_dsep(const BinaryMatrix& g, int i, int j, const std::set<int>& z) {
  for (const auto& path : enumerate_paths(g, i, j))
    if (!path_blocked(g, path, z)) return false;
  return true;
}

inline bool oracle_adjustment_valid(const BinaryMatrix& truth, int i, int j,
                                    const std::set<int>& z) {
  auto from_i = descendants_of(truth, i);
  if (z.count(j)) return !from_i[j];

  auto paths = enumerate_paths(truth, i, j);
  std::set<int> causal_nodes;
  for (const auto& path : paths) {
    bool all_forward = true;
    for (size_t t = 1; t < path.size(); ++t)
      if (!path[t].forward) all_forward = false;
    if (all_forward)
      for (size_t t = 1; t < path.size(); ++t) causal_nodes.insert(path[t].node);
  }
  std::set<int> forbidden;
  for (int w : causal_nodes) {
    auto below = descendants_of(truth, w);
    for (int u = 0; u < truth.rows(); ++u)
      if (below[u]) forbidden.insert(u);
  }
  for (int v : z)
    if (forbidden.count(v)) return false;
  for (const auto& path : paths) {
    bool all_forward = true;
    for (size_t t = 1; t < path.size(); ++t)
      if (!path[t].forward) all_forward = false;
    if (all_forward) continue;
    if (!path_blocked(truth, path, z)) return false;
  }
  return true;
}

inline int oracle_sid(const BinaryMatrix& truth, const BinaryMatrix& estimate) {
  int d = static_cast<int>(truth.rows());
  int bad = 0;
  for (int i = 0; i < d; ++i) {
    std::set<int> z;
    for (int p = 0; p < d; ++p)
      if (estimate(p, i)) z.insert(p);
    for (int j = 0; j < d; ++j)
      if (j != i && !oracle_adjustment_valid(truth, i, j, z)) bad++;
  }
  return bad;
}

}  // namespace casper_test
