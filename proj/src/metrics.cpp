#include "casper/metrics.hpp"

#include <cmath>
#include <deque>

namespace casper {

namespace {

void check_pair(const BinaryMatrix& truth, const BinaryMatrix& estimate) {
  if (truth.rows() != truth.cols() || estimate.rows() != estimate.cols() ||
      truth.rows() != estimate.rows())
    throw std::invalid_argument("adjacency shapes must match and be square");
  for (int i = 0; i < truth.rows(); ++i)
    if (truth(i, i) != 0 || estimate(i, i) != 0)
      throw std::invalid_argument("adjacency diagonals must be zero");
}

// nodes reachable from each start by directed edges, start included
std::vector<std::vector<char>> descendant_table(const BinaryMatrix& g) {
  int d = static_cast<int>(g.rows());
  std::vector<std::vector<char>> table(d, std::vector<char>(d, 0));
  for (int s = 0; s < d; ++s) {
    std::deque<int> q{s};
    table[s][s] = 1;
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int w = 0; w < d; ++w)
        if (g(v, w) && !table[s][w]) {
          table[s][w] = 1;
          q.push_back(w);
        }
    }
  }
  return table;
}

// reachability with edge-direction states; "up" means the trail is entering
// the node against an edge (from a child), "down" means along one (from a parent)
bool dsep_nocheck(const BinaryMatrix& g, int i, int j, const std::set<int>& z) {
  int d = static_cast<int>(g.rows());
  std::vector<char> anc_z(d, 0);  // z and its ancestors, colliders open there
  {
    std::deque<int> q;
    for (int v : z) {
      anc_z[v] = 1;
      q.push_back(v);
    }
    while (!q.empty()) {
      int v = q.front();
      q.pop_front();
      for (int p = 0; p < d; ++p)
        if (g(p, v) && !anc_z[p]) {
          anc_z[p] = 1;
          q.push_back(p);
        }
    }
  }

  auto in_z = [&](int v) { return z.count(v) > 0; };
  std::vector<char> seen_up(d, 0), seen_down(d, 0);
  std::deque<std::pair<int, bool>> q;  // (node, entered_downward)
  q.emplace_back(i, false);            // leaving the source counts as "up"
  seen_up[i] = 1;
  while (!q.empty()) {
    auto [v, down] = q.front();
    q.pop_front();
    if (v == j && v != i) return false;
    if (!down) {
      if (in_z(v)) continue;
      for (int p = 0; p < d; ++p)
        if (g(p, v) && !seen_up[p]) {
          seen_up[p] = 1;
          q.emplace_back(p, false);
        }
      for (int c = 0; c < d; ++c)
        if (g(v, c) && !seen_down[c]) {
          seen_down[c] = 1;
          q.emplace_back(c, true);
        }
    } else {
      if (!in_z(v)) {
        for (int c = 0; c < d; ++c)
          if (g(v, c) && !seen_down[c]) {
            seen_down[c] = 1;
            q.emplace_back(c, true);
          }
      }
      if (anc_z[v]) {  // collider opened by z or a descendant in z
        for (int p = 0; p < d; ++p)
          if (g(p, v) && !seen_up[p]) {
            seen_up[p] = 1;
            q.emplace_back(p, false);
          }
      }
    }
  }
  return true;
}

}  // namespace

EdgeDiff edge_diff(const BinaryMatrix& truth, const BinaryMatrix& estimate) {
  check_pair(truth, estimate);
  int d = static_cast<int>(truth.rows());
  EdgeDiff diff;
  for (int a = 0; a < d; ++a) {
    for (int b = a + 1; b < d; ++b) {
      int tab = truth(a, b), tba = truth(b, a);
      int eab = estimate(a, b), eba = estimate(b, a);
      if (tab == eab && tba == eba) {
        diff.correct += tab + tba;
        continue;
      }
      if (tab + tba == 1 && eab + eba == 1) {
        diff.reversed += 1;
        continue;
      }
      if (tab && !eab) diff.missing += 1;
      if (tba && !eba) diff.missing += 1;
      if (eab && !tab) diff.extra += 1;
      if (eba && !tba) diff.extra += 1;
      diff.correct += (tab && eab) + (tba && eba);
    }
  }
  return diff;
}

int structural_hamming(const BinaryMatrix& truth, const BinaryMatrix& estimate) {
  check_pair(truth, estimate);
  // one unit per disagreeing unordered pair, so a reversal costs 1 and an
  // estimated 2-cycle over an empty pair also costs 1, not 2
  int d = static_cast<int>(truth.rows());
  int shd = 0;
  for (int a = 0; a < d; ++a)
    for (int b = a + 1; b < d; ++b)
      if (truth(a, b) != estimate(a, b) || truth(b, a) != estimate(b, a)) shd++;
  return shd;
}

TprFdr tpr_fdr(const BinaryMatrix& truth, const BinaryMatrix& estimate) {
  check_pair(truth, estimate);
  int d = static_cast<int>(truth.rows());
  int correct = 0, truth_edges = 0, predicted = 0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      truth_edges += truth(i, j);
      predicted += estimate(i, j);
      correct += truth(i, j) && estimate(i, j);
    }
  double tpr = truth_edges == 0 ? 1.0 : static_cast<double>(correct) / truth_edges;
  double fdr = static_cast<double>(predicted - correct) / std::max(predicted, 1);
  return {tpr, fdr};
}

bool d_separated(const BinaryMatrix& g, int i, int j, const std::set<int>& z) {
  if (g.rows() != g.cols()) throw std::invalid_argument("adjacency must be square");
  int d = static_cast<int>(g.rows());
  if (i < 0 || i >= d || j < 0 || j >= d || i == j)
    throw std::invalid_argument("need two distinct in-range nodes");
  if (z.count(i) || z.count(j))
    throw std::invalid_argument("conditioning set must exclude the endpoints");
  for (int v : z)
    if (v < 0 || v >= d) throw std::invalid_argument("conditioning node out of range");
  if (!is_acyclic(g)) throw std::invalid_argument("graph must be acyclic");
  return dsep_nocheck(g, i, j, z);
}

int sid(const BinaryMatrix& truth, const BinaryMatrix& estimate) {
  check_pair(truth, estimate);
  if (!is_acyclic(truth)) throw std::invalid_argument("truth graph must be acyclic");
  if (!is_acyclic(estimate)) throw CyclicEstimateError("estimate graph is cyclic");

  int d = static_cast<int>(truth.rows());
  auto desc = descendant_table(truth);
  int miscalculated = 0;
  for (int i = 0; i < d; ++i) {
    std::set<int> z;
    for (int p = 0; p < d; ++p)
      if (estimate(p, i)) z.insert(p);
    for (int j = 0; j < d; ++j) {
      if (j == i) continue;
      if (z.count(j)) {
        // adjusting on the response returns its marginal; only right when
        // the truth carries no causal path i -> j
        if (desc[i][j]) miscalculated++;
        continue;
      }
      // nodes on proper causal paths i -> j, and everything below them
      std::vector<char> forbidden(d, 0);
      bool any_causal = false;
      for (int w = 0; w < d; ++w) {
        if (w == i || !desc[i][w] || !desc[w][j]) continue;
        any_causal = true;
        for (int u = 0; u < d; ++u)
          if (desc[w][u]) forbidden[u] = 1;
      }
      bool bad = false;
      for (int v : z)
        if (forbidden[v]) bad = true;
      if (bad) {
        miscalculated++;
        continue;
      }
      BinaryMatrix trimmed = truth;
      if (any_causal)
        for (int c = 0; c < d; ++c)
          if (trimmed(i, c) && desc[c][j]) trimmed(i, c) = 0;  // first causal hop
      if (!dsep_nocheck(trimmed, i, j, z)) miscalculated++;
    }
  }
  return miscalculated;
}

MetricsReport evaluate_graphs(const BinaryMatrix& truth, const BinaryMatrix& estimate) {
  if (!is_acyclic(truth)) throw std::invalid_argument("truth graph must be acyclic");
  MetricsReport report;
  EdgeDiff diff = edge_diff(truth, estimate);
  report.shd = diff.reversed + diff.missing + diff.extra;
  TprFdr rates = tpr_fdr(truth, estimate);
  report.tpr = rates.tpr;
  report.fdr = rates.fdr;
  report.n_predicted_edges = estimate.sum();
  report.n_correct_edges = diff.correct;
  if (is_acyclic(estimate)) report.sid = sid(truth, estimate);
  return report;
}

TrialAggregate aggregate_trials(const std::vector<MetricsReport>& reports) {
  if (reports.empty()) throw std::invalid_argument("need at least one report");
  auto stat = [](const std::vector<double>& xs) {
    MeanStd ms;
    if (xs.empty()) return ms;
    double sum = 0;
    for (double x : xs) sum += x;
    ms.mean = sum / xs.size();
    bool constant = true;
    for (double x : xs)
      if (x != xs.front()) constant = false;
    if (constant) return ms;  // avoids 1e-16 stds from mean rounding
    // population form (n denominator): the convention benchmark tables in
    // this area are produced with, and what the worked examples pin
    double ss = 0;
    for (double x : xs) ss += (x - ms.mean) * (x - ms.mean);
    ms.std = std::sqrt(ss / xs.size());
    return ms;
  };
  std::vector<double> tprs, fdrs, shds, sids;
  for (const auto& r : reports) {
    tprs.push_back(r.tpr);
    fdrs.push_back(r.fdr);
    shds.push_back(r.shd);
    if (r.sid) sids.push_back(*r.sid);
  }
  TrialAggregate agg;
  agg.tpr = stat(tprs);
  agg.fdr = stat(fdrs);
  agg.shd = stat(shds);
  agg.sid = stat(sids);
  agg.count = static_cast<int>(reports.size());
  agg.sid_count = static_cast<int>(sids.size());
  return agg;
}

}  // namespace casper
