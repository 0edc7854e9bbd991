#pragma once
#include <optional>
#include <set>
#include <stdexcept>
#include <vector>

#include "casper/graph.hpp"

namespace casper {

struct CyclicEstimateError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

struct EdgeDiff {
  int correct = 0;
  int reversed = 0;
  int missing = 0;
  int extra = 0;
};

struct MetricsReport {
  double tpr = 0.0;
  double fdr = 0.0;
  int shd = 0;
  std::optional<int> sid;  // absent when the estimate is cyclic
  int n_predicted_edges = 0;
  int n_correct_edges = 0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
};

struct TrialAggregate {
  MeanStd tpr, fdr, shd, sid;
  int count = 0;      // reports aggregated
  int sid_count = 0;  // reports that carried a sid value
};

EdgeDiff edge_diff(const BinaryMatrix& truth, const BinaryMatrix& estimate);
int structural_hamming(const BinaryMatrix& truth, const BinaryMatrix& estimate);

struct TprFdr {
  double tpr;
  double fdr;
};
TprFdr tpr_fdr(const BinaryMatrix& truth, const BinaryMatrix& estimate);

bool d_separated(const BinaryMatrix& g, int i, int j, const std::set<int>& z);

int sid(const BinaryMatrix& truth, const BinaryMatrix& estimate);

// all four metrics; sid left empty (not an error) when the estimate is cyclic
MetricsReport evaluate_graphs(const BinaryMatrix& truth, const BinaryMatrix& estimate);

TrialAggregate aggregate_trials(const std::vector<MetricsReport>& reports);

}  // namespace casper
