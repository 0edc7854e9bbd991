#pragma once
#include <stdexcept>
#include <string>
#include <vector>

#include "casper/graph.hpp"
#include "casper/sem.hpp"

namespace casper {

struct ParseError : std::runtime_error {
  int line;  // 1-based, header included
  ParseError(const std::string& msg, int line_no)
      : std::runtime_error(msg + " (line " + std::to_string(line_no) + ")"), line(line_no) {}
};

std::string format_double(double v);  // round-trip precision

// adjacency files are headerless d x d grids
void write_weighted_csv(const std::string& path, const Matrix& w);
void write_binary_csv(const std::string& path, const BinaryMatrix& g);
Matrix read_weighted_csv(const std::string& path);
BinaryMatrix read_binary_csv(const std::string& path);

// dataset files carry one header row of names, then n numeric rows
void write_dataset_csv(const std::string& path, const Dataset& data);
Dataset read_dataset_csv(const std::string& path);

// dataset ingestion for real data; z-scores each column unless told not to
Dataset ingest_csv(const std::string& path, bool standardize);

}  // namespace casper
