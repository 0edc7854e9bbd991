#include "casper/io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

namespace casper {

namespace {

std::vector<std::string> split_fields(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : line) {
    if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur.push_back(ch);
    }
  }
  out.push_back(cur);
  return out;
}

double parse_number(const std::string& field, int line_no) {
  if (field.empty()) throw ParseError("empty numeric field", line_no);
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(field.c_str(), &end);
  if (end != field.c_str() + field.size() || errno == ERANGE)
    throw ParseError("bad numeric field '" + field + "'", line_no);
  if (!std::isfinite(v)) throw ParseError("non-finite value '" + field + "'", line_no);
  return v;
}

std::vector<std::vector<double>> read_numeric_rows(std::istream& in, int first_line,
                                                   size_t expect_cols) {
  std::vector<std::vector<double>> rows;
  std::string line;
  int line_no = first_line - 1;
  while (std::getline(in, line)) {
    line_no++;
    if (line.empty() || line == "\r") continue;
    auto fields = split_fields(line);
    if (expect_cols && fields.size() != expect_cols)
      throw ParseError("expected " + std::to_string(expect_cols) + " fields, got " +
                           std::to_string(fields.size()),
                       line_no);
    expect_cols = fields.size();
    std::vector<double> row;
    row.reserve(fields.size());
    for (const auto& f : fields) row.push_back(parse_number(f, line_no));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::ifstream open_or_throw(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  return in;
}

}  // namespace

std::string format_double(double v) {
  // shortest representation that still parses back to the same bits
  char buf[40];
  auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void write_weighted_csv(const std::string& path, const Matrix& w) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int i = 0; i < w.rows(); ++i) {
    for (int j = 0; j < w.cols(); ++j) {
      if (j) out << ',';
      out << format_double(w(i, j));
    }
    out << '\n';
  }
}

void write_binary_csv(const std::string& path, const BinaryMatrix& g) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int i = 0; i < g.rows(); ++i) {
    for (int j = 0; j < g.cols(); ++j) {
      if (j) out << ',';
      out << g(i, j);
    }
    out << '\n';
  }
}

Matrix read_weighted_csv(const std::string& path) {
  auto in = open_or_throw(path);
  auto rows = read_numeric_rows(in, 1, 0);
  if (rows.empty()) throw ParseError("empty adjacency file", 1);
  size_t d = rows.size();
  if (rows[0].size() != d)
    throw ParseError("adjacency must be square, got " + std::to_string(rows.size()) + "x" +
                         std::to_string(rows[0].size()),
                     1);
  Matrix w(d, d);
  for (size_t i = 0; i < d; ++i)
    for (size_t j = 0; j < d; ++j) w(i, j) = rows[i][j];
  return w;
}

BinaryMatrix read_binary_csv(const std::string& path) {
  Matrix w = read_weighted_csv(path);
  BinaryMatrix g(w.rows(), w.cols());
  for (int i = 0; i < w.rows(); ++i)
    for (int j = 0; j < w.cols(); ++j) {
      if (w(i, j) != 0.0 && w(i, j) != 1.0)
        throw ParseError("binary adjacency entry must be 0 or 1", i + 1);
      g(i, j) = static_cast<int>(w(i, j));
    }
  return g;
}

void write_dataset_csv(const std::string& path, const Dataset& data) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (int j = 0; j < data.d(); ++j) {
    if (j) out << ',';
    out << data.names[j];
  }
  out << '\n';
  for (int i = 0; i < data.n(); ++i) {
    for (int j = 0; j < data.d(); ++j) {
      if (j) out << ',';
      out << format_double(data.values(i, j));
    }
    out << '\n';
  }
}

Dataset read_dataset_csv(const std::string& path) {
  auto in = open_or_throw(path);
  std::string header;
  if (!std::getline(in, header)) throw ParseError("missing header row", 1);
  auto names = split_fields(header);
  if (names.empty() || names[0].empty()) throw ParseError("bad header row", 1);
  for (size_t a = 0; a < names.size(); ++a)
    for (size_t b = a + 1; b < names.size(); ++b)
      if (names[a] == names[b]) throw ParseError("duplicate column name '" + names[a] + "'", 1);

  auto rows = read_numeric_rows(in, 2, names.size());
  if (rows.empty()) throw ParseError("dataset has no sample rows", 2);
  Matrix values(rows.size(), names.size());
  for (size_t i = 0; i < rows.size(); ++i)
    for (size_t j = 0; j < names.size(); ++j) values(i, j) = rows[i][j];
  return {values, names};
}

Dataset ingest_csv(const std::string& path, bool standardize) {
  Dataset data = read_dataset_csv(path);
  if (!standardize) return data;
  for (int j = 0; j < data.d(); ++j) {
    double mean = data.values.col(j).mean();
    double var = (data.values.col(j).array() - mean).square().sum() / data.n();
    if (var <= 0.0)
      throw std::invalid_argument("column '" + data.names[j] + "' is constant, cannot standardize");
    data.values.col(j) = (data.values.col(j).array() - mean) / std::sqrt(var);
  }
  return data;
}

}  // namespace casper
