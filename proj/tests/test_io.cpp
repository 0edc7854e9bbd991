#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "casper/io.hpp"

using namespace casper;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("casper_io_" + std::to_string(std::random_device{}()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  out << text;
}

}  // namespace

TEST_CASE("weighted adjacency round trip is bit exact") {
  TempDir tmp;
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-3, 3);
  Matrix w(4, 4);
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) w(i, j) = u(rng);
  w(0, 0) = 1e-300;
  w(1, 1) = 0.1 + 0.2;  // not representable exactly, must survive the trip
  w(2, 2) = -1.0 / 3.0;
  write_weighted_csv(tmp.file("w.csv"), w);
  Matrix back = read_weighted_csv(tmp.file("w.csv"));
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) CHECK(back(i, j) == w(i, j));
}

TEST_CASE("binary adjacency round trip and validation") {
  TempDir tmp;
  BinaryMatrix g = BinaryMatrix::Zero(3, 3);
  g(0, 1) = 1;
  g(1, 2) = 1;
  write_binary_csv(tmp.file("g.csv"), g);
  BinaryMatrix back = read_binary_csv(tmp.file("g.csv"));
  CHECK((back - g).cwiseAbs().sum() == 0);

  write_text(tmp.file("frac.csv"), "0,0.5\n0,0\n");
  CHECK_THROWS_AS(read_binary_csv(tmp.file("frac.csv")), ParseError);
}

TEST_CASE("non-square adjacency rejected") {
  TempDir tmp;
  write_text(tmp.file("rect.csv"), "0,1,0\n0,0,1\n");
  CHECK_THROWS_AS(read_weighted_csv(tmp.file("rect.csv")), ParseError);
}

TEST_CASE("dataset round trip keeps names and values") {
  TempDir tmp;
  Dataset data;
  data.values = Matrix(2, 3);
  data.values << 1.5, -2.25, 3.0000000001, 0.0, 1e-7, -9.25;
  data.names = {"alpha", "beta", "gamma"};
  write_dataset_csv(tmp.file("d.csv"), data);
  Dataset back = read_dataset_csv(tmp.file("d.csv"));
  CHECK(back.names == data.names);
  CHECK(back.n() == 2);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 3; ++j) CHECK(back.values(i, j) == data.values(i, j));
}

TEST_CASE("parse errors carry line numbers") {
  TempDir tmp;
  write_text(tmp.file("bad3.csv"), "a,b\n1,2\n3,oops\n");
  try {
    read_dataset_csv(tmp.file("bad3.csv"));
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
    CHECK(std::string(e.what()).find("line 3") != std::string::npos);
  }

  write_text(tmp.file("short.csv"), "a,b\n1,2\n3\n");
  try {
    read_dataset_csv(tmp.file("short.csv"));
    CHECK(false);
  } catch (const ParseError& e) {
    CHECK(e.line == 3);
  }

  write_text(tmp.file("dup.csv"), "a,a\n1,2\n");
  CHECK_THROWS_AS(read_dataset_csv(tmp.file("dup.csv")), ParseError);
  write_text(tmp.file("empty.csv"), "");
  CHECK_THROWS_AS(read_dataset_csv(tmp.file("empty.csv")), ParseError);
  write_text(tmp.file("noheaderonly.csv"), "a,b\n");
  CHECK_THROWS_AS(read_dataset_csv(tmp.file("noheaderonly.csv")), ParseError);
}

TEST_CASE("crlf endings parse fine") {
  TempDir tmp;
  write_text(tmp.file("crlf.csv"), "a,b\r\n1,2\r\n3,4\r\n");
  Dataset d = read_dataset_csv(tmp.file("crlf.csv"));
  CHECK(d.n() == 2);
  CHECK(d.values(1, 1) == 4.0);
}

TEST_CASE("ingest standardizes by default semantics") {
  TempDir tmp;
  write_text(tmp.file("raw.csv"), "u,v\n1,10\n2,20\n3,30\n4,40\n");
  Dataset z = ingest_csv(tmp.file("raw.csv"), true);
  for (int j = 0; j < 2; ++j) {
    CHECK(z.values.col(j).mean() == doctest::Approx(0.0).epsilon(1e-12));
    double var = z.values.col(j).array().square().sum() / z.n();
    CHECK(var == doctest::Approx(1.0).epsilon(1e-12));
  }
  Dataset raw = ingest_csv(tmp.file("raw.csv"), false);
  CHECK(raw.values(0, 1) == 10.0);

  write_text(tmp.file("const.csv"), "u,v\n1,5\n2,5\n");
  CHECK_THROWS_AS(ingest_csv(tmp.file("const.csv"), true), std::invalid_argument);
  CHECK(ingest_csv(tmp.file("const.csv"), false).n() == 2);
}

TEST_CASE("missing file reports cleanly") {
  CHECK_THROWS_AS(read_dataset_csv("/nonexistent/nope.csv"), std::runtime_error);
}
