#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <limits>
#include <sstream>

#include "spice/csv.hpp"

using namespace spice;
using namespace spice::csv;

TEST_CASE("header is detected") {
  std::istringstream in("a,b,y\n1,2,3\n\n4,5,6\n");
  Reader reader(in, "mem");
  std::vector<double> row;
  REQUIRE(reader.next(row));
  CHECK(row == std::vector<double>{1, 2, 3});
  REQUIRE(reader.header());
  CHECK(reader.header()->at(2) == "y");
  REQUIRE(reader.next(row));
  CHECK(row == std::vector<double>{4, 5, 6});
  CHECK(reader.line() == 4);
  CHECK_FALSE(reader.next(row));
}

TEST_CASE("headerless input") {
  std::istringstream in(" 1.5 , -2e3\r\n+3,4\n");
  Reader reader(in, "mem");
  std::vector<double> row;
  REQUIRE(reader.next(row));
  CHECK(row == std::vector<double>{1.5, -2000.0});
  CHECK_FALSE(reader.header());
  REQUIRE(reader.next(row));
  CHECK(row[0] == 3.0);
}

TEST_CASE("errors name the line") {
  std::vector<double> row;
  {
    std::istringstream in("x,y\n1,2\n3,oops\n");
    Reader reader(in, "data.csv");
    reader.next(row);
    try {
      reader.next(row);
      FAIL("expected an error");
    } catch (const DataError& e) {
      CHECK(std::string(e.what()) == "data.csv: line 3: non-numeric field");
    }
  }
  {
    std::istringstream in("1,2\n3\n");
    Reader reader(in, "d");
    reader.next(row);
    CHECK_THROWS_WITH_AS(reader.next(row), "d: line 2: expected 2 fields, found 1", DataError);
  }
  {
    std::istringstream in("1,inf\n");
    Reader reader(in, "d");
    CHECK_THROWS_WITH_AS(reader.next(row), "d: line 1: non-finite value", DataError);
  }
}

TEST_CASE("formatting round trips") {
  for (double v : {0.1, -1e-300, 123456789.125, 1.0 / 3.0}) CHECK(std::stod(format_double(v)) == v);
  CHECK(format_double(std::numeric_limits<double>::infinity()) == "inf");
  std::ostringstream out;
  write_header(out, {"a", "b"});
  const std::vector<double> values{0.5, -2.0};
  write_row(out, values);
  CHECK(out.str() == "a,b\n0.5,-2\n");
}

TEST_CASE("read_xy") {
  const auto path = std::filesystem::temp_directory_path() / "spice_csv_test.csv";
  {
    std::ofstream f(path);
    f << "x1,x2,y\n1,2,3\n4,5,6\n";
  }
  const Table t = read_xy(path.string());
  CHECK(t.X.rows() == 2);
  CHECK(t.X(1, 1) == 5.0);
  CHECK(t.y[1] == 6.0);
  {
    std::ofstream f(path);
    f << "x1,y\n";
  }
  CHECK_THROWS_WITH_AS(read_xy(path.string()), (path.string() + ": no rows").c_str(), DataError);
  std::filesystem::remove(path);
}
