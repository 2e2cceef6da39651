#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

#include "ghsom/dataset.hpp"
#include "ghsom/error.hpp"

using namespace ghsom;

namespace {

std::string message_of(auto&& fn, ErrorCode want) {
  try {
    fn();
  } catch (const Error& e) {
    CHECK(e.code() == want);
    return e.what();
  }
  FAIL("expected an error");
  return {};
}

CsvOptions labelled() {
  CsvOptions o;
  o.label_column = "y";
  return o;
}

}  // namespace

TEST_CASE("minmax maps every column onto [0,1]") {
  const Dataset ds = parse_csv("a,b,y\n1,10,p\n3,30,q\n2,20,p\n", labelled());
  CHECK(ds.size() == 3);
  CHECK(ds.dim() == 2);
  CHECK(ds.feature_names == std::vector<std::string>{"a", "b"});
  CHECK(ds.label_name == "y");
  CHECK(ds.labels == std::vector<std::string>{"p", "q", "p"});
  CHECK(ds.features(0, 0) == 0.0);
  CHECK(ds.features(1, 0) == 1.0);
  CHECK(ds.features(2, 1) == 0.5);
  CHECK(ds.scales[1] == FeatureScale{10.0, 20.0});
}

TEST_CASE("zscore uses the mean and sample deviation") {
  CsvOptions o = labelled();
  o.normalization = Normalization::zscore;
  const Dataset ds = parse_csv("a,y\n1,p\n2,p\n3,p\n", o);
  CHECK(ds.scales[0].offset == 2.0);
  CHECK(ds.scales[0].scale == doctest::Approx(1.0));
  CHECK(ds.features(0, 0) == doctest::Approx(-1.0));
}

TEST_CASE("normalize and denormalize round trip") {
  CsvOptions o;
  o.label_column = "class";
  const Dataset ds = load_csv(std::string(GHSOM_DATA_DIR) + "/iris.csv", o);
  for (std::size_t i = 0; i < ds.size(); i += 7) {
    const Vector back = ds.denormalize(ds.features.row(i));
    for (std::size_t j = 0; j < ds.dim(); ++j) CHECK(std::abs(back[j] - ds.raw(i, j)) < 1e-12);
    const Vector fwd = ds.normalize(ds.raw.row(i));
    for (std::size_t j = 0; j < ds.dim(); ++j) CHECK(std::abs(fwd[j] - ds.features(i, j)) < 1e-15);
  }
}

TEST_CASE("label column by index, no header, other delimiters") {
  CsvOptions o;
  o.header = false;
  o.delimiter = ';';
  o.label_column = "0";
  const Dataset ds = parse_csv("a;1;2\nb;3;5\n", o);
  CHECK(ds.dim() == 2);
  CHECK(ds.labels == std::vector<std::string>{"a", "b"});
  CHECK(ds.feature_names == std::vector<std::string>{"x1", "x2"});  // named by source column;
}

TEST_CASE("quotes, BOM, CRLF and blank lines are tolerated") {
  const Dataset ds = parse_csv("\xEF\xBB\xBF\"a\",\"y\"\r\n1,\"p\"\r\n\r\n2,q\r\n", labelled());
  CHECK(ds.size() == 2);
  CHECK(ds.labels == std::vector<std::string>{"p", "q"});
}

TEST_CASE("rows with an empty cell are skipped and counted") {
  const Dataset ds = parse_csv("a,b,y\n1,2,p\n,3,q\n4,5,p\n", labelled());
  CHECK(ds.size() == 2);
  CHECK(ds.rejected_rows == 1);
}

TEST_CASE("malformed input names the line and column") {
  const std::string w = message_of([] { parse_csv("a,b,y\n1,2,p\n1,2\n", labelled()); }, ErrorCode::data);
  CHECK(w.find("line 3") != std::string::npos);
  CHECK(w.find("expected 3 cells, found 2") != std::string::npos);

  const std::string n = message_of([] { parse_csv("a,b,y\n1,zz,p\n", labelled()); }, ErrorCode::data);
  CHECK(n.find("line 2") != std::string::npos);
  CHECK(n.find("'b'") != std::string::npos);

  const std::string c = message_of([] { parse_csv("a,b\n1,2\n1,3\n", CsvOptions{}); }, ErrorCode::data);
  CHECK(c.find("'a'") != std::string::npos);
  CHECK(c.find("constant") != std::string::npos);

  message_of([] { parse_csv("", CsvOptions{}); }, ErrorCode::data);
  message_of([] { parse_csv("a,b\n", CsvOptions{}); }, ErrorCode::data);
  message_of([] { parse_csv("a,b\n1,2\n2,3\n", CsvOptions{.label_column = "nope"}); }, ErrorCode::data);
  message_of([] { load_csv("/nonexistent/file.csv", CsvOptions{}); }, ErrorCode::io);
  message_of([] { parse_normalization("log"); }, ErrorCode::invalid_argument);
}

TEST_CASE("non-finite numbers are rejected") {
  message_of([] { parse_csv("a,b\n1,inf\n2,3\n", CsvOptions{}); }, ErrorCode::data);
  message_of([] { parse_csv("a,b\n1,nan\n2,3\n", CsvOptions{}); }, ErrorCode::data);
}

TEST_CASE("bundled iris matches the published summary statistics") {
  CsvOptions o;
  o.label_column = "class";
  const Dataset ds = load_csv(std::string(GHSOM_DATA_DIR) + "/iris.csv", o);
  REQUIRE(ds.size() == 150);
  REQUIRE(ds.dim() == 4);
  struct Row { double min, max, mean, sd; };
  const Row published[] = {{4.3, 7.9, 5.84, 0.83}, {2.0, 4.4, 3.05, 0.43}, {1.0, 6.9, 3.76, 1.76}, {0.1, 2.5, 1.20, 0.76}};
  for (std::size_t j = 0; j < 4; ++j) {
    double lo = 1e300, hi = -1e300, sum = 0.0;
    for (std::size_t i = 0; i < 150; ++i) {
      lo = std::min(lo, ds.raw(i, j));
      hi = std::max(hi, ds.raw(i, j));
      sum += ds.raw(i, j);
    }
    const double mean = sum / 150.0;
    double ss = 0.0;
    for (std::size_t i = 0; i < 150; ++i) ss += (ds.raw(i, j) - mean) * (ds.raw(i, j) - mean);
    CAPTURE(j);
    CHECK(lo == doctest::Approx(published[j].min));
    CHECK(hi == doctest::Approx(published[j].max));
    // Table values are two-decimal; the width and petal rows are truncated rather than rounded.
    const double tol = j == 0 ? 0.005 : 0.01;
    CHECK(std::abs(mean - published[j].mean) <= tol);
    CHECK(std::abs(std::sqrt(ss / 149.0) - published[j].sd) <= tol);
  }
  std::map<std::string, int> counts;
  for (const auto& l : ds.labels) ++counts[l];
  CHECK(counts.size() == 3);
  for (const auto& [name, c] : counts) CHECK(c == 50);
}
