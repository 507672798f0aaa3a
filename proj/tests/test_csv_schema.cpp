#include <doctest.h>

#include <sstream>

#include "gactgan/error.hpp"
#include "gactgan/schema.hpp"
#include "gactgan/table.hpp"

using namespace gactgan;

namespace {
Table parse(const std::string& text) {
  std::istringstream in(text);
  return parse_csv(in);
}
}  // namespace

TEST_CASE("csv parses quoted fields and round-trips") {
  auto t = parse("a,b\n\"x, y\",1\n\"say \"\"hi\"\"\",2\n");
  REQUIRE(t.num_rows() == 2);
  CHECK(t.rows[0][0] == "x, y");
  CHECK(t.rows[1][0] == "say \"hi\"");
  std::ostringstream out;
  write_csv(t, out);
  auto back = parse(out.str());
  CHECK(back.header == t.header);
  CHECK(back.rows == t.rows);
}

TEST_CASE("csv handles CRLF and a missing final newline") {
  auto t = parse("a,b\r\n1,2\r\n3,4");
  REQUIRE(t.num_rows() == 2);
  CHECK(t.rows[1][1] == "4");
}

TEST_CASE("ragged rows and empty input are data errors") {
  CHECK_THROWS_AS(parse("a,b\n1,2,3\n"), DataError);
  CHECK_THROWS_AS(parse(""), DataError);
  CHECK_THROWS_WITH_AS(parse("a,b\n1,2\n3\n"), doctest::Contains("row 2"), DataError);
}

TEST_CASE("schema inference: numeric columns are continuous, labels sorted") {
  auto t = parse("age,job\n30,b\n41.5,a\n22,c\n30,a\n");
  auto s = infer_schema(t);
  REQUIRE(s.size() == 2);
  CHECK(s[0].kind == ColumnKind::continuous);
  CHECK(s[1].kind == ColumnKind::categorical);
  CHECK(s[1].categories == std::vector<std::string>{"a", "b", "c"});
}

TEST_CASE("schema overrides") {
  auto t = parse("code,job\n1,x\n2,y\n1,y\n");
  auto s = infer_schema(t, {{"code", ColumnKind::categorical}});
  CHECK(s[0].kind == ColumnKind::categorical);
  CHECK(s[0].categories == std::vector<std::string>{"1", "2"});
  CHECK_THROWS_AS(infer_schema(t, {{"job", ColumnKind::continuous}}), DataError);
}

TEST_CASE("duplicate headers are rejected") {
  auto t = parse("a,a\n1,2\n");
  CHECK_THROWS_AS(infer_schema(t), DataError);
}

TEST_CASE("schema JSON round-trip and validation") {
  auto t = parse("x,y\n1.5,p\n2,q\n");
  auto s = infer_schema(t);
  auto back = schema_from_json(schema_to_json(s));
  REQUIRE(back.size() == 2);
  CHECK(back[1].categories == s[1].categories);
  CHECK(back[0].kind == ColumnKind::continuous);

  Schema bad = s;
  bad[1].categories = {"p", "p"};
  CHECK_THROWS_AS(validate_schema(bad), DataError);
  check_table_matches(t, s);
  auto other = parse("y,x\np,1\n");
  CHECK_THROWS_AS(check_table_matches(other, s), DataError);
}

TEST_CASE("number parsing") {
  CHECK(parse_number("1e3") == 1000.0);
  CHECK(parse_number("-2.5") == -2.5);
  CHECK_FALSE(parse_number("12abc"));
  CHECK_FALSE(parse_number("inf"));
  CHECK_FALSE(parse_number(""));
  CHECK(is_missing("NA"));
  CHECK(is_missing(""));
  CHECK_FALSE(is_missing("0"));
}
