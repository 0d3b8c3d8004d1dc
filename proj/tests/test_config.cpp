#include <cmath>
#include <cstdlib>

#include "doctest.h"
#include "pdflow/config.hpp"
#include "pdflow/errors.hpp"

using namespace pdflow;
using config::Document;

TEST_CASE("document parses key/value lines with comments") {
  const Document doc = Document::parse(
      "# header comment\n"
      "alpha = 3.0\n"
      "x0 = 1 -1 1   # inline comment\n"
      "\n"
      "oracle.f_star = 2\n");
  CHECK(config::get_double(doc, "alpha") == 3.0);
  const Vector x0 = config::get_vector(doc, "x0");
  REQUIRE(x0.size() == 3);
  CHECK(x0(1) == -1.0);
  CHECK(config::get_double(doc, "oracle.f_star") == 2.0);
  CHECK_FALSE(doc.has("missing"));
}

TEST_CASE("document rejects malformed input") {
  CHECK_THROWS_AS(Document::parse("no equals sign"), ConfigInvalid);
  CHECK_THROWS_AS(Document::parse("a = 1\na = 2\n"), ConfigInvalid);
  CHECK_THROWS_AS(Document::parse(" = 1\n"), ConfigInvalid);
  const Document doc = Document::parse("a = abc\n");
  CHECK_THROWS_AS(config::get_double(doc, "a"), ConfigInvalid);
  CHECK_THROWS_AS(config::get_double(doc, "b"), ConfigInvalid);
}

TEST_CASE("set replaces in place and dump round-trips") {
  Document doc = Document::parse("a = 1\nb = 2\n");
  doc.set("a", "7");
  doc.set("c", "3");
  const Document again = Document::parse(doc.dump());
  CHECK(config::get_double(again, "a") == 7.0);
  CHECK(config::get_double(again, "c") == 3.0);
  CHECK(again.dump() == doc.dump());
}

TEST_CASE("format_double survives a parse round trip") {
  for (double v : {0.1, 1.0 / 3.0, 1e-300, 6.02e23, -0.0, 12345.6789}) {
    const std::string s = config::format_double(v);
    CHECK(std::strtod(s.c_str(), nullptr) == v);
  }
}

TEST_CASE("fnv1a hash is deterministic and content sensitive") {
  CHECK(config::fnv1a_hex("abc") == config::fnv1a_hex("abc"));
  CHECK(config::fnv1a_hex("abc") != config::fnv1a_hex("abd"));
  CHECK(config::fnv1a_hex("").size() == 16);
}
