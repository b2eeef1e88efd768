#include "doctest.h"
#include "sarch/text.hpp"

using namespace sarch::text;

TEST_CASE("tokenize lowercases runs of word characters") {
  CHECK(tokenize("Workmen's quarters, Mohenjo-daro!") ==
        std::vector<std::string>{"workmen", "s", "quarters", "mohenjo", "daro"});
  CHECK(tokenize("  ").empty());
  CHECK(tokenize("IIB vs. IIA 1948") == std::vector<std::string>{"iib", "vs", "iia", "1948"});
  CHECK(tokenize("naïve") == std::vector<std::string>{"naïve"});
}

TEST_CASE("trim and split") {
  CHECK(trim("  a b \t\n") == "a b");
  CHECK(split_whitespace(" a  b\tc ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(join({"a", "b", "c"}, ", ") == "a, b, c");
  CHECK(to_lower("HaRaPPa") == "harappa");
}
