#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <set>
#include <sstream>

#include "driftlab/csv.hpp"
#include "driftlab/error.hpp"
#include "driftlab/keyvalue.hpp"
#include "driftlab/label.hpp"
#include "driftlab/rng.hpp"
#include "driftlab/text.hpp"
#include "driftlab/time.hpp"

using namespace driftlab;

TEST_CASE("labels map to -1, 0, +1 and round-trip through their names") {
  CHECK(numeric_value(Label::negative) == -1);
  CHECK(numeric_value(Label::neutral) == 0);
  CHECK(numeric_value(Label::positive) == 1);
  for (Label l : kAllLabels) {
    CHECK(parse_label(to_string(l)) == l);
    CHECK(label_at(index_of(l)) == l);
  }
  CHECK_FALSE(parse_label("Positive").has_value());
  CHECK(Label::negative < Label::neutral);
  CHECK(Label::neutral < Label::positive);
}

TEST_CASE("timestamps require a zone and normalize to UTC") {
  const auto z = parse_timestamp("2020-03-01T12:30:00Z");
  REQUIRE(z);
  CHECK(format_timestamp(*z) == "2020-03-01T12:30:00Z");

  const auto offset = parse_timestamp("2020-03-01T14:30:00+02:00");
  REQUIRE(offset);
  CHECK(*offset == *z);
  CHECK(parse_timestamp("2020-03-01T07:00:00-0530") == *z);
  CHECK(parse_timestamp("2020-03-01 12:30:00.999Z") == *z);

  CHECK_FALSE(parse_timestamp("2020-03-01T12:30:00").has_value());
  CHECK_FALSE(parse_timestamp("2020-02-30T00:00:00Z").has_value());
  CHECK_FALSE(parse_timestamp("2020-03-01T25:00:00Z").has_value());
  CHECK_FALSE(parse_timestamp("yesterday").has_value());
  CHECK_FALSE(parse_timestamp("").has_value());
}

TEST_CASE("iso week starts on Monday") {
  // 2021-01-03 is a Sunday, so its ISO week began on 2020-12-28.
  CHECK(format_date(iso_week_start(*parse_timestamp("2021-01-03T23:59:59Z"))) == "2020-12-28");
  CHECK(format_date(iso_week_start(*parse_timestamp("2021-01-04T00:00:00Z"))) == "2021-01-04");
  CHECK(format_date(day_of(*parse_timestamp("2021-01-04T13:00:00+14:00"))) == "2021-01-03");
}

TEST_CASE("seed mixing is deterministic and separates coordinates and domains") {
  CHECK(mix_seed(1, SeedDomain::split, 2, 3) == mix_seed(1, SeedDomain::split, 2, 3));
  std::set<std::uint64_t> seen;
  for (std::uint64_t a = 0; a < 20; ++a) {
    for (std::uint64_t b = 0; b < 20; ++b) seen.insert(mix_seed(7, SeedDomain::split, a, b));
  }
  CHECK(seen.size() == 400);
  CHECK(mix_seed(7, SeedDomain::split, 1, 2) != mix_seed(7, SeedDomain::train, 1, 2));
  CHECK(mix_seed(7, SeedDomain::split, 1, 2) != mix_seed(7, SeedDomain::split, 2, 1));
  // Published FNV-1a test vectors.
  CHECK(fnv1a64("") == 0xcbf29ce484222325ULL);
  CHECK(fnv1a64("a") == 0xaf63dc4c8601ec8cULL);
  CHECK(fnv1a64("foobar") == 0x85944171f73967e8ULL);
}

TEST_CASE("rng draws stay in range and shuffles are permutations") {
  Rng rng(42);
  std::array<int, 7> hist{};
  for (int i = 0; i < 70000; ++i) {
    const auto k = rng.uniform_index(7);
    REQUIRE(k < 7);
    ++hist[k];
  }
  for (int h : hist) CHECK(std::abs(h - 10000) < 500);

  double sum = 0.0, sq = 0.0;
  const int n = 50000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.uniform01();
    REQUIRE(u >= 0.0);
    REQUIRE(u < 1.0);
    const double g = rng.gaussian();
    sum += g;
    sq += g * g;
  }
  CHECK(std::abs(sum / n) < 0.03);
  CHECK(std::abs(sq / n - 1.0) < 0.03);

  std::vector<int> items(100);
  std::iota(items.begin(), items.end(), 0);
  auto shuffled = items;
  rng.shuffle(std::span(shuffled));
  CHECK(shuffled != items);
  std::sort(shuffled.begin(), shuffled.end());
  CHECK(shuffled == items);

  Rng a(9), b(9);
  for (int i = 0; i < 100; ++i) REQUIRE(a.next() == b.next());
}

TEST_CASE("ascii folding and whitespace splitting") {
  CHECK(ascii_fold("café") == "cafe");
  CHECK(ascii_fold("ﬁne Ｆｕｌｌ") == "fine Full");
  CHECK(ascii_fold("❤️") == "");
  CHECK(split_whitespace("  a\tb \n c  ") == std::vector<std::string>{"a", "b", "c"});
  CHECK(split_whitespace("   ").empty());
  CHECK(count_whitespace_tokens("now three words") == 3);
  CHECK(nfc_normalize("e\xcc\x81") == "\xc3\xa9");
}

TEST_CASE("key = value configs") {
  std::istringstream in("# comment\nalpha = 1\n\nbeta=two words # trailing\nalpha = 3\n");
  const auto cfg = KeyValueConfig::parse(in);
  CHECK(cfg.get("alpha") == "3");
  CHECK(cfg.get_all("alpha") == std::vector<std::string>{"1", "3"});
  CHECK(cfg.get("beta") == "two words");
  CHECK_FALSE(cfg.get("gamma").has_value());
  CHECK_NOTHROW(cfg.reject_unknown({"alpha", "beta"}));
  CHECK_THROWS_AS(cfg.reject_unknown({"alpha"}), ValidationError);
  CHECK_NOTHROW(cfg.reject_unknown({"al*", "beta"}));

  std::istringstream bad("no equals sign\n");
  CHECK_THROWS_AS(KeyValueConfig::parse(bad), ValidationError);

  CHECK(parse_integer(" -12 ", "x") == -12);
  CHECK_THROWS_AS(parse_integer("12x", "x"), ValidationError);
  CHECK_THROWS_AS(parse_unsigned("-1", "x"), ValidationError);
  CHECK(parse_real("0.25", "x") == 0.25);
  CHECK_THROWS_AS(parse_real("nan", "x"), ValidationError);
  CHECK(parse_bool("true", "x"));
  CHECK_FALSE(parse_bool("0", "x"));
}

TEST_CASE("csv helpers") {
  CHECK(csv_escape("plain") == "plain");
  CHECK(csv_escape("a,b") == "\"a,b\"");
  CHECK(csv_escape("say \"hi\"") == "\"say \"\"hi\"\"\"");
  CHECK(format_real(0.5) == "0.5");
  CHECK(format_real(-0.0) == "0");
  CHECK(format_real(std::nan("")) == "");
  CHECK(format_real(1.0 / 3) == "0.333333333333");
}
