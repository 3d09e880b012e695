#include <doctest.h>

#include <sstream>

#include "driftlab/keyvalue.hpp"
#include "driftlab/sentiment.hpp"
#include "support.hpp"

using namespace driftlab;
using test_support::ts;

namespace {

// Reads the label from the first word of the text.
class KeywordClassifier final : public TrainedClassifier {
 public:
  std::vector<ProbVector> predict(std::span<const std::string> texts) const override {
    std::vector<ProbVector> out;
    for (const auto& t : texts) {
      ProbVector p;
      const auto l = parse_label(t.substr(0, t.find(' ')));
      p.p = {0.1, 0.1, 0.1};
      p.p[index_of(l.value_or(Label::neutral))] = 0.8;
      out.push_back(p);
    }
    return out;
  }
};

std::shared_ptr<const TrainedClassifier> constant(Label l) { return std::make_shared<ConstantClassifier>(l); }

}  // namespace

TEST_CASE("weekly index of numeric labels") {
  // 2024-01-01 is a Monday.
  const std::vector<TimedLabel> week = {{ts("2024-01-01T00:00:00Z"), Label::positive},
                                        {ts("2024-01-03T12:00:00Z"), Label::positive},
                                        {ts("2024-01-05T08:00:00Z"), Label::neutral},
                                        {ts("2024-01-07T23:59:59Z"), Label::negative}};
  const auto s = sentiment_index(week);
  REQUIRE(s.size() == 1);
  CHECK(s[0].s == 0.25);
  CHECK(s[0].n == 4);
  CHECK(format_date(s[0].week_start) == "2024-01-01");

  std::vector<TimedLabel> positives;
  for (int i = 0; i < 5; ++i) positives.push_back({ts("2024-02-06T00:00:00Z"), Label::positive});
  CHECK(sentiment_index(positives)[0].s == 1.0);

  CHECK(sentiment_index(std::vector<TimedLabel>{}).empty());

  // Gaps are omitted rather than zero-filled.
  const std::vector<TimedLabel> gap = {{ts("2024-01-01T00:00:00Z"), Label::neutral},
                                       {ts("2024-01-22T00:00:00Z"), Label::negative}};
  const auto g = sentiment_index(gap);
  REQUIRE(g.size() == 2);
  CHECK(g[0].s == 0.0);
  CHECK(g[1].s == -1.0);
  CHECK(format_date(g[1].week_start) == "2024-01-22");
}

TEST_CASE("index is invariant to order within a week and bounded") {
  Rng rng(4);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<TimedLabel> items;
    const int n = 1 + static_cast<int>(rng.uniform_index(60));
    for (int i = 0; i < n; ++i) {
      items.push_back({ts("2023-03-06T00:00:00Z") + std::chrono::seconds(rng.uniform_index(28 * 86400)),
                       label_at(rng.uniform_index(3))});
    }
    const auto a = sentiment_index(items);
    rng.shuffle(std::span<TimedLabel>(items));
    const auto b = sentiment_index(items);
    REQUIRE(a.size() == b.size());
    std::size_t total = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
      CHECK(a[i].week_start == b[i].week_start);
      CHECK(a[i].s == doctest::Approx(b[i].s).epsilon(1e-15));
      CHECK(a[i].s >= -1.0);
      CHECK(a[i].s <= 1.0);
      total += a[i].n;
    }
    CHECK(total == items.size());
  }
}

TEST_CASE("model assignment follows train_end") {
  const std::vector<TimelineModel> timeline = {{ts("2024-01-01T00:00:00Z"), constant(Label::negative)},
                                               {ts("2024-02-01T00:00:00Z"), constant(Label::neutral)},
                                               {ts("2024-03-01T00:00:00Z"), constant(Label::positive)}};
  CHECK(model_for(timeline, ts("2023-12-31T23:59:59Z")) == -1);
  CHECK(model_for(timeline, ts("2024-01-01T00:00:00Z")) == 0);
  CHECK(model_for(timeline, ts("2024-01-31T23:59:59Z")) == 0);
  CHECK(model_for(timeline, ts("2024-02-01T00:00:00Z")) == 1);
  CHECK(model_for(timeline, ts("2030-01-01T00:00:00Z")) == 2);

  const std::vector<StreamItem> stream = {{ts("2024-01-02T00:00:00Z"), "a"},
                                          {ts("2024-02-01T00:00:00Z"), "b"},
                                          {ts("2024-03-05T00:00:00Z"), "c"}};
  const ConstantClassifier legacy(Label::neutral);
  const auto cmp = compare_legacy_updated(stream, legacy, timeline);
  REQUIRE(cmp.updated.size() == 3);
  CHECK(cmp.updated[0].s == -1.0);
  CHECK(cmp.updated[1].s == 0.0);
  CHECK(cmp.updated[2].s == 1.0);
  for (const auto& p : cmp.legacy) CHECK(p.s == 0.0);

  const std::vector<StreamItem> early = {{ts("2023-06-01T00:00:00Z"), "x"}};
  CHECK_THROWS_AS(compare_legacy_updated(early, legacy, timeline), ValidationError);
  CHECK_THROWS_AS(compare_legacy_updated(stream, legacy, std::vector<TimelineModel>{}), ValidationError);
  const std::vector<TimelineModel> unsorted = {timeline[1], timeline[0]};
  CHECK_THROWS_AS(compare_legacy_updated(stream, legacy, unsorted), ValidationError);
}

TEST_CASE("a single-model timeline reproduces the legacy series") {
  Rng rng(9);
  std::vector<StreamItem> stream;
  const char* words[] = {"negative", "neutral", "positive"};
  for (int i = 0; i < 300; ++i) {
    stream.push_back({ts("2022-01-03T00:00:00Z") + std::chrono::seconds(rng.uniform_index(200 * 86400)),
                      std::string(words[rng.uniform_index(3)]) + " text"});
  }
  const auto model = std::make_shared<KeywordClassifier>();
  const std::vector<TimelineModel> timeline = {{ts("2022-01-01T00:00:00Z"), model}};
  const auto cmp = compare_legacy_updated(stream, *model, timeline);
  REQUIRE(cmp.legacy.size() == cmp.updated.size());
  for (std::size_t i = 0; i < cmp.legacy.size(); ++i) {
    CHECK(cmp.legacy[i].week_start == cmp.updated[i].week_start);
    CHECK(cmp.legacy[i].s == cmp.updated[i].s);
    CHECK(cmp.legacy[i].n == cmp.updated[i].n);
  }
  std::ostringstream os;
  write_sentiment_csv(os, cmp);
  std::istringstream in(os.str());
  std::string line;
  std::getline(in, line);
  CHECK(line == "week_start,s_legacy,n_legacy,s_updated,n_updated");
  while (std::getline(in, line)) {
    const auto f = split(line, ',');
    REQUIRE(f.size() == 5);
    CHECK(f[1] == f[3]);
    CHECK(f[2] == f[4]);
  }
}

TEST_CASE("final quarter mean rounds the quarter up") {
  SentimentSeries s;
  for (double v : {0.0, 0.0, 0.0, 0.0, 0.5, 1.0}) s.push_back({std::chrono::sys_days{}, v, 1});
  CHECK(final_quarter_mean(s) == doctest::Approx(0.75));  // ceil(6/4) = 2 points
  s.resize(4);
  s[3].s = -0.4;
  CHECK(final_quarter_mean(s) == doctest::Approx(-0.4));
  CHECK_THROWS_AS(final_quarter_mean(SentimentSeries{}), ValidationError);
}

TEST_CASE("sentiment CSV covers the union of weeks") {
  SentimentComparison cmp;
  const auto w1 = iso_week_start(ts("2024-01-01T00:00:00Z"));
  const auto w2 = iso_week_start(ts("2024-01-08T00:00:00Z"));
  cmp.legacy = {{w1, 0.5, 2}};
  cmp.updated = {{w1, -0.5, 2}, {w2, 1.0, 1}};
  std::ostringstream os;
  write_sentiment_csv(os, cmp);
  CHECK(os.str() == "week_start,s_legacy,n_legacy,s_updated,n_updated\n2024-01-01,0.5,2,-0.5,2\n2024-01-08,,0,1,1\n");
}

TEST_CASE("stream reader") {
  std::istringstream in(R"({"created_at":"2024-01-02T03:04:05Z","text":"hello"}

{"created_at":"2024-01-03T00:00:00Z","text":"again","extra":1}
)");
  const auto items = read_stream(in);
  REQUIRE(items.size() == 2);
  CHECK(items[0].text == "hello");
  CHECK(items[0].t == ts("2024-01-02T03:04:05Z"));
  for (const char* bad : {R"({"text":"x"})", R"({"created_at":"yesterday","text":"x"})", "{not json"}) {
    std::istringstream b(bad);
    CHECK_THROWS_AS(read_stream(b), ValidationError);
  }
}
