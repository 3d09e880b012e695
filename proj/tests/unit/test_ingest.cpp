#include <doctest.h>

#include <algorithm>
#include <cctype>
#include <sstream>

#include "driftlab/text.hpp"

#include "driftlab/ingest.hpp"
#include "driftlab/rng.hpp"
#include "support.hpp"

using namespace driftlab;
using test_support::ts;

namespace {

std::string line(const std::string& item, const std::string& text, const std::string& annotator,
                 const std::string& vote, const std::string& created = "2020-01-01T00:00:00Z") {
  return R"({"item_id":")" + item + R"(","text":")" + text + R"(","created_at":")" + created +
         R"(","annotator_id":")" + annotator + R"(","vote":")" + vote + "\"}";
}

AnnotationRecord record(std::string item, std::string text, std::string annotator, Label vote,
                        Timestamp t = ts("2020-01-01T00:00:00Z")) {
  return {std::move(item), std::move(text), t, std::move(annotator), vote};
}

std::vector<AnnotationRecord> votes_for(const std::string& item, std::initializer_list<Label> votes,
                                        Timestamp t = ts("2020-01-01T00:00:00Z")) {
  std::vector<AnnotationRecord> out;
  int k = 0;
  for (Label v : votes) out.push_back(record(item, item + " has enough words", "a" + std::to_string(k++), v, t));
  return out;
}

// Random text built from a small alphabet of pieces that exercise the
// anonymizer's boundaries.
std::string random_text(Rng& rng) {
  static const std::vector<std::string> pieces = {
      "@", "@a", "@_x", "@@b", "a@b", "http://", "https://x.co/1", "www.", "WWW.Site", "xhttp://",
      "url", "user", " ", "  ", "\t", "word", "é", "-", "@1", "HTTPS://Q", "www", ".", "/"};
  std::string s;
  const auto n = rng.uniform_index(12);
  for (std::uint64_t i = 0; i < n; ++i) s += pieces[rng.uniform_index(pieces.size())];
  return s;
}

}  // namespace

TEST_CASE("parse_annotations keeps well-formed lines in order") {
  std::istringstream one(line("i1", "hello there world", "a", "positive"));
  const auto p1 = parse_annotations(one);
  REQUIRE(p1.records.size() == 1);
  CHECK(p1.records[0].item_id == "i1");
  CHECK(p1.records[0].vote == Label::positive);
  CHECK(p1.rejects.empty());

  std::istringstream empty("");
  CHECK(parse_annotations(empty).records.empty());

  std::istringstream mixed(line("i1", "t", "a", "positive") + "\n" + line("i2", "t", "a", "negative") +
                           "\n{not json\n\n" + line("i3", "t", "b", "neutral") + "\n");
  const auto p = parse_annotations(mixed);
  REQUIRE(p.records.size() == 3);
  CHECK(p.records[0].item_id == "i1");
  CHECK(p.records[2].item_id == "i3");
  REQUIRE(p.rejects.size() == 1);
  CHECK(p.rejects[0].line_no == 3);
}

TEST_CASE("parse_annotations rejects bad fields with reasons") {
  std::istringstream in(line("i1", "t", "a", "positive") + "\n" + line("i2", "t", "a", "positive") + "\n" +
                        line("i3", "t", "a", "positive") + "\n" + line("i4", "t", "a", "angry") + "\n" +
                        line("i5", "t", "a", "neutral", "2020-01-01T00:00:00") + "\n" +
                        R"({"item_id":"i6","text":"t","created_at":"2020-01-01T00:00:00Z","annotator_id":"a","vote":-1})" +
                        "\n");
  const auto p = parse_annotations(in);
  CHECK(p.records.size() == 4);
  CHECK(p.records.back().vote == Label::negative);
  REQUIRE(p.rejects.size() == 2);
  CHECK(p.rejects[0].line_no == 4);
  CHECK(p.rejects[0].reason.find("angry") != std::string::npos);
  CHECK(p.rejects[1].line_no == 5);
  CHECK(p.rejects[1].reason.find("created_at") != std::string::npos);

  std::ostringstream csv;
  write_rejects_csv(csv, p.rejects);
  CHECK(csv.str().starts_with("line_no,reason\n4,"));
}

TEST_CASE("parse_annotations gives up when most lines are malformed") {
  std::istringstream in(line("i1", "t", "a", "positive") + "\nnope\nnope too\n");
  CHECK_THROWS_AS(parse_annotations(in), TooManyRejects);
  std::istringstream half(line("i1", "t", "a", "positive") + "\nnope\n");
  CHECK(parse_annotations(half).rejects.size() == 1);
}

TEST_CASE("anonymize replaces mentions and urls") {
  CHECK(anonymize("thanks @doc123 see https://x.co/ab") == "thanks user see url");
  CHECK(anonymize("no mentions here") == "no mentions here");
  CHECK(anonymize("@a @b") == "user user");
  CHECK(anonymize("visit www.example.org/page, now") == "visit url now");
  CHECK(anonymize("HTTP://SHOUT.COM ok") == "url ok");
  CHECK(anonymize("mail me at a@b.com") == "mail me at a@b.com");
  CHECK(anonymize("@ alone") == "@ alone");
  CHECK(anonymize("(@x)") == "(@x)");
}

TEST_CASE("anonymize is idempotent and leaves no raw handles or urls") {
  Rng rng(2024);
  for (int i = 0; i < 5000; ++i) {
    const std::string x = random_text(rng);
    const std::string once = anonymize(x);
    REQUIRE_MESSAGE(anonymize(once) == once, "input: '" << x << "'");
    for (const auto& tok : split_whitespace(once)) {
      const bool handle = tok.size() > 1 && tok[0] == '@' && (std::isalnum(static_cast<unsigned char>(tok[1])) || tok[1] == '_');
      CHECK_FALSE_MESSAGE(handle, "input: '" << x << "'");
    }
    std::string lower = once;
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (std::size_t k = 0; k < lower.size(); ++k) {
      const bool boundary = k == 0 || !(std::isalnum(static_cast<unsigned char>(lower[k - 1])) || lower[k - 1] == '_');
      if (!boundary) continue;
      const auto rest = std::string_view(lower).substr(k);
      CHECK_FALSE_MESSAGE((rest.starts_with("http://") || rest.starts_with("https://") || rest.starts_with("www.")),
                          "input: '" << x << "'");
    }
  }
}

TEST_CASE("token-count eligibility") {
  CHECK_FALSE(filter_eligible(record("i", "two words", "a", Label::neutral)));
  CHECK(filter_eligible(record("i", "now three words", "a", Label::neutral)));
  CHECK_FALSE(filter_eligible(record("i", "   ", "a", Label::neutral)));
}

TEST_CASE("duplicates are ineligible beyond the first occurrence") {
  const std::vector<AnnotationRecord> same = {record("i1", "the same text", "a", Label::positive),
                                              record("i1", "the same text", "a", Label::positive)};
  CHECK(mark_eligible(same) == std::vector<bool>{true, false});

  // Another item repeating the text is a duplicate; further votes on the
  // first item are not.
  const std::vector<AnnotationRecord> recs = {record("i1", "the same text", "a", Label::positive),
                                              record("i2", "the same text", "b", Label::positive),
                                              record("i1", "the same text", "b", Label::positive),
                                              record("i3", "the same te\u0301xt", "a", Label::neutral)};
  CHECK(mark_eligible(recs) == std::vector<bool>{true, false, true, true});

  // NFC: precomposed and decomposed e-acute are the same text.
  const std::vector<AnnotationRecord> nfc = {record("i1", "caf\xc3\xa9 is open", "a", Label::positive),
                                             record("i2", "cafe\xcc\x81 is open", "a", Label::positive)};
  CHECK(mark_eligible(nfc) == std::vector<bool>{true, false});
}

TEST_CASE("token filter and dedup commute") {
  Rng rng(77);
  const std::vector<std::string> texts = {"a b", "a b c", "x y z w", "x y", "one two three", "q"};
  for (int trial = 0; trial < 300; ++trial) {
    std::vector<AnnotationRecord> recs;
    const auto n = rng.uniform_index(25);
    for (std::uint64_t k = 0; k < n; ++k) {
      const auto item = rng.uniform_index(6);
      // An item's text is fixed; several items may share one.
      const auto text = texts[(item * 7 + static_cast<std::uint64_t>(trial)) % texts.size()];
      recs.push_back(record("i" + std::to_string(item), text, "a" + std::to_string(rng.uniform_index(3)),
                            label_at(rng.uniform_index(3))));
    }
    const auto both = mark_eligible(recs);
    std::vector<AnnotationRecord> filtered;
    std::vector<std::size_t> origin;
    for (std::size_t k = 0; k < recs.size(); ++k) {
      if (filter_eligible(recs[k])) {
        filtered.push_back(recs[k]);
        origin.push_back(k);
      }
    }
    const auto after = mark_eligible(filtered);
    std::vector<bool> filter_first(recs.size(), false);
    for (std::size_t k = 0; k < after.size(); ++k) filter_first[origin[k]] = after[k];
    REQUIRE(both == filter_first);
  }
}

TEST_CASE("resolve_labels majority rule") {
  auto resolve_one = [](std::initializer_list<Label> votes) { return resolve_labels(votes_for("item", votes)); };

  const auto two_thirds = resolve_one({Label::positive, Label::positive, Label::negative});
  REQUIRE(two_thirds.examples.size() == 1);
  CHECK(two_thirds.examples[0].label == Label::positive);
  CHECK(two_thirds.examples[0].agreement == doctest::Approx(2.0 / 3.0));
  CHECK(two_thirds.examples[0].votes == std::array<int, 3>{1, 0, 2});

  const auto split = resolve_one({Label::positive, Label::neutral, Label::negative});
  CHECK(split.examples.empty());
  CHECK(split.excluded_items == 1);

  const auto unanimous = resolve_one({Label::negative, Label::negative, Label::negative});
  REQUIRE(unanimous.examples.size() == 1);
  CHECK(unanimous.examples[0].label == Label::negative);
  CHECK(unanimous.examples[0].agreement == 1.0);

  const auto too_few = resolve_one({Label::negative, Label::negative});
  CHECK(too_few.examples.empty());
  CHECK(too_few.skipped_items == 1);

  // Five votes, three agreeing: 3/5 < 2/3.
  CHECK(resolve_one({Label::neutral, Label::neutral, Label::neutral, Label::positive, Label::negative})
            .examples.empty());
  // Six votes, four agreeing: exactly 2/3 is kept.
  CHECK(resolve_one({Label::neutral, Label::neutral, Label::neutral, Label::neutral, Label::positive,
                     Label::negative})
            .examples.size() == 1);
}

TEST_CASE("resolve_labels sorts by time and ignores vote order") {
  Rng rng(5);
  std::vector<AnnotationRecord> recs;
  for (int item = 0; item < 60; ++item) {
    const auto t = ts("2020-01-01T00:00:00Z") + std::chrono::hours(rng.uniform_index(5000));
    for (int v = 0; v < 3; ++v) {
      recs.push_back(record("item" + std::to_string(item), "text of item " + std::to_string(item),
                            "a" + std::to_string(v), label_at(rng.uniform_index(3)), t));
    }
  }
  const auto base = resolve_labels(recs);
  for (std::size_t k = 1; k < base.examples.size(); ++k) {
    CHECK(base.examples[k - 1].created_at <= base.examples[k].created_at);
  }
  for (const auto& e : base.examples) CHECK(e.agreement >= 2.0 / 3.0);
  for (int trial = 0; trial < 10; ++trial) {
    auto shuffled = recs;
    rng.shuffle(std::span(shuffled));
    const auto again = resolve_labels(shuffled);
    REQUIRE(again.examples.size() == base.examples.size());
    for (std::size_t k = 0; k < again.examples.size(); ++k) {
      CHECK(again.examples[k].item_id == base.examples[k].item_id);
      CHECK(again.examples[k].label == base.examples[k].label);
    }
  }
}

TEST_CASE("ingest pipeline and resolved-corpus round trip") {
  std::string input;
  for (int v = 0; v < 3; ++v) {
    input += line("i1", "love it @fan https://t.co/x", "a" + std::to_string(v), "positive",
                  "2020-02-01T10:00:00Z") + "\n";
    input += line("i2", "meh", "a" + std::to_string(v), "neutral", "2020-01-01T10:00:00Z") + "\n";
    input += line("i3", "this is awful", "a" + std::to_string(v), v == 0 ? "neutral" : "negative",
                  "2020-01-05T10:00:00+01:00") + "\n";
  }
  std::istringstream in(input);
  const auto report = ingest(in);
  CHECK(report.records_read == 9);
  CHECK(report.records_ineligible == 3);
  REQUIRE(report.corpus.examples.size() == 2);
  const auto& first = report.corpus.examples[0];
  CHECK(first.item_id == "i3");
  CHECK(first.label == Label::negative);
  CHECK(format_timestamp(first.created_at) == "2020-01-05T09:00:00Z");
  CHECK(report.corpus.examples[1].text == "love it user url");

  std::ostringstream out;
  write_resolved(out, report.corpus.examples);
  std::istringstream back(out.str());
  const auto reread = read_resolved(back);
  REQUIRE(reread.size() == 2);
  for (std::size_t k = 0; k < 2; ++k) {
    CHECK(reread[k].item_id == report.corpus.examples[k].item_id);
    CHECK(reread[k].text == report.corpus.examples[k].text);
    CHECK(reread[k].created_at == report.corpus.examples[k].created_at);
    CHECK(reread[k].label == report.corpus.examples[k].label);
    CHECK(reread[k].agreement == report.corpus.examples[k].agreement);
    CHECK(reread[k].votes == report.corpus.examples[k].votes);
  }

  std::istringstream broken("{\"item_id\":\"x\"}\n");
  CHECK_THROWS_AS(read_resolved(broken), ValidationError);
}
