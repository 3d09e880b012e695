#include "driftlab/ingest.hpp"

#include <algorithm>
#include <map>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <json.hpp>

#include "driftlab/csv.hpp"
#include "driftlab/text.hpp"

namespace driftlab {

using nlohmann::json;

namespace {

bool is_word_char(char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c == '_';
}

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

bool starts_with_ci(std::string_view s, std::size_t pos, std::string_view prefix) {
  if (pos + prefix.size() > s.size()) return false;
  for (std::size_t i = 0; i < prefix.size(); ++i) {
    char c = s[pos + i];
    if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
    if (c != prefix[i]) return false;
  }
  return true;
}

std::string replace_urls(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool boundary = i == 0 || !is_word_char(text[i - 1]);
    if (boundary && (starts_with_ci(text, i, "http://") || starts_with_ci(text, i, "https://") ||
                     starts_with_ci(text, i, "www."))) {
      while (i < text.size() && !is_space(text[i])) ++i;
      out += "url";
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string replace_mentions(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  std::size_t i = 0;
  while (i < text.size()) {
    const bool token_start = i == 0 || is_space(text[i - 1]);
    if (token_start && text[i] == '@' && i + 1 < text.size() && is_word_char(text[i + 1])) {
      ++i;
      while (i < text.size() && is_word_char(text[i])) ++i;
      out += "user";
      continue;
    }
    out.push_back(text[i++]);
  }
  return out;
}

std::string field_as_string(const json& obj, const char* name) {
  const auto it = obj.find(name);
  if (it == obj.end()) throw ValidationError(std::string("missing field '") + name + "'");
  if (it->is_string()) return it->get<std::string>();
  if (it->is_number_integer()) return std::to_string(it->get<long long>());
  throw ValidationError(std::string("field '") + name + "' is not a string");
}

Label vote_from_json(const json& obj) {
  const auto it = obj.find("vote");
  if (it == obj.end()) throw ValidationError("missing field 'vote'");
  if (it->is_string()) {
    if (auto l = parse_label(it->get<std::string>())) return *l;
    throw ValidationError("unknown vote '" + it->get<std::string>() + "'");
  }
  if (it->is_number_integer()) {
    const auto v = it->get<long long>();
    if (v >= -1 && v <= 1) return label_at(static_cast<std::size_t>(v + 1));
  }
  throw ValidationError("vote must be negative|neutral|positive");
}

}  // namespace

TooManyRejects::TooManyRejects(std::size_t rejected, std::size_t total)
    : ValidationError(std::to_string(rejected) + " of " + std::to_string(total) +
                      " lines rejected; this does not look like an annotation file") {}

ParsedAnnotations parse_annotations(std::istream& in) {
  ParsedAnnotations out;
  std::string line;
  std::size_t line_no = 0;
  std::size_t non_blank = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    ++non_blank;
    try {
      const json obj = json::parse(line);
      if (!obj.is_object()) throw ValidationError("not a JSON object");
      AnnotationRecord rec;
      rec.item_id = field_as_string(obj, "item_id");
      rec.text = field_as_string(obj, "text");
      rec.annotator_id = field_as_string(obj, "annotator_id");
      const std::string created = field_as_string(obj, "created_at");
      const auto ts = parse_timestamp(created);
      if (!ts) throw ValidationError("bad created_at '" + created + "'");
      rec.created_at = *ts;
      rec.vote = vote_from_json(obj);
      if (rec.item_id.empty()) throw ValidationError("empty item_id");
      out.records.push_back(std::move(rec));
    } catch (const json::exception& e) {
      out.rejects.push_back({line_no, std::string("invalid JSON: ") + e.what()});
    } catch (const ValidationError& e) {
      out.rejects.push_back({line_no, e.what()});
    }
  }
  if (out.rejects.size() * 2 > non_blank) throw TooManyRejects(out.rejects.size(), non_blank);
  return out;
}

std::string anonymize(std::string_view text) { return replace_mentions(replace_urls(text)); }

bool filter_eligible(const AnnotationRecord& record) {
  return count_whitespace_tokens(record.text) >= kMinTokens;
}

std::vector<bool> mark_eligible(std::span<const AnnotationRecord> records) {
  std::vector<bool> eligible(records.size(), false);
  std::unordered_map<std::string, std::string> owner_of_text;
  std::set<std::pair<std::string, std::string>> seen_votes;
  for (std::size_t i = 0; i < records.size(); ++i) {
    const auto& r = records[i];
    if (!filter_eligible(r)) continue;
    if (!seen_votes.emplace(r.item_id, r.annotator_id).second) continue;
    const auto [it, inserted] = owner_of_text.try_emplace(nfc_normalize(r.text), r.item_id);
    if (!inserted && it->second != r.item_id) continue;
    eligible[i] = true;
  }
  return eligible;
}

ResolvedCorpus resolve_labels(std::span<const AnnotationRecord> records) {
  struct Tally {
    const AnnotationRecord* first = nullptr;
    std::array<int, kNumClasses> votes{};
  };
  std::map<std::string, Tally> items;
  for (const auto& r : records) {
    auto& t = items[r.item_id];
    if (t.first == nullptr) t.first = &r;
    ++t.votes[index_of(r.vote)];
  }

  ResolvedCorpus out;
  for (const auto& [id, tally] : items) {
    int n = 0;
    for (int v : tally.votes) n += v;
    if (n < 3) {
      ++out.skipped_items;
      continue;
    }
    const auto mode_it = std::max_element(tally.votes.begin(), tally.votes.end());
    const int mode_count = *mode_it;
    // mode/n >= 2/3 in exact integer arithmetic
    if (3 * mode_count < 2 * n) {
      ++out.excluded_items;
      continue;
    }
    LabeledExample ex;
    ex.item_id = id;
    ex.text = tally.first->text;
    ex.created_at = tally.first->created_at;
    ex.label = label_at(static_cast<std::size_t>(mode_it - tally.votes.begin()));
    ex.agreement = static_cast<double>(mode_count) / static_cast<double>(n);
    ex.n_votes = n;
    ex.votes = tally.votes;
    out.examples.push_back(std::move(ex));
  }
  std::stable_sort(out.examples.begin(), out.examples.end(),
                   [](const LabeledExample& a, const LabeledExample& b) {
                     if (a.created_at != b.created_at) return a.created_at < b.created_at;
                     return a.item_id < b.item_id;
                   });
  return out;
}

IngestReport ingest(std::istream& in) {
  auto parsed = parse_annotations(in);
  IngestReport report;
  report.rejects = std::move(parsed.rejects);
  report.records_read = parsed.records.size();
  for (auto& r : parsed.records) r.text = anonymize(r.text);
  const auto eligible = mark_eligible(parsed.records);
  std::vector<AnnotationRecord> kept;
  kept.reserve(parsed.records.size());
  for (std::size_t i = 0; i < parsed.records.size(); ++i) {
    if (eligible[i]) {
      kept.push_back(std::move(parsed.records[i]));
    } else {
      ++report.records_ineligible;
    }
  }
  report.corpus = resolve_labels(kept);
  return report;
}

void write_annotations(std::ostream& out, std::span<const AnnotationRecord> records) {
  for (const auto& r : records) {
    json obj = {{"item_id", r.item_id},
                {"text", r.text},
                {"created_at", format_timestamp(r.created_at)},
                {"annotator_id", r.annotator_id},
                {"vote", std::string(to_string(r.vote))}};
    out << obj.dump() << '\n';
  }
}

void write_resolved(std::ostream& out, std::span<const LabeledExample> examples) {
  for (const auto& e : examples) {
    json obj = {{"item_id", e.item_id},
                {"text", e.text},
                {"created_at", format_timestamp(e.created_at)},
                {"label", std::string(to_string(e.label))},
                {"agreement", e.agreement},
                {"n_votes", e.n_votes},
                {"votes", e.votes}};
    out << obj.dump() << '\n';
  }
}

std::vector<LabeledExample> read_resolved(std::istream& in) {
  std::vector<LabeledExample> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "resolved corpus line " + std::to_string(line_no) + ": ";
    try {
      const json obj = json::parse(line);
      LabeledExample e;
      e.item_id = field_as_string(obj, "item_id");
      e.text = field_as_string(obj, "text");
      const auto ts = parse_timestamp(field_as_string(obj, "created_at"));
      if (!ts) throw ValidationError("bad created_at");
      e.created_at = *ts;
      const auto label = parse_label(field_as_string(obj, "label"));
      if (!label) throw ValidationError("bad label");
      e.label = *label;
      e.agreement = obj.at("agreement").get<double>();
      e.n_votes = obj.at("n_votes").get<int>();
      if (const auto it = obj.find("votes"); it != obj.end()) {
        e.votes = it->get<std::array<int, kNumClasses>>();
      } else {
        e.votes[index_of(e.label)] = e.n_votes;
      }
      out.push_back(std::move(e));
    } catch (const json::exception& ex) {
      throw ValidationError(where + ex.what());
    } catch (const ValidationError& ex) {
      throw ValidationError(where + ex.what());
    }
  }
  return out;
}

void write_rejects_csv(std::ostream& out, std::span<const Reject> rejects) {
  out << "line_no,reason\n";
  for (const auto& r : rejects) out << r.line_no << ',' << csv_escape(r.reason) << '\n';
}

}  // namespace driftlab
