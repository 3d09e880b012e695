#pragma once

#include <array>
#include <cstddef>
#include <istream>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "driftlab/error.hpp"
#include "driftlab/label.hpp"
#include "driftlab/time.hpp"

namespace driftlab {

// One annotator's vote on one item, as read from the annotation file.
struct AnnotationRecord {
  std::string item_id;
  std::string text;
  Timestamp created_at;
  std::string annotator_id;
  Label vote = Label::neutral;
};

// A majority-resolved item. `votes` holds the raw per-class vote counts so that
// agreement statistics can be recomputed downstream.
struct LabeledExample {
  std::string item_id;
  std::string text;
  Timestamp created_at;
  Label label = Label::neutral;
  double agreement = 0.0;
  int n_votes = 0;
  std::array<int, kNumClasses> votes{};
};

struct Reject {
  std::size_t line_no = 0;  // 1-based
  std::string reason;
};

struct ParsedAnnotations {
  std::vector<AnnotationRecord> records;
  std::vector<Reject> rejects;
};

// Raised when more than half of the non-blank lines are malformed.
class TooManyRejects : public ValidationError {
 public:
  TooManyRejects(std::size_t rejected, std::size_t total);
};

// Line-delimited JSON, one annotation per line. Blank lines are ignored.
// Malformed lines are collected in `rejects`.
ParsedAnnotations parse_annotations(std::istream& in);

// "@handle" at the start of a token becomes "user"; "http://", "https://" and
// "www." runs up to the next whitespace become "url". Idempotent.
std::string anonymize(std::string_view text);

inline constexpr std::size_t kMinTokens = 3;

// Token-count rule for a single (already anonymized) record.
bool filter_eligible(const AnnotationRecord& record);

// Corpus-level eligibility: the token rule plus duplicate removal. A record is
// a duplicate when an earlier record of a different item has the same
// NFC-normalized text, or when the same (item, annotator) pair voted before.
std::vector<bool> mark_eligible(std::span<const AnnotationRecord> records);

struct ResolvedCorpus {
  std::vector<LabeledExample> examples;  // sorted by created_at, then item_id
  std::size_t skipped_items = 0;         // fewer than 3 votes
  std::size_t excluded_items = 0;        // agreement below 2/3
};

// Majority vote per item; items whose modal fraction is below 2/3 are dropped
// (exactly 2/3 is kept).
ResolvedCorpus resolve_labels(std::span<const AnnotationRecord> records);

struct IngestReport {
  ResolvedCorpus corpus;
  std::vector<Reject> rejects;
  std::size_t records_read = 0;
  std::size_t records_ineligible = 0;
};

// parse -> anonymize -> eligibility -> resolve.
IngestReport ingest(std::istream& in);

void write_annotations(std::ostream& out, std::span<const AnnotationRecord> records);
void write_resolved(std::ostream& out, std::span<const LabeledExample> examples);
std::vector<LabeledExample> read_resolved(std::istream& in);
void write_rejects_csv(std::ostream& out, std::span<const Reject> rejects);

}  // namespace driftlab
