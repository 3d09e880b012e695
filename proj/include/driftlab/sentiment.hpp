#pragma once

#include <chrono>
#include <cstddef>
#include <istream>
#include <memory>
#include <ostream>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "driftlab/classifier.hpp"
#include "driftlab/label.hpp"
#include "driftlab/time.hpp"

namespace driftlab {

struct SentimentPoint {
  std::chrono::sys_days week_start;  // ISO week Monday, UTC
  double s = 0.0;                    // mean of -1/0/+1 predictions
  std::size_t n = 0;
};

using SentimentSeries = std::vector<SentimentPoint>;

struct TimedLabel {
  Timestamp t;
  Label label = Label::neutral;
};

// Weekly mean of numeric label values; weeks without predictions are omitted.
SentimentSeries sentiment_index(std::span<const TimedLabel> predictions);

struct StreamItem {
  Timestamp t;
  std::string text;
};

struct TimelineModel {
  Timestamp train_end;
  std::shared_ptr<const TrainedClassifier> model;
};

struct SentimentComparison {
  SentimentSeries legacy;
  SentimentSeries updated;
};

// Legacy series: legacy_model everywhere. Updated series: each item scored by
// the latest model whose train_end <= item time. Labels are argmax with ties
// to neutral. Throws if any item predates every train_end.
SentimentComparison compare_legacy_updated(std::span<const StreamItem> stream,
                                           const TrainedClassifier& legacy_model,
                                           std::span<const TimelineModel> model_timeline);

// Index into model_timeline of the model responsible for time t, or -1.
std::ptrdiff_t model_for(std::span<const TimelineModel> model_timeline, Timestamp t);

// Mean s over the last quarter (rounded up) of the series' points.
double final_quarter_mean(const SentimentSeries& series);

// Line-delimited JSON with "created_at" and "text".
std::vector<StreamItem> read_stream(std::istream& in);

// week_start,s_legacy,n_legacy,s_updated,n_updated over the union of weeks.
void write_sentiment_csv(std::ostream& out, const SentimentComparison& cmp);

}  // namespace driftlab
