#include "driftlab/sentiment.hpp"

#include <algorithm>
#include <map>

#include <json.hpp>

#include "driftlab/csv.hpp"
#include "driftlab/error.hpp"

namespace driftlab {

SentimentSeries sentiment_index(std::span<const TimedLabel> predictions) {
  std::map<std::chrono::sys_days, std::pair<long, std::size_t>> weeks;
  for (const auto& p : predictions) {
    auto& [sum, n] = weeks[iso_week_start(p.t)];
    sum += numeric_value(p.label);
    ++n;
  }
  SentimentSeries out;
  out.reserve(weeks.size());
  for (const auto& [week, acc] : weeks) {
    out.push_back({week, static_cast<double>(acc.first) / static_cast<double>(acc.second),
                   acc.second});
  }
  return out;
}

std::ptrdiff_t model_for(std::span<const TimelineModel> model_timeline, Timestamp t) {
  const auto it = std::upper_bound(model_timeline.begin(), model_timeline.end(), t,
                                   [](Timestamp v, const TimelineModel& m) { return v < m.train_end; });
  return (it - model_timeline.begin()) - 1;
}

SentimentComparison compare_legacy_updated(std::span<const StreamItem> stream,
                                           const TrainedClassifier& legacy_model,
                                           std::span<const TimelineModel> model_timeline) {
  if (model_timeline.empty()) throw ValidationError("model timeline is empty");
  for (std::size_t i = 1; i < model_timeline.size(); ++i) {
    if (model_timeline[i].train_end < model_timeline[i - 1].train_end) {
      throw ValidationError("model timeline is not sorted by train_end");
    }
  }

  std::vector<std::vector<std::size_t>> assigned(model_timeline.size());
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const auto m = model_for(model_timeline, stream[i].t);
    if (m < 0) {
      throw ValidationError("stream item at " + format_timestamp(stream[i].t) +
                            " precedes every model's train_end");
    }
    assigned[static_cast<std::size_t>(m)].push_back(i);
  }

  std::vector<std::string> texts;
  texts.reserve(stream.size());
  for (const auto& item : stream) texts.push_back(item.text);

  std::vector<TimedLabel> legacy;
  legacy.reserve(stream.size());
  const auto legacy_probs = legacy_model.predict(texts);
  for (std::size_t i = 0; i < stream.size(); ++i) legacy.push_back({stream[i].t, legacy_probs[i].argmax()});

  std::vector<TimedLabel> updated(stream.size());
  for (std::size_t m = 0; m < model_timeline.size(); ++m) {
    if (assigned[m].empty()) continue;
    std::vector<std::string> batch;
    batch.reserve(assigned[m].size());
    for (auto i : assigned[m]) batch.push_back(stream[i].text);
    const auto probs = model_timeline[m].model->predict(batch);
    for (std::size_t k = 0; k < assigned[m].size(); ++k) {
      const auto i = assigned[m][k];
      updated[i] = {stream[i].t, probs[k].argmax()};
    }
  }
  return {sentiment_index(legacy), sentiment_index(updated)};
}

double final_quarter_mean(const SentimentSeries& series) {
  if (series.empty()) throw ValidationError("empty sentiment series");
  const std::size_t k = (series.size() + 3) / 4;
  double sum = 0.0;
  for (std::size_t i = series.size() - k; i < series.size(); ++i) sum += series[i].s;
  return sum / static_cast<double>(k);
}

std::vector<StreamItem> read_stream(std::istream& in) {
  std::vector<StreamItem> out;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const std::string where = "stream line " + std::to_string(line_no) + ": ";
    try {
      const auto obj = nlohmann::json::parse(line);
      const auto ts = parse_timestamp(obj.at("created_at").get<std::string>());
      if (!ts) throw ValidationError("bad created_at");
      out.push_back({*ts, obj.at("text").get<std::string>()});
    } catch (const nlohmann::json::exception& e) {
      throw ValidationError(where + e.what());
    } catch (const ValidationError& e) {
      throw ValidationError(where + e.what());
    }
  }
  return out;
}

void write_sentiment_csv(std::ostream& out, const SentimentComparison& cmp) {
  std::map<std::chrono::sys_days, std::pair<const SentimentPoint*, const SentimentPoint*>> weeks;
  for (const auto& p : cmp.legacy) weeks[p.week_start].first = &p;
  for (const auto& p : cmp.updated) weeks[p.week_start].second = &p;
  out << "week_start,s_legacy,n_legacy,s_updated,n_updated\n";
  for (const auto& [week, pair] : weeks) {
    out << format_date(week);
    for (const SentimentPoint* p : {pair.first, pair.second}) {
      if (p != nullptr) {
        out << ',' << format_real(p->s) << ',' << p->n;
      } else {
        out << ",,0";
      }
    }
    out << '\n';
  }
}

}  // namespace driftlab
