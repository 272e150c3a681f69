#include "mvdroid/metrics.hpp"

#include <json.hpp>

#include "mvdroid/error.hpp"

namespace mvd {
namespace {

std::optional<double> ratio(std::size_t num, std::size_t den) {
  if (den == 0) return std::nullopt;
  return static_cast<double>(num) / static_cast<double>(den);
}

nlohmann::ordered_json metrics_json(const Metrics& m) {
  nlohmann::ordered_json j;
  j["tp"] = m.tp;
  j["fp"] = m.fp;
  j["tn"] = m.tn;
  j["fn"] = m.fn;
  const auto put = [&](const char* key, const std::optional<double>& v) {
    if (v) j[key] = *v;
  };
  put("precision", m.precision);
  put("recall", m.recall);
  put("accuracy", m.accuracy);
  put("f1", m.f1);
  return j;
}

}  // namespace

Metrics evaluate(std::span<const int> labels, std::span<const int> predictions) {
  if (labels.size() != predictions.size())
    throw Error(ErrorCode::ShapeMismatch, std::to_string(labels.size()) + " labels vs " +
                                              std::to_string(predictions.size()) + " predictions");
  Metrics m;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const bool truth = labels[i] == 1, pred = predictions[i] == 1;
    if (truth && pred) ++m.tp;
    else if (!truth && pred) ++m.fp;
    else if (truth) ++m.fn;
    else ++m.tn;
  }
  m.precision = ratio(m.tp, m.tp + m.fp);
  m.recall = ratio(m.tp, m.tp + m.fn);
  m.accuracy = ratio(m.tp + m.tn, m.count());
  if (m.precision && m.recall && *m.precision + *m.recall > 0)
    m.f1 = 2 * *m.precision * *m.recall / (*m.precision + *m.recall);
  return m;
}

double aut(std::span<const double> f) {
  if (f.size() < 2) throw Error(ErrorCode::TooFewSlots, "AUT needs at least two slots, got " + std::to_string(f.size()));
  // running mean of the trapezoids, exact for constant series
  double mean = 0;
  for (std::size_t k = 0; k + 1 < f.size(); ++k) mean += ((f[k + 1] + f[k]) / 2 - mean) / static_cast<double>(k + 1);
  return mean;
}

EvalReport evaluate_slots(std::span<const int> labels, std::span<const int> predictions, std::span<const int> slots) {
  if (slots.size() != labels.size()) throw Error(ErrorCode::ShapeMismatch, "one slot per sample expected");
  EvalReport r;
  r.overall = evaluate(labels, predictions);
  std::map<int, std::pair<std::vector<int>, std::vector<int>>> grouped;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    grouped[slots[i]].first.push_back(labels[i]);
    grouped[slots[i]].second.push_back(predictions[i]);
  }
  if (grouped.size() < 2) return r;
  for (const auto& [slot, lp] : grouped) r.per_slot.push_back({slot, evaluate(lp.first, lp.second)});

  const std::vector<std::pair<std::string, std::optional<double> Metrics::*>> names{
      {"precision", &Metrics::precision}, {"recall", &Metrics::recall}, {"accuracy", &Metrics::accuracy},
      {"f1", &Metrics::f1}};
  for (const auto& [name, field] : names) {
    std::vector<double> series;
    for (const auto& s : r.per_slot)
      if (s.metrics.*field) series.push_back(*(s.metrics.*field));
    if (series.size() == r.per_slot.size()) r.aut[name] = aut(series);
  }
  return r;
}

std::string to_json(const EvalReport& report) {
  nlohmann::ordered_json j = metrics_json(report.overall);
  if (!report.per_slot.empty()) {
    auto& slots = j["per_slot"] = nlohmann::ordered_json::array();
    for (const auto& s : report.per_slot) {
      nlohmann::ordered_json entry{{"slot", s.slot}};
      entry.update(metrics_json(s.metrics));
      slots.push_back(entry);
    }
    auto& aut = j["aut"] = nlohmann::ordered_json::object();
    for (const auto& [k, v] : report.aut) aut[k] = v;
  }
  return j.dump(2) + "\n";
}

}  // namespace mvd
