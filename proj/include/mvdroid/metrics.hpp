#pragma once

#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace mvd {

/// Confusion counts with malicious (1) as the positive class. Ratios whose
/// denominator is zero are left empty.
struct Metrics {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
  std::optional<double> precision, recall, accuracy, f1;

  std::size_t count() const { return tp + fp + tn + fn; }
};

struct SlotMetrics {
  int slot = 0;  // year
  Metrics metrics;
};

struct EvalReport {
  Metrics overall;
  std::vector<SlotMetrics> per_slot;       // filled when the test set spans two or more slots
  std::map<std::string, double> aut;       // metric name -> AUT over slots, when defined for every slot
};

Metrics evaluate(std::span<const int> labels, std::span<const int> predictions);

/// Trapezoidal mean over N >= 2 consecutive slots. Throws `TooFewSlots`.
double aut(std::span<const double> metric_by_slot);

/// Groups samples by slot, evaluates each slot and computes AUT for every
/// metric defined in all slots. A single slot gives metrics only.
EvalReport evaluate_slots(std::span<const int> labels, std::span<const int> predictions, std::span<const int> slots);

std::string to_json(const EvalReport& report);

}  // namespace mvd
