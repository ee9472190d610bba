#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "molab/common.hpp"

namespace molab {

using json = nlohmann::json;

// Serializes doubles so that infinities and NaN survive JSON.
json number_json(double v);
json point_json(const Point& x, int dim);

// Pass/fail record of one verification. A check passes when its margin is
// at least -tolerance; NaN margins always count as violations.
struct VerificationReport {
  std::string name;
  bool passed = true;
  double tolerance = 0.0;
  std::size_t checks = 0;
  std::size_t violations = 0;
  double worst_margin = kInf;
  json witness;                      // arguments at the worst margin
  json first_violation;              // arguments of the first failing check
  json details = json::object();     // metrics and constants
  std::vector<std::string> notes;

  VerificationReport() = default;
  explicit VerificationReport(std::string report_name, double tol = 0.0)
      : name(std::move(report_name)), tolerance(tol) {}

  template <class MakeWitness>
  bool record(double margin, MakeWitness&& make_witness);

  bool record(double margin) {
    return record(margin, [] { return json::object(); });
  }

  // Marks the report failed without a margin (precondition not met, ...).
  void fail(const std::string& reason);

  void absorb(const VerificationReport& other);

  json to_json() const;
};


template <class MakeWitness>
bool VerificationReport::record(double margin, MakeWitness&& make_witness) {
  ++checks;
  const double m = std::isnan(margin) ? -kInf : margin;
  const bool ok = m >= -tolerance;
  if (checks == 1 || m < worst_margin) {
    worst_margin = m;
    witness = make_witness();
    witness["margin"] = number_json(margin);
  }
  if (!ok) {
    if (violations == 0) {
      first_violation = make_witness();
      first_violation["margin"] = number_json(margin);
    }
    ++violations;
    passed = false;
  }
  return ok;
}

}  // namespace molab
