#include "molab/report.hpp"

namespace molab {

void VerificationReport::fail(const std::string& reason) {
  passed = false;
  ++violations;
  notes.push_back(reason);
}

void VerificationReport::absorb(const VerificationReport& other) {
  checks += other.checks;
  violations += other.violations;
  passed = passed && other.passed;
  if (other.worst_margin < worst_margin) {
    worst_margin = other.worst_margin;
    witness = other.witness;
  }
  if (first_violation.is_null() && !other.first_violation.is_null())
    first_violation = other.first_violation;
}

json number_json(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  return v;
}

json point_json(const Point& x, int dim) {
  json a = json::array();
  for (int k = 0; k < dim; ++k) a.push_back(x[k]);
  return a;
}

json VerificationReport::to_json() const {
  json j;
  j["name"] = name;
  j["passed"] = passed;
  j["tolerance"] = tolerance;
  j["checks"] = checks;
  j["violations"] = violations;
  j["worst_margin"] = checks ? number_json(worst_margin) : json(nullptr);
  j["witness"] = witness;
  if (!first_violation.is_null()) j["first_violation"] = first_violation;
  j["details"] = details;
  if (!notes.empty()) j["notes"] = notes;
  return j;
}

}  // namespace molab
