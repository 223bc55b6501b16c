#pragma once

#include <string>
#include <vector>

namespace gerbes {

/// One located violation of an axiom or equation.
struct Violation {
  std::string where;   // simplex / element / pair the failure sits on
  std::string what;    // which equation failed
  double residual = 0; // numeric magnitude, 0 for exact checks
};

/// Outcome of a validation pass: empty list of violations means valid.
class Report {
public:
  void add(std::string where, std::string what, double residual = 0.0) {
    items_.push_back({std::move(where), std::move(what), residual});
  }
  void note(std::string text) { notes_.push_back(std::move(text)); }

  bool ok() const { return items_.empty(); }
  const std::vector<Violation>& violations() const { return items_; }
  const std::vector<std::string>& notes() const { return notes_; }

  /// Deterministic multi-line rendering, one violation per line.
  std::string str() const;

private:
  std::vector<Violation> items_;
  std::vector<std::string> notes_;
};

/// Fixed-width float formatting used by every emitted report (12 significant digits).
std::string format_float(double x);

} // namespace gerbes
