#pragma once

#include <string>
#include <vector>

namespace icfringe {

struct SelfTestOptions {
  /// Relative change applied to the phase coefficient inside the closed-form
  /// reference. Zero for a real run; nonzero makes the oracle suite fail.
  double closed_form_perturbation = 0.0;
};

struct SelfTestCheck {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct SelfTestReport {
  std::vector<SelfTestCheck> checks;
  double seconds = 0.0;

  bool passed() const;
};

/// Quadrature against the closed form, round-trip inversion, pipeline
/// exactness on a small noiseless stack, and stack format round trip.
SelfTestReport run_selftest(const SelfTestOptions& options = {}, int threads = 1);

std::string format_report(const SelfTestReport& report);

}  // namespace icfringe
