#pragma once

#include <functional>
#include <string>
#include <vector>

#include "advest/types.hpp"

namespace advest {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Computation routes the identity checks exercise. Tests substitute broken
/// implementations here to confirm the checks actually catch defects; the
/// default routes the production estimators.
struct EstimatorRoutes {
  std::function<std::vector<double>(const Segment&, const EstimatorParams&)>
      gae;
};

/// Runs the release-gate identity and oracle checks whose names contain
/// `filter` (empty = all): estimator recursion vs direct summation,
/// exponential-form equivalence, bias and decomposition identities, network
/// gradient checks, tabular oracle consistency, and carryover bookkeeping.
std::vector<CheckResult> run_verification(const std::string& filter = "",
                                          const EstimatorRoutes* routes =
                                              nullptr);

bool all_passed(const std::vector<CheckResult>& results);

}  // namespace advest
