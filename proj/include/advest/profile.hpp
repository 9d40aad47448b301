#pragma once

#include "advest/config.hpp"
#include "advest/study.hpp"

namespace advest {

/// Executes a variance-profile run. Tabular mode delegates to
/// estimator_study over the configured MDP/policy/value triple; env mode
/// rolls out the trainer's networks (optionally restored from a checkpoint)
/// and reports std columns with nan bias. The table always carries
/// sample_length rows.
StudyTable run_profile(const ProfileConfig& config);

}  // namespace advest
