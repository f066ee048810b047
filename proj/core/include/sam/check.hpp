#pragma once

#include <string>
#include <vector>

#include "sam/model.hpp"

namespace sam {

enum class Severity { error, warning };

struct Finding {
  Severity severity = Severity::warning;
  std::string code;
  std::string message;
  SourcePos pos;

  std::string to_text() const;
};

/// Static lint over a loaded model: dangling references, probability sums
/// (ProbSum, tolerance 1e-9), reachability from the top component,
/// behavior/ensemble interface agreement, vulnerability coverage. All
/// results are data; nothing throws.
std::vector<Finding> check_model(const SamModel& m);

bool has_errors(const std::vector<Finding>& findings);
size_t count_code(const std::vector<Finding>& findings, const std::string& code);

}  // namespace sam
