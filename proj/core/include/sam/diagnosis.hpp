#pragma once

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sam/model.hpp"

namespace sam {

/// A component whose mode was pinned down by monitoring: completed
/// components are normal, the diverging one compromised.
struct ObservedComponent {
  int instance = -1;
  std::string parent_ensemble;  // scope of the local name; empty for top
  std::string local;            // local name within the parent; empty for top
  std::string type;             // the component's own ensemble name
  Mode observed = Mode::normal;
};

struct Evidence {
  std::vector<ObservedComponent> observed;
  std::string triggering_step;
};

class DiagnosisError : public std::runtime_error {
 public:
  DiagnosisError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

struct DiagnosisReport {
  std::map<std::string, double> attack_posteriors;
  // (resource, "normal"/"hacked") -> posterior
  std::map<std::pair<std::string, std::string>, double>
      resource_mode_posteriors;

  struct RankedAssignment {
    std::map<std::string, std::string> assignment;
    double probability = 0.0;
  };
  std::vector<RankedAssignment> ranked_assignments;

  /// True iff some explanation has nonzero probability.
  bool recovered = false;
  std::vector<std::string> notes;

  std::string to_json() const;  // stable key order, 12 significant digits
  std::string to_text() const;
};

/// Exact posterior computation by exhaustive enumeration of the joint table
/// over attack occurrences, resource modes and the observed component
/// modes. Throws DiagnosisError("NoAttackModel") when the model declares no
/// attack model. When no assignment explains the evidence the report keeps
/// the unconditioned prior, recovered = false, with a note.
DiagnosisReport diagnose(const SamModel& m, const Evidence& ev);

}  // namespace sam
