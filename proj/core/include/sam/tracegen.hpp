#pragma once

#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sam/model.hpp"
#include "sam/observation.hpp"

namespace sam {

/// One scripted decision for a split reached during simulation: either the
/// driving value itself or the branch to make true.
struct SplitChoice {
  std::string at;  // split local name
  std::optional<std::string> value;
  std::optional<std::string> branch;
};

struct Scenario {
  std::vector<SplitChoice> splits;
  int loop_bound = 4;
  unsigned seed = 0;

  static Scenario from_json(const std::string& text);
  std::string to_json() const;
};

enum class FaultKind {
  drop_exit,
  inject_unexpected,
  violate_postcondition,
  swap_order,
  corrupt_arg
};

const char* fault_kind_name(FaultKind k);
std::optional<FaultKind> fault_kind_from_name(const std::string& name);

struct Fault {
  FaultKind kind = FaultKind::inject_unexpected;
  size_t injection_index = 0;  // position in the normal trace
};

class GenError : public std::runtime_error {
 public:
  GenError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// A normal trace plus the causal record needed to reason about faults.
struct TracePlan {
  struct StepInfo {
    int instance = -1;
    std::string ensemble;
    char role = '?';  // 'e' entry, 'x' exit, 'a' allowable
    /// Argument slots whose corruption the monitor provably detects at
    /// this index (-1 = append an extra argument).
    std::vector<int> checked_slots;
    /// Facts attached here that this instance's own normal postconditions
    /// rely on.
    bool own_postcond_facts = false;
  };

  std::vector<Observation> trace;
  std::vector<std::set<size_t>> deps;  // per observation: required indices
  std::vector<StepInfo> steps;
  /// Event name guaranteed absent from the model, used by
  /// inject-unexpected.
  std::string rogue_event = "rogue-event";
};

/// A fault site with its statically computed ground truth.
struct PlannedFault {
  Fault fault;
  bool expect_compromised = true;
  /// Index of the first bad step when compromised (mutated-stream
  /// coordinates; the exhaustion step uses the mutated length).
  size_t expected_index = 0;
  std::string description;
};

/// Simulates the model under a scenario and returns the observation stream
/// with its causal record. Throws GenError: ScenarioIncomplete,
/// ScenarioMismatch, LoopBoundExceeded, UnknownSplit.
TracePlan generate_plan(const SamModel& m, const Scenario& sc);

std::vector<Observation> apply_fault(const TracePlan& plan, const Fault& f);

std::vector<Observation> generate(const SamModel& m, const Scenario& sc,
                                  const std::optional<Fault>& f = {});

/// Enumerates the fault sites whose outcome is statically decidable:
/// every applicable (kind, index) pair with the expected verdict and
/// first-bad-step index.
std::vector<PlannedFault> enumerate_faults(const SamModel& m,
                                           const TracePlan& plan);

}  // namespace sam
