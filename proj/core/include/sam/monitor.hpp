#pragma once

#include <optional>
#include <string>
#include <vector>

#include "sam/check.hpp"
#include "sam/diagnosis.hpp"
#include "sam/engine.hpp"
#include "sam/model.hpp"
#include "sam/observation.hpp"

namespace sam {

struct MonitorOptions {
  int recursion_limit = 1024;
};

struct MonitorStep {
  size_t index = 0;  // position in the stream; the exhaustion step uses
                     // the stream length
  std::string observation;
  int instance = -1;
  std::string instance_label;  // "local(type)#id"
  Disposition disposition = Disposition::unexpected;
  Flag flag = Flag::ready;
  Mode mode = Mode::normal;
  std::string detail;

  bool bad() const { return disposition_bad(disposition); }
};

enum class Outcome { consistent, compromised };

struct Verdict {
  Outcome outcome = Outcome::consistent;
  std::vector<MonitorStep> trail;
  std::optional<DiagnosisReport> diagnosis;
  std::vector<std::string> warnings;

  std::optional<size_t> first_bad_index() const;
};

class ModelStaticError : public std::runtime_error {
 public:
  explicit ModelStaticError(const std::string& message)
      : std::runtime_error(message) {}
};

/// Streaming interface: feed observations one at a time; the verdict is
/// final as soon as feed returns false (no event is consumed after a
/// compromise).
class MonitorSession {
 public:
  MonitorSession(const SamModel& m, MonitorOptions opts = {});

  /// Returns false once the run is compromised; further observations are
  /// not consumed.
  bool feed(const Observation& o);
  Verdict finish();

  bool compromised() const { return engine_.diverged(); }
  const std::vector<MonitorStep>& trail() const { return trail_; }
  size_t consumed() const { return index_; }

 private:
  const SamModel& model_;
  Engine engine_;
  std::vector<MonitorStep> trail_;
  std::vector<std::string> warnings_;
  size_t index_ = 0;
  bool finished_ = false;
  std::optional<long long> pid_;
  std::optional<long long> last_ts_;

  void absorb(const std::vector<EngineEffect>& effects, size_t index,
              const std::string& summary);
  Evidence build_evidence() const;
  Verdict make_verdict();
};

/// Runs the full dispatch loop over a finite stream. Throws
/// ModelStaticError when check_model reports errors.
Verdict run_monitor(const SamModel& m, const std::vector<Observation>& stream,
                    MonitorOptions opts = {});

/// First matching reference: same name, compatible tag, and, when the
/// reference carries a parameter pattern, matching arity.
const EventRef* match_event(const Observation& o,
                            const std::vector<EventRef>& refs);

}  // namespace sam
