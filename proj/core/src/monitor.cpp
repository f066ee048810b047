#include "sam/monitor.hpp"

#include <sstream>

namespace sam {

std::optional<size_t> Verdict::first_bad_index() const {
  for (const MonitorStep& s : trail) {
    if (s.bad()) return s.index;
  }
  return std::nullopt;
}

const EventRef* match_event(const Observation& o,
                            const std::vector<EventRef>& refs) {
  for (const EventRef& ref : refs) {
    if (ref.name != o.event) continue;
    if (ref.tag_filter && *ref.tag_filter != o.tag) continue;
    if (ref.param_pattern && ref.param_pattern->size() != o.args.size()) {
      continue;
    }
    return &ref;
  }
  return nullptr;
}

MonitorSession::MonitorSession(const SamModel& m, MonitorOptions opts)
    : model_(m), engine_(m, EngineOptions{opts.recursion_limit}) {
  std::vector<Finding> findings = check_model(m);
  if (has_errors(findings)) {
    std::string msg = "model has static errors:";
    for (const Finding& f : findings) {
      if (f.severity == Severity::error) msg += "\n  " + f.to_text();
    }
    throw ModelStaticError(msg);
  }
  absorb(engine_.start(), 0, "(startup)");
}

void MonitorSession::absorb(const std::vector<EngineEffect>& effects,
                            size_t index, const std::string& summary) {
  for (const EngineEffect& eff : effects) {
    MonitorStep step;
    step.index = index;
    step.observation = summary;
    step.instance = eff.instance;
    if (eff.instance >= 0) {
      Engine::InstanceView v = engine_.view(eff.instance);
      step.instance_label =
          (v.local.empty() ? v.ensemble : v.local + "(" + v.ensemble + ")") +
          "#" + std::to_string(v.id);
      step.flag = v.flag;
      step.mode = v.mode;
    }
    step.disposition = eff.disposition;
    step.detail = eff.detail;
    trail_.push_back(std::move(step));
  }
}

bool MonitorSession::feed(const Observation& o) {
  if (engine_.diverged() || finished_) return false;

  if (pid_ && o.pid != *pid_) {
    warnings_.push_back("process id changed from " + std::to_string(*pid_) +
                        " to " + std::to_string(o.pid) + " at observation " +
                        std::to_string(index_));
  }
  if (!pid_) pid_ = o.pid;
  if (last_ts_ && o.ts < *last_ts_) {
    warnings_.push_back("timestamp went backwards at observation " +
                        std::to_string(index_));
  }
  last_ts_ = o.ts;

  absorb(engine_.apply(o, static_cast<int>(index_)), index_, o.summary());
  ++index_;
  return !engine_.diverged();
}

Evidence MonitorSession::build_evidence() const {
  Evidence ev;
  std::ostringstream trigger;
  for (const MonitorStep& s : trail_) {
    if (s.bad()) {
      trigger << "step " << s.index << ": " << disposition_name(s.disposition)
              << " (" << s.detail << ")";
      break;
    }
  }
  ev.triggering_step = trigger.str();

  for (const Engine::InstanceView& v : engine_.views()) {
    bool is_diverged = v.id == engine_.diverged_instance();
    bool completed_normal =
        v.flag == Flag::completed && v.mode == Mode::normal && !v.cancelled;
    if (!is_diverged && !completed_normal) continue;
    ObservedComponent oc;
    oc.instance = v.id;
    oc.local = v.local;
    oc.type = v.ensemble;
    oc.parent_ensemble =
        v.parent >= 0 ? engine_.view(v.parent).ensemble : "";
    oc.observed = is_diverged ? Mode::compromised : Mode::normal;
    ev.observed.push_back(std::move(oc));
  }
  return ev;
}

Verdict MonitorSession::make_verdict() {
  Verdict v;
  v.trail = trail_;
  v.warnings = warnings_;
  v.warnings.insert(v.warnings.end(), engine_.warnings().begin(),
                    engine_.warnings().end());
  if (engine_.diverged()) {
    v.outcome = Outcome::compromised;
    try {
      v.diagnosis = diagnose(model_, build_evidence());
    } catch (const DiagnosisError& ex) {
      DiagnosisReport empty;
      empty.recovered = false;
      empty.notes.push_back(std::string("diagnosis unavailable: ") +
                            ex.what());
      v.diagnosis = std::move(empty);
    }
  } else {
    v.outcome = Outcome::consistent;
  }
  return v;
}

Verdict MonitorSession::finish() {
  if (!finished_) {
    finished_ = true;
    if (!engine_.diverged()) {
      absorb(engine_.finish(static_cast<int>(index_)), index_,
             "(end of stream)");
    }
  }
  return make_verdict();
}

Verdict run_monitor(const SamModel& m, const std::vector<Observation>& stream,
                    MonitorOptions opts) {
  MonitorSession session(m, opts);
  for (const Observation& o : stream) {
    if (!session.feed(o)) break;
  }
  return session.finish();
}

}  // namespace sam
