#include "sam/tracegen.hpp"

#include <algorithm>
#include <deque>
#include <map>

#include "json.hpp"
#include "sam/engine.hpp"

namespace sam {

const char* fault_kind_name(FaultKind k) {
  switch (k) {
    case FaultKind::drop_exit: return "drop-exit";
    case FaultKind::inject_unexpected: return "inject-unexpected";
    case FaultKind::violate_postcondition: return "violate-postcondition";
    case FaultKind::swap_order: return "swap-order";
    case FaultKind::corrupt_arg: return "corrupt-arg";
  }
  return "?";
}

std::optional<FaultKind> fault_kind_from_name(const std::string& name) {
  for (FaultKind k :
       {FaultKind::drop_exit, FaultKind::inject_unexpected,
        FaultKind::violate_postcondition, FaultKind::swap_order,
        FaultKind::corrupt_arg}) {
    if (name == fault_kind_name(k)) return k;
  }
  return std::nullopt;
}

Scenario Scenario::from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& ex) {
    throw GenError("ScenarioIncomplete",
                   std::string("cannot parse scenario: ") + ex.what());
  }
  Scenario sc;
  if (j.contains("loop_bound")) sc.loop_bound = j["loop_bound"].get<int>();
  if (j.contains("seed")) sc.seed = j["seed"].get<unsigned>();
  if (j.contains("splits")) {
    for (const auto& s : j["splits"]) {
      SplitChoice c;
      c.at = s.at("at").get<std::string>();
      if (s.contains("value")) c.value = s["value"].get<std::string>();
      if (s.contains("branch")) c.branch = s["branch"].get<std::string>();
      if (!c.value && !c.branch) {
        throw GenError("ScenarioIncomplete",
                       "split choice needs a value or a branch");
      }
      sc.splits.push_back(std::move(c));
    }
  }
  return sc;
}

std::string Scenario::to_json() const {
  nlohmann::json j;
  j["splits"] = nlohmann::json::array();
  for (const SplitChoice& c : splits) {
    nlohmann::json s;
    s["at"] = c.at;
    if (c.value) s["value"] = *c.value;
    if (c.branch) s["branch"] = *c.branch;
    j["splits"].push_back(s);
  }
  j["loop_bound"] = loop_bound;
  j["seed"] = seed;
  return j.dump();
}

namespace {

std::string unused_event_name(const SamModel& m) {
  std::set<std::string> names;
  for (const auto& [n, e] : m.ensembles) {
    for (const EventRef& r : e.entry_events) names.insert(r.name);
    for (const EventRef& r : e.exit_events) names.insert(r.name);
    for (const EventRef& r : e.allowable_events) names.insert(r.name);
  }
  std::string candidate = "rogue-event";
  while (names.count(candidate)) candidate += "-z";
  return candidate;
}

/// The scheduler drives the same engine the monitor uses: it picks the
/// next observable action, synthesizes the observation, and feeds it back
/// through the dispatcher.
class Generator {
 public:
  Generator(const SamModel& m, const Scenario& sc)
      : model_(m), scenario_(sc), engine_(m) {
    for (const SplitChoice& c : sc.splits) choices_.push_back(c);
    pid_ = 4000 + static_cast<long long>(sc.seed % 1000);
  }

  TracePlan run() {
    plan_.rogue_event = unused_event_name(model_);
    engine_.start();
    sync_new_running(-1);
    size_t guard = 0;
    while (!engine_.top_completed_normal()) {
      if (++guard > 100000) {
        throw GenError("LoopBoundExceeded",
                       "generation did not terminate (internal guard)");
      }
      if (!emit_next()) break;
    }
    if (!engine_.top_completed_normal()) {
      std::string state;
      for (const Engine::InstanceView& v : engine_.views()) {
        if (v.flag == Flag::completed || v.cancelled) continue;
        state += "\n  " + (v.local.empty() ? v.ensemble : v.local) + "(" +
                 v.ensemble + ")#" + std::to_string(v.id) + " " +
                 flag_name(v.flag) + (v.enabled ? "" : " gated") +
                 (v.data_complete ? "" : " awaiting-data");
      }
      throw GenError("ScenarioIncomplete",
                     "simulation stalled before the top component completed;"
                     " pending:" +
                         state);
    }
    return std::move(plan_);
  }

 private:
  const SamModel& model_;
  const Scenario& scenario_;
  Engine engine_;
  TracePlan plan_;
  std::deque<SplitChoice> choices_;
  long long pid_ = 4242;
  int token_counter_ = 0;
  std::map<std::string, int> activations_;  // per ensemble

  struct Emission {
    int instance;
    std::deque<EventRef> allowables;
    bool exit_pending = true;
  };
  std::vector<Emission> stack_;
  std::set<int> planned_;

  Value fresh_token(const std::string& port) {
    return Value::object_ref(port + "#" + std::to_string(token_counter_++) +
                             "s" + std::to_string(scenario_.seed));
  }

  void sync_new_running(int obs) {
    (void)obs;
    for (size_t id = 0; id < engine_.instance_count(); ++id) {
      Engine::InstanceView v = engine_.view(static_cast<int>(id));
      if (v.flag == Flag::ready || v.cancelled) continue;
      if (planned_.count(v.id)) continue;
      planned_.insert(v.id);
      ++activations_[v.ensemble];
      if (activations_[v.ensemble] > scenario_.loop_bound + 1) {
        throw GenError("LoopBoundExceeded",
                       "ensemble " + v.ensemble + " activated more than " +
                           std::to_string(scenario_.loop_bound + 1) +
                           " times");
      }
      if (!v.has_exit_events) continue;
      const Ensemble* ens = model_.ensemble(v.ensemble);
      Emission em;
      em.instance = v.id;
      std::set<std::string> seen;
      for (const EventRef& ref : ens->allowable_events) {
        std::string key = ref.to_text();
        if (seen.insert(key).second) em.allowables.push_back(ref);
      }
      stack_.push_back(std::move(em));
    }
  }

  bool emit_next() {
    // Finish the most recently started component first.
    while (!stack_.empty()) {
      Emission& em = stack_.back();
      Engine::InstanceView v = engine_.view(em.instance);
      if (v.flag != Flag::running || v.cancelled) {
        stack_.pop_back();
        continue;
      }
      if (!em.allowables.empty()) {
        EventRef ref = em.allowables.front();
        em.allowables.pop_front();
        emit_allowable(v, ref);
        return true;
      }
      // Pop before feeding: the exit may start a sibling whose emission
      // lands on top of the stack.
      stack_.pop_back();
      emit_exit(v);
      return true;
    }

    // Otherwise open the first startable component, in declaration order.
    std::vector<Engine::InstanceView> views = engine_.views();
    std::vector<std::pair<std::pair<int, int>, int>> candidates;
    for (const Engine::InstanceView& v : views) {
      if (!v.awaits_entry_event || !v.data_complete) continue;
      int decl_index = 0;
      if (v.parent >= 0) {
        const Ensemble* pens = model_.ensemble(views[v.parent].ensemble);
        for (size_t i = 0; i < pens->components.size(); ++i) {
          if (pens->components[i].local == v.local) {
            decl_index = static_cast<int>(i);
          }
        }
      }
      candidates.push_back({{v.parent, decl_index}, v.id});
    }
    if (candidates.empty()) return false;
    std::sort(candidates.begin(), candidates.end());
    emit_entry(engine_.view(candidates.front().second));
    return true;
  }

  void feed(Observation o, TracePlan::StepInfo info, std::set<size_t> deps) {
    size_t index = plan_.trace.size();
    o.pid = pid_;
    o.ts = static_cast<long long>((index + 1) * 1000);
    std::vector<EngineEffect> effects =
        engine_.apply(o, static_cast<int>(index));
    // A single observation may also serve as another component's entry
    // marker; its validity then rests on that component's data sources.
    for (const EngineEffect& e : effects) {
      if (e.disposition == Disposition::entry && e.observed &&
          e.instance != info.instance) {
        for (int d : engine_.entry_dependencies(e.instance)) {
          if (d >= 0 && static_cast<size_t>(d) != index) {
            deps.insert(static_cast<size_t>(d));
          }
        }
      }
    }
    if (engine_.diverged()) {
      std::string detail;
      for (const EngineEffect& e : effects) {
        if (disposition_bad(e.disposition)) detail = e.detail;
      }
      throw GenError("GenerationDiverged",
                     "generated observation was rejected: " + o.summary() +
                         " (" + detail + ")");
    }
    plan_.trace.push_back(std::move(o));
    plan_.deps.push_back(std::move(deps));
    plan_.steps.push_back(std::move(info));
    sync_new_running(static_cast<int>(index));
  }

  void emit_entry(const Engine::InstanceView& v) {
    const Ensemble* ens = model_.ensemble(v.ensemble);
    const EventRef& ref = ens->entry_events.front();
    Observation o;
    o.event = ref.name;
    o.tag = ref.tag_filter.value_or(Tag::entry);
    TracePlan::StepInfo info;
    info.instance = v.id;
    info.ensemble = v.ensemble;
    info.role = 'e';
    if (ref.param_pattern) {
      for (const auto& slot : *ref.param_pattern) {
        if (slot && v.inputs.count(*slot)) {
          info.checked_slots.push_back(static_cast<int>(o.args.size()));
          o.args.push_back(v.inputs.at(*slot));
        } else {
          o.args.push_back(Value::nil());
        }
      }
    } else {
      for (const std::string& p : ens->inputs) {
        info.checked_slots.push_back(static_cast<int>(o.args.size()));
        o.args.push_back(v.inputs.at(p));
      }
      if (o.args.empty()) info.checked_slots.push_back(-1);  // append site
    }
    std::set<size_t> deps;
    for (int d : engine_.entry_dependencies(v.id)) {
      if (d >= 0) deps.insert(static_cast<size_t>(d));
    }
    feed(std::move(o), std::move(info), std::move(deps));
  }

  void emit_allowable(const Engine::InstanceView& v, const EventRef& ref) {
    Observation o;
    o.event = ref.name;
    o.tag = ref.tag_filter.value_or(Tag::entry);
    if (ref.param_pattern) {
      for (const auto& slot : *ref.param_pattern) {
        o.args.push_back(slot ? fresh_token(*slot) : Value::nil());
      }
    }
    TracePlan::StepInfo info;
    info.instance = v.id;
    info.ensemble = v.ensemble;
    info.role = 'a';
    std::set<size_t> deps;
    int started = engine_.started_by(v.id);
    if (started >= 0) deps.insert(static_cast<size_t>(started));
    feed(std::move(o), std::move(info), std::move(deps));
  }

  /// Ports of `v` that flow straight into a split node of the parent;
  /// those values are scripted by the scenario.
  std::map<std::string, const SplitDecl*> split_fed_ports(
      const Engine::InstanceView& v) {
    std::map<std::string, const SplitDecl*> out;
    if (v.parent < 0) return out;
    const Ensemble* pens = model_.ensemble(engine_.view(v.parent).ensemble);
    for (const DataFlow& f : pens->dataflows) {
      for (size_t i = 0; i + 1 < f.hops.size(); ++i) {
        if (f.hops[i].second != v.local) continue;
        const SplitDecl* sd = pens->split(f.hops[i + 1].second);
        if (sd) out[f.hops[i].first] = sd;
      }
    }
    return out;
  }

  Value scripted_value(const SplitDecl& sd, const std::string& port,
                       std::vector<FactOp>* facts) {
    if (choices_.empty()) {
      throw GenError("ScenarioIncomplete",
                     "split " + sd.local + " reached with no scripted choice");
    }
    SplitChoice choice = choices_.front();
    choices_.pop_front();
    if (choice.at != sd.local) {
      throw GenError("ScenarioMismatch",
                     "next scripted choice is for " + choice.at +
                         " but split " + sd.local + " was reached");
    }
    if (choice.value) return Value::text(*choice.value);

    const SplitModel* sm = model_.split_model(sd.model);
    if (!sm) throw GenError("UnknownSplit", "no split model " + sd.model);
    for (const auto& [branch, cond] : sm->branches) {
      if (branch != *choice.branch) continue;
      return solve_branch(cond, port, facts);
    }
    throw GenError("ScenarioMismatch", "split model " + sd.model +
                                           " has no branch " +
                                           *choice.branch);
  }

  /// Produces a value (and possibly a fact) that makes `cond` true.
  Value solve_branch(const SExpr& cond, const std::string& port,
                     std::vector<FactOp>* facts) {
    if (cond.is_list() && !cond.items.empty() &&
        cond.items[0].is_symbol("equal") && cond.items.size() == 3 &&
        cond.items[2].kind == SExpr::Kind::Quoted) {
      return Value::text(cond.items[2].items.front().text);
    }
    if (cond.is_list() && !cond.items.empty() &&
        cond.items[0].is_symbol("not") && cond.items.size() == 2) {
      // Negated predicate: a fresh token with no supporting fact.
      return fresh_token(port);
    }
    if (cond.is_list() && !cond.items.empty() && cond.items[0].is_symbol()) {
      // Positive predicate: assert the backing fact for a fresh token.
      Value token = fresh_token(port);
      FactOp op;
      op.assertion = true;
      op.fact.pred = cond.items[0].text;
      op.fact.args.push_back(token);
      facts->push_back(std::move(op));
      return token;
    }
    throw GenError("ScenarioMismatch",
                   "cannot drive split condition " + to_text(cond));
  }

  void emit_exit(const Engine::InstanceView& v) {
    const Ensemble* ens = model_.ensemble(v.ensemble);
    const EventRef& ref = ens->exit_events.front();
    const BehaviorModel* normal = model_.behavior(v.ensemble, Mode::normal);

    Observation o;
    o.event = ref.name;
    o.tag = ref.tag_filter.value_or(Tag::exit);
    TracePlan::StepInfo info;
    info.instance = v.id;
    info.ensemble = v.ensemble;
    info.role = 'x';

    std::map<std::string, const SplitDecl*> scripted = split_fed_ports(v);
    std::map<std::string, Value> outputs;
    for (const std::string& p : ens->outputs) {
      auto it = scripted.find(p);
      if (it != scripted.end()) {
        outputs.emplace(p, scripted_value(*it->second, p, &o.facts));
      } else {
        outputs.emplace(p, fresh_token(p));
      }
    }

    // Ports whose corruption is caught right at this observation: they
    // appear in this component's own postconditions or drive a
    // single-parameter split.
    std::set<std::string> checked_ports;
    Bindings bindings;
    for (const auto& [p, val] : v.inputs) bindings[p] = val;
    for (const auto& [p, val] : outputs) bindings[p] = val;
    if (normal) {
      for (const Condition& c : normal->postconditions) {
        collect_checked_ports(c, checked_ports);
        plan_condition_facts(c, bindings, &o.facts, &info.own_postcond_facts);
      }
    }
    for (const auto& [p, sd] : scripted) {
      if (sd->param_ports.size() == 1) checked_ports.insert(p);
    }

    if (ref.param_pattern) {
      for (const auto& slot : *ref.param_pattern) {
        if (!slot) {
          o.args.push_back(Value::nil());
          continue;
        }
        if (checked_ports.count(*slot)) {
          info.checked_slots.push_back(static_cast<int>(o.args.size()));
        }
        auto it = outputs.find(*slot);
        o.args.push_back(it != outputs.end() ? it->second
                                             : fresh_token(*slot));
      }
    } else {
      for (const std::string& p : ens->outputs) {
        if (checked_ports.count(p)) {
          info.checked_slots.push_back(static_cast<int>(o.args.size()));
        }
        o.args.push_back(outputs.at(p));
      }
      if (o.args.empty() && append_site_safe(o.event)) {
        info.checked_slots.push_back(-1);
      }
    }

    std::set<size_t> deps;
    int started = engine_.started_by(v.id);
    if (started >= 0) deps.insert(static_cast<size_t>(started));
    feed(std::move(o), std::move(info), std::move(deps));
  }

  void collect_checked_ports(const Condition& c, std::set<std::string>& out) {
    switch (c.kind) {
      case Condition::Kind::Dscs:
        out.insert(c.object_var);
        break;
      case Condition::Kind::Call:
        for (const Condition::Param& p : c.params) out.insert(p.var);
        break;
      case Condition::Kind::And:
        for (const Condition& k : c.children) collect_checked_ports(k, out);
        break;
      default:
        break;
    }
  }

  /// Attaches the facts a positive condition needs. Negations need the
  /// fact to stay absent, so nothing is attached for them.
  void plan_condition_facts(const Condition& c, const Bindings& bindings,
                            std::vector<FactOp>* facts, bool* attached) {
    switch (c.kind) {
      case Condition::Kind::Dscs: {
        auto it = bindings.find(c.object_var);
        if (it == bindings.end()) return;
        Fact f;
        f.pred = "dscs";
        f.args.push_back(it->second);
        f.args.push_back(Value::text(c.ds_type));
        if (c.good) f.args.push_back(Value::text("good"));
        attach_if_new(std::move(f), facts, attached);
        return;
      }
      case Condition::Kind::Call: {
        Fact f;
        f.pred = c.fn == "add-to-map" ? "map-entry" : c.fn;
        for (const Condition::Param& p : c.params) {
          auto it = bindings.find(p.var);
          if (it == bindings.end()) return;
          if (p.is_member) {
            f.args.push_back(
                Value::tuple({Value::text(p.member), it->second}));
          } else {
            f.args.push_back(it->second);
          }
        }
        attach_if_new(std::move(f), facts, attached);
        return;
      }
      case Condition::Kind::And:
        for (const Condition& k : c.children) {
          plan_condition_facts(k, bindings, facts, attached);
        }
        return;
      case Condition::Kind::Or:
        if (!c.children.empty()) {
          plan_condition_facts(c.children.front(), bindings, facts, attached);
        }
        return;
      case Condition::Kind::Not:
        return;
    }
  }

  void attach_if_new(Fact f, std::vector<FactOp>* facts, bool* attached) {
    if (engine_.facts().holds(f)) return;
    for (const FactOp& op : *facts) {
      if (op.fact == f) return;
    }
    *attached = true;
    FactOp op;
    op.assertion = true;
    op.fact = std::move(f);
    facts->push_back(std::move(op));
  }

  /// An appended argument is only a safe corruption when no pattern-less
  /// same-name reference elsewhere could absorb the widened observation.
  bool append_site_safe(const std::string& event) {
    for (const auto& [name, ens] : model_.ensembles) {
      for (const EventRef& r : ens.allowable_events) {
        if (r.name == event && !r.param_pattern) return false;
      }
    }
    return true;
  }
};

}  // namespace

TracePlan generate_plan(const SamModel& m, const Scenario& sc) {
  return Generator(m, sc).run();
}

namespace {

/// Safe to reason about the allowable-then-exit swap only when no other
/// ensemble could claim the event and the emitter's ensemble ran once.
bool allowable_unique_to_instance(const SamModel& m, const TracePlan& plan,
                                  size_t i) {
  const Observation& o = plan.trace[i];
  const std::string& own = plan.steps[i].ensemble;
  auto matches = [&](const std::vector<EventRef>& refs, Tag dflt,
                     bool both) {
    for (const EventRef& r : refs) {
      if (r.name != o.event) continue;
      if (r.tag_filter) {
        if (*r.tag_filter == o.tag) return true;
      } else if (both || dflt == o.tag) {
        return true;
      }
    }
    return false;
  };
  for (const auto& [name, e] : m.ensembles) {
    if (name == own) continue;
    if (matches(e.entry_events, Tag::entry, false)) return false;
    if (matches(e.exit_events, Tag::exit, false)) return false;
    if (matches(e.allowable_events, Tag::entry, true)) return false;
  }
  for (const auto& [key, b] : m.behaviors) {
    if (key.first == own) continue;
    if (matches(b.allowable_events, Tag::entry, true)) return false;
  }
  std::set<int> activations;
  for (const TracePlan::StepInfo& st : plan.steps) {
    if (st.ensemble == own) activations.insert(st.instance);
  }
  return activations.size() <= 1;
}

}  // namespace

std::vector<Observation> apply_fault(const TracePlan& plan, const Fault& f) {
  std::vector<Observation> out = plan.trace;
  size_t i = f.injection_index;
  switch (f.kind) {
    case FaultKind::drop_exit:
      if (i < out.size()) out.erase(out.begin() + static_cast<long>(i));
      break;
    case FaultKind::inject_unexpected: {
      Observation rogue;
      rogue.event = plan.rogue_event;
      rogue.tag = Tag::entry;
      rogue.pid = out.empty() ? 0 : out.front().pid;
      rogue.ts = i < out.size() ? out[i].ts : (out.size() + 1) * 1000;
      out.insert(out.begin() + static_cast<long>(std::min(i, out.size())),
                 std::move(rogue));
      break;
    }
    case FaultKind::violate_postcondition:
      if (i < out.size()) out[i].facts.clear();
      break;
    case FaultKind::swap_order:
      if (i + 1 < out.size()) std::swap(out[i], out[i + 1]);
      break;
    case FaultKind::corrupt_arg: {
      if (i >= out.size()) break;
      int slot = plan.steps[i].checked_slots.empty()
                     ? -1
                     : plan.steps[i].checked_slots.front();
      Value corrupted = Value::object_ref("corrupted#" + std::to_string(i));
      if (slot < 0) {
        out[i].args.push_back(std::move(corrupted));
      } else {
        out[i].args[static_cast<size_t>(slot)] = std::move(corrupted);
      }
      break;
    }
  }
  return out;
}

std::vector<Observation> generate(const SamModel& m, const Scenario& sc,
                                  const std::optional<Fault>& f) {
  TracePlan plan = generate_plan(m, sc);
  if (!f) return plan.trace;
  return apply_fault(plan, *f);
}

std::vector<PlannedFault> enumerate_faults(const SamModel& m,
                                           const TracePlan& plan) {
  std::vector<PlannedFault> out;
  const size_t n = plan.trace.size();

  for (size_t i = 0; i < n; ++i) {
    PlannedFault pf;
    pf.fault = {FaultKind::inject_unexpected, i};
    pf.expected_index = i;
    pf.description = "inject before " + plan.trace[i].summary();
    out.push_back(std::move(pf));
  }

  for (size_t i = 0; i < n; ++i) {
    if (plan.steps[i].role != 'x') continue;
    PlannedFault pf;
    pf.fault = {FaultKind::drop_exit, i};
    // First later observation that relied on this one; the stream shifts
    // left by one past the drop.
    size_t expected = n - 1;  // exhaustion step of the shortened stream
    for (size_t j = i + 1; j < n; ++j) {
      if (plan.deps[j].count(i)) {
        expected = j - 1;
        break;
      }
    }
    pf.expected_index = expected;
    pf.description = "drop " + plan.trace[i].summary();
    out.push_back(std::move(pf));
  }

  for (size_t i = 0; i < n; ++i) {
    if (!plan.steps[i].own_postcond_facts) continue;
    PlannedFault pf;
    pf.fault = {FaultKind::violate_postcondition, i};
    pf.expected_index = i;
    pf.description = "strip facts of " + plan.trace[i].summary();
    out.push_back(std::move(pf));
  }

  for (size_t i = 0; i < n; ++i) {
    if (plan.steps[i].checked_slots.empty()) continue;
    PlannedFault pf;
    pf.fault = {FaultKind::corrupt_arg, i};
    pf.expected_index = i;
    pf.description = "corrupt " + plan.trace[i].summary();
    out.push_back(std::move(pf));
  }

  for (size_t i = 0; i + 1 < n; ++i) {
    PlannedFault pf;
    pf.fault = {FaultKind::swap_order, i};
    pf.description = "swap " + plan.trace[i].summary() + " / " +
                     plan.trace[i + 1].summary();
    if (plan.deps[i + 1].count(i)) {
      pf.expected_index = i;
      out.push_back(std::move(pf));
      continue;
    }
    bool same_instance = plan.steps[i].instance == plan.steps[i + 1].instance;
    if (same_instance && plan.steps[i].role == 'a' &&
        plan.steps[i + 1].role == 'x') {
      // The exit closes the window the allowable needed. Only decidable
      // when no other component could claim the event.
      if (allowable_unique_to_instance(m, plan, i)) {
        pf.expected_index = i + 1;
        out.push_back(std::move(pf));
      }
      continue;
    }
    // Provably order-insensitive: swapping adjacent causally independent
    // observations keeps the trace a valid linearization.
    pf.expect_compromised = false;
    pf.expected_index = 0;
    out.push_back(std::move(pf));
  }
  return out;
}

}  // namespace sam
