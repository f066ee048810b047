#include "sam/engine.hpp"

#include <algorithm>
#include <cassert>

namespace sam {

const char* disposition_name(Disposition d) {
  switch (d) {
    case Disposition::entry: return "entry";
    case Disposition::exit_event: return "exit";
    case Disposition::allowable: return "allowable";
    case Disposition::unexpected: return "unexpected";
    case Disposition::precondition_fail: return "precondition-fail";
    case Disposition::postcondition_fail: return "postcondition-fail";
  }
  return "?";
}

bool disposition_bad(Disposition d) {
  return d == Disposition::unexpected || d == Disposition::precondition_fail ||
         d == Disposition::postcondition_fail;
}

namespace {

bool tag_matches(const EventRef& ref, Tag obs_tag, Tag default_tag) {
  Tag want = ref.tag_filter ? *ref.tag_filter : default_tag;
  return obs_tag == want;
}

bool allowable_tag_matches(const EventRef& ref, Tag obs_tag) {
  return !ref.tag_filter || *ref.tag_filter == obs_tag;
}

}  // namespace

Engine::Engine(const SamModel& m, EngineOptions opts)
    : model_(m), opts_(opts), registry_(PredicateRegistry::with_builtins()) {
  register_model_predicates(m, registry_);
}

void Engine::emit(int inst, Disposition d, std::string detail,
                  bool observed) {
  EngineEffect eff;
  eff.instance = inst;
  eff.disposition = d;
  eff.detail = std::move(detail);
  eff.observed = observed;
  if (inst >= 0) {
    eff.flag = instances_[inst].flag;
    eff.mode = instances_[inst].mode;
  }
  if (effects_) effects_->push_back(std::move(eff));
}

void Engine::diverge(int inst, Disposition d, std::string detail) {
  if (diverged_) return;
  diverged_ = true;
  diverged_instance_ = inst >= 0 ? inst : innermost_running();
  if (diverged_instance_ >= 0) {
    instances_[diverged_instance_].mode = Mode::compromised;
  }
  emit(diverged_instance_, d, std::move(detail));
}

int Engine::innermost_running() const {
  int best = top_instance_;
  int best_key = -1;
  for (const Instance& i : instances_) {
    if (i.flag == Flag::running && !i.cancelled && i.arrival > best_key) {
      best = i.id;
      best_key = i.arrival;
    }
  }
  return best;
}

int Engine::create_instance(const std::string& ensemble, int parent,
                            const std::string& local, int obs) {
  const Ensemble* ens = model_.ensemble(ensemble);
  assert(ens && "engine requires a statically clean model");
  Instance inst;
  inst.id = static_cast<int>(instances_.size());
  inst.ens = ens;
  inst.parent = parent;
  inst.local = local;
  inst.depth = parent >= 0 ? instances_[parent].depth + 1 : 0;
  inst.created_by = obs;
  for (const std::string& p : ens->inputs) inst.inputs[p];
  for (const std::string& p : ens->outputs) inst.outputs[p];
  // An output port can complete the component only if some dataflow feeds
  // the ensemble's own port.
  inst.outputs_boundable = !ens->outputs.empty();
  for (const std::string& p : ens->outputs) {
    bool fed = false;
    for (const DataFlow& f : ens->dataflows) {
      for (size_t i = 0; i + 1 < f.hops.size(); ++i) {
        if (f.hops[i + 1].second == ens->name && f.hops[i + 1].first == p) {
          fed = true;
        }
      }
    }
    if (!fed) inst.outputs_boundable = false;
  }
  instances_.push_back(std::move(inst));
  return instances_.back().id;
}

std::vector<EngineEffect> Engine::start() {
  std::vector<EngineEffect> out;
  effects_ = &out;
  assert(model_.top_component && "engine requires a top component");
  top_instance_ = create_instance(*model_.top_component, -1, "", -1);
  start_instance(instances_[top_instance_], -1, false);
  if (!diverged_) quiescence_pass(-1);
  effects_ = nullptr;
  return out;
}

void Engine::activate_subnetwork(Instance& inst, int obs) {
  const Ensemble& ens = *inst.ens;
  inst.subnet_active = true;

  // Recursion guard: activations of one ensemble along the ancestor chain.
  int depth_same = 1;
  for (int p = inst.parent; p >= 0; p = instances_[p].parent) {
    if (instances_[p].ens == inst.ens) ++depth_same;
  }
  if (depth_same > opts_.recursion_limit) {
    diverge(inst.id, Disposition::unexpected,
            "recursion limit exceeded for " + ens.name);
    return;
  }

  for (const ComponentDecl& c : ens.components) {
    int child = create_instance(c.type, inst.id, c.local, obs);
    inst.children[c.local] = child;
  }
  for (const SplitDecl& s : ens.splits) {
    SplitNode node;
    node.decl = &s;
    for (const std::string& p : s.param_ports) node.params[p];
    inst.split_nodes[s.local] = std::move(node);
  }
  for (const JoinDecl& j : ens.joins) {
    JoinNode node;
    node.decl = &j;
    for (const std::string& b : j.branches) {
      JoinBranch br;
      for (const std::string& p : j.ports) br.data[p];
      node.branches[b] = std::move(br);
    }
    inst.join_nodes[j.local] = std::move(node);
  }

  // Normalize controlflow pairs into trigger -> target edges.
  for (const ControlFlowDecl& cf : ens.controlflows) {
    if (cf.points.size() == 1) {
      const auto& [p, n] = cf.points.front();
      if (p == FlowPosition::before) inst.edges.insert({"parent-start", n});
      continue;
    }
    for (size_t i = 0; i + 1 < cf.points.size(); ++i) {
      const auto& [p1, n1] = cf.points[i];
      const auto& [p2, n2] = cf.points[i + 1];
      if (p1 == FlowPosition::after) {
        inst.edges.insert({"completed:" + n1, n2});
      } else if (n1 == ens.name) {
        inst.edges.insert({"parent-start", n2});
      } else {
        inst.edges.insert({"started:" + n1, n2});
      }
      (void)p2;
    }
  }

  // A child or join branch named by some edge needs that edge to fire
  // before it may act.
  std::set<std::string> gated;
  for (const auto& [trigger, target] : inst.edges) gated.insert(target);
  for (auto& [local, child_id] : inst.children) {
    if (gated.count(local)) {
      instances_[child_id].enabled = false;
    } else {
      instances_[child_id].enabled_by = obs;
    }
  }
  for (auto& [jname, node] : inst.join_nodes) {
    for (auto& [bname, br] : node.branches) {
      br.control_required = gated.count(jname + "-" + bname) > 0;
      br.enabled = !br.control_required;
    }
  }

  fire_trigger(inst, "parent-start", obs);
}

void Engine::fire_trigger(Instance& scope, const std::string& trigger,
                          int obs) {
  if (diverged_) return;
  std::vector<std::string> targets;
  auto [lo, hi] = scope.edges.equal_range(trigger);
  for (auto it = lo; it != hi; ++it) targets.push_back(it->second);
  for (const std::string& t : targets) enable_target(scope, t, obs);
}

void Engine::enable_target(Instance& scope, const std::string& target,
                           int obs) {
  if (diverged_) return;
  auto child_it = scope.children.find(target);
  if (child_it != scope.children.end()) {
    Instance& child = instances_[child_it->second];
    if (!child.enabled) {
      child.enabled = true;
      child.enabled_by = obs;
      try_start_data_driven(child, obs);
    }
    return;
  }
  // join branch: <join>-<branch>
  for (auto& [jname, node] : scope.join_nodes) {
    for (auto& [bname, br] : node.branches) {
      if (target == jname + "-" + bname) {
        if (!br.enabled) {
          br.enabled = true;
          try_forward_join(scope, node, obs);
        }
        return;
      }
    }
  }
  // Other targets (splits, dangling names) have no enable gate.
}

bool Engine::start_instance(Instance& inst, int obs, bool observed) {
  if (diverged_) return false;
  inst.snapshot = "before#" + std::to_string(snapshot_counter_++);
  facts_.take_snapshot(inst.snapshot);

  const BehaviorModel* normal = model_.behavior(inst.ens->name, Mode::normal);
  std::string why;
  bool ok = true;
  if (normal) {
    ok = eval_behavior_conditions(inst, normal->prerequisites, false, &why);
  }
  if (!ok) {
    const BehaviorModel* bad =
        model_.behavior(inst.ens->name, Mode::compromised);
    std::string detail = "prerequisites of (" + inst.ens->name +
                         " normal) failed: " + why;
    if (bad) {
      std::string cwhy;
      if (eval_behavior_conditions(inst, bad->prerequisites, false, &cwhy)) {
        detail += "; compromised prerequisites hold";
      }
    }
    diverge(inst.id, Disposition::precondition_fail, detail);
    return false;
  }

  inst.flag = Flag::running;
  inst.arrival = arrival_counter_++;
  inst.started_by = obs;
  emit(inst.id, Disposition::entry,
       observed ? inst.ens->name : inst.ens->name + " (data-driven)",
       observed);

  if (inst.parent >= 0) {
    fire_trigger(instances_[inst.parent], "started:" + inst.local, obs);
  }

  activate_subnetwork(inst, obs);
  if (diverged_) return false;

  // Route the input values through the subnetwork.
  for (const std::string& p : inst.ens->inputs) {
    if (inst.inputs.at(p)) {
      propagate(inst, inst.ens->name, p, *inst.inputs.at(p), obs);
      if (diverged_) return false;
    }
  }

  // Components with no exit events and no outputs finish as soon as they
  // start (maf-save style silent components).
  if (inst.exitless() && inst.outputs.empty() && inst.children.empty()) {
    complete_instance(inst, obs, false);
  }
  return !diverged_;
}

Bindings Engine::make_bindings(const Instance& inst, bool with_outputs) const {
  Bindings b;
  for (const auto& [p, v] : inst.inputs) {
    if (v) b[p] = *v;
  }
  if (with_outputs) {
    for (const auto& [p, v] : inst.outputs) {
      if (v) b[p] = *v;
    }
  }
  return b;
}

bool Engine::eval_behavior_conditions(const Instance& inst,
                                      const std::vector<Condition>& conds,
                                      bool with_outputs,
                                      std::string* why) const {
  Bindings bindings = make_bindings(inst, with_outputs);
  for (const Condition& c : conds) {
    bool ok;
    try {
      ok = eval_condition(c, bindings, facts_, inst.snapshot, registry_);
    } catch (const EvalError& ex) {
      if (why) *why = c.to_text() + " (" + ex.what() + ")";
      return false;
    }
    if (!ok) {
      if (why) *why = c.to_text();
      return false;
    }
  }
  return true;
}

void Engine::complete_instance(Instance& inst, int obs, bool observed) {
  if (diverged_) return;
  const BehaviorModel* normal = model_.behavior(inst.ens->name, Mode::normal);
  std::string why;
  bool ok = true;
  if (normal) {
    ok = eval_behavior_conditions(inst, normal->postconditions, true, &why);
  }
  if (!ok) {
    const BehaviorModel* bad =
        model_.behavior(inst.ens->name, Mode::compromised);
    std::string detail = "postconditions of (" + inst.ens->name +
                         " normal) failed: " + why;
    if (bad) {
      std::string cwhy;
      if (eval_behavior_conditions(inst, bad->postconditions, true, &cwhy)) {
        detail += "; compromised postconditions hold";
      }
    }
    diverge(inst.id, Disposition::postcondition_fail, detail);
    return;
  }

  inst.flag = Flag::completed;
  cancel_descendants(inst);
  emit(inst.id, Disposition::exit_event,
       observed ? inst.ens->name : inst.ens->name + " (data-driven)",
       observed);

  if (inst.parent >= 0) {
    Instance& parent = instances_[inst.parent];
    for (const std::string& p : inst.ens->outputs) {
      if (inst.outputs.at(p)) {
        propagate(parent, inst.local, p, *inst.outputs.at(p), obs);
        if (diverged_) return;
      }
    }
    fire_trigger(parent, "completed:" + inst.local, obs);
  }
}

void Engine::cancel_descendants(Instance& inst) {
  for (const auto& [local, child_id] : inst.children) {
    Instance& child = instances_[child_id];
    if (child.flag != Flag::completed && !child.cancelled) {
      child.cancelled = true;
    }
    cancel_descendants(child);
  }
}

void Engine::propagate(Instance& scope, const std::string& source,
                       const std::string& port, const Value& v, int obs) {
  if (diverged_) return;
  for (const DataFlow& f : scope.ens->dataflows) {
    for (size_t i = 0; i + 1 < f.hops.size(); ++i) {
      if (f.hops[i].second == source && f.hops[i].first == port) {
        deliver(scope, f.hops[i + 1].second, f.hops[i + 1].first, v, obs);
        if (diverged_) return;
      }
    }
  }
}

void Engine::deliver(Instance& scope, const std::string& dest,
                     const std::string& port, const Value& v, int obs) {
  if (diverged_) return;
  // Own output port.
  if (dest == scope.ens->name) {
    auto it = scope.outputs.find(port);
    if (it == scope.outputs.end()) {
      warnings_.push_back(scope.ens->name + " has no output port " + port);
      return;
    }
    if (it->second && *it->second != v) {
      warnings_.push_back(scope.ens->name + ": output " + port +
                          " received conflicting values; keeping the first");
      return;
    }
    it->second = v;
    return;
  }
  auto child_it = scope.children.find(dest);
  if (child_it != scope.children.end()) {
    Instance& child = instances_[child_it->second];
    auto it = child.inputs.find(port);
    if (it == child.inputs.end()) {
      diverge(child.id, Disposition::unexpected,
              "value delivered to " + dest + " which has no input port " +
                  port);
      return;
    }
    if (it->second && *it->second != v) {
      warnings_.push_back(dest + ": input " + port +
                          " received conflicting values; keeping the first");
      return;
    }
    it->second = v;
    child.input_sources[port] = obs;
    try_start_data_driven(child, obs);
    return;
  }
  auto split_it = scope.split_nodes.find(dest);
  if (split_it != scope.split_nodes.end()) {
    deliver_to_split(scope, split_it->second, port, v, obs);
    return;
  }
  // Join branch (qualified as <join>-<branch>).
  for (auto& [jname, node] : scope.join_nodes) {
    for (auto& [bname, br] : node.branches) {
      if (dest == jname + "-" + bname) {
        auto it = br.data.find(port);
        if (it == br.data.end()) {
          warnings_.push_back("join " + jname + " has no port " + port);
          return;
        }
        it->second = v;
        try_forward_join(scope, node, obs);
        return;
      }
    }
  }
  // Dangling destination; check_model already warned about it statically.
}

void Engine::deliver_to_split(Instance& scope, SplitNode& node,
                              const std::string& port, const Value& v,
                              int obs) {
  auto it = node.params.find(port);
  if (it == node.params.end()) {
    diverge(scope.id, Disposition::unexpected,
            "split " + node.decl->local + " has no parameter " + port);
    return;
  }
  it->second = v;
  for (const auto& [p, val] : node.params) {
    if (!val) return;
  }
  if (node.chosen) return;

  const SplitModel* sm = model_.split_model(node.decl->model);
  std::vector<Value> args;
  for (const std::string& p : node.decl->param_ports) {
    args.push_back(*node.params.at(p));
  }
  std::string branch;
  try {
    branch = eval_split(*sm, args, facts_, registry_);
  } catch (const EvalError& ex) {
    diverge(scope.id, Disposition::unexpected,
            "split " + node.decl->local + ": " + ex.what());
    return;
  }
  node.chosen = branch;
  fire_trigger(scope, "completed:" + node.decl->local + "-" + branch, obs);
  if (diverged_) return;
  for (const std::string& p : node.decl->param_ports) {
    propagate(scope, node.decl->local + "-" + branch, p, *node.params.at(p),
              obs);
    if (diverged_) return;
  }
}

void Engine::try_forward_join(Instance& scope, JoinNode& node, int obs) {
  if (diverged_ || node.forwarded) return;
  for (const std::string& bname : node.decl->branches) {
    JoinBranch& br = node.branches.at(bname);
    if (br.control_required && !br.enabled) continue;
    bool complete = true;
    for (const auto& [p, v] : br.data) {
      if (!v) complete = false;
    }
    if (!complete) continue;

    node.forwarded = true;
    node.forwarded_branch = bname;
    for (const std::string& p : node.decl->ports) {
      propagate(scope, node.decl->local, p, *br.data.at(p), obs);
      if (diverged_) return;
    }
    fire_trigger(scope, "completed:" + node.decl->local, obs);
    fire_trigger(scope, "completed:" + node.decl->local + "-" + bname, obs);
    return;
  }
}

void Engine::try_start_data_driven(Instance& inst, int obs) {
  if (diverged_ || inst.cancelled || inst.flag != Flag::ready ||
      !inst.enabled) {
    return;
  }
  if (!inst.ens->auto_entry && !inst.ens->entry_events.empty()) return;
  if (!inst.data_complete()) return;
  start_instance(inst, obs, false);
}

bool Engine::quiescent(const Instance& inst) const {
  for (const auto& [local, child_id] : inst.children) {
    const Instance& c = instances_[child_id];
    if (c.cancelled) continue;
    if (c.flag == Flag::running) return false;
    if (c.flag == Flag::ready && c.enabled && c.data_complete()) return false;
  }
  return true;
}

void Engine::quiescence_pass(int obs) {
  bool changed = true;
  while (changed && !diverged_) {
    changed = false;
    // Deepest instances first so completions cascade upward.
    std::vector<int> running;
    for (const Instance& i : instances_) {
      if (i.flag == Flag::running && !i.cancelled) running.push_back(i.id);
    }
    std::sort(running.begin(), running.end(), [&](int a, int b) {
      return instances_[a].depth > instances_[b].depth;
    });
    for (int id : running) {
      Instance& inst = instances_[id];
      if (inst.flag != Flag::running || !inst.exitless()) continue;
      bool complete = false;
      if (!inst.outputs.empty() && inst.outputs_boundable) {
        complete = true;
        for (const auto& [p, v] : inst.outputs) {
          if (!v) complete = false;
        }
      } else if (inst.outputs.empty() && inst.children.empty()) {
        complete = true;
      } else if (inst.subnet_active && !inst.children.empty()) {
        complete = quiescent(inst);
      }
      if (complete) {
        complete_instance(inst, obs, false);
        changed = true;
        if (diverged_) return;
        break;
      }
    }
  }
}

bool Engine::process_exit(const Observation& o, int obs) {
  std::vector<int> candidates;
  for (const Instance& inst : instances_) {
    if (inst.flag != Flag::running || inst.cancelled) continue;
    for (const EventRef& ref : inst.ens->exit_events) {
      if (ref.name != o.event || !tag_matches(ref, o.tag, Tag::exit)) continue;
      if (ref.param_pattern) {
        if (o.args.size() != ref.param_pattern->size()) continue;
      } else if (o.args.size() != inst.ens->outputs.size()) {
        continue;
      }
      candidates.push_back(inst.id);
      break;
    }
  }
  if (candidates.empty()) return false;
  int chosen = *std::max_element(
      candidates.begin(), candidates.end(), [&](int a, int b) {
        return instances_[a].arrival < instances_[b].arrival;
      });
  Instance& inst = instances_[chosen];

  const EventRef* ref = nullptr;
  for (const EventRef& r : inst.ens->exit_events) {
    if (r.name == o.event && tag_matches(r, o.tag, Tag::exit)) {
      bool arity_ok = r.param_pattern
                          ? o.args.size() == r.param_pattern->size()
                          : o.args.size() == inst.ens->outputs.size();
      if (arity_ok) {
        ref = &r;
        break;
      }
    }
  }

  // Bind the output ports from the observed arguments.
  if (ref->param_pattern) {
    for (size_t i = 0; i < ref->param_pattern->size(); ++i) {
      const auto& slot = (*ref->param_pattern)[i];
      if (!slot) continue;  // nil wildcard
      auto it = inst.outputs.find(*slot);
      if (it == inst.outputs.end()) {
        diverge(inst.id, Disposition::postcondition_fail,
                "exit pattern names unknown output port " + *slot);
        return true;
      }
      if (it->second && *it->second != o.args[i]) {
        diverge(inst.id, Disposition::postcondition_fail,
                "observed output " + *slot + " disagrees with routed value");
        return true;
      }
      it->second = o.args[i];
    }
  } else {
    for (size_t i = 0; i < inst.ens->outputs.size(); ++i) {
      auto& port = inst.outputs.at(inst.ens->outputs[i]);
      if (port && *port != o.args[i]) {
        diverge(inst.id, Disposition::postcondition_fail,
                "observed output " + inst.ens->outputs[i] +
                    " disagrees with routed value");
        return true;
      }
      port = o.args[i];
    }
  }
  complete_instance(inst, obs, true);
  return true;
}

bool Engine::process_entry(const Observation& o, int obs) {
  std::vector<int> candidates;
  for (const Instance& inst : instances_) {
    if (inst.flag != Flag::ready || inst.cancelled || !inst.enabled) continue;
    if (inst.ens->auto_entry) continue;
    for (const EventRef& ref : inst.ens->entry_events) {
      if (ref.name != o.event || !tag_matches(ref, o.tag, Tag::entry)) {
        continue;
      }
      if (ref.param_pattern && o.args.size() != ref.param_pattern->size()) {
        continue;
      }
      candidates.push_back(inst.id);
      break;
    }
  }
  if (candidates.empty()) return false;
  int chosen = *std::max_element(candidates.begin(), candidates.end(),
                                 [&](int a, int b) {
                                   if (instances_[a].depth !=
                                       instances_[b].depth) {
                                     return instances_[a].depth <
                                            instances_[b].depth;
                                   }
                                   return a < b;
                                 });
  Instance& inst = instances_[chosen];

  if (!inst.data_complete()) {
    diverge(inst.id, Disposition::precondition_fail,
            inst.ens->name + " entered before its data arrived");
    return true;
  }
  // Entry arguments, when present, must agree with the routed input
  // values. An exit-tagged observation doubling as an entry marker carries
  // the exiting method's outputs, so the check applies to entry-tagged
  // observations only.
  const EventRef* ref = nullptr;
  for (const EventRef& r : inst.ens->entry_events) {
    if (r.name == o.event && tag_matches(r, o.tag, Tag::entry)) {
      ref = &r;
      break;
    }
  }
  if (o.tag != Tag::entry) {
    start_instance(inst, obs, true);
    return true;
  }
  if (ref->param_pattern) {
    for (size_t i = 0; i < ref->param_pattern->size(); ++i) {
      const auto& slot = (*ref->param_pattern)[i];
      if (!slot) continue;
      auto it = inst.inputs.find(*slot);
      if (it != inst.inputs.end() && it->second && *it->second != o.args[i]) {
        diverge(inst.id, Disposition::precondition_fail,
                "entry argument " + *slot + " disagrees with routed value");
        return true;
      }
    }
  } else if (!o.args.empty()) {
    if (o.args.size() != inst.ens->inputs.size()) {
      diverge(inst.id, Disposition::precondition_fail,
              inst.ens->name + " entry carries " +
                  std::to_string(o.args.size()) + " arguments, expected " +
                  std::to_string(inst.ens->inputs.size()));
      return true;
    }
    for (size_t i = 0; i < o.args.size(); ++i) {
      const auto& port = inst.inputs.at(inst.ens->inputs[i]);
      if (port && *port != o.args[i]) {
        diverge(inst.id, Disposition::precondition_fail,
                "entry argument " + inst.ens->inputs[i] +
                    " disagrees with routed value");
        return true;
      }
    }
  }
  start_instance(inst, obs, true);
  return true;
}

bool Engine::process_allowable(const Observation& o, int obs) {
  std::vector<int> candidates;
  for (const Instance& inst : instances_) {
    if (inst.flag != Flag::running || inst.cancelled) continue;
    auto try_refs = [&](const std::vector<EventRef>& refs) {
      for (const EventRef& ref : refs) {
        if (ref.name != o.event || !allowable_tag_matches(ref, o.tag)) {
          continue;
        }
        if (ref.param_pattern && o.args.size() != ref.param_pattern->size()) {
          continue;
        }
        return true;
      }
      return false;
    };
    bool hit = try_refs(inst.ens->allowable_events);
    if (!hit) {
      const BehaviorModel* b = model_.behavior(inst.ens->name, Mode::normal);
      if (b) hit = try_refs(b->allowable_events);
    }
    if (hit) candidates.push_back(inst.id);
  }
  if (candidates.empty()) return false;
  int chosen = *std::max_element(
      candidates.begin(), candidates.end(), [&](int a, int b) {
        return instances_[a].arrival < instances_[b].arrival;
      });
  emit(chosen, Disposition::allowable, o.event);
  (void)obs;
  return true;
}

std::vector<EngineEffect> Engine::apply(const Observation& o, int obs_index) {
  std::vector<EngineEffect> out;
  if (diverged_) return out;
  effects_ = &out;

  for (const FactOp& op : o.facts) {
    if (op.assertion) {
      facts_.assert_fact(op.fact);
    } else {
      facts_.retract_fact(op.fact);
    }
  }

  bool was_exit = process_exit(o, obs_index);
  bool was_entry = false;
  if (!diverged_) {
    // The same physical event may close one component and open its
    // neighbor (an exit-tagged entry event).
    was_entry = process_entry(o, obs_index);
  }
  if (!was_exit && !was_entry && !diverged_) {
    if (!process_allowable(o, obs_index)) {
      diverge(-1, Disposition::unexpected,
              "unexpected event " + o.summary());
    }
  }
  if (!diverged_) quiescence_pass(obs_index);

  effects_ = nullptr;
  return out;
}

std::vector<EngineEffect> Engine::finish(int end_index) {
  std::vector<EngineEffect> out;
  if (diverged_) return out;
  effects_ = &out;
  if (!top_completed_normal()) {
    diverge(innermost_running(), Disposition::unexpected,
            "stream exhausted before the top component completed");
  }
  (void)end_index;
  effects_ = nullptr;
  return out;
}

bool Engine::top_completed_normal() const {
  if (top_instance_ < 0) return false;
  const Instance& top = instances_[top_instance_];
  return top.flag == Flag::completed && top.mode == Mode::normal;
}

Engine::InstanceView Engine::view(int id) const {
  const Instance& i = instances_.at(id);
  InstanceView v;
  v.id = i.id;
  v.parent = i.parent;
  v.ensemble = i.ens->name;
  v.local = i.local;
  v.flag = i.flag;
  v.mode = i.mode;
  v.depth = i.depth;
  v.enabled = i.enabled;
  v.cancelled = i.cancelled;
  v.data_complete = i.data_complete();
  v.awaits_entry_event = i.flag == Flag::ready && !i.cancelled && i.enabled &&
                         !i.ens->auto_entry && !i.ens->entry_events.empty();
  v.has_exit_events = !i.ens->exit_events.empty();
  for (const auto& [p, val] : i.inputs) {
    if (val) v.inputs[p] = *val;
  }
  for (const auto& [p, val] : i.outputs) {
    if (val) v.outputs[p] = *val;
  }
  return v;
}

std::vector<Engine::InstanceView> Engine::views() const {
  std::vector<InstanceView> out;
  out.reserve(instances_.size());
  for (const Instance& i : instances_) out.push_back(view(i.id));
  return out;
}

std::set<int> Engine::entry_dependencies(int id) const {
  const Instance& i = instances_.at(id);
  std::set<int> deps;
  if (i.created_by >= 0) deps.insert(i.created_by);
  if (i.enabled_by >= 0) deps.insert(i.enabled_by);
  for (const auto& [p, src] : i.input_sources) {
    if (src >= 0) deps.insert(src);
  }
  return deps;
}

int Engine::started_by(int id) const { return instances_.at(id).started_by; }

}  // namespace sam
