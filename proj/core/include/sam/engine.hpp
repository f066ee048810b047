#pragma once

#include <deque>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "sam/conditions.hpp"
#include "sam/model.hpp"
#include "sam/observation.hpp"

namespace sam {

enum class Disposition {
  entry,
  exit_event,
  allowable,
  unexpected,
  precondition_fail,
  postcondition_fail
};

const char* disposition_name(Disposition d);
bool disposition_bad(Disposition d);

struct EngineOptions {
  int recursion_limit = 1024;
};

struct EngineEffect {
  int instance = -1;
  Disposition disposition = Disposition::unexpected;
  std::string detail;
  Flag flag = Flag::ready;
  Mode mode = Mode::normal;
  /// True when the effect was driven by the observation itself rather
  /// than by dataflow (an observed entry/exit as opposed to a silent one).
  bool observed = false;
};

/// Interpreter over a model's instance tree: activates components, routes
/// values along dataflows through splits and joins, fires control links,
/// and evaluates pre/postconditions against the fact store. The monitor
/// feeds it observations; the trace generator inspects its pending work.
class Engine {
 public:
  Engine(const SamModel& m, EngineOptions opts = {});

  PredicateRegistry& registry() { return registry_; }
  FactStore& facts() { return facts_; }

  /// Activates the top component (the initial startup step).
  std::vector<EngineEffect> start();

  /// Applies one observation; `obs_index` is its position in the stream.
  std::vector<EngineEffect> apply(const Observation& o, int obs_index);

  /// Called at stream end; flags an incomplete run.
  std::vector<EngineEffect> finish(int end_index);

  bool diverged() const { return diverged_; }
  int diverged_instance() const { return diverged_instance_; }
  bool top_completed_normal() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

  struct InstanceView {
    int id = -1;
    int parent = -1;
    std::string ensemble;
    std::string local;   // name within the parent's subnetwork
    Flag flag = Flag::ready;
    Mode mode = Mode::normal;
    int depth = 0;
    bool enabled = false;
    bool cancelled = false;
    bool data_complete = false;
    bool awaits_entry_event = false;  // ready, needs an observed entry
    bool has_exit_events = false;
    std::map<std::string, Value> inputs;   // bound input ports
    std::map<std::string, Value> outputs;  // bound output ports
  };

  size_t instance_count() const { return instances_.size(); }
  InstanceView view(int id) const;
  std::vector<InstanceView> views() const;

  /// Observation indices whose effects an entry observation for `id` would
  /// rely on: instance creation, control enablement and input deliveries.
  std::set<int> entry_dependencies(int id) const;
  /// Observation index that started `id` (-1 when started at startup).
  int started_by(int id) const;

 private:
  struct SplitNode {
    const SplitDecl* decl = nullptr;
    std::map<std::string, std::optional<Value>> params;
    std::optional<std::string> chosen;
  };
  struct JoinBranch {
    std::map<std::string, std::optional<Value>> data;
    bool control_required = false;
    bool enabled = false;
  };
  struct JoinNode {
    const JoinDecl* decl = nullptr;
    std::map<std::string, JoinBranch> branches;
    bool forwarded = false;
    std::string forwarded_branch;
  };
  struct Instance {
    int id = -1;
    const Ensemble* ens = nullptr;
    int parent = -1;
    std::string local;
    Flag flag = Flag::ready;
    Mode mode = Mode::normal;
    bool enabled = true;
    bool cancelled = false;
    int depth = 0;
    int arrival = -1;
    std::string snapshot;
    std::map<std::string, std::optional<Value>> inputs;
    std::map<std::string, std::optional<Value>> outputs;
    std::map<std::string, int> children;
    std::map<std::string, SplitNode> split_nodes;
    std::map<std::string, JoinNode> join_nodes;
    std::multimap<std::string, std::string> edges;  // trigger -> target
    bool subnet_active = false;
    bool outputs_boundable = false;

    // provenance, by observation index (-1 = during startup)
    int created_by = -1;
    int enabled_by = -1;
    int started_by = -1;
    std::map<std::string, int> input_sources;

    bool exitless() const { return ens->exit_events.empty(); }
    bool data_complete() const {
      for (const auto& [p, v] : inputs) {
        if (!v) return false;
      }
      return true;
    }
  };

  const SamModel& model_;
  EngineOptions opts_;
  PredicateRegistry registry_;
  FactStore facts_;
  // deque: create_instance must not invalidate live references
  std::deque<Instance> instances_;
  std::vector<EngineEffect>* effects_ = nullptr;
  std::vector<std::string> warnings_;
  bool diverged_ = false;
  int diverged_instance_ = -1;
  int arrival_counter_ = 0;
  int snapshot_counter_ = 0;
  int top_instance_ = -1;

  void emit(int inst, Disposition d, std::string detail,
            bool observed = false);
  void diverge(int inst, Disposition d, std::string detail);

  int create_instance(const std::string& ensemble, int parent,
                      const std::string& local, int obs);
  void activate_subnetwork(Instance& inst, int obs);
  void fire_trigger(Instance& scope, const std::string& trigger, int obs);
  void enable_target(Instance& scope, const std::string& target, int obs);
  bool start_instance(Instance& inst, int obs, bool observed);
  void complete_instance(Instance& inst, int obs, bool observed);
  void cancel_descendants(Instance& inst);
  void propagate(Instance& scope, const std::string& source,
                 const std::string& port, const Value& v, int obs);
  void deliver(Instance& scope, const std::string& dest,
               const std::string& port, const Value& v, int obs);
  void deliver_to_split(Instance& scope, SplitNode& node,
                        const std::string& port, const Value& v, int obs);
  void try_forward_join(Instance& scope, JoinNode& node, int obs);
  void try_start_data_driven(Instance& inst, int obs);
  void quiescence_pass(int obs);
  bool quiescent(const Instance& inst) const;
  Bindings make_bindings(const Instance& inst, bool with_outputs) const;
  bool eval_behavior_conditions(const Instance& inst,
                                const std::vector<Condition>& conds,
                                bool with_outputs, std::string* why) const;
  int innermost_running() const;

  bool process_exit(const Observation& o, int obs);
  bool process_entry(const Observation& o, int obs);
  bool process_allowable(const Observation& o, int obs);
};

}  // namespace sam
