#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "sam/conditions.hpp"
#include "sam/sexpr.hpp"
#include "sam/value.hpp"

namespace sam {

/// Instrumentation point registered at the top of a model. The Java names
/// are recorded as metadata only; no class analysis happens here.
struct RegisteredEvent {
  std::string name;
  std::string java_class;
  std::string java_method;
  std::vector<std::pair<std::string, std::string>> params;  // (type, name)
  std::optional<std::string> static_on;
  std::optional<std::pair<std::string, std::string>> output_type;
  std::optional<std::string> bypass;
  std::map<std::string, std::string> extra_event_args;  // event-name -> object
  SourcePos pos;
};

/// Reference to an event inside entry/exit/allowable lists. A missing tag
/// filter matches both entry and exit occurrences; pattern slots are port
/// names, with nullopt standing for a nil wildcard.
struct EventRef {
  std::string name;
  std::optional<Tag> tag_filter;
  std::optional<std::vector<std::optional<std::string>>> param_pattern;
  SourcePos pos;

  std::string to_text() const;
};

struct ComponentDecl {
  std::string local;
  std::string type;                 // ensemble name
  std::set<Mode> declared_modes;    // subset of {normal, compromised}
  SourcePos pos;
};

enum class FlowPosition { before, after };

/// One controlflow clause, kept as the written (position, endpoint) pairs;
/// the execution engine normalizes pairs into directed edges.
struct ControlFlowDecl {
  std::vector<std::pair<FlowPosition, std::string>> points;
  SourcePos pos;
};

struct SplitDecl {
  std::string local;
  std::string model;  // split model name
  std::vector<std::string> param_ports;
  std::vector<std::string> branches;
  SourcePos pos;
};

struct JoinDecl {
  std::string local;
  std::vector<std::string> ports;
  std::vector<std::string> branches;
  SourcePos pos;
};

struct DataFlow {
  std::vector<std::pair<std::string, std::string>> hops;  // (port, component)
  SourcePos pos;
};

struct ResourceDecl {
  std::string name;
  std::string res_type;
  std::map<std::string, double> mode_priors;  // "normal" / "hacked"
  SourcePos pos;
};

struct ModelMapping {
  std::string component;  // local name
  Mode component_mode = Mode::normal;
  std::vector<std::pair<std::string, std::string>> resource_context;
  double probability = 0.0;
  SourcePos pos;
};

struct Ensemble {
  std::string name;
  bool auto_entry = false;
  std::vector<EventRef> entry_events;
  std::vector<EventRef> exit_events;
  std::vector<EventRef> allowable_events;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<ComponentDecl> components;
  std::vector<ControlFlowDecl> controlflows;
  std::vector<SplitDecl> splits;
  std::vector<JoinDecl> joins;
  std::vector<DataFlow> dataflows;
  std::vector<ResourceDecl> resources;
  std::vector<std::pair<std::string, std::string>> resource_mappings;
  std::vector<ModelMapping> model_mappings;
  std::vector<std::pair<std::string, std::string>> vulnerabilities;
  SourcePos pos;

  const ComponentDecl* component(const std::string& local) const;
  const SplitDecl* split(const std::string& local) const;
  const JoinDecl* join(const std::string& local) const;
};

struct BehaviorModel {
  std::string component;  // ensemble name
  Mode mode = Mode::normal;
  std::vector<std::string> inputs;
  std::vector<std::string> outputs;
  std::vector<EventRef> allowable_events;
  std::vector<Condition> prerequisites;
  std::vector<Condition> postconditions;
  SourcePos pos;
};

struct SplitModel {
  std::string name;
  std::vector<std::string> params;
  std::vector<std::pair<std::string, SExpr>> branches;  // (branch, condition)
  SourcePos pos;
};

struct AttackModel {
  std::string name;
  std::vector<std::pair<std::string, double>> attack_types;  // (name, prior)
  std::vector<std::pair<std::string, std::string>>
      vulnerability_mapping;  // (vulnerability, attack)
  SourcePos pos;
};

struct AttackRule {
  struct Consequence {
    std::string attack;
    std::string resource_var;
    std::string resource_mode;  // "normal" / "hacked"
    double probability = 0.0;
  };

  std::string name;
  bool forward = true;
  std::string resource_var;                // from the [resource ...] premise
  std::optional<std::string> res_type;     // [resource-type-of ...]
  std::optional<std::string> attack_name;  // [resource-might-have-been-attacked ...]
  std::vector<Consequence> consequences;
  SourcePos pos;
};

struct SamModel {
  std::map<std::string, RegisteredEvent> registered_events;
  std::map<std::string, Ensemble> ensembles;
  std::map<std::pair<std::string, Mode>, BehaviorModel> behaviors;
  std::map<std::string, SplitModel> splits;
  std::map<std::string, AttackModel> attack_models;
  std::vector<AttackRule> attack_rules;
  std::optional<std::string> top_component;
  /// Names in the order their defining forms appeared, for diagnostics.
  std::vector<std::string> declaration_order;

  const Ensemble* ensemble(const std::string& name) const;
  const BehaviorModel* behavior(const std::string& ensemble, Mode mode) const;
  const SplitModel* split_model(const std::string& name) const;

  /// Structural equality up to declaration-order metadata.
  bool equivalent(const SamModel& other) const;
};

/// Selects the branch whose condition holds for the given arguments.
/// Built-in condition functions are `equal` and `not`; other heads
/// dispatch to the predicate registry against the live facts.
/// Throws EvalError: NoBranchTaken, AmbiguousSplit, UnknownPredicate.
std::string eval_split(const SplitModel& sm, const std::vector<Value>& args,
                       const FactStore& facts,
                       const PredicateRegistry& registry);

/// Registers a fact-backed predicate for every non-built-in function name
/// the model's split conditions and behavioral calls mention.
void register_model_predicates(const SamModel& m, PredicateRegistry& registry);

}  // namespace sam
