#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sam/sexpr.hpp"
#include "sam/state.hpp"

namespace sam {

/// Behavioral condition: a data-structure-consistency claim, a classical
/// connective, or a call into the predicate registry with an optional
/// before/after situation marker.
struct Condition {
  enum class Kind { Dscs, Not, And, Or, Call };

  struct Param {
    bool is_member = false;
    std::string member;  // accessor name when is_member
    std::string var;     // bound variable name (without '?')
  };

  Kind kind = Kind::Dscs;

  // Dscs
  std::string object_var;
  std::string ds_type;
  bool good = false;

  // Not / And / Or
  std::vector<Condition> children;

  // Call
  std::string fn;
  std::vector<Param> params;
  /// "before-<component>" or "after-<component>" when present.
  std::optional<std::string> situation;

  SourcePos pos;

  static Condition dscs(std::string var, std::string type, bool good);
  static Condition negate(Condition inner);
  static Condition conj(std::vector<Condition> items);
  static Condition disj(std::vector<Condition> items);

  std::string to_text() const;
};

class EvalError : public std::runtime_error {
 public:
  EvalError(std::string code, const std::string& message)
      : std::runtime_error(message), code_(std::move(code)) {}
  const std::string& code() const { return code_; }

 private:
  std::string code_;
};

/// Context handed to registered predicates: the live fact store plus the
/// snapshot label to use for before-situations (empty when evaluating
/// against live facts only).
struct PredicateContext {
  const FactStore* facts = nullptr;
  std::optional<std::string> before_label;
};

using PredicateFn =
    std::function<bool(const std::vector<Value>&, const PredicateContext&)>;

/// Resolution table for application-specific predicates. dscs and
/// add-to-map ship as built-ins; fact-backed predicates can be registered
/// for names the model itself introduces. Unknown names raise
/// EvalError("UnknownPredicate").
class PredicateRegistry {
 public:
  static PredicateRegistry with_builtins();

  void register_predicate(std::string name, PredicateFn fn);
  /// Registers `name` as a plain fact lookup: (name v1 ... vn) holds iff
  /// that fact is in the live store.
  void register_fact_predicate(const std::string& name);
  bool has(const std::string& name) const;
  bool call(const std::string& name, const std::vector<Value>& args,
            const PredicateContext& ctx) const;

 private:
  std::map<std::string, PredicateFn> fns_;
};

using Bindings = std::map<std::string, Value>;

/// Evaluates a behavioral condition. Every variable must be bound
/// (EvalError("UnboundVariable") otherwise). Call conditions with a
/// ?before-X situation evaluate against the snapshot named by
/// `situation_base`; ?after-X and plain calls see the live facts.
bool eval_condition(const Condition& c, const Bindings& bindings,
                    const FactStore& facts, const std::string& situation_base,
                    const PredicateRegistry& registry);

}  // namespace sam
