#include <algorithm>

#include "sam/conditions.hpp"
#include "sam/model.hpp"

namespace sam {

Condition Condition::dscs(std::string var, std::string type, bool good) {
  Condition c;
  c.kind = Kind::Dscs;
  c.object_var = std::move(var);
  c.ds_type = std::move(type);
  c.good = good;
  return c;
}

Condition Condition::negate(Condition inner) {
  Condition c;
  c.kind = Kind::Not;
  c.children.push_back(std::move(inner));
  return c;
}

Condition Condition::conj(std::vector<Condition> items) {
  Condition c;
  c.kind = Kind::And;
  c.children = std::move(items);
  return c;
}

Condition Condition::disj(std::vector<Condition> items) {
  Condition c;
  c.kind = Kind::Or;
  c.children = std::move(items);
  return c;
}

std::string Condition::to_text() const {
  switch (kind) {
    case Kind::Dscs:
      return "[dscs ?" + object_var + " " + ds_type + (good ? " good]" : "]");
    case Kind::Not:
      return "[not " + children.front().to_text() + "]";
    case Kind::And:
    case Kind::Or: {
      std::string out = kind == Kind::And ? "[and" : "[or";
      for (const Condition& c : children) out += " " + c.to_text();
      return out + "]";
    }
    case Kind::Call: {
      std::string out = "[" + fn;
      for (const Param& p : params) {
        out += p.is_member ? " (" + p.member + " ?" + p.var + ")" : " ?" + p.var;
      }
      if (situation) out += " ?" + *situation;
      return out + "]";
    }
  }
  return "[?]";
}

PredicateRegistry PredicateRegistry::with_builtins() {
  PredicateRegistry reg;
  reg.register_fact_predicate("dscs");
  reg.register_predicate(
      "add-to-map",
      [](const std::vector<Value>& args, const PredicateContext& ctx) {
        Fact f{"map-entry", args};
        if (!ctx.facts->holds(f)) return false;
        if (ctx.before_label && ctx.facts->has_snapshot(*ctx.before_label) &&
            ctx.facts->holds_at(*ctx.before_label, f)) {
          return false;
        }
        return true;
      });
  return reg;
}

void PredicateRegistry::register_predicate(std::string name, PredicateFn fn) {
  fns_[std::move(name)] = std::move(fn);
}

void PredicateRegistry::register_fact_predicate(const std::string& name) {
  fns_[name] = [name](const std::vector<Value>& args,
                      const PredicateContext& ctx) {
    return ctx.facts->holds(Fact{name, args});
  };
}

bool PredicateRegistry::has(const std::string& name) const {
  return fns_.count(name) > 0;
}

bool PredicateRegistry::call(const std::string& name,
                             const std::vector<Value>& args,
                             const PredicateContext& ctx) const {
  auto it = fns_.find(name);
  if (it == fns_.end()) {
    throw EvalError("UnknownPredicate", "unknown predicate: " + name);
  }
  return it->second(args, ctx);
}

namespace {

const Value& lookup_binding(const Bindings& bindings, const std::string& var) {
  auto it = bindings.find(var);
  if (it == bindings.end()) {
    throw EvalError("UnboundVariable", "unbound variable: ?" + var);
  }
  return it->second;
}

}  // namespace

bool eval_condition(const Condition& c, const Bindings& bindings,
                    const FactStore& facts, const std::string& situation_base,
                    const PredicateRegistry& registry) {
  switch (c.kind) {
    case Condition::Kind::Dscs: {
      Fact f;
      f.pred = "dscs";
      f.args.push_back(lookup_binding(bindings, c.object_var));
      f.args.push_back(Value::text(c.ds_type));
      if (c.good) f.args.push_back(Value::text("good"));
      return facts.holds(f);
    }
    case Condition::Kind::Not:
      return !eval_condition(c.children.front(), bindings, facts,
                             situation_base, registry);
    case Condition::Kind::And:
      return std::all_of(c.children.begin(), c.children.end(),
                         [&](const Condition& k) {
                           return eval_condition(k, bindings, facts,
                                                 situation_base, registry);
                         });
    case Condition::Kind::Or:
      return std::any_of(c.children.begin(), c.children.end(),
                         [&](const Condition& k) {
                           return eval_condition(k, bindings, facts,
                                                 situation_base, registry);
                         });
    case Condition::Kind::Call: {
      std::vector<Value> args;
      args.reserve(c.params.size());
      for (const Condition::Param& p : c.params) {
        const Value& v = lookup_binding(bindings, p.var);
        if (p.is_member) {
          args.push_back(Value::tuple({Value::text(p.member), v}));
        } else {
          args.push_back(v);
        }
      }
      PredicateContext ctx;
      ctx.facts = &facts;
      if (c.situation && c.situation->rfind("before-", 0) == 0) {
        ctx.before_label = situation_base;
      }
      return registry.call(c.fn, args, ctx);
    }
  }
  return false;
}

namespace {

Value eval_split_value(const SExpr& e, const Bindings& bindings);

Value quoted_to_value(const SExpr& e) {
  switch (e.kind) {
    case SExpr::Kind::Symbol:
    case SExpr::Kind::Keyword:
    case SExpr::Kind::Str:
      return Value::text(e.text);
    case SExpr::Kind::Num:
      return Value::number(e.num);
    case SExpr::Kind::List:
    case SExpr::Kind::Bracket: {
      std::vector<Value> items;
      for (const SExpr& k : e.items) items.push_back(quoted_to_value(k));
      return Value::tuple(std::move(items));
    }
    case SExpr::Kind::Quoted:
      return quoted_to_value(e.items.front());
    case SExpr::Kind::Var:
      return Value::text(e.text);
  }
  return Value::nil();
}

Value eval_split_value(const SExpr& e, const Bindings& bindings) {
  switch (e.kind) {
    case SExpr::Kind::Var:
      return lookup_binding(bindings, e.text);
    case SExpr::Kind::Quoted:
      return quoted_to_value(e.items.front());
    case SExpr::Kind::Symbol:
      if (e.text == "nil") return Value::nil();
      return Value::text(e.text);
    case SExpr::Kind::Str:
      return Value::text(e.text);
    case SExpr::Kind::Num:
      return Value::number(e.num);
    default:
      throw EvalError("MalformedSplitCondition",
                      "cannot evaluate split operand: " + to_text(e));
  }
}

bool eval_split_bool(const SExpr& e, const Bindings& bindings,
                     const FactStore& facts,
                     const PredicateRegistry& registry) {
  if (!e.is_list() || e.items.empty() || !e.items.front().is_symbol()) {
    throw EvalError("MalformedSplitCondition",
                    "split condition must be (fn args...): " + to_text(e));
  }
  const std::string& head = e.items.front().text;
  if (head == "equal") {
    if (e.items.size() != 3) {
      throw EvalError("MalformedSplitCondition", "equal expects 2 arguments");
    }
    return eval_split_value(e.items[1], bindings) ==
           eval_split_value(e.items[2], bindings);
  }
  if (head == "not") {
    if (e.items.size() != 2) {
      throw EvalError("MalformedSplitCondition", "not expects 1 argument");
    }
    return !eval_split_bool(e.items[1], bindings, facts, registry);
  }
  if (head == "and" || head == "or") {
    bool conj = head == "and";
    for (size_t i = 1; i < e.items.size(); ++i) {
      bool b = eval_split_bool(e.items[i], bindings, facts, registry);
      if (conj && !b) return false;
      if (!conj && b) return true;
    }
    return conj;
  }
  std::vector<Value> args;
  for (size_t i = 1; i < e.items.size(); ++i) {
    args.push_back(eval_split_value(e.items[i], bindings));
  }
  PredicateContext ctx;
  ctx.facts = &facts;
  return registry.call(head, args, ctx);
}

}  // namespace

std::string eval_split(const SplitModel& sm, const std::vector<Value>& args,
                       const FactStore& facts,
                       const PredicateRegistry& registry) {
  if (args.size() != sm.params.size()) {
    throw EvalError("SplitArity", "split " + sm.name + " expects " +
                                      std::to_string(sm.params.size()) +
                                      " arguments, got " +
                                      std::to_string(args.size()));
  }
  Bindings bindings;
  for (size_t i = 0; i < sm.params.size(); ++i) bindings[sm.params[i]] = args[i];

  std::vector<std::string> taken;
  for (const auto& [branch, cond] : sm.branches) {
    if (eval_split_bool(cond, bindings, facts, registry)) taken.push_back(branch);
  }
  if (taken.empty()) {
    throw EvalError("NoBranchTaken", "no branch of " + sm.name + " holds");
  }
  if (taken.size() > 1) {
    throw EvalError("AmbiguousSplit", "branches " + taken[0] + " and " +
                                          taken[1] + " of " + sm.name +
                                          " both hold");
  }
  return taken.front();
}

namespace {

void collect_split_heads(const SExpr& e, std::vector<std::string>& out) {
  if (!e.is_list() || e.items.empty() || !e.items.front().is_symbol()) return;
  const std::string& head = e.items.front().text;
  if (head == "equal") return;
  if (head == "not" || head == "and" || head == "or") {
    for (size_t i = 1; i < e.items.size(); ++i) {
      collect_split_heads(e.items[i], out);
    }
    return;
  }
  out.push_back(head);
}

void collect_condition_fns(const Condition& c, std::vector<std::string>& out) {
  if (c.kind == Condition::Kind::Call) out.push_back(c.fn);
  for (const Condition& k : c.children) collect_condition_fns(k, out);
}

}  // namespace

void register_model_predicates(const SamModel& m, PredicateRegistry& registry) {
  std::vector<std::string> names;
  for (const auto& [name, sm] : m.splits) {
    for (const auto& [branch, cond] : sm.branches) {
      collect_split_heads(cond, names);
    }
  }
  for (const auto& [key, b] : m.behaviors) {
    for (const Condition& c : b.prerequisites) collect_condition_fns(c, names);
    for (const Condition& c : b.postconditions) collect_condition_fns(c, names);
  }
  for (const std::string& name : names) {
    if (!registry.has(name)) registry.register_fact_predicate(name);
  }
}

}  // namespace sam
