#include "sam/check.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

namespace sam {

namespace {

constexpr double kProbSumTolerance = 1e-9;

class Checker {
 public:
  explicit Checker(const SamModel& m) : m_(m) {}

  std::vector<Finding> run() {
    check_top();
    for (const auto& [name, e] : m_.ensembles) check_ensemble(e);
    check_behaviors();
    check_attack_side();
    check_reachability();
    return std::move(findings_);
  }

 private:
  const SamModel& m_;
  std::vector<Finding> findings_;

  void add(Severity sev, std::string code, std::string message,
           SourcePos pos) {
    findings_.push_back({sev, std::move(code), std::move(message), pos});
  }
  void error(std::string code, std::string message, SourcePos pos) {
    add(Severity::error, std::move(code), std::move(message), pos);
  }
  void warn(std::string code, std::string message, SourcePos pos) {
    add(Severity::warning, std::move(code), std::move(message), pos);
  }

  void check_top() {
    std::set<std::string> referenced;
    for (const auto& [name, e] : m_.ensembles) {
      for (const ComponentDecl& c : e.components) referenced.insert(c.type);
    }
    std::vector<std::string> tops;
    for (const auto& [name, e] : m_.ensembles) {
      if (e.auto_entry && !referenced.count(name)) tops.push_back(name);
    }
    if (tops.empty()) {
      error("MissingTop",
            "no top component: no unreferenced ensemble with :auto entry",
            {});
    } else if (tops.size() > 1) {
      std::string list;
      for (const std::string& t : tops) list += " " + t;
      error("MultipleTop", "multiple top candidates:" + list, {});
    }
  }

  /// Names a dataflow/controlflow endpoint may refer to inside `e`.
  std::set<std::string> local_names(const Ensemble& e) const {
    std::set<std::string> names;
    names.insert(e.name);
    for (const ComponentDecl& c : e.components) names.insert(c.local);
    for (const SplitDecl& s : e.splits) {
      names.insert(s.local);
      for (const std::string& b : s.branches) names.insert(s.local + "-" + b);
    }
    for (const JoinDecl& j : e.joins) {
      names.insert(j.local);
      for (const std::string& b : j.branches) names.insert(j.local + "-" + b);
    }
    return names;
  }

  void check_probability(double p, const std::string& what, SourcePos pos) {
    if (p < 0.0 || p > 1.0) {
      std::ostringstream os;
      os << what << " probability " << p << " outside [0,1]";
      error("InvalidProbability", os.str(), pos);
    }
  }

  void check_ensemble(const Ensemble& e) {
    std::set<std::string> resources;
    for (const ResourceDecl& r : e.resources) resources.insert(r.name);
    std::set<std::string> locals = local_names(e);

    for (const ComponentDecl& c : e.components) {
      if (!m_.ensemble(c.type)) {
        error("DanglingComponentType",
              e.name + ": component " + c.local + " has unknown type " +
                  c.type,
              c.pos);
      }
      if (!c.declared_modes.count(Mode::normal)) {
        error("ModesMissingNormal",
              e.name + ": component " + c.local + " lacks the normal mode",
              c.pos);
      }
      for (Mode md : c.declared_modes) {
        if (m_.ensemble(c.type) && !m_.behavior(c.type, md)) {
          warn("MissingBehavior",
               e.name + ": no behavior model for (" + c.type + " " +
                   mode_name(md) + ")",
               c.pos);
        }
      }
    }

    for (const SplitDecl& s : e.splits) {
      const SplitModel* sm = m_.split_model(s.model);
      if (!sm) {
        error("DanglingSplitModel",
              e.name + ": split " + s.local + " references unknown model " +
                  s.model,
              s.pos);
        continue;
      }
      std::set<std::string> model_branches;
      for (const auto& [b, c] : sm->branches) model_branches.insert(b);
      for (const std::string& b : s.branches) {
        if (!model_branches.count(b)) {
          error("DanglingBranch",
                e.name + ": split " + s.local + " lists branch " + b +
                    " not defined by " + s.model,
                s.pos);
        }
      }
    }

    for (const ControlFlowDecl& cf : e.controlflows) {
      for (const auto& [pos, endpoint] : cf.points) {
        if (!locals.count(endpoint)) {
          warn("DanglingComponent",
               e.name + ": controlflow endpoint " + endpoint +
                   " does not resolve",
               cf.pos);
        }
      }
    }
    for (const DataFlow& f : e.dataflows) {
      for (const auto& [port, comp] : f.hops) {
        if (!locals.count(comp)) {
          warn("DanglingComponent",
               e.name + ": dataflow endpoint " + comp + " does not resolve",
               f.pos);
        }
      }
    }

    for (const auto& [comp, res] : e.resource_mappings) {
      if (!locals.count(comp)) {
        warn("DanglingComponent",
             e.name + ": resource mapping names unknown component " + comp,
             e.pos);
      }
      if (!resources.count(res)) {
        error("DanglingResource",
              e.name + ": resource mapping names undeclared resource " + res,
              e.pos);
      }
    }
    for (const auto& [res, vuln] : e.vulnerabilities) {
      if (!resources.count(res)) {
        error("DanglingResource",
              e.name + ": vulnerability names undeclared resource " + res,
              e.pos);
      }
    }

    for (const ResourceDecl& r : e.resources) {
      double sum = 0.0;
      for (const auto& [md, p] : r.mode_priors) {
        check_probability(p, e.name + "/" + r.name, r.pos);
        sum += p;
      }
      if (std::fabs(sum - 1.0) > kProbSumTolerance) {
        std::ostringstream os;
        os << e.name << ": priors of resource " << r.name << " sum to " << sum;
        warn("ProbSum", os.str(), r.pos);
      }
    }

    // Mode probabilities must sum to 1 per (component, resource context).
    std::map<std::string, std::pair<double, SourcePos>> groups;
    std::vector<std::string> group_order;
    for (const ModelMapping& mm : e.model_mappings) {
      check_probability(mm.probability,
                        e.name + "/" + mm.component + " mapping", mm.pos);
      if (!locals.count(mm.component)) {
        warn("DanglingComponent",
             e.name + ": model mapping names unknown component " +
                 mm.component,
             mm.pos);
      }
      for (const auto& [res, md] : mm.resource_context) {
        if (!resources.count(res)) {
          error("DanglingResource",
                e.name + ": model mapping context names undeclared resource " +
                    res,
                mm.pos);
        }
      }
      auto ctx = mm.resource_context;
      std::sort(ctx.begin(), ctx.end());
      std::string key = mm.component + " (";
      for (const auto& [res, md] : ctx) key += res + " " + md + " ";
      key += ")";
      auto [it, fresh] = groups.try_emplace(key, 0.0, mm.pos);
      it->second.first += mm.probability;
      if (fresh) group_order.push_back(key);
    }
    for (const std::string& key : group_order) {
      const auto& [sum, pos] = groups.at(key);
      if (std::fabs(sum - 1.0) > kProbSumTolerance) {
        std::ostringstream os;
        os << e.name << ": mode probabilities for " << key << " sum to "
           << sum;
        warn("ProbSum", os.str(), pos);
      }
    }

    if (!m_.registered_events.empty()) {
      auto check_refs = [&](const std::vector<EventRef>& refs) {
        for (const EventRef& r : refs) {
          if (!m_.registered_events.count(r.name)) {
            warn("UnregisteredEvent",
                 e.name + ": event " + r.name + " is not registered", r.pos);
          }
        }
      };
      check_refs(e.entry_events);
      check_refs(e.exit_events);
      check_refs(e.allowable_events);
    }
  }

  void check_behaviors() {
    for (const auto& [key, b] : m_.behaviors) {
      const Ensemble* e = m_.ensemble(b.component);
      if (!e) {
        error("DanglingBehavior",
              "behavior model for unknown ensemble " + b.component, b.pos);
        continue;
      }
      if (b.inputs != e->inputs || b.outputs != e->outputs) {
        warn("IoMismatch",
             "behavior (" + b.component + " " + mode_name(b.mode) +
                 ") declares different inputs/outputs than its ensemble",
             b.pos);
      }
    }
  }

  void check_attack_side() {
    std::set<std::string> covered_vulns;
    std::set<std::string> attack_names;
    for (const auto& [name, am] : m_.attack_models) {
      for (const auto& [atk, p] : am.attack_types) {
        check_probability(p, "attack " + atk, am.pos);
        attack_names.insert(atk);
      }
      for (const auto& [vuln, atk] : am.vulnerability_mapping) {
        covered_vulns.insert(vuln);
        if (!attack_names.count(atk)) {
          error("DanglingAttack",
                name + ": vulnerability mapping names unknown attack " + atk,
                am.pos);
        }
      }
    }

    std::set<std::string> declared_res_types;
    for (const auto& [name, e] : m_.ensembles) {
      for (const ResourceDecl& r : e.resources) {
        declared_res_types.insert(r.res_type);
      }
      for (const auto& [res, vuln] : e.vulnerabilities) {
        if (!covered_vulns.count(vuln)) {
          warn("UncoveredVulnerability",
               name + ": vulnerability " + vuln +
                   " is not mapped by any attack model",
               e.pos);
        }
      }
    }

    for (const AttackRule& r : m_.attack_rules) {
      for (const AttackRule::Consequence& c : r.consequences) {
        check_probability(c.probability, "rule " + r.name, r.pos);
        if (c.resource_var != r.resource_var) {
          error("UnboundRuleVar",
                "rule " + r.name + ": consequence variable ?" +
                    c.resource_var + " is not bound by the premises",
                r.pos);
        }
      }
      if (r.attack_name && !attack_names.count(*r.attack_name)) {
        warn("DanglingAttack",
             "rule " + r.name + ": premise names unknown attack " +
                 *r.attack_name,
             r.pos);
      }
      if (r.res_type && !declared_res_types.count(*r.res_type)) {
        warn("VacuousRule",
             "rule " + r.name + ": no declared resource has type " +
                 *r.res_type,
             r.pos);
      }
    }
  }

  void check_reachability() {
    if (!m_.top_component) return;
    std::set<std::string> reached;
    std::vector<std::string> frontier{*m_.top_component};
    while (!frontier.empty()) {
      std::string cur = frontier.back();
      frontier.pop_back();
      if (!reached.insert(cur).second) continue;
      const Ensemble* e = m_.ensemble(cur);
      if (!e) continue;
      for (const ComponentDecl& c : e->components) frontier.push_back(c.type);
    }
    for (const auto& [name, e] : m_.ensembles) {
      if (!reached.count(name)) {
        warn("UnreachableEnsemble",
             name + " is not reachable from " + *m_.top_component, e.pos);
      }
    }
  }
};

}  // namespace

std::string Finding::to_text() const {
  std::string out = severity == Severity::error ? "error" : "warning";
  out += "[" + code + "] " + message;
  if (pos.valid()) out += " (" + pos.to_string() + ")";
  return out;
}

std::vector<Finding> check_model(const SamModel& m) { return Checker(m).run(); }

bool has_errors(const std::vector<Finding>& findings) {
  return std::any_of(findings.begin(), findings.end(), [](const Finding& f) {
    return f.severity == Severity::error;
  });
}

size_t count_code(const std::vector<Finding>& findings,
                  const std::string& code) {
  return std::count_if(
      findings.begin(), findings.end(),
      [&](const Finding& f) { return f.code == code; });
}

}  // namespace sam
