#include <sstream>

#include "sam/model.hpp"

namespace sam {

std::string EventRef::to_text() const {
  if (!tag_filter && !param_pattern) return name;
  std::string out = "(" + name;
  if (tag_filter) out += std::string(" ") + tag_name(*tag_filter);
  if (param_pattern) {
    out += " (";
    for (size_t i = 0; i < param_pattern->size(); ++i) {
      if (i) out += ' ';
      const auto& slot = (*param_pattern)[i];
      out += slot ? *slot : "nil";
    }
    out += ")";
  }
  return out + ")";
}

const ComponentDecl* Ensemble::component(const std::string& local) const {
  for (const ComponentDecl& c : components) {
    if (c.local == local) return &c;
  }
  return nullptr;
}

const SplitDecl* Ensemble::split(const std::string& local) const {
  for (const SplitDecl& s : splits) {
    if (s.local == local) return &s;
  }
  return nullptr;
}

const JoinDecl* Ensemble::join(const std::string& local) const {
  for (const JoinDecl& j : joins) {
    if (j.local == local) return &j;
  }
  return nullptr;
}

const Ensemble* SamModel::ensemble(const std::string& name) const {
  auto it = ensembles.find(name);
  return it == ensembles.end() ? nullptr : &it->second;
}

const BehaviorModel* SamModel::behavior(const std::string& ensemble,
                                        Mode mode) const {
  auto it = behaviors.find({ensemble, mode});
  return it == behaviors.end() ? nullptr : &it->second;
}

const SplitModel* SamModel::split_model(const std::string& name) const {
  auto it = splits.find(name);
  return it == splits.end() ? nullptr : &it->second;
}

namespace {

void dump_refs(std::ostream& os, const char* label,
               const std::vector<EventRef>& refs) {
  os << ' ' << label << "=(";
  for (const EventRef& r : refs) os << r.to_text() << ' ';
  os << ')';
}

void dump_names(std::ostream& os, const char* label,
                const std::vector<std::string>& names) {
  os << ' ' << label << "=(";
  for (const std::string& n : names) os << n << ' ';
  os << ')';
}

void dump_conditions(std::ostream& os, const char* label,
                     const std::vector<Condition>& cs) {
  os << ' ' << label << "=(";
  for (const Condition& c : cs) os << c.to_text() << ' ';
  os << ')';
}

std::string model_signature(const SamModel& m) {
  std::ostringstream os;
  os.precision(17);
  for (const auto& [name, re] : m.registered_events) {
    os << "event " << name << ' ' << re.java_class << ' ' << re.java_method;
    for (const auto& [t, n] : re.params) os << " (" << t << ' ' << n << ')';
    if (re.static_on) os << " static=" << *re.static_on;
    if (re.output_type) {
      os << " out=(" << re.output_type->first << ' ' << re.output_type->second
         << ')';
    }
    if (re.bypass) os << " bypass=" << *re.bypass;
    for (const auto& [k, v] : re.extra_event_args) os << ' ' << k << '=' << v;
    os << '\n';
  }
  for (const auto& [name, e] : m.ensembles) {
    os << "ensemble " << name << (e.auto_entry ? " :auto" : "");
    dump_refs(os, "entry", e.entry_events);
    dump_refs(os, "exit", e.exit_events);
    dump_refs(os, "allow", e.allowable_events);
    dump_names(os, "in", e.inputs);
    dump_names(os, "out", e.outputs);
    os << " comps=(";
    for (const ComponentDecl& c : e.components) {
      os << '(' << c.local << ' ' << c.type;
      for (Mode md : c.declared_modes) os << ' ' << mode_name(md);
      os << ')';
    }
    os << ')';
    os << " ctrl=(";
    for (const ControlFlowDecl& cf : e.controlflows) {
      os << '(';
      for (const auto& [p, n] : cf.points) {
        os << (p == FlowPosition::before ? "before " : "after ") << n << ' ';
      }
      os << ')';
    }
    os << ") splits=(";
    for (const SplitDecl& s : e.splits) {
      os << '(' << s.local << ' ' << s.model << " (";
      for (const std::string& p : s.param_ports) os << p << ' ';
      os << ") (";
      for (const std::string& b : s.branches) os << b << ' ';
      os << "))";
    }
    os << ") joins=(";
    for (const JoinDecl& j : e.joins) {
      os << '(' << j.local << " (";
      for (const std::string& p : j.ports) os << p << ' ';
      os << ") (";
      for (const std::string& b : j.branches) os << b << ' ';
      os << "))";
    }
    os << ") flows=(";
    for (const DataFlow& f : e.dataflows) {
      os << '(';
      for (const auto& [p, c] : f.hops) os << p << ':' << c << ' ';
      os << ')';
    }
    os << ") res=(";
    for (const ResourceDecl& r : e.resources) {
      os << '(' << r.name << ' ' << r.res_type;
      for (const auto& [md, pr] : r.mode_priors) os << ' ' << md << '=' << pr;
      os << ')';
    }
    os << ") resmap=(";
    for (const auto& [c, r] : e.resource_mappings) os << c << ':' << r << ' ';
    os << ") modmap=(";
    for (const ModelMapping& mm : e.model_mappings) {
      os << '(' << mm.component << ' ' << mode_name(mm.component_mode) << " (";
      for (const auto& [r, md] : mm.resource_context) os << r << ':' << md << ' ';
      os << ") " << mm.probability << ')';
    }
    os << ") vulns=(";
    for (const auto& [r, v] : e.vulnerabilities) os << r << ':' << v << ' ';
    os << ")\n";
  }
  for (const auto& [key, b] : m.behaviors) {
    os << "behavior " << key.first << ' ' << mode_name(key.second);
    dump_names(os, "in", b.inputs);
    dump_names(os, "out", b.outputs);
    dump_refs(os, "allow", b.allowable_events);
    dump_conditions(os, "pre", b.prerequisites);
    dump_conditions(os, "post", b.postconditions);
    os << '\n';
  }
  for (const auto& [name, s] : m.splits) {
    os << "split " << name << " (";
    for (const std::string& p : s.params) os << p << ' ';
    os << ")";
    for (const auto& [b, c] : s.branches) os << " (" << b << ' ' << to_text(c) << ')';
    os << '\n';
  }
  for (const auto& [name, a] : m.attack_models) {
    os << "attack-model " << name << " types=(";
    for (const auto& [t, p] : a.attack_types) os << t << '=' << p << ' ';
    os << ") vulns=(";
    for (const auto& [v, t] : a.vulnerability_mapping) os << v << ':' << t << ' ';
    os << ")\n";
  }
  for (const AttackRule& r : m.attack_rules) {
    os << "rule " << r.name << (r.forward ? " :forward" : "") << " ?"
       << r.resource_var;
    if (r.res_type) os << " type=" << *r.res_type;
    if (r.attack_name) os << " attack=" << *r.attack_name;
    for (const auto& c : r.consequences) {
      os << " (" << c.attack << " ?" << c.resource_var << ' ' << c.resource_mode
         << ' ' << c.probability << ')';
    }
    os << '\n';
  }
  os << "top=" << (m.top_component ? *m.top_component : "<none>") << '\n';
  return os.str();
}

}  // namespace

bool SamModel::equivalent(const SamModel& other) const {
  return model_signature(*this) == model_signature(other);
}

}  // namespace sam
