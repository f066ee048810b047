#include "sam/loader.hpp"

#include <set>

namespace sam {

namespace {

[[noreturn]] void malformed(const SExpr& e, const std::string& expected) {
  throw LoadError("MalformedClause", "expected " + expected + ", got " +
                                         to_text(e),
                  e.pos);
}

const std::string& symbol_name(const SExpr& e, const char* what) {
  if (!e.is_symbol()) malformed(e, what);
  return e.text;
}

/// Accepts sym, 'sym or "sym"; register-event clauses quote liberally.
std::string name_like(const SExpr& e, const char* what) {
  switch (e.kind) {
    case SExpr::Kind::Symbol:
    case SExpr::Kind::Str:
      return e.text;
    case SExpr::Kind::Quoted:
      return name_like(e.items.front(), what);
    default:
      malformed(e, what);
  }
}

double probability_value(const SExpr& e) {
  if (!e.is_num()) malformed(e, "probability literal");
  return e.num;
}

Mode parse_component_mode(const SExpr& e) {
  const std::string& n = symbol_name(e, "normal or compromised");
  if (n == "normal") return Mode::normal;
  if (n == "compromised") return Mode::compromised;
  malformed(e, "normal or compromised");
}

std::string parse_resource_mode(const SExpr& e) {
  const std::string& n = symbol_name(e, "normal or hacked");
  if (n != "normal" && n != "hacked") malformed(e, "normal or hacked");
  return n;
}

std::vector<std::string> parse_name_list(const SExpr& e, const char* what) {
  if (!e.is_list()) malformed(e, std::string("(") + what + "...)");
  std::vector<std::string> out;
  for (const SExpr& k : e.items) out.push_back(symbol_name(k, what));
  return out;
}

EventRef parse_event_ref(const SExpr& e) {
  EventRef ref;
  ref.pos = e.pos;
  if (e.is_symbol()) {
    ref.name = e.text;
    return ref;
  }
  if (!e.is_list() || e.items.empty()) malformed(e, "event reference");
  ref.name = symbol_name(e.items[0], "event name");
  size_t i = 1;
  if (i < e.items.size() && e.items[i].is_symbol()) {
    const std::string& t = e.items[i].text;
    if (t == "entry") {
      ref.tag_filter = Tag::entry;
      ++i;
    } else if (t == "exit") {
      ref.tag_filter = Tag::exit;
      ++i;
    } else {
      malformed(e.items[i], "entry or exit");
    }
  }
  if (i < e.items.size()) {
    if (!e.items[i].is_list()) malformed(e.items[i], "parameter pattern");
    std::vector<std::optional<std::string>> pattern;
    for (const SExpr& slot : e.items[i].items) {
      if (slot.is_symbol("nil")) {
        pattern.push_back(std::nullopt);
      } else if (slot.is_symbol() || slot.kind == SExpr::Kind::Var) {
        pattern.push_back(slot.text);
      } else {
        malformed(slot, "pattern slot");
      }
    }
    ref.param_pattern = std::move(pattern);
    ++i;
  }
  if (i != e.items.size()) malformed(e, "event reference");
  return ref;
}

std::vector<EventRef> parse_event_refs(const SExpr& e) {
  if (!e.is_list()) malformed(e, "event list");
  std::vector<EventRef> out;
  for (const SExpr& k : e.items) out.push_back(parse_event_ref(k));
  return out;
}

Condition parse_condition(const SExpr& e) {
  if (!e.is_bracket() || e.items.empty()) {
    malformed(e, "[condition ...]");
  }
  Condition c;
  c.pos = e.pos;
  const SExpr& head = e.items[0];
  const std::string& h = symbol_name(head, "condition head");
  if (h == "not") {
    if (e.items.size() != 2) malformed(e, "[not cond]");
    return Condition::negate(parse_condition(e.items[1]));
  }
  if (h == "and" || h == "or") {
    std::vector<Condition> kids;
    for (size_t i = 1; i < e.items.size(); ++i) {
      kids.push_back(parse_condition(e.items[i]));
    }
    Condition out = h == "and" ? Condition::conj(std::move(kids))
                               : Condition::disj(std::move(kids));
    out.pos = e.pos;
    return out;
  }
  if (h == "dscs") {
    if (e.items.size() < 3 || e.items.size() > 4) {
      malformed(e, "[dscs ?obj type [good]]");
    }
    if (e.items[1].kind != SExpr::Kind::Var) malformed(e.items[1], "?object");
    bool good = false;
    if (e.items.size() == 4) {
      if (!e.items[3].is_symbol("good")) malformed(e.items[3], "good");
      good = true;
    }
    Condition out = Condition::dscs(e.items[1].text,
                                    symbol_name(e.items[2], "object type"),
                                    good);
    out.pos = e.pos;
    return out;
  }
  // Special-function call with optional trailing ?before-X / ?after-X marker.
  c.kind = Condition::Kind::Call;
  c.fn = h;
  for (size_t i = 1; i < e.items.size(); ++i) {
    const SExpr& p = e.items[i];
    if (p.kind == SExpr::Kind::Var) {
      bool is_marker = p.text.rfind("before-", 0) == 0 ||
                       p.text.rfind("after-", 0) == 0;
      if (is_marker && i + 1 == e.items.size()) {
        c.situation = p.text;
        break;
      }
      c.params.push_back({false, "", p.text});
    } else if (p.is_list() && p.items.size() == 2 &&
               p.items[0].is_symbol() &&
               p.items[1].kind == SExpr::Kind::Var) {
      c.params.push_back({true, p.items[0].text, p.items[1].text});
    } else {
      malformed(p, "?var or (member ?var)");
    }
  }
  return c;
}

std::vector<Condition> parse_conditions(const SExpr& e) {
  if (!e.is_list()) malformed(e, "condition list");
  std::vector<Condition> out;
  for (const SExpr& k : e.items) out.push_back(parse_condition(k));
  return out;
}

class Loader {
 public:
  SamModel take() && { return std::move(model_); }

  void load_form(const SExpr& form) {
    if (!form.is_list() || form.items.empty() || !form.items[0].is_symbol()) {
      throw LoadError("UnknownTopForm",
                      "top-level form must be (head ...): " + to_text(form),
                      form.pos);
    }
    const std::string& head = form.items[0].text;
    if (head == "register-event") {
      load_register_event(form);
    } else if (head == "define-ensemble") {
      load_ensemble(form);
    } else if (head == "defbehavior-model") {
      load_behavior(form);
    } else if (head == "defsplit") {
      load_split(form);
    } else if (head == "define-attack-model") {
      load_attack_model(form);
    } else if (head == "defrule") {
      load_rule(form);
    } else {
      throw LoadError("UnknownTopForm", "unknown top-level form: " + head,
                      form.pos);
    }
  }

  void finish() {
    std::set<std::string> referenced;
    for (const auto& [name, e] : model_.ensembles) {
      for (const ComponentDecl& c : e.components) referenced.insert(c.type);
    }
    std::vector<std::string> tops;
    for (const auto& [name, e] : model_.ensembles) {
      if (e.auto_entry && !referenced.count(name)) tops.push_back(name);
    }
    if (tops.size() == 1) model_.top_component = tops.front();
  }

 private:
  SamModel model_;

  void duplicate_check(bool exists, const std::string& what,
                       const std::string& name, SourcePos pos) {
    if (exists) {
      throw LoadError("DuplicateDefinition",
                      "duplicate " + what + ": " + name, pos);
    }
  }

  void load_register_event(const SExpr& form) {
    if (form.items.size() < 5) {
      malformed(form, "(register-event 'name class method '(params) ...)");
    }
    RegisteredEvent re;
    re.pos = form.pos;
    re.name = name_like(form.items[1], "event name");
    re.java_class = name_like(form.items[2], "class name");
    re.java_method = name_like(form.items[3], "method name");
    const SExpr* params = &form.items[4];
    if (params->kind == SExpr::Kind::Quoted) params = &params->items.front();
    if (!params->is_list()) malformed(form.items[4], "parameter list");
    for (const SExpr& p : params->items) {
      if (!p.is_list() || p.items.size() != 2) {
        malformed(p, "(param-type param-name)");
      }
      re.params.emplace_back(name_like(p.items[0], "parameter type"),
                             name_like(p.items[1], "parameter name"));
    }
    for (size_t i = 5; i < form.items.size(); i += 2) {
      const SExpr& k = form.items[i];
      if (k.kind != SExpr::Kind::Keyword) malformed(k, ":clause");
      if (i + 1 >= form.items.size()) malformed(k, ":clause value");
      const SExpr& v = form.items[i + 1];
      if (k.text == "static") {
        re.static_on = name_like(v, "object name");
      } else if (k.text == "output-type") {
        if (!v.is_list() || v.items.size() != 2) malformed(v, "(type name)");
        re.output_type = {name_like(v.items[0], "type"),
                          name_like(v.items[1], "name")};
      } else if (k.text == "bypass") {
        re.bypass = name_like(v, "object name");
      } else {
        re.extra_event_args[k.text] = name_like(v, "object name");
      }
    }
    duplicate_check(model_.registered_events.count(re.name) > 0,
                    "registered event", re.name, form.pos);
    model_.declaration_order.push_back(re.name);
    model_.registered_events.emplace(re.name, std::move(re));
  }

  void load_ensemble(const SExpr& form) {
    if (form.items.size() < 2) malformed(form, "(define-ensemble name ...)");
    Ensemble e;
    e.pos = form.pos;
    e.name = symbol_name(form.items[1], "ensemble name");
    duplicate_check(model_.ensembles.count(e.name) > 0, "ensemble", e.name,
                    form.pos);
    for (size_t i = 2; i < form.items.size(); i += 2) {
      const SExpr& k = form.items[i];
      if (k.kind != SExpr::Kind::Keyword) malformed(k, ":clause");
      if (i + 1 >= form.items.size()) malformed(k, ":clause value");
      const SExpr& v = form.items[i + 1];
      if (k.text == "entry-events") {
        if (v.is_keyword("auto")) {
          e.auto_entry = true;
        } else {
          e.entry_events = parse_event_refs(v);
        }
      } else if (k.text == "exit-events") {
        e.exit_events = parse_event_refs(v);
      } else if (k.text == "allowable-events") {
        e.allowable_events = parse_event_refs(v);
      } else if (k.text == "inputs") {
        e.inputs = parse_name_list(v, "input port");
      } else if (k.text == "outputs") {
        e.outputs = parse_name_list(v, "output port");
      } else if (k.text == "components") {
        parse_components(v, e);
      } else if (k.text == "controlflows") {
        parse_controlflows(v, e);
      } else if (k.text == "splits") {
        parse_splits(v, e);
      } else if (k.text == "joins") {
        parse_joins(v, e);
      } else if (k.text == "dataflows") {
        parse_dataflows(v, e);
      } else if (k.text == "resources") {
        parse_resources(v, e);
      } else if (k.text == "resource-mapping" ||
                 k.text == "resource-mappings") {
        parse_pair_list(v, e.resource_mappings, "component", "resource");
      } else if (k.text == "model-mappings") {
        parse_model_mappings(v, e);
      } else if (k.text == "vulnerabilities") {
        parse_pair_list(v, e.vulnerabilities, "resource", "vulnerability");
      } else {
        malformed(k, "define-ensemble clause");
      }
    }
    model_.declaration_order.push_back(e.name);
    model_.ensembles.emplace(e.name, std::move(e));
  }

  void parse_components(const SExpr& v, Ensemble& e) {
    if (!v.is_list()) malformed(v, "component list");
    for (const SExpr& c : v.items) {
      if (!c.is_list() || c.items.empty()) malformed(c, "(name :type t ...)");
      ComponentDecl decl;
      decl.pos = c.pos;
      decl.local = symbol_name(c.items[0], "component name");
      for (size_t i = 1; i < c.items.size(); i += 2) {
        const SExpr& k = c.items[i];
        if (k.kind != SExpr::Kind::Keyword || i + 1 >= c.items.size()) {
          malformed(c, "(name :type t :models (modes))");
        }
        const SExpr& val = c.items[i + 1];
        if (k.text == "type") {
          decl.type = symbol_name(val, "ensemble name");
        } else if (k.text == "models") {
          if (!val.is_list() || val.items.empty()) malformed(val, "(modes)");
          for (const SExpr& m : val.items) {
            decl.declared_modes.insert(parse_component_mode(m));
          }
        } else {
          malformed(k, ":type or :models");
        }
      }
      if (decl.type.empty()) malformed(c, "component with :type");
      if (decl.declared_modes.empty()) decl.declared_modes.insert(Mode::normal);
      if (e.component(decl.local)) {
        throw LoadError("DuplicateDefinition",
                        "duplicate component " + decl.local + " in " + e.name,
                        c.pos);
      }
      e.components.push_back(std::move(decl));
    }
  }

  void parse_controlflows(const SExpr& v, Ensemble& e) {
    if (!v.is_list()) malformed(v, "controlflow list");
    for (const SExpr& c : v.items) {
      if (!c.is_list() || c.items.size() % 2 != 0 || c.items.empty()) {
        malformed(c, "(before|after name [before|after name])");
      }
      ControlFlowDecl decl;
      decl.pos = c.pos;
      for (size_t i = 0; i < c.items.size(); i += 2) {
        const std::string& p = symbol_name(c.items[i], "before or after");
        FlowPosition fp;
        if (p == "before") {
          fp = FlowPosition::before;
        } else if (p == "after") {
          fp = FlowPosition::after;
        } else {
          malformed(c.items[i], "before or after");
        }
        decl.points.emplace_back(fp, symbol_name(c.items[i + 1], "endpoint"));
      }
      e.controlflows.push_back(std::move(decl));
    }
  }

  void parse_splits(const SExpr& v, Ensemble& e) {
    if (!v.is_list()) malformed(v, "split list");
    for (const SExpr& c : v.items) {
      if (!c.is_list() || c.items.size() < 3 || c.items.size() > 4) {
        malformed(c, "(name model [(params)] (branches))");
      }
      SplitDecl decl;
      decl.pos = c.pos;
      decl.local = symbol_name(c.items[0], "split name");
      decl.model = symbol_name(c.items[1], "split model name");
      size_t bi = 2;
      if (c.items.size() == 4) {
        decl.param_ports = parse_name_list(c.items[2], "split parameter");
        bi = 3;
      }
      decl.branches = parse_name_list(c.items[bi], "branch name");
      e.splits.push_back(std::move(decl));
    }
  }

  void parse_joins(const SExpr& v, Ensemble& e) {
    if (!v.is_list()) malformed(v, "join list");
    for (const SExpr& c : v.items) {
      if (!c.is_list() || c.items.size() < 2 || c.items.size() > 3) {
        malformed(c, "(name [(ports)] (branches))");
      }
      JoinDecl decl;
      decl.pos = c.pos;
      decl.local = symbol_name(c.items[0], "join name");
      size_t bi = 1;
      if (c.items.size() == 3) {
        decl.ports = parse_name_list(c.items[1], "join port");
        bi = 2;
      }
      decl.branches = parse_name_list(c.items[bi], "branch name");
      e.joins.push_back(std::move(decl));
    }
  }

  void parse_dataflows(const SExpr& v, Ensemble& e) {
    if (!v.is_list()) malformed(v, "dataflow list");
    for (const SExpr& c : v.items) {
      if (!c.is_list() || c.items.size() < 4 || c.items.size() % 2 != 0) {
        malformed(c, "(port comp port comp ...)");
      }
      DataFlow flow;
      flow.pos = c.pos;
      for (size_t i = 0; i < c.items.size(); i += 2) {
        flow.hops.emplace_back(symbol_name(c.items[i], "port"),
                               symbol_name(c.items[i + 1], "component"));
      }
      e.dataflows.push_back(std::move(flow));
    }
  }

  void parse_resources(const SExpr& v, Ensemble& e) {
    if (!v.is_list()) malformed(v, "resource list");
    for (const SExpr& c : v.items) {
      if (!c.is_list() || c.items.size() < 3) {
        malformed(c, "(name type (mode prob)...)");
      }
      ResourceDecl decl;
      decl.pos = c.pos;
      decl.name = symbol_name(c.items[0], "resource name");
      decl.res_type = symbol_name(c.items[1], "resource type");
      for (size_t i = 2; i < c.items.size(); ++i) {
        const SExpr& pr = c.items[i];
        if (!pr.is_list() || pr.items.size() != 2) {
          malformed(pr, "(normal|hacked prob)");
        }
        decl.mode_priors[parse_resource_mode(pr.items[0])] =
            probability_value(pr.items[1]);
      }
      e.resources.push_back(std::move(decl));
    }
  }

  void parse_pair_list(const SExpr& v,
                       std::vector<std::pair<std::string, std::string>>& out,
                       const char* first, const char* second) {
    if (!v.is_list()) malformed(v, "pair list");
    for (const SExpr& c : v.items) {
      if (!c.is_list() || c.items.size() != 2) {
        malformed(c, std::string("(") + first + " " + second + ")");
      }
      out.emplace_back(symbol_name(c.items[0], first),
                       symbol_name(c.items[1], second));
    }
  }

  // Accepts the nested form (comp mode ((res rmode)...) prob) and the flat
  // form (comp mode res rmode prob); both occur in practice.
  void parse_model_mappings(const SExpr& v, Ensemble& e) {
    if (!v.is_list()) malformed(v, "model mapping list");
    for (const SExpr& c : v.items) {
      if (!c.is_list()) malformed(c, "model mapping");
      ModelMapping mm;
      mm.pos = c.pos;
      if (c.items.size() == 4 && c.items[2].is_list()) {
        mm.component = symbol_name(c.items[0], "component");
        mm.component_mode = parse_component_mode(c.items[1]);
        for (const SExpr& ctx : c.items[2].items) {
          if (!ctx.is_list() || ctx.items.size() != 2) {
            malformed(ctx, "(resource mode)");
          }
          mm.resource_context.emplace_back(
              symbol_name(ctx.items[0], "resource"),
              parse_resource_mode(ctx.items[1]));
        }
        mm.probability = probability_value(c.items[3]);
      } else if (c.items.size() == 5) {
        mm.component = symbol_name(c.items[0], "component");
        mm.component_mode = parse_component_mode(c.items[1]);
        mm.resource_context.emplace_back(symbol_name(c.items[2], "resource"),
                                         parse_resource_mode(c.items[3]));
        mm.probability = probability_value(c.items[4]);
      } else {
        malformed(c, "(comp mode ((res rmode)...) prob)");
      }
      e.model_mappings.push_back(std::move(mm));
    }
  }

  void load_behavior(const SExpr& form) {
    if (form.items.size() < 2 || !form.items[1].is_list() ||
        form.items[1].items.size() != 2) {
      malformed(form, "(defbehavior-model (name mode) ...)");
    }
    BehaviorModel b;
    b.pos = form.pos;
    b.component = symbol_name(form.items[1].items[0], "ensemble name");
    b.mode = parse_component_mode(form.items[1].items[1]);
    duplicate_check(model_.behaviors.count({b.component, b.mode}) > 0,
                    "behavior model",
                    b.component + " " + mode_name(b.mode), form.pos);
    for (size_t i = 2; i < form.items.size(); i += 2) {
      const SExpr& k = form.items[i];
      if (k.kind != SExpr::Kind::Keyword) malformed(k, ":clause");
      if (i + 1 >= form.items.size()) malformed(k, ":clause value");
      const SExpr& v = form.items[i + 1];
      if (k.text == "inputs") {
        b.inputs = parse_name_list(v, "input port");
      } else if (k.text == "outputs") {
        b.outputs = parse_name_list(v, "output port");
      } else if (k.text == "allowable-events") {
        b.allowable_events = parse_event_refs(v);
      } else if (k.text == "prerequisites") {
        b.prerequisites = parse_conditions(v);
      } else if (k.text == "postconditions" || k.text == "post-conditions") {
        b.postconditions = parse_conditions(v);
      } else {
        malformed(k, "defbehavior-model clause");
      }
    }
    model_.declaration_order.push_back(b.component);
    model_.behaviors.emplace(std::make_pair(b.component, b.mode),
                             std::move(b));
  }

  void load_split(const SExpr& form) {
    if (form.items.size() < 3 || !form.items[2].is_list()) {
      malformed(form, "(defsplit name (params) (branch (cond))...)");
    }
    SplitModel sm;
    sm.pos = form.pos;
    sm.name = symbol_name(form.items[1], "split model name");
    duplicate_check(model_.splits.count(sm.name) > 0, "split model", sm.name,
                    form.pos);
    sm.params = parse_name_list(form.items[2], "split parameter");
    for (size_t i = 3; i < form.items.size(); ++i) {
      const SExpr& br = form.items[i];
      if (!br.is_list() || br.items.size() != 2 || !br.items[1].is_list()) {
        malformed(br, "(branch (condition))");
      }
      std::string branch = symbol_name(br.items[0], "branch name");
      for (const auto& [existing, cond] : sm.branches) {
        if (existing == branch) {
          throw LoadError("DuplicateDefinition",
                          "duplicate branch " + branch + " in " + sm.name,
                          br.pos);
        }
      }
      sm.branches.emplace_back(std::move(branch), br.items[1]);
    }
    model_.declaration_order.push_back(sm.name);
    model_.splits.emplace(sm.name, std::move(sm));
  }

  void load_attack_model(const SExpr& form) {
    if (form.items.size() < 2) malformed(form, "(define-attack-model name ...)");
    AttackModel am;
    am.pos = form.pos;
    am.name = symbol_name(form.items[1], "attack model name");
    duplicate_check(model_.attack_models.count(am.name) > 0, "attack model",
                    am.name, form.pos);
    for (size_t i = 2; i < form.items.size(); i += 2) {
      const SExpr& k = form.items[i];
      if (k.kind != SExpr::Kind::Keyword) malformed(k, ":clause");
      if (i + 1 >= form.items.size()) malformed(k, ":clause value");
      const SExpr& v = form.items[i + 1];
      if (k.text == "attack-types") {
        if (!v.is_list()) malformed(v, "attack type list");
        for (const SExpr& t : v.items) {
          if (!t.is_list() || t.items.size() != 2) {
            malformed(t, "(attack prior)");
          }
          std::string atk = symbol_name(t.items[0], "attack name");
          for (const auto& [existing, p] : am.attack_types) {
            if (existing == atk) {
              throw LoadError("DuplicateDefinition",
                              "duplicate attack type " + atk, t.pos);
            }
          }
          am.attack_types.emplace_back(std::move(atk),
                                       probability_value(t.items[1]));
        }
      } else if (k.text == "vulnerability-mapping") {
        if (!v.is_list()) malformed(v, "vulnerability mapping list");
        for (const SExpr& p : v.items) {
          if (!p.is_list() || p.items.size() != 2) {
            malformed(p, "(vulnerability attack)");
          }
          am.vulnerability_mapping.emplace_back(
              symbol_name(p.items[0], "vulnerability"),
              symbol_name(p.items[1], "attack name"));
        }
      } else {
        malformed(k, "define-attack-model clause");
      }
    }
    model_.declaration_order.push_back(am.name);
    model_.attack_models.emplace(am.name, std::move(am));
  }

  void parse_rule_premise(const SExpr& e, AttackRule& rule) {
    if (!e.is_bracket() || e.items.empty()) malformed(e, "[premise ...]");
    const std::string& h = symbol_name(e.items[0], "premise head");
    if (h == "and" || h == "or") {
      for (size_t i = 1; i < e.items.size(); ++i) {
        parse_rule_premise(e.items[i], rule);
      }
      return;
    }
    if (h == "resource") {
      if (e.items.size() != 4 || e.items[3].kind != SExpr::Kind::Var) {
        malformed(e, "[resource ?ensemble ?name ?res]");
      }
      rule.resource_var = e.items[3].text;
      return;
    }
    if (h == "resource-type-of") {
      if (e.items.size() != 3) malformed(e, "[resource-type-of ?res type]");
      rule.res_type = symbol_name(e.items[2], "resource type");
      return;
    }
    if (h == "resource-might-have-been-attacked") {
      if (e.items.size() != 3) {
        malformed(e, "[resource-might-have-been-attacked ?res attack]");
      }
      rule.attack_name = symbol_name(e.items[2], "attack name");
      return;
    }
    malformed(e, "rule premise");
  }

  void parse_rule_consequence(const SExpr& e, AttackRule& rule) {
    if (!e.is_bracket() || e.items.empty()) malformed(e, "[consequence ...]");
    const std::string& h = symbol_name(e.items[0], "consequence head");
    if (h == "and" || h == "or") {
      for (size_t i = 1; i < e.items.size(); ++i) {
        parse_rule_consequence(e.items[i], rule);
      }
      return;
    }
    if (h != "attack-implies-compromised-mode" || e.items.size() != 5 ||
        e.items[2].kind != SExpr::Kind::Var) {
      malformed(e, "[attack-implies-compromised-mode attack ?res mode prob]");
    }
    AttackRule::Consequence c;
    c.attack = symbol_name(e.items[1], "attack name");
    c.resource_var = e.items[2].text;
    c.resource_mode = parse_resource_mode(e.items[3]);
    c.probability = probability_value(e.items[4]);
    rule.consequences.push_back(std::move(c));
  }

  void load_rule(const SExpr& form) {
    if (form.items.size() != 7 || !form.items[4].is_bracket() ||
        !form.items[6].is_bracket()) {
      malformed(form, "(defrule name (:forward) if [...] then [...])");
    }
    AttackRule rule;
    rule.pos = form.pos;
    rule.name = symbol_name(form.items[1], "rule name");
    for (const AttackRule& r : model_.attack_rules) {
      if (r.name == rule.name) {
        throw LoadError("DuplicateDefinition", "duplicate rule " + rule.name,
                        form.pos);
      }
    }
    const SExpr& dir = form.items[2];
    if (!dir.is_list() || dir.items.size() != 1 ||
        !dir.items[0].is_keyword("forward")) {
      malformed(dir, "(:forward)");
    }
    if (!form.items[3].is_symbol("if") || !form.items[5].is_symbol("then")) {
      malformed(form, "if ... then ...");
    }
    parse_rule_premise(form.items[4], rule);
    parse_rule_consequence(form.items[6], rule);
    if (rule.resource_var.empty()) {
      malformed(form.items[4], "[resource ...] premise");
    }
    model_.declaration_order.push_back(rule.name);
    model_.attack_rules.push_back(std::move(rule));
  }
};

}  // namespace

SamModel load_model(const std::vector<SExpr>& forms) {
  Loader loader;
  for (const SExpr& f : forms) loader.load_form(f);
  loader.finish();
  return std::move(loader).take();
}

SamModel load_model_text(std::string_view source) {
  return load_model(read_all(source));
}

}  // namespace sam
