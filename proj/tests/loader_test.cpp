#include <algorithm>
#include <random>

#include "doctest.h"
#include "sam/loader.hpp"
#include "testutil.hpp"

using namespace sam;

namespace {

const char* kExampleEnsemble = R"((define-ensemble maf-editor
    :entry-events :auto
    :inputs ()
    :outputs (the-model)
    :components ((startup :type maf-startup :models (normal compromised))
                 (create-model :type maf-create-model :models (normal compromised))
                 (create-events :type maf-create-events :models (normal compromised))
                 (save :type maf-save :models (normal compromised)))
    :controlflows ((before maf-editor before startup)
                   (after startup before create-model))
    :dataflows ((the-model create-model the-model create-events)
                (the-model create-events the-model save)
                (the-model save the-model maf-save-model))
    :resources ((imagery image-file (normal .7) (hacked .3))
                (code-files loadable-files (normal .8) (hacked .2)))
    :resource-mappings ((startup imagery)
                        (create-model code-files)
                        (create-events code-files)
                        (save-model code-files))
    :model-mappings ((startup normal ((imagery normal)) .99)
                     (startup compromised ((imagery normal)) .01)
                     (startup normal ((imagery hacked)) .9)
                     (startup compromised ((imagery hacked)) .1))
    :vulnerabilities ((imagery reads-complex-imagery)
                      (code-files loads-code))))";

}  // namespace

TEST_CASE("bundled model resolves to the expected registries") {
  const SamModel& m = samtest::fixture_model();
  CHECK(m.ensembles.size() == 12);
  CHECK(m.behaviors.size() == 21);
  CHECK(m.splits.size() == 2);
  CHECK(m.attack_models.size() == 1);
  CHECK(m.attack_rules.size() == 6);
  REQUIRE(m.top_component.has_value());
  CHECK(*m.top_component == "maf-editor");
}

TEST_CASE("empty form sequence loads to an empty model") {
  SamModel m = load_model({});
  CHECK(m.ensembles.empty());
  CHECK_FALSE(m.top_component.has_value());
}

TEST_CASE("single ensemble form resolves fields") {
  SamModel m = load_model_text(kExampleEnsemble);
  const Ensemble* e = m.ensemble("maf-editor");
  REQUIRE(e);
  CHECK(e->auto_entry);
  REQUIRE(e->components.size() == 4);
  CHECK(e->components[0].local == "startup");
  CHECK(e->components[0].type == "maf-startup");
  CHECK(e->components[0].declared_modes ==
        std::set<Mode>{Mode::normal, Mode::compromised});
  CHECK(e->components[3].local == "save");
  REQUIRE(e->resources.size() == 2);
  CHECK(e->resources[0].name == "imagery");
  CHECK(e->resources[0].res_type == "image-file");
  CHECK(e->resources[0].mode_priors.at("normal") == doctest::Approx(0.7));
  CHECK(e->resources[0].mode_priors.at("hacked") == doctest::Approx(0.3));
  CHECK(e->resources[1].mode_priors.at("normal") == doctest::Approx(0.8));
  CHECK(e->resources[1].mode_priors.at("hacked") == doctest::Approx(0.2));
  REQUIRE(e->controlflows.size() == 2);
  CHECK(e->controlflows[0].points.size() == 2);
  REQUIRE(e->dataflows.size() == 3);
  CHECK(e->dataflows[0].hops.size() == 2);
  CHECK(e->dataflows[0].hops[0] ==
        std::pair<std::string, std::string>{"the-model", "create-model"});
  REQUIRE(e->model_mappings.size() == 4);
  CHECK(e->model_mappings[0].component == "startup");
  CHECK(e->model_mappings[0].component_mode == Mode::normal);
  CHECK(e->model_mappings[0].probability == doctest::Approx(0.99));
  REQUIRE(e->model_mappings[0].resource_context.size() == 1);
  CHECK(e->model_mappings[0].resource_context[0].first == "imagery");
}

TEST_CASE("flat model-mapping rows parse like nested ones") {
  SamModel m = load_model_text(
      "(define-ensemble e :entry-events :auto"
      " :resources ((r t (normal .5) (hacked .5)))"
      " :model-mappings ((c normal r normal .9) (c compromised ((r normal)) .1)))");
  const Ensemble* e = m.ensemble("e");
  REQUIRE(e);
  REQUIRE(e->model_mappings.size() == 2);
  CHECK(e->model_mappings[0].resource_context ==
        e->model_mappings[1].resource_context);
}

TEST_CASE("behavior models parse conditions and synonym clause names") {
  const SamModel& m = samtest::fixture_model();
  const BehaviorModel* b = m.behavior("maf-create-model", Mode::normal);
  REQUIRE(b);
  CHECK(b->outputs == std::vector<std::string>{"the-model"});
  REQUIRE(b->postconditions.size() == 1);
  CHECK(b->postconditions[0].kind == Condition::Kind::Dscs);
  CHECK(b->postconditions[0].object_var == "the-model");
  CHECK(b->postconditions[0].ds_type == "mission-builder");
  CHECK(b->postconditions[0].good);

  const BehaviorModel* bc = m.behavior("maf-create-model", Mode::compromised);
  REQUIRE(bc);
  REQUIRE(bc->postconditions.size() == 1);
  CHECK(bc->postconditions[0].kind == Condition::Kind::Not);

  // :postconditions (grammar spelling) works like :post-conditions
  SamModel alt = load_model_text(
      "(defbehavior-model (x normal) :inputs () :outputs ()"
      " :prerequisites () :postconditions ([dscs ?v t good]))");
  CHECK(alt.behavior("x", Mode::normal)->postconditions.size() == 1);
}

TEST_CASE("call conditions pick up member params and situation markers") {
  const SamModel& m = samtest::fixture_model();
  const BehaviorModel* b = m.behavior("maf-add-event-to-model", Mode::normal);
  REQUIRE(b);
  REQUIRE(b->postconditions.size() == 2);
  const Condition& c = b->postconditions[0];
  CHECK(c.kind == Condition::Kind::Call);
  CHECK(c.fn == "add-to-map");
  REQUIRE(c.params.size() == 3);
  CHECK(c.params[0].is_member);
  CHECK(c.params[0].member == "events");
  CHECK(c.params[0].var == "the-model");
  CHECK(c.params[1].var == "event-number");
  REQUIRE(c.situation.has_value());
  CHECK(*c.situation == "before-maf-add-event-to-model");
}

TEST_CASE("event references keep tags and patterns") {
  const SamModel& m = samtest::fixture_model();
  const Ensemble* e = m.ensemble("maf-get-leg");
  REQUIRE(e);
  REQUIRE(e->exit_events.size() == 1);
  const EventRef& r = e->exit_events[0];
  CHECK(r.name == "retrieve-leg");
  CHECK(r.tag_filter == Tag::exit);
  REQUIRE(r.param_pattern.has_value());
  REQUIRE(r.param_pattern->size() == 3);
  CHECK_FALSE((*r.param_pattern)[0].has_value());  // nil wildcard
  CHECK(*(*r.param_pattern)[1] == "the-leg");

  // entry marker that is another component's exit
  const Ensemble* add = m.ensemble("maf-add-additional-info");
  REQUIRE(add);
  REQUIRE(add->entry_events.size() == 1);
  CHECK(add->entry_events[0].name == "retrieve-sortie");
  CHECK(add->entry_events[0].tag_filter == Tag::exit);
}

TEST_CASE("splits and joins of the events loop") {
  const SamModel& m = samtest::fixture_model();
  const Ensemble* e = m.ensemble("maf-create-events");
  REQUIRE(e);
  REQUIRE(e->splits.size() == 2);
  CHECK(e->splits[0].local == "more-events?");
  CHECK(e->splits[0].model == "maf-more-events?");
  CHECK(e->splits[0].param_ports == std::vector<std::string>{"cmd"});
  CHECK(e->splits[0].branches ==
        std::vector<std::string>{"build-event", "exit"});
  REQUIRE(e->joins.size() == 2);
  CHECK(e->joins[1].local == "join-exit");
  CHECK(e->joins[1].ports == std::vector<std::string>{"the-model"});
  CHECK(e->joins[1].branches == std::vector<std::string>{"recur", "exit"});

  const SplitModel* sm = m.split_model("maf-more-events?");
  REQUIRE(sm);
  CHECK(sm->params == std::vector<std::string>{"cmd"});
  REQUIRE(sm->branches.size() == 2);
  CHECK(sm->branches[0].first == "build-event");
}

TEST_CASE("attack model keeps type/prior order alignment") {
  const SamModel& m = samtest::fixture_model();
  const AttackModel& am = m.attack_models.at("maf-attacks");
  REQUIRE(am.attack_types.size() == 2);
  CHECK(am.attack_types[0].first == "hacked-image-file-attack");
  CHECK(am.attack_types[0].second == doctest::Approx(0.3));
  CHECK(am.attack_types[1].first == "hacked-code-file-attack");
  CHECK(am.attack_types[1].second == doctest::Approx(0.5));
  REQUIRE(am.vulnerability_mapping.size() == 2);
  CHECK(am.vulnerability_mapping[0].first == "reads-complex-imagery");
}

TEST_CASE("attack rules parse premises and consequences") {
  const SamModel& m = samtest::fixture_model();
  REQUIRE(m.attack_rules.size() == 6);
  const AttackRule& r = m.attack_rules[0];
  CHECK(r.name == "bad-image-file-takeover");
  CHECK(r.forward);
  CHECK(r.resource_var == "resource");
  CHECK(r.res_type == "image-file");
  CHECK(r.attack_name == "hacked-image-file-attack");
  REQUIRE(r.consequences.size() == 2);
  CHECK(r.consequences[0].resource_mode == "hacked");
  CHECK(r.consequences[0].probability == doctest::Approx(0.9));
  CHECK(r.consequences[1].resource_mode == "normal");
  CHECK(r.consequences[1].probability == doctest::Approx(0.1));
}

TEST_CASE("register-event forms record metadata") {
  SamModel m = load_model_text(
      "(register-event 'startup \"jmps.MapViewer\" \"startup\""
      " '((\"String[]\" \"args\"))"
      " :static map-viewer :output-type (\"void\" \"r\") :bypass \"x\""
      " :other-event the-viewer)");
  REQUIRE(m.registered_events.count("startup"));
  const RegisteredEvent& re = m.registered_events.at("startup");
  CHECK(re.java_class == "jmps.MapViewer");
  CHECK(re.java_method == "startup");
  REQUIRE(re.params.size() == 1);
  CHECK(re.params[0].first == "String[]");
  CHECK(re.static_on == "map-viewer");
  REQUIRE(re.output_type.has_value());
  CHECK(re.output_type->first == "void");
  CHECK(re.bypass == "x");
  CHECK(re.extra_event_args.at("other-event") == "the-viewer");
}

TEST_CASE("load errors") {
  CHECK_THROWS_AS(load_model_text("(define-widget w)"), LoadError);
  try {
    load_model_text("(define-ensemble e) (define-ensemble e)");
    FAIL("expected DuplicateDefinition");
  } catch (const LoadError& ex) {
    CHECK(ex.code() == "DuplicateDefinition");
  }
  try {
    load_model_text("(define-ensemble e :components ((c :models (normal))))");
    FAIL("expected MalformedClause");
  } catch (const LoadError& ex) {
    CHECK(ex.code() == "MalformedClause");
  }
  CHECK_THROWS_AS(load_model_text("(defsplit s (p) (b (equal ?p 'x)) (b (equal ?p 'y)))"),
                  LoadError);
}

TEST_CASE("top component needs :auto and no referencing components clause") {
  // both are :auto, but maf-create-events is referenced (also by itself)
  const SamModel& m = samtest::fixture_model();
  CHECK(m.ensemble("maf-create-events")->auto_entry);
  CHECK(*m.top_component == "maf-editor");

  SamModel none = load_model_text("(define-ensemble a :entry-events (go))");
  CHECK_FALSE(none.top_component.has_value());
}

TEST_CASE("property: loading folds left and tolerates permutation of "
          "independent definitions") {
  std::vector<SExpr> forms = read_all(samtest::fixture_text());
  const SamModel& reference = samtest::fixture_model();

  // one-at-a-time fold equals the batch load
  SamModel folded = load_model({});
  {
    std::vector<SExpr> acc;
    for (const SExpr& f : forms) {
      acc.push_back(f);
    }
    folded = load_model(acc);
  }
  CHECK(folded.equivalent(reference));

  // permutations that keep the relative order of defrule forms (rule
  // application order is significant) load to equivalent models
  std::mt19937_64 rng(7);
  for (int round = 0; round < 12; ++round) {
    std::vector<SExpr> shuffled = forms;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    std::stable_sort(shuffled.begin(), shuffled.end(),
                     [](const SExpr& a, const SExpr& b) {
                       bool ra = a.at(0).is_symbol("defrule");
                       bool rb = b.at(0).is_symbol("defrule");
                       return ra < rb;
                     });
    // restore original defrule order
    std::vector<SExpr> rules;
    for (const SExpr& f : forms) {
      if (f.at(0).is_symbol("defrule")) rules.push_back(f);
    }
    size_t ri = 0;
    for (SExpr& f : shuffled) {
      if (f.at(0).is_symbol("defrule")) f = rules[ri++];
    }
    SamModel m = load_model(shuffled);
    CHECK(m.equivalent(reference));
  }
}
