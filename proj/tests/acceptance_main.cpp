// Acceptance suite: one pass/fail line per criterion, nonzero exit when
// anything fails. Run through ctest as "acceptance" or directly.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <random>
#include <sstream>

#include "diag_oracle.hpp"
#include "sam/check.hpp"
#include "sam/conditions.hpp"
#include "sam/diagnosis.hpp"
#include "sam/loader.hpp"
#include "sam/monitor.hpp"
#include "sam/tracegen.hpp"
#include "testutil.hpp"

using namespace sam;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int criterion, bool ok, const std::string& what) {
  std::printf("%s criterion %d: %s\n", ok ? "PASS" : "FAIL", criterion,
              what.c_str());
  if (!ok) ++g_failures;
}

struct Failure {
  std::ostringstream msg;
  bool any = false;
  template <typename T>
  Failure& operator<<(const T& v) {
    any = true;
    msg << v;
    return *this;
  }
};

// --- criterion 1: fixture load ---------------------------------------------

void criterion_fixture_load() {
  Clock::time_point t0 = Clock::now();
  SamModel m = load_model_text(samtest::fixture_text());
  double elapsed = seconds_since(t0);
  Failure f;
  if (m.ensembles.size() != 12) f << "ensembles=" << m.ensembles.size();
  if (m.behaviors.size() != 21) f << " behaviors=" << m.behaviors.size();
  if (m.splits.size() != 2) f << " splits=" << m.splits.size();
  if (m.attack_models.size() != 1) f << " attacks=" << m.attack_models.size();
  if (m.attack_rules.size() != 6) f << " rules=" << m.attack_rules.size();
  if (!m.top_component || *m.top_component != "maf-editor") f << " top?";
  if (elapsed >= 1.0) f << " took " << elapsed << "s";
  std::ostringstream what;
  what << "fixture loads as 12/21/2/1/6 in " << elapsed << "s";
  if (f.any) what << " -- " << f.msg.str();
  report(1, !f.any, what.str());
}

// --- criterion 2: lint reproduction ----------------------------------------

void criterion_lint() {
  SamModel m = load_model_text(samtest::fixture_text());
  std::vector<Finding> findings = check_model(m);
  size_t probsum = count_code(findings, "ProbSum");
  size_t errors = 0;
  for (const Finding& f : findings) {
    if (f.severity == Severity::error) ++errors;
  }

  // recompute the twelve pair sums straight from the model
  const double tol = 1e-9;
  size_t low = 0, high = 0;
  const char* offenders[] = {"save",
                             "get-leg",
                             "get-movement",
                             "get-sortie",
                             "add-additional-info-to-model",
                             "continue"};
  for (const auto& [name, e] : m.ensembles) {
    std::map<std::string, double> sums;
    for (const ModelMapping& mm : e.model_mappings) {
      std::string key = mm.component + "|" +
                        (mm.resource_context.empty()
                             ? ""
                             : mm.resource_context[0].first + "=" +
                                   mm.resource_context[0].second);
      sums[key] += mm.probability;
    }
    for (const auto& [key, sum] : sums) {
      bool offending = false;
      for (const char* o : offenders) {
        if (key.rfind(std::string(o) + "|", 0) == 0) offending = true;
      }
      if (offending) {
        if (std::fabs(sum - 0.991) < tol) ++low;
        if (std::fabs(sum - 1.009) < tol) ++high;
      } else if (std::fabs(sum - 1.0) >= tol) {
        ++low;  // anything else off-sum would break the count below
      }
    }
  }
  bool ok = errors == 0 && probsum == 12 && low == 6 && high == 6;
  std::ostringstream what;
  what << "check reports " << probsum
       << " ProbSum warnings (6 pairs at .991, 6 at 1.009), " << errors
       << " errors";
  report(2, ok, what.str());
}

// --- criterion 3: monitor round-trip + fault matrix -------------------------

void criterion_monitor_roundtrip() {
  Clock::time_point t0 = Clock::now();
  SamModel m = load_model_text(samtest::fixture_text());

  // all takeoff/non-takeoff combinations for 0..3 iterations, two seeds
  std::vector<Scenario> scenarios;
  for (int iters = 0; iters <= 3; ++iters) {
    for (int combo = 0; combo < (1 << iters); ++combo) {
      std::vector<bool> takeoffs;
      for (int i = 0; i < iters; ++i) takeoffs.push_back((combo >> i) & 1);
      scenarios.push_back(samtest::editor_scenario(takeoffs, 7));
      scenarios.push_back(samtest::editor_scenario(takeoffs, 1234));
    }
  }

  size_t accepted = 0, rejected = 0, mislocalized = 0, false_accept = 0,
         insensitive_ok = 0, insensitive_bad = 0, faults_total = 0;
  std::string first_problem;

  for (const Scenario& sc : scenarios) {
    TracePlan plan = generate_plan(m, sc);
    Verdict clean = run_monitor(m, plan.trace);
    if (clean.outcome == Outcome::consistent) {
      ++accepted;
    } else if (first_problem.empty()) {
      first_problem = "clean trace rejected (loop_bound " +
                      std::to_string(sc.loop_bound) + ")";
    }

    for (const PlannedFault& pf : enumerate_faults(m, plan)) {
      ++faults_total;
      Verdict v = run_monitor(m, apply_fault(plan, pf.fault));
      if (!pf.expect_compromised) {
        if (v.outcome == Outcome::consistent) {
          ++insensitive_ok;
        } else {
          ++insensitive_bad;
          if (first_problem.empty()) {
            first_problem = "order-insensitive swap rejected: " +
                            pf.description;
          }
        }
        continue;
      }
      if (v.outcome != Outcome::compromised) {
        ++false_accept;
        if (first_problem.empty()) {
          first_problem =
              std::string("fault accepted: ") +
              fault_kind_name(pf.fault.kind) + ":" +
              std::to_string(pf.fault.injection_index) + " " + pf.description;
        }
        continue;
      }
      ++rejected;
      auto idx = v.first_bad_index();
      if (!idx || *idx != pf.expected_index) {
        ++mislocalized;
        if (first_problem.empty()) {
          first_problem =
              std::string("mislocalized: ") + fault_kind_name(pf.fault.kind) +
              ":" + std::to_string(pf.fault.injection_index) + " expected " +
              std::to_string(pf.expected_index) + " got " +
              (idx ? std::to_string(*idx) : "none") + " -- " + pf.description;
        }
      }
    }
  }
  double elapsed = seconds_since(t0);
  bool ok = accepted == scenarios.size() && false_accept == 0 &&
            mislocalized == 0 && insensitive_bad == 0 && elapsed < 60.0;
  std::ostringstream what;
  what << scenarios.size() << " scenarios accepted, " << rejected
       << " injected faults rejected at their computed index, "
       << insensitive_ok << " order-insensitive swaps stay consistent ("
       << faults_total << " fault runs, " << elapsed << "s)";
  if (!ok) what << " -- " << first_problem;
  report(3, ok, what.str());
}

// --- criterion 4: diagnosis oracle equivalence ------------------------------

void criterion_diagnosis_oracle() {
  const double tol = 1e-9;
  Failure f;

  const SamModel& toy = samtest::toy_model();
  Evidence ev;
  ObservedComponent oc;
  oc.instance = 1;
  oc.parent_ensemble = "toy-editor";
  oc.local = "startup";
  oc.type = "toy-startup";
  oc.observed = Mode::compromised;
  ev.observed.push_back(oc);
  ev.triggering_step = "acceptance";

  DiagnosisReport rep = diagnose(toy, ev);
  samtest::OracleOut oracle = samtest::oracle_diagnose(toy, ev);
  if (std::fabs(rep.attack_posteriors.at("hacked-image-file-attack") -
                0.0273 / 0.0532) > tol) {
    f << "toy attack posterior off";
  }
  if (std::fabs(rep.resource_mode_posteriors.at({"imagery", "hacked"}) -
                0.0480 / 0.0532) > tol) {
    f << " toy resource posterior off";
  }
  if (std::fabs(oracle.attack.at("hacked-image-file-attack") -
                rep.attack_posteriors.at("hacked-image-file-attack")) > tol) {
    f << " oracle disagrees on toy";
  }

  std::mt19937_64 rng(424242);
  int compared = 0;
  for (int round = 0; round < 100; ++round) {
    samtest::RandomSetup s = samtest::random_setup(rng);
    DiagnosisReport r = diagnose(s.model, s.evidence);
    samtest::OracleOut o = samtest::oracle_diagnose(s.model, s.evidence);
    if (!r.recovered) continue;
    ++compared;
    for (const auto& [a, p] : o.attack) {
      if (std::fabs(r.attack_posteriors.at(a) - p) > tol) {
        f << " attack posterior mismatch in model " << round;
      }
    }
    for (const auto& [res, p] : o.res_hacked) {
      if (std::fabs(r.resource_mode_posteriors.at({res, "hacked"}) - p) >
          tol) {
        f << " resource posterior mismatch in model " << round;
      }
    }
  }
  std::ostringstream what;
  what << "diagnosis matches the brute-force enumerator on the worked "
          "example and "
       << compared << "/100 random models (1e-9)";
  if (f.any) what << " -- " << f.msg.str();
  report(4, !f.any && compared > 80, what.str());
}

// --- criterion 5: semantic algebra law suites -------------------------------

void criterion_algebra_laws() {
  Failure f;
  std::mt19937_64 rng(5);

  // env push shadowing
  for (int i = 0; i < 1000; ++i) {
    Env e;
    std::map<std::string, Value> expect;
    for (int k = 0; k < 6; ++k) {
      std::string id = "v" + std::to_string(rng() % 3);
      Value v = Value::number(double(rng() % 100));
      e = env_push(e, id, v);
      expect[id] = v;
    }
    for (const auto& [id, v] : expect) {
      if (!e.lookup(id) || !(*e.lookup(id) == v)) f << "env shadowing broke;";
    }
  }

  // state update frame conditions
  for (int i = 0; i < 1000; ++i) {
    RtState s;
    if (rng() % 2) s = s.with_mode(Mode::compromised);
    Flag before = s.flag();
    Mode mode = s.mode();
    RtState s2 = state_update(s, int(rng() % 8), Value::number(1));
    if (s2.flag() != before || s2.mode() != mode) f << "frame broke;";
  }

  // setFlag/eqFlag, setMode/eqMode laws
  const Flag flags[] = {Flag::ready, Flag::running, Flag::completed};
  const Mode modes[] = {Mode::normal, Mode::compromised};
  for (int i = 0; i < 1000; ++i) {
    RtState s = RtState().with_flag(flags[rng() % 3]).with_mode(
        modes[rng() % 2]);
    Flag fl = flags[rng() % 3];
    Mode md = modes[rng() % 2];
    if (!s.with_flag(fl).eq_flag(fl)) f << "eqFlag law broke;";
    if (!s.with_mode(md).eq_mode(md)) f << "eqMode law broke;";
  }

  // classical logic identities
  PredicateRegistry reg = PredicateRegistry::with_builtins();
  for (int i = 0; i < 1000; ++i) {
    FactStore facts;
    facts.take_snapshot("base");
    Bindings b;
    for (int k = 0; k < 3; ++k) {
      std::string id = "x" + std::to_string(k);
      b[id] = Value::object_ref("o" + std::to_string(k));
      if (rng() % 2) {
        facts.assert_fact(
            Fact{"dscs", {b[id], Value::text("t"), Value::text("good")}});
      }
    }
    Condition c = Condition::dscs("x" + std::to_string(rng() % 3), "t", true);
    if (rng() % 2) c = Condition::negate(c);
    bool base = eval_condition(c, b, facts, "base", reg);
    if (eval_condition(Condition::conj({c, Condition::negate(c)}), b, facts,
                       "base", reg)) {
      f << "conj identity broke;";
    }
    if (!eval_condition(Condition::disj({c, Condition::negate(c)}), b, facts,
                        "base", reg)) {
      f << "disj identity broke;";
    }
    (void)base;
  }

  // snapshot isolation
  for (int i = 0; i < 1000; ++i) {
    FactStore facts;
    Fact fact{"dscs", {Value::object_ref("o"), Value::text("t")}};
    bool before = rng() % 2;
    if (before) facts.assert_fact(fact);
    facts.take_snapshot("s");
    for (int k = 0; k < 3; ++k) {
      if (rng() % 2) {
        facts.assert_fact(fact);
      } else {
        facts.retract_fact(fact);
      }
      if (facts.holds_at("s", fact) != before) f << "snapshot isolation broke;";
    }
  }

  report(5, !f.any,
         f.any ? "algebra law suites -- " + f.msg.str()
               : "env/state/flag/mode/logic/snapshot law suites, 1000 cases "
                 "each, zero failures");
}

// --- criterion 6: sequence-semantics conformance ----------------------------

void criterion_sequence_semantics() {
  std::vector<SExpr> forms = read_all(samtest::fixture_text());
  SamModel reference = load_model(forms);
  std::mt19937_64 rng(6);
  Failure f;
  for (int round = 0; round < 20; ++round) {
    std::vector<SExpr> shuffled = forms;
    std::shuffle(shuffled.begin(), shuffled.end(), rng);
    // rule order is semantically significant; restore it
    std::vector<SExpr> rules;
    for (const SExpr& x : forms) {
      if (x.at(0).is_symbol("defrule")) rules.push_back(x);
    }
    size_t ri = 0;
    for (SExpr& x : shuffled) {
      if (x.at(0).is_symbol("defrule")) x = rules[ri++];
    }
    SamModel m = load_model(shuffled);
    if (!m.equivalent(reference)) f << "permutation " << round << " differs;";
  }
  report(6, !f.any,
         f.any ? "form permutations -- " + f.msg.str()
               : "loading permutations of independent top-level forms yields "
                 "equivalent models (20 rounds)");
}

}  // namespace

int main() {
  try {
    criterion_fixture_load();
    criterion_lint();
    criterion_monitor_roundtrip();
    criterion_diagnosis_oracle();
    criterion_algebra_laws();
    criterion_sequence_semantics();
  } catch (const std::exception& ex) {
    std::printf("FAIL: unexpected exception: %s\n", ex.what());
    return 99;
  }
  return g_failures;
}
