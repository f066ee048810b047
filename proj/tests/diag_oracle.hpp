#pragma once

// Independent brute-force enumerator used as the diagnosis oracle, plus a
// generator of random small models. Kept apart from the library's own
// enumeration on purpose: tests compare the two.

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "sam/diagnosis.hpp"
#include "sam/model.hpp"

namespace samtest {

using namespace sam;

struct OracleOut {
  std::map<std::string, double> attack;                  // P(occurred | ev)
  std::map<std::string, double> res_hacked, res_normal;  // per resource
  double z = 0.0;
};

inline OracleOut oracle_diagnose(const SamModel& m, const Evidence& ev) {
  struct Res {
    std::string name, type;
    double pn = 0, ph = 0;
    std::vector<std::string> vulns;
  };
  std::vector<std::pair<std::string, double>> attacks;
  std::map<std::string, std::vector<std::string>> attack_vulns;
  for (const auto& [mn, am] : m.attack_models) {
    for (const auto& [a, p] : am.attack_types) attacks.push_back({a, p});
    for (const auto& [v, a] : am.vulnerability_mapping) {
      attack_vulns[a].push_back(v);
    }
  }
  std::vector<Res> resources;
  for (const auto& [en, e] : m.ensembles) {
    for (const ResourceDecl& r : e.resources) {
      bool known = false;
      for (const Res& x : resources) {
        if (x.name == r.name) known = true;
      }
      if (!known) {
        Res x;
        x.name = r.name;
        x.type = r.res_type;
        if (r.mode_priors.count("normal")) x.pn = r.mode_priors.at("normal");
        if (r.mode_priors.count("hacked")) x.ph = r.mode_priors.at("hacked");
        resources.push_back(x);
      }
    }
    for (const auto& [rn, vuln] : e.vulnerabilities) {
      for (Res& x : resources) {
        if (x.name == rn) {
          bool dup = false;
          for (const std::string& v : x.vulns) dup |= v == vuln;
          if (!dup) x.vulns.push_back(vuln);
        }
      }
    }
  }

  // first declared rule for (attack, resource type)
  auto rule_for = [&](const std::string& attack,
                      const std::string& type) -> const AttackRule* {
    for (const AttackRule& r : m.attack_rules) {
      if (r.attack_name == attack && r.res_type && *r.res_type == type) {
        return &r;
      }
    }
    return nullptr;
  };
  auto reaches = [&](const std::string& attack, const Res& r) -> bool {
    if (!rule_for(attack, r.type)) return false;
    for (const std::string& v : attack_vulns[attack]) {
      for (const std::string& rv : r.vulns) {
        if (v == rv) return true;
      }
    }
    return false;
  };

  const size_t na = attacks.size(), nr = resources.size();
  OracleOut out;
  std::map<std::string, double> occ_mass;
  std::map<std::string, double> hacked_mass, normal_mass;

  for (size_t am = 0; am < (size_t{1} << na); ++am) {
    for (size_t rm = 0; rm < (size_t{1} << nr); ++rm) {
      double w = 1.0;
      for (size_t a = 0; a < na; ++a) {
        w *= (am >> a & 1) ? attacks[a].second : 1.0 - attacks[a].second;
      }
      for (size_t r = 0; r < nr; ++r) {
        bool is_hacked = rm >> r & 1;
        // which occurring attacks reach this resource?
        std::vector<const AttackRule*> rules;
        for (size_t a = 0; a < na; ++a) {
          if ((am >> a & 1) && reaches(attacks[a].first, resources[r])) {
            rules.push_back(rule_for(attacks[a].first, resources[r].type));
          }
        }
        double ph, pn;
        if (rules.empty()) {
          ph = resources[r].ph;
          pn = resources[r].pn;
        } else {
          double not_h = 1.0, all_n = 1.0;
          for (const AttackRule* rule : rules) {
            double h = 0, n = 0;
            bool hh = false, hn = false;
            for (const auto& c : rule->consequences) {
              if (c.resource_mode == "hacked" && !hh) {
                h = c.probability;
                hh = true;
              }
              if (c.resource_mode == "normal" && !hn) {
                n = c.probability;
                hn = true;
              }
            }
            if (!hn) n = 1.0 - h;
            not_h *= 1.0 - h;
            all_n *= n;
          }
          if (rules.size() == 1) {
            ph = 1.0 - not_h;
            pn = all_n;
          } else {
            ph = 1.0 - not_h;
            pn = all_n;
            double zz = ph + pn;
            if (zz > 0) {
              ph /= zz;
              pn /= zz;
            }
          }
        }
        w *= is_hacked ? ph : pn;
      }
      // component likelihoods
      for (const ObservedComponent& oc : ev.observed) {
        const Ensemble* parent = m.ensemble(oc.parent_ensemble);
        if (!parent) continue;
        bool any = false;
        double factor = 0.0;
        bool matched = false;
        for (const ModelMapping& mm : parent->model_mappings) {
          if (mm.component != oc.local) continue;
          any = true;
          if (mm.component_mode != oc.observed || matched) continue;
          bool ok = true;
          for (const auto& [res, md] : mm.resource_context) {
            size_t idx = nr;
            for (size_t r = 0; r < nr; ++r) {
              if (resources[r].name == res) idx = r;
            }
            if (idx == nr) {
              ok = false;
              break;
            }
            bool is_hacked = rm >> idx & 1;
            if ((md == "hacked") != is_hacked) ok = false;
          }
          if (ok) {
            factor = mm.probability;
            matched = true;
          }
        }
        w *= any ? factor : 1.0;
      }

      out.z += w;
      for (size_t a = 0; a < na; ++a) {
        if (am >> a & 1) occ_mass[attacks[a].first] += w;
      }
      for (size_t r = 0; r < nr; ++r) {
        ((rm >> r & 1) ? hacked_mass : normal_mass)[resources[r].name] += w;
      }
    }
  }
  for (const auto& [a, p] : attacks) {
    out.attack[a] = out.z > 0 ? occ_mass[a] / out.z : 0.0;
  }
  for (const Res& r : resources) {
    out.res_hacked[r.name] = out.z > 0 ? hacked_mass[r.name] / out.z : 0.0;
    out.res_normal[r.name] = out.z > 0 ? normal_mass[r.name] / out.z : 0.0;
  }
  return out;
}


struct RandomSetup {
  SamModel model;
  Evidence evidence;
};

inline RandomSetup random_setup(std::mt19937_64& rng) {
  auto prob = [&]() { return double(rng() % 101) / 100.0; };
  size_t na = 1 + rng() % 3, nr = 1 + rng() % 3, nc = 1 + rng() % 4;

  RandomSetup s;
  Ensemble root;
  root.name = "root";
  root.auto_entry = true;

  for (size_t r = 0; r < nr; ++r) {
    ResourceDecl rd;
    rd.name = "res" + std::to_string(r);
    rd.res_type = "type" + std::to_string(r);
    double pn = prob();
    rd.mode_priors["normal"] = pn;
    rd.mode_priors["hacked"] = 1.0 - pn;
    root.resources.push_back(rd);
  }

  AttackModel am;
  am.name = "attacks";
  for (size_t a = 0; a < na; ++a) {
    am.attack_types.push_back({"atk" + std::to_string(a), prob()});
  }
  for (size_t r = 0; r < nr; ++r) {
    if (rng() % 3 == 0) continue;  // unlinked resource
    std::string vuln = "vuln" + std::to_string(r);
    root.vulnerabilities.push_back({"res" + std::to_string(r), vuln});
    am.vulnerability_mapping.push_back(
        {vuln, "atk" + std::to_string(rng() % na)});
  }

  for (size_t a = 0; a < na; ++a) {
    for (size_t r = 0; r < nr; ++r) {
      if (rng() % 2) continue;
      AttackRule rule;
      rule.name = "rule" + std::to_string(a) + "-" + std::to_string(r);
      rule.resource_var = "resource";
      rule.res_type = "type" + std::to_string(r);
      rule.attack_name = "atk" + std::to_string(a);
      double h = prob();
      rule.consequences.push_back(
          {"atk" + std::to_string(a), "resource", "hacked", h});
      rule.consequences.push_back(
          {"atk" + std::to_string(a), "resource", "normal", 1.0 - h});
      s.model.attack_rules.push_back(rule);
    }
  }

  for (size_t c = 0; c < nc; ++c) {
    std::string local = "c" + std::to_string(c);
    std::string type = "ct" + std::to_string(c);
    ComponentDecl decl;
    decl.local = local;
    decl.type = type;
    decl.declared_modes = {Mode::normal, Mode::compromised};
    root.components.push_back(decl);

    std::string res = "res" + std::to_string(rng() % nr);
    for (const char* rmode : {"normal", "hacked"}) {
      double p = prob();
      ModelMapping good;
      good.component = local;
      good.component_mode = Mode::normal;
      good.resource_context = {{res, rmode}};
      good.probability = p;
      root.model_mappings.push_back(good);
      ModelMapping bad = good;
      bad.component_mode = Mode::compromised;
      bad.probability = 1.0 - p;
      root.model_mappings.push_back(bad);
    }

    Ensemble child;
    child.name = type;
    s.model.ensembles.emplace(type, child);

    ObservedComponent oc;
    oc.instance = static_cast<int>(c);
    oc.parent_ensemble = "root";
    oc.local = local;
    oc.type = type;
    oc.observed = rng() % 2 ? Mode::compromised : Mode::normal;
    s.evidence.observed.push_back(oc);
  }

  s.model.ensembles.emplace("root", root);
  s.model.attack_models.emplace("attacks", am);
  s.model.top_component = "root";
  s.evidence.triggering_step = "random";
  return s;
}

}  // namespace samtest
