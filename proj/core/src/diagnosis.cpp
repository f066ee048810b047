#include "sam/diagnosis.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "json.hpp"

namespace sam {

namespace {

struct ResourceInfo {
  std::string name;
  std::string res_type;
  double prior_normal = 0.0;
  double prior_hacked = 0.0;
  std::vector<std::string> vulnerabilities;
};

struct AttackInfo {
  std::string name;
  double prior = 0.0;
  std::vector<std::string> vulnerabilities;  // reachable through the mapping
};

// Consequence probabilities of the first declared rule matching the
// (attack, resource type) pair.
struct RuleEffect {
  double hacked = 0.0;
  double normal = 0.0;
};

double round12(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return std::strtod(buf, nullptr);
}

}  // namespace

DiagnosisReport diagnose(const SamModel& m, const Evidence& ev) {
  if (m.attack_models.empty()) {
    throw DiagnosisError("NoAttackModel", "model declares no attack model");
  }

  DiagnosisReport report;

  // Attacks, in attack-model name order then declared order.
  std::vector<AttackInfo> attacks;
  for (const auto& [mname, am] : m.attack_models) {
    for (const auto& [atk, prior] : am.attack_types) {
      AttackInfo info;
      info.name = atk;
      info.prior = prior;
      for (const auto& [vuln, mapped] : am.vulnerability_mapping) {
        if (mapped == atk) info.vulnerabilities.push_back(vuln);
      }
      attacks.push_back(std::move(info));
    }
  }

  // Resources are global by name; the first declaration wins.
  std::vector<ResourceInfo> resources;
  for (const auto& [ename, e] : m.ensembles) {
    for (const ResourceDecl& r : e.resources) {
      auto it = std::find_if(resources.begin(), resources.end(),
                             [&](const ResourceInfo& x) {
                               return x.name == r.name;
                             });
      if (it == resources.end()) {
        ResourceInfo info;
        info.name = r.name;
        info.res_type = r.res_type;
        auto pn = r.mode_priors.find("normal");
        auto ph = r.mode_priors.find("hacked");
        info.prior_normal = pn == r.mode_priors.end() ? 0.0 : pn->second;
        info.prior_hacked = ph == r.mode_priors.end() ? 0.0 : ph->second;
        resources.push_back(std::move(info));
        it = resources.end() - 1;
      }
      for (const auto& [res, vuln] : e.vulnerabilities) {
        if (res == r.name &&
            std::find(it->vulnerabilities.begin(), it->vulnerabilities.end(),
                      vuln) == it->vulnerabilities.end()) {
          it->vulnerabilities.push_back(vuln);
        }
      }
    }
  }

  // reach[a][r]: the rule consequence probabilities when attack a can
  // touch resource r (vulnerability link plus a matching rule).
  std::vector<std::vector<std::optional<RuleEffect>>> reach(
      attacks.size(),
      std::vector<std::optional<RuleEffect>>(resources.size()));
  for (size_t a = 0; a < attacks.size(); ++a) {
    for (size_t r = 0; r < resources.size(); ++r) {
      bool linked = false;
      for (const std::string& vuln : attacks[a].vulnerabilities) {
        if (std::find(resources[r].vulnerabilities.begin(),
                      resources[r].vulnerabilities.end(),
                      vuln) != resources[r].vulnerabilities.end()) {
          linked = true;
        }
      }
      if (!linked) continue;
      for (const AttackRule& rule : m.attack_rules) {
        if (rule.attack_name != attacks[a].name) continue;
        if (rule.res_type && *rule.res_type != resources[r].res_type) continue;
        RuleEffect eff;
        bool have_hacked = false, have_normal = false;
        for (const AttackRule::Consequence& c : rule.consequences) {
          if (c.attack != attacks[a].name) continue;
          if (c.resource_mode == "hacked" && !have_hacked) {
            eff.hacked = c.probability;
            have_hacked = true;
          } else if (c.resource_mode == "normal" && !have_normal) {
            eff.normal = c.probability;
            have_normal = true;
          }
        }
        if (!have_hacked) continue;
        if (!have_normal) eff.normal = 1.0 - eff.hacked;
        reach[a][r] = eff;
        break;  // first declared rule wins
      }
    }
  }

  // Component mode likelihood given the resource-mode context.
  auto component_factor = [&](const ObservedComponent& oc,
                              const std::vector<bool>& res_hacked) -> double {
    const Ensemble* parent = m.ensemble(oc.parent_ensemble);
    if (!parent) return 1.0;
    bool any_row = false;
    for (const ModelMapping& mm : parent->model_mappings) {
      if (mm.component != oc.local) continue;
      any_row = true;
      if (mm.component_mode != oc.observed) continue;
      bool ctx_ok = true;
      for (const auto& [res, md] : mm.resource_context) {
        auto it = std::find_if(resources.begin(), resources.end(),
                               [&](const ResourceInfo& x) {
                                 return x.name == res;
                               });
        if (it == resources.end()) {
          ctx_ok = false;
          break;
        }
        bool hacked = res_hacked[it - resources.begin()];
        if ((md == "hacked") != hacked) ctx_ok = false;
      }
      if (ctx_ok) return mm.probability;
    }
    return any_row ? 0.0 : 1.0;
  };

  const size_t na = attacks.size();
  const size_t nr = resources.size();
  struct Cell {
    std::vector<bool> attack_occurred;
    std::vector<bool> res_hacked;
    double weight = 0.0;
    double prior_weight = 0.0;  // without the component factors
  };
  std::vector<Cell> table;

  std::vector<bool> occ(na, false), hacked(nr, false);
  // Enumerate attack occurrence subsets and resource mode assignments.
  size_t attack_combos = size_t{1} << na;
  size_t res_combos = size_t{1} << nr;
  for (size_t am = 0; am < attack_combos; ++am) {
    for (size_t a = 0; a < na; ++a) occ[a] = (am >> a) & 1;
    double w_attacks = 1.0;
    for (size_t a = 0; a < na; ++a) {
      w_attacks *= occ[a] ? attacks[a].prior : 1.0 - attacks[a].prior;
    }
    for (size_t rm = 0; rm < res_combos; ++rm) {
      for (size_t r = 0; r < nr; ++r) hacked[r] = (rm >> r) & 1;
      double w = w_attacks;
      for (size_t r = 0; r < nr; ++r) {
        // Combine the occurring attacks that reach this resource.
        std::vector<RuleEffect> effects;
        for (size_t a = 0; a < na; ++a) {
          if (occ[a] && reach[a][r]) effects.push_back(*reach[a][r]);
        }
        double p_hacked, p_normal;
        if (effects.empty()) {
          p_normal = resources[r].prior_normal;
          p_hacked = resources[r].prior_hacked;
        } else if (effects.size() == 1) {
          p_hacked = effects[0].hacked;
          p_normal = effects[0].normal;
        } else {
          // noisy-or over the hacked probabilities, then renormalize
          double not_hacked = 1.0;
          double all_normal = 1.0;
          for (const RuleEffect& e : effects) {
            not_hacked *= 1.0 - e.hacked;
            all_normal *= e.normal;
          }
          p_hacked = 1.0 - not_hacked;
          p_normal = all_normal;
          double z = p_hacked + p_normal;
          if (z > 0) {
            p_hacked /= z;
            p_normal /= z;
          }
        }
        w *= hacked[r] ? p_hacked : p_normal;
      }
      Cell cell;
      cell.attack_occurred = occ;
      cell.res_hacked = hacked;
      cell.prior_weight = w;
      for (const ObservedComponent& oc : ev.observed) {
        w *= component_factor(oc, hacked);
      }
      cell.weight = w;
      table.push_back(std::move(cell));
    }
  }

  double z = 0.0, zp = 0.0;
  for (const Cell& c : table) {
    z += c.weight;
    zp += c.prior_weight;
  }

  report.recovered = z > 0.0;
  bool use_prior = !report.recovered;
  if (use_prior) {
    report.notes.push_back(
        "UnexplainableEvidence: no assignment has positive probability; "
        "posteriors fall back to the unconditioned prior");
  }
  double norm = use_prior ? zp : z;
  auto cell_weight = [&](const Cell& c) {
    return use_prior ? c.prior_weight : c.weight;
  };

  for (size_t a = 0; a < na; ++a) {
    double p = 0.0;
    for (const Cell& c : table) {
      if (c.attack_occurred[a]) p += cell_weight(c);
    }
    report.attack_posteriors[attacks[a].name] = norm > 0 ? p / norm : 0.0;
  }
  for (size_t r = 0; r < nr; ++r) {
    double ph = 0.0, pn = 0.0;
    for (const Cell& c : table) {
      (c.res_hacked[r] ? ph : pn) += cell_weight(c);
    }
    report.resource_mode_posteriors[{resources[r].name, "hacked"}] =
        norm > 0 ? ph / norm : 0.0;
    report.resource_mode_posteriors[{resources[r].name, "normal"}] =
        norm > 0 ? pn / norm : 0.0;
  }

  for (const Cell& c : table) {
    DiagnosisReport::RankedAssignment ra;
    ra.probability = norm > 0 ? cell_weight(c) / norm : 0.0;
    for (size_t a = 0; a < na; ++a) {
      ra.assignment["attack:" + attacks[a].name] =
          c.attack_occurred[a] ? "occurred" : "absent";
    }
    for (size_t r = 0; r < nr; ++r) {
      ra.assignment["resource:" + resources[r].name] =
          c.res_hacked[r] ? "hacked" : "normal";
    }
    for (const ObservedComponent& oc : ev.observed) {
      std::string key = "component:" + (oc.local.empty() ? oc.type : oc.local);
      if (oc.instance >= 0) key += "#" + std::to_string(oc.instance);
      ra.assignment[key] = mode_name(oc.observed);
    }
    report.ranked_assignments.push_back(std::move(ra));
  }
  std::stable_sort(report.ranked_assignments.begin(),
                   report.ranked_assignments.end(),
                   [](const auto& a, const auto& b) {
                     if (a.probability != b.probability) {
                       return a.probability > b.probability;
                     }
                     return a.assignment < b.assignment;
                   });
  return report;
}

std::string DiagnosisReport::to_json() const {
  nlohmann::json j;
  j["recovered"] = recovered;
  for (const auto& [name, p] : attack_posteriors) {
    j["attacks"][name] = round12(p);
  }
  for (const auto& [key, p] : resource_mode_posteriors) {
    j["resources"][key.first][key.second] = round12(p);
  }
  j["assignments"] = nlohmann::json::array();
  for (const RankedAssignment& ra : ranked_assignments) {
    nlohmann::json ja;
    ja["probability"] = round12(ra.probability);
    for (const auto& [k, v] : ra.assignment) ja["modes"][k] = v;
    j["assignments"].push_back(ja);
  }
  if (!notes.empty()) j["notes"] = notes;
  return j.dump();
}

std::string DiagnosisReport::to_text() const {
  std::ostringstream os;
  os.precision(6);
  os << "diagnosis (" << (recovered ? "recovered" : "unexplained") << ")\n";
  os << "  attack posteriors:\n";
  for (const auto& [name, p] : attack_posteriors) {
    os << "    " << name << ": " << p << "\n";
  }
  os << "  resource mode posteriors:\n";
  for (const auto& [key, p] : resource_mode_posteriors) {
    os << "    " << key.first << " " << key.second << ": " << p << "\n";
  }
  size_t shown = 0;
  os << "  top assignments:\n";
  for (const RankedAssignment& ra : ranked_assignments) {
    if (++shown > 3) break;
    os << "    p=" << ra.probability << " {";
    bool first = true;
    for (const auto& [k, v] : ra.assignment) {
      if (!first) os << ", ";
      first = false;
      os << k << "=" << v;
    }
    os << "}\n";
  }
  for (const std::string& n : notes) os << "  note: " << n << "\n";
  return os.str();
}

}  // namespace sam
