#include <unistd.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "sam/check.hpp"
#include "sam/diagnosis.hpp"
#include "sam/loader.hpp"
#include "sam/monitor.hpp"
#include "sam/observation.hpp"
#include "sam/tracegen.hpp"

namespace {

using nlohmann::json;

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitStatic = 2;
constexpr int kExitCompromised = 3;

struct Palette {
  bool on = false;
  const char* red() const { return on ? "\033[31m" : ""; }
  const char* yellow() const { return on ? "\033[33m" : ""; }
  const char* green() const { return on ? "\033[32m" : ""; }
  const char* reset() const { return on ? "\033[0m" : ""; }
};

Palette make_palette() {
  Palette p;
  const char* env = std::getenv("SAM_MONITOR_COLOR");
  if (env && std::string(env) == "0") return p;
  p.on = isatty(fileno(stdout));
  return p;
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

/// Concatenates the model files in argument order and loads them.
sam::SamModel load_models(const std::vector<std::string>& paths) {
  if (paths.empty()) throw std::runtime_error("no model file given");
  std::vector<sam::SExpr> forms;
  for (const std::string& p : paths) {
    std::vector<sam::SExpr> part = sam::read_all(read_file(p));
    forms.insert(forms.end(), part.begin(), part.end());
  }
  return sam::load_model(forms);
}

json finding_json(const sam::Finding& f) {
  json j;
  j["severity"] = f.severity == sam::Severity::error ? "error" : "warning";
  j["code"] = f.code;
  j["message"] = f.message;
  if (f.pos.valid()) {
    j["line"] = f.pos.line;
    j["col"] = f.pos.col;
  }
  return j;
}

int cmd_check(const std::vector<std::string>& models, bool as_json) {
  Palette pal = make_palette();
  sam::SamModel model;
  try {
    model = load_models(models);
  } catch (const sam::ParseError& ex) {
    std::cerr << "error [Parse] " << ex.what() << "\n";
    return kExitStatic;
  } catch (const sam::LoadError& ex) {
    std::cerr << "error [" << ex.code() << "] " << ex.what() << "\n";
    return kExitStatic;
  }
  std::vector<sam::Finding> findings = sam::check_model(model);
  size_t errors = 0, warnings = 0;
  for (const sam::Finding& f : findings) {
    if (f.severity == sam::Severity::error) {
      ++errors;
    } else {
      ++warnings;
    }
    if (as_json) {
      std::cout << finding_json(f).dump() << "\n";
    } else {
      const char* color =
          f.severity == sam::Severity::error ? pal.red() : pal.yellow();
      std::cout << color << f.to_text() << pal.reset() << "\n";
    }
  }
  if (as_json) {
    json summary;
    summary["errors"] = errors;
    summary["warnings"] = warnings;
    summary["ensembles"] = model.ensembles.size();
    summary["behaviors"] = model.behaviors.size();
    summary["splits"] = model.splits.size();
    summary["attack_models"] = model.attack_models.size();
    summary["attack_rules"] = model.attack_rules.size();
    std::cout << summary.dump() << "\n";
  } else {
    std::cout << errors << " errors, " << warnings << " warnings ("
              << model.ensembles.size() << " ensembles, "
              << model.behaviors.size() << " behavior models, "
              << model.splits.size() << " split models, "
              << model.attack_models.size() << " attack models, "
              << model.attack_rules.size() << " attack rules)\n";
  }
  return errors ? kExitStatic : kExitOk;
}

json step_json(const sam::MonitorStep& s) {
  json j;
  j["type"] = "step";
  j["index"] = s.index;
  j["observation"] = s.observation;
  j["instance"] = s.instance_label;
  j["disposition"] = sam::disposition_name(s.disposition);
  j["flag"] = sam::flag_name(s.flag);
  j["mode"] = sam::mode_name(s.mode);
  if (!s.detail.empty()) j["detail"] = s.detail;
  return j;
}

void print_step(const sam::MonitorStep& s, bool as_json, const Palette& pal) {
  if (as_json) {
    std::cout << step_json(s).dump() << "\n";
    return;
  }
  const char* color = s.bad() ? pal.red() : "";
  std::cout << color << "  [" << s.index << "] "
            << sam::disposition_name(s.disposition) << " " << s.observation;
  if (!s.instance_label.empty()) std::cout << " @" << s.instance_label;
  if (!s.detail.empty() && s.bad()) std::cout << " -- " << s.detail;
  std::cout << pal.reset() << "\n";
}

int cmd_monitor(const std::vector<std::string>& models,
                const std::string& trace_path, bool as_json,
                int recursion_limit) {
  Palette pal = make_palette();
  sam::SamModel model;
  try {
    model = load_models(models);
  } catch (const sam::ParseError& ex) {
    std::cerr << "model error: " << ex.what() << "\n";
    return kExitStatic;
  } catch (const sam::LoadError& ex) {
    std::cerr << "model error: " << ex.what() << "\n";
    return kExitStatic;
  }

  std::ifstream file;
  std::istream* in = &std::cin;
  if (trace_path != "-") {
    file.open(trace_path, std::ios::binary);
    if (!file) {
      std::cerr << "cannot read " << trace_path << "\n";
      return kExitUsage;
    }
    in = &file;
  }

  sam::MonitorOptions opts;
  opts.recursion_limit = recursion_limit;
  std::unique_ptr<sam::MonitorSession> session;
  try {
    session = std::make_unique<sam::MonitorSession>(model, opts);
  } catch (const sam::ModelStaticError& ex) {
    std::cerr << ex.what() << "\n";
    return kExitStatic;
  }

  size_t printed = 0;
  auto flush_steps = [&]() {
    for (; printed < session->trail().size(); ++printed) {
      print_step(session->trail()[printed], as_json, pal);
    }
  };
  flush_steps();

  // Incremental ingestion: the verdict is available at the first
  // compromise without reading the rest of the stream.
  std::string line;
  size_t lineno = 0;
  bool alive = true;
  while (alive && std::getline(*in, line)) {
    ++lineno;
    size_t i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos || line[i] == '#' || line[i] == ';') continue;
    sam::Observation o;
    try {
      o = sam::decode_observation(line, lineno);
    } catch (const sam::TraceDecodeError& ex) {
      std::cerr << "trace error: " << ex.what() << "\n";
      return kExitUsage;
    }
    alive = session->feed(o);
    flush_steps();
  }
  sam::Verdict verdict = session->finish();
  flush_steps();

  for (const std::string& w : verdict.warnings) {
    if (as_json) {
      json j;
      j["type"] = "warning";
      j["message"] = w;
      std::cout << j.dump() << "\n";
    } else {
      std::cout << pal.yellow() << "  warning: " << w << pal.reset() << "\n";
    }
  }

  bool ok = verdict.outcome == sam::Outcome::consistent;
  if (as_json) {
    json j;
    j["type"] = "verdict";
    j["outcome"] = ok ? "consistent" : "compromised";
    if (auto idx = verdict.first_bad_index()) j["first_bad_index"] = *idx;
    std::cout << j.dump() << "\n";
    if (verdict.diagnosis) {
      std::cout << "{\"type\":\"diagnosis\",\"report\":"
                << verdict.diagnosis->to_json() << "}\n";
    }
  } else {
    std::cout << (ok ? pal.green() : pal.red())
              << "verdict: " << (ok ? "consistent" : "compromised")
              << pal.reset() << "\n";
    if (verdict.diagnosis) std::cout << verdict.diagnosis->to_text();
  }
  return ok ? kExitOk : kExitCompromised;
}

int cmd_gen_trace(const std::vector<std::string>& models,
                  const std::string& scenario_path,
                  const std::string& fault_spec, const std::string& out_path) {
  sam::SamModel model = load_models(models);
  sam::Scenario scenario = sam::Scenario::from_json(read_file(scenario_path));

  std::optional<sam::Fault> fault;
  if (!fault_spec.empty()) {
    size_t colon = fault_spec.rfind(':');
    if (colon == std::string::npos) {
      throw std::runtime_error("--fault expects kind:index");
    }
    auto kind = sam::fault_kind_from_name(fault_spec.substr(0, colon));
    if (!kind) {
      throw std::runtime_error("unknown fault kind " +
                               fault_spec.substr(0, colon));
    }
    fault = sam::Fault{*kind, std::stoul(fault_spec.substr(colon + 1))};
  }

  std::vector<sam::Observation> trace = sam::generate(model, scenario, fault);
  std::string text = sam::write_trace(trace);
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    std::ofstream out(out_path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + out_path);
    out << text;
  }
  return kExitOk;
}

int cmd_diagnose(const std::vector<std::string>& models,
                 const std::string& evidence_path, bool as_json) {
  sam::SamModel model = load_models(models);
  json j = json::parse(read_file(evidence_path));
  sam::Evidence ev;
  if (!j.contains("observed") || !j["observed"].is_array()) {
    throw std::runtime_error("evidence needs an \"observed\" array");
  }
  int synthetic_id = 0;
  for (const json& item : j["observed"]) {
    sam::ObservedComponent oc;
    oc.instance = synthetic_id++;
    std::string component = item.at("component").get<std::string>();
    std::string mode = item.at("mode").get<std::string>();
    oc.observed =
        mode == "compromised" ? sam::Mode::compromised : sam::Mode::normal;
    if (item.contains("ensemble")) {
      oc.parent_ensemble = item["ensemble"].get<std::string>();
      oc.local = component;
      const sam::Ensemble* parent = model.ensemble(oc.parent_ensemble);
      const sam::ComponentDecl* decl =
          parent ? parent->component(component) : nullptr;
      if (decl) oc.type = decl->type;
    } else {
      // Resolve the local name against every ensemble's components.
      for (const auto& [ename, ens] : model.ensembles) {
        const sam::ComponentDecl* decl = ens.component(component);
        if (decl) {
          oc.parent_ensemble = ename;
          oc.local = component;
          oc.type = decl->type;
          break;
        }
      }
      if (oc.local.empty()) {
        throw std::runtime_error("no ensemble declares component " +
                                 component);
      }
    }
    ev.observed.push_back(std::move(oc));
  }
  ev.triggering_step = "evidence file " + evidence_path;

  sam::DiagnosisReport report = sam::diagnose(model, ev);
  if (as_json) {
    std::cout << report.to_json() << "\n";
  } else {
    std::cout << report.to_text();
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"System architectural model toolkit: static checking, "
               "execution monitoring, trace generation, and diagnosis"};
  app.require_subcommand(1);

  std::vector<std::string> models;
  std::vector<std::string> extra_models;
  std::string trace_path;
  std::string scenario_path;
  std::string fault_spec;
  std::string out_path;
  std::string evidence_path;
  std::string format = "human";
  int recursion_limit = 1024;

  auto add_common = [&](CLI::App* sub, bool needs_positional_models) {
    if (needs_positional_models) {
      sub->add_option("files", models, "model files (.sam)");
    }
    sub->add_option("-m,--model", extra_models, "additional model files");
    sub->add_option("--format", format, "output format")
        ->check(CLI::IsMember({"human", "json"}));
  };

  CLI::App* check = app.add_subcommand("check", "statically check a model");
  add_common(check, true);

  CLI::App* monitor =
      app.add_subcommand("monitor", "run the execution monitor over a trace");
  add_common(monitor, true);
  monitor->add_option("-t,--trace", trace_path,
                      "trace file ('-' for standard input)");
  monitor->add_option("--recursion-limit", recursion_limit,
                      "re-entrant activation limit");

  CLI::App* gen = app.add_subcommand("gen-trace", "simulate a model scenario");
  add_common(gen, true);
  gen->add_option("--scenario", scenario_path, "scenario JSON file")
      ->required();
  gen->add_option("--fault", fault_spec, "fault to inject, kind:index");
  gen->add_option("--out", out_path, "output path (default standard output)");

  CLI::App* diag =
      app.add_subcommand("diagnose", "compute posteriors from saved evidence");
  add_common(diag, true);
  diag->add_option("--evidence", evidence_path, "evidence JSON file")
      ->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return kExitUsage;
  }

  models.insert(models.end(), extra_models.begin(), extra_models.end());
  bool as_json = format == "json";

  try {
    if (app.got_subcommand(check)) {
      return cmd_check(models, as_json);
    }
    if (app.got_subcommand(monitor)) {
      if (trace_path.empty()) {
        if (models.size() < 2) {
          std::cerr << "monitor needs a model and a trace\n";
          return kExitUsage;
        }
        trace_path = models.back();
        models.pop_back();
      }
      return cmd_monitor(models, trace_path, as_json, recursion_limit);
    }
    if (app.got_subcommand(gen)) {
      return cmd_gen_trace(models, scenario_path, fault_spec, out_path);
    }
    if (app.got_subcommand(diag)) {
      return cmd_diagnose(models, evidence_path, as_json);
    }
  } catch (const sam::ParseError& ex) {
    std::cerr << "model error: " << ex.what() << "\n";
    return kExitStatic;
  } catch (const sam::LoadError& ex) {
    std::cerr << "model error: " << ex.what() << "\n";
    return kExitStatic;
  } catch (const sam::GenError& ex) {
    std::cerr << "error [" << ex.code() << "] " << ex.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& ex) {
    std::cerr << "error: " << ex.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
