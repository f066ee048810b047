#include "sam/observation.hpp"

#include <cstdio>
#include <ctime>
#include <istream>
#include <sstream>

#include "json.hpp"

namespace sam {

namespace {

using nlohmann::json;

json value_to_json(const Value& v) {
  switch (v.kind()) {
    case Value::Kind::Nil:
      return nullptr;
    case Value::Kind::Text:
      return v.text();
    case Value::Kind::Number:
      return v.number_value();
    case Value::Kind::ObjectRef:
      return json{{"ref", v.text()}};
    case Value::Kind::Tuple: {
      json arr = json::array();
      for (const Value& k : v.items()) arr.push_back(value_to_json(k));
      return arr;
    }
    default:
      return json{{"ref", v.to_text()}};
  }
}

Value value_from_json(const json& j, size_t lineno) {
  if (j.is_null()) return Value::nil();
  if (j.is_string()) return Value::text(j.get<std::string>());
  if (j.is_number()) return Value::number(j.get<double>());
  if (j.is_boolean()) return Value::text(j.get<bool>() ? "true" : "false");
  if (j.is_array()) {
    std::vector<Value> items;
    for (const json& k : j) items.push_back(value_from_json(k, lineno));
    return Value::tuple(std::move(items));
  }
  if (j.is_object() && j.contains("ref") && j["ref"].is_string()) {
    return Value::object_ref(j["ref"].get<std::string>());
  }
  throw TraceDecodeError("cannot decode value: " + j.dump(), lineno);
}

long long parse_iso_timestamp(const std::string& text, size_t lineno) {
  std::tm tm{};
  int micros = 0;
  int consumed = 0;
  if (std::sscanf(text.c_str(), "%4d-%2d-%2dT%2d:%2d:%2d%n", &tm.tm_year,
                  &tm.tm_mon, &tm.tm_mday, &tm.tm_hour, &tm.tm_min,
                  &tm.tm_sec, &consumed) != 6) {
    throw TraceDecodeError("bad timestamp: " + text, lineno);
  }
  std::string rest = text.substr(consumed);
  if (!rest.empty() && rest[0] == '.') {
    size_t i = 1;
    std::string frac;
    while (i < rest.size() && isdigit(static_cast<unsigned char>(rest[i]))) {
      frac.push_back(rest[i++]);
    }
    frac.resize(6, '0');
    micros = std::stoi(frac);
  }
  tm.tm_year -= 1900;
  tm.tm_mon -= 1;
  time_t seconds = timegm(&tm);
  return static_cast<long long>(seconds) * 1000000 + micros;
}

Observation decode_json_line(const std::string& line, size_t lineno) {
  json j;
  try {
    j = json::parse(line);
  } catch (const json::exception& ex) {
    throw TraceDecodeError(ex.what(), lineno);
  }
  if (!j.is_object() || !j.contains("event") || !j.contains("tag")) {
    throw TraceDecodeError("observation needs event and tag fields", lineno);
  }
  Observation o;
  o.event = j["event"].get<std::string>();
  std::string tag = j["tag"].get<std::string>();
  if (tag == "entry") {
    o.tag = Tag::entry;
  } else if (tag == "exit") {
    o.tag = Tag::exit;
  } else {
    throw TraceDecodeError("tag must be entry or exit", lineno);
  }
  if (j.contains("args")) {
    for (const json& a : j["args"]) o.args.push_back(value_from_json(a, lineno));
  }
  if (j.contains("pid")) o.pid = j["pid"].get<long long>();
  if (j.contains("ts")) {
    if (j["ts"].is_string()) {
      o.ts = parse_iso_timestamp(j["ts"].get<std::string>(), lineno);
    } else {
      o.ts = j["ts"].get<long long>();
    }
  }
  if (j.contains("facts")) {
    for (const json& f : j["facts"]) {
      if (!f.is_object() || !f.contains("op") || !f.contains("fact") ||
          !f["fact"].is_array() || f["fact"].empty() ||
          !f["fact"][0].is_string()) {
        throw TraceDecodeError("fact needs op and [pred, args...]", lineno);
      }
      FactOp op;
      std::string kind = f["op"].get<std::string>();
      if (kind == "assert") {
        op.assertion = true;
      } else if (kind == "retract") {
        op.assertion = false;
      } else {
        throw TraceDecodeError("fact op must be assert or retract", lineno);
      }
      op.fact.pred = f["fact"][0].get<std::string>();
      for (size_t i = 1; i < f["fact"].size(); ++i) {
        op.fact.args.push_back(value_from_json(f["fact"][i], lineno));
      }
      o.facts.push_back(std::move(op));
    }
  }
  return o;
}

Value value_from_sexpr(const SExpr& e, size_t lineno) {
  switch (e.kind) {
    case SExpr::Kind::Symbol:
      return e.text == "nil" ? Value::nil() : Value::text(e.text);
    case SExpr::Kind::Str:
      return Value::text(e.text);
    case SExpr::Kind::Num:
      return Value::number(e.num);
    case SExpr::Kind::Quoted:
      return value_from_sexpr(e.items.front(), lineno);
    case SExpr::Kind::List:
    case SExpr::Kind::Bracket: {
      std::vector<Value> items;
      for (const SExpr& k : e.items) items.push_back(value_from_sexpr(k, lineno));
      return Value::tuple(std::move(items));
    }
    default:
      throw TraceDecodeError("cannot decode parameter " + to_text(e), lineno);
  }
}

Observation decode_sexpr_line(const std::string& line, size_t lineno) {
  std::vector<SExpr> forms;
  try {
    forms = read_all(line);
  } catch (const ParseError& ex) {
    throw TraceDecodeError(ex.what(), lineno);
  }
  if (forms.size() != 1 || !forms[0].is_list() || forms[0].items.size() != 5) {
    throw TraceDecodeError("expected (event entry|exit (params) pid ts)",
                           lineno);
  }
  const SExpr& f = forms[0];
  Observation o;
  if (!f.items[0].is_symbol()) {
    throw TraceDecodeError("event name must be a symbol", lineno);
  }
  o.event = f.items[0].text;
  if (f.items[1].is_symbol("entry")) {
    o.tag = Tag::entry;
  } else if (f.items[1].is_symbol("exit")) {
    o.tag = Tag::exit;
  } else {
    throw TraceDecodeError("tag must be entry or exit", lineno);
  }
  if (!f.items[2].is_list()) {
    throw TraceDecodeError("parameters must be a list", lineno);
  }
  for (const SExpr& p : f.items[2].items) {
    o.args.push_back(value_from_sexpr(p, lineno));
  }
  if (!f.items[3].is_num() || !f.items[4].is_num()) {
    throw TraceDecodeError("pid and ts must be numeric", lineno);
  }
  o.pid = static_cast<long long>(f.items[3].num);
  o.ts = static_cast<long long>(f.items[4].num);
  return o;
}

}  // namespace

std::string Observation::summary() const {
  std::string out = event;
  out += ' ';
  out += tag_name(tag);
  if (!args.empty()) {
    out += " (";
    for (size_t i = 0; i < args.size(); ++i) {
      if (i) out += ' ';
      out += args[i].to_text();
    }
    out += ')';
  }
  return out;
}

Observation decode_observation(const std::string& line, size_t lineno) {
  size_t i = line.find_first_not_of(" \t\r");
  if (i == std::string::npos) {
    throw TraceDecodeError("empty observation line", lineno);
  }
  if (line[i] == '{') return decode_json_line(line, lineno);
  if (line[i] == '(') return decode_sexpr_line(line, lineno);
  throw TraceDecodeError("observation must be a JSON object or s-expression",
                         lineno);
}

std::string encode_observation(const Observation& o) {
  json j;
  j["event"] = o.event;
  j["tag"] = tag_name(o.tag);
  j["args"] = json::array();
  for (const Value& v : o.args) j["args"].push_back(value_to_json(v));
  j["pid"] = o.pid;
  j["ts"] = o.ts;
  if (!o.facts.empty()) {
    j["facts"] = json::array();
    for (const FactOp& f : o.facts) {
      json jf;
      jf["op"] = f.assertion ? "assert" : "retract";
      jf["fact"] = json::array();
      jf["fact"].push_back(f.fact.pred);
      for (const Value& v : f.fact.args) jf["fact"].push_back(value_to_json(v));
      j["facts"].push_back(jf);
    }
  }
  return j.dump();
}

std::vector<Observation> read_trace(std::istream& in) {
  std::vector<Observation> trace;
  std::string line;
  size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    size_t i = line.find_first_not_of(" \t\r");
    if (i == std::string::npos || line[i] == ';' || line[i] == '#') continue;
    trace.push_back(decode_observation(line, lineno));
  }
  return trace;
}

std::vector<Observation> read_trace_text(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in);
}

std::string write_trace(const std::vector<Observation>& trace) {
  std::string out;
  for (const Observation& o : trace) {
    out += encode_observation(o);
    out += '\n';
  }
  return out;
}

}  // namespace sam
