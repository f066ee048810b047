#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "sam/sexpr.hpp"
#include "sam/state.hpp"
#include "sam/value.hpp"

namespace sam {

struct FactOp {
  bool assertion = true;  // false = retract
  Fact fact;
};

/// One runtime event. Entry observations carry the input argument values,
/// exit observations the outputs. Fact operations attached to the
/// observation are applied to the monitor's fact store before dispatch.
struct Observation {
  std::string event;
  Tag tag = Tag::entry;
  std::vector<Value> args;
  long long pid = 0;
  long long ts = 0;  // microseconds
  std::vector<FactOp> facts;

  std::string summary() const;
};

class TraceDecodeError : public std::runtime_error {
 public:
  TraceDecodeError(const std::string& message, size_t line)
      : std::runtime_error("line " + std::to_string(line) + ": " + message),
        line_(line) {}
  size_t line() const { return line_; }

 private:
  size_t line_;
};

/// Decodes one trace line. JSON object lines use the JSON Lines trace
/// format; lines starting with '(' are read as s-expression observations
/// (EvntName entry|exit (params) pid ts).
Observation decode_observation(const std::string& line, size_t lineno);

/// Serializes to the JSON Lines format (stable key order).
std::string encode_observation(const Observation& o);

std::vector<Observation> read_trace(std::istream& in);
std::vector<Observation> read_trace_text(const std::string& text);
std::string write_trace(const std::vector<Observation>& trace);

}  // namespace sam
