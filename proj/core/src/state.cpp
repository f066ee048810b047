#include "sam/state.hpp"

namespace sam {

const char* flag_name(Flag f) {
  switch (f) {
    case Flag::ready: return "ready";
    case Flag::running: return "running";
    case Flag::completed: return "completed";
  }
  return "?";
}

const char* mode_name(Mode m) {
  return m == Mode::normal ? "normal" : "compromised";
}

Env Env::push(const std::string& id, Value v) const {
  auto [loc, e] = take();
  (void)loc;
  e.context_[id] = std::move(v);
  return e;
}

const Value* Env::lookup(const std::string& id) const {
  auto it = context_.find(id);
  return it == context_.end() ? nullptr : &it->second;
}

std::pair<Location, Env> Env::take() const {
  Env e = *this;
  Location loc = e.space_++;
  return {loc, e};
}

std::string Fact::to_text() const {
  std::string out = "(" + pred;
  for (const Value& v : args) {
    out += ' ';
    out += v.to_text();
  }
  return out + ")";
}

}  // namespace sam
