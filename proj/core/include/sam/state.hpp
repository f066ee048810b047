#pragma once

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "sam/value.hpp"

namespace sam {

enum class Flag { ready, running, completed };
enum class Mode { normal, compromised };

const char* flag_name(Flag f);
const char* mode_name(Mode m);

using Location = int;

/// Binding environment: a context (identifier -> value) plus a space of
/// fresh variable locations. Value-semantic: push returns a new environment
/// and shadows rather than destroys earlier bindings held by older copies.
class Env {
 public:
  Env() = default;

  Env push(const std::string& id, Value v) const;
  const Value* lookup(const std::string& id) const;
  bool contains(const std::string& id) const { return lookup(id) != nullptr; }
  size_t size() const { return context_.size(); }

  /// Draws a fresh location; successive takes yield pairwise distinct
  /// locations.
  std::pair<Location, Env> take() const;

  int space() const { return space_; }

 private:
  std::map<std::string, Value> context_;
  int space_ = 0;
};

inline Env env_push(const Env& e, const std::string& id, Value v) {
  return e.push(id, std::move(v));
}

class BottomStateError : public std::runtime_error {
 public:
  BottomStateError() : std::runtime_error("update on bottom state") {}
};

/// Execution state: a store of variable locations, a lifecycle flag and a
/// health mode. The lifted bottom element absorbs flag/mode changes and
/// rejects store updates.
class RtState {
 public:
  RtState() = default;

  static RtState bottom() {
    RtState s;
    s.bottom_ = true;
    return s;
  }

  bool is_bottom() const { return bottom_; }
  Flag flag() const { return flag_; }
  Mode mode() const { return mode_; }

  RtState with_flag(Flag f) const {
    if (bottom_) return *this;
    RtState s = *this;
    s.flag_ = f;
    return s;
  }
  RtState with_mode(Mode m) const {
    if (bottom_) return *this;
    RtState s = *this;
    s.mode_ = m;
    return s;
  }
  bool eq_flag(Flag f) const { return !bottom_ && flag_ == f; }
  bool eq_mode(Mode m) const { return !bottom_ && mode_ == m; }

  RtState update(Location loc, Value v) const {
    if (bottom_) throw BottomStateError();
    RtState s = *this;
    s.store_[loc] = std::move(v);
    return s;
  }
  const Value* load(Location loc) const {
    auto it = store_.find(loc);
    return it == store_.end() ? nullptr : &it->second;
  }

 private:
  bool bottom_ = false;
  std::map<Location, Value> store_;
  Flag flag_ = Flag::ready;
  Mode mode_ = Mode::normal;
};

inline RtState state_update(const RtState& s, Location loc, Value v) {
  return s.update(loc, std::move(v));
}

struct Fact {
  std::string pred;
  std::vector<Value> args;

  bool operator==(const Fact& o) const {
    return pred == o.pred && args == o.args;
  }
  bool operator<(const Fact& o) const {
    if (pred != o.pred) return pred < o.pred;
    return args < o.args;
  }
  std::string to_text() const;
};

class UnknownSnapshotError : public std::runtime_error {
 public:
  explicit UnknownSnapshotError(const std::string& label)
      : std::runtime_error("unknown snapshot: " + label) {}
};

/// Ledger of asserted predicates. Snapshots freeze the live set under a
/// label; later assertions and retractions never affect a snapshot.
class FactStore {
 public:
  void assert_fact(Fact f) { live_.insert(std::move(f)); }
  void retract_fact(const Fact& f) { live_.erase(f); }
  bool holds(const Fact& f) const { return live_.count(f) > 0; }

  void take_snapshot(const std::string& label) { snapshots_[label] = live_; }
  bool has_snapshot(const std::string& label) const {
    return snapshots_.count(label) > 0;
  }
  bool holds_at(const std::string& label, const Fact& f) const {
    auto it = snapshots_.find(label);
    if (it == snapshots_.end()) throw UnknownSnapshotError(label);
    return it->second.count(f) > 0;
  }

  const std::set<Fact>& live() const { return live_; }

 private:
  std::set<Fact> live_;
  std::map<std::string, std::set<Fact>> snapshots_;
};

}  // namespace sam
