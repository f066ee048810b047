#pragma once

#include <string>
#include <vector>

namespace sam {

enum class Tag { entry, exit };

const char* tag_name(Tag t);

/// Runtime value. Equality is structural and total; object references
/// compare by id.
class Value {
 public:
  enum class Kind {
    Nil,
    Text,
    Number,
    ObjectRef,
    Tuple,
    Event,      // reference to a registered event
    Component,  // reference to an ensemble
    Split,      // reference to a split model
    Attack      // reference to an attack model
  };

  Value() = default;

  static Value nil() { return Value(); }
  static Value text(std::string s) { return Value(Kind::Text, std::move(s)); }
  static Value number(double n) {
    Value v(Kind::Number, "");
    v.num_ = n;
    return v;
  }
  static Value object_ref(std::string id) {
    return Value(Kind::ObjectRef, std::move(id));
  }
  static Value tuple(std::vector<Value> items) {
    Value v(Kind::Tuple, "");
    v.items_ = std::move(items);
    return v;
  }
  static Value event_ref(std::string name) {
    return Value(Kind::Event, std::move(name));
  }
  static Value component_ref(std::string name) {
    return Value(Kind::Component, std::move(name));
  }
  static Value split_ref(std::string name) {
    return Value(Kind::Split, std::move(name));
  }
  static Value attack_ref(std::string name) {
    return Value(Kind::Attack, std::move(name));
  }

  Kind kind() const { return kind_; }
  bool is_nil() const { return kind_ == Kind::Nil; }
  const std::string& text() const { return text_; }
  double number_value() const { return num_; }
  const std::vector<Value>& items() const { return items_; }

  bool operator==(const Value& other) const;
  bool operator!=(const Value& other) const { return !(*this == other); }
  bool operator<(const Value& other) const;

  /// Display form, e.g. "new-event", #<obj the-model#1>, (a b).
  std::string to_text() const;

 private:
  Value(Kind k, std::string t) : kind_(k), text_(std::move(t)) {}

  Kind kind_ = Kind::Nil;
  std::string text_;
  double num_ = 0.0;
  std::vector<Value> items_;
};

}  // namespace sam
