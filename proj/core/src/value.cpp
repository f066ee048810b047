#include "sam/value.hpp"

#include <sstream>

namespace sam {

const char* tag_name(Tag t) { return t == Tag::entry ? "entry" : "exit"; }

bool Value::operator==(const Value& other) const {
  if (kind_ != other.kind_) return false;
  switch (kind_) {
    case Kind::Nil:
      return true;
    case Kind::Number:
      return num_ == other.num_;
    case Kind::Tuple:
      return items_ == other.items_;
    default:
      return text_ == other.text_;
  }
}

bool Value::operator<(const Value& other) const {
  if (kind_ != other.kind_) return kind_ < other.kind_;
  switch (kind_) {
    case Kind::Nil:
      return false;
    case Kind::Number:
      return num_ < other.num_;
    case Kind::Tuple:
      return items_ < other.items_;
    default:
      return text_ < other.text_;
  }
}

std::string Value::to_text() const {
  switch (kind_) {
    case Kind::Nil:
      return "nil";
    case Kind::Text:
      return text_;
    case Kind::Number: {
      std::ostringstream os;
      os << num_;
      return os.str();
    }
    case Kind::ObjectRef:
      return "#<obj " + text_ + ">";
    case Kind::Tuple: {
      std::string out = "(";
      for (size_t i = 0; i < items_.size(); ++i) {
        if (i) out += ' ';
        out += items_[i].to_text();
      }
      return out + ")";
    }
    case Kind::Event:
      return "#<event " + text_ + ">";
    case Kind::Component:
      return "#<component " + text_ + ">";
    case Kind::Split:
      return "#<split " + text_ + ">";
    case Kind::Attack:
      return "#<attack-model " + text_ + ">";
  }
  return "?";
}

}  // namespace sam
