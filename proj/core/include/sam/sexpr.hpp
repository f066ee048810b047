#pragma once

#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sam {

/// 1-based position in a source text.
struct SourcePos {
  int line = 0;
  int col = 0;
  bool valid() const { return line > 0; }
  std::string to_string() const;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(std::string code, const std::string& message, SourcePos pos)
      : std::runtime_error(message + " at " + pos.to_string()),
        code_(std::move(code)),
        pos_(pos) {}
  const std::string& code() const { return code_; }
  SourcePos pos() const { return pos_; }

 private:
  std::string code_;
  SourcePos pos_;
};

/// Generic expression tree for the model surface syntax. Symbols, keywords
/// and variables are stored lower-cased; string and numeric literals are
/// kept exactly as written.
struct SExpr {
  enum class Kind { Symbol, Keyword, Var, Quoted, Str, Num, List, Bracket };

  Kind kind = Kind::List;
  std::string text;          // name / string value / numeric literal as written
  double num = 0.0;          // parsed value when kind == Num
  std::vector<SExpr> items;  // children of List/Bracket; single child of Quoted
  SourcePos pos;

  static SExpr symbol(std::string name);
  static SExpr keyword(std::string name);
  static SExpr var(std::string name);
  static SExpr quoted(SExpr inner);
  static SExpr str(std::string value);
  static SExpr number(std::string literal);
  static SExpr list(std::vector<SExpr> items);
  static SExpr bracket(std::vector<SExpr> items);

  bool is_symbol() const { return kind == Kind::Symbol; }
  bool is_symbol(std::string_view name) const {
    return kind == Kind::Symbol && text == name;
  }
  bool is_keyword(std::string_view name) const {
    return kind == Kind::Keyword && text == name;
  }
  bool is_list() const { return kind == Kind::List; }
  bool is_bracket() const { return kind == Kind::Bracket; }
  bool is_num() const { return kind == Kind::Num; }
  size_t size() const { return items.size(); }
  const SExpr& at(size_t i) const { return items.at(i); }

  /// Structural equality; source positions are ignored. Numbers compare by
  /// their written literal.
  bool operator==(const SExpr& other) const;
};

/// Reads every top-level form of `source`. Comments start with ';' and run
/// to end of line. Throws ParseError (UnbalancedDelimiter, UnterminatedString,
/// IllegalCharacter) with line:column on malformed input.
std::vector<SExpr> read_all(std::string_view source);

/// Prints an expression so that read_all(to_text(e)) yields a structurally
/// equal expression.
std::string to_text(const SExpr& e);
std::string to_text(const std::vector<SExpr>& forms);

}  // namespace sam
