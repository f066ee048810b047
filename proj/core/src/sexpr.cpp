#include "sam/sexpr.hpp"

#include <cctype>
#include <cstdlib>
#include <sstream>

namespace sam {

std::string SourcePos::to_string() const {
  return std::to_string(line) + ":" + std::to_string(col);
}

SExpr SExpr::symbol(std::string name) {
  SExpr e;
  e.kind = Kind::Symbol;
  e.text = std::move(name);
  return e;
}

SExpr SExpr::keyword(std::string name) {
  SExpr e;
  e.kind = Kind::Keyword;
  e.text = std::move(name);
  return e;
}

SExpr SExpr::var(std::string name) {
  SExpr e;
  e.kind = Kind::Var;
  e.text = std::move(name);
  return e;
}

SExpr SExpr::quoted(SExpr inner) {
  SExpr e;
  e.kind = Kind::Quoted;
  e.items.push_back(std::move(inner));
  return e;
}

SExpr SExpr::str(std::string value) {
  SExpr e;
  e.kind = Kind::Str;
  e.text = std::move(value);
  return e;
}

SExpr SExpr::number(std::string literal) {
  SExpr e;
  e.kind = Kind::Num;
  e.num = std::strtod(literal.c_str(), nullptr);
  e.text = std::move(literal);
  return e;
}

SExpr SExpr::list(std::vector<SExpr> items) {
  SExpr e;
  e.kind = Kind::List;
  e.items = std::move(items);
  return e;
}

SExpr SExpr::bracket(std::vector<SExpr> items) {
  SExpr e;
  e.kind = Kind::Bracket;
  e.items = std::move(items);
  return e;
}

bool SExpr::operator==(const SExpr& other) const {
  if (kind != other.kind) return false;
  switch (kind) {
    case Kind::Symbol:
    case Kind::Keyword:
    case Kind::Var:
    case Kind::Str:
    case Kind::Num:
      return text == other.text;
    case Kind::Quoted:
    case Kind::List:
    case Kind::Bracket:
      return items == other.items;
  }
  return false;
}

namespace {

bool is_ws(char c) { return c == ' ' || c == '\t' || c == '\r' || c == '\n'; }

bool is_delim(char c) {
  return is_ws(c) || c == '(' || c == ')' || c == '[' || c == ']' ||
         c == '"' || c == ';' || c == '\'';
}

bool is_number_literal(const std::string& s) {
  size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  if (i >= s.size()) return false;
  bool digits = false, dot = false;
  for (; i < s.size(); ++i) {
    if (std::isdigit(static_cast<unsigned char>(s[i]))) {
      digits = true;
    } else if (s[i] == '.' && !dot) {
      dot = true;
    } else {
      return false;
    }
  }
  return digits;
}

std::string lowercase(std::string s) {
  for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

class Reader {
 public:
  explicit Reader(std::string_view src) : src_(src) {}

  std::vector<SExpr> read_all() {
    std::vector<SExpr> forms;
    skip_blank();
    while (!eof()) {
      forms.push_back(read_expr());
      skip_blank();
    }
    return forms;
  }

 private:
  std::string_view src_;
  size_t i_ = 0;
  int line_ = 1;
  int col_ = 1;

  bool eof() const { return i_ >= src_.size(); }
  char peek() const { return src_[i_]; }
  SourcePos pos() const { return {line_, col_}; }

  char advance() {
    char c = src_[i_++];
    if (c == '\n') {
      ++line_;
      col_ = 1;
    } else {
      ++col_;
    }
    return c;
  }

  void skip_blank() {
    while (!eof()) {
      char c = peek();
      if (is_ws(c)) {
        advance();
      } else if (c == ';') {
        while (!eof() && peek() != '\n') advance();
      } else {
        break;
      }
    }
  }

  SExpr read_expr() {
    SourcePos p = pos();
    char c = peek();
    if (c == '(') return read_seq(')', p);
    if (c == '[') return read_seq(']', p);
    if (c == ')' || c == ']') {
      throw ParseError("UnbalancedDelimiter",
                       std::string("unmatched '") + c + "'", p);
    }
    if (c == '\'') {
      advance();
      skip_blank();
      if (eof()) {
        throw ParseError("UnbalancedDelimiter", "quote at end of input", p);
      }
      SExpr e = SExpr::quoted(read_expr());
      e.pos = p;
      return e;
    }
    if (c == '"') return read_string(p);
    return read_atom(p);
  }

  SExpr read_seq(char closer, SourcePos p) {
    advance();  // opener
    std::vector<SExpr> items;
    for (;;) {
      skip_blank();
      if (eof()) {
        throw ParseError("UnbalancedDelimiter",
                         std::string("missing '") + closer + "'", p);
      }
      char c = peek();
      if (c == closer) {
        advance();
        break;
      }
      if (c == ')' || c == ']') {
        throw ParseError("UnbalancedDelimiter",
                         std::string("expected '") + closer + "' but found '" +
                             c + "'",
                         pos());
      }
      items.push_back(read_expr());
    }
    SExpr e = closer == ')' ? SExpr::list(std::move(items))
                            : SExpr::bracket(std::move(items));
    e.pos = p;
    return e;
  }

  SExpr read_string(SourcePos p) {
    advance();  // opening quote
    std::string out;
    for (;;) {
      if (eof()) throw ParseError("UnterminatedString", "unterminated string", p);
      char c = advance();
      if (c == '"') break;
      if (c == '\\') {
        if (eof()) throw ParseError("UnterminatedString", "unterminated string", p);
        char esc = advance();
        switch (esc) {
          case 'n': out.push_back('\n'); break;
          case 't': out.push_back('\t'); break;
          default: out.push_back(esc); break;
        }
      } else {
        out.push_back(c);
      }
    }
    SExpr e = SExpr::str(std::move(out));
    e.pos = p;
    return e;
  }

  SExpr read_atom(SourcePos p) {
    std::string tok;
    while (!eof() && !is_delim(peek())) {
      char c = peek();
      if (static_cast<unsigned char>(c) < 0x20) {
        throw ParseError("IllegalCharacter",
                         "illegal character 0x" + std::to_string(int(c)), pos());
      }
      tok.push_back(advance());
    }
    if (tok.empty()) {
      throw ParseError("IllegalCharacter", "empty token", p);
    }
    SExpr e;
    if (tok[0] == ':' && tok.size() > 1) {
      e = SExpr::keyword(lowercase(tok.substr(1)));
    } else if (tok[0] == '?' && tok.size() > 1) {
      e = SExpr::var(lowercase(tok.substr(1)));
    } else if (is_number_literal(tok)) {
      e = SExpr::number(tok);
    } else {
      e = SExpr::symbol(lowercase(tok));
    }
    e.pos = p;
    return e;
  }
};

void print_expr(const SExpr& e, std::string& out) {
  switch (e.kind) {
    case SExpr::Kind::Symbol:
      out += e.text;
      break;
    case SExpr::Kind::Keyword:
      out += ':';
      out += e.text;
      break;
    case SExpr::Kind::Var:
      out += '?';
      out += e.text;
      break;
    case SExpr::Kind::Num:
      out += e.text;
      break;
    case SExpr::Kind::Str: {
      out += '"';
      for (char c : e.text) {
        if (c == '"' || c == '\\') out += '\\';
        if (c == '\n') {
          out += "\\n";
          continue;
        }
        out += c;
      }
      out += '"';
      break;
    }
    case SExpr::Kind::Quoted:
      out += '\'';
      print_expr(e.items.front(), out);
      break;
    case SExpr::Kind::List:
    case SExpr::Kind::Bracket: {
      out += e.kind == SExpr::Kind::List ? '(' : '[';
      for (size_t i = 0; i < e.items.size(); ++i) {
        if (i) out += ' ';
        print_expr(e.items[i], out);
      }
      out += e.kind == SExpr::Kind::List ? ')' : ']';
      break;
    }
  }
}

}  // namespace

std::vector<SExpr> read_all(std::string_view source) {
  return Reader(source).read_all();
}

std::string to_text(const SExpr& e) {
  std::string out;
  print_expr(e, out);
  return out;
}

std::string to_text(const std::vector<SExpr>& forms) {
  std::string out;
  for (size_t i = 0; i < forms.size(); ++i) {
    if (i) out += '\n';
    print_expr(forms[i], out);
  }
  return out;
}

}  // namespace sam
