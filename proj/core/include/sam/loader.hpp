#pragma once

#include <string>
#include <vector>

#include "sam/model.hpp"
#include "sam/sexpr.hpp"

namespace sam {

class LoadError : public std::runtime_error {
 public:
  LoadError(std::string code, const std::string& message, SourcePos pos)
      : std::runtime_error(message +
                           (pos.valid() ? " at " + pos.to_string() : "")),
        code_(std::move(code)),
        pos_(pos) {}
  const std::string& code() const { return code_; }
  SourcePos pos() const { return pos_; }

 private:
  std::string code_;
  SourcePos pos_;
};

/// Elaborates top-level forms into a resolved model, left to right. Later
/// definitions may be referenced by earlier ones; name resolution is
/// deferred to check_model. Throws LoadError: UnknownTopForm,
/// DuplicateDefinition, MalformedClause.
SamModel load_model(const std::vector<SExpr>& forms);

/// read_all + load_model.
SamModel load_model_text(std::string_view source);

}  // namespace sam
