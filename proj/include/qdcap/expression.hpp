#pragma once

#include <map>
#include <string>
#include <string_view>

namespace qdcap {

using ParameterMap = std::map<std::string, double, std::less<>>;

/// Evaluates an arithmetic expression over named parameters: numbers,
/// identifiers, + - * / and parentheses, unary minus. A leading '$' on an
/// identifier is accepted and ignored. Throws ValidationError on syntax errors
/// or unknown identifiers.
double evaluate_expression(std::string_view text, const ParameterMap& params);

}  // namespace qdcap
