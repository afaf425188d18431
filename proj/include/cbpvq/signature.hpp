#pragma once

#include <algorithm>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "syntax.hpp"

namespace cbpvq {

enum class ArityKind {
  finite,       // α^n → α
  nat_indexed,  // α^ℕ → α
  nat_param,    // ℕ × α^n → α
};

struct Arity {
  ArityKind kind = ArityKind::finite;
  std::size_t count = 0;  // n for finite and nat_param
};

enum class IndexKind {
  none,    // plain operator, e.g. por
  label,   // index drawn from a fixed label set, e.g. lookup[l]
  number,  // nonnegative real index, e.g. cost[2.5]
};

/// One operator family. Families with a label index expand to one operator
/// per label (lookup_l for each location l).
struct OpDescriptor {
  std::string family;
  Arity arity;
  IndexKind index_kind = IndexKind::none;
  std::vector<std::string> labels;
};

class SignatureError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline std::optional<double> parse_cost_index(const std::string& s) {
  if (s.empty()) return std::nullopt;
  try {
    std::size_t used = 0;
    const double c = std::stod(s, &used);
    if (used != s.size() || !(c >= 0) || c == std::numeric_limits<double>::infinity()) return std::nullopt;
    return c;
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

class EffectSignature {
 public:
  EffectSignature() = default;
  EffectSignature(std::string name, std::vector<OpDescriptor> ops) : name_(std::move(name)), ops_(std::move(ops)) {
    for (std::size_t i = 0; i < ops_.size(); ++i)
      for (std::size_t j = i + 1; j < ops_.size(); ++j)
        if (ops_[i].family == ops_[j].family) throw SignatureError("duplicate operator family '" + ops_[i].family + "'");
  }

  const std::string& name() const { return name_; }
  const std::vector<OpDescriptor>& ops() const { return ops_; }

  const OpDescriptor* family(const std::string& f) const {
    for (const auto& d : ops_)
      if (d.family == f) return &d;
    return nullptr;
  }

  /// Resolves an operator instance; nullptr when it is not in the signature.
  const OpDescriptor* find(const OpName& op) const {
    const OpDescriptor* d = family(op.family);
    if (!d) return nullptr;
    switch (d->index_kind) {
      case IndexKind::none:
        return op.index.empty() ? d : nullptr;
      case IndexKind::label:
        return std::find(d->labels.begin(), d->labels.end(), op.index) != d->labels.end() ? d : nullptr;
      case IndexKind::number:
        return parse_cost_index(op.index) ? d : nullptr;
    }
    return nullptr;
  }

  bool has_family(const std::string& f) const { return family(f) != nullptr; }

 private:
  std::string name_;
  std::vector<OpDescriptor> ops_;
};

namespace ops {
inline OpDescriptor por() { return {"por", {ArityKind::finite, 2}, IndexKind::none, {}}; }
inline OpDescriptor nor() { return {"nor", {ArityKind::finite, 2}, IndexKind::none, {}}; }
inline OpDescriptor lookup(std::vector<std::string> locations) {
  return {"lookup", {ArityKind::nat_indexed, 0}, IndexKind::label, std::move(locations)};
}
inline OpDescriptor update(std::vector<std::string> locations) {
  return {"update", {ArityKind::nat_param, 1}, IndexKind::label, std::move(locations)};
}
inline OpDescriptor cost() { return {"cost", {ArityKind::finite, 1}, IndexKind::number, {}}; }
inline OpDescriptor raise(std::vector<std::string> errors) {
  return {"raise", {ArityKind::finite, 0}, IndexKind::label, std::move(errors)};
}
}  // namespace ops

}  // namespace cbpvq
