#include "embrec/model/variant.hpp"

#include "embrec/errors.hpp"

namespace embrec::model {

VariantKind parse_variant_kind(const std::string& name) {
  if (name == "basic_binary") return VariantKind::basic_binary;
  if (name == "dcue") return VariantKind::dcue;
  if (name == "multi") return VariantKind::multi;
  if (name == "metric") return VariantKind::metric;
  throw ParseError("unknown variant '" + name + "' (basic_binary | dcue | multi | metric)");
}

std::string variant_kind_name(VariantKind kind) {
  switch (kind) {
    case VariantKind::basic_binary: return "basic_binary";
    case VariantKind::dcue: return "dcue";
    case VariantKind::multi: return "multi";
    case VariantKind::metric: return "metric";
  }
  return "?";
}

void VariantConfig::validate() const {
  if (paired() && n_negatives == 0) throw ContractError("variant: n_negatives must be at least 1");
  if ((kind == VariantKind::metric || kind == VariantKind::dcue) && !(margin > 0.0f)) {
    throw ContractError("variant: margin must be positive");
  }
  if (!(context_duration > 0.0) || context_duration > 30.0) {
    throw ContractError("variant: context duration must be in (0, 30] seconds");
  }
}

std::string VariantConfig::label() const {
  if (!paired()) return variant_kind_name(kind);
  return variant_kind_name(kind) + "-1vs" + std::to_string(n_negatives);
}

}  // namespace embrec::model
