#pragma once

#include <cstddef>
#include <string>

namespace embrec::model {

enum class VariantKind { basic_binary, dcue, multi, metric };

VariantKind parse_variant_kind(const std::string& name);
std::string variant_kind_name(VariantKind kind);

struct VariantConfig {
  VariantKind kind = VariantKind::metric;
  std::size_t n_negatives = 1;
  float margin = 0.2f;
  double context_duration = 3.0;

  // Throws ContractError when margin <= 0 for metric/dcue or n_negatives == 0
  // for a paired kind.
  void validate() const;
  bool paired() const { return kind != VariantKind::basic_binary; }
  bool uses_lookup_anchor() const { return kind == VariantKind::dcue; }

  // e.g. "metric-1vs4"
  std::string label() const;
};

}  // namespace embrec::model
