#include "embrec/vocab.hpp"

#include "embrec/errors.hpp"

namespace embrec {

std::uint32_t Vocabulary::add(const std::string& name) {
  const auto [it, inserted] = index_.emplace(name, static_cast<std::uint32_t>(names_.size()));
  if (inserted) names_.push_back(name);
  return it->second;
}

std::optional<std::uint32_t> Vocabulary::find(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::uint32_t Vocabulary::at(const std::string& name) const {
  const auto it = index_.find(name);
  if (it == index_.end()) throw VocabularyError("unknown " + kind_ + " '" + name + "'");
  return it->second;
}

}  // namespace embrec
