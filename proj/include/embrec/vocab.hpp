#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace embrec {

// Dense index assignment for string ids, in insertion order.
class Vocabulary {
 public:
  explicit Vocabulary(std::string kind = "id") : kind_(std::move(kind)) {}

  std::uint32_t add(const std::string& name);
  std::optional<std::uint32_t> find(const std::string& name) const;
  // Throws VocabularyError for unknown names.
  std::uint32_t at(const std::string& name) const;
  const std::string& name(std::uint32_t index) const { return names_.at(index); }
  std::size_t size() const { return names_.size(); }
  const std::string& kind() const { return kind_; }
  const std::vector<std::string>& names() const { return names_; }

 private:
  std::string kind_;
  std::vector<std::string> names_;
  std::unordered_map<std::string, std::uint32_t> index_;
};

}  // namespace embrec
