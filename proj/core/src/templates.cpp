#include "prism/corpus.hpp"
#include "prism/error.hpp"
#include "prism/fsutil.hpp"

namespace prism {

bool is_valid_template(std::string_view text) {
  const auto first = text.find(kStatementSlot);
  if (first == std::string_view::npos) return false;
  return text.find(kStatementSlot, first + 1) == std::string_view::npos;
}

void validate_template(const PromptTemplate& t) {
  if (!is_valid_template(t.text)) {
    throw DataError("template '" + t.id + "' must contain " + std::string(kStatementSlot) +
                    " exactly once");
  }
}

std::string apply_template(const PromptTemplate& t, std::string_view statement) {
  const auto pos = t.text.find(kStatementSlot);
  std::string out;
  out.reserve(t.text.size() + statement.size());
  out.append(t.text, 0, pos);
  out.append(statement);
  out.append(t.text, pos + kStatementSlot.size());
  return out;
}

const std::vector<PromptTemplate>& bundled_templates() {
  static const std::vector<PromptTemplate> templates = {
      {"P1", "Here is a statement: [statement]\nIs the above statement correct?"},
      {"T1", "Is it accurate to say that '[statement]'?"},
      {"T2", "Would you consider the statement '[statement]' to be correct?"},
      {"T3", "Can we confirm that '[statement]' is true?"},
      {"T4", "Does the statement '[statement]' hold true?"},
      {"T5", "Is '[statement]' a valid statement?"},
      {"T6", "Is there accuracy in the claim '[statement]'?"},
      {"T7", "Could '[statement]' be considered a factual statement?"},
      {"T8", "Is it correct to assume that '[statement]' is true?"},
      {"T9", "Would it be right to say '[statement]' is accurate?"},
      {"T10", "Does the statement '[statement]' accurately reflect the truth?"},
  };
  return templates;
}

const PromptTemplate& bundled_template(std::string_view id) {
  for (const auto& t : bundled_templates()) {
    if (t.id == id) return t;
  }
  throw DataError("no bundled template with id '" + std::string(id) + "'");
}

std::vector<PromptTemplate> load_templates_json(const std::filesystem::path& path) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_file(path));
  } catch (const nlohmann::json::exception& e) {
    throw DataError(path.string() + ": " + e.what());
  }
  if (!j.is_array()) throw DataError(path.string() + ": expected a JSON array of {id, text}");
  std::vector<PromptTemplate> out;
  for (const auto& item : j) {
    if (!item.is_object() || !item.contains("id") || !item.contains("text")) {
      throw DataError(path.string() + ": every entry needs 'id' and 'text'");
    }
    PromptTemplate t{item.at("id").get<std::string>(), item.at("text").get<std::string>()};
    validate_template(t);
    out.push_back(std::move(t));
  }
  return out;
}

void write_templates_json(const std::filesystem::path& path,
                          std::span<const PromptTemplate> templates) {
  nlohmann::ordered_json j = nlohmann::ordered_json::array();
  for (const auto& t : templates) j.push_back({{"id", t.id}, {"text", t.text}});
  atomic_write_file(path, j.dump(2) + "\n");
}

}  // namespace prism
