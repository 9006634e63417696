#include "persim/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include <json.hpp>

#include "persim/errors.hpp"
#include "persim/random.hpp"

using nlohmann::json;

namespace persim {

std::string to_string(VariableRole role) {
  switch (role) {
    case VariableRole::Paradata: return "paradata";
    case VariableRole::CoreSocioDemographic: return "core";
    case VariableRole::CandidateAttribute: return "candidate";
    case VariableRole::Outcome: return "outcome";
  }
  return "candidate";
}

VariableRole role_from_string(const std::string& text) {
  if (text == "paradata") return VariableRole::Paradata;
  if (text == "core") return VariableRole::CoreSocioDemographic;
  if (text == "candidate") return VariableRole::CandidateAttribute;
  if (text == "outcome") return VariableRole::Outcome;
  throw ValidationError("unknown variable role '" + text + "'");
}

bool VariableSpec::declares_code(int code) const {
  for (const auto& [c, label] : response_labels) {
    if (c == code) return true;
  }
  return false;
}

const std::string* VariableSpec::label_for(int code) const {
  for (const auto& [c, label] : response_labels) {
    if (c == code) return &label;
  }
  return nullptr;
}

int VariableSpec::reserved_missing_code() const {
  int max_code = 0;
  for (const auto& [c, label] : response_labels) max_code = std::max(max_code, c);
  return max_code + 1;
}

void VariableSpec::validate() const {
  if (id.empty()) throw ValidationError("variable with empty id");
  if (response_labels.empty()) {
    throw ValidationError("variable '" + id + "' declares no response codes");
  }
  std::set<int> seen;
  for (const auto& [code, label] : response_labels) {
    if (!seen.insert(code).second) {
      throw ValidationError("variable '" + id + "' declares code " +
                            std::to_string(code) + " twice");
    }
    if (label.empty()) {
      throw ValidationError("variable '" + id + "' has an empty label for code " +
                            std::to_string(code));
    }
    if (missing_codes.count(code)) {
      throw ValidationError("variable '" + id + "': code " + std::to_string(code) +
                            " is both a response code and a missing code");
    }
  }
}

SurveyDataset::SurveyDataset(std::string provenance,
                             std::vector<std::string> respondents,
                             std::vector<VariableSpec> variables,
                             std::vector<std::int32_t> cells)
    : provenance_(std::move(provenance)),
      respondents_(std::move(respondents)),
      variables_(std::move(variables)),
      cells_(std::move(cells)) {
  if (provenance_.empty()) throw ValidationError("dataset provenance tag is empty");
  if (cells_.size() != respondents_.size() * variables_.size()) {
    throw ValidationError("dataset matrix shape does not match respondent and variable counts");
  }
  for (const auto& v : variables_) v.validate();
  for (std::size_t r = 0; r < respondents_.size(); ++r) {
    for (std::size_t c = 0; c < variables_.size(); ++c) {
      std::int32_t cell = cells_[r * variables_.size() + c];
      if (cell == kMissingCell) continue;
      if (!variables_[c].declares_code(cell)) {
        throw ValidationError("value " + std::to_string(cell) +
                              " outside declared codes for variable '" +
                              variables_[c].id + "' (respondent " + respondents_[r] + ")");
      }
      if (variables_[c].missing_codes.count(cell)) {
        throw ValidationError("variable '" + variables_[c].id +
                              "' stores its missing code as a value");
      }
    }
  }
  rebuild_lookups();
}

void SurveyDataset::rebuild_lookups() {
  variable_lookup_.clear();
  respondent_lookup_.clear();
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (!variable_lookup_.emplace(variables_[i].id, i).second) {
      throw ValidationError("duplicate variable id '" + variables_[i].id + "'");
    }
  }
  for (std::size_t i = 0; i < respondents_.size(); ++i) {
    if (!respondent_lookup_.emplace(respondents_[i], i).second) {
      throw ValidationError("duplicate respondent id '" + respondents_[i] + "'");
    }
  }
}

std::optional<std::size_t> SurveyDataset::variable_index(const std::string& id) const {
  auto it = variable_lookup_.find(id);
  if (it == variable_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<std::size_t> SurveyDataset::respondent_index(const std::string& id) const {
  auto it = respondent_lookup_.find(id);
  if (it == respondent_lookup_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> SurveyDataset::value(std::size_t respondent, std::size_t variable) const {
  std::int32_t cell = cells_.at(respondent * variables_.size() + variable);
  if (cell == kMissingCell) return std::nullopt;
  return cell;
}

std::optional<int> SurveyDataset::value_by_id(const std::string& respondent_id,
                                              const std::string& variable_id) const {
  auto r = respondent_index(respondent_id);
  auto v = variable_index(variable_id);
  if (!r || !v) return std::nullopt;
  return value(*r, *v);
}

std::vector<std::size_t> SurveyDataset::variables_with_role(VariableRole role) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    if (variables_[i].role == role) out.push_back(i);
  }
  return out;
}

bool SurveyDataset::operator==(const SurveyDataset& other) const {
  if (provenance_ != other.provenance_ || respondents_ != other.respondents_ ||
      cells_ != other.cells_ || variables_.size() != other.variables_.size()) {
    return false;
  }
  for (std::size_t i = 0; i < variables_.size(); ++i) {
    const auto& a = variables_[i];
    const auto& b = other.variables_[i];
    if (a.id != b.id || a.question_text != b.question_text ||
        a.response_labels != b.response_labels || a.topic != b.topic ||
        a.role != b.role || a.missing_codes != b.missing_codes) {
      return false;
    }
  }
  return true;
}

namespace {

json variable_to_json(const VariableSpec& spec) {
  json labels = json::array();
  for (const auto& [code, label] : spec.response_labels) {
    labels.push_back(json::array({code, label}));
  }
  return json{{"id", spec.id},
              {"question", spec.question_text},
              {"labels", labels},
              {"topic", spec.topic},
              {"role", to_string(spec.role)},
              {"missing", spec.missing_codes}};
}

VariableSpec variable_from_json(const json& entry) {
  VariableSpec spec;
  if (!entry.is_object() || !entry.contains("id") || !entry.contains("question") ||
      !entry.contains("labels")) {
    throw ValidationError("malformed codebook: variable entries need id, question and labels");
  }
  spec.id = entry.at("id").get<std::string>();
  spec.question_text = entry.at("question").get<std::string>();
  if (!entry.at("labels").is_array()) {
    throw ValidationError("malformed codebook: labels of '" + spec.id + "' must be an array");
  }
  for (const auto& pair : entry.at("labels")) {
    if (!pair.is_array() || pair.size() != 2) {
      throw ValidationError("malformed codebook: label entries of '" + spec.id +
                            "' must be [code, label] pairs");
    }
    spec.response_labels.emplace_back(pair.at(0).get<int>(), pair.at(1).get<std::string>());
  }
  spec.topic = entry.value("topic", std::string{});
  if (entry.contains("role")) spec.role = role_from_string(entry.at("role").get<std::string>());
  if (entry.contains("missing")) {
    for (const auto& code : entry.at("missing")) spec.missing_codes.insert(code.get<int>());
  }
  spec.validate();
  return spec;
}

// Minimal RFC 4180 reader: quoted fields, embedded delimiters/quotes/newlines.
std::vector<std::vector<std::string>> read_delimited(std::istream& in, char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool any = false;

  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field.push_back('"');
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == delimiter) {
      row.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      if (!field.empty() && field.back() == '\r') field.pop_back();
      row.push_back(std::move(field));
      field.clear();
      rows.push_back(std::move(row));
      row.clear();
    } else {
      field.push_back(c);
    }
  }
  if (in_quotes) throw ValidationError("unterminated quoted field in data file");
  if (any && (!field.empty() || !row.empty())) {
    if (!field.empty() && field.back() == '\r') field.pop_back();
    row.push_back(std::move(field));
    rows.push_back(std::move(row));
  }
  return rows;
}

std::string trim(const std::string& text) {
  std::size_t begin = text.find_first_not_of(" \t");
  if (begin == std::string::npos) return "";
  std::size_t end = text.find_last_not_of(" \t");
  return text.substr(begin, end - begin + 1);
}

}  // namespace

SurveyDataset load_dataset(const std::string& data_path,
                           const std::string& codebook_path,
                           const LoadOptions& options) {
  std::ifstream codebook_file(codebook_path);
  if (!codebook_file) throw ValidationError("cannot open codebook '" + codebook_path + "'");
  json codebook;
  try {
    codebook = json::parse(codebook_file);
  } catch (const json::exception& e) {
    throw ValidationError("malformed codebook '" + codebook_path + "': " + e.what());
  }
  if (!codebook.is_object() || !codebook.contains("variables") ||
      !codebook.at("variables").is_array()) {
    throw ValidationError("malformed codebook: expected top-level object with a variables array");
  }
  const std::string provenance = codebook.value("provenance", std::string{});
  if (provenance.empty()) {
    throw ValidationError("malformed codebook: missing non-empty provenance tag");
  }
  const std::string id_column = codebook.value("id_column", std::string{});

  std::map<std::string, VariableSpec> declared;
  for (const auto& entry : codebook.at("variables")) {
    VariableSpec spec = variable_from_json(entry);
    if (!declared.emplace(spec.id, std::move(spec)).second) {
      throw ValidationError("malformed codebook: variable '" +
                            entry.at("id").get<std::string>() + "' declared twice");
    }
  }

  std::ifstream data_file(data_path, std::ios::binary);
  if (!data_file) throw ValidationError("cannot open data file '" + data_path + "'");
  auto rows = read_delimited(data_file, options.delimiter);
  if (rows.empty()) throw ValidationError("data file '" + data_path + "' has no header row");

  const auto& header = rows.front();
  std::vector<VariableSpec> variables;
  std::vector<std::size_t> variable_columns;
  std::optional<std::size_t> id_column_index;
  for (std::size_t col = 0; col < header.size(); ++col) {
    const std::string name = trim(header[col]);
    if (!id_column.empty() && name == id_column) {
      id_column_index = col;
      continue;
    }
    auto it = declared.find(name);
    if (it == declared.end()) {
      throw ValidationError("undeclared variable '" + name + "' in data header");
    }
    variables.push_back(it->second);
    variable_columns.push_back(col);
  }

  std::vector<std::string> respondents;
  std::vector<std::int32_t> cells;
  respondents.reserve(rows.size() - 1);
  cells.reserve((rows.size() - 1) * variables.size());

  for (std::size_t r = 1; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != header.size()) {
      throw ValidationError("row " + std::to_string(r) + " has " +
                            std::to_string(row.size()) + " fields, header has " +
                            std::to_string(header.size()));
    }
    if (id_column_index) {
      respondents.push_back(trim(row[*id_column_index]));
    } else {
      respondents.push_back(std::to_string(r - 1));
    }
    for (std::size_t v = 0; v < variables.size(); ++v) {
      const std::string cell = trim(row[variable_columns[v]]);
      if (cell.empty()) {
        cells.push_back(SurveyDataset::kMissingCell);
        continue;
      }
      int code = 0;
      try {
        std::size_t consumed = 0;
        code = std::stoi(cell, &consumed);
        if (consumed != cell.size()) throw std::invalid_argument(cell);
      } catch (const std::exception&) {
        throw ValidationError("non-integer value '" + cell + "' for variable '" +
                              variables[v].id + "' (row " + std::to_string(r) + ")");
      }
      if (variables[v].missing_codes.count(code)) {
        cells.push_back(SurveyDataset::kMissingCell);
      } else if (!variables[v].declares_code(code)) {
        throw ValidationError("value " + std::to_string(code) +
                              " outside declared codes for variable '" + variables[v].id +
                              "' (row " + std::to_string(r) + ")");
      } else {
        cells.push_back(code);
      }
    }
  }

  return SurveyDataset(provenance, std::move(respondents), std::move(variables),
                       std::move(cells));
}

SurveyDataset classify_roles(const SurveyDataset& dataset,
                             const std::vector<std::string>& core_ids,
                             const std::vector<std::string>& outcome_ids,
                             const std::vector<std::string>& paradata_ids) {
  std::map<std::string, VariableRole> assignment;
  auto assign = [&](const std::vector<std::string>& ids, VariableRole role) {
    for (const auto& id : ids) {
      if (!dataset.variable_index(id)) {
        throw ValidationError("unknown variable id '" + id + "' in role list");
      }
      if (!assignment.emplace(id, role).second) {
        throw ValidationError("variable '" + id + "' appears in more than one role list");
      }
    }
  };
  assign(core_ids, VariableRole::CoreSocioDemographic);
  assign(outcome_ids, VariableRole::Outcome);
  assign(paradata_ids, VariableRole::Paradata);

  SurveyDataset updated = dataset;
  for (auto& variable : updated.variables_) {
    auto it = assignment.find(variable.id);
    variable.role = it == assignment.end() ? VariableRole::CandidateAttribute : it->second;
  }
  return updated;
}

std::vector<std::string> sample_outcomes(const SurveyDataset& dataset,
                                         std::size_t per_topic,
                                         std::uint64_t seed) {
  if (per_topic == 0) return {};

  std::map<std::string, std::vector<std::string>> by_topic;
  for (const auto& variable : dataset.variables()) {
    if (variable.role == VariableRole::CandidateAttribute ||
        variable.role == VariableRole::Outcome) {
      by_topic[variable.topic].push_back(variable.id);
    }
  }

  std::vector<std::string> selected;
  for (auto& [topic, ids] : by_topic) {
    if (ids.size() < per_topic) {
      throw ValidationError("topic '" + topic + "' has " + std::to_string(ids.size()) +
                            " outcome-eligible variables, need " + std::to_string(per_topic));
    }
    RandomSource rng(mix_seed(seed, hash_text(topic)));
    rng.partial_shuffle(ids, per_topic);
    selected.insert(selected.end(), ids.begin(), ids.begin() + per_topic);
  }
  return selected;
}

std::string SurveyDataset::dump_json() const {
  json doc;
  doc["provenance"] = provenance_;
  doc["respondents"] = respondents_;
  json variables = json::array();
  for (const auto& v : variables_) variables.push_back(variable_to_json(v));
  doc["variables"] = std::move(variables);
  json values = json::array();
  for (std::size_t r = 0; r < respondents_.size(); ++r) {
    json row = json::array();
    for (std::size_t c = 0; c < variables_.size(); ++c) {
      auto v = value(r, c);
      if (v) {
        row.push_back(*v);
      } else {
        row.push_back(nullptr);
      }
    }
    values.push_back(std::move(row));
  }
  doc["values"] = std::move(values);
  return doc.dump();
}

SurveyDataset SurveyDataset::from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed dataset dump: ") + e.what());
  }
  std::vector<VariableSpec> variables;
  for (const auto& entry : doc.at("variables")) variables.push_back(variable_from_json(entry));
  std::vector<std::string> respondents = doc.at("respondents").get<std::vector<std::string>>();
  std::vector<std::int32_t> cells;
  cells.reserve(respondents.size() * variables.size());
  for (const auto& row : doc.at("values")) {
    for (const auto& cell : row) {
      cells.push_back(cell.is_null() ? kMissingCell : cell.get<std::int32_t>());
    }
  }
  return SurveyDataset(doc.at("provenance").get<std::string>(), std::move(respondents),
                       std::move(variables), std::move(cells));
}

}  // namespace persim
