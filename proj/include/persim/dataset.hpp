#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace persim {

enum class VariableRole { Paradata, CoreSocioDemographic, CandidateAttribute, Outcome };

std::string to_string(VariableRole role);
VariableRole role_from_string(const std::string& text);

/// One survey variable as declared by the codebook: question wording, the
/// declared answer codes with their labels, a topic, and the codes that mean
/// "no answer". Answer labels are used verbatim in personas, so codebooks
/// that prefix labels with their code ("(3) Mittlere Reife") keep the prefix.
struct VariableSpec {
  std::string id;
  std::string question_text;
  std::vector<std::pair<int, std::string>> response_labels;  // declared order
  std::string topic;
  VariableRole role = VariableRole::CandidateAttribute;
  std::set<int> missing_codes;

  bool declares_code(int code) const;
  const std::string* label_for(int code) const;

  /// Code reserved for imputing missing cells: one past the largest
  /// declared response code, never itself declared.
  int reserved_missing_code() const;

  /// Checks code uniqueness, label presence and missing-code disjointness.
  void validate() const;
};

/// Immutable respondents x variables matrix of optional integer codes plus
/// the codebook entries. Safe to share across threads once constructed.
class SurveyDataset {
 public:
  static constexpr std::int32_t kMissingCell = INT32_MIN;

  SurveyDataset() = default;
  SurveyDataset(std::string provenance, std::vector<std::string> respondents,
                std::vector<VariableSpec> variables,
                std::vector<std::int32_t> cells);

  std::size_t respondent_count() const { return respondents_.size(); }
  std::size_t variable_count() const { return variables_.size(); }
  const std::vector<std::string>& respondents() const { return respondents_; }
  const std::vector<VariableSpec>& variables() const { return variables_; }
  const std::string& provenance() const { return provenance_; }

  const VariableSpec& variable(std::size_t index) const { return variables_.at(index); }
  std::optional<std::size_t> variable_index(const std::string& id) const;
  std::optional<std::size_t> respondent_index(const std::string& id) const;

  std::optional<int> value(std::size_t respondent, std::size_t variable) const;
  std::optional<int> value_by_id(const std::string& respondent_id,
                                 const std::string& variable_id) const;

  std::vector<std::size_t> variables_with_role(VariableRole role) const;

  /// Canonical JSON dump for caching; from_json(dump_json()) round-trips.
  std::string dump_json() const;
  static SurveyDataset from_json(const std::string& text);

  bool operator==(const SurveyDataset& other) const;

 private:
  friend SurveyDataset classify_roles(const SurveyDataset&,
                                      const std::vector<std::string>&,
                                      const std::vector<std::string>&,
                                      const std::vector<std::string>&);

  std::string provenance_;
  std::vector<std::string> respondents_;
  std::vector<VariableSpec> variables_;
  std::vector<std::int32_t> cells_;  // row-major, kMissingCell = absent
  std::unordered_map<std::string, std::size_t> variable_lookup_;
  std::unordered_map<std::string, std::size_t> respondent_lookup_;

  void rebuild_lookups();
};

struct LoadOptions {
  char delimiter = ',';
};

/// Loads a delimiter-separated data file (header row of variable ids)
/// against a JSON codebook. Cells holding a declared missing code are
/// stored as absent; any other undeclared code is an error.
SurveyDataset load_dataset(const std::string& data_path,
                           const std::string& codebook_path,
                           const LoadOptions& options = {});

/// Reassigns every variable's role: ids in the three lists get the listed
/// role, everything else becomes CandidateAttribute. Lists must be pairwise
/// disjoint and name existing variables.
SurveyDataset classify_roles(const SurveyDataset& dataset,
                             const std::vector<std::string>& core_ids,
                             const std::vector<std::string>& outcome_ids,
                             const std::vector<std::string>& paradata_ids);

/// Draws `per_topic` outcome-eligible variables (candidates or already
/// outcomes) from every topic that has any. Deterministic given seed.
std::vector<std::string> sample_outcomes(const SurveyDataset& dataset,
                                         std::size_t per_topic,
                                         std::uint64_t seed);

}  // namespace persim
