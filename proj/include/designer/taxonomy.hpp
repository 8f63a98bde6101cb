#pragma once

#include <algorithm>
#include <array>
#include <compare>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_set>
#include <vector>

#include "designer/error.hpp"

namespace designer {

/// A discipline label. Membership in the canonical label set is checked
/// against a Taxonomy, never assumed.
struct Discipline {
  std::string name;

  auto operator<=>(const Discipline&) const = default;
};

inline constexpr std::string_view kOtherDiscipline = "Other";
inline constexpr std::string_view kNonDisciplinary = "Non-disciplinary";
inline constexpr std::string_view kUnknownDiscipline = "Unknown Discipline";

// Order follows the label list of the discipline-classification prompt.
inline constexpr std::array<std::string_view, 78> kBuiltinDisciplineLabels = {
    "Mathematics",
    "Biology",
    "Chemistry",
    "Physics",
    "Computer Science and Technology",
    "Philosophy",
    "Psychology",
    "Business Administration",
    "Clinical Medicine",
    "Economics",
    "Law",
    "Political Science",
    "Statistics",
    "Electrical Engineering",
    "Geography",
    "Mechanical Engineering",
    "Basic Medicine",
    "Information and Communication Engineering",
    "Sociology",
    "Materials Science and Engineering",
    "Pharmacy",
    "Public Health and Preventive Medicine",
    "Mechanics",
    "Astronomy",
    "World History",
    "Bioengineering",
    "English and Foreign Languages",
    "Chemical Engineering and Technology",
    "Electronic Science and Technology",
    "Environmental Science and Engineering",
    "Nuclear Science and Technology",
    "Control Science and Engineering",
    "Management Science and Engineering",
    "Education",
    "Geophysics",
    "Art and Design",
    "Agricultural Engineering",
    "Aerospace Science and Technology",
    "Atmospheric Sciences",
    "Chinese Language and Literature",
    "Civil Engineering",
    "Ecology",
    "Geology",
    "Nursing",
    "Optical Engineering",
    "Public Administration",
    "Journalism and Communication",
    "Physical Education",
    "Marine Sciences",
    "Safety Science and Engineering",
    "Architecture",
    "Transportation Engineering",
    "Power Engineering and Engineering Thermophysics",
    "Food Science and Engineering",
    "Archaeology",
    "Biomedical Engineering",
    "Chinese History",
    "Veterinary Medicine",
    "Instrument Science and Technology",
    "Hydraulic Engineering",
    "Stomatology",
    "Urban and Rural Planning",
    "Petroleum and Natural Gas Engineering",
    "Naval Architecture and Ocean Engineering",
    "Surveying and Mapping Science and Technology",
    "History of Science and Technology",
    "Agricultural Resources and Environment",
    "Remote Sensing Science and Technology",
    "Information Resources Management",
    "Mining Engineering",
    "Forensic Medicine",
    "Ethnology",
    "Textile Science and Engineering",
    "Geological Resources and Geological Engineering",
    "Animal Husbandry",
    "Other",
    "Non-disciplinary",
    "Unknown Discipline",
};

class Taxonomy {
 public:
  explicit Taxonomy(std::vector<std::string> labels) : labels_(std::move(labels)) {
    for (const auto& l : labels_) {
      if (l.empty()) throw Error(ErrorCode::malformed_field, "empty discipline label");
      if (!index_.insert(l).second) throw Error(ErrorCode::malformed_field, "duplicate discipline label '" + l + "'");
    }
    for (auto s : {kOtherDiscipline, kNonDisciplinary, kUnknownDiscipline}) {
      if (!index_.count(std::string(s))) {
        throw Error(ErrorCode::malformed_field, "taxonomy lacks sentinel label '" + std::string(s) + "'");
      }
    }
  }

  static const Taxonomy& builtin() {
    static const Taxonomy t = [] {
      std::vector<std::string> v(kBuiltinDisciplineLabels.begin(), kBuiltinDisciplineLabels.end());
      return Taxonomy(std::move(v));
    }();
    return t;
  }

  /// One label per line; blank lines ignored; trailing CR stripped.
  static Taxonomy load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::io_error, "cannot open taxonomy file " + path.string());
    std::vector<std::string> labels;
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      if (line.empty()) continue;
      labels.push_back(line);
    }
    return Taxonomy(std::move(labels));
  }

  bool contains(std::string_view label) const { return index_.count(std::string(label)) > 0; }

  std::optional<Discipline> parse(std::string_view label) const {
    if (!contains(label)) return std::nullopt;
    return Discipline{std::string(label)};
  }

  static bool is_sentinel(std::string_view label) {
    return label == kOtherDiscipline || label == kNonDisciplinary || label == kUnknownDiscipline;
  }

  const std::vector<std::string>& labels() const noexcept { return labels_; }

  /// Canonical labels without the three sentinels.
  std::vector<std::string> disciplines() const {
    std::vector<std::string> out;
    std::copy_if(labels_.begin(), labels_.end(), std::back_inserter(out),
                 [](const std::string& l) { return !is_sentinel(l); });
    return out;
  }

 private:
  std::vector<std::string> labels_;
  std::unordered_set<std::string> index_;
};

}  // namespace designer
