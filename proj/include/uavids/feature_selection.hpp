#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "uavids/telemetry.hpp"

namespace uavids {

enum class Category { Location, PositionOrientation, IMU, SystemStatus, Control };

std::string_view to_string(Category c);
Category parse_category(std::string_view s);

struct CatalogEntry {
  std::string feature_name;
  Category category = Category::Location;
  friend bool operator==(const CatalogEntry&, const CatalogEntry&) = default;
};

/// All known features plus the selected subset. Both lists are kept in
/// lexicographic name order; downstream matrix columns follow `selected`.
class FeatureCatalog {
 public:
  FeatureCatalog() = default;
  /// Every entry starts out selected.
  explicit FeatureCatalog(std::vector<CatalogEntry> entries);
  FeatureCatalog(std::vector<CatalogEntry> entries, std::vector<std::string> selected);

  const std::vector<CatalogEntry>& entries() const noexcept { return entries_; }
  const std::vector<std::string>& selected() const noexcept { return selected_; }
  Category category_of(std::string_view name) const;
  bool is_selected(std::string_view name) const;

  FeatureCatalog with_selected(std::vector<std::string> names) const;

  friend bool operator==(const FeatureCatalog&, const FeatureCatalog&) = default;

 private:
  std::vector<CatalogEntry> entries_;
  std::vector<std::string> selected_;
};

struct SelectionReport {
  std::vector<std::string> dropped_missing;
  std::vector<std::string> dropped_tranquil;
  std::vector<std::string> dropped_category;
  std::vector<std::string> kept;
};

using CategoryMap = std::map<std::string, Category, std::less<>>;

CategoryMap parse_category_map(std::istream& in);
CategoryMap load_category_map(const std::filesystem::path& path);

/// Catalog of every feature observed in `logs`; a feature missing from the
/// map is an error.
FeatureCatalog build_catalog(std::span<const FlightLog> logs, const CategoryMap& categories);

FeatureCatalog filter_by_category(const FeatureCatalog& catalog);

struct UnstableResult {
  FeatureCatalog catalog;
  SelectionReport report;  // covers the features selected on input
};

UnstableResult drop_unstable(std::span<const FlightLog> logs, const FeatureCatalog& catalog);

/// Category filter followed by the stability rules; the report partitions
/// every catalog entry.
UnstableResult select_features(std::span<const FlightLog> logs, const FeatureCatalog& catalog);

void write_catalog(std::ostream& out, const FeatureCatalog& catalog);
void save_catalog(const std::filesystem::path& path, const FeatureCatalog& catalog);
FeatureCatalog read_catalog(std::istream& in);
FeatureCatalog load_catalog(const std::filesystem::path& path);

void write_selection_report(std::ostream& out, const SelectionReport& report);

}  // namespace uavids
