#include "uavids/feature_selection.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>
#include <set>
#include <unordered_map>

#include "text_util.hpp"
#include "uavids/error.hpp"

namespace uavids {

namespace {

constexpr std::string_view kMapHeader = "feature_name,category";
constexpr std::string_view kCatalogHeader = "feature_name,category,selected";

void sort_unique(std::vector<std::string>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

// Yields non-blank lines after checking the header.
template <typename Fn>
void read_csv(std::istream& in, std::string_view header, std::string_view what, Fn&& fn) {
  std::string line;
  bool have_header = false;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    auto s = detail::trim_cr(line);
    if (s.size() >= 3 && s.substr(0, 3) == "\xEF\xBB\xBF") s.remove_prefix(3);
    if (detail::trim(s).empty()) continue;
    if (!have_header) {
      if (s != header) {
        throw Error(ErrorKind::Parse, std::string(what) + ": malformed header '" +
                                          std::string(s) + "'");
      }
      have_header = true;
      continue;
    }
    fn(s, line_no);
  }
  if (!have_header) throw Error(ErrorKind::Parse, std::string(what) + ": missing header");
}

}  // namespace

std::string_view to_string(Category c) {
  switch (c) {
    case Category::Location: return "Location";
    case Category::PositionOrientation: return "PositionOrientation";
    case Category::IMU: return "IMU";
    case Category::SystemStatus: return "SystemStatus";
    case Category::Control: return "Control";
  }
  return "Control";
}

Category parse_category(std::string_view s) {
  s = detail::trim(s);
  for (auto c : {Category::Location, Category::PositionOrientation, Category::IMU,
                 Category::SystemStatus, Category::Control}) {
    if (s == to_string(c)) return c;
  }
  throw Error(ErrorKind::Parse, "unknown feature category '" + std::string(s) + "'");
}

FeatureCatalog::FeatureCatalog(std::vector<CatalogEntry> entries)
    : entries_(std::move(entries)) {
  std::sort(entries_.begin(), entries_.end(),
            [](const auto& a, const auto& b) { return a.feature_name < b.feature_name; });
  for (std::size_t i = 1; i < entries_.size(); ++i) {
    if (entries_[i].feature_name == entries_[i - 1].feature_name) {
      throw Error(ErrorKind::Schema, "duplicate catalog entry " + entries_[i].feature_name);
    }
  }
  for (const auto& e : entries_) selected_.push_back(e.feature_name);
}

FeatureCatalog::FeatureCatalog(std::vector<CatalogEntry> entries,
                               std::vector<std::string> selected)
    : FeatureCatalog(std::move(entries)) {
  *this = with_selected(std::move(selected));
}

Category FeatureCatalog::category_of(std::string_view name) const {
  const auto it = std::lower_bound(
      entries_.begin(), entries_.end(), name,
      [](const CatalogEntry& e, std::string_view n) { return e.feature_name < n; });
  if (it == entries_.end() || it->feature_name != name) {
    throw Error(ErrorKind::Schema, "feature " + std::string(name) + " not in catalog");
  }
  return it->category;
}

bool FeatureCatalog::is_selected(std::string_view name) const {
  return std::binary_search(selected_.begin(), selected_.end(), name);
}

FeatureCatalog FeatureCatalog::with_selected(std::vector<std::string> names) const {
  sort_unique(names);
  for (const auto& n : names) category_of(n);  // throws for unknown names
  FeatureCatalog out = *this;
  out.selected_ = std::move(names);
  return out;
}

CategoryMap parse_category_map(std::istream& in) {
  CategoryMap map;
  read_csv(in, kMapHeader, "category map", [&](std::string_view s, std::size_t line_no) {
    const auto f = detail::split(s, ',');
    if (f.size() != 2 || detail::trim(f[0]).empty()) {
      throw Error(ErrorKind::Parse,
                  "category map line " + std::to_string(line_no) + ": want 2 fields");
    }
    const std::string name(detail::trim(f[0]));
    const auto cat = parse_category(f[1]);
    const auto [it, inserted] = map.emplace(name, cat);
    if (!inserted && it->second != cat) {
      throw Error(ErrorKind::Parse, "category map: conflicting categories for " + name);
    }
  });
  return map;
}

CategoryMap load_category_map(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read category map " + path.string());
  return parse_category_map(in);
}

FeatureCatalog build_catalog(std::span<const FlightLog> logs, const CategoryMap& categories) {
  std::set<std::string, std::less<>> names;
  for (const auto& log : logs) {
    for (const auto& r : log.records) names.insert(r.feature_name);
  }
  std::vector<CatalogEntry> entries;
  std::vector<std::string> unmapped;
  for (const auto& n : names) {
    const auto it = categories.find(n);
    if (it == categories.end()) {
      unmapped.push_back(n);
      continue;
    }
    entries.push_back({n, it->second});
  }
  if (!unmapped.empty()) {
    std::string msg = "features without a category mapping:";
    for (const auto& n : unmapped) msg += " " + n;
    throw Error(ErrorKind::Schema, msg);
  }
  return FeatureCatalog(std::move(entries));
}

FeatureCatalog filter_by_category(const FeatureCatalog& catalog) {
  std::vector<std::string> keep;
  for (const auto& name : catalog.selected()) {
    if (catalog.category_of(name) != Category::Control) keep.push_back(name);
  }
  return catalog.with_selected(std::move(keep));
}

UnstableResult drop_unstable(std::span<const FlightLog> logs, const FeatureCatalog& catalog) {
  if (logs.empty()) throw Error(ErrorKind::Precondition, "drop_unstable needs at least one log");

  struct Stats {
    std::size_t logs_present = 0;
    bool have_value = false;
    double first = 0.0;
    bool varies = false;
  };
  std::unordered_map<std::string_view, Stats> stats;
  for (const auto& name : catalog.selected()) stats.emplace(name, Stats{});

  for (const auto& log : logs) {
    std::unordered_map<std::string_view, bool> seen;
    for (const auto& r : log.records) {
      const auto it = stats.find(r.feature_name);
      if (it == stats.end()) continue;
      auto& st = it->second;
      if (!seen[it->first]) {
        seen[it->first] = true;
        ++st.logs_present;
      }
      if (!st.have_value) {
        st.have_value = true;
        st.first = r.value;
      } else if (r.value != st.first) {
        st.varies = true;
      }
    }
  }

  UnstableResult result;
  auto& rep = result.report;
  for (const auto& name : catalog.selected()) {
    const auto& st = stats.at(name);
    if (st.logs_present < logs.size()) {
      rep.dropped_missing.push_back(name);
    } else if (!st.varies) {
      rep.dropped_tranquil.push_back(name);
    } else {
      rep.kept.push_back(name);
    }
  }
  result.catalog = catalog.with_selected(rep.kept);
  return result;
}

UnstableResult select_features(std::span<const FlightLog> logs, const FeatureCatalog& catalog) {
  const auto general = filter_by_category(catalog);
  auto result = drop_unstable(logs, general);
  for (const auto& e : catalog.entries()) {
    if (!general.is_selected(e.feature_name)) {
      result.report.dropped_category.push_back(e.feature_name);
    }
  }
  return result;
}

void write_catalog(std::ostream& out, const FeatureCatalog& catalog) {
  out << kCatalogHeader << '\n';
  for (const auto& e : catalog.entries()) {
    out << e.feature_name << ',' << to_string(e.category) << ','
        << (catalog.is_selected(e.feature_name) ? 1 : 0) << '\n';
  }
}

void save_catalog(const std::filesystem::path& path, const FeatureCatalog& catalog) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::Io, "cannot write catalog " + path.string());
  write_catalog(out, catalog);
}

FeatureCatalog read_catalog(std::istream& in) {
  std::vector<CatalogEntry> entries;
  std::vector<std::string> selected;
  read_csv(in, kCatalogHeader, "catalog", [&](std::string_view s, std::size_t line_no) {
    const auto f = detail::split(s, ',');
    const auto flag = f.size() == 3 ? detail::trim(f[2]) : std::string_view{};
    if (f.size() != 3 || (flag != "0" && flag != "1")) {
      throw Error(ErrorKind::Parse, "catalog line " + std::to_string(line_no) +
                                        ": want feature_name,category,selected");
    }
    const std::string name(detail::trim(f[0]));
    entries.push_back({name, parse_category(f[1])});
    if (flag == "1") {
      if (entries.back().category == Category::Control) {
        throw Error(ErrorKind::Schema, "catalog selects Control feature " + name);
      }
      selected.push_back(name);
    }
  });
  return FeatureCatalog(std::move(entries), std::move(selected));
}

FeatureCatalog load_catalog(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot read catalog " + path.string());
  return read_catalog(in);
}

void write_selection_report(std::ostream& out, const SelectionReport& report) {
  const auto line = [&](std::string_view key, const std::vector<std::string>& names) {
    out << key << " (" << names.size() << "):";
    for (const auto& n : names) out << ' ' << n;
    out << '\n';
  };
  line("kept", report.kept);
  line("dropped_category", report.dropped_category);
  line("dropped_missing", report.dropped_missing);
  line("dropped_tranquil", report.dropped_tranquil);
}

}  // namespace uavids
