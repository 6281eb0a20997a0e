#include "fairrep/data.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>

#include <fmt/format.h>

#include "fairrep/error.hpp"
#include "fairrep/kv.hpp"
#include "fairrep/metrics.hpp"
#include "fairrep/random.hpp"

namespace fairrep::data {
namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool is_missing(const Schema& schema, const std::string& cell) {
  return std::find(schema.missing_tokens.begin(), schema.missing_tokens.end(), cell) !=
         schema.missing_tokens.end();
}

bool encodes_features(const ColumnSpec& column) {
  return column.kind == ColumnKind::kCategorical ||
         (column.kind == ColumnKind::kSensitive && column.also_feature);
}

// Index of `cell` in the category list of `column`, or nullopt when unseen.
std::optional<std::size_t> category_index(const Schema& schema, const ColumnSpec& column,
                                          const std::string& cell) {
  const std::string& key = is_missing(schema, cell) ? std::string(kMissingCategory) : cell;
  const auto it = std::find(column.categories.begin(), column.categories.end(), key);
  if (it != column.categories.end()) return static_cast<std::size_t>(it - column.categories.begin());
  if (column.has_other && !is_missing(schema, cell)) {
    const auto other = std::find(column.categories.begin(), column.categories.end(), kOtherCategory);
    if (other != column.categories.end()) {
      return static_cast<std::size_t>(other - column.categories.begin());
    }
  }
  return std::nullopt;
}

std::uint8_t to_bit(const ColumnSpec& column, const std::string& cell, std::size_t row) {
  if (std::find(column.positive_values.begin(), column.positive_values.end(), cell) !=
      column.positive_values.end()) {
    return 1;
  }
  if (cell.empty()) throw Error(fmt::format("row {}: missing value in {}", row, column.name));
  return 0;
}

// Little-endian raw I/O for the dataset cache.
template <typename T>
void put(std::ostream& out, T value) {
  static_assert(std::endian::native == std::endian::little, "cache format is little-endian");
  out.write(reinterpret_cast<const char*>(&value), sizeof(T));
}

template <typename T>
T get(std::istream& in) {
  T value{};
  if (!in.read(reinterpret_cast<char*>(&value), sizeof(T))) throw Error("dataset cache truncated");
  return value;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto size = get<std::uint64_t>(in);
  if (size > (std::uint64_t{1} << 32)) throw Error("dataset cache corrupt: string length");
  std::string s(size, '\0');
  if (!in.read(s.data(), static_cast<std::streamsize>(size))) throw Error("dataset cache truncated");
  return s;
}

constexpr char kCacheMagic[8] = {'F', 'R', 'D', 'S', 'E', 'T', '\0', '\1'};

Schema adult_schema() {
  Schema schema;
  schema.dataset = "adult";
  schema.missing_tokens = {"?"};
  schema.reference_feature_count = 110;
  const auto continuous = [](const char* name) { return ColumnSpec{name, ColumnKind::kContinuous, {}, {}, false, false}; };
  const auto categorical = [](const char* name) { return ColumnSpec{name, ColumnKind::kCategorical, {}, {}, false, false}; };
  schema.columns = {
      continuous("age"),
      categorical("workclass"),
      continuous("fnlwgt"),
      categorical("education"),
      continuous("education-num"),
      categorical("marital-status"),
      categorical("occupation"),
      categorical("relationship"),
      categorical("race"),
      ColumnSpec{"sex", ColumnKind::kSensitive, {}, {"Male"}, true, false},
      continuous("capital-gain"),
      continuous("capital-loss"),
      continuous("hours-per-week"),
      categorical("native-country"),
      ColumnSpec{"income", ColumnKind::kTarget, {}, {">50K", ">50K."}, false, false},
  };
  return schema;
}

Schema propublica_schema() {
  Schema schema;
  schema.dataset = "propublica";
  schema.missing_tokens = {""};
  schema.reference_feature_count = 79;
  const auto continuous = [](const char* name) { return ColumnSpec{name, ColumnKind::kContinuous, {}, {}, false, false}; };
  const auto categorical = [](const char* name) { return ColumnSpec{name, ColumnKind::kCategorical, {}, {}, false, false}; };
  schema.columns = {
      categorical("sex"),
      continuous("age"),
      categorical("age_cat"),
      ColumnSpec{"race", ColumnKind::kSensitive, {}, {"African-American"}, true, false},
      continuous("juv_fel_count"),
      continuous("juv_misd_count"),
      continuous("juv_other_count"),
      continuous("priors_count"),
      continuous("days_b_screening_arrest"),
      continuous("c_days_from_compas"),
      categorical("c_charge_degree"),
      categorical("c_charge_desc"),
      ColumnSpec{"two_year_recid", ColumnKind::kTarget, {}, {"1"}, false, false},
  };
  return schema;
}

void infer_all_categories(RawTable& raw) {
  for (const ColumnSpec& column : raw.schema.columns) {
    if (encodes_features(column) && column.categories.empty()) infer_categories(raw, column.name);
  }
}

}  // namespace

CsvTable parse_csv(const std::string& text, bool has_header, std::size_t expected_fields) {
  if (!has_header && expected_fields == 0) throw Error("headerless CSV needs a field count");
  CsvTable table;
  std::vector<std::string> fields;
  std::string field;
  bool quoted_field = false;
  std::size_t line = 1;
  std::size_t record_line = 1;
  std::size_t expected = expected_fields;
  bool header_pending = has_header;

  const auto finish_record = [&]() {
    fields.push_back(quoted_field ? field : trim(field));
    field.clear();
    quoted_field = false;
    if (fields.size() == 1 && fields[0].empty()) {
      fields.clear();
      return;
    }
    if (header_pending) {
      table.header = fields;
      if (expected == 0) expected = fields.size();
      header_pending = false;
    } else {
      ++table.records_read;
      if (fields.size() != expected) {
        table.rejects.push_back(
            {record_line, fmt::format("expected {} fields, found {}", expected, fields.size())});
      } else {
        table.rows.push_back(fields);
      }
    }
    fields.clear();
  };

  std::size_t i = 0;
  const std::size_t n = text.size();
  while (i < n) {
    const char c = text[i];
    if (c == '"' && trim(field).empty()) {
      // Quoted field: read to the closing quote, "" is a literal quote.
      field.clear();
      quoted_field = true;
      ++i;
      bool closed = false;
      while (i < n) {
        if (text[i] == '"') {
          if (i + 1 < n && text[i + 1] == '"') {
            field += '"';
            i += 2;
            continue;
          }
          ++i;
          closed = true;
          break;
        }
        if (text[i] == '\n') ++line;
        field += text[i++];
      }
      if (!closed) {
        ++table.records_read;
        table.rejects.push_back({record_line, "unterminated quoted field"});
        return table;
      }
      while (i < n && (text[i] == ' ' || text[i] == '\t')) ++i;
      continue;
    }
    if (c == ',') {
      fields.push_back(quoted_field ? field : trim(field));
      field.clear();
      quoted_field = false;
      ++i;
      continue;
    }
    if (c == '\r' || c == '\n') {
      finish_record();
      if (c == '\r' && i + 1 < n && text[i + 1] == '\n') ++i;
      ++i;
      ++line;
      record_line = line;
      continue;
    }
    field += c;
    ++i;
  }
  if (!field.empty() || !fields.empty() || quoted_field) finish_record();
  return table;
}

const char* kind_name(ColumnKind kind) {
  switch (kind) {
    case ColumnKind::kContinuous:
      return "continuous";
    case ColumnKind::kCategorical:
      return "categorical";
    case ColumnKind::kSensitive:
      return "sensitive";
    case ColumnKind::kTarget:
      return "target";
    case ColumnKind::kDrop:
      return "drop";
  }
  return "drop";
}

void Schema::validate() const {
  std::size_t sensitive = 0, target = 0;
  for (const ColumnSpec& column : columns) {
    if (column.kind == ColumnKind::kSensitive) ++sensitive;
    if (column.kind == ColumnKind::kTarget) ++target;
    if (encodes_features(column) && column.categories.empty()) {
      throw Error("categorical column '" + column.name + "' has no categories");
    }
    if ((column.kind == ColumnKind::kSensitive || column.kind == ColumnKind::kTarget) &&
        column.positive_values.empty()) {
      throw Error("column '" + column.name + "' has no positive value");
    }
  }
  if (sensitive != 1) throw Error("schema needs exactly one sensitive column");
  if (target > 1) throw Error("schema has more than one target column");
}

std::size_t Schema::feature_count() const {
  std::size_t count = 0;
  for (const ColumnSpec& column : columns) {
    if (column.kind == ColumnKind::kContinuous) ++count;
    if (encodes_features(column)) count += column.categories.size();
  }
  return count;
}

std::string Schema::canonical() const {
  std::string out = "dataset=" + dataset + "\n";
  for (const ColumnSpec& column : columns) {
    out += fmt::format("{}|{}|{}|", column.name, kind_name(column.kind), column.also_feature ? 1 : 0);
    for (const std::string& c : column.categories) out += c + ";";
    out += "|";
    for (const std::string& v : column.positive_values) out += v + ";";
    out += "\n";
  }
  return out;
}

std::uint64_t Schema::hash() const { return fnv1a64(canonical()); }

RawTable project(const CsvTable& csv, const Schema& schema) {
  std::vector<std::size_t> positions;
  std::vector<std::string> missing;
  for (const ColumnSpec& column : schema.columns) {
    // Duplicate header names resolve to the first occurrence.
    const auto it = std::find(csv.header.begin(), csv.header.end(), column.name);
    if (it == csv.header.end()) {
      missing.push_back(column.name);
    } else {
      positions.push_back(static_cast<std::size_t>(it - csv.header.begin()));
    }
  }
  if (!missing.empty()) {
    std::string list;
    for (const std::string& name : missing) list += (list.empty() ? "" : ", ") + name;
    throw Error("missing columns: " + list);
  }
  RawTable raw;
  raw.schema = schema;
  raw.rejects = csv.rejects;
  raw.records_read = csv.records_read;
  raw.rows.reserve(csv.rows.size());
  for (const auto& row : csv.rows) {
    std::vector<std::string> cells;
    cells.reserve(positions.size());
    for (std::size_t p : positions) cells.push_back(row[p]);
    raw.rows.push_back(std::move(cells));
  }
  return raw;
}

void infer_categories(RawTable& raw, const std::string& column_name, std::size_t min_count) {
  const auto it = std::find_if(raw.schema.columns.begin(), raw.schema.columns.end(),
                               [&](const ColumnSpec& c) { return c.name == column_name; });
  if (it == raw.schema.columns.end()) throw Error("unknown column '" + column_name + "'");
  const std::size_t col = static_cast<std::size_t>(it - raw.schema.columns.begin());
  std::map<std::string, std::size_t> counts;
  bool saw_missing = false;
  for (const auto& row : raw.rows) {
    if (is_missing(raw.schema, row[col])) {
      saw_missing = true;
    } else {
      ++counts[row[col]];
    }
  }
  std::vector<std::string> categories;
  bool folded = false;
  for (const auto& [value, count] : counts) {
    if (count >= min_count) {
      categories.push_back(value);
    } else {
      folded = true;
    }
  }
  if (saw_missing) categories.push_back(kMissingCategory);
  if (folded) categories.push_back(kOtherCategory);
  it->categories = std::move(categories);
  it->has_other = folded;
}

RawTable load_adult_text(const std::string& text) {
  const Schema schema = adult_schema();
  CsvTable csv = parse_csv(text, false, schema.columns.size());
  for (const ColumnSpec& column : schema.columns) csv.header.push_back(column.name);
  RawTable raw = project(csv, schema);
  infer_all_categories(raw);
  return raw;
}

RawTable load_adult(const std::string& path) { return load_adult_text(read_file(path)); }

RawTable load_propublica_text(const std::string& text) {
  const CsvTable csv = parse_csv(text, true);
  RawTable raw = project(csv, propublica_schema());
  infer_categories(raw, "c_charge_desc", 20);
  infer_all_categories(raw);

  const auto& columns = raw.schema.columns;
  const auto desc = static_cast<std::size_t>(
      std::find_if(columns.begin(), columns.end(),
                   [](const ColumnSpec& c) { return c.name == "c_charge_desc"; }) -
      columns.begin());
  const ColumnSpec& spec = columns[desc];
  std::size_t named = 0;
  std::size_t covered = 0;
  for (const std::string& c : spec.categories) {
    if (c != kMissingCategory && c != kOtherCategory) ++named;
  }
  for (const auto& row : raw.rows) {
    const auto index = category_index(raw.schema, spec, row[desc]);
    if (index && spec.categories[*index] != kOtherCategory &&
        spec.categories[*index] != kMissingCategory) {
      ++covered;
    }
  }
  const double coverage =
      raw.rows.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(raw.rows.size());
  raw.notes.push_back(fmt::format("c_charge_desc_kept_categories={}", named));
  raw.notes.push_back(fmt::format("c_charge_desc_coverage={}", format_double(coverage)));
  return raw;
}

RawTable load_propublica(const std::string& path) {
  return load_propublica_text(read_file(path));
}

Dataset encode(const RawTable& raw) {
  const Schema& schema = raw.schema;
  schema.validate();
  Dataset out;
  out.dataset = schema.dataset;
  out.schema_hash = schema.hash();
  bool has_target = false;
  for (const ColumnSpec& column : schema.columns) {
    if (column.kind == ColumnKind::kTarget) has_target = true;
    if (column.kind == ColumnKind::kContinuous) {
      out.groups.push_back({column.name, out.feature_names.size(), 1, true});
      out.feature_names.push_back(column.name);
    } else if (encodes_features(column)) {
      out.groups.push_back({column.name, out.feature_names.size(), column.categories.size(), false});
      for (const std::string& c : column.categories) out.feature_names.push_back(column.name + "=" + c);
    }
  }
  const std::size_t rows = raw.rows.size();
  out.features = Matrix::Zero(static_cast<Eigen::Index>(rows),
                              static_cast<Eigen::Index>(out.feature_names.size()));
  out.s.resize(rows);
  if (has_target) out.y.emplace(rows);
  out.source_rows.resize(rows);
  std::iota(out.source_rows.begin(), out.source_rows.end(), std::size_t{0});

  for (std::size_t r = 0; r < rows; ++r) {
    const auto& cells = raw.rows[r];
    const auto row = static_cast<Eigen::Index>(r);
    std::size_t group = 0;
    bool unseen = false;
    for (std::size_t c = 0; c < schema.columns.size(); ++c) {
      const ColumnSpec& column = schema.columns[c];
      const std::string& cell = cells[c];
      if (column.kind == ColumnKind::kSensitive) out.s[r] = to_bit(column, cell, r);
      if (column.kind == ColumnKind::kTarget) (*out.y)[r] = to_bit(column, cell, r);
      if (column.kind == ColumnKind::kContinuous) {
        const auto col = static_cast<Eigen::Index>(out.groups[group++].first);
        out.features(row, col) = is_missing(schema, cell) ? kNaN : parse_double(cell, column.name);
      } else if (encodes_features(column)) {
        const FeatureGroup& g = out.groups[group++];
        const auto index = category_index(schema, column, cell);
        if (index) {
          out.features(row, static_cast<Eigen::Index>(g.first + *index)) = 1.0;
        } else {
          unseen = true;
        }
      }
    }
    if (unseen) ++out.unseen_category_rows;
  }
  return out;
}

Scaler fit_scaler(const Dataset& dataset, std::span<const std::size_t> rows) {
  std::vector<std::size_t> all;
  if (rows.empty()) {
    all.resize(dataset.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    rows = all;
  }
  if (rows.empty()) throw Error("cannot fit a scaler on zero rows");
  const auto cols = static_cast<std::size_t>(dataset.features.cols());
  Scaler scaler;
  scaler.median.assign(cols, 0.0);
  scaler.mean.assign(cols, 0.0);
  scaler.stddev.assign(cols, 1.0);
  for (const FeatureGroup& g : dataset.groups) {
    if (!g.continuous) continue;
    const auto col = static_cast<Eigen::Index>(g.first);
    std::vector<double> observed;
    observed.reserve(rows.size());
    for (std::size_t r : rows) {
      const double v = dataset.features(static_cast<Eigen::Index>(r), col);
      if (!std::isnan(v)) observed.push_back(v);
    }
    double median = 0.0;
    if (!observed.empty()) {
      std::sort(observed.begin(), observed.end());
      const std::size_t m = observed.size();
      median = m % 2 == 1 ? observed[m / 2] : 0.5 * (observed[m / 2 - 1] + observed[m / 2]);
    }
    double sum = 0.0;
    for (std::size_t r : rows) {
      const double v = dataset.features(static_cast<Eigen::Index>(r), col);
      sum += std::isnan(v) ? median : v;
    }
    const double mean = sum / static_cast<double>(rows.size());
    double squares = 0.0;
    for (std::size_t r : rows) {
      const double v = dataset.features(static_cast<Eigen::Index>(r), col);
      const double d = (std::isnan(v) ? median : v) - mean;
      squares += d * d;
    }
    const double sd = std::sqrt(squares / static_cast<double>(rows.size()));
    scaler.median[g.first] = median;
    scaler.mean[g.first] = mean;
    scaler.stddev[g.first] = sd > 0.0 ? sd : 1.0;
  }
  return scaler;
}

void apply_scaler(Dataset& dataset, const Scaler& scaler) {
  const auto cols = static_cast<std::size_t>(dataset.features.cols());
  if (scaler.mean.size() != cols || scaler.stddev.size() != cols || scaler.median.size() != cols) {
    throw Error("scaler does not match the feature columns");
  }
  if (!dataset.scaler.empty()) throw Error("dataset is already scaled");
  for (const FeatureGroup& g : dataset.groups) {
    if (!g.continuous) continue;
    const auto col = static_cast<Eigen::Index>(g.first);
    for (Eigen::Index r = 0; r < dataset.features.rows(); ++r) {
      double& v = dataset.features(r, col);
      if (std::isnan(v)) v = scaler.median[g.first];
      v = (v - scaler.mean[g.first]) / scaler.stddev[g.first];
    }
  }
  dataset.scaler = scaler;
}

Dataset binarize_and_scale(const RawTable& raw, std::span<const std::size_t> fit_rows) {
  Dataset dataset = encode(raw);
  const Scaler scaler = fit_scaler(dataset, fit_rows);
  apply_scaler(dataset, scaler);
  return dataset;
}

void SplitSpec::validate() const {
  if (!(train_fraction > 0.0 && train_fraction < 1.0)) {
    throw Error("train_fraction must lie in (0,1)");
  }
}

Dataset select_rows(const Dataset& dataset, std::span<const std::size_t> rows) {
  Dataset out;
  out.features.resize(static_cast<Eigen::Index>(rows.size()), dataset.features.cols());
  out.s.resize(rows.size());
  if (dataset.y) out.y.emplace(rows.size());
  out.source_rows.resize(rows.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const std::size_t r = rows[i];
    if (r >= dataset.rows()) throw Error("row index out of range");
    out.features.row(static_cast<Eigen::Index>(i)) = dataset.features.row(static_cast<Eigen::Index>(r));
    out.s[i] = dataset.s[r];
    if (dataset.y) (*out.y)[i] = (*dataset.y)[r];
    out.source_rows[i] = dataset.source_rows[r];
  }
  out.feature_names = dataset.feature_names;
  out.groups = dataset.groups;
  out.scaler = dataset.scaler;
  out.schema_hash = dataset.schema_hash;
  out.dataset = dataset.dataset;
  return out;
}

Split split(const Dataset& unscaled, const SplitSpec& spec) {
  spec.validate();
  const std::size_t n = unscaled.rows();
  if (n < 2) throw Error("split needs at least 2 rows");
  const auto train_rows = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
  if (train_rows == 0 || train_rows == n) throw Error("split leaves one side empty");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(spec.seed);
  rng.shuffle(std::span<std::size_t>(order));
  const std::span<const std::size_t> all(order);
  Split out{select_rows(unscaled, all.first(train_rows)), select_rows(unscaled, all.subspan(train_rows))};
  if (unscaled.scaler.empty()) {
    const Scaler scaler = fit_scaler(out.train);
    apply_scaler(out.train, scaler);
    apply_scaler(out.test, scaler);
  }
  return out;
}

Dataset subsample(const Dataset& dataset, std::size_t count, std::uint64_t seed) {
  if (count == 0 || count > dataset.rows()) {
    throw Error(fmt::format("subsample size {} outside [1, {}]", count, dataset.rows()));
  }
  std::vector<std::size_t> order(dataset.rows());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(std::span<std::size_t>(order));
  order.resize(count);
  std::sort(order.begin(), order.end());
  return select_rows(dataset, order);
}

Summary summarize(const Dataset& dataset) {
  if (!dataset.y) throw Error("summary needs target labels");
  if (dataset.rows() == 0) throw Error("empty sample");
  const DiscreteJoint joint = DiscreteJoint::from_rows(dataset.s, *dataset.y);
  const std::vector<double> decision(dataset.y->begin(), dataset.y->end());
  const GroupRates rates = group_rates(decision, joint);
  Summary summary;
  summary.rows = dataset.rows();
  summary.p_y1 = marginal_y(joint);
  summary.p_s1 = marginal_s(joint);
  summary.p_y1_given_s1 = rates.given_s1;
  summary.p_y1_given_s0 = rates.given_s0;
  summary.statistical_parity = rates.given_s1 - rates.given_s0;
  if (rates.given_s1 <= 0.0) throw Error("DI undefined: p(Y=1|S=1) = 0");
  summary.disparate_impact = 1.0 - rates.given_s0 / rates.given_s1;
  return summary;
}

std::string format_summary(const Summary& s) {
  return fmt::format(
      "rows={}\np_y1={}\np_s1={}\np_y1_given_s1={}\np_y1_given_s0={}\nstatistical_parity={}\n"
      "disparate_impact={}\n",
      s.rows, format_double(s.p_y1), format_double(s.p_s1), format_double(s.p_y1_given_s1),
      format_double(s.p_y1_given_s0), format_double(s.statistical_parity),
      format_double(s.disparate_impact));
}

std::string manifest(const RawTable& raw, const Dataset& dataset) {
  const Schema& schema = raw.schema;
  std::string out = "# fairrep schema manifest v1\n";
  out += fmt::format("dataset={}\nschema_hash={:016x}\n", schema.dataset, schema.hash());
  out += fmt::format("records_read={}\nrows_accepted={}\nrows_rejected={}\n", raw.records_read,
                     raw.rows.size(), raw.rejects.size());
  out += fmt::format("unseen_category_rows={}\n", dataset.unseen_category_rows);
  out += fmt::format("missing_tokens=");
  for (std::size_t i = 0; i < schema.missing_tokens.size(); ++i) {
    out += fmt::format("{}\"{}\"", i ? " " : "", schema.missing_tokens[i]);
  }
  out += "\n";
  for (const std::string& note : raw.notes) out += note + "\n";
  out += "\n[columns]\n";
  for (const ColumnSpec& column : schema.columns) {
    std::string line = fmt::format("{} kind={}", column.name, kind_name(column.kind));
    if (!column.positive_values.empty()) {
      line += " positive=";
      for (std::size_t i = 0; i < column.positive_values.size(); ++i) {
        line += (i ? "|" : "") + column.positive_values[i];
      }
    }
    if (column.also_feature) line += " also_feature=1";
    if (encodes_features(column)) line += fmt::format(" width={}", column.categories.size());
    if (column.kind == ColumnKind::kContinuous) line += " width=1";
    out += line + "\n";
  }
  out += "\n[feature_groups]\n";
  for (const FeatureGroup& g : dataset.groups) {
    out += fmt::format("{} first={} width={} {}\n", g.name, g.first, g.width,
                       g.continuous ? "continuous" : "one-hot");
  }
  out += "\n[feature_count]\n";
  const std::size_t count = dataset.feature_names.size();
  out += fmt::format("binarized_columns={}\n", count);
  if (schema.reference_feature_count) {
    const auto reference = static_cast<long long>(*schema.reference_feature_count);
    const long long deviation = static_cast<long long>(count) - reference;
    out += fmt::format("reference_columns={}\ndeviation={:+d}\n", reference, deviation);
    std::size_t continuous = 0, indicators = 0, sensitive = 0;
    for (const ColumnSpec& column : schema.columns) {
      if (column.kind == ColumnKind::kContinuous) ++continuous;
      if (column.kind == ColumnKind::kCategorical) indicators += column.categories.size();
      if (column.kind == ColumnKind::kSensitive && column.also_feature) sensitive += column.categories.size();
    }
    out += fmt::format("itemized: {} continuous + {} categorical indicators + {} sensitive indicators = {}\n",
                       continuous, indicators, sensitive, count);
    if (schema.dataset == "adult") {
      out += "itemized: target income is not an input column; a recipe that also one-hot encodes\n"
             "itemized: the two income values as inputs reaches the reference count\n";
    } else if (schema.dataset == "propublica") {
      out += "itemized: the reference column list is unpublished; the kept set is demographic,\n"
             "itemized: prior-count, screening-timing and charge columns, with post-outcome columns excluded\n";
    }
  }
  out += "\n[features]\n";
  for (const std::string& name : dataset.feature_names) out += name + "\n";
  return out;
}

std::string reject_report(const RawTable& raw) {
  std::string out = fmt::format("# fairrep reject report\ndataset={}\nrecords_read={}\nrejected={}\n",
                                raw.schema.dataset, raw.records_read, raw.rejects.size());
  for (const RejectedRow& r : raw.rejects) out += fmt::format("line {}: {}\n", r.line, r.reason);
  return out;
}

void save_dataset(std::ostream& out, const Dataset& d) {
  out.write(kCacheMagic, sizeof kCacheMagic);
  put<std::uint32_t>(out, 1);
  put<std::uint64_t>(out, d.schema_hash);
  put_string(out, d.dataset);
  put<std::uint64_t>(out, d.rows());
  put<std::uint64_t>(out, static_cast<std::uint64_t>(d.features.cols()));
  put<std::uint8_t>(out, d.y ? 1 : 0);
  put<std::uint64_t>(out, d.unseen_category_rows);
  for (const std::string& name : d.feature_names) put_string(out, name);
  put<std::uint64_t>(out, d.groups.size());
  for (const FeatureGroup& g : d.groups) {
    put_string(out, g.name);
    put<std::uint64_t>(out, g.first);
    put<std::uint64_t>(out, g.width);
    put<std::uint8_t>(out, g.continuous ? 1 : 0);
  }
  put<std::uint8_t>(out, d.scaler.empty() ? 0 : 1);
  if (!d.scaler.empty()) {
    for (const auto* v : {&d.scaler.median, &d.scaler.mean, &d.scaler.stddev}) {
      for (double x : *v) put<double>(out, x);
    }
  }
  for (std::size_t r = 0; r < d.rows(); ++r) {
    put<std::uint64_t>(out, d.source_rows[r]);
    put<std::uint8_t>(out, d.s[r]);
    if (d.y) put<std::uint8_t>(out, (*d.y)[r]);
  }
  out.write(reinterpret_cast<const char*>(d.features.data()),
            static_cast<std::streamsize>(d.features.size() * sizeof(double)));
  if (!out) throw Error("failed writing dataset cache");
}

Dataset load_dataset(std::istream& in, std::optional<std::uint64_t> expected_hash) {
  char magic[sizeof kCacheMagic];
  if (!in.read(magic, sizeof magic) || std::memcmp(magic, kCacheMagic, sizeof magic) != 0) {
    throw Error("not a fairrep dataset cache");
  }
  const auto version = get<std::uint32_t>(in);
  if (version != 1) throw Error(fmt::format("unsupported dataset cache version {}", version));
  Dataset d;
  d.schema_hash = get<std::uint64_t>(in);
  if (expected_hash && *expected_hash != d.schema_hash) {
    throw Error(fmt::format("schema hash mismatch: cache {:016x}, expected {:016x}", d.schema_hash,
                            *expected_hash));
  }
  d.dataset = get_string(in);
  const auto rows = get<std::uint64_t>(in);
  const auto cols = get<std::uint64_t>(in);
  const bool has_y = get<std::uint8_t>(in) != 0;
  d.unseen_category_rows = get<std::uint64_t>(in);
  if (rows > (std::uint64_t{1} << 32) || cols > (std::uint64_t{1} << 20)) {
    throw Error("dataset cache corrupt: dimensions");
  }
  for (std::uint64_t c = 0; c < cols; ++c) d.feature_names.push_back(get_string(in));
  const auto groups = get<std::uint64_t>(in);
  if (groups > cols) throw Error("dataset cache corrupt: groups");
  for (std::uint64_t g = 0; g < groups; ++g) {
    FeatureGroup group;
    group.name = get_string(in);
    group.first = get<std::uint64_t>(in);
    group.width = get<std::uint64_t>(in);
    group.continuous = get<std::uint8_t>(in) != 0;
    d.groups.push_back(std::move(group));
  }
  if (get<std::uint8_t>(in) != 0) {
    for (auto* v : {&d.scaler.median, &d.scaler.mean, &d.scaler.stddev}) {
      v->resize(cols);
      for (double& x : *v) x = get<double>(in);
    }
  }
  d.source_rows.resize(rows);
  d.s.resize(rows);
  if (has_y) d.y.emplace(rows);
  for (std::uint64_t r = 0; r < rows; ++r) {
    d.source_rows[r] = get<std::uint64_t>(in);
    d.s[r] = get<std::uint8_t>(in);
    if (has_y) (*d.y)[r] = get<std::uint8_t>(in);
  }
  d.features.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  if (!in.read(reinterpret_cast<char*>(d.features.data()),
               static_cast<std::streamsize>(d.features.size() * sizeof(double)))) {
    throw Error("dataset cache truncated");
  }
  return d;
}

SyntheticSpec parse_synthetic_manifest(const std::string& text) {
  SyntheticSpec spec;
  for (const auto& [key, value] : parse_key_value(text)) {
    if (key == "rows") {
      spec.rows = parse_uint(value, key);
    } else if (key == "noise_features") {
      spec.noise_features = parse_uint(value, key);
    } else if (key == "sensitive_copies") {
      spec.sensitive_copies = parse_uint(value, key);
    } else if (key == "sensitive_noise") {
      spec.sensitive_noise = parse_double(value, key);
    } else if (key == "p_s1") {
      spec.p_s1 = parse_double(value, key);
    } else if (key == "target_dependence") {
      spec.target_dependence = parse_double(value, key);
    } else if (key == "seed") {
      spec.seed = parse_uint(value, key);
    } else if (key != "kind") {
      throw Error("unknown synthetic manifest field: " + key);
    }
  }
  return spec;
}

Dataset make_synthetic(const SyntheticSpec& spec) {
  if (spec.rows < 2) throw Error("synthetic data needs at least 2 rows");
  if (spec.noise_features + spec.sensitive_copies == 0) throw Error("synthetic data needs features");
  if (!(spec.p_s1 > 0.0 && spec.p_s1 < 1.0)) throw Error("p_s1 must lie in (0,1)");
  if (!(spec.sensitive_noise >= 0.0)) throw Error("sensitive_noise must be non-negative");
  Rng rng(spec.seed);
  const std::size_t cols = spec.noise_features + spec.sensitive_copies;
  Dataset d;
  d.dataset = "synthetic";
  d.features.resize(static_cast<Eigen::Index>(spec.rows), static_cast<Eigen::Index>(cols));
  d.s.resize(spec.rows);
  d.y.emplace(spec.rows);
  d.source_rows.resize(spec.rows);
  std::iota(d.source_rows.begin(), d.source_rows.end(), std::size_t{0});
  for (std::size_t c = 0; c < cols; ++c) {
    const std::string name = c < spec.noise_features ? fmt::format("noise{}", c)
                                                     : fmt::format("sensitive_copy{}", c - spec.noise_features);
    d.feature_names.push_back(name);
    d.groups.push_back({name, c, 1, true});
  }
  for (std::size_t r = 0; r < spec.rows; ++r) {
    const auto row = static_cast<Eigen::Index>(r);
    const std::uint8_t s = rng.bernoulli(spec.p_s1) ? 1 : 0;
    d.s[r] = s;
    for (std::size_t c = 0; c < spec.noise_features; ++c) {
      d.features(row, static_cast<Eigen::Index>(c)) = rng.normal();
    }
    for (std::size_t c = 0; c < spec.sensitive_copies; ++c) {
      d.features(row, static_cast<Eigen::Index>(spec.noise_features + c)) =
          static_cast<double>(s) + spec.sensitive_noise * rng.normal();
    }
    const double signal = spec.noise_features > 0 ? d.features(row, 0) : 0.0;
    const double logit = 2.0 * signal + spec.target_dependence * (2.0 * s - 1.0);
    (*d.y)[r] = rng.uniform() < 1.0 / (1.0 + std::exp(-logit)) ? 1 : 0;
  }
  std::string canonical = "synthetic\n";
  for (const std::string& name : d.feature_names) canonical += name + "\n";
  d.schema_hash = fnv1a64(canonical);
  return d;
}

}  // namespace fairrep::data
