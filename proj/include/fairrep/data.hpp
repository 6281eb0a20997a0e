#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fairrep/matrix.hpp"

namespace fairrep::data {

struct RejectedRow {
  std::size_t line = 0;  // 1-based line in the source file
  std::string reason;
};

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<RejectedRow> rejects;
  std::size_t records_read = 0;  // accepted + rejected, excluding the header
};

/// RFC 4180 reader: quoted fields, doubled quotes, CRLF. Fields are trimmed.
/// Blank lines are skipped; records with the wrong field count are rejected.
/// Without a header, `expected_fields` must be given.
CsvTable parse_csv(const std::string& text, bool has_header, std::size_t expected_fields = 0);

enum class ColumnKind { kContinuous, kCategorical, kSensitive, kTarget, kDrop };

const char* kind_name(ColumnKind kind);

/// Category name used for missing values of categorical columns.
inline constexpr const char* kMissingCategory = "<missing>";
/// Category that absorbs rare values when a frequency threshold applies.
inline constexpr const char* kOtherCategory = "<other>";

struct ColumnSpec {
  std::string name;
  ColumnKind kind = ColumnKind::kDrop;
  /// One-hot categories, in column order. For a sensitive column with
  /// `also_feature`, the categories of its feature encoding.
  std::vector<std::string> categories;
  /// Sensitive/target: raw values mapped to bit 1.
  std::vector<std::string> positive_values;
  /// Sensitive column that is also encoded as a one-hot feature group.
  bool also_feature = false;
  /// Values outside `categories` map to kOtherCategory when it is listed.
  bool has_other = false;
};

struct Schema {
  std::string dataset;
  std::vector<ColumnSpec> columns;
  std::vector<std::string> missing_tokens;
  /// Published binarized column count, when known.
  std::optional<std::size_t> reference_feature_count;

  /// Exactly one sensitive column, at most one target, non-empty categories.
  void validate() const;
  std::size_t feature_count() const;
  /// Canonical text of names, kinds and categories.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// A parsed file restricted to the schema columns, one string per cell.
struct RawTable {
  Schema schema;
  std::vector<std::vector<std::string>> rows;  // cells in schema column order
  std::vector<RejectedRow> rejects;
  std::size_t records_read = 0;
  /// Load-time facts worth recording in the manifest.
  std::vector<std::string> notes;
};

RawTable load_adult(const std::string& path);
RawTable load_adult_text(const std::string& text);
RawTable load_propublica(const std::string& path);
RawTable load_propublica_text(const std::string& text);

/// Projects a headed CSV onto the schema columns. Missing columns are an
/// error listing all of them.
RawTable project(const CsvTable& csv, const Schema& schema);

/// Builds sorted category lists from the observed values of every
/// categorical column (and sensitive columns with `also_feature`). With
/// `min_count` > 1 rarer values are folded into kOtherCategory.
void infer_categories(RawTable& raw, const std::string& column, std::size_t min_count = 1);

struct FeatureGroup {
  std::string name;
  std::size_t first = 0;
  std::size_t width = 0;
  bool continuous = false;
};

/// Per-column affine map x -> (x - mean) / stddev applied after replacing
/// NaN by the median. Indicator columns carry mean 0, stddev 1.
struct Scaler {
  std::vector<double> median;
  std::vector<double> mean;
  std::vector<double> stddev;

  bool empty() const { return mean.empty(); }
};

struct Dataset {
  Matrix features;
  std::vector<std::uint8_t> s;
  std::optional<std::vector<std::uint8_t>> y;
  std::vector<std::string> feature_names;
  std::vector<FeatureGroup> groups;
  Scaler scaler;  // empty until fitted
  std::uint64_t schema_hash = 0;
  std::string dataset;
  /// Rows whose one-hot group was left all-zero by an unseen category.
  std::size_t unseen_category_rows = 0;
  /// Indices into the source table.
  std::vector<std::size_t> source_rows;

  std::size_t rows() const { return s.size(); }
};

/// One-hot encodes categoricals and extracts S and Y. Continuous cells that
/// are missing become NaN until a scaler is applied.
Dataset encode(const RawTable& raw);

/// Fits on the listed rows (all rows when empty). NaN cells are ignored for
/// the median; moments are taken after imputation; zero spread maps to 1.
Scaler fit_scaler(const Dataset& dataset, std::span<const std::size_t> rows = {});
void apply_scaler(Dataset& dataset, const Scaler& scaler);

/// encode + fit_scaler(fit_rows) + apply_scaler.
Dataset binarize_and_scale(const RawTable& raw, std::span<const std::size_t> fit_rows = {});

struct SplitSpec {
  double train_fraction = 0.7;
  std::uint64_t seed = 0;

  void validate() const;
};

struct Split {
  Dataset train;
  Dataset test;
};

/// Seeded permutation; the first floor(f n) rows train. The scaler is fitted
/// on the training part of an unscaled dataset and applied to both parts.
Split split(const Dataset& unscaled, const SplitSpec& spec);

Dataset select_rows(const Dataset& dataset, std::span<const std::size_t> rows);

/// A seeded subset of `count` rows kept in source order.
Dataset subsample(const Dataset& dataset, std::size_t count, std::uint64_t seed);

struct Summary {
  std::size_t rows = 0;
  double p_y1 = 0.0;
  double p_s1 = 0.0;
  double p_y1_given_s1 = 0.0;
  double p_y1_given_s0 = 0.0;
  double statistical_parity = 0.0;
  double disparate_impact = 0.0;
};

/// Target-as-decision group statistics of a labelled dataset.
Summary summarize(const Dataset& dataset);
std::string format_summary(const Summary& summary);

/// Schema, feature groups and the itemized deviation from the reference
/// column count.
std::string manifest(const RawTable& raw, const Dataset& dataset);
std::string reject_report(const RawTable& raw);

/// Versioned little-endian binary cache of an encoded dataset. Loading
/// checks the stored schema hash when `expected_hash` is given.
void save_dataset(std::ostream& out, const Dataset& dataset);
Dataset load_dataset(std::istream& in, std::optional<std::uint64_t> expected_hash = std::nullopt);

/// Seeded synthetic data: `noise_features` standard normal columns plus
/// `sensitive_copies` columns equal to S plus Gaussian noise. Y depends on
/// the first noise column and on S.
struct SyntheticSpec {
  std::size_t rows = 1000;
  std::size_t noise_features = 4;
  std::size_t sensitive_copies = 2;
  double sensitive_noise = 0.1;
  double p_s1 = 0.5;
  double target_dependence = 1.0;
  std::uint64_t seed = 0;
};

SyntheticSpec parse_synthetic_manifest(const std::string& text);
Dataset make_synthetic(const SyntheticSpec& spec);

}  // namespace fairrep::data
