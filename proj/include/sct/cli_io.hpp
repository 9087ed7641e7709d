#pragma once

// CSV ingestion, run configuration, key/value reports and the command-line
// front end (`fit`, `critical`, `compare`, `roy`, `pvalues`, `tube`).

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#if __has_include(<CLI/CLI.hpp>)
#include <CLI/CLI.hpp>
#else
#include <CLI11.hpp>
#endif

#include "sct/classical_tests.hpp"
#include "sct/compare.hpp"
#include "sct/engine.hpp"
#include "sct/error.hpp"
#include "sct/model.hpp"
#include "sct/tube.hpp"

namespace sct {

// ---------------------------------------------------------------------------
// Text helpers

/// 17 significant digits: enough to round-trip every double.
inline std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline std::vector<std::string_view> split(std::string_view line, char sep) {
  std::vector<std::string_view> out;
  size_t start = 0;
  for (;;) {
    const size_t pos = line.find(sep, start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

inline std::optional<double> parse_real(std::string_view s) {
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

/// Parses "name<index>" and returns index, or 0 if it does not match.
inline int indexed_name(std::string_view s, char prefix) {
  if (s.size() < 2 || s.front() != prefix) return 0;
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data() + 1, s.data() + s.size(), v);
  return ec == std::errc() && ptr == s.data() + s.size() ? v : 0;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// CSV

/// Reads `group,x1,...,xp,y1,...,ym`. Groups keep first-appearance order and
/// the intercept column is prepended to each design. Error rows/columns are
/// 1-based file coordinates (the header is row 1).
inline GroupedDataset parse_csv(std::istream& in, const std::string& source = "<input>") {
  std::string line;
  if (!std::getline(in, line)) throw Error(Errc::MalformedHeader, source + ": empty file");
  const auto header = detail::split(line, ',');
  if (header.empty() || header[0] != "group") throw Error(Errc::MalformedHeader, source + ": first column must be 'group'");
  int p = 0, m = 0;
  for (size_t c = 1; c < header.size(); ++c) {
    if (m == 0 && detail::indexed_name(header[c], 'x') == p + 1) {
      ++p;
    } else if (detail::indexed_name(header[c], 'y') == m + 1) {
      ++m;
    } else {
      throw Error(Errc::MalformedHeader, source + ": unexpected column '" + std::string(header[c]) +
                                             "' (expected group,x1..xp,y1..ym)");
    }
  }
  if (m == 0) throw Error(Errc::MalformedHeader, source + ": no response columns y1..ym");

  std::vector<std::string> labels;
  std::map<std::string, size_t> index;
  std::vector<std::vector<std::vector<double>>> rows;
  const size_t width = header.size();
  for (size_t row = 2; std::getline(in, line); ++row) {
    if (detail::trim(line).empty()) continue;
    const auto cells = detail::split(line, ',');
    const std::string label(cells[0]);
    if (label.empty()) throw Error(Errc::EmptyGroup, source + ": row " + std::to_string(row) + " has an empty group label");
    std::vector<double> values(width - 1);
    for (size_t c = 1; c < width; ++c) {
      const auto v = c < cells.size() ? detail::parse_real(cells[c]) : std::nullopt;
      if (!v)
        throw Error(Errc::NonNumericCell, source + ": row " + std::to_string(row) + ", column " + std::to_string(c + 1) +
                                              " is not a number");
      values[c - 1] = *v;
    }
    if (cells.size() > width)
      throw Error(Errc::NonNumericCell, source + ": row " + std::to_string(row) + ", column " +
                                            std::to_string(width + 1) + " is beyond the header");
    auto [it, inserted] = index.try_emplace(label, labels.size());
    if (inserted) {
      labels.push_back(label);
      rows.emplace_back();
    }
    rows[it->second].push_back(std::move(values));
  }
  if (labels.empty()) throw Error(Errc::EmptyGroup, source + ": no data rows");

  GroupedDataset data;
  data.p = p;
  data.m = m;
  for (size_t g = 0; g < labels.size(); ++g) {
    const auto n = static_cast<Eigen::Index>(rows[g].size());
    Group group{labels[g], Eigen::MatrixXd(n, p + 1), Eigen::MatrixXd(n, m)};
    for (Eigen::Index r = 0; r < n; ++r) {
      group.X(r, 0) = 1.0;
      for (int c = 0; c < p; ++c) group.X(r, c + 1) = rows[g][r][c];
      for (int c = 0; c < m; ++c) group.Y(r, c) = rows[g][r][p + c];
    }
    data.groups.push_back(std::move(group));
  }
  return data;
}

inline GroupedDataset ingest_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(Errc::MalformedHeader, "cannot open '" + path + "'");
  return parse_csv(in, path);
}

inline void write_csv(const GroupedDataset& data, std::ostream& out) {
  out << "group";
  for (int c = 1; c <= data.p; ++c) out << ",x" << c;
  for (int c = 1; c <= data.m; ++c) out << ",y" << c;
  out << '\n';
  for (const Group& g : data.groups)
    for (Eigen::Index r = 0; r < g.X.rows(); ++r) {
      out << g.label;
      for (int c = 1; c <= data.p; ++c) out << ',' << format_double(g.X(r, c));
      for (int c = 0; c < data.m; ++c) out << ',' << format_double(g.Y(r, c));
      out << '\n';
    }
}

// ---------------------------------------------------------------------------
// Configuration

struct RunConfig {
  double alpha = 0.05;
  std::size_t reps = 1'000'000;
  std::uint64_t seed = 0;
  std::string family = "pairwise";  // pairwise | successive | control:<label>
  std::string range;                // "a:b[,a:b...]"; empty = observed covariate range
  int grid = 201;
  std::string out;
  unsigned workers = 0;
  std::string pair;  // "i,j" for `tube`; empty = first pair of the family
};

inline void validate_config(const RunConfig& cfg) {
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) throw Error(Errc::InvalidArgument, "--alpha must lie in (0, 1)");
  if (cfg.reps < 1000) throw Error(Errc::InvalidArgument, "--reps must be at least 1000");
  if (cfg.grid < 2) throw Error(Errc::InvalidArgument, "--grid must be at least 2");
}

inline double parse_bound(std::string_view s) {
  s = detail::trim(s);
  if (s == "-inf" || s == "-infinity") return -std::numeric_limits<double>::infinity();
  if (s == "inf" || s == "+inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  const auto v = detail::parse_real(s);
  if (!v) throw Error(Errc::InvalidArgument, "bad range bound '" + std::string(s) + "'");
  return *v;
}

/// "a:b[,a:b...]" with one entry per covariate; "-inf:inf" allowed.
inline CovariateBox parse_box(std::string_view spec, int p) {
  CovariateBox box;
  for (std::string_view part : detail::split(spec, ',')) {
    const size_t colon = part.find(':', 1);
    if (colon == std::string_view::npos) throw Error(Errc::InvalidArgument, "range entries look like a:b");
    box.bounds.push_back({parse_bound(part.substr(0, colon)), parse_bound(part.substr(colon + 1))});
  }
  if (box.dim() != p)
    throw Error(Errc::InvalidArgument, "--range has " + std::to_string(box.dim()) + " entries, data has " +
                                           std::to_string(p) + " covariates");
  validate_box(box);
  return box;
}

/// Smallest box holding every observed covariate value.
inline CovariateBox observed_box(const GroupedDataset& data) {
  CovariateBox box;
  for (int c = 1; c <= data.p; ++c) {
    Bound b{std::numeric_limits<double>::infinity(), -std::numeric_limits<double>::infinity()};
    for (const Group& g : data.groups) {
      b.lower = std::min(b.lower, g.X.col(c).minCoeff());
      b.upper = std::max(b.upper, g.X.col(c).maxCoeff());
    }
    box.bounds.push_back(b);
  }
  return box;
}

inline CovariateBox config_box(const RunConfig& cfg, const GroupedDataset& data) {
  return cfg.range.empty() ? observed_box(data) : parse_box(cfg.range, data.p);
}

inline ComparisonFamily parse_family(std::string_view spec, const GroupedDataset& data) {
  const int k = data.k();
  if (spec == "pairwise") return ComparisonFamily::pairwise(k);
  if (spec == "successive") return ComparisonFamily::successive(k);
  if (spec.starts_with("control:")) {
    const std::string label(spec.substr(8));
    for (int g = 0; g < k; ++g)
      if (data.groups[g].label == label) return ComparisonFamily::vs_control(k, g + 1);
    throw Error(Errc::InvalidFamily, "no group labelled '" + label + "'");
  }
  throw Error(Errc::InvalidFamily, "unknown family '" + std::string(spec) + "'");
}

inline Pair parse_pair(std::string_view spec) {
  const auto parts = detail::split(spec, ',');
  int i = 0, j = 0;
  if (parts.size() != 2 || std::from_chars(parts[0].data(), parts[0].data() + parts[0].size(), i).ec != std::errc() ||
      std::from_chars(parts[1].data(), parts[1].data() + parts[1].size(), j).ec != std::errc())
    throw Error(Errc::InvalidArgument, "--pair looks like i,j");
  return {i, j};
}

// ---------------------------------------------------------------------------
// Key/value documents

class KeyValueDocument {
 public:
  void add(const std::string& key, const std::string& value) { entries_.emplace_back(key, value); }
  void add(const std::string& key, const char* value) { add(key, std::string(value)); }
  void add(const std::string& key, double value) { add(key, format_double(value)); }
  void add(const std::string& key, int value) { add(key, std::to_string(value)); }
  void add(const std::string& key, std::size_t value) { add(key, std::to_string(value)); }
  void add(const std::string& key, bool value) { add(key, std::string(value ? "true" : "false")); }

  void add_matrix(const std::string& key, const Eigen::MatrixXd& mat) {
    for (Eigen::Index r = 0; r < mat.rows(); ++r)
      for (Eigen::Index c = 0; c < mat.cols(); ++c)
        add(key + "." + std::to_string(r + 1) + "." + std::to_string(c + 1), mat(r, c));
  }

  const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

  std::string str() const {
    std::string s;
    for (const auto& [k, v] : entries_) s += k + " = " + v + "\n";
    return s;
  }

  /// Parses the `key = value` lines produced by str().
  static std::map<std::string, std::string> parse(std::istream& in) {
    std::map<std::string, std::string> out;
    std::string line;
    while (std::getline(in, line)) {
      const size_t eq = line.find(" = ");
      if (eq != std::string::npos) out[line.substr(0, eq)] = line.substr(eq + 3);
    }
    return out;
  }

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

namespace detail {

inline void add_dataset_header(KeyValueDocument& doc, const std::string& command, const FittedModels& fit) {
  doc.add("format", "sct-report-1");
  doc.add("command", command);
  doc.add("k", fit.k);
  doc.add("p", fit.p);
  doc.add("m", fit.m);
  doc.add("nu", fit.nu);
  for (int g = 0; g < fit.k; ++g) {
    doc.add("group." + std::to_string(g + 1) + ".label", fit.labels[g]);
    doc.add("group." + std::to_string(g + 1) + ".n", fit.n[g]);
  }
}

inline void add_run_settings(KeyValueDocument& doc, const RunConfig& cfg, const ComparisonFamily& family,
                             const CovariateBox& box) {
  doc.add("alpha", cfg.alpha);
  doc.add("reps", cfg.reps);
  doc.add("seed", static_cast<std::size_t>(cfg.seed));
  doc.add("family", to_string(family.kind));
  if (family.kind == FamilyKind::vs_control) doc.add("family.control", family.control);
  doc.add("family.size", family.pairs.size());
  for (size_t s = 0; s < family.pairs.size(); ++s) {
    doc.add("family.pair." + std::to_string(s + 1) + ".i", family.pairs[s].i);
    doc.add("family.pair." + std::to_string(s + 1) + ".j", family.pairs[s].j);
  }
  for (int l = 0; l < box.dim(); ++l) {
    doc.add("range." + std::to_string(l + 1) + ".lower", box.bounds[l].lower);
    doc.add("range." + std::to_string(l + 1) + ".upper", box.bounds[l].upper);
  }
}

inline void add_critical(KeyValueDocument& doc, const CriticalConstantResult& cr) {
  doc.add("critical.c_hat", cr.c_hat);
  doc.add("critical.rank", cr.rank);
  doc.add("critical.order_stat_99.lower", cr.order_stat_interval.lower);
  doc.add("critical.order_stat_99.upper", cr.order_stat_interval.upper);
  doc.add("critical.eb_standard_error", cr.eb_standard_error);
  doc.add("critical.eb_coverage.lower", cr.eb_coverage_interval.lower);
  doc.add("critical.eb_coverage.upper", cr.eb_coverage_interval.upper);
}

struct Prepared {
  FittedModels fit;
  ComparisonFamily family;
  CovariateBox box;
};

inline Prepared prepare(const RunConfig& cfg, const GroupedDataset& raw) {
  validate_config(cfg);
  const GroupedDataset data = validate_dataset(raw);
  Prepared prep{fit_models(data), parse_family(cfg.family, data), config_box(cfg, data)};
  validate_family(prep.family, prep.fit.k);
  return prep;
}

}  // namespace detail

inline KeyValueDocument fit_document(const FittedModels& fit) {
  KeyValueDocument doc;
  detail::add_dataset_header(doc, "fit", fit);
  for (int g = 0; g < fit.k; ++g) doc.add_matrix("bhat." + std::to_string(g + 1), fit.bhat[g]);
  doc.add_matrix("pooled_scatter", fit.pooled_scatter);
  doc.add("degenerate_scatter", fit.degenerate_scatter);
  return doc;
}

inline KeyValueDocument compare_document(const ComparisonReport& report, const FittedModels& fit,
                                         const RunConfig& cfg) {
  KeyValueDocument doc;
  detail::add_dataset_header(doc, "compare", fit);
  detail::add_run_settings(doc, cfg, report.family, report.box);
  detail::add_critical(doc, report.critical);
  for (size_t s = 0; s < report.pairs.size(); ++s) {
    const PairComparison& pc = report.pairs[s];
    const std::string key = "pair." + std::to_string(s + 1);
    doc.add(key + ".i", pc.pair.i);
    doc.add(key + ".j", pc.pair.j);
    doc.add(key + ".t", pc.statistic);
    for (Eigen::Index l = 0; l < pc.argmax.size(); ++l) doc.add(key + ".argmax." + std::to_string(l + 1), pc.argmax(l));
    doc.add(key + ".p_value", pc.p_value);
    doc.add(key + ".reject", pc.reject);
    for (const SignificanceRegion& region : pc.regions) {
      const std::string rkey = key + ".region." + std::to_string(region.q);
      doc.add(rkey + ".resolution", region.resolution);
      doc.add(rkey + ".count", region.intervals.size());
      for (size_t v = 0; v < region.intervals.size(); ++v) {
        const std::string ikey = rkey + ".interval." + std::to_string(v + 1);
        doc.add(ikey + ".lower", region.intervals[v].lower);
        doc.add(ikey + ".upper", region.intervals[v].upper);
        doc.add(ikey + ".sign", region.intervals[v].sign);
      }
    }
  }
  return doc;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(Errc::InvalidArgument, "cannot write '" + path + "'");
  out << content;
}

/// Runs the full comparison, prints a human summary to `human` and writes the
/// key/value report to cfg.out when set. Returns the report document.
inline KeyValueDocument run_compare(const RunConfig& cfg, const GroupedDataset& raw, std::ostream& human) {
  const detail::Prepared prep = detail::prepare(cfg, raw);
  CompareOptions options;
  options.simulation.workers = cfg.workers;
  options.region_resolution = cfg.grid;
  const ComparisonReport report = compare(prep.fit, prep.family, prep.box, cfg.alpha, cfg.reps, cfg.seed, options);
  const KeyValueDocument doc = compare_document(report, prep.fit, cfg);
  if (!cfg.out.empty()) write_text_file(cfg.out, doc.str());

  human << "Simultaneous confidence tubes: k = " << prep.fit.k << ", p = " << prep.fit.p << ", m = " << prep.fit.m
        << ", nu = " << prep.fit.nu << "\n";
  for (int g = 0; g < prep.fit.k; ++g) human << "  group " << g + 1 << " = " << prep.fit.labels[g] << "\n";
  human << "family " << to_string(report.family.kind) << ", alpha " << cfg.alpha << ", r " << cfg.reps << ", seed "
        << cfg.seed << "\n";
  const auto& cr = report.critical;
  human << "critical constant c = " << format_double(cr.c_hat) << "  (99% order-statistic interval ["
        << cr.order_stat_interval.lower << ", " << cr.order_stat_interval.upper << "], realized level in ["
        << cr.eb_coverage_interval.lower << ", " << cr.eb_coverage_interval.upper << "])\n";
  for (const PairComparison& pc : report.pairs) {
    human << "  pair " << to_string(pc.pair) << ": t = " << pc.statistic << ", adjusted p = " << pc.p_value
          << (pc.reject ? "  -> zero line outside the tube" : "  -> zero line inside the tube") << "\n";
    for (const SignificanceRegion& region : pc.regions)
      for (const SignedInterval& iv : region.intervals)
        human << "    response " << region.q << ": " << (iv.sign > 0 ? "higher" : "lower") << " on [" << iv.lower
              << ", " << iv.upper << "]\n";
  }
  return doc;
}

/// Writes the tube for one pair on a grid over the (finite, single-covariate)
/// range: x, center_1..m, radius_sq, lower_1, upper_1, ..., lower_m, upper_m.
/// A `<out>.meta` key/value sidecar carries c, nu Omega and Delta_ij.
inline void export_tube(const RunConfig& cfg, const GroupedDataset& raw, std::optional<Pair> pair_opt) {
  const detail::Prepared prep = detail::prepare(cfg, raw);
  if (prep.fit.p != 1) throw Error(Errc::NotUnivariate, "gridded tube export needs exactly one covariate");
  if (!prep.box.is_finite()) throw Error(Errc::UnboundedBox, "tube export needs a finite covariate range");
  if (cfg.out.empty()) throw Error(Errc::InvalidArgument, "tube export needs --out");
  const Pair pr = pair_opt.value_or(prep.family.pairs.front());
  // Either orientation of a family pair is allowed; (j,i) is the mirrored tube.
  const auto& pairs = prep.family.pairs;
  if (std::find(pairs.begin(), pairs.end(), pr) == pairs.end() &&
      std::find(pairs.begin(), pairs.end(), Pair{pr.j, pr.i}) == pairs.end())
    throw Error(Errc::InvalidFamily, "pair " + to_string(pr) + " is not in the comparison family");

  const SimulatedSample sample =
      simulate_T(prep.fit, prep.family, prep.box, cfg.reps, cfg.seed, SimulationOptions{cfg.workers});
  const CriticalConstantResult cr = critical_constant(sample, cfg.alpha);
  const double c = cr.c_hat;
  const auto xs = equispaced(prep.box.bounds[0].lower, prep.box.bounds[0].upper, cfg.grid);
  const int m = prep.fit.m;
  std::vector<std::vector<BandPoint>> bands;
  for (int q = 1; q <= m; ++q) bands.push_back(projected_band(prep.fit, pr, c, q, xs));

  std::ostringstream csv;
  csv << "x";
  for (int q = 1; q <= m; ++q) csv << ",center_" << q;
  csv << ",radius_sq";
  for (int q = 1; q <= m; ++q) csv << ",lower_" << q << ",upper_" << q;
  csv << "\n";
  for (size_t s = 0; s < xs.size(); ++s) {
    const TubeCrossSection cs = cross_section(prep.fit, pr, c, Eigen::VectorXd::Constant(1, xs[s]));
    csv << format_double(xs[s]);
    for (int q = 0; q < m; ++q) csv << ',' << format_double(cs.center(q));
    csv << ',' << format_double(cs.radius_sq);
    for (int q = 0; q < m; ++q) csv << ',' << format_double(bands[q][s].lower) << ',' << format_double(bands[q][s].upper);
    csv << "\n";
  }
  write_text_file(cfg.out, csv.str());

  KeyValueDocument meta;
  detail::add_dataset_header(meta, "tube", prep.fit);
  detail::add_run_settings(meta, cfg, prep.family, prep.box);
  detail::add_critical(meta, cr);
  meta.add("tube.pair.i", pr.i);
  meta.add("tube.pair.j", pr.j);
  meta.add("tube.c", c);
  meta.add("tube.grid", cfg.grid);
  meta.add_matrix("tube.shape", prep.fit.pooled_scatter);
  meta.add_matrix("tube.delta", prep.fit.delta(pr.i - 1, pr.j - 1));
  write_text_file(cfg.out + ".meta", meta.str());
}

// ---------------------------------------------------------------------------
// Command line

namespace cli {

inline void emit(const KeyValueDocument& doc, const RunConfig& cfg, std::ostream& out) {
  out << doc.str();
  if (!cfg.out.empty()) write_text_file(cfg.out, doc.str());
}

inline int run_command(const std::string& command, const RunConfig& cfg, const std::string& data_path,
                       std::ostream& out) {
  const GroupedDataset raw = ingest_csv(data_path);
  if (command == "fit") {
    emit(fit_document(fit_models(validate_dataset(raw))), cfg, out);
    return 0;
  }
  if (command == "compare") {
    run_compare(cfg, raw, out);
    return 0;
  }
  if (command == "tube") {
    export_tube(cfg, raw, cfg.pair.empty() ? std::nullopt : std::optional<Pair>(parse_pair(cfg.pair)));
    out << "wrote " << cfg.out << " and " << cfg.out << ".meta\n";
    return 0;
  }
  if (command == "roy") {
    validate_config(cfg);
    const FittedModels fit = fit_models(validate_dataset(raw));
    const SimulationOptions sim{cfg.workers};
    const RoyResult roy = fit.k == 2 ? roy_two_sample(fit, cfg.alpha, cfg.reps, cfg.seed, sim)
                                     : roy_k_sample(fit, cfg.alpha, cfg.reps, cfg.seed, sim);
    KeyValueDocument doc;
    detail::add_dataset_header(doc, "roy", fit);
    doc.add("alpha", cfg.alpha);
    doc.add("reps", cfg.reps);
    doc.add("seed", static_cast<std::size_t>(cfg.seed));
    doc.add("roy.hypothesis_dim", (fit.k - 1) * (fit.p + 1));
    doc.add("roy.statistic", roy.statistic);
    doc.add("roy.critical", roy.critical);
    doc.add("roy.p_value", roy.p_value);
    doc.add("roy.null_reps", roy.null_reps);
    emit(doc, cfg, out);
    return 0;
  }
  const detail::Prepared prep = detail::prepare(cfg, raw);
  const SimulatedSample sample =
      simulate_T(prep.fit, prep.family, prep.box, cfg.reps, cfg.seed, SimulationOptions{cfg.workers});
  KeyValueDocument doc;
  detail::add_dataset_header(doc, command, prep.fit);
  detail::add_run_settings(doc, cfg, prep.family, prep.box);
  const CriticalConstantResult cr = critical_constant(sample, cfg.alpha);
  detail::add_critical(doc, cr);
  if (command == "pvalues") {
    const auto adjusted = adjusted_p_values(prep.fit, prep.family, prep.box, sample);
    for (size_t s = 0; s < adjusted.size(); ++s) {
      const std::string key = "pair." + std::to_string(s + 1);
      doc.add(key + ".i", adjusted[s].pair.i);
      doc.add(key + ".j", adjusted[s].pair.j);
      doc.add(key + ".t", adjusted[s].statistic);
      doc.add(key + ".p_value", adjusted[s].p_value);
    }
  }
  emit(doc, cfg, out);
  return 0;
}

/// Entry point shared by the executable and the tests. Exit codes: 0 success,
/// 2 input error, 3 numerical degeneracy, 4 configuration error.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Simultaneous confidence tubes for comparing multivariate linear regressions"};
  app.require_subcommand(1);
  RunConfig cfg;
  std::string data_path;
  const std::vector<std::pair<std::string, std::string>> commands = {
      {"fit", "Fit the per-group regressions and the pooled scatter"},
      {"critical", "Simulate the critical constant"},
      {"compare", "Critical constant, adjusted p-values and significance regions"},
      {"roy", "Roy's largest-root test of equal coefficient matrices"},
      {"pvalues", "Multiplicity-adjusted p-values"},
      {"tube", "Export tube cross-sections and projected bands as CSV"}};
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("data", data_path, "CSV file: group,x1..xp,y1..ym")->required();
    sub->add_option("--alpha", cfg.alpha, "Significance level")->capture_default_str();
    sub->add_option("--reps", cfg.reps, "Monte Carlo replicates")->capture_default_str();
    sub->add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    sub->add_option("--family", cfg.family, "pairwise | successive | control:<label>")->capture_default_str();
    sub->add_option("--range", cfg.range, "Covariate box a:b[,a:b...] (default: observed range)");
    sub->add_option("--grid", cfg.grid, "Grid points for regions and tube export")->capture_default_str();
    sub->add_option("--out", cfg.out, "Output path");
    sub->add_option("--workers", cfg.workers, "Worker threads (0 = all cores)")->capture_default_str();
    sub->add_option("--pair", cfg.pair, "Pair i,j for tube export");
  }

  std::vector<std::string> storage{"sct_cli"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::CallForHelp& e) {
    app.exit(e, out, err);
    return 0;
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return exit_code(Errc::InvalidArgument);
  }
  try {
    return run_command(app.get_subcommands().front()->get_name(), cfg, data_path, out);
  } catch (const Error& e) {
    err << e.what() << "\n";
    return exit_code(e.code());
  }
}

}  // namespace cli
}  // namespace sct
