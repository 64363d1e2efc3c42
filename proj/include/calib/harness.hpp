// File I/O, model persistence, and the end-to-end calibration / evaluation
// pipeline: CSV/JSON distance ingestion, per-class fitting, threshold
// computation for all methods, impostor-trial evaluation, and CDF curve
// export.

#pragma once

#include "calib/distances.hpp"
#include "calib/model.hpp"
#include "calib/synth.hpp"
#include "calib/thresholds.hpp"

#include <json.hpp>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace calib {

using json = nlohmann::ordered_json;

// ---------------------------------------------------------------------------
// distance ingestion

namespace detail {

inline std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::stringstream ss(line);
  std::string field;
  while (std::getline(ss, field, ',')) {
    // trim whitespace and CR
    auto b = field.find_first_not_of(" \t\r");
    auto e = field.find_last_not_of(" \t\r");
    fields.push_back(b == std::string::npos ? "" : field.substr(b, e - b + 1));
  }
  if (!line.empty() && line.back() == ',') fields.push_back("");
  return fields;
}

inline bool is_number(const std::string& s) {
  if (s.empty()) return false;
  char* end = nullptr;
  std::strtod(s.c_str(), &end);
  return end == s.c_str() + s.size();
}

inline double parse_number(const std::string& s, std::size_t row, std::size_t col) {
  if (!is_number(s))
    throw std::runtime_error("parse error at row " + std::to_string(row) +
                             ", column " + std::to_string(col) +
                             ": not a number: '" + s + "'");
  return std::strtod(s.c_str(), nullptr);
}

}  // namespace detail

// Square N x N distance matrix from CSV; row i gives class i's distances,
// the diagonal is ignored. An optional header row supplies class ids.
// Warns (stderr) on asymmetry beyond 1e-9; distances are used row-wise
// regardless. With bounded=true values pass through unbound_transform.
inline std::vector<InterClassDistances> load_distances_csv(const std::string& path,
                                                           bool bounded = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::vector<double>> matrix;
  std::vector<std::string> ids;
  std::string line;
  std::size_t row_no = 0;
  bool first = true;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (first) {
      first = false;
      if (!fields.empty() && !detail::is_number(fields[0])) {
        ids = fields;  // header row with class ids
        continue;
      }
    }
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row.push_back(detail::parse_number(fields[c], row_no, c + 1));
    matrix.push_back(std::move(row));
  }
  const std::size_t n = matrix.size();
  if (n < 2) throw std::runtime_error(path + ": need at least a 2x2 matrix");
  for (std::size_t i = 0; i < n; ++i)
    if (matrix[i].size() != n)
      throw std::runtime_error(path + ": row " + std::to_string(i + 1) +
                               " has " + std::to_string(matrix[i].size()) +
                               " entries, expected " + std::to_string(n));
  if (!ids.empty() && ids.size() != n)
    throw std::runtime_error(path + ": header has " + std::to_string(ids.size()) +
                             " ids for " + std::to_string(n) + " rows");
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(matrix[i][j] - matrix[j][i]) > 1e-9) {
        std::cerr << "warning: " << path << " asymmetric at (" << i << "," << j
                  << "): " << matrix[i][j] << " vs " << matrix[j][i] << "\n";
        goto asym_done;
      }
asym_done:
  std::vector<InterClassDistances> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    InterClassDistances d;
    d.class_id = ids.empty() ? "class_" + std::to_string(i) : ids[i];
    d.distances.reserve(n - 1);
    for (std::size_t j = 0; j < n; ++j) {
      if (j == i) continue;
      double v = matrix[i][j];
      d.distances.push_back(bounded ? unbound_transform(v) : v);
    }
    out.push_back(std::move(d));
  }
  return out;
}

// JSON object mapping class_id -> array of distances.
inline std::vector<InterClassDistances> load_distances_json(const std::string& path,
                                                            bool bounded = false) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  json j;
  in >> j;
  if (!j.is_object())
    throw std::runtime_error(path + ": expected a JSON object of class_id -> distances");
  std::vector<InterClassDistances> out;
  for (auto& [key, value] : j.items()) {
    InterClassDistances d;
    d.class_id = key;
    for (auto& v : value) {
      double x = v.get<double>();
      d.distances.push_back(bounded ? unbound_transform(x) : x);
    }
    out.push_back(std::move(d));
  }
  return out;
}

inline std::vector<InterClassDistances> load_distances(const std::string& path,
                                                       const std::string& format,
                                                       bool bounded = false) {
  if (format == "csv") return load_distances_csv(path, bounded);
  if (format == "json") return load_distances_json(path, bounded);
  throw std::invalid_argument("unknown distance format: " + format);
}

// ---------------------------------------------------------------------------
// model file

inline constexpr int kModelSchemaVersion = 1;

struct ClassEntry {
  InterClassDistances distances;
  std::optional<FittedModel> fitted;
  std::string fit_error;
  // thresholds[method][i] corresponds to target_fprs[i]
  std::map<ThresholdMethod, std::vector<double>> thresholds;
};

struct ModelFile {
  int schema_version = kModelSchemaVersion;
  bool bounded = false;
  FitConstraints constraints;
  std::vector<double> target_fprs;
  std::vector<ThresholdMethod> methods;
  std::vector<double> generic_thresholds;  // aligned with target_fprs
  std::vector<ClassEntry> classes;

  const ClassEntry& find_class(const std::string& id) const {
    for (const auto& c : classes)
      if (c.distances.class_id == id) return c;
    throw std::runtime_error("class not found in model file: " + id);
  }
  bool has_method(ThresholdMethod m) const {
    return std::find(methods.begin(), methods.end(), m) != methods.end();
  }
};

struct CalibrationRun {
  FitConstraints constraints;
  std::vector<double> target_fprs;
  std::vector<ThresholdMethod> methods;
  std::vector<InterClassDistances> data;
  GoodnessMetric metric = GoodnessMetric::ncc;
  bool bounded = false;  // recorded so evaluation applies the same transform
};

// Fits per-class models where the model method is requested (per-class fit
// failures are recorded and do not abort the run), then computes thresholds
// for every (method, target FPR).
inline ModelFile calibrate(const CalibrationRun& run) {
  if (run.methods.empty())
    throw std::invalid_argument("calibrate: at least one method required");
  for (double f : run.target_fprs)
    if (!(f > 0.0 && f < 1.0))
      throw std::invalid_argument("calibrate: target FPRs must be in (0, 1)");

  ModelFile mf;
  mf.bounded = run.bounded;
  mf.constraints = run.constraints;
  mf.target_fprs = run.target_fprs;
  mf.methods = run.methods;

  const bool want_model = std::find(run.methods.begin(), run.methods.end(),
                                    ThresholdMethod::model) != run.methods.end();
  for (const auto& d : run.data) {
    ClassEntry e;
    e.distances = d;
    if (want_model) {
      try {
        FitOptions opt;
        opt.metric = run.metric;
        e.fitted = fit(d, run.constraints, opt);
      } catch (const std::exception& ex) {
        e.fit_error = ex.what();
      }
    }
    mf.classes.push_back(std::move(e));
  }

  if (mf.has_method(ThresholdMethod::generic_data)) {
    std::vector<double> pooled;
    for (const auto& c : mf.classes)
      pooled.insert(pooled.end(), c.distances.distances.begin(),
                    c.distances.distances.end());
    for (double f : mf.target_fprs)
      mf.generic_thresholds.push_back(generic_data_threshold(pooled, f));
  }
  for (auto& c : mf.classes) {
    if (mf.has_method(ThresholdMethod::class_data)) {
      auto& v = c.thresholds[ThresholdMethod::class_data];
      for (double f : mf.target_fprs)
        v.push_back(class_data_threshold(c.distances, f));
    }
    if (want_model && c.fitted) {
      auto& v = c.thresholds[ThresholdMethod::model];
      for (double f : mf.target_fprs) v.push_back(model_threshold(*c.fitted, f));
    }
  }
  return mf;
}

inline json to_json(const ModelFile& mf) {
  json j;
  j["schema_version"] = mf.schema_version;
  j["bounded"] = mf.bounded;
  j["constraints"] = {{"dim_low", mf.constraints.dim_low},
                      {"dim_high", mf.constraints.dim_high},
                      {"sigma_low", mf.constraints.sigma_low},
                      {"sigma_high", mf.constraints.sigma_high},
                      {"sigma_steps", mf.constraints.sigma_steps}};
  j["target_fprs"] = mf.target_fprs;
  json methods = json::array();
  for (auto m : mf.methods) methods.push_back(to_string(m));
  j["methods"] = methods;
  if (!mf.generic_thresholds.empty())
    j["generic_thresholds"] = mf.generic_thresholds;
  json classes = json::array();
  for (const auto& c : mf.classes) {
    json jc;
    jc["class_id"] = c.distances.class_id;
    jc["distances"] = c.distances.distances;
    if (c.fitted) {
      jc["fit"] = {{"dim", c.fitted->dim_opt},
                   {"sigma", c.fitted->sigma_opt},
                   {"lambda", c.fitted->lambda_opt},
                   {"rho", c.fitted->rho}};
    }
    if (!c.fit_error.empty()) jc["fit_error"] = c.fit_error;
    if (!c.thresholds.empty()) {
      json jt;
      for (const auto& [m, v] : c.thresholds) jt[to_string(m)] = v;
      jc["thresholds"] = jt;
    }
    classes.push_back(std::move(jc));
  }
  j["classes"] = std::move(classes);
  return j;
}

inline ModelFile model_from_json(const json& j) {
  ModelFile mf;
  mf.schema_version = j.at("schema_version").get<int>();
  if (mf.schema_version != kModelSchemaVersion)
    throw std::runtime_error("unsupported model schema version " +
                             std::to_string(mf.schema_version));
  mf.bounded = j.at("bounded").get<bool>();
  const auto& jc = j.at("constraints");
  mf.constraints = FitConstraints{jc.at("dim_low").get<int>(),
                                  jc.at("dim_high").get<int>(),
                                  jc.at("sigma_low").get<double>(),
                                  jc.at("sigma_high").get<double>(),
                                  jc.at("sigma_steps").get<int>()};
  mf.target_fprs = j.at("target_fprs").get<std::vector<double>>();
  for (const auto& m : j.at("methods"))
    mf.methods.push_back(threshold_method_from_string(m.get<std::string>()));
  if (j.contains("generic_thresholds"))
    mf.generic_thresholds = j.at("generic_thresholds").get<std::vector<double>>();
  for (const auto& c : j.at("classes")) {
    ClassEntry e;
    e.distances.class_id = c.at("class_id").get<std::string>();
    e.distances.distances = c.at("distances").get<std::vector<double>>();
    if (c.contains("fit")) {
      const auto& f = c.at("fit");
      e.fitted = FittedModel{f.at("dim").get<int>(), f.at("sigma").get<double>(),
                             f.at("lambda").get<double>(), f.at("rho").get<double>()};
    }
    if (c.contains("fit_error")) e.fit_error = c.at("fit_error").get<std::string>();
    if (c.contains("thresholds"))
      for (auto& [k, v] : c.at("thresholds").items())
        e.thresholds[threshold_method_from_string(k)] =
            v.get<std::vector<double>>();
    mf.classes.push_back(std::move(e));
  }
  return mf;
}

inline void save_model(const ModelFile& mf, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out << to_json(mf).dump(2) << "\n";
}

inline ModelFile load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  json j;
  in >> j;
  return model_from_json(j);
}

// ---------------------------------------------------------------------------
// evaluation

// Held-out query patterns: each query carries its true class and a distance
// to every model class (aligned with class_ids).
struct QuerySet {
  std::vector<std::string> class_ids;
  struct Query {
    std::string true_class;
    std::vector<double> distances;
  };
  std::vector<Query> queries;
};

// CSV: header "true_class,<id1>,...,<idN>", one query per row.
inline QuerySet load_queries_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  QuerySet qs;
  std::string line;
  std::size_t row_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++row_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    auto fields = detail::split_csv_line(line);
    if (!have_header) {
      if (fields.empty() || fields[0] != "true_class")
        throw std::runtime_error(path + ": expected header starting with 'true_class'");
      qs.class_ids.assign(fields.begin() + 1, fields.end());
      have_header = true;
      continue;
    }
    if (fields.size() != qs.class_ids.size() + 1)
      throw std::runtime_error(path + ": row " + std::to_string(row_no) +
                               " has " + std::to_string(fields.size()) +
                               " fields, expected " +
                               std::to_string(qs.class_ids.size() + 1));
    QuerySet::Query q;
    q.true_class = fields[0];
    for (std::size_t c = 1; c < fields.size(); ++c)
      q.distances.push_back(detail::parse_number(fields[c], row_no, c + 1));
    qs.queries.push_back(std::move(q));
  }
  if (!have_header) throw std::runtime_error(path + ": empty query file");
  return qs;
}

struct EvaluationRow {
  ThresholdMethod method;
  double target_fpr = 0.0;
  long long accepted = 0;
  long long total = 0;
  double attained_fpr = 0.0;
  double ratio = 0.0;
};

struct EvaluationReport {
  std::vector<EvaluationRow> rows;
};

// Counts impostor verification attempts (query vs non-matching class)
// accepted under the stored thresholds.
inline EvaluationReport run_evaluation(const ModelFile& mf, const QuerySet& qs) {
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < mf.classes.size(); ++i)
    index[mf.classes[i].distances.class_id] = i;
  std::vector<std::size_t> col_to_class;
  for (const auto& id : qs.class_ids) {
    auto it = index.find(id);
    if (it == index.end())
      throw std::runtime_error("query data references class absent from model: " + id);
    col_to_class.push_back(it->second);
  }

  EvaluationReport rep;
  for (auto method : mf.methods) {
    for (std::size_t fi = 0; fi < mf.target_fprs.size(); ++fi) {
      EvaluationRow row;
      row.method = method;
      row.target_fpr = mf.target_fprs[fi];
      for (const auto& q : qs.queries) {
        for (std::size_t c = 0; c < qs.class_ids.size(); ++c) {
          if (qs.class_ids[c] == q.true_class) continue;  // impostor trials only
          const ClassEntry& entry = mf.classes[col_to_class[c]];
          double tau;
          if (method == ThresholdMethod::generic_data) {
            tau = mf.generic_thresholds.at(fi);
          } else {
            auto it = entry.thresholds.find(method);
            if (it == entry.thresholds.end()) continue;  // e.g. failed fit
            tau = it->second.at(fi);
          }
          double dist = mf.bounded ? unbound_transform(q.distances[c])
                                   : q.distances[c];
          ++row.total;
          if (dist < tau) ++row.accepted;
        }
      }
      row.attained_fpr = row.total > 0
                             ? static_cast<double>(row.accepted) / row.total
                             : 0.0;
      row.ratio = row.attained_fpr / row.target_fpr;
      rep.rows.push_back(row);
    }
  }
  return rep;
}

inline std::string report_table(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "method        target_fpr   attained_fpr   ratio    accepted/total\n";
  for (const auto& r : rep.rows) {
    char buf[160];
    std::snprintf(buf, sizeof(buf), "%-13s %-12g %-14g %-8.3g %lld/%lld\n",
                  to_string(r.method), r.target_fpr, r.attained_fpr, r.ratio,
                  r.accepted, r.total);
    os << buf;
  }
  return os.str();
}

inline json report_to_json(const EvaluationReport& rep) {
  json rows = json::array();
  for (const auto& r : rep.rows)
    rows.push_back({{"method", to_string(r.method)},
                    {"target_fpr", r.target_fpr},
                    {"attained_fpr", r.attained_fpr},
                    {"ratio", r.ratio},
                    {"accepted", r.accepted},
                    {"total", r.total}});
  return json{{"rows", rows}};
}

inline std::string report_to_csv(const EvaluationReport& rep) {
  std::ostringstream os;
  os << "method,target_fpr,attained_fpr,ratio,accepted,total\n";
  os.precision(17);
  for (const auto& r : rep.rows)
    os << to_string(r.method) << ',' << r.target_fpr << ',' << r.attained_fpr
       << ',' << r.ratio << ',' << r.accepted << ',' << r.total << "\n";
  return os.str();
}

// ---------------------------------------------------------------------------
// curve export

// CSV of (x, empirical CDF, model CDF) at the sorted scaled-square sample
// points of one class, for external plotting.
inline void emit_curves(const ModelFile& mf, const std::string& class_id,
                        const std::string& out_path) {
  const ClassEntry& entry = mf.find_class(class_id);
  if (!entry.fitted)
    throw std::runtime_error("class " + class_id + " has no fitted model");
  const FittedModel& m = *entry.fitted;
  auto samples = scaled_squares(entry.distances, m.sigma_opt);
  EmpiricalCdf ecdf(samples);
  std::ofstream out(out_path);
  if (!out) throw std::runtime_error("cannot write file: " + out_path);
  out.precision(17);
  out << "x,empirical_cdf,model_cdf\n";
  const auto& xs = ecdf.sorted_samples();
  auto emp = ecdf.values_at_samples();
  for (std::size_t i = 0; i < xs.size(); ++i)
    out << xs[i] << ',' << emp[i] << ','
        << noncentral_chi2_cdf(xs[i], m.dim_opt, m.lambda_opt) << "\n";
}

// ---------------------------------------------------------------------------
// pattern sets (for the setdist CLI)

// CSV with one feature vector per row, or a JSON array-of-arrays.
inline PatternSet load_pattern_set(const std::string& path,
                                   const std::string& label) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<std::vector<double>> rows;
  if (path.size() > 5 && path.substr(path.size() - 5) == ".json") {
    json j;
    in >> j;
    for (const auto& r : j) rows.push_back(r.get<std::vector<double>>());
  } else {
    std::string line;
    std::size_t row_no = 0;
    while (std::getline(in, line)) {
      ++row_no;
      if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
      auto fields = detail::split_csv_line(line);
      std::vector<double> r;
      for (std::size_t c = 0; c < fields.size(); ++c)
        r.push_back(detail::parse_number(fields[c], row_no, c + 1));
      rows.push_back(std::move(r));
    }
  }
  if (rows.empty()) throw std::runtime_error(path + ": empty pattern set");
  const std::size_t d = rows[0].size();
  for (std::size_t i = 1; i < rows.size(); ++i)
    if (rows[i].size() != d)
      throw std::runtime_error(path + ": row " + std::to_string(i + 1) +
                               " has inconsistent dimension");
  PatternSet set;
  set.class_label = label;
  set.vectors.resize(static_cast<int>(d), static_cast<int>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < d; ++j)
      set.vectors(static_cast<int>(j), static_cast<int>(i)) = rows[i][j];
  return set;
}

// ---------------------------------------------------------------------------
// synthetic export

inline void write_training_matrix_csv(const SyntheticPopulation& pop,
                                      const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.precision(17);
  const int n = pop.n_classes();
  for (int c = 0; c < n; ++c) {
    out << pop.class_id(c);
    if (c + 1 < n) out << ',';
  }
  out << "\n";
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (j) out << ',';
      out << (i == j
                  ? 0.0
                  : (pop.training_patterns[i] - pop.training_patterns[j]).norm());
    }
    out << "\n";
  }
}

inline void write_queries_csv(const SyntheticPopulation& pop,
                              const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write file: " + path);
  out.precision(17);
  const int n = pop.n_classes();
  out << "true_class";
  for (int c = 0; c < n; ++c) out << ',' << pop.class_id(c);
  out << "\n";
  for (int c = 0; c < n; ++c) {
    for (const auto& q : pop.query_patterns[c]) {
      out << pop.class_id(c);
      for (int o = 0; o < n; ++o)
        out << ',' << (q - pop.training_patterns[o]).norm();
      out << "\n";
    }
  }
}

}  // namespace calib
