#pragma once

// Versioned JSON model files plus the smaller interchange formats: cut-point
// files, convergence traces (CSV and JSON), per-experiment results and
// prediction dumps. Doubles are emitted in round-trip-exact decimal form, so
// load(save(model)) scores bit-for-bit identically.

#include <cstdint>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "dbl/classifier.hpp"
#include "dbl/evaluation.hpp"

namespace dbl {

constexpr int kModelFormatVersion = 1;

inline std::string fmt_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline nlohmann::json cuts_to_json(const std::vector<AttributeMeta>& meta,
                                   const CutPoints& cuts) {
  nlohmann::json out = nlohmann::json::object();
  for (std::size_t a = 0; a < meta.size(); ++a)
    if (meta[a].kind == AttrKind::numeric) out[meta[a].name] = cuts.thresholds[a];
  return out;
}

inline CutPoints cuts_from_json(const nlohmann::json& doc,
                                const std::vector<AttributeMeta>& meta) {
  CutPoints cuts;
  cuts.thresholds.resize(meta.size());
  for (std::size_t a = 0; a < meta.size(); ++a) {
    if (meta[a].kind != AttrKind::numeric) continue;
    if (!doc.contains(meta[a].name))
      throw error("cut file missing numeric attribute '" + meta[a].name + "'");
    cuts.thresholds[a] = doc[meta[a].name].get<std::vector<double>>();
  }
  return cuts;
}

namespace detail {

inline nlohmann::json meta_to_json(const AttributeMeta& meta) {
  return {{"name", meta.name},
          {"kind", meta.kind == AttrKind::numeric ? "numeric" : "categorical"},
          {"categories", meta.categories},
          {"has_missing", meta.has_missing},
          {"missing_tokens", meta.missing_tokens}};
}

inline AttributeMeta meta_from_json(const nlohmann::json& doc) {
  AttributeMeta meta;
  meta.name = doc.at("name").get<std::string>();
  meta.kind = doc.at("kind").get<std::string>() == "numeric" ? AttrKind::numeric
                                                             : AttrKind::categorical;
  meta.categories = doc.at("categories").get<std::vector<std::string>>();
  meta.has_missing = doc.value("has_missing", false);
  meta.missing_tokens = doc.value("missing_tokens", std::vector<std::string>{"?", ""});
  return meta;
}

// Per-subset blocks in catalog order; each block is class-major.
inline nlohmann::json blocks_to_json(const FeatureSpace& space,
                                     const std::vector<double>& flat) {
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t r = 0; r < space.catalog.size(); ++r) {
    std::vector<double> block;
    block.reserve(space.class_count * space.layout.subset_sizes[r]);
    for (std::uint32_t c = 0; c < space.class_count; ++c) {
      const std::uint64_t base = space.layout.offset(c, r);
      for (std::uint64_t v = 0; v < space.layout.subset_sizes[r]; ++v)
        block.push_back(flat[base + v]);
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

template <typename T>
inline void blocks_from_json(const nlohmann::json& blocks, const FeatureSpace& space,
                             std::vector<T>& flat) {
  if (blocks.size() != space.catalog.size()) throw error("model file: wrong subset block count");
  for (std::size_t r = 0; r < space.catalog.size(); ++r) {
    const auto block = blocks[r].get<std::vector<T>>();
    if (block.size() != space.class_count * space.layout.subset_sizes[r])
      throw error("model file: subset block " + std::to_string(r) + " has wrong size");
    std::size_t k = 0;
    for (std::uint32_t c = 0; c < space.class_count; ++c) {
      const std::uint64_t base = space.layout.offset(c, r);
      for (std::uint64_t v = 0; v < space.layout.subset_sizes[r]; ++v)
        flat[base + v] = block[k++];
    }
  }
}

inline nlohmann::json count_blocks_to_json(const CountTable& counts) {
  nlohmann::json blocks = nlohmann::json::array();
  for (std::size_t r = 0; r < counts.space->catalog.size(); ++r) {
    std::vector<std::uint64_t> block;
    for (std::uint32_t c = 0; c < counts.space->class_count; ++c) {
      const std::uint64_t base = counts.space->layout.offset(c, r);
      for (std::uint64_t v = 0; v < counts.space->layout.subset_sizes[r]; ++v)
        block.push_back(counts.cells[base + v]);
    }
    blocks.push_back(std::move(block));
  }
  return blocks;
}

}  // namespace detail

inline nlohmann::json model_to_json(const TrainedModel& model) {
  const auto& disc = *model.discretizer;
  nlohmann::json doc;
  doc["format_version"] = kModelFormatVersion;
  doc["algo"] = to_string(model.algo);
  doc["n"] = model.n;
  doc["class_name"] = model.class_name;
  doc["class_labels"] = disc.class_labels();
  nlohmann::json metas = nlohmann::json::array();
  for (const auto& meta : disc.meta()) metas.push_back(detail::meta_to_json(meta));
  doc["attribute_meta"] = std::move(metas);
  doc["cuts"] = cuts_to_json(disc.meta(), disc.cuts());
  doc["cardinalities"] = disc.cardinalities();
  doc["smoothing_m"] = model.m;
  doc["regularization"] = {{"C", model.C}, {"center", model.center}};

  const auto& space = *model.tables.space;
  std::vector<double> prior(space.class_count);
  for (std::uint32_t c = 0; c < space.class_count; ++c) prior[c] = model.tables.log_values[c];
  doc["log_prior"] = prior;
  doc["log_theta"] = detail::blocks_to_json(space, model.tables.log_values);

  if (model.weights) doc["weights"] = model.weights->values;
  if (model.betas) doc["betas"] = model.betas->values;
  if (model.ande) {
    nlohmann::json counts;
    counts["total"] = model.ande->parent_counts.total;
    std::vector<std::uint64_t> cls(model.ande->parents->class_count);
    for (std::uint32_t c = 0; c < cls.size(); ++c) cls[c] = model.ande->parent_counts.cells[c];
    counts["class"] = cls;
    counts["parent_blocks"] = detail::count_blocks_to_json(model.ande->parent_counts);
    if (model.ande->joints)
      counts["joint_blocks"] = detail::count_blocks_to_json(model.ande->joint_counts);
    doc["ande_counts"] = std::move(counts);
  }
  if (!model.trace.empty()) {
    nlohmann::json trace = nlohmann::json::array();
    for (const auto& rec : model.trace)
      trace.push_back({{"iteration", rec.iteration},
                       {"objective", rec.objective},
                       {"grad_inf_norm", rec.grad_inf_norm},
                       {"seconds", rec.seconds}});
    doc["trace"] = std::move(trace);
  }
  if (model.termination) doc["termination"] = to_string(*model.termination);
  doc["warnings"] = model.warnings;
  return doc;
}

inline TrainedModel model_from_json(const nlohmann::json& doc) {
  const int version = doc.at("format_version").get<int>();
  if (version != kModelFormatVersion)
    throw config_error("unsupported model format_version " + std::to_string(version));

  TrainedModel model;
  model.algo = parse_algo(doc.at("algo").get<std::string>());
  model.n = doc.at("n").get<std::uint32_t>();
  model.class_name = doc.value("class_name", std::string{});
  model.m = doc.at("smoothing_m").get<double>();
  model.C = doc.at("regularization").at("C").get<double>();
  model.center = doc.at("regularization").at("center").get<double>();

  std::vector<AttributeMeta> metas;
  for (const auto& m : doc.at("attribute_meta")) metas.push_back(detail::meta_from_json(m));
  auto cuts = cuts_from_json(doc.at("cuts"), metas);
  model.discretizer = Discretizer(metas, std::move(cuts),
                                  doc.at("class_labels").get<std::vector<std::string>>());

  const auto cardinalities = doc.at("cardinalities").get<std::vector<std::uint32_t>>();
  if (cardinalities != model.discretizer->cardinalities())
    throw error("model file: cardinalities do not match attribute metadata");
  const auto class_count = model.discretizer->class_count();
  const auto a = static_cast<std::uint32_t>(cardinalities.size());

  // Tables live over n-subsets, except degenerate ande (a == n-1).
  const std::uint32_t table_n = (model.algo == Algo::ande && model.n > a) ? model.n - 1 : model.n;
  model.space = make_feature_space(cardinalities, table_n, class_count);
  model.tables.space = model.space;
  model.tables.smoothing_m = model.m;
  model.tables.log_values.resize(model.space->layout.total_len);
  const auto prior = doc.at("log_prior").get<std::vector<double>>();
  if (prior.size() != class_count) throw error("model file: log_prior has wrong arity");
  for (std::uint32_t c = 0; c < class_count; ++c) model.tables.log_values[c] = prior[c];
  detail::blocks_from_json(doc.at("log_theta"), *model.space, model.tables.log_values);

  if (doc.contains("weights")) {
    auto values = doc.at("weights").get<std::vector<double>>();
    if (values.size() != model.space->layout.total_len)
      throw error("model file: weights have wrong length");
    model.weights = WeightVector{model.space, std::move(values)};
  }
  if (doc.contains("betas")) {
    auto values = doc.at("betas").get<std::vector<double>>();
    if (values.size() != model.space->layout.total_len)
      throw error("model file: betas have wrong length");
    model.betas = BetaVector{model.space, std::move(values)};
  }
  if (model.algo == Algo::nb || model.algo == Algo::anje) model.anje = make_anje(model.tables);
  if (model.algo == Algo::dbl && !model.weights) throw error("model file: dbl model lacks weights");
  if (model.algo == Algo::lr && !model.betas) throw error("model file: lr model lacks betas");

  if (model.algo == Algo::ande) {
    if (!doc.contains("ande_counts")) throw error("model file: ande model lacks counts");
    const auto& counts = doc.at("ande_counts");
    AndeModel ande;
    ande.n = model.n;
    ande.m = model.m;
    ande.parents = make_feature_space(cardinalities, model.n - 1, class_count);
    ande.parent_counts = make_count_table(ande.parents);
    ande.parent_counts.total = counts.at("total").get<std::uint64_t>();
    const auto cls = counts.at("class").get<std::vector<std::uint64_t>>();
    if (cls.size() != class_count) throw error("model file: ande class counts wrong arity");
    for (std::uint32_t c = 0; c < class_count; ++c) ande.parent_counts.cells[c] = cls[c];
    detail::blocks_from_json(counts.at("parent_blocks"), *ande.parents,
                             ande.parent_counts.cells);
    if (model.n <= a) {
      ande.joints = make_feature_space(cardinalities, model.n, class_count);
      ande.joint_counts = make_count_table(ande.joints);
      ande.joint_counts.total = ande.parent_counts.total;
      for (std::uint32_t c = 0; c < class_count; ++c)
        ande.joint_counts.cells[c] = ande.parent_counts.cells[c];
      detail::blocks_from_json(counts.at("joint_blocks"), *ande.joints, ande.joint_counts.cells);
    }
    rebuild_ande(ande);
    model.ande = std::move(ande);
  }
  if (doc.contains("trace")) {
    for (const auto& rec : doc.at("trace"))
      model.trace.push_back({rec.at("iteration").get<std::size_t>(),
                             rec.at("objective").get<double>(),
                             rec.at("grad_inf_norm").get<double>(),
                             rec.at("seconds").get<double>()});
  }
  if (doc.contains("warnings"))
    model.warnings = doc.at("warnings").get<std::vector<std::string>>();
  return model;
}

inline void save_model(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw error("cannot write '" + path + "'");
  out << model_to_json(model).dump(2) << '\n';
}

inline TrainedModel load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open model '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw error("model '" + path + "': " + e.what());
  }
  return model_from_json(doc);
}

inline void write_trace_csv(std::ostream& out, std::span<const TraceRecord> trace) {
  out << "iteration,objective,grad_inf_norm,seconds\n";
  for (const auto& rec : trace)
    out << rec.iteration << ',' << fmt_double(rec.objective) << ','
        << fmt_double(rec.grad_inf_norm) << ',' << fmt_double(rec.seconds) << '\n';
}

inline nlohmann::json trace_to_json(std::span<const TraceRecord> trace) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& rec : trace)
    out.push_back({{"iteration", rec.iteration},
                   {"objective", rec.objective},
                   {"grad_inf_norm", rec.grad_inf_norm},
                   {"seconds", rec.seconds}});
  return out;
}

struct ExperimentResult {
  std::string dataset;
  std::string algo;
  std::uint32_t n = 1;
  double C = 0.0;
  std::uint64_t seed = 0;
  std::uint32_t rounds = 0;
  std::uint32_t folds = 0;
  double zero_one = 0.0;
  double rmse = 0.0;
  double bias = 0.0;
  double variance = 0.0;
  double train_seconds = 0.0;
  double classify_seconds = 0.0;
  std::vector<std::string> warnings;
};

inline nlohmann::json experiment_to_json(const ExperimentResult& r) {
  return {{"dataset", r.dataset},
          {"algo", r.algo},
          {"n", r.n},
          {"C", r.C},
          {"seed", r.seed},
          {"rounds", r.rounds},
          {"folds", r.folds},
          {"metrics",
           {{"zero_one", r.zero_one},
            {"rmse", r.rmse},
            {"bias", r.bias},
            {"variance", r.variance}}},
          {"timing", {{"train_seconds", r.train_seconds}, {"classify_seconds", r.classify_seconds}}},
          {"warnings", r.warnings},
          {"metadata",
           {{"rmse_convention",
             "sqrt(mean over test instances of mean over classes of (posterior - indicator)^2)"},
            {"bias_variance_estimator",
             "kohavi-wolpert 0-1 decomposition over repeated cross-validation splits"}}}};
}

inline ExperimentResult experiment_from_json(const nlohmann::json& doc) {
  ExperimentResult r;
  r.dataset = doc.at("dataset").get<std::string>();
  r.algo = doc.at("algo").get<std::string>();
  r.n = doc.at("n").get<std::uint32_t>();
  r.C = doc.at("C").get<double>();
  r.seed = doc.at("seed").get<std::uint64_t>();
  r.rounds = doc.value("rounds", 0u);
  r.folds = doc.value("folds", 0u);
  const auto& metrics = doc.at("metrics");
  r.zero_one = metrics.at("zero_one").get<double>();
  r.rmse = metrics.at("rmse").get<double>();
  r.bias = metrics.value("bias", 0.0);
  r.variance = metrics.value("variance", 0.0);
  if (doc.contains("timing")) {
    r.train_seconds = doc["timing"].value("train_seconds", 0.0);
    r.classify_seconds = doc["timing"].value("classify_seconds", 0.0);
  }
  if (doc.contains("warnings")) r.warnings = doc["warnings"].get<std::vector<std::string>>();
  return r;
}

// Results files hold either one experiment object or an array of them.
inline std::vector<ExperimentResult> load_experiments(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw error("cannot open results file '" + path + "'");
  nlohmann::json doc;
  try {
    in >> doc;
  } catch (const nlohmann::json::exception& e) {
    throw error("results '" + path + "': " + e.what());
  }
  std::vector<ExperimentResult> out;
  if (doc.is_array())
    for (const auto& item : doc) out.push_back(experiment_from_json(item));
  else
    out.push_back(experiment_from_json(doc));
  if (out.empty()) throw error("results '" + path + "': no experiments");
  return out;
}

inline std::string csv_escape(const std::string& field) {
  if (field.find_first_of(",\"\n") == std::string::npos) return field;
  std::string out = "\"";
  for (char ch : field) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

inline void write_experiments_csv(std::ostream& out,
                                  std::span<const ExperimentResult> experiments) {
  out << "dataset,algo,n,C,seed,rounds,folds,zero_one,rmse,bias,variance,"
         "train_seconds,classify_seconds\n";
  for (const auto& r : experiments)
    out << csv_escape(r.dataset) << ',' << r.algo << ',' << r.n << ',' << fmt_double(r.C) << ','
        << r.seed << ',' << r.rounds << ',' << r.folds << ',' << fmt_double(r.zero_one) << ','
        << fmt_double(r.rmse) << ',' << fmt_double(r.bias) << ',' << fmt_double(r.variance) << ','
        << fmt_double(r.train_seconds) << ',' << fmt_double(r.classify_seconds) << '\n';
}

}  // namespace dbl
