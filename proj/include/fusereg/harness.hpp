#pragma once

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "fusereg/config.hpp"
#include "fusereg/csv.hpp"
#include "fusereg/discrete.hpp"
#include "fusereg/evaluate.hpp"
#include "fusereg/fusion.hpp"
#include "fusereg/pca.hpp"
#include "fusereg/projection.hpp"
#include "fusereg/property_suite.hpp"
#include "fusereg/sampling.hpp"

namespace fusereg {

struct CliContext {
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 1;
  bool verbose = false;
};

namespace harness {

inline void write_text(const std::filesystem::path& path, const std::string& text) {
  std::filesystem::create_directories(path.parent_path().empty() ? "." : path.parent_path());
  std::ofstream out(path);
  if (!out) throw data_error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw data_error("write failed for " + path.string());
}

inline std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw data_error("cannot open " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::optional<JointModel> model_from_config(const ConfigMap& cfg) {
  if (!cfg.has("synth.model")) return std::nullopt;
  const std::string kind = cfg.get("synth.model");

  if (kind == "discrete") {
    const std::string path = cfg.get("synth.pmf");
    try {
      return JointModel(DiscreteJoint::parse(read_text(path)));
    } catch (const data_error& e) {
      throw data_error(std::string("synth.pmf: ") + e.what());
    }
  }

  const Vector dv = cfg.vector("synth.dims");
  if (dv.size() != 3 || dv(0) < 1 || dv(1) < 1 || dv(2) < 1)
    throw config_error("synth.dims: expected three positive integers (m1, m2, n)");
  const CorpusDims dims{static_cast<int>(dv(0)), static_cast<int>(dv(1)),
                        static_cast<int>(dv(2))};

  if (kind == "gaussian") {
    GaussianModel g{cfg.matrix("synth.sigma"), dims};
    validate_gaussian(g);
    return JointModel(std::move(g));
  }
  if (kind == "mixture") {
    GaussianMixture mix;
    for (int k = 1; cfg.has("synth.sigma" + std::to_string(k)); ++k)
      mix.components.push_back({cfg.matrix("synth.sigma" + std::to_string(k)), dims});
    const Vector w = cfg.vector("synth.weights");
    mix.weights.assign(w.data(), w.data() + w.size());
    validate_mixture(mix);
    return JointModel(std::move(mix));
  }
  throw config_error("synth.model: unknown model kind '" + kind + "'");
}

inline TrainingCorpus corpus_from_config(const ConfigMap& cfg, const CliContext& ctx,
                                         std::optional<JointModel>& model_out) {
  model_out = model_from_config(cfg);
  if (cfg.has("data.dir")) {
    if (model_out) throw config_error("give either data.dir or synth.model, not both");
    return read_corpus_csv(cfg.get("data.dir"));
  }
  if (!model_out) throw config_error("need data.dir or a synth.* model spec");
  const long l1 = cfg.integer_or("synth.l1", 0);
  const long l2 = cfg.integer_or("synth.l2", 0);
  const long u = cfg.integer_or("synth.u", 0);
  if (l1 < 0 || l2 < 0 || u < 1)
    throw config_error("synth counts: l1, l2 must be >= 0 and u >= 1");
  return build_corpus(*model_out, static_cast<std::size_t>(l1), static_cast<std::size_t>(l2),
                      static_cast<std::size_t>(u), ctx.seed);
}

inline std::uint64_t test_seed(const CliContext& ctx) { return ctx.seed ^ 0x7465737431ULL; }

inline std::optional<std::pair<std::vector<Atom>, std::string>> test_atoms(
    const ConfigMap& cfg, const CliContext& ctx, const std::optional<JointModel>& model) {
  if (cfg.has("data.test")) {
    const std::string path = cfg.get("data.test");
    return std::make_pair(atoms_from_table(read_csv(path), path), std::string("test-file"));
  }
  const long n = cfg.integer_or("synth.test", 0);
  if (n < 0) throw config_error("synth.test: must be >= 0");
  if (n > 0) {
    if (!model) throw config_error("synth.test needs a synth.* model spec");
    return std::make_pair(sample_joint(*model, static_cast<std::size_t>(n), test_seed(ctx)),
                          std::string("synthetic"));
  }
  return std::nullopt;
}

struct Split {
  std::vector<LabeledPair> train, test;
  bool held_out = false;
};

inline Split split_samples(const std::vector<LabeledPair>& all, double train_fraction,
                           std::uint64_t seed) {
  if (!(train_fraction > 0.0 && train_fraction <= 1.0))
    throw config_error("split.train: fraction must be in (0, 1]");
  Split s;
  if (train_fraction == 1.0) {
    s.train = all;
    s.test = all;
    return s;
  }
  std::vector<std::size_t> order(all.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
  Rng rng(seed);
  for (std::size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[rng.next_u64() % i]);
  const std::size_t ntrain =
      static_cast<std::size_t>(train_fraction * static_cast<double>(all.size()));
  if (ntrain == 0 || ntrain == all.size())
    throw config_error("split.train: fraction leaves an empty train or test part");
  for (std::size_t i = 0; i < all.size(); ++i)
    (i < ntrain ? s.train : s.test).push_back(all[order[i]]);
  s.held_out = true;
  return s;
}

inline nlohmann::json metric_json(const EvaluationReport& er, const std::string& source,
                                  std::size_t test_size) {
  nlohmann::json j;
  j["name"] = er.metric;
  j["value"] = er.value;
  j["per_target"] = json_from_vector(er.per_target);
  j["source"] = source;
  j["test_size"] = test_size;
  return j;
}

inline nlohmann::json base_report(const std::string& command, const Predictor& p,
                                  const TrainingCorpus* corpus) {
  nlohmann::json j;
  j["command"] = command;
  j["estimator"] = describe(p);
  j["notes"] = p.notes();
  nlohmann::json diag = nlohmann::json::object();
  for (const auto& [key, value] : p.diagnostics()) diag[key] = value;
  j["diagnostics"] = diag;
  j["kernel_fallbacks"] = p.kernel_fallbacks();
  if (corpus) {
    j["corpus"] = {{"l1", corpus->labeled1().size()},
                   {"l2", corpus->labeled2().size()},
                   {"u", corpus->unlabeled().size()}};
  }
  j["metric"] = nullptr;
  return j;
}

inline std::filesystem::path write_report(const CliContext& ctx, const nlohmann::json& j) {
  const auto path = ctx.out_dir / "report.json";
  write_text(path, j.dump(2) + "\n");
  return path;
}

inline void save_predictor(const CliContext& ctx, const Predictor& p) {
  write_text(ctx.out_dir / "predictor.json", p.to_json().dump(2) + "\n");
}

// Optional per-domain PCA on the corpus inputs, fitted over every
// available observation of the domain. The returned transforms must be
// baked into any predictor fitted on the reduced corpus.
struct CorpusPca {
  std::optional<PcaResult> domain1, domain2;
};

inline Matrix domain_inputs(const TrainingCorpus& c, int domain) {
  std::vector<const Vector*> rows;
  if (domain == 1) {
    for (const auto& p : c.labeled1()) rows.push_back(&p.x);
    for (const auto& p : c.unlabeled()) rows.push_back(&p.x1);
  } else {
    for (const auto& p : c.labeled2()) rows.push_back(&p.x);
    for (const auto& p : c.unlabeled()) rows.push_back(&p.x2);
  }
  Matrix m(rows.size(), domain == 1 ? c.dims().m1 : c.dims().m2);
  for (std::size_t i = 0; i < rows.size(); ++i)
    m.row(static_cast<Eigen::Index>(i)) = rows[i]->transpose();
  return m;
}

inline TrainingCorpus reduce_corpus(const TrainingCorpus& c, const ConfigMap& cfg,
                                    CorpusPca& out) {
  const long d1 = cfg.integer_or("pca.x1", 0);
  const long d2 = cfg.integer_or("pca.x2", 0);
  if (d1 == 0 && d2 == 0) return c;
  if (d1 < 0 || d2 < 0) throw config_error("pca.x1/pca.x2: dimensions must be positive");

  if (d1 > 0) out.domain1 = pca(domain_inputs(c, 1), static_cast<int>(d1));
  if (d2 > 0) out.domain2 = pca(domain_inputs(c, 2), static_cast<int>(d2));

  auto map1 = [&](const Vector& x) {
    return out.domain1 ? Vector(out.domain1->components * (x - out.domain1->mean)) : x;
  };
  auto map2 = [&](const Vector& x) {
    return out.domain2 ? Vector(out.domain2->components * (x - out.domain2->mean)) : x;
  };

  std::vector<LabeledPair> l1, l2;
  std::vector<UnlabeledPair> un;
  for (const auto& p : c.labeled1()) l1.push_back({map1(p.x), p.y});
  for (const auto& p : c.labeled2()) l2.push_back({map2(p.x), p.y});
  for (const auto& p : c.unlabeled()) un.push_back({map1(p.x1), map2(p.x2)});
  const CorpusDims dims{out.domain1 ? static_cast<int>(d1) : c.dims().m1,
                        out.domain2 ? static_cast<int>(d2) : c.dims().m2, c.dims().n};
  return TrainingCorpus(std::move(l1), std::move(l2), std::move(un), dims);
}

inline Predictor bake_pca(const Predictor& p, const CorpusPca& pca_fit) {
  if (!pca_fit.domain1 && !pca_fit.domain2) return p;
  Matrix a1, a2;
  Vector b1, b2;
  if (pca_fit.domain1) {
    a1 = pca_fit.domain1->components;
    b1 = pca_fit.domain1->mean;
  }
  if (pca_fit.domain2) {
    a2 = pca_fit.domain2->components;
    b2 = pca_fit.domain2->mean;
  }
  return Predictor(std::make_shared<InputMapNode>(p, a1, b1, a2, b2))
      .with_note("inputs reduced by per-domain principal components");
}

// Evaluation of a one-domain predictor: explicit test file, synthetic
// test draw, held-out split, or the training samples, in that order.
inline void attach_one_domain_metric(nlohmann::json& report, const ConfigMap& cfg,
                                     const CliContext& ctx,
                                     const std::optional<JointModel>& model,
                                     const Predictor& p, const Split& split,
                                     const std::string& metric) {
  std::vector<LabeledPair> eval;
  std::string source;
  const int which = p.which();
  if (cfg.has("data.test")) {
    const std::string path = cfg.get("data.test");
    eval = labeled_from_table(read_csv(path), which == 1 ? "x1" : "x2", path);
    source = "test-file";
  } else if (cfg.integer_or("synth.test", 0) > 0) {
    if (!model) throw config_error("synth.test needs a synth.* model spec");
    const auto atoms = sample_joint(*model, static_cast<std::size_t>(cfg.integer("synth.test")),
                                    test_seed(ctx));
    for (const auto& a : atoms) eval.push_back({which == 1 ? a.x1 : a.x2, a.y});
    source = "synthetic";
  } else {
    eval = split.test;
    source = split.held_out ? "held-out" : "training";
  }
  if (eval.empty()) {
    report["notes"].push_back("no evaluation data available; metric omitted");
    return;
  }
  const EvaluationReport er = evaluate(p, eval, metric);
  report["metric"] = metric_json(er, source, eval.size());
}

inline nlohmann::json cmd_fit(const ConfigMap& cfg, const CliContext& ctx) {
  const int domain = static_cast<int>(cfg.integer_or("fit.domain", 1));
  if (domain != 1 && domain != 2) throw config_error("fit.domain: must be 1 or 2");
  std::optional<JointModel> model;
  TrainingCorpus corpus = corpus_from_config(cfg, ctx, model);
  CorpusPca pca_fit;
  corpus = reduce_corpus(corpus, cfg, pca_fit);

  const std::string group = domain == 1 ? "classA" : "classB";
  const int input_dim = domain == 1 ? corpus.dims().m1 : corpus.dims().m2;
  const FunctionClass cls = class_from_config(cfg, group, input_dim, corpus.dims().n);
  const auto& samples = domain == 1 ? corpus.labeled1() : corpus.labeled2();
  if (samples.empty())
    throw data_error("fit: no labeled domain-" + std::to_string(domain) + " examples");

  const Split split = split_samples(samples, cfg.number_or("split.train", 1.0),
                                    cfg.integer_or("split.seed", static_cast<long>(ctx.seed)));
  Predictor p = fit_class(split.train, cls, domain, corpus.dims().n);
  p = bake_pca(p, pca_fit);

  nlohmann::json report = base_report("fit", p, &corpus);
  report["domain"] = domain;
  report["class"] = to_string(cls.kind());
  attach_one_domain_metric(report, cfg, ctx, model, p, split, cfg.get_or("metric", "rmse"));
  save_predictor(ctx, p);
  return report;
}

inline FusionPlan plan_from_config(const ConfigMap& cfg, const TrainingCorpus& corpus) {
  return {class_from_config(cfg, "classA", corpus.dims().m1, corpus.dims().n),
          class_from_config(cfg, "classB", corpus.dims().m2, corpus.dims().n)};
}

inline nlohmann::json cmd_fuse(const ConfigMap& cfg, const CliContext& ctx) {
  std::optional<JointModel> model;
  TrainingCorpus corpus = corpus_from_config(cfg, ctx, model);
  CorpusPca pca_fit;
  corpus = reduce_corpus(corpus, cfg, pca_fit);
  const FusionPlan plan = plan_from_config(cfg, corpus);

  FusionOptions opt;
  opt.kernel = kernel_from_config(cfg, "kernel");
  opt.cross_check = cfg.flag_or("fuse.cross_check", true);
  Predictor p = fuse(corpus, plan, opt);
  p = bake_pca(p, pca_fit);

  nlohmann::json report = base_report("fuse", p, &corpus);
  const FusionDispatch d = strategy_for(plan.classA, plan.classB);
  report["strategy"] = to_string(d.strategy) + (d.mirrored ? " (domains swapped)" : "");

  const std::string metric = cfg.get_or("metric", "rmse");
  const auto atoms = test_atoms(cfg, ctx, model);
  if (atoms) {
    const EvaluationReport er = evaluate(p, atoms->first, metric);
    report["metric"] = metric_json(er, atoms->second, atoms->first.size());
  } else {
    report["notes"].push_back("no paired test data; metric omitted");
  }
  save_predictor(ctx, p);
  return report;
}

inline nlohmann::json cmd_project(const ConfigMap& cfg, const CliContext& ctx) {
  std::optional<JointModel> model;
  TrainingCorpus corpus = corpus_from_config(cfg, ctx, model);
  CorpusPca pca_fit;
  corpus = reduce_corpus(corpus, cfg, pca_fit);
  const FusionPlan plan = plan_from_config(cfg, corpus);

  ProjectionOptions opt;
  opt.kernel = kernel_from_config(cfg, "kernel");
  opt.split_half = cfg.flag_or("project.split_half", false);

  Predictor p;
  if (plan.classB.kind() == ClassKind::Zero) {
    p = cross_domain(corpus, plan.classA)
            .with_note("classB is degenerate: the projected predictor is the single-domain fit, "
                       "unchanged");
  } else {
    FusionOptions fopt;
    fopt.kernel = opt.kernel;
    fopt.cross_check = cfg.flag_or("fuse.cross_check", true);
    p = project(fuse(corpus, plan, fopt), corpus, opt);
  }
  p = bake_pca(p, pca_fit);

  nlohmann::json report = base_report("project", p, &corpus);
  Split split;
  split.train = corpus.labeled1();
  split.test = corpus.labeled1();
  attach_one_domain_metric(report, cfg, ctx, model, p, split, cfg.get_or("metric", "rmse"));
  save_predictor(ctx, p);
  return report;
}

inline nlohmann::json cmd_shared_rep(const ConfigMap& cfg, const CliContext& ctx) {
  std::optional<JointModel> model;
  TrainingCorpus corpus = corpus_from_config(cfg, ctx, model);
  CorpusPca pca_fit;
  corpus = reduce_corpus(corpus, cfg, pca_fit);
  const FunctionClass classB =
      class_from_config(cfg, "classB", corpus.dims().m2, corpus.dims().n);

  ProjectionOptions opt;
  opt.kernel = kernel_from_config(cfg, "kernel");
  opt.split_half = cfg.flag_or("project.split_half", false);
  Predictor p = bake_pca(shared_representation(corpus, classB, opt), pca_fit);

  nlohmann::json report = base_report("shared-rep", p, &corpus);
  Split split;
  split.train = corpus.labeled1();
  split.test = corpus.labeled1();
  attach_one_domain_metric(report, cfg, ctx, model, p, split, cfg.get_or("metric", "rmse"));
  save_predictor(ctx, p);
  return report;
}

inline nlohmann::json cmd_cross_domain(const ConfigMap& cfg, const CliContext& ctx) {
  std::optional<JointModel> model;
  TrainingCorpus corpus = corpus_from_config(cfg, ctx, model);
  CorpusPca pca_fit;
  corpus = reduce_corpus(corpus, cfg, pca_fit);
  const FunctionClass classA =
      class_from_config(cfg, "classA", corpus.dims().m1, corpus.dims().n);
  Predictor p = bake_pca(cross_domain(corpus, classA), pca_fit);

  nlohmann::json report = base_report("cross-domain", p, &corpus);
  Split split;
  split.train = corpus.labeled1();
  split.test = corpus.labeled1();
  attach_one_domain_metric(report, cfg, ctx, model, p, split, cfg.get_or("metric", "rmse"));
  save_predictor(ctx, p);
  return report;
}

inline nlohmann::json cmd_side_info(const ConfigMap& cfg, const CliContext& ctx) {
  std::optional<JointModel> model;
  TrainingCorpus corpus = corpus_from_config(cfg, ctx, model);
  CorpusPca pca_fit;
  corpus = reduce_corpus(corpus, cfg, pca_fit);

  ProjectionOptions opt;
  opt.kernel = kernel_from_config(cfg, "kernel");
  Predictor p = bake_pca(side_info_linear_nonlinear(corpus, opt), pca_fit);

  nlohmann::json report = base_report("side-info", p, &corpus);
  Split split;
  split.train = corpus.labeled1();
  split.test = corpus.labeled1();
  attach_one_domain_metric(report, cfg, ctx, model, p, split, cfg.get_or("metric", "rmse"));
  save_predictor(ctx, p);
  return report;
}

inline nlohmann::json cmd_synth(const ConfigMap& cfg, const CliContext& ctx) {
  std::optional<JointModel> model = model_from_config(cfg);
  if (!model) throw config_error("synth: needs a synth.* model spec");
  const long l1 = cfg.integer_or("synth.l1", 0);
  const long l2 = cfg.integer_or("synth.l2", 0);
  const long u = cfg.integer_or("synth.u", 1);
  if (l1 < 0 || l2 < 0 || u < 1)
    throw config_error("synth counts: l1, l2 must be >= 0 and u >= 1");
  const TrainingCorpus corpus =
      build_corpus(*model, static_cast<std::size_t>(l1), static_cast<std::size_t>(l2),
                   static_cast<std::size_t>(u), ctx.seed);
  std::filesystem::create_directories(ctx.out_dir);
  write_corpus_csv(ctx.out_dir, corpus);

  nlohmann::json report;
  report["command"] = "synth";
  report["corpus"] = {{"l1", corpus.labeled1().size()},
                      {"l2", corpus.labeled2().size()},
                      {"u", corpus.unlabeled().size()}};
  report["files"] = {"labeled1.csv", "labeled2.csv", "unlabeled.csv"};

  const long ntest = cfg.integer_or("synth.test", 0);
  if (ntest < 0) throw config_error("synth.test: must be >= 0");
  if (ntest > 0) {
    const auto atoms = sample_joint(*model, static_cast<std::size_t>(ntest), test_seed(ctx));
    const CorpusDims d = corpus.dims();
    CsvTable t;
    t.columns = role_columns("x1", d.m1);
    for (const auto& c2 : role_columns("x2", d.m2)) t.columns.push_back(c2);
    for (const auto& cy : role_columns("y", d.n)) t.columns.push_back(cy);
    t.rows.resize(static_cast<Eigen::Index>(atoms.size()), d.m1 + d.m2 + d.n);
    for (std::size_t i = 0; i < atoms.size(); ++i) {
      t.rows.row(static_cast<Eigen::Index>(i)).segment(0, d.m1) = atoms[i].x1.transpose();
      t.rows.row(static_cast<Eigen::Index>(i)).segment(d.m1, d.m2) = atoms[i].x2.transpose();
      t.rows.row(static_cast<Eigen::Index>(i)).segment(d.m1 + d.m2, d.n) =
          atoms[i].y.transpose();
    }
    write_csv(ctx.out_dir / "test.csv", t);
    report["files"].push_back("test.csv");
    report["test_size"] = atoms.size();
  }
  return report;
}

inline nlohmann::json cmd_pca(const ConfigMap& cfg, const CliContext& ctx) {
  const std::string input = cfg.get("pca.input");
  const int dim = static_cast<int>(cfg.integer("pca.dim"));
  const CsvTable table = read_csv(input);
  if (table.rows.rows() == 0) throw data_error("pca: " + input + " has no data rows");
  const PcaResult result = pca(table.rows, dim);

  CsvTable transformed;
  transformed.columns = role_columns("pc", dim);
  transformed.rows = result.transformed;
  std::filesystem::create_directories(ctx.out_dir);
  write_csv(ctx.out_dir / "transformed.csv", transformed);

  nlohmann::json proj;
  proj["columns"] = table.columns;
  proj["mean"] = json_from_vector(result.mean);
  proj["components"] = json_from_matrix(result.components);
  proj["eigenvalues"] = json_from_vector(result.eigenvalues);
  write_text(ctx.out_dir / "projection.json", proj.dump(2) + "\n");

  nlohmann::json report;
  report["command"] = "pca";
  report["input"] = input;
  report["dim"] = dim;
  report["rows"] = table.rows.rows();
  report["eigenvalues"] = json_from_vector(result.eigenvalues);
  report["files"] = {"transformed.csv", "projection.json"};
  return report;
}

inline nlohmann::json cmd_oracle_check(const ConfigMap& cfg, const CliContext& ctx) {
  const long count = cfg.integer_or("oracle.count", 50);
  if (count < 1) throw config_error("oracle.count: must be >= 1");
  const bool corrupt = cfg.flag_or("oracle.corrupt", false);
  cfg.require_all_consumed();

  if (corrupt) {
    const MembershipVerdict v = corrupted_membership(ctx.seed);
    if (v.member)
      throw property_error("negative control failed: corrupted probability table passed "
                           "membership checking");
    throw property_error("negative control: corrupted probability table rejected as expected "
                         "(failing condition: " +
                         v.failing + ")");
  }

  const auto outcomes = run_oracle_suite(ctx.seed, static_cast<int>(count));
  nlohmann::json report;
  report["command"] = "oracle-check";
  report["count"] = count;
  report["seed"] = ctx.seed;
  report["properties"] = nlohmann::json::array();
  bool any_failed = false;
  std::string failed_names;
  for (const auto& o : outcomes) {
    std::cout << o.property << ": " << (o.instances - o.failures) << "/" << o.instances
              << " passed, worst residual " << format_double(o.worst_residual) << "\n";
    nlohmann::json po;
    po["property"] = o.property;
    po["instances"] = o.instances;
    po["failures"] = o.failures;
    po["worst_residual"] = o.worst_residual;
    po["notes"] = o.notes;
    report["properties"].push_back(po);
    if (!o.passed()) {
      any_failed = true;
      failed_names += (failed_names.empty() ? "" : ", ") + o.property;
    }
  }
  write_report(ctx, report);
  if (any_failed) throw property_error("oracle properties failed: " + failed_names);
  return report;
}

inline nlohmann::json cmd_evaluate(const ConfigMap& cfg, const CliContext& ctx) {
  const std::string predictor_path = cfg.get("evaluate.predictor");
  nlohmann::json pj;
  try {
    pj = nlohmann::json::parse(read_text(predictor_path));
  } catch (const nlohmann::json::exception& e) {
    throw data_error(predictor_path + ": " + e.what());
  }
  const Predictor p = Predictor::from_json(pj);

  const std::string test_path = cfg.get("data.test");
  const CsvTable table = read_csv(test_path);
  const std::string metric = cfg.get_or("metric", "rmse");

  EvaluationReport er;
  std::size_t test_size = 0;
  if (p.arity() == Arity::TwoDomain) {
    const auto atoms = atoms_from_table(table, test_path);
    test_size = atoms.size();
    er = evaluate(p, atoms, metric);
  } else {
    const auto pairs =
        labeled_from_table(table, p.which() == 1 ? "x1" : "x2", test_path);
    test_size = pairs.size();
    er = evaluate(p, pairs, metric);
  }

  nlohmann::json report = base_report("evaluate", p, nullptr);
  report["predictor_file"] = predictor_path;
  report["metric"] = metric_json(er, "test-file", test_size);
  return report;
}

inline nlohmann::json run_command(const std::string& command, const ConfigMap& cfg,
                                  const CliContext& ctx) {
  if (cfg.has("task") && cfg.get("task") != command)
    throw config_error("config task '" + cfg.get("task") + "' does not match subcommand '" +
                       command + "'");
  cfg.get_or("out.dir", "");  // consumed by the caller before dispatch

  const auto started = std::chrono::steady_clock::now();
  nlohmann::json report;
  if (command == "fit") report = cmd_fit(cfg, ctx);
  else if (command == "fuse") report = cmd_fuse(cfg, ctx);
  else if (command == "project") report = cmd_project(cfg, ctx);
  else if (command == "shared-rep") report = cmd_shared_rep(cfg, ctx);
  else if (command == "cross-domain") report = cmd_cross_domain(cfg, ctx);
  else if (command == "side-info") report = cmd_side_info(cfg, ctx);
  else if (command == "synth") report = cmd_synth(cfg, ctx);
  else if (command == "pca") report = cmd_pca(cfg, ctx);
  else if (command == "oracle-check") return cmd_oracle_check(cfg, ctx);
  else if (command == "evaluate") report = cmd_evaluate(cfg, ctx);
  else throw config_error("unknown command '" + command + "'");

  cfg.require_all_consumed();
  report["seed"] = ctx.seed;
  if (ctx.verbose) {
    const auto elapsed = std::chrono::steady_clock::now() - started;
    report["wall_seconds"] =
        std::chrono::duration_cast<std::chrono::duration<double>>(elapsed).count();
  }
  write_report(ctx, report);
  return report;
}

}  // namespace harness
}  // namespace fusereg
