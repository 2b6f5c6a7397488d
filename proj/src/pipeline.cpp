#include "repscen/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <mutex>

#include <fmt/format.h>

#include "repscen/csv.hpp"
#include "repscen/features.hpp"
#include "repscen/parallel.hpp"

namespace repscen::pipeline {

using nlohmann::json;

namespace {

template <typename F>
void read_section(const json& j, const std::string& section, F&& handle) {
  if (!j.is_object()) throw ConfigError(fmt::format("'{}' must be an object", section));
  for (const auto& [key, value] : j.items()) {
    bool known = false;
    try {
      known = handle(key, value);
    } catch (const json::exception& e) {
      throw ConfigError(fmt::format("{}.{}: {}", section, key, e.what()));
    }
    if (!known) throw ConfigError(fmt::format("unknown key '{}.{}'", section, key));
  }
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ArtifactError(fmt::format("cannot open {}", path.string()));
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw ArtifactError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  out << text;
  if (!out) throw ArtifactError(fmt::format("cannot write {}", path.string()));
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(1) + "\n"); }

void require(const fs::path& path) {
  if (!fs::exists(path)) throw ArtifactError(fmt::format("missing upstream artifact {}", path.string()));
}

std::string rel(const fs::path& p, const fs::path& base) { return fs::relative(p, base).generic_string(); }

void record_stage(const RunConfig& cfg, const fs::path& out, const std::string& stage, std::uint64_t seed,
                  const std::vector<fs::path>& inputs, const std::vector<fs::path>& outputs, double seconds,
                  json counts = json::object()) {
  const fs::path path = manifest_file(out);
  json manifest = fs::exists(path) ? read_json(path) : json::object();
  if (!manifest.is_object()) manifest = json::object();
  manifest["root_seed"] = cfg.seed;
  json entry;
  entry["seed"] = seed;
  entry["config_hash"] = config_hash(cfg);
  entry["config"] = to_json(cfg);
  entry["inputs"] = json::array();
  for (const auto& p : inputs) entry["inputs"].push_back(p.generic_string());
  entry["outputs"] = json::array();
  for (const auto& p : outputs) entry["outputs"].push_back(rel(p, out));
  entry["counts"] = std::move(counts);
  entry["timings"] = {{"wall_seconds", seconds}};
  manifest["stages"][stage] = std::move(entry);
  write_json(path, manifest);
}

const char* backend_name(Backend b) { return b == Backend::kInternal ? "internal" : "external"; }

OvfOptions recourse_options() { return OvfOptions{}; }

std::map<std::string, learn::Split> read_splits(const fs::path& path) {
  require(path);
  const csv::Table t = csv::read(path);
  const auto c_id = t.column("instance_id"), c_split = t.column("split");
  std::map<std::string, learn::Split> out;
  for (const auto& r : t.rows) out[r[c_id]] = learn::split_from_string(r[c_split]);
  return out;
}

}  // namespace

void RunConfig::validate() const {
  if (jobs < 1) throw ConfigError("jobs must be >= 1");
  try {
    generator.validate();
  } catch (const ModelError& e) {
    throw ConfigError(e.what());
  }
  solver.validate();
  rs_search.validate();
  training.split.validate();
  training.lr.validate();
  training.ann.validate();
  if (!(evaluation.histogram_bin_width > 0.0)) throw ConfigError("evaluation.histogram_bin_width must be > 0");
  if (evaluation.methods.empty()) throw ConfigError("evaluation.methods must not be empty");
  if (std::find(evaluation.methods.begin(), evaluation.methods.end(), eval::Method::kGrb) == evaluation.methods.end())
    throw ConfigError("evaluation.methods must include GRB");
}

RunConfig config_from_json(const json& j) {
  RunConfig cfg;
  read_section(j, "config", [&](const std::string& key, const json& v) {
    if (key == "seed") cfg.seed = v.get<std::uint64_t>();
    else if (key == "output_dir") cfg.output_dir = v.get<std::string>();
    else if (key == "jobs") cfg.jobs = v.get<int>();
    else if (key == "generator") {
      auto& g = cfg.generator;
      read_section(v, "generator", [&](const std::string& k, const json& x) {
        if (k == "n") g.n = x.get<int>();
        else if (k == "m") g.m = x.get<int>();
        else if (k == "count") g.count = x.get<int>();
        else if (k == "cf_lo") g.cf_lo = x.get<int>();
        else if (k == "cf_hi") g.cf_hi = x.get<int>();
        else if (k == "cv_lo") g.cv_lo = x.get<int>();
        else if (k == "cv_hi") g.cv_hi = x.get<int>();
        else if (k == "ctf_lo") g.ctf_lo = x.get<int>();
        else if (k == "ctf_hi") g.ctf_hi = x.get<int>();
        else if (k == "ctv_lo") g.ctv_lo = x.get<int>();
        else if (k == "ctv_hi") g.ctv_hi = x.get<int>();
        else if (k == "transport_seed") g.transport_seed = x.get<std::uint64_t>();
        else if (k == "shortfall_penalty") g.shortfall_penalty = x.get<double>();
        else return false;
        return true;
      });
    } else if (key == "solver") {
      auto& s = cfg.solver;
      read_section(v, "solver", [&](const std::string& k, const json& x) {
        if (k == "gap_limit") s.gap_limit = x.get<double>();
        else if (k == "time_limit") s.time_limit = x.get<double>();
        else if (k == "threads") s.threads = x.get<int>();
        else if (k == "node_limit") s.node_limit = x.get<std::int64_t>();
        else if (k == "seed") s.seed = x.get<std::uint64_t>();
        else if (k == "external_command") s.external_command = x.get<std::string>();
        else if (k == "backend") {
          const auto b = x.get<std::string>();
          if (b == "internal") s.backend = Backend::kInternal;
          else if (b == "external") s.backend = Backend::kExternal;
          else throw ConfigError("solver.backend must be 'internal' or 'external'");
        } else return false;
        return true;
      });
    } else if (key == "rs_search") {
      cfg.rs_search = rs::rs_config_from_json(v);
    } else if (key == "features") {
      read_section(v, "features", [](const std::string&, const json&) { return false; });
    } else if (key == "training") {
      auto& t = cfg.training;
      read_section(v, "training", [&](const std::string& k, const json& x) {
        if (k == "split") {
          read_section(x, "training.split", [&](const std::string& f, const json& y) {
            if (f == "train") t.split.train = y.get<double>();
            else if (f == "val") t.split.val = y.get<double>();
            else if (f == "test") t.split.test = y.get<double>();
            else return false;
            return true;
          });
        } else if (k == "lr") {
          read_section(x, "training.lr", [&](const std::string& f, const json& y) {
            if (f != "ridge") return false;
            t.lr.ridge = y.get<double>();
            return true;
          });
        } else if (k == "ann") {
          auto& a = t.ann;
          read_section(x, "training.ann", [&](const std::string& f, const json& y) {
            if (f == "hidden") a.hidden = y.get<std::vector<int>>();
            else if (f == "learning_rate") a.learning_rate = y.get<double>();
            else if (f == "momentum") a.momentum = y.get<double>();
            else if (f == "batch_size") a.batch_size = y.get<int>();
            else if (f == "max_epochs") a.max_epochs = y.get<int>();
            else if (f == "patience") a.patience = y.get<int>();
            else if (f == "decay_factor") a.decay_factor = y.get<double>();
            else if (f == "decay_every") a.decay_every = y.get<int>();
            else return false;
            return true;
          });
        } else return false;
        return true;
      });
    } else if (key == "evaluation") {
      auto& e = cfg.evaluation;
      read_section(v, "evaluation", [&](const std::string& k, const json& x) {
        if (k == "methods") {
          e.methods.clear();
          for (const auto& m : x) e.methods.push_back(eval::method_from_string(m.get<std::string>()));
        } else if (k == "dist_mode") e.dist_mode = eval::dist_mode_from_string(x.get<std::string>());
        else if (k == "histogram_bin_width") e.histogram_bin_width = x.get<double>();
        else return false;
        return true;
      });
    } else return false;
    return true;
  });
  cfg.validate();
  return cfg;
}

RunConfig load_config(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(fmt::format("cannot open config {}", path.string()));
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
  try {
    return config_from_json(j);
  } catch (const ConfigError& e) {
    throw ConfigError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

json to_json(const RunConfig& cfg) {
  const auto& g = cfg.generator;
  const auto& s = cfg.solver;
  const auto& a = cfg.training.ann;
  json methods = json::array();
  for (auto m : cfg.evaluation.methods) methods.push_back(eval::to_string(m));
  json rs = rs::to_json(cfg.rs_search);
  return {{"seed", cfg.seed},
          {"output_dir", cfg.output_dir},
          {"jobs", cfg.jobs},
          {"generator",
           {{"n", g.n}, {"m", g.m}, {"count", g.count}, {"cf_lo", g.cf_lo}, {"cf_hi", g.cf_hi}, {"cv_lo", g.cv_lo},
            {"cv_hi", g.cv_hi}, {"ctf_lo", g.ctf_lo}, {"ctf_hi", g.ctf_hi}, {"ctv_lo", g.ctv_lo},
            {"ctv_hi", g.ctv_hi}, {"transport_seed", g.transport_seed}, {"shortfall_penalty", g.shortfall_penalty}}},
          {"solver",
           {{"gap_limit", s.gap_limit}, {"time_limit", s.time_limit}, {"threads", s.threads},
            {"backend", backend_name(s.backend)}, {"external_command", s.external_command},
            {"node_limit", s.node_limit}, {"seed", s.seed}}},
          {"rs_search", rs},
          {"features", json::object()},
          {"training",
           {{"split", {{"train", cfg.training.split.train}, {"val", cfg.training.split.val}, {"test", cfg.training.split.test}}},
            {"lr", {{"ridge", cfg.training.lr.ridge}}},
            {"ann",
             {{"hidden", a.hidden}, {"learning_rate", a.learning_rate}, {"momentum", a.momentum},
              {"batch_size", a.batch_size}, {"max_epochs", a.max_epochs}, {"patience", a.patience},
              {"decay_factor", a.decay_factor}, {"decay_every", a.decay_every}}}}},
          {"evaluation",
           {{"methods", methods}, {"dist_mode", eval::to_string(cfg.evaluation.dist_mode)},
            {"histogram_bin_width", cfg.evaluation.histogram_bin_width}}}};
}

std::string config_hash(const RunConfig& cfg) {
  // Output location and worker count do not change any artifact.
  json j = to_json(cfg);
  j.erase("output_dir");
  j.erase("jobs");
  return fmt::format("{:016x}", fnv1a(j.dump()));
}

std::uint64_t stage_seed(const RunConfig& cfg, std::string_view stage) { return derive_seed(cfg.seed, stage); }

std::string instance_id(std::size_t index) { return fmt::format("inst_{:05d}", index); }

std::vector<InstanceEntry> read_instance_index(const fs::path& dir) {
  require(instances_csv(dir));
  const csv::Table t = csv::read(instances_csv(dir));
  const auto c_id = t.column("instance_id"), c_path = t.column("path"), c_seed = t.column("seed"),
             c_status = t.column("status");
  std::vector<InstanceEntry> out;
  for (const auto& r : t.rows) {
    if (r[c_status] != "ok") continue;
    try {
      out.push_back({r[c_id], r[c_path], std::stoull(r[c_seed])});
    } catch (const std::exception&) {
      throw ArtifactError(fmt::format("{}: bad seed '{}'", instances_csv(dir).string(), r[c_seed]));
    }
  }
  return out;
}

cflp::CflpInstance load_instance(const fs::path& dir, const std::string& id) {
  const fs::path path = instance_file(dir, id);
  require(path);
  try {
    return cflp::cflp_from_json(read_json(path));
  } catch (const ModelError& e) {
    throw ArtifactError(fmt::format("{}: {}", path.string(), e.what()));
  }
}

learn::Dataset load_dataset(const fs::path& dir, int* n_out) {
  const fs::path path = dataset_csv(dir);
  require(path);
  const csv::Table t = csv::read(path);
  std::size_t label_cols = 0;
  for (const auto& h : t.header)
    if (h.rfind("xi_star_", 0) == 0) ++label_cols;
  const std::size_t feat_cols = t.header.size() - 1 - label_cols;
  if (label_cols == 0 || feat_cols != 19 * label_cols)
    throw ArtifactError(fmt::format("{}: expected 19n feature and n label columns", path.string()));
  learn::Dataset ds;
  const auto rows = static_cast<Eigen::Index>(t.rows.size());
  ds.X.resize(rows, static_cast<Eigen::Index>(feat_cols));
  ds.Y.resize(rows, static_cast<Eigen::Index>(label_cols));
  for (Eigen::Index r = 0; r < rows; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    ds.ids.push_back(row[0]);
    for (std::size_t c = 0; c < feat_cols; ++c) ds.X(r, static_cast<Eigen::Index>(c)) = csv::parse_double(row[1 + c], path.string());
    for (std::size_t c = 0; c < label_cols; ++c)
      ds.Y(r, static_cast<Eigen::Index>(c)) = csv::parse_double(row[1 + feat_cols + c], path.string());
  }
  ds.split.assign(t.rows.size(), learn::Split::kTrain);
  if (n_out != nullptr) *n_out = static_cast<int>(label_cols);
  return ds;
}

void cmd_generate(const RunConfig& cfg, const fs::path& out) {
  cfg.validate();
  Stopwatch clock;
  const auto& g = cfg.generator;
  const auto transport = cflp::generate_transport_costs(g);
  const std::uint64_t seed = stage_seed(cfg, "generate");
  const auto count = static_cast<std::size_t>(g.count);
  std::vector<fs::path> files(count);
  std::vector<std::uint64_t> seeds(count);
  parallel_for(count, cfg.jobs, [&](std::size_t k) {
    seeds[k] = derive_seed(seed, static_cast<std::uint64_t>(k));
    const auto inst = cflp::generate_instance(g, transport, seeds[k]);
    files[k] = instance_file(out, instance_id(k));
    write_text(files[k], cflp::to_json(inst).dump() + "\n");
  });
  csv::Table index;
  index.header = {"instance_id", "path", "seed", "status"};
  for (std::size_t k = 0; k < count; ++k)
    index.rows.push_back({instance_id(k), rel(files[k], out), std::to_string(seeds[k]), "ok"});
  csv::write(instances_csv(out), index);
  std::vector<fs::path> outputs{instances_csv(out)};
  outputs.insert(outputs.end(), files.begin(), files.end());
  record_stage(cfg, out, "generate", seed, {}, outputs, clock.seconds(), {{"instances", count}});
}

void cmd_label(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  cfg.validate();
  Stopwatch clock;
  const auto entries = read_instance_index(in);
  const int n = cfg.generator.n;
  struct Row {
    bool excluded = false;
    std::string reason;
    rs::RsLabel label;
  };
  std::vector<Row> rows(entries.size());
  const OvfOptions ovf = recourse_options();
  parallel_for(entries.size(), cfg.jobs, [&](std::size_t k) {
    const auto& e = entries[k];
    const auto inst = load_instance(in, e.id);
    if (inst.n != n) throw ArtifactError(fmt::format("{}: n = {} but config has n = {}", e.id, inst.n, n));
    const auto lowered = cflp::to_two_stage(inst);
    eval::ExactRun run;
    try {
      run = eval::run_exact(lowered, e.id, cfg.solver, ovf);
    } catch (const eval::InstanceExcluded& ex) {
      rows[k].excluded = true;
      rows[k].reason = ex.what();
      return;
    }
    json traj = json::array();
    for (const auto& p : run.solution.incumbent_trajectory) traj.push_back({p.seconds, p.objective});
    write_json(exact_file(out, e.id), {{"instance_id", e.id},
                                       {"status", to_string(run.solution.status)},
                                       {"objective", run.result.objective},
                                       {"ef_objective", run.solution.best_objective},
                                       {"best_bound", run.solution.best_bound},
                                       {"gap", run.solution.gap},
                                       {"seconds", run.result.seconds},
                                       {"nodes", run.solution.nodes},
                                       {"x", run.result.x},
                                       {"trajectory", traj}});
    rs::ExactReference ref{run.result.x, run.result.objective};
    rows[k].label = rs::generate_xi_hat(inst, lowered, ref, cfg.rs_search, ovf);
  });

  csv::Table labels;
  labels.header = {"instance_id", "found", "iterations"};
  for (int j = 0; j < n; ++j) labels.header.push_back(fmt::format("xi_star_{}", j));
  labels.header.push_back("achieved_ovf");
  labels.header.push_back("reference_ovf");
  csv::Table excluded;
  excluded.header = {"instance_id", "reason"};
  std::vector<fs::path> outputs{labels_csv(out), excluded_csv(out)};
  std::size_t found = 0;
  for (std::size_t k = 0; k < entries.size(); ++k) {
    const auto& r = rows[k];
    if (r.excluded) {
      std::string reason = r.reason;
      std::replace(reason.begin(), reason.end(), ',', ';');
      excluded.rows.push_back({entries[k].id, reason});
      continue;
    }
    outputs.push_back(exact_file(out, entries[k].id));
    std::vector<std::string> cells = {entries[k].id, r.label.found ? "1" : "0",
                                      std::to_string(r.label.iterations_used)};
    for (int j = 0; j < n; ++j) cells.push_back(csv::format_double(r.label.xi_star.at(static_cast<std::size_t>(j))));
    cells.push_back(csv::format_double(r.label.achieved_ovf));
    cells.push_back(csv::format_double(r.label.reference_ovf));
    labels.rows.push_back(std::move(cells));
    found += r.label.found;
  }
  csv::write(labels_csv(out), labels);
  csv::write(excluded_csv(out), excluded);
  record_stage(cfg, out, "label", stage_seed(cfg, "label"), {instances_csv(in)}, outputs, clock.seconds(),
               {{"instances", entries.size()}, {"excluded", excluded.rows.size()}, {"found", found}});
}

void cmd_featurize(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  cfg.validate();
  Stopwatch clock;
  require(labels_csv(in));
  const csv::Table labels = csv::read(labels_csv(in));
  const auto c_id = labels.column("instance_id"), c_found = labels.column("found");
  std::vector<std::size_t> label_cols;
  for (std::size_t c = 0; c < labels.header.size(); ++c)
    if (labels.header[c].rfind("xi_star_", 0) == 0) label_cols.push_back(c);
  const int n = static_cast<int>(label_cols.size());
  if (n < 1) throw ArtifactError(labels_csv(in).string() + ": no label columns");

  std::vector<const std::vector<std::string>*> keep;
  for (const auto& r : labels.rows)
    if (r[c_found] == "1") keep.push_back(&r);
  std::vector<std::vector<std::string>> rows(keep.size());
  parallel_for(keep.size(), cfg.jobs, [&](std::size_t k) {
    const auto& r = *keep[k];
    const auto inst = load_instance(in, r[c_id]);
    if (inst.n != n) throw ArtifactError(fmt::format("{}: instance size disagrees with labels", r[c_id]));
    const auto fv = features::extract_features(inst);
    auto& cells = rows[k];
    cells.push_back(r[c_id]);
    for (double v : fv.values) cells.push_back(csv::format_double(v));
    for (auto c : label_cols) cells.push_back(r[c]);
  });
  csv::Table ds;
  ds.header = {"instance_id"};
  for (auto& name : features::feature_names(n)) ds.header.push_back(std::move(name));
  for (int j = 0; j < n; ++j) ds.header.push_back(fmt::format("xi_star_{}", j));
  ds.rows = std::move(rows);
  csv::write(dataset_csv(out), ds);
  record_stage(cfg, out, "featurize", stage_seed(cfg, "featurize"), {labels_csv(in)}, {dataset_csv(out)},
               clock.seconds(), {{"examples", ds.rows.size()}, {"features", features::feature_length(n)}});
}

void cmd_train(const RunConfig& cfg, learn::ModelKind kind, const fs::path& in, const fs::path& out) {
  cfg.validate();
  Stopwatch clock;
  learn::Dataset ds = load_dataset(in);
  const std::uint64_t split_seed = stage_seed(cfg, "split");
  ds.split = learn::assign_splits(ds.ids.size(), cfg.training.split, split_seed);
  csv::Table splits;
  splits.header = {"instance_id", "split"};
  for (std::size_t k = 0; k < ds.ids.size(); ++k) splits.rows.push_back({ds.ids[k], learn::to_string(ds.split[k])});
  csv::write(splits_csv(out), splits);

  learn::TrainLog log;
  learn::Model model;
  std::uint64_t seed = split_seed;
  if (kind == learn::ModelKind::kLinear) {
    model = learn::train_lr(ds, cfg.training.lr, &log);
  } else {
    learn::AnnOptions opt = cfg.training.ann;
    opt.seed = seed = stage_seed(cfg, "train.ann");
    model = learn::train_ann(ds, opt, &log);
  }
  const auto test = ds.rows(learn::Split::kTest);
  if (!test.empty()) {
    Eigen::MatrixXd Xt(static_cast<Eigen::Index>(test.size()), ds.X.cols()), Yt(static_cast<Eigen::Index>(test.size()), ds.Y.cols());
    for (std::size_t k = 0; k < test.size(); ++k) {
      Xt.row(static_cast<Eigen::Index>(k)) = ds.X.row(test[k]);
      Yt.row(static_cast<Eigen::Index>(k)) = ds.Y.row(test[k]);
    }
    model.meta["test_mse"] = learn::mse(model, Xt, Yt);
    const Eigen::RowVectorXd mean = Yt.colwise().mean();
    model.meta["test_label_variance"] = (Yt.rowwise() - mean).squaredNorm() / static_cast<double>(Yt.size());
  }
  write_json(model_file(out, kind), learn::to_json(model));
  csv::Table t;
  t.header = {"epoch", "train_mse", "val_mse"};
  for (const auto& e : log)
    t.rows.push_back({std::to_string(e.epoch), csv::format_double(e.train_mse), csv::format_double(e.val_mse)});
  csv::write(train_log_csv(out, kind), t);
  const std::string stage = kind == learn::ModelKind::kLinear ? "train.lr" : "train.ann";
  record_stage(cfg, out, stage, seed, {dataset_csv(in)}, {splits_csv(out), model_file(out, kind), train_log_csv(out, kind)},
               clock.seconds(),
               {{"train", ds.rows(learn::Split::kTrain).size()},
                {"val", ds.rows(learn::Split::kVal).size()},
                {"test", test.size()}});
}

void cmd_evaluate(const RunConfig& cfg, const fs::path& models, const fs::path& in, const fs::path& out) {
  cfg.validate();
  Stopwatch clock;
  const auto splits = read_splits(splits_csv(in));
  const auto& methods = cfg.evaluation.methods;
  auto wants = [&](eval::Method m) { return std::find(methods.begin(), methods.end(), m) != methods.end(); };

  auto load_model = [&](learn::ModelKind k) {
    const fs::path p = model_file(models, k);
    require(p);
    return learn::model_from_json(read_json(p));
  };
  std::optional<learn::Model> lr, ann;
  if (wants(eval::Method::kLr) || wants(eval::Method::kDist)) lr = load_model(learn::ModelKind::kLinear);
  if (wants(eval::Method::kAnn)) ann = load_model(learn::ModelKind::kNeural);

  std::vector<std::vector<double>> pool;
  if (wants(eval::Method::kDist) && cfg.evaluation.dist_mode == eval::DistMode::kEmpirical) {
    learn::Dataset ds = load_dataset(in);
    std::vector<int> train_rows;
    for (std::size_t k = 0; k < ds.ids.size(); ++k) {
      const auto it = splits.find(ds.ids[k]);
      if (it != splits.end() && it->second == learn::Split::kTrain) train_rows.push_back(static_cast<int>(k));
    }
    for (int r : train_rows) {
      const Eigen::RowVectorXd x = ds.X.row(r);
      pool.push_back(learn::predict(*lr, std::span<const double>(x.data(), static_cast<std::size_t>(x.size()))).values);
    }
  }
  eval::BaselineContext ctx;
  ctx.lr = lr ? &*lr : nullptr;
  ctx.dist_mode = cfg.evaluation.dist_mode;
  ctx.pool = &pool;

  std::vector<std::string> ids;
  for (const auto& [id, s] : splits)
    if (s == learn::Split::kTest) ids.push_back(id);
  if (ids.empty()) throw ArtifactError("the test split is empty");

  const std::uint64_t seed = stage_seed(cfg, "evaluate");
  const OvfOptions ovf = recourse_options();
  std::vector<std::vector<eval::MethodResult>> per(ids.size());
  std::vector<eval::ExactTrace> traces(ids.size());
  parallel_for(ids.size(), cfg.jobs, [&](std::size_t k) {
    const std::string& id = ids[k];
    const auto inst = load_instance(in, id);
    const auto lowered = cflp::to_two_stage(inst);
    const json ex = read_json(exact_file(in, id));
    try {
      traces[k].seconds = ex.at("seconds").get<double>();
      for (const auto& p : ex.at("trajectory")) traces[k].trajectory.push_back({p.at(0).get<double>(), p.at(1).get<double>()});
      for (eval::Method m : methods) {
        eval::MethodResult r;
        const std::uint64_t s = derive_seed(seed, fnv1a(std::string(eval::to_string(m)) + "/" + id));
        switch (m) {
          case eval::Method::kGrb:
            r.method = m;
            r.instance_id = id;
            r.objective = ex.at("objective").get<double>();
            r.seconds = traces[k].seconds;
            r.x = ex.at("x").get<std::vector<double>>();
            break;
          case eval::Method::kAvg:
          case eval::Method::kRnd:
          case eval::Method::kDist: r = eval::run_baseline(m, inst, lowered, id, s, ctx, ovf); break;
          case eval::Method::kLr: r = eval::run_model(m, inst, lowered, id, *lr, ovf); break;
          case eval::Method::kAnn: r = eval::run_model(m, inst, lowered, id, *ann, ovf); break;
        }
        per[k].push_back(std::move(r));
      }
    } catch (const json::exception& e) {
      throw ArtifactError(fmt::format("{}: {}", exact_file(in, id).string(), e.what()));
    }
  });
  std::vector<eval::MethodResult> results;
  for (auto& v : per)
    for (auto& r : v) results.push_back(std::move(r));
  eval::write_results(results_csv(out), results);

  csv::Table t;
  t.header = {"instance_id", "seconds", "times", "objectives"};
  for (std::size_t k = 0; k < ids.size(); ++k) {
    std::vector<double> times, objs;
    for (const auto& p : traces[k].trajectory) times.push_back(p.seconds), objs.push_back(p.objective);
    t.rows.push_back({ids[k], csv::format_double(traces[k].seconds), csv::join(times), csv::join(objs)});
  }
  csv::write(traces_csv(out), t);
  record_stage(cfg, out, "evaluate", seed, {splits_csv(in), models.generic_string()}, {results_csv(out), traces_csv(out)},
               clock.seconds(), {{"instances", ids.size()}, {"results", results.size()}});
}

void cmd_report(const RunConfig& cfg, const fs::path& in, const fs::path& out) {
  cfg.validate();
  Stopwatch clock;
  require(results_csv(in));
  require(traces_csv(in));
  const auto results = eval::read_results(results_csv(in));
  std::map<std::string, eval::ExactTrace> traces;
  const csv::Table t = csv::read(traces_csv(in));
  const auto c_id = t.column("instance_id"), c_s = t.column("seconds"), c_t = t.column("times"),
             c_o = t.column("objectives");
  for (const auto& r : t.rows) {
    eval::ExactTrace tr;
    tr.seconds = csv::parse_double(r[c_s], traces_csv(in).string());
    const auto times = csv::split_doubles(r[c_t]);
    const auto objs = csv::split_doubles(r[c_o]);
    if (times.size() != objs.size()) throw ArtifactError(traces_csv(in).string() + ": trajectory length mismatch");
    for (std::size_t k = 0; k < times.size(); ++k) tr.trajectory.push_back({times[k], objs[k]});
    traces[r[c_id]] = std::move(tr);
  }
  const auto report = eval::build_report(results, traces, cfg.evaluation.histogram_bin_width);
  const fs::path dir = report_dir(out);
  eval::write_report(report, dir);
  record_stage(cfg, out, "report", stage_seed(cfg, "report"), {results_csv(in), traces_csv(in)},
               {dir / "table1_diff_ratio.csv", dir / "table2_times.csv", dir / "fig1_scatter.csv",
                dir / "fig2_histograms.csv"},
               clock.seconds(), {{"instances", report.instances}});
}

void run_all(const RunConfig& cfg, const fs::path& dir) {
  cmd_generate(cfg, dir);
  cmd_label(cfg, dir, dir);
  cmd_featurize(cfg, dir, dir);
  cmd_train(cfg, learn::ModelKind::kLinear, dir, dir);
  cmd_train(cfg, learn::ModelKind::kNeural, dir, dir);
  cmd_evaluate(cfg, dir, dir, dir);
  cmd_report(cfg, dir, dir);
}

}  // namespace repscen::pipeline
