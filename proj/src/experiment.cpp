#include "wagmf/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <mutex>
#include <set>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace wagmf {

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

VectorXd to_vector(const std::vector<double>& v) {
  return Eigen::Map<const VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

}  // namespace

RunResult run_optimizer(const Preset<double>& preset, const LossOracle& oracle, const FeasibleSet<double>& set,
                        const VectorXd& x1, const RunOptions& options) {
  require_same_dim(x1.size(), oracle.dim(), "initial point");
  if (options.rounds < 1) throw Error(ErrorKind::InvalidConfig, "T must be >= 1");
  const bool weighted = preset.config.engine == Engine::WagmfSum || preset.config.engine == Engine::WagmfStable;

  RunResult result;
  result.trace = RunTrace({preset.label, oracle.id(), options.seed, oracle.dim()});
  if (options.record) result.trace.reserve(static_cast<std::size_t>(options.rounds));

  auto state = preset.initial_state(project(set, DiagonalMetric<double>::identity(x1.size()), x1));
  for (std::int64_t t = 1; t <= options.rounds; ++t) {
    const VectorXd x_t = state.x;
    const Evaluation eval = oracle.evaluate(t, x_t, options.seed);
    const double prev_sum = state.weight_sum;
    const double prev_alpha = state.alpha_t;
    const VectorXd prev_precond = state.precond;

    state = step(preset, std::move(state), eval.grad, set);

    if (t >= 2) {
      if (weighted && !check_nonincrease(1.0 / prev_sum, 1.0 / state.weight_sum, prev_alpha, state.alpha_t,
                                         preset.config.p2)) {
        ++result.schedule_violations;
      }
      if (!preconditioner_nondecreasing(prev_precond, prev_alpha, state.precond, state.alpha_t)) {
        ++result.preconditioner_drops;
      }
    }
    if (options.record) {
      const double loss = options.monitor ? options.monitor(x_t) : eval.loss;
      result.trace.append(x_t, eval.grad, loss, state.alpha_t, state.precond);
    }
  }
  result.final_x = state.x;
  return result;
}

bool is_online_problem(const std::string& kind) { return kind == "reddi_stochastic" || kind == "reddi_online"; }

void ExperimentConfig::validate() const {
  auto fail = [](const std::string& msg) { throw Error(ErrorKind::InvalidConfig, msg); };
  static const std::set<std::string> kinds{"reddi_stochastic", "reddi_online", "quadratic", "softmax"};
  if (!kinds.count(problem.kind)) fail("unknown problem kind '" + problem.kind + "'");
  if (rounds < 1) fail("T must be >= 1");
  if (optimizers.empty()) fail("at least one optimizer is required");
  if (seeds.empty()) fail("at least one seed is required");
  for (const auto& o : optimizers) {
    if (o.alphas.empty()) fail("optimizer '" + o.name + "' has an empty alpha grid");
    for (double a : o.alphas) {
      if (!(a > 0.0) || !std::isfinite(a)) fail("alpha grid values must be > 0");
    }
    make_preset<double>(o.name, o.alphas.front(), o.overrides);
  }
  if (box && (box->first.size() != box->second.size() || box->first.empty())) fail("box bounds must match in size");
  if (!(lambda > 0.0 && lambda <= 1.0)) fail("lambda must lie in (0, 1]");
  if (problem.kind == "quadratic" && (problem.a_diag.empty() || problem.a_diag.size() != problem.x_star.size())) {
    fail("quadratic needs a_diag and x_star of equal length");
  }
  if (problem.kind == "softmax") {
    if (!problem.reg) fail("softmax needs an explicit 'reg' value");
    if (*problem.reg < 0.0) fail("reg must be >= 0");
    if (problem.batch_size < 1) fail("batch_size must be >= 1");
    if (problem.dataset_format != "csv" && problem.dataset_format != "idx") fail("dataset format must be csv or idx");
  }
  if (bound_eval && !box) fail("bound evaluation needs a bounded feasible set");
  if (significance && seeds.size() < 2) {
    throw Error(ErrorKind::InsufficientSeeds, "significance testing needs at least two seeds");
  }
}

namespace {

template <typename T>
T get_or(const nlohmann::json& j, const char* key, T fallback) {
  return j.contains(key) ? j.at(key).get<T>() : fallback;
}

std::vector<double> number_list(const nlohmann::json& j) {
  if (j.is_number()) return {j.get<double>()};
  return j.get<std::vector<double>>();
}

}  // namespace

ExperimentConfig parse_config(const std::string& json_text) {
  ExperimentConfig c;
  try {
    const auto j = nlohmann::json::parse(json_text, nullptr, true, true);
    if (j.contains("problem")) {
      const auto& p = j.at("problem");
      if (p.is_string()) {
        c.problem.kind = p.get<std::string>();
      } else {
        c.problem.kind = get_or<std::string>(p, "kind", c.problem.kind);
        c.problem.a_diag = get_or<std::vector<double>>(p, "a_diag", {});
        c.problem.x_star = get_or<std::vector<double>>(p, "x_star", {});
        if (p.contains("reg")) c.problem.reg = p.at("reg").get<double>();
        c.problem.batch_size = get_or<Eigen::Index>(p, "batch_size", c.problem.batch_size);
        if (p.contains("dataset")) {
          const auto& d = p.at("dataset");
          c.problem.dataset_path = get_or<std::string>(d, "path", "");
          c.problem.labels_path = get_or<std::string>(d, "labels", "");
          c.problem.dataset_format = get_or<std::string>(d, "format", "csv");
        }
        if (p.contains("synthetic")) {
          const auto& s = p.at("synthetic");
          c.problem.synthetic_n = get_or<Eigen::Index>(s, "n", c.problem.synthetic_n);
          c.problem.synthetic_d = get_or<Eigen::Index>(s, "d", c.problem.synthetic_d);
          c.problem.synthetic_classes = get_or<int>(s, "classes", c.problem.synthetic_classes);
          c.problem.synthetic_separation = get_or<double>(s, "separation", c.problem.synthetic_separation);
          c.problem.synthetic_seed = get_or<std::uint64_t>(s, "seed", c.problem.synthetic_seed);
        }
      }
    }
    if (j.contains("optimizers")) {
      for (const auto& o : j.at("optimizers")) {
        OptimizerSpec spec;
        if (o.is_string()) {
          spec.name = o.get<std::string>();
        } else {
          spec.name = o.at("name").get<std::string>();
          if (o.contains("alpha")) spec.alphas = number_list(o.at("alpha"));
          if (o.contains("overrides")) {
            for (const auto& [key, value] : o.at("overrides").items()) {
              spec.overrides[key] = value.is_string() ? value.get<std::string>() : value.dump();
            }
          }
        }
        c.optimizers.push_back(std::move(spec));
      }
    }
    c.rounds = get_or<std::int64_t>(j, "T", c.rounds);
    if (j.contains("seeds")) c.seeds = j.at("seeds").get<std::vector<std::uint64_t>>();
    if (j.contains("feasible")) {
      const auto& f = j.at("feasible");
      if (!(f.is_string() && f.get<std::string>() == "unconstrained")) {
        c.box = std::make_pair(number_list(f.at("lo")), number_list(f.at("hi")));
      }
    }
    c.x0 = get_or<std::vector<double>>(j, "x0", {});
    c.bound_eval = get_or<bool>(j, "bound_eval", false);
    c.lambda = get_or<double>(j, "lambda", 1.0);
    c.significance = get_or<bool>(j, "significance", false);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorKind::InvalidConfig, e.what());
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str());
}

Problem build_problem(const ExperimentConfig& config) {
  Problem p;
  const auto& spec = config.problem;
  if (spec.kind == "reddi_stochastic") {
    p.oracle = std::make_shared<ReddiStochastic>();
  } else if (spec.kind == "reddi_online") {
    p.oracle = std::make_shared<ReddiOnline>();
  } else if (spec.kind == "quadratic") {
    p.oracle = std::make_shared<Quadratic>(to_vector(spec.a_diag), to_vector(spec.x_star));
  } else if (spec.kind == "softmax") {
    Dataset data;
    if (spec.dataset_path.empty()) {
      data = make_blobs(spec.synthetic_n, spec.synthetic_d, spec.synthetic_classes, spec.synthetic_separation,
                        spec.synthetic_seed);
    } else {
      data = load_dataset(spec.dataset_path, spec.dataset_format == "idx" ? DatasetFormat::Idx : DatasetFormat::Csv,
                          spec.labels_path);
    }
    p.data = std::make_shared<const Dataset>(std::move(data));
    p.reg = spec.reg.value_or(0.0);
    p.oracle = std::make_shared<MinibatchOracle>(p.data, p.reg, std::min(spec.batch_size, p.data->n()));
  } else {
    throw Error(ErrorKind::InvalidConfig, "unknown problem kind '" + spec.kind + "'");
  }

  const Eigen::Index d = p.oracle->dim();
  if (config.box) {
    VectorXd lo = to_vector(config.box->first);
    VectorXd hi = to_vector(config.box->second);
    if (lo.size() == 1 && d > 1) {
      lo = VectorXd::Constant(d, lo[0]);
      hi = VectorXd::Constant(d, hi[0]);
    }
    require_same_dim(lo.size(), d, "box bounds");
    p.set = FeasibleSet<double>::box(std::move(lo), std::move(hi));
  }
  p.x1 = config.x0.empty() ? VectorXd::Zero(d) : to_vector(config.x0);
  require_same_dim(p.x1.size(), d, "x0");
  p.x1 = project(p.set, DiagonalMetric<double>::identity(d), p.x1);
  return p;
}

std::optional<VectorXd> comparator(const ExperimentConfig& config, const Problem& problem, const RunTrace& trace) {
  if (is_online_problem(config.problem.kind)) {
    const double lo = problem.set.is_box() ? problem.set.bounds().lo[0] : -1.0;
    const double hi = problem.set.is_box() ? problem.set.bounds().hi[0] : 1.0;
    return VectorXd::Constant(1, linear_comparator(trace, lo, hi));
  }
  if (auto opt = problem.oracle->known_optimum()) {
    return project(problem.set, DiagonalMetric<double>::identity(opt->size()), *opt);
  }
  return std::nullopt;
}

double summary_metric(const RunSummary& s) { return s.final_avg_regret.value_or(s.final_loss); }

std::vector<GridResult> select_best(const std::vector<RunSummary>& runs) {
  std::vector<std::string> order;
  std::map<std::string, std::map<double, std::pair<double, int>>> acc;
  for (const auto& r : runs) {
    if (!acc.count(r.optimizer)) order.push_back(r.optimizer);
    auto& slot = acc[r.optimizer][r.alpha];
    slot.first += summary_metric(r);
    slot.second += 1;
  }
  std::vector<GridResult> out;
  for (const auto& name : order) {
    GridResult g;
    g.optimizer = name;
    bool first = true;
    // std::map iterates alphas in ascending order, so strict < keeps the smaller alpha on ties.
    for (const auto& [alpha, sum_count] : acc[name]) {
      const double score = sum_count.first / sum_count.second;
      g.candidates.push_back({alpha, score});
      if (first || score < g.best_score) {
        g.best_alpha = alpha;
        g.best_score = score;
        first = false;
      }
    }
    out.push_back(std::move(g));
  }
  return out;
}

std::vector<SignificanceRow> significance(const std::vector<RunSummary>& runs, const std::vector<GridResult>& best) {
  std::vector<std::vector<double>> samples;
  for (const auto& g : best) {
    std::vector<double> s;
    for (const auto& r : runs) {
      if (r.optimizer == g.optimizer && r.alpha == g.best_alpha) s.push_back(summary_metric(r));
    }
    if (s.size() < 2) {
      throw Error(ErrorKind::InsufficientSeeds, "optimizer '" + g.optimizer + "' has fewer than two seeds");
    }
    samples.push_back(std::move(s));
  }
  std::vector<SignificanceRow> out;
  for (std::size_t i = 0; i < best.size(); ++i) {
    for (std::size_t j = i + 1; j < best.size(); ++j) {
      SignificanceRow row{best[i].optimizer, best[j].optimizer, students_t_test(samples[i], samples[j]), false};
      row.significant = row.test.p < kSignificanceThreshold;
      out.push_back(row);
    }
  }
  return out;
}

std::int64_t log_stride(std::int64_t rounds) {
  return rounds > kMaxLoggedRows ? (rounds + kMaxLoggedRows - 1) / kMaxLoggedRows : 1;
}

namespace {

bool logged(std::int64_t t, std::int64_t rounds, std::int64_t stride) { return t % stride == 0 || t == rounds || t == 1; }

}  // namespace

void write_trace_csv(const std::filesystem::path& path, const RunTrace& trace,
                     const std::vector<RegretPoint>* regret_series) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
  out << "t,loss,avg_regret,x_norm,g_norm,alpha_t\n";
  const auto rounds = static_cast<std::int64_t>(trace.size());
  const std::int64_t stride = log_stride(rounds);
  for (std::int64_t t = 1; t <= rounds; ++t) {
    if (!logged(t, rounds, stride)) continue;
    out << t << ',' << fmt(trace.loss(t)) << ',';
    if (regret_series) out << fmt((*regret_series)[static_cast<std::size_t>(t - 1)].average);
    out << ',' << fmt(trace.x(t).norm()) << ',' << fmt(trace.g(t).norm()) << ',' << fmt(trace.alpha(t)) << '\n';
  }
}

void write_trace_jsonl(const std::filesystem::path& path, const RunTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::InvalidConfig, "cannot write " + path.string());
  const auto rounds = static_cast<std::int64_t>(trace.size());
  const std::int64_t stride = log_stride(rounds);
  auto list = [](const auto& v) {
    std::string s = "[";
    for (Eigen::Index i = 0; i < v.size(); ++i) s += (i ? "," : "") + fmt(v[i]);
    return s + "]";
  };
  for (std::int64_t t = 1; t <= rounds; ++t) {
    if (!logged(t, rounds, stride)) continue;
    out << "{\"t\":" << t << ",\"x\":" << list(trace.x(t)) << ",\"g\":" << list(trace.g(t))
        << ",\"V\":" << list(trace.precond(t)) << "}\n";
  }
}

RunSummary summarize_trace_file(const std::filesystem::path& path, const std::string& optimizer, double alpha,
                                std::uint64_t seed) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::ParseError, "cannot open trace " + path.string());
  std::string line, last;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (!line.empty()) last = line;
  }
  if (last.empty()) throw Error(ErrorKind::ParseError, path.string() + ": trace has no rows");
  std::vector<std::string> cols;
  std::stringstream ss(last);
  for (std::string field; std::getline(ss, field, ',');) cols.push_back(field);
  while (cols.size() < 6) cols.emplace_back();
  RunSummary s;
  s.optimizer = optimizer;
  s.alpha = alpha;
  s.seed = seed;
  s.final_loss = std::stod(cols[1]);
  if (!cols[2].empty()) s.final_avg_regret = std::stod(cols[2]);
  s.trace_path = path;
  return s;
}

namespace {

struct Job {
  const OptimizerSpec* spec;
  double alpha;
  std::uint64_t seed;
};

std::size_t worker_count(std::size_t jobs) {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("WAGMF_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return std::max<std::size_t>(1, std::min(n, jobs));
}

std::string trace_stem(const std::string& label, double alpha, std::uint64_t seed) {
  return label + "__alpha=" + short_fmt(alpha) + "__seed=" + std::to_string(seed);
}

RunSummary execute(const ExperimentConfig& config, const Problem& problem, const Job& job,
                   const std::optional<std::filesystem::path>& trace_dir) {
  Overrides overrides = job.spec->overrides;
  if (config.lambda != 1.0 && !overrides.count("lambda")) overrides["lambda"] = fmt(config.lambda);
  const auto preset = make_preset<double>(job.spec->name, job.alpha, overrides);

  RunOptions options{config.rounds, job.seed, true, {}};
  if (problem.data) {
    options.monitor = [&](const VectorXd& x) { return softmax_objective(x, *problem.data, problem.reg).loss; };
  }
  RunResult result = run_optimizer(preset, *problem.oracle, problem.set, problem.x1, options);

  RunSummary s;
  s.optimizer = job.spec->name;
  s.alpha = job.alpha;
  s.seed = job.seed;
  s.final_x = result.final_x;
  s.final_loss = result.trace.loss(static_cast<std::int64_t>(result.trace.size()));

  std::vector<RegretPoint> series;
  const auto x_star = comparator(config, problem, result.trace);
  if (x_star) {
    series = regret(result.trace, *problem.oracle, *x_star);
    s.final_regret = series.back().regret;
    if (is_online_problem(config.problem.kind)) s.final_avg_regret = series.back().average;
  }

  if (config.bound_eval) {
    s.bound = thm1_bound(result.trace, diameter_inf(problem.set), preset.config.momentum.beta1,
                         preset.config.momentum.lambda);
    if (preset.config.momentum.lambda < 1.0) {
      const auto grads = result.trace.gradients();
      s.corollary1 = corollary1_bound(grads, *diameter_inf(problem.set), observed_g_inf(grads), job.alpha,
                                      preset.config.momentum.beta1, preset.config.momentum.lambda,
                                      result.trace.dim());
    }
  }

  if (trace_dir) {
    const auto stem = trace_stem(preset.label, job.alpha, job.seed);
    s.trace_path = *trace_dir / (stem + ".csv");
    const bool online = is_online_problem(config.problem.kind);
    write_trace_csv(s.trace_path, result.trace, online && x_star ? &series : nullptr);
    if (result.trace.dim() <= kMaxSidecarDim) write_trace_jsonl(*trace_dir / (stem + ".jsonl"), result.trace);
  }
  return s;
}

std::vector<RunSummary> execute_all(const ExperimentConfig& config, const std::optional<std::filesystem::path>& dir) {
  config.validate();
  const Problem problem = build_problem(config);
  std::vector<Job> jobs;
  for (const auto& spec : config.optimizers)
    for (double a : spec.alphas)
      for (auto seed : config.seeds) jobs.push_back({&spec, a, seed});

  std::vector<std::optional<RunSummary>> results(jobs.size());
  std::vector<std::exception_ptr> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        results[i] = execute(config, problem, jobs[i], dir);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  const std::size_t workers = worker_count(jobs.size());
  if (workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
  std::vector<RunSummary> out;
  for (auto& r : results) out.push_back(std::move(*r));
  return out;
}

void write_reports(const std::filesystem::path& dir, const ExperimentReport& report, bool bounds) {
  {
    std::ofstream out(dir / "summary.csv");
    out << "optimizer,alpha,seed,final_loss,final_avg_regret,final_x,trace\n";
    for (const auto& r : report.runs) {
      out << r.optimizer << ',' << fmt(r.alpha) << ',' << r.seed << ',' << fmt(r.final_loss) << ','
          << (r.final_avg_regret ? fmt(*r.final_avg_regret) : "") << ',';
      if (r.final_x.size() <= kMaxSidecarDim) {
        for (Eigen::Index i = 0; i < r.final_x.size(); ++i) out << (i ? ";" : "") << fmt(r.final_x[i]);
      }
      out << ',' << r.trace_path.filename().string() << '\n';
    }
  }
  {
    std::ofstream out(dir / "grid.csv");
    out << "optimizer,alpha,score,best\n";
    for (const auto& g : report.grid)
      for (const auto& c : g.candidates)
        out << g.optimizer << ',' << fmt(c.alpha) << ',' << fmt(c.score) << ',' << (c.alpha == g.best_alpha ? 1 : 0)
            << '\n';
  }
  if (bounds) {
    std::ofstream out(dir / "bounds.csv");
    out << "optimizer,alpha,seed,regret,term1,term2,term3,total,corollary1,d_inf,g_inf\n";
    for (const auto& r : report.runs) {
      if (!r.bound) continue;
      const auto& b = *r.bound;
      out << r.optimizer << ',' << fmt(r.alpha) << ',' << r.seed << ',' << (r.final_regret ? fmt(*r.final_regret) : "")
          << ',' << fmt(b.term1) << ',' << fmt(b.term2) << ',' << fmt(b.term3) << ',' << fmt(b.total) << ','
          << (r.corollary1 ? fmt(*r.corollary1) : "") << ',' << fmt(b.inputs.d_inf) << ',' << fmt(b.inputs.g_inf)
          << '\n';
    }
  }
  if (!report.pairs.empty()) {
    std::ofstream out(dir / "significance.csv");
    out << "optimizer_a,optimizer_b,t,p,significant\n";
    for (const auto& p : report.pairs) {
      out << p.a << ',' << p.b << ',' << fmt(p.test.t) << ',' << fmt(p.test.p) << ',' << (p.significant ? 1 : 0)
          << '\n';
    }
  }
}

}  // namespace

std::vector<GridResult> grid_search(const ExperimentConfig& config) {
  return select_best(execute_all(config, std::nullopt));
}

ExperimentReport run_experiment(const ExperimentConfig& config, const std::filesystem::path& out_dir) {
  config.validate();
  const auto trace_dir = out_dir / "traces";
  std::filesystem::create_directories(trace_dir);
  ExperimentReport report;
  report.runs = execute_all(config, trace_dir);
  report.grid = select_best(report.runs);
  if (config.significance) report.pairs = significance(report.runs, report.grid);
  write_reports(out_dir, report, config.bound_eval);
  return report;
}

}  // namespace wagmf
