#include "patchy/runner.hpp"

#include <algorithm>
#include <atomic>
#include <barrier>
#include <chrono>
#include <cmath>
#include <fstream>
#include <string>
#include <thread>

#include <json.hpp>

#include "patchy/error.hpp"

namespace patchy {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::size_t ceil_div(std::size_t a, std::size_t b) { return (a + b - 1) / b; }

// Relaxed element access for concurrent rounds; values may be stale but
// never torn.
struct AtomicView {
  double* data;
  double operator[](std::size_t i) const {
    return std::atomic_ref<double>(data[i]).load(std::memory_order_relaxed);
  }
  void store(std::size_t i, double v) const {
    std::atomic_ref<double>(data[i]).store(v, std::memory_order_relaxed);
  }
  // Returns the value replaced, or v itself when nothing changed.
  double merge_min(std::size_t i, double v) const {
    std::atomic_ref<double> ref(data[i]);
    double cur = ref.load(std::memory_order_relaxed);
    while (v < cur && !ref.compare_exchange_weak(cur, v, std::memory_order_relaxed)) {
    }
    return std::max(cur, v);
  }
};

struct PlainView {
  double* data;
  double operator[](std::size_t i) const { return data[i]; }
  void store(std::size_t i, double v) const { data[i] = v; }
  double merge_min(std::size_t i, double v) const {
    const double old = data[i];
    if (v < old) data[i] = v;
    return std::max(old, v);
  }
};

template <class View>
double sweep_patch(const View& u, const LocalOperator& op, const Decomposition& d, std::size_t p, Kernel kernel,
                   double cap) {
  const bool overlap = !d.shared.empty();
  double change = 0.0;
  for (std::size_t node : d.lists[p]) {
    const double v = std::min(op.evaluate(kernel, node, u).value, cap);
    if (overlap && d.shared[node] && d.owner[node] != static_cast<int>(p)) {
      const double old = u.merge_min(node, v);
      change = std::max(change, old - v);
    } else {
      change = std::max(change, std::abs(v - u[node]));
      u.store(node, v);
    }
  }
  return change;
}

void validate(const Decomposition& d, const Grid& grid, const RunConfig& config) {
  if (config.workers == 0) throw UsageError("worker count must be at least 1");
  if (!(config.tol > 0.0)) throw UsageError("tolerance must be positive");
  if (d.patch_count == 0 || d.lists.size() != d.patch_count) throw UsageError("decomposition has no patches");
  if (d.owner.size() != grid.size()) throw UsageError("decomposition does not match the grid");
  std::vector<unsigned char> seen(grid.size(), 0);
  for (std::size_t p = 0; p < d.lists.size(); ++p) {
    for (std::size_t node : d.lists[p]) {
      if (node >= grid.size() || grid.on_boundary(node)) throw UsageError("patch lists a non-interior node");
      seen[node] = 1;
    }
  }
  for (std::size_t node : grid.interior_nodes()) {
    if (!seen[node]) throw UsageError("interior node " + std::to_string(node) + " belongs to no patch");
    const int o = d.owner[node];
    if (o < 0 || static_cast<std::size_t>(o) >= d.patch_count) throw UsageError("interior node without owner");
  }
}

RunMetrics rounds_sequential(ScalarField& field, const LocalOperator& op, const Decomposition& d,
                             const RunConfig& config, std::size_t cap) {
  RunMetrics m;
  m.residual_history.resize(d.patch_count);
  const PlainView u{field.values().data()};
  for (std::size_t round = 1; round <= cap; ++round) {
    double worst = 0.0;
    for (std::size_t p = 0; p < d.patch_count; ++p) {
      const double r = sweep_patch(u, op, d, p, config.kernel, config.big);
      m.residual_history[p].push_back(r);
      worst = std::max(worst, r);
    }
    m.iterations = round;
    m.final_residual = worst;
    if (worst < config.tol) {
      m.converged = true;
      break;
    }
  }
  return m;
}

RunMetrics rounds_concurrent(ScalarField& field, const LocalOperator& op, const Decomposition& d,
                             const RunConfig& config, std::size_t cap) {
  const std::size_t threads = std::min(config.workers, d.patch_count);
  RunMetrics m;
  m.residual_history.resize(d.patch_count);
  std::vector<double> residual(d.patch_count, 0.0);
  bool stop = false;

  auto on_round_end = [&]() noexcept {
    double worst = 0.0;
    for (std::size_t p = 0; p < d.patch_count; ++p) {
      m.residual_history[p].push_back(residual[p]);
      worst = std::max(worst, residual[p]);
    }
    ++m.iterations;
    m.final_residual = worst;
    m.converged = worst < config.tol;
    stop = m.converged || m.iterations >= cap;
  };
  std::barrier sync(static_cast<std::ptrdiff_t>(threads), on_round_end);

  const AtomicView u{field.values().data()};
  auto worker = [&](std::size_t w) {
    while (!stop) {
      for (std::size_t p = w; p < d.patch_count; p += threads) {
        residual[p] = sweep_patch(u, op, d, p, config.kernel, config.big);
      }
      sync.arrive_and_wait();
    }
  };

  std::vector<std::jthread> pool;
  pool.reserve(threads);
  for (std::size_t w = 0; w < threads; ++w) pool.emplace_back(worker, w);
  pool.clear();  // joins
  return m;
}

LocalOperator build_operator(const Problem& problem, const Grid& grid, Kernel kernel) {
  const TimeStep step = choose_time_step(estimate_bounds(problem, grid), grid.dx());
  LocalOperator op(problem, grid, step.h);
  if (kernel == Kernel::Modified) op.require_explicit();
  return op;
}

void fill_common(RunMetrics& m, Method method, const Grid& grid, std::size_t patches, const RunConfig& config) {
  m.method = method;
  m.grid_n = grid.n();
  m.dx = grid.dx();
  m.patches = patches;
  m.workers = config.deterministic ? 1 : std::min(config.workers, patches);
}

void require_converged(const RunMetrics& m) {
  if (!m.converged) {
    throw NonConvergenceError(std::string(method_name(m.method)) + ": no convergence within " +
                              std::to_string(m.iterations) + " rounds (last change " +
                              std::to_string(m.final_residual) + ")");
  }
}

}  // namespace

const char* method_name(Method m) {
  switch (m) {
    case Method::Single:
      return "single";
    case Method::DD:
      return "dd";
    case Method::PDD:
      return "pdd";
  }
  return "?";
}

Decomposition make_static_decomposition(const Grid& grid, std::size_t n_p) {
  const auto k = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(n_p))));
  if (n_p == 0 || k * k != n_p) throw UsageError("static decomposition needs a perfect-square patch count");
  const std::size_t m = grid.n() - 2;
  if (k > m) throw UsageError("more blocks per axis than interior nodes");

  // Interior index i in [0, m) -> block along one axis.
  std::vector<std::size_t> block(m);
  for (std::size_t b = 0; b < k; ++b)
    for (std::size_t i = ceil_div(b * m, k); i < ceil_div((b + 1) * m, k); ++i) block[i] = b;

  const std::size_t n = grid.n();
  auto patch_of = [&](std::size_t r, std::size_t c) {
    r = std::clamp<std::size_t>(r, 1, n - 2);
    c = std::clamp<std::size_t>(c, 1, n - 2);
    return static_cast<int>(block[r - 1] * k + block[c - 1]);
  };

  Decomposition d;
  d.patch_count = n_p;
  d.owner.assign(grid.size(), -1);
  d.lists.resize(n_p);
  d.boundary.resize(n_p);
  for (std::size_t node = 0; node < grid.size(); ++node) {
    const int p = patch_of(grid.row(node), grid.col(node));
    d.owner[node] = p;
    if (grid.on_boundary(node)) d.boundary[static_cast<std::size_t>(p)].push_back(node);
  }
  for (std::size_t node : default_order(grid).nodes) d.lists[static_cast<std::size_t>(d.owner[node])].push_back(node);
  return d;
}

RunMetrics run_rounds(ScalarField& field, const LocalOperator& op, const Decomposition& d, const RunConfig& config) {
  validate(d, field.grid(), config);
  if (config.kernel == Kernel::Modified) op.require_explicit();
  const std::size_t cap = config.max_rounds ? config.max_rounds : 10 * field.grid().n();
  if (config.deterministic || config.workers == 1) return rounds_sequential(field, op, d, config, cap);
  return rounds_concurrent(field, op, d, config, cap);
}

RunResult run_dd(const Problem& problem, const Grid& fine_grid, std::size_t n_p, const RunConfig& config) {
  const auto t0 = Clock::now();
  Decomposition d = make_static_decomposition(fine_grid, n_p);
  const double pre = seconds_since(t0);

  const auto t1 = Clock::now();
  const LocalOperator op = build_operator(problem, fine_grid, config.kernel);
  ScalarField field = initial_field(problem, fine_grid, config.big);
  RunMetrics m = run_rounds(field, op, d, config);
  m.solve_seconds = seconds_since(t1);
  m.precompute_seconds = pre;
  m.total_seconds = pre + m.solve_seconds;
  fill_common(m, Method::DD, fine_grid, n_p, config);
  require_converged(m);
  return {std::move(field), std::move(m), std::move(d)};
}

RunResult run_pdd(const Problem& problem, const Grid& coarse_grid, const Grid& fine_grid,
                  const PatchyOptions& patchy, const RunConfig& config) {
  const auto t0 = Clock::now();
  PatchyResult pr = build_decomposition(problem, coarse_grid, fine_grid, patchy);
  const double pre = seconds_since(t0);

  const auto t1 = Clock::now();
  const LocalOperator op = build_operator(problem, fine_grid, config.kernel);
  ScalarField field = initial_field(problem, fine_grid, config.big);
  if (config.init == Init::Default) {
    for (std::size_t node : fine_grid.interior_nodes()) field[node] = std::min(pr.uhat[node], config.big);
  }
  RunMetrics m = run_rounds(field, op, pr.decomposition, config);
  m.solve_seconds = seconds_since(t1);
  m.precompute_seconds = pre;
  m.total_seconds = pre + m.solve_seconds;
  fill_common(m, Method::PDD, fine_grid, patchy.patches, config);
  require_converged(m);
  return {std::move(field), std::move(m), std::move(pr.decomposition)};
}

RunResult run_single(const Problem& problem, const Grid& grid, const RunConfig& config) {
  if (!(config.tol > 0.0)) throw UsageError("tolerance must be positive");
  const auto t0 = Clock::now();
  SolveOptions opts;
  opts.kernel = config.kernel;
  opts.tol = config.tol;
  opts.max_iterations = config.max_rounds;
  opts.big = config.big;
  SolveResult r = solve_fixed_point(problem, grid, default_order(grid), opts);

  RunMetrics m;
  m.iterations = r.stats.iterations;
  m.converged = r.stats.converged;
  m.final_residual = r.stats.residual;
  m.solve_seconds = seconds_since(t0);
  m.total_seconds = m.solve_seconds;
  fill_common(m, Method::Single, grid, 1, config);
  m.workers = 1;
  require_converged(m);
  return {std::move(r.field), std::move(m), std::nullopt};
}

void write_metrics_json(std::ostream& out, const RunMetrics& m) {
  nlohmann::ordered_json j;
  j["method"] = method_name(m.method);
  j["grid_n"] = m.grid_n;
  j["dx"] = m.dx;
  j["eps"] = m.eps;
  j["patches"] = m.patches;
  j["workers"] = m.workers;
  j["iterations"] = m.iterations;
  j["precompute_seconds"] = m.precompute_seconds;
  j["solve_seconds"] = m.solve_seconds;
  j["total_seconds"] = m.total_seconds;
  j["converged"] = m.converged;
  out << j.dump(2) << '\n';
  if (!out) throw IoError("failed writing metrics");
}

void write_metrics_json(const std::string& path, const RunMetrics& m) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot open " + path + " for writing");
  write_metrics_json(out, m);
}

}  // namespace patchy
