// SPDX-License-Identifier: Apache-2.0
//
// Iteratively reweighted log-depth integration.
//
// Every retained directed pair b -> a contributes the row
//
//   gamma (z~_a - z~_b) = gamma * log(omega + omega_eps * alpha * beta)
//
// with bilateral weight w. Each outer iteration recomputes w from the current
// residuals, gates alpha with beta, solves the weighted normal equations by
// warm-started conjugate gradient and finally refreshes alpha.

#ifndef NINT_SOLVER_HPP
#define NINT_SOLVER_HPP

#include <array>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "nint/camera.hpp"
#include "nint/common.hpp"
#include "nint/formulation.hpp"
#include "nint/graph.hpp"
#include "nint/sparse.hpp"

namespace nint {

enum class Method { Ours, BiNI };

inline const char* to_string(Method m) { return m == Method::Ours ? "ours" : "bini"; }

struct SolverState;

struct SolverConfig {
  int max_outer_iters = 1200;
  double k = 2.0;
  BetaParams beta;
  bool alpha_enabled = true;
  Method method = Method::Ours;
  GammaMode gamma = gamma_mode::Full{};
  LambdaMode lambda = lambda_mode::Constant{0.5};
  Connectivity connectivity = Connectivity::Four;
  double cg_tol = 1e-9;
  int cg_max_iters = 5000;
  Preconditioner preconditioner = Preconditioner::Jacobi;
  /// Stop once |E_t - E_{t-1}| <= threshold * max(E_t, E_{t-1}); unset disables.
  std::optional<double> early_stop_rel_energy = 1e-9;
  /// Known per-pair alpha; disables the alpha update.
  std::optional<std::vector<double>> fixed_alpha;
  /// Constant beta instead of the activation (e.g. 1 for known alpha).
  std::optional<double> beta_override;
  /// Called after every outer iteration.
  std::function<void(const SolverState&, const PairGraph&)> on_iteration;
};

inline void validate(const SolverConfig& c) {
  if (c.max_outer_iters < 1) throw Error(ErrorCode::InvalidArgument, "iterations must be >= 1");
  if (!(c.k > 0.0) || !std::isfinite(c.k)) throw Error(ErrorCode::InvalidArgument, "k must be > 0");
  validate(c.beta);
  validate(c.lambda);
  if (!(c.cg_tol > 0.0)) throw Error(ErrorCode::InvalidArgument, "cg tolerance must be > 0");
  if (c.cg_max_iters < 1) throw Error(ErrorCode::InvalidArgument, "cg iterations must be >= 1");
  if (c.early_stop_rel_energy && !(*c.early_stop_rel_energy > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "early-stop threshold must be > 0");
  }
  if (c.beta_override && !(*c.beta_override >= 0.0 && *c.beta_override <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "beta override must lie in [0, 1]");
  }
  if (const auto* g = std::get_if<gamma_mode::ConstF>(&c.gamma); g && !(g->value > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "const_f value must be > 0");
  }
}

struct SolverState {
  std::vector<double> z_tilde;  ///< per pixel (row-major), 0 outside the mask
  std::vector<double> alpha;    ///< per directed pair
  std::vector<double> w;        ///< per directed pair
  std::vector<double> beta;     ///< per directed pair
  int t = 0;
  double energy = 0.0;
};

struct Diagnostics {
  std::vector<double> energy_trace;
  std::vector<int> cg_iterations;
  int cg_stagnations = 0;
  int iterations = 0;
  bool early_stopped = false;
  std::size_t dropped_pairs = 0;
  std::vector<std::string> notes;
};

struct IntegrationResult {
  DepthMap depth;
  PixelMask mask;
  PairGraph graph;
  std::vector<double> alpha;
  /// eps = alpha * z_b per directed pair.
  std::vector<double> epsilon;
  /// max |eps| over the pairs constraining each pixel.
  DepthMap epsilon_max;
  std::vector<double> weights;
  Diagnostics diagnostics;
};

/// res_{b->a} = gamma (z~_a - z~_b) with the weight-side gamma.
inline std::vector<double> residuals(const SolverState& state, const PairGraph& graph) {
  std::vector<double> res(graph.pairs.size());
  parallel_for(res.size(), [&](std::size_t i) {
    const DirectedPair& p = graph.pairs[i];
    res[i] = p.coeffs.gamma_weight * (state.z_tilde[p.a] - state.z_tilde[p.b]);
  });
  return res;
}

/// w_{b->a} = sigma_k(res_{-b->a}^2 - res_{b->a}^2); 0.5 without an opposite pair.
inline std::vector<double> bilateral_weights(const std::vector<double>& res, const PairGraph& graph,
                                             double k) {
  std::vector<double> w(graph.pairs.size());
  parallel_for(w.size(), [&](std::size_t i) {
    const DirectedPair& p = graph.pairs[i];
    if (p.opposite < 0) {
      w[i] = 0.5;
      return;
    }
    const double ro = res[static_cast<std::size_t>(p.opposite)];
    w[i] = logistic(k, ro * ro - res[i] * res[i]);
  });
  return w;
}

inline std::vector<double> bilateral_weights(const SolverState& state, const PairGraph& graph,
                                             double k) {
  return bilateral_weights(residuals(state, graph), graph, k);
}

/// alpha_{b->a} = (exp(z~_a - z~_b) - omega) / omega_eps; 0 for ineligible pairs.
inline std::vector<double> alpha_update(const SolverState& state, const PairGraph& graph) {
  std::vector<double> alpha(graph.pairs.size(), 0.0);
  parallel_for(alpha.size(), [&](std::size_t i) {
    const DirectedPair& p = graph.pairs[i];
    if (!p.coeffs.alpha_eligible()) return;
    alpha[i] =
        (std::exp(state.z_tilde[p.a] - state.z_tilde[p.b]) - p.coeffs.omega) / p.coeffs.omega_eps;
  });
  return alpha;
}

/// Right-hand side of every row divided by its gamma.
inline std::vector<double> row_targets(const PairGraph& graph, const SolverState& state,
                                       Method method) {
  std::vector<double> rhs(graph.pairs.size());
  if (method == Method::BiNI) {
    for (std::size_t i = 0; i < rhs.size(); ++i) rhs[i] = graph.pairs[i].bini_target;
    return rhs;
  }
  for (std::size_t i = 0; i < rhs.size(); ++i) {
    const DirectedPair& p = graph.pairs[i];
    try {
      rhs[i] = log_rhs(p.coeffs, state.alpha[i], state.beta[i]);
    } catch (const Error& e) {
      const Pixel pa = graph.pixel(p.a);
      const Pixel pb = graph.pixel(p.b);
      throw Error(e.code(), e.message() + " for pair (" + std::to_string(pb.u) + ", " +
                                std::to_string(pb.v) + ") -> (" + std::to_string(pa.u) + ", " +
                                std::to_string(pa.v) + ") at iteration " +
                                std::to_string(state.t));
    }
  }
  return rhs;
}

/// Sparsity pattern of M with the four value slots touched by each pair.
class NormalEquations {
 public:
  explicit NormalEquations(const PairGraph& graph) : graph_(&graph) {
    const std::size_t n = graph.variable_count();
    std::vector<std::vector<std::uint32_t>> cols(n);
    for (std::size_t v = 0; v < n; ++v) cols[v].push_back(static_cast<std::uint32_t>(v));
    for (const DirectedPair& p : graph.pairs) {
      const auto va = static_cast<std::uint32_t>(graph.pixel_to_var[p.a]);
      const auto vb = static_cast<std::uint32_t>(graph.pixel_to_var[p.b]);
      cols[va].push_back(vb);
    }
    M_.rows = n;
    M_.row_ptr.assign(n + 1, 0);
    for (std::size_t v = 0; v < n; ++v) {
      auto& c = cols[v];
      std::sort(c.begin(), c.end());
      c.erase(std::unique(c.begin(), c.end()), c.end());
      M_.row_ptr[v + 1] = M_.row_ptr[v] + c.size();
    }
    M_.col.reserve(M_.row_ptr[n]);
    for (const auto& c : cols) M_.col.insert(M_.col.end(), c.begin(), c.end());
    M_.val.assign(M_.col.size(), 0.0);

    const auto find = [&](std::uint32_t r, std::uint32_t c) {
      for (std::size_t k = M_.row_ptr[r]; k < M_.row_ptr[r + 1]; ++k) {
        if (M_.col[k] == c) return k;
      }
      throw Error(ErrorCode::InvalidArgument, "normal-equation pattern is inconsistent");
    };
    slots_.resize(graph.pairs.size());
    for (std::size_t i = 0; i < graph.pairs.size(); ++i) {
      const DirectedPair& p = graph.pairs[i];
      const auto va = static_cast<std::uint32_t>(graph.pixel_to_var[p.a]);
      const auto vb = static_cast<std::uint32_t>(graph.pixel_to_var[p.b]);
      slots_[i] = {find(va, va), find(va, vb), find(vb, va), find(vb, vb)};
    }
    rhs_.assign(n, 0.0);
  }

  /// M = sum w gamma^2 (e_a - e_b)(e_a - e_b)^T, r = sum w gamma^2 t (e_a - e_b),
  /// accumulated in graph order.
  void assemble(const std::vector<double>& w, const std::vector<double>& target) {
    std::fill(M_.val.begin(), M_.val.end(), 0.0);
    std::fill(rhs_.begin(), rhs_.end(), 0.0);
    for (std::size_t i = 0; i < graph_->pairs.size(); ++i) {
      const DirectedPair& p = graph_->pairs[i];
      const double g = p.coeffs.gamma;
      const double c = w[i] * g * g;
      const auto& s = slots_[i];
      M_.val[s[0]] += c;
      M_.val[s[1]] -= c;
      M_.val[s[2]] -= c;
      M_.val[s[3]] += c;
      const double cr = c * target[i];
      rhs_[static_cast<std::size_t>(graph_->pixel_to_var[p.a])] += cr;
      rhs_[static_cast<std::size_t>(graph_->pixel_to_var[p.b])] -= cr;
    }
  }

  const CsrMatrix& matrix() const noexcept { return M_; }
  const std::vector<double>& rhs() const noexcept { return rhs_; }

 private:
  const PairGraph* graph_;
  CsrMatrix M_;
  std::vector<double> rhs_;
  std::vector<std::array<std::size_t, 4>> slots_;
};

/// One-shot assembly of (M, r) for the current state.
inline std::pair<CsrMatrix, std::vector<double>> assemble_normal_equations(
    const PairGraph& graph, const SolverState& state, const SolverConfig& config) {
  NormalEquations eq(graph);
  eq.assemble(state.w, row_targets(graph, state, config.method));
  return {eq.matrix(), eq.rhs()};
}

/// E = sum w gamma^2 (z~_a - z~_b - t)^2
inline double energy(const PairGraph& graph, const SolverState& state,
                     const std::vector<double>& target) {
  double e = 0.0;
  for (std::size_t i = 0; i < graph.pairs.size(); ++i) {
    const DirectedPair& p = graph.pairs[i];
    const double d = state.z_tilde[p.a] - state.z_tilde[p.b] - target[i];
    e += state.w[i] * p.coeffs.gamma * p.coeffs.gamma * d * d;
  }
  return e;
}

namespace solver_detail {

inline void recenter(std::vector<double>& x, const PairGraph& graph) {
  std::vector<double> sum(static_cast<std::size_t>(graph.component_count), 0.0);
  std::vector<std::size_t> count(sum.size(), 0);
  for (std::size_t v = 0; v < x.size(); ++v) {
    const auto c = static_cast<std::size_t>(graph.component_id[graph.var_to_pixel[v]]);
    sum[c] += x[v];
    ++count[c];
  }
  for (std::size_t v = 0; v < x.size(); ++v) {
    const auto c = static_cast<std::size_t>(graph.component_id[graph.var_to_pixel[v]]);
    x[v] -= sum[c] / static_cast<double>(count[c]);
  }
}

}  // namespace solver_detail

/// Runs the outer loop on a prebuilt graph.
inline IntegrationResult integrate(PairGraph graph, const SolverConfig& config) {
  validate(config);
  const std::size_t np = graph.pairs.size();
  const std::size_t nv = graph.variable_count();
  if (np == 0) throw Error(ErrorCode::EmptyGraph, "no valid neighboring pixel pairs");
  if (config.fixed_alpha && config.fixed_alpha->size() != np) {
    throw Error(ErrorCode::DimensionMismatch, "fixed alpha has " +
                                                  std::to_string(config.fixed_alpha->size()) +
                                                  " entries, graph has " + std::to_string(np));
  }

  IntegrationResult out;
  Diagnostics& diag = out.diagnostics;
  diag.dropped_pairs = graph.dropped_pairs;
  diag.notes = graph.warnings;
  {
    std::vector<std::size_t> sizes(static_cast<std::size_t>(graph.component_count), 0);
    for (std::uint32_t px : graph.var_to_pixel) ++sizes[static_cast<std::size_t>(graph.component_id[px])];
    std::size_t singles = 0;
    for (std::size_t s : sizes) singles += s == 1 ? 1 : 0;
    if (singles > 0) {
      diag.notes.push_back(std::to_string(singles) +
                           " isolated pixel(s) have no constraints; their log depth is fixed to 0");
    }
    if (graph.component_count > 1) {
      diag.notes.push_back(std::to_string(graph.component_count) +
                           " connected components, each with its own unknown scale");
    }
  }

  const bool ours = config.method == Method::Ours;
  const bool alpha_fixed = ours && config.fixed_alpha.has_value();
  const bool alpha_updates = ours && config.alpha_enabled && !alpha_fixed;

  SolverState state;
  state.z_tilde.assign(graph.pixel_to_var.size(), 0.0);
  state.alpha = alpha_fixed ? *config.fixed_alpha : std::vector<double>(np, 0.0);
  state.w.assign(np, 0.5);
  state.beta.assign(np, 0.0);

  NormalEquations eq(graph);
  std::vector<double> x(nv, 0.0);
  std::vector<double> w_prev;
  double prev_energy = 0.0;
  CgOptions cg{config.cg_tol, config.cg_max_iters, config.preconditioner};

  for (int t = 1; t <= config.max_outer_iters; ++t) {
    state.t = t;
    std::vector<double> w = bilateral_weights(state, graph, config.k);
    if (!ours || (!config.alpha_enabled && !alpha_fixed)) {
      std::fill(state.beta.begin(), state.beta.end(), 0.0);
    } else if (config.beta_override) {
      std::fill(state.beta.begin(), state.beta.end(), *config.beta_override);
    } else if (w_prev.empty()) {
      std::fill(state.beta.begin(), state.beta.end(), 0.0);
    } else {
      for (std::size_t i = 0; i < np; ++i) state.beta[i] = beta_activation(w_prev[i], config.beta);
    }
    state.w = w;
    w_prev = std::move(w);

    const std::vector<double> target = row_targets(graph, state, config.method);
    eq.assemble(state.w, target);
    CgResult sol = cg_solve(eq.matrix(), eq.rhs(), x, cg);
    diag.cg_iterations.push_back(sol.iterations);
    if (!sol.converged) ++diag.cg_stagnations;
    x = std::move(sol.x);
    solver_detail::recenter(x, graph);
    for (std::size_t v = 0; v < nv; ++v) state.z_tilde[graph.var_to_pixel[v]] = x[v];

    state.energy = energy(graph, state, target);
    diag.energy_trace.push_back(state.energy);
    diag.iterations = t;
    if (alpha_updates) state.alpha = alpha_update(state, graph);
    if (config.on_iteration) config.on_iteration(state, graph);

    if (config.early_stop_rel_energy && t > 1) {
      const double scale = std::max(state.energy, prev_energy);
      if (std::abs(state.energy - prev_energy) <= *config.early_stop_rel_energy * scale) {
        diag.early_stopped = true;
        break;
      }
    }
    prev_energy = state.energy;
  }
  if (diag.cg_stagnations > 0) {
    diag.notes.push_back("conjugate gradient hit its iteration cap in " +
                         std::to_string(diag.cg_stagnations) + " outer iteration(s)");
  }

  out.depth = DepthMap(graph.width, graph.height, 0.0);
  out.mask = PixelMask(graph.width, graph.height, 0);
  for (std::uint32_t px : graph.var_to_pixel) {
    out.depth[px] = std::exp(state.z_tilde[px]);
    out.mask[px] = 1;
  }
  out.alpha = state.alpha;
  out.epsilon.assign(np, 0.0);
  out.epsilon_max = DepthMap(graph.width, graph.height, 0.0);
  for (std::size_t i = 0; i < np; ++i) {
    const DirectedPair& p = graph.pairs[i];
    out.epsilon[i] = state.alpha[i] * out.depth[p.b];
    out.epsilon_max[p.a] = std::max(out.epsilon_max[p.a], std::abs(out.epsilon[i]));
  }
  out.weights = std::move(state.w);
  out.graph = std::move(graph);
  return out;
}

inline GraphOptions graph_options(const SolverConfig& config) {
  return {config.connectivity, config.lambda, config.gamma, 1e-6};
}

inline IntegrationResult integrate(const NormalMap& normals, const PixelMask& mask,
                                   const CameraModel& camera, const SolverConfig& config) {
  validate(config);
  require_same_shape(mask, normals, "mask vs normals");
  if (count_valid(mask) == 0) throw Error(ErrorCode::EmptyMask, "mask has no valid pixels");
  const RayMap rays = build_ray_map(camera, mask.width(), mask.height());
  return integrate(build_graph(mask, normals, rays, graph_options(config)), config);
}

enum class AlignMode { Median, Mean };
enum class AlignDomain { Log, Linear };

inline const char* to_string(AlignMode m) { return m == AlignMode::Median ? "median" : "mean"; }
inline const char* to_string(AlignDomain d) { return d == AlignDomain::Log ? "log" : "linear"; }

/// Connected components of the mask itself under 4-connectivity.
inline std::vector<std::int32_t> mask_components(const PixelMask& mask) {
  graph_detail::DisjointSets sets(mask.size());
  for (int v = 0; v < mask.height(); ++v) {
    for (int u = 0; u < mask.width(); ++u) {
      const std::size_t i = mask.index(u, v);
      if (!mask[i]) continue;
      if (u + 1 < mask.width() && mask(u + 1, v)) sets.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(i + 1));
      if (v + 1 < mask.height() && mask(u, v + 1)) {
        sets.unite(static_cast<std::uint32_t>(i), static_cast<std::uint32_t>(mask.index(u, v + 1)));
      }
    }
  }
  std::vector<std::int32_t> label(mask.size(), -1), root_label(mask.size(), -1);
  int next = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i]) continue;
    const std::uint32_t r = sets.find(static_cast<std::uint32_t>(i));
    if (root_label[r] < 0) root_label[r] = next++;
    label[i] = root_label[r];
  }
  return label;
}

namespace solver_detail {

inline double median_of(std::vector<double> v) {
  const std::size_t mid = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid), v.end());
  const double hi = v[mid];
  if (v.size() % 2 == 1) return hi;
  const double lo = *std::max_element(v.begin(), v.begin() + static_cast<std::ptrdiff_t>(mid));
  return 0.5 * (lo + hi);
}

}  // namespace solver_detail

/// Removes the unknown gauge of `est` against `ref` per component: a scale in
/// the log domain, an offset in the linear domain. Without explicit labels the
/// mask's own 4-connected components are used.
inline DepthMap gauge_align(const DepthMap& est, const DepthMap& ref, const PixelMask& mask,
                            AlignMode mode = AlignMode::Median, AlignDomain domain = AlignDomain::Log,
                            const std::vector<std::int32_t>* components = nullptr) {
  require_same_shape(est, ref, "estimate vs reference");
  require_same_shape(est, mask, "estimate vs mask");
  std::vector<std::int32_t> own;
  if (components == nullptr) {
    own = mask_components(mask);
    components = &own;
  } else if (components->size() != mask.size()) {
    throw Error(ErrorCode::DimensionMismatch, "component labels do not match the mask");
  }
  int count = 0;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (mask[i] && (*components)[i] >= 0) count = std::max(count, (*components)[i] + 1);
  }
  if (count == 0) throw Error(ErrorCode::EmptyMask, "no pixels to align");
  std::vector<std::vector<double>> diffs(static_cast<std::size_t>(count));
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || (*components)[i] < 0) continue;
    double d = 0.0;
    if (domain == AlignDomain::Log) {
      if (!(est[i] > 0.0) || !(ref[i] > 0.0)) {
        throw Error(ErrorCode::InvalidArgument, "log-domain alignment needs positive depths");
      }
      d = std::log(ref[i]) - std::log(est[i]);
    } else {
      d = ref[i] - est[i];
    }
    diffs[static_cast<std::size_t>((*components)[i])].push_back(d);
  }
  std::vector<double> shift(diffs.size(), 0.0);
  for (std::size_t c = 0; c < diffs.size(); ++c) {
    if (diffs[c].empty()) continue;
    if (mode == AlignMode::Median) {
      shift[c] = solver_detail::median_of(diffs[c]);
    } else {
      double s = 0.0;
      for (double d : diffs[c]) s += d;
      shift[c] = s / static_cast<double>(diffs[c].size());
    }
  }
  DepthMap out = est;
  for (std::size_t i = 0; i < mask.size(); ++i) {
    if (!mask[i] || (*components)[i] < 0) continue;
    const double s = shift[static_cast<std::size_t>((*components)[i])];
    out[i] = domain == AlignDomain::Log ? est[i] * std::exp(s) : est[i] + s;
  }
  return out;
}

}  // namespace nint

#endif  // NINT_SOLVER_HPP
