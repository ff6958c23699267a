#include "qp/oracle.hpp"

#include <algorithm>
#include <cmath>

#include "qp/rng.hpp"
#include "qp/stability.hpp"

namespace qp {

namespace {

// Transition matrix of the truncated chain in banded storage. States are
// indexed n1*(T2+1)+n2, so every jump stays within half-band b.
struct BandMatrix {
  int n = 0, b = 0;
  std::vector<double> a;  // (2b+1) x n, entry (i,j) at [b + i - j][j]

  double get(int i, int j) const {
    int d = i - j;
    if (d < -b || d > b) return 0.0;
    return a[static_cast<size_t>(d + b) * n + j];
  }
  void add(int i, int j, double v) { a[static_cast<size_t>(i - j + b) * n + j] += v; }
  void set(int i, int j, double v) { a[static_cast<size_t>(i - j + b) * n + j] = v; }
};

// Some builders make boundary states unreachable (certain arrivals on an
// empty queue), so the folded chain can carry transient states. GTH runs on
// the unique closed communicating class; everything else gets mass zero.
std::vector<int> closed_class(const std::vector<std::vector<int>>& adj) {
  int n = static_cast<int>(adj.size());
  // iterative Tarjan SCC
  std::vector<int> index(n, -1), low(n, 0), comp(n, -1), stack;
  std::vector<bool> on(n, false);
  int next_index = 0, ncomp = 0;
  struct Frame {
    int v;
    size_t edge;
  };
  for (int root = 0; root < n; ++root) {
    if (index[root] != -1) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = low[root] = next_index++;
    stack.push_back(root);
    on[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.edge < adj[f.v].size()) {
        int w = adj[f.v][f.edge++];
        if (index[w] == -1) {
          index[w] = low[w] = next_index++;
          stack.push_back(w);
          on[w] = true;
          call.push_back({w, 0});
        } else if (on[w]) {
          low[f.v] = std::min(low[f.v], index[w]);
        }
      } else {
        if (low[f.v] == index[f.v]) {
          for (;;) {
            int w = stack.back();
            stack.pop_back();
            on[w] = false;
            comp[w] = ncomp;
            if (w == f.v) break;
          }
          ++ncomp;
        }
        int v = f.v;
        call.pop_back();
        if (!call.empty()) low[call.back().v] = std::min(low[call.back().v], low[v]);
      }
    }
  }
  // closed components: no edge leaving the component
  std::vector<bool> open(ncomp, false);
  for (int v = 0; v < n; ++v)
    for (int w : adj[v])
      if (comp[w] != comp[v]) open[comp[v]] = true;
  int closed = -1;
  for (int c = 0; c < ncomp; ++c)
    if (!open[c]) {
      if (closed != -1) throw solve_error("GTH: truncated chain has multiple closed classes");
      closed = c;
    }
  if (closed == -1) throw solve_error("GTH: no closed class found");
  std::vector<int> members;
  for (int v = 0; v < n; ++v)
    if (comp[v] == closed) members.push_back(v);
  return members;
}

struct FoldedChain {
  BandMatrix P;              // restricted to the closed class, contiguous ids
  std::vector<int> members;  // class member -> full-box state index
};

FoldedChain truncated_matrix(const ModelSpec& spec, int t1, int t2) {
  int span = spec.jump_span();
  int nfull = (t1 + 1) * (t2 + 1);
  std::vector<std::vector<int>> adj(nfull);
  std::vector<std::array<int, 16>> targets(nfull);
  for (int q1 = 0; q1 <= t1; ++q1)
    for (int q2 = 0; q2 <= t2; ++q2) {
      int from = q1 * (t2 + 1) + q2;
      const JumpDistribution& d = spec.at_state(q1, q2);
      int m = 0;
      for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
        for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j) {
          targets[from][m++] = -1;
          if (d.at(i, j) == 0.0) continue;
          int r1 = std::clamp(q1 + i, 0, t1);  // reflect at 0, fold at the cut
          int r2 = std::clamp(q2 + j, 0, t2);
          int to = r1 * (t2 + 1) + r2;
          targets[from][m - 1] = to;
          if (to != from) adj[from].push_back(to);
        }
    }

  FoldedChain fc;
  fc.members = closed_class(adj);
  std::vector<int> remap(nfull, -1);
  for (size_t k = 0; k < fc.members.size(); ++k) remap[fc.members[k]] = static_cast<int>(k);

  // order-preserving remap only compresses index gaps, so the original band
  // bound still covers every transition
  fc.P.n = static_cast<int>(fc.members.size());
  fc.P.b = std::min(fc.P.n - 1, span * (t2 + 1) + span);
  fc.P.a.assign(static_cast<size_t>(2 * fc.P.b + 1) * fc.P.n, 0.0);
  for (int k = 0; k < fc.P.n; ++k) {
    int from = fc.members[k];
    int q1 = from / (t2 + 1), q2 = from % (t2 + 1);
    const JumpDistribution& d = spec.at_state(q1, q2);
    int m = 0;
    for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
      for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j) {
        int to = targets[from][m++];
        if (to < 0) continue;
        if (remap[to] < 0) throw solve_error("GTH: closed class is not closed");
        fc.P.add(k, remap[to], d.at(i, j));
      }
  }
  return fc;
}

// Grassmann-Taksar-Heyman elimination specialized to the banded layout;
// fill from eliminating the trailing state stays inside the band. The
// departure mass s is accumulated by summation, never as 1 - p(L,L).
std::vector<double> gth_stationary(BandMatrix& P) {
  int n = P.n, b = P.b;
  for (int L = n - 1; L >= 1; --L) {
    int lo = std::max(0, L - b);
    double s = 0;
    for (int j = lo; j < L; ++j) s += P.get(L, j);
    if (s <= 0) throw solve_error("GTH: reducible truncated chain");
    for (int i = lo; i < L; ++i) {
      double v = P.get(i, L);
      if (v != 0.0) P.set(i, L, v / s);
    }
    for (int i = lo; i < L; ++i) {
      double piL = P.get(i, L);
      if (piL == 0.0) continue;
      for (int j = lo; j < L; ++j) {
        double pLj = P.get(L, j);
        if (pLj != 0.0) P.add(i, j, piL * pLj);
      }
    }
  }
  std::vector<double> pi(n, 0.0);
  pi[0] = 1.0;
  for (int L = 1; L < n; ++L) {
    int lo = std::max(0, L - b);
    double s = 0;
    for (int i = lo; i < L; ++i) s += pi[i] * P.get(i, L);
    pi[L] = s;
  }
  double total = 0;
  for (double v : pi) total += v;
  for (double& v : pi) v /= total;
  return pi;
}

double balance_residual(const ModelSpec& spec, const std::vector<double>& pi, int t1, int t2) {
  // accumulate inflow of the unfolded chain, then check states far enough
  // from the truncation edge that no outside source could reach them
  std::vector<double> in(pi.size(), 0.0);
  for (int s1 = 0; s1 <= t1; ++s1)
    for (int s2 = 0; s2 <= t2; ++s2) {
      double w = pi[static_cast<size_t>(s1) * (t2 + 1) + s2];
      if (w == 0) continue;
      const JumpDistribution& d = spec.at_state(s1, s2);
      for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
        for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j) {
          double p = d.at(i, j);
          if (p == 0.0) continue;
          int r1 = std::max(s1 + i, 0), r2 = std::max(s2 + j, 0);
          if (r1 > t1 || r2 > t2) continue;  // truncation fold ignored
          in[static_cast<size_t>(r1) * (t2 + 1) + r2] += w * p;
        }
    }
  double worst = 0;
  int span = spec.jump_span();
  for (int q1 = 0; q1 + span <= t1; ++q1)
    for (int q2 = 0; q2 + span <= t2; ++q2) {
      size_t k = static_cast<size_t>(q1) * (t2 + 1) + q2;
      worst = std::max(worst, std::abs(in[k] - pi[k]));
    }
  return worst;
}

double edge_tail_estimate(const ModelSpec& spec, const std::vector<double>& pi, int t1, int t2) {
  // geometric continuation of the edge mass with the induced-chain ratios
  auto ratio = [&](int axis) {
    try {
      return induced_chain_stationary(spec, axis).tail_ratio;
    } catch (const std::exception&) {
      return 0.95;  // pessimistic when the closed form is unavailable
    }
  };
  double r1 = ratio(1);  // decay of the first coordinate
  double r2 = ratio(2);  // decay of the second coordinate
  double edge1 = 0, edge2 = 0;
  for (int q2 = 0; q2 <= t2; ++q2) edge1 += pi[static_cast<size_t>(t1) * (t2 + 1) + q2];
  for (int q1 = 0; q1 <= t1; ++q1) edge2 += pi[static_cast<size_t>(q1) * (t2 + 1) + t2];
  return edge1 * r1 / std::max(1e-12, 1 - r1) + edge2 * r2 / std::max(1e-12, 1 - r2);
}

}  // namespace

double TruncatedSolution::marginal1(int q1) const {
  double s = 0;
  for (int q2 = 0; q2 <= t2; ++q2) s += at(q1, q2);
  return s;
}
double TruncatedSolution::marginal2(int q2) const {
  double s = 0;
  for (int q1 = 0; q1 <= t1; ++q1) s += at(q1, q2);
  return s;
}

TruncatedSolution truncated_stationary(const ModelSpec& spec, const TruncateOptions& opt) {
  bool automatic = opt.t1 <= 0 || opt.t2 <= 0;
  int t1 = automatic ? std::max(spec.n1 + 3, 16) : opt.t1;
  int t2 = automatic ? std::max(spec.n2 + 3, 16) : opt.t2;
  if (t1 <= spec.n1 + 2 || t2 <= spec.n2 + 2)
    throw invalid_model("truncation levels must exceed N+2");

  for (;;) {
    FoldedChain fc = truncated_matrix(spec, t1, t2);
    std::vector<double> sub = gth_stationary(fc.P);
    TruncatedSolution sol;
    sol.t1 = t1;
    sol.t2 = t2;
    sol.pi.assign(static_cast<size_t>(t1 + 1) * (t2 + 1), 0.0);
    for (size_t k = 0; k < fc.members.size(); ++k) sol.pi[fc.members[k]] = sub[k];
    sol.balance_residual = balance_residual(spec, sol.pi, t1, t2);
    sol.tail_estimate = edge_tail_estimate(spec, sol.pi, t1, t2);
    if (!automatic || sol.tail_estimate < opt.tail_tol) return sol;
    if (2 * t1 > opt.max_level || 2 * t2 > opt.max_level)
      throw solve_error("truncation budget exceeded before reaching the tail tolerance");
    t1 *= 2;
    t2 *= 2;
  }
}

TruncatedSolution truncated_power_iteration(const ModelSpec& spec, int t1, int t2, int max_iters,
                                            double tol) {
  FoldedChain fc = truncated_matrix(spec, t1, t2);
  int n = fc.P.n, b = fc.P.b;
  std::vector<double> pi(n, 1.0 / n), nxt(n);
  double diff = 1;
  for (int it = 0; it < max_iters && diff > tol; ++it) {
    std::fill(nxt.begin(), nxt.end(), 0.0);
    for (int i = 0; i < n; ++i) {
      double w = pi[i];
      if (w == 0) continue;
      int lo = std::max(0, i - b), hi = std::min(n - 1, i + b);
      for (int j = lo; j <= hi; ++j) {
        double p = fc.P.get(i, j);
        if (p != 0) nxt[j] += w * p;
      }
    }
    diff = 0;
    for (int i = 0; i < n; ++i) diff = std::max(diff, std::abs(nxt[i] - pi[i]));
    pi.swap(nxt);
  }
  if (diff > tol) throw solve_error("power iteration did not converge (chain may not be ergodic)");
  TruncatedSolution sol;
  sol.t1 = t1;
  sol.t2 = t2;
  sol.pi.assign(static_cast<size_t>(t1 + 1) * (t2 + 1), 0.0);
  for (size_t k = 0; k < fc.members.size(); ++k) sol.pi[fc.members[k]] = pi[k];
  sol.balance_residual = balance_residual(spec, sol.pi, t1, t2);
  sol.tail_estimate = edge_tail_estimate(spec, sol.pi, t1, t2);
  return sol;
}

SimulationResult simulate(const ModelSpec& spec, const SimulateOptions& opt) {
  // per-cell jump alias: flattened cdf over the populated jumps
  struct CellCdf {
    std::vector<double> cdf;
    std::vector<std::pair<int8_t, int8_t>> jump;
  };
  std::vector<CellCdf> cells(spec.grid.size());
  for (size_t k = 0; k < spec.grid.size(); ++k) {
    double acc = 0;
    for (int i = JumpDistribution::jmin; i <= JumpDistribution::jmax; ++i)
      for (int j = JumpDistribution::jmin; j <= JumpDistribution::jmax; ++j) {
        double p = spec.grid[k].at(i, j);
        if (p <= 0) continue;
        acc += p;
        cells[k].cdf.push_back(acc);
        cells[k].jump.push_back({static_cast<int8_t>(i), static_cast<int8_t>(j)});
      }
    if (!cells[k].cdf.empty()) cells[k].cdf.back() = std::max(cells[k].cdf.back(), 1.0);
  }

  Philox rng(opt.seed, opt.stream);
  SimulationResult res;
  res.horizon = opt.horizon;
  res.seed = opt.seed;
  res.window = opt.window;
  res.freq.assign(static_cast<size_t>(opt.window) * opt.window, 0.0);

  long long burn = static_cast<long long>(opt.horizon * opt.burn_in);
  long long q1 = 0, q2 = 0;
  long long counted = 0;
  double sum1 = 0, sum2 = 0;

  // drift telemetry: backlog displacement over fixed batches after burn-in;
  // batch displacements are near-independent, so a plain CLT error bar on
  // their mean is honest even when the trajectory is an integrated process
  const int nbatch = 128;
  long long span = std::max<long long>(1, (opt.horizon - burn) / nbatch);
  std::vector<double> disp;
  disp.reserve(nbatch);
  double batch_start_level = 0;

  for (long long step = 0; step < opt.horizon; ++step) {
    const CellCdf& c = cells[static_cast<size_t>(std::min<long long>(q1, spec.n1)) * (spec.n2 + 1) +
                             std::min<long long>(q2, spec.n2)];
    double u = rng.next_double();
    size_t lo = std::lower_bound(c.cdf.begin(), c.cdf.end(), u) - c.cdf.begin();
    if (lo >= c.jump.size()) lo = c.jump.size() - 1;
    q1 = std::max<long long>(0, q1 + c.jump[lo].first);
    q2 = std::max<long long>(0, q2 + c.jump[lo].second);
    if (step >= burn) {
      if (counted == 0) batch_start_level = static_cast<double>(q1 + q2);
      ++counted;
      sum1 += static_cast<double>(q1);
      sum2 += static_cast<double>(q2);
      if (q1 < opt.window && q2 < opt.window)
        res.freq[static_cast<size_t>(q1) * opt.window + q2] += 1.0;
      else
        res.outside_mass += 1.0;
      if (counted % span == 0 && static_cast<long long>(disp.size()) < nbatch) {
        double level = static_cast<double>(q1 + q2);
        disp.push_back(level - batch_start_level);
        batch_start_level = level;
      }
    }
  }
  for (double& f : res.freq) f /= counted;
  res.outside_mass /= counted;
  res.mean_q1 = sum1 / counted;
  res.mean_q2 = sum2 / counted;

  double nb = static_cast<double>(disp.size());
  double mean_d = 0, var_d = 0;
  for (double d : disp) mean_d += d;
  mean_d /= std::max(1.0, nb);
  for (double d : disp) var_d += sqr(d - mean_d);
  var_d /= std::max(1.0, nb - 1);
  res.drift_slope = mean_d / span;
  res.drift_slope_se = std::sqrt(var_d / std::max(1.0, nb)) / span;
  double growth = mean_d * nb;
  res.positive_drift = res.drift_slope > 5 * res.drift_slope_se && growth > 20;
  return res;
}

DiffReport compare_grids(const std::vector<double>& a, int a_t2, const std::vector<double>& b,
                         int b_t2, int w1, int w2) {
  DiffReport rep;
  std::vector<DiffEntry> all;
  for (int q1 = 0; q1 < w1; ++q1)
    for (int q2 = 0; q2 < w2; ++q2) {
      double va = a[static_cast<size_t>(q1) * (a_t2 + 1) + q2];
      double vb = b[static_cast<size_t>(q1) * (b_t2 + 1) + q2];
      double d = std::abs(va - vb);
      rep.sup_norm = std::max(rep.sup_norm, d);
      rep.total_variation += 0.5 * d;
      all.push_back({q1, q2, va, vb});
    }
  std::sort(all.begin(), all.end(), [](const DiffEntry& x, const DiffEntry& y) {
    return std::abs(x.a - x.b) > std::abs(y.a - y.b);
  });
  if (all.size() > 5) all.resize(5);
  rep.worst = std::move(all);
  return rep;
}

}  // namespace qp
