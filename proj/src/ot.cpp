#include "panelmix/ot.hpp"

#include <cmath>
#include <limits>
#include <queue>

#include "panelmix/errors.hpp"

namespace panelmix::ot {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
constexpr double kEps = 1e-14;

struct Edge {
  int to;
  double cap;
  double cost;
};

// Min-cost flow with Dijkstra over reduced costs (Johnson potentials).
class McfGraph {
 public:
  explicit McfGraph(int n) : adj_(n), potential_(n, 0.0) {}

  void add_edge(int u, int v, double cap, double cost) {
    adj_[u].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({v, cap, cost});
    adj_[v].push_back(static_cast<int>(edges_.size()));
    edges_.push_back({u, 0.0, -cost});
  }

  // Ships as much flow as possible from s to t along cost-minimal paths.
  double run(int s, int t, int max_augmentations) {
    const auto n = static_cast<int>(adj_.size());
    double shipped = 0.0;
    for (int round = 0; round < max_augmentations; ++round) {
      std::vector<double> dist(n, kInf);
      std::vector<int> parent_edge(n, -1);
      dist[s] = 0.0;
      using Item = std::pair<double, int>;
      std::priority_queue<Item, std::vector<Item>, std::greater<>> pq;
      pq.emplace(0.0, s);
      while (!pq.empty()) {
        auto [d, u] = pq.top();
        pq.pop();
        if (d > dist[u]) continue;
        for (int eid : adj_[u]) {
          const Edge& e = edges_[eid];
          if (e.cap <= kEps) continue;
          // clamp: rounding drift in the potentials must not produce negative
          // weights, or the queue can cycle
          const double rc = std::max(e.cost + potential_[u] - potential_[e.to], 0.0);
          const double nd = dist[u] + rc;
          if (nd < dist[e.to]) {
            dist[e.to] = nd;
            parent_edge[e.to] = eid;
            pq.emplace(nd, e.to);
          }
        }
      }
      if (dist[t] == kInf) break;
      for (int v = 0; v < n; ++v) {
        if (dist[v] < kInf) potential_[v] += std::min(dist[v], dist[t]);
      }
      double bottleneck = kInf;
      for (int v = t; v != s; v = edges_[parent_edge[v] ^ 1].to)
        bottleneck = std::min(bottleneck, edges_[parent_edge[v]].cap);
      for (int v = t; v != s; v = edges_[parent_edge[v] ^ 1].to) {
        edges_[parent_edge[v]].cap -= bottleneck;
        edges_[parent_edge[v] ^ 1].cap += bottleneck;
      }
      shipped += bottleneck;
    }
    return shipped;
  }

  // Flow on the forward edge added as the eid-th add_edge call.
  double flow(int insertion_index) const { return edges_[2 * insertion_index + 1].cap; }

 private:
  std::vector<std::vector<int>> adj_;
  std::vector<Edge> edges_;
  std::vector<double> potential_;
};

}  // namespace

TransportResult solve_transport(Eigen::Ref<const Eigen::VectorXd> supply,
                                Eigen::Ref<const Eigen::VectorXd> demand,
                                const Eigen::MatrixXd& cost) {
  const auto m = static_cast<int>(supply.size());
  const auto n = static_cast<int>(demand.size());
  if (cost.rows() != m || cost.cols() != n) throw InputError("solve_transport: cost shape mismatch");
  if ((supply.array() < 0).any() || (demand.array() < 0).any())
    throw InputError("solve_transport: negative mass");
  const double total = supply.sum();
  if (std::fabs(total - demand.sum()) > 1e-9) throw InputError("solve_transport: unbalanced marginals");

  // nodes: 0 = source, 1..m supply atoms, m+1..m+n demand atoms, m+n+1 = sink
  McfGraph graph(m + n + 2);
  const int s = 0, t = m + n + 1;
  int edge_count = 0;
  Eigen::MatrixXi arc_index = Eigen::MatrixXi::Constant(m, n, -1);
  for (int i = 0; i < m; ++i) {
    graph.add_edge(s, 1 + i, supply[i], 0.0);
    ++edge_count;
  }
  for (int i = 0; i < m; ++i) {
    for (int j = 0; j < n; ++j) {
      arc_index(i, j) = edge_count++;
      graph.add_edge(1 + i, m + 1 + j, total + 1.0, cost(i, j));
    }
  }
  for (int j = 0; j < n; ++j) {
    graph.add_edge(m + 1 + j, t, demand[j], 0.0);
    ++edge_count;
  }

  const double shipped = graph.run(s, t, 20 * (m + n) + 100);
  if (std::fabs(shipped - total) > 1e-12 * std::max(1.0, total) + 1e-12)
    throw NumericError("solve_transport: marginals not matched");

  TransportResult res;
  res.plan.resize(m, n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < n; ++j) res.plan(i, j) = graph.flow(arc_index(i, j));
  res.cost = (res.plan.array() * cost.array()).sum();
  return res;
}

double wasserstein(const MixingMeasure& m1, const MixingMeasure& m2, int order,
                   const AtomMetric& metric) {
  m1.validate();
  m2.validate();
  if (order != 1 && order != 2) throw InputError("wasserstein: order must be 1 or 2");
  if (m1.size() + m2.size() > 256) throw InputError("wasserstein: combined atom count above 256");

  Eigen::MatrixXd cost(m1.size(), m2.size());
  for (int i = 0; i < m1.size(); ++i) {
    for (int j = 0; j < m2.size(); ++j) {
      const double rho = metric(m1.atoms[i], m2.atoms[j]);
      cost(i, j) = order == 1 ? rho : rho * rho;
    }
  }
  const double opt = solve_transport(m1.weights, m2.weights, cost).cost;
  return order == 1 ? opt : std::sqrt(std::max(opt, 0.0));
}

ConditionalAtoms conditional_atoms(const ModelParams& params, const PanelData& data, CondMode mode) {
  params.validate();
  const int T = data.n_periods();
  const int N = data.n_units();
  const int K = params.n_components();
  if (params.beta.size() != data.n_covariates())
    throw InputError("conditional_atoms: beta length != number of covariates");

  ConditionalAtoms out;
  out.sigma2.resize(K);
  for (int k = 0; k < K; ++k) out.sigma2[k] = params.atoms[k].sigma2;
  out.weights = params.weights;
  out.b.assign(N, Eigen::MatrixXd(T, K));

  if (mode == CondMode::kStatic) {
    for (int i = 0; i < N; ++i) {
      const Eigen::VectorXd zb =
          params.beta.size() > 0 ? Eigen::VectorXd(data.z[i] * params.beta) : Eigen::VectorXd::Zero(T);
      for (int k = 0; k < K; ++k)
        out.b[i].col(k) = Eigen::VectorXd::Constant(T, params.atoms[k].alpha) + zb;
    }
    return out;
  }

  if (!params.gamma) throw InputError("conditional_atoms: dynamic mode needs gamma");
  if (!data.dynamic) throw InputError("conditional_atoms: dynamic mode needs y0");
  const double g = *params.gamma;
  if (!(std::fabs(g) < 1.0)) throw InputError("conditional_atoms: |gamma| must be < 1");

  Eigen::VectorXd gpow(T);  // (gamma, gamma^2, ..., gamma^T)
  double acc = 1.0;
  for (int t = 0; t < T; ++t) {
    acc *= g;
    gpow[t] = acc;
  }

  for (int i = 0; i < N; ++i) {
    Eigen::VectorXd x =
        params.beta.size() > 0 ? Eigen::VectorXd(data.z[i] * params.beta) : Eigen::VectorXd::Zero(T);
    Eigen::VectorXd conv(T);  // t-th element sum_{l=0}^{t-1} gamma^l x_{t-l}
    for (int t = 0; t < T; ++t) conv[t] = x[t] + (t > 0 ? g * conv[t - 1] : 0.0);
    const Eigen::VectorXd base = gpow * data.y0[i] + conv;
    for (int k = 0; k < K; ++k) {
      const double a = params.atoms[k].alpha / (1.0 - g);
      out.b[i].col(k) = a * (Eigen::VectorXd::Ones(T) - gpow) + base;
    }
  }
  return out;
}

double avg_conditional_w1(const ModelParams& params1, const ModelParams& params2,
                          const PanelData& data, CondMode mode, double sigma_weight) {
  if (!(sigma_weight >= 0.0)) throw InputError("avg_conditional_w1: negative sigma weight");
  const ConditionalAtoms c1 = conditional_atoms(params1, data, mode);
  const ConditionalAtoms c2 = conditional_atoms(params2, data, mode);
  const int N = data.n_units();
  const int k1 = static_cast<int>(c1.sigma2.size());
  const int k2 = static_cast<int>(c2.sigma2.size());

  double total = 0.0;
  Eigen::MatrixXd cost(k1, k2);
  for (int i = 0; i < N; ++i) {
    for (int j = 0; j < k1; ++j) {
      for (int h = 0; h < k2; ++h) {
        const double db = (c1.b[i].col(j) - c2.b[i].col(h)).squaredNorm();
        const double ds = c1.sigma2[j] - c2.sigma2[h];
        cost(j, h) = std::sqrt(db + sigma_weight * ds * ds);
      }
    }
    total += solve_transport(c1.weights, c2.weights, cost).cost;
  }
  return total / N;
}

}  // namespace panelmix::ot
