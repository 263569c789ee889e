#include "arq/network.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace arq {

static_assert(std::endian::native == std::endian::little, "checkpoint format assumes a little-endian host");

const char* to_string(EnsembleMode m) { return m == EnsembleMode::MeanOverCells ? "mean" : "top"; }

CellConfig NetworkConfig::cell_config(int layer) const {
  const int L = n_layers();
  if (layer < 0 || layer >= L) throw std::invalid_argument("cell_config: layer out of range");
  CellConfig c;
  c.obs_dim = obs_dim;
  c.below_dim = layer > 0 ? hidden_dims[layer - 1] : 0;
  c.above_dim = layer < L - 1 ? hidden_dims[layer + 1] : 0;
  c.n_actions = n_actions;
  c.hidden_dim = hidden_dims[layer];
  c.readout_dim = layer < static_cast<int>(readout_dims.size()) ? readout_dims[layer] : 1;
  c.kind = cell_kind;
  c.goodness = goodness;
  c.conditioning = conditioning;
  return c;
}

void NetworkConfig::validate() const {
  if (obs_dim < 1) throw std::invalid_argument("NetworkConfig: obs_dim must be positive");
  if (n_actions < 1) throw std::invalid_argument("NetworkConfig: n_actions must be positive");
  if (hidden_dims.empty()) throw std::invalid_argument("NetworkConfig: at least one layer required");
  if (cell_kind == CellKind::ARQ && readout_dims.size() != hidden_dims.size())
    throw std::invalid_argument("NetworkConfig: readout_dims must list one width per layer");
  for (int l = 0; l < n_layers(); ++l) cell_config(l).validate();
}

template <class R>
TemporalState<R> TemporalState<R>::zeros(const NetworkConfig& cfg) {
  TemporalState<R> s;
  s.h.resize(cfg.n_layers());
  for (int l = 0; l < cfg.n_layers(); ++l) s.h[l].assign(cfg.hidden_dims[l], R(0));
  return s;
}

template <class R>
bool TemporalState<R>::all_zero() const {
  for (const auto& v : h)
    for (R x : v)
      if (x != R(0)) return false;
  return true;
}

template <class R>
std::vector<Vec<R>> topdown_inputs(const NetworkConfig& cfg, const TemporalState<R>& state) {
  const int L = cfg.n_layers();
  if (static_cast<int>(state.h.size()) != L) la::shape_error("topdown_inputs", "state layer count mismatch");
  std::vector<Vec<R>> td(L);
  for (int l = 0; l + 1 < L; ++l) td[l] = state.h[l + 1];
  return td;  // top layer stays empty
}

template <class R>
NetworkParams<R> NetworkParams<R>::init(const NetworkConfig& cfg, SeededRng& rng) {
  cfg.validate();
  NetworkParams<R> p;
  for (int l = 0; l < cfg.n_layers(); ++l) p.online.push_back(CellParams<R>::init(cfg.cell_config(l), rng));
  p.target = p.online;
  return p;
}

template <class R>
size_t NetworkParams<R>::param_count() const {
  size_t n = 0;
  for (const auto& c : online) n += c.param_count();
  return n;
}

template <class R>
QReadout<R> make_readout(const NetworkConfig& cfg, std::vector<Vec<R>> per_cell) {
  QReadout<R> out;
  out.per_cell = std::move(per_cell);
  out.ensemble.assign(cfg.n_actions, R(0));
  if (cfg.ensemble == EnsembleMode::TopCellOnly) {
    out.ensemble = out.per_cell.back();
  } else {
    const R inv = R(1) / R(out.per_cell.size());
    for (const auto& q : out.per_cell)
      for (int a = 0; a < cfg.n_actions; ++a) out.ensemble[a] += q[a];
    for (auto& v : out.ensemble) v *= inv;
  }
  return out;
}

namespace {

template <class R>
Vec<R> layer_input(const NetworkConfig& cfg, int layer, const Vec<R>& obs, const Vec<R>* below,
                   const std::vector<Vec<R>>& topdown) {
  const CellConfig cc = cfg.cell_config(layer);
  const Vec<R>& td = topdown[layer];
  if (static_cast<int>(td.size()) != cc.above_dim)
    la::shape_error("net_forward", "layer " + std::to_string(layer) + " top-down input has " +
                                       std::to_string(td.size()) + " entries, expected " + std::to_string(cc.above_dim));
  Vec<R> X;
  X.reserve(cc.input_dim());
  X.insert(X.end(), obs.begin(), obs.end());
  if (below) X.insert(X.end(), below->begin(), below->end());
  X.insert(X.end(), td.begin(), td.end());
  return X;
}

template <class R>
NetworkActivations<R> sweep(const std::vector<CellParams<R>>& cells, const NetworkConfig& cfg, const Vec<R>& obs,
                            const std::vector<Vec<R>>& topdown, const std::vector<int>* actions) {
  if (static_cast<int>(cells.size()) != cfg.n_layers()) la::shape_error("net_forward", "cell count mismatch");
  if (static_cast<int>(obs.size()) != cfg.obs_dim)
    la::shape_error("net_forward", "obs has " + std::to_string(obs.size()) + " entries, expected " +
                                       std::to_string(cfg.obs_dim));
  if (static_cast<int>(topdown.size()) != cfg.n_layers())
    la::shape_error("net_forward", "top-down snapshot must have one slot per layer");

  NetworkActivations<R> acts;
  acts.cells.reserve(cfg.n_layers());
  const Vec<R>* below = nullptr;
  for (int l = 0; l < cfg.n_layers(); ++l) {
    Vec<R> X = layer_input(cfg, l, obs, below, topdown);
    const CellConfig cc = cfg.cell_config(l);
    if (actions)
      acts.cells.push_back(cell_forward(cells[l], cc, X, *actions));
    else
      acts.cells.push_back(cell_hidden(cells[l], cc, X));
    below = &acts.cells.back().h;
  }
  return acts;
}

}  // namespace

template <class R>
NetworkActivations<R> net_forward(const std::vector<CellParams<R>>& cells, const NetworkConfig& cfg, const Vec<R>& obs,
                                  const std::vector<Vec<R>>& topdown, const std::vector<int>& actions) {
  return sweep(cells, cfg, obs, topdown, &actions);
}

template <class R>
NetworkActivations<R> net_forward_hidden(const std::vector<CellParams<R>>& cells, const NetworkConfig& cfg,
                                         const Vec<R>& obs, const std::vector<Vec<R>>& topdown) {
  return sweep<R>(cells, cfg, obs, topdown, nullptr);
}

template <class R>
QReadout<R> readout_of(const NetworkConfig& cfg, const NetworkActivations<R>& acts) {
  std::vector<Vec<R>> per_cell;
  per_cell.reserve(acts.cells.size());
  for (const auto& c : acts.cells) {
    if (c.q.empty()) throw std::invalid_argument("readout_of: activations carry no Q (hidden-only sweep)");
    per_cell.push_back(c.q);
  }
  return make_readout(cfg, std::move(per_cell));
}

template <class R>
TemporalState<R> state_of(const NetworkConfig& cfg, const NetworkActivations<R>& acts) {
  TemporalState<R> s;
  s.h.reserve(acts.cells.size());
  for (const auto& c : acts.cells) s.h.push_back(c.h);
  if (static_cast<int>(s.h.size()) != cfg.n_layers()) la::shape_error("state_of", "layer count mismatch");
  return s;
}

template <class R>
ActResult<R> act_forward(const NetworkParams<R>& params, const NetworkConfig& cfg, const TemporalState<R>& state,
                         const Vec<R>& obs) {
  ActResult<R> out;
  out.topdown = topdown_inputs(cfg, state);
  auto acts = net_forward(params.online, cfg, obs, out.topdown);
  out.q = readout_of(cfg, acts);
  out.next_state = state_of(cfg, acts);
  return out;
}

bool explore(double epsilon, SeededRng& rng) { return rng.next_double() < epsilon; }

template <class R>
int greedy_action(const Vec<R>& q) {
  if (q.empty()) throw std::invalid_argument("greedy_action: empty Q");
  int best = 0;
  for (int a = 1; a < static_cast<int>(q.size()); ++a)
    if (q[a] > q[best]) best = a;  // strict: ties keep the lowest index
  return best;
}

template <class R>
int select_action(const Vec<R>& q_ensemble, double epsilon, SeededRng& rng) {
  if (epsilon < 0.0 || epsilon > 1.0) throw std::invalid_argument("select_action: epsilon outside [0,1]");
  if (explore(epsilon, rng)) return static_cast<int>(rng.bounded(static_cast<std::uint32_t>(q_ensemble.size())));
  return greedy_action(q_ensemble);
}

template <class R>
void net_backward_accum(const std::vector<CellParams<R>>& cells, const NetworkConfig& cfg,
                        const NetworkActivations<R>& acts, const std::vector<Vec<R>>& dLdQ,
                        std::vector<CellGrads<R>>& grads) {
  const int L = cfg.n_layers();
  if (static_cast<int>(acts.cells.size()) != L || static_cast<int>(dLdQ.size()) != L ||
      static_cast<int>(grads.size()) != L)
    la::shape_error("net_backward", "per-layer container size mismatch");
  for (int l = 0; l < L; ++l) backward_accum(cells[l], cfg.cell_config(l), acts.cells[l], dLdQ[l], grads[l]);
}

LocalityReport locality_check(const NetworkConfig& cfg, std::uint64_t seed, int params_per_cell) {
  cfg.validate();
  SeededRng rng(seed);
  auto params = NetworkParams<double>::init(cfg, rng);
  const int L = cfg.n_layers();

  // A random previous step so the top-down path carries nonzero signal.
  auto state = TemporalState<double>::zeros(cfg);
  for (auto& v : state.h)
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  Vec<double> obs(cfg.obs_dim);
  for (auto& x : obs) x = rng.uniform(-1.0, 1.0);
  auto topdown = topdown_inputs(cfg, state);

  auto acts = net_forward(params.online, cfg, obs, topdown);
  std::vector<Vec<double>> dLdQ(L);
  for (auto& v : dLdQ) {
    v.resize(cfg.n_actions);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
  }
  std::vector<CellGrads<double>> grads;
  for (int l = 0; l < L; ++l) grads.push_back(CellGrads<double>::zeros(cfg.cell_config(l)));
  net_backward_accum(params.online, cfg, acts, dLdQ, grads);

  LocalityReport rep;
  rep.pass = true;

  // Leak probe: an upstream loss touching only layer 1 must leave every other
  // layer's gradient exactly zero.
  if (L > 1) {
    std::vector<Vec<double>> only1(L, Vec<double>(cfg.n_actions, 0.0));
    only1[1] = dLdQ[1];
    std::vector<CellGrads<double>> g1;
    for (int l = 0; l < L; ++l) g1.push_back(CellGrads<double>::zeros(cfg.cell_config(l)));
    net_backward_accum(params.online, cfg, acts, only1, g1);
    for (int l = 0; l < L; ++l) {
      if (l == 1) continue;
      for (const auto* m : {&g1[l].W_h, &g1[l].W_att1, &g1[l].W_att2})
        for (double v : m->data)
          if (v != 0.0) rep.cross_cell_leak = true;
    }
  }

  // Finite differences of each cell's own loss with its recorded input X held
  // fixed.  A uniform stride covers each matrix end to end.
  const double h = 1e-4;
  for (int l = 0; l < L; ++l) {
    const CellConfig cc = cfg.cell_config(l);
    const Vec<double>& X = acts.cells[l].X;
    auto cell_loss = [&](const CellParams<double>& p) {
      auto a = cell_forward(p, cc, X);
      double s = 0;
      for (int k = 0; k < cfg.n_actions; ++k) s += dLdQ[l][k] * a.q[k];
      return s;
    };
    auto probe = [&](Matrix<double>& m, const Matrix<double>& g, const char* name) {
      const size_t total = m.size();
      const size_t step = std::max<size_t>(1, total / std::max(1, params_per_cell / 3));
      for (size_t idx = 0; idx < total; idx += step) {
        const double saved = m.data[idx];
        m.data[idx] = saved + h;
        const double lp = cell_loss(params.online[l]);
        m.data[idx] = saved - h;
        const double lm = cell_loss(params.online[l]);
        m.data[idx] = saved;
        const double fd = (lp - lm) / (2 * h);
        const double an = g.data[idx];
        const double rel = std::fabs(fd - an) / std::max({std::fabs(fd), std::fabs(an), 1e-6});
        rep.checked++;
        if (rel > rep.max_rel_err) {
          rep.max_rel_err = rel;
          rep.worst = "layer " + std::to_string(l) + " " + name + "[" + std::to_string(idx) + "]";
        }
      }
    };
    probe(params.online[l].W_h, grads[l].W_h, "W_h");
    probe(params.online[l].W_att1, grads[l].W_att1, "W_att1");
    probe(params.online[l].W_att2, grads[l].W_att2, "W_att2");
  }
  rep.pass = rep.max_rel_err < 1e-4 && !rep.cross_cell_leak;
  return rep;
}

// ---------------------------------------------------------------------------
// Checkpoints
// ---------------------------------------------------------------------------

void save_checkpoint(const std::string& path, const std::string& config_digest, int precision, long long step,
                     const std::vector<NamedMatrix>& matrices) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("save_checkpoint: cannot open " + path);
  nlohmann::json header;
  header["config_digest"] = config_digest;
  header["precision"] = precision;
  header["step"] = step;
  auto& list = header["matrices"] = nlohmann::json::array();
  for (const auto& m : matrices) list.push_back({{"name", m.name}, {"rows", m.values.rows}, {"cols", m.values.cols}});
  out << "arqlab-checkpoint v1\n" << header.dump() << "\n";
  for (const auto& m : matrices)
    out.write(reinterpret_cast<const char*>(m.values.data.data()),
              static_cast<std::streamsize>(m.values.size() * sizeof(float)));
  if (!out) throw std::runtime_error("save_checkpoint: write failed for " + path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("load_checkpoint: cannot open " + path);
  std::string magic, header_line;
  std::getline(in, magic);
  if (magic != "arqlab-checkpoint v1") throw std::runtime_error("load_checkpoint: bad magic in " + path);
  std::getline(in, header_line);
  nlohmann::json header = nlohmann::json::parse(header_line);
  Checkpoint ck;
  ck.config_digest = header.at("config_digest").get<std::string>();
  ck.precision = header.at("precision").get<int>();
  ck.step = header.at("step").get<long long>();
  for (const auto& item : header.at("matrices")) {
    NamedMatrix m;
    m.name = item.at("name").get<std::string>();
    m.values = Matrix<float>(item.at("rows").get<int>(), item.at("cols").get<int>());
    in.read(reinterpret_cast<char*>(m.values.data.data()), static_cast<std::streamsize>(m.values.size() * sizeof(float)));
    if (!in) throw std::runtime_error("load_checkpoint: truncated payload in " + path);
    ck.matrices.push_back(std::move(m));
  }
  return ck;
}

namespace {

template <class R>
Matrix<float> to_f32(const Matrix<R>& m) {
  Matrix<float> out(m.rows, m.cols);
  for (size_t i = 0; i < m.size(); ++i) out.data[i] = static_cast<float>(m.data[i]);
  return out;
}

template <class R>
void from_f32(const Matrix<float>& src, Matrix<R>& dst, const std::string& name) {
  if (src.rows != dst.rows || src.cols != dst.cols)
    throw std::runtime_error("checkpoint matrix " + name + " has shape " + std::to_string(src.rows) + "x" +
                             std::to_string(src.cols) + ", expected " + std::to_string(dst.rows) + "x" +
                             std::to_string(dst.cols));
  for (size_t i = 0; i < src.size(); ++i) dst.data[i] = static_cast<R>(src.data[i]);
}

}  // namespace

template <class R>
std::vector<NamedMatrix> network_matrices(const NetworkConfig& cfg, const NetworkParams<R>& params) {
  std::vector<NamedMatrix> out;
  for (int l = 0; l < cfg.n_layers(); ++l) {
    const std::string p = "cell" + std::to_string(l) + ".";
    out.push_back({p + "W_h", to_f32(params.online[l].W_h)});
    out.push_back({p + "W_att1", to_f32(params.online[l].W_att1)});
    out.push_back({p + "W_att2", to_f32(params.online[l].W_att2)});
  }
  return out;
}

template <class R>
void load_network_matrices(const NetworkConfig& cfg, const std::vector<NamedMatrix>& mats, NetworkParams<R>& params) {
  if (static_cast<int>(mats.size()) != cfg.n_layers() * 3)
    throw std::runtime_error("checkpoint holds " + std::to_string(mats.size()) + " matrices, expected " +
                             std::to_string(cfg.n_layers() * 3));
  size_t i = 0;
  for (int l = 0; l < cfg.n_layers(); ++l) {
    const std::string p = "cell" + std::to_string(l) + ".";
    for (auto [suffix, dst] : {std::pair{"W_h", &params.online[l].W_h}, {"W_att1", &params.online[l].W_att1},
                               {"W_att2", &params.online[l].W_att2}}) {
      if (mats[i].name != p + suffix) throw std::runtime_error("checkpoint matrix order: got " + mats[i].name);
      from_f32(mats[i].values, *dst, mats[i].name);
      ++i;
    }
  }
  params.sync_target();
}

template struct TemporalState<float>;
template struct TemporalState<double>;
template struct NetworkParams<float>;
template struct NetworkParams<double>;

template std::vector<Vec<float>> topdown_inputs<float>(const NetworkConfig&, const TemporalState<float>&);
template std::vector<Vec<double>> topdown_inputs<double>(const NetworkConfig&, const TemporalState<double>&);
template NetworkActivations<float> net_forward<float>(const std::vector<CellParams<float>>&, const NetworkConfig&, const Vec<float>&, const std::vector<Vec<float>>&, const std::vector<int>&);
template NetworkActivations<double> net_forward<double>(const std::vector<CellParams<double>>&, const NetworkConfig&, const Vec<double>&, const std::vector<Vec<double>>&, const std::vector<int>&);
template NetworkActivations<float> net_forward_hidden<float>(const std::vector<CellParams<float>>&, const NetworkConfig&, const Vec<float>&, const std::vector<Vec<float>>&);
template NetworkActivations<double> net_forward_hidden<double>(const std::vector<CellParams<double>>&, const NetworkConfig&, const Vec<double>&, const std::vector<Vec<double>>&);
template QReadout<float> readout_of<float>(const NetworkConfig&, const NetworkActivations<float>&);
template QReadout<double> readout_of<double>(const NetworkConfig&, const NetworkActivations<double>&);
template TemporalState<float> state_of<float>(const NetworkConfig&, const NetworkActivations<float>&);
template TemporalState<double> state_of<double>(const NetworkConfig&, const NetworkActivations<double>&);
template ActResult<float> act_forward<float>(const NetworkParams<float>&, const NetworkConfig&, const TemporalState<float>&, const Vec<float>&);
template ActResult<double> act_forward<double>(const NetworkParams<double>&, const NetworkConfig&, const TemporalState<double>&, const Vec<double>&);
template int greedy_action<float>(const Vec<float>&);
template int greedy_action<double>(const Vec<double>&);
template int select_action<float>(const Vec<float>&, double, SeededRng&);
template int select_action<double>(const Vec<double>&, double, SeededRng&);
template void net_backward_accum<float>(const std::vector<CellParams<float>>&, const NetworkConfig&, const NetworkActivations<float>&, const std::vector<Vec<float>>&, std::vector<CellGrads<float>>&);
template void net_backward_accum<double>(const std::vector<CellParams<double>>&, const NetworkConfig&, const NetworkActivations<double>&, const std::vector<Vec<double>>&, std::vector<CellGrads<double>>&);
template QReadout<float> make_readout<float>(const NetworkConfig&, std::vector<Vec<float>>);
template QReadout<double> make_readout<double>(const NetworkConfig&, std::vector<Vec<double>>);
template std::vector<NamedMatrix> network_matrices<float>(const NetworkConfig&, const NetworkParams<float>&);
template std::vector<NamedMatrix> network_matrices<double>(const NetworkConfig&, const NetworkParams<double>&);
template void load_network_matrices<float>(const NetworkConfig&, const std::vector<NamedMatrix>&, NetworkParams<float>&);
template void load_network_matrices<double>(const NetworkConfig&, const std::vector<NamedMatrix>&, NetworkParams<double>&);

}  // namespace arq
