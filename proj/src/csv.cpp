#include "panelmix/csv.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"
#include "panelmix/errors.hpp"

namespace panelmix::io {

namespace {

std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> out;
  std::string field;
  std::stringstream ss(line);
  while (std::getline(ss, field, ',')) out.push_back(field);
  if (!line.empty() && line.back() == ',') out.emplace_back();
  return out;
}

double parse_double(const std::string& s, const std::string& what) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(s, &pos);
    if (pos != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw InputError("csv: cannot parse " + what + " value '" + s + "'");
  }
}

std::string fmt(double v) {
  char buf[40];
  if (v == std::floor(v) && std::fabs(v) < 1e15) {
    std::snprintf(buf, sizeof(buf), "%.0f", v);
  } else {
    std::snprintf(buf, sizeof(buf), "%.17g", v);
  }
  return buf;
}

}  // namespace

PanelData load_panel(const std::string& path, bool dynamic, int lag_offset, LoadReport* report) {
  if (lag_offset < 0) throw InputError("load_panel: negative lag offset");
  std::ifstream in(path);
  if (!in) throw InputError("load_panel: cannot open '" + path + "'");

  std::string line;
  if (!std::getline(in, line)) throw InputError("load_panel: empty file");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const std::vector<std::string> header = split_line(line);
  if (header.size() < 3 || header[0] != "unit_id" || header[1] != "time" || header[2] != "y")
    throw InputError("load_panel: header must start with unit_id,time,y");
  const int p = static_cast<int>(header.size()) - 3;

  struct Row {
    double y;
    Eigen::VectorXd z;
  };
  std::vector<std::string> unit_order;        // first-appearance order
  std::map<std::string, std::map<double, Row>> units;
  std::vector<double> times;

  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const std::vector<std::string> f = split_line(line);
    if (static_cast<int>(f.size()) != 3 + p)
      throw InputError("load_panel: line " + std::to_string(lineno) + " has " +
                       std::to_string(f.size()) + " fields, expected " + std::to_string(3 + p));
    const std::string& uid = f[0];
    const double t = parse_double(f[1], "time");
    Row row;
    row.y = parse_double(f[2], "y");
    row.z.resize(p);
    for (int j = 0; j < p; ++j) row.z[j] = parse_double(f[3 + j], header[3 + j]);
    auto [it, inserted] = units.try_emplace(uid);
    if (inserted) unit_order.push_back(uid);
    if (!it->second.emplace(t, std::move(row)).second)
      throw InputError("load_panel: duplicate (unit,time) for unit '" + uid + "' at time " + f[1]);
    times.push_back(t);
  }
  if (units.empty()) throw InputError("load_panel: no data rows");

  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());
  const int n_grid = static_cast<int>(times.size());

  std::vector<std::string> kept;
  std::vector<std::string> dropped;
  for (const auto& uid : unit_order) {
    if (static_cast<int>(units[uid].size()) == n_grid) {
      kept.push_back(uid);
    } else {
      dropped.push_back(uid);
    }
  }
  if (kept.empty()) throw InputError("load_panel: no unit covers the full time grid");

  const int offset = std::max(lag_offset, dynamic ? 1 : 0);
  const int T = n_grid - offset;
  if (T < 1)
    throw InputError("load_panel: only " + std::to_string(n_grid) +
                     " periods, not enough after lag adjustment");

  PanelData data;
  data.dynamic = dynamic;
  data.lag_offset = lag_offset;
  const int N = static_cast<int>(kept.size());
  data.y.resize(T, N);
  data.y0 = Eigen::VectorXd::Zero(N);
  data.z.assign(N, Eigen::MatrixXd(T, p));
  for (int i = 0; i < N; ++i) {
    const auto& rows = units[kept[i]];
    if (dynamic) data.y0[i] = rows.at(times[offset - 1]).y;
    for (int t = 0; t < T; ++t) {
      data.y(t, i) = rows.at(times[offset + t]).y;
      data.z[i].row(t) = rows.at(times[offset + t - lag_offset]).z;
    }
  }
  data.validate();

  if (report) {
    report->n_units = N;
    report->n_periods = T;
    report->n_covariates = p;
    report->n_dropped = static_cast<int>(dropped.size());
    report->dropped_units = std::move(dropped);
  }
  return data;
}

void write_panel_csv(const std::string& path, const PanelData& data) {
  std::ofstream out(path);
  if (!out) throw InputError("write_panel_csv: cannot open '" + path + "'");
  const int p = data.n_covariates();
  out << "unit_id,time,y";
  for (int j = 1; j <= p; ++j) out << ",z" << j;
  out << "\n";
  for (int i = 0; i < data.n_units(); ++i) {
    if (data.dynamic) {
      out << (i + 1) << ",0," << fmt(data.y0[i]);
      for (int j = 0; j < p; ++j) out << ",0";
      out << "\n";
    }
    for (int t = 0; t < data.n_periods(); ++t) {
      out << (i + 1) << "," << (t + 1) << "," << fmt(data.y(t, i));
      for (int j = 0; j < p; ++j) out << "," << fmt(data.z[i](t, j));
      out << "\n";
    }
  }
}

void write_draws_csv(const std::string& path, const DrawStore& store) {
  std::ofstream out(path);
  if (!out) throw InputError("write_draws_csv: cannot open '" + path + "'");
  out << "draw_id,block,index,value\n";
  for (std::size_t d = 0; d < store.records.size(); ++d) {
    const DrawRecord& rec = store.records[d];
    auto put = [&](const char* block, int index, double value) {
      out << d << "," << block << "," << index << "," << fmt(value) << "\n";
    };
    put("iter", 0, static_cast<double>(rec.iter));
    put("K", 0, rec.k);
    put("K_plus", 0, rec.kplus);
    if (store.dynamic) put("gamma", 0, rec.gamma);
    for (int j = 0; j < rec.beta.size(); ++j) put("beta", j + 1, rec.beta[j]);
    put("e0", 0, rec.e0);
    put("v", 0, rec.v);
    put("C0", 0, rec.C0);
    put("loglik", 0, rec.loglik);
    for (int k = 0; k < rec.k; ++k) {
      put("atom_alpha", k + 1, rec.atoms[k].alpha);
      put("atom_sigma2", k + 1, rec.atoms[k].sigma2);
      put("weight", k + 1, rec.weights[k]);
      put("count", k + 1, rec.counts[k]);
    }
    for (int i = 0; i < rec.alloc.size(); ++i) put("alloc", i + 1, rec.alloc[i]);
  }
}

DrawStore read_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("read_draws_csv: cannot open '" + path + "'");
  std::string line;
  if (!std::getline(in, line) || split_line(line)[0] != "draw_id")
    throw InputError("read_draws_csv: bad header");

  struct Cell {
    std::string block;
    int index;
    double value;
  };
  std::vector<std::vector<Cell>> by_draw;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto f = split_line(line);
    if (f.size() != 4) throw InputError("read_draws_csv: malformed line " + std::to_string(lineno));
    const auto d = static_cast<std::size_t>(parse_double(f[0], "draw_id"));
    if (d >= by_draw.size()) by_draw.resize(d + 1);
    by_draw[d].push_back({f[1], static_cast<int>(parse_double(f[2], "index")),
                          parse_double(f[3], "value")});
  }

  DrawStore store;
  for (const auto& cells : by_draw) {
    DrawRecord rec;
    int k = 0, p = 0, n_alloc = 0;
    for (const auto& c : cells) {
      if (c.block == "K") k = static_cast<int>(c.value);
      if (c.block == "beta") p = std::max(p, c.index);
      if (c.block == "alloc") n_alloc = std::max(n_alloc, c.index);
      if (c.block == "gamma") store.dynamic = true;
    }
    if (k < 1) throw InputError("read_draws_csv: draw without a K entry");
    rec.k = k;
    rec.atoms.resize(k);
    rec.weights = Eigen::VectorXd::Zero(k);
    rec.counts = Eigen::VectorXi::Zero(k);
    rec.beta = Eigen::VectorXd::Zero(p);
    rec.gamma = std::numeric_limits<double>::quiet_NaN();
    if (n_alloc > 0) rec.alloc = Eigen::VectorXi::Zero(n_alloc);
    store.n_covariates = std::max(store.n_covariates, p);
    for (const auto& c : cells) {
      if (c.block == "iter") rec.iter = static_cast<long>(c.value);
      else if (c.block == "K_plus") rec.kplus = static_cast<int>(c.value);
      else if (c.block == "gamma") rec.gamma = c.value;
      else if (c.block == "beta") rec.beta[c.index - 1] = c.value;
      else if (c.block == "e0") rec.e0 = c.value;
      else if (c.block == "v") rec.v = c.value;
      else if (c.block == "C0") rec.C0 = c.value;
      else if (c.block == "loglik") rec.loglik = c.value;
      else if (c.block == "atom_alpha") rec.atoms[c.index - 1].alpha = c.value;
      else if (c.block == "atom_sigma2") rec.atoms[c.index - 1].sigma2 = c.value;
      else if (c.block == "weight") rec.weights[c.index - 1] = c.value;
      else if (c.block == "count") rec.counts[c.index - 1] = static_cast<int>(c.value);
      else if (c.block == "alloc") rec.alloc[c.index - 1] = static_cast<int>(c.value);
      else if (c.block != "K") throw InputError("read_draws_csv: unknown block '" + c.block + "'");
    }
    store.records.push_back(std::move(rec));
  }
  return store;
}

void write_truth_json(const std::string& path, const ModelParams& params, const Allocations& alloc) {
  nlohmann::json j;
  if (params.gamma) j["gamma"] = *params.gamma;
  j["beta"] = std::vector<double>(params.beta.begin(), params.beta.end());
  j["weights"] = std::vector<double>(params.weights.begin(), params.weights.end());
  auto& atoms = j["atoms"] = nlohmann::json::array();
  for (const auto& a : params.atoms) atoms.push_back({a.alpha, a.sigma2});
  j["allocations"] = std::vector<int>(alloc.chi.begin(), alloc.chi.end());
  std::ofstream out(path);
  if (!out) throw InputError("write_truth_json: cannot open '" + path + "'");
  out << j.dump(2) << "\n";
}

}  // namespace panelmix::io
