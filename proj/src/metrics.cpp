#include "gactgan/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <set>

#include <fmt/format.h>

#include "gactgan/error.hpp"
#include "gactgan/logistic.hpp"

namespace gactgan {

using Eigen::MatrixXd;
using Eigen::VectorXd;

namespace {

constexpr char kKeySep = '\x1f';

const ColumnSchema& schema_column(const Schema& schema, const std::string& name) {
  for (const auto& c : schema)
    if (c.name == name) return c;
  throw DataError(fmt::format("column '{}' is not in the schema", name));
}

double numeric_cell(const std::string& cell, const std::string& column) {
  auto v = parse_number(cell);
  if (!v) throw DataError(fmt::format("column '{}': '{}' is not numeric", column, cell));
  return *v;
}

std::string join_key(const std::vector<std::string>& row, const std::vector<std::size_t>& idx) {
  std::string key;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (i) key.push_back(kKeySep);
    key += row[idx[i]];
  }
  return key;
}

}  // namespace

std::size_t ColumnBins::bin(double value) const {
  return static_cast<std::size_t>(std::upper_bound(edges.begin(), edges.end(), value) -
                                  edges.begin());
}

ColumnBins equal_frequency_bins(const Table& table, std::size_t column, std::size_t bins) {
  std::vector<double> values;
  values.reserve(table.rows.size());
  for (const auto& row : table.rows) values.push_back(numeric_cell(row[column], table.header[column]));
  std::sort(values.begin(), values.end());
  ColumnBins out;
  if (values.empty()) return out;
  for (std::size_t i = 1; i < bins; ++i) {
    double edge = values[std::min(values.size() - 1, i * values.size() / bins)];
    if (out.edges.empty() || edge > out.edges.back()) out.edges.push_back(edge);
  }
  return out;
}

double ratio_of_counts(const Table& original, const Table& synthetic,
                       const std::vector<std::string>& columns, const Schema& schema) {
  if (columns.empty()) throw UsageError("ratio of counts needs at least one column");
  std::vector<std::size_t> orig_idx, syn_idx;
  std::vector<std::optional<ColumnBins>> bins;
  for (const auto& name : columns) {
    const auto& col = schema_column(schema, name);
    orig_idx.push_back(original.column_index(name));
    syn_idx.push_back(synthetic.column_index(name));
    if (col.kind == ColumnKind::continuous)
      bins.push_back(equal_frequency_bins(original, orig_idx.back()));
    else
      bins.emplace_back();
  }
  auto tabulate = [&](const Table& t, const std::vector<std::size_t>& idx) {
    std::map<std::string, std::size_t> counts;
    std::vector<std::string> cells(idx.size());
    std::vector<std::size_t> pos(idx.size());
    std::iota(pos.begin(), pos.end(), std::size_t{0});
    for (const auto& row : t.rows) {
      for (std::size_t i = 0; i < idx.size(); ++i)
        cells[i] = bins[i] ? fmt::format("#{}", bins[i]->bin(numeric_cell(row[idx[i]], columns[i])))
                           : row[idx[i]];
      ++counts[join_key(cells, pos)];
    }
    return counts;
  };
  auto orig = tabulate(original, orig_idx);
  auto syn = tabulate(synthetic, syn_idx);
  double total = 0.0;
  std::size_t cells = 0;
  for (const auto& [key, co] : orig) {
    auto it = syn.find(key);
    double cs = it == syn.end() ? 0.0 : static_cast<double>(it->second);
    double a = static_cast<double>(co);
    total += std::min(a, cs) / std::max(a, cs);
    ++cells;
  }
  for (const auto& [key, cs] : syn)
    if (!orig.count(key)) ++cells;
  return cells ? total / static_cast<double>(cells) : 1.0;
}

double interval_overlap(double lo1, double hi1, double lo2, double hi2) {
  double overlap = std::min(hi1, hi2) - std::max(lo1, lo2);
  double j = 0.5 * (overlap / (hi1 - lo1) + overlap / (hi2 - lo2));
  return std::isfinite(j) ? std::max(0.0, j) : 0.0;
}

namespace {

struct Design {
  std::vector<std::string> names;
  MatrixXd x;
  VectorXd y;
};

Design build_design(const Table& t, const Schema& schema, const std::string& outcome,
                    const std::vector<std::string>& predictors) {
  const auto& out_col = schema_column(schema, outcome);
  if (out_col.kind != ColumnKind::categorical || out_col.categories.size() != 2)
    throw DataError(fmt::format("CIO outcome '{}' must be a binary categorical", outcome));
  Design d;
  d.names.push_back("(intercept)");
  std::vector<std::pair<std::size_t, const ColumnSchema*>> cols;
  for (const auto& p : predictors) {
    const auto& c = schema_column(schema, p);
    cols.emplace_back(t.column_index(p), &c);
    if (c.kind == ColumnKind::continuous)
      d.names.push_back(p);
    else
      for (std::size_t k = 1; k < c.categories.size(); ++k)
        d.names.push_back(fmt::format("{}={}", p, c.categories[k]));
  }
  const auto n = static_cast<Eigen::Index>(t.rows.size());
  d.x = MatrixXd::Zero(n, static_cast<Eigen::Index>(d.names.size()));
  d.y.resize(n);
  const std::size_t yi = t.column_index(outcome);
  for (Eigen::Index r = 0; r < n; ++r) {
    const auto& row = t.rows[static_cast<std::size_t>(r)];
    d.y[r] = row[yi] == out_col.categories[1] ? 1.0 : 0.0;
    if (row[yi] != out_col.categories[0] && row[yi] != out_col.categories[1])
      throw DataError(fmt::format("CIO outcome '{}' has unexpected label '{}'", outcome, row[yi]));
    d.x(r, 0) = 1.0;
    Eigen::Index j = 1;
    for (const auto& [idx, c] : cols) {
      if (c->kind == ColumnKind::continuous) {
        d.x(r, j++) = numeric_cell(row[idx], c->name);
        continue;
      }
      for (std::size_t k = 1; k < c->categories.size(); ++k, ++j)
        if (row[idx] == c->categories[k]) d.x(r, j) = 1.0;
    }
  }
  return d;
}

struct TableFit {
  std::vector<bool> estimable;
  VectorXd coef, std_err;  // full length; valid where estimable
  bool converged = false;
};

TableFit fit_table(const Design& d) {
  TableFit out;
  const auto p = d.x.cols();
  out.estimable.assign(static_cast<std::size_t>(p), false);
  out.coef = VectorXd::Zero(p);
  out.std_err = VectorXd::Zero(p);
  std::vector<Eigen::Index> keep{0};
  out.estimable[0] = true;
  for (Eigen::Index j = 1; j < p; ++j) {
    auto col = d.x.col(j);
    if (col.maxCoeff() > col.minCoeff()) {
      keep.push_back(j);
      out.estimable[static_cast<std::size_t>(j)] = true;
    }
  }
  MatrixXd sub(d.x.rows(), static_cast<Eigen::Index>(keep.size()));
  for (std::size_t i = 0; i < keep.size(); ++i) sub.col(static_cast<Eigen::Index>(i)) = d.x.col(keep[i]);
  auto fit = fit_logistic(sub, d.y);
  out.converged = fit.converged;
  if (!fit.converged) return out;
  for (std::size_t i = 0; i < keep.size(); ++i) {
    out.coef[keep[i]] = fit.coef[static_cast<Eigen::Index>(i)];
    out.std_err[keep[i]] = fit.std_err[static_cast<Eigen::Index>(i)];
  }
  return out;
}

// Standard errors beyond this mark a quasi-separated coefficient.
constexpr double kSeparationStdErr = 1e3;

}  // namespace

CioResult confidence_interval_overlap(const Table& original, const Table& synthetic,
                                      const Schema& schema, const std::string& outcome,
                                      const std::vector<std::string>& predictors) {
  Design d_orig = build_design(original, schema, outcome, predictors);
  Design d_syn = build_design(synthetic, schema, outcome, predictors);
  TableFit f_orig = fit_table(d_orig);
  TableFit f_syn = fit_table(d_syn);
  CioResult result;
  for (std::size_t j = 0; j < d_orig.names.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    bool ok = f_orig.converged && f_syn.converged && f_orig.estimable[j] && f_syn.estimable[j] &&
              std::isfinite(f_orig.std_err[jj]) && std::isfinite(f_syn.std_err[jj]) &&
              f_orig.std_err[jj] < kSeparationStdErr && f_syn.std_err[jj] < kSeparationStdErr;
    if (!ok) {
      result.excluded.push_back(d_orig.names[j]);
      continue;
    }
    double lo1 = f_orig.coef[jj] - kWaldZ95 * f_orig.std_err[jj];
    double hi1 = f_orig.coef[jj] + kWaldZ95 * f_orig.std_err[jj];
    double lo2 = f_syn.coef[jj] - kWaldZ95 * f_syn.std_err[jj];
    double hi2 = f_syn.coef[jj] + kWaldZ95 * f_syn.std_err[jj];
    result.coefficients.push_back(d_orig.names[j]);
    result.overlaps.push_back(interval_overlap(lo1, hi1, lo2, hi2));
  }
  if (result.overlaps.empty())
    throw NumericError("CIO: every coefficient was excluded (non-convergence or separation)");
  result.value = std::accumulate(result.overlaps.begin(), result.overlaps.end(), 0.0) /
                 static_cast<double>(result.overlaps.size());
  return result;
}

double rescaled_risk(double tcap, double weap) {
  if (weap >= 1.0) return 0.0;
  return std::clamp((tcap - weap) / (1.0 - weap), 0.0, 1.0);
}

TcapResult tcap_risk(const Table& original, const Table& synthetic,
                     const std::vector<std::string>& keys, const std::string& target,
                     double attack_threshold) {
  if (keys.empty()) throw UsageError("TCAP needs at least one key column");
  std::vector<std::size_t> ok_idx, sk_idx;
  for (const auto& k : keys) {
    ok_idx.push_back(original.column_index(k));
    sk_idx.push_back(synthetic.column_index(k));
  }
  const std::size_t ot = original.column_index(target);
  const std::size_t st = synthetic.column_index(target);

  std::map<std::string, std::size_t> syn_key, syn_key_target, orig_key, orig_key_target,
      syn_target;
  std::vector<std::string> syn_keys(synthetic.rows.size());
  for (std::size_t r = 0; r < synthetic.rows.size(); ++r) {
    const auto& row = synthetic.rows[r];
    syn_keys[r] = join_key(row, sk_idx);
    ++syn_key[syn_keys[r]];
    ++syn_key_target[syn_keys[r] + kKeySep + kKeySep + row[st]];
    ++syn_target[row[st]];
  }
  for (const auto& row : original.rows) {
    auto k = join_key(row, ok_idx);
    ++orig_key[k];
    ++orig_key_target[k + kKeySep + kKeySep + row[ot]];
  }

  TcapResult result;
  double total = 0.0;
  for (std::size_t r = 0; r < synthetic.rows.size(); ++r) {
    const auto& kt = syn_keys[r] + kKeySep + kKeySep + synthetic.rows[r][st];
    double weap = static_cast<double>(syn_key_target[kt]) / static_cast<double>(syn_key[syn_keys[r]]);
    if (weap < attack_threshold) continue;
    ++result.attack_set;
    auto ok = orig_key.find(syn_keys[r]);
    if (ok == orig_key.end()) continue;
    auto okt = orig_key_target.find(kt);
    double match = okt == orig_key_target.end() ? 0.0 : static_cast<double>(okt->second);
    total += match / static_cast<double>(ok->second);
  }
  result.tcap = result.attack_set ? total / static_cast<double>(result.attack_set) : 0.0;
  std::size_t modal = 0;
  for (const auto& [t, c] : syn_target) modal = std::max(modal, c);
  result.weap_baseline = synthetic.rows.empty()
                             ? 0.0
                             : static_cast<double>(modal) / static_cast<double>(synthetic.rows.size());
  result.risk = result.attack_set ? rescaled_risk(result.tcap, result.weap_baseline) : 0.0;
  return result;
}

double selection_score(double utility, double risk, double phi) {
  auto in_range = [](double v) { return v >= 0.0 && v <= 1.0; };
  if (!in_range(utility) || !in_range(risk) || !in_range(phi))
    throw UsageError(fmt::format("selection score inputs out of [0,1]: U={} R={} phi={}", utility,
                                 risk, phi));
  return phi * utility + (1.0 - phi) * (1.0 - risk);
}

std::vector<bool> pareto_front(const std::vector<RuPoint>& points) {
  const std::size_t n = points.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (points[a].utility != points[b].utility) return points[a].utility > points[b].utility;
    return points[a].risk < points[b].risk;
  });
  std::vector<bool> front(n, false);
  double best_risk_above = std::numeric_limits<double>::infinity();  // among strictly higher utility
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && points[order[j]].utility == points[order[i]].utility) ++j;
    const double group_min = points[order[i]].risk;  // sorted ascending within the group
    for (std::size_t k = i; k < j; ++k) {
      const double r = points[order[k]].risk;
      front[order[k]] = !(best_risk_above <= r || group_min < r);
    }
    best_risk_above = std::min(best_risk_above, group_min);
    i = j;
  }
  return front;
}

double aggregate_utility(std::optional<double> roc_mean, std::optional<double> cio_mean) {
  double sum = 0.0;
  int count = 0;
  if (roc_mean) {
    sum += *roc_mean;
    ++count;
  }
  if (cio_mean) {
    sum += *cio_mean;
    ++count;
  }
  return count ? sum / count : 0.0;
}

UtilitySpec UtilitySpec::resolved(const Schema& schema) const {
  UtilitySpec out = *this;
  auto check = [&](const std::string& name) { schema_column(schema, name); };
  if (out.roc_targets.empty()) {
    for (std::size_t i = 0; i < schema.size(); ++i) out.roc_targets.push_back({schema[i].name});
    for (std::size_t i = 0; i < schema.size(); ++i)
      for (std::size_t j = i + 1; j < schema.size(); ++j)
        out.roc_targets.push_back({schema[i].name, schema[j].name});
  }
  for (const auto& t : out.roc_targets) {
    if (t.empty()) throw UsageError("empty ROC tabulation");
    for (const auto& c : t) check(c);
  }
  if (out.cio) {
    const auto& oc = schema_column(schema, out.cio->outcome);
    if (oc.kind != ColumnKind::categorical || oc.categories.size() != 2)
      throw UsageError(fmt::format("CIO outcome '{}' must have exactly 2 categories", oc.name));
    for (const auto& p : out.cio->predictors) check(p);
  }
  if (out.tcap) {
    for (const auto& k : out.tcap->keys)
      if (schema_column(schema, k).kind != ColumnKind::categorical)
        throw UsageError(fmt::format("TCAP key '{}' must be categorical", k));
    if (schema_column(schema, out.tcap->target).kind != ColumnKind::categorical)
      throw UsageError(fmt::format("TCAP target '{}' must be categorical", out.tcap->target));
  }
  return out;
}

nlohmann::json UtilitySpec::to_json() const {
  nlohmann::json j{{"roc_targets", roc_targets}, {"attack_threshold", attack_threshold}};
  if (cio) j["cio"] = {{"outcome", cio->outcome}, {"predictors", cio->predictors}};
  if (tcap) j["tcap"] = {{"keys", tcap->keys}, {"target", tcap->target}};
  return j;
}

UtilitySpec UtilitySpec::from_json(const nlohmann::json& j) {
  static const std::set<std::string> known{"roc_targets", "cio", "tcap", "attack_threshold"};
  if (!j.is_object()) throw UsageError("utility spec must be an object");
  for (const auto& [key, value] : j.items())
    if (!known.count(key)) throw UsageError(fmt::format("unknown utility spec key '{}'", key));
  UtilitySpec s;
  try {
    if (j.contains("roc_targets"))
      s.roc_targets = j["roc_targets"].get<std::vector<std::vector<std::string>>>();
    if (j.contains("cio"))
      s.cio = CioTarget{j["cio"].at("outcome").get<std::string>(),
                        j["cio"].at("predictors").get<std::vector<std::string>>()};
    if (j.contains("tcap"))
      s.tcap = TcapTarget{j["tcap"].at("keys").get<std::vector<std::string>>(),
                          j["tcap"].at("target").get<std::string>()};
    if (j.contains("attack_threshold")) s.attack_threshold = j["attack_threshold"].get<double>();
  } catch (const nlohmann::json::exception& e) {
    throw UsageError(fmt::format("utility spec: {}", e.what()));
  }
  return s;
}

ReplicateMetrics evaluate_replicate(const Table& original, const Table& synthetic,
                                    const Schema& schema, const UtilitySpec& spec, double phi) {
  ReplicateMetrics m;
  double roc_total = 0.0;
  for (const auto& t : spec.roc_targets) roc_total += ratio_of_counts(original, synthetic, t, schema);
  m.roc = spec.roc_targets.empty() ? 0.0 : roc_total / static_cast<double>(spec.roc_targets.size());
  if (spec.cio) {
    try {
      auto cio = confidence_interval_overlap(original, synthetic, schema, spec.cio->outcome,
                                             spec.cio->predictors);
      m.cio = cio.value;
      if (!cio.excluded.empty())
        m.notes.push_back(fmt::format("CIO excluded {} coefficient(s)", cio.excluded.size()));
    } catch (const NumericError& e) {
      m.notes.push_back(e.what());
    }
  }
  m.utility = aggregate_utility(spec.roc_targets.empty() ? std::nullopt : std::optional(m.roc), m.cio);
  if (spec.tcap)
    m.risk = tcap_risk(original, synthetic, spec.tcap->keys, spec.tcap->target,
                       spec.attack_threshold)
                 .risk;
  m.selection_score = selection_score(m.utility, m.risk, phi);
  return m;
}

EvalReport summarize(std::vector<ReplicateMetrics> replicates, double phi) {
  EvalReport r;
  r.phi = phi;
  r.replicates = std::move(replicates);
  if (r.replicates.empty()) return r;
  const double n = static_cast<double>(r.replicates.size());
  double cio_sum = 0.0;
  std::size_t cio_n = 0;
  for (const auto& m : r.replicates) {
    r.roc_mean += m.roc / n;
    r.utility += m.utility / n;
    r.risk += m.risk / n;
    if (m.cio) {
      cio_sum += *m.cio;
      ++cio_n;
    }
  }
  if (cio_n) r.cio_mean = cio_sum / static_cast<double>(cio_n);
  r.utility = std::clamp(r.utility, 0.0, 1.0);
  r.risk = std::clamp(r.risk, 0.0, 1.0);
  r.selection_score = selection_score(r.utility, r.risk, phi);
  return r;
}

}  // namespace gactgan
