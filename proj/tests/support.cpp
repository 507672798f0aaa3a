#include "support.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>

#include "gactgan/rng.hpp"
#include "gactgan/schema.hpp"
#include "gactgan/trainer.hpp"

namespace support {

using Eigen::MatrixXd;
using Eigen::VectorXd;

Table bimodal_toy(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::bernoulli_distribution coin(0.5), copy(0.7);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::discrete_distribution<int> low{0.6, 0.3, 0.1}, high{0.1, 0.3, 0.6};
  std::uniform_int_distribution<int> any(0, 2);
  Table t;
  t.header = {"x", "a", "b"};
  for (std::size_t i = 0; i < n; ++i) {
    bool right = coin(rng);
    double x = (right ? 5.0 : -5.0) + noise(rng);
    int a = right ? high(rng) : low(rng);
    int b = copy(rng) ? a : any(rng);
    t.rows.push_back({fmt::format("{:.6f}", x), fmt::format("a{}", a), fmt::format("b{}", b)});
  }
  return t;
}

Table random_table(std::size_t n, std::size_t cats, std::size_t labels, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<double> weights;
  for (std::size_t l = 0; l < labels; ++l) weights.push_back(1.0 + static_cast<double>(l));
  std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
  std::normal_distribution<double> normal(0.0, 1.0);
  Table t;
  for (std::size_t c = 0; c < cats; ++c) t.header.push_back(fmt::format("c{}", c));
  t.header.push_back("v");
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::string> row;
    for (std::size_t c = 0; c < cats; ++c) row.push_back(fmt::format("l{}", pick(rng)));
    row.push_back(fmt::format("{:.1f}", normal(rng)));
    t.rows.push_back(std::move(row));
  }
  return t;
}

TinyModel tiny_model(std::uint64_t seed) {
  Rng rng(seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::bernoulli_distribution coin(0.35);
  Table t;
  t.header = {"x", "c"};
  for (int i = 0; i < 300; ++i) t.rows.push_back({fmt::format("{:.5f}", normal(rng)), coin(rng) ? "v" : "u"});
  TransformerOptions opts;
  opts.max_modes = 1;
  TinyModel m;
  m.transformer = DataTransformer::fit(t, infer_schema(t), opts);
  m.encoded = m.transformer.encode_table(t, rng);
  m.sampler = CondSampler(m.transformer.layout(), m.encoded);
  m.generator = GeneratorNet(make_generator_arch(m.transformer.layout(), 1, {2}, 0.2));
  m.generator.initialize(rng);
  DiscriminatorArch d;
  d.sample_dim = m.transformer.layout().width + m.transformer.layout().cond_width;
  d.pac = 2;
  d.hidden = {2, 2};
  m.critic = DiscriminatorNet(d);
  m.critic.initialize(rng);
  return m;
}

double relative_error(const VectorXd& analytic, const VectorXd& numeric) {
  double scale = std::max({analytic.norm(), numeric.norm(), 1e-8});
  return (analytic - numeric).norm() / scale;
}

VectorXd central_difference(const std::function<double(const VectorXd&)>& f, const VectorXd& theta,
                            double h) {
  VectorXd g(theta.size());
  VectorXd probe = theta;
  for (Eigen::Index i = 0; i < theta.size(); ++i) {
    probe[i] = theta[i] + h;
    double up = f(probe);
    probe[i] = theta[i] - h;
    double down = f(probe);
    probe[i] = theta[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

namespace {

constexpr double kStep = 1e-6;
constexpr std::size_t kBatch = 4;

VectorXd random_vector(Eigen::Index n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  VectorXd v(n);
  for (auto& x : v) x = normal(rng);
  return v;
}

}  // namespace

GradientReport check_critic_gradient(LossKind loss, std::size_t points, std::uint64_t seed) {
  TinyModel m = tiny_model(seed);
  Rng rng(child_seed(seed, {1}));
  GradientReport report;
  const auto pac = m.critic.arch().pac;
  for (std::size_t p = 0; p < points; ++p) {
    CondBatch cond = m.sampler.sample_train(kBatch, rng);
    MatrixXd real(m.encoded.rows(), static_cast<Eigen::Index>(kBatch));
    for (std::size_t i = 0; i < kBatch; ++i) real.col(static_cast<Eigen::Index>(i)) = m.encoded.col(static_cast<Eigen::Index>(cond.real_rows[i]));
    MatrixXd fake = random_vector(real.size(), rng).reshaped(real.rows(), real.cols());
    MatrixXd real_packed = critic_input(real, cond.vectors, pac);
    MatrixXd fake_packed = critic_input(fake, cond.vectors, pac);
    VectorXd theta = random_vector(static_cast<Eigen::Index>(m.critic.num_params()), rng);
    const Rng replay = rng;
    rng.discard(1000);

    DiscriminatorNet net = m.critic;
    auto objective = [&](const VectorXd& th, VectorXd* grad) {
      net.set_params(th);
      Rng r = replay;
      auto step = discriminator_objective(loss, net, real_packed, fake_packed, 10.0, r);
      if (grad) *grad = step.grad;
      return step.loss;
    };
    VectorXd analytic;
    objective(theta, &analytic);
    VectorXd numeric = central_difference([&](const VectorXd& th) { return objective(th, nullptr); }, theta, kStep);
    report.worst = std::max(report.worst, relative_error(analytic, numeric));
    ++report.points;
  }
  return report;
}

GradientReport check_generator_gradient(LossKind loss, std::size_t points, std::uint64_t seed) {
  TinyModel m = tiny_model(seed);
  Rng rng(child_seed(seed, {2}));
  GradientReport report;
  const auto& layout = m.transformer.layout();
  for (std::size_t p = 0; p < points; ++p) {
    CondBatch cond = m.sampler.sample_train(kBatch, rng);
    MatrixXd noise = standard_normal(1, static_cast<Eigen::Index>(kBatch), rng);
    DiscriminatorNet critic = m.critic;
    critic.set_params(random_vector(static_cast<Eigen::Index>(critic.num_params()), rng));
    VectorXd theta = random_vector(static_cast<Eigen::Index>(m.generator.num_params()), rng);
    const Rng replay = rng;
    rng.discard(1000);

    GeneratorNet net = m.generator;
    auto objective = [&](const VectorXd& th, VectorXd* grad) {
      net.set_params(th);
      Rng r = replay;
      auto step = generator_objective(loss, net, critic, noise, cond, layout, r);
      if (grad) *grad = step.grad;
      return step.loss;
    };
    VectorXd analytic;
    objective(theta, &analytic);
    VectorXd numeric = central_difference([&](const VectorXd& th) { return objective(th, nullptr); }, theta, kStep);
    report.worst = std::max(report.worst, relative_error(analytic, numeric));
    ++report.points;
  }
  return report;
}

namespace {

const ColumnSchema& find_column(const Schema& schema, const std::string& name) {
  for (const auto& c : schema)
    if (c.name == name) return c;
  throw std::runtime_error("no column " + name);
}

std::size_t index_of(const Table& t, const std::string& name) {
  for (std::size_t i = 0; i < t.header.size(); ++i)
    if (t.header[i] == name) return i;
  throw std::runtime_error("no column " + name);
}

}  // namespace

double roc_oracle(const Table& original, const Table& synthetic,
                  const std::vector<std::string>& columns, const Schema& schema) {
  // Equal-frequency edges straight from the definition.
  std::vector<std::vector<double>> edges(columns.size());
  for (std::size_t c = 0; c < columns.size(); ++c) {
    if (find_column(schema, columns[c]).kind != ColumnKind::continuous) continue;
    std::vector<double> v;
    for (const auto& row : original.rows) v.push_back(std::stod(row[index_of(original, columns[c])]));
    std::sort(v.begin(), v.end());
    for (std::size_t i = 1; i < 10; ++i) {
      double e = v[std::min(v.size() - 1, i * v.size() / 10)];
      if (std::find(edges[c].begin(), edges[c].end(), e) == edges[c].end()) edges[c].push_back(e);
    }
  }
  auto cell_of = [&](const Table& t, const std::vector<std::string>& row) {
    std::vector<std::string> cell;
    for (std::size_t c = 0; c < columns.size(); ++c) {
      const std::string& raw = row[index_of(t, columns[c])];
      if (find_column(schema, columns[c]).kind == ColumnKind::continuous) {
        double x = std::stod(raw);
        int bin = 0;
        for (double e : edges[c]) bin += e <= x ? 1 : 0;
        cell.push_back("bin" + std::to_string(bin));
      } else {
        cell.push_back(raw);
      }
    }
    return cell;
  };
  std::vector<std::vector<std::string>> orig_cells, syn_cells, all;
  for (const auto& row : original.rows) orig_cells.push_back(cell_of(original, row));
  for (const auto& row : synthetic.rows) syn_cells.push_back(cell_of(synthetic, row));
  for (const auto* list : {&orig_cells, &syn_cells})
    for (const auto& c : *list)
      if (std::find(all.begin(), all.end(), c) == all.end()) all.push_back(c);
  double total = 0.0;
  for (const auto& cell : all) {
    double a = static_cast<double>(std::count(orig_cells.begin(), orig_cells.end(), cell));
    double b = static_cast<double>(std::count(syn_cells.begin(), syn_cells.end(), cell));
    total += std::min(a, b) / std::max(a, b);
  }
  return total / static_cast<double>(all.size());
}

TcapResult tcap_oracle(const Table& original, const Table& synthetic,
                       const std::vector<std::string>& keys, const std::string& target,
                       double threshold) {
  auto same_keys = [&](const Table& ta, const std::vector<std::string>& ra, const Table& tb,
                       const std::vector<std::string>& rb) {
    for (const auto& k : keys)
      if (ra[index_of(ta, k)] != rb[index_of(tb, k)]) return false;
    return true;
  };
  auto same_target = [&](const Table& ta, const std::vector<std::string>& ra, const Table& tb,
                         const std::vector<std::string>& rb) {
    return ra[index_of(ta, target)] == rb[index_of(tb, target)];
  };
  TcapResult r;
  double sum = 0.0;
  for (const auto& s : synthetic.rows) {
    double key = 0, both = 0;
    for (const auto& o : synthetic.rows)
      if (same_keys(synthetic, s, synthetic, o)) {
        ++key;
        if (same_target(synthetic, s, synthetic, o)) ++both;
      }
    if (both / key < threshold) continue;
    ++r.attack_set;
    double okey = 0, oboth = 0;
    for (const auto& o : original.rows)
      if (same_keys(synthetic, s, original, o)) {
        ++okey;
        if (same_target(synthetic, s, original, o)) ++oboth;
      }
    sum += okey > 0 ? oboth / okey : 0.0;
  }
  r.tcap = r.attack_set ? sum / static_cast<double>(r.attack_set) : 0.0;
  double modal = 0;
  for (const auto& s : synthetic.rows) {
    double c = 0;
    for (const auto& o : synthetic.rows) c += same_target(synthetic, s, synthetic, o) ? 1 : 0;
    modal = std::max(modal, c);
  }
  r.weap_baseline = modal / static_cast<double>(synthetic.rows.size());
  if (r.attack_set == 0 || r.weap_baseline >= 1.0)
    r.risk = 0.0;
  else
    r.risk = std::min(1.0, std::max(0.0, (r.tcap - r.weap_baseline) / (1.0 - r.weap_baseline)));
  return r;
}

std::vector<bool> pareto_oracle(const std::vector<RuPoint>& points) {
  std::vector<bool> front(points.size(), true);
  for (std::size_t i = 0; i < points.size(); ++i)
    for (std::size_t j = 0; j < points.size(); ++j) {
      const auto& a = points[j];
      const auto& b = points[i];
      if (a.utility >= b.utility && a.risk <= b.risk && (a.utility > b.utility || a.risk < b.risk))
        front[i] = false;
    }
  return front;
}

}  // namespace support
