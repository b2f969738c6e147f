#include "fflsim/datagen.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "fflsim/error.hpp"
#include "fflsim/kernels.hpp"

namespace fflsim {

using ordered_json = nlohmann::ordered_json;

double sample_truncated_normal(double mean, double sd, double lo, double hi,
                               RngStream& rng) {
  TruncatedNormal tn{mean, sd, lo, hi};
  double accept = tn.acceptance();
  require(accept >= 1e-6, Errc::numerical,
          "truncated normal acceptance probability below 1e-6");
  for (long attempt = 0; attempt < 100000000L; ++attempt) {
    double v = rng.gaussian(mean, sd);
    if (v >= lo && v <= hi) return v;
  }
  fail(Errc::numerical, "truncated normal rejection sampler stalled");
}

Scenario gen_two_agent_regression(const TwoAgentRegressionSpec& spec) {
  require(spec.n1 > 0 && spec.n2 > 0, Errc::invalid_argument, "sample counts must be positive");
  Scenario s;
  s.loss = LossModel{LossKind::ridge, spec.reg, 1, 1, /*intercept=*/true};
  RngStream root(spec.seed);
  const double means[2] = {spec.noise_mean1, spec.noise_mean2};
  const int counts[2] = {spec.n1, spec.n2};
  for (int k = 0; k < 2; ++k) {
    RngStream agent = root.derive("agent").derive(static_cast<std::uint64_t>(k));
    LocalDataset ds;
    ds.owner = k;
    ds.points.reserve(counts[k]);
    for (int i = 0; i < counts[k]; ++i) {
      double x = agent.uniform();
      double kappa = sample_truncated_normal(means[k], spec.noise_sd, spec.trunc_lo,
                                             spec.trunc_hi, agent);
      ds.points.push_back({{x}, -2.0 * x + 1.0 + kappa});
    }
    s.datasets.push_back(std::move(ds));
  }
  double n = spec.n1 + spec.n2;
  s.weights = {spec.n1 / n, spec.n2 / n};
  KnownDistributions known(2);
  for (int k = 0; k < 2; ++k)
    known[k] = {-2.0, 1.0, {means[k], spec.noise_sd, spec.trunc_lo, spec.trunc_hi}};
  s.known = known;
  s.origin = {{"generator", "two_agent_regression"},
              {"seed", std::to_string(spec.seed)},
              {"n1", std::to_string(spec.n1)},
              {"n2", std::to_string(spec.n2)},
              {"noise_mean1", std::to_string(spec.noise_mean1)},
              {"noise_mean2", std::to_string(spec.noise_mean2)},
              {"noise_sd", std::to_string(spec.noise_sd)}};
  s.validate();
  return s;
}

ClassDataset gen_gaussian_mixture(const GaussianMixtureSpec& spec) {
  require(spec.num_classes >= 2 && spec.feature_dim > 0, Errc::invalid_argument,
          "bad mixture spec");
  ClassDataset out;
  out.feature_dim = spec.feature_dim;
  out.num_classes = spec.num_classes;
  RngStream root(spec.seed);
  RngStream means_rng = root.derive("means");
  std::vector<Vec> means(spec.num_classes, Vec(spec.feature_dim));
  for (auto& m : means) {
    for (auto& v : m) v = means_rng.gaussian();
    double norm = std::sqrt(kern::nrm2sq(m.data(), m.size()));
    kern::scal(spec.mean_scale / norm, m.data(), m.size());
  }
  auto draw = [&](RngStream& rng, int n, std::vector<DataPoint>& into) {
    into.reserve(n);
    for (int i = 0; i < n; ++i) {
      int c = i % spec.num_classes;  // balanced classes
      DataPoint p;
      p.x.resize(spec.feature_dim);
      for (int j = 0; j < spec.feature_dim; ++j)
        p.x[j] = means[c][j] + spec.noise_sd * rng.gaussian();
      p.y = c;
      into.push_back(std::move(p));
    }
  };
  RngStream train_rng = root.derive("train");
  RngStream test_rng = root.derive("test");
  draw(train_rng, spec.n_train, out.train);
  draw(test_rng, spec.n_test, out.test);
  return out;
}

namespace {

std::uint32_t read_be32(std::istream& in, const std::string& path) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  require(static_cast<bool>(in), Errc::io, "truncated IDX header in " + path);
  return (std::uint32_t(b[0]) << 24) | (std::uint32_t(b[1]) << 16) |
         (std::uint32_t(b[2]) << 8) | std::uint32_t(b[3]);
}

}  // namespace

ClassDataset load_idx_dataset(const std::string& images_path,
                              const std::string& labels_path) {
  std::ifstream img(images_path, std::ios::binary);
  require(static_cast<bool>(img), Errc::io, "cannot open " + images_path);
  std::ifstream lab(labels_path, std::ios::binary);
  require(static_cast<bool>(lab), Errc::io, "cannot open " + labels_path);

  require(read_be32(img, images_path) == 0x00000803u, Errc::io,
          "bad IDX image magic in " + images_path);
  std::uint32_t n_img = read_be32(img, images_path);
  std::uint32_t rows = read_be32(img, images_path);
  std::uint32_t cols = read_be32(img, images_path);

  require(read_be32(lab, labels_path) == 0x00000801u, Errc::io,
          "bad IDX label magic in " + labels_path);
  std::uint32_t n_lab = read_be32(lab, labels_path);
  require(n_img == n_lab, Errc::io, "IDX image/label count mismatch");

  const std::size_t dim = std::size_t(rows) * cols;
  std::vector<unsigned char> pixel_buf(dim);
  ClassDataset out;
  out.feature_dim = static_cast<int>(dim);
  out.train.reserve(n_img);
  int max_label = 0;
  for (std::uint32_t i = 0; i < n_img; ++i) {
    img.read(reinterpret_cast<char*>(pixel_buf.data()), static_cast<std::streamsize>(dim));
    require(static_cast<bool>(img), Errc::io, "truncated IDX image data in " + images_path);
    int label = lab.get();
    require(label != EOF, Errc::io, "truncated IDX label data in " + labels_path);
    DataPoint p;
    p.x.resize(dim);
    for (std::size_t j = 0; j < dim; ++j) p.x[j] = pixel_buf[j] / 255.0;
    p.y = label;
    max_label = std::max(max_label, label);
    out.train.push_back(std::move(p));
  }
  out.num_classes = max_label + 1;
  return out;
}

Scenario gen_label_skew(const LabelSkewSpec& spec, const ClassDataset& source) {
  require(spec.num_agents >= 1, Errc::invalid_argument, "need at least one agent");
  require(spec.delta >= 0.0 && spec.delta <= 1.0, Errc::invalid_argument,
          "delta must be in [0,1]");
  require(!source.train.empty(), Errc::empty_dataset, "label-skew source is empty");
  const int K = spec.num_agents;
  const int owner_mod = std::min(source.num_classes, K);

  auto allocate = [&](const std::vector<DataPoint>& pool, RngStream rng,
                      std::vector<LocalDataset>& into) {
    into.assign(K, {});
    for (int k = 0; k < K; ++k) into[k].owner = k;
    for (const auto& p : pool) {
      int label = static_cast<int>(std::llround(p.y));
      int owner = label % owner_mod;
      if (rng.uniform() >= spec.delta)
        owner = static_cast<int>(rng.next_u64() % static_cast<std::uint64_t>(K));
      into[owner].points.push_back(p);
    }
  };

  // Rare small-agent starvation is handled by re-drawing the allocation from
  // a derived seed rather than failing outright.
  for (int attempt = 0; attempt < 100; ++attempt) {
    RngStream root(spec.seed + static_cast<std::uint64_t>(attempt));
    Scenario s;
    s.loss = LossModel{source.num_classes == 2 ? LossKind::logistic : LossKind::softmax,
                       spec.reg, source.feature_dim,
                       source.num_classes == 2 ? 1 : source.num_classes, spec.intercept};
    allocate(source.train, root.derive("train"), s.datasets);
    bool ok = true;
    for (const auto& ds : s.datasets) ok = ok && !ds.points.empty();
    if (!ok) continue;
    if (!source.test.empty()) allocate(source.test, root.derive("test"), s.test_datasets);
    s.weights.assign(K, 0.0);
    if (spec.equal_weights) {
      for (auto& w : s.weights) w = 1.0 / K;
    } else {
      double n = static_cast<double>(source.train.size());
      for (int k = 0; k < K; ++k) s.weights[k] = s.datasets[k].n() / n;
    }
    s.origin = {{"generator", "label_skew"},
                {"seed", std::to_string(spec.seed)},
                {"allocation_attempt", std::to_string(attempt)},
                {"num_agents", std::to_string(K)},
                {"delta", std::to_string(spec.delta)}};
    s.validate();
    return s;
  }
  fail(Errc::numerical, "label-skew allocation starved an agent in 100 attempts");
}

namespace {

ordered_json dataset_to_json(const LocalDataset& ds) {
  ordered_json j;
  j["owner"] = ds.owner;
  auto& pts = j["points"] = ordered_json::array();
  for (const auto& p : ds.points) pts.push_back(ordered_json{{"x", p.x}, {"y", p.y}});
  return j;
}

LocalDataset dataset_from_json(const ordered_json& j) {
  LocalDataset ds;
  ds.owner = j.at("owner").get<int>();
  for (const auto& pj : j.at("points")) {
    DataPoint p;
    p.x = pj.at("x").get<std::vector<double>>();
    p.y = pj.at("y").get<double>();
    ds.points.push_back(std::move(p));
  }
  return ds;
}

}  // namespace

std::string scenario_to_json(const Scenario& s) {
  ordered_json j;
  j["schema"] = "fflsim.scenario/1";
  ordered_json spec = ordered_json::object();
  for (const auto& [key, value] : s.origin) spec[key] = value;
  j["spec"] = spec;
  j["loss"] = {{"kind", loss_kind_name(s.loss.kind)},
               {"reg", s.loss.reg},
               {"feature_dim", s.loss.feature_dim},
               {"num_classes", s.loss.num_classes},
               {"intercept", s.loss.intercept}};
  j["weights"] = s.weights;
  auto& sets = j["datasets"] = ordered_json::array();
  for (const auto& ds : s.datasets) sets.push_back(dataset_to_json(ds));
  if (!s.test_datasets.empty()) {
    auto& tsets = j["test_datasets"] = ordered_json::array();
    for (const auto& ds : s.test_datasets) tsets.push_back(dataset_to_json(ds));
  }
  if (s.known) {
    auto& dists = j["known_distributions"] = ordered_json::array();
    for (const auto& d : *s.known)
      dists.push_back(ordered_json{{"slope", d.slope},
                                   {"offset", d.offset},
                                   {"noise_mean", d.noise.mean},
                                   {"noise_sd", d.noise.sd},
                                   {"noise_lo", d.noise.lo},
                                   {"noise_hi", d.noise.hi}});
  }
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  ordered_json j;
  try {
    j = ordered_json::parse(text);
  } catch (const std::exception& e) {
    fail(Errc::io, std::string("scenario JSON parse error: ") + e.what());
  }
  require(j.value("schema", "") == "fflsim.scenario/1", Errc::io,
          "unrecognized scenario schema");
  Scenario s;
  const auto& lj = j.at("loss");
  s.loss.kind = loss_kind_from_name(lj.at("kind").get<std::string>());
  s.loss.reg = lj.at("reg").get<double>();
  s.loss.feature_dim = lj.at("feature_dim").get<int>();
  s.loss.num_classes = lj.at("num_classes").get<int>();
  s.loss.intercept = lj.at("intercept").get<bool>();
  s.weights = j.at("weights").get<std::vector<double>>();
  for (const auto& dj : j.at("datasets")) s.datasets.push_back(dataset_from_json(dj));
  if (j.contains("test_datasets"))
    for (const auto& dj : j.at("test_datasets"))
      s.test_datasets.push_back(dataset_from_json(dj));
  if (j.contains("known_distributions")) {
    KnownDistributions known;
    for (const auto& dj : j.at("known_distributions"))
      known.push_back({dj.at("slope").get<double>(), dj.at("offset").get<double>(),
                       {dj.at("noise_mean").get<double>(), dj.at("noise_sd").get<double>(),
                        dj.at("noise_lo").get<double>(), dj.at("noise_hi").get<double>()}});
    s.known = known;
  }
  if (j.contains("spec"))
    for (const auto& [key, value] : j.at("spec").items())
      s.origin.emplace_back(key, value.get<std::string>());
  s.validate();
  return s;
}

void save_scenario(const Scenario& s, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), Errc::io, "cannot write " + path);
  out << scenario_to_json(s) << '\n';
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), Errc::io, "cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return scenario_from_json(buf.str());
}

}  // namespace fflsim
