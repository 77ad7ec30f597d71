#include "rxn/active.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "rxn/io.hpp"
#include "rxn/random.hpp"

namespace rxn::active {

namespace {

std::vector<std::string> sorted_ids(const IdSet& s) { return {s.begin(), s.end()}; }

std::vector<std::string> draw(const IdSet& from, std::size_t n, std::uint64_t seed) {
  auto ids = sorted_ids(from);
  Rng rng(seed);
  rng.shuffle(ids);
  ids.resize(std::min(n, ids.size()));
  return ids;
}

void move_ids(std::span<const std::string> ids, IdSet& from, IdSet& to) {
  for (const auto& id : ids) {
    if (!from.erase(id)) throw Error(ErrorCode::UnknownId, "id '" + id + "' is not in the source set");
    to.insert(id);
  }
}

}  // namespace

void ALState::check_disjoint() const {
  for (const auto& id : trained) {
    if (pool.count(id) || validation.count(id)) throw Error(ErrorCode::InvalidArgument, "id '" + id + "' in two sets");
  }
  for (const auto& id : pool) {
    if (validation.count(id)) throw Error(ErrorCode::InvalidArgument, "id '" + id + "' in two sets");
  }
  if (round < 0 || budget_remaining < 0) throw Error(ErrorCode::InvalidArgument, "negative round or budget");
}

std::size_t fraction_count(double fraction, std::size_t n) {
  return static_cast<std::size_t>(std::ceil(fraction * static_cast<double>(n) - 1e-9));
}

ALState init_al(const Dataset& dataset, double init_fraction, double val_fraction, std::uint64_t seed) {
  if (!(init_fraction > 0 && init_fraction < 1 && val_fraction > 0 && val_fraction < 1)) {
    throw Error(ErrorCode::InvalidArgument, "fractions must lie in (0,1)");
  }
  if (!(init_fraction + val_fraction < 1)) throw Error(ErrorCode::InvalidArgument, "fractions must sum to less than 1");
  const std::size_t n = dataset.proteins.size();
  const std::size_t n_init = std::max<std::size_t>(1, fraction_count(init_fraction, n));
  const std::size_t n_val = std::max<std::size_t>(1, fraction_count(val_fraction, n));
  if (n_init + n_val > n) {
    throw Error(ErrorCode::TooFewItems, std::to_string(n) + " proteins cannot fill the initial and validation sets");
  }
  auto ids = dataset.ids();
  std::sort(ids.begin(), ids.end());
  Rng rng(seed);
  rng.shuffle(ids);
  ALState s;
  s.trained.insert(ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_init));
  s.validation.insert(ids.begin() + static_cast<std::ptrdiff_t>(n_init),
                      ids.begin() + static_cast<std::ptrdiff_t>(n_init + n_val));
  s.pool.insert(ids.begin() + static_cast<std::ptrdiff_t>(n_init + n_val), ids.end());
  return s;
}

ALState select_validation(ALState state, double fraction, std::uint64_t seed) {
  if (!(fraction > 0 && fraction < 1)) throw Error(ErrorCode::InvalidArgument, "fraction must lie in (0,1)");
  if (state.pool.empty()) throw Error(ErrorCode::EmptyInput, "pool exhausted");
  const auto picked = draw(state.pool, std::max<std::size_t>(1, fraction_count(fraction, state.pool.size())), seed);
  move_ids(picked, state.pool, state.validation);
  return state;
}

DeltaNorm parse_delta_norm(std::string_view name) {
  if (name == "linf") return DeltaNorm::LInf;
  if (name == "l1") return DeltaNorm::L1;
  if (name == "l2") return DeltaNorm::L2;
  throw Error(ErrorCode::InvalidArgument, "unknown discrepancy norm '" + std::string(name) + "'");
}

double discrepancy(const nn::Vec<float>& with_attention, const nn::Vec<float>& without_attention, DeltaNorm norm) {
  if (with_attention.size() != without_attention.size()) {
    throw Error(ErrorCode::ShapeMismatch, "score vectors differ in length");
  }
  const Eigen::VectorXd d = (with_attention.cast<double>() - without_attention.cast<double>()).cwiseAbs();
  if (d.size() == 0) return 0.0;
  switch (norm) {
    case DeltaNorm::LInf:
      return d.maxCoeff();
    case DeltaNorm::L1:
      return d.sum();
    case DeltaNorm::L2:
      return d.norm();
  }
  return 0.0;
}

std::vector<std::string> top_k(const std::map<std::string, double>& scores, std::size_t k) {
  if (k > scores.size()) throw Error(ErrorCode::TooFewItems, "asked for more ids than available");
  std::vector<std::pair<std::string, double>> v(scores.begin(), scores.end());
  std::stable_sort(v.begin(), v.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> out;
  for (std::size_t i = 0; i < k; ++i) out.push_back(v[i].first);
  return out;
}

std::map<std::string, double> attention_discrepancies(const nn::Model<float>& model, const IdSet& pool,
                                                      const Dataset& dataset, DeltaNorm norm) {
  std::map<std::string, double> delta;
  for (const auto& id : pool) {
    const auto tokens = tokenize(dataset.protein(id).sequence);
    delta[id] = discrepancy(nn::forward(model, tokens, true), nn::forward(model, tokens, false), norm);
  }
  return delta;
}

std::vector<std::string> acquire_attention(const nn::Model<float>& model, const IdSet& pool, const Dataset& dataset,
                                           std::size_t k, DeltaNorm norm) {
  if (pool.empty()) throw Error(ErrorCode::EmptyInput, "empty pool");
  return top_k(attention_discrepancies(model, pool, dataset, norm), k);
}

KMeansResult kmeans(const Eigen::MatrixXd& points, int m, std::uint64_t seed, int max_iterations) {
  const Eigen::Index n = points.cols();
  if (n == 0) throw Error(ErrorCode::EmptyInput, "no points to cluster");
  if (m < 1 || m > n) throw Error(ErrorCode::TooFewItems, "cluster count must lie in [1, number of points]");

  Rng rng(seed);
  KMeansResult res;
  res.centers.resize(points.rows(), m);
  res.centers.col(0) = points.col(static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n))));
  Eigen::VectorXd d2 = (points.colwise() - res.centers.col(0)).colwise().squaredNorm().transpose();
  for (int c = 1; c < m; ++c) {
    const double total = d2.sum();
    Eigen::Index pick = 0;
    if (total > 0) {
      double r = rng.uniform() * total;
      pick = n - 1;
      for (Eigen::Index i = 0; i < n; ++i) {
        r -= d2(i);
        if (r < 0 && d2(i) > 0) {
          pick = i;
          break;
        }
      }
    } else {
      pick = static_cast<Eigen::Index>(rng.index(static_cast<std::size_t>(n)));
    }
    res.centers.col(c) = points.col(pick);
    d2 = d2.cwiseMin((points.colwise() - res.centers.col(c)).colwise().squaredNorm().transpose());
  }

  res.assignment.assign(static_cast<std::size_t>(n), -1);
  for (int it = 0; it < max_iterations; ++it) {
    res.iterations = it + 1;
    bool changed = false;
    Eigen::VectorXd dist(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      Eigen::Index best = 0;
      const double b = (res.centers.colwise() - points.col(i)).colwise().squaredNorm().minCoeff(&best);
      dist(i) = b;
      if (res.assignment[static_cast<std::size_t>(i)] != static_cast<int>(best)) {
        res.assignment[static_cast<std::size_t>(i)] = static_cast<int>(best);
        changed = true;
      }
    }

    std::vector<int> counts(static_cast<std::size_t>(m), 0);
    for (int a : res.assignment) ++counts[static_cast<std::size_t>(a)];
    for (int c = 0; c < m; ++c) {
      if (counts[static_cast<std::size_t>(c)] > 0) continue;
      Eigen::Index far = -1;
      for (Eigen::Index i = 0; i < n; ++i) {
        const auto a = static_cast<std::size_t>(res.assignment[static_cast<std::size_t>(i)]);
        if (counts[a] > 1 && (far < 0 || dist(i) > dist(far))) far = i;
      }
      --counts[static_cast<std::size_t>(res.assignment[static_cast<std::size_t>(far)])];
      res.assignment[static_cast<std::size_t>(far)] = c;
      counts[static_cast<std::size_t>(c)] = 1;
      dist(far) = 0;
      changed = true;
    }

    res.centers.setZero();
    for (Eigen::Index i = 0; i < n; ++i) res.centers.col(res.assignment[static_cast<std::size_t>(i)]) += points.col(i);
    for (int c = 0; c < m; ++c) res.centers.col(c) /= static_cast<double>(counts[static_cast<std::size_t>(c)]);
    if (!changed) break;
  }
  return res;
}

std::vector<double> cluster_weights(std::span<const double> errors, double eps) {
  double sum = 0;
  for (double e : errors) {
    if (!(e >= 0) || !std::isfinite(e)) throw Error(ErrorCode::InvalidArgument, "cluster errors must be finite and >= 0");
    sum += e;
  }
  std::vector<double> w;
  for (double e : errors) w.push_back(e / (sum + eps));
  return w;
}

std::vector<int> cluster_quotas(std::span<const double> errors, int k) {
  if (k < 0) throw Error(ErrorCode::InvalidArgument, "K must be >= 0");
  cluster_weights(errors);
  double sum = 0;
  for (double e : errors) sum += e;
  std::vector<int> q;
  for (double e : errors) {
    q.push_back(sum > 0 ? static_cast<int>(std::floor(k * (e / sum) + 1e-9)) : 0);
  }
  return q;
}

std::vector<std::string> allocate_by_error(ClusterAllocation& alloc, const std::map<std::string, double>& loss,
                                           int k) {
  auto by_loss = [&](std::vector<std::string> ids) {
    std::sort(ids.begin(), ids.end());
    std::stable_sort(ids.begin(), ids.end(), [&](const auto& a, const auto& b) { return loss.at(a) > loss.at(b); });
    return ids;
  };

  std::size_t total = 0;
  alloc.errors.clear();
  for (const auto& c : alloc.clusters) {
    if (c.empty()) throw Error(ErrorCode::EmptyInput, "empty cluster");
    double s = 0;
    for (const auto& id : c) s += loss.at(id);
    alloc.errors.push_back(s / static_cast<double>(c.size()));
    total += c.size();
  }
  if (k < 0 || static_cast<std::size_t>(k) > total) throw Error(ErrorCode::TooFewItems, "K exceeds the pool");
  alloc.weights = cluster_weights(alloc.errors);
  alloc.quotas = cluster_quotas(alloc.errors, k);
  alloc.taken.assign(alloc.clusters.size(), 0);

  std::vector<std::string> picked;
  IdSet chosen;
  for (std::size_t j = 0; j < alloc.clusters.size(); ++j) {
    const auto ranked = by_loss(alloc.clusters[j]);
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(alloc.quotas[j]), ranked.size());
    for (std::size_t i = 0; i < take; ++i) {
      picked.push_back(ranked[i]);
      chosen.insert(ranked[i]);
    }
    alloc.taken[j] = static_cast<int>(take);
  }

  if (picked.size() < static_cast<std::size_t>(k)) {
    std::map<std::string, int> cluster_of;
    for (std::size_t j = 0; j < alloc.clusters.size(); ++j) {
      for (const auto& id : alloc.clusters[j]) cluster_of[id] = static_cast<int>(j);
    }
    std::vector<std::string> rest;
    for (const auto& [id, j] : cluster_of) {
      if (!chosen.count(id)) rest.push_back(id);
    }
    for (const auto& id : by_loss(rest)) {
      if (picked.size() == static_cast<std::size_t>(k)) break;
      picked.push_back(id);
      ++alloc.taken[static_cast<std::size_t>(cluster_of[id])];
    }
  }
  return picked;
}

std::vector<std::string> acquire_clustering(const nn::Model<float>& model, const IdSet& pool, const Dataset& dataset,
                                            const nn::FocalLossConfig& focal, int m, int k, std::uint64_t seed,
                                            ClusterAllocation* allocation) {
  if (pool.empty()) throw Error(ErrorCode::EmptyInput, "empty pool");
  if (m < 1 || static_cast<std::size_t>(m) > pool.size()) {
    throw Error(ErrorCode::TooFewItems, "cluster count must lie in [1, |pool|]");
  }
  const auto ids = sorted_ids(pool);
  Eigen::MatrixXd reps(model.config.width(), static_cast<Eigen::Index>(ids.size()));
  std::map<std::string, double> loss;
  nn::Trace<float> tr;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    const auto tokens = tokenize(dataset.protein(ids[i]).sequence);
    nn::forward_trace(model, tokens, true, tr);
    reps.col(static_cast<Eigen::Index>(i)) = tr.pooled.cast<double>();
    const auto target = encode_labels(dataset.labels_of(ids[i]), dataset.space).bits();
    loss[ids[i]] = static_cast<double>(nn::focal_loss<float>(nn::clamp_for_loss<float>(tr.scores), target, focal));
  }
  const auto km = kmeans(reps, m, seed);
  ClusterAllocation alloc;
  alloc.clusters.resize(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < ids.size(); ++i) alloc.clusters[static_cast<std::size_t>(km.assignment[i])].push_back(ids[i]);
  auto picked = allocate_by_error(alloc, loss, k);
  if (allocation) *allocation = std::move(alloc);
  return picked;
}

Strategy parse_strategy(std::string_view name) {
  if (name == "random") return Strategy::Random;
  if (name == "attention") return Strategy::Attention;
  if (name == "clustering") return Strategy::Clustering;
  if (name == "alternate") return Strategy::Alternate;
  if (name == "phased") return Strategy::Phased;
  throw Error(ErrorCode::InvalidArgument, "unknown acquisition strategy '" + std::string(name) + "'");
}

std::string to_string(Strategy s) {
  switch (s) {
    case Strategy::Random:
      return "random";
    case Strategy::Attention:
      return "attention";
    case Strategy::Clustering:
      return "clustering";
    case Strategy::Alternate:
      return "alternate";
    case Strategy::Phased:
      return "phased";
  }
  return "?";
}

void ALConfig::validate() const {
  if (rounds < 1) throw Error(ErrorCode::InvalidArgument, "al rounds must be >= 1");
  if (per_round < 0) throw Error(ErrorCode::InvalidArgument, "al per-round count must be >= 0");
  if (!(budget_fraction > 0 && budget_fraction <= 1)) throw Error(ErrorCode::InvalidArgument, "budget outside (0,1]");
  if (!(validation_refresh >= 0 && validation_refresh < 1)) {
    throw Error(ErrorCode::InvalidArgument, "validation refresh outside [0,1)");
  }
  if (clusters < 1) throw Error(ErrorCode::InvalidArgument, "cluster count must be >= 1");
  if (!(gamma > 0)) throw Error(ErrorCode::InvalidArgument, "focal gamma must be > 0");
}

std::string format_al_history(const ALHistory& history) {
  std::string out = "#round\tlabeled\tstrategy\tval_mF1\n";
  for (const auto& r : history) {
    out += std::to_string(r.round) + "\t" + std::to_string(r.labeled) + "\t" + r.strategy + "\t" +
           format_real(r.val_mf1) + "\n";
  }
  return out;
}

namespace {

Strategy round_strategy(Strategy s, int round, int rounds) {
  if (s == Strategy::Alternate) return round % 2 == 1 ? Strategy::Attention : Strategy::Clustering;
  if (s == Strategy::Phased) return round <= (rounds + 1) / 2 ? Strategy::Attention : Strategy::Clustering;
  return s;
}

}  // namespace

ALHistory al_run(const Dataset& dataset, nn::Model<float>& model, const ALConfig& cfg, const nn::TrainConfig& train_cfg,
                 ALState* final_state) {
  cfg.validate();
  train_cfg.validate();
  ALState state = init_al(dataset, cfg.init_fraction, cfg.val_fraction, derive_seed(cfg.seed, "al-init"));
  const auto budget_total = fraction_count(cfg.budget_fraction, dataset.proteins.size());
  state.budget_remaining = static_cast<int>(budget_total > state.trained.size() ? budget_total - state.trained.size() : 0);
  const int per_round = cfg.per_round > 0 ? cfg.per_round : (state.budget_remaining + cfg.rounds - 1) / cfg.rounds;

  ALHistory history;
  auto train_round = [&](const std::string& label) {
    const auto tr = sorted_ids(state.trained);
    const auto va = sorted_ids(state.validation);
    nn::TrainConfig tc = train_cfg;
    tc.seed = derive_seed(cfg.seed, "al-train-" + std::to_string(state.round));
    const nn::FocalLossConfig focal{cfg.gamma, nn::alpha_from_frequencies(dataset, tr)};
    nn::train(model, dataset, tr, va, tc, focal);
    const double f1 = nn::evaluate_model(model, dataset, va, train_cfg.threshold).mf1;
    history.push_back({state.round, state.trained.size(), label, f1});
    return focal;
  };

  auto focal = train_round("init");
  for (int r = 1; r <= cfg.rounds; ++r) {
    if (state.budget_remaining == 0 || state.pool.empty()) break;
    const auto k = static_cast<std::size_t>(
        std::min<std::size_t>({static_cast<std::size_t>(per_round), static_cast<std::size_t>(state.budget_remaining),
                               state.pool.size()}));
    const Strategy s = round_strategy(cfg.strategy, r, cfg.rounds);
    const std::string tag = std::to_string(r);
    std::vector<std::string> picked;
    switch (s) {
      case Strategy::Random:
        picked = draw(state.pool, k, derive_seed(cfg.seed, "al-random-" + tag));
        break;
      case Strategy::Attention:
        picked = acquire_attention(model, state.pool, dataset, k, cfg.norm);
        break;
      default:
        picked = acquire_clustering(model, state.pool, dataset, focal,
                                    std::min(cfg.clusters, static_cast<int>(state.pool.size())), static_cast<int>(k),
                                    derive_seed(cfg.seed, "al-kmeans-" + tag));
        break;
    }
    move_ids(picked, state.pool, state.trained);
    state.budget_remaining -= static_cast<int>(picked.size());
    state.round = r;
    if (cfg.validation_refresh > 0 && !state.pool.empty()) {
      state = select_validation(std::move(state), cfg.validation_refresh, derive_seed(cfg.seed, "al-val-" + tag));
    }
    state.check_disjoint();
    focal = train_round(to_string(s));
  }
  if (final_state) *final_state = std::move(state);
  return history;
}

}  // namespace rxn::active
