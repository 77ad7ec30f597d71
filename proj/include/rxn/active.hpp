#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <set>
#include <span>
#include <string>
#include <vector>

#include "rxn/core.hpp"
#include "rxn/nn/model.hpp"
#include "rxn/nn/train.hpp"

namespace rxn::active {

using IdSet = std::set<std::string>;

struct ALState {
  IdSet trained, pool, validation;
  int round = 0;
  int budget_remaining = 0;

  // Throws InvalidArgument when the three sets overlap.
  void check_disjoint() const;
  std::size_t total() const { return trained.size() + pool.size() + validation.size(); }
};

// ceil(fraction * n) with a small tolerance so that 0.01 * 1000 stays 10.
std::size_t fraction_count(double fraction, std::size_t n);

ALState init_al(const Dataset& dataset, double init_fraction, double val_fraction, std::uint64_t seed);

// Moves ceil(fraction * |pool|) seeded draws from the pool into validation.
ALState select_validation(ALState state, double fraction, std::uint64_t seed);

enum class DeltaNorm { LInf, L1, L2 };
DeltaNorm parse_delta_norm(std::string_view name);

double discrepancy(const nn::Vec<float>& with_attention, const nn::Vec<float>& without_attention, DeltaNorm norm);

// The k ids of largest score, ties by ascending id.
std::vector<std::string> top_k(const std::map<std::string, double>& scores, std::size_t k);

std::map<std::string, double> attention_discrepancies(const nn::Model<float>& model, const IdSet& pool,
                                                      const Dataset& dataset, DeltaNorm norm = DeltaNorm::LInf);

std::vector<std::string> acquire_attention(const nn::Model<float>& model, const IdSet& pool, const Dataset& dataset,
                                           std::size_t k, DeltaNorm norm = DeltaNorm::LInf);

struct KMeansResult {
  std::vector<int> assignment;
  Eigen::MatrixXd centers;  // dim x m
  int iterations = 0;
};

// Seeded k-means++ initialisation followed by Lloyd iterations. Empty clusters
// are reseeded with the point farthest from its current center.
KMeansResult kmeans(const Eigen::MatrixXd& points, int m, std::uint64_t seed, int max_iterations = 50);

inline constexpr double kQuotaEpsilon = 1e-9;

struct ClusterAllocation {
  std::vector<std::vector<std::string>> clusters;
  std::vector<double> errors;   // mean loss per cluster
  std::vector<double> weights;  // err_j / (sum err + eps)
  std::vector<int> quotas;      // before the shortfall fill
  std::vector<int> taken;       // per cluster, after the fill
};

std::vector<double> cluster_weights(std::span<const double> errors, double eps = kQuotaEpsilon);
std::vector<int> cluster_quotas(std::span<const double> errors, int k);

// Picks k ids given clusters and per-member losses: the quota's worth of
// highest-loss members inside each cluster, then the globally highest-loss
// remainder until k ids are chosen.
std::vector<std::string> allocate_by_error(ClusterAllocation& alloc, const std::map<std::string, double>& loss,
                                           int k);

std::vector<std::string> acquire_clustering(const nn::Model<float>& model, const IdSet& pool, const Dataset& dataset,
                                            const nn::FocalLossConfig& focal, int m, int k, std::uint64_t seed,
                                            ClusterAllocation* allocation = nullptr);

enum class Strategy { Random, Attention, Clustering, Alternate, Phased };
Strategy parse_strategy(std::string_view name);
std::string to_string(Strategy s);

struct ALConfig {
  Strategy strategy = Strategy::Random;
  int rounds = 10;
  int per_round = 0;  // K; 0 spreads the budget evenly over the rounds
  double budget_fraction = 0.3;
  double init_fraction = 0.01;
  double val_fraction = 0.1;
  double validation_refresh = 0.0;  // fraction of the pool moved into validation each round
  int clusters = 5;
  DeltaNorm norm = DeltaNorm::LInf;
  double gamma = 2.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct ALRecord {
  int round = 0;
  std::size_t labeled = 0;
  std::string strategy;
  double val_mf1 = 0;
};

using ALHistory = std::vector<ALRecord>;

std::string format_al_history(const ALHistory& history);

// Round 0 trains on the initial labeled set. Every later round acquires ids
// with the strategy, moves them into the labeled set and continues training
// from the previous parameters.
ALHistory al_run(const Dataset& dataset, nn::Model<float>& model, const ALConfig& cfg, const nn::TrainConfig& train_cfg,
                 ALState* final_state = nullptr);

}  // namespace rxn::active
