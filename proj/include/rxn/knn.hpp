#pragma once

#include <Eigen/Dense>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "rxn/core.hpp"
#include "rxn/nn/model.hpp"
#include "rxn/prediction.hpp"

namespace rxn::knn {

struct EmbeddingEntry {
  std::string id;
  Eigen::VectorXd vector;
  ReactionSet labels;  // empty for a non-enzyme
};

struct EmbeddingIndex {
  int dim = 0;
  std::vector<EmbeddingEntry> entries;

  // Throws ShapeMismatch, DuplicateId or NonFinite.
  void validate() const;
};

inline constexpr std::uint32_t kIndexVersion = 1;

EmbeddingIndex embed_reference_set(const nn::Model<float>& model, const Dataset& dataset);

std::string serialize_index(const EmbeddingIndex& index);
EmbeddingIndex deserialize_index(std::string_view bytes);
void save_index(const EmbeddingIndex& index, const std::filesystem::path& path);
EmbeddingIndex load_index(const std::filesystem::path& path);

// `id<TAB>v1,v2,...<TAB>rxn;rxn` with `-` for a non-enzyme.
EmbeddingIndex parse_embedding_tsv(std::string_view text);

enum class Metric { Cosine, Euclidean };
Metric parse_metric(std::string_view name);

// Similarity used for ranking: cosine similarity, or 1/(1+d) for Euclidean
// distance d. A zero reference vector has cosine similarity 0.
double similarity(const Eigen::VectorXd& query, const Eigen::VectorXd& ref, Metric metric);

// Union of the labels of the k most similar entries (ties by id). Each
// reaction carries the best similarity among its neighbours, clamped to [0,1].
PredictionSet knn_predict(const std::string& protein_id, const Eigen::VectorXd& query, const EmbeddingIndex& index,
                          Metric metric = Metric::Cosine, int k = 1);

}  // namespace rxn::knn
