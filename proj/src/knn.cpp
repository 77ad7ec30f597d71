#include "rxn/knn.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "rxn/io.hpp"
#include "rxn/nn/network.hpp"
#include "rxn/random.hpp"

namespace rxn::knn {

namespace {
constexpr std::string_view kMagic = "RXNE";
}

void EmbeddingIndex::validate() const {
  if (dim < 1) throw Error(ErrorCode::ShapeMismatch, "embedding dimension must be >= 1");
  std::set<std::string> seen;
  for (const auto& e : entries) {
    if (e.vector.size() != dim) throw Error(ErrorCode::ShapeMismatch, "entry '" + e.id + "' has the wrong dimension");
    if (!e.vector.allFinite()) throw Error(ErrorCode::NonFinite, "entry '" + e.id + "' has a non-finite component");
    if (!seen.insert(e.id).second) throw Error(ErrorCode::DuplicateId, "duplicate embedding id '" + e.id + "'");
  }
}

EmbeddingIndex embed_reference_set(const nn::Model<float>& model, const Dataset& dataset) {
  EmbeddingIndex index;
  index.dim = model.config.width();
  for (const auto& p : dataset.proteins) {
    index.entries.push_back(
        {p.id, nn::pooled_representation(model, tokenize(p.sequence)).cast<double>(), dataset.labels_of(p.id)});
  }
  return index;
}

std::string serialize_index(const EmbeddingIndex& index) {
  index.validate();
  ByteWriter w;
  w.bytes(kMagic);
  w.u32(kIndexVersion);
  w.u32(static_cast<std::uint32_t>(index.dim));
  w.u32(static_cast<std::uint32_t>(index.entries.size()));
  for (const auto& e : index.entries) {
    w.str(e.id);
    for (Eigen::Index i = 0; i < e.vector.size(); ++i) w.f64(e.vector(i));
    w.u32(static_cast<std::uint32_t>(e.labels.size()));
    for (const auto& l : e.labels) w.str(l);
  }
  std::string out = w.data();
  ByteWriter tail;
  tail.u64(fnv1a(out));
  return out + tail.data();
}

EmbeddingIndex deserialize_index(std::string_view bytes) {
  if (bytes.size() < 4 + 4 + 4 + 4 + 8) throw Error(ErrorCode::Truncated, "embedding file shorter than its header");
  ByteReader r(bytes);
  if (r.bytes(4) != kMagic) throw Error(ErrorCode::BadMagic, "not an embedding index (bad magic)");
  const auto version = r.u32();
  if (version != kIndexVersion) {
    throw Error(ErrorCode::VersionMismatch, "embedding index version " + std::to_string(version) + ", expected " +
                                                std::to_string(kIndexVersion));
  }
  ByteReader tail(bytes.substr(bytes.size() - 8));
  if (tail.u64() != fnv1a(bytes.substr(0, bytes.size() - 8))) {
    throw Error(ErrorCode::ChecksumMismatch, "embedding index checksum mismatch");
  }
  EmbeddingIndex index;
  index.dim = static_cast<int>(r.u32());
  const auto count = r.u32();
  ByteReader body(bytes.substr(r.position(), bytes.size() - 8 - r.position()));
  for (std::uint32_t k = 0; k < count; ++k) {
    EmbeddingEntry e;
    e.id = body.str();
    e.vector.resize(index.dim);
    for (int i = 0; i < index.dim; ++i) e.vector(i) = body.f64();
    const auto n = body.u32();
    for (std::uint32_t j = 0; j < n; ++j) e.labels.insert(body.str());
    index.entries.push_back(std::move(e));
  }
  if (body.remaining() != 0) throw Error(ErrorCode::ShapeMismatch, "trailing bytes after the last embedding");
  index.validate();
  return index;
}

void save_index(const EmbeddingIndex& index, const std::filesystem::path& path) {
  write_file_atomic(path, serialize_index(index));
}

EmbeddingIndex load_index(const std::filesystem::path& path) { return deserialize_index(read_file(path)); }

EmbeddingIndex parse_embedding_tsv(std::string_view text) {
  EmbeddingIndex index;
  std::size_t line_no = 0;
  for (auto line : lines(text)) {
    ++line_no;
    line = trim(line);
    if (line.empty() || line.front() == '#') continue;
    const auto cols = split(line, '\t');
    if (cols.size() != 3) {
      throw Error(ErrorCode::MalformedLine, "embedding line " + std::to_string(line_no) + ": expected 3 columns");
    }
    EmbeddingEntry e;
    e.id = std::string(trim(cols[0]));
    const auto comps = split(cols[1], ',');
    e.vector.resize(static_cast<Eigen::Index>(comps.size()));
    for (std::size_t i = 0; i < comps.size(); ++i) e.vector(static_cast<Eigen::Index>(i)) = parse_real(trim(comps[i]));
    for (auto l : split(cols[2], ';')) {
      l = trim(l);
      if (!l.empty() && l != kVirtualLabel) e.labels.insert(std::string(l));
    }
    if (index.entries.empty()) index.dim = static_cast<int>(e.vector.size());
    index.entries.push_back(std::move(e));
  }
  if (index.entries.empty()) throw Error(ErrorCode::EmptyInput, "no embeddings in input");
  index.validate();
  return index;
}

Metric parse_metric(std::string_view name) {
  if (name == "cosine") return Metric::Cosine;
  if (name == "euclidean") return Metric::Euclidean;
  throw Error(ErrorCode::InvalidArgument, "unknown metric '" + std::string(name) + "'");
}

double similarity(const Eigen::VectorXd& query, const Eigen::VectorXd& ref, Metric metric) {
  if (metric == Metric::Euclidean) return 1.0 / (1.0 + (query - ref).norm());
  const double qn = query.norm(), rn = ref.norm();
  if (qn == 0.0 || rn == 0.0) return 0.0;
  return query.dot(ref) / (qn * rn);
}

PredictionSet knn_predict(const std::string& protein_id, const Eigen::VectorXd& query, const EmbeddingIndex& index,
                          Metric metric, int k) {
  if (query.size() != index.dim) throw Error(ErrorCode::ShapeMismatch, "query dimension differs from the index");
  if (k < 1 || static_cast<std::size_t>(k) > index.entries.size()) {
    throw Error(ErrorCode::InvalidArgument, "k must lie in [1, index size]");
  }
  if (metric == Metric::Cosine && query.norm() == 0.0) {
    throw Error(ErrorCode::InvalidArgument, "cosine similarity is undefined for a zero query");
  }
  std::vector<std::pair<double, const EmbeddingEntry*>> ranked;
  ranked.reserve(index.entries.size());
  for (const auto& e : index.entries) ranked.emplace_back(similarity(query, e.vector, metric), &e);
  std::partial_sort(ranked.begin(), ranked.begin() + k, ranked.end(), [](const auto& a, const auto& b) {
    return a.first != b.first ? a.first > b.first : a.second->id < b.second->id;
  });

  std::map<std::string, std::pair<double, std::vector<std::string>>> best;
  std::string neighbours;
  for (int i = 0; i < k; ++i) {
    const auto& [sim, e] = ranked[static_cast<std::size_t>(i)];
    const double conf = std::clamp(sim, 0.0, 1.0);
    for (const auto& l : label_tokens(e->labels)) {
      auto [it, fresh] = best.try_emplace(l, conf, std::vector<std::string>{});
      if (!fresh) it->second.first = std::max(it->second.first, conf);
      it->second.second.push_back(e->id);
    }
    neighbours += (i ? "," : "") + e->id;
  }
  PredictionSet out;
  out.protein_id = protein_id;
  for (auto& [label, v] : best) {
    std::sort(v.second.begin(), v.second.end());
    out.items.push_back({label, v.first, std::move(v.second)});
  }
  out.rank();
  out.metadata["neighbours"] = neighbours;
  if (k > 1) out.metadata["label_rule"] = "union";
  return out;
}

}  // namespace rxn::knn
