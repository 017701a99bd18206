#pragma once

// Speaker clustering: per-speaker mean embeddings, seeded k-means++ / Lloyd,
// and cluster-tagged reference targets.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <istream>
#include <limits>
#include <map>
#include <ostream>
#include <span>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include <json.hpp>

#include "saakit/corpus.hpp"
#include "saakit/error.hpp"
#include "saakit/random.hpp"
#include "saakit/tags.hpp"

namespace saakit {

using Vector = std::vector<double>;

struct Embedding {
  std::string owner;
  Vector vector;
};

inline double squared_distance(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double d = a[i] - b[i];
    s += d * d;
  }
  return s;
}

inline void l2_normalize(Vector& v) {
  double n = 0.0;
  for (double x : v) n += x * x;
  n = std::sqrt(n);
  if (n > 0.0) {
    for (double& x : v) x /= n;
  }
}

// Arithmetic mean of each owner's vectors, optionally L2-normalized (a zero
// mean vector is left as is). Output follows first appearance of each owner.
inline std::vector<Embedding> mean_speaker_embeddings(std::span<const Embedding> turns,
                                                      bool normalize = true) {
  if (turns.empty()) throw Error("no embeddings to average");
  const std::size_t dim = turns.front().vector.size();
  std::vector<Embedding> out;
  std::vector<std::size_t> counts;
  std::unordered_map<std::string, std::size_t> index;
  for (const auto& e : turns) {
    if (e.vector.size() != dim) {
      throw Error("embedding for '" + e.owner + "' has dimension " +
                  std::to_string(e.vector.size()) + ", expected " + std::to_string(dim));
    }
    auto [it, inserted] = index.try_emplace(e.owner, out.size());
    if (inserted) {
      out.push_back({e.owner, Vector(dim, 0.0)});
      counts.push_back(0);
    }
    auto& acc = out[it->second].vector;
    for (std::size_t i = 0; i < dim; ++i) acc[i] += e.vector[i];
    ++counts[it->second];
  }
  for (std::size_t k = 0; k < out.size(); ++k) {
    for (double& x : out[k].vector) x /= static_cast<double>(counts[k]);
    if (normalize) l2_normalize(out[k].vector);
  }
  return out;
}

struct KMeansOptions {
  std::size_t k = 100;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;
};

struct ClusterModel {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::vector<Vector> centroids;
  std::size_t iterations_run = 0;
  double inertia = 0.0;
  // Inertia after each assignment step, ending with the final assignment.
  std::vector<double> inertia_history;
};

struct KMeansResult {
  ClusterModel model;
  std::vector<std::size_t> labels;
};

// Nearest centroid by squared Euclidean distance; ties go to the lower index.
inline std::size_t nearest(const std::vector<Vector>& centroids, std::span<const double> v,
                           double* dist = nullptr) {
  std::size_t best = 0;
  double best_d = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < centroids.size(); ++j) {
    const double d = squared_distance(centroids[j], v);
    if (d < best_d) {
      best_d = d;
      best = j;
    }
  }
  if (dist) *dist = best_d;
  return best;
}

inline std::size_t assign(const ClusterModel& model, std::span<const double> v) {
  if (v.size() != model.dim) {
    throw Error("vector dimension " + std::to_string(v.size()) + " does not match model dimension " +
                std::to_string(model.dim));
  }
  return nearest(model.centroids, v);
}

namespace detail {

inline std::vector<Vector> kmeanspp_seed(const std::vector<Vector>& x, std::size_t k, Rng& rng) {
  const std::size_t n = x.size();
  std::vector<Vector> centers;
  std::vector<bool> chosen(n, false);
  std::size_t first = uniform_index(rng, n);
  centers.push_back(x[first]);
  chosen[first] = true;
  std::vector<double> d2(n);
  for (std::size_t i = 0; i < n; ++i) d2[i] = squared_distance(x[i], centers[0]);
  while (centers.size() < k) {
    double total = 0.0;
    for (double d : d2) total += d;
    std::size_t pick = n;
    if (total > 0.0) {
      const double target = uniform01(rng) * total;
      double acc = 0.0;
      for (std::size_t i = 0; i < n; ++i) {
        acc += d2[i];
        if (d2[i] > 0.0 && target < acc) {
          pick = i;
          break;
        }
      }
      if (pick == n) {
        // Rounding left target at the very top of the range.
        for (std::size_t i = n; i-- > 0;) {
          if (d2[i] > 0.0) {
            pick = i;
            break;
          }
        }
      }
    } else {
      // Every point coincides with a center; take an unused index.
      std::vector<std::size_t> free;
      for (std::size_t i = 0; i < n; ++i) {
        if (!chosen[i]) free.push_back(i);
      }
      pick = free[uniform_index(rng, free.size())];
    }
    chosen[pick] = true;
    centers.push_back(x[pick]);
    for (std::size_t i = 0; i < n; ++i) {
      d2[i] = std::min(d2[i], squared_distance(x[i], centers.back()));
    }
  }
  return centers;
}

inline double assign_all(const std::vector<Vector>& x, const std::vector<Vector>& c,
                         std::vector<std::size_t>& labels, std::vector<double>& dist) {
  double inertia = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    labels[i] = nearest(c, x[i], &dist[i]);
    inertia += dist[i];
  }
  return inertia;
}

}  // namespace detail

// k-means++ seeding followed by Lloyd iterations. Stops when no centroid
// moves by tol or more (Euclidean) or after max_iter updates. An empty
// cluster takes over the point farthest from its current centroid.
inline KMeansResult kmeans_fit(const std::vector<Vector>& x, const KMeansOptions& opt) {
  const std::size_t n = x.size();
  const std::size_t k = opt.k;
  if (k == 0) throw Error("k must be at least 1");
  if (n < k) {
    throw Error("cannot fit " + std::to_string(k) + " clusters to " + std::to_string(n) +
                " vectors");
  }
  const std::size_t dim = x.front().size();
  for (const auto& v : x) {
    if (v.size() != dim) throw Error("vectors have mixed dimensions");
    for (double c : v) {
      if (!std::isfinite(c)) throw Error("non-finite vector component");
    }
  }

  Rng rng(splitmix64(opt.seed));
  ClusterModel model;
  model.k = k;
  model.dim = dim;
  model.seed = opt.seed;
  model.centroids = detail::kmeanspp_seed(x, k, rng);

  std::vector<std::size_t> labels(n);
  std::vector<double> dist(n);
  for (std::size_t it = 0; it < opt.max_iter; ++it) {
    model.inertia_history.push_back(detail::assign_all(x, model.centroids, labels, dist));

    std::vector<std::size_t> sizes(k, 0);
    for (auto l : labels) ++sizes[l];
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] != 0) continue;
      std::size_t far = n;
      for (std::size_t i = 0; i < n; ++i) {
        if (sizes[labels[i]] > 1 && dist[i] > 0.0 && (far == n || dist[i] > dist[far])) far = i;
      }
      if (far == n) continue;
      --sizes[labels[far]];
      labels[far] = j;
      dist[far] = 0.0;
      sizes[j] = 1;
      model.centroids[j] = x[far];
    }

    std::vector<Vector> next(k, Vector(dim, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t d = 0; d < dim; ++d) next[labels[i]][d] += x[i][d];
    }
    double shift = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
      if (sizes[j] == 0) {
        next[j] = model.centroids[j];
        continue;
      }
      for (double& c : next[j]) c /= static_cast<double>(sizes[j]);
      shift = std::max(shift, std::sqrt(squared_distance(next[j], model.centroids[j])));
    }
    model.centroids = std::move(next);
    model.iterations_run = it + 1;
    if (shift < opt.tol) break;
  }
  model.inertia = detail::assign_all(x, model.centroids, labels, dist);
  model.inertia_history.push_back(model.inertia);
  return {std::move(model), std::move(labels)};
}

using ClusterAssignment = std::map<std::string, std::uint64_t>;

// Cluster-tagged reference for each chunk; relative numbering is unchanged.
inline std::vector<SaaDoc> relabel_targets(const std::vector<Chunk>& chunks,
                                           const ClusterAssignment& assignment) {
  std::vector<SaaDoc> out;
  out.reserve(chunks.size());
  for (const auto& c : chunks) out.push_back(render_reference(c, TagStyle::Cluster, &assignment));
  return out;
}

// Pseudo-random unit vector derived from the speaker id. Stands in for a
// real speaker embedder in tests and demos.
inline Vector toy_embedding(const std::string& speaker_id, std::size_t dim) {
  Rng rng(splitmix64(fnv1a(speaker_id)));
  Vector v(dim);
  for (double& x : v) x = normal(rng);
  l2_normalize(v);
  return v;
}

// --- file formats ---------------------------------------------------------

// JSONL of {owner, vector}. An optional first line {dim, count} is checked
// against the records that follow.
inline std::vector<Embedding> read_embeddings(std::istream& in,
                                              const std::string& source = "<embeddings>") {
  std::vector<Embedding> out;
  std::optional<std::size_t> dim;
  std::optional<std::size_t> count;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(source, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ManifestError(source, lineno, "expected a JSON object");
    if (!obj.contains("owner") && out.empty() && !dim && obj.contains("dim")) {
      dim = detail::require_field<std::size_t>(obj, "dim", source, lineno);
      if (obj.contains("count")) count = detail::require_field<std::size_t>(obj, "count", source, lineno);
      continue;
    }
    Embedding e;
    e.owner = detail::require_field<std::string>(obj, "owner", source, lineno);
    const auto vec = detail::require_field<json>(obj, "vector", source, lineno);
    if (!vec.is_array() || vec.empty()) {
      throw ManifestError(source, lineno, "'vector' must be a non-empty array");
    }
    for (const auto& c : vec) {
      if (!c.is_number() || !std::isfinite(c.get<double>())) {
        throw ManifestError(source, lineno, "vector components must be finite numbers");
      }
      e.vector.push_back(c.get<double>());
    }
    if (!dim) dim = e.vector.size();
    if (e.vector.size() != *dim) {
      throw ManifestError(source, lineno, "vector has dimension " + std::to_string(e.vector.size()) +
                                              ", expected " + std::to_string(*dim));
    }
    out.push_back(std::move(e));
  }
  if (count && *count != out.size()) {
    throw ManifestError(source, lineno, "header announces " + std::to_string(*count) +
                                            " vectors, found " + std::to_string(out.size()));
  }
  return out;
}

inline json model_to_json(const ClusterModel& m) {
  return json{{"k", m.k},
              {"dim", m.dim},
              {"seed", m.seed},
              {"iterations_run", m.iterations_run},
              {"inertia", m.inertia},
              {"centroids", m.centroids}};
}

inline ClusterModel model_from_json(const json& j) {
  ClusterModel m;
  try {
    m.k = j.at("k").get<std::size_t>();
    m.dim = j.at("dim").get<std::size_t>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.centroids = j.at("centroids").get<std::vector<Vector>>();
    m.iterations_run = j.value("iterations_run", std::size_t{0});
    m.inertia = j.value("inertia", 0.0);
  } catch (const json::exception& e) {
    throw Error(std::string("invalid model file: ") + e.what());
  }
  if (m.k == 0 || m.centroids.size() != m.k) throw Error("invalid model file: centroid count != k");
  for (const auto& c : m.centroids) {
    if (c.size() != m.dim) throw Error("invalid model file: centroid dimension != dim");
  }
  return m;
}

inline void write_assignment(std::ostream& out, const std::vector<std::string>& speakers,
                             const ClusterAssignment& a) {
  for (const auto& s : speakers) {
    out << json{{"speaker_id", s}, {"cluster", a.at(s)}}.dump() << '\n';
  }
}

// Reads {speaker_id, cluster} lines; {speaker_id, id} is accepted as well so
// the same reader serves PIN maps.
inline ClusterAssignment read_assignment(std::istream& in, const std::string& source = "<assignment>") {
  ClusterAssignment a;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (detail::blank(line)) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(source, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ManifestError(source, lineno, "expected a JSON object");
    const auto speaker = detail::require_field<std::string>(obj, "speaker_id", source, lineno);
    const char* key = obj.contains("cluster") ? "cluster" : "id";
    if (obj.contains(key) && !obj.at(key).is_number_unsigned()) {
      throw ManifestError(source, lineno, std::string("field '") + key +
                                              "' must be a non-negative integer");
    }
    const auto value = detail::require_field<std::uint64_t>(obj, key, source, lineno);
    if (!a.emplace(speaker, value).second) {
      throw ManifestError(source, lineno, "duplicate speaker '" + speaker + "'");
    }
  }
  return a;
}

}  // namespace saakit
