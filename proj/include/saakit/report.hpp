#pragma once

// Aggregation of per-chunk scores by duration bucket. The macro figure is the
// mean of per-bucket means (buckets without a defined value are skipped); the
// micro figure pools the raw counts.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "saakit/align.hpp"

namespace saakit {

struct PairScore {
  std::string chunk_id;
  int bucket = 0;  // 0 when the chunk's duration bucket is unknown
  ScoreReport report;
};

struct BucketStats {
  std::size_t n_chunks = 0;
  std::size_t n_wder_undefined = 0;
  std::optional<double> mean_wder;
  double mean_wer = 0.0;
  std::size_t n_ref = 0;
  std::size_t errors = 0;
  std::size_t matched = 0;
  std::size_t spk_err = 0;

  std::optional<double> micro_wder() const {
    if (matched == 0) return std::nullopt;
    return static_cast<double>(spk_err) / static_cast<double>(matched);
  }
  double micro_wer() const { return static_cast<double>(errors) / static_cast<double>(n_ref); }
};

struct AggregateReport {
  std::string system;
  std::string dataset;
  std::map<int, BucketStats> per_bucket;
  std::optional<double> macro_wder;
  std::optional<double> macro_wer;
  BucketStats pooled;  // all chunks together; its micro_* are the overall micro figures
};

inline AggregateReport aggregate(const std::vector<PairScore>& scores) {
  AggregateReport agg;
  std::map<int, double> wder_sum, wer_sum;
  auto add = [](BucketStats& b, const ScoreReport& r) {
    ++b.n_chunks;
    if (!r.wder) ++b.n_wder_undefined;
    b.n_ref += r.n_ref;
    b.errors += r.sub + r.del + r.ins;
    b.matched += r.matched;
    b.spk_err += r.spk_err;
  };
  for (const auto& s : scores) {
    auto& b = agg.per_bucket[s.bucket];
    add(b, s.report);
    add(agg.pooled, s.report);
    if (s.report.wder) wder_sum[s.bucket] += *s.report.wder;
    wer_sum[s.bucket] += s.report.wer;
  }
  double macro_wder = 0.0, macro_wer = 0.0;
  std::size_t n_wder = 0, n_wer = 0;
  for (auto& [bucket, b] : agg.per_bucket) {
    const std::size_t defined = b.n_chunks - b.n_wder_undefined;
    if (defined > 0) {
      b.mean_wder = wder_sum[bucket] / static_cast<double>(defined);
      macro_wder += *b.mean_wder;
      ++n_wder;
    }
    b.mean_wer = wer_sum[bucket] / static_cast<double>(b.n_chunks);
    macro_wer += b.mean_wer;
    ++n_wer;
  }
  if (n_wder > 0) agg.macro_wder = macro_wder / static_cast<double>(n_wder);
  if (n_wer > 0) agg.macro_wer = macro_wer / static_cast<double>(n_wer);
  return agg;
}

namespace detail {

inline nlohmann::json opt_json(const std::optional<double>& v) {
  return v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

inline std::optional<double> json_opt(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  return j.at(key).get<double>();
}

inline std::string percent(const std::optional<double>& v) {
  if (!v) return "-";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", 100.0 * *v);
  return buf;
}

inline std::string bucket_name(int b) { return b == 0 ? "unbucketed" : std::to_string(b); }

}  // namespace detail

inline nlohmann::json to_json(const ScoreReport& r) {
  nlohmann::json mapping = nlohmann::json::object();
  for (const auto& [h, ref] : r.mapping.hyp_to_ref) mapping[std::to_string(h)] = ref;
  return {{"n_ref", r.n_ref},   {"n_hyp", r.n_hyp},       {"correct", r.correct},
          {"sub", r.sub},       {"del", r.del},           {"ins", r.ins},
          {"matched", r.matched}, {"spk_err", r.spk_err}, {"wer", r.wer},
          {"wder", detail::opt_json(r.wder)}, {"mapping", mapping}};
}

inline nlohmann::json to_json(const PairScore& p) {
  nlohmann::json j = to_json(p.report);
  j["chunk_id"] = p.chunk_id;
  j["bucket"] = p.bucket;
  return j;
}

inline nlohmann::json to_json(const BucketStats& b) {
  return {{"n_chunks", b.n_chunks},
          {"n_wder_undefined", b.n_wder_undefined},
          {"mean_wder", detail::opt_json(b.mean_wder)},
          {"mean_wer", b.mean_wer},
          {"micro_wder", detail::opt_json(b.micro_wder())},
          {"micro_wer", b.micro_wer()},
          {"n_ref", b.n_ref},
          {"errors", b.errors},
          {"matched", b.matched},
          {"spk_err", b.spk_err}};
}

inline nlohmann::json to_json(const AggregateReport& a) {
  nlohmann::json buckets = nlohmann::json::object();
  for (const auto& [b, s] : a.per_bucket) buckets[detail::bucket_name(b)] = to_json(s);
  return {{"system", a.system},
          {"dataset", a.dataset},
          {"per_bucket", buckets},
          {"overall_macro", {{"wder", detail::opt_json(a.macro_wder)}, {"wer", detail::opt_json(a.macro_wer)}}},
          {"overall_micro", {{"wder", detail::opt_json(a.pooled.micro_wder())}, {"wer", a.pooled.micro_wer()}}},
          {"n_chunks", a.pooled.n_chunks},
          {"n_wder_undefined", a.pooled.n_wder_undefined}};
}

// Human-readable single-run table; rates in percent with one decimal.
inline std::string render_table(const AggregateReport& a) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-12s %8s %8s %8s %8s %8s\n", "bucket", "chunks", "WDER%",
                "WER%", "mWDER%", "mWER%");
  out << "System: " << (a.system.empty() ? "-" : a.system)
      << "  Dataset: " << (a.dataset.empty() ? "-" : a.dataset) << '\n'
      << line;
  for (const auto& [b, s] : a.per_bucket) {
    std::snprintf(line, sizeof line, "%-12s %8zu %8s %8s %8s %8s\n",
                  (b == 0 ? std::string("-") : std::to_string(b) + "s").c_str(), s.n_chunks,
                  detail::percent(s.mean_wder).c_str(), detail::percent(s.mean_wer).c_str(),
                  detail::percent(s.micro_wder()).c_str(),
                  detail::percent(s.micro_wer()).c_str());
    out << line;
  }
  std::snprintf(line, sizeof line, "%-12s %8zu %8s %8s %8s %8s\n", "average", a.pooled.n_chunks,
                detail::percent(a.macro_wder).c_str(), detail::percent(a.macro_wer).c_str(),
                detail::percent(a.pooled.micro_wder()).c_str(),
                detail::percent(a.pooled.micro_wer()).c_str());
  out << line;
  return out.str();
}

// Results grid: one row per system, one column per dataset, each cell the
// macro-averaged rate in percent. `metric` is "wder" or "wer".
inline std::string render_grid(const std::vector<nlohmann::json>& aggregates,
                               const std::string& metric) {
  std::vector<std::string> systems, datasets;
  std::map<std::pair<std::string, std::string>, std::optional<double>> cell;
  for (const auto& a : aggregates) {
    const std::string sys = a.value("system", "");
    const std::string ds = a.value("dataset", "");
    if (std::find(systems.begin(), systems.end(), sys) == systems.end()) systems.push_back(sys);
    if (std::find(datasets.begin(), datasets.end(), ds) == datasets.end()) datasets.push_back(ds);
    cell[{sys, ds}] = detail::json_opt(a.at("overall_macro"), metric.c_str());
  }
  std::size_t w0 = 6;
  for (const auto& s : systems) w0 = std::max(w0, s.size());
  std::ostringstream out;
  out << std::string("System") << std::string(w0 - 6, ' ');
  for (const auto& d : datasets) out << '\t' << d;
  out << '\n';
  for (const auto& s : systems) {
    out << s << std::string(w0 - s.size(), ' ');
    for (const auto& d : datasets) {
      auto it = cell.find({s, d});
      out << '\t' << (it == cell.end() ? std::string("-") : detail::percent(it->second));
    }
    out << '\n';
  }
  return out.str();
}

}  // namespace saakit
