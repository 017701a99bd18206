// saakit command-line tool.
//
// Exit codes: 0 success, 1 validation or data errors, 2 usage errors.

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "saakit/saakit.hpp"

namespace fs = std::filesystem;
using namespace saakit;

namespace {

constexpr const char* kSaaExt = ".saa.txt";

std::string read_file(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  out << text;
  if (!out) throw Error("write failed for " + p.string());
}

std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

std::ifstream open_in(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw Error("cannot open " + p.string());
  return in;
}

bool has_saa_ext(const fs::path& p) {
  const std::string name = p.filename().string();
  return name.size() > std::strlen(kSaaExt) && name.ends_with(kSaaExt);
}

std::string chunk_id_of(const fs::path& p) {
  const std::string name = p.filename().string();
  return has_saa_ext(p) ? name.substr(0, name.size() - std::strlen(kSaaExt)) : p.stem().string();
}

// .saa.txt files in a directory, sorted by file name.
std::vector<fs::path> saa_files(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw Error(dir.string() + " is not a directory");
  std::vector<fs::path> out;
  for (const auto& e : fs::directory_iterator(dir)) {
    if (e.is_regular_file() && has_saa_ext(e.path())) out.push_back(e.path());
  }
  std::sort(out.begin(), out.end());
  return out;
}

SaaDoc load_saa(const fs::path& p, ParseMode mode) {
  try {
    return parse_saa(read_file(p), mode).doc;
  } catch (const ParseError& e) {
    throw Error(p.string() + ": " + e.what());
  }
}

void warn_all(const std::vector<std::string>& warnings) {
  for (const auto& w : warnings) std::cerr << "warning: " << w << '\n';
}

std::vector<Chunk> load_chunks(const fs::path& p) {
  auto in = open_in(p);
  return read_chunk_manifest(in, p.string());
}

// --- validate ----------------------------------------------------------------

int cmd_validate(const std::vector<std::string>& paths) {
  int bad = 0;
  for (const auto& path : paths) {
    try {
      if (has_saa_ext(path)) {
        const auto r = parse_saa(read_file(path));
        std::set<int> speakers;
        std::size_t words = 0;
        for (const auto& t : r.doc.turns) {
          speakers.insert(t.tag.rel);
          words += t.words.size();
        }
        std::cout << path << ": ok, " << r.doc.turns.size() << " turns, " << words << " words, "
                  << speakers.size() << " speakers" << (r.index_gaps ? ", relative indices have gaps" : "")
                  << '\n';
        continue;
      }
      const Corpus c = load_manifest(path);
      std::size_t contained = 0;
      std::set<std::string> speakers;
      for (const auto& s : c.sessions) {
        contained += s.utterances.size() - resolve_overlaps(s).utterances.size();
        for (const auto& u : s.utterances) speakers.insert(u.speaker_id);
      }
      std::cout << path << ": ok, " << c.sessions.size() << " sessions, " << c.utterance_count()
                << " utterances, " << speakers.size() << " speakers, " << contained
                << " fully overlapped\n";
    } catch (const ParseError& e) {
      std::cerr << path << ": " << e.what() << '\n';
      ++bad;
    } catch (const Error& e) {
      std::cerr << e.what() << '\n';
      ++bad;
    }
  }
  return bad == 0 ? 0 : 1;
}

// --- chunk -------------------------------------------------------------------

TagStyle parse_style(const std::string& s) {
  if (s == "relative") return TagStyle::Relative;
  if (s == "id") return TagStyle::Id;
  return TagStyle::Cluster;
}

Wave session_audio(const fs::path& wav_dir, const std::string& session,
                   std::map<std::string, Wave>& cache) {
  auto it = cache.find(session);
  if (it != cache.end()) return it->second;
  Wave w = to_mono(read_wav_channels((wav_dir / (session + ".wav")).string()));
  cache.clear();  // sessions arrive in order; keep one in memory
  return cache.emplace(session, std::move(w)).first->second;
}

struct ChunkArgs {
  std::string manifest;
  std::vector<int> targets{10, 30, 60, 120};
  double cap = 120.0;
  std::string out;
  std::string style = "relative";
  std::string id_map;
  std::string wav_dir;
  bool keep_overlaps = false;
};

int cmd_chunk(const ChunkArgs& a) {
  const Corpus corpus = load_manifest(a.manifest);
  const TagStyle style = parse_style(a.style);
  std::optional<ClusterAssignment> ids;
  if (style != TagStyle::Relative) {
    if (a.id_map.empty()) throw Error("--style " + a.style + " needs --id-map");
    auto in = open_in(a.id_map);
    ids = read_assignment(in, a.id_map);
  }
  const fs::path out(a.out);
  auto manifest = open_out(out / "chunks.jsonl");
  std::map<std::string, Wave> cache;
  std::size_t total = 0;
  for (const auto& raw : corpus.sessions) {
    const Session s = a.keep_overlaps ? raw : resolve_overlaps(raw);
    for (int target : a.targets) {
      const auto res = chunk_session(s, target, a.cap);
      warn_all(res.warnings);
      for (const auto& c : res.chunks) {
        manifest << chunk_to_jsonl(c) << '\n';
        const auto doc = render_reference(c, style, ids ? &*ids : nullptr);
        write_file(out / "refs" / (c.chunk_id + kSaaExt), render_saa(doc) + "\n");
        if (!a.wav_dir.empty()) {
          const Wave w = session_audio(a.wav_dir, s.id, cache);
          fs::create_directories(out / "wav");
          write_wav((out / "wav" / (c.chunk_id + ".wav")).string(), cut_span(w, c.span_start_s, c.span_end_s));
        }
        ++total;
      }
    }
  }
  std::cout << "wrote " << total << " chunks to " << (out / "chunks.jsonl").string() << '\n';
  return 0;
}

// --- mixdown -----------------------------------------------------------------

int cmd_mixdown(const std::string& in, const std::string& out) {
  auto [a, b] = read_wav_pair(in);
  write_wav(out, mixdown(a, b));
  return 0;
}

// --- synth -------------------------------------------------------------------

struct SynthArgs {
  std::string pool;
  std::string style = "alternating";
  std::size_t count = 100;
  int target = 10;
  std::optional<int> min_speakers;
  std::optional<int> max_speakers;
  double sample_min = 2.0;
  double sample_max = 8.0;
  double gap = 0.0;
  int retry_cap = 10;
  std::uint64_t seed = 0;
  std::string out;
  std::string wav_dir;
};

Wave turn_audio(const fs::path& wav_dir, const TurnSource& src) {
  const auto channels = read_wav_channels((wav_dir / (src.session_id + ".wav")).string());
  Wave w;
  if (src.channel && channels.size() == 2) {
    if (*src.channel < 0 || *src.channel > 1) throw Error("channel out of range for " + src.session_id);
    w = channels[static_cast<std::size_t>(*src.channel)];
  } else {
    w = to_mono(channels);
  }
  std::vector<Wave> pieces;
  for (const auto& [b, e] : src.spans) pieces.push_back(cut_span(w, b, e));
  return concat(pieces);
}

int cmd_synth(const SynthArgs& a) {
  SynthSpec spec;
  spec.style = a.style == "side" ? SynthStyle::SideConcat : SynthStyle::Alternating;
  const bool side = spec.style == SynthStyle::SideConcat;
  spec.n_speakers_min = a.min_speakers.value_or(side ? 3 : 2);
  spec.n_speakers_max = a.max_speakers.value_or(4);
  spec.target_s = a.target;
  spec.sample_min_s = a.sample_min;
  spec.sample_max_s = a.sample_max;
  spec.gap_s = a.gap;
  spec.retry_cap = a.retry_cap;
  spec.seed = a.seed;

  const Corpus corpus = load_manifest(a.pool);
  const auto res = build_synthetic(corpus, spec, a.count);
  warn_all(res.warnings);
  const fs::path out(a.out);
  auto manifest = open_out(out / "chunks.jsonl");
  auto sources = open_out(out / "sources.jsonl");
  for (std::size_t i = 0; i < res.chunks.size(); ++i) {
    const Chunk& c = res.chunks[i];
    manifest << chunk_to_jsonl(c) << '\n';
    write_file(out / "refs" / (c.chunk_id + kSaaExt), render_saa(render_reference(c)) + "\n");
    json turns = json::array();
    for (const auto& s : res.sources[i]) {
      json spans = json::array();
      for (const auto& [b, e] : s.spans) spans.push_back({b, e});
      json t{{"speaker_id", s.speaker_id}, {"session_id", s.session_id}, {"spans", spans}};
      if (s.channel) t["channel"] = *s.channel;
      turns.push_back(std::move(t));
    }
    sources << json{{"chunk_id", c.chunk_id}, {"turns", turns}}.dump() << '\n';
    if (!a.wav_dir.empty()) {
      std::vector<Wave> parts;
      for (const auto& s : res.sources[i]) parts.push_back(turn_audio(a.wav_dir, s));
      fs::create_directories(out / "wav");
      write_wav((out / "wav" / (c.chunk_id + ".wav")).string(), concat(parts, spec.gap_s));
    }
  }
  std::cout << "wrote " << res.chunks.size() << " chunks to " << (out / "chunks.jsonl").string() << '\n';
  return res.chunks.size() == a.count ? 0 : 1;
}

// --- toy-embed / cluster / relabel ----------------------------------------------

int cmd_toy_embed(const std::string& manifest, std::size_t dim, const std::string& out_path) {
  const Corpus c = load_manifest(manifest);
  auto out = open_out(out_path);
  out << json{{"dim", dim}, {"count", c.utterance_count()}}.dump() << '\n';
  for (const auto& s : c.sessions) {
    for (const auto& u : s.utterances) {
      out << json{{"owner", u.speaker_id}, {"vector", toy_embedding(u.speaker_id, dim)}}.dump() << '\n';
    }
  }
  return 0;
}

struct ClusterArgs {
  std::string embeddings;
  std::size_t k = 100;
  std::uint64_t seed = 0;
  std::size_t max_iter = 100;
  double tol = 1e-6;
  bool no_normalize = false;
  std::string model;
  std::string assignment;
};

int cmd_cluster(const ClusterArgs& a) {
  auto in = open_in(a.embeddings);
  const auto turns = read_embeddings(in, a.embeddings);
  const auto speakers = mean_speaker_embeddings(turns, !a.no_normalize);
  std::vector<Vector> x;
  std::vector<std::string> names;
  for (const auto& e : speakers) {
    x.push_back(e.vector);
    names.push_back(e.owner);
  }
  const auto r = kmeans_fit(x, {.k = a.k, .seed = a.seed, .max_iter = a.max_iter, .tol = a.tol});
  write_file(a.model, model_to_json(r.model).dump(2) + "\n");
  ClusterAssignment assignment;
  for (std::size_t i = 0; i < names.size(); ++i) assignment[names[i]] = r.labels[i];
  auto out = open_out(a.assignment);
  write_assignment(out, names, assignment);
  std::fprintf(stdout, "%zu speakers -> %zu clusters, inertia %.6f after %zu iterations\n", names.size(),
               a.k, r.model.inertia, r.model.iterations_run);
  return 0;
}

int cmd_relabel(const std::string& chunks_path, const std::string& assignment_path, const std::string& out) {
  const auto chunks = load_chunks(chunks_path);
  auto in = open_in(assignment_path);
  const auto assignment = read_assignment(in, assignment_path);
  const auto docs = relabel_targets(chunks, assignment);
  for (std::size_t i = 0; i < chunks.size(); ++i) {
    write_file(fs::path(out) / (chunks[i].chunk_id + kSaaExt), render_saa(docs[i]) + "\n");
  }
  std::cout << "wrote " << chunks.size() << " cluster-tagged references to " << out << '\n';
  return 0;
}

// --- corrupt -----------------------------------------------------------------

struct CorruptArgs {
  std::string refs;
  std::string out;
  std::uint64_t seed = 0;
  double p_flip = 0.0;
  double p_sub = 0.0;
  double p_del = 0.0;
  double p_ins = 0.0;
};

int cmd_corrupt(const CorruptArgs& a) {
  const fs::path out(a.out);
  fs::create_directories(out);
  auto ledger = open_out(out / "ledger.jsonl");
  std::size_t n = 0;
  for (const auto& p : saa_files(a.refs)) {
    const std::string id = chunk_id_of(p);
    const auto ref = load_saa(p, ParseMode::Strict);
    // Per-file stream keyed by name, so results do not depend on directory contents.
    Rng rng = derived_rng(a.seed, fnv1a(id));
    const ErrorModel em{a.p_flip, a.p_sub, a.p_del, a.p_ins, a.seed};
    const auto c = corrupt_hypothesis(ref, em, rng);
    write_file(out / p.filename(), render_saa(c.hyp) + "\n");
    ledger << json{{"chunk_id", id},
                   {"sub", c.injected.sub},
                   {"del", c.injected.del},
                   {"ins", c.injected.ins},
                   {"flips", c.injected.flips}}
                  .dump()
           << '\n';
    ++n;
  }
  std::cout << "wrote " << n << " hypotheses to " << out.string() << '\n';
  return 0;
}

// --- score -------------------------------------------------------------------

struct ScoreArgs {
  std::string ref_dir;
  std::string hyp_dir;
  std::string pairs;
  std::vector<std::string> chunks;
  std::size_t jobs = 0;
  std::string format = "json";
  std::string system;
  std::string dataset;
  std::string per_pair;
  std::string out;
  bool no_lowercase = false;
  bool keep_punct = false;
  bool no_collapse = false;
  bool lenient = false;
};

struct PairJob {
  std::string chunk_id;
  fs::path ref;
  fs::path hyp;
};

std::vector<PairJob> read_pairs(std::istream& in, const std::string& source) {
  std::vector<PairJob> jobs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ManifestError(source, lineno, std::string("malformed JSON: ") + e.what());
    }
    if (!obj.is_object()) throw ManifestError(source, lineno, "expected a JSON object");
    PairJob j;
    j.ref = detail::require_field<std::string>(obj, "ref_path", source, lineno);
    j.hyp = detail::require_field<std::string>(obj, "hyp_path", source, lineno);
    j.chunk_id = obj.contains("chunk_id") ? detail::require_field<std::string>(obj, "chunk_id", source, lineno)
                                          : chunk_id_of(j.ref);
    jobs.push_back(std::move(j));
  }
  return jobs;
}

std::size_t default_jobs() {
  if (const char* env = std::getenv("SAAKIT_JOBS")) {
    char* end = nullptr;
    const unsigned long v = std::strtoul(env, &end, 10);
    if (end && *end == '\0' && v > 0) return v;
    throw Error(std::string("SAAKIT_JOBS must be a positive integer, got '") + env + "'");
  }
  return std::max(1u, std::thread::hardware_concurrency());
}

int bucket_from_id(const std::string& id) {
  static const std::regex re(R"(_(10|30|60|120)s_\d+$)");
  std::smatch m;
  return std::regex_search(id, m, re) ? std::stoi(m[1]) : 0;
}

int cmd_score(const ScoreArgs& a) {
  std::vector<PairJob> jobs;
  if (!a.pairs.empty()) {
    if (a.pairs == "-") {
      jobs = read_pairs(std::cin, "<stdin>");
    } else {
      auto in = open_in(a.pairs);
      jobs = read_pairs(in, a.pairs);
    }
  } else {
    if (a.ref_dir.empty() || a.hyp_dir.empty()) throw CLI::ValidationError("give --pairs or both --ref-dir and --hyp-dir");
    for (const auto& ref : saa_files(a.ref_dir)) {
      const fs::path hyp = fs::path(a.hyp_dir) / ref.filename();
      if (!fs::exists(hyp)) throw Error("no hypothesis for " + ref.filename().string() + " in " + a.hyp_dir);
      jobs.push_back({chunk_id_of(ref), ref, hyp});
    }
  }

  std::map<std::string, int> buckets;
  for (const auto& path : a.chunks) {
    for (const auto& c : load_chunks(path)) buckets[c.chunk_id] = c.target_bucket_s;
  }

  NormConfig cfg;
  cfg.lowercase = !a.no_lowercase;
  cfg.strip_punct = !a.keep_punct;
  cfg.collapse_ws = !a.no_collapse;
  const ParseMode mode = a.lenient ? ParseMode::Lenient : ParseMode::Strict;

  std::vector<PairScore> scores(jobs.size());
  std::vector<std::string> errors(jobs.size());
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < jobs.size(); i = next++) {
      try {
        const auto& j = jobs[i];
        scores[i].chunk_id = j.chunk_id;
        auto it = buckets.find(j.chunk_id);
        scores[i].bucket = it != buckets.end() ? it->second : bucket_from_id(j.chunk_id);
        scores[i].report = score_pair(load_saa(j.ref, mode), load_saa(j.hyp, mode), cfg);
      } catch (const std::exception& e) {
        errors[i] = jobs[i].chunk_id + ": " + e.what();
      }
    }
  };
  const std::size_t n_threads = std::min(a.jobs > 0 ? a.jobs : default_jobs(), std::max<std::size_t>(jobs.size(), 1));
  std::vector<std::thread> pool;
  for (std::size_t t = 1; t < n_threads; ++t) pool.emplace_back(worker);
  worker();
  for (auto& t : pool) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw Error(e);
  }

  if (!a.per_pair.empty()) {
    auto out = open_out(a.per_pair);
    for (const auto& s : scores) out << to_json(s).dump() << '\n';
  }
  auto agg = aggregate(scores);
  agg.system = a.system;
  agg.dataset = a.dataset;
  const std::string text = a.format == "table" ? render_table(agg) : to_json(agg).dump(2) + "\n";
  if (a.out.empty()) {
    std::cout << text;
  } else {
    write_file(a.out, text);
  }
  return 0;
}

// --- report ------------------------------------------------------------------

int cmd_report(const std::vector<std::string>& files, const std::string& metric) {
  std::vector<json> aggs;
  for (const auto& f : files) {
    try {
      aggs.push_back(json::parse(read_file(f)));
    } catch (const json::parse_error& e) {
      throw Error(f + ": " + e.what());
    }
    if (!aggs.back().contains("overall_macro")) throw Error(f + ": not an aggregate report");
  }
  std::cout << "Results in " << (metric == "wer" ? "WER" : "WDER") << " (%)\n" << render_grid(aggs, metric);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Speaker-attributed transcript toolkit: chunking, synthesis, clustering and WDER scoring"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "saakit 1.0.0");

  // validate
  std::vector<std::string> validate_paths;
  auto* validate = app.add_subcommand("validate", "Check utterance manifests (.jsonl) or transcripts (.saa.txt)");
  validate->add_option("paths", validate_paths, "Files to check")->required()->check(CLI::ExistingFile);

  // chunk
  ChunkArgs chunk_args;
  auto* chunk = app.add_subcommand("chunk", "Cut sessions into duration-bucketed chunks with reference transcripts");
  chunk->add_option("--manifest", chunk_args.manifest, "Utterance manifest (JSONL)")->required()->check(CLI::ExistingFile);
  chunk->add_option("--targets", chunk_args.targets, "Target durations in seconds")
      ->delimiter(',')
      ->check(CLI::IsMember({10, 30, 60, 120}))
      ->capture_default_str();
  chunk->add_option("--cap", chunk_args.cap, "Hard cap on chunk duration in seconds")->capture_default_str();
  chunk->add_option("--out", chunk_args.out, "Output directory")->required();
  chunk->add_option("--style", chunk_args.style, "Reference tag style")
      ->check(CLI::IsMember({"relative", "id", "cluster"}))
      ->capture_default_str();
  chunk->add_option("--id-map", chunk_args.id_map, "JSONL {speaker_id, id|cluster} for the id and cluster styles")
      ->check(CLI::ExistingFile);
  chunk->add_option("--wav-dir", chunk_args.wav_dir, "Directory of <session>.wav; cut audio per chunk")
      ->check(CLI::ExistingDirectory);
  chunk->add_flag("--keep-overlaps", chunk_args.keep_overlaps, "Do not drop fully overlapped utterances");

  // mixdown
  std::string mix_in, mix_out;
  auto* mix = app.add_subcommand("mixdown", "Mix a two-channel PCM16 WAV into mono");
  mix->add_option("input", mix_in, "Stereo input WAV")->required()->check(CLI::ExistingFile);
  mix->add_option("output", mix_out, "Mono output WAV")->required();

  // synth
  SynthArgs synth_args;
  auto* synth = app.add_subcommand("synth", "Build synthetic multi-speaker conversations");
  synth->add_option("--pool", synth_args.pool, "Utterance manifest to draw from")->required()->check(CLI::ExistingFile);
  synth->add_option("--style", synth_args.style, "alternating: single-speaker pool; side: two-channel conversations")
      ->check(CLI::IsMember({"alternating", "side"}))
      ->capture_default_str();
  synth->add_option("--count", synth_args.count, "Number of chunks")->capture_default_str();
  synth->add_option("--target", synth_args.target, "Target duration in seconds")
      ->check(CLI::IsMember({10, 30, 60, 120}))
      ->capture_default_str();
  synth->add_option("--min-speakers", synth_args.min_speakers, "Fewest speakers per chunk (default 2, side 3)");
  synth->add_option("--max-speakers", synth_args.max_speakers, "Most speakers per chunk (default 4)");
  synth->add_option("--sample-min", synth_args.sample_min, "Shortest sample in seconds")->capture_default_str();
  synth->add_option("--sample-max", synth_args.sample_max, "Longest sample in seconds")->capture_default_str();
  synth->add_option("--gap", synth_args.gap, "Silence between turns in seconds")->capture_default_str();
  synth->add_option("--retry-cap", synth_args.retry_cap, "Redraws per chunk before giving up")->capture_default_str();
  synth->add_option("--seed", synth_args.seed, "Random seed")->required();
  synth->add_option("--out", synth_args.out, "Output directory")->required();
  synth->add_option("--wav-dir", synth_args.wav_dir, "Directory of <session>.wav; stitch audio per chunk")
      ->check(CLI::ExistingDirectory);

  // toy-embed
  std::string toy_manifest, toy_out;
  std::size_t toy_dim = 16;
  auto* toy = app.add_subcommand("toy-embed", "Write deterministic stand-in embeddings for a manifest (testing aid)");
  toy->add_option("--manifest", toy_manifest, "Utterance manifest")->required()->check(CLI::ExistingFile);
  toy->add_option("--dim", toy_dim, "Vector dimension")->capture_default_str()->check(CLI::PositiveNumber);
  toy->add_option("--out", toy_out, "Embedding JSONL to write")->required();

  // cluster
  ClusterArgs cluster_args;
  auto* cluster = app.add_subcommand("cluster", "Fit k-means on per-speaker mean embeddings");
  cluster->add_option("--embeddings", cluster_args.embeddings, "Embedding JSONL {owner, vector}")
      ->required()
      ->check(CLI::ExistingFile);
  cluster->add_option("--k", cluster_args.k, "Number of clusters")->capture_default_str()->check(CLI::PositiveNumber);
  cluster->add_option("--seed", cluster_args.seed, "Random seed")->required();
  cluster->add_option("--max-iter", cluster_args.max_iter, "Lloyd iteration limit")->capture_default_str();
  cluster->add_option("--tol", cluster_args.tol, "Centroid shift tolerance")->capture_default_str();
  cluster->add_flag("--no-normalize", cluster_args.no_normalize, "Skip L2 normalization of mean embeddings");
  cluster->add_option("--model", cluster_args.model, "Model JSON to write")->required();
  cluster->add_option("--assignment", cluster_args.assignment, "Assignment JSONL to write")->required();

  // relabel
  std::string rel_chunks, rel_assignment, rel_out;
  auto* relabel = app.add_subcommand("relabel", "Render cluster-tagged references for a chunk manifest");
  relabel->add_option("--chunks", rel_chunks, "Chunk manifest")->required()->check(CLI::ExistingFile);
  relabel->add_option("--assignment", rel_assignment, "Assignment JSONL")->required()->check(CLI::ExistingFile);
  relabel->add_option("--out", rel_out, "Output directory")->required();

  // corrupt
  CorruptArgs corrupt_args;
  auto* corrupt = app.add_subcommand("corrupt", "Make hypotheses with known injected errors");
  corrupt->add_option("--refs", corrupt_args.refs, "Directory of reference .saa.txt files")
      ->required()
      ->check(CLI::ExistingDirectory);
  corrupt->add_option("--out", corrupt_args.out, "Output directory")->required();
  corrupt->add_option("--seed", corrupt_args.seed, "Random seed")->required();
  const auto prob = CLI::Range(0.0, 1.0);
  corrupt->add_option("--p-flip", corrupt_args.p_flip, "Speaker flip probability")->check(prob)->capture_default_str();
  corrupt->add_option("--p-sub", corrupt_args.p_sub, "Substitution probability")->check(prob)->capture_default_str();
  corrupt->add_option("--p-del", corrupt_args.p_del, "Deletion probability")->check(prob)->capture_default_str();
  corrupt->add_option("--p-ins", corrupt_args.p_ins, "Insertion probability")->check(prob)->capture_default_str();

  // score
  ScoreArgs score_args;
  auto* score = app.add_subcommand("score", "Score hypotheses against references (WDER and WER)");
  score->add_option("--ref-dir", score_args.ref_dir, "Directory of reference .saa.txt files")->check(CLI::ExistingDirectory);
  score->add_option("--hyp-dir", score_args.hyp_dir, "Directory of hypothesis .saa.txt files with the same names")
      ->check(CLI::ExistingDirectory);
  score->add_option("--pairs", score_args.pairs, "Pairing JSONL {chunk_id, ref_path, hyp_path}, or - for stdin");
  score->add_option("--chunks", score_args.chunks, "Chunk manifest(s) giving each chunk's duration bucket");
  score->add_option("--jobs", score_args.jobs, "Worker threads (default $SAAKIT_JOBS or all cores)");
  score->add_option("--format", score_args.format, "Output format")
      ->check(CLI::IsMember({"json", "table"}))
      ->capture_default_str();
  score->add_option("--system", score_args.system, "System label for reports");
  score->add_option("--dataset", score_args.dataset, "Dataset label for reports");
  score->add_option("--per-pair", score_args.per_pair, "Also write per-pair reports (JSONL)");
  score->add_option("--out", score_args.out, "Write the aggregate here instead of stdout");
  score->add_flag("--no-lowercase", score_args.no_lowercase, "Keep letter case when comparing words");
  score->add_flag("--keep-punct", score_args.keep_punct, "Keep leading and trailing punctuation");
  score->add_flag("--no-collapse", score_args.no_collapse, "Do not re-split words on inner whitespace");
  score->add_flag("--lenient", score_args.lenient, "Tolerate malformed tags and untagged leading text");

  // report
  std::vector<std::string> report_files;
  std::string report_metric = "wder";
  auto* report = app.add_subcommand("report", "Tabulate aggregate reports: one row per system, one column per dataset");
  report->add_option("aggregates", report_files, "Aggregate JSON files from score")->required()->check(CLI::ExistingFile);
  report->add_option("--metric", report_metric, "Metric")->check(CLI::IsMember({"wder", "wer"}))->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*validate) return cmd_validate(validate_paths);
    if (*chunk) return cmd_chunk(chunk_args);
    if (*mix) return cmd_mixdown(mix_in, mix_out);
    if (*synth) return cmd_synth(synth_args);
    if (*toy) return cmd_toy_embed(toy_manifest, toy_dim, toy_out);
    if (*cluster) return cmd_cluster(cluster_args);
    if (*relabel) return cmd_relabel(rel_chunks, rel_assignment, rel_out);
    if (*corrupt) return cmd_corrupt(corrupt_args);
    if (*score) return cmd_score(score_args);
    if (*report) return cmd_report(report_files, report_metric);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
