// slothbench: batch front-end for corpus generation, translator training,
// slowdown-attack campaigns, metric evaluation, and the runtime detector.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <mutex>
#include <set>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "slothbench/detector.hpp"
#include "slothbench/lexicon.hpp"
#include "slothbench/metrics.hpp"
#include "slothbench/model.hpp"
#include "slothbench/report.hpp"
#include "slothbench/sloth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace sloth;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitBadData = 3;
constexpr int kExitInternal = 4;

int exit_code_for(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::EmptyInput:
    case ErrorKind::InsufficientData:
    case ErrorKind::MagicMismatch:
    case ErrorKind::DimensionMismatch:
    case ErrorKind::TruncatedFile:
    case ErrorKind::IoError:
    case ErrorKind::UnsupportedCharacter:
    case ErrorKind::InvalidTokenId:
      return kExitBadData;
    default:
      return kExitInternal;
  }
}

[[noreturn]] void usage_error(const std::string& message) {
  std::cerr << "error: " << message << "\n";
  std::exit(kExitUsage);
}

void require_readable(const std::string& path, const std::string& what) {
  if (path.empty() || !fs::exists(path))
    usage_error(what + " not found: '" + path + "'");
}

void refuse_overwrite(const std::string& path, bool force) {
  if (!force && fs::exists(path))
    usage_error("output '" + path + "' exists; pass --force to overwrite");
}

// Every subcommand announces its fully resolved settings before doing work.
void print_config(const std::string& subcommand, const json& resolved) {
  std::cout << "config " << subcommand << " " << resolved.dump() << "\n";
}

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::IoError, "cannot open " + path);
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) lines.push_back(line);
  return lines;
}

int default_workers() {
  if (const char* env = std::getenv("SLOTHBENCH_WORKERS")) {
    const int n = std::atoi(env);
    if (n >= 1) return n;
  }
  return 1;
}

// ---------------------------------------------------------------- gen-corpus

struct GenCorpusArgs {
  std::uint64_t seed = 7;
  int n = 0;
  int held_out = 100;
  std::string out;
  bool force = false;
};

int run_gen_corpus(const GenCorpusArgs& args) {
  if (args.n <= 0) usage_error("gen-corpus requires --n >= 1");
  if (args.held_out <= 0) usage_error("gen-corpus requires --held-out >= 1");
  if (args.out.empty()) usage_error("gen-corpus requires --out");
  print_config("gen-corpus", json{{"seed", args.seed},
                                  {"n", args.n},
                                  {"held_out", args.held_out},
                                  {"out", args.out},
                                  {"force", args.force}});

  fs::create_directories(args.out);
  const std::string corpus_path = args.out + "/corpus.tsv";
  const std::string seeds_path = args.out + "/seeds.txt";
  refuse_overwrite(corpus_path, args.force);
  refuse_overwrite(seeds_path, args.force);

  Vocabulary vocab = Vocabulary::standard();
  auto pairs = gen_synthetic_corpus(args.seed, args.n, vocab);

  std::set<std::string> train_sources;
  {
    std::ofstream out(corpus_path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + corpus_path);
    for (const auto& [src, tgt] : pairs) {
      out << src.surface << "\t" << detokenize(tgt.tokens, vocab) << "\n";
      train_sources.insert(src.surface);
    }
  }

  // Held-out seeds: same generator, later stream, sources disjoint from the
  // training pairs.
  std::vector<std::string> seeds;
  std::set<std::string> taken;
  for (std::uint64_t draw = 0; static_cast<int>(seeds.size()) < args.held_out; ++draw) {
    auto extra = gen_synthetic_corpus(args.seed + 1 + draw, args.held_out * 2, vocab);
    for (const auto& [src, tgt] : extra) {
      if (train_sources.count(src.surface) || taken.count(src.surface)) continue;
      seeds.push_back(src.surface);
      taken.insert(src.surface);
      if (static_cast<int>(seeds.size()) == args.held_out) break;
    }
  }
  {
    std::ofstream out(seeds_path);
    if (!out) throw Error(ErrorKind::IoError, "cannot write " + seeds_path);
    for (const auto& s : seeds) out << s << "\n";
  }
  vocab.save(args.out + "/vocab.txt");
  PosLexicon::standard().save(args.out + "/lexicon.txt");

  std::cout << "wrote " << pairs.size() << " training pairs and " << seeds.size()
            << " held-out seeds to " << args.out << "\n";
  return 0;
}

// --------------------------------------------------------------------- train

struct TrainArgs {
  std::string corpus;
  std::string vocab_path;
  std::string out;
  std::string config_path;
  int max_length = 64;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
};

std::vector<CorpusPair> load_corpus(const std::string& path, const Vocabulary& vocab,
                                    int eos_id) {
  std::vector<CorpusPair> pairs;
  for (const std::string& line : read_lines(path)) {
    const auto tab = line.find('\t');
    if (tab == std::string::npos)
      throw Error(ErrorKind::IoError, "corpus line without tab separator");
    CorpusPair p;
    p.first = tokenize(line.substr(0, tab), vocab);
    p.second = tokenize(line.substr(tab + 1), vocab);
    p.second.tokens.push_back(eos_id);
    pairs.push_back(std::move(p));
  }
  if (pairs.empty()) throw Error(ErrorKind::EmptyInput, "corpus is empty");
  return pairs;
}

int run_train(const TrainArgs& args) {
  require_readable(args.corpus, "corpus");
  if (args.out.empty()) usage_error("train requires --out");
  refuse_overwrite(args.out, args.force);

  Vocabulary vocab =
      args.vocab_path.empty() ? Vocabulary::standard() : Vocabulary::load(args.vocab_path);

  ModelConfig config;
  config.vocab_size = vocab.size();
  config.max_length = args.max_length;
  TrainHyper hyper = reference_recipe();
  if (!args.config_path.empty()) {
    require_readable(args.config_path, "config file");
    std::ifstream in(args.config_path);
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) usage_error("config file is not valid JSON");
    config.embed_dim = j.value("embed_dim", config.embed_dim);
    config.hidden_dim = j.value("hidden_dim", config.hidden_dim);
    config.max_length = j.value("max_length", config.max_length);
    hyper.epochs = j.value("epochs", hyper.epochs);
    hyper.learning_rate = j.value("learning_rate", hyper.learning_rate);
    hyper.batch_size = j.value("batch_size", hyper.batch_size);
    hyper.rng_seed = j.value("rng_seed", hyper.rng_seed);
  }
  if (args.seed_set) hyper.rng_seed = args.seed;
  config.rng_seed = hyper.rng_seed;
  config.validate();

  print_config("train", json{{"corpus", args.corpus},
                             {"out", args.out},
                             {"vocab_size", config.vocab_size},
                             {"embed_dim", config.embed_dim},
                             {"hidden_dim", config.hidden_dim},
                             {"max_length", config.max_length},
                             {"epochs", hyper.epochs},
                             {"learning_rate", hyper.learning_rate},
                             {"batch_size", hyper.batch_size},
                             {"rng_seed", hyper.rng_seed}});

  auto corpus = load_corpus(args.corpus, vocab, config.eos_id);
  ModelWeights weights = ModelWeights::init(config);
  TrainResult result = train(corpus, weights, config, hyper);
  save_weights(weights, config, args.out);

  const std::string loss_path = args.out + ".loss.txt";
  {
    std::ofstream out(loss_path);
    for (std::size_t e = 0; e < result.loss_history.size(); ++e)
      out << e + 1 << " " << result.loss_history[e] << "\n";
  }
  std::cout << "initial_loss " << result.loss_history.front() << "\n";
  std::cout << "final_loss " << result.loss_history.back() << "\n";
  std::cout << "wrote weights to " << args.out << " and loss log to " << loss_path
            << "\n";
  return 0;
}

// -------------------------------------------------------------------- attack

struct CampaignArgs {
  std::string config_path;
  std::string weights;
  std::string vocab_path;
  std::string seeds;
  int epsilon = 1;
  std::string kind = "token";
  int num_beams = 1;
  int max_length = 0;  // 0 = keep the trained model's bound
  std::vector<double> lambdas = {0.0, 1.0, 2.0, 3.0};
  int repeats = 3;
  std::uint64_t seed = 0;
  int workers = default_workers();
  std::string out;
  bool force = false;
};

// Command-line flags override the JSON file; the JSON file overrides defaults.
void merge_campaign_json(CampaignArgs& args, const std::string& path,
                         const CLI::App* cmd) {
  require_readable(path, "config file");
  std::ifstream in(path);
  json j = json::parse(in, nullptr, false);
  if (j.is_discarded()) usage_error("config file is not valid JSON");
  auto unset = [&](const char* flag) { return cmd->count(flag) == 0; };
  if (unset("--weights")) args.weights = j.value("weights", args.weights);
  if (unset("--vocab")) args.vocab_path = j.value("vocab", args.vocab_path);
  if (unset("--seeds")) args.seeds = j.value("seeds", args.seeds);
  if (unset("--epsilon")) args.epsilon = j.value("epsilon", args.epsilon);
  if (unset("--kind")) args.kind = j.value("kind", args.kind);
  if (unset("--num-beams")) args.num_beams = j.value("num_beams", args.num_beams);
  if (unset("--max-length")) args.max_length = j.value("max_length", args.max_length);
  if (unset("--lambda") && j.contains("lambdas"))
    args.lambdas = j["lambdas"].get<std::vector<double>>();
  if (unset("--repeats")) args.repeats = j.value("repeats", args.repeats);
  if (unset("--seed")) args.seed = j.value("rng_seed", args.seed);
  if (unset("--workers")) args.workers = j.value("workers", args.workers);
  if (unset("--out")) args.out = j.value("out", args.out);
}

void validate_campaign(const CampaignArgs& args) {
  require_readable(args.weights, "weights file");
  require_readable(args.seeds, "seeds file");
  if (!args.vocab_path.empty()) require_readable(args.vocab_path, "vocabulary file");
  if (args.epsilon < 1 || args.epsilon > 3) usage_error("--epsilon must be in 1..3");
  if (args.num_beams < 1 || args.num_beams > 5) usage_error("--num-beams must be in 1..5");
  if (args.max_length < 0) usage_error("--max-length must be >= 0");
  if (args.repeats < 1) usage_error("--repeats must be >= 1");
  if (args.workers < 1) usage_error("--workers must be >= 1");
  if (args.out.empty()) usage_error("attack requires --out");
  for (double l : args.lambdas)
    if (l < 0) usage_error("--lambda values must be >= 0");
}

ReportRecord make_record(const TokenSequence& seed, const CampaignArgs& args,
                         const AttackContext& ctx) {
  const auto t0 = std::chrono::steady_clock::now();
  TestCase tc = generate_test(seed, args.epsilon,
                              perturbation_kind_from_string(args.kind), ctx);
  const auto t1 = std::chrono::steady_clock::now();

  LoopProxyMeter meter;
  ReportRecord r;
  r.seed_text = tc.seed.surface;
  r.perturbed_text = tc.perturbed.surface;
  r.kind = args.kind;
  r.epsilon_used = tc.epsilon_used;
  r.exhausted_early = tc.exhausted_early;
  r.input_length = static_cast<int>(tc.seed.tokens.size());
  r.seed_loops = tc.seed_trace.loops;
  r.adv_loops = tc.adv_trace.loops;
  r.seed_terminated_by =
      tc.seed_trace.terminated_by == Termination::EOS ? "eos" : "max_length";
  r.adv_terminated_by =
      tc.adv_trace.terminated_by == Termination::EOS ? "eos" : "max_length";
  r.seed_latency_ns = measure_latency(*ctx.weights, ctx.config, tc.seed, args.repeats);
  r.adv_latency_ns =
      measure_latency(*ctx.weights, ctx.config, tc.perturbed, args.repeats);
  r.seed_energy = meter.measure(tc.seed_trace);
  r.adv_energy = meter.measure(tc.adv_trace);
  r.candidates_evaluated = tc.candidates_evaluated;
  r.generation_wall_ms =
      std::chrono::duration<double, std::milli>(t1 - t0).count();

  EfficiencyRecord e = r.efficiency();
  r.i_loops_pct = i_loops(e);
  r.i_latency_pct = i_latency(e);
  r.i_energy_pct = i_energy(e);
  return r;
}

int run_attack(CampaignArgs args, const CLI::App* cmd) {
  if (!args.config_path.empty()) merge_campaign_json(args, args.config_path, cmd);
  validate_campaign(args);
  refuse_overwrite(args.out, args.force);

  print_config("attack", json{{"weights", args.weights},
                              {"vocab", args.vocab_path},
                              {"seeds", args.seeds},
                              {"epsilon", args.epsilon},
                              {"kind", args.kind},
                              {"num_beams", args.num_beams},
                              {"max_length", args.max_length},
                              {"lambdas", args.lambdas},
                              {"repeats", args.repeats},
                              {"rng_seed", args.seed},
                              {"workers", args.workers},
                              {"out", args.out}});

  Vocabulary vocab =
      args.vocab_path.empty() ? Vocabulary::standard() : Vocabulary::load(args.vocab_path);
  PosLexicon lexicon = PosLexicon::standard();
  ModelConfig config = peek_weight_config(args.weights);
  config.num_beams = args.num_beams;
  if (args.max_length > 0) config.max_length = args.max_length;
  config.validate();
  ModelWeights weights = load_weights(args.weights, config);

  std::vector<TokenSequence> seeds;
  for (const std::string& line : read_lines(args.seeds))
    seeds.push_back(tokenize(line, vocab));
  if (seeds.empty()) throw Error(ErrorKind::EmptyInput, "seeds file is empty");

  // Worker pool over an atomic index; records land in seed order regardless
  // of completion order, so worker count never changes the report content.
  std::vector<ReportRecord> records(seeds.size());
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::string failure;
  std::mutex failure_mu;

  auto worker = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= seeds.size() || failed.load()) return;
      AttackContext ctx;
      ctx.weights = &weights;
      ctx.config = config;
      ctx.vocab = &vocab;
      ctx.lexicon = &lexicon;
      ctx.rng_seed = args.seed * 1000003ULL + i;  // per-seed stream
      try {
        records[i] = make_record(seeds[i], args, ctx);
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(failure_mu);
        failure = e.what();
        failed.store(true);
        return;
      }
    }
  };
  const int n_workers = std::min<std::size_t>(args.workers, seeds.size());
  std::vector<std::thread> pool;
  for (int w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failed.load())
    throw Error(ErrorKind::ContractViolation, "campaign worker failed: " + failure);

  write_report(args.out, records);
  std::cout << "wrote " << records.size() << " records to " << args.out << "\n";
  return 0;
}

// ------------------------------------------------------------------ evaluate

struct EvaluateArgs {
  std::string report;
  std::vector<double> lambdas = {0.0, 1.0, 2.0, 3.0};
  bool beam_sweep = false;
  std::string weights;
  std::string vocab_path;
  std::string seeds;
  int epsilon = 1;
  std::string kind = "token";
};

double mean_of(const std::vector<double>& v) {
  double s = 0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : (v[n / 2 - 1] + v[n / 2]) / 2.0;
}

int run_evaluate(const EvaluateArgs& args) {
  require_readable(args.report, "report file");
  for (double l : args.lambdas)
    if (l < 0) usage_error("--lambda values must be >= 0");

  print_config("evaluate", json{{"report", args.report},
                                {"lambdas", args.lambdas},
                                {"beam_sweep", args.beam_sweep}});

  ReportFile file = read_report(args.report);
  if (file.truncated_tail)
    std::cout << "warning: report has a truncated final line (ignored)\n";
  if (file.records.empty())
    throw Error(ErrorKind::EmptyInput, "report has no records");

  std::vector<double> loops, latency, energy;
  std::vector<SeedObservation> seeds_obs;
  std::vector<EfficiencyRecord> eff;
  for (const auto& r : file.records) {
    loops.push_back(r.i_loops_pct);
    latency.push_back(r.i_latency_pct);
    energy.push_back(r.i_energy_pct);
    seeds_obs.push_back({r.input_length, r.seed_loops});
    eff.push_back(r.efficiency());
  }

  std::cout << "records " << file.records.size() << "\n";
  std::cout << "i_loops_mean " << mean_of(loops) << "\n";
  std::cout << "i_loops_median " << median_of(loops) << "\n";
  std::cout << "i_latency_mean " << mean_of(latency) << "\n";
  std::cout << "i_latency_median " << median_of(latency) << "\n";
  std::cout << "i_energy_mean " << mean_of(energy) << "\n";
  std::cout << "i_energy_median " << median_of(energy) << "\n";

  LengthBucketStats stats = build_length_stats(seeds_obs);
  for (double l : args.lambdas)
    std::cout << "eta lambda=" << l << " " << success_ratio(eff, l, stats) << "\n";

  std::cout << "length_table length count mean_loops rms_deviation sparse\n";
  for (const auto& [length, bucket] : stats.buckets)
    std::cout << "length " << length << " " << bucket.count << " " << bucket.mean_loops
              << " " << bucket.rms_deviation << " " << (bucket.sparse ? 1 : 0) << "\n";

  if (args.beam_sweep) {
    require_readable(args.weights, "weights file");
    require_readable(args.seeds, "seeds file");
    Vocabulary vocab = args.vocab_path.empty() ? Vocabulary::standard()
                                               : Vocabulary::load(args.vocab_path);
    PosLexicon lexicon = PosLexicon::standard();
    ModelConfig config = peek_weight_config(args.weights);
    ModelWeights weights = load_weights(args.weights, config);
    std::vector<TokenSequence> seeds;
    for (const std::string& line : read_lines(args.seeds))
      seeds.push_back(tokenize(line, vocab));
    AttackContext ctx;
    ctx.weights = &weights;
    ctx.config = config;
    ctx.vocab = &vocab;
    ctx.lexicon = &lexicon;
    auto sweep = beam_sensitivity_sweep(seeds, ctx, args.epsilon,
                                        perturbation_kind_from_string(args.kind));
    std::cout << "beam_sweep num_beams mean_i_loops seeds_evaluated\n";
    for (const auto& cell : sweep) {
      if (cell.failed)
        std::cout << "beam " << cell.num_beams << " failed " << cell.error << "\n";
      else
        std::cout << "beam " << cell.num_beams << " " << cell.mean_i_loops << " "
                  << cell.seeds_evaluated << "\n";
    }
  }
  return 0;
}

// ------------------------------------------------------- detect-train / eval

struct DetectArgs {
  std::string report;
  std::string weights;
  std::string model;  // detector file (out for train, in for eval)
  std::uint64_t seed = 17;
  bool force = false;
};

std::vector<FeatureVector> features_for(const std::vector<std::string>& texts,
                                        const Vocabulary& vocab,
                                        const ModelWeights& weights,
                                        const ModelConfig& config) {
  std::vector<FeatureVector> out;
  for (const auto& t : texts) out.push_back(featurize(encode(tokenize(t, vocab), weights, config)));
  return out;
}

int run_detect_train(const DetectArgs& args) {
  require_readable(args.report, "report file");
  require_readable(args.weights, "weights file");
  if (args.model.empty()) usage_error("detect-train requires --out");
  refuse_overwrite(args.model, args.force);
  print_config("detect-train", json{{"report", args.report},
                                    {"weights", args.weights},
                                    {"out", args.model},
                                    {"split_seed", args.seed}});

  ReportFile file = read_report(args.report);
  if (file.records.empty()) throw Error(ErrorKind::EmptyInput, "report has no records");

  Vocabulary vocab = Vocabulary::standard();
  ModelConfig config = peek_weight_config(args.weights);
  ModelWeights weights = load_weights(args.weights, config);

  std::vector<std::string> normal_texts, abnormal_texts;
  for (const auto& r : file.records) {
    normal_texts.push_back(r.seed_text);
    abnormal_texts.push_back(r.perturbed_text);
  }
  auto normal = features_for(normal_texts, vocab, weights, config);
  auto abnormal = features_for(abnormal_texts, vocab, weights, config);

  DetectorMetrics metrics;
  DetectorModel model = train_detector(normal, abnormal, args.seed, &metrics);
  model.train_report_tag = args.report;
  save_detector(model, args.model);

  std::cout << "held_out_accuracy " << metrics.accuracy << "\n";
  std::cout << "held_out_auc " << metrics.auc << "\n";
  std::cout << "wrote detector to " << args.model << "\n";
  return 0;
}

int run_detect_eval(const DetectArgs& args) {
  require_readable(args.report, "report file");
  require_readable(args.weights, "weights file");
  require_readable(args.model, "detector file");
  print_config("detect-eval", json{{"report", args.report},
                                   {"weights", args.weights},
                                   {"model", args.model}});

  DetectorModel model = load_detector(args.model);
  if (model.train_report_tag == args.report)
    std::cout << "warning: evaluating on the detector's training report; "
                 "scores overstate generalization\n";

  ReportFile file = read_report(args.report);
  if (file.records.empty()) throw Error(ErrorKind::EmptyInput, "report has no records");

  Vocabulary vocab = Vocabulary::standard();
  ModelConfig config = peek_weight_config(args.weights);
  ModelWeights weights = load_weights(args.weights, config);

  // Per-kind columns plus a Mixed column over all records.
  std::map<std::string, std::vector<const ReportRecord*>> by_kind;
  for (const auto& r : file.records) by_kind[r.kind].push_back(&r);
  by_kind["mixed"] = {};
  for (const auto& r : file.records) by_kind["mixed"].push_back(&r);

  std::cout << "detect_table kind n accuracy auc overhead_pct\n";
  for (const auto& [kind, records] : by_kind) {
    std::vector<double> pos_scores, neg_scores;
    std::int64_t overhead_sum = 0;
    long overhead_n = 0;
    int correct = 0;
    for (const ReportRecord* r : records) {
      EncoderState seed_enc = encode(tokenize(r->seed_text, vocab), weights, config);
      EncoderState adv_enc = encode(tokenize(r->perturbed_text, vocab), weights, config);
      FilterResult seed_f = runtime_filter(seed_enc, model);
      FilterResult adv_f = runtime_filter(adv_enc, model);
      overhead_sum += seed_f.overhead_ns + adv_f.overhead_ns;
      overhead_n += 2;
      neg_scores.push_back(detector_score(model, featurize(seed_enc)));
      pos_scores.push_back(detector_score(model, featurize(adv_enc)));
      if (seed_f.decision == FilterDecision::ACCEPT) ++correct;
      if (adv_f.decision == FilterDecision::REJECT) ++correct;
    }
    // Overhead relative to a measured seed translation latency.
    std::vector<double> latencies;
    for (std::size_t i = 0; i < records.size() && i < 20; ++i)
      latencies.push_back(static_cast<double>(
          measure_latency(weights, config, tokenize(records[i]->seed_text, vocab), 3)));
    const double mean_latency = mean_of(latencies);
    const double overhead_pct =
        mean_latency > 0
            ? 100.0 * (static_cast<double>(overhead_sum) / overhead_n) / mean_latency
            : 0.0;
    const double accuracy =
        static_cast<double>(correct) / static_cast<double>(2 * records.size());
    std::cout << "detect " << kind << " " << records.size() << " " << accuracy << " "
              << auc(pos_scores, neg_scores) << " " << overhead_pct << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"efficiency-degradation benchmark for a small neural translator"};
  app.require_subcommand(1);

  GenCorpusArgs gen;
  auto* gen_cmd = app.add_subcommand("gen-corpus", "generate a synthetic parallel corpus");
  gen_cmd->add_option("--seed", gen.seed, "generator seed");
  gen_cmd->add_option("--n", gen.n, "number of training pairs")->required();
  gen_cmd->add_option("--held-out", gen.held_out, "number of held-out seed sentences");
  gen_cmd->add_option("--out", gen.out, "output directory")->required();
  gen_cmd->add_flag("--force", gen.force, "overwrite existing outputs");

  TrainArgs tr;
  auto* train_cmd = app.add_subcommand("train", "train the translator");
  train_cmd->add_option("--corpus", tr.corpus, "corpus.tsv path")->required();
  train_cmd->add_option("--vocab", tr.vocab_path, "vocabulary file");
  train_cmd->add_option("--out", tr.out, "weight file to write")->required();
  train_cmd->add_option("--config", tr.config_path, "JSON config file");
  train_cmd->add_option("--max-length", tr.max_length, "decoder loop bound");
  auto* tr_seed = train_cmd->add_option("--seed", tr.seed, "training seed");
  train_cmd->add_flag("--force", tr.force, "overwrite existing outputs");

  CampaignArgs at;
  auto* attack_cmd = app.add_subcommand("attack", "run a slowdown-attack campaign");
  attack_cmd->add_option("--config", at.config_path, "JSON campaign config");
  attack_cmd->add_option("--weights", at.weights, "weight file");
  attack_cmd->add_option("--vocab", at.vocab_path, "vocabulary file");
  attack_cmd->add_option("--seeds", at.seeds, "seed sentence file");
  attack_cmd->add_option("--epsilon", at.epsilon, "perturbation budget 1..3");
  attack_cmd->add_option("--kind", at.kind, "char|token|struct|random");
  attack_cmd->add_option("--num-beams", at.num_beams, "beam size 1..5");
  attack_cmd->add_option("--max-length", at.max_length, "decoder loop bound override");
  attack_cmd->add_option("--lambda", at.lambdas, "lambda values for eta");
  attack_cmd->add_option("--repeats", at.repeats, "latency timing repeats");
  attack_cmd->add_option("--seed", at.seed, "campaign rng seed");
  attack_cmd->add_option("--workers", at.workers, "worker thread count");
  attack_cmd->add_option("--out", at.out, "report file to write");
  attack_cmd->add_flag("--force", at.force, "overwrite existing outputs");

  EvaluateArgs ev;
  auto* eval_cmd = app.add_subcommand("evaluate", "summarize a campaign report");
  eval_cmd->add_option("--report", ev.report, "report file")->required();
  eval_cmd->add_option("--lambda", ev.lambdas, "lambda values for eta");
  eval_cmd->add_flag("--beam-sweep", ev.beam_sweep, "also run the beam-size sweep");
  eval_cmd->add_option("--weights", ev.weights, "weight file (beam sweep)");
  eval_cmd->add_option("--vocab", ev.vocab_path, "vocabulary file (beam sweep)");
  eval_cmd->add_option("--seeds", ev.seeds, "seed sentence file (beam sweep)");
  eval_cmd->add_option("--epsilon", ev.epsilon, "perturbation budget (beam sweep)");
  eval_cmd->add_option("--kind", ev.kind, "perturbation kind (beam sweep)");

  DetectArgs dt;
  auto* dtrain_cmd = app.add_subcommand("detect-train", "train the runtime detector");
  dtrain_cmd->add_option("--report", dt.report, "campaign report")->required();
  dtrain_cmd->add_option("--weights", dt.weights, "weight file")->required();
  dtrain_cmd->add_option("--out", dt.model, "detector file to write")->required();
  dtrain_cmd->add_option("--seed", dt.seed, "split seed");
  dtrain_cmd->add_flag("--force", dt.force, "overwrite existing outputs");

  DetectArgs de;
  auto* deval_cmd = app.add_subcommand("detect-eval", "evaluate the runtime detector");
  deval_cmd->add_option("--report", de.report, "campaign report")->required();
  deval_cmd->add_option("--weights", de.weights, "weight file")->required();
  deval_cmd->add_option("--model", de.model, "detector file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : kExitUsage;
  }

  try {
    if (gen_cmd->parsed()) return run_gen_corpus(gen);
    if (train_cmd->parsed()) {
      tr.seed_set = tr_seed->count() > 0;
      return run_train(tr);
    }
    if (attack_cmd->parsed()) return run_attack(at, attack_cmd);
    if (eval_cmd->parsed()) return run_evaluate(ev);
    if (dtrain_cmd->parsed()) return run_detect_train(dt);
    if (deval_cmd->parsed()) return run_detect_eval(de);
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return exit_code_for(e.kind());
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kExitInternal;
  }
  return kExitUsage;
}
