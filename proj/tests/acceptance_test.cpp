// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. Trains the reference translator once and reuses it throughout.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "slothbench/detector.hpp"
#include "slothbench/lexicon.hpp"
#include "slothbench/metrics.hpp"
#include "slothbench/model.hpp"
#include "slothbench/report.hpp"
#include "slothbench/rng.hpp"
#include "slothbench/sloth.hpp"
#include "slothbench/tape.hpp"

namespace fs = std::filesystem;
using namespace sloth;
using Clock = std::chrono::steady_clock;

namespace {

int g_failures = 0;

void report(int criterion, bool pass, const std::string& what,
            const std::string& detail) {
  std::cout << "criterion " << criterion << ": " << (pass ? "PASS" : "FAIL") << " - "
            << what << " (" << detail << ")" << std::endl;
  if (!pass) ++g_failures;
}

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct World {
  Vocabulary vocab = Vocabulary::standard();
  PosLexicon lexicon = PosLexicon::standard();
  ModelConfig config;
  ModelWeights weights{ModelWeights::init(small_config())};
  std::vector<CorpusPair> corpus;
  std::vector<CorpusPair> held_out;  // disjoint from training sources
  double train_seconds = 0.0;

  static ModelConfig small_config() {
    ModelConfig c;
    c.vocab_size = Vocabulary::standard().size();
    c.embed_dim = 8;
    c.hidden_dim = 8;
    c.max_length = 16;
    c.rng_seed = 1;
    return c;
  }

  World() {
    config.vocab_size = vocab.size();
    config.rng_seed = reference_recipe().rng_seed;
    corpus = gen_synthetic_corpus(reference_recipe().rng_seed, 4000, vocab);

    std::set<std::string> train_sources;
    for (const auto& [src, tgt] : corpus) train_sources.insert(src.surface);
    auto extra = gen_synthetic_corpus(reference_recipe().rng_seed + 1, 600, vocab);
    std::set<std::string> taken;
    for (const auto& p : extra) {
      if (train_sources.count(p.first.surface) || taken.count(p.first.surface)) continue;
      taken.insert(p.first.surface);
      held_out.push_back(p);
      if (held_out.size() == 200) break;
    }

    weights = ModelWeights::init(config);
    const auto t0 = Clock::now();
    train(corpus, weights, config, reference_recipe());
    train_seconds = seconds_since(t0);
  }

  AttackContext ctx(const ModelWeights& w, const ModelConfig& c,
                    std::uint64_t seed = 0) const {
    AttackContext a;
    a.weights = &w;
    a.config = c;
    a.vocab = &vocab;
    a.lexicon = &lexicon;
    a.rng_seed = seed;
    return a;
  }
};

std::string random_lexicon_sentence(Rng& rng, int min_words = 3, int max_words = 12) {
  const auto& lex = synthetic_lexicon();
  const int n = min_words + static_cast<int>(rng.next_below(max_words - min_words + 1));
  std::string s;
  for (int i = 0; i < n; ++i) {
    if (i) s += ' ';
    s += lex[rng.next_below(lex.size())].word;
  }
  return s;
}

// --- criterion 1: analytic embedding gradients vs central finite differences

void check_gradients(const World& w) {
  const auto t0 = Clock::now();
  ModelConfig config = World::small_config();
  Rng rng(101);
  int probes = 0;
  double worst = 0.0;

  for (int trial = 0; trial < 20 && probes < 100; ++trial) {
    ModelConfig c = config;
    c.rng_seed = 1000 + trial;
    ModelWeights weights = ModelWeights::init(c);
    TokenSequence x = tokenize(random_lexicon_sentence(rng), w.vocab);
    ImportanceProfile profile = objective_and_importance(x, weights, c);
    DecodeTrace base = decode_greedy(encode(x, weights, c), weights, c);

    // Directional probe over the embedding rows the sentence touches,
    // teacher-forced output held fixed; each row is nudged exactly once.
    auto eval_f = [&](const std::map<int, std::vector<float>>& row_dir, float h) {
      ModelWeights perturbed = weights;
      for (const auto& [id, d] : row_dir)
        for (int j = 0; j < c.embed_dim; ++j)
          perturbed.src_embed.at(id, j) += h * d[j];
      Tape tape;
      TeacherForcedGraph graph =
          teacher_forced_probs(x.tokens, base.output_ids, perturbed, c, tape);
      double sum = 0.0;
      for (std::size_t i = 0; i < base.output_ids.size(); ++i) {
        const Tensor& p = tape.value(graph.step_probs[i]);
        sum += p.data[c.eos_id] + p.data[base.output_ids[i]];
      }
      return sum / static_cast<double>(base.output_ids.size());
    };

    // Per-row analytic gradient: positional gradients summed over duplicate
    // token positions.
    std::map<int, std::vector<float>> row_grad;
    for (std::size_t i = 0; i < x.tokens.size(); ++i) {
      auto [it, fresh] = row_grad.try_emplace(x.tokens[i]);
      if (fresh) it->second.assign(c.embed_dim, 0.f);
      for (int j = 0; j < c.embed_dim; ++j)
        it->second[j] += profile.grad_vectors[i][j];
    }

    for (int probe = 0; probe < 5; ++probe) {
      // Random direction biased toward the analytic gradient so the
      // directional derivative stays well above the float32 noise floor of
      // the objective; the analytic value under test is recomputed for the
      // drawn direction, so the comparison is not circular.
      std::map<int, std::vector<float>> row_dir;
      for (const auto& [id, g] : row_grad) {
        std::vector<float> d(c.embed_dim);
        double gn = 0.0, un = 0.0;
        std::vector<float> u(c.embed_dim);
        for (int j = 0; j < c.embed_dim; ++j) {
          u[j] = rng.next_symmetric(1.f);
          un += static_cast<double>(u[j]) * u[j];
          gn += static_cast<double>(g[j]) * g[j];
        }
        const double alpha = 0.5 + 0.5 * rng.next_float();
        const double gs = gn > 0 ? alpha / std::sqrt(gn) : 0.0;
        const double us = (1.0 - alpha) / std::sqrt(un);
        double dn = 0.0;
        for (int j = 0; j < c.embed_dim; ++j) {
          d[j] = static_cast<float>(gs * g[j] + us * u[j]);
          dn += static_cast<double>(d[j]) * d[j];
        }
        const double inv = 1.0 / std::sqrt(dn);
        for (int j = 0; j < c.embed_dim; ++j) d[j] = static_cast<float>(d[j] * inv);
        row_dir.emplace(id, std::move(d));
      }

      double analytic = 0.0;
      for (const auto& [id, g] : row_grad)
        for (int j = 0; j < c.embed_dim; ++j)
          analytic += static_cast<double>(g[j]) * row_dir[id][j];

      // Richardson-extrapolated central differences: the h^2 truncation terms
      // of the two step sizes cancel, leaving O(h^4) + rounding noise.
      const float h = 2e-2f;
      const double coarse = (eval_f(row_dir, h) - eval_f(row_dir, -h)) / (2.0 * h);
      const double fine = (eval_f(row_dir, h / 2) - eval_f(row_dir, -h / 2)) / (1.0 * h);
      const double numeric = (4.0 * fine - coarse) / 3.0;
      const double denom = std::max({std::fabs(analytic), std::fabs(numeric), 1e-8});
      worst = std::max(worst, std::fabs(analytic - numeric) / denom);
      ++probes;
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream detail;
  detail << probes << " probes, worst rel err " << worst << ", " << secs << "s";
  report(1, probes >= 100 && worst <= 1e-3 && secs <= 60.0,
         "embedding gradients match finite differences", detail.str());
}

// --- criterion 2: decode loop contract and beam=1 equivalence

void check_decode_contract(const World& w) {
  Rng rng(202);
  ModelConfig c = World::small_config();
  bool ok = true;
  std::string why = "all bounds held";

  ModelWeights weights = ModelWeights::init(c);
  for (int i = 0; i < 1000 && ok; ++i) {
    TokenSequence x = tokenize(random_lexicon_sentence(rng), w.vocab);
    DecodeTrace t = decode_greedy(encode(x, weights, c), weights, c);
    if (t.loops > c.max_length) {
      ok = false;
      why = "loops exceeded max_length";
    }
    const bool ends_eos = !t.output_ids.empty() && t.output_ids.back() == c.eos_id;
    if ((t.terminated_by == Termination::EOS) != ends_eos) {
      ok = false;
      why = "terminated_by disagrees with final token";
    }
  }

  for (int i = 0; i < 100 && ok; ++i) {
    ModelConfig rc = c;
    rc.rng_seed = 5000 + i;
    ModelWeights rw = ModelWeights::init(rc);
    TokenSequence x = tokenize(random_lexicon_sentence(rng), w.vocab);
    EncoderState enc = encode(x, rw, rc);
    DecodeTrace greedy = decode_greedy(enc, rw, rc);
    rc.num_beams = 1;
    DecodeTrace beam = decode_beam(enc, rw, rc);
    if (beam.output_ids != greedy.output_ids) {
      ok = false;
      why = "beam=1 diverged from greedy";
    }
  }
  report(2, ok, "decode loop contract and beam=1 equivalence", why);
}

// --- criterion 3: reference training quality

void check_reference_training(const World& w) {
  const float acc = next_token_accuracy(w.held_out, w.weights, w.config);

  int exact = 0;
  for (const auto& [src, tgt] : w.held_out) {
    DecodeTrace t = decode_greedy(encode(src, w.weights, w.config), w.weights, w.config);
    if (t.terminated_by == Termination::EOS &&
        t.output_ids.size() == tgt.tokens.size())
      ++exact;
  }
  const double exact_ratio =
      100.0 * exact / static_cast<double>(w.held_out.size());

  std::ostringstream detail;
  detail << "next-token acc " << acc * 100 << "%, exact-length EOS " << exact_ratio
         << "%, train " << w.train_seconds << "s";
  report(3,
         acc >= 0.95 && exact_ratio >= 95.0 && w.train_seconds <= 300.0,
         "reference training quality", detail.str());
}

// --- criterion 4: gradient-guided vs random effectiveness at epsilon 1

void check_effectiveness(const World& w) {
  const auto t0 = Clock::now();
  std::vector<TokenSequence> seeds;
  for (std::size_t i = 0; i < w.held_out.size() && seeds.size() < 60; ++i)
    seeds.push_back(w.held_out[i].first);

  std::vector<SeedObservation> obs;
  std::vector<EfficiencyRecord> guided, random_base;
  double guided_sum = 0, random_sum = 0;
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    TestCase g = generate_test(seeds[i], 1, PerturbationKind::TOKEN_REPLACE,
                               w.ctx(w.weights, w.config));
    TestCase r = generate_test(seeds[i], 1, PerturbationKind::RANDOM,
                               w.ctx(w.weights, w.config, 900 + i));
    obs.push_back({static_cast<int>(seeds[i].tokens.size()), g.seed_trace.loops});
    EfficiencyRecord ge, re;
    ge.seed_loops = g.seed_trace.loops;
    ge.adv_loops = g.adv_trace.loops;
    ge.input_length = static_cast<int>(seeds[i].tokens.size());
    re.seed_loops = r.seed_trace.loops;
    re.adv_loops = r.adv_trace.loops;
    re.input_length = ge.input_length;
    guided.push_back(ge);
    random_base.push_back(re);
    guided_sum += i_loops(ge);
    random_sum += i_loops(re);
  }
  const double guided_mean = guided_sum / seeds.size();
  const double random_mean = random_sum / seeds.size();

  LengthBucketStats stats = build_length_stats(obs);
  const double guided_eta = success_ratio(guided, 3.0, stats);
  const double random_eta = success_ratio(random_base, 3.0, stats);
  const double secs = seconds_since(t0);

  std::ostringstream detail;
  detail << seeds.size() << " seeds, mean I-Loops guided " << guided_mean << "% vs random "
         << random_mean << "%, eta(3) " << guided_eta << "% vs " << random_eta << "%, "
         << secs << "s";
  const bool ratio_ok = guided_mean >= 3.0 * random_mean;
  report(4,
         ratio_ok && guided_eta >= 50.0 && random_eta <= 10.0 && secs <= 600.0,
         "token-level attack beats the random baseline", detail.str());
}

// --- criterion 5: best loops monotone in epsilon

void check_epsilon_monotonicity(const World& w) {
  bool ok = true;
  for (std::size_t i = 0; i < 20 && ok; ++i) {
    const TokenSequence& seed = w.held_out[i].first;
    int prev = 0;
    for (int eps = 1; eps <= 3; ++eps) {
      TestCase tc = generate_test(seed, eps, PerturbationKind::TOKEN_REPLACE,
                                  w.ctx(w.weights, w.config));
      if (tc.adv_trace.loops < prev) ok = false;
      prev = tc.adv_trace.loops;
    }
  }
  report(5, ok, "best loops monotone across epsilon 1..3",
         ok ? "20 seeds" : "violation found");
}

// --- criterion 6: char insertion candidate count law

void check_candidate_law(const World& w) {
  Rng rng(606);
  bool ok = true;
  for (int i = 0; i < 100 && ok; ++i) {
    const std::string sentence = random_lexicon_sentence(rng);
    TokenSequence x = tokenize(sentence, w.vocab);
    const auto words = split_words(sentence);
    const int wp = static_cast<int>(rng.next_below(words.size()));
    const auto cands = char_insert_candidates(x, wp);
    if (cands.size() != (words[wp].word.size() + 1) * 62) ok = false;
  }
  report(6, ok, "char insertion enumerates (l+1) x 62 candidates",
         ok ? "100 random words" : "count mismatch");
}

// --- criterion 7: beam sweep strictly positive

void check_beam_sweep(const World& w) {
  const auto t0 = Clock::now();
  std::vector<TokenSequence> seeds;
  for (std::size_t i = 0; i < 12; ++i) seeds.push_back(w.held_out[i].first);
  auto sweep = beam_sensitivity_sweep(seeds, w.ctx(w.weights, w.config), 1,
                                      PerturbationKind::TOKEN_REPLACE);
  bool ok = sweep.size() == 5;
  std::ostringstream detail;
  for (const auto& cell : sweep) {
    if (cell.failed || cell.mean_i_loops <= 0.0) ok = false;
    detail << "b" << cell.num_beams << "="
           << (cell.failed ? std::string("failed") : std::to_string(cell.mean_i_loops))
           << " ";
  }
  const double secs = seconds_since(t0);
  detail << secs << "s";
  report(7, ok && secs <= 900.0, "mean I-Loops positive for beams 1..5", detail.str());
}

// --- criterion 8: token replacement equals brute-force argmin

void check_token_oracle(const World& w) {
  Rng rng(808);
  ModelConfig c = World::small_config();
  ModelWeights weights = ModelWeights::init(c);
  const int space_id = w.vocab.id_of.at(" ");
  bool ok = true;

  for (int i = 0; i < 50 && ok; ++i) {
    TokenSequence x = tokenize(random_lexicon_sentence(rng), w.vocab);
    ImportanceProfile profile = objective_and_importance(x, weights, c);
    int pos = static_cast<int>(rng.next_below(x.tokens.size()));
    if (x.tokens[pos] == space_id) pos = 0;

    PerturbationCandidate cand =
        token_replace_candidate(x, pos, profile, w.vocab, weights);

    const int src = x.tokens[pos];
    int best_id = -1;
    float best = 0.f;
    for (int tgt = 0; tgt < w.vocab.size(); ++tgt) {
      if (w.vocab.is_special(tgt) || tgt == src || tgt == space_id) continue;
      float delta = 0.f;
      for (int j = 0; j < c.embed_dim; ++j)
        delta += (weights.src_embed.at(tgt, j) - weights.src_embed.at(src, j)) *
                 profile.grad_vectors[pos][j];
      if (best_id < 0 || delta < best) {
        best_id = tgt;
        best = delta;
      }
    }
    if (cand.replacement_id != best_id) ok = false;
  }
  report(8, ok, "token replacement matches the brute-force argmin",
         ok ? "50 pairs, exact" : "mismatch found");
}

// --- criterion 9: detector quality and overhead

void check_detector(const World& w) {
  // mixed-kind campaign over held-out seeds
  const PerturbationKind kinds[] = {PerturbationKind::CHAR_INSERT,
                                    PerturbationKind::TOKEN_REPLACE,
                                    PerturbationKind::STRUCT_REPLACE,
                                    PerturbationKind::RANDOM};
  std::vector<FeatureVector> normal, abnormal;
  std::vector<TokenSequence> seed_inputs;
  for (std::size_t i = 0; i < 60; ++i) {
    const TokenSequence& seed = w.held_out[i].first;
    TestCase tc = generate_test(seed, 1, kinds[i % 4],
                                w.ctx(w.weights, w.config, 7700 + i));
    normal.push_back(featurize(encode(tc.seed, w.weights, w.config)));
    abnormal.push_back(featurize(encode(tc.perturbed, w.weights, w.config)));
    seed_inputs.push_back(tc.seed);
  }

  DetectorMetrics metrics;
  DetectorModel model = train_detector(normal, abnormal, 17, &metrics);

  std::int64_t overhead_sum = 0;
  for (std::size_t i = 0; i < seed_inputs.size(); ++i) {
    EncoderState enc = encode(seed_inputs[i], w.weights, w.config);
    overhead_sum += runtime_filter(enc, model).overhead_ns;
  }
  const double mean_overhead = overhead_sum / static_cast<double>(seed_inputs.size());

  double latency_sum = 0;
  for (std::size_t i = 0; i < 20; ++i)
    latency_sum += static_cast<double>(
        measure_latency(w.weights, w.config, seed_inputs[i], 3));
  const double overhead_pct = 100.0 * mean_overhead / (latency_sum / 20.0);

  std::ostringstream detail;
  detail << "AUC " << metrics.auc << ", acc " << metrics.accuracy << ", overhead "
         << overhead_pct << "%";
  report(9,
         metrics.auc >= 0.90 && metrics.accuracy >= 0.85 && overhead_pct <= 5.0,
         "runtime detector quality and overhead", detail.str());
}

// --- criterion 10: CLI attack determinism at workers 1 and 8

std::string stable_report_text(const std::string& path) {
  std::string out;
  for (const auto& r : read_report(path).records) out += r.to_json_line_stable() + "\n";
  return out;
}

int shell(const std::string& cmd) {
  const int raw = std::system((cmd + " > /dev/null 2>&1").c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

void check_cli_determinism(const World& w) {
  const std::string dir = (fs::temp_directory_path() / "slothbench_acceptance").string();
  fs::remove_all(dir);
  fs::create_directories(dir);
  const std::string weights_path = dir + "/model.bin";
  save_weights(w.weights, w.config, weights_path);
  const std::string seeds_path = dir + "/seeds.txt";
  {
    std::ofstream out(seeds_path);
    for (int i = 0; i < 12; ++i) out << w.held_out[i].first.surface << "\n";
  }
  const std::string base = std::string(SLOTHBENCH_CLI_PATH) + " attack --weights " +
                           weights_path + " --seeds " + seeds_path +
                           " --epsilon 2 --kind token --repeats 1 --seed 42 ";
  bool ok = shell(base + "--workers 1 --out " + dir + "/r1.jsonl") == 0 &&
            shell(base + "--workers 8 --out " + dir + "/r2.jsonl") == 0 &&
            shell(base + "--workers 1 --out " + dir + "/r3.jsonl") == 0;
  std::string why = "cli runs failed";
  if (ok) {
    const std::string a = stable_report_text(dir + "/r1.jsonl");
    ok = a == stable_report_text(dir + "/r2.jsonl") &&
         a == stable_report_text(dir + "/r3.jsonl") && !a.empty();
    why = ok ? "byte-identical stable records at workers 1 and 8"
             : "stable records differ";
  }
  report(10, ok, "attack reports deterministic across reruns and workers", why);
}

// --- criterion 11: metric fixtures

void check_metric_fixtures() {
  EfficiencyRecord r;
  r.seed_loops = 10;
  r.adv_loops = 20;
  const bool eq4_ok = i_loops(r) == 100.0;

  // committed 4-record fixture; calibration: 6 observations at length 5 with
  // loops alternating 4 and 8 give mean 6, rms deviation 2
  const std::string path = std::string(SLOTHBENCH_DATA_DIR) + "/eta_fixture.jsonl";
  bool eta_ok = false;
  std::string detail = "fixture missing";
  try {
    ReportFile file = read_report(path);
    std::vector<SeedObservation> obs;
    for (int i = 0; i < 3; ++i) {
      obs.push_back({5, 4});
      obs.push_back({5, 8});
    }
    LengthBucketStats stats = build_length_stats(obs);
    std::vector<EfficiencyRecord> recs;
    for (const auto& rec : file.records) recs.push_back(rec.efficiency());
    const double eta = success_ratio(recs, 3.0, stats);
    eta_ok = file.records.size() == 4 && eta == 50.0;
    std::ostringstream ss;
    ss << "Eq-4 " << i_loops(r) << "%, eta " << eta << "%";
    detail = ss.str();
  } catch (const std::exception& e) {
    detail = e.what();
  }
  report(11, eq4_ok && eta_ok, "metric fixtures reproduce hand-computed values", detail);
}

}  // namespace

int main() {
  std::cout << "building reference model (fixed recipe)..." << std::endl;
  World w;
  std::cout << "reference model trained in " << w.train_seconds << "s" << std::endl;

  check_gradients(w);
  check_decode_contract(w);
  check_reference_training(w);
  check_effectiveness(w);
  check_epsilon_monotonicity(w);
  check_candidate_law(w);
  check_beam_sweep(w);
  check_token_oracle(w);
  check_detector(w);
  check_cli_determinism(w);
  check_metric_fixtures();

  if (g_failures) {
    std::cout << g_failures << " criterion(s) failed" << std::endl;
    return 1;
  }
  std::cout << "all criteria passed" << std::endl;
  return 0;
}
