// Python bindings for the translator, the slowdown-attack generator, the
// efficiency metrics, and the runtime detector.

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "slothbench/detector.hpp"
#include "slothbench/lexicon.hpp"
#include "slothbench/metrics.hpp"
#include "slothbench/model.hpp"
#include "slothbench/sloth.hpp"

namespace py = pybind11;
using namespace sloth;

namespace {

// Owns the weights, config, vocabulary, and lexicon a session needs.
class Model {
 public:
  Model(ModelWeights weights, ModelConfig config)
      : weights_(std::move(weights)), config_(config) {}

  static Model load(const std::string& path) {
    ModelConfig config = peek_weight_config(path);
    return Model(load_weights(path, config), config);
  }

  static Model train_new(int n_pairs, int epochs, int embed_dim, int hidden_dim,
                         int max_length, std::uint64_t seed) {
    Vocabulary vocab = Vocabulary::standard();
    ModelConfig config;
    config.vocab_size = vocab.size();
    config.embed_dim = embed_dim;
    config.hidden_dim = hidden_dim;
    config.max_length = max_length;
    config.rng_seed = seed;
    config.validate();
    TrainHyper hyper = reference_recipe();
    hyper.epochs = epochs;
    hyper.rng_seed = seed;
    auto corpus = gen_synthetic_corpus(seed, n_pairs, vocab);
    ModelWeights weights = ModelWeights::init(config);
    train(corpus, weights, config, hyper);
    return Model(std::move(weights), config);
  }

  void save(const std::string& path) const { save_weights(weights_, config_, path); }

  py::dict translate_text(const std::string& text, int num_beams) const {
    ModelConfig c = config_;
    c.num_beams = num_beams;
    c.validate();
    TokenSequence x = tokenize(text, vocab_);
    DecodeTrace t = translate(x, weights_, c);
    py::dict out;
    out["output"] = detokenize(t.output_ids, vocab_);
    out["loops"] = t.loops;
    out["terminated_by"] = t.terminated_by == Termination::EOS ? "eos" : "max_length";
    return out;
  }

  py::dict attack(const std::string& text, int epsilon, const std::string& kind,
                  std::uint64_t seed) const {
    AttackContext ctx;
    ctx.weights = &weights_;
    ctx.config = config_;
    ctx.vocab = &vocab_;
    ctx.lexicon = &lexicon_;
    ctx.rng_seed = seed;
    TokenSequence x = tokenize(text, vocab_);
    TestCase tc = generate_test(x, epsilon, perturbation_kind_from_string(kind), ctx);
    py::dict out;
    out["seed_text"] = tc.seed.surface;
    out["perturbed_text"] = tc.perturbed.surface;
    out["seed_loops"] = tc.seed_trace.loops;
    out["adv_loops"] = tc.adv_trace.loops;
    out["epsilon_used"] = tc.epsilon_used;
    out["candidates_evaluated"] = tc.candidates_evaluated;
    out["per_iteration_best_loops"] = tc.per_iteration_best_loops;
    out["exhausted_early"] = tc.exhausted_early;
    return out;
  }

  std::vector<float> importance(const std::string& text) const {
    TokenSequence x = tokenize(text, vocab_);
    return objective_and_importance(x, weights_, config_).scores;
  }

  std::vector<float> features(const std::string& text) const {
    TokenSequence x = tokenize(text, vocab_);
    return featurize(encode(x, weights_, config_)).values;
  }

  int max_length() const { return config_.max_length; }
  int vocab_size() const { return config_.vocab_size; }

 private:
  ModelWeights weights_;
  ModelConfig config_;
  Vocabulary vocab_ = Vocabulary::standard();
  PosLexicon lexicon_ = PosLexicon::standard();
};

}  // namespace

PYBIND11_MODULE(_slothbench, m) {
  m.doc() = "efficiency-degradation benchmark for a small neural translator";

  py::register_exception<Error>(m, "SlothError");

  py::class_<Model>(m, "Model")
      .def_static("load", &Model::load, py::arg("path"))
      .def_static("train_new", &Model::train_new, py::arg("n_pairs") = 200,
                  py::arg("epochs") = 5, py::arg("embed_dim") = 16,
                  py::arg("hidden_dim") = 16, py::arg("max_length") = 32,
                  py::arg("seed") = 7)
      .def("save", &Model::save, py::arg("path"))
      .def("translate", &Model::translate_text, py::arg("text"),
           py::arg("num_beams") = 1)
      .def("attack", &Model::attack, py::arg("text"), py::arg("epsilon") = 1,
           py::arg("kind") = "token", py::arg("seed") = 0)
      .def("importance", &Model::importance, py::arg("text"))
      .def("features", &Model::features, py::arg("text"))
      .def_property_readonly("max_length", &Model::max_length)
      .def_property_readonly("vocab_size", &Model::vocab_size);

  m.def(
      "tokenize",
      [](const std::string& text) {
        return tokenize(text, Vocabulary::standard()).tokens;
      },
      py::arg("text"), "Token ids under the standard vocabulary.");
  m.def(
      "detokenize",
      [](const std::vector<int>& ids) {
        return detokenize(ids, Vocabulary::standard());
      },
      py::arg("ids"), "Surface string for token ids under the standard vocabulary.");
  m.def(
      "loop_increase_pct",
      [](int seed_loops, int adv_loops) {
        EfficiencyRecord r;
        r.seed_loops = seed_loops;
        r.adv_loops = adv_loops;
        return i_loops(r);
      },
      py::arg("seed_loops"), py::arg("adv_loops"),
      "Percentage increase in decoder loops.");
}
