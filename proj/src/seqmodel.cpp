#include "fleetmx/seqmodel.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <istream>
#include <limits>
#include <numeric>
#include <ostream>
#include <set>
#include <sstream>

#include "fleetmx/error.hpp"
#include "fleetmx/rng.hpp"
#include "text_util.hpp"

namespace fleetmx::seqmodel {

// ---------------------------------------------------------------------------
// Vocabulary and configuration

Vocab::Vocab(std::vector<std::string> labels) {
  std::set<std::string> unique(labels.begin(), labels.end());
  unique.erase(std::string(kUnkLabel));
  unique.erase(std::string(kEosLabel));
  labels_.emplace_back(kUnkLabel);
  labels_.emplace_back(kEosLabel);
  labels_.insert(labels_.end(), unique.begin(), unique.end());
  for (std::size_t n = 0; n < labels_.size(); ++n) index_.emplace(labels_[n], static_cast<int>(n));
}

Vocab Vocab::build(const std::vector<TokenSeq>& train) {
  std::vector<std::string> labels;
  for (const auto& s : train) labels.insert(labels.end(), s.begin(), s.end());
  return Vocab(std::move(labels));
}

int Vocab::index(std::string_view label) const {
  auto it = index_.find(label);
  return it == index_.end() ? kUnk : it->second;
}

std::vector<int> Vocab::encode(const TokenSeq& seq) const {
  std::vector<int> out;
  out.reserve(seq.size());
  for (const auto& t : seq) out.push_back(index(t));
  return out;
}

void validate(const LstmConfig& cfg) {
  auto positive = [](int v, const char* name) {
    require(v > 0, ErrorCategory::kInvalidArgument, std::string(name) + " must be positive");
  };
  positive(cfg.embed_dim, "embed_dim");
  positive(cfg.hidden_dim, "hidden_dim");
  positive(cfg.layers, "layers");
  positive(cfg.bptt_steps, "bptt_steps");
  positive(cfg.batch_size, "batch_size");
  positive(cfg.epochs, "epochs");
  require(cfg.decay_after >= 0, ErrorCategory::kInvalidArgument, "decay_after must be >= 0");
  require(cfg.dropout_keep > 0.0 && cfg.dropout_keep <= 1.0, ErrorCategory::kInvalidArgument,
          "dropout_keep must lie in (0, 1]");
  require(cfg.lr > 0.0, ErrorCategory::kInvalidArgument, "lr must be positive");
  require(cfg.lr_decay > 0.0 && cfg.lr_decay <= 1.0, ErrorCategory::kInvalidArgument, "lr_decay must lie in (0, 1]");
  require(cfg.max_grad_norm > 0.0, ErrorCategory::kInvalidArgument, "max_grad_norm must be positive");
  require(cfg.init_scale > 0.0, ErrorCategory::kInvalidArgument, "init_scale must be positive");
}

double learning_rate(const LstmConfig& cfg, int epoch) {
  if (epoch <= cfg.decay_after) return cfg.lr;
  return cfg.lr * std::pow(cfg.lr_decay, epoch - cfg.decay_after);
}

LstmConfig parse_config(std::istream& in, LstmConfig cfg) {
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto body = detail::trim(line);
    if (body.empty()) continue;
    const auto eq = body.find('=');
    const std::string where = "config line " + std::to_string(lineno);
    require(eq != std::string_view::npos, ErrorCategory::kParse, where + ": expected key = value");
    const std::string key(detail::trim(body.substr(0, eq)));
    const std::string value(detail::trim(body.substr(eq + 1)));
    auto as_int = [&]() {
      auto v = detail::parse_int(value);
      require(v.has_value(), ErrorCategory::kParse, where + ": '" + key + "' needs an integer");
      return static_cast<int>(*v);
    };
    auto as_double = [&]() {
      auto v = detail::parse_double(value);
      require(v.has_value(), ErrorCategory::kParse, where + ": '" + key + "' needs a number");
      return *v;
    };
    if (key == "embed_dim") cfg.embed_dim = as_int();
    else if (key == "hidden_dim") cfg.hidden_dim = as_int();
    else if (key == "layers") cfg.layers = as_int();
    else if (key == "dropout_keep") cfg.dropout_keep = as_double();
    else if (key == "bptt_steps") cfg.bptt_steps = as_int();
    else if (key == "batch_size") cfg.batch_size = as_int();
    else if (key == "epochs") cfg.epochs = as_int();
    else if (key == "lr") cfg.lr = as_double();
    else if (key == "decay_after") cfg.decay_after = as_int();
    else if (key == "lr_decay") cfg.lr_decay = as_double();
    else if (key == "max_grad_norm") cfg.max_grad_norm = as_double();
    else if (key == "init_scale") cfg.init_scale = as_double();
    else if (key == "seed") {
      auto v = detail::parse_int(value);
      require(v.has_value() && *v >= 0, ErrorCategory::kParse, where + ": 'seed' needs a non-negative integer");
      cfg.seed = static_cast<std::uint64_t>(*v);
    } else {
      fail(ErrorCategory::kParse, where + ": unknown key '" + key + "'");
    }
  }
  validate(cfg);
  return cfg;
}

LstmConfig load_config(const std::string& path, LstmConfig base) {
  std::ifstream in(path);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open config '" + path + "'");
  return parse_config(in, base);
}

// ---------------------------------------------------------------------------
// Parameters

std::vector<std::pair<std::string, std::span<double>>> Parameters::blocks() {
  std::vector<std::pair<std::string, std::span<double>>> out;
  out.emplace_back("embedding", embedding.data());
  for (std::size_t l = 0; l < layers.size(); ++l) {
    const std::string p = "layer" + std::to_string(l) + ".";
    out.emplace_back(p + "w", layers[l].w.data());
    out.emplace_back(p + "u", layers[l].u.data());
    out.emplace_back(p + "bias", std::span<double>(layers[l].bias));
  }
  out.emplace_back("proj", proj.data());
  out.emplace_back("proj_bias", std::span<double>(proj_bias));
  return out;
}

std::vector<std::pair<std::string, std::span<const double>>> Parameters::blocks() const {
  auto mut = const_cast<Parameters*>(this)->blocks();
  std::vector<std::pair<std::string, std::span<const double>>> out;
  out.reserve(mut.size());
  for (auto& [name, span] : mut) out.emplace_back(std::move(name), std::span<const double>(span));
  return out;
}

namespace {

struct Dims {
  std::size_t vocab;
  std::size_t embed;
  std::size_t hidden;
  std::size_t layers;

  std::size_t input(std::size_t layer) const { return layer == 0 ? embed : hidden; }
};

Dims dims_of(const SeqModel& m) {
  return {m.vocab.size(), static_cast<std::size_t>(m.config.embed_dim), static_cast<std::size_t>(m.config.hidden_dim),
          static_cast<std::size_t>(m.config.layers)};
}

Parameters zero_parameters(const Dims& d) {
  Parameters p;
  p.embedding = Matrix(d.vocab, d.embed);
  for (std::size_t l = 0; l < d.layers; ++l)
    p.layers.push_back({Matrix(4 * d.hidden, d.input(l)), Matrix(4 * d.hidden, d.hidden),
                        std::vector<double>(4 * d.hidden, 0.0)});
  p.proj = Matrix(d.hidden, d.vocab);
  p.proj_bias.assign(d.vocab, 0.0);
  return p;
}

void fill_zero(Parameters& p) {
  for (auto& [name, span] : p.blocks()) std::fill(span.begin(), span.end(), 0.0);
}

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct State {
  std::vector<std::vector<double>> h;
  std::vector<std::vector<double>> c;

  explicit State(const Dims& d) : h(d.layers, std::vector<double>(d.hidden, 0.0)), c(h) {}
};

// Per-chunk activations kept for the backward pass. Arrays are row-major
// over time steps.
struct Tape {
  std::size_t steps = 0;
  std::vector<int> inputs;
  std::vector<int> targets;
  std::vector<std::vector<double>> v;      // [layer] T × input(l): layer input after dropout
  std::vector<std::vector<double>> mask;   // [layer] T × input(l): dropout scale on the input
  std::vector<std::vector<double>> hprev;  // [layer] T × H
  std::vector<std::vector<double>> cprev;  // [layer] T × H
  std::vector<std::vector<double>> gates;  // [layer] T × 4H activations (i, f, g, o)
  std::vector<std::vector<double>> tanh_c; // [layer] T × H
  std::vector<double> out;                 // T × H: top hidden after dropout
  std::vector<double> out_mask;            // T × H
  std::vector<double> probs;               // T × V
};

// Dropout scale vector: 0 or 1/keep per unit; all ones without dropout.
void draw_mask(double* mask, std::size_t n, double keep, Rng* rng) {
  if (!rng || keep >= 1.0) {
    std::fill(mask, mask + n, 1.0);
    return;
  }
  const double scale = 1.0 / keep;
  for (std::size_t k = 0; k < n; ++k) mask[k] = rng->uniform() < keep ? scale : 0.0;
}

// One LSTM cell update. z is scratch of size 4H; gates_out receives the
// activations (i, f, g, o); state vectors are updated in place.
void cell_step(const LstmLayer& layer, std::size_t H, const double* input, std::size_t in_dim, std::vector<double>& h,
               std::vector<double>& c, double* z, double* gates_out, double* tanh_c_out) {
  const std::size_t G = 4 * H;
  for (std::size_t r = 0; r < G; ++r) {
    double s = layer.bias[r];
    const double* wr = layer.w.row(r);
    for (std::size_t k = 0; k < in_dim; ++k) s += wr[k] * input[k];
    const double* ur = layer.u.row(r);
    for (std::size_t k = 0; k < H; ++k) s += ur[k] * h[k];
    z[r] = s;
  }
  for (std::size_t k = 0; k < H; ++k) {
    const double ig = sigmoid(z[k]);
    const double fg = sigmoid(z[H + k]);
    const double gg = std::tanh(z[2 * H + k]);
    const double og = sigmoid(z[3 * H + k]);
    c[k] = fg * c[k] + ig * gg;
    const double tc = std::tanh(c[k]);
    h[k] = og * tc;
    gates_out[k] = ig;
    gates_out[H + k] = fg;
    gates_out[2 * H + k] = gg;
    gates_out[3 * H + k] = og;
    tanh_c_out[k] = tc;
  }
}

// Softmax of proj ᵀ·x + bias into probs; returns log-sum-exp relative terms
// via the probabilities themselves.
void softmax_out(const Parameters& p, const Dims& d, const double* x, double* probs) {
  for (std::size_t v = 0; v < d.vocab; ++v) probs[v] = p.proj_bias[v];
  for (std::size_t k = 0; k < d.hidden; ++k) {
    const double xk = x[k];
    if (xk == 0.0) continue;
    const double* row = p.proj.row(k);
    for (std::size_t v = 0; v < d.vocab; ++v) probs[v] += xk * row[v];
  }
  double mx = -std::numeric_limits<double>::infinity();
  for (std::size_t v = 0; v < d.vocab; ++v) mx = std::max(mx, probs[v]);
  double sum = 0.0;
  for (std::size_t v = 0; v < d.vocab; ++v) {
    probs[v] = std::exp(probs[v] - mx);
    sum += probs[v];
  }
  for (std::size_t v = 0; v < d.vocab; ++v) probs[v] /= sum;
}

// Forward over one truncated window. Records the tape and returns the summed
// negative log-likelihood.
double forward_chunk(const Parameters& p, const Dims& d, std::span<const int> inputs, std::span<const int> targets,
                     State& state, Tape& tape, Rng* dropout, double keep) {
  const std::size_t T = inputs.size();
  const std::size_t H = d.hidden;
  tape.steps = T;
  tape.inputs.assign(inputs.begin(), inputs.end());
  tape.targets.assign(targets.begin(), targets.end());
  tape.v.resize(d.layers);
  tape.mask.resize(d.layers);
  tape.hprev.resize(d.layers);
  tape.cprev.resize(d.layers);
  tape.gates.resize(d.layers);
  tape.tanh_c.resize(d.layers);
  for (std::size_t l = 0; l < d.layers; ++l) {
    tape.v[l].assign(T * d.input(l), 0.0);
    tape.mask[l].assign(T * d.input(l), 1.0);
    tape.hprev[l].assign(T * H, 0.0);
    tape.cprev[l].assign(T * H, 0.0);
    tape.gates[l].assign(T * 4 * H, 0.0);
    tape.tanh_c[l].assign(T * H, 0.0);
  }
  tape.out.assign(T * H, 0.0);
  tape.out_mask.assign(T * H, 1.0);
  tape.probs.assign(T * d.vocab, 0.0);

  std::vector<double> z(4 * H);
  double loss = 0.0;
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t l = 0; l < d.layers; ++l) {
      const std::size_t in = d.input(l);
      double* v = &tape.v[l][t * in];
      double* m = &tape.mask[l][t * in];
      draw_mask(m, in, keep, dropout);
      const double* src = l == 0 ? p.embedding.row(static_cast<std::size_t>(inputs[t])) : state.h[l - 1].data();
      for (std::size_t k = 0; k < in; ++k) v[k] = src[k] * m[k];
      std::copy(state.h[l].begin(), state.h[l].end(), &tape.hprev[l][t * H]);
      std::copy(state.c[l].begin(), state.c[l].end(), &tape.cprev[l][t * H]);
      cell_step(p.layers[l], H, v, in, state.h[l], state.c[l], z.data(), &tape.gates[l][t * 4 * H],
                &tape.tanh_c[l][t * H]);
    }
    double* om = &tape.out_mask[t * H];
    double* o = &tape.out[t * H];
    draw_mask(om, H, keep, dropout);
    for (std::size_t k = 0; k < H; ++k) o[k] = state.h.back()[k] * om[k];
    double* probs = &tape.probs[t * d.vocab];
    softmax_out(p, d, o, probs);
    loss -= std::log(probs[static_cast<std::size_t>(targets[t])]);
  }
  return loss;
}

// Accumulates scale·∂loss/∂θ for the recorded window into grad. Gradients do
// not flow into the window's initial state.
void backward_chunk(const Parameters& p, const Dims& d, const Tape& tape, Parameters& grad, double scale,
                    bool corrupt_forget) {
  const std::size_t T = tape.steps;
  const std::size_t H = d.hidden;
  const std::size_t L = d.layers;
  std::vector<std::vector<double>> dh_next(L, std::vector<double>(H, 0.0));
  std::vector<std::vector<double>> dc_next(L, std::vector<double>(H, 0.0));
  std::vector<double> dh(H), dz(4 * H), dlogits(d.vocab);
  std::vector<double> dinput(std::max(d.embed, H));

  for (std::size_t t = T; t-- > 0;) {
    const double* probs = &tape.probs[t * d.vocab];
    for (std::size_t v = 0; v < d.vocab; ++v) dlogits[v] = scale * probs[v];
    dlogits[static_cast<std::size_t>(tape.targets[t])] -= scale;

    const double* o = &tape.out[t * H];
    for (std::size_t v = 0; v < d.vocab; ++v) grad.proj_bias[v] += dlogits[v];
    for (std::size_t k = 0; k < H; ++k) {
      double* grow = grad.proj.row(k);
      const double* prow = p.proj.row(k);
      double s = 0.0;
      for (std::size_t v = 0; v < d.vocab; ++v) {
        grow[v] += o[k] * dlogits[v];
        s += prow[v] * dlogits[v];
      }
      dh[k] = s * tape.out_mask[t * H + k];
    }

    for (std::size_t l = L; l-- > 0;) {
      const LstmLayer& layer = p.layers[l];
      LstmLayer& g = grad.layers[l];
      const std::size_t in = d.input(l);
      const double* gates = &tape.gates[l][t * 4 * H];
      const double* tc = &tape.tanh_c[l][t * H];
      const double* cprev = &tape.cprev[l][t * H];
      const double* hprev = &tape.hprev[l][t * H];
      const double* v = &tape.v[l][t * in];
      for (std::size_t k = 0; k < H; ++k) {
        const double ig = gates[k], fg = gates[H + k], gg = gates[2 * H + k], og = gates[3 * H + k];
        const double dhk = dh[k] + dh_next[l][k];
        const double dc = dc_next[l][k] + dhk * og * (1.0 - tc[k] * tc[k]);
        dz[k] = dc * gg * ig * (1.0 - ig);
        dz[H + k] = dc * cprev[k] * fg * (1.0 - fg);
        if (corrupt_forget) dz[H + k] *= 1.5;
        dz[2 * H + k] = dc * ig * (1.0 - gg * gg);
        dz[3 * H + k] = dhk * tc[k] * og * (1.0 - og);
        dc_next[l][k] = dc * fg;
      }
      std::fill(dh_next[l].begin(), dh_next[l].end(), 0.0);
      std::fill(dinput.begin(), dinput.begin() + static_cast<std::ptrdiff_t>(in), 0.0);
      for (std::size_t r = 0; r < 4 * H; ++r) {
        const double dzr = dz[r];
        g.bias[r] += dzr;
        if (dzr == 0.0) continue;
        double* gw = g.w.row(r);
        const double* w = layer.w.row(r);
        for (std::size_t k = 0; k < in; ++k) {
          gw[k] += dzr * v[k];
          dinput[k] += dzr * w[k];
        }
        double* gu = g.u.row(r);
        const double* u = layer.u.row(r);
        for (std::size_t k = 0; k < H; ++k) {
          gu[k] += dzr * hprev[k];
          dh_next[l][k] += dzr * u[k];
        }
      }
      const double* mask = &tape.mask[l][t * in];
      if (l > 0) {
        for (std::size_t k = 0; k < H; ++k) dh[k] = dinput[k] * mask[k];
      } else {
        double* erow = grad.embedding.row(static_cast<std::size_t>(tape.inputs[t]));
        for (std::size_t k = 0; k < in; ++k) erow[k] += dinput[k] * mask[k];
      }
    }
  }
}

double grad_norm(const Parameters& g) {
  double s = 0.0;
  for (const auto& [name, span] : g.blocks())
    for (double v : span) s += v * v;
  return std::sqrt(s);
}

// Input/target streams for one sequence: EOS starts the sequence and is the
// final target.
struct Stream {
  std::vector<int> inputs;
  std::vector<int> targets;
};

Stream make_stream(const Vocab& vocab, const TokenSeq& seq) {
  Stream s;
  const auto enc = vocab.encode(seq);
  s.inputs.push_back(Vocab::kEos);
  s.inputs.insert(s.inputs.end(), enc.begin(), enc.end());
  s.targets = enc;
  s.targets.push_back(Vocab::kEos);
  return s;
}

// Evaluation-mode step: consumes token, leaves the next-item distribution in
// probs.
void eval_step(const Parameters& p, const Dims& d, int token, State& state, std::vector<double>& z,
               std::vector<double>& gates, std::vector<double>& tc, std::vector<double>& probs) {
  for (std::size_t l = 0; l < d.layers; ++l) {
    const double* input = l == 0 ? p.embedding.row(static_cast<std::size_t>(token)) : state.h[l - 1].data();
    cell_step(p.layers[l], d.hidden, input, d.input(l), state.h[l], state.c[l], z.data(), gates.data(), tc.data());
  }
  softmax_out(p, d, state.h.back().data(), probs.data());
}

struct LogLik {
  double nll = 0.0;
  std::size_t items = 0;
};

LogLik sequence_nll(const SeqModel& m, const TokenSeq& seq) {
  const Dims d = dims_of(m);
  const Stream s = make_stream(m.vocab, seq);
  State state(d);
  std::vector<double> z(4 * d.hidden), gates(4 * d.hidden), tc(d.hidden), probs(d.vocab);
  LogLik out;
  for (std::size_t t = 0; t < s.inputs.size(); ++t) {
    eval_step(m.params, d, s.inputs[t], state, z, gates, tc, probs);
    out.nll -= std::log(probs[static_cast<std::size_t>(s.targets[t])]);
    ++out.items;
  }
  return out;
}

}  // namespace

SeqModel init_model(Vocab vocab, const LstmConfig& cfg) {
  validate(cfg);
  require(vocab.size() > 2, ErrorCategory::kData, "vocabulary has no system labels");
  SeqModel m;
  m.vocab = std::move(vocab);
  m.config = cfg;
  const Dims d = dims_of(m);
  m.params = zero_parameters(d);
  Rng rng(Rng::derive_seed(cfg.seed, 1));
  for (auto& [name, span] : m.params.blocks())
    for (double& v : span) v = rng.uniform(-cfg.init_scale, cfg.init_scale);
  return m;
}

Split split_by_vehicle(std::size_t n, std::uint64_t seed) {
  require(n >= 4, ErrorCategory::kInvalidArgument, "need at least 4 sequences to split (got " + std::to_string(n) + ")");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  Rng rng(Rng::derive_seed(seed, 2));
  for (std::size_t k = n - 1; k > 0; --k) std::swap(order[k], order[rng.uniform_index(k + 1)]);
  const std::size_t quarter = n / 4;
  const std::size_t n_train = n - 2 * quarter;
  Split s;
  s.train.assign(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(n_train));
  s.valid.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train),
                 order.begin() + static_cast<std::ptrdiff_t>(n_train + quarter));
  s.test.assign(order.begin() + static_cast<std::ptrdiff_t>(n_train + quarter), order.end());
  for (auto* part : {&s.train, &s.valid, &s.test}) std::sort(part->begin(), part->end());
  return s;
}

SeqModel train(const std::vector<TokenSeq>& train_set, const std::vector<TokenSeq>& valid, const LstmConfig& cfg) {
  validate(cfg);
  require(!train_set.empty(), ErrorCategory::kInvalidArgument, "training set is empty");
  SeqModel model = init_model(Vocab::build(train_set), cfg);
  const Dims d = dims_of(model);

  std::vector<Stream> streams;
  streams.reserve(train_set.size());
  for (const auto& s : train_set) streams.push_back(make_stream(model.vocab, s));

  Rng shuffle_rng(Rng::derive_seed(cfg.seed, 3));
  Rng dropout_rng(Rng::derive_seed(cfg.seed, 4));
  const bool use_dropout = cfg.dropout_keep < 1.0;
  const auto steps = static_cast<std::size_t>(cfg.bptt_steps);
  const auto batch = static_cast<std::size_t>(cfg.batch_size);

  Parameters grad = zero_parameters(d);
  Parameters best = model.params;
  double best_ppl = std::numeric_limits<double>::infinity();
  Tape tape;

  std::vector<std::size_t> order(streams.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
    const double lr = learning_rate(cfg, epoch);
    for (std::size_t k = order.size() - 1; k > 0; --k) std::swap(order[k], order[shuffle_rng.uniform_index(k + 1)]);

    double epoch_nll = 0.0;
    std::size_t epoch_items = 0;
    for (std::size_t b0 = 0; b0 < order.size(); b0 += batch) {
      const std::size_t b1 = std::min(order.size(), b0 + batch);
      std::vector<State> states(b1 - b0, State(d));
      std::size_t chunks = 0;
      for (std::size_t b = b0; b < b1; ++b)
        chunks = std::max(chunks, (streams[order[b]].inputs.size() + steps - 1) / steps);

      for (std::size_t chunk = 0; chunk < chunks; ++chunk) {
        fill_zero(grad);
        std::size_t active = 0;
        double chunk_nll = 0.0;
        for (std::size_t b = b0; b < b1; ++b) {
          const Stream& s = streams[order[b]];
          const std::size_t lo = chunk * steps;
          if (lo >= s.inputs.size()) continue;
          const std::size_t hi = std::min(s.inputs.size(), lo + steps);
          const std::span<const int> in(s.inputs.data() + lo, hi - lo);
          const std::span<const int> tg(s.targets.data() + lo, hi - lo);
          const double nll =
              forward_chunk(model.params, d, in, tg, states[b - b0], tape, use_dropout ? &dropout_rng : nullptr,
                            cfg.dropout_keep);
          backward_chunk(model.params, d, tape, grad, 1.0, false);
          chunk_nll += nll;
          epoch_items += hi - lo;
          ++active;
        }
        require(std::isfinite(chunk_nll), ErrorCategory::kNumeric,
                "non-finite training loss at epoch " + std::to_string(epoch) + "; lower lr or max_grad_norm");
        epoch_nll += chunk_nll;
        // Loss is summed over steps and averaged over the sequences in the batch.
        double factor = 1.0 / static_cast<double>(active);
        const double norm = grad_norm(grad) * factor;
        require(std::isfinite(norm), ErrorCategory::kNumeric, "non-finite gradient at epoch " + std::to_string(epoch));
        if (norm > cfg.max_grad_norm) factor *= cfg.max_grad_norm / norm;
        auto pblocks = model.params.blocks();
        auto gblocks = grad.blocks();
        for (std::size_t n = 0; n < pblocks.size(); ++n) {
          auto pv = pblocks[n].second;
          auto gv = gblocks[n].second;
          for (std::size_t k = 0; k < pv.size(); ++k) pv[k] -= lr * factor * gv[k];
        }
      }
    }
    model.train_history.push_back(std::exp(epoch_nll / static_cast<double>(epoch_items)));
    const double ppl = valid.empty() ? model.train_history.back() : perplexity(model, valid);
    model.valid_history.push_back(ppl);
    if (ppl < best_ppl) {
      best_ppl = ppl;
      best = model.params;
      model.best_epoch = epoch;
    }
  }
  model.params = std::move(best);
  return model;
}

double perplexity(const SeqModel& model, const std::vector<TokenSeq>& seqs) {
  require(!seqs.empty(), ErrorCategory::kInvalidArgument, "evaluation set is empty");
  double nll = 0.0;
  std::size_t items = 0;
  for (const auto& s : seqs) {
    const auto ll = sequence_nll(model, s);
    nll += ll.nll;
    items += ll.items;
  }
  return std::exp(nll / static_cast<double>(items));
}

UnigramModel unigram_baseline(const std::vector<TokenSeq>& train_set) {
  require(!train_set.empty(), ErrorCategory::kInvalidArgument, "training set is empty");
  UnigramModel m;
  m.vocab = Vocab::build(train_set);
  std::vector<double> counts(m.vocab.size(), 1.0);
  double total = static_cast<double>(m.vocab.size());
  for (const auto& s : train_set) {
    for (int idx : m.vocab.encode(s)) counts[static_cast<std::size_t>(idx)] += 1.0;
    counts[Vocab::kEos] += 1.0;
    total += static_cast<double>(s.size() + 1);
  }
  m.probs.resize(counts.size());
  for (std::size_t n = 0; n < counts.size(); ++n) m.probs[n] = counts[n] / total;
  return m;
}

double perplexity(const UnigramModel& model, const std::vector<TokenSeq>& seqs) {
  require(!seqs.empty(), ErrorCategory::kInvalidArgument, "evaluation set is empty");
  double nll = 0.0;
  std::size_t items = 0;
  for (const auto& s : seqs) {
    for (int idx : model.vocab.encode(s)) nll -= std::log(model.probs[static_cast<std::size_t>(idx)]);
    nll -= std::log(model.probs[Vocab::kEos]);
    items += s.size() + 1;
  }
  return std::exp(nll / static_cast<double>(items));
}

std::vector<double> next_distribution(const SeqModel& model, const TokenSeq& prefix) {
  const Dims d = dims_of(model);
  State state(d);
  std::vector<double> z(4 * d.hidden), gates(4 * d.hidden), tc(d.hidden), probs(d.vocab);
  eval_step(model.params, d, Vocab::kEos, state, z, gates, tc, probs);
  const std::size_t start = prefix.size() > kContextCap ? prefix.size() - kContextCap : 0;
  for (std::size_t n = start; n < prefix.size(); ++n)
    eval_step(model.params, d, model.vocab.index(prefix[n]), state, z, gates, tc, probs);
  return probs;
}

std::vector<Prediction> predict_next(const SeqModel& model, const TokenSeq& prefix, std::size_t top_k) {
  const auto probs = next_distribution(model, prefix);
  std::vector<std::size_t> order(probs.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return probs[a] > probs[b]; });
  std::vector<Prediction> out;
  for (std::size_t n = 0; n < std::min(top_k, order.size()); ++n)
    out.push_back({model.vocab.label(static_cast<int>(order[n])), probs[order[n]]});
  return out;
}

GradCheckResult grad_check(const LstmConfig& cfg_in, const TokenSeq& sequence, const GradCheckOptions& opts) {
  GradCheckResult result;
  if (sequence.empty()) return result;

  LstmConfig cfg = cfg_in;
  cfg.dropout_keep = 1.0;
  require(cfg.embed_dim <= 8 && cfg.hidden_dim <= 8, ErrorCategory::kInvalidArgument,
          "grad_check expects embed_dim and hidden_dim <= 8");
  SeqModel model = init_model(Vocab::build({sequence}), cfg);
  require(model.vocab.size() <= 6, ErrorCategory::kInvalidArgument, "grad_check expects a vocabulary of at most 6");
  const Dims d = dims_of(model);
  const Stream s = make_stream(model.vocab, sequence);

  Tape tape;
  auto loss = [&](const Parameters& p) {
    State st(d);
    return forward_chunk(p, d, s.inputs, s.targets, st, tape, nullptr, 1.0);
  };

  Parameters analytic = zero_parameters(d);
  {
    State st(d);
    forward_chunk(model.params, d, s.inputs, s.targets, st, tape, nullptr, 1.0);
    backward_chunk(model.params, d, tape, analytic, 1.0, opts.corrupt_forget_gate);
  }

  auto pblocks = model.params.blocks();
  const auto ablocks = analytic.blocks();
  for (std::size_t n = 0; n < pblocks.size(); ++n) {
    auto& [name, values] = pblocks[n];
    double block_max = 0.0;
    for (std::size_t k = 0; k < values.size(); ++k) {
      const double saved = values[k];
      values[k] = saved + opts.step;
      const double up = loss(model.params);
      values[k] = saved - opts.step;
      const double down = loss(model.params);
      values[k] = saved;
      const double numeric = (up - down) / (2.0 * opts.step);
      const double a = ablocks[n].second[k];
      const double rel = std::abs(a - numeric) / std::max(std::abs(a) + std::abs(numeric), 1e-8);
      block_max = std::max(block_max, rel);
    }
    result.per_block[name] = block_max;
    if (block_max > result.max_rel_error) {
      result.max_rel_error = block_max;
      result.worst_block = name;
    }
  }
  result.passed = result.max_rel_error < opts.tolerance;
  return result;
}

// ---------------------------------------------------------------------------
// Serialization

namespace {

constexpr char kMagic[8] = {'F', 'L', 'M', 'X', 'L', 'S', 'T', 'M'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  require(static_cast<bool>(in), ErrorCategory::kParse, "model file truncated");
  return v;
}

void put_string(std::ostream& out, const std::string& s) {
  put<std::uint64_t>(out, s.size());
  out.write(s.data(), static_cast<std::streamsize>(s.size()));
}

std::string get_string(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  require(n < (1u << 20), ErrorCategory::kParse, "model file: implausible string length");
  std::string s(n, '\0');
  in.read(s.data(), static_cast<std::streamsize>(n));
  require(static_cast<bool>(in), ErrorCategory::kParse, "model file truncated");
  return s;
}

void put_doubles(std::ostream& out, std::span<const double> v) {
  put<std::uint64_t>(out, v.size());
  out.write(reinterpret_cast<const char*>(v.data()), static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::vector<double> get_doubles(std::istream& in) {
  const auto n = get<std::uint64_t>(in);
  require(n < (1ull << 32), ErrorCategory::kParse, "model file: implausible block size");
  std::vector<double> v(n);
  in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
  require(static_cast<bool>(in), ErrorCategory::kParse, "model file truncated");
  return v;
}

}  // namespace

void write_model(std::ostream& out, const SeqModel& m) {
  out.write(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  const LstmConfig& c = m.config;
  for (std::int64_t v : {std::int64_t{c.embed_dim}, std::int64_t{c.hidden_dim}, std::int64_t{c.layers},
                         std::int64_t{c.bptt_steps}, std::int64_t{c.batch_size}, std::int64_t{c.epochs},
                         std::int64_t{c.decay_after}})
    put<std::int64_t>(out, v);
  for (double v : {c.dropout_keep, c.lr, c.lr_decay, c.max_grad_norm, c.init_scale}) put<double>(out, v);
  put<std::uint64_t>(out, c.seed);

  // Reserved labels are implicit; store system labels only.
  const auto& labels = m.vocab.labels();
  put<std::uint64_t>(out, labels.size() - 2);
  for (std::size_t n = 2; n < labels.size(); ++n) put_string(out, labels[n]);

  const auto blocks = m.params.blocks();
  put<std::uint64_t>(out, blocks.size());
  const Dims d = dims_of(m);
  std::vector<std::pair<std::size_t, std::size_t>> shapes;
  shapes.emplace_back(d.vocab, d.embed);
  for (std::size_t l = 0; l < d.layers; ++l) {
    shapes.emplace_back(4 * d.hidden, d.input(l));
    shapes.emplace_back(4 * d.hidden, d.hidden);
    shapes.emplace_back(4 * d.hidden, 1);
  }
  shapes.emplace_back(d.hidden, d.vocab);
  shapes.emplace_back(d.vocab, 1);
  for (std::size_t n = 0; n < blocks.size(); ++n) {
    put_string(out, blocks[n].first);
    put<std::uint64_t>(out, shapes[n].first);
    put<std::uint64_t>(out, shapes[n].second);
    put_doubles(out, blocks[n].second);
  }
  put_doubles(out, m.train_history);
  put_doubles(out, m.valid_history);
  put<std::int64_t>(out, m.best_epoch);
}

SeqModel read_model(std::istream& in) {
  char magic[8];
  in.read(magic, sizeof(magic));
  require(static_cast<bool>(in) && std::memcmp(magic, kMagic, sizeof(magic)) == 0, ErrorCategory::kParse,
          "not a sequence model file (bad magic)");
  const auto version = get<std::uint32_t>(in);
  require(version == kVersion, ErrorCategory::kParse, "unsupported model version " + std::to_string(version));
  SeqModel m;
  LstmConfig& c = m.config;
  c.embed_dim = static_cast<int>(get<std::int64_t>(in));
  c.hidden_dim = static_cast<int>(get<std::int64_t>(in));
  c.layers = static_cast<int>(get<std::int64_t>(in));
  c.bptt_steps = static_cast<int>(get<std::int64_t>(in));
  c.batch_size = static_cast<int>(get<std::int64_t>(in));
  c.epochs = static_cast<int>(get<std::int64_t>(in));
  c.decay_after = static_cast<int>(get<std::int64_t>(in));
  c.dropout_keep = get<double>(in);
  c.lr = get<double>(in);
  c.lr_decay = get<double>(in);
  c.max_grad_norm = get<double>(in);
  c.init_scale = get<double>(in);
  c.seed = get<std::uint64_t>(in);
  validate(c);

  const auto n_labels = get<std::uint64_t>(in);
  std::vector<std::string> labels;
  for (std::uint64_t n = 0; n < n_labels; ++n) labels.push_back(get_string(in));
  m.vocab = Vocab(std::move(labels));
  require(m.vocab.size() == n_labels + 2, ErrorCategory::kParse, "model file: vocabulary labels not unique");

  const Dims d = dims_of(m);
  m.params = zero_parameters(d);
  auto blocks = m.params.blocks();
  const auto n_blocks = get<std::uint64_t>(in);
  require(n_blocks == blocks.size(), ErrorCategory::kParse, "model file: parameter block count mismatch");
  for (auto& [name, span] : blocks) {
    const auto stored = get_string(in);
    require(stored == name, ErrorCategory::kParse, "model file: expected block '" + name + "', found '" + stored + "'");
    const auto rows = get<std::uint64_t>(in);
    const auto cols = get<std::uint64_t>(in);
    const auto values = get_doubles(in);
    require(rows * cols == span.size() && values.size() == span.size(), ErrorCategory::kParse,
            "model file: block '" + name + "' has the wrong shape");
    std::copy(values.begin(), values.end(), span.begin());
  }
  m.train_history = get_doubles(in);
  m.valid_history = get_doubles(in);
  m.best_epoch = static_cast<int>(get<std::int64_t>(in));
  return m;
}

void save_model(const std::string& path, const SeqModel& model) {
  std::ofstream out(path, std::ios::binary);
  require(static_cast<bool>(out), ErrorCategory::kIo, "cannot open '" + path + "' for writing");
  write_model(out, model);
  require(static_cast<bool>(out), ErrorCategory::kIo, "failed writing '" + path + "'");
}

SeqModel load_model(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  require(static_cast<bool>(in), ErrorCategory::kIo, "cannot open '" + path + "'");
  return read_model(in);
}

}  // namespace fleetmx::seqmodel
