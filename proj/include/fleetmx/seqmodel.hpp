#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "fleetmx/tensor.hpp"

namespace fleetmx::seqmodel {

using tensor::Matrix;
using TokenSeq = std::vector<std::string>;

/// Label↔index map. Index 0 is UNK and 1 is EOS; system labels follow in
/// sorted order.
class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr int kEos = 1;
  static constexpr std::string_view kUnkLabel = "<unk>";
  static constexpr std::string_view kEosLabel = "<eos>";

  Vocab() : Vocab(std::vector<std::string>{}) {}
  /// labels: system labels (duplicates and reserved names are dropped).
  explicit Vocab(std::vector<std::string> labels);
  static Vocab build(const std::vector<TokenSeq>& train);

  std::size_t size() const noexcept { return labels_.size(); }
  int index(std::string_view label) const;
  const std::string& label(int idx) const { return labels_.at(static_cast<std::size_t>(idx)); }
  const std::vector<std::string>& labels() const noexcept { return labels_; }
  std::vector<int> encode(const TokenSeq& seq) const;

  bool operator==(const Vocab& other) const { return labels_ == other.labels_; }

 private:
  std::vector<std::string> labels_;
  std::map<std::string, int, std::less<>> index_;
};

struct LstmConfig {
  int embed_dim = 32;
  int hidden_dim = 64;
  int layers = 2;
  double dropout_keep = 0.75;
  int bptt_steps = 20;
  int batch_size = 8;
  int epochs = 20;
  double lr = 1.0;
  int decay_after = 6;   // epochs at the base rate before decay starts
  double lr_decay = 0.7;
  double max_grad_norm = 5.0;
  double init_scale = 0.1;  // parameters start uniform in ±init_scale
  std::uint64_t seed = 20170901;

  bool operator==(const LstmConfig&) const = default;
};

void validate(const LstmConfig& cfg);
/// Learning rate used during the given 1-based epoch.
double learning_rate(const LstmConfig& cfg, int epoch);

/// "key = value" lines, '#' starts a comment; keys are the LstmConfig field
/// names. Values override those already in base.
LstmConfig parse_config(std::istream& in, LstmConfig base = {});
LstmConfig load_config(const std::string& path, LstmConfig base = {});

struct LstmLayer {
  Matrix w;                   // 4H × input, gate blocks ordered input, forget, cell, output
  Matrix u;                   // 4H × H
  std::vector<double> bias;   // 4H

  bool operator==(const LstmLayer&) const = default;
};

struct Parameters {
  Matrix embedding;               // V × E
  std::vector<LstmLayer> layers;
  Matrix proj;                    // H × V
  std::vector<double> proj_bias;  // V

  /// Every parameter block with a stable name, for iteration.
  std::vector<std::pair<std::string, std::span<double>>> blocks();
  std::vector<std::pair<std::string, std::span<const double>>> blocks() const;
  bool operator==(const Parameters&) const = default;
};

struct SeqModel {
  Vocab vocab;
  LstmConfig config;
  Parameters params;
  std::vector<double> train_history;  // training perplexity per epoch
  std::vector<double> valid_history;  // validation perplexity per epoch
  int best_epoch = 0;
};

/// Fresh model with parameters uniform in ±cfg.init_scale.
SeqModel init_model(Vocab vocab, const LstmConfig& cfg);

struct Split {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
};

/// 50/25/25 vehicle-level partition of n sequences: valid and test get
/// floor(n/4) each, train the rest. Index lists are sorted.
Split split_by_vehicle(std::size_t n, std::uint64_t seed);

/// Truncated-BPTT SGD; returns the parameters of the epoch with the lowest
/// validation perplexity (training perplexity when valid is empty).
SeqModel train(const std::vector<TokenSeq>& train, const std::vector<TokenSeq>& valid, const LstmConfig& cfg);

/// exp of the mean negative log-probability over every predicted item,
/// including each sequence's EOS. Dropout is off.
double perplexity(const SeqModel& model, const std::vector<TokenSeq>& seqs);

struct UnigramModel {
  Vocab vocab;
  std::vector<double> probs;
};

/// Add-one smoothed frequencies over the training vocabulary (UNK and EOS
/// included), independent of position.
UnigramModel unigram_baseline(const std::vector<TokenSeq>& train);
double perplexity(const UnigramModel& model, const std::vector<TokenSeq>& seqs);

inline constexpr std::size_t kContextCap = 20;

/// Full next-item distribution after the given prefix (last 20 items used).
std::vector<double> next_distribution(const SeqModel& model, const TokenSeq& prefix);

struct Prediction {
  std::string label;
  double probability = 0.0;
};

/// Top-k next items, ties broken by vocabulary index.
std::vector<Prediction> predict_next(const SeqModel& model, const TokenSeq& prefix, std::size_t top_k);

struct GradCheckOptions {
  double step = 1e-5;
  double tolerance = 1e-4;
  /// Negative-control fixture: perturbs the analytic forget-gate gradient.
  bool corrupt_forget_gate = false;
};

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::string worst_block;
  std::map<std::string, double> per_block;
  bool passed = true;
};

/// Analytic gradients of the summed sequence loss against central finite
/// differences, for every parameter block. Requires V ≤ 6 and all dims ≤ 8;
/// dropout is disabled.
GradCheckResult grad_check(const LstmConfig& cfg, const TokenSeq& sequence, const GradCheckOptions& opts = {});

/// Versioned binary format ("FLMXLSTM", version 1); round trips bit-exactly.
void write_model(std::ostream& out, const SeqModel& model);
SeqModel read_model(std::istream& in);
void save_model(const std::string& path, const SeqModel& model);
SeqModel load_model(const std::string& path);

}  // namespace fleetmx::seqmodel
