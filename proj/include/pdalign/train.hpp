#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "pdalign/comparisons.hpp"
#include "pdalign/encoder.hpp"
#include "pdalign/losses.hpp"
#include "pdalign/table.hpp"

namespace pdalign {

enum class LossKind { Contrastive, Mse };

LossKind loss_kind_from_string(const std::string& s);
std::string to_string(LossKind kind);

struct TrainConfig {
  double tau = 1.0;
  double lr = 1e-2;
  double lr_gamma = 0.9;
  std::uint32_t epochs = 20;
  std::uint32_t batch_size = 512;
  LossKind loss = LossKind::Contrastive;
  std::uint64_t seed = 0;
  std::uint32_t workers = 1;
};

// Learning rate at a given epoch: lr * gamma^epoch.
double lr_at_epoch(const TrainConfig& config, std::uint32_t epoch);

struct EpochStats {
  std::uint32_t epoch = 0;
  double mean_loss = 0.0;
  double lr = 0.0;
  std::uint32_t batches = 0;
};

struct TrainLog {
  std::vector<EpochStats> epochs;
  std::uint64_t seed = 0;
  std::uint32_t workers = 1;
  std::size_t rows_used = 0;
  std::size_t rows_skipped_rejected = 0;
  std::size_t rows_skipped_zero_diff = 0;
};

std::string train_log_jsonl(const TrainLog& log);
void write_train_log(const TrainLog& log, const std::filesystem::path& path);

// SGD over the selected loss with an exponential learning-rate schedule.
// Each usable record contributes one row: X = normalize(g(id_a) - g(id_b))
// from the frozen image table, Y = f(difference_text). Deterministic for a
// fixed (seed, workers): fixed shuffle stream, fixed reduction order.
//
// Throws DataError before training when any record id is missing from the
// table or a difference text has no tokens, and NumericalError when loss
// or parameters go non-finite. Zero-length difference vectors (identical
// image embeddings) are skipped and counted.
TrainLog fit(EncoderParams& params,
             const std::vector<ComparisonRecord>& records,
             const EmbeddingTable& images, const TrainConfig& config);

struct GradCheckOptions {
  LossKind loss = LossKind::Contrastive;
  double tau = 1.0;
  double epsilon = 1e-3;
  std::size_t n_samples = 200;
  std::uint64_t seed = 0;
};

// Max relative error between analytic parameter gradients and central
// finite differences over a random subset of parameters:
//   |analytic - numeric| / max(|analytic|, |numeric|, 1e-8).
// Throws ConfigError when n_samples is zero or epsilon is not positive.
double grad_check(const EncoderParams& params, const Mat& x,
                  const std::vector<std::string>& texts,
                  const GradCheckOptions& options);

}  // namespace pdalign
