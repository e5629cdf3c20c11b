#include "pdalign/train.hpp"

#include <cmath>
#include <nlohmann/json.hpp>
#include <thread>
#include <unordered_set>

#include "pdalign/errors.hpp"
#include "pdalign/io_util.hpp"
#include "pdalign/rng.hpp"

namespace pdalign {

namespace {

struct TrainRow {
  Vec x;  // normalized image-embedding difference
  std::vector<std::uint32_t> tokens;
};

// Shards [0, n) into contiguous blocks, runs fn(begin, end) on each worker.
template <class Fn>
void parallel_blocks(std::size_t n, unsigned workers, Fn&& fn) {
  if (workers <= 1 || n <= 1) {
    fn(0, n, 0);
    return;
  }
  const unsigned w = std::min<std::size_t>(workers, n);
  std::vector<std::thread> pool;
  pool.reserve(w);
  const std::size_t chunk = (n + w - 1) / w;
  for (unsigned i = 0; i < w; ++i) {
    const std::size_t begin = std::size_t(i) * chunk;
    const std::size_t end = std::min(n, begin + chunk);
    if (begin >= end) break;
    pool.emplace_back([&fn, begin, end, i] { fn(begin, end, i); });
  }
  for (auto& t : pool) t.join();
}

LossGrad evaluate_loss(LossKind kind, const Mat& x, const Mat& y,
                       double tau) {
  return kind == LossKind::Contrastive ? contrastive_loss(x, y, tau)
                                       : mse_loss(x, y);
}

}  // namespace

LossKind loss_kind_from_string(const std::string& s) {
  if (s == "contrastive") return LossKind::Contrastive;
  if (s == "mse") return LossKind::Mse;
  throw ConfigError("unknown loss: " + s);
}

std::string to_string(LossKind kind) {
  return kind == LossKind::Contrastive ? "contrastive" : "mse";
}

double lr_at_epoch(const TrainConfig& config, std::uint32_t epoch) {
  return config.lr * std::pow(config.lr_gamma, double(epoch));
}

std::string train_log_jsonl(const TrainLog& log) {
  std::string out;
  for (const auto& e : log.epochs) {
    nlohmann::json j;
    j["epoch"] = e.epoch;
    j["mean_loss"] = e.mean_loss;
    j["lr"] = e.lr;
    out += j.dump();
    out += '\n';
  }
  return out;
}

void write_train_log(const TrainLog& log,
                     const std::filesystem::path& path) {
  write_file_atomic(path, train_log_jsonl(log));
}

TrainLog fit(EncoderParams& params,
             const std::vector<ComparisonRecord>& records,
             const EmbeddingTable& images, const TrainConfig& config) {
  if (!(config.tau > 0.0)) throw ConfigError("tau must be positive");
  if (!(config.lr > 0.0)) throw ConfigError("lr must be positive");
  if (!(config.lr_gamma > 0.0 && config.lr_gamma <= 1.0)) {
    throw ConfigError("lr_gamma must be in (0, 1]");
  }
  const std::uint32_t min_batch =
      config.loss == LossKind::Contrastive ? 2 : 1;
  if (config.batch_size < min_batch) {
    throw ConfigError("batch_size must be >= " + std::to_string(min_batch) +
                      " for " + to_string(config.loss) + " loss");
  }

  TrainLog log;
  log.seed = config.seed;
  log.workers = std::max(1u, config.workers);

  // Resolve and validate everything before the first update step.
  std::vector<TrainRow> rows;
  rows.reserve(records.size());
  for (std::size_t r = 0; r < records.size(); ++r) {
    const auto& rec = records[r];
    const auto ia = images.find(rec.id_a);
    const auto ib = images.find(rec.id_b);
    if (!ia || !ib) {
      throw DataError("record " + std::to_string(r) + ": id " +
                      (ia ? rec.id_b : rec.id_a) + " not in image table");
    }
    if (!rec.filter_status.usable()) {
      ++log.rows_skipped_rejected;
      continue;
    }
    TrainRow row;
    row.tokens = tokenize_hashed(rec.difference_text, params.vocab_size);
    if (row.tokens.empty()) {
      throw DataError("record " + std::to_string(r) +
                      ": difference_text has no tokens");
    }
    Vec diff = subtract(images.row_vec(*ia), images.row_vec(*ib));
    const double n = l2_norm(diff);
    if (n < 1e-12) {
      ++log.rows_skipped_zero_diff;
      continue;
    }
    for (auto& v : diff) v /= n;
    row.x = std::move(diff);
    rows.push_back(std::move(row));
  }
  log.rows_used = rows.size();

  DetRng shuffle_rng(config.seed);
  std::vector<std::size_t> order(rows.size());
  for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;

  const std::size_t dim = params.out_dim;
  EncoderGrads grads(params);
  std::vector<EncoderGrads> partials;
  for (unsigned w = 0; w < log.workers; ++w) partials.emplace_back(params);

  for (std::uint32_t epoch = 0; epoch < config.epochs; ++epoch) {
    shuffle_rng.shuffle(order);
    const double lr = lr_at_epoch(config, epoch);

    double loss_sum = 0.0;
    std::uint32_t batches = 0;
    for (std::size_t start = 0; start < rows.size();
         start += config.batch_size) {
      const std::size_t m =
          std::min<std::size_t>(config.batch_size, rows.size() - start);
      // A 1-row contrastive softmax is degenerate; drop the remainder.
      if (config.loss == LossKind::Contrastive && m < 2) break;

      Mat x(m, dim);
      Mat y(m, dim);
      std::vector<EncodeTape> tapes(m);
      parallel_blocks(m, log.workers,
                      [&](std::size_t begin, std::size_t end, unsigned) {
                        for (std::size_t i = begin; i < end; ++i) {
                          const TrainRow& row = rows[order[start + i]];
                          tapes[i] = encode_forward(params, row.tokens);
                          x.set_row(i, row.x);
                          y.set_row(i, tapes[i].out);
                        }
                      });

      const LossGrad lg = evaluate_loss(config.loss, x, y, config.tau);
      if (!std::isfinite(lg.value)) {
        throw NumericalError("non-finite loss at epoch " +
                             std::to_string(epoch) + " batch " +
                             std::to_string(batches));
      }
      loss_sum += lg.value;
      ++batches;

      grads.zero();
      if (log.workers <= 1) {
        for (std::size_t i = 0; i < m; ++i) {
          encode_backward(params, tapes[i], lg.grad_y.row_vec(i), grads);
        }
      } else {
        for (auto& p : partials) p.zero();
        parallel_blocks(m, log.workers,
                        [&](std::size_t begin, std::size_t end, unsigned w) {
                          for (std::size_t i = begin; i < end; ++i) {
                            encode_backward(params, tapes[i],
                                            lg.grad_y.row_vec(i),
                                            partials[w]);
                          }
                        });
        // Reduce in fixed worker order so checkpoints stay byte-identical.
        for (const auto& p : partials) grads.add(p);
      }

      auto views = tensor_views(params);
      const std::vector<double>* gs[] = {&grads.token_table, &grads.w1,
                                         &grads.b1, &grads.w2, &grads.b2};
      bool finite = true;
      for (std::size_t t = 0; t < views.size(); ++t) {
        auto& dst = *views[t].data;
        const auto& g = *gs[t];
        for (std::size_t i = 0; i < dst.size(); ++i) {
          dst[i] -= lr * g[i];
          finite = finite && std::isfinite(dst[i]);
        }
      }
      if (!finite) {
        throw NumericalError("non-finite parameters after update at epoch " +
                             std::to_string(epoch));
      }
    }

    EpochStats stats;
    stats.epoch = epoch;
    stats.mean_loss = batches > 0 ? loss_sum / batches : 0.0;
    stats.lr = lr;
    stats.batches = batches;
    log.epochs.push_back(stats);
  }
  return log;
}

double grad_check(const EncoderParams& params, const Mat& x,
                  const std::vector<std::string>& texts,
                  const GradCheckOptions& options) {
  if (options.n_samples == 0) {
    throw ConfigError("grad_check needs a positive parameter sample count");
  }
  if (!(options.epsilon > 0.0)) {
    throw ConfigError("epsilon must be positive");
  }
  if (texts.size() != x.rows) {
    throw DimError("texts and X row counts must match");
  }

  EncoderParams work = params;

  std::vector<std::vector<std::uint32_t>> tokens;
  tokens.reserve(texts.size());
  for (const auto& t : texts) {
    tokens.push_back(tokenize_hashed(t, work.vocab_size));
    if (tokens.back().empty()) throw EncodeError("text with no tokens");
  }

  const auto loss_of = [&](const EncoderParams& p) {
    Mat y(x.rows, p.out_dim);
    for (std::size_t i = 0; i < x.rows; ++i) {
      y.set_row(i, encode_forward(p, tokens[i]).out);
    }
    return evaluate_loss(options.loss, x, y, options.tau).value;
  };

  // Analytic gradient of the full batch loss.
  EncoderGrads grads(work);
  {
    Mat y(x.rows, work.out_dim);
    std::vector<EncodeTape> tapes;
    tapes.reserve(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) {
      tapes.push_back(encode_forward(work, tokens[i]));
      y.set_row(i, tapes[i].out);
    }
    const LossGrad lg = evaluate_loss(options.loss, x, y, options.tau);
    for (std::size_t i = 0; i < x.rows; ++i) {
      encode_backward(work, tapes[i], lg.grad_y.row_vec(i), grads);
    }
  }

  auto views = tensor_views(work);
  const std::vector<double>* gs[] = {&grads.token_table, &grads.w1, &grads.b1,
                                     &grads.w2, &grads.b2};
  const std::size_t total = work.parameter_count();

  std::vector<std::size_t> picks;
  if (options.n_samples >= total) {
    picks.resize(total);
    for (std::size_t i = 0; i < total; ++i) picks[i] = i;
  } else {
    DetRng rng(options.seed);
    std::unordered_set<std::size_t> seen;
    while (picks.size() < options.n_samples) {
      const std::size_t i = rng.next_below(total);
      if (seen.insert(i).second) picks.push_back(i);
    }
  }

  const auto locate = [&](std::size_t flat) {
    for (std::size_t t = 0; t < views.size(); ++t) {
      if (flat < views[t].data->size()) return std::pair{t, flat};
      flat -= views[t].data->size();
    }
    throw Error("flat index out of range");
  };

  double max_rel = 0.0;
  for (const std::size_t flat : picks) {
    const auto [t, i] = locate(flat);
    double& slot = (*views[t].data)[i];
    const double saved = slot;
    slot = saved + options.epsilon;
    const double up = loss_of(work);
    slot = saved - options.epsilon;
    const double down = loss_of(work);
    slot = saved;

    const double numeric = (up - down) / (2.0 * options.epsilon);
    const double analytic = (*gs[t])[i];
    const double rel = std::abs(analytic - numeric) /
                       std::max({std::abs(analytic), std::abs(numeric), 1e-8});
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace pdalign
