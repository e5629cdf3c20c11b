#include <pybind11/functional.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "pdalign/comparisons.hpp"
#include "pdalign/encoder.hpp"
#include "pdalign/errors.hpp"
#include "pdalign/evaluate.hpp"
#include "pdalign/generation_client.hpp"
#include "pdalign/inference.hpp"
#include "pdalign/losses.hpp"
#include "pdalign/table.hpp"
#include "pdalign/toyworld.hpp"
#include "pdalign/train.hpp"

namespace py = pybind11;
using namespace pdalign;

namespace {

// Adapts a python callable (prompt, max_tokens) -> str into the client
// interface. Python-backed generation is single-threaded (the GIL), so
// pass max_inflight = 1.
class CallableClient : public GenerationClient {
 public:
  explicit CallableClient(py::function fn) : fn_(std::move(fn)) {}

  GenerationResult complete(const std::string& prompt,
                            int max_tokens) override {
    try {
      const std::string raw =
          fn_(prompt, max_tokens).cast<std::string>();
      return {true, truncate_tokens(raw, max_tokens), ""};
    } catch (const py::error_already_set& e) {
      return {false, "", e.what()};
    }
  }

 private:
  py::function fn_;
};

Mat mat_from_rows(const std::vector<Vec>& rows) {
  if (rows.empty()) return {};
  Mat m(rows.size(), rows[0].size());
  for (std::size_t i = 0; i < rows.size(); ++i) m.set_row(i, rows[i]);
  return m;
}

std::vector<Vec> rows_of(const Mat& m) {
  std::vector<Vec> rows;
  rows.reserve(m.rows);
  for (std::size_t i = 0; i < m.rows; ++i) rows.push_back(m.row_vec(i));
  return rows;
}

}  // namespace

PYBIND11_MODULE(_pdalign, m) {
  m.doc() = "pairwise-difference embedding alignment";

  const auto base = py::register_exception<Error>(m, "Error");
  py::register_exception<NormalizationError>(m, "NormalizationError", base);
  py::register_exception<DimError>(m, "DimError", base);
  py::register_exception<FormatError>(m, "FormatError", base);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<EncodeError>(m, "EncodeError", base);
  py::register_exception<DataError>(m, "DataError", base);
  py::register_exception<PreconditionError>(m, "PreconditionError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);

  // --- embed-core ---
  m.def("normalize", &normalize, py::arg("v"));
  m.def("cosine_similarity", &cosine_similarity, py::arg("u"), py::arg("v"));
  m.def("cosine_distance", &cosine_distance, py::arg("u"), py::arg("v"));

  py::class_<EmbeddingTable>(m, "EmbeddingTable")
      .def(py::init<std::vector<std::string>, std::vector<float>,
                    std::uint32_t, bool>(),
           py::arg("ids"), py::arg("data"), py::arg("dim"),
           py::arg("normalized"))
      .def_property_readonly("count", &EmbeddingTable::count)
      .def_property_readonly("dim", &EmbeddingTable::dim)
      .def_property_readonly("normalized", &EmbeddingTable::normalized)
      .def_property_readonly("ids", &EmbeddingTable::ids)
      .def("row", &EmbeddingTable::row_vec, py::arg("index"))
      .def("find", &EmbeddingTable::find, py::arg("id"))
      .def("vec_for", &EmbeddingTable::vec_for, py::arg("id"));
  m.def("read_table", &read_table, py::arg("path"));
  m.def("write_table", &write_table, py::arg("table"), py::arg("path"));

  // --- toyworld ---
  py::class_<ToyWorldConfig>(m, "ToyWorldConfig")
      .def(py::init<>())
      .def_readwrite("n_items", &ToyWorldConfig::n_items)
      .def_readwrite("n_kinds", &ToyWorldConfig::n_kinds)
      .def_readwrite("dim", &ToyWorldConfig::dim)
      .def_readwrite("noise_sigma", &ToyWorldConfig::noise_sigma)
      .def_readwrite("seed", &ToyWorldConfig::seed);

  py::class_<ToyItem>(m, "ToyItem")
      .def_readonly("id", &ToyItem::id)
      .def_readonly("attributes", &ToyItem::attributes)
      .def_readonly("caption", &ToyItem::caption)
      .def_readonly("image_embedding", &ToyItem::image_embedding)
      .def_property_readonly("attribute_names", [](const ToyItem& item) {
        return attribute_names(item.attributes);
      });

  py::class_<ToyWorld>(m, "ToyWorld")
      .def_property_readonly("items", &ToyWorld::items)
      .def_property_readonly("kind_names", &ToyWorld::kind_names)
      .def("image_table", &ToyWorld::image_table)
      .def("oracle_encode_text", &ToyWorld::oracle_encode_text,
           py::arg("text"))
      .def("attribute_embedding", &ToyWorld::attribute_embedding,
           py::arg("attributes"));

  m.def("generate_world", &generate_world, py::arg("config"));
  m.def("oracle_difference",
        py::overload_cast<const ToyItem&, const ToyItem&>(&oracle_difference),
        py::arg("a"), py::arg("b"));
  m.def("oracle_difference_attrs", &oracle_difference_attrs, py::arg("a"),
        py::arg("b"));
  m.def("write_world_jsonl", &write_world_jsonl, py::arg("world"),
        py::arg("path"));
  m.attr("NO_DIFFERENCE_TEXT") = kNoDifferenceText;

  py::class_<WorldItemRecord>(m, "WorldItemRecord")
      .def(py::init<>())
      .def_readwrite("id", &WorldItemRecord::id)
      .def_readwrite("attributes", &WorldItemRecord::attributes)
      .def_readwrite("caption", &WorldItemRecord::caption);
  m.def("read_world_jsonl", &read_world_jsonl, py::arg("path"));

  // --- comparison pipeline ---
  py::enum_<FilterState>(m, "FilterState")
      .value("ACCEPTED", FilterState::Accepted)
      .value("TRUNCATED", FilterState::Truncated)
      .value("REJECTED", FilterState::Rejected);

  py::class_<FilterStatus>(m, "FilterStatus")
      .def_readonly("state", &FilterStatus::state)
      .def_readonly("detail", &FilterStatus::detail)
      .def("usable", &FilterStatus::usable)
      .def("__str__",
           [](const FilterStatus& s) { return to_string(s); });

  py::class_<FilterResult>(m, "FilterResult")
      .def_readonly("accepted", &FilterResult::accepted)
      .def_readonly("text", &FilterResult::text)
      .def_readonly("reason", &FilterResult::reason)
      .def_readonly("rule", &FilterResult::rule)
      .def("status", &FilterResult::status);
  m.def("filter_generation", &filter_generation, py::arg("raw"));

  py::class_<ComparisonRecord>(m, "ComparisonRecord")
      .def(py::init<>())
      .def_readwrite("id_a", &ComparisonRecord::id_a)
      .def_readwrite("id_b", &ComparisonRecord::id_b)
      .def_readwrite("caption_a", &ComparisonRecord::caption_a)
      .def_readwrite("caption_b", &ComparisonRecord::caption_b)
      .def_readwrite("difference_text", &ComparisonRecord::difference_text)
      .def_readwrite("source", &ComparisonRecord::source)
      .def_readwrite("filter_status", &ComparisonRecord::filter_status);

  m.def("sample_pairs", &sample_pairs, py::arg("ids"), py::arg("n_source"),
        py::arg("seed"));
  m.def(
      "build_prompt",
      [](const std::string& style, const std::string& a,
         const std::string& b) {
        return build_prompt(prompt_style_from_string(style), a, b);
      },
      py::arg("style"), py::arg("caption_a"), py::arg("caption_b"));
  m.def("truncate_tokens", &truncate_tokens, py::arg("text"),
        py::arg("max_tokens"));

  m.def(
      "generate_dataset_oracle",
      [](const ToyWorld& world, const std::vector<IdPair>& pairs) {
        return generate_dataset_oracle(world, pairs);
      },
      py::arg("world"), py::arg("pairs"));
  m.def(
      "generate_dataset",
      [](py::function client, const std::vector<IdPair>& pairs,
         const CaptionMap& captions, const std::string& style,
         int max_tokens) {
        CallableClient adapter(std::move(client));
        GenerateOptions options;
        options.style = prompt_style_from_string(style);
        options.max_tokens = max_tokens;
        options.max_inflight = 1;  // python callables hold the GIL
        return generate_dataset(adapter, pairs, captions, options);
      },
      py::arg("client"), py::arg("pairs"), py::arg("captions"),
      py::arg("style") = "coco", py::arg("max_tokens") = 80);
  m.def("write_records", &write_records, py::arg("records"), py::arg("path"),
        py::arg("accepted_only") = false);
  m.def("read_records", &read_records, py::arg("path"));

  // --- encoder and training ---
  py::class_<EncoderConfig>(m, "EncoderConfig")
      .def(py::init<>())
      .def_readwrite("vocab_size", &EncoderConfig::vocab_size)
      .def_readwrite("token_dim", &EncoderConfig::token_dim)
      .def_readwrite("hidden_dim", &EncoderConfig::hidden_dim)
      .def_readwrite("out_dim", &EncoderConfig::out_dim)
      .def_readwrite("seed", &EncoderConfig::seed);

  py::class_<EncoderParams>(m, "EncoderParams")
      .def_static("init", &EncoderParams::init, py::arg("config"))
      .def_property_readonly("vocab_size",
                             [](const EncoderParams& p) { return p.vocab_size; })
      .def_property_readonly("out_dim",
                             [](const EncoderParams& p) { return p.out_dim; })
      .def("parameter_count", &EncoderParams::parameter_count)
      .def("__eq__", [](const EncoderParams& a, const EncoderParams& b) {
        return a == b;
      });

  m.def("tokenize_hashed", &tokenize_hashed, py::arg("text"),
        py::arg("vocab_size"));
  m.def("encode_text", &encode_text, py::arg("params"), py::arg("text"));
  m.def("ensemble_weights", &ensemble_weights, py::arg("a"), py::arg("b"));
  m.def("read_checkpoint", &read_checkpoint, py::arg("path"));
  m.def("write_checkpoint", &write_checkpoint, py::arg("params"),
        py::arg("path"));

  m.def(
      "contrastive_loss",
      [](const std::vector<Vec>& x, const std::vector<Vec>& y, double tau) {
        const auto lg = contrastive_loss(mat_from_rows(x), mat_from_rows(y),
                                         tau);
        return py::make_tuple(lg.value, rows_of(lg.grad_y));
      },
      py::arg("x"), py::arg("y"), py::arg("tau") = 1.0);
  m.def(
      "mse_loss",
      [](const std::vector<Vec>& x, const std::vector<Vec>& y) {
        const auto lg = mse_loss(mat_from_rows(x), mat_from_rows(y));
        return py::make_tuple(lg.value, rows_of(lg.grad_y));
      },
      py::arg("x"), py::arg("y"));

  py::class_<TrainConfig>(m, "TrainConfig")
      .def(py::init<>())
      .def_readwrite("tau", &TrainConfig::tau)
      .def_readwrite("lr", &TrainConfig::lr)
      .def_readwrite("lr_gamma", &TrainConfig::lr_gamma)
      .def_readwrite("epochs", &TrainConfig::epochs)
      .def_readwrite("batch_size", &TrainConfig::batch_size)
      .def_readwrite("seed", &TrainConfig::seed)
      .def_readwrite("workers", &TrainConfig::workers)
      .def_property(
          "loss",
          [](const TrainConfig& c) { return to_string(c.loss); },
          [](TrainConfig& c, const std::string& s) {
            c.loss = loss_kind_from_string(s);
          });

  py::class_<EpochStats>(m, "EpochStats")
      .def_readonly("epoch", &EpochStats::epoch)
      .def_readonly("mean_loss", &EpochStats::mean_loss)
      .def_readonly("lr", &EpochStats::lr)
      .def_readonly("batches", &EpochStats::batches);

  py::class_<TrainLog>(m, "TrainLog")
      .def_readonly("epochs", &TrainLog::epochs)
      .def_readonly("seed", &TrainLog::seed)
      .def_readonly("workers", &TrainLog::workers)
      .def_readonly("rows_used", &TrainLog::rows_used)
      .def_readonly("rows_skipped_rejected", &TrainLog::rows_skipped_rejected)
      .def_readonly("rows_skipped_zero_diff",
                    &TrainLog::rows_skipped_zero_diff);

  m.def(
      "fit",
      [](EncoderParams& params, const std::vector<ComparisonRecord>& records,
         const EmbeddingTable& images, const TrainConfig& config) {
        return fit(params, records, images, config);
      },
      py::arg("params"), py::arg("records"), py::arg("images"),
      py::arg("config"));

  py::class_<GradCheckOptions>(m, "GradCheckOptions")
      .def(py::init<>())
      .def_readwrite("tau", &GradCheckOptions::tau)
      .def_readwrite("epsilon", &GradCheckOptions::epsilon)
      .def_readwrite("n_samples", &GradCheckOptions::n_samples)
      .def_readwrite("seed", &GradCheckOptions::seed)
      .def_property(
          "loss",
          [](const GradCheckOptions& o) { return to_string(o.loss); },
          [](GradCheckOptions& o, const std::string& s) {
            o.loss = loss_kind_from_string(s);
          });
  m.def(
      "grad_check",
      [](const EncoderParams& params, const std::vector<Vec>& x,
         const std::vector<std::string>& texts,
         const GradCheckOptions& options) {
        return grad_check(params, mat_from_rows(x), texts, options);
      },
      py::arg("params"), py::arg("x"), py::arg("texts"), py::arg("options"));

  // --- inference ---
  py::enum_<PairSide>(m, "PairSide")
      .value("FIRST", PairSide::First)
      .value("SECOND", PairSide::Second);

  py::enum_<BankKind>(m, "BankKind")
      .value("STANDARD", BankKind::Standard)
      .value("EXTENDED", BankKind::Extended)
      .value("COMPARATIVE_UPDATED", BankKind::ComparativeUpdated);

  py::class_<PromptEntry>(m, "PromptEntry")
      .def_readwrite("class_name", &PromptEntry::class_name)
      .def_readwrite("prompt", &PromptEntry::prompt)
      .def_readwrite("embedding", &PromptEntry::embedding);

  py::class_<PromptBank>(m, "PromptBank")
      .def(py::init<>())
      .def_readwrite("kind", &PromptBank::kind)
      .def_readwrite("entries", &PromptBank::entries)
      .def("find", &PromptBank::find, py::arg("class_name"));

  m.def("make_prompt_bank", &make_prompt_bank, py::arg("kind"),
        py::arg("class_prompts"), py::arg("encoder"));

  py::class_<Classification>(m, "Classification")
      .def_readonly("index", &Classification::index)
      .def_readonly("class_name", &Classification::class_name)
      .def_readonly("scores", &Classification::scores);

  m.def("zeroshot_classify", &zeroshot_classify, py::arg("image"),
        py::arg("bank"));
  m.def("diff_classify", &diff_classify, py::arg("g_i"), py::arg("g_j"),
        py::arg("f_diff"));
  m.def("comparative_prompt", &comparative_prompt, py::arg("f_a"),
        py::arg("f_b"), py::arg("f_bma"), py::arg("alpha"));

  py::class_<ConfusionMatrix>(m, "ConfusionMatrix")
      .def(py::init<std::size_t>(), py::arg("classes"))
      .def_property_readonly("classes", &ConfusionMatrix::classes)
      .def("get",
           [](const ConfusionMatrix& c, std::size_t i, std::size_t j) {
             return c.at(i, j);
           })
      .def("set", [](ConfusionMatrix& c, std::size_t i, std::size_t j,
                     std::uint64_t v) { c.at(i, j) = v; });

  m.def("select_confused_pairs", &select_confused_pairs,
        py::arg("confusion"), py::arg("k"));

  py::class_<ClassDifference>(m, "ClassDifference")
      .def(py::init<>())
      .def_readwrite("class_b", &ClassDifference::class_b)
      .def_readwrite("class_a", &ClassDifference::class_a)
      .def_readwrite("difference_text", &ClassDifference::difference_text)
      .def_readwrite("embedding", &ClassDifference::embedding);

  m.def("apply_comparative_prompts", &apply_comparative_prompts,
        py::arg("bank"), py::arg("diffs"), py::arg("pairs"),
        py::arg("alpha"));
  m.def("write_prompt_bank", &write_prompt_bank, py::arg("bank"),
        py::arg("path"));
  m.def("read_prompt_bank", &read_prompt_bank, py::arg("path"),
        py::arg("encoder"));
  m.def("write_class_differences", &write_class_differences,
        py::arg("diffs"), py::arg("path"));
  m.def("read_class_differences", &read_class_differences, py::arg("path"),
        py::arg("encoder"));

  // --- evaluation ---
  py::class_<TaskPair>(m, "TaskPair")
      .def(py::init<>())
      .def_readwrite("id_i", &TaskPair::id_i)
      .def_readwrite("id_j", &TaskPair::id_j)
      .def_readwrite("difference_text", &TaskPair::difference_text)
      .def_readwrite("gold", &TaskPair::gold);

  py::class_<DifferenceTask>(m, "DifferenceTask")
      .def(py::init<>())
      .def_readwrite("pairs", &DifferenceTask::pairs);

  py::class_<AttrItem>(m, "AttrItem")
      .def(py::init<std::string, std::vector<std::string>>(), py::arg("id"),
           py::arg("attributes"))
      .def_readwrite("id", &AttrItem::id)
      .def_readwrite("attributes", &AttrItem::attributes);

  m.def("build_attribute_task", &build_attribute_task, py::arg("items"),
        py::arg("n_pairs"), py::arg("seed"),
        py::arg("excluded") = std::set<std::string>{});
  m.def("build_size_task", &build_size_task, py::arg("larger_ids"),
        py::arg("smaller_ids"), py::arg("n_pairs"), py::arg("seed"));
  m.def("build_color_task", &build_color_task, py::arg("color_first"),
        py::arg("first_ids"), py::arg("color_second"), py::arg("second_ids"),
        py::arg("n_pairs"), py::arg("seed"));
  m.def("build_llm_task", &build_llm_task, py::arg("records"),
        py::arg("n_pairs"), py::arg("seed"));

  py::class_<DifferenceEvalResult>(m, "DifferenceEvalResult")
      .def_readonly("accuracy", &DifferenceEvalResult::accuracy)
      .def_readonly("predictions", &DifferenceEvalResult::predictions);

  m.def("eval_difference", &eval_difference, py::arg("task"),
        py::arg("images"), py::arg("encoder"));

  py::class_<LocalizationRow>(m, "LocalizationRow")
      .def_readonly("class_b", &LocalizationRow::class_b)
      .def_readonly("class_a", &LocalizationRow::class_a)
      .def_readonly("d_fwd", &LocalizationRow::d_fwd)
      .def_readonly("d_rev", &LocalizationRow::d_rev);

  m.def("localization_report", &localization_report, py::arg("bank"),
        py::arg("diffs"));
  m.def("accuracy_mean_stderr", &accuracy_mean_stderr, py::arg("per_seed"));

  py::class_<ZeroshotEvalResult>(m, "ZeroshotEvalResult")
      .def_readonly("accuracy", &ZeroshotEvalResult::accuracy)
      .def_readonly("confusion", &ZeroshotEvalResult::confusion);

  m.def("eval_zeroshot", &eval_zeroshot, py::arg("labeled"),
        py::arg("images"), py::arg("bank"));
}
