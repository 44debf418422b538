#include "commands.hpp"

#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "json.hpp"

#include "absa/embeddings.hpp"
#include "absa/errors.hpp"
#include "absa/ian_model.hpp"
#include "absa/ote_model.hpp"
#include "absa/serialize.hpp"
#include "absa/text.hpp"
#include "gradcheck_suite.hpp"

namespace absa::tools {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

std::vector<AnnotatedSentence> load_sentences(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open " + path.string());
  if (path.extension() == ".xml") return parse_semeval_xml(in).sentences;
  return read_jsonl(in);
}

namespace {

struct Options {
  // shared
  std::string task;
  std::string data;
  std::string validation;
  std::string embeddings;
  std::string out;
  std::string history;
  std::string stopwords;
  std::uint64_t seed = 42;
  std::optional<int> epochs;
  std::optional<std::size_t> batch_size;
  std::optional<Index> hidden_dim;
  std::optional<Index> word_dim;
  std::optional<double> lr;
  std::optional<double> dropout;
  std::optional<double> clip;
  std::optional<int> patience;
  bool freeze_embeddings = false;
  bool constrain_iob = false;
  // eval / predict / inspect
  std::string model;
  std::string polarity_model;
  std::string text;
  // gradcheck
  std::string component;
};

const CLI::Validator kRate(
    [](std::string& s) -> std::string {
      double v = std::stod(s);
      return v >= 0.0 && v < 1.0 ? "" : "must be in [0, 1)";
    },
    "RATE in [0,1)");

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

std::optional<std::unordered_set<std::string>> load_stopwords(const std::string& path) {
  if (path.empty()) return std::nullopt;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ParseError("cannot open stopword list " + path);
  return read_stopwords(in);
}

const std::unordered_set<std::string>* ptr(const std::optional<std::unordered_set<std::string>>& s) {
  return s ? &*s : nullptr;
}

template <typename M>
const M& expect_model(const AnyModel& m, Task wanted, const std::string& path) {
  if (task_of(m) != wanted) {
    throw ContractError("task mismatch: " + path + " is a " + std::string(to_string(task_of(m))) +
                        " model, but the " + std::string(to_string(wanted)) + " task was requested");
  }
  return std::get<M>(m);
}

// ---------------------------------------------------------------------------

int cmd_ingest(const Options& o, std::ostream& out) {
  std::ifstream in(o.data, std::ios::binary);
  if (!in) throw ParseError("cannot open " + o.data);
  SemevalDocument doc = parse_semeval_xml(in);
  auto f = open_output(o.out);
  write_jsonl(f, doc.sentences);
  ordered_json counts;
  counts["reviews"] = doc.review_count;
  counts["sentences"] = doc.sentences.size();
  counts["tuples"] = doc.opinion_count();
  out << counts.dump() << "\n";
  return kExitOk;
}

int cmd_split(const Options& o, std::ostream& out) {
  auto split = split_dataset(load_sentences(o.data), kDefaultSplit, o.seed);
  const fs::path dir(o.out);
  fs::create_directories(dir);
  auto write = [&](const char* name, const std::vector<AnnotatedSentence>& part) {
    auto f = open_output(dir / name);
    write_jsonl(f, part);
  };
  write("train.jsonl", split.train);
  write("validation.jsonl", split.validation);
  write("test.jsonl", split.test);
  ordered_json counts;
  counts["train"] = split.train.size();
  counts["validation"] = split.validation.size();
  counts["test"] = split.test.size();
  out << counts.dump() << "\n";
  return kExitOk;
}

std::optional<EmbeddingTable> load_embeddings(const Options& o) {
  if (o.embeddings.empty()) return std::nullopt;
  std::ifstream in(o.embeddings, std::ios::binary);
  if (!in) throw ParseError("cannot open embeddings " + o.embeddings);
  return load_word_vectors(in, o.word_dim);
}

History train_ote_command(const Options& o, std::span<const AnnotatedSentence> train,
                          std::span<const AnnotatedSentence> validation,
                          const EmbeddingTable* pretrained, Rng& rng, std::ostream& err,
                          AnyModel& result) {
  OteConfig cfg;
  if (o.word_dim) cfg.word_dim = *o.word_dim;
  if (o.hidden_dim) cfg.hidden_dim = *o.hidden_dim;
  if (o.dropout) cfg.dropout = *o.dropout;
  OteTrainConfig tc;
  if (o.lr) tc.initial_lr = *o.lr;
  if (o.batch_size) tc.batch_size = *o.batch_size;
  if (o.clip) tc.clip_norm = *o.clip;
  if (o.epochs) tc.max_epochs = *o.epochs;
  if (o.patience) tc.patience = *o.patience;

  OteModel model = make_ote_model(cfg, train, pretrained, o.freeze_embeddings, rng);
  if (o.constrain_iob) {
    model.crf.constrain_iob(static_cast<Index>(IobTag::inside), static_cast<Index>(IobTag::outside));
  }
  auto history = train_ote(model, tc, train, validation.empty() ? train : validation, rng,
                           [&](const EpochRecord& r) {
                             err << "epoch " << r.epoch << " loss " << r.train_loss << " f1 "
                                 << r.validation_metric << "\n";
                           });
  result = std::move(model);
  return history;
}

History train_ian_command(const Options& o, std::span<const AnnotatedSentence> train,
                          std::span<const AnnotatedSentence> validation,
                          const EmbeddingTable* pretrained, Rng& rng, std::ostream& err,
                          AnyModel& result) {
  IanConfig cfg;
  if (o.word_dim) cfg.word_dim = *o.word_dim;
  if (o.hidden_dim) cfg.hidden_dim = *o.hidden_dim;
  if (o.dropout) cfg.dropout = *o.dropout;
  IanTrainConfig tc;
  if (o.lr) tc.adam.lr = *o.lr;
  if (o.batch_size) tc.batch_size = *o.batch_size;
  if (o.epochs) tc.epochs = *o.epochs;
  if (o.clip || o.patience) err << "note: --clip and --patience apply to the ote task only\n";

  auto stop = load_stopwords(o.stopwords);
  auto train_samples = make_polarity_samples(train, ptr(stop));
  auto val_samples = make_polarity_samples(validation, ptr(stop));
  if (train_samples.empty()) throw ValidationError("no opinions with polarity in " + o.data);

  IanModel model = make_ian_model(cfg, train, pretrained, o.freeze_embeddings, rng);
  auto history = train_ian(model, tc, train_samples, val_samples, rng, [&](const EpochRecord& r) {
    err << "epoch " << r.epoch << " loss " << r.train_loss << " accuracy " << r.validation_metric
        << "\n";
  });
  result = std::move(model);
  return history;
}

int cmd_train(const Options& o, std::ostream& out, std::ostream& err) {
  const Task task = parse_task(o.task);
  auto train = load_sentences(o.data);
  std::vector<AnnotatedSentence> validation;
  if (!o.validation.empty()) validation = load_sentences(o.validation);
  auto pretrained = load_embeddings(o);

  Rng rng(o.seed);
  AnyModel model;
  History history =
      task == Task::ote
          ? train_ote_command(o, train, validation, pretrained ? &*pretrained : nullptr, rng, err,
                              model)
          : train_ian_command(o, train, validation, pretrained ? &*pretrained : nullptr, rng, err,
                              model);

  save_model(fs::path(o.out), model);
  const fs::path history_path = o.history.empty() ? fs::path(o.out + ".history.json")
                                                  : fs::path(o.history);
  auto h = open_output(history_path);
  h << history.to_json() << "\n";

  ordered_json summary;
  summary["task"] = to_string(task);
  summary["model"] = o.out;
  summary["history"] = history_path.string();
  summary["epochs"] = history.epochs.size();
  summary["best_epoch"] = history.best_epoch;
  summary["best_metric"] = history.best_metric;
  out << summary.dump() << "\n";
  return kExitOk;
}

int cmd_eval(const Options& o, std::ostream& out) {
  AnyModel model = load_model(fs::path(o.model));
  const Task task = o.task.empty() ? task_of(model) : parse_task(o.task);
  auto sentences = load_sentences(o.data);
  if (task == Task::ote) {
    out << evaluate_ote(expect_model<OteModel>(model, task, o.model), sentences).to_json() << "\n";
  } else {
    const auto& ian = expect_model<IanModel>(model, task, o.model);
    auto stop = load_stopwords(o.stopwords);
    auto samples = make_polarity_samples(sentences, ptr(stop));
    if (samples.empty()) throw ValidationError("no opinions with polarity in " + o.data);
    out << evaluate_ian(ian, samples).to_json() << "\n";
  }
  return kExitOk;
}

int cmd_predict(const Options& o, std::ostream& out) {
  AnyModel ote_any = load_model(fs::path(o.model));
  const auto& ote = expect_model<OteModel>(ote_any, Task::ote, o.model);
  std::optional<AnyModel> ian_any;
  const IanModel* ian = nullptr;
  if (!o.polarity_model.empty()) {
    ian_any = load_model(fs::path(o.polarity_model));
    ian = &expect_model<IanModel>(*ian_any, Task::polarity, o.polarity_model);
  }
  auto stop = load_stopwords(o.stopwords);

  std::vector<std::string> lines;
  if (!o.text.empty()) {
    lines.push_back(o.text);
  } else {
    std::ifstream in(o.data, std::ios::binary);
    if (!in) throw ParseError("cannot open " + o.data);
    for (std::string line; std::getline(in, line);) {
      if (!line.empty() && line.back() == '\r') line.pop_back();
      lines.push_back(std::move(line));
    }
  }

  std::size_t n = 0;
  for (const auto& line : lines) {
    AnnotatedSentence s;
    s.text = line;
    s.tokens = tokenize(line);
    if (s.tokens.empty()) continue;
    s.id = "p" + std::to_string(++n);
    for (const Span& span : predict_ote(ote, s)) {
      OpinionTuple op;
      op.target = text::slice(s.text, span.start, span.end);
      op.from = span.start;
      op.to = span.end;
      if (ian) op.polarity = predict_polarity(*ian, s, span, ptr(stop)).label;
      s.opinions.push_back(std::move(op));
    }
    out << to_json_line(s) << "\n";
  }
  return kExitOk;
}

int cmd_gradcheck(const Options& o, std::ostream& out) {
  GradcheckOutcome r = run_gradcheck(o.component, o.seed);
  ordered_json j;
  j["component"] = r.component;
  j["max_relative_error"] = r.report.max_relative_error;
  j["threshold"] = r.threshold;
  j["coordinates"] = r.report.coordinates_checked;
  if (r.enumeration_error) j["enumeration_error"] = *r.enumeration_error;
  if (!r.passed) {
    j["worst_parameter"] = r.report.worst_parameter;
    j["worst_index"] = r.report.worst_index;
    j["analytic"] = r.report.worst_analytic;
    j["numeric"] = r.report.worst_numeric;
  }
  j["passed"] = r.passed;
  out << j.dump() << "\n";
  return r.passed ? kExitOk : kExitFailure;
}

int cmd_inspect(const Options& o, std::ostream& out) {
  std::ifstream in(o.model, std::ios::binary);
  if (!in) throw ParseError("cannot open model file " + o.model);
  ModelFile f = read_model_file(in);
  from_model_file(f);
  auto manifest = nlohmann::json::parse(f.manifest);
  ordered_json j;
  j["format_version"] = f.version;
  j["task"] = manifest["task"];
  j["labels"] = manifest["labels"];
  j["vocab_size"] = manifest["vocab"]["tokens"].size();
  if (manifest.contains("chars")) j["alphabet_size"] = manifest["chars"]["tokens"].size();
  j["config"] = manifest["config"];
  j["trainable"] = manifest["trainable"];
  j["param_count"] = manifest["param_count"];
  ordered_json params = ordered_json::array();
  for (const auto& b : f.blobs) params.push_back({{"name", b.name}, {"shape", b.shape}});
  j["parameters"] = std::move(params);
  out << j.dump(2) << "\n";
  return kExitOk;
}

void add_training_flags(CLI::App* cmd, Options& o) {
  cmd->add_option("--embeddings", o.embeddings, "Pretrained word vectors (text format)")
      ->check(CLI::ExistingFile);
  cmd->add_option("--validation", o.validation, "Validation sentences")->check(CLI::ExistingFile);
  cmd->add_option("--history", o.history, "History JSON path (default: <out>.history.json)");
  cmd->add_option("--epochs", o.epochs, "Maximum (ote) or fixed (polarity) epochs")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--batch-size", o.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
  cmd->add_option("--hidden-dim", o.hidden_dim, "GRU units per direction")
      ->check(CLI::PositiveNumber);
  cmd->add_option("--word-dim", o.word_dim, "Word embedding size")->check(CLI::PositiveNumber);
  cmd->add_option("--lr", o.lr, "Initial learning rate")->check(CLI::PositiveNumber);
  cmd->add_option("--dropout", o.dropout, "Dropout rate")->check(kRate);
  cmd->add_option("--clip", o.clip, "Global gradient-norm limit (ote)")->check(CLI::PositiveNumber);
  cmd->add_option("--patience", o.patience, "Early-stopping patience (ote)")
      ->check(CLI::PositiveNumber);
  cmd->add_flag("--freeze-embeddings", o.freeze_embeddings, "Keep word vectors fixed");
  cmd->add_flag("--constrain-iob", o.constrain_iob, "Forbid O->I and START->I transitions");
  cmd->add_option("--seed", o.seed, "Random seed");
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Aspect-based sentiment analysis toolkit", "absa"};
  app.require_subcommand(1);
  const std::vector<std::string> tasks = {"ote", "polarity"};

  auto* ingest = app.add_subcommand("ingest", "Convert SemEval XML to JSON lines");
  ingest->add_option("--data", o.data, "SemEval XML file")->required()->check(CLI::ExistingFile);
  ingest->add_option("--out", o.out, "Output JSON-lines file")->required();

  auto* split = app.add_subcommand("split", "Seeded 70/10/20 train/validation/test split");
  split->add_option("--data", o.data, "Sentences (XML or JSON lines)")
      ->required()
      ->check(CLI::ExistingFile);
  split->add_option("--out", o.out, "Output directory")->required();
  split->add_option("--seed", o.seed, "Shuffle seed");

  auto* train = app.add_subcommand("train", "Train an ote or polarity model");
  train->add_option("--task", o.task, "ote or polarity")->required()->check(CLI::IsMember(tasks));
  train->add_option("--data", o.data, "Training sentences")->required()->check(CLI::ExistingFile);
  train->add_option("--out", o.out, "Model file to write")->required();
  train->add_option("--stopwords", o.stopwords, "Stopword list (polarity)")
      ->check(CLI::ExistingFile);
  add_training_flags(train, o);

  auto* eval = app.add_subcommand("eval", "Score a model on annotated sentences");
  eval->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);
  eval->add_option("--data", o.data, "Annotated sentences")->required()->check(CLI::ExistingFile);
  eval->add_option("--task", o.task, "Expected task")->check(CLI::IsMember(tasks));
  eval->add_option("--stopwords", o.stopwords, "Stopword list (polarity)")
      ->check(CLI::ExistingFile);

  auto* predict = app.add_subcommand("predict", "Extract targets and, optionally, polarities");
  predict->add_option("--model", o.model, "ote model file")->required()->check(CLI::ExistingFile);
  predict->add_option("--polarity-model", o.polarity_model, "polarity model file")
      ->check(CLI::ExistingFile);
  auto* text_opt = predict->add_option("--text", o.text, "A single sentence");
  auto* data_opt = predict->add_option("--data", o.data, "Text file, one sentence per line")
                       ->check(CLI::ExistingFile);
  text_opt->excludes(data_opt);
  predict->add_option("--stopwords", o.stopwords, "Stopword list (polarity)")
      ->check(CLI::ExistingFile);

  auto* gradcheck = app.add_subcommand("gradcheck", "Finite-difference gradient check");
  std::vector<std::string> components(gradcheck_components().begin(), gradcheck_components().end());
  gradcheck->add_option("component", o.component, "Component to check")
      ->required()
      ->check(CLI::IsMember(components));
  gradcheck->add_option("--seed", o.seed, "Fixture seed");

  auto* inspect = app.add_subcommand("inspect", "Describe a model file");
  inspect->add_option("--model", o.model, "Model file")->required()->check(CLI::ExistingFile);

  try {
    app.parse(argc, argv);
    if (predict->parsed() && o.text.empty() && o.data.empty()) {
      throw CLI::RequiredError("predict needs --text or --data");
    }
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == static_cast<int>(CLI::ExitCodes::Success)) {
      out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
      return kExitOk;
    }
    err << "error: " << e.what() << "\n\n";
    err << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
    return kExitUsage;
  }

  try {
    if (ingest->parsed()) return cmd_ingest(o, out);
    if (split->parsed()) return cmd_split(o, out);
    if (train->parsed()) return cmd_train(o, out, err);
    if (eval->parsed()) return cmd_eval(o, out);
    if (predict->parsed()) return cmd_predict(o, out);
    if (gradcheck->parsed()) return cmd_gradcheck(o, out);
    if (inspect->parsed()) return cmd_inspect(o, out);
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace absa::tools
