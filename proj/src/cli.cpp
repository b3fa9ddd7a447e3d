#include "certfraud/cli.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "certfraud/corpus_store.hpp"
#include "certfraud/error.hpp"
#include "certfraud/features.hpp"
#include "certfraud/harvester.hpp"
#include "certfraud/ml.hpp"
#include "certfraud/report.hpp"
#include "certfraud/synthgen.hpp"

namespace certfraud::cli {

namespace {

int exit_code(ErrorCode c) {
  switch (c) {
    case ErrorCode::Usage: return 1;
    case ErrorCode::Io:
    case ErrorCode::StorageFull: return 2;
    default: return 3;
  }
}

/// Writes through a temp file renamed on success; empty path means `fallback`.
void emit(const std::string& path, std::ostream& fallback, const std::function<void(std::ostream&)>& body) {
  if (path.empty()) {
    body(fallback);
    return;
  }
  const std::string tmp = path + ".tmp";
  try {
    std::ofstream f(tmp, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write " + tmp);
    body(f);
    if (!f.flush()) throw Error(ErrorCode::Io, "write failed: " + tmp);
  } catch (...) {
    std::remove(tmp.c_str());
    throw;
  }
  if (std::rename(tmp.c_str(), path.c_str()) != 0) {
    std::remove(tmp.c_str());
    throw Error(ErrorCode::Io, "cannot rename " + tmp + " to " + path);
  }
}

nlohmann::json read_json_file(const std::string& path, ErrorCode bad) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  auto j = nlohmann::json::parse(ss.str(), nullptr, false);
  if (j.is_discarded()) throw Error(bad, path + " is not valid JSON");
  return j;
}

struct ExtractOptions {
  std::string trust_store;
  std::string bogus_list;
  int shingle = 2;
  std::string index;
  std::string index_out;
  std::string label;
};

void add_extract_flags(CLI::App* cmd, ExtractOptions& o) {
  cmd->add_option("--trust-store", o.trust_store, "PEM bundle of trusted roots");
  cmd->add_option("--bogus-list", o.bogus_list, "bogus subject values, one per line");
  cmd->add_option("--shingle", o.shingle, "shingle length for f15")->check(CLI::IsMember({1, 2, 3}));
  cmd->add_option("--index", o.index, "prebuilt corpus index (JSON)");
}

std::vector<FeatureVector> extract_corpus(const std::string& corpus_path, const ExtractOptions& o,
                                          std::ostream& err) {
  auto load = load_corpus(corpus_path);
  if (load.truncated_tail) err << "warning: " << corpus_path << ": dropped unterminated final line\n";
  auto latest = latest_certificates(load.records);
  for (const auto& d : latest.diagnostics) err << "warning: " << d << '\n';

  CorpusIndex index = o.index.empty() ? build_corpus_index(latest.entries)
                                      : CorpusIndex::from_json(read_json_file(o.index, ErrorCode::MalformedInput));
  std::vector<CertificateSummary> trust;
  if (!o.trust_store.empty()) trust = load_pem_bundle(o.trust_store);
  BogusValueList bogus = o.bogus_list.empty() ? BogusValueList::defaults() : BogusValueList::load(o.bogus_list);
  std::optional<Label> label;
  if (!o.label.empty()) label = parse_label(o.label);

  ExtractionContext ctx{index, trust, bogus, static_cast<Shingle>(o.shingle)};
  std::vector<FeatureVector> rows;
  rows.reserve(latest.entries.size());
  for (const auto& e : latest.entries) {
    auto fv = extract_features(e.cert, e.chain, e.domain, e.harvest_time, ctx);
    fv.label = label;
    rows.push_back(std::move(fv));
  }
  if (!o.index_out.empty())
    emit(o.index_out, err, [&](std::ostream& f) { f << index.to_json().dump(1) << '\n'; });
  return rows;
}

struct ModelOptions {
  std::string algo = "forest";
  std::uint64_t seed = kDefaultSeed;
  std::vector<int> use;
  Hyperparameters hyper;
};

void add_model_flags(CLI::App* cmd, ModelOptions& o) {
  cmd->add_option("--algo", o.algo, "tree | bagging | forest | knn")
      ->check(CLI::IsMember({"tree", "bagging", "forest", "knn"}))
      ->capture_default_str();
  cmd->add_option("--seed", o.seed, "random seed")->capture_default_str();
  cmd->add_option("--use", o.use, "feature numbers to train on (default: all but f5 and f13)")
      ->delimiter(',')
      ->check(CLI::Range(1, 15));
  cmd->add_option("--max-depth", o.hyper.max_depth)->check(CLI::PositiveNumber);
  cmd->add_option("--min-leaf", o.hyper.min_leaf)->check(CLI::PositiveNumber);
  cmd->add_option("--trees", o.hyper.n_trees)->check(CLI::NonNegativeNumber);
  cmd->add_option("--max-features", o.hyper.max_features)->check(CLI::NonNegativeNumber);
  cmd->add_option("--k", o.hyper.k, "neighbours for knn")->check(CLI::PositiveNumber);
}

Dataset load_dataset(const std::string& path, const ModelOptions& o) {
  Dataset d;
  if (!o.use.empty()) d.schema = FeatureSchema::with_features(o.use);
  d.rows = load_feature_csv(path);
  return d;
}

ModelKind model_kind(const std::string& s) {
  auto k = parse_model_kind(s);
  if (!k) throw Error(ErrorCode::Usage, "unknown algorithm " + s);
  return *k;
}

std::pair<std::string, std::string> split_pair(const std::string& s, const char* what) {
  auto eq = s.find('=');
  if (eq == std::string::npos || eq == 0 || eq + 1 == s.size())
    throw Error(ErrorCode::Usage, std::string(what) + " expects name=value, got '" + s + "'");
  return {s.substr(0, eq), s.substr(eq + 1)};
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Certificate-based web fraud detection toolkit", "certfraud"};
  app.require_subcommand(1);
  app.set_help_all_flag("--help-all");

  // probe
  auto* probe = app.add_subcommand("probe", "harvest HTTP/HTTPS reachability and certificates");
  std::string probe_input, probe_out;
  unsigned concurrency = 32, retries = 1;
  int timeout_ms = 5000, http_port = 80, https_port = 443;
  std::vector<std::string> resolve;
  probe->add_option("--input", probe_input, "domain list, one per line")->required();
  probe->add_option("--out", probe_out, "corpus file (appended)")->required();
  probe->add_option("--concurrency", concurrency)->check(CLI::Range(1u, 4096u))->capture_default_str();
  probe->add_option("--timeout-ms", timeout_ms, "connect and handshake timeout")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  probe->add_option("--retries", retries)->capture_default_str();
  probe->add_option("--http-port", http_port)->check(CLI::Range(1, 65535));
  probe->add_option("--https-port", https_port)->check(CLI::Range(1, 65535));
  probe->add_option("--resolve", resolve, "host=address override");

  // extract
  auto* extract = app.add_subcommand("extract", "compute f1..f15 for every domain in a corpus");
  std::string extract_corpus_path, extract_out;
  ExtractOptions xo;
  extract->add_option("--corpus", extract_corpus_path)->required();
  add_extract_flags(extract, xo);
  extract->add_option("--index-out", xo.index_out, "write the corpus index (JSON)");
  extract->add_option("--label", xo.label, "label attached to every row")->check(CLI::IsMember({"pos", "neg"}));
  extract->add_option("--out", extract_out, "feature CSV (default stdout)");

  // train
  auto* train_cmd = app.add_subcommand("train", "fit a classifier on a labelled feature CSV");
  std::string train_features, model_out;
  ModelOptions to;
  train_cmd->add_option("--features", train_features)->required();
  train_cmd->add_option("--model-out", model_out)->required();
  add_model_flags(train_cmd, to);

  // eval
  auto* eval = app.add_subcommand("eval", "k-fold cross-validation");
  std::string eval_features, eval_out;
  int folds = 10;
  ModelOptions eo;
  eval->add_option("--features", eval_features)->required();
  eval->add_option("--cv", folds, "number of folds")->check(CLI::Range(2, 1000000))->capture_default_str();
  eval->add_option("--out", eval_out, "JSON report");
  add_model_flags(eval, eo);

  // classify
  auto* classify = app.add_subcommand("classify", "label domains with a trained model");
  std::string classify_model, classify_corpus, classify_features, classify_out;
  ExtractOptions co;
  classify->add_option("--model", classify_model)->required();
  auto* cc = classify->add_option("--corpus", classify_corpus);
  auto* cf = classify->add_option("--features", classify_features);
  cc->excludes(cf);
  add_extract_flags(classify, co);
  classify->add_option("--out", classify_out, "CSV domain,label,score (default stdout)");

  // report
  auto* report = app.add_subcommand("report", "analysis tables and CDF series");
  report->require_subcommand(1);
  auto* rtable = report->add_subcommand("table", "boolean feature percentages");
  std::vector<std::string> table_inputs;
  std::string report_out;
  rtable->add_option("--features", table_inputs, "name=features.csv, repeatable")->required();
  rtable->add_option("--out", report_out);
  auto* rcdf = report->add_subcommand("cdf", "CDF of f13, f14 or f15");
  std::string cdf_features;
  int cdf_feature = 15;
  rcdf->add_option("--features", cdf_features)->required();
  rcdf->add_option("--feature", cdf_feature)->check(CLI::IsMember({13, 14, 15}))->capture_default_str();
  rcdf->add_option("--out", report_out);
  auto* rcat = report->add_subcommand("categories", "reachability category counts");
  std::string cat_corpus;
  rcat->add_option("--corpus", cat_corpus)->required();
  rcat->add_option("--out", report_out);

  // synth
  auto* synth = app.add_subcommand("synth", "sample a labelled feature CSV from marginal specs");
  std::string pos_spec, neg_spec, synth_out;
  std::size_t synth_n = 1000;
  std::uint64_t synth_seed = kDefaultSeed;
  synth->add_option("--pos-spec", pos_spec)->required();
  synth->add_option("--neg-spec", neg_spec)->required();
  synth->add_option("--n", synth_n, "rows per class")->capture_default_str();
  synth->add_option("--seed", synth_seed)->capture_default_str();
  synth->add_option("--out", synth_out, "feature CSV (default stdout)");

  std::vector<std::string> argv_store{"certfraud"};
  argv_store.insert(argv_store.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& a : argv_store) argv.push_back(a.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    int rc = app.exit(e, out, err);
    return rc == 0 ? 0 : 1;
  }

  try {
    if (*probe) {
      ProbeConfig cfg;
      cfg.max_concurrency = concurrency;
      cfg.retries = retries;
      cfg.connect_timeout = cfg.handshake_timeout = std::chrono::milliseconds(timeout_ms);
      cfg.http_port = static_cast<std::uint16_t>(http_port);
      cfg.https_port = static_cast<std::uint16_t>(https_port);
      for (const auto& r : resolve) {
        auto [host, addr] = split_pair(r, "--resolve");
        cfg.resolve[canonical_domain(host)] = addr;
      }
      cfg.validate();
      std::ifstream in(probe_input);
      if (!in) throw Error(ErrorCode::Io, "cannot open " + probe_input);
      auto domains = read_domain_list(in);
      CorpusWriter writer(probe_out);
      auto counts = probe_corpus(domains, cfg, [&](const DomainRecord& r) { writer.append(r); });
      write_category_csv(out, counts);
      return 0;
    }
    if (*extract) {
      auto rows = extract_corpus(extract_corpus_path, xo, err);
      emit(extract_out, out, [&](std::ostream& f) { write_feature_csv(f, rows); });
      return 0;
    }
    if (*train_cmd) {
      auto data = load_dataset(train_features, to);
      auto model = train(data, model_kind(to.algo), to.hyper, to.seed);
      save_model(model, model_out);
      out << "trained " << to_string(model.kind) << " on " << data.rows.size() << " rows, seed " << to.seed
          << '\n';
      return 0;
    }
    if (*eval) {
      auto data = load_dataset(eval_features, eo);
      auto rep = cross_validate(data, folds, model_kind(eo.algo), eo.hyper, eo.seed);
      out << format_report_table(rep);
      if (!eval_out.empty())
        emit(eval_out, out, [&](std::ostream& f) { f << report_to_json(rep).dump(1) << '\n'; });
      return 0;
    }
    if (*classify) {
      if (classify_corpus.empty() == classify_features.empty())
        throw Error(ErrorCode::Usage, "classify needs exactly one of --corpus or --features");
      auto model = load_model(classify_model);
      auto rows = classify_features.empty() ? extract_corpus(classify_corpus, co, err)
                                            : load_feature_csv(classify_features);
      emit(classify_out, out, [&](std::ostream& f) {
        f << "domain,label,score\n";
        char score[32];
        for (const auto& fv : rows) {
          auto p = model.predict(fv);
          std::snprintf(score, sizeof score, "%.6f", p.score);
          f << fv.domain << ',' << to_string(p.label) << ',' << score << '\n';
        }
      });
      return 0;
    }
    if (*rtable) {
      std::vector<NamedFeatures> sets;
      for (const auto& spec : table_inputs) {
        auto [name, path] = split_pair(spec, "--features");
        sets.push_back({name, load_feature_csv(path)});
      }
      auto table = boolean_feature_table(sets);
      emit(report_out, out, [&](std::ostream& f) { write_table_csv(f, table); });
      return 0;
    }
    if (*rcdf) {
      auto rows = load_feature_csv(cdf_features);
      auto series = cdf_series(feature_values(rows, static_cast<std::size_t>(cdf_feature - 1)));
      emit(report_out, out, [&](std::ostream& f) { write_cdf_csv(f, series); });
      return 0;
    }
    if (*rcat) {
      auto load = load_corpus(cat_corpus);
      if (load.truncated_tail) err << "warning: " << cat_corpus << ": dropped unterminated final line\n";
      auto counts = summarize_categories(load.records);
      emit(report_out, out, [&](std::ostream& f) { write_category_csv(f, counts); });
      return 0;
    }
    if (*synth) {
      auto pos = load_spec(pos_spec);
      auto neg = load_spec(neg_spec);
      auto data = sample_corpus(pos, neg, synth_n, synth_seed, FeatureSchema::with_features(std::vector<int>{
                                                                   1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11, 12, 13, 14, 15}));
      emit(synth_out, out, [&](std::ostream& f) { write_feature_csv(f, data.rows); });
      err << "synth: " << data.rows.size() << " rows, seed " << synth_seed << '\n';
      return 0;
    }
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return exit_code(e.code());
  } catch (const std::ios_base::failure& e) {
    err << "error: Io: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 3;
  }
  return 1;
}

}  // namespace certfraud::cli
