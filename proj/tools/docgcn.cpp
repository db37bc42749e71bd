// docgcn: command-line front end for the layout-analysis pipeline.

#include "docgcn/corpus.hpp"
#include "docgcn/eval.hpp"
#include "docgcn/pipeline.hpp"
#include "docgcn/render.hpp"
#include "docgcn/synthetic.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace docgcn;

namespace {

struct DataOptions {
    bool no_fallback = false;
    std::optional<std::uint64_t> feature_seed;
    std::string column_mode;
};

void add_data_options(CLI::App* sub, DataOptions& d) {
    sub->add_flag("--no-fallback", d.no_fallback, "Require ingested semantic/appearance vectors");
    sub->add_option("--column-mode", d.column_mode, "Override every page's column mode")
        ->check(CLI::IsMember({"single", "double", "auto"}));
}

void add_feature_seed(CLI::App* sub, DataOptions& d) {
    sub->add_option("--feature-seed", d.feature_seed, "Seed of the hash featurizer (default: --seed)");
}

std::vector<corpus::Page> load_pages(const fs::path& path, const DataOptions& d) {
    auto pages = corpus::ingest_canonical(path);
    if (!d.column_mode.empty()) {
        const auto mode = corpus::column_mode_from_string(d.column_mode);
        for (auto& p : pages) p.column_mode = mode;
    }
    if (pages.empty()) throw DataError("no pages in " + path.string());
    return pages;
}

corpus::FeatureConfig feature_config(const DataOptions& d, std::uint64_t seed) {
    corpus::FeatureConfig f;
    f.fallback = !d.no_fallback;
    f.seed = d.feature_seed.value_or(seed);
    return f;
}

/// Resolved option values of a subcommand, for manifests.
json options_json(const CLI::App* sub) {
    json out = json::object();
    for (const CLI::Option* opt : sub->get_options()) {
        if (opt->get_lnames().empty() || opt->get_lnames()[0] == "help") continue;
        const auto& name = opt->get_lnames()[0];
        if (opt->count() > 0) {
            const auto& r = opt->results();
            out[name] = r.size() == 1 ? json(r[0]) : json(r);
        } else if (!opt->get_default_str().empty()) {
            out[name] = opt->get_default_str();
        }
    }
    return out;
}

void write_jsonl(const fs::path& path, const std::vector<json>& rows) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    for (const auto& r : rows) out << r.dump() << '\n';
}

void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    out << text;
}

fs::path manifest_for(const fs::path& output) { return fs::path(output.string() + ".manifest.json"); }

std::vector<fusion::Aspect> parse_aspects(const std::string& list) {
    std::vector<fusion::Aspect> out;
    std::size_t start = 0;
    while (start <= list.size()) {
        const auto end = list.find(',', start);
        const auto item = list.substr(start, end == std::string::npos ? std::string::npos : end - start);
        if (!item.empty()) {
            try {
                out.push_back(fusion::aspect_from_string(item));
            } catch (const ContractViolation& e) {
                throw UsageError(e.what());
            }
        }
        if (end == std::string::npos) break;
        start = end + 1;
    }
    if (out.empty()) throw UsageError("--aspects must name at least one of syn, sem, dens, appr");
    return fusion::canonical_aspects(out);
}

void configure_logging() {
    auto logger = spdlog::stderr_color_mt("docgcn");
    logger->set_pattern("[%l] %v");
    spdlog::set_default_logger(logger);
    spdlog::set_level(spdlog::level::info);
    if (const char* lvl = std::getenv("DOCGCN_LOG_LEVEL")) spdlog::set_level(spdlog::level::from_str(lvl));
}

struct ClassifierOptions {
    int epochs = fusion::ClassifierTrainConfig{}.epochs;
    double lr = 2e-5;
    int mlp_hidden = 512;
    double dropout = 0.1;
    std::string pooling = "max";
    std::string aspects = "syn,sem,dens,appr";
};

void add_classifier_options(CLI::App* sub, ClassifierOptions& c, bool with_aspects) {
    sub->add_option("--epochs", c.epochs, "Classifier epochs")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--lr", c.lr, "Classifier learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--mlp-hidden", c.mlp_hidden, "MLP hidden width")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--dropout", c.dropout, "Dropout after the first MLP layer")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 0.99));
    sub->add_option("--pooling", c.pooling, "Node-level pooling")
        ->capture_default_str()
        ->check(CLI::IsMember({"min", "avg", "max"}));
    if (with_aspects) sub->add_option("--aspects", c.aspects, "Comma-separated aspects")->capture_default_str();
}

fusion::FusionConfig fusion_config(const ClassifierOptions& c, const pipeline::ModelBundle& b) {
    fusion::FusionConfig f;
    f.hidden_dim = b.gcn(graphs::AspectKind::den1).hidden();
    f.mlp_hidden = c.mlp_hidden;
    f.classes = static_cast<int>(b.labels.size());
    f.semantic_dim = b.features.semantic_dim;
    f.appearance_dim = b.features.appearance_dim;
    f.dropout = c.dropout;
    f.pooling = fusion::pooling_mode_from_string(c.pooling);
    f.aspects = parse_aspects(c.aspects);
    return f;
}

fusion::ClassifierTrainConfig classifier_train_config(const ClassifierOptions& c, std::uint64_t seed) {
    fusion::ClassifierTrainConfig t;
    t.epochs = c.epochs;
    t.learning_rate = c.lr;
    t.seed = seed;
    return t;
}

void check_labeled(const std::vector<fusion::PageFeatures>& pages, const char* what) {
    for (const auto& p : pages)
        if (p.labels.empty()) throw DataError(std::string(what) + " page " + p.page_id + " is not fully labeled");
}

}  // namespace

int main(int argc, char** argv) {
    configure_logging();
    CLI::App app{"Multi-aspect graph convolutional layout analysis"};
    app.require_subcommand(1);
    app.set_config("--config", "", "Read options from a TOML/INI file (command-line flags take precedence)");

    // ingest
    std::string in, out, format = "canonical", split = "train";
    DataOptions data;
    auto* ingest = app.add_subcommand("ingest", "Convert a dataset to canonical JSON Lines");
    ingest->add_option("--format", format, "Input format")->check(CLI::IsMember({"canonical", "funsd"}))->capture_default_str();
    ingest->add_option("--in", in, "Input file or directory")->required()->check(CLI::ExistingPath);
    ingest->add_option("--out", out, "Output JSONL")->required();
    ingest->add_option("--split", split, "FUNSD split")->check(CLI::IsMember({"train", "test"}))->capture_default_str();
    add_data_options(ingest, data);

    // build-graphs
    auto* build = app.add_subcommand("build-graphs", "Export the six aspect graphs of every page");
    std::uint64_t seed = 0;
    build->add_option("--in", in, "Canonical JSONL")->required()->check(CLI::ExistingFile);
    build->add_option("--out", out, "Output JSONL")->required();
    build->add_option("--seed", seed, "Seed of the hash featurizer")->required();
    add_data_options(build, data);
    add_feature_seed(build, data);

    // train-relations
    auto* trel = app.add_subcommand("train-relations", "Train the parent-link prediction model");
    std::string model;
    relpred::RelationConfig rcfg;
    relpred::RelationTrainConfig rtrain;
    trel->add_option("--in", in, "Canonical JSONL with parent links")->required()->check(CLI::ExistingFile);
    trel->add_option("--model", model, "Output checkpoint")->required();
    trel->add_option("--seed", seed, "Run seed")->required();
    trel->add_option("--epochs", rtrain.epochs, "Epochs")->capture_default_str()->check(CLI::PositiveNumber);
    trel->add_option("--lr", rtrain.learning_rate, "Learning rate")->capture_default_str()->check(CLI::PositiveNumber);
    trel->add_option("--d-model", rcfg.d_model, "Encoder width")->capture_default_str()->check(CLI::PositiveNumber);
    trel->add_option("--heads", rcfg.heads, "Attention heads")->capture_default_str()->check(CLI::PositiveNumber);
    trel->add_option("--ff-dim", rcfg.ff_dim, "Feed-forward width")->capture_default_str()->check(CLI::PositiveNumber);
    trel->add_option("--max-len", rcfg.max_len, "Maximum segments + 1")->capture_default_str()->check(CLI::Range(2, 100000));
    add_data_options(trel, data);
    add_feature_seed(trel, data);

    // pretrain
    auto* pre = app.add_subcommand("pretrain", "Pretrain aspect GCNs");
    std::string model_dir, aspect = "all";
    pipeline::PretrainOptions popts;
    std::optional<double> plr;
    pre->add_option("--in", in, "Training JSONL")->required()->check(CLI::ExistingFile);
    pre->add_option("--aspect", aspect, "Graph kind or all")
        ->check(CLI::IsMember({"den1", "den2", "appr", "syn1", "syn2", "semc", "all"}))
        ->capture_default_str();
    pre->add_option("--model-dir", model_dir, "Checkpoint directory")->required();
    pre->add_option("--seed", seed, "Run seed")->required();
    pre->add_option("--epochs", popts.epochs, "Epochs")->capture_default_str()->check(CLI::PositiveNumber);
    pre->add_option("--hidden", popts.hidden, "Hidden width d")->capture_default_str()->check(CLI::PositiveNumber);
    pre->add_option("--lr", plr, "Learning rate (default: 1e-4 syn/semc, 1e-3 den/appr)")->check(CLI::PositiveNumber);
    add_data_options(pre, data);
    add_feature_seed(pre, data);

    // train
    auto* train = app.add_subcommand("train", "Train the fusion classifier on frozen GCN outputs");
    ClassifierOptions copts;
    train->add_option("--in", in, "Training JSONL")->required()->check(CLI::ExistingFile);
    train->add_option("--model-dir", model_dir, "Checkpoint directory")->required();
    train->add_option("--seed", seed, "Run seed")->required();
    add_classifier_options(train, copts, true);
    add_data_options(train, data);

    // predict
    auto* predict = app.add_subcommand("predict", "Classify every segment");
    std::string relations = "auto", relations_out, relations_ckpt;
    predict->add_option("--in", in, "Canonical JSONL")->required()->check(CLI::ExistingFile);
    predict->add_option("--model-dir", model_dir, "Checkpoint directory")->required();
    predict->add_option("--out", out, "Predictions JSONL")->required();
    predict->add_option("--relations", relations, "Parent links: auto, gold or predicted")
        ->check(CLI::IsMember({"auto", "gold", "predicted"}))
        ->capture_default_str();
    predict->add_option("--relation-model", relations_ckpt, "Relation checkpoint (default: <model-dir>/relations.ckpt)");
    predict->add_option("--relations-out", relations_out, "Also write the parent links used, as JSONL");
    add_data_options(predict, data);

    // eval
    auto* ev = app.add_subcommand("eval", "Score predictions against gold labels");
    std::string pred, gold, json_out;
    ev->add_option("--pred", pred, "Predictions JSONL")->required()->check(CLI::ExistingFile);
    ev->add_option("--gold", gold, "Gold canonical JSONL")->required()->check(CLI::ExistingFile);
    ev->add_option("--json", json_out, "Also write the report as JSON");

    // ablate
    auto* ablate = app.add_subcommand("ablate", "Retrain the classifier on aspect subsets");
    std::string test;
    bool all_subsets = false;
    ablate->add_option("--in", in, "Training JSONL")->required()->check(CLI::ExistingFile);
    ablate->add_option("--test", test, "Held-out JSONL (default: score on --in)")->check(CLI::ExistingFile);
    ablate->add_option("--model-dir", model_dir, "Directory with pretrained GCNs")->required();
    ablate->add_option("--seed", seed, "Run seed")->required();
    ablate->add_flag("--all-subsets", all_subsets, "Run all 15 nonempty aspect subsets");
    ablate->add_option("--json", json_out, "Write reports as JSON");
    add_classifier_options(ablate, copts, true);
    add_data_options(ablate, data);

    // compare-pooling
    auto* pool = app.add_subcommand("compare-pooling", "Train min, avg and max pooling classifiers");
    pool->add_option("--in", in, "Training JSONL")->required()->check(CLI::ExistingFile);
    pool->add_option("--test", test, "Held-out JSONL (default: score on --in)")->check(CLI::ExistingFile);
    pool->add_option("--model-dir", model_dir, "Directory with pretrained GCNs")->required();
    pool->add_option("--seed", seed, "Run seed")->required();
    pool->add_option("--json", json_out, "Write reports as JSON");
    add_classifier_options(pool, copts, true);
    add_data_options(pool, data);

    // render
    auto* rend = app.add_subcommand("render", "Write SVG overlays, one per page");
    rend->add_option("--in", in, "Canonical JSONL")->required()->check(CLI::ExistingFile);
    rend->add_option("--pred", pred, "Predictions JSONL (default: gold labels)")->check(CLI::ExistingFile);
    rend->add_option("--out", out, "Output directory")->required();

    // synth
    auto* synth = app.add_subcommand("synth", "Generate the synthetic layout corpus");
    synthetic::SyntheticConfig scfg;
    std::size_t test_pages = 50;
    synth->add_option("--out", out, "Output directory (train.jsonl, test.jsonl)")->required();
    synth->add_option("--seed", seed, "Generator seed")->required();
    synth->add_option("--pages", scfg.pages, "Training pages")->capture_default_str();
    synth->add_option("--test-pages", test_pages, "Held-out pages")->capture_default_str();
    synth->add_option("--corruption", scfg.corruption, "Probability that one cue is swapped")
        ->capture_default_str()
        ->check(CLI::Range(0.0, 1.0));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : static_cast<int>(ExitCode::usage);
    }

    try {
        if (ingest->parsed()) {
            std::vector<corpus::Page> pages;
            if (format == "funsd") {
                pages = corpus::ingest_funsd(in, split == "train" ? corpus::FunsdSplit::train : corpus::FunsdSplit::test);
            } else {
                pages = corpus::ingest_canonical(in);
            }
            if (!data.column_mode.empty())
                for (auto& p : pages) p.column_mode = corpus::column_mode_from_string(data.column_mode);
            corpus::write_canonical(out, pages);
            pipeline::write_manifest(manifest_for(out), "ingest", options_json(ingest), {out});
            spdlog::info("wrote {} pages to {}", pages.size(), out);
        } else if (build->parsed()) {
            const auto pages = load_pages(in, data);
            graphs::GraphOptions gopts{feature_config(data, seed), {}};
            std::vector<json> rows;
            for (const auto& page : pages)
                rows.push_back(pipeline::graphs_to_json(page, graphs::build_all(page, page.parent_indices(), gopts)));
            write_jsonl(out, rows);
            pipeline::write_manifest(manifest_for(out), "build-graphs", options_json(build), {out});
        } else if (trel->parsed()) {
            const auto pages = load_pages(in, data);
            std::vector<corpus::Page> usable;
            for (const auto& p : pages) {
                if (static_cast<int>(p.size()) + 1 > rcfg.max_len) {
                    spdlog::warn("skipping page {}: {} segments exceed relation capacity", p.page_id, p.size());
                    continue;
                }
                usable.push_back(p);
            }
            const auto features = feature_config(data, seed);
            rtrain.seed = splitmix64(seed);
            rcfg.input_dim = features.semantic_dim + features.appearance_dim;
            auto result = relpred::train_relations(usable, relpred::RelationModel::create(rcfg, seed), rtrain, features);
            spdlog::info("relations: final loss {:.5f}, train parent accuracy {:.4f}", result.epoch_losses.back(),
                         relpred::parent_accuracy(usable, result.model, features));
            pipeline::save_relations(model, result.model, features);
            pipeline::write_manifest(manifest_for(model), "train-relations", options_json(trel), {model});
        } else if (pre->parsed()) {
            const auto pages = load_pages(in, data);
            pipeline::ModelBundle bundle;
            bundle.labels = corpus::LabelSet::from_pages(pages);
            bundle.features = feature_config(data, seed);
            popts.seed = seed;
            popts.learning_rate = plr;
            // A partially trained directory must agree on labels and features.
            if (fs::exists(pipeline::checkpoint_path(model_dir, "den1")) && aspect != "all" && aspect != "den1") {
                const auto existing = load_checkpoint(pipeline::checkpoint_path(model_dir, "den1"));
                json meta = existing.meta;
                meta.erase("kind");
                if (meta != pipeline::bundle_meta(bundle))
                    throw DataError("model directory holds checkpoints for different labels or feature settings");
            }
            std::vector<graphs::AspectKind> kinds;
            if (aspect == "all") {
                kinds.assign(graphs::kAllKinds.begin(), graphs::kAllKinds.end());
            } else {
                kinds.push_back(graphs::aspect_kind_from_string(aspect));
            }
            std::vector<fs::path> outputs;
            for (auto kind : kinds) {
                auto result = pipeline::pretrain_kind(pages, kind, bundle.labels, bundle.graph_options(), popts);
                pipeline::save_gcn(model_dir, result.model, bundle);
                outputs.push_back(pipeline::checkpoint_path(model_dir, graphs::to_string(kind)));
            }
            pipeline::write_manifest(fs::path(model_dir) / ("manifest-pretrain-" + aspect + ".json"), "pretrain",
                                     options_json(pre), outputs);
        } else if (train->parsed()) {
            const auto pages = load_pages(in, data);
            auto bundle = pipeline::load_bundle(model_dir, false);
            const auto feats = pipeline::collect_features(pages, bundle, pipeline::RelationSource::gold);
            check_labeled(feats, "training");
            const auto fcfg = fusion_config(copts, bundle);
            const auto tcfg = classifier_train_config(copts, seed);
            auto result = fusion::train_classifier(feats, fusion::FusionClassifier::create(fcfg, seed), tcfg);
            spdlog::info("classifier: final loss {:.5f}", result.epoch_losses.back());
            pipeline::save_classifier(model_dir, result.classifier, bundle);
            const auto ckpt = pipeline::checkpoint_path(model_dir, "fusion");
            pipeline::write_manifest(fs::path(model_dir) / "manifest-train.json", "train", options_json(train), {ckpt});
        } else if (predict->parsed()) {
            const auto pages = load_pages(in, data);
            auto bundle = pipeline::load_bundle(model_dir, true);
            if (!relations_ckpt.empty()) {
                auto [m, features] = pipeline::load_relations(relations_ckpt);
                if (pipeline::features_to_json(features) != pipeline::features_to_json(bundle.features))
                    throw DataError("relation model was trained with different feature settings than the GCNs");
                bundle.relations = std::move(m);
            }
            const auto source = pipeline::relation_source_from_string(relations);
            std::vector<json> rows, links;
            for (const auto& page : pages) {
                const auto parents = pipeline::page_parents(page, bundle, source);
                rows.push_back(pipeline::prediction_to_json(pipeline::predict_page(page, parents, bundle), bundle.labels));
                links.push_back(pipeline::relations_to_json(page, parents));
            }
            write_jsonl(out, rows);
            std::vector<fs::path> outputs{out};
            if (!relations_out.empty()) {
                write_jsonl(relations_out, links);
                outputs.emplace_back(relations_out);
            }
            pipeline::write_manifest(manifest_for(out), "predict", options_json(predict), outputs);
        } else if (ev->parsed()) {
            const auto gold_pages = corpus::ingest_canonical(gold);
            const auto labels = corpus::LabelSet::from_pages(gold_pages);
            const auto report =
                eval::score(pipeline::read_predictions(pred), eval::gold_segments(gold_pages), labels);
            std::cout << report.to_table();
            if (!json_out.empty()) write_text(json_out, report.to_json().dump(2) + "\n");
        } else if (ablate->parsed() || pool->parsed()) {
            auto* sub = ablate->parsed() ? ablate : pool;
            const auto pages = load_pages(in, data);
            const auto bundle = pipeline::load_bundle(model_dir, false);
            const auto train_f = pipeline::collect_features(pages, bundle, pipeline::RelationSource::gold);
            const auto test_f = test.empty()
                                    ? train_f
                                    : pipeline::collect_features(load_pages(test, data), bundle,
                                                                 pipeline::RelationSource::automatic);
            check_labeled(train_f, "training");
            check_labeled(test_f, "test");
            const auto fcfg = fusion_config(copts, bundle);
            const auto tcfg = classifier_train_config(copts, seed);
            json reports = json::object();
            if (ablate->parsed()) {
                const auto subsets = all_subsets ? eval::aspect_subsets()
                                                 : std::vector<std::vector<fusion::Aspect>>{parse_aspects(copts.aspects)};
                for (const auto& subset : subsets) {
                    const auto r = eval::ablate_aspects(train_f, test_f, subset, fcfg, tcfg, bundle.labels);
                    const auto name = eval::aspects_name(subset);
                    std::cout << "== aspects: " << name << "\n" << r.to_table() << "\n";
                    reports[name] = r.to_json();
                }
            } else {
                const auto rs = eval::compare_pooling(train_f, test_f, fcfg, tcfg, bundle.labels);
                const char* names[3] = {"min", "avg", "max"};
                for (std::size_t k = 0; k < 3; ++k) {
                    std::cout << "== pooling: " << names[k] << "\n" << rs[k].to_table() << "\n";
                    reports[names[k]] = rs[k].to_json();
                }
            }
            if (!json_out.empty()) {
                write_text(json_out, reports.dump(2) + "\n");
                pipeline::write_manifest(manifest_for(json_out), sub->get_name(), options_json(sub), {json_out});
            }
        } else if (rend->parsed()) {
            const auto pages = corpus::ingest_canonical(in);
            std::map<std::pair<std::string, std::string>, std::string> predicted;
            if (!pred.empty())
                for (const auto& s : pipeline::read_predictions(pred)) predicted[{s.page_id, s.segment_id}] = s.label;
            fs::create_directories(out);
            for (const auto& page : pages) {
                std::vector<std::string> captions;
                if (!pred.empty()) {
                    for (const auto& s : page.segments) {
                        auto it = predicted.find({page.page_id, s.id});
                        if (it == predicted.end())
                            throw DataError("no prediction for " + page.page_id + "/" + s.id);
                        captions.push_back(it->second);
                    }
                }
                write_text(fs::path(out) / (page.page_id + ".svg"), render::page_svg(page, captions));
            }
            spdlog::info("wrote {} SVG files to {}", pages.size(), out);
        } else if (synth->parsed()) {
            scfg.seed = seed;
            const auto train_pages = synthetic::generate(scfg);
            auto tcfg = scfg;
            tcfg.pages = test_pages;
            tcfg.seed = splitmix64(seed ^ 0x7e57ULL);
            auto test_pages_v = synthetic::generate(tcfg);
            for (auto& p : test_pages_v) p.page_id = "test-" + p.page_id;
            const fs::path dir(out);
            fs::create_directories(dir);
            corpus::write_canonical(dir / "train.jsonl", train_pages);
            corpus::write_canonical(dir / "test.jsonl", test_pages_v);
            pipeline::write_manifest(dir / "manifest.json", "synth", options_json(synth),
                                     {dir / "train.jsonl", dir / "test.jsonl"});
        }
    } catch (const Error& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(e.code());
    } catch (const ContractViolation& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(ExitCode::usage);
    } catch (const nlohmann::json::exception& e) {
        spdlog::error("malformed JSON: {}", e.what());
        return static_cast<int>(ExitCode::data);
    } catch (const std::exception& e) {
        spdlog::error("{}", e.what());
        return static_cast<int>(ExitCode::data);
    }
    return 0;
}
