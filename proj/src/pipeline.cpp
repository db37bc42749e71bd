#include "docgcn/pipeline.hpp"

#include <spdlog/spdlog.h>

#include <fstream>

namespace docgcn::pipeline {

namespace fs = std::filesystem;
using nlohmann::json;

std::size_t kind_index(AspectKind kind) { return static_cast<std::size_t>(kind); }

const gcn::GcnModel& ModelBundle::gcn(AspectKind kind) const {
    const auto& m = gcns[kind_index(kind)];
    if (!m) throw DataError("missing checkpoint: " + graphs::to_string(kind));
    return *m;
}

RelationSource relation_source_from_string(const std::string& s) {
    if (s == "auto") return RelationSource::automatic;
    if (s == "gold") return RelationSource::gold;
    if (s == "predicted") return RelationSource::predicted;
    throw UsageError("unknown relation source '" + s + "' (expected auto, gold or predicted)");
}

std::vector<std::optional<std::size_t>> page_parents(const corpus::Page& page, const ModelBundle& bundle,
                                                     RelationSource source) {
    const bool use_model = source == RelationSource::predicted ||
                           (source == RelationSource::automatic && !page.has_parent_links());
    if (!use_model) return page.parent_indices();
    if (!bundle.relations) throw DataError("missing checkpoint: relations (page " + page.page_id + " has no links)");
    return relpred::predict_relations(page, *bundle.relations, bundle.features);
}

namespace {

bool fully_labeled(const corpus::Page& page) {
    for (const auto& s : page.segments)
        if (s.label.empty()) return false;
    return true;
}

graphs::AspectGraph build_kind(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                               AspectKind kind, const graphs::GraphOptions& opts) {
    switch (kind) {
        case AspectKind::den1: return graphs::build_density_graphs(page).first;
        case AspectKind::den2: return graphs::build_density_graphs(page).second;
        case AspectKind::appr: return graphs::build_appearance_graph(page, opts.features);
        case AspectKind::syn1: return graphs::build_relation_graphs(page, parents, opts).syn1;
        case AspectKind::syn2: return graphs::build_relation_graphs(page, parents, opts).syn2;
        case AspectKind::semc: return graphs::build_relation_graphs(page, parents, opts).semc;
    }
    throw ContractViolation("build_kind: unknown kind");
}

}  // namespace

fusion::PageFeatures page_features(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                                   const ModelBundle& bundle) {
    const auto all = graphs::build_all(page, parents, bundle.graph_options());
    fusion::PageFeatures f;
    f.page_id = page.page_id;
    Matrix* slots[6] = {&f.den1, &f.den2, &f.appr, &f.syn1, &f.syn2, &f.semc};
    for (std::size_t k = 0; k < 6; ++k) *slots[k] = gcn::extract_hidden(all[k], bundle.gcn(graphs::kAllKinds[k]));
    f.h0_semc = all[kind_index(AspectKind::semc)].node_features;
    f.h0_appr = all[kind_index(AspectKind::appr)].node_features;
    if (fully_labeled(page)) f.labels = bundle.labels.encode(page);
    return f;
}

std::vector<fusion::PageFeatures> collect_features(const std::vector<corpus::Page>& pages, const ModelBundle& bundle,
                                                   RelationSource source) {
    std::vector<fusion::PageFeatures> out;
    out.reserve(pages.size());
    for (const auto& page : pages) out.push_back(page_features(page, page_parents(page, bundle, source), bundle));
    return out;
}

PagePrediction predict_page(const corpus::Page& page, const ModelBundle& bundle, RelationSource source) {
    for (auto kind : graphs::kAllKinds) bundle.gcn(kind);
    if (!bundle.classifier) throw DataError("missing checkpoint: fusion");
    return predict_page(page, page_parents(page, bundle, source), bundle);
}

PagePrediction predict_page(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                            const ModelBundle& bundle) {
    if (!bundle.classifier) throw DataError("missing checkpoint: fusion");
    const auto features = page_features(page, parents, bundle);
    const auto& clf = *bundle.classifier;
    PagePrediction p;
    p.page_id = page.page_id;
    for (const auto& s : page.segments) p.segment_ids.push_back(s.id);
    p.probs = softmax_rows(fusion::classify(fusion::fuse(features, clf), clf, false));
    p.labels = fusion::argmax_rows(p.probs);
    return p;
}

json prediction_to_json(const PagePrediction& p, const corpus::LabelSet& labels) {
    json preds = json::array();
    for (std::size_t i = 0; i < p.segment_ids.size(); ++i) {
        const auto row = static_cast<Eigen::Index>(i);
        std::vector<double> probs(p.probs.row(row).data(), p.probs.row(row).data() + p.probs.cols());
        preds.push_back({{"id", p.segment_ids[i]}, {"label", labels.name(p.labels[i])}, {"probs", probs}});
    }
    return {{"page_id", p.page_id}, {"predictions", preds}};
}

std::vector<eval::LabeledSegment> read_predictions(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open predictions file: " + path.string());
    std::vector<eval::LabeledSegment> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            const auto j = json::parse(line);
            const auto page_id = j.at("page_id").get<std::string>();
            for (const auto& p : j.at("predictions"))
                out.push_back({page_id, p.at("id").get<std::string>(), p.at("label").get<std::string>()});
        } catch (const json::exception& e) {
            throw ParseError(lineno, "predictions", e.what());
        }
    }
    return out;
}

json relations_to_json(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents) {
    json links = json::array();
    for (std::size_t i = 0; i < parents.size(); ++i)
        if (parents[i]) links.push_back({page.segments[i].id, page.segments[*parents[i]].id});
    return {{"page_id", page.page_id}, {"links", links}};
}

json graphs_to_json(const corpus::Page& page, const std::array<graphs::AspectGraph, 6>& all) {
    json out = {{"page_id", page.page_id}, {"nodes", page.size()}, {"graphs", json::object()}};
    for (const auto& g : all) {
        json edges = json::array();
        for (Eigen::Index i = 0; i < g.adjacency.rows(); ++i)
            for (Eigen::Index j = i + 1; j < g.adjacency.cols(); ++j)
                if (g.adjacency(i, j) != 0.0) edges.push_back({i, j, g.adjacency(i, j)});
        json entry = {{"edges", edges}};
        if (g.symbols) {
            json seqs = json::array();
            for (std::size_t n = 0; n < g.symbols->node_to_unique.size(); ++n)
                seqs.push_back(g.symbols->unique[g.symbols->node_to_unique[n]]);
            entry["symbols"] = seqs;
        } else {
            entry["feature_dim"] = g.node_features.cols();
        }
        out["graphs"][graphs::to_string(g.kind)] = entry;
    }
    return out;
}

std::uint64_t kind_seed(std::uint64_t seed, AspectKind kind) {
    return splitmix64(seed ^ (0x6b696e6400000000ULL + kind_index(kind)));
}

std::vector<gcn::LabeledGraph> labeled_graphs(const std::vector<corpus::Page>& pages, AspectKind kind,
                                              const corpus::LabelSet& labels, const graphs::GraphOptions& opts) {
    std::vector<gcn::LabeledGraph> out;
    out.reserve(pages.size());
    for (const auto& page : pages)
        out.push_back({page.page_id, build_kind(page, page.parent_indices(), kind, opts), labels.encode(page)});
    return out;
}

gcn::TrainResult pretrain_kind(const std::vector<corpus::Page>& pages, AspectKind kind, const corpus::LabelSet& labels,
                               const graphs::GraphOptions& opts, const PretrainOptions& cfg) {
    const auto data = labeled_graphs(pages, kind, labels, opts);
    const std::uint64_t seed = kind_seed(cfg.seed, kind);
    int input_dim = 0;
    switch (kind) {
        case AspectKind::den1:
        case AspectKind::den2: input_dim = encoding::kEmbeddingDim; break;
        case AspectKind::appr: input_dim = opts.features.appearance_dim; break;
        case AspectKind::semc: input_dim = opts.features.semantic_dim; break;
        case AspectKind::syn1:
        case AspectKind::syn2: input_dim = 2 * encoding::kLstmHidden; break;
    }
    auto init = gcn::GcnModel::create(kind, input_dim, cfg.hidden, static_cast<int>(labels.size()), seed);
    gcn::TrainConfig tc;
    tc.epochs = cfg.epochs;
    tc.learning_rate = cfg.learning_rate.value_or(gcn::TrainConfig::default_learning_rate(kind));
    tc.seed = splitmix64(seed);
    auto result = gcn::pretrain_aspect(data, std::move(init), tc);
    spdlog::info("pretrained {}: final loss {:.5f}, head accuracy {:.4f}", graphs::to_string(kind),
                 result.epoch_losses.back(), gcn::head_accuracy(data, result.model));
    return result;
}

ModelBundle train_pipeline(const std::vector<corpus::Page>& pages, const corpus::LabelSet& labels,
                           const corpus::FeatureConfig& features, const TrainOptions& opts) {
    ModelBundle bundle;
    bundle.labels = labels;
    bundle.features = features;
    for (auto kind : graphs::kAllKinds)
        bundle.gcns[kind_index(kind)] =
            pretrain_kind(pages, kind, labels, bundle.graph_options(), opts.pretrain).model;
    const auto train = collect_features(pages, bundle, RelationSource::gold);
    auto fcfg = opts.fusion;
    fcfg.classes = static_cast<int>(labels.size());
    fcfg.hidden_dim = opts.pretrain.hidden;
    fcfg.semantic_dim = features.semantic_dim;
    fcfg.appearance_dim = features.appearance_dim;
    bundle.classifier =
        fusion::train_classifier(train, fusion::FusionClassifier::create(fcfg, opts.classifier.seed), opts.classifier)
            .classifier;
    return bundle;
}

json bundle_meta(const ModelBundle& bundle) {
    return {{"labels", bundle.labels.names()},
            {"symbols", bundle.symbols.names()},
            {"features", features_to_json(bundle.features)}};
}

json features_to_json(const corpus::FeatureConfig& f) {
    return {{"fallback", f.fallback},
            {"seed", f.seed},
            {"semantic_dim", f.semantic_dim},
            {"appearance_dim", f.appearance_dim}};
}

corpus::FeatureConfig features_from_json(const json& j) {
    corpus::FeatureConfig f;
    f.fallback = j.at("fallback").get<bool>();
    f.seed = j.at("seed").get<std::uint64_t>();
    f.semantic_dim = j.at("semantic_dim").get<int>();
    f.appearance_dim = j.at("appearance_dim").get<int>();
    return f;
}

fs::path checkpoint_path(const fs::path& dir, const std::string& name) { return dir / (name + ".ckpt"); }

void save_gcn(const fs::path& dir, const gcn::GcnModel& m, const ModelBundle& bundle) {
    fs::create_directories(dir);
    save_checkpoint(checkpoint_path(dir, graphs::to_string(m.kind)), gcn::to_checkpoint(m, bundle_meta(bundle)));
}

void save_classifier(const fs::path& dir, const fusion::FusionClassifier& c, const ModelBundle& bundle) {
    fs::create_directories(dir);
    save_checkpoint(checkpoint_path(dir, "fusion"), fusion::to_checkpoint(c, bundle_meta(bundle)));
}

void save_relations(const fs::path& path, const relpred::RelationModel& m, const corpus::FeatureConfig& features) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_checkpoint(path, relpred::to_checkpoint(m, {{"features", features_to_json(features)}}));
}

std::pair<relpred::RelationModel, corpus::FeatureConfig> load_relations(const fs::path& path) {
    if (!fs::exists(path)) throw DataError("missing checkpoint: " + path.string());
    const auto ck = load_checkpoint(path);
    return {relpred::relation_from_checkpoint(ck), features_from_json(ck.meta.at("features"))};
}

namespace {

void apply_meta(ModelBundle& b, const json& meta) {
    b.labels = corpus::LabelSet(meta.at("labels").get<std::vector<std::string>>());
    b.symbols = encoding::SymbolTable(meta.at("symbols").get<std::vector<std::string>>());
    b.features = features_from_json(meta.at("features"));
}

}  // namespace

ModelBundle load_bundle(const fs::path& dir, bool need_classifier) {
    ModelBundle b;
    std::optional<json> meta;
    for (auto kind : graphs::kAllKinds) {
        const auto name = graphs::to_string(kind);
        const auto path = checkpoint_path(dir, name);
        if (!fs::exists(path)) throw DataError("missing checkpoint: " + name);
        const auto ck = load_checkpoint(path);
        json m = ck.meta;
        m.erase("kind");
        if (!meta) {
            meta = m;
            apply_meta(b, m);
        } else if (m != *meta) {
            throw DataError("checkpoint " + name + " was trained with different labels or features than den1");
        }
        auto model = gcn::gcn_from_checkpoint(ck);
        if (model.kind != kind) throw DataError("checkpoint " + path.string() + " holds a " + graphs::to_string(model.kind) + " model");
        b.gcns[kind_index(kind)] = std::move(model);
    }
    const auto fusion_path = checkpoint_path(dir, "fusion");
    if (fs::exists(fusion_path)) {
        b.classifier = fusion::fusion_from_checkpoint(load_checkpoint(fusion_path));
        if (b.classifier->config.classes != static_cast<int>(b.labels.size()))
            throw DataError("fusion checkpoint class count does not match the label set");
    } else if (need_classifier) {
        throw DataError("missing checkpoint: fusion");
    }
    const auto rel_path = checkpoint_path(dir, "relations");
    if (fs::exists(rel_path)) {
        auto [model, features] = load_relations(rel_path);
        if (features_to_json(features) != features_to_json(b.features))
            throw DataError("relations checkpoint was trained with different feature settings than the GCNs");
        b.relations = std::move(model);
    }
    return b;
}

void write_manifest(const fs::path& path, const std::string& command, const json& config,
                    const std::vector<fs::path>& outputs) {
    json files = json::array();
    for (const auto& p : outputs) files.push_back({{"path", p.string()}, {"sha256", sha256_file(p)}});
    const json manifest = {{"command", command}, {"config", config}, {"outputs", files}};
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path);
    if (!out) throw DataError("cannot write manifest: " + path.string());
    out << manifest.dump(2) << '\n';
}

}  // namespace docgcn::pipeline
