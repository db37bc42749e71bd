#ifndef DOCGCN_PIPELINE_HPP
#define DOCGCN_PIPELINE_HPP

#include "docgcn/corpus.hpp"
#include "docgcn/eval.hpp"
#include "docgcn/fusion.hpp"
#include "docgcn/gcn.hpp"
#include "docgcn/graphs.hpp"
#include "docgcn/relpred.hpp"

#include <json.hpp>

#include <array>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace docgcn::pipeline {

using graphs::AspectKind;

std::size_t kind_index(AspectKind kind);

/// Everything needed to classify a page: six frozen GCNs, the fusion
/// classifier and, optionally, the relation model for unlinked pages.
struct ModelBundle {
    corpus::LabelSet labels;
    corpus::FeatureConfig features;
    encoding::SymbolTable symbols;
    std::array<std::optional<gcn::GcnModel>, 6> gcns;  // kAllKinds order
    std::optional<fusion::FusionClassifier> classifier;
    std::optional<relpred::RelationModel> relations;

    graphs::GraphOptions graph_options() const { return {features, symbols}; }
    /// Throws DataError("missing checkpoint: <kind>") when the model is absent.
    const gcn::GcnModel& gcn(AspectKind kind) const;
};

/// Where parent links for the relation graphs come from.
enum class RelationSource {
    automatic,  // page links when present, else the relation model
    gold,       // page links only (pages without links have none)
    predicted,  // always the relation model
};

RelationSource relation_source_from_string(const std::string& s);

/// Parent map used to build a page's relation graphs.
std::vector<std::optional<std::size_t>> page_parents(const corpus::Page& page, const ModelBundle& bundle,
                                                     RelationSource source);

/// Frozen classifier inputs for a page. Labels are filled when every segment is labeled.
fusion::PageFeatures page_features(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                                   const ModelBundle& bundle);

std::vector<fusion::PageFeatures> collect_features(const std::vector<corpus::Page>& pages, const ModelBundle& bundle,
                                                   RelationSource source);

struct PagePrediction {
    std::string page_id;
    std::vector<std::string> segment_ids;
    Matrix probs;             // N x C, eval-mode softmax
    std::vector<int> labels;  // argmax, ties to the lowest id
};

PagePrediction predict_page(const corpus::Page& page, const ModelBundle& bundle,
                            RelationSource source = RelationSource::automatic);
/// Same, with an explicit parent map for the relation graphs.
PagePrediction predict_page(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents,
                            const ModelBundle& bundle);

nlohmann::json prediction_to_json(const PagePrediction& p, const corpus::LabelSet& labels);
/// Flattens a predictions JSONL file into scoreable segments.
std::vector<eval::LabeledSegment> read_predictions(const std::filesystem::path& path);

/// {"page_id", "links": [[child, parent], ...]} with segment ids.
nlohmann::json relations_to_json(const corpus::Page& page, const std::vector<std::optional<std::size_t>>& parents);

/// Edge lists and feature shapes of all six graphs of a page.
nlohmann::json graphs_to_json(const corpus::Page& page, const std::array<graphs::AspectGraph, 6>& graphs);

struct PretrainOptions {
    int hidden = gcn::kDefaultHidden;
    int epochs = 10;
    std::optional<double> learning_rate;  // default: per-kind rate
    std::uint64_t seed = 0;
};

/// Seed stream of one aspect kind derived from a run seed.
std::uint64_t kind_seed(std::uint64_t seed, AspectKind kind);

/// Training graphs of one kind built with the pages' own parent links.
std::vector<gcn::LabeledGraph> labeled_graphs(const std::vector<corpus::Page>& pages, AspectKind kind,
                                              const corpus::LabelSet& labels, const graphs::GraphOptions& opts);

gcn::TrainResult pretrain_kind(const std::vector<corpus::Page>& pages, AspectKind kind, const corpus::LabelSet& labels,
                               const graphs::GraphOptions& opts, const PretrainOptions& cfg);

struct TrainOptions {
    PretrainOptions pretrain;
    fusion::FusionConfig fusion;
    fusion::ClassifierTrainConfig classifier;
};

/// Pretrains all six GCNs, then the fusion classifier on their frozen outputs.
ModelBundle train_pipeline(const std::vector<corpus::Page>& pages, const corpus::LabelSet& labels,
                           const corpus::FeatureConfig& features, const TrainOptions& opts);

/// Metadata stored in every GCN checkpoint so a model directory is self-describing.
nlohmann::json bundle_meta(const ModelBundle& bundle);

std::filesystem::path checkpoint_path(const std::filesystem::path& dir, const std::string& name);

void save_gcn(const std::filesystem::path& dir, const gcn::GcnModel& m, const ModelBundle& bundle);
void save_classifier(const std::filesystem::path& dir, const fusion::FusionClassifier& c, const ModelBundle& bundle);
/// The feature settings used in training are stored with the model and must
/// match the bundle's when loaded alongside it.
void save_relations(const std::filesystem::path& path, const relpred::RelationModel& m,
                    const corpus::FeatureConfig& features);

nlohmann::json features_to_json(const corpus::FeatureConfig& f);
corpus::FeatureConfig features_from_json(const nlohmann::json& j);

/// Loads a relation checkpoint and the feature settings it was trained with.
std::pair<relpred::RelationModel, corpus::FeatureConfig> load_relations(const std::filesystem::path& path);

/// Loads the GCNs (in kind order, failing on the first missing one), then the
/// classifier if `need_classifier`, then relations.ckpt if it exists.
ModelBundle load_bundle(const std::filesystem::path& dir, bool need_classifier);

/// Records a run: command, config, seeds and SHA-256 of every output file.
void write_manifest(const std::filesystem::path& path, const std::string& command, const nlohmann::json& config,
                    const std::vector<std::filesystem::path>& outputs);

}  // namespace docgcn::pipeline

#endif  // DOCGCN_PIPELINE_HPP
