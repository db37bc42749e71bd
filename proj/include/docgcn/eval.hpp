#ifndef DOCGCN_EVAL_HPP
#define DOCGCN_EVAL_HPP

#include "docgcn/corpus.hpp"
#include "docgcn/fusion.hpp"

#include <json.hpp>

#include <array>
#include <string>
#include <vector>

namespace docgcn::eval {

struct ClassMetrics {
    std::string name;
    double precision = 0, recall = 0, f1 = 0;
    std::size_t support = 0;
};

struct Aggregate {
    double precision = 0, recall = 0, f1 = 0;
};

/// Per-class and aggregate scores. A class with no predictions (or no gold
/// segments) scores 0 for the undefined ratio.
struct ClassReport {
    std::vector<ClassMetrics> classes;
    Aggregate micro, macro, weighted;
    std::size_t total = 0;

    nlohmann::json to_json() const;
    std::string to_table() const;
};

/// Scores aligned label-id vectors.
ClassReport score_labels(const std::vector<int>& predicted, const std::vector<int>& gold, const corpus::LabelSet& labels);

/// A label assigned to one segment of one page.
struct LabeledSegment {
    std::string page_id;
    std::string segment_id;
    std::string label;
};

/// Matches predictions to gold by (page id, segment id). Throws DataError listing
/// missing and extra ids when the two sets differ, or naming unknown labels.
ClassReport score(const std::vector<LabeledSegment>& predictions, const std::vector<LabeledSegment>& gold,
                  const corpus::LabelSet& labels);

/// Gold labels of every segment in the pages.
std::vector<LabeledSegment> gold_segments(const std::vector<corpus::Page>& pages);

/// Trains a classifier on `train` with the given fusion settings and scores it on `test`.
ClassReport train_and_score(const std::vector<fusion::PageFeatures>& train, const std::vector<fusion::PageFeatures>& test,
                            const fusion::FusionConfig& fcfg, const fusion::ClassifierTrainConfig& tcfg,
                            const corpus::LabelSet& labels);

/// Retrains the classifier on the concatenation of only `aspects`.
ClassReport ablate_aspects(const std::vector<fusion::PageFeatures>& train,
                           const std::vector<fusion::PageFeatures>& test, const std::vector<fusion::Aspect>& aspects,
                           fusion::FusionConfig fcfg, const fusion::ClassifierTrainConfig& tcfg,
                           const corpus::LabelSet& labels);

/// All 15 nonempty aspect subsets, in a stable order (singletons first).
std::vector<std::vector<fusion::Aspect>> aspect_subsets();

/// "syn+sem" style name of an aspect set.
std::string aspects_name(const std::vector<fusion::Aspect>& aspects);

/// Min, avg and max pooling, each trained with the same seeds.
std::array<ClassReport, 3> compare_pooling(const std::vector<fusion::PageFeatures>& train,
                                           const std::vector<fusion::PageFeatures>& test, fusion::FusionConfig fcfg,
                                           const fusion::ClassifierTrainConfig& tcfg, const corpus::LabelSet& labels);

}  // namespace docgcn::eval

#endif  // DOCGCN_EVAL_HPP
