#ifndef DOCGCN_RELPRED_HPP
#define DOCGCN_RELPRED_HPP

#include "docgcn/checkpoint.hpp"
#include "docgcn/common.hpp"
#include "docgcn/corpus.hpp"

#include <array>
#include <optional>
#include <string>
#include <vector>

namespace docgcn::relpred {

struct RelationConfig {
    int input_dim = corpus::kSemanticDim + corpus::kAppearanceDim;  // 2816
    int d_model = 512;
    int heads = 8;
    int ff_dim = 2048;
    int max_len = 128;  // real segments + the no-parent slot
    double layer_norm_eps = 1e-5;
};

/// Parameters of the parent-pointer network. Weight matrices are stored
/// input x output; biases and layer-norm vectors as 1 x width.
struct RelationParams {
    Matrix proj_w, proj_b;  // segment embedding projection
    Matrix pos;             // max_len x d_model learned positions
    Matrix wq, bq, wk, bk, wv, bv, wo, bo;
    Matrix ln1_g, ln1_b;
    Matrix ff1_w, ff1_b, ff2_w, ff2_b;
    Matrix ln2_g, ln2_b;
    Matrix qt_w, qt_b;  // Q-Transform
    Matrix kt_w, kt_b;  // K-Transform
};

using ParamField = Matrix RelationParams::*;
extern const std::array<std::pair<const char*, ParamField>, 23> kRelationFields;

struct RelationModel {
    RelationConfig config;
    RelationParams params;

    static RelationModel create(const RelationConfig& cfg, std::uint64_t seed);
};

RelationParams zeros_like(const RelationParams& p);
std::vector<Param> parameters(RelationModel& m, RelationParams& grads);

/// Segment indices sorted by (y1, x1), ties by index.
std::vector<std::size_t> reading_order(const corpus::Page& page);

/// Parent-probability matrix for inputs already in sequence order.
/// `inputs` is N x input_dim; the result is N x (N + 1) where column N is the
/// no-parent slot and the diagonal is masked to probability 0.
Matrix attention_forward(const Matrix& inputs, const RelationModel& m);

/// Mean row cross-entropy against `targets` (sequence-order parent index, or N
/// for no parent). Gradients for every parameter are written into `grads`.
double attention_loss_grad(const Matrix& inputs, const std::vector<std::size_t>& targets, const RelationModel& m,
                           RelationParams& grads);

/// Inputs for a page in reading order: concat(semantic_vec, appearance_vec).
Matrix page_inputs(const corpus::Page& page, const std::vector<std::size_t>& order,
                   const corpus::FeatureConfig& features);

/// Page-order probability matrix: entry (i, j) is P(parent of i = j), with
/// column N meaning no parent. Throws DataError when N + 1 > max_len.
Matrix relation_forward(const corpus::Page& page, const RelationModel& m, const corpus::FeatureConfig& features);

/// Argmax parent per row, the last column meaning none. Any cycle is broken by
/// dropping its lowest-probability link, so the result is always a forest.
std::vector<std::optional<std::size_t>> decode_parents(const Matrix& probs);

std::vector<std::optional<std::size_t>> predict_relations(const corpus::Page& page, const RelationModel& m,
                                                          const corpus::FeatureConfig& features);

struct RelationTrainConfig {
    int epochs = 30;
    double learning_rate = 1e-4;
    AdamConfig adam{};
    std::uint64_t seed = 0;
};

struct RelationTrainResult {
    RelationModel model;
    std::vector<double> epoch_losses;
};

/// Trains on pages with ground-truth parent links, one Adam step per page.
RelationTrainResult train_relations(const std::vector<corpus::Page>& pages, RelationModel init,
                                    const RelationTrainConfig& cfg, const corpus::FeatureConfig& features);

/// Fraction of segments whose predicted parent (or none) matches the page's links.
double parent_accuracy(const std::vector<corpus::Page>& pages, const RelationModel& m,
                       const corpus::FeatureConfig& features);

Checkpoint to_checkpoint(const RelationModel& m, const nlohmann::json& meta = nlohmann::json::object());
RelationModel relation_from_checkpoint(const Checkpoint& ckpt);

}  // namespace docgcn::relpred

#endif  // DOCGCN_RELPRED_HPP
