#ifndef DOCGCN_GCN_HPP
#define DOCGCN_GCN_HPP

#include "docgcn/checkpoint.hpp"
#include "docgcn/common.hpp"
#include "docgcn/encoding.hpp"
#include "docgcn/graphs.hpp"

#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace docgcn::gcn {

using graphs::AspectGraph;
using graphs::AspectKind;

inline constexpr int kDefaultHidden = 256;

/// Two-layer GCN with a node-classification head. Syntactic kinds own the
/// Bi-LSTM that produces their input features.
struct GcnModel {
    AspectKind kind = AspectKind::den1;
    Matrix w1;  // d0 x d
    Matrix w2;  // d x C
    std::optional<encoding::BiLstm> encoder;

    int input_dim() const { return static_cast<int>(w1.rows()); }
    int hidden() const { return static_cast<int>(w1.cols()); }
    int classes() const { return static_cast<int>(w2.cols()); }

    /// Glorot-initialised model. For syntactic kinds `lstm_hidden` sets the
    /// per-direction width and input_dim must equal 2 * lstm_hidden.
    static GcnModel create(AspectKind kind, int input_dim, int hidden, int classes, std::uint64_t seed,
                           int symbol_dim = encoding::kEmbeddingDim, int lstm_hidden = encoding::kLstmHidden);
};

struct GcnGrads {
    Matrix w1, w2;
    encoding::BiLstm::Grads lstm;

    void zero_like(const GcnModel& m);
};

std::vector<Param> parameters(GcnModel& m, GcnGrads& g);

/// H0 of a graph under a model: the stored features, or the model's Bi-LSTM
/// encoding of the graph's symbols for syntactic kinds.
Matrix input_features(const AspectGraph& g, const GcnModel& m, encoding::BiLstm::Tape* tape = nullptr);

struct ForwardResult {
    Matrix hidden;  // H1 = ReLU(Â H0 W1), N x d
    Matrix logits;  // Â H1 W2, N x C
};

ForwardResult gcn_forward(const AspectGraph& g, const GcnModel& m);

/// Mean cross-entropy over nodes; writes exact gradients for every parameter
/// (including the Bi-LSTM for syntactic kinds) into `grads`, overwriting them.
double gcn_loss_grad(const AspectGraph& g, const GcnModel& m, const std::vector<int>& labels, GcnGrads& grads);

/// Hidden-layer node representations (N x d).
Matrix extract_hidden(const AspectGraph& g, const GcnModel& m);

struct TrainConfig {
    int epochs = 10;
    double learning_rate = 1e-3;
    AdamConfig adam{};
    std::uint64_t seed = 0;

    /// Learning rate used for an aspect kind: 1e-4 for semantic and syntactic
    /// graphs, 1e-3 for density and appearance graphs.
    static double default_learning_rate(AspectKind kind);
};

struct LabeledGraph {
    std::string page_id;
    AspectGraph graph;
    std::vector<int> labels;
};

struct TrainResult {
    GcnModel model;
    std::vector<double> epoch_losses;  // mean page loss per epoch
};

/// Trains `init` for cfg.epochs passes, one Adam step per page graph, with the
/// page order reshuffled every epoch from cfg.seed.
TrainResult pretrain_aspect(const std::vector<LabeledGraph>& pages, GcnModel init, const TrainConfig& cfg);

/// Node accuracy of the model's own classification head.
double head_accuracy(const std::vector<LabeledGraph>& pages, const GcnModel& m);

Checkpoint to_checkpoint(const GcnModel& m, const nlohmann::json& meta = nlohmann::json::object());
GcnModel gcn_from_checkpoint(const Checkpoint& ckpt);

}  // namespace docgcn::gcn

#endif  // DOCGCN_GCN_HPP
