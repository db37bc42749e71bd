#ifndef DOCGCN_FUSION_HPP
#define DOCGCN_FUSION_HPP

#include "docgcn/checkpoint.hpp"
#include "docgcn/common.hpp"

#include <string>
#include <vector>

namespace docgcn::fusion {

enum class PoolingMode { min, avg, max };

std::string to_string(PoolingMode mode);
PoolingMode pooling_mode_from_string(const std::string& s);

/// Feature aspects, in concatenation order.
enum class Aspect { syntactic, semantic, density, appearance };

inline const std::vector<Aspect> kAllAspects{Aspect::syntactic, Aspect::semantic, Aspect::density,
                                             Aspect::appearance};

std::string to_string(Aspect a);
/// Accepts "syn", "sem", "dens", "appr" (and the long names).
Aspect aspect_from_string(const std::string& s);
/// Sorts into concatenation order and removes duplicates; rejects an empty set.
std::vector<Aspect> canonical_aspects(std::vector<Aspect> aspects);

/// Elementwise pooling of two same-shaped node matrices.
Matrix pool(const Matrix& a, const Matrix& b, PoolingMode mode);

/// Frozen per-page inputs to the classifier: hidden representations of the six
/// pretrained GCNs plus the raw appearance and semantic node features.
struct PageFeatures {
    std::string page_id;
    Matrix syn1, syn2, den1, den2, appr, semc;  // N x d each
    Matrix h0_appr;                             // N x appearance dim
    Matrix h0_semc;                             // N x semantic dim
    std::vector<int> labels;                    // empty when unlabeled

    Eigen::Index size() const { return den1.rows(); }
};

struct FusionConfig {
    int hidden_dim = 256;  // d, must equal the GCN hidden width
    int mlp_hidden = 512;
    int classes = 2;
    int appearance_dim = 2048;
    int semantic_dim = 768;
    double dropout = 0.1;
    PoolingMode pooling = PoolingMode::max;
    std::vector<Aspect> aspects = kAllAspects;
};

struct FusionClassifier {
    FusionConfig config;
    Matrix fc_appr_w, fc_appr_b;  // appearance_dim x d, 1 x d
    Matrix fc_semc_w, fc_semc_b;  // semantic_dim x d, 1 x d
    Matrix mlp1_w, mlp1_b;        // (|aspects| d) x h_m, 1 x h_m
    Matrix mlp2_w, mlp2_b;        // h_m x C, 1 x C

    static FusionClassifier create(FusionConfig cfg, std::uint64_t seed);
    int input_width() const { return static_cast<int>(mlp1_w.rows()); }
};

struct FusionGrads {
    Matrix fc_appr_w, fc_appr_b, fc_semc_w, fc_semc_b, mlp1_w, mlp1_b, mlp2_w, mlp2_b;
    void zero_like(const FusionClassifier& c);
};

std::vector<Param> parameters(FusionClassifier& c, FusionGrads& g);

/// Pooled aspect matrix for one aspect (N x d).
Matrix pool_aspect(Aspect aspect, const PageFeatures& page, const FusionClassifier& clf);

/// Concatenation of the classifier's pooled aspects (N x |aspects| d).
Matrix fuse(const PageFeatures& page, const FusionClassifier& clf);

/// MLP logits. In train mode a dropout mask is drawn from `dropout_rng`.
Matrix classify(const Matrix& fused, const FusionClassifier& clf, bool train_mode, Rng* dropout_rng = nullptr);

/// Mean cross-entropy with gradients for the FC projections and the MLP.
/// `dropout_rng` null means eval mode (no dropout).
double fusion_loss_grad(const PageFeatures& page, const FusionClassifier& clf, FusionGrads& grads,
                        Rng* dropout_rng);

struct ClassifierTrainConfig {
    int epochs = 40;
    double learning_rate = 2e-5;
    AdamConfig adam{};
    std::uint64_t seed = 0;
};

struct ClassifierTrainResult {
    FusionClassifier classifier;
    std::vector<double> epoch_losses;
};

/// One Adam step per page; page order shuffled per epoch and dropout masks
/// drawn from streams derived from cfg.seed.
ClassifierTrainResult train_classifier(const std::vector<PageFeatures>& pages, FusionClassifier init,
                                       const ClassifierTrainConfig& cfg);

/// Row-wise argmax; ties go to the lowest class index.
std::vector<int> argmax_rows(const Matrix& m);

Checkpoint to_checkpoint(const FusionClassifier& c, const nlohmann::json& meta = nlohmann::json::object());
FusionClassifier fusion_from_checkpoint(const Checkpoint& ckpt);

}  // namespace docgcn::fusion

#endif  // DOCGCN_FUSION_HPP
