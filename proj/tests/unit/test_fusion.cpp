#include "docgcn/fusion.hpp"
#include "support.hpp"

#include <doctest.h>

using namespace docgcn;
using namespace docgcn::fusion;
using namespace testing_support;

namespace {

PageFeatures random_features(Rng& rng, Eigen::Index n, int d, int appr_dim, int sem_dim, int classes) {
    PageFeatures p;
    p.page_id = "p";
    for (Matrix* m : {&p.syn1, &p.syn2, &p.den1, &p.den2, &p.appr, &p.semc}) *m = random_matrix(rng, n, d);
    p.h0_appr = random_matrix(rng, n, appr_dim);
    p.h0_semc = random_matrix(rng, n, sem_dim);
    for (Eigen::Index i = 0; i < n; ++i) p.labels.push_back(static_cast<int>(rng.index(static_cast<std::size_t>(classes))));
    return p;
}

FusionConfig small_config(Rng& rng) {
    FusionConfig cfg;
    cfg.hidden_dim = 1 + static_cast<int>(rng.index(4));
    cfg.mlp_hidden = 1 + static_cast<int>(rng.index(8));
    cfg.classes = 2 + static_cast<int>(rng.index(3));
    cfg.appearance_dim = 1 + static_cast<int>(rng.index(8));
    cfg.semantic_dim = 1 + static_cast<int>(rng.index(8));
    cfg.pooling = static_cast<PoolingMode>(rng.index(3));
    return cfg;
}

Matrix ref_affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix y = ref_matmul(x, w);
    for (Eigen::Index i = 0; i < y.rows(); ++i)
        for (Eigen::Index j = 0; j < y.cols(); ++j) y(i, j) += b(0, j);
    return y;
}

double ref_pool(double a, double b, PoolingMode mode) {
    switch (mode) {
        case PoolingMode::min: return a < b ? a : b;
        case PoolingMode::avg: return (a + b) / 2;
        case PoolingMode::max: return a > b ? a : b;
    }
    return 0;
}

Matrix ref_pool(const Matrix& a, const Matrix& b, PoolingMode mode) {
    Matrix out(a.rows(), a.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i)
        for (Eigen::Index j = 0; j < a.cols(); ++j) out(i, j) = ref_pool(a(i, j), b(i, j), mode);
    return out;
}

}  // namespace

TEST_CASE("pooling properties") {
    Rng rng(1);
    for (int trial = 0; trial < 50; ++trial) {
        const Matrix x = random_matrix(rng, 4, 3), y = random_matrix(rng, 4, 3);
        CHECK(pool(x, x, PoolingMode::max) == x);
        CHECK(pool(x, x, PoolingMode::min) == x);
        CHECK(pool(x, x, PoolingMode::avg) == x);
        CHECK(pool(x, (x.array() + 1).matrix(), PoolingMode::max) == (x.array() + 1).matrix());
        const Matrix mx = pool(x, y, PoolingMode::max), mn = pool(x, y, PoolingMode::min);
        CHECK((mx.array() >= x.array()).all());
        CHECK((mx.array() >= y.array()).all());
        CHECK((mn.array() <= x.array()).all());
        CHECK((mn.array() <= y.array()).all());
        CHECK(pool(x, y, PoolingMode::avg) == ((x + y) * 0.5));
        // Row permutation commutes with pooling.
        Eigen::PermutationMatrix<Eigen::Dynamic> p(4);
        p.setIdentity();
        std::swap(p.indices()(0), p.indices()(3));
        CHECK(pool(p * x, p * y, PoolingMode::max) == Matrix(p * mx));
    }
    CHECK_THROWS_AS(pool(Matrix::Zero(2, 2), Matrix::Zero(2, 3), PoolingMode::max), ContractViolation);
}

TEST_CASE("pool_aspect matches elementwise oracle for every aspect") {
    Rng rng(2);
    for (int trial = 0; trial < 200; ++trial) {
        auto cfg = small_config(rng);
        const auto clf = FusionClassifier::create(cfg, rng.next_u64());
        const auto n = static_cast<Eigen::Index>(1 + rng.index(6));
        const auto f = random_features(rng, n, cfg.hidden_dim, cfg.appearance_dim, cfg.semantic_dim, cfg.classes);
        const auto mode = cfg.pooling;
        CHECK((pool_aspect(Aspect::syntactic, f, clf) - ref_pool(f.syn1, f.syn2, mode)).cwiseAbs().maxCoeff() <= 1e-12);
        CHECK((pool_aspect(Aspect::density, f, clf) - ref_pool(f.den1, f.den2, mode)).cwiseAbs().maxCoeff() <= 1e-12);
        const Matrix sem = ref_pool(f.semc, ref_affine(f.h0_semc, clf.fc_semc_w, clf.fc_semc_b), mode);
        const Matrix app = ref_pool(f.appr, ref_affine(f.h0_appr, clf.fc_appr_w, clf.fc_appr_b), mode);
        CHECK((pool_aspect(Aspect::semantic, f, clf) - sem).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK((pool_aspect(Aspect::appearance, f, clf) - app).cwiseAbs().maxCoeff() <= 1e-9);
    }
}

TEST_CASE("fuse concatenates in syn, sem, dens, appr order") {
    Rng rng(3);
    auto cfg = small_config(rng);
    cfg.aspects = {Aspect::appearance, Aspect::syntactic};  // canonicalised by create
    const auto clf = FusionClassifier::create(cfg, 1);
    CHECK(clf.config.aspects == std::vector<Aspect>{Aspect::syntactic, Aspect::appearance});
    CHECK(clf.input_width() == 2 * cfg.hidden_dim);
    const auto f = random_features(rng, 3, cfg.hidden_dim, cfg.appearance_dim, cfg.semantic_dim, cfg.classes);
    const Matrix fused = fuse(f, clf);
    CHECK(fused.leftCols(cfg.hidden_dim) == pool_aspect(Aspect::syntactic, f, clf));
    CHECK(fused.rightCols(cfg.hidden_dim) == pool_aspect(Aspect::appearance, f, clf));
    CHECK_THROWS_AS(canonical_aspects({}), ContractViolation);
}

TEST_CASE("classify matches straight-line oracle; eval mode is pure") {
    Rng rng(4);
    for (int trial = 0; trial < 200; ++trial) {
        auto cfg = small_config(rng);
        const auto clf = FusionClassifier::create(cfg, rng.next_u64());
        const Matrix x = random_matrix(rng, static_cast<Eigen::Index>(1 + rng.index(5)), clf.input_width());
        Matrix h = ref_affine(x, clf.mlp1_w, clf.mlp1_b);
        for (Eigen::Index i = 0; i < h.rows(); ++i)
            for (Eigen::Index j = 0; j < h.cols(); ++j) h(i, j) = std::tanh(h(i, j));
        const Matrix expect = ref_affine(h, clf.mlp2_w, clf.mlp2_b);
        const Matrix got = classify(x, clf, false);
        CHECK((got - expect).cwiseAbs().maxCoeff() <= 1e-9);
        CHECK(classify(x, clf, false) == got);
    }
}

TEST_CASE("classify examples") {
    FusionConfig cfg;
    cfg.hidden_dim = 3;
    cfg.mlp_hidden = 5;
    cfg.classes = 2;
    cfg.appearance_dim = 2;
    cfg.semantic_dim = 2;
    auto clf = FusionClassifier::create(cfg, 1);
    clf.mlp1_b.setZero();
    clf.mlp2_b.setZero();
    CHECK(classify(Matrix::Zero(2, clf.input_width()), clf, false).isZero(0.0));
    // Adding a constant to a row of logits leaves the argmax unchanged.
    Matrix logits(2, 3);
    logits << 0.1, 0.5, 0.5, -1, -2, -3;
    CHECK(argmax_rows(logits) == std::vector<int>{1, 0});
    CHECK(argmax_rows((logits.array() + 7.0).matrix()) == std::vector<int>{1, 0});
}

TEST_CASE("fusion gradients match finite differences (FC projections and MLP)") {
    Rng rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        auto cfg = small_config(rng);
        cfg.dropout = trial % 2 ? 0.3 : 0.0;
        auto clf = FusionClassifier::create(cfg, rng.next_u64());
        const auto f = random_features(rng, static_cast<Eigen::Index>(1 + rng.index(6)), cfg.hidden_dim,
                                       cfg.appearance_dim, cfg.semantic_dim, cfg.classes);
        const Rng mask_rng(rng.next_u64());
        FusionGrads grads;
        Rng r0 = mask_rng;
        fusion_loss_grad(f, clf, grads, &r0);
        auto loss = [&] {
            Rng r = mask_rng;
            FusionGrads scratch;
            return fusion_loss_grad(f, clf, scratch, &r);
        };
        for (auto& p : parameters(clf, grads)) CHECK(relative_error(*p.grad, numeric_gradient(*p.value, loss)) < 1e-4);
    }
}

TEST_CASE("classifier training is deterministic and fits a separable set") {
    Rng rng(6);
    FusionConfig cfg;
    cfg.hidden_dim = 4;
    cfg.mlp_hidden = 16;
    cfg.classes = 3;
    cfg.appearance_dim = 3;
    cfg.semantic_dim = 3;
    std::vector<PageFeatures> pages;
    for (int p = 0; p < 20; ++p) {
        auto f = random_features(rng, 6, 4, 3, 3, 3);
        for (Eigen::Index i = 0; i < 6; ++i) f.den1(i, f.labels[static_cast<std::size_t>(i)]) += 3.0;
        pages.push_back(f);
    }
    ClassifierTrainConfig tc;
    tc.epochs = 30;
    tc.learning_rate = 1e-2;
    tc.seed = 9;
    const auto a = train_classifier(pages, FusionClassifier::create(cfg, 1), tc);
    const auto b = train_classifier(pages, FusionClassifier::create(cfg, 1), tc);
    CHECK(a.classifier.mlp1_w == b.classifier.mlp1_w);
    CHECK(a.epoch_losses == b.epoch_losses);
    std::size_t right = 0, total = 0;
    for (const auto& p : pages) {
        const auto pred = argmax_rows(classify(fuse(p, a.classifier), a.classifier, false));
        for (std::size_t i = 0; i < pred.size(); ++i) right += pred[i] == p.labels[i], ++total;
    }
    CHECK(static_cast<double>(right) / static_cast<double>(total) >= 0.95);
}

TEST_CASE("identical pooling operands make all three modes tie exactly") {
    Rng rng(7);
    FusionConfig cfg;
    cfg.hidden_dim = 3;
    cfg.mlp_hidden = 4;
    cfg.classes = 2;
    cfg.appearance_dim = 2;
    cfg.semantic_dim = 2;
    cfg.aspects = {Aspect::syntactic, Aspect::density};
    auto f = random_features(rng, 4, 3, 2, 2, 2);
    f.syn2 = f.syn1;
    f.den2 = f.den1;
    std::vector<Matrix> logits;
    for (auto mode : {PoolingMode::min, PoolingMode::avg, PoolingMode::max}) {
        cfg.pooling = mode;
        const auto clf = FusionClassifier::create(cfg, 3);
        logits.push_back(classify(fuse(f, clf), clf, false));
    }
    CHECK(logits[0] == logits[1]);
    CHECK(logits[1] == logits[2]);
}
