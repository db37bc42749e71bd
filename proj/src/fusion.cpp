#include "docgcn/fusion.hpp"

#include <spdlog/spdlog.h>

#include <algorithm>
#include <cmath>
#include <numeric>

namespace docgcn::fusion {

std::string to_string(PoolingMode mode) {
    switch (mode) {
        case PoolingMode::min: return "min";
        case PoolingMode::avg: return "avg";
        case PoolingMode::max: return "max";
    }
    return "max";
}

PoolingMode pooling_mode_from_string(const std::string& s) {
    if (s == "min") return PoolingMode::min;
    if (s == "avg") return PoolingMode::avg;
    if (s == "max") return PoolingMode::max;
    throw UsageError("unknown pooling mode '" + s + "' (expected min, avg or max)");
}

std::string to_string(Aspect a) {
    switch (a) {
        case Aspect::syntactic: return "syn";
        case Aspect::semantic: return "sem";
        case Aspect::density: return "dens";
        case Aspect::appearance: return "appr";
    }
    return "?";
}

Aspect aspect_from_string(const std::string& s) {
    if (s == "syn" || s == "syntactic") return Aspect::syntactic;
    if (s == "sem" || s == "semantic") return Aspect::semantic;
    if (s == "dens" || s == "density") return Aspect::density;
    if (s == "appr" || s == "appearance") return Aspect::appearance;
    throw UsageError("unknown aspect '" + s + "' (expected syn, sem, dens or appr)");
}

std::vector<Aspect> canonical_aspects(std::vector<Aspect> aspects) {
    require(!aspects.empty(), "aspect subset must be nonempty");
    std::sort(aspects.begin(), aspects.end());
    aspects.erase(std::unique(aspects.begin(), aspects.end()), aspects.end());
    return aspects;
}

Matrix pool(const Matrix& a, const Matrix& b, PoolingMode mode) {
    require(a.rows() == b.rows() && a.cols() == b.cols(), "pool: operand shapes differ");
    switch (mode) {
        case PoolingMode::min: return a.cwiseMin(b);
        case PoolingMode::avg: return (a + b) * 0.5;
        case PoolingMode::max: return a.cwiseMax(b);
    }
    return a;
}

namespace {

// Share of the pooled gradient routed to the first operand (ties go to it).
Matrix pool_route(const Matrix& a, const Matrix& b, PoolingMode mode) {
    switch (mode) {
        case PoolingMode::min: return (a.array() <= b.array()).cast<double>().matrix();
        case PoolingMode::avg: return Matrix::Constant(a.rows(), a.cols(), 0.5);
        case PoolingMode::max: return (a.array() >= b.array()).cast<double>().matrix();
    }
    return Matrix::Zero(a.rows(), a.cols());
}

Matrix affine(const Matrix& x, const Matrix& w, const Matrix& b) {
    Matrix y = x * w;
    y.rowwise() += b.row(0);
    return y;
}

bool uses(const FusionClassifier& c, Aspect a) {
    return std::find(c.config.aspects.begin(), c.config.aspects.end(), a) != c.config.aspects.end();
}

// Forward through one page, keeping what backward needs.
struct Tape {
    Matrix proj_appr, proj_semc;  // FC outputs
    Matrix fused, pre1, act1, mask, dropped, logits;
};

void forward_page(const PageFeatures& p, const FusionClassifier& c, Tape& t, Rng* dropout_rng) {
    const auto& cfg = c.config;
    const auto n = p.size();
    const auto d = cfg.hidden_dim;
    t.fused.resize(n, static_cast<Eigen::Index>(cfg.aspects.size()) * d);
    Eigen::Index col = 0;
    for (Aspect a : cfg.aspects) {
        Matrix pooled;
        switch (a) {
            case Aspect::syntactic: pooled = pool(p.syn1, p.syn2, cfg.pooling); break;
            case Aspect::density: pooled = pool(p.den1, p.den2, cfg.pooling); break;
            case Aspect::semantic:
                t.proj_semc = affine(p.h0_semc, c.fc_semc_w, c.fc_semc_b);
                pooled = pool(p.semc, t.proj_semc, cfg.pooling);
                break;
            case Aspect::appearance:
                t.proj_appr = affine(p.h0_appr, c.fc_appr_w, c.fc_appr_b);
                pooled = pool(p.appr, t.proj_appr, cfg.pooling);
                break;
        }
        require(pooled.rows() == n && pooled.cols() == d, "fusion: aspect features have wrong shape");
        t.fused.middleCols(col, d) = pooled;
        col += d;
    }
    t.pre1 = affine(t.fused, c.mlp1_w, c.mlp1_b);
    t.act1 = t.pre1.array().tanh().matrix();
    if (dropout_rng && cfg.dropout > 0.0) {
        t.mask.resize(t.act1.rows(), t.act1.cols());
        const double keep = 1.0 - cfg.dropout;
        for (Eigen::Index i = 0; i < t.mask.rows(); ++i)
            for (Eigen::Index j = 0; j < t.mask.cols(); ++j)
                t.mask(i, j) = dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
        t.dropped = t.act1.cwiseProduct(t.mask);
    } else {
        t.mask.resize(0, 0);
        t.dropped = t.act1;
    }
    t.logits = affine(t.dropped, c.mlp2_w, c.mlp2_b);
}

}  // namespace

FusionClassifier FusionClassifier::create(FusionConfig cfg, std::uint64_t seed) {
    require(cfg.hidden_dim > 0 && cfg.mlp_hidden > 0 && cfg.classes > 0, "FusionClassifier: dims must be positive");
    require(cfg.dropout >= 0.0 && cfg.dropout < 1.0, "FusionClassifier: dropout must be in [0, 1)");
    cfg.aspects = canonical_aspects(cfg.aspects);
    Rng rng(seed);
    FusionClassifier c;
    c.config = cfg;
    const auto d = cfg.hidden_dim;
    c.fc_appr_w = glorot(rng, cfg.appearance_dim, d);
    c.fc_appr_b = Matrix::Zero(1, d);
    c.fc_semc_w = glorot(rng, cfg.semantic_dim, d);
    c.fc_semc_b = Matrix::Zero(1, d);
    c.mlp1_w = glorot(rng, static_cast<Eigen::Index>(cfg.aspects.size()) * d, cfg.mlp_hidden);
    c.mlp1_b = Matrix::Zero(1, cfg.mlp_hidden);
    c.mlp2_w = glorot(rng, cfg.mlp_hidden, cfg.classes);
    c.mlp2_b = Matrix::Zero(1, cfg.classes);
    return c;
}

void FusionGrads::zero_like(const FusionClassifier& c) {
    auto z = [](const Matrix& m) { return Matrix::Zero(m.rows(), m.cols()); };
    fc_appr_w = z(c.fc_appr_w);
    fc_appr_b = z(c.fc_appr_b);
    fc_semc_w = z(c.fc_semc_w);
    fc_semc_b = z(c.fc_semc_b);
    mlp1_w = z(c.mlp1_w);
    mlp1_b = z(c.mlp1_b);
    mlp2_w = z(c.mlp2_w);
    mlp2_b = z(c.mlp2_b);
}

std::vector<Param> parameters(FusionClassifier& c, FusionGrads& g) {
    std::vector<Param> ps;
    if (uses(c, Aspect::appearance)) {
        ps.push_back({&c.fc_appr_w, &g.fc_appr_w});
        ps.push_back({&c.fc_appr_b, &g.fc_appr_b});
    }
    if (uses(c, Aspect::semantic)) {
        ps.push_back({&c.fc_semc_w, &g.fc_semc_w});
        ps.push_back({&c.fc_semc_b, &g.fc_semc_b});
    }
    ps.push_back({&c.mlp1_w, &g.mlp1_w});
    ps.push_back({&c.mlp1_b, &g.mlp1_b});
    ps.push_back({&c.mlp2_w, &g.mlp2_w});
    ps.push_back({&c.mlp2_b, &g.mlp2_b});
    return ps;
}

Matrix pool_aspect(Aspect aspect, const PageFeatures& p, const FusionClassifier& c) {
    const auto mode = c.config.pooling;
    switch (aspect) {
        case Aspect::syntactic: return pool(p.syn1, p.syn2, mode);
        case Aspect::density: return pool(p.den1, p.den2, mode);
        case Aspect::semantic: return pool(p.semc, affine(p.h0_semc, c.fc_semc_w, c.fc_semc_b), mode);
        case Aspect::appearance: return pool(p.appr, affine(p.h0_appr, c.fc_appr_w, c.fc_appr_b), mode);
    }
    return {};
}

Matrix fuse(const PageFeatures& page, const FusionClassifier& clf) {
    Tape t;
    forward_page(page, clf, t, nullptr);
    return t.fused;
}

Matrix classify(const Matrix& fused, const FusionClassifier& c, bool train_mode, Rng* dropout_rng) {
    require(fused.cols() == c.mlp1_w.rows(), "classify: fused width does not match the MLP input");
    Matrix act = affine(fused, c.mlp1_w, c.mlp1_b).array().tanh().matrix();
    if (train_mode && c.config.dropout > 0.0) {
        require(dropout_rng != nullptr, "classify: train mode needs a dropout stream");
        const double keep = 1.0 - c.config.dropout;
        for (Eigen::Index i = 0; i < act.rows(); ++i)
            for (Eigen::Index j = 0; j < act.cols(); ++j) act(i, j) *= dropout_rng->uniform() < keep ? 1.0 / keep : 0.0;
    }
    return affine(act, c.mlp2_w, c.mlp2_b);
}

double fusion_loss_grad(const PageFeatures& p, const FusionClassifier& c, FusionGrads& g, Rng* dropout_rng) {
    Tape t;
    forward_page(p, c, t, dropout_rng);
    Matrix dlogits;
    const double loss = softmax_cross_entropy(t.logits, p.labels, &dlogits);

    g.zero_like(c);
    g.mlp2_w.noalias() = t.dropped.transpose() * dlogits;
    g.mlp2_b = dlogits.colwise().sum();
    Matrix dact = dlogits * c.mlp2_w.transpose();
    if (t.mask.size() > 0) dact = dact.cwiseProduct(t.mask);
    const Matrix dpre = dact.cwiseProduct((1.0 - t.act1.array().square()).matrix());
    g.mlp1_w.noalias() = t.fused.transpose() * dpre;
    g.mlp1_b = dpre.colwise().sum();

    const auto d = c.config.hidden_dim;
    const Matrix dfused = dpre * c.mlp1_w.transpose();
    Eigen::Index col = 0;
    for (Aspect a : c.config.aspects) {
        const Matrix dpooled = dfused.middleCols(col, d);
        col += d;
        if (a == Aspect::semantic) {
            // Second operand of the pool is the projection.
            const Matrix dproj =
                dpooled.cwiseProduct((1.0 - pool_route(p.semc, t.proj_semc, c.config.pooling).array()).matrix());
            g.fc_semc_w.noalias() = p.h0_semc.transpose() * dproj;
            g.fc_semc_b = dproj.colwise().sum();
        } else if (a == Aspect::appearance) {
            const Matrix dproj =
                dpooled.cwiseProduct((1.0 - pool_route(p.appr, t.proj_appr, c.config.pooling).array()).matrix());
            g.fc_appr_w.noalias() = p.h0_appr.transpose() * dproj;
            g.fc_appr_b = dproj.colwise().sum();
        }
    }
    return loss;
}

ClassifierTrainResult train_classifier(const std::vector<PageFeatures>& pages, FusionClassifier init,
                                       const ClassifierTrainConfig& cfg) {
    if (cfg.epochs < 1) throw UsageError("train: epochs must be >= 1");
    if (!(cfg.learning_rate > 0)) throw UsageError("train: learning rate must be positive");
    if (pages.empty()) throw DataError("train: no training pages");

    ClassifierTrainResult out{std::move(init), {}};
    auto& c = out.classifier;
    FusionGrads grads;
    grads.zero_like(c);
    AdamConfig adam = cfg.adam;
    adam.learning_rate = cfg.learning_rate;
    Adam opt(adam, parameters(c, grads));
    Rng order_rng(cfg.seed);
    Rng dropout_rng(splitmix64(cfg.seed ^ 0x0d20f0d20f0d20f0ULL));
    std::vector<std::size_t> order(pages.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        order_rng.shuffle(order);
        double total = 0.0;
        for (std::size_t idx : order) {
            const double loss = fusion_loss_grad(pages[idx], c, grads, &dropout_rng);
            if (!std::isfinite(loss))
                throw NumericError("train classifier: non-finite loss at epoch " + std::to_string(epoch + 1) +
                                   ", page " + pages[idx].page_id);
            opt.step(parameters(c, grads));
            total += loss;
        }
        out.epoch_losses.push_back(total / static_cast<double>(pages.size()));
        spdlog::debug("classifier epoch {} loss {:.6f}", epoch + 1, out.epoch_losses.back());
    }
    return out;
}

std::vector<int> argmax_rows(const Matrix& m) {
    std::vector<int> out(static_cast<std::size_t>(m.rows()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        Eigen::Index best = 0;
        for (Eigen::Index j = 1; j < m.cols(); ++j)
            if (m(i, j) > m(i, best)) best = j;
        out[static_cast<std::size_t>(i)] = static_cast<int>(best);
    }
    return out;
}

Checkpoint to_checkpoint(const FusionClassifier& c, const nlohmann::json& meta) {
    Checkpoint ck;
    ck.type = "fusion";
    ck.meta = meta;
    const auto& cfg = c.config;
    nlohmann::json aspects = nlohmann::json::array();
    for (Aspect a : cfg.aspects) aspects.push_back(to_string(a));
    ck.meta["fusion"] = {{"hidden_dim", cfg.hidden_dim}, {"mlp_hidden", cfg.mlp_hidden},
                         {"classes", cfg.classes},       {"appearance_dim", cfg.appearance_dim},
                         {"semantic_dim", cfg.semantic_dim}, {"dropout", cfg.dropout},
                         {"pooling", to_string(cfg.pooling)}, {"aspects", aspects}};
    ck.add("fc_appr.w", c.fc_appr_w);
    ck.add("fc_appr.b", c.fc_appr_b);
    ck.add("fc_semc.w", c.fc_semc_w);
    ck.add("fc_semc.b", c.fc_semc_b);
    ck.add("mlp1.w", c.mlp1_w);
    ck.add("mlp1.b", c.mlp1_b);
    ck.add("mlp2.w", c.mlp2_w);
    ck.add("mlp2.b", c.mlp2_b);
    return ck;
}

FusionClassifier fusion_from_checkpoint(const Checkpoint& ck) {
    if (ck.type != "fusion") throw DataError("expected a fusion checkpoint, got '" + ck.type + "'");
    const auto& f = ck.meta.at("fusion");
    FusionClassifier c;
    auto& cfg = c.config;
    cfg.hidden_dim = f.at("hidden_dim").get<int>();
    cfg.mlp_hidden = f.at("mlp_hidden").get<int>();
    cfg.classes = f.at("classes").get<int>();
    cfg.appearance_dim = f.at("appearance_dim").get<int>();
    cfg.semantic_dim = f.at("semantic_dim").get<int>();
    cfg.dropout = f.at("dropout").get<double>();
    cfg.pooling = pooling_mode_from_string(f.at("pooling").get<std::string>());
    cfg.aspects.clear();
    for (const auto& a : f.at("aspects")) cfg.aspects.push_back(aspect_from_string(a.get<std::string>()));
    c.fc_appr_w = ck.get("fc_appr.w");
    c.fc_appr_b = ck.get("fc_appr.b");
    c.fc_semc_w = ck.get("fc_semc.w");
    c.fc_semc_b = ck.get("fc_semc.b");
    c.mlp1_w = ck.get("mlp1.w");
    c.mlp1_b = ck.get("mlp1.b");
    c.mlp2_w = ck.get("mlp2.w");
    c.mlp2_b = ck.get("mlp2.b");
    return c;
}

}  // namespace docgcn::fusion
