#include "docgcn/gcn.hpp"

#include <spdlog/spdlog.h>

#include <cmath>
#include <numeric>

namespace docgcn::gcn {

GcnModel GcnModel::create(AspectKind kind, int input_dim, int hidden, int classes, std::uint64_t seed,
                          int symbol_dim, int lstm_hidden) {
    require(input_dim > 0 && hidden > 0 && classes > 0, "GcnModel::create: dimensions must be positive");
    Rng rng(seed);
    GcnModel m;
    m.kind = kind;
    if (graphs::is_syntactic(kind)) {
        require(input_dim == 2 * lstm_hidden, "GcnModel::create: syntactic input_dim must be 2 * lstm_hidden");
        m.encoder.emplace(symbol_dim, lstm_hidden, rng);
    }
    m.w1 = glorot(rng, input_dim, hidden);
    m.w2 = glorot(rng, hidden, classes);
    return m;
}

void GcnGrads::zero_like(const GcnModel& m) {
    w1 = Matrix::Zero(m.w1.rows(), m.w1.cols());
    w2 = Matrix::Zero(m.w2.rows(), m.w2.cols());
    if (m.encoder) lstm.zero_like(*m.encoder);
}

std::vector<Param> parameters(GcnModel& m, GcnGrads& g) {
    std::vector<Param> ps{{&m.w1, &g.w1}, {&m.w2, &g.w2}};
    if (m.encoder) {
        auto enc = m.encoder->params(g.lstm);
        ps.insert(ps.end(), enc.begin(), enc.end());
    }
    return ps;
}

Matrix input_features(const AspectGraph& g, const GcnModel& m, encoding::BiLstm::Tape* tape) {
    if (graphs::is_syntactic(m.kind)) {
        require(m.encoder.has_value(), "input_features: syntactic model without encoder");
        require(g.symbols.has_value(), "input_features: syntactic graph without symbols");
        return encoding::encode_symbol_batch(*g.symbols, *m.encoder, tape);
    }
    return g.node_features;
}

namespace {

struct Activations {
    Matrix h0, ah0, z1, h1, ah1, logits;
    encoding::BiLstm::Tape tape;
};

void forward_into(const AspectGraph& g, const GcnModel& m, Activations& act, bool record) {
    require(g.kind == m.kind, "gcn_forward: graph kind does not match model kind");
    act.h0 = input_features(g, m, record ? &act.tape : nullptr);
    require(act.h0.cols() == m.w1.rows(), "gcn_forward: feature width does not match W1 rows");
    require(act.h0.rows() == g.norm_adjacency.rows(), "gcn_forward: feature rows do not match node count");
    act.ah0.noalias() = g.norm_adjacency * act.h0;
    act.z1.noalias() = act.ah0 * m.w1;
    act.h1 = act.z1.cwiseMax(0.0);
    act.ah1.noalias() = g.norm_adjacency * act.h1;
    act.logits.noalias() = act.ah1 * m.w2;
}

}  // namespace

ForwardResult gcn_forward(const AspectGraph& g, const GcnModel& m) {
    Activations act;
    forward_into(g, m, act, false);
    return {std::move(act.h1), std::move(act.logits)};
}

double gcn_loss_grad(const AspectGraph& g, const GcnModel& m, const std::vector<int>& labels, GcnGrads& grads) {
    require(static_cast<Eigen::Index>(labels.size()) == g.size(), "gcn_loss_grad: labels length != node count");
    for (int y : labels) require(y >= 0 && y < m.classes(), "gcn_loss_grad: label id out of range");
    Activations act;
    forward_into(g, m, act, true);
    Matrix dlogits;
    const double loss = softmax_cross_entropy(act.logits, labels, &dlogits);

    grads.zero_like(m);
    grads.w2.noalias() = act.ah1.transpose() * dlogits;
    const Matrix dh1 = g.norm_adjacency.transpose() * (dlogits * m.w2.transpose());
    const Matrix dz1 = dh1.cwiseProduct((act.z1.array() > 0.0).cast<double>().matrix());
    grads.w1.noalias() = act.ah0.transpose() * dz1;
    if (graphs::is_syntactic(m.kind)) {
        const Matrix dh0 = g.norm_adjacency.transpose() * (dz1 * m.w1.transpose());
        encoding::symbol_batch_backward(*g.symbols, *m.encoder, act.tape, dh0, grads.lstm);
    }
    return loss;
}

Matrix extract_hidden(const AspectGraph& g, const GcnModel& m) { return gcn_forward(g, m).hidden; }

double TrainConfig::default_learning_rate(AspectKind kind) {
    switch (kind) {
        case AspectKind::semc:
        case AspectKind::syn1:
        case AspectKind::syn2: return 1e-4;
        case AspectKind::den1:
        case AspectKind::den2:
        case AspectKind::appr: return 1e-3;
    }
    return 1e-3;
}

TrainResult pretrain_aspect(const std::vector<LabeledGraph>& pages, GcnModel init, const TrainConfig& cfg) {
    if (cfg.epochs < 1) throw UsageError("pretrain: epochs must be >= 1");
    if (!(cfg.learning_rate > 0)) throw UsageError("pretrain: learning rate must be positive");
    if (pages.empty()) throw DataError("pretrain: no training pages");

    TrainResult out{std::move(init), {}};
    GcnModel& m = out.model;
    GcnGrads grads;
    grads.zero_like(m);
    AdamConfig adam = cfg.adam;
    adam.learning_rate = cfg.learning_rate;
    Adam opt(adam, parameters(m, grads));
    Rng rng(cfg.seed);
    std::vector<std::size_t> order(pages.size());
    std::iota(order.begin(), order.end(), 0);

    for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
        rng.shuffle(order);
        double total = 0.0;
        for (std::size_t idx : order) {
            const auto& page = pages[idx];
            const double loss = gcn_loss_grad(page.graph, m, page.labels, grads);
            if (!std::isfinite(loss))
                throw NumericError("pretrain " + graphs::to_string(m.kind) + ": non-finite loss at epoch " +
                                   std::to_string(epoch + 1) + ", page " + page.page_id);
            opt.step(parameters(m, grads));
            total += loss;
        }
        out.epoch_losses.push_back(total / static_cast<double>(pages.size()));
        spdlog::debug("pretrain {} epoch {} loss {:.6f}", graphs::to_string(m.kind), epoch + 1,
                      out.epoch_losses.back());
    }
    return out;
}

double head_accuracy(const std::vector<LabeledGraph>& pages, const GcnModel& m) {
    std::size_t correct = 0, total = 0;
    for (const auto& p : pages) {
        const Matrix logits = gcn_forward(p.graph, m).logits;
        for (Eigen::Index i = 0; i < logits.rows(); ++i) {
            Eigen::Index arg;
            logits.row(i).maxCoeff(&arg);
            correct += arg == p.labels[static_cast<std::size_t>(i)];
            ++total;
        }
    }
    return total ? static_cast<double>(correct) / static_cast<double>(total) : 0.0;
}

Checkpoint to_checkpoint(const GcnModel& m, const nlohmann::json& meta) {
    Checkpoint c;
    c.type = "gcn";
    c.meta = meta;
    c.meta["kind"] = graphs::to_string(m.kind);
    c.add("w1", m.w1);
    c.add("w2", m.w2);
    if (m.encoder) {
        c.add("lstm.fwd.w_ih", m.encoder->fwd().w_ih);
        c.add("lstm.fwd.w_hh", m.encoder->fwd().w_hh);
        c.add("lstm.fwd.bias", m.encoder->fwd().bias);
        c.add("lstm.bwd.w_ih", m.encoder->bwd().w_ih);
        c.add("lstm.bwd.w_hh", m.encoder->bwd().w_hh);
        c.add("lstm.bwd.bias", m.encoder->bwd().bias);
    }
    return c;
}

GcnModel gcn_from_checkpoint(const Checkpoint& c) {
    if (c.type != "gcn") throw DataError("expected a gcn checkpoint, got '" + c.type + "'");
    GcnModel m;
    m.kind = graphs::aspect_kind_from_string(c.meta.at("kind").get<std::string>());
    m.w1 = c.get("w1");
    m.w2 = c.get("w2");
    if (graphs::is_syntactic(m.kind)) {
        encoding::BiLstm lstm;
        lstm.fwd() = {c.get("lstm.fwd.w_ih"), c.get("lstm.fwd.w_hh"), c.get("lstm.fwd.bias")};
        lstm.bwd() = {c.get("lstm.bwd.w_ih"), c.get("lstm.bwd.w_hh"), c.get("lstm.bwd.bias")};
        m.encoder = std::move(lstm);
    }
    return m;
}

}  // namespace docgcn::gcn
